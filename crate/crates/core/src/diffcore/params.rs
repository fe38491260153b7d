use std::collections::HashMap;

use super::Tensor2;

/// Ordered collection of named tensors.
///
/// Iteration order is insertion order, which keeps optimizer updates and
/// serialization deterministic.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamSet {
    entries: Vec<(String, Tensor2)>,
    index: HashMap<String, usize>,
}

impl ParamSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces `name`.
    pub fn insert(&mut self, name: impl Into<String>, value: Tensor2) {
        let name = name.into();
        match self.index.get(&name) {
            Some(&i) => self.entries[i].1 = value,
            None => {
                self.index.insert(name.clone(), self.entries.len());
                self.entries.push((name, value));
            }
        }
    }

    pub fn get(&self, name: &str) -> Option<&Tensor2> {
        self.index.get(name).map(|&i| &self.entries[i].1)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor2> {
        self.index.get(name).map(|&i| &mut self.entries[i].1)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar values.
    pub fn numel(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor2)> {
        self.entries.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor2)> {
        self.entries.iter_mut().map(|(n, t)| (n.as_str(), t))
    }
}

/// Name → tensor lookup used to bind graph leaves at evaluation time.
#[derive(Default)]
pub struct Bindings<'a> {
    sets: Vec<&'a ParamSet>,
    named: HashMap<String, &'a Tensor2>,
}

impl<'a> Bindings<'a> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_set(mut self, set: &'a ParamSet) -> Self {
        self.sets.push(set);
        self
    }

    pub fn with(mut self, name: impl Into<String>, value: &'a Tensor2) -> Self {
        self.named.insert(name.into(), value);
        self
    }

    pub fn bind(&mut self, name: impl Into<String>, value: &'a Tensor2) {
        self.named.insert(name.into(), value);
    }

    pub fn resolve(&self, name: &str) -> Option<&'a Tensor2> {
        self.named
            .get(name)
            .copied()
            .or_else(|| self.sets.iter().find_map(|s| s.get(name)))
    }
}
