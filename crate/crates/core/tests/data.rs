use std::fs;
use std::path::Path;

use mvfusion::data::{batches, load_dataset, save_dataset, split, synth_gaussian, SplitSpec, SynthSpec};
use mvfusion::{Error, ErrorKind};
use proptest::prelude::*;
use tempfile::TempDir;

const META: &str = r#"{
  "name": "tiny",
  "n": 3,
  "classes": 2,
  "labels_file": "labels.csv",
  "views": [
    {"name": "a", "dim": 2, "file": "a.csv"},
    {"name": "b", "dim": 1, "file": "b.csv"}
  ]
}"#;

/// Writes a valid three-sample dataset, then overwrites (or deletes) one file.
fn corrupted(file: &str, contents: &str) -> Error {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(dir.join("meta.json"), META).unwrap();
    fs::write(dir.join("a.csv"), "1,2\n3,4\n5,6\n").unwrap();
    fs::write(dir.join("b.csv"), "0.5\n1.5\n2.5\n").unwrap();
    fs::write(dir.join("labels.csv"), "0\n1\n1\n").unwrap();
    assert!(load_dataset(dir).is_ok());
    if contents == "<delete>" {
        fs::remove_file(dir.join(file)).unwrap();
    } else {
        fs::write(dir.join(file), contents).unwrap();
    }
    load_dataset(dir).unwrap_err()
}

#[test]
fn missing_view_file() {
    let e = corrupted("b.csv", "<delete>");
    assert!(matches!(&e, Error::MissingFile(p) if p.ends_with("b.csv")), "{e}");
}

#[test]
fn missing_meta() {
    assert!(matches!(corrupted("meta.json", "<delete>"), Error::MissingFile(_)));
}

#[test]
fn short_view() {
    let e = corrupted("a.csv", "1,2\n3,4\n");
    assert!(matches!(e, Error::RowCountMismatch { expected: 3, found: 2, .. }), "{e}");
}

#[test]
fn ragged_row_names_the_line() {
    let e = corrupted("a.csv", "1,2\n3\n5,6\n");
    assert!(matches!(&e, Error::ColumnCountMismatch { line: 2, expected: 2, found: 1, .. }), "{e}");
}

#[test]
fn nan_entry_names_the_line() {
    let e = corrupted("b.csv", "0.5\n1.5\nNaN\n");
    assert!(matches!(&e, Error::NonFinite { line: 3, .. }), "{e}");
}

#[test]
fn infinite_entry() {
    assert!(matches!(corrupted("a.csv", "1,2\ninf,4\n5,6\n"), Error::NonFinite { line: 2, .. }));
}

#[test]
fn unparsable_number() {
    assert!(matches!(corrupted("a.csv", "1,2\n3,four\n5,6\n"), Error::Parse { line: 2, .. }));
}

#[test]
fn label_out_of_range() {
    let e = corrupted("labels.csv", "0\n2\n1\n");
    assert!(matches!(e, Error::LabelOutOfRange { line: 2, label: 2, classes: 2 }));
}

#[test]
fn negative_label() {
    assert!(matches!(corrupted("labels.csv", "0\n-1\n1\n"), Error::LabelOutOfRange { label: -1, .. }));
}

#[test]
fn label_count_mismatch() {
    assert!(matches!(corrupted("labels.csv", "0\n1\n"), Error::RowCountMismatch { found: 2, .. }));
}

#[test]
fn malformed_meta() {
    assert!(matches!(corrupted("meta.json", "{\"name\": \"x\""), Error::Meta(_)));
    assert!(matches!(corrupted("meta.json", &META.replace("\"n\"", "\"rows\"")), Error::Meta(_)));
}

#[test]
fn every_corruption_is_a_data_error() {
    for e in [
        corrupted("b.csv", "<delete>"),
        corrupted("a.csv", "1,2\n"),
        corrupted("a.csv", "1,2,3\n3,4\n5,6\n"),
        corrupted("labels.csv", "0\n1\nx\n"),
    ] {
        assert_eq!(e.kind(), ErrorKind::Data, "{e}");
    }
}

fn spec(seed: u64) -> SynthSpec {
    SynthSpec {
        classes: 3,
        per_class: 10,
        view_dims: vec![4, 7],
        view_noise: vec![0.25, 0.1],
        corruption: 0.2,
        seed,
    }
}

fn write(dir: &Path, seed: u64) -> Vec<(String, Vec<u8>)> {
    save_dataset(&synth_gaussian(&spec(seed)).unwrap(), dir).unwrap();
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn save_load_round_trip_is_exact() {
    let tmp = TempDir::new().unwrap();
    let ds = synth_gaussian(&spec(4)).unwrap();
    save_dataset(&ds, tmp.path()).unwrap();
    let back = load_dataset(tmp.path()).unwrap();
    assert_eq!(back.views(), ds.views());
    assert_eq!(back.labels(), ds.labels());
    assert_eq!(back.classes(), Some(3));
}

#[test]
fn synth_files_are_byte_identical_per_seed() {
    let tmp = TempDir::new().unwrap();
    let a = write(&tmp.path().join("a"), 9);
    let b = write(&tmp.path().join("b"), 9);
    let c = write(&tmp.path().join("c"), 10);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn synth_rejects_views_narrower_than_classes() {
    let mut s = spec(0);
    s.view_dims = vec![4, 2];
    assert!(matches!(synth_gaussian(&s), Err(Error::Config(_))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn split_is_a_stratified_partition(seed in 0u64..1000, per_class in 10usize..30) {
        let mut s = spec(seed);
        s.per_class = per_class;
        let ds = synth_gaussian(&s).unwrap();
        let parts = split(&ds, &SplitSpec { seed, ..SplitSpec::default() }).unwrap();
        let mut all: Vec<usize> = parts.indices.iter().flatten().copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..ds.len()).collect::<Vec<_>>());
        for part in [&parts.train, &parts.val, &parts.test] {
            let labels = part.labels().unwrap();
            for c in 0..3 {
                prop_assert!(labels.contains(&c));
            }
        }
    }

    #[test]
    fn batches_cover_each_row_at_most_once(n in 1usize..60, b in 2usize..20, seed in 0u64..100) {
        let mut s = spec(seed);
        s.per_class = n;
        let ds = synth_gaussian(&s).unwrap();
        let mut seen = vec![0usize; ds.len()];
        let mut count = 0;
        for batch in batches(&ds, b, true, seed).unwrap() {
            prop_assert_eq!(batch.views[0].rows(), b);
            for &i in &batch.indices {
                seen[i] += 1;
            }
            count += 1;
        }
        prop_assert_eq!(count, ds.len() / b);
        prop_assert!(seen.iter().all(|&s| s <= 1));
    }
}
