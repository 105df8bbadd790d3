use std::fs;

use mobo::dataset::{
    generate_synthetic, load_dataset, read_dataset, write_dataset, write_dataset_to, DatasetHeader,
    SyntheticSpec,
};
use mobo::engine::{CandidatePool, Molecule};
use mobo::fingerprint::{minmax_kernel, CountFingerprint};
use mobo::pareto::ObjectiveVector;
use mobo::Error;
use proptest::prelude::*;
use tempfile::tempdir;

const HEADER: &str = r#"{"format":"mobo-dataset/1","task":"Fexofenadine MPO","objective_names":["similarity","tpsa","logp"],"n_objectives":3,"n_records":3}"#;

fn record(id: &str, objectives: &str) -> String {
    format!(r#"{{"id":"{id}","smiles":"CCO","fingerprint":{{"12":1,"8731":3}},"objectives":{objectives}}}"#)
}

#[test]
fn three_record_file_from_disk() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("pool.jsonl");
    let body = [
        HEADER.to_string(),
        record("a", "[0.1,0.2,0.3]"),
        record("b", "[0.4,0.5,0.6]"),
        record("c", "[1,0,0.75]"),
    ]
    .join("\n");
    fs::write(&path, body).unwrap();
    let (header, pool) = load_dataset(&path).unwrap();
    assert_eq!(header.objective_names, ["similarity", "tpsa", "logp"]);
    assert_eq!(pool.len(), 3);
    assert_eq!(pool.dim(), 3);
    assert_eq!(pool.index_of("c"), Some(2));
    assert_eq!(pool.get(1).fingerprint.get(8731), 3);
}

#[test]
fn duplicate_on_line_five_is_reported_with_path() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("dup.jsonl");
    let body = [
        HEADER.replace("\"n_records\":3", "\"n_records\":4"),
        record("a", "[0.1,0.2,0.3]"),
        record("b", "[0.4,0.5,0.6]"),
        record("c", "[0.4,0.5,0.6]"),
        record("a", "[0.4,0.5,0.6]"),
    ]
    .join("\n");
    fs::write(&path, body).unwrap();
    let err = load_dataset(&path).unwrap_err();
    assert!(matches!(err, Error::Validation { line: 5, .. }), "{err}");
    let msg = err.to_string();
    assert!(msg.contains("dup.jsonl:5"), "{msg}");
    assert!(msg.contains("first defined on line 2"), "{msg}");
}

#[test]
fn range_violation_names_value() {
    let body = [
        HEADER.to_string(),
        record("a", "[0.1,0.2,0.3]"),
        record("b", "[1.2,0.5,0.6]"),
        record("c", "[0.4,0.5,0.6]"),
    ]
    .join("\n");
    let err = read_dataset(body.as_bytes(), "mem".as_ref()).unwrap_err();
    assert!(err.to_string().contains("1.2"));
    assert!(err.to_string().contains("outside [0, 1]"));
}

#[test]
fn missing_file_is_an_io_error() {
    let dir = tempdir().unwrap();
    let err = load_dataset(dir.path().join("nope.jsonl")).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("nope.jsonl"));
}

#[test]
fn synthetic_file_is_byte_identical_per_seed() {
    let dir = tempdir().unwrap();
    let spec = SyntheticSpec::new(5, 250, 3);
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    for p in [&a, &b] {
        let task = generate_synthetic(spec).unwrap();
        write_dataset(p, &task.header, &task.pool).unwrap();
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (header, pool) = load_dataset(&a).unwrap();
    assert_eq!(header.n_records, 250);
    assert_eq!(pool.dim(), 3);
}

#[test]
fn anchor_copy_scores_one_on_its_objective() {
    let task = generate_synthetic(SyntheticSpec::new(9, 20, 2)).unwrap();
    for (j, anchor) in task.anchors.iter().enumerate() {
        let objectives: Vec<f64> = task.anchors.iter().map(|a| minmax_kernel(anchor, a)).collect();
        assert_eq!(objectives[j], 1.0);
        assert!(objectives.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

fn arb_pool() -> impl Strategy<Value = CandidatePool> {
    let molecule = (
        prop::collection::btree_map(any::<u64>(), 1u32..=u32::MAX, 1..12),
        prop::collection::vec(0.0f64..=1.0, 3),
        prop::option::of("[A-Za-z0-9()=#\\[\\]@+-]{1,20}"),
    );
    prop::collection::vec(molecule, 1..20).prop_map(|ms| {
        let molecules = ms
            .into_iter()
            .enumerate()
            .map(|(i, (fp, obj, smiles))| Molecule {
                id: format!("mol-{i}"),
                smiles,
                fingerprint: CountFingerprint::from_counts(fp).unwrap(),
                objectives: ObjectiveVector(obj),
            })
            .collect();
        CandidatePool::new(molecules).unwrap()
    })
}

proptest! {
    #[test]
    fn write_then_load_is_identity(pool in arb_pool()) {
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let header = DatasetHeader::new("prop", names, pool.len());
        let mut bytes = Vec::new();
        write_dataset_to(&mut bytes, &header, &pool).unwrap();
        let (h, back) = read_dataset(bytes.as_slice(), "prop".as_ref()).unwrap();
        prop_assert_eq!(&h, &header);
        prop_assert_eq!(back.molecules(), pool.molecules());
        let mut again = Vec::new();
        write_dataset_to(&mut again, &h, &back).unwrap();
        prop_assert_eq!(again, bytes);
    }
}
