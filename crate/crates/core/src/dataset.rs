//! `mobo-dataset/1` files and synthetic benchmark tasks.
//!
//! A dataset is UTF-8 JSON Lines. The first line is the header object, every
//! following non-blank line is one molecule:
//!
//! ```text
//! {"format":"mobo-dataset/1","task":"demo","objective_names":["a","b"],"n_objectives":2,"n_records":1}
//! {"id":"m1","smiles":"CCO","fingerprint":{"17":2,"4242":1},"objectives":[0.5,0.25]}
//! ```
//!
//! Fingerprint keys are decimal feature ids, values positive counts. Header
//! fields beyond the required ones are preserved as `extra`.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::ser::SerializeMap;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::engine::{CandidatePool, Molecule};
use crate::error::{Error, Result};
use crate::fingerprint::{minmax_kernel, CountFingerprint};
use crate::pareto::ObjectiveVector;
use crate::rng::{self, StreamTag};

pub const FORMAT_VERSION: &str = "mobo-dataset/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetHeader {
    pub format: String,
    pub task: String,
    pub objective_names: Vec<String>,
    pub n_objectives: usize,
    pub n_records: usize,
    #[serde(flatten)]
    pub extra: Map<String, Value>,
}

impl DatasetHeader {
    pub fn new(task: impl Into<String>, objective_names: Vec<String>, n_records: usize) -> Self {
        DatasetHeader {
            format: FORMAT_VERSION.to_string(),
            task: task.into(),
            n_objectives: objective_names.len(),
            objective_names,
            n_records,
            extra: Map::new(),
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRecord {
    id: String,
    #[serde(default)]
    smiles: Option<String>,
    fingerprint: Map<String, Value>,
    objectives: Vec<f64>,
}

#[derive(Serialize)]
struct RecordOut<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    smiles: Option<&'a str>,
    fingerprint: FingerprintOut<'a>,
    objectives: &'a [f64],
}

/// Serializes features in numeric id order with string keys.
struct FingerprintOut<'a>(&'a CountFingerprint);

impl Serialize for FingerprintOut<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = s.serialize_map(Some(self.0.len()))?;
        for (id, count) in self.0.iter() {
            map.serialize_entry(&id.to_string(), &count)?;
        }
        map.end()
    }
}

pub fn fingerprint_to_json(fp: &CountFingerprint) -> Value {
    serde_json::to_value(FingerprintOut(fp)).expect("fingerprint serializes")
}

fn parse_fingerprint(raw: &Map<String, Value>) -> std::result::Result<CountFingerprint, String> {
    if raw.is_empty() {
        return Err("fingerprint is empty".into());
    }
    let mut counts = Vec::with_capacity(raw.len());
    for (key, value) in raw {
        if key.is_empty() || !key.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("feature id '{key}' is not a decimal integer"));
        }
        let id: u64 = key
            .parse()
            .map_err(|_| format!("feature id '{key}' does not fit in 64 bits"))?;
        let count = value
            .as_u64()
            .filter(|&c| c >= 1 && c <= u32::MAX as u64)
            .ok_or_else(|| format!("count for feature {key} must be a positive integer, got {value}"))?;
        counts.push((id, count as u32));
    }
    CountFingerprint::from_counts(counts).map_err(|e| e.to_string())
}

fn check_header(header: &DatasetHeader, path: &Path) -> Result<()> {
    let bad = |field: &str, reason: String| Error::Validation {
        path: path.to_path_buf(),
        line: 1,
        id: "header".into(),
        field: field.into(),
        reason,
    };
    if header.format != FORMAT_VERSION {
        return Err(bad("format", format!("expected '{FORMAT_VERSION}', got '{}'", header.format)));
    }
    if header.n_objectives < 2 {
        return Err(bad("n_objectives", format!("need at least 2 objectives, got {}", header.n_objectives)));
    }
    if header.objective_names.len() != header.n_objectives {
        return Err(bad(
            "objective_names",
            format!("{} names for {} objectives", header.objective_names.len(), header.n_objectives),
        ));
    }
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = header.objective_names.iter().find(|n| !seen.insert(n.as_str())) {
        return Err(bad("objective_names", format!("duplicate objective name '{dup}'")));
    }
    Ok(())
}

/// Reads and validates a dataset from any reader; `path` labels diagnostics.
pub fn read_dataset<R: BufRead>(reader: R, path: &Path) -> Result<(DatasetHeader, CandidatePool)> {
    let parse_err = |line: usize, column: usize, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        column,
        reason,
    };
    let mut header: Option<DatasetHeader> = None;
    let mut molecules = Vec::new();
    let mut first_seen: HashMap<String, usize> = HashMap::new();
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let Some(h) = &header else {
            let h: DatasetHeader = serde_json::from_str(&line)
                .map_err(|e| parse_err(lineno, e.column(), format!("header: {e}")))?;
            check_header(&h, path)?;
            header = Some(h);
            continue;
        };
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| parse_err(lineno, e.column(), e.to_string()))?;
        let bad = |field: &str, reason: String| Error::Validation {
            path: path.to_path_buf(),
            line: lineno,
            id: raw.id.clone(),
            field: field.into(),
            reason,
        };
        if raw.id.is_empty() {
            return Err(bad("id", "id is empty".into()));
        }
        if let Some(prev) = first_seen.get(&raw.id) {
            return Err(bad("id", format!("duplicate id, first defined on line {prev}")));
        }
        if raw.objectives.len() != h.n_objectives {
            return Err(bad(
                "objectives",
                format!("expected {} values, got {}", h.n_objectives, raw.objectives.len()),
            ));
        }
        if let Some((j, v)) = raw
            .objectives
            .iter()
            .enumerate()
            .find(|(_, v)| !(0.0..=1.0).contains(*v))
        {
            return Err(bad(
                "objectives",
                format!("value {v} for '{}' is outside [0, 1]", h.objective_names[j]),
            ));
        }
        let fingerprint = parse_fingerprint(&raw.fingerprint).map_err(|r| bad("fingerprint", r))?;
        first_seen.insert(raw.id.clone(), lineno);
        molecules.push(Molecule {
            id: raw.id,
            smiles: raw.smiles,
            fingerprint,
            objectives: ObjectiveVector(raw.objectives),
        });
    }
    let header = header.ok_or_else(|| parse_err(1, 1, "missing header line".into()))?;
    if header.n_records != molecules.len() {
        return Err(Error::Validation {
            path: path.to_path_buf(),
            line: 1,
            id: "header".into(),
            field: "n_records".into(),
            reason: format!("header declares {} records, file has {}", header.n_records, molecules.len()),
        });
    }
    if molecules.is_empty() {
        return Err(parse_err(1, 1, "dataset has no records".into()));
    }
    let pool = CandidatePool::new(molecules)?;
    Ok((header, pool))
}

pub fn load_dataset(path: impl AsRef<Path>) -> Result<(DatasetHeader, CandidatePool)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_dataset(BufReader::new(file), path)
}

/// Writes the header (with `n_records` and `n_objectives` taken from the
/// pool) followed by one line per molecule.
pub fn write_dataset_to<W: Write>(mut w: W, header: &DatasetHeader, pool: &CandidatePool) -> std::io::Result<()> {
    let mut header = header.clone();
    header.n_records = pool.len();
    header.n_objectives = pool.dim();
    serde_json::to_writer(&mut w, &header)?;
    w.write_all(b"\n")?;
    for m in pool.molecules() {
        let rec = RecordOut {
            id: &m.id,
            smiles: m.smiles.as_deref(),
            fingerprint: FingerprintOut(&m.fingerprint),
            objectives: &m.objectives,
        };
        serde_json::to_writer(&mut w, &rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_dataset(path: impl AsRef<Path>, header: &DatasetHeader, pool: &CandidatePool) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_dataset_to(BufWriter::new(file), header, pool).map_err(|e| Error::io(path, e))
}

/// Parameters of the synthetic generator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    /// Size of the feature-id universe.
    pub n_features: usize,
    /// Fraction of the universe switched on in an anchor.
    pub density: f64,
}

impl SyntheticSpec {
    pub fn new(seed: u64, n: usize, d: usize) -> Self {
        SyntheticSpec {
            seed,
            n,
            d,
            n_features: 2048,
            density: 0.02,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticTask {
    pub header: DatasetHeader,
    pub pool: CandidatePool,
    pub anchors: Vec<CountFingerprint>,
}

const MAX_COUNT: u32 = 4;

fn random_fingerprint<R: Rng>(rng: &mut R, universe: u64, density: f64) -> CountFingerprint {
    let mut feats = Vec::new();
    for f in 0..universe {
        if rng.random_bool(density) {
            feats.push((f, rng.random_range(1..=MAX_COUNT)));
        }
    }
    if feats.is_empty() {
        feats.push((rng.random_range(0..universe), 1));
    }
    CountFingerprint::from_counts(feats).expect("distinct features")
}

/// A random task whose objective `j` is MinMax similarity to anchor `j`.
///
/// The anchors share a core scaffold plus an anchor-specific part. Each
/// candidate draws a relatedness `r` (mostly small) and a Dirichlet blend
/// `w` over anchors: it keeps core features with probability `r`, features
/// specific to anchor `j` with probability `r * sqrt(w_j)` (counts
/// occasionally jittered by ±1), and picks up unrelated background
/// features. Relatedness lifts every objective at once while the blend
/// trades them off, so good candidates are rare and the front is small.
pub fn generate_synthetic(spec: SyntheticSpec) -> Result<SyntheticTask> {
    let SyntheticSpec {
        seed,
        n,
        d,
        n_features,
        density,
    } = spec;
    if n == 0 {
        return Err(Error::InvalidConfig("synthetic task needs n >= 1".into()));
    }
    if d < 2 {
        return Err(Error::InvalidConfig("synthetic task needs d >= 2".into()));
    }
    if n_features == 0 {
        return Err(Error::InvalidConfig("synthetic task needs n_features >= 1".into()));
    }
    if !(density > 0.0 && density <= 1.0) {
        return Err(Error::InvalidConfig(format!("density {density} not in (0, 1]")));
    }
    let universe = n_features as u64;
    let mut rng = rng::stream(seed, StreamTag::Synthetic);
    let core = random_fingerprint(&mut rng, universe, density);
    let specific: Vec<CountFingerprint> = (0..d)
        .map(|_| random_fingerprint(&mut rng, universe, density))
        .collect();
    let anchors: Vec<CountFingerprint> = specific
        .iter()
        .map(|s| {
            let mut feats = core.to_map();
            for (f, c) in s.iter() {
                feats.entry(f).or_insert(c);
            }
            CountFingerprint::from_counts(feats).expect("distinct features")
        })
        .collect();
    // Symmetric Dirichlet(0.3) via normalized Gamma draws.
    let shape = Gamma::new(0.3, 1.0).expect("valid gamma");
    let mut molecules = Vec::with_capacity(n);
    for i in 0..n {
        let r = rng.random::<f64>().powi(2);
        let mut w: Vec<f64> = (0..d).map(|_| shape.sample(&mut rng)).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
        } else {
            w.fill(1.0 / d as f64);
        }
        let mut feats: std::collections::BTreeMap<u64, u32> = Default::default();
        let parts = std::iter::once((&core, r))
            .chain(specific.iter().zip(w.iter().map(|wj| r * wj.sqrt())));
        for (part, keep) in parts {
            for (f, c) in part.iter() {
                if rng.random_bool(keep.clamp(0.0, 1.0)) {
                    let jitter = if rng.random_bool(0.3) {
                        rng.random_range(-1i64..=1)
                    } else {
                        0
                    };
                    let count = (c as i64 + jitter).clamp(1, MAX_COUNT as i64) as u32;
                    let slot = feats.entry(f).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
        }
        let background = density * (1.0 - r);
        for f in 0..universe {
            if rng.random_bool(background) {
                feats.entry(f).or_insert_with(|| rng.random_range(1..=MAX_COUNT));
            }
        }
        if feats.is_empty() {
            feats.insert(rng.random_range(0..universe), 1);
        }
        let fingerprint = CountFingerprint::from_counts(feats).expect("distinct features");
        let objectives = anchors
            .iter()
            .map(|a| minmax_kernel(&fingerprint, a))
            .collect();
        molecules.push(Molecule {
            id: format!("syn-{i:06}"),
            smiles: None,
            fingerprint,
            objectives: ObjectiveVector(objectives),
        });
    }
    let names = (1..=d).map(|j| format!("sim_anchor_{j}")).collect();
    let mut header = DatasetHeader::new(format!("synthetic-s{seed}-n{n}-d{d}"), names, n);
    header.extra.insert(
        "generator".into(),
        serde_json::to_value(spec).expect("spec serializes"),
    );
    header.extra.insert(
        "anchors".into(),
        Value::Array(anchors.iter().map(fingerprint_to_json).collect()),
    );
    let pool = CandidatePool::new(molecules)?;
    Ok(SyntheticTask {
        header,
        pool,
        anchors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const HEADER: &str = r#"{"format":"mobo-dataset/1","task":"t","objective_names":["a","b"],"n_objectives":2,"n_records":3}"#;

    fn parse(text: &str) -> Result<(DatasetHeader, CandidatePool)> {
        read_dataset(text.as_bytes(), Path::new("mem.jsonl"))
    }

    fn three(extra_line: &str) -> String {
        format!(
            "{HEADER}\n{}\n{}\n{}\n",
            r#"{"id":"a","smiles":"C","fingerprint":{"1":2,"30":1},"objectives":[0.1,0.9]}"#,
            r#"{"id":"b","fingerprint":{"2":1},"objectives":[0.5,0.5]}"#,
            extra_line
        )
    }

    #[test]
    fn well_formed_file_loads() {
        let (h, pool) = parse(&three(r#"{"id":"c","fingerprint":{"9":3},"objectives":[1,0]}"#)).unwrap();
        assert_eq!(h.task, "t");
        assert_eq!(pool.len(), 3);
        assert_eq!(pool.get(0).smiles.as_deref(), Some("C"));
        assert_eq!(pool.get(0).fingerprint.get(30), 1);
        assert_eq!(pool.get(2).objectives.0, vec![1.0, 0.0]);
    }

    #[test]
    fn duplicate_id_names_its_line() {
        let mut text = three(r#"{"id":"c","fingerprint":{"9":3},"objectives":[1,0]}"#);
        text = text.replace("\"n_records\":3", "\"n_records\":4");
        text.push_str("{\"id\":\"b\",\"fingerprint\":{\"2\":1},\"objectives\":[0.5,0.5]}\n");
        match parse(&text).unwrap_err() {
            Error::Validation { line, id, field, .. } => {
                assert_eq!((line, id.as_str(), field.as_str()), (5, "b", "id"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn out_of_range_objective_rejected() {
        let err = parse(&three(r#"{"id":"c","fingerprint":{"9":3},"objectives":[1.2,0]}"#)).unwrap_err();
        assert!(matches!(err, Error::Validation { line: 4, ref field, .. } if field == "objectives"));
        assert!(err.to_string().contains("1.2"));
    }

    #[test]
    fn malformed_counts_rejected() {
        for fp in [r#"{"9":0}"#, r#"{"9":-1}"#, r#"{"9":1.5}"#, r#"{"x9":1}"#, r#"{"9":"2"}"#, "{}"] {
            let line = format!(r#"{{"id":"c","fingerprint":{fp},"objectives":[1,0]}}"#);
            let err = parse(&three(&line)).unwrap_err();
            assert!(
                matches!(err, Error::Validation { line: 4, ref field, .. } if field == "fingerprint"),
                "{fp}: {err}"
            );
        }
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse(&three(r#"{"id":"c","fingerprint":{"9":3},"objectives":[1,0]"#)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, column, .. } if column > 0));
        let err = parse(&three(r#"{"id":"c","fingerprint":{"9":3},"objectives":[1,0],"extra":1}"#)).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn header_checks() {
        let ok = r#"{"id":"c","fingerprint":{"9":3},"objectives":[1,0]}"#;
        let bad_count = three(ok).replace("\"n_records\":3", "\"n_records\":2");
        assert!(matches!(parse(&bad_count).unwrap_err(), Error::Validation { ref field, .. } if field == "n_records"));
        let dup_names = three(ok).replace(r#"["a","b"]"#, r#"["a","a"]"#);
        assert!(parse(&dup_names).is_err());
        let one_obj = format!(
            "{}\n{}\n",
            r#"{"format":"mobo-dataset/1","task":"t","objective_names":["a"],"n_objectives":1,"n_records":1}"#,
            r#"{"id":"c","fingerprint":{"9":3},"objectives":[1]}"#
        );
        assert!(parse(&one_obj).is_err());
        let wrong_format = three(ok).replace("mobo-dataset/1", "mobo-dataset/2");
        assert!(parse(&wrong_format).is_err());
        assert!(parse("").is_err());
    }

    #[test]
    fn header_extras_survive() {
        let text = three(r#"{"id":"c","fingerprint":{"9":3},"objectives":[1,0]}"#)
            .replace("\"task\":\"t\"", "\"task\":\"t\",\"toolkit\":\"rdkit 2024.03\"");
        let (h, _) = parse(&text).unwrap();
        assert_eq!(h.extra["toolkit"], "rdkit 2024.03");
    }

    #[test]
    fn fingerprint_keys_written_in_numeric_order() {
        let fp = CountFingerprint::from_counts([(10, 1), (9, 2), (100, 3)]).unwrap();
        assert_eq!(
            serde_json::to_string(&FingerprintOut(&fp)).unwrap(),
            r#"{"9":2,"10":1,"100":3}"#
        );
    }

    #[test]
    fn synthetic_round_trip_and_determinism() {
        let spec = SyntheticSpec::new(3, 60, 3);
        let task = generate_synthetic(spec).unwrap();
        let mut a = Vec::new();
        write_dataset_to(&mut a, &task.header, &task.pool).unwrap();
        let mut b = Vec::new();
        let again = generate_synthetic(spec).unwrap();
        write_dataset_to(&mut b, &again.header, &again.pool).unwrap();
        assert_eq!(a, b);

        let (h, pool) = read_dataset(a.as_slice(), Path::new("syn")).unwrap();
        assert_eq!(h, task.header);
        assert_eq!(pool.molecules(), task.pool.molecules());
        let mut c = Vec::new();
        write_dataset_to(&mut c, &h, &pool).unwrap();
        assert_eq!(a, c);
    }

    #[test]
    fn synthetic_objectives_are_anchor_similarities() {
        let task = generate_synthetic(SyntheticSpec::new(11, 200, 3)).unwrap();
        for a in &task.anchors {
            assert_eq!(minmax_kernel(a, a), 1.0);
        }
        for m in task.pool.molecules() {
            assert!(m.objectives.iter().all(|v| (0.0..=1.0).contains(v)));
            for (j, a) in task.anchors.iter().enumerate() {
                assert_eq!(m.objectives[j], minmax_kernel(&m.fingerprint, a));
            }
        }
        // The objectives conflict: the front holds more than one point.
        let entries: Vec<_> = task
            .pool
            .molecules()
            .iter()
            .enumerate()
            .map(|(i, m)| (i, m.objectives.clone()))
            .collect();
        assert!(crate::pareto::non_dominated_filter(&entries).len() > 1);
        let other = generate_synthetic(SyntheticSpec::new(12, 200, 3)).unwrap();
        assert_ne!(other.pool.molecules(), task.pool.molecules());
    }

    #[test]
    fn synthetic_rejects_bad_parameters() {
        assert!(generate_synthetic(SyntheticSpec::new(1, 0, 3)).is_err());
        assert!(generate_synthetic(SyntheticSpec::new(1, 5, 1)).is_err());
        let mut s = SyntheticSpec::new(1, 5, 2);
        s.density = 0.0;
        assert!(generate_synthetic(s).is_err());
    }
}
