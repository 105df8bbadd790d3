//! Sparse count fingerprints and the similarity kernels defined on them.
//!
//! Feature ids are opaque 64-bit hashes; only equality between ids matters.
//! All sums are accumulated in integers, so every kernel value is exactly
//! symmetric and independent of feature iteration order.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Similarity returned when both fingerprints are empty.
pub const EMPTY_SIMILARITY: f64 = 1.0;

/// Sparse feature-id → count map, stored sorted by feature id.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct CountFingerprint {
    features: Vec<(u64, u32)>,
}

impl CountFingerprint {
    /// Builds a fingerprint from `(feature, count)` pairs.
    ///
    /// Zero counts and repeated feature ids are rejected.
    pub fn from_counts<I>(counts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (u64, u32)>,
    {
        let mut features: Vec<(u64, u32)> = counts.into_iter().collect();
        features.sort_unstable_by_key(|&(id, _)| id);
        for w in features.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidFingerprint(format!(
                    "feature {} appears more than once",
                    w[0].0
                )));
            }
        }
        if let Some(&(id, _)) = features.iter().find(|&&(_, c)| c == 0) {
            return Err(Error::InvalidFingerprint(format!(
                "feature {id} has zero count"
            )));
        }
        Ok(CountFingerprint { features })
    }

    /// Binary fingerprint with count 1 on every listed feature.
    pub fn from_bits<I>(bits: I) -> Result<Self>
    where
        I: IntoIterator<Item = u64>,
    {
        Self::from_counts(bits.into_iter().map(|id| (id, 1)))
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u32)> + '_ {
        self.features.iter().copied()
    }

    pub fn get(&self, feature: u64) -> u32 {
        self.features
            .binary_search_by_key(&feature, |&(id, _)| id)
            .map(|i| self.features[i].1)
            .unwrap_or(0)
    }

    /// Same support with every count set to 1.
    pub fn binarized(&self) -> CountFingerprint {
        CountFingerprint {
            features: self.features.iter().map(|&(id, _)| (id, 1)).collect(),
        }
    }

    pub fn to_map(&self) -> BTreeMap<u64, u32> {
        self.features.iter().copied().collect()
    }
}

/// Walks the union of both supports, absent features counting as zero.
fn merge_fold<F>(a: &CountFingerprint, b: &CountFingerprint, mut f: F)
where
    F: FnMut(u64, u64),
{
    let (xs, ys) = (&a.features, &b.features);
    let (mut i, mut j) = (0, 0);
    while i < xs.len() && j < ys.len() {
        let (fa, ca) = xs[i];
        let (fb, cb) = ys[j];
        if fa == fb {
            f(ca as u64, cb as u64);
            i += 1;
            j += 1;
        } else if fa < fb {
            f(ca as u64, 0);
            i += 1;
        } else {
            f(0, cb as u64);
            j += 1;
        }
    }
    for &(_, c) in &xs[i..] {
        f(c as u64, 0);
    }
    for &(_, c) in &ys[j..] {
        f(0, c as u64);
    }
}

/// Σ min(a_i, b_i) / Σ max(a_i, b_i) over the union of features.
pub fn minmax_kernel(a: &CountFingerprint, b: &CountFingerprint) -> f64 {
    let (mut lo, mut hi) = (0u64, 0u64);
    merge_fold(a, b, |x, y| {
        lo += x.min(y);
        hi += x.max(y);
    });
    if hi == 0 {
        return EMPTY_SIMILARITY;
    }
    lo as f64 / hi as f64
}

/// x·x' / (‖x‖² + ‖x'‖² − x·x') with counts read as integer vectors.
pub fn tanimoto_kernel(a: &CountFingerprint, b: &CountFingerprint) -> f64 {
    let (mut dot, mut na, mut nb) = (0u64, 0u64, 0u64);
    merge_fold(a, b, |x, y| {
        dot += x * y;
        na += x * x;
        nb += y * y;
    });
    let denom = na + nb - dot;
    if denom == 0 {
        return EMPTY_SIMILARITY;
    }
    dot as f64 / denom as f64
}

/// Distance used for diversity counting: `1 − minmax_kernel`.
pub fn tanimoto_distance(a: &CountFingerprint, b: &CountFingerprint) -> f64 {
    1.0 - minmax_kernel(a, b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    MinMax,
    Tanimoto,
}

impl KernelKind {
    pub fn eval(self, a: &CountFingerprint, b: &CountFingerprint) -> f64 {
        match self {
            KernelKind::MinMax => minmax_kernel(a, b),
            KernelKind::Tanimoto => tanimoto_kernel(a, b),
        }
    }
}

/// Which dissimilarity the #Circles metric uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DistanceKind {
    /// 1 − MinMax on the raw counts.
    #[default]
    MinMax,
    /// 1 − Tanimoto on presence bits.
    BinaryTanimoto,
}

impl DistanceKind {
    pub fn eval(self, a: &CountFingerprint, b: &CountFingerprint) -> f64 {
        match self {
            DistanceKind::MinMax => tanimoto_distance(a, b),
            DistanceKind::BinaryTanimoto => 1.0 - tanimoto_kernel(&a.binarized(), &b.binarized()),
        }
    }
}

/// Dense row-major `amplitude · k(x_i, x_j)` matrix; only the upper
/// triangle is evaluated and mirrored, so the result is exactly symmetric.
pub fn kernel_matrix(points: &[CountFingerprint], kernel: KernelKind, amplitude: f64) -> Vec<f64> {
    let n = points.len();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = amplitude * kernel.eval(&points[i], &points[j]);
            out[i * n + j] = v;
            out[j * n + i] = v;
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fp(pairs: &[(u64, u32)]) -> CountFingerprint {
        CountFingerprint::from_counts(pairs.iter().copied()).unwrap()
    }

    #[test]
    fn minmax_examples() {
        let a = fp(&[(7, 2), (9, 1)]);
        assert_eq!(minmax_kernel(&a, &a), 1.0);
        assert_eq!(minmax_kernel(&fp(&[(1, 2)]), &fp(&[(2, 3)])), 0.0);
        let a = fp(&[(1, 2), (2, 1)]);
        let b = fp(&[(1, 1), (3, 3)]);
        assert_eq!(minmax_kernel(&a, &b), 1.0 / 6.0);
        assert_eq!(tanimoto_distance(&a, &b), 1.0 - 1.0 / 6.0);
    }

    #[test]
    fn tanimoto_examples() {
        let a = fp(&[(1, 1), (2, 1)]);
        assert_eq!(tanimoto_kernel(&a, &a), 1.0);
        assert_eq!(tanimoto_kernel(&a, &fp(&[(1, 1), (3, 1)])), 1.0 / 3.0);
        assert_eq!(tanimoto_kernel(&fp(&[(1, 2)]), &fp(&[(1, 1)])), 2.0 / 3.0);
    }

    #[test]
    fn empty_policy() {
        let e = CountFingerprint::default();
        assert_eq!(minmax_kernel(&e, &e), EMPTY_SIMILARITY);
        assert_eq!(tanimoto_kernel(&e, &e), EMPTY_SIMILARITY);
        assert_eq!(minmax_kernel(&e, &fp(&[(1, 1)])), 0.0);
    }

    #[test]
    fn rejects_zero_and_duplicate_counts() {
        assert!(CountFingerprint::from_counts([(1, 0)]).is_err());
        assert!(CountFingerprint::from_counts([(1, 1), (1, 2)]).is_err());
    }

    #[test]
    fn distance_identity_and_disjoint() {
        let a = fp(&[(3, 4), (5, 1)]);
        assert_eq!(tanimoto_distance(&a, &a), 0.0);
        assert_eq!(tanimoto_distance(&a, &fp(&[(8, 1)])), 1.0);
        assert_eq!(DistanceKind::BinaryTanimoto.eval(&a, &fp(&[(3, 1)])), 0.5);
    }

    #[test]
    fn kernel_matrix_small_cases() {
        let a = fp(&[(1, 1)]);
        let b = fp(&[(2, 1)]);
        assert_eq!(kernel_matrix(&[a.clone()], KernelKind::MinMax, 2.5), vec![2.5]);
        assert_eq!(
            kernel_matrix(&[a.clone(), a.clone()], KernelKind::MinMax, 1.0),
            vec![1.0, 1.0, 1.0, 1.0]
        );
        assert_eq!(
            kernel_matrix(&[a, b], KernelKind::MinMax, 1.0),
            vec![1.0, 0.0, 0.0, 1.0]
        );
    }

    fn arb_fp() -> impl Strategy<Value = CountFingerprint> {
        prop::collection::btree_map(0u64..40, 1u32..6, 1..20)
            .prop_map(|m| CountFingerprint::from_counts(m).unwrap())
    }

    fn arb_bits() -> impl Strategy<Value = CountFingerprint> {
        prop::collection::btree_set(0u64..40, 1..20)
            .prop_map(|s| CountFingerprint::from_bits(s).unwrap())
    }

    proptest! {
        #[test]
        fn kernels_symmetric_and_bounded(a in arb_fp(), b in arb_fp()) {
            for k in [KernelKind::MinMax, KernelKind::Tanimoto] {
                let ab = k.eval(&a, &b);
                prop_assert_eq!(ab, k.eval(&b, &a));
                prop_assert!((0.0..=1.0).contains(&ab));
            }
            prop_assert_eq!(tanimoto_distance(&a, &a), 0.0);
            prop_assert_eq!(tanimoto_distance(&a, &b), tanimoto_distance(&b, &a));
        }

        #[test]
        fn binary_counts_agree(a in arb_bits(), b in arb_bits()) {
            prop_assert_eq!(tanimoto_kernel(&a, &b), minmax_kernel(&a, &b));
        }

        #[test]
        fn insertion_order_irrelevant(m in prop::collection::btree_map(0u64..1000, 1u32..9, 1..30), b in arb_fp()) {
            let fwd = CountFingerprint::from_counts(m.clone()).unwrap();
            let rev = CountFingerprint::from_counts(m.into_iter().rev()).unwrap();
            prop_assert_eq!(minmax_kernel(&fwd, &b), minmax_kernel(&rev, &b));
        }
    }
}
