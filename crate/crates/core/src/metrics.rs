//! Run quality metrics: hypervolume curves, the R2 indicator, #Circles
//! chemical diversity and two-sample effect sizes.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fingerprint::{CountFingerprint, DistanceKind};
use crate::pareto::{hypervolume_exact, ObjectiveVector, ParetoFront, ReferencePoint};

/// Default #Circles thresholds, 0.50 to 0.90 in steps of 0.05.
pub fn default_circle_thresholds() -> Vec<f64> {
    (0..=8).map(|k| (50 + 5 * k) as f64 / 100.0).collect()
}

/// Reference directions on the simplex plus the utopian point.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionSet {
    directions: Vec<Vec<f64>>,
    utopian: ObjectiveVector,
}

impl DirectionSet {
    pub fn new(directions: Vec<Vec<f64>>, utopian: ObjectiveVector) -> Result<Self> {
        if directions.is_empty() {
            return Err(Error::InvalidInput("direction set must not be empty".into()));
        }
        for v in &directions {
            check_dim(utopian.len(), v.len())?;
            let sum: f64 = v.iter().sum();
            if v.iter().any(|&x| x < 0.0) || (sum - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("{v:?} is not on the simplex")));
            }
        }
        Ok(DirectionSet {
            directions,
            utopian,
        })
    }

    pub fn directions(&self) -> &[Vec<f64>] {
        &self.directions
    }

    pub fn utopian(&self) -> &ObjectiveVector {
        &self.utopian
    }

    pub fn with_utopian(self, utopian: ObjectiveVector) -> Result<Self> {
        DirectionSet::new(self.directions, utopian)
    }
}

/// Simplex-lattice directions `{k/H : Σk = H}` with utopian point `1`.
///
/// There are `C(H+d−1, d−1)` of them, enumerated with the leading
/// coordinate ascending.
pub fn generate_directions(d: usize, granularity: usize) -> Result<DirectionSet> {
    if d < 2 || granularity == 0 {
        return Err(Error::InvalidInput(format!(
            "directions need d >= 2 and H >= 1 (got d={d}, H={granularity})"
        )));
    }
    fn fill(prefix: &mut Vec<usize>, left: usize, d: usize, h: usize, out: &mut Vec<Vec<f64>>) {
        if prefix.len() == d - 1 {
            out.push(
                prefix
                    .iter()
                    .chain(std::iter::once(&left))
                    .map(|&k| k as f64 / h as f64)
                    .collect(),
            );
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            fill(prefix, left - k, d, h, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    fill(&mut Vec::with_capacity(d), granularity, d, granularity, &mut out);
    DirectionSet::new(out, ObjectiveVector(vec![1.0; d]))
}

/// Mean over directions of the best weighted Chebyshev distance
/// `max_i v_i·|u_i − s_i|` to the utopian point. Lower is better.
pub fn r2_indicator<'a, I>(solutions: I, dirs: &DirectionSet) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let u = dirs.utopian();
    let sols: Vec<&[f64]> = solutions.into_iter().collect();
    if sols.is_empty() {
        return Err(Error::InvalidInput("R2 needs at least one solution".into()));
    }
    for s in &sols {
        check_dim(u.len(), s.len())?;
    }
    let total: f64 = dirs
        .directions()
        .iter()
        .map(|v| {
            sols.iter()
                .map(|s| {
                    v.iter()
                        .zip(u.iter().zip(s.iter()))
                        .map(|(w, (ui, si))| w * (ui - si).abs())
                        .fold(0.0, f64::max)
                })
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    Ok(total / dirs.directions().len() as f64)
}

/// How #Circles counts mutually dissimilar representatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CirclesMethod {
    /// Largest subset whose pairwise distances all exceed the threshold.
    #[default]
    Exact,
    /// First-fit packing in input order.
    Greedy,
}

fn check_threshold(threshold: f64) -> Result<()> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "#Circles threshold must be in (0, 1], got {threshold}"
        )));
    }
    Ok(())
}

/// Greedy packing in input order: a fingerprint is kept when its distance to
/// every kept one exceeds `threshold`.
pub fn n_circles_greedy<'a, I>(fps: I, threshold: f64, distance: DistanceKind) -> Result<usize>
where
    I: IntoIterator<Item = &'a CountFingerprint>,
{
    check_threshold(threshold)?;
    let mut centres: Vec<&CountFingerprint> = Vec::new();
    for fp in fps {
        if centres.iter().all(|c| distance.eval(c, fp) > threshold) {
            centres.push(fp);
        }
    }
    Ok(centres.len())
}

/// Size of the largest subset of `fps` whose pairwise distances all exceed
/// `threshold`. Independent of input order and non-increasing in the
/// threshold.
pub fn n_circles<'a, I>(fps: I, threshold: f64, distance: DistanceKind) -> Result<usize>
where
    I: IntoIterator<Item = &'a CountFingerprint>,
{
    check_threshold(threshold)?;
    let fps: Vec<&CountFingerprint> = fps.into_iter().collect();
    let n = fps.len();
    let mut far = vec![false; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let ok = distance.eval(fps[i], fps[j]) > threshold;
            far[i * n + j] = ok;
            far[j * n + i] = ok;
        }
    }
    Ok(max_clique(n, &far))
}

/// Same as [`n_circles`] with pairwise distances computed once for every
/// threshold.
pub fn n_circles_sweep(
    fps: &[&CountFingerprint],
    thresholds: &[f64],
    distance: DistanceKind,
    method: CirclesMethod,
) -> Result<Vec<usize>> {
    for &t in thresholds {
        check_threshold(t)?;
    }
    let n = fps.len();
    let mut dist = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let v = distance.eval(fps[i], fps[j]);
            dist[i * n + j] = v;
            dist[j * n + i] = v;
        }
    }
    Ok(thresholds
        .iter()
        .map(|&t| match method {
            CirclesMethod::Exact => {
                let far: Vec<bool> = dist
                    .iter()
                    .enumerate()
                    .map(|(k, &v)| k / n != k % n && v > t)
                    .collect();
                max_clique(n, &far)
            }
            CirclesMethod::Greedy => {
                let mut kept: Vec<usize> = Vec::new();
                for i in 0..n {
                    if kept.iter().all(|&k| dist[k * n + i] > t) {
                        kept.push(i);
                    }
                }
                kept.len()
            }
        })
        .collect())
}

/// Maximum clique size of the graph with row-major adjacency `adj`, by
/// branch and bound with a greedy colouring bound.
fn max_clique(n: usize, adj: &[bool]) -> usize {
    fn colour_sort(cands: &[usize], n: usize, adj: &[bool]) -> (Vec<usize>, Vec<usize>) {
        let mut order = Vec::with_capacity(cands.len());
        let mut colours = Vec::with_capacity(cands.len());
        let mut left: Vec<usize> = cands.to_vec();
        let mut colour = 0;
        while !left.is_empty() {
            colour += 1;
            let mut class: Vec<usize> = Vec::new();
            left.retain(|&v| {
                if class.iter().all(|&u| !adj[u * n + v]) {
                    class.push(v);
                    false
                } else {
                    true
                }
            });
            for v in class {
                order.push(v);
                colours.push(colour);
            }
        }
        (order, colours)
    }

    fn expand(size: usize, cands: Vec<usize>, n: usize, adj: &[bool], best: &mut usize) {
        let (order, colours) = colour_sort(&cands, n, adj);
        for k in (0..order.len()).rev() {
            if size + colours[k] <= *best {
                return;
            }
            let v = order[k];
            let next: Vec<usize> = order[..k].iter().copied().filter(|&u| adj[v * n + u]).collect();
            if next.is_empty() {
                *best = (*best).max(size + 1);
            } else {
                expand(size + 1, next, n, adj, best);
            }
        }
    }

    let mut best = 0;
    expand(0, (0..n).collect(), n, adj, &mut best);
    best
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Bessel-corrected sample variance; 0 for fewer than two values.
pub fn sample_variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    sample_variance(xs).sqrt()
}

/// Mean difference over the pooled, Bessel-corrected standard deviation.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InvalidInput("Cohen's d needs at least two values per sample".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let pooled =
        ((na - 1.0) * sample_variance(a) + (nb - 1.0) * sample_variance(b)) / (na + nb - 2.0);
    if pooled == 0.0 {
        return Err(Error::Undefined("Cohen's d with zero pooled variance".into()));
    }
    Ok((mean(a) - mean(b)) / pooled.sqrt())
}

/// `(#{x > y} − #{x < y}) / (|a|·|b|)` over all cross pairs.
pub fn cliffs_delta(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("Cliff's delta needs non-empty samples".into()));
    }
    let mut net: i64 = 0;
    for x in a {
        for y in b {
            if x > y {
                net += 1;
            } else if x < y {
                net -= 1;
            }
        }
    }
    Ok(net as f64 / (a.len() * b.len()) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectSizeReport {
    /// `None` when undefined (fewer than two values or zero pooled variance).
    pub cohens_d: Option<f64>,
    pub cliffs_delta: f64,
}

impl EffectSizeReport {
    pub fn compare(a: &[f64], b: &[f64]) -> Result<Self> {
        Ok(EffectSizeReport {
            cohens_d: cohens_d(a, b).ok(),
            cliffs_delta: cliffs_delta(a, b)?,
        })
    }
}

/// Exact hypervolume of each round's front.
pub fn hvi_curve(round_fronts: &[ParetoFront], r: &ReferencePoint) -> Result<Vec<f64>> {
    round_fronts
        .iter()
        .map(|f| hypervolume_exact(f, r))
        .collect()
}
