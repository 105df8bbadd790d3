//! Pareto dominance, non-dominated filtering and hypervolume.
//!
//! Everything here assumes maximization. Exact hypervolume covers one to
//! three objectives; [`hypervolume_mc`] handles any dimension and doubles as
//! a validation oracle.

use std::cmp::Ordering;
use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Objective values for one candidate, larger is better.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectiveVector(pub Vec<f64>);

impl Deref for ObjectiveVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for ObjectiveVector {
    fn from(v: Vec<f64>) -> Self {
        ObjectiveVector(v)
    }
}

/// Lower corner of the region measured by the hypervolume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferencePoint(pub Vec<f64>);

impl ReferencePoint {
    pub fn zeros(d: usize) -> Self {
        ReferencePoint(vec![0.0; d])
    }
}

impl Deref for ReferencePoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// Mutually non-dominated `(candidate id, objectives)` pairs.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParetoFront {
    entries: Vec<(usize, ObjectiveVector)>,
}

impl ParetoFront {
    pub fn entries(&self) -> &[(usize, ObjectiveVector)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.iter().map(|(id, _)| *id)
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.entries.iter().map(|(_, v)| v.0.as_slice())
    }

    /// Dimension of the entries, if any.
    pub fn dim(&self) -> Option<usize> {
        self.entries.first().map(|(_, v)| v.len())
    }
}

#[inline]
fn dominates_raw(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

/// `a` is no worse than `b` everywhere and strictly better somewhere.
pub fn dominates(a: &[f64], b: &[f64]) -> Result<bool> {
    check_dim(a.len(), b.len())?;
    Ok(dominates_raw(a, b))
}

/// Keeps every point that no other point dominates, in input order.
/// Equal objective vectors are all kept.
pub fn non_dominated_filter(points: &[(usize, ObjectiveVector)]) -> ParetoFront {
    // A dominator is lexicographically greater than what it dominates, so
    // in descending lexicographic order only earlier survivors need checking.
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&i, &j| lex_desc(&points[i].1, &points[j].1).then(i.cmp(&j)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let p = &points[i].1;
        if !kept.iter().any(|&k| dominates_raw(&points[k].1, p)) {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    ParetoFront {
        entries: kept.into_iter().map(|i| points[i].clone()).collect(),
    }
}

fn lex_desc(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match y.partial_cmp(x).unwrap_or(Ordering::Equal) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    Ordering::Equal
}

/// Non-dominated 2-d staircase kept sorted by x descending (y ascending),
/// tracking the area it dominates above a reference corner.
#[derive(Debug, Default, Clone)]
struct Staircase {
    steps: Vec<(f64, f64)>,
}

impl Staircase {
    fn clear(&mut self) {
        self.steps.clear();
    }

    /// Returns `true` if the point changed the staircase.
    fn insert(&mut self, x: f64, y: f64) -> bool {
        let i = self.steps.partition_point(|&(sx, _)| sx >= x);
        if i > 0 && self.steps[i - 1].1 >= y {
            return false;
        }
        let start = if i > 0 && self.steps[i - 1].0 == x { i - 1 } else { i };
        let end = i + self.steps[i..].partition_point(|&(_, sy)| sy <= y);
        self.steps.splice(start..end, std::iter::once((x, y)));
        true
    }

    fn area(&self, rx: f64, ry: f64) -> f64 {
        let mut prev = ry;
        let mut area = 0.0;
        for &(x, y) in &self.steps {
            area += (x - rx) * (y - prev);
            prev = y;
        }
        area
    }
}

/// Reusable buffers for the hypervolume sweeps.
#[derive(Debug, Default, Clone)]
pub struct HvScratch {
    stair: Staircase,
    points: Vec<f64>,
}

impl HvScratch {
    pub fn new() -> Self {
        Self::default()
    }
}

/// Hypervolume of flat row-major points, all strictly above `r`, with the
/// 3-d case already sorted by third coordinate descending.
fn sweep_sorted(points: &[f64], d: usize, r: &[f64], stair: &mut Staircase) -> f64 {
    let m = points.len() / d.max(1);
    match d {
        1 => points
            .iter()
            .map(|p| p - r[0])
            .fold(0.0, f64::max),
        2 => {
            stair.clear();
            for p in points.chunks_exact(2) {
                stair.insert(p[0], p[1]);
            }
            stair.area(r[0], r[1])
        }
        3 => {
            stair.clear();
            let mut vol = 0.0;
            let mut area = 0.0;
            for k in 0..m {
                let p = &points[3 * k..3 * k + 3];
                if stair.insert(p[0], p[1]) {
                    area = stair.area(r[0], r[1]);
                }
                let next_z = if k + 1 < m { points[3 * k + 5] } else { r[2] };
                vol += area * (p[2] - next_z);
            }
            vol
        }
        _ => unreachable!("dimension checked by callers"),
    }
}

fn check_exact_dim(d: usize) -> Result<()> {
    if d == 0 || d > 3 {
        return Err(Error::UnsupportedDimension(d));
    }
    Ok(())
}

/// Copies points strictly above `r` into `out` (flat), sorted for the sweep.
fn collect_above<'a, I>(points: I, d: usize, r: &[f64], out: &mut Vec<f64>) -> Result<()>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    out.clear();
    for p in points {
        check_dim(d, p.len())?;
        if p.iter().zip(r).all(|(x, z)| x > z) {
            out.extend_from_slice(p);
        }
    }
    if d == 3 {
        sort_by_last_desc(out);
    }
    Ok(())
}

fn sort_by_last_desc(flat: &mut Vec<f64>) {
    let mut rows: Vec<[f64; 3]> = flat
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    rows.sort_by(|a, b| b[2].total_cmp(&a[2]));
    flat.clear();
    flat.extend(rows.iter().flatten());
}

/// Exact hypervolume of a point set against `r` for one to three objectives.
/// Points need not be mutually non-dominated; points not strictly above the
/// reference contribute nothing.
pub fn hypervolume_of<'a, I>(points: I, r: &[f64]) -> Result<f64>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let d = r.len();
    check_exact_dim(d)?;
    let mut scratch = HvScratch::new();
    collect_above(points, d, r, &mut scratch.points)?;
    Ok(sweep_sorted(&scratch.points, d, r, &mut scratch.stair))
}

/// Lebesgue measure of the region dominated by `front` and bounded below by `r`.
pub fn hypervolume_exact(front: &ParetoFront, r: &ReferencePoint) -> Result<f64> {
    hypervolume_of(front.points(), r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Uniform Monte-Carlo hypervolume over the box `[r, bound]`.
pub fn hypervolume_mc<R: Rng + ?Sized>(
    front: &ParetoFront,
    r: &ReferencePoint,
    bound: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::InvalidInput("hypervolume_mc needs at least one sample".into()));
    }
    let d = r.len();
    check_dim(d, bound.len())?;
    for p in front.points() {
        check_dim(d, p.len())?;
        if p.iter().zip(bound).any(|(x, b)| x > b) {
            return Err(Error::InvalidInput("bound must dominate every front point".into()));
        }
    }
    if front.is_empty() {
        return Ok(McEstimate {
            value: 0.0,
            std_error: 0.0,
        });
    }
    let volume: f64 = bound.iter().zip(r.iter()).map(|(b, z)| (b - z).max(0.0)).product();
    let mut u = vec![0.0; d];
    let mut hits = 0usize;
    for _ in 0..samples {
        for i in 0..d {
            u[i] = r[i] + (bound[i] - r[i]) * rng.random::<f64>();
        }
        if front.points().any(|p| p.iter().zip(&u).all(|(x, y)| x >= y)) {
            hits += 1;
        }
    }
    let frac = hits as f64 / samples as f64;
    Ok(McEstimate {
        value: volume * frac,
        std_error: volume * (frac * (1.0 - frac) / samples as f64).sqrt(),
    })
}

/// Front prepared for repeated hypervolume-improvement queries.
#[derive(Debug, Clone)]
pub struct HviEvaluator {
    d: usize,
    r: Vec<f64>,
    /// Flat front points, sorted by the last coordinate descending for d = 3.
    front: Vec<f64>,
}

impl HviEvaluator {
    pub fn new(front: &ParetoFront, r: &ReferencePoint) -> Result<Self> {
        Self::from_points(front.points(), r)
    }

    pub fn from_points<'a, I>(points: I, r: &[f64]) -> Result<Self>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let d = r.len();
        check_exact_dim(d)?;
        let mut flat = Vec::new();
        for p in points {
            check_dim(d, p.len())?;
            flat.extend_from_slice(p);
        }
        if d == 3 {
            sort_by_last_desc(&mut flat);
        }
        Ok(HviEvaluator {
            d,
            r: r.to_vec(),
            front: flat,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// `HV(front ∪ {c}) − HV(front)`, computed as the box `[r, c]` minus the
    /// part of it the front already covers.
    pub fn improvement(&self, c: &[f64], scratch: &mut HvScratch) -> f64 {
        let d = self.d;
        debug_assert_eq!(c.len(), d);
        let r = &self.r;
        if c.iter().zip(r).any(|(x, z)| x <= z) {
            return 0.0;
        }
        let front = &self.front;
        if front
            .chunks_exact(d)
            .any(|p| p.iter().zip(c).all(|(x, y)| x >= y))
        {
            return 0.0;
        }
        let cell: f64 = c.iter().zip(r).map(|(x, z)| x - z).product();
        let buf = &mut scratch.points;
        buf.clear();
        for p in front.chunks_exact(d) {
            let mut above = true;
            for i in 0..d {
                let q = p[i].min(c[i]);
                above &= q > r[i];
                buf.push(q);
            }
            if !above {
                buf.truncate(buf.len() - d);
            }
        }
        // Clipping preserves the descending order of the last coordinate.
        let covered = sweep_sorted(buf, d, r, &mut scratch.stair);
        (cell - covered).max(0.0)
    }
}

/// Hypervolume gained by adding `candidate` to `front`.
pub fn hv_improvement(
    front: &ParetoFront,
    candidate: &[f64],
    r: &ReferencePoint,
) -> Result<f64> {
    check_dim(r.len(), candidate.len())?;
    let eval = HviEvaluator::new(front, r)?;
    Ok(eval.improvement(candidate, &mut HvScratch::new()))
}
