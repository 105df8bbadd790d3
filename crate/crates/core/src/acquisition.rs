//! Candidate scoring from surrogate posteriors: Monte-Carlo EHVI,
//! fixed-weight scalarized EI and a uniform random baseline.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{check_dim, Error, Result};
use crate::pareto::{HvScratch, HviEvaluator, McEstimate, ParetoFront, ReferencePoint};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Independent Gaussian marginals for one candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorBelief {
    pub mean: Vec<f64>,
    pub variance: Vec<f64>,
}

impl PosteriorBelief {
    pub fn new(mean: Vec<f64>, variance: Vec<f64>) -> Result<Self> {
        check_dim(mean.len(), variance.len())?;
        if mean.iter().chain(&variance).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("belief must be finite".into()));
        }
        if variance.iter().any(|&v| v < 0.0) {
            return Err(Error::InvalidInput("belief variance must be non-negative".into()));
        }
        Ok(PosteriorBelief { mean, variance })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AcquisitionKind {
    Ehvi,
    ScalarizedEi,
    Random,
}

impl AcquisitionKind {
    pub fn label(self) -> &'static str {
        match self {
            AcquisitionKind::Ehvi => "EHVI",
            AcquisitionKind::ScalarizedEi => "Scalarized EI",
            AcquisitionKind::Random => "Random",
        }
    }

    pub fn slug(self) -> &'static str {
        match self {
            AcquisitionKind::Ehvi => "ehvi",
            AcquisitionKind::ScalarizedEi => "scalarized-ei",
            AcquisitionKind::Random => "random",
        }
    }
}

impl std::str::FromStr for AcquisitionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "ehvi" => Ok(AcquisitionKind::Ehvi),
            "scalarized-ei" | "scalarized_ei" | "ei" => Ok(AcquisitionKind::ScalarizedEi),
            "random" => Ok(AcquisitionKind::Random),
            other => Err(Error::InvalidConfig(format!("unknown acquisition '{other}'"))),
        }
    }
}

/// Where EHVI's standard-normal draws come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DrawMode {
    /// One draw matrix per round shared by every candidate.
    #[default]
    Common,
    /// An independent draw matrix per candidate.
    Fresh,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionConfig {
    pub kind: AcquisitionKind,
    /// Scalarization weights, normalized to sum to one.
    pub weights: Vec<f64>,
    pub mc_samples: usize,
    pub draw_mode: DrawMode,
    pub reference: ReferencePoint,
}

impl AcquisitionConfig {
    /// Uniform weights, 1000 draws, common random numbers, zero reference.
    pub fn new(kind: AcquisitionKind, d: usize) -> Self {
        AcquisitionConfig {
            kind,
            weights: vec![1.0 / d as f64; d],
            mc_samples: 1000,
            draw_mode: DrawMode::Common,
            reference: ReferencePoint::zeros(d),
        }
    }

    pub fn validate(&self, d: usize) -> Result<()> {
        check_dim(d, self.weights.len())?;
        check_dim(d, self.reference.len())?;
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidConfig("weights must be non-negative".into()));
        }
        let sum: f64 = self.weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("weights sum to {sum}, expected 1")));
        }
        if self.mc_samples == 0 {
            return Err(Error::InvalidConfig("mc_samples must be at least 1".into()));
        }
        if self.reference.iter().any(|z| !z.is_finite()) {
            return Err(Error::InvalidConfig("reference point must be finite".into()));
        }
        Ok(())
    }
}

/// Scales non-negative weights to sum to one.
pub fn normalize_weights(raw: &[f64]) -> Result<Vec<f64>> {
    if raw.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidConfig("weights must be finite and non-negative".into()));
    }
    let sum: f64 = raw.iter().sum();
    if sum <= 0.0 {
        return Err(Error::InvalidConfig("weights must not all be zero".into()));
    }
    Ok(raw.iter().map(|w| w / sum).collect())
}

/// Row-major `samples × d` standard-normal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawMatrix {
    d: usize,
    data: Vec<f64>,
}

impl DrawMatrix {
    pub fn standard_normal<R: Rng + ?Sized>(samples: usize, d: usize, rng: &mut R) -> Self {
        let data = (0..samples * d).map(|_| rng.sample(StandardNormal)).collect();
        DrawMatrix { d, data }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map(Vec::len).unwrap_or(0);
        let mut data = Vec::with_capacity(rows.len() * d);
        for r in rows {
            check_dim(d, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(DrawMatrix { d, data })
    }

    pub fn samples(&self) -> usize {
        if self.d == 0 {
            0
        } else {
            self.data.len() / self.d
        }
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d.max(1))
    }
}

/// EHVI accumulation over a prepared front. Returns the per-draw mean and
/// its standard error.
pub fn ehvi_prepared(
    eval: &HviEvaluator,
    belief: &PosteriorBelief,
    draws: &DrawMatrix,
    scratch: &mut HvScratch,
) -> McEstimate {
    if belief.variance.iter().all(|&v| v == 0.0) {
        return McEstimate {
            value: eval.improvement(&belief.mean, scratch),
            std_error: 0.0,
        };
    }
    let sd: Vec<f64> = belief.variance.iter().map(|v| v.sqrt()).collect();
    let mut y = vec![0.0; belief.dim()];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    let n = draws.samples();
    for z in draws.rows() {
        for i in 0..y.len() {
            y[i] = belief.mean[i] + sd[i] * z[i];
        }
        let gain = eval.improvement(&y, scratch);
        sum += gain;
        sum_sq += gain * gain;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let std_error = if n > 1 {
        ((sum_sq - nf * mean * mean).max(0.0) / (nf - 1.0) / nf).sqrt()
    } else {
        0.0
    };
    McEstimate {
        value: mean,
        std_error,
    }
}

fn check_ehvi_dims(front: &ParetoFront, belief: &PosteriorBelief, r: &ReferencePoint, draws: &DrawMatrix) -> Result<()> {
    let d = r.len();
    check_dim(d, belief.dim())?;
    check_dim(d, draws.dim())?;
    if let Some(fd) = front.dim() {
        check_dim(d, fd)?;
    }
    if draws.samples() == 0 {
        return Err(Error::InvalidInput("EHVI needs at least one draw".into()));
    }
    Ok(())
}

/// Monte-Carlo expected hypervolume improvement with caller-supplied draws.
pub fn ehvi_mc(
    front: &ParetoFront,
    belief: &PosteriorBelief,
    r: &ReferencePoint,
    draws: &DrawMatrix,
) -> Result<f64> {
    ehvi_mc_estimate(front, belief, r, draws).map(|e| e.value)
}

/// [`ehvi_mc`] together with the Monte-Carlo standard error.
pub fn ehvi_mc_estimate(
    front: &ParetoFront,
    belief: &PosteriorBelief,
    r: &ReferencePoint,
    draws: &DrawMatrix,
) -> Result<McEstimate> {
    check_ehvi_dims(front, belief, r, draws)?;
    let eval = HviEvaluator::new(front, r)?;
    Ok(ehvi_prepared(&eval, belief, draws, &mut HvScratch::new()))
}

pub fn scalarize_weighted(values: &[f64], weights: &[f64]) -> Result<f64> {
    check_dim(weights.len(), values.len())?;
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum())
}

/// Standard normal density.
pub fn normal_pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

/// Standard normal CDF via the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Closed-form `E[max(0, Y − incumbent)]` for `Y ~ N(mean, variance)`.
pub fn expected_improvement(mean: f64, variance: f64, incumbent: f64) -> f64 {
    let sigma = variance.max(0.0).sqrt();
    let diff = mean - incumbent;
    if sigma == 0.0 {
        return diff.max(0.0);
    }
    let u = diff / sigma;
    (diff * normal_cdf(u) + sigma * normal_pdf(u)).max(0.0)
}

/// EI of the weighted sum of independent objectives.
pub fn scalarized_ei_score(
    belief: &PosteriorBelief,
    weights: &[f64],
    incumbent: f64,
) -> Result<f64> {
    let mean = scalarize_weighted(&belief.mean, weights)?;
    let variance = belief
        .variance
        .iter()
        .zip(weights)
        .map(|(v, w)| w * w * v)
        .sum();
    Ok(expected_improvement(mean, variance, incumbent))
}

/// Uniform score in `[0, 1)`.
pub fn random_score<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>()
}
