//! Exact Gaussian-process regression with fixed hyperparameters.
//!
//! One model per objective. All objectives are trained on the same inputs
//! with the same kernel and hyperparameters, so the surrogate factors the
//! Gram matrix once and shares the factor between its models.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::fingerprint::{CountFingerprint, KernelKind};

/// Extra diagonal jitter tried, in order, when a factorization fails.
pub const JITTER_LADDER: [f64; 3] = [1e-10, 1e-8, 1e-6];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpHyperparams {
    /// Kernel output scale.
    pub amplitude: f64,
    /// Observation noise variance added to the Gram diagonal.
    pub noise_variance: f64,
    /// Constant prior mean.
    #[serde(default)]
    pub mean: f64,
}

impl Default for GpHyperparams {
    fn default() -> Self {
        GpHyperparams {
            amplitude: 1.0,
            noise_variance: 1e-4,
            mean: 0.0,
        }
    }
}

impl GpHyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "amplitude must be positive, got {}",
                self.amplitude
            )));
        }
        if !(self.noise_variance > 0.0 && self.noise_variance.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "noise variance must be positive, got {}",
                self.noise_variance
            )));
        }
        if !self.mean.is_finite() {
            return Err(Error::InvalidConfig("prior mean must be finite".into()));
        }
        Ok(())
    }
}

/// Row-major lower-triangular Cholesky factor.
#[derive(Debug, Clone)]
pub struct Cholesky {
    n: usize,
    lower: Vec<f64>,
    jitter: f64,
}

impl Cholesky {
    /// Factors the symmetric row-major matrix `a` (n×n) with `jitter` added
    /// to the diagonal. Returns `None` when a pivot is not strictly positive.
    pub fn factor(a: &[f64], n: usize, jitter: f64) -> Option<Cholesky> {
        debug_assert_eq!(a.len(), n * n);
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let (row_j, _) = l.split_at(j * n + j);
            let row_j = &row_j[j * n..];
            let d = a[j * n + j] + jitter - dot(row_j, row_j);
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            let pivot = d.sqrt();
            l[j * n + j] = pivot;
            for i in j + 1..n {
                let s = dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = (a[i * n + j] - s) / pivot;
            }
        }
        Some(Cholesky {
            n,
            lower: l,
            jitter,
        })
    }

    /// Tries no jitter first, then each rung of [`JITTER_LADDER`].
    pub fn factor_escalating(a: &[f64], n: usize) -> Option<Cholesky> {
        std::iter::once(0.0)
            .chain(JITTER_LADDER)
            .find_map(|jitter| Cholesky::factor(a, n, jitter))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Jitter that was needed on top of the requested matrix.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    /// Solves `L x = b` in place.
    pub fn forward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.lower[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.lower[i * n + i];
        }
    }

    /// Solves `Lᵀ x = b` in place.
    pub fn backward(&self, b: &mut [f64]) {
        let n = self.n;
        for i in (0..n).rev() {
            let mut s = b[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * b[k];
            }
            b[i] = s / self.lower[i * n + i];
        }
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward(&mut x);
        self.backward(&mut x);
        x
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Training inputs, their scaled Gram matrix and its noisy factor.
#[derive(Debug)]
struct TrainingSet {
    inputs: Vec<CountFingerprint>,
    /// `amplitude · k(x_i, x_j)`, row-major, without noise.
    gram: Vec<f64>,
    factor: Cholesky,
}

impl TrainingSet {
    fn build(
        inputs: Vec<CountFingerprint>,
        gram: Vec<f64>,
        hyper: &GpHyperparams,
        objective: usize,
    ) -> Result<TrainingSet> {
        let n = inputs.len();
        let mut noisy = gram.clone();
        for i in 0..n {
            noisy[i * n + i] += hyper.noise_variance;
        }
        let factor =
            Cholesky::factor_escalating(&noisy, n).ok_or(Error::Cholesky { objective })?;
        Ok(TrainingSet {
            inputs,
            gram,
            factor,
        })
    }

    fn fresh(
        inputs: Vec<CountFingerprint>,
        hyper: &GpHyperparams,
        kernel: KernelKind,
        objective: usize,
    ) -> Result<TrainingSet> {
        if inputs.is_empty() {
            return Err(Error::InvalidInput("GP needs at least one training point".into()));
        }
        let gram = crate::fingerprint::kernel_matrix(&inputs, kernel, hyper.amplitude);
        TrainingSet::build(inputs, gram, hyper, objective)
    }

    /// Grows the Gram matrix by one row/column and refactors from scratch.
    fn extended(
        &self,
        input: CountFingerprint,
        hyper: &GpHyperparams,
        kernel: KernelKind,
    ) -> Result<TrainingSet> {
        let n = self.inputs.len();
        let m = n + 1;
        let mut gram = vec![0.0; m * m];
        for i in 0..n {
            gram[i * m..i * m + n].copy_from_slice(&self.gram[i * n..(i + 1) * n]);
        }
        for i in 0..n {
            let v = hyper.amplitude * kernel.eval(&self.inputs[i], &input);
            gram[i * m + n] = v;
            gram[n * m + i] = v;
        }
        gram[n * m + n] = hyper.amplitude * kernel.eval(&input, &input);
        let mut inputs = self.inputs.clone();
        inputs.push(input);
        TrainingSet::build(inputs, gram, hyper, 0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// Posterior state for a single objective.
#[derive(Debug, Clone)]
pub struct GpModel {
    train: Arc<TrainingSet>,
    targets: Vec<f64>,
    solve_vector: Vec<f64>,
    hyper: GpHyperparams,
    kernel: KernelKind,
}

impl GpModel {
    pub fn fit(
        inputs: Vec<CountFingerprint>,
        targets: Vec<f64>,
        hyper: GpHyperparams,
        kernel: KernelKind,
    ) -> Result<GpModel> {
        hyper.validate()?;
        check_dim(inputs.len(), targets.len())?;
        check_targets(&targets)?;
        let train = Arc::new(TrainingSet::fresh(inputs, &hyper, kernel, 0)?);
        Ok(GpModel::with_training(train, targets, hyper, kernel))
    }

    fn with_training(
        train: Arc<TrainingSet>,
        targets: Vec<f64>,
        hyper: GpHyperparams,
        kernel: KernelKind,
    ) -> GpModel {
        let centred: Vec<f64> = targets.iter().map(|y| y - hyper.mean).collect();
        let solve_vector = train.factor.solve(&centred);
        GpModel {
            train,
            targets,
            solve_vector,
            hyper,
            kernel,
        }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn inputs(&self) -> &[CountFingerprint] {
        &self.train.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    /// `(K + sI)⁻¹ (y − m)`.
    pub fn solve_vector(&self) -> &[f64] {
        &self.solve_vector
    }

    pub fn cholesky(&self) -> &Cholesky {
        &self.train.factor
    }

    /// Gram matrix `amplitude · K` without the noise term.
    pub fn gram(&self) -> &[f64] {
        &self.train.gram
    }

    pub fn hyperparams(&self) -> &GpHyperparams {
        &self.hyper
    }

    pub fn kernel(&self) -> KernelKind {
        self.kernel
    }

    /// Cross-covariances `amplitude · k(query, x_i)` against the training set.
    pub fn cross_covariance(&self, query: &CountFingerprint) -> Vec<f64> {
        self.train
            .inputs
            .iter()
            .map(|x| self.hyper.amplitude * self.kernel.eval(query, x))
            .collect()
    }

    pub fn predict(&self, query: &CountFingerprint) -> Prediction {
        let cross = self.cross_covariance(query);
        let prior = self.hyper.amplitude * self.kernel.eval(query, query);
        self.predict_from_cross(&cross, prior)
    }

    /// Posterior from precomputed cross-covariances and prior variance.
    pub fn predict_from_cross(&self, cross: &[f64], prior_variance: f64) -> Prediction {
        let mean = self.hyper.mean + dot(cross, &self.solve_vector);
        let mut v = cross.to_vec();
        self.train.factor.forward(&mut v);
        let variance = clamp_variance(prior_variance - dot(&v, &v), self.hyper.amplitude);
        Prediction { mean, variance }
    }
}

fn clamp_variance(v: f64, amplitude: f64) -> f64 {
    v.clamp(0.0, amplitude)
}

fn check_targets(targets: &[f64]) -> Result<()> {
    if let Some(i) = targets.iter().position(|y| !y.is_finite()) {
        return Err(Error::InvalidInput(format!("target {i} is not finite")));
    }
    Ok(())
}

/// Per-query means and variances, `m` rows by `d` columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BatchPrediction {
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

/// Independent GPs, one per objective, over a shared training set.
#[derive(Debug, Clone)]
pub struct MultiObjectiveSurrogate {
    models: Vec<GpModel>,
}

impl MultiObjectiveSurrogate {
    /// Fits one model per objective. `targets` holds one row of `d` values
    /// per input.
    pub fn fit(
        inputs: Vec<CountFingerprint>,
        targets: &[Vec<f64>],
        hyper: GpHyperparams,
        kernel: KernelKind,
    ) -> Result<MultiObjectiveSurrogate> {
        hyper.validate()?;
        check_dim(inputs.len(), targets.len())?;
        let d = targets.first().map(Vec::len).unwrap_or(0);
        if d == 0 {
            return Err(Error::InvalidInput("surrogate needs at least one objective".into()));
        }
        for row in targets {
            check_dim(d, row.len())?;
            check_targets(row)?;
        }
        let train = Arc::new(TrainingSet::fresh(inputs, &hyper, kernel, 0)?);
        Ok(Self::from_training(train, targets, d, hyper, kernel))
    }

    fn from_training(
        train: Arc<TrainingSet>,
        targets: &[Vec<f64>],
        d: usize,
        hyper: GpHyperparams,
        kernel: KernelKind,
    ) -> MultiObjectiveSurrogate {
        let models = (0..d)
            .map(|j| {
                let column = targets.iter().map(|row| row[j]).collect();
                GpModel::with_training(Arc::clone(&train), column, hyper, kernel)
            })
            .collect();
        MultiObjectiveSurrogate { models }
    }

    pub fn models(&self) -> &[GpModel] {
        &self.models
    }

    pub fn n_objectives(&self) -> usize {
        self.models.len()
    }

    pub fn n_train(&self) -> usize {
        self.models[0].len()
    }

    fn lead(&self) -> &GpModel {
        &self.models[0]
    }

    /// Returns a new surrogate trained on the extended dataset; `self` is
    /// left untouched.
    pub fn append_observation(
        &self,
        input: CountFingerprint,
        values: &[f64],
    ) -> Result<MultiObjectiveSurrogate> {
        check_dim(self.n_objectives(), values.len())?;
        check_targets(values)?;
        let lead = self.lead();
        let train = Arc::new(lead.train.extended(input, &lead.hyper, lead.kernel)?);
        let targets: Vec<Vec<f64>> = (0..lead.len())
            .map(|i| self.models.iter().map(|m| m.targets[i]).collect())
            .chain(std::iter::once(values.to_vec()))
            .collect();
        Ok(Self::from_training(
            train,
            &targets,
            self.n_objectives(),
            lead.hyper,
            lead.kernel,
        ))
    }

    pub fn cross_covariance(&self, query: &CountFingerprint) -> Vec<f64> {
        self.lead().cross_covariance(query)
    }

    /// Means and variances for every objective from one cross-covariance
    /// vector. The variance is computed once since all models share the
    /// same factor.
    pub fn predict_from_cross(
        &self,
        cross: &[f64],
        prior_variance: f64,
    ) -> (Vec<f64>, Vec<f64>) {
        let lead = self.lead();
        let base = lead.predict_from_cross(cross, prior_variance);
        let means = self
            .models
            .iter()
            .map(|m| m.hyper.mean + dot(cross, &m.solve_vector))
            .collect();
        (means, vec![base.variance; self.models.len()])
    }

    pub fn predict(&self, query: &CountFingerprint) -> (Vec<f64>, Vec<f64>) {
        let lead = self.lead();
        let cross = lead.cross_covariance(query);
        let prior = lead.hyper.amplitude * lead.kernel.eval(query, query);
        self.predict_from_cross(&cross, prior)
    }

    pub fn predict_batch(&self, queries: &[CountFingerprint]) -> BatchPrediction {
        let (means, variances) = queries.iter().map(|q| self.predict(q)).unzip();
        BatchPrediction { means, variances }
    }
}
