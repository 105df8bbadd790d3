//! The pool-based optimization loop.
//!
//! A run draws an initial archive from the pool, then for each round scores
//! every unevaluated candidate, evaluates the argmax by lookup, and refits
//! the surrogate. Every random choice comes from a stream derived from the
//! master seed (see [`crate::rng`]), so `(pool, config)` fixes the outcome.

use std::collections::HashMap;
use std::time::Instant;

use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acquisition::{
    ehvi_prepared, random_score, scalarize_weighted, scalarized_ei_score, AcquisitionConfig,
    AcquisitionKind, DrawMatrix, DrawMode, PosteriorBelief,
};
use crate::error::{check_dim, Error, Result};
use crate::fingerprint::{CountFingerprint, DistanceKind, KernelKind};
use crate::gp::{GpHyperparams, MultiObjectiveSurrogate};
use crate::metrics::{
    self, default_circle_thresholds, generate_directions, n_circles_sweep, r2_indicator,
    CirclesMethod, DirectionSet, EffectSizeReport,
};
use crate::pareto::{
    hypervolume_exact, non_dominated_filter, HvScratch, HviEvaluator, ObjectiveVector,
    ParetoFront,
};
use crate::rng::{self, StreamTag, RNG_ALGORITHM};

#[derive(Debug, Clone, PartialEq)]
pub struct Molecule {
    pub id: String,
    pub smiles: Option<String>,
    pub fingerprint: CountFingerprint,
    pub objectives: ObjectiveVector,
}

/// The fixed set of molecules a run selects from.
#[derive(Debug, Clone)]
pub struct CandidatePool {
    molecules: Vec<Molecule>,
    by_id: HashMap<String, usize>,
    d: usize,
}

impl CandidatePool {
    pub fn new(molecules: Vec<Molecule>) -> Result<Self> {
        let d = molecules
            .first()
            .map(|m| m.objectives.len())
            .ok_or_else(|| Error::InvalidInput("candidate pool is empty".into()))?;
        let mut by_id = HashMap::with_capacity(molecules.len());
        for (i, m) in molecules.iter().enumerate() {
            check_dim(d, m.objectives.len())?;
            if by_id.insert(m.id.clone(), i).is_some() {
                return Err(Error::InvalidInput(format!("duplicate molecule id '{}'", m.id)));
            }
        }
        Ok(CandidatePool {
            molecules,
            by_id,
            d,
        })
    }

    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn molecules(&self) -> &[Molecule] {
        &self.molecules
    }

    pub fn get(&self, index: usize) -> &Molecule {
        &self.molecules[index]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.by_id.get(id).copied()
    }
}

/// Evaluated molecules as pool indices, in evaluation order.
#[derive(Debug, Clone, PartialEq)]
pub struct Archive {
    order: Vec<usize>,
    evaluated: Vec<bool>,
    n_initial: usize,
}

impl Archive {
    fn new(pool_len: usize) -> Self {
        Archive {
            order: Vec::new(),
            evaluated: vec![false; pool_len],
            n_initial: 0,
        }
    }

    fn push(&mut self, index: usize) {
        debug_assert!(!self.evaluated[index]);
        self.evaluated[index] = true;
        self.order.push(index);
    }

    pub fn indices(&self) -> &[usize] {
        &self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// How many leading entries came from the initial design.
    pub fn n_initial(&self) -> usize {
        self.n_initial
    }

    pub fn contains(&self, index: usize) -> bool {
        self.evaluated[index]
    }

    /// `(pool index, objectives)` in archive order.
    pub fn entries(&self, pool: &CandidatePool) -> Vec<(usize, ObjectiveVector)> {
        self.order
            .iter()
            .map(|&i| (i, pool.get(i).objectives.clone()))
            .collect()
    }

    pub fn front(&self, pool: &CandidatePool) -> ParetoFront {
        non_dominated_filter(&self.entries(pool))
    }
}

fn default_granularity() -> usize {
    12
}

/// Every parameter that affects a run's results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub acquisition: AcquisitionConfig,
    pub rounds: usize,
    pub init_size: usize,
    pub master_seed: u64,
    #[serde(default = "default_granularity")]
    pub direction_granularity: usize,
    pub utopian: ObjectiveVector,
    pub circle_thresholds: Vec<f64>,
    pub circle_distance: DistanceKind,
    pub circles_method: CirclesMethod,
    pub kernel: KernelKind,
    pub gp: GpHyperparams,
    /// Score candidates on the rayon pool.
    pub parallel: bool,
    /// Fill `wall_ms` in round records; off keeps logs byte-reproducible.
    pub record_wall_time: bool,
    pub rng: String,
}

impl RunConfig {
    pub fn new(kind: AcquisitionKind, d: usize) -> Self {
        RunConfig {
            acquisition: AcquisitionConfig::new(kind, d),
            rounds: 200,
            init_size: 10,
            master_seed: 0,
            direction_granularity: default_granularity(),
            utopian: ObjectiveVector(vec![1.0; d]),
            circle_thresholds: default_circle_thresholds(),
            circle_distance: DistanceKind::MinMax,
            circles_method: CirclesMethod::Exact,
            kernel: KernelKind::MinMax,
            gp: GpHyperparams::default(),
            parallel: true,
            record_wall_time: false,
            rng: RNG_ALGORITHM.to_string(),
        }
    }

    pub fn with_kind(mut self, kind: AcquisitionKind) -> Self {
        self.acquisition.kind = kind;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.master_seed = seed;
        self
    }

    pub fn validate(&self, pool: &CandidatePool) -> Result<()> {
        let d = pool.dim();
        if !(1..=3).contains(&d) {
            return Err(Error::UnsupportedDimension(d));
        }
        self.acquisition.validate(d)?;
        self.gp.validate()?;
        check_dim(d, self.utopian.len())?;
        if self.init_size == 0 {
            return Err(Error::InvalidConfig("init_size must be at least 1".into()));
        }
        if self.init_size + self.rounds > pool.len() {
            return Err(Error::InvalidConfig(format!(
                "init_size + rounds = {} exceeds pool size {}",
                self.init_size + self.rounds,
                pool.len()
            )));
        }
        if self.direction_granularity == 0 {
            return Err(Error::InvalidConfig("direction granularity must be >= 1".into()));
        }
        if let Some(t) = self
            .circle_thresholds
            .iter()
            .find(|t| !(**t > 0.0 && **t <= 1.0))
        {
            return Err(Error::InvalidConfig(format!("circle threshold {t} not in (0, 1]")));
        }
        if self.rng != RNG_ALGORITHM {
            return Err(Error::InvalidConfig(format!(
                "config was produced with rng '{}', this build uses '{RNG_ALGORITHM}'",
                self.rng
            )));
        }
        Ok(())
    }

    /// R2 direction set for `d` objectives, anchored at the utopian point.
    pub fn direction_set(&self, d: usize) -> Result<DirectionSet> {
        if d == 1 {
            return DirectionSet::new(vec![vec![1.0]], self.utopian.clone());
        }
        generate_directions(d, self.direction_granularity)?.with_utopian(self.utopian.clone())
    }
}

/// One optimization round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub round: usize,
    pub selected_id: String,
    pub acq_score: f64,
    pub objectives: Vec<f64>,
    /// Hypervolume of the whole archive after this round.
    pub hv: f64,
    pub r2: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone)]
struct RngBundle {
    draws: ChaCha20Rng,
    random: ChaCha20Rng,
}

/// Model-side state: surrogate plus cached pool × archive cross-covariances.
#[derive(Debug, Clone)]
struct SurrogateState {
    model: MultiObjectiveSurrogate,
    /// `cross[i][j] = amplitude · k(pool_i, archive_j)`, one column per
    /// archive member.
    cross: Vec<Vec<f64>>,
    prior_variance: Vec<f64>,
}

impl SurrogateState {
    fn fit(pool: &CandidatePool, archive: &Archive, config: &RunConfig) -> Result<Self> {
        let inputs = archive
            .indices()
            .iter()
            .map(|&i| pool.get(i).fingerprint.clone())
            .collect();
        let targets: Vec<Vec<f64>> = archive
            .indices()
            .iter()
            .map(|&i| pool.get(i).objectives.0.clone())
            .collect();
        let model = MultiObjectiveSurrogate::fit(inputs, &targets, config.gp, config.kernel)?;
        let amp = config.gp.amplitude;
        let kernel = config.kernel;
        let column = |m: &Molecule| -> Vec<f64> {
            archive
                .indices()
                .iter()
                .map(|&j| amp * kernel.eval(&m.fingerprint, &pool.get(j).fingerprint))
                .collect()
        };
        let cross = if config.parallel {
            pool.molecules().par_iter().map(column).collect()
        } else {
            pool.molecules().iter().map(column).collect()
        };
        let prior_variance = pool
            .molecules()
            .iter()
            .map(|m| amp * kernel.eval(&m.fingerprint, &m.fingerprint))
            .collect();
        Ok(SurrogateState {
            model,
            cross,
            prior_variance,
        })
    }

    fn observe(&mut self, pool: &CandidatePool, index: usize, config: &RunConfig) -> Result<()> {
        let m = pool.get(index);
        self.model = self
            .model
            .append_observation(m.fingerprint.clone(), &m.objectives)?;
        let amp = config.gp.amplitude;
        let kernel = config.kernel;
        let new = &m.fingerprint;
        let extend = |(row, cand): (&mut Vec<f64>, &Molecule)| {
            row.push(amp * kernel.eval(&cand.fingerprint, new));
        };
        if config.parallel {
            self.cross.par_iter_mut().zip(pool.molecules()).for_each(extend);
        } else {
            self.cross.iter_mut().zip(pool.molecules()).for_each(extend);
        }
        Ok(())
    }

    fn belief(&self, index: usize) -> PosteriorBelief {
        let (mean, variance) = self
            .model
            .predict_from_cross(&self.cross[index], self.prior_variance[index]);
        PosteriorBelief { mean, variance }
    }
}

/// Everything carried from one round to the next.
#[derive(Debug, Clone)]
pub struct RunState {
    archive: Archive,
    surrogate: Option<SurrogateState>,
    rngs: RngBundle,
    dirs: DirectionSet,
    round: usize,
}

impl RunState {
    pub fn archive(&self) -> &Archive {
        &self.archive
    }

    pub fn surrogate(&self) -> Option<&MultiObjectiveSurrogate> {
        self.surrogate.as_ref().map(|s| &s.model)
    }

    /// Rounds completed so far.
    pub fn round(&self) -> usize {
        self.round
    }

    /// Scores for every unevaluated candidate, in pool-index order.
    pub fn score_candidates(
        &mut self,
        pool: &CandidatePool,
        config: &RunConfig,
    ) -> Result<Vec<(usize, f64)>> {
        let cands: Vec<usize> = (0..pool.len())
            .filter(|&i| !self.archive.contains(i))
            .collect();
        if cands.is_empty() {
            return Err(Error::PoolExhausted);
        }
        let acq = &config.acquisition;
        let scores: Vec<f64> = match acq.kind {
            AcquisitionKind::Random => cands
                .iter()
                .map(|_| random_score(&mut self.rngs.random))
                .collect(),
            AcquisitionKind::ScalarizedEi => {
                let sur = self.surrogate.as_ref().expect("surrogate fitted for EI");
                let incumbent = self
                    .archive
                    .indices()
                    .iter()
                    .map(|&i| scalarize_weighted(&pool.get(i).objectives, &acq.weights))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                let score = |&i: &usize| {
                    scalarized_ei_score(&sur.belief(i), &acq.weights, incumbent)
                };
                if config.parallel {
                    cands.par_iter().map(score).collect::<Result<_>>()?
                } else {
                    cands.iter().map(score).collect::<Result<_>>()?
                }
            }
            AcquisitionKind::Ehvi => {
                let sur = self.surrogate.as_ref().expect("surrogate fitted for EHVI");
                let front = self.archive.front(pool);
                let eval = HviEvaluator::new(&front, &acq.reference)?;
                let d = pool.dim();
                let shared = match acq.draw_mode {
                    DrawMode::Common => Some(DrawMatrix::standard_normal(
                        acq.mc_samples,
                        d,
                        &mut self.rngs.draws,
                    )),
                    DrawMode::Fresh => None,
                };
                let (seed, round) = (config.master_seed, self.round + 1);
                let score = |scratch: &mut HvScratch, &i: &usize| -> f64 {
                    let belief = sur.belief(i);
                    match &shared {
                        Some(draws) => ehvi_prepared(&eval, &belief, draws, scratch).value,
                        None => {
                            let mut r = rng::candidate_stream(seed, round, i);
                            let draws = DrawMatrix::standard_normal(acq.mc_samples, d, &mut r);
                            ehvi_prepared(&eval, &belief, &draws, scratch).value
                        }
                    }
                };
                if config.parallel {
                    cands
                        .par_iter()
                        .map_init(HvScratch::new, score)
                        .collect()
                } else {
                    let mut scratch = HvScratch::new();
                    cands.iter().map(|i| score(&mut scratch, i)).collect()
                }
            }
        };
        Ok(cands.into_iter().zip(scores).collect())
    }

    /// Scores, selects, evaluates and records one round.
    pub fn run_round(&mut self, pool: &CandidatePool, config: &RunConfig) -> Result<RunRecord> {
        let started = Instant::now();
        let scored = self.score_candidates(pool, config)?;
        let (selected, score) = argmax_lowest_index(&scored);
        self.archive.push(selected);
        if let Some(s) = self.surrogate.as_mut() {
            s.observe(pool, selected, config)?;
        }
        self.round += 1;
        let front = self.archive.front(pool);
        let hv = hypervolume_exact(&front, &config.acquisition.reference)?;
        let r2 = r2_indicator(front.points(), &self.dirs)?;
        let m = pool.get(selected);
        Ok(RunRecord {
            round: self.round,
            selected_id: m.id.clone(),
            acq_score: score,
            objectives: m.objectives.0.clone(),
            hv,
            r2,
            wall_ms: if config.record_wall_time {
                started.elapsed().as_secs_f64() * 1e3
            } else {
                0.0
            },
        })
    }
}

/// First maximum in input order; NaN scores never win.
pub fn argmax_lowest_index(scored: &[(usize, f64)]) -> (usize, f64) {
    let mut best = scored[0];
    for &(i, s) in &scored[1..] {
        if s > best.1 || (best.1.is_nan() && !s.is_nan()) {
            best = (i, s);
        }
    }
    best
}

/// Draws the initial archive and fits the surrogate.
pub fn init_run(pool: &CandidatePool, config: &RunConfig) -> Result<RunState> {
    config.validate(pool)?;
    let mut init_rng = rng::stream(config.master_seed, StreamTag::Init);
    let mut archive = Archive::new(pool.len());
    for i in rand::seq::index::sample(&mut init_rng, pool.len(), config.init_size) {
        archive.push(i);
    }
    archive.n_initial = archive.len();
    let surrogate = match config.acquisition.kind {
        AcquisitionKind::Random => None,
        _ => Some(SurrogateState::fit(pool, &archive, config)?),
    };
    Ok(RunState {
        archive,
        surrogate,
        rngs: RngBundle {
            draws: rng::stream(config.master_seed, StreamTag::EhviDraws),
            random: rng::stream(config.master_seed, StreamTag::RandomScores),
        },
        dirs: config.direction_set(pool.dim())?,
        round: 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirclesPoint {
    pub threshold: f64,
    pub count: usize,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: RunConfig,
    pub records: Vec<RunRecord>,
    pub archive: Archive,
    pub front: ParetoFront,
    pub initial_hv: f64,
    pub initial_r2: f64,
    pub circles: Vec<CirclesPoint>,
}

impl RunOutcome {
    pub fn final_hv(&self) -> f64 {
        self.records.last().map(|r| r.hv).unwrap_or(self.initial_hv)
    }

    pub fn final_r2(&self) -> f64 {
        self.records.last().map(|r| r.r2).unwrap_or(self.initial_r2)
    }

    /// HV after 0, 1, …, rounds evaluations.
    pub fn hv_curve(&self) -> Vec<f64> {
        std::iter::once(self.initial_hv)
            .chain(self.records.iter().map(|r| r.hv))
            .collect()
    }

    pub fn r2_curve(&self) -> Vec<f64> {
        std::iter::once(self.initial_r2)
            .chain(self.records.iter().map(|r| r.r2))
            .collect()
    }
}

/// #Circles over the Pareto-optimal archive members, in archive order.
pub fn front_circles(
    pool: &CandidatePool,
    front: &ParetoFront,
    config: &RunConfig,
) -> Result<Vec<CirclesPoint>> {
    let fps: Vec<&CountFingerprint> = front.ids().map(|i| &pool.get(i).fingerprint).collect();
    let counts = n_circles_sweep(
        &fps,
        &config.circle_thresholds,
        config.circle_distance,
        config.circles_method,
    )?;
    Ok(config
        .circle_thresholds
        .iter()
        .zip(counts)
        .map(|(&threshold, count)| CirclesPoint { threshold, count })
        .collect())
}

pub fn run(pool: &CandidatePool, config: &RunConfig) -> Result<RunOutcome> {
    let mut state = init_run(pool, config)?;
    let front = state.archive.front(pool);
    let initial_hv = hypervolume_exact(&front, &config.acquisition.reference)?;
    let initial_r2 = r2_indicator(front.points(), &state.dirs)?;
    let mut records = Vec::with_capacity(config.rounds);
    for _ in 0..config.rounds {
        records.push(state.run_round(pool, config)?);
    }
    let front = state.archive.front(pool);
    let circles = front_circles(pool, &front, config)?;
    Ok(RunOutcome {
        config: config.clone(),
        records,
        archive: state.archive,
        front,
        initial_hv,
        initial_r2,
        circles,
    })
}

/// Mean and Bessel-corrected standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(xs: &[f64]) -> Self {
        MeanStd {
            mean: metrics::mean(xs),
            std: metrics::sample_std(xs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub acquisition: AcquisitionKind,
    pub seed: u64,
    pub final_hv: f64,
    pub final_r2: f64,
    pub hv_curve: Vec<f64>,
    pub r2_curve: Vec<f64>,
    pub circles: Vec<CirclesPoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CirclesSummary {
    pub threshold: f64,
    pub count: MeanStd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub acquisition: AcquisitionKind,
    pub final_hv: MeanStd,
    pub final_r2: MeanStd,
    /// Fewer than two seeds: the standard deviations are placeholders.
    pub degenerate: bool,
    pub hv_curve: Vec<MeanStd>,
    pub r2_curve: Vec<MeanStd>,
    pub circles: Vec<CirclesSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseEffect {
    pub first: AcquisitionKind,
    pub second: AcquisitionKind,
    pub hv: EffectSizeReport,
    pub r2: EffectSizeReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResults {
    pub task: String,
    pub rounds: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<MethodSummary>,
    pub effects: Vec<PairwiseEffect>,
    pub trials: Vec<TrialSummary>,
    pub config: RunConfig,
}

impl SuiteResults {
    pub fn method(&self, kind: AcquisitionKind) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.acquisition == kind)
    }

    pub fn effect(&self, first: AcquisitionKind, second: AcquisitionKind) -> Option<&PairwiseEffect> {
        self.effects
            .iter()
            .find(|e| e.first == first && e.second == second)
    }

    pub fn trials_for(&self, kind: AcquisitionKind) -> impl Iterator<Item = &TrialSummary> {
        self.trials.iter().filter(move |t| t.acquisition == kind)
    }
}

fn column_stats(rows: &[&Vec<f64>]) -> Vec<MeanStd> {
    let len = rows.iter().map(|r| r.len()).min().unwrap_or(0);
    (0..len)
        .map(|k| MeanStd::of(&rows.iter().map(|r| r[k]).collect::<Vec<_>>()))
        .collect()
}

/// Runs every `(acquisition, seed)` pair and aggregates per method.
///
/// `on_trial` sees each finished run, e.g. to write its logs.
pub fn run_suite<F>(
    pool: &CandidatePool,
    base: &RunConfig,
    task: &str,
    seeds: &[u64],
    kinds: &[AcquisitionKind],
    on_trial: F,
) -> Result<SuiteResults>
where
    F: Fn(&RunOutcome) -> Result<()> + Sync,
{
    if seeds.is_empty() || kinds.is_empty() {
        return Err(Error::InvalidConfig("suite needs at least one seed and one acquisition".into()));
    }
    let jobs: Vec<(AcquisitionKind, u64)> = kinds
        .iter()
        .flat_map(|&k| seeds.iter().map(move |&s| (k, s)))
        .collect();
    let run_one = |&(kind, seed): &(AcquisitionKind, u64)| -> Result<TrialSummary> {
        let cfg = base.clone().with_kind(kind).with_seed(seed);
        let out = run(pool, &cfg)?;
        on_trial(&out)?;
        Ok(TrialSummary {
            acquisition: kind,
            seed,
            final_hv: out.final_hv(),
            final_r2: out.final_r2(),
            hv_curve: out.hv_curve(),
            r2_curve: out.r2_curve(),
            circles: out.circles,
        })
    };
    let trials: Vec<TrialSummary> = if base.parallel {
        jobs.par_iter().map(run_one).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run_one).collect::<Result<_>>()?
    };

    summarize(task, base, seeds, kinds, trials)
}

/// Aggregates finished trials per method and compares methods pairwise.
///
/// Circles statistics are left empty for a method whose trials carry no
/// #Circles counts.
pub fn summarize(
    task: &str,
    base: &RunConfig,
    seeds: &[u64],
    kinds: &[AcquisitionKind],
    trials: Vec<TrialSummary>,
) -> Result<SuiteResults> {
    let methods: Vec<MethodSummary> = kinds
        .iter()
        .map(|&kind| {
            let mine: Vec<&TrialSummary> = trials.iter().filter(|t| t.acquisition == kind).collect();
            let hv: Vec<f64> = mine.iter().map(|t| t.final_hv).collect();
            let r2: Vec<f64> = mine.iter().map(|t| t.final_r2).collect();
            let hv_rows: Vec<&Vec<f64>> = mine.iter().map(|t| &t.hv_curve).collect();
            let r2_rows: Vec<&Vec<f64>> = mine.iter().map(|t| &t.r2_curve).collect();
            let has_circles = !mine.is_empty()
                && mine
                    .iter()
                    .all(|t| t.circles.len() == base.circle_thresholds.len());
            let circles = if has_circles {
                base.circle_thresholds
                    .iter()
                    .enumerate()
                    .map(|(k, &threshold)| CirclesSummary {
                        threshold,
                        count: MeanStd::of(
                            &mine.iter().map(|t| t.circles[k].count as f64).collect::<Vec<_>>(),
                        ),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            MethodSummary {
                acquisition: kind,
                final_hv: MeanStd::of(&hv),
                final_r2: MeanStd::of(&r2),
                degenerate: mine.len() < 2,
                hv_curve: column_stats(&hv_rows),
                r2_curve: column_stats(&r2_rows),
                circles,
            }
        })
        .collect();

    let finals = |k: AcquisitionKind, hv: bool| -> Vec<f64> {
        trials
            .iter()
            .filter(|t| t.acquisition == k)
            .map(|t| if hv { t.final_hv } else { t.final_r2 })
            .collect()
    };
    let mut effects = Vec::new();
    for (a, &first) in kinds.iter().enumerate() {
        for &second in &kinds[a + 1..] {
            effects.push(PairwiseEffect {
                first,
                second,
                hv: EffectSizeReport::compare(&finals(first, true), &finals(second, true))?,
                r2: EffectSizeReport::compare(&finals(first, false), &finals(second, false))?,
            });
        }
    }

    Ok(SuiteResults {
        task: task.to_string(),
        rounds: base.rounds,
        seeds: seeds.to_vec(),
        methods,
        effects,
        trials,
        config: base.clone(),
    })
}
