//! Seeded synthetic experiments: failure profiles by test size and
//! distance-vs-correlation scatters.
//!
//! Each trial draws a ground truth, samples a finite labeled stream from it,
//! and evaluates the resulting sketch. Trial `k` uses generator stream `k`
//! split off the configured seed, so results do not depend on scheduling.

use std::collections::BTreeMap;
use std::io::Write;

use num_bigint::BigInt;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluators::{decode, independent_evaluate, DecodeHint, EvaluationOutcome, FailureKind};
use crate::forward::{conditional_table, sample_stream_with, CorrelationSet, EvaluationPoint};
use crate::numerics::{Mode, Rational, SeededRng};
use crate::sketch::{truth_statistics, DecisionSketch, LabeledStream};
use crate::variety::{project, ProjectionSettings};

/// Closed interval for a sampled coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
}

impl Range {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Range { lo, hi }
    }
}

/// Ground-truth distribution. Values are drawn uniformly from a grid of
/// multiples of `1/denominator`, so every sampled truth is rational.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TruthSampler {
    pub prevalence: Range,
    pub accuracy: Range,
    /// Magnitude cap for each of the six pair correlations.
    pub gamma_cap: f64,
    /// Magnitude cap for the two 3-way correlations.
    pub triple_cap: f64,
    pub denominator: u64,
    /// Rejection-sampling budget per trial for infeasible correlations.
    pub max_retries: u32,
}

impl Default for TruthSampler {
    fn default() -> Self {
        TruthSampler {
            prevalence: Range::new(0.25, 0.75),
            accuracy: Range::new(0.6, 0.95),
            gamma_cap: 0.0,
            triple_cap: 0.0,
            denominator: 1000,
            max_retries: 1000,
        }
    }
}

impl TruthSampler {
    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        for (name, r) in [("prevalence", self.prevalence), ("accuracy", self.accuracy)] {
            if !(0.0 <= r.lo && r.lo <= r.hi && r.hi <= 1.0) {
                return bad(format!("{name} range must satisfy 0 <= lo <= hi <= 1"));
            }
        }
        if !(self.gamma_cap >= 0.0 && self.triple_cap >= 0.0) {
            return bad("correlation caps must be non-negative".into());
        }
        if self.denominator == 0 || self.denominator > 1 << 40 {
            return bad("denominator must be in 1..=2^40".into());
        }
        if self.max_retries == 0 {
            return bad("max_retries must be at least 1".into());
        }
        Ok(())
    }

    fn draw<R: Rng>(&self, rng: &mut R, lo: f64, hi: f64) -> Rational {
        let d = self.denominator as f64;
        let k_lo = (lo * d).ceil() as i64;
        let k_hi = ((hi * d).floor() as i64).max(k_lo);
        Rational::new(BigInt::from(rng.gen_range(k_lo..=k_hi)), BigInt::from(self.denominator))
    }

    /// Draws a feasible `(point, correlations)` pair. Returns the number of
    /// rejected draws alongside.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<(EvaluationPoint<Rational>, CorrelationSet<Rational>, u32)> {
        for attempt in 0..self.max_retries {
            let prevalence = self.draw(rng, self.prevalence.lo, self.prevalence.hi);
            let acc = std::array::from_fn(|_| {
                [
                    self.draw(rng, self.accuracy.lo, self.accuracy.hi),
                    self.draw(rng, self.accuracy.lo, self.accuracy.hi),
                ]
            });
            let point = EvaluationPoint::new(prevalence, acc);
            let corr = CorrelationSet {
                pair: std::array::from_fn(|_| {
                    [
                        self.draw(rng, -self.gamma_cap, self.gamma_cap),
                        self.draw(rng, -self.gamma_cap, self.gamma_cap),
                    ]
                }),
                triple: [
                    self.draw(rng, -self.triple_cap, self.triple_cap),
                    self.draw(rng, -self.triple_cap, self.triple_cap),
                ],
            };
            // Cheap float screen first; the exact check decides.
            let approx = conditional_table(&point.to_f64(), &corr.to_f64());
            if approx.per_label.iter().flatten().any(|&c| !(-1e-9..=1.0 + 1e-9).contains(&c)) {
                continue;
            }
            if conditional_table(&point, &corr).check_feasible().is_ok() {
                return Ok((point, corr, attempt));
            }
        }
        Err(Error::RetriesExhausted {
            attempts: self.max_retries as usize,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileConfig {
    pub test_sizes: Vec<u64>,
    pub trials_per_size: usize,
    #[serde(default)]
    pub sampler: TruthSampler,
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default = "default_grid")]
    pub projection_grid: usize,
    #[serde(default = "default_refinements")]
    pub projection_refinements: usize,
}

fn default_mode() -> Mode {
    Mode::Float
}
fn default_grid() -> usize {
    ProjectionSettings::default().grid
}
fn default_refinements() -> usize {
    ProjectionSettings::default().refinements
}

impl ProfileConfig {
    pub fn new(test_sizes: Vec<u64>, trials_per_size: usize, seed: u64) -> Self {
        ProfileConfig {
            test_sizes,
            trials_per_size,
            sampler: TruthSampler::default(),
            seed,
            mode: Mode::Float,
            projection_grid: default_grid(),
            projection_refinements: default_refinements(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ProfileConfig = serde_json::from_str(text).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.test_sizes.is_empty() || self.test_sizes[0] == 0 {
            return Err(Error::InvalidConfig("test_sizes must be non-empty and positive".into()));
        }
        if self.test_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("test_sizes must be strictly increasing".into()));
        }
        if self.trials_per_size == 0 {
            return Err(Error::InvalidConfig("trials_per_size must be at least 1".into()));
        }
        self.sampler.validate()
    }

    fn projection(&self) -> ProjectionSettings {
        ProjectionSettings {
            grid: self.projection_grid,
            refinements: self.projection_refinements,
        }
    }

    fn trial_rng(&self, size_index: usize, trial: usize) -> SeededRng {
        SeededRng::new(self.seed).split((size_index * self.trials_per_size + trial) as u64)
    }
}

/// What happened in one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub failure: Option<FailureKind>,
    /// Float approximations of the two variety points, when real.
    pub candidates: Option<[EvaluationPoint<f64>; 2]>,
}

pub fn evaluate_trial(sketch: &DecisionSketch, mode: Mode) -> Result<TrialOutcome> {
    let (failure, candidates) = match mode {
        Mode::Exact => {
            let ev = independent_evaluate::<Rational>(sketch)?;
            (ev.failure().map(|f| f.kind()), ev.candidates)
        }
        Mode::Float => {
            let ev = independent_evaluate::<f64>(sketch)?;
            let candidates = match &ev.outcome {
                EvaluationOutcome::Points(p) => Some(p.clone()),
                EvaluationOutcome::Failure(_) => ev.candidates.clone(),
            };
            (ev.failure().map(|f| f.kind()), candidates)
        }
    };
    Ok(TrialOutcome { failure, candidates })
}

struct Trial {
    stream: LabeledStream,
    rejections: u32,
}

fn run_trial(config: &ProfileConfig, size_index: usize, trial: usize) -> Result<Trial> {
    let mut rng = config.trial_rng(size_index, trial);
    let (point, corr, rejections) = config.sampler.sample(&mut rng)?;
    let stream = sample_stream_with(&point, &corr, config.test_sizes[size_index], &mut rng)?;
    Ok(Trial { stream, rejections })
}

fn par_trials<T: Send>(
    config: &ProfileConfig,
    jobs: usize,
    f: impl Fn(usize, usize) -> Result<T> + Sync,
) -> Result<Vec<Vec<T>>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(e.to_string()))?;
    pool.install(|| {
        (0..config.test_sizes.len())
            .map(|s| (0..config.trials_per_size).into_par_iter().map(|t| f(s, t)).collect())
            .collect()
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRecord {
    pub test_size: u64,
    pub trials: usize,
    pub seemingly_correct: usize,
    pub fraction_seemingly_correct: f64,
    /// Trials with no real solution at all (empty variety or complex roots).
    pub fraction_never_solvable: f64,
    pub failure_histogram: BTreeMap<FailureKind, usize>,
    pub rejected_truths: u64,
}

pub fn profile_failures(config: &ProfileConfig, jobs: usize) -> Result<Vec<ProfileRecord>> {
    config.validate()?;
    let per_size = par_trials(config, jobs, |s, t| {
        let trial = run_trial(config, s, t)?;
        let outcome = evaluate_trial(&trial.stream.sketch(), config.mode)?;
        Ok((outcome.failure, trial.rejections))
    })?;
    Ok(per_size
        .into_iter()
        .zip(&config.test_sizes)
        .map(|(results, &test_size)| {
            let mut failure_histogram: BTreeMap<FailureKind, usize> = FailureKind::ALL.iter().map(|&k| (k, 0)).collect();
            let mut seemingly_correct = 0;
            let mut rejected_truths = 0u64;
            for (failure, rejections) in &results {
                rejected_truths += u64::from(*rejections);
                match failure {
                    None => seemingly_correct += 1,
                    Some(k) => *failure_histogram.entry(*k).or_default() += 1,
                }
            }
            let trials = results.len();
            let never = failure_histogram[&FailureKind::EmptyVariety] + failure_histogram[&FailureKind::ComplexSolution];
            ProfileRecord {
                test_size,
                trials,
                seemingly_correct,
                fraction_seemingly_correct: seemingly_correct as f64 / trials as f64,
                fraction_never_solvable: never as f64 / trials as f64,
                failure_histogram,
                rejected_truths,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatterRecord {
    pub trial: usize,
    pub test_size: u64,
    /// Largest realized `|Γ_{i,j,ℓ}|` in the sampled stream; absent when the
    /// stream lacks one of the labels.
    pub max_abs_pair_corr: Option<f64>,
    /// Projection distance of the decoded estimate; successes only.
    pub distance: Option<f64>,
    pub outcome: String,
}

pub fn scatter_distance_correlation(config: &ProfileConfig, jobs: usize) -> Result<Vec<ScatterRecord>> {
    config.validate()?;
    let settings = config.projection();
    let per_size = par_trials(config, jobs, |s, t| {
        let trial = run_trial(config, s, t)?;
        let truth = truth_statistics::<f64>(&trial.stream).ok();
        let sketch = trial.stream.sketch();
        let outcome = evaluate_trial(&sketch, config.mode)?;
        let distance = match (&outcome.failure, &outcome.candidates) {
            (None, Some(points)) => {
                let kept = decode(points, &DecodeHint::MajorityCompetent);
                let estimate = kept.first().unwrap_or(&points[1]);
                Some(project(estimate, &sketch, settings)?.distance)
            }
            _ => None,
        };
        Ok(ScatterRecord {
            trial: t,
            test_size: config.test_sizes[s],
            max_abs_pair_corr: truth.map(|g| g.max_abs_pair_correlation()),
            distance,
            outcome: outcome.failure.map_or("success", |k| k.name()).to_string(),
        })
    })?;
    Ok(per_size.into_iter().flatten().collect())
}

/// Spearman rank correlation with average ranks for ties. `None` for fewer
/// than two pairs or a constant column.
pub fn spearman(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation over the scatter's successful trials.
pub fn scatter_spearman(records: &[ScatterRecord]) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = records
        .iter()
        .filter_map(|r| Some((r.max_abs_pair_corr?, r.distance?)))
        .unzip();
    spearman(&xs, &ys)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "jsonl" => Ok(OutputFormat::Jsonl),
            other => Err(Error::InvalidConfig(format!("unknown output format '{other}'"))),
        }
    }
}

/// Description of the experiment unit, written as the first JSON line.
pub const EXPERIMENT_UNIT: &str = "synthetic ground-truth sample; stands in for a feature partition of a real dataset";

fn meta_line(kind: &str, config: &ProfileConfig) -> serde_json::Value {
    serde_json::json!({
        "record": "meta",
        "kind": kind,
        "experiment_unit": EXPERIMENT_UNIT,
        "prng": crate::numerics::PRNG_NAME,
        "config": config,
    })
}

pub fn write_profile<W: Write>(
    records: &[ProfileRecord],
    config: &ProfileConfig,
    format: OutputFormat,
    mut out: W,
) -> Result<()> {
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut header = vec![
                "test_size",
                "trials",
                "seemingly_correct",
                "fraction_seemingly_correct",
                "fraction_never_solvable",
            ];
            header.extend(FailureKind::ALL.iter().map(|k| k.name()));
            header.push("rejected_truths");
            w.write_record(&header).map_err(csv_err)?;
            for r in records {
                let mut row = vec![
                    r.test_size.to_string(),
                    r.trials.to_string(),
                    r.seemingly_correct.to_string(),
                    r.fraction_seemingly_correct.to_string(),
                    r.fraction_never_solvable.to_string(),
                ];
                row.extend(FailureKind::ALL.iter().map(|k| r.failure_histogram[k].to_string()));
                row.push(r.rejected_truths.to_string());
                w.write_record(&row).map_err(csv_err)?;
            }
            w.flush()?;
        }
        OutputFormat::Jsonl => {
            writeln!(out, "{}", meta_line("profile", config))?;
            for r in records {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
    }
    Ok(())
}

pub fn write_scatter<W: Write>(
    records: &[ScatterRecord],
    config: &ProfileConfig,
    format: OutputFormat,
    mut out: W,
) -> Result<()> {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            w.write_record(["trial", "test_size", "max_abs_pair_corr", "distance", "outcome"])
                .map_err(csv_err)?;
            for r in records {
                w.write_record([
                    r.trial.to_string(),
                    r.test_size.to_string(),
                    opt(r.max_abs_pair_corr),
                    opt(r.distance),
                    r.outcome.clone(),
                ])
                .map_err(csv_err)?;
            }
            w.flush()?;
        }
        OutputFormat::Jsonl => {
            writeln!(out, "{}", meta_line("scatter", config))?;
            for r in records {
                writeln!(out, "{}", serde_json::to_string(r)?)?;
            }
        }
    }
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}
