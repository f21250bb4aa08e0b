//! Agreement-rate algebra for a trio of classifiers.
//!
//! Stream correctness rates are label-mixtures of the per-label accuracies.
//! The agreement-equation shortcut assumes `e_{i,j} = e_i e_j`, which fails
//! whenever the per-label error rates differ, and its closed-form solution
//! needs `c = sqrt((1 − 2a_{1,2})(1 − 2a_{1,3})(1 − 2a_{2,3}))`.

use crate::error::{Error, Result};
use crate::evaluators::is_rational_square;
use crate::forward::{CorrelationSet, EvaluationPoint};
use crate::numerics::Scalar;
use crate::sketch::{complement_pair, DecisionSketch, GroundTruthPoint, SketchStatistics, NUM_CLASSIFIERS, PAIRS};

#[derive(Debug, Clone, PartialEq)]
pub struct StreamRates<S> {
    pub correct: [S; NUM_CLASSIFIERS],
    pub error: [S; NUM_CLASSIFIERS],
    /// Joint rates in pair order (1,2), (1,3), (2,3).
    pub joint_correct: [S; 3],
    pub joint_error: [S; 3],
    /// `e_{i,j} − e_i e_j`.
    pub factorization_gap: [S; 3],
}

impl<S: Scalar> StreamRates<S> {
    /// `1 − c_i − c_j + 2 c_{i,j}`, the agreement rate these rates imply.
    pub fn implied_agreement(&self) -> [S; 3] {
        std::array::from_fn(|p| {
            let (i, j) = PAIRS[p];
            S::one() - self.correct[i].clone() - self.correct[j].clone()
                + S::from_ratio(2, 1) * self.joint_correct[p].clone()
        })
    }
}

pub fn stream_rates<S: Scalar>(point: &EvaluationPoint<S>, corr: &CorrelationSet<S>) -> StreamRates<S> {
    let pa = point.prevalence.clone();
    let pb = S::one() - pa.clone();
    let acc = &point.acc;
    let err = |i: usize, l: usize| S::one() - acc[i][l].clone();
    let correct: [S; 3] = std::array::from_fn(|i| pa.clone() * acc[i][0].clone() + pb.clone() * acc[i][1].clone());
    let error: [S; 3] = correct.clone().map(|c| S::one() - c);
    // Error indicators have the same covariance as correctness indicators.
    let gamma = |p: usize| pa.clone() * corr.pair[p][0].clone() + pb.clone() * corr.pair[p][1].clone();
    let joint_correct = std::array::from_fn(|p| {
        let (i, j) = PAIRS[p];
        pa.clone() * acc[i][0].clone() * acc[j][0].clone()
            + pb.clone() * acc[i][1].clone() * acc[j][1].clone()
            + gamma(p)
    });
    let joint_error: [S; 3] = std::array::from_fn(|p| {
        let (i, j) = PAIRS[p];
        pa.clone() * err(i, 0) * err(j, 0) + pb.clone() * err(i, 1) * err(j, 1) + gamma(p)
    });
    let factorization_gap = std::array::from_fn(|p| {
        let (i, j) = PAIRS[p];
        joint_error[p].clone() - error[i].clone() * error[j].clone()
    });
    StreamRates {
        correct,
        error,
        joint_correct,
        joint_error,
        factorization_gap,
    }
}

pub fn stream_rates_of<S: Scalar>(truth: &GroundTruthPoint<S>) -> StreamRates<S> {
    stream_rates(&truth.point, &truth.correlations)
}

/// The four sign variants of `(c ± d) / (±2d)` with `d = 1 − 2a_{j,k}`, in the
/// order `(+,+), (+,−), (−,+), (−,−)` (numerator sign, denominator sign).
pub type SignVariants = [f64; 4];

#[derive(Debug, Clone, PartialEq)]
pub enum PlataniosEstimates {
    Values([SignVariants; NUM_CLASSIFIERS]),
    /// `c²` is negative: no real `c`.
    NegativeRadicand,
    Degenerate(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlataniosReport<S> {
    pub agreement: [S; 3],
    pub c_squared: S,
    /// `None` in float mode.
    pub c_is_rational_square: Option<bool>,
    pub e_estimates: PlataniosEstimates,
}

pub fn platanios_report<S: Scalar>(sketch: &DecisionSketch) -> Result<PlataniosReport<S>> {
    Ok(platanios_from_statistics(&sketch.statistics::<S>()?))
}

pub fn platanios_from_statistics<S: Scalar>(stats: &SketchStatistics<S>) -> PlataniosReport<S> {
    let agreement = stats.agreement.clone();
    let two = S::from_ratio(2, 1);
    let d: [S; 3] = agreement.clone().map(|a| S::one() - two.clone() * a);
    let c_squared = d.iter().cloned().fold(S::one(), |acc, x| acc * x);
    let c_is_rational_square = c_squared
        .as_rational()
        .map(|r| is_rational_square(&r).unwrap_or(false));
    let e_estimates = platanios_estimates(&d, &c_squared);
    PlataniosReport {
        agreement,
        c_squared,
        c_is_rational_square,
        e_estimates,
    }
}

fn platanios_estimates<S: Scalar>(d: &[S; 3], c_squared: &S) -> PlataniosEstimates {
    if let Some(p) = d.iter().position(|x| *x == S::zero()) {
        let (i, j) = PAIRS[p];
        return PlataniosEstimates::Degenerate(Error::DegenerateAgreement { i: i + 1, j: j + 1 });
    }
    let c2 = c_squared.to_f64();
    if c2 < 0.0 {
        return PlataniosEstimates::NegativeRadicand;
    }
    let c = c2.sqrt();
    PlataniosEstimates::Values(std::array::from_fn(|i| {
        let djk = d[complement_pair(i)].to_f64();
        [
            (c + djk) / (2.0 * djk),
            (c + djk) / (-2.0 * djk),
            (c - djk) / (2.0 * djk),
            (c - djk) / (-2.0 * djk),
        ]
    }))
}
