//! Majority-voting and fully inferential independent evaluators.
//!
//! The independent evaluator works from seven sketch moments: the beta-vote
//! marginals `f_{i,β}`, the pair deltas `Δ_{i,j}` and the triple delta `T`.
//! For an independent trio with `q = P_α(1 − P_α)` and
//! `g_i = P_{i,α} + P_{i,β} − 1`,
//!
//! ```text
//! Δ_{i,j} = q g_i g_j        T = q (2P_α − 1) g_1 g_2 g_3
//! ```
//!
//! so with `D = Δ_{1,2} Δ_{1,3} Δ_{2,3}` the discriminant `T² + 4D` equals
//! `(q g_1 g_2 g_3)²` and the prevalence roots are `1/2 ± T / (2 √disc)`.
//! Every coordinate of the two solutions has the form `a + b √disc` with `a`
//! and `b` rational in the sketch frequencies:
//!
//! ```text
//! P_α     = 1/2 + s T / (2 √disc)
//! P_{i,β} = f_{i,β} + T / (2 Δ_{j,k}) + s √disc / (2 Δ_{j,k})
//! P_{i,α} = 1 − f_{i,β} − T / (2 Δ_{j,k}) + s √disc / (2 Δ_{j,k})
//! ```
//!
//! where `s = ±1` selects the root. The two solutions are sister points.

use std::cmp::Ordering;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::{EvaluationPoint, COORDINATE_NAMES};
use crate::numerics::{rational_sqrt, Rational, Root, Scalar};
use crate::sketch::{
    complement_pair, DecisionSketch, FrequencyVector, SketchStatistics, NUM_CLASSIFIERS, PAIRS,
};

/// Majority-voting estimate. Accuracies are absent when the majority
/// prevalence of their label is zero.
#[derive(Debug, Clone, PartialEq)]
pub struct MvEstimate<S> {
    pub prevalence: S,
    pub acc: [[Option<S>; 2]; NUM_CLASSIFIERS],
}

pub fn mv_evaluate<S: Scalar>(sketch: &DecisionSketch) -> Result<MvEstimate<S>> {
    Ok(mv_evaluate_frequencies(&sketch.frequencies::<S>()?))
}

pub fn mv_evaluate_frequencies<S: Scalar>(freqs: &FrequencyVector<S>) -> MvEstimate<S> {
    let f = |key: &str| freqs.by_key(key).clone();
    let prev_a = f("aaa") + f("aab") + f("aba") + f("baa");
    let prev_b = S::one() - prev_a.clone();
    // The lone dissenter in each majority pattern.
    let dissent_a = ["baa", "aba", "aab"];
    let dissent_b = ["abb", "bab", "bba"];
    let ratio = |key: &str, prev: &S| {
        (!prev.is_negligible() || (S::is_exact() && *prev != S::zero()))
            .then(|| S::one() - f(key) / prev.clone())
    };
    let acc = std::array::from_fn(|i| {
        [
            if prev_a == S::zero() { None } else { ratio(dissent_a[i], &prev_a) },
            if prev_b == S::zero() { None } else { ratio(dissent_b[i], &prev_b) },
        ]
    });
    MvEstimate {
        prevalence: prev_a,
        acc,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FailureKind {
    EmptyVariety,
    ComplexSolution,
    OutsideUnitCube,
    UnresolvedSquareRoot,
}

impl FailureKind {
    pub const ALL: [FailureKind; 4] = [
        FailureKind::EmptyVariety,
        FailureKind::ComplexSolution,
        FailureKind::OutsideUnitCube,
        FailureKind::UnresolvedSquareRoot,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FailureKind::EmptyVariety => "EmptyVariety",
            FailureKind::ComplexSolution => "ComplexSolution",
            FailureKind::OutsideUnitCube => "OutsideUnitCube",
            FailureKind::UnresolvedSquareRoot => "UnresolvedSquareRoot",
        }
    }
}

/// A coordinate of a candidate point that left the unit interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OffendingCoordinate {
    pub point: usize,
    pub coordinate: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FailureMode {
    /// Some Δ vanishes, or the discriminant is zero: no finite solution.
    EmptyVariety {
        zero_deltas: Vec<(usize, usize)>,
        zero_discriminant: bool,
    },
    ComplexSolution {
        discriminant: f64,
    },
    OutsideUnitCube {
        candidates: [EvaluationPoint<f64>; 2],
        offending: Vec<OffendingCoordinate>,
    },
    /// Exact mode only: the discriminant is not the square of a rational.
    UnresolvedSquareRoot {
        radicand: String,
        candidates: [EvaluationPoint<f64>; 2],
    },
}

impl FailureMode {
    pub fn kind(&self) -> FailureKind {
        match self {
            FailureMode::EmptyVariety { .. } => FailureKind::EmptyVariety,
            FailureMode::ComplexSolution { .. } => FailureKind::ComplexSolution,
            FailureMode::OutsideUnitCube { .. } => FailureKind::OutsideUnitCube,
            FailureMode::UnresolvedSquareRoot { .. } => FailureKind::UnresolvedSquareRoot,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EvaluationOutcome<S> {
    /// Both variety points, ascending prevalence (ties by `P_{1,α}`).
    Points([EvaluationPoint<S>; 2]),
    Failure(FailureMode),
}

/// Radicand values behind an evaluation. `g_squared[i] = disc / Δ_{j,k}²`,
/// identical to `Δ_{i,j} Δ_{i,k} / (Δ_{j,k} q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Radicands<S> {
    pub discriminant: S,
    pub prevalence_product: Option<S>,
    pub g_squared: Option<[S; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndependentEvaluation<S> {
    pub outcome: EvaluationOutcome<S>,
    pub radicands: Option<Radicands<S>>,
    /// Float approximations of the two real solutions, whenever they exist
    /// (also for cube and square-root failures).
    pub candidates: Option<[EvaluationPoint<f64>; 2]>,
    /// True when exact rational points are returned.
    pub exact: bool,
}

impl<S: Scalar> IndependentEvaluation<S> {
    pub fn points(&self) -> Option<&[EvaluationPoint<S>; 2]> {
        match &self.outcome {
            EvaluationOutcome::Points(p) => Some(p),
            EvaluationOutcome::Failure(_) => None,
        }
    }

    pub fn failure(&self) -> Option<&FailureMode> {
        match &self.outcome {
            EvaluationOutcome::Points(_) => None,
            EvaluationOutcome::Failure(f) => Some(f),
        }
    }

    /// Real, inside the unit cube, and (in exact mode) rational.
    pub fn is_seemingly_correct(&self) -> bool {
        self.points().is_some()
    }
}

/// `a + b √d` with exact coefficients.
#[derive(Debug, Clone)]
struct Surd<S> {
    a: S,
    b: S,
}

fn sign<S: Scalar>(x: &S) -> Ordering {
    x.partial_cmp(&S::zero()).unwrap_or(Ordering::Equal)
}

impl<S: Scalar> Surd<S> {
    /// Exact sign of `a + b √d`, `d ≥ 0`.
    fn sign(&self, d: &S) -> Ordering {
        let sa = sign(&self.a);
        let sb = if *d == S::zero() { Ordering::Equal } else { sign(&self.b) };
        match (sa, sb) {
            (s, Ordering::Equal) => s,
            (Ordering::Equal, s) => s,
            (x, y) if x == y => x,
            _ => {
                let lhs = self.a.clone() * self.a.clone();
                let rhs = self.b.clone() * self.b.clone() * d.clone();
                match lhs.partial_cmp(&rhs).unwrap_or(Ordering::Equal) {
                    Ordering::Greater => sa,
                    Ordering::Less => sb,
                    Ordering::Equal => Ordering::Equal,
                }
            }
        }
    }

    fn in_unit_interval(&self, d: &S, approx: f64) -> bool {
        if S::is_exact() {
            let upper = Surd {
                a: S::one() - self.a.clone(),
                b: -self.b.clone(),
            };
            self.sign(d) != Ordering::Less && upper.sign(d) != Ordering::Less
        } else {
            S::from_f64_lossy(approx).in_unit_interval()
        }
    }

    fn value(&self, root: &S) -> S {
        self.a.clone() + self.b.clone() * root.clone()
    }

    fn approx(&self, root: f64) -> f64 {
        self.a.to_f64() + self.b.to_f64() * root
    }
}

/// Coordinates of the solution with root sign `s`, in
/// [`EvaluationPoint::coords`] order.
fn solution_surds<S: Scalar>(st: &SketchStatistics<S>, disc: &S, s: &S) -> [Surd<S>; 7] {
    let t = st.triple_delta.clone();
    let two = S::from_ratio(2, 1);
    let prevalence = Surd {
        a: S::half(),
        b: s.clone() * t.clone() / (two.clone() * disc.clone()),
    };
    let mut out: Vec<Surd<S>> = vec![prevalence];
    for i in 0..NUM_CLASSIFIERS {
        let djk = st.delta[complement_pair(i)].clone();
        let fb = st.f_beta(i).clone();
        let shift = t.clone() / (two.clone() * djk.clone());
        let b = s.clone() / (two.clone() * djk);
        out.push(Surd {
            a: S::one() - fb.clone() - shift.clone(),
            b: b.clone(),
        });
        out.push(Surd { a: fb + shift, b });
    }
    out.try_into().map_err(|_| ()).expect("seven coordinates")
}

fn canonical_order<S: Scalar>(mut pts: [EvaluationPoint<S>; 2]) -> [EvaluationPoint<S>; 2] {
    let key = |p: &EvaluationPoint<S>| (p.prevalence.clone(), p.acc[0][0].clone());
    if key(&pts[1]) < key(&pts[0]) {
        pts.swap(0, 1);
    }
    pts
}

fn canonical_order_f64(mut pts: [EvaluationPoint<f64>; 2]) -> [EvaluationPoint<f64>; 2] {
    if (pts[1].prevalence, pts[1].acc[0][0]) < (pts[0].prevalence, pts[0].acc[0][0]) {
        pts.swap(0, 1);
    }
    pts
}

/// Independent evaluation of a sketch: the two-point variety or the failure
/// mode that rules it out.
pub fn independent_evaluate<S: Scalar>(sketch: &DecisionSketch) -> Result<IndependentEvaluation<S>> {
    Ok(independent_evaluate_frequencies(&sketch.frequencies::<S>()?))
}

pub fn independent_evaluate_frequencies<S: Scalar>(freqs: &FrequencyVector<S>) -> IndependentEvaluation<S> {
    let st = SketchStatistics::from_frequencies(freqs);
    evaluate_statistics(&st)
}

pub fn evaluate_statistics<S: Scalar>(st: &SketchStatistics<S>) -> IndependentEvaluation<S> {
    let failure = |mode: FailureMode, radicands, candidates| IndependentEvaluation {
        outcome: EvaluationOutcome::Failure(mode),
        radicands,
        candidates,
        exact: false,
    };

    let zero_deltas: Vec<(usize, usize)> = PAIRS
        .iter()
        .zip(&st.delta)
        .filter(|(_, d)| d.is_negligible())
        .map(|(&(i, j), _)| (i + 1, j + 1))
        .collect();
    if !zero_deltas.is_empty() {
        return failure(
            FailureMode::EmptyVariety {
                zero_deltas,
                zero_discriminant: false,
            },
            None,
            None,
        );
    }

    let d_prod = st.delta.iter().cloned().fold(S::one(), |a, b| a * b);
    let t = st.triple_delta.clone();
    let disc = t.clone() * t + S::from_ratio(4, 1) * d_prod.clone();
    if disc.is_negligible() {
        return failure(
            FailureMode::EmptyVariety {
                zero_deltas: Vec::new(),
                zero_discriminant: true,
            },
            Some(Radicands {
                discriminant: disc,
                prevalence_product: None,
                g_squared: None,
            }),
            None,
        );
    }
    let root = disc.sqrt_root();
    let radicands = Radicands {
        discriminant: disc.clone(),
        prevalence_product: Some(d_prod / disc.clone()),
        g_squared: Some(std::array::from_fn(|i| {
            let djk = st.delta[complement_pair(i)].clone();
            disc.clone() / (djk.clone() * djk)
        })),
    };
    if root == Root::Negative {
        return failure(
            FailureMode::ComplexSolution {
                discriminant: disc.to_f64(),
            },
            Some(radicands),
            None,
        );
    }

    let root_f = disc.to_f64().max(0.0).sqrt();
    let signs = [S::one(), -S::one()];
    let surds = signs.clone().map(|s| solution_surds(st, &disc, &s));
    let approx: [EvaluationPoint<f64>; 2] =
        std::array::from_fn(|k| EvaluationPoint::from_coords(std::array::from_fn(|c| surds[k][c].approx(root_f))));

    let mut offending = Vec::new();
    for (k, point) in surds.iter().enumerate() {
        for (c, surd) in point.iter().enumerate() {
            let value = surd.approx(root_f);
            if !surd.in_unit_interval(&disc, value) {
                offending.push(OffendingCoordinate {
                    point: k,
                    coordinate: COORDINATE_NAMES[c],
                    value,
                });
            }
        }
    }
    let candidates = canonical_order_f64(approx);
    if !offending.is_empty() {
        // Indices refer to the canonical order of the candidates.
        let swapped = candidates[0] != EvaluationPoint::from_coords(std::array::from_fn(|c| surds[0][c].approx(root_f)));
        for o in &mut offending {
            if swapped {
                o.point = 1 - o.point;
            }
        }
        return failure(
            FailureMode::OutsideUnitCube {
                candidates: candidates.clone(),
                offending,
            },
            Some(radicands),
            Some(candidates),
        );
    }

    match root {
        Root::Exact(r) => {
            let pts = surds.map(|p| EvaluationPoint::from_coords(std::array::from_fn(|c| p[c].value(&r))));
            IndependentEvaluation {
                outcome: EvaluationOutcome::Points(canonical_order(pts)),
                radicands: Some(radicands),
                candidates: Some(candidates),
                exact: S::is_exact(),
            }
        }
        Root::Irrational => failure(
            FailureMode::UnresolvedSquareRoot {
                radicand: disc.to_text(),
                candidates: candidates.clone(),
            },
            Some(radicands),
            Some(candidates),
        ),
        Root::Negative => unreachable!("handled above"),
    }
}

/// The other point of the independent variety:
/// `P_α → 1 − P_α`, `P_{i,α} → 1 − P_{i,β}`, `P_{i,β} → 1 − P_{i,α}`.
pub fn sister_point<S: Scalar>(p: &EvaluationPoint<S>) -> EvaluationPoint<S> {
    EvaluationPoint::new(
        S::one() - p.prevalence.clone(),
        std::array::from_fn(|i| {
            [
                S::one() - p.acc[i][1].clone(),
                S::one() - p.acc[i][0].clone(),
            ]
        }),
    )
}

/// Whether `x` is the square of a rational. Negative inputs are an error so
/// they can be told apart from irrational roots.
pub fn is_rational_square(x: &Rational) -> Result<bool> {
    match rational_sqrt(x) {
        Root::Exact(_) => Ok(true),
        Root::Irrational => Ok(false),
        Root::Negative => Err(Error::NegativeRadicand(x.to_text())),
    }
}

/// Optional side information used to pick one of the two variety points.
#[derive(Debug, Clone, PartialEq)]
pub enum DecodeHint {
    /// Keep the point where at least two classifiers have
    /// `P_{i,α} + P_{i,β} > 1`.
    MajorityCompetent,
    /// Keep the point whose prevalence is closer to the given value.
    PrevalenceNear(f64),
}

impl std::str::FromStr for DecodeHint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "assume-majority-competent" || s == "majority-competent" {
            return Ok(DecodeHint::MajorityCompetent);
        }
        for prefix in ["assume-prevalence-near=", "prevalence-near=", "assume-prevalence-near:"] {
            if let Some(v) = s.strip_prefix(prefix) {
                return Ok(DecodeHint::PrevalenceNear(f64::parse_text(v)?));
            }
        }
        Err(Error::InvalidConfig(format!("unknown decode hint '{s}'")))
    }
}

/// Applies a decoding hint; returns the kept points (one, or both on a tie).
pub fn decode<S: Scalar>(points: &[EvaluationPoint<S>; 2], hint: &DecodeHint) -> Vec<EvaluationPoint<S>> {
    match hint {
        DecodeHint::MajorityCompetent => points
            .iter()
            .filter(|p| (0..NUM_CLASSIFIERS).filter(|&i| p.excess(i) > S::zero()).count() >= 2)
            .cloned()
            .collect(),
        DecodeHint::PrevalenceNear(x) => {
            let d0 = (points[0].prevalence.to_f64() - x).abs();
            let d1 = (points[1].prevalence.to_f64() - x).abs();
            match d0.partial_cmp(&d1) {
                Some(Ordering::Less) => vec![points[0].clone()],
                Some(Ordering::Greater) => vec![points[1].clone()],
                _ => points.to_vec(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::tests::{arb_point, q, tp1};
    use crate::forward::{correlated_trio_frequencies, independent_frequencies, CorrelationSet};
    use crate::sketch::{DecisionEvent, Label};
    use proptest::prelude::*;

    fn sketch_of(counts: [u64; 8]) -> DecisionSketch {
        DecisionSketch::from_counts(counts).unwrap()
    }

    #[test]
    fn mv_examples() {
        let mv = mv_evaluate::<Rational>(&sketch_of([5, 0, 0, 0, 0, 0, 0, 0])).unwrap();
        assert_eq!(mv.prevalence, q("1"));
        for i in 0..3 {
            assert_eq!(mv.acc[i][0], Some(q("1")));
            assert_eq!(mv.acc[i][1], None);
        }

        let mv = mv_evaluate::<Rational>(&sketch_of([1; 8])).unwrap();
        assert_eq!(mv.prevalence, q("1/2"));
        for i in 0..3 {
            assert_eq!(mv.acc[i], [Some(q("3/4")), Some(q("3/4"))]);
        }

        let f = independent_frequencies(&tp1());
        let mv = mv_evaluate_frequencies(&f);
        let oracle = f.by_key("aaa").clone() + f.by_key("aab").clone() + f.by_key("aba").clone() + f.by_key("baa").clone();
        assert_eq!(mv.prevalence, oracle);
        assert_ne!(mv.prevalence, q("3/5"));
        assert!(matches!(mv_evaluate::<f64>(&DecisionSketch::new()), Err(Error::EmptySketch)));
    }

    #[test]
    fn tp1_recovery() {
        let f = independent_frequencies(&tp1());
        let st = SketchStatistics::from_frequencies(&f);
        assert_eq!(st.delta[0], q("63/1250"));
        assert_eq!(st.triple_delta, q("63/12500"));
        let ev = independent_evaluate_frequencies(&f);
        let r = ev.radicands.as_ref().unwrap();
        assert_eq!(r.discriminant, q("99225/156250000"));
        assert_eq!(rational_sqrt(&r.discriminant), Root::Exact(q("315/12500")));
        assert_eq!(r.prevalence_product, Some(q("6/25")));
        let pts = ev.points().expect("points");
        assert_eq!(pts[0].prevalence, q("2/5"));
        assert_eq!(pts[1], tp1());
        assert_eq!(pts[0], sister_point(&tp1()));
        assert!(ev.exact);
    }

    #[test]
    fn perfect_classifiers_tie() {
        let ev = independent_evaluate::<Rational>(&sketch_of([1, 0, 0, 0, 0, 0, 0, 1])).unwrap();
        let pts = ev.points().unwrap();
        assert_eq!(pts[0].prevalence, q("1/2"));
        assert_eq!(pts[1].prevalence, q("1/2"));
        assert_eq!(pts[1], sister_point(&pts[0]));
        let ones = EvaluationPoint::new(q("1/2"), std::array::from_fn(|_| [q("1"), q("1")]));
        let zeros = EvaluationPoint::new(q("1/2"), std::array::from_fn(|_| [q("0"), q("0")]));
        assert_eq!(pts, &[zeros, ones]);
    }

    #[test]
    fn uniform_sketch_is_empty_variety() {
        let ev = independent_evaluate::<Rational>(&sketch_of([1; 8])).unwrap();
        match ev.failure() {
            Some(FailureMode::EmptyVariety { zero_deltas, .. }) => assert_eq!(zero_deltas.len(), 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn correlated_tp1_is_flagged() {
        let corr = CorrelationSet::zero().with_pair(0, 1, Label::Alpha, q("1/20"));
        let f = correlated_trio_frequencies(&tp1(), &corr).unwrap();
        let ev = independent_evaluate_frequencies(&f);
        let kind = ev.failure().map(|m| m.kind());
        assert!(
            matches!(kind, Some(FailureKind::UnresolvedSquareRoot | FailureKind::OutsideUnitCube)),
            "{kind:?}"
        );
    }

    #[test]
    fn negative_discriminant_is_complex() {
        // All three deltas negative: T^2 + 4D = 4/2401 - 8/2401 < 0.
        let s = sketch_of([0, 1, 1, 1, 1, 2, 1, 0]);
        let st = s.statistics::<Rational>().unwrap();
        assert_eq!(st.delta, [q("-5/49"), q("-2/49"), q("-5/49")]);
        assert_eq!(st.triple_delta, q("-2/343"));
        let ev = independent_evaluate::<Rational>(&s).unwrap();
        assert_eq!(ev.radicands.as_ref().unwrap().discriminant, q("-4/2401"));
        match ev.failure() {
            Some(FailureMode::ComplexSolution { discriminant }) => assert!(*discriminant < 0.0),
            other => panic!("{other:?}"),
        }
        assert!(ev.candidates.is_none());
        let ev = independent_evaluate::<f64>(&s).unwrap();
        assert_eq!(ev.failure().unwrap().kind(), FailureKind::ComplexSolution);
    }

    #[test]
    fn sister_examples() {
        let s = sister_point(&tp1());
        assert_eq!(
            s,
            EvaluationPoint::new(q("2/5"), [[q("1/5"), q("1/10")], [q("2/5"), q("3/10")], [q("3/10"), q("1/5")]])
        );
        assert_eq!(sister_point(&s), tp1());
        let fixed = EvaluationPoint::new(q("1/2"), std::array::from_fn(|_| [q("1/2"), q("1/2")]));
        assert_eq!(sister_point(&fixed), fixed);
        let not_fixed = EvaluationPoint::new(q("1/2"), std::array::from_fn(|_| [q("3/5"), q("3/5")]));
        assert_ne!(sister_point(&not_fixed), not_fixed);
    }

    #[test]
    fn rational_square_examples() {
        assert!(is_rational_square(&q("99225/156250000")).unwrap());
        assert!(!is_rational_square(&q("2")).unwrap());
        assert!(is_rational_square(&q("0")).unwrap());
        assert!(matches!(is_rational_square(&q("-4")), Err(Error::NegativeRadicand(_))));
    }

    #[test]
    fn decoding_hints() {
        let pts = [sister_point(&tp1()), tp1()];
        assert_eq!(decode(&pts, &DecodeHint::MajorityCompetent), vec![tp1()]);
        assert_eq!(decode(&pts, &DecodeHint::PrevalenceNear(0.35)), vec![sister_point(&tp1())]);
        assert_eq!(decode(&pts, &DecodeHint::PrevalenceNear(0.5)).len(), 2);
        assert_eq!("assume-majority-competent".parse::<DecodeHint>().unwrap(), DecodeHint::MajorityCompetent);
        assert_eq!("assume-prevalence-near=0.7".parse::<DecodeHint>().unwrap(), DecodeHint::PrevalenceNear(0.7));
        assert!("guess".parse::<DecodeHint>().is_err());
    }

    #[test]
    fn blind_spot_generating_point_is_empty_variety() {
        let mut p = tp1();
        p.acc[2] = [q("3/5"), q("2/5")];
        let ev = independent_evaluate_frequencies(&independent_frequencies(&p));
        match ev.failure() {
            Some(FailureMode::EmptyVariety { zero_deltas, .. }) => {
                assert_eq!(zero_deltas, &vec![(1, 3), (2, 3)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn float_mode_tp1() {
        let ev = independent_evaluate_frequencies(&independent_frequencies(&tp1().to_f64()));
        let pts = ev.points().unwrap();
        assert!(pts[1].distance_to(&tp1().to_f64()) < 1e-12);
        assert!(!ev.exact);
    }

    fn arb_sketch() -> impl Strategy<Value = DecisionSketch> {
        proptest::array::uniform8(0u64..40)
            .prop_filter("nonempty", |c| c.iter().sum::<u64>() > 0)
            .prop_map(|c| DecisionSketch::from_counts(c).unwrap())
    }

    proptest! {
        #[test]
        fn exact_recovery(p in arb_point()) {
            let interior = |x: &Rational| *x > q("0") && *x < q("1");
            prop_assume!(interior(&p.prevalence) && p.prevalence != q("1/2"));
            prop_assume!(p.acc.iter().flatten().all(interior));
            prop_assume!((0..3).all(|i| p.excess(i) != q("0")));
            let ev = independent_evaluate_frequencies(&independent_frequencies(&p));
            let pts = ev.points().expect("independent sketch must be solvable");
            prop_assert!(pts.contains(&p));
            prop_assert!(pts.contains(&sister_point(&p)));
            prop_assert_eq!(pts[0].prevalence.clone() + pts[1].prevalence.clone(), q("1"));
        }

        #[test]
        fn roots_are_sisters_and_sum_to_one(s in arb_sketch()) {
            let ev = independent_evaluate::<Rational>(&s).unwrap();
            if let Some(pts) = ev.points() {
                prop_assert_eq!(pts[0].prevalence.clone() + pts[1].prevalence.clone(), q("1"));
                prop_assert_eq!(sister_point(&pts[0]), pts[1].clone());
                // The solution reproduces the sketch exactly.
                prop_assert_eq!(independent_frequencies(&pts[0]), s.frequencies::<Rational>().unwrap());
            }
            if let Some(c) = &ev.candidates {
                prop_assert!((c[0].prevalence + c[1].prevalence - 1.0).abs() < 1e-9);
            }
        }

        #[test]
        fn mv_is_always_seemingly_correct(s in arb_sketch()) {
            let mv = mv_evaluate::<Rational>(&s).unwrap();
            let unit = |x: &Rational| *x >= q("0") && *x <= q("1");
            prop_assert!(unit(&mv.prevalence));
            for a in mv.acc.iter().flatten().flatten() {
                prop_assert!(unit(a));
            }
        }

        #[test]
        fn no_false_square_root_alarm(p in arb_point()) {
            let ev = independent_evaluate_frequencies(&independent_frequencies(&p));
            prop_assert_ne!(ev.failure().map(|m| m.kind()), Some(FailureKind::UnresolvedSquareRoot));
        }
    }

    #[test]
    fn event_helpers_are_consistent() {
        // mv dissent patterns are the lone-dissenter keys.
        for (i, key) in ["baa", "aba", "aab"].iter().enumerate() {
            let e = DecisionEvent::parse_key(key).unwrap();
            assert_eq!(e.vote(i), Label::Beta);
        }
    }
}
