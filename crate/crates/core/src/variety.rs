//! The correlation-free containing variety of a sketch.
//!
//! With shifted accuracies `π_{i,ℓ} = P_{i,ℓ} − f_{i,ℓ}` the variety is cut
//! out by
//!
//! ```text
//! r_i    = P_α π_{i,α} − (1 − P_α) π_{i,β}
//! s_{ij} = π_{i,α} π_{j,β} − π_{i,β} π_{j,α}
//! ```
//!
//! Away from `P_α = 1` it is the 4-parameter surface
//! `(P_α, f_{i,α} + t_i, f_{i,β} + ρ t_i)` with `ρ = P_α / (1 − P_α)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::forward::EvaluationPoint;
use crate::numerics::{golden_section_min, Scalar};
use crate::sketch::{DecisionSketch, FrequencyVector, SketchStatistics, NUM_CLASSIFIERS, PAIRS};

/// `π_{i,ℓ} = P_{i,ℓ} − f_{i,ℓ}`, per classifier and label.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedCoordinates<S> {
    pub pi: [[S; 2]; NUM_CLASSIFIERS],
}

impl<S: Scalar> ShiftedCoordinates<S> {
    pub fn new(point: &EvaluationPoint<S>, stats: &SketchStatistics<S>) -> Self {
        ShiftedCoordinates {
            pi: std::array::from_fn(|i| {
                [
                    point.acc[i][0].clone() - stats.f_label[i][0].clone(),
                    point.acc[i][1].clone() - stats.f_label[i][1].clone(),
                ]
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarietyResiduals<S> {
    pub linear: [S; 3],
    /// In pair order (1,2), (1,3), (2,3).
    pub cross: [S; 3],
}

impl<S: Scalar> VarietyResiduals<S> {
    pub fn is_zero(&self) -> bool {
        self.linear.iter().chain(&self.cross).all(|r| *r == S::zero())
    }

    pub fn max_abs(&self) -> f64 {
        self.linear
            .iter()
            .chain(&self.cross)
            .map(|r| r.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

pub fn residuals<S: Scalar>(point: &EvaluationPoint<S>, sketch: &DecisionSketch) -> Result<VarietyResiduals<S>> {
    Ok(residuals_from_frequencies(point, &sketch.frequencies::<S>()?))
}

pub fn residuals_from_frequencies<S: Scalar>(
    point: &EvaluationPoint<S>,
    freqs: &FrequencyVector<S>,
) -> VarietyResiduals<S> {
    let stats = SketchStatistics::from_frequencies(freqs);
    let ShiftedCoordinates { pi } = ShiftedCoordinates::new(point, &stats);
    let pa = point.prevalence.clone();
    let pb = S::one() - pa.clone();
    VarietyResiduals {
        linear: std::array::from_fn(|i| pa.clone() * pi[i][0].clone() - pb.clone() * pi[i][1].clone()),
        cross: PAIRS.map(|(i, j)| pi[i][0].clone() * pi[j][1].clone() - pi[i][1].clone() * pi[j][0].clone()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionSettings {
    pub grid: usize,
    pub refinements: usize,
}

impl Default for ProjectionSettings {
    fn default() -> Self {
        ProjectionSettings {
            grid: 512,
            refinements: 40,
        }
    }
}

/// Which part of the parametrization produced the minimum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectionBranch {
    Interior,
    /// `P_α = 0`: `π_{i,β} = 0`, `π_{i,α}` free.
    PrevalenceZero,
    /// `P_α = 1`: `π_{i,α} = 0`, `π_{i,β}` free.
    PrevalenceOne,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarietyProjection {
    pub closest_point: EvaluationPoint<f64>,
    pub distance: f64,
    pub p_alpha_star: f64,
    /// Surface parameters; on the `P_α = 1` branch these are the free
    /// `π_{i,β}` values instead.
    pub t: [f64; 3],
    pub branch: ProjectionBranch,
    pub closest_in_unit_cube: bool,
}

struct Offsets {
    q0: f64,
    /// `(a_i, b_i)`: the input's shifted accuracies.
    ab: [(f64, f64); 3],
}

impl Offsets {
    fn new(point: &EvaluationPoint<f64>, stats: &SketchStatistics<f64>) -> Self {
        Offsets {
            q0: point.prevalence,
            ab: std::array::from_fn(|i| {
                (
                    point.acc[i][0] - stats.f_label[i][0],
                    point.acc[i][1] - stats.f_label[i][1],
                )
            }),
        }
    }

    fn optimal_t(&self, p: f64) -> [f64; 3] {
        let rho = p / (1.0 - p);
        self.ab.map(|(a, b)| (a + rho * b) / (1.0 + rho * rho))
    }

    /// Squared distance to the surface slice at prevalence `p`, minimized
    /// over `t` in closed form.
    fn slice_distance_sq(&self, p: f64) -> f64 {
        let rho = p / (1.0 - p);
        let d0 = self.q0 - p;
        d0 * d0
            + self
                .ab
                .iter()
                .map(|&(a, b)| {
                    let e = b - rho * a;
                    e * e / (1.0 + rho * rho)
                })
                .sum::<f64>()
    }

    fn limit_zero_sq(&self) -> f64 {
        self.q0 * self.q0 + self.ab.iter().map(|&(_, b)| b * b).sum::<f64>()
    }

    fn limit_one_sq(&self) -> f64 {
        let d0 = self.q0 - 1.0;
        d0 * d0 + self.ab.iter().map(|&(a, _)| a * a).sum::<f64>()
    }
}

pub fn project(
    point: &EvaluationPoint<f64>,
    sketch: &DecisionSketch,
    settings: ProjectionSettings,
) -> Result<VarietyProjection> {
    project_frequencies(point, &sketch.frequencies::<f64>()?, settings)
}

/// Euclidean projection onto the containing variety: grid scan over `P_α`,
/// golden-section refinement on the best bracket, closed-form `t`.
pub fn project_frequencies(
    point: &EvaluationPoint<f64>,
    freqs: &FrequencyVector<f64>,
    settings: ProjectionSettings,
) -> Result<VarietyProjection> {
    if settings.grid < 3 {
        return Err(Error::InvalidConfig(format!("grid must be at least 3, got {}", settings.grid)));
    }
    let stats = SketchStatistics::from_frequencies(freqs);
    let off = Offsets::new(point, &stats);

    let lo = 1.0 / settings.grid as f64;
    let hi = 1.0 - lo;
    let step = (hi - lo) / (settings.grid - 1) as f64;
    let xs = |k: usize| if k + 1 == settings.grid { hi } else { lo + k as f64 * step };
    let (best_k, _) = (0..settings.grid)
        .map(|k| (k, off.slice_distance_sq(xs(k))))
        .fold((0, f64::INFINITY), |acc, (k, v)| if v < acc.1 { (k, v) } else { acc });
    let a = xs(best_k.saturating_sub(1));
    let b = xs((best_k + 1).min(settings.grid - 1));
    let (mut p_star, mut best) = golden_section_min(|p| off.slice_distance_sq(p), a, b, settings.refinements)?;
    let grid_best = off.slice_distance_sq(xs(best_k));
    if grid_best < best {
        p_star = xs(best_k);
        best = grid_best;
    }

    let mut branch = ProjectionBranch::Interior;
    let (z, o) = (off.limit_zero_sq(), off.limit_one_sq());
    if z < best {
        branch = ProjectionBranch::PrevalenceZero;
        best = z;
        p_star = 0.0;
    }
    if o < best {
        branch = ProjectionBranch::PrevalenceOne;
        best = o;
        p_star = 1.0;
    }

    let (t, closest_point) = match branch {
        ProjectionBranch::Interior => {
            let t = off.optimal_t(p_star);
            let rho = p_star / (1.0 - p_star);
            let acc = std::array::from_fn(|i| [stats.f_label[i][0] + t[i], stats.f_label[i][1] + rho * t[i]]);
            (t, EvaluationPoint::new(p_star, acc))
        }
        ProjectionBranch::PrevalenceZero => {
            let t = off.ab.map(|(a, _)| a);
            let acc = std::array::from_fn(|i| [stats.f_label[i][0] + t[i], stats.f_label[i][1]]);
            (t, EvaluationPoint::new(0.0, acc))
        }
        ProjectionBranch::PrevalenceOne => {
            let t = off.ab.map(|(_, b)| b);
            let acc = std::array::from_fn(|i| [stats.f_label[i][0], stats.f_label[i][1] + t[i]]);
            (t, EvaluationPoint::new(1.0, acc))
        }
    };
    let closest_in_unit_cube = closest_point.coords().iter().all(|&c| c.in_unit_interval());
    Ok(VarietyProjection {
        closest_point,
        distance: best.max(0.0).sqrt(),
        p_alpha_star: p_star,
        t,
        branch,
        closest_in_unit_cube,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierBlindSpot<S> {
    pub pi: [S; 2],
    pub excess: S,
    pub pi_flagged: [bool; 2],
    pub excess_flagged: bool,
}

/// Proximity of a point to the blind spots of first-order correlation
/// corrections: `π_{i,ℓ} ≈ 0` and `g_i = P_{i,α} + P_{i,β} − 1 ≈ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlindSpotReport<S> {
    pub threshold: S,
    pub classifiers: [ClassifierBlindSpot<S>; NUM_CLASSIFIERS],
}

impl<S: Scalar> BlindSpotReport<S> {
    pub fn any_flagged(&self) -> bool {
        self.classifiers
            .iter()
            .any(|c| c.excess_flagged || c.pi_flagged.iter().any(|&f| f))
    }
}

pub fn blind_spot_report<S: Scalar>(
    point: &EvaluationPoint<S>,
    freqs: &FrequencyVector<S>,
    threshold: &S,
) -> BlindSpotReport<S> {
    let stats = SketchStatistics::from_frequencies(freqs);
    let shifted = ShiftedCoordinates::new(point, &stats);
    let near = |x: &S| x.abs_val() < *threshold;
    BlindSpotReport {
        threshold: threshold.clone(),
        classifiers: std::array::from_fn(|i| {
            let pi = shifted.pi[i].clone();
            let excess = point.excess(i);
            ClassifierBlindSpot {
                pi_flagged: [near(&pi[0]), near(&pi[1])],
                excess_flagged: near(&excess),
                pi,
                excess,
            }
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluators::independent_evaluate_frequencies;
    use crate::forward::tests::{arb_point, q, tp1};
    use crate::forward::{
        correlated_trio_frequencies, correlated_trio_frequencies_unchecked, independent_frequencies, CorrelationSet,
    };
    use crate::numerics::Rational;
    use crate::sketch::Label;
    use proptest::prelude::*;

    fn corr_strategy() -> impl Strategy<Value = CorrelationSet<Rational>> {
        proptest::array::uniform8(-20i64..=20).prop_map(|v| {
            let r = |k: usize| Rational::new(v[k].into(), 400.into());
            CorrelationSet {
                pair: std::array::from_fn(|p| [r(2 * p), r(2 * p + 1)]),
                triple: [r(6), r(7)],
            }
        })
    }

    #[test]
    fn marginal_point_is_on_variety() {
        let f = independent_frequencies(&tp1());
        let st = SketchStatistics::from_frequencies(&f);
        let p = EvaluationPoint::new(q("1/3"), st.f_label.clone());
        assert!(residuals_from_frequencies(&p, &f).is_zero());
        let report = blind_spot_report(&p, &f, &q("1/10"));
        assert!(report.classifiers.iter().all(|c| c.pi_flagged == [true, true]));
    }

    #[test]
    fn tp1_blind_spot_excess() {
        let f = independent_frequencies(&tp1());
        let report = blind_spot_report(&tp1(), &f, &q("1/10"));
        let g: Vec<Rational> = report.classifiers.iter().map(|c| c.excess.clone()).collect();
        assert_eq!(g, vec![q("7/10"), q("3/10"), q("1/2")]);
        assert!(report.classifiers.iter().all(|c| !c.excess_flagged));
        // Under independence π_{i,α} = (1 − P_α) g_i and π_{i,β} = P_α g_i.
        for (i, c) in report.classifiers.iter().enumerate() {
            assert_eq!(c.pi[0], q("2/5") * g[i].clone());
            assert_eq!(c.pi[1], q("3/5") * g[i].clone());
        }
        let mut p = tp1();
        p.acc[1] = [q("3/5"), q("2/5")];
        let report = blind_spot_report(&p, &independent_frequencies(&p), &q("1/10"));
        assert!(report.classifiers[1].excess_flagged);
        assert!(!report.classifiers[0].excess_flagged);
    }

    #[test]
    fn off_variety_point_has_residuals() {
        let f = independent_frequencies(&tp1());
        let mut p = tp1();
        p.prevalence = q("1/2");
        let r = residuals_from_frequencies(&p, &f);
        assert!(!r.is_zero());
        assert!(r.max_abs() > 0.0);
    }

    #[test]
    fn projection_of_variety_points_is_zero() {
        let f = independent_frequencies(&tp1()).to_f64();
        let pr = project_frequencies(&tp1().to_f64(), &f, ProjectionSettings::default()).unwrap();
        assert!(pr.distance <= 1e-12, "{}", pr.distance);
        assert!((pr.p_alpha_star - 0.6).abs() < 1e-9);
        assert_eq!(pr.branch, ProjectionBranch::Interior);
        assert!(pr.closest_in_unit_cube);
        for i in 0..3 {
            assert!((pr.t[i] - 0.4 * tp1().to_f64().excess(i)).abs() < 1e-9);
        }
    }

    #[test]
    fn projection_limit_branches() {
        let f = independent_frequencies(&tp1()).to_f64();
        let st = SketchStatistics::from_frequencies(&f);
        // On the P_α = 1 limit: π_α = 0, π_β arbitrary.
        let p = EvaluationPoint::new(1.0, std::array::from_fn(|i| [st.f_label[i][0], st.f_label[i][1] + 0.1]));
        let pr = project_frequencies(&p, &f, ProjectionSettings::default()).unwrap();
        assert!(pr.distance < 1e-3);
        let p = EvaluationPoint::new(0.0, std::array::from_fn(|i| [st.f_label[i][0] + 0.2, st.f_label[i][1]]));
        let pr = project_frequencies(&p, &f, ProjectionSettings::default()).unwrap();
        assert_eq!(pr.branch, ProjectionBranch::PrevalenceZero);
        assert!(pr.distance < 1e-12);
    }

    #[test]
    fn projection_rejects_tiny_grid() {
        let f = independent_frequencies(&tp1()).to_f64();
        let settings = ProjectionSettings { grid: 2, refinements: 10 };
        assert!(project_frequencies(&tp1().to_f64(), &f, settings).is_err());
    }

    #[test]
    fn correlated_estimate_distance_on_tp1() {
        // Real independent roots always satisfy the marginal identities, so
        // they sit on the containing variety whatever the correlation.
        let base = tp1();
        for eps in ["1/20", "1/40", "1/80"] {
            let corr = CorrelationSet::zero().with_pair(0, 1, Label::Alpha, q(eps));
            let f = correlated_trio_frequencies_unchecked(&base, &corr).to_f64();
            let ev = independent_evaluate_frequencies(&f);
            let pts = ev.candidates.expect("real roots");
            let pr = project_frequencies(&pts[1], &f, ProjectionSettings::default()).unwrap();
            assert!(pr.distance < 1e-9, "{eps}: {}", pr.distance);
        }
    }

    #[test]
    fn taylor_scaling_near_independence() {
        let base = tp1();
        let err = |eps: &str| {
            let corr = CorrelationSet::zero().with_pair(0, 1, Label::Alpha, q(eps));
            let f = correlated_trio_frequencies(&base, &corr).unwrap().to_f64();
            let ev = independent_evaluate_frequencies(&f);
            let pts = ev.candidates.expect("real roots");
            let est = pts.iter().min_by(|a, b| {
                a.distance_to(&base.to_f64()).partial_cmp(&b.distance_to(&base.to_f64())).unwrap()
            });
            (est.unwrap().acc[0][0] - 0.9).abs()
        };
        let e: Vec<f64> = ["1/200", "1/400", "1/800"].iter().map(|e| err(e)).collect();
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 2.0).abs() <= 0.4, "{e:?}");
        }
    }

    proptest! {
        #[test]
        fn containment(p in arb_point(), corr in corr_strategy()) {
            let f = match correlated_trio_frequencies(&p, &corr) {
                Ok(f) => f,
                Err(_) => return Ok(()),
            };
            prop_assert!(residuals_from_frequencies(&p, &f).is_zero());
            // Merging a sketch with itself leaves the frequencies unchanged.
            let doubled = FrequencyVector::new(f.as_array().clone().map(|x| x * q("2") / q("2")));
            prop_assert!(residuals_from_frequencies(&p, &doubled).is_zero());
            let pr = project_frequencies(&p.to_f64(), &f.to_f64(), ProjectionSettings::default()).unwrap();
            prop_assert!(pr.distance <= 1e-9, "{}", pr.distance);
        }

        #[test]
        fn closest_point_lies_on_variety(p in arb_point(), shift in proptest::array::uniform7(-0.2f64..0.2)) {
            let f = independent_frequencies(&p).to_f64();
            let mut c = p.to_f64().coords();
            for (x, s) in c.iter_mut().zip(shift) {
                *x += s;
            }
            let input = EvaluationPoint::from_coords(c);
            let pr = project_frequencies(&input, &f, ProjectionSettings::default()).unwrap();
            prop_assert!(residuals_from_frequencies(&pr.closest_point, &f).max_abs() < 1e-9);
            prop_assert!((pr.closest_point.distance_to(&input) - pr.distance).abs() < 1e-9);
        }

        #[test]
        fn inner_minimum_satisfies_first_order_conditions(
            p in arb_point(),
            shift in proptest::array::uniform7(-0.3f64..0.3),
            pa in 0.05f64..0.95,
        ) {
            let f = independent_frequencies(&p).to_f64();
            let st = SketchStatistics::from_frequencies(&f);
            let mut c = p.to_f64().coords();
            for (x, s) in c.iter_mut().zip(shift) {
                *x += s;
            }
            let off = Offsets::new(&EvaluationPoint::from_coords(c), &st);
            let t = off.optimal_t(pa);
            let rho = pa / (1.0 - pa);
            let h = 1e-6;
            for i in 0..3 {
                let (a, b) = off.ab[i];
                let obj = |ti: f64| (a - ti).powi(2) + (b - rho * ti).powi(2);
                let grad = (obj(t[i] + h) - obj(t[i] - h)) / (2.0 * h);
                let scale = (obj(t[i] + h) - obj(t[i])).abs().max(1.0) ;
                prop_assert!(grad.abs() <= 1e-4 * scale, "grad {grad}");
            }
        }

        #[test]
        fn distance_is_below_random_surface_samples(
            p in arb_point(),
            shift in proptest::array::uniform7(-0.3f64..0.3),
            samples in proptest::collection::vec((0.01f64..0.99, proptest::array::uniform3(-1.0f64..1.0)), 100),
        ) {
            let f = independent_frequencies(&p).to_f64();
            let st = SketchStatistics::from_frequencies(&f);
            let mut c = p.to_f64().coords();
            for (x, s) in c.iter_mut().zip(shift) {
                *x += s;
            }
            let input = EvaluationPoint::from_coords(c);
            let pr = project_frequencies(&input, &f, ProjectionSettings::default()).unwrap();
            for (pa, t) in samples {
                let rho = pa / (1.0 - pa);
                let s = EvaluationPoint::new(pa, std::array::from_fn(|i| [st.f_label[i][0] + t[i], st.f_label[i][1] + rho * t[i]]));
                prop_assert!(residuals_from_frequencies(&s, &f).max_abs() < 1e-12);
                prop_assert!(pr.distance <= input.distance_to(&s) + 1e-12);
            }
        }
    }
}
