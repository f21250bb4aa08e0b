//! JSON reports emitted by the command-line tool and the browser demo.
//!
//! Exact values are written as canonical `"p/q"` strings; float values as
//! JSON numbers (shortest round-trip form).

use serde_json::{json, Map, Value};

use crate::diagnostics::{platanios_from_statistics, stream_rates, PlataniosEstimates};
use crate::error::Result;
use crate::evaluators::{
    decode, evaluate_statistics, mv_evaluate_frequencies, DecodeHint, EvaluationOutcome, FailureMode,
};
use crate::forward::{
    correlated_trio_frequencies, minimal_stream_size, minimal_test_size, CorrelationSet, EvaluationPoint,
};
use crate::numerics::{Rational, Scalar, PRNG_NAME};
use crate::sketch::{DecisionSketch, FrequencyVector, SketchStatistics, NUM_CLASSIFIERS};
use crate::variety::{blind_spot_report, project_frequencies, residuals_from_frequencies, ProjectionSettings};

pub const EVALUATION_SCHEMA: &str = "trio-eval/evaluation/1";
pub const PROJECTION_SCHEMA: &str = "trio-eval/projection/1";
pub const DIAGNOSTICS_SCHEMA: &str = "trio-eval/diagnostics/1";
pub const SYNTH_SCHEMA: &str = "trio-eval/synth/1";

/// Threshold used for blind-spot flags in evaluation reports.
pub const BLIND_SPOT_THRESHOLD: (i64, i64) = (1, 20);

pub fn num<S: Scalar>(x: &S) -> Value {
    if S::is_exact() {
        Value::String(x.to_text())
    } else {
        let f = x.to_f64();
        serde_json::Number::from_f64(f).map_or_else(|| Value::String(f.to_string()), Value::Number)
    }
}

fn opt_num<S: Scalar>(x: &Option<S>) -> Value {
    x.as_ref().map_or(Value::Null, num)
}

fn f64_num(x: f64) -> Value {
    num(&x)
}

/// Point in the same layout as a truth file, without correlations.
pub fn point_json<S: Scalar>(p: &EvaluationPoint<S>) -> Value {
    let mut acc = Map::new();
    for i in 0..NUM_CLASSIFIERS {
        acc.insert((i + 1).to_string(), json!({"a": num(&p.acc[i][0]), "b": num(&p.acc[i][1])}));
    }
    json!({"prevalence": num(&p.prevalence), "acc": acc})
}

fn triple<S: Scalar>(v: &[S; 3]) -> Value {
    Value::Array(v.iter().map(num).collect())
}

fn frequencies_json<S: Scalar>(f: &FrequencyVector<S>) -> Value {
    Value::Object(f.iter().map(|(e, x)| (e.key(), num(x))).collect())
}

fn failure_json(mode: &FailureMode) -> Value {
    let detail = match mode {
        FailureMode::EmptyVariety {
            zero_deltas,
            zero_discriminant,
        } => json!({
            "zero_deltas": zero_deltas.iter().map(|(i, j)| format!("{i}{j}")).collect::<Vec<_>>(),
            "zero_discriminant": zero_discriminant,
        }),
        FailureMode::ComplexSolution { discriminant } => json!({"discriminant": f64_num(*discriminant)}),
        FailureMode::OutsideUnitCube { offending, .. } => json!({
            "offending": offending.iter().map(|o| json!({
                "point": o.point,
                "coordinate": o.coordinate,
                "value": f64_num(o.value),
            })).collect::<Vec<_>>(),
        }),
        FailureMode::UnresolvedSquareRoot { radicand, .. } => json!({"radicand": radicand}),
    };
    json!({"kind": mode.kind().name(), "detail": detail})
}

/// Full evaluation of a sketch: majority voting, the independent evaluator
/// and agreement diagnostics.
pub fn evaluation_report<S: Scalar>(sketch: &DecisionSketch, hint: Option<&DecodeHint>) -> Result<Value> {
    let freqs = sketch.frequencies::<S>()?;
    let stats = SketchStatistics::from_frequencies(&freqs);

    let mv = mv_evaluate_frequencies(&freqs);
    let mut mv_acc = Map::new();
    for i in 0..NUM_CLASSIFIERS {
        mv_acc.insert((i + 1).to_string(), json!({"a": opt_num(&mv.acc[i][0]), "b": opt_num(&mv.acc[i][1])}));
    }

    let ev = evaluate_statistics(&stats);
    let (status, points, failure) = match &ev.outcome {
        EvaluationOutcome::Points(p) => ("points", Value::Array(p.iter().map(point_json).collect()), Value::Null),
        EvaluationOutcome::Failure(f) => ("failure", Value::Null, failure_json(f)),
    };
    let decoded = match (hint, ev.points()) {
        (Some(h), Some(p)) => Value::Array(decode(p, h).iter().map(point_json).collect()),
        (Some(h), None) => match &ev.candidates {
            Some(c) => Value::Array(decode(c, h).iter().map(point_json).collect()),
            None => Value::Array(Vec::new()),
        },
        (None, _) => Value::Null,
    };
    let radicands = ev.radicands.as_ref().map_or(Value::Null, |r| {
        json!({
            "discriminant": num(&r.discriminant),
            "prevalence_product": opt_num(&r.prevalence_product),
            "g_squared": r.g_squared.as_ref().map_or(Value::Null, triple),
        })
    });
    let candidates = ev
        .candidates
        .as_ref()
        .map_or(Value::Null, |c| Value::Array(c.iter().map(point_json).collect()));

    let threshold = S::from_ratio(BLIND_SPOT_THRESHOLD.0, BLIND_SPOT_THRESHOLD.1);
    let blind_spots = ev.points().map_or(Value::Null, |p| {
        Value::Array(
            p.iter()
                .map(|pt| {
                    let r = blind_spot_report(pt, &freqs, &threshold);
                    json!({
                        "threshold": num(&r.threshold),
                        "classifiers": r.classifiers.iter().map(|c| json!({
                            "pi": {"a": num(&c.pi[0]), "b": num(&c.pi[1])},
                            "excess": num(&c.excess),
                            "pi_flagged": {"a": c.pi_flagged[0], "b": c.pi_flagged[1]},
                            "excess_flagged": c.excess_flagged,
                        })).collect::<Vec<_>>(),
                    })
                })
                .collect(),
        )
    });

    Ok(json!({
        "schema": EVALUATION_SCHEMA,
        "mode": S::MODE.to_string(),
        "n": sketch.n(),
        "statistics": {
            "f_beta": triple(&std::array::from_fn(|i| stats.f_beta(i).clone())),
            "delta": triple(&stats.delta),
            "triple_delta": num(&stats.triple_delta),
            "agreement": triple(&stats.agreement),
        },
        "mv": {"prevalence": num(&mv.prevalence), "acc": mv_acc},
        "independent": {
            "status": status,
            "exact": ev.exact,
            "points": points,
            "decoded": decoded,
            "failure": failure,
            "radicands": radicands,
            "candidates": candidates,
            "blind_spots": blind_spots,
        },
        "diagnostics": platanios_json(&stats),
    }))
}

fn platanios_json<S: Scalar>(stats: &SketchStatistics<S>) -> Value {
    let rep = platanios_from_statistics(stats);
    let e = match &rep.e_estimates {
        PlataniosEstimates::Values(v) => json!({
            "status": "values",
            "values": v.iter().map(|row| row.iter().map(|x| f64_num(*x)).collect::<Vec<_>>()).collect::<Vec<_>>(),
        }),
        PlataniosEstimates::NegativeRadicand => json!({"status": "negative_radicand"}),
        PlataniosEstimates::Degenerate(err) => json!({"status": "degenerate", "message": err.to_string()}),
    };
    json!({
        "agreement": triple(&rep.agreement),
        "c_squared": num(&rep.c_squared),
        "c_is_rational_square": rep.c_is_rational_square,
        "e_estimates": e,
    })
}

/// Agreement diagnostics for a sketch, plus stream rates when the ground
/// truth is known.
pub fn diagnostics_report<S: Scalar>(
    sketch: &DecisionSketch,
    truth: Option<(&EvaluationPoint<S>, &CorrelationSet<S>)>,
) -> Result<Value> {
    let stats = sketch.statistics::<S>()?;
    let rates = truth.map_or(Value::Null, |(p, c)| {
        let r = stream_rates(p, c);
        json!({
            "correct": triple(&r.correct),
            "error": triple(&r.error),
            "joint_correct": triple(&r.joint_correct),
            "joint_error": triple(&r.joint_error),
            "factorization_gap": triple(&r.factorization_gap),
            "implied_agreement": triple(&r.implied_agreement()),
        })
    });
    Ok(json!({
        "schema": DIAGNOSTICS_SCHEMA,
        "mode": S::MODE.to_string(),
        "n": sketch.n(),
        "platanios": platanios_json(&stats),
        "stream_rates": rates,
    }))
}

/// Projection of a point onto the containing variety of a sketch.
/// Residuals at the input are exact when `exact_point` is given.
pub fn projection_report(
    point: &EvaluationPoint<f64>,
    exact_point: Option<&EvaluationPoint<Rational>>,
    sketch: &DecisionSketch,
    settings: ProjectionSettings,
) -> Result<Value> {
    let pr = project_frequencies(point, &sketch.frequencies::<f64>()?, settings)?;
    let residuals = match exact_point {
        Some(p) => {
            let r = residuals_from_frequencies(p, &sketch.frequencies::<Rational>()?);
            json!({"exact": true, "linear": triple(&r.linear), "cross": triple(&r.cross), "all_zero": r.is_zero()})
        }
        None => {
            let r = residuals_from_frequencies(point, &sketch.frequencies::<f64>()?);
            json!({"exact": false, "linear": triple(&r.linear), "cross": triple(&r.cross), "all_zero": r.is_zero()})
        }
    };
    Ok(json!({
        "schema": PROJECTION_SCHEMA,
        "distance": f64_num(pr.distance),
        "p_alpha_star": f64_num(pr.p_alpha_star),
        "t": pr.t.iter().map(|x| f64_num(*x)).collect::<Vec<_>>(),
        "branch": pr.branch,
        "closest_point": point_json(&pr.closest_point),
        "closest_in_unit_cube": pr.closest_in_unit_cube,
        "residuals_at_input": residuals,
        "grid": settings.grid,
        "refinements": settings.refinements,
    }))
}

/// Forward synthesis from a ground truth. In exact mode also reports the
/// smallest test sizes and the sketch at the smallest one.
pub fn synth_report<S: Scalar>(point: &EvaluationPoint<S>, corr: &CorrelationSet<S>) -> Result<Value> {
    let freqs = correlated_trio_frequencies(point, corr)?;
    let mut out = json!({
        "schema": SYNTH_SCHEMA,
        "mode": S::MODE.to_string(),
        "frequencies": frequencies_json(&freqs),
        "minimal_test_size": Value::Null,
        "minimal_stream_size": Value::Null,
        "sketch": Value::Null,
    });
    if S::is_exact() {
        let exact: FrequencyVector<Rational> =
            FrequencyVector::new(freqs.as_array().clone().map(|f| f.as_rational().expect("exact mode")));
        let size = minimal_test_size(&exact)?;
        let to_rational = |x: &S| x.as_rational().expect("exact mode");
        let p = EvaluationPoint::new(
            to_rational(&point.prevalence),
            point.acc.clone().map(|a| a.map(|x| to_rational(&x))),
        );
        let c = CorrelationSet {
            pair: corr.pair.clone().map(|a| a.map(|x| to_rational(&x))),
            triple: corr.triple.clone().map(|x| to_rational(&x)),
        };
        out["minimal_test_size"] = json!(size.to_string());
        out["minimal_stream_size"] = json!(minimal_stream_size(&p, &c)?.to_string());
        if let Ok(n) = u64::try_from(&size) {
            let big_n = Rational::from_integer(size.clone());
            let counts = exact.as_array().clone().map(|f| {
                let c = (f * big_n.clone()).to_integer();
                u64::try_from(&c).unwrap_or(u64::MAX)
            });
            let sketch = DecisionSketch::from_counts(counts)?;
            debug_assert_eq!(sketch.n(), n);
            out["sketch"] = serde_json::to_value(sketch.to_file())?;
        }
    }
    Ok(out)
}

/// Identifiers printed by `--version`.
pub fn version_info() -> Value {
    json!({
        "version": env!("CARGO_PKG_VERSION"),
        "prng": PRNG_NAME,
        "schemas": [EVALUATION_SCHEMA, PROJECTION_SCHEMA, DIAGNOSTICS_SCHEMA, SYNTH_SCHEMA],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::independent_frequencies;
    use crate::forward::tests::{q, tp1};

    fn tp1_sketch() -> DecisionSketch {
        let f = independent_frequencies(&tp1());
        let counts = f.as_array().clone().map(|x| {
            let c = (x * q("500")).to_integer();
            u64::try_from(&c).unwrap()
        });
        DecisionSketch::from_counts(counts).unwrap()
    }

    #[test]
    fn tp1_evaluation_report() {
        let r = evaluation_report::<Rational>(&tp1_sketch(), Some(&DecodeHint::MajorityCompetent)).unwrap();
        assert_eq!(r["independent"]["status"], "points");
        assert_eq!(r["independent"]["exact"], true);
        assert_eq!(r["independent"]["points"][1], point_json(&tp1()));
        assert_eq!(r["independent"]["decoded"], json!([point_json(&tp1())]));
        assert_eq!(r["statistics"]["triple_delta"], "63/12500");
        assert_eq!(r["n"], 500);
        let f = evaluation_report::<f64>(&tp1_sketch(), None).unwrap();
        assert_eq!(f["mode"], "float");
        assert!(f["independent"]["points"][1]["prevalence"].as_f64().unwrap() - 0.6 < 1e-12);
        assert!(f["independent"]["decoded"].is_null());
    }

    #[test]
    fn failure_report() {
        let s = DecisionSketch::from_counts([1; 8]).unwrap();
        let r = evaluation_report::<Rational>(&s, None).unwrap();
        assert_eq!(r["independent"]["status"], "failure");
        assert_eq!(r["independent"]["failure"]["kind"], "EmptyVariety");
        assert_eq!(r["independent"]["failure"]["detail"]["zero_deltas"], json!(["12", "13", "23"]));
        assert_eq!(r["diagnostics"]["e_estimates"]["status"], "degenerate");
    }

    #[test]
    fn synth_tp1() {
        let r = synth_report(&tp1(), &CorrelationSet::zero()).unwrap();
        assert_eq!(r["frequencies"]["aaa"], "39/125");
        assert_eq!(r["minimal_test_size"], "500");
        assert_eq!(r["minimal_stream_size"], "2500");
        assert_eq!(r["sketch"]["n"], 500);
        assert_eq!(r["sketch"]["counts"]["aaa"], 156);
        let rf = synth_report(&tp1().to_f64(), &CorrelationSet::zero()).unwrap();
        assert!(rf["sketch"].is_null());
    }

    #[test]
    fn projection_of_truth() {
        let r = projection_report(&tp1().to_f64(), Some(&tp1()), &tp1_sketch(), ProjectionSettings::default()).unwrap();
        assert!(r["distance"].as_f64().unwrap() < 1e-12);
        assert_eq!(r["residuals_at_input"]["all_zero"], true);
        assert_eq!(r["residuals_at_input"]["linear"], json!(["0", "0", "0"]));
    }

    #[test]
    fn diagnostics_with_truth() {
        let t = tp1();
        let c = CorrelationSet::zero();
        let r = diagnostics_report(&tp1_sketch(), Some((&t, &c))).unwrap();
        assert_eq!(r["stream_rates"]["correct"][0], "43/50");
        assert_eq!(r["stream_rates"]["implied_agreement"], r["platanios"]["agreement"]);
        assert_eq!(r["platanios"]["c_is_rational_square"], false);
    }
}
