//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every exported function takes and returns JSON text. The pure functions
//! (`*_json`) are what the page calls through the thin `wasm_bindgen`
//! wrappers, and are tested natively.

use serde_json::{json, Value};
use trio_eval::evaluators::independent_evaluate_frequencies;
use trio_eval::forward::correlated_trio_frequencies_unchecked;
use trio_eval::report::{evaluation_report, num, point_json};
use trio_eval::sketch::{Label, PAIRS};
use trio_eval::{
    correlated_trio_frequencies, minimal_test_size, DecisionSketch, FrequencyVector, Rational, TruthFile,
};
use wasm_bindgen::prelude::*;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn sketch_at(freqs: &FrequencyVector<Rational>) -> Result<DecisionSketch, String> {
    let n = minimal_test_size(freqs).map_err(err)?;
    let big_n = Rational::from_integer(n);
    let counts = freqs.as_array().clone().map(|f| {
        let c = (f * big_n.clone()).to_integer();
        u64::try_from(&c).ok()
    });
    if counts.iter().any(Option::is_none) {
        return Err("smallest test size is too large for a sketch".into());
    }
    DecisionSketch::from_counts(counts.map(Option::unwrap)).map_err(err)
}

/// Synthesizes the smallest exact sketch of a ground truth (truth-file JSON)
/// and evaluates it in exact arithmetic.
pub fn evaluate_truth_json(truth: &str) -> Result<String, String> {
    let (p, c) = TruthFile::from_json(truth).and_then(|t| t.parse::<Rational>()).map_err(err)?;
    let freqs = correlated_trio_frequencies(&p, &c).map_err(err)?;
    let sketch = sketch_at(&freqs)?;
    let report = evaluation_report::<Rational>(&sketch, None).map_err(err)?;
    Ok(json!({
        "truth": point_json(&p),
        "sketch": sketch.to_file(),
        "report": report,
    })
    .to_string())
}

/// Evaluates a sketch given as a JSON array of the eight counts in event
/// order `aaa, aab, ..., bbb`.
pub fn evaluate_counts_json(counts: &str, exact: bool) -> Result<String, String> {
    let counts: [u64; 8] = serde_json::from_str(counts).map_err(err)?;
    let sketch = DecisionSketch::from_counts(counts).map_err(err)?;
    let report = if exact {
        evaluation_report::<Rational>(&sketch, None)
    } else {
        evaluation_report::<f64>(&sketch, None)
    }
    .map_err(err)?;
    Ok(report.to_string())
}

/// Sweeps one pair correlation `Gamma_{pair,label}` from 0 to `max` in
/// `steps` steps at a fixed ground truth and records the float prevalence
/// estimates. Infeasible steps are still evaluated (flagged `feasible: false`).
pub fn correlation_sweep_json(truth: &str, pair: usize, label: &str, max: f64, steps: usize) -> Result<String, String> {
    if pair >= PAIRS.len() {
        return Err(format!("pair index {pair} out of range 0..3"));
    }
    let label = label
        .chars()
        .next()
        .and_then(Label::from_char)
        .ok_or_else(|| format!("label must be a or b, got {label:?}"))?;
    if !(max.is_finite() && (1..=2000).contains(&steps)) {
        return Err("max must be finite and steps in 1..=2000".into());
    }
    let (p, base) = TruthFile::from_json(truth).and_then(|t| t.parse::<f64>()).map_err(err)?;
    let (i, j) = PAIRS[pair];
    let rows: Vec<Value> = (0..=steps)
        .map(|k| {
            let eps = max * k as f64 / steps as f64;
            let corr = base.clone().with_pair(i, j, label, eps);
            let feasible = correlated_trio_frequencies(&p, &corr).is_ok();
            let f = correlated_trio_frequencies_unchecked(&p, &corr);
            let ev = independent_evaluate_frequencies(&f);
            let estimates = ev
                .candidates
                .as_ref()
                .map_or(Value::Null, |c| json!([c[0].prevalence, c[1].prevalence]));
            json!({
                "gamma": eps,
                "feasible": feasible,
                "prevalence": estimates,
                "failure": ev.failure().map(|m| m.kind().name()),
                "discriminant": ev.radicands.as_ref().map(|r| num(&r.discriminant)),
            })
        })
        .collect();
    Ok(json!({"truth_prevalence": p.prevalence, "steps": rows}).to_string())
}

#[wasm_bindgen(js_name = evaluateTruth)]
pub fn evaluate_truth(truth: &str) -> Result<String, JsValue> {
    evaluate_truth_json(truth).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = evaluateCounts)]
pub fn evaluate_counts(counts: &str, exact: bool) -> Result<String, JsValue> {
    evaluate_counts_json(counts, exact).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen(js_name = correlationSweep)]
pub fn correlation_sweep(truth: &str, pair: usize, label: &str, max: f64, steps: usize) -> Result<String, JsValue> {
    correlation_sweep_json(truth, pair, label, max, steps).map_err(|e| JsValue::from_str(&e))
}
