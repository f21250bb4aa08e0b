//! Forward models: from a chosen ground truth to voting-pattern frequencies,
//! and from frequencies to concrete labeled streams.
//!
//! Given the true label `l`, the frequency of an event is the average of a
//! product of correct-vote indicators `c_i` and their complements. Expanding
//! that product needs only the moments
//!
//! ```text
//! E[c_i]         = P_{i,l}
//! E[c_i c_j]     = P_{i,l} P_{j,l} + Γ_{i,j,l}
//! E[c_i c_j c_k] = P_i P_j P_k + P_i Γ_{j,k} + P_j Γ_{i,k} + P_k Γ_{i,j} + Γ_{i,j,k}
//! ```
//!
//! and the two label tables are mixed with weights `P_α` and `1 − P_α`. With
//! every Γ set to zero this is the independent generating set.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{lcm_denominators, parse_rational, Rational, Scalar, SeededRng};
use crate::sketch::{
    pair_index, DecisionEvent, FrequencyVector, Label, LabeledStream, NUM_CLASSIFIERS, NUM_EVENTS,
    PAIRS,
};

/// Prevalence of alpha and the six per-label accuracies: a point in the
/// seven-dimensional evaluation space. `acc[i][l]` is the accuracy of
/// classifier `i` on items whose true label is `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationPoint<S> {
    pub prevalence: S,
    pub acc: [[S; 2]; NUM_CLASSIFIERS],
}

/// Names of the seven coordinates in [`EvaluationPoint::coords`] order.
pub const COORDINATE_NAMES: [&str; 7] = ["P_a", "P_1a", "P_1b", "P_2a", "P_2b", "P_3a", "P_3b"];

impl<S: Scalar> EvaluationPoint<S> {
    pub fn new(prevalence: S, acc: [[S; 2]; NUM_CLASSIFIERS]) -> Self {
        EvaluationPoint { prevalence, acc }
    }

    /// `(P_α, P_{1,α}, P_{1,β}, P_{2,α}, P_{2,β}, P_{3,α}, P_{3,β})`.
    pub fn coords(&self) -> [S; 7] {
        [
            self.prevalence.clone(),
            self.acc[0][0].clone(),
            self.acc[0][1].clone(),
            self.acc[1][0].clone(),
            self.acc[1][1].clone(),
            self.acc[2][0].clone(),
            self.acc[2][1].clone(),
        ]
    }

    pub fn from_coords(c: [S; 7]) -> Self {
        let [p, a1, b1, a2, b2, a3, b3] = c;
        EvaluationPoint::new(p, [[a1, b1], [a2, b2], [a3, b3]])
    }

    pub fn prevalence_of(&self, label: Label) -> S {
        match label {
            Label::Alpha => self.prevalence.clone(),
            Label::Beta => S::one() - self.prevalence.clone(),
        }
    }

    pub fn accuracy(&self, classifier: usize, label: Label) -> &S {
        &self.acc[classifier][label.index()]
    }

    /// `g_i = P_{i,α} + P_{i,β} − 1`; zero on the blind-spot line.
    pub fn excess(&self, classifier: usize) -> S {
        self.acc[classifier][0].clone() + self.acc[classifier][1].clone() - S::one()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in COORDINATE_NAMES.iter().zip(self.coords()) {
            if !value.in_unit_interval() {
                return Err(Error::OutOfRange {
                    name: name.to_string(),
                    value: value.to_text(),
                });
            }
        }
        Ok(())
    }

    pub fn to_f64(&self) -> EvaluationPoint<f64> {
        EvaluationPoint::from_coords(self.coords().map(|c| c.to_f64()))
    }

    pub fn to_text_map(&self) -> BTreeMap<String, String> {
        COORDINATE_NAMES
            .iter()
            .zip(self.coords())
            .map(|(n, c)| (n.to_string(), c.to_text()))
            .collect()
    }
}

impl EvaluationPoint<f64> {
    pub fn distance_to(&self, other: &EvaluationPoint<f64>) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b).powi(2))
            .sum::<f64>()
            .sqrt()
    }
}

/// Pair and 3-way sample correlations for each label. `pair[p][l]` follows
/// the pair order of [`PAIRS`].
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationSet<S> {
    pub pair: [[S; 2]; 3],
    pub triple: [S; 2],
}

impl<S: Scalar> CorrelationSet<S> {
    pub fn zero() -> Self {
        CorrelationSet {
            pair: std::array::from_fn(|_| [S::zero(), S::zero()]),
            triple: [S::zero(), S::zero()],
        }
    }

    pub fn is_zero(&self) -> bool {
        self.pair.iter().flatten().chain(self.triple.iter()).all(|g| *g == S::zero())
    }

    pub fn pair_of(&self, i: usize, j: usize, label: Label) -> &S {
        &self.pair[pair_index(i, j)][label.index()]
    }

    /// Builder-style setter for one pair correlation.
    pub fn with_pair(mut self, i: usize, j: usize, label: Label, value: S) -> Self {
        self.pair[pair_index(i, j)][label.index()] = value;
        self
    }

    pub fn to_f64(&self) -> CorrelationSet<f64> {
        CorrelationSet {
            pair: self.pair.clone().map(|p| p.map(|g| g.to_f64())),
            triple: self.triple.clone().map(|g| g.to_f64()),
        }
    }
}

/// Conditional event frequencies given each true label: `per_label[l][e]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEventTable<S> {
    pub per_label: [[S; NUM_EVENTS]; 2],
}

impl<S: Scalar> ConditionalEventTable<S> {
    /// First entry outside `[0, 1]`, if any.
    pub fn infeasible_entry(&self) -> Option<(Label, DecisionEvent, &S)> {
        Label::BOTH.into_iter().find_map(|label| {
            DecisionEvent::all().find_map(|e| {
                let v = &self.per_label[label.index()][e.index()];
                (!v.in_unit_interval()).then_some((label, e, v))
            })
        })
    }

    pub fn check_feasible(&self) -> Result<()> {
        match self.infeasible_entry() {
            None => Ok(()),
            Some((label, event, value)) => Err(Error::InfeasibleMoments {
                label,
                event: event.key(),
                value: value.to_text(),
            }),
        }
    }

    pub fn get(&self, label: Label, event: DecisionEvent) -> &S {
        &self.per_label[label.index()][event.index()]
    }
}

/// `E[∏_{i ∈ subset} c_i]` given true label `l`, expanded through the
/// correlation moments.
fn indicator_moment<S: Scalar>(
    point: &EvaluationPoint<S>,
    corr: &CorrelationSet<S>,
    label: Label,
    subset: &[usize],
) -> S {
    let l = label.index();
    let p = |i: usize| point.acc[i][l].clone();
    let g2 = |i: usize, j: usize| corr.pair[pair_index(i, j)][l].clone();
    match *subset {
        [] => S::one(),
        [i] => p(i),
        [i, j] => p(i) * p(j) + g2(i, j),
        [i, j, k] => {
            p(i) * p(j) * p(k)
                + p(i) * g2(j, k)
                + p(j) * g2(i, k)
                + p(k) * g2(i, j)
                + corr.triple[l].clone()
        }
        _ => unreachable!("at most three classifiers"),
    }
}

/// Conditional event frequencies for both labels, without feasibility checks.
pub fn conditional_table<S: Scalar>(
    point: &EvaluationPoint<S>,
    corr: &CorrelationSet<S>,
) -> ConditionalEventTable<S> {
    let per_label = Label::BOTH.map(|label| {
        std::array::from_fn(|k| {
            let event = DecisionEvent::from_index(k);
            let correct: Vec<usize> = (0..NUM_CLASSIFIERS).filter(|&i| event.vote(i) == label).collect();
            let wrong: Vec<usize> = (0..NUM_CLASSIFIERS).filter(|&i| event.vote(i) != label).collect();
            // ∏_{correct} c_i ∏_{wrong} (1 − c_i), by inclusion–exclusion over the wrong set.
            (0..1usize << wrong.len()).fold(S::zero(), |acc, mask| {
                let mut subset = correct.clone();
                subset.extend(
                    wrong
                        .iter()
                        .enumerate()
                        .filter(|(b, _)| mask >> b & 1 == 1)
                        .map(|(_, &i)| i),
                );
                subset.sort_unstable();
                let term = indicator_moment(point, corr, label, &subset);
                if mask.count_ones() % 2 == 0 {
                    acc + term
                } else {
                    acc - term
                }
            })
        })
    });
    ConditionalEventTable { per_label }
}

fn mix<S: Scalar>(point: &EvaluationPoint<S>, table: &ConditionalEventTable<S>) -> FrequencyVector<S> {
    let pa = point.prevalence_of(Label::Alpha);
    let pb = point.prevalence_of(Label::Beta);
    FrequencyVector::new(std::array::from_fn(|k| {
        pa.clone() * table.per_label[0][k].clone() + pb.clone() * table.per_label[1][k].clone()
    }))
}

/// The independent generating set: eight frequencies as polynomials of the
/// prevalence and the six accuracies.
pub fn independent_frequencies<S: Scalar>(point: &EvaluationPoint<S>) -> FrequencyVector<S> {
    let pa = point.prevalence.clone();
    let pb = S::one() - pa.clone();
    FrequencyVector::new(std::array::from_fn(|k| {
        let e = DecisionEvent::from_index(k);
        let term = |label: Label| {
            (0..NUM_CLASSIFIERS).fold(S::one(), |prod, i| {
                let a = point.acc[i][label.index()].clone();
                prod * if e.vote(i) == label { a } else { S::one() - a }
            })
        };
        pa.clone() * term(Label::Alpha) + pb.clone() * term(Label::Beta)
    }))
}

/// Trio frequencies for an arbitrarily correlated ensemble.
pub fn correlated_trio_frequencies<S: Scalar>(
    point: &EvaluationPoint<S>,
    corr: &CorrelationSet<S>,
) -> Result<FrequencyVector<S>> {
    point.validate()?;
    let table = conditional_table(point, corr);
    table.check_feasible()?;
    Ok(mix(point, &table))
}

/// The raw polynomial map behind [`correlated_trio_frequencies`], defined for
/// any inputs. Entries may leave `[0, 1]` when the moments are infeasible.
pub fn correlated_trio_frequencies_unchecked<S: Scalar>(
    point: &EvaluationPoint<S>,
    corr: &CorrelationSet<S>,
) -> FrequencyVector<S> {
    mix(point, &conditional_table(point, corr))
}

/// Frequencies `(f_αα, f_αβ, f_βα, f_ββ)` of a correlated pair, where the
/// first letter is classifier `i`'s vote.
pub fn correlated_pair_table<S: Scalar>(
    prevalence: &S,
    acc_i: &[S; 2],
    acc_j: &[S; 2],
    corr: &[S; 2],
) -> Result<[S; 4]> {
    let cond = |label: Label| -> [S; 4] {
        let l = label.index();
        let (pi, pj, g) = (acc_i[l].clone(), acc_j[l].clone(), corr[l].clone());
        let one = S::one;
        // Ordered (i correct?, j correct?) then mapped onto vote patterns.
        let both = pi.clone() * pj.clone() + g.clone();
        let only_i = pi.clone() * (one() - pj.clone()) - g.clone();
        let only_j = (one() - pi.clone()) * pj.clone() - g.clone();
        let neither = (one() - pi) * (one() - pj) + g;
        match label {
            Label::Alpha => [both, only_i, only_j, neither],
            Label::Beta => [neither, only_j, only_i, both],
        }
    };
    let tables = [cond(Label::Alpha), cond(Label::Beta)];
    for label in Label::BOTH {
        for (k, v) in tables[label.index()].iter().enumerate() {
            if !v.in_unit_interval() {
                let key = ["aa", "ab", "ba", "bb"][k];
                return Err(Error::InfeasibleMoments {
                    label,
                    event: key.to_string(),
                    value: v.to_text(),
                });
            }
        }
    }
    let pa = prevalence.clone();
    let pb = S::one() - pa.clone();
    Ok(std::array::from_fn(|k| {
        pa.clone() * tables[0][k].clone() + pb.clone() * tables[1][k].clone()
    }))
}

/// Smallest `n` with every `n · f` integral: the lcm of the reduced
/// denominators.
pub fn minimal_test_size<S: Scalar>(freqs: &FrequencyVector<S>) -> Result<BigInt> {
    let exact: Vec<Rational> = freqs
        .as_array()
        .iter()
        .map(|f| f.as_rational().ok_or_else(|| Error::NotRational(f.to_text())))
        .collect::<Result<_>>()?;
    Ok(lcm_denominators(&exact))
}

/// Smallest `n` for which a stream with exactly these label counts and
/// per-label event counts exists: `n P_α` and every `n P_l · cond_l(e)` must be
/// integers.
pub fn minimal_stream_size(point: &EvaluationPoint<Rational>, corr: &CorrelationSet<Rational>) -> Result<BigInt> {
    point.validate()?;
    let table = conditional_table(point, corr);
    table.check_feasible()?;
    let mut parts = vec![point.prevalence.clone()];
    for label in Label::BOTH {
        let weight = point.prevalence_of(label);
        parts.extend(table.per_label[label.index()].iter().map(|c| weight.clone() * c.clone()));
    }
    Ok(lcm_denominators(&parts))
}

/// Builds a stream of exactly `n` items whose ground-truth statistics are
/// exactly `(point, corr)`, in an order shuffled by `seed`.
pub fn materialize_stream(
    point: &EvaluationPoint<Rational>,
    corr: &CorrelationSet<Rational>,
    n: u64,
    seed: u64,
) -> Result<LabeledStream> {
    let minimal = minimal_stream_size(point, corr)?;
    let indivisible = || Error::IndivisibleTestSize {
        n,
        minimal: minimal.to_string(),
    };
    if n == 0 || !(BigInt::from(n) % &minimal).is_zero() {
        return Err(indivisible());
    }
    let table = conditional_table(point, corr);
    let n_big = Rational::from_integer(BigInt::from(n));
    let mut items = Vec::with_capacity(n as usize);
    for label in Label::BOTH {
        let n_label = n_big.clone() * point.prevalence_of(label);
        for event in DecisionEvent::all() {
            let count = n_label.clone() * table.get(label, event).clone();
            if !count.is_integer() {
                return Err(indivisible());
            }
            let count = count.to_integer().to_u64().ok_or_else(indivisible)?;
            items.extend(std::iter::repeat((event, label)).take(count as usize));
        }
    }
    let mut rng = SeededRng::new(seed);
    items.shuffle(&mut rng);
    Ok(LabeledStream::new(items))
}

/// Draws `n` items: truth from Bernoulli(`P_α`), then the event from the
/// conditional table of that label.
pub fn sample_stream<S: Scalar>(
    point: &EvaluationPoint<S>,
    corr: &CorrelationSet<S>,
    n: u64,
    seed: u64,
) -> Result<LabeledStream> {
    let mut rng = SeededRng::new(seed);
    sample_stream_with(point, corr, n, &mut rng)
}

/// [`sample_stream`] drawing from a caller-supplied generator.
pub fn sample_stream_with<S: Scalar, R: Rng>(
    point: &EvaluationPoint<S>,
    corr: &CorrelationSet<S>,
    n: u64,
    rng: &mut R,
) -> Result<LabeledStream> {
    point.validate()?;
    let table = conditional_table(point, corr);
    table.check_feasible()?;
    let cumulative = Label::BOTH.map(|label| {
        let mut acc = 0.0;
        let mut out = [0.0f64; NUM_EVENTS];
        for (k, slot) in out.iter_mut().enumerate() {
            acc += table.per_label[label.index()][k].to_f64();
            *slot = acc;
        }
        out
    });
    let pa = point.prevalence.to_f64();
    let items = (0..n)
        .map(|_| {
            let truth = if rng.gen::<f64>() < pa { Label::Alpha } else { Label::Beta };
            let u = rng.gen::<f64>() * cumulative[truth.index()][NUM_EVENTS - 1];
            let k = cumulative[truth.index()]
                .iter()
                .position(|&c| u < c)
                .unwrap_or(NUM_EVENTS - 1);
            (DecisionEvent::from_index(k), truth)
        })
        .collect();
    Ok(LabeledStream::new(items))
}

/// A number in a truth file: either a string (`"3/5"`, `"0.6"`) or a JSON
/// number, both read exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NumText {
    Text(String),
    Number(serde_json::Number),
}

impl NumText {
    pub fn parse<S: Scalar>(&self) -> Result<S> {
        match self {
            NumText::Text(s) => S::parse_text(s),
            NumText::Number(n) => {
                let r = parse_rational(&n.to_string())
                    .or_else(|_| {
                        n.as_f64()
                            .map(Rational::from_f64_lossy)
                            .ok_or_else(|| Error::InvalidNumber(n.to_string()))
                    })?;
                if S::is_exact() {
                    S::parse_text(&r.to_text())
                } else {
                    Ok(S::from_f64_lossy(Scalar::to_f64(&r)))
                }
            }
        }
    }
}

impl From<&str> for NumText {
    fn from(s: &str) -> Self {
        NumText::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelValues {
    pub a: NumText,
    pub b: NumText,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorrFile {
    #[serde(default)]
    pub pairs: BTreeMap<String, LabelValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub triple: Option<LabelValues>,
}

/// Ground-truth specification file:
/// `{"prevalence": "3/5", "acc": {"1": {"a": "9/10", "b": "4/5"}, ...},
///   "corr": {"pairs": {"12": {"a": "0", "b": "0"}, ...}, "triple": {"a": "0", "b": "0"}}}`.
/// `corr` and any of its entries may be omitted (zero).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub prevalence: NumText,
    pub acc: BTreeMap<String, LabelValues>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub corr: Option<CorrFile>,
}

impl TruthFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn parse<S: Scalar>(&self) -> Result<(EvaluationPoint<S>, CorrelationSet<S>)> {
        let prevalence = self.prevalence.parse::<S>()?;
        let mut acc: [[S; 2]; NUM_CLASSIFIERS] = std::array::from_fn(|_| [S::zero(), S::zero()]);
        for (i, slot) in acc.iter_mut().enumerate() {
            let key = (i + 1).to_string();
            let v = self
                .acc
                .get(&key)
                .ok_or_else(|| Error::Format(format!("missing accuracies for classifier {key}")))?;
            *slot = [v.a.parse()?, v.b.parse()?];
        }
        if self.acc.len() != NUM_CLASSIFIERS {
            return Err(Error::Format("expected accuracies for classifiers 1, 2, 3".into()));
        }
        let point = EvaluationPoint::new(prevalence, acc);
        let mut corr = CorrelationSet::zero();
        if let Some(c) = &self.corr {
            for (key, v) in &c.pairs {
                let p = match key.as_str() {
                    "12" | "21" => 0,
                    "13" | "31" => 1,
                    "23" | "32" => 2,
                    other => return Err(Error::Format(format!("unknown pair '{other}'"))),
                };
                corr.pair[p] = [v.a.parse()?, v.b.parse()?];
            }
            if let Some(t) = &c.triple {
                corr.triple = [t.a.parse()?, t.b.parse()?];
            }
        }
        Ok((point, corr))
    }

    pub fn from_point<S: Scalar>(point: &EvaluationPoint<S>, corr: &CorrelationSet<S>) -> Self {
        let text = |s: &S| NumText::Text(s.to_text());
        let acc = (0..NUM_CLASSIFIERS)
            .map(|i| {
                (
                    (i + 1).to_string(),
                    LabelValues {
                        a: text(&point.acc[i][0]),
                        b: text(&point.acc[i][1]),
                    },
                )
            })
            .collect();
        let pairs = PAIRS
            .iter()
            .enumerate()
            .map(|(p, &(i, j))| {
                (
                    format!("{}{}", i + 1, j + 1),
                    LabelValues {
                        a: text(&corr.pair[p][0]),
                        b: text(&corr.pair[p][1]),
                    },
                )
            })
            .collect();
        TruthFile {
            prevalence: text(&point.prevalence),
            acc,
            corr: Some(CorrFile {
                pairs,
                triple: Some(LabelValues {
                    a: text(&corr.triple[0]),
                    b: text(&corr.triple[1]),
                }),
            }),
        }
    }
}
