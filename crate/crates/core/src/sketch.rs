//! The per-item decision sketch of a classifier trio and the statistics that
//! can be read off it.
//!
//! Eight counters, one per voting pattern, are enough to recover every
//! observed statistic used by the evaluators. When true labels are available
//! the same module computes the ground-truth point of a stream.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{CorrelationSet, EvaluationPoint};
use crate::numerics::Scalar;

pub const NUM_CLASSIFIERS: usize = 3;
pub const NUM_EVENTS: usize = 8;

/// Classifier pairs in canonical order: (1,2), (1,3), (2,3), zero-based.
pub const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Index into [`PAIRS`] for an unordered pair of classifiers.
pub fn pair_index(i: usize, j: usize) -> usize {
    match (i.min(j), i.max(j)) {
        (0, 1) => 0,
        (0, 2) => 1,
        (1, 2) => 2,
        _ => panic!("no classifier pair ({i}, {j})"),
    }
}

/// The pair index of the two classifiers other than `i`.
pub fn complement_pair(i: usize) -> usize {
    2 - i
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "a")]
    Alpha,
    #[serde(rename = "b")]
    Beta,
}

impl Label {
    pub const BOTH: [Label; 2] = [Label::Alpha, Label::Beta];

    pub fn index(self) -> usize {
        match self {
            Label::Alpha => 0,
            Label::Beta => 1,
        }
    }

    pub fn other(self) -> Label {
        match self {
            Label::Alpha => Label::Beta,
            Label::Beta => Label::Alpha,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Label::Alpha => 'a',
            Label::Beta => 'b',
        }
    }

    pub fn from_char(c: char) -> Option<Label> {
        match c.to_ascii_lowercase() {
            'a' => Some(Label::Alpha),
            'b' => Some(Label::Beta),
            _ => None,
        }
    }

    fn parse_field(s: &str) -> Option<Label> {
        let mut chars = s.trim().chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Label::from_char(c),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Alpha => f.write_str("alpha"),
            Label::Beta => f.write_str("beta"),
        }
    }
}

/// The ordered votes of classifiers 1, 2 and 3 on one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DecisionEvent {
    votes: [Label; NUM_CLASSIFIERS],
}

impl DecisionEvent {
    pub fn new(votes: [Label; NUM_CLASSIFIERS]) -> Self {
        DecisionEvent { votes }
    }

    /// Events are indexed with classifier 1 as the most significant bit and
    /// a beta vote as 1, so index 0 is `aaa` and index 7 is `bbb`.
    pub fn from_index(index: usize) -> Self {
        assert!(index < NUM_EVENTS, "event index {index} out of range");
        let vote = |bit: usize| {
            if index >> bit & 1 == 1 {
                Label::Beta
            } else {
                Label::Alpha
            }
        };
        DecisionEvent::new([vote(2), vote(1), vote(0)])
    }

    pub fn index(self) -> usize {
        self.votes
            .iter()
            .fold(0, |acc, v| (acc << 1) | v.index())
    }

    pub fn all() -> impl Iterator<Item = DecisionEvent> {
        (0..NUM_EVENTS).map(DecisionEvent::from_index)
    }

    pub fn votes(self) -> [Label; NUM_CLASSIFIERS] {
        self.votes
    }

    pub fn vote(self, classifier: usize) -> Label {
        self.votes[classifier]
    }

    /// Pattern key such as `"aba"`, classifier 1 first.
    pub fn key(self) -> String {
        self.votes.iter().map(|v| v.as_char()).collect()
    }

    pub fn parse_key(key: &str) -> Option<DecisionEvent> {
        let labels: Vec<Label> = key.chars().map(Label::from_char).collect::<Option<_>>()?;
        let votes: [Label; NUM_CLASSIFIERS] = labels.try_into().ok()?;
        Some(DecisionEvent::new(votes))
    }
}

impl fmt::Display for DecisionEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.key())
    }
}

/// Eight voting-pattern counters plus the item total.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct DecisionSketch {
    counts: [u64; NUM_EVENTS],
    n: u64,
}

impl DecisionSketch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_counts(counts: [u64; NUM_EVENTS]) -> Result<Self> {
        let n = counts
            .iter()
            .try_fold(0u64, |acc, &c| acc.checked_add(c))
            .ok_or(Error::CounterOverflow)?;
        Ok(DecisionSketch { counts, n })
    }

    pub fn update(&mut self, event: DecisionEvent) -> Result<()> {
        let slot = &mut self.counts[event.index()];
        *slot = slot.checked_add(1).ok_or(Error::CounterOverflow)?;
        self.n = self.n.checked_add(1).ok_or(Error::CounterOverflow)?;
        Ok(())
    }

    pub fn merge(&self, other: &DecisionSketch) -> Result<DecisionSketch> {
        let mut counts = [0u64; NUM_EVENTS];
        for (k, slot) in counts.iter_mut().enumerate() {
            *slot = self.counts[k]
                .checked_add(other.counts[k])
                .ok_or(Error::CounterOverflow)?;
        }
        let n = self.n.checked_add(other.n).ok_or(Error::CounterOverflow)?;
        Ok(DecisionSketch { counts, n })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn count(&self, event: DecisionEvent) -> u64 {
        self.counts[event.index()]
    }

    pub fn counts(&self) -> &[u64; NUM_EVENTS] {
        &self.counts
    }

    pub fn frequencies<S: Scalar>(&self) -> Result<FrequencyVector<S>> {
        if self.n == 0 {
            return Err(Error::EmptySketch);
        }
        let freqs = self.counts.map(|c| S::from_counts(c, self.n));
        Ok(FrequencyVector { freqs })
    }

    pub fn statistics<S: Scalar>(&self) -> Result<SketchStatistics<S>> {
        Ok(SketchStatistics::from_frequencies(&self.frequencies::<S>()?))
    }

    pub fn to_file(&self) -> SketchFile {
        SketchFile {
            n: self.n,
            counts: DecisionEvent::all()
                .map(|e| (e.key(), self.count(e)))
                .collect(),
        }
    }

    pub fn from_file(file: &SketchFile) -> Result<Self> {
        let mut counts = [0u64; NUM_EVENTS];
        for (key, &c) in &file.counts {
            let e = DecisionEvent::parse_key(key)
                .ok_or_else(|| Error::Format(format!("unknown voting pattern '{key}'")))?;
            counts[e.index()] = c;
        }
        let sketch = DecisionSketch::from_counts(counts)?;
        if sketch.n != file.n {
            return Err(Error::Format(format!(
                "counts sum to {} but n = {}",
                sketch.n, file.n
            )));
        }
        Ok(sketch)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("sketch serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

impl FromIterator<DecisionEvent> for DecisionSketch {
    fn from_iter<I: IntoIterator<Item = DecisionEvent>>(iter: I) -> Self {
        let mut sketch = DecisionSketch::new();
        for e in iter {
            sketch.update(e).expect("sketch counter overflow");
        }
        sketch
    }
}

/// On-disk sketch form: `{"n": 125, "counts": {"aaa": 39, ...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchFile {
    pub n: u64,
    pub counts: BTreeMap<String, u64>,
}

/// Voting-pattern frequencies, indexed like [`DecisionEvent::index`].
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyVector<S> {
    freqs: [S; NUM_EVENTS],
}

impl<S: Scalar> FrequencyVector<S> {
    pub fn new(freqs: [S; NUM_EVENTS]) -> Self {
        FrequencyVector { freqs }
    }

    pub fn get(&self, event: DecisionEvent) -> &S {
        &self.freqs[event.index()]
    }

    pub fn by_key(&self, key: &str) -> &S {
        let e = DecisionEvent::parse_key(key).unwrap_or_else(|| panic!("bad pattern key {key}"));
        self.get(e)
    }

    pub fn as_array(&self) -> &[S; NUM_EVENTS] {
        &self.freqs
    }

    pub fn iter(&self) -> impl Iterator<Item = (DecisionEvent, &S)> {
        DecisionEvent::all().zip(self.freqs.iter())
    }

    pub fn sum(&self) -> S {
        self.freqs.iter().cloned().fold(S::zero(), |a, b| a + b)
    }

    pub fn to_f64(&self) -> FrequencyVector<f64> {
        FrequencyVector {
            freqs: self.freqs.clone().map(|f| f.to_f64()),
        }
    }

    pub fn to_text_map(&self) -> BTreeMap<String, String> {
        self.iter().map(|(e, f)| (e.key(), f.to_text())).collect()
    }
}

/// Observed statistics of a sketch.
///
/// `f_label[i][l]` is how often classifier `i` voted label `l`;
/// `f_pair[p][l]` how often pair `p` (see [`PAIRS`]) both voted `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchStatistics<S> {
    pub f_label: [[S; 2]; NUM_CLASSIFIERS],
    pub f_pair: [[S; 2]; 3],
    /// Δ for each pair: `f_{i,j,β} − f_{i,β} f_{j,β}`.
    pub delta: [S; 3],
    /// Third central mixed moment of the three beta-vote indicators.
    pub triple_delta: S,
    /// Fraction of items on which each pair agreed.
    pub agreement: [S; 3],
}

impl<S: Scalar> SketchStatistics<S> {
    pub fn from_frequencies(freqs: &FrequencyVector<S>) -> Self {
        let beta = Label::Beta.index();
        let alpha = Label::Alpha.index();
        let f_label: [[S; 2]; NUM_CLASSIFIERS] = std::array::from_fn(|i| {
            let mut out = [S::zero(), S::zero()];
            for (e, f) in freqs.iter() {
                let l = e.vote(i).index();
                out[l] = out[l].clone() + f.clone();
            }
            out
        });
        let f_pair: [[S; 2]; 3] = std::array::from_fn(|p| {
            let (i, j) = PAIRS[p];
            let mut out = [S::zero(), S::zero()];
            for (e, f) in freqs.iter() {
                if e.vote(i) == e.vote(j) {
                    let l = e.vote(i).index();
                    out[l] = out[l].clone() + f.clone();
                }
            }
            out
        });
        let delta = std::array::from_fn(|p| {
            let (i, j) = PAIRS[p];
            f_pair[p][beta].clone() - f_label[i][beta].clone() * f_label[j][beta].clone()
        });
        let triple_delta = freqs.iter().fold(S::zero(), |acc, (e, f)| {
            let centered = (0..NUM_CLASSIFIERS).fold(S::one(), |prod, i| {
                let x = if e.vote(i) == Label::Beta { S::one() } else { S::zero() };
                prod * (x - f_label[i][beta].clone())
            });
            acc + f.clone() * centered
        });
        let agreement = std::array::from_fn(|p| f_pair[p][alpha].clone() + f_pair[p][beta].clone());
        SketchStatistics {
            f_label,
            f_pair,
            delta,
            triple_delta,
            agreement,
        }
    }

    pub fn f_beta(&self, classifier: usize) -> &S {
        &self.f_label[classifier][Label::Beta.index()]
    }

    pub fn delta_of(&self, i: usize, j: usize) -> &S {
        &self.delta[pair_index(i, j)]
    }

    /// Δ recomputed from the alpha marginals; equal to [`Self::delta`] on any
    /// sketch.
    pub fn delta_from_alpha(&self) -> [S; 3] {
        let alpha = Label::Alpha.index();
        std::array::from_fn(|p| {
            let (i, j) = PAIRS[p];
            self.f_pair[p][alpha].clone()
                - self.f_label[i][alpha].clone() * self.f_label[j][alpha].clone()
        })
    }
}

/// Items with both their decision event and their true label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LabeledStream {
    pub items: Vec<(DecisionEvent, Label)>,
}

impl LabeledStream {
    pub fn new(items: Vec<(DecisionEvent, Label)>) -> Self {
        LabeledStream { items }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn sketch(&self) -> DecisionSketch {
        self.items.iter().map(|(e, _)| *e).collect()
    }

    /// Counts of each event split by true label: `[label][event]`.
    pub fn label_event_counts(&self) -> [[u64; NUM_EVENTS]; 2] {
        let mut table = [[0u64; NUM_EVENTS]; 2];
        for (e, truth) in &self.items {
            table[truth.index()][e.index()] += 1;
        }
        table
    }

    /// Writes the decisions CSV with a truth column.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["item_id", "c1", "c2", "c3", "truth"]).map_err(io)?;
        for (k, (e, truth)) in self.items.iter().enumerate() {
            let id = (k + 1).to_string();
            let v = e.votes().map(|l| l.as_char().to_string());
            w.write_record([
                id.as_str(),
                v[0].as_str(),
                v[1].as_str(),
                v[2].as_str(),
                &truth.as_char().to_string(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Exact ground truth of a labeled stream.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPoint<S> {
    pub point: EvaluationPoint<S>,
    pub correlations: CorrelationSet<S>,
    pub n_alpha: u64,
    pub n_beta: u64,
}

impl<S: Scalar> GroundTruthPoint<S> {
    pub fn n(&self) -> u64 {
        self.n_alpha + self.n_beta
    }

    /// Largest absolute pair correlation over the three pairs and two labels.
    pub fn max_abs_pair_correlation(&self) -> f64 {
        self.correlations
            .pair
            .iter()
            .flatten()
            .map(|g| g.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

/// Prevalence, per-label accuracies and centered-product correlations of a
/// labeled stream.
///
/// Correlations are computed from their centered definition, e.g.
/// `Γ_{i,j,l} = (1/n_l) Σ (c_i − P_{i,l})(c_j − P_{j,l})` over items whose
/// true label is `l`, where `c_i` indicates a correct vote by classifier `i`.
pub fn truth_statistics<S: Scalar>(stream: &LabeledStream) -> Result<GroundTruthPoint<S>> {
    let table = stream.label_event_counts();
    let n_label = table.map(|row| row.iter().sum::<u64>());
    for label in Label::BOTH {
        if n_label[label.index()] == 0 {
            return Err(Error::MissingLabel(label));
        }
    }
    let n = n_label[0] + n_label[1];

    let mut acc: [[S; 2]; NUM_CLASSIFIERS] = std::array::from_fn(|_| [S::zero(), S::zero()]);
    let mut pair: [[S; 2]; 3] = std::array::from_fn(|_| [S::zero(), S::zero()]);
    let mut triple = [S::zero(), S::zero()];

    for label in Label::BOTH {
        let l = label.index();
        let nl = n_label[l];
        let correct = |e: DecisionEvent, i: usize| -> S {
            if e.vote(i) == label { S::one() } else { S::zero() }
        };
        for i in 0..NUM_CLASSIFIERS {
            let hits: u64 = DecisionEvent::all()
                .filter(|e| e.vote(i) == label)
                .map(|e| table[l][e.index()])
                .sum();
            acc[i][l] = S::from_counts(hits, nl);
        }
        let weight = |e: DecisionEvent| S::from_counts(table[l][e.index()], nl);
        for (p, &(i, j)) in PAIRS.iter().enumerate() {
            pair[p][l] = DecisionEvent::all().fold(S::zero(), |sum, e| {
                sum + weight(e)
                    * (correct(e, i) - acc[i][l].clone())
                    * (correct(e, j) - acc[j][l].clone())
            });
        }
        triple[l] = DecisionEvent::all().fold(S::zero(), |sum, e| {
            sum + weight(e)
                * (correct(e, 0) - acc[0][l].clone())
                * (correct(e, 1) - acc[1][l].clone())
                * (correct(e, 2) - acc[2][l].clone())
        });
    }

    Ok(GroundTruthPoint {
        point: EvaluationPoint {
            prevalence: S::from_counts(n_label[0], n),
            acc,
        },
        correlations: CorrelationSet { pair, triple },
        n_alpha: n_label[0],
        n_beta: n_label[1],
    })
}

/// Reads a decisions file (`item_id,c1,c2,c3[,truth]`, votes in `{a,b}`).
///
/// Columns are located by header name, so `item_id` may be omitted. The
/// labeled stream is returned only when every record carries a truth value.
pub fn ingest_decisions<R: Read>(source: R) -> Result<(DecisionSketch, Option<LabeledStream>)> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(source);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse { row: 1, message: e.to_string() })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let vote_cols: Vec<usize> = ["c1", "c2", "c3"]
        .iter()
        .map(|name| {
            column(name).ok_or_else(|| Error::Parse {
                row: 1,
                message: format!("missing column '{name}'"),
            })
        })
        .collect::<Result<_>>()?;
    let truth_col = column("truth");

    let mut sketch = DecisionSketch::new();
    let mut items = Vec::new();
    let mut with_truth = 0usize;
    let mut without_truth = 0usize;
    let mut first_missing = None;
    let mut first_present = None;

    for (k, record) in reader.records().enumerate() {
        let row = k + 2;
        let record = record.map_err(|e| Error::Parse { row, message: e.to_string() })?;
        let mut votes = [Label::Alpha; NUM_CLASSIFIERS];
        for (slot, &col) in votes.iter_mut().zip(&vote_cols) {
            let raw = record.get(col).ok_or_else(|| Error::Parse {
                row,
                message: "missing vote field".into(),
            })?;
            *slot = Label::parse_field(raw).ok_or_else(|| Error::Parse {
                row,
                message: format!("vote '{raw}' is not one of a, b"),
            })?;
        }
        let event = DecisionEvent::new(votes);
        sketch.update(event)?;

        let truth_raw = truth_col.and_then(|c| record.get(c)).filter(|s| !s.is_empty());
        let extra_field = truth_col.is_none() && record.len() > headers.len();
        match truth_raw {
            Some(raw) => {
                let truth = Label::parse_field(raw).ok_or_else(|| Error::Parse {
                    row,
                    message: format!("truth '{raw}' is not one of a, b"),
                })?;
                items.push((event, truth));
                with_truth += 1;
                first_present.get_or_insert(row);
            }
            None => {
                without_truth += 1;
                first_missing.get_or_insert(row);
                if extra_field {
                    return Err(Error::InconsistentTruthColumn { row });
                }
            }
        }
    }

    if with_truth > 0 && without_truth > 0 {
        let row = first_missing.max(first_present).unwrap_or(1);
        return Err(Error::InconsistentTruthColumn { row });
    }
    let stream = (with_truth > 0).then(|| LabeledStream::new(items));
    Ok((sketch, stream))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{parse_rational, Rational};
    use proptest::prelude::*;

    fn q(s: &str) -> Rational {
        parse_rational(s).unwrap()
    }

    fn ev(key: &str) -> DecisionEvent {
        DecisionEvent::parse_key(key).unwrap()
    }

    #[test]
    fn event_indexing() {
        assert_eq!(ev("aaa").index(), 0);
        assert_eq!(ev("aab").index(), 1);
        assert_eq!(ev("baa").index(), 4);
        assert_eq!(ev("bbb").index(), 7);
        for e in DecisionEvent::all() {
            assert_eq!(DecisionEvent::from_index(e.index()), e);
            assert_eq!(DecisionEvent::parse_key(&e.key()), Some(e));
        }
        assert_eq!(DecisionEvent::all().count(), 8);
        assert!(DecisionEvent::parse_key("abab").is_none());
        assert!(DecisionEvent::parse_key("abc").is_none());
    }

    #[test]
    fn new_update_merge() {
        let empty = DecisionSketch::new();
        assert_eq!(empty.n(), 0);
        assert!(empty.counts().iter().all(|&c| c == 0));
        assert_eq!(empty.merge(&DecisionSketch::new()).unwrap().n(), 0);

        let mut s = DecisionSketch::new();
        s.update(ev("aba")).unwrap();
        assert_eq!(s.count(ev("aba")), 1);
        assert_eq!(s.n(), 1);
        for _ in 0..4 {
            s.update(ev("aba")).unwrap();
        }
        assert_eq!(s.count(ev("aba")), 5);

        let all: DecisionSketch = DecisionEvent::all().collect();
        assert_eq!(all.n(), 8);
        assert!(all.counts().iter().all(|&c| c == 1));
        assert_eq!(all.merge(&empty).unwrap(), all);
        assert_eq!(all.merge(&s).unwrap(), s.merge(&all).unwrap());
    }

    #[test]
    fn overflow_is_an_error() {
        let mut counts = [0u64; 8];
        counts[0] = u64::MAX;
        let mut s = DecisionSketch::from_counts(counts).unwrap();
        assert_eq!(s.update(ev("aaa")), Err(Error::CounterOverflow));
        counts[1] = 1;
        assert_eq!(DecisionSketch::from_counts(counts), Err(Error::CounterOverflow));
    }

    #[test]
    fn frequencies_examples() {
        let s: DecisionSketch = [ev("aaa")].into_iter().collect();
        let f = s.frequencies::<Rational>().unwrap();
        assert_eq!(f.by_key("aaa"), &q("1"));
        assert!(f.iter().skip(1).all(|(_, x)| *x == q("0")));

        let all: DecisionSketch = DecisionEvent::all().collect();
        let f = all.frequencies::<Rational>().unwrap();
        assert!(f.iter().all(|(_, x)| *x == q("1/8")));

        assert_eq!(
            DecisionSketch::new().frequencies::<Rational>(),
            Err(Error::EmptySketch)
        );
        assert!(matches!(
            DecisionSketch::new().statistics::<f64>(),
            Err(Error::EmptySketch)
        ));
    }

    #[test]
    fn statistics_perfect_classifiers() {
        let s = DecisionSketch::from_counts([1, 0, 0, 0, 0, 0, 0, 1]).unwrap();
        let st = s.statistics::<Rational>().unwrap();
        for i in 0..3 {
            assert_eq!(st.f_beta(i), &q("1/2"));
        }
        for p in 0..3 {
            assert_eq!(st.delta[p], q("1/4"));
            assert_eq!(st.agreement[p], q("1"));
        }
        assert_eq!(st.triple_delta, q("0"));
    }

    #[test]
    fn statistics_uniform() {
        let s: DecisionSketch = DecisionEvent::all().collect();
        let st = s.statistics::<Rational>().unwrap();
        for p in 0..3 {
            assert_eq!(st.delta[p], q("0"));
            assert_eq!(st.agreement[p], q("1/2"));
        }
        assert_eq!(st.triple_delta, q("0"));
    }

    #[test]
    fn truth_statistics_perfect_stream() {
        let stream = LabeledStream::new(vec![
            (ev("aaa"), Label::Alpha),
            (ev("bbb"), Label::Beta),
            (ev("aaa"), Label::Alpha),
        ]);
        let gt = truth_statistics::<Rational>(&stream).unwrap();
        assert_eq!(gt.point.prevalence, q("2/3"));
        assert!(gt.point.acc.iter().flatten().all(|a| *a == q("1")));
        assert!(gt.correlations.pair.iter().flatten().all(|g| *g == q("0")));
        assert!(gt.correlations.triple.iter().all(|g| *g == q("0")));
        assert_eq!((gt.n_alpha, gt.n_beta), (2, 1));
    }

    #[test]
    fn truth_statistics_single_item_per_label() {
        let stream = LabeledStream::new(vec![(ev("abb"), Label::Alpha), (ev("aab"), Label::Beta)]);
        let gt = truth_statistics::<Rational>(&stream).unwrap();
        assert!(gt.correlations.pair.iter().flatten().all(|g| *g == q("0")));
        assert_eq!(gt.point.acc[0], [q("1"), q("0")]);
        assert_eq!(gt.point.acc[2], [q("0"), q("1")]);
    }

    #[test]
    fn truth_statistics_missing_label() {
        let stream = LabeledStream::new(vec![(ev("aaa"), Label::Alpha)]);
        assert_eq!(
            truth_statistics::<Rational>(&stream),
            Err(Error::MissingLabel(Label::Beta))
        );
        assert_eq!(
            truth_statistics::<Rational>(&LabeledStream::default()),
            Err(Error::MissingLabel(Label::Alpha))
        );
    }

    #[test]
    fn ingest_basic() {
        let data = "item_id,c1,c2,c3\n1,a,a,a\n2,a,a,a\n3,a,a,a\n";
        let (s, stream) = ingest_decisions(data.as_bytes()).unwrap();
        assert_eq!(s.count(ev("aaa")), 3);
        assert!(stream.is_none());
    }

    #[test]
    fn ingest_truth_without_item_id() {
        let data = "c1,c2,c3,truth\na,b,a,b\n";
        let (s, stream) = ingest_decisions(data.as_bytes()).unwrap();
        assert_eq!(s.count(ev("aba")), 1);
        assert_eq!(stream.unwrap().items, vec![(ev("aba"), Label::Beta)]);
    }

    #[test]
    fn ingest_errors() {
        let data = "item_id,c1,c2,c3\n1,a,a,a\n2,a,c,a\n";
        assert_eq!(
            ingest_decisions(data.as_bytes()).unwrap_err(),
            Error::Parse { row: 3, message: "vote 'c' is not one of a, b".into() }
        );
        let data = "item_id,c1,c2,c3,truth\n1,a,a,a,a\n2,a,b,a,\n";
        assert_eq!(
            ingest_decisions(data.as_bytes()).unwrap_err(),
            Error::InconsistentTruthColumn { row: 3 }
        );
        let data = "item_id,c1,c2,c3\n1,a,a,a\n2,a,b,a,b\n";
        assert_eq!(
            ingest_decisions(data.as_bytes()).unwrap_err(),
            Error::InconsistentTruthColumn { row: 3 }
        );
        let data = "item_id,c1,c2\n1,a,a\n";
        assert!(matches!(ingest_decisions(data.as_bytes()), Err(Error::Parse { row: 1, .. })));
    }

    #[test]
    fn csv_round_trip() {
        let stream = LabeledStream::new(vec![(ev("abb"), Label::Alpha), (ev("bab"), Label::Beta)]);
        let mut buf = Vec::new();
        stream.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("item_id,c1,c2,c3,truth\n1,a,b,b,a\n"));
        let (s, back) = ingest_decisions(text.as_bytes()).unwrap();
        assert_eq!(back.unwrap(), stream);
        assert_eq!(s, stream.sketch());
    }

    #[test]
    fn sketch_json() {
        let s = DecisionSketch::from_counts([39, 1, 2, 3, 4, 5, 6, 65]).unwrap();
        let text = s.to_json();
        assert!(text.contains("\"aaa\": 39"));
        assert_eq!(DecisionSketch::from_json(&text).unwrap(), s);
        let bad = r#"{"n": 3, "counts": {"aaa": 1}}"#;
        assert!(matches!(DecisionSketch::from_json(bad), Err(Error::Format(_))));
        let bad = r#"{"n": 1, "counts": {"aax": 1}}"#;
        assert!(matches!(DecisionSketch::from_json(bad), Err(Error::Format(_))));
    }

    fn arb_sketch() -> impl Strategy<Value = DecisionSketch> {
        proptest::array::uniform8(0u64..50)
            .prop_filter("nonempty", |c| c.iter().sum::<u64>() > 0)
            .prop_map(|c| DecisionSketch::from_counts(c).unwrap())
    }

    fn arb_stream() -> impl Strategy<Value = LabeledStream> {
        proptest::collection::vec((0usize..8, any::<bool>()), 2..60).prop_map(|v| {
            LabeledStream::new(
                v.into_iter()
                    .map(|(e, b)| {
                        (DecisionEvent::from_index(e), if b { Label::Beta } else { Label::Alpha })
                    })
                    .collect(),
            )
        })
    }

    proptest! {
        #[test]
        fn counter_conservation(events in proptest::collection::vec(0usize..8, 0..200)) {
            let s: DecisionSketch = events.iter().map(|&k| DecisionEvent::from_index(k)).collect();
            prop_assert_eq!(s.counts().iter().sum::<u64>(), s.n());
            prop_assert_eq!(s.n() as usize, events.len());
        }

        #[test]
        fn split_and_merge(events in proptest::collection::vec(0usize..8, 0..200), cut in 0usize..200) {
            let cut = cut.min(events.len());
            let all: DecisionSketch = events.iter().map(|&k| DecisionEvent::from_index(k)).collect();
            let a: DecisionSketch = events[..cut].iter().map(|&k| DecisionEvent::from_index(k)).collect();
            let b: DecisionSketch = events[cut..].iter().map(|&k| DecisionEvent::from_index(k)).collect();
            prop_assert_eq!(a.merge(&b).unwrap(), all);
        }

        #[test]
        fn frequency_and_marginal_identities(s in arb_sketch()) {
            let f = s.frequencies::<Rational>().unwrap();
            prop_assert_eq!(f.sum(), q("1"));
            let st = SketchStatistics::from_frequencies(&f);
            prop_assert_eq!(st.delta_from_alpha(), st.delta.clone());
            for i in 0..3 {
                prop_assert_eq!(st.f_label[i][0].clone(), q("1") - st.f_label[i][1].clone());
            }
            for (p, &(i, j)) in PAIRS.iter().enumerate() {
                prop_assert_eq!(
                    st.f_pair[p][0].clone(),
                    q("1") - st.f_label[i][1].clone() - st.f_label[j][1].clone() + st.f_pair[p][1].clone()
                );
                let agree: Rational = f.iter()
                    .filter(|(e, _)| e.vote(i) == e.vote(j))
                    .map(|(_, x)| x.clone())
                    .sum();
                prop_assert_eq!(st.agreement[p].clone(), agree);
                prop_assert!(st.agreement[p] >= q("0") && st.agreement[p] <= q("1"));
            }
        }

        #[test]
        fn pair_correlation_is_mean_product_minus_product_mean(stream in arb_stream()) {
            let gt = match truth_statistics::<Rational>(&stream) {
                Ok(gt) => gt,
                Err(_) => return Ok(()),
            };
            for label in Label::BOTH {
                let l = label.index();
                let items: Vec<_> = stream.items.iter().filter(|(_, t)| *t == label).collect();
                let nl = items.len() as i64;
                for (p, &(i, j)) in PAIRS.iter().enumerate() {
                    let both = items.iter()
                        .filter(|(e, _)| e.vote(i) == label && e.vote(j) == label)
                        .count() as i64;
                    let expected = Rational::from_ratio(both, nl)
                        - gt.point.acc[i][l].clone() * gt.point.acc[j][l].clone();
                    prop_assert_eq!(gt.correlations.pair[p][l].clone(), expected);
                }
            }
        }
    }
}
