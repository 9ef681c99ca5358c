//! Depth-indexed behaviour maps and bounded behavioural distance for the
//! four built-in semantics.
//!
//! Each semantics observes, after `n` steps, an aggregate over length-`n`
//! label words: a trace set, a fuzzy trace set, a trace distribution, or a
//! single stream prefix. Distances between aggregates are the lifted
//! distances over the word space with the semantics' tensor (supremum for
//! metric traces and streams, Manhattan for trace distributions, discrete
//! for fuzzy traces). Word metrics are evaluated lazily on support pairs;
//! the eager word space is never materialized here.

use crate::lifting::{
    fuzzy_hausdorff_by, hausdorff_by, kantorovich_by, FinDist, FinSet, FuzzySet, SolverError,
};
use crate::metric::{word_distance, SizeError, TensorKind, TRACE_SPACE_CAP};
use crate::num::OrdF64;
use crate::system::{Coalgebra, SystemKind, Trans};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// A label word, as indices into the system's label space.
pub type Word = Vec<usize>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Semantics {
    MetricTrace,
    FuzzyTrace,
    ProbTrace,
    StreamBranching,
}

impl Semantics {
    pub fn as_str(&self) -> &'static str {
        match self {
            Semantics::MetricTrace => "metric_trace",
            Semantics::FuzzyTrace => "fuzzy_trace",
            Semantics::ProbTrace => "prob_trace",
            Semantics::StreamBranching => "stream",
        }
    }

    pub fn parse(s: &str) -> Option<Semantics> {
        match s {
            "metric_trace" => Some(Semantics::MetricTrace),
            "fuzzy_trace" => Some(Semantics::FuzzyTrace),
            "prob_trace" => Some(Semantics::ProbTrace),
            "stream" | "stream_branching" => Some(Semantics::StreamBranching),
            _ => None,
        }
    }

    /// The system kind this semantics observes.
    pub fn system_kind(&self) -> SystemKind {
        match self {
            Semantics::MetricTrace => SystemKind::MetricTs,
            Semantics::FuzzyTrace => SystemKind::FuzzyLts,
            Semantics::ProbTrace => SystemKind::ProbTs,
            Semantics::StreamBranching => SystemKind::Stream,
        }
    }

    /// Tensor combining label distance with tail distance on words.
    /// Fuzzy traces live over discrete words; the supremum tensor over a
    /// discrete label space computes exactly that.
    pub fn tensor(&self) -> TensorKind {
        match self {
            Semantics::MetricTrace | Semantics::FuzzyTrace | Semantics::StreamBranching => {
                TensorKind::sup()
            }
            Semantics::ProbTrace => TensorKind::manhattan(),
        }
    }
}

/// Observable behaviour of one state at a fixed depth.
#[derive(Debug, Clone, PartialEq)]
pub enum Behaviour {
    Traces(FinSet<Word>),
    FuzzyTraces(FuzzySet<Word>),
    TraceDist(FinDist<Word>),
    StreamPrefix(Word),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BehaviourAggregate {
    pub semantics: Semantics,
    pub depth: usize,
    pub value: Behaviour,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradedError {
    #[error("semantics {sem} expects a {expected} system, found {found}")]
    SemanticsMismatch { sem: &'static str, expected: &'static str, found: &'static str },
    #[error(transparent)]
    Size(#[from] SizeError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("state index {0} out of range")]
    BadState(usize),
}

fn check_compat(c: &Coalgebra, sem: Semantics) -> Result<(), GradedError> {
    if c.kind != sem.system_kind() {
        return Err(GradedError::SemanticsMismatch {
            sem: sem.as_str(),
            expected: sem.system_kind().as_str(),
            found: c.kind.as_str(),
        });
    }
    Ok(())
}

fn check_size(c: &Coalgebra, n: usize) -> Result<(), GradedError> {
    let size = c.labels.len().max(1).checked_pow(n as u32).unwrap_or(usize::MAX);
    if size > TRACE_SPACE_CAP {
        return Err(GradedError::Size(SizeError { size, cap: TRACE_SPACE_CAP }));
    }
    Ok(())
}

/// Pairs every element of a set value with the label `a`.
pub fn kleisli_step_set<E: Ord + Clone>(a: usize, v: &FinSet<E>) -> FinSet<(usize, E)> {
    v.map(|e| (a, e.clone()))
}

/// Pairs every atom of a distribution with the label `a`; weights unchanged.
pub fn kleisli_step_dist<E: Ord + Clone>(a: usize, v: &FinDist<E>) -> FinDist<(usize, E)> {
    v.map(|e| (a, e.clone()))
}

/// Pairs every element of a fuzzy value with the label `a`; memberships
/// unchanged.
pub fn kleisli_step_fuzzy<E: Ord + Clone>(a: usize, v: &FuzzySet<E>) -> FuzzySet<(usize, E)> {
    v.map(|e| (a, e.clone()))
}

/// Behaviours of every state after exactly `n` steps, computed layer by
/// layer from depth 0 (`ε` for every state).
pub fn behaviour_map(
    c: &Coalgebra,
    sem: Semantics,
    n: usize,
) -> Result<Vec<BehaviourAggregate>, GradedError> {
    check_compat(c, sem)?;
    check_size(c, n)?;
    let states = c.state_count();

    match sem {
        Semantics::MetricTrace => {
            let mut layer: Vec<FinSet<Word>> =
                (0..states).map(|_| FinSet::unit(Vec::new())).collect();
            for _ in 0..n {
                let mut next = Vec::with_capacity(states);
                for x in 0..states {
                    let Trans::Set(pairs) = c.trans(x) else { unreachable!() };
                    let mut traces: BTreeSet<Word> = BTreeSet::new();
                    for &(a, x2) in pairs {
                        for w in layer[x2].iter() {
                            let mut word = Vec::with_capacity(w.len() + 1);
                            word.push(a);
                            word.extend_from_slice(w);
                            traces.insert(word);
                        }
                    }
                    next.push(FinSet::new(traces));
                }
                layer = next;
            }
            Ok(layer
                .into_iter()
                .map(|v| BehaviourAggregate { semantics: sem, depth: n, value: Behaviour::Traces(v) })
                .collect())
        }
        Semantics::FuzzyTrace => {
            let mut layer: Vec<BTreeMap<Word, f64>> =
                (0..states).map(|_| BTreeMap::from([(Vec::new(), 1.0)])).collect();
            for _ in 0..n {
                let mut next = Vec::with_capacity(states);
                for x in 0..states {
                    let Trans::Fuzzy(m) = c.trans(x) else { unreachable!() };
                    let mut out: BTreeMap<Word, f64> = BTreeMap::new();
                    for (&(a, x2), &r) in m {
                        for (w, t) in &layer[x2] {
                            let v = r.min(*t);
                            if v == 0.0 {
                                continue;
                            }
                            let mut word = Vec::with_capacity(w.len() + 1);
                            word.push(a);
                            word.extend_from_slice(w);
                            let slot = out.entry(word).or_insert(0.0);
                            *slot = slot.max(v);
                        }
                    }
                    next.push(out);
                }
                layer = next;
            }
            Ok(layer
                .into_iter()
                .map(|m| BehaviourAggregate {
                    semantics: sem,
                    depth: n,
                    value: Behaviour::FuzzyTraces(
                        FuzzySet::new(m).expect("memberships stay in (0,1]"),
                    ),
                })
                .collect())
        }
        Semantics::ProbTrace => {
            let mut layer: Vec<BTreeMap<Word, f64>> =
                (0..states).map(|_| BTreeMap::from([(Vec::new(), 1.0)])).collect();
            for _ in 0..n {
                let mut next = Vec::with_capacity(states);
                for x in 0..states {
                    let Trans::Dist(m) = c.trans(x) else { unreachable!() };
                    let mut out: BTreeMap<Word, f64> = BTreeMap::new();
                    for (&(a, x2), &p) in m {
                        for (w, q) in &layer[x2] {
                            let mut word = Vec::with_capacity(w.len() + 1);
                            word.push(a);
                            word.extend_from_slice(w);
                            *out.entry(word).or_insert(0.0) += p * q;
                        }
                    }
                    next.push(out);
                }
                layer = next;
            }
            Ok(layer
                .into_iter()
                .map(|m| BehaviourAggregate {
                    semantics: sem,
                    depth: n,
                    // mass is preserved per layer up to float drift
                    value: Behaviour::TraceDist(FinDist::from_raw(m)),
                })
                .collect())
        }
        Semantics::StreamBranching => {
            let mut out = Vec::with_capacity(states);
            for x in 0..states {
                let mut word = Vec::with_capacity(n);
                let mut cur = x;
                for _ in 0..n {
                    let Trans::Stream(a, x2) = c.trans(cur) else { unreachable!() };
                    word.push(*a);
                    cur = *x2;
                }
                out.push(BehaviourAggregate {
                    semantics: sem,
                    depth: n,
                    value: Behaviour::StreamPrefix(word),
                });
            }
            Ok(out)
        }
    }
}

/// The semantics' distance between two aggregates of equal depth.
pub fn aggregate_distance(
    c: &Coalgebra,
    a: &BehaviourAggregate,
    b: &BehaviourAggregate,
) -> Result<f64, GradedError> {
    let t = a.semantics.tensor();
    let wd = |u: &Word, v: &Word| word_distance(&c.labels, t, u, v);
    match (&a.value, &b.value) {
        (Behaviour::Traces(s1), Behaviour::Traces(s2)) => Ok(hausdorff_by(s1, s2, wd)),
        (Behaviour::FuzzyTraces(f1), Behaviour::FuzzyTraces(f2)) => {
            // discrete word metric
            Ok(fuzzy_hausdorff_by(f1, f2, |u: &Word, v: &Word| if u == v { 0.0 } else { 1.0 }))
        }
        (Behaviour::TraceDist(d1), Behaviour::TraceDist(d2)) => {
            let (v, _) = kantorovich_by(d1, d2, wd)?;
            Ok(v)
        }
        (Behaviour::StreamPrefix(w1), Behaviour::StreamPrefix(w2)) => Ok(wd(w1, w2)),
        _ => unreachable!("aggregates of one behaviour map share a shape"),
    }
}

/// Depth-`n` behavioural distance between two states.
pub fn depth_distance(
    c: &Coalgebra,
    sem: Semantics,
    x: usize,
    y: usize,
    n: usize,
) -> Result<f64, GradedError> {
    let states = c.state_count();
    if x >= states {
        return Err(GradedError::BadState(x));
    }
    if y >= states {
        return Err(GradedError::BadState(y));
    }
    let behaviours = behaviour_map(c, sem, n)?;
    aggregate_distance(c, &behaviours[x], &behaviours[y])
}

/// Per-depth distances up to `N` and their running maximum. The maximum is a
/// lower bound of the unbounded supremum over all depths; per-depth values
/// need not be monotone (deadlocks can make them drop), so the maximum is
/// reported rather than the last entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BehaviouralDistance {
    pub per_depth: Vec<f64>,
    pub max: f64,
}

pub fn behavioural_distance(
    c: &Coalgebra,
    sem: Semantics,
    x: usize,
    y: usize,
    depth: usize,
) -> Result<BehaviouralDistance, GradedError> {
    let mut per_depth = Vec::with_capacity(depth + 1);
    for n in 0..=depth {
        per_depth.push(depth_distance(c, sem, x, y, n)?);
    }
    let max = per_depth.iter().copied().fold(0.0_f64, f64::max);
    Ok(BehaviouralDistance { per_depth, max })
}

/// Replaces each atom `p·(a, v)` of a distribution over (label, value) pairs
/// by `p·v·(a, 1) + p·(1-v)·(a, 0)`, dropping zero-weight atoms.
pub fn binarize_distribution(pi: &FinDist<(usize, OrdF64)>) -> FinDist<(usize, OrdF64)> {
    let mut out: BTreeMap<(usize, OrdF64), f64> = BTreeMap::new();
    for (&(a, v), p) in pi.iter() {
        let hi = p * v.get();
        let lo = p * (1.0 - v.get());
        if hi != 0.0 {
            *out.entry((a, OrdF64(1.0))).or_insert(0.0) += hi;
        }
        if lo != 0.0 {
            *out.entry((a, OrdF64(0.0))).or_insert(0.0) += lo;
        }
    }
    FinDist::new(out).expect("binarization preserves total mass")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::presets;

    #[test]
    fn depth_zero_is_unit() {
        let c = presets::crossed_coin_pair(0.5);
        let b = behaviour_map(&c, Semantics::ProbTrace, 0).unwrap();
        for agg in &b {
            let Behaviour::TraceDist(d) = &agg.value else { panic!() };
            assert_eq!(d.len(), 1);
            assert_eq!(d.weight(&Vec::new()), 1.0);
        }
    }

    #[test]
    fn coin_pair_depth_two_distribution() {
        let c = presets::crossed_coin_pair(0.5);
        let b = behaviour_map(&c, Semantics::ProbTrace, 2).unwrap();
        let x = c.state_index("x").unwrap();
        let Behaviour::TraceDist(d) = &b[x].value else { panic!() };
        assert_eq!(d.weight(&vec![0, 0]), 0.5);
        assert_eq!(d.weight(&vec![1, 1]), 0.5);
        assert_eq!(d.len(), 2);
    }

    #[test]
    fn coin_pair_distances() {
        for v in [0.2, 0.5, 0.8, 1.0] {
            let c = presets::crossed_coin_pair(v);
            let x = c.state_index("x").unwrap();
            let y = c.state_index("y").unwrap();
            let b = behavioural_distance(&c, Semantics::ProbTrace, x, y, 3).unwrap();
            assert!(b.per_depth[0].abs() < 1e-12);
            assert!(b.per_depth[1].abs() < 1e-9, "depth-1 profiles agree");
            assert!((b.per_depth[2] - v).abs() < 1e-6, "v={v}: {:?}", b.per_depth);
            assert!((b.max - v).abs() < 1e-6);
        }
    }

    #[test]
    fn self_distance_zero() {
        let c = presets::crossed_coin_pair(0.5);
        let b = behavioural_distance(&c, Semantics::ProbTrace, 0, 0, 3).unwrap();
        assert!(b.max.abs() < 1e-12);
    }

    #[test]
    fn fuzzy_chain_traces() {
        let c = presets::fuzzy_chain();
        let b = behaviour_map(&c, Semantics::FuzzyTrace, 2).unwrap();
        let x = c.state_index("x").unwrap();
        let Behaviour::FuzzyTraces(f) = &b[x].value else { panic!() };
        assert_eq!(f.membership(&vec![0, 1]), 0.4);

        let x2 = c.state_index("x2").unwrap();
        let d = depth_distance(&c, Semantics::FuzzyTrace, x, x2, 2).unwrap();
        assert!((d - 0.4).abs() < 1e-12);
    }

    #[test]
    fn metric_trace_singletons() {
        let c = presets::metric_singletons(0.3);
        let s = c.state_index("s").unwrap();
        let t = c.state_index("t").unwrap();
        let d = depth_distance(&c, Semantics::MetricTrace, s, t, 1).unwrap();
        assert!((d - 0.3).abs() < 1e-12);
    }

    #[test]
    fn stream_prefix_distance() {
        let c = presets::stream_pair(0.8);
        let u = c.state_index("u").unwrap();
        let w = c.state_index("w").unwrap();
        let d = depth_distance(&c, Semantics::StreamBranching, u, w, 3).unwrap();
        assert!((d - 0.8).abs() < 1e-12);
    }

    #[test]
    fn word_space_cap_is_enforced() {
        let c = presets::crossed_coin_pair(0.5);
        // 2^40 words blow the eager cap long before any allocation
        assert!(matches!(
            behaviour_map(&c, Semantics::ProbTrace, 40),
            Err(GradedError::Size(_))
        ));
    }

    #[test]
    fn semantics_mismatch() {
        let c = presets::fuzzy_chain();
        assert!(matches!(
            behaviour_map(&c, Semantics::ProbTrace, 1),
            Err(GradedError::SemanticsMismatch { .. })
        ));
    }

    #[test]
    fn kleisli_pairing() {
        let v = FinSet::new([0usize, 1]);
        let paired = kleisli_step_set(7, &v);
        assert!(paired.contains(&(7, 0)) && paired.contains(&(7, 1)));
    }

    #[test]
    fn binarize_examples() {
        // fixed point
        let pi = FinDist::dirac((0usize, OrdF64(1.0)));
        assert_eq!(binarize_distribution(&pi), pi);
        // ½(a,0) + ½(b,0.5) → ½(a,0) + ¼(b,1) + ¼(b,0)
        let pi = FinDist::new([((0usize, OrdF64(0.0)), 0.5), ((1usize, OrdF64(0.5)), 0.5)])
            .unwrap();
        let bin = binarize_distribution(&pi);
        assert_eq!(bin.weight(&(0, OrdF64(0.0))), 0.5);
        assert_eq!(bin.weight(&(1, OrdF64(1.0))), 0.25);
        assert_eq!(bin.weight(&(1, OrdF64(0.0))), 0.25);
        // all-zero values: all mass at (·, 0)
        let pi = FinDist::new([((0usize, OrdF64(0.0)), 1.0)]).unwrap();
        let bin = binarize_distribution(&pi);
        assert_eq!(bin.weight(&(0, OrdF64(0.0))), 1.0);
    }
}
