//! Finite coalgebraic system models over a label space, with JSON ingestion
//! and validation.
//!
//! File format (UTF-8 JSON):
//! ```json
//! { "kind": "metric_ts|fuzzy_lts|prob_ts|stream",
//!   "labels": {"names": ["a","b"], "metric": "discrete"},
//!   "states": ["x","y"],
//!   "trans": { "x": [ {"label": "a", "to": "y", "w": 0.5} ] } }
//! ```
//! `labels.metric` is either the string `"discrete"` or a full distance
//! matrix. `"w"` is required for `fuzzy_lts` (membership) and `prob_ts`
//! (probability) and forbidden otherwise; `stream` entries must be
//! singletons. An optional `"state_metric"` matrix is validated and recorded
//! but not used by any distance computation.

use crate::metric::{FinMetric, LabelSpace, MetricKind};
use crate::num::TOL;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SystemKind {
    MetricTs,
    FuzzyLts,
    ProbTs,
    Stream,
}

impl SystemKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SystemKind::MetricTs => "metric_ts",
            SystemKind::FuzzyLts => "fuzzy_lts",
            SystemKind::ProbTs => "prob_ts",
            SystemKind::Stream => "stream",
        }
    }

    pub fn parse(s: &str) -> Option<SystemKind> {
        match s {
            "metric_ts" => Some(SystemKind::MetricTs),
            "fuzzy_lts" => Some(SystemKind::FuzzyLts),
            "prob_ts" => Some(SystemKind::ProbTs),
            "stream" => Some(SystemKind::Stream),
            _ => None,
        }
    }
}

/// One-step structure of a single state. Pairs are `(label index, state
/// index)`.
#[derive(Debug, Clone, PartialEq)]
pub enum Trans {
    Set(BTreeSet<(usize, usize)>),
    Fuzzy(BTreeMap<(usize, usize), f64>),
    Dist(BTreeMap<(usize, usize), f64>),
    Stream(usize, usize),
}

/// A finite coalgebra: label space, state space (pseudometric allowed,
/// discrete by default) and a one-step structure per state.
#[derive(Debug, Clone, PartialEq)]
pub struct Coalgebra {
    pub kind: SystemKind,
    pub labels: LabelSpace,
    pub states: FinMetric,
    trans: Vec<Trans>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FindingCode {
    UnknownLabel,
    UnknownState,
    WeightRange,
    MassNotOne,
    Deadlock,
    NotSingleton,
    LabelsNotDiscrete,
    BadMetric,
    KindMismatch,
}

/// One structured validation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub code: FindingCode,
    pub location: String,
    pub message: String,
}

impl std::fmt::Display for Finding {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

#[derive(Debug, Error)]
pub enum SystemError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed system file: {0}")]
    Parse(String),
    #[error("invalid system: {0}")]
    Validation(Finding),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum MetricSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Serialize, Deserialize)]
struct LabelsFile {
    names: Vec<String>,
    metric: MetricSpec,
}

#[derive(Debug, Serialize, Deserialize)]
struct Edge {
    label: String,
    to: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    w: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct SystemFile {
    kind: String,
    labels: LabelsFile,
    states: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    state_metric: Option<Vec<Vec<f64>>>,
    trans: BTreeMap<String, Vec<Edge>>,
}

impl Coalgebra {
    /// Builds without validation; pair with [`validate_system`].
    pub fn new_unchecked(
        kind: SystemKind,
        labels: LabelSpace,
        states: FinMetric,
        trans: Vec<Trans>,
    ) -> Coalgebra {
        Coalgebra { kind, labels, states, trans }
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.index_of(id)
    }

    pub fn state_name(&self, i: usize) -> &str {
        &self.states.points()[i]
    }

    pub fn trans(&self, state: usize) -> &Trans {
        &self.trans[state]
    }

    /// Serializes back to the file schema (canonical ordering: states and
    /// transitions as stored).
    pub fn to_json(&self) -> String {
        let metric = if self.labels.is_discrete() {
            MetricSpec::Named("discrete".into())
        } else {
            MetricSpec::Matrix(self.labels.space().matrix().to_vec())
        };
        let mut trans = BTreeMap::new();
        for (i, t) in self.trans.iter().enumerate() {
            let state = self.state_name(i).to_string();
            let mut edges = Vec::new();
            let mut push = |l: usize, s: usize, w: Option<f64>| {
                edges.push(Edge {
                    label: self.labels.names()[l].clone(),
                    to: self.state_name(s).to_string(),
                    w,
                });
            };
            match t {
                Trans::Set(pairs) => {
                    for &(l, s) in pairs {
                        push(l, s, None);
                    }
                }
                Trans::Fuzzy(m) | Trans::Dist(m) => {
                    for (&(l, s), &w) in m {
                        push(l, s, Some(w));
                    }
                }
                Trans::Stream(l, s) => push(*l, *s, None),
            }
            trans.insert(state, edges);
        }
        let state_metric = if self.states.is_discrete() {
            None
        } else {
            Some(self.states.matrix().to_vec())
        };
        let file = SystemFile {
            kind: self.kind.as_str().to_string(),
            labels: LabelsFile { names: self.labels.names().to_vec(), metric },
            states: self.states.points().to_vec(),
            state_metric,
            trans,
        };
        serde_json::to_string_pretty(&file).expect("system serialization cannot fail")
    }
}

/// Parses and fully validates a system file.
pub fn load_system(path: impl AsRef<Path>) -> Result<Coalgebra, SystemError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| SystemError::Io {
        path: path.display().to_string(),
        source,
    })?;
    load_system_str(&text)
}

/// Parses and fully validates a system given as a JSON string.
pub fn load_system_str(text: &str) -> Result<Coalgebra, SystemError> {
    let file: SystemFile =
        serde_json::from_str(text).map_err(|e| SystemError::Parse(e.to_string()))?;

    let kind = SystemKind::parse(&file.kind)
        .ok_or_else(|| SystemError::Parse(format!("unknown system kind `{}`", file.kind)))?;

    let labels = match &file.labels.metric {
        MetricSpec::Named(s) if s == "discrete" => LabelSpace::discrete(file.labels.names.clone()),
        MetricSpec::Named(s) => {
            return Err(SystemError::Parse(format!(
                "labels.metric must be \"discrete\" or a matrix, got `{s}`"
            )))
        }
        MetricSpec::Matrix(m) => FinMetric::validate(
            file.labels.names.clone(),
            m.clone(),
            MetricKind::Metric,
        )
        .and_then(LabelSpace::new),
    }
    .map_err(|e| {
        SystemError::Validation(Finding {
            code: FindingCode::BadMetric,
            location: "labels.metric".into(),
            message: e.to_string(),
        })
    })?;

    let states = match &file.state_metric {
        None => FinMetric::discrete(file.states.clone()),
        Some(m) => FinMetric::validate(file.states.clone(), m.clone(), MetricKind::Pseudometric),
    }
    .map_err(|e| {
        SystemError::Validation(Finding {
            code: FindingCode::BadMetric,
            location: "state_metric".into(),
            message: e.to_string(),
        })
    })?;

    let mut trans = Vec::with_capacity(states.len());
    for state in states.points().iter() {
        let edges = file.trans.get(state).map(Vec::as_slice).unwrap_or(&[]);
        let mut resolved = Vec::new();
        for (ei, e) in edges.iter().enumerate() {
            let loc = format!("trans.{state}[{ei}]");
            let l = labels.index_of(&e.label).ok_or_else(|| {
                SystemError::Validation(Finding {
                    code: FindingCode::UnknownLabel,
                    location: format!("{loc}.label"),
                    message: format!("label `{}` not declared", e.label),
                })
            })?;
            let s = states.index_of(&e.to).ok_or_else(|| {
                SystemError::Validation(Finding {
                    code: FindingCode::UnknownState,
                    location: format!("{loc}.to"),
                    message: format!("state `{}` not declared", e.to),
                })
            })?;
            let needs_w = matches!(kind, SystemKind::FuzzyLts | SystemKind::ProbTs);
            match (needs_w, e.w) {
                (true, None) => {
                    return Err(SystemError::Validation(Finding {
                        code: FindingCode::WeightRange,
                        location: format!("{loc}.w"),
                        message: "weight `w` is required for this system kind".into(),
                    }))
                }
                (false, Some(_)) => {
                    return Err(SystemError::Validation(Finding {
                        code: FindingCode::WeightRange,
                        location: format!("{loc}.w"),
                        message: "weight `w` is forbidden for this system kind".into(),
                    }))
                }
                _ => {}
            }
            resolved.push((l, s, e.w));
        }
        let t = match kind {
            SystemKind::MetricTs => {
                Trans::Set(resolved.iter().map(|&(l, s, _)| (l, s)).collect())
            }
            SystemKind::FuzzyLts => Trans::Fuzzy(
                resolved.iter().map(|&(l, s, w)| ((l, s), w.unwrap())).collect(),
            ),
            SystemKind::ProbTs => Trans::Dist(
                resolved.iter().map(|&(l, s, w)| ((l, s), w.unwrap())).collect(),
            ),
            SystemKind::Stream => {
                if resolved.len() != 1 {
                    return Err(SystemError::Validation(Finding {
                        code: FindingCode::NotSingleton,
                        location: format!("trans.{state}"),
                        message: format!(
                            "stream state must have exactly one transition, found {}",
                            resolved.len()
                        ),
                    }));
                }
                Trans::Stream(resolved[0].0, resolved[0].1)
            }
        };
        trans.push(t);
    }

    let c = Coalgebra { kind, labels, states, trans };
    match validate_system(&c).into_iter().next() {
        None => Ok(c),
        Some(f) => Err(SystemError::Validation(f)),
    }
}

/// Checks every structural invariant; an empty list means the system is
/// well-formed. Distinct from [`load_system`] so hand-built coalgebras can be
/// audited too.
pub fn validate_system(c: &Coalgebra) -> Vec<Finding> {
    let mut findings = Vec::new();
    let nl = c.labels.len();
    let ns = c.states.len();
    if c.trans.len() != ns {
        findings.push(Finding {
            code: FindingCode::KindMismatch,
            location: "trans".into(),
            message: format!("{} transition rows for {} states", c.trans.len(), ns),
        });
        return findings;
    }
    if c.kind == SystemKind::FuzzyLts && !c.labels.is_discrete() {
        findings.push(Finding {
            code: FindingCode::LabelsNotDiscrete,
            location: "labels.metric".into(),
            message: "fuzzy systems require a discrete label space".into(),
        });
    }
    for (si, t) in c.trans.iter().enumerate() {
        let state = c.state_name(si).to_string();
        let check_ref = |l: usize, s: usize, findings: &mut Vec<Finding>| {
            if l >= nl {
                findings.push(Finding {
                    code: FindingCode::UnknownLabel,
                    location: format!("trans.{state}"),
                    message: format!("label index {l} out of range"),
                });
            }
            if s >= ns {
                findings.push(Finding {
                    code: FindingCode::UnknownState,
                    location: format!("trans.{state}"),
                    message: format!("state index {s} out of range"),
                });
            }
        };
        match (c.kind, t) {
            (SystemKind::MetricTs, Trans::Set(pairs)) => {
                for &(l, s) in pairs {
                    check_ref(l, s, &mut findings);
                }
            }
            (SystemKind::FuzzyLts, Trans::Fuzzy(m)) => {
                for (&(l, s), &w) in m {
                    check_ref(l, s, &mut findings);
                    if !(w > 0.0 && w <= 1.0) {
                        findings.push(Finding {
                            code: FindingCode::WeightRange,
                            location: format!("trans.{state}"),
                            message: format!("membership {w} out of range (0,1]"),
                        });
                    }
                }
            }
            (SystemKind::ProbTs, Trans::Dist(m)) => {
                if m.is_empty() {
                    findings.push(Finding {
                        code: FindingCode::Deadlock,
                        location: format!("trans.{state}"),
                        message: "no outgoing distribution".into(),
                    });
                    continue;
                }
                let mut mass = 0.0;
                for (&(l, s), &w) in m {
                    check_ref(l, s, &mut findings);
                    if !(w > 0.0 && w <= 1.0 + TOL) {
                        findings.push(Finding {
                            code: FindingCode::WeightRange,
                            location: format!("trans.{state}"),
                            message: format!("probability {w} out of range (0,1]"),
                        });
                    }
                    mass += w;
                }
                if (mass - 1.0).abs() > TOL {
                    findings.push(Finding {
                        code: FindingCode::MassNotOne,
                        location: format!("trans.{state}"),
                        message: format!("mass {mass} ≠ 1"),
                    });
                }
            }
            (SystemKind::Stream, Trans::Stream(l, s)) => {
                check_ref(*l, *s, &mut findings);
            }
            (_, _) => {
                findings.push(Finding {
                    code: FindingCode::KindMismatch,
                    location: format!("trans.{state}"),
                    message: "transition shape does not match the system kind".into(),
                });
            }
        }
    }
    findings
}

/// Built-in example systems used by the reproduction commands and tests.
pub mod presets {
    use super::*;

    fn label_pair(v: f64) -> LabelSpace {
        let m = FinMetric::validate(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, v], vec![v, 0.0]],
            MetricKind::Metric,
        )
        .expect("valid two-label space");
        LabelSpace::new(m).expect("valid label space")
    }

    /// Two three-state probabilistic systems over labels `{a,b}` with
    /// `d(a,b) = v`: state `x` flips a fair coin into matching deterministic
    /// label streams, `y` into crossed ones. Depth-2 trace distributions are
    /// `½aa + ½bb` versus `½ab + ½ba`.
    pub fn crossed_coin_pair(v: f64) -> Coalgebra {
        let labels = label_pair(v);
        let states = FinMetric::discrete(vec![
            "x".into(),
            "xa".into(),
            "xb".into(),
            "y".into(),
            "ya".into(),
            "yb".into(),
        ])
        .unwrap();
        let (a, b) = (0, 1);
        let (xa, xb, ya, yb) = (1, 2, 4, 5);
        let trans = vec![
            Trans::Dist(BTreeMap::from([((a, xa), 0.5), ((b, xb), 0.5)])),
            Trans::Dist(BTreeMap::from([((a, xa), 1.0)])),
            Trans::Dist(BTreeMap::from([((b, xb), 1.0)])),
            Trans::Dist(BTreeMap::from([((a, ya), 0.5), ((b, yb), 0.5)])),
            Trans::Dist(BTreeMap::from([((b, ya), 1.0)])),
            Trans::Dist(BTreeMap::from([((a, yb), 1.0)])),
        ];
        Coalgebra::new_unchecked(SystemKind::ProbTs, labels, states, trans)
    }

    /// Fuzzy chain `x →_{a,0.7} y →_{b,0.4} z` next to a twin whose second
    /// step is missing; their depth-2 fuzzy trace distance is 0.4.
    pub fn fuzzy_chain() -> Coalgebra {
        let labels = LabelSpace::discrete(vec!["a".into(), "b".into()]).unwrap();
        let states = FinMetric::discrete(vec![
            "x".into(),
            "y".into(),
            "z".into(),
            "x2".into(),
            "y2".into(),
        ])
        .unwrap();
        let trans = vec![
            Trans::Fuzzy(BTreeMap::from([((0, 1), 0.7)])),
            Trans::Fuzzy(BTreeMap::from([((1, 2), 0.4)])),
            Trans::Fuzzy(BTreeMap::new()),
            Trans::Fuzzy(BTreeMap::from([((0, 4), 0.7)])),
            Trans::Fuzzy(BTreeMap::new()),
        ];
        Coalgebra::new_unchecked(SystemKind::FuzzyLts, labels, states, trans)
    }

    /// Two metric transition systems with singleton trace sets `{a}` and
    /// `{b}`, `d(a,b) = d`.
    pub fn metric_singletons(d: f64) -> Coalgebra {
        let labels = label_pair(d);
        let states =
            FinMetric::discrete(vec!["s".into(), "s1".into(), "t".into(), "t1".into()]).unwrap();
        let trans = vec![
            Trans::Set(BTreeSet::from([(0, 1)])),
            Trans::Set(BTreeSet::new()),
            Trans::Set(BTreeSet::from([(1, 3)])),
            Trans::Set(BTreeSet::new()),
        ];
        Coalgebra::new_unchecked(SystemKind::MetricTs, labels, states, trans)
    }

    /// Two alternating streams over labels with `d(a,b) = v`, out of phase.
    pub fn stream_pair(v: f64) -> Coalgebra {
        let labels = label_pair(v);
        let states = FinMetric::discrete(vec![
            "u".into(),
            "u2".into(),
            "w".into(),
            "w2".into(),
        ])
        .unwrap();
        let trans = vec![
            Trans::Stream(0, 1),
            Trans::Stream(1, 0),
            Trans::Stream(1, 3),
            Trans::Stream(0, 2),
        ];
        Coalgebra::new_unchecked(SystemKind::Stream, labels, states, trans)
    }
}
