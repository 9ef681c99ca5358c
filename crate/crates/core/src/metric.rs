//! Finite (pseudo)metric spaces on `[0,1]`, tensor products and separation
//! checks.

use crate::num::{clamp01, TOL};
use thiserror::Error;

/// Whether a distance matrix must satisfy separation (`d(x,y)=0 ⇒ x=y`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricKind {
    Metric,
    Pseudometric,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("distance matrix must be square of size {expected}, row {row} has length {got}")]
    Shape { expected: usize, row: usize, got: usize },
    #[error("point ids must be unique, `{0}` appears twice")]
    DuplicatePoint(String),
    #[error("d({i},{j}) = {value} out of range [0,1]")]
    Range { i: String, j: String, value: f64 },
    #[error("d({0},{0}) = {1}, reflexivity requires 0")]
    Reflexivity(String, f64),
    #[error("d({i},{j}) = {dij} but d({j},{i}) = {dji}")]
    Asymmetry { i: String, j: String, dij: f64, dji: f64 },
    #[error("triangle inequality fails: d({i},{k}) = {dik} > d({i},{j}) + d({j},{k}) = {sum}")]
    Triangle { i: String, j: String, k: String, dik: f64, sum: f64 },
    #[error("separation fails: d({i},{j}) = 0 for distinct points")]
    Separation { i: String, j: String },
}

/// A finite (pseudo)metric space: named points plus a distance matrix with
/// entries in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FinMetric {
    points: Vec<String>,
    dist: Vec<Vec<f64>>,
    kind: MetricKind,
}

impl FinMetric {
    /// Validates the axioms (reflexivity, symmetry, triangle within [`TOL`],
    /// and separation for [`MetricKind::Metric`]) and builds the space.
    /// Rejects with the first violated axiom.
    pub fn validate(
        points: Vec<String>,
        dist: Vec<Vec<f64>>,
        kind: MetricKind,
    ) -> Result<FinMetric, MetricError> {
        let n = points.len();
        if dist.len() != n {
            return Err(MetricError::Shape { expected: n, row: usize::MAX, got: dist.len() });
        }
        for (row, r) in dist.iter().enumerate() {
            if r.len() != n {
                return Err(MetricError::Shape { expected: n, row, got: r.len() });
            }
        }
        for i in 0..n {
            for j in 0..i {
                if points[i] == points[j] {
                    return Err(MetricError::DuplicatePoint(points[i].clone()));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let v = dist[i][j];
                if !(0.0..=1.0).contains(&v) || v.is_nan() {
                    return Err(MetricError::Range {
                        i: points[i].clone(),
                        j: points[j].clone(),
                        value: v,
                    });
                }
            }
        }
        for i in 0..n {
            if dist[i][i] != 0.0 {
                return Err(MetricError::Reflexivity(points[i].clone(), dist[i][i]));
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if dist[i][j] != dist[j][i] {
                    return Err(MetricError::Asymmetry {
                        i: points[i].clone(),
                        j: points[j].clone(),
                        dij: dist[i][j],
                        dji: dist[j][i],
                    });
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let sum = dist[i][j] + dist[j][k];
                    if dist[i][k] > sum + TOL {
                        return Err(MetricError::Triangle {
                            i: points[i].clone(),
                            j: points[j].clone(),
                            k: points[k].clone(),
                            dik: dist[i][k],
                            sum,
                        });
                    }
                }
            }
        }
        if kind == MetricKind::Metric {
            for i in 0..n {
                for j in (i + 1)..n {
                    if dist[i][j] == 0.0 {
                        return Err(MetricError::Separation {
                            i: points[i].clone(),
                            j: points[j].clone(),
                        });
                    }
                }
            }
        }
        Ok(FinMetric { points, dist, kind })
    }

    /// The discrete metric on the given points (`d = 1` off the diagonal).
    pub fn discrete(points: Vec<String>) -> Result<FinMetric, MetricError> {
        let n = points.len();
        let dist = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        FinMetric::validate(points, dist, MetricKind::Metric)
    }

    /// One-point space.
    pub fn singleton(id: impl Into<String>) -> FinMetric {
        FinMetric { points: vec![id.into()], dist: vec![vec![0.0]], kind: MetricKind::Metric }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[String] {
        &self.points
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.points.iter().position(|p| p == id)
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }

    pub fn matrix(&self) -> &[Vec<f64>] {
        &self.dist
    }

    /// All off-diagonal distances equal to 1.
    pub fn is_discrete(&self) -> bool {
        (0..self.len())
            .all(|i| (0..self.len()).all(|j| i == j || self.dist[i][j] == 1.0))
    }

    /// Distinct positive distances realized between pairs, ascending.
    pub fn realized_distances(&self) -> Vec<f64> {
        let mut ds: Vec<f64> = Vec::new();
        for i in 0..self.len() {
            for j in (i + 1)..self.len() {
                let d = self.dist[i][j];
                if d > 0.0 && !ds.contains(&d) {
                    ds.push(d);
                }
            }
        }
        ds.sort_by(f64::total_cmp);
        ds
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("discount factor {0} out of range (0,1]")]
    Discount(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorVariant {
    /// `k(x,y) = x ∨ δy` (the categorical product when δ = 1).
    Sup,
    /// `k(x,y) = x ⊕ δy`, truncated addition.
    Manhattan,
    /// `k(x,y) = √(x² + (δy)²) ∧ 1`.
    Euclidean,
}

/// A depth-1 combinator for product distances, parametric in a discount
/// factor `δ ∈ (0,1]`. By construction `k(x,y) = 0` iff `x = y = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TensorKind {
    pub variant: TensorVariant,
    pub discount: f64,
}

impl TensorKind {
    pub fn new(variant: TensorVariant, discount: f64) -> Result<TensorKind, TensorError> {
        if !(discount > 0.0 && discount <= 1.0) {
            return Err(TensorError::Discount(discount));
        }
        Ok(TensorKind { variant, discount })
    }

    pub fn sup() -> TensorKind {
        TensorKind { variant: TensorVariant::Sup, discount: 1.0 }
    }

    pub fn manhattan() -> TensorKind {
        TensorKind { variant: TensorVariant::Manhattan, discount: 1.0 }
    }

    pub fn euclidean() -> TensorKind {
        TensorKind { variant: TensorVariant::Euclidean, discount: 1.0 }
    }

    /// `k(x, δy)`, truncated into `[0,1]`.
    #[inline]
    pub fn combine(&self, x: f64, y: f64) -> f64 {
        let y = self.discount * y;
        let v = match self.variant {
            TensorVariant::Sup => x.max(y),
            TensorVariant::Manhattan => x + y,
            TensorVariant::Euclidean => (x * x + y * y).sqrt(),
        };
        clamp01(v)
    }
}

/// Product space `A ⊗ B` with distance `k(d_A, δ·d_B)`. Point ids are
/// `(a,b)`.
pub fn k_tensor(a: &FinMetric, b: &FinMetric, t: TensorKind) -> FinMetric {
    let mut points = Vec::with_capacity(a.len() * b.len());
    for p in a.points() {
        for q in b.points() {
            points.push(format!("({p},{q})"));
        }
    }
    let n = points.len();
    let mut dist = vec![vec![0.0; n]; n];
    for i1 in 0..a.len() {
        for j1 in 0..b.len() {
            for i2 in 0..a.len() {
                for j2 in 0..b.len() {
                    let r = i1 * b.len() + j1;
                    let c = i2 * b.len() + j2;
                    dist[r][c] = t.combine(a.dist(i1, i2), b.dist(j1, j2));
                }
            }
        }
    }
    let kind = if a.kind() == MetricKind::Metric && b.kind() == MetricKind::Metric {
        MetricKind::Metric
    } else {
        MetricKind::Pseudometric
    };
    FinMetric { points, dist, kind }
}

/// A metric space of labels; `discrete` is derived (all off-diagonal
/// distances equal 1).
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSpace {
    underlying: FinMetric,
}

impl LabelSpace {
    /// Label spaces are proper metric spaces (separated).
    pub fn new(underlying: FinMetric) -> Result<LabelSpace, MetricError> {
        let m = FinMetric::validate(
            underlying.points.clone(),
            underlying.dist.clone(),
            MetricKind::Metric,
        )?;
        Ok(LabelSpace { underlying: m })
    }

    pub fn discrete(names: Vec<String>) -> Result<LabelSpace, MetricError> {
        Ok(LabelSpace { underlying: FinMetric::discrete(names)? })
    }

    pub fn space(&self) -> &FinMetric {
        &self.underlying
    }

    pub fn names(&self) -> &[String] {
        self.underlying.points()
    }

    pub fn len(&self) -> usize {
        self.underlying.len()
    }

    pub fn is_empty(&self) -> bool {
        self.underlying.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.underlying.index_of(name)
    }

    #[inline]
    pub fn dist(&self, a: usize, b: usize) -> f64 {
        self.underlying.dist(a, b)
    }

    pub fn is_discrete(&self) -> bool {
        self.underlying.is_discrete()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("trace space of size {size} exceeds cap {cap}")]
pub struct SizeError {
    pub size: usize,
    pub cap: usize,
}

/// Default cap on eagerly enumerated trace spaces.
pub const TRACE_SPACE_CAP: usize = 1_000_000;

/// Distance between two equal-length label words, folding the tensor one
/// symbol at a time from the head: `d(a·u, b·v) = k(d(a,b), δ·d(u,v))`.
pub fn word_distance(labels: &LabelSpace, t: TensorKind, u: &[usize], v: &[usize]) -> f64 {
    word_distance_with_tail(labels, t, u, v, 0.0)
}

/// Word distance with an innermost tail summand, for product spaces
/// `Lⁿ ⊗ X` where the tail is a carrier distance.
pub fn word_distance_with_tail(
    labels: &LabelSpace,
    t: TensorKind,
    u: &[usize],
    v: &[usize],
    tail: f64,
) -> f64 {
    assert_eq!(u.len(), v.len(), "word distance requires equal lengths");
    let mut acc = tail;
    for i in (0..u.len()).rev() {
        acc = t.combine(labels.dist(u[i], v[i]), acc);
    }
    acc
}

fn word_id(labels: &LabelSpace, w: &[usize]) -> String {
    if w.is_empty() {
        return "ε".to_string();
    }
    let names = labels.names();
    if names.iter().all(|n| n.chars().count() == 1) {
        w.iter().map(|&i| names[i].as_str()).collect()
    } else {
        w.iter().map(|&i| names[i].as_str()).collect::<Vec<_>>().join("·")
    }
}

/// Enumerate all label words of length `n` in lexicographic order.
pub fn enumerate_words(alphabet: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(out.len() * alphabet);
        for w in &out {
            for a in 0..alphabet {
                let mut w2 = w.clone();
                w2.push(a);
                next.push(w2);
            }
        }
        out = next;
    }
    out
}

/// The metric space on `Lⁿ` obtained by iterating the tensor; `n = 0` is the
/// one-point space. Eager enumeration, capped at `cap` points.
pub fn trace_space(
    labels: &LabelSpace,
    n: usize,
    t: TensorKind,
    cap: usize,
) -> Result<FinMetric, SizeError> {
    let size = labels.len().checked_pow(n as u32).unwrap_or(usize::MAX);
    if size > cap {
        return Err(SizeError { size, cap });
    }
    let words = enumerate_words(labels.len(), n);
    let points: Vec<String> = words.iter().map(|w| word_id(labels, w)).collect();
    let m = words.len();
    let mut dist = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..m {
            dist[i][j] = word_distance(labels, t, &words[i], &words[j]);
        }
    }
    Ok(FinMetric { points, dist, kind: labels.space().kind() })
}

/// Result of a nonexpansiveness scan: the worst violating pair if any.
#[derive(Debug, Clone, PartialEq)]
pub struct NonexpansiveCheck {
    pub ok: bool,
    /// `(i, j, |f(i)-f(j)|, d(i,j))` maximizing the violation.
    pub worst: Option<(usize, usize, f64, f64)>,
}

/// Checks `|f(x) - f(y)| ≤ d(x,y) + TOL` on all pairs; `f` is indexed by
/// point position.
pub fn check_nonexpansive(f: &[f64], x: &FinMetric) -> NonexpansiveCheck {
    assert_eq!(f.len(), x.len(), "function must be total on the space");
    let mut worst: Option<(usize, usize, f64, f64)> = None;
    let mut worst_excess = 0.0;
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let gap = (f[i] - f[j]).abs();
            let d = x.dist(i, j);
            if gap > d + TOL && (worst.is_none() || gap - d > worst_excess) {
                worst = Some((i, j, gap, d));
                worst_excess = gap - d;
            }
        }
    }
    NonexpansiveCheck { ok: worst.is_none(), worst }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConeError {
    #[error("cone member {index} is not nonexpansive (pair {i},{j}: gap {gap} > d {d})")]
    NonexpansiveInput { index: usize, i: usize, j: usize, gap: f64, d: f64 },
}

/// A family of nonexpansive maps into `[0,1]` is initial iff the induced sup
/// pseudometric reaches `d` on every pair: `sup_i |f_i(x) - f_i(y)| ≥ d(x,y) - TOL`.
pub fn check_initial_cone(fs: &[Vec<f64>], x: &FinMetric) -> Result<bool, ConeError> {
    for (index, f) in fs.iter().enumerate() {
        let chk = check_nonexpansive(f, x);
        if let Some((i, j, gap, d)) = chk.worst {
            return Err(ConeError::NonexpansiveInput { index, i, j, gap, d });
        }
    }
    for i in 0..x.len() {
        for j in (i + 1)..x.len() {
            let sup = fs
                .iter()
                .map(|f| (f[i] - f[j]).abs())
                .fold(0.0_f64, f64::max);
            if sup < x.dist(i, j) - TOL {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Epsilon grid for [`check_normed_isometric`]: each realized positive
/// distance minus `1e-6`. The separation condition is monotone in ε between
/// realized values, so these are the only thresholds that matter.
pub fn default_eps_grid(x: &FinMetric) -> Vec<f64> {
    x.realized_distances()
        .into_iter()
        .map(|d| d - 1e-6)
        .filter(|e| *e > 0.0)
        .collect()
}

/// Normed isometry: for every ε in the grid and every pair with
/// `d(x,y) > ε`, some member separates the pair by more than ε while taking
/// the value 1 on one of the two points (within [`TOL`]).
pub fn check_normed_isometric(fs: &[Vec<f64>], x: &FinMetric, eps_grid: &[f64]) -> bool {
    for &eps in eps_grid {
        if eps <= 0.0 {
            continue;
        }
        for i in 0..x.len() {
            for j in (i + 1)..x.len() {
                if x.dist(i, j) > eps {
                    let witnessed = fs.iter().any(|f| {
                        (f[i] - f[j]).abs() > eps && f[i].max(f[j]) >= 1.0 - TOL
                    });
                    if !witnessed {
                        return false;
                    }
                }
            }
        }
    }
    true
}
