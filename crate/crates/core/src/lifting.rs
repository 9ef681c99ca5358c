//! Lifted value containers (finite sets, distributions, fuzzy sets) with
//! their distances: Hausdorff, Kantorovich (exact optimal transport with a
//! duality certificate) and fuzzy Hausdorff. Unit, direct image and flatten
//! make each container a monad.

use crate::metric::FinMetric;
use crate::num::TOL;
use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

mod transport;

pub use transport::{SolverError, TransportCertificate};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ValueError {
    #[error("weight {0} out of range (0,1]")]
    Weight(f64),
    #[error("distribution mass {0} differs from 1 beyond tolerance")]
    Mass(f64),
    #[error("distribution must have nonempty support")]
    EmptySupport,
}

/// Finite subset of a carrier. May be empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct FinSet<E: Ord> {
    elements: BTreeSet<E>,
}

impl<E: Ord + Clone> FinSet<E> {
    pub fn new(elements: impl IntoIterator<Item = E>) -> FinSet<E> {
        FinSet { elements: elements.into_iter().collect() }
    }

    pub fn empty() -> FinSet<E> {
        FinSet { elements: BTreeSet::new() }
    }

    pub fn unit(e: E) -> FinSet<E> {
        FinSet { elements: BTreeSet::from([e]) }
    }

    /// Direct image.
    pub fn map<E2: Ord, F: Fn(&E) -> E2>(&self, f: F) -> FinSet<E2> {
        FinSet { elements: self.elements.iter().map(&f).collect() }
    }

    /// Union of a finite set of finite sets.
    pub fn flatten(outer: &FinSet<FinSet<E>>) -> FinSet<E> {
        let mut elements = BTreeSet::new();
        for inner in outer.iter() {
            elements.extend(inner.elements.iter().cloned());
        }
        FinSet { elements }
    }
}

impl<E: Ord> FinSet<E> {
    pub fn iter(&self) -> impl Iterator<Item = &E> {
        self.elements.iter()
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn contains(&self, e: &E) -> bool {
        self.elements.contains(e)
    }
}

/// Finitely supported probability distribution; weights are strictly
/// positive and sum to 1 within [`TOL`].
#[derive(Debug, Clone)]
pub struct FinDist<E: Ord> {
    support: BTreeMap<E, f64>,
}

impl<E: Ord + Clone> FinDist<E> {
    pub fn new(pairs: impl IntoIterator<Item = (E, f64)>) -> Result<FinDist<E>, ValueError> {
        let mut support: BTreeMap<E, f64> = BTreeMap::new();
        for (e, w) in pairs {
            if w == 0.0 {
                continue;
            }
            if !(w > 0.0 && w <= 1.0 + TOL) {
                return Err(ValueError::Weight(w));
            }
            *support.entry(e).or_insert(0.0) += w;
        }
        if support.is_empty() {
            return Err(ValueError::EmptySupport);
        }
        let mass: f64 = support.values().sum();
        if (mass - 1.0).abs() > TOL {
            return Err(ValueError::Mass(mass));
        }
        Ok(FinDist { support })
    }

    pub fn dirac(e: E) -> FinDist<E> {
        FinDist { support: BTreeMap::from([(e, 1.0)]) }
    }

    /// Wraps a support map that is known to carry unit mass up to float
    /// drift (e.g. products of validated transition weights across depth
    /// layers), skipping the strict mass check.
    pub(crate) fn from_raw(mut support: BTreeMap<E, f64>) -> FinDist<E> {
        support.retain(|_, w| *w != 0.0);
        debug_assert!(support.values().all(|w| *w > 0.0));
        debug_assert!(!support.is_empty());
        FinDist { support }
    }

    /// Pushforward: weights of merged elements add up.
    pub fn map<E2: Ord + Clone, F: Fn(&E) -> E2>(&self, f: F) -> FinDist<E2> {
        let mut support: BTreeMap<E2, f64> = BTreeMap::new();
        for (e, w) in self.iter() {
            *support.entry(f(e)).or_insert(0.0) += w;
        }
        FinDist { support }
    }

    /// Weighted mixture of distributions.
    pub fn flatten(outer: &FinDist<FinDist<E>>) -> FinDist<E> {
        let mut support: BTreeMap<E, f64> = BTreeMap::new();
        for (inner, p) in outer.iter() {
            for (e, q) in inner.iter() {
                *support.entry(e.clone()).or_insert(0.0) += p * q;
            }
        }
        support.retain(|_, w| *w != 0.0);
        FinDist { support }
    }
}

impl<E: Ord> PartialEq for FinDist<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_impl(other) == Ordering::Equal
    }
}

impl<E: Ord> Eq for FinDist<E> {}

impl<E: Ord> PartialOrd for FinDist<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E: Ord> Ord for FinDist<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_impl(other)
    }
}

impl<E: Ord> FinDist<E> {
    pub fn weight(&self, e: &E) -> f64 {
        self.support.get(e).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&E, f64)> {
        self.support.iter().map(|(e, w)| (e, *w))
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn mass(&self) -> f64 {
        self.support.values().sum()
    }

    fn cmp_impl(&self, other: &Self) -> Ordering {
        let mut a = self.support.iter();
        let mut b = other.support.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((ea, wa)), Some((eb, wb))) => {
                    match ea.cmp(eb).then(wa.total_cmp(wb)) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
            }
        }
    }
}

/// Finite fuzzy set: memberships in `(0,1]`, zero entries dropped eagerly so
/// equality is structural. May be empty.
#[derive(Debug, Clone, Default)]
pub struct FuzzySet<E: Ord> {
    support: BTreeMap<E, f64>,
}

impl<E: Ord + Clone> FuzzySet<E> {
    pub fn new(pairs: impl IntoIterator<Item = (E, f64)>) -> Result<FuzzySet<E>, ValueError> {
        let mut support: BTreeMap<E, f64> = BTreeMap::new();
        for (e, w) in pairs {
            if w == 0.0 {
                continue;
            }
            if !(w > 0.0 && w <= 1.0) {
                return Err(ValueError::Weight(w));
            }
            let slot = support.entry(e).or_insert(0.0);
            *slot = slot.max(w);
        }
        Ok(FuzzySet { support })
    }

    pub fn empty() -> FuzzySet<E> {
        FuzzySet { support: BTreeMap::new() }
    }

    pub fn unit(e: E) -> FuzzySet<E> {
        FuzzySet { support: BTreeMap::from([(e, 1.0)]) }
    }

    /// Fuzzy direct image: memberships of merged elements join.
    pub fn map<E2: Ord + Clone, F: Fn(&E) -> E2>(&self, f: F) -> FuzzySet<E2> {
        let mut support: BTreeMap<E2, f64> = BTreeMap::new();
        for (e, w) in self.iter() {
            let slot = support.entry(f(e)).or_insert(0.0);
            *slot = slot.max(w);
        }
        FuzzySet { support }
    }

    /// Fuzzy big union: `flatten(𝔖)(x) = ⋁_S 𝔖(S) ∧ S(x)`.
    pub fn flatten(outer: &FuzzySet<FuzzySet<E>>) -> FuzzySet<E> {
        let mut support: BTreeMap<E, f64> = BTreeMap::new();
        for (inner, o) in outer.iter() {
            for (e, w) in inner.iter() {
                let m = o.min(w);
                if m == 0.0 {
                    continue;
                }
                let slot = support.entry(e.clone()).or_insert(0.0);
                *slot = slot.max(m);
            }
        }
        FuzzySet { support }
    }
}

impl<E: Ord> PartialEq for FuzzySet<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_impl(other) == Ordering::Equal
    }
}

impl<E: Ord> Eq for FuzzySet<E> {}

impl<E: Ord> PartialOrd for FuzzySet<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E: Ord> Ord for FuzzySet<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_impl(other)
    }
}

impl<E: Ord> FuzzySet<E> {
    pub fn membership(&self, e: &E) -> f64 {
        self.support.get(e).copied().unwrap_or(0.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&E, f64)> {
        self.support.iter().map(|(e, w)| (e, *w))
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    fn cmp_impl(&self, other: &Self) -> Ordering {
        let mut a = self.support.iter();
        let mut b = other.support.iter();
        loop {
            match (a.next(), b.next()) {
                (None, None) => return Ordering::Equal,
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((ea, wa)), Some((eb, wb))) => {
                    match ea.cmp(eb).then(wa.total_cmp(wb)) {
                        Ordering::Equal => continue,
                        o => return o,
                    }
                }
            }
        }
    }
}

/// Two-sided Hausdorff distance with the empty-set conventions `⋁∅ = 0`,
/// `⋀∅ = 1` (so `d(∅,∅) = 0` and `d(∅,A) = 1` for nonempty `A`).
pub fn hausdorff_by<E: Ord, D: Fn(&E, &E) -> f64>(a: &FinSet<E>, b: &FinSet<E>, d: D) -> f64 {
    let one_sided = |from: &FinSet<E>, to: &FinSet<E>| -> f64 {
        from.iter()
            .map(|x| {
                to.iter()
                    .map(|y| d(x, y))
                    .fold(1.0_f64, f64::min)
            })
            .fold(0.0_f64, f64::max)
    };
    one_sided(a, b).max(one_sided(b, a))
}

/// Hausdorff distance between subsets of a finite metric space (elements are
/// point indices).
pub fn hausdorff_distance(a: &FinSet<usize>, b: &FinSet<usize>, x: &FinMetric) -> f64 {
    hausdorff_by(a, b, |&p, &q| x.dist(p, q))
}

/// Asymmetric fuzzy Hausdorff component
/// `d₀(A,B) = ⋁_x ⋀_y (A(x) ⊖ B(y)) ∨ (A(x) ∧ d(x,y))`.
///
/// The meet formally ranges over the whole carrier, but any point outside
/// `supp B` contributes the term `A(x)`, which is an upper bound of every
/// term; so the meet collapses to `min(A(x), ⋀_{y ∈ supp B} …)` and only the
/// supports matter.
fn fuzzy_one_sided<E: Ord, D: Fn(&E, &E) -> f64>(a: &FuzzySet<E>, b: &FuzzySet<E>, d: &D) -> f64 {
    let mut join = 0.0_f64;
    for (x, ax) in a.iter() {
        let mut meet = ax;
        for (y, by) in b.iter() {
            let term = (ax - by).max(0.0).max(ax.min(d(x, y)));
            meet = meet.min(term);
        }
        join = join.max(meet);
    }
    join
}

/// Two-sided fuzzy Hausdorff distance `d₀(A,B) ∨ d₀(B,A)`.
pub fn fuzzy_hausdorff_by<E: Ord, D: Fn(&E, &E) -> f64>(
    a: &FuzzySet<E>,
    b: &FuzzySet<E>,
    d: D,
) -> f64 {
    fuzzy_one_sided(a, b, &d).max(fuzzy_one_sided(b, a, &d))
}

/// Fuzzy Hausdorff distance between fuzzy subsets of a finite metric space.
pub fn fuzzy_hausdorff_distance(a: &FuzzySet<usize>, b: &FuzzySet<usize>, x: &FinMetric) -> f64 {
    fuzzy_hausdorff_by(a, b, |&p, &q| x.dist(p, q))
}

/// Exact Kantorovich distance under the ground cost `d`, with a strong
/// duality certificate. Fails with [`SolverError`] if the certificate gap
/// exceeds the required tolerance; a numerical failure is never silently
/// returned.
pub fn kantorovich_by<E: Ord + Clone, D: Fn(&E, &E) -> f64>(
    mu: &FinDist<E>,
    nu: &FinDist<E>,
    d: D,
) -> Result<(f64, TransportCertificate<E>), SolverError> {
    transport::solve(mu, nu, d)
}

/// Kantorovich distance between distributions on a finite metric space.
pub fn kantorovich_distance(
    mu: &FinDist<usize>,
    nu: &FinDist<usize>,
    x: &FinMetric,
) -> Result<(f64, TransportCertificate<usize>), SolverError> {
    kantorovich_by(mu, nu, |&p, &q| x.dist(p, q))
}
