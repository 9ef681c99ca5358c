//! Shared test helpers: seeded generators, independent oracles and proof
//! builders. Oracles here stay independent of the implementation paths they
//! cross-check.
#![allow(dead_code)] // each test target compiles its own view of this module

use behdist_core::graded::Word;
use behdist_core::lifting::{FinDist, FinSet, FuzzySet};
use behdist_core::metric::{FinMetric, LabelSpace, MetricKind, TensorKind};
use behdist_core::num::OrdF64;
use behdist_core::quanteq::{
    BaseTheory, CtxEntry, DerivationTree, GradedTheory, Judgement, LayeredTerm, Rule, Term,
};
use behdist_core::system::{Coalgebra, SystemKind, Trans};
use rand::prelude::*;
use rand::rngs::StdRng;
use std::collections::{BTreeMap, BTreeSet};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

// ---------------------------------------------------------------------------
// Random spaces and values
// ---------------------------------------------------------------------------

/// Random metric on `n` points: grid-valued entries closed under shortest
/// paths, so the triangle inequality holds by construction.
#[allow(clippy::needless_range_loop)]
pub fn random_metric(rng: &mut StdRng, n: usize) -> FinMetric {
    let mut d = vec![vec![0.0_f64; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.05 * rng.random_range(1..=20) as f64;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    let points = (0..n).map(|i| format!("p{i}")).collect();
    FinMetric::validate(points, d, MetricKind::Metric).expect("closure yields a metric")
}

pub fn random_labels(rng: &mut StdRng, k: usize, discrete: bool) -> LabelSpace {
    let names: Vec<String> = (0..k).map(|i| ((b'a' + i as u8) as char).to_string()).collect();
    if discrete || k == 1 {
        LabelSpace::discrete(names).unwrap()
    } else {
        let m = random_metric(rng, k);
        let renamed =
            FinMetric::validate(names, m.matrix().to_vec(), MetricKind::Metric).unwrap();
        LabelSpace::new(renamed).unwrap()
    }
}

/// Distribution with grid weights summing to 1 within float division error.
pub fn random_dist(rng: &mut StdRng, n_points: usize) -> FinDist<usize> {
    let size = rng.random_range(1..=n_points.min(4));
    let mut support: Vec<usize> = (0..n_points).collect();
    support.shuffle(rng);
    support.truncate(size);
    let masses: Vec<u32> = (0..size).map(|_| rng.random_range(1..=8)).collect();
    let total: u32 = masses.iter().sum();
    FinDist::new(
        support
            .into_iter()
            .zip(masses)
            .map(|(p, m)| (p, m as f64 / total as f64)),
    )
    .expect("normalized masses form a distribution")
}

/// Distribution whose weights are multiples of 1/16 (sums and products stay
/// exact in binary floating point).
pub fn random_dyadic_dist(rng: &mut StdRng, n_points: usize) -> FinDist<usize> {
    let size = rng.random_range(1..=n_points.min(3));
    let mut support: Vec<usize> = (0..n_points).collect();
    support.shuffle(rng);
    support.truncate(size);
    let mut masses = vec![1u32; size];
    for _ in 0..(16 - size as u32) {
        let k = rng.random_range(0..size);
        masses[k] += 1;
    }
    FinDist::new(
        support
            .into_iter()
            .zip(masses)
            .map(|(p, m)| (p, m as f64 / 16.0)),
    )
    .expect("sixteenths sum to 1")
}

pub fn random_fuzzy(rng: &mut StdRng, n_points: usize) -> FuzzySet<usize> {
    let pairs = (0..n_points).filter_map(|p| {
        if rng.random_bool(0.6) {
            Some((p, 0.05 * rng.random_range(1..=20) as f64))
        } else {
            None
        }
    });
    FuzzySet::new(pairs.collect::<Vec<_>>()).unwrap()
}

pub fn random_set(rng: &mut StdRng, n_points: usize) -> FinSet<usize> {
    FinSet::new((0..n_points).filter(|_| rng.random_bool(0.5)))
}

/// Random nonexpansive map into [0,1] via the lower McShane envelope of a
/// random function.
pub fn random_nonexpansive(rng: &mut StdRng, x: &FinMetric) -> Vec<f64> {
    let raw: Vec<f64> = (0..x.len()).map(|_| rng.random::<f64>()).collect();
    (0..x.len())
        .map(|i| {
            (0..x.len())
                .map(|j| raw[j] + x.dist(i, j))
                .fold(f64::INFINITY, f64::min)
                .clamp(0.0, 1.0)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Random systems
// ---------------------------------------------------------------------------

pub fn random_system(
    rng: &mut StdRng,
    kind: SystemKind,
    max_states: usize,
    labels: LabelSpace,
) -> Coalgebra {
    let n = rng.random_range(2..=max_states);
    let states =
        FinMetric::discrete((0..n).map(|i| format!("s{i}")).collect()).expect("distinct names");
    let nl = labels.len();
    let trans: Vec<Trans> = (0..n)
        .map(|_| match kind {
            SystemKind::MetricTs => {
                let mut pairs = BTreeSet::new();
                for l in 0..nl {
                    for s in 0..n {
                        if rng.random_bool(0.25) {
                            pairs.insert((l, s));
                        }
                    }
                }
                Trans::Set(pairs)
            }
            SystemKind::FuzzyLts => {
                let mut m = BTreeMap::new();
                for l in 0..nl {
                    for s in 0..n {
                        if rng.random_bool(0.3) {
                            m.insert((l, s), 0.05 * rng.random_range(1..=20) as f64);
                        }
                    }
                }
                Trans::Fuzzy(m)
            }
            SystemKind::ProbTs => {
                let size = rng.random_range(1..=3.min(nl * n));
                let mut chosen = BTreeSet::new();
                while chosen.len() < size {
                    chosen.insert((rng.random_range(0..nl), rng.random_range(0..n)));
                }
                let masses: Vec<u32> = (0..chosen.len()).map(|_| rng.random_range(1..=8)).collect();
                let total: u32 = masses.iter().sum();
                Trans::Dist(
                    chosen
                        .into_iter()
                        .zip(masses)
                        .map(|(pair, m)| (pair, m as f64 / total as f64))
                        .collect(),
                )
            }
            SystemKind::Stream => {
                Trans::Stream(rng.random_range(0..nl), rng.random_range(0..n))
            }
        })
        .collect();
    Coalgebra::new_unchecked(kind, labels, states, trans)
}

// ---------------------------------------------------------------------------
// Transport oracle: exhaustive vertex enumeration
// ---------------------------------------------------------------------------

/// Brute-force optimal transport for small supports: enumerates every basis
/// (spanning edge set of size m+n-1), solves the flows by leaf elimination,
/// and takes the cheapest feasible vertex. Independent of the simplex.
pub fn ot_vertex_oracle<E: Ord + Clone>(
    mu: &FinDist<E>,
    nu: &FinDist<E>,
    d: impl Fn(&E, &E) -> f64,
) -> f64 {
    let rows: Vec<(&E, f64)> = mu.iter().collect();
    let cols: Vec<(&E, f64)> = nu.iter().collect();
    let (m, n) = (rows.len(), cols.len());
    assert!(m * n <= 16, "oracle is exponential; keep supports small");
    let edges: Vec<(usize, usize)> =
        (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    let need = m + n - 1;
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << edges.len()) {
        if mask.count_ones() as usize != need {
            continue;
        }
        let chosen: Vec<(usize, usize)> = edges
            .iter()
            .enumerate()
            .filter(|(k, _)| mask & (1 << k) != 0)
            .map(|(_, e)| *e)
            .collect();
        // leaf elimination on the bipartite graph (nodes: rows 0..m, cols m..m+n)
        let mut bal: Vec<f64> = rows
            .iter()
            .map(|(_, w)| *w)
            .chain(cols.iter().map(|(_, w)| *w))
            .collect();
        let mut alive: Vec<bool> = vec![true; chosen.len()];
        let mut flows = vec![0.0_f64; chosen.len()];
        let mut removed_nodes = vec![false; m + n];
        let mut progressed = true;
        let mut remaining = chosen.len();
        while remaining > 0 && progressed {
            progressed = false;
            for node in 0..m + n {
                if removed_nodes[node] {
                    continue;
                }
                let incident: Vec<usize> = chosen
                    .iter()
                    .enumerate()
                    .filter(|(k, (i, j))| {
                        alive[*k] && (*i == node || m + *j == node)
                    })
                    .map(|(k, _)| k)
                    .collect();
                if incident.len() == 1 {
                    let k = incident[0];
                    let (i, j) = chosen[k];
                    let other = if i == node { m + j } else { i };
                    flows[k] = bal[node];
                    bal[other] -= bal[node];
                    bal[node] = 0.0;
                    alive[k] = false;
                    removed_nodes[node] = true;
                    remaining -= 1;
                    progressed = true;
                }
            }
        }
        if remaining > 0 {
            continue; // cyclic or disconnected edge set
        }
        if flows.iter().any(|f| *f < -1e-9) {
            continue;
        }
        let cost: f64 = chosen
            .iter()
            .zip(&flows)
            .map(|(&(i, j), f)| f.max(0.0) * d(rows[i].0, cols[j].0))
            .sum();
        best = best.min(cost);
    }
    assert!(best.is_finite(), "no feasible vertex found");
    best
}

/// The fuzzy Hausdorff component with the meet ranging over the whole
/// carrier, written directly from the two-sided definition.
pub fn fuzzy_hausdorff_naive(a: &FuzzySet<usize>, b: &FuzzySet<usize>, x: &FinMetric) -> f64 {
    let d0 = |s: &FuzzySet<usize>, t: &FuzzySet<usize>| -> f64 {
        let mut join = 0.0_f64;
        for p in 0..x.len() {
            let sp = s.membership(&p);
            let mut meet = f64::INFINITY;
            for q in 0..x.len() {
                let tq = t.membership(&q);
                let term = (sp - tq).max(0.0).max(sp.min(x.dist(p, q)));
                meet = meet.min(term);
            }
            if !x.is_empty() {
                join = join.max(meet);
            }
        }
        join
    };
    d0(a, b).max(d0(b, a))
}

/// Max over words of the absolute trace-membership difference; the discrete
/// fuzzy distance oracle.
pub fn fuzzy_sup_diff(a: &FuzzySet<Word>, b: &FuzzySet<Word>) -> f64 {
    let mut words: BTreeSet<Word> = BTreeSet::new();
    words.extend(a.iter().map(|(w, _)| w.clone()));
    words.extend(b.iter().map(|(w, _)| w.clone()));
    words
        .iter()
        .map(|w| (a.membership(w) - b.membership(w)).abs())
        .fold(0.0_f64, f64::max)
}

// ---------------------------------------------------------------------------
// Random proofs
// ---------------------------------------------------------------------------

pub struct ProofSetup {
    pub theory: GradedTheory,
    pub carrier: FinMetric,
    pub ctx: Vec<CtxEntry>,
    pub proof: DerivationTree,
}

fn node(rule: Rule, conclusion: Judgement, premises: Vec<DerivationTree>) -> DerivationTree {
    DerivationTree { rule, conclusion, premises, axiom: None, subst: None, subst_depth: None }
}

fn grid01(rng: &mut StdRng) -> f64 {
    0.05 * rng.random_range(0..=20) as f64
}

/// Random term of exact uniform depth `depth` over the given variables,
/// with small size.
pub fn random_term(
    rng: &mut StdRng,
    theory: &GradedTheory,
    depth: usize,
    vars: &[String],
) -> Term {
    if depth > 0 {
        let l = theory.labels.names()[rng.random_range(0..theory.labels.len())].clone();
        return Term::act(l, random_term(rng, theory, depth - 1, vars));
    }
    let leaf = |rng: &mut StdRng| Term::var(vars[rng.random_range(0..vars.len())].clone());
    match theory.base {
        BaseTheory::Powerset => match rng.random_range(0..4) {
            0 => Term::plus(leaf(rng), leaf(rng)),
            1 => Term::plus(leaf(rng), Term::Zero),
            _ => leaf(rng),
        },
        BaseTheory::Fuzzy => match rng.random_range(0..5) {
            0 => Term::plus(leaf(rng), leaf(rng)),
            1 => Term::scale(grid01(rng), leaf(rng)),
            2 => Term::plus(Term::scale(grid01(rng), leaf(rng)), leaf(rng)),
            _ => leaf(rng),
        },
        BaseTheory::Dist => match rng.random_range(0..3) {
            0 => Term::bary(grid01(rng), leaf(rng), leaf(rng)),
            _ => leaf(rng),
        },
    }
}

fn judgement_depth(j: &Judgement) -> Option<behdist_core::quanteq::DepthInfo> {
    use behdist_core::quanteq::DepthInfo;
    DepthInfo::unify(j.lhs.depth_info()?, j.rhs.depth_info()?)
}

/// Builds a random valid derivation over one of the built-in theories,
/// together with the carrier realizing the context distances exactly.
pub fn random_proof(rng: &mut StdRng, base: BaseTheory) -> ProofSetup {
    let labels = match base {
        BaseTheory::Fuzzy => random_labels(rng, 2, true),
        _ => {
            let metric_labels = rng.random_bool(0.5);
            random_labels(rng, 2, !metric_labels)
        }
    };
    let tensor = match base {
        BaseTheory::Dist => TensorKind::manhattan(),
        _ => TensorKind::sup(),
    };
    let theory = behdist_core::quanteq::build_trace_theory(base, labels, tensor).unwrap();
    let carrier = random_metric(rng, 3);
    let vars: Vec<String> = carrier.points().to_vec();
    let mut ctx = Vec::new();
    for i in 0..carrier.len() {
        for j in (i + 1)..carrier.len() {
            ctx.push(CtxEntry {
                x: vars[i].clone(),
                y: vars[j].clone(),
                eps: carrier.dist(i, j),
            });
        }
    }

    let mut pool: Vec<DerivationTree> = Vec::new();
    for e in &ctx {
        pool.push(node(
            Rule::Assn,
            Judgement {
                ctx: ctx.clone(),
                lhs: Term::var(e.x.clone()),
                rhs: Term::var(e.y.clone()),
                eps: e.eps,
            },
            vec![],
        ));
    }
    let refl_of = |t: Term, ctx: &[CtxEntry]| {
        node(
            Rule::Refl,
            Judgement { ctx: ctx.to_vec(), lhs: t.clone(), rhs: t, eps: 0.0 },
            vec![],
        )
    };
    let seed_depth = rng.random_range(0..=1);
    pool.push(refl_of(random_term(rng, &theory, seed_depth, &vars), &ctx));

    let steps = rng.random_range(3..=8);
    for _ in 0..steps {
        let pick = rng.random_range(0..pool.len());
        let j = pool[pick].clone();
        let jc = j.conclusion.clone();
        let choice = rng.random_range(0..7);
        let new_node = match choice {
            // sym
            0 => node(
                Rule::Sym,
                Judgement { ctx: ctx.clone(), lhs: jc.rhs.clone(), rhs: jc.lhs.clone(), eps: jc.eps },
                vec![j],
            ),
            // wk
            1 => {
                let bump = (jc.eps + grid01(rng) * 0.2).min(1.0);
                node(
                    Rule::Wk,
                    Judgement { ctx: ctx.clone(), lhs: jc.lhs.clone(), rhs: jc.rhs.clone(), eps: bump },
                    vec![j],
                )
            }
            // triang with a reflexive tail
            2 => {
                let tail = refl_of(jc.rhs.clone(), &ctx);
                node(
                    Rule::Triang,
                    Judgement {
                        ctx: ctx.clone(),
                        lhs: jc.lhs.clone(),
                        rhs: jc.rhs.clone(),
                        eps: jc.eps.min(1.0),
                    },
                    vec![j, tail],
                )
            }
            // nexp under a label operation
            3 => {
                let l = theory.labels.names()[rng.random_range(0..theory.labels.len())].clone();
                node(
                    Rule::Nexp,
                    Judgement {
                        ctx: ctx.clone(),
                        lhs: Term::act(l.clone(), jc.lhs.clone()),
                        rhs: Term::act(l, jc.rhs.clone()),
                        eps: jc.eps,
                    },
                    vec![j],
                )
            }
            // nexp under the binary base operation, doubling the premise
            4 => match base {
                BaseTheory::Dist => {
                    let r = grid01(rng);
                    node(
                        Rule::Nexp,
                        Judgement {
                            ctx: ctx.clone(),
                            lhs: Term::bary(r, jc.lhs.clone(), jc.lhs.clone()),
                            rhs: Term::bary(r, jc.rhs.clone(), jc.rhs.clone()),
                            eps: jc.eps,
                        },
                        vec![j.clone(), j],
                    )
                }
                _ => node(
                    Rule::Nexp,
                    Judgement {
                        ctx: ctx.clone(),
                        lhs: Term::plus(jc.lhs.clone(), jc.lhs.clone()),
                        rhs: Term::plus(jc.rhs.clone(), jc.rhs.clone()),
                        eps: jc.eps,
                    },
                    vec![j.clone(), j],
                ),
            },
            // label distance axiom
            5 => {
                let names = theory.labels.names().to_vec();
                let a = names[rng.random_range(0..names.len())].clone();
                let b = names[rng.random_range(0..names.len())].clone();
                let (ai, bi) =
                    (theory.labels.index_of(&a).unwrap(), theory.labels.index_of(&b).unwrap());
                let depth = judgement_depth(&jc).expect("pool judgements are uniform").least();
                let eps = theory.tensor.combine(theory.labels.space().dist(ai, bi), jc.eps);
                DerivationTree {
                    rule: Rule::Ax,
                    conclusion: Judgement {
                        ctx: ctx.clone(),
                        lhs: Term::act(a, jc.lhs.clone()),
                        rhs: Term::act(b, jc.rhs.clone()),
                        eps,
                    },
                    premises: vec![j],
                    axiom: Some("label_dist".into()),
                    subst: Some(BTreeMap::from([
                        ("x".to_string(), jc.lhs.clone()),
                        ("y".to_string(), jc.rhs.clone()),
                    ])),
                    subst_depth: Some(depth),
                }
            }
            // an equational axiom instance
            _ => random_equational_axiom(rng, &theory, &ctx, &vars),
        };
        pool.push(new_node);
    }

    // prefer a non-leaf as the final goal
    let proof = pool
        .iter()
        .rev()
        .find(|p| !p.premises.is_empty() || p.rule == Rule::Ax)
        .unwrap_or(&pool[pool.len() - 1])
        .clone();
    ProofSetup { theory, carrier, ctx, proof }
}

fn random_equational_axiom(
    rng: &mut StdRng,
    theory: &GradedTheory,
    ctx: &[CtxEntry],
    vars: &[String],
) -> DerivationTree {
    let depth = rng.random_range(0..=1);
    let t = |rng: &mut StdRng| random_term(rng, theory, depth, vars);
    let label =
        theory.labels.names()[rng.random_range(0..theory.labels.len())].clone();
    let mk = |axiom: &str,
              lhs: Term,
              rhs: Term,
              subst: BTreeMap<String, Term>| DerivationTree {
        rule: Rule::Ax,
        conclusion: Judgement { ctx: ctx.to_vec(), lhs, rhs, eps: 0.0 },
        premises: vec![],
        axiom: Some(axiom.into()),
        subst: Some(subst),
        subst_depth: Some(depth),
    };
    match theory.base {
        BaseTheory::Powerset | BaseTheory::Fuzzy => {
            let with_fuzzy = theory.base == BaseTheory::Fuzzy;
            match rng.random_range(0..if with_fuzzy { 7 } else { 4 }) {
                0 => {
                    let x = t(rng);
                    mk(
                        "plus_unit",
                        Term::plus(x.clone(), Term::Zero),
                        x.clone(),
                        BTreeMap::from([("x".to_string(), x)]),
                    )
                }
                1 => {
                    let x = t(rng);
                    mk(
                        "plus_idem",
                        Term::plus(x.clone(), x.clone()),
                        x.clone(),
                        BTreeMap::from([("x".to_string(), x)]),
                    )
                }
                2 => {
                    let (x, y) = (t(rng), t(rng));
                    mk(
                        "plus_comm",
                        Term::plus(x.clone(), y.clone()),
                        Term::plus(y.clone(), x.clone()),
                        BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]),
                    )
                }
                3 => {
                    let (x, y) = (t(rng), t(rng));
                    mk(
                        "act_plus",
                        Term::act(label.clone(), Term::plus(x.clone(), y.clone())),
                        Term::plus(
                            Term::act(label.clone(), x.clone()),
                            Term::act(label.clone(), y.clone()),
                        ),
                        BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]),
                    )
                }
                4 => {
                    let x = t(rng);
                    let (r, s) = (grid01(rng), grid01(rng));
                    mk(
                        "scale_meet",
                        Term::scale(r, Term::scale(s, x.clone())),
                        Term::scale(r.min(s), x.clone()),
                        BTreeMap::from([("x".to_string(), x)]),
                    )
                }
                5 => {
                    let x = t(rng);
                    mk(
                        "scale_one",
                        Term::scale(1.0, x.clone()),
                        x.clone(),
                        BTreeMap::from([("x".to_string(), x)]),
                    )
                }
                _ => {
                    let (x, y) = (t(rng), t(rng));
                    let r = grid01(rng);
                    mk(
                        "scale_join",
                        Term::scale(r, Term::plus(x.clone(), y.clone())),
                        Term::plus(Term::scale(r, x.clone()), Term::scale(r, y.clone())),
                        BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]),
                    )
                }
            }
        }
        BaseTheory::Dist => match rng.random_range(0..4) {
            0 => {
                let (x, y) = (t(rng), t(rng));
                mk(
                    "bary_one",
                    Term::bary(1.0, x.clone(), y.clone()),
                    x.clone(),
                    BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]),
                )
            }
            1 => {
                let x = t(rng);
                let r = grid01(rng);
                mk(
                    "bary_idem",
                    Term::bary(r, x.clone(), x.clone()),
                    x.clone(),
                    BTreeMap::from([("x".to_string(), x)]),
                )
            }
            2 => {
                let (x, y) = (t(rng), t(rng));
                let r = grid01(rng);
                mk(
                    "bary_skew",
                    Term::bary(r, x.clone(), y.clone()),
                    Term::bary(1.0 - r, y.clone(), x.clone()),
                    BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]),
                )
            }
            _ => {
                let (x, y) = (t(rng), t(rng));
                let r = grid01(rng);
                mk(
                    "act_bary",
                    Term::act(label.clone(), Term::bary(r, x.clone(), y.clone())),
                    Term::bary(
                        r,
                        Term::act(label.clone(), x.clone()),
                        Term::act(label.clone(), y.clone()),
                    ),
                    BTreeMap::from([("x".to_string(), x), ("y".to_string(), y)]),
                )
            }
        },
    }
}

/// All node paths of a derivation, root first.
pub fn proof_paths(proof: &DerivationTree) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    fn walk(node: &DerivationTree, prefix: &[usize], out: &mut Vec<Vec<usize>>) {
        for (i, p) in node.premises.iter().enumerate() {
            let mut path = prefix.to_vec();
            path.push(i);
            out.push(path.clone());
            walk(p, &path, out);
        }
    }
    walk(proof, &[], &mut out);
    out
}

/// Corrupts the epsilon of the node at `path` so that exactly that node's
/// rule application becomes invalid (its subtree stays intact).
pub fn mutate_proof(proof: &DerivationTree, path: &[usize]) -> DerivationTree {
    const DELTA: f64 = 0.0123456789;
    let mut out = proof.clone();
    {
        let mut node = &mut out;
        for &i in path {
            node = &mut node.premises[i];
        }
        if node.rule == Rule::Wk {
            node.conclusion.eps = node.premises[0].conclusion.eps - DELTA;
        } else {
            let bumped = node.conclusion.eps + DELTA;
            node.conclusion.eps =
                if bumped > 1.0 { node.conclusion.eps - DELTA } else { bumped };
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Random layered terms
// ---------------------------------------------------------------------------

fn dyadic(rng: &mut StdRng) -> f64 {
    rng.random_range(1..16) as f64 / 16.0
}

fn random_slot_combo(rng: &mut StdRng, theory: &GradedTheory, slots: &[String], budget: usize) -> Term {
    let leaf = |rng: &mut StdRng| Term::var(slots[rng.random_range(0..slots.len())].clone());
    if budget == 0 {
        return leaf(rng);
    }
    match theory.base {
        BaseTheory::Powerset => match rng.random_range(0..3) {
            0 => Term::plus(
                random_slot_combo(rng, theory, slots, budget - 1),
                random_slot_combo(rng, theory, slots, budget - 1),
            ),
            _ => leaf(rng),
        },
        BaseTheory::Fuzzy => match rng.random_range(0..4) {
            0 => Term::plus(
                random_slot_combo(rng, theory, slots, budget - 1),
                random_slot_combo(rng, theory, slots, budget - 1),
            ),
            1 => Term::scale(grid01(rng), random_slot_combo(rng, theory, slots, budget - 1)),
            _ => leaf(rng),
        },
        BaseTheory::Dist => match rng.random_range(0..3) {
            0 => Term::bary(
                dyadic(rng),
                random_slot_combo(rng, theory, slots, budget - 1),
                random_slot_combo(rng, theory, slots, budget - 1),
            ),
            _ => leaf(rng),
        },
    }
}

/// Random depth-1 term over slot variables plus a depth-`n` assignment for
/// each slot. Distribution weights are dyadic so both interpretation routes
/// are exact.
pub fn random_layered(
    rng: &mut StdRng,
    theory: &GradedTheory,
    inner_depth: usize,
    vars: &[String],
) -> LayeredTerm {
    let slot_count = rng.random_range(1..=3);
    let slots: Vec<String> = (0..slot_count).map(|i| format!("slot{i}")).collect();
    // depth-1 upper layer: depth-0 combination of label applications of
    // depth-0 slot combinations
    let modal = |rng: &mut StdRng, theory: &GradedTheory| {
        let l = theory.labels.names()[rng.random_range(0..theory.labels.len())].clone();
        Term::act(l, random_slot_combo(rng, theory, &slots, 1))
    };
    let upper = match theory.base {
        BaseTheory::Powerset => match rng.random_range(0..2) {
            0 => Term::plus(modal(rng, theory), modal(rng, theory)),
            _ => modal(rng, theory),
        },
        BaseTheory::Fuzzy => match rng.random_range(0..3) {
            0 => Term::plus(modal(rng, theory), modal(rng, theory)),
            1 => Term::scale(grid01(rng), modal(rng, theory)),
            _ => modal(rng, theory),
        },
        BaseTheory::Dist => match rng.random_range(0..2) {
            0 => Term::bary(dyadic(rng), modal(rng, theory), modal(rng, theory)),
            _ => modal(rng, theory),
        },
    };
    let assignment = slots
        .iter()
        .map(|s| (s.clone(), random_inner_term(rng, theory, inner_depth, vars)))
        .collect();
    LayeredTerm { upper, assignment }
}

fn random_inner_term(
    rng: &mut StdRng,
    theory: &GradedTheory,
    depth: usize,
    vars: &[String],
) -> Term {
    if depth > 0 {
        let l = theory.labels.names()[rng.random_range(0..theory.labels.len())].clone();
        return Term::act(l, random_inner_term(rng, theory, depth - 1, vars));
    }
    let leaf = |rng: &mut StdRng| Term::var(vars[rng.random_range(0..vars.len())].clone());
    match theory.base {
        BaseTheory::Powerset => match rng.random_range(0..3) {
            0 => Term::plus(leaf(rng), leaf(rng)),
            _ => leaf(rng),
        },
        BaseTheory::Fuzzy => match rng.random_range(0..4) {
            0 => Term::plus(leaf(rng), leaf(rng)),
            1 => Term::scale(grid01(rng), leaf(rng)),
            _ => leaf(rng),
        },
        BaseTheory::Dist => match rng.random_range(0..3) {
            0 => Term::bary(dyadic(rng), leaf(rng), leaf(rng)),
            _ => leaf(rng),
        },
    }
}

// ---------------------------------------------------------------------------
// Coupling grid
// ---------------------------------------------------------------------------

/// Maximal Kantorovich distance between binarized swapped value profiles
/// over the grid, under the Manhattan product cost with label distance `v`.
pub fn binarized_coupling_max(v: f64, grid: f64) -> f64 {
    use behdist_core::graded::binarize_distribution;
    use behdist_core::lifting::kantorovich_by;
    use behdist_core::num::oplus;
    let mut vals = Vec::new();
    let mut k = 0i64;
    loop {
        let val = k as f64 * grid;
        if val > 1.0 + 1e-12 {
            break;
        }
        vals.push(val.min(1.0));
        k += 1;
    }
    let cost = move |p: &(usize, OrdF64), q: &(usize, OrdF64)| {
        let dl = if p.0 == q.0 { 0.0 } else { v };
        oplus(dl, (p.1.get() - q.1.get()).abs())
    };
    let mut max = 0.0_f64;
    for &va in &vals {
        for &vb in &vals {
            if (va - vb).abs() > v + 1e-12 || va == vb {
                continue;
            }
            let mu =
                FinDist::new([((0usize, OrdF64(va)), 0.5), ((1usize, OrdF64(vb)), 0.5)]).unwrap();
            let nu =
                FinDist::new([((0usize, OrdF64(vb)), 0.5), ((1usize, OrdF64(va)), 0.5)]).unwrap();
            let (d, _) = kantorovich_by(&binarize_distribution(&mu), &binarize_distribution(&nu), cost)
                .expect("certificate stays tight");
            max = max.max(d);
        }
    }
    max
}

/// Directory of the shipped example systems.
pub fn corpus_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}
