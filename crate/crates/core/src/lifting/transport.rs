//! Exact optimal transport on finite supports via the transportation
//! simplex, returning a primal coupling and dual potentials whose objectives
//! agree within [`CERT_TOL`](crate::num::CERT_TOL).
#![allow(clippy::needless_range_loop)] // index loops mirror the tableau layout

use crate::lifting::FinDist;
use crate::num::{clamp01, CERT_TOL};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("transport simplex exceeded {0} pivots")]
    IterationLimit(usize),
    #[error("transport certificate gap {gap} exceeds {tol}")]
    CertificateGap { gap: f64, tol: f64 },
}

/// Witness of an exact transport solve: an optimal coupling with the
/// prescribed marginals and a 1-Lipschitz potential function whose dual
/// objective matches the primal cost.
#[derive(Debug, Clone)]
pub struct TransportCertificate<E: Ord> {
    pub coupling: BTreeMap<(E, E), f64>,
    pub potentials: BTreeMap<E, f64>,
    pub primal: f64,
    pub dual: f64,
}

struct Tableau {
    m: usize,
    n: usize,
    cost: Vec<f64>,
    basic: Vec<bool>,
    flow: Vec<f64>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }
}

pub(crate) fn solve<E: Ord + Clone, D: Fn(&E, &E) -> f64>(
    mu: &FinDist<E>,
    nu: &FinDist<E>,
    d: D,
) -> Result<(f64, TransportCertificate<E>), SolverError> {
    let rows: Vec<(&E, f64)> = mu.iter().collect();
    let cols: Vec<(&E, f64)> = nu.iter().collect();
    let (m, n) = (rows.len(), cols.len());

    let mut cost = vec![0.0; m * n];
    for (i, (x, _)) in rows.iter().enumerate() {
        for (j, (y, _)) in cols.iter().enumerate() {
            cost[i * n + j] = clamp01(d(x, y));
        }
    }
    let mut t = Tableau { m, n, cost, basic: vec![false; m * n], flow: vec![0.0; m * n] };

    let supplies: Vec<f64> = rows.iter().map(|(_, w)| *w).collect();
    let demands: Vec<f64> = cols.iter().map(|(_, w)| *w).collect();
    northwest_corner(&mut t, &supplies, &demands);

    let max_iter = 1000 + 20 * m * n;
    let mut iter = 0;
    loop {
        let (u, v) = potentials(&t);
        let bland = iter > max_iter / 2;
        let entering = select_entering(&t, &u, &v, bland);
        let Some((ei, ej)) = entering else { break };
        pivot(&mut t, ei, ej);
        iter += 1;
        if iter > max_iter {
            return Err(SolverError::IterationLimit(max_iter));
        }
    }

    // Primal side.
    let mut coupling = BTreeMap::new();
    let mut primal = 0.0;
    for i in 0..m {
        for j in 0..n {
            let idx = t.at(i, j);
            if t.basic[idx] && t.flow[idx] > 0.0 {
                primal += t.flow[idx] * t.cost[idx];
                coupling.insert((rows[i].0.clone(), cols[j].0.clone()), t.flow[idx]);
            }
        }
    }

    // Dual side: a 1-Lipschitz potential on the support union, built from the
    // column potentials by an infimal convolution with the cost, then shifted
    // into [0,1].
    let (_, v) = potentials(&t);
    let f_of = |z: &E| -> f64 {
        cols.iter()
            .enumerate()
            .map(|(j, (y, _))| clamp01(d(z, y)) - v[j])
            .fold(f64::INFINITY, f64::min)
    };
    let mut potential_map: BTreeMap<E, f64> = BTreeMap::new();
    for (x, _) in rows.iter() {
        potential_map.entry((*x).clone()).or_insert_with(|| f_of(x));
    }
    for (y, _) in cols.iter() {
        potential_map.entry((*y).clone()).or_insert_with(|| f_of(y));
    }
    let lo = potential_map.values().fold(f64::INFINITY, |a, b| a.min(*b));
    for val in potential_map.values_mut() {
        *val -= lo;
    }
    let mut dual = 0.0;
    for (z, f) in potential_map.iter() {
        dual += f * (mu.weight(z) - nu.weight(z));
    }

    let gap = (primal - dual).abs();
    if gap > CERT_TOL {
        return Err(SolverError::CertificateGap { gap, tol: CERT_TOL });
    }
    let value = clamp01(primal);
    Ok((value, TransportCertificate { coupling, potentials: potential_map, primal, dual }))
}

/// Initial basic feasible solution; always produces exactly `m + n - 1`
/// basic cells, inserting zero-flow cells on degenerate steps.
fn northwest_corner(t: &mut Tableau, supplies: &[f64], demands: &[f64]) {
    let (m, n) = (t.m, t.n);
    let mut supply = supplies.to_vec();
    let mut demand = demands.to_vec();
    // Balance float dust between the two total masses.
    let diff: f64 = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
    demand[n - 1] += diff;

    let (mut i, mut j) = (0, 0);
    loop {
        let q = supply[i].min(demand[j]).max(0.0);
        let idx = t.at(i, j);
        t.basic[idx] = true;
        t.flow[idx] = q;
        supply[i] -= q;
        demand[j] -= q;
        if i + 1 == m && j + 1 == n {
            break;
        }
        if i + 1 < m && (j + 1 == n || supply[i] <= 0.0) {
            i += 1;
        } else {
            j += 1;
        }
    }
}

/// Node potentials from the basis tree (row node 0 pinned to 0), via BFS
/// over basic cells.
fn potentials(t: &Tableau) -> (Vec<f64>, Vec<f64>) {
    let (m, n) = (t.m, t.n);
    let mut u = vec![f64::NAN; m];
    let mut v = vec![f64::NAN; n];
    u[0] = 0.0;
    let mut queue = vec![0usize]; // node ids: rows 0..m, cols m..m+n
    while let Some(node) = queue.pop() {
        if node < m {
            let i = node;
            for j in 0..n {
                if t.basic[t.at(i, j)] && v[j].is_nan() {
                    v[j] = t.cost[t.at(i, j)] - u[i];
                    queue.push(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if t.basic[t.at(i, j)] && u[i].is_nan() {
                    u[i] = t.cost[t.at(i, j)] - v[j];
                    queue.push(i);
                }
            }
        }
    }
    (u, v)
}

fn select_entering(t: &Tableau, u: &[f64], v: &[f64], bland: bool) -> Option<(usize, usize)> {
    let mut best: Option<(usize, usize)> = None;
    let mut best_rc = -1e-12;
    for i in 0..t.m {
        for j in 0..t.n {
            let idx = t.at(i, j);
            if t.basic[idx] {
                continue;
            }
            let rc = t.cost[idx] - u[i] - v[j];
            if rc < best_rc {
                if bland {
                    return Some((i, j));
                }
                best_rc = rc;
                best = Some((i, j));
            }
        }
    }
    best
}

/// Brings `(ei, ej)` into the basis: finds the unique tree cycle, shifts the
/// maximal flow around it, drops the blocking cell.
fn pivot(t: &mut Tableau, ei: usize, ej: usize) {
    let (m, n) = (t.m, t.n);
    // BFS for the tree path from row node ei to col node m + ej.
    let total = m + n;
    let mut parent = vec![usize::MAX; total];
    let mut seen = vec![false; total];
    seen[ei] = true;
    let mut queue = std::collections::VecDeque::from([ei]);
    while let Some(node) = queue.pop_front() {
        if node == m + ej {
            break;
        }
        if node < m {
            let i = node;
            for j in 0..n {
                if t.basic[t.at(i, j)] && !seen[m + j] {
                    seen[m + j] = true;
                    parent[m + j] = node;
                    queue.push_back(m + j);
                }
            }
        } else {
            let j = node - m;
            for i in 0..m {
                if t.basic[t.at(i, j)] && !seen[i] {
                    seen[i] = true;
                    parent[i] = node;
                    queue.push_back(i);
                }
            }
        }
    }
    debug_assert!(seen[m + ej], "basis must span all nodes");

    // Path edges from ej's node back to ei; walking the cycle from the
    // entering cell, signs alternate starting with + on the entering cell.
    let mut path_cells = Vec::new();
    let mut node = m + ej;
    while node != ei {
        let p = parent[node];
        let cell = if node < m { (node, p - m) } else { (p, node - m) };
        path_cells.push(cell);
        node = p;
    }
    // path_cells[0] is incident to the col node ej, so it alternates with the
    // entering cell: indices 0, 2, 4, … are the minus cells.
    let minus: Vec<(usize, usize)> = path_cells.iter().step_by(2).copied().collect();
    let plus: Vec<(usize, usize)> = path_cells.iter().skip(1).step_by(2).copied().collect();

    let mut theta = f64::INFINITY;
    let mut leaving = minus[0];
    for &(i, j) in &minus {
        let fl = t.flow[t.at(i, j)];
        if fl < theta || (fl == theta && (i, j) < leaving) {
            theta = fl;
            leaving = (i, j);
        }
    }
    for &(i, j) in &plus {
        let idx = t.at(i, j);
        t.flow[idx] += theta;
    }
    for &(i, j) in &minus {
        let idx = t.at(i, j);
        t.flow[idx] = (t.flow[idx] - theta).max(0.0);
    }
    let enter_idx = t.at(ei, ej);
    t.basic[enter_idx] = true;
    t.flow[enter_idx] = theta;
    let leave_idx = t.at(leaving.0, leaving.1);
    t.basic[leave_idx] = false;
    t.flow[leave_idx] = 0.0;
}
