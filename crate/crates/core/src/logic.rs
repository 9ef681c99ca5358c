//! Quantitative modal logic over the built-in semantics: syntax, evaluation
//! on coalgebras, bounded logical distance by formula enumeration, witness
//! search and the invariance check.
//!
//! Formula grammar (UTF-8):
//! ```text
//! formula := "1" | "<" label ">" formula | opname "(" args ")"
//! opname  := "or" | "and" | "neg" | "addc" | "subc" | "meetc" | "aff"
//! ```
//! `addc`/`subc`/`meetc` take one leading numeric constant, `aff` takes two
//! (`aff(p,q,φ)` evaluates to `p·φ + q`).

use crate::graded::{behavioural_distance, GradedError, Semantics};
use crate::metric::LabelSpace;
use crate::num::{clamp01, ominus, OrdF64, TOL};
use crate::system::{Coalgebra, Trans};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PropOp {
    Or,
    And,
    Neg,
    AddC(OrdF64),
    SubC(OrdF64),
    MeetC(OrdF64),
    Aff(OrdF64, OrdF64),
}

impl PropOp {
    pub fn arity(&self) -> usize {
        match self {
            PropOp::Or | PropOp::And => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PropOp::Or => "or",
            PropOp::And => "and",
            PropOp::Neg => "neg",
            PropOp::AddC(_) => "addc",
            PropOp::SubC(_) => "subc",
            PropOp::MeetC(_) => "meetc",
            PropOp::Aff(..) => "aff",
        }
    }

    /// Pointwise application; every whitelisted operator is nonexpansive as
    /// a map `[0,1]ᵏ → [0,1]`.
    pub fn apply(&self, args: &[f64]) -> f64 {
        match self {
            PropOp::Or => args[0].max(args[1]),
            PropOp::And => args[0].min(args[1]),
            PropOp::Neg => 1.0 - args[0],
            PropOp::AddC(c) => (args[0] + c.get()).min(1.0),
            PropOp::SubC(c) => (args[0] - c.get()).max(0.0),
            PropOp::MeetC(c) => args[0].min(c.get()),
            PropOp::Aff(p, q) => clamp01(p.get() * args[0] + q.get()),
        }
    }

    fn valid_constants(&self) -> bool {
        match self {
            PropOp::Or | PropOp::And | PropOp::Neg => true,
            PropOp::AddC(c) | PropOp::SubC(c) | PropOp::MeetC(c) => {
                (0.0..=1.0).contains(&c.get())
            }
            PropOp::Aff(p, q) => {
                let (p, q) = (p.get(), q.get());
                (0.0..=1.0).contains(&q) && (0.0..=1.0).contains(&(p + q)) && p.abs() <= 1.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Formula {
    /// The truth constant, of uniform depth exactly 0.
    One,
    Modal(String, Box<Formula>),
    Prop(PropOp, Vec<Formula>),
}

impl Formula {
    pub fn modal(label: impl Into<String>, sub: Formula) -> Formula {
        Formula::Modal(label.into(), Box::new(sub))
    }

    /// A word formula `⟨a₁⟩…⟨aₙ⟩1`.
    pub fn word(labels: &[String], word: &[usize]) -> Formula {
        let mut f = Formula::One;
        for &a in word.iter().rev() {
            f = Formula::modal(labels[a].clone(), f);
        }
        f
    }

    pub fn size(&self) -> usize {
        match self {
            Formula::One => 1,
            Formula::Modal(_, sub) => 1 + sub.size(),
            Formula::Prop(_, subs) => 1 + subs.iter().map(Formula::size).sum::<usize>(),
        }
    }

    /// The uniform depth: the truth constant has depth 0, a modality adds 1,
    /// and a propositional operator requires all arguments to agree.
    pub fn uniform_depth(&self) -> Result<usize, LogicError> {
        match self {
            Formula::One => Ok(0),
            Formula::Modal(_, sub) => Ok(1 + sub.uniform_depth()?),
            Formula::Prop(op, subs) => {
                let depths: Result<Vec<usize>, _> =
                    subs.iter().map(Formula::uniform_depth).collect();
                let depths = depths?;
                if depths.windows(2).any(|w| w[0] != w[1]) {
                    return Err(LogicError::Depth(format!(
                        "no uniform depth: `{}` mixes argument depths {:?}",
                        Formula::Prop(*op, subs.clone()),
                        depths
                    )));
                }
                Ok(depths[0])
            }
        }
    }

    fn labels_into(&self, out: &mut BTreeSet<String>) {
        match self {
            Formula::One => {}
            Formula::Modal(l, sub) => {
                out.insert(l.clone());
                sub.labels_into(out);
            }
            Formula::Prop(_, subs) => {
                for s in subs {
                    s.labels_into(out);
                }
            }
        }
    }
}

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Formula::One => write!(f, "1"),
            Formula::Modal(l, sub) => write!(f, "<{l}>{sub}"),
            Formula::Prop(op, subs) => {
                write!(f, "{}(", op.name())?;
                match op {
                    PropOp::AddC(c) | PropOp::SubC(c) | PropOp::MeetC(c) => write!(f, "{c},")?,
                    PropOp::Aff(p, q) => write!(f, "{p},{q},")?,
                    _ => {}
                }
                for (i, s) in subs.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{s}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LogicError {
    #[error("syntax error at byte {at}: {msg}")]
    Syntax { at: usize, msg: String },
    #[error("{0}")]
    Depth(String),
    #[error("operator `{op}` is not whitelisted for {sem} semantics")]
    Whitelist { op: String, sem: &'static str },
    #[error("invalid constant in `{0}`")]
    Constant(String),
    #[error("label `{0}` not declared by the system")]
    UnknownLabel(String),
    #[error(transparent)]
    Graded(#[from] GradedError),
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

struct Parser<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LogicError> {
        Err(LogicError::Syntax { at: self.pos, msg: msg.into() })
    }

    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_whitespace()) {
            self.pos += self.rest().chars().next().unwrap().len_utf8();
        }
    }

    fn eat(&mut self, c: char) -> Result<(), LogicError> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            self.err(format!("expected `{c}`"))
        }
    }

    fn number(&mut self) -> Result<f64, LogicError> {
        self.skip_ws();
        let start = self.pos;
        let bytes = self.text.as_bytes();
        let mut end = self.pos;
        while end < bytes.len()
            && (bytes[end].is_ascii_digit()
                || matches!(bytes[end], b'.' | b'-' | b'+' | b'e' | b'E'))
        {
            end += 1;
        }
        let lit = &self.text[start..end];
        match lit.parse::<f64>() {
            Ok(v) => {
                self.pos = end;
                Ok(v)
            }
            Err(_) => self.err(format!("expected a numeric constant, found `{lit}`")),
        }
    }

    fn formula(&mut self) -> Result<Formula, LogicError> {
        self.skip_ws();
        if self.rest().starts_with('1') {
            self.pos += 1;
            return Ok(Formula::One);
        }
        if self.rest().starts_with('<') {
            self.pos += 1;
            let close = match self.rest().find('>') {
                Some(i) => i,
                None => return self.err("unterminated modality, expected `>`"),
            };
            let label = self.rest()[..close].trim().to_string();
            if label.is_empty() {
                return self.err("empty modality label");
            }
            self.pos += close + 1;
            let sub = self.formula()?;
            return Ok(Formula::modal(label, sub));
        }
        let start = self.pos;
        let name: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
            .collect();
        if name.is_empty() {
            return self.err("expected a formula");
        }
        self.pos += name.len();
        self.eat('(')?;
        let formula = match name.as_str() {
            "or" | "and" => {
                let lhs = self.formula()?;
                self.eat(',')?;
                let rhs = self.formula()?;
                let op = if name == "or" { PropOp::Or } else { PropOp::And };
                Formula::Prop(op, vec![lhs, rhs])
            }
            "neg" => Formula::Prop(PropOp::Neg, vec![self.formula()?]),
            "addc" | "subc" | "meetc" => {
                let c = self.number()?;
                self.eat(',')?;
                let sub = self.formula()?;
                let op = match name.as_str() {
                    "addc" => PropOp::AddC(OrdF64(c)),
                    "subc" => PropOp::SubC(OrdF64(c)),
                    _ => PropOp::MeetC(OrdF64(c)),
                };
                Formula::Prop(op, vec![sub])
            }
            "aff" => {
                let p = self.number()?;
                self.eat(',')?;
                let q = self.number()?;
                self.eat(',')?;
                let sub = self.formula()?;
                Formula::Prop(PropOp::Aff(OrdF64(p), OrdF64(q)), vec![sub])
            }
            other => {
                self.pos = start;
                return self.err(format!("unknown operator `{other}`"));
            }
        };
        self.eat(')')?;
        if let Formula::Prop(op, _) = &formula {
            if !op.valid_constants() {
                return Err(LogicError::Constant(formula.to_string()));
            }
        }
        Ok(formula)
    }
}

/// Parses a formula and checks it has a uniform depth.
pub fn parse_formula(text: &str) -> Result<Formula, LogicError> {
    let mut p = Parser { text, pos: 0 };
    let f = p.formula()?;
    p.skip_ws();
    if p.pos != text.len() {
        return p.err("trailing input after formula");
    }
    f.uniform_depth()?;
    Ok(f)
}

// ---------------------------------------------------------------------------
// Signatures and evaluation
// ---------------------------------------------------------------------------

/// Per-semantics propositional whitelist and modality interpretation.
#[derive(Debug, Clone, Copy)]
pub struct ModalSignature {
    pub semantics: Semantics,
}

impl ModalSignature {
    pub fn new(semantics: Semantics) -> ModalSignature {
        ModalSignature { semantics }
    }

    /// Whether a propositional operator may appear under this semantics.
    /// Each whitelist contains only operators homomorphic for the matching
    /// depth-0 algebra: joins for trace sets, joins and constant meets for
    /// fuzzy sets, affine maps (fuzzy negation included) for distributions,
    /// and the full nonexpansive kit for streams.
    pub fn allows(&self, op: &PropOp) -> bool {
        match self.semantics {
            Semantics::MetricTrace => matches!(op, PropOp::Or),
            Semantics::FuzzyTrace => matches!(op, PropOp::Or | PropOp::MeetC(_)),
            Semantics::ProbTrace => matches!(op, PropOp::Aff(..) | PropOp::Neg),
            Semantics::StreamBranching => matches!(
                op,
                PropOp::Or | PropOp::And | PropOp::Neg | PropOp::AddC(_) | PropOp::SubC(_)
            ),
        }
    }

    pub fn check(&self, f: &Formula) -> Result<(), LogicError> {
        match f {
            Formula::One => Ok(()),
            Formula::Modal(_, sub) => self.check(sub),
            Formula::Prop(op, subs) => {
                if !self.allows(op) {
                    return Err(LogicError::Whitelist {
                        op: op.name().to_string(),
                        sem: self.semantics.as_str(),
                    });
                }
                if !op.valid_constants() {
                    return Err(LogicError::Constant(f.to_string()));
                }
                subs.iter().try_for_each(|s| self.check(s))
            }
        }
    }
}

/// The stream / metric-trace modality applied to a single successor pair:
/// `(1 - d(a,b)) ∧ v`.
pub fn modal_pair_value(labels: &LabelSpace, a: usize, b: usize, v: f64) -> f64 {
    (1.0 - labels.dist(a, b)).min(v)
}

/// One-step modality application: from successor values to state values.
fn modal_eval(c: &Coalgebra, sem: Semantics, a: usize, vals: &[f64]) -> Vec<f64> {
    let states = c.state_count();
    let mut out = vec![0.0; states];
    for (x, slot) in out.iter_mut().enumerate() {
        *slot = match (sem, c.trans(x)) {
            (Semantics::MetricTrace, Trans::Set(pairs)) => pairs
                .iter()
                .map(|&(b, x2)| modal_pair_value(&c.labels, a, b, vals[x2]))
                .fold(0.0_f64, f64::max),
            (Semantics::FuzzyTrace, Trans::Fuzzy(m)) => m
                .iter()
                .filter(|(&(b, _), _)| b == a)
                .map(|(&(_, x2), &r)| r.min(vals[x2]))
                .fold(0.0_f64, f64::max),
            // Expectation of the successor value discounted by the label
            // distance (truncated subtraction); on a discrete label space
            // this is exactly the mass of `a`-successors weighted by their
            // values.
            (Semantics::ProbTrace, Trans::Dist(m)) => m
                .iter()
                .map(|(&(b, x2), &p)| p * ominus(vals[x2], c.labels.dist(a, b)))
                .sum(),
            (Semantics::StreamBranching, Trans::Stream(b, x2)) => {
                modal_pair_value(&c.labels, a, *b, vals[*x2])
            }
            _ => unreachable!("system kind checked before evaluation"),
        };
    }
    out
}

/// Evaluates a whitelisted uniform-depth formula to a value per state.
pub fn evaluate(f: &Formula, c: &Coalgebra, sem: Semantics) -> Result<Vec<f64>, LogicError> {
    if c.kind != sem.system_kind() {
        return Err(LogicError::Graded(GradedError::SemanticsMismatch {
            sem: sem.as_str(),
            expected: sem.system_kind().as_str(),
            found: c.kind.as_str(),
        }));
    }
    f.uniform_depth()?;
    ModalSignature::new(sem).check(f)?;
    let mut labels = BTreeSet::new();
    f.labels_into(&mut labels);
    for l in &labels {
        if c.labels.index_of(l).is_none() {
            return Err(LogicError::UnknownLabel(l.clone()));
        }
    }
    Ok(eval_rec(f, c, sem))
}

fn eval_rec(f: &Formula, c: &Coalgebra, sem: Semantics) -> Vec<f64> {
    match f {
        Formula::One => vec![1.0; c.state_count()],
        Formula::Modal(l, sub) => {
            let vals = eval_rec(sub, c, sem);
            let a = c.labels.index_of(l).expect("labels checked before evaluation");
            modal_eval(c, sem, a, &vals)
        }
        Formula::Prop(op, subs) => {
            let evaluated: Vec<Vec<f64>> = subs.iter().map(|s| eval_rec(s, c, sem)).collect();
            (0..c.state_count())
                .map(|x| {
                    let args: Vec<f64> = evaluated.iter().map(|v| v[x]).collect();
                    op.apply(&args)
                })
                .collect()
        }
    }
}

// ---------------------------------------------------------------------------
// Enumeration
// ---------------------------------------------------------------------------

/// Controls bounded formula enumeration.
#[derive(Debug, Clone, Copy)]
pub struct EnumConfig {
    /// Include whitelisted propositional operators (otherwise modal-only).
    pub props: bool,
    /// Constant grid step for addc/subc/meetc/aff.
    pub grid: f64,
    /// Maximum formula size (node count, constants not counted).
    pub size_cap: usize,
    /// Budget per depth pool; enumeration order makes truncation
    /// deterministic.
    pub max_per_depth: usize,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig { props: false, grid: 0.05, size_cap: 7, max_per_depth: 4096 }
    }
}

impl EnumConfig {
    pub fn modal_only() -> EnumConfig {
        EnumConfig::default()
    }

    pub fn with_props(grid: f64) -> EnumConfig {
        EnumConfig { props: true, grid, ..EnumConfig::default() }
    }
}

fn grid_points(step: f64, lo: f64, hi: f64) -> Vec<f64> {
    let mut out = Vec::new();
    let mut k = (lo / step).round() as i64;
    loop {
        let v = k as f64 * step;
        if v > hi + 1e-12 {
            break;
        }
        if v >= lo - 1e-12 {
            out.push(v.clamp(lo, hi));
        }
        k += 1;
    }
    out
}

fn prop_ops(sem: Semantics, cfg: &EnumConfig) -> Vec<PropOp> {
    let sig = ModalSignature::new(sem);
    let unit = grid_points(cfg.grid, 0.0, 1.0);
    let mut ops = vec![PropOp::Or, PropOp::And, PropOp::Neg];
    for &c in &unit {
        ops.push(PropOp::AddC(OrdF64(c)));
        ops.push(PropOp::SubC(OrdF64(c)));
        ops.push(PropOp::MeetC(OrdF64(c)));
    }
    for &p in &grid_points(cfg.grid, -1.0, 1.0) {
        for &q in &unit {
            let op = PropOp::Aff(OrdF64(p), OrdF64(q));
            if op.valid_constants() {
                ops.push(op);
            }
        }
    }
    ops.retain(|op| sig.allows(op));
    ops
}

fn sort_pool(pool: &mut Vec<Formula>) {
    pool.sort_by(|a, b| a.size().cmp(&b.size()).then_with(|| a.cmp(b)));
    pool.dedup();
}

fn close_under_props(pool: &mut Vec<Formula>, ops: &[PropOp], cfg: &EnumConfig) {
    if ops.is_empty() {
        sort_pool(pool);
        return;
    }
    loop {
        if pool.len() >= cfg.max_per_depth {
            sort_pool(pool);
            return;
        }
        let quota = cfg.max_per_depth - pool.len();
        let snapshot = pool.clone();
        let existing: BTreeSet<Formula> = snapshot.iter().cloned().collect();
        let mut fresh: BTreeSet<Formula> = BTreeSet::new();
        'generate: for op in ops {
            match op.arity() {
                1 => {
                    for f in &snapshot {
                        if fresh.len() >= quota {
                            break 'generate;
                        }
                        if f.size() + 1 > cfg.size_cap {
                            continue;
                        }
                        let cand = Formula::Prop(*op, vec![f.clone()]);
                        if !existing.contains(&cand) {
                            fresh.insert(cand);
                        }
                    }
                }
                2 => {
                    for f in &snapshot {
                        for g in &snapshot {
                            if fresh.len() >= quota {
                                break 'generate;
                            }
                            if f.size() + g.size() + 1 > cfg.size_cap {
                                continue;
                            }
                            let cand = Formula::Prop(*op, vec![f.clone(), g.clone()]);
                            if !existing.contains(&cand) {
                                fresh.insert(cand);
                            }
                        }
                    }
                }
                _ => unreachable!(),
            }
        }
        if fresh.is_empty() {
            sort_pool(pool);
            return;
        }
        let budget_hit = fresh.len() >= quota;
        pool.extend(fresh);
        sort_pool(pool);
        if budget_hit {
            return;
        }
    }
}

/// All whitelisted uniform-depth formulas, grouped by depth `0..=depth`,
/// deduplicated structurally, each pool ordered by size then
/// lexicographically.
pub fn enumerate_formulas(
    sem: Semantics,
    labels: &[String],
    depth: usize,
    cfg: &EnumConfig,
) -> Vec<Vec<Formula>> {
    let ops = if cfg.props { prop_ops(sem, cfg) } else { Vec::new() };
    let mut pools: Vec<Vec<Formula>> = Vec::with_capacity(depth + 1);
    let mut pool = vec![Formula::One];
    close_under_props(&mut pool, &ops, cfg);
    pools.push(pool);
    for d in 1..=depth {
        let mut pool: Vec<Formula> = Vec::new();
        'outer: for f in &pools[d - 1] {
            if f.size() + 1 > cfg.size_cap {
                continue;
            }
            for l in labels {
                if pool.len() >= cfg.max_per_depth {
                    break 'outer;
                }
                pool.push(Formula::modal(l.clone(), f.clone()));
            }
        }
        sort_pool(&mut pool);
        close_under_props(&mut pool, &ops, cfg);
        pools.push(pool);
    }
    pools
}

// ---------------------------------------------------------------------------
// Logical distance, witness search, invariance
// ---------------------------------------------------------------------------

/// Formulas evaluated over all states, grouped by uniform depth.
pub struct EvaluatedFormulas {
    pub by_depth: Vec<Vec<(Formula, Vec<f64>)>>,
}

/// Enumerates and evaluates every formula up to `depth`.
pub fn evaluate_all(
    c: &Coalgebra,
    sem: Semantics,
    depth: usize,
    cfg: &EnumConfig,
) -> Result<EvaluatedFormulas, LogicError> {
    if c.kind != sem.system_kind() {
        return Err(LogicError::Graded(GradedError::SemanticsMismatch {
            sem: sem.as_str(),
            expected: sem.system_kind().as_str(),
            found: c.kind.as_str(),
        }));
    }
    let pools = enumerate_formulas(sem, c.labels.names(), depth, cfg);
    let by_depth = pools
        .into_iter()
        .map(|pool| {
            pool.into_iter()
                .map(|f| {
                    let vals = eval_rec(&f, c, sem);
                    (f, vals)
                })
                .collect()
        })
        .collect();
    Ok(EvaluatedFormulas { by_depth })
}

/// Maximal truth-value gap between two states over all enumerated formulas
/// of depth `≤ depth`, with the first witnessing formula in enumeration
/// order. A lower bound of the unbounded supremum over all formulas.
pub fn logical_distance(
    c: &Coalgebra,
    sem: Semantics,
    x: usize,
    y: usize,
    depth: usize,
    cfg: &EnumConfig,
) -> Result<(f64, Option<Formula>), LogicError> {
    let evaluated = evaluate_all(c, sem, depth, cfg)?;
    let mut best = 0.0;
    let mut witness = None;
    for pool in &evaluated.by_depth {
        for (f, vals) in pool {
            let gap = (vals[x] - vals[y]).abs();
            if gap > best {
                best = gap;
                witness = Some(f.clone());
            }
        }
    }
    Ok((best, witness))
}

/// Maximal gap over formulas of uniform depth exactly `n`.
pub fn logical_distance_at_depth(
    c: &Coalgebra,
    sem: Semantics,
    x: usize,
    y: usize,
    n: usize,
    cfg: &EnumConfig,
) -> Result<(f64, Option<Formula>), LogicError> {
    let evaluated = evaluate_all(c, sem, n, cfg)?;
    let mut best = 0.0;
    let mut witness = None;
    for (f, vals) in &evaluated.by_depth[n] {
        let gap = (vals[x] - vals[y]).abs();
        if gap > best {
            best = gap;
            witness = Some(f.clone());
        }
    }
    Ok((best, witness))
}

/// Outcome of a failed witness search: the best gap reached.
#[derive(Debug, Clone, PartialEq)]
pub struct NotFound {
    pub best_gap: f64,
    pub best: Option<Formula>,
}

/// First enumerated formula whose gap between `x` and `y` reaches
/// `target - 1e-6`; modal-only formulas are searched before propositional
/// ones.
pub fn witness_search(
    c: &Coalgebra,
    sem: Semantics,
    x: usize,
    y: usize,
    depth: usize,
    target: f64,
    cfg: &EnumConfig,
) -> Result<Result<(Formula, f64), NotFound>, LogicError> {
    let mut passes = vec![EnumConfig { props: false, ..*cfg }];
    if cfg.props {
        passes.push(*cfg);
    }
    let mut best_gap = 0.0;
    let mut best = None;
    for pass in &passes {
        let evaluated = evaluate_all(c, sem, depth, pass)?;
        for pool in &evaluated.by_depth {
            for (f, vals) in pool {
                let gap = (vals[x] - vals[y]).abs();
                if gap >= target - 1e-6 {
                    return Ok(Ok((f.clone(), gap)));
                }
                if gap > best_gap {
                    best_gap = gap;
                    best = Some(f.clone());
                }
            }
        }
    }
    Ok(Err(NotFound { best_gap, best }))
}

/// Per-pair comparison of bounded logical and behavioural distance.
#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceEntry {
    pub x: usize,
    pub y: usize,
    pub logical: f64,
    pub behavioural: f64,
    /// Logical exceeds behavioural beyond tolerance; indicates an
    /// implementation bug, never expected.
    pub violation: bool,
    /// Logical is strictly below behavioural (an expressiveness gap).
    pub strict: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvarianceReport {
    pub entries: Vec<InvarianceEntry>,
    pub violations: usize,
}

/// Checks `logical ≤ behavioural + TOL` for every state pair at the given
/// depth bound.
pub fn invariance_check(
    c: &Coalgebra,
    sem: Semantics,
    depth: usize,
    cfg: &EnumConfig,
) -> Result<InvarianceReport, LogicError> {
    let evaluated = evaluate_all(c, sem, depth, cfg)?;
    let states = c.state_count();
    let mut entries = Vec::new();
    let mut violations = 0;
    for x in 0..states {
        for y in (x + 1)..states {
            let mut logical = 0.0_f64;
            for pool in &evaluated.by_depth {
                for (_, vals) in pool {
                    logical = logical.max((vals[x] - vals[y]).abs());
                }
            }
            let behavioural = behavioural_distance(c, sem, x, y, depth)?.max;
            let violation = logical > behavioural + TOL;
            if violation {
                violations += 1;
            }
            entries.push(InvarianceEntry {
                x,
                y,
                logical,
                behavioural,
                violation,
                strict: logical < behavioural - TOL,
            });
        }
    }
    Ok(InvarianceReport { entries, violations })
}
