//! Graded quantitative equational theories: uniform-depth terms, the
//! derivation-rule checker, theory builders over a label space, and
//! free-model interpretation and distance for the three built-in theories.
//!
//! Proof files are JSON trees of nodes
//! `{"rule", "conclusion": {"ctx", "lhs", "rhs", "eps"}, "premises",
//! "axiom"?, "subst"?, "subst_depth"?}` with terms in prefix syntax:
//! `plus(a(x), b(y))`, `p(0.5, x, y)` for the convex operation, and
//! `sc(0.7, x)` for the fuzzy scalar action.

use crate::graded::Word;
use crate::lifting::{
    fuzzy_hausdorff_by, hausdorff_by, kantorovich_by, FinDist, FinSet, FuzzySet, SolverError,
};
use crate::metric::{word_distance_with_tail, FinMetric, LabelSpace, TensorKind};
use crate::num::{OrdF64, TOL};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

// ---------------------------------------------------------------------------
// Signatures and terms
// ---------------------------------------------------------------------------

/// Base (depth-0) theory of a graded trace theory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaseTheory {
    /// Join semilattices: binary `plus`, constant `0`.
    Powerset,
    /// Join semilattices with a meet action `sc(r, -)` of `[0,1]`.
    Fuzzy,
    /// Convex operations `p(r, -, -)` for `r ∈ [0,1]`.
    Dist,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpSig {
    pub name: String,
    pub arity: usize,
    pub depth: usize,
}

/// Operations with their assigned depths; label operations are the unary
/// depth-1 ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GradedSignature {
    pub ops: Vec<OpSig>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(String),
    /// Join-semilattice bottom (powerset and fuzzy bases only).
    Zero,
    Plus(Box<Term>, Box<Term>),
    /// Meet action `sc(r, t)` (fuzzy base only).
    Scale(OrdF64, Box<Term>),
    /// Convex combination `p(r, s, t)`: weight `r` on `s` (dist base only).
    Bary(OrdF64, Box<Term>, Box<Term>),
    /// Unary depth-1 label application.
    Act(String, Box<Term>),
}

/// Uniform-depth analysis: `Rigid(n)` admits exactly `n`, `Flexible(m)`
/// (terms built from constants only) admits every depth `≥ m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthInfo {
    Rigid(usize),
    Flexible(usize),
}

impl DepthInfo {
    pub fn unify(a: DepthInfo, b: DepthInfo) -> Option<DepthInfo> {
        use DepthInfo::*;
        match (a, b) {
            (Rigid(x), Rigid(y)) => (x == y).then_some(Rigid(x)),
            (Rigid(x), Flexible(m)) | (Flexible(m), Rigid(x)) => (x >= m).then_some(Rigid(x)),
            (Flexible(m), Flexible(n)) => Some(Flexible(m.max(n))),
        }
    }

    pub fn admits(&self, n: usize) -> bool {
        match *self {
            DepthInfo::Rigid(k) => k == n,
            DepthInfo::Flexible(m) => n >= m,
        }
    }

    pub fn least(&self) -> usize {
        match *self {
            DepthInfo::Rigid(k) | DepthInfo::Flexible(k) => k,
        }
    }
}

impl Term {
    pub fn var(name: impl Into<String>) -> Term {
        Term::Var(name.into())
    }

    pub fn plus(a: Term, b: Term) -> Term {
        Term::Plus(Box::new(a), Box::new(b))
    }

    pub fn scale(r: f64, t: Term) -> Term {
        Term::Scale(OrdF64(r), Box::new(t))
    }

    pub fn bary(r: f64, a: Term, b: Term) -> Term {
        Term::Bary(OrdF64(r), Box::new(a), Box::new(b))
    }

    pub fn act(label: impl Into<String>, t: Term) -> Term {
        Term::Act(label.into(), Box::new(t))
    }

    /// Variables have uniform depth 0; constants admit every depth; an
    /// operation of depth `δ` over arguments of shared uniform depth `k`
    /// yields `δ + k`. `None` when the argument depths cannot be unified.
    pub fn depth_info(&self) -> Option<DepthInfo> {
        match self {
            Term::Var(_) => Some(DepthInfo::Rigid(0)),
            Term::Zero => Some(DepthInfo::Flexible(0)),
            Term::Plus(a, b) | Term::Bary(_, a, b) => {
                DepthInfo::unify(a.depth_info()?, b.depth_info()?)
            }
            Term::Scale(_, t) => t.depth_info(),
            Term::Act(_, t) => Some(match t.depth_info()? {
                DepthInfo::Rigid(k) => DepthInfo::Rigid(k + 1),
                DepthInfo::Flexible(m) => DepthInfo::Flexible(m + 1),
            }),
        }
    }

    /// The least uniform depth, if the term has one.
    pub fn uniform_depth(&self) -> Option<usize> {
        self.depth_info().map(|d| d.least())
    }

    pub fn vars_into(&self, out: &mut std::collections::BTreeSet<String>) {
        match self {
            Term::Var(v) => {
                out.insert(v.clone());
            }
            Term::Zero => {}
            Term::Plus(a, b) | Term::Bary(_, a, b) => {
                a.vars_into(out);
                b.vars_into(out);
            }
            Term::Scale(_, t) | Term::Act(_, t) => t.vars_into(out),
        }
    }

    /// Capture-free substitution (terms have no binders).
    pub fn substitute(&self, subst: &BTreeMap<String, Term>) -> Term {
        match self {
            Term::Var(v) => subst.get(v).cloned().unwrap_or_else(|| self.clone()),
            Term::Zero => Term::Zero,
            Term::Plus(a, b) => Term::plus(a.substitute(subst), b.substitute(subst)),
            Term::Scale(r, t) => Term::Scale(*r, Box::new(t.substitute(subst))),
            Term::Bary(r, a, b) => {
                Term::Bary(*r, Box::new(a.substitute(subst)), Box::new(b.substitute(subst)))
            }
            Term::Act(l, t) => Term::act(l.clone(), t.substitute(subst)),
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "{v}"),
            Term::Zero => write!(f, "0"),
            Term::Plus(a, b) => write!(f, "plus({a},{b})"),
            Term::Scale(r, t) => write!(f, "sc({r},{t})"),
            Term::Bary(r, a, b) => write!(f, "p({r},{a},{b})"),
            Term::Act(l, t) => write!(f, "{l}({t})"),
        }
    }
}

// ---------------------------------------------------------------------------
// Theories
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TheoryError {
    #[error("the fuzzy trace theory requires a discrete label space")]
    DiscreteRequired,
    #[error("label name `{0}` collides with a reserved operation name")]
    ReservedLabel(String),
}

/// A built-in graded trace theory: a depth-0 base, unary depth-1 label
/// operations, distributivity axioms, and distance axioms combining label
/// distance with the premise via the tensor.
#[derive(Debug, Clone)]
pub struct GradedTheory {
    pub base: BaseTheory,
    pub labels: LabelSpace,
    pub tensor: TensorKind,
}

const RESERVED: [&str; 4] = ["plus", "p", "sc", "0"];

/// Base theory plus one unary depth-1 operation per label, with the
/// distributivity axioms `a(f(…)) =₀ f(a(…),…)` and the distance axioms
/// `x =_ε y ⊢ a(x) =_{k(d(a,b),ε)} b(y)`.
pub fn build_trace_theory(
    base: BaseTheory,
    labels: LabelSpace,
    tensor: TensorKind,
) -> Result<GradedTheory, TheoryError> {
    if base == BaseTheory::Fuzzy && !labels.is_discrete() {
        return Err(TheoryError::DiscreteRequired);
    }
    for name in labels.names() {
        if RESERVED.contains(&name.as_str()) {
            return Err(TheoryError::ReservedLabel(name.clone()));
        }
    }
    Ok(GradedTheory { base, labels, tensor })
}

impl GradedTheory {
    pub fn metric_trace(labels: LabelSpace) -> Result<GradedTheory, TheoryError> {
        build_trace_theory(BaseTheory::Powerset, labels, TensorKind::sup())
    }

    pub fn fuzzy(labels: LabelSpace) -> Result<GradedTheory, TheoryError> {
        build_trace_theory(BaseTheory::Fuzzy, labels, TensorKind::sup())
    }

    pub fn prob(labels: LabelSpace) -> Result<GradedTheory, TheoryError> {
        build_trace_theory(BaseTheory::Dist, labels, TensorKind::manhattan())
    }

    pub fn tag(&self) -> &'static str {
        match self.base {
            BaseTheory::Powerset => "metric_trace_theory",
            BaseTheory::Fuzzy => "fuzzy_theory",
            BaseTheory::Dist => "prob_theory",
        }
    }

    pub fn signature(&self) -> GradedSignature {
        let mut ops = Vec::new();
        match self.base {
            BaseTheory::Powerset => {
                ops.push(OpSig { name: "plus".into(), arity: 2, depth: 0 });
                ops.push(OpSig { name: "0".into(), arity: 0, depth: 0 });
            }
            BaseTheory::Fuzzy => {
                ops.push(OpSig { name: "plus".into(), arity: 2, depth: 0 });
                ops.push(OpSig { name: "0".into(), arity: 0, depth: 0 });
                ops.push(OpSig { name: "sc".into(), arity: 1, depth: 0 });
            }
            BaseTheory::Dist => {
                ops.push(OpSig { name: "p".into(), arity: 2, depth: 0 });
            }
        }
        for l in self.labels.names() {
            ops.push(OpSig { name: l.clone(), arity: 1, depth: 1 });
        }
        GradedSignature { ops }
    }

    /// Axiom identifiers accepted by the checker for this theory.
    pub fn axiom_ids(&self) -> Vec<&'static str> {
        let mut ids = match self.base {
            BaseTheory::Powerset => vec![
                "plus_unit",
                "plus_idem",
                "plus_comm",
                "plus_assoc",
                "act_zero",
                "act_plus",
            ],
            BaseTheory::Fuzzy => vec![
                "plus_unit",
                "plus_idem",
                "plus_comm",
                "plus_assoc",
                "scale_one",
                "scale_meet",
                "scale_zero_op",
                "scale_bottom",
                "scale_join",
                "act_zero",
                "act_plus",
                "act_scale",
                "scale_dist",
            ],
            BaseTheory::Dist => vec!["bary_one", "bary_idem", "bary_skew", "bary_assoc", "act_bary"],
        };
        ids.push("label_dist");
        ids
    }

    /// Structural admissibility for this base (constructor set, declared
    /// labels, scalar ranges).
    pub fn term_valid(&self, t: &Term) -> Result<(), ModelError> {
        match t {
            Term::Var(_) => Ok(()),
            Term::Zero => match self.base {
                BaseTheory::Dist => Err(ModelError::WrongBase("0".into())),
                _ => Ok(()),
            },
            Term::Plus(a, b) => match self.base {
                BaseTheory::Dist => Err(ModelError::WrongBase("plus".into())),
                _ => {
                    self.term_valid(a)?;
                    self.term_valid(b)
                }
            },
            Term::Scale(r, inner) => {
                if self.base != BaseTheory::Fuzzy {
                    return Err(ModelError::WrongBase("sc".into()));
                }
                if !(0.0..=1.0).contains(&r.get()) {
                    return Err(ModelError::BadScalar(r.get()));
                }
                self.term_valid(inner)
            }
            Term::Bary(r, a, b) => {
                if self.base != BaseTheory::Dist {
                    return Err(ModelError::WrongBase("p".into()));
                }
                if !(0.0..=1.0).contains(&r.get()) {
                    return Err(ModelError::BadScalar(r.get()));
                }
                self.term_valid(a)?;
                self.term_valid(b)
            }
            Term::Act(l, inner) => {
                if self.labels.index_of(l).is_none() {
                    return Err(ModelError::UnknownLabel(l.clone()));
                }
                self.term_valid(inner)
            }
        }
    }

    /// Parses a term in prefix syntax against this theory's signature.
    pub fn parse_term(&self, text: &str) -> Result<Term, String> {
        let mut p = TermParser { text, pos: 0, theory: self };
        let t = p.term()?;
        p.skip_ws();
        if p.pos != text.len() {
            return Err(format!("trailing input after term at byte {}", p.pos));
        }
        Ok(t)
    }
}

struct TermParser<'a> {
    text: &'a str,
    pos: usize,
    theory: &'a GradedTheory,
}

impl<'a> TermParser<'a> {
    fn rest(&self) -> &'a str {
        &self.text[self.pos..]
    }

    fn skip_ws(&mut self) {
        while self.rest().starts_with(|c: char| c.is_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: char) -> Result<(), String> {
        self.skip_ws();
        if self.rest().starts_with(c) {
            self.pos += c.len_utf8();
            Ok(())
        } else {
            Err(format!("expected `{c}` at byte {}", self.pos))
        }
    }

    fn number(&mut self) -> Result<f64, String> {
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
        match self.text[start..end].parse::<f64>() {
            Ok(v) => {
                self.pos = end;
                Ok(v)
            }
            Err(_) => Err(format!("expected a numeric constant at byte {start}")),
        }
    }

    fn term(&mut self) -> Result<Term, String> {
        self.skip_ws();
        if self.rest().starts_with('0')
            && !self
                .rest()
                .chars()
                .nth(1)
                .is_some_and(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
        {
            self.pos += 1;
            return Ok(Term::Zero);
        }
        let name: String = self
            .rest()
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || *c == '_')
            .collect();
        if name.is_empty() {
            return Err(format!("expected a term at byte {}", self.pos));
        }
        self.pos += name.len();
        self.skip_ws();
        if !self.rest().starts_with('(') {
            return Ok(Term::Var(name));
        }
        self.eat('(')?;
        let t = match name.as_str() {
            "plus" => {
                let a = self.term()?;
                self.eat(',')?;
                let b = self.term()?;
                Term::plus(a, b)
            }
            "sc" => {
                let r = self.number()?;
                self.eat(',')?;
                let t = self.term()?;
                Term::scale(r, t)
            }
            "p" => {
                let r = self.number()?;
                self.eat(',')?;
                let a = self.term()?;
                self.eat(',')?;
                let b = self.term()?;
                Term::bary(r, a, b)
            }
            label if self.theory.labels.index_of(label).is_some() => {
                let t = self.term()?;
                Term::act(label, t)
            }
            other => return Err(format!("unknown operation `{other}`")),
        };
        self.eat(')')?;
        Ok(t)
    }
}

// ---------------------------------------------------------------------------
// Judgements and derivations
// ---------------------------------------------------------------------------

/// A context assumption `x =_ε y` between variables.
#[derive(Debug, Clone, PartialEq)]
pub struct CtxEntry {
    pub x: String,
    pub y: String,
    pub eps: f64,
}

/// `Γ ⊢ lhs =_ε rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Judgement {
    pub ctx: Vec<CtxEntry>,
    pub lhs: Term,
    pub rhs: Term,
    pub eps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rule {
    Triang,
    Refl,
    Sym,
    Wk,
    Ax,
    Assn,
    Nexp,
    /// Present in the rule system but not accepted in proof objects (its
    /// premise set is infinite); distances are computed semantically
    /// instead.
    Arch,
}

impl Rule {
    pub fn parse(s: &str) -> Option<Rule> {
        Some(match s {
            "triang" => Rule::Triang,
            "refl" => Rule::Refl,
            "sym" => Rule::Sym,
            "wk" => Rule::Wk,
            "ax" => Rule::Ax,
            "assn" => Rule::Assn,
            "nexp" => Rule::Nexp,
            "arch" => Rule::Arch,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivationTree {
    pub rule: Rule,
    pub conclusion: Judgement,
    pub premises: Vec<DerivationTree>,
    pub axiom: Option<String>,
    pub subst: Option<BTreeMap<String, Term>>,
    pub subst_depth: Option<usize>,
}

fn path_str(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        let mut s = "root".to_string();
        for i in path {
            s.push('.');
            s.push_str(&i.to_string());
        }
        s
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CheckError {
    #[error("invalid step at {}: {reason}", path_str(path))]
    InvalidStep { path: Vec<usize>, reason: String },
    #[error("rule `arch` at {} is not accepted in proof objects", path_str(path))]
    ArchUnsupported { path: Vec<usize> },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProofParseError {
    #[error("malformed proof file: {0}")]
    Json(String),
    #[error("unknown rule `{0}`")]
    BadRule(String),
    #[error("bad term `{term}`: {msg}")]
    Term { term: String, msg: String },
}

#[derive(Debug, Deserialize)]
struct CtxFile {
    x: String,
    y: String,
    eps: f64,
}

#[derive(Debug, Deserialize)]
struct JudgementFile {
    #[serde(default)]
    ctx: Vec<CtxFile>,
    lhs: String,
    rhs: String,
    eps: f64,
}

#[derive(Debug, Deserialize)]
struct ProofFile {
    rule: String,
    conclusion: JudgementFile,
    #[serde(default)]
    premises: Vec<ProofFile>,
    #[serde(default)]
    axiom: Option<String>,
    #[serde(default)]
    subst: Option<BTreeMap<String, String>>,
    #[serde(default)]
    subst_depth: Option<usize>,
}

/// Parses a proof JSON file against a theory (terms are resolved with the
/// theory's signature).
pub fn parse_proof(text: &str, theory: &GradedTheory) -> Result<DerivationTree, ProofParseError> {
    let file: ProofFile =
        serde_json::from_str(text).map_err(|e| ProofParseError::Json(e.to_string()))?;
    build_tree(&file, theory)
}

fn build_tree(file: &ProofFile, theory: &GradedTheory) -> Result<DerivationTree, ProofParseError> {
    let rule =
        Rule::parse(&file.rule).ok_or_else(|| ProofParseError::BadRule(file.rule.clone()))?;
    let parse_term = |text: &str| {
        theory
            .parse_term(text)
            .map_err(|msg| ProofParseError::Term { term: text.to_string(), msg })
    };
    let conclusion = Judgement {
        ctx: file
            .conclusion
            .ctx
            .iter()
            .map(|c| CtxEntry { x: c.x.clone(), y: c.y.clone(), eps: c.eps })
            .collect(),
        lhs: parse_term(&file.conclusion.lhs)?,
        rhs: parse_term(&file.conclusion.rhs)?,
        eps: file.conclusion.eps,
    };
    let premises = file
        .premises
        .iter()
        .map(|p| build_tree(p, theory))
        .collect::<Result<Vec<_>, _>>()?;
    let subst = match &file.subst {
        None => None,
        Some(m) => {
            let mut out = BTreeMap::new();
            for (k, v) in m {
                out.insert(k.clone(), parse_term(v)?);
            }
            Some(out)
        }
    };
    Ok(DerivationTree {
        rule,
        conclusion,
        premises,
        axiom: file.axiom.clone(),
        subst,
        subst_depth: file.subst_depth,
    })
}

// ---------------------------------------------------------------------------
// The checker
// ---------------------------------------------------------------------------

/// Validates every node of a derivation; returns the first invalid node
/// (premises are checked before their conclusion, so the deepest offending
/// node is reported).
pub fn check_derivation(theory: &GradedTheory, proof: &DerivationTree) -> Result<(), CheckError> {
    check_node(theory, proof, &mut Vec::new(), &proof.conclusion.ctx)
}

fn invalid(path: &[usize], reason: impl Into<String>) -> CheckError {
    CheckError::InvalidStep { path: path.to_vec(), reason: reason.into() }
}

fn check_node(
    theory: &GradedTheory,
    node: &DerivationTree,
    path: &mut Vec<usize>,
    root_ctx: &[CtxEntry],
) -> Result<(), CheckError> {
    if node.rule == Rule::Arch {
        return Err(CheckError::ArchUnsupported { path: path.clone() });
    }
    for (i, premise) in node.premises.iter().enumerate() {
        path.push(i);
        check_node(theory, premise, path, root_ctx)?;
        path.pop();
    }
    check_step(theory, node, path, root_ctx)
}

fn check_step(
    theory: &GradedTheory,
    node: &DerivationTree,
    path: &[usize],
    root_ctx: &[CtxEntry],
) -> Result<(), CheckError> {
    let c = &node.conclusion;
    if c.ctx != root_ctx {
        return Err(invalid(path, "conclusion context differs from the root context"));
    }
    if !(0.0..=1.0).contains(&c.eps) {
        return Err(invalid(path, format!("eps {} out of range [0,1]", c.eps)));
    }
    for t in [&c.lhs, &c.rhs] {
        theory.term_valid(t).map_err(|e| invalid(path, e.to_string()))?;
    }
    let (Some(li), Some(ri)) = (c.lhs.depth_info(), c.rhs.depth_info()) else {
        return Err(invalid(path, "a side of the conclusion has no uniform depth"));
    };
    if DepthInfo::unify(li, ri).is_none() {
        return Err(invalid(path, "conclusion sides do not share a uniform depth"));
    }

    let arity = |expected: usize| -> Result<(), CheckError> {
        if node.premises.len() != expected {
            Err(invalid(
                path,
                format!("rule expects {expected} premises, found {}", node.premises.len()),
            ))
        } else {
            Ok(())
        }
    };

    match node.rule {
        Rule::Refl => {
            arity(0)?;
            if c.eps != 0.0 {
                return Err(invalid(path, format!("refl requires eps = 0, found {}", c.eps)));
            }
            if c.lhs != c.rhs {
                return Err(invalid(path, "refl requires syntactically identical sides"));
            }
            Ok(())
        }
        Rule::Sym => {
            arity(1)?;
            let p = &node.premises[0].conclusion;
            if p.lhs != c.rhs || p.rhs != c.lhs {
                return Err(invalid(path, "sym premise must have swapped sides"));
            }
            if p.eps != c.eps {
                return Err(invalid(path, "sym must preserve eps"));
            }
            Ok(())
        }
        Rule::Triang => {
            arity(2)?;
            let p1 = &node.premises[0].conclusion;
            let p2 = &node.premises[1].conclusion;
            if p1.lhs != c.lhs || p2.rhs != c.rhs {
                return Err(invalid(path, "triang endpoints must match the premises"));
            }
            if p1.rhs != p2.lhs {
                return Err(invalid(path, "triang premises must share the middle term"));
            }
            let expected = (p1.eps + p2.eps).min(1.0);
            if (c.eps - expected).abs() > TOL {
                return Err(invalid(
                    path,
                    format!("triang requires eps = {} (sum of premises), found {}", expected, c.eps),
                ));
            }
            Ok(())
        }
        Rule::Wk => {
            arity(1)?;
            let p = &node.premises[0].conclusion;
            if p.lhs != c.lhs || p.rhs != c.rhs {
                return Err(invalid(path, "wk must preserve both sides"));
            }
            if c.eps < p.eps - 1e-12 {
                return Err(invalid(
                    path,
                    format!("wk requires eps ≥ {} (premise), found {}", p.eps, c.eps),
                ));
            }
            Ok(())
        }
        Rule::Assn => {
            arity(0)?;
            let (Term::Var(x), Term::Var(y)) = (&c.lhs, &c.rhs) else {
                return Err(invalid(path, "assn applies to variables only"));
            };
            let hit = root_ctx
                .iter()
                .any(|e| e.x == *x && e.y == *y && (e.eps - c.eps).abs() <= 1e-12);
            if !hit {
                return Err(invalid(path, format!("{x} ={} {y} is not in the context", c.eps)));
            }
            Ok(())
        }
        Rule::Nexp => {
            let heads = match (&c.lhs, &c.rhs) {
                (Term::Plus(a1, b1), Term::Plus(a2, b2)) => {
                    Some(vec![(&**a1, &**a2), (&**b1, &**b2)])
                }
                (Term::Scale(r1, t1), Term::Scale(r2, t2)) if r1 == r2 => {
                    Some(vec![(&**t1, &**t2)])
                }
                (Term::Bary(r1, a1, b1), Term::Bary(r2, a2, b2)) if r1 == r2 => {
                    Some(vec![(&**a1, &**a2), (&**b1, &**b2)])
                }
                (Term::Act(l1, t1), Term::Act(l2, t2)) if l1 == l2 => Some(vec![(&**t1, &**t2)]),
                _ => None,
            };
            let Some(pairs) = heads else {
                return Err(invalid(path, "nexp requires the same operation on both sides"));
            };
            arity(pairs.len())?;
            for (i, ((la, ra), premise)) in pairs.iter().zip(&node.premises).enumerate() {
                let p = &premise.conclusion;
                if p.lhs != **la || p.rhs != **ra {
                    return Err(invalid(path, format!("nexp premise {i} does not match argument {i}")));
                }
                if p.eps != c.eps {
                    return Err(invalid(path, "nexp premises must share the conclusion eps"));
                }
            }
            Ok(())
        }
        Rule::Ax => check_axiom(theory, node, path),
        Rule::Arch => unreachable!("handled in check_node"),
    }
}

fn check_axiom(
    theory: &GradedTheory,
    node: &DerivationTree,
    path: &[usize],
) -> Result<(), CheckError> {
    let c = &node.conclusion;
    let Some(axiom) = node.axiom.as_deref() else {
        return Err(invalid(path, "ax requires an axiom id"));
    };
    if !theory.axiom_ids().contains(&axiom) {
        return Err(invalid(path, format!("axiom `{axiom}` is not part of {}", theory.tag())));
    }
    let Some(subst) = node.subst.as_ref() else {
        return Err(invalid(path, "ax requires a substitution"));
    };
    let Some(subst_depth) = node.subst_depth else {
        return Err(invalid(path, "ax requires the substitution's uniform depth"));
    };
    for (v, t) in subst {
        theory.term_valid(t).map_err(|e| invalid(path, e.to_string()))?;
        match t.depth_info() {
            Some(di) if di.admits(subst_depth) => {}
            _ => {
                return Err(invalid(
                    path,
                    format!("substituted term for `{v}` does not have uniform depth {subst_depth}"),
                ))
            }
        }
    }
    let get = |v: &str| -> Result<Term, CheckError> {
        subst
            .get(v)
            .cloned()
            .ok_or_else(|| invalid(path, format!("substitution misses variable `{v}`")))
    };
    let strict = |ok: bool, reason: &str| -> Result<(), CheckError> {
        if ok {
            Ok(())
        } else {
            Err(invalid(path, reason))
        }
    };
    let expect_eq = |lhs: Term, rhs: Term| -> Result<(), CheckError> {
        strict(c.lhs == lhs, &format!("conclusion lhs must be {lhs}"))?;
        strict(c.rhs == rhs, &format!("conclusion rhs must be {rhs}"))
    };
    let expect_strict_eps = || -> Result<(), CheckError> {
        strict(c.eps == 0.0, "equational axioms conclude with eps = 0")
    };

    // Distance axioms take one premise; everything else none.
    match axiom {
        "label_dist" => {
            if node.premises.len() != 1 {
                return Err(invalid(path, "label_dist takes exactly one premise"));
            }
            let p = &node.premises[0].conclusion;
            let (Term::Act(a, s), Term::Act(b, t)) = (&c.lhs, &c.rhs) else {
                return Err(invalid(path, "label_dist concludes a(x) =_δ b(y)"));
            };
            let (ai, bi) = (
                theory.labels.index_of(a).ok_or_else(|| invalid(path, "unknown label"))?,
                theory.labels.index_of(b).ok_or_else(|| invalid(path, "unknown label"))?,
            );
            strict(p.lhs == **s && p.rhs == **t, "label_dist premise must relate the arguments")?;
            strict(
                get("x")? == **s && get("y")? == **t,
                "substitution must send x,y to the arguments",
            )?;
            let expected = theory.tensor.combine(theory.labels.space().dist(ai, bi), p.eps);
            strict(
                (c.eps - expected).abs() <= TOL,
                &format!("label_dist requires eps = k(d({a},{b}), {}) = {expected}", p.eps),
            )
        }
        "scale_dist" => {
            if node.premises.len() != 1 {
                return Err(invalid(path, "scale_dist takes exactly one premise"));
            }
            let p = &node.premises[0].conclusion;
            let (Term::Scale(r, s), Term::Scale(sc, t)) = (&c.lhs, &c.rhs) else {
                return Err(invalid(path, "scale_dist concludes sc(r,x) =_ε sc(s,y)"));
            };
            strict(p.lhs == **s && p.rhs == **t, "scale_dist premise must relate the arguments")?;
            strict(
                get("x")? == **s && get("y")? == **t,
                "substitution must send x,y to the arguments",
            )?;
            strict((c.eps - p.eps).abs() <= 1e-12, "scale_dist preserves the premise eps")?;
            strict(
                (r.get() - sc.get()).abs() <= c.eps + TOL,
                &format!("side condition |{r} - {sc}| ≤ {} fails", c.eps),
            )
        }
        _ => {
            if !node.premises.is_empty() {
                return Err(invalid(path, "equational axioms take no premises"));
            }
            expect_strict_eps()?;
            match axiom {
                "plus_unit" => {
                    let x = get("x")?;
                    expect_eq(Term::plus(x.clone(), Term::Zero), x)
                }
                "plus_idem" => {
                    let x = get("x")?;
                    expect_eq(Term::plus(x.clone(), x.clone()), x)
                }
                "plus_comm" => {
                    let (x, y) = (get("x")?, get("y")?);
                    expect_eq(Term::plus(x.clone(), y.clone()), Term::plus(y, x))
                }
                "plus_assoc" => {
                    let (x, y, z) = (get("x")?, get("y")?, get("z")?);
                    expect_eq(
                        Term::plus(Term::plus(x.clone(), y.clone()), z.clone()),
                        Term::plus(x, Term::plus(y, z)),
                    )
                }
                "scale_one" => {
                    let x = get("x")?;
                    expect_eq(Term::scale(1.0, x.clone()), x)
                }
                "scale_meet" => {
                    // r(s(x)) =₀ (r ∧ s)(x); parameters come from the
                    // conclusion.
                    let x = get("x")?;
                    let Term::Scale(r, inner) = &c.lhs else {
                        return Err(invalid(path, "scale_meet lhs must be sc(r, sc(s, x))"));
                    };
                    let Term::Scale(s, arg) = &**inner else {
                        return Err(invalid(path, "scale_meet lhs must be sc(r, sc(s, x))"));
                    };
                    strict(**arg == x, "scale_meet argument must match the substitution")?;
                    expect_eq(c.lhs.clone(), Term::scale(r.get().min(s.get()), x))
                }
                "scale_zero_op" => {
                    let x = get("x")?;
                    expect_eq(Term::scale(0.0, x), Term::Zero)
                }
                "scale_bottom" => {
                    let Term::Scale(r, _) = &c.lhs else {
                        return Err(invalid(path, "scale_bottom lhs must be sc(r, 0)"));
                    };
                    expect_eq(Term::Scale(*r, Box::new(Term::Zero)), Term::Zero)
                }
                "scale_join" => {
                    let (x, y) = (get("x")?, get("y")?);
                    let Term::Scale(r, _) = &c.lhs else {
                        return Err(invalid(path, "scale_join lhs must be sc(r, plus(x,y))"));
                    };
                    let r = *r;
                    expect_eq(
                        Term::Scale(r, Box::new(Term::plus(x.clone(), y.clone()))),
                        Term::plus(
                            Term::Scale(r, Box::new(x)),
                            Term::Scale(r, Box::new(y)),
                        ),
                    )
                }
                "bary_one" => {
                    let (x, y) = (get("x")?, get("y")?);
                    expect_eq(Term::bary(1.0, x.clone(), y), x)
                }
                "bary_idem" => {
                    let x = get("x")?;
                    let Term::Bary(r, ..) = &c.lhs else {
                        return Err(invalid(path, "bary_idem lhs must be p(r, x, x)"));
                    };
                    expect_eq(Term::Bary(*r, Box::new(x.clone()), Box::new(x.clone())), x)
                }
                "bary_skew" => {
                    let (x, y) = (get("x")?, get("y")?);
                    let Term::Bary(r, ..) = &c.lhs else {
                        return Err(invalid(path, "bary_skew lhs must be p(r, x, y)"));
                    };
                    let Term::Bary(r2, ..) = &c.rhs else {
                        return Err(invalid(path, "bary_skew rhs must be p(1-r, y, x)"));
                    };
                    strict(
                        (r2.get() - (1.0 - r.get())).abs() <= TOL,
                        "bary_skew requires the complementary weight",
                    )?;
                    expect_eq(
                        Term::Bary(*r, Box::new(x.clone()), Box::new(y.clone())),
                        Term::Bary(*r2, Box::new(y), Box::new(x)),
                    )
                }
                "bary_assoc" => {
                    // (x +_p y) +_q z =₀ x +_{pq} (y +_r z) with
                    // r(1-pq) = q(1-p).
                    let (x, y, z) = (get("x")?, get("y")?, get("z")?);
                    let Term::Bary(q, inner, _) = &c.lhs else {
                        return Err(invalid(path, "bary_assoc lhs must be p(q, p(p,x,y), z)"));
                    };
                    let Term::Bary(pw, ..) = &**inner else {
                        return Err(invalid(path, "bary_assoc lhs must be p(q, p(p,x,y), z)"));
                    };
                    let (pw, q) = (pw.get(), q.get());
                    if pw * q > 1.0 - 1e-12 {
                        return Err(invalid(path, "bary_assoc requires pq < 1"));
                    }
                    let Term::Bary(outer, _, tail) = &c.rhs else {
                        return Err(invalid(path, "bary_assoc rhs must be p(pq, x, p(r,y,z))"));
                    };
                    let Term::Bary(r, ..) = &**tail else {
                        return Err(invalid(path, "bary_assoc rhs must be p(pq, x, p(r,y,z))"));
                    };
                    strict(
                        (outer.get() - pw * q).abs() <= TOL,
                        "bary_assoc rhs outer weight must be pq",
                    )?;
                    strict(
                        (r.get() * (1.0 - pw * q) - q * (1.0 - pw)).abs() <= TOL,
                        "bary_assoc inner weight fails r(1-pq) = q(1-p)",
                    )?;
                    expect_eq(
                        Term::Bary(
                            OrdF64(q),
                            Box::new(Term::Bary(OrdF64(pw), Box::new(x.clone()), Box::new(y.clone()))),
                            Box::new(z.clone()),
                        ),
                        Term::Bary(
                            *outer,
                            Box::new(x),
                            Box::new(Term::Bary(*r, Box::new(y), Box::new(z))),
                        ),
                    )
                }
                "act_zero" | "act_plus" | "act_scale" | "act_bary" => {
                    let Term::Act(label, _) = &c.lhs else {
                        return Err(invalid(path, "distributivity lhs must start with a label"));
                    };
                    let label = label.clone();
                    strict(
                        theory.labels.index_of(&label).is_some(),
                        &format!("unknown label `{label}`"),
                    )?;
                    match axiom {
                        "act_zero" => expect_eq(Term::act(label, Term::Zero), Term::Zero),
                        "act_plus" => {
                            let (x, y) = (get("x")?, get("y")?);
                            expect_eq(
                                Term::act(label.clone(), Term::plus(x.clone(), y.clone())),
                                Term::plus(Term::act(label.clone(), x), Term::act(label, y)),
                            )
                        }
                        "act_scale" => {
                            let x = get("x")?;
                            let Term::Act(_, inner) = &c.lhs else { unreachable!() };
                            let Term::Scale(r, _) = &**inner else {
                                return Err(invalid(path, "act_scale lhs must be a(sc(r,x))"));
                            };
                            let r = *r;
                            expect_eq(
                                Term::act(label.clone(), Term::Scale(r, Box::new(x.clone()))),
                                Term::Scale(r, Box::new(Term::act(label, x))),
                            )
                        }
                        "act_bary" => {
                            let (x, y) = (get("x")?, get("y")?);
                            let Term::Act(_, inner) = &c.lhs else { unreachable!() };
                            let Term::Bary(r, ..) = &**inner else {
                                return Err(invalid(path, "act_bary lhs must be a(p(r,x,y))"));
                            };
                            let r = *r;
                            expect_eq(
                                Term::act(
                                    label.clone(),
                                    Term::Bary(r, Box::new(x.clone()), Box::new(y.clone())),
                                ),
                                Term::Bary(
                                    r,
                                    Box::new(Term::act(label.clone(), x)),
                                    Box::new(Term::act(label, y)),
                                ),
                            )
                        }
                        _ => unreachable!(),
                    }
                }
                other => Err(invalid(path, format!("axiom `{other}` has no checker"))),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Free-model interpretation
// ---------------------------------------------------------------------------

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("term `{0}` does not admit the requested uniform depth")]
    DepthMismatch(String),
    #[error("terms `{0}` and `{1}` have no common uniform depth")]
    NoCommonDepth(String, String),
    #[error("variable `{0}` is not a point of the carrier")]
    UnknownVar(String),
    #[error("operation `{0}` is not part of this theory")]
    WrongBase(String),
    #[error("label `{0}` not declared")]
    UnknownLabel(String),
    #[error("scalar {0} out of range [0,1]")]
    BadScalar(f64),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// A value of the free model: a lifted value over `(word, carrier point)`
/// atoms.
#[derive(Debug, Clone, PartialEq)]
pub enum FreeValue {
    Set(FinSet<(Word, usize)>),
    Fuzzy(FuzzySet<(Word, usize)>),
    Dist(FinDist<(Word, usize)>),
}

impl GradedTheory {
    fn interpret_over(
        &self,
        term: &Term,
        vars: &BTreeMap<String, usize>,
    ) -> Result<FreeValue, ModelError> {
        match term {
            Term::Var(v) => {
                let idx = *vars.get(v).ok_or_else(|| ModelError::UnknownVar(v.clone()))?;
                Ok(match self.base {
                    BaseTheory::Powerset => FreeValue::Set(FinSet::unit((Vec::new(), idx))),
                    BaseTheory::Fuzzy => FreeValue::Fuzzy(FuzzySet::unit((Vec::new(), idx))),
                    BaseTheory::Dist => FreeValue::Dist(FinDist::dirac((Vec::new(), idx))),
                })
            }
            Term::Zero => match self.base {
                BaseTheory::Powerset => Ok(FreeValue::Set(FinSet::empty())),
                BaseTheory::Fuzzy => Ok(FreeValue::Fuzzy(FuzzySet::empty())),
                BaseTheory::Dist => Err(ModelError::WrongBase("0".into())),
            },
            Term::Plus(a, b) => {
                let (va, vb) = (self.interpret_over(a, vars)?, self.interpret_over(b, vars)?);
                match (va, vb) {
                    (FreeValue::Set(a), FreeValue::Set(b)) => {
                        Ok(FreeValue::Set(FinSet::new(a.iter().chain(b.iter()).cloned())))
                    }
                    (FreeValue::Fuzzy(a), FreeValue::Fuzzy(b)) => Ok(FreeValue::Fuzzy(
                        FuzzySet::new(a.iter().chain(b.iter()).map(|(e, w)| (e.clone(), w)))
                            .expect("memberships stay in (0,1]"),
                    )),
                    _ => Err(ModelError::WrongBase("plus".into())),
                }
            }
            Term::Scale(r, t) => {
                let r = r.get();
                if !(0.0..=1.0).contains(&r) {
                    return Err(ModelError::BadScalar(r));
                }
                match self.interpret_over(t, vars)? {
                    FreeValue::Fuzzy(v) => Ok(FreeValue::Fuzzy(
                        FuzzySet::new(v.iter().map(|(e, w)| (e.clone(), r.min(w))))
                            .expect("meets stay in [0,1]"),
                    )),
                    _ => Err(ModelError::WrongBase("sc".into())),
                }
            }
            Term::Bary(r, a, b) => {
                let r = r.get();
                if !(0.0..=1.0).contains(&r) {
                    return Err(ModelError::BadScalar(r));
                }
                let (va, vb) = (self.interpret_over(a, vars)?, self.interpret_over(b, vars)?);
                match (va, vb) {
                    (FreeValue::Dist(a), FreeValue::Dist(b)) => {
                        let pairs = a
                            .iter()
                            .map(|(e, w)| (e.clone(), r * w))
                            .chain(b.iter().map(|(e, w)| (e.clone(), (1.0 - r) * w)));
                        Ok(FreeValue::Dist(
                            FinDist::new(pairs).expect("convex combinations preserve mass"),
                        ))
                    }
                    _ => Err(ModelError::WrongBase("p".into())),
                }
            }
            Term::Act(l, t) => {
                let a = self
                    .labels
                    .index_of(l)
                    .ok_or_else(|| ModelError::UnknownLabel(l.clone()))?;
                let prepend = |(w, x): &(Word, usize)| {
                    let mut word = Vec::with_capacity(w.len() + 1);
                    word.push(a);
                    word.extend_from_slice(w);
                    (word, *x)
                };
                Ok(match self.interpret_over(t, vars)? {
                    FreeValue::Set(v) => FreeValue::Set(v.map(prepend)),
                    FreeValue::Fuzzy(v) => FreeValue::Fuzzy(v.map(prepend)),
                    FreeValue::Dist(v) => FreeValue::Dist(v.map(prepend)),
                })
            }
        }
    }

    /// Interprets a term of uniform depth `n` in the free model over the
    /// carrier `x`: depth-0 operations act via the base algebra, label
    /// operations prepend the label to every word.
    pub fn free_model_interpret(
        &self,
        term: &Term,
        n: usize,
        x: &FinMetric,
    ) -> Result<FreeValue, ModelError> {
        self.term_valid(term)?;
        match term.depth_info() {
            Some(di) if di.admits(n) => {}
            _ => return Err(ModelError::DepthMismatch(term.to_string())),
        }
        let vars: BTreeMap<String, usize> =
            x.points().iter().enumerate().map(|(i, p)| (p.clone(), i)).collect();
        self.interpret_over(term, &vars)
    }

    /// Ground distance on `(word, carrier point)` atoms: the word part is
    /// folded with this theory's tensor, the carrier distance enters as the
    /// innermost tail.
    fn atom_cost<'a>(
        &'a self,
        x: &'a FinMetric,
    ) -> impl Fn(&(Word, usize), &(Word, usize)) -> f64 + 'a {
        let base = self.base;
        move |p: &(Word, usize), q: &(Word, usize)| {
            let tail = x.dist(p.1, q.1);
            match base {
                BaseTheory::Fuzzy => {
                    if p.0 == q.0 {
                        tail
                    } else {
                        1.0
                    }
                }
                _ => word_distance_with_tail(&self.labels, self.tensor, &p.0, &q.0, tail),
            }
        }
    }

    /// Lifted distance between the free-model interpretations of two terms
    /// of a common uniform depth, with variables drawn from `x`.
    pub fn free_model_distance(
        &self,
        s: &Term,
        t: &Term,
        x: &FinMetric,
    ) -> Result<f64, ModelError> {
        let (Some(si), Some(ti)) = (s.depth_info(), t.depth_info()) else {
            return Err(ModelError::NoCommonDepth(s.to_string(), t.to_string()));
        };
        let common = DepthInfo::unify(si, ti)
            .ok_or_else(|| ModelError::NoCommonDepth(s.to_string(), t.to_string()))?;
        let n = common.least();
        let (vs, vt) = (self.free_model_interpret(s, n, x)?, self.free_model_interpret(t, n, x)?);
        let cost = self.atom_cost(x);
        match (vs, vt) {
            (FreeValue::Set(a), FreeValue::Set(b)) => Ok(hausdorff_by(&a, &b, cost)),
            (FreeValue::Fuzzy(a), FreeValue::Fuzzy(b)) => Ok(fuzzy_hausdorff_by(&a, &b, cost)),
            (FreeValue::Dist(a), FreeValue::Dist(b)) => {
                let (v, _) = kantorovich_by(&a, &b, cost)?;
                Ok(v)
            }
            _ => unreachable!("one theory produces one value shape"),
        }
    }
}

// ---------------------------------------------------------------------------
// Layered terms
// ---------------------------------------------------------------------------

/// A depth-1 term over named slots, each assigned a depth-`n` term: an
/// element of the "terms over terms" presentation of grade composition.
#[derive(Debug, Clone, PartialEq)]
pub struct LayeredTerm {
    pub upper: Term,
    pub assignment: BTreeMap<String, Term>,
}

impl GradedTheory {
    /// Substitutes the assignment into the upper layer.
    pub fn collapse_layered(&self, lt: &LayeredTerm) -> Term {
        lt.upper.substitute(&lt.assignment)
    }

    /// Interprets the layers separately (slots become opaque atoms), then
    /// flattens: outer words are prepended to inner words and weights
    /// combine through the base monad (union / meet-join / product-sum).
    pub fn interpret_layered(
        &self,
        lt: &LayeredTerm,
        inner_depth: usize,
        x: &FinMetric,
    ) -> Result<FreeValue, ModelError> {
        let mut slots: Vec<(String, FreeValue)> = Vec::new();
        for (name, term) in &lt.assignment {
            slots.push((name.clone(), self.free_model_interpret(term, inner_depth, x)?));
        }
        let vars: BTreeMap<String, usize> =
            slots.iter().enumerate().map(|(i, (n, _))| (n.clone(), i)).collect();
        self.term_valid(&lt.upper)?;
        match lt.upper.depth_info() {
            Some(di) if di.admits(1) => {}
            _ => return Err(ModelError::DepthMismatch(lt.upper.to_string())),
        }
        let outer = self.interpret_over(&lt.upper, &vars)?;

        let glue = |w_out: &Word, w_in: &Word, x_in: usize| -> (Word, usize) {
            let mut word = Vec::with_capacity(w_out.len() + w_in.len());
            word.extend_from_slice(w_out);
            word.extend_from_slice(w_in);
            (word, x_in)
        };
        match outer {
            FreeValue::Set(o) => {
                let mut atoms = Vec::new();
                for (w_out, slot) in o.iter() {
                    let FreeValue::Set(inner) = &slots[*slot].1 else { unreachable!() };
                    for (w_in, x_in) in inner.iter() {
                        atoms.push(glue(w_out, w_in, *x_in));
                    }
                }
                Ok(FreeValue::Set(FinSet::new(atoms)))
            }
            FreeValue::Fuzzy(o) => {
                let mut atoms = Vec::new();
                for ((w_out, slot), m_out) in o.iter() {
                    let FreeValue::Fuzzy(inner) = &slots[*slot].1 else { unreachable!() };
                    for ((w_in, x_in), m_in) in inner.iter() {
                        atoms.push((glue(w_out, w_in, *x_in), m_out.min(m_in)));
                    }
                }
                Ok(FreeValue::Fuzzy(FuzzySet::new(atoms).expect("meets stay in (0,1]")))
            }
            FreeValue::Dist(o) => {
                let mut atoms = Vec::new();
                for ((w_out, slot), p_out) in o.iter() {
                    let FreeValue::Dist(inner) = &slots[*slot].1 else { unreachable!() };
                    for ((w_in, x_in), p_in) in inner.iter() {
                        atoms.push((glue(w_out, w_in, *x_in), p_out * p_in));
                    }
                }
                Ok(FreeValue::Dist(FinDist::new(atoms).expect("flattening preserves mass")))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::MetricKind;

    fn labels(v: f64) -> LabelSpace {
        let m = FinMetric::validate(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, v], vec![v, 0.0]],
            MetricKind::Metric,
        )
        .unwrap();
        LabelSpace::new(m).unwrap()
    }

    fn metric_theory(v: f64) -> GradedTheory {
        GradedTheory::metric_trace(labels(v)).unwrap()
    }

    #[test]
    fn depth_analysis() {
        let th = metric_theory(0.5);
        let t = th.parse_term("a(plus(x,y))").unwrap();
        assert_eq!(t.uniform_depth(), Some(1));
        let t = th.parse_term("plus(a(x), y)").unwrap();
        assert_eq!(t.uniform_depth(), None);
        let t = th.parse_term("x").unwrap();
        assert_eq!(t.uniform_depth(), Some(0));
        // constants admit every depth at or above their own
        let t = th.parse_term("plus(a(x), 0)").unwrap();
        assert_eq!(t.uniform_depth(), Some(1));
        let zero = th.parse_term("0").unwrap();
        assert!(zero.depth_info().unwrap().admits(3));
    }

    #[test]
    fn theory_construction() {
        assert!(matches!(
            build_trace_theory(BaseTheory::Fuzzy, labels(0.5), TensorKind::sup()),
            Err(TheoryError::DiscreteRequired)
        ));
        let disc = LabelSpace::discrete(vec!["a".into(), "b".into()]).unwrap();
        assert!(build_trace_theory(BaseTheory::Fuzzy, disc, TensorKind::sup()).is_ok());
        let bad = LabelSpace::discrete(vec!["plus".into()]).unwrap();
        assert!(matches!(
            build_trace_theory(BaseTheory::Powerset, bad, TensorKind::sup()),
            Err(TheoryError::ReservedLabel(_))
        ));
    }

    fn refl(theory: &GradedTheory, term: &str) -> DerivationTree {
        let t = theory.parse_term(term).unwrap();
        DerivationTree {
            rule: Rule::Refl,
            conclusion: Judgement { ctx: vec![], lhs: t.clone(), rhs: t, eps: 0.0 },
            premises: vec![],
            axiom: None,
            subst: None,
            subst_depth: None,
        }
    }

    #[test]
    fn checker_refl_and_triang() {
        let th = metric_theory(0.5);
        assert!(check_derivation(&th, &refl(&th, "plus(a(x),b(y))")).is_ok());

        // triang chaining 0.2 and 0.1 into 0.3
        let ctx = vec![
            CtxEntry { x: "s".into(), y: "w".into(), eps: 0.2 },
            CtxEntry { x: "w".into(), y: "t".into(), eps: 0.1 },
        ];
        let assn = |x: &str, y: &str, eps: f64| DerivationTree {
            rule: Rule::Assn,
            conclusion: Judgement {
                ctx: ctx.clone(),
                lhs: Term::var(x),
                rhs: Term::var(y),
                eps,
            },
            premises: vec![],
            axiom: None,
            subst: None,
            subst_depth: None,
        };
        let good = DerivationTree {
            rule: Rule::Triang,
            conclusion: Judgement {
                ctx: ctx.clone(),
                lhs: Term::var("s"),
                rhs: Term::var("t"),
                eps: 0.2 + 0.1,
            },
            premises: vec![assn("s", "w", 0.2), assn("w", "t", 0.1)],
            axiom: None,
            subst: None,
            subst_depth: None,
        };
        assert!(check_derivation(&th, &good).is_ok());

        let mut bad = good.clone();
        bad.conclusion.eps = 0.25;
        let err = check_derivation(&th, &bad).unwrap_err();
        assert!(matches!(err, CheckError::InvalidStep { ref path, .. } if path.is_empty()));
    }

    #[test]
    fn checker_prob_distance_axiom() {
        let th = GradedTheory::prob(labels(0.3)).unwrap();
        let ctx = vec![CtxEntry { x: "x".into(), y: "y".into(), eps: 0.2 }];
        let premise = DerivationTree {
            rule: Rule::Assn,
            conclusion: Judgement {
                ctx: ctx.clone(),
                lhs: Term::var("x"),
                rhs: Term::var("y"),
                eps: 0.2,
            },
            premises: vec![],
            axiom: None,
            subst: None,
            subst_depth: None,
        };
        let node = DerivationTree {
            rule: Rule::Ax,
            conclusion: Judgement {
                ctx: ctx.clone(),
                lhs: Term::act("a", Term::var("x")),
                rhs: Term::act("b", Term::var("y")),
                eps: 0.5,
            },
            premises: vec![premise],
            axiom: Some("label_dist".into()),
            subst: Some(BTreeMap::from([
                ("x".to_string(), Term::var("x")),
                ("y".to_string(), Term::var("y")),
            ])),
            subst_depth: Some(0),
        };
        assert!(check_derivation(&th, &node).is_ok());

        let mut wrong = node.clone();
        wrong.conclusion.eps = 0.4;
        assert!(check_derivation(&th, &wrong).is_err());
    }

    #[test]
    fn proof_parsing_errors() {
        let th = metric_theory(0.5);
        let bad_rule = r#"{"rule": "arch2", "conclusion": {"lhs": "x", "rhs": "x", "eps": 0.0}}"#;
        assert!(matches!(parse_proof(bad_rule, &th), Err(ProofParseError::BadRule(_))));
        let bad_term =
            r#"{"rule": "refl", "conclusion": {"lhs": "q(0.5, x)", "rhs": "x", "eps": 0.0}}"#;
        assert!(matches!(parse_proof(bad_term, &th), Err(ProofParseError::Term { .. })));
        let not_json = "{";
        assert!(matches!(parse_proof(not_json, &th), Err(ProofParseError::Json(_))));

        let ok = r#"{"rule": "refl",
                     "conclusion": {"lhs": "plus(a(x),0)", "rhs": "plus(a(x),0)", "eps": 0.0}}"#;
        let tree = parse_proof(ok, &th).unwrap();
        assert!(check_derivation(&th, &tree).is_ok());
    }

    #[test]
    fn checker_rejects_arch() {
        let th = metric_theory(0.5);
        let mut node = refl(&th, "x");
        node.rule = Rule::Arch;
        assert!(matches!(
            check_derivation(&th, &node),
            Err(CheckError::ArchUnsupported { .. })
        ));
    }

    #[test]
    fn distributivity_axiom_checks() {
        let th = metric_theory(0.5);
        let node = DerivationTree {
            rule: Rule::Ax,
            conclusion: Judgement {
                ctx: vec![],
                lhs: th.parse_term("a(plus(x,y))").unwrap(),
                rhs: th.parse_term("plus(a(x),a(y))").unwrap(),
                eps: 0.0,
            },
            premises: vec![],
            axiom: Some("act_plus".into()),
            subst: Some(BTreeMap::from([
                ("x".to_string(), Term::var("x")),
                ("y".to_string(), Term::var("y")),
            ])),
            subst_depth: Some(0),
        };
        assert!(check_derivation(&th, &node).is_ok());
    }

    #[test]
    fn free_model_examples() {
        let th = metric_theory(0.4);
        let x = FinMetric::singleton("x");
        // variable at depth 0 is the unit
        let v = th.free_model_interpret(&Term::var("x"), 0, &x).unwrap();
        let FreeValue::Set(s) = v else { panic!() };
        assert_eq!(s.len(), 1);
        // a(x)+b(x) at depth 1 is {(a,x),(b,x)}
        let t = th.parse_term("plus(a(x),b(x))").unwrap();
        let FreeValue::Set(s) = th.free_model_interpret(&t, 1, &x).unwrap() else { panic!() };
        assert_eq!(s.len(), 2);
        // Hausdorff distance to {a(x)} is d(a,b)
        let d = th
            .free_model_distance(&t, &th.parse_term("a(x)").unwrap(), &x)
            .unwrap();
        assert!((d - 0.4).abs() < 1e-12);
        // same term → 0
        let d = th.free_model_distance(&t, &t, &x).unwrap();
        assert_eq!(d, 0.0);
    }

    #[test]
    fn free_model_prob_and_fuzzy() {
        let x = FinMetric::singleton("x");
        let prob = GradedTheory::prob(labels(0.3)).unwrap();
        let t = prob.parse_term("p(0.5, a(x), b(x))").unwrap();
        let FreeValue::Dist(d) = prob.free_model_interpret(&t, 1, &x).unwrap() else { panic!() };
        assert_eq!(d.weight(&(vec![0], 0)), 0.5);
        assert_eq!(d.weight(&(vec![1], 0)), 0.5);

        let disc = LabelSpace::discrete(vec!["a".into(), "b".into()]).unwrap();
        let fuzzy = GradedTheory::fuzzy(disc).unwrap();
        let r = fuzzy.parse_term("sc(0.7, x)").unwrap();
        let s = fuzzy.parse_term("sc(0.5, x)").unwrap();
        let d = fuzzy.free_model_distance(&r, &s, &x).unwrap();
        assert!((d - 0.2).abs() < 1e-12);
    }

    #[test]
    fn layered_coherence_small() {
        let th = metric_theory(0.4);
        let x = FinMetric::singleton("x");
        let lt = LayeredTerm {
            upper: th.parse_term("plus(a(u), b(v))").unwrap(),
            assignment: BTreeMap::from([
                ("u".to_string(), th.parse_term("plus(a(x), b(x))").unwrap()),
                ("v".to_string(), th.parse_term("a(x)").unwrap()),
            ]),
        };
        let collapsed = th.collapse_layered(&lt);
        let direct = th.free_model_interpret(&collapsed, 2, &x).unwrap();
        let flattened = th.interpret_layered(&lt, 1, &x).unwrap();
        assert_eq!(direct, flattened);
    }
}
