//! Level functions: max/min/product/power expressions over monomials, their
//! construction from the λ-elimination stages, semantic comparison in log
//! space, and the strictness test for actions.

use crate::deformation::{derive_monomials, is_fixed_point, rank_with_leads, DeformationData, DeformationError, PointPattern, RankData};
use crate::linalg;
use crate::lp::open_cone_nonempty;
use crate::monomial::{fraction_closure, GenPair, GenSet, Monomial, VarId};
use crate::rat::{fmt_q, parse_q, to_f64, Q};
use crate::semigroup::{apply_lj_lambda, psi_value};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LevelExpr {
    Mono(Monomial),
    Max(Vec<LevelExpr>),
    Min(Vec<LevelExpr>),
    Prod(Vec<LevelExpr>),
    Pow(Box<LevelExpr>, Q),
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LevelError {
    #[error("the base point is a fixed point of the action; level functions need a point outside fixed points")]
    FixedPoint,
    #[error("sol needs a negative λ_{0} exponent")]
    NonNegativeExponent(usize),
    #[error("{count} admissible orderings exceed the cap of {cap}")]
    TooManyPermutations { count: usize, cap: usize },
    #[error(transparent)]
    Deformation(#[from] DeformationError),
    #[error("parse error: {0}")]
    Parse(String),
}

impl LevelExpr {
    pub fn one() -> LevelExpr {
        LevelExpr::Mono(Monomial::one())
    }

    pub fn mono(m: Monomial) -> LevelExpr {
        LevelExpr::Mono(m)
    }

    pub fn max(items: Vec<LevelExpr>) -> LevelExpr {
        Self::lattice(items, true)
    }

    pub fn min(items: Vec<LevelExpr>) -> LevelExpr {
        Self::lattice(items, false)
    }

    fn lattice(items: Vec<LevelExpr>, is_max: bool) -> LevelExpr {
        let mut flat = BTreeSet::new();
        for it in items {
            match it {
                LevelExpr::Max(xs) if is_max => flat.extend(xs),
                LevelExpr::Min(xs) if !is_max => flat.extend(xs),
                x => {
                    flat.insert(x);
                }
            }
        }
        let mut v: Vec<LevelExpr> = flat.into_iter().collect();
        assert!(!v.is_empty(), "empty max/min");
        if v.len() == 1 {
            return v.pop().unwrap();
        }
        if is_max {
            LevelExpr::Max(v)
        } else {
            LevelExpr::Min(v)
        }
    }

    pub fn prod(items: Vec<LevelExpr>) -> LevelExpr {
        let mut mono = Monomial::one();
        let mut rest = Vec::new();
        for it in items {
            match it {
                LevelExpr::Mono(m) => mono = mono.mul(&m),
                LevelExpr::Prod(xs) => {
                    for x in xs {
                        match x {
                            LevelExpr::Mono(m) => mono = mono.mul(&m),
                            x => rest.push(x),
                        }
                    }
                }
                x => rest.push(x),
            }
        }
        if rest.is_empty() {
            return LevelExpr::Mono(mono);
        }
        rest.sort();
        if !mono.is_one() {
            rest.insert(0, LevelExpr::Mono(mono));
        }
        if rest.len() == 1 {
            return rest.pop().unwrap();
        }
        LevelExpr::Prod(rest)
    }

    pub fn pow(self, r: &Q) -> LevelExpr {
        if r.is_zero() {
            return LevelExpr::one();
        }
        if r.is_one() {
            return self;
        }
        match self {
            LevelExpr::Mono(m) => LevelExpr::Mono(m.pow(r)),
            LevelExpr::Pow(e, s) => e.pow(&(s * r)),
            LevelExpr::Prod(xs) => LevelExpr::prod(xs.into_iter().map(|x| x.pow(r)).collect()),
            e => LevelExpr::Pow(Box::new(e), r.clone()),
        }
    }

    pub fn div(self, other: LevelExpr) -> LevelExpr {
        LevelExpr::prod(vec![self, other.pow(&-Q::one())])
    }

    /// Replaces each variable by an expression (variables without a replacement stay).
    pub fn substitute(&self, f: &impl Fn(&VarId) -> Option<LevelExpr>) -> LevelExpr {
        match self {
            LevelExpr::Mono(m) => {
                let mut keep = Monomial::one();
                let mut parts = Vec::new();
                for (v, e) in m.exps() {
                    match f(v) {
                        Some(x) => parts.push(x.pow(e)),
                        None => keep = keep.mul(&Monomial::var(*v).pow(e)),
                    }
                }
                parts.push(LevelExpr::Mono(keep));
                LevelExpr::prod(parts)
            }
            LevelExpr::Max(xs) => LevelExpr::max(xs.iter().map(|x| x.substitute(f)).collect()),
            LevelExpr::Min(xs) => LevelExpr::min(xs.iter().map(|x| x.substitute(f)).collect()),
            LevelExpr::Prod(xs) => LevelExpr::prod(xs.iter().map(|x| x.substitute(f)).collect()),
            LevelExpr::Pow(e, r) => e.substitute(f).pow(r),
        }
    }

    pub fn vars(&self) -> BTreeSet<VarId> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<VarId>) {
        match self {
            LevelExpr::Mono(m) => out.extend(m.vars().copied()),
            LevelExpr::Max(xs) | LevelExpr::Min(xs) | LevelExpr::Prod(xs) => xs.iter().for_each(|x| x.collect_vars(out)),
            LevelExpr::Pow(e, _) => e.collect_vars(out),
        }
    }

    pub fn eval(&self, lookup: &impl Fn(&VarId) -> f64) -> f64 {
        match self {
            LevelExpr::Mono(m) => m.eval(lookup),
            LevelExpr::Max(xs) => xs.iter().map(|x| x.eval(lookup)).fold(f64::NEG_INFINITY, f64::max),
            LevelExpr::Min(xs) => xs.iter().map(|x| x.eval(lookup)).fold(f64::INFINITY, f64::min),
            LevelExpr::Prod(xs) => xs.iter().map(|x| x.eval(lookup)).product(),
            LevelExpr::Pow(e, r) => e.eval(lookup).powf(to_f64(r)),
        }
    }

    /// log of the expression at τ = e^x, as a function of x (τ variables only).
    pub fn eval_log(&self, x: &impl Fn(usize) -> f64) -> f64 {
        match self {
            LevelExpr::Mono(m) => m.exps().iter().map(|(v, e)| if let VarId::Tau(k) = v { to_f64(e) * x(*k) } else { f64::NAN }).sum(),
            LevelExpr::Max(xs) => xs.iter().map(|e| e.eval_log(x)).fold(f64::NEG_INFINITY, f64::max),
            LevelExpr::Min(xs) => xs.iter().map(|e| e.eval_log(x)).fold(f64::INFINITY, f64::min),
            LevelExpr::Prod(xs) => xs.iter().map(|e| e.eval_log(x)).sum(),
            LevelExpr::Pow(e, r) => to_f64(r) * e.eval_log(x),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            LevelExpr::Mono(m) => json!({"mono": m.to_json()}),
            LevelExpr::Max(xs) => json!({"max": xs.iter().map(|x| x.to_json()).collect::<Vec<_>>()}),
            LevelExpr::Min(xs) => json!({"min": xs.iter().map(|x| x.to_json()).collect::<Vec<_>>()}),
            LevelExpr::Prod(xs) => json!({"prod": xs.iter().map(|x| x.to_json()).collect::<Vec<_>>()}),
            LevelExpr::Pow(e, r) => json!({"pow": [e.to_json(), fmt_q(r)]}),
        }
    }

    pub fn render_latex(&self) -> String {
        match self {
            LevelExpr::Mono(m) => latex_mono(m),
            LevelExpr::Max(xs) => format!("\\max\\{{{}\\}}", xs.iter().map(|x| x.render_latex()).collect::<Vec<_>>().join(", ")),
            LevelExpr::Min(xs) => format!("\\min\\{{{}\\}}", xs.iter().map(|x| x.render_latex()).collect::<Vec<_>>().join(", ")),
            LevelExpr::Prod(xs) => xs.iter().map(|x| x.render_latex()).collect::<Vec<_>>().join(" "),
            LevelExpr::Pow(e, r) if *r == -Q::one() => format!("\\frac{{1}}{{{}}}", e.render_latex()),
            LevelExpr::Pow(e, r) => format!("\\left({}\\right)^{{{}}}", e.render_latex(), fmt_q(r)),
        }
    }

    /// Parses "t1/max(t1, t2)", "min(1, t1*t3/t2)", "max(t2, t3)^(1/2)".
    pub fn parse(s: &str) -> Result<LevelExpr, LevelError> {
        let toks: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut p = Parser { t: toks, i: 0 };
        let e = p.product()?;
        if p.i != p.t.len() {
            return Err(LevelError::Parse(format!("trailing input at {}", p.i)));
        }
        Ok(e)
    }
}

pub fn latex_mono(m: &Monomial) -> String {
    let (n, d) = m.split();
    let part = |x: &Monomial| -> String {
        if x.is_one() {
            return "1".into();
        }
        x.exps()
            .iter()
            .map(|(v, e)| {
                let base = match v {
                    VarId::Tau(k) => format!("\\tau_{{{k}}}"),
                    VarId::Lambda(j) => format!("\\lambda_{{{j}}}"),
                    VarId::XiNorm(k) => format!("|\\xi_{{{k}}}|"),
                };
                if e.is_one() {
                    base
                } else {
                    format!("{base}^{{{}}}", fmt_q(e))
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    if d.is_one() {
        part(&n)
    } else {
        format!("\\frac{{{}}}{{{}}}", part(&n), part(&d))
    }
}

struct Parser {
    t: Vec<char>,
    i: usize,
}

impl Parser {
    fn peek(&self) -> Option<char> {
        self.t.get(self.i).copied()
    }

    fn eat(&mut self, c: char) -> Result<(), LevelError> {
        if self.peek() == Some(c) {
            self.i += 1;
            Ok(())
        } else {
            Err(LevelError::Parse(format!("expected '{c}' at {}", self.i)))
        }
    }

    fn product(&mut self) -> Result<LevelExpr, LevelError> {
        let mut acc = self.power()?;
        while let Some(c) = self.peek() {
            if c == '*' {
                self.i += 1;
                acc = LevelExpr::prod(vec![acc, self.power()?]);
            } else if c == '/' {
                self.i += 1;
                acc = acc.div(self.power()?);
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn power(&mut self) -> Result<LevelExpr, LevelError> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.i += 1;
            let r = if self.peek() == Some('(') {
                self.i += 1;
                let start = self.i;
                while self.peek().is_some_and(|c| c != ')') {
                    self.i += 1;
                }
                let s: String = self.t[start..self.i].iter().collect();
                self.eat(')')?;
                parse_q(&s).map_err(LevelError::Parse)?
            } else {
                let start = self.i;
                while self.peek().is_some_and(|c| c.is_ascii_digit() || c == '-') {
                    self.i += 1;
                }
                let s: String = self.t[start..self.i].iter().collect();
                parse_q(&s).map_err(LevelError::Parse)?
            };
            return Ok(base.pow(&r));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<LevelExpr, LevelError> {
        let rest: String = self.t[self.i..].iter().collect();
        for (kw, is_max) in [("max(", true), ("min(", false)] {
            if rest.starts_with(kw) {
                self.i += kw.len();
                let mut items = vec![self.product()?];
                while self.peek() == Some(',') {
                    self.i += 1;
                    items.push(self.product()?);
                }
                self.eat(')')?;
                return Ok(if is_max { LevelExpr::max(items) } else { LevelExpr::min(items) });
            }
        }
        match self.peek() {
            Some('(') => {
                self.i += 1;
                let e = self.product()?;
                self.eat(')')?;
                Ok(e)
            }
            Some('1') if !self.t.get(self.i + 1).is_some_and(|c| c.is_ascii_digit()) => {
                self.i += 1;
                Ok(LevelExpr::one())
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.i;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric()) {
                    self.i += 1;
                }
                let s: String = self.t[start..self.i].iter().collect();
                Monomial::parse(&s).map(LevelExpr::Mono).map_err(LevelError::Parse)
            }
            _ => Err(LevelError::Parse(format!("unexpected input at {}", self.i))),
        }
    }
}

impl fmt::Display for LevelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |xs: &[LevelExpr]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        match self {
            LevelExpr::Mono(m) => write!(f, "{}", m.render_fraction()),
            LevelExpr::Max(xs) => write!(f, "max({})", list(xs)),
            LevelExpr::Min(xs) => write!(f, "min({})", list(xs)),
            LevelExpr::Prod(xs) => {
                // numerator factors, then "/" and the reciprocal ones
                let (den, num): (Vec<_>, Vec<_>) = xs.iter().partition(|x| matches!(x, LevelExpr::Pow(_, r) if r.is_negative()));
                let wrap = |x: &LevelExpr| match x {
                    LevelExpr::Mono(m) if m.split().1.is_one() && m.exps().len() <= 1 => x.to_string(),
                    LevelExpr::Mono(_) | LevelExpr::Prod(_) => format!("({x})"),
                    _ => x.to_string(),
                };
                let num_s = if num.is_empty() { "1".to_string() } else { num.iter().map(|x| wrap(x)).collect::<Vec<_>>().join("*") };
                if den.is_empty() {
                    return write!(f, "{num_s}");
                }
                let den_s: Vec<String> = den
                    .iter()
                    .map(|x| match x {
                        LevelExpr::Pow(e, r) => {
                            let inner = e.as_ref().clone().pow(&-r.clone());
                            wrap(&inner)
                        }
                        _ => unreachable!(),
                    })
                    .collect();
                if den_s.len() == 1 {
                    write!(f, "{num_s}/{}", den_s[0])
                } else {
                    write!(f, "{num_s}/({})", den_s.join("*"))
                }
            }
            LevelExpr::Pow(e, r) if *r == -Q::one() => write!(f, "1/{e}"),
            LevelExpr::Pow(e, r) => write!(f, "({e})^({})", fmt_q(r)),
        }
    }
}

/// Tropical normal form: max over clauses, each a min over linear forms in log τ.
#[derive(Clone, Debug, PartialEq)]
pub struct Dnf {
    pub vars: Vec<VarId>,
    pub clauses: Vec<Vec<Vec<Q>>>,
}

fn to_dnf(e: &LevelExpr, vars: &[VarId]) -> Vec<Vec<Vec<Q>>> {
    match e {
        LevelExpr::Mono(m) => vec![vec![vars.iter().map(|v| m.exponent(*v)).collect()]],
        LevelExpr::Max(xs) => dedup_clauses(xs.iter().flat_map(|x| to_dnf(x, vars)).collect()),
        LevelExpr::Min(xs) => {
            let mut acc: Vec<Vec<Vec<Q>>> = vec![vec![]];
            for x in xs {
                let d = to_dnf(x, vars);
                let mut next = Vec::new();
                for c in &acc {
                    for e in &d {
                        let mut cc = c.clone();
                        cc.extend(e.iter().cloned());
                        next.push(cc);
                    }
                }
                acc = dedup_clauses(next);
            }
            acc
        }
        LevelExpr::Prod(xs) => {
            let mut acc: Vec<Vec<Vec<Q>>> = vec![vec![vec![Q::zero(); vars.len()]]];
            for x in xs {
                let d = to_dnf(x, vars);
                let mut next = Vec::new();
                for c in &acc {
                    for e in &d {
                        let mut cc = Vec::new();
                        for a in c {
                            for b in e {
                                cc.push(a.iter().zip(b).map(|(p, q)| p + q).collect());
                            }
                        }
                        next.push(cc);
                    }
                }
                acc = dedup_clauses(next);
            }
            acc
        }
        LevelExpr::Pow(inner, r) => {
            let d = to_dnf(inner, vars);
            let scale = |c: &Vec<Vec<Q>>| -> Vec<Vec<Q>> { c.iter().map(|l| l.iter().map(|x| x * r).collect()).collect() };
            if r.is_positive() {
                return d.iter().map(scale).collect();
            }
            // negative power: max-min becomes min-max; redistribute into max-min
            let cnf: Vec<Vec<Vec<Q>>> = d.iter().map(scale).collect();
            let mut acc: Vec<Vec<Vec<Q>>> = vec![vec![]];
            for disj in &cnf {
                let mut next = Vec::new();
                for c in &acc {
                    for l in disj {
                        let mut cc = c.clone();
                        cc.push(l.clone());
                        next.push(cc);
                    }
                }
                acc = dedup_clauses(next);
            }
            acc
        }
    }
}

fn dedup_clauses(cs: Vec<Vec<Vec<Q>>>) -> Vec<Vec<Vec<Q>>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for mut c in cs {
        c.sort();
        c.dedup();
        if seen.insert(c.clone()) {
            out.push(c);
        }
    }
    out
}

impl Dnf {
    pub fn of(e: &LevelExpr, vars: &[VarId]) -> Dnf {
        Dnf { vars: vars.to_vec(), clauses: to_dnf(e, vars) }
    }
}

/// Does f ≤ g hold at every positive τ? (exact, via open-cone feasibility)
pub fn dominated(f: &LevelExpr, g: &LevelExpr) -> bool {
    let vars: Vec<VarId> = f.vars().union(&g.vars()).copied().collect();
    let df = to_dnf(f, &vars);
    let dg = to_dnf(g, &vars);
    let n = vars.len();
    for c in &df {
        // violation: choose, for each clause D_j of g, a form d_j with c_a > d_j for all a
        let mut choice = vec![0usize; dg.len()];
        loop {
            let mut strict = Vec::new();
            for (j, dj) in dg.iter().enumerate() {
                for a in c {
                    strict.push(a.iter().zip(&dj[choice[j]]).map(|(x, y)| x - y).collect::<Vec<Q>>());
                }
            }
            if open_cone_nonempty(n, &strict, &[]).is_some() {
                return false;
            }
            // next choice function
            let mut i = 0;
            loop {
                if i == dg.len() {
                    break;
                }
                choice[i] += 1;
                if choice[i] < dg[i].len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
            if i == dg.len() {
                break;
            }
        }
    }
    true
}

/// Equality as functions on the positive orthant.
pub fn semantically_equal(f: &LevelExpr, g: &LevelExpr) -> bool {
    f == g || (dominated(f, g) && dominated(g, f))
}

/// sol_j^λ(f) = λ_j·f^{1/|a|} with a = ν_j^λ(f) < 0.
pub fn sol_lambda(f: &GenPair, j: usize) -> Result<LevelExpr, LevelError> {
    let a = f.exponent(VarId::Lambda(j));
    if !a.is_negative() {
        return Err(LevelError::NonNegativeExponent(j));
    }
    Ok(LevelExpr::Mono(Monomial::lambda(j).mul(&f.f.pow(&(Q::one() / a.abs())))))
}

#[derive(Clone, Debug)]
pub struct LevelFamily {
    /// ρ_Λ,j for j = 1..ℓ (index j−1).
    pub rho_lambda: Vec<LevelExpr>,
    /// ρ_j(τ′, λ″) before restriction, for the eliminated actions in elimination order.
    pub rho_stages: Vec<(usize, LevelExpr)>,
    pub strict: Vec<bool>,
}

impl LevelFamily {
    pub fn to_json(&self) -> Json {
        json!({
            "rho": self.rho_lambda.iter().map(|e| json!({"text": e.to_string(), "tree": e.to_json()})).collect::<Vec<_>>(),
            "stages": self.rho_stages.iter().map(|(j, e)| json!({"action": j, "rho": e.to_string()})).collect::<Vec<_>>(),
            "strict": self.strict,
        })
    }
}

/// Level functions for a given leading row set and elimination order of the remaining rows.
pub fn build_levels_ordered(d: &DeformationData, r: &RankData, order: &[usize], p: &PointPattern) -> Result<LevelFamily, LevelError> {
    if is_fixed_point(d, p) {
        return Err(LevelError::FixedPoint);
    }
    let dm = derive_monomials(d, r)?;
    let mut cur = GenSet::new();
    for m in dm.phi_inv.values() {
        cur.insert(GenPair::zero(m.clone()));
    }
    for (&k, m) in &dm.psi {
        cur.insert(GenPair::new(m.clone(), psi_value(k, m, r, p)));
    }
    for &j in order {
        cur.insert(GenPair::zero(Monomial::lambda(j)));
    }
    cur = fraction_closure(&cur);
    let mut stages = Vec::new();
    for &j in order {
        let sols: Vec<LevelExpr> = cur
            .iter()
            .filter(|pr| pr.exponent(VarId::Lambda(j)).is_negative())
            .map(|pr| sol_lambda(pr, j))
            .collect::<Result<_, _>>()?;
        let rho = if sols.is_empty() { LevelExpr::one() } else { LevelExpr::max(sols) };
        stages.push((j, rho));
        cur = apply_lj_lambda(&cur, j);
    }
    // back-substitution from the last eliminated action
    let mut restricted: BTreeMap<usize, LevelExpr> = BTreeMap::new();
    for (j, rho) in stages.iter().rev() {
        let e = rho.substitute(&|v| match v {
            VarId::Lambda(i) => restricted.get(i).cloned(),
            _ => None,
        });
        restricted.insert(*j, e);
    }
    let mut rho_lambda = Vec::with_capacity(d.ell);
    for j in 1..=d.ell {
        let e = match dm.phi_inv.get(&j) {
            Some(m) => LevelExpr::Mono(m.clone()).substitute(&|v| match v {
                VarId::Lambda(i) => restricted.get(i).cloned(),
                _ => None,
            }),
            None => restricted[&j].clone(),
        };
        rho_lambda.push(e);
    }
    let strict = (1..=d.ell).map(|j| is_strict_expr(&rho_lambda[j - 1], d, j)).collect();
    Ok(LevelFamily { rho_lambda, rho_stages: stages, strict })
}

pub fn build_levels(d: &DeformationData, r: &RankData, p: &PointPattern) -> Result<LevelFamily, LevelError> {
    build_levels_ordered(d, r, &r.rest_rows, p)
}

/// Exponent of t in e after τ_k ↦ t^{s_k}τ_k, for t → 0⁺.
pub fn effective_exponent(e: &LevelExpr, scaling: &BTreeMap<usize, Q>) -> Q {
    match e {
        LevelExpr::Mono(m) => m
            .exps()
            .iter()
            .filter_map(|(v, x)| match v {
                VarId::Tau(k) => scaling.get(k).map(|s| s * x),
                _ => None,
            })
            .sum(),
        LevelExpr::Max(xs) => xs.iter().map(|x| effective_exponent(x, scaling)).min().unwrap(),
        LevelExpr::Min(xs) => xs.iter().map(|x| effective_exponent(x, scaling)).max().unwrap(),
        LevelExpr::Prod(xs) => xs.iter().map(|x| effective_exponent(x, scaling)).sum(),
        LevelExpr::Pow(x, r) => r * effective_exponent(x, scaling),
    }
}

pub fn action_scaling(d: &DeformationData, j: usize) -> BTreeMap<usize, Q> {
    (1..=d.m).map(|k| (k, d.entry(j, k).clone())).collect()
}

fn is_strict_expr(e: &LevelExpr, d: &DeformationData, j: usize) -> bool {
    effective_exponent(e, &action_scaling(d, j)).is_positive()
}

pub fn is_strict(family: &LevelFamily, d: &DeformationData, j: usize) -> bool {
    is_strict_expr(&family.rho_lambda[j - 1], d, j)
}

/// Generalized levels: minimum over all admissible orderings of the actions.
///
/// Orderings with the same leading set and the same order of the remaining
/// actions give identical families, so those classes are what gets enumerated
/// and counted against `max_perms`.
pub fn build_generalized_levels(d: &DeformationData, p: &PointPattern, max_perms: usize) -> Result<(LevelFamily, usize), LevelError> {
    if is_fixed_point(d, p) {
        return Err(LevelError::FixedPoint);
    }
    let l = d.rank();
    let rows: Vec<usize> = (1..=d.ell).collect();
    let mut classes: Vec<(Vec<usize>, Vec<usize>)> = Vec::new();
    for lead in combinations(&rows, l) {
        let sub: linalg::Matrix = lead.iter().map(|&j| d.row(j).to_vec()).collect();
        if linalg::rank(&sub) < l {
            continue;
        }
        let rest: Vec<usize> = rows.iter().copied().filter(|j| !lead.contains(j)).collect();
        for order in permutations(&rest) {
            classes.push((lead.clone(), order));
            if classes.len() > max_perms {
                return Err(LevelError::TooManyPermutations { count: classes.len(), cap: max_perms });
            }
        }
    }
    let mut per_action: Vec<Vec<LevelExpr>> = vec![Vec::new(); d.ell];
    let mut seen = BTreeSet::new();
    for (lead, order) in &classes {
        let sub: linalg::Matrix = lead.iter().map(|&j| d.row(j).to_vec()).collect();
        let nz: Vec<usize> = (0..d.m).filter(|k| !p.is_zero(k + 1)).collect();
        let mut cols: Vec<usize> = linalg::greedy_cols(&sub, &nz).iter().map(|c| c + 1).collect();
        if cols.len() < l {
            cols = linalg::greedy_cols(&sub, &(0..d.m).collect::<Vec<_>>()).iter().map(|c| c + 1).collect();
        }
        let r = rank_with_leads(d, lead, &cols)?;
        let fam = build_levels_ordered(d, &r, order, p)?;
        let key: Vec<String> = fam.rho_lambda.iter().map(|e| e.to_string()).collect();
        if !seen.insert(key) {
            continue;
        }
        for (j, e) in fam.rho_lambda.into_iter().enumerate() {
            per_action[j].push(e);
        }
    }
    let rho_lambda: Vec<LevelExpr> = per_action.into_iter().map(LevelExpr::min).collect();
    let strict = (1..=d.ell).map(|j| is_strict_expr(&rho_lambda[j - 1], d, j)).collect();
    Ok((LevelFamily { rho_lambda, rho_stages: Vec::new(), strict }, classes.len()))
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![vec![]];
    }
    if items.len() < k {
        return vec![];
    }
    let mut out = Vec::new();
    for mut c in combinations(&items[1..], k - 1) {
        c.insert(0, items[0]);
        out.push(c);
    }
    out.extend(combinations(&items[1..], k));
    out
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.is_empty() {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let x = rest.remove(i);
        for mut p in permutations(&rest) {
            p.insert(0, x);
            out.push(p);
        }
    }
    out
}

pub fn evaluate_level(e: &LevelExpr, tau: &[f64]) -> Result<f64, LevelError> {
    if tau.iter().any(|t| !(*t > 0.0)) {
        return Err(LevelError::Parse("level functions are evaluated at positive τ only".into()));
    }
    Ok(e.eval(&|v| match v {
        VarId::Tau(k) => tau.get(k - 1).copied().unwrap_or(f64::NAN),
        _ => f64::NAN,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::rank_and_normalize;

    fn e(s: &str) -> LevelExpr {
        LevelExpr::parse(s).unwrap()
    }

    fn levels(rows: &[&[i64]]) -> (DeformationData, LevelFamily) {
        let d = DeformationData::from_ints(rows).unwrap();
        let p = PointPattern::generic();
        let r = rank_and_normalize(&d, &p).unwrap();
        let f = build_levels(&d, &r, &p).unwrap();
        (d, f)
    }

    #[test]
    fn parse_and_render() {
        assert_eq!(e("t1/max(t1, t2)").to_string(), "t1/max(t1, t2)");
        assert_eq!(e("max(t2,t1)"), e("max(t1, t2)"));
        assert_eq!(e("1"), LevelExpr::one());
        assert!(LevelExpr::parse("max(t1").is_err());
    }

    #[test]
    fn semantic_comparison() {
        assert!(semantically_equal(&e("1/max(1, t2/(t1*t3))"), &e("min(1, t1*t3/t2)")));
        assert!(semantically_equal(&e("t1/max(t1, t3/max(t2, t3))"), &e("t1*max(t2, t3)/max(t1*t2, t1*t3, t3)")));
        assert!(!semantically_equal(&e("max(t1, t2)"), &e("t1")));
        assert!(dominated(&e("t1"), &e("max(t1, t2)")));
        assert!(!dominated(&e("max(t1, t2)"), &e("t1")));
    }

    #[test]
    fn transitive_levels() {
        let (_, f) = levels(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1], &[1, 1, 1]]);
        let want = ["t1/max(t1, t2)", "t2/max(t1, t2)", "t3*max(t1, t2)/(t1*t2)", "max(t1, t2)"];
        for (got, w) in f.rho_lambda.iter().zip(want) {
            assert!(semantically_equal(got, &e(w)), "{got} vs {w}");
        }
        assert!(f.strict.iter().all(|s| *s));
    }

    #[test]
    fn non_strict_action_and_generalized_fix() {
        let rows: &[&[i64]] = &[&[1, 0, 0], &[0, 1, 0], &[1, 1, 1], &[1, 1, 0], &[0, 1, 1]];
        let (d, f) = levels(rows);
        let want = ["1/max(1, t2/(t1*t3))", "1/max(1, t1*t3/t2)", "1", "max(t1, t2/t3)", "t3"];
        for (got, w) in f.rho_lambda.iter().zip(want) {
            assert!(semantically_equal(got, &e(w)), "{got} vs {w}");
        }
        assert_eq!(f.strict, vec![true, true, false, true, true]);
        let (g, n) = build_generalized_levels(&d, &PointPattern::generic(), 1000).unwrap();
        assert!(n > 1);
        assert!(g.strict.iter().all(|s| *s));
        assert!(matches!(
            build_generalized_levels(&d, &PointPattern::generic(), 2),
            Err(LevelError::TooManyPermutations { .. })
        ));
    }

    #[test]
    fn effective_exponents() {
        let s: BTreeMap<usize, Q> = [(1, Q::one())].into_iter().collect();
        assert_eq!(effective_exponent(&e("max(t1, t2)"), &s), Q::zero());
        assert_eq!(effective_exponent(&e("min(1, t1*t3/t2)"), &s), Q::one());
        assert_eq!(effective_exponent(&LevelExpr::one(), &s), Q::zero());
    }
}
