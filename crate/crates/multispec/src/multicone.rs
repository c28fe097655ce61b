//! Multicone inequality systems S_H(V, ε) in block norms, their closures,
//! projections, numeric membership and samplers.

use crate::deformation::{DeformationData, DeformationError, PointPattern};
use crate::levels::{Dnf, LevelExpr, LevelFamily};
use crate::linalg::Matrix;
use crate::lp::{self, Constraint, LpOutcome, Rel};
use crate::monomial::{fraction_closure, GenPair, GenSet, Monomial, Value, VarId};
use crate::poly::{real_roots, Poly};
use crate::rat::{balance, from_f64, lcm_denoms, to_f64, Q};
use crate::semigroup::{equivalent, g_hat_lambda_free, PipelineResult, Verdict, DEFAULT_MAX_N};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet};

pub const DEFAULT_APERTURE: f64 = std::f64::consts::FRAC_PI_4;
pub const CLOSURE_PAIR_CAP: usize = 10_000;
pub const DEFAULT_CLOSURE_DEGREE: u64 = 4;
/// Log-space sampling box: log τ_k ∈ [−30, 0].
pub const LOG_BOX: f64 = 30.0;

#[derive(Debug, thiserror::Error)]
pub enum MulticoneError {
    #[error("the generator set is not equivalent to the semigroup of the deformation")]
    NotEquivalent,
    #[error("equivalence with the semigroup could not be decided within the search bounds")]
    EquivalenceUnknown,
    #[error("projection needs a one-sided system (build with one_sided = true)")]
    NotOneSided,
    #[error("block {0} is not part of the system")]
    NoSuchBlock(usize),
    #[error("block {0} is in the zero pattern but some inequality has a negative exponent on it")]
    IllDefined(usize),
    #[error("closure generated more than {0} pairs")]
    CapExceeded(usize),
    #[error("the system has no interior points in the sampling box")]
    Empty,
    #[error("sampler accepted only {accepted} of {requested} points")]
    Starved { accepted: usize, requested: usize },
    #[error(transparent)]
    Deformation(#[from] DeformationError),
}

/// One factor (v_i ± ε_i)^power of an inequality bound; `source` indexes `MulticoneSystem::sources`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct BoundFactor {
    pub value: Value,
    pub source: usize,
    pub power: Q,
}

/// Π(v_i − ε)^{a_i} < f < Π(v_i + ε)^{a_i}; the lower side only when `two_sided`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Ineq {
    pub f: Monomial,
    pub factors: Vec<BoundFactor>,
    pub two_sided: bool,
}

#[derive(Clone, Debug)]
pub enum EpsSpec {
    Single(f64),
    /// Per source pair (ε_{f,−}, ε_{f,+}) and ε₀ for the z^{(0)} block.
    PerPair { eps0: f64, minus: Vec<f64>, plus: Vec<f64> },
}

impl EpsSpec {
    pub fn minus(&self, i: usize) -> f64 {
        match self {
            EpsSpec::Single(e) => *e,
            EpsSpec::PerPair { minus, .. } => minus[i],
        }
    }

    pub fn plus(&self, i: usize) -> f64 {
        match self {
            EpsSpec::Single(e) => *e,
            EpsSpec::PerPair { plus, .. } => plus[i],
        }
    }

    pub fn eps0(&self) -> f64 {
        match self {
            EpsSpec::Single(e) => *e,
            EpsSpec::PerPair { eps0, .. } => *eps0,
        }
    }

    pub fn halved(&self) -> EpsSpec {
        match self {
            EpsSpec::Single(e) => EpsSpec::Single(e / 2.0),
            EpsSpec::PerPair { eps0, minus, plus } => EpsSpec::PerPair {
                eps0: eps0 / 2.0,
                minus: minus.iter().map(|x| x / 2.0).collect(),
                plus: plus.iter().map(|x| x / 2.0).collect(),
            },
        }
    }
}

/// A point given by block norms |z^{(k)}| (index k−1), the angle of each block
/// to its reference direction ξ^{(k)}, and |z^{(0)}|.
#[derive(Clone, Debug, PartialEq)]
pub struct ConePoint {
    pub norms: Vec<f64>,
    pub angles: Vec<f64>,
    pub x0: f64,
}

impl ConePoint {
    pub fn from_norms(norms: &[f64]) -> ConePoint {
        ConePoint { norms: norms.to_vec(), angles: vec![0.0; norms.len()], x0: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct MulticoneSystem {
    pub m: usize,
    /// Blocks still present (projection removes blocks).
    pub blocks: Vec<usize>,
    pub zero_blocks: BTreeSet<usize>,
    pub pairs: GenSet,
    pub sources: Vec<GenPair>,
    pub ineqs: Vec<Ineq>,
    pub one_sided: bool,
    pub has_x0: bool,
    /// |ξ^{(k)}| used to evaluate values (index k−1); 0 on the zero pattern.
    pub xi_norms: Vec<f64>,
    /// ℓ×m action matrix for contraction checks.
    pub action: Matrix,
    pub aperture: f64,
}

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub one_sided: bool,
    pub check_equivalence: bool,
    pub has_x0: bool,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { one_sided: false, check_equivalence: true, has_x0: true }
    }
}

fn is_canonical_direction(f: &Monomial) -> bool {
    f.exps().iter().find(|(_, e)| !e.is_zero()).is_none_or(|(_, e)| e.is_positive())
}

pub fn xi_norms_of(m: usize, p: &PointPattern) -> Vec<f64> {
    (1..=m).map(|k| p.norm(k)).collect()
}

/// Multicone system of F^q at the point pattern of the pipeline.
pub fn build_multicone(d: &DeformationData, pr: &PipelineResult, opts: &BuildOptions) -> Result<MulticoneSystem, MulticoneError> {
    if opts.check_equivalence {
        let g = g_hat_lambda_free(d, &pr.rank, &pr.pattern)?;
        match equivalent(&pr.fq, &g, DEFAULT_MAX_N) {
            Verdict::Yes => {}
            Verdict::No => return Err(MulticoneError::NotEquivalent),
            Verdict::Unknown => return Err(MulticoneError::EquivalenceUnknown),
        }
    }
    Ok(MulticoneSystem::from_pairs(&pr.fq, d.m, &pr.pattern, d.a.clone(), opts))
}

impl MulticoneSystem {
    pub fn from_pairs(h: &GenSet, m: usize, p: &PointPattern, action: Matrix, opts: &BuildOptions) -> MulticoneSystem {
        let h_used = if opts.one_sided { fraction_closure(h) } else { h.clone() };
        let mut sources = Vec::new();
        let mut ineqs = Vec::new();
        for pair in &h_used {
            if pair.f.is_one() {
                continue;
            }
            let two_sided = !pair.v.is_zero() && !opts.one_sided;
            if two_sided && !is_canonical_direction(&pair.f) {
                if let Some(inv) = pair.inverse() {
                    if h_used.contains(&inv) {
                        continue;
                    }
                }
            }
            sources.push(pair.clone());
            ineqs.push(Ineq {
                f: pair.f.clone(),
                factors: vec![BoundFactor { value: pair.v.clone(), source: sources.len() - 1, power: Q::one() }],
                two_sided,
            });
        }
        MulticoneSystem {
            m,
            blocks: (1..=m).collect(),
            zero_blocks: p.zero_blocks.clone(),
            pairs: h.clone(),
            sources,
            ineqs,
            one_sided: opts.one_sided,
            has_x0: opts.has_x0,
            xi_norms: xi_norms_of(m, p),
            action,
            aperture: DEFAULT_APERTURE,
        }
    }

    fn value(&self, v: &Value) -> f64 {
        v.eval(|k| self.xi_norms.get(k - 1).copied().unwrap_or(0.0))
    }

    pub fn upper_bound(&self, ineq: &Ineq, eps: &EpsSpec) -> f64 {
        ineq.factors.iter().map(|b| (self.value(&b.value) + eps.plus(b.source)).powf(to_f64(&b.power))).product()
    }

    /// Lower bound with each factor clamped at 0.
    pub fn lower_bound(&self, ineq: &Ineq, eps: &EpsSpec) -> f64 {
        if !ineq.two_sided {
            return 0.0;
        }
        ineq.factors
            .iter()
            .map(|b| (self.value(&b.value) - eps.minus(b.source)).max(0.0).powf(to_f64(&b.power)))
            .product()
    }

    pub fn member(&self, pt: &ConePoint, eps: &EpsSpec) -> bool {
        if self.has_x0 && pt.x0 >= eps.eps0() {
            return false;
        }
        for &k in &self.blocks {
            if !self.zero_blocks.contains(&k) && !(pt.norms[k - 1] > 0.0 && pt.angles[k - 1] < self.aperture) {
                return false;
            }
        }
        self.ineqs.iter().all(|i| holds(&i.f, &pt.norms, self.lower_bound(i, eps), self.upper_bound(i, eps), true))
    }

    pub fn render(&self) -> Vec<String> {
        self.ineqs.iter().map(render_ineq).collect()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "blocks": self.blocks,
            "zero_blocks": self.zero_blocks,
            "one_sided": self.one_sided,
            "has_x0": self.has_x0,
            "inequalities": self.ineqs.iter().map(|i| json!({
                "f": i.f.render_fraction(),
                "two_sided": i.two_sided,
                "display": render_ineq(i),
            })).collect::<Vec<_>>(),
        })
    }

    fn block_pos(&self, k: usize) -> Option<usize> {
        self.blocks.iter().position(|&b| b == k)
    }
}

/// Evaluates lower < f(τ) < upper (or ≤ when not strict) with zero norms handled in cleared form.
fn holds(f: &Monomial, norms: &[f64], lower: f64, upper: f64, strict: bool) -> bool {
    let lt = |a: f64, b: f64| if strict { a < b } else { a <= b };
    let taus: Vec<(usize, f64)> = f
        .exps()
        .iter()
        .filter_map(|(v, e)| match v {
            VarId::Tau(k) => Some((*k, to_f64(e))),
            _ => None,
        })
        .collect();
    if taus.iter().all(|(k, _)| norms[k - 1] > 0.0) {
        let lf: f64 = taus.iter().map(|(k, e)| e * norms[k - 1].ln()).sum();
        let up = lt(lf, upper.ln());
        let low = lower <= 0.0 && !strict || lower <= 0.0 || lt(lower.ln(), lf);
        return up && low;
    }
    let (mut fnum, mut fden) = (1.0, 1.0);
    for (k, e) in &taus {
        if *e > 0.0 {
            fnum *= norms[k - 1].powf(*e);
        } else {
            fden *= norms[k - 1].powf(-e);
        }
    }
    lt(fnum, upper * fden) && (lower <= 0.0 || lt(lower * fden, fnum))
}

fn norm_product(m: &Monomial) -> String {
    if m.is_one() {
        return "1".into();
    }
    m.exps()
        .iter()
        .map(|(v, e)| {
            let k = match v {
                VarId::Tau(k) => *k,
                _ => 0,
            };
            if e.is_one() {
                format!("|z{k}|")
            } else {
                format!("|z{k}|^{e}")
            }
        })
        .collect()
}

fn factor_text(value: &Value, sign: char, power: &Q) -> String {
    let base = match value {
        Value::Zero => "ε".to_string(),
        v => format!("({} {sign} ε)", render_value(v)),
    };
    if power.is_one() {
        base
    } else {
        format!("{base}^{power}")
    }
}

fn render_value(v: &Value) -> String {
    match v {
        Value::Zero => "0".into(),
        Value::Xi(m) if m.is_one() => "1".into(),
        Value::Xi(m) => {
            let (n, d) = m.split();
            let side = |x: &Monomial| {
                x.exps()
                    .iter()
                    .map(|(v, e)| {
                        let k = match v {
                            VarId::XiNorm(k) => *k,
                            _ => 0,
                        };
                        if e.is_one() {
                            format!("|ξ{k}|")
                        } else {
                            format!("|ξ{k}|^{e}")
                        }
                    })
                    .collect::<String>()
            };
            if d.is_one() {
                side(&n)
            } else {
                format!("{}/{}", if n.is_one() { "1".into() } else { side(&n) }, side(&d))
            }
        }
    }
}

/// Clears fractional exponents: f^c = f_n / f_d with integer exponents.
pub fn cleared(f: &Monomial) -> (BigInt, Monomial, Monomial) {
    let c = lcm_denoms(f.exps().values());
    let (n, d) = f.pow(&Q::from_integer(c.clone())).split();
    (c, n, d)
}

pub fn render_ineq(i: &Ineq) -> String {
    let (c, n, d) = cleared(&i.f);
    let cq = Q::from_integer(c);
    let bound = |sign: char| -> String {
        let mut merged: BTreeMap<&Value, Q> = BTreeMap::new();
        for b in &i.factors {
            *merged.entry(&b.value).or_insert_with(Q::zero) += &b.power * &cq;
        }
        merged.into_iter().map(|(v, pw)| factor_text(v, sign, &pw)).collect::<String>()
    };
    let den = if d.is_one() { String::new() } else { norm_product(&d) };
    let up = format!("{}{}", bound('+'), den);
    if i.two_sided {
        format!("{}{} < {} < {}", bound('-'), den, norm_product(&n), up)
    } else {
        format!("{} < {}", norm_product(&n), up)
    }
}

/// One displayed inequality: f = num/den, and whether it carries a nonzero value (two-sided).
#[derive(Clone, Debug, PartialEq)]
pub struct DisplayIneq {
    pub f: Monomial,
    pub two_sided: bool,
    pub eps_power: u32,
    pub source: String,
}

fn parse_side(s: &str) -> Result<(Monomial, u32, bool), String> {
    let c: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let (mut m, mut epsp, mut paren) = (Monomial::one(), 0u32, false);
    let mut i = 0;
    // exponents: ^3, ^(1/3) or ^{-2/5}
    let read_pow = |i: &mut usize| -> Result<Q, String> {
        if c.get(*i) != Some(&'^') {
            return Ok(Q::from_integer(1.into()));
        }
        *i += 1;
        let text: String = if matches!(c.get(*i), Some('(') | Some('{')) {
            let close = if c[*i] == '(' { ')' } else { '}' };
            let end = c[*i..].iter().position(|&x| x == close).ok_or(format!("unclosed exponent in {s:?}"))? + *i;
            let t = c[*i + 1..end].iter().collect();
            *i = end + 1;
            t
        } else {
            let st = *i;
            while *i < c.len() && c[*i].is_ascii_digit() {
                *i += 1;
            }
            c[st..*i].iter().collect()
        };
        crate::rat::parse_q(&text).map_err(|_| format!("bad exponent in {s:?}"))
    };
    let eps_pow = |e: Q| -> Result<u32, String> {
        if e.is_integer() && e >= Q::from_integer(0.into()) {
            Ok(e.to_integer().try_into().unwrap_or(u32::MAX))
        } else {
            Err(format!("ε power must be a non-negative integer in {s:?}"))
        }
    };
    while i < c.len() {
        match c[i] {
            '|' => {
                let close = c[i + 1..].iter().position(|&x| x == '|').ok_or(format!("unclosed norm in {s:?}"))? + i + 1;
                let name: String = c[i + 1..close].iter().collect();
                let k: usize = name.trim_start_matches(|x: char| x.is_alphabetic()).parse().map_err(|_| format!("bad block name {name:?}"))?;
                i = close + 1;
                let e = read_pow(&mut i)?;
                m = m.mul(&Monomial::tau(k).pow(&e));
            }
            'ε' => {
                i += 1;
                epsp += eps_pow(read_pow(&mut i)?)?;
            }
            'e' if c[i..].starts_with(&['e', 'p', 's']) => {
                i += 3;
                epsp += eps_pow(read_pow(&mut i)?)?;
            }
            '(' => {
                let mut depth = 0;
                let mut j = i;
                loop {
                    match c.get(j) {
                        Some('(') => depth += 1,
                        Some(')') => {
                            depth -= 1;
                            if depth == 0 {
                                break;
                            }
                        }
                        None => return Err(format!("unbalanced parentheses in {s:?}")),
                        _ => {}
                    }
                    j += 1;
                }
                paren = true;
                i = j + 1;
                read_pow(&mut i)?;
            }
            '1' | '*' => i += 1,
            x => return Err(format!("unexpected {x:?} in {s:?}")),
        }
    }
    Ok((m, epsp, paren))
}

impl DisplayIneq {
    /// Parses "|z1||z2| < ε|z3|", "|z2|^3 < ε|z1|^2" or "(n - ε)|z2| < |z1||z3| < (n + ε)|z2|".
    pub fn parse(s: &str) -> Result<DisplayIneq, String> {
        let parts: Vec<&str> = s.split('<').collect();
        match parts.len() {
            2 => {
                let (n, _, _) = parse_side(parts[0])?;
                let (d, e, _) = parse_side(parts[1])?;
                Ok(DisplayIneq { f: n.div(&d), two_sided: false, eps_power: e, source: s.into() })
            }
            3 => {
                let (n, _, _) = parse_side(parts[1])?;
                let (d, _, _) = parse_side(parts[2])?;
                Ok(DisplayIneq { f: n.div(&d), two_sided: true, eps_power: 1, source: s.into() })
            }
            _ => Err(format!("cannot read inequality {s:?}")),
        }
    }
}

fn tau_vector(f: &Monomial, m: usize) -> Vec<Q> {
    (1..=m).map(|k| f.exponent(VarId::Tau(k))).collect()
}

/// Primitive integer direction (up to positive scaling); sign-normalized for two-sided rows.
fn direction(f: &Monomial, m: usize, two_sided: bool) -> Vec<BigInt> {
    let v = tau_vector(f, m);
    let l = lcm_denoms(v.iter());
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(l.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |a, b| a.gcd(b));
    let mut out: Vec<BigInt> = if g.is_zero() { ints } else { ints.iter().map(|x| x / &g).collect() };
    if two_sided && out.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_negative()) {
        out = out.iter().map(|x| -x).collect();
    }
    out
}

fn is_single_block(f: &Monomial) -> Option<usize> {
    let e = f.exps();
    if e.len() == 1 {
        if let Some((VarId::Tau(k), x)) = e.iter().next() {
            if x.is_positive() {
                return Some(*k);
            }
        }
    }
    None
}

/// f is implied (up to ε-reparametrization) by rows whose monomials generate `gens`:
/// ν(f) = Σ y_i g_i with y ≥ 0.
fn implied(f: &Monomial, gens: &[Vec<Q>], m: usize) -> bool {
    let target = tau_vector(f, m);
    let cons: Vec<Constraint> = (0..m)
        .map(|k| Constraint::new(gens.iter().map(|g| g[k].clone()).collect(), Rel::Eq, target[k].clone()))
        .collect();
    lp::feasible(gens.len(), &cons)
}

#[derive(Clone, Debug, Default)]
pub struct DisplayComparison {
    pub matched: usize,
    pub missing: Vec<String>,
    pub unexplained: Vec<String>,
}

impl DisplayComparison {
    pub fn ok(&self) -> bool {
        self.missing.is_empty() && self.unexplained.is_empty()
    }
}

/// Compares a system with a displayed family up to ε-powers, neighborhood bounds |z_k| < ε and
/// inequalities implied by the rest. Two-sided rows must match exactly (up to inversion).
pub fn compare_display(sys: &MulticoneSystem, expected: &[DisplayIneq]) -> DisplayComparison {
    let m = sys.m;
    let ours: Vec<(Vec<BigInt>, bool, &Ineq)> = sys.ineqs.iter().map(|i| (direction(&i.f, m, i.two_sided), i.two_sided, i)).collect();
    let mut cmp = DisplayComparison::default();
    let gens_from = |rows: &mut dyn Iterator<Item = (&Monomial, bool)>| -> Vec<Vec<Q>> {
        let mut g = Vec::new();
        for (f, two) in rows {
            let v = tau_vector(f, m);
            if two {
                g.push(v.iter().map(|x| -x).collect());
            }
            g.push(v);
        }
        g
    };
    let our_gens = gens_from(&mut sys.ineqs.iter().map(|i| (&i.f, i.two_sided)));
    for e in expected {
        // |z0| < ε is the x0 neighborhood bound
        if e.f.exps().keys().any(|v| matches!(v, VarId::Tau(0))) {
            continue;
        }
        let key = (direction(&e.f, m, e.two_sided), e.two_sided);
        if ours.iter().any(|(d, t, _)| (d, *t) == (&key.0, key.1)) {
            cmp.matched += 1;
        } else if is_single_block(&e.f).is_some() && implied(&e.f, &our_gens, m) {
            cmp.matched += 1;
        } else {
            cmp.missing.push(e.source.clone());
        }
    }
    let mut exp_gens = gens_from(&mut expected.iter().map(|e| (&e.f, e.two_sided)));
    for k in 1..=m {
        let mut u = vec![Q::zero(); m];
        u[k - 1] = Q::one();
        exp_gens.push(u);
    }
    for (d, two, ineq) in &ours {
        let present = expected.iter().any(|e| e.two_sided == *two && direction(&e.f, m, e.two_sided) == *d);
        if present || is_single_block(&ineq.f).is_some() {
            continue;
        }
        if *two || !implied(&ineq.f, &exp_gens, m) {
            cmp.unexplained.push(render_ineq(ineq));
        }
    }
    cmp
}

pub fn parse_display(lines: &[&str]) -> Result<Vec<DisplayIneq>, String> {
    lines.iter().map(|s| DisplayIneq::parse(s)).collect()
}

// ---------------------------------------------------------------- closure

#[derive(Clone, Debug)]
pub struct ClosedIneq {
    pub f: Monomial,
    pub value: Value,
    /// (F^q pair, a_i)
    pub decomposition: Vec<(GenPair, u64)>,
}

#[derive(Clone, Debug)]
pub struct ClosureSystem {
    pub k: GenSet,
    pub inequalities: Vec<ClosedIneq>,
    /// Some ⋆-products were skipped by the degree cap.
    pub truncated: bool,
    pub max_degree: u64,
    pub m: usize,
    pub zero_blocks: BTreeSet<usize>,
    pub xi_norms: Vec<f64>,
    pub has_x0: bool,
    pub aperture: f64,
}

type Decomp = BTreeMap<GenPair, u64>;

/// Fixpoint of the ⋆-product over `fq` on the given columns, with products of more than
/// `max_degree` generator factors skipped (and reported through `truncated`).
pub fn closure_of(fq: &GenSet, cols: &[usize], max_degree: u64) -> Result<(BTreeMap<GenPair, Decomp>, bool), MulticoneError> {
    let mut k: BTreeMap<GenPair, Decomp> = BTreeMap::new();
    for p in fq {
        if !p.f.is_one() {
            k.insert(p.clone(), BTreeMap::from([(p.clone(), 1)]));
        }
    }
    let degree = |d: &Decomp| d.values().sum::<u64>();
    let mut truncated = false;
    let mut frontier: Vec<GenPair> = k.keys().cloned().collect();
    while !frontier.is_empty() {
        let snapshot: Vec<(GenPair, Decomp)> = k.iter().map(|(a, b)| (a.clone(), b.clone())).collect();
        let mut next = Vec::new();
        for new in &frontier {
            let dn = k[new].clone();
            for (other, dother) in &snapshot {
                for (p, dp, q_, dq) in [(new, &dn, other, dother), (other, dother, new, &dn)] {
                    for &c in cols {
                        let (np, nq) = (p.exponent(VarId::Tau(c)), q_.exponent(VarId::Tau(c)));
                        if !(np.is_positive() && nq.is_negative()) {
                            continue;
                        }
                        let (a, b) = balance(&np, &-nq);
                        let (a, b) = (crate::rat::big_to_u64(&a).unwrap_or(u64::MAX), crate::rat::big_to_u64(&b).unwrap_or(u64::MAX));
                        if a.saturating_mul(degree(dp)).saturating_add(b.saturating_mul(degree(dq))) > max_degree {
                            truncated = true;
                            continue;
                        }
                        let prod = GenPair::new(
                            p.f.pow(&Q::from_integer(a.into())).mul(&q_.f.pow(&Q::from_integer(b.into()))),
                            p.v.pow(&Q::from_integer(a.into())).mul(&q_.v.pow(&Q::from_integer(b.into()))),
                        );
                        if prod.f.is_one() || k.contains_key(&prod) {
                            continue;
                        }
                        let mut dec = Decomp::new();
                        for (g, x) in dp {
                            *dec.entry(g.clone()).or_default() += a * x;
                        }
                        for (g, x) in dq {
                            *dec.entry(g.clone()).or_default() += b * x;
                        }
                        k.insert(prod.clone(), dec);
                        next.push(prod);
                        if k.len() > CLOSURE_PAIR_CAP {
                            return Err(MulticoneError::CapExceeded(CLOSURE_PAIR_CAP));
                        }
                    }
                }
            }
        }
        frontier = next;
    }
    Ok((k, truncated))
}

pub fn closure(pr: &PipelineResult, m: usize, max_degree: u64) -> Result<ClosureSystem, MulticoneError> {
    closure_system(&pr.fq, &pr.rank.lead_cols, m, &pr.pattern, max_degree)
}

pub fn closure_system(fq: &GenSet, cols: &[usize], m: usize, p: &PointPattern, max_degree: u64) -> Result<ClosureSystem, MulticoneError> {
    let (k, truncated) = closure_of(fq, cols, max_degree)?;
    let inequalities = k
        .iter()
        .map(|(pair, dec)| ClosedIneq { f: pair.f.clone(), value: pair.v.clone(), decomposition: dec.iter().map(|(a, b)| (a.clone(), *b)).collect() })
        .collect();
    Ok(ClosureSystem {
        k: k.into_keys().collect(),
        inequalities,
        truncated,
        max_degree,
        m,
        zero_blocks: p.zero_blocks.clone(),
        xi_norms: xi_norms_of(m, p),
        has_x0: true,
        aperture: DEFAULT_APERTURE,
    })
}

impl ClosureSystem {
    fn value(&self, v: &Value) -> f64 {
        v.eval(|k| self.xi_norms.get(k - 1).copied().unwrap_or(0.0))
    }

    /// (v − ε_f, v + ε_f) with v ± ε_f = Π(v_i ± ε)^{a_i}, each lower factor clamped at 0.
    pub fn bounds(&self, i: &ClosedIneq, eps: f64) -> (f64, f64) {
        let mut lo = 1.0;
        let mut hi = 1.0;
        for (g, a) in &i.decomposition {
            let v = self.value(&g.v);
            lo *= (v - eps).max(0.0).powi(*a as i32);
            hi *= (v + eps).powi(*a as i32);
        }
        (lo, hi)
    }

    pub fn member(&self, pt: &ConePoint, eps: f64) -> bool {
        if self.has_x0 && pt.x0 > eps {
            return false;
        }
        for k in 1..=self.m {
            if !self.zero_blocks.contains(&k) && pt.norms[k - 1] > 0.0 && pt.angles[k - 1] > self.aperture {
                return false;
            }
        }
        self.inequalities.iter().all(|i| {
            let (lo, hi) = self.bounds(i, eps);
            holds(&i.f, &pt.norms, lo, hi, false)
        })
    }

    pub fn render(&self) -> Vec<String> {
        self.inequalities
            .iter()
            .map(|i| {
                let (n, d) = i.f.split();
                let fac = |sign: char| {
                    // zero-valued factors merge into a single power of ε
                    let eps_pow: u64 = i.decomposition.iter().filter(|(g, _)| sign == '+' && g.v.is_zero()).map(|(_, a)| *a).sum();
                    let mut out = match eps_pow {
                        0 => String::new(),
                        1 => "ε".to_string(),
                        k => format!("ε^{k}"),
                    };
                    for (g, a) in i.decomposition.iter().filter(|(g, _)| !(sign == '+' && g.v.is_zero())) {
                        let base = format!("({} {sign} ε)", render_value(&g.v));
                        out.push_str(&if *a == 1 { base } else { format!("{base}^{a}") });
                    }
                    out
                };
                let den = if d.is_one() { String::new() } else { norm_product(&d) };
                if i.value.is_zero() {
                    format!("{} ≤ {}{}", norm_product(&n), fac('+'), den)
                } else {
                    format!("{}{} ≤ {} ≤ {}{}", fac('-'), den, norm_product(&n), fac('+'), den)
                }
            })
            .collect()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "K": self.k.iter().map(|p| p.render()).collect::<Vec<_>>(),
            "inequalities": self.render(),
            "truncated": self.truncated,
            "max_degree": self.max_degree,
        })
    }
}

// ---------------------------------------------------------------- projection

/// Drops block k: rows free of τ_k are kept; rows with opposite signs on τ_k are paired into
/// balanced products. When τ_k may vanish (k in the zero pattern) the τ_k-positive rows are
/// satisfied at τ_k = 0 and simply dropped.
pub fn project(sys: &MulticoneSystem, k: usize, k_in_jz: bool) -> Result<MulticoneSystem, MulticoneError> {
    if sys.ineqs.iter().any(|i| i.two_sided) {
        return Err(MulticoneError::NotOneSided);
    }
    let pos = sys.block_pos(k).ok_or(MulticoneError::NoSuchBlock(k))?;
    let nu = |i: &Ineq| i.f.exponent(VarId::Tau(k));
    let mut out: Vec<Ineq> = sys.ineqs.iter().filter(|i| nu(i).is_zero()).cloned().collect();
    if k_in_jz {
        if sys.ineqs.iter().any(|i| nu(i).is_negative()) {
            return Err(MulticoneError::IllDefined(k));
        }
    } else {
        let negs: Vec<&Ineq> = sys.ineqs.iter().filter(|i| nu(i).is_negative()).collect();
        let poss: Vec<&Ineq> = sys.ineqs.iter().filter(|i| nu(i).is_positive()).collect();
        for s in &negs {
            for s2 in &poss {
                let (a, b) = balance(&-nu(s), &nu(s2));
                let (a, b) = (Q::from_integer(a), Q::from_integer(b));
                let f = s.f.pow(&a).mul(&s2.f.pow(&b));
                if f.is_one() {
                    continue;
                }
                let mut factors: Vec<BoundFactor> = s.factors.iter().map(|x| BoundFactor { power: &x.power * &a, ..x.clone() }).collect();
                factors.extend(s2.factors.iter().map(|x| BoundFactor { power: &x.power * &b, ..x.clone() }));
                factors.sort();
                let row = Ineq { f, factors, two_sided: false };
                if !out.contains(&row) {
                    out.push(row);
                }
            }
        }
    }
    let mut res = sys.clone();
    res.blocks.remove(pos);
    res.ineqs = out;
    res.zero_blocks.remove(&k);
    Ok(res)
}

// ---------------------------------------------------------------- sampling

struct LinearSystem {
    /// rows a·x ≤ b over x = log τ on the active blocks
    rows: Vec<(Vec<f64>, f64)>,
}

fn linear_rows(sys: &MulticoneSystem, eps: &EpsSpec) -> LinearSystem {
    let mut rows = Vec::new();
    for i in &sys.ineqs {
        let a: Vec<f64> = sys.blocks.iter().map(|&k| to_f64(&i.f.exponent(VarId::Tau(k)))).collect();
        rows.push((a.clone(), sys.upper_bound(i, eps).ln()));
        let lo = sys.lower_bound(i, eps);
        if i.two_sided && lo > 0.0 {
            rows.push((a.iter().map(|x| -x).collect(), -lo.ln()));
        }
    }
    for j in 0..sys.blocks.len() {
        let mut a = vec![0.0; sys.blocks.len()];
        a[j] = 1.0;
        rows.push((a.clone(), 0.0));
        a[j] = -1.0;
        rows.push((a, LOG_BOX));
    }
    LinearSystem { rows }
}

/// Interior point maximizing the common slack, by exact LP on rationalized data.
fn interior_point(ls: &LinearSystem, dim: usize) -> Option<Vec<f64>> {
    let mut cons: Vec<Constraint> = ls
        .rows
        .iter()
        .map(|(a, b)| {
            let mut c: Vec<Q> = a.iter().map(|x| from_f64(*x)).collect();
            c.push(Q::one());
            Constraint::new(c, Rel::Le, from_f64(*b))
        })
        .collect();
    let mut cap = vec![Q::zero(); dim + 1];
    cap[dim] = Q::one();
    cons.push(Constraint::new(cap.clone(), Rel::Le, Q::one()));
    match lp::maximize_free(dim + 1, &cons, &cap) {
        LpOutcome::Optimal { x, value } if value.is_positive() => Some(x[..dim].iter().map(to_f64).collect()),
        _ => None,
    }
}

/// Hit-and-run sampler in log-norm space; angles uniform inside the aperture, |z^{(0)}| uniform in [0, ε₀).
pub fn sample_points(sys: &MulticoneSystem, eps: &EpsSpec, n: usize, seed: u64) -> Result<Vec<ConePoint>, MulticoneError> {
    let dim = sys.blocks.len();
    let ls = linear_rows(sys, eps);
    let mut x = interior_point(&ls, dim).ok_or(MulticoneError::Empty)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let (burn, thin) = (50, 3);
    let mut step = 0usize;
    let mut attempts = 0usize;
    while out.len() < n && attempts < 4 * n + 100 {
        let mut u: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        u.iter_mut().for_each(|v| *v /= norm);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for (a, b) in &ls.rows {
            let au: f64 = a.iter().zip(&u).map(|(p, q)| p * q).sum();
            let slack = b - a.iter().zip(&x).map(|(p, q)| p * q).sum::<f64>();
            if au > 1e-15 {
                hi = hi.min(slack / au);
            } else if au < -1e-15 {
                lo = lo.max(slack / au);
            }
        }
        if lo.is_finite() && hi.is_finite() && hi > lo {
            let t = lo + (hi - lo) * rng.gen_range(0.001..0.999);
            x.iter_mut().zip(&u).for_each(|(xi, ui)| *xi += t * ui);
        }
        step += 1;
        if step < burn || step % thin != 0 {
            continue;
        }
        attempts += 1;
        let mut norms = vec![0.0; sys.m];
        let mut angles = vec![0.0; sys.m];
        for (j, &k) in sys.blocks.iter().enumerate() {
            norms[k - 1] = x[j].exp();
            angles[k - 1] = rng.gen_range(0.0..sys.aperture * 0.99);
        }
        let pt = ConePoint { norms, angles, x0: rng.gen_range(0.0..eps.eps0() * 0.99) };
        if sys.member(&pt, eps) {
            out.push(pt);
        }
    }
    if out.len() < n {
        return Err(MulticoneError::Starved { accepted: out.len(), requested: n });
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct ContractionReport {
    pub passed: usize,
    pub failed: usize,
    pub first_failure: Option<(ConePoint, Vec<f64>)>,
}

impl ContractionReport {
    pub fn all_pass(&self) -> bool {
        self.failed == 0 && self.passed > 0
    }
}

/// μ(z, λ) on block norms: |z^{(k)}| ↦ Π_j λ_j^{a_jk}|z^{(k)}|.
pub fn contract(sys: &MulticoneSystem, pt: &ConePoint, lambda: &[f64]) -> ConePoint {
    let mut q = pt.clone();
    for &k in &sys.blocks {
        let s: f64 = lambda.iter().enumerate().map(|(j, l)| l.powf(to_f64(&sys.action[j][k - 1]))).product();
        q.norms[k - 1] *= s;
    }
    q
}

pub fn contraction_stable_check(sys: &MulticoneSystem, eps: &EpsSpec, samples: usize, seed: u64) -> Result<ContractionReport, MulticoneError> {
    let pts = sample_points(sys, eps, samples, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut rep = ContractionReport::default();
    for pt in pts {
        let lambda: Vec<f64> = (0..sys.action.len()).map(|_| 1.0 - rng.gen_range(0.0..1.0)).collect();
        let q = contract(sys, &pt, &lambda);
        if sys.member(&q, eps) {
            rep.passed += 1;
        } else {
            rep.failed += 1;
            if rep.first_failure.is_none() {
                rep.first_failure = Some((pt, lambda));
            }
        }
    }
    Ok(rep)
}

// ---------------------------------------------------------------- bounded levels

/// Bound on a generator restricted to the level functions, over the region
/// {f(τ) ≤ v + ε for (f, v) ∈ F^q}.
#[derive(Clone, Debug)]
pub struct LevelBound {
    pub pair: GenPair,
    /// sup of log f|_Λ over the region (None: unbounded)
    pub log_sup: Option<f64>,
    /// inf of log f|_Λ for nonzero-valued τ-only rows outside the zero pattern
    pub log_inf: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BoundednessReport {
    pub rows: Vec<LevelBound>,
    pub constant: Option<f64>,
}

fn region_constraints(fq: &GenSet, m: usize, xi: &[f64], eps: f64) -> Vec<Constraint> {
    fq.iter()
        .filter(|p| !p.f.is_one())
        .map(|p| {
            let v = p.v.eval(|k| xi.get(k - 1).copied().unwrap_or(0.0));
            let mut c = tau_vector(&p.f, m);
            c.push(Q::zero());
            Constraint::new(c, Rel::Le, from_f64((v + eps).ln()))
        })
        .collect()
}

/// sup over the region of max over clauses of min of linear forms (exact LP per clause).
fn dnf_sup(dnf: &Dnf, base: &[Constraint], m: usize, sign: i32) -> Option<Q> {
    let mut best: Option<Q> = None;
    for clause in &dnf.clauses {
        let mut cons = base.to_vec();
        for lin in clause {
            // t ≤ sign·lin·x   ⇔   −sign·lin·x + t ≤ 0
            let mut c: Vec<Q> = (0..m)
                .map(|k| {
                    let idx = dnf.vars.iter().position(|v| *v == VarId::Tau(k + 1));
                    idx.map(|i| -lin[i].clone() * Q::from_integer(sign.into())).unwrap_or_else(Q::zero)
                })
                .collect();
            c.push(Q::one());
            cons.push(Constraint::new(c, Rel::Le, Q::zero()));
        }
        let mut obj = vec![Q::zero(); m + 1];
        obj[m] = Q::one();
        match lp::maximize_free(m + 1, &cons, &obj) {
            LpOutcome::Optimal { value, .. } => {
                if best.as_ref().is_none_or(|b| value > *b) {
                    best = Some(value);
                }
            }
            LpOutcome::Unbounded => return None,
            LpOutcome::Infeasible => {}
        }
    }
    best
}

/// g|_Λ: substitute λ_j ↦ ρ_{Λ,j}.
pub fn restricted_to_levels(f: &Monomial, levels: &LevelFamily) -> LevelExpr {
    LevelExpr::mono(f.clone()).substitute(&|v: &VarId| match v {
        VarId::Lambda(j) => levels.rho_lambda.get(j - 1).cloned(),
        _ => None,
    })
}

pub fn level_boundedness(pr: &PipelineResult, levels: &LevelFamily, m: usize, eps: f64) -> BoundednessReport {
    let xi = xi_norms_of(m, &pr.pattern);
    let base = region_constraints(&pr.fq, m, &xi, eps);
    let vars: Vec<VarId> = (1..=m).map(VarId::Tau).collect();
    let mut rows = Vec::new();
    let mut constant: Option<f64> = Some(1.0);
    for pair in &pr.g {
        let e = restricted_to_levels(&pair.f, levels);
        let dnf = Dnf::of(&e, &vars);
        let sup = dnf_sup(&dnf, &base, m, 1).map(|q| to_f64(&q));
        let mut inf = None;
        let is_psi = !pair.v.is_zero() && !pair.f.has_lambda() && pr.derived.psi.values().any(|p| *p == pair.f);
        if is_psi && pair.f.vars().all(|v| !matches!(v, VarId::Tau(k) if pr.pattern.is_zero(*k))) {
            inf = dnf_sup(&Dnf::of(&LevelExpr::mono(pair.f.inv()), &vars), &base, m, 1).map(|q| -to_f64(&q));
        }
        match (&mut constant, sup) {
            (Some(c), Some(s)) => *c = c.max(s.exp()),
            _ => constant = None,
        }
        if let (Some(c), Some(i)) = (&mut constant, inf) {
            *c = c.max((-i).exp());
        }
        rows.push(LevelBound { pair: pair.clone(), log_sup: sup, log_inf: inf });
    }
    BoundednessReport { rows, constant }
}

/// Largest ratio of g|_Λ to the reported constant over sampled region points (≤ 1 expected).
pub fn level_boundedness_violations(pr: &PipelineResult, levels: &LevelFamily, m: usize, eps: f64, report: &BoundednessReport, samples: usize, seed: u64) -> Result<usize, MulticoneError> {
    let c = report.constant.ok_or(MulticoneError::Empty)?;
    let opts = BuildOptions { one_sided: true, check_equivalence: false, has_x0: false };
    let sys = MulticoneSystem::from_pairs(&pr.fq, m, &pr.pattern, Vec::new(), &opts);
    let pts = sample_points(&sys, &EpsSpec::Single(eps), samples, seed)?;
    let mut bad = 0;
    let exprs: Vec<(LevelExpr, bool)> = report.rows.iter().map(|r| (restricted_to_levels(&r.pair.f, levels), r.log_inf.is_some())).collect();
    for pt in &pts {
        let logs: Vec<f64> = pt.norms.iter().map(|x| x.ln()).collect();
        for (e, two) in &exprs {
            let l = e.eval_log(&|k| logs[k - 1]);
            if l > c.ln() + 1e-9 || (*two && l < -c.ln() - 1e-9) {
                bad += 1;
            }
        }
    }
    Ok(bad)
}

// ---------------------------------------------------------------- normal-cone probe

/// Z ⊂ ℝ^m as the common zero set of polynomial equations in the block coordinates x_1..x_m
/// (one real coordinate per block).
#[derive(Clone, Debug)]
pub struct ZSet {
    pub equations: Vec<Poly>,
    pub dim: usize,
}

impl ZSet {
    /// "x3^2 = x1*x2; x4 = 0" (equations separated by ';' or ',').
    pub fn parse(s: &str, dim: usize) -> Result<ZSet, String> {
        let mut equations = Vec::new();
        for part in s.split([';', ',']).map(str::trim).filter(|p| !p.is_empty()) {
            let sides: Vec<&str> = part.split('=').collect();
            let eq = match sides.as_slice() {
                [l, r] => Poly::parse(l)?.sub(&Poly::parse(r)?),
                [l] => Poly::parse(l)?,
                _ => return Err(format!("cannot read equation {part:?}")),
            };
            if eq.nvars() > dim {
                return Err(format!("equation {part:?} uses a coordinate beyond x{dim}"));
            }
            equations.push(eq);
        }
        Ok(ZSet { equations, dim })
    }

    /// Samples a point of Z in the box |x| < r: free coordinates log-uniform in (r·1e-8, r)
    /// with random signs, each equation solved for its highest unassigned coordinate.
    fn sample(&self, r: f64, rng: &mut ChaCha8Rng) -> Option<Vec<f64>> {
        let mut solve_for = Vec::new();
        let mut assigned = BTreeSet::new();
        for eq in &self.equations {
            let var = (1..=eq.nvars()).rev().find(|i| !assigned.contains(i) && eq.terms.keys().any(|e| Poly::exponent(e, *i) > 0));
            if let Some(v) = var {
                assigned.insert(v);
            }
            solve_for.push(var);
        }
        let mut x: Vec<f64> = (1..=self.dim)
            .map(|_| {
                let mag = r * (-rng.gen_range(0.0..1.0) * 8.0 * std::f64::consts::LN_10).exp();
                if rng.gen_bool(0.5) {
                    mag
                } else {
                    -mag
                }
            })
            .collect();
        for (eq, var) in self.equations.iter().zip(&solve_for) {
            match var {
                None => {
                    if eq.eval(&x).abs() > 1e-12 {
                        return None;
                    }
                }
                Some(v) => {
                    let coeffs = eq.univariate(*v, &x);
                    match real_roots(&coeffs, -r, r, 400) {
                        None => {}
                        Some(roots) if roots.is_empty() => return None,
                        Some(roots) => x[v - 1] = roots[rng.gen_range(0..roots.len())],
                    }
                }
            }
        }
        Some(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProbeVerdict {
    InCone,
    NotInCone { eps: f64, radius: f64 },
    Inconclusive,
}

/// Numerical oracle for the normal cone: does Z meet every multicone near the base point?
/// Block directions are taken as +1 on each (one-dimensional real) block.
pub fn normal_cone_probe(sys: &MulticoneSystem, z: &ZSet, eps_schedule: &[f64], ball_schedule: &[f64], samples: usize, seed: u64) -> ProbeVerdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for &eps in eps_schedule {
        for &r in ball_schedule {
            let (mut valid, mut found) = (0usize, false);
            for _ in 0..samples {
                let Some(x) = z.sample(r, &mut rng) else { continue };
                if x.iter().any(|v| v.abs() >= r) {
                    continue;
                }
                valid += 1;
                let pt = ConePoint {
                    norms: x.iter().map(|v| v.abs()).collect(),
                    angles: x.iter().map(|v| if *v > 0.0 { 0.0 } else { std::f64::consts::PI }).collect(),
                    x0: 0.0,
                };
                if sys.member(&pt, &EpsSpec::Single(eps)) {
                    found = true;
                    break;
                }
            }
            if !found {
                return if valid * 10 >= samples { ProbeVerdict::NotInCone { eps, radius: r } } else { ProbeVerdict::Inconclusive };
            }
        }
    }
    ProbeVerdict::InCone
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::rank_and_normalize;
    use crate::semigroup::run_pipeline;

    fn system(rows: &[&[i64]], zeros: &[usize]) -> (DeformationData, PipelineResult, MulticoneSystem) {
        let d = DeformationData::from_ints(rows).unwrap();
        let p = PointPattern::zeros(zeros);
        let r = rank_and_normalize(&d, &p).unwrap();
        let pr = run_pipeline(&d, &r, &p).unwrap();
        let s = build_multicone(&d, &pr, &BuildOptions::default()).unwrap();
        (d, pr, s)
    }

    fn expect(sys: &MulticoneSystem, lines: &[&str]) {
        let c = compare_display(sys, &parse_display(lines).unwrap());
        assert!(c.ok(), "{c:?}\nsystem: {:?}", sys.render());
    }

    #[test]
    fn displays_of_small_systems() {
        let (_, _, s) = system(&[&[1, 1], &[0, 1]], &[]);
        expect(&s, &["|z1| < ε", "|z2| < ε|z1|"]);
        let (_, _, s) = system(&[&[3, 2], &[1, 1]], &[]);
        expect(&s, &["|z1| < ε|z2|", "|z2|^3 < ε|z1|^2"]);
        assert!(s.render().contains(&"|z2|^3 < ε|z1|^2".to_string()), "{:?}", s.render());
        let (_, _, s) = system(&[&[1, 0, 1], &[0, 1, 1]], &[1, 2]);
        expect(&s, &["|z1| < ε", "|z2| < ε", "|z1||z2| < ε|z3|"]);
        let (_, _, s) = system(&[&[1, 1, 0], &[0, 1, 1]], &[]);
        expect(&s, &["|z1| < ε", "|z2| < ε|z1|", "(n - ε)|z2| < |z1||z3| < (n + ε)|z2|"]);
        // a wrong display is caught
        let c = compare_display(&s, &parse_display(&["|z1| < ε", "|z2| < ε|z1|"]).unwrap());
        assert!(!c.ok());
    }

    #[test]
    fn membership_boundaries() {
        let (_, _, s) = system(&[&[3, 2], &[1, 1]], &[]);
        let eps = EpsSpec::Single(0.1);
        assert!(s.member(&ConePoint::from_norms(&[5e-6, 1e-4]), &eps));
        assert!(!s.member(&ConePoint::from_norms(&[5e-4, 1e-2]), &eps));
        assert!(!s.member(&ConePoint::from_norms(&[2e-5, 1e-4]), &eps));
        let (_, _, s) = system(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1]], &[]);
        assert!(!s.member(&ConePoint::from_norms(&[0.01, 0.01, 0.1]), &eps));
    }

    #[test]
    fn closure_adds_missing_bounds() {
        let (d, pr, _) = system(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 1]], &[]);
        let c = closure(&pr, d.m, DEFAULT_CLOSURE_DEGREE).unwrap();
        assert!(c.k.contains(&GenPair::zero(Monomial::tau(1))));
        assert!(c.k.contains(&GenPair::zero(Monomial::tau(2))));
        let bad = ConePoint::from_norms(&[0.0, 0.2, 0.0]);
        assert!(!c.member(&bad, 0.1));
        // the naive ≤ system admits it
        let naive = pr.fq.iter().all(|p| holds(&p.f, &bad.norms, 0.0, 0.1, false));
        assert!(naive);
        let majima = closure(&system(&[&[1, 0], &[0, 1]], &[]).1, 2, 4).unwrap();
        assert_eq!(majima.k.len(), 2);
        assert!(!majima.truncated);
    }

    #[test]
    fn projection_pairs_rows() {
        let (_, _, s) = system(&[&[1, 1], &[0, 1]], &[]);
        let p = project(&s, 2, true).unwrap();
        assert_eq!(p.render(), vec!["|z1| < ε".to_string()]);
        let p = project(&s, 1, false).unwrap();
        assert_eq!(p.render(), vec!["|z2| < ε^2".to_string()]);
        assert!(p.member(&ConePoint::from_norms(&[0.0, 0.009]), &EpsSpec::Single(0.1)));
    }

    #[test]
    fn sampler_and_contraction() {
        let (_, _, s) = system(&[&[3, 2], &[1, 1]], &[]);
        let eps = EpsSpec::Single(0.1);
        let pts = sample_points(&s, &eps, 200, 7).unwrap();
        assert!(pts.iter().all(|p| s.member(p, &eps)));
        assert!(contraction_stable_check(&s, &eps, 500, 3).unwrap().all_pass());
        let (_, _, s) = system(&[&[1, 1, 0], &[0, 1, 1]], &[]);
        assert!(contraction_stable_check(&s, &eps, 500, 4).unwrap().all_pass());
    }

    #[test]
    fn normal_cone_probe_cases() {
        let (_, _, s) = system(&[&[1, 0, 1], &[0, 1, 1]], &[1, 2]);
        let eps = [0.1, 0.01];
        let balls = [0.1, 0.01];
        let z = ZSet::parse("x3^2 = x1*x2", 3).unwrap();
        assert_eq!(normal_cone_probe(&s, &z, &eps, &balls, 4000, 1), ProbeVerdict::InCone);
        let z = ZSet::parse("x3 = x1*x2", 3).unwrap();
        assert!(matches!(normal_cone_probe(&s, &z, &eps, &balls, 4000, 1), ProbeVerdict::NotInCone { .. }));
        let z = ZSet::parse("x3 = 0", 3).unwrap();
        assert!(matches!(normal_cone_probe(&s, &z, &eps, &balls, 4000, 1), ProbeVerdict::NotInCone { .. }));
    }

    #[test]
    fn generators_bounded_on_levels() {
        use crate::levels::build_levels;
        for (rows, zeros) in [
            (&[&[1, 0, 1][..], &[0, 1, 1], &[0, 0, 1], &[1, 1, 1]][..], &[][..]),
            (&[&[1, 0, 0][..], &[0, 1, 0], &[0, 0, 1], &[1, 0, 1], &[0, 1, 1]][..], &[][..]),
        ] {
            let d = DeformationData::from_ints(rows).unwrap();
            let p = PointPattern::zeros(zeros);
            let r = rank_and_normalize(&d, &p).unwrap();
            let pr = run_pipeline(&d, &r, &p).unwrap();
            let lv = build_levels(&d, &r, &p).unwrap();
            let rep = level_boundedness(&pr, &lv, d.m, 0.1);
            assert!(rep.constant.is_some(), "{rep:?}");
            assert_eq!(level_boundedness_violations(&pr, &lv, d.m, 0.1, &rep, 500, 11).unwrap(), 0);
        }
    }
}
