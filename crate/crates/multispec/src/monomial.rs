//! Rational-exponent monomials in τ, λ and |ξ| variables, limit values, and
//! generator pairs (f, v) with their semigroup product.

use crate::rat::{fmt_q, parse_q, to_f64, Q};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Map, Value as Json};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum VarId {
    Tau(usize),
    Lambda(usize),
    XiNorm(usize),
}

impl VarId {
    pub fn key(&self) -> String {
        match self {
            VarId::Tau(k) => format!("tau:{k}"),
            VarId::Lambda(j) => format!("lambda:{j}"),
            VarId::XiNorm(k) => format!("xi:{k}"),
        }
    }

    pub fn parse_key(s: &str) -> Result<VarId, String> {
        let (kind, idx) = s.split_once(':').ok_or_else(|| format!("bad variable key {s:?}"))?;
        let idx: usize = idx.parse().map_err(|_| format!("bad variable index in {s:?}"))?;
        if idx == 0 {
            return Err(format!("variable indices start at 1: {s:?}"));
        }
        match kind {
            "tau" => Ok(VarId::Tau(idx)),
            "lambda" => Ok(VarId::Lambda(idx)),
            "xi" => Ok(VarId::XiNorm(idx)),
            _ => Err(format!("unknown variable kind in {s:?}")),
        }
    }

    fn short(&self) -> String {
        match self {
            VarId::Tau(k) => format!("t{k}"),
            VarId::Lambda(j) => format!("l{j}"),
            VarId::XiNorm(k) => format!("x{k}"),
        }
    }
}

/// A monomial with exact rational exponents; zero exponents are never stored.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial {
    exps: BTreeMap<VarId, Q>,
}

impl Monomial {
    pub fn one() -> Self {
        Monomial::default()
    }

    pub fn var(v: VarId) -> Self {
        Monomial::from_pairs([(v, Q::one())])
    }

    pub fn tau(k: usize) -> Self {
        Monomial::var(VarId::Tau(k))
    }

    pub fn lambda(j: usize) -> Self {
        Monomial::var(VarId::Lambda(j))
    }

    pub fn xi(k: usize) -> Self {
        Monomial::var(VarId::XiNorm(k))
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (VarId, Q)>) -> Self {
        let mut m = Monomial::one();
        for (v, e) in pairs {
            m.add_exp(v, &e);
        }
        m
    }

    /// τ-monomial from integer exponents, index 1-based: `taus(&[(1, 1), (2, -1)])`.
    pub fn taus(exps: &[(usize, i64)]) -> Self {
        Monomial::from_pairs(exps.iter().map(|&(k, e)| (VarId::Tau(k), crate::rat::q(e))))
    }

    fn add_exp(&mut self, v: VarId, e: &Q) {
        if e.is_zero() {
            return;
        }
        let slot = self.exps.entry(v).or_insert_with(Q::zero);
        *slot += e;
        if slot.is_zero() {
            self.exps.remove(&v);
        }
    }

    pub fn exponent(&self, v: VarId) -> Q {
        self.exps.get(&v).cloned().unwrap_or_else(Q::zero)
    }

    pub fn exps(&self) -> &BTreeMap<VarId, Q> {
        &self.exps
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut m = self.clone();
        for (v, e) in &other.exps {
            m.add_exp(*v, e);
        }
        m
    }

    pub fn pow(&self, r: &Q) -> Monomial {
        if r.is_zero() {
            return Monomial::one();
        }
        Monomial { exps: self.exps.iter().map(|(v, e)| (*v, e * r)).collect() }
    }

    pub fn inv(&self) -> Monomial {
        self.pow(&-Q::one())
    }

    pub fn div(&self, other: &Monomial) -> Monomial {
        self.mul(&other.inv())
    }

    pub fn has_lambda(&self) -> bool {
        self.exps.keys().any(|v| matches!(v, VarId::Lambda(_)))
    }

    pub fn vars(&self) -> impl Iterator<Item = &VarId> {
        self.exps.keys()
    }

    /// Drops every variable for which `keep` is false (sets it to 1).
    pub fn restrict(&self, keep: impl Fn(&VarId) -> bool) -> Monomial {
        Monomial { exps: self.exps.iter().filter(|(v, _)| keep(v)).map(|(v, e)| (*v, e.clone())).collect() }
    }

    /// Replaces each variable by a monomial raised to the variable's exponent.
    pub fn substitute(&self, f: impl Fn(&VarId) -> Option<Monomial>) -> Monomial {
        let mut out = Monomial::one();
        for (v, e) in &self.exps {
            match f(v) {
                Some(m) => out = out.mul(&m.pow(e)),
                None => out.add_exp(*v, e),
            }
        }
        out
    }

    /// Numeric value; `lookup` supplies each variable's (positive) value.
    pub fn eval(&self, lookup: impl Fn(&VarId) -> f64) -> f64 {
        self.exps.iter().map(|(v, e)| lookup(v).powf(to_f64(e))).product()
    }

    /// Splits into numerator and denominator with non-negative exponents.
    pub fn split(&self) -> (Monomial, Monomial) {
        let num = Monomial { exps: self.exps.iter().filter(|(_, e)| e.is_positive()).map(|(v, e)| (*v, e.clone())).collect() };
        let den = Monomial { exps: self.exps.iter().filter(|(_, e)| e.is_negative()).map(|(v, e)| (*v, -e.clone())).collect() };
        (num, den)
    }

    /// Lcm of exponent denominators.
    pub fn denominator(&self) -> num_bigint::BigInt {
        crate::rat::lcm_denoms(self.exps.values())
    }

    /// Text form "t1^(3/2)*t3^(-1)"; "1" for the unit monomial.
    pub fn render(&self) -> String {
        if self.exps.is_empty() {
            return "1".into();
        }
        self.exps
            .iter()
            .map(|(v, e)| {
                if e.is_one() {
                    v.short()
                } else if e.is_integer() && e.is_positive() {
                    format!("{}^{}", v.short(), fmt_q(e))
                } else {
                    format!("{}^({})", v.short(), fmt_q(e))
                }
            })
            .collect::<Vec<_>>()
            .join("*")
    }

    /// Fraction form with positive exponents, e.g. "t1*t3/t2" or "t3/(t1*t2)".
    pub fn render_fraction(&self) -> String {
        let (n, d) = self.split();
        let side = |m: &Monomial| -> (String, usize) { (m.render(), m.exps.len()) };
        let (ns, _) = side(&n);
        if d.is_one() {
            return ns;
        }
        let (ds, dl) = side(&d);
        if dl > 1 || ds.contains('^') {
            format!("{ns}/({ds})")
        } else {
            format!("{ns}/{ds}")
        }
    }

    pub fn to_json(&self) -> Json {
        let mut map = Map::new();
        for (v, e) in &self.exps {
            map.insert(v.key(), Json::String(fmt_q(e)));
        }
        Json::Object(map)
    }

    pub fn from_json(j: &Json) -> Result<Monomial, String> {
        let obj = j.as_object().ok_or("monomial must be a JSON object")?;
        let mut m = Monomial::one();
        for (k, v) in obj {
            let e = match v {
                Json::String(s) => parse_q(s)?,
                Json::Number(n) => parse_q(&n.to_string())?,
                _ => return Err(format!("exponent of {k} must be a rational string")),
            };
            m.add_exp(VarId::parse_key(k)?, &e);
        }
        Ok(m)
    }

    /// Parses the text form produced by [`Monomial::render`]; also accepts
    /// "/" and parenthesised groups, e.g. "t3/(t1*t2)".
    pub fn parse(s: &str) -> Result<Monomial, String> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut pos = 0;
        let m = parse_product(&chars, &mut pos)?;
        if pos != chars.len() {
            return Err(format!("trailing input in monomial {s:?}"));
        }
        Ok(m)
    }
}

fn parse_product(c: &[char], pos: &mut usize) -> Result<Monomial, String> {
    let mut m = parse_factor(c, pos)?;
    while *pos < c.len() && (c[*pos] == '*' || c[*pos] == '/') {
        let div = c[*pos] == '/';
        *pos += 1;
        let f = parse_factor(c, pos)?;
        m = if div { m.div(&f) } else { m.mul(&f) };
    }
    Ok(m)
}

fn parse_factor(c: &[char], pos: &mut usize) -> Result<Monomial, String> {
    let base = if c.get(*pos) == Some(&'(') {
        *pos += 1;
        let m = parse_product(c, pos)?;
        if c.get(*pos) != Some(&')') {
            return Err("unbalanced parenthesis in monomial".into());
        }
        *pos += 1;
        m
    } else {
        let start = *pos;
        while *pos < c.len() && c[*pos].is_ascii_alphanumeric() {
            *pos += 1;
        }
        let name: String = c[start..*pos].iter().collect();
        if name == "1" {
            Monomial::one()
        } else {
            let (kind, idx) = name.split_at(name.len().min(1));
            let idx: usize = idx.parse().map_err(|_| format!("bad factor {name:?}"))?;
            match kind {
                "t" => Monomial::tau(idx),
                "l" => Monomial::lambda(idx),
                "x" => Monomial::xi(idx),
                _ => return Err(format!("bad factor {name:?}")),
            }
        }
    };
    if c.get(*pos) != Some(&'^') {
        return Ok(base);
    }
    *pos += 1;
    let exp: String = if c.get(*pos) == Some(&'(') {
        let close = c[*pos..].iter().position(|&x| x == ')').ok_or("unbalanced exponent")? + *pos;
        let e = c[*pos + 1..close].iter().collect();
        *pos = close + 1;
        e
    } else {
        let start = *pos;
        while *pos < c.len() && (c[*pos].is_ascii_digit() || c[*pos] == '-') {
            *pos += 1;
        }
        c[start..*pos].iter().collect()
    };
    Ok(base.pow(&parse_q(&exp)?))
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Limit value of a generator: zero, or a monomial in the |ξ| norms.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Value {
    Zero,
    Xi(Monomial),
}

impl Value {
    pub fn unit() -> Value {
        Value::Xi(Monomial::one())
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Value::Zero)
    }

    pub fn mul(&self, other: &Value) -> Value {
        match (self, other) {
            (Value::Xi(a), Value::Xi(b)) => Value::Xi(a.mul(b)),
            _ => Value::Zero,
        }
    }

    /// v^r for r ≥ 0; Zero^0 is the unit value.
    pub fn pow(&self, r: &Q) -> Value {
        assert!(!r.is_negative(), "negative power of a value");
        match self {
            _ if r.is_zero() => Value::unit(),
            Value::Zero => Value::Zero,
            Value::Xi(m) => Value::Xi(m.pow(r)),
        }
    }

    /// Inverse of a nonzero value.
    pub fn inv(&self) -> Option<Value> {
        match self {
            Value::Zero => None,
            Value::Xi(m) => Some(Value::Xi(m.inv())),
        }
    }

    /// Signed power, defined for nonzero values (or r ≥ 0).
    pub fn powi(&self, r: &Q) -> Option<Value> {
        if r.is_negative() {
            self.inv().map(|v| v.pow(&-r.clone()))
        } else {
            Some(self.pow(r))
        }
    }

    pub fn eval(&self, xi: impl Fn(usize) -> f64) -> f64 {
        match self {
            Value::Zero => 0.0,
            Value::Xi(m) => m.eval(|v| match v {
                VarId::XiNorm(k) => xi(*k),
                _ => f64::NAN,
            }),
        }
    }

    /// "0", "1", "x3", "1/x4" — x_k stands for the norm |ξ_k|.
    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn to_json(&self) -> Json {
        match self {
            Value::Zero => Json::String("0".into()),
            Value::Xi(m) => m.to_json(),
        }
    }

    pub fn from_json(j: &Json) -> Result<Value, String> {
        match j {
            Json::String(s) if s.trim() == "0" => Ok(Value::Zero),
            Json::String(s) if s.trim() == "1" => Ok(Value::unit()),
            Json::Object(_) => {
                let m = Monomial::from_json(j)?;
                if m.vars().any(|v| !matches!(v, VarId::XiNorm(_))) {
                    return Err("value monomials may only use xi variables".into());
                }
                Ok(Value::Xi(m))
            }
            _ => Err(format!("bad value {j}")),
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Zero => f.write_str("0"),
            Value::Xi(m) => f.write_str(&m.render_fraction()),
        }
    }
}

/// A generator pair (f, v).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GenPair {
    pub f: Monomial,
    pub v: Value,
}

impl GenPair {
    pub fn new(f: Monomial, v: Value) -> Self {
        GenPair { f, v }
    }

    pub fn zero(f: Monomial) -> Self {
        GenPair { f, v: Value::Zero }
    }

    pub fn unit() -> Self {
        GenPair { f: Monomial::one(), v: Value::unit() }
    }

    pub fn mul(&self, other: &GenPair) -> GenPair {
        GenPair { f: self.f.mul(&other.f), v: self.v.mul(&other.v) }
    }

    pub fn exponent(&self, v: VarId) -> Q {
        self.f.exponent(v)
    }

    pub fn inverse(&self) -> Option<GenPair> {
        self.v.inv().map(|v| GenPair { f: self.f.inv(), v })
    }

    pub fn render(&self) -> String {
        format!("({}, {})", self.f.render_fraction(), self.v)
    }

    pub fn to_json(&self) -> Json {
        json!({"exponents": self.f.to_json(), "value": self.v.to_json()})
    }

    pub fn from_json(j: &Json) -> Result<GenPair, String> {
        let f = Monomial::from_json(j.get("exponents").ok_or("missing exponents")?)?;
        let v = Value::from_json(j.get("value").ok_or("missing value")?)?;
        Ok(GenPair { f, v })
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum MonomialError {
    #[error("negative power {0} of a generator pair")]
    NegativePower(String),
    #[error("evaluation needs strictly positive inputs; got {0}")]
    NonPositive(String),
    #[error("evaluation input does not cover variable {0}")]
    MissingVariable(String),
}

pub fn mono_mul(a: &Monomial, b: &Monomial) -> Monomial {
    a.mul(b)
}

pub fn pair_pow(p: &GenPair, n: &Q) -> Result<GenPair, MonomialError> {
    if n.is_negative() {
        return Err(MonomialError::NegativePower(fmt_q(n)));
    }
    Ok(GenPair { f: p.f.pow(n), v: p.v.pow(n) })
}

pub fn exponent_of(p: &GenPair, var: VarId) -> Q {
    p.exponent(var)
}

pub type GenSet = BTreeSet<GenPair>;

/// Adds (f⁻¹, v⁻¹) for every pair with nonzero value.
pub fn fraction_closure(a: &GenSet) -> GenSet {
    let mut out = a.clone();
    for p in a {
        if let Some(inv) = p.inverse() {
            out.insert(inv);
        }
    }
    out
}

/// Numeric value of a pair at positive τ (index k-1 ↔ τ_k) and positive ξ norms.
pub fn evaluate(p: &GenPair, tau: &[f64], xi_norms: &[f64]) -> Result<(f64, f64), MonomialError> {
    if let Some(x) = tau.iter().chain(xi_norms).find(|x| !(**x > 0.0)) {
        return Err(MonomialError::NonPositive(x.to_string()));
    }
    for v in p.f.vars() {
        match v {
            VarId::Tau(k) if *k <= tau.len() => {}
            _ => return Err(MonomialError::MissingVariable(v.key())),
        }
    }
    if let Value::Xi(m) = &p.v {
        if let Some(v) = m.vars().find(|v| !matches!(v, VarId::XiNorm(k) if *k <= xi_norms.len())) {
            return Err(MonomialError::MissingVariable(v.key()));
        }
    }
    let f = p.f.eval(|v| match v {
        VarId::Tau(k) => tau[k - 1],
        _ => unreachable!(),
    });
    let v = p.v.eval(|k| xi_norms[k - 1]);
    Ok((f, v))
}

pub fn render_set(s: &GenSet) -> String {
    let items: Vec<String> = s.iter().map(|p| p.render()).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn set_to_json(s: &GenSet) -> Json {
    Json::Array(s.iter().map(|p| p.to_json()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    #[test]
    fn text_and_json_round_trip() {
        let m = Monomial::from_pairs([(VarId::Tau(1), qf(3, 2)), (VarId::Tau(3), q(-1))]);
        assert_eq!(m.render(), "t1^(3/2)*t3^(-1)");
        assert_eq!(Monomial::parse(&m.render()).unwrap(), m);
        assert_eq!(Monomial::parse("t1*t3/t2").unwrap(), Monomial::taus(&[(1, 1), (3, 1), (2, -1)]));
        let p = GenPair::new(m.clone(), Value::Xi(Monomial::xi(3)));
        let j = p.to_json();
        assert_eq!(j["exponents"]["tau:1"], "3/2");
        assert_eq!(j["value"]["xi:3"], "1");
        assert_eq!(GenPair::from_json(&j).unwrap(), p);
        assert_eq!(Monomial::taus(&[(3, 1), (1, -1), (2, -1)]).render_fraction(), "t3/(t1*t2)");
    }

    #[test]
    fn pair_pow_edge_cases() {
        let p = GenPair::zero(Monomial::tau(1));
        assert_eq!(pair_pow(&p, &q(0)).unwrap(), GenPair::unit());
        assert_eq!(pair_pow(&p, &q(2)).unwrap(), GenPair::zero(Monomial::taus(&[(1, 2)])));
        assert!(pair_pow(&p, &q(-1)).is_err());
    }

    #[test]
    fn closure_adds_only_nonzero_inverses() {
        let a: GenSet = [
            GenPair::zero(Monomial::tau(1)),
            GenPair::new(Monomial::taus(&[(3, 1), (1, -1), (2, -1)]), Value::Xi(Monomial::xi(3))),
        ]
        .into();
        let c = fraction_closure(&a);
        assert_eq!(c.len(), 3);
        assert!(c.contains(&GenPair::new(Monomial::taus(&[(1, 1), (2, 1), (3, -1)]), Value::Xi(Monomial::xi(3).inv()))));
        assert_eq!(fraction_closure(&c), c);
    }

    #[test]
    fn evaluation() {
        let p = GenPair::new(Monomial::taus(&[(3, 1), (1, -1), (2, -1)]), Value::Xi(Monomial::xi(3)));
        assert_eq!(evaluate(&p, &[1.0, 1.0, 5.0], &[1.0, 1.0, 5.0]).unwrap(), (5.0, 5.0));
        assert_eq!(evaluate(&GenPair::unit(), &[2.0], &[]).unwrap(), (1.0, 1.0));
        assert!(evaluate(&p, &[0.0, 1.0, 5.0], &[1.0, 1.0, 5.0]).is_err());
        assert_eq!(exponent_of(&p, VarId::Tau(1)), q(-1));
    }
}
