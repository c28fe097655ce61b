//! Sparse polynomials with exact rational coefficients over flat coordinates
//! x_1..x_n (blocks are a grouping of coordinates, see `DeformationData::block_dims`).

use crate::rat::{fmt_q, parse_q, to_f64, Q};
use num_traits::{One, Signed, Zero};
use std::collections::BTreeMap;
use std::fmt;

/// Exponent vector; index i ↔ coordinate i+1. Trailing zeros are trimmed.
pub type Exps = Vec<u32>;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Poly {
    pub terms: BTreeMap<Exps, Q>,
}

fn trim(mut e: Exps) -> Exps {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

pub fn factorial(n: u32) -> Q {
    (1..=n as i64).map(crate::rat::q).fold(Q::one(), |a, b| a * b)
}

/// α! = Π α_i!
pub fn multi_factorial(e: &[u32]) -> Q {
    e.iter().map(|&k| factorial(k)).fold(Q::one(), |a, b| a * b)
}

impl Poly {
    pub fn zero() -> Poly {
        Poly::default()
    }

    pub fn constant(c: Q) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Vec::new(), c);
        p
    }

    pub fn monomial(e: Exps, c: Q) -> Poly {
        let mut p = Poly::zero();
        p.add_term(e, c);
        p
    }

    /// x_i (1-based).
    pub fn var(i: usize) -> Poly {
        let mut e = vec![0; i];
        e[i - 1] = 1;
        Poly::monomial(e, Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, e: Exps, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = trim(e);
        let entry = self.terms.entry(e.clone()).or_insert_with(Q::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&e);
        }
    }

    pub fn add(&self, o: &Poly) -> Poly {
        let mut r = self.clone();
        for (e, c) in &o.terms {
            r.add_term(e.clone(), c.clone());
        }
        r
    }

    pub fn scale(&self, s: &Q) -> Poly {
        let mut r = Poly::zero();
        for (e, c) in &self.terms {
            r.add_term(e.clone(), c * s);
        }
        r
    }

    pub fn sub(&self, o: &Poly) -> Poly {
        self.add(&o.scale(&-Q::one()))
    }

    pub fn mul(&self, o: &Poly) -> Poly {
        let mut r = Poly::zero();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &o.terms {
                let n = e1.len().max(e2.len());
                let e = (0..n).map(|i| e1.get(i).unwrap_or(&0) + e2.get(i).unwrap_or(&0)).collect();
                r.add_term(e, c1 * c2);
            }
        }
        r
    }

    pub fn pow(&self, k: u32) -> Poly {
        (0..k).fold(Poly::constant(Q::one()), |acc, _| acc.mul(self))
    }

    /// Number of coordinates touched (max index).
    pub fn nvars(&self) -> usize {
        self.terms.keys().map(|e| e.len()).max().unwrap_or(0)
    }

    pub fn exponent(e: &Exps, i: usize) -> u32 {
        e.get(i - 1).copied().unwrap_or(0)
    }

    /// ∂/∂x_i
    pub fn derivative(&self, i: usize) -> Poly {
        let mut r = Poly::zero();
        for (e, c) in &self.terms {
            let k = Poly::exponent(e, i);
            if k > 0 {
                let mut e2 = e.clone();
                e2[i - 1] -= 1;
                r.add_term(e2, c * Q::from_integer(k.into()));
            }
        }
        r
    }

    /// ∂^α
    pub fn derivative_multi(&self, alpha: &[u32]) -> Poly {
        let mut r = self.clone();
        for (i, &k) in alpha.iter().enumerate() {
            for _ in 0..k {
                r = r.derivative(i + 1);
            }
        }
        r
    }

    /// Sets x_i = 0 for every i in `coords`.
    pub fn restrict_zero(&self, coords: &[usize]) -> Poly {
        let mut r = Poly::zero();
        for (e, c) in &self.terms {
            if coords.iter().all(|&i| Poly::exponent(e, i) == 0) {
                r.add_term(e.clone(), c.clone());
            }
        }
        r
    }

    pub fn filter(&self, keep: impl Fn(&Exps) -> bool) -> Poly {
        let mut r = Poly::zero();
        for (e, c) in &self.terms {
            if keep(e) {
                r.add_term(e.clone(), c.clone());
            }
        }
        r
    }

    /// Substitutes x_i ↦ subs[i-1] (missing entries keep x_i).
    pub fn compose(&self, subs: &[Poly]) -> Poly {
        let mut r = Poly::zero();
        for (e, c) in &self.terms {
            let mut t = Poly::constant(c.clone());
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                let s = subs.get(i).cloned().unwrap_or_else(|| Poly::var(i + 1));
                t = t.mul(&s.pow(k));
            }
            r = r.add(&t);
        }
        r
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| to_f64(c) * e.iter().enumerate().map(|(i, &k)| x.get(i).copied().unwrap_or(0.0).powi(k as i32)).product::<f64>())
            .sum()
    }

    /// Univariate coefficients in x_i after fixing every other coordinate numerically.
    pub fn univariate(&self, i: usize, x: &[f64]) -> Vec<f64> {
        let deg = self.terms.keys().map(|e| Poly::exponent(e, i)).max().unwrap_or(0) as usize;
        let mut coeffs = vec![0.0; deg + 1];
        for (e, c) in &self.terms {
            let mut v = to_f64(c);
            for (j, &k) in e.iter().enumerate() {
                if j + 1 != i {
                    v *= x.get(j).copied().unwrap_or(0.0).powi(k as i32);
                }
            }
            coeffs[Poly::exponent(e, i) as usize] += v;
        }
        coeffs
    }

    pub fn parse(s: &str) -> Result<Poly, String> {
        let mut p = PolyParser { c: s.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0 };
        let r = p.sum()?;
        if p.pos != p.c.len() {
            return Err(format!("unexpected '{}' in polynomial {s:?}", p.c[p.pos]));
        }
        Ok(r)
    }

    pub fn render(&self) -> String {
        self.render_with("z")
    }

    pub fn render_with(&self, var: &str) -> String {
        if self.terms.is_empty() {
            return "0".into();
        }
        let mut out = String::new();
        for (n, (e, c)) in self.terms.iter().enumerate() {
            let mono: Vec<String> = e
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("{var}{}", i + 1) } else { format!("{var}{}^{k}", i + 1) })
                .collect();
            let neg = c.is_negative();
            let a = c.abs();
            if n > 0 {
                out.push_str(if neg { " - " } else { " + " });
            } else if neg {
                out.push('-');
            }
            match (mono.is_empty(), a.is_one()) {
                (true, _) => out.push_str(&fmt_q(&a)),
                (false, true) => out.push_str(&mono.join("*")),
                (false, false) => out.push_str(&format!("{}*{}", fmt_q(&a), mono.join("*"))),
            }
        }
        out
    }
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

struct PolyParser {
    c: Vec<char>,
    pos: usize,
}

impl PolyParser {
    fn peek(&self) -> Option<char> {
        self.c.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<Poly, String> {
        let mut acc = Poly::zero();
        let mut sign = Q::one();
        if let Some(c @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            if c == '-' {
                sign = -sign;
            }
        }
        loop {
            let t = self.product()?;
            acc = acc.add(&t.scale(&sign));
            match self.peek() {
                Some('+') => sign = Q::one(),
                Some('-') => sign = -Q::one(),
                _ => return Ok(acc),
            }
            self.pos += 1;
        }
    }

    fn product(&mut self) -> Result<Poly, String> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some('/') => {
                    self.pos += 1;
                    let d = self.number()?;
                    if d.is_zero() {
                        return Err("division by zero".into());
                    }
                    acc = acc.scale(&(Q::one() / d));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Poly, String> {
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            let k = self.number()?;
            if !k.is_integer() || k.is_negative() {
                return Err(format!("exponent must be a non-negative integer, got {}", fmt_q(&k)));
            }
            let k: u32 = k.to_integer().try_into().map_err(|_| "exponent too large".to_string())?;
            return Ok(base.pow(k));
        }
        Ok(base)
    }

    fn number(&mut self) -> Result<Q, String> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(format!("expected a number at position {start}"));
        }
        parse_q(&self.c[start..self.pos].iter().collect::<String>())
    }

    fn atom(&mut self) -> Result<Poly, String> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let r = self.sum()?;
                if self.peek() != Some(')') {
                    return Err("missing ')'".into());
                }
                self.pos += 1;
                Ok(r)
            }
            Some(c) if c.is_ascii_digit() => Ok(Poly::constant(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() => {
                while matches!(self.peek(), Some(c) if c.is_ascii_alphabetic()) {
                    self.pos += 1;
                }
                let start = self.pos;
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
                let idx: usize = self.c[start..self.pos].iter().collect::<String>().parse().map_err(|_| "variable needs an index, e.g. z1".to_string())?;
                if idx == 0 {
                    return Err("variable indices start at 1".into());
                }
                Ok(Poly::var(idx))
            }
            other => Err(format!("unexpected {other:?} in polynomial")),
        }
    }
}

/// Real roots of Σ c_i t^i in [lo, hi] by sign changes on a grid plus bisection.
/// Exact zeros at grid points are reported too; an identically-zero polynomial yields None.
pub fn real_roots(coeffs: &[f64], lo: f64, hi: f64, grid: usize) -> Option<Vec<f64>> {
    if coeffs.iter().all(|c| *c == 0.0) {
        return None;
    }
    let f = |t: f64| coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c);
    let mut roots = Vec::new();
    let step = (hi - lo) / grid as f64;
    let mut prev = lo;
    let mut fp = f(prev);
    if fp == 0.0 {
        roots.push(prev);
    }
    for i in 1..=grid {
        let t = lo + step * i as f64;
        let ft = f(t);
        if ft == 0.0 {
            roots.push(t);
        } else if fp != 0.0 && fp.signum() != ft.signum() {
            let (mut a, mut b, mut fa) = (prev, t, fp);
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                let fm = f(m);
                if fm == 0.0 || (b - a).abs() < 1e-300 {
                    a = m;
                    b = m;
                    break;
                }
                if fm.signum() == fa.signum() {
                    a = m;
                    fa = fm;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = t;
        fp = ft;
    }
    Some(roots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    #[test]
    fn parse_render_and_arithmetic() {
        let p = Poly::parse("z1*z2 + 1/2*z1^2 - 3").unwrap();
        assert_eq!(p.terms.len(), 3);
        assert_eq!(p.terms[&vec![2]], qf(1, 2));
        assert_eq!(p.derivative(1), Poly::parse("z2 + z1").unwrap());
        assert_eq!(Poly::parse("(x1+x2)^2").unwrap(), Poly::parse("x1^2 + 2*x1*x2 + x2^2").unwrap());
        assert_eq!(p.restrict_zero(&[2]), Poly::parse("1/2*z1^2 - 3").unwrap());
        assert!(Poly::parse("z0").is_err());
        assert_eq!(Poly::parse(&p.render()).unwrap(), p);
        assert_eq!(multi_factorial(&[3, 2]), q(12));
    }

    #[test]
    fn compose_and_roots() {
        let f = Poly::parse("x1^3*x2").unwrap();
        let g = f.compose(&[Poly::parse("x1*x2").unwrap(), Poly::var(2)]);
        assert_eq!(g, Poly::parse("x1^3*x2^4").unwrap());
        let r = real_roots(&[-2.0, 0.0, 1.0], -3.0, 3.0, 1000).unwrap();
        assert_eq!(r.len(), 2);
        assert!((r[1] - 2f64.sqrt()).abs() < 1e-12);
        assert!(real_roots(&[0.0], 0.0, 1.0, 10).is_none());
    }
}
