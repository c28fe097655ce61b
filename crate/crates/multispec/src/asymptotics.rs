//! Multi-asymptotic expansions: index sets A_J(N), the truncated block-Taylor
//! polynomials T_J and their inclusion–exclusion sum App, remainder exponents,
//! coefficient-family checks, induced maps on zero sections, the numeric
//! estimate harness and the two-manifold catalog.

use crate::deformation::{rank_and_normalize, sigma_of, DeformationData, DeformationError, PointPattern};
use crate::levels::{build_levels, LevelError, LevelExpr, LevelFamily};
use crate::linalg::Matrix;
use crate::lp::{self, Constraint, LpOutcome, Rel};
use crate::monomial::VarId;
use crate::multicone::{build_multicone, sample_points, BuildOptions, EpsSpec, MulticoneError, MulticoneSystem};
use crate::poly::{multi_factorial, Exps, Poly};
use crate::rat::{fmt_q, parse_q, to_f64, Q};
use crate::semigroup::run_pipeline;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

/// Largest ℓ for which all 2^ℓ − 1 index subsets are enumerated.
pub const MAX_ACTIONS: usize = 8;

#[derive(Debug, thiserror::Error)]
pub enum AsymptoticsError {
    #[error("ℓ = {0} actions exceeds the supported maximum of {MAX_ACTIONS} for subset enumeration")]
    TooManyActions(usize),
    #[error("coefficient f_{{{j}}},{alpha} is missing from the family")]
    MissingCoefficient { j: String, alpha: String },
    #[error("N has {got} entries, expected ℓ = {want}")]
    BadN { got: usize, want: usize },
    #[error("the remainder is not a single monomial in block norms (degenerate level family)")]
    NonMonomialRemainder,
    #[error(transparent)]
    Deformation(#[from] DeformationError),
    #[error(transparent)]
    Level(#[from] LevelError),
    #[error(transparent)]
    Multicone(#[from] MulticoneError),
}

/// Flat coordinate layout: block k (1-based) owns `dims[k-1]` consecutive coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Layout {
    pub dims: Vec<usize>,
    /// coordinate i (0-based) → block (1-based)
    pub block_of: Vec<usize>,
}

impl Layout {
    pub fn of(d: &DeformationData) -> Layout {
        let block_of = d.block_dims.iter().enumerate().flat_map(|(k, &n)| std::iter::repeat(k + 1).take(n)).collect();
        Layout { dims: d.block_dims.clone(), block_of }
    }

    pub fn ncoords(&self) -> usize {
        self.block_of.len()
    }

    /// 1-based coordinate indices of block k.
    pub fn coords(&self, k: usize) -> Vec<usize> {
        (0..self.ncoords()).filter(|&i| self.block_of[i] == k).map(|i| i + 1).collect()
    }

    pub fn coords_of(&self, blocks: &BTreeSet<usize>) -> Vec<usize> {
        (0..self.ncoords()).filter(|&i| blocks.contains(&self.block_of[i])).map(|i| i + 1).collect()
    }

    /// |α^{(k)}| for every block.
    pub fn block_degrees(&self, e: &Exps) -> Vec<u32> {
        let mut out = vec![0; self.dims.len()];
        for (i, &x) in e.iter().enumerate() {
            out[self.block_of[i] - 1] += x;
        }
        out
    }
}

pub fn k_blocks(d: &DeformationData, j: &BTreeSet<usize>) -> BTreeSet<usize> {
    j.iter().flat_map(|&i| d.k_sets[i - 1].iter().copied()).collect()
}

/// All nonempty subsets of {1..ℓ}, ordered by size then lexicographically.
pub fn nonempty_subsets(ell: usize) -> Result<Vec<BTreeSet<usize>>, AsymptoticsError> {
    if ell > MAX_ACTIONS {
        return Err(AsymptoticsError::TooManyActions(ell));
    }
    let mut out: Vec<BTreeSet<usize>> = (1u32..(1 << ell)).map(|mask| (1..=ell).filter(|j| mask & (1 << (j - 1)) != 0).collect()).collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.iter().cmp(b.iter())));
    Ok(out)
}

pub fn render_set(j: &BTreeSet<usize>) -> String {
    j.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn check_n(d: &DeformationData, n: &[u64]) -> Result<(), AsymptoticsError> {
    if n.len() != d.ell {
        return Err(AsymptoticsError::BadN { got: n.len(), want: d.ell });
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    pub j: BTreeSet<usize>,
    pub n: Vec<u64>,
    pub k_blocks: BTreeSet<usize>,
    /// Multi-indices over flat coordinates (trailing zeros trimmed), sorted.
    pub members: Vec<Exps>,
}

impl IndexSet {
    pub fn contains(&self, alpha: &Exps) -> bool {
        self.members.binary_search(alpha).is_ok()
    }
}

/// A_J(N): α supported on the blocks K_J with σ_A Σ_k a_jk|α^{(k)}| < n_j for every j ∈ J.
pub fn index_set(d: &DeformationData, j: &BTreeSet<usize>, n: &[u64]) -> IndexSet {
    let sigma = sigma_of(&d.a);
    let layout = Layout::of(d);
    let kb: Vec<usize> = k_blocks(d, j).into_iter().collect();
    let rows: Vec<usize> = j.iter().copied().collect();
    let bound: Vec<Q> = rows.iter().map(|&r| Q::from_integer(n[r - 1].into())).collect();
    // block degree vectors
    let mut degs: Vec<Vec<u32>> = Vec::new();
    let mut cur = vec![0u32; kb.len()];
    let mut acc = vec![Q::zero(); rows.len()];
    enumerate_degrees(d, &sigma, &kb, &rows, &bound, 0, &mut cur, &mut acc, &mut degs);
    let mut members = Vec::new();
    for dv in degs {
        let mut partial: Vec<Vec<u32>> = vec![vec![0; layout.ncoords()]];
        for (bi, &k) in kb.iter().enumerate() {
            let coords = layout.coords(k);
            let mut next = Vec::new();
            for base in &partial {
                for comp in compositions(dv[bi], coords.len()) {
                    let mut e = base.clone();
                    for (c, x) in coords.iter().zip(comp) {
                        e[c - 1] = x;
                    }
                    next.push(e);
                }
            }
            partial = next;
        }
        members.extend(partial.into_iter().map(trim));
    }
    members.sort();
    members.dedup();
    IndexSet { j: j.clone(), n: n.to_vec(), k_blocks: kb.into_iter().collect(), members }
}

#[allow(clippy::too_many_arguments)]
fn enumerate_degrees(d: &DeformationData, sigma: &Q, kb: &[usize], rows: &[usize], bound: &[Q], at: usize, cur: &mut Vec<u32>, acc: &mut Vec<Q>, out: &mut Vec<Vec<u32>>) {
    let ok = |acc: &[Q]| acc.iter().zip(bound).all(|(w, b)| &(w * sigma) < b);
    if at == kb.len() {
        if ok(acc) {
            out.push(cur.clone());
        }
        return;
    }
    let k = kb[at];
    let col: Vec<Q> = rows.iter().map(|&r| d.entry(r, k).clone()).collect();
    let grows = col.iter().any(|a| a.is_positive());
    let mut delta = 0u32;
    loop {
        let trial: Vec<Q> = acc.iter().zip(&col).map(|(w, a)| w + a * Q::from_integer(delta.into())).collect();
        if !ok(&trial) {
            break;
        }
        cur[at] = delta;
        let saved = std::mem::replace(acc, trial);
        enumerate_degrees(d, sigma, kb, rows, bound, at + 1, cur, acc, out);
        *acc = saved;
        if !grows {
            break;
        }
        delta += 1;
    }
    cur[at] = 0;
}

fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn trim(mut e: Exps) -> Exps {
    while e.last() == Some(&0) {
        e.pop();
    }
    e
}

fn coeff_text(c: &Q) -> String {
    if c.is_one() {
        String::new()
    } else if c.is_integer() {
        fmt_q(c)
    } else {
        format!("({})", fmt_q(c))
    }
}

/// Display form of the A_J(N) constraint of row j, e.g. "3α1 + 2α2 < n1" or "α1 + (1/2)α2 < n1/2".
pub fn constraint_text(d: &DeformationData, j: usize) -> String {
    let sigma = sigma_of(&d.a);
    let lhs: Vec<String> = (1..=d.m).filter(|&k| !d.entry(j, k).is_zero()).map(|k| format!("{}α{k}", coeff_text(d.entry(j, k)))).collect();
    let rhs = if sigma.is_one() { format!("n{j}") } else { format!("n{j}/{}", fmt_q(&sigma)) };
    format!("{} < {rhs}", lhs.join(" + "))
}

pub fn constraints_for(d: &DeformationData, j: &BTreeSet<usize>) -> Vec<String> {
    j.iter().map(|&r| constraint_text(d, r)).collect()
}

/// T_J^{<N}(f) by the index-set route: Σ_{α∈A_J(N)} (∂^α f)|_{Z_J} z^α / α!.
pub fn taylor_by_index(d: &DeformationData, j: &BTreeSet<usize>, n: &[u64], f: &Poly) -> Poly {
    let layout = Layout::of(d);
    let is = index_set(d, j, n);
    let zero_coords = layout.coords_of(&is.k_blocks);
    let mut out = Poly::zero();
    for alpha in &is.members {
        let coeff = f.derivative_multi(alpha).restrict_zero(&zero_coords);
        if coeff.is_zero() {
            continue;
        }
        let scale = Q::one() / multi_factorial(alpha);
        out = out.add(&coeff.mul(&Poly::monomial(alpha.clone(), scale)));
    }
    out
}

/// T_J^{<N}(f) by the λ-derivative route: substitute z^{(k)} ↦ Π_{j∈J} λ_j^{σ_A a_jk} z^{(k)},
/// take (1/β!) ∂_λ^β at λ_J = 0 for β_j < n_j, and sum.
pub fn taylor_oracle(d: &DeformationData, j: &BTreeSet<usize>, n: &[u64], f: &Poly) -> Poly {
    let layout = Layout::of(d);
    let sigma = sigma_of(&d.a);
    let nz = layout.ncoords();
    let rows: Vec<usize> = j.iter().copied().collect();
    let lam_coord = |r: usize| nz + 1 + rows.iter().position(|&x| x == r).unwrap();
    let subs: Vec<Poly> = (1..=nz)
        .map(|i| {
            let k = layout.block_of[i - 1];
            let mut e = vec![0u32; nz + rows.len()];
            e[i - 1] = 1;
            for &r in &rows {
                let w = d.entry(r, k) * &sigma;
                assert!(w.is_integer(), "σ_A·A must be integral");
                e[lam_coord(r) - 1] = u32::try_from(w.to_integer()).expect("λ-weight fits u32");
            }
            Poly::monomial(e, Q::one())
        })
        .collect();
    let g = f.compose(&subs);
    let lam_coords: Vec<usize> = rows.iter().map(|&r| lam_coord(r)).collect();
    let mut out = Poly::zero();
    let limits: Vec<u64> = rows.iter().map(|&r| n[r - 1]).collect();
    if limits.contains(&0) {
        return out;
    }
    let mut beta = vec![0u64; rows.len()];
    loop {
        let mut dv = vec![0u32; nz + rows.len()];
        for (b, &c) in beta.iter().zip(&lam_coords) {
            dv[c - 1] = *b as u32;
        }
        let term = g.derivative_multi(&dv).restrict_zero(&lam_coords);
        if !term.is_zero() {
            out = out.add(&term.scale(&(Q::one() / multi_factorial(&dv))));
        }
        // odometer over the box Π [0, n_j)
        let mut i = 0;
        loop {
            if i == beta.len() {
                return out;
            }
            beta[i] += 1;
            if beta[i] < limits[i] {
                break;
            }
            beta[i] = 0;
            i += 1;
        }
    }
}

/// Per J, the coefficient map α ↦ f_{J,α} (a polynomial in the complementary coordinates).
#[derive(Clone, Debug, PartialEq, Default)]
pub struct CoefficientFamily {
    pub coeffs: BTreeMap<BTreeSet<usize>, BTreeMap<Exps, Poly>>,
}

impl CoefficientFamily {
    /// f_{J,α} = ∂^α f |_{Z_J} for every α ∈ A_J(N), every nonempty J.
    pub fn from_function(d: &DeformationData, f: &Poly, n: &[u64]) -> Result<CoefficientFamily, AsymptoticsError> {
        check_n(d, n)?;
        let layout = Layout::of(d);
        let mut coeffs = BTreeMap::new();
        for j in nonempty_subsets(d.ell)? {
            let is = index_set(d, &j, n);
            let zero_coords = layout.coords_of(&is.k_blocks);
            let map: BTreeMap<Exps, Poly> = is.members.iter().map(|a| (a.clone(), f.derivative_multi(a).restrict_zero(&zero_coords))).collect();
            coeffs.insert(j, map);
        }
        Ok(CoefficientFamily { coeffs })
    }

    pub fn get(&self, j: &BTreeSet<usize>, alpha: &Exps) -> Option<&Poly> {
        self.coeffs.get(j).and_then(|m| m.get(alpha))
    }

    /// The family F′ whose App reproduces ∂/∂z_i of App(F): shift α by e_i when
    /// z_i belongs to K_J, differentiate the coefficient otherwise.
    pub fn derivative(&self, d: &DeformationData, i: usize) -> CoefficientFamily {
        let layout = Layout::of(d);
        let block = layout.block_of[i - 1];
        let mut coeffs = BTreeMap::new();
        for (j, map) in &self.coeffs {
            let kb = k_blocks(d, j);
            let mut out = BTreeMap::new();
            if kb.contains(&block) {
                for (alpha, c) in map {
                    if Poly::exponent(alpha, i) == 0 {
                        continue;
                    }
                    let mut a = alpha.clone();
                    a[i - 1] -= 1;
                    out.insert(trim(a), c.clone());
                }
            } else {
                for (alpha, c) in map {
                    out.insert(alpha.clone(), c.derivative(i));
                }
            }
            coeffs.insert(j.clone(), out);
        }
        CoefficientFamily { coeffs }
    }
}

fn sign_of(j: &BTreeSet<usize>) -> Q {
    if j.len() % 2 == 1 {
        Q::one()
    } else {
        -Q::one()
    }
}

/// App^{<N}(F; z) = Σ_J (−1)^{#J+1} Σ_{α∈A_J(N)} f_{J,α} z^α/α!.
pub fn app_polynomial(d: &DeformationData, n: &[u64], fam: &CoefficientFamily) -> Result<Poly, AsymptoticsError> {
    check_n(d, n)?;
    let mut out = Poly::zero();
    for j in nonempty_subsets(d.ell)? {
        let is = index_set(d, &j, n);
        for alpha in &is.members {
            let c = fam.get(&j, alpha).ok_or_else(|| AsymptoticsError::MissingCoefficient { j: render_set(&j), alpha: format!("{alpha:?}") })?;
            let scale = sign_of(&j) / multi_factorial(alpha);
            out = out.add(&c.mul(&Poly::monomial(alpha.clone(), scale)));
        }
    }
    Ok(out)
}

pub fn app_of_function(d: &DeformationData, n: &[u64], f: &Poly) -> Result<Poly, AsymptoticsError> {
    app_polynomial(d, n, &CoefficientFamily::from_function(d, f, n)?)
}

/// App through the λ-weight oracle for each T_J.
pub fn app_oracle(d: &DeformationData, n: &[u64], f: &Poly) -> Result<Poly, AsymptoticsError> {
    check_n(d, n)?;
    let mut out = Poly::zero();
    for j in nonempty_subsets(d.ell)? {
        out = out.add(&taylor_oracle(d, &j, n, f).scale(&sign_of(&j)));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TemplateTerm {
    pub sign: i32,
    pub j: BTreeSet<usize>,
    pub k_blocks: BTreeSet<usize>,
    pub complement: Vec<usize>,
    pub constraints: Vec<String>,
}

/// Symbolic App template: one T_J per nonempty J with its sign, summation constraints
/// and the blocks its coefficients depend on. Duplicate Z_J give duplicate terms.
#[derive(Clone, Debug, PartialEq)]
pub struct AppTemplate {
    pub terms: Vec<TemplateTerm>,
}

pub fn app_template(d: &DeformationData) -> Result<AppTemplate, AsymptoticsError> {
    let terms = nonempty_subsets(d.ell)?
        .into_iter()
        .map(|j| {
            let kb = k_blocks(d, &j);
            TemplateTerm {
                sign: if j.len() % 2 == 1 { 1 } else { -1 },
                complement: (1..=d.m).filter(|k| !kb.contains(k)).collect(),
                constraints: constraints_for(d, &j),
                k_blocks: kb,
                j,
            }
        })
        .collect();
    Ok(AppTemplate { terms })
}

impl AppTemplate {
    pub fn render(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for t in &self.terms {
            let args = if t.complement.is_empty() { String::new() } else { format!("(z^({}))", t.complement.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(", z^(")) };
            lines.push(format!("T_{{{}}} = Σ_{{{}}} f_{{{{{}}},α}}{args} z^α/α!", render_set(&t.j), t.constraints.join(", "), render_set(&t.j)));
        }
        let mut sum = String::from("App = ");
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                sum.push_str(if t.sign > 0 { " + " } else { " - " });
            } else if t.sign < 0 {
                sum.push('-');
            }
            sum.push_str(&format!("T_{{{}}}", render_set(&t.j)));
        }
        lines.push(sum);
        lines
    }

    pub fn render_latex(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for t in &self.terms {
            let cons = t.constraints.iter().map(|c| c.replace('α', "\\alpha_").replace('<', " < ")).collect::<Vec<_>>().join(" \\\\ ");
            lines.push(format!("T_{{\\{{{}\\}}}}^{{<N}}(F; z) = \\sum_{{\\substack{{{cons}}}}} f_{{\\{{{}\\}},\\alpha}} \\frac{{z^\\alpha}}{{\\alpha!}}", render_set(&t.j), render_set(&t.j)));
        }
        lines
    }

    pub fn to_json(&self) -> Json {
        json!(self
            .terms
            .iter()
            .map(|t| json!({"J": t.j, "sign": t.sign, "K": t.k_blocks, "coefficient_blocks": t.complement, "constraints": t.constraints}))
            .collect::<Vec<_>>())
    }
}

/// Coefficients of an exponent that is linear in n_1..n_ℓ.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinearForm(pub Vec<Q>);

impl LinearForm {
    pub fn eval(&self, n: &[u64]) -> Q {
        self.0.iter().zip(n).map(|(c, &x)| c * Q::from_integer(x.into())).sum()
    }

    /// Parses forms like "n1 - 2n2", "3n2 - n1", "(1/2)n1 + 1/2n3".
    pub fn parse(s: &str, ell: usize) -> Result<LinearForm, String> {
        let mut out = vec![Q::zero(); ell];
        let t: String = s.chars().filter(|c| !c.is_whitespace() && *c != '(' && *c != ')').collect();
        let t = t.replace('−', "-");
        let mut parts = Vec::new();
        let mut cur = String::new();
        for c in t.chars() {
            if (c == '+' || c == '-') && !cur.is_empty() {
                parts.push(std::mem::take(&mut cur));
            }
            cur.push(c);
        }
        if !cur.is_empty() {
            parts.push(cur);
        }
        for p in parts {
            let (coef, var) = p.split_once('n').ok_or_else(|| format!("term {p:?} has no n_j"))?;
            let j: usize = var.parse().map_err(|_| format!("bad index in {p:?}"))?;
            if j == 0 || j > ell {
                return Err(format!("n{j} out of range"));
            }
            let c = match coef {
                "" | "+" => Q::one(),
                "-" => -Q::one(),
                c => parse_q(c.trim_start_matches('+'))?,
            };
            out[j - 1] += c;
        }
        Ok(LinearForm(out))
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.0.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let a = c.abs();
            let body = format!("{}n{}", coeff_text(&a), j + 1);
            match (first, c.is_negative()) {
                (true, true) => write!(f, "-{body}")?,
                (true, false) => write!(f, "{body}")?,
                (false, true) => write!(f, " - {body}")?,
                (false, false) => write!(f, " + {body}")?,
            }
            first = false;
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

/// ∏_j ρ_{Λ,j}^{n_j/σ_A}; collapses to a monomial when every ρ_{Λ,j} is one.
pub fn remainder_exponent(family: &LevelFamily, d: &DeformationData, n: &[u64]) -> LevelExpr {
    let sigma = sigma_of(&d.a);
    LevelExpr::prod(family.rho_lambda.iter().zip(n).map(|(rho, &nj)| rho.clone().pow(&(Q::from_integer(nj.into()) / &sigma))).collect())
}

/// Exponent of |z^{(k)}| in the remainder as a linear form in N, for every block
/// (k → form); `None` when some ρ_{Λ,j} is not a single monomial.
pub fn remainder_forms(family: &LevelFamily, d: &DeformationData) -> Option<Vec<LinearForm>> {
    let sigma = sigma_of(&d.a);
    let mut forms = vec![LinearForm(vec![Q::zero(); d.ell]); d.m];
    for (j, rho) in family.rho_lambda.iter().enumerate() {
        let LevelExpr::Mono(m) = rho else { return None };
        for (v, e) in m.exps() {
            match v {
                VarId::Tau(k) => forms[k - 1].0[j] = e / &sigma,
                _ => return None,
            }
        }
    }
    Some(forms)
}

pub fn render_remainder(forms: &[LinearForm]) -> String {
    let parts: Vec<String> = forms
        .iter()
        .enumerate()
        .filter(|(_, f)| f.0.iter().any(|c| !c.is_zero()))
        .map(|(k, f)| {
            let s = f.to_string();
            if s == "n1" || (s.starts_with('n') && s[1..].chars().all(|c| c.is_ascii_digit())) {
                format!("|z{}|^{s}", k + 1)
            } else {
                format!("|z{}|^{{{s}}}", k + 1)
            }
        })
        .collect();
    if parts.is_empty() {
        "1".into()
    } else {
        parts.join("")
    }
}

/// N⁺ = N + σ_A·(column k of A).
pub fn derivative_shift(d: &DeformationData, n: &[u64], k: usize) -> Vec<u64> {
    let sigma = sigma_of(&d.a);
    n.iter()
        .enumerate()
        .map(|(j, &x)| {
            let s = d.entry(j + 1, k) * &sigma;
            x + u64::try_from(s.to_integer()).expect("σ_A·A is a non-negative integer matrix")
        })
        .collect()
}

/// ∂_{z_i} App^{<N⁺}(F) = App^{<N}(F′) with F from f, checked three ways:
/// against the derivative family F′, and against the family of ∂_i f.
pub fn check_derivative_identity(d: &DeformationData, f: &Poly, n: &[u64], i: usize) -> Result<bool, AsymptoticsError> {
    let layout = Layout::of(d);
    let n_plus = derivative_shift(d, n, layout.block_of[i - 1]);
    let fam = CoefficientFamily::from_function(d, f, &n_plus)?;
    let lhs = app_polynomial(d, &n_plus, &fam)?.derivative(i);
    let via_family = app_polynomial(d, n, &fam.derivative(d, i))?;
    let via_function = app_of_function(d, n, &f.derivative(i))?;
    Ok(lhs == via_family && lhs == via_function)
}

/// J, J′ pairs (J < J′) with K_J = K_J′, whose coefficient maps must agree.
pub fn c1_pairs(d: &DeformationData) -> Result<Vec<(BTreeSet<usize>, BTreeSet<usize>)>, AsymptoticsError> {
    let subs = nonempty_subsets(d.ell)?;
    let mut out = Vec::new();
    for (a, ja) in subs.iter().enumerate() {
        for jb in &subs[a + 1..] {
            if k_blocks(d, ja) == k_blocks(d, jb) {
                out.push((ja.clone(), jb.clone()));
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConsistencyReport {
    pub c1: bool,
    pub c2: bool,
    pub offending: Vec<String>,
}

/// C1: f_{J,α} = f_{J′,α} whenever K_J = K_J′ (on the α both maps carry).
/// C2, one level deep for polynomial families: for K_J ⊊ K_J′,
/// f_{J′,(α,γ)} = ∂^γ f_{J,α} |_{Z_J′}.
pub fn consistency(fam: &CoefficientFamily, d: &DeformationData) -> Result<ConsistencyReport, AsymptoticsError> {
    let layout = Layout::of(d);
    let mut rep = ConsistencyReport { c1: true, c2: true, offending: Vec::new() };
    for (ja, jb) in c1_pairs(d)? {
        let (Some(ma), Some(mb)) = (fam.coeffs.get(&ja), fam.coeffs.get(&jb)) else { continue };
        for (alpha, ca) in ma {
            if let Some(cb) = mb.get(alpha) {
                if ca != cb {
                    rep.c1 = false;
                    rep.offending.push(format!("f_{{{}}},{alpha:?} ≠ f_{{{}}},{alpha:?}", render_set(&ja), render_set(&jb)));
                }
            }
        }
    }
    for (ja, ma) in &fam.coeffs {
        let ka = k_blocks(d, ja);
        for (jb, mb) in &fam.coeffs {
            let kb = k_blocks(d, jb);
            if !(ka.is_subset(&kb) && ka != kb) {
                continue;
            }
            let zero_b = layout.coords_of(&kb);
            let ka_coords = layout.coords_of(&ka);
            for (ab, cb) in mb {
                let alpha: Exps = trim((0..ab.len()).map(|i| if ka_coords.contains(&(i + 1)) { ab[i] } else { 0 }).collect());
                let gamma: Exps = trim((0..ab.len()).map(|i| if ka_coords.contains(&(i + 1)) { 0 } else { ab[i] }).collect());
                let Some(ca) = ma.get(&alpha) else { continue };
                if &ca.derivative_multi(&gamma).restrict_zero(&zero_b) != cb {
                    rep.c2 = false;
                    rep.offending.push(format!("f_{{{}}},{ab:?} is not the restricted derivative of f_{{{}}},{alpha:?}", render_set(jb), render_set(ja)));
                }
            }
        }
    }
    Ok(rep)
}

/// Actions acting non-trivially on Z_J (those with a_jk ≠ 0 on some block outside K_J),
/// with duplicate restricted rows removed.
pub fn induced_actions(d: &DeformationData, j: &BTreeSet<usize>) -> Vec<usize> {
    let kb = k_blocks(d, j);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for r in 1..=d.ell {
        if j.contains(&r) {
            continue;
        }
        let restricted: Vec<Q> = (1..=d.m).filter(|k| !kb.contains(k)).map(|k| d.entry(r, k).clone()).collect();
        if restricted.iter().all(|x| x.is_zero()) {
            continue;
        }
        if seen.insert(restricted) {
            out.push(r);
        }
    }
    out
}

#[derive(Clone, Debug)]
pub struct PolyMapSpec {
    pub source: DeformationData,
    pub target: DeformationData,
    /// One component per target coordinate, as polynomials in the source coordinates.
    pub components: Vec<Poly>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MapFailure {
    pub component: usize,
    pub monomial: Exps,
    pub row: usize,
    pub weight: Vec<Q>,
    pub required: Vec<Q>,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq)]
pub enum MapCheck {
    Ok(Vec<Poly>),
    Fail(MapFailure),
}

fn tuple(v: &[Q]) -> String {
    format!("({})", v.iter().map(fmt_q).collect::<Vec<_>>().join(","))
}

/// Grading weights of f's monomials against the target columns; returns the induced
/// map (the weight-homogeneous part) or the first offending monomial.
pub fn check_map(spec: &PolyMapSpec) -> MapCheck {
    let (src, tgt) = (&spec.source, &spec.target);
    let fail = |component: usize, reason: String| {
        MapCheck::Fail(MapFailure { component, monomial: Vec::new(), row: 0, weight: Vec::new(), required: Vec::new(), reason })
    };
    if src.ell != tgt.ell {
        return fail(0, format!("source has {} actions, target has {}", src.ell, tgt.ell));
    }
    let ls = Layout::of(src);
    let lt = Layout::of(tgt);
    if spec.components.len() != lt.ncoords() {
        return fail(0, format!("{} components given, target has {} coordinates", spec.components.len(), lt.ncoords()));
    }
    let mut out = Vec::new();
    for (c, f) in spec.components.iter().enumerate() {
        let k = lt.block_of[c];
        let required: Vec<Q> = (1..=tgt.ell).map(|j| tgt.entry(j, k).clone()).collect();
        if f.nvars() > ls.ncoords() {
            return fail(c + 1, format!("f^({}) uses more than the {} source coordinates", c + 1, ls.ncoords()));
        }
        let mut keep = Poly::zero();
        for (e, coef) in &f.terms {
            let deg = ls.block_degrees(e);
            let weight: Vec<Q> = (1..=src.ell).map(|j| (1..=src.m).map(|i| src.entry(j, i) * Q::from_integer(deg[i - 1].into())).sum()).collect();
            if let Some(j) = (0..src.ell).find(|&j| weight[j] < required[j]) {
                let mono = Poly::monomial(e.clone(), Q::one()).render();
                return MapCheck::Fail(MapFailure {
                    component: c + 1,
                    monomial: e.clone(),
                    row: j + 1,
                    reason: format!("monomial {mono} of f^({}) has weight {} < {} (row {})", c + 1, tuple(&weight), tuple(&required), j + 1),
                    weight,
                    required: required.clone(),
                });
            }
            if weight == required {
                keep.add_term(e.clone(), coef.clone());
            }
        }
        out.push(keep);
    }
    // f(M_j) ⊆ N_j by substitution
    for j in 1..=src.ell {
        let zero_src = ls.coords_of(&src.k_sets[j - 1]);
        for (c, f) in spec.components.iter().enumerate() {
            if tgt.k_sets[j - 1].contains(&lt.block_of[c]) && !f.restrict_zero(&zero_src).is_zero() {
                return fail(c + 1, format!("f(M_{j}) ⊄ N_{j}: f^({}) does not vanish on M_{j}", c + 1));
            }
        }
    }
    MapCheck::Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub enum TestFunction {
    Poly(Poly),
    /// Σ_{|α|≤degree} z^α/α!
    ExpTruncation { degree: u32 },
}

impl TestFunction {
    pub fn parse(s: &str) -> Result<TestFunction, String> {
        let t = s.trim();
        if let Some(rest) = t.strip_prefix("exp") {
            let degree = rest.parse().map_err(|_| format!("expected exp<degree>, got {t:?}"))?;
            return Ok(TestFunction::ExpTruncation { degree });
        }
        Poly::parse(t).map(TestFunction::Poly)
    }

    pub fn to_poly(&self, ncoords: usize) -> Poly {
        match self {
            TestFunction::Poly(p) => p.clone(),
            TestFunction::ExpTruncation { degree } => {
                let mut p = Poly::zero();
                for total in 0..=*degree {
                    for e in compositions(total, ncoords) {
                        let c = Q::one() / multi_factorial(&e);
                        p.add_term(e, c);
                    }
                }
                p
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimateReport {
    pub n: Vec<u64>,
    /// max |f − App|/remainder over samples at ε
    pub c_fit: f64,
    /// the same at ε/2
    pub c_half: f64,
    pub growth: f64,
    /// how far the ε/2 samples exceed the fitted constant (relative, ≥ 0)
    pub max_violation: f64,
    pub samples: usize,
    /// f − App vanishes identically
    pub exact_zero: bool,
    /// every monomial of f − App is bounded by the remainder on the cone (exact LP); None if not decidable
    pub dominated: Option<bool>,
    pub pass: bool,
}

impl EstimateReport {
    pub fn to_json(&self) -> Json {
        json!({
            "N": self.n, "C_fit": self.c_fit, "C_half": self.c_half, "growth": self.growth,
            "max_violation": self.max_violation, "samples": self.samples,
            "exact_zero": self.exact_zero, "dominated": self.dominated, "pass": self.pass,
        })
    }
}

/// Tolerance on the growth of the fitted constant when ε halves.
pub const GROWTH_LIMIT: f64 = 2.0;

/// Fits C in |f − App^{<N}| ≤ C ∏ ρ_j^{n_j/σ_A} on samples of the system at ε and ε/2.
#[allow(clippy::too_many_arguments)]
pub fn verify_estimate(d: &DeformationData, family: &LevelFamily, f: &Poly, n: &[u64], system: &MulticoneSystem, eps: f64, samples: usize, seed: u64) -> Result<EstimateReport, AsymptoticsError> {
    let diff = f.sub(&app_of_function(d, n, f)?);
    estimate_difference(d, family, &diff, n, system, eps, samples, seed)
}

#[allow(clippy::too_many_arguments)]
fn estimate_difference(d: &DeformationData, family: &LevelFamily, diff: &Poly, n: &[u64], system: &MulticoneSystem, eps: f64, samples: usize, seed: u64) -> Result<EstimateReport, AsymptoticsError> {
    check_n(d, n)?;
    let layout = Layout::of(d);
    let rem = remainder_exponent(family, d, n);
    let exact_zero = diff.is_zero();
    let dominated = if exact_zero { Some(true) } else { dominated_on_cone(&layout, diff, &rem, system) };
    let fit = |e: f64, s: u64| -> Result<(f64, Vec<f64>), AsymptoticsError> {
        if exact_zero {
            return Ok((0.0, Vec::new()));
        }
        let pts = sample_points(system, &EpsSpec::Single(e), samples, s)?;
        let ratios: Vec<f64> = pts.iter().map(|p| ratio_at(&layout, diff, &rem, &p.norms, &p.angles)).collect();
        Ok((ratios.iter().cloned().fold(0.0, f64::max), ratios))
    };
    let (c_fit, _) = fit(eps, seed)?;
    let (c_half, half) = fit(eps / 2.0, seed.wrapping_add(1))?;
    let growth = if c_fit > 0.0 { c_half / c_fit } else if c_half > 0.0 { f64::INFINITY } else { 0.0 };
    let max_violation = if c_fit > 0.0 { half.iter().map(|r| r / c_fit - 1.0).fold(0.0, f64::max) } else { 0.0 };
    let pass = growth <= GROWTH_LIMIT && dominated != Some(false);
    Ok(EstimateReport { n: n.to_vec(), c_fit, c_half, growth, max_violation, samples, exact_zero, dominated, pass })
}

/// |D(z)| / R(z), evaluated term by term in log space. Block k is placed at
/// norm τ_k along the unit vector (1,…,1)/√dim rotated by the block's angle.
fn ratio_at(layout: &Layout, diff: &Poly, rem: &LevelExpr, norms: &[f64], angles: &[f64]) -> f64 {
    let logs: Vec<f64> = norms.iter().map(|t| t.ln()).collect();
    let log_r = rem.eval_log(&|k| logs[k - 1]);
    let (mut re, mut im) = (0.0, 0.0);
    for (e, c) in &diff.terms {
        let deg = layout.block_degrees(e);
        let mut lg = -log_r;
        let mut phase = 0.0;
        for (k, &dk) in deg.iter().enumerate() {
            if dk > 0 {
                lg += dk as f64 * (logs[k] - 0.5 * (layout.dims[k] as f64).ln());
                phase += dk as f64 * angles[k];
            }
        }
        let mag = to_f64(c) * lg.exp();
        re += mag * phase.cos();
        im += mag * phase.sin();
    }
    re.hypot(im)
}

/// Exact test that each monomial of D is O(R) on the cone: its log-exponent minus the
/// remainder's must be ≤ 0 on the recession cone of the log-region.
fn dominated_on_cone(layout: &Layout, diff: &Poly, rem: &LevelExpr, sys: &MulticoneSystem) -> Option<bool> {
    let LevelExpr::Mono(rm) = rem else { return None };
    let blocks = &sys.blocks;
    let dim = blocks.len();
    let mut cons = Vec::new();
    for i in &sys.ineqs {
        let a: Vec<Q> = blocks.iter().map(|&k| i.f.exponent(VarId::Tau(k))).collect();
        if i.two_sided {
            cons.push(Constraint::new(a, Rel::Eq, Q::zero()));
        } else {
            cons.push(Constraint::new(a, Rel::Le, Q::zero()));
        }
    }
    for b in 0..dim {
        let mut e = vec![Q::zero(); dim];
        e[b] = Q::one();
        cons.push(Constraint::new(e.clone(), Rel::Le, Q::zero()));
        cons.push(Constraint::new(e, Rel::Ge, -Q::one()));
    }
    for e in diff.terms.keys() {
        let deg = layout.block_degrees(e);
        let mut obj = vec![Q::zero(); dim];
        for k in 1..=layout.dims.len() {
            let c = Q::from_integer(deg[k - 1].into()) - rm.exponent(VarId::Tau(k));
            match blocks.iter().position(|&b| b == k) {
                Some(p) => obj[p] = c,
                None if c.is_zero() => {}
                None => return None,
            }
        }
        match lp::maximize_free(dim, &cons, &obj) {
            LpOutcome::Optimal { value, .. } if value.is_positive() => return Some(false),
            LpOutcome::Optimal { .. } => {}
            _ => return None,
        }
    }
    Some(true)
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlatnessReport {
    pub flat: bool,
    pub checked: usize,
    pub first_failure: Option<Vec<u64>>,
}

/// f is flat when it is estimated by the zero family (App = 0) at every N in the box [0, cap]^ℓ.
#[allow(clippy::too_many_arguments)]
pub fn flatness_check(d: &DeformationData, family: &LevelFamily, f: &Poly, system: &MulticoneSystem, cap: u64, eps: f64, samples: usize, seed: u64) -> Result<FlatnessReport, AsymptoticsError> {
    let mut n = vec![0u64; d.ell];
    let mut checked = 0;
    loop {
        let rep = estimate_difference(d, family, f, &n, system, eps, samples, seed)?;
        checked += 1;
        if !rep.pass {
            return Ok(FlatnessReport { flat: false, checked, first_failure: Some(n) });
        }
        let mut i = 0;
        loop {
            if i == n.len() {
                return Ok(FlatnessReport { flat: true, checked, first_failure: None });
            }
            n[i] += 1;
            if n[i] <= cap {
                break;
            }
            n[i] = 0;
            i += 1;
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ClassifyError {
    #[error("the catalog covers two submanifolds (ℓ = 2), got ℓ = {0}")]
    NotTwoRows(usize),
    #[error("the catalog covers m ∈ {{2, 3}} blocks, got m = {0}")]
    BlockCount(usize),
    #[error("column {0} is zero; drop the block first")]
    ZeroColumn(usize),
    #[error("the action is degenerate (rank < 2): reduces to the one-manifold case")]
    Degenerate,
    #[error("no normalization with a11 = a22 = 1 and 1 − a12·a21 > 0 matches a catalog case: {0}")]
    OutOfCatalog(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CaseReport {
    pub label: String,
    pub m: usize,
    pub nonzero: usize,
    pub sub_case: Option<char>,
    /// the normalized matrix, rows and columns permuted and rows scaled
    pub normalized: Matrix,
    pub row_order: Vec<usize>,
    pub column_order: Vec<usize>,
    pub parameters: BTreeMap<String, Q>,
    /// zero pattern of ξ used for the displayed system
    pub zero_blocks: Vec<usize>,
    pub system: Vec<String>,
    pub constraints: Vec<(BTreeSet<usize>, Vec<String>)>,
    pub remainder: Vec<LinearForm>,
    pub remainder_text: String,
}

impl CaseReport {
    pub fn to_json(&self) -> Json {
        json!({
            "case": self.label,
            "m": self.m,
            "nonzero": self.nonzero,
            "normalized": self.normalized.iter().map(|r| r.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "row_order": self.row_order,
            "column_order": self.column_order,
            "parameters": self.parameters.iter().map(|(k, v)| (k.clone(), json!(fmt_q(v)))).collect::<serde_json::Map<_, _>>(),
            "zero_blocks": self.zero_blocks,
            "system": self.system,
            "constraints": self.constraints.iter().map(|(j, c)| json!({"J": j, "constraints": c})).collect::<Vec<_>>(),
            "remainder": self.remainder_text,
        })
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..=p.len() {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out.sort();
    out
}

/// Matches the normalized shape against the catalog; Err carries the violated side condition.
fn match_shape(a: &Matrix) -> Option<Result<(String, Option<char>, BTreeMap<String, Q>), String>> {
    let z = |x: &Q| x.is_zero();
    let one = Q::one();
    let mut p = BTreeMap::new();
    let m = a[0].len();
    if m == 2 {
        let (b, c) = (&a[0][1], &a[1][0]);
        return match (z(b), z(c)) {
            (true, true) => Some(Ok(("m=2 N=2".into(), None, p))),
            (false, true) => {
                p.insert("b".into(), b.clone());
                Some(Ok(("m=2 N=3".into(), None, p)))
            }
            (true, false) => None,
            (false, false) => {
                p.insert("b".into(), b.clone());
                p.insert("c".into(), c.clone());
                Some(Ok(("m=2 N=4".into(), None, p)))
            }
        };
    }
    let (b, c, e, f) = (&a[0][1], &a[1][0], &a[0][2], &a[1][2]);
    match (z(b), z(c), z(e), z(f)) {
        (true, true, false, true) => {
            p.insert("e".into(), e.clone());
            Some(if *e == one { Err("e = 1: blocks 1 and 3 scale identically, reduces to m = 2".into()) } else { Ok(("m=3 N=3".into(), None, p)) })
        }
        (false, true, false, true) => {
            p.insert("b".into(), b.clone());
            p.insert("e".into(), e.clone());
            Some(if *e == one { Err("e = 1: blocks 1 and 3 scale identically, reduces to m = 2".into()) } else { Ok(("m=3 N=4(a)".into(), Some('a'), p)) })
        }
        (false, true, true, false) => {
            p.insert("b".into(), b.clone());
            p.insert("e".into(), f.clone());
            Some(Ok(("m=3 N=4(b)".into(), Some('b'), p)))
        }
        (false, true, false, false) => {
            p.insert("b".into(), b.clone());
            p.insert("e".into(), e.clone());
            p.insert("f".into(), f.clone());
            Some(if b * f == *e { Err("b·f = e: column 3 is proportional to column 2, reduces to m = 2".into()) } else { Ok(("m=3 N=5".into(), None, p)) })
        }
        (false, false, false, false) => {
            p.insert("b".into(), b.clone());
            p.insert("c".into(), c.clone());
            p.insert("e".into(), e.clone());
            p.insert("r".into(), f.clone());
            Some(if b * f == *e {
                Err("b·r = e: column 3 is proportional to column 2, reduces to m = 2".into())
            } else if c * e == *f {
                Err("c·e = r: column 3 is proportional to column 1, reduces to m = 2".into())
            } else {
                Ok(("m=3 N=6".into(), None, p))
            })
        }
        _ => None,
    }
}

/// Classifies a 2×m action matrix (m ∈ {2, 3}) against the two-manifold catalog, up to
/// row/column permutation and row scaling, and reports its system, index sets and remainder.
pub fn classify_two_manifolds(a: &Matrix) -> Result<CaseReport, ClassifyError> {
    if a.len() != 2 {
        return Err(ClassifyError::NotTwoRows(a.len()));
    }
    let m = a[0].len();
    if !(2..=3).contains(&m) || a[1].len() != m {
        return Err(ClassifyError::BlockCount(m));
    }
    if let Some(k) = (0..m).find(|&k| a[0][k].is_zero() && a[1][k].is_zero()) {
        return Err(ClassifyError::ZeroColumn(k + 1));
    }
    if crate::linalg::rank(a) < 2 {
        return Err(ClassifyError::Degenerate);
    }
    let nonzero = a.iter().flatten().filter(|x| !x.is_zero()).count();
    let mut side_condition = None;
    for rows in [[0usize, 1], [1, 0]] {
        for cols in permutations(m) {
            let permuted: Matrix = rows.iter().map(|&r| cols.iter().map(|&c| a[r][c].clone()).collect()).collect();
            if permuted[0][0].is_zero() || permuted[1][1].is_zero() {
                continue;
            }
            let normalized: Matrix = permuted.iter().enumerate().map(|(i, row)| row.iter().map(|x| x / &permuted[i][i]).collect()).collect();
            if !(Q::one() - &normalized[0][1] * &normalized[1][0]).is_positive() {
                continue;
            }
            match match_shape(&normalized) {
                Some(Ok((label, sub_case, parameters))) => {
                    return Ok(describe_case(label, m, nonzero, sub_case, normalized, rows.iter().map(|r| r + 1).collect(), cols.iter().map(|c| c + 1).collect(), parameters));
                }
                Some(Err(why)) => {
                    side_condition.get_or_insert(why);
                }
                None => {}
            }
        }
    }
    Err(ClassifyError::OutOfCatalog(side_condition.unwrap_or_else(|| "no normalized form has the catalog's zero pattern".into())))
}

#[allow(clippy::too_many_arguments)]
fn describe_case(label: String, m: usize, nonzero: usize, sub_case: Option<char>, normalized: Matrix, row_order: Vec<usize>, column_order: Vec<usize>, parameters: BTreeMap<String, Q>) -> CaseReport {
    let d = DeformationData::new(normalized.clone()).expect("normalized catalog matrix is valid");
    // the catalog's displays take ξ^{(3)} = 0 (one-sided bound on the third block)
    let zero_blocks: Vec<usize> = if m == 3 { vec![3] } else { vec![] };
    let p = PointPattern::zeros(&zero_blocks);
    let mut system = Vec::new();
    let mut remainder = Vec::new();
    if let Ok(r) = rank_and_normalize(&d, &p) {
        if let Ok(pr) = run_pipeline(&d, &r, &p) {
            if let Ok(s) = build_multicone(&d, &pr, &BuildOptions::default()) {
                system = s.render();
            }
        }
        if let Ok(fam) = build_levels(&d, &r, &p) {
            remainder = remainder_forms(&fam, &d).unwrap_or_default();
        }
    }
    let constraints = nonempty_subsets(2).unwrap().into_iter().map(|j| {
        let c = constraints_for(&d, &j);
        (j, c)
    }).collect();
    let remainder_text = render_remainder(&remainder);
    CaseReport { label, m, nonzero, sub_case, normalized, row_order, column_order, parameters, zero_blocks, system, constraints, remainder, remainder_text }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multicone::{compare_display, parse_display};
    use crate::rat::{q, qf};

    fn dd(rows: &[&[i64]]) -> DeformationData {
        DeformationData::from_ints(rows).unwrap()
    }

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    fn forms(d: &DeformationData, zeros: &[usize]) -> Vec<LinearForm> {
        let p = PointPattern::zeros(zeros);
        let r = rank_and_normalize(d, &p).unwrap();
        remainder_forms(&build_levels(d, &r, &p).unwrap(), d).unwrap()
    }

    fn expect_forms(d: &DeformationData, zeros: &[usize], want: &[&str]) {
        let got = forms(d, zeros);
        let want: Vec<LinearForm> = want.iter().map(|s| LinearForm::parse(s, d.ell).unwrap()).collect();
        assert_eq!(&got[..want.len()], &want[..], "{}", render_remainder(&got));
    }

    #[test]
    fn index_sets_match_displays() {
        let majima = dd(&[&[1, 0], &[0, 1]]);
        let is = index_set(&majima, &set(&[1]), &[3, 5]);
        assert_eq!(is.members, vec![vec![], vec![1], vec![2]]);
        assert_eq!(constraint_text(&majima, 1), "α1 < n1");
        let cusp = dd(&[&[3, 2], &[1, 1]]);
        assert_eq!(constraint_text(&cusp, 1), "3α1 + 2α2 < n1");
        assert_eq!(constraint_text(&cusp, 2), "α1 + α2 < n2");
        let is = index_set(&cusp, &set(&[1]), &[7, 0]);
        for a in &is.members {
            assert!(3 * Poly::exponent(a, 1) + 2 * Poly::exponent(a, 2) < 7);
        }
        assert_eq!(is.members.len(), 7); // (0,0..3), (1,0..2), (2,0)
        assert!(index_set(&cusp, &set(&[1, 2]), &[7, 0]).members.is_empty());
        let lines = dd(&[&[1, 1, 0], &[0, 1, 1]]);
        assert_eq!(constraints_for(&lines, &set(&[1, 2])), vec!["α1 + α2 < n1", "α2 + α3 < n2"]);
        // rational entries carry σ_A on the right-hand side
        let t = DeformationData::new(vec![vec![q(1), qf(1, 2)], vec![q(0), q(1)]]).unwrap();
        assert_eq!(constraint_text(&t, 1), "α1 + (1/2)α2 < n1/2");
    }

    #[test]
    fn monotone_in_n() {
        let cusp = dd(&[&[3, 2], &[1, 1]]);
        let small = index_set(&cusp, &set(&[1, 2]), &[6, 2]);
        let big = index_set(&cusp, &set(&[1, 2]), &[8, 3]);
        assert!(small.members.iter().all(|a| big.contains(a)));
    }

    #[test]
    fn oracle_routes_agree() {
        let majima = dd(&[&[1, 0], &[0, 1]]);
        let f = Poly::parse("z1*z2").unwrap();
        assert_eq!(taylor_oracle(&majima, &set(&[1]), &[2, 0], &f), f);
        assert_eq!(taylor_by_index(&majima, &set(&[1]), &[2, 0], &f), f);
        let cusp = dd(&[&[3, 2], &[1, 1]]);
        assert!(taylor_oracle(&cusp, &set(&[1]), &[1, 1], &f).is_zero());
        assert!(taylor_by_index(&cusp, &set(&[1]), &[1, 1], &f).is_zero());
        let g = Poly::parse("1 + z1 - 3*z2^2 + z1^2*z2/2 + z1^3 + 5*z1*z2^3").unwrap();
        for d in [&cusp, &dd(&[&[1, 1], &[0, 1]])] {
            for n in [[0, 3], [4, 2], [7, 3], [9, 9]] {
                for j in nonempty_subsets(2).unwrap() {
                    assert_eq!(taylor_by_index(d, &j, &n, &g), taylor_oracle(d, &j, &n, &g));
                }
                assert_eq!(app_of_function(d, &n, &g).unwrap(), app_oracle(d, &n, &g).unwrap());
            }
        }
        // polynomial entirely below N is reproduced
        assert_eq!(app_of_function(&cusp, &[30, 30], &g).unwrap(), g);
    }

    #[test]
    fn remainders_match_displays() {
        expect_forms(&dd(&[&[1, 0], &[0, 1]]), &[], &["n1", "n2"]);
        expect_forms(&dd(&[&[1, 1], &[0, 1]]), &[], &["n1 - n2", "n2"]);
        expect_forms(&dd(&[&[3, 2], &[1, 1]]), &[], &["n1 - 2n2", "3n2 - n1"]);
        expect_forms(&dd(&[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]]), &[], &["1/2n1 + 1/2n3 - 1/2n2", "1/2n1 + 1/2n2 - 1/2n3", "1/2n2 + 1/2n3 - 1/2n1"]);
        expect_forms(&dd(&[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]]), &[], &["n1 - n2 + n3", "n2 - n3", "n3"]);
        let cusp = dd(&[&[3, 2], &[1, 1]]);
        let p = PointPattern::generic();
        let fam = build_levels(&cusp, &rank_and_normalize(&cusp, &p).unwrap(), &p).unwrap();
        assert_eq!(remainder_exponent(&fam, &cusp, &[0, 0]), LevelExpr::one());
        assert_eq!(render_remainder(&remainder_forms(&fam, &cusp).unwrap()), "|z1|^{n1 - 2n2}|z2|^{-n1 + 3n2}");
    }

    #[test]
    fn general_two_block_formula() {
        for (a11, a12, a21, a22) in [(1, 2, 0, 1), (2, 1, 1, 3), (3, 2, 1, 1), (1, 1, 1, 2), (5, 0, 2, 7)] {
            let d = dd(&[&[a11, a12], &[a21, a22]]);
            let det = q(a11 * a22 - a12 * a21);
            let sigma = sigma_of(&d.a);
            let want = [
                LinearForm(vec![q(a22) / (&det * &sigma), q(-a12) / (&det * &sigma)]),
                LinearForm(vec![q(-a21) / (&det * &sigma), q(a11) / (&det * &sigma)]),
            ];
            assert_eq!(forms(&d, &[]), want, "{a11} {a12} {a21} {a22}");
        }
    }

    #[test]
    fn derivative_shift_identity() {
        let cusp = dd(&[&[3, 2], &[1, 1]]);
        assert_eq!(derivative_shift(&cusp, &[2, 1], 1), vec![5, 2]);
        assert_eq!(derivative_shift(&dd(&[&[1, 0], &[0, 1]]), &[2, 1], 1), vec![3, 1]);
        let f = Poly::parse("z1^2*z2").unwrap();
        assert!(check_derivative_identity(&cusp, &f, &[2, 1], 1).unwrap());
        let g = Poly::parse("z1^3*z2 + 2*z2^4 - z1*z3^2 + z3").unwrap();
        let lines = dd(&[&[1, 1, 0], &[0, 1, 1]]);
        for i in 1..=3 {
            assert!(check_derivative_identity(&lines, &g, &[3, 2], i).unwrap());
        }
    }

    #[test]
    fn consistency_pairs() {
        let t = dd(&[&[1, 1], &[0, 1]]);
        assert_eq!(c1_pairs(&t).unwrap(), vec![(set(&[1]), set(&[1, 2]))]);
        let cusp = dd(&[&[3, 2], &[1, 1]]);
        assert_eq!(c1_pairs(&cusp).unwrap().len(), 3);
        let f = Poly::parse("z1 + z1*z2^2 - 4*z2^3").unwrap();
        let mut fam = CoefficientFamily::from_function(&t, &f, &[4, 3]).unwrap();
        let rep = consistency(&fam, &t).unwrap();
        assert!(rep.c1 && rep.c2, "{rep:?}");
        // perturb one coefficient of F_{1}
        let key = fam.coeffs[&set(&[1])].keys().find(|a| !a.is_empty()).unwrap().clone();
        fam.coeffs.get_mut(&set(&[1])).unwrap().insert(key, Poly::constant(q(99)));
        assert!(!consistency(&fam, &t).unwrap().c1);
        assert_eq!(induced_actions(&t, &set(&[2])), vec![1]);
        assert!(induced_actions(&t, &set(&[1])).is_empty());
    }

    #[test]
    fn induced_maps() {
        let spec = PolyMapSpec {
            source: dd(&[&[1, 1, 0], &[0, 1, 1]]),
            target: dd(&[&[1, 1, 1], &[0, 1, 1]]),
            components: ["x1", "x1*x3 + x2", "x1*x3"].iter().map(|s| Poly::parse(s).unwrap()).collect(),
        };
        match check_map(&spec) {
            MapCheck::Ok(t) => assert_eq!(t, spec.components),
            other => panic!("{other:?}"),
        }
        let cusp = PolyMapSpec {
            source: dd(&[&[1, 0], &[0, 1]]),
            target: dd(&[&[3, 2], &[1, 1]]),
            components: vec![Poly::parse("x1^3*x2 + x1^4*x2").unwrap(), Poly::parse("x1^2*x2").unwrap()],
        };
        match check_map(&cusp) {
            MapCheck::Ok(t) => assert_eq!(t, vec![Poly::parse("x1^3*x2").unwrap(), Poly::parse("x1^2*x2").unwrap()]),
            other => panic!("{other:?}"),
        }
        let identity = PolyMapSpec { components: vec![Poly::var(1), Poly::var(2)], ..cusp };
        match check_map(&identity) {
            MapCheck::Fail(f) => {
                assert_eq!((f.component, f.row), (1, 1));
                assert!(f.reason.contains("monomial z1 of f^(1) has weight (1,0) < (3,1)"), "{}", f.reason);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn estimates_on_cusp() {
        let cusp = dd(&[&[3, 2], &[1, 1]]);
        let p = PointPattern::generic();
        let r = rank_and_normalize(&cusp, &p).unwrap();
        let pr = run_pipeline(&cusp, &r, &p).unwrap();
        let sys = build_multicone(&cusp, &pr, &BuildOptions::default()).unwrap();
        let fam = build_levels(&cusp, &r, &p).unwrap();
        let f = Poly::parse("z1*z2").unwrap();
        assert!(app_of_function(&cusp, &[1, 1], &f).unwrap().is_zero());
        let rep = verify_estimate(&cusp, &fam, &f, &[1, 1], &sys, 0.1, 300, 7).unwrap();
        assert!(rep.pass && rep.dominated == Some(true), "{rep:?}");
        assert!(rep.c_fit < 0.1);
        let exp = TestFunction::ExpTruncation { degree: 8 }.to_poly(2);
        let rep = verify_estimate(&cusp, &fam, &exp, &[3, 2], &sys, 0.1, 300, 7).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn flatness() {
        let majima = dd(&[&[1, 0], &[0, 1]]);
        let p = PointPattern::generic();
        let r = rank_and_normalize(&majima, &p).unwrap();
        let pr = run_pipeline(&majima, &r, &p).unwrap();
        let sys = build_multicone(&majima, &pr, &BuildOptions::default()).unwrap();
        let fam = build_levels(&majima, &r, &p).unwrap();
        let rep = flatness_check(&majima, &fam, &Poly::zero(), &sys, 3, 0.1, 50, 1).unwrap();
        assert!(rep.flat);
        let rep = flatness_check(&majima, &fam, &Poly::var(1), &sys, 3, 0.1, 50, 1).unwrap();
        assert!(!rep.flat);
        assert_eq!(rep.first_failure, Some(vec![2, 0]));
    }

    fn classify(rows: Vec<Vec<Q>>) -> CaseReport {
        classify_two_manifolds(&rows).unwrap()
    }

    fn expect_system(rep: &CaseReport, lines: &[&str]) {
        let d = DeformationData::new(rep.normalized.clone()).unwrap();
        let p = PointPattern::zeros(&rep.zero_blocks);
        let r = rank_and_normalize(&d, &p).unwrap();
        let pr = run_pipeline(&d, &r, &p).unwrap();
        let s = build_multicone(&d, &pr, &BuildOptions::default()).unwrap();
        let c = compare_display(&s, &parse_display(lines).unwrap());
        assert!(c.ok(), "{}: {c:?} {:?}", rep.label, rep.system);
    }

    fn expect_remainder(rep: &CaseReport, want: &[&str]) {
        let want: Vec<LinearForm> = want.iter().map(|s| LinearForm::parse(s, 2).unwrap()).collect();
        assert_eq!(&rep.remainder[..want.len()], &want[..], "{}", rep.remainder_text);
        assert!(rep.remainder[want.len()..].iter().all(|f| f.0.iter().all(|c| c.is_zero())));
    }

    #[test]
    fn two_manifold_catalog() {
        let rep = classify(vec![vec![q(1), q(0)], vec![q(0), q(1)]]);
        assert_eq!(rep.label, "m=2 N=2");
        expect_remainder(&rep, &["n1", "n2"]);
        // b = 1/2, σ_A = 2
        let rep = classify(vec![vec![q(1), qf(1, 2)], vec![q(0), q(1)]]);
        assert_eq!(rep.label, "m=2 N=3");
        expect_remainder(&rep, &["1/2n1 - 1/4n2", "1/2n2"]);
        // b = 1/2, c = 1/3: d = 6/5, σ_A = 6
        let rep = classify(vec![vec![q(1), qf(1, 2)], vec![qf(1, 3), q(1)]]);
        assert_eq!(rep.label, "m=2 N=4");
        expect_remainder(&rep, &["1/5n1 - 1/10n2", "1/5n2 - 1/15n1"]);
        assert_eq!(rep.constraints[1].1, vec!["(1/3)α1 + α2 < n2/6"]);
        // scaled / permuted input normalizes to m=2 N=3
        let rep = classify(vec![vec![q(0), q(2)], vec![q(3), q(3)]]);
        assert_eq!(rep.label, "m=2 N=3");

        let rep = classify(vec![vec![q(1), q(0), q(2)], vec![q(0), q(1), q(0)]]);
        assert_eq!(rep.label, "m=3 N=3");
        expect_system(&rep, &["|z1| < ε", "|z2| < ε", "|z3| < ε|z1|^2"]);
        expect_remainder(&rep, &["n1", "n2"]);
        let rep = classify(vec![vec![q(1), q(2), q(3)], vec![q(0), q(1), q(0)]]);
        assert_eq!(rep.label, "m=3 N=4(a)");
        expect_system(&rep, &["|z1| < ε", "|z2| < ε|z1|^2", "|z3| < ε|z1|^3"]);
        expect_remainder(&rep, &["n1 - 2n2", "n2"]);
        let rep = classify(vec![vec![q(1), q(2), q(0)], vec![q(0), q(1), q(3)]]);
        assert_eq!(rep.label, "m=3 N=4(b)");
        expect_system(&rep, &["|z1| < ε", "|z2| < ε|z1|^2", "|z3||z1|^6 < ε|z2|^3"]);
        let rep = classify(vec![vec![q(1), q(2), q(5)], vec![q(0), q(1), q(1)]]);
        assert_eq!(rep.label, "m=3 N=5");
        expect_system(&rep, &["|z1| < ε", "|z2| < ε|z1|^2", "|z3| < ε|z1|^3|z2|"]);
        expect_remainder(&rep, &["n1 - 2n2", "n2"]);
        // b = 1/2, c = 1/3, e = 2, r = 3: d = 6/5
        let rep = classify(vec![vec![q(1), qf(1, 2), q(2)], vec![qf(1, 3), q(1), q(3)]]);
        assert_eq!(rep.label, "m=3 N=6");
        expect_remainder(&rep, &["1/5n1 - 1/10n2", "1/5n2 - 1/15n1"]);
        // e − br = 1/2, r − ce = 7/3, scaled by d
        expect_system(&rep, &["|z1| < ε|z2|^(1/3)", "|z2| < ε|z1|^(1/2)", "|z3| < ε|z1|^(3/5)|z2|^(14/5)"]);

        assert_eq!(classify_two_manifolds(&vec![vec![q(1), q(2)], vec![q(2), q(4)]]), Err(ClassifyError::Degenerate));
        assert!(matches!(classify_two_manifolds(&vec![vec![q(1), q(0), q(1)], vec![q(0), q(1), q(0)]]), Err(ClassifyError::OutOfCatalog(_))));
        assert!(matches!(classify_two_manifolds(&vec![vec![q(1)], vec![q(1)]]), Err(ClassifyError::BlockCount(1))));
    }
}
