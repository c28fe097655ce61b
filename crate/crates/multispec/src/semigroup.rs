//! Generator sets G and Ĝ, the elimination pipeline F^{0,r} → F^q, and exact
//! membership / radical / equivalence decisions for finitely generated
//! monomial semigroups with limit values.

use crate::deformation::{derive_monomials, is_fixed_point, DeformationData, DeformationError, DerivedMonomials, PointPattern, RankData};
use crate::lp::{self, Constraint, LpOutcome, Rel};
use crate::monomial::{fraction_closure, GenPair, GenSet, Monomial, Value, VarId};
use crate::rat::{balance, Q};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use std::collections::{BTreeMap, BTreeSet};

pub const DEFAULT_BOUND: u64 = 200;
pub const DEFAULT_MAX_N: u32 = 64;

#[derive(Clone, Debug)]
pub struct PipelineResult {
    pub g: GenSet,
    /// (j, F^{0,j}) after eliminating λ_j, in elimination order.
    pub f0_stages: Vec<(usize, GenSet)>,
    pub f0: GenSet,
    /// (k, F^s) after applying ℒ_k, in order of zero_cols_l.
    pub f_stages: Vec<(usize, GenSet)>,
    pub fq: GenSet,
    pub q: usize,
    /// J_Z ∩ leading columns, increasing.
    pub zero_cols_l: Vec<usize>,
    pub rank: RankData,
    pub derived: DerivedMonomials,
    pub pattern: PointPattern,
    /// n_k(ξ) for each non-leading column.
    pub psi_values: BTreeMap<usize, Value>,
    pub fixed_point: bool,
}

impl PipelineResult {
    /// Stage F^{0,j} for a given action index, or G when j is the last leading stage.
    pub fn f0_stage(&self, j: usize) -> Option<&GenSet> {
        self.f0_stages.iter().find(|(jj, _)| *jj == j).map(|(_, s)| s)
    }

    pub fn f_stage(&self, k: usize) -> Option<&GenSet> {
        self.f_stages.iter().find(|(kk, _)| *kk == k).map(|(_, s)| s)
    }
}

/// n_k(ξ) for a ψ-monomial: each τ_i becomes |ξ_i|, with the conventions
/// |ξ_i| := 1 on leading zero blocks and on normalized leading blocks.
pub fn psi_value(k: usize, psi: &Monomial, r: &RankData, p: &PointPattern) -> Value {
    if p.is_zero(k) {
        return Value::Zero;
    }
    let m = psi.substitute(|v| match v {
        VarId::Tau(i) => {
            let unit = r.is_lead_col(*i) && (p.is_zero(*i) || p.normalized);
            Some(if unit { Monomial::one() } else { Monomial::xi(*i) })
        }
        _ => None,
    });
    Value::Xi(m)
}

pub fn build_g(d: &DeformationData, r: &RankData, p: &PointPattern) -> Result<GenSet, DeformationError> {
    p.validate(d)?;
    let dm = derive_monomials(d, r)?;
    Ok(build_g_from(&dm, r, p))
}

fn build_g_from(dm: &DerivedMonomials, r: &RankData, p: &PointPattern) -> GenSet {
    let mut g = GenSet::new();
    for m in dm.phi_inv.values() {
        g.insert(GenPair::zero(m.clone()));
    }
    for (&k, m) in &dm.psi {
        g.insert(GenPair::new(m.clone(), psi_value(k, m, r, p)));
    }
    for &j in &r.rest_rows {
        g.insert(GenPair::zero(Monomial::lambda(j)));
    }
    fraction_closure(&g)
}

/// Ĝ: (τ_k/φ_k(λ), |ξ_k|) for every block and (λ_j, 0) for every action, closed under Q.
pub fn build_g_hat(d: &DeformationData, r: &RankData, p: &PointPattern) -> Result<GenSet, DeformationError> {
    p.validate(d)?;
    let dm = derive_monomials(d, r)?;
    let mut g = GenSet::new();
    for k in 1..=d.m {
        let v = if p.is_zero(k) {
            Value::Zero
        } else if r.is_lead_col(k) && p.normalized {
            Value::unit()
        } else {
            Value::Xi(Monomial::xi(k))
        };
        g.insert(GenPair::new(Monomial::tau(k).div(&dm.phi[k - 1]), v));
    }
    for j in 1..=d.ell {
        g.insert(GenPair::zero(Monomial::lambda(j)));
    }
    Ok(fraction_closure(&g))
}

/// λ-free generators of the Ĝ route: eliminate every λ_j from Ĝ.
pub fn g_hat_lambda_free(d: &DeformationData, r: &RankData, p: &PointPattern) -> Result<GenSet, DeformationError> {
    let mut s = build_g_hat(d, r, p)?;
    for j in 1..=d.ell {
        s = apply_lj_lambda(&s, j);
    }
    Ok(s)
}

fn eliminate(f: &GenSet, var: VarId, zero_positive: bool) -> GenSet {
    let mut out = GenSet::new();
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for p in f {
        let e = p.exponent(var);
        if e.is_zero() {
            out.insert(p.clone());
        } else if e.is_positive() {
            if zero_positive {
                out.insert(GenPair::zero(p.f.clone()));
            }
            pos.push((p, e));
        } else {
            neg.push((p, -e));
        }
    }
    for (p, ep) in &pos {
        for (n, en) in &neg {
            let (a, b) = balance(ep, en);
            out.insert(power_product(p, &a, n, &b));
        }
    }
    out
}

fn power_product(p: &GenPair, a: &BigInt, n: &GenPair, b: &BigInt) -> GenPair {
    let a = Q::from_integer(a.clone());
    let b = Q::from_integer(b.clone());
    GenPair::new(p.f.pow(&a).mul(&n.f.pow(&b)), p.v.pow(&a).mul(&n.v.pow(&b)))
}

/// ℒ_k: keep ν_k = 0, zero the value of ν_k > 0, add balanced cross products.
pub fn apply_lk(f: &GenSet, k: usize) -> GenSet {
    eliminate(f, VarId::Tau(k), true)
}

/// ℒ_j^λ: keep ν_j^λ = 0 and add balanced cross products; λ_j disappears.
pub fn apply_lj_lambda(f: &GenSet, j: usize) -> GenSet {
    eliminate(f, VarId::Lambda(j), false)
}

fn eliminate_modified(f: &GenSet, var: VarId, lambda_variant: bool) -> GenSet {
    let mut out = GenSet::new();
    let (mut z_pos, mut z_neg, mut x_pos, mut x_neg) = (vec![], vec![], vec![], vec![]);
    for p in f {
        let e = p.exponent(var);
        if e.is_zero() {
            out.insert(p.clone());
            continue;
        }
        let bucket = match (p.v.is_zero(), e.is_positive()) {
            (true, true) => &mut z_pos,
            (true, false) => &mut z_neg,
            (false, true) => &mut x_pos,
            (false, false) => &mut x_neg,
        };
        bucket.push((p.clone(), e.abs()));
    }
    let lam = |j: &GenPair, e: &Q| -> GenPair {
        // λ_j^a f^b with |ν| = a/b
        let a = Q::from_integer(e.numer().clone());
        let b = Q::from_integer(e.denom().clone());
        GenPair::zero(Monomial::var(var).pow(&a).mul(&j.f.pow(&b)))
    };
    if lambda_variant {
        for (p, e) in z_neg.iter().chain(&x_neg) {
            out.insert(lam(p, e));
        }
        for (p, e) in &x_pos {
            out.insert(lam(&GenPair::zero(p.f.inv()), e));
        }
    } else {
        for (p, _) in z_pos.iter().chain(&x_pos) {
            out.insert(GenPair::zero(p.f.clone()));
        }
        for (p, _) in &x_neg {
            out.insert(GenPair::zero(p.f.inv()));
        }
    }
    let positives: Vec<_> = z_pos.iter().chain(&x_pos).collect();
    let negatives: Vec<_> = z_neg.iter().chain(&x_neg).collect();
    for (p, ep) in &positives {
        for (n, en) in &negatives {
            let (a, b) = balance(ep, en);
            out.insert(power_product(p, &a, n, &b));
        }
    }
    // quotients against nonzero-valued pairs of the same sign
    for (group, partners) in [(&positives, &x_pos), (&negatives, &x_neg)] {
        for (p, ep) in group.iter() {
            for (g, eg) in partners.iter() {
                let (a, b) = balance(ep, eg);
                let inv = g.inverse().expect("nonzero value");
                out.insert(power_product(p, &a, &inv, &b));
            }
        }
    }
    out
}

/// The modified operation ℒ̃_k; equals ℒ_k on Q-closed input.
pub fn apply_lk_modified(f: &GenSet, k: usize) -> GenSet {
    eliminate_modified(f, VarId::Tau(k), false)
}

/// The modified operation ℒ̃_j^λ; equals ℒ_j^λ on Q-closed input containing (λ_j, 0).
pub fn apply_lj_lambda_modified(f: &GenSet, j: usize) -> GenSet {
    eliminate_modified(f, VarId::Lambda(j), true)
}

pub fn run_pipeline(d: &DeformationData, r: &RankData, p: &PointPattern) -> Result<PipelineResult, DeformationError> {
    p.validate(d)?;
    let dm = derive_monomials(d, r)?;
    let g = build_g_from(&dm, r, p);
    let mut cur = g.clone();
    let mut f0_stages = Vec::new();
    for &j in &r.rest_rows {
        cur = apply_lj_lambda(&cur, j);
        f0_stages.push((j, cur.clone()));
    }
    let f0 = cur.clone();
    let zero_cols_l: Vec<usize> = r.lead_cols.iter().copied().filter(|&k| p.is_zero(k)).collect();
    let mut f_stages = Vec::new();
    for &k in &zero_cols_l {
        cur = apply_lk(&cur, k);
        f_stages.push((k, cur.clone()));
    }
    let psi_values = dm.psi.iter().map(|(&k, m)| (k, psi_value(k, m, r, p))).collect();
    Ok(PipelineResult {
        g,
        f0_stages,
        f0,
        f_stages,
        q: zero_cols_l.len(),
        zero_cols_l,
        fq: cur,
        rank: r.clone(),
        derived: dm,
        pattern: p.clone(),
        psi_values,
        fixed_point: is_fixed_point(d, p),
    })
}

/// Invariants every pipeline output must satisfy.
pub fn pipeline_invariant_violations(pr: &PipelineResult) -> Vec<String> {
    let mut out = Vec::new();
    for p in &pr.fq {
        if p.f.has_lambda() {
            out.push(format!("{} still has λ variables", p.render()));
        }
        for &k in &pr.pattern.zero_blocks {
            let e = p.exponent(VarId::Tau(k));
            if e.is_negative() {
                out.push(format!("{}: negative exponent on zero block {k}", p.render()));
            }
            if !p.v.is_zero() && !e.is_zero() {
                out.push(format!("{}: nonzero value with τ_{k} dependence", p.render()));
            }
        }
    }
    for (j, s) in &pr.f0_stages {
        if fraction_closure(s) != *s {
            out.push(format!("F^(0,{j}) not closed under inverses"));
        }
    }
    for (k, s) in &pr.f_stages {
        if fraction_closure(s) != *s {
            out.push(format!("F after eliminating block {k} not closed under inverses"));
        }
    }
    out
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ValueError {
    #[error("{0} has λ variables and no value in the λ-free semigroup")]
    HasLambda(String),
    #[error("{0} is not representable over the pipeline generators with admissible signs")]
    NotRepresentable(String),
}

/// The unique value v with (f, v) in the semigroup generated from G.
pub fn value_of(f: &Monomial, pr: &PipelineResult) -> Result<Value, ValueError> {
    if f.has_lambda() {
        return Err(ValueError::HasLambda(f.render_fraction()));
    }
    let r = &pr.rank;
    let dm = &pr.derived;
    let p = &pr.pattern;
    let not_rep = || ValueError::NotRepresentable(f.render_fraction());
    if f.vars().any(|v| matches!(v, VarId::Tau(k) if *k > dm.phi.len())) {
        return Err(not_rep());
    }
    // ψ exponents are read off the non-leading τ's
    let mut rest = f.clone();
    let mut psi_exp: BTreeMap<usize, Q> = BTreeMap::new();
    for &k in &r.rest_cols {
        let a = f.exponent(VarId::Tau(k));
        if !a.is_zero() {
            rest = rest.div(&dm.psi[&k].pow(&a));
            psi_exp.insert(k, a);
        }
    }
    // φ⁻¹ exponents: α = M·ν_C
    let mut lead_exp: BTreeMap<usize, Q> = BTreeMap::new();
    for &j in &r.lead_rows {
        let a: Q = r.lead_cols.iter().map(|&c| pr_entry(pr, j, c) * rest.exponent(VarId::Tau(c))).sum();
        lead_exp.insert(j, a);
    }
    for (&j, a) in &lead_exp {
        rest = rest.div(&dm.phi_inv[&j].pow(a));
    }
    // what remains is a λ″ monomial
    let betas: Vec<Q> = r.rest_rows.iter().map(|&j| rest.exponent(VarId::Lambda(j))).collect();
    if rest.vars().any(|v| matches!(v, VarId::Tau(_))) {
        return Err(not_rep());
    }
    if lead_exp.values().any(|a| a.is_negative()) || betas.iter().any(|b| b.is_negative()) {
        return Err(not_rep());
    }
    if psi_exp.iter().any(|(k, a)| p.is_zero(*k) && a.is_negative()) {
        return Err(not_rep());
    }
    let forced_zero = lead_exp.values().any(|a| a.is_positive())
        || betas.iter().any(|b| b.is_positive())
        || pr.zero_cols_l.iter().any(|&k| f.exponent(VarId::Tau(k)).is_positive());
    if forced_zero {
        return Ok(Value::Zero);
    }
    let mut v = Value::unit();
    for (k, a) in &psi_exp {
        v = v.mul(&pr.psi_values[k].powi(a).ok_or_else(not_rep)?);
    }
    Ok(v)
}

fn pr_entry(pr: &PipelineResult, j: usize, c: usize) -> Q {
    // φ⁻¹ exponent vectors are the rows of (Mᵀ)⁻¹, so α = M·e uses the action matrix
    // entries, recovered here from φ_c = ∏ λ_j^{a_jc}.
    pr.derived.phi[c - 1].exponent(VarId::Lambda(j))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Membership {
    /// Exponent of each generator, in the set's canonical order.
    Yes(Vec<u64>),
    No,
    Unknown,
}

/// Integer conic-combination problem with denominators cleared.
struct Problem {
    cols: Vec<Vec<BigInt>>,
    target: Vec<BigInt>,
}

impl Problem {
    fn new(f: &Monomial, gens: &[&Monomial]) -> Problem {
        let vars: BTreeSet<VarId> = gens.iter().flat_map(|g| g.vars().copied()).chain(f.vars().copied()).collect();
        let sigma = gens
            .iter()
            .map(|g| g.denominator())
            .chain(std::iter::once(f.denominator()))
            .fold(BigInt::one(), |a, b| a.lcm(&b));
        let s = Q::from_integer(sigma);
        let vec_of = |m: &Monomial| -> Vec<BigInt> { vars.iter().map(|v| (m.exponent(*v) * &s).to_integer()).collect() };
        Problem { cols: gens.iter().map(|g| vec_of(g)).collect(), target: vec_of(f) }
    }

    fn rows(&self) -> usize {
        self.target.len()
    }

    fn constraints(&self, from: usize, target: &[BigInt], cap: Option<u64>) -> Vec<Constraint> {
        let n = self.cols.len() - from;
        let mut cons: Vec<Constraint> = (0..self.rows())
            .map(|i| {
                Constraint::new(
                    self.cols[from..].iter().map(|c| Q::from_integer(c[i].clone())).collect(),
                    Rel::Eq,
                    Q::from_integer(target[i].clone()),
                )
            })
            .collect();
        if let Some(c) = cap {
            cons.push(Constraint::new(vec![Q::one(); n], Rel::Le, Q::from_integer(BigInt::from(c))));
        }
        cons
    }

    fn cone_feasible(&self) -> bool {
        lp::feasible(self.cols.len(), &self.constraints(0, &self.target, None))
    }

    /// Supremum of Σα over the relaxation (None when unbounded or infeasible).
    fn max_total(&self) -> Option<Q> {
        let n = self.cols.len();
        match lp::maximize(n, &self.constraints(0, &self.target, None), &vec![Q::one(); n]) {
            LpOutcome::Optimal { value, .. } => Some(value),
            _ => None,
        }
    }

    fn lattice(&self) -> Lattice {
        Lattice::new(&self.cols, self.rows())
    }

    /// Depth-first search in lexicographic α order with LP range pruning.
    fn search(&self, cap: u64) -> Option<Vec<u64>> {
        let mut alpha = vec![0u64; self.cols.len()];
        if self.dfs(0, self.target.clone(), cap, &mut alpha) {
            Some(alpha)
        } else {
            None
        }
    }

    fn dfs(&self, s: usize, target: Vec<BigInt>, cap: u64, alpha: &mut Vec<u64>) -> bool {
        let n = self.cols.len();
        if s == n {
            return target.iter().all(|x| x.is_zero());
        }
        if target.iter().all(|x| x.is_zero()) {
            for a in alpha[s..].iter_mut() {
                *a = 0;
            }
            return true;
        }
        let cons = self.constraints(s, &target, Some(cap));
        let width = n - s;
        let mut obj = vec![Q::zero(); width];
        obj[0] = Q::one();
        let hi = match lp::maximize(width, &cons, &obj) {
            LpOutcome::Optimal { value, .. } => value.floor().to_integer(),
            LpOutcome::Infeasible => return false,
            LpOutcome::Unbounded => BigInt::from(cap),
        };
        obj[0] = -Q::one();
        let lo = match lp::maximize(width, &cons, &obj) {
            LpOutcome::Optimal { value, .. } => (-value).ceil().to_integer(),
            _ => BigInt::zero(),
        };
        let (Some(lo), Some(hi)) = (lo.to_u64(), hi.to_u64()) else {
            return false;
        };
        for a in lo..=hi.min(cap) {
            let next: Vec<BigInt> = target.iter().zip(&self.cols[s]).map(|(t, c)| t - c * BigInt::from(a)).collect();
            alpha[s] = a;
            if self.dfs(s + 1, next, cap - a, alpha) {
                return true;
            }
        }
        alpha[s] = 0;
        false
    }
}

/// Integer column lattice in Hermite-like echelon form.
struct Lattice {
    basis: Vec<Vec<BigInt>>,
    pivots: Vec<(usize, usize)>, // (row, basis index)
}

impl Lattice {
    fn new(cols: &[Vec<BigInt>], rows: usize) -> Lattice {
        let mut work: Vec<Vec<BigInt>> = cols.iter().filter(|c| c.iter().any(|x| !x.is_zero())).cloned().collect();
        let mut basis = Vec::new();
        let mut pivots = Vec::new();
        for r in 0..rows {
            // Euclid on row r across the remaining columns
            loop {
                let nz: Vec<usize> = (0..work.len()).filter(|&i| !work[i][r].is_zero()).collect();
                if nz.len() <= 1 {
                    break;
                }
                let p = *nz.iter().min_by_key(|&&i| work[i][r].abs()).unwrap();
                let pv = work[p].clone();
                for &i in &nz {
                    if i != p {
                        let qt = work[i][r].div_floor(&pv[r]);
                        for (x, y) in work[i].iter_mut().zip(&pv) {
                            *x -= &qt * y;
                        }
                    }
                }
                work.retain(|c| c.iter().any(|x| !x.is_zero()));
            }
            if let Some(i) = work.iter().position(|c| !c[r].is_zero()) {
                let col = work.remove(i);
                pivots.push((r, basis.len()));
                basis.push(col);
            }
        }
        Lattice { basis, pivots }
    }

    fn contains(&self, t: &[BigInt]) -> bool {
        let mut t = t.to_vec();
        let mut pi = 0;
        for r in 0..t.len() {
            if pi < self.pivots.len() && self.pivots[pi].0 == r {
                let col = &self.basis[self.pivots[pi].1];
                let (qt, rem) = t[r].div_rem(&col[r]);
                if !rem.is_zero() {
                    return false;
                }
                for (x, y) in t.iter_mut().zip(col) {
                    *x -= &qt * y;
                }
                pi += 1;
            } else if !t[r].is_zero() {
                return false;
            }
        }
        true
    }
}

/// Is f a non-negative integer combination of the monomials of H?
pub fn mono_membership(f: &Monomial, h: &GenSet, bound: u64) -> Membership {
    let gens: Vec<&Monomial> = h.iter().map(|p| &p.f).collect();
    membership_in(f, &gens, bound)
}

fn membership_in(f: &Monomial, gens: &[&Monomial], bound: u64) -> Membership {
    if f.is_one() {
        return Membership::Yes(vec![0; gens.len()]);
    }
    let pb = Problem::new(f, gens);
    if !pb.cone_feasible() || !pb.lattice().contains(&pb.target) {
        return Membership::No;
    }
    let (cap, complete) = match pb.max_total() {
        Some(m) if m <= Q::from_integer(BigInt::from(bound)) => (m.floor().to_integer().to_u64().unwrap_or(0), true),
        _ => (bound, false),
    };
    match pb.search(cap) {
        Some(a) => Membership::Yes(a),
        None if complete => Membership::No,
        None => Membership::Unknown,
    }
}

/// Value of the product ∏ h_s^{α_s}.
pub fn witness_value(h: &GenSet, alpha: &[u64]) -> Value {
    h.iter().zip(alpha).fold(Value::unit(), |v, (p, &a)| v.mul(&p.v.pow(&Q::from_integer(BigInt::from(a)))))
}

#[derive(Clone, Debug, PartialEq)]
pub enum Radical {
    Yes { n: u32, witness: Vec<u64> },
    No(NoReason),
    Unknown,
}

#[derive(Clone, Debug, PartialEq)]
pub enum NoReason {
    /// f lies outside the rational cone of H: no power can be a member.
    ConeInfeasible,
    /// some power of f is a member with a different value; values are unique
    /// in the semigroups this is used on, so the pair itself is excluded.
    ValueMismatch { n: u32, found: Value },
}

impl Radical {
    pub fn is_yes(&self) -> bool {
        matches!(self, Radical::Yes { .. })
    }

    pub fn is_no(&self) -> bool {
        matches!(self, Radical::No(_))
    }
}

/// Smallest N ≤ max_N with p^N ∈ [H] (monomial membership plus value check).
///
/// `zero_blocks`: blocks k for which a target with ν_k > 0 may take value 0
/// regardless of the witness' value (the (1, 0) adjunction).
pub fn radical_member_ctx(p: &GenPair, h: &GenSet, max_n: u32, zero_blocks: &[usize]) -> Radical {
    let gens: Vec<&Monomial> = h.iter().map(|x| &x.f).collect();
    let pb = Problem::new(&p.f, &gens);
    if !p.f.is_one() && !pb.cone_feasible() {
        return Radical::No(NoReason::ConeInfeasible);
    }
    let lattice = pb.lattice();
    let adjoin = p.v.is_zero() && zero_blocks.iter().any(|&k| p.f.exponent(VarId::Tau(k)).is_positive());
    let mut unknown = false;
    for n in 1..=max_n {
        let nq = Q::from_integer(BigInt::from(n));
        let target: Vec<BigInt> = pb.target.iter().map(|t| t * BigInt::from(n)).collect();
        if !lattice.contains(&target) {
            continue;
        }
        match membership_in(&p.f.pow(&nq), &gens, DEFAULT_BOUND) {
            Membership::Yes(w) => {
                let found = witness_value(h, &w);
                let want = p.v.pow(&nq);
                if found == want || (adjoin && want.is_zero()) {
                    return Radical::Yes { n, witness: w };
                }
                return Radical::No(NoReason::ValueMismatch { n, found });
            }
            Membership::No => {}
            Membership::Unknown => unknown = true,
        }
    }
    let _ = unknown;
    Radical::Unknown
}

pub fn radical_member(p: &GenPair, h: &GenSet, max_n: u32) -> Radical {
    radical_member_ctx(p, h, max_n, &[])
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

/// Mutual radical membership of the generators of A and B.
pub fn equivalent(a: &GenSet, b: &GenSet, max_n: u32) -> Verdict {
    let mut unknown = false;
    for (x, y) in [(a, b), (b, a)] {
        for p in x {
            match radical_member(p, y, max_n) {
                Radical::Yes { .. } => {}
                Radical::No(_) => return Verdict::No,
                Radical::Unknown => unknown = true,
            }
        }
    }
    if unknown {
        Verdict::Unknown
    } else {
        Verdict::Yes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deformation::rank_and_normalize;

    fn m(s: &str) -> Monomial {
        Monomial::parse(s).unwrap()
    }

    fn zset(items: &[&str]) -> GenSet {
        items.iter().map(|s| GenPair::zero(m(s))).collect()
    }

    fn pipeline(rows: &[&[i64]], zeros: &[usize]) -> PipelineResult {
        let d = DeformationData::from_ints(rows).unwrap();
        let p = PointPattern::zeros(zeros);
        let r = rank_and_normalize(&d, &p).unwrap();
        run_pipeline(&d, &r, &p).unwrap()
    }

    #[test]
    fn two_lines_through_a_plane() {
        let pr = pipeline(&[&[1, 0, 1], &[0, 1, 1]], &[1, 2]);
        let x3 = Value::Xi(Monomial::xi(3));
        let mut f0 = zset(&["t1", "t2"]);
        f0.insert(GenPair::new(m("t3/(t1*t2)"), x3.clone()));
        f0.insert(GenPair::new(m("t1*t2/t3"), x3.inv().unwrap()));
        assert_eq!(pr.f0, f0);
        let mut f1 = zset(&["t1", "t2", "t1*t2/t3", "t3/t2"]);
        f1.insert(GenPair::unit());
        assert_eq!(pr.f_stages[0].1, f1);
        let mut f2 = zset(&["t1", "t2", "t1*t2/t3", "t3"]);
        f2.insert(GenPair::unit());
        assert_eq!(pr.fq, f2);
        assert!(pipeline_invariant_violations(&pr).is_empty());
        assert_eq!(value_of(&m("t3/(t1*t2)"), &pr).unwrap(), x3);
        assert_eq!(value_of(&m("t1"), &pr).unwrap(), Value::Zero);
        assert_eq!(value_of(&Monomial::one(), &pr).unwrap(), Value::unit());
        assert!(matches!(mono_membership(&m("t3"), &pr.f_stages[0].1, 200), Membership::Yes(_)));
    }

    #[test]
    fn lambda_elimination_stages() {
        let pr = pipeline(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 0, 1], &[0, 1, 1]], &[]);
        assert_eq!(pr.g, zset(&["t1/l4", "t2/l5", "t3/(l4*l5)", "l4", "l5"]));
        assert_eq!(pr.f0_stage(4).unwrap(), &zset(&["t1", "t2/l5", "t3/l5", "l5"]));
        assert_eq!(pr.fq, zset(&["t1", "t2", "t3"]));
        let pr = pipeline(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1], &[1, 1, 1]], &[]);
        assert_eq!(pr.fq, zset(&["t1", "t2", "t3/t2", "t3/t1"]));
    }

    #[test]
    fn modified_operations_agree() {
        let pr = pipeline(&[&[1, 0, 1], &[0, 1, 1]], &[1, 2]);
        assert_eq!(apply_lk_modified(&pr.f0, 1), apply_lk(&pr.f0, 1));
        let pr = pipeline(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 0, 1], &[0, 1, 1]], &[]);
        assert_eq!(apply_lj_lambda_modified(&pr.g, 4), apply_lj_lambda(&pr.g, 4));
        let single = zset(&["t1"]);
        assert_eq!(apply_lk_modified(&single, 1), single);
    }

    #[test]
    fn radicals_and_equivalence() {
        let majima = pipeline(&[&[1, 0], &[0, 1]], &[]);
        assert_eq!(radical_member(&GenPair::zero(m("t1^(-1)")), &majima.fq, 64), Radical::No(NoReason::ConeInfeasible));
        let pr = pipeline(&[&[1, 0, 1], &[0, 1, 1]], &[1, 2]);
        for p in &pr.f0 {
            if p.f.exponent(VarId::Tau(1)).is_negative() || p.f.exponent(VarId::Tau(2)).is_negative() {
                continue;
            }
            let v = value_of(&p.f, &pr).unwrap();
            assert!(radical_member(&GenPair::new(p.f.clone(), v), &pr.fq, 4).is_yes());
        }
        assert_eq!(equivalent(&zset(&["t1"]), &zset(&["t2"]), 8), Verdict::No);
        assert_eq!(equivalent(&pr.fq, &pr.fq, 8), Verdict::Yes);
        let d = DeformationData::from_ints(&[&[1, 0], &[0, 1]]).unwrap();
        let p = PointPattern::generic();
        let r = rank_and_normalize(&d, &p).unwrap();
        assert_eq!(equivalent(&g_hat_lambda_free(&d, &r, &p).unwrap(), &majima.fq, 8), Verdict::Yes);
        assert_eq!(g_hat_lambda_free(&d, &r, &pipeline(&[&[1, 0, 1], &[0, 1, 1]], &[1, 2]).pattern).ok().is_some(), true);
    }

    #[test]
    fn lattice_gap_is_not_a_member() {
        let h = zset(&["t1^2", "t2"]);
        assert_eq!(mono_membership(&m("t1"), &h, 200), Membership::No);
        match radical_member(&GenPair::zero(m("t1")), &h, 8) {
            Radical::Yes { n, .. } => assert_eq!(n, 2),
            o => panic!("{o:?}"),
        }
    }
}
