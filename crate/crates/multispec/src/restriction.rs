//! Does adding one submanifold row β to the action matrix keep the multicone
//! family (equivalently, the radical of the generated semigroup)?

use crate::deformation::{derive_monomials, rank_and_normalize, rank_with_leads, DeformationData, DeformationError, PointPattern};
use crate::linalg;
use crate::lp::{self, Constraint, Rel};
use crate::monomial::{GenPair, Monomial, Value, VarId};
use crate::rat::Q;
use crate::semigroup::{run_pipeline, PipelineResult};
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RestrictionCase {
    SameRank,
    RankPlusOne,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Condition {
    /// v = 0 ⇒ log f(e^β) ≥ 0
    ZeroValueNonNegative,
    /// v ≠ 0 ⇒ log f(e^β) = 0
    NonzeroValueBalanced,
    /// b_k = 0 for the non-pivot, non-leading blocks outside the zero pattern
    ExtraColumnsVanish,
}

impl Condition {
    pub fn describe(&self) -> &'static str {
        match self {
            Condition::ZeroValueNonNegative => "v = 0 requires log f(e^beta) >= 0",
            Condition::NonzeroValueBalanced => "v != 0 requires log f(e^beta) = 0",
            Condition::ExtraColumnsVanish => "b_k = 0 required for the remaining non-leading blocks outside the zero pattern",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RestrictionVerdict {
    pub case: RestrictionCase,
    pub holds: bool,
    pub b_values: BTreeMap<usize, Q>,
    pub witnesses: Vec<(GenPair, Condition)>,
    /// β is a non-negative combination of the leading rows (same-rank only).
    pub nonneg_combination: Option<bool>,
    pub pivot: Option<usize>,
    /// φ⁻¹ and ψ monomials of the enlarged matrix, from the pivot formulas.
    pub transformed_phi_inv: BTreeMap<usize, Monomial>,
    pub transformed_psi: BTreeMap<usize, Monomial>,
    pub notes: Vec<String>,
    pub pipeline_a: PipelineResult,
}

impl RestrictionVerdict {
    pub fn witness_monomials(&self) -> Vec<&Monomial> {
        self.witnesses.iter().map(|(p, _)| &p.f).collect()
    }

    pub fn to_json(&self) -> Json {
        json!({
            "case": format!("{:?}", self.case),
            "holds": self.holds,
            "b": self.b_values.iter().map(|(k, b)| (k.to_string(), json!(crate::rat::fmt_q(b)))).collect::<serde_json::Map<_, _>>(),
            "pivot": self.pivot,
            "nonneg_combination": self.nonneg_combination,
            "witnesses": self.witnesses.iter().map(|(p, c)| json!({"pair": p.render(), "condition": c.describe()})).collect::<Vec<_>>(),
            "transformed_phi_inv": self.transformed_phi_inv.iter().map(|(k, m)| (k.to_string(), json!(m.render_fraction()))).collect::<serde_json::Map<_, _>>(),
            "transformed_psi": self.transformed_psi.iter().map(|(k, m)| (k.to_string(), json!(m.render_fraction()))).collect::<serde_json::Map<_, _>>(),
            "notes": self.notes,
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RestrictionError {
    #[error("adding the row changes the rank; use the rank-plus-one check")]
    RankIncreases,
    #[error("adding the row keeps the rank; use the same-rank check")]
    RankUnchanged,
    #[error("the added row has {0} entries but the matrix has {1} blocks")]
    WrongLength(usize, usize),
    #[error("rank increased although every non-leading b_k vanishes; inconsistent input")]
    NoPivot,
    #[error(transparent)]
    Deformation(#[from] DeformationError),
}

/// log f(e^β) with λ-exponents dropped: Σ_k ν_k(f)·β_k.
pub fn log_at_exp_beta(f: &Monomial, beta: &[Q]) -> Q {
    f.exps()
        .iter()
        .filter_map(|(v, e)| match v {
            VarId::Tau(k) => Some(e * &beta[k - 1]),
            _ => None,
        })
        .sum()
}

fn enlarged(d: &DeformationData, beta: &[Q]) -> Result<DeformationData, RestrictionError> {
    if beta.len() != d.m {
        return Err(RestrictionError::WrongLength(beta.len(), d.m));
    }
    Ok(d.with_row(beta)?)
}

fn zero_value_violations(pr: &PipelineResult, beta: &[Q], out: &mut Vec<(GenPair, Condition)>) {
    for p in &pr.fq {
        if p.v.is_zero() && log_at_exp_beta(&p.f, beta).is_negative() {
            out.push((p.clone(), Condition::ZeroValueNonNegative));
        }
    }
}

pub fn check_same_rank(d: &DeformationData, p: &PointPattern, beta: &[Q]) -> Result<RestrictionVerdict, RestrictionError> {
    let b = enlarged(d, beta)?;
    if b.rank() != d.rank() {
        return Err(RestrictionError::RankIncreases);
    }
    let r = rank_and_normalize(d, p)?;
    let pr = run_pipeline(d, &r, p)?;
    let mut witnesses = Vec::new();
    zero_value_violations(&pr, beta, &mut witnesses);
    let b_values = pr.derived.phi_inv.iter().map(|(&j, m)| (j, log_at_exp_beta(m, beta))).collect();
    // β = Σ c_j α_j over the leading rows with c ≥ 0
    let cons: Vec<Constraint> = (0..d.m)
        .map(|k| Constraint::new(r.lead_rows.iter().map(|&j| d.entry(j, k + 1).clone()).collect(), Rel::Eq, beta[k].clone()))
        .collect();
    let nonneg = lp::feasible(r.lead_rows.len(), &cons);
    Ok(RestrictionVerdict {
        case: RestrictionCase::SameRank,
        holds: witnesses.is_empty(),
        b_values,
        witnesses,
        nonneg_combination: Some(nonneg),
        pivot: None,
        transformed_phi_inv: BTreeMap::new(),
        transformed_psi: BTreeMap::new(),
        notes: Vec::new(),
        pipeline_a: pr,
    })
}

pub fn check_rank_plus_one(d: &DeformationData, p: &PointPattern, beta: &[Q]) -> Result<RestrictionVerdict, RestrictionError> {
    let b = enlarged(d, beta)?;
    if b.rank() != d.rank() + 1 {
        return Err(RestrictionError::RankUnchanged);
    }
    let r = rank_and_normalize(d, p)?;
    let pr = run_pipeline(d, &r, p)?;
    let dm = &pr.derived;
    let mut b_values: BTreeMap<usize, Q> = BTreeMap::new();
    for (&j, m) in &dm.phi_inv {
        b_values.insert(j, log_at_exp_beta(m, beta));
    }
    let mut b_cols: BTreeMap<usize, Q> = BTreeMap::new();
    for (&k, m) in &dm.psi {
        b_cols.insert(k, log_at_exp_beta(m, beta));
    }
    let pivot = b_cols.iter().find(|(_, b)| !b.is_zero()).map(|(&k, _)| k).ok_or(RestrictionError::NoPivot)?;
    let mut witnesses = Vec::new();
    zero_value_violations(&pr, beta, &mut witnesses);
    for p in &pr.fq {
        if !p.v.is_zero() && !log_at_exp_beta(&p.f, beta).is_zero() {
            witnesses.push((p.clone(), Condition::NonzeroValueBalanced));
        }
    }
    for (&k, bk) in &b_cols {
        if k != pivot && !pr.pattern.is_zero(k) && !bk.is_zero() {
            witnesses.push((GenPair::new(dm.psi[&k].clone(), pr.psi_values[&k].clone()), Condition::ExtraColumnsVanish));
        }
    }
    let mut notes = Vec::new();
    if pr.fq.iter().all(|p| p.v.is_zero() || p.f.is_one()) {
        notes.push("no nonzero-valued generator: the balanced-value condition is vacuous on this generator set".into());
    }
    // transformed monomials of the enlarged matrix
    let psi_piv = &dm.psi[&pivot];
    let bp = &b_cols[&pivot];
    let mut phi_b = BTreeMap::new();
    for (&j, m) in &dm.phi_inv {
        phi_b.insert(j, m.div(&psi_piv.pow(&(&b_values[&j] / bp))));
    }
    phi_b.insert(d.ell + 1, psi_piv.pow(&(Q::one() / bp)));
    let mut psi_b = BTreeMap::new();
    for (&k, m) in &dm.psi {
        if k != pivot {
            psi_b.insert(k, m.div(&psi_piv.pow(&(&b_cols[&k] / bp))));
        }
    }
    let mut all_b = b_values;
    all_b.extend(b_cols);
    Ok(RestrictionVerdict {
        case: RestrictionCase::RankPlusOne,
        holds: witnesses.is_empty(),
        b_values: all_b,
        witnesses,
        nonneg_combination: None,
        pivot: Some(pivot),
        transformed_phi_inv: phi_b,
        transformed_psi: psi_b,
        notes,
        pipeline_a: pr,
    })
}

/// Dispatches on the rank of the enlarged matrix.
pub fn check_restriction(d: &DeformationData, p: &PointPattern, beta: &[Q]) -> Result<RestrictionVerdict, RestrictionError> {
    let b = enlarged(d, beta)?;
    if b.rank() == d.rank() {
        check_same_rank(d, p, beta)
    } else {
        check_rank_plus_one(d, p, beta)
    }
}

/// Pipeline of the enlarged matrix at the same point pattern.
pub fn enlarged_pipeline(d: &DeformationData, p: &PointPattern, beta: &[Q]) -> Result<PipelineResult, RestrictionError> {
    let b = enlarged(d, beta)?;
    let r = rank_and_normalize(&b, p)?;
    Ok(run_pipeline(&b, &r, p)?)
}

#[derive(Clone, Debug)]
pub struct H2Step {
    /// Manifold removed in this step (index into the original family, 1-based).
    pub removed: usize,
    /// Closed-form φ⁻¹ of the larger family agrees with exact inversion.
    pub closed_forms_agree: bool,
    /// log ψ_{new}(e^β) (expected 1).
    pub log_psi_new: Option<Q>,
    /// log φ_{jA}⁻¹(e^β) (expected in {0, 1}).
    pub log_phi_a: Vec<Q>,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct H2Report {
    pub h2_holds: bool,
    pub offending_pair: Option<(usize, usize)>,
    pub steps: Vec<H2Step>,
}

impl H2Report {
    pub fn compatible(&self) -> bool {
        self.h2_holds
            && self.steps.iter().all(|s| {
                s.closed_forms_agree
                    && s.log_psi_new.as_ref().is_none_or(|x| x.is_one())
                    && s.log_phi_a.iter().all(|x| x.is_zero() || x.is_one())
            })
    }
}

fn h2_pair_ok(a: &BTreeSet<usize>, b: &BTreeSet<usize>) -> bool {
    a.is_subset(b) || b.is_subset(a) || a.is_disjoint(b)
}

/// Blocks Î_j = I_j minus the strictly smaller members of the family.
fn h2_blocks(i_sets: &[BTreeSet<usize>]) -> Vec<BTreeSet<usize>> {
    i_sets
        .iter()
        .map(|ij| {
            let mut s = ij.clone();
            for ii in i_sets {
                if ii != ij && ii.is_subset(ij) {
                    s = s.difference(ii).copied().collect();
                }
            }
            s
        })
        .collect()
}

/// φ⁻¹_j = τ_j if I_j is maximal, else τ_j/τ_{k_j} with I_{k_j} the smallest strict superset.
fn h2_closed_form(i_sets: &[BTreeSet<usize>], j: usize) -> Monomial {
    let sup = (0..i_sets.len())
        .filter(|&k| k != j && i_sets[j].is_subset(&i_sets[k]) && i_sets[k] != i_sets[j])
        .min_by_key(|&k| i_sets[k].len());
    match sup {
        None => Monomial::tau(j + 1),
        Some(k) => Monomial::tau(j + 1).div(&Monomial::tau(k + 1)),
    }
}

/// Verifies the nested-or-disjoint condition on the family and, removing the
/// manifolds outside `subset` one at a time, the closed-form monomials and the
/// log-form value assertions at each step.
pub fn check_h2_subfamily(i_sets_b: &[BTreeSet<usize>], subset: &[usize]) -> H2Report {
    for a in 0..i_sets_b.len() {
        for b in a + 1..i_sets_b.len() {
            if !h2_pair_ok(&i_sets_b[a], &i_sets_b[b]) {
                return H2Report { h2_holds: false, offending_pair: Some((a + 1, b + 1)), steps: Vec::new() };
            }
        }
    }
    let mut current: Vec<usize> = (1..=i_sets_b.len()).collect();
    let mut steps = Vec::new();
    let mut to_remove: Vec<usize> = current.iter().copied().filter(|j| !subset.contains(j)).collect();
    to_remove.reverse();
    for removed in to_remove {
        // order: kept manifolds, then the removed one last
        let mut order: Vec<usize> = current.iter().copied().filter(|&j| j != removed).collect();
        order.push(removed);
        let fam: Vec<BTreeSet<usize>> = order.iter().map(|&j| i_sets_b[j - 1].clone()).collect();
        steps.push(h2_step(&fam, removed));
        current.retain(|&j| j != removed);
    }
    H2Report { h2_holds: true, offending_pair: None, steps }
}

fn h2_step(fam: &[BTreeSet<usize>], removed: usize) -> H2Step {
    let n = fam.len();
    let blocks = h2_blocks(fam);
    let degenerate = |note: &str| H2Step {
        removed,
        closed_forms_agree: true,
        log_psi_new: None,
        log_phi_a: Vec::new(),
        note: Some(note.to_string()),
    };
    if blocks.iter().any(|b| b.is_empty()) {
        return degenerate("some manifold is covered by smaller members; no square block matrix");
    }
    let rows: Vec<Vec<Q>> = fam
        .iter()
        .map(|ii| blocks.iter().map(|bj| if bj.is_subset(ii) { Q::one() } else { Q::zero() }).collect())
        .collect();
    let Ok(bmat) = DeformationData::new(rows.clone()) else {
        return degenerate("block matrix has a zero row");
    };
    if bmat.rank() < n {
        return degenerate("block matrix is singular");
    }
    let all: Vec<usize> = (1..=n).collect();
    let Ok(rb) = rank_with_leads(&bmat, &all, &all) else {
        return degenerate("block matrix is singular");
    };
    let Ok(dmb) = derive_monomials(&bmat, &rb) else {
        return degenerate("block matrix is singular");
    };
    let mut agree = (0..n).all(|j| dmb.phi_inv[&(j + 1)] == h2_closed_form(fam, j));
    // the smaller family: first n−1 rows, leading columns 1..n−1
    let a_rows: Vec<Vec<Q>> = rows[..n - 1].to_vec();
    let beta = &rows[n - 1];
    let (mut log_phi_a, mut log_psi_new) = (Vec::new(), None);
    if let Ok(amat) = DeformationData::new(a_rows) {
        let lead: Vec<usize> = (1..n).collect();
        if let Ok(ra) = rank_with_leads(&amat, &lead, &lead) {
            if let Ok(dma) = derive_monomials(&amat, &ra) {
                let sub = &fam[..n - 1];
                agree &= (0..n - 1).all(|j| dma.phi_inv[&(j + 1)] == h2_closed_form(sub, j));
                log_phi_a = (1..n).map(|j| log_at_exp_beta(&dma.phi_inv[&j], beta)).collect();
                let psi = &dma.psi[&n];
                // ψ_new closed form: τ_n, or τ_n/τ_k with I_k the smallest superset in the smaller family
                let sup = (0..n - 1).filter(|&k| fam[n - 1].is_subset(&fam[k])).min_by_key(|&k| fam[k].len());
                let closed = match sup {
                    None => Monomial::tau(n),
                    Some(k) => Monomial::tau(n).div(&Monomial::tau(k + 1)),
                };
                agree &= *psi == closed;
                log_psi_new = Some(log_at_exp_beta(psi, beta));
            }
        }
    }
    H2Step { removed, closed_forms_agree: agree, log_psi_new, log_phi_a, note: None }
}

/// The value a failing pair must have in the enlarged semigroup, when it is there at all.
pub fn enlarged_value(pair: &GenPair, pr_b: &PipelineResult) -> Option<Value> {
    crate::semigroup::value_of(&pair.f, pr_b).ok()
}

/// Sanity check: every ψ has log ψ(e^{α_i}) = 0 for every row α_i.
pub fn psi_rows_vanish(d: &DeformationData, pr: &PipelineResult) -> bool {
    pr.derived.psi.values().all(|psi| (1..=d.ell).all(|i| log_at_exp_beta(psi, d.row(i)).is_zero()))
}

/// log φ_j⁻¹(e^{α_i}) with λ dropped equals δ_ij on the leading rows.
pub fn phi_inv_rows_are_dual(d: &DeformationData, pr: &PipelineResult) -> bool {
    let r = &pr.rank;
    r.lead_rows.iter().all(|&j| {
        r.lead_rows.iter().all(|&i| {
            let want = if i == j { Q::one() } else { Q::zero() };
            log_at_exp_beta(&pr.derived.phi_inv[&j], d.row(i)) == want
        })
    })
}

pub fn rank_of_rows(rows: &[Vec<Q>]) -> usize {
    linalg::rank(&rows.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::q;
    use crate::semigroup::{radical_member, NoReason, Radical};

    fn m(s: &str) -> Monomial {
        Monomial::parse(s).unwrap()
    }

    fn qs(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x)).collect()
    }

    fn set(v: &[usize]) -> BTreeSet<usize> {
        v.iter().copied().collect()
    }

    #[test]
    fn log_values() {
        assert_eq!(log_at_exp_beta(&m("t2/(t1*t3)"), &qs(&[1, 1, 1])), q(-1));
        assert_eq!(log_at_exp_beta(&m("t1*t3/t2"), &qs(&[0, 1, 0])), q(-1));
        assert_eq!(log_at_exp_beta(&Monomial::one(), &qs(&[3, 4, 5])), q(0));
    }

    #[test]
    fn same_rank_cases() {
        let a = DeformationData::from_ints(&[&[1, 0, 0], &[0, 1, 1], &[0, 0, 1]]).unwrap();
        let v = check_same_rank(&a, &PointPattern::generic(), &qs(&[1, 1, 1])).unwrap();
        assert!(v.holds);
        assert_eq!(v.nonneg_combination, Some(true));
        let a = DeformationData::from_ints(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1]]).unwrap();
        let p = PointPattern::generic();
        let v = check_same_rank(&a, &p, &qs(&[1, 1, 1])).unwrap();
        assert!(!v.holds);
        assert_eq!(v.witness_monomials(), vec![&m("t3/(t1*t2)")]);
        let pb = enlarged_pipeline(&a, &p, &qs(&[1, 1, 1])).unwrap();
        assert!(radical_member(&v.witnesses[0].0, &pb.fq, 64).is_no());
        assert!(check_same_rank(&a, &PointPattern::zeros(&[2]), &qs(&[1, 1, 1])).unwrap().holds);
        assert!(check_same_rank(&a, &PointPattern::zeros(&[1]), &qs(&[1, 1, 1])).unwrap().holds);
    }

    #[test]
    fn rank_plus_one_with_value_witness() {
        let a = DeformationData::from_ints(&[&[1, 1, 0, 1], &[0, 1, 1, 0]]).unwrap();
        let p = PointPattern::zeros(&[3]);
        let beta = qs(&[1, 1, 1, 0]);
        let v = check_rank_plus_one(&a, &p, &beta).unwrap();
        assert!(!v.holds);
        let w = v.witnesses.iter().find(|(pr, _)| pr.f == m("t1/t4")).expect("τ1/τ4 witness");
        let pb = enlarged_pipeline(&a, &p, &beta).unwrap();
        assert!(matches!(radical_member(&w.0, &pb.fq, 64), Radical::No(NoReason::ValueMismatch { .. })));
        assert!(check_rank_plus_one(&a, &p, &qs(&[1, 1, 1, 1])).unwrap().holds);
        assert!(matches!(check_same_rank(&a, &p, &beta), Err(RestrictionError::RankIncreases)));
    }

    #[test]
    fn nested_or_disjoint_families() {
        let majima = [set(&[1]), set(&[2]), set(&[3])];
        let r = check_h2_subfamily(&majima, &[1, 2]);
        assert!(r.h2_holds && r.compatible(), "{r:?}");
        let chain = [set(&[1, 2, 3]), set(&[2, 3]), set(&[3])];
        let r = check_h2_subfamily(&chain, &[1, 2]);
        assert!(r.compatible(), "{r:?}");
        assert_eq!(r.steps[0].log_psi_new, Some(q(1)));
        let overlap = [set(&[1, 2]), set(&[2, 3])];
        let r = check_h2_subfamily(&overlap, &[1]);
        assert!(!r.h2_holds);
        assert_eq!(r.offending_pair, Some((1, 2)));
    }
}
