//! Action matrices, their rank data, and the monomials φ, φ⁻¹, ψ derived
//! from them.
//!
//! Indices of actions (rows) and blocks (columns) are 1-based everywhere in
//! the public API, matching the variable names τ_k and λ_j.

use crate::linalg::{self, Matrix};
use crate::monomial::{Monomial, VarId};
use crate::rat::{fmt_q, parse_q, Q};
use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde_json::{json, Value as Json};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum DeformationError {
    #[error("the index family is empty or all its sets are empty")]
    EmptyFamily,
    #[error("row {0} of the action matrix is zero: the action is the identity and should be removed")]
    ZeroRow(usize),
    #[error("negative entry {1} in row {0} of the action matrix")]
    NegativeEntry(usize, String),
    #[error("malformed deformation: {0}")]
    Malformed(String),
    #[error("block {0} has a zero column but is not in the zero pattern; the base point must vanish on blocks fixed by every action")]
    ZeroColumnNotInPattern(usize),
    #[error("the point is outside the fixed-point locus but no invertible leading minor avoids the zero blocks (inconsistent rank data)")]
    NoQualifyingMinor,
    #[error("no vector-bundle structure is guaranteed: the family is not of transitive type (two cleanly but non-transversally intersecting submanifolds already break it)")]
    NotTransitive,
    #[error("leading minor is singular")]
    SingularMinor,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeformationData {
    pub ell: usize,
    pub m: usize,
    pub block_dims: Vec<usize>,
    /// ℓ × m, non-negative rationals.
    pub a: Matrix,
    /// K_j: blocks vanishing on M_j (1-based), derived from row supports when not given.
    pub k_sets: Vec<BTreeSet<usize>>,
    pub warnings: Vec<String>,
}

impl DeformationData {
    pub fn new(a: Matrix) -> Result<Self, DeformationError> {
        let m = a.first().map_or(0, |r| r.len());
        Self::with_blocks(a, vec![1; m], None)
    }

    pub fn from_ints(rows: &[&[i64]]) -> Result<Self, DeformationError> {
        Self::new(rows.iter().map(|r| r.iter().map(|&x| crate::rat::q(x)).collect()).collect())
    }

    pub fn with_blocks(a: Matrix, block_dims: Vec<usize>, k_sets: Option<Vec<BTreeSet<usize>>>) -> Result<Self, DeformationError> {
        let ell = a.len();
        if ell == 0 {
            return Err(DeformationError::Malformed("no actions".into()));
        }
        let m = a[0].len();
        if m == 0 || a.iter().any(|r| r.len() != m) {
            return Err(DeformationError::Malformed("ragged or empty action matrix".into()));
        }
        if block_dims.len() != m || block_dims.contains(&0) {
            return Err(DeformationError::Malformed("block_dims must list m positive sizes".into()));
        }
        for (j, row) in a.iter().enumerate() {
            if let Some(x) = row.iter().find(|x| x.is_negative()) {
                return Err(DeformationError::NegativeEntry(j + 1, fmt_q(x)));
            }
            if row.iter().all(|x| x.is_zero()) {
                return Err(DeformationError::ZeroRow(j + 1));
            }
        }
        let support: Vec<BTreeSet<usize>> =
            a.iter().map(|r| r.iter().enumerate().filter(|(_, x)| !x.is_zero()).map(|(k, _)| k + 1).collect()).collect();
        let k_sets = match k_sets {
            Some(ks) => {
                if ks != support {
                    return Err(DeformationError::Malformed(
                        "K sets disagree with the nonzero pattern of the action matrix".into(),
                    ));
                }
                ks
            }
            None => support,
        };
        let mut warnings = Vec::new();
        for i in 0..ell {
            for j in i + 1..ell {
                if a[i] == a[j] {
                    warnings.push(format!(
                        "rows {} and {} coincide; duplicated submanifolds can be merged into one deformation parameter",
                        i + 1,
                        j + 1
                    ));
                }
            }
        }
        Ok(DeformationData { ell, m, block_dims, a, k_sets, warnings })
    }

    pub fn entry(&self, j: usize, k: usize) -> &Q {
        &self.a[j - 1][k - 1]
    }

    pub fn row(&self, j: usize) -> &[Q] {
        &self.a[j - 1]
    }

    pub fn column(&self, k: usize) -> Vec<Q> {
        self.a.iter().map(|r| r[k - 1].clone()).collect()
    }

    pub fn rank(&self) -> usize {
        linalg::rank(&self.a)
    }

    /// Matrix with an extra row appended.
    pub fn with_row(&self, beta: &[Q]) -> Result<DeformationData, DeformationError> {
        let mut a = self.a.clone();
        a.push(beta.to_vec());
        DeformationData::with_blocks(a, self.block_dims.clone(), None)
    }

    pub fn to_json(&self) -> Json {
        json!({
            "ell": self.ell,
            "m": self.m,
            "A": self.a.iter().map(|r| r.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "blocks": self.block_dims,
            "K": self.k_sets.iter().map(|s| s.iter().copied().collect::<Vec<_>>()).collect::<Vec<_>>(),
        })
    }

    pub fn from_json(j: &Json) -> Result<DeformationData, DeformationError> {
        let bad = |s: &str| DeformationError::Malformed(s.into());
        let rows = j.get("A").and_then(|a| a.as_array()).ok_or_else(|| bad("missing \"A\""))?;
        let mut a = Vec::new();
        for r in rows {
            let r = r.as_array().ok_or_else(|| bad("rows of A must be arrays"))?;
            let mut row = Vec::new();
            for x in r {
                let s = match x {
                    Json::String(s) => s.clone(),
                    Json::Number(n) => n.to_string(),
                    _ => return Err(bad("entries of A must be rational strings")),
                };
                row.push(parse_q(&s).map_err(DeformationError::Malformed)?);
            }
            a.push(row);
        }
        let m = a.first().map_or(0, |r| r.len());
        let dims = match j.get("blocks") {
            Some(b) => b
                .as_array()
                .ok_or_else(|| bad("blocks must be an array"))?
                .iter()
                .map(|x| x.as_u64().map(|v| v as usize).ok_or_else(|| bad("block sizes must be integers")))
                .collect::<Result<Vec<_>, _>>()?,
            None => vec![1; m],
        };
        let k_sets = match j.get("K") {
            Some(Json::Null) | None => None,
            Some(k) => Some(
                k.as_array()
                    .ok_or_else(|| bad("K must be an array"))?
                    .iter()
                    .map(|s| {
                        s.as_array()
                            .ok_or_else(|| bad("K entries must be arrays"))?
                            .iter()
                            .map(|x| x.as_u64().map(|v| v as usize).ok_or_else(|| bad("K indices must be integers")))
                            .collect::<Result<BTreeSet<_>, _>>()
                    })
                    .collect::<Result<Vec<_>, _>>()?,
            ),
        };
        let d = DeformationData::with_blocks(a, dims, k_sets)?;
        for (key, want) in [("ell", d.ell), ("m", d.m)] {
            if let Some(v) = j.get(key) {
                if v.as_u64() != Some(want as u64) {
                    return Err(bad(&format!("\"{key}\" disagrees with the matrix shape")));
                }
            }
        }
        Ok(d)
    }
}

/// Result of building a deformation from index sets I_j ⊆ {1..n}.
#[derive(Clone, Debug)]
pub struct IndexFamily {
    pub deformation: DeformationData,
    /// Î_1..Î_m, the equivalence classes of ∪ I_j.
    pub blocks: Vec<BTreeSet<usize>>,
    /// Î_0: coordinates in no I_j.
    pub free_coords: BTreeSet<usize>,
    pub i_sets: Vec<BTreeSet<usize>>,
}

/// Groups coordinates that belong to exactly the same I_j's into blocks.
pub fn build_from_index_family(i_sets: &[BTreeSet<usize>], n: usize) -> Result<IndexFamily, DeformationError> {
    let union: BTreeSet<usize> = i_sets.iter().flatten().copied().collect();
    if i_sets.is_empty() || union.is_empty() {
        return Err(DeformationError::EmptyFamily);
    }
    if let Some(&bad) = union.iter().find(|&&i| i == 0 || i > n) {
        return Err(DeformationError::Malformed(format!("coordinate {bad} outside 1..{n}")));
    }
    // blocks ordered by their smallest coordinate
    let mut classes: BTreeMap<Vec<bool>, BTreeSet<usize>> = BTreeMap::new();
    for &i in &union {
        let sig: Vec<bool> = i_sets.iter().map(|s| s.contains(&i)).collect();
        classes.entry(sig).or_default().insert(i);
    }
    let mut blocks: Vec<BTreeSet<usize>> = classes.into_values().collect();
    blocks.sort_by_key(|b| *b.iter().next().unwrap());
    let a: Matrix = i_sets
        .iter()
        .map(|s| blocks.iter().map(|b| if b.is_subset(s) { Q::one() } else { Q::zero() }).collect())
        .collect();
    let dims = blocks.iter().map(|b| b.len()).collect();
    let deformation = DeformationData::with_blocks(a, dims, None)?;
    let free_coords = (1..=n).filter(|i| !union.contains(i)).collect();
    Ok(IndexFamily { deformation, blocks, free_coords, i_sets: i_sets.to_vec() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointPattern {
    /// J_Z: blocks where ξ vanishes.
    pub zero_blocks: BTreeSet<usize>,
    /// Optional numeric norms for blocks outside J_Z.
    pub norms: BTreeMap<usize, f64>,
    /// Leading nonzero blocks have norm 1.
    pub normalized: bool,
}

impl PointPattern {
    pub fn generic() -> Self {
        PointPattern { zero_blocks: BTreeSet::new(), norms: BTreeMap::new(), normalized: true }
    }

    pub fn zeros(z: &[usize]) -> Self {
        PointPattern { zero_blocks: z.iter().copied().collect(), norms: BTreeMap::new(), normalized: true }
    }

    pub fn is_zero(&self, k: usize) -> bool {
        self.zero_blocks.contains(&k)
    }

    /// Every block with a zero column must lie in J_Z.
    pub fn validate(&self, d: &DeformationData) -> Result<(), DeformationError> {
        for k in 1..=d.m {
            if d.column(k).iter().all(|x| x.is_zero()) && !self.is_zero(k) {
                return Err(DeformationError::ZeroColumnNotInPattern(k));
            }
        }
        if let Some(&k) = self.zero_blocks.iter().find(|&&k| k == 0 || k > d.m) {
            return Err(DeformationError::Malformed(format!("zero block {k} outside 1..{}", d.m)));
        }
        Ok(())
    }

    pub fn norm(&self, k: usize) -> f64 {
        if self.is_zero(k) {
            0.0
        } else {
            self.norms.get(&k).copied().unwrap_or(1.0)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ColumnPolicy {
    /// Lexicographically smallest invertible leading minor.
    #[default]
    Lexicographic,
    /// Prefer leading columns outside the zero pattern when the point is not fixed.
    AvoidZeroBlocks,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RankData {
    pub l: usize,
    /// Leading rows/columns (1-based, increasing); the minor A[lead_rows, lead_cols] is invertible.
    pub lead_rows: Vec<usize>,
    pub lead_cols: Vec<usize>,
    pub rest_rows: Vec<usize>,
    pub rest_cols: Vec<usize>,
    pub sigma: Q,
}

impl RankData {
    pub fn row_perm(&self) -> Vec<usize> {
        self.lead_rows.iter().chain(&self.rest_rows).copied().collect()
    }

    pub fn col_perm(&self) -> Vec<usize> {
        self.lead_cols.iter().chain(&self.rest_cols).copied().collect()
    }

    pub fn is_lead_col(&self, k: usize) -> bool {
        self.lead_cols.contains(&k)
    }

    pub fn is_lead_row(&self, j: usize) -> bool {
        self.lead_rows.contains(&j)
    }
}

/// σ_A: the positive rational making σ_A·A integral with entry gcd 1.
pub fn sigma_of(a: &Matrix) -> Q {
    let l = crate::rat::lcm_denoms(a.iter().flatten());
    let g = a
        .iter()
        .flatten()
        .map(|x| (x * Q::from_integer(l.clone())).to_integer())
        .fold(BigInt::zero(), |acc, x| acc.gcd(&x));
    Q::new(l, g)
}

pub fn rank_and_normalize(d: &DeformationData, p: &PointPattern) -> Result<RankData, DeformationError> {
    rank_with_policy(d, p, ColumnPolicy::default())
}

pub fn rank_with_policy(d: &DeformationData, p: &PointPattern, policy: ColumnPolicy) -> Result<RankData, DeformationError> {
    p.validate(d)?;
    let rows0 = linalg::greedy_rows(&d.a);
    let l = rows0.len();
    let sub: Matrix = rows0.iter().map(|&i| d.a[i].clone()).collect();
    let all: Vec<usize> = (0..d.m).collect();
    let cols0 = match policy {
        ColumnPolicy::AvoidZeroBlocks if !is_fixed_point(d, p) => {
            let nz: Vec<usize> = all.iter().copied().filter(|k| !p.is_zero(k + 1)).collect();
            let c = linalg::greedy_cols(&sub, &nz);
            if c.len() < l {
                return Err(DeformationError::NoQualifyingMinor);
            }
            let mut c = c;
            c.sort();
            c
        }
        _ => linalg::greedy_cols(&sub, &all),
    };
    let lead_rows: Vec<usize> = rows0.iter().map(|i| i + 1).collect();
    let lead_cols: Vec<usize> = cols0.iter().map(|i| i + 1).collect();
    Ok(RankData {
        l,
        rest_rows: (1..=d.ell).filter(|j| !lead_rows.contains(j)).collect(),
        rest_cols: (1..=d.m).filter(|k| !lead_cols.contains(k)).collect(),
        lead_rows,
        lead_cols,
        sigma: sigma_of(&d.a),
    })
}

/// Rank data with caller-chosen leading rows and columns (1-based).
pub fn rank_with_leads(d: &DeformationData, rows: &[usize], cols: &[usize]) -> Result<RankData, DeformationError> {
    let l = d.rank();
    let mut lead_rows = rows.to_vec();
    let mut lead_cols = cols.to_vec();
    lead_rows.sort();
    lead_cols.sort();
    if lead_rows.len() != l || lead_cols.len() != l {
        return Err(DeformationError::SingularMinor);
    }
    let minor = linalg::submatrix(
        &d.a,
        &lead_rows.iter().map(|i| i - 1).collect::<Vec<_>>(),
        &lead_cols.iter().map(|i| i - 1).collect::<Vec<_>>(),
    );
    if linalg::det(&minor).is_zero() {
        return Err(DeformationError::SingularMinor);
    }
    Ok(RankData {
        l,
        rest_rows: (1..=d.ell).filter(|j| !lead_rows.contains(j)).collect(),
        rest_cols: (1..=d.m).filter(|k| !lead_cols.contains(k)).collect(),
        lead_rows,
        lead_cols,
        sigma: sigma_of(&d.a),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ActionType {
    Degenerate,
    NonDegenerate,
    Transitive,
    Normal,
}

pub fn classify_action(d: &DeformationData) -> ActionType {
    let r = d.rank();
    match (r == d.ell, r == d.m) {
        (true, true) => ActionType::Normal,
        (true, false) => ActionType::NonDegenerate,
        (false, true) => ActionType::Transitive,
        (false, false) => ActionType::Degenerate,
    }
}

/// True iff the columns outside the zero pattern lose rank.
pub fn is_fixed_point(d: &DeformationData, p: &PointPattern) -> bool {
    let nz: Vec<usize> = (0..d.m).filter(|k| !p.is_zero(k + 1)).collect();
    if nz.is_empty() {
        return d.rank() > 0;
    }
    let sub = linalg::submatrix(&d.a, &(0..d.ell).collect::<Vec<_>>(), &nz);
    linalg::rank(&sub) < d.rank()
}

#[derive(Clone, Debug, PartialEq)]
pub struct DerivedMonomials {
    /// φ_k(λ) = ∏_j λ_j^{a_jk}, k = 1..m.
    pub phi: Vec<Monomial>,
    /// φ_j⁻¹(τ′, λ″) for leading rows j.
    pub phi_inv: BTreeMap<usize, Monomial>,
    /// ψ_k(τ) for non-leading columns k.
    pub psi: BTreeMap<usize, Monomial>,
    /// Column k = Σ_c coeff_c · column c over leading columns c.
    pub psi_coeffs: BTreeMap<usize, BTreeMap<usize, Q>>,
}

pub fn derive_monomials(d: &DeformationData, r: &RankData) -> Result<DerivedMonomials, DeformationError> {
    let rows: Vec<usize> = r.lead_rows.iter().map(|i| i - 1).collect();
    let cols: Vec<usize> = r.lead_cols.iter().map(|i| i - 1).collect();
    let minor = linalg::submatrix(&d.a, &rows, &cols);
    let minv = linalg::inverse(&minor).ok_or(DeformationError::SingularMinor)?;
    // log τ_C = Mᵀ log λ_R + Nᵀ log λ_R″  ⇒  log λ_R = (Mᵀ)⁻¹ (log τ_C − Nᵀ log λ_R″)
    let w = linalg::transpose(&minv); // (Mᵀ)⁻¹ = (M⁻¹)ᵀ
    let phi = (1..=d.m)
        .map(|k| Monomial::from_pairs((1..=d.ell).map(|j| (VarId::Lambda(j), d.entry(j, k).clone()))))
        .collect();
    let mut phi_inv = BTreeMap::new();
    for (i, &j) in r.lead_rows.iter().enumerate() {
        let mut m = Monomial::one();
        for (c, &k) in r.lead_cols.iter().enumerate() {
            m = m.mul(&Monomial::tau(k).pow(&w[i][c]));
        }
        for &jj in &r.rest_rows {
            // exponent of λ_jj: −Σ_c w[i][c]·a_{jj,c}
            let e: Q = r.lead_cols.iter().enumerate().map(|(c, &k)| &w[i][c] * d.entry(jj, k)).sum();
            m = m.mul(&Monomial::lambda(jj).pow(&-e));
        }
        phi_inv.insert(j, m);
    }
    let mut psi = BTreeMap::new();
    let mut psi_coeffs = BTreeMap::new();
    for &k in &r.rest_cols {
        let rhs: Vec<Q> = r.lead_rows.iter().map(|&j| d.entry(j, k).clone()).collect();
        let alpha = linalg::mat_vec(&minv, &rhs);
        let mut m = Monomial::tau(k);
        let mut coeffs = BTreeMap::new();
        for (c, &kc) in r.lead_cols.iter().enumerate() {
            m = m.mul(&Monomial::tau(kc).pow(&-alpha[c].clone()));
            if !alpha[c].is_zero() {
                coeffs.insert(kc, alpha[c].clone());
            }
        }
        psi.insert(k, m);
        psi_coeffs.insert(k, coeffs);
    }
    Ok(DerivedMonomials { phi, phi_inv, psi, psi_coeffs })
}

/// Substitutes λ_R = φ⁻¹ into φ_k for leading k; must give τ_k exactly.
pub fn round_trip_holds(dm: &DerivedMonomials, r: &RankData) -> bool {
    r.lead_cols.iter().all(|&k| {
        let sub = dm.phi[k - 1].substitute(|v| match v {
            VarId::Lambda(j) => dm.phi_inv.get(j).cloned(),
            _ => None,
        });
        sub == Monomial::tau(k)
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BundleSummand {
    pub block: usize,
    /// B_k: actions whose submanifold contains the block's directions.
    pub b_set: BTreeSet<usize>,
    /// N_k: "X" or an intersection of the M_j with j ∉ B_k.
    pub n_k: String,
    pub description: String,
}

/// Vector-bundle decomposition of the zero section for transitive-type families.
pub fn bundle_decomposition(d: &DeformationData) -> Result<Vec<BundleSummand>, DeformationError> {
    if !matches!(classify_action(d), ActionType::Transitive | ActionType::Normal) {
        return Err(DeformationError::NotTransitive);
    }
    let mut out = Vec::new();
    for k in 1..=d.m {
        let b_set: BTreeSet<usize> = (1..=d.ell).filter(|&j| !d.entry(j, k).is_zero()).collect();
        let outside: Vec<usize> = (1..=d.ell).filter(|j| !b_set.contains(j)).collect();
        let n_k = if outside.is_empty() {
            "X".to_string()
        } else {
            outside.iter().map(|j| format!("M{j}")).collect::<Vec<_>>().join("∩")
        };
        let denom = b_set
            .iter()
            .map(|j| if outside.is_empty() { format!("TM{j}") } else { format!("T(M{j}∩{n_k})") })
            .collect::<Vec<_>>()
            .join(" + ");
        let description = format!("T{n_k}|M / ({denom}) + TM");
        out.push(BundleSummand { block: k, b_set, n_k, description });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    fn set(xs: &[usize]) -> BTreeSet<usize> {
        xs.iter().copied().collect()
    }

    #[test]
    fn index_family_blocks() {
        let f = build_from_index_family(&[set(&[1, 2]), set(&[2, 3])], 3).unwrap();
        assert_eq!(f.deformation, DeformationData::from_ints(&[&[1, 1, 0], &[0, 1, 1]]).unwrap());
        let f = build_from_index_family(&[set(&[1]), set(&[2]), set(&[3])], 4).unwrap();
        assert_eq!(f.deformation.a, DeformationData::from_ints(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap().a);
        assert_eq!(f.free_coords, set(&[4]));
        let f = build_from_index_family(&[set(&[1]), set(&[1])], 1).unwrap();
        assert_eq!(f.deformation.a, vec![vec![q(1)], vec![q(1)]]);
        assert_eq!(f.deformation.warnings.len(), 1);
        assert_eq!(build_from_index_family(&[set(&[])], 2).unwrap_err(), DeformationError::EmptyFamily);
    }

    #[test]
    fn sigma_and_classification() {
        let d = DeformationData::new(vec![vec![qf(1, 2), q(1)], vec![q(0), q(1)]]).unwrap();
        assert_eq!(rank_and_normalize(&d, &PointPattern::generic()).unwrap().sigma, q(2));
        let cusp = DeformationData::from_ints(&[&[3, 2], &[1, 1]]).unwrap();
        let r = rank_and_normalize(&cusp, &PointPattern::generic()).unwrap();
        assert_eq!((r.l, r.sigma.clone()), (2, q(1)));
        assert_eq!(classify_action(&cusp), ActionType::Normal);
        let two = DeformationData::from_ints(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
        assert_eq!(classify_action(&two), ActionType::NonDegenerate);
        let tr = DeformationData::from_ints(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1], &[1, 1, 1]]).unwrap();
        assert_eq!(classify_action(&tr), ActionType::Transitive);
        assert!(matches!(DeformationData::from_ints(&[&[0, 0]]), Err(DeformationError::ZeroRow(1))));
    }

    #[test]
    fn fixed_points() {
        let d = DeformationData::from_ints(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
        assert!(is_fixed_point(&d, &PointPattern::zeros(&[1, 3])));
        assert!(!is_fixed_point(&d, &PointPattern::zeros(&[3])));
        assert!(!is_fixed_point(&d, &PointPattern::generic()));
        let id = DeformationData::from_ints(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]]).unwrap();
        let r = rank_with_policy(&id, &PointPattern::zeros(&[3]), ColumnPolicy::AvoidZeroBlocks).unwrap();
        assert_eq!(r.lead_cols, vec![1, 2, 3]);
        let r = rank_with_policy(&d, &PointPattern::zeros(&[1]), ColumnPolicy::AvoidZeroBlocks).unwrap();
        assert_eq!(r.lead_cols, vec![2, 3]);
    }

    #[test]
    fn derived_monomials_examples() {
        let d = DeformationData::from_ints(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1]]).unwrap();
        let r = rank_and_normalize(&d, &PointPattern::generic()).unwrap();
        let dm = derive_monomials(&d, &r).unwrap();
        assert_eq!(dm.phi_inv[&3], Monomial::taus(&[(3, 1), (1, -1), (2, -1)]));
        assert!(round_trip_holds(&dm, &r));
        let two = DeformationData::from_ints(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
        let r = rank_and_normalize(&two, &PointPattern::generic()).unwrap();
        let dm = derive_monomials(&two, &r).unwrap();
        assert_eq!(dm.psi[&3], Monomial::taus(&[(1, 1), (3, 1), (2, -1)]));
        let cusp = DeformationData::from_ints(&[&[3, 2], &[1, 1]]).unwrap();
        let r = rank_and_normalize(&cusp, &PointPattern::generic()).unwrap();
        let dm = derive_monomials(&cusp, &r).unwrap();
        assert_eq!(dm.phi_inv[&1], Monomial::taus(&[(1, 1), (2, -1)]));
        assert_eq!(dm.phi_inv[&2], Monomial::taus(&[(2, 3), (1, -2)]));
        let tr = DeformationData::from_ints(&[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 0, 1], &[0, 1, 1]]).unwrap();
        let r = rank_and_normalize(&tr, &PointPattern::generic()).unwrap();
        let dm = derive_monomials(&tr, &r).unwrap();
        assert_eq!(dm.phi_inv[&1], Monomial::parse("t1/l4").unwrap());
        assert_eq!(dm.phi_inv[&3], Monomial::parse("t3/(l4*l5)").unwrap());
        assert!(round_trip_holds(&dm, &r));
    }

    #[test]
    fn bundles() {
        // M1 = {x1 = x3 = 0}, M2 = {x2 = x3 = 0}, M3 = {x1 = x2 = x3 = 0}
        let f = build_from_index_family(&[set(&[1, 3]), set(&[2, 3]), set(&[1, 2, 3])], 3).unwrap();
        let b = bundle_decomposition(&f.deformation).unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b[0].b_set, set(&[1, 3]));
        assert_eq!(b[2].n_k, "X");
        let two = DeformationData::from_ints(&[&[1, 1, 0], &[0, 1, 1]]).unwrap();
        assert_eq!(bundle_decomposition(&two).unwrap_err(), DeformationError::NotTransitive);
    }
}
