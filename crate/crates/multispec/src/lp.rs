//! Exact two-phase simplex over Q with Bland's rule.
//!
//! Small dense problems only: every caller here has at most a few dozen
//! variables. Exactness matters more than speed because verdicts like
//! "cone relaxation infeasible" are used as proofs of non-membership.

use crate::rat::Q;
use num_traits::{One, Signed, Zero};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Rel {
    Le,
    Eq,
    Ge,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<Q>,
    pub rel: Rel,
    pub rhs: Q,
}

impl Constraint {
    pub fn new(coeffs: Vec<Q>, rel: Rel, rhs: Q) -> Self {
        Constraint { coeffs, rel, rhs }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome {
    Infeasible,
    Unbounded,
    Optimal { value: Q, x: Vec<Q> },
}

impl LpOutcome {
    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

struct Tableau {
    t: Vec<Vec<Q>>, // constraint rows, last entry = rhs
    z: Vec<Q>,      // objective row (reduced costs), last entry = objective value
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.z.len() - 1
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = Q::one() / &self.t[r][c];
        for x in self.t[r].iter_mut() {
            *x = &*x * &inv;
        }
        let prow = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i != r && !row[c].is_zero() {
                let f = row[c].clone();
                for (x, p) in row.iter_mut().zip(&prow) {
                    if !p.is_zero() {
                        *x -= &f * p;
                    }
                }
            }
        }
        if !self.z[c].is_zero() {
            let f = self.z[c].clone();
            for (x, p) in self.z.iter_mut().zip(&prow) {
                if !p.is_zero() {
                    *x -= &f * p;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Maximizes; returns false when unbounded.
    fn run(&mut self, allowed: usize) -> bool {
        loop {
            let Some(c) = (0..allowed).find(|&j| self.z[j].is_negative()) else {
                return true;
            };
            let w = self.width();
            let mut best: Option<(usize, Q)> = None;
            for (i, row) in self.t.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = &row[w] / &row[c];
                    let better = match &best {
                        None => true,
                        Some((bi, br)) => ratio < *br || (ratio == *br && self.basis[i] < self.basis[*bi]),
                    };
                    if better {
                        best = Some((i, ratio));
                    }
                }
            }
            match best {
                None => return false,
                Some((r, _)) => self.pivot(r, c),
            }
        }
    }
}

/// Maximizes `objective · x` subject to the constraints and x ≥ 0.
pub fn maximize(n: usize, constraints: &[Constraint], objective: &[Q]) -> LpOutcome {
    // standard form: one slack/surplus per inequality, one artificial per row
    let m = constraints.len();
    let n_slack = constraints.iter().filter(|c| c.rel != Rel::Eq).count();
    let n_real = n + n_slack;
    let width = n_real + m;
    let mut t = Vec::with_capacity(m);
    let mut slack = n;
    for (i, c) in constraints.iter().enumerate() {
        let mut row = vec![Q::zero(); width + 1];
        for (j, a) in c.coeffs.iter().enumerate() {
            row[j] = a.clone();
        }
        match c.rel {
            Rel::Le => {
                row[slack] = Q::one();
                slack += 1;
            }
            Rel::Ge => {
                row[slack] = -Q::one();
                slack += 1;
            }
            Rel::Eq => {}
        }
        row[width] = c.rhs.clone();
        if row[width].is_negative() {
            for x in row.iter_mut() {
                *x = -x.clone();
            }
        }
        row[n_real + i] = Q::one();
        t.push(row);
    }
    let mut z = vec![Q::zero(); width + 1];
    for row in &t {
        for j in 0..n_real {
            z[j] -= &row[j];
        }
        z[width] -= &row[width];
    }
    let mut tab = Tableau { t, z, basis: (n_real..n_real + m).collect() };
    tab.run(n_real);
    if tab.z[width].is_negative() {
        return LpOutcome::Infeasible;
    }
    // drive remaining artificials out of the basis
    let mut r = 0;
    while r < tab.t.len() {
        if tab.basis[r] >= n_real {
            if let Some(c) = (0..n_real).find(|&j| !tab.t[r][j].is_zero()) {
                tab.pivot(r, c);
                r += 1;
            } else {
                tab.t.remove(r);
                tab.basis.remove(r);
            }
        } else {
            r += 1;
        }
    }
    // phase 2 on the real columns only
    let mut t2: Vec<Vec<Q>> = tab
        .t
        .iter()
        .map(|row| {
            let mut v = row[..n_real].to_vec();
            v.push(row[width].clone());
            v
        })
        .collect();
    let mut cost = vec![Q::zero(); n_real];
    for (j, c) in objective.iter().enumerate() {
        cost[j] = c.clone();
    }
    let mut z2: Vec<Q> = cost.iter().map(|c| -c.clone()).collect();
    z2.push(Q::zero());
    for (i, &b) in tab.basis.iter().enumerate() {
        if !cost[b].is_zero() {
            for j in 0..=n_real {
                let d = &cost[b] * &t2[i][j];
                z2[j] += d;
            }
        }
    }
    let basis = std::mem::take(&mut tab.basis);
    let mut tab2 = Tableau { t: std::mem::take(&mut t2), z: z2, basis };
    if !tab2.run(n_real) {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Q::zero(); n];
    for (i, &b) in tab2.basis.iter().enumerate() {
        if b < n {
            x[b] = tab2.t[i][n_real].clone();
        }
    }
    LpOutcome::Optimal { value: tab2.z[n_real].clone(), x }
}

pub fn feasible(n: usize, constraints: &[Constraint]) -> bool {
    maximize(n, constraints, &[]).is_feasible()
}

/// LP over free (sign-unrestricted) variables, via the split x = x⁺ − x⁻.
pub fn maximize_free(n: usize, constraints: &[Constraint], objective: &[Q]) -> LpOutcome {
    let split = |c: &[Q]| -> Vec<Q> {
        let mut v: Vec<Q> = c.to_vec();
        v.resize(n, Q::zero());
        let neg: Vec<Q> = v.iter().map(|x| -x.clone()).collect();
        v.extend(neg);
        v
    };
    let cons: Vec<Constraint> = constraints
        .iter()
        .map(|c| Constraint::new(split(&c.coeffs), c.rel, c.rhs.clone()))
        .collect();
    match maximize(2 * n, &cons, &split(objective)) {
        LpOutcome::Optimal { value, x } => {
            let y = (0..n).map(|i| &x[i] - &x[n + i]).collect();
            LpOutcome::Optimal { value, x: y }
        }
        o => o,
    }
}

/// Is the open cone {x : g·x > 0 for all g in `strict`, h·x = 0 for h in `eqs`} nonempty?
pub fn open_cone_nonempty(dim: usize, strict: &[Vec<Q>], eqs: &[Vec<Q>]) -> Option<Vec<Q>> {
    // homogeneous: g·x ≥ 1 is feasible iff g·x > 0 is
    let mut cons: Vec<Constraint> = strict.iter().map(|g| Constraint::new(g.clone(), Rel::Ge, Q::one())).collect();
    cons.extend(eqs.iter().map(|h| Constraint::new(h.clone(), Rel::Eq, Q::zero())));
    match maximize_free(dim, &cons, &[]) {
        LpOutcome::Optimal { x, .. } => Some(x),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    #[test]
    fn small_lp() {
        // max x + y s.t. x + 2y ≤ 4, 3x + y ≤ 6
        let c = vec![
            Constraint::new(vec![q(1), q(2)], Rel::Le, q(4)),
            Constraint::new(vec![q(3), q(1)], Rel::Le, q(6)),
        ];
        match maximize(2, &c, &[q(1), q(1)]) {
            LpOutcome::Optimal { value, x } => {
                assert_eq!(value, qf(14, 5));
                assert_eq!(x, vec![qf(8, 5), qf(6, 5)]);
            }
            o => panic!("{o:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let c = vec![Constraint::new(vec![q(1)], Rel::Eq, q(-1))];
        assert_eq!(maximize(1, &c, &[q(1)]), LpOutcome::Infeasible);
        let c = vec![Constraint::new(vec![q(1), q(-1)], Rel::Eq, q(1))];
        assert_eq!(maximize(2, &c, &[q(1), q(0)]), LpOutcome::Unbounded);
        assert!(open_cone_nonempty(2, &[vec![q(1), q(0)], vec![q(-1), q(1)]], &[]).is_some());
        assert!(open_cone_nonempty(1, &[vec![q(1)], vec![q(-1)]], &[]).is_none());
    }

    #[test]
    fn redundant_equalities() {
        let c = vec![
            Constraint::new(vec![q(1), q(1)], Rel::Eq, q(2)),
            Constraint::new(vec![q(2), q(2)], Rel::Eq, q(4)),
        ];
        match maximize(2, &c, &[q(1), q(0)]) {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, q(2)),
            o => panic!("{o:?}"),
        }
    }
}
