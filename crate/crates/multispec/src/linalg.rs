//! Dense exact linear algebra over Q.

use crate::rat::Q;
use num_traits::{One, Zero};

pub type Matrix = Vec<Vec<Q>>;

/// Row echelon form in place; returns pivot columns.
fn echelon(m: &mut Matrix) -> Vec<usize> {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Q::one() / &m[r][c];
        for x in m[r].iter_mut() {
            *x = &*x * &inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c].clone();
                for j in 0..cols {
                    let d = &f * &m[r][j];
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(m: &Matrix) -> usize {
    let mut w = m.clone();
    echelon(&mut w).len()
}

pub fn transpose(m: &Matrix) -> Matrix {
    let rows = m.len();
    let cols = m.first().map_or(0, |r| r.len());
    (0..cols).map(|j| (0..rows).map(|i| m[i][j].clone()).collect()).collect()
}

pub fn submatrix(m: &Matrix, rows: &[usize], cols: &[usize]) -> Matrix {
    rows.iter().map(|&i| cols.iter().map(|&j| m[i][j].clone()).collect()).collect()
}

/// Greedy choice of the lexicographically smallest independent subset of rows.
pub fn greedy_rows(m: &Matrix) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    let mut cur: Matrix = Vec::new();
    for (i, row) in m.iter().enumerate() {
        cur.push(row.clone());
        if rank(&cur) == chosen.len() + 1 {
            chosen.push(i);
        } else {
            cur.pop();
        }
    }
    chosen
}

/// Greedy lexicographically smallest independent column subset among `candidates`.
pub fn greedy_cols(m: &Matrix, candidates: &[usize]) -> Vec<usize> {
    let t = transpose(m);
    let mut chosen = Vec::new();
    let mut cur: Matrix = Vec::new();
    for &c in candidates {
        cur.push(t[c].clone());
        if rank(&cur) == chosen.len() + 1 {
            chosen.push(c);
        } else {
            cur.pop();
        }
    }
    chosen
}

pub fn inverse(m: &Matrix) -> Option<Matrix> {
    let n = m.len();
    let mut aug: Matrix = m
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let mut row = r.clone();
            row.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            row
        })
        .collect();
    let piv = echelon(&mut aug);
    if piv.len() < n || piv[n - 1] != n - 1 {
        return None;
    }
    Some(aug.into_iter().map(|r| r[n..].to_vec()).collect())
}

pub fn mat_vec(m: &Matrix, v: &[Q]) -> Vec<Q> {
    m.iter().map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// Solves m·x = b for a square invertible m.
pub fn solve(m: &Matrix, b: &[Q]) -> Option<Vec<Q>> {
    inverse(m).map(|inv| mat_vec(&inv, b))
}

pub fn det(m: &Matrix) -> Q {
    let n = m.len();
    let mut w = m.clone();
    let mut d = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !w[i][c].is_zero()) else {
            return Q::zero();
        };
        if p != c {
            w.swap(p, c);
            d = -d;
        }
        d *= &w[c][c];
        for i in c + 1..n {
            if !w[i][c].is_zero() {
                let f = &w[i][c] / &w[c][c];
                for j in c..n {
                    let t = &f * &w[c][j];
                    w[i][j] -= t;
                }
            }
        }
    }
    d
}

/// Basis of the right nullspace {x : m·x = 0}.
pub fn nullspace(m: &Matrix, cols: usize) -> Vec<Vec<Q>> {
    let mut w = m.clone();
    let piv = echelon(&mut w);
    let free: Vec<usize> = (0..cols).filter(|c| !piv.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![Q::zero(); cols];
            x[f] = Q::one();
            for (r, &p) in piv.iter().enumerate() {
                x[p] = -w[r][f].clone();
            }
            x
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rat::{q, qf};

    #[test]
    fn inverse_of_cusp_matrix() {
        let a = vec![vec![q(3), q(2)], vec![q(1), q(1)]];
        let inv = inverse(&a).unwrap();
        assert_eq!(inv, vec![vec![q(1), q(-2)], vec![q(-1), q(3)]]);
        assert_eq!(det(&a), q(1));
    }

    #[test]
    fn rank_and_greedy() {
        let a = vec![
            vec![q(1), q(0), q(1)],
            vec![q(0), q(1), q(1)],
            vec![q(1), q(1), q(2)],
        ];
        assert_eq!(rank(&a), 2);
        assert_eq!(greedy_rows(&a), vec![0, 1]);
        assert_eq!(greedy_cols(&a, &[2, 0, 1]), vec![2, 0]);
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 1);
        assert!(mat_vec(&a, &ns[0]).iter().all(|x| x.is_zero()));
        assert_eq!(solve(&vec![vec![q(2)]], &[q(1)]).unwrap(), vec![qf(1, 2)]);
    }
}
