//! Randomized invariants.

use crate::asymptotics::{app_of_function, app_oracle, index_set, nonempty_subsets, taylor_by_index, taylor_oracle};
use crate::deformation::{rank_and_normalize, DeformationData, PointPattern};
use crate::fixtures::RADICAL_MAX_N;
use crate::levels::{build_levels, evaluate_level, semantically_equal, LevelExpr};
use crate::monomial::{GenPair, Monomial, VarId};
use crate::poly::Poly;
use crate::rat::{q, to_f64, Q};
use crate::semigroup::{radical_member_ctx, run_pipeline, value_of};
use proptest::prelude::*;
use std::collections::BTreeSet;

fn small_q() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=4).prop_map(|(n, d)| Q::new(n.into(), d.into()))
}

fn monomial() -> impl Strategy<Value = Monomial> {
    prop::collection::vec((1usize..=3, small_q()), 0..4).prop_map(|ps| Monomial::from_pairs(ps.into_iter().map(|(k, e)| (VarId::Tau(k), e))))
}

fn level_expr() -> impl Strategy<Value = LevelExpr> {
    let leaf = monomial().prop_map(LevelExpr::mono);
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 2..4).prop_map(LevelExpr::max),
            prop::collection::vec(inner.clone(), 2..4).prop_map(LevelExpr::min),
            prop::collection::vec(inner.clone(), 2..3).prop_map(LevelExpr::prod),
            inner.prop_map(|e| e.pow(&q(-1))),
        ]
    })
}

/// Non-negative integer ℓ×m matrices without zero rows or columns.
fn action_matrix(ell: usize, m: usize) -> impl Strategy<Value = Vec<Vec<i64>>> {
    prop::collection::vec(prop::collection::vec(0i64..=3, m), ell).prop_filter("zero row or column", move |a| a.iter().all(|r| r.iter().any(|&x| x > 0)) && (0..m).all(|k| a.iter().any(|r| r[k] > 0)))
}

fn deformation(a: &[Vec<i64>]) -> Option<DeformationData> {
    let rows: Vec<&[i64]> = a.iter().map(|r| &r[..]).collect();
    DeformationData::from_ints(&rows).ok()
}

fn poly(nvars: usize) -> impl Strategy<Value = Poly> {
    prop::collection::vec((prop::collection::vec(0u32..=4, nvars), -9i64..=9), 1..6).prop_map(|terms| {
        let mut p = Poly::zero();
        for (e, c) in terms {
            p.add_term(e, q(c));
        }
        p
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn monomial_group_laws(a in monomial(), b in monomial(), r in small_q()) {
        prop_assert_eq!(a.mul(&b).div(&b), a.clone());
        prop_assert_eq!(a.mul(&a.inv()), Monomial::one());
        prop_assert_eq!(a.mul(&b).pow(&r), a.pow(&r).mul(&b.pow(&r)));
        prop_assert_eq!(Monomial::parse(&a.render_fraction()).unwrap(), a);
    }

    #[test]
    fn level_expressions_round_trip_through_text(e in level_expr()) {
        let back = LevelExpr::parse(&e.to_string()).unwrap();
        prop_assert!(semantically_equal(&back, &e), "{} vs {}", back, e);
    }

    #[test]
    fn lattice_operand_order_is_irrelevant(a in level_expr(), b in level_expr(), c in level_expr()) {
        prop_assert_eq!(LevelExpr::max(vec![a.clone(), b.clone(), c.clone()]), LevelExpr::max(vec![c.clone(), a.clone(), b.clone()]));
        prop_assert_eq!(LevelExpr::min(vec![a.clone(), b.clone()]), LevelExpr::min(vec![b, a]));
    }

    #[test]
    fn index_sets_grow_with_n(a in action_matrix(2, 3), n in prop::collection::vec(0u64..5, 2), extra in prop::collection::vec(0u64..3, 2)) {
        let Some(d) = deformation(&a) else { return Ok(()) };
        let n2: Vec<u64> = n.iter().zip(&extra).map(|(x, y)| x + y).collect();
        for j in nonempty_subsets(d.ell).unwrap() {
            let small = index_set(&d, &j, &n);
            let big = index_set(&d, &j, &n2);
            prop_assert!(small.members.iter().all(|al| big.contains(al)));
        }
    }

    #[test]
    fn taylor_routes_agree(a in action_matrix(2, 3), f in poly(3), n in prop::collection::vec(0u64..6, 2)) {
        let Some(d) = deformation(&a) else { return Ok(()) };
        for j in nonempty_subsets(d.ell).unwrap() {
            prop_assert_eq!(taylor_by_index(&d, &j, &n, &f), taylor_oracle(&d, &j, &n, &f));
        }
        prop_assert_eq!(app_of_function(&d, &n, &f).unwrap(), app_oracle(&d, &n, &f).unwrap());
    }

    #[test]
    fn level_round_trip(a in action_matrix(3, 3), logs in prop::collection::vec(0.0f64..8.0, 3)) {
        let Some(d) = deformation(&a) else { return Ok(()) };
        let p = PointPattern::generic();
        let Ok(r) = rank_and_normalize(&d, &p) else { return Ok(()) };
        let Ok(fam) = build_levels(&d, &r, &p) else { return Ok(()) };
        // τ = φ(λ) for λ ∈ (0, 1]^ℓ
        let lambda: Vec<f64> = logs.iter().map(|x| (-x).exp()).collect();
        let tau: Vec<f64> = (1..=d.m).map(|k| (1..=d.ell).map(|j| lambda[j - 1].powf(to_f64(d.entry(j, k)))).product()).collect();
        let rho: Vec<f64> = fam.rho_lambda.iter().map(|e| evaluate_level(e, &tau).unwrap()).collect();
        for k in 1..=d.m {
            let phi: f64 = (1..=d.ell).map(|j| rho[j - 1].powf(to_f64(d.entry(j, k)))).product();
            prop_assert!((phi / tau[k - 1] - 1.0).abs() < 1e-9, "k = {}: {} vs {}", k, phi, tau[k - 1]);
        }
    }

    #[test]
    fn pipeline_generators_are_radical(a in action_matrix(2, 3), zeros in prop::collection::btree_set(1usize..=3, 0..2)) {
        let Some(d) = deformation(&a) else { return Ok(()) };
        let zeros: Vec<usize> = zeros.into_iter().collect();
        let p = PointPattern::zeros(&zeros);
        if p.validate(&d).is_err() { return Ok(()) }
        let Ok(r) = rank_and_normalize(&d, &p) else { return Ok(()) };
        let pr = run_pipeline(&d, &r, &p).unwrap();
        prop_assert!(pr.fq.iter().all(|g| !g.f.has_lambda()));
        let zb: BTreeSet<usize> = zeros.iter().copied().collect();
        for g in pr.f0.iter().filter(|g| !g.f.has_lambda() && zb.iter().all(|&k| g.f.exponent(VarId::Tau(k)) >= Q::from_integer(0.into()))) {
            let v = value_of(&g.f, &pr).unwrap();
            let pair = GenPair::new(g.f.clone(), v);
            prop_assert!(radical_member_ctx(&pair, &pr.fq, RADICAL_MAX_N, &zeros).is_yes(), "{} not radical over F^q for {:?}", pair.render(), a);
        }
    }
}
