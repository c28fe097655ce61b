//! Built-in regression corpus: worked configurations with their expected
//! generator sets, restriction verdicts, level functions, multicone displays,
//! index sets, remainders and induced maps, plus the randomized property suites.

use crate::asymptotics::{
    app_of_function, app_oracle, check_derivative_identity, check_map, classify_two_manifolds, constraints_for, nonempty_subsets, remainder_forms, render_remainder, taylor_by_index,
    taylor_oracle, verify_estimate, LinearForm, MapCheck, PolyMapSpec, TestFunction,
};
use crate::deformation::{rank_and_normalize, DeformationData, PointPattern, RankData};
use crate::levels::{build_generalized_levels, build_levels, evaluate_level, is_strict, semantically_equal, LevelExpr, LevelFamily};
use crate::monomial::{render_set, GenPair, GenSet, Monomial, Value, VarId};
use crate::multicone::{
    build_multicone, closure, compare_display, contraction_stable_check, level_boundedness, level_boundedness_violations, parse_display, BuildOptions, ConePoint, EpsSpec,
    MulticoneSystem, DEFAULT_CLOSURE_DEGREE,
};
use crate::poly::Poly;
use crate::rat::{q, Q};
use crate::restriction::{check_h2_subfamily, check_restriction, enlarged_pipeline};
use crate::semigroup::{equivalent, radical_member, radical_member_ctx, run_pipeline, value_of, PipelineResult, Verdict};
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::time::Instant;

pub const DEFAULT_SEED: u64 = 20_240_611;
pub const PROPERTY_SAMPLES: usize = 10_000;
pub const RANDOM_POLYS_PER_FIXTURE: usize = 50;
pub const RANDOM_DERIVATIVE_CHECKS: usize = 20;
/// Largest power searched for radical membership.
pub const RADICAL_MAX_N: u32 = 64;
/// Relative tolerance of τ_k = φ_k(ρ_Λ(τ)).
pub const ROUND_TRIP_TOL: f64 = 1e-10;

type Check = Box<dyn Fn() -> Result<String, String>>;

pub struct Fixture {
    pub name: String,
    pub group: &'static str,
    run: Check,
}

#[derive(Clone, Debug)]
pub struct FixtureOutcome {
    pub name: String,
    pub group: &'static str,
    pub pass: bool,
    pub detail: String,
    pub millis: f64,
}

impl Fixture {
    fn new(group: &'static str, name: impl Into<String>, run: impl Fn() -> Result<String, String> + 'static) -> Fixture {
        Fixture { name: name.into(), group, run: Box::new(run) }
    }

    pub fn matches(&self, filter: &str) -> bool {
        let f = filter.to_lowercase();
        self.group.contains(&f) || self.name.to_lowercase().contains(&f)
    }

    pub fn run(&self) -> FixtureOutcome {
        let t = Instant::now();
        let r = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (self.run)())).unwrap_or_else(|_| Err("panicked".into()));
        let millis = t.elapsed().as_secs_f64() * 1e3;
        let (pass, detail) = match r {
            Ok(d) => (true, d),
            Err(e) => (false, e),
        };
        FixtureOutcome { name: self.name.clone(), group: self.group, pass, detail, millis }
    }
}

pub const GROUPS: [&str; 8] = ["pipeline", "restriction", "levels", "multicone", "asymptotics", "maps", "properties", "radical"];

pub fn corpus() -> Vec<Fixture> {
    let mut out = Vec::new();
    out.extend(pipeline_fixtures());
    out.extend(restriction_fixtures());
    out.extend(level_fixtures());
    out.extend(multicone_fixtures());
    out.extend(asymptotic_fixtures());
    out.extend(map_fixtures());
    out.extend(property_fixtures(PROPERTY_SAMPLES, DEFAULT_SEED));
    out.extend(radical_fixtures());
    out
}

pub fn run_fixtures(filter: Option<&str>) -> Vec<FixtureOutcome> {
    corpus().iter().filter(|f| filter.is_none_or(|s| f.matches(s))).map(|f| f.run()).collect()
}

// ---------------------------------------------------------------- helpers

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rows_of(rows: &[&[i64]]) -> Vec<Vec<i64>> {
    rows.iter().map(|r| r.to_vec()).collect()
}

fn deformation(rows: &[Vec<i64>]) -> Result<DeformationData, String> {
    let r: Vec<&[i64]> = rows.iter().map(|r| &r[..]).collect();
    DeformationData::from_ints(&r).map_err(|e| e.to_string())
}

struct Setup {
    d: DeformationData,
    r: RankData,
    p: PointPattern,
    pr: PipelineResult,
}

fn setup(rows: &[Vec<i64>], zeros: &[usize]) -> Result<Setup, String> {
    let d = deformation(rows)?;
    let p = PointPattern::zeros(zeros);
    let r = rank_and_normalize(&d, &p).map_err(|e| e.to_string())?;
    let pr = run_pipeline(&d, &r, &p).map_err(|e| e.to_string())?;
    Ok(Setup { d, r, p, pr })
}

fn system_of(s: &Setup) -> Result<MulticoneSystem, String> {
    build_multicone(&s.d, &s.pr, &BuildOptions::default()).map_err(|e| e.to_string())
}

fn levels_of(s: &Setup) -> Result<LevelFamily, String> {
    build_levels(&s.d, &s.r, &s.p).map_err(|e| e.to_string())
}

/// "t3/(t1*t2)@x3" is the pair (τ3/(τ1τ2), |ξ3|); no "@" means value 0; "@1" is the unit value.
fn pair(s: &str) -> Result<GenPair, String> {
    let (f, v) = s.split_once('@').unwrap_or((s, "0"));
    let f = Monomial::parse(f)?;
    let v = match v.trim() {
        "0" => Value::Zero,
        "1" => Value::unit(),
        x => Value::Xi(Monomial::parse(x)?),
    };
    Ok(GenPair::new(f, v))
}

fn pair_set(items: &[&str]) -> Result<GenSet, String> {
    items.iter().map(|s| pair(s)).collect()
}

/// Set equality; `unit_optional` ignores the neutral pair (1, 1), which some displays leave implicit.
fn same_set(label: &str, got: &GenSet, want: &[&str], unit_optional: bool) -> Result<(), String> {
    let want = pair_set(want)?;
    let strip = |s: &GenSet| -> GenSet { s.iter().filter(|p| !(unit_optional && **p == GenPair::unit())).cloned().collect() };
    ensure(strip(got) == strip(&want), || format!("{label}: got {} want {}", render_set(got), render_set(&want)))
}

// ---------------------------------------------------------------- pipeline

struct SetCase {
    name: &'static str,
    rows: &'static [&'static [i64]],
    zeros: &'static [usize],
    /// (stage label, expected set); labels: "G", "F0", "F0,j", "F[k]", "Fq"
    stages: &'static [(&'static str, &'static [&'static str])],
    unit_optional: bool,
}

const SET_CASES: &[SetCase] = &[
    SetCase {
        name: "plane-with-two-lines F0/F1/F2",
        rows: &[&[1, 0, 1], &[0, 1, 1]],
        zeros: &[1, 2],
        stages: &[
            ("F0", &["t1", "t2", "t3/(t1*t2)@x3", "t1*t2/t3@1/x3"]),
            ("F[1]", &["t1", "t2", "t1*t2/t3", "t3/t2", "1@1"]),
            ("Fq", &["t1", "t2", "t1*t2/t3", "t3", "1@1"]),
        ],
        unit_optional: false,
    },
    SetCase {
        name: "four submanifolds, transitive: F0,3 and F0,4",
        rows: &[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1], &[1, 1, 1]],
        zeros: &[],
        stages: &[("G", &["t1/l4", "t2/l4", "t3*l4/(t1*t2)", "l4"]), ("F0,4", &["t1", "t2", "t3/t2", "t3/t1"]), ("Fq", &["t1", "t2", "t3/t2", "t3/t1"])],
        unit_optional: false,
    },
    SetCase {
        name: "five submanifolds: F0,3 / F0,4 / F0,5",
        rows: &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 0, 1], &[0, 1, 1]],
        zeros: &[],
        stages: &[
            ("G", &["t1/l4", "t2/l5", "t3/(l4*l5)", "l4", "l5"]),
            ("F0,4", &["t1", "t2/l5", "t3/l5", "l5"]),
            ("F0,5", &["t1", "t2", "t3"]),
        ],
        unit_optional: false,
    },
    SetCase {
        name: "five submanifolds, non-strict: F0,4 / F0,5",
        rows: &[&[1, 0, 0], &[0, 1, 0], &[1, 1, 1], &[1, 1, 0], &[0, 1, 1]],
        zeros: &[],
        stages: &[("F0,4", &["t2/t3", "t1*l5/t3", "t3/l5", "l5"]), ("F0,5", &["t2/t3", "t3", "t1"])],
        unit_optional: false,
    },
    SetCase {
        name: "two lines: F0",
        rows: &[&[1, 1, 0], &[0, 1, 1]],
        zeros: &[],
        stages: &[("F0", &["t1", "t2/t1", "t1*t3/t2@x3", "t2/(t1*t3)@1/x3"])],
        unit_optional: false,
    },
    SetCase {
        name: "two lines, xi1 = 0",
        rows: &[&[1, 1, 0], &[0, 1, 1]],
        zeros: &[1],
        stages: &[("Fq", &["t1", "t2", "t3", "t1*t3/t2", "t2/t3"])],
        unit_optional: true,
    },
    SetCase {
        name: "two lines, xi2 = 0",
        rows: &[&[1, 1, 0], &[0, 1, 1]],
        zeros: &[2],
        stages: &[("Fq", &["t1", "t2/t1", "t3", "t2/(t1*t3)"])],
        unit_optional: true,
    },
    SetCase { name: "two lines, xi3 = 0", rows: &[&[1, 1, 0], &[0, 1, 1]], zeros: &[3], stages: &[("Fq", &["t1", "t2/t1", "t1*t3/t2"])], unit_optional: true },
    SetCase {
        name: "two lines, xi1 = xi3 = 0",
        rows: &[&[1, 1, 0], &[0, 1, 1]],
        zeros: &[1, 3],
        stages: &[("Fq", &["t1", "t2", "t3", "t1*t3/t2"])],
        unit_optional: true,
    },
];

fn stage<'a>(pr: &'a PipelineResult, label: &str) -> Option<&'a GenSet> {
    match label {
        "G" => Some(&pr.g),
        "F0" => Some(&pr.f0),
        "Fq" => Some(&pr.fq),
        l if l.starts_with("F0,") => pr.f0_stage(l[3..].parse().ok()?),
        l if l.starts_with("F[") => pr.f_stage(l[2..l.len() - 1].parse().ok()?),
        _ => None,
    }
}

fn pipeline_fixtures() -> Vec<Fixture> {
    SET_CASES
        .iter()
        .map(|c| {
            Fixture::new("pipeline", c.name, move || {
                let s = setup(&rows_of(c.rows), c.zeros)?;
                for (label, want) in c.stages {
                    let got = stage(&s.pr, label).ok_or_else(|| format!("no stage {label}"))?;
                    same_set(label, got, want, c.unit_optional)?;
                }
                Ok(format!("{} stages equal", c.stages.len()))
            })
        })
        .collect()
}

// ---------------------------------------------------------------- restriction

struct RestrictionCase {
    name: &'static str,
    rows: &'static [&'static [i64]],
    beta: &'static [i64],
    zeros: &'static [usize],
    holds: bool,
    /// the pair expected not to lie in the enlarged semigroup
    witness: Option<&'static str>,
    /// index sets of the enlarged family, for the nested-or-disjoint check
    h2: Option<&'static [&'static [usize]]>,
}

const fn rc(name: &'static str, rows: &'static [&'static [i64]], beta: &'static [i64], zeros: &'static [usize], holds: bool, witness: Option<&'static str>) -> RestrictionCase {
    RestrictionCase { name, rows, beta, zeros, holds, witness, h2: None }
}

const NORMAL3: &[&[i64]] = &[&[1, 0, 0], &[0, 1, 1], &[0, 0, 1]];
const CLEAN3: &[&[i64]] = &[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1]];
const LINES: &[&[i64]] = &[&[1, 1, 0], &[0, 1, 1]];
const LINES4: &[&[i64]] = &[&[1, 1, 0, 1], &[0, 1, 1, 0]];

const RESTRICTION_CASES: &[RestrictionCase] = &[
    rc("nonneg combination, generic", NORMAL3, &[1, 1, 1], &[], true, None),
    rc("clean three, generic", CLEAN3, &[1, 1, 1], &[], false, Some("t3/(t1*t2)")),
    rc("clean three, xi3 = 0", CLEAN3, &[1, 1, 1], &[3], false, Some("t3/(t1*t2)")),
    rc("clean three, xi2 = 0", CLEAN3, &[1, 1, 1], &[2], true, None),
    rc("clean three, xi1 = 0", CLEAN3, &[1, 1, 1], &[1], true, None),
    RestrictionCase { name: "H2 Majima", rows: &[&[1, 0, 0], &[0, 1, 0]], beta: &[0, 0, 1], zeros: &[3], holds: true, witness: None, h2: Some(&[&[1], &[2], &[3]]) },
    RestrictionCase { name: "H2 Takeuchi (a)", rows: &[&[1, 1, 1], &[0, 1, 1]], beta: &[0, 0, 1], zeros: &[3], holds: true, witness: None, h2: Some(&[&[1, 2, 3], &[2, 3], &[3]]) },
    RestrictionCase { name: "H2 Takeuchi (b)", rows: &[&[1, 1, 0], &[0, 1, 0]], beta: &[1, 1, 1], zeros: &[3], holds: true, witness: None, h2: Some(&[&[2, 3], &[2], &[1, 2, 3]]) },
    RestrictionCase { name: "H2 Takeuchi (c)", rows: &[&[1, 1, 1], &[0, 1, 0]], beta: &[0, 1, 1], zeros: &[3], holds: true, witness: None, h2: Some(&[&[1, 2, 3], &[2], &[2, 3]]) },
    RestrictionCase { name: "H2 mixed (a)", rows: &[&[1, 1, 1], &[0, 1, 0]], beta: &[0, 0, 1], zeros: &[3], holds: true, witness: None, h2: Some(&[&[1, 2, 3], &[2], &[3]]) },
    RestrictionCase { name: "H2 mixed (b)", rows: &[&[1, 0, 0], &[0, 1, 0]], beta: &[1, 1, 1], zeros: &[3], holds: true, witness: None, h2: Some(&[&[1], &[2], &[1, 2, 3]]) },
    rc("two lines + x1, xi1 = 0", LINES, &[1, 0, 0], &[1], true, None),
    rc("two lines + x1, xi2 = 0", LINES, &[1, 0, 0], &[2], false, Some("t2/t1")),
    rc("two lines + x1, xi3 = 0", LINES, &[1, 0, 0], &[3], false, Some("t2/t1")),
    rc("two lines + x2, xi1 = 0", LINES, &[0, 1, 0], &[1], false, Some("t1*t3/t2")),
    rc("two lines + x2, xi2 = 0", LINES, &[0, 1, 0], &[2], true, None),
    rc("two lines + x2, xi3 = 0", LINES, &[0, 1, 0], &[3], false, Some("t1*t3/t2")),
    rc("two lines + x3, xi1 = 0", LINES, &[0, 0, 1], &[1], false, Some("t2/t3")),
    rc("two lines + x3, xi2 = 0", LINES, &[0, 0, 1], &[2], false, Some("t2/t3")),
    rc("two lines + x3, xi3 = 0", LINES, &[0, 0, 1], &[3], true, None),
    rc("two lines + x1x3, xi1 = 0", LINES, &[1, 0, 1], &[1], false, Some("t2/t3")),
    rc("two lines + x1x3, xi2 = 0", LINES, &[1, 0, 1], &[2], false, Some("t2/(t1*t3)")),
    rc("two lines + x1x3, xi3 = 0", LINES, &[1, 0, 1], &[3], false, Some("t2/t1")),
    rc("two lines + x1x3, xi1 = xi3 = 0", LINES, &[1, 0, 1], &[1, 3], true, None),
    rc("two lines + origin, xi1 = 0", LINES, &[1, 1, 1], &[1], true, None),
    rc("two lines + origin, xi2 = 0", LINES, &[1, 1, 1], &[2], false, Some("t2/(t1*t3)")),
    rc("two lines + origin, xi3 = 0", LINES, &[1, 1, 1], &[3], true, None),
    rc("four blocks + x2", LINES4, &[0, 1, 0, 0], &[3], false, Some("t1*t3/t2")),
    rc("four blocks + x2x4", LINES4, &[0, 1, 0, 1], &[3], false, Some("t1/t4@1/x4")),
    rc("four blocks + x1x2x3", LINES4, &[1, 1, 1, 0], &[3], false, Some("t1/t4@1/x4")),
    rc("four blocks + origin", LINES4, &[1, 1, 1, 1], &[3], true, None),
];

fn run_restriction(c: &RestrictionCase) -> Result<String, String> {
    let d = deformation(&rows_of(c.rows))?;
    let p = PointPattern::zeros(c.zeros);
    let beta: Vec<Q> = c.beta.iter().map(|&x| q(x)).collect();
    let v = check_restriction(&d, &p, &beta).map_err(|e| e.to_string())?;
    ensure(v.holds == c.holds, || format!("verdict {} expected {}; witnesses {:?}", v.holds, c.holds, v.witnesses.iter().map(|w| w.0.render()).collect::<Vec<_>>()))?;
    let mut detail = format!("{:?}: holds = {}", v.case, v.holds);
    let pb = enlarged_pipeline(&d, &p, &beta).map_err(|e| e.to_string())?;
    for (w, _) in &v.witnesses {
        let r = radical_member(w, &pb.fq, RADICAL_MAX_N);
        ensure(r.is_no(), || format!("reported witness {} is in the enlarged semigroup: {r:?}", w.render()))?;
    }
    if let Some(w) = c.witness {
        // the named element lies in the semigroup of the original family but not in the enlarged one
        let want = pair(w)?;
        let a = setup(&rows_of(c.rows), c.zeros)?;
        let ra = radical_member_ctx(&want, &a.pr.fq, RADICAL_MAX_N, c.zeros);
        ensure(ra.is_yes(), || format!("{} is not in the original semigroup: {ra:?}", want.render()))?;
        let rb = radical_member(&want, &pb.fq, RADICAL_MAX_N);
        ensure(rb.is_no(), || format!("{} should not be in the enlarged semigroup: {rb:?}", want.render()))?;
        detail.push_str(&format!(", {} confirmed outside", want.render()));
    }
    if c.name.starts_with("nonneg") {
        ensure(v.nonneg_combination == Some(true), || "β should be a non-negative combination of the rows".into())?;
    }
    if let Some(sets) = c.h2 {
        let sets: Vec<BTreeSet<usize>> = sets.iter().map(|s| s.iter().copied().collect()).collect();
        let h = check_h2_subfamily(&sets, &[1, 2]);
        ensure(h.compatible(), || format!("nested-or-disjoint check failed: {h:?}"))?;
    }
    Ok(detail)
}

fn restriction_fixtures() -> Vec<Fixture> {
    let mut out: Vec<Fixture> = RESTRICTION_CASES.iter().map(|c| Fixture::new("restriction", c.name, move || run_restriction(c))).collect();
    out.push(Fixture::new("restriction", "four blocks + x1x2x3: zero-valued pair is a member", || {
        let d = deformation(&rows_of(LINES4))?;
        let beta: Vec<Q> = [1, 1, 1, 0].iter().map(|&x| q(x)).collect();
        let pb = enlarged_pipeline(&d, &PointPattern::zeros(&[3]), &beta).map_err(|e| e.to_string())?;
        let r = radical_member_ctx(&pair("t1/t4")?, &pb.fq, RADICAL_MAX_N, &[3]);
        ensure(r.is_yes(), || format!("(t1/t4, 0) should be in the enlarged semigroup: {r:?}"))?;
        Ok("(t1/t4, 0) is in the enlarged semigroup".into())
    }));
    out
}

// ---------------------------------------------------------------- levels

pub struct LevelCase {
    pub name: &'static str,
    pub rows: &'static [&'static [i64]],
    pub rho: &'static [&'static str],
    pub strict: &'static [bool],
}

/// Worked level families with their displayed ρ_Λ and strictness.
pub const LEVEL_CASES: &[LevelCase] = &[
    LevelCase { name: "normal type", rows: CLEAN3, rho: &["t1", "t2", "t3/(t1*t2)"], strict: &[true, true, true] },
    LevelCase {
        name: "four submanifolds",
        rows: &[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1], &[1, 1, 1]],
        rho: &["t1/max(t1, t2)", "t2/max(t1, t2)", "t3*max(t1, t2)/(t1*t2)", "max(t1, t2)"],
        strict: &[true, true, true, true],
    },
    LevelCase {
        name: "five submanifolds",
        rows: &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 0, 1], &[0, 1, 1]],
        rho: &["t1/max(t1, t3/max(t2, t3))", "t2/max(t2, t3)", "t3/max(t1*max(t2, t3), t3)", "max(t1, t3/max(t2, t3))", "max(t2, t3)"],
        strict: &[true, true, true, true, true],
    },
    LevelCase {
        name: "five submanifolds, non-strict",
        rows: &[&[1, 0, 0], &[0, 1, 0], &[1, 1, 1], &[1, 1, 0], &[0, 1, 1]],
        rho: &["1/max(1, t2/(t1*t3))", "1/max(1, t1*t3/t2)", "1", "max(t1, t2/t3)", "t3"],
        strict: &[true, true, false, true, true],
    },
];

fn level_fixtures() -> Vec<Fixture> {
    let mut out: Vec<Fixture> = LEVEL_CASES
        .iter()
        .map(|c| {
            Fixture::new("levels", c.name, move || {
                let s = setup(&rows_of(c.rows), &[])?;
                let fam = levels_of(&s)?;
                let mut rewritten = Vec::new();
                for (j, (got, want)) in fam.rho_lambda.iter().zip(c.rho).enumerate() {
                    let want = LevelExpr::parse(want).map_err(|e| e.to_string())?;
                    if *got != want {
                        ensure(semantically_equal(got, &want), || format!("ρ_Λ,{}: got {got}, want {want}", j + 1))?;
                        rewritten.push(j + 1);
                    }
                }
                ensure(fam.rho_lambda.len() == c.rho.len(), || "wrong number of level functions".into())?;
                let strict: Vec<bool> = (1..=s.d.ell).map(|j| is_strict(&fam, &s.d, j)).collect();
                ensure(strict == c.strict, || format!("strictness {strict:?}, want {:?}", c.strict))?;
                let how = if rewritten.is_empty() { "all equal as trees".to_string() } else { format!("ρ_Λ,j for j in {rewritten:?} equal as functions (exact), rest as trees") };
                Ok(format!("{}: {how}; strict = {strict:?}", fam.rho_lambda.len()))
            })
        })
        .collect();
    out.push(Fixture::new("levels", "generalized levels are strict on the non-strict family", || {
        let d = deformation(&rows_of(LEVEL_CASES[3].rows))?;
        let (g, n) = build_generalized_levels(&d, &PointPattern::generic(), 1000).map_err(|e| e.to_string())?;
        let strict: Vec<bool> = (1..=d.ell).map(|j| is_strict(&g, &d, j)).collect();
        ensure(strict.iter().all(|s| *s), || format!("ρ̂ strictness {strict:?}"))?;
        Ok(format!("{n} orderings; all strict"))
    }));
    out
}

// ---------------------------------------------------------------- multicones

struct DisplayCase {
    name: &'static str,
    rows: &'static [&'static [i64]],
    zeros: &'static [usize],
    display: &'static [&'static str],
}

const DISPLAY_CASES: &[DisplayCase] = &[
    DisplayCase { name: "three normal-type submanifolds", rows: &[&[0, 1, 1], &[1, 0, 1], &[0, 0, 1]], zeros: &[], display: &["|z0| < ε", "|z1| < ε", "|z2| < ε", "|z3| < ε|z1||z2|"] },
    DisplayCase {
        name: "three lines and the origin",
        rows: &[&[1, 0, 0, 1], &[0, 1, 0, 1], &[0, 0, 1, 1], &[1, 1, 1, 1]],
        zeros: &[],
        display: &["|z0| < ε", "|z3||z4| < ε^2|z1||z2|", "|z2||z4| < ε^2|z1||z3|", "|z1||z4| < ε^2|z2||z3|", "|z1||z2||z3| < ε^2|z4|"],
    },
    DisplayCase { name: "plane with two lines", rows: &[&[1, 0, 1], &[0, 1, 1]], zeros: &[1, 2], display: &["|z1| < ε", "|z2| < ε", "|z1||z2| < ε|z3|"] },
    DisplayCase { name: "C2 Majima", rows: &[&[1, 0], &[0, 1]], zeros: &[], display: &["|z1| < ε", "|z2| < ε"] },
    DisplayCase { name: "C2 Takeuchi", rows: &[&[1, 1], &[0, 1]], zeros: &[], display: &["|z1| < ε", "|z2| < ε|z1|"] },
    DisplayCase { name: "C2 cusp", rows: &[&[3, 2], &[1, 1]], zeros: &[], display: &["|z1| < ε|z2|", "|z2|^3 < ε|z1|^2"] },
    DisplayCase { name: "C3 two lines", rows: LINES, zeros: &[], display: &["|z1| < ε", "|z2| < ε|z1|", "(n - ε)|z2| < |z1||z3| < (n + ε)|z2|"] },
    DisplayCase { name: "C3 Majima", rows: &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]], zeros: &[], display: &["|z1| < ε", "|z2| < ε", "|z3| < ε"] },
    DisplayCase { name: "C3 Takeuchi", rows: &[&[1, 1, 1], &[0, 1, 1], &[0, 0, 1]], zeros: &[], display: &["|z1| < ε", "|z2| < ε|z1|", "|z3| < ε|z2|"] },
    DisplayCase { name: "C3 three lines", rows: &[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]], zeros: &[], display: &["|z1||z2| < ε|z3|", "|z2||z3| < ε|z1|", "|z1||z3| < ε|z2|"] },
    DisplayCase { name: "C3 mixed Majima-Takeuchi", rows: &[&[1, 1, 1], &[0, 1, 0], &[0, 0, 1]], zeros: &[], display: &["|z1| < ε", "|z2| < ε|z1|", "|z3| < ε|z1|"] },
    DisplayCase { name: "C3 mixed two lines-Takeuchi", rows: &[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]], zeros: &[], display: &["|z1| < ε", "|z2| < ε|z1|", "|z1||z3| < ε|z2|"] },
];

fn multicone_fixtures() -> Vec<Fixture> {
    let mut out: Vec<Fixture> = DISPLAY_CASES
        .iter()
        .map(|c| {
            Fixture::new("multicone", c.name, move || {
                let s = setup(&rows_of(c.rows), c.zeros)?;
                let sys = system_of(&s)?;
                let cmp = compare_display(&sys, &parse_display(c.display)?);
                ensure(cmp.ok(), || format!("{cmp:?}; system {:?}", sys.render()))?;
                Ok(format!("{} displayed inequalities matched", cmp.matched))
            })
        })
        .collect();
    out.push(Fixture::new("multicone", "closure of the clean-intersection triple", || {
        let s = setup(&rows_of(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 1]]), &[])?;
        let c = closure(&s.pr, s.d.m, DEFAULT_CLOSURE_DEGREE).map_err(|e| e.to_string())?;
        let pt = ConePoint::from_norms(&[0.0, 0.2, 0.0]);
        ensure(!c.member(&pt, 0.1), || format!("closure admits (0, 0.2, 0): {:?}", c.render()))?;
        Ok("(0, 0.2, 0) excluded at ε = 0.1".into())
    }));
    out.extend(catalog_fixtures());
    out
}

// ---------------------------------------------------------------- asymptotics

struct RemainderCase {
    name: &'static str,
    rows: &'static [&'static [i64]],
    /// per-J constraint lists, J in size-then-lex order
    constraints: &'static [&'static [&'static str]],
    remainder: &'static [&'static str],
}

const REMAINDER_CASES: &[RemainderCase] = &[
    RemainderCase { name: "C2 Majima", rows: &[&[1, 0], &[0, 1]], constraints: &[&["α1 < n1"], &["α2 < n2"], &["α1 < n1", "α2 < n2"]], remainder: &["n1", "n2"] },
    RemainderCase {
        name: "C2 Takeuchi",
        rows: &[&[1, 1], &[0, 1]],
        constraints: &[&["α1 + α2 < n1"], &["α2 < n2"], &["α1 + α2 < n1", "α2 < n2"]],
        remainder: &["n1 - n2", "n2"],
    },
    RemainderCase {
        name: "C2 cusp",
        rows: &[&[3, 2], &[1, 1]],
        constraints: &[&["3α1 + 2α2 < n1"], &["α1 + α2 < n2"], &["3α1 + 2α2 < n1", "α1 + α2 < n2"]],
        remainder: &["n1 - 2n2", "3n2 - n1"],
    },
    RemainderCase {
        name: "C3 two lines",
        rows: LINES,
        constraints: &[&["α1 + α2 < n1"], &["α2 + α3 < n2"], &["α1 + α2 < n1", "α2 + α3 < n2"]],
        remainder: &["n1 - n2", "n2", "0n1"],
    },
    RemainderCase {
        name: "C3 Majima",
        rows: &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1]],
        constraints: &[&["α1 < n1"], &["α2 < n2"], &["α3 < n3"]],
        remainder: &["n1", "n2", "n3"],
    },
    RemainderCase {
        name: "C3 Takeuchi",
        rows: &[&[1, 1, 1], &[0, 1, 1], &[0, 0, 1]],
        constraints: &[&["α1 + α2 + α3 < n1"], &["α2 + α3 < n2"], &["α3 < n3"]],
        remainder: &["n1 - n2", "n2 - n3", "n3"],
    },
    RemainderCase {
        name: "C3 three lines",
        rows: &[&[1, 1, 0], &[0, 1, 1], &[1, 0, 1]],
        constraints: &[&["α1 + α2 < n1"], &["α2 + α3 < n2"], &["α1 + α3 < n3"]],
        remainder: &["1/2n1 + 1/2n3 - 1/2n2", "1/2n1 + 1/2n2 - 1/2n3", "1/2n2 + 1/2n3 - 1/2n1"],
    },
    RemainderCase {
        name: "C3 mixed Majima-Takeuchi",
        rows: &[&[1, 1, 1], &[0, 1, 0], &[0, 0, 1]],
        constraints: &[&["α1 + α2 + α3 < n1"], &["α2 < n2"], &["α3 < n3"]],
        remainder: &["n1 - n2 - n3", "n2", "n3"],
    },
    RemainderCase {
        name: "C3 mixed two lines-Takeuchi",
        rows: &[&[1, 1, 0], &[0, 1, 1], &[0, 0, 1]],
        constraints: &[&["α1 + α2 < n1"], &["α2 + α3 < n2"], &["α3 < n3"]],
        remainder: &["n1 - n2 + n3", "n2 - n3", "n3"],
    },
];

fn remainder_of(s: &Setup) -> Result<Vec<LinearForm>, String> {
    remainder_forms(&levels_of(s)?, &s.d).ok_or_else(|| "remainder is not a monomial".into())
}

fn check_forms(got: &[LinearForm], want: &[&str], ell: usize) -> Result<(), String> {
    let want: Vec<LinearForm> = want.iter().map(|s| if *s == "0n1" { Ok(LinearForm(vec![Q::zero(); ell])) } else { LinearForm::parse(s, ell) }).collect::<Result<_, _>>()?;
    let pad = |v: &[LinearForm]| -> Vec<LinearForm> {
        let mut v = v.to_vec();
        while v.last().is_some_and(|f| f.0.iter().all(|c| c.is_zero())) {
            v.pop();
        }
        v
    };
    ensure(pad(got) == pad(&want), || format!("remainder {} want {}", render_remainder(got), render_remainder(&want)))
}

/// Random polynomial in `nvars` variables with small rational coefficients.
pub fn random_poly(rng: &mut ChaCha8Rng, nvars: usize, max_deg: u32, max_terms: usize) -> Poly {
    let mut p = Poly::zero();
    for _ in 0..rng.gen_range(1..=max_terms) {
        let e: Vec<u32> = (0..nvars).map(|_| rng.gen_range(0..=max_deg)).collect();
        let c = Q::new(rng.gen_range(-9i64..=9).into(), rng.gen_range(1i64..=4).into());
        p.add_term(e, c);
    }
    p
}

fn asymptotic_fixtures() -> Vec<Fixture> {
    let mut out = Vec::new();
    for (idx, c) in REMAINDER_CASES.iter().enumerate() {
        out.push(Fixture::new("asymptotics", format!("{} index sets and remainder", c.name), move || {
            let s = setup(&rows_of(c.rows), &[])?;
            let subsets = nonempty_subsets(s.d.ell).map_err(|e| e.to_string())?;
            for (j, want) in subsets.iter().zip(c.constraints) {
                let got = constraints_for(&s.d, j);
                ensure(got == *want, || format!("A_J constraints for J = {j:?}: got {got:?}, want {want:?}"))?;
            }
            check_forms(&remainder_of(&s)?, c.remainder, s.d.ell)?;
            Ok(format!("remainder {}", render_remainder(&remainder_of(&s)?)))
        }));
        out.push(Fixture::new("asymptotics", format!("{} oracle equivalence", c.name), move || {
            let d = deformation(&rows_of(c.rows))?;
            let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED + idx as u64);
            let subsets = nonempty_subsets(d.ell).map_err(|e| e.to_string())?;
            for _ in 0..RANDOM_POLYS_PER_FIXTURE {
                let f = random_poly(&mut rng, d.m, 4, 5);
                let n: Vec<u64> = (0..d.ell).map(|_| rng.gen_range(0..=6)).collect();
                for j in &subsets {
                    ensure(taylor_by_index(&d, j, &n, &f) == taylor_oracle(&d, j, &n, &f), || format!("T_J differs for J = {j:?}, N = {n:?}, f = {}", f.render()))?;
                }
                let a = app_of_function(&d, &n, &f).map_err(|e| e.to_string())?;
                let b = app_oracle(&d, &n, &f).map_err(|e| e.to_string())?;
                ensure(a == b, || format!("App differs for N = {n:?}, f = {}", f.render()))?;
            }
            for _ in 0..RANDOM_DERIVATIVE_CHECKS {
                let f = random_poly(&mut rng, d.m, 4, 5);
                let n: Vec<u64> = (0..d.ell).map(|_| rng.gen_range(0..=5)).collect();
                let i = rng.gen_range(1..=d.m);
                ensure(check_derivative_identity(&d, &f, &n, i).map_err(|e| e.to_string())?, || format!("derivative identity fails: i = {i}, N = {n:?}, f = {}", f.render()))?;
            }
            Ok(format!("{RANDOM_POLYS_PER_FIXTURE} random polynomials, {RANDOM_DERIVATIVE_CHECKS} derivative checks"))
        }));
    }
    out.push(Fixture::new("asymptotics", "general two-block remainder formula", || {
        let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
        let mut checked = 0;
        while checked < 50 {
            let a: Vec<i64> = (0..4).map(|_| rng.gen_range(0..=5)).collect();
            let det = a[0] * a[3] - a[1] * a[2];
            if det == 0 || (a[0] == 0 && a[1] == 0) || (a[2] == 0 && a[3] == 0) {
                continue;
            }
            let s = match setup(&[vec![a[0], a[1]], vec![a[2], a[3]]], &[]) {
                Ok(s) => s,
                Err(_) => continue,
            };
            let sigma = crate::deformation::sigma_of(&s.d.a);
            let scale = Q::from_integer(det.into()) * &sigma;
            let want = vec![LinearForm(vec![q(a[3]) / &scale, q(-a[1]) / &scale]), LinearForm(vec![q(-a[2]) / &scale, q(a[0]) / &scale])];
            let got = remainder_of(&s)?;
            ensure(got == want, || format!("A = {a:?}: got {}, want {}", render_remainder(&got), render_remainder(&want)))?;
            checked += 1;
        }
        Ok(format!("{checked} random invertible 2×2 matrices"))
    }));
    out
}

struct CatalogCase {
    rows: &'static [&'static [(i64, i64)]],
    label: &'static str,
    display: &'static [&'static str],
    remainder: &'static [&'static str],
}

const CATALOG_CASES: &[CatalogCase] = &[
    CatalogCase { rows: &[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)]], label: "m=2 N=2", display: &["|z1| < ε", "|z2| < ε"], remainder: &["n1", "n2"] },
    CatalogCase { rows: &[&[(1, 1), (1, 2)], &[(0, 1), (1, 1)]], label: "m=2 N=3", display: &["|z1| < ε", "|z2| < ε|z1|^(1/2)"], remainder: &["1/2n1 - 1/4n2", "1/2n2"] },
    CatalogCase {
        rows: &[&[(1, 1), (1, 2)], &[(1, 3), (1, 1)]],
        label: "m=2 N=4",
        display: &["|z1| < ε|z2|^(1/3)", "|z2| < ε|z1|^(1/2)"],
        remainder: &["1/5n1 - 1/10n2", "1/5n2 - 1/15n1"],
    },
    CatalogCase { rows: &[&[(1, 1), (0, 1), (2, 1)], &[(0, 1), (1, 1), (0, 1)]], label: "m=3 N=3", display: &["|z1| < ε", "|z2| < ε", "|z3| < ε|z1|^2"], remainder: &["n1", "n2"] },
    CatalogCase {
        rows: &[&[(1, 1), (2, 1), (3, 1)], &[(0, 1), (1, 1), (0, 1)]],
        label: "m=3 N=4(a)",
        display: &["|z1| < ε", "|z2| < ε|z1|^2", "|z3| < ε|z1|^3"],
        remainder: &["n1 - 2n2", "n2"],
    },
    CatalogCase {
        rows: &[&[(1, 1), (2, 1), (0, 1)], &[(0, 1), (1, 1), (3, 1)]],
        label: "m=3 N=4(b)",
        display: &["|z1| < ε", "|z2| < ε|z1|^2", "|z3||z1|^6 < ε|z2|^3"],
        remainder: &["n1 - 2n2", "n2"],
    },
    CatalogCase {
        rows: &[&[(1, 1), (2, 1), (5, 1)], &[(0, 1), (1, 1), (1, 1)]],
        label: "m=3 N=5",
        display: &["|z1| < ε", "|z2| < ε|z1|^2", "|z3| < ε|z1|^3|z2|"],
        remainder: &["n1 - 2n2", "n2"],
    },
    CatalogCase {
        rows: &[&[(1, 1), (1, 2), (2, 1)], &[(1, 3), (1, 1), (3, 1)]],
        label: "m=3 N=6",
        display: &["|z1| < ε|z2|^(1/3)", "|z2| < ε|z1|^(1/2)", "|z3| < ε|z1|^(3/5)|z2|^(14/5)"],
        remainder: &["1/5n1 - 1/10n2", "1/5n2 - 1/15n1"],
    },
];

fn catalog_fixtures() -> Vec<Fixture> {
    CATALOG_CASES
        .iter()
        .map(|c| {
            Fixture::new("multicone", format!("two-manifold catalog {}", c.label), move || {
                let a: Vec<Vec<Q>> = c.rows.iter().map(|r| r.iter().map(|&(n, d)| Q::new(n.into(), d.into())).collect()).collect();
                let rep = classify_two_manifolds(&a).map_err(|e| e.to_string())?;
                ensure(rep.label == c.label, || format!("classified as {}", rep.label))?;
                let d = DeformationData::new(rep.normalized.clone()).map_err(|e| e.to_string())?;
                let s = setup_q(d, &rep.zero_blocks)?;
                let sys = system_of(&s)?;
                let cmp = compare_display(&sys, &parse_display(c.display)?);
                ensure(cmp.ok(), || format!("{cmp:?}; system {:?}", sys.render()))?;
                check_forms(&rep.remainder, c.remainder, 2)?;
                Ok(format!("{}: {}", rep.label, rep.remainder_text))
            })
        })
        .collect()
}

fn setup_q(d: DeformationData, zeros: &[usize]) -> Result<Setup, String> {
    let p = PointPattern::zeros(zeros);
    let r = rank_and_normalize(&d, &p).map_err(|e| e.to_string())?;
    let pr = run_pipeline(&d, &r, &p).map_err(|e| e.to_string())?;
    Ok(Setup { d, r, p, pr })
}

// ---------------------------------------------------------------- induced maps

fn polys(items: &[&str]) -> Result<Vec<Poly>, String> {
    items.iter().map(|s| Poly::parse(s)).collect()
}

fn map_fixtures() -> Vec<Fixture> {
    let ok_case = |name: &'static str, src: &'static [&'static [i64]], tgt: &'static [&'static [i64]], f: &'static [&'static str], want: &'static [&'static str]| {
        Fixture::new("maps", name, move || {
            let spec = PolyMapSpec { source: deformation(&rows_of(src))?, target: deformation(&rows_of(tgt))?, components: polys(f)? };
            match check_map(&spec) {
                MapCheck::Ok(t) => {
                    let want = polys(want)?;
                    ensure(t == want, || format!("T_χf = {:?}", t.iter().map(|p| p.render()).collect::<Vec<_>>()))?;
                    Ok(format!("T_χf = ({})", t.iter().map(|p| p.render()).collect::<Vec<_>>().join(", ")))
                }
                MapCheck::Fail(e) => Err(e.reason),
            }
        })
    };
    vec![
        ok_case("lines to chain", &[&[1, 1, 0], &[0, 1, 1]], &[&[1, 1, 1], &[0, 1, 1]], &["x1", "x1*x3 + x2", "x1*x3"], &["x1", "x1*x3 + x2", "x1*x3"]),
        ok_case("Majima to cusp", &[&[1, 0], &[0, 1]], &[&[3, 2], &[1, 1]], &["x1^3*x2", "x1^2*x2"], &["x1^3*x2", "x1^2*x2"]),
        ok_case("Majima to Takeuchi (blow-up)", &[&[1, 0], &[0, 1]], &[&[1, 1], &[0, 1]], &["x1", "x1*x2"], &["x1", "x1*x2"]),
        Fixture::new("maps", "identity to cusp fails", || {
            let spec = PolyMapSpec { source: deformation(&[vec![1, 0], vec![0, 1]])?, target: deformation(&[vec![3, 2], vec![1, 1]])?, components: polys(&["x1", "x2"])? };
            match check_map(&spec) {
                MapCheck::Fail(e) => {
                    ensure(e.reason.contains("monomial z1 of f^(1) has weight (1,0) < (3,1)"), || e.reason.clone())?;
                    Ok(e.reason)
                }
                MapCheck::Ok(_) => Err("identity to cusp was accepted".into()),
            }
        }),
    ]
}

// ---------------------------------------------------------------- property suites

/// φ_k(ρ_Λ) = Π_j ρ_Λ,j^{a_jk} should reproduce τ_k.
fn round_trip_error(d: &DeformationData, fam: &LevelFamily, tau: &[f64]) -> Result<f64, String> {
    let rho: Vec<f64> = fam.rho_lambda.iter().map(|e| evaluate_level(e, tau).map_err(|e| e.to_string())).collect::<Result<_, _>>()?;
    let mut worst: f64 = 0.0;
    for k in 1..=d.m {
        let log_phi: f64 = (1..=d.ell).map(|j| crate::rat::to_f64(d.entry(j, k)) * rho[j - 1].ln()).sum();
        worst = worst.max((log_phi.exp() / tau[k - 1] - 1.0).abs());
    }
    Ok(worst)
}

const PROPERTY_CONFIGS: &[(&str, &[&[i64]], &[usize])] = &[
    ("cusp", &[&[3, 2], &[1, 1]], &[]),
    ("Takeuchi", &[&[1, 1], &[0, 1]], &[]),
    ("two lines", LINES, &[]),
    ("plane with two lines", &[&[1, 0, 1], &[0, 1, 1]], &[1, 2]),
    ("four submanifolds", &[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1], &[1, 1, 1]], &[]),
    ("five submanifolds", &[&[1, 0, 0], &[0, 1, 0], &[0, 0, 1], &[1, 0, 1], &[0, 1, 1]], &[]),
];

pub fn property_fixtures(samples: usize, seed: u64) -> Vec<Fixture> {
    let mut out = Vec::new();
    out.push(Fixture::new("properties", "contraction stability", move || {
        let mut total = 0;
        for (i, (name, rows, zeros)) in PROPERTY_CONFIGS.iter().enumerate() {
            let s = setup(&rows_of(rows), zeros)?;
            let sys = system_of(&s)?;
            let per = samples / PROPERTY_CONFIGS.len() + 1;
            let rep = contraction_stable_check(&sys, &EpsSpec::Single(0.1), per, seed + i as u64).map_err(|e| e.to_string())?;
            ensure(rep.failed == 0, || format!("{name}: {} violations, first {:?}", rep.failed, rep.first_failure))?;
            total += rep.passed;
        }
        Ok(format!("{total} samples, 0 violations"))
    }));
    out.push(Fixture::new("properties", "generators bounded on level sets", move || {
        let mut total = 0;
        // level functions live off the fixed points, so only generic base points
        for (i, (name, rows, _)) in PROPERTY_CONFIGS.iter().enumerate() {
            let s = setup(&rows_of(rows), &[])?;
            let fam = levels_of(&s)?;
            let rep = level_boundedness(&s.pr, &fam, s.d.m, 0.1);
            let c = rep.constant.ok_or_else(|| format!("{name}: no bounding constant"))?;
            let per = samples / PROPERTY_CONFIGS.len() + 1;
            let v = level_boundedness_violations(&s.pr, &fam, s.d.m, 0.1, &rep, per, seed + 100 + i as u64).map_err(|e| e.to_string())?;
            ensure(v == 0, || format!("{name}: {v} violations at C = {c}"))?;
            total += per;
        }
        Ok(format!("{total} samples, 0 violations"))
    }));
    out.push(Fixture::new("properties", "level round trip", move || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 200);
        let mut worst: f64 = 0.0;
        let per = samples / PROPERTY_CONFIGS.len() + 1;
        for (name, rows, _) in PROPERTY_CONFIGS {
            let s = setup(&rows_of(rows), &[])?;
            let fam = levels_of(&s)?;
            for _ in 0..per {
                // τ must lie in the image of the action: τ = φ(λ)
                let lambda: Vec<f64> = (0..s.d.ell).map(|_| (-rng.gen_range(0.0..6.0f64)).exp()).collect();
                let tau: Vec<f64> = (1..=s.d.m).map(|k| (1..=s.d.ell).map(|j| lambda[j - 1].powf(crate::rat::to_f64(s.d.entry(j, k)))).product()).collect();
                let e = round_trip_error(&s.d, &fam, &tau)?;
                ensure(e <= ROUND_TRIP_TOL, || format!("{name}: relative error {e:e} at τ = {tau:?}"))?;
                worst = worst.max(e);
            }
        }
        Ok(format!("max relative error {worst:.2e}"))
    }));
    out.push(Fixture::new("properties", "remainder estimates", move || {
        let mut runs = 0;
        let mut worst_growth: f64 = 0.0;
        let fns = [TestFunction::parse("z1*z2").map_err(|e| e.to_string())?, TestFunction::ExpTruncation { degree: 8 }];
        // samples split across all (fixture, f, N) runs and both ε levels
        let per = (samples / 32).max(50);
        for (name, rows) in [("cusp", &[&[3i64, 2][..], &[1, 1]][..]), ("Takeuchi", &[&[1, 1][..], &[0, 1]][..])] {
            let s = setup(&rows_of(rows), &[])?;
            let fam = levels_of(&s)?;
            let sys = system_of(&s)?;
            for f in &fns {
                let p = f.to_poly(2);
                for n1 in 0..=3 {
                    for n2 in 0..=3 {
                        let rep = verify_estimate(&s.d, &fam, &p, &[n1, n2], &sys, 0.1, per, seed + runs).map_err(|e| e.to_string())?;
                        ensure(rep.pass, || format!("{name}, f = {f:?}, N = ({n1},{n2}): {rep:?}"))?;
                        worst_growth = worst_growth.max(rep.growth);
                        runs += 1;
                    }
                }
            }
        }
        Ok(format!("{runs} estimates PASS; max C growth {worst_growth:.3}"))
    }));
    out
}

// ---------------------------------------------------------------- radical property

/// Configurations used by the pipeline, restriction, level, multicone and asymptotics fixtures.
pub fn fixture_configurations() -> Vec<(Vec<Vec<i64>>, Vec<usize>)> {
    let mut out: Vec<(Vec<Vec<i64>>, Vec<usize>)> = Vec::new();
    let mut push = |rows: &[&[i64]], zeros: &[usize]| {
        let item = (rows_of(rows), zeros.to_vec());
        if !out.contains(&item) {
            out.push(item);
        }
    };
    for c in SET_CASES {
        push(c.rows, c.zeros);
    }
    for c in RESTRICTION_CASES {
        push(c.rows, c.zeros);
    }
    for c in LEVEL_CASES {
        push(c.rows, &[]);
    }
    for c in DISPLAY_CASES {
        push(c.rows, c.zeros);
    }
    push(&[&[1, 0, 1], &[0, 1, 1], &[1, 1, 1]], &[]);
    for c in REMAINDER_CASES {
        push(c.rows, &[]);
    }
    out
}

/// λ-free generators met along the pipeline whose exponents on the zero blocks are
/// non-negative, with their limit values.
pub fn pipeline_generators(pr: &PipelineResult) -> Result<GenSet, String> {
    let mut out = GenSet::new();
    let stages = std::iter::once(&pr.f0).chain(pr.f0_stages.iter().map(|(_, s)| s)).chain(pr.f_stages.iter().map(|(_, s)| s)).chain(std::iter::once(&pr.fq));
    for s in stages {
        for p in s {
            if p.f.has_lambda() || pr.pattern.zero_blocks.iter().any(|&k| p.f.exponent(VarId::Tau(k)).is_negative()) {
                continue;
            }
            let v = value_of(&p.f, pr).map_err(|e| e.to_string())?;
            out.insert(GenPair::new(p.f.clone(), v));
        }
    }
    Ok(out)
}

fn radical_fixtures() -> Vec<Fixture> {
    vec![Fixture::new("radical", "generators are radical over F^q on every configuration", || {
        let mut gens = 0;
        let configs = fixture_configurations();
        for (rows, zeros) in &configs {
            let s = setup(rows, zeros)?;
            let g = pipeline_generators(&s.pr)?;
            let zero_blocks: Vec<usize> = s.pr.pattern.zero_blocks.iter().copied().collect();
            for p in &g {
                let r = radical_member_ctx(p, &s.pr.fq, RADICAL_MAX_N, &zero_blocks);
                ensure(r.is_yes(), || format!("{rows:?} {zeros:?}: {} has no power ≤ {RADICAL_MAX_N} in [F^q]: {r:?}", p.render()))?;
                gens += 1;
            }
            let v = equivalent(&s.pr.fq, &g, RADICAL_MAX_N);
            ensure(v == Verdict::Yes, || format!("{rows:?} {zeros:?}: equivalent([F^q], G) = {v:?}"))?;
        }
        Ok(format!("{} configurations, {gens} generators", configs.len()))
    })]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_names_are_unique_and_grouped() {
        let c = corpus();
        let names: BTreeSet<(&str, &str)> = c.iter().map(|f| (f.group, f.name.as_str())).collect();
        assert_eq!(names.len(), c.len());
        assert!(c.iter().all(|f| GROUPS.contains(&f.group)));
        assert!(c.iter().filter(|f| f.matches("restriction")).all(|f| f.group == "restriction"));
        assert!(!c.iter().any(|f| f.matches("no-such-fixture")));
    }

    #[test]
    fn pair_notation() {
        assert_eq!(pair("t3/(t1*t2)@x3").unwrap(), GenPair::new(Monomial::parse("t3/(t1*t2)").unwrap(), Value::Xi(Monomial::xi(3))));
        assert_eq!(pair("1@1").unwrap(), GenPair::unit());
        assert_eq!(pair("t1").unwrap(), GenPair::zero(Monomial::tau(1)));
    }
}
