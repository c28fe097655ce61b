//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

use multispec::asymptotics::GROWTH_LIMIT;
use multispec::deformation::{rank_and_normalize, DeformationData, PointPattern};
use multispec::fixtures::{corpus, FixtureOutcome, LEVEL_CASES, PROPERTY_SAMPLES, RADICAL_MAX_N, RANDOM_DERIVATIVE_CHECKS, RANDOM_POLYS_PER_FIXTURE, ROUND_TRIP_TOL};
use multispec::levels::{build_generalized_levels, build_levels, is_strict, LevelExpr};
use std::time::Instant;

// Pinned limits. The library constants are checked against these so that loosening
// them there cannot silently loosen the acceptance run.
const PIPELINE_BUDGET_MS: f64 = 1_000.0;
const RESTRICTION_BUDGET_MS: f64 = 5_000.0;
const LEVELS_BUDGET_MS: f64 = 1_000.0;
const ASYMPTOTICS_BUDGET_MS: f64 = 10_000.0;
const PROPERTIES_BUDGET_MS: f64 = 60_000.0;
const MIN_PROPERTY_SAMPLES: usize = 10_000;
const MIN_RANDOM_POLYS: usize = 50;
const MIN_DERIVATIVE_CHECKS: usize = 20;
const MAX_ROUND_TRIP_TOL: f64 = 1e-10;
const MAX_GROWTH: f64 = 2.0;
const MAX_RADICAL_POWER: u32 = 64;

struct Line {
    pass: bool,
    text: String,
}

fn run_group(group: &str) -> (Vec<FixtureOutcome>, f64) {
    let t = Instant::now();
    let out: Vec<FixtureOutcome> = corpus().iter().filter(|f| f.group == group).map(|f| f.run()).collect();
    (out, t.elapsed().as_secs_f64() * 1e3)
}

fn group_line(label: &str, group: &str, budget: Option<f64>, pinned: Result<(), String>) -> Line {
    let (res, ms) = run_group(group);
    let failed: Vec<&FixtureOutcome> = res.iter().filter(|r| !r.pass).collect();
    let in_budget = budget.is_none_or(|b| ms < b);
    let mut text = format!("{label}: {}/{} fixtures, {ms:.0} ms", res.len() - failed.len(), res.len());
    if let Some(b) = budget {
        text.push_str(&format!(" (limit {b:.0} ms)"));
    }
    for f in &failed {
        text.push_str(&format!("\n    {} — {}", f.name, f.detail));
    }
    if let Err(e) = &pinned {
        text.push_str(&format!("\n    pinned constant: {e}"));
    }
    Line { pass: !res.is_empty() && failed.is_empty() && in_budget && pinned.is_ok(), text }
}

fn pinned(cond: bool, msg: &str) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

/// Level displays: literal expression trees (operands of max/min are unordered), strictness
/// of every action, and strictness of the generalized family on the non-strict example.
fn levels_line() -> Line {
    let t = Instant::now();
    let mut problems = Vec::new();
    let mut entries = 0;
    for c in LEVEL_CASES {
        let rows: Vec<&[i64]> = c.rows.to_vec();
        let d = DeformationData::from_ints(&rows).expect("matrix");
        let p = PointPattern::generic();
        let r = rank_and_normalize(&d, &p).expect("rank");
        let fam = build_levels(&d, &r, &p).expect("levels");
        for (j, want) in c.rho.iter().enumerate() {
            entries += 1;
            let want = LevelExpr::parse(want).expect("display");
            if fam.rho_lambda[j] != want {
                problems.push(format!("{} ρ_Λ,{}: built {} , displayed {}", c.name, j + 1, fam.rho_lambda[j], want));
            }
        }
        let strict: Vec<bool> = (1..=d.ell).map(|j| is_strict(&fam, &d, j)).collect();
        if strict != c.strict {
            problems.push(format!("{} strictness {strict:?}, expected {:?}", c.name, c.strict));
        }
    }
    let last = LEVEL_CASES.last().expect("cases");
    let rows: Vec<&[i64]> = last.rows.to_vec();
    let d = DeformationData::from_ints(&rows).expect("matrix");
    let (g, _) = build_generalized_levels(&d, &PointPattern::generic(), 1000).expect("generalized levels");
    if !(1..=d.ell).all(|j| is_strict(&g, &d, j)) {
        problems.push("generalized family is not strict on the non-strict example".into());
    }
    let ms = t.elapsed().as_secs_f64() * 1e3;
    let mut text = format!("level functions: {}/{entries} displays tree-equal, {ms:.0} ms (limit {LEVELS_BUDGET_MS:.0} ms)", entries - problems.iter().filter(|p| p.contains("ρ_Λ")).count());
    for p in &problems {
        text.push_str(&format!("\n    {p}"));
    }
    Line { pass: problems.is_empty() && ms < LEVELS_BUDGET_MS, text }
}

fn main() {
    let lines = vec![
        group_line("1 pipeline exactness", "pipeline", Some(PIPELINE_BUDGET_MS), Ok(())),
        group_line("2 restriction verdicts", "restriction", Some(RESTRICTION_BUDGET_MS), pinned(RADICAL_MAX_N <= MAX_RADICAL_POWER, "radical search bound above 64")),
        {
            let mut l = levels_line();
            l.text = format!("3 {}", l.text);
            l
        },
        group_line("4 multicone systems", "multicone", None, Ok(())),
        group_line(
            "5 asymptotics",
            "asymptotics",
            Some(ASYMPTOTICS_BUDGET_MS),
            pinned(RANDOM_POLYS_PER_FIXTURE >= MIN_RANDOM_POLYS && RANDOM_DERIVATIVE_CHECKS >= MIN_DERIVATIVE_CHECKS, "too few random instances"),
        ),
        group_line("6 induced maps", "maps", None, Ok(())),
        group_line(
            "7 property suites",
            "properties",
            Some(PROPERTIES_BUDGET_MS),
            pinned(PROPERTY_SAMPLES >= MIN_PROPERTY_SAMPLES && ROUND_TRIP_TOL <= MAX_ROUND_TRIP_TOL && GROWTH_LIMIT <= MAX_GROWTH, "sample count or tolerance loosened"),
        ),
        group_line("8 radical property", "radical", None, pinned(RADICAL_MAX_N <= MAX_RADICAL_POWER, "radical search bound above 64")),
    ];
    let mut failed = 0;
    for l in &lines {
        println!("{} {}", if l.pass { "PASS" } else { "FAIL" }, l.text);
        if !l.pass {
            failed += 1;
        }
    }
    println!("{} of {} criteria passed", lines.len() - failed, lines.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
