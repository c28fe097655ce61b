//! Command implementations behind the CLI: scenarios in, structured documents out,
//! rendered as text, JSON or LaTeX. Every error names the module it came from.

use crate::asymptotics::{
    app_template, check_map, classify_two_manifolds, index_set, nonempty_subsets, remainder_exponent, remainder_forms, render_remainder, render_set as render_j, verify_estimate, Layout, MapCheck,
    PolyMapSpec, TestFunction,
};
use crate::deformation::{classify_action, is_fixed_point, rank_and_normalize, sigma_of, DeformationData, PointPattern, RankData};
use crate::fixtures::{run_fixtures, FixtureOutcome};
use crate::levels::{build_generalized_levels, build_levels, is_strict, latex_mono, LevelFamily};
use crate::monomial::{render_set, set_to_json, GenPair, GenSet, Value};
use crate::multicone::{build_multicone, closure, normal_cone_probe, project, BuildOptions, ConePoint, MulticoneSystem, ProbeVerdict, ZSet, DEFAULT_CLOSURE_DEGREE};
use crate::poly::Poly;
use crate::rat::{fmt_q, parse_q, Q};
use crate::restriction::check_restriction;
use crate::semigroup::{run_pipeline, PipelineResult};
use serde_json::{json, Map, Value as Json};
use std::fmt;

pub const FORMAT_ENV: &str = "MULTISPEC_FORMAT";
pub const DEFAULT_SAMPLES: usize = 2000;
pub const DEFAULT_EPS: f64 = 0.1;
pub const DEFAULT_MAX_PERMS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Latex,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Format, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "latex" => Ok(Format::Latex),
            other => Err(format!("unknown format {other:?} (expected text, json or latex)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub module: &'static str,
    pub message: String,
    /// process exit code: 2 for unreadable input, 1 otherwise
    pub exit: i32,
}

impl CliError {
    pub fn new(module: &'static str, message: impl fmt::Display) -> CliError {
        CliError { module, message: message.to_string(), exit: 1 }
    }

    pub fn parse(message: impl fmt::Display) -> CliError {
        CliError { module: "cli-report", message: message.to_string(), exit: 2 }
    }

    pub fn to_json(&self) -> Json {
        json!({"error": {"module": self.module, "message": self.message}})
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error[{}]: {}", self.module, self.message)
    }
}

impl std::error::Error for CliError {}

fn err<E: fmt::Display>(module: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::new(module, e)
}

// ---------------------------------------------------------------- documents

#[derive(Clone, Debug, Default)]
pub struct Section {
    pub name: String,
    pub text: Vec<String>,
    pub latex: Vec<String>,
    pub json: Json,
}

impl Section {
    fn new(name: &str, text: Vec<String>, json: Json) -> Section {
        Section { name: name.into(), text, latex: Vec::new(), json }
    }

    fn with_latex(mut self, latex: Vec<String>) -> Section {
        self.latex = latex;
        self
    }

    fn unavailable(name: &str, e: &CliError) -> Section {
        Section::new(name, vec![format!("unavailable: {e}")], e.to_json())
    }
}

#[derive(Clone, Debug, Default)]
pub struct Doc {
    pub title: String,
    pub sections: Vec<Section>,
    /// the command's own verdict; false makes the CLI exit nonzero
    pub ok: bool,
}

impl Doc {
    fn new(title: impl Into<String>) -> Doc {
        Doc { title: title.into(), sections: Vec::new(), ok: true }
    }

    fn push(&mut self, s: Section) {
        self.sections.push(s);
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => {
                let mut out = format!("# {}\n", self.title);
                for s in &self.sections {
                    out.push_str(&format!("\n== {} ==\n", s.name));
                    for l in &s.text {
                        out.push_str(l);
                        out.push('\n');
                    }
                }
                out
            }
            Format::Json => {
                let mut m = Map::new();
                m.insert("title".into(), json!(self.title));
                for s in &self.sections {
                    m.insert(s.name.clone(), s.json.clone());
                }
                let mut text = serde_json::to_string_pretty(&Json::Object(m)).expect("json");
                text.push('\n');
                text
            }
            Format::Latex => {
                let mut out = format!("% {}\n", self.title);
                for s in &self.sections {
                    out.push_str(&format!("\n% {}\n", s.name));
                    if s.latex.is_empty() {
                        for l in &s.text {
                            out.push_str(&format!("% {l}\n"));
                        }
                    } else {
                        out.push_str("\\begin{align*}\n");
                        out.push_str(&s.latex.iter().map(|l| format!("  & {l}")).collect::<Vec<_>>().join(" \\\\\n"));
                        out.push_str("\n\\end{align*}\n");
                    }
                }
                out
            }
        }
    }
}

fn latex_value(v: &Value) -> String {
    match v {
        Value::Zero => "0".into(),
        Value::Xi(m) => latex_mono(m),
    }
}

fn latex_pair(p: &GenPair) -> String {
    format!("\\left({}, {}\\right)", latex_mono(&p.f), latex_value(&p.v))
}

pub fn latex_set(s: &GenSet) -> String {
    format!("\\left\\{{{}\\right\\}}", s.iter().map(latex_pair).collect::<Vec<_>>().join(", "))
}

/// Turns a displayed inequality ("|z1||z2| < ε|z3|^(1/2)") into LaTeX.
pub fn latex_display(line: &str) -> String {
    let mut out = String::new();
    let cs: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < cs.len() {
        let c = cs[i];
        if (c == 'z' || c == 'n') && i + 1 < cs.len() && cs[i + 1].is_ascii_digit() {
            let mut j = i + 1;
            while j < cs.len() && cs[j].is_ascii_digit() {
                j += 1;
            }
            let idx: String = cs[i + 1..j].iter().collect();
            out.push_str(&if c == 'z' { format!("z^{{({idx})}}") } else { format!("n_{{{idx}}}") });
            i = j;
            continue;
        }
        match c {
            'ε' => out.push_str("\\epsilon "),
            'ξ' => out.push_str("\\xi"),
            '≤' => out.push_str("\\le "),
            '^' if i + 1 < cs.len() && (cs[i + 1] == '(' || cs[i + 1] == '{') => {
                let close = if cs[i + 1] == '(' { ')' } else { '}' };
                let end = cs[i + 2..].iter().position(|&x| x == close).map_or(cs.len(), |p| p + i + 2);
                let inner: String = cs[i + 2..end.min(cs.len())].iter().collect();
                out.push_str(&format!("^{{{}}}", latex_display(&inner)));
                i = end + 1;
                continue;
            }
            _ => out.push(c),
        }
        i += 1;
    }
    out
}

// ---------------------------------------------------------------- scenarios

#[derive(Clone, Debug)]
pub struct Scenario {
    pub deformation: DeformationData,
    pub point: PointPattern,
}

pub fn parse_index_list(s: &str) -> Result<Vec<usize>, CliError> {
    s.split([',', ' ']).filter(|x| !x.trim().is_empty()).map(|x| x.trim().parse::<usize>().map_err(|_| CliError::parse(format!("expected a block index, got {x:?}")))).collect()
}

pub fn parse_q_list(s: &str) -> Result<Vec<Q>, CliError> {
    s.split(',').map(|x| parse_q(x.trim()).map_err(CliError::parse)).collect()
}

pub fn parse_n(s: &str) -> Result<Vec<u64>, CliError> {
    s.split(',').map(|x| x.trim().parse::<u64>().map_err(|_| CliError::parse(format!("expected a non-negative integer, got {x:?}")))).collect()
}

/// "1,0,1; 0,1,1" → rational matrix.
pub fn parse_rows(s: &str) -> Result<Vec<Vec<Q>>, CliError> {
    s.split(';').filter(|r| !r.trim().is_empty()).map(parse_q_list).collect()
}

impl Scenario {
    /// JSON object with "A" (rows of rationals as strings or numbers) and optional
    /// "blocks", "K" and "zeros".
    pub fn from_json_text(text: &str) -> Result<Scenario, CliError> {
        let j: Json = serde_json::from_str(text).map_err(|e| CliError::parse(format!("invalid JSON at line {}, column {}: {e}", e.line(), e.column())))?;
        let deformation = DeformationData::from_json(&j).map_err(|e| CliError { exit: 2, ..CliError::new("deformation-model", e) })?;
        let zeros = match j.get("zeros") {
            None | Some(Json::Null) => Vec::new(),
            Some(z) => z
                .as_array()
                .and_then(|a| a.iter().map(|x| x.as_u64().map(|v| v as usize)).collect::<Option<Vec<_>>>())
                .ok_or_else(|| CliError::parse("\"zeros\" must be an array of block indices"))?,
        };
        Scenario::new(deformation, &zeros)
    }

    pub fn from_rows(rows: &str, zeros: &[usize]) -> Result<Scenario, CliError> {
        let a = parse_rows(rows)?;
        let d = DeformationData::new(a).map_err(err("deformation-model"))?;
        Scenario::new(d, zeros)
    }

    pub fn new(deformation: DeformationData, zeros: &[usize]) -> Result<Scenario, CliError> {
        if let Some(&k) = zeros.iter().find(|&&k| k == 0 || k > deformation.m) {
            return Err(CliError::new("deformation-model", format!("zero block {k} outside 1..{}", deformation.m)));
        }
        let point = PointPattern::zeros(zeros);
        point.validate(&deformation).map_err(err("deformation-model"))?;
        Ok(Scenario { deformation, point })
    }

    pub fn with_zeros(self, zeros: Option<&[usize]>) -> Result<Scenario, CliError> {
        match zeros {
            Some(z) => Scenario::new(self.deformation, z),
            None => Ok(self),
        }
    }

    fn rank(&self) -> Result<RankData, CliError> {
        rank_and_normalize(&self.deformation, &self.point).map_err(err("deformation-model"))
    }

    fn pipeline(&self) -> Result<PipelineResult, CliError> {
        run_pipeline(&self.deformation, &self.rank()?, &self.point).map_err(err("semigroup-engine"))
    }

    fn levels(&self) -> Result<LevelFamily, CliError> {
        build_levels(&self.deformation, &self.rank()?, &self.point).map_err(err("level-functions"))
    }

    fn system(&self, pr: &PipelineResult, one_sided: bool) -> Result<MulticoneSystem, CliError> {
        build_multicone(&self.deformation, pr, &BuildOptions { one_sided, ..BuildOptions::default() }).map_err(err("multicone-geometry"))
    }

    fn describe(&self) -> String {
        let rows: Vec<String> = self.deformation.a.iter().map(|r| format!("[{}]", r.iter().map(fmt_q).collect::<Vec<_>>().join(", "))).collect();
        let zeros: Vec<String> = self.point.zero_blocks.iter().map(|k| k.to_string()).collect();
        format!("A = [{}], zero blocks {{{}}}", rows.join(", "), zeros.join(", "))
    }
}

// ---------------------------------------------------------------- sections

fn classification_section(sc: &Scenario, r: &RankData) -> Section {
    let d = &sc.deformation;
    let kind = classify_action(d);
    let fixed = is_fixed_point(d, &sc.point);
    let sigma = sigma_of(&d.a);
    let mut text = vec![
        format!("ℓ = {}, m = {}, rank L = {}", d.ell, d.m, d.rank()),
        format!("action type: {kind:?}"),
        format!("σ_A = {}", fmt_q(&sigma)),
        format!("leading rows {:?}, leading columns {:?}", r.lead_rows, r.lead_cols),
        format!("base point is a fixed point: {fixed}"),
    ];
    let mut j = json!({
        "ell": d.ell, "m": d.m, "rank": d.rank(), "action_type": format!("{kind:?}"), "sigma": fmt_q(&sigma),
        "lead_rows": r.lead_rows, "lead_cols": r.lead_cols, "fixed_point": fixed,
    });
    if d.ell == 2 {
        match classify_two_manifolds(&d.a) {
            Ok(c) => {
                text.push(format!("two-manifold case: {}", c.label));
                j["two_manifold_case"] = json!(c.label);
            }
            Err(e) => {
                text.push(format!("two-manifold case: none ({e})"));
                j["two_manifold_case"] = Json::Null;
            }
        }
    }
    Section::new("classification", text, j)
}

fn derived_section(pr: &PipelineResult) -> Section {
    let dm = &pr.derived;
    let mut text = Vec::new();
    let mut latex = Vec::new();
    for (k, phi) in dm.phi.iter().enumerate() {
        text.push(format!("φ{} = {}", k + 1, phi.render_fraction()));
        latex.push(format!("\\varphi_{{{}}}(\\lambda) = {}", k + 1, latex_mono(phi)));
    }
    for (j, m) in &dm.phi_inv {
        text.push(format!("φ{j}⁻¹ = {}", m.render_fraction()));
        latex.push(format!("\\varphi_{{{j}}}^{{-1}} = {}", latex_mono(m)));
    }
    for (k, m) in &dm.psi {
        text.push(format!("ψ{k} = {}", m.render_fraction()));
        latex.push(format!("\\psi_{{{k}}} = {}", latex_mono(m)));
    }
    let j = json!({
        "phi": dm.phi.iter().map(|m| m.render_fraction()).collect::<Vec<_>>(),
        "phi_inv": dm.phi_inv.iter().map(|(j, m)| (j.to_string(), json!(m.render_fraction()))).collect::<Map<_, _>>(),
        "psi": dm.psi.iter().map(|(k, m)| (k.to_string(), json!(m.render_fraction()))).collect::<Map<_, _>>(),
        "psi_values": pr.psi_values.iter().map(|(k, v)| (k.to_string(), json!(v.render()))).collect::<Map<_, _>>(),
    });
    Section::new("phi_psi", text, j).with_latex(latex)
}

fn sets_section(pr: &PipelineResult) -> Section {
    let mut text = vec![format!("G = {}", render_set(&pr.g))];
    let mut latex = vec![format!("G = {}", latex_set(&pr.g))];
    for (j, s) in &pr.f0_stages {
        text.push(format!("F0,{j} = {}", render_set(s)));
        latex.push(format!("F^{{0,{j}}} = {}", latex_set(s)));
    }
    text.push(format!("F0 = {}", render_set(&pr.f0)));
    latex.push(format!("F^0 = {}", latex_set(&pr.f0)));
    for (i, (k, s)) in pr.f_stages.iter().enumerate() {
        text.push(format!("F{} (L_{k}) = {}", i + 1, render_set(s)));
        latex.push(format!("F^{{{}}} = {}", i + 1, latex_set(s)));
    }
    text.push(format!("Fq = {}", render_set(&pr.fq)));
    latex.push(format!("F^q = {}", latex_set(&pr.fq)));
    let j = json!({
        "G": set_to_json(&pr.g),
        "F0_stages": pr.f0_stages.iter().map(|(j, s)| json!({"action": j, "set": set_to_json(s)})).collect::<Vec<_>>(),
        "F0": set_to_json(&pr.f0),
        "F_stages": pr.f_stages.iter().map(|(k, s)| json!({"block": k, "set": set_to_json(s)})).collect::<Vec<_>>(),
        "Fq": set_to_json(&pr.fq),
    });
    Section::new("generators", text, j).with_latex(latex)
}

fn levels_section(sc: &Scenario, fam: &LevelFamily, name: &str) -> Section {
    let d = &sc.deformation;
    let strict: Vec<bool> = (1..=d.ell).map(|j| is_strict(fam, d, j)).collect();
    let mut text = Vec::new();
    let mut latex = Vec::new();
    for (j, e) in fam.rho_lambda.iter().enumerate() {
        text.push(format!("rho[{}] = {}", j + 1, e));
        latex.push(format!("\\rho_{{\\Lambda,{}}}(\\tau) = {}", j + 1, e.render_latex()));
    }
    for (j, s) in strict.iter().enumerate() {
        text.push(format!("mu[{}] strict: {s}", j + 1));
    }
    let mut js = fam.to_json();
    js["strict"] = json!(strict);
    Section::new(name, text, js).with_latex(latex)
}

fn system_section(name: &str, sys: &MulticoneSystem) -> Section {
    let lines = sys.render();
    Section::new(name, lines.clone(), sys.to_json()).with_latex(lines.iter().map(|l| latex_display(l)).collect())
}

fn expansion_sections(sc: &Scenario, fam: Option<&LevelFamily>) -> Result<Vec<Section>, CliError> {
    let d = &sc.deformation;
    let t = app_template(d).map_err(err("asymptotics"))?;
    let mut out = vec![Section::new("app_template", t.render(), t.to_json()).with_latex(t.render_latex())];
    if let Some(fam) = fam {
        let s = match remainder_forms(fam, d) {
            Some(forms) => {
                let text = render_remainder(&forms);
                Section::new("remainder", vec![format!("|f - App^<N| ≤ C·{text}")], json!({"exponent": text, "forms": forms.iter().map(|f| f.to_string()).collect::<Vec<_>>()}))
                    .with_latex(vec![format!("|f - \\mathrm{{App}}^{{<N}}| \\le C\\,{}", latex_display(&text))])
            }
            None => {
                let ones = vec![1u64; d.ell];
                let e = remainder_exponent(fam, d, &ones);
                Section::new("remainder", vec![format!("not a monomial in block norms; at N = (1,…,1): {e}")], json!({"exponent": Json::Null, "at_ones": e.to_string()}))
            }
        };
        out.push(s);
    }
    Ok(out)
}

// ---------------------------------------------------------------- commands

#[derive(Clone, Debug)]
pub struct AnalyzeOptions {
    pub generalized: bool,
    pub max_perms: usize,
    pub closure_degree: u64,
}

impl Default for AnalyzeOptions {
    fn default() -> Self {
        AnalyzeOptions { generalized: false, max_perms: DEFAULT_MAX_PERMS, closure_degree: DEFAULT_CLOSURE_DEGREE }
    }
}

pub fn cmd_analyze(sc: &Scenario, opts: &AnalyzeOptions) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("analysis of {}", sc.describe()));
    let r = sc.rank()?;
    doc.push(classification_section(sc, &r));
    let pr = sc.pipeline()?;
    doc.push(derived_section(&pr));
    doc.push(sets_section(&pr));
    let fam = sc.levels();
    match &fam {
        Ok(f) => doc.push(levels_section(sc, f, "levels")),
        Err(e) => doc.push(Section::unavailable("levels", e)),
    }
    if opts.generalized {
        match build_generalized_levels(&sc.deformation, &sc.point, opts.max_perms) {
            Ok((g, n)) => {
                let mut s = levels_section(sc, &g, "generalized_levels");
                s.text.insert(0, format!("{n} admissible orderings"));
                doc.push(s);
            }
            Err(e) => doc.push(Section::unavailable("generalized_levels", &CliError::new("level-functions", e))),
        }
    }
    match sc.system(&pr, false) {
        Ok(sys) => doc.push(system_section("multicone", &sys)),
        Err(e) => doc.push(Section::unavailable("multicone", &e)),
    }
    match closure(&pr, sc.deformation.m, opts.closure_degree) {
        Ok(c) => {
            let lines = c.render();
            doc.push(Section::new("closure", lines.clone(), c.to_json()).with_latex(lines.iter().map(|l| latex_display(l)).collect()));
        }
        Err(e) => doc.push(Section::unavailable("closure", &CliError::new("multicone-geometry", e))),
    }
    for s in expansion_sections(sc, fam.as_ref().ok())? {
        doc.push(s);
    }
    Ok(doc)
}

pub fn cmd_pipeline(sc: &Scenario) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("generator pipeline of {}", sc.describe()));
    let pr = sc.pipeline()?;
    doc.push(derived_section(&pr));
    doc.push(sets_section(&pr));
    Ok(doc)
}

pub fn cmd_levels(sc: &Scenario, generalized: bool, max_perms: usize) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("level functions of {}", sc.describe()));
    doc.push(levels_section(sc, &sc.levels()?, "levels"));
    if generalized {
        let (g, n) = build_generalized_levels(&sc.deformation, &sc.point, max_perms).map_err(err("level-functions"))?;
        let mut s = levels_section(sc, &g, "generalized_levels");
        s.text.insert(0, format!("{n} admissible orderings"));
        doc.push(s);
    }
    Ok(doc)
}

pub fn cmd_multicone(sc: &Scenario, one_sided: bool) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("multicone system of {}", sc.describe()));
    let pr = sc.pipeline()?;
    doc.push(system_section("multicone", &sc.system(&pr, one_sided)?));
    Ok(doc)
}

pub fn cmd_closure(sc: &Scenario, degree: u64, point: Option<&[f64]>, eps: f64) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("closed multicone of {}", sc.describe()));
    let pr = sc.pipeline()?;
    let c = closure(&pr, sc.deformation.m, degree).map_err(err("multicone-geometry"))?;
    let lines = c.render();
    doc.push(Section::new("closure", lines.clone(), c.to_json()).with_latex(lines.iter().map(|l| latex_display(l)).collect()));
    if let Some(pt) = point {
        if pt.len() != sc.deformation.m {
            return Err(CliError::parse(format!("point has {} block norms, expected {}", pt.len(), sc.deformation.m)));
        }
        let member = c.member(&ConePoint::from_norms(pt), eps);
        doc.push(Section::new("membership", vec![format!("point {pt:?} at ε = {eps}: {}", if member { "member" } else { "not a member" })], json!({"point": pt, "eps": eps, "member": member})));
    }
    Ok(doc)
}

pub fn cmd_project(sc: &Scenario, block: usize) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("projection of {} along block {block}", sc.describe()));
    let pr = sc.pipeline()?;
    let sys = sc.system(&pr, true)?;
    doc.push(system_section("system", &sys));
    let p = project(&sys, block, sc.point.is_zero(block)).map_err(err("multicone-geometry"))?;
    doc.push(system_section("projected", &p));
    Ok(doc)
}

pub fn cmd_restrict(sc: &Scenario, beta: &[Q]) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("restriction of {} by the row ({})", sc.describe(), beta.iter().map(fmt_q).collect::<Vec<_>>().join(", ")));
    let v = check_restriction(&sc.deformation, &sc.point, beta).map_err(err("restriction-analyzer"))?;
    let mut text = vec![format!("case: {:?}", v.case), format!("condition {}", if v.holds { "satisfied" } else { "not satisfied" })];
    for (k, b) in &v.b_values {
        text.push(format!("b{k} = {}", fmt_q(b)));
    }
    if let Some(nn) = v.nonneg_combination {
        text.push(format!("β is a non-negative combination of the rows: {nn}"));
    }
    for (p, c) in &v.witnesses {
        text.push(format!("{} ∉ 𝒢_B: {}", p.render(), c.describe()));
    }
    text.extend(v.notes.iter().cloned());
    doc.push(Section::new("verdict", text, v.to_json()));
    Ok(doc)
}

pub fn cmd_probe(sc: &Scenario, z: &str, samples: usize, seed: u64) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("normal-cone probe of {{{z}}} for {}", sc.describe()));
    let dim = Layout::of(&sc.deformation).ncoords();
    let zs = ZSet::parse(z, dim).map_err(CliError::parse)?;
    let pr = sc.pipeline()?;
    let sys = sc.system(&pr, false)?;
    let schedule = [0.1, 0.01];
    let v = normal_cone_probe(&sys, &zs, &schedule, &schedule, samples, seed);
    let (text, j) = match &v {
        ProbeVerdict::InCone => ("Z meets every sampled multicone: in the normal cone".to_string(), json!({"verdict": "in_cone"})),
        ProbeVerdict::NotInCone { eps, radius } => (format!("no point of Z in the multicone at ε = {eps}, radius {radius}: not in the normal cone"), json!({"verdict": "not_in_cone", "eps": eps, "radius": radius})),
        ProbeVerdict::Inconclusive => ("inconclusive".to_string(), json!({"verdict": "inconclusive"})),
    };
    let mut j = j;
    j["samples"] = json!(samples);
    j["seed"] = json!(seed);
    doc.push(Section::new("probe", vec![text, format!("samples {samples}, seed {seed}")], j));
    Ok(doc)
}

pub fn cmd_expand(sc: &Scenario, n: Option<&[u64]>) -> Result<Doc, CliError> {
    let mut doc = Doc::new(format!("multi-asymptotic expansion for {}", sc.describe()));
    let fam = sc.levels().ok();
    for s in expansion_sections(sc, fam.as_ref())? {
        doc.push(s);
    }
    if let Some(n) = n {
        let d = &sc.deformation;
        if n.len() != d.ell {
            return Err(CliError::parse(format!("N has {} entries, expected ℓ = {}", n.len(), d.ell)));
        }
        let mut text = Vec::new();
        let mut js = Vec::new();
        for j in nonempty_subsets(d.ell).map_err(err("asymptotics"))? {
            let is = index_set(d, &j, n);
            let width = Layout::of(d).ncoords();
            let members: Vec<String> = is.members.iter().map(|a| format!("({})", (0..width).map(|i| a.get(i).copied().unwrap_or(0).to_string()).collect::<Vec<_>>().join(","))).collect();
            text.push(format!("A_{{{}}}(N) = {{{}}}", render_j(&j), members.join(", ")));
            js.push(json!({"J": j, "members": is.members}));
        }
        doc.push(Section::new("index_sets", text, json!({"N": n, "sets": js})));
    }
    Ok(doc)
}

pub fn cmd_map_check(source: &DeformationData, target: &DeformationData, components: &[&str]) -> Result<Doc, CliError> {
    let comps: Vec<Poly> = components.iter().map(|c| Poly::parse(c).map_err(CliError::parse)).collect::<Result<_, _>>()?;
    let mut doc = Doc::new("induced map check");
    let spec = PolyMapSpec { source: source.clone(), target: target.clone(), components: comps };
    match check_map(&spec) {
        MapCheck::Ok(t) => {
            let rendered: Vec<String> = t.iter().map(|p| p.render()).collect();
            doc.push(Section::new("map", vec![format!("condition holds; T_χf = ({})", rendered.join(", "))], json!({"ok": true, "T": rendered})));
        }
        MapCheck::Fail(f) => {
            doc.ok = false;
            doc.push(Section::new("map", vec![format!("condition fails: {}", f.reason)], json!({"ok": false, "component": f.component, "reason": f.reason})));
        }
    }
    Ok(doc)
}

pub fn cmd_classify2(a: &[Vec<Q>]) -> Result<Doc, CliError> {
    let rep = classify_two_manifolds(&a.to_vec()).map_err(err("asymptotics"))?;
    let mut doc = Doc::new(format!("two-manifold classification: {}", rep.label));
    let mut text = vec![format!("case {}", rep.label)];
    for (k, v) in &rep.parameters {
        text.push(format!("{k} = {}", fmt_q(v)));
    }
    text.push(format!("normalized A = {:?}", rep.normalized.iter().map(|r| r.iter().map(fmt_q).collect::<Vec<_>>()).collect::<Vec<_>>()));
    doc.push(Section::new("case", text, rep.to_json()));
    doc.push(Section::new("multicone", rep.system.clone(), json!(rep.system)).with_latex(rep.system.iter().map(|l| latex_display(l)).collect()));
    let mut cons = Vec::new();
    for (j, c) in &rep.constraints {
        cons.push(format!("A_{{{}}}: {}", render_j(j), c.join(", ")));
    }
    doc.push(Section::new("index_sets", cons, json!(rep.constraints.iter().map(|(j, c)| json!({"J": j, "constraints": c})).collect::<Vec<_>>())));
    doc.push(Section::new("remainder", vec![rep.remainder_text.clone()], json!(rep.remainder_text)).with_latex(vec![latex_display(&rep.remainder_text)]));
    Ok(doc)
}

pub fn cmd_verify(sc: &Scenario, function: &str, n: &[u64], eps: f64, samples: usize, seed: u64) -> Result<Doc, CliError> {
    let d = &sc.deformation;
    if n.len() != d.ell {
        return Err(CliError::parse(format!("N has {} entries, expected ℓ = {}", n.len(), d.ell)));
    }
    let f = TestFunction::parse(function).map_err(CliError::parse)?.to_poly(Layout::of(d).ncoords());
    let fam = sc.levels()?;
    let pr = sc.pipeline()?;
    let sys = sc.system(&pr, false)?;
    let rep = verify_estimate(d, &fam, &f, n, &sys, eps, samples, seed).map_err(err("asymptotics"))?;
    let mut doc = Doc::new(format!("remainder estimate for f = {function}, N = {n:?} on {}", sc.describe()));
    doc.ok = rep.pass;
    let text = vec![
        format!("{}", if rep.pass { "PASS" } else { "FAIL" }),
        format!("C(ε = {eps}) = {:.6e}, C(ε/2) = {:.6e}, growth {:.4}", rep.c_fit, rep.c_half, rep.growth),
        format!("f - App vanishes identically: {}; exact dominance: {:?}", rep.exact_zero, rep.dominated),
        format!("samples {}, seed {seed}", rep.samples),
    ];
    let mut j = rep.to_json();
    j["seed"] = json!(seed);
    j["eps"] = json!(eps);
    doc.push(Section::new("estimate", text, j));
    Ok(doc)
}

pub fn cmd_fixtures(filter: Option<&str>) -> (Doc, Vec<FixtureOutcome>) {
    let results = run_fixtures(filter);
    let mut doc = Doc::new(match filter {
        Some(f) => format!("fixtures matching {f:?}"),
        None => "all fixtures".into(),
    });
    let failed = results.iter().filter(|r| !r.pass).count();
    doc.ok = failed == 0;
    let mut text: Vec<String> = results.iter().map(|r| format!("{} [{}] {}: {}", if r.pass { "PASS" } else { "FAIL" }, r.group, r.name, r.detail)).collect();
    if results.is_empty() {
        text.push("warning: no fixtures match the filter".into());
    } else {
        text.push(format!("{} passed, {failed} failed", results.len() - failed));
    }
    // timings are left out so that repeated runs print identical bytes
    let j = json!({
        "results": results.iter().map(|r| json!({"name": r.name, "group": r.group, "pass": r.pass, "detail": r.detail})).collect::<Vec<_>>(),
        "passed": results.len() - failed,
        "failed": failed,
    });
    doc.push(Section::new("fixtures", text, j));
    (doc, results)
}
