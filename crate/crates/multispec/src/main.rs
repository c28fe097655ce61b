use clap::{Args, Parser, Subcommand};
use multispec::deformation::DeformationData;
use multispec::fixtures::DEFAULT_SEED;
use multispec::multicone::DEFAULT_CLOSURE_DEGREE;
use multispec::report::{self, AnalyzeOptions, CliError, Doc, Format, Scenario, DEFAULT_EPS, DEFAULT_MAX_PERMS, DEFAULT_SAMPLES, FORMAT_ENV};
use std::io::Read;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "multispec", version, about = "Generator semigroups, multicones, level functions and asymptotic index sets of multi-normal deformations")]
struct Cli {
    /// Output format; the environment variable only changes the default.
    #[arg(long, global = true, env = FORMAT_ENV, default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

/// Where the deformation comes from: a JSON scenario file or inline rows.
#[derive(Args, Clone)]
struct Input {
    /// Scenario JSON ({"A": [[..]], "blocks": [..], "zeros": [..]}); "-" reads stdin.
    #[arg(long, short = 'm', conflicts_with = "rows")]
    matrix: Option<String>,
    /// Inline action matrix, rows separated by ';' ("1,0,1; 0,1,1").
    #[arg(long)]
    rows: Option<String>,
    /// Blocks where ξ vanishes, e.g. "1,2" (overrides the scenario's "zeros").
    #[arg(long)]
    zeros: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Full report: classification, φ/ψ, generator stages, levels, multicone, closure, App template.
    Analyze {
        #[command(flatten)]
        input: Input,
        /// Also build the generalized (strict) level family.
        #[arg(long)]
        generalized: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_PERMS)]
        max_perms: usize,
        #[arg(long, default_value_t = DEFAULT_CLOSURE_DEGREE)]
        closure_degree: u64,
    },
    /// Generator sets G, F⁰ stages, F stages and F^q.
    Pipeline {
        #[command(flatten)]
        input: Input,
    },
    /// Level functions ρ_Λ and strictness.
    Levels {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        generalized: bool,
        #[arg(long, default_value_t = DEFAULT_MAX_PERMS)]
        max_perms: usize,
    },
    /// Multicone inequality system.
    Multicone {
        #[command(flatten)]
        input: Input,
        /// Replace two-sided inequalities by their upper halves.
        #[arg(long)]
        one_sided: bool,
    },
    /// Closed multicone system, optionally testing a point given by block norms.
    Closure {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_CLOSURE_DEGREE)]
        degree: u64,
        /// Block norms "0,0.2,0".
        #[arg(long)]
        point: Option<String>,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
    },
    /// Eliminate one block from the (one-sided) multicone system.
    Project {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        block: usize,
    },
    /// Does the restriction condition hold when the row β is added?
    Restrict {
        #[command(flatten)]
        input: Input,
        /// The added row, e.g. "1,1,1" (rationals allowed).
        #[arg(long)]
        beta: String,
    },
    /// Sampling oracle: does Z = {equations} belong to the normal cone?
    Probe {
        #[command(flatten)]
        input: Input,
        /// Equations over coordinates x1..xn, e.g. "x3^2 = x1*x2".
        #[arg(long)]
        z: String,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// App^{<N} template, remainder exponent and optionally the index sets A_J(N).
    Expand {
        #[command(flatten)]
        input: Input,
        /// N as "n1,n2,...".
        #[arg(long = "N")]
        n: Option<String>,
    },
    /// Check that a polynomial map respects the gradings and print the induced map.
    MapCheck {
        /// Source action matrix rows.
        #[arg(long)]
        source: String,
        /// Target action matrix rows.
        #[arg(long)]
        target: String,
        /// Components separated by ';', in the source coordinates x1..xn.
        #[arg(long)]
        map: String,
    },
    /// Place a 2-row action matrix in the two-manifold catalog.
    Classify2 {
        /// Rows, e.g. "1,1/2; 1/3,1".
        #[arg(long)]
        rows: String,
    },
    /// Numerical check of the remainder estimate on multicone samples.
    Verify {
        #[command(flatten)]
        input: Input,
        /// Test function: a polynomial in z1..zn or "exp<d>".
        #[arg(long)]
        function: String,
        #[arg(long = "N")]
        n: String,
        #[arg(long, default_value_t = DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run the built-in regression corpus; the filter matches group or fixture names.
    Fixtures { filter: Option<String> },
}

fn scenario(input: &Input) -> Result<Scenario, CliError> {
    let zeros = input.zeros.as_deref().map(report::parse_index_list).transpose()?;
    let sc = match (&input.matrix, &input.rows) {
        (Some(path), _) => {
            let text = if path == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s).map_err(|e| CliError::parse(format!("cannot read stdin: {e}")))?;
                s
            } else {
                std::fs::read_to_string(path).map_err(|e| CliError::parse(format!("cannot read {path}: {e}")))?
            };
            Scenario::from_json_text(&text)?
        }
        (None, Some(rows)) => Scenario::from_rows(rows, &[])?,
        (None, None) => return Err(CliError::parse("give the deformation with --matrix FILE or --rows \"...\"")),
    };
    sc.with_zeros(zeros.as_deref())
}

fn deformation(rows: &str) -> Result<DeformationData, CliError> {
    DeformationData::new(report::parse_rows(rows)?).map_err(|e| CliError::new("deformation-model", e))
}

fn run(cmd: Command) -> Result<Doc, CliError> {
    match cmd {
        Command::Analyze { input, generalized, max_perms, closure_degree } => report::cmd_analyze(&scenario(&input)?, &AnalyzeOptions { generalized, max_perms, closure_degree }),
        Command::Pipeline { input } => report::cmd_pipeline(&scenario(&input)?),
        Command::Levels { input, generalized, max_perms } => report::cmd_levels(&scenario(&input)?, generalized, max_perms),
        Command::Multicone { input, one_sided } => report::cmd_multicone(&scenario(&input)?, one_sided),
        Command::Closure { input, degree, point, eps } => {
            let pt = point
                .map(|p| p.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| CliError::parse(format!("bad block norm {x:?}")))).collect::<Result<Vec<_>, _>>())
                .transpose()?;
            report::cmd_closure(&scenario(&input)?, degree, pt.as_deref(), eps)
        }
        Command::Project { input, block } => report::cmd_project(&scenario(&input)?, block),
        Command::Restrict { input, beta } => report::cmd_restrict(&scenario(&input)?, &report::parse_q_list(&beta)?),
        Command::Probe { input, z, samples, seed } => report::cmd_probe(&scenario(&input)?, &z, samples, seed),
        Command::Expand { input, n } => {
            let n = n.as_deref().map(report::parse_n).transpose()?;
            report::cmd_expand(&scenario(&input)?, n.as_deref())
        }
        Command::MapCheck { source, target, map } => {
            let comps: Vec<&str> = map.split(';').map(str::trim).filter(|c| !c.is_empty()).collect();
            report::cmd_map_check(&deformation(&source)?, &deformation(&target)?, &comps)
        }
        Command::Classify2 { rows } => report::cmd_classify2(&report::parse_rows(&rows)?),
        Command::Verify { input, function, n, eps, samples, seed } => report::cmd_verify(&scenario(&input)?, &function, &report::parse_n(&n)?, eps, samples, seed),
        Command::Fixtures { filter } => {
            let (doc, results) = report::cmd_fixtures(filter.as_deref());
            if results.is_empty() {
                eprintln!("warning: no fixtures match {:?}", filter.unwrap_or_default());
            }
            Ok(doc)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.format;
    match run(cli.command) {
        Ok(doc) => {
            print!("{}", doc.render(format));
            if doc.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&e.to_json()).expect("json")),
                _ => eprintln!("{e}"),
            }
            ExitCode::from(e.exit as u8)
        }
    }
}
