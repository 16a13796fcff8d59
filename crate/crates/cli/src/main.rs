use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use swigc_core::dsep::{d_separated, open_paths, DSepQuery};
use swigc_core::dsl::{self, DslError, GRAMMAR_VERSION};
use swigc_core::estimand::{compile, CompiledEstimand, StrategyTag};
use swigc_core::graph::{CausalGraph, InterventionContext, Value, VarName};
use swigc_core::identify::{render_report, report_json, Identifier};
use swigc_core::oracle::{
    check_soundness, enumerate, random_scm, OracleError, ScmSpec, SoundnessReport, DEFAULT_ROW_CAP,
};
use swigc_core::render::{to_dot, to_tikz, Annotations, RenderStyle};
use swigc_core::{split, Rational, StudySpec, Swig};

const EXIT_INPUT: u8 = 2;
const EXIT_CONNECTED: u8 = 3;
const EXIT_PARTIAL: u8 = 4;
const EXIT_NOT_IDENTIFIABLE: u8 = 5;
const EXIT_MISMATCH: u8 = 6;
const EXIT_CAP: u8 = 7;

#[derive(Parser)]
#[command(name = "swigc", about = "Estimand compiler for trial specs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and check a spec.
    Validate(Common),
    /// Print the SWIG for a world.
    Swig {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
    },
    /// Test a d-separation statement on the SWIG (exit 3 when connected).
    Dsep {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        /// Node label; repeat for a set.
        #[arg(long, required = true)]
        x: Vec<String>,
        #[arg(long, required = true)]
        y: Vec<String>,
        #[arg(long)]
        z: Vec<String>,
    },
    /// Derive an observed-data formula for the estimand.
    Identify {
        #[command(flatten)]
        common: Common,
        /// Plain-text report (the default).
        #[arg(long, conflicts_with = "json")]
        text: bool,
        /// Print only the estimand.
        #[arg(long)]
        print_estimand: bool,
    },
    /// Check the identified formula against enumerated ground truth.
    Simulate(SimulateArgs),
    /// Emit TikZ or DOT markup.
    Render {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        world: WorldArgs,
        #[arg(long, value_enum, default_value_t = Format::Tikz)]
        format: Format,
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

#[derive(Args)]
struct Common {
    spec: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct WorldArgs {
    /// Interventions such as `a=1,m=0`; a bare symbol keeps the level
    /// symbolic. Defaults to the estimand's split set.
    #[arg(long)]
    world: Option<String>,
    /// Use the DAG without splitting.
    #[arg(long, conflicts_with = "world")]
    dag: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Number of random models, from `--seed` upward. Without it the
    /// spec's own scm block is used when present.
    #[arg(long)]
    battery: Option<u64>,
    #[arg(long, value_enum, default_value_t = Report::Text)]
    report: Report,
    /// Write the God's Table of the first model as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_ROW_CAP)]
    max_rows: u128,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Tikz,
    Dot,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Report {
    Text,
    Json,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

type Outcome = Result<u8, Failure>;

fn main() -> ExitCode {
    // die quietly on a closed pipe like other filters
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let version = format!("{} (grammar {GRAMMAR_VERSION})", env!("CARGO_PKG_VERSION"));
    let version: &'static str = Box::leak(version.into_boxed_str());
    let matches = Cli::command().version(version).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Validate(c) => validate(&c),
        Command::Swig { common, world } => swig(&common, &world),
        Command::Dsep {
            common,
            world,
            x,
            y,
            z,
        } => dsep(&common, &world, &x, &y, &z),
        Command::Identify {
            common,
            print_estimand,
            ..
        } => identify(&common, print_estimand),
        Command::Simulate(args) => simulate(&args),
        Command::Render {
            common,
            world,
            format,
            output,
        } => render(&common, &world, format, output.as_deref()),
    }
}

fn load(path: &Path) -> Result<StudySpec, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_INPUT, format!("{}: {e}", path.display())))?;
    dsl::parse(&text).map_err(|e| {
        let inner = match &e {
            DslError::Parse(p) => p.to_string(),
            DslError::Semantic(s) => s.to_string(),
        };
        Failure::new(EXIT_INPUT, format!("{}:{inner}", path.display()))
    })
}

fn compiled(study: &StudySpec) -> CompiledEstimand {
    compile(study).expect("parsed studies compile")
}

fn validate(c: &Common) -> Outcome {
    let study = match load(&c.spec) {
        Ok(s) => s,
        Err(f) => {
            if c.json {
                println!("{}", json!({ "valid": false, "error": f.message }));
            }
            return Err(f);
        }
    };
    let g = study.graph();
    if c.json {
        println!(
            "{}",
            json!({
                "valid": true,
                "study": study.name(),
                "nodes": g.len(),
                "edges": g.edge_count(),
                "scm": study.scm().is_some(),
            })
        );
    } else {
        println!(
            "ok: study {} ({} nodes, {} edges{})",
            study.name(),
            g.len(),
            g.edge_count(),
            if study.scm().is_some() { ", scm" } else { "" }
        );
    }
    Ok(0)
}

/// Resolve `a=1,m=0` against study variables, treatment first, then the
/// rest by name.
fn parse_world(
    spec: &str,
    c: &CompiledEstimand,
    study: &StudySpec,
) -> Result<InterventionContext, Failure> {
    let bad = |m: String| Failure::new(EXIT_INPUT, format!("--world: {m}"));
    let mut items: Vec<(VarName, Value)> = Vec::new();
    for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (key, value) = match item.split_once('=') {
            Some((k, v)) => (k.trim(), Some(v.trim())),
            None => (item, None),
        };
        let var = c
            .graph
            .nodes()
            .map(|(_, n)| n.var())
            .find(|v| v.as_str() == key || v.level_symbol() == key)
            .ok_or_else(|| bad(format!("unknown variable `{key}`")))?
            .clone();
        let value = match value {
            None => Value::Symbolic(var.level_symbol()),
            Some(v) => Value::Int(
                v.parse()
                    .map_err(|_| bad(format!("`{v}` is not an integer")))?,
            ),
        };
        if items.iter().any(|(v, _)| *v == var) {
            return Err(bad(format!("`{key}` given twice")));
        }
        items.push((var, value));
    }
    let treatment = study.treatment();
    items.sort_by(|a, b| (a.0 != *treatment, &a.0).cmp(&(b.0 != *treatment, &b.0)));
    InterventionContext::from_pairs(items).map_err(|e| bad(e.to_string()))
}

enum View {
    Dag(CausalGraph),
    Swig(Swig),
}

impl View {
    fn graph(&self) -> &CausalGraph {
        match self {
            View::Dag(g) => g,
            View::Swig(s) => s.graph(),
        }
    }
}

fn view(study: &StudySpec, w: &WorldArgs) -> Result<(View, CompiledEstimand), Failure> {
    let c = compiled(study);
    if w.dag {
        return Ok((View::Dag(c.graph.clone()), c));
    }
    let world = match &w.world {
        Some(s) => parse_world(s, &c, study)?,
        None => c.symbolic_interventions(),
    };
    let s =
        split(&c.graph, &world).map_err(|e| Failure::new(EXIT_INPUT, format!("--world: {e}")))?;
    Ok((View::Swig(s), c))
}

fn swig(c: &Common, w: &WorldArgs) -> Outcome {
    let study = load(&c.spec)?;
    let (v, _) = view(&study, w)?;
    if c.json {
        match &v {
            View::Dag(g) => print!("{}", g.to_json()),
            View::Swig(s) => print!("{}", s.to_json()),
        }
        return Ok(0);
    }
    if let View::Swig(s) = &v {
        println!("interventions: {}", s.interventions().render_items());
    }
    let g = v.graph();
    println!("nodes:");
    for (_, n) in g.nodes() {
        println!("  {}", n.label());
    }
    println!("edges:");
    for &(a, b) in g.edges() {
        println!("  {} -> {}", g.label(a), g.label(b));
    }
    Ok(0)
}

fn dsep(c: &Common, w: &WorldArgs, x: &[String], y: &[String], z: &[String]) -> Outcome {
    let study = load(&c.spec)?;
    let (v, _) = view(&study, w)?;
    let g = v.graph();
    let q =
        DSepQuery::from_labels(g, x, y, z).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    let separated = d_separated(g, &q).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?;
    let witnesses = if separated {
        Vec::new()
    } else {
        open_paths(g, &q, 5).map_err(|e| Failure::new(EXIT_INPUT, e.to_string()))?
    };
    if c.json {
        let paths: Vec<_> = witnesses
            .iter()
            .map(|p| {
                let labeled = p.to_labeled(g);
                json!({
                    "path": labeled.to_string(),
                    "nodes": labeled.nodes,
                    "colliders_opened": p.colliders_opened.iter().map(|&id| g.label(id)).collect::<Vec<_>>(),
                    "verdict": p.verdict,
                })
            })
            .collect();
        println!(
            "{}",
            json!({
                "query": q.render(g),
                "separated": separated,
                "witnesses": paths,
            })
        );
    } else {
        println!(
            "{}: {}",
            q.render(g),
            if separated { "separated" } else { "connected" }
        );
        for p in &witnesses {
            println!("  open path {}", p.render(g));
        }
    }
    Ok(if separated { 0 } else { EXIT_CONNECTED })
}

fn identify(c: &Common, print_estimand: bool) -> Outcome {
    let study = load(&c.spec)?;
    let id = Identifier::new(&study);
    if print_estimand {
        let contrast = &id.compiled().contrast;
        if c.json {
            println!(
                "{}",
                json!({ "estimand": contrast.to_string(), "strategy": contrast.name })
            );
        } else {
            println!("{contrast}");
        }
        return Ok(0);
    }
    let r = id.identify_estimand();
    if c.json {
        println!(
            "{}",
            serde_json::to_string_pretty(&report_json(&r)).expect("JSON")
        );
    } else {
        print!("{}", render_report(&r));
    }
    Ok(match r.verdict() {
        "not_identifiable" => EXIT_NOT_IDENTIFIABLE,
        "partially_identified" => EXIT_PARTIAL,
        _ => 0,
    })
}

fn oracle_failure(e: OracleError) -> Failure {
    let code = match e {
        OracleError::SupportTooLarge { .. } => EXIT_CAP,
        _ => 1,
    };
    Failure::new(code, format!("oracle: {e}"))
}

fn report_value(r: &SoundnessReport<Rational>) -> serde_json::Value {
    json!({
        "seed": r.seed,
        "verdict": r.verdict,
        "identified": r.identified,
        "true_value": r.true_value.to_string(),
        "formula_value": r.formula_value.as_ref().map(|v| v.to_string()),
        "naive_value": r.naive_value.to_string(),
        "gap": r.gap.to_string(),
        "engine_bug": r.is_engine_bug(),
    })
}

fn simulate(args: &SimulateArgs) -> Outcome {
    let study = load(&args.common.spec)?;
    if let Some(n) = args.jobs {
        rayon_pool(n)?;
    }
    let models: Vec<(Option<u64>, ScmSpec)> = match (args.battery, study.scm()) {
        (None, Some(scm)) => vec![(None, scm.clone())],
        (battery, _) => (args.seed..args.seed + battery.unwrap_or(1).max(1))
            .map(|s| (Some(s), random_scm(study.graph(), s, study.supports())))
            .collect(),
    };
    let mut reports = Vec::new();
    for (seed, scm) in &models {
        let r = check_soundness::<Rational>(&study, scm, args.max_rows).map_err(oracle_failure)?;
        reports.push(SoundnessReport { seed: *seed, ..r });
    }
    if let Some(path) = &args.csv {
        let c = compiled(&study);
        let mut worlds = Vec::new();
        for m in [&c.contrast.left, &c.contrast.right] {
            worlds.push(m.context.clone());
            if let Some(s) = &m.stratum {
                worlds.push(s.context.clone());
            }
        }
        let t = enumerate::<Rational>(&c.graph, &models[0].1, &worlds, args.max_rows)
            .map_err(oracle_failure)?;
        fs::write(path, t.to_csv())
            .map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?;
    }
    let bugs = reports.iter().filter(|r| r.is_engine_bug()).count();
    if args.report == Report::Json || args.common.json {
        let value = json!({
            "study": study.name(),
            "models": reports.len(),
            "mismatches": bugs,
            "reports": reports.iter().map(report_value).collect::<Vec<_>>(),
        });
        println!("{}", serde_json::to_string_pretty(&value).expect("JSON"));
    } else {
        for r in &reports {
            let model = r
                .seed
                .map(|s| format!("seed {s}"))
                .unwrap_or_else(|| "spec scm".into());
            let formula = r
                .formula_value
                .as_ref()
                .map(|v| v.to_string())
                .unwrap_or_else(|| "-".into());
            println!(
                "{model}: {} truth={} formula={formula} naive={} gap={}",
                r.verdict, r.true_value, r.naive_value, r.gap
            );
        }
        println!("{} model(s), {bugs} mismatch(es)", reports.len());
    }
    Ok(if bugs > 0 { EXIT_MISMATCH } else { 0 })
}

fn rayon_pool(n: usize) -> Result<(), Failure> {
    swigc_core::oracle::set_jobs(n).map_err(|e| Failure::new(1, format!("--jobs: {e}")))
}

/// Box the principal stratum when the rendered world is the one it lives in.
fn stratum_notes(study: &StudySpec, g: &CausalGraph) -> Annotations {
    for (ie, tag) in study.strategies() {
        if let StrategyTag::PrincipalStratum { under, equals, .. } = tag {
            let Some(id) = g.random(ie) else { continue };
            let ctx = g.node(id).context().expect("random node");
            let treatment = study.treatment();
            if ctx.get(treatment) == Some(under) {
                return Annotations::stratum(g.label(id), equals);
            }
        }
    }
    Annotations::default()
}

fn render(c: &Common, w: &WorldArgs, format: Format, output: Option<&Path>) -> Outcome {
    let study = load(&c.spec)?;
    let (v, _) = view(&study, w)?;
    let g = v.graph();
    let notes = stratum_notes(&study, g);
    let style = RenderStyle::default();
    let text = match format {
        Format::Tikz => to_tikz(g, &style, &notes),
        Format::Dot => to_dot(g, &style, &notes),
    };
    let text = if c.json {
        format!(
            "{}\n",
            json!({ "format": match format { Format::Tikz => "tikz", Format::Dot => "dot" }, "markup": text })
        )
    } else {
        text
    };
    match output {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::new(1, format!("{}: {e}", path.display())))?,
        None => print!("{text}"),
    }
    Ok(0)
}
