use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ideal_lab::construction::{build_divergent_perm, build_divergent_subseq, in_am, AmVerdict, Construction};
use ideal_lab::convergence::{CauchyVerdict, ConvergenceVerdict};
use ideal_lab::experiments::{
    cc1_demo, e_measure_experiment, lk3_experiment, property_g_experiment, tw3_experiment, ExperimentConfig,
    ExperimentReport,
};
use ideal_lab::families::{named_sequence, FunctionFamily};
use ideal_lab::selection::write_selection;
use ideal_lab::sequence::read_csv_sequence;
use ideal_lab::{i_cauchy, i_converges, EpsGrid, Error, Horizon, IdealSpec, MetricKind, PointSeq, Selection};
use serde::{Deserialize, Serialize};

const EXIT_USAGE: u8 = 1;
const EXIT_UNDECIDED: u8 = 2;
const EXIT_NOT_CONSTRUCTIBLE: u8 = 3;

#[derive(Parser)]
#[command(name = "ideal-lab", version, about = "Ideal convergence of sequences, subsequences and rearrangements")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide I-convergence of one sequence with both detectors.
    Analyze(AnalyzeArgs),
    /// Build an I-divergent subsequence (or rearrangement with --perm).
    Construct(ConstructArgs),
    /// Run a seeded experiment and write report.json, tallies.csv and manifest.json.
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Real,
    Discrete,
}

#[derive(Args)]
struct SequenceArgs {
    /// harmonic, alternating, square-indicator, family@x, or csv:<path>.
    #[arg(long = "seq")]
    seq: String,
    /// Metric for CSV input with one value per row.
    #[arg(long, value_enum, default_value = "real")]
    metric: Metric,
    /// Values per CSV row (Euclidean dimension); overrides --metric when above 1.
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value = "density")]
    ideal: String,
    #[arg(long = "eps-min", default_value_t = 1.0 / 128.0)]
    eps_min: f64,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[command(flatten)]
    seq: SequenceArgs,
    #[arg(long, default_value_t = 1 << 16)]
    horizon: usize,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ConstructArgs {
    #[command(flatten)]
    seq: SequenceArgs,
    #[arg(long, default_value_t = 1 << 20)]
    horizon: usize,
    /// Minimum length of the constructed selection.
    #[arg(long, default_value_t = 1 << 16)]
    target: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Build an injective rearrangement instead of a subsequence.
    #[arg(long)]
    perm: bool,
    #[arg(long = "out-dir", default_value = "ideal-lab-out")]
    out_dir: PathBuf,
}

#[derive(Clone, Copy, ValueEnum, Serialize, Deserialize, PartialEq, Eq, Debug)]
#[serde(rename_all = "lowercase")]
enum Kind {
    Lk3,
    Tw3,
    Cc1,
    Propg,
    Emeasure,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(value_enum)]
    kind: Kind,
    /// JSON or TOML config, or a manifest.json from an earlier run.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    family: Option<String>,
    #[arg(long = "seq")]
    seq: Option<String>,
    #[arg(long)]
    ideal: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    points: Option<usize>,
    #[arg(long = "eps-min")]
    eps_min: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long = "out-dir", default_value = "ideal-lab-out")]
    out_dir: PathBuf,
}

/// Everything needed to repeat a run.
#[derive(Serialize, Deserialize)]
struct RunManifest {
    command: Vec<String>,
    experiment: Option<Kind>,
    config: serde_json::Value,
    seed: u64,
    workers: usize,
    artifact_version: String,
    rng: String,
    outputs: Vec<PathBuf>,
    elapsed_ms: u128,
}

/// Errors carry their exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<Error>() {
            Some(Error::NotConstructible(_) | Error::Refused(_)) => EXIT_NOT_CONSTRUCTIBLE,
            _ => EXIT_USAGE,
        };
        Failure { code, error }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        anyhow::Error::new(e).into()
    }
}

fn metric_of(args: &SequenceArgs) -> MetricKind {
    match (args.dim, args.metric) {
        (d, _) if d > 1 => MetricKind::Euclid(d),
        (_, Metric::Discrete) => MetricKind::Discrete,
        (_, Metric::Real) => MetricKind::RealAbs,
    }
}

fn load_sequence(spec: &str, metric: MetricKind, horizon: usize) -> anyhow::Result<PointSeq<f64>> {
    if let Some(path) = spec.strip_prefix("csv:") {
        let file = fs::File::open(path).with_context(|| format!("opening {path}"))?;
        return Ok(read_csv_sequence(file, metric)?);
    }
    Ok(named_sequence(spec, Horizon::new(horizon)?)?)
}

fn describe(v: &ConvergenceVerdict<f64>) -> String {
    match v {
        ConvergenceVerdict::Convergent { limit, .. } => format!("Convergent({})", fmt_point(limit)),
        ConvergenceVerdict::Divergent { .. } => "Divergent".into(),
        ConvergenceVerdict::Undecided { .. } => "Undecided".into(),
    }
}

fn fmt_point(p: &[f64]) -> String {
    let parts: Vec<String> = p.iter().map(|v| format!("{v}")).collect();
    parts.join(", ")
}

fn analyze(args: &AnalyzeArgs) -> Result<u8, Failure> {
    let ideal = IdealSpec::from_name(&args.seq.ideal)?;
    let grid = EpsGrid::<f64>::dyadic_down_to(args.seq.eps_min)?;
    let x = load_sequence(&args.seq.seq, metric_of(&args.seq), args.horizon)?;
    let verdict = i_converges(&x, &ideal, &grid);
    let cauchy = i_cauchy(&x, &ideal, &grid);

    // the ε-table follows the limit when there is one, else the first candidate
    let table = match &verdict {
        ConvergenceVerdict::Convergent { evidence, .. } => evidence.clone(),
        ConvergenceVerdict::Divergent { candidates } | ConvergenceVerdict::Undecided { candidates } => {
            candidates.first().map(|c| c.per_eps.clone()).unwrap_or_default()
        }
    };
    if args.json {
        let out = serde_json::json!({
            "sequence": args.seq.seq,
            "horizon": x.len(),
            "ideal": ideal.name(),
            "verdict": describe(&verdict),
            "limit": verdict.limit(),
            "cauchy": cauchy,
            "eps_table": table,
        });
        println!("{}", serde_json::to_string_pretty(&out).map_err(anyhow::Error::from)?);
    } else {
        println!("sequence  {} (N = {})", args.seq.seq, x.len());
        println!("ideal     {}", ideal.name());
        match verdict.limit() {
            // the limit is a sampled value, resolved only to the finest tolerance
            Some(_) => println!("verdict   {} (resolution {})", describe(&verdict), grid.finest()),
            None => println!("verdict   {}", describe(&verdict)),
        }
        let cauchy_text = match &cauchy {
            CauchyVerdict::Cauchy { anchors } => format!("Cauchy (anchors {anchors:?})"),
            CauchyVerdict::NotCauchy { eps } => format!("NotCauchy at eps = {eps}"),
            CauchyVerdict::Undecided => "Undecided".into(),
        };
        println!("cauchy    {cauchy_text}");
        println!("{:>12}  {:<10}  densities", "eps", "exceptional");
        for row in &table {
            let d: Vec<String> = row.densities.iter().map(|p| format!("{}/{}", p.count, p.n)).collect();
            println!("{:>12}  {:<10}  {}", row.eps, format!("{:?}", row.membership), d.join(" "));
        }
    }
    Ok(if verdict.tag() == ideal_lab::VerdictTag::Undecided { EXIT_UNDECIDED } else { 0 })
}

fn write_file(dir: &Path, name: &str, contents: &str, outputs: &mut Vec<PathBuf>) -> anyhow::Result<()> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    outputs.push(path);
    Ok(())
}

fn replay<S: Selection>(c: &Construction<S, f64>, x: &PointSeq<f64>, ideal: &IdealSpec, grid: &EpsGrid<f64>) -> anyhow::Result<(String, bool)> {
    let y = x.apply_selection(&c.selection)?;
    let verdict = describe(&i_converges(&y, ideal, grid));
    let in_am_all = (1..=c.visited_m).all(|m| matches!(in_am(&c.selection, &c.plan(m), x), Ok(AmVerdict::Yes(_))));
    Ok((verdict, in_am_all))
}

fn construct(args: &ConstructArgs, argv: Vec<String>) -> Result<u8, Failure> {
    let start = Instant::now();
    let ideal = IdealSpec::from_name(&args.seq.ideal)?;
    let grid = EpsGrid::<f64>::dyadic_down_to(args.seq.eps_min)?;
    let x = load_sequence(&args.seq.seq, metric_of(&args.seq), args.horizon)?;
    let (selection, trace, verdict, in_am_all, len) = if args.perm {
        let c = build_divergent_perm(&x, &ideal, args.target, args.seed)?;
        let (v, ok) = replay(&c, &x, &ideal, &grid)?;
        (write_selection(&c.selection), c.trace_text(), v, ok, c.selection.len())
    } else {
        let c = build_divergent_subseq(&x, &ideal, args.target, args.seed)?;
        let (v, ok) = replay(&c, &x, &ideal, &grid)?;
        (write_selection(&c.selection), c.trace_text(), v, ok, c.selection.len())
    };
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut outputs = Vec::new();
    write_file(&args.out_dir, "selection.txt", &selection, &mut outputs)?;
    write_file(&args.out_dir, "trace.txt", &trace, &mut outputs)?;
    let manifest = RunManifest {
        command: argv,
        experiment: None,
        config: serde_json::json!({
            "sequence": args.seq.seq,
            "ideal": ideal.name(),
            "horizon": x.len(),
            "target": args.target,
            "perm": args.perm,
            "eps_min": args.seq.eps_min,
        }),
        seed: args.seed,
        workers: 1,
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        rng: ideal_lab::rng::ALGORITHM.into(),
        outputs: outputs.clone(),
        elapsed_ms: start.elapsed().as_millis(),
    };
    write_manifest(&args.out_dir, &manifest)?;
    println!("selection {} ({} entries, {})", outputs[0].display(), len, if args.perm { "injective" } else { "increasing" });
    println!("trace     {}", outputs[1].display());
    println!("replay    {verdict}");
    println!("in_Am     {}", if in_am_all { "Yes for every visited m" } else { "FAILED for some visited m" });
    Ok(0)
}

fn write_manifest(dir: &Path, manifest: &RunManifest) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(manifest)? + "\n";
    fs::write(dir.join("manifest.json"), text).context("writing manifest.json")?;
    Ok(())
}

/// Reads a config file; a manifest from an earlier run is accepted in its place.
fn read_config(path: &Path) -> anyhow::Result<ExperimentConfig> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        if let Ok(m) = serde_json::from_str::<RunManifest>(&text) {
            let mut cfg: ExperimentConfig = serde_json::from_value(m.config)?;
            cfg.workers = m.workers;
            return Ok(cfg);
        }
    }
    Ok(ExperimentConfig::from_path(path)?)
}

fn experiment(args: &ExperimentArgs, argv: Vec<String>) -> Result<u8, Failure> {
    let start = Instant::now();
    let mut cfg = match &args.config {
        Some(path) => read_config(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(f) = &args.family {
        cfg.family = Some(FunctionFamily::from_name(f)?);
    }
    macro_rules! apply {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field.clone() {
                cfg.$field = v;
            }
        )*};
    }
    apply!(ideal, seed, horizon, trials, points, eps_min, workers);
    if args.seq.is_some() {
        cfg.sequence = args.seq.clone();
    }
    cfg.validate()?;
    let ideal = cfg.ideal_spec()?;
    let family = || cfg.family.clone().ok_or_else(|| anyhow!("this experiment needs a function family (--family or config)"));
    let sequence = || -> anyhow::Result<(String, PointSeq<f64>)> {
        let name = cfg.sequence.clone().ok_or_else(|| anyhow!("this experiment needs a sequence (--seq or config)"))?;
        let x = load_sequence(&name, MetricKind::RealAbs, cfg.horizon)?;
        Ok((name, x))
    };
    let report: ExperimentReport = match args.kind {
        Kind::Emeasure => {
            let (name, x) = sequence()?;
            e_measure_experiment(&x, &name, &ideal, &cfg)?
        }
        Kind::Lk3 => {
            let (name, x) = sequence()?;
            lk3_experiment(&x, &name, &ideal, &cfg)?
        }
        Kind::Tw3 => tw3_experiment(&family()?, &ideal, &cfg)?,
        Kind::Cc1 => cc1_demo(&family()?, &ideal, &cfg)?,
        Kind::Propg => property_g_experiment(&ideal, &cfg)?,
    };

    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    let mut outputs = Vec::new();
    write_file(&args.out_dir, "report.json", &report.to_canonical_json(), &mut outputs)?;
    write_file(&args.out_dir, "tallies.csv", &report.tallies_csv()?, &mut outputs)?;
    let manifest = RunManifest {
        command: argv,
        experiment: Some(args.kind),
        config: serde_json::to_value(&cfg).map_err(anyhow::Error::from)?,
        seed: cfg.seed,
        workers: cfg.workers,
        artifact_version: env!("CARGO_PKG_VERSION").into(),
        rng: ideal_lab::rng::ALGORITHM.into(),
        outputs,
        elapsed_ms: start.elapsed().as_millis(),
    };
    write_manifest(&args.out_dir, &manifest)?;

    println!("{} [{}] {} / {}", report.experiment, report.label, report.subject, report.ideal);
    for w in &report.warnings {
        println!("warning: {w}");
    }
    if let Some(v) = report.verdict {
        println!("verdict {v:?}");
    }
    for p in &report.proportions {
        println!(
            "{:<24} {:.4}  [{:.4}, {:.4}]  ({}/{} decided, {} undecided)",
            p.name, p.value, p.ci95[0], p.ci95[1], p.successes, p.decided, p.undecided
        );
    }
    for c in &report.checks {
        println!("check {:<18} {}  {}", c.name, if c.holds { "holds" } else { "FAILS" }, c.detail);
    }
    println!("wrote {}", args.out_dir.display());
    Ok(0)
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Construct(a) => construct(a, argv),
        Command::Experiment(a) => experiment(a, argv),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
