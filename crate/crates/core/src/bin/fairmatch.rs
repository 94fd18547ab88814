use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fairmatch::dataset::{write_dataset, DataFormat, Dataset, Side, SyntheticConfig};
use fairmatch::experiment::{
    emit_report, render_markdown, render_report, run_experiment, scaling_benchmark,
    write_artifacts, BenchConfig, BenchReport, DatasetSource, ExperimentConfig, ReportFormat,
    RunArtifact,
};
use fairmatch::fairness::ObjectiveWeights;
use fairmatch::recommenders::Algorithm;
use fairmatch::similarity::Scorer;
use fairmatch::Error;

const EXIT_CONFIG: u8 = 1;
const EXIT_RUNTIME: u8 = 2;
const EXIT_TIMEOUT: u8 = 3;

#[derive(Parser)]
#[command(
    name = "fairmatch",
    version,
    about = "Fair reciprocal recommendation experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic market as profile and interaction files.
    Generate(GenerateArgs),
    /// Run an experiment and write report.json, report.csv, report.md and timings.json.
    Run(RunArgs),
    /// Time FAIR-MATCH and CF on growing markets and fit the scaling slope.
    Bench(BenchArgs),
    /// Re-render a saved report.json in another format.
    Report(ReportArgs),
}

#[derive(Args)]
struct MarketArgs {
    /// Users on side A.
    #[arg(long)]
    n: Option<usize>,
    /// Users on side B.
    #[arg(long)]
    m: Option<usize>,
    /// Attractiveness weight in target selection.
    #[arg(long)]
    alpha: Option<f64>,
    /// Activity weight in target selection.
    #[arg(long)]
    beta: Option<f64>,
    /// Extra log-odds for contacting one's own group.
    #[arg(long)]
    homophily: Option<f64>,
    /// Mean number of contacts sent per user.
    #[arg(long)]
    mean_contacts: Option<f64>,
}

impl MarketArgs {
    fn apply(&self, s: &mut SyntheticConfig) {
        if let Some(v) = self.n {
            s.n = v;
        }
        if let Some(v) = self.m {
            s.m = v;
        }
        if let Some(v) = self.alpha {
            s.alpha = v;
        }
        if let Some(v) = self.beta {
            s.beta = v;
        }
        if let Some(v) = self.homophily {
            s.homophily = v;
        }
        if let Some(v) = self.mean_contacts {
            s.mean_contacts = v;
        }
    }

    fn any(&self) -> bool {
        self.n.is_some()
            || self.m.is_some()
            || self.alpha.is_some()
            || self.beta.is_some()
            || self.homophily.is_some()
            || self.mean_contacts.is_some()
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    seed: u64,
    /// Directory receiving profiles.<ext> and interactions.<ext>.
    #[arg(long, short)]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: DataFormat,
    /// TOML file with generator settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    market: MarketArgs,
}

#[derive(Args)]
struct RunArgs {
    /// Overrides any seed in the config file.
    #[arg(long)]
    seed: u64,
    /// Experiment TOML; flags override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Comma-separated subset of fair_match, cf, recon, gale_shapley.
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<Algorithm>>,
    #[arg(long, short)]
    k: Option<usize>,
    /// Group-distribution tolerance for FAIR-MATCH lists.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Quality, diversity and fairness weights, e.g. 0.6,0.2,0.2.
    #[arg(long, value_delimiter = ',')]
    weights: Option<Vec<f64>>,
    #[arg(long)]
    quality_floor: Option<f64>,
    /// Skip the exposure rebalancing pass.
    #[arg(long)]
    no_nsw: bool,
    #[arg(long)]
    scorer: Option<Scorer>,
    #[arg(long)]
    split_fraction: Option<f64>,
    #[arg(long)]
    precision_side: Option<Side>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Load the market from files instead of generating it.
    #[arg(long, requires = "interactions")]
    profiles: Option<PathBuf>,
    #[arg(long, requires = "profiles")]
    interactions: Option<PathBuf>,
    #[arg(long)]
    format: Option<DataFormat>,
    #[command(flatten)]
    market: MarketArgs,
}

#[derive(Args)]
struct BenchArgs {
    /// Benchmark TOML; flags override it.
    #[arg(long, short)]
    config: Option<PathBuf>,
    /// Comma-separated NxM sizes in ascending order, e.g. 100x100,200x200.
    #[arg(long, value_delimiter = ',', value_parser = parse_size)]
    sizes: Option<Vec<(usize, usize)>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    threads: Option<usize>,
    /// Budget per size in seconds.
    #[arg(long)]
    timeout: Option<f64>,
    /// Where to write the benchmark JSON.
    #[arg(long, short, default_value = "bench.json")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// A report.json written by `run`.
    input: PathBuf,
    /// json, csv, csv-long or markdown.
    #[arg(long, short, default_value = "markdown")]
    format: ReportFormat,
    /// Output file; printed to stdout when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn parse_size(s: &str) -> Result<(usize, usize), String> {
    let (n, m) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("size '{s}' is not of the form NxM"))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|e| format!("size '{s}': {e}"))
    };
    Ok((parse(n)?, parse(m)?))
}

/// An error together with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure {
            code: EXIT_CONFIG,
            message: e.to_string(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) => EXIT_CONFIG,
            _ => EXIT_RUNTIME,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", path.display())))
}

fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let mut config: SyntheticConfig = match &args.config {
        Some(path) => read_toml(path)?,
        None => SyntheticConfig::default(),
    };
    args.market.apply(&mut config);
    config.seed = args.seed;
    config.validate().map_err(Failure::config)?;
    let dataset = Dataset::synthetic(&config)?;
    write_dataset(&dataset, &args.out, args.format)?;
    println!(
        "wrote {} users and {} interactions to {} (digest {})",
        dataset.len(),
        dataset.records().len(),
        args.out.display(),
        dataset.digest()
    );
    Ok(())
}

fn run_config(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    let mut config = match &args.config {
        Some(path) => {
            // The seed may be missing from the file; the flag supplies it.
            let mut table: toml::Table = read_toml(path)?;
            let seed = i64::try_from(args.seed)
                .map_err(|_| Failure::config("--seed must fit in a signed 64-bit integer"))?;
            table.insert("seed".into(), toml::Value::Integer(seed));
            ExperimentConfig::from_toml_str(&table.to_string()).map_err(Failure::config)?
        }
        None => ExperimentConfig::new(args.seed),
    };
    config.seed = args.seed;
    if let Some(a) = &args.algorithms {
        config.algorithms = a.clone();
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if let Some(e) = args.epsilon {
        config.fair_match.epsilon = e;
    }
    if let Some(w) = &args.weights {
        let &[quality, diversity, fairness] = w.as_slice() else {
            return Err(Failure::config(format!(
                "--weights takes 3 values, got {}",
                w.len()
            )));
        };
        config.fair_match.weights =
            ObjectiveWeights::new(quality, diversity, fairness).map_err(Failure::config)?;
    }
    if let Some(q) = args.quality_floor {
        config.fair_match.quality_floor = q;
    }
    if args.no_nsw {
        config.fair_match.nsw = false;
    }
    if let Some(s) = args.scorer {
        config.fair_match.scorer = s;
    }
    if let Some(f) = args.split_fraction {
        config.split_fraction = f;
    }
    if let Some(s) = args.precision_side {
        config.precision_side = s;
    }
    if let Some(d) = &args.output_dir {
        config.output_dir = d.clone();
    }
    if let (Some(profiles), Some(interactions)) = (&args.profiles, &args.interactions) {
        if args.market.any() {
            return Err(Failure::config(
                "market flags cannot be combined with --profiles",
            ));
        }
        config.dataset = DatasetSource::Files {
            profiles: profiles.clone(),
            interactions: interactions.clone(),
            format: args.format,
        };
    } else if args.market.any() {
        match &mut config.dataset {
            DatasetSource::Synthetic(s) => args.market.apply(s),
            DatasetSource::Files { .. } => {
                return Err(Failure::config("market flags need a synthetic dataset"));
            }
        }
    }
    config.validate().map_err(Failure::config)?;
    Ok(config)
}

fn run(args: RunArgs) -> Result<(), Failure> {
    let config = run_config(&args)?;
    let artifact = run_experiment(&config)?;
    let written = write_artifacts(&artifact, &config.output_dir)?;
    print!("{}", render_markdown(&artifact));
    for path in written {
        eprintln!("wrote {}", path.display());
    }
    Ok(())
}

fn print_bench(report: &BenchReport) {
    let secs = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |s| format!("{s:.4}"));
    println!("| n | m | n*m | FAIR-MATCH s | CF s | memory MB | aborted |");
    println!("|---|---|---|---|---|---|---|");
    for r in &report.rows {
        println!(
            "| {} | {} | {} | {} | {} | {:.1} | {} |",
            r.n,
            r.m,
            r.work,
            secs(r.fair_match_secs),
            secs(r.cf_secs),
            r.memory_estimate_bytes as f64 / 1e6,
            r.aborted
        );
    }
    let slope = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |s| format!("{s:.3}"));
    println!(
        "\nlog-log slope vs n*m: FAIR-MATCH {}, CF {}",
        slope(report.fair_match_slope),
        slope(report.cf_slope)
    );
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let mut config: BenchConfig = match &args.config {
        Some(path) => read_toml(path)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = &args.sizes {
        config.sizes = s.clone();
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(r) = args.repeats {
        config.repeats = r;
    }
    if let Some(t) = args.threads {
        config.threads = t;
    }
    if let Some(t) = args.timeout {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Failure::config("--timeout must be positive"));
        }
        config.timeout_secs = Some(t);
    }
    let report = scaling_benchmark(&config)?;
    let text = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
    fs::write(&args.out, text).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", args.out.display()),
    })?;
    print_bench(&report);
    eprintln!("wrote {}", args.out.display());
    if report.aborted() {
        return Err(Failure {
            code: EXIT_TIMEOUT,
            message: "benchmark budget exceeded; partial results written".into(),
        });
    }
    Ok(())
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let text = fs::read_to_string(&args.input).map_err(|e| Failure {
        code: EXIT_RUNTIME,
        message: format!("{}: {e}", args.input.display()),
    })?;
    let artifact: RunArtifact = serde_json::from_str(&text).map_err(Error::from)?;
    match &args.out {
        Some(path) => emit_report(&artifact, args.format, path)?,
        None => print!("{}", render_report(&artifact, args.format)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
