use clap::{Args, Parser, Subcommand, ValueEnum};
use mpd_core::cli::run::{abc_csv, sweep_csv};
use mpd_core::cli::{
    compare, preset, run_experiment, run_validation, sweep, write_compare, write_run,
    ExperimentConfig, ValidateOptions, PRESETS,
};
use mpd_core::diagnostics::Metric;
use mpd_core::error::Error;
use mpd_core::model::{toyhm_mle, ToyHM};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Momentum Particle Descent experiments and checks.
#[derive(Parser)]
#[command(name = "mpd", version)]
struct Cli {
    /// Worker threads; defaults to one per core.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one config or every config of a preset.
    Run(Source),
    /// Run two configs and score the second against the first with ABC.
    Compare(CompareArgs),
    /// ABC of a momentum method against PGD over a (γ, η) grid.
    Sweep(SweepArgs),
    /// Run the oracle and invariant checks.
    Validate(ValidateArgs),
    /// Closed-form ToyHM maximum-likelihood estimate of a dataset.
    Mle(MleArgs),
    /// List presets, or print the configs of one.
    Presets { name: Option<String> },
}

#[derive(Args)]
struct Source {
    /// JSON experiment config.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    preset: Option<String>,
    /// Overrides the config seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; presets with several configs write one subdirectory each.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Two JSON configs, baseline first.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "preset")]
    config: Option<Vec<PathBuf>>,
    #[arg(long, requires_all = ["a", "b"])]
    preset: Option<String>,
    /// Name of the baseline config within the preset.
    #[arg(long)]
    a: Option<String>,
    #[arg(long)]
    b: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    /// Metric scored by ABC; the config's first metric by default.
    #[arg(long)]
    metric: Option<String>,
    /// Comma-separated friction grid, replacing the config's.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    etas: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Fault {
    Luu,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, hide = true)]
    inject_fault: Option<Fault>,
}

#[derive(Args)]
struct MleArgs {
    /// Observations as a JSON array or separated by commas or whitespace.
    dataset: PathBuf,
    /// Latent variance, for the log marginal at the estimate.
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
}

/// Exit codes: 0 ok, 1 failed check or numerical error, 2 usage or config error.
enum Failure {
    Check,
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::Incompatible(_)
            | Error::NonFactorizing(_) => Failure::Usage(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(n);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| dispatch(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cmd: Command) -> CliResult {
    match cmd {
        Command::Run(src) => cmd_run(&src),
        Command::Compare(args) => cmd_compare(&args),
        Command::Sweep(args) => cmd_sweep(&args),
        Command::Validate(args) => cmd_validate(&args),
        Command::Mle(args) => cmd_mle(&args),
        Command::Presets { name } => cmd_presets(name.as_deref()),
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn load_configs(src: &Source) -> Result<Vec<ExperimentConfig>, Failure> {
    let mut cfgs = match (&src.config, &src.preset) {
        (Some(path), None) => vec![ExperimentConfig::load(path)?],
        (None, Some(name)) => preset(name)?,
        _ => return Err(usage("exactly one of --config or --preset is required")),
    };
    if let Some(seed) = src.seed {
        cfgs.iter_mut().for_each(|c| c.seed = seed);
    }
    Ok(cfgs)
}

fn out_dir(flag: &Option<PathBuf>, cfg: &ExperimentConfig) -> PathBuf {
    flag.clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| {
            PathBuf::from("runs").join(if cfg.name.is_empty() {
                "run"
            } else {
                &cfg.name
            })
        })
}

fn cmd_run(src: &Source) -> CliResult {
    let cfgs = load_configs(src)?;
    let many = cfgs.len() > 1;
    for cfg in &cfgs {
        let dir = match (&src.out, many) {
            (Some(base), true) => base.join(&cfg.name),
            _ => out_dir(&src.out, cfg),
        };
        let out = run_experiment(cfg)?;
        write_run(&dir, &out)?;
        let s = &out.summary;
        let metrics: Vec<String> = s
            .final_metrics
            .iter()
            .map(|(k, v)| format!("{k}={v:.6e}"))
            .collect();
        println!(
            "{}: {} iterations{} {} -> {}",
            if s.name.is_empty() { "run" } else { &s.name },
            s.iterations_completed,
            if s.diverged { " (diverged)" } else { "" },
            metrics.join(" "),
            dir.display()
        );
    }
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> CliResult {
    let (mut a, mut b) = match (&args.config, &args.preset) {
        (Some(paths), None) => (
            ExperimentConfig::load(&paths[0])?,
            ExperimentConfig::load(&paths[1])?,
        ),
        (None, Some(name)) => {
            let cfgs = preset(name)?;
            let pick = |label: &Option<String>| -> Result<ExperimentConfig, Failure> {
                let label = label.as_deref().unwrap_or_default();
                cfgs.iter()
                    .find(|c| c.name == label)
                    .cloned()
                    .ok_or_else(|| {
                        let names: Vec<&str> = cfgs.iter().map(|c| c.name.as_str()).collect();
                        usage(format!(
                            "preset `{name}` has no config `{label}`; available: {}",
                            names.join(", ")
                        ))
                    })
            };
            (pick(&args.a)?, pick(&args.b)?)
        }
        _ => {
            return Err(usage(
                "compare needs --config A B or --preset NAME --a A --b B",
            ))
        }
    };
    if let Some(seed) = args.seed {
        a.seed = seed;
        b.seed = seed;
    }
    let out = compare(&a, &b)?;
    let dir = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("runs/compare"));
    write_compare(&dir, &out)?;
    print!("{}", abc_csv(&out.abc));
    Ok(())
}

fn parse_metric(name: &str) -> Result<Metric, Failure> {
    serde_json::from_value(serde_json::Value::String(name.into())).map_err(|_| {
        usage(format!(
            "unknown metric `{name}`; expected param_error, w1 or loss"
        ))
    })
}

fn cmd_sweep(args: &SweepArgs) -> CliResult {
    let cfgs = load_configs(&args.source)?;
    let [base] = cfgs.as_slice() else {
        return Err(usage("sweep needs a single base config"));
    };
    let mut grid = base.sweep.clone().unwrap_or(mpd_core::cli::SweepGrid {
        gammas: vec![],
        etas: vec![],
    });
    if let Some(g) = &args.gammas {
        grid.gammas = g.clone();
    }
    if let Some(e) = &args.etas {
        grid.etas = e.clone();
    }
    let metric = match &args.metric {
        Some(m) => parse_metric(m)?,
        None => base.metrics[0],
    };
    let out = sweep(base, &grid, metric)?;
    let dir = out_dir(&args.source.out, base);
    std::fs::create_dir_all(&dir).map_err(Error::from)?;
    let csv = sweep_csv(&out);
    std::fs::write(dir.join("abc.csv"), &csv).map_err(Error::from)?;
    print!("{csv}");
    Ok(())
}

fn cmd_validate(args: &ValidateArgs) -> CliResult {
    let opts = ValidateOptions {
        corrupt_l_uu: matches!(args.inject_fault, Some(Fault::Luu)),
    };
    let report = run_validation(opts);
    for c in &report.checks {
        println!("{} [{:.2}s]", c.line(), c.seconds);
    }
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    write_json(&dir, "validate.json", &report)?;
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed",
        report.checks.len() - failed,
        report.checks.len()
    );
    if report.passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn write_json(dir: &Path, file: &str, value: &impl serde::Serialize) -> CliResult {
    std::fs::create_dir_all(dir).map_err(Error::from)?;
    let text = serde_json::to_string_pretty(value).map_err(Error::from)? + "\n";
    std::fs::write(dir.join(file), text).map_err(Error::from)?;
    Ok(())
}

fn cmd_mle(args: &MleArgs) -> CliResult {
    let text = std::fs::read_to_string(&args.dataset)
        .map_err(|e| usage(format!("{}: {e}", args.dataset.display())))?;
    let y = mpd_core::cli::run::parse_numbers(&text)?;
    let theta = toyhm_mle(&y)?;
    let model = ToyHM::new(y, args.sigma2)?;
    println!("theta_star {}", mpd_core::cli::run::fmt_f64(theta));
    println!(
        "log_marginal {}",
        mpd_core::cli::run::fmt_f64(model.log_marginal(theta))
    );
    Ok(())
}

fn cmd_presets(name: Option<&str>) -> CliResult {
    match name {
        None => PRESETS.iter().for_each(|p| println!("{p}")),
        Some(n) => {
            let cfgs = preset(n)?;
            let text = serde_json::to_string_pretty(&cfgs).map_err(Error::from)?;
            println!("{text}");
        }
    }
    Ok(())
}
