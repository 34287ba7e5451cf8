use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use nutdamp::analysis::{classify_equilibria, equilibria, ProbeConfig};
use nutdamp::experiments::{
    self, ExperimentError, OutputKind, RunConfig, SweepAxis, SweepSpec, SCENARIOS,
};
use nutdamp::validation;

const USAGE: u8 = 2;
const NUMERICAL: u8 = 3;
const VALIDATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "nutdamp",
    version,
    about = "Nutation damping of a spinning body by a ring damper"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Only report errors.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Report file lists and integrator statistics.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configuration and write its run directory.
    Simulate(RunArgs),
    /// Integrate the twelve perturbed seeds around the body axes.
    Portrait(RunArgs),
    /// Run a grid of configurations and tabulate settling metrics.
    Sweep(SweepArgs),
    /// List and classify the spin equilibria.
    Equilibria(EquilibriaArgs),
    /// Run the invariant suite and print a pass/fail table.
    Validate,
}

#[derive(Args)]
struct Source {
    /// TOML run configuration.
    #[arg(long, conflicts_with = "scenario")]
    config: Option<PathBuf>,
    /// Built-in configuration.
    #[arg(long, value_parser = clap::builder::PossibleValuesParser::new(SCENARIOS))]
    scenario: Option<String>,
    /// Override a config value by dotted path, e.g. integrator.dt=5e-5.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    /// Run directory. Defaults to $NUTDAMP_OUT/<name>, or runs/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Settling threshold on the nutation angle, degrees.
    #[arg(long)]
    threshold_deg: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    /// Base run: a named scenario or a run config. A sweep file given with
    /// --plan carries its own base.
    #[command(flatten)]
    source: Source,
    /// TOML sweep plan.
    #[arg(long, conflicts_with_all = ["config", "scenario", "axis"])]
    plan: Option<PathBuf>,
    /// Sweep axis, e.g. params.slug.mass=0.002,0.005,0.01 (repeatable).
    #[arg(long, value_name = "PATH=V1,V2")]
    axis: Vec<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    threshold_deg: Option<f64>,
}

#[derive(Args)]
struct EquilibriaArgs {
    #[command(flatten)]
    source: Source,
    /// Angular momentum magnitude, kg m^2/s. Defaults to |h(0)| of the config.
    #[arg(long)]
    h_mag: Option<f64>,
    /// Skip the probe integrations.
    #[arg(long)]
    no_classify: bool,
    /// Probe duration, s.
    #[arg(long, default_value_t = 30.0)]
    probe_time: f64,
}

struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<ExperimentError> for Failure {
    fn from(e: ExperimentError) -> Self {
        let code = if e.is_numerical() { NUMERICAL } else { USAGE };
        Failure {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: USAGE, error }
    }
}

struct Reporter {
    quiet: bool,
    verbose: bool,
}

impl Reporter {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn detail(&self, msg: impl AsRef<str>) {
        if self.verbose {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Loaded config and the name used for its default output directory.
fn load(source: &Source) -> Result<(RunConfig, String), Failure> {
    let (mut config, name) = match (&source.config, &source.scenario) {
        (Some(path), _) => {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "run".into());
            (RunConfig::load(path)?, name)
        }
        (None, Some(name)) => (RunConfig::scenario(name)?, name.clone()),
        (None, None) => {
            return Err(anyhow::anyhow!("one of --config or --scenario is required").into())
        }
    };
    for assignment in &source.overrides {
        config.apply_override(assignment)?;
    }
    config.validate()?;
    Ok((config, name))
}

fn out_dir(explicit: Option<PathBuf>, name: &str) -> PathBuf {
    explicit.unwrap_or_else(|| {
        let root = std::env::var_os("NUTDAMP_OUT")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("runs"));
        root.join(name)
    })
}

fn simulate(args: RunArgs, portrait_only: bool, log: &Reporter) -> Result<(), Failure> {
    let (mut config, name) = load(&args.source)?;
    if let Some(deg) = args.threshold_deg {
        config.threshold_deg = deg;
        config.validate()?;
    }
    if portrait_only {
        config.outputs = vec![OutputKind::Portrait];
    }
    let suffix = if portrait_only { "-portrait" } else { "" };
    let dir = out_dir(args.out, &format!("{name}{suffix}"));
    let summary = experiments::run(&config, &dir)?;

    log.info(format!("run directory: {}", dir.display()));
    if !portrait_only {
        match summary.settling.settling_time {
            Some(t) => log.info(format!(
                "settled below {} deg at t = {t:.3} s",
                config.threshold_deg
            )),
            None => log.info(format!("did not settle below {} deg", config.threshold_deg)),
        }
        log.info(format!(
            "residual nutation: {:.4} deg",
            summary.settling.residual.to_degrees()
        ));
        log.info(format!(
            "kinetic energy: {:.6} J -> {:.6} J",
            summary.initial_ke, summary.final_ke
        ));
    }
    log.info(format!(
        "casimir max rel err: {:.3e} ({})",
        summary.casimir_max_rel_err,
        summary.termination.label()
    ));
    for f in &summary.files {
        log.detail(format!("wrote {}", dir.join(f).display()));
    }
    Ok(())
}

fn sweep(args: SweepArgs, log: &Reporter) -> Result<(), Failure> {
    let (mut spec, name) = match &args.plan {
        Some(path) => {
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "sweep".into());
            (SweepSpec::load(path)?, name)
        }
        None => {
            let (base, name) = load(&args.source)?;
            let axes = args
                .axis
                .iter()
                .map(|a| SweepAxis::parse(a))
                .collect::<Result<Vec<_>, _>>()?;
            (SweepSpec::new(base, axes), format!("{name}-sweep"))
        }
    };
    if let Some(deg) = args.threshold_deg {
        spec.base.threshold_deg = deg;
    }
    spec.validate()?;
    log.detail(format!("{} runs", spec.run_count()));
    let table = experiments::sweep(&spec)?;
    let dir = out_dir(args.out, &name);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join("sweep.csv");
    std::fs::write(&path, table.to_csv()).with_context(|| format!("writing {}", path.display()))?;
    let failed = table.rows.iter().filter(|r| r.result.is_err()).count();
    log.info(format!(
        "{} rows ({failed} failed) -> {}",
        table.rows.len(),
        path.display()
    ));
    Ok(())
}

fn list_equilibria(args: EquilibriaArgs, log: &Reporter) -> Result<(), Failure> {
    let source = &args.source;
    let (config, _) = if source.config.is_none() && source.scenario.is_none() {
        let mut config = RunConfig::scenario("paper-point-mass")?;
        for assignment in &source.overrides {
            config.apply_override(assignment)?;
        }
        (config, String::new())
    } else {
        load(source)?
    };
    let h_mag = match args.h_mag {
        Some(h) => h,
        None => {
            let model = nutdamp::Model::new(config.params).map_err(ExperimentError::from)?;
            config.initial_state(&model).h.norm()
        }
    };
    let mut points = equilibria(&config.params, h_mag).map_err(ExperimentError::from)?;
    if !args.no_classify {
        let probe = ProbeConfig {
            duration: args.probe_time,
            integrator: config.integrator,
            ..ProbeConfig::default()
        };
        classify_equilibria(&config.params, &mut points, &probe).map_err(ExperimentError::from)?;
    }
    log.info(format!(
        "{:<4} {:>12} {:>12} {:>12} {:>10}  classification",
        "axis", "h_x", "h_y", "h_z", "residual"
    ));
    for p in &points {
        let class = p
            .classification
            .map(|c| format!("{c:?}"))
            .unwrap_or_else(|| "-".into());
        // the table is the command's result, so it prints even with --quiet
        println!(
            "{:<4} {:>12.6} {:>12.6} {:>12.6} {:>10.2e}  {class}",
            p.axis.label(),
            p.h.x,
            p.h.y,
            p.h.z,
            p.residual
        );
    }
    Ok(())
}

fn validate(log: &Reporter) -> Result<(), Failure> {
    let report = validation::run_all();
    print!("{report}");
    let failed = report.checks.iter().filter(|c| !c.passed).count();
    if failed > 0 {
        return Err(Failure {
            code: VALIDATION,
            error: anyhow::anyhow!("{failed} invariant check(s) failed"),
        });
    }
    log.info(format!("all {} checks passed", report.checks.len()));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let log = Reporter {
        quiet: cli.quiet,
        verbose: cli.verbose,
    };
    let result = match cli.command {
        Command::Simulate(args) => simulate(args, false, &log),
        Command::Portrait(args) => simulate(args, true, &log),
        Command::Sweep(args) => sweep(args, &log),
        Command::Equilibria(args) => list_equilibria(args, &log),
        Command::Validate => validate(&log),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
