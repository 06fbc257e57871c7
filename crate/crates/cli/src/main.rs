mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use rer_core::bandwidth::cv_select;
use rer_core::experiments::{
    mc_replicate, rate_study, run_experiment, truth_curve, BandwidthChoice, ExperimentResult,
};
use rer_core::io::write_atomic;
use rer_core::kernels::KernelSpec;
use rer_core::regression::{evaluate_on_grid, CensoringCurves, EstimatorKind};
use rer_core::simgen::{
    calibrate_censoring, censoring_survival_truth, gen_with_retries, GeneratedData,
};
use rer_core::survival::km_censoring_survival;

use config::{ConfigError, RunConfig};

#[derive(Parser, Debug)]
#[command(
    name = "rer",
    version,
    about = "Relative-error regression for censored time series"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Replaces the configured seed
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Weight cross-validation terms by δ/Ḡₙ(Y)
    #[arg(long, global = true)]
    weighted_cv: bool,
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Generate one censored sample
    Simulate,
    /// Fit the estimators on one sample
    Estimate,
    /// Cross-validation curve of the bandwidth
    Cv,
    /// One end-to-end scenario run with error metrics
    Experiment,
    /// Monte Carlo comparison of the estimators
    Compare,
    /// Convergence-rate study over increasing sample sizes
    Rate,
    /// Find the censoring shift for `target_cp`
    Calibrate,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Self::Simulate => "simulate",
            Self::Estimate => "estimate",
            Self::Cv => "cv",
            Self::Experiment => "experiment",
            Self::Compare => "compare",
            Self::Rate => "rate",
            Self::Calibrate => "calibrate",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    seed_override: Option<u64>,
    config: &'a RunConfig,
}

struct Ctx {
    out: PathBuf,
    format: Format,
    quiet: bool,
}

impl Ctx {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn write(&self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        write_atomic(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.note(format!("wrote {}", path.display()));
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    /// Writes `stem.csv` through `csv`, or `stem.json` from `value`.
    fn write_table<T: Serialize>(
        &self,
        stem: &str,
        value: &T,
        csv: impl FnOnce(&mut Vec<u8>) -> rer_core::Result<()>,
    ) -> Result<()> {
        match self.format {
            Format::Csv => {
                let mut buf = Vec::new();
                csv(&mut buf)?;
                self.write(&format!("{stem}.csv"), &buf)
            }
            Format::Json => self.write_json(&format!("{stem}.json"), value),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<ConfigError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let path = cli
        .config
        .as_deref()
        .ok_or_else(|| ConfigError("--config is required".into()))?;
    let mut cfg = RunConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.weighted_cv {
        cfg.cv.weighted = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = resolve_config(cli)?;
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            return Err(ConfigError("--jobs must be positive".into()).into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .context("configuring worker threads")?;
    }
    std::fs::create_dir_all(&cli.out).with_context(|| format!("creating {}", cli.out.display()))?;
    let ctx = Ctx {
        out: cli.out.clone(),
        format: cli.format,
        quiet: cli.quiet,
    };

    if cli.command == Command::Calibrate && cfg.target_cp.is_none() {
        return Err(ConfigError("`target_cp` is required for calibrate".into()).into());
    }
    if let Some(target) = cfg.target_cp {
        let cal = calibrate_censoring(
            &cfg.scenario(),
            &cfg.generator,
            target,
            cfg.calibration_mc_n,
        )?;
        ctx.note(format!(
            "calibrated censor_a = {} (censoring {:.3} for target {target})",
            cal.censor_a, cal.achieved_cp
        ));
        cfg.censor_a = cal.censor_a;
        if cli.command == Command::Calibrate {
            ctx.write_json("calibration.json", &cal)?;
        }
    }

    match cli.command {
        Command::Calibrate => {}
        Command::Simulate => simulate(&ctx, &cfg)?,
        Command::Estimate => estimate(&ctx, &cfg)?,
        Command::Cv => cross_validate(&ctx, &cfg)?,
        Command::Experiment => experiment(&ctx, &cfg)?,
        Command::Compare => compare(&ctx, &cfg)?,
        Command::Rate => rate(&ctx, &cfg)?,
    }

    ctx.write_json(
        "manifest.json",
        &Manifest {
            command: cli.command.name(),
            version: env!("CARGO_PKG_VERSION"),
            seed_override: cli.seed,
            config: &cfg,
        },
    )
}

fn generate(cfg: &RunConfig) -> Result<GeneratedData> {
    let (data, _) = gen_with_retries(&cfg.scenario(), &cfg.generator, cfg.max_attempts)?;
    Ok(data)
}

fn write_data(ctx: &Ctx, data: &GeneratedData) -> Result<()> {
    ctx.write_table("data", data, |buf| data.write_csv(buf))
}

fn simulate(ctx: &Ctx, cfg: &RunConfig) -> Result<()> {
    let data = generate(cfg)?;
    ctx.note(format!(
        "n = {}, censoring {:.3}",
        data.len(),
        data.realized_cp
    ));
    write_data(ctx, &data)?;
    let gbar = km_censoring_survival(&data.to_sample()?)?;
    ctx.write_table("gbar", &gbar, |buf| gbar.write_csv(buf))
}

fn estimate(ctx: &Ctx, cfg: &RunConfig) -> Result<()> {
    let spec = cfg.spec();
    let data = generate(cfg)?;
    let sample = data.to_sample()?;
    let gbar = km_censoring_survival(&sample)?;
    let kernel = KernelSpec::new(cfg.kernel, 1)?;
    let h = match spec.bandwidth {
        BandwidthChoice::Fixed { h } => h,
        BandwidthChoice::Cv { grid, options } => {
            let sel = cv_select(
                &sample,
                &gbar,
                kernel,
                &grid,
                EstimatorKind::RerHat,
                options,
            )?;
            ctx.write_table("cv_curve", &sel, |buf| sel.write_csv(buf))?;
            sel.h_opt
        }
        BandwidthChoice::Rule { .. } => bail!("rule bandwidths are only used by the rate study"),
    };
    let g_true = if cfg.kinds.contains(&EstimatorKind::RerPseudo) {
        Some(censoring_survival_truth(cfg.censor_a)?)
    } else {
        None
    };
    let truth = truth_curve(&spec)?;
    let grid = evaluate_on_grid(
        &sample,
        CensoringCurves {
            estimated: &gbar,
            truth: g_true.as_ref(),
        },
        kernel,
        h,
        &spec.grid.points(),
        &cfg.kinds,
        Some(truth),
    )?;
    ctx.note(format!("h = {h}"));
    ctx.write_table("grid", &grid, |buf| grid.write_csv(buf))?;
    ctx.write_table("gbar", &gbar, |buf| gbar.write_csv(buf))
}

fn cross_validate(ctx: &Ctx, cfg: &RunConfig) -> Result<()> {
    let data = generate(cfg)?;
    let sample = data.to_sample()?;
    let gbar = km_censoring_survival(&sample)?;
    let kernel = KernelSpec::new(cfg.kernel, 1)?;
    let sel = cv_select(
        &sample,
        &gbar,
        kernel,
        &cfg.bandwidth_grid,
        EstimatorKind::RerHat,
        cfg.cv,
    )?;
    ctx.note(format!("h_opt = {}", sel.h_opt));
    ctx.write_table("cv_curve", &sel, |buf| sel.write_csv(buf))
}

fn experiment(ctx: &Ctx, cfg: &RunConfig) -> Result<()> {
    let res: ExperimentResult = run_experiment(&cfg.spec())?;
    for (kind, sup) in &res.sup_error {
        ctx.note(format!(
            "{kind}: sup error {sup:.4}, iae {:.4}",
            res.iae[kind]
        ));
    }
    ctx.write_table("grid", &res.grid, |buf| res.grid.write_csv(buf))?;
    if let Some(sel) = &res.cv {
        ctx.write_table("cv_curve", sel, |buf| sel.write_csv(buf))?;
    }
    write_data(ctx, &res.data)?;
    ctx.write_json("summary.json", &res)
}

fn compare(ctx: &Ctx, cfg: &RunConfig) -> Result<()> {
    let summary = mc_replicate(&cfg.spec(), cfg.replicates)?;
    for (kind, s) in &summary.kinds {
        ctx.note(format!(
            "{kind}: median sup error {:.4}, median iae {:.4}",
            s.median_sup_error, s.median_iae
        ));
    }
    ctx.write_table("replicates", &summary.records, |buf| {
        summary.write_replicates_csv(buf)
    })?;
    ctx.write_json("summary.json", &summary)
}

fn rate(ctx: &Ctx, cfg: &RunConfig) -> Result<()> {
    let mut spec = cfg.spec();
    if !cfg.rate_cv {
        spec.bandwidth = BandwidthChoice::cube_root_rule();
    }
    if !spec.kinds.contains(&EstimatorKind::RerHat) {
        spec.kinds.push(EstimatorKind::RerHat);
    }
    let res = rate_study(&spec, &cfg.rate_ns, cfg.replicates, EstimatorKind::RerHat)?;
    ctx.note(format!("slope {:.4}", res.slope));
    ctx.write_json("rate.json", &res)
}
