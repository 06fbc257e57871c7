//! End-to-end scenario runs, Monte Carlo replication, error metrics, the
//! convergence-rate study and the Monte Carlo regression oracle.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bandwidth::{cv_select, BandwidthGrid, CvOptions, CvSelection};
use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::kernels::{KernelFamily, KernelSpec};
use crate::regression::{evaluate_on_grid, CensoringCurves, EstimatorKind, EvalGrid};
use crate::simgen::{
    censoring_survival_truth, derive_seed, gen_with_retries, rng_for, true_regression,
    Contamination, GeneratedData, GeneratorOptions, Model, ScaleReading, ScenarioConfig,
    DEFAULT_MAX_ATTEMPTS,
};
use crate::survival::{km_censoring_survival, StepSurvival};

/// Evaluation points `lo, lo + step, …, hi` on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for GridSpec {
    /// `x ∈ [1, 4]`, step 0.05 (61 points).
    fn default() -> Self {
        Self {
            lo: 1.0,
            hi: 4.0,
            step: 0.05,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo.is_finite() && self.hi.is_finite()) || self.hi < self.lo {
            return Err(Error::invalid("grid", "need finite lo ≤ hi"));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::invalid("grid.step", "must be positive"));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| vec![self.lo + k as f64 * self.step])
            .collect()
    }
}

/// How the smoothing bandwidth is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case", deny_unknown_fields)]
pub enum BandwidthChoice {
    /// Leave-one-out cross-validation of the relative-error estimator.
    Cv {
        #[serde(default)]
        grid: BandwidthGrid,
        #[serde(default)]
        options: CvOptions,
    },
    Fixed {
        h: f64,
    },
    /// `h = scale · n^(−exponent)`
    Rule {
        scale: f64,
        exponent: f64,
    },
}

impl Default for BandwidthChoice {
    fn default() -> Self {
        Self::Cv {
            grid: BandwidthGrid::default(),
            options: CvOptions::default(),
        }
    }
}

impl BandwidthChoice {
    /// The deterministic rule `h = n^(−1/3)`.
    pub fn cube_root_rule() -> Self {
        Self::Rule {
            scale: 1.0,
            exponent: 1.0 / 3.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Cv { grid, .. } => grid.validate(),
            Self::Fixed { h } if !(*h > 0.0) || !h.is_finite() => {
                Err(Error::invalid("bandwidth.h", "must be positive"))
            }
            Self::Rule { scale, exponent } if !(*scale > 0.0) || !exponent.is_finite() => Err(
                Error::invalid("bandwidth.scale", "must be positive with a finite exponent"),
            ),
            _ => Ok(()),
        }
    }
}

/// Reference curve against which errors are measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum TruthSource {
    /// The closed-form target of [`true_regression`].
    #[default]
    Formula,
    /// `E[T⁻¹|X=x]/E[T⁻²|X=x]` by Monte Carlo over `mc_n` draws per point.
    Oracle { mc_n: usize },
}

fn default_kinds() -> Vec<EstimatorKind> {
    vec![EstimatorKind::RerHat, EstimatorKind::Cr]
}

fn default_attempts() -> usize {
    DEFAULT_MAX_ATTEMPTS
}

/// Everything needed to run one scenario end to end.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub scenario: ScenarioConfig,
    #[serde(default)]
    pub generator: GeneratorOptions,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub bandwidth: BandwidthChoice,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<EstimatorKind>,
    #[serde(default)]
    pub truth: TruthSource,
    #[serde(default)]
    pub kernel: KernelFamily,
    /// Generation attempts before a positivity rejection is reported.
    #[serde(default = "default_attempts")]
    pub max_attempts: usize,
}

impl ExperimentSpec {
    pub fn new(scenario: ScenarioConfig) -> Self {
        Self {
            scenario,
            generator: GeneratorOptions::default(),
            grid: GridSpec::default(),
            bandwidth: BandwidthChoice::default(),
            kinds: default_kinds(),
            truth: TruthSource::default(),
            kernel: KernelFamily::default(),
            max_attempts: DEFAULT_MAX_ATTEMPTS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.generator.validate()?;
        self.grid.validate()?;
        self.bandwidth.validate()?;
        if self.kinds.is_empty() {
            return Err(Error::invalid(
                "kinds",
                "at least one estimator is required",
            ));
        }
        if let TruthSource::Oracle { mc_n: 0 } = self.truth {
            return Err(Error::invalid("truth.mc_n", "must be positive"));
        }
        if self.max_attempts == 0 {
            return Err(Error::invalid("max_attempts", "must be positive"));
        }
        Ok(())
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut s = self.clone();
        s.scenario.seed = seed;
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    /// Scenario actually generated (seed after any positivity retries).
    pub config: ScenarioConfig,
    pub grid: EvalGrid,
    pub h_opt: f64,
    pub sup_error: BTreeMap<EstimatorKind, f64>,
    pub iae: BTreeMap<EstimatorKind, f64>,
    pub realized_cp: f64,
    pub wall_time_ms: u64,
    pub attempts: usize,
    pub cv: Option<CvSelection>,
    #[serde(skip)]
    pub data: GeneratedData,
    #[serde(skip)]
    pub gbar: StepSurvival,
}

/// The reference curve of `spec` at its grid points.
pub fn truth_curve(spec: &ExperimentSpec) -> Result<Vec<f64>> {
    spec.grid.validate()?;
    let points = spec.grid.points();
    let sc = &spec.scenario;
    match (spec.truth, sc.model) {
        (TruthSource::Oracle { mc_n }, Model::Linear) => {
            let oracle = OracleSpec::for_scenario(sc, &spec.generator);
            points
                .par_iter()
                .map(|p| rer_oracle(&oracle, p[0], mc_n).map(|e| e.value))
                .collect()
        }
        _ => points
            .iter()
            .map(|p| true_regression(sc.model, sc.c, sc.rho, p[0]))
            .collect(),
    }
}

/// Runs one scenario: generate, fit the censoring curve, choose `h`, evaluate
/// every estimator on the grid and score it against the reference curve.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    let truth = truth_curve(spec)?;
    run_experiment_with_truth(spec, &truth)
}

/// [`run_experiment`] with a precomputed reference curve.
pub fn run_experiment_with_truth(spec: &ExperimentSpec, truth: &[f64]) -> Result<ExperimentResult> {
    spec.validate()?;
    let start = Instant::now();
    let (data, attempts) = gen_with_retries(&spec.scenario, &spec.generator, spec.max_attempts)?;
    let mut config = spec.scenario.clone();
    if attempts > 1 {
        config.seed = derive_seed(
            spec.scenario.seed,
            crate::simgen::stream::RETRY + (attempts - 1) as u64,
        );
    }
    let sample = data.to_sample()?;
    let gbar = km_censoring_survival(&sample)?;
    let kernel = KernelSpec::new(spec.kernel, 1)?;

    let (h_opt, cv) = match spec.bandwidth {
        BandwidthChoice::Cv { grid, options } => {
            let sel = cv_select(
                &sample,
                &gbar,
                kernel,
                &grid,
                EstimatorKind::RerHat,
                options,
            )?;
            (sel.h_opt, Some(sel))
        }
        BandwidthChoice::Fixed { h } => (h, None),
        BandwidthChoice::Rule { scale, exponent } => {
            (scale * (sample.len() as f64).powf(-exponent), None)
        }
    };

    let g_true = if spec.kinds.contains(&EstimatorKind::RerPseudo) {
        Some(censoring_survival_truth(spec.scenario.censor_a)?)
    } else {
        None
    };
    let curves = CensoringCurves {
        estimated: &gbar,
        truth: g_true.as_ref(),
    };
    let points = spec.grid.points();
    let grid = evaluate_on_grid(
        &sample,
        curves,
        kernel,
        h_opt,
        &points,
        &spec.kinds,
        Some(truth.to_vec()),
    )?;

    let mut sup = BTreeMap::new();
    let mut integrated = BTreeMap::new();
    for &kind in grid.estimates.keys() {
        sup.insert(kind, sup_error(&grid, kind)?);
        integrated.insert(kind, iae(&grid, kind)?);
    }
    Ok(ExperimentResult {
        config,
        grid,
        h_opt,
        sup_error: sup,
        iae: integrated,
        realized_cp: data.realized_cp,
        wall_time_ms: start.elapsed().as_millis() as u64,
        attempts,
        cv,
        data,
        gbar,
    })
}

fn defined_errors(grid: &EvalGrid, kind: EstimatorKind) -> Result<Vec<Option<f64>>> {
    let truth = grid.truth.as_ref().ok_or(Error::MissingTruth)?;
    let est = grid.estimate(kind)?;
    let errs: Vec<Option<f64>> = est
        .iter()
        .zip(truth)
        .map(|(e, t)| e.map(|e| (e - t).abs()))
        .collect();
    if errs.iter().all(Option::is_none) {
        return Err(Error::NoDefinedPoints);
    }
    Ok(errs)
}

/// `max |m̂(x) − m(x)|` over the defined grid points.
pub fn sup_error(grid: &EvalGrid, kind: EstimatorKind) -> Result<f64> {
    let errs = defined_errors(grid, kind)?;
    Ok(errs.into_iter().flatten().fold(0.0, f64::max))
}

/// Trapezoid integral of `|m̂ − m|` over intervals whose two endpoints are
/// both defined (univariate grids).
pub fn iae(grid: &EvalGrid, kind: EstimatorKind) -> Result<f64> {
    if grid.dim() != 1 {
        return Err(Error::invalid(
            "grid",
            "integrated error needs a univariate grid",
        ));
    }
    let errs = defined_errors(grid, kind)?;
    let mut total = 0.0;
    for k in 1..grid.len() {
        if let (Some(a), Some(b)) = (errs[k - 1], errs[k]) {
            total += 0.5 * (a + b) * (grid.points[k][0] - grid.points[k - 1][0]);
        }
    }
    Ok(total)
}

/// Metrics of one Monte Carlo replicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub replicate: usize,
    pub kind: EstimatorKind,
    pub sup_error: f64,
    pub iae: f64,
    pub h_opt: f64,
    pub realized_cp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KindSummary {
    pub median_sup_error: f64,
    pub iqr_sup_error: f64,
    pub median_iae: f64,
    pub iqr_iae: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McSummary {
    pub replicates: usize,
    pub failures: usize,
    pub kinds: BTreeMap<EstimatorKind, KindSummary>,
    pub mean_realized_cp: f64,
    pub median_h_opt: f64,
    #[serde(skip)]
    pub records: Vec<ReplicateRecord>,
}

impl McSummary {
    pub fn kind(&self, kind: EstimatorKind) -> Result<&KindSummary> {
        self.kinds
            .get(&kind)
            .ok_or(Error::MissingEstimate(kind.name()))
    }

    /// CSV with header `replicate,kind,sup_error,iae,h_opt,realized_cp`.
    pub fn write_replicates_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "replicate,kind,sup_error,iae,h_opt,realized_cp")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.replicate,
                r.kind,
                fmt_real(r.sup_error),
                fmt_real(r.iae),
                fmt_real(r.h_opt),
                fmt_real(r.realized_cp)
            )?;
        }
        Ok(())
    }
}

/// Seed of replicate `r` of a study seeded with `seed`.
pub fn replicate_seed(seed: u64, r: usize) -> u64 {
    derive_seed(seed, r as u64)
}

/// Runs `replicates` independent copies of `spec` and summarises their
/// metrics. Aborts when more than 20% of replicates fail.
pub fn mc_replicate(spec: &ExperimentSpec, replicates: usize) -> Result<McSummary> {
    spec.validate()?;
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be positive"));
    }
    let truth = truth_curve(spec)?;
    mc_replicate_with_truth(spec, replicates, &truth)
}

pub fn mc_replicate_with_truth(
    spec: &ExperimentSpec,
    replicates: usize,
    truth: &[f64],
) -> Result<McSummary> {
    if replicates == 0 {
        return Err(Error::invalid("replicates", "must be positive"));
    }
    let outcomes: Vec<Result<ExperimentResult>> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            run_experiment_with_truth(
                &spec.with_seed(replicate_seed(spec.scenario.seed, r)),
                truth,
            )
        })
        .collect();

    let mut records = Vec::new();
    let mut failures = 0;
    let mut last_error = String::new();
    let mut cps = Vec::new();
    let mut hs = Vec::new();
    for (r, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(res) => {
                cps.push(res.realized_cp);
                hs.push(res.h_opt);
                for (&kind, &sup) in &res.sup_error {
                    records.push(ReplicateRecord {
                        replicate: r,
                        kind,
                        sup_error: sup,
                        iae: res.iae[&kind],
                        h_opt: res.h_opt,
                        realized_cp: res.realized_cp,
                    });
                }
            }
            Err(e) => {
                failures += 1;
                last_error = e.to_string();
            }
        }
    }
    if failures * 5 > replicates || cps.is_empty() {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: replicates,
            last: last_error,
        });
    }

    let mut kinds = BTreeMap::new();
    for &kind in &spec.kinds {
        let sups: Vec<f64> = records
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.sup_error)
            .collect();
        let iaes: Vec<f64> = records
            .iter()
            .filter(|r| r.kind == kind)
            .map(|r| r.iae)
            .collect();
        if sups.is_empty() {
            continue;
        }
        kinds.insert(
            kind,
            KindSummary {
                median_sup_error: quantile(&sups, 0.5),
                iqr_sup_error: quantile(&sups, 0.75) - quantile(&sups, 0.25),
                median_iae: quantile(&iaes, 0.5),
                iqr_iae: quantile(&iaes, 0.75) - quantile(&iaes, 0.25),
            },
        );
    }
    Ok(McSummary {
        replicates,
        failures,
        kinds,
        mean_realized_cp: cps.iter().sum::<f64>() / cps.len() as f64,
        median_h_opt: quantile(&hs, 0.5),
        records,
    })
}

/// Linearly interpolated sample quantile (`p ∈ [0, 1]`) of a non-empty slice.
pub fn quantile(values: &[f64], p: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p * (v.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudyResult {
    pub kind: EstimatorKind,
    pub ns: Vec<usize>,
    pub median_sup_errors: Vec<f64>,
    pub slope: f64,
}

/// Median sup-error of `kind` at each sample size over `replicates` runs and
/// the least-squares slope of `log median` against `log n`.
///
/// The bandwidth comes from `spec.bandwidth`; use
/// [`BandwidthChoice::cube_root_rule`] for the deterministic `n^(−1/3)`.
pub fn rate_study(
    spec: &ExperimentSpec,
    ns: &[usize],
    replicates: usize,
    kind: EstimatorKind,
) -> Result<RateStudyResult> {
    if ns.len() < 3 || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::invalid(
            "ns",
            "need at least three strictly increasing sample sizes",
        ));
    }
    if !spec.kinds.contains(&kind) {
        return Err(Error::MissingEstimate(kind.name()));
    }
    spec.validate()?;
    let truth = truth_curve(spec)?;
    let mut medians = Vec::with_capacity(ns.len());
    for &n in ns {
        let mut s = spec.clone();
        s.scenario.n = n;
        s.scenario.seed = derive_seed(spec.scenario.seed, n as u64);
        let summary = mc_replicate_with_truth(&s, replicates, &truth)?;
        medians.push(summary.kind(kind)?.median_sup_error);
    }
    let slope = log_log_slope(ns, &medians)?;
    Ok(RateStudyResult {
        kind,
        ns: ns.to_vec(),
        median_sup_errors: medians,
        slope,
    })
}

/// Least-squares slope of `log y` on `log n`.
pub fn log_log_slope(ns: &[usize], ys: &[f64]) -> Result<f64> {
    if ns.len() != ys.len() || ns.len() < 2 {
        return Err(Error::SlopeUndefined(
            "need at least two aligned points".into(),
        ));
    }
    if let Some(y) = ys.iter().find(|y| !(**y > 0.0) || !y.is_finite()) {
        return Err(Error::SlopeUndefined(format!(
            "non-positive median error {y}"
        )));
    }
    if ys.iter().all(|y| *y == ys[0]) {
        return Err(Error::SlopeUndefined("all medians are equal".into()));
    }
    let lx: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let m = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / m, ly.iter().sum::<f64>() / m);
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::SlopeUndefined("sample sizes are all equal".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(sxy / sxx)
}

/// Lifetime law `T = c + ρx + s·ε` of the linear model at a fixed `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSpec {
    pub c: f64,
    pub rho: f64,
    /// Innovation scale `s`, normally `√(1 − ρ²)`.
    pub noise_scale: f64,
    /// Condition on `T > floor`; `None` keeps every positive draw.
    pub floor: Option<f64>,
    pub contamination: Option<Contamination>,
    pub lambda_scale: ScaleReading,
    pub seed: u64,
}

pub const ORACLE_SEED: u64 = 0x5eed_04ac;

/// Lifetime floor of [`port_oracle`]; without one `E[T⁻²]` diverges.
pub const PORT_FLOOR: f64 = 1.0;

impl OracleSpec {
    pub fn new(c: f64, rho: f64) -> Self {
        Self {
            c,
            rho,
            noise_scale: (1.0 - rho * rho).sqrt(),
            floor: None,
            contamination: None,
            lambda_scale: ScaleReading::StdDev,
            seed: ORACLE_SEED,
        }
    }

    /// The conditional lifetime law generated by `config` under `options`.
    pub fn for_scenario(config: &ScenarioConfig, options: &GeneratorOptions) -> Self {
        Self {
            floor: options.lifetime_floor,
            contamination: config.contamination,
            lambda_scale: options.lambda_scale,
            ..Self::new(config.c, config.rho)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleEstimate {
    pub value: f64,
    pub std_error: f64,
    /// Draws kept.
    pub accepted: usize,
    /// Draws with `T ≤ 0`.
    pub rejected: usize,
    /// All draws, including those below a positive floor.
    pub drawn: usize,
}

/// Monte Carlo value of `E[T⁻¹|X=x] / E[T⁻²|X=x]` over `mc_n` kept draws.
///
/// Draws with `T ≤ 0` (or `T ≤ floor`) are discarded. Without a floor, more
/// than 1% of draws with `T ≤ 0` makes the oracle unreliable and the location
/// must clear zero by five innovation scales; with a floor the law is the
/// conditional one by construction.
pub fn rer_oracle(spec: &OracleSpec, x: f64, mc_n: usize) -> Result<OracleEstimate> {
    if mc_n == 0 {
        return Err(Error::invalid("mc_n", "must be positive"));
    }
    if !(spec.noise_scale >= 0.0) || !spec.noise_scale.is_finite() {
        return Err(Error::invalid(
            "noise_scale",
            "must be finite and non-negative",
        ));
    }
    let mu = spec.c + spec.rho * x;
    let floor = spec.floor.unwrap_or(0.0);
    if spec.floor.is_none() && mu.abs() < 5.0 * spec.noise_scale {
        return Err(Error::invalid(
            "x",
            format!("c + ρx = {mu} is within five noise scales of zero"),
        ));
    }
    if spec.noise_scale == 0.0 {
        if !(mu > floor) {
            return Err(Error::OracleUnreliable {
                rejected: 1,
                drawn: 1,
            });
        }
        return Ok(OracleEstimate {
            value: mu,
            std_error: 0.0,
            accepted: mc_n,
            rejected: 0,
            drawn: mc_n,
        });
    }

    let mut rng = rng_for(spec.seed);
    let (mut s1, mut s2, mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut accepted, mut rejected, mut drawn) = (0usize, 0usize, 0usize);
    let budget = mc_n.saturating_mul(100);
    while accepted < mc_n {
        if drawn >= budget {
            return Err(Error::OracleUnreliable { rejected, drawn });
        }
        drawn += 1;
        let z: f64 = StandardNormal.sample(&mut rng);
        let eps = match &spec.contamination {
            Some(m) if rng.random::<f64>() < m.beta => spec.lambda_scale.std_dev(m.lambda) * z,
            _ => z,
        };
        let t = mu + spec.noise_scale * eps;
        if !(t > 0.0) {
            rejected += 1;
            continue;
        }
        if !(t > floor) {
            continue;
        }
        let a = 1.0 / t;
        let b = a * a;
        s1 += a;
        s2 += b;
        s11 += a * a;
        s12 += a * b;
        s22 += b * b;
        accepted += 1;
    }
    if spec.floor.is_none() && rejected * 100 > drawn {
        return Err(Error::OracleUnreliable { rejected, drawn });
    }
    let m = accepted as f64;
    let (ma, mb) = (s1 / m, s2 / m);
    let value = ma / mb;
    // delta method for a ratio of means
    let (vaa, vab, vbb) = (s11 / m - ma * ma, s12 / m - ma * mb, s22 / m - mb * mb);
    let var = (vaa - 2.0 * value * vab + value * value * vbb) / (mb * mb * m);
    Ok(OracleEstimate {
        value,
        std_error: var.max(0.0).sqrt(),
        accepted,
        rejected,
        drawn,
    })
}

/// Monte Carlo reference for the linear model's relative-error regression
/// at `x`, conditioning on `T > 1` with a fixed seed.
pub fn port_oracle(c: f64, rho: f64, x: f64, mc_n: usize) -> Result<f64> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::invalid("rho", "must lie in (0, 1)"));
    }
    let spec = OracleSpec {
        floor: Some(PORT_FLOOR),
        ..OracleSpec::new(c, rho)
    };
    rer_oracle(&spec, x, mc_n).map(|e| e.value)
}
