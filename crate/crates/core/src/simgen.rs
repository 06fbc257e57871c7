//! Simulation of censored, strongly mixing regression data.
//!
//! The covariate is the Gaussian AR(1) path
//! `Xᵢ = c + ρXᵢ₋₁ + √(1 − ρ²)εᵢ`, `X₀ ~ N(1, 0.1)`, and the lifetime is either
//! the next state (`Tᵢ = Xᵢ₊₁`, linear model) or a deterministic transform of
//! `Xᵢ`. Censoring times are i.i.d. `N(3 + a, 1)` restricted to `(0, ∞)`.

use std::f64::consts::PI;
use std::io::Write;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::io::fmt_real;
use crate::survival::{CensoredSample, StepSurvival};

/// Independent random streams derived from one scenario seed.
pub mod stream {
    pub const CENSORING: u64 = 0x0c3e_4500;
    pub const OUTLIERS: u64 = 0x0071_1e45;
    pub const CALIBRATION: u64 = 0xca1b_0000;
    pub const CALIBRATION_CENSORING: u64 = 0xca1b_c000;
    pub const RETRY: u64 = 0x4e74_0000;
    pub const ORACLE: u64 = 0x04ac_1e00;
}

/// SplitMix64 finaliser of `seed + index·φ`; the fixed rule used to derive
/// replicate and stream seeds.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn rng_for(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// `Tᵢ = Xᵢ₊₁`
    Linear,
    /// `Tᵢ = 1 + cos(πXᵢ/2)`
    Cosine,
    /// `Tᵢ = exp(ρ²Xᵢ)`
    Exponential,
    /// `Tᵢ = 1/Xᵢ`
    Inverse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Outliers {
    pub count: usize,
    pub factor: f64,
}

/// Innovations drawn from `(1 − β)·N(0, 1) + β·N(0, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Contamination {
    pub beta: f64,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: Model,
    pub c: f64,
    pub rho: f64,
    pub n: usize,
    pub censor_a: f64,
    #[serde(default)]
    pub outliers: Option<Outliers>,
    #[serde(default)]
    pub contamination: Option<Contamination>,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::invalid(
                "rho",
                format!("must lie in (0, 1), got {}", self.rho),
            ));
        }
        if !self.c.is_finite() {
            return Err(Error::invalid("c", "must be finite"));
        }
        if self.n == 0 {
            return Err(Error::invalid("n", "must be positive"));
        }
        if !self.censor_a.is_finite() {
            return Err(Error::invalid("censor_a", "must be finite"));
        }
        if let Some(o) = &self.outliers {
            if o.count == 0 || o.count > self.n {
                return Err(Error::invalid(
                    "outliers.count",
                    format!("must lie in [1, n = {}], got {}", self.n, o.count),
                ));
            }
            if !(o.factor > 0.0) || !o.factor.is_finite() {
                return Err(Error::invalid("outliers.factor", "must be positive"));
            }
        }
        if let Some(m) = &self.contamination {
            if !(0.0..1.0).contains(&m.beta) {
                return Err(Error::invalid("contamination.beta", "must lie in [0, 1)"));
            }
            if !(m.lambda > 0.0) || !m.lambda.is_finite() {
                return Err(Error::invalid("contamination.lambda", "must be positive"));
            }
        }
        Ok(())
    }

    /// Standard deviation of the AR innovation term, `√(1 − ρ²)`.
    pub fn noise_scale(&self) -> f64 {
        (1.0 - self.rho * self.rho).sqrt()
    }
}

/// How the second parameter of a printed `N(μ, s)` is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleReading {
    Variance,
    StdDev,
}

impl ScaleReading {
    pub fn std_dev(self, s: f64) -> f64 {
        match self {
            Self::Variance => s.sqrt(),
            Self::StdDev => s,
        }
    }
}

/// Generator switches that are not part of the scenario itself.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorOptions {
    /// Reading of the `0.1` in `X₀ ~ N(1, 0.1)`.
    pub x0_scale: ScaleReading,
    /// Reading of `λ` in the contaminating `N(0, λ)`.
    pub lambda_scale: ScaleReading,
    /// AR steps simulated and discarded before `X₁`.
    pub burn_in: usize,
    /// Lower bound on lifetimes. `None`: any `Tᵢ ≤ 0` rejects the whole
    /// path. `Some(f)`: innovations are redrawn until the lifetime exceeds
    /// `f`, so that `T⁻¹` and `T⁻²` stay bounded.
    pub lifetime_floor: Option<f64>,
    /// Redraw budget per step when a floor is set.
    pub max_redraws: usize,
}

impl Default for GeneratorOptions {
    fn default() -> Self {
        Self {
            x0_scale: ScaleReading::Variance,
            lambda_scale: ScaleReading::StdDev,
            burn_in: 0,
            lifetime_floor: None,
            max_redraws: 10_000,
        }
    }
}

impl GeneratorOptions {
    pub fn validate(&self) -> Result<()> {
        if let Some(f) = self.lifetime_floor {
            if !(f >= 0.0) || !f.is_finite() {
                return Err(Error::invalid(
                    "generator.lifetime_floor",
                    "must be finite and non-negative",
                ));
            }
        }
        if self.max_redraws == 0 {
            return Err(Error::invalid("generator.max_redraws", "must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedData {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    pub cs: Vec<f64>,
    pub ys: Vec<f64>,
    pub deltas: Vec<bool>,
    pub realized_cp: f64,
}

impl GeneratedData {
    fn from_parts(xs: Vec<f64>, ts: Vec<f64>, cs: Vec<f64>) -> Self {
        let mut data = Self {
            xs,
            ts,
            cs,
            ys: Vec::new(),
            deltas: Vec::new(),
            realized_cp: 0.0,
        };
        data.observe();
        data
    }

    /// Re-derives `Y = T ∧ C`, `δ = 1{T ≤ C}` and the censoring percentage.
    fn observe(&mut self) {
        self.ys = self
            .ts
            .iter()
            .zip(&self.cs)
            .map(|(t, c)| t.min(*c))
            .collect();
        self.deltas = self.ts.iter().zip(&self.cs).map(|(t, c)| t <= c).collect();
        let censored = self.deltas.iter().filter(|d| !**d).count();
        self.realized_cp = censored as f64 / self.ts.len().max(1) as f64;
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn to_sample(&self) -> Result<CensoredSample> {
        CensoredSample::univariate(self.xs.clone(), self.ys.clone(), self.deltas.clone())
    }

    /// CSV with header `i,x,t,c,y,delta`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "i,x,t,c,y,delta")?;
        for i in 0..self.len() {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                i,
                fmt_real(self.xs[i]),
                fmt_real(self.ts[i]),
                fmt_real(self.cs[i]),
                fmt_real(self.ys[i]),
                u8::from(self.deltas[i])
            )?;
        }
        Ok(())
    }
}

/// Draws one AR innovation under the optional contamination mixture.
pub(crate) fn draw_innovation<R: Rng>(
    rng: &mut R,
    contamination: Option<&Contamination>,
    lambda_scale: ScaleReading,
) -> f64 {
    let z: f64 = StandardNormal.sample(rng);
    match contamination {
        Some(m) if rng.random::<f64>() < m.beta => lambda_scale.std_dev(m.lambda) * z,
        _ => z,
    }
}

/// Lifetime implied by covariate `x` for the non-linear models.
fn transform(model: Model, rho: f64, x: f64) -> f64 {
    match model {
        Model::Linear => x,
        Model::Cosine => 1.0 + (PI * x / 2.0).cos(),
        Model::Exponential => (rho * rho * x).exp(),
        Model::Inverse => 1.0 / x,
    }
}

/// Generates one scenario with default [`GeneratorOptions`].
pub fn gen_process(config: &ScenarioConfig) -> Result<GeneratedData> {
    gen_process_with(config, &GeneratorOptions::default())
}

pub fn gen_process_with(
    config: &ScenarioConfig,
    options: &GeneratorOptions,
) -> Result<GeneratedData> {
    config.validate()?;
    options.validate()?;
    let (xs, ts) = lifetimes(config, options)?;
    let cs = censoring_times(
        config.censor_a,
        config.n,
        derive_seed(config.seed, stream::CENSORING),
    );
    let mut data = GeneratedData::from_parts(xs, ts, cs);
    if let Some(o) = config.outliers {
        data = inject_outliers(
            &data,
            o.count,
            o.factor,
            derive_seed(config.seed, stream::OUTLIERS),
        )?;
    }
    Ok(data)
}

/// The covariate path and lifetimes before censoring.
fn lifetimes(config: &ScenarioConfig, options: &GeneratorOptions) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = rng_for(config.seed);
    let noise = config.noise_scale();
    let contamination = config.contamination.as_ref();
    let x0_sd = options.x0_scale.std_dev(0.1);

    let z0: f64 = StandardNormal.sample(&mut rng);
    let mut prev = 1.0 + x0_sd * z0;
    for _ in 0..options.burn_in {
        prev = config.c
            + config.rho * prev
            + noise * draw_innovation(&mut rng, contamination, options.lambda_scale);
    }

    let n = config.n;
    let steps = if config.model == Model::Linear {
        n + 1
    } else {
        n
    };
    let mut path = Vec::with_capacity(steps);
    for k in 0..steps {
        // index of the lifetime this step determines, if any
        let lifetime_index = match config.model {
            Model::Linear => k.checked_sub(1),
            _ => Some(k),
        };
        let mut redraws = 0;
        let x = loop {
            let eps = draw_innovation(&mut rng, contamination, options.lambda_scale);
            let x = config.c + config.rho * prev + noise * eps;
            let Some(idx) = lifetime_index else { break x };
            let t = transform(config.model, config.rho, x);
            match options.lifetime_floor {
                Some(floor) if !(t > floor) => {
                    redraws += 1;
                    if redraws >= options.max_redraws {
                        return Err(Error::GenerationRejected {
                            index: idx,
                            value: t,
                        });
                    }
                }
                None if !(t > 0.0) => {
                    return Err(Error::GenerationRejected {
                        index: idx,
                        value: t,
                    })
                }
                _ => break x,
            }
        };
        path.push(x);
        prev = x;
    }

    let (xs, ts) = match config.model {
        Model::Linear => (path[..n].to_vec(), path[1..].to_vec()),
        m => {
            let ts = path.iter().map(|&x| transform(m, config.rho, x)).collect();
            (path, ts)
        }
    };
    Ok((xs, ts))
}

/// Mean `3 + a` of the censoring law.
pub fn censoring_mean(censor_a: f64) -> f64 {
    3.0 + censor_a
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

/// `N(μ, 1)` conditioned on `(0, ∞)` by inversion of uniform `u`; monotone in
/// both `μ` and `u`.
fn truncated_censoring_time(mu: f64, u: f64) -> f64 {
    let phi = std_normal();
    let mass = phi.cdf(mu);
    let p = (u * mass).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0);
    (mu - phi.inverse_cdf(p)).max(f64::MIN_POSITIVE)
}

fn censoring_uniforms(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed);
    // (0, 1]: avoids the zero quantile
    (0..n).map(|_| 1.0 - rng.random::<f64>()).collect()
}

fn censoring_times(censor_a: f64, n: usize, seed: u64) -> Vec<f64> {
    let mu = censoring_mean(censor_a);
    censoring_uniforms(n, seed)
        .into_iter()
        .map(|u| truncated_censoring_time(mu, u))
        .collect()
}

/// Survival function `P(C > t)` of the positive censoring law, tabulated on
/// a fine grid (for the pseudo-estimator).
pub fn censoring_survival_truth(censor_a: f64) -> Result<StepSurvival> {
    let mu = censoring_mean(censor_a);
    let phi = std_normal();
    let mass = phi.cdf(mu);
    let hi = mu.max(0.0) + 10.0;
    StepSurvival::tabulate(
        |t| {
            if t <= 0.0 {
                1.0
            } else {
                phi.cdf(mu - t) / mass
            }
        },
        0.0,
        hi,
        20_000,
    )
}

/// The target curve of the scenario's regression model.
///
/// Linear: `c + ρx + (1 − ρ²)/(c + ρx)`. The other models are deterministic in
/// `x`, so the target is the transform itself.
pub fn true_regression(model: Model, c: f64, rho: f64, x: f64) -> Result<f64> {
    match model {
        Model::Linear => {
            let mu = c + rho * x;
            if mu == 0.0 {
                return Err(Error::invalid(
                    "x",
                    "c + ρx = 0 is a pole of the linear target",
                ));
            }
            Ok(mu + (1.0 - rho * rho) / mu)
        }
        Model::Inverse if x == 0.0 => {
            Err(Error::invalid("x", "x = 0 is a pole of the inverse model"))
        }
        m => Ok(transform(m, rho, x)),
    }
}

/// Multiplies `count` lifetimes, chosen uniformly without replacement, by
/// `factor`; censoring times are kept and `Y`, `δ` re-derived.
pub fn inject_outliers(
    data: &GeneratedData,
    count: usize,
    factor: f64,
    seed: u64,
) -> Result<GeneratedData> {
    if count > data.len() {
        return Err(Error::invalid(
            "outliers.count",
            format!("{count} exceeds sample size {}", data.len()),
        ));
    }
    if !(factor > 0.0) || !factor.is_finite() {
        return Err(Error::invalid("outliers.factor", "must be positive"));
    }
    let mut rng = rng_for(seed);
    let mut out = data.clone();
    for i in index::sample(&mut rng, data.len(), count) {
        out.ts[i] *= factor;
    }
    out.observe();
    Ok(out)
}

/// Result of [`calibrate_censoring`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub censor_a: f64,
    pub achieved_cp: f64,
    pub target_cp: f64,
}

pub const CALIBRATION_BRACKET: (f64, f64) = (-20.0, 20.0);
pub const CALIBRATION_TOLERANCE: f64 = 0.02;

/// Finds `censor_a` whose Monte Carlo censoring percentage over `mc_n` draws
/// is within ±0.02 of `target_cp`, bisecting over `[-20, 20]`.
pub fn calibrate_censoring(
    config: &ScenarioConfig,
    options: &GeneratorOptions,
    target_cp: f64,
    mc_n: usize,
) -> Result<Calibration> {
    calibrate_censoring_in(config, options, target_cp, mc_n, CALIBRATION_BRACKET)
}

pub fn calibrate_censoring_in(
    config: &ScenarioConfig,
    options: &GeneratorOptions,
    target_cp: f64,
    mc_n: usize,
    bracket: (f64, f64),
) -> Result<Calibration> {
    if !(0.0..1.0).contains(&target_cp) {
        return Err(Error::invalid("target_cp", "must lie in [0, 1)"));
    }
    if mc_n == 0 {
        return Err(Error::invalid("mc_n", "must be positive"));
    }
    if !(bracket.0 < bracket.1) {
        return Err(Error::invalid(
            "bracket",
            "lower end must be below upper end",
        ));
    }
    config.validate()?;

    let ts = pooled_lifetimes(config, options, mc_n, stream::CALIBRATION)?;
    let us = censoring_uniforms(
        mc_n,
        derive_seed(config.seed, stream::CALIBRATION_CENSORING),
    );
    let cp = |a: f64| {
        let mu = censoring_mean(a);
        let censored = ts
            .iter()
            .zip(&us)
            .filter(|(t, u)| **t > truncated_censoring_time(mu, **u))
            .count();
        censored as f64 / mc_n as f64
    };

    let (mut lo, mut hi) = bracket;
    let (mut cp_lo, mut cp_hi) = (cp(lo), cp(hi));
    let (min_cp, max_cp) = (cp_hi, cp_lo);
    let fail = || Error::CalibrationFailed {
        target: target_cp,
        min_cp,
        max_cp,
    };
    if cp_lo < target_cp - CALIBRATION_TOLERANCE || cp_hi > target_cp + CALIBRATION_TOLERANCE {
        return Err(fail());
    }

    let done = |a: f64, achieved: f64| Calibration {
        censor_a: a,
        achieved_cp: achieved,
        target_cp,
    };
    if cp_lo <= target_cp {
        return Ok(done(lo, cp_lo));
    }
    if cp_hi > target_cp {
        return Ok(done(hi, cp_hi));
    }
    // invariant: cp(lo) > target ≥ cp(hi)
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = cp(mid);
        if v > target_cp {
            lo = mid;
            cp_lo = v;
        } else {
            hi = mid;
            cp_hi = v;
        }
    }
    let best = if (cp_lo - target_cp).abs() < (target_cp - cp_hi).abs() {
        done(lo, cp_lo)
    } else {
        done(hi, cp_hi)
    };
    if (best.achieved_cp - target_cp).abs() > CALIBRATION_TOLERANCE {
        return Err(fail());
    }
    Ok(best)
}

/// Monte Carlo censoring percentage of `config` over about `count`
/// observations from fresh paths seeded on `stream_base`.
pub fn realized_censoring(
    config: &ScenarioConfig,
    options: &GeneratorOptions,
    count: usize,
    stream_base: u64,
) -> Result<f64> {
    let per_path = config.n;
    let paths = count.div_ceil(per_path);
    let mut censored = 0usize;
    let mut total = 0usize;
    for p in 0..paths {
        let seed = derive_seed(config.seed, stream_base.wrapping_add(p as u64));
        let cfg = ScenarioConfig {
            seed,
            ..config.clone()
        };
        let data = gen_with_retries(&cfg, options, DEFAULT_MAX_ATTEMPTS)?.0;
        censored += data.deltas.iter().filter(|d| !**d).count();
        total += data.len();
    }
    Ok(censored as f64 / total as f64)
}

/// Concatenated lifetimes of independent paths of length `config.n`.
fn pooled_lifetimes(
    config: &ScenarioConfig,
    options: &GeneratorOptions,
    count: usize,
    stream_base: u64,
) -> Result<Vec<f64>> {
    let mut ts = Vec::with_capacity(count);
    let mut p = 0u64;
    while ts.len() < count {
        let seed = derive_seed(config.seed, stream_base.wrapping_add(p));
        let cfg = ScenarioConfig {
            seed,
            ..config.clone()
        };
        ts.extend(gen_with_retries(&cfg, options, DEFAULT_MAX_ATTEMPTS)?.0.ts);
        p += 1;
    }
    ts.truncate(count);
    Ok(ts)
}

pub const DEFAULT_MAX_ATTEMPTS: usize = 200;

/// Generates `config`, re-seeding after a positivity rejection. Attempt 0 uses
/// the scenario seed itself; attempt `k` uses `derive_seed(seed, RETRY + k)`.
/// Returns the data and the number of attempts made.
pub fn gen_with_retries(
    config: &ScenarioConfig,
    options: &GeneratorOptions,
    max_attempts: usize,
) -> Result<(GeneratedData, usize)> {
    let mut last = None;
    for attempt in 0..max_attempts.max(1) {
        let seed = if attempt == 0 {
            config.seed
        } else {
            derive_seed(config.seed, stream::RETRY + attempt as u64)
        };
        let cfg = ScenarioConfig {
            seed,
            ..config.clone()
        };
        match gen_process_with(&cfg, options) {
            Ok(d) => return Ok((d, attempt + 1)),
            Err(e @ Error::GenerationRejected { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn linear(n: usize, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            model: Model::Linear,
            c: 3.0,
            rho: 0.1,
            n,
            censor_a: 0.0,
            outliers: None,
            contamination: None,
            seed,
        }
    }

    fn floored() -> GeneratorOptions {
        GeneratorOptions {
            lifetime_floor: Some(1.0),
            ..Default::default()
        }
    }

    #[test]
    fn validation_names_fields() {
        let mut c = linear(10, 1);
        c.rho = 1.5;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("rho"), "{msg}");
        c.rho = 0.0;
        assert!(c.validate().is_err());
        let mut c = linear(10, 1);
        c.outliers = Some(Outliers {
            count: 11,
            factor: 2.0,
        });
        assert!(c
            .validate()
            .unwrap_err()
            .to_string()
            .contains("outliers.count"));
        let mut c = linear(10, 1);
        c.contamination = Some(Contamination {
            beta: 1.0,
            lambda: 3.0,
        });
        assert!(c.validate().is_err());
        assert!(linear(0, 1).validate().is_err());
    }

    #[test]
    fn config_json_round_trip_and_unknown_keys() {
        let c = ScenarioConfig {
            outliers: Some(Outliers {
                count: 20,
                factor: 10.0,
            }),
            contamination: Some(Contamination {
                beta: 0.05,
                lambda: 3.0,
            }),
            ..linear(300, 42)
        };
        let text = serde_json::to_string(&c).unwrap();
        for key in [
            "model",
            "c",
            "rho",
            "n",
            "censor_a",
            "outliers",
            "contamination",
            "seed",
        ] {
            assert!(
                text.contains(&format!("\"{key}\"")),
                "{key} missing from {text}"
            );
        }
        assert_eq!(serde_json::from_str::<ScenarioConfig>(&text).unwrap(), c);
        let bad = text.replacen("\"rho\"", "\"rh0\"", 1);
        assert!(serde_json::from_str::<ScenarioConfig>(&bad).is_err());
    }

    #[test]
    fn deterministic() {
        let c = linear(200, 9);
        assert_eq!(
            gen_process_with(&c, &floored()).unwrap(),
            gen_process_with(&c, &floored()).unwrap()
        );
        let other = ScenarioConfig {
            seed: 10,
            ..c.clone()
        };
        assert_ne!(
            gen_process_with(&c, &floored()).unwrap(),
            gen_process_with(&other, &floored()).unwrap()
        );
    }

    #[test]
    fn observation_invariants() {
        let mut c = linear(500, 3);
        c.outliers = Some(Outliers {
            count: 20,
            factor: 10.0,
        });
        let d = gen_process_with(&c, &floored()).unwrap();
        for i in 0..d.len() {
            assert_eq!(d.ys[i], d.ts[i].min(d.cs[i]));
            assert_eq!(d.deltas[i], d.ts[i] <= d.cs[i]);
            assert!(d.cs[i] > 0.0);
            assert!(d.ts[i] > 1.0);
        }
        let cp = d.deltas.iter().filter(|x| !**x).count() as f64 / d.len() as f64;
        assert_eq!(d.realized_cp, cp);
    }

    #[test]
    fn linear_lifetime_is_next_state() {
        let d = gen_process_with(&linear(50, 5), &floored()).unwrap();
        assert_eq!(&d.ts[..49], &d.xs[1..]);
    }

    #[test]
    fn large_censor_shift_removes_censoring() {
        let mut c = linear(300, 4);
        c.censor_a = 100.0;
        let d = gen_process_with(&c, &floored()).unwrap();
        assert_eq!(d.realized_cp, 0.0);
        assert!(d.deltas.iter().all(|x| *x));
    }

    #[test]
    fn negative_lifetime_rejects_path() {
        let c = ScenarioConfig {
            c: 0.0,
            rho: 0.5,
            ..linear(200, 1)
        };
        assert!(matches!(
            gen_process(&c),
            Err(Error::GenerationRejected { .. })
        ));
        let c = ScenarioConfig {
            model: Model::Inverse,
            c: 0.0,
            rho: 0.5,
            ..linear(200, 1)
        };
        assert!(matches!(
            gen_process(&c),
            Err(Error::GenerationRejected { .. })
        ));
    }

    #[test]
    fn retries_reseed_after_rejection() {
        // P(X < 0) ≈ 4e-4 per step, so long paths are usually rejected at first.
        let c = linear(3000, 2);
        let (d, attempts) = gen_with_retries(&c, &GeneratorOptions::default(), 500).unwrap();
        assert!(d.ts.iter().all(|t| *t > 0.0));
        assert!(attempts >= 1);
    }

    #[test]
    fn stationary_mean_and_autocorrelation() {
        // Cosine keeps the raw AR path without positivity constraints.
        let c = ScenarioConfig {
            model: Model::Cosine,
            c: 1.0,
            rho: 0.3,
            ..linear(100_000, 11)
        };
        let d = gen_process(&c).unwrap();
        let n = d.xs.len() as f64;
        let mean = d.xs.iter().sum::<f64>() / n;
        assert!((mean - 1.0 / 0.7).abs() < 0.02, "mean {mean}");
        let var = d.xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let lag1 =
            d.xs.windows(2)
                .map(|w| (w[0] - mean) * (w[1] - mean))
                .sum::<f64>()
                / n;
        assert!((lag1 / var - 0.3).abs() < 0.02, "acf {}", lag1 / var);
    }

    #[test]
    fn contaminated_innovation_variance() {
        let (beta, lambda) = (0.1, 3.0);
        let c = ScenarioConfig {
            model: Model::Cosine,
            c: 1.0,
            rho: 0.5,
            contamination: Some(Contamination { beta, lambda }),
            ..linear(100_000, 12)
        };
        let d = gen_process(&c).unwrap();
        let s = c.noise_scale();
        let eps: Vec<f64> =
            d.xs.windows(2)
                .map(|w| (w[1] - c.c - c.rho * w[0]) / s)
                .collect();
        let m = eps.len() as f64;
        let var = eps.iter().map(|e| e * e).sum::<f64>() / m;
        let expected = (1.0 - beta) + beta * lambda * lambda;
        // fourth moment of the mixture: 3[(1-β) + βλ⁴]
        let m4 = 3.0 * ((1.0 - beta) + beta * lambda.powi(4));
        let se = ((m4 - expected * expected) / m).sqrt();
        assert!(
            (var - expected).abs() < 3.0 * se,
            "var {var} vs {expected} (se {se})"
        );
    }

    #[test]
    fn true_regression_values() {
        assert_abs_diff_eq!(
            true_regression(Model::Linear, 3.0, 0.1, 1.0).unwrap(),
            3.1 + 0.99 / 3.1,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            true_regression(Model::Linear, 3.0, 0.1, 1.0).unwrap(),
            3.419355,
            epsilon = 1e-6
        );
        assert_eq!(true_regression(Model::Inverse, 3.0, 0.1, 2.0).unwrap(), 0.5);
        assert_eq!(true_regression(Model::Cosine, 3.0, 0.1, 0.0).unwrap(), 2.0);
        assert_abs_diff_eq!(
            true_regression(Model::Exponential, 0.0, 0.5, 2.0).unwrap(),
            0.5f64.exp()
        );
        assert!(true_regression(Model::Inverse, 3.0, 0.1, 0.0).is_err());
        assert!(true_regression(Model::Linear, -1.0, 0.5, 2.0).is_err());
    }

    #[test]
    fn outlier_injection() {
        let d = gen_process_with(&linear(300, 21), &floored()).unwrap();
        let same = inject_outliers(&d, 20, 1.0, 5).unwrap();
        assert_eq!(same, d);
        let all = inject_outliers(&d, 300, 10.0, 5).unwrap();
        for i in 0..300 {
            assert_eq!(all.ts[i], d.ts[i] * 10.0);
            assert_eq!(all.cs[i], d.cs[i]);
        }
        let some = inject_outliers(&d, 20, 10.0, 5).unwrap();
        assert_eq!(
            some.ts.iter().zip(&d.ts).filter(|(a, b)| a != b).count(),
            20
        );
        assert!(inject_outliers(&d, 301, 10.0, 5).is_err());
    }

    #[test]
    fn censoring_truth_matches_draws() {
        let g = censoring_survival_truth(0.5).unwrap();
        let cs = censoring_times(0.5, 50_000, 77);
        for t in [2.5, 3.5, 4.5] {
            let emp = cs.iter().filter(|c| **c > t).count() as f64 / cs.len() as f64;
            assert!((g.at(t) - emp).abs() < 0.01);
        }
        // strongly negative shift: still positive times
        assert!(censoring_times(-20.0, 100, 1).iter().all(|c| *c > 0.0));
    }

    #[test]
    fn censoring_percentage_is_monotone_in_shift() {
        let opts = floored();
        let mut prev = 1.0;
        for k in 0..=12 {
            let a = -3.0 + 0.5 * k as f64;
            let c = ScenarioConfig {
                censor_a: a,
                ..linear(10_000, 8)
            };
            let cp = gen_process_with(&c, &opts).unwrap().realized_cp;
            assert!(cp <= prev, "a={a}: {cp} > {prev}");
            prev = cp;
        }
    }

    #[test]
    fn calibration_limits() {
        let c = linear(300, 13);
        let opts = floored();
        let zero = calibrate_censoring(&c, &opts, 0.0, 5_000).unwrap();
        assert!(zero.achieved_cp <= 0.02);
        assert!(matches!(
            calibrate_censoring_in(&c, &opts, 0.999, 5_000, (-2.0, 2.0)),
            Err(Error::CalibrationFailed { .. })
        ));
        assert!(calibrate_censoring(&c, &opts, 1.0, 5_000).is_err());
    }

    #[test]
    fn calibration_hits_forty_percent() {
        let c = linear(300, 14);
        let opts = floored();
        let cal = calibrate_censoring(&c, &opts, 0.40, 10_000).unwrap();
        assert!((cal.achieved_cp - 0.40).abs() <= 0.02);
        let fresh = ScenarioConfig {
            censor_a: cal.censor_a,
            seed: 999,
            ..c
        };
        let cp = realized_censoring(&fresh, &opts, 10_000, 0xf00d).unwrap();
        assert!((cp - 0.40).abs() <= 0.03, "fresh cp {cp}");
    }
}
