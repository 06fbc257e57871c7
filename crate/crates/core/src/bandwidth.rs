//! Leave-one-out cross-validation of the bandwidth over a finite grid.
//!
//! `CV(h) = (1/(n − 1)) Σᵢ (Yᵢ − m̂₋ᵢ,ₕ(Xᵢ))²`, where `m̂₋ᵢ,ₕ` is the estimator
//! computed without row `i`. The censoring curve is fitted once on the full
//! sample and reused for every deletion unless `refit_gbar` is set.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_cell, fmt_real};
use crate::kernels::{check_bandwidth, KernelSpec};
use crate::regression::{ipcw_weight, EstimatorKind, WeightedSample};
use crate::survival::{km_censoring_survival, CensoredSample, StepSurvival};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for BandwidthGrid {
    /// `{0.01, 0.02, …, 2.00}`
    fn default() -> Self {
        Self {
            lo: 0.01,
            hi: 2.0,
            step: 0.01,
        }
    }
}

impl BandwidthGrid {
    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let g = Self { lo, hi, step };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lo > 0.0) || !self.lo.is_finite() {
            return Err(Error::invalid("bandwidth_grid.lo", "must be positive"));
        }
        if !(self.hi >= self.lo) || !self.hi.is_finite() {
            return Err(Error::invalid("bandwidth_grid.hi", "must be at least lo"));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::invalid("bandwidth_grid.step", "must be positive"));
        }
        Ok(())
    }

    /// `lo + k·step` for `k = 0, 1, …` while not exceeding `hi` (with a relative
    /// slack of 1e-9 steps so that `hi` itself is reached despite rounding).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1;
        (0..count).map(|k| self.lo + k as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvLoss {
    /// `(Yᵢ − m̂₋ᵢ)²`
    #[default]
    Squared,
    /// `((Yᵢ − m̂₋ᵢ)/Yᵢ)²`, the loss the relative-error estimator minimises.
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvOptions {
    pub loss: CvLoss,
    /// Multiply each term by `δᵢ/Ḡₙ(Yᵢ)`.
    pub weighted: bool,
    /// Refit the Kaplan–Meier curve on each reduced sample.
    pub refit_gbar: bool,
}

/// Outcome of [`cv_select`]: the minimiser and the whole criterion curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSelection {
    pub h_opt: f64,
    pub h: Vec<f64>,
    /// `None` where every leave-one-out estimate was undefined.
    pub cv: Vec<Option<f64>>,
    pub n_skipped: Vec<usize>,
}

impl CvSelection {
    /// Observations skipped at the selected bandwidth.
    pub fn skipped_at_opt(&self) -> usize {
        let k = self.h.iter().position(|&h| h == self.h_opt).unwrap_or(0);
        self.n_skipped[k]
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "h,cv,n_skipped")?;
        for ((h, cv), skipped) in self.h.iter().zip(&self.cv).zip(&self.n_skipped) {
            writeln!(out, "{},{},{}", fmt_real(*h), fmt_cell(*cv), skipped)?;
        }
        Ok(())
    }
}

/// The estimator of `kind` on `sample` without row `i`, evaluated at `Xᵢ`.
/// `gbar` is reused as given (not refitted).
pub fn loo_estimate(
    sample: &CensoredSample,
    gbar: &StepSurvival,
    spec: KernelSpec,
    h: f64,
    i: usize,
    kind: EstimatorKind,
) -> Result<f64> {
    if sample.len() < 2 {
        return Err(Error::invalid(
            "sample",
            "leave-one-out needs at least two rows",
        ));
    }
    if i >= sample.len() {
        return Err(Error::invalid("i", format!("row {i} out of range")));
    }
    check_bandwidth(h)?;
    let reduced = sample.without_row(i);
    let fitted = WeightedSample::new(&reduced, gbar, spec)?;
    estimate(&fitted, kind, h, sample.x(i))
}

fn estimate(fitted: &WeightedSample<'_>, kind: EstimatorKind, h: f64, x: &[f64]) -> Result<f64> {
    match kind {
        EstimatorKind::RerHat | EstimatorKind::RerPseudo => fitted.rer(h, x),
        EstimatorKind::Cr => fitted.cr(h, x),
    }
}

/// Selects `h` minimising the cross-validation criterion over `grid`.
///
/// Rows whose leave-one-out estimate is undefined are skipped and the divisor
/// `n − 1` is reduced by the number skipped. Ties (values equal up to
/// [`cv_values_tie`]) go to the smallest `h`.
pub fn cv_select(
    sample: &CensoredSample,
    gbar: &StepSurvival,
    spec: KernelSpec,
    grid: &BandwidthGrid,
    kind: EstimatorKind,
    options: CvOptions,
) -> Result<CvSelection> {
    let n = sample.len();
    if n < 2 {
        return Err(Error::invalid(
            "sample",
            "cross-validation needs at least two rows",
        ));
    }
    grid.validate()?;
    let hs = grid.points();

    let loo = if options.refit_gbar {
        loo_refit(sample, spec, &hs, kind)?
    } else {
        loo_shared(&WeightedSample::new(sample, gbar, spec)?, &hs, kind)
    };

    let term_weights: Vec<f64> = (0..n)
        .map(|i| {
            if !options.weighted {
                1.0
            } else if sample.deltas()[i] {
                ipcw_weight(gbar, sample.ys()[i]).unwrap_or(0.0)
            } else {
                0.0
            }
        })
        .collect();

    let mut cv = Vec::with_capacity(hs.len());
    let mut n_skipped = Vec::with_capacity(hs.len());
    for k in 0..hs.len() {
        let mut total = 0.0;
        let mut skipped = 0;
        for i in 0..n {
            match loo[i * hs.len() + k] {
                Some(m) => total += term_weights[i] * loss(options.loss, sample.ys()[i], m),
                None => skipped += 1,
            }
        }
        n_skipped.push(skipped);
        cv.push((skipped < n).then(|| total / ((n - 1).saturating_sub(skipped)).max(1) as f64));
    }

    let scale = tie_scale(sample, options.loss);
    let mut best: Option<(usize, f64)> = None;
    for (k, v) in cv.iter().enumerate() {
        if let Some(v) = *v {
            match best {
                Some((_, b)) if !(v < b) || cv_values_tie(v, b, scale) => {}
                _ => best = Some((k, v)),
            }
        }
    }
    let (k_opt, _) = best.ok_or(Error::SelectionFailed)?;
    Ok(CvSelection {
        h_opt: hs[k_opt],
        h: hs,
        cv,
        n_skipped,
    })
}

fn loss(kind: CvLoss, y: f64, m: f64) -> f64 {
    match kind {
        CvLoss::Squared => (y - m) * (y - m),
        CvLoss::Relative => ((y - m) / y) * ((y - m) / y),
    }
}

/// Magnitude below which criterion differences are rounding noise: the
/// square of a few ulps of the typical response.
pub fn tie_scale(sample: &CensoredSample, loss: CvLoss) -> f64 {
    match loss {
        CvLoss::Squared => sample.ys().iter().map(|y| y * y).sum::<f64>() / sample.len() as f64,
        CvLoss::Relative => 1.0,
    }
}

/// Whether two criterion values are equal for selection purposes.
pub fn cv_values_tie(a: f64, b: f64, scale: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()) + 1e-20 * scale
}

/// Leave-one-out estimates `[i * H + k]` for every row and grid bandwidth with
/// shared weights. Row sums are accumulated in index order, so each value is
/// bit-identical to [`loo_estimate`].
fn loo_shared(fitted: &WeightedSample<'_>, hs: &[f64], kind: EstimatorKind) -> Vec<Option<f64>> {
    let n = fitted.sample().len();
    let threads = rayon::current_num_threads().max(1);
    let chunk = hs.len().div_ceil(threads).max(1);
    let blocks: Vec<Vec<Option<f64>>> = hs
        .par_chunks(chunk)
        .map(|block| loo_block(fitted, block, kind))
        .collect();

    let mut out = vec![None; n * hs.len()];
    let mut offset = 0;
    for block in blocks {
        let width = block.len() / n;
        for i in 0..n {
            out[i * hs.len() + offset..i * hs.len() + offset + width]
                .copy_from_slice(&block[i * width..(i + 1) * width]);
        }
        offset += width;
    }
    out
}

fn loo_block(fitted: &WeightedSample<'_>, hs: &[f64], kind: EstimatorKind) -> Vec<Option<f64>> {
    let sample = fitted.sample();
    let spec = fitted.kernel();
    let n = sample.len();
    let width = hs.len();
    let rer = kind != EstimatorKind::Cr;
    let (resp_num, resp_den) = if rer {
        (&fitted.inv1, Some(&fitted.inv2))
    } else {
        (&fitted.lin, None)
    };

    let mut num = vec![0.0; n * width];
    let mut den = vec![0.0; n * width];
    for i in 0..n {
        let xi = sample.x(i);
        for j in (i + 1)..n {
            let xj = sample.x(j);
            for (k, &h) in hs.iter().enumerate() {
                let kv = spec.scaled(xi, xj, h);
                if kv == 0.0 {
                    continue;
                }
                let (a, b) = (i * width + k, j * width + k);
                num[a] += kv * resp_num[j];
                num[b] += kv * resp_num[i];
                match resp_den {
                    Some(d) => {
                        den[a] += kv * d[j];
                        den[b] += kv * d[i];
                    }
                    None => {
                        den[a] += kv;
                        den[b] += kv;
                    }
                }
            }
        }
    }
    num.iter()
        .zip(&den)
        .map(|(&a, &b)| (b > 0.0 && b.is_finite()).then(|| a / b))
        .collect()
}

fn loo_refit(
    sample: &CensoredSample,
    spec: KernelSpec,
    hs: &[f64],
    kind: EstimatorKind,
) -> Result<Vec<Option<f64>>> {
    let n = sample.len();
    let rows: Vec<Vec<Option<f64>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let reduced = sample.without_row(i);
            let g = km_censoring_survival(&reduced)?;
            let fitted = WeightedSample::new(&reduced, &g, spec)?;
            hs.iter()
                .map(|&h| match estimate(&fitted, kind, h, sample.x(i)) {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::EstimationUndefined { .. }) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().flatten().collect())
}
