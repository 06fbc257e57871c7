//! Censored samples and the Kaplan–Meier estimate of the censoring survival
//! function `Ḡ(t) = P(C > t)`.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_real;

/// Observed triples `(Xᵢ, Yᵢ, δᵢ)` with `Yᵢ = Tᵢ ∧ Cᵢ` and `δᵢ = 1{Tᵢ ≤ Cᵢ}`.
///
/// Covariates are stored row-major, `dim` values per observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CensoredSample {
    xs: Vec<f64>,
    dim: usize,
    ys: Vec<f64>,
    deltas: Vec<bool>,
}

impl CensoredSample {
    pub fn new(xs: Vec<f64>, dim: usize, ys: Vec<f64>, deltas: Vec<bool>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid(
                "dim",
                "covariate dimension must be positive",
            ));
        }
        if ys.is_empty() {
            return Err(Error::EmptySample);
        }
        if deltas.len() != ys.len() {
            return Err(Error::DimensionMismatch {
                expected: ys.len(),
                got: deltas.len(),
            });
        }
        if xs.len() != ys.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: ys.len() * dim,
                got: xs.len(),
            });
        }
        if let Some(bad) = xs.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(
                "xs",
                format!("covariates must be finite, got {bad}"),
            ));
        }
        if let Some((i, y)) = ys
            .iter()
            .enumerate()
            .find(|(_, y)| !(**y > 0.0) || !y.is_finite())
        {
            return Err(Error::invalid(
                "ys",
                format!("observed times must be finite and strictly positive; ys[{i}] = {y}"),
            ));
        }
        Ok(Self {
            xs,
            dim,
            ys,
            deltas,
        })
    }

    /// One-dimensional covariates.
    pub fn univariate(xs: Vec<f64>, ys: Vec<f64>, deltas: Vec<bool>) -> Result<Self> {
        Self::new(xs, 1, ys, deltas)
    }

    pub fn len(&self) -> usize {
        self.ys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ys.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.xs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn deltas(&self) -> &[bool] {
        &self.deltas
    }

    pub fn censored_fraction(&self) -> f64 {
        self.deltas.iter().filter(|d| !**d).count() as f64 / self.len() as f64
    }

    /// Copy of the sample with row `i` removed. Panics if that would leave it empty.
    pub fn without_row(&self, i: usize) -> CensoredSample {
        assert!(self.len() >= 2, "cannot remove the only row");
        let mut xs = self.xs.clone();
        xs.drain(i * self.dim..(i + 1) * self.dim);
        let mut ys = self.ys.clone();
        ys.remove(i);
        let mut deltas = self.deltas.clone();
        deltas.remove(i);
        CensoredSample {
            xs,
            dim: self.dim,
            ys,
            deltas,
        }
    }

    /// Row order used by the product-limit estimator: ascending `Y`, uncensored
    /// before censored at tied times, then original index.
    pub(crate) fn km_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.sort_by(|&a, &b| {
            self.ys[a]
                .partial_cmp(&self.ys[b])
                .unwrap_or(Ordering::Equal)
                .then_with(|| self.deltas[b].cmp(&self.deltas[a]))
                .then_with(|| a.cmp(&b))
        });
        idx
    }
}

/// Right-continuous, non-increasing step function with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSurvival {
    jump_times: Vec<f64>,
    values_after: Vec<f64>,
    value_before_first: f64,
}

impl StepSurvival {
    pub fn new(
        jump_times: Vec<f64>,
        values_after: Vec<f64>,
        value_before_first: f64,
    ) -> Result<Self> {
        if jump_times.len() != values_after.len() {
            return Err(Error::DimensionMismatch {
                expected: jump_times.len(),
                got: values_after.len(),
            });
        }
        if jump_times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("jump_times", "must be finite"));
        }
        if jump_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("jump_times", "must be strictly increasing"));
        }
        let in_unit = |v: f64| (0.0..=1.0).contains(&v);
        if !in_unit(value_before_first) || !values_after.iter().all(|&v| in_unit(v)) {
            return Err(Error::invalid("values_after", "values must lie in [0, 1]"));
        }
        let mut prev = value_before_first;
        for &v in &values_after {
            if v > prev {
                return Err(Error::invalid(
                    "values_after",
                    "curve must be non-increasing",
                ));
            }
            prev = v;
        }
        Ok(Self {
            jump_times,
            values_after,
            value_before_first,
        })
    }

    /// The constant function `c`.
    pub fn constant(c: f64) -> Result<Self> {
        Self::new(Vec::new(), Vec::new(), c)
    }

    /// Tabulates a non-increasing survival function on `[lo, hi]` with `steps`
    /// equal intervals. The value on `[tₖ, tₖ₊₁)` is `f(tₖ)`; below `lo` it is
    /// `f(lo)`.
    pub fn tabulate(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if !(hi > lo) || steps == 0 {
            return Err(Error::invalid(
                "steps",
                "need hi > lo and at least one step",
            ));
        }
        let width = (hi - lo) / steps as f64;
        let first = f(lo).clamp(0.0, 1.0);
        let mut prev = first;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for k in 1..=steps {
            let t = lo + k as f64 * width;
            let v = f(t).clamp(0.0, 1.0).min(prev);
            if v < prev {
                times.push(t);
                values.push(v);
                prev = v;
            }
        }
        Self::new(times, values, first)
    }

    pub fn jump_times(&self) -> &[f64] {
        &self.jump_times
    }

    pub fn values_after(&self) -> &[f64] {
        &self.values_after
    }

    pub fn value_before_first(&self) -> f64 {
        self.value_before_first
    }

    /// Right-continuous evaluation `Ḡ(t)`.
    pub fn survival_at(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.at(t))
    }

    /// Left limit `Ḡ(t⁻)`.
    pub fn survival_at_left(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.at_left(t))
    }

    #[inline]
    pub(crate) fn at(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&j| j <= t) {
            0 => self.value_before_first,
            k => self.values_after[k - 1],
        }
    }

    #[inline]
    pub(crate) fn at_left(&self, t: f64) -> f64 {
        match self.jump_times.partition_point(|&j| j < t) {
            0 => self.value_before_first,
            k => self.values_after[k - 1],
        }
    }

    /// CSV with header `t_jump,value_after`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "t_jump,value_after")?;
        for (t, v) in self.jump_times.iter().zip(&self.values_after) {
            writeln!(out, "{},{}", fmt_real(*t), fmt_real(*v))?;
        }
        Ok(())
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid("t", format!("must be finite, got {t}")))
    }
}

/// Product-limit estimate of the censoring survival function:
///
/// `Ḡₙ(t) = ∏ᵢ (1 − (1 − δ₍ᵢ₎)/(n − i + 1))^{1{Y₍ᵢ₎ ≤ t}}` for `t < Y₍ₙ₎`, and
/// `0` for `t ≥ Y₍ₙ₎`.
///
/// Uncensored observations contribute a factor of one, so the curve only
/// drops at censored times, plus the terminal drop to zero at `Y₍ₙ₎`.
pub fn km_censoring_survival(sample: &CensoredSample) -> Result<StepSurvival> {
    let n = sample.len();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let order = sample.km_order();
    let y_max = sample.ys[order[n - 1]];

    let mut times = Vec::new();
    let mut values = Vec::new();
    let mut current = 1.0f64;
    for (pos, &row) in order.iter().enumerate() {
        let y = sample.ys[row];
        if y >= y_max {
            break;
        }
        if !sample.deltas[row] {
            let at_risk = (n - pos) as f64;
            current *= 1.0 - 1.0 / at_risk;
            match times.last() {
                Some(&last) if last == y => *values.last_mut().unwrap() = current,
                _ => {
                    times.push(y);
                    values.push(current);
                }
            }
        }
    }
    times.push(y_max);
    values.push(0.0);
    StepSurvival::new(times, values, 1.0)
}
