//! Kernel estimators of the regression function under right censoring.
//!
//! * relative-error regression (RER): `m̂(x) = Σ δᵢYᵢ⁻¹wᵢKᵢ / Σ δᵢYᵢ⁻²wᵢKᵢ`
//! * the pseudo-estimator: same ratio with the true censoring survival
//! * classical regression (CR): `μₙ(x) = Σ δᵢYᵢwᵢKᵢ / Σ Kᵢ`
//!
//! where `Kᵢ = K_d((x − Xᵢ)/h)` and `wᵢ = 1/Ḡ(Yᵢ)` is the inverse probability of
//! censoring weight.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::{fmt_cell, fmt_real};
use crate::kernels::{check_bandwidth, KernelSpec};
use crate::survival::{CensoredSample, StepSurvival};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    RerHat,
    RerPseudo,
    Cr,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 3] = [Self::RerHat, Self::RerPseudo, Self::Cr];

    pub fn column(self) -> &'static str {
        match self {
            Self::RerHat => "m_rer",
            Self::RerPseudo => "m_pseudo",
            Self::Cr => "m_cr",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RerHat => "rer_hat",
            Self::RerPseudo => "rer_pseudo",
            Self::Cr => "cr",
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Inverse censoring weight `1/Ḡ(y)` for an uncensored observation.
///
/// `Ḡ(y) = 0` can only happen at the largest observation (the estimator clamps
/// to zero there); the left limit is used instead, and if that is zero too the
/// term is dropped (`None`).
pub(crate) fn ipcw_weight(gbar: &StepSurvival, y: f64) -> Option<f64> {
    let mut g = gbar.at(y);
    if g == 0.0 {
        g = gbar.at_left(y);
    }
    (g > 0.0).then(|| 1.0 / g)
}

/// A sample with its censoring weights folded into per-row responses.
#[derive(Debug, Clone)]
pub struct WeightedSample<'a> {
    sample: &'a CensoredSample,
    kernel: KernelSpec,
    /// `δᵢ wᵢ / Yᵢ`
    pub(crate) inv1: Vec<f64>,
    /// `δᵢ wᵢ / Yᵢ²`
    pub(crate) inv2: Vec<f64>,
    /// `δᵢ wᵢ Yᵢ`
    pub(crate) lin: Vec<f64>,
}

impl<'a> WeightedSample<'a> {
    pub fn new(
        sample: &'a CensoredSample,
        gbar: &StepSurvival,
        kernel: KernelSpec,
    ) -> Result<Self> {
        if kernel.dim != sample.dim() {
            return Err(Error::DimensionMismatch {
                expected: sample.dim(),
                got: kernel.dim,
            });
        }
        let n = sample.len();
        let (mut inv1, mut inv2, mut lin) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        for i in 0..n {
            if !sample.deltas()[i] {
                continue;
            }
            let y = sample.ys()[i];
            if let Some(w) = ipcw_weight(gbar, y) {
                inv1[i] = w / y;
                inv2[i] = w / (y * y);
                lin[i] = w * y;
            }
        }
        Ok(Self {
            sample,
            kernel,
            inv1,
            inv2,
            lin,
        })
    }

    pub fn sample(&self) -> &CensoredSample {
        self.sample
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub(crate) fn kernel_weight(&self, i: usize, x: &[f64], h: f64) -> f64 {
        self.kernel.scaled(x, self.sample.x(i), h)
    }

    fn check(&self, h: f64, x: &[f64]) -> Result<()> {
        check_bandwidth(h)?;
        self.kernel.check_point(x)
    }

    /// Relative-error estimate `m̂(x)`.
    pub fn rer(&self, h: f64, x: &[f64]) -> Result<f64> {
        self.check(h, x)?;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.sample.len() {
            if self.inv2[i] == 0.0 {
                continue;
            }
            let k = self.kernel_weight(i, x, h);
            num += k * self.inv1[i];
            den += k * self.inv2[i];
        }
        ratio_or_undefined(num, den, x)
    }

    /// Classical estimate `μₙ(x)`; the denominator runs over every row.
    pub fn cr(&self, h: f64, x: &[f64]) -> Result<f64> {
        self.check(h, x)?;
        let (mut num, mut den) = (0.0, 0.0);
        for i in 0..self.sample.len() {
            let k = self.kernel_weight(i, x, h);
            num += k * self.lin[i];
            den += k;
        }
        ratio_or_undefined(num, den, x)
    }
}

fn ratio_or_undefined(num: f64, den: f64, x: &[f64]) -> Result<f64> {
    if den > 0.0 && den.is_finite() {
        Ok(num / den)
    } else {
        Err(Error::EstimationUndefined { x: x.to_vec() })
    }
}

/// `m̂(x)` with `Ḡₙ` estimated from the data.
pub fn rer_estimate(
    sample: &CensoredSample,
    gbar: &StepSurvival,
    spec: KernelSpec,
    h: f64,
    x: &[f64],
) -> Result<f64> {
    WeightedSample::new(sample, gbar, spec)?.rer(h, x)
}

/// `m̃(x)`: identical to [`rer_estimate`] but weighted by the known `Ḡ`.
pub fn rer_pseudo_estimate(
    sample: &CensoredSample,
    gbar_true: &StepSurvival,
    spec: KernelSpec,
    h: f64,
    x: &[f64],
) -> Result<f64> {
    rer_estimate(sample, gbar_true, spec, h, x)
}

pub fn cr_estimate(
    sample: &CensoredSample,
    gbar: &StepSurvival,
    spec: KernelSpec,
    h: f64,
    x: &[f64],
) -> Result<f64> {
    WeightedSample::new(sample, gbar, spec)?.cr(h, x)
}

/// Kernel density estimate `(1/(n hᵈ)) Σ K_d((x − Xᵢ)/h)` of the covariates.
pub fn density_estimate(
    sample: &CensoredSample,
    spec: KernelSpec,
    h: f64,
    x: &[f64],
) -> Result<f64> {
    check_bandwidth(h)?;
    spec.check_point(x)?;
    if spec.dim != sample.dim() {
        return Err(Error::DimensionMismatch {
            expected: sample.dim(),
            got: spec.dim,
        });
    }
    let sum: f64 = (0..sample.len())
        .map(|i| spec.scaled(x, sample.x(i), h))
        .sum();
    Ok(sum / (sample.len() as f64 * h.powi(spec.dim as i32)))
}

/// Censoring survival curves handed to grid evaluation.
#[derive(Debug, Clone, Copy)]
pub struct CensoringCurves<'a> {
    /// Kaplan–Meier estimate, used by `RerHat` and `Cr`.
    pub estimated: &'a StepSurvival,
    /// Known survival of the censoring law, required by `RerPseudo`.
    pub truth: Option<&'a StepSurvival>,
}

/// Estimates over a set of evaluation points. Undefined points are `None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalGrid {
    pub points: Vec<Vec<f64>>,
    pub truth: Option<Vec<f64>>,
    pub estimates: BTreeMap<EstimatorKind, Vec<Option<f64>>>,
    pub undefined: BTreeMap<EstimatorKind, usize>,
    pub h_used: f64,
    pub n_used: usize,
}

impl EvalGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn estimate(&self, kind: EstimatorKind) -> Result<&[Option<f64>]> {
        self.estimates
            .get(&kind)
            .map(Vec::as_slice)
            .ok_or(Error::MissingEstimate(kind.name()))
    }

    /// CSV with header `x` (or `x_1..x_d`), optional `m_true`, then one column
    /// per estimator. Undefined estimates are empty cells.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let d = self.dim();
        let mut header: Vec<String> = if d == 1 {
            vec!["x".into()]
        } else {
            (1..=d).map(|j| format!("x_{j}")).collect()
        };
        if self.truth.is_some() {
            header.push("m_true".into());
        }
        header.extend(self.estimates.keys().map(|k| k.column().to_string()));
        writeln!(out, "{}", header.join(","))?;
        for (row, p) in self.points.iter().enumerate() {
            let mut cells: Vec<String> = p.iter().map(|v| fmt_real(*v)).collect();
            if let Some(t) = &self.truth {
                cells.push(fmt_real(t[row]));
            }
            cells.extend(self.estimates.values().map(|v| fmt_cell(v[row])));
            writeln!(out, "{}", cells.join(","))?;
        }
        Ok(())
    }
}

/// Evaluates the requested estimators at every point.
pub fn evaluate_on_grid(
    sample: &CensoredSample,
    curves: CensoringCurves<'_>,
    spec: KernelSpec,
    h: f64,
    points: &[Vec<f64>],
    kinds: &[EstimatorKind],
    truth: Option<Vec<f64>>,
) -> Result<EvalGrid> {
    check_bandwidth(h)?;
    if points.is_empty() {
        return Err(Error::invalid("points", "evaluation grid is empty"));
    }
    for p in points {
        spec.check_point(p)?;
    }
    if let Some(t) = &truth {
        if t.len() != points.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                got: t.len(),
            });
        }
    }
    let fitted = WeightedSample::new(sample, curves.estimated, spec)?;
    let pseudo = match (kinds.contains(&EstimatorKind::RerPseudo), curves.truth) {
        (false, _) => None,
        (true, Some(g)) => Some(WeightedSample::new(sample, g, spec)?),
        (true, None) => {
            return Err(Error::invalid(
                "curves.truth",
                "the pseudo-estimator needs the true censoring survival",
            ))
        }
    };

    let mut estimates = BTreeMap::new();
    let mut undefined = BTreeMap::new();
    for &kind in kinds {
        if estimates.contains_key(&kind) {
            continue;
        }
        let values: Vec<Option<f64>> = points
            .par_iter()
            .map(|x| {
                let r = match kind {
                    EstimatorKind::RerHat => fitted.rer(h, x),
                    EstimatorKind::RerPseudo => pseudo.as_ref().expect("built above").rer(h, x),
                    EstimatorKind::Cr => fitted.cr(h, x),
                };
                match r {
                    Ok(v) => Ok(Some(v)),
                    Err(Error::EstimationUndefined { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            })
            .collect::<Result<_>>()?;
        undefined.insert(kind, values.iter().filter(|v| v.is_none()).count());
        estimates.insert(kind, values);
    }
    Ok(EvalGrid {
        points: points.to_vec(),
        truth,
        estimates,
        undefined,
        h_used: h,
        n_used: sample.len(),
    })
}
