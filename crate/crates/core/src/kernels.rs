//! Smoothing kernels.
//!
//! Multivariate kernels are product kernels: `K_d(z) = ∏ⱼ K(zⱼ)`. The scaled
//! evaluation [`KernelSpec::eval_scaled`] returns `K_d((x − xᵢ)/h)` with no
//! `1/hᵈ` factor; the estimators are ratios in which it cancels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelFamily {
    #[default]
    Gaussian,
    Epanechnikov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub dim: usize,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dim", "kernel dimension must be positive"));
        }
        Ok(Self { family, dim })
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, dim)
    }

    /// Univariate kernel density at `u`.
    pub fn eval_univariate(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::invalid("u", format!("must be finite, got {u}")));
        }
        Ok(self.univariate(u))
    }

    /// Product kernel at `(x − xi)/h`.
    pub fn eval_scaled(&self, x: &[f64], xi: &[f64], h: f64) -> Result<f64> {
        self.check_point(x)?;
        self.check_point(xi)?;
        check_bandwidth(h)?;
        Ok(self.scaled(x, xi, h))
    }

    #[inline]
    pub(crate) fn univariate(&self, u: f64) -> f64 {
        match self.family {
            KernelFamily::Gaussian => INV_SQRT_2PI * (-0.5 * u * u).exp(),
            KernelFamily::Epanechnikov => {
                if u.abs() <= 1.0 {
                    0.75 * (1.0 - u * u)
                } else {
                    0.0
                }
            }
        }
    }

    /// Unchecked product kernel; callers validate dimensions and `h`.
    #[inline]
    pub(crate) fn scaled(&self, x: &[f64], xi: &[f64], h: f64) -> f64 {
        x.iter()
            .zip(xi)
            .map(|(a, b)| self.univariate((a - b) / h))
            .product()
    }

    pub(crate) fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid(
            "h",
            format!("bandwidth must be positive and finite, got {h}"),
        ));
    }
    Ok(())
}
