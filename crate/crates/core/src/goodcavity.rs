//! Good-cavity limit `κ → 0` with `γ = 0`.
//!
//! Writing the emission rate as `W = aκ` and the pumping ratio as
//! `y = ν/Δ`, friction and diffusion to first order in κ give the
//! temperature `k_B T/ħκ = (2a² + (a−1)²y²)/(2ay)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::local_temperature;
use crate::params::{SystemParams, WAVELENGTH};

/// Operating point `a = W/κ` and pumping ratio `y = ν/Δ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub a: f64,
    pub y: f64,
}

impl OperatingPoint {
    pub fn new(a: f64, y: f64) -> Result<Self> {
        if !(a > 0.0 && y > 0.0 && a.is_finite() && y.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "operating point needs a > 0 and y > 0, got a = {a}, y = {y}"
            )));
        }
        Ok(Self { a, y })
    }
}

/// Limit temperature in units of ħκ.
pub fn gc_temperature(op: OperatingPoint) -> f64 {
    let OperatingPoint { a, y } = op;
    (2.0 * a * a + (a - 1.0).powi(2) * y * y) / (2.0 * a * y)
}

/// Minimum over `a` of [`gc_temperature`]: `√(y²+2) − y`, reached at
/// `a* = y/√(y²+2)`. Returns `(T_min, a*)`.
pub fn gc_min_temperature(y: f64) -> Result<(f64, f64)> {
    if !(y > 0.0 && y.is_finite()) {
        return Err(Error::InvalidParams(format!("pumping ratio y = {y} must be positive")));
    }
    let r = (y * y + 2.0).sqrt();
    // √(y²+2) − y without cancellation for large y
    Ok((2.0 / (r + y), y / r))
}

/// One-parameter family approaching the good-cavity limit at fixed `(a, y)`.
///
/// With κ = 1 and `κ/ν = r`, the family has `ν = 1/r`, `Δ = ν/y`, and `g`
/// chosen so that `W = aκ` at the reference position `x_ref`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoodCavityFamily {
    pub op: OperatingPoint,
    /// Atomic decay; the limit formula assumes 0.
    pub gamma: f64,
    pub x_ref: f64,
}

impl GoodCavityFamily {
    pub fn new(op: OperatingPoint) -> Self {
        Self {
            op,
            gamma: 0.0,
            x_ref: WAVELENGTH / 8.0,
        }
    }

    /// Parameters at `κ/ν = ratio`.
    pub fn params(&self, ratio: f64) -> Result<SystemParams> {
        if !(ratio > 0.0) {
            return Err(Error::InvalidParams(format!("kappa/nu = {ratio} must be positive")));
        }
        let cos = (self.x_ref).cos();
        if cos.abs() < 1e-6 || self.x_ref.sin().abs() < 1e-6 {
            return Err(Error::InvalidParams(
                "reference position must lie strictly between node and antinode".into(),
            ));
        }
        let nu = 1.0 / ratio;
        let delta = nu / self.op.y;
        let big = 1.0 + self.gamma + nu;
        let g_ref = (self.op.a * (big * big + delta * delta) / big).sqrt();
        Ok(SystemParams::new(self.gamma, nu, (g_ref / cos).abs(), delta))
    }
}

/// Full-pipeline versus limit temperature at one member of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergencePoint {
    pub kappa_over_nu: f64,
    pub kt_full: f64,
    pub kt_limit: f64,
    pub rel_error: f64,
}

/// Compares the pointwise Einstein temperature of the full model at the
/// reference position with the limit formula along `ratios` of `κ/ν`.
pub fn gc_convergence_check(family: &GoodCavityFamily, ratios: &[f64]) -> Result<Vec<ConvergencePoint>> {
    if family.gamma != 0.0 {
        return Err(Error::Precondition(format!(
            "good-cavity comparison requires gamma = 0, got {}",
            family.gamma
        )));
    }
    if ratios.is_empty() {
        return Err(Error::EmptyInput);
    }
    let kt_limit = gc_temperature(family.op);
    ratios
        .iter()
        .map(|&r| {
            let p = family.params(r)?;
            let kt_full = local_temperature(&p, family.x_ref)? / p.kappa;
            Ok(ConvergencePoint {
                kappa_over_nu: r,
                kt_full,
                kt_limit,
                rel_error: (kt_full - kt_limit).abs() / kt_limit,
            })
        })
        .collect()
}
