//! Unit system, parameter container and the standing-wave coupling profile.
//!
//! Internal units: `ħ = 1`, `κ` is the rate unit and the mode wavenumber is
//! `k = 1`, so the wavelength is `λ = 2π` and positions are phases `kx`.
//! The atomic mass enters only through the recoil frequency
//! `ω_r = ħk²/(2m)`, i.e. `m = 1/(2ω_r)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mode wavenumber in internal units.
pub const WAVENUMBER: f64 = 1.0;

/// Cavity wavelength `2π/k` in internal units.
pub const WAVELENGTH: f64 = 2.0 * PI / WAVENUMBER;

/// Recoil frequency used when none is given, in units of κ.
pub const DEFAULT_RECOIL: f64 = 0.01;

/// Converts a position given in units of λ to internal units.
pub fn from_wavelengths(x_over_lambda: f64) -> f64 {
    x_over_lambda * WAVELENGTH
}

/// Converts an internal position to units of λ.
pub fn to_wavelengths(x: f64) -> f64 {
    x / WAVELENGTH
}

/// Physical rates and scales of the model, all in units of κ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Atomic (half) decay rate γ.
    pub gamma: f64,
    /// Incoherent pump rate ν.
    pub nu: f64,
    /// Peak atom-field coupling g.
    pub g: f64,
    /// Cavity half-linewidth κ.
    pub kappa: f64,
    /// Cavity-atom detuning Δ = ω_c − ω_a.
    pub delta: f64,
    /// Recoil frequency ω_r = ħk²/(2m).
    pub recoil: f64,
}

impl SystemParams {
    /// Parameters with κ = 1 and the default recoil frequency.
    pub fn new(gamma: f64, nu: f64, g: f64, delta: f64) -> Self {
        Self {
            gamma,
            nu,
            g,
            kappa: 1.0,
            delta,
            recoil: DEFAULT_RECOIL,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_recoil(mut self, recoil: f64) -> Self {
        self.recoil = recoil;
        self
    }

    pub fn with_nu(mut self, nu: f64) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn with_g(mut self, g: f64) -> Self {
        self.g = g;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.gamma,
            self.nu,
            self.g,
            self.kappa,
            self.delta,
            self.recoil,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidParams("all parameters must be finite".into()));
        }
        if self.gamma < 0.0 {
            return Err(Error::InvalidParams(format!("gamma = {} < 0", self.gamma)));
        }
        if self.nu < 0.0 {
            return Err(Error::InvalidParams(format!("nu = {} < 0", self.nu)));
        }
        if self.g < 0.0 {
            return Err(Error::InvalidParams(format!("g = {} < 0", self.g)));
        }
        if self.kappa <= 0.0 {
            return Err(Error::InvalidParams(format!("kappa = {} <= 0", self.kappa)));
        }
        if self.recoil <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "recoil = {} <= 0",
                self.recoil
            )));
        }
        Ok(())
    }

    /// Atomic damping γ + ν of the polarization.
    #[inline]
    pub fn atomic_damping(&self) -> f64 {
        self.gamma + self.nu
    }

    /// Total damping rate Γ = κ + γ + ν of the atom-field correlations.
    #[inline]
    pub fn total_damping(&self) -> f64 {
        self.kappa + self.gamma + self.nu
    }

    /// Atomic mass `k²/(2ω_r)` with ħ = 1.
    #[inline]
    pub fn mass(&self) -> f64 {
        WAVENUMBER * WAVENUMBER / (2.0 * self.recoil)
    }

    /// Free-atom inversion `(ν − γ)/(ν + γ)` reached without coupling.
    pub fn bare_inversion(&self) -> f64 {
        let s = self.atomic_damping();
        if s == 0.0 {
            // no pump, no decay: the atom keeps its initial state; report ground
            -1.0
        } else {
            (self.nu - self.gamma) / s
        }
    }

    /// Doppler temperature scale ħγ.
    pub fn doppler_temperature(&self) -> f64 {
        self.gamma
    }

    /// Recoil temperature scale `ħ²k²/(2m)` (equal to ω_r in these units).
    pub fn recoil_temperature(&self) -> f64 {
        self.recoil
    }

    /// Momentum scale `√(m ħγ)` used to normalize plotted momenta.
    pub fn doppler_momentum(&self) -> f64 {
        (self.mass() * self.gamma).sqrt()
    }

    /// Position-dependent coupling `G(x) = g cos(kx)`.
    #[inline]
    pub fn coupling(&self, x: f64) -> f64 {
        coupling(self, x)
    }

    /// Spatial derivative `∇G(x) = −g k sin(kx)`.
    #[inline]
    pub fn grad_coupling(&self, x: f64) -> f64 {
        grad_coupling(self, x)
    }
}

impl Default for SystemParams {
    fn default() -> Self {
        Self::new(10.0, 20.0, 100.0, 200.0)
    }
}

/// `G(x) = g cos(kx)`.
#[inline]
pub fn coupling(params: &SystemParams, x: f64) -> f64 {
    params.g * (WAVENUMBER * x).cos()
}

/// `∇G(x) = −g k sin(kx)`.
#[inline]
pub fn grad_coupling(params: &SystemParams, x: f64) -> f64 {
    -params.g * WAVENUMBER * (WAVENUMBER * x).sin()
}

/// Nearest-antinode distance of `x`, in internal units.
pub fn distance_to_antinode(x: f64) -> f64 {
    let half = WAVELENGTH / 2.0;
    let r = x.rem_euclid(half);
    r.min(half - r)
}

/// Index of the potential well (antinode `nλ/2`) that contains `x`.
pub fn well_index(x: f64) -> i64 {
    (x / (WAVELENGTH / 2.0)).round() as i64
}
