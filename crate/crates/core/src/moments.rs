//! Second-order moment model.
//!
//! The expectation values `Ξ = (Φ, Π, Σ, Λ)` obey the factorized linear
//! system `Ξ̇ = M Ξ + v`, where the only nonlinearity is the inversion
//! parameter `Z = ⟨2Π − 1⟩` appearing in `M`. Requiring the steady
//! population to reproduce `Z` closes the system; since `det M` is affine
//! in `Z` this is a quadratic with a unique physical root.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::brent;
use crate::params::SystemParams;

/// `(Φ, Π, Σ, Λ)`: photon number, upper population and the two real
/// atom-field cross moments.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MomentVector {
    pub phi: f64,
    pub pi: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl MomentVector {
    pub fn to_vector(self) -> Vector4<f64> {
        Vector4::new(self.phi, self.pi, self.sigma, self.lambda)
    }

    pub fn from_vector(v: &Vector4<f64>) -> Self {
        Self {
            phi: v[0],
            pi: v[1],
            sigma: v[2],
            lambda: v[3],
        }
    }
}

/// Self-consistent steady state of the moment equations at one position.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSolution {
    pub x: f64,
    pub coupling: f64,
    /// Photon number N.
    pub n: f64,
    /// Upper-state population P = (1 + Z)/2.
    pub p: f64,
    /// Inversion parameter Z.
    pub z: f64,
    /// Emission rate into the cavity mode.
    pub w: f64,
    /// `D = det M / 4`.
    pub det_m4: f64,
    pub sigma: f64,
    pub lambda: f64,
}

impl MomentSolution {
    pub fn moments(&self) -> MomentVector {
        MomentVector {
            phi: self.n,
            pi: self.p,
            sigma: self.sigma,
            lambda: self.lambda,
        }
    }
}

/// `M(G, Z)` for an explicit coupling value.
pub fn matrix_at(params: &SystemParams, g: f64, z: f64) -> Matrix4<f64> {
    let k = params.kappa;
    let damp = params.atomic_damping();
    let big = params.total_damping();
    let d = params.delta;
    #[rustfmt::skip]
    let m = Matrix4::new(
        -2.0 * k,   0.0,          g,    0.0,
        0.0,        -2.0 * damp, -g,    0.0,
        2.0 * z * g, 2.0 * g,    -big,  -d,
        0.0,        0.0,          d,    -big,
    );
    m
}

/// Pump drive `v = (0, 2ν, 0, 0)`.
pub fn drive(params: &SystemParams) -> Vector4<f64> {
    Vector4::new(0.0, 2.0 * params.nu, 0.0, 0.0)
}

/// The matrix `M` at position `x` for inversion `z`, and the drive `v`.
pub fn system_matrix(params: &SystemParams, x: f64, z: f64) -> (Matrix4<f64>, Vector4<f64>) {
    (matrix_at(params, params.coupling(x), z), drive(params))
}

/// `D = det M / 4 = κ(γ+ν)(Γ² + Δ²) + ΓG²(κ − (γ+ν)Z)`.
#[inline]
pub fn det_m4(params: &SystemParams, g: f64, z: f64) -> f64 {
    let k = params.kappa;
    let damp = params.atomic_damping();
    let big = params.total_damping();
    k * damp * (big * big + params.delta * params.delta) + big * g * g * (k - damp * z)
}

/// Emission rate `W = ΓG²/(Γ² + Δ²)` for a given coupling value.
#[inline]
pub fn emission_rate_at(params: &SystemParams, g: f64) -> f64 {
    let big = params.total_damping();
    big * g * g / (big * big + params.delta * params.delta)
}

/// Emission rate into the resonator at position `x`.
pub fn emission_rate(params: &SystemParams, x: f64) -> f64 {
    emission_rate_at(params, params.coupling(x))
}

/// Coupling at which the emission rate equals the cavity loss, `W = κ`.
///
/// This is the gain-equals-loss threshold of the moment model; below it the
/// mode is populated only by spontaneous emission.
pub fn unit_gain_coupling(params: &SystemParams) -> f64 {
    let big = params.total_damping();
    (params.kappa * (big * big + params.delta * params.delta) / big).sqrt()
}

/// Self-consistent inversion for a given coupling value.
///
/// The continuity condition reduces to `((γ+ν)²/2)(Z₀ − Z)(Z_D − Z) = κν`
/// with `Z₀ = (ν−γ)/(ν+γ)` and `Z_D = κ/(γ+ν) + κ/W` (the zero of `D`).
/// `D > 0` requires `Z < Z_D` and `N ≥ 0` requires `Z ≤ Z₀`, so only the
/// smaller root is physical. It is evaluated in a cancellation-free form.
pub fn inversion_at(params: &SystemParams, g: f64) -> f64 {
    let damp = params.atomic_damping();
    if damp == 0.0 {
        return -1.0;
    }
    let z0 = (params.nu - params.gamma) / damp;
    let w = emission_rate_at(params, g);
    if w == 0.0 || params.nu == 0.0 {
        return z0;
    }
    let k = params.kappa;
    let zd = k / damp + k / w;
    let c = 2.0 * k * params.nu / (damp * damp);
    let gap = (z0 - zd).abs();
    let t = 2.0 * c / (gap + (gap * gap + 4.0 * c).sqrt());
    z0.min(zd) - t
}

/// `R(Z, G) = (ν − γ − (γ+ν)Z)/2 · D − κνΓG²`, the continuity condition
/// multiplied through by `D`; its zero in `Z` is the self-consistent state.
pub fn consistency_function(params: &SystemParams, g: f64, z: f64) -> f64 {
    let damp = params.atomic_damping();
    0.5 * (params.nu - params.gamma - damp * z) * det_m4(params, g, z)
        - params.kappa * params.nu * params.total_damping() * g * g
}

/// `dZ/dG` along the self-consistent branch, by implicit differentiation.
pub fn inversion_slope(params: &SystemParams, g: f64, z: f64) -> f64 {
    let k = params.kappa;
    let damp = params.atomic_damping();
    let big = params.total_damping();
    let dd = det_m4(params, g, z);
    let a = params.nu - params.gamma - damp * z;
    let dr_dz = -0.5 * damp * dd - 0.5 * a * big * g * g * damp;
    let dr_dg = a * big * g * (k - damp * z) - 2.0 * k * params.nu * big * g;
    if dr_dz == 0.0 {
        return 0.0;
    }
    -dr_dg / dr_dz
}

/// Spatial gradient `∇Z` of the self-consistent inversion.
pub fn inversion_gradient(params: &SystemParams, x: f64) -> f64 {
    let g = params.coupling(x);
    let z = inversion_at(params, g);
    inversion_slope(params, g, z) * params.grad_coupling(x)
}

/// Steady state for a given coupling value; `x` is only recorded.
pub fn solve_at_coupling(params: &SystemParams, g: f64, x: f64) -> Result<MomentSolution> {
    let z = inversion_at(params, g);
    let dd = det_m4(params, g, z);
    let (n, sigma, lambda) = if params.nu == 0.0 || g == 0.0 {
        (0.0, 0.0, 0.0)
    } else {
        let s = 2.0 * params.kappa * params.nu * g / dd;
        (
            params.nu * params.total_damping() * g * g / dd,
            s * params.total_damping(),
            s * params.delta,
        )
    };
    let physical = (-1.0 - 1e-12..=1.0 + 1e-12).contains(&z)
        && n >= 0.0
        && (dd > 0.0 || params.atomic_damping() == 0.0);
    if !physical || !n.is_finite() {
        return Err(Error::NoPhysicalRoot { x, coupling: g });
    }
    Ok(MomentSolution {
        x,
        coupling: g,
        n,
        p: 0.5 * (1.0 + z),
        z,
        w: emission_rate_at(params, g),
        det_m4: dd,
        sigma,
        lambda,
    })
}

/// Self-consistent moment steady state at position `x`.
pub fn solve_self_consistent(params: &SystemParams, x: f64) -> Result<MomentSolution> {
    solve_at_coupling(params, params.coupling(x), x)
}

/// Quantum rate equations `(Ṅ, Ṗ)` at fixed `Z`.
pub fn rate_equation_rhs(n: f64, p: f64, z: f64, params: &SystemParams, x: f64) -> (f64, f64) {
    let w = emission_rate(params, x);
    let dn = -2.0 * (params.kappa - z * w) * n + 2.0 * w * p;
    let dp = -2.0 * (params.gamma + w + params.nu) * p - 2.0 * z * w * n + 2.0 * params.nu;
    (dn, dp)
}

/// Mean dipole force `2κνΔG(∇G)/D` at the self-consistent inversion.
pub fn mean_force(params: &SystemParams, x: f64) -> Result<f64> {
    let sol = solve_self_consistent(params, x)?;
    Ok(params.grad_coupling(x) * sol.lambda)
}

/// Photon number at the antinode (the maximum over `x`).
pub fn peak_photon_number(params: &SystemParams) -> Result<f64> {
    Ok(solve_at_coupling(params, params.g, 0.0)?.n)
}

/// Pump rate giving the antinode photon number `target`.
///
/// At fixed γ, g and Δ the peak photon number first rises with ν and then
/// falls again as pump broadening suppresses the emission. The lower
/// (weak-pump) branch is returned. Errors when `target` exceeds the maximum
/// reachable photon number.
pub fn pump_for_photon_number(params: &SystemParams, target: f64) -> Result<f64> {
    if !(target > 0.0) {
        return Err(Error::Precondition(format!("target photon number {target} must be positive")));
    }
    let f = |nu: f64| -> f64 {
        peak_photon_number(&params.with_nu(nu)).map_or(f64::NAN, |n| n - target)
    };
    let grid: Vec<f64> = (0..=480).map(|i| 10f64.powf(-4.0 + i as f64 / 60.0)).collect();
    let mut prev = (grid[0], f(grid[0]));
    for &nu in &grid[1..] {
        let cur = (nu, f(nu));
        if prev.1 < 0.0 && cur.1 >= 0.0 {
            return brent(f, prev.0, cur.0, 1e-14 * cur.0);
        }
        prev = cur;
    }
    Err(Error::RootSearch(format!(
        "photon number {target} not reachable by tuning the pump"
    )))
}
