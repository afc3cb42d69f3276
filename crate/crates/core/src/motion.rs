//! Forces on a slowly moving atom: dipole force and potential, friction from
//! the delayed field response, momentum diffusion from the field and recoil
//! noise, and the resulting equilibrium temperature.
//!
//! Friction and field diffusion are each available in two independent forms:
//! a closed-form expression and a route through the 4×4 moment equations
//! (linear response for friction, noise-covariance contraction for
//! diffusion). The two must agree and are cross-checked in tests.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lamb::force_lamb;
use crate::moments::{
    drive, inversion_gradient, matrix_at, solve_self_consistent, MomentSolution, MomentVector,
};
use crate::numerics::simpson;
use crate::params::{SystemParams, WAVELENGTH};

/// Position-resolved force coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionCoefficients {
    pub x: f64,
    /// Mean force F₀.
    pub force: f64,
    /// Optical potential, zero at the antinode `x = 0`.
    pub potential: f64,
    /// Velocity coefficient β in `F ≈ F₀ + βv`; negative means damping.
    pub beta: f64,
    /// Momentum diffusion from field fluctuations.
    pub d_field: f64,
    /// Momentum diffusion from spontaneous-emission recoil.
    pub d_rec: f64,
}

/// Position-averaged friction and diffusion and the temperature they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumSummary {
    pub beta_avg: f64,
    /// Average of the total diffusion `𝒟 + 𝒟_rec`.
    pub d_avg: f64,
    /// `k_B T` in units of ħκ.
    pub kt: f64,
    /// `k_B T / ħγ`; infinite when γ = 0.
    pub kt_doppler: f64,
    /// Potential depth.
    pub v: f64,
    /// Mean kinetic energy `k_B T / 2`.
    pub e: f64,
    /// Localization ratio `E / V`.
    pub ratio: f64,
}

/// Which steady-state model supplies the mean force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ForceModel {
    #[default]
    Moments,
    Lamb,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    /// Simpson nodes for the position averages over one period.
    pub points: usize,
    /// Projection factor of spontaneous recoil onto the cavity axis.
    pub recoil_geometry: f64,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        Self {
            points: 513,
            recoil_geometry: 1.0,
        }
    }
}

fn require_damping(params: &SystemParams) -> Result<()> {
    if params.atomic_damping() <= 0.0 {
        return Err(Error::Precondition(
            "force coefficients need gamma + nu > 0".into(),
        ));
    }
    Ok(())
}

/// First-order velocity response `X¹ = M⁻¹ ∇X⁰` with `X⁰ = −M⁻¹v`.
///
/// The gradient of `M` contains both the explicit coupling dependence and
/// the implicit one through the self-consistent inversion.
pub fn first_order_response(params: &SystemParams, x: f64) -> Result<MomentVector> {
    require_damping(params)?;
    let sol = solve_self_consistent(params, x)?;
    let (_, x1) = response_vectors(params, &sol, x)?;
    Ok(MomentVector::from_vector(&x1))
}

fn response_vectors(
    params: &SystemParams,
    sol: &MomentSolution,
    x: f64,
) -> Result<(Vector4<f64>, Vector4<f64>)> {
    let g = sol.coupling;
    let m = matrix_at(params, g, sol.z);
    let lu = m.lu();
    let x0 = lu
        .solve(&(-drive(params)))
        .ok_or_else(|| Error::Precondition("singular moment matrix".into()))?;
    let dg = params.grad_coupling(x);
    let dz = inversion_gradient(params, x);
    let grad_m = grad_matrix(g, sol.z, dg, dz);
    let grad_x0 = lu
        .solve(&(-(grad_m * x0)))
        .ok_or_else(|| Error::Precondition("singular moment matrix".into()))?;
    let x1 = lu
        .solve(&grad_x0)
        .ok_or_else(|| Error::Precondition("singular moment matrix".into()))?;
    Ok((x0, x1))
}

/// `∇M = (∂M/∂G)∇G + (∂M/∂Z)∇Z`.
fn grad_matrix(g: f64, z: f64, dg: f64, dz: f64) -> Matrix4<f64> {
    let mut d = Matrix4::zeros();
    d[(0, 2)] = dg;
    d[(1, 2)] = -dg;
    d[(2, 0)] = 2.0 * (z * dg + g * dz);
    d[(2, 1)] = 2.0 * dg;
    d
}

/// Residual `M X¹ − ∇X⁰` of the first-order equations (max norm), with
/// `∇X⁰` from a central difference of the zeroth-order solution.
pub fn first_order_residual(params: &SystemParams, x: f64, h: f64) -> Result<f64> {
    let sol = solve_self_consistent(params, x)?;
    let (_, x1) = response_vectors(params, &sol, x)?;
    let x0_at = |xx: f64| -> Result<Vector4<f64>> {
        Ok(solve_self_consistent(params, xx)?.moments().to_vector())
    };
    let grad_x0 = (x0_at(x + h)? - x0_at(x - h)?) / (2.0 * h);
    let m = matrix_at(params, sol.coupling, sol.z);
    Ok((m * x1 - grad_x0).amax())
}

/// Friction `β = (∇G)⟨Λ¹⟩` via the linear-response matrix route.
pub fn friction_matrix(params: &SystemParams, x: f64) -> Result<f64> {
    Ok(params.grad_coupling(x) * first_order_response(params, x)?.lambda)
}

/// Friction coefficient β(x) in closed form.
pub fn friction(params: &SystemParams, x: f64) -> Result<f64> {
    require_damping(params)?;
    let sol = solve_self_consistent(params, x)?;
    let (k, nu, d) = (params.kappa, params.nu, params.delta);
    let gs = params.atomic_damping();
    let big = params.total_damping();
    let g = sol.coupling;
    let z = sol.z;
    let dg = params.grad_coupling(x);
    let dz = inversion_gradient(params, x);
    let dd = sol.det_m4;
    let g2 = g * g;
    let kz = k - gs * z;
    let term_z = -g2
        * g
        * big
        * (4.0 * k * k * gs * gs * big + g2 * (gs - k) * (k * k + gs * gs * z))
        * dz;
    let term_g = 2.0
        * k
        * ((big * big + d * d) * (g2 * (k * k * k - gs * gs * gs * z) - 2.0 * k * k * gs * gs * big)
            + big * g2 * g2 * kz * kz
            + 2.0 * k * gs * big * big * g2 * kz)
        * dg;
    Ok(nu * d * dg / (dd * dd * dd) * (term_z + term_g))
}

/// Strengths of the δ-correlated moment noise `(Υ_Φ, Υ_Π, Υ_Σ, Υ_Λ)`.
///
/// The anticommutator cross-correlations are split evenly onto the two
/// off-diagonal entries, so the matrix is symmetric.
pub fn noise_covariance(params: &SystemParams, sol: &MomentSolution) -> Matrix4<f64> {
    let (k, gamma, nu) = (params.kappa, params.gamma, params.nu);
    let (n, p, s, l) = (sol.n, sol.p, sol.sigma, sol.lambda);
    let field = 2.0 * k * p + 2.0 * gamma * n + 2.0 * nu * (1.0 + n);
    #[rustfmt::skip]
    let c = Matrix4::new(
        2.0 * k * n, 0.0,                                      k * s,               k * l,
        0.0,         2.0 * gamma * p + 2.0 * nu * (1.0 - p),   (gamma - nu) * s,    (gamma - nu) * l,
        k * s,       (gamma - nu) * s,                          field,               0.0,
        k * l,       (gamma - nu) * l,                          0.0,                 field,
    );
    c
}

/// Weights of the moment noises in the quasi-stationary force fluctuation,
/// `Υ = Σᵢ uᵢ Υᵢ` (the force noise is `(∇G) Υ`).
pub fn force_noise_weights(params: &SystemParams, sol: &MomentSolution) -> Vector4<f64> {
    let (k, d) = (params.kappa, params.delta);
    let gs = params.atomic_damping();
    let big = params.total_damping();
    let (g, z) = (sol.coupling, sol.z);
    Vector4::new(
        gs * d * g * z,
        k * d * g,
        k * gs * d,
        k * gs * big + g * g * (k - gs * z),
    ) / sol.det_m4
}

/// Field diffusion assembled from the noise covariance:
/// `𝒟 = (∇G)² uᵀ C u / 2`.
pub fn diffusion_field_assembled(params: &SystemParams, x: f64) -> Result<f64> {
    require_damping(params)?;
    let sol = solve_self_consistent(params, x)?;
    let u = force_noise_weights(params, &sol);
    let c = noise_covariance(params, &sol);
    let dg = params.grad_coupling(x);
    Ok(0.5 * dg * dg * (u.transpose() * c * u)[(0, 0)])
}

/// Field-fluctuation momentum diffusion 𝒟(x) in closed form.
///
/// The `κ/W` terms are multiplied out with the `G²` prefactor, which keeps
/// the expression finite at the field nodes, where 𝒟 stays positive: the
/// atom still scatters pump-induced dipole noise into the vacuum mode.
pub fn diffusion_field(params: &SystemParams, x: f64) -> Result<f64> {
    require_damping(params)?;
    let sol = solve_self_consistent(params, x)?;
    let (k, gamma, nu, d) = (params.kappa, params.gamma, params.nu, params.delta);
    let gs = params.atomic_damping();
    let big = params.total_damping();
    let (g, z) = (sol.coupling, sol.z);
    let g2 = g * g;
    let d2 = d * d;
    let kz = k - gs * z;
    // G²·κ/W
    let q = k * (big * big + d2) / big;
    let inner = k * gs * big + g2 * kz;
    let b1 = 2.0 * k * k * d2 * (gamma - nu + gs * z) * (2.0 * k * gs * big + g2 * kz) * g2;
    let b2 = big * big * (k * k * gs * gs * d2 + inner * inner) * (g2 * (1.0 - z) + q);
    let b3 = k * big * d2 * g2 * (2.0 * k * gamma * (q - g2 * z) + g2 * (k * k + gs * gs * z * z));
    let dg = params.grad_coupling(x);
    let dd = sol.det_m4;
    Ok(nu * dg * dg * (b1 + b2 + b3) / (dd * dd * dd))
}

/// Recoil diffusion `ħ²k²γP` with unit projection onto the cavity axis.
pub fn diffusion_recoil(params: &SystemParams, x: f64) -> Result<f64> {
    diffusion_recoil_with(params, x, 1.0)
}

/// Recoil diffusion `geometry · ħ²k²γP`.
pub fn diffusion_recoil_with(params: &SystemParams, x: f64, geometry: f64) -> Result<f64> {
    let sol = solve_self_consistent(params, x)?;
    Ok(geometry * params.gamma * sol.p)
}

/// Mean force from the selected model.
pub fn force(model: ForceModel, params: &SystemParams, x: f64) -> Result<f64> {
    match model {
        ForceModel::Moments => crate::moments::mean_force(params, x),
        ForceModel::Lamb => Ok(force_lamb(params, x)),
    }
}

/// Optical potential `U(x) = −∫₀ˣ F`, zero at the antinode `x = 0`.
pub fn potential(params: &SystemParams, x: f64, model: ForceModel) -> Result<f64> {
    if x == 0.0 {
        return Ok(0.0);
    }
    // ~2048 nodes per wavelength
    let points = ((x.abs() / WAVELENGTH * 2048.0).ceil() as usize).max(64);
    let mut err = None;
    let integral = simpson(
        |s| match force(model, params, s) {
            Ok(f) => f,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        0.0,
        x,
        points,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(-integral),
    }
}

/// Potential depth `|U(λ/4) − U(0)|` between antinode and node.
pub fn potential_depth(params: &SystemParams, model: ForceModel) -> Result<f64> {
    Ok(potential(params, WAVELENGTH / 4.0, model)?.abs())
}

/// Uniform average of a `λ/2`-periodic function over one period.
pub fn position_average<F: FnMut(f64) -> f64>(f: F) -> f64 {
    position_average_with(f, 513)
}

pub fn position_average_with<F: FnMut(f64) -> f64>(f: F, points: usize) -> f64 {
    let period = WAVELENGTH / 2.0;
    simpson(f, 0.0, period, points) / period
}

fn averaged<F: Fn(f64) -> Result<f64>>(f: F, points: usize) -> Result<f64> {
    let mut err = None;
    let v = position_average_with(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                err.get_or_insert(e);
                0.0
            }
        },
        points,
    );
    match err {
        Some(e) => Err(e),
        None => Ok(v),
    }
}

/// All coefficients at one position (moments model).
pub fn motion_coefficients(params: &SystemParams, x: f64) -> Result<MotionCoefficients> {
    motion_coefficients_with(params, x, &EquilibriumOptions::default())
}

pub fn motion_coefficients_with(
    params: &SystemParams,
    x: f64,
    opts: &EquilibriumOptions,
) -> Result<MotionCoefficients> {
    Ok(MotionCoefficients {
        x,
        force: crate::moments::mean_force(params, x)?,
        potential: potential(params, x, ForceModel::Moments)?,
        beta: friction(params, x)?,
        d_field: diffusion_field(params, x)?,
        d_rec: diffusion_recoil_with(params, x, opts.recoil_geometry)?,
    })
}

/// Pointwise Einstein temperature `(𝒟 + 𝒟_rec)/(−β)` at `x`.
pub fn local_temperature(params: &SystemParams, x: f64) -> Result<f64> {
    let beta = friction(params, x)?;
    if !(beta < 0.0) {
        return Err(Error::HeatingRegime { beta_avg: beta });
    }
    Ok((diffusion_field(params, x)? + diffusion_recoil(params, x)?) / -beta)
}

/// Equilibrium temperature from the position-averaged Einstein relation.
pub fn equilibrium_temperature(params: &SystemParams) -> Result<EquilibriumSummary> {
    equilibrium_temperature_with(params, &EquilibriumOptions::default())
}

/// Einstein relation `k_B T = 𝒟̄ / (−β̄)` with both coefficients averaged
/// separately over a period. Fails with [`Error::HeatingRegime`] unless
/// β̄ < 0.
pub fn equilibrium_temperature_with(
    params: &SystemParams,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumSummary> {
    params.validate()?;
    require_damping(params)?;
    let beta_avg = averaged(|x| friction(params, x), opts.points)?;
    let d_avg = averaged(
        |x| Ok(diffusion_field(params, x)? + diffusion_recoil_with(params, x, opts.recoil_geometry)?),
        opts.points,
    )?;
    if !(beta_avg < 0.0) {
        return Err(Error::HeatingRegime { beta_avg });
    }
    let kt = d_avg / -beta_avg;
    let v = potential_depth(params, ForceModel::Moments)?;
    let e = 0.5 * kt;
    Ok(EquilibriumSummary {
        beta_avg,
        d_avg,
        kt,
        kt_doppler: kt / params.doppler_temperature(),
        v,
        e,
        ratio: e / v,
    })
}
