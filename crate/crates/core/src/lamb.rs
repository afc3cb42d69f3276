//! Factorized c-number model of the atom-cavity laser.
//!
//! All operators are replaced by their expectation values, `α = ⟨a⟩`,
//! `s = ⟨σ₋⟩`, `z = ⟨σ_z⟩`, and noise is dropped. This gives the laser
//! threshold, the lasing photon number, the steady dipole force and, when
//! coupled to the atomic motion, the deterministic capture dynamics.
//!
//! Two steady states are provided. [`lamb_steady_state`] is the analytic
//! state with the polarization adiabatically slaved to the field, which is
//! what the threshold `G_th` and the inversion `z = κ/W` describe.
//! [`lasing_orbit`] is the exact phase-rotating solution of the equations of
//! motion; the two agree when `κ ≪ γ + ν` or `Δ = 0`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use crate::trajectory::{Sample, Trajectory, TrajectoryMode};

/// c-number field amplitude, polarization and inversion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambState {
    pub alpha: Complex64,
    pub s: Complex64,
    pub z: f64,
}

impl LambState {
    pub fn new(alpha: Complex64, s: Complex64, z: f64) -> Self {
        Self { alpha, s, z }
    }

    /// Field off, atom at its free inversion.
    pub fn unlit(params: &SystemParams) -> Self {
        Self::new(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), params.bare_inversion())
    }

    pub fn photon_number(&self) -> f64 {
        self.alpha.norm_sqr()
    }

    /// c-number image of `Λ = (a†σ₋ − σ₊a)/i`, i.e. `−i(α*s − s*α) = 2 Im(α*s)`.
    pub fn lambda(&self) -> f64 {
        2.0 * (self.alpha.conj() * self.s).im
    }

    /// c-number image of `Σ = a†σ₋ + σ₊a`, i.e. `2 Re(α*s)`.
    pub fn sigma(&self) -> f64 {
        2.0 * (self.alpha.conj() * self.s).re
    }

    pub fn max_abs(&self) -> f64 {
        self.alpha.norm().max(self.s.norm()).max(self.z.abs())
    }

    fn to_array(self) -> [f64; 5] {
        [self.alpha.re, self.alpha.im, self.s.re, self.s.im, self.z]
    }

    fn from_slice(v: &[f64]) -> Self {
        Self::new(Complex64::new(v[0], v[1]), Complex64::new(v[2], v[3]), v[4])
    }
}

/// Time derivative of the c-number state for an atom held at `x`.
pub fn lamb_rhs(state: &LambState, params: &SystemParams, x: f64) -> LambState {
    let g = params.coupling(x);
    let LambState { alpha, s, z } = *state;
    let damp = params.atomic_damping();
    let d_alpha = -params.kappa * alpha + g * s;
    let d_s = Complex64::new(-damp, params.delta) * s + g * z * alpha;
    let d_z = -2.0 * damp * z - 2.0 * g * (alpha.conj() * s + s.conj() * alpha).re
        + 2.0 * (params.nu - params.gamma);
    LambState::new(d_alpha, d_s, d_z)
}

/// Laser threshold coupling `√(κ((γ+ν)² + Δ²)/(ν − γ))`, or `None` when the
/// pump cannot invert the atom (`ν ≤ γ`).
pub fn threshold_coupling(params: &SystemParams) -> Option<f64> {
    let gain = params.nu - params.gamma;
    if gain <= 0.0 {
        return None;
    }
    let damp = params.atomic_damping();
    Some((params.kappa * (damp * damp + params.delta * params.delta) / gain).sqrt())
}

/// Emission rate into the cavity mode with the polarization slaved to the
/// field: `W = (γ+ν)G²/((γ+ν)² + Δ²)`.
pub fn emission_rate_lamb(params: &SystemParams, x: f64) -> f64 {
    let g = params.coupling(x);
    let damp = params.atomic_damping();
    let denom = damp * damp + params.delta * params.delta;
    if denom == 0.0 {
        return 0.0;
    }
    damp * g * g / denom
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambSteady {
    /// Field amplitude, real and nonnegative by gauge choice.
    pub alpha: Complex64,
    pub s: Complex64,
    pub z: f64,
    /// Photon number `|α|²`.
    pub n: f64,
    pub above_threshold: bool,
}

impl LambSteady {
    /// Upper-state population `(1 + z)/2`.
    pub fn population(&self) -> f64 {
        0.5 * (1.0 + self.z)
    }

    pub fn state(&self) -> LambState {
        LambState::new(self.alpha, self.s, self.z)
    }
}

/// Analytic steady state for an atom at rest at `x`.
///
/// Below (or at) threshold the field is off and `z = (ν−γ)/(ν+γ)`. Above
/// threshold `z = κ/W`, the photon number follows from the continuity
/// relation, and `s = Gzα/(γ+ν−iΔ)` is the slaved polarization. In this state
/// `|α|`, `s` and `z` are stationary while the field phase turns at
/// [`lamb_phase_rotation`].
pub fn lamb_steady_state(params: &SystemParams, x: f64) -> LambSteady {
    let g = params.coupling(x);
    let zero = Complex64::new(0.0, 0.0);
    let below = LambSteady {
        alpha: zero,
        s: zero,
        z: params.bare_inversion(),
        n: 0.0,
        above_threshold: false,
    };
    let Some(g_th) = threshold_coupling(params) else {
        return below;
    };
    if g.abs() <= g_th {
        return below;
    }
    let w = emission_rate_lamb(params, x);
    let damp = params.atomic_damping();
    let z = params.kappa / w;
    let n = ((params.nu - params.gamma - damp * z) / (2.0 * params.kappa)).max(0.0);
    let alpha = Complex64::new(n.sqrt(), 0.0);
    let s = g * z * alpha / Complex64::new(damp, -params.delta);
    LambSteady {
        alpha,
        s,
        z,
        n,
        above_threshold: true,
    }
}

/// Angular rate at which the field phase of [`lamb_steady_state`] turns,
/// `κΔ/(γ+ν)` (zero below threshold).
pub fn lamb_phase_rotation(params: &SystemParams, steady: &LambSteady) -> f64 {
    if steady.above_threshold {
        params.kappa * params.delta / params.atomic_damping()
    } else {
        0.0
    }
}

/// Largest deviation of `steady` from stationarity: the state must satisfy
/// `α̇ = iΩα`, `ṡ = 0`, `ż = 0` with `Ω` from [`lamb_phase_rotation`].
pub fn lamb_stationarity_residual(params: &SystemParams, x: f64, steady: &LambSteady) -> f64 {
    let rhs = lamb_rhs(&steady.state(), params, x);
    let omega = lamb_phase_rotation(params, steady);
    let rot = Complex64::new(0.0, omega) * steady.alpha;
    (rhs.alpha - rot).norm().max(rhs.s.norm()).max(rhs.z.abs())
}

/// Exact lasing solution of the c-number equations at fixed `x`:
/// `α(t) = α₀ e^{iΩt}`, `s(t) = s₀ e^{iΩt}`, constant `z`, with
/// `Ω = κΔ/Γ` and `z = κ(γ+ν)(Γ²+Δ²)/(Γ²G²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LasingOrbit {
    pub state: LambState,
    /// Phase rotation rate Ω in the cavity frame.
    pub rotation: f64,
    pub n: f64,
    pub above_threshold: bool,
}

pub fn lasing_orbit(params: &SystemParams, x: f64) -> LasingOrbit {
    let g = params.coupling(x);
    let damp = params.atomic_damping();
    let total = params.total_damping();
    let z0 = params.bare_inversion();
    let off = LasingOrbit {
        state: LambState::unlit(params),
        rotation: 0.0,
        n: 0.0,
        above_threshold: false,
    };
    if g == 0.0 || params.nu <= params.gamma {
        return off;
    }
    let delta2 = params.delta * params.delta;
    let z = params.kappa * damp * (total * total + delta2) / (total * total * g * g);
    if z >= z0 {
        return off;
    }
    let n = (params.nu - params.gamma - damp * z) / (2.0 * params.kappa);
    let rotation = params.kappa * params.delta / total;
    let alpha = Complex64::new(n.sqrt(), 0.0);
    let s = Complex64::new(params.kappa, rotation) * alpha / g;
    LasingOrbit {
        state: LambState::new(alpha, s, z),
        rotation,
        n,
        above_threshold: true,
    }
}

/// Residual of the orbit in its co-rotating frame (zero for an exact orbit).
pub fn orbit_residual(params: &SystemParams, x: f64, orbit: &LasingOrbit) -> f64 {
    let rhs = lamb_rhs(&orbit.state, params, x);
    let i_omega = Complex64::new(0.0, orbit.rotation);
    (rhs.alpha - i_omega * orbit.state.alpha)
        .norm()
        .max((rhs.s - i_omega * orbit.state.s).norm())
        .max(rhs.z.abs())
}

/// Steady dipole force `(2κΔ/(γ+ν)) (∇G/G) N` for an atom at rest.
///
/// Zero below threshold; `N` vanishes faster than `G` so the force is a
/// well-defined zero at nodes.
pub fn force_lamb(params: &SystemParams, x: f64) -> f64 {
    let st = lamb_steady_state(params, x);
    if !st.above_threshold || st.n == 0.0 {
        return 0.0;
    }
    let g = params.coupling(x);
    2.0 * params.kappa * params.delta / params.atomic_damping() * params.grad_coupling(x) / g * st.n
}

/// Energy-balance residual `ν(1−P) − γP − κN`.
pub fn continuity_residual(population: f64, photons: f64, params: &SystemParams) -> f64 {
    params.nu * (1.0 - population) - params.gamma * population - params.kappa * photons
}

/// Integrates the field equations for an atom held at `x` from `init` up to
/// `t_end` with an adaptive Dormand-Prince 5(4) scheme.
pub fn relax_field(
    params: &SystemParams,
    x: f64,
    init: LambState,
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<LambState> {
    if t_end <= 0.0 {
        return Err(Error::Precondition(format!("t_end = {t_end} must be positive")));
    }
    let p = *params;
    let rhs = move |y: &[f64; 5]| lamb_rhs(&LambState::from_slice(y), &p, x).to_array();
    let (y, _) = crate::numerics::dopri5(&rhs, &init.to_array(), t_end, rtol, atol)?;
    Ok(LambState::from_slice(&y))
}

/// Atom position, momentum and c-number field for the coupled dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoupledState {
    pub x: f64,
    pub p: f64,
    pub field: LambState,
}

impl CoupledState {
    fn to_array(self) -> [f64; 7] {
        let f = self.field.to_array();
        [self.x, self.p, f[0], f[1], f[2], f[3], f[4]]
    }

    fn from_array(y: &[f64; 7]) -> Self {
        Self {
            x: y[0],
            p: y[1],
            field: LambState::from_slice(&y[2..]),
        }
    }

    /// Instantaneous light force `(∇G)·2 Im(α*s)`.
    pub fn force(&self, params: &SystemParams) -> f64 {
        params.grad_coupling(self.x) * self.field.lambda()
    }
}

/// Mean-field energy `p²/2m − Δ(1+z)/2 − GΛ`, conserved when κ = γ = ν = 0.
pub fn coupled_energy(params: &SystemParams, state: &CoupledState) -> f64 {
    state.p * state.p / (2.0 * params.mass()) - params.delta * 0.5 * (1.0 + state.field.z)
        - params.coupling(state.x) * state.field.lambda()
}

/// Largest step accepted by [`integrate_coupled`].
pub fn max_coupled_step(params: &SystemParams) -> f64 {
    let fastest = params
        .total_damping()
        .max(2.0 * params.kappa)
        .max(2.0 * params.atomic_damping())
        .max(params.delta.abs());
    0.1 / fastest
}

fn coupled_rhs(p: &SystemParams) -> impl Fn(&[f64; 7]) -> [f64; 7] {
    let p = *p;
    let mass = p.mass();
    let damp = p.atomic_damping();
    move |y: &[f64; 7]| {
        let (x, mom) = (y[0], y[1]);
        let (ar, ai, sr, si, z) = (y[2], y[3], y[4], y[5], y[6]);
        let g = p.coupling(x);
        let dg = p.grad_coupling(x);
        let im_as = ar * si - ai * sr;
        let re_as = ar * sr + ai * si;
        [
            mom / mass,
            dg * 2.0 * im_as,
            -p.kappa * ar + g * sr,
            -p.kappa * ai + g * si,
            -damp * sr - p.delta * si + g * z * ar,
            -damp * si + p.delta * sr + g * z * ai,
            -2.0 * damp * z - 4.0 * g * re_as + 2.0 * (p.nu - p.gamma),
        ]
    }
}

/// Advances the coupled state by `steps` RK4 steps of size `dt`.
pub fn evolve_coupled(params: &SystemParams, state: CoupledState, dt: f64, steps: usize) -> CoupledState {
    let rhs = coupled_rhs(params);
    let mut y = state.to_array();
    for _ in 0..steps {
        y = crate::numerics::rk4_step(&rhs, &y, dt);
    }
    CoupledState::from_array(&y)
}

/// Deterministic coupled evolution of atomic motion and c-number field.
///
/// `ẋ = p/m`, `ṗ = (∇G)·2 Im(α*s)` together with [`lamb_rhs`] at the moving
/// position, integrated with fixed-step RK4. Every `sample_every`-th step is
/// recorded (the initial and final states are always recorded).
pub fn integrate_coupled(
    params: &SystemParams,
    init: CoupledState,
    dt: f64,
    t_end: f64,
    sample_every: usize,
) -> Result<Trajectory> {
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(Error::Precondition("dt and t_end must be positive".into()));
    }
    let limit = max_coupled_step(params);
    if dt > limit {
        return Err(Error::UnstableStep { dt, suggested: limit });
    }
    let stride = sample_every.max(1);
    let rhs = coupled_rhs(params);
    let mut y = init.to_array();
    let steps = (t_end / dt).round() as usize;
    let mut samples = Vec::with_capacity(steps / stride + 2);
    let record = |t: f64, y: &[f64; 7]| Sample {
        t,
        x: y[0],
        p: y[1],
        n: y[2] * y[2] + y[3] * y[3],
        z: Some(y[6]),
    };
    samples.push(record(0.0, &y));
    for step in 1..=steps {
        y = crate::numerics::rk4_step(&rhs, &y, dt);
        if step % stride == 0 || step == steps {
            samples.push(record(step as f64 * dt, &y));
        }
    }
    Ok(Trajectory {
        samples,
        seed: None,
        dt,
        mode: TrajectoryMode::FullLamb,
        mass: params.mass(),
        heating_warning: false,
    })
}
