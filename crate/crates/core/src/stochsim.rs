//! Stochastic semiclassical atomic motion.
//!
//! The atom follows `ẋ = p/m`, `ṗ = F(x) + β(x) p/m + ξ` with
//! `⟨ξ(t)ξ(t')⟩ = 2𝒟(x) δ(t−t')`, where the internal and field degrees of
//! freedom are adiabatically eliminated. Coefficients are tabulated once per
//! parameter set on a periodic grid and interpolated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lamb::{integrate_coupled, lamb_steady_state, max_coupled_step, CoupledState};
use crate::moments::{mean_force, solve_self_consistent};
use crate::motion::{diffusion_field, diffusion_recoil_with, friction, position_average};
use crate::numerics::PeriodicTable;
use crate::params::{distance_to_antinode, SystemParams, WAVELENGTH};
use crate::trajectory::{Sample, Trajectory, TrajectoryMode};

/// Position-dependent force, friction and diffusion seen by the atom.
pub trait ForceField: Sync {
    fn force(&self, x: f64) -> f64;
    /// Velocity coefficient β (negative damps).
    fn friction(&self, x: f64) -> f64;
    /// Total momentum diffusion.
    fn diffusion(&self, x: f64) -> f64;
    /// Photon number recorded alongside the motion.
    fn photons(&self, _x: f64) -> f64 {
        0.0
    }
    /// Largest |β| anywhere.
    fn max_friction(&self) -> f64;
    /// Curvature `−F'(x)` at the potential minimum (0 if untrapped).
    fn stiffness(&self) -> f64;
    /// Whether the averaged friction heats.
    fn heating(&self) -> bool {
        false
    }
}

/// Linear test field `F = −k x`, constant β and 𝒟.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearField {
    pub stiffness: f64,
    pub friction: f64,
    pub diffusion: f64,
}

impl LinearField {
    /// No force, no friction, no noise.
    pub fn free() -> Self {
        Self {
            stiffness: 0.0,
            friction: 0.0,
            diffusion: 0.0,
        }
    }
}

impl ForceField for LinearField {
    fn force(&self, x: f64) -> f64 {
        -self.stiffness * x
    }
    fn friction(&self, _x: f64) -> f64 {
        self.friction
    }
    fn diffusion(&self, _x: f64) -> f64 {
        self.diffusion
    }
    fn max_friction(&self) -> f64 {
        self.friction.abs()
    }
    fn stiffness(&self) -> f64 {
        self.stiffness.max(0.0)
    }
    fn heating(&self) -> bool {
        self.friction > 0.0
    }
}

/// Tabulated moment-model coefficients on one period `[0, λ/2)`.
#[derive(Debug, Clone)]
pub struct GridField {
    force: PeriodicTable,
    friction: PeriodicTable,
    diffusion: PeriodicTable,
    photons: PeriodicTable,
    max_friction: f64,
    stiffness: f64,
    beta_avg: f64,
}

impl GridField {
    pub fn new(params: &SystemParams, points: usize) -> Result<Self> {
        Self::with_recoil_geometry(params, points, 1.0)
    }

    pub fn with_recoil_geometry(params: &SystemParams, points: usize, geometry: f64) -> Result<Self> {
        params.validate()?;
        if points < 16 {
            return Err(Error::Precondition(format!("grid needs at least 16 points, got {points}")));
        }
        let period = WAVELENGTH / 2.0;
        let h = period / points as f64;
        let rows: Vec<[f64; 4]> = (0..points)
            .into_par_iter()
            .map(|i| -> Result<[f64; 4]> {
                let x = i as f64 * h;
                Ok([
                    mean_force(params, x)?,
                    friction(params, x)?,
                    diffusion_field(params, x)? + diffusion_recoil_with(params, x, geometry)?,
                    solve_self_consistent(params, x)?.n,
                ])
            })
            .collect::<Result<_>>()?;
        let col = |j: usize| PeriodicTable::from_values(rows.iter().map(|r| r[j]).collect(), period);
        let max_friction = rows.iter().map(|r| r[1].abs()).fold(0.0, f64::max);
        // −F'(0) by a central difference on the exact force
        let dx = 1e-5;
        let stiffness = -(mean_force(params, dx)? - mean_force(params, -dx)?) / (2.0 * dx);
        let beta_avg = position_average(|x| friction(params, x).unwrap_or(f64::NAN));
        Ok(Self {
            force: col(0),
            friction: col(1),
            diffusion: col(2),
            photons: col(3),
            max_friction,
            stiffness,
            beta_avg,
        })
    }

    pub fn beta_avg(&self) -> f64 {
        self.beta_avg
    }
}

impl ForceField for GridField {
    fn force(&self, x: f64) -> f64 {
        self.force.eval(x)
    }
    fn friction(&self, x: f64) -> f64 {
        self.friction.eval(x)
    }
    fn diffusion(&self, x: f64) -> f64 {
        // interpolation may undershoot slightly near zeros
        self.diffusion.eval(x).max(0.0)
    }
    fn photons(&self, x: f64) -> f64 {
        self.photons.eval(x)
    }
    fn max_friction(&self) -> f64 {
        self.max_friction
    }
    fn stiffness(&self) -> f64 {
        // Δ < 0 puts the minima at the nodes; the guard only needs a scale
        self.stiffness.abs()
    }
    fn heating(&self) -> bool {
        !(self.beta_avg < 0.0)
    }
}

/// Integration controls for [`simulate_in_field`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Record every n-th step (initial and final states always recorded).
    pub record_every: usize,
    /// Normal draws summed into each step's noise. Running with `dt/2` and
    /// 1 substep reuses the same Brownian path as `dt` with 2 substeps.
    pub noise_substeps: usize,
}

impl SimOptions {
    pub fn new(dt: f64, t_end: f64) -> Self {
        Self {
            dt,
            t_end,
            record_every: 1,
            noise_substeps: 1,
        }
    }
}

/// Largest step allowed for a field and mass: both `dt·max|β|/m` and
/// `dt·ω_osc` must stay below 0.1.
pub fn max_stable_step<F: ForceField + ?Sized>(field: &F, mass: f64) -> f64 {
    let rate = (field.max_friction() / mass).max((field.stiffness() / mass).sqrt());
    if rate > 0.0 {
        0.1 / rate
    } else {
        f64::INFINITY
    }
}

/// One Euler–Maruyama trajectory in a force field.
///
/// `p ← p + (F + βp/m)dt + √(2𝒟dt)·ξ`, then `x ← x + p dt/m` with the
/// updated momentum (symplectic Euler in the deterministic part).
pub fn simulate_in_field<F: ForceField + ?Sized>(
    field: &F,
    mass: f64,
    init: (f64, f64),
    seed: u64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    let SimOptions {
        dt,
        t_end,
        record_every,
        noise_substeps,
    } = *opts;
    if !(dt > 0.0) || !(t_end > 0.0) || !(mass > 0.0) {
        return Err(Error::Precondition("dt, t_end and mass must be positive".into()));
    }
    if noise_substeps == 0 {
        return Err(Error::Precondition("noise_substeps must be at least 1".into()));
    }
    let limit = max_stable_step(field, mass);
    if dt > limit {
        return Err(Error::UnstableStep { dt, suggested: limit });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stride = record_every.max(1);
    let steps = (t_end / dt).round() as usize;
    let norm = 1.0 / (noise_substeps as f64).sqrt();
    let (mut x, mut p) = init;
    let record = |t: f64, x: f64, p: f64| Sample {
        t,
        x,
        p,
        n: field.photons(x),
        z: None,
    };
    let mut samples = Vec::with_capacity(steps / stride + 2);
    samples.push(record(0.0, x, p));
    for step in 1..=steps {
        let mut xi = 0.0;
        for _ in 0..noise_substeps {
            xi += rng.sample::<f64, _>(StandardNormal);
        }
        xi *= norm;
        let drift = field.force(x) + field.friction(x) * p / mass;
        p += drift * dt + (2.0 * field.diffusion(x) * dt).sqrt() * xi;
        x += p / mass * dt;
        if step % stride == 0 || step == steps {
            samples.push(record(step as f64 * dt, x, p));
        }
    }
    Ok(Trajectory {
        samples,
        seed: Some(seed),
        dt,
        mode: TrajectoryMode::AdiabaticStochastic,
        mass,
        heating_warning: field.heating(),
    })
}

/// Per-trajectory stream seed.
pub fn stream_seed(seed: u64, index: usize) -> u64 {
    seed ^ index as u64
}

/// Runs one trajectory per initial condition in parallel; trajectory `i`
/// uses seed `seed ⊕ i` and the output keeps the input order.
pub fn simulate_ensemble<F: ForceField + ?Sized>(
    field: &F,
    mass: f64,
    inits: &[(f64, f64)],
    seed: u64,
    opts: &SimOptions,
) -> Result<Vec<Trajectory>> {
    inits
        .par_iter()
        .enumerate()
        .map(|(i, &init)| simulate_in_field(field, mass, init, stream_seed(seed, i), opts))
        .collect()
}

/// Thermal initial conditions: `x` uniform over a wavelength and `p` normal
/// with variance `m·kT`.
pub fn thermal_initial_conditions(n: usize, mass: f64, kt: f64, seed: u64) -> Vec<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = (mass * kt.max(0.0)).sqrt();
    (0..n)
        .map(|_| {
            let x = rng.random::<f64>() * WAVELENGTH;
            let p = sd * rng.sample::<f64, _>(StandardNormal);
            (x, p)
        })
        .collect()
}

/// Single trajectory in either mode.
///
/// `FullLamb` integrates the deterministic atom + c-number field system
/// starting from the steady field at the initial position (the seed is only
/// recorded). `AdiabaticStochastic` tabulates the moment-model coefficients
/// on 1024 points and runs Euler–Maruyama.
pub fn simulate(
    params: &SystemParams,
    init: (f64, f64),
    seed: u64,
    opts: &SimOptions,
    mode: TrajectoryMode,
) -> Result<Trajectory> {
    params.validate()?;
    match mode {
        TrajectoryMode::FullLamb => {
            let limit = max_coupled_step(params);
            if opts.dt > limit {
                return Err(Error::UnstableStep {
                    dt: opts.dt,
                    suggested: limit,
                });
            }
            let field = lamb_steady_state(params, init.0).state();
            let state = CoupledState {
                x: init.0,
                p: init.1,
                field,
            };
            let mut tr = integrate_coupled(params, state, opts.dt, opts.t_end, opts.record_every)?;
            tr.seed = Some(seed);
            Ok(tr)
        }
        TrajectoryMode::AdiabaticStochastic => {
            let field = GridField::new(params, 1024)?;
            simulate_in_field(&field, params.mass(), init, seed, opts)
        }
    }
}

/// Late-time ensemble statistics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    /// Empirical temperature `⟨p²⟩/m` over the window.
    pub kt_emp: f64,
    /// Standard error of `kt_emp`.
    pub kt_se: f64,
    /// Fraction of window samples within λ/8 of an antinode.
    pub loc: f64,
    pub n_traj: usize,
    /// Trailing fraction of each trajectory that was analysed.
    pub window: f64,
}

/// Statistics over the trailing `window` fraction of every trajectory.
///
/// Each trajectory's window mean is one batch; with a single trajectory
/// the window is split into 10 consecutive batches instead.
pub fn ensemble_stats(trajs: &[Trajectory], window: f64) -> Result<EnsembleStats> {
    if trajs.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Precondition(format!("window {window} must lie in (0, 1]")));
    }
    let mut batches = Vec::new();
    let (mut near, mut total) = (0usize, 0usize);
    for tr in trajs {
        let tail = tr.tail(window);
        if tail.is_empty() {
            return Err(Error::EmptyInput);
        }
        let energy = |s: &Sample| s.p * s.p / tr.mass;
        near += tail
            .iter()
            .filter(|s| distance_to_antinode(s.x) <= WAVELENGTH / 8.0)
            .count();
        total += tail.len();
        if trajs.len() == 1 {
            let size = (tail.len() / 10).max(1);
            for chunk in tail.chunks(size) {
                batches.push(chunk.iter().map(energy).sum::<f64>() / chunk.len() as f64);
            }
        } else {
            batches.push(tail.iter().map(energy).sum::<f64>() / tail.len() as f64);
        }
    }
    let nb = batches.len() as f64;
    let mean = batches.iter().sum::<f64>() / nb;
    let se = if batches.len() > 1 {
        let var = batches.iter().map(|b| (b - mean).powi(2)).sum::<f64>() / (nb - 1.0);
        (var / nb).sqrt()
    } else {
        f64::NAN
    };
    Ok(EnsembleStats {
        kt_emp: mean,
        kt_se: se,
        loc: near as f64 / total as f64,
        n_traj: trajs.len(),
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn free_flight_is_exact() {
        let tr = simulate_in_field(
            &LinearField::free(),
            2.0,
            (0.5, 3.0),
            7,
            &SimOptions::new(0.01, 2.0),
        )
        .unwrap();
        for s in &tr.samples {
            assert_relative_eq!(s.x, 0.5 + 1.5 * s.t, max_relative = 1e-12);
            assert_eq!(s.p, 3.0);
        }
        assert_eq!(tr.samples.len(), 201);
    }

    #[test]
    fn harmonic_period() {
        let field = LinearField {
            stiffness: 4.0,
            friction: 0.0,
            diffusion: 0.0,
        };
        let mass = 1.0;
        let omega = (field.stiffness / mass).sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        let dt = period / 2000.0;
        let tr = simulate_in_field(&field, mass, (0.1, 0.0), 0, &SimOptions::new(dt, 10.0 * period)).unwrap();
        // upward zero crossings of p measure the period
        let crossings: Vec<f64> = tr
            .samples
            .windows(2)
            .filter(|w| w[0].p < 0.0 && w[1].p >= 0.0)
            .map(|w| w[0].t - w[0].p * (w[1].t - w[0].t) / (w[1].p - w[0].p))
            .collect();
        assert!(crossings.len() >= 9);
        let measured = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
        assert!((measured - period).abs() / period < 0.01);
        // symplectic update keeps the amplitude
        let amp = tr.tail(0.1).iter().map(|s| s.x.abs()).fold(0.0, f64::max);
        assert!((amp - 0.1).abs() < 1e-3);
    }

    #[test]
    fn grid_field_harmonic_frequency() {
        let p = SystemParams::new(10.0, 20.0, 100.0, 200.0);
        let field = GridField::new(&p, 1024).unwrap();
        let k = field.stiffness();
        assert!(k > 0.0);
        let mass = p.mass();
        let omega = (k / mass).sqrt();
        let period = 2.0 * std::f64::consts::PI / omega;
        // noise and friction off: a small oscillation in the tabulated force
        let linear = LinearField {
            stiffness: k,
            friction: 0.0,
            diffusion: 0.0,
        };
        struct ForceOnly<'a>(&'a GridField);
        impl ForceField for ForceOnly<'_> {
            fn force(&self, x: f64) -> f64 {
                self.0.force(x)
            }
            fn friction(&self, _: f64) -> f64 {
                0.0
            }
            fn diffusion(&self, _: f64) -> f64 {
                0.0
            }
            fn max_friction(&self) -> f64 {
                0.0
            }
            fn stiffness(&self) -> f64 {
                self.0.stiffness()
            }
        }
        let opts = SimOptions::new(period / 1000.0, 10.0 * period);
        let a = simulate_in_field(&ForceOnly(&field), mass, (1e-3, 0.0), 0, &opts).unwrap();
        let b = simulate_in_field(&linear, mass, (1e-3, 0.0), 0, &opts).unwrap();
        let last = (a.samples.last().unwrap().x, b.samples.last().unwrap().x);
        assert!((last.0 - last.1).abs() < 0.01 * 1e-3, "{last:?}");
    }

    #[test]
    fn stability_guard() {
        let field = LinearField {
            stiffness: 100.0,
            friction: -1.0,
            diffusion: 0.0,
        };
        match simulate_in_field(&field, 1.0, (0.0, 0.0), 0, &SimOptions::new(0.02, 1.0)) {
            Err(Error::UnstableStep { suggested, .. }) => assert_relative_eq!(suggested, 0.01),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let field = LinearField {
            stiffness: 1.0,
            friction: -0.5,
            diffusion: 0.3,
        };
        let opts = SimOptions::new(0.01, 5.0);
        let inits = thermal_initial_conditions(8, 1.0, 0.6, 11);
        let a = simulate_ensemble(&field, 1.0, &inits, 42, &opts).unwrap();
        let b = simulate_ensemble(&field, 1.0, &inits, 42, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(ensemble_stats(&a, 0.5).unwrap(), ensemble_stats(&b, 0.5).unwrap());
        let c = simulate_ensemble(&field, 1.0, &inits, 43, &opts).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn ornstein_uhlenbeck_temperature() {
        // free particle with constant friction and diffusion: ⟨p²⟩/m → 𝒟/|β|
        let field = LinearField {
            stiffness: 0.0,
            friction: -2.0,
            diffusion: 3.0,
        };
        let mass = 1.0;
        let expected = 1.5;
        let inits = vec![(0.0, 0.0); 200];
        let opts = SimOptions {
            record_every: 10,
            ..SimOptions::new(1e-3, 20.0)
        };
        let trajs = simulate_ensemble(&field, mass, &inits, 5, &opts).unwrap();
        let st = ensemble_stats(&trajs, 0.7).unwrap();
        // Euler–Maruyama bias is O(dt|β|/m) = 0.2 %
        assert!((st.kt_emp - expected).abs() < 4.0 * st.kt_se + 0.003 * expected, "{st:?}");
        assert!(st.kt_se < 0.05);
    }

    #[test]
    fn stats_of_trapped_deterministic_run() {
        let field = LinearField {
            stiffness: 1.0,
            friction: -0.1,
            diffusion: 0.0,
        };
        let tr = simulate_in_field(&field, 1.0, (0.2, 0.0), 0, &SimOptions::new(0.01, 50.0)).unwrap();
        let st = ensemble_stats(std::slice::from_ref(&tr), 0.1).unwrap();
        assert_eq!(st.loc, 1.0);
        assert_eq!(st.n_traj, 1);
        assert!(ensemble_stats(&[], 0.5).is_err());
        assert!(ensemble_stats(std::slice::from_ref(&tr), 0.0).is_err());
    }

    #[test]
    fn stats_are_permutation_invariant_in_value() {
        let field = LinearField {
            stiffness: 1.0,
            friction: -0.5,
            diffusion: 0.3,
        };
        let inits = thermal_initial_conditions(6, 1.0, 0.6, 3);
        let mut trajs = simulate_ensemble(&field, 1.0, &inits, 9, &SimOptions::new(0.01, 5.0)).unwrap();
        let a = ensemble_stats(&trajs, 0.5).unwrap();
        trajs.reverse();
        let b = ensemble_stats(&trajs, 0.5).unwrap();
        assert_relative_eq!(a.kt_emp, b.kt_emp, max_relative = 1e-12);
        assert_relative_eq!(a.kt_se, b.kt_se, max_relative = 1e-9);
        assert_eq!(a.loc, b.loc);
    }

    #[test]
    fn heating_is_flagged_not_rejected() {
        let p = SystemParams::new(10.0, 5.0, 50.0, 100.0);
        let field = GridField::new(&p, 256).unwrap();
        assert!(field.heating());
        let dt = 0.5 * max_stable_step(&field, p.mass());
        let tr = simulate_in_field(&field, p.mass(), (0.3, 0.0), 1, &SimOptions::new(dt, 1.0)).unwrap();
        assert!(tr.heating_warning);
    }

    #[test]
    fn full_lamb_mode_at_node_is_static() {
        let p = SystemParams::new(10.0, 20.0, 100.0, 200.0);
        let tr = simulate(
            &p,
            (WAVELENGTH / 4.0, 0.0),
            3,
            &SimOptions::new(1e-4, 0.5),
            TrajectoryMode::FullLamb,
        )
        .unwrap();
        assert_eq!(tr.mode, TrajectoryMode::FullLamb);
        assert!(tr.samples.iter().all(|s| s.x == WAVELENGTH / 4.0));
    }
}
