//! Quick runtime self-checks: dual-implementation oracles and invariants
//! evaluated on small deterministic grids.

use serde::{Deserialize, Serialize};

use crate::goodcavity::{gc_min_temperature, gc_temperature, OperatingPoint};
use crate::lamb::{continuity_residual, lamb_stationarity_residual, lamb_steady_state};
use crate::moments::{inversion_at, inversion_gradient, mean_force, solve_self_consistent, system_matrix};
use crate::motion::{diffusion_field, diffusion_field_assembled, friction, friction_matrix};
use crate::params::{SystemParams, WAVELENGTH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Worst observed deviation against the tolerance.
    pub detail: String,
}

fn check(name: &str, worst: f64, tol: f64) -> CheckResult {
    CheckResult {
        name: name.to_string(),
        passed: worst.is_finite() && worst <= tol,
        detail: format!("max deviation {worst:.3e} (tolerance {tol:.1e})"),
    }
}

fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

fn grid(n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |i| (i as f64 + 0.37) / n as f64 * WAVELENGTH)
}

fn families() -> [SystemParams; 3] {
    [
        SystemParams::new(10.0, 20.0, 100.0, 200.0),
        SystemParams::new(20.0, 25.0, 20.0, 35.0),
        SystemParams::new(5.0, 40.0, 40.0, 250.0),
    ]
}

/// Runs every check and returns one result per check.
pub fn run_all() -> Vec<CheckResult> {
    let mut out = Vec::new();

    let mut worst: f64 = 0.0;
    for p in families() {
        for x in grid(64) {
            let l = lamb_steady_state(&p, x);
            worst = worst.max(continuity_residual(l.population(), l.n, &p).abs());
            worst = worst.max(lamb_stationarity_residual(&p, x, &l));
            match solve_self_consistent(&p, x) {
                Ok(s) => worst = worst.max(continuity_residual(s.p, s.n, &p).abs()),
                Err(_) => worst = f64::INFINITY,
            }
        }
    }
    out.push(check("steady states satisfy the continuity equation", worst, 1e-10));

    let mut worst: f64 = 0.0;
    for p in families() {
        for x in grid(32) {
            let r = solve_self_consistent(&p, x).map(|s| {
                let (m, v) = system_matrix(&p, x, s.z);
                (m * s.moments().to_vector() + v).amax()
            });
            worst = worst.max(r.unwrap_or(f64::INFINITY));
        }
    }
    out.push(check("moment steady state solves M X + v = 0", worst, 1e-9));

    let mut worst: f64 = 0.0;
    for p in families() {
        for x in grid(32) {
            let a = friction(&p, x);
            let b = friction_matrix(&p, x);
            worst = worst.max(match (a, b) {
                (Ok(a), Ok(b)) => rel(a, b),
                _ => f64::INFINITY,
            });
        }
    }
    out.push(check("friction: closed form vs linear response", worst, 1e-6));

    let mut worst: f64 = 0.0;
    let mut negative = false;
    for p in families() {
        for x in grid(32) {
            match (diffusion_field(&p, x), diffusion_field_assembled(&p, x)) {
                (Ok(a), Ok(b)) => {
                    negative |= a < 0.0 || b < 0.0;
                    worst = worst.max(rel(a, b));
                }
                _ => worst = f64::INFINITY,
            }
        }
    }
    out.push(check("diffusion: closed form vs noise covariance", worst, 1e-6));
    out.push(CheckResult {
        name: "diffusion is non-negative".into(),
        passed: !negative,
        detail: if negative { "negative value found".into() } else { "ok".into() },
    });

    let mut worst: f64 = 0.0;
    for p in families() {
        for x in grid(16) {
            let h = 1e-6 * WAVELENGTH;
            let fd = (inversion_at(&p, p.coupling(x + h)) - inversion_at(&p, p.coupling(x - h))) / (2.0 * h);
            let an = inversion_gradient(&p, x);
            if an.abs() > 1e-8 {
                worst = worst.max(rel(an, fd));
            }
        }
    }
    out.push(check("inversion gradient vs finite difference", worst, 1e-6));

    let mut worst: f64 = 0.0;
    for p in families() {
        for x in grid(32) {
            let q = p.with_delta(-p.delta);
            worst = worst.max(match (mean_force(&p, x), mean_force(&q, x)) {
                (Ok(a), Ok(b)) => (a + b).abs(),
                _ => f64::INFINITY,
            });
        }
    }
    out.push(check("force is odd in the detuning", worst, 1e-12));

    let mut worst: f64 = 0.0;
    for i in 1..=40 {
        let y = 0.1 * i as f64;
        let (t, a) = gc_min_temperature(y).unwrap_or((f64::NAN, f64::NAN));
        worst = worst.max((gc_temperature(OperatingPoint { a, y }) - t).abs());
        worst = worst.max(((y * y + 2.0).sqrt() - y - t).abs());
    }
    out.push(check("good-cavity minimum temperature identity", worst, 1e-12));

    out
}
