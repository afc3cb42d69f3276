//! Small numerical building blocks: quadrature, periodic interpolation,
//! fixed-step RK4, adaptive Dormand-Prince and a bracketed root finder.

use roots::{find_root_brent, SimpleConvergency};

use crate::error::{Error, Result};

/// Composite Simpson rule for `f` on `[a, b]` with `points` nodes.
///
/// `points` is rounded up to the next odd number (at least 3).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, points: usize) -> f64 {
    let n = simpson_points(points);
    let h = (b - a) / (n - 1) as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n - 1 {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

/// Simpson weights applied to uniformly spaced samples `ys` with spacing `h`.
pub fn simpson_samples(ys: &[f64], h: f64) -> f64 {
    let n = ys.len();
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd number (>= 3) of samples");
    let mut acc = ys[0] + ys[n - 1];
    for (i, y) in ys.iter().enumerate().take(n - 1).skip(1) {
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * y;
    }
    acc * h / 3.0
}

fn simpson_points(points: usize) -> usize {
    let n = points.max(3);
    if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    }
}

/// Uniformly sampled periodic function with cubic (Catmull-Rom) interpolation.
#[derive(Debug, Clone)]
pub struct PeriodicTable {
    period: f64,
    values: Vec<f64>,
}

impl PeriodicTable {
    /// Samples `f` at `n` equally spaced points on `[0, period)`.
    pub fn sample<F: Fn(f64) -> f64>(f: F, period: f64, n: usize) -> Self {
        assert!(n >= 4, "need at least four samples for cubic interpolation");
        let h = period / n as f64;
        let values = (0..n).map(|i| f(i as f64 * h)).collect();
        Self { period, values }
    }

    pub fn from_values(values: Vec<f64>, period: f64) -> Self {
        assert!(values.len() >= 4);
        Self { period, values }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.values.len();
        let u = x.rem_euclid(self.period) / self.period * n as f64;
        let i = u.floor() as usize;
        let t = u - i as f64;
        let at = |k: isize| self.values[(i as isize + k).rem_euclid(n as isize) as usize];
        let (p0, p1, p2, p3) = (at(-1), at(0), at(1), at(2));
        // Catmull-Rom
        p1 + 0.5
            * t
            * (p2 - p0 + t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 + t * (3.0 * (p1 - p2) + p3 - p0)))
    }
}

/// One classical fourth-order Runge-Kutta step for an autonomous system.
#[inline]
pub fn rk4_step<const N: usize, F>(rhs: &F, y: &[f64; N], dt: f64) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let axpy = |a: &[f64; N], s: f64, b: &[f64; N]| {
        let mut out = *a;
        for i in 0..N {
            out[i] += s * b[i];
        }
        out
    };
    let k1 = rhs(y);
    let k2 = rhs(&axpy(y, 0.5 * dt, &k1));
    let k3 = rhs(&axpy(y, 0.5 * dt, &k2));
    let k4 = rhs(&axpy(y, dt, &k3));
    let mut out = *y;
    for i in 0..N {
        out[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    out
}

/// Integrates `y' = rhs(y)` from `t = 0` to `t_end` with the adaptive
/// Dormand-Prince 5(4) pair and a mixed `atol + rtol·|y|` error norm.
///
/// Returns the final state and the number of accepted steps.
pub fn dopri5<const N: usize, F>(
    rhs: &F,
    y0: &[f64; N],
    t_end: f64,
    rtol: f64,
    atol: f64,
) -> Result<([f64; N], usize)>
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
        [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
        [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    // difference between the 5th- and 4th-order weights
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    if !(t_end > 0.0) || !(rtol > 0.0) || !(atol > 0.0) {
        return Err(Error::Precondition("t_end, rtol and atol must be positive".into()));
    }
    let mut y = *y0;
    let mut t = 0.0;
    let mut k1 = rhs(&y);
    // starting step from the scaled norms of y and y' (Hairer, Nørsett & Wanner)
    let norm = |v: &[f64; N]| {
        let sum: f64 = (0..N)
            .map(|i| (v[i] / (atol + rtol * y0[i].abs())).powi(2))
            .sum();
        (sum / N as f64).sqrt()
    };
    let (d0, d1) = (norm(&y), norm(&k1));
    let mut h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    h = h.min(t_end);
    let mut accepted = 0usize;
    let mut attempts = 0usize;
    while t < t_end {
        attempts += 1;
        if attempts > 10_000_000 {
            return Err(Error::Precondition("adaptive integration exceeded the step budget".into()));
        }
        if t + h > t_end {
            h = t_end - t;
        }
        let mut k = [[0.0; N]; 7];
        k[0] = k1;
        for s in 0..6 {
            let mut ys = y;
            for i in 0..N {
                let mut acc = 0.0;
                for j in 0..=s {
                    acc += A[s][j] * k[j][i];
                }
                ys[i] += h * acc;
            }
            if s == 5 {
                // FSAL: the last stage point is the 5th-order solution
                k[6] = rhs(&ys);
                let mut err = 0.0f64;
                for i in 0..N {
                    let mut e = 0.0;
                    for j in 0..7 {
                        e += E[j] * k[j][i];
                    }
                    let sc = atol + rtol * y[i].abs().max(ys[i].abs());
                    err = err.max((h * e / sc).abs());
                }
                if !err.is_finite() {
                    h *= 0.1;
                    break;
                }
                if err <= 1.0 {
                    t += h;
                    y = ys;
                    k1 = k[6];
                    accepted += 1;
                }
                let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                h *= if err <= 1.0 { fac } else { fac.min(1.0) };
            } else {
                k[s + 1] = rhs(&ys);
            }
        }
        if h < 1e-14 * t_end.max(1.0) {
            return Err(Error::Precondition(format!("step size underflow at t = {t}")));
        }
    }
    Ok((y, accepted))
}

/// Brent root search on a sign-changing bracket.
pub fn brent<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    let mut conv = SimpleConvergency {
        eps: tol,
        max_iter: 200,
    };
    find_root_brent(a, b, f, &mut conv).map_err(|e| Error::RootSearch(format!("{e:?}")))
}
