use serde::{Deserialize, Serialize};

/// How a trajectory was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryMode {
    /// Deterministic atom + c-number field dynamics.
    FullLamb,
    /// Atom in the adiabatic force field with friction and momentum noise.
    AdiabaticStochastic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub x: f64,
    pub p: f64,
    /// Photon number at the sample.
    pub n: f64,
    /// Atomic inversion, when the internal state is integrated.
    pub z: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<Sample>,
    pub seed: Option<u64>,
    pub dt: f64,
    pub mode: TrajectoryMode,
    /// Atomic mass used for the run.
    pub mass: f64,
    /// Set when the parameters heat rather than cool on average.
    pub heating_warning: bool,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples in the trailing `fraction` of the run (by sample count).
    pub fn tail(&self, fraction: f64) -> &[Sample] {
        let n = self.samples.len();
        let keep = ((n as f64) * fraction.clamp(0.0, 1.0)).ceil() as usize;
        &self.samples[n - keep.min(n)..]
    }

    /// Samples in the leading `fraction` of the run.
    pub fn head(&self, fraction: f64) -> &[Sample] {
        let n = self.samples.len();
        let keep = ((n as f64) * fraction.clamp(0.0, 1.0)).ceil() as usize;
        &self.samples[..keep.min(n)]
    }

    pub fn kinetic_energy(&self, s: &Sample) -> f64 {
        s.p * s.p / (2.0 * self.mass)
    }
}

pub fn mean_photon_number(samples: &[Sample]) -> f64 {
    if samples.is_empty() {
        return f64::NAN;
    }
    samples.iter().map(|s| s.n).sum::<f64>() / samples.len() as f64
}
