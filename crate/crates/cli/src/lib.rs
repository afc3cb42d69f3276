//! Command-line front end: JSON run configuration, the `steady`,
//! `temperature`, `trajectory`, `goodcavity` and `selftest` commands, and
//! CSV/JSON output.

use std::fmt::Write as _;
use std::io::Read;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use cavlaser_core::goodcavity::{gc_convergence_check, gc_min_temperature, gc_temperature};
use cavlaser_core::lamb::{force_lamb, lamb_steady_state};
use cavlaser_core::moments::{peak_photon_number, pump_for_photon_number};
use cavlaser_core::motion::{
    equilibrium_temperature_with, motion_coefficients_with, EquilibriumOptions,
};
use cavlaser_core::params::{from_wavelengths, to_wavelengths};
use cavlaser_core::stochsim::{
    ensemble_stats, simulate, simulate_ensemble, stream_seed, thermal_initial_conditions,
    GridField, SimOptions,
};
use cavlaser_core::{
    Error as CoreError, GoodCavityFamily, OperatingPoint, SystemParams, Trajectory, TrajectoryMode,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "cavlaser", version, about = "Single-atom laser: steady states, cooling and trajectories")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration (`-` reads stdin).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output CSV path (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: available processors).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Steady-state profiles along the cavity axis.
    Steady,
    /// Equilibrium temperature sweeps.
    Temperature,
    /// Deterministic or stochastic trajectories.
    Trajectory,
    /// Good-cavity limit curves and convergence check.
    Goodcavity,
    /// Run the built-in consistency checks.
    Selftest,
}

/// Inclusive linear range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Range {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Range {
    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

/// Explicit values or a range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Values {
    List(Vec<f64>),
    Range(Range),
}

impl Values {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Values::List(v) => v.clone(),
            Values::Range(r) => r.values(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteadyConfig {
    /// Positions in units of λ.
    pub x: Values,
    /// Detunings (κ units); the configured Δ when empty.
    pub delta: Option<Values>,
}

impl Default for SteadyConfig {
    fn default() -> Self {
        Self {
            x: Values::Range(Range {
                start: 0.0,
                stop: 0.5,
                points: 101,
            }),
            delta: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVariable {
    Delta,
    G,
    Nu,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TemperatureConfig {
    pub variable: SweepVariable,
    pub values: Values,
    /// Adjust ν at every point so that the antinode photon number equals
    /// this value (lower pump branch).
    pub target_photons: Option<f64>,
    pub average_points: usize,
    pub recoil_geometry: f64,
}

impl Default for TemperatureConfig {
    fn default() -> Self {
        Self {
            variable: SweepVariable::Delta,
            values: Values::List(vec![]),
            target_photons: None,
            average_points: 513,
            recoil_geometry: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryConfig {
    pub mode: TrajectoryMode,
    pub dt: f64,
    pub t_end: f64,
    pub n_traj: usize,
    /// Initial position in units of λ (ignored with `thermal_start`).
    pub x0: f64,
    pub p0: f64,
    /// Draw initial states from the predicted equilibrium distribution.
    pub thermal_start: bool,
    pub record_every: usize,
    pub noise_substeps: usize,
    /// Trailing fraction used for the statistics.
    pub window: f64,
    pub grid_points: usize,
    /// Stats JSON path; defaults to the CSV path with `.stats.json`.
    pub stats_out: Option<PathBuf>,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            mode: TrajectoryMode::FullLamb,
            dt: 1e-4,
            t_end: 10.0,
            n_traj: 1,
            x0: 0.0,
            p0: 0.0,
            thermal_start: false,
            record_every: 100,
            noise_substeps: 1,
            window: 0.1,
            grid_points: 1024,
            stats_out: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GoodCavityConfig {
    pub y: Values,
    pub a: Values,
    /// κ/ν values for the full-model comparison.
    pub ratios: Vec<f64>,
    /// Operating point for the comparison; `a*` of each y when absent.
    pub a_check: Option<f64>,
}

impl Default for GoodCavityConfig {
    fn default() -> Self {
        Self {
            y: Values::List(vec![0.5, 1.0, 2.0]),
            a: Values::Range(Range {
                start: 0.1,
                stop: 3.0,
                points: 30,
            }),
            ratios: vec![1e-1, 1e-2, 1e-3],
            a_check: None,
        }
    }
}

/// Full run configuration, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub params: SystemParams,
    pub seed: u64,
    /// Worker count; does not affect results, so it is left out of the
    /// recorded metadata.
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    pub steady: SteadyConfig,
    pub temperature: TemperatureConfig,
    pub trajectory: TrajectoryConfig,
    pub goodcavity: GoodCavityConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            seed: 1,
            threads: None,
            steady: SteadyConfig::default(),
            temperature: TemperatureConfig::default(),
            trajectory: TrajectoryConfig::default(),
            goodcavity: GoodCavityConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).context("invalid configuration")
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl std::fmt::Display for Cell {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            // Debug formatting is the shortest string that parses back to
            // the same f64
            Cell::Num(v) if *v == 0.0 => write!(f, "0.0"),
            Cell::Num(v) => write!(f, "{v:?}"),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Text(s) => write!(f, "{s}"),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    /// CSV text with a leading `#` metadata line.
    pub fn to_csv(&self, config: &RunConfig, command: &str) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# cavlaser {VERSION} {command} config={}", config.to_json());
        let _ = writeln!(s, "{}", self.header.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Index of a named column.
    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| *h == name)
    }

    /// Numeric values of a column (non-numeric cells become NaN).
    pub fn numbers(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.column(name) else {
            return vec![];
        };
        self.rows
            .iter()
            .map(|r| match &r[j] {
                Cell::Num(v) => *v,
                Cell::Int(v) => *v as f64,
                _ => f64::NAN,
            })
            .collect()
    }
}

/// Per-x profiles of the c-number and moment models.
pub fn cmd_steady(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    let xs = cfg.steady.x.values();
    if xs.is_empty() {
        bail!("steady: the x grid is empty");
    }
    let deltas = match &cfg.steady.delta {
        Some(v) => v.values(),
        None => vec![cfg.params.delta],
    };
    if deltas.is_empty() {
        bail!("steady: the delta grid is empty");
    }
    let opts = EquilibriumOptions::default();
    let mut table = Table::new(vec![
        "x_over_lambda", "delta", "G", "N_lamb", "z_lamb", "F_lamb", "N", "P", "Z", "F", "U", "beta",
        "Dfield", "Drec",
    ]);
    let jobs: Vec<(f64, f64)> = deltas
        .iter()
        .flat_map(|&d| xs.iter().map(move |&x| (d, x)))
        .collect();
    let rows: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|&(d, xl)| -> Result<Vec<Cell>> {
            let p = cfg.params.with_delta(d);
            let x = from_wavelengths(xl);
            let lamb = lamb_steady_state(&p, x);
            let sol = cavlaser_core::moments::solve_self_consistent(&p, x)?;
            let mc = motion_coefficients_with(&p, x, &opts)?;
            Ok(vec![
                xl.into(),
                d.into(),
                p.coupling(x).into(),
                lamb.n.into(),
                lamb.z.into(),
                force_lamb(&p, x).into(),
                sol.n.into(),
                sol.p.into(),
                sol.z.into(),
                mc.force.into(),
                mc.potential.into(),
                mc.beta.into(),
                mc.d_field.into(),
                mc.d_rec.into(),
            ])
        })
        .collect::<Result<_>>()?;
    table.rows = rows;
    Ok(table)
}

/// Equilibrium temperature along a parameter sweep.
pub fn cmd_temperature(cfg: &RunConfig) -> Result<Table> {
    cfg.validate()?;
    let tc = &cfg.temperature;
    let values = tc.values.values();
    if values.is_empty() {
        bail!("temperature: the sweep has no values");
    }
    if tc.target_photons.is_some() && tc.variable == SweepVariable::Nu {
        bail!("temperature: target_photons fixes nu, so nu cannot be the sweep variable");
    }
    let opts = EquilibriumOptions {
        points: tc.average_points,
        recoil_geometry: tc.recoil_geometry,
    };
    let mut table = Table::new(vec![
        "value", "gamma", "nu", "g", "delta", "N_max", "V", "beta_avg", "D_avg", "kT_hbar_gamma",
        "kT_hbar_kappa", "E_over_V", "status",
    ]);
    table.rows = values
        .par_iter()
        .map(|&v| -> Result<Vec<Cell>> {
            let mut p = match tc.variable {
                SweepVariable::Delta => cfg.params.with_delta(v),
                SweepVariable::G => cfg.params.with_g(v),
                SweepVariable::Nu => cfg.params.with_nu(v),
            };
            if let Some(n) = tc.target_photons {
                p = p.with_nu(pump_for_photon_number(&p, n)?);
            }
            let n_max = peak_photon_number(&p)?;
            let head = [v, p.gamma, p.nu, p.g, p.delta, n_max].map(Cell::Num);
            let mut row: Vec<Cell> = head.into_iter().collect();
            match equilibrium_temperature_with(&p, &opts) {
                Ok(s) => {
                    row.extend([s.v, s.beta_avg, s.d_avg, s.kt_doppler, s.kt / p.kappa, s.ratio].map(Cell::Num));
                    row.push(Cell::Text("ok".into()));
                }
                Err(CoreError::HeatingRegime { beta_avg }) => {
                    let v = cavlaser_core::motion::potential_depth(&p, cavlaser_core::ForceModel::Moments)?;
                    row.extend([Cell::Num(v), Cell::Num(beta_avg), Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
                    row.push(Cell::Text("heating".into()));
                }
                Err(e) => return Err(e.into()),
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    Ok(table)
}

/// Trajectory samples plus ensemble statistics.
pub struct TrajectoryOutput {
    pub table: Table,
    pub stats: cavlaser_core::EnsembleStats,
    pub trajectories: Vec<Trajectory>,
}

pub fn cmd_trajectory(cfg: &RunConfig) -> Result<TrajectoryOutput> {
    cfg.validate()?;
    let tc = &cfg.trajectory;
    if tc.n_traj == 0 {
        bail!("trajectory: n_traj must be at least 1");
    }
    let p = &cfg.params;
    let opts = SimOptions {
        dt: tc.dt,
        t_end: tc.t_end,
        record_every: tc.record_every,
        noise_substeps: tc.noise_substeps,
    };
    let trajectories = match tc.mode {
        TrajectoryMode::FullLamb => {
            let init = (from_wavelengths(tc.x0), tc.p0);
            (0..tc.n_traj)
                .into_par_iter()
                .map(|i| simulate(p, init, stream_seed(cfg.seed, i), &opts, TrajectoryMode::FullLamb))
                .collect::<std::result::Result<Vec<_>, _>>()?
        }
        TrajectoryMode::AdiabaticStochastic => {
            let field = GridField::new(p, tc.grid_points)?;
            let inits = if tc.thermal_start {
                let kt = equilibrium_temperature_with(p, &EquilibriumOptions::default())
                    .map(|s| s.kt)
                    .context("thermal_start needs a cooling operating point")?;
                thermal_initial_conditions(tc.n_traj, p.mass(), kt, cfg.seed.wrapping_add(0x9e37_79b9))
            } else {
                vec![(from_wavelengths(tc.x0), tc.p0); tc.n_traj]
            };
            simulate_ensemble(&field, p.mass(), &inits, cfg.seed, &opts)?
        }
    };
    let stats = ensemble_stats(&trajectories, tc.window)?;
    let mut table = Table::new(vec!["traj", "t", "x_over_lambda", "p", "N", "z"]);
    for (i, tr) in trajectories.iter().enumerate() {
        for s in &tr.samples {
            table.rows.push(vec![
                Cell::Int(i as i64),
                s.t.into(),
                to_wavelengths(s.x).into(),
                s.p.into(),
                s.n.into(),
                s.z.map_or(Cell::Empty, Cell::Num),
            ]);
        }
    }
    Ok(TrajectoryOutput {
        table,
        stats,
        trajectories,
    })
}

/// Limit curves `T(a; y)`, the minimum table and the convergence errors, in
/// one long-format table distinguished by the `kind` column.
pub fn cmd_goodcavity(cfg: &RunConfig) -> Result<Table> {
    let gc = &cfg.goodcavity;
    let ys = gc.y.values();
    let as_ = gc.a.values();
    if ys.is_empty() {
        bail!("goodcavity: no y values");
    }
    let mut table = Table::new(vec!["kind", "y", "a", "kappa_over_nu", "kT", "kT_limit", "rel_error"]);
    let text = |s: &str| Cell::Text(s.to_string());
    for &y in &ys {
        for &a in &as_ {
            let op = OperatingPoint::new(a, y)?;
            table.rows.push(vec![
                text("curve"),
                y.into(),
                a.into(),
                Cell::Empty,
                gc_temperature(op).into(),
                Cell::Empty,
                Cell::Empty,
            ]);
        }
    }
    for &y in &ys {
        let (t, a) = gc_min_temperature(y)?;
        table.rows.push(vec![text("minimum"), y.into(), a.into(), Cell::Empty, t.into(), Cell::Empty, Cell::Empty]);
    }
    if !gc.ratios.is_empty() {
        for &y in &ys {
            let a = match gc.a_check {
                Some(a) => a,
                None => gc_min_temperature(y)?.1,
            };
            let fam = GoodCavityFamily::new(OperatingPoint::new(a, y)?);
            for pt in gc_convergence_check(&fam, &gc.ratios)? {
                table.rows.push(vec![
                    text("convergence"),
                    y.into(),
                    a.into(),
                    pt.kappa_over_nu.into(),
                    pt.kt_full.into(),
                    pt.kt_limit.into(),
                    pt.rel_error.into(),
                ]);
            }
        }
    }
    Ok(table)
}

fn read_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) if p.as_os_str() == "-" => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            RunConfig::from_json(&s)
        }
        Some(p) => {
            let s = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            RunConfig::from_json(&s).with_context(|| format!("in {}", p.display()))
        }
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Executes a parsed command line. Returns `false` when a self-check failed.
pub fn run(cli: &Cli) -> Result<bool> {
    let mut cfg = read_config(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(t) = cfg.threads {
        if t == 0 {
            bail!("--threads must be at least 1");
        }
        // only the first call can size the global pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    let out = cli.out.as_deref();
    match cli.command {
        Command::Steady => emit(&cmd_steady(&cfg)?.to_csv(&cfg, "steady"), out)?,
        Command::Temperature => emit(&cmd_temperature(&cfg)?.to_csv(&cfg, "temperature"), out)?,
        Command::Goodcavity => emit(&cmd_goodcavity(&cfg)?.to_csv(&cfg, "goodcavity"), out)?,
        Command::Trajectory => {
            let res = cmd_trajectory(&cfg)?;
            emit(&res.table.to_csv(&cfg, "trajectory"), out)?;
            let json = serde_json::to_string_pretty(&res.stats)?;
            let stats_path = cfg
                .trajectory
                .stats_out
                .clone()
                .or_else(|| out.map(|p| p.with_extension("stats.json")));
            match stats_path {
                Some(p) => std::fs::write(&p, json + "\n").with_context(|| format!("writing {}", p.display()))?,
                None => eprintln!("{json}"),
            }
            if res.trajectories.iter().any(|t| t.heating_warning) {
                eprintln!("warning: averaged friction heats at these parameters; no equilibrium expected");
            }
        }
        Command::Selftest => {
            let mut ok = true;
            for r in cavlaser_core::selftest::run_all() {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
                ok &= r.passed;
            }
            return Ok(ok);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = RunConfig::from_json(r#"{"params": {"gamma": 1, "nu": 2, "g": 3, "kappa": 1, "delta": 0, "recoil": 0.01}, "bogus": 1}"#)
            .unwrap_err();
        assert!(format!("{err:#}").contains("bogus"));
        assert!(RunConfig::from_json(r#"{"steady": {"xs": []}}"#).is_err());
    }

    #[test]
    fn partial_config_uses_defaults() {
        let cfg = RunConfig::from_json(r#"{"seed": 9, "temperature": {"variable": "g", "values": [1, 2]}}"#).unwrap();
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.params, SystemParams::default());
        assert_eq!(cfg.temperature.values.values(), vec![1.0, 2.0]);
        let back = RunConfig::from_json(&cfg.to_json()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn ranges() {
        let r = Range {
            start: 0.0,
            stop: 1.0,
            points: 5,
        };
        assert_eq!(r.values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert!(Range { points: 0, ..r }.values().is_empty());
    }

    #[test]
    fn cells_round_trip() {
        for v in [0.1, 1.0 / 3.0, 2.955e-17, -4.0e300, 7.0] {
            let s = Cell::Num(v).to_string();
            assert_eq!(s.parse::<f64>().unwrap(), v);
        }
        assert_eq!(Cell::Empty.to_string(), "");
    }

    #[test]
    fn empty_steady_grid_is_an_error() {
        let mut cfg = RunConfig::default();
        cfg.steady.x = Values::List(vec![]);
        assert!(cmd_steady(&cfg).is_err());
    }

    #[test]
    fn steady_table_shape() {
        let mut cfg = RunConfig::default();
        cfg.steady.x = Values::Range(Range {
            start: 0.0,
            stop: 0.25,
            points: 5,
        });
        let t = cmd_steady(&cfg).unwrap();
        assert_eq!(t.rows.len(), 5);
        assert_eq!(t.header.len(), t.rows[0].len());
        // node row: no Lamb photons
        assert_eq!(t.numbers("N_lamb")[4], 0.0);
        assert!(t.numbers("N_lamb")[0] > 2.0);
    }

    #[test]
    fn goodcavity_rows() {
        let mut cfg = RunConfig::default();
        cfg.goodcavity.y = Values::List(vec![2.0]);
        cfg.goodcavity.a = Values::List(vec![1.0]);
        cfg.goodcavity.ratios = vec![];
        let t = cmd_goodcavity(&cfg).unwrap();
        assert_eq!(t.rows[0][4], Cell::Num(0.5));
        assert!(t.numbers("a")[1] < 1.0);
    }
}
