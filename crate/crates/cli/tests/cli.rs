use std::path::Path;
use std::process::{Command, Output};

use cavlaser_cli::{cmd_goodcavity, cmd_steady, cmd_temperature, cmd_trajectory, Cell, RunConfig, Values};
use cavlaser_core::moments::peak_photon_number;
use cavlaser_core::SystemParams;

fn cavlaser(args: &[&str], config: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_cavlaser"));
    cmd.args(args);
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.output().unwrap()
}

fn config(json: &str) -> RunConfig {
    RunConfig::from_json(json).unwrap()
}

#[test]
fn lamb_photon_number_vanishes_near_nodes() {
    let cfg = config(
        r#"{"params": {"gamma": 10, "nu": 20, "g": 100, "kappa": 1, "delta": 200, "recoil": 0.01},
            "steady": {"x": {"start": 0, "stop": 0.5, "points": 101}}}"#,
    );
    let t = cmd_steady(&cfg).unwrap();
    let n = t.numbers("N_lamb");
    // node at x = λ/4 sits in a sub-threshold band
    assert_eq!(n[50], 0.0);
    assert_eq!(n[48], 0.0);
    assert!(n[0] > 2.9 && n[100] > 2.9);
    // lasing only where the coupling clears threshold
    let g = t.numbers("G");
    for (gi, ni) in g.iter().zip(&n) {
        assert!(*ni == 0.0 || gi.abs() > 10.0);
    }
}

#[test]
fn force_columns_are_odd_in_detuning() {
    let cfg = config(
        r#"{"params": {"gamma": 20, "nu": 25, "g": 20, "kappa": 1, "delta": 0, "recoil": 0.01},
            "steady": {"x": [0.125, 0.3], "delta": {"start": -100, "stop": 100, "points": 9}}}"#,
    );
    let t = cmd_steady(&cfg).unwrap();
    assert_eq!(t.rows.len(), 18);
    for col in ["F", "F_lamb"] {
        let f = t.numbers(col);
        // rows are grouped by Δ, two positions each
        for k in 0..9 {
            for j in 0..2 {
                assert_eq!(f[2 * k + j], -f[2 * (8 - k) + j], "{col}");
            }
        }
    }
}

#[test]
fn pump_solver_hits_target_photon_number() {
    let cfg = config(
        r#"{"params": {"gamma": 10, "nu": 20, "g": 50, "kappa": 1, "delta": 0, "recoil": 0.01},
            "temperature": {"variable": "delta", "values": [50, 100, 200, 400], "target_photons": 2}}"#,
    );
    let t = cmd_temperature(&cfg).unwrap();
    for (row, (nu, d)) in t.numbers("nu").into_iter().zip(t.numbers("delta")).enumerate() {
        let p = SystemParams::new(10.0, nu, 50.0, d);
        assert!((peak_photon_number(&p).unwrap() - 2.0).abs() < 1e-8, "row {row}");
        assert!((t.numbers("N_max")[row] - 2.0).abs() < 1e-8);
    }
    assert!(t.numbers("kT_hbar_gamma").iter().any(|&k| k < 1.0));
}

#[test]
fn heating_rows_are_flagged() {
    let cfg = config(
        r#"{"params": {"gamma": 10, "nu": 5, "g": 50, "kappa": 1, "delta": 100, "recoil": 0.01},
            "temperature": {"variable": "g", "values": [30, 50]}}"#,
    );
    let t = cmd_temperature(&cfg).unwrap();
    let status = t.column("status").unwrap();
    for row in &t.rows {
        assert_eq!(row[status], Cell::Text("heating".into()));
        assert!(matches!(row[t.column("beta_avg").unwrap()], Cell::Num(b) if b > 0.0));
        assert_eq!(row[t.column("kT_hbar_kappa").unwrap()], Cell::Empty);
    }
}

#[test]
fn temperature_falls_with_coupling() {
    let cfg = config(
        r#"{"params": {"gamma": 5, "nu": 40, "g": 50, "kappa": 1, "delta": 250, "recoil": 0.01},
            "temperature": {"variable": "g", "values": {"start": 15, "stop": 36, "points": 8}}}"#,
    );
    // unit-gain coupling is 37.5 here
    let kt = cmd_temperature(&cfg).unwrap().numbers("kT_hbar_kappa");
    assert!(kt.windows(2).all(|w| w[1] < w[0]), "{kt:?}");
}

#[test]
fn goodcavity_table() {
    let mut cfg = RunConfig::default();
    cfg.goodcavity.y = Values::List(vec![0.5, 1.0, 2.0, 8.0]);
    cfg.goodcavity.a = Values::List(vec![1.0]);
    cfg.goodcavity.ratios = vec![1e-2, 1e-3];
    let t = cmd_goodcavity(&cfg).unwrap();
    let kind = t.column("kind").unwrap();
    let of = |k: &'static str| t.rows.iter().filter(move |r| r[kind] == Cell::Text(k.into()));
    let curve: Vec<_> = of("curve").collect();
    assert_eq!(curve[2][4], Cell::Num(0.5));
    let mins: Vec<_> = of("minimum").collect();
    assert_eq!(mins.len(), 4);
    assert!(matches!(mins[1][4], Cell::Num(t) if (t - (3f64.sqrt() - 1.0)).abs() < 1e-15));
    for r in &mins {
        assert!(matches!(r[2], Cell::Num(a) if a < 1.0));
    }
    assert_eq!(of("convergence").count(), 8);
}

#[test]
fn single_stochastic_trajectory_statistics() {
    let cfg = config(
        r#"{"params": {"gamma": 10, "nu": 23.662, "g": 50, "kappa": 1, "delta": 800, "recoil": 0.01},
            "seed": 3,
            "trajectory": {"mode": "adiabatic-stochastic", "dt": 0.05, "t_end": 100, "record_every": 10}}"#,
    );
    let out = cmd_trajectory(&cfg).unwrap();
    assert_eq!(out.stats.n_traj, 1);
    assert_eq!(out.table.rows.len(), 201);
    assert_eq!(out.table.rows[0][5], Cell::Empty);
}

#[test]
fn binary_writes_csv_and_stats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"params": {"gamma": 10, "nu": 20, "g": 100, "kappa": 1, "delta": 200, "recoil": 0.01},
            "trajectory": {"dt": 5e-4, "t_end": 2, "record_every": 100}}"#,
    )
    .unwrap();
    let csv = dir.path().join("traj.csv");
    let out = cavlaser(&["trajectory", "--out", csv.to_str().unwrap(), "--seed", "5"], Some(&cfg));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    let meta = lines.next().unwrap();
    assert!(meta.starts_with("# cavlaser ") && meta.contains(r#""seed":5"#));
    assert_eq!(lines.next().unwrap(), "traj,t,x_over_lambda,p,N,z");
    assert_eq!(lines.count(), 41);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("traj.stats.json")).unwrap()).unwrap();
    assert_eq!(stats["n_traj"], 1);
    // the recorded configuration reproduces the run
    let json = meta.split_once("config=").unwrap().1;
    let again = dir.path().join("again.json");
    std::fs::write(&again, json).unwrap();
    let csv2 = dir.path().join("traj2.csv");
    let out = cavlaser(&["trajectory", "--out", csv2.to_str().unwrap()], Some(&again));
    assert!(out.status.success());
    assert_eq!(std::fs::read(&csv).unwrap(), std::fs::read(&csv2).unwrap());
}

#[test]
fn unstable_step_reports_suggestion() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"params": {"gamma": 10, "nu": 20, "g": 100, "kappa": 1, "delta": 200, "recoil": 0.01}, "trajectory": {"dt": 0.01}}"#).unwrap();
    let out = cavlaser(&["trajectory"], Some(&cfg));
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("use dt <="), "{err}");
}

#[test]
fn errors_give_nonzero_exit() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, "{\n  \"steady\": {\"x\": []}\n}").unwrap();
    let out = cavlaser(&["steady"], Some(&cfg));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    std::fs::write(&cfg, "{\n  \"steady\": {\"points\": 3}\n}").unwrap();
    let out = cavlaser(&["steady"], Some(&cfg));
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("points") && err.contains("line 2"), "{err}");

    std::fs::write(&cfg, r#"{"params": {"gamma": -1, "nu": 1, "g": 1, "kappa": 1, "delta": 0, "recoil": 0.01}}"#).unwrap();
    assert!(!cavlaser(&["steady"], Some(&cfg)).status.success());

    assert!(!cavlaser(&["nonsense"], None).status.success());
    assert!(!cavlaser(&["steady", "--threads", "0"], None).status.success());
}

#[test]
fn selftest_passes() {
    let out = cavlaser(&["selftest"], None);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 8);
    assert!(text.lines().all(|l| l.starts_with("PASS")));
}
