use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = "grid.nx = 16\ngrid.ny = 16\ngrid.lx = 8\ngrid.ly = 8\ntime.T = 0.02\ntime.dt = 2e-3\n";

fn nsch(dir: &Path, cfg: &str, args: &[&str]) -> Output {
    let path = dir.join("run.cfg");
    std::fs::write(&path, cfg).unwrap();
    Command::new(env!("CARGO_BIN_EXE_nsch"))
        .args(args)
        .args(["--config", path.to_str().unwrap()])
        .env_remove("NSCH_THREADS")
        .output()
        .unwrap()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn verify_mass_on_default_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = nsch(dir.path(), "", &["verify", "mass", "--out", out.to_str().unwrap(), "--seed", "5"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("mass PASS"));
    let (h, rows) = read_csv(&out.join("verify.csv"));
    assert_eq!(h, ["check", "seed", "passed", "metric", "value"]);
    assert!(rows.iter().all(|r| r[0] == "mass" && r[1] == "5" && r[2] == "1"));
}

#[test]
fn equilibrium_diagnostics_are_constant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = format!("{SMALL}initial.phase = equilibrium\n");
    let o = nsch(dir.path(), &cfg, &["simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let (h, rows) = read_csv(&out.join("diagnostics.csv"));
    assert_eq!(
        h,
        ["step", "time", "mass", "energy", "willmore", "gl", "kinetic", "dissipation_v", "dissipation_mu", "divergence_max"]
    );
    assert_eq!(rows.len(), 11);
    for r in &rows {
        assert_eq!(r[2..], rows[0][2..]);
    }
}

#[test]
fn optimize_writes_monotone_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = format!("{SMALL}cost.alpha3 = 1e-3\ncost.target_amplitude = 3\noptimizer.max_iter = 10\noutput.snapshot_stride = 5\n");
    let o = nsch(dir.path(), &cfg, &["optimize", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (h, rows) = read_csv(&out.join("optimization.csv"));
    assert_eq!(h, ["iter", "J", "J_track", "J_terminal", "J_control", "grad_norm", "stationarity", "step", "accepted"]);
    let j: Vec<f64> = rows.iter().filter(|r| r[8] == "1").map(|r| r[1].parse().unwrap()).collect();
    assert!(j.len() > 1);
    assert!(j.windows(2).all(|w| w[1] <= w[0]), "{j:?}");
    let (hd, u) = nsch_core::io::load_faces(&out.join("u_000005.nschv")).unwrap();
    assert_eq!(hd.grid, *u.grid());
    assert!(out.join("u_000000.nschv").is_file());
}

#[test]
fn identical_runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = format!("{SMALL}control.preset = cellular\n");
    let mut csvs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = nsch(dir.path(), &cfg, &["verify", "gradient", "--seed", "11", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let o = nsch(dir.path(), &cfg, &["simulate", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
        csvs.push((
            std::fs::read(out.join("verify.csv")).unwrap(),
            std::fs::read(out.join("diagnostics.csv")).unwrap(),
        ));
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn snapshots_feed_back_as_initial_data() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("first");
    let cfg = format!("{SMALL}output.snapshot_stride = 10\ncontrol.preset = cellular\n");
    assert_eq!(nsch(dir.path(), &cfg, &["simulate", "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let (_, first) = read_csv(&out.join("diagnostics.csv"));

    let cfg = format!("{SMALL}initial.phase_file = first/phi_000010.nschf\ninitial.velocity_file = first/v_000010.nschv\n");
    let out2 = dir.path().join("second");
    let o = nsch(dir.path(), &cfg, &["simulate", "--out", out2.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, second) = read_csv(&out2.join("diagnostics.csv"));
    // The restart begins where the first run ended.
    assert_eq!(second[0][2..5], first[10][2..5]);

    let cfg = "grid.nx = 8\ngrid.ny = 8\ninitial.phase_file = first/phi_000010.nschf\n";
    let o = nsch(dir.path(), cfg, &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not match"));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = nsch(dir.path(), "grid.nx = 16\ngrid.nq = 3\n", &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let o = nsch(dir.path(), "physics.nu_bar = 0.01\nphysics.nu_amp = 0.05\n", &["simulate"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("A1 positivity violated"));
    let o = nsch(dir.path(), "", &["verify", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn failed_verification_exits_1() {
    // At this coarse resolution the energy residual ratio falls outside its band.
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = nsch(dir.path(), SMALL, &["verify", "energy", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("energy FAIL"));
    assert!(out.join("verify.csv").is_file());
}

#[test]
fn thread_override_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.cfg");
    std::fs::write(&path, SMALL).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nsch"))
        .args(["simulate", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("NSCH_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = Command::new(env!("CARGO_BIN_EXE_nsch"))
        .args(["simulate", "--config", path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()])
        .env("NSCH_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
}
