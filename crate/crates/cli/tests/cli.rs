use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn jetlag(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jetlag"))
        .args(args)
        .env_remove("JETLAG_THREADS")
        .output()
        .expect("binary runs")
}

fn run(cmd: &str, name: &str, extra: &[&str]) -> Output {
    let path = fixture(name);
    let mut args = vec![cmd, "--config", path.to_str().unwrap()];
    args.extend_from_slice(extra);
    jetlag(&args)
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn numbers(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

fn csv_rows(text: &str) -> Vec<Vec<f64>> {
    text.lines().skip(1).map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect()
}

#[test]
fn exit_code_contract() {
    let table = [
        ("analyze", "harmonic_flat.json", 0),
        ("analyze", "autonomous_electrodynamics.json", 0),
        ("analyze", "nonautonomous_p2.json", 0),
        ("analyze", "finsler_p1.json", 0),
        ("analyze", "quartic_p2.json", 2),
        ("analyze", "malformed.json", 64),
        ("analyze", "unknown_field.json", 64),
        ("analyze", "missing.json", 64),
        ("connection", "quartic_p2.json", 2),
        ("torsion", "quartic_p2.json", 2),
        ("curvature", "quartic_p2.json", 2),
        ("extremal", "harmonic_flat.json", 64),
        ("extremal", "asymmetric_g.json", 64),
        ("residual", "sphere_p1.json", 64),
        ("residual", "autonomous_electrodynamics.json", 64),
        ("verify", "harmonic_flat.json", 0),
        ("verify", "sphere_p1.json", 0),
        ("verify", "straight_line.json", 0),
        ("verify", "autonomous_electrodynamics.json", 0),
        ("verify", "nonautonomous_p2.json", 0),
        ("verify", "finsler_p1.json", 0),
        ("verify", "asymmetric_g.json", 0),
        ("verify", "quartic_p2.json", 1),
        ("verify", "fault_mis_signed_u.json", 1),
        ("verify", "malformed.json", 64),
    ];
    for (cmd, name, want) in table {
        let out = run(cmd, name, &[]);
        assert_eq!(out.status.code(), Some(want), "{cmd} {name}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(jetlag(&["bogus", "--config", "x.json"]).status.code(), Some(64));
    assert_eq!(jetlag(&["analyze"]).status.code(), Some(64));
    let cfg = fixture("sphere_p1.json");
    let cfg = cfg.to_str().unwrap();
    assert_eq!(jetlag(&["connection", "--config", cfg, "--point", "x=1"]).status.code(), Some(64));
    assert_eq!(jetlag(&["connection", "--config", cfg, "--point", "w=1"]).status.code(), Some(64));
    let out = Command::new(env!("CARGO_BIN_EXE_jetlag"))
        .args(["analyze", "--config", cfg])
        .env("JETLAG_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(64));
}

#[test]
fn analyze_reports_verdict_and_decomposition() {
    let out = run("analyze", "harmonic_flat.json", &[]);
    let r = json(&out);
    assert_eq!(r["command"], "analyze");
    assert_eq!(r["result"]["regularity"]["is_kronecker"], true);
    assert_eq!(r["config_hash"].as_str().unwrap().len(), 64);
    assert!(r["result"]["decomposition"]["reassembly_residual"].as_f64().unwrap() <= 1e-8);

    let r = json(&run("analyze", "quartic_p2.json", &[]));
    assert_eq!(r["result"]["regularity"]["is_kronecker"], false);
}

#[test]
fn reports_are_byte_identical() {
    for (cmd, name) in [("analyze", "nonautonomous_p2.json"), ("curvature", "autonomous_electrodynamics.json"), ("verify", "finsler_p1.json")] {
        let a = run(cmd, name, &["--json"]);
        let b = run(cmd, name, &["--json"]);
        assert_eq!(a.stdout, b.stdout, "{cmd} {name}");
    }
    let a = run("analyze", "nonautonomous_p2.json", &["--seed", "99"]);
    let b = run("analyze", "nonautonomous_p2.json", &[]);
    assert_ne!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 99);
    assert_eq!(json(&a)["config_hash"], json(&b)["config_hash"]);
}

#[test]
fn floats_have_17_significant_digits() {
    let out = run("analyze", "harmonic_flat.json", &[]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"tolerance\": 9.9999999999999995e-7"), "tolerance not printed in full");
}

#[test]
fn flat_connection_tables_vanish() {
    let r = json(&run("connection", "harmonic_flat.json", &["--point", "t=0.3,0.1;x=1,2;v=0.5,-0.2,0.7,0.4"]));
    let res = &r["result"];
    for key in ["M", "N"] {
        assert!(numbers(&res[key]).iter().all(|x| *x == 0.0), "{key}");
    }
    for pk in ["cartan", "berwald"] {
        for block in ["hbar", "gk", "lk", "ck"] {
            assert!(numbers(&res[pk][block]["data"]).iter().all(|x| *x == 0.0), "{pk} {block}");
        }
    }
}

#[test]
fn autonomous_cartan_has_no_g_or_c_block() {
    let r = json(&run("connection", "autonomous_electrodynamics.json", &["--point", "t=0.1,0.2;x=0.3,-0.2;v=0.1,0.2,0.3,0.4"]));
    let cartan = &r["result"]["cartan"];
    assert!(numbers(&cartan["gk"]["data"]).iter().all(|x| x.abs() <= 1e-12));
    assert!(numbers(&cartan["ck"]["data"]).iter().all(|x| x.abs() <= 1e-12));
    assert!(numbers(&cartan["lk"]["data"]).iter().any(|x| x.abs() > 1e-3));
}

#[test]
fn sphere_nonlinear_connection_is_gamma_y() {
    let (th, y): (f64, [f64; 2]) = (1.1, [0.3, -0.8]);
    let point = format!("t=0;x={th},0.4;v={},{}", y[0], y[1]);
    let r = json(&run("connection", "sphere_p1.json", &["--point", &point]));
    let nn = numbers(&r["result"]["N"]);
    // N^i_j = γ^i_{jk} y^k for the round sphere
    let want = [0.0, -th.sin() * th.cos() * y[1], th.cos() / th.sin() * y[1], th.cos() / th.sin() * y[0]];
    for (a, b) in nn.iter().zip(want) {
        assert!((a - b).abs() <= 1e-8, "{nn:?} vs {want:?}");
    }
}

#[test]
fn torsion_and_curvature_list_zero_families() {
    let r = json(&run("torsion", "autonomous_electrodynamics.json", &[]));
    let zeros: Vec<&str> = r["result"]["cartan"]["zero_families"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert_eq!(zeros, ["T_tx", "T_xx", "P_tv", "P_xv", "P_vxv", "S_vv"]);
    for fam in zeros {
        let table = &r["result"]["cartan"]["table"][fam.to_lowercase()];
        assert!(numbers(&table["data"]).iter().all(|x| x.abs() <= 1e-9), "{fam}");
    }
    let r = json(&run("curvature", "finsler_p1.json", &[]));
    assert_eq!(r["result"]["berwald"], Value::Null);
    assert!(r["result"]["cartan"]["table"]["r_xx"].is_object());
}

fn sphere_oracle(x0: [f64; 2], y0: [f64; 2], dt: f64, steps: usize) -> Vec<[f64; 2]> {
    let f = |s: [f64; 4]| [s[2], s[3], s[0].sin() * s[0].cos() * s[3] * s[3], -2.0 * s[0].cos() / s[0].sin() * s[2] * s[3]];
    let mut s = [x0[0], x0[1], y0[0], y0[1]];
    let mut out = vec![[s[0], s[1]]];
    for _ in 0..steps {
        let shift = |k: [f64; 4], c: f64| std::array::from_fn::<f64, 4, _>(|i| s[i] + c * k[i]);
        let k1 = f(s);
        let k2 = f(shift(k1, dt / 2.0));
        let k3 = f(shift(k2, dt / 2.0));
        let k4 = f(shift(k3, dt));
        for i in 0..4 {
            s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        out.push([s[0], s[1]]);
    }
    out
}

#[test]
fn sphere_extremal_matches_geodesic_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sphere.csv");
    let out = run("extremal", "sphere_p1.json", &["--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("el_residual_max="));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t1,x1,x2,y1,y2,residual\n"));
    let rows = csv_rows(&text);
    let oracle = sphere_oracle([1.3, 0.2], [0.4, -0.7], 1e-3, 1000);
    assert_eq!(rows.len(), oracle.len());
    let worst = rows.iter().zip(&oracle).map(|(r, o)| (r[1] - o[0]).abs().max((r[2] - o[1]).abs())).fold(0.0, f64::max);
    assert!(worst <= 1e-6, "{worst}");
    assert!(rows.iter().all(|r| r[5] <= 1e-6));
}

#[test]
fn straight_line_is_linear() {
    let out = run("extremal", "straight_line.json", &[]);
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 9);
    for r in rows {
        assert!((r[1] - r[0]).abs() <= 1e-14 && (r[2] - (1.0 - 2.0 * r[0])).abs() <= 1e-14, "{r:?}");
    }
}

#[test]
fn affine_grid_residual_vanishes() {
    let out = run("residual", "harmonic_flat.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    assert_eq!(rows.len(), 49);
    assert!(rows.iter().all(|r| r[4].abs() <= 1e-9 && r[5].abs() <= 1e-9));
    let r = json(&run("residual", "harmonic_flat.json", &["--json"]));
    assert!(r["result"]["residual"]["max"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn verify_names_failing_invariants() {
    let out = run("verify", "fault_mis_signed_u.json", &["--json"]);
    let r = json(&out);
    let failing: Vec<&str> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["passed"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failing, ["decomposition.declared"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("failing: decomposition.declared"));
}

#[test]
fn asymmetric_text_warns_and_passes() {
    let out = run("verify", "asymmetric_g.json", &[]);
    assert_eq!(out.status.code(), Some(0));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("warning: lagrangian.g_entries[0][1]"), "{err}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().filter(|l| l.starts_with("PASS")).count() >= 5);
    assert!(!text.contains("FAIL"));
}

#[test]
fn thread_cap_does_not_change_reports() {
    let cfg = fixture("autonomous_electrodynamics.json");
    let go = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_jetlag"))
            .args(["verify", "--json", "--config", cfg.to_str().unwrap()])
            .env("JETLAG_THREADS", threads)
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(go("1"), go("4"));
}
