use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bilinear_core::SteeringReport;
use serde_json::Value;
use tempfile::TempDir;

const HEADER: &str = "schema = \"bilinear-lab/v1\"\n";

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    out: PathBuf,
    _dir: Option<TempDir>,
}

impl Run {
    fn json(&self, name: &str) -> Value {
        serde_json::from_str(&fs::read_to_string(self.out.join(name)).unwrap()).unwrap()
    }
}

fn bilinear(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bilinear"))
        .args(args)
        .output()
        .unwrap()
}

fn run_config(dir: &TempDir, command: &str, body: &str, extra: &[&str]) -> Run {
    let config = dir.path().join(format!("{command}.toml"));
    fs::write(&config, format!("{HEADER}{body}")).unwrap();
    let out = dir.path().join(format!("out-{command}"));
    let mut args = vec![
        command,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    let output = bilinear(&args);
    Run {
        code: output.status.code().unwrap(),
        stdout: String::from_utf8(output.stdout).unwrap(),
        stderr: String::from_utf8(output.stderr).unwrap(),
        out,
        _dir: None,
    }
}

fn run(command: &str, body: &str) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let r = run_config(&dir, command, body, &[]);
    Run {
        _dir: Some(dir),
        ..r
    }
}

#[test]
fn check_presets() {
    let r = run("check", "preset = \"eigen-doubling\"\n");
    assert_eq!(r.code, 0, "{}", r.stderr);
    let stdout: Value = serde_json::from_str(&r.stdout).unwrap();
    assert_eq!(stdout["result"]["passed"], true);
    assert_eq!(stdout, r.json("check.json"));

    let r = run("check", "preset = \"sign-flipped\"\n");
    assert_eq!(r.code, 3);
    let report = r.json("check.json");
    assert_eq!(
        report["result"]["sign"]["violations"]
            .as_array()
            .unwrap()
            .len(),
        199
    );

    let r = run("check", "preset = \"example-2d\"\n[problem]\nN = 19\n");
    assert_eq!(r.code, 0, "{}", r.stderr);
}

#[test]
fn config_errors_exit_2() {
    let cases = [
        "preset = \"eigen-doubling\"\ncolour = 1\n",
        "preset = \"eigen-doubling\"\n[problem]\neps = 0.1\n",
        "preset = \"no-such-preset\"\n",
        "[problem]\nd = 1\nN = 9\n",
        "preset = \"eigen-doubling\"\n[problem]\nepsilon = -1.0\n",
        "preset = \"eigen-doubling\"\n[problem]\ny0 = { kind = \"linear-difference\" }\n",
    ];
    for body in cases {
        let r = run("check", body);
        assert_eq!(r.code, 2, "{body}: {}", r.stderr);
        assert!(r.stderr.starts_with("error:"), "{}", r.stderr);
    }
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(
        &config,
        "schema = \"bilinear-lab/v0\"\npreset = \"eigen-doubling\"\n",
    )
    .unwrap();
    let out = bilinear(&["check", "--config", config.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown schema"));
    let out = bilinear(&["check", "--config", "/nonexistent.toml"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn steer_theorem1_report_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let r = run_config(
        &dir,
        "steer",
        "preset = \"eigen-doubling\"\n",
        &["--emit-trajectory"],
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let text = fs::read_to_string(r.out.join("steer.json")).unwrap();
    let envelope: Value = serde_json::from_str(&text).unwrap();
    assert_eq!(envelope["schema"], "bilinear-lab/v1");
    assert_eq!(envelope["config_digest"].as_str().unwrap().len(), 64);
    let report: SteeringReport = serde_json::from_value(envelope["result"].clone()).unwrap();
    assert!(report.succeeded());
    assert!(report.final_error.unwrap() < 0.05);
    assert_eq!(serde_json::to_value(&report).unwrap(), envelope["result"]);

    let csv = fs::read_to_string(r.out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,node_0,"));
    assert!(r.out.join("trajectory.json").exists());
    assert_eq!(
        fs::read_to_string(r.out.join("exponent.csv"))
            .unwrap()
            .lines()
            .count(),
        199
    );
    let control = r.json("trajectory_control.json");
    assert_eq!(
        control["pieces"][0]["field"],
        "trajectory_control_piece0.csv"
    );
}

#[test]
fn identical_configs_give_identical_outputs() {
    let body = "preset = \"semilinear\"\n[problem]\nN = 49\n";
    let a = run("steer", body);
    let b = run("steer", body);
    assert_eq!(a.code, 0);
    let (ja, jb) = (a.json("steer.json"), b.json("steer.json"));
    assert_eq!(ja["config_digest"], jb["config_digest"]);
    assert_eq!(
        fs::read(a.out.join("steer.json")).unwrap(),
        fs::read(b.out.join("steer.json")).unwrap()
    );
    let c = run(
        "steer",
        "preset = \"semilinear\"\n[problem]\nN = 49\nepsilon = 0.04\n",
    );
    assert_ne!(ja["config_digest"], c.json("steer.json")["config_digest"]);
}

#[test]
fn steer_outcome_exit_codes() {
    let r = run("steer", "preset = \"sign-flipped\"\n");
    assert_eq!(r.code, 3);
    assert_eq!(r.json("steer.json")["result"]["outcome"], "inadmissible");

    let r = run(
        "steer",
        "preset = \"eigen-doubling\"\n[problem]\nN = 49\nepsilon = 1e-6\nmin_horizon = 1e-3\n",
    );
    assert_eq!(r.code, 4);
    assert_eq!(r.json("steer.json")["result"]["outcome"], "exhausted-t");
}

#[test]
fn steer_fixed_time() {
    let r = run(
        "steer",
        "preset = \"eigen-hold\"\n[steer]\nmode = \"fixed-time\"\ntime = 0.5\n",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let result = &r.json("steer.json")["result"];
    assert_eq!(result["chosen_time"], 0.5);
    assert!(result["final_error"].as_f64().unwrap() < 0.05);
    assert!(result["fixed_time"]["max_stepwise_gap"].as_f64().unwrap() <= 1e-9);

    let r = run(
        "steer",
        "preset = \"eigen-hold\"\n[problem]\nnonlinearity = { kind = \"affine\", slope = 0.3, offset = 0.1 }\n[steer]\nmode = \"fixed-time\"\ntime = 0.5\n",
    );
    assert_eq!(r.code, 2);
    assert!(r.stderr.contains("contract"), "{}", r.stderr);

    let r = run(
        "steer",
        "preset = \"eigen-hold\"\n[steer]\nmode = \"fixed-time\"\n",
    );
    assert_eq!(r.code, 2);
}

#[test]
fn steer_corollary_with_piecewise_multiplier() {
    let r = run(
        "steer",
        "preset = \"eigen-doubling\"\n[problem]\nepsilon = 0.1\nyd = { kind = \"pointwise-product\", inner = { kind = \"eigenfunction\", k = 1 }, multiplier = { kind = \"piecewise\", split = 0.5, left = 2.0, right = 1.0 } }\n[steer]\nmode = \"corollary1\"\n",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let result = &r.json("steer.json")["result"];
    assert!(result["final_error"].as_f64().unwrap() < 0.1);
    assert!(result["mollifier"]["radius"].as_f64().unwrap() < 0.2);
}

#[test]
fn sweep_writes_table() {
    let r = run(
        "sweep",
        "preset = \"eigen-doubling\"\n[sweep]\ntimes = [0.02, 0.01, 0.005, 0.0025]\nlambdas = [10.0, 100.0]\n",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let csv = fs::read_to_string(r.out.join("convergence.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "T,dt,error,slope_running");
    assert_eq!(lines.len(), 5);
    let result = &r.json("sweep.json")["result"];
    let slope = result["convergence"]["slope"].as_f64().unwrap();
    assert!((slope - 1.0).abs() < 0.1, "{slope}");
    assert_eq!(result["prefilter"]["rows"].as_array().unwrap().len(), 2);

    for bad in ["[0.1, 0.05]", "[0.1, 0.1, 0.05]", "[0.1, 0.05, -0.01]"] {
        let r = run(
            "sweep",
            &format!("preset = \"eigen-doubling\"\n[sweep]\ntimes = {bad}\n"),
        );
        assert_eq!(r.code, 2, "{bad}");
    }
    assert_eq!(run("sweep", "preset = \"eigen-doubling\"\n").code, 2);
}

#[test]
fn sweep_null_control_matches_semigroup_drift() {
    let r = run(
        "sweep",
        "preset = \"null-control\"\n[sweep]\ntimes = [0.1, 0.05, 0.025]\n",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    for row in r.json("sweep.json")["result"]["convergence"]["rows"]
        .as_array()
        .unwrap()
    {
        let t = row["T"].as_f64().unwrap();
        let drift = (1.0 - (-PI * PI * t).exp()) / 2f64.sqrt();
        assert!((row["error"].as_f64().unwrap() - drift).abs() < 1e-3 * drift);
    }
}

#[test]
fn bernstein_without_reaction_has_no_gap() {
    let r = run(
        "bernstein",
        "preset = \"eigen-doubling\"\n[problem]\nN = 49\n[bernstein]\ntime = 0.05\ndegree = 30\n",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let result = &r.json("bernstein.json")["result"];
    assert_eq!(result["forcing_gap"], 0.0);
    assert_eq!(result["trajectory_gap"], 0.0);
    assert_eq!(result["degree"], 30);
    assert_eq!(
        run(
            "bernstein",
            "preset = \"eigen-doubling\"\n[bernstein]\ntime = 0.0\n"
        )
        .code,
        2
    );
}

#[test]
fn mollify_step_function() {
    let r = run(
        "mollify",
        "preset = \"eigen-doubling\"\n[mollify]\nfield = { kind = \"step\", lower = 0.0, upper = 0.5 }\nradius = 0.1\n",
    );
    assert_eq!(r.code, 0, "{}", r.stderr);
    let result = &r.json("mollify.json")["result"];
    assert_eq!(result["within_bounds"], true);
    assert!(result["min"].as_f64().unwrap() >= 0.1);
    let values: Vec<f64> = fs::read_to_string(r.out.join("mollified.csv"))
        .unwrap()
        .lines()
        .map(|l| l.parse().unwrap())
        .collect();
    assert_eq!(values.len(), 199);
    assert!(values.iter().all(|&v| v > 0.0));

    let r = run(
        "mollify",
        "preset = \"sign-flipped\"\n[mollify]\nradius = 0.1\n",
    );
    assert_eq!(r.code, 2);
    assert_eq!(
        run(
            "mollify",
            "preset = \"eigen-doubling\"\n[mollify]\nradius = 0.0\n"
        )
        .code,
        2
    );
}

#[test]
fn hold_eigenfunction_target() {
    let r = run("hold", "preset = \"eigen-hold\"\n[hold]\ntime = 0.5\n");
    assert_eq!(r.code, 0, "{}", r.stderr);
    let result = &r.json("hold.json")["result"];
    assert!(result["max_relative_drift"].as_f64().unwrap() < 1e-3);
    assert_eq!(result["outcome"], "success");

    let r = run(
        "hold",
        "preset = \"eigen-hold\"\n[problem]\nyd = { kind = \"step\", lower = 0.0, upper = 0.5 }\n",
    );
    assert_eq!(r.code, 3);
    assert_eq!(r.json("hold.json")["result"]["outcome"], "hold-violation");
}

#[test]
fn csv_state_and_digest() {
    let dir = tempfile::tempdir().unwrap();
    let values: String = (1..=9)
        .map(|i| format!("{}\n", (PI * i as f64 / 10.0).sin()))
        .collect();
    fs::write(dir.path().join("y0.csv"), &values).unwrap();
    let body = "[problem]\nd = 1\nN = 9\ny0 = { kind = \"csv-file\", path = \"y0.csv\" }\nyd = { kind = \"scaled\", factor = 2.0, inner = { kind = \"csv-file\", path = \"y0.csv\" } }\nnonlinearity = { kind = \"zero\" }\nepsilon = 0.05\n";
    let a = run_config(&dir, "check", body, &["--quiet"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert!(a.stdout.is_empty());
    let digest = a.json("check.json")["config_digest"].clone();
    fs::write(dir.path().join("y0.csv"), values.replace("\n", "0\n")).unwrap();
    let b = run_config(&dir, "check", body, &["--quiet"]);
    assert_ne!(digest, b.json("check.json")["config_digest"]);
}

#[test]
fn shipped_configs_pass_check() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&configs).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let out = tempfile::tempdir().unwrap();
            let o = bilinear(&[
                "check",
                "--config",
                path.to_str().unwrap(),
                "--out",
                out.path().to_str().unwrap(),
                "--quiet",
            ]);
            // the smoothed hold exists precisely for targets whose zero set differs from y0's
            let expected = if path.ends_with("smoothed_hold.toml") {
                3
            } else {
                0
            };
            assert_eq!(
                o.status.code(),
                Some(expected),
                "{}: {}",
                path.display(),
                String::from_utf8_lossy(&o.stderr)
            );
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
