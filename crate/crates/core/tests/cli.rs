use std::path::Path;
use std::process::{Command, Output};

fn gravecho(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gravecho"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn names(list: &Output) -> Vec<String> {
    String::from_utf8_lossy(&list.stdout)
        .lines()
        .filter_map(|l| l.split_whitespace().next().map(str::to_string))
        .collect()
}

#[test]
fn every_listed_scenario_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let list = gravecho(&["list"], tmp.path());
    assert_eq!(code(&list), 0);
    let scenarios = names(&list);
    assert!(scenarios.len() >= 10, "{scenarios:?}");
    for name in &scenarios {
        let out = tmp.path().join(name);
        let o = gravecho(
            &["run", "--scenario", name, "--out", out.to_str().unwrap()],
            tmp.path(),
        );
        assert_eq!(
            code(&o),
            0,
            "{name}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
        let m = manifest(&out);
        assert_eq!(m["scenario"], name.as_str());
        assert!(out.join("records/input.csv").exists());
    }
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for d in ["a", "b"] {
        let o = gravecho(
            &[
                "run",
                "--scenario",
                "pair-invert",
                "--out",
                d,
                "--format",
                "csv",
                "--format",
                "json",
            ],
            tmp.path(),
        );
        assert_eq!(code(&o), 0);
    }
    let (a, b) = (
        manifest(&tmp.path().join("a")),
        manifest(&tmp.path().join("b")),
    );
    assert_eq!(a["outputs"], b["outputs"]);
    for f in a["outputs"].as_array().unwrap() {
        let file = f["file"].as_str().unwrap();
        assert_eq!(
            std::fs::read(tmp.path().join("a").join(file)).unwrap(),
            std::fs::read(tmp.path().join("b").join(file)).unwrap(),
            "{file}"
        );
    }
    assert!(tmp.path().join("a/spectrum.json").exists());
}

#[test]
fn resolved_config_reproduces_run() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("run.toml"),
        "scenario = \"comb-invert\"\n[overrides]\nswitch_times = [72.0]\nramp = 1.0\n",
    )
    .unwrap();
    let o = gravecho(
        &["run", "--config", "run.toml", "--out", "first"],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = gravecho(
        &[
            "run",
            "--config",
            "first/config.resolved.toml",
            "--out",
            "second",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let (a, b) = (
        manifest(&tmp.path().join("first")),
        manifest(&tmp.path().join("second")),
    );
    assert_eq!(a["outputs"], b["outputs"]);
    assert_eq!(a["config"], b["config"]);
}

#[test]
fn silent_input_exits_with_no_echo() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("zero.toml"),
        "scenario = \"comb-none\"\n[overrides]\namplitude = 0.0\n",
    )
    .unwrap();
    let o = gravecho(&["run", "--config", "zero.toml", "--out", "z"], tmp.path());
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(tmp.path().join("z/records/input.csv").exists());
}

#[test]
fn bad_configs_exit_before_compute() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        (
            "unknown.toml",
            "scenario = \"comb-none\"\n[overrides]\nd_t = 0.1\n",
            "overrides",
        ),
        (
            "type.toml",
            "scenario = \"comb-none\"\n[overrides]\ndt = \"fast\"\n",
            "overrides.dt",
        ),
        (
            "neg.toml",
            "scenario = \"comb-none\"\n[overrides]\ndt = -0.1\n",
            "overrides.dt",
        ),
        (
            "coarse.toml",
            "scenario = \"comb-none\"\n[overrides]\ndt = 0.5\n",
            "rad",
        ),
    ];
    for (file, text, needle) in cases {
        std::fs::write(tmp.path().join(file), text).unwrap();
        let o = gravecho(&["run", "--config", file, "--out", "never"], tmp.path());
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(code(&o), 2, "{file}: {err}");
        assert!(err.contains(needle), "{file}: {err}");
        assert!(!tmp.path().join("never").exists());
    }
    let o = gravecho(&["run", "--scenario", "nope"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn sweep_isolates_failing_points() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(
        tmp.path().join("sweep.toml"),
        "[template]\nscenario = \"comb-none\"\n\n[grid]\ndt = [0.02, 0.5]\nconvention = [\"paper-numbers\", \"ln2-literal\"]\n",
    )
    .unwrap();
    let o = gravecho(
        &[
            "sweep",
            "--config",
            "sweep.toml",
            "--out",
            "grid",
            "--workers",
            "4",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(tmp.path().join("grid/summary.csv")).unwrap();
    let rows: Vec<Vec<&str>> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    assert!(summary.starts_with("point,convention,dt,exit_code,tau1,r1,f1,status"));
    for r in &rows {
        let expect_ok = r[2] == "0.02";
        assert_eq!(r[3] == "0", expect_ok, "{r:?}");
        if expect_ok {
            let r1: f64 = r[5].parse().unwrap();
            assert!(r1 > 0.3 && r1 < 0.6);
            assert!(tmp
                .path()
                .join("grid")
                .join(format!("point_{:03}", r[0].parse::<usize>().unwrap()))
                .join("manifest.json")
                .exists());
        }
    }
}
