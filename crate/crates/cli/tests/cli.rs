#![allow(clippy::approx_constant)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn tlsbath(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tlsbath")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Every file in `dir` by name.
fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

const MINIMAL: &str = r#"
seed = 3
[qubit]
frequency = "6.28 GHz"
gamma_q = "20 us"
thermal_population = 0.03
[simulate]
delays = { start = "0 s", stop = "100 us", points = 21, spacing = "linear" }
"#;

#[test]
fn empty_bath_gives_a_single_exponential() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", MINIMAL);
    let out = tmp.path().join("out");
    let o = tlsbath(&["simulate", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("trace_000.csv"));
    assert_eq!(header, ["time_s", "population"]);
    assert_eq!(rows.len(), 21);
    for r in rows {
        let t: f64 = r[0].parse().unwrap();
        let p: f64 = r[1].parse().unwrap();
        let expect = 0.03 + 0.97 * (-t / 20e-6).exp();
        assert!((p - expect).abs() < 1e-12, "t = {t}: {p} vs {expect}");
    }
    let manifest: Value = serde_json::from_slice(&fs::read(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 3);
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(manifest["files"][0]["path"], "trace_000.csv");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "run.toml", &MINIMAL.replace("[simulate]", "[simulate]\nnoise = 0.01"));
    let run = |name: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let mut args = vec!["simulate", "--config", s(&cfg), "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = tlsbath(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        snapshot(&out)
    };
    let a = run("a", &[]);
    assert_eq!(a, run("b", &["--threads", "3"]));
    // The seed changes the noise and the manifest.
    let c = run("c", &["--seed", "4"]);
    assert_ne!(a, c);
    assert!(String::from_utf8_lossy(&c[1].1).contains("population_std"));
}

#[test]
fn json_config_is_the_same_run() {
    let tmp = tempfile::tempdir().unwrap();
    let toml_cfg = write(tmp.path(), "run.toml", MINIMAL);
    let o = tlsbath(&["validate-config", "--config", s(&toml_cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let normalized = String::from_utf8(o.stdout).unwrap();
    // Normalizing twice changes nothing.
    let again = write(tmp.path(), "again.toml", &normalized);
    let o = tlsbath(&["validate-config", "--config", s(&again)]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), normalized);

    let json = r#"{"seed": 3,
        "qubit": {"frequency": "6.28 GHz", "gamma_q": "20 us", "thermal_population": 0.03},
        "simulate": {"delays": {"start": "0 s", "stop": "100 us", "points": 21, "spacing": "linear"}}}"#;
    let json_cfg = write(tmp.path(), "run.json", json);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(tlsbath(&["simulate", "--config", s(&toml_cfg), "--out", s(&a)]).status.success());
    assert!(tlsbath(&["simulate", "--config", s(&json_cfg), "--out", s(&b)]).status.success());
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn missing_unit_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", &MINIMAL.replace(r#""6.28 GHz""#, "6.28e9"));
    let o = tlsbath(&["simulate", "--config", s(&cfg), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("qubit.frequency") && err.contains("missing unit"), "{err}");
    assert!(!tmp.path().join("o").exists());

    let cfg = write(tmp.path(), "bad2.toml", &MINIMAL.replace(r#""20 us""#, r#""20 /MHz""#));
    let o = tlsbath(&["validate-config", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qubit.gamma_q"), "{}", stderr(&o));
}

#[test]
fn missing_config_and_empty_input_are_usage_errors() {
    assert_eq!(tlsbath(&["map"]).status.code(), Some(2));
    let o = tlsbath(&["fit"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("Usage"), "{}", stderr(&o));
    let tmp = tempfile::tempdir().unwrap();
    let o = tlsbath(&["fit", s(tmp.path()), "--out", s(&tmp.path().join("o"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no .csv traces"));
}

fn tri_trace(path: &Path) {
    let mut text = String::from("time_s,population\n");
    for i in 0..300 {
        let t = 1e-8 * (2e-2f64 / 1e-8).powf(i as f64 / 299.0);
        let p = 0.6 * (-t / 0.58e-6).exp()
            + 0.2 * (-t / 44.6e-6).exp()
            + 0.1 * (-t / 1.1e-3).exp()
            + 0.03;
        text.push_str(&format!("{t:e},{p:e}\n"));
    }
    fs::write(path, text).unwrap();
}

#[test]
fn biexponential_on_triexponential_data_is_flagged() {
    let tmp = tempfile::tempdir().unwrap();
    let trace = tmp.path().join("tri.csv");
    tri_trace(&trace);
    let out = tmp.path().join("bi");
    let o = tlsbath(&["fit", s(&trace), "--model", "bi", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let res: Value = serde_json::from_slice(&fs::read(out.join("results.json")).unwrap()).unwrap();
    let flags = res[0]["flags"].as_array().unwrap();
    assert!(flags.iter().any(|f| f == "high-residual"), "{flags:?}");

    let out = tmp.path().join("tri");
    let o = tlsbath(&["fit", s(&trace), "--model", "tri", "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let res: Value = serde_json::from_slice(&fs::read(out.join("results.json")).unwrap()).unwrap();
    let e = &res[0];
    assert_eq!(e["model"], "tri");
    assert_eq!(e["converged"], true);
    assert!(e["flags"].as_array().unwrap().is_empty(), "{}", e["flags"]);
    let p = &e["params"];
    let close = |name: &str, unit: &str, want: f64| {
        assert_eq!(p[name]["unit"], unit, "{name}");
        let v = p[name]["value"].as_f64().unwrap();
        assert!((v / want - 1.0).abs() < 1e-6, "{name}: {v} vs {want}");
    };
    close("inv_gamma_1", "us", 0.58);
    close("inv_gamma_t", "us", 44.6);
    close("inv_gamma_t_l", "ms", 1.1);
    close("gamma_t", "1/s", 1.0 / 44.6e-6);
    assert!(p["b"]["std_error"].is_number());
    assert!(e["provenance"]["config_hash"].is_string());
    assert!(e["n_iterations"].as_u64().unwrap() > 0);
}

#[test]
fn failed_fits_set_the_exit_code_and_keep_the_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("traces");
    fs::create_dir(&dir).unwrap();
    tri_trace(&dir.join("a.csv"));
    let flat: String = (0..20).map(|i| format!("{:e},0.5\n", 1e-6 * i as f64)).collect();
    fs::write(dir.join("b.csv"), format!("time_s,population\n{flat}")).unwrap();
    fs::write(dir.join("c.csv"), "time_s,population\n1e-6,oops\n").unwrap();
    let out = tmp.path().join("o");
    let o = tlsbath(&["fit", s(&dir), "--out", s(&out)]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let res: Value = serde_json::from_slice(&fs::read(out.join("results.json")).unwrap()).unwrap();
    let res = res.as_array().unwrap();
    assert_eq!(res.len(), 3);
    assert!(res[0].get("error").is_none());
    assert!(res[1]["error"].as_str().unwrap().contains("constant"));
    assert!(res[2]["error"].as_str().unwrap().contains("line 2"));
}

#[test]
fn holeburn_writes_saturation_and_relaxation() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "hb.toml",
        r#"
[qubit]
frequency = "6.28 GHz"
gamma_q = "5 kHz"

[bath.resonant]
count = 100
frequency = "6.28 GHz"
coupling = "3.4 kHz"
gamma_t = "34 us"

[sequence]
park_frequency = "6.3 GHz"
interaction_frequency = "6.28 GHz"
pulses = 200
saturation_pulses = [0, 100, 200]
delays = { start = "100 ns", stop = "300 us", points = 60 }
"#,
    );
    let out = tmp.path().join("o");
    let o = tlsbath(&["holeburn", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("saturation.csv"));
    assert_eq!(header, ["pulses", "p_eq"]);
    let p: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(p[0] < p[1] && p[1] <= p[2]);
    // Γr / (N Γt + Γr) with τr = 1 µs.
    let ideal = 1e6 / (100.0 / 34e-6 + 1e6);
    assert!((p[2] / ideal - 1.0).abs() < 0.2, "{} vs {ideal}", p[2]);

    let fit_out = tmp.path().join("fit");
    let o = tlsbath(&["fit", s(&out.join("relaxation_000.csv")), "--out", s(&fit_out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let res: Value = serde_json::from_slice(&fs::read(fit_out.join("results.json")).unwrap()).unwrap();
    let tau_t = res[0]["params"]["inv_gamma_t"]["value"].as_f64().unwrap();
    assert!((tau_t / 34.0 - 1.0).abs() < 0.05, "{tau_t}");
}

#[test]
fn frequency_scan_fits_one_row_per_trace() {
    let tmp = tempfile::tempdir().unwrap();
    // 30 resonant TLSs under each probe frequency, 70 MHz apart.
    let freqs = ["5.33 GHz", "5.4 GHz", "5.47 GHz"];
    let mut text = String::from(
        r#"
[qubit]
frequency = "5.4 GHz"
gamma_q = "5 kHz"

[simulate]
delays = { start = "20 ns", stop = "400 us", points = 120 }
frequencies = ["5.33 GHz", "5.4 GHz", "5.47 GHz"]

[sequence]
park_frequency = "5.8 GHz"
interaction_frequency = "5.4 GHz"
pulses = 100

[bath.explicit]
sites = [
"#,
    );
    for f in freqs {
        for _ in 0..30 {
            text.push_str(&format!(
                "  {{ frequency = \"{f}\", coupling = \"3.5 kHz\", gamma_t = \"34 us\" }},\n"
            ));
        }
    }
    text.push_str("]\n");
    let cfg = write(tmp.path(), "scan.toml", &text);
    let sim = tmp.path().join("sim");
    let o = tlsbath(&["simulate", "--config", s(&cfg), "--out", s(&sim)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = tmp.path().join("fit");
    let o = tlsbath(&["fit", s(&sim), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let res: Value = serde_json::from_slice(&fs::read(out.join("results.json")).unwrap()).unwrap();
    let res = res.as_array().unwrap();
    assert_eq!(res.len(), 3);
    for (e, f) in res.iter().zip([5.33e9, 5.4e9, 5.47e9]) {
        assert!((e["frequency_hz"].as_f64().unwrap() / f - 1.0).abs() < 1e-12);
        assert_eq!(e["params"]["inv_gamma_1"]["unit"], "us");
        let tau_t = &e["params"]["inv_gamma_t"];
        assert_eq!(tau_t["unit"], "us");
        assert!((tau_t["value"].as_f64().unwrap() / 34.0 - 1.0).abs() < 0.05, "{tau_t}");
    }
    let (header, rows) = read_csv(&out.join("lifetimes.csv"));
    assert_eq!(header[0], "source");
    assert_eq!(rows.len(), 3);
}

#[test]
fn two_by_two_map() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "map.toml",
        r#"
[map]
coupling = { start = "10 kHz", stop = "10 MHz", points = 2 }
lifetime = { start = "100 ns", stop = "1 ms", points = 2 }
"#,
    );
    let run = |name: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let mut args = vec!["map", "--config", s(&cfg), "--out", s(&out)];
        args.extend_from_slice(extra);
        let o = tlsbath(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        out
    };
    let a = run("a", &["--threads", "1"]);
    let (header, rows) = read_csv(&a.join("map.csv"));
    assert_eq!(&header[..4], ["g_over_2pi_hz", "inv_gamma_t_s", "inv_gamma_1_s", "regime"]);
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert!(["fermi", "crossover", "purcell"].contains(&r[3].as_str()), "{r:?}");
        assert!(r[2].parse::<f64>().unwrap() > 0.0);
    }
    assert_eq!(snapshot(&a), snapshot(&run("b", &["--threads", "4"])));
    let j = run("j", &["--format", "json"]);
    let rows: Value = serde_json::from_slice(&fs::read(j.join("map.json")).unwrap()).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 4);
}

#[test]
fn frequency_model_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "f.toml",
        r#"
[qubit]
frequency = "6.3 GHz"
readout = { frequency = "7.1 GHz", linewidth = "2 MHz", coupling = "48 MHz" }

[frequency_model]
frequencies = { start = "5 GHz", stop = "6.5 GHz", points = 16, spacing = "linear" }
"#,
    );
    let out = tmp.path().join("o");
    let o = tlsbath(&["freq-model", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = read_csv(&out.join("freq.csv"));
    assert_eq!(header, ["omega_over_2pi_hz", "inv_gamma_1_s"]);
    assert_eq!(rows.len(), 16);
    let tau: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    // Lifetimes jump up across the 5.2 GHz edge.
    assert!(tau[3] > 2.0 * tau[1], "{tau:?}");
}
