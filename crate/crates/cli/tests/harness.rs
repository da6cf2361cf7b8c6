use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command as Process;

use blowup_cli::manifest::{read_all, sha256_hex, MANIFEST_FILE};
use blowup_cli::{run_text, Command, Format, HarnessError, RunManifest, RunOptions};

fn opts(dir: &Path, jobs: usize) -> RunOptions {
    RunOptions { out: Some(dir.to_path_buf()), jobs, seed: 0, format: Format::Csv }
}

fn run_in(dir: &Path, cmd: Command, text: &str, jobs: usize) -> RunManifest {
    run_text(cmd, text, Path::new("test.toml"), &opts(dir, jobs)).unwrap()
}

/// CSV file as a list of column → value maps.
fn read_csv(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().clone();
    r.records()
        .map(|rec| headers.iter().map(String::from).zip(rec.unwrap().iter().map(String::from)).collect())
        .collect()
}

const FOUR_CASE: &str = r#"
[psi]
family = "time-weight"
sigma = 0.5
k_over_lambda0 = 0.5

[f]
family = "power"
p = 2.0

[task.classify]

[sweep]
task = "classify"

[sweep.params]
"psi.sigma" = [0.5, 1.0, 2.0]
"psi.k_over_lambda0" = [0.5, 1.0, 1.5]
"#;

#[test]
fn four_case_sweep_matches_the_closed_form_table() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(dir.path(), Command::Sweep, FOUR_CASE, 2);
    assert_eq!(m.failed_tasks(), 0);
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 9);
    for r in &rows {
        let sigma: f64 = r["psi.sigma"].parse().unwrap();
        let ratio: f64 = r["psi.k_over_lambda0"].parse().unwrap();
        // p = 2: no global solution iff k > λ0, or k = λ0 with σ ≤ 1.
        let blows_up = ratio > 1.0 || (ratio == 1.0 && sigma <= 1.0);
        assert_eq!(r["label"], if blows_up { "Divergent" } else { "Convergent" }, "σ={sigma}, k={ratio}λ0");
        assert_eq!(r["closed_form"], if blows_up { "NoGlobal" } else { "GlobalForSmallData" });
        assert_eq!(r["closed_form_match"], "true");
        assert_eq!(r["error"], "");
    }
}

const COUNTEREXAMPLE: &str = r#"
[run]
name = "counterexample"

[psi]
family = "time-weight"
sigma = 0.5
k_over_lambda0 = 1.0

[f]
family = "power"
p = 2.0

[task.classify]
modes = ["theorem-eps", "semigroup-norm"]
u0 = ["phi0", "bump"]
auxiliary = true

[task.simulate]
amplitudes = [0.5]
horizon = 10.0
snapshots = [0.5]
ode = { y0 = 0.5, horizon = 10.0 }
"#;

#[test]
fn counterexample_report() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(dir.path(), Command::Run, COUNTEREXAMPLE, 2);
    assert_eq!(m.failed_tasks(), 0, "{:?}", m.tasks);

    let aux = read_csv(&dir.path().join("auxiliary.csv"));
    let holds = |name: &str| aux.iter().find(|r| r["condition"] == name).unwrap()["holds"].clone();
    assert_eq!(holds("C1"), "false");
    assert_eq!(holds("C2"), "false");

    let verdicts = read_csv(&dir.path().join("classify.csv"));
    assert_eq!(verdicts.len(), 3);
    assert!(verdicts.iter().all(|r| r["label"] == "Divergent"));
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("auxiliary.json")).unwrap()).unwrap();
    assert_eq!(json["c1"]["holds"], false);

    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("simulate_report.json")).unwrap()).unwrap();
    assert_eq!(report["ode"]["status"]["status"], "BlewUp");
    assert!(report["ode"]["t_star"].as_f64().unwrap() <= 3.0);

    let sim = read_csv(&dir.path().join("simulate.csv"));
    assert_eq!(sim[0]["status"], "BlownUp");
    let trace = read_csv(&dir.path().join("trace_0.csv"));
    assert_eq!(trace[0]["t"], "0");
    let snap = std::fs::read_to_string(dir.path().join("snapshot_0_0.dat")).unwrap();
    assert!(snap.starts_with("# t = 0.5"));
    assert_eq!(snap.lines().count(), 1 + 199);
}

#[test]
fn empty_task_list_gives_a_manifest_with_zero_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(dir.path(), Command::Run, "[run]\nname = \"nothing\"\n", 1);
    assert!(m.tasks.is_empty());
    assert!(m.artifacts.is_empty());
    let lines = read_all(dir.path()).unwrap();
    assert_eq!(lines, vec![m]);
}

#[test]
fn sigma_sweep_flips_just_above_one() {
    let text = r#"
[psi]
family = "time-weight"
sigma = 1.0
k_over_lambda0 = 1.0

[f]
family = "power"
p = 2.0

[task.classify]
horizon_doublings = 40

[sweep]
task = "classify"

[sweep.params]
"psi.sigma" = [0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0]
"#;
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Sweep, text, 2);
    let rows = read_csv(&dir.path().join("sweep.csv"));
    let labels: Vec<(f64, String)> = rows.iter().map(|r| (r["psi.sigma"].parse().unwrap(), r["label"].clone())).collect();
    for (s, l) in &labels {
        assert_eq!(l, if *s <= 1.0 { "Divergent" } else { "Convergent" }, "σ = {s}");
    }
}

#[test]
fn eps_sweep_gives_one_label() {
    let text = r#"
[psi]
family = "time-weight"
sigma = 0.5
k_over_lambda0 = 1.5

[f]
family = "power"
p = 2.0

[task.classify]
eps = [1.0]

[sweep]
task = "classify"

[sweep.params]
"task.classify.eps" = [1.0, 0.1, 0.01, 0.001, 0.0001, 0.00001, 0.000001]
"#;
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Sweep, text, 2);
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 7);
    for r in &rows {
        assert_eq!(r["label"], "Divergent");
        assert_eq!(r["eps_min"], r["eps_max"]);
        assert_eq!(r["eps_min"], r["task.classify.eps"]);
    }
}

#[test]
fn singleton_sweep_equals_a_plain_run() {
    let text = r#"
[psi]
family = "time-weight"
sigma = 2.0
k_over_lambda0 = 1.0

[f]
family = "power"
p = 2.0

[task.classify]
modes = ["theorem-eps", "semigroup-norm"]

[sweep]
task = "classify"

[sweep.params]
"psi.sigma" = [2.0]
"#;
    let dir = tempfile::tempdir().unwrap();
    run_in(dir.path(), Command::Run, text, 2);
    let plain = read_csv(&dir.path().join("classify.csv"));
    let swept = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(plain.len(), swept.len());
    for (p, s) in plain.iter().zip(&swept) {
        let mut s = s.clone();
        for k in ["point", "psi.sigma", "error"] {
            s.remove(k);
        }
        assert_eq!(p, &s);
    }
}

#[test]
fn failing_sweep_points_become_rows() {
    let text = r#"
[psi]
family = "time-weight"
sigma = 1.0

[f]
family = "power"
p = 2.0

[task.simulate]
horizon = 1.0

[sweep]
task = "simulate"

[sweep.params]
"task.simulate.horizon" = [-1.0, 0.5]
"#;
    let dir = tempfile::tempdir().unwrap();
    let m = run_in(dir.path(), Command::Sweep, text, 1);
    assert_eq!(m.failed_tasks(), 0);
    let rows = read_csv(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["status"], "Undetermined");
    assert!(rows[0]["error"].contains("task.simulate.horizon"));
    assert_eq!(rows[1]["error"], "");
}

fn artifact_digests(m: &RunManifest) -> Vec<(String, String)> {
    m.artifacts.iter().map(|a| (a.path.clone(), a.sha256.clone())).collect()
}

#[test]
fn outputs_do_not_depend_on_the_job_count() {
    let text = format!("{COUNTEREXAMPLE}\n[sweep]\ntask = \"classify\"\n[sweep.params]\n\"psi.sigma\" = [0.5, 2.0]\n");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ma = run_in(a.path(), Command::Run, &text, 1);
    let mb = run_in(b.path(), Command::Run, &text, 4);
    assert_eq!(artifact_digests(&ma), artifact_digests(&mb));
    let again = run_in(a.path(), Command::Run, &text, 3);
    assert_eq!(artifact_digests(&ma), artifact_digests(&again));
}

#[test]
fn manifest_lists_every_file_with_its_digest() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_in(dir.path(), Command::Run, COUNTEREXAMPLE, 2);
    let extra = "[f]\nfamily = \"power\"\np = 3.0\n[task.analyze]\n[task.verify-properties]\n";
    run_in(dir.path(), Command::Run, extra, 2);
    let all = read_all(dir.path()).unwrap();
    assert_eq!(all.len(), 2);
    assert_eq!(all[0], first, "earlier manifest lines are never rewritten");

    let listed: BTreeMap<String, String> =
        all.iter().flat_map(|m| m.artifacts.iter().map(|a| (a.path.clone(), a.sha256.clone()))).collect();
    let mut on_disk = 0;
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let name = entry.unwrap().file_name().into_string().unwrap();
        if name == MANIFEST_FILE {
            continue;
        }
        on_disk += 1;
        let digest = listed.get(&name).unwrap_or_else(|| panic!("{name} missing from the manifest"));
        assert_eq!(&sha256_hex(&std::fs::read(dir.path().join(&name)).unwrap()), digest);
    }
    assert_eq!(on_disk, listed.len());
    for t in &all[0].tasks {
        assert!(!t.normalization.is_empty());
        for p in &t.artifacts {
            assert!(listed.contains_key(p));
        }
    }
    assert_eq!(all[0].config["run"]["name"], "counterexample");
}

#[test]
fn json_tables_carry_typed_values() {
    let dir = tempfile::tempdir().unwrap();
    let o = RunOptions { format: Format::Json, ..opts(dir.path(), 1) };
    let text = "[psi]\nfamily = \"constant\"\nvalue = 1.0\n[f]\nfamily = \"power\"\np = 2.0\n[task.classify]\n";
    run_text(Command::Classify, text, Path::new("x.toml"), &o).unwrap();
    let rows: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("classify.json")).unwrap()).unwrap();
    assert_eq!(rows[0]["label"], "Convergent");
    let value = rows[0]["value"].as_f64().unwrap();
    let l = rows[0]["lambda0"].as_f64().unwrap();
    // ∫_0^∞ ε e^{-λ0 t} dt at ε = 1
    assert!((value - 1.0 / l).abs() <= 1e-8 / l);
    assert!(rows[0]["closed_form"].is_null());
}

fn config_error(text: &str) -> (String, String) {
    let dir = tempfile::tempdir().unwrap();
    match run_text(Command::Run, text, Path::new("bad.toml"), &opts(dir.path(), 1)) {
        Err(HarnessError::Config { path, message }) => {
            assert!(std::fs::read_dir(dir.path()).unwrap().next().is_none(), "nothing written on config errors");
            (path, message)
        }
        other => panic!("expected a config error, got {other:?}"),
    }
}

#[test]
fn config_errors_name_the_field() {
    let f = "[f]\nfamily = \"power\"\np = 2.0\n";
    let psi = "[psi]\nfamily = \"constant\"\nvalue = 1.0\n";
    assert_eq!(config_error("[f]\nfamily = \"quartic\"\n[task.analyze]\n").0, "f.family");
    assert_eq!(config_error("[f]\nfamily = \"power\"\n[task.analyze]\n").0, "f.p");
    assert_eq!(config_error(&format!("{f}[task.classify]\n")).0, "psi");
    assert_eq!(config_error(&format!("{f}{psi}[task.classify]\nmodes = [\"fast\"]\n")).0, "task.classify.modes[0]");
    assert_eq!(config_error(&format!("{f}[task.analyze]\n[f.extra]\n")).0, "<file>");
    assert_eq!(config_error("[f]\nexpr = \"u^\"\n[task.analyze]\n").0, "f.expr");
    assert_eq!(config_error("[f]\nexpr = \"u - 1\"\n[task.analyze]\n").0, "f");
    let sweep = format!("{f}{psi}[task.classify]\n[sweep]\ntask = \"classify\"\n[sweep.params]\n\"psi.sigma\" = [1.0]\n");
    let (path, message) = config_error(&sweep);
    assert_eq!(path, "sweep.params.psi.sigma");
    assert!(message.contains("template"));
}

fn blowup(args: &[&str]) -> (i32, String) {
    let out = Process::new(env!("CARGO_BIN_EXE_blowup")).args(args).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p.display().to_string()
    };
    let out = dir.path().join("out").display().to_string();
    let good = write("good.toml", "[f]\nfamily = \"power\"\np = 2.0\n[task.analyze]\n");
    assert_eq!(blowup(&["analyze", &good, "--out", &out, "--jobs", "1"]).0, 0);

    let bad = write("bad.toml", "[f]\nfamily = \"power\"\np = 2.0\nflavour = 1\n");
    let (code, stderr) = blowup(&["run", &bad, "--out", &out]);
    assert_eq!(code, 2);
    assert!(stderr.contains("flavour"), "{stderr}");

    // z0 above the admissible bound fails the simulate task but still writes the rest.
    let failing = write(
        "fail.toml",
        "[psi]\nfamily = \"constant\"\nvalue = 1.0\n[f]\nfamily = \"power\"\np = 2.0\n[task.analyze]\n\
         [task.simulate]\namplitudes = [0.1]\nhorizon = 1.0\nsupersolution = { z0 = 1e6 }\n",
    );
    let (code, stderr) = blowup(&["run", &failing, "--out", &out]);
    assert_eq!(code, 1, "{stderr}");
    let last = read_all(Path::new(&out)).unwrap().pop().unwrap();
    let status: BTreeMap<_, _> = last.tasks.iter().map(|t| (t.name.as_str(), t.status.as_str())).collect();
    assert_eq!(status["analyze"], "ok");
    assert_eq!(status["simulate"], "failed");
}
