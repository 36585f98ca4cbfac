use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL: &str = r#"
seed = 3

[data]
test_fraction = 0.3

[data.synthetic]
n_samples = 600
n_features = 3
n_classes = 4
seed = 3

[partition]
n_clients = 4
mode = "heterogeneous"

[privacy]
p = 0.1
q = 0.1
epsilon = 20.0

[encoder]
n_estimators = 10
max_depth = 3

[server]
n_estimators = 10
max_depth = 3

[grid]
n_estimators = [5, 10]
max_depth = [2, 3]
"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fedforest"))
}

fn config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("run.toml");
    fs::write(&path, text).unwrap();
    path
}

fn run(cfg: &Path, out: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(cfg).arg("--out").arg(out).args(args).output().unwrap()
}

fn files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn simulate_writes_reports_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        let o = run(&cfg, out, &["simulate"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(run(&cfg, out, &["central"]).status.success());
    }
    let report = fs::read_to_string(a.join("report.json")).unwrap();
    for key in ["\"accuracy\"", "\"miss_rate\"", "\"f1_attack\"", "\"confusion\""] {
        assert!(report.contains(key), "missing {key}");
    }
    assert!(a.join("model/manifest.json").is_file());
    assert!(a.join("central/grid.json").is_file());
    let resolved = fs::read_to_string(a.join("config.resolved.toml")).unwrap();
    assert!(resolved.contains("num_leaves = 5") && resolved.contains("learning_rate = 0.1"));
    let (fa, fb) = (files(&a), files(&b));
    assert_eq!(fa.iter().map(|f| &f.0).collect::<Vec<_>>(), fb.iter().map(|f| &f.0).collect::<Vec<_>>());
    for ((name, x), (_, y)) in fa.iter().zip(&fb) {
        if name != Path::new("config.resolved.toml") {
            assert!(x == y, "{} differs", name.display());
        }
    }
}

#[test]
fn seed_override_changes_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let out = tmp.path().join("s");
    let o = bin().arg("--config").arg(&cfg).arg("--out").arg(&out).args(["--seed", "9", "simulate"]).output().unwrap();
    assert!(o.status.success());
    assert!(fs::read_to_string(out.join("config.resolved.toml")).unwrap().contains("seed = 9"));
}

#[test]
fn unlearn_rules_and_ledger() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = config(tmp.path(), SMALL);
    let out = tmp.path().join("o");
    assert!(run(&cfg, &out, &["simulate"]).status.success());
    let model = out.join("model");
    let model = model.to_str().unwrap();

    let o = run(&cfg, &out, &["unlearn", "--client", "1", "--model", model]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let att = fs::read_to_string(out.join("unlearned_client_0001/attestation.json")).unwrap();
    assert!(att.contains("\"equivalent_to_fresh_run\": true"), "{att}");

    let o = run(&cfg, &out, &["unlearn", "--client", "77", "--model", model]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("77"));

    let o = bin().arg("--out").arg(&out).args(["rules", "--model", model]).output().unwrap();
    assert!(o.status.success());
    let rules = fs::read_to_string(out.join("rules.txt")).unwrap();
    assert!(rules.starts_with("# server classifier") && rules.contains("then"));

    let o = run(&cfg, &out, &["ledger"]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("total upload"));
    assert!(out.join("ledger.json").is_file());
}

#[test]
fn config_errors_exit_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let cases = [
        SMALL.replace("seed = 3\n\n[data]", "seed = 3\ncolour = 1\n\n[data]"),
        format!("{SMALL}\n[budget]\nratio = 1.5\n"),
        SMALL.replace("[data.synthetic]", "path = \"nowhere.csv\"\n\n[data.synthetic]"),
        SMALL.replace("n_clients = 4", "n_clients = \"four\""),
        SMALL.replace("[data]", "[data]\nbenign_class = \"normal\""),
    ];
    for text in &cases {
        let cfg = config(tmp.path(), text);
        let o = run(&cfg, &out, &["simulate"]);
        assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let o = bin().arg("simulate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let o = bin().arg("--config").arg(tmp.path().join("missing.toml")).arg("simulate").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn csv_input_with_preprocessing() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from("dur,bytes,label\n");
    for i in 0..240 {
        let label = ["normal", "scan", "flood"][i % 3];
        let bytes = if i % 17 == 0 { String::new() } else { format!("{}", (i % 3) * 100 + i % 7) };
        csv.push_str(&format!("{},{bytes},{label}\n", (i % 3) as f64 * 2.5 + (i % 5) as f64 * 0.1));
    }
    fs::write(tmp.path().join("flows.csv"), csv).unwrap();
    let text = r#"
[data]
path = "flows.csv"
benign_class = "normal"
preprocess = "log"

[partition]
n_clients = 2
mode = "homogeneous"

[encoder]
n_estimators = 5
max_depth = 2

[server]
n_estimators = 5
max_depth = 2
"#;
    let cfg = config(tmp.path(), text);
    let out = tmp.path().join("o");
    let o = run(&cfg, &out, &["simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(run(&cfg, &out, &["central"]).status.success());
}
