use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use fedforest::federation::{
    load_model, load_state, save_model, save_state, unlearn_client, Federation, PipelineConfig, PipelineModel,
};
use fedforest::gbdt::{extract_rules, fit, grid_search, Forest};
use fedforest::metrics::{evaluate, MetricsReport};
use fedforest::synthetic::generate;
use fedforest::tabular::{load_csv, partition_clients, preprocess, train_test_split, ClientPartition, Dataset};

use crate::config::{ConfigError, RunConfig};

const STATE_FILE: &str = "server_state.json";

struct Prepared {
    train: Dataset,
    test: Dataset,
    parts: Vec<ClientPartition>,
    benign: usize,
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut text = text.to_string();
    if !text.ends_with('\n') {
        text.push('\n');
    }
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write(path, &serde_json::to_string_pretty(value)?)
}

/// Loads data, splits off the held-out set, preprocesses and partitions.
fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let data = match (&cfg.data.path, &cfg.data.synthetic) {
        (Some(path), _) => load_csv(path, &cfg.data.label_column, None)
            .with_context(|| format!("loading {}", path.display()))?,
        (None, Some(spec)) => generate(spec)?,
        (None, None) => unreachable!("validated"),
    };
    let benign = data.class_id(&cfg.data.benign_class).ok_or_else(|| {
        ConfigError(format!("data.benign_class `{}` is not a label in the data", cfg.data.benign_class))
    })?;
    let (mut train, mut test) = train_test_split(&data, cfg.data.test_fraction, cfg.seed)?;
    if let Some(mode) = cfg.data.preprocess.mode() {
        let (t, stats) = preprocess(&train, mode, None)?;
        for w in &stats.warnings {
            eprintln!("warning: {w:?}");
        }
        test = preprocess(&test, mode, Some(&stats))?.0;
        train = t;
    }
    let parts = partition_clients(&train, cfg.partition.n_clients, &cfg.partition_mode(), cfg.seed)?;
    Ok(Prepared { train, test, parts, benign })
}

fn report(model_preds: &[usize], test: &Dataset, benign: usize) -> Result<MetricsReport> {
    Ok(evaluate(model_preds, test.labels(), test.n_classes(), benign)?)
}

fn write_report(out: &Path, stem: &str, r: &MetricsReport, class_names: &[String]) -> Result<()> {
    write(&out.join(format!("{stem}.json")), &r.to_json())?;
    write(&out.join(format!("{stem}.txt")), &r.to_table(class_names))
}

fn write_config(cfg: &RunConfig) -> Result<()> {
    write(&cfg.output_dir.join("config.resolved.toml"), &cfg.to_toml())
}

pub fn simulate(cfg: &RunConfig) -> Result<()> {
    write_config(cfg)?;
    let p = prepare(cfg)?;
    let fed = Federation::new(&p.parts, cfg.pipeline(p.train.n_samples()))?;
    let run = fed.train()?;
    let out = &cfg.output_dir;
    let model_dir = out.join("model");
    save_model(&run.model, &model_dir)?;
    save_state(&run.state, &model_dir.join(STATE_FILE))?;
    let r = report(&run.model.predict_dataset(&p.test)?, &p.test, p.benign)?;
    write_report(out, "report", &r, p.test.class_names())?;
    write_json(&out.join("ledger.json"), &run.ledger)?;
    write(&out.join("ledger.txt"), &run.ledger.to_table())?;
    println!(
        "federated: accuracy {:.4} miss_rate {:.4} f1_attack {:.4} ({} clients, {} encoders)",
        r.accuracy,
        r.miss_rate,
        r.f1_attack,
        run.state.selected_clients.len(),
        run.model.selected_encoders.len()
    );
    Ok(())
}

pub fn central(cfg: &RunConfig) -> Result<()> {
    write_config(cfg)?;
    let p = prepare(cfg)?;
    let out = cfg.output_dir.join("central");
    let hyper = match &cfg.grid {
        None => cfg.server.params(),
        Some(g) => {
            let (fit_part, valid) = train_test_split(&p.train, g.validation_fraction, cfg.seed)?;
            let result = grid_search(&fit_part, &valid, &g.grid())?;
            write_json(&out.join("grid.json"), &result)?;
            result.best
        }
    };
    let forest = fit(&p.train, &hyper)?;
    write(&out.join("forest.json"), &forest.to_json())?;
    let r = report(&forest.predict_classes(&p.test)?, &p.test, p.benign)?;
    write_report(&out, "report", &r, p.test.class_names())?;
    println!("centralized: accuracy {:.4} miss_rate {:.4} f1_attack {:.4}", r.accuracy, r.miss_rate, r.f1_attack);
    let federated = cfg.output_dir.join("report.json");
    if let Ok(text) = fs::read_to_string(&federated) {
        let fed: MetricsReport = serde_json::from_str(&text).context("reading federated report")?;
        println!(
            "accuracy gap (centralized - federated): {:.4}; ratio {:.4}",
            r.accuracy - fed.accuracy,
            fed.accuracy / r.accuracy
        );
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct Attestation {
    client_id: usize,
    encoders_changed: bool,
    equivalent_to_fresh_run: bool,
}

pub fn unlearn(cfg: &RunConfig, client_id: usize, model_dir: &Path) -> Result<()> {
    write_config(cfg)?;
    let model = load_model(model_dir)?;
    let state = load_state(&model_dir.join(STATE_FILE))?;
    let p = prepare(cfg)?;
    let base = PipelineConfig { suppressed_uploads: Vec::new(), ..model.config.clone() };
    let fed = Federation::new(&p.parts, base.clone())?;
    let (updated, new_state) =
        unlearn_client(&model, &state, client_id, |id, encoders| fed.client_encode(id, encoders))?;

    let fresh_cfg = PipelineConfig { suppressed_uploads: updated.config.suppressed_uploads.clone(), ..base };
    let fresh = Federation::new(&p.parts, fresh_cfg)?.train()?;
    let attestation = Attestation {
        client_id,
        encoders_changed: updated.selected_encoders != model.selected_encoders,
        equivalent_to_fresh_run: updated.to_json() == fresh.model.to_json(),
    };

    let out = cfg.output_dir.join(format!("unlearned_client_{client_id:04}"));
    save_model(&updated, &out.join("model"))?;
    save_state(&new_state, &out.join("model").join(STATE_FILE))?;
    write_json(&out.join("attestation.json"), &attestation)?;
    let r = report(&updated.predict_dataset(&p.test)?, &p.test, p.benign)?;
    write_report(&out, "report", &r, p.test.class_names())?;
    println!(
        "unlearned client {client_id}: accuracy {:.4}, equivalent to fresh run: {}",
        r.accuracy, attestation.equivalent_to_fresh_run
    );
    Ok(())
}

fn rules_listing(title: &str, forest: &Forest) -> String {
    let mut s = format!("# {title}\n");
    for rule in extract_rules(forest) {
        s.push_str(&rule.describe(forest));
        s.push('\n');
    }
    s
}

pub fn rules(model_dir: &Path, out: Option<&Path>) -> Result<()> {
    let model: PipelineModel = load_model(model_dir)?;
    let mut text = rules_listing("server classifier", &model.server_forest);
    for e in &model.selected_encoders {
        text.push('\n');
        text.push_str(&rules_listing(&format!("encoder of client {}", e.client_id), &e.forest));
    }
    match out {
        Some(dir) => write(&dir.join("rules.txt"), &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn ledger(cfg: &RunConfig) -> Result<()> {
    write_config(cfg)?;
    let p = prepare(cfg)?;
    let run = Federation::new(&p.parts, cfg.pipeline(p.train.n_samples()))?.train()?;
    write_json(&cfg.output_dir.join("ledger.json"), &run.ledger)?;
    let table = run.ledger.to_table();
    write(&cfg.output_dir.join("ledger.txt"), &table)?;
    print!("{table}");
    Ok(())
}
