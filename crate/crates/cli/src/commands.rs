//! The five subcommands. Each reads the resolved [`ExperimentConfig`] and
//! writes plain-text files under the output directory; every file starts
//! with the config hash and seed.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};

use uclso::clustering::kmeans;
use uclso::data::{
    arff_string, compute_stats, filter_labels, generate_toy, label_xml_string, load_mulan,
    make_fold_plan, MinMaxScaler, MultiLabelDataset, STATS_CSV_HEADER,
};
use uclso::eval::{
    average_ranks, friedman, run_cv, FriedmanResult, MethodConfig, MetricReport, RankTable, Summary,
};
use uclso::oversample::{augment_all, OversampleMode};

use crate::config::{parse_mode, DatasetSpec, ExperimentConfig};
use crate::error::CliError;

/// Writes files into the output directory, each prefixed with a provenance
/// line in the comment syntax of its format.
pub struct Output {
    dir: PathBuf,
    hash: String,
    seed: u64,
}

impl Output {
    pub fn new(dir: &Path, cfg: &ExperimentConfig) -> Self {
        Output {
            dir: dir.to_path_buf(),
            hash: cfg.hash(),
            seed: cfg.seed,
        }
    }

    fn stamp(&self) -> String {
        format!("config_hash={} seed={}", self.hash, self.seed)
    }

    fn put(&self, rel: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.dir.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| write_err(parent, e))?;
        }
        fs::write(&path, body).map_err(|e| write_err(&path, e))?;
        Ok(path)
    }

    pub fn csv(&self, rel: &str, body: &str) -> Result<PathBuf, CliError> {
        self.put(rel, &format!("# {}\n{body}", self.stamp()))
    }

    pub fn json(&self, rel: &str, mut value: Value) -> Result<PathBuf, CliError> {
        if let Value::Object(map) = &mut value {
            map.insert("config_hash".into(), json!(self.hash));
            map.insert("seed".into(), json!(self.seed));
        }
        let mut text = serde_json::to_string_pretty(&value).expect("json value serialises");
        text.push('\n');
        self.put(rel, &text)
    }

    fn arff(&self, rel: &str, body: &str) -> Result<PathBuf, CliError> {
        self.put(rel, &format!("% {}\n{body}", self.stamp()))
    }

    fn xml(&self, rel: &str, body: &str) -> Result<PathBuf, CliError> {
        // the comment has to follow the declaration
        let (decl, rest) = body.split_once('\n').unwrap_or((body, ""));
        self.put(rel, &format!("{decl}\n<!-- {} -->\n{rest}", self.stamp()))
    }
}

fn write_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Write {
        path: path.display().to_string(),
        source,
    }
}

/// Loads a Mulan dataset or generates a toy one. Unreadable or malformed
/// input files are reported as usage errors.
pub fn load_dataset(
    cfg: &ExperimentConfig,
    spec: &DatasetSpec,
) -> Result<MultiLabelDataset, CliError> {
    match (&spec.arff, &spec.xml) {
        (Some(a), Some(x)) => load_mulan(a, x).map_err(|e| CliError::Usage(e.to_string())),
        _ => Ok(generate_toy(&cfg.toy_config(spec)?)?),
    }
}

/// The dataset after label filtering (when enabled), with dropped labels
/// reported on stderr.
fn prepared(cfg: &ExperimentConfig, spec: &DatasetSpec) -> Result<MultiLabelDataset, CliError> {
    let ds = load_dataset(cfg, spec)?;
    if !cfg.filter.enabled {
        return Ok(ds);
    }
    let (kept, report) = filter_labels(&ds, cfg.filter.max_ir, cfg.filter.min_pos)?;
    for d in &report.dropped {
        eprintln!("{}: dropped label `{}` ({})", spec.name, d.name, d.reason);
    }
    Ok(kept)
}

fn scaled(cfg: &ExperimentConfig, ds: MultiLabelDataset) -> Result<MultiLabelDataset, CliError> {
    if !cfg.cv.min_max_scale {
        return Ok(ds);
    }
    let s = MinMaxScaler::fit(ds.features());
    Ok(ds.with_features(s.transform(ds.features())?)?)
}

/// Description statistics before and after label filtering.
pub fn stats(cfg: &ExperimentConfig, out: &Output) -> Result<String, CliError> {
    let mut csv = format!("stage,{STATS_CSV_HEADER}\n");
    let mut dropped = String::from("dataset,label,reason\n");
    for spec in &cfg.datasets {
        let ds = load_dataset(cfg, spec)?;
        let _ = writeln!(csv, "raw,{}", compute_stats(&ds).csv_row(&spec.name));
        match filter_labels(&ds, cfg.filter.max_ir, cfg.filter.min_pos) {
            Ok((kept, report)) => {
                let _ = writeln!(csv, "filtered,{}", compute_stats(&kept).csv_row(&spec.name));
                for d in report.dropped {
                    let _ = writeln!(dropped, "{},{},{}", spec.name, csv_field(&d.name), d.reason);
                }
            }
            Err(uclso::Error::AllLabelsFiltered) => {
                eprintln!("{}: every label is removed by the filter", spec.name);
                for name in ds.label_names() {
                    let _ = writeln!(
                        dropped,
                        "{},{},all labels filtered",
                        spec.name,
                        csv_field(name)
                    );
                }
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.csv("stats.csv", &csv)?;
    out.csv("dropped_labels.csv", &dropped)?;
    Ok(csv)
}

/// k-means assignments and centroids of every dataset.
pub fn cluster(cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    let os = cfg.oversample_config(OversampleMode::Uclso)?;
    for spec in &cfg.datasets {
        let ds = scaled(cfg, load_dataset(cfg, spec)?)?;
        let mut kc = os.kmeans_config();
        kc.k = kc.k.min(ds.n_rows());
        let a = kmeans(ds.features(), &kc)?;
        out.csv(
            &format!("{}/assignment.csv", spec.name),
            &a.assignment_csv(),
        )?;
        out.csv(&format!("{}/centroids.csv", spec.name), &a.centroids_csv())?;
        let sizes: Vec<usize> = (0..a.k)
            .map(|p| a.assignment.iter().filter(|&&c| c == p).count())
            .collect();
        out.json(
            &format!("{}/clusters.json", spec.name),
            json!({
                "dataset": spec.name,
                "k": a.k,
                "inertia": a.inertia,
                "iterations": a.iterations_run,
                "inertia_history": a.inertia_history,
                "sizes": sizes,
            }),
        )?;
    }
    Ok(())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn file_stem(l: usize, name: &str) -> String {
    let clean: String = name
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' {
                c
            } else {
                '_'
            }
        })
        .collect();
    format!("{l:03}_{clean}")
}

/// Per-label synthetic points and a manifest of per-cluster counts.
pub fn oversample(cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    let mode = cfg.oversample_mode()?;
    if mode == OversampleMode::None {
        return Err(CliError::Usage(
            "oversample.mode is `none`: nothing to oversample".into(),
        ));
    }
    let os = cfg.oversample_config(mode)?;
    for spec in &cfg.datasets {
        let ds = scaled(cfg, prepared(cfg, spec)?)?;
        let (_, augments) = augment_all(&ds, &os)?;
        let mut labels = Vec::new();
        for (l, aug) in augments.into_iter().enumerate() {
            let name = &ds.label_names()[l];
            match aug {
                Ok(a) => {
                    let file = format!("{}.csv", file_stem(l, name));
                    out.csv(
                        &format!("{}/synthetic/{file}", spec.name),
                        &a.synthetic_csv(),
                    )?;
                    let clusters: Vec<Value> = a
                        .quotas
                        .iter()
                        .map(|q| json!({ "cluster": q.cluster, "minority": q.minority, "synthetic": q.synthetic }))
                        .collect();
                    labels.push(json!({
                        "label": name,
                        "file": file,
                        "minority_value": a.extra.label_value,
                        "minority": a.n_minority,
                        "majority": a.n_majority,
                        "synthetic": a.extra.len(),
                        "augmented_minority": a.augmented_minority(),
                        "clusters": clusters,
                    }));
                }
                Err(uclso::Error::NoMinority { .. }) => {
                    eprintln!(
                        "warning: {}: label `{name}` has no minority points, skipped",
                        spec.name
                    );
                    labels.push(json!({ "label": name, "skipped": "no minority points" }));
                }
                Err(e) => return Err(e.into()),
            }
        }
        out.json(
            &format!("{}/manifest.json", spec.name),
            json!({
                "dataset": spec.name,
                "mode": mode.as_str(),
                "k_clusters": os.k_clusters,
                "m_neighbors": os.m_neighbors,
                "labels": labels,
            }),
        )?;
    }
    Ok(())
}

/// Writes every toy dataset as Mulan ARFF + XML.
pub fn toy_gen(cfg: &ExperimentConfig, out: &Output) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    for spec in &cfg.datasets {
        if spec.toy.is_none() {
            eprintln!("{}: not a toy dataset, skipped", spec.name);
            continue;
        }
        let ds = generate_toy(&cfg.toy_config(spec)?)?;
        written.push(out.arff(
            &format!("{}.arff", spec.name),
            &arff_string(&ds, &spec.name),
        )?);
        written.push(out.xml(
            &format!("{}.xml", spec.name),
            &label_xml_string(ds.label_names()),
        )?);
    }
    if written.is_empty() {
        return Err(CliError::Usage("config has no toy datasets".into()));
    }
    Ok(written)
}

fn methods(cfg: &ExperimentConfig) -> Result<Vec<MethodConfig>, CliError> {
    cfg.cv
        .methods
        .iter()
        .map(|name| {
            let mode = parse_mode(name)?;
            let mut m = MethodConfig::new(
                name.clone(),
                cfg.oversample_config(mode)?,
                cfg.train_config(),
            );
            m.threshold = cfg.train.threshold;
            m.min_max_scale = cfg.cv.min_max_scale;
            Ok(m)
        })
        .collect()
}

fn cells_csv(report: &MetricReport) -> String {
    let mut s = String::from(
        "rep,fold,label,tp,fp,tn,fn,f1,auc,constant_model,train_positives,test_positives,synthetic\n",
    );
    for c in &report.cells {
        for o in &c.labels {
            let auc = o.auc.map(|a| a.to_string()).unwrap_or_default();
            let k = &o.confusion;
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{}",
                c.rep,
                c.fold,
                csv_field(&o.label),
                k.tp,
                k.fp,
                k.tn,
                k.fn_,
                o.f1,
                auc,
                o.constant_model,
                o.train_positives,
                o.test_positives,
                o.synthetic
            );
        }
    }
    s
}

fn summary_json(s: &Summary) -> Value {
    json!({ "mean": s.mean, "sd": s.sd, "count": s.count })
}

fn report_json(r: &MetricReport) -> Value {
    let cells: Vec<Value> = r
        .cells
        .iter()
        .map(|c| json!({ "rep": c.rep, "fold": c.fold, "macro_f1": c.macro_f1, "macro_auc": c.macro_auc }))
        .collect();
    json!({
        "method": r.method,
        "macro_f1": summary_json(&r.f1),
        "macro_auc": summary_json(&r.auc),
        "macro_f1_by_repetition": summary_json(&r.f1_by_rep),
        "macro_auc_by_repetition": summary_json(&r.auc_by_rep),
        "auc_excluded_label_cells": r.auc_excluded,
        "constant_model_label_cells": r.constant_models,
        "cells": cells,
    })
}

fn ranks_csv(rt: &RankTable) -> String {
    let mut s = String::from("dataset");
    for m in &rt.methods {
        let _ = write!(s, ",{m}_score,{m}_rank");
    }
    s.push('\n');
    for (i, d) in rt.datasets.iter().enumerate() {
        s.push_str(&csv_field(d));
        for j in 0..rt.methods.len() {
            let _ = write!(s, ",{},{}", rt.scores[i][j], rt.ranks[i][j]);
        }
        s.push('\n');
    }
    s.push_str("average");
    for r in &rt.average_ranks {
        let _ = write!(s, ",,{r}");
    }
    s.push('\n');
    s
}

fn friedman_json(rt: &RankTable, f: &FriedmanResult, metric: &str) -> Value {
    let comparisons: Vec<Value> = f
        .comparisons
        .iter()
        .map(|c| {
            json!({
                "method": rt.methods[c.method],
                "z": c.z,
                "p_raw": c.p_raw,
                "p_finner": c.p_adjusted,
                "significant": c.significant,
            })
        })
        .collect();
    json!({
        "metric": metric,
        "datasets": rt.datasets.len(),
        "methods": rt.methods,
        "average_ranks": rt.average_ranks,
        "chi_square": f.chi_square,
        "dof": f.dof,
        "p_value": f.p_value,
        "alpha": f.alpha,
        "control": rt.methods[f.control],
        "comparisons": comparisons,
    })
}

fn cd_csv(f: &FriedmanResult) -> String {
    let mut s = String::from("method,avg_rank,group\n");
    for e in &f.cd {
        let _ = writeln!(s, "{},{},{}", e.method, e.avg_rank, e.group);
    }
    s
}

/// Cross-validated evaluation of every configured method on every dataset,
/// plus rank statistics when there are at least two of each.
pub fn experiment(cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    let methods = methods(cfg)?;
    let mut per_dataset = Vec::new();
    let mut all = Vec::new();
    for spec in &cfg.datasets {
        let ds = prepared(cfg, spec)?;
        let plan = make_fold_plan(ds.n_rows(), cfg.cv.repetitions, cfg.cv.folds, cfg.seed)?;
        let reports = run_cv(&ds, &methods, &plan)?;
        for r in &reports {
            out.csv(
                &format!("{}/{}_cells.csv", spec.name, r.method),
                &cells_csv(r),
            )?;
        }
        per_dataset.push(json!({
            "dataset": spec.name,
            "rows": ds.n_rows(),
            "labels": ds.label_names(),
            "methods": reports.iter().map(report_json).collect::<Vec<_>>(),
        }));
        all.push((spec.name.clone(), reports));
    }
    out.json(
        "summary.json",
        json!({
            "repetitions": cfg.cv.repetitions,
            "folds": cfg.cv.folds,
            "threshold": cfg.train.threshold,
            "min_max_scale": cfg.cv.min_max_scale,
            "f1_zero_division": 0.0,
            "datasets": per_dataset,
        }),
    )?;

    if methods.len() < 2 || all.len() < 2 {
        return Ok(());
    }
    let names: Vec<String> = methods.iter().map(|m| m.name.clone()).collect();
    let datasets: Vec<String> = all.iter().map(|(d, _)| d.clone()).collect();
    for (metric, pick) in [
        (
            "f1",
            (|r: &MetricReport| r.f1.mean) as fn(&MetricReport) -> f64,
        ),
        ("auc", |r: &MetricReport| r.auc.mean),
    ] {
        let scores: Vec<Vec<f64>> = all
            .iter()
            .map(|(_, rs)| rs.iter().map(pick).collect())
            .collect();
        if scores.iter().flatten().any(|v| !v.is_finite()) {
            eprintln!(
                "warning: some macro-{metric} values are undefined, no rank statistics for it"
            );
            continue;
        }
        let rt = average_ranks(datasets.clone(), names.clone(), scores, true)?;
        let f = friedman(&rt, cfg.cv.alpha)?;
        out.csv(&format!("ranks_{metric}.csv"), &ranks_csv(&rt))?;
        out.json(
            &format!("friedman_{metric}.json"),
            friedman_json(&rt, &f, metric),
        )?;
        out.csv(&format!("cd_{metric}.csv"), &cd_csv(&f))?;
    }
    Ok(())
}
