//! Report artifacts: JSON summary, CSV tables, per-fold model bundles and an
//! SVG bar chart of accuracy by family.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::{Comparison, EvalConfig, EvalReport, FamilyOutcome, RankRow, SplitPlan};
use crate::contour_io::{format_g17, ShapeClass};
use crate::error::{Error, Result};

#[derive(Serialize)]
struct ReportFile<'a> {
    seed: u64,
    n_trials: usize,
    retrain_on_train_val: bool,
    split_hashes: Vec<String>,
    ranking: &'a [RankRow],
    families: Vec<&'a EvalReport>,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Schema(format!("{other:?}")),
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(&r).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, s: &str) -> Result<()> {
    fs::write(path, s).map_err(|e| Error::io(path, e))
}

pub fn write_trials_csv(path: &Path, outcomes: &[FamilyOutcome]) -> Result<()> {
    let header = [
        "family",
        "fold",
        "trial",
        "n_rounds",
        "learning_rate",
        "max_depth",
        "min_child_weight",
        "reg_lambda",
        "gamma",
        "subsample",
        "colsample",
        "seed",
        "val_accuracy",
        "selected",
        "error",
    ];
    let mut rows = Vec::new();
    for o in outcomes {
        for f in &o.folds {
            for t in &f.search.trials {
                let p = &t.params;
                rows.push(vec![
                    o.report.family.clone(),
                    f.fold.to_string(),
                    t.index.to_string(),
                    p.n_rounds.to_string(),
                    format_g17(p.learning_rate),
                    p.max_depth.to_string(),
                    format_g17(p.min_child_weight),
                    format_g17(p.reg_lambda),
                    format_g17(p.gamma),
                    format_g17(p.subsample),
                    format_g17(p.colsample),
                    p.seed.to_string(),
                    t.val_accuracy.map(format_g17).unwrap_or_default(),
                    (t.index == f.search.best_index).to_string(),
                    t.error.clone().unwrap_or_default(),
                ]);
            }
        }
    }
    write_csv(path, &header, rows)
}

/// Static horizontal bar chart of mean accuracy (± std) per family.
pub fn render_svg(ranking: &[RankRow]) -> String {
    let (label_w, bar_w, row_h, top) = (160.0, 400.0, 24.0, 40.0);
    let width = label_w + bar_w + 120.0;
    let height = top + row_h * ranking.len() as f64 + 20.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{label_w}" y="20" font-size="14">Test accuracy by feature family</text>"#
    );
    for (i, r) in ranking.iter().enumerate() {
        let y = top + row_h * i as f64;
        let w = bar_w * r.mean_acc.clamp(0.0, 1.0);
        let err = bar_w * r.std_acc;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            label_w - 6.0,
            y + 16.0,
            r.family
        );
        let _ = writeln!(
            s,
            "<rect x=\"{label_w}\" y=\"{}\" width=\"{w:.2}\" height=\"{}\" fill=\"#4c78a8\"/>",
            y + 4.0,
            row_h - 8.0
        );
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" x2="{:.2}" y1="{}" y2="{}" stroke="black"/>"#,
            label_w + (w - err).max(0.0),
            label_w + w + err,
            y + 12.0,
            y + 12.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}">{:.3}</text>"#,
            label_w + w + err + 6.0,
            y + 16.0,
            r.mean_acc
        );
    }
    s.push_str("</svg>\n");
    s
}

fn split_hashes(plan: &SplitPlan) -> Vec<String> {
    plan.folds.iter().map(|f| format!("{:016x}", f.hash())).collect()
}

/// Writes `report.json`, `confusion.csv`, `importance.csv`, `trials.csv`,
/// `accuracy_by_family.csv`, `accuracy_by_family.svg` and
/// `models/<family>_fold<k>.json` into `dir`.
pub fn write_outputs(dir: &Path, cmp: &Comparison, cfg: &EvalConfig) -> Result<()> {
    let models = dir.join("models");
    fs::create_dir_all(&models).map_err(|e| Error::io(&models, e))?;

    let file = ReportFile {
        seed: cfg.seed,
        n_trials: cfg.n_trials,
        retrain_on_train_val: cfg.retrain_on_train_val,
        split_hashes: split_hashes(&cmp.plan),
        ranking: &cmp.ranking,
        families: cmp.outcomes.iter().map(|o| &o.report).collect(),
    };
    let json = serde_json::to_string_pretty(&file).expect("report serializes");
    write_text(&dir.join("report.json"), &(json + "\n"))?;

    let mut header = vec!["family".to_string(), "true_class".to_string()];
    header.extend((0..ShapeClass::COUNT).map(|k| format!("pred_{k}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = cmp.outcomes.iter().flat_map(|o| {
        o.report.confusion.iter().enumerate().map(|(t, row)| {
            let mut r = vec![o.report.family.clone(), t.to_string()];
            r.extend(row.iter().map(u64::to_string));
            r
        })
    });
    write_csv(&dir.join("confusion.csv"), &header, rows)?;

    let rows = cmp.outcomes.iter().flat_map(|o| {
        o.report.top_importance.iter().enumerate().map(|(i, e)| {
            vec![
                o.report.family.clone(),
                (i + 1).to_string(),
                e.feature.clone(),
                format_g17(e.gain),
            ]
        })
    });
    write_csv(
        &dir.join("importance.csv"),
        &["family", "rank", "feature", "gain"],
        rows,
    )?;

    let rows = cmp.ranking.iter().map(|r| {
        vec![
            r.family.clone(),
            format_g17(r.mean_acc),
            format_g17(r.std_acc),
            r.n_features.to_string(),
        ]
    });
    write_csv(
        &dir.join("accuracy_by_family.csv"),
        &["family", "mean_acc", "std_acc", "n_features"],
        rows,
    )?;
    write_text(&dir.join("accuracy_by_family.svg"), &render_svg(&cmp.ranking))?;
    write_trials_csv(&dir.join("trials.csv"), &cmp.outcomes)?;

    for o in &cmp.outcomes {
        for f in &o.folds {
            f.model
                .save(models.join(format!("{}_fold{}.json", o.report.family, f.fold)))?;
        }
    }
    Ok(())
}
