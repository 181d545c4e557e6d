use std::fs;
use std::path::{Path, PathBuf};

use log::info;

use crate::combine::Method;
use crate::error::{Error, Result};
use crate::experiment::run::{CellStatus, ExperimentRun, ResultTable};

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn file_label(m: Method) -> &'static str {
    match m {
        Method::Ar => "AR",
        Method::ArNewton => "AR-NR",
        Method::Cmc => "CMC",
    }
}

/// Writes the table as CSV with columns `k, method, status, total_l2,
/// total_l2_raw, l2_<name>.., l2_raw_<name>.., mean_<name>.., wall_seconds,
/// acceptance_mean, acceptance_min, warnings, error`.
pub fn write_table_csv(table: &ResultTable, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = ["k", "method", "status", "total_l2", "total_l2_raw"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for prefix in ["l2_", "l2_raw_", "mean_"] {
        header.extend(table.names.iter().map(|n| format!("{prefix}{n}")));
    }
    header.extend(
        ["wall_seconds", "acceptance_mean", "acceptance_min", "warnings", "error"]
            .iter()
            .map(|s| s.to_string()),
    );
    w.write_record(&header)?;
    let d = table.names.len();
    for r in &table.rows {
        let mut rec = vec![
            r.k.to_string(),
            r.method.label().to_string(),
            match r.status {
                CellStatus::Ok => "ok".into(),
                CellStatus::Failed => "FAILED".into(),
            },
            fmt_opt(r.total_l2),
            fmt_opt(r.total_l2_raw),
        ];
        for values in [&r.per_marginal, &r.per_marginal_raw, &r.mean] {
            rec.extend((0..d).map(|j| fmt_opt(values.get(j).copied())));
        }
        rec.push(format!("{:.3}", r.wall_seconds));
        rec.push(fmt_opt(r.acceptance_mean));
        rec.push(fmt_opt(r.acceptance_min));
        rec.push(r.warnings.join("; "));
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes one `grid,value` CSV per (parameter, method, K) for the combined
/// sample and one for the reference density on the same grid. Returns the
/// files written; none when the run holds no densities.
pub fn emit_density_grids(run: &ExperimentRun, outdir: &Path) -> Result<Vec<PathBuf>> {
    let names = &run.table.names;
    let mut written = Vec::new();
    for art in &run.artifacts {
        for (method, comparisons) in &art.densities {
            for (name, cmp) in names.iter().zip(comparisons) {
                let tag = file_label(*method);
                let combined = outdir.join(format!("density_{name}_{tag}_K{}.csv", art.k));
                cmp.left_density(format!("{name} {tag} K={}", art.k)).write_csv(&combined)?;
                let full = outdir.join(format!("density_{name}_full_for_{tag}_K{}.csv", art.k));
                cmp.right_density(format!("{name} full")).write_csv(&full)?;
                written.push(combined);
                written.push(full);
            }
        }
    }
    if written.is_empty() {
        info!("no density grids to write");
    }
    Ok(written)
}

/// Writes `results.csv`, `results.json`, `metadata.json` and, if enabled,
/// the density grids under `outdir`.
pub fn write_outputs(run: &ExperimentRun, outdir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let csv_path = outdir.join("results.csv");
    let json_path = outdir.join("results.json");
    let meta_path = outdir.join("metadata.json");
    write_table_csv(&run.table, &csv_path)?;
    write_json(&run.table, &json_path)?;
    write_json(&run.metadata, &meta_path)?;
    let mut files = vec![csv_path, json_path, meta_path];
    if run.metadata.config.emit_densities {
        files.extend(emit_density_grids(run, outdir)?);
    }
    Ok(files)
}
