//! Batch evaluation: pair ground-truth and prediction files, score scans on
//! a bounded worker pool, aggregate into the leaderboard metrics.

use std::path::{Path, PathBuf};

use dentalscan_core::annotation::parse_annotation;
use dentalscan_core::metrics::{aggregate_with, evaluate_scan, EvalConfig, EvalReport};
use dentalscan_core::obj::parse_obj;
use dentalscan_core::{Diagnostic, Diagnostics, Severity};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{EffectiveConfig, RunConfig};
use crate::io::{emit_json, read_bytes, write_bytes, CliError, CliResult};

#[derive(Debug, Clone)]
struct ScanPair {
    stem: String,
    gt_mesh: PathBuf,
    gt_ann: PathBuf,
    pred_ann: Option<PathBuf>,
}

/// Ground truth scans are `{stem}.obj` + `{stem}.json` in `gt_dir`;
/// predictions are `{stem}.json` in `pred_dir`. A missing prediction file is
/// a missing output, not an error.
fn pair_by_stem(gt_dir: &Path, pred_dir: &Path) -> CliResult<Vec<ScanPair>> {
    let mut stems = Vec::new();
    let entries = std::fs::read_dir(gt_dir)
        .map_err(|e| CliError::domain("IO_READ", format!("{}: {e}", gt_dir.display())))?;
    for entry in entries {
        let path = entry
            .map_err(|e| CliError::domain("IO_READ", e.to_string()))?
            .path();
        if path.extension().is_some_and(|e| e == "obj") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    Ok(stems
        .into_iter()
        .map(|stem| {
            let pred = pred_dir.join(format!("{stem}.json"));
            ScanPair {
                gt_mesh: gt_dir.join(format!("{stem}.obj")),
                gt_ann: gt_dir.join(format!("{stem}.json")),
                pred_ann: pred.exists().then_some(pred),
                stem,
            }
        })
        .collect())
}

/// Manifest CSV rows: `stem,gt_mesh,gt_annotation,prediction` with paths
/// relative to the manifest location ("-" for a missing prediction). A
/// header row is skipped when present.
fn pair_by_manifest(manifest: &Path) -> CliResult<Vec<ScanPair>> {
    let text = String::from_utf8(read_bytes(manifest)?)
        .map_err(|_| CliError::domain("MANIFEST_PARSE", "manifest is not UTF-8"))?;
    let base = manifest.parent().unwrap_or(Path::new(""));
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || (lineno == 0 && line.starts_with("stem,")) {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 4 {
            return Err(CliError::domain(
                "MANIFEST_PARSE",
                format!("line {}: expected 4 comma-separated fields", lineno + 1),
            ));
        }
        pairs.push(ScanPair {
            stem: fields[0].to_string(),
            gt_mesh: base.join(fields[1]),
            gt_ann: base.join(fields[2]),
            pred_ann: (fields[3] != "-").then(|| base.join(fields[3])),
        });
    }
    pairs.sort_by(|a, b| a.stem.cmp(&b.stem));
    Ok(pairs)
}

#[derive(Serialize)]
struct EvaluateOutput {
    config: EffectiveConfig,
    scans: Vec<String>,
    report: EvalReport,
    diagnostics: Diagnostics,
}

#[allow(clippy::too_many_arguments)]
pub fn cmd_evaluate(
    gt_dir: &Path,
    pred_dir: &Path,
    manifest: Option<&Path>,
    report_path: Option<&Path>,
    csv_path: Option<&Path>,
    cfg: &RunConfig,
) -> CliResult<()> {
    let pairs = match manifest {
        Some(m) => pair_by_manifest(m)?,
        None => pair_by_stem(gt_dir, pred_dir)?,
    };
    if pairs.is_empty() {
        return Err(CliError::domain(
            "EMPTY_EVALUATION",
            format!("no ground-truth scans found in {}", gt_dir.display()),
        ));
    }
    let effective = cfg.effective();
    let eval_config = EvalConfig {
        size_definition: effective.size_definition,
        tsa_averaging: effective.tsa_averaging,
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(effective.workers)
        .build()
        .map_err(|e| CliError::domain("WORKER_POOL", e.to_string()))?;
    // Results are collected in pair order, so the report does not depend on
    // the pool size or scheduling.
    let scored: Vec<CliResult<_>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|pair| {
                let gt_mesh = parse_obj(&std::fs::read(&pair.gt_mesh).map_err(|e| {
                    CliError::domain("IO_READ", format!("{}: {e}", pair.gt_mesh.display()))
                })?)
                .map_err(|e| {
                    CliError::domain("OBJ_PARSE", format!("{}: {e}", pair.gt_mesh.display()))
                })?;
                let gt_ann =
                    parse_annotation(&std::fs::read(&pair.gt_ann).map_err(|e| {
                        CliError::domain("IO_READ", format!("{}: {e}", pair.gt_ann.display()))
                    })?, gt_mesh.vertex_count())
                    .map_err(|e| {
                        CliError::domain(
                            "ANNOTATION_PARSE",
                            format!("{}: {e}", pair.gt_ann.display()),
                        )
                    })?;
                // Unreadable or unparsable predictions take the penalty path
                // with a diagnostic instead of failing the run.
                let mut scan_diags = Diagnostics::new();
                let pred = pair.pred_ann.as_ref().and_then(|p| {
                    match std::fs::read(p)
                        .map_err(|e| e.to_string())
                        .and_then(|b| {
                            parse_annotation(&b, gt_mesh.vertex_count())
                                .map_err(|e| e.to_string())
                        }) {
                        Ok(a) => Some(a),
                        Err(e) => {
                            scan_diags.push(Diagnostic::new(
                                Severity::Warning,
                                "PRED_UNREADABLE",
                                format!("{}: {e}; scored as missing output", p.display()),
                            ));
                            None
                        }
                    }
                });
                if pair.pred_ann.is_none() {
                    scan_diags.push(Diagnostic::new(
                        Severity::Warning,
                        "PRED_MISSING",
                        format!("{}: no prediction file; scored as missing output", pair.stem),
                    ));
                }
                let (partial, diags) =
                    evaluate_scan(&gt_mesh, &gt_ann, pred.as_ref(), eval_config);
                scan_diags.extend(diags);
                Ok((partial, scan_diags))
            })
            .collect()
    });

    let mut partials = Vec::with_capacity(pairs.len());
    let mut diagnostics = Diagnostics::new();
    for result in scored {
        let (partial, diags) = result?;
        partials.push(partial);
        diagnostics.extend(diags);
    }
    let report = aggregate_with(partials, eval_config.tsa_averaging)
        .map_err(|e| CliError::domain("AGGREGATE", e.to_string()))?;

    if let Some(csv) = csv_path {
        write_bytes(csv, leaderboard_csv(&effective.team, &report).as_bytes())?;
    }
    emit_json(
        &EvaluateOutput {
            config: effective,
            scans: pairs.iter().map(|p| p.stem.clone()).collect(),
            report,
            diagnostics: diagnostics.finish(),
        },
        report_path,
    )
}

/// Leaderboard presentation: 4-decimal rounding, matching the published
/// tables.
pub fn leaderboard_csv(team: &str, report: &EvalReport) -> String {
    format!(
        "team,expTLA,TSA,TIR,score\n{team},{:.4},{:.4},{:.4},{:.4}\n",
        report.exp_neg_tla, report.tsa, report.tir, report.score
    )
}
