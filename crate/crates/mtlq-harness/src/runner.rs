//! End-to-end experiment execution: generate, split, normalize, train,
//! evaluate, and persist every artifact of a run.
//!
//! Layout under the output directory:
//!
//! ```text
//! config_resolved.txt
//! <network>_seed<seed>/
//!   meta.json            { "network": ..., "seed": ... }
//!   checkpoint.txt       trained parameters (versioned text format)
//!   trace.csv            per-epoch losses
//!   train/ dev/          one directory per partition:
//!     predictions.csv    o2_pred_pct_air,o2_true_pct_air,temp_pred_c,temp_true_c
//!     report.json        full evaluation report
//!     bins_o2.csv  bins_t.csv  kde_o2.csv  kde_t.csv
//!     boxplot_o2.svg kde_o2.svg ... (with --svg)
//! compare_mae.csv / compare_table.csv   (compare command)
//! sweep.csv / sweep_summary.json        (sweep command)
//! ```
//!
//! Runs are bit-deterministic: no timestamps are written, all floats carry 17
//! significant digits, and independent (network, seed) runs may execute in
//! parallel because each writes only its own directory.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use mtlq::dataset::{self, Dataset, SplitTag, TargetScaling};
use mtlq::metrics::{self, EvalReport};
use mtlq::network::{self, NetworkSpec, TargetLabel};
use mtlq::{checkpoint, optimizer};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::{build_architecture, prediction_source, Alphas, ArchitectureSelector};
use crate::config::ExperimentConfig;
use crate::svg;

/// The Table-3 loss-weight grid used by `sweep` when no grid is given.
pub const DEFAULT_SWEEP_GRID: [Alphas; 6] = [
    [0.3, 5.0, 5.0],
    [0.3, 5.0, 15.0],
    [0.3, 5.0, 25.0],
    [0.3, 1.0, 5.0],
    [0.3, 15.0, 5.0],
    [0.3, 25.0, 5.0],
];

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMeta {
    pub network: String,
    pub seed: u64,
}

/// Everything a single training run produced.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub network: String,
    pub seed: u64,
    pub dir: PathBuf,
    pub train_report: EvalReport,
    pub dev_report: EvalReport,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
}

/// Predictions of both targets in physical units for one partition.
struct Predictions {
    o2_pred: Vec<f64>,
    o2_true: Vec<f64>,
    temp_pred: Vec<f64>,
    temp_true: Vec<f64>,
}

fn predict(
    spec: &NetworkSpec,
    params: &network::NetworkParams,
    normalized: &Dataset,
    raw: &Dataset,
) -> Result<Predictions> {
    let scaling = normalized
        .normalization
        .ok_or_else(|| anyhow::anyhow!("partition is not normalized"))?;
    let features = normalized.feature_matrix();
    let outputs = network::forward(spec, params, &features.view())?;
    let (o2_branch, o2_col) =
        prediction_source(spec, TargetLabel::O2).context("no branch emits O2")?;
    let (t_branch, t_col) =
        prediction_source(spec, TargetLabel::T).context("no branch emits T")?;
    let o2_pred = outputs[o2_branch]
        .column(o2_col)
        .iter()
        .map(|&y| scaling.denormalize_o2(y))
        .collect();
    let temp_pred = outputs[t_branch]
        .column(t_col)
        .iter()
        .map(|&y| scaling.denormalize_temp(y))
        .collect();
    Ok(Predictions {
        o2_pred,
        o2_true: raw.observations.iter().map(|o| o.o2).collect(),
        temp_pred,
        temp_true: raw.observations.iter().map(|o| o.temp).collect(),
    })
}

fn write_predictions_csv(path: &Path, p: &Predictions) -> Result<()> {
    let mut w = fs::File::create(path)?;
    writeln!(w, "o2_pred_pct_air,o2_true_pct_air,temp_pred_c,temp_true_c")?;
    for i in 0..p.o2_pred.len() {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e}",
            p.o2_pred[i], p.o2_true[i], p.temp_pred[i], p.temp_true[i]
        )?;
    }
    Ok(())
}

fn read_predictions_csv(path: &Path) -> Result<Predictions> {
    let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines.next().context("empty predictions CSV")??;
    if header.trim() != "o2_pred_pct_air,o2_true_pct_air,temp_pred_c,temp_true_c" {
        bail!("unexpected predictions header '{header}'");
    }
    let mut p = Predictions {
        o2_pred: vec![],
        o2_true: vec![],
        temp_pred: vec![],
        temp_true: vec![],
    };
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()?;
        if v.len() != 4 {
            bail!("expected 4 fields per prediction row, got {}", v.len());
        }
        p.o2_pred.push(v[0]);
        p.o2_true.push(v[1]);
        p.temp_pred.push(v[2]);
        p.temp_true.push(v[3]);
    }
    Ok(p)
}

fn write_partition_artifacts(
    dir: &Path,
    report: &EvalReport,
    predictions: &Predictions,
    emit_svg: bool,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_predictions_csv(&dir.join("predictions.csv"), predictions)?;
    fs::write(dir.join("report.json"), report.to_json()?)?;
    let mut f = fs::File::create(dir.join("bins_o2.csv"))?;
    metrics::write_bins_csv(&report.o2.bins, &mut f)?;
    let mut f = fs::File::create(dir.join("bins_t.csv"))?;
    metrics::write_bins_csv(&report.temp.bins, &mut f)?;
    let mut f = fs::File::create(dir.join("kde_o2.csv"))?;
    metrics::write_kde_csv(&report.o2.kde_grid, &report.o2.kde_density, &mut f)?;
    let mut f = fs::File::create(dir.join("kde_t.csv"))?;
    metrics::write_kde_csv(&report.temp.kde_grid, &report.temp.kde_density, &mut f)?;
    if emit_svg {
        let net = &report.network;
        let tag = &report.dataset_tag;
        fs::write(
            dir.join("boxplot_o2.svg"),
            svg::boxplot_svg(
                &report.o2.bins,
                &format!("AE O2, {net} ({tag})"),
                "O2 bin (% air)",
                "AE (% air)",
            ),
        )?;
        fs::write(
            dir.join("boxplot_t.svg"),
            svg::boxplot_svg(
                &report.temp.bins,
                &format!("AE T, {net} ({tag})"),
                "true T (C)",
                "AE (C)",
            ),
        )?;
        fs::write(
            dir.join("kde_o2.svg"),
            svg::kde_svg(
                &report.o2.kde_grid,
                &report.o2.kde_density,
                &format!("KDE of AE O2, {net} ({tag})"),
            ),
        )?;
        fs::write(
            dir.join("kde_t.svg"),
            svg::kde_svg(
                &report.temp.kde_grid,
                &report.temp.kde_density,
                &format!("KDE of AE T, {net} ({tag})"),
            ),
        )?;
    }
    Ok(())
}

/// Run one (network, seed) experiment end to end and persist everything under
/// `run_dir`. The seed feeds generation, the split shuffle, and weight init.
pub fn run_single(
    cfg: &ExperimentConfig,
    selector: &ArchitectureSelector,
    seed: u64,
    run_dir: &Path,
) -> Result<RunOutcome> {
    let spec = build_architecture(selector, cfg.alphas)?;
    let label = selector.label();

    let raw = dataset::generate(&cfg.physics, cfg.m, seed, cfg.noise_sigma)?;
    let (train_raw, dev_raw) = dataset::split(&raw, cfg.train_fraction, seed)?;
    let train_norm = train_raw.normalize_targets()?;
    let dev_norm = dev_raw.normalize_targets()?;

    let init = network::build(&spec, seed)?;
    let (params, trace) = optimizer::train(&spec, init, &train_norm, Some(&dev_norm), &cfg.train)?;

    fs::create_dir_all(run_dir)?;
    fs::write(
        run_dir.join("meta.json"),
        serde_json::to_string_pretty(&RunMeta {
            network: label.clone(),
            seed,
        })?,
    )?;
    let mut f = fs::File::create(run_dir.join("checkpoint.txt"))?;
    checkpoint::save(&spec, &params, &mut f)?;
    let mut f = fs::File::create(run_dir.join("trace.csv"))?;
    trace.write_csv(&mut f)?;

    let mut reports = Vec::new();
    for (tag, norm, raw_part) in [
        (SplitTag::Train, &train_norm, &train_raw),
        (SplitTag::Dev, &dev_norm, &dev_raw),
    ] {
        let preds = predict(&spec, &params, norm, raw_part)?;
        let report = EvalReport::from_predictions(
            &label,
            &tag.to_string(),
            &preds.o2_pred,
            &preds.o2_true,
            &preds.temp_pred,
            &preds.temp_true,
        )?;
        write_partition_artifacts(&run_dir.join(tag.to_string()), &report, &preds, cfg.svg)?;
        reports.push(report);
    }
    let dev_report = reports.pop().expect("dev report");
    let train_report = reports.pop().expect("train report");

    Ok(RunOutcome {
        network: label,
        seed,
        dir: run_dir.to_path_buf(),
        train_report,
        dev_report,
        initial_train_loss: trace.epochs.first().expect("nonzero epochs").global_loss,
        final_train_loss: trace.epochs.last().expect("nonzero epochs").global_loss,
    })
}

/// Train every (network, seed) combination in parallel and write the
/// comparison tables. Outcomes come back in (network, seed) declaration order.
pub fn compare(
    cfg: &ExperimentConfig,
    selectors: &[ArchitectureSelector],
) -> Result<Vec<RunOutcome>> {
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("config_resolved.txt"), cfg.resolved_text())?;
    let jobs: Vec<(ArchitectureSelector, u64)> = selectors
        .iter()
        .flat_map(|sel| cfg.seeds.iter().map(move |&s| (sel.clone(), s)))
        .collect();
    let outcomes: Vec<RunOutcome> = jobs
        .par_iter()
        .map(|(sel, seed)| {
            let dir = cfg.out_dir.join(format!("{}_seed{}", sel.label(), seed));
            run_single(cfg, sel, *seed, &dir)
        })
        .collect::<Result<_>>()?;

    let mut f = fs::File::create(cfg.out_dir.join("compare_mae.csv"))?;
    writeln!(f, "network,seed,split,mae_o2_pct_air,mae_t_c")?;
    for o in &outcomes {
        for (split, report) in [("train", &o.train_report), ("dev", &o.dev_report)] {
            writeln!(
                f,
                "{},{},{split},{:.16e},{:.16e}",
                o.network, o.seed, report.o2.mae, report.temp.mae
            )?;
        }
    }

    // Table-2-shaped summary: per network, dev MAE averaged over seeds
    let mut f = fs::File::create(cfg.out_dir.join("compare_table.csv"))?;
    writeln!(f, "network,mae_o2_pct_air,mae_t_c")?;
    for sel in selectors {
        let label = sel.label();
        let rows: Vec<&RunOutcome> = outcomes.iter().filter(|o| o.network == label).collect();
        let n = rows.len() as f64;
        let mae_o2 = rows.iter().map(|o| o.dev_report.o2.mae).sum::<f64>() / n;
        let mae_t = rows.iter().map(|o| o.dev_report.temp.mae).sum::<f64>() / n;
        writeln!(f, "{label},{mae_o2:.16e},{mae_t:.16e}")?;
    }
    Ok(outcomes)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub mae_o2_pct_air: f64,
    pub mae_t_c: f64,
    pub initial_train_loss: f64,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepSummary {
    pub network: String,
    pub seed: u64,
    pub rows: Vec<SweepRow>,
    /// Human-readable observation about the temperature branch weight,
    /// emitted for inspection rather than asserted.
    pub qualitative_note: Option<String>,
}

/// One full training per loss-weight triple on the configured three-branch
/// network (the spec must have branches named `joint`, `o2`, and `t`).
pub fn weight_sweep(cfg: &ExperimentConfig, grid: &[Alphas]) -> Result<SweepSummary> {
    match &cfg.network {
        ArchitectureSelector::C | ArchitectureSelector::Custom(_) => {}
        other => bail!(
            "sweep needs the three-branch network c (or a custom 3-branch spec), got {other}"
        ),
    }
    // fail early if the topology lacks the three named branches
    let probe = build_architecture(&cfg.network, Some(grid.first().copied().unwrap_or(DEFAULT_SWEEP_GRID[0])))?;
    for name in ["joint", "o2", "t"] {
        if !probe.branches.iter().any(|b| b.name == name) {
            bail!("sweep requires a branch named '{name}'");
        }
    }

    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("config_resolved.txt"), cfg.resolved_text())?;
    let outcomes: Vec<(Alphas, RunOutcome)> = grid
        .par_iter()
        .map(|&alphas| {
            let mut row_cfg = cfg.clone();
            row_cfg.alphas = Some(alphas);
            let dir = cfg.out_dir.join(format!(
                "sweep_{}_{}_{}",
                alphas[0], alphas[1], alphas[2]
            ));
            run_single(&row_cfg, &cfg.network, cfg.seed, &dir).map(|o| (alphas, o))
        })
        .collect::<Result<_>>()?;

    let rows: Vec<SweepRow> = outcomes
        .iter()
        .map(|([a1, a2, a3], o)| SweepRow {
            alpha1: *a1,
            alpha2: *a2,
            alpha3: *a3,
            mae_o2_pct_air: o.dev_report.o2.mae,
            mae_t_c: o.dev_report.temp.mae,
            initial_train_loss: o.initial_train_loss,
            final_train_loss: o.final_train_loss,
        })
        .collect();

    let mut f = fs::File::create(cfg.out_dir.join("sweep.csv"))?;
    writeln!(f, "alpha1,alpha2,alpha3,mae_o2_pct_air,mae_t_c")?;
    for r in &rows {
        writeln!(
            f,
            "{},{},{},{:.16e},{:.16e}",
            r.alpha1, r.alpha2, r.alpha3, r.mae_o2_pct_air, r.mae_t_c
        )?;
    }

    // how the temperature error responds to its branch weight at alpha2 = 5
    let t_rows: Vec<&SweepRow> = rows
        .iter()
        .filter(|r| r.alpha1 == 0.3 && r.alpha2 == 5.0)
        .collect();
    let qualitative_note = if t_rows.len() >= 2 {
        let maes: Vec<String> = t_rows
            .iter()
            .map(|r| format!("alpha3={}: MAE_T={:.3} C", r.alpha3, r.mae_t_c))
            .collect();
        let lo = t_rows.iter().map(|r| r.mae_t_c).fold(f64::INFINITY, f64::min);
        let hi = t_rows
            .iter()
            .map(|r| r.mae_t_c)
            .fold(f64::NEG_INFINITY, f64::max);
        Some(format!(
            "temperature accuracy vs its branch weight ({}); spread {:.3} C across the tested alpha3 values",
            maes.join(", "),
            hi - lo
        ))
    } else {
        None
    };

    let summary = SweepSummary {
        network: cfg.network.label(),
        seed: cfg.seed,
        rows,
        qualitative_note,
    };
    fs::write(
        cfg.out_dir.join("sweep_summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

/// Rebuild every report and companion CSV of a run directory from its stored
/// prediction files.
pub fn recompute_reports(run_dir: &Path, emit_svg: bool) -> Result<Vec<EvalReport>> {
    let meta: RunMeta = serde_json::from_str(
        &fs::read_to_string(run_dir.join("meta.json"))
            .with_context(|| format!("{} is not a run directory", run_dir.display()))?,
    )?;
    let mut reports = Vec::new();
    for tag in ["train", "dev"] {
        let dir = run_dir.join(tag);
        if !dir.is_dir() {
            continue;
        }
        let preds = read_predictions_csv(&dir.join("predictions.csv"))?;
        let report = EvalReport::from_predictions(
            &meta.network,
            tag,
            &preds.o2_pred,
            &preds.o2_true,
            &preds.temp_pred,
            &preds.temp_true,
        )?;
        write_partition_artifacts(&dir, &report, &preds, emit_svg)?;
        reports.push(report);
    }
    if reports.is_empty() {
        bail!("no train/ or dev/ partition found under {}", run_dir.display());
    }
    Ok(reports)
}

/// Denormalization used by the reports; exposed for tests.
pub fn scaling() -> TargetScaling {
    TargetScaling::default()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_cfg(out: &Path) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::default();
        cfg.m = 120;
        cfg.seeds = vec![1];
        cfg.train.epochs = 5;
        cfg.out_dir = out.to_path_buf();
        cfg
    }

    #[test]
    fn smoke_run_emits_well_formed_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let run_dir = dir.path().join("a10_seed1");
        let outcome =
            run_single(&cfg, &ArchitectureSelector::A(10), 1, &run_dir).unwrap();
        assert_eq!(outcome.network, "a10");
        for tag in ["train", "dev"] {
            for file in [
                "predictions.csv",
                "report.json",
                "bins_o2.csv",
                "bins_t.csv",
                "kde_o2.csv",
                "kde_t.csv",
            ] {
                assert!(run_dir.join(tag).join(file).is_file(), "{tag}/{file}");
            }
        }
        assert!(run_dir.join("checkpoint.txt").is_file());
        assert!(run_dir.join("trace.csv").is_file());
        let report = EvalReport::from_json(
            &fs::read_to_string(run_dir.join("dev").join("report.json")).unwrap(),
        )
        .unwrap();
        assert_eq!(report.network, "a10");
        assert_eq!(report.dataset_tag, "dev");
        assert_eq!(report.o2.ae.len(), 24); // 20% of 120
    }

    #[test]
    fn identical_runs_are_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let d1 = dir.path().join("r1");
        let d2 = dir.path().join("r2");
        run_single(&cfg, &ArchitectureSelector::A(10), 7, &d1).unwrap();
        run_single(&cfg, &ArchitectureSelector::A(10), 7, &d2).unwrap();
        for rel in [
            "checkpoint.txt",
            "trace.csv",
            "train/predictions.csv",
            "dev/predictions.csv",
            "dev/report.json",
        ] {
            let a = fs::read(d1.join(rel)).unwrap();
            let b = fs::read(d2.join(rel)).unwrap();
            assert_eq!(a, b, "{rel} differs between identical runs");
        }
    }

    #[test]
    fn recomputed_reports_match_run_reports() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let run_dir = dir.path().join("a10_seed3");
        let outcome = run_single(&cfg, &ArchitectureSelector::A(10), 3, &run_dir).unwrap();
        let recomputed = recompute_reports(&run_dir, false).unwrap();
        assert_eq!(recomputed.len(), 2);
        assert_eq!(recomputed[0], outcome.train_report);
        assert_eq!(recomputed[1], outcome.dev_report);
    }

    #[test]
    fn report_mae_equals_recomputed_mae_from_persisted_ae() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_cfg(dir.path());
        let run_dir = dir.path().join("c_seed1");
        let outcome = run_single(&cfg, &ArchitectureSelector::C, 1, &run_dir).unwrap();
        let report = EvalReport::from_json(
            &fs::read_to_string(run_dir.join("dev").join("report.json")).unwrap(),
        )
        .unwrap();
        let mae = metrics::mean_absolute_error(&report.o2.ae).unwrap();
        assert!((mae - outcome.dev_report.o2.mae).abs() < 1e-12);
    }

    #[test]
    fn sweep_rejects_two_branch_networks() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_cfg(dir.path());
        cfg.network = ArchitectureSelector::B;
        assert!(weight_sweep(&cfg, &[[0.3, 5.0, 5.0]]).is_err());
    }
}
