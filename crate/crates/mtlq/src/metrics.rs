//! Absolute-error statistics in physical units: per-observation AE, dataset
//! MAE, binned five-number summaries for boxplots, and Gaussian kernel density
//! estimates of the AE distribution with Scott's bandwidth.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::error::{Error, Result};
use crate::physics::TEMP_LEVELS;

/// Per-observation absolute errors `|pred - meas|`. Inputs must already be in
/// physical units (denormalize predictions first).
pub fn absolute_errors(pred: &[f64], meas: &[f64]) -> Result<Vec<f64>> {
    if pred.len() != meas.len() {
        return Err(Error::Shape(format!(
            "{} predictions for {} measurements",
            pred.len(),
            meas.len()
        )));
    }
    Ok(pred
        .iter()
        .zip(meas.iter())
        .map(|(p, m)| (p - m).abs())
        .collect())
}

/// Arithmetic mean of an absolute-error list.
pub fn mean_absolute_error(ae: &[f64]) -> Result<f64> {
    if ae.is_empty() {
        return Err(Error::Degenerate(
            "cannot average an empty error list".into(),
        ));
    }
    Ok(ae.iter().sum::<f64>() / ae.len() as f64)
}

/// Linear interpolation between order statistics (the common "type 7" rule):
/// quantile p sits at rank `(n-1)*p` of the sorted sample.
fn quantile_type7(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Five-number summary with whiskers at the sample extremes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiveNumber {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Statistics of one bin; `summary` is absent when the bin is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub label: String,
    pub count: usize,
    pub summary: Option<FiveNumber>,
}

/// Group errors by precomputed bin indices and summarize each bin.
pub fn binned_boxplot(ae: &[f64], bin_index: &[usize], labels: &[String]) -> Result<Vec<BinStats>> {
    if ae.len() != bin_index.len() {
        return Err(Error::Shape(format!(
            "{} errors for {} bin keys",
            ae.len(),
            bin_index.len()
        )));
    }
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); labels.len()];
    for (&e, &b) in ae.iter().zip(bin_index.iter()) {
        let bucket = groups.get_mut(b).ok_or_else(|| {
            Error::Domain(format!("bin index {b} out of range for {} bins", labels.len()))
        })?;
        bucket.push(e);
    }
    Ok(groups
        .into_iter()
        .zip(labels.iter())
        .map(|(mut values, label)| {
            let count = values.len();
            let summary = if count == 0 {
                None
            } else {
                values.sort_by(|a, b| a.partial_cmp(b).expect("finite errors"));
                Some(FiveNumber {
                    min: values[0],
                    q1: quantile_type7(&values, 0.25),
                    median: quantile_type7(&values, 0.5),
                    q3: quantile_type7(&values, 0.75),
                    max: values[count - 1],
                })
            };
            BinStats {
                label: label.clone(),
                count,
                summary,
            }
        })
        .collect())
}

/// Oxygen bins of 10 % air: half-open `[a, a+10)` with the final bin closed,
/// so `o2 = 100` lands in `[90, 100]`.
pub fn o2_binning(o2_keys: &[f64]) -> (Vec<usize>, Vec<String>) {
    let labels = (0..10)
        .map(|i| {
            if i == 9 {
                "[90,100]".to_string()
            } else {
                format!("[{},{})", i * 10, (i + 1) * 10)
            }
        })
        .collect();
    let index = o2_keys
        .iter()
        .map(|&o2| ((o2 / 10.0).floor() as usize).min(9))
        .collect();
    (index, labels)
}

/// One bin per discrete temperature level, keyed by the true temperature.
pub fn temp_binning(temp_keys: &[f64]) -> Result<(Vec<usize>, Vec<String>)> {
    let labels = TEMP_LEVELS.iter().map(|t| format!("{t}")).collect();
    let index = temp_keys
        .iter()
        .map(|&t| {
            TEMP_LEVELS
                .iter()
                .position(|&level| (t - level).abs() < 1e-9)
                .ok_or_else(|| {
                    Error::Domain(format!("temperature {t} is not one of the five levels"))
                })
        })
        .collect::<Result<Vec<usize>>>()?;
    Ok((index, labels))
}

/// Scott's bandwidth `h = sigma_hat * n^(-1/5)` with `sigma_hat` the sample
/// standard deviation (n-1 denominator). Errors on fewer than two samples or
/// a zero-variance sample, where the bandwidth collapses.
pub fn scott_bandwidth(ae: &[f64]) -> Result<f64> {
    let n = ae.len();
    if n < 2 {
        return Err(Error::Degenerate(format!(
            "kernel density estimate needs at least 2 samples, got {n}"
        )));
    }
    let mean = ae.iter().sum::<f64>() / n as f64;
    let var = ae.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if sd == 0.0 {
        return Err(Error::Degenerate(
            "zero-variance sample: bandwidth collapses".into(),
        ));
    }
    Ok(sd * (n as f64).powf(-0.2))
}

/// Gaussian kernel density estimate evaluated on a caller-supplied grid:
/// `density(x) = (1/(n h)) * sum_j phi((x - ae_j)/h)` with Scott's `h`.
pub fn kde(ae: &[f64], grid: &[f64]) -> Result<Vec<f64>> {
    let h = scott_bandwidth(ae)?;
    let n = ae.len() as f64;
    let norm = 1.0 / (n * h * (2.0 * std::f64::consts::PI).sqrt());
    Ok(grid
        .iter()
        .map(|&x| {
            norm * ae
                .iter()
                .map(|&a| {
                    let z = (x - a) / h;
                    (-0.5 * z * z).exp()
                })
                .sum::<f64>()
        })
        .collect())
}

/// Uniform evaluation grid covering the sample's full kernel mass:
/// `points` values spanning `[min - 5h, max + 5h]`.
pub fn kde_grid(ae: &[f64], points: usize) -> Result<Vec<f64>> {
    let h = scott_bandwidth(ae)?;
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in ae {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    let (a, b) = (lo - 5.0 * h, hi + 5.0 * h);
    Ok((0..points)
        .map(|i| a + (b - a) * i as f64 / (points - 1) as f64)
        .collect())
}

/// Trapezoidal integral of tabulated values over a (not necessarily uniform)
/// grid.
pub fn trapezoid(grid: &[f64], values: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (y[0] + y[1]) * (x[1] - x[0]))
        .sum()
}

/// Number of points in emitted KDE curves.
pub const KDE_CURVE_POINTS: usize = 512;

/// Everything reported about one target's errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetMetrics {
    /// Per-observation absolute errors, physical units.
    pub ae: Vec<f64>,
    pub mae: f64,
    pub bins: Vec<BinStats>,
    pub kde_bandwidth: f64,
    pub kde_grid: Vec<f64>,
    pub kde_density: Vec<f64>,
}

impl TargetMetrics {
    fn new(ae: Vec<f64>, bins: Vec<BinStats>) -> Result<TargetMetrics> {
        let mae = mean_absolute_error(&ae)?;
        let kde_bandwidth = scott_bandwidth(&ae)?;
        let grid = kde_grid(&ae, KDE_CURVE_POINTS)?;
        let density = kde(&ae, &grid)?;
        Ok(TargetMetrics {
            ae,
            mae,
            bins,
            kde_bandwidth,
            kde_grid: grid,
            kde_density: density,
        })
    }
}

/// Evaluation of one network on one dataset partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub network: String,
    pub dataset_tag: String,
    pub o2: TargetMetrics,
    pub temp: TargetMetrics,
}

impl EvalReport {
    /// Build the full report from predictions and ground truth in physical
    /// units. Oxygen errors are binned by true concentration (10 % air bins),
    /// temperature errors by true level.
    pub fn from_predictions(
        network: &str,
        dataset_tag: &str,
        pred_o2: &[f64],
        true_o2: &[f64],
        pred_temp: &[f64],
        true_temp: &[f64],
    ) -> Result<EvalReport> {
        let ae_o2 = absolute_errors(pred_o2, true_o2)?;
        let (o2_idx, o2_labels) = o2_binning(true_o2);
        let o2_bins = binned_boxplot(&ae_o2, &o2_idx, &o2_labels)?;

        let ae_t = absolute_errors(pred_temp, true_temp)?;
        let (t_idx, t_labels) = temp_binning(true_temp)?;
        let t_bins = binned_boxplot(&ae_t, &t_idx, &t_labels)?;

        Ok(EvalReport {
            network: network.to_string(),
            dataset_tag: dataset_tag.to_string(),
            o2: TargetMetrics::new(ae_o2, o2_bins)?,
            temp: TargetMetrics::new(ae_t, t_bins)?,
        })
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self)
            .map_err(|e| Error::Parse(format!("report serialization failed: {e}")))
    }

    pub fn from_json(text: &str) -> Result<EvalReport> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("report parse failed: {e}")))
    }
}

/// CSV of binned boxplot statistics: `bin,count,min,q1,median,q3,max`, with
/// empty statistic fields for empty bins.
pub fn write_bins_csv<W: Write>(bins: &[BinStats], mut w: W) -> Result<()> {
    writeln!(w, "bin,count,min,q1,median,q3,max")?;
    for b in bins {
        match &b.summary {
            Some(s) => writeln!(
                w,
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                b.label, b.count, s.min, s.q1, s.median, s.q3, s.max
            )?,
            None => writeln!(w, "{},0,,,,,", b.label)?,
        }
    }
    Ok(())
}

/// CSV of a KDE curve: `x,density`.
pub fn write_kde_csv<W: Write>(grid: &[f64], density: &[f64], mut w: W) -> Result<()> {
    writeln!(w, "x,density")?;
    for (x, d) in grid.iter().zip(density.iter()) {
        writeln!(w, "{x:.16e},{d:.16e}")?;
    }
    Ok(())
}
