//! Minimal SVG renderings of boxplots and KDE curves, enough to eyeball a run
//! without external plotting tools.

use mtlq::metrics::BinStats;

const W: f64 = 640.0;
const H: f64 = 400.0;
const MARGIN_L: f64 = 60.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

fn header(title: &str) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" \
         viewBox=\"0 0 {W} {H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"{W}\" height=\"{H}\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        W / 2.0
    )
}

fn axes(y_max: f64, x_label: &str, y_label: &str) -> String {
    let x0 = MARGIN_L;
    let x1 = W - MARGIN_R;
    let y0 = H - MARGIN_B;
    let y1 = MARGIN_T;
    let mut s = format!(
        "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x1}\" y2=\"{y0}\" stroke=\"black\"/>\n\
         <line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\">{x_label}</text>\n\
         <text x=\"14\" y=\"{}\" text-anchor=\"middle\" transform=\"rotate(-90 14 {})\">{y_label}</text>\n",
        (x0 + x1) / 2.0,
        H - 14.0,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
    );
    // four horizontal gridlines with tick labels
    for i in 0..=4 {
        let v = y_max * i as f64 / 4.0;
        let y = y0 - (y0 - y1) * i as f64 / 4.0;
        s.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y}\" x2=\"{x1}\" y2=\"{y}\" stroke=\"#ddd\"/>\n\
             <text x=\"{}\" y=\"{}\" text-anchor=\"end\">{v:.2}</text>\n",
            x0 - 6.0,
            y + 4.0
        ));
    }
    s
}

/// Boxplot per bin: IQR box, median line, whiskers at the extremes.
pub fn boxplot_svg(bins: &[BinStats], title: &str, x_label: &str, y_label: &str) -> String {
    let y_max = bins
        .iter()
        .filter_map(|b| b.summary.as_ref().map(|s| s.max))
        .fold(0.0f64, f64::max)
        .max(1e-12);
    let mut svg = header(title);
    svg.push_str(&axes(y_max, x_label, y_label));
    let plot_w = W - MARGIN_L - MARGIN_R;
    let plot_h = H - MARGIN_T - MARGIN_B;
    let slot = plot_w / bins.len() as f64;
    let to_y = |v: f64| H - MARGIN_B - (v / y_max) * plot_h;
    for (i, bin) in bins.iter().enumerate() {
        let cx = MARGIN_L + slot * (i as f64 + 0.5);
        svg.push_str(&format!(
            "<text x=\"{cx}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
            H - MARGIN_B + 16.0,
            bin.label
        ));
        let Some(s) = &bin.summary else { continue };
        let bw = slot * 0.5;
        let (bx, q1y, q3y) = (cx - bw / 2.0, to_y(s.q1), to_y(s.q3));
        svg.push_str(&format!(
            "<line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{q3y}\" stroke=\"black\"/>\n\
             <line x1=\"{cx}\" y1=\"{q1y}\" x2=\"{cx}\" y2=\"{}\" stroke=\"black\"/>\n\
             <rect x=\"{bx}\" y=\"{q3y}\" width=\"{bw}\" height=\"{}\" fill=\"#cfe2f3\" stroke=\"black\"/>\n\
             <line x1=\"{bx}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"red\" stroke-width=\"1.5\"/>\n",
            to_y(s.max),
            to_y(s.min),
            (q1y - q3y).max(0.5),
            to_y(s.median),
            bx + bw,
            to_y(s.median),
        ));
    }
    svg.push_str("</svg>\n");
    svg
}

/// Density curve as a polyline.
pub fn kde_svg(grid: &[f64], density: &[f64], title: &str) -> String {
    let y_max = density.iter().copied().fold(0.0f64, f64::max).max(1e-12);
    let (x_min, x_max) = (grid.first().copied().unwrap_or(0.0), grid.last().copied().unwrap_or(1.0));
    let span = (x_max - x_min).max(1e-12);
    let mut svg = header(title);
    svg.push_str(&axes(y_max, "AE", "density"));
    let plot_w = W - MARGIN_L - MARGIN_R;
    let plot_h = H - MARGIN_T - MARGIN_B;
    let points: Vec<String> = grid
        .iter()
        .zip(density.iter())
        .map(|(&x, &d)| {
            let px = MARGIN_L + (x - x_min) / span * plot_w;
            let py = H - MARGIN_B - (d / y_max) * plot_h;
            format!("{px:.1},{py:.1}")
        })
        .collect();
    svg.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\"/>\n",
        points.join(" ")
    ));
    // x-axis end labels
    svg.push_str(&format!(
        "<text x=\"{MARGIN_L}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{x_min:.2}</text>\n\
         <text x=\"{}\" y=\"{}\" text-anchor=\"middle\" font-size=\"10\">{x_max:.2}</text>\n",
        H - MARGIN_B + 16.0,
        W - MARGIN_R,
        H - MARGIN_B + 16.0
    ));
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use mtlq::metrics::FiveNumber;

    #[test]
    fn emits_wellformed_svg() {
        let bins = vec![
            BinStats {
                label: "[0,10)".into(),
                count: 3,
                summary: Some(FiveNumber {
                    min: 0.1,
                    q1: 0.2,
                    median: 0.3,
                    q3: 0.5,
                    max: 0.9,
                }),
            },
            BinStats {
                label: "[10,20)".into(),
                count: 0,
                summary: None,
            },
        ];
        let s = boxplot_svg(&bins, "test", "bin", "AE");
        assert!(s.starts_with("<svg"));
        assert!(s.ends_with("</svg>\n"));
        assert!(s.contains("rect"));

        let grid: Vec<f64> = (0..32).map(|i| i as f64 / 10.0).collect();
        let dens: Vec<f64> = grid.iter().map(|x| (-x).exp()).collect();
        let k = kde_svg(&grid, &dens, "kde");
        assert!(k.contains("polyline"));
    }
}
