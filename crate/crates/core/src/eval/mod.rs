//! Metrics, stratified folds, cross-validation, the cross-domain matrix and
//! error analysis.

mod errors;
mod folds;
mod metrics;

pub use errors::{error_report, ConfidenceBin, ErrorEntry, ErrorReport};
pub use folds::{cross_domain_with, cross_validate_with, stratified_kfold, CrossDomainMatrix, CvReport, FoldPlan};
pub use metrics::{compute_metrics, compute_metrics_by_domain, ClassMetrics, ConfusionMatrix, EvalReport};

/// Bar chart of mean scores with standard-deviation whiskers.
pub fn svg_bar_chart(title: &str, bars: &[(String, f64, f64)]) -> String {
    const W: f64 = 640.0;
    const H: f64 = 360.0;
    const PAD: f64 = 48.0;
    let n = bars.len().max(1) as f64;
    let slot = (W - 2.0 * PAD) / n;
    let y = |v: f64| H - PAD - v.clamp(0.0, 1.0) * (H - 2.0 * PAD);
    let esc = |s: &str| s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;");
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" viewBox=\"0 0 {W} {H}\">\n\
         <text x=\"{}\" y=\"24\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n\
         <line x1=\"{PAD}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        W / 2.0,
        esc(title),
        H - PAD,
        W - PAD,
        H - PAD
    );
    for tick in [0.0, 0.25, 0.5, 0.75, 1.0] {
        out.push_str(&format!(
            "<text x=\"{}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"10\">{tick:.2}</text>\n",
            PAD - 4.0,
            y(tick) + 3.0
        ));
    }
    for (i, (label, mean, std)) in bars.iter().enumerate() {
        let x = PAD + slot * i as f64 + slot * 0.15;
        let w = slot * 0.7;
        let cx = x + w / 2.0;
        out.push_str(&format!(
            "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{w:.1}\" height=\"{:.1}\" fill=\"#4a7ab5\"/>\n",
            y(*mean),
            y(0.0) - y(*mean)
        ));
        out.push_str(&format!(
            "<line x1=\"{cx:.1}\" y1=\"{:.1}\" x2=\"{cx:.1}\" y2=\"{:.1}\" stroke=\"black\"/>\n",
            y(mean - std),
            y(mean + std)
        ));
        out.push_str(&format!(
            "<text x=\"{cx:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{}</text>\n",
            H - PAD + 14.0,
            esc(label)
        ));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chart_is_deterministic_svg() {
        let bars = vec![("bow".to_string(), 0.85, 0.01), ("pos<4>".to_string(), 0.75, 0.02)];
        let a = svg_bar_chart("F1", &bars);
        assert_eq!(a, svg_bar_chart("F1", &bars));
        assert!(a.starts_with("<svg"));
        assert_eq!(a.matches("<rect").count(), 2);
        assert!(a.contains("pos&lt;4&gt;"));
    }
}
