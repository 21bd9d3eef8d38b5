//! Rendering of pipeline results into CSV tables and a small SVG plot.
//!
//! Comparison tables run one column per model (labelled by impedance
//! kind) and one row per quantity, so a five-model run reads side by
//! side: coefficient rows, fit rows, then validation rows with the
//! relative gain of each group model over the ego-only column. Gains
//! are always derived from the metric cells in the same table, never
//! stored separately.
//!
//! All renderers produce plain UTF-8 strings with `\n` line endings
//! and fixed numeric formatting, so identical inputs yield identical
//! bytes.

use crate::analysis::{BootstrapResult, SegmentedResult, SummaryStat, ValidationReport};
use crate::error::{Error, Result};
use crate::estimator::EstimationResult;
use crate::impedance::ImpedanceKind;
use crate::sampling::FEATURE_NAMES;
use crate::synth::RecoveryReport;

/// Critical value for the two-sided 0.10-level significance flag.
const Z_10_PCT: f64 = 1.645;

/// Elasticity variable labels in result order.
const ELASTICITY_NAMES: [&str; 2] = ["ln_restaurants", "cost"];

fn cell(v: f64) -> String {
    format!("{v:.4}")
}

fn header(first: &str, kinds: impl Iterator<Item = ImpedanceKind>) -> String {
    let mut line = first.to_owned();
    for kind in kinds {
        line.push(',');
        line.push_str(kind.token());
    }
    line.push('\n');
    line
}

fn push_row(out: &mut String, label: &str, cells: impl Iterator<Item = String>) {
    out.push_str(label);
    for c in cells {
        out.push(',');
        out.push_str(&c);
    }
    out.push('\n');
}

/// Point estimates, one column per model and one row per variable.
pub fn coefficients_table(results: &[EstimationResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no estimation results to tabulate"));
    }
    let mut out = header(
        "variable",
        results.iter().map(|r| r.spec.impedance_kind),
    );
    for (i, name) in FEATURE_NAMES.iter().enumerate() {
        push_row(&mut out, name, results.iter().map(|r| cell(r.beta.0[i])));
    }
    Ok(out)
}

/// Goodness-of-fit block: likelihoods, pseudo-R², convergence.
pub fn fit_table(results: &[EstimationResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no estimation results to tabulate"));
    }
    let mut out = header("quantity", results.iter().map(|r| r.spec.impedance_kind));
    push_row(
        &mut out,
        "n_observations",
        results.iter().map(|r| r.n_obs.to_string()),
    );
    push_row(&mut out, "log_likelihood", results.iter().map(|r| cell(r.ll)));
    push_row(
        &mut out,
        "null_log_likelihood",
        results.iter().map(|r| cell(r.ll0)),
    );
    push_row(&mut out, "rho_squared", results.iter().map(|r| cell(r.rho2)));
    push_row(
        &mut out,
        "adj_rho_squared",
        results.iter().map(|r| cell(r.adj_rho2)),
    );
    push_row(
        &mut out,
        "iterations",
        results.iter().map(|r| r.iterations.to_string()),
    );
    push_row(
        &mut out,
        "converged",
        results.iter().map(|r| r.converged.to_string()),
    );
    Ok(out)
}

/// Cross-validation block. When an ego-only column is present alongside
/// group models, each metric row is followed by a gain row holding
/// `100·(metric/ego_metric − 1)` per group column and `-` for ego.
pub fn validation_table(reports: &[ValidationReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no validation reports to tabulate"));
    }
    let ego = reports
        .iter()
        .find(|r| r.spec.impedance_kind == ImpedanceKind::Ego);
    let with_gains = ego.is_some() && reports.len() > 1;

    let gain_row = |metric: fn(&ValidationReport) -> f64| -> Vec<String> {
        let base = metric(ego.expect("gain rows need an ego column"));
        reports
            .iter()
            .map(|r| {
                if r.spec.impedance_kind == ImpedanceKind::Ego {
                    "-".to_owned()
                } else {
                    cell(100.0 * (metric(r) / base - 1.0))
                }
            })
            .collect()
    };

    let mut out = header("metric", reports.iter().map(|r| r.spec.impedance_kind));
    push_row(
        &mut out,
        "percent_correct",
        reports.iter().map(|r| cell(r.percent_correct)),
    );
    if with_gains {
        push_row(
            &mut out,
            "percent_correct_gain_over_ego",
            gain_row(|r| r.percent_correct).into_iter(),
        );
    }
    push_row(
        &mut out,
        "fitting_factor",
        reports.iter().map(|r| cell(r.fitting_factor)),
    );
    if with_gains {
        push_row(
            &mut out,
            "fitting_factor_gain_over_ego",
            gain_row(|r| r.fitting_factor).into_iter(),
        );
    }
    Ok(out)
}

/// Per-fold cross-validation detail in long format.
pub fn fold_table(reports: &[ValidationReport]) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::EmptyInput("no validation reports to tabulate"));
    }
    let mut out = String::from("model,fold,n_test,percent_correct,fitting_factor\n");
    for report in reports {
        for fold in &report.folds {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                report.spec.impedance_kind.token(),
                fold.fold,
                fold.n_test,
                cell(fold.percent_correct),
                cell(fold.fitting_factor),
            ));
        }
    }
    Ok(out)
}

fn summary_rows(out: &mut String, name: &str, stats: impl Fn(&BootstrapResult) -> SummaryStat + Copy, results: &[BootstrapResult]) {
    push_row(
        out,
        &format!("{name}_mean"),
        results.iter().map(|r| cell(stats(r).mean)),
    );
    push_row(
        out,
        &format!("{name}_std_error"),
        results.iter().map(|r| cell(stats(r).std_error)),
    );
    push_row(
        out,
        &format!("{name}_ci_lower"),
        results.iter().map(|r| cell(stats(r).ci_lower)),
    );
    push_row(
        out,
        &format!("{name}_ci_upper"),
        results.iter().map(|r| cell(stats(r).ci_upper)),
    );
}

/// Bootstrap coefficient summaries with z statistics and a two-sided
/// 0.10-level significance flag per coefficient.
pub fn bootstrap_coefficients_table(results: &[BootstrapResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no bootstrap results to tabulate"));
    }
    let mut out = header("quantity", results.iter().map(|r| r.spec.impedance_kind));
    for (i, name) in FEATURE_NAMES.iter().enumerate() {
        summary_rows(&mut out, name, move |r| r.beta_summary[i], results);
        push_row(
            &mut out,
            &format!("{name}_z"),
            results.iter().map(|r| cell(r.beta_summary[i].z_value())),
        );
        push_row(
            &mut out,
            &format!("{name}_significant_10pct"),
            results
                .iter()
                .map(|r| (r.beta_summary[i].z_value().abs() > Z_10_PCT).to_string()),
        );
    }
    push_row(
        &mut out,
        "replicates_used",
        results.iter().map(|r| r.converged_replicates().to_string()),
    );
    push_row(
        &mut out,
        "replicates_excluded",
        results.iter().map(|r| r.excluded_replicates.to_string()),
    );
    Ok(out)
}

/// Mean direct elasticities with confidence-interval rows.
pub fn elasticity_table(results: &[BootstrapResult]) -> Result<String> {
    if results.is_empty() {
        return Err(Error::EmptyInput("no bootstrap results to tabulate"));
    }
    let mut out = header("quantity", results.iter().map(|r| r.spec.impedance_kind));
    for (i, name) in ELASTICITY_NAMES.iter().enumerate() {
        summary_rows(&mut out, name, move |r| r.elasticity_summary[i], results);
    }
    Ok(out)
}

/// One labelled probability-versus-time series.
#[derive(Debug, Clone, PartialEq)]
pub struct CurveSeries {
    pub label: String,
    /// `(minutes, probability)` points on a shared, increasing grid.
    pub points: Vec<(f64, f64)>,
}

fn check_shared_grid(series: &[CurveSeries]) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptyInput("no curve series to render"));
    }
    let grid: Vec<f64> = series[0].points.iter().map(|&(t, _)| t).collect();
    if grid.is_empty() {
        return Err(Error::EmptyInput("curve series has no points"));
    }
    for s in &series[1..] {
        if s.points.len() != grid.len()
            || s.points.iter().zip(&grid).any(|(&(t, _), &g)| t != g)
        {
            return Err(Error::Validation(format!(
                "curve series '{}' is not on the shared time grid",
                s.label
            )));
        }
    }
    Ok(())
}

/// Curves as CSV: a time column plus one probability column per series.
pub fn curves_table(series: &[CurveSeries]) -> Result<String> {
    check_shared_grid(series)?;
    let mut out = String::from("time_min");
    for s in series {
        out.push(',');
        out.push_str(&s.label);
    }
    out.push('\n');
    for row in 0..series[0].points.len() {
        out.push_str(&format!("{:.2}", series[0].points[row].0));
        for s in series {
            out.push_str(&format!(",{:.6}", s.points[row].1));
        }
        out.push('\n');
    }
    Ok(out)
}

/// Fixed drawing geometry for [`curves_svg`].
const SVG_W: f64 = 720.0;
const SVG_H: f64 = 480.0;
const MARGIN_L: f64 = 64.0;
const MARGIN_R: f64 = 24.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 52.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
];

/// Minimal standalone SVG line plot of the curves: axes, ticks, one
/// polyline per series, and an in-plot legend. No external assets.
pub fn curves_svg(series: &[CurveSeries], title: &str) -> Result<String> {
    check_shared_grid(series)?;
    let t_min = series[0].points.first().expect("non-empty grid").0;
    let t_max = series[0].points.last().expect("non-empty grid").0;
    let span = if t_max > t_min { t_max - t_min } else { 1.0 };
    let plot_w = SVG_W - MARGIN_L - MARGIN_R;
    let plot_h = SVG_H - MARGIN_T - MARGIN_B;
    let x = |t: f64| MARGIN_L + (t - t_min) / span * plot_w;
    let y = |p: f64| MARGIN_T + (1.0 - p) * plot_h;

    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {SVG_W} {SVG_H}\" \
         font-family=\"sans-serif\" font-size=\"12\">\n"
    );
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        MARGIN_L + plot_w / 2.0,
        title
    ));

    // Axes.
    svg.push_str(&format!(
        "<line x1=\"{l:.2}\" y1=\"{b:.2}\" x2=\"{r:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n\
         <line x1=\"{l:.2}\" y1=\"{t:.2}\" x2=\"{l:.2}\" y2=\"{b:.2}\" stroke=\"black\"/>\n",
        l = MARGIN_L,
        r = MARGIN_L + plot_w,
        t = MARGIN_T,
        b = MARGIN_T + plot_h,
    ));

    // Ticks: six intervals on x, five on y.
    for i in 0..=6 {
        let t = t_min + span * f64::from(i) / 6.0;
        let px = x(t);
        svg.push_str(&format!(
            "<line x1=\"{px:.2}\" y1=\"{b:.2}\" x2=\"{px:.2}\" y2=\"{b2:.2}\" stroke=\"black\"/>\n\
             <text x=\"{px:.2}\" y=\"{ty:.2}\" text-anchor=\"middle\">{t:.0}</text>\n",
            b = MARGIN_T + plot_h,
            b2 = MARGIN_T + plot_h + 5.0,
            ty = MARGIN_T + plot_h + 20.0,
        ));
    }
    for i in 0..=5 {
        let p = f64::from(i) / 5.0;
        let py = y(p);
        svg.push_str(&format!(
            "<line x1=\"{l2:.2}\" y1=\"{py:.2}\" x2=\"{l:.2}\" y2=\"{py:.2}\" stroke=\"black\"/>\n\
             <text x=\"{tx:.2}\" y=\"{ty:.2}\" text-anchor=\"end\">{p:.1}</text>\n",
            l = MARGIN_L,
            l2 = MARGIN_L - 5.0,
            tx = MARGIN_L - 9.0,
            ty = py + 4.0,
        ));
    }

    // Axis labels.
    svg.push_str(&format!(
        "<text x=\"{:.2}\" y=\"{:.2}\" text-anchor=\"middle\">travel time (min)</text>\n",
        MARGIN_L + plot_w / 2.0,
        SVG_H - 12.0,
    ));
    svg.push_str(&format!(
        "<text x=\"16\" y=\"{:.2}\" text-anchor=\"middle\" transform=\"rotate(-90 16 {:.2})\">\
         choice probability</text>\n",
        MARGIN_T + plot_h / 2.0,
        MARGIN_T + plot_h / 2.0,
    ));

    // Series polylines.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut points = String::new();
        for &(t, p) in &s.points {
            points.push_str(&format!("{:.2},{:.2} ", x(t), y(p.clamp(0.0, 1.0))));
        }
        svg.push_str(&format!(
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>\n",
            points.trim_end()
        ));
    }

    // Legend, top-right inside the plot.
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let ly = MARGIN_T + 16.0 + 16.0 * i as f64;
        svg.push_str(&format!(
            "<line x1=\"{x1:.2}\" y1=\"{ly:.2}\" x2=\"{x2:.2}\" y2=\"{ly:.2}\" \
             stroke=\"{color}\" stroke-width=\"1.5\"/>\n\
             <text x=\"{tx:.2}\" y=\"{ty:.2}\">{label}</text>\n",
            x1 = MARGIN_L + plot_w - 150.0,
            x2 = MARGIN_L + plot_w - 126.0,
            tx = MARGIN_L + plot_w - 120.0,
            ty = ly + 4.0,
            label = s.label,
        ));
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Per-segment bootstrap coefficient summaries in long format.
pub fn segment_coefficients_table(result: &SegmentedResult) -> String {
    let mut out = String::from(
        "segment,n_situations,variable,mean,std_error,z,ci_lower,ci_upper\n",
    );
    for segment in &result.segments {
        for (i, name) in FEATURE_NAMES.iter().enumerate() {
            let s = segment.bootstrap.beta_summary[i];
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                segment.label,
                segment.n_situations,
                name,
                cell(s.mean),
                cell(s.std_error),
                cell(s.z_value()),
                cell(s.ci_lower),
                cell(s.ci_upper),
            ));
        }
    }
    out
}

/// Per-segment elasticity summaries in long format.
pub fn segment_elasticity_table(result: &SegmentedResult) -> String {
    let mut out = String::from("segment,variable,mean,std_error,ci_lower,ci_upper\n");
    for segment in &result.segments {
        for (i, name) in ELASTICITY_NAMES.iter().enumerate() {
            let s = segment.bootstrap.elasticity_summary[i];
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                segment.label,
                name,
                cell(s.mean),
                cell(s.std_error),
                cell(s.ci_lower),
                cell(s.ci_upper),
            ));
        }
    }
    out
}

/// Parameter-recovery outcome, one row per coefficient.
pub fn recovery_table(report: &RecoveryReport) -> String {
    let mut out =
        String::from("variable,true_value,point_estimate,bootstrap_mean,std_error,z,ci_covered\n");
    for (i, name) in FEATURE_NAMES.iter().enumerate() {
        let s = report.bootstrap.beta_summary[i];
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            name,
            cell(report.beta_true.0[i]),
            cell(report.fit.beta.0[i]),
            cell(s.mean),
            cell(s.std_error),
            cell(report.z_scores[i]),
            report.ci_covered[i],
        ));
    }
    out
}
