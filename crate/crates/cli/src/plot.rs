//! Static SVG line charts of trace columns against `t`.

use std::path::Path;

use anyhow::{anyhow, Result};
use plotters::prelude::*;

use crate::config::ExperimentKind;
use crate::output::Table;

/// Columns drawn for each experiment kind.
pub fn series_for(kind: ExperimentKind) -> &'static [&'static str] {
    match kind {
        ExperimentKind::StackelbergSolve => &["eps", "delta"],
        ExperimentKind::FisherStatic | ExperimentKind::FisherOnline => &["distance", "clearing_residual"],
        ExperimentKind::RobustnessAsym => &["dist_x", "bound_sum", "bound_simple"],
        ExperimentKind::RobustnessSym => &["dist_x", "dist_y", "bound_sum", "bound_simple"],
        ExperimentKind::RegretReport => &["avg_regret", "bound"],
    }
}

pub fn render(table: &Table, columns: &[&str], title: &str, path: &Path) -> Result<()> {
    let series: Vec<(&str, Vec<(f64, f64)>)> = columns
        .iter()
        .filter_map(|name| {
            let values = table.column(name)?;
            let points = table
                .rows
                .iter()
                .zip(values)
                .filter(|(_, v)| v.is_finite())
                .map(|((t, _), v)| (*t as f64, v))
                .collect();
            Some((*name, points))
        })
        .collect();
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut lo, mut hi) = all.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(*v), hi.max(*v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        hi = lo + 1.0;
    }
    let t_max = table.rows.last().map_or(1, |(t, _)| *t).max(1) as f64;
    let t_min = table.rows.first().map_or(0, |(t, _)| *t) as f64;

    let root = SVGBackend::new(path, (900, 540)).into_drawing_area();
    let err = |e: &dyn std::fmt::Display| anyhow!("cannot draw {}: {e}", path.display());
    root.fill(&WHITE).map_err(|e| err(&e))?;
    let mut chart = ChartBuilder::on(&root)
        .caption(title, ("sans-serif", 20))
        .margin(16)
        .x_label_area_size(40)
        .y_label_area_size(80)
        .build_cartesian_2d(t_min..t_max, lo..hi)
        .map_err(|e| err(&e))?;
    chart.configure_mesh().x_desc("t").draw().map_err(|e| err(&e))?;
    for (k, (name, points)) in series.into_iter().enumerate() {
        let color = Palette99::pick(k).to_rgba();
        chart
            .draw_series(LineSeries::new(points, color.stroke_width(2)))
            .map_err(|e| err(&e))?
            .label(name)
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(|e| err(&e))?;
    root.present().map_err(|e| err(&e))?;
    Ok(())
}
