//! Tables and static plots rebuilt from stored sweep outputs.

use std::collections::BTreeMap;
use std::path::Path;

use plotters::prelude::*;

use super::methods::Method;
use super::record::RunRecord;
use super::sweep::{read_summary, CellSummary};
use crate::ppo::moving_average;
use crate::{Error, Result};

/// Mean PC per (method, value) across successful seeds, methods in canonical
/// order, values ascending.
pub fn aggregate(rows: &[CellSummary]) -> (Vec<f64>, Vec<(String, Vec<f64>)>) {
    let mut values: Vec<f64> = rows.iter().map(|r| r.value).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut out = Vec::new();
    for m in Method::ALL {
        let per_value: Vec<f64> = values
            .iter()
            .map(|&v| {
                let xs: Vec<f64> = rows
                    .iter()
                    .filter(|r| r.method == m.name() && r.value == v && r.ok() && r.mean_pc.is_finite())
                    .map(|r| r.mean_pc)
                    .collect();
                if xs.is_empty() {
                    f64::NAN
                } else {
                    xs.iter().sum::<f64>() / xs.len() as f64
                }
            })
            .collect();
        if rows.iter().any(|r| r.method == m.name()) {
            out.push((m.name().to_string(), per_value));
        }
    }
    (values, out)
}

pub fn text_table(rows: &[CellSummary]) -> String {
    let (values, series) = aggregate(rows);
    let axis = rows.first().map_or("value", |r| r.axis.as_str());
    let mut s = format!("{axis:>12}");
    for (m, _) in &series {
        s += &format!(" {m:>12}");
    }
    s.push('\n');
    for (i, v) in values.iter().enumerate() {
        s += &format!("{v:>12}");
        for (_, ys) in &series {
            s += &format!(" {:>12.5e}", ys[i]);
        }
        s.push('\n');
    }
    let failed = rows.iter().filter(|r| !r.ok()).count();
    if failed > 0 {
        s += &format!("{failed} failed cells\n");
    }
    s
}

fn plot_err<E: std::fmt::Display>(e: E) -> Error {
    Error::Io(std::io::Error::other(e.to_string()))
}

const PALETTE: [RGBColor; 5] = [
    RGBColor(31, 119, 180),
    RGBColor(255, 127, 14),
    RGBColor(44, 160, 44),
    RGBColor(214, 39, 40),
    RGBColor(148, 103, 189),
];

pub fn grouped_bars(path: &Path, axis: &str, values: &[f64], series: &[(String, Vec<f64>)]) -> Result<()> {
    let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let top = series
        .iter()
        .flat_map(|(_, ys)| ys.iter().copied())
        .filter(|y| y.is_finite())
        .fold(0.0f64, f64::max)
        .max(1e-12)
        * 1.1;
    let groups = values.len().max(1) as f64;
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("mean power cost vs {axis}"), ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0.0..groups, 0.0..top)
        .map_err(plot_err)?;
    let labels: Vec<String> = values.iter().map(|v| format!("{v}")).collect();
    chart
        .configure_mesh()
        .disable_x_mesh()
        .x_labels(values.len().max(1))
        .x_label_formatter(&|x| {
            let i = x.floor() as usize;
            labels.get(i).cloned().unwrap_or_default()
        })
        .x_desc(axis)
        .y_desc("W")
        .draw()
        .map_err(plot_err)?;
    let width = 0.8 / series.len().max(1) as f64;
    for (si, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let bars = ys.iter().enumerate().filter(|(_, y)| y.is_finite()).map(|(i, &y)| {
            let x0 = i as f64 + 0.1 + si as f64 * width;
            Rectangle::new([(x0, 0.0), (x0 + width, y)], color.filled())
        });
        chart
            .draw_series(bars)
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| Rectangle::new([(x, y - 5), (x + 10, y + 5)], color.filled()));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

pub fn learning_curves(path: &Path, curves: &[(String, Vec<f64>)], window: usize) -> Result<()> {
    let root = SVGBackend::new(path, (800, 480)).into_drawing_area();
    root.fill(&WHITE).map_err(plot_err)?;
    let smoothed: Vec<(String, Vec<f64>)> = curves
        .iter()
        .map(|(n, c)| (n.clone(), moving_average(c, window)))
        .collect();
    let n = smoothed.iter().map(|(_, c)| c.len()).max().unwrap_or(1).max(2);
    let ys = smoothed.iter().flat_map(|(_, c)| c.iter().copied()).filter(|y| y.is_finite());
    let (lo, hi) = ys.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| (lo.min(y), hi.max(y)));
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (-1.0, 0.0) };
    let pad = 0.05 * (hi - lo);
    let mut chart = ChartBuilder::on(&root)
        .caption(format!("training reward ({window}-iteration moving average)"), ("sans-serif", 20))
        .margin(10)
        .x_label_area_size(40)
        .y_label_area_size(70)
        .build_cartesian_2d(0..n, (lo - pad)..(hi + pad))
        .map_err(plot_err)?;
    chart
        .configure_mesh()
        .x_desc("outer iteration")
        .y_desc("reward (W)")
        .draw()
        .map_err(plot_err)?;
    for (i, (name, c)) in smoothed.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        chart
            .draw_series(LineSeries::new(c.iter().copied().enumerate(), color))
            .map_err(plot_err)?
            .label(name.as_str())
            .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 15, y)], color));
    }
    chart
        .configure_series_labels()
        .background_style(WHITE.mix(0.8))
        .border_style(BLACK)
        .draw()
        .map_err(plot_err)?;
    root.present().map_err(plot_err)?;
    Ok(())
}

/// Rebuilds `mean_pc.svg`, `learning_curves.svg` and `summary.txt` in `dir`
/// from `summary.csv` and `records/`.
pub fn render(dir: &Path) -> Result<String> {
    let rows = read_summary(dir)?;
    let (values, series) = aggregate(&rows);
    let axis = rows.first().map_or("value".to_string(), |r| r.axis.clone());
    grouped_bars(&dir.join("mean_pc.svg"), &axis, &values, &series)?;

    // Seed-averaged curve per learned method at the first value.
    let mut curves: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    let records_dir = dir.join("records");
    if records_dir.is_dir() {
        let mut paths: Vec<_> = std::fs::read_dir(&records_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        paths.sort();
        let first_tag = values.first().map(|v| format!("_{}_", format!("{v}").replace('.', "p")));
        for p in paths {
            let name = p.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
            if first_tag.as_ref().is_some_and(|t| !name.contains(t.as_str())) {
                continue;
            }
            let rec = RunRecord::load(&p)?;
            if !rec.learning_curve.is_empty() {
                curves.entry(rec.method.clone()).or_default().push(rec.learning_curve);
            }
        }
    }
    let averaged: Vec<(String, Vec<f64>)> = curves
        .into_iter()
        .map(|(m, cs)| {
            let len = cs.iter().map(Vec::len).min().unwrap_or(0);
            let mean = (0..len).map(|i| cs.iter().map(|c| c[i]).sum::<f64>() / cs.len() as f64).collect();
            (m, mean)
        })
        .collect();
    if !averaged.is_empty() {
        learning_curves(&dir.join("learning_curves.svg"), &averaged, 10)?;
    }
    let table = text_table(&rows);
    std::fs::write(dir.join("summary.txt"), &table)?;
    Ok(table)
}
