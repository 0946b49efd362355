//! Dependency-free SVG charts of mean accuracy with standard-deviation bars.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ResultTable, SummaryRow};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlotKind {
    /// One polyline per algorithm over the numeric axis.
    #[default]
    Line,
    /// Grouped bars, one group per axis value.
    Bar,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 24.0;
const BOTTOM: f64 = 52.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = self.x1 - self.x0;
        if span == 0.0 {
            LEFT + (WIDTH - LEFT - RIGHT) / 2.0
        } else {
            LEFT + (x - self.x0) / span * (WIDTH - LEFT - RIGHT)
        }
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y0) / (self.y1 - self.y0) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Renders the table's summary as an SVG document.
pub fn render_svg(table: &ResultTable, kind: PlotKind) -> Result<String> {
    let summary = table.summary();
    if summary.is_empty() {
        return Err(Error::config("cannot plot an empty result table"));
    }
    let mut algorithms: Vec<&str> = Vec::new();
    let mut axis_values: Vec<f64> = Vec::new();
    for s in &summary {
        if !algorithms.contains(&s.algorithm.as_str()) {
            algorithms.push(&s.algorithm);
        }
        if !axis_values.contains(&s.axis) {
            axis_values.push(s.axis);
        }
    }
    let lo = summary.iter().map(|s| s.mean - s.std).fold(0.0f64, f64::min);
    let hi = summary.iter().map(|s| s.mean + s.std).fold(1.0f64, f64::max);
    let frame = match kind {
        PlotKind::Line => Frame {
            x0: axis_values.iter().copied().fold(f64::INFINITY, f64::min),
            x1: axis_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            y0: lo,
            y1: hi,
        },
        PlotKind::Bar => Frame { x0: 0.0, x1: axis_values.len() as f64, y0: lo, y1: hi },
    };

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    axes(&mut svg, &frame, table, kind, &axis_values);

    for (a, name) in algorithms.iter().enumerate() {
        let color = PALETTE[a % PALETTE.len()];
        let rows: Vec<&SummaryRow> = summary.iter().filter(|s| s.algorithm == *name).collect();
        match kind {
            PlotKind::Line => {
                let points: Vec<String> = rows
                    .iter()
                    .map(|s| format!("{:.2},{:.2}", frame.px(s.axis), frame.py(s.mean)))
                    .collect();
                let _ = writeln!(
                    svg,
                    r#"<polyline class="series" fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
                    points.join(" ")
                );
                for s in &rows {
                    let x = frame.px(s.axis);
                    error_bar(&mut svg, &frame, x, s, color);
                    let _ = writeln!(
                        svg,
                        r#"<circle cx="{x:.2}" cy="{:.2}" r="3" fill="{color}"/>"#,
                        frame.py(s.mean)
                    );
                }
            }
            PlotKind::Bar => {
                let group = frame.px(1.0) - frame.px(0.0);
                let bar = group * 0.8 / algorithms.len() as f64;
                for s in &rows {
                    let g = axis_values.iter().position(|v| *v == s.axis).unwrap_or(0);
                    let left = frame.px(g as f64) + group * 0.1 + bar * a as f64;
                    let (top, base) = (frame.py(s.mean.max(frame.y0)), frame.py(frame.y0));
                    let _ = writeln!(
                        svg,
                        r#"<rect class="bar" x="{left:.2}" y="{top:.2}" width="{bar:.2}" height="{:.2}" fill="{color}"/>"#,
                        base - top
                    );
                    error_bar(&mut svg, &frame, left + bar / 2.0, s, "black");
                }
            }
        }
        let ly = TOP + 16.0 + 20.0 * a as f64;
        let lx = WIDTH - RIGHT + 16.0;
        let _ = writeln!(
            svg,
            r#"<rect x="{lx}" y="{:.1}" width="14" height="4" fill="{color}"/><text x="{:.1}" y="{ly:.1}">{}</text>"#,
            ly - 6.0,
            lx + 20.0,
            escape(name)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn error_bar(svg: &mut String, frame: &Frame, x: f64, s: &SummaryRow, color: &str) {
    if s.std == 0.0 {
        return;
    }
    let (top, bottom) = (frame.py(s.mean + s.std), frame.py(s.mean - s.std));
    let _ = writeln!(
        svg,
        r#"<path class="errorbar" stroke="{color}" d="M{:.2},{top:.2}H{:.2}M{x:.2},{top:.2}V{bottom:.2}M{:.2},{bottom:.2}H{:.2}"/>"#,
        x - 4.0,
        x + 4.0,
        x - 4.0,
        x + 4.0
    );
}

fn axes(svg: &mut String, frame: &Frame, table: &ResultTable, kind: PlotKind, axis_values: &[f64]) {
    let (left, right, top, bottom) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        svg,
        r#"<path stroke="black" fill="none" d="M{left},{top}V{bottom}H{right}"/>"#
    );
    for i in 0..=5 {
        let y = frame.y0 + (frame.y1 - frame.y0) * i as f64 / 5.0;
        let py = frame.py(y);
        let _ = writeln!(
            svg,
            r##"<path stroke="#ddd" d="M{left},{py:.2}H{right}"/><text x="{:.1}" y="{:.2}" text-anchor="end">{y:.2}</text>"##,
            left - 6.0,
            py + 4.0
        );
    }
    for (g, v) in axis_values.iter().enumerate() {
        let x = match kind {
            PlotKind::Line => frame.px(*v),
            PlotKind::Bar => (frame.px(g as f64) + frame.px(g as f64 + 1.0)) / 2.0,
        };
        let _ = writeln!(
            svg,
            r#"<text x="{x:.2}" y="{:.1}" text-anchor="middle">{v}</text>"#,
            bottom + 18.0
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (left + right) / 2.0,
        HEIGHT - 10.0,
        table.axis.name()
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(16,{:.1}) rotate(-90)" text-anchor="middle">accuracy</text>"#,
        (top + bottom) / 2.0
    );
}

/// Writes the chart to `path` and its summary data to the same path with a
/// `.csv` extension.
pub fn emit_plot(table: &ResultTable, kind: PlotKind, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(table, kind)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))?;
    let csv_path = path.with_extension("csv");
    let file = fs::File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    table.write_summary_csv(file)
}
