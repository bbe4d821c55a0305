//! Minimal SVG line charts of profile and sweep tables.

use std::fmt::Write as _;

use super::fmt_sig;
use super::profile::Table;
use crate::error::{Error, Result};
use crate::infodecomp::ScaleMeasures;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_Y: f64 = 40.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Splits a table into plot series.
///
/// Profiles give one series per measure (optionally restricted to
/// `measure`); sweeps need `measure` and give one series per swept value.
pub fn series_from_table(table: &Table, measure: Option<&str>) -> Result<Vec<Series>> {
    let tau = table
        .column("tau")
        .ok_or_else(|| Error::Config("table has no tau column".into()))?;
    let column = |name: &str| {
        table
            .column(name)
            .ok_or_else(|| Error::Config(format!("unknown measure {name:?}")))
    };
    if table.is_sweep() {
        let name = measure.ok_or_else(|| Error::Config("sweep tables need --measure".into()))?;
        let y = column(name)?;
        let d = column("d_swept")?;
        let mut out: Vec<Series> = Vec::new();
        for ((&dv, &x), &yv) in d.iter().zip(&tau).zip(&y) {
            let label = format!("d={}", fmt_sig(dv));
            match out.last_mut() {
                Some(s) if s.name == label => s.points.push((x, yv)),
                _ => out.push(Series {
                    name: label,
                    points: vec![(x, yv)],
                }),
            }
        }
        Ok(out)
    } else {
        let names: Vec<&str> = match measure {
            Some(m) => vec![m],
            None => ScaleMeasures::COLUMNS[1..].to_vec(),
        };
        names
            .into_iter()
            .map(|name| {
                let y = column(name)?;
                Ok(Series {
                    name: name.to_string(),
                    points: tau.iter().copied().zip(y).collect(),
                })
            })
            .collect()
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Renders the series as an SVG document with axes and a legend.
pub fn render_svg(series: &[Series], title: &str, y_label: &str) -> Result<String> {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::DegenerateInput("non-finite value in plot data".into()));
        }
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        return Err(Error::DegenerateInput("nothing to plot".into()));
    }
    if x1 == x0 {
        x1 = x0 + 1.0;
    }
    if y1 == y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - 2.0 * MARGIN_Y;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * plot_w;
    let sy = |y: f64| MARGIN_Y + (y1 - y) / (y1 - y0) * plot_h;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        escape(title)
    );
    let (bx, by) = (MARGIN_LEFT, MARGIN_Y + plot_h);
    let _ = writeln!(
        s,
        r#"<g stroke="black" fill="none"><line x1="{bx}" y1="{by}" x2="{}" y2="{by}"/><line x1="{bx}" y1="{MARGIN_Y}" x2="{bx}" y2="{by}"/></g>"#,
        bx + plot_w
    );
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(xv),
            by + 16.0,
            fmt_tick(xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            bx - 6.0,
            sy(yv) + 4.0,
            fmt_tick(yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">tau</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 6.0
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" text-anchor="middle" transform="rotate(-90 14 {:.2})">{}</text>"#,
        MARGIN_Y + plot_h / 2.0,
        MARGIN_Y + plot_h / 2.0,
        escape(y_label)
    );
    for (n, ser) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let points: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            points.join(" "),
            escape(&ser.name)
        );
        let ly = MARGIN_Y + 10.0 + 16.0 * n as f64;
        let lx = WIDTH - MARGIN_RIGHT + 15.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn fmt_tick(v: f64) -> String {
    let r = (v * 1e4).round() / 1e4;
    fmt_sig(if r == 0.0 { 0.0 } else { r })
}
