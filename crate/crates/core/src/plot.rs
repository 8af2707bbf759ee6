//! Static SVG line plots of [`Table`] columns.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Linear,
    Log,
}

/// Reference line `y = c x^slope` drawn through the first plotted point of the
/// first series.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeGuide {
    pub slope: f64,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSpec {
    pub x: String,
    pub y: Vec<String>,
    pub x_scale: Scale,
    pub y_scale: Scale,
    pub guides: Vec<SlopeGuide>,
    pub title: String,
}

impl PlotSpec {
    pub fn new(x: impl Into<String>, y: &[&str]) -> Self {
        PlotSpec {
            x: x.into(),
            y: y.iter().map(|s| s.to_string()).collect(),
            x_scale: Scale::Linear,
            y_scale: Scale::Linear,
            guides: Vec::new(),
            title: String::new(),
        }
    }

    pub fn log_log(mut self) -> Self {
        self.x_scale = Scale::Log;
        self.y_scale = Scale::Log;
        self
    }

    pub fn with_guide(mut self, slope: f64, label: impl Into<String>) -> Self {
        self.guides.push(SlopeGuide { slope, label: label.into() });
        self
    }

    pub fn with_title(mut self, title: impl Into<String>) -> Self {
        self.title = title.into();
        self
    }
}

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_L: f64 = 80.0;
const MARGIN_R: f64 = 20.0;
const MARGIN_T: f64 = 36.0;
const MARGIN_B: f64 = 56.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn transform(v: f64, scale: Scale) -> Option<f64> {
    match scale {
        Scale::Linear => v.is_finite().then_some(v),
        Scale::Log => (v > 0.0 && v.is_finite()).then(|| v.log10()),
    }
}

struct Axis {
    lo: f64,
    hi: f64,
}

impl Axis {
    fn from_values(vals: impl Iterator<Item = f64>) -> Option<Self> {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in vals {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !lo.is_finite() {
            return None;
        }
        if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
            lo -= 0.5;
            hi += 0.5;
        }
        let pad = 0.03 * (hi - lo);
        Some(Axis { lo: lo - pad, hi: hi + pad })
    }

    fn frac(&self, v: f64) -> f64 {
        (v - self.lo) / (self.hi - self.lo)
    }

    fn ticks(&self, scale: Scale) -> Vec<f64> {
        match scale {
            Scale::Log => {
                let (a, b) = (self.lo.ceil() as i64, self.hi.floor() as i64);
                let step = ((b - a) / 6).max(1);
                (a..=b).step_by(step as usize).map(|e| e as f64).collect()
            }
            Scale::Linear => {
                let raw = (self.hi - self.lo) / 5.0;
                let mag = 10f64.powf(raw.log10().floor());
                let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
                let start = (self.lo / step).ceil() as i64;
                let end = (self.hi / step).floor() as i64;
                (start..=end).map(|k| k as f64 * step).collect()
            }
        }
    }
}

fn tick_label(v: f64, scale: Scale) -> String {
    match scale {
        Scale::Log => format!("1e{}", v as i64),
        Scale::Linear => {
            let s = format!("{v:.6}");
            let s = s.trim_end_matches('0').trim_end_matches('.');
            if s == "-0" {
                "0".into()
            } else {
                s.to_string()
            }
        }
    }
}

/// Renders a standalone SVG 1.1 document with one polyline per y column.
pub fn render_svg(table: &Table, spec: &PlotSpec) -> Result<String> {
    if table.is_empty() {
        return Err(Error::usage("cannot plot an empty table"));
    }
    if spec.y.is_empty() {
        return Err(Error::usage("plot needs at least one y column"));
    }
    let xs = table.column(&spec.x).ok_or_else(|| Error::usage(format!("no column {:?} to plot", spec.x)))?;
    let mut series = Vec::new();
    for name in &spec.y {
        let ys = table.column(name).ok_or_else(|| Error::usage(format!("no column {name:?} to plot")))?;
        let pts: Vec<(f64, f64)> = xs
            .iter()
            .zip(&ys)
            .filter_map(|(&x, &y)| Some((transform(x, spec.x_scale)?, transform(y, spec.y_scale)?)))
            .collect();
        series.push((name.as_str(), pts));
    }
    let xa = Axis::from_values(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)))
        .ok_or_else(|| Error::usage("no plottable points (log axes need positive values)"))?;
    let ya = Axis::from_values(series.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)))
        .ok_or_else(|| Error::usage("no plottable points (log axes need positive values)"))?;
    let pw = WIDTH - MARGIN_L - MARGIN_R;
    let ph = HEIGHT - MARGIN_T - MARGIN_B;
    let px = |x: f64| MARGIN_L + xa.frac(x) * pw;
    let py = |y: f64| MARGIN_T + (1.0 - ya.frac(y)) * ph;

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8" standalone="no"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<defs><clipPath id="plot-area"><rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}"/></clipPath></defs>"#
    );
    if !spec.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#,
            WIDTH / 2.0,
            escape(&spec.title)
        );
    }
    let _ =
        writeln!(out, r#"<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#);
    for t in xa.ticks(spec.x_scale) {
        let x = px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{MARGIN_T}" x2="{x:.2}" y2="{:.2}" stroke="#dddddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            MARGIN_T + ph,
            MARGIN_T + ph + 16.0,
            tick_label(t, spec.x_scale)
        );
    }
    for t in ya.ticks(spec.y_scale) {
        let y = py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_L}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#dddddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            MARGIN_L + pw,
            MARGIN_L - 6.0,
            y + 4.0,
            tick_label(t, spec.y_scale)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        MARGIN_L + pw / 2.0,
        HEIGHT - 14.0,
        escape(&spec.x)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_T + ph / 2.0,
        MARGIN_T + ph / 2.0,
        escape(&spec.y.join(", "))
    );
    let _ = writeln!(out, r#"<g clip-path="url(#plot-area)">"#);
    for (k, (name, pts)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"><title>{}</title></polyline>"#,
            coords.join(" "),
            escape(name)
        );
    }
    let anchor = series.iter().find_map(|(_, p)| p.first().copied());
    if let Some((x0, y0)) = anchor {
        for g in &spec.guides {
            // In log-log coordinates the guide is a straight line of the given slope.
            let slope = match (spec.x_scale, spec.y_scale) {
                (Scale::Log, Scale::Log) | (Scale::Linear, Scale::Linear) => g.slope,
                _ => continue,
            };
            let (x1, y1) = (xa.hi, y0 + slope * (xa.hi - x0));
            let _ = writeln!(
                out,
                r#"<line x1="{:.2}" y1="{:.2}" x2="{:.2}" y2="{:.2}" stroke="gray" stroke-dasharray="6 4"/>"#,
                px(x0),
                py(y0),
                px(x1),
                py(y1)
            );
        }
    }
    let _ = writeln!(out, "</g>");
    let mut ly = MARGIN_T + 16.0;
    for (k, (name, _)) in series.iter().enumerate() {
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(out, r#"<text x="{:.2}" y="{ly:.2}" fill="{color}">{}</text>"#, MARGIN_L + 10.0, escape(name));
        ly += 16.0;
    }
    for g in &spec.guides {
        let _ = writeln!(
            out,
            r#"<text x="{:.2}" y="{ly:.2}" fill="gray">{}</text>"#,
            MARGIN_L + 10.0,
            escape(&format!("- - {}", g.label))
        );
        ly += 16.0;
    }
    out.push_str("</svg>\n");
    Ok(out)
}
