//! Self-contained SVG line plots, no external plotting dependency.
//! Deterministic bytes for identical input.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone)]
pub struct PlotConfig {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: u32,
    pub height: u32,
}

impl PlotConfig {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        PlotConfig {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            log_x: false,
            log_y: false,
            width: 900,
            height: 560,
        }
    }

    pub fn log_log(mut self) -> Self {
        self.log_x = true;
        self.log_y = true;
        self
    }
}

pub fn render_svg(series: &[Series], cfg: &PlotConfig, path: &Path) -> Result<()> {
    let body = svg_string(series, cfg)?;
    std::fs::write(path, body)?;
    Ok(())
}

pub fn svg_string(series: &[Series], cfg: &PlotConfig) -> Result<String> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(Error::Domain("nothing to plot".into()));
    }
    let tx = |v: f64| -> Result<f64> {
        if cfg.log_x {
            if v <= 0.0 {
                return Err(Error::Domain("log x-axis needs positive values".into()));
            }
            Ok(v.log10())
        } else {
            Ok(v)
        }
    };
    let ty = |v: f64| -> Result<f64> {
        if cfg.log_y {
            if v <= 0.0 {
                return Err(Error::Domain("log y-axis needs positive values".into()));
            }
            Ok(v.log10())
        } else {
            Ok(v)
        }
    };
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for s in series {
        for &(x, y) in &s.points {
            xs.push(tx(x)?);
            ys.push(ty(y)?);
        }
    }
    let (xmin, xmax) = padded_range(&xs);
    let (ymin, ymax) = padded_range(&ys);

    let (w, h) = (cfg.width as f64, cfg.height as f64);
    let (ml, mr, mt, mb) = (70.0, 20.0, 40.0, 55.0);
    let px = |v: f64| ml + (v - xmin) / (xmax - xmin) * (w - ml - mr);
    let py = |v: f64| h - mb - (v - ymin) / (ymax - ymin) * (h - mt - mb);

    let mut out = String::new();
    let _ = write!(
        out,
        r#"<svg version="1.1" width="{}" height="{}" xmlns="http://www.w3.org/2000/svg">"#,
        cfg.width, cfg.height
    );
    let _ = write!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = write!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="monospace" font-size="15">{}</text>"#,
        w / 2.0,
        cfg.title
    );
    // frame
    let _ = write!(
        out,
        r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        ml,
        mt,
        w - ml - mr,
        h - mt - mb
    );
    // ticks
    for i in 0..=5u32 {
        let f = i as f64 / 5.0;
        let xv = xmin + f * (xmax - xmin);
        let x = px(xv);
        let _ = write!(
            out,
            r#"<line x1="{x:.2}" y1="{:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#,
            h - mb,
            h - mb + 5.0
        );
        let shown = if cfg.log_x { 10f64.powf(xv) } else { xv };
        let _ = write!(
            out,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="monospace" font-size="11">{}</text>"#,
            h - mb + 18.0,
            tick_label(shown)
        );
        let yv = ymin + f * (ymax - ymin);
        let y = py(yv);
        let _ = write!(
            out,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="black"/>"#,
            ml - 5.0,
            ml
        );
        let shown = if cfg.log_y { 10f64.powf(yv) } else { yv };
        let _ = write!(
            out,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="monospace" font-size="11">{}</text>"#,
            ml - 8.0,
            y + 4.0,
            tick_label(shown)
        );
    }
    // axis labels
    let _ = write!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="monospace" font-size="12">{}</text>"#,
        ml + (w - ml - mr) / 2.0,
        h - 12.0,
        cfg.x_label
    );
    let _ = write!(
        out,
        r#"<text x="16" y="{:.2}" text-anchor="middle" font-family="monospace" font-size="12" transform="rotate(-90 16 {:.2})">{}</text>"#,
        mt + (h - mt - mb) / 2.0,
        mt + (h - mt - mb) / 2.0,
        cfg.y_label
    );
    // series
    for (si, s) in series.iter().enumerate() {
        if s.points.is_empty() {
            continue;
        }
        let color = PALETTE[si % PALETTE.len()];
        let mut d = String::new();
        for (i, &(x, y)) in s.points.iter().enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(d, "{cmd}{:.2} {:.2} ", px(tx(x)?), py(ty(y)?));
        }
        let _ = write!(
            out,
            r#"<path d="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            d.trim_end()
        );
        // legend
        let ly = mt + 16.0 + 16.0 * si as f64;
        let _ = write!(
            out,
            r#"<rect x="{:.2}" y="{:.2}" width="10" height="10" fill="{color}"/>"#,
            ml + 8.0,
            ly - 9.0
        );
        let _ = write!(
            out,
            r#"<text x="{:.2}" y="{ly:.2}" font-family="monospace" font-size="11">{}</text>"#,
            ml + 22.0,
            s.label
        );
    }
    out.push_str("</svg>");
    Ok(out)
}

fn padded_range(vals: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in vals {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if lo == hi {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = (hi - lo) * 0.05;
    (lo - pad, hi + pad)
}

fn tick_label(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-3..1e5).contains(&a) {
        format!("{v:.3}")
    } else {
        format!("{v:.2e}")
    }
}
