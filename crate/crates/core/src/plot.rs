//! Self-contained SVG charts: robustness/tonnage line charts and a
//! lon/lat scatter map of hot-day changes. Coordinates are printed with
//! fixed precision so identical inputs give identical bytes.

use std::fmt::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PlotError {
    #[error("nothing to plot")]
    Empty,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Optional min/max envelope as `(x, low, high)`.
    pub band: Option<Vec<(f64, f64, f64)>>,
    pub dashed: bool,
}

impl PlotSeries {
    pub fn line(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        PlotSeries { label: label.into(), points, band: None, dashed: false }
    }
}

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 210.0;
const MARGIN_TOP: f64 = 50.0;
const MARGIN_BOTTOM: f64 = 60.0;

const PALETTE: [&str; 14] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
    "#393b79", "#637939", "#8c6d31", "#843c39",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        let span = (self.x_max - self.x_min).max(f64::EPSILON);
        MARGIN_LEFT + (x - self.x_min) / span * (WIDTH - MARGIN_LEFT - MARGIN_RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        let span = (self.y_max - self.y_min).max(f64::EPSILON);
        HEIGHT - MARGIN_BOTTOM - (y - self.y_min) / span * (HEIGHT - MARGIN_TOP - MARGIN_BOTTOM)
    }
}

fn header(svg: &mut String, title: &str) {
    let _ = write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n\
         <rect width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n\
         <text x=\"{:.2}\" y=\"28\" font-size=\"16\" text-anchor=\"middle\">{}</text>\n",
        WIDTH / 2.0,
        escape(title)
    );
}

fn axes(svg: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (frame.px(frame.x_min), frame.px(frame.x_max));
    let (y0, y1) = (frame.py(frame.y_min), frame.py(frame.y_max));
    let _ = writeln!(
        svg,
        "<g class=\"axes\" stroke=\"black\" stroke-width=\"1\">\
         <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x1:.2}\" y2=\"{y0:.2}\"/>\
         <line x1=\"{x0:.2}\" y1=\"{y0:.2}\" x2=\"{x0:.2}\" y2=\"{y1:.2}\"/></g>"
    );
    for i in 0..=5 {
        let t = i as f64 / 5.0;
        let xv = frame.x_min + t * (frame.x_max - frame.x_min);
        let yv = frame.y_min + t * (frame.y_max - frame.y_min);
        let (px, py) = (frame.px(xv), frame.py(yv));
        let _ = writeln!(
            svg,
            "<text x=\"{px:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{xv:.2}</text>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{yv:.2}</text>",
            y0 + 16.0,
            x0 - 6.0,
            py + 4.0
        );
    }
    let _ = writeln!(
        svg,
        "<text class=\"x-label\" x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>\n\
         <text class=\"y-label\" x=\"18\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {:.2})\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 18.0,
        escape(x_label),
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn dash(s: &PlotSeries) -> &'static str {
    if s.dashed {
        " stroke-dasharray=\"5 3\""
    } else {
        ""
    }
}

/// Overlays `series` on one set of axes with a legend entry each.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[PlotSeries]) -> Result<String, PlotError> {
    if series.is_empty() || series.iter().all(|s| s.points.is_empty()) {
        return Err(PlotError::Empty);
    }
    let xs = series.iter().flat_map(|s| s.points.iter().map(|p| p.0));
    let (x_min, x_max) = xs.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let frame = Frame { x_min: x_min.min(0.0), x_max: x_max.max(1.0), y_min: 0.0, y_max: 1.0 };

    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &frame, x_label, y_label);
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        if let Some(band) = &s.band {
            let upper = band.iter().map(|&(x, _, hi)| (x, hi));
            let lower = band.iter().rev().map(|&(x, lo, _)| (x, lo));
            let pts: Vec<String> =
                upper.chain(lower).map(|(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
            let _ = writeln!(
                svg,
                "<polygon class=\"band\" points=\"{}\" fill=\"{color}\" fill-opacity=\"0.15\" stroke=\"none\"/>",
                pts.join(" ")
            );
        }
        let pts: Vec<String> = s.points.iter().map(|&(x, y)| format!("{:.2},{:.2}", frame.px(x), frame.py(y))).collect();
        let _ = writeln!(
            svg,
            "<polyline class=\"series\" data-label=\"{}\" points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\"{}/>",
            escape(&s.label),
            pts.join(" "),
            dash(s)
        );
    }
    let lx = WIDTH - MARGIN_RIGHT + 15.0;
    for (i, s) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let y = MARGIN_TOP + 10.0 + i as f64 * 18.0;
        let _ = writeln!(
            svg,
            "<g class=\"legend-entry\"><line x1=\"{lx:.2}\" y1=\"{y:.2}\" x2=\"{:.2}\" y2=\"{y:.2}\" stroke=\"{color}\" stroke-width=\"2\"{}/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text></g>",
            lx + 20.0,
            dash(s),
            lx + 26.0,
            y + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// One marker of the hot-day map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapPoint {
    pub lon: f64,
    pub lat: f64,
    pub value: f64,
    pub label: String,
}

/// Blue (low) to red (high) ramp over `[lo, hi]`.
fn ramp(v: f64, lo: f64, hi: f64) -> String {
    let t = if hi > lo { ((v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
    let r = (40.0 + 215.0 * t).round() as u8;
    let g = (90.0 + 60.0 * (1.0 - (2.0 * t - 1.0).abs())).round() as u8;
    let b = (230.0 - 200.0 * t).round() as u8;
    format!("#{r:02x}{g:02x}{b:02x}")
}

/// Lon/lat scatter with marker color proportional to `value`.
pub fn scatter_map(title: &str, value_label: &str, points: &[MapPoint]) -> Result<String, PlotError> {
    if points.is_empty() {
        return Err(PlotError::Empty);
    }
    let fold = |f: fn(&MapPoint) -> f64| {
        points.iter().map(f).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (lon_lo, lon_hi) = fold(|p| p.lon);
    let (lat_lo, lat_hi) = fold(|p| p.lat);
    let (v_lo, v_hi) = fold(|p| p.value);
    let frame = Frame { x_min: lon_lo - 1.0, x_max: lon_hi + 1.0, y_min: lat_lo - 1.0, y_max: lat_hi + 1.0 };

    let mut svg = String::new();
    header(&mut svg, title);
    axes(&mut svg, &frame, "longitude (°E)", "latitude (°N)");
    for p in points {
        let _ = writeln!(
            svg,
            "<circle class=\"node\" cx=\"{:.2}\" cy=\"{:.2}\" r=\"5\" fill=\"{}\" stroke=\"black\" stroke-width=\"0.5\"><title>{}: {:.1}</title></circle>",
            frame.px(p.lon),
            frame.py(p.lat),
            ramp(p.value, v_lo, v_hi),
            escape(&p.label),
            p.value
        );
    }
    let lx = WIDTH - MARGIN_RIGHT + 15.0;
    let _ = writeln!(svg, "<text x=\"{lx:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>", MARGIN_TOP, escape(value_label));
    for i in 0..=4 {
        let v = v_lo + (v_hi - v_lo) * i as f64 / 4.0;
        let y = MARGIN_TOP + 20.0 + (4 - i) as f64 * 22.0;
        let _ = writeln!(
            svg,
            "<g class=\"colorbar\"><rect x=\"{lx:.2}\" y=\"{y:.2}\" width=\"18\" height=\"18\" fill=\"{}\"/>\
             <text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{v:.1}</text></g>",
            ramp(v, v_lo, v_hi),
            lx + 24.0,
            y + 13.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
