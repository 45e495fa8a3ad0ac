//! Minimal static SVG charts.

use std::fmt::Write;

const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 16.0;
const TOP: f64 = 36.0;
const BOTTOM: f64 = 48.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
    "#bcbd22", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scale {
    #[default]
    Linear,
    Log,
}

impl Scale {
    fn apply(self, v: f64) -> Option<f64> {
        match self {
            Scale::Linear => Some(v),
            Scale::Log if v > 0.0 => Some(v.log10()),
            Scale::Log => None,
        }
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
    xs: Scale,
    ys: Scale,
}

impl Frame {
    fn fit(
        points: impl Iterator<Item = (f64, f64)>,
        xs: Scale,
        ys: Scale,
        y_from_zero: bool,
    ) -> Self {
        let mut x = (f64::INFINITY, f64::NEG_INFINITY);
        let mut y = if y_from_zero && ys == Scale::Linear {
            (0.0, f64::NEG_INFINITY)
        } else {
            (f64::INFINITY, f64::NEG_INFINITY)
        };
        for (a, b) in points {
            if let (Some(a), Some(b)) = (xs.apply(a), ys.apply(b)) {
                x = (x.0.min(a), x.1.max(a));
                y = (y.0.min(b), y.1.max(b));
            }
        }
        let pad = |r: (f64, f64)| {
            if !r.0.is_finite() || !r.1.is_finite() {
                (0.0, 1.0)
            } else if r.1 - r.0 < 1e-12 {
                (r.0 - 0.5, r.1 + 0.5)
            } else {
                r
            }
        };
        Frame {
            x: pad(x),
            y: pad(y),
            xs,
            ys,
        }
    }

    fn px(&self, v: f64) -> Option<f64> {
        let v = self.xs.apply(v)?;
        Some(LEFT + (v - self.x.0) / (self.x.1 - self.x.0) * (W - LEFT - RIGHT))
    }

    fn py(&self, v: f64) -> Option<f64> {
        let v = self.ys.apply(v)?;
        Some(H - BOTTOM - (v - self.y.0) / (self.y.1 - self.y.0) * (H - TOP - BOTTOM))
    }

    fn tick_label(scale: Scale, v: f64) -> String {
        let v = match scale {
            Scale::Linear => v,
            Scale::Log => 10f64.powf(v),
        };
        if v.abs() >= 100.0 || v == v.round() {
            format!("{v:.0}")
        } else {
            format!("{v:.2}")
        }
    }
}

fn open(s: &mut String, title: &str) {
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="20" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        escape(title)
    );
}

fn axes(s: &mut String, f: &Frame, xlabel: &str, ylabel: &str) {
    let (x0, x1, y0, y1) = (LEFT, W - RIGHT, H - BOTTOM, TOP);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y1} L{x0},{y0} L{x1},{y0}" fill="none" stroke="black"/>"#
    );
    for i in 0..=4 {
        let t = i as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let px = x0 + t * (x1 - x0);
        let py = y0 - t * (y0 - y1);
        let _ = writeln!(
            s,
            r#"<text x="{px:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            y0 + 16.0,
            Frame::tick_label(f.xs, xv)
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 6.0,
            py + 4.0,
            Frame::tick_label(f.ys, yv)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        H - 10.0,
        escape(xlabel)
    );
    let _ = writeln!(
        s,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(ylabel)
    );
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

pub struct Series<'a> {
    pub name: &'a str,
    pub points: Vec<(f64, f64)>,
    /// Draw markers only.
    pub scatter: bool,
}

pub fn line_chart(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    series: &[Series],
    xs: Scale,
    ys: Scale,
) -> String {
    let f = Frame::fit(
        series.iter().flat_map(|s| s.points.iter().copied()),
        xs,
        ys,
        true,
    );
    let mut s = String::new();
    open(&mut s, title);
    axes(&mut s, &f, xlabel, ylabel);
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let pts: Vec<(f64, f64)> = ser
            .points
            .iter()
            .filter_map(|&(x, y)| Some((f.px(x)?, f.py(y)?)))
            .collect();
        if ser.scatter {
            for (x, y) in &pts {
                let _ = writeln!(
                    s,
                    r#"<circle cx="{x:.1}" cy="{y:.1}" r="2.5" fill="{color}"/>"#
                );
            }
        } else if !pts.is_empty() {
            let d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.1},{y:.1}")).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                d.join(" ")
            );
        }
        if series.len() > 1 {
            let _ = writeln!(
                s,
                r#"<text x="{:.1}" y="{:.1}" fill="{color}">{}</text>"#,
                W - RIGHT - 120.0,
                TOP + 14.0 * (k as f64 + 1.0),
                escape(ser.name)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn bar_chart(title: &str, xlabel: &str, ylabel: &str, bars: &[(f64, f64)]) -> String {
    let f = Frame::fit(
        bars.iter().flat_map(|&(x, y)| [(x - 0.5, y), (x + 0.5, y)]),
        Scale::Linear,
        Scale::Linear,
        true,
    );
    let mut s = String::new();
    open(&mut s, title);
    axes(&mut s, &f, xlabel, ylabel);
    let base = f.py(f.y.0.max(0.0)).unwrap_or(H - BOTTOM);
    for &(x, y) in bars {
        let (Some(a), Some(b), Some(top)) = (f.px(x - 0.4), f.px(x + 0.4), f.py(y)) else {
            continue;
        };
        let _ = writeln!(
            s,
            r#"<rect x="{a:.1}" y="{top:.1}" width="{:.1}" height="{:.1}" fill="{}"/>"#,
            b - a,
            (base - top).max(0.0),
            PALETTE[0]
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Layers stacked bottom to top over a shared x axis.
pub fn stacked_area(
    title: &str,
    xlabel: &str,
    ylabel: &str,
    x: &[f64],
    layers: &[Vec<f64>],
) -> String {
    let mut tops = vec![0.0; x.len()];
    let mut bands = Vec::with_capacity(layers.len());
    for layer in layers {
        let lower = tops.clone();
        for (t, v) in tops.iter_mut().zip(layer) {
            *t += v;
        }
        bands.push((lower, tops.clone()));
    }
    let f = Frame::fit(
        x.iter().zip(&tops).map(|(&a, &b)| (a, b)),
        Scale::Linear,
        Scale::Linear,
        true,
    );
    let mut s = String::new();
    open(&mut s, title);
    axes(&mut s, &f, xlabel, ylabel);
    for (k, (lower, upper)) in bands.iter().enumerate() {
        let mut d = String::new();
        for (i, (&xi, &yi)) in x.iter().zip(upper).enumerate() {
            let cmd = if i == 0 { 'M' } else { 'L' };
            let _ = write!(
                d,
                "{cmd}{:.1},{:.1} ",
                f.px(xi).unwrap_or(0.0),
                f.py(yi).unwrap_or(0.0)
            );
        }
        for (&xi, &yi) in x.iter().zip(lower).rev() {
            let _ = write!(
                d,
                "L{:.1},{:.1} ",
                f.px(xi).unwrap_or(0.0),
                f.py(yi).unwrap_or(0.0)
            );
        }
        d.push('Z');
        let _ = writeln!(
            s,
            r#"<path d="{d}" fill="{}" fill-opacity="0.8" stroke="none"/>"#,
            PALETTE[k % PALETTE.len()]
        );
    }
    s.push_str("</svg>\n");
    s
}
