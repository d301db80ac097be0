//! Minimal SVG line charts and heat maps. CSV stays the canonical output;
//! these are for a quick look.

use std::fmt::Write;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 450.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 55.0;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// Named polyline; NaN points break the line.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

struct Frame {
    x: (f64, f64),
    y: (f64, f64),
}

impl Frame {
    fn px(&self, x: f64) -> f64 {
        LEFT + (x - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - LEFT - RIGHT)
    }

    fn py(&self, y: f64) -> f64 {
        HEIGHT - BOTTOM - (y - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - TOP - BOTTOM)
    }
}

fn range<I: Iterator<Item = f64>>(values: I) -> (f64, f64) {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
            (a.min(v), b.max(v))
        });
    if !lo.is_finite() {
        (0.0, 1.0)
    } else if hi > lo {
        (lo, hi)
    } else {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        (lo - pad, hi + pad)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn open(out: &mut String, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{}" y="22" text-anchor="middle" font-size="15">{}</text>"#,
        (WIDTH - RIGHT + LEFT) / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, f: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, TOP, HEIGHT - BOTTOM);
    let _ = writeln!(
        out,
        r#"<rect x="{x0}" y="{y0}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y1 - y0
    );
    for k in 0..=4 {
        let t = k as f64 / 4.0;
        let xv = f.x.0 + t * (f.x.1 - f.x.0);
        let yv = f.y.0 + t * (f.y.1 - f.y.0);
        let (px, py) = (f.px(xv), f.py(yv));
        let _ = writeln!(
            out,
            r#"<line x1="{px:.1}" y1="{y1}" x2="{px:.1}" y2="{}" stroke="black"/><text x="{px:.1}" y="{}" text-anchor="middle">{}</text>"#,
            y1 + 5.0,
            y1 + 18.0,
            tick(xv)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{}" y1="{py:.1}" x2="{x0}" y2="{py:.1}" stroke="black"/><text x="{}" y="{:.1}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            tick(yv)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 12.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{0}" text-anchor="middle" transform="rotate(-90 18 {0})">{1}</text>"#,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn tick(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e-2 && v.abs() < 1e4 {
        format!("{}", (v * 1e3).round() / 1e3)
    } else {
        format!("{v:.2e}")
    }
}

fn polylines(out: &mut String, f: &Frame, series: &[Series], legend: bool) {
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let mut run: Vec<String> = Vec::new();
        let mut flush = |run: &mut Vec<String>| {
            if run.len() > 1 {
                let _ = writeln!(
                    out,
                    r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
                    run.join(" ")
                );
            }
            run.clear();
        };
        for (x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                run.push(format!("{:.2},{:.2}", f.px(*x), f.py(*y)));
            } else {
                flush(&mut run);
            }
        }
        flush(&mut run);
        if legend {
            let y = TOP + 10.0 + 18.0 * k as f64;
            let x = WIDTH - RIGHT + 12.0;
            let _ = writeln!(
                out,
                r#"<line x1="{x}" y1="{y}" x2="{}" y2="{y}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
                x + 20.0,
                x + 26.0,
                y + 4.0,
                escape(&s.label)
            );
        }
    }
}

/// Line chart with auto-scaled axes.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let f = Frame {
        x: range(
            series
                .iter()
                .flat_map(|s| s.points.iter().filter(|p| p.1.is_finite()).map(|p| p.0)),
        ),
        y: range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1))),
    };
    let mut out = String::new();
    open(&mut out, title);
    axes(&mut out, &f, x_label, y_label);
    polylines(&mut out, &f, series, true);
    out.push_str("</svg>\n");
    out
}

/// Blue (low) → white → red (high).
fn color(t: f64) -> String {
    let t = t.clamp(0.0, 1.0);
    let (r, g, b) = if t < 0.5 {
        let u = t / 0.5;
        (40.0 + 215.0 * u, 80.0 + 175.0 * u, 200.0 + 55.0 * u)
    } else {
        let u = (t - 0.5) / 0.5;
        (255.0 - 35.0 * u, 255.0 - 215.0 * u, 255.0 - 215.0 * u)
    };
    format!("#{:02x}{:02x}{:02x}", r as u8, g as u8, b as u8)
}

/// Heat map of `values[i][j]` at `(xs[j], ys[i])`. The colour range is the
/// min/max over finite, unmasked cells and is returned so callers can record
/// it; masked cells are grey. `overlay` lines are drawn on top.
pub fn heat_map(
    title: &str,
    x_label: &str,
    y_label: &str,
    xs: &[f64],
    ys: &[f64],
    values: &[Vec<f64>],
    mask: Option<&[Vec<bool>]>,
    overlay: &[Series],
) -> (String, (f64, f64)) {
    let visible = |i: usize, j: usize| mask.is_none_or(|m| m[i][j]);
    let scale = range((0..ys.len()).flat_map(|i| {
        (0..xs.len())
            .filter(move |j| visible(i, *j))
            .map(move |j| values[i][j])
    }));
    let f = Frame {
        x: range(xs.iter().cloned()),
        y: range(ys.iter().cloned()),
    };
    // half the local grid spacing
    let half = |v: &[f64], k: usize| -> f64 {
        if v.len() < 2 {
            return 0.5;
        }
        let (a, b) = (k.saturating_sub(1), (k + 1).min(v.len() - 1));
        0.5 * (v[b] - v[a]) / (b - a) as f64
    };
    let mut out = String::new();
    open(&mut out, title);
    for (i, y) in ys.iter().enumerate() {
        for (j, x) in xs.iter().enumerate() {
            let fill = if !visible(i, j) || !values[i][j].is_finite() {
                "#bbbbbb".to_string()
            } else {
                color((values[i][j] - scale.0) / (scale.1 - scale.0))
            };
            let (hx, hy) = (half(xs, j), half(ys, i));
            let (px0, px1) = (f.px((x - hx).max(f.x.0)), f.px((x + hx).min(f.x.1)));
            let (py0, py1) = (f.py((y + hy).min(f.y.1)), f.py((y - hy).max(f.y.0)));
            let _ = writeln!(
                out,
                r#"<rect x="{px0:.2}" y="{py0:.2}" width="{:.2}" height="{:.2}" fill="{fill}"/>"#,
                (px1 - px0).max(0.0) + 0.3,
                (py1 - py0).max(0.0) + 0.3
            );
        }
    }
    axes(&mut out, &f, x_label, y_label);
    polylines(&mut out, &f, overlay, true);
    // colour bar
    let bx = WIDTH - RIGHT + 12.0;
    let by = TOP + 20.0 + 18.0 * overlay.len() as f64;
    let bh = HEIGHT - BOTTOM - by;
    for k in 0..50 {
        let t = 1.0 - k as f64 / 49.0;
        let _ = writeln!(
            out,
            r#"<rect x="{bx}" y="{:.2}" width="16" height="{:.2}" fill="{}"/>"#,
            by + bh * k as f64 / 50.0,
            bh / 50.0 + 0.3,
            color(t)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">{}</text>"#,
        bx + 22.0,
        by + 10.0,
        tick(scale.1)
    );
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}">{}</text>"#,
        bx + 22.0,
        by + bh,
        tick(scale.0)
    );
    out.push_str("</svg>\n");
    (out, scale)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_chart_is_well_formed() {
        let s = Series::new(
            "a<b",
            vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 3.0), (3.0, 4.0)],
        );
        let svg = line_chart("t", "x", "y", &[s]);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn heat_map_reports_scale_over_visible_cells() {
        let values = vec![vec![1.0, 2.0], vec![3.0, 100.0]];
        let mask = vec![vec![true, true], vec![true, false]];
        let (svg, scale) = heat_map(
            "m",
            "x",
            "y",
            &[0.0, 1.0],
            &[0.0, 1.0],
            &values,
            Some(&mask),
            &[],
        );
        assert_eq!(scale, (1.0, 3.0));
        assert!(svg.contains("#bbbbbb"));
    }
}
