//! Minimal deterministic SVG charts. Every coordinate is printed with a
//! fixed number of decimals so equal inputs give byte-identical files.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;

pub struct Axes<'a> {
    pub title: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    /// Fixed ranges; `None` fits the data.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
}

pub struct Series<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub dashed: bool,
    pub points: &'a [(f64, f64)],
}

pub struct Sample<'a> {
    pub label: &'a str,
    pub color: &'a str,
    pub values: &'a [f64],
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

/// Roughly five round-numbered ticks covering `[lo, hi]`.
fn ticks(lo: f64, hi: f64) -> (Vec<f64>, usize) {
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let decimals = (-step.log10().floor()).max(0.0) as usize;
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    ((first..=last).map(|k| k as f64 * step).collect(), decimals)
}

fn padded_range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| {
        (a.min(v), b.max(v))
    });
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
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

fn open(out: &mut String, axes: &Axes, frame: &Frame) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        out,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(axes.title)
    );
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    let (xt, xd) = ticks(frame.x.0, frame.x.1);
    for t in xt {
        let x = frame.px(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x:.2}" y1="{y0:.2}" x2="{x:.2}" y2="{y1:.2}" stroke="#e5e5e5"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{t:.xd$}</text>"##,
            y0 + 16.0
        );
    }
    let (yt, yd) = ticks(frame.y.0, frame.y.1);
    for t in yt {
        let y = frame.py(t);
        let _ = writeln!(
            out,
            r##"<line x1="{x0:.2}" y1="{y:.2}" x2="{x1:.2}" y2="{y:.2}" stroke="#e5e5e5"/><text x="{:.2}" y="{:.2}" text-anchor="end">{t:.yd$}</text>"##,
            x0 - 6.0,
            y + 4.0
        );
    }
    let _ = writeln!(
        out,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        out,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        (x0 + x1) / 2.0,
        HEIGHT - 14.0,
        escape(axes.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="18" y="{:.2}" text-anchor="middle" transform="rotate(-90 18 {:.2})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(axes.y_label)
    );
}

/// Legend box in the top-right (`top`) or bottom-right corner of the plot.
fn legend(out: &mut String, entries: &[(&str, &str, bool)], top: bool) {
    for (i, (label, color, dashed)) in entries.iter().enumerate() {
        let y = if top {
            TOP + 16.0 + 18.0 * i as f64
        } else {
            HEIGHT - BOTTOM - 14.0 - 18.0 * (entries.len() - 1 - i) as f64
        };
        let x = WIDTH - RIGHT - 170.0;
        let dash = if *dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let _ = writeln!(
            out,
            r#"<line x1="{x:.2}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 24.0,
            x + 30.0,
            y + 4.0,
            escape(label)
        );
    }
}

pub fn line_chart(axes: &Axes, series: &[Series]) -> String {
    let frame = Frame {
        x: axes.x_range.unwrap_or_else(|| {
            padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)))
        }),
        y: axes.y_range.unwrap_or_else(|| {
            padded_range(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)))
        }),
    };
    let mut out = String::new();
    open(&mut out, axes, &frame);
    for s in series {
        let dash = if s.dashed {
            r#" stroke-dasharray="6 4""#
        } else {
            ""
        };
        let mut pts = String::new();
        for (i, &(x, y)) in s.points.iter().enumerate() {
            if i > 0 {
                pts.push(' ');
            }
            let _ = write!(pts, "{:.2},{:.2}", frame.px(x), frame.py(y));
        }
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{}" stroke-width="1.5"{dash} points="{pts}"/>"#,
            s.color
        );
    }
    let entries: Vec<_> = series
        .iter()
        .map(|s| (s.label, s.color, s.dashed))
        .collect();
    legend(&mut out, &entries, false);
    out.push_str("</svg>\n");
    out
}

/// Overlaid outline histograms sharing one set of bins.
pub fn histogram(axes: &Axes, samples: &[Sample], bins: usize) -> String {
    let bins = bins.max(1);
    let (lo, hi) = padded_range(samples.iter().flat_map(|s| s.values.iter().copied()));
    let width = (hi - lo) / bins as f64;
    let counts: Vec<Vec<f64>> = samples
        .iter()
        .map(|s| {
            let mut c = vec![0.0; bins];
            for &v in s.values {
                let b = (((v - lo) / width) as usize).min(bins - 1);
                c[b] += 1.0;
            }
            let n = s.values.len().max(1) as f64;
            c.into_iter().map(|k| k / (n * width)).collect()
        })
        .collect();
    let top = counts.iter().flatten().cloned().fold(0.0, f64::max);
    let frame = Frame {
        x: (lo, hi),
        y: (0.0, if top > 0.0 { top * 1.1 } else { 1.0 }),
    };
    let mut out = String::new();
    open(&mut out, axes, &frame);
    for (s, c) in samples.iter().zip(&counts) {
        let mut d = format!("M{:.2},{:.2}", frame.px(lo), frame.py(0.0));
        for (b, &h) in c.iter().enumerate() {
            let (a, e) = (lo + b as f64 * width, lo + (b + 1) as f64 * width);
            let _ = write!(
                d,
                " L{:.2},{:.2} L{:.2},{:.2}",
                frame.px(a),
                frame.py(h),
                frame.px(e),
                frame.py(h)
            );
        }
        let _ = write!(d, " L{:.2},{:.2}", frame.px(hi), frame.py(0.0));
        let _ = writeln!(
            out,
            r#"<path d="{d}" fill="{}" fill-opacity="0.15" stroke="{}" stroke-width="1.5"/>"#,
            s.color, s.color
        );
    }
    let entries: Vec<_> = samples.iter().map(|s| (s.label, s.color, false)).collect();
    legend(&mut out, &entries, true);
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ticks_are_round() {
        let (t, d) = ticks(0.0, 1.0);
        assert_eq!(t, vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert_eq!(d, 1);
        let (t, d) = ticks(-1234.0, -980.0);
        assert_eq!(d, 0);
        assert!(t.iter().all(|v| v % 50.0 == 0.0));
    }

    #[test]
    fn labels_are_escaped() {
        let axes = Axes {
            title: "a < b & c",
            x_label: "x",
            y_label: "y",
            x_range: None,
            y_range: None,
        };
        let svg = line_chart(&axes, &[]);
        assert!(svg.contains("a &lt; b &amp; c"));
    }

    #[test]
    fn histogram_is_deterministic() {
        let axes = Axes {
            title: "h",
            x_label: "v",
            y_label: "density",
            x_range: None,
            y_range: None,
        };
        let vals = [0.1, 0.2, 0.2, 0.5, 0.9];
        let s = [Sample {
            label: "a",
            color: "red",
            values: &vals,
        }];
        assert_eq!(histogram(&axes, &s, 4), histogram(&axes, &s, 4));
        assert!(histogram(&axes, &s, 4).starts_with("<svg"));
    }
}
