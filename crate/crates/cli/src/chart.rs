//! Minimal standalone SVG line charts with confidence bands.

use std::fmt::Write;

#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: f64,
    pub mean: f64,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Figure {
    /// File stem.
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
}

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 440.0;
const LEFT: f64 = 72.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 56.0;
const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

/// Round step for about `target` intervals over `span`.
fn nice_step(span: f64, target: f64) -> f64 {
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.0 {
        2.0
    } else if norm < 7.0 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

fn decimals(step: f64) -> usize {
    if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    }
}

struct Axis {
    lo: f64,
    hi: f64,
    step: f64,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>) -> Self {
        let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if !lo.is_finite() {
            (lo, hi) = (0.0, 1.0);
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            let pad = if lo == 0.0 { 1.0 } else { lo.abs() * 0.1 };
            (lo, hi) = (lo - pad, hi + pad);
        }
        let step = nice_step(hi - lo, 5.0);
        Self { lo: (lo / step).floor() * step, hi: (hi / step).ceil() * step, step }
    }

    fn ticks(&self) -> Vec<f64> {
        let count = ((self.hi - self.lo) / self.step).round() as i64;
        (0..=count).map(|i| self.lo + i as f64 * self.step).collect()
    }

    fn map(&self, v: f64, from: f64, to: f64) -> f64 {
        from + (v - self.lo) / (self.hi - self.lo) * (to - from)
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Render `fig`; identical figures always give identical bytes.
pub fn render_svg(fig: &Figure) -> String {
    let points = || fig.series.iter().flat_map(|s| s.points.iter());
    let xa = Axis::fit(points().map(|p| p.x));
    let ya = Axis::fit(points().flat_map(|p| [p.lo, p.hi, p.mean]));
    let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, HEIGHT - BOTTOM, TOP);
    let px = |v: f64| xa.map(v, x0, x1);
    let py = |v: f64| ya.map(v, y0, y1);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{:.1}" y="22" text-anchor="middle" font-size="14">{}</text>"#, (x0 + x1) / 2.0, escape(&fig.title));

    let xd = decimals(xa.step);
    let yd = decimals(ya.step);
    for t in xa.ticks() {
        let x = px(t);
        let _ = writeln!(s, r##"<line x1="{x:.1}" y1="{y0:.1}" x2="{x:.1}" y2="{y1:.1}" stroke="#e5e5e5"/>"##);
        let _ = writeln!(s, r#"<text x="{x:.1}" y="{:.1}" text-anchor="middle">{t:.xd$}</text>"#, y0 + 18.0);
    }
    for t in ya.ticks() {
        let y = py(t);
        let _ = writeln!(s, r##"<line x1="{x0:.1}" y1="{y:.1}" x2="{x1:.1}" y2="{y:.1}" stroke="#e5e5e5"/>"##);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{t:.yd$}</text>"#, x0 - 6.0, y + 4.0);
    }
    let _ = writeln!(s, r#"<rect x="{x0:.1}" y="{y1:.1}" width="{:.1}" height="{:.1}" fill="none" stroke="black"/>"#, x1 - x0, y0 - y1);
    let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#, (x0 + x1) / 2.0, HEIGHT - 14.0, escape(&fig.x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{:.1}" text-anchor="middle" transform="rotate(-90 18 {:.1})">{}</text>"#,
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(&fig.y_label)
    );

    for (i, series) in fig.series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = &series.points;
        if pts.iter().any(|p| p.hi > p.lo) {
            let outline: Vec<String> = pts
                .iter()
                .map(|p| format!("{:.1},{:.1}", px(p.x), py(p.hi)))
                .chain(pts.iter().rev().map(|p| format!("{:.1},{:.1}", px(p.x), py(p.lo))))
                .collect();
            let _ = writeln!(s, r#"<polygon points="{}" fill="{color}" fill-opacity="0.18" stroke="none"/>"#, outline.join(" "));
        }
        let line: Vec<String> = pts.iter().map(|p| format!("{:.1},{:.1}", px(p.x), py(p.mean))).collect();
        let _ = writeln!(s, r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, line.join(" "));
        for p in pts {
            let _ = writeln!(s, r#"<circle cx="{:.1}" cy="{:.1}" r="2.5" fill="{color}"/>"#, px(p.x), py(p.mean));
        }
        let ly = TOP + 10.0 + 18.0 * i as f64;
        let lx = x1 + 14.0;
        let _ = writeln!(s, r#"<line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#, lx + 20.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.name));
    }
    s.push_str("</svg>\n");
    s
}

/// The plotted numbers, one row per point.
pub fn render_csv(fig: &Figure) -> String {
    let mut s = String::from("series,x,mean,ci_lo,ci_hi,n\n");
    for series in &fig.series {
        for p in &series.points {
            let name = if series.name.contains([',', '"']) {
                format!("\"{}\"", series.name.replace('"', "\"\""))
            } else {
                series.name.clone()
            };
            let _ = writeln!(s, "{name},{},{},{},{},{}", p.x, p.mean, p.lo, p.hi, p.n);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig(band: bool) -> Figure {
        let points = (1..=3)
            .map(|i| {
                let m = i as f64 * 0.1;
                let h = if band { 0.02 } else { 0.0 };
                Point { x: i as f64, mean: m, lo: m - h, hi: m + h, n: if band { 3 } else { 1 } }
            })
            .collect();
        Figure {
            name: "f".into(),
            title: "spread <test>".into(),
            x_label: "epoch".into(),
            y_label: "sd".into(),
            series: vec![Series { name: "baseline".into(), points }],
        }
    }

    #[test]
    fn single_runs_have_no_band() {
        assert!(!render_svg(&fig(false)).contains("<polygon"));
        assert!(render_svg(&fig(true)).contains("<polygon"));
    }

    #[test]
    fn output_is_stable_and_escaped() {
        let a = render_svg(&fig(true));
        assert_eq!(a, render_svg(&fig(true)));
        assert!(a.contains("spread &lt;test&gt;"));
        assert!(a.starts_with("<svg") && a.ends_with("</svg>\n"));
    }

    #[test]
    fn csv_lists_every_point() {
        let csv = render_csv(&fig(true));
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.contains("baseline,2,0.2,0.18000000000000002,0.22,3"));
    }

    #[test]
    fn nice_steps() {
        assert_eq!(nice_step(10.0, 5.0), 2.0);
        assert_eq!(nice_step(0.3, 5.0), 0.05);
        assert!((nice_step(0.07, 5.0) - 0.01).abs() < 1e-15);
    }

    #[test]
    fn flat_data_still_has_a_range() {
        let a = Axis::fit([2.0, 2.0].into_iter());
        assert!(a.hi > a.lo);
    }
}
