use std::fmt::Write;

/// A named sequence of `(x, y)` points, drawn as one polyline.
#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlotStyle {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub width: u32,
    pub height: u32,
}

impl Default for PlotStyle {
    fn default() -> Self {
        PlotStyle {
            title: String::new(),
            x_label: "x".into(),
            y_label: "y".into(),
            log_x: false,
            log_y: false,
            width: 640,
            height: 400,
        }
    }
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;
const TICKS: usize = 5;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

// fixed precision keeps the output independent of formatting heuristics
fn num(v: f64) -> String {
    format!("{v:.2}")
}

fn tick_label(v: f64, log: bool) -> String {
    let v = if log { 10f64.powf(v) } else { v };
    if v != 0.0 && (v.abs() < 1e-3 || v.abs() >= 1e4) {
        format!("{v:.2e}")
    } else {
        format!("{v:.3}")
    }
}

fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo <= 1e-12 * (1.0 + lo.abs()) {
        let pad = if lo == 0.0 { 1.0 } else { 0.5 * lo.abs() };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// Renders a self-contained SVG with axes, one polyline per series (a
/// marker when a series has a single point) and a legend in input order.
/// Points that cannot be shown on a log axis are skipped. The output is a
/// pure function of the inputs.
pub fn emit_plot(series: &[Series], style: &PlotStyle) -> String {
    let tx = |v: f64| if style.log_x { v.log10() } else { v };
    let ty = |v: f64| if style.log_y { v.log10() } else { v };
    let shown: Vec<Vec<(f64, f64)>> = series
        .iter()
        .map(|s| {
            s.points
                .iter()
                .map(|&(x, y)| (tx(x), ty(y)))
                .filter(|(x, y)| x.is_finite() && y.is_finite())
                .collect()
        })
        .collect();
    let (x0, x1) = range(shown.iter().flatten().map(|p| p.0));
    let (y0, y1) = range(shown.iter().flatten().map(|p| p.1));
    let (w, h) = (style.width as f64, style.height as f64);
    let pw = w - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = h - MARGIN_TOP - MARGIN_BOTTOM;
    let px = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let py = |y: f64| MARGIN_TOP + ph - (y - y0) / (y1 - y0) * ph;

    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<?xml version="1.0" encoding="UTF-8"?>
<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {} {}">"#,
        style.width, style.height, style.width, style.height
    );
    let _ = writeln!(out, r#"<rect x="0" y="0" width="{}" height="{}" fill="white"/>"#, style.width, style.height);
    if !style.title.is_empty() {
        let _ = writeln!(
            out,
            r#"<text x="{}" y="24" font-family="sans-serif" font-size="15" text-anchor="middle">{}</text>"#,
            num(MARGIN_LEFT + pw / 2.0),
            escape(&style.title)
        );
    }
    // axes
    let _ = writeln!(
        out,
        r#"<path d="M {} {} L {} {} L {} {}" fill="none" stroke="black" stroke-width="1"/>"#,
        num(MARGIN_LEFT),
        num(MARGIN_TOP),
        num(MARGIN_LEFT),
        num(MARGIN_TOP + ph),
        num(MARGIN_LEFT + pw),
        num(MARGIN_TOP + ph)
    );
    for i in 0..=TICKS {
        let f = i as f64 / TICKS as f64;
        let (vx, vy) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{0}" y2="{2}" stroke="black"/><text x="{0}" y="{3}" font-family="sans-serif" font-size="11" text-anchor="middle">{4}</text>"#,
            num(px(vx)),
            num(MARGIN_TOP + ph),
            num(MARGIN_TOP + ph + 5.0),
            num(MARGIN_TOP + ph + 18.0),
            tick_label(vx, style.log_x)
        );
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="black"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="11" text-anchor="end">{5}</text>"#,
            num(MARGIN_LEFT - 5.0),
            num(py(vy)),
            num(MARGIN_LEFT),
            num(MARGIN_LEFT - 8.0),
            num(py(vy) + 4.0),
            tick_label(vy, style.log_y)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="13" text-anchor="middle">{}</text>"#,
        num(MARGIN_LEFT + pw / 2.0),
        num(h - 12.0),
        escape(&style.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{0}" font-family="sans-serif" font-size="13" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
        num(MARGIN_TOP + ph / 2.0),
        escape(&style.y_label)
    );

    for (i, (s, pts)) in series.iter().zip(&shown).enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        match pts.len() {
            0 => {}
            1 => {
                let _ = writeln!(
                    out,
                    r#"<circle cx="{}" cy="{}" r="4" fill="{color}"/>"#,
                    num(px(pts[0].0)),
                    num(py(pts[0].1))
                );
            }
            _ => {
                let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{},{}", num(px(x)), num(py(y)))).collect();
                let _ = writeln!(
                    out,
                    r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                    coords.join(" ")
                );
            }
        }
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + pw + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/><text x="{3}" y="{4}" font-family="sans-serif" font-size="12">{5}</text>"#,
            num(lx),
            num(ly),
            num(lx + 20.0),
            num(lx + 26.0),
            num(ly + 4.0),
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn is_well_formed(svg: &str) -> bool {
        roxmltree::Document::parse(svg).is_ok()
    }

    #[test]
    fn single_point_is_a_marker() {
        let svg = emit_plot(&[Series::new("m", vec![(1.0, 2.0)])], &PlotStyle::default());
        assert!(svg.contains("<circle"));
        assert!(!svg.contains("<polyline"));
        assert!(is_well_formed(&svg));
    }

    #[test]
    fn legend_follows_input_order_and_output_is_stable() {
        let a = Series::new("Lip(u_r)", vec![(4.0, 0.5), (8.0, 0.25)]);
        let b = Series::new("R/r & bound", vec![(4.0, 0.5), (8.0, 0.25), (16.0, 0.125)]);
        let style = PlotStyle {
            title: "capacity".into(),
            log_x: true,
            log_y: true,
            ..PlotStyle::default()
        };
        let svg = emit_plot(&[a.clone(), b.clone()], &style);
        assert_eq!(svg, emit_plot(&[a, b], &style));
        let first = svg.find("Lip(u_r)").unwrap();
        let second = svg.find("R/r &amp; bound").unwrap();
        assert!(first < second);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(is_well_formed(&svg));
    }

    #[test]
    fn decreasing_series_gives_increasing_pixel_rows() {
        let s = Series::new("m", vec![(5.0, 0.25), (10.0, 0.11), (20.0, 0.05)]);
        let svg = emit_plot(&[s], &PlotStyle::default());
        let line = svg.lines().find(|l| l.starts_with("<polyline")).unwrap();
        let pts = line.split('"').nth(1).unwrap();
        let ys: Vec<f64> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
        assert!(ys.windows(2).all(|w| w[1] > w[0]));
    }
}
