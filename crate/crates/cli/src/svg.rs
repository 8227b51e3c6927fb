//! Self-contained SVG renderings: line charts and heatmaps.

use std::fmt::Write as _;

const WIDTH: f64 = 880.0;
const HEIGHT: f64 = 560.0;
const LEFT: f64 = 82.0;
const RIGHT: f64 = 150.0;
const TOP: f64 = 48.0;
const BOTTOM: f64 = 62.0;
const TICKS: usize = 6;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

/// Viridis control points from dark purple to yellow.
const VIRIDIS: [(f64, f64, f64); 9] = [
    (0.267, 0.005, 0.329),
    (0.281, 0.156, 0.469),
    (0.244, 0.288, 0.537),
    (0.191, 0.407, 0.556),
    (0.147, 0.511, 0.557),
    (0.128, 0.614, 0.538),
    (0.208, 0.719, 0.473),
    (0.478, 0.821, 0.318),
    (0.993, 0.906, 0.144),
];

/// One labeled polyline with markers.
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

struct Frame {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

impl Frame {
    fn from_bounds(mut x_min: f64, mut x_max: f64, mut y_min: f64, mut y_max: f64) -> Frame {
        if !(x_max > x_min) {
            x_min -= 1.0;
            x_max += 1.0;
        }
        if !(y_max > y_min) {
            y_min -= 1.0;
            y_max += 1.0;
        }
        let (px, py) = (0.04 * (x_max - x_min), 0.06 * (y_max - y_min));
        Frame { x_min: x_min - px, x_max: x_max + px, y_min: y_min - py, y_max: y_max + py }
    }

    fn x(&self, v: f64) -> f64 {
        LEFT + (v - self.x_min) / (self.x_max - self.x_min) * (WIDTH - LEFT - RIGHT)
    }

    fn y(&self, v: f64) -> f64 {
        TOP + (1.0 - (v - self.y_min) / (self.y_max - self.y_min)) * (HEIGHT - TOP - BOTTOM)
    }
}

/// Renders labeled series as a line chart with axes and a legend.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series]) -> String {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .collect();
    let frame = match pts.iter().copied().reduce(|a, b| (a.0.min(b.0), a.1.min(b.1))) {
        Some(lo) => {
            let hi = pts.iter().copied().reduce(|a, b| (a.0.max(b.0), a.1.max(b.1))).unwrap();
            Frame::from_bounds(lo.0, hi.0, lo.1, hi.1)
        }
        None => Frame::from_bounds(0.0, 1.0, 0.0, 1.0),
    };

    let mut out = open_svg(title);
    axes(&mut out, &frame, x_label, y_label);
    for (si, s) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut path = String::new();
        for &(x, y) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let _ = write!(path, "{:.2},{:.2} ", frame.x(x), frame.y(y));
        }
        let _ = writeln!(
            out,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.8\" points=\"{}\"/>",
            path.trim_end()
        );
        for &(x, y) in s.points.iter().filter(|(x, y)| x.is_finite() && y.is_finite()) {
            let _ = writeln!(
                out,
                "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{color}\"/>",
                frame.x(x),
                frame.y(y)
            );
        }
        let ly = TOP + 14.0 + 18.0 * si as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            out,
            "<line x1=\"{lx:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{color}\" stroke-width=\"2.4\"/>",
            ly - 4.0,
            lx + 18.0,
            ly - 4.0
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{ly:.2}\" font-size=\"12\">{}</text>",
            lx + 24.0,
            escape(&s.label)
        );
    }
    out.push_str("</svg>\n");
    out
}

/// Renders a regular grid of values (rows over `ys`, columns over `xs`) as a
/// colored matrix with a scale bar.
pub fn heatmap(title: &str, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64], values: &[f64]) -> String {
    let frame = Frame {
        x_min: 0.0,
        x_max: xs.len() as f64,
        y_min: 0.0,
        y_max: ys.len() as f64,
    };
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let v_min = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let v_max = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = if v_max > v_min { v_max - v_min } else { 1.0 };

    let mut out = open_svg(title);
    for (yi, _) in ys.iter().enumerate() {
        for (xi, _) in xs.iter().enumerate() {
            let v = values[yi * xs.len() + xi];
            let t = if v.is_finite() { (v - v_min) / span } else { 0.0 };
            let x0 = frame.x(xi as f64);
            let y0 = frame.y((yi + 1) as f64);
            let _ = writeln!(
                out,
                "<rect x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{}\"/>",
                frame.x((xi + 1) as f64) - x0,
                frame.y(yi as f64) - y0,
                viridis(t)
            );
        }
    }
    grid_labels(&mut out, &frame, x_label, y_label, xs, ys);
    colorbar(&mut out, v_min, v_max);
    out.push_str("</svg>\n");
    out
}

fn open_svg(title: &str) -> String {
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" font-family=\"sans-serif\">\n"
    );
    out.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"26\" font-size=\"16\" text-anchor=\"middle\">{}</text>",
        (LEFT + WIDTH - RIGHT) / 2.0,
        escape(title)
    );
    out
}

fn axes(out: &mut String, frame: &Frame, x_label: &str, y_label: &str) {
    let (x0, x1) = (LEFT, WIDTH - RIGHT);
    let (y0, y1) = (HEIGHT - BOTTOM, TOP);
    for i in 0..TICKS {
        let f = i as f64 / (TICKS - 1) as f64;
        let xv = frame.x_min + f * (frame.x_max - frame.x_min);
        let yv = frame.y_min + f * (frame.y_max - frame.y_min);
        let xp = frame.x(xv);
        let yp = frame.y(yv);
        let _ = writeln!(
            out,
            "<line x1=\"{xp:.2}\" y1=\"{y1:.2}\" x2=\"{xp:.2}\" y2=\"{y0:.2}\" stroke=\"#dddddd\"/>"
        );
        let _ = writeln!(
            out,
            "<line x1=\"{x0:.2}\" y1=\"{yp:.2}\" x2=\"{x1:.2}\" y2=\"{yp:.2}\" stroke=\"#dddddd\"/>"
        );
        let _ = writeln!(
            out,
            "<text x=\"{xp:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            y0 + 16.0,
            fmt_num(xv)
        );
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            x0 - 6.0,
            yp + 4.0,
            fmt_num(yv)
        );
    }
    let _ = writeln!(
        out,
        "<rect x=\"{x0:.2}\" y=\"{y1:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"none\" stroke=\"#333333\"/>",
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (x0 + x1) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>",
        (y0 + y1) / 2.0,
        (y0 + y1) / 2.0,
        escape(y_label)
    );
}

fn grid_labels(out: &mut String, frame: &Frame, x_label: &str, y_label: &str, xs: &[f64], ys: &[f64]) {
    let y0 = HEIGHT - BOTTOM;
    for (xi, &xv) in xs.iter().enumerate() {
        let xp = frame.x(xi as f64 + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{xp:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"middle\">{}</text>",
            y0 + 16.0,
            fmt_num(xv)
        );
    }
    for (yi, &yv) in ys.iter().enumerate() {
        let yp = frame.y(yi as f64 + 0.5);
        let _ = writeln!(
            out,
            "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\" text-anchor=\"end\">{}</text>",
            LEFT - 6.0,
            yp + 4.0,
            fmt_num(yv)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\">{}</text>",
        (LEFT + WIDTH - RIGHT) / 2.0,
        HEIGHT - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        "<text x=\"20\" y=\"{:.2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 20 {:.2})\">{}</text>",
        (TOP + HEIGHT - BOTTOM) / 2.0,
        (TOP + HEIGHT - BOTTOM) / 2.0,
        escape(y_label)
    );
}

fn colorbar(out: &mut String, v_min: f64, v_max: f64) {
    let x = WIDTH - RIGHT + 24.0;
    let (top, height) = (TOP, HEIGHT - TOP - BOTTOM);
    let steps = 32;
    for i in 0..steps {
        let t = 1.0 - (i as f64 + 0.5) / steps as f64;
        let y = top + height * i as f64 / steps as f64;
        let _ = writeln!(
            out,
            "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"18\" height=\"{:.2}\" fill=\"{}\"/>",
            height / steps as f64 + 0.5,
            viridis(t)
        );
    }
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>",
        x + 24.0,
        top + 10.0,
        fmt_num(v_max)
    );
    let _ = writeln!(
        out,
        "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"11\">{}</text>",
        x + 24.0,
        top + height,
        fmt_num(v_min)
    );
}

fn viridis(t: f64) -> String {
    let t = t.clamp(0.0, 1.0) * (VIRIDIS.len() - 1) as f64;
    let i = (t.floor() as usize).min(VIRIDIS.len() - 2);
    let f = t - i as f64;
    let (r0, g0, b0) = VIRIDIS[i];
    let (r1, g1, b1) = VIRIDIS[i + 1];
    let channel = |a: f64, b: f64| ((a + f * (b - a)) * 255.0).round() as u8;
    format!("#{:02x}{:02x}{:02x}", channel(r0, r1), channel(g0, g1), channel(b0, b1))
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if v.abs() >= 1e4 || v.abs() < 1e-3 {
        return format!("{v:.2e}");
    }
    let mut s = format!("{v:.4}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
