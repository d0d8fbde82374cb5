//! Minimal SVG line charts.

use std::fmt::Write as _;

pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

const W: f64 = 720.0;
const H: f64 = 440.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    (0..=4).map(|i| lo + (hi - lo) * i as f64 / 4.0).collect()
}

fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi > lo {
        (lo, hi)
    } else {
        (lo - 0.5, hi + 0.5)
    }
}

/// Line chart with axes and tick labels. With `logy`, non-positive points
/// are dropped and the y axis shows log₁₀ of the value.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, series: &[Series], logy: bool) -> String {
    let ty = |y: f64| if logy { y.log10() } else { y };
    let keep = |&(x, y): &(f64, f64)| x.is_finite() && y.is_finite() && (!logy || y > 0.0);
    let (x0, x1) = span(series.iter().flat_map(|s| s.points.iter().filter(|p| keep(p)).map(|p| p.0)));
    let (y0, y1) = span(series.iter().flat_map(|s| s.points.iter().filter(|p| keep(p)).map(|p| ty(p.1))));
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#);
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#, W / 2.0, escape(title));
    let (xa, ya) = (H - BOTTOM, LEFT);
    let _ = writeln!(s, r#"<path d="M{ya},{TOP} V{xa} H{}" stroke="black" fill="none"/>"#, W - RIGHT);
    for t in ticks(x0, x1) {
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" font-size="11">{:.3e}</text>"#,
            px(t),
            xa + 16.0,
            t
        );
    }
    for t in ticks(y0, y1) {
        let label = if logy { format!("1e{t:.1}") } else { format!("{t:.3e}") };
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end" font-size="11">{label}</text>"#, ya - 6.0, py(t) + 4.0);
    }
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, W / 2.0, H - 8.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(&if logy { format!("log10 {y_label}") } else { y_label.to_string() })
    );
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> =
            ser.points.iter().filter(|p| keep(p)).map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(ty(y)))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, pts.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="11" fill="{color}">{}</text>"#,
            W - RIGHT - 150.0,
            TOP + 14.0 * (i as f64 + 1.0),
            escape(ser.label)
        );
    }
    s.push_str("</svg>\n");
    s
}
