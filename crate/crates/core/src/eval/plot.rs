//! Standalone SVG line charts.

use std::fmt::Write;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Line chart with a logarithmic x axis (sample counts) and a linear y
/// axis, one polyline and legend entry per series.
pub fn line_chart_svg(title: &str, x_label: &str, y_label: &str, xs: &[usize], series: &[(String, Vec<f64>)]) -> String {
    let (w, h) = (720.0, 460.0);
    let (left, right, top, bottom) = (70.0, 190.0, 40.0, 60.0);
    let pw = w - left - right;
    let ph = h - top - bottom;

    let lx: Vec<f64> = xs.iter().map(|&x| (x.max(1) as f64).log10()).collect();
    let (x0, x1) = (
        lx.first().copied().unwrap_or(0.0),
        lx.last().copied().unwrap_or(1.0),
    );
    let xspan = if x1 > x0 { x1 - x0 } else { 1.0 };
    let finite = series.iter().flat_map(|(_, v)| v.iter().copied()).filter(|v| v.is_finite());
    let (mut y0, mut y1) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !y0.is_finite() {
        (y0, y1) = (0.0, 1.0);
    }
    let pad = ((y1 - y0) * 0.08).max(1e-6);
    let (y0, y1) = (y0 - pad, y1 + pad);
    let px = |v: f64| left + (v - x0) / xspan * pw;
    let py = |v: f64| top + (1.0 - (v - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        left + pw / 2.0,
        escape(title)
    );
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    for (i, &x) in xs.iter().enumerate() {
        let gx = px(lx[i]);
        let _ = writeln!(
            s,
            r##"<line x1="{gx:.2}" y1="{top}" x2="{gx:.2}" y2="{}" stroke="#ddd"/><text x="{gx:.2}" y="{}" text-anchor="middle">{x}</text>"##,
            top + ph,
            top + ph + 16.0
        );
    }
    for t in 0..=5 {
        let v = y0 + (y1 - y0) * t as f64 / 5.0;
        let gy = py(v);
        let _ = writeln!(
            s,
            r##"<line x1="{left}" y1="{gy:.2}" x2="{}" y2="{gy:.2}" stroke="#ddd"/><text x="{}" y="{:.2}" text-anchor="end">{v:.1}</text>"##,
            left + pw,
            left - 6.0,
            gy + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
        left + pw / 2.0,
        h - 18.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    for (i, (name, ys)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = ys
            .iter()
            .zip(&lx)
            .filter(|(y, _)| y.is_finite())
            .map(|(&y, &x)| format!("{:.2},{:.2}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = top + 14.0 + 18.0 * i as f64;
        let lx0 = left + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx0}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{}</text>"#,
            lx0 + 22.0,
            lx0 + 28.0,
            ly + 4.0,
            escape(name)
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
