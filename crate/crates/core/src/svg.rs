//! Minimal standalone SVG writer: line plots and heatmaps.

use std::fmt::Write;

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Fixed-precision number so output bytes do not depend on float formatting.
fn num(x: f64) -> String {
    format!("{x:.3}")
}

#[derive(Debug, Clone)]
pub struct Series {
    pub name: String,
    /// `None` leaves a gap.
    pub values: Vec<Option<f64>>,
}

/// Line plot of several series over shared categorical x positions.
pub fn line_plot(title: &str, x_labels: &[String], series: &[Series], y_label: &str) -> String {
    let (w, h) = (640.0, 400.0);
    let (left, right, top, bottom) = (60.0, 150.0, 40.0, 50.0);
    let pw = w - left - right;
    let ph = h - top - bottom;
    let vals: Vec<f64> = series.iter().flat_map(|s| s.values.iter().flatten().copied()).collect();
    let (mut lo, mut hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        (lo, hi) = (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        lo -= 0.5;
        hi += 0.5;
    }
    let n = x_labels.len().max(1);
    let xpos = |i: usize| left + if n == 1 { pw / 2.0 } else { pw * i as f64 / (n - 1) as f64 };
    let ypos = |v: f64| top + ph * (1.0 - (v - lo) / (hi - lo));

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" font-size="15" text-anchor="middle" font-family="sans-serif">{}</text>"#, num(w / 2.0), esc(title));
    let _ = writeln!(
        s,
        r#"<rect x="{left}" y="{top}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        num(pw),
        num(ph)
    );
    for k in 0..=4 {
        let v = lo + (hi - lo) * k as f64 / 4.0;
        let y = ypos(v);
        let _ = writeln!(s, r##"<line x1="{left}" y1="{0}" x2="{1}" y2="{0}" stroke="#ddd"/>"##, num(y), num(left + pw));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="end" font-family="sans-serif">{}</text>"#, num(left - 4.0), num(y + 3.0), num(v));
    }
    for (i, l) in x_labels.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" text-anchor="middle" font-family="sans-serif">{}</text>"#, num(xpos(i)), num(top + ph + 15.0), esc(l));
    }
    let _ = writeln!(s, r#"<text x="14" y="{}" font-size="11" text-anchor="middle" font-family="sans-serif" transform="rotate(-90 14 {})">{}</text>"#, num(top + ph / 2.0), num(top + ph / 2.0), esc(y_label));
    for (si, ser) in series.iter().enumerate() {
        let color = PALETTE[si % PALETTE.len()];
        let mut path = String::new();
        let mut pen_down = false;
        for (i, v) in ser.values.iter().enumerate() {
            match v {
                Some(v) => {
                    let _ = write!(path, "{}{},{} ", if pen_down { "L" } else { "M" }, num(xpos(i)), num(ypos(*v)));
                    pen_down = true;
                }
                None => pen_down = false,
            }
        }
        if !path.is_empty() {
            let _ = writeln!(s, r#"<path d="{}" fill="none" stroke="{color}" stroke-width="2"/>"#, path.trim_end());
        }
        let ly = top + 14.0 * si as f64 + 8.0;
        let lx = left + pw + 10.0;
        let _ = writeln!(s, r#"<line x1="{0}" y1="{1}" x2="{2}" y2="{1}" stroke="{color}" stroke-width="2"/>"#, num(lx), num(ly), num(lx + 16.0));
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="10" font-family="sans-serif">{}</text>"#, num(lx + 20.0), num(ly + 3.0), esc(&ser.name));
    }
    s.push_str("</svg>\n");
    s
}

fn diverging(v: f64) -> String {
    // -1 blue, 0 white, +1 red
    let t = v.clamp(-1.0, 1.0);
    let (r, g, b) = if t >= 0.0 {
        (255.0, 255.0 * (1.0 - t), 255.0 * (1.0 - t))
    } else {
        (255.0 * (1.0 + t), 255.0 * (1.0 + t), 255.0)
    };
    format!("#{:02x}{:02x}{:02x}", r.round() as u8, g.round() as u8, b.round() as u8)
}

/// Heatmap of `values` in `[-1, 1]` with row and column labels.
pub fn heatmap(title: &str, row_labels: &[String], col_labels: &[String], values: &[Vec<f64>]) -> String {
    let cell = if row_labels.len().max(col_labels.len()) > 20 { 12.0 } else { 24.0 };
    let (left, top) = (90.0, 90.0);
    let w = left + cell * col_labels.len() as f64 + 20.0;
    let h = top + cell * row_labels.len() as f64 + 20.0;
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="0 0 {0} {1}">"#, num(w), num(h));
    let _ = writeln!(s, r#"<rect width="{}" height="{}" fill="white"/>"#, num(w), num(h));
    let _ = writeln!(s, r#"<text x="{}" y="18" font-size="14" text-anchor="middle" font-family="sans-serif">{}</text>"#, num(w / 2.0), esc(title));
    for (i, l) in row_labels.iter().enumerate() {
        let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="9" text-anchor="end" font-family="sans-serif">{}</text>"#, num(left - 3.0), num(top + cell * (i as f64 + 0.5) + 3.0), esc(l));
    }
    for (j, l) in col_labels.iter().enumerate() {
        let x = left + cell * (j as f64 + 0.5);
        let _ = writeln!(s, r#"<text x="{0}" y="{1}" font-size="9" font-family="sans-serif" transform="rotate(-60 {0} {1})">{2}</text>"#, num(x), num(top - 4.0), esc(l));
    }
    for (i, row) in values.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            let _ = writeln!(
                s,
                r#"<rect x="{}" y="{}" width="{c}" height="{c}" fill="{}"><title>{}</title></rect>"#,
                num(left + cell * j as f64),
                num(top + cell * i as f64),
                diverging(v),
                num(v),
                c = num(cell)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}
