//! Minimal standalone SVG charts.

use std::fmt::Write;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 60.0;
const MARGIN_RIGHT: f64 = 140.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 50.0;

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn header(out: &mut String, width: f64, height: f64, title: &str) {
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(out, r#"<rect width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="24" text-anchor="middle" font-size="14">{}</text>"#,
        width / 2.0,
        escape(title)
    );
}

pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Line chart with a fixed y range.
pub fn line_chart(title: &str, x_label: &str, y_label: &str, y_range: (f64, f64), series: &[Series]) -> String {
    let mut out = String::new();
    header(&mut out, WIDTH, HEIGHT, title);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;

    let (x_min, x_max) = series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)));
    let (x_min, x_max) = if x_min.is_finite() && x_max > x_min {
        (x_min, x_max)
    } else {
        (0.0, 1.0)
    };
    let (y_min, y_max) = y_range;
    let sx = |x: f64| MARGIN_LEFT + (x - x_min) / (x_max - x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y_min) / (y_max - y_min)) * plot_h;

    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    for t in 0..=4 {
        let f = t as f64 / 4.0;
        let y = y_min + f * (y_max - y_min);
        let x = x_min + f * (x_max - x_min);
        let _ = writeln!(
            out,
            r##"<line x1="{MARGIN_LEFT}" x2="{:.1}" y1="{:.1}" y2="{:.1}" stroke="#dddddd"/>"##,
            MARGIN_LEFT + plot_w,
            sy(y),
            sy(y)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{:.2}</text>"#,
            MARGIN_LEFT - 6.0,
            sy(y) + 4.0,
            y
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            sx(x),
            MARGIN_TOP + plot_h + 18.0,
            format_tick(x)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 10.0,
        escape(x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="16" y="{:.1}" text-anchor="middle" transform="rotate(-90 16 {:.1})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape(y_label)
    );

    for (n, s) in series.iter().enumerate() {
        let color = PALETTE[n % PALETTE.len()];
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y.clamp(y_min, y_max))))
            .collect();
        let _ = writeln!(
            out,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            pts.join(" ")
        );
        let ly = MARGIN_TOP + 10.0 + 18.0 * n as f64;
        let lx = MARGIN_LEFT + plot_w + 12.0;
        let _ = writeln!(
            out,
            r#"<line x1="{lx:.1}" x2="{:.1}" y1="{ly:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/>"#,
            lx + 18.0
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            lx + 24.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

fn format_tick(x: f64) -> String {
    if x.fract() == 0.0 {
        format!("{x:.0}")
    } else {
        format!("{x:.2}")
    }
}

/// Heatmap with one annotated cell per value, shaded relative to the
/// largest value.
pub fn heatmap(
    title: &str,
    row_title: &str,
    col_title: &str,
    row_labels: &[String],
    col_labels: &[String],
    values: &[Vec<f64>],
    annotations: &[Vec<String>],
) -> String {
    let cell = 56.0;
    let left = 110.0;
    let top = 70.0;
    let width = left + cell * col_labels.len() as f64 + 30.0;
    let height = top + cell * row_labels.len() as f64 + 30.0;
    let max = values
        .iter()
        .flatten()
        .copied()
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);

    let mut out = String::new();
    header(&mut out, width.max(320.0), height, title);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="48" text-anchor="middle">{}</text>"#,
        left + cell * col_labels.len() as f64 / 2.0,
        escape(col_title)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        top + cell * row_labels.len() as f64 / 2.0,
        top + cell * row_labels.len() as f64 / 2.0,
        escape(row_title)
    );
    for (c, label) in col_labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            left + cell * (c as f64 + 0.5),
            top - 6.0,
            escape(label)
        );
    }
    for (r, label) in row_labels.iter().enumerate() {
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            left - 6.0,
            top + cell * (r as f64 + 0.5) + 4.0,
            escape(label)
        );
        for (c, &v) in values[r].iter().enumerate() {
            let shade = (v / max).clamp(0.0, 1.0);
            let level = (255.0 * (1.0 - shade)).round() as u8;
            let text_color = if shade > 0.6 { "white" } else { "black" };
            let _ = writeln!(
                out,
                r##"<rect x="{:.1}" y="{:.1}" width="{cell}" height="{cell}" fill="#{level:02x}{level:02x}ff" stroke="#999999"/>"##,
                left + cell * c as f64,
                top + cell * r as f64
            );
            let _ = writeln!(
                out,
                r#"<text x="{:.1}" y="{:.1}" text-anchor="middle" fill="{text_color}">{}</text>"#,
                left + cell * (c as f64 + 0.5),
                top + cell * (r as f64 + 0.5) + 4.0,
                escape(&annotations[r][c])
            );
        }
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn charts_are_well_formed() {
        let svg = line_chart(
            "P <trajectory>",
            "step",
            "P",
            (0.0, 1.0),
            &[Series {
                name: "a&b".into(),
                points: vec![(0.0, 0.1), (1.0, 0.5), (2.0, 2.0)],
            }],
        );
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("&lt;trajectory&gt;") && svg.contains("a&amp;b"));

        let h = heatmap(
            "t",
            "rows",
            "cols",
            &["r".into()],
            &["c1".into(), "c2".into()],
            &[vec![0.0, 3.0]],
            &[vec!["0".into(), "3".into()]],
        );
        assert_eq!(h.matches("<rect").count(), 3);
    }
}
