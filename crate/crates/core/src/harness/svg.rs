//! Minimal static SVG line charts for emitted panel CSVs. Batch use only;
//! the CSVs are the primary output.

use super::csvio::read_csv;
use super::HarnessError;
use std::fmt::Write as _;
use std::path::Path;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 6] = [
    "#555555", "#c0392b", "#2980b9", "#27ae60", "#8e44ad", "#e67e22",
];

/// Render a CSV panel (first column = x, remaining columns = lines) as an
/// SVG line chart.
pub fn render_line_chart(csv_path: &Path, svg_path: &Path) -> Result<(), HarnessError> {
    let io = |msg: String| HarnessError::Io {
        path: csv_path.to_path_buf(),
        message: msg,
    };
    let (header, raw) = read_csv(csv_path).map_err(|e| io(e.to_string()))?;
    if header.len() < 2 || raw.is_empty() {
        return Err(io("panel needs at least two columns and one row".into()));
    }
    let mut rows = Vec::with_capacity(raw.len());
    for r in &raw {
        let parsed: Result<Vec<f64>, _> = r.iter().map(|c| c.parse::<f64>()).collect();
        rows.push(parsed.map_err(|e| io(format!("bad float: {e}")))?);
    }

    let x_range = min_max(rows.iter().map(|r| r[0]));
    let y_range = min_max(rows.iter().flat_map(|r| r[1..].iter().copied()));
    let x_span = (x_range.1 - x_range.0).max(f64::MIN_POSITIVE);
    let y_span = (y_range.1 - y_range.0).max(f64::MIN_POSITIVE);
    let to_x = |v: f64| MARGIN + (v - x_range.0) / x_span * (WIDTH - 2.0 * MARGIN);
    let to_y = |v: f64| HEIGHT - MARGIN - (v - y_range.0) / y_span * (HEIGHT - 2.0 * MARGIN);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    // Axes.
    let _ = writeln!(
        svg,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{t}" x2="{m}" y2="{b}" stroke="black"/>"#,
        m = MARGIN,
        b = HEIGHT - MARGIN,
        r = WIDTH - MARGIN,
        t = MARGIN,
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">{}</text>"#,
        WIDTH / 2.0,
        HEIGHT - 14.0,
        header[0]
    );
    for (k, r) in [(0usize, x_range.0), (1, x_range.1)] {
        let x = if k == 0 { MARGIN } else { WIDTH - MARGIN };
        let _ = writeln!(
            svg,
            r#"<text x="{x}" y="{}" font-size="11" text-anchor="middle">{r:.3}</text>"#,
            HEIGHT - MARGIN + 16.0
        );
    }
    for (k, r) in [(0usize, y_range.0), (1, y_range.1)] {
        let y = if k == 0 { HEIGHT - MARGIN } else { MARGIN };
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{r:.3}</text>"#,
            MARGIN - 6.0,
            y + 4.0
        );
    }

    for (c, name) in header.iter().enumerate().skip(1) {
        let color = PALETTE[(c - 1) % PALETTE.len()];
        let points: Vec<String> = rows
            .iter()
            .map(|r| format!("{:.2},{:.2}", to_x(r[0]), to_y(r[c])))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            points.join(" ")
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{name}</text>"#,
            WIDTH - MARGIN + 4.0,
            MARGIN + 16.0 * c as f64
        );
    }
    let _ = writeln!(svg, "</svg>");

    std::fs::write(svg_path, svg).map_err(|e| HarnessError::Io {
        path: svg_path.to_path_buf(),
        message: e.to_string(),
    })
}

fn min_max(values: impl Iterator<Item = f64>) -> (f64, f64) {
    values.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
        (lo.min(v), hi.max(v))
    })
}
