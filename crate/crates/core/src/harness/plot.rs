//! SVG learning curves from an aggregate CSV: one line per unreliability
//! level with a shaded one-standard-deviation band.

use std::fmt::Write as _;
use std::path::Path;

use super::AGGREGATE_HEADER;
use crate::error::{Error, Result};

const WIDTH: f64 = 820.0;
const HEIGHT: f64 = 520.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 150.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 60.0;
/// Longer curves are decimated to about this many vertices.
const MAX_POINTS: usize = 2000;
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub level: f64,
    pub episode: usize,
    pub mean: f64,
    pub std: f64,
}

pub fn read_aggregate_csv<R: std::io::Read>(r: R) -> Result<Vec<AggregateRow>> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers()?.clone();
    if header.iter().ne(AGGREGATE_HEADER) {
        return Err(Error::Schema(format!(
            "expected header {}, found {}",
            AGGREGATE_HEADER.join(","),
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let bad = || Error::Schema(format!("row {}: malformed", i + 2));
        if rec.len() != 4 {
            return Err(bad());
        }
        rows.push(AggregateRow {
            level: rec[0].parse().map_err(|_| bad())?,
            episode: rec[1].parse().map_err(|_| bad())?,
            mean: rec[2].parse().map_err(|_| bad())?,
            std: rec[3].parse().map_err(|_| bad())?,
        });
    }
    Ok(rows)
}

/// Renders `aggregate_csv` to an SVG at `out`. Nothing is written on error.
pub fn emit_plot(aggregate_csv: &Path, out: &Path) -> Result<()> {
    let file = std::fs::File::open(aggregate_csv)?;
    let rows = read_aggregate_csv(std::io::BufReader::new(file))?;
    let svg = render_svg(&rows)?;
    std::fs::write(out, svg).map_err(|source| Error::Output {
        path: out.to_path_buf(),
        source,
    })
}

fn group_by_level(rows: &[AggregateRow]) -> Vec<(f64, Vec<AggregateRow>)> {
    let mut groups: Vec<(f64, Vec<AggregateRow>)> = Vec::new();
    for row in rows {
        match groups.iter_mut().find(|(l, _)| *l == row.level) {
            Some((_, g)) => g.push(*row),
            None => groups.push((row.level, vec![*row])),
        }
    }
    for (_, g) in &mut groups {
        g.sort_by_key(|r| r.episode);
    }
    groups
}

fn nice_step(range: f64) -> f64 {
    let raw = range / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag)
}

pub fn render_svg(rows: &[AggregateRow]) -> Result<String> {
    if rows.is_empty() {
        return Err(Error::Schema("no aggregate rows".into()));
    }
    let groups = group_by_level(rows);

    let x_max = rows.iter().map(|r| r.episode).max().unwrap_or(0).max(1) as f64;
    let mut y_min = rows.iter().map(|r| r.mean - r.std).fold(f64::INFINITY, f64::min);
    let mut y_max = rows.iter().map(|r| r.mean + r.std).fold(f64::NEG_INFINITY, f64::max);
    if !(y_min.is_finite() && y_max.is_finite()) {
        return Err(Error::Schema("non-finite values".into()));
    }
    if y_max - y_min < 1e-9 {
        y_min -= 1.0;
        y_max += 1.0;
    }
    let pad = 0.05 * (y_max - y_min);
    let (y_min, y_max) = (y_min - pad, y_max + pad);

    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + x / x_max * plot_w;
    let sy = |y: f64| MARGIN_TOP + (y_max - y) / (y_max - y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // Axes and ticks.
    let (x0, y0) = (MARGIN_LEFT, MARGIN_TOP + plot_h);
    let _ = writeln!(
        svg,
        r#"<path d="M{x0},{MARGIN_TOP} L{x0},{y0} L{},{y0}" fill="none" stroke="black"/>"#,
        MARGIN_LEFT + plot_w
    );
    let xs = nice_step(x_max);
    let mut x = 0.0;
    while x <= x_max + 1e-9 {
        let px = sx(x);
        let _ = writeln!(
            svg,
            r#"<line x1="{px:.2}" y1="{y0}" x2="{px:.2}" y2="{}" stroke="black"/><text x="{px:.2}" y="{}" text-anchor="middle">{x}</text>"#,
            y0 + 5.0,
            y0 + 20.0
        );
        x += xs;
    }
    let ys = nice_step(y_max - y_min);
    let mut y = (y_min / ys).ceil() * ys;
    while y <= y_max + 1e-9 {
        let py = sy(y);
        let label = (y / ys).round() * ys;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.2}" x2="{x0}" y2="{py:.2}" stroke="black"/><text x="{}" y="{:.2}" text-anchor="end">{}</text>"#,
            x0 - 5.0,
            x0 - 8.0,
            py + 4.0,
            format_tick(label)
        );
        y += ys;
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle">episodes</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="18" y="{}" text-anchor="middle" transform="rotate(-90 18 {})">return</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0
    );

    for (i, (level, g)) in groups.iter().enumerate() {
        let colour = PALETTE[i % PALETTE.len()];
        let stride = (g.len() / MAX_POINTS).max(1);
        let mut pts: Vec<&AggregateRow> = g.iter().step_by(stride).collect();
        if let Some(last) = g.last() {
            if !std::ptr::eq(*pts.last().unwrap(), last) {
                pts.push(last);
            }
        }
        let mut band = String::new();
        for r in &pts {
            let _ = write!(band, "{:.2},{:.2} ", sx(r.episode as f64), sy(r.mean + r.std));
        }
        for r in pts.iter().rev() {
            let _ = write!(band, "{:.2},{:.2} ", sx(r.episode as f64), sy(r.mean - r.std));
        }
        let _ = writeln!(
            svg,
            r#"<polygon class="band" points="{}" fill="{colour}" fill-opacity="0.2" stroke="none"/>"#,
            band.trim_end()
        );
        let line: Vec<String> = pts
            .iter()
            .map(|r| format!("{:.2},{:.2}", sx(r.episode as f64), sy(r.mean)))
            .collect();
        let _ = writeln!(
            svg,
            r#"<polyline class="curve" data-level="{level}" points="{}" fill="none" stroke="{colour}" stroke-width="1.5"/>"#,
            line.join(" ")
        );
        let ly = MARGIN_TOP + 15.0 + 20.0 * i as f64;
        let lx = MARGIN_LEFT + plot_w + 15.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{colour}" stroke-width="3"/><text x="{}" y="{}">p = {level}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}
