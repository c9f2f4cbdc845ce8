//! CSV tables and SVG scatter plots for `dynlsm report`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use dynlsm::eval::{distance_ratio_stats, movement_stats, Movement};
use dynlsm::io::{fmt_f64, CsvTable};
use dynlsm::LatentConfiguration;

const PLOT_SIZE: f64 = 480.0;
const MARGIN: f64 = 40.0;

/// Writes every report file into `out` and returns their names.
pub fn write_report(
    positions: &LatentConfiguration<f64>,
    truth: Option<&LatentConfiguration<f64>>,
    out: &Path,
) -> dynlsm::Result<Vec<String>> {
    let mut written = Vec::new();
    let mut save = |name: String, table: CsvTable| -> dynlsm::Result<()> {
        table.write(out.join(&name))?;
        written.push(name);
        Ok(())
    };
    save("positions.csv".into(), positions_table(positions)?)?;
    save("movements.csv".into(), movements_table(positions)?)?;
    if let Some(truth) = truth {
        save("ratios.csv".into(), ratios_table(positions, truth)?)?;
    }
    let bounds = Bounds::of(positions);
    let width = positions.num_times().to_string().len();
    for t in 0..positions.num_times() {
        let name = format!("snapshot_{:0width$}.svg", t + 1);
        fs::write(out.join(&name), scatter_svg(positions, t, &bounds))?;
        written.push(name);
    }
    Ok(written)
}

/// One row per node and snapshot: `node,time,x1..xd` with 1-based time.
pub fn positions_table(p: &LatentConfiguration<f64>) -> dynlsm::Result<CsvTable> {
    let mut header = vec!["node".to_string(), "time".to_string()];
    header.extend((1..=p.d()).map(|k| format!("x{k}")));
    let mut table = CsvTable::new(header);
    for i in 0..p.n() {
        for t in 0..p.num_times() {
            let mut row = vec![i.to_string(), (t + 1).to_string()];
            row.extend(p.position(i, t).iter().map(|&x| fmt_f64(x)));
            table.push_row(row)?;
        }
    }
    Ok(table)
}

/// Squared movement of every node, one column per transition `t-1 -> t`.
pub fn movements_table(p: &LatentConfiguration<f64>) -> dynlsm::Result<CsvTable> {
    let moves: Vec<Movement> = if p.num_times() < 2 { Vec::new() } else { movement_stats(p)? };
    let mut header = vec!["node".to_string()];
    header.extend(moves.iter().map(|m| format!("t{}_to_t{}", m.to_time, m.to_time + 1)));
    let mut table = CsvTable::new(header);
    for i in 0..p.n() {
        let mut row = vec![i.to_string()];
        row.extend(moves.iter().map(|m| fmt_f64(m.squared[i])));
        table.push_row(row)?;
    }
    Ok(table)
}

/// Histogram density of estimated over true pairwise distances on a fixed
/// grid; the density integrates to one over the grid.
pub fn ratios_table(p: &LatentConfiguration<f64>, truth: &LatentConfiguration<f64>) -> dynlsm::Result<CsvTable> {
    let stats = distance_ratio_stats(p, truth)?;
    let mut table = CsvTable::new(["bin_lower", "bin_upper", "density"]);
    for (b, &density) in stats.density.iter().enumerate() {
        let lower = b as f64 * stats.bin_width;
        table.push_row(vec![fmt_f64(lower), fmt_f64(lower + stats.bin_width), fmt_f64(density)])?;
    }
    Ok(table)
}

/// Shared square viewport so that every snapshot uses the same axes.
struct Bounds {
    centre: [f64; 2],
    half: f64,
}

impl Bounds {
    fn of(p: &LatentConfiguration<f64>) -> Self {
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for chunk in p.as_flat().chunks(p.d()) {
            for k in 0..p.d().min(2) {
                lo[k] = lo[k].min(chunk[k]);
                hi[k] = hi[k].max(chunk[k]);
            }
        }
        if p.d() < 2 {
            lo[1] = 0.0;
            hi[1] = 0.0;
        }
        let half = (0..2).map(|k| (hi[k] - lo[k]) / 2.0).fold(0.0, f64::max).max(1e-9) * 1.05;
        Self { centre: [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0], half }
    }

    fn to_px(&self, x: f64, y: f64) -> (f64, f64) {
        let scale = (PLOT_SIZE - 2.0 * MARGIN) / (2.0 * self.half);
        (
            MARGIN + (x - self.centre[0] + self.half) * scale,
            PLOT_SIZE - MARGIN - (y - self.centre[1] + self.half) * scale,
        )
    }
}

/// Equal-aspect scatter plot of snapshot `t`, first two coordinates.
fn scatter_svg(p: &LatentConfiguration<f64>, t: usize, b: &Bounds) -> String {
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{PLOT_SIZE}" height="{PLOT_SIZE}" viewBox="0 0 {PLOT_SIZE} {PLOT_SIZE}">"#
    );
    let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let (x0, y0) = b.to_px(b.centre[0] - b.half, b.centre[1] - b.half);
    let (x1, y1) = b.to_px(b.centre[0] + b.half, b.centre[1] + b.half);
    let _ = writeln!(
        svg,
        r#"<rect x="{x0:.2}" y="{y1:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        x1 - x0,
        y0 - y1
    );
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="14">snapshot {}</text>"#,
        PLOT_SIZE / 2.0,
        MARGIN / 2.0,
        t + 1
    );
    for i in 0..p.n() {
        let x = p.position(i, t);
        let (cx, cy) = b.to_px(x[0], x.get(1).copied().unwrap_or(0.0));
        let _ = writeln!(
            svg,
            r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="3" fill="steelblue"><title>node {i}</title></circle>"#
        );
    }
    svg.push_str("</svg>\n");
    svg
}
