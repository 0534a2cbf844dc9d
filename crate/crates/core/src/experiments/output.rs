//! CSV tables, SVG panels and the run manifest.
//!
//! Numbers are written with 17 significant digits and every file goes
//! through a temporary sibling and a rename, so readers never observe a
//! half-written artifact.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{GeoflowError, Result};

/// Writes `bytes` to `path` via a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| GeoflowError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes).map_err(|e| GeoflowError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| GeoflowError::io(path, e))
}

/// One CSV cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.16e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Text(String::new()), Cell::Num)
    }
}

/// Builds a row from heterogeneous values.
#[macro_export]
macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$($crate::experiments::output::Cell::from($v)),*] };
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        let err = |e: csv::Error| GeoflowError::Config(format!("csv encoding: {e}"));
        w.write_record(&self.header).map_err(err)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(err)?;
        }
        w.into_inner().map_err(|e| GeoflowError::Config(format!("csv encoding: {e}")))
    }
}

/// Writes `table` to `path` and returns the path.
pub fn emit_csv(table: &Table, path: &Path) -> Result<PathBuf> {
    write_atomic(path, &table.to_bytes()?)?;
    Ok(path.to_path_buf())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
    pub color: String,
    pub dashed: bool,
    /// Shaded `(x, lo, hi)` band drawn under the line.
    pub band: Vec<(f64, f64, f64)>,
}

impl Series {
    pub fn line(name: &str, points: Vec<(f64, f64)>, color: &str) -> Self {
        Series {
            name: name.to_string(),
            points,
            color: color.to_string(),
            dashed: false,
            band: Vec::new(),
        }
    }
}

/// Scalar field drawn as coloured cells behind the series; `values[row][col]`
/// with row 0 at the bottom.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub values: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
    /// Fixed axis ranges; fitted to the data when absent.
    pub x_range: Option<(f64, f64)>,
    pub y_range: Option<(f64, f64)>,
    pub heatmap: Option<Heatmap>,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: &str, x_label: &str, y_label: &str) -> Self {
        Panel {
            title: title.to_string(),
            x_label: x_label.to_string(),
            y_label: y_label.to_string(),
            x_log: false,
            y_log: false,
            x_range: None,
            y_range: None,
            heatmap: None,
            series: Vec::new(),
        }
    }
}

pub const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
];

const W: f64 = 480.0;
const H: f64 = 360.0;
const LEFT: f64 = 64.0;
const RIGHT: f64 = 120.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 44.0;

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Axis {
    lo: f64,
    hi: f64,
    log: bool,
}

impl Axis {
    fn fit(values: impl Iterator<Item = f64>, log: bool, fixed: Option<(f64, f64)>) -> Self {
        let (mut lo, mut hi) = fixed.unwrap_or_else(|| {
            values
                .filter(|v| v.is_finite() && (!log || *v > 0.0))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)))
        });
        if !lo.is_finite() {
            (lo, hi) = if log { (1.0, 10.0) } else { (0.0, 1.0) };
        }
        if log {
            lo = lo.log10();
            hi = hi.log10();
        }
        if hi - lo < 1e-12 * lo.abs().max(1.0) {
            lo -= 0.5;
            hi += 0.5;
        }
        Axis { lo, hi, log }
    }

    /// Position in `[0, 1]`, or `None` for values a log axis cannot show.
    fn unit(&self, v: f64) -> Option<f64> {
        let v = if self.log {
            if v <= 0.0 {
                return None;
            }
            v.log10()
        } else {
            v
        };
        v.is_finite().then(|| (v - self.lo) / (self.hi - self.lo))
    }

    fn label(&self, u: f64) -> String {
        let v = self.lo + u * (self.hi - self.lo);
        if self.log {
            format!("1e{v:.1}")
        } else {
            format!("{v:.3}")
        }
    }
}

/// Maps a value in `[0, 1]` onto a fixed light-to-dark ramp with 32 levels.
fn ramp(u: f64) -> String {
    let level = (u.clamp(0.0, 1.0) * 31.0).round() / 31.0;
    let lerp = |a: f64, b: f64| (a + (b - a) * level).round() as u8;
    format!(
        "#{:02x}{:02x}{:02x}",
        lerp(250.0, 60.0),
        lerp(250.0, 80.0),
        lerp(235.0, 140.0)
    )
}

/// Renders a self-contained SVG with one polyline per series, in order.
pub fn render_svg(panel: &Panel) -> String {
    let xs = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.0).chain(s.band.iter().map(|b| b.0)));
    let ys = panel
        .series
        .iter()
        .flat_map(|s| s.points.iter().map(|p| p.1).chain(s.band.iter().flat_map(|b| [b.1, b.2])));
    let xa = Axis::fit(xs, panel.x_log, panel.x_range);
    let ya = Axis::fit(ys, panel.y_log, panel.y_range);
    let pw = W - LEFT - RIGHT;
    let ph = H - TOP - BOTTOM;
    let px = |u: f64| LEFT + u * pw;
    let py = |u: f64| TOP + (1.0 - u) * ph;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(out, r##"<rect x="0" y="0" width="{W}" height="{H}" fill="#ffffff"/>"##);
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="18" text-anchor="middle" font-size="13">{}</text>"#,
        LEFT + pw / 2.0,
        escape(&panel.title)
    );

    if let Some(hm) = &panel.heatmap {
        let rows = hm.values.len();
        let cols = hm.values.first().map_or(0, Vec::len);
        let finite = hm.values.iter().flatten().filter(|v| v.is_finite());
        let (lo, hi) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let span = if hi > lo { hi - lo } else { 1.0 };
        let cw = pw / cols.max(1) as f64;
        let ch = ph / rows.max(1) as f64;
        let _ = writeln!(out, r#"<g shape-rendering="crispEdges">"#);
        for (r, row) in hm.values.iter().enumerate() {
            let y = TOP + ph - (r + 1) as f64 * ch;
            let mut c = 0;
            // merge runs of equal colour
            while c < row.len() {
                let color = ramp((row[c] - lo) / span);
                let mut end = c + 1;
                while end < row.len() && ramp((row[end] - lo) / span) == color {
                    end += 1;
                }
                let _ = writeln!(
                    out,
                    r#"<rect x="{:.3}" y="{:.3}" width="{:.3}" height="{:.3}" fill="{color}"/>"#,
                    LEFT + c as f64 * cw,
                    y,
                    (end - c) as f64 * cw,
                    ch
                );
                c = end;
            }
        }
        let _ = writeln!(out, "</g>");
    }

    // frame and ticks
    let _ = writeln!(
        out,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw}" height="{ph}" fill="none" stroke="#333333"/>"##
    );
    for i in 0..=4 {
        let u = i as f64 / 4.0;
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
            px(u),
            TOP + ph + 14.0,
            xa.label(u)
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{}</text>"#,
            LEFT - 4.0,
            py(u) + 4.0,
            ya.label(u)
        );
    }
    let _ = writeln!(
        out,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        px(0.5),
        H - 8.0,
        escape(&panel.x_label)
    );
    let _ = writeln!(
        out,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        py(0.5),
        py(0.5),
        escape(&panel.y_label)
    );

    let clip = |u: f64| u.clamp(-0.05, 1.05);
    for s in &panel.series {
        if s.band.is_empty() {
            continue;
        }
        let mut pts: Vec<String> = Vec::new();
        let fwd = s.band.iter().map(|b| (b.0, b.2));
        let back = s.band.iter().rev().map(|b| (b.0, b.1));
        for (x, y) in fwd.chain(back) {
            if let (Some(ux), Some(uy)) = (xa.unit(x), ya.unit(y)) {
                pts.push(format!("{:.3},{:.3}", px(clip(ux)), py(clip(uy))));
            }
        }
        let _ = writeln!(
            out,
            r#"<polygon points="{}" fill="{}" fill-opacity="0.2" stroke="none"/>"#,
            pts.join(" "),
            s.color
        );
    }
    for (i, s) in panel.series.iter().enumerate() {
        let pts: Vec<String> = s
            .points
            .iter()
            .filter_map(|&(x, y)| Some(format!("{:.3},{:.3}", px(clip(xa.unit(x)?)), py(clip(ya.unit(y)?)))))
            .collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            out,
            r#"<polyline points="{}" fill="none" stroke="{}" stroke-width="1.6"{dash}/>"#,
            pts.join(" "),
            s.color
        );
        let ly = TOP + 12.0 + 16.0 * i as f64;
        let _ = writeln!(
            out,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{}" stroke-width="2"{dash}/>"#,
            W - RIGHT + 8.0,
            W - RIGHT + 26.0,
            s.color
        );
        let _ = writeln!(
            out,
            r#"<text x="{:.1}" y="{:.1}">{}</text>"#,
            W - RIGHT + 30.0,
            ly + 4.0,
            escape(&s.name)
        );
    }
    out.push_str("</svg>\n");
    out
}

pub fn emit_svg(panel: &Panel, path: &Path) -> Result<PathBuf> {
    write_atomic(path, render_svg(panel).as_bytes())?;
    Ok(path.to_path_buf())
}

/// Outcome of one per-scenario assertion.
#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Gate {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Gate {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Record of one scenario run.
#[derive(Debug, Clone)]
pub struct RunManifest {
    pub scenario: String,
    /// SHA-256 of the config text.
    pub config_hash: String,
    pub version: String,
    pub output_dir: PathBuf,
    /// Artifact file names relative to `output_dir`, in write order.
    pub files: Vec<String>,
    pub gates: Vec<Gate>,
    /// Cells that failed to compute, with their errors.
    pub failed_cells: Vec<String>,
    pub config_echo: Vec<(String, String)>,
}

pub const MANIFEST_NAME: &str = "manifest.txt";

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

impl RunManifest {
    pub fn passed(&self) -> bool {
        self.failed_cells.is_empty() && self.gates.iter().all(|g| g.passed)
    }

    pub fn failures(&self) -> Vec<String> {
        let gates = self
            .gates
            .iter()
            .filter(|g| !g.passed)
            .map(|g| format!("gate {}: {}", g.name, g.detail));
        let cells = self.failed_cells.iter().map(|c| format!("cell {c}"));
        gates.chain(cells).collect()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let one_line = |s: &str| s.replace('\n', " ");
        let _ = writeln!(out, "scenario = {}", self.scenario);
        let _ = writeln!(out, "config_sha256 = {}", self.config_hash);
        let _ = writeln!(out, "version = {}", self.version);
        let _ = writeln!(out, "status = {}", if self.passed() { "pass" } else { "fail" });
        for f in &self.files {
            let _ = writeln!(out, "file = {f}");
        }
        for g in &self.gates {
            let _ = writeln!(
                out,
                "gate.{} = {}; {}",
                g.name,
                if g.passed { "pass" } else { "fail" },
                one_line(&g.detail)
            );
        }
        for c in &self.failed_cells {
            let _ = writeln!(out, "failed_cell = {}", one_line(c));
        }
        for (k, v) in &self.config_echo {
            let _ = writeln!(out, "config.{k} = {v}");
        }
        out
    }

    pub fn write(&self) -> Result<PathBuf> {
        let path = self.output_dir.join(MANIFEST_NAME);
        write_atomic(&path, self.render().as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_csv() {
        let t = Table::new(&["a", "b"]);
        assert_eq!(t.to_bytes().unwrap(), b"a,b\n");
    }

    #[test]
    fn numbers_have_seventeen_significant_digits() {
        let mut t = Table::new(&["x", "n", "s"]);
        t.push(row![0.1, 3usize, "arc"]);
        let text = String::from_utf8(t.to_bytes().unwrap()).unwrap();
        assert_eq!(text, "x,n,s\n1.0000000000000001e-1,3,arc\n");
        let v: f64 = text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap();
        assert_eq!(v, 0.1);
    }

    #[test]
    fn polylines_follow_declared_order() {
        let mut p = Panel::new("t", "x", "y");
        for (i, color) in PALETTE.iter().take(5).enumerate() {
            p.series
                .push(Series::line(&format!("s{i}"), vec![(0.0, i as f64), (1.0, 1.0)], color));
        }
        let svg = render_svg(&p);
        assert_eq!(svg.matches("<polyline").count(), 5);
        let order: Vec<usize> = (0..5)
            .map(|i| svg.find(&format!("stroke=\"{}\"", PALETTE[i])).unwrap())
            .collect();
        assert!(order.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(svg, render_svg(&p));
        assert!(!svg.contains("@font-face") && !svg.contains("href"));
    }

    #[test]
    fn heatmap_runs_are_merged() {
        let mut p = Panel::new("t", "x", "y");
        p.heatmap = Some(Heatmap {
            values: vec![vec![0.0; 10], (0..10).map(|i| i as f64).collect()],
        });
        let svg = render_svg(&p);
        // one rect for the constant row, ten for the ramp, plus background and frame
        assert_eq!(svg.matches("<rect").count(), 1 + 10 + 2);
    }

    #[test]
    fn atomic_write_leaves_no_temp_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub").join("a.csv");
        write_atomic(&path, b"x\n").unwrap();
        write_atomic(&path, b"y\n").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"y\n");
        let names: Vec<_> = std::fs::read_dir(path.parent().unwrap()).unwrap().collect();
        assert_eq!(names.len(), 1);
    }
}
