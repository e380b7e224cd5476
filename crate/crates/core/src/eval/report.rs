use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::{SweepCell, SweepResult};
use crate::error::{Error, Result};

/// One labeled line of a report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportEntry {
    pub label: String,
    pub result: SweepResult,
}

const COLUMNS: [&str; 6] = ["label", "azimuth", "distance", "samples", "successes", "rate"];
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
];

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 160.0;
const TOP: f64 = 20.0;
const BOTTOM: f64 = 50.0;

fn check_axes(entries: &[ReportEntry]) -> Result<()> {
    let Some(first) = entries.first() else {
        return Err(Error::Dataset("report needs at least one result".into()));
    };
    let axes = |r: &SweepResult| r.cells.iter().map(|c| (c.azimuth, c.distance)).collect::<Vec<_>>();
    let reference = axes(&first.result);
    for e in &entries[1..] {
        if axes(&e.result) != reference {
            return Err(Error::Shape(format!(
                "sweep axes of `{}` differ from `{}`",
                e.label, first.label
            )));
        }
    }
    Ok(())
}

pub fn write_csv(entries: &[ReportEntry]) -> Result<Vec<u8>> {
    check_axes(entries)?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Dataset(format!("csv: {e}"));
    w.write_record(COLUMNS).map_err(csv_err)?;
    for e in entries {
        for c in &e.result.cells {
            w.write_record([
                e.label.clone(),
                c.azimuth.to_string(),
                c.distance.to_string(),
                c.samples.to_string(),
                c.successes.to_string(),
                format!("{:.6}", c.rate()),
            ])
            .map_err(csv_err)?;
        }
    }
    w.into_inner().map_err(|e| Error::Dataset(format!("csv: {e}")))
}

/// Reads a report CSV back; detector and sweep names come from the
/// `<label>_<detector>_<sweep>.csv` file name.
pub fn read_report_csv(path: impl AsRef<Path>) -> Result<Vec<ReportEntry>> {
    let path = path.as_ref();
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default();
    let mut parts = stem.rsplitn(3, '_');
    let sweep = parts.next().unwrap_or_default().to_string();
    let detector = parts.next().unwrap_or_default().to_string();
    let bad = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };
    let mut r = csv::Reader::from_path(path).map_err(|e| bad(0, e.to_string()))?;
    let headers = r.headers().map_err(|e| bad(1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != COLUMNS {
        return Err(bad(1, format!("expected columns {}", COLUMNS.join(","))));
    }
    let mut entries: Vec<ReportEntry> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| bad(line, e.to_string()))?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse().map_err(|_| bad(line, format!("bad {} `{}`", COLUMNS[k], &rec[k])))
        };
        let int = |k: usize| -> Result<u64> {
            rec[k].parse().map_err(|_| bad(line, format!("bad {} `{}`", COLUMNS[k], &rec[k])))
        };
        let cell = SweepCell {
            azimuth: num(1)?,
            distance: num(2)?,
            samples: int(3)?,
            successes: int(4)?,
        };
        match entries.iter_mut().find(|e| e.label == rec[0]) {
            Some(e) => e.result.cells.push(cell),
            None => entries.push(ReportEntry {
                label: rec[0].to_string(),
                result: SweepResult {
                    detector: detector.clone(),
                    sweep: sweep.clone(),
                    cells: vec![cell],
                },
            }),
        }
    }
    Ok(entries)
}

fn fmt_num(v: f64) -> String {
    let s = format!("{v:.2}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// Line chart of success rate against azimuth (or distance, when the sweep
/// has a single azimuth). One polyline per entry.
pub fn render_svg(entries: &[ReportEntry], title: &str) -> Result<String> {
    check_axes(entries)?;
    let cells = &entries[0].result.cells;
    let mut azimuths: Vec<f64> = cells.iter().map(|c| c.azimuth).collect();
    azimuths.dedup();
    let by_azimuth = azimuths.len() > 1;
    let x_of = |c: &SweepCell| if by_azimuth { c.azimuth } else { c.distance };
    let mut ticks: Vec<f64> = cells.iter().map(x_of).collect();
    ticks.sort_by(f64::total_cmp);
    ticks.dedup();
    let (lo, hi) = (ticks[0], ticks[ticks.len() - 1]);
    let pw = WIDTH - LEFT - RIGHT;
    let ph = HEIGHT - TOP - BOTTOM;
    let px = |v: f64| {
        if hi > lo {
            LEFT + (v - lo) / (hi - lo) * pw
        } else {
            LEFT + 0.5 * pw
        }
    };
    let py = |rate: f64| TOP + (1.0 - rate) * ph;

    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<title>{}</title>"#, escape(title));
    let _ = writeln!(s, r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let (x0, x1, y0, y1) = (LEFT, LEFT + pw, TOP, TOP + ph);
    let _ = writeln!(
        s,
        r#"<path d="M{x0},{y0} L{x0},{y1} L{x1},{y1}" fill="none" stroke="black" stroke-width="1"/>"#
    );
    for &t in &ticks {
        let x = px(t);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.2}" y1="{y1}" x2="{x:.2}" y2="{:.2}" stroke="black"/><text x="{x:.2}" y="{:.2}" font-size="10" text-anchor="middle">{}</text>"#,
            y1 + 4.0,
            y1 + 16.0,
            fmt_num(t)
        );
    }
    for k in 0..=4 {
        let v = k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{y:.2}" x2="{x0}" y2="{y:.2}" stroke="black"/><text x="{:.2}" y="{:.2}" font-size="10" text-anchor="end">{}</text>"#,
            x0 - 4.0,
            x0 - 6.0,
            y + 3.0,
            fmt_num(v)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" font-size="12" text-anchor="middle">{}</text>"#,
        LEFT + 0.5 * pw,
        HEIGHT - 12.0,
        if by_azimuth { "azimuth (deg)" } else { "distance" }
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.2}" font-size="12" text-anchor="middle" transform="rotate(-90 14 {:.2})">attack success rate</text>"#,
        TOP + 0.5 * ph,
        TOP + 0.5 * ph
    );
    for (i, e) in entries.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let mut pts: Vec<(f64, f64)> = e.result.cells.iter().map(|c| (x_of(c), c.rate())).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let points: Vec<String> = pts.iter().map(|&(x, r)| format!("{:.3},{:.3}", px(x), py(r))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="2" points="{}"/>"#,
            points.join(" ")
        );
        let ly = TOP + 14.0 + 18.0 * i as f64;
        let lx = WIDTH - RIGHT + 12.0;
        let _ = writeln!(
            s,
            r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}" font-size="11">{}</text>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&e.label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn joined(entries: &[ReportEntry], f: impl Fn(&ReportEntry) -> &str) -> String {
    let mut names: Vec<&str> = Vec::new();
    for e in entries {
        let n = f(e);
        if !names.contains(&n) {
            names.push(n);
        }
    }
    names.join("+")
}

/// Writes `<label>_<detector>_<sweep>.csv` and `.svg` into `dir`. Several
/// labels (or detectors) are joined with `+`.
pub fn emit_report(dir: impl AsRef<Path>, entries: &[ReportEntry]) -> Result<(PathBuf, PathBuf)> {
    let dir = dir.as_ref();
    check_axes(entries)?;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stem = format!(
        "{}_{}_{}",
        joined(entries, |e| &e.label),
        joined(entries, |e| &e.result.detector),
        joined(entries, |e| &e.result.sweep)
    );
    let csv_path = dir.join(format!("{stem}.csv"));
    let svg_path = dir.join(format!("{stem}.svg"));
    std::fs::write(&csv_path, write_csv(entries)?).map_err(|e| Error::io(&csv_path, e))?;
    std::fs::write(&svg_path, render_svg(entries, &stem)?).map_err(|e| Error::io(&svg_path, e))?;
    Ok((csv_path, svg_path))
}
