//! CSV, plot-data and SVG emission, plus CSV read-back for audits.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::config::SweepAxis;
use super::sweep::ResultRow;
use crate::error::{Error, Result};
use crate::fisher::Scenario;
use crate::select::Method;

pub const CSV_HEADER: &str = "scenario,method,axis,axis_value,snr_db,M,n_s,peb_m,logdet,seed,status";

/// `%.9g`-style rendering: 9 significant digits, trailing zeros trimmed.
pub fn fmt_sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.8e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let m = trim_zeros(mantissa.to_string());
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn sorted(rows: &[ResultRow]) -> Vec<&ResultRow> {
    let mut v: Vec<&ResultRow> = rows.iter().collect();
    v.sort_by(|a, b| {
        a.scenario
            .cmp(&b.scenario)
            .then(a.method.cmp(&b.method))
            .then(a.axis_value.total_cmp(&b.axis_value))
            .then(a.snr_db.total_cmp(&b.snr_db))
            .then(a.trial.cmp(&b.trial))
    });
    v
}

fn csv_line(out: &mut String, r: &ResultRow) {
    let opt = |v: Option<f64>| v.map(fmt_sig9).unwrap_or_default();
    let _ = write!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.scenario.tag(),
        r.method.tag(),
        r.axis.tag(),
        fmt_sig9(r.axis_value),
        fmt_sig9(r.snr_db),
        r.ports,
        r.active,
        opt(r.peb_m),
        opt(r.logdet),
        r.seed,
        r.status()
    );
}

pub fn csv_string(rows: &[ResultRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in sorted(rows) {
        csv_line(&mut out, r);
        out.push('\n');
    }
    out
}

pub fn emit_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, csv_string(rows))?;
    Ok(())
}

/// Per-trial rows: the main schema plus a trailing `trial` column.
pub fn emit_trial_csv(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let mut out = format!("{CSV_HEADER},trial\n");
    for r in sorted(rows) {
        csv_line(&mut out, r);
        let _ = writeln!(out, ",{}", r.trial.map(|t| t.to_string()).unwrap_or_default());
    }
    fs::write(path, out)?;
    Ok(())
}

fn parse_scenario(s: &str) -> Option<Scenario> {
    match s {
        "user" => Some(Scenario::UserSideFas),
        "bs" => Some(Scenario::BsSideFas),
        _ => None,
    }
}

pub fn parse_method(s: &str) -> Option<Method> {
    match s {
        "random" => Some(Method::Random),
        "greedy" => Some(Method::Greedy),
        "relaxed" => Some(Method::Relaxed),
        "exhaustive" => Some(Method::Exhaustive),
        _ => None,
    }
}

fn parse_axis(s: &str) -> Option<SweepAxis> {
    match s {
        "snr_db" => Some(SweepAxis::SnrDb),
        "M" => Some(SweepAxis::NumPorts),
        "n_s" => Some(SweepAxis::ActivePorts),
        _ => None,
    }
}

/// Read rows back from a CSV written by [`emit_csv`].
pub fn read_csv(text: &str) -> Result<Vec<ResultRow>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                field: "header".into(),
                message: "not a sweep CSV".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines {
        let line_no = i + 1;
        let f: Vec<&str> = line.split(',').collect();
        let perr = |field: &str| Error::Parse {
            line: line_no,
            field: field.into(),
            message: format!("bad value in `{line}`"),
        };
        if f.len() != 11 {
            return Err(perr("columns"));
        }
        let num = |s: &str, name: &str| s.parse::<f64>().map_err(|_| perr(name));
        let opt = |s: &str, name: &str| -> Result<Option<f64>> {
            if s.is_empty() {
                Ok(None)
            } else {
                num(s, name).map(Some)
            }
        };
        rows.push(ResultRow {
            scenario: parse_scenario(f[0]).ok_or_else(|| perr("scenario"))?,
            method: parse_method(f[1]).ok_or_else(|| perr("method"))?,
            axis: parse_axis(f[2]).ok_or_else(|| perr("axis"))?,
            axis_value: num(f[3], "axis_value")?,
            snr_db: num(f[4], "snr_db")?,
            ports: f[5].parse().map_err(|_| perr("M"))?,
            active: f[6].parse().map_err(|_| perr("n_s"))?,
            peb_m: opt(f[7], "peb_m")?,
            logdet: opt(f[8], "logdet")?,
            seed: f[9].parse().map_err(|_| perr("seed"))?,
            trial: None,
        });
        if rows.last().unwrap().status() != f[10] {
            return Err(perr("status"));
        }
    }
    Ok(rows)
}

/// Rows grouped into one block per (scenario, method), in output order.
fn series(rows: &[ResultRow]) -> Vec<((Scenario, Method), Vec<&ResultRow>)> {
    let mut blocks: Vec<((Scenario, Method), Vec<&ResultRow>)> = Vec::new();
    for r in sorted(rows) {
        let key = (r.scenario, r.method);
        match blocks.last_mut() {
            Some((k, v)) if *k == key => v.push(r),
            _ => blocks.push((key, vec![r])),
        }
    }
    blocks
}

pub fn unlocalizable_sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".unlocalizable");
    PathBuf::from(s)
}

/// Whitespace-separated series, one block per (scenario, method). Blocks are
/// separated by two blank lines; inside a block a single blank line starts a
/// new curve when a port-count axis changes value. Unlocalizable points are
/// left out and listed in `<path>.unlocalizable`.
pub fn plot_data_string(rows: &[ResultRow]) -> (String, String) {
    let mut out = String::new();
    let mut skipped = String::new();
    for (bi, ((scenario, method), block)) in series(rows).into_iter().enumerate() {
        if bi > 0 {
            out.push_str("\n\n");
        }
        let axis = block[0].axis;
        let _ = writeln!(out, "# scenario={} method={} axis={}", scenario.tag(), method.tag(), axis.tag());
        let _ = writeln!(out, "# axis_value snr_db peb_m");
        let mut prev: Option<f64> = None;
        for r in block {
            let Some(p) = r.peb_m else {
                let _ = writeln!(
                    skipped,
                    "{} {} {} {}",
                    scenario.tag(),
                    method.tag(),
                    fmt_sig9(r.axis_value),
                    fmt_sig9(r.snr_db)
                );
                continue;
            };
            if axis != SweepAxis::SnrDb && prev.is_some_and(|v| v != r.axis_value) {
                out.push('\n');
            }
            prev = Some(r.axis_value);
            let _ = writeln!(out, "{} {} {}", fmt_sig9(r.axis_value), fmt_sig9(r.snr_db), fmt_sig9(p));
        }
    }
    (out, skipped)
}

pub fn emit_plot_data(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (data, skipped) = plot_data_string(rows);
    fs::write(path, data)?;
    let side = unlocalizable_sidecar(path);
    if skipped.is_empty() {
        if side.exists() {
            fs::remove_file(side)?;
        }
    } else {
        fs::write(side, skipped)?;
    }
    Ok(())
}

const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf",
];

/// PEB (log scale) against SNR, one polyline per curve.
pub fn svg_string(rows: &[ResultRow]) -> String {
    let (w, h, ml, mr, mt, mb) = (720.0, 480.0, 70.0, 190.0, 20.0, 50.0);
    let mut curves: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for ((scenario, method), block) in series(rows) {
        for r in block {
            let Some(p) = r.peb_m else { continue };
            let label = if r.axis == SweepAxis::SnrDb {
                format!("{}-{}", scenario.tag(), method.tag())
            } else {
                format!("{}-{} {}={}", scenario.tag(), method.tag(), r.axis.tag(), fmt_sig9(r.axis_value))
            };
            match curves.last_mut() {
                Some((l, pts)) if *l == label => pts.push((r.snr_db, p.log10())),
                _ => curves.push((label, vec![(r.snr_db, p.log10())])),
            }
        }
    }
    let all = curves.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !x0.is_finite() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    let (y0, y1) = (y0.floor(), y1.ceil().max(y0.floor() + 1.0));
    if x1 <= x0 {
        x1 = x0 + 1.0;
    }
    let px = |x: f64| ml + (x - x0) / (x1 - x0) * (w - ml - mr);
    let py = |y: f64| mt + (y1 - y) / (y1 - y0) * (h - mt - mb);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<rect x="{ml}" y="{mt}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - ml - mr,
        h - mt - mb
    );
    let mut decade = y0 as i32;
    while decade as f64 <= y1 {
        let y = py(decade as f64);
        let _ = writeln!(
            s,
            r##"<line x1="{ml}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">1e{decade}</text>"##,
            w - mr,
            ml - 6.0,
            y + 4.0
        );
        decade += 1;
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">SNR [dB] ({} .. {})</text>"#,
        (ml + w - mr) / 2.0,
        h - 15.0,
        fmt_sig9(x0),
        fmt_sig9(x1)
    );
    let _ = writeln!(
        s,
        r#"<text x="15" y="{:.2}" transform="rotate(-90 15 {:.2})" text-anchor="middle">PEB [m]</text>"#,
        (mt + h - mb) / 2.0,
        (mt + h - mb) / 2.0
    );
    for (i, (label, pts)) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let dash = if label.contains("random") { r#" stroke-dasharray="5,3""# } else { "" };
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let _ = writeln!(
            s,
            r#"<polyline fill="none" stroke="{color}" stroke-width="1.5"{dash} points="{}"/>"#,
            coords.join(" ")
        );
        let ly = mt + 14.0 + 16.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="1.5"{dash}/><text x="{:.2}" y="{:.2}">{label}</text>"#,
            w - mr + 10.0,
            w - mr + 35.0,
            w - mr + 40.0,
            ly + 4.0
        );
    }
    s.push_str("</svg>\n");
    s
}

pub fn emit_svg(rows: &[ResultRow], path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, svg_string(rows))?;
    Ok(())
}
