//! CSV tables and SVG line plots of regret traces.

use super::regret::{RegretRow, RegretTrace};
use std::fmt::Write as _;
use std::path::Path;
use thiserror::Error;

pub const CSV_HEADER: [&str; 5] = ["n", "mean_reward", "regret", "regret_over_ln_n", "reward_variance"];

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("bad csv: {0}")]
    Format(String),
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    std::fs::write(path, bytes).map_err(|source| ExportError::Write {
        path: path.display().to_string(),
        source,
    })
}

/// Shortest round-trip text, so reloading gives the same bits.
fn num(x: f64) -> String {
    format!("{x:?}")
}

pub fn rows_to_csv(rows: &[RegretRow]) -> Result<String, ExportError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in rows {
        w.write_record([
            r.n.to_string(),
            num(r.mean_reward),
            num(r.regret),
            r.regret_over_ln_n.map(num).unwrap_or_default(),
            num(r.reward_variance),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| ExportError::Format(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ExportError::Format(e.to_string()))
}

pub fn rows_from_csv(text: &str) -> Result<Vec<RegretRow>, ExportError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(ExportError::Format(format!("unexpected header {header:?}")));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|e| ExportError::Format(format!("{s:?}: {e}")));
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(RegretRow {
                n: rec[0].parse().map_err(|e| ExportError::Format(format!("n: {e}")))?,
                mean_reward: parse(&rec[1])?,
                regret: parse(&rec[2])?,
                regret_over_ln_n: if rec[3].is_empty() { None } else { Some(parse(&rec[3])?) },
                reward_variance: parse(&rec[4])?,
            })
        })
        .collect()
}

pub fn write_csv(trace: &RegretTrace, path: &Path) -> Result<(), ExportError> {
    write_file(path, rows_to_csv(&trace.rows)?.as_bytes())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Regret,
    RegretOverLnN,
    RewardVariance,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::RegretOverLnN, Metric::Regret, Metric::RewardVariance];

    pub fn label(self) -> &'static str {
        match self {
            Metric::Regret => "Regret",
            Metric::RegretOverLnN => "Regret/ln time",
            Metric::RewardVariance => "Reward variance",
        }
    }

    pub fn file_stem(self) -> &'static str {
        match self {
            Metric::Regret => "regret",
            Metric::RegretOverLnN => "regret_over_ln_n",
            Metric::RewardVariance => "reward_variance",
        }
    }

    fn value(self, r: &RegretRow) -> Option<f64> {
        match self {
            Metric::Regret => Some(r.regret),
            Metric::RegretOverLnN => r.regret_over_ln_n,
            Metric::RewardVariance => Some(r.reward_variance),
        }
    }
}

const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"];
const W: f64 = 640.0;
const H: f64 = 400.0;
const LEFT: f64 = 80.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 30.0;
const BOTTOM: f64 = 50.0;

fn series_name(t: &RegretTrace) -> String {
    if t.reconstruction {
        format!("{} (reconstructed)", t.policy)
    } else {
        t.policy.clone()
    }
}

/// Line plot of `metric` against `n` on a log-x axis, one series per trace.
pub fn plot_svg(traces: &[&RegretTrace], metric: Metric) -> String {
    let points: Vec<Vec<(f64, f64)>> = traces
        .iter()
        .map(|t| {
            t.rows
                .iter()
                .filter_map(|r| metric.value(r).map(|v| ((r.n as f64).log10(), v)))
                .filter(|(_, v)| v.is_finite())
                .collect()
        })
        .collect();
    let all = points.iter().flatten();
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
    x0 = x0.floor();
    x1 = x1.ceil().max(x0 + 1.0);
    y0 = y0.min(0.0);
    if y1 <= y0 {
        y1 = y0 + 1.0;
    }
    let px = |x: f64| LEFT + (x - x0) / (x1 - x0) * (W - LEFT - RIGHT);
    let py = |y: f64| H - BOTTOM - (y - y0) / (y1 - y0) * (H - TOP - BOTTOM);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<path d="M{l} {t}V{b}H{r}" fill="none" stroke="black"/>"#,
        l = LEFT,
        t = TOP,
        b = H - BOTTOM,
        r = W - RIGHT
    );
    let mut d = x0 as i64;
    while d as f64 <= x1 {
        let x = px(d as f64);
        let _ = writeln!(
            s,
            r#"<line x1="{x:.1}" y1="{b}" x2="{x:.1}" y2="{b2}" stroke="black"/><text x="{x:.1}" y="{ty}" text-anchor="middle">1e{d}</text>"#,
            b = H - BOTTOM,
            b2 = H - BOTTOM + 5.0,
            ty = H - BOTTOM + 18.0
        );
        d += 1;
    }
    for k in 0..=4 {
        let v = y0 + (y1 - y0) * k as f64 / 4.0;
        let y = py(v);
        let _ = writeln!(
            s,
            r#"<line x1="{a}" y1="{y:.1}" x2="{l}" y2="{y:.1}" stroke="black"/><text x="{tx}" y="{ty:.1}" text-anchor="end">{v:.4e}</text>"#,
            a = LEFT - 5.0,
            l = LEFT,
            tx = LEFT - 8.0,
            ty = y + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="{y}" text-anchor="middle">time slot n</text>"#,
        x = (LEFT + W - RIGHT) / 2.0,
        y = H - 10.0
    );
    let _ = writeln!(
        s,
        r#"<text x="{x}" y="18" text-anchor="middle">{label}</text>"#,
        x = (LEFT + W - RIGHT) / 2.0,
        label = metric.label()
    );
    for (i, (t, pts)) in traces.iter().zip(&points).enumerate() {
        let color = COLORS[i % COLORS.len()];
        if !pts.is_empty() {
            let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.1},{:.1}", px(x), py(y))).collect();
            let _ = writeln!(
                s,
                r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
                path.join(" ")
            );
        }
        let ly = TOP + 15.0 * i as f64 + 5.0;
        let _ = writeln!(
            s,
            r#"<line x1="{a}" y1="{ly}" x2="{b}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{tx}" y="{ty}">{name}</text>"#,
            a = LEFT + 10.0,
            b = LEFT + 30.0,
            tx = LEFT + 35.0,
            ty = ly + 4.0,
            name = series_name(t)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// Writes `regret_<policy>.csv` per trace and one combined SVG per metric.
/// Returns the written paths.
pub fn export_all(traces: &[RegretTrace], dir: &Path) -> Result<Vec<std::path::PathBuf>, ExportError> {
    std::fs::create_dir_all(dir).map_err(|source| ExportError::Write {
        path: dir.display().to_string(),
        source,
    })?;
    let mut written = Vec::new();
    for t in traces {
        let p = dir.join(format!("regret_{}.csv", t.policy));
        write_csv(t, &p)?;
        written.push(p);
    }
    let refs: Vec<&RegretTrace> = traces.iter().collect();
    for m in Metric::ALL {
        let p = dir.join(format!("{}.svg", m.file_stem()));
        write_file(&p, plot_svg(&refs, m).as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::regret::estimate_regret;

    #[test]
    fn empty_sample_points_give_header_only() {
        let t = estimate_regret("cee", false, 0.85, &[], vec![vec![]]);
        assert_eq!(
            rows_to_csv(&t.rows).unwrap(),
            "n,mean_reward,regret,regret_over_ln_n,reward_variance\n"
        );
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let t = estimate_regret(
            "cee",
            false,
            0.85,
            &[1, 100, 1000],
            vec![vec![0.1, 80.123456789, 849.1], vec![1.0, 81.0 / 3.0, 848.7]],
        );
        let a = rows_to_csv(&t.rows).unwrap();
        let back = rows_from_csv(&a).unwrap();
        assert_eq!(back, t.rows);
        assert_eq!(rows_to_csv(&back).unwrap(), a);
    }

    #[test]
    fn svg_has_one_series_per_trace() {
        let a = estimate_regret("cee", false, 0.85, &[100, 1000], vec![vec![80.0, 840.0]]);
        let b = estimate_regret("rca", true, 0.85, &[100, 1000], vec![vec![70.0, 800.0]]);
        let svg = plot_svg(&[&a, &b], Metric::RegretOverLnN);
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("rca (reconstructed)"));
        assert!(svg.contains("Regret/ln time"));
    }
}
