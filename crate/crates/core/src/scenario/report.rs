use super::ServerStrategy;
use serde::{Deserialize, Serialize};
use std::fmt::Write;

/// Version line opening every CSV the toolkit writes.
pub const REPORT_VERSION: &str = "dhac-report-v1";

/// One line of a detection report.
///
/// For RCC, `check` is `detectable` or `round<j>`; for FBC it is the
/// sentinel kind. `raw_rate` is over approximate trials (for the
/// `detectable` row: the detectable fraction of all trials) and
/// `per_detectable_rate` over detectable ones. Rates are `None` when their
/// denominator is zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub program: String,
    pub combo: String,
    pub check: String,
    pub trials: usize,
    pub approximate: usize,
    pub detectable: Option<usize>,
    pub detected: usize,
    pub raw_rate: Option<f64>,
    pub per_detectable_rate: Option<f64>,
    /// Positives on accurate (control) executions.
    pub fp: usize,
    /// Missed detectable (or, for FBC, approximate) executions.
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// What produced a report, printed above the table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub trials: usize,
    pub strategy: ServerStrategy,
    pub moduli: Option<String>,
    pub combos: Vec<String>,
    pub delta: Option<f64>,
    pub truncated_bits: Vec<u8>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub echo: ConfigEcho,
    pub rows: Vec<ReportRow>,
}

pub(crate) fn rate(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

fn fmt_rate(r: Option<f64>) -> String {
    r.map(|r| format!("{r:.6}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl DetectionReport {
    pub fn row(&self, program: &str, combo: &str, check: &str) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.program == program && r.combo == combo && r.check == check)
    }

    /// Machine-readable form: version line, header, one line per row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_VERSION}\nprogram,combo,check,raw_rate,per_detectable_rate,fp,fn\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                csv_field(&r.program),
                csv_field(&r.combo),
                csv_field(&r.check),
                fmt_rate(r.raw_rate),
                fmt_rate(r.per_detectable_rate),
                r.fp,
                r.fn_
            )
            .unwrap();
        }
        out
    }

    /// Human-readable table preceded by the configuration echo.
    pub fn to_table(&self) -> String {
        let e = &self.echo;
        let mut out = String::new();
        writeln!(out, "seed {}  trials/cell {}", e.seed, e.trials).unwrap();
        writeln!(
            out,
            "strategy W={} T={} p={}",
            e.strategy.honest_warmup, e.strategy.small_job_threshold, e.strategy.dishonest_prob
        )
        .unwrap();
        if let Some(m) = &e.moduli {
            writeln!(out, "moduli {m}").unwrap();
        }
        if !e.combos.is_empty() {
            writeln!(out, "unit combos {}", e.combos.join(", ")).unwrap();
        }
        if let Some(d) = e.delta {
            let bits: Vec<String> = e.truncated_bits.iter().map(|b| b.to_string()).collect();
            writeln!(out, "delta {d:e}  truncated bits {}", bits.join(", ")).unwrap();
        }
        for n in &e.notes {
            writeln!(out, "note: {n}").unwrap();
        }
        let pct = |r: Option<f64>| r.map(|r| format!("{:.2}%", 100.0 * r)).unwrap_or_else(|| "-".into());
        let headers = ["program", "combo", "check", "trials", "approx", "detectable", "raw", "/detectable", "fp", "fn"];
        let cells: Vec<[String; 10]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    r.program.clone(),
                    r.combo.clone(),
                    r.check.clone(),
                    r.trials.to_string(),
                    r.approximate.to_string(),
                    r.detectable.map(|d| d.to_string()).unwrap_or_else(|| "-".into()),
                    pct(r.raw_rate),
                    pct(r.per_detectable_rate),
                    r.fp.to_string(),
                    r.fn_.to_string(),
                ]
            })
            .collect();
        let mut widths = headers.map(str::len);
        for row in &cells {
            for (w, c) in widths.iter_mut().zip(row) {
                *w = (*w).max(c.len());
            }
        }
        let line = |fields: Vec<&str>| {
            let parts: Vec<String> = fields
                .iter()
                .zip(widths)
                .enumerate()
                .map(|(i, (f, w))| if i < 3 { format!("{f:<w$}") } else { format!("{f:>w$}") })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        writeln!(out).unwrap();
        writeln!(out, "{}", line(headers.to_vec())).unwrap();
        for row in &cells {
            writeln!(out, "{}", line(row.iter().map(String::as_str).collect())).unwrap();
        }
        out
    }
}

/// One threshold of a sweep, pooled over programs, truncation settings and
/// sentinel kinds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub delta: f64,
    pub fp: usize,
    /// Number of accurate executions the FP rate is taken over.
    pub negatives: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    /// Number of approximate executions the FN rate is taken over.
    pub positives: usize,
    pub fp_rate: f64,
    pub fn_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCurve {
    pub points: Vec<SweepPoint>,
}

impl SweepCurve {
    pub fn point(&self, delta: f64) -> Option<&SweepPoint> {
        self.points.iter().find(|p| p.delta == delta)
    }

    /// Longest run of consecutive thresholds with no false positives and an
    /// FN rate within `slack` of the smallest FN rate seen anywhere on the
    /// curve. Returns the (largest, smallest) delta of that run.
    pub fn best_band(&self, slack: f64) -> Option<(f64, f64)> {
        let min_fn = self.points.iter().map(|p| p.fn_rate).fold(f64::INFINITY, f64::min);
        let good = |p: &SweepPoint| p.fp == 0 && p.fn_rate <= min_fn + slack;
        let mut best: Option<(usize, usize)> = None;
        let mut start = None;
        for (i, p) in self.points.iter().enumerate() {
            match (good(p), start) {
                (true, None) => start = Some(i),
                (false, Some(s)) => {
                    if best.map_or(true, |(bs, be)| i - s > be - bs + 1) {
                        best = Some((s, i - 1));
                    }
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            let e = self.points.len() - 1;
            if best.map_or(true, |(bs, be)| e - s > be - bs) {
                best = Some((s, e));
            }
        }
        best.map(|(s, e)| (self.points[s].delta, self.points[e].delta))
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{REPORT_VERSION}\ndelta,fp_rate,fn_rate,fp,fn\n");
        for p in &self.points {
            writeln!(out, "{:e},{:.6},{:.6},{},{}", p.delta, p.fp_rate, p.fn_rate, p.fp, p.fn_).unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!("{:>8}  {:>9}  {:>9}  {:>7}  {:>7}\n", "delta", "FP rate", "FN rate", "fp", "fn");
        for p in &self.points {
            writeln!(
                out,
                "{:>8.0e}  {:>8.3}%  {:>8.3}%  {:>7}  {:>7}",
                p.delta,
                100.0 * p.fp_rate,
                100.0 * p.fn_rate,
                p.fp,
                p.fn_
            )
            .unwrap();
        }
        if let Some((hi, lo)) = self.best_band(0.01) {
            writeln!(out, "widest zero-FP band with near-minimal FN: [{lo:e}, {hi:e}]").unwrap();
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(delta: f64, fp: usize, fn_rate: f64) -> SweepPoint {
        SweepPoint {
            delta,
            fp,
            negatives: 100,
            fn_: (fn_rate * 100.0) as usize,
            positives: 100,
            fp_rate: fp as f64 / 100.0,
            fn_rate,
        }
    }

    #[test]
    fn band_picks_longest_zero_fp_run() {
        let curve = SweepCurve {
            points: vec![
                point(1e-3, 0, 0.9),
                point(1e-10, 0, 0.02),
                point(1e-12, 0, 0.02),
                point(1e-13, 0, 0.015),
                point(1e-14, 0, 0.015),
                point(1e-16, 7, 0.01),
            ],
        };
        assert_eq!(curve.best_band(0.01), Some((1e-10, 1e-14)));
        assert_eq!(curve.best_band(0.0), None);
        assert!(curve.to_csv().starts_with("dhac-report-v1\ndelta,"));
    }

    #[test]
    fn csv_leaves_undefined_rates_empty() {
        let r = DetectionReport {
            echo: ConfigEcho {
                seed: 1,
                trials: 10,
                strategy: ServerStrategy::honest(),
                moduli: None,
                combos: vec![],
                delta: None,
                truncated_bits: vec![],
                notes: vec![],
            },
            rows: vec![ReportRow {
                program: "fir11".into(),
                combo: "LOA(4)+TruncMul(4)".into(),
                check: "round1".into(),
                trials: 10,
                approximate: 0,
                detectable: Some(0),
                detected: 0,
                raw_rate: None,
                per_detectable_rate: None,
                fp: 0,
                fn_: 0,
            }],
        };
        assert_eq!(r.to_csv().lines().nth(2), Some("fir11,LOA(4)+TruncMul(4),round1,,,0,0"));
        assert!(r.to_table().contains("W=0 T=0 p=0"));
    }
}
