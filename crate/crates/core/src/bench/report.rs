use std::collections::BTreeMap;

use super::RunRecord;
use crate::error::{Error, Result};
use crate::session::Mode;

/// `(II - X) / (II - I)`: the share of the rewrite overhead a method removes.
pub fn improvement_ratio(off: f64, naive: f64, x: f64) -> Result<f64> {
    if naive <= off {
        return Err(Error::UndefinedRatio { off, naive });
    }
    Ok((naive - x) / (naive - off))
}

/// Per-mode figures for one query; times are milliseconds.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCell {
    pub time_ms: f64,
    pub cost_path_calls: u64,
    pub cache_hits: u64,
    pub digest: Option<u64>,
    pub cost: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub query_id: String,
    pub off: ModeCell,
    pub naive: ModeCell,
    pub cache: ModeCell,
    pub cache_guess: ModeCell,
    pub error: Option<String>,
}

impl ReportRow {
    /// Column I.
    pub fn i(&self) -> f64 {
        self.off.time_ms
    }
    /// Column II.
    pub fn ii(&self) -> f64 {
        self.naive.time_ms
    }
    /// Column III.
    pub fn iii(&self) -> f64 {
        self.cache.time_ms
    }
    /// Column V.
    pub fn v(&self) -> f64 {
        self.cache_guess.time_ms
    }
    /// Column IV.
    pub fn iv(&self) -> Option<f64> {
        improvement_ratio(self.i(), self.ii(), self.iii()).ok()
    }
    /// Column VI.
    pub fn vi(&self) -> Option<f64> {
        improvement_ratio(self.i(), self.ii(), self.v()).ok()
    }

    fn compared(&self) -> [&ModeCell; 3] {
        [&self.naive, &self.cache, &self.cache_guess]
    }

    /// True when the compared modes produced different plans.
    pub fn plans_differ(&self) -> bool {
        let c = self.compared();
        c.windows(2).any(|w| {
            w[0].digest != w[1].digest || w[0].cost.map(f64::to_bits) != w[1].cost.map(f64::to_bits)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImprovementReport {
    pub rows: Vec<ReportRow>,
}

const COLUMNS: [&str; 21] = [
    "No.",
    "I",
    "II",
    "III",
    "IV",
    "V",
    "VI",
    "cost_path_off",
    "cost_path_naive",
    "cost_path_cache",
    "cost_path_cache_guess",
    "cache_hits_cache",
    "cache_hits_cache_guess",
    "digest_naive",
    "digest_cache",
    "digest_cache_guess",
    "cost_naive",
    "cost_cache",
    "cost_cache_guess",
    "status",
    "error",
];

fn pct(r: Option<f64>) -> String {
    r.map(|v| format!("{:.2}%", v * 100.0)).unwrap_or_else(|| "-".into())
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "-".into())
}

fn cell(records: &[&RunRecord], mode: Mode) -> (ModeCell, Option<String>) {
    match records.iter().find(|r| r.mode == mode) {
        Some(r) if r.ok() => (
            ModeCell {
                time_ms: r.wall_time * 1000.0,
                cost_path_calls: r.cost_path_calls,
                cache_hits: r.cache_hits,
                digest: Some(r.digest),
                cost: Some(r.final_cost),
            },
            None,
        ),
        found => (
            ModeCell { time_ms: 0.0, cost_path_calls: 0, cache_hits: 0, digest: None, cost: None },
            Some(match found {
                Some(r) => format!("{}: {}", mode, r.error.clone().unwrap_or_default()),
                None => format!("{mode}: not run"),
            }),
        ),
    }
}

impl ImprovementReport {
    /// Groups records by query, keeping first-seen query order.
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut order: Vec<&str> = Vec::new();
        let mut by_query: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
        for r in records {
            if !by_query.contains_key(r.query_id.as_str()) {
                order.push(&r.query_id);
            }
            by_query.entry(&r.query_id).or_default().push(r);
        }
        let rows = order
            .into_iter()
            .map(|id| {
                let recs = &by_query[id];
                let (off, e0) = cell(recs, Mode::Off);
                let (naive, e1) = cell(recs, Mode::Naive);
                let (cache, e2) = cell(recs, Mode::Cache);
                let (cache_guess, e3) = cell(recs, Mode::CacheGuess);
                let errors: Vec<String> = [e0, e1, e2, e3].into_iter().flatten().collect();
                ReportRow {
                    query_id: id.to_string(),
                    off,
                    naive,
                    cache,
                    cache_guess,
                    error: (!errors.is_empty()).then(|| errors.join("; ")),
                }
            })
            .collect();
        Self { rows }
    }

    /// Summed times, ratioed afterwards.
    pub fn totals(&self) -> (f64, f64, f64, f64) {
        let sum = |f: fn(&ReportRow) -> f64| self.rows.iter().map(f).sum::<f64>();
        (sum(ReportRow::i), sum(ReportRow::ii), sum(ReportRow::iii), sum(ReportRow::v))
    }

    pub fn mismatches(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.error.is_none() && r.plans_differ()).collect()
    }

    pub fn errors(&self) -> Vec<&ReportRow> {
        self.rows.iter().filter(|r| r.error.is_some()).collect()
    }

    pub fn to_tsv(&self) -> String {
        let mut out = COLUMNS.join("\t");
        out.push('\n');
        for r in &self.rows {
            let status = if r.error.is_some() {
                "error"
            } else if r.plans_differ() {
                "mismatch"
            } else {
                "ok"
            };
            let fields = [
                r.query_id.clone(),
                format!("{:.4}", r.i()),
                format!("{:.4}", r.ii()),
                format!("{:.4}", r.iii()),
                pct(r.iv()),
                format!("{:.4}", r.v()),
                pct(r.vi()),
                r.off.cost_path_calls.to_string(),
                r.naive.cost_path_calls.to_string(),
                r.cache.cost_path_calls.to_string(),
                r.cache_guess.cost_path_calls.to_string(),
                r.cache.cache_hits.to_string(),
                r.cache_guess.cache_hits.to_string(),
                opt(r.naive.digest.map(|d| format!("{d:016x}"))),
                opt(r.cache.digest.map(|d| format!("{d:016x}"))),
                opt(r.cache_guess.digest.map(|d| format!("{d:016x}"))),
                opt(r.naive.cost),
                opt(r.cache.cost),
                opt(r.cache_guess.cost),
                status.to_string(),
                r.error.clone().unwrap_or_else(|| "-".into()).replace(['\t', '\n'], " "),
            ];
            out.push_str(&fields.join("\t"));
            out.push('\n');
        }
        let (i, ii, iii, v) = self.totals();
        let count = |f: fn(&ReportRow) -> u64| self.rows.iter().map(f).sum::<u64>().to_string();
        let total = [
            "Total".to_string(),
            format!("{i:.4}"),
            format!("{ii:.4}"),
            format!("{iii:.4}"),
            pct(improvement_ratio(i, ii, iii).ok()),
            format!("{v:.4}"),
            pct(improvement_ratio(i, ii, v).ok()),
            count(|r| r.off.cost_path_calls),
            count(|r| r.naive.cost_path_calls),
            count(|r| r.cache.cost_path_calls),
            count(|r| r.cache_guess.cost_path_calls),
            count(|r| r.cache.cache_hits),
            count(|r| r.cache_guess.cache_hits),
        ];
        out.push_str(&total.join("\t"));
        out.push_str(&"\t-".repeat(COLUMNS.len() - total.len()));
        out.push('\n');
        out
    }

    /// Parses a report written by `to_tsv`. The Total row is recomputed, not read.
    pub fn from_tsv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, message: String| Error::ReportParse { line: line + 1, message };
        let header = lines.next().map(|(_, h)| h).unwrap_or_default();
        let cols: Vec<&str> = header.split('\t').collect();
        if cols != COLUMNS {
            return Err(bad(0, "unexpected report header".into()));
        }
        let mut rows = Vec::new();
        for (n, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != COLUMNS.len() {
                return Err(bad(n, format!("expected {} fields, found {}", COLUMNS.len(), f.len())));
            }
            if f[0] == "Total" {
                continue;
            }
            let num = |i: usize| f[i].parse::<f64>().map_err(|_| bad(n, format!("bad number in column {}", COLUMNS[i])));
            let int = |i: usize| f[i].parse::<u64>().map_err(|_| bad(n, format!("bad count in column {}", COLUMNS[i])));
            let digest = |i: usize| -> Result<Option<u64>> {
                match f[i] {
                    "-" => Ok(None),
                    s => u64::from_str_radix(s, 16).map(Some).map_err(|_| bad(n, format!("bad digest in column {}", COLUMNS[i]))),
                }
            };
            let cost = |i: usize| -> Result<Option<f64>> {
                match f[i] {
                    "-" => Ok(None),
                    _ => num(i).map(Some),
                }
            };
            let mk = |time: usize, calls: usize, hits: Option<usize>, d: Option<usize>, c: Option<usize>| -> Result<ModeCell> {
                Ok(ModeCell {
                    time_ms: num(time)?,
                    cost_path_calls: int(calls)?,
                    cache_hits: hits.map(int).transpose()?.unwrap_or(0),
                    digest: d.map(digest).transpose()?.flatten(),
                    cost: c.map(cost).transpose()?.flatten(),
                })
            };
            rows.push(ReportRow {
                query_id: f[0].to_string(),
                off: mk(1, 7, None, None, None)?,
                naive: mk(2, 8, None, Some(13), Some(16))?,
                cache: mk(3, 9, Some(11), Some(14), Some(17))?,
                cache_guess: mk(5, 10, Some(12), Some(15), Some(18))?,
                error: (f[20] != "-").then(|| f[20].to_string()),
            });
        }
        Ok(Self { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-4
    }

    #[test]
    fn ratio_examples() {
        assert!(close(improvement_ratio(2.836, 7.609, 6.004).unwrap(), 0.3362));
        assert!(close(improvement_ratio(2.836, 7.609, 6.186).unwrap(), 0.2981));
        assert_eq!(improvement_ratio(1.0, 3.0, 3.0).unwrap(), 0.0);
        assert!(improvement_ratio(3.0, 3.0, 1.0).is_err());
        assert!(improvement_ratio(1.0, 3.0, 4.0).unwrap() < 0.0);
    }

    fn rec(id: &str, mode: Mode, secs: f64, digest: u64) -> RunRecord {
        RunRecord {
            query_id: id.into(),
            mode,
            wall_time: secs,
            paths_built: 3,
            cost_path_calls: 3,
            cbo_invocations: 1,
            prune_events: 0,
            cache_probes: 0,
            cache_hits: 0,
            bucket_visits: 0,
            singleton_visits: 0,
            digest,
            final_cost: 10.5,
            error: None,
        }
    }

    fn sample() -> Vec<RunRecord> {
        let mut v = Vec::new();
        for (id, t) in [("q1", 1.0), ("q2", 2.0)] {
            v.push(rec(id, Mode::Off, 0.001 * t, 9));
            v.push(rec(id, Mode::Naive, 0.003 * t, 7));
            v.push(rec(id, Mode::Cache, 0.002 * t, 7));
            v.push(rec(id, Mode::CacheGuess, 0.0015 * t, 7));
        }
        v
    }

    #[test]
    fn tsv_round_trip() {
        let r = ImprovementReport::from_records(&sample());
        let text = r.to_tsv();
        assert!(text.starts_with("No.\tI\tII\tIII\tIV\tV\tVI\t"));
        assert!(text.lines().last().unwrap().starts_with("Total\t3.0000\t9.0000\t6.0000\t50.00%\t4.5000\t75.00%"));
        let back = ImprovementReport::from_tsv(&text).unwrap();
        assert_eq!(back.rows.len(), 2);
        assert_eq!(back.rows[1].naive.digest, Some(7));
        assert!(back.mismatches().is_empty());
    }

    #[test]
    fn mismatch_survives_round_trip() {
        let mut recs = sample();
        recs[3].digest = 8;
        let text = ImprovementReport::from_records(&recs).to_tsv();
        let back = ImprovementReport::from_tsv(&text).unwrap();
        assert_eq!(back.mismatches().len(), 1);
        assert_eq!(back.mismatches()[0].query_id, "q1");
    }
}
