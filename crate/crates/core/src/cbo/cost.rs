use std::cmp::Ordering;
use std::fmt;

/// Planner cost in abstract work units.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Cost {
    pub startup: f64,
    pub total: f64,
}

impl Cost {
    pub fn new(startup: f64, total: f64) -> Self {
        Self { startup, total }
    }

    /// Ordering on total, then startup.
    pub fn cmp_total(&self, other: &Cost) -> Ordering {
        self.total
            .total_cmp(&other.total)
            .then(self.startup.total_cmp(&other.startup))
    }
}

impl fmt::Display for Cost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.2}..{:.2}", self.startup, self.total)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostParams {
    pub seq_page: f64,
    pub random_page: f64,
    pub cpu_tuple: f64,
    pub cpu_operator: f64,
    pub hash_build: f64,
    /// Bytes available to a hash table before it spills.
    pub work_mem: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            seq_page: 1.0,
            random_page: 4.0,
            cpu_tuple: 0.01,
            cpu_operator: 0.0025,
            hash_build: 0.015,
            work_mem: 4.0 * 1024.0 * 1024.0,
        }
    }
}

/// Products and sums of per-predicate factors are taken in sorted order so
/// that the result does not depend on predicate order.
pub fn product(mut factors: Vec<f64>) -> f64 {
    factors.sort_by(|a, b| a.total_cmp(b));
    factors.into_iter().fold(1.0, |acc, f| acc * f)
}

pub fn sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(|a, b| a.total_cmp(b));
    terms.into_iter().fold(0.0, |acc, t| acc + t)
}

impl CostParams {
    pub fn seqscan(&self, pages: f64, rows: f64, nquals: usize) -> Cost {
        let total = pages * self.seq_page + rows * self.cpu_tuple + rows * nquals as f64 * self.cpu_operator;
        Cost::new(0.0, total)
    }

    /// `matched` rows fetched through the index; `residual` quals evaluated on each.
    pub fn indexscan(&self, pages: f64, selectivity: f64, matched: f64, residual: usize) -> Cost {
        let io = self.random_page * (selectivity * pages).max(1.0);
        let startup = self.random_page;
        let total = io + matched * (self.cpu_tuple + self.cpu_operator) + matched * residual as f64 * self.cpu_operator;
        Cost::new(startup, total.max(startup))
    }

    pub fn sort(&self, rows: f64) -> f64 {
        if rows <= 1.0 {
            0.0
        } else {
            rows * rows.log2() * self.cpu_operator
        }
    }

    pub fn spills(&self, rows: f64, width: f64) -> bool {
        rows * width > self.work_mem
    }

    /// Hash-based duplicate elimination or grouping over `rows` input rows.
    pub fn hash_distinct(&self, rows: f64, width: f64) -> f64 {
        let base = rows * (self.cpu_tuple + self.hash_build);
        if self.spills(rows, width) {
            2.0 * base
        } else {
            base
        }
    }

    pub fn nestloop(&self, outer: Cost, outer_rows: f64, inner: Cost, inner_rows: f64, out_rows: f64) -> Cost {
        let startup = outer.startup + inner.startup;
        let total = outer.total
            + outer_rows * inner.total
            + outer_rows * inner_rows * self.cpu_operator
            + out_rows * self.cpu_tuple;
        Cost::new(startup, total)
    }

    /// Builds a hash table on the inner input and probes it with the outer.
    pub fn hashjoin(&self, outer: Cost, outer_rows: f64, inner: Cost, inner_rows: f64, out_rows: f64) -> Cost {
        let startup = inner.total + inner_rows * self.hash_build + outer.startup;
        let total = inner.total
            + inner_rows * self.hash_build
            + outer.total
            + outer_rows * self.cpu_operator
            + out_rows * self.cpu_tuple;
        Cost::new(startup, total)
    }

    pub fn mergejoin(&self, outer: Cost, outer_rows: f64, inner: Cost, inner_rows: f64, out_rows: f64) -> Cost {
        let startup = outer.total + inner.total + self.sort(outer_rows) + self.sort(inner_rows);
        let total = startup + (outer_rows + inner_rows) * self.cpu_operator + out_rows * self.cpu_tuple;
        Cost::new(startup, total)
    }

    pub fn limit(&self, input: Cost, input_rows: f64, count: f64) -> Cost {
        let frac = if input_rows <= 0.0 { 1.0 } else { (count / input_rows).min(1.0) };
        Cost::new(input.startup, input.startup + (input.total - input.startup) * frac)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seqscan_hand_value() {
        let c = CostParams::default().seqscan(100.0, 1000.0, 0);
        assert_eq!(c.total, 110.0);
        assert_eq!(c.startup, 0.0);
    }

    #[test]
    fn limit_keeps_startup() {
        let p = CostParams::default();
        let c = p.limit(Cost::new(5.0, 105.0), 100.0, 10.0);
        assert_eq!(c.startup, 5.0);
        assert_eq!(c.total, 15.0);
        let same = p.limit(Cost::new(5.0, 105.0), 100.0, 1000.0);
        assert_eq!(same.total, 105.0);
    }

    #[test]
    fn hashjoin_is_stable() {
        let p = CostParams::default();
        let a = p.hashjoin(Cost::new(0.0, 20.0), 1000.0, Cost::new(0.0, 1.1), 10.0, 1000.0);
        let b = p.hashjoin(Cost::new(0.0, 20.0), 1000.0, Cost::new(0.0, 1.1), 10.0, 1000.0);
        assert_eq!(a.total.to_bits(), b.total.to_bits());
        assert!((a.total - (1.1 + 0.15 + 20.0 + 2.5 + 10.0)).abs() < 1e-9);
    }

    #[test]
    fn products_ignore_order() {
        let a = product(vec![0.1, 0.3, 0.7, 0.11]);
        let b = product(vec![0.11, 0.7, 0.1, 0.3]);
        assert_eq!(a.to_bits(), b.to_bits());
    }
}
