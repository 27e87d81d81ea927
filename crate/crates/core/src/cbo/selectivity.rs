use crate::frontend::ast::BinaryOp;
use crate::ir::{ColumnRef, Literal, ScalarExpr, SubLinkKind};

pub const DEFAULT_RANGE: f64 = 1.0 / 3.0;
pub const DEFAULT_EQ: f64 = 0.005;
pub const DEFAULT_SUBLINK: f64 = 0.5;
pub const MIN_SELECTIVITY: f64 = 1e-7;

/// Statistics for one column as seen from the block being planned.
#[derive(Debug, Clone, PartialEq)]
pub struct ColStat {
    pub ndv: f64,
    pub min: Option<f64>,
    pub max: Option<f64>,
}

pub trait StatsView {
    fn column(&self, c: ColumnRef) -> Option<ColStat>;
}

impl<F: Fn(ColumnRef) -> Option<ColStat>> StatsView for F {
    fn column(&self, c: ColumnRef) -> Option<ColStat> {
        self(c)
    }
}

fn clamp(s: f64) -> f64 {
    if s.is_nan() {
        return DEFAULT_RANGE;
    }
    s.clamp(MIN_SELECTIVITY, 1.0)
}

/// Fraction of rows satisfying `expr`.
pub fn estimate_selectivity(expr: &ScalarExpr, stats: &dyn StatsView) -> f64 {
    clamp(raw(expr, stats))
}

fn column_of(e: &ScalarExpr) -> Option<ColumnRef> {
    match e {
        ScalarExpr::Column(c) => Some(*c),
        _ => None,
    }
}

fn constant_value(e: &ScalarExpr) -> Option<f64> {
    match e {
        ScalarExpr::Literal(l) => l.as_f64(),
        ScalarExpr::Neg(inner) => constant_value(inner).map(|v| -v),
        _ => None,
    }
}

fn ndv(stats: &dyn StatsView, c: ColumnRef) -> Option<f64> {
    stats.column(c).map(|s| s.ndv.max(1.0))
}

fn raw(expr: &ScalarExpr, stats: &dyn StatsView) -> f64 {
    match expr {
        ScalarExpr::Literal(Literal::Bool(true)) => 1.0,
        ScalarExpr::Literal(Literal::Bool(false)) | ScalarExpr::Literal(Literal::Null) => 0.0,
        ScalarExpr::Binary { op: BinaryOp::And, left, right } => clamp(raw(left, stats)) * clamp(raw(right, stats)),
        ScalarExpr::Binary { op: BinaryOp::Or, left, right } => {
            let (a, b) = (clamp(raw(left, stats)), clamp(raw(right, stats)));
            a + b - a * b
        }
        ScalarExpr::Not(inner) => 1.0 - clamp(raw(inner, stats)),
        ScalarExpr::Binary { op, left, right } if op.is_comparison() => comparison(*op, left, right, stats),
        ScalarExpr::InList { expr, list, negated } => {
            let mut distinct: Vec<String> = list.iter().map(|l| l.to_string()).collect();
            distinct.sort();
            distinct.dedup();
            let s = match column_of(expr).and_then(|c| ndv(stats, c)) {
                Some(n) => (distinct.len() as f64 / n).min(1.0),
                None => (distinct.len() as f64 * DEFAULT_EQ).min(1.0),
            };
            if *negated {
                1.0 - s
            } else {
                s
            }
        }
        ScalarExpr::SubLink(s) => match s.kind {
            SubLinkKind::In | SubLinkKind::Exists => DEFAULT_SUBLINK,
            SubLinkKind::Scalar => DEFAULT_RANGE,
        },
        _ => DEFAULT_RANGE,
    }
}

fn comparison(op: BinaryOp, left: &ScalarExpr, right: &ScalarExpr, stats: &dyn StatsView) -> f64 {
    // Normalize to `column op other`.
    let (op, col, other) = match (column_of(left), column_of(right)) {
        (Some(c), _) => (op, Some(c), right),
        (None, Some(c)) => (op.commuted().unwrap_or(op), Some(c), left),
        (None, None) => (op, None, right),
    };
    match op {
        BinaryOp::Eq | BinaryOp::NotEq => {
            let eq = match (col, column_of(other)) {
                (Some(a), Some(b)) => match (ndv(stats, a), ndv(stats, b)) {
                    (Some(x), Some(y)) => 1.0 / x.max(y),
                    (Some(x), None) | (None, Some(x)) => 1.0 / x,
                    (None, None) => DEFAULT_EQ,
                },
                (Some(a), None) => ndv(stats, a).map(|n| 1.0 / n).unwrap_or(DEFAULT_EQ),
                _ => DEFAULT_EQ,
            };
            if op == BinaryOp::Eq {
                eq
            } else {
                1.0 - eq
            }
        }
        _ => {
            let (Some(c), Some(v)) = (col, constant_value(other)) else {
                return DEFAULT_RANGE;
            };
            let Some(ColStat { min: Some(lo), max: Some(hi), .. }) = stats.column(c) else {
                return DEFAULT_RANGE;
            };
            if hi <= lo {
                return DEFAULT_RANGE;
            }
            let below = ((v - lo) / (hi - lo)).clamp(0.0, 1.0);
            match op {
                BinaryOp::Lt | BinaryOp::LtEq => below,
                _ => 1.0 - below,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn view(c: ColumnRef) -> Option<ColStat> {
        match (c.rti, c.col) {
            (1, 1) => Some(ColStat { ndv: 100.0, min: Some(0.0), max: Some(100.0) }),
            (2, 1) => Some(ColStat { ndv: 50.0, min: None, max: None }),
            (3, 1) => Some(ColStat { ndv: 200.0, min: None, max: None }),
            _ => None,
        }
    }

    fn eq(l: ScalarExpr, r: ScalarExpr) -> ScalarExpr {
        ScalarExpr::binary(BinaryOp::Eq, l, r)
    }

    #[test]
    fn equality_with_literal() {
        let e = eq(ScalarExpr::col(1, 1), ScalarExpr::lit(Literal::Int(5)));
        assert_eq!(estimate_selectivity(&e, &view), 0.01);
        let flipped = eq(ScalarExpr::lit(Literal::Int(5)), ScalarExpr::col(1, 1));
        assert_eq!(estimate_selectivity(&flipped, &view), 0.01);
    }

    #[test]
    fn join_equality_uses_larger_ndv() {
        let e = eq(ScalarExpr::col(2, 1), ScalarExpr::col(3, 1));
        assert_eq!(estimate_selectivity(&e, &view), 0.005);
    }

    #[test]
    fn unknown_function_defaults_to_a_third() {
        let e = ScalarExpr::Func { name: "f".into(), args: vec![ScalarExpr::col(1, 1)] };
        assert_eq!(estimate_selectivity(&e, &view), DEFAULT_RANGE);
    }

    #[test]
    fn range_interpolates() {
        let e = ScalarExpr::binary(BinaryOp::Lt, ScalarExpr::col(1, 1), ScalarExpr::lit(Literal::Int(25)));
        assert!((estimate_selectivity(&e, &view) - 0.25).abs() < 1e-12);
        let g = ScalarExpr::binary(BinaryOp::Lt, ScalarExpr::lit(Literal::Int(25)), ScalarExpr::col(1, 1));
        assert!((estimate_selectivity(&g, &view) - 0.75).abs() < 1e-12);
    }
}
