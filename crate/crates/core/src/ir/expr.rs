use std::fmt::{self, Write};

use super::block::QueryBlock;
use super::relset::{RelSet, Rti};
use crate::datetime::format_date;

pub use crate::frontend::ast::BinaryOp;

/// A column of a range-table entry: `rti.col`, both 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ColumnRef {
    pub rti: Rti,
    pub col: usize,
}

impl ColumnRef {
    pub fn new(rti: Rti, col: usize) -> Self {
        Self { rti, col }
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.rti, self.col)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Literal {
    Null,
    Bool(bool),
    Int(i64),
    Decimal(f64),
    Text(String),
    Date(i32),
    Interval { months: i32, days: i32 },
}

impl Literal {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Literal::Int(i) => Some(*i as f64),
            Literal::Decimal(d) => Some(*d),
            Literal::Date(d) => Some(*d as f64),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Null => write!(f, "NULL"),
            Literal::Bool(b) => write!(f, "{}", if *b { "TRUE" } else { "FALSE" }),
            Literal::Int(i) => write!(f, "{i}"),
            Literal::Decimal(d) => write!(f, "{d:?}"),
            Literal::Text(s) => write!(f, "'{}'", s.replace('\'', "''")),
            Literal::Date(d) => write!(f, "DATE '{}'", format_date(*d)),
            Literal::Interval { months, days } => write!(f, "INTERVAL '{months} months {days} days'"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AggFunc {
    Sum,
    Count,
    Min,
    Max,
}

impl AggFunc {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "sum" => Some(AggFunc::Sum),
            "count" => Some(AggFunc::Count),
            "min" => Some(AggFunc::Min),
            "max" => Some(AggFunc::Max),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AggFunc::Sum => "sum",
            AggFunc::Count => "count",
            AggFunc::Min => "min",
            AggFunc::Max => "max",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SubLinkKind {
    In,
    Exists,
    Scalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubLink {
    pub kind: SubLinkKind,
    pub negated: bool,
    /// Left operand of `IN`.
    pub test_expr: Option<Box<ScalarExpr>>,
    pub block: QueryBlock,
}

impl SubLink {
    pub fn is_correlated(&self) -> bool {
        !self.block.outer_refs().is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScalarExpr {
    Column(ColumnRef),
    /// Reference to a column of the immediately enclosing block.
    Outer(ColumnRef),
    Literal(Literal),
    Binary {
        op: BinaryOp,
        left: Box<ScalarExpr>,
        right: Box<ScalarExpr>,
    },
    Not(Box<ScalarExpr>),
    Neg(Box<ScalarExpr>),
    Func {
        name: String,
        args: Vec<ScalarExpr>,
    },
    Agg {
        func: AggFunc,
        arg: Option<Box<ScalarExpr>>,
    },
    InList {
        expr: Box<ScalarExpr>,
        list: Vec<Literal>,
        negated: bool,
    },
    SubLink(Box<SubLink>),
}

impl ScalarExpr {
    pub fn col(rti: Rti, col: usize) -> Self {
        ScalarExpr::Column(ColumnRef::new(rti, col))
    }

    pub fn lit(l: Literal) -> Self {
        ScalarExpr::Literal(l)
    }

    pub fn binary(op: BinaryOp, left: ScalarExpr, right: ScalarExpr) -> Self {
        ScalarExpr::Binary {
            op,
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    /// Folds a list of conjuncts back into one `AND` tree.
    pub fn and_all(mut parts: Vec<ScalarExpr>) -> Option<ScalarExpr> {
        let first = if parts.is_empty() { return None } else { parts.remove(0) };
        Some(parts.into_iter().fold(first, |acc, p| ScalarExpr::binary(BinaryOp::And, acc, p)))
    }

    /// Splits top-level `AND`s.
    pub fn into_conjuncts(self) -> Vec<ScalarExpr> {
        match self {
            ScalarExpr::Binary { op: BinaryOp::And, left, right } => {
                let mut v = left.into_conjuncts();
                v.extend(right.into_conjuncts());
                v
            }
            other => vec![other],
        }
    }

    /// Pre-order visit of this expression; does not descend into sub-link blocks.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a ScalarExpr)) {
        f(self);
        match self {
            ScalarExpr::Binary { left, right, .. } => {
                left.visit(f);
                right.visit(f);
            }
            ScalarExpr::Not(e) | ScalarExpr::Neg(e) => e.visit(f),
            ScalarExpr::Func { args, .. } => args.iter().for_each(|a| a.visit(f)),
            ScalarExpr::Agg { arg: Some(a), .. } => a.visit(f),
            ScalarExpr::InList { expr, .. } => expr.visit(f),
            ScalarExpr::SubLink(s) => {
                if let Some(t) = &s.test_expr {
                    t.visit(f);
                }
            }
            _ => {}
        }
    }

    /// Rewrites every node bottom-up.
    pub fn transform(self, f: &mut dyn FnMut(ScalarExpr) -> ScalarExpr) -> ScalarExpr {
        let rebuilt = match self {
            ScalarExpr::Binary { op, left, right } => ScalarExpr::Binary {
                op,
                left: Box::new(left.transform(f)),
                right: Box::new(right.transform(f)),
            },
            ScalarExpr::Not(e) => ScalarExpr::Not(Box::new(e.transform(f))),
            ScalarExpr::Neg(e) => ScalarExpr::Neg(Box::new(e.transform(f))),
            ScalarExpr::Func { name, args } => ScalarExpr::Func {
                name,
                args: args.into_iter().map(|a| a.transform(f)).collect(),
            },
            ScalarExpr::Agg { func, arg } => ScalarExpr::Agg {
                func,
                arg: arg.map(|a| Box::new(a.transform(f))),
            },
            ScalarExpr::InList { expr, list, negated } => ScalarExpr::InList {
                expr: Box::new(expr.transform(f)),
                list,
                negated,
            },
            ScalarExpr::SubLink(mut s) => {
                s.test_expr = s.test_expr.map(|t| Box::new(t.transform(f)));
                ScalarExpr::SubLink(s)
            }
            leaf => leaf,
        };
        f(rebuilt)
    }

    /// Column references of this block appearing directly in the expression.
    pub fn column_refs(&self) -> Vec<ColumnRef> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ScalarExpr::Column(c) = e {
                out.push(*c);
            }
        });
        out
    }

    pub fn sublinks(&self) -> Vec<&SubLink> {
        let mut out = Vec::new();
        self.visit(&mut |e| {
            if let ScalarExpr::SubLink(s) = e {
                out.push(s.as_ref());
            }
        });
        out
    }

    pub fn has_sublink(&self) -> bool {
        !self.sublinks().is_empty()
    }

    pub fn has_aggregate(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, ScalarExpr::Agg { .. }));
        found
    }

    pub fn has_outer_ref(&self) -> bool {
        let mut found = false;
        self.visit(&mut |e| found |= matches!(e, ScalarExpr::Outer(_)));
        found
    }

    /// Range-table indices this expression depends on, including this
    /// block's columns referenced from inside correlated sub-links.
    pub fn referenced_rtis(&self) -> RelSet {
        let mut set = RelSet::EMPTY;
        for c in self.column_refs() {
            set.insert(c.rti);
        }
        for s in self.sublinks() {
            for c in s.block.outer_refs() {
                set.insert(c.rti);
            }
        }
        set
    }

    /// Applies `map` to every reference into this block: direct column
    /// references and the outer references of nested sub-link blocks.
    pub fn map_columns(self, map: &dyn Fn(ColumnRef) -> ColumnRef) -> ScalarExpr {
        self.transform(&mut |e| match e {
            ScalarExpr::Column(c) => ScalarExpr::Column(map(c)),
            ScalarExpr::SubLink(mut s) => {
                s.block.map_outer_refs(map);
                ScalarExpr::SubLink(s)
            }
            other => other,
        })
    }

    /// Canonical text. Outer references are rendered with `outer`.
    pub fn canonical_with(&self, outer: &dyn Fn(ColumnRef) -> String) -> String {
        self.render(&|c| c.to_string(), outer)
    }

    /// Canonical text with caller-chosen spelling for this block's columns
    /// (`col`) and for references to the enclosing block (`outer`).
    pub fn render(&self, col: &dyn Fn(ColumnRef) -> String, outer: &dyn Fn(ColumnRef) -> String) -> String {
        let mut s = String::new();
        self.write_canonical(&mut s, col, outer);
        s
    }

    fn write_canonical(&self, out: &mut String, col: &dyn Fn(ColumnRef) -> String, outer: &dyn Fn(ColumnRef) -> String) {
        match self {
            ScalarExpr::Column(c) => out.push_str(&col(*c)),
            ScalarExpr::Outer(c) => out.push_str(&outer(*c)),
            ScalarExpr::Literal(l) => {
                let _ = write!(out, "{l}");
            }
            ScalarExpr::Binary { op, left, right } => {
                out.push('(');
                left.write_canonical(out, col, outer);
                let _ = write!(out, " {} ", op.symbol());
                right.write_canonical(out, col, outer);
                out.push(')');
            }
            ScalarExpr::Not(e) => {
                out.push_str("NOT ");
                e.write_canonical(out, col, outer);
            }
            ScalarExpr::Neg(e) => {
                out.push('-');
                e.write_canonical(out, col, outer);
            }
            ScalarExpr::Func { name, args } => {
                let _ = write!(out, "{name}(");
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    a.write_canonical(out, col, outer);
                }
                out.push(')');
            }
            ScalarExpr::Agg { func, arg } => {
                let _ = write!(out, "{}(", func.name());
                match arg {
                    Some(a) => a.write_canonical(out, col, outer),
                    None => out.push('*'),
                }
                out.push(')');
            }
            ScalarExpr::InList { expr, list, negated } => {
                expr.write_canonical(out, col, outer);
                out.push_str(if *negated { " NOT IN (" } else { " IN (" });
                for (i, l) in list.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    let _ = write!(out, "{l}");
                }
                out.push(')');
            }
            ScalarExpr::SubLink(s) => {
                if let Some(t) = &s.test_expr {
                    t.write_canonical(out, col, outer);
                    out.push(' ');
                }
                if s.negated {
                    out.push_str("NOT ");
                }
                let kind = match s.kind {
                    super::SubLinkKind::In => "IN",
                    super::SubLinkKind::Exists => "EXISTS",
                    super::SubLinkKind::Scalar => "SCALAR",
                };
                // Inner outer-refs point at this block's columns.
                let _ = write!(out, "{kind} ({})", s.block.canonical_with(&|c| format!("^{}", col(c))));
            }
        }
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical_with(&|c| format!("^{c}")))
    }
}

/// A boolean expression with its cached range-table set.
#[derive(Debug, Clone, PartialEq)]
pub struct Predicate {
    pub expr: ScalarExpr,
    pub referenced_rtis: RelSet,
}

impl Predicate {
    pub fn new(expr: ScalarExpr) -> Self {
        let referenced_rtis = expr.referenced_rtis();
        Self { expr, referenced_rtis }
    }

    /// `a = b` between two plain columns.
    pub fn as_column_equality(&self) -> Option<(ColumnRef, ColumnRef)> {
        match &self.expr {
            ScalarExpr::Binary { op: BinaryOp::Eq, left, right } => match (left.as_ref(), right.as_ref()) {
                (ScalarExpr::Column(a), ScalarExpr::Column(b)) => Some((*a, *b)),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn map_columns(self, map: &dyn Fn(ColumnRef) -> ColumnRef) -> Predicate {
        Predicate::new(self.expr.map_columns(map))
    }

    pub fn is_consistent(&self) -> bool {
        self.expr.referenced_rtis() == self.referenced_rtis
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.expr)
    }
}
