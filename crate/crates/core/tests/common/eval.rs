//! Row-level evaluator for scalar expressions with SQL three-valued logic.

use optlab::ir::{BinaryOp, ColumnRef, Literal, ScalarExpr, SubLink};

/// What an expression can see while it is evaluated.
pub trait Env {
    fn column(&self, c: ColumnRef) -> Value;

    fn outer(&self, c: ColumnRef) -> Value {
        panic!("no enclosing row for outer reference {c:?}")
    }

    fn sublink(&self, _s: &SubLink) -> Value {
        panic!("sub-links need an executor")
    }
}

impl<F: Fn(ColumnRef) -> Value> Env for F {
    fn column(&self, c: ColumnRef) -> Value {
        self(c)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Num(f64),
    Text(String),
}

impl Value {
    pub fn from_literal(l: &Literal) -> Value {
        match l {
            Literal::Null => Value::Null,
            Literal::Bool(b) => Value::Bool(*b),
            Literal::Int(i) => Value::Num(*i as f64),
            Literal::Decimal(d) => Value::Num(*d),
            Literal::Text(s) => Value::Text(s.clone()),
            Literal::Date(d) => Value::Num(*d as f64),
            Literal::Interval { .. } => panic!("interval literals are folded before evaluation"),
        }
    }
}

pub fn compare(op: BinaryOp, a: &Value, b: &Value) -> Value {
    let ord = match (a, b) {
        (Value::Num(x), Value::Num(y)) => x.partial_cmp(y),
        (Value::Text(x), Value::Text(y)) => Some(x.cmp(y)),
        (Value::Bool(x), Value::Bool(y)) => Some(x.cmp(y)),
        _ => None,
    };
    let Some(o) = ord else { return Value::Null };
    use std::cmp::Ordering::*;
    Value::Bool(match op {
        BinaryOp::Eq => o == Equal,
        BinaryOp::NotEq => o != Equal,
        BinaryOp::Lt => o == Less,
        BinaryOp::LtEq => o != Greater,
        BinaryOp::Gt => o == Greater,
        BinaryOp::GtEq => o != Less,
        _ => unreachable!(),
    })
}

pub fn truth(v: &Value) -> Option<bool> {
    match v {
        Value::Bool(b) => Some(*b),
        _ => None,
    }
}

/// Evaluates `e` against the row visible through `row`.
pub fn eval(e: &ScalarExpr, row: &dyn Env) -> Value {
    match e {
        ScalarExpr::Column(c) => row.column(*c),
        ScalarExpr::Outer(c) => row.outer(*c),
        ScalarExpr::SubLink(s) => row.sublink(s),
        ScalarExpr::Literal(l) => Value::from_literal(l),
        ScalarExpr::Not(x) => match truth(&eval(x, row)) {
            Some(b) => Value::Bool(!b),
            None => Value::Null,
        },
        ScalarExpr::Neg(x) => match eval(x, row) {
            Value::Num(n) => Value::Num(-n),
            _ => Value::Null,
        },
        ScalarExpr::InList { expr, list, negated } => {
            let v = eval(expr, row);
            if v == Value::Null {
                return Value::Null;
            }
            let mut saw_null = false;
            for l in list {
                match compare(BinaryOp::Eq, &v, &Value::from_literal(l)) {
                    Value::Bool(true) => return Value::Bool(!negated),
                    Value::Null => saw_null = true,
                    _ => {}
                }
            }
            if saw_null {
                Value::Null
            } else {
                Value::Bool(*negated)
            }
        }
        ScalarExpr::Binary { op, left, right } => {
            let (a, b) = (eval(left, row), eval(right, row));
            match op {
                BinaryOp::And => match (truth(&a), truth(&b)) {
                    (Some(false), _) | (_, Some(false)) => Value::Bool(false),
                    (Some(true), Some(true)) => Value::Bool(true),
                    _ => Value::Null,
                },
                BinaryOp::Or => match (truth(&a), truth(&b)) {
                    (Some(true), _) | (_, Some(true)) => Value::Bool(true),
                    (Some(false), Some(false)) => Value::Bool(false),
                    _ => Value::Null,
                },
                BinaryOp::Plus | BinaryOp::Minus | BinaryOp::Mul | BinaryOp::Div => match (a, b) {
                    (Value::Num(x), Value::Num(y)) => Value::Num(match op {
                        BinaryOp::Plus => x + y,
                        BinaryOp::Minus => x - y,
                        BinaryOp::Mul => x * y,
                        _ if y == 0.0 => return Value::Null,
                        _ => x / y,
                    }),
                    _ => Value::Null,
                },
                _ => compare(*op, &a, &b),
            }
        }
        other => panic!("evaluator does not handle {other:?}"),
    }
}
