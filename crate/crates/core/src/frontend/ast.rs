//! Unresolved syntax tree for the supported SQL subset.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum JoinMethod {
    NestLoop,
    HashJoin,
    MergeJoin,
}

impl JoinMethod {
    pub fn hint_name(self) -> &'static str {
        match self {
            JoinMethod::NestLoop => "NESTLOOP",
            JoinMethod::HashJoin => "HASHJOIN",
            JoinMethod::MergeJoin => "MERGEJOIN",
        }
    }

    pub fn from_hint_name(name: &str) -> Option<Self> {
        match name.to_ascii_uppercase().as_str() {
            "NESTLOOP" => Some(JoinMethod::NestLoop),
            "HASHJOIN" => Some(JoinMethod::HashJoin),
            "MERGEJOIN" => Some(JoinMethod::MergeJoin),
            _ => None,
        }
    }
}

/// A join-method hint such as `/*+ NESTLOOP(t1 t2) */`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HintSpec {
    pub method: JoinMethod,
    /// Lower-cased table aliases, sorted and deduplicated.
    pub table_names: Vec<String>,
}

impl HintSpec {
    pub fn new(method: JoinMethod, names: impl IntoIterator<Item = String>) -> Self {
        let mut table_names: Vec<String> = names.into_iter().map(|n| n.to_ascii_lowercase()).collect();
        table_names.sort();
        table_names.dedup();
        Self { method, table_names }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Select {
    pub hints: Vec<HintSpec>,
    pub distinct: bool,
    pub select_list: Vec<SelectItem>,
    pub from: Vec<FromItem>,
    pub where_clause: Option<Expr>,
    pub group_by: Vec<Expr>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub offset: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectItem {
    Wildcard,
    Expr { expr: Expr, alias: Option<String> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AstJoinKind {
    Inner,
    Left,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FromItem {
    Table {
        name: String,
        alias: Option<String>,
    },
    Subquery {
        query: Box<Select>,
        alias: String,
        columns: Vec<String>,
    },
    Join {
        kind: AstJoinKind,
        left: Box<FromItem>,
        right: Box<FromItem>,
        on: Expr,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderItem {
    pub expr: Expr,
    pub desc: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum AstLiteral {
    Null,
    Bool(bool),
    Integer(i64),
    Decimal(f64),
    String(String),
    Date(String),
    Interval { value: String, unit: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinaryOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    Plus,
    Minus,
    Mul,
    Div,
    And,
    Or,
}

impl BinaryOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Eq => "=",
            BinaryOp::NotEq => "<>",
            BinaryOp::Lt => "<",
            BinaryOp::LtEq => "<=",
            BinaryOp::Gt => ">",
            BinaryOp::GtEq => ">=",
            BinaryOp::Plus => "+",
            BinaryOp::Minus => "-",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
            BinaryOp::And => "AND",
            BinaryOp::Or => "OR",
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinaryOp::Eq | BinaryOp::NotEq | BinaryOp::Lt | BinaryOp::LtEq | BinaryOp::Gt | BinaryOp::GtEq
        )
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinaryOp::Plus | BinaryOp::Minus | BinaryOp::Mul | BinaryOp::Div)
    }

    /// The operator with its operands swapped (`a < b` == `b > a`).
    pub fn commuted(self) -> Option<BinaryOp> {
        Some(match self {
            BinaryOp::Eq => BinaryOp::Eq,
            BinaryOp::NotEq => BinaryOp::NotEq,
            BinaryOp::Lt => BinaryOp::Gt,
            BinaryOp::LtEq => BinaryOp::GtEq,
            BinaryOp::Gt => BinaryOp::Lt,
            BinaryOp::GtEq => BinaryOp::LtEq,
            BinaryOp::Plus => BinaryOp::Plus,
            BinaryOp::Mul => BinaryOp::Mul,
            BinaryOp::And => BinaryOp::And,
            BinaryOp::Or => BinaryOp::Or,
            BinaryOp::Minus | BinaryOp::Div => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Not,
    Neg,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    /// Possibly-qualified identifier, lower-cased.
    Ident(Vec<String>),
    Literal(AstLiteral),
    Binary {
        op: BinaryOp,
        left: Box<Expr>,
        right: Box<Expr>,
    },
    Unary {
        op: UnaryOp,
        expr: Box<Expr>,
    },
    Func {
        name: String,
        args: Vec<Expr>,
        star: bool,
    },
    InList {
        expr: Box<Expr>,
        list: Vec<Expr>,
        negated: bool,
    },
    InSubquery {
        expr: Box<Expr>,
        query: Box<Select>,
        negated: bool,
    },
    Exists {
        query: Box<Select>,
        negated: bool,
    },
    ScalarSubquery(Box<Select>),
}
