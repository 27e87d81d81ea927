//! SQL text from a syntax tree. Binary and unary operators are fully
//! parenthesized so that `parse(render(ast)) == ast`.

use std::fmt::Write;

use super::ast::*;

pub fn render(select: &Select) -> String {
    let mut out = String::new();
    render_select(select, &mut out);
    out
}

fn render_select(s: &Select, out: &mut String) {
    out.push_str("SELECT ");
    if !s.hints.is_empty() {
        out.push_str("/*+ ");
        for h in &s.hints {
            let _ = write!(out, "{}({}) ", h.method.hint_name(), h.table_names.join(" "));
        }
        out.push_str("*/ ");
    }
    if s.distinct {
        out.push_str("DISTINCT ");
    }
    for (i, item) in s.select_list.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        match item {
            SelectItem::Wildcard => out.push('*'),
            SelectItem::Expr { expr, alias } => {
                render_expr(expr, out);
                if let Some(a) = alias {
                    let _ = write!(out, " AS {a}");
                }
            }
        }
    }
    out.push_str(" FROM ");
    for (i, item) in s.from.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        render_from(item, out);
    }
    if let Some(w) = &s.where_clause {
        out.push_str(" WHERE ");
        render_expr(w, out);
    }
    if !s.group_by.is_empty() {
        out.push_str(" GROUP BY ");
        render_list(&s.group_by, out);
    }
    if !s.order_by.is_empty() {
        out.push_str(" ORDER BY ");
        for (i, o) in s.order_by.iter().enumerate() {
            if i > 0 {
                out.push_str(", ");
            }
            render_expr(&o.expr, out);
            if o.desc {
                out.push_str(" DESC");
            }
        }
    }
    if let Some(l) = s.limit {
        let _ = write!(out, " LIMIT {l}");
    }
    if let Some(o) = s.offset {
        let _ = write!(out, " OFFSET {o}");
    }
}

fn render_from(item: &FromItem, out: &mut String) {
    match item {
        FromItem::Table { name, alias } => {
            out.push_str(name);
            if let Some(a) = alias {
                let _ = write!(out, " AS {a}");
            }
        }
        FromItem::Subquery { query, alias, columns } => {
            out.push('(');
            render_select(query, out);
            let _ = write!(out, ") AS {alias}");
            if !columns.is_empty() {
                let _ = write!(out, "({})", columns.join(", "));
            }
        }
        FromItem::Join { kind, left, right, on } => {
            render_from(left, out);
            out.push_str(match kind {
                AstJoinKind::Inner => " JOIN ",
                AstJoinKind::Left => " LEFT JOIN ",
            });
            render_from(right, out);
            out.push_str(" ON ");
            render_expr(on, out);
        }
    }
}

fn render_list(list: &[Expr], out: &mut String) {
    for (i, e) in list.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        render_expr(e, out);
    }
}

fn render_literal(lit: &AstLiteral, out: &mut String) {
    match lit {
        AstLiteral::Null => out.push_str("NULL"),
        AstLiteral::Bool(b) => out.push_str(if *b { "TRUE" } else { "FALSE" }),
        AstLiteral::Integer(i) => {
            let _ = write!(out, "{i}");
        }
        AstLiteral::Decimal(f) => {
            let text = format!("{f:?}");
            out.push_str(&text);
        }
        AstLiteral::String(s) => {
            let _ = write!(out, "'{}'", s.replace('\'', "''"));
        }
        AstLiteral::Date(s) => {
            let _ = write!(out, "DATE '{}'", s.replace('\'', "''"));
        }
        AstLiteral::Interval { value, unit } => {
            let _ = write!(out, "INTERVAL '{}' {}", value.replace('\'', "''"), unit.to_ascii_uppercase());
        }
    }
}

pub fn render_expr(e: &Expr, out: &mut String) {
    match e {
        Expr::Ident(parts) => out.push_str(&parts.join(".")),
        Expr::Literal(l) => render_literal(l, out),
        Expr::Binary { op, left, right } => {
            out.push('(');
            render_expr(left, out);
            let _ = write!(out, " {} ", op.symbol());
            render_expr(right, out);
            out.push(')');
        }
        Expr::Unary { op, expr } => {
            out.push_str(match op {
                UnaryOp::Not => "(NOT ",
                UnaryOp::Neg => "(- ",
            });
            render_expr(expr, out);
            out.push(')');
        }
        Expr::Func { name, args, star } => {
            let _ = write!(out, "{name}(");
            if *star {
                out.push('*');
            } else {
                render_list(args, out);
            }
            out.push(')');
        }
        Expr::InList { expr, list, negated } => {
            out.push('(');
            render_expr(expr, out);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            render_list(list, out);
            out.push_str("))");
        }
        Expr::InSubquery { expr, query, negated } => {
            out.push('(');
            render_expr(expr, out);
            out.push_str(if *negated { " NOT IN (" } else { " IN (" });
            render_select(query, out);
            out.push_str("))");
        }
        Expr::Exists { query, negated } => {
            out.push('(');
            out.push_str(if *negated { "NOT EXISTS (" } else { "EXISTS (" });
            render_select(query, out);
            out.push_str("))");
        }
        Expr::ScalarSubquery(q) => {
            out.push('(');
            render_select(q, out);
            out.push(')');
        }
    }
}
