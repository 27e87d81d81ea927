use super::ast::{AstJoinKind, AstLiteral, Expr, FromItem, Select, SelectItem, UnaryOp};
use crate::catalog::Catalog;
use crate::datetime::parse_date;
use crate::error::{Error, Result};
use crate::ir::{
    AggFunc, ColumnRef, JoinKind, JoinNode, Literal, Predicate, QueryBlock, QueryTree, RangeTableEntry, RelSet, RteKind,
    ScalarExpr, SortKey, SubLink, SubLinkKind, TargetEntry, MAX_RTI,
};

/// Names visible in one block: alias and column names per range-table entry.
#[derive(Default)]
struct Scope {
    rels: Vec<(String, Vec<String>)>,
}

impl Scope {
    fn lookup(&self, qualifier: Option<&str>, name: &str) -> Result<Option<ColumnRef>> {
        let mut found = None;
        for (i, (alias, cols)) in self.rels.iter().enumerate() {
            if qualifier.is_some_and(|q| q != alias) {
                continue;
            }
            if let Some(pos) = cols.iter().position(|c| c == name) {
                if found.is_some() {
                    return Err(Error::AmbiguousColumn(name.to_string()));
                }
                found = Some(ColumnRef::new(i + 1, pos + 1));
            }
        }
        Ok(found)
    }

    fn has_alias(&self, alias: &str) -> bool {
        self.rels.iter().any(|(a, _)| a == alias)
    }
}

struct Resolver<'c> {
    catalog: &'c Catalog,
    next_block_id: u32,
}

pub fn resolve(ast: &Select, catalog: &Catalog) -> Result<QueryTree> {
    let mut r = Resolver { catalog, next_block_id: 0 };
    let root = r.block(ast, &[])?;
    Ok(QueryTree::new(root, r.next_block_id))
}

pub fn parse_and_resolve(sql: &str, catalog: &Catalog) -> Result<QueryTree> {
    resolve(&super::parse(sql)?, catalog)
}

fn literal(l: &AstLiteral) -> Result<Literal> {
    Ok(match l {
        AstLiteral::Null => Literal::Null,
        AstLiteral::Bool(b) => Literal::Bool(*b),
        AstLiteral::Integer(i) => Literal::Int(*i),
        AstLiteral::Decimal(d) => Literal::Decimal(*d),
        AstLiteral::String(s) => Literal::Text(s.clone()),
        AstLiteral::Date(s) => {
            Literal::Date(parse_date(s).ok_or_else(|| Error::Unsupported(format!("invalid date literal '{s}'")))?)
        }
        AstLiteral::Interval { value, unit } => {
            let n: i32 = value
                .trim()
                .parse()
                .map_err(|_| Error::Unsupported(format!("invalid interval '{value}'")))?;
            match unit.as_str() {
                "day" => Literal::Interval { months: 0, days: n },
                "month" => Literal::Interval { months: n, days: 0 },
                "year" => Literal::Interval { months: 12 * n, days: 0 },
                other => return Err(Error::Unsupported(format!("interval unit {other}"))),
            }
        }
    })
}

fn display_name(e: &Expr) -> String {
    match e {
        Expr::Ident(parts) => parts.last().cloned().unwrap_or_default(),
        Expr::Func { name, .. } => name.clone(),
        _ => "?column?".to_string(),
    }
}

impl Resolver<'_> {
    fn block(&mut self, sel: &Select, outer: &[&Scope]) -> Result<QueryBlock> {
        let mut block = QueryBlock::empty(self.next_block_id);
        self.next_block_id += 1;
        let mut scope = Scope::default();

        let mut pending_on: Vec<(Option<RelSet>, Expr)> = Vec::new();
        for item in &sel.from {
            let node = self.from_item(item, &mut block, &mut scope, &mut pending_on, true)?;
            if let Some(n) = node {
                block.jointree.push(n);
            }
        }
        if block.range_table.len() > MAX_RTI {
            return Err(Error::Unsupported(format!("more than {MAX_RTI} range-table entries")));
        }
        // ON clauses are bound after the whole FROM list so they may name any entry.
        let mut inner_quals = Vec::new();
        for (target, on) in pending_on {
            let e = self.expr(&on, &scope, outer)?;
            match target {
                None => inner_quals.extend(e.into_conjuncts().into_iter().map(Predicate::new)),
                Some(key) => attach_on(&mut block.jointree, key, e),
            }
        }

        let mut targets = Vec::new();
        for item in &sel.select_list {
            match item {
                SelectItem::Wildcard => {
                    for (i, (_, cols)) in scope.rels.iter().enumerate() {
                        for (j, c) in cols.iter().enumerate() {
                            targets.push(TargetEntry {
                                expr: ScalarExpr::col(i + 1, j + 1),
                                name: c.clone(),
                            });
                        }
                    }
                }
                SelectItem::Expr { expr, alias } => targets.push(TargetEntry {
                    expr: self.expr(expr, &scope, outer)?,
                    name: alias.clone().unwrap_or_else(|| display_name(expr)),
                }),
            }
        }
        block.target_list = targets;

        if let Some(w) = &sel.where_clause {
            block.quals = self.expr(w, &scope, outer)?.into_conjuncts().into_iter().map(Predicate::new).collect();
        }
        block.quals.extend(inner_quals);

        for g in &sel.group_by {
            let e = self.output_ref(g, &block, &scope, outer)?;
            block.group_by.push(e);
        }
        for o in &sel.order_by {
            let e = self.output_ref(&o.expr, &block, &scope, outer)?;
            block.order_by.push(SortKey { expr: e, desc: o.desc });
        }
        block.limit = sel.limit;
        block.offset = sel.offset;
        block.distinct = sel.distinct;

        for h in &sel.hints {
            if let Some(bad) = h.table_names.iter().find(|n| !scope.has_alias(n)) {
                return Err(Error::UnknownTable(bad.clone()));
            }
            if h.table_names.len() < 2 {
                return Err(Error::Unsupported("join hint must name at least two tables".into()));
            }
        }
        block.hints = sel.hints.clone();
        Ok(block)
    }

    /// Binds one FROM item. Inner joins at the top of the FROM list are
    /// flattened into the block's quals; joins under an outer join keep
    /// their structure.
    fn from_item(
        &mut self,
        item: &FromItem,
        block: &mut QueryBlock,
        scope: &mut Scope,
        pending_on: &mut Vec<(Option<RelSet>, Expr)>,
        flatten: bool,
    ) -> Result<Option<JoinNode>> {
        match item {
            FromItem::Table { name, alias } => {
                let table = self.catalog.table(name).ok_or_else(|| Error::UnknownTable(name.clone()))?;
                let alias = alias.clone().unwrap_or_else(|| table.name.clone());
                self.add_rte(
                    block,
                    scope,
                    RangeTableEntry {
                        alias,
                        kind: RteKind::Base { oid: table.oid, table_name: table.name.clone() },
                    },
                    table.columns.iter().map(|c| c.name.clone()).collect(),
                )?;
                Ok(Some(JoinNode::Rel(block.range_table.len())))
            }
            FromItem::Subquery { query, alias, columns } => {
                let child = self.block(query, &[])?;
                let mut names: Vec<String> = child.target_list.iter().map(|t| t.name.clone()).collect();
                if columns.len() > names.len() {
                    return Err(Error::Unsupported(format!("too many column aliases for {alias}")));
                }
                for (n, c) in names.iter_mut().zip(columns) {
                    *n = c.clone();
                }
                self.add_rte(
                    block,
                    scope,
                    RangeTableEntry {
                        alias: alias.clone(),
                        kind: RteKind::Subquery { block: Box::new(child), column_names: names.clone() },
                    },
                    names,
                )?;
                Ok(Some(JoinNode::Rel(block.range_table.len())))
            }
            FromItem::Join { kind: AstJoinKind::Inner, left, right, on } if flatten => {
                for side in [left, right] {
                    if let Some(n) = self.from_item(side, block, scope, pending_on, true)? {
                        block.jointree.push(n);
                    }
                }
                pending_on.push((None, on.clone()));
                Ok(None)
            }
            FromItem::Join { kind, left, right, on } => {
                let l = self.from_item(left, block, scope, pending_on, false)?.expect("unflattened");
                let r = self.from_item(right, block, scope, pending_on, false)?.expect("unflattened");
                let kind = match kind {
                    AstJoinKind::Inner => JoinKind::Inner,
                    AstJoinKind::Left => JoinKind::Left,
                };
                let node = JoinNode::Join { kind, left: Box::new(l), right: Box::new(r), quals: Vec::new() };
                // Join nodes are addressed by their relid sets, which are unique.
                pending_on.push((Some(node.relids()), on.clone()));
                Ok(Some(node))
            }
        }
    }

    fn add_rte(&self, block: &mut QueryBlock, scope: &mut Scope, rte: RangeTableEntry, cols: Vec<String>) -> Result<()> {
        if scope.has_alias(&rte.alias) {
            return Err(Error::Unsupported(format!("duplicate table alias {}", rte.alias)));
        }
        if block.range_table.len() >= MAX_RTI {
            return Err(Error::Unsupported(format!("more than {MAX_RTI} range-table entries")));
        }
        scope.rels.push((rte.alias.clone(), cols));
        block.range_table.push(rte);
        Ok(())
    }

    /// GROUP BY / ORDER BY item: ordinal, output alias, or expression.
    fn output_ref(&mut self, e: &Expr, block: &QueryBlock, scope: &Scope, outer: &[&Scope]) -> Result<ScalarExpr> {
        if let Expr::Literal(AstLiteral::Integer(n)) = e {
            let n = *n as usize;
            return block
                .target_list
                .get(n.wrapping_sub(1))
                .map(|t| t.expr.clone())
                .ok_or_else(|| Error::Unsupported(format!("position {n} is not in the select list")));
        }
        match self.expr(e, scope, outer) {
            Err(Error::UnknownColumn(name)) => {
                if let Expr::Ident(parts) = e {
                    if parts.len() == 1 {
                        if let Some(t) = block.target_list.iter().find(|t| t.name == parts[0]) {
                            return Ok(t.expr.clone());
                        }
                    }
                }
                Err(Error::UnknownColumn(name))
            }
            other => other,
        }
    }

    fn ident(&self, parts: &[String], scope: &Scope, outer: &[&Scope]) -> Result<ScalarExpr> {
        let (qualifier, name) = match parts {
            [n] => (None, n.as_str()),
            [q, n] => (Some(q.as_str()), n.as_str()),
            _ => return Err(Error::Unsupported(format!("identifier {}", parts.join(".")))),
        };
        let scopes = std::iter::once(scope).chain(outer.iter().copied());
        for (depth, s) in scopes.enumerate() {
            if qualifier.is_some_and(|q| !s.has_alias(q)) {
                continue;
            }
            if let Some(c) = s.lookup(qualifier, name)? {
                return match depth {
                    0 => Ok(ScalarExpr::Column(c)),
                    1 => Ok(ScalarExpr::Outer(c)),
                    _ => Err(Error::Unsupported(format!("correlation more than one level up: {}", parts.join(".")))),
                };
            }
            if qualifier.is_some() {
                break;
            }
        }
        if let Some(q) = qualifier {
            let known = std::iter::once(scope).chain(outer.iter().copied()).any(|s| s.has_alias(q));
            if !known {
                return Err(Error::UnknownTable(q.to_string()));
            }
        }
        Err(Error::UnknownColumn(parts.join(".")))
    }

    fn sublink(
        &mut self,
        kind: SubLinkKind,
        negated: bool,
        test: Option<&Expr>,
        query: &Select,
        scope: &Scope,
        outer: &[&Scope],
    ) -> Result<ScalarExpr> {
        let test_expr = match test {
            Some(t) => Some(Box::new(self.expr(t, scope, outer)?)),
            None => None,
        };
        let mut chain: Vec<&Scope> = vec![scope];
        chain.extend(outer.iter().copied());
        let block = self.block(query, &chain)?;
        if matches!(kind, SubLinkKind::In | SubLinkKind::Scalar) && block.target_list.len() != 1 {
            return Err(Error::Unsupported("subquery must return exactly one column".into()));
        }
        Ok(ScalarExpr::SubLink(Box::new(SubLink { kind, negated, test_expr, block })))
    }

    fn expr(&mut self, e: &Expr, scope: &Scope, outer: &[&Scope]) -> Result<ScalarExpr> {
        Ok(match e {
            Expr::Ident(parts) => self.ident(parts, scope, outer)?,
            Expr::Literal(l) => ScalarExpr::Literal(literal(l)?),
            Expr::Binary { op, left, right } => {
                ScalarExpr::binary(*op, self.expr(left, scope, outer)?, self.expr(right, scope, outer)?)
            }
            Expr::Unary { op: UnaryOp::Not, expr } => ScalarExpr::Not(Box::new(self.expr(expr, scope, outer)?)),
            Expr::Unary { op: UnaryOp::Neg, expr } => ScalarExpr::Neg(Box::new(self.expr(expr, scope, outer)?)),
            Expr::Func { name, args, star } => {
                let func = AggFunc::from_name(name).ok_or_else(|| Error::Unsupported(format!("function {name}")))?;
                if *star {
                    if func != AggFunc::Count {
                        return Err(Error::Unsupported(format!("{name}(*)")));
                    }
                    ScalarExpr::Agg { func, arg: None }
                } else {
                    if args.len() != 1 {
                        return Err(Error::Unsupported(format!("{name} takes one argument")));
                    }
                    let arg = self.expr(&args[0], scope, outer)?;
                    if arg.has_aggregate() {
                        return Err(Error::Unsupported("nested aggregate".into()));
                    }
                    ScalarExpr::Agg { func, arg: Some(Box::new(arg)) }
                }
            }
            Expr::InList { expr, list, negated } => {
                let lits = list
                    .iter()
                    .map(|x| match x {
                        Expr::Literal(l) => literal(l),
                        _ => Err(Error::Unsupported("IN list elements must be literals".into())),
                    })
                    .collect::<Result<Vec<_>>>()?;
                ScalarExpr::InList { expr: Box::new(self.expr(expr, scope, outer)?), list: lits, negated: *negated }
            }
            Expr::InSubquery { expr, query, negated } => {
                self.sublink(SubLinkKind::In, *negated, Some(expr), query, scope, outer)?
            }
            Expr::Exists { query, negated } => self.sublink(SubLinkKind::Exists, *negated, None, query, scope, outer)?,
            Expr::ScalarSubquery(query) => self.sublink(SubLinkKind::Scalar, false, None, query, scope, outer)?,
        })
    }
}

fn attach_on(jointree: &mut [JoinNode], key: RelSet, e: ScalarExpr) {
    fn find(node: &mut JoinNode, key: RelSet) -> Option<&mut Vec<Predicate>> {
        match node {
            JoinNode::Rel(_) => None,
            JoinNode::Join { left, right, quals, .. } => {
                if left.relids().union(right.relids()) == key {
                    return Some(quals);
                }
                find(left, key).or_else(|| find(right, key))
            }
        }
    }
    for n in jointree.iter_mut() {
        if let Some(q) = find(n, key) {
            q.extend(e.into_conjuncts().into_iter().map(Predicate::new));
            return;
        }
    }
}
