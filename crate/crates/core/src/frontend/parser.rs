use super::ast::*;
use super::lexer::{tokenize, Tok, Token};
use crate::error::{Error, Result};

const RESERVED: &[&str] = &[
    "select", "distinct", "from", "where", "group", "by", "order", "asc", "desc", "limit", "offset",
    "and", "or", "not", "in", "exists", "as", "join", "inner", "left", "outer", "on", "null", "true",
    "false", "date", "interval",
];

pub fn is_reserved(word: &str) -> bool {
    RESERVED.contains(&word)
}

/// Parses one statement with an optional trailing semicolon.
pub fn parse(sql: &str) -> Result<Select> {
    let tokens = tokenize(sql)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut hints = p.hints()?;
    let mut select = p.select()?;
    hints.append(&mut select.hints);
    select.hints = hints;
    p.eat_symbol(";");
    p.expect_eof()?;
    Ok(select)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn peek_at(&self, n: usize) -> &Tok {
        let i = (self.pos + n).min(self.tokens.len() - 1);
        &self.tokens[i].tok
    }

    fn offset(&self) -> usize {
        self.tokens[self.pos].offset
    }

    fn advance(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos < self.tokens.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: &str, expected: &[&str]) -> Result<T> {
        Err(Error::Syntax {
            offset: self.offset(),
            message: message.to_string(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        })
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Word(w) if w == kw)
    }

    fn eat_keyword(&mut self, kw: &str) -> bool {
        if self.is_keyword(kw) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<()> {
        if self.eat_keyword(kw) {
            Ok(())
        } else {
            self.error(&format!("expected {}", kw.to_ascii_uppercase()), &[&kw.to_ascii_uppercase()])
        }
    }

    fn is_symbol(&self, sym: &str) -> bool {
        matches!(self.peek(), Tok::Symbol(s) if *s == sym)
    }

    fn eat_symbol(&mut self, sym: &str) -> bool {
        if self.is_symbol(sym) {
            self.advance();
            true
        } else {
            false
        }
    }

    fn expect_symbol(&mut self, sym: &str) -> Result<()> {
        if self.eat_symbol(sym) {
            Ok(())
        } else {
            self.error(&format!("expected '{sym}'"), &[sym])
        }
    }

    fn expect_eof(&mut self) -> Result<()> {
        if matches!(self.peek(), Tok::Eof) {
            Ok(())
        } else {
            self.error("unexpected trailing input", &["end of input"])
        }
    }

    fn identifier(&mut self) -> Result<String> {
        match self.peek().clone() {
            Tok::Word(w) if !is_reserved(&w) => {
                self.advance();
                Ok(w)
            }
            Tok::QuotedIdent(w) => {
                self.advance();
                Ok(w)
            }
            _ => self.error("expected identifier", &["identifier"]),
        }
    }

    fn hints(&mut self) -> Result<Vec<HintSpec>> {
        let mut out = Vec::new();
        while let Tok::Hint(text) = self.peek().clone() {
            let offset = self.offset();
            out.extend(parse_hint_text(&text, offset)?);
            self.advance();
        }
        Ok(out)
    }

    fn select(&mut self) -> Result<Select> {
        self.expect_keyword("select")?;
        let hints = self.hints()?;
        let distinct = self.eat_keyword("distinct");
        let mut select_list = vec![self.select_item()?];
        while self.eat_symbol(",") {
            select_list.push(self.select_item()?);
        }
        self.expect_keyword("from")?;
        let mut from = vec![self.from_item()?];
        while self.eat_symbol(",") {
            from.push(self.from_item()?);
        }
        let where_clause = if self.eat_keyword("where") {
            Some(self.expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_keyword("group") {
            self.expect_keyword("by")?;
            group_by.push(self.expr()?);
            while self.eat_symbol(",") {
                group_by.push(self.expr()?);
            }
        }
        let mut order_by = Vec::new();
        if self.eat_keyword("order") {
            self.expect_keyword("by")?;
            loop {
                let expr = self.expr()?;
                let desc = if self.eat_keyword("desc") {
                    true
                } else {
                    self.eat_keyword("asc");
                    false
                };
                order_by.push(OrderItem { expr, desc });
                if !self.eat_symbol(",") {
                    break;
                }
            }
        }
        let mut limit = None;
        let mut offset = None;
        if self.eat_keyword("limit") {
            let first = self.count()?;
            if self.eat_symbol(",") {
                offset = Some(first);
                limit = Some(self.count()?);
            } else {
                limit = Some(first);
            }
        }
        if self.eat_keyword("offset") {
            offset = Some(self.count()?);
        }
        Ok(Select {
            hints,
            distinct,
            select_list,
            from,
            where_clause,
            group_by,
            order_by,
            limit,
            offset,
        })
    }

    fn count(&mut self) -> Result<u64> {
        match self.peek().clone() {
            Tok::Number(n) => match n.parse::<u64>() {
                Ok(v) => {
                    self.advance();
                    Ok(v)
                }
                Err(_) => self.error("expected a non-negative integer", &["integer"]),
            },
            _ => self.error("expected a non-negative integer", &["integer"]),
        }
    }

    fn select_item(&mut self) -> Result<SelectItem> {
        if self.eat_symbol("*") {
            return Ok(SelectItem::Wildcard);
        }
        let expr = self.expr()?;
        let bare = matches!(self.peek(), Tok::Word(w) if !is_reserved(w)) || matches!(self.peek(), Tok::QuotedIdent(_));
        let alias = if self.eat_keyword("as") || bare {
            Some(self.identifier()?)
        } else {
            None
        };
        Ok(SelectItem::Expr { expr, alias })
    }

    fn from_item(&mut self) -> Result<FromItem> {
        let mut item = self.from_primary()?;
        loop {
            let kind = if self.is_keyword("left") {
                self.advance();
                self.eat_keyword("outer");
                AstJoinKind::Left
            } else if self.is_keyword("inner") {
                self.advance();
                AstJoinKind::Inner
            } else if self.is_keyword("join") {
                AstJoinKind::Inner
            } else {
                break;
            };
            self.expect_keyword("join")?;
            let right = self.from_primary()?;
            self.expect_keyword("on")?;
            let on = self.expr()?;
            item = FromItem::Join {
                kind,
                left: Box::new(item),
                right: Box::new(right),
                on,
            };
        }
        Ok(item)
    }

    fn optional_alias(&mut self) -> Result<Option<String>> {
        if self.eat_keyword("as") {
            return Ok(Some(self.identifier()?));
        }
        match self.peek() {
            Tok::Word(w) if !is_reserved(w) => Ok(Some(self.identifier()?)),
            Tok::QuotedIdent(_) => Ok(Some(self.identifier()?)),
            _ => Ok(None),
        }
    }

    fn from_primary(&mut self) -> Result<FromItem> {
        if self.eat_symbol("(") {
            let query = self.select()?;
            self.expect_symbol(")")?;
            let alias = match self.optional_alias()? {
                Some(a) => a,
                None => return self.error("derived table requires an alias", &["AS", "identifier"]),
            };
            let mut columns = Vec::new();
            if self.eat_symbol("(") {
                columns.push(self.identifier()?);
                while self.eat_symbol(",") {
                    columns.push(self.identifier()?);
                }
                self.expect_symbol(")")?;
            }
            return Ok(FromItem::Subquery {
                query: Box::new(query),
                alias,
                columns,
            });
        }
        let name = self.identifier()?;
        let alias = self.optional_alias()?;
        Ok(FromItem::Table { name, alias })
    }

    pub fn expr(&mut self) -> Result<Expr> {
        let mut left = self.and_expr()?;
        while self.eat_keyword("or") {
            let right = self.and_expr()?;
            left = binary(BinaryOp::Or, left, right);
        }
        Ok(left)
    }

    fn and_expr(&mut self) -> Result<Expr> {
        let mut left = self.not_expr()?;
        while self.eat_keyword("and") {
            let right = self.not_expr()?;
            left = binary(BinaryOp::And, left, right);
        }
        Ok(left)
    }

    fn not_expr(&mut self) -> Result<Expr> {
        if self.is_keyword("not") {
            if matches!(self.peek_at(1), Tok::Word(w) if w == "exists") {
                self.advance();
                self.advance();
                let query = self.parenthesized_select()?;
                return Ok(Expr::Exists {
                    query: Box::new(query),
                    negated: true,
                });
            }
            self.advance();
            let inner = self.not_expr()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Not,
                expr: Box::new(inner),
            });
        }
        self.comparison()
    }

    fn comparison(&mut self) -> Result<Expr> {
        let left = self.additive()?;
        let op = match self.peek() {
            Tok::Symbol("=") => Some(BinaryOp::Eq),
            Tok::Symbol("<>") | Tok::Symbol("!=") => Some(BinaryOp::NotEq),
            Tok::Symbol("<") => Some(BinaryOp::Lt),
            Tok::Symbol("<=") => Some(BinaryOp::LtEq),
            Tok::Symbol(">") => Some(BinaryOp::Gt),
            Tok::Symbol(">=") => Some(BinaryOp::GtEq),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let right = self.additive()?;
            return Ok(binary(op, left, right));
        }
        let negated = if self.is_keyword("not") && matches!(self.peek_at(1), Tok::Word(w) if w == "in") {
            self.advance();
            true
        } else {
            false
        };
        if self.eat_keyword("in") {
            self.expect_symbol("(")?;
            if self.is_keyword("select") {
                let query = self.select()?;
                self.expect_symbol(")")?;
                return Ok(Expr::InSubquery {
                    expr: Box::new(left),
                    query: Box::new(query),
                    negated,
                });
            }
            let mut list = vec![self.additive()?];
            while self.eat_symbol(",") {
                list.push(self.additive()?);
            }
            self.expect_symbol(")")?;
            return Ok(Expr::InList {
                expr: Box::new(left),
                list,
                negated,
            });
        }
        Ok(left)
    }

    fn additive(&mut self) -> Result<Expr> {
        let mut left = self.multiplicative()?;
        loop {
            let op = if self.eat_symbol("+") {
                BinaryOp::Plus
            } else if self.eat_symbol("-") {
                BinaryOp::Minus
            } else {
                break;
            };
            let right = self.multiplicative()?;
            left = binary(op, left, right);
        }
        Ok(left)
    }

    fn multiplicative(&mut self) -> Result<Expr> {
        let mut left = self.unary()?;
        loop {
            let op = if self.eat_symbol("*") {
                BinaryOp::Mul
            } else if self.eat_symbol("/") {
                BinaryOp::Div
            } else {
                break;
            };
            let right = self.unary()?;
            left = binary(op, left, right);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat_symbol("-") {
            if let Tok::Number(n) = self.peek().clone() {
                self.advance();
                return number_literal(&format!("-{n}"), self.offset());
            }
            let inner = self.unary()?;
            return Ok(Expr::Unary {
                op: UnaryOp::Neg,
                expr: Box::new(inner),
            });
        }
        self.primary()
    }

    fn parenthesized_select(&mut self) -> Result<Select> {
        self.expect_symbol("(")?;
        let q = self.select()?;
        self.expect_symbol(")")?;
        Ok(q)
    }

    fn primary(&mut self) -> Result<Expr> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                number_literal(&n, offset)
            }
            Tok::Str(s) => {
                self.advance();
                Ok(Expr::Literal(AstLiteral::String(s)))
            }
            Tok::Symbol("(") => {
                if matches!(self.peek_at(1), Tok::Word(w) if w == "select") {
                    let q = self.parenthesized_select()?;
                    return Ok(Expr::ScalarSubquery(Box::new(q)));
                }
                self.advance();
                let e = self.expr()?;
                self.expect_symbol(")")?;
                Ok(e)
            }
            Tok::Word(w) => match w.as_str() {
                "null" => {
                    self.advance();
                    Ok(Expr::Literal(AstLiteral::Null))
                }
                "true" | "false" => {
                    self.advance();
                    Ok(Expr::Literal(AstLiteral::Bool(w == "true")))
                }
                "date" => {
                    self.advance();
                    match self.advance() {
                        Tok::Str(s) => Ok(Expr::Literal(AstLiteral::Date(s))),
                        _ => Err(Error::Syntax {
                            offset,
                            message: "expected date string".into(),
                            expected: vec!["string".into()],
                        }),
                    }
                }
                "interval" => {
                    self.advance();
                    let value = match self.peek().clone() {
                        Tok::Str(s) => s,
                        _ => return self.error("expected interval string", &["string"]),
                    };
                    self.advance();
                    let unit = match self.peek().clone() {
                        Tok::Word(u) if matches!(u.as_str(), "day" | "month" | "year") => u,
                        _ => return self.error("expected interval unit", &["DAY", "MONTH", "YEAR"]),
                    };
                    self.advance();
                    Ok(Expr::Literal(AstLiteral::Interval { value, unit }))
                }
                "exists" => {
                    self.advance();
                    let q = self.parenthesized_select()?;
                    Ok(Expr::Exists {
                        query: Box::new(q),
                        negated: false,
                    })
                }
                _ if is_reserved(&w) => self.error("expected expression", &["expression"]),
                _ => self.ident_or_call(),
            },
            Tok::QuotedIdent(_) => self.ident_or_call(),
            _ => self.error("expected expression", &["expression"]),
        }
    }

    fn ident_or_call(&mut self) -> Result<Expr> {
        let first = self.identifier()?;
        if self.eat_symbol("(") {
            if self.eat_symbol("*") {
                self.expect_symbol(")")?;
                return Ok(Expr::Func {
                    name: first,
                    args: vec![],
                    star: true,
                });
            }
            let mut args = Vec::new();
            if !self.is_symbol(")") {
                args.push(self.expr()?);
                while self.eat_symbol(",") {
                    args.push(self.expr()?);
                }
            }
            self.expect_symbol(")")?;
            return Ok(Expr::Func {
                name: first,
                args,
                star: false,
            });
        }
        let mut parts = vec![first];
        while self.eat_symbol(".") {
            parts.push(self.identifier()?);
        }
        Ok(Expr::Ident(parts))
    }
}

fn binary(op: BinaryOp, left: Expr, right: Expr) -> Expr {
    Expr::Binary {
        op,
        left: Box::new(left),
        right: Box::new(right),
    }
}

fn number_literal(text: &str, offset: usize) -> Result<Expr> {
    if let Ok(i) = text.parse::<i64>() {
        return Ok(Expr::Literal(AstLiteral::Integer(i)));
    }
    text.parse::<f64>()
        .map(|f| Expr::Literal(AstLiteral::Decimal(f)))
        .map_err(|_| Error::Syntax {
            offset,
            message: format!("invalid number {text}"),
            expected: vec!["number".into()],
        })
}

fn parse_hint_text(text: &str, offset: usize) -> Result<Vec<HintSpec>> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| hint_error(offset, text))?;
        let close = rest.find(')').ok_or_else(|| hint_error(offset, text))?;
        if close < open {
            return Err(hint_error(offset, text));
        }
        let method = JoinMethod::from_hint_name(rest[..open].trim()).ok_or_else(|| hint_error(offset, text))?;
        let names: Vec<String> = rest[open + 1..close]
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|s| !s.is_empty())
            .map(|s| s.to_ascii_lowercase())
            .collect();
        if names.is_empty() {
            return Err(hint_error(offset, text));
        }
        out.push(HintSpec::new(method, names));
        rest = rest[close + 1..].trim_start();
    }
    Ok(out)
}

fn hint_error(offset: usize, text: &str) -> Error {
    Error::Syntax {
        offset,
        message: format!("malformed hint {text:?}"),
        expected: vec!["NESTLOOP(...)".into(), "HASHJOIN(...)".into(), "MERGEJOIN(...)".into()],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_table() {
        let s = parse("SELECT c1 FROM t1").unwrap();
        assert_eq!(s.from, vec![FromItem::Table { name: "t1".into(), alias: None }]);
        assert_eq!(
            s.select_list,
            vec![SelectItem::Expr { expr: Expr::Ident(vec!["c1".into()]), alias: None }]
        );
    }

    #[test]
    fn select_from_is_error_at_offset_seven() {
        match parse("SELECT FROM") {
            Err(Error::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 7);
                assert!(!expected.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn correlated_in_subquery() {
        let s = parse(
            "SELECT T1.pk, T1.c1, T1.c2 FROM T1 WHERE T1.c1 IN \
             (SELECT c1 FROM T2 WHERE T2.c2 <= T1.c2 AND T2.c3 = 10);",
        )
        .unwrap();
        let Some(Expr::InSubquery { query, negated: false, .. }) = &s.where_clause else {
            panic!("expected IN subquery, got {:?}", s.where_clause);
        };
        let inner_where = query.where_clause.as_ref().unwrap();
        let Expr::Binary { op: BinaryOp::And, left, .. } = inner_where else { panic!() };
        assert_eq!(
            **left,
            Expr::Binary {
                op: BinaryOp::LtEq,
                left: Box::new(Expr::Ident(vec!["t2".into(), "c2".into()])),
                right: Box::new(Expr::Ident(vec!["t1".into(), "c2".into()])),
            }
        );
    }

    #[test]
    fn hints_leading_and_after_select() {
        let s = parse("/*+ NESTLOOP(t1 t2) */ SELECT /*+ HashJoin(b, a) */ a.x FROM a, b").unwrap();
        assert_eq!(s.hints.len(), 2);
        assert_eq!(s.hints[0], HintSpec::new(JoinMethod::NestLoop, ["t1".into(), "t2".into()]));
        assert_eq!(s.hints[1].table_names, vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        assert_eq!(parse("select c1 from t1").unwrap(), parse("SeLeCt c1 FrOm t1").unwrap());
    }

    #[test]
    fn left_join_and_limit_offset() {
        let s = parse("SELECT * FROM a LEFT OUTER JOIN b ON a.x = b.y ORDER BY 1 DESC LIMIT 1, 10").unwrap();
        assert!(matches!(s.from[0], FromItem::Join { kind: AstJoinKind::Left, .. }));
        assert_eq!(s.limit, Some(10));
        assert_eq!(s.offset, Some(1));
        assert!(s.order_by[0].desc);
    }

    #[test]
    fn derived_table_with_column_aliases() {
        let s = parse("SELECT t.a FROM (SELECT x, sum(y) FROM r GROUP BY x) AS t(a, b)").unwrap();
        let FromItem::Subquery { alias, columns, .. } = &s.from[0] else { panic!() };
        assert_eq!(alias, "t");
        assert_eq!(columns, &vec!["a".to_string(), "b".to_string()]);
    }

    #[test]
    fn date_interval_and_negative_numbers() {
        let s = parse("SELECT a FROM t WHERE d < date '1993-10-01' + interval '3' month AND x > -5").unwrap();
        let text = format!("{:?}", s.where_clause);
        assert!(text.contains("Interval"));
        assert!(text.contains("Integer(-5)"));
    }

    #[test]
    fn trailing_garbage_rejected() {
        assert!(parse("SELECT a FROM t t2 t3").is_err());
        assert!(parse("SELECT a FROM t;").is_ok());
    }
}
