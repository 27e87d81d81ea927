use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Word(String),
    QuotedIdent(String),
    Number(String),
    Str(String),
    Hint(String),
    Symbol(&'static str),
    Eof,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub tok: Tok,
    pub offset: usize,
}

const SYMBOLS: &[&str] = &[
    "<=", ">=", "<>", "!=", "=", "<", ">", "+", "-", "*", "/", "(", ")", ",", ".", ";",
];

pub fn tokenize(sql: &str) -> Result<Vec<Token>> {
    let bytes = sql.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if sql[i..].starts_with("--") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if sql[i..].starts_with("/*") {
            let end = sql[i + 2..].find("*/").ok_or_else(|| Error::Syntax {
                offset: i,
                message: "unterminated comment".into(),
                expected: vec!["*/".into()],
            })?;
            let body = &sql[i + 2..i + 2 + end];
            if let Some(hint) = body.strip_prefix('+') {
                out.push(Token {
                    tok: Tok::Hint(hint.trim().to_string()),
                    offset: i,
                });
            }
            i += end + 4;
            continue;
        }
        let start = i;
        if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Token {
                tok: Tok::Word(sql[start..i].to_ascii_lowercase()),
                offset: start,
            });
            continue;
        }
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit())) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    i = j;
                    while i < bytes.len() && bytes[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            out.push(Token {
                tok: Tok::Number(sql[start..i].to_string()),
                offset: start,
            });
            continue;
        }
        if c == b'\'' || c == b'"' {
            let quote = c;
            let mut text = String::new();
            i += 1;
            loop {
                if i >= bytes.len() {
                    return Err(Error::Syntax {
                        offset: start,
                        message: "unterminated quoted text".into(),
                        expected: vec![(quote as char).to_string()],
                    });
                }
                if bytes[i] == quote {
                    if bytes.get(i + 1) == Some(&quote) {
                        text.push(quote as char);
                        i += 2;
                        continue;
                    }
                    i += 1;
                    break;
                }
                let ch = sql[i..].chars().next().expect("in bounds");
                text.push(ch);
                i += ch.len_utf8();
            }
            let tok = if quote == b'\'' {
                Tok::Str(text)
            } else {
                Tok::QuotedIdent(text.to_ascii_lowercase())
            };
            out.push(Token { tok, offset: start });
            continue;
        }
        match SYMBOLS.iter().find(|s| sql[i..].starts_with(**s)) {
            Some(sym) => {
                out.push(Token {
                    tok: Tok::Symbol(sym),
                    offset: start,
                });
                i += sym.len();
            }
            None => {
                return Err(Error::Syntax {
                    offset: i,
                    message: format!("unexpected character {:?}", sql[i..].chars().next().unwrap_or(' ')),
                    expected: vec![],
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        offset: sql.len(),
    });
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn words_are_lowercased_and_hints_kept() {
        let toks = tokenize("/*+ NestLoop(a b) */ SELECT X /* plain */ FROM t").unwrap();
        assert_eq!(toks[0].tok, Tok::Hint("NestLoop(a b)".into()));
        assert_eq!(toks[1].tok, Tok::Word("select".into()));
        assert_eq!(toks[2].tok, Tok::Word("x".into()));
        assert_eq!(toks[3].tok, Tok::Word("from".into()));
    }

    #[test]
    fn numbers_strings_symbols() {
        let toks = tokenize("a<=1.5e3 AND b<>'it''s'").unwrap();
        let kinds: Vec<_> = toks.into_iter().map(|t| t.tok).collect();
        assert_eq!(
            kinds,
            vec![
                Tok::Word("a".into()),
                Tok::Symbol("<="),
                Tok::Number("1.5e3".into()),
                Tok::Word("and".into()),
                Tok::Word("b".into()),
                Tok::Symbol("<>"),
                Tok::Str("it's".into()),
                Tok::Eof
            ]
        );
    }
}
