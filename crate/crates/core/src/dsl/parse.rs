use crate::sphere::Dim;

use super::{ExprError, MapExpr};

#[derive(Debug, Clone, PartialEq)]
enum Tok<'a> {
    Open,
    Close,
    Atom(&'a str),
}

#[derive(Debug)]
struct Token<'a> {
    tok: Tok<'a>,
    column: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().enumerate().peekable();
    while let Some((col, (start, c))) = chars.next() {
        let column = col + 1;
        match c {
            '(' => out.push(Token {
                tok: Tok::Open,
                column,
            }),
            ')' => out.push(Token {
                tok: Tok::Close,
                column,
            }),
            c if c.is_whitespace() => {}
            _ => {
                let mut end = start + c.len_utf8();
                while let Some(&(_, (i, c))) = chars.peek() {
                    if c.is_whitespace() || c == '(' || c == ')' {
                        break;
                    }
                    end = i + c.len_utf8();
                    chars.next();
                }
                out.push(Token {
                    tok: Tok::Atom(&text[start..end]),
                    column,
                });
            }
        }
    }
    out
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
    end_column: usize,
}

impl<'a> Parser<'a> {
    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.end_column, |t| t.column)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            column: self.column(),
            message: message.into(),
        })
    }

    fn expect_open(&mut self) -> Result<(), ExprError> {
        match self.tokens.get(self.pos).map(|t| &t.tok) {
            Some(Tok::Open) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.err("expected '('"),
            None => self.err("unexpected end of input, expected '('"),
        }
    }

    fn expect_close(&mut self, head: &str) -> Result<(), ExprError> {
        match self.tokens.get(self.pos).map(|t| &t.tok) {
            Some(Tok::Close) => {
                self.pos += 1;
                Ok(())
            }
            Some(_) => self.err(format!("too many arguments to '{head}', expected ')'")),
            None => self.err(format!(
                "unexpected end of input, expected ')' closing '{head}'"
            )),
        }
    }

    fn atom(&mut self, what: &str) -> Result<&'a str, ExprError> {
        match self.tokens.get(self.pos).map(|t| &t.tok) {
            Some(Tok::Atom(s)) => {
                let s = *s;
                self.pos += 1;
                Ok(s)
            }
            Some(_) => self.err(format!("expected {what}")),
            None => self.err(format!("unexpected end of input, expected {what}")),
        }
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, ExprError> {
        let column = self.column();
        let s = self.atom(what)?;
        s.parse().map_err(|_| ExprError::Syntax {
            column,
            message: format!("expected {what}, found '{s}'"),
        })
    }

    fn float(&mut self) -> Result<f64, ExprError> {
        let column = self.column();
        let v: f64 = self.number("a number")?;
        if !v.is_finite() {
            return Err(ExprError::Syntax {
                column,
                message: format!("non-finite number {v}"),
            });
        }
        Ok(v)
    }

    fn dim(&mut self) -> Result<Dim, ExprError> {
        let column = self.column();
        match self.atom("a dimension (1 or 2)")? {
            "1" => Ok(Dim::One),
            "2" => Ok(Dim::Two),
            s => Err(ExprError::Syntax {
                column,
                message: format!("expected a dimension (1 or 2), found '{s}'"),
            }),
        }
    }

    fn expr(&mut self) -> Result<MapExpr, ExprError> {
        self.expect_open()?;
        let column = self.column();
        let head = self.atom("a constructor name")?;
        let e = match head {
            "id" => MapExpr::id(self.dim()?),
            "antipode" => MapExpr::antipode(self.dim()?),
            "conj" => MapExpr::Conj,
            "pow" => MapExpr::pow(self.number("an integer exponent")?),
            "rot" => MapExpr::rot(self.float()?)?,
            "rot3" => {
                let axis = [self.float()?, self.float()?, self.float()?];
                MapExpr::rot3(axis, self.float()?)?
            }
            "susp" => MapExpr::susp(self.expr()?)?,
            "compose" => {
                let f = self.expr()?;
                MapExpr::compose(f, self.expr()?)?
            }
            "iterate" => {
                let n = self.number("a non-negative iteration count")?;
                MapExpr::iterate(n, self.expr()?)
            }
            "blend" => {
                let t = self.float()?;
                let f = self.expr()?;
                MapExpr::blend(t, f, self.expr()?)?
            }
            "perturb" => {
                let seed = self.number("a 64-bit unsigned seed")?;
                let eps = self.float()?;
                MapExpr::perturb(seed, eps, self.expr()?)?
            }
            other => {
                return Err(ExprError::Syntax {
                    column,
                    message: format!("unknown constructor '{other}'"),
                })
            }
        };
        self.expect_close(head)?;
        Ok(e)
    }
}

/// Parses one map expression.
pub fn parse(text: &str) -> Result<MapExpr, ExprError> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
        end_column: text.chars().count() + 1,
    };
    let e = p.expr()?;
    if p.pos < p.tokens.len() {
        return p.err("trailing input after expression");
    }
    Ok(e)
}

/// Splits a batch file into `(line number, expression text)` pairs, dropping
/// blank lines and lines starting with `#`. Line numbers are 1-based.
pub fn parse_batch(text: &str) -> Vec<(usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .collect()
}
