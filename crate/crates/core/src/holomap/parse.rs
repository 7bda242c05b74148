//! Recursive-descent parser for the map-expression text form:
//!
//! ```text
//! expr     := "power(" int ")" | "affine(" complex "," complex ")"
//!           | "auto(" real "," complex ")" | "blaschke(" real ";" zerolist ")"
//!           | "compose(" expr ("," expr)+ ")"
//! complex  := real [("+"|"-") real "i"]
//! zerolist := complex ["x" int] ("," complex ["x" int])*
//! ```

use num_complex::Complex64;
use thiserror::Error;

use super::{MapError, MapExpr};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{line}:{column}: {message} (at `{token}`)")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub token: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Number(f64),
    Int(u64),
    Sym(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    text: String,
    line: usize,
    column: usize,
}

fn lex(src: &str, line0: usize, col0: usize) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let (mut line, mut col) = (line0, col0);
    let mut i = 0;
    let mut out = Vec::new();
    while i < chars.len() {
        let ch = chars[i];
        if ch == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if ch.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let (tl, tc) = (line, col);
        let after_number = matches!(out.last(), Some(Token { tok: Tok::Number(_) | Tok::Int(_), .. }));
        let tok = if ch == 'i' && after_number {
            // Imaginary unit, which may be followed directly by a multiplicity `x`.
            i += 1;
            Tok::Ident("i".into())
        } else if ch.is_ascii_alphabetic() || ch == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphabetic() || chars[i] == '_') {
                i += 1;
            }
            Tok::Ident(chars[start..i].iter().collect())
        } else if ch.is_ascii_digit() || (ch == '.' && chars.get(i + 1).is_some_and(|c| c.is_ascii_digit())) {
            let mut float = false;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                float = true;
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    float = true;
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let bad = || ParseError {
                line: tl,
                column: tc,
                token: text.clone(),
                message: "malformed number".into(),
            };
            if float {
                Tok::Number(text.parse::<f64>().map_err(|_| bad())?)
            } else {
                Tok::Int(text.parse::<u64>().map_err(|_| bad())?)
            }
        } else if "(),;+-".contains(ch) {
            i += 1;
            Tok::Sym(ch)
        } else {
            return Err(ParseError {
                line: tl,
                column: tc,
                token: ch.to_string(),
                message: "unexpected character".into(),
            });
        };
        col += i - start;
        out.push(Token { tok, text: chars[start..i].iter().collect(), line: tl, column: tc });
    }
    out.push(Token { tok: Tok::End, text: "<end>".into(), line, column: col });
    Ok(out)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

/// Wrapper distinguishing syntax failures from self-map violations found
/// while building nodes.
#[derive(Debug)]
pub(crate) enum ExprFailure {
    Syntax(ParseError),
    Invalid(MapError, ParseError),
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_at(t: &Token, message: impl Into<String>) -> ExprFailure {
        ExprFailure::Syntax(ParseError {
            line: t.line,
            column: t.column,
            token: t.text.clone(),
            message: message.into(),
        })
    }

    fn expect_sym(&mut self, ch: char) -> Result<(), ExprFailure> {
        let t = self.next();
        if t.tok == Tok::Sym(ch) {
            Ok(())
        } else {
            Err(Self::error_at(&t, format!("expected `{ch}`")))
        }
    }

    fn eat_sym(&mut self, ch: char) -> bool {
        if self.peek().tok == Tok::Sym(ch) {
            self.next();
            true
        } else {
            false
        }
    }

    fn unsigned(&mut self) -> Result<f64, ExprFailure> {
        let t = self.next();
        match t.tok {
            Tok::Number(x) => Ok(x),
            Tok::Int(n) => Ok(n as f64),
            _ => Err(Self::error_at(&t, "expected a number")),
        }
    }

    fn real(&mut self) -> Result<f64, ExprFailure> {
        if self.eat_sym('-') {
            Ok(-self.unsigned()?)
        } else {
            self.eat_sym('+');
            self.unsigned()
        }
    }

    fn int(&mut self) -> Result<u32, ExprFailure> {
        let t = self.next();
        match t.tok {
            Tok::Int(n) if n <= u32::MAX as u64 => Ok(n as u32),
            _ => Err(Self::error_at(&t, "expected an integer")),
        }
    }

    fn complex(&mut self) -> Result<Complex64, ExprFailure> {
        let re = self.real()?;
        let sign = match self.peek().tok {
            Tok::Sym('+') => 1.0,
            Tok::Sym('-') => -1.0,
            _ => return Ok(Complex64::new(re, 0.0)),
        };
        self.next();
        let im = self.unsigned()?;
        let t = self.next();
        if t.tok != Tok::Ident("i".into()) {
            return Err(Self::error_at(&t, "expected `i` after imaginary part"));
        }
        Ok(Complex64::new(re, sign * im))
    }

    fn build(head: &Token, r: Result<MapExpr, MapError>) -> Result<MapExpr, ExprFailure> {
        r.map_err(|e| {
            let pe = ParseError {
                line: head.line,
                column: head.column,
                token: head.text.clone(),
                message: e.to_string(),
            };
            ExprFailure::Invalid(e, pe)
        })
    }

    fn expr(&mut self) -> Result<MapExpr, ExprFailure> {
        let head = self.next();
        let name = match &head.tok {
            Tok::Ident(s) => s.clone(),
            _ => return Err(Self::error_at(&head, "expected a map constructor")),
        };
        self.expect_sym('(')?;
        let e = match name.as_str() {
            "power" => {
                let d = self.int()?;
                Self::build(&head, MapExpr::power(d))?
            }
            "affine" => {
                let scale = self.complex()?;
                self.expect_sym(',')?;
                let shift = self.complex()?;
                Self::build(&head, MapExpr::affine(scale, shift))?
            }
            "auto" => {
                let theta = self.real()?;
                self.expect_sym(',')?;
                let a = self.complex()?;
                Self::build(&head, MapExpr::automorphism(theta, a))?
            }
            "blaschke" => {
                let rotation = self.real()?;
                self.expect_sym(';')?;
                let mut zeros = Vec::new();
                loop {
                    let a = self.complex()?;
                    let m = if self.peek().tok == Tok::Ident("x".into()) {
                        self.next();
                        self.int()?
                    } else {
                        1
                    };
                    zeros.push((a, m));
                    if !self.eat_sym(',') {
                        break;
                    }
                }
                Self::build(&head, MapExpr::blaschke(rotation, zeros))?
            }
            "compose" => {
                let mut parts = vec![self.expr()?];
                while self.eat_sym(',') {
                    parts.push(self.expr()?);
                }
                if parts.len() < 2 {
                    return Err(Self::error_at(self.peek(), "compose needs at least two maps"));
                }
                Self::build(&head, MapExpr::compose_all(parts))?
            }
            _ => return Err(Self::error_at(&head, "unknown map constructor")),
        };
        self.expect_sym(')')?;
        Ok(e)
    }
}

/// Parses `src` whose first character sits at (`line`, `column`), so errors
/// point into an enclosing document.
pub(crate) fn parse_map_detailed(src: &str, line: usize, column: usize) -> Result<MapExpr, ExprFailure> {
    let toks = lex(src, line, column).map_err(ExprFailure::Syntax)?;
    let mut p = Parser { toks, pos: 0 };
    let e = p.expr()?;
    let t = p.peek();
    if t.tok != Tok::End {
        return Err(Parser::error_at(t, "trailing input"));
    }
    Ok(e)
}

pub fn parse_map_at(src: &str, line: usize, column: usize) -> Result<MapExpr, ParseError> {
    parse_map_detailed(src, line, column).map_err(|f| match f {
        ExprFailure::Syntax(e) | ExprFailure::Invalid(_, e) => e,
    })
}

pub fn parse_map(src: &str) -> Result<MapExpr, ParseError> {
    parse_map_at(src, 1, 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn parses_each_constructor() {
        assert_eq!(parse_map("power(3)").unwrap(), MapExpr::Power(3));
        assert_eq!(
            parse_map("affine(0.5, -0.25+1e-1i)").unwrap(),
            MapExpr::Affine { scale: c(0.5, 0.0), shift: c(-0.25, 0.1) }
        );
        let b = parse_map("blaschke(0; 0.5x2, -0.1-0.2i)").unwrap();
        assert_eq!(b, MapExpr::blaschke(0.0, vec![(c(0.5, 0.0), 2), (c(-0.1, -0.2), 1)]).unwrap());
        let comp = parse_map("compose(power(2), power(2), affine(0.5, 0))").unwrap();
        assert_eq!(
            comp,
            MapExpr::compose(
                MapExpr::Power(2),
                MapExpr::compose(MapExpr::Power(2), MapExpr::affine(c(0.5, 0.0), c(0.0, 0.0)).unwrap())
            )
        );
        assert!(matches!(parse_map("auto(1.5, 0.2+0.3i)").unwrap(), MapExpr::Automorphism(_)));
    }

    #[test]
    fn reports_positions() {
        let e = parse_map("compose(power(2),\n  powr(3))").unwrap_err();
        assert_eq!((e.line, e.column), (2, 3));
        assert_eq!(e.token, "powr");
        let e = parse_map("affine(0.5 0.1)").unwrap_err();
        assert_eq!((e.line, e.column, e.token.as_str()), (1, 12, "0.1"));
        let e = parse_map("power(2) x").unwrap_err();
        assert_eq!(e.message, "trailing input");
        let e = parse_map("compose(power(2))").unwrap_err();
        assert!(e.message.contains("two maps"));
    }

    #[test]
    fn semantic_violations_are_reported() {
        let e = parse_map("blaschke(0; 1.2)").unwrap_err();
        assert!(e.message.contains("1.2"), "{e}");
        assert!(parse_map("affine(0.9, 0.9)").is_err());
        assert!(parse_map("power(0)").is_err());
    }
}
