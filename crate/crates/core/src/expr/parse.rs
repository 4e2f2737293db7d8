use super::{Expr, ExprError, Func};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    End,
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, ch)) = chars.peek() {
        if ch.is_whitespace() {
            chars.next();
            continue;
        }
        let single = match ch {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            ',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            out.push((tok, pos));
            chars.next();
            continue;
        }
        if ch.is_ascii_digit() || ch == '.' {
            let mut end = pos;
            let mut seen_exp = false;
            let mut prev = ' ';
            while let Some(&(i, c)) = chars.peek() {
                let accept = c.is_ascii_digit()
                    || c == '.'
                    || (!seen_exp && (c == 'e' || c == 'E'))
                    || ((c == '+' || c == '-') && (prev == 'e' || prev == 'E'));
                if !accept {
                    break;
                }
                if c == 'e' || c == 'E' {
                    // only an exponent if a digit or sign follows
                    let rest = &src[i + 1..];
                    let next = rest.chars().next();
                    let digit_follows = match next {
                        Some(d) if d.is_ascii_digit() => true,
                        Some('+') | Some('-') => rest[1..].chars().next().is_some_and(|d| d.is_ascii_digit()),
                        _ => false,
                    };
                    if !digit_follows {
                        break;
                    }
                    seen_exp = true;
                }
                prev = c;
                end = i + c.len_utf8();
                chars.next();
            }
            let text = &src[pos..end];
            let value = text.parse::<f64>().map_err(|_| ExprError::Syntax {
                offset: pos,
                message: format!("malformed number `{text}`"),
            })?;
            out.push((Tok::Num(value), pos));
            continue;
        }
        if ch.is_alphabetic() || ch == '_' {
            let mut end = pos;
            while let Some(&(i, c)) = chars.peek() {
                if !(c.is_alphanumeric() || c == '_') {
                    break;
                }
                end = i + c.len_utf8();
                chars.next();
            }
            out.push((Tok::Ident(src[pos..end].to_string()), pos));
            continue;
        }
        return Err(ExprError::Syntax {
            offset: pos,
            message: format!("unexpected character `{ch}`"),
        });
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    coords: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, message: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError::Syntax {
            offset: self.offset(),
            message: message.into(),
        })
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Tok::Plus => {
                    self.bump();
                    lhs = lhs + self.term()?;
                }
                Tok::Minus => {
                    self.bump();
                    lhs = lhs - self.term()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Tok::Star => {
                    self.bump();
                    lhs = lhs * self.factor()?;
                }
                Tok::Slash => {
                    self.bump();
                    lhs = lhs / self.factor()?;
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ExprError> {
        if *self.peek() == Tok::Minus {
            self.bump();
            return Ok(-self.power()?);
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if *self.peek() == Tok::Caret {
            self.bump();
            let exponent = self.power()?;
            return Ok(Expr::pow(base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let offset = self.offset();
        match self.bump() {
            Tok::Num(v) => Ok(Expr::Const(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                if *self.peek() != Tok::RParen {
                    return self.error("expected `)`");
                }
                self.bump();
                Ok(inner)
            }
            Tok::Ident(name) => {
                if *self.peek() == Tok::LParen {
                    self.bump();
                    let mut args = vec![self.expr()?];
                    while *self.peek() == Tok::Comma {
                        self.bump();
                        args.push(self.expr()?);
                    }
                    if *self.peek() != Tok::RParen {
                        return self.error("expected `,` or `)`");
                    }
                    self.bump();
                    return call(&name, offset, args);
                }
                if let Some(i) = self.coords.iter().position(|c| *c == name) {
                    return Ok(Expr::Var(i));
                }
                match name.as_str() {
                    "pi" => Ok(Expr::Const(std::f64::consts::PI)),
                    "e" => Ok(Expr::Const(std::f64::consts::E)),
                    _ => Err(ExprError::UnknownIdentifier { name, offset }),
                }
            }
            Tok::End => Err(ExprError::Syntax {
                offset,
                message: "unexpected end of input".into(),
            }),
            _ => Err(ExprError::Syntax {
                offset,
                message: "expected a number, identifier or `(`".into(),
            }),
        }
    }
}

fn call(name: &str, offset: usize, mut args: Vec<Expr>) -> Result<Expr, ExprError> {
    let arity = |expected: usize| {
        if args.len() == expected {
            Ok(())
        } else {
            Err(ExprError::Arity {
                name: name.to_string(),
                expected,
                found: args.len(),
            })
        }
    };
    if name == "pow" {
        arity(2)?;
        let exponent = args.pop().unwrap_or(Expr::ZERO);
        let base = args.pop().unwrap_or(Expr::ZERO);
        return Ok(Expr::pow(base, exponent));
    }
    let Some(func) = Func::from_name(name) else {
        return Err(ExprError::UnknownIdentifier {
            name: name.to_string(),
            offset,
        });
    };
    arity(1)?;
    Ok(Expr::call(func, args.pop().unwrap_or(Expr::ZERO)))
}

/// Parse `source` against an ordered coordinate list.
///
/// Precedence from tightest: `^` (right-associative), unary minus, `*` `/`,
/// then `+` `-`. Coordinate names shadow the constants `pi` and `e`.
pub fn parse<S: AsRef<str>>(source: &str, coords: &[S]) -> Result<Expr, ExprError> {
    let coords: Vec<String> = coords.iter().map(|c| c.as_ref().to_string()).collect();
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
        coords: &coords,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return p.error("unexpected trailing input");
    }
    Ok(e)
}
