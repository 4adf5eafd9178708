use super::{BinOp, Expr, ExprError, Node, UnaryFn, Var};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn next_token(&mut self) -> Result<(Tok, usize), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&c) = bytes.get(self.pos) else {
            return Ok((Tok::End, start));
        };
        if c.is_ascii_digit() || c == b'.' {
            return self.number(start).map(|v| (Tok::Num(v), start));
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            while self.pos < bytes.len()
                && (bytes[self.pos].is_ascii_alphanumeric() || bytes[self.pos] == b'_')
            {
                self.pos += 1;
            }
            return Ok((Tok::Ident(self.src[start..self.pos].to_string()), start));
        }
        self.pos += 1;
        let tok = match c {
            b'+' | b'-' | b'*' | b'/' | b'^' => Tok::Op(c as char),
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            _ => {
                let ch = self.src[start..].chars().next().unwrap_or('?');
                return Err(ExprError::Syntax {
                    offset: start,
                    message: format!("unexpected character `{ch}`"),
                });
            }
        };
        Ok((tok, start))
    }

    fn number(&mut self, start: usize) -> Result<f64, ExprError> {
        let bytes = self.src.as_bytes();
        let digits = |pos: &mut usize| {
            let from = *pos;
            while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
                *pos += 1;
            }
            *pos - from
        };
        let mut n = digits(&mut self.pos);
        if bytes.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(&mut self.pos);
        }
        if n == 0 {
            return Err(ExprError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(bytes.get(self.pos), Some(b'e' | b'E')) {
            let mut p = self.pos + 1;
            if matches!(bytes.get(p), Some(b'+' | b'-')) {
                p += 1;
            }
            if digits(&mut p) > 0 {
                self.pos = p;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map_err(|e| ExprError::Syntax {
                offset: start,
                message: format!("malformed number: {e}"),
            })
    }
}

struct Parser<'a> {
    lexer: Lexer<'a>,
    tok: Tok,
    offset: usize,
    allowed: &'a [Var],
}

impl<'a> Parser<'a> {
    fn bump(&mut self) -> Result<(), ExprError> {
        let (tok, offset) = self.lexer.next_token()?;
        self.tok = tok;
        self.offset = offset;
        Ok(())
    }

    fn syntax(&self, message: impl Into<String>) -> ExprError {
        ExprError::Syntax {
            offset: self.offset,
            message: message.into(),
        }
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.product()?;
        while let Tok::Op(c @ ('+' | '-')) = self.tok {
            let offset = self.offset;
            self.bump()?;
            let rhs = self.product()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), offset);
        }
        Ok(lhs)
    }

    fn product(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = self.tok {
            let offset = self.offset;
            self.bump()?;
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Expr::new(Node::Binary(op, Box::new(lhs), Box::new(rhs)), offset);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        Ok(self.unary_tagged()?.0)
    }

    /// Second component is true when the result is a bare numeric literal.
    fn unary_tagged(&mut self) -> Result<(Expr, bool), ExprError> {
        if self.tok == Tok::Op('-') {
            let offset = self.offset;
            self.bump()?;
            let (arg, literal) = self.unary_tagged()?;
            if let (Node::Const(c), true) = (&arg.node, literal) {
                return Ok((Expr::new(Node::Const(-c), offset), false));
            }
            return Ok((
                Expr::new(Node::Unary(UnaryFn::Neg, Box::new(arg)), offset),
                false,
            ));
        }
        self.power()
    }

    fn power(&mut self) -> Result<(Expr, bool), ExprError> {
        let (base, literal) = self.atom()?;
        if self.tok == Tok::Op('^') {
            let offset = self.offset;
            self.bump()?;
            let exp = self.unary()?;
            let node = Node::Binary(BinOp::Pow, Box::new(base), Box::new(exp));
            return Ok((Expr::new(node, offset), false));
        }
        Ok((base, literal))
    }

    fn atom(&mut self) -> Result<(Expr, bool), ExprError> {
        let offset = self.offset;
        match std::mem::replace(&mut self.tok, Tok::End) {
            Tok::Num(v) => {
                self.bump()?;
                Ok((Expr::new(Node::Const(v), offset), true))
            }
            Tok::LParen => {
                self.bump()?;
                let inner = self.sum()?;
                self.expect_rparen()?;
                Ok((inner, false))
            }
            Tok::Ident(name) => {
                self.bump()?;
                if name == "pi" {
                    return Ok((Expr::new(Node::Const(std::f64::consts::PI), offset), false));
                }
                if let Some(func) = UnaryFn::from_name(&name) {
                    if self.tok != Tok::LParen {
                        return Err(self.syntax(format!("expected `(` after `{name}`")));
                    }
                    self.bump()?;
                    let arg = self.sum()?;
                    self.expect_rparen()?;
                    return Ok((Expr::new(Node::Unary(func, Box::new(arg)), offset), false));
                }
                match Var::from_name(&name) {
                    Some(v) if self.allowed.contains(&v) => {
                        Ok((Expr::new(Node::Var(v), offset), false))
                    }
                    Some(_) => Err(ExprError::DisallowedVariable {
                        name,
                        offset,
                        allowed: self
                            .allowed
                            .iter()
                            .map(|v| v.name())
                            .collect::<Vec<_>>()
                            .join(", "),
                    }),
                    None => Err(ExprError::UnknownIdentifier { name, offset }),
                }
            }
            Tok::End => Err(self.syntax("unexpected end of input")),
            tok => Err(self.syntax(format!("unexpected {}", describe(&tok)))),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ExprError> {
        if self.tok != Tok::RParen {
            return Err(self.syntax("expected `)`"));
        }
        self.bump()
    }
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Num(v) => format!("number {v}"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Op(c) => format!("operator `{c}`"),
        Tok::LParen => "`(`".into(),
        Tok::RParen => "`)`".into(),
        Tok::End => "end of input".into(),
    }
}

/// Parses `source`, accepting only the variables in `allowed`.
pub fn parse(source: &str, allowed: &[Var]) -> Result<Expr, ExprError> {
    let mut p = Parser {
        lexer: Lexer {
            src: source,
            pos: 0,
        },
        tok: Tok::End,
        offset: 0,
        allowed,
    };
    p.bump()?;
    if p.tok == Tok::End {
        return Err(p.syntax("empty expression"));
    }
    let e = p.sum()?;
    if p.tok != Tok::End {
        return Err(p.syntax(format!("unexpected {} after expression", describe(&p.tok))));
    }
    Ok(e)
}
