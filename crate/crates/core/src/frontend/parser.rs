use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::SyntaxError;

/// Parse and label a program.
pub fn parse(src: &str) -> Result<Program, SyntaxError> {
    let toks = lex(src)?;
    let mut p = Parser {
        toks,
        pos: 0,
        next_label: 0,
    };
    let cmds = p.cmd_list(true)?;
    let body = match cmds.len() {
        0 => None,
        1 => cmds.into_iter().next(),
        _ => {
            let label = p.label();
            Some(Cmd {
                label,
                kind: CmdKind::Seq(cmds),
            })
        }
    };
    Ok(Program {
        body,
        n_labels: p.next_label,
    })
}

/// Exact value of a decimal literal such as `-1.25e-3`.
pub fn parse_decimal(text: &str) -> Option<BigRational> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, text),
    };
    let (mant, exp) = match body.find(['e', 'E']) {
        Some(i) => (&body[..i], body[i + 1..].parse::<i64>().ok()?),
        None => (body, 0),
    };
    let (int_part, frac_part) = match mant.find('.') {
        Some(i) => (&mant[..i], &mant[i + 1..]),
        None => (mant, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let digits: String = [int_part, frac_part].concat();
    if !digits.chars().all(|c| c.is_ascii_digit()) {
        return None;
    }
    let n: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let mut v = if scale >= 0 {
        BigRational::from_integer(n * num_traits::pow(ten, scale as usize))
    } else {
        BigRational::new(n, num_traits::pow(ten, (-scale) as usize))
    };
    if neg {
        v = -v;
    }
    Some(v)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    next_label: Label,
}

impl Parser {
    fn label(&mut self) -> Label {
        let l = self.next_label;
        self.next_label += 1;
        l
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err(&self, msg: &str) -> SyntaxError {
        let t = &self.toks[self.pos];
        SyntaxError::new(t.line, t.col, msg)
    }

    fn expect(&mut self, want: Tok, what: &str) -> Result<(), SyntaxError> {
        if *self.peek() == want {
            self.advance();
            Ok(())
        } else {
            Err(self.err(&alloc::format!("expected {}", what)))
        }
    }

    fn ident(&mut self) -> Result<String, SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(s) if !is_keyword(&s) => {
                self.advance();
                Ok(s)
            }
            _ => Err(self.err("expected an identifier")),
        }
    }

    /// Commands up to `}` (or end of input at top level). Blocks ending in
    /// `}` need no `;`; stray `;` are ignored.
    fn cmd_list(&mut self, top: bool) -> Result<Vec<Cmd>, SyntaxError> {
        let mut cmds = Vec::new();
        loop {
            while *self.peek() == Tok::Semi {
                self.advance();
            }
            match self.peek() {
                Tok::Eof if top => return Ok(cmds),
                Tok::RBrace if !top => return Ok(cmds),
                Tok::Eof => return Err(self.err("expected '}'")),
                _ => {}
            }
            let (cmd, block) = self.cmd()?;
            cmds.push(cmd);
            match self.peek() {
                Tok::Semi => {
                    self.advance();
                }
                Tok::Eof if top => {}
                Tok::RBrace if !top => {}
                _ if block => {}
                _ => return Err(self.err("expected ';'")),
            }
        }
    }

    fn block(&mut self) -> Result<Cmd, SyntaxError> {
        self.expect(Tok::LBrace, "'{'")?;
        let cmds = self.cmd_list(false)?;
        self.expect(Tok::RBrace, "'}'")?;
        Ok(if cmds.len() == 1 {
            cmds.into_iter().next().unwrap()
        } else {
            let label = self.label();
            Cmd {
                label,
                kind: CmdKind::Seq(cmds),
            }
        })
    }

    /// Returns the command and whether it ended with a block.
    fn cmd(&mut self) -> Result<(Cmd, bool), SyntaxError> {
        match self.peek().clone() {
            Tok::Ident(k) if k == "while" => {
                self.advance();
                self.expect(Tok::LParen, "'(' after while")?;
                let cond = self.cond()?;
                self.expect(Tok::RParen, "')'")?;
                let body = self.block()?;
                let label = self.label();
                Ok((
                    Cmd {
                        label,
                        kind: CmdKind::While {
                            cond,
                            body: Box::new(body),
                        },
                    },
                    true,
                ))
            }
            Tok::Ident(k) if k == "if" => {
                self.advance();
                self.expect(Tok::LParen, "'(' after if")?;
                let cond = self.cond()?;
                self.expect(Tok::RParen, "')'")?;
                let then_branch = self.block()?;
                let else_branch = if *self.peek() == Tok::Ident("else".into()) {
                    self.advance();
                    Some(Box::new(self.block()?))
                } else {
                    None
                };
                let label = self.label();
                Ok((
                    Cmd {
                        label,
                        kind: CmdKind::If {
                            cond,
                            then_branch: Box::new(then_branch),
                            else_branch,
                        },
                    },
                    true,
                ))
            }
            Tok::Ident(k) if k == "require_nsb" => {
                self.advance();
                self.expect(Tok::LParen, "'(' after require_nsb")?;
                let var = self.ident()?;
                self.expect(Tok::Comma, "','")?;
                let nsb = match self.advance() {
                    Tok::Number(s, None) => match s.parse::<u32>() {
                        Ok(n) if n >= 1 => n,
                        _ => return Err(self.err("require_nsb needs a positive integer")),
                    },
                    _ => return Err(self.err("require_nsb needs a positive integer")),
                };
                self.expect(Tok::RParen, "')'")?;
                let label = self.label();
                Ok((
                    Cmd {
                        label,
                        kind: CmdKind::Require { var, nsb },
                    },
                    false,
                ))
            }
            Tok::Ident(_) => {
                let var = self.ident()?;
                self.expect(Tok::Assign, "'='")?;
                let expr = self.expr()?;
                let label = self.label();
                Ok((
                    Cmd {
                        label,
                        kind: CmdKind::Assign { var, expr },
                    },
                    false,
                ))
            }
            _ => Err(self.err("expected a command")),
        }
    }

    fn cond(&mut self) -> Result<Cond, SyntaxError> {
        let mut lhs = self.cond_and()?;
        while *self.peek() == Tok::OrOr {
            self.advance();
            let rhs = self.cond_and()?;
            let label = self.label();
            lhs = Cond {
                label,
                kind: CondKind::Or(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn cond_and(&mut self) -> Result<Cond, SyntaxError> {
        let mut lhs = self.cond_unary()?;
        while *self.peek() == Tok::AndAnd {
            self.advance();
            let rhs = self.cond_unary()?;
            let label = self.label();
            lhs = Cond {
                label,
                kind: CondKind::And(Box::new(lhs), Box::new(rhs)),
            };
        }
        Ok(lhs)
    }

    fn cond_unary(&mut self) -> Result<Cond, SyntaxError> {
        if *self.peek() == Tok::Bang {
            self.advance();
            let inner = self.cond_unary()?;
            let label = self.label();
            return Ok(Cond {
                label,
                kind: CondKind::Not(Box::new(inner)),
            });
        }
        // a parenthesis here opens either a condition or an arithmetic operand
        if *self.peek() == Tok::LParen {
            let save = (self.pos, self.next_label);
            self.advance();
            if let Ok(c) = self.cond() {
                if *self.peek() == Tok::RParen {
                    self.advance();
                    return Ok(c);
                }
            }
            self.pos = save.0;
            self.next_label = save.1;
        }
        let a = self.expr()?;
        let op = match self.advance() {
            Tok::Lt => CmpOp::Lt,
            Tok::Le => CmpOp::Le,
            Tok::Gt => CmpOp::Gt,
            Tok::Ge => CmpOp::Ge,
            Tok::EqEq => CmpOp::Eq,
            Tok::Ne => CmpOp::Ne,
            _ => {
                self.pos -= 1;
                return Err(self.err("expected a comparison operator"));
            }
        };
        let b = self.expr()?;
        let label = self.label();
        Ok(Cond {
            label,
            kind: CondKind::Cmp(op, a, b),
        })
    }

    fn expr(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            let label = self.label();
            lhs = Expr {
                label,
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
            };
        }
    }

    fn term(&mut self) -> Result<Expr, SyntaxError> {
        let mut lhs = self.primary()?;
        loop {
            let op = match self.peek() {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.primary()?;
            let label = self.label();
            lhs = Expr {
                label,
                kind: ExprKind::Bin(op, Box::new(lhs), Box::new(rhs)),
            };
        }
    }

    fn primary(&mut self) -> Result<Expr, SyntaxError> {
        match self.peek().clone() {
            Tok::Minus => {
                if let Tok::Number(..) = self.peek_at(1) {
                    self.advance();
                    self.number(true)
                } else {
                    Err(self.err("unary minus is only allowed on literals"))
                }
            }
            Tok::Number(..) => self.number(false),
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Tok::Ident(name) => {
                if name == "sqrt" || MathFn::from_name(&name).is_some() {
                    self.advance();
                    self.expect(Tok::LParen, "'('")?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Tok::RParen, "')'")?;
                    let label = self.label();
                    let kind = match MathFn::from_name(&name) {
                        Some(f) => ExprKind::Math(f, arg),
                        None => ExprKind::Sqrt(arg),
                    };
                    return Ok(Expr { label, kind });
                }
                let x = self.ident()?;
                let label = self.label();
                Ok(Expr {
                    label,
                    kind: ExprKind::Var(x),
                })
            }
            _ => Err(self.err("expected an expression")),
        }
    }

    fn number(&mut self, neg: bool) -> Result<Expr, SyntaxError> {
        let (text, prec) = match self.peek().clone() {
            Tok::Number(s, p) => (s, p),
            _ => return Err(self.err("expected a number")),
        };
        let text = if neg { alloc::format!("-{}", text) } else { text };
        let value = parse_decimal(&text).ok_or_else(|| self.err("malformed number"))?;
        self.advance();
        let label = self.label();
        Ok(Expr {
            label,
            kind: ExprKind::Const {
                value: Decimal { text, value },
                prec: prec.unwrap_or(DEFAULT_CONST_PREC),
                explicit_prec: prec.is_some(),
            },
        })
    }
}

fn is_keyword(s: &str) -> bool {
    matches!(s, "while" | "if" | "else" | "require_nsb" | "sqrt") || MathFn::from_name(s).is_some()
}

/// Renders a rational as an exact decimal when the denominator allows it.
pub fn rational_to_decimal_text(v: &BigRational) -> Option<String> {
    let mut d = v.denom().clone();
    let (two, five) = (BigInt::from(2), BigInt::from(5));
    let (mut a, mut b) = (0usize, 0usize);
    while (&d % &two).is_zero() {
        d /= &two;
        a += 1;
    }
    while (&d % &five).is_zero() {
        d /= &five;
        b += 1;
    }
    if !d.is_one() {
        return None;
    }
    let k = a.max(b);
    let scaled = v * BigRational::from_integer(num_traits::pow(BigInt::from(10), k));
    let n = scaled.to_integer();
    let neg = n < BigInt::zero();
    let digits = if neg { (-&n).to_string() } else { n.to_string() };
    let digits = if digits.len() <= k {
        alloc::format!("{}{}", "0".repeat(k + 1 - digits.len()), digits)
    } else {
        digits
    };
    let (ip, fp) = digits.split_at(digits.len() - k);
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(ip);
    s.push('.');
    s.push_str(if fp.is_empty() { "0" } else { fp });
    Some(s)
}
