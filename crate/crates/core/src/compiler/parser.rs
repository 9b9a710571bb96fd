//! Recursive-descent parser with precedence climbing. Stops at the first
//! syntax error and reports it with line/column.

use super::ast::*;
use super::lexer::{lex, Tok, Token};
use super::Diagnostic;

pub fn parse(source: &str) -> Result<SourceProgram, Diagnostic> {
    let tokens = lex(source)?;
    Parser { tokens, pos: 0 }.program()
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn span(&self) -> Span {
        self.tokens[self.pos].span
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, expected: Tok) -> Result<(), Diagnostic> {
        if *self.peek() == expected {
            self.bump();
            Ok(())
        } else {
            Err(Diagnostic::new(
                self.span(),
                format!("expected {expected}, found {}", self.peek()),
            ))
        }
    }

    fn ident(&mut self) -> Result<String, Diagnostic> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            other => Err(Diagnostic::new(
                self.span(),
                format!("expected identifier, found {other}"),
            )),
        }
    }

    fn program(&mut self) -> Result<SourceProgram, Diagnostic> {
        let mut buffers = Vec::new();
        let mut functions = Vec::new();
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::KwBuffer => {
                    let span = self.span();
                    self.bump();
                    let name = self.ident()?;
                    self.eat(Tok::Semi)?;
                    buffers.push(BufferDecl { name, span });
                }
                Tok::KwTask => functions.push(self.function(true)?),
                Tok::KwFn => functions.push(self.function(false)?),
                other => {
                    return Err(Diagnostic::new(
                        self.span(),
                        format!("expected `task`, `fn`, or `buffer`, found {other}"),
                    ))
                }
            }
        }
        Ok(SourceProgram { buffers, functions })
    }

    fn function(&mut self, is_task: bool) -> Result<FunctionDef, Diagnostic> {
        let span = self.span();
        self.bump(); // task | fn
        let name = self.ident()?;
        self.eat(Tok::LParen)?;
        let mut params = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                params.push(self.ident()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.eat(Tok::RParen)?;
        let body = self.block()?;
        Ok(FunctionDef {
            name,
            params,
            body,
            is_task,
            span,
        })
    }

    fn block(&mut self) -> Result<Block, Diagnostic> {
        self.eat(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(Diagnostic::new(self.span(), "unterminated block".into()));
            }
            stmts.push(self.statement()?);
        }
        self.bump(); // }
        Ok(Block { stmts })
    }

    fn statement(&mut self) -> Result<Stmt, Diagnostic> {
        let span = self.span();
        let kind = match self.peek().clone() {
            Tok::KwLet => {
                self.bump();
                let name = self.ident()?;
                let init = if *self.peek() == Tok::Assign {
                    self.bump();
                    Some(self.expr()?)
                } else {
                    None
                };
                self.eat(Tok::Semi)?;
                StmtKind::Let { name, init }
            }
            Tok::KwIf => {
                self.bump();
                self.eat(Tok::LParen)?;
                let cond = self.expr()?;
                self.eat(Tok::RParen)?;
                let then_block = self.block()?;
                let else_block = if *self.peek() == Tok::KwElse {
                    self.bump();
                    if *self.peek() == Tok::KwIf {
                        // else-if chains as a nested single-statement block
                        let nested = self.statement()?;
                        Some(Block {
                            stmts: vec![nested],
                        })
                    } else {
                        Some(self.block()?)
                    }
                } else {
                    None
                };
                return Ok(Stmt {
                    kind: StmtKind::If {
                        cond,
                        then_block,
                        else_block,
                    },
                    span,
                });
            }
            Tok::KwWhile => {
                self.bump();
                self.eat(Tok::LParen)?;
                let cond = self.expr()?;
                self.eat(Tok::RParen)?;
                let body = self.block()?;
                return Ok(Stmt {
                    kind: StmtKind::While { cond, body },
                    span,
                });
            }
            Tok::KwReturn => {
                self.bump();
                let value = if *self.peek() == Tok::Semi {
                    None
                } else {
                    Some(self.expr()?)
                };
                self.eat(Tok::Semi)?;
                StmtKind::Return { value }
            }
            Tok::KwSpawn => {
                self.bump();
                let queue = self.queue_clause()?;
                // Either `x = callee(...)` or `callee(...)`.
                let first = self.ident().map_err(|_| {
                    Diagnostic::new(
                        self.span(),
                        "spawn must be immediately followed by a call to a task function \
                         (optionally as a single assignment); statement blocks are not supported"
                            .into(),
                    )
                })?;
                let (target, callee) = if *self.peek() == Tok::Assign {
                    self.bump();
                    let callee = self.ident().map_err(|_| {
                        Diagnostic::new(
                            self.span(),
                            "spawn assignment must call a task function; statement blocks and \
                             expressions are not supported"
                                .into(),
                        )
                    })?;
                    (Some(first), callee)
                } else {
                    (None, first)
                };
                if *self.peek() != Tok::LParen {
                    return Err(Diagnostic::new(
                        self.span(),
                        "spawn must be immediately followed by a call to a task function \
                         (optionally as a single assignment); statement blocks are not supported"
                            .into(),
                    ));
                }
                let args = self.call_args()?;
                self.eat(Tok::Semi)?;
                StmtKind::Spawn {
                    queue,
                    target,
                    callee,
                    args,
                }
            }
            Tok::KwTaskwait => {
                self.bump();
                let queue = self.queue_clause()?;
                self.eat(Tok::Semi)?;
                StmtKind::Taskwait { queue }
            }
            // Lookahead: `x = expr;` is an assignment, otherwise an
            // expression statement.
            Tok::Ident(name) if self.tokens[self.pos + 1].tok == Tok::Assign => {
                {
                    self.bump();
                    self.bump();
                    let value = self.expr()?;
                    self.eat(Tok::Semi)?;
                    StmtKind::Assign { name, value }
                }
            }
            _ => {
                let expr = self.expr()?;
                self.eat(Tok::Semi)?;
                StmtKind::Expr { expr }
            }
        };
        Ok(Stmt { kind, span })
    }

    fn queue_clause(&mut self) -> Result<Option<Expr>, Diagnostic> {
        if *self.peek() == Tok::KwQueue {
            self.bump();
            self.eat(Tok::LParen)?;
            let e = self.expr()?;
            self.eat(Tok::RParen)?;
            Ok(Some(e))
        } else {
            Ok(None)
        }
    }

    fn call_args(&mut self) -> Result<Vec<Expr>, Diagnostic> {
        self.eat(Tok::LParen)?;
        let mut args = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                args.push(self.expr()?);
                if *self.peek() == Tok::Comma {
                    self.bump();
                } else {
                    break;
                }
            }
        }
        self.eat(Tok::RParen)?;
        Ok(args)
    }

    fn expr(&mut self) -> Result<Expr, Diagnostic> {
        self.ternary()
    }

    fn ternary(&mut self) -> Result<Expr, Diagnostic> {
        let cond = self.binary(0)?;
        if *self.peek() == Tok::Question {
            let span = self.span();
            self.bump();
            let then_val = self.ternary()?;
            self.eat(Tok::Colon)?;
            let else_val = self.ternary()?;
            Ok(Expr {
                kind: ExprKind::Ternary {
                    cond: Box::new(cond),
                    then_val: Box::new(then_val),
                    else_val: Box::new(else_val),
                },
                span,
            })
        } else {
            Ok(cond)
        }
    }

    fn binop_of(tok: &Tok) -> Option<(BinOp, u8)> {
        // Higher binds tighter.
        Some(match tok {
            Tok::PipePipe => (BinOp::Or, 1),
            Tok::AmpAmp => (BinOp::And, 2),
            Tok::Pipe => (BinOp::BitOr, 3),
            Tok::Caret => (BinOp::BitXor, 4),
            Tok::Amp => (BinOp::BitAnd, 5),
            Tok::EqEq => (BinOp::Eq, 6),
            Tok::BangEq => (BinOp::Ne, 6),
            Tok::Lt => (BinOp::Lt, 7),
            Tok::Le => (BinOp::Le, 7),
            Tok::Gt => (BinOp::Gt, 7),
            Tok::Ge => (BinOp::Ge, 7),
            Tok::Shl => (BinOp::Shl, 8),
            Tok::Shr => (BinOp::Shr, 8),
            Tok::Plus => (BinOp::Add, 9),
            Tok::Minus => (BinOp::Sub, 9),
            Tok::Star => (BinOp::Mul, 10),
            Tok::Slash => (BinOp::Div, 10),
            Tok::Percent => (BinOp::Rem, 10),
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, Diagnostic> {
        let mut lhs = self.unary()?;
        while let Some((op, prec)) = Self::binop_of(self.peek()) {
            if prec < min_prec {
                break;
            }
            let span = self.span();
            self.bump();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr {
                kind: ExprKind::Binary {
                    op,
                    lhs: Box::new(lhs),
                    rhs: Box::new(rhs),
                },
                span,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, Diagnostic> {
        let span = self.span();
        let op = match self.peek() {
            Tok::Minus => Some(UnOp::Neg),
            Tok::Bang => Some(UnOp::Not),
            Tok::Tilde => Some(UnOp::BitNot),
            _ => None,
        };
        if let Some(op) = op {
            self.bump();
            let operand = self.unary()?;
            return Ok(Expr {
                kind: ExprKind::Unary {
                    op,
                    operand: Box::new(operand),
                },
                span,
            });
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr, Diagnostic> {
        let span = self.span();
        match self.peek().clone() {
            Tok::Int(value) => {
                self.bump();
                Ok(Expr {
                    kind: ExprKind::Literal(value),
                    span,
                })
            }
            Tok::Ident(name) => {
                self.bump();
                if *self.peek() == Tok::LParen {
                    let args = self.call_args()?;
                    Ok(Expr {
                        kind: ExprKind::Call { callee: name, args },
                        span,
                    })
                } else {
                    Ok(Expr {
                        kind: ExprKind::Var(name),
                        span,
                    })
                }
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.eat(Tok::RParen)?;
                Ok(e)
            }
            other => Err(Diagnostic::new(
                span,
                format!("expected expression, found {other}"),
            )),
        }
    }
}
