//! Lexer, recursive-descent parser and validator for MiniImp.
//!
//! ```text
//! program := decl* stmt+
//! decl    := "int" ID ("=" init)? ";"
//! init    := INT | "-" INT | "input" "(" ")" | "*"
//! stmt    := ID "=" (expr | "*" | "input" "(" ")") ";"
//!          | "if" "(" expr ")" block ("else" block)?
//!          | "while" "(" expr ")" block
//!          | "assert" "(" expr ")" ";"
//!          | "skip" ";"
//! block   := "{" stmt* "}"
//! ```

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ast::{BinOp, Decl, Expr, Init, Program, Stmt, UnOp};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl core::fmt::Display for Pos {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ValidationError {
    #[error("program has no assert statement")]
    MissingAssert,
    #[error("program has {0} assert statements, expected exactly one")]
    MultipleAsserts(usize),
    #[error("undeclared variable `{0}`")]
    Undeclared(String),
    #[error("variable `{0}` declared twice")]
    DuplicateDecl(String),
    #[error("type error: {0}")]
    Type(String),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("{pos}: syntax error: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("{pos}: {error}")]
    Validation { pos: Pos, error: ValidationError },
}

impl ParseError {
    pub fn pos(&self) -> Pos {
        match self {
            ParseError::Syntax { pos, .. } | ParseError::Validation { pos, .. } => *pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Int(u64),
    Ident(String),
    KwInt,
    KwIf,
    KwElse,
    KwWhile,
    KwAssert,
    KwSkip,
    KwInput,
    KwTrue,
    KwFalse,
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Assign,
    Star,
    Plus,
    Minus,
    Slash,
    Percent,
    Lt,
    Le,
    Gt,
    Ge,
    EqEq,
    Ne,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

fn describe(tok: &Tok) -> String {
    match tok {
        Tok::Int(n) => format!("integer `{n}`"),
        Tok::Ident(s) => format!("identifier `{s}`"),
        Tok::Eof => "end of input".to_string(),
        other => format!("`{}`", token_text(other)),
    }
}

fn token_text(tok: &Tok) -> &'static str {
    match tok {
        Tok::KwInt => "int",
        Tok::KwIf => "if",
        Tok::KwElse => "else",
        Tok::KwWhile => "while",
        Tok::KwAssert => "assert",
        Tok::KwSkip => "skip",
        Tok::KwInput => "input",
        Tok::KwTrue => "true",
        Tok::KwFalse => "false",
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::LBrace => "{",
        Tok::RBrace => "}",
        Tok::Semi => ";",
        Tok::Assign => "=",
        Tok::Star => "*",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Slash => "/",
        Tok::Percent => "%",
        Tok::Lt => "<",
        Tok::Le => "<=",
        Tok::Gt => ">",
        Tok::Ge => ">=",
        Tok::EqEq => "==",
        Tok::Ne => "!=",
        Tok::AndAnd => "&&",
        Tok::OrOr => "||",
        Tok::Bang => "!",
        Tok::Int(_) | Tok::Ident(_) | Tok::Eof => "",
    }
}

fn lex(source: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '/' && chars.get(i + 1) == Some(&'/') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let value = text
                .parse::<u64>()
                .map_err(|_| ParseError::Syntax { pos, message: format!("integer literal `{text}` out of range") })?;
            col += i - start;
            out.push((Tok::Int(value), pos));
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            col += i - start;
            let tok = match word.as_str() {
                "int" => Tok::KwInt,
                "if" => Tok::KwIf,
                "else" => Tok::KwElse,
                "while" => Tok::KwWhile,
                "assert" => Tok::KwAssert,
                "skip" => Tok::KwSkip,
                "input" => Tok::KwInput,
                "true" => Tok::KwTrue,
                "false" => Tok::KwFalse,
                _ => Tok::Ident(word),
            };
            out.push((tok, pos));
            continue;
        }
        let next = chars.get(i + 1).copied();
        let (tok, len) = match (c, next) {
            ('<', Some('=')) => (Tok::Le, 2),
            ('>', Some('=')) => (Tok::Ge, 2),
            ('=', Some('=')) => (Tok::EqEq, 2),
            ('!', Some('=')) => (Tok::Ne, 2),
            ('&', Some('&')) => (Tok::AndAnd, 2),
            ('|', Some('|')) => (Tok::OrOr, 2),
            ('(', _) => (Tok::LParen, 1),
            (')', _) => (Tok::RParen, 1),
            ('{', _) => (Tok::LBrace, 1),
            ('}', _) => (Tok::RBrace, 1),
            (';', _) => (Tok::Semi, 1),
            ('=', _) => (Tok::Assign, 1),
            ('*', _) => (Tok::Star, 1),
            ('+', _) => (Tok::Plus, 1),
            ('-', _) => (Tok::Minus, 1),
            ('/', _) => (Tok::Slash, 1),
            ('%', _) => (Tok::Percent, 1),
            ('<', _) => (Tok::Lt, 1),
            ('>', _) => (Tok::Gt, 1),
            ('!', _) => (Tok::Bang, 1),
            _ => return Err(ParseError::Syntax { pos, message: format!("unexpected character `{c}`") }),
        };
        i += len;
        col += len;
        out.push((tok, pos));
    }
    out.push((Tok::Eof, Pos { line, col }));
    Ok(out)
}

/// Source positions of the parsed program, used for diagnostics.
#[derive(Default)]
struct Positions {
    decls: Vec<Pos>,
    var_uses: Vec<(String, Pos)>,
    asserts: Vec<Pos>,
    conditions: Vec<(Expr, Pos, Context)>,
    assigned: Vec<(Expr, Pos)>,
}

#[derive(Clone, Copy)]
enum Context {
    Branch,
    Assert,
}

struct Parser {
    toks: Vec<(Tok, Pos)>,
    at: usize,
    positions: Positions,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn peek_at(&self, offset: usize) -> &Tok {
        let i = (self.at + offset).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> Tok {
        let tok = self.toks[self.at].0.clone();
        if self.at < self.toks.len() - 1 {
            self.at += 1;
        }
        tok
    }

    fn error<T>(&self, expected: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax {
            pos: self.pos(),
            message: format!("expected {expected}, found {}", describe(self.peek())),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(&format!("`{}`", token_text(&tok)))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => self.error("identifier"),
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut decls = Vec::new();
        while *self.peek() == Tok::KwInt {
            let pos = self.pos();
            decls.push(self.decl()?);
            self.positions.decls.push(pos);
        }
        let mut body = Vec::new();
        while *self.peek() != Tok::Eof {
            body.push(self.stmt()?);
        }
        if body.is_empty() {
            return self.error("a statement");
        }
        Ok(Program { decls, body })
    }

    fn decl(&mut self) -> Result<Decl, ParseError> {
        self.expect(Tok::KwInt)?;
        let name = self.ident()?;
        let init = if *self.peek() == Tok::Assign {
            self.bump();
            match self.peek().clone() {
                Tok::Int(n) => {
                    self.bump();
                    Init::Const(n as i64)
                }
                Tok::Minus => {
                    self.bump();
                    match *self.peek() {
                        Tok::Int(n) => {
                            self.bump();
                            Init::Const((n as i64).wrapping_neg())
                        }
                        _ => return self.error("integer literal"),
                    }
                }
                Tok::Star => {
                    self.bump();
                    Init::Nondet
                }
                Tok::KwInput => {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    Init::Input
                }
                _ => return self.error("integer literal, `input()` or `*`"),
            }
        } else {
            Init::Const(0)
        };
        self.expect(Tok::Semi)?;
        Ok(Decl { name, init })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return self.error("`}`");
            }
            stmts.push(self.stmt()?);
        }
        self.bump();
        Ok(stmts)
    }

    fn condition(&mut self, context: Context) -> Result<Expr, ParseError> {
        self.expect(Tok::LParen)?;
        let pos = self.pos();
        let cond = self.expr()?;
        self.expect(Tok::RParen)?;
        self.positions.conditions.push((cond.clone(), pos, context));
        Ok(cond)
    }

    fn stmt(&mut self) -> Result<Stmt, ParseError> {
        match self.peek().clone() {
            Tok::Ident(var) => {
                let pos = self.pos();
                self.bump();
                self.positions.var_uses.push((var.clone(), pos));
                self.expect(Tok::Assign)?;
                let stmt = if *self.peek() == Tok::Star && *self.peek_at(1) == Tok::Semi {
                    self.bump();
                    Stmt::Nondet { var }
                } else if *self.peek() == Tok::KwInput {
                    self.bump();
                    self.expect(Tok::LParen)?;
                    self.expect(Tok::RParen)?;
                    Stmt::Input { var }
                } else {
                    let epos = self.pos();
                    let expr = self.expr()?;
                    self.positions.assigned.push((expr.clone(), epos));
                    Stmt::Assign { var, expr }
                };
                self.expect(Tok::Semi)?;
                Ok(stmt)
            }
            Tok::KwIf => {
                self.bump();
                let cond = self.condition(Context::Branch)?;
                let then_block = self.block()?;
                let else_block = if *self.peek() == Tok::KwElse {
                    self.bump();
                    self.block()?
                } else {
                    Vec::new()
                };
                Ok(Stmt::If { cond, then_block, else_block })
            }
            Tok::KwWhile => {
                self.bump();
                let cond = self.condition(Context::Branch)?;
                let body = self.block()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::KwAssert => {
                let pos = self.pos();
                self.bump();
                let cond = self.condition(Context::Assert)?;
                self.expect(Tok::Semi)?;
                self.positions.asserts.push(pos);
                Ok(Stmt::Assert { cond })
            }
            Tok::KwSkip => {
                self.bump();
                self.expect(Tok::Semi)?;
                Ok(Stmt::Skip)
            }
            Tok::KwInt => self.error("a statement (declarations must precede statements)"),
            _ => self.error("a statement"),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        self.binary(1)
    }

    fn binary_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::Ne => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Rem,
            _ => return None,
        })
    }

    fn binary(&mut self, min_prec: u8) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binary_op() {
            if op.precedence() < min_prec {
                break;
            }
            self.bump();
            let rhs = self.binary(op.precedence() + 1)?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Minus => {
                self.bump();
                // `-` directly followed by a literal is a negative literal
                if let Tok::Int(n) = *self.peek() {
                    self.bump();
                    return Ok(Expr::Int((n as i64).wrapping_neg()));
                }
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            Tok::Bang => {
                self.bump();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::Int(n as i64))
            }
            Tok::KwTrue => {
                self.bump();
                Ok(Expr::Bool(true))
            }
            Tok::KwFalse => {
                self.bump();
                Ok(Expr::Bool(false))
            }
            Tok::Ident(name) => {
                let pos = self.pos();
                self.bump();
                self.positions.var_uses.push((name.clone(), pos));
                Ok(Expr::Var(name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            _ => self.error("an expression"),
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Ty {
    Int,
    Bool,
}

fn type_of(e: &Expr) -> Result<Ty, String> {
    match e {
        Expr::Int(_) | Expr::Var(_) => Ok(Ty::Int),
        Expr::Bool(_) => Ok(Ty::Bool),
        Expr::Unary(UnOp::Neg, inner) => match type_of(inner)? {
            Ty::Int => Ok(Ty::Int),
            Ty::Bool => Err("`-` applied to a boolean".to_string()),
        },
        Expr::Unary(UnOp::Not, inner) => match type_of(inner)? {
            Ty::Bool => Ok(Ty::Bool),
            Ty::Int => Err("`!` applied to an integer".to_string()),
        },
        Expr::Binary(op, l, r) => {
            let (lt, rt) = (type_of(l)?, type_of(r)?);
            if op.is_logical() {
                if lt == Ty::Bool && rt == Ty::Bool {
                    Ok(Ty::Bool)
                } else {
                    Err(format!("`{}` needs boolean operands", op.symbol()))
                }
            } else if lt == Ty::Int && rt == Ty::Int {
                Ok(if op.is_comparison() { Ty::Bool } else { Ty::Int })
            } else {
                Err(format!("`{}` needs integer operands", op.symbol()))
            }
        }
    }
}

fn validate(program: &Program, positions: &Positions) -> Result<(), ParseError> {
    let mut declared = BTreeSet::new();
    for (decl, pos) in program.decls.iter().zip(&positions.decls) {
        if !declared.insert(decl.name.as_str()) {
            return Err(ParseError::Validation { pos: *pos, error: ValidationError::DuplicateDecl(decl.name.clone()) });
        }
    }
    for (name, pos) in &positions.var_uses {
        if !declared.contains(name.as_str()) {
            return Err(ParseError::Validation { pos: *pos, error: ValidationError::Undeclared(name.clone()) });
        }
    }
    for (expr, pos, context) in &positions.conditions {
        match type_of(expr) {
            Ok(Ty::Bool) => {}
            Ok(Ty::Int) => {
                let what = match context {
                    Context::Branch => "branch condition",
                    Context::Assert => "assert condition",
                };
                return Err(ParseError::Validation {
                    pos: *pos,
                    error: ValidationError::Type(format!("{what} must be boolean")),
                });
            }
            Err(message) => return Err(ParseError::Validation { pos: *pos, error: ValidationError::Type(message) }),
        }
    }
    for (expr, pos) in &positions.assigned {
        match type_of(expr) {
            Ok(Ty::Int) => {}
            Ok(Ty::Bool) => {
                return Err(ParseError::Validation {
                    pos: *pos,
                    error: ValidationError::Type("cannot assign a boolean to an integer variable".to_string()),
                })
            }
            Err(message) => return Err(ParseError::Validation { pos: *pos, error: ValidationError::Type(message) }),
        }
    }
    match positions.asserts.len() {
        0 => Err(ParseError::Validation { pos: Pos { line: 1, col: 1 }, error: ValidationError::MissingAssert }),
        1 => Ok(()),
        n => Err(ParseError::Validation { pos: positions.asserts[1], error: ValidationError::MultipleAsserts(n) }),
    }
}

/// Parse and validate a MiniImp source text.
pub fn parse(source: &str) -> Result<Program, ParseError> {
    let toks = lex(source)?;
    let mut parser = Parser { toks, at: 0, positions: Positions::default() };
    let program = parser.program()?;
    validate(&program, &parser.positions)?;
    Ok(program)
}

/// Validate a program built in memory (e.g. by a transformation).
pub fn check_program(program: &Program) -> Result<(), ValidationError> {
    match parse(&crate::pretty::pretty_print(program)) {
        Ok(reparsed) if reparsed == *program => Ok(()),
        Ok(_) => Err(ValidationError::Type("program does not round-trip".to_string())),
        Err(ParseError::Validation { error, .. }) => Err(error),
        Err(ParseError::Syntax { message, .. }) => Err(ValidationError::Type(message)),
    }
}
