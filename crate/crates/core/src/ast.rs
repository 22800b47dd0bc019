//! Abstract syntax of MiniImp.
//!
//! All variables are 64-bit integers. Boolean values only exist as the result
//! of comparisons and logical operators, and are consumed by `if`, `while` and
//! `assert`.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
    Ne,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Rem => "%",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding strength; larger binds tighter. All levels are left-associative.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Rem => 6,
        }
    }

    pub fn is_arithmetic(self) -> bool {
        matches!(self, BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Div | BinOp::Rem)
    }

    pub fn is_comparison(self) -> bool {
        matches!(self, BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge | BinOp::Eq | BinOp::Ne)
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Int(i64),
    Bool(bool),
    Var(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn var(name: impl Into<String>) -> Self {
        Expr::Var(name.into())
    }

    pub fn negation(e: Expr) -> Self {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn binary(op: BinOp, lhs: Expr, rhs: Expr) -> Self {
        Expr::Binary(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn and(lhs: Expr, rhs: Expr) -> Self {
        Expr::binary(BinOp::And, lhs, rhs)
    }

    /// Variables read by the expression.
    pub fn free_vars(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) => {}
            Expr::Var(v) => {
                out.insert(v.clone());
            }
            Expr::Unary(_, e) => e.collect_vars(out),
            Expr::Binary(_, l, r) => {
                l.collect_vars(out);
                r.collect_vars(out);
            }
        }
    }

    /// `self[replacement / var]`.
    pub fn substitute(&self, var: &str, replacement: &Expr) -> Expr {
        match self {
            Expr::Var(v) if v == var => replacement.clone(),
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.substitute(var, replacement))),
            Expr::Binary(op, l, r) => {
                Expr::Binary(*op, Box::new(l.substitute(var, replacement)), Box::new(r.substitute(var, replacement)))
            }
        }
    }

    /// True when the expression divides by something other than a nonzero literal.
    pub fn has_unsafe_division(&self) -> bool {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => false,
            Expr::Unary(_, e) => e.has_unsafe_division(),
            Expr::Binary(op, l, r) => {
                let risky = matches!(op, BinOp::Div | BinOp::Rem) && !matches!(r.as_ref(), Expr::Int(n) if *n != 0);
                risky || l.has_unsafe_division() || r.has_unsafe_division()
            }
        }
    }

    /// Constant folding. Never folds an operation that could trap.
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::Var(_) => self.clone(),
            Expr::Unary(op, e) => {
                let e = e.simplify();
                match (op, &e) {
                    (UnOp::Not, Expr::Bool(b)) => Expr::Bool(!b),
                    (UnOp::Not, Expr::Unary(UnOp::Not, inner)) => (**inner).clone(),
                    (UnOp::Neg, Expr::Int(n)) if *n != i64::MIN => Expr::Int(-n),
                    _ => Expr::Unary(*op, Box::new(e)),
                }
            }
            Expr::Binary(op, l, r) => {
                let l = l.simplify();
                let r = r.simplify();
                match (op, &l, &r) {
                    (BinOp::And, Expr::Bool(false), _) | (BinOp::And, _, Expr::Bool(false)) => Expr::Bool(false),
                    (BinOp::And, Expr::Bool(true), _) => r,
                    (BinOp::And, _, Expr::Bool(true)) => l,
                    (BinOp::Or, Expr::Bool(true), _) | (BinOp::Or, _, Expr::Bool(true)) => Expr::Bool(true),
                    (BinOp::Or, Expr::Bool(false), _) => r,
                    (BinOp::Or, _, Expr::Bool(false)) => l,
                    (_, Expr::Int(a), Expr::Int(b)) => match fold_int(*op, *a, *b) {
                        Some(folded) => folded,
                        None => Expr::Binary(*op, Box::new(l), Box::new(r)),
                    },
                    _ => Expr::Binary(*op, Box::new(l), Box::new(r)),
                }
            }
        }
    }
}

fn fold_int(op: BinOp, a: i64, b: i64) -> Option<Expr> {
    Some(match op {
        BinOp::Add => Expr::Int(a.wrapping_add(b)),
        BinOp::Sub => Expr::Int(a.wrapping_sub(b)),
        BinOp::Mul => Expr::Int(a.wrapping_mul(b)),
        BinOp::Div if b != 0 => Expr::Int(a.wrapping_div(b)),
        BinOp::Rem if b != 0 => Expr::Int(a.wrapping_rem(b)),
        BinOp::Lt => Expr::Bool(a < b),
        BinOp::Le => Expr::Bool(a <= b),
        BinOp::Gt => Expr::Bool(a > b),
        BinOp::Ge => Expr::Bool(a >= b),
        BinOp::Eq => Expr::Bool(a == b),
        BinOp::Ne => Expr::Bool(a != b),
        _ => return None,
    })
}

/// Initial value of a declared variable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Init {
    Const(i64),
    Input,
    Nondet,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Decl {
    pub name: String,
    pub init: Init,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Stmt {
    Assign { var: String, expr: Expr },
    Nondet { var: String },
    Input { var: String },
    If { cond: Expr, then_block: Vec<Stmt>, else_block: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    Assert { cond: Expr },
    Skip,
}

impl Stmt {
    pub fn assign(var: impl Into<String>, expr: Expr) -> Self {
        Stmt::Assign { var: var.into(), expr }
    }

    /// Condition of an `if`/`while`.
    pub fn condition(&self) -> Option<&Expr> {
        match self {
            Stmt::If { cond, .. } | Stmt::While { cond, .. } => Some(cond),
            _ => None,
        }
    }

    fn block(&self, arm: Arm) -> Option<&Vec<Stmt>> {
        match (self, arm) {
            (Stmt::If { then_block, .. }, Arm::Then) => Some(then_block),
            (Stmt::If { else_block, .. }, Arm::Else) => Some(else_block),
            (Stmt::While { body, .. }, Arm::Body) => Some(body),
            _ => None,
        }
    }

    fn block_mut(&mut self, arm: Arm) -> Option<&mut Vec<Stmt>> {
        match (self, arm) {
            (Stmt::If { then_block, .. }, Arm::Then) => Some(then_block),
            (Stmt::If { else_block, .. }, Arm::Else) => Some(else_block),
            (Stmt::While { body, .. }, Arm::Body) => Some(body),
            _ => None,
        }
    }
}

/// Which nested block of a compound statement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Arm {
    Then,
    Else,
    Body,
}

/// Location of a block: the chain of `(statement index, arm)` from the top-level body.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BlockPath(pub Vec<(usize, Arm)>);

impl BlockPath {
    pub fn top() -> Self {
        BlockPath(Vec::new())
    }

    pub fn child(&self, index: usize, arm: Arm) -> Self {
        let mut steps = self.0.clone();
        steps.push((index, arm));
        BlockPath(steps)
    }
}

/// Location of a statement (or, for insertion, of a gap before `index`).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StmtPath {
    pub block: BlockPath,
    pub index: usize,
}

impl StmtPath {
    pub fn new(block: BlockPath, index: usize) -> Self {
        StmtPath { block, index }
    }

    pub fn top(index: usize) -> Self {
        StmtPath::new(BlockPath::top(), index)
    }

    /// Image of this path after `count` statements are inserted before
    /// `at`, i.e. every statement at or after `at` in that block moves down.
    pub fn after_insert(&self, at: &StmtPath, count: usize) -> StmtPath {
        self.shift(at, count as isize)
    }

    /// Inverse of [`after_insert`](Self::after_insert). Returns `None` for
    /// the inserted statements themselves.
    pub fn before_insert(&self, at: &StmtPath, count: usize) -> Option<StmtPath> {
        if let Some(i) = self.index_in(&at.block) {
            if i >= at.index && i < at.index + count {
                return None;
            }
        }
        Some(self.shift(&StmtPath::new(at.block.clone(), at.index + count), -(count as isize)))
    }

    /// Index of the statement of `block` that contains (or is) this path.
    fn index_in(&self, block: &BlockPath) -> Option<usize> {
        let depth = block.0.len();
        if self.block.0.len() < depth || self.block.0[..depth] != block.0[..] {
            return None;
        }
        Some(if self.block.0.len() == depth { self.index } else { self.block.0[depth].0 })
    }

    fn shift(&self, at: &StmtPath, delta: isize) -> StmtPath {
        let depth = at.block.0.len();
        let mut out = self.clone();
        match self.index_in(&at.block) {
            Some(i) if i >= at.index => {
                let moved = (i as isize + delta) as usize;
                if self.block.0.len() == depth {
                    out.index = moved;
                } else {
                    out.block.0[depth].0 = moved;
                }
            }
            _ => {}
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Program {
    pub decls: Vec<Decl>,
    pub body: Vec<Stmt>,
}

impl Program {
    pub fn var_names(&self) -> Vec<String> {
        self.decls.iter().map(|d| d.name.clone()).collect()
    }

    pub fn block(&self, path: &BlockPath) -> Option<&Vec<Stmt>> {
        let mut block = &self.body;
        for &(index, arm) in &path.0 {
            block = block.get(index)?.block(arm)?;
        }
        Some(block)
    }

    pub fn block_mut(&mut self, path: &BlockPath) -> Option<&mut Vec<Stmt>> {
        let mut block = &mut self.body;
        for &(index, arm) in &path.0 {
            block = block.get_mut(index)?.block_mut(arm)?;
        }
        Some(block)
    }

    pub fn stmt(&self, path: &StmtPath) -> Option<&Stmt> {
        self.block(&path.block)?.get(path.index)
    }

    pub fn stmt_mut(&mut self, path: &StmtPath) -> Option<&mut Stmt> {
        self.block_mut(&path.block)?.get_mut(path.index)
    }

    /// Insert `stmts` before `at` (which may address the end of a block).
    /// Returns false when the block does not exist.
    pub fn insert(&mut self, at: &StmtPath, stmts: Vec<Stmt>) -> bool {
        match self.block_mut(&at.block) {
            Some(block) if at.index <= block.len() => {
                block.splice(at.index..at.index, stmts);
                true
            }
            _ => false,
        }
    }

    pub fn remove(&mut self, at: &StmtPath, count: usize) -> bool {
        match self.block_mut(&at.block) {
            Some(block) if at.index + count <= block.len() => {
                block.drain(at.index..at.index + count);
                true
            }
            _ => false,
        }
    }

    /// Every statement with its path, in source order.
    pub fn statements(&self) -> Vec<(StmtPath, &Stmt)> {
        let mut out = Vec::new();
        collect_statements(&self.body, &BlockPath::top(), &mut out);
        out
    }

    pub fn assert_path(&self) -> Option<StmtPath> {
        self.statements().into_iter().find(|(_, s)| matches!(s, Stmt::Assert { .. })).map(|(p, _)| p)
    }
}

fn collect_statements<'a>(block: &'a [Stmt], path: &BlockPath, out: &mut Vec<(StmtPath, &'a Stmt)>) {
    for (i, stmt) in block.iter().enumerate() {
        out.push((StmtPath::new(path.clone(), i), stmt));
        match stmt {
            Stmt::If { then_block, else_block, .. } => {
                collect_statements(then_block, &path.child(i, Arm::Then), out);
                collect_statements(else_block, &path.child(i, Arm::Else), out);
            }
            Stmt::While { body, .. } => collect_statements(body, &path.child(i, Arm::Body), out),
            _ => {}
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_shift_round_trips() {
        let at = StmtPath::new(BlockPath::top().child(2, Arm::Body), 1);
        let inside = StmtPath::new(BlockPath::top().child(2, Arm::Body).child(3, Arm::Then), 0);
        let moved = inside.after_insert(&at, 2);
        assert_eq!(moved.block.0[1].0, 5);
        assert_eq!(moved.before_insert(&at, 2), Some(inside.clone()));
        // a sibling before the insertion point is untouched
        let before = StmtPath::new(BlockPath::top().child(2, Arm::Body), 0);
        assert_eq!(before.after_insert(&at, 2), before);
        // inserted statements have no preimage
        let inserted = StmtPath::new(BlockPath::top().child(2, Arm::Body), 2);
        assert_eq!(inserted.before_insert(&at, 2), None);
        // a different block is untouched
        let other = StmtPath::top(7);
        assert_eq!(other.after_insert(&at, 2), other);
    }

    #[test]
    fn simplify_folds_constants_only() {
        let e = Expr::and(Expr::Bool(true), Expr::binary(BinOp::Gt, Expr::Int(3), Expr::Int(1)));
        assert_eq!(e.simplify(), Expr::Bool(true));
        let d = Expr::binary(BinOp::Div, Expr::Int(1), Expr::Int(0));
        assert_eq!(d.simplify(), d);
        let v = Expr::negation(Expr::negation(Expr::var("x")));
        assert_eq!(v.simplify(), Expr::var("x"));
    }

    #[test]
    fn unsafe_division_detection() {
        let safe = Expr::binary(BinOp::Rem, Expr::var("j"), Expr::Int(2));
        let risky = Expr::binary(BinOp::Div, Expr::var("j"), Expr::var("k"));
        assert!(!safe.has_unsafe_division());
        assert!(risky.has_unsafe_division());
    }
}
