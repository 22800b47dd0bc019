//! Canonical MiniImp formatting. `parse(pretty_print(p)) == p` for every
//! validated program.

use alloc::format;
use alloc::string::String;

use crate::ast::{Expr, Init, Program, Stmt, UnOp};

pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for decl in &p.decls {
        match decl.init {
            Init::Const(0) => out.push_str(&format!("int {};\n", decl.name)),
            Init::Const(n) => out.push_str(&format!("int {} = {};\n", decl.name, n)),
            Init::Input => out.push_str(&format!("int {} = input();\n", decl.name)),
            Init::Nondet => out.push_str(&format!("int {} = *;\n", decl.name)),
        }
    }
    for stmt in &p.body {
        write_stmt(&mut out, stmt, 0);
    }
    out
}

fn indent(out: &mut String, level: usize) {
    for _ in 0..level {
        out.push_str("    ");
    }
}

fn write_block(out: &mut String, block: &[Stmt], level: usize) {
    out.push_str("{\n");
    for stmt in block {
        write_stmt(out, stmt, level + 1);
    }
    indent(out, level);
    out.push('}');
}

fn write_stmt(out: &mut String, stmt: &Stmt, level: usize) {
    indent(out, level);
    match stmt {
        Stmt::Assign { var, expr } => out.push_str(&format!("{var} = {};\n", expr_to_string(expr))),
        Stmt::Nondet { var } => out.push_str(&format!("{var} = *;\n")),
        Stmt::Input { var } => out.push_str(&format!("{var} = input();\n")),
        Stmt::If { cond, then_block, else_block } => {
            out.push_str(&format!("if ({}) ", expr_to_string(cond)));
            write_block(out, then_block, level);
            if !else_block.is_empty() {
                out.push_str(" else ");
                write_block(out, else_block, level);
            }
            out.push('\n');
        }
        Stmt::While { cond, body } => {
            out.push_str(&format!("while ({}) ", expr_to_string(cond)));
            write_block(out, body, level);
            out.push('\n');
        }
        Stmt::Assert { cond } => out.push_str(&format!("assert({});\n", expr_to_string(cond))),
        Stmt::Skip => out.push_str("skip;\n"),
    }
}

/// Single-line source text of a statement header (used for CFG labels).
pub fn stmt_header(stmt: &Stmt) -> String {
    match stmt {
        Stmt::Assign { var, expr } => format!("{var} = {};", expr_to_string(expr)),
        Stmt::Nondet { var } => format!("{var} = *;"),
        Stmt::Input { var } => format!("{var} = input();"),
        Stmt::If { cond, .. } => format!("if ({})", expr_to_string(cond)),
        Stmt::While { cond, .. } => format!("while ({})", expr_to_string(cond)),
        Stmt::Assert { cond } => format!("assert({});", expr_to_string(cond)),
        Stmt::Skip => "skip;".into(),
    }
}

pub fn expr_to_string(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

const UNARY_PREC: u8 = 7;

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    match e {
        Expr::Int(n) => {
            // a negative literal is a unary-level construct
            if *n < 0 && min_prec > UNARY_PREC {
                out.push_str(&format!("({n})"));
            } else {
                out.push_str(&format!("{n}"));
            }
        }
        Expr::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Expr::Var(v) => out.push_str(v),
        Expr::Unary(op, inner) => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            match inner.as_ref() {
                // `-5` would re-parse as a literal, and so would `--5`
                Expr::Int(_) => {
                    out.push('(');
                    write_expr(out, inner, 0);
                    out.push(')');
                }
                _ => write_expr(out, inner, UNARY_PREC),
            }
        }
        Expr::Binary(op, l, r) => {
            let prec = op.precedence();
            let paren = prec < min_prec;
            if paren {
                out.push('(');
            }
            write_expr(out, l, prec);
            out.push(' ');
            out.push_str(op.symbol());
            out.push(' ');
            write_expr(out, r, prec + 1);
            if paren {
                out.push(')');
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::BinOp;
    use crate::parser::parse;
    use alloc::boxed::Box;

    #[test]
    fn round_trip_minimal() {
        let p = parse("int x = input(); assert(x == x);").unwrap();
        let text = pretty_print(&p);
        assert_eq!(text, "int x = input();\nassert(x == x);\n");
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn nondet_preserved() {
        let p = parse("int x; x = *; assert(x > 0);").unwrap();
        assert!(pretty_print(&p).contains("x = *;"));
    }

    #[test]
    fn negative_literals_and_negation() {
        let p = Program {
            decls: alloc::vec![crate::ast::Decl { name: "x".into(), init: Init::Const(-4) }],
            body: alloc::vec![Stmt::Assert {
                cond: Expr::binary(
                    BinOp::Lt,
                    Expr::Unary(UnOp::Neg, Box::new(Expr::Int(5))),
                    Expr::binary(BinOp::Sub, Expr::var("x"), Expr::Int(-2)),
                ),
            }],
        };
        let text = pretty_print(&p);
        assert_eq!(parse(&text).unwrap(), p, "{text}");
    }

    #[test]
    fn parenthesises_by_precedence() {
        let e = Expr::binary(
            BinOp::Mul,
            Expr::binary(BinOp::Add, Expr::var("a"), Expr::var("b")),
            Expr::binary(BinOp::Sub, Expr::var("c"), Expr::var("d")),
        );
        assert_eq!(expr_to_string(&e), "(a + b) * (c - d)");
        let right = Expr::binary(BinOp::Sub, Expr::var("a"), Expr::binary(BinOp::Sub, Expr::var("b"), Expr::var("c")));
        assert_eq!(expr_to_string(&right), "a - (b - c)");
    }
}
