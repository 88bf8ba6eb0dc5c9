use super::ast::{BinOp, Expr, ExprKind};

// Binding strength of each node as the grammar sees it.
const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const UNARY: u8 = 3;
const POWER: u8 = 4;
const ATOM: u8 = 5;

fn level(e: &Expr) -> u8 {
    match &e.kind {
        ExprKind::Const(v) if *v < 0.0 || v.is_sign_negative() => UNARY,
        ExprKind::Const(_) | ExprKind::Var(_) | ExprKind::Call(..) => ATOM,
        ExprKind::Neg(_) => UNARY,
        ExprKind::Binary(BinOp::Add | BinOp::Sub, ..) => SUM,
        ExprKind::Binary(BinOp::Mul | BinOp::Div, ..) => PRODUCT,
        ExprKind::Binary(BinOp::Pow, ..) => POWER,
    }
}

/// Prints an expression with the minimum parentheses needed for
/// `parse(format(e)) == e`.
pub fn format(e: &Expr) -> String {
    let mut out = String::new();
    write(e, &mut out);
    out
}

fn write_at(e: &Expr, min: u8, out: &mut String) {
    if level(e) < min {
        out.push('(');
        write(e, out);
        out.push(')');
    } else {
        write(e, out);
    }
}

fn write(e: &Expr, out: &mut String) {
    match &e.kind {
        ExprKind::Const(v) => out.push_str(&format!("{v}")),
        ExprKind::Var(c) => out.push_str(&c.to_string()),
        ExprKind::Neg(inner) => {
            out.push('-');
            write_at(inner, POWER, out);
        }
        ExprKind::Call(f, arg) => {
            out.push_str(f.name());
            out.push('(');
            write(arg, out);
            out.push(')');
        }
        ExprKind::Binary(op, l, r) => {
            let (lmin, rmin, spaced) = match op {
                BinOp::Add | BinOp::Sub => (SUM, PRODUCT, true),
                BinOp::Mul | BinOp::Div => (PRODUCT, UNARY, true),
                BinOp::Pow => (ATOM, UNARY, false),
            };
            write_at(l, lmin, out);
            if spaced {
                out.push(' ');
                out.push_str(op.symbol());
                out.push(' ');
            } else {
                out.push_str(op.symbol());
            }
            write_at(r, rmin, out);
        }
    }
}
