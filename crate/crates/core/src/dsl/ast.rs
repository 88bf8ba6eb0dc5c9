use std::fmt;

use crate::error::{Error, Result};
use crate::jet::{Coord, Dims, JetPoint};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
    Sinh,
    Cosh,
    Abs,
}

impl Func {
    pub const ALL: [Func; 9] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Exp,
        Func::Log,
        Func::Sqrt,
        Func::Sinh,
        Func::Cosh,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Clone, Debug)]
pub enum ExprKind {
    /// Non-negative literal; negation is always an explicit `Neg` node.
    Const(f64),
    Var(Coord),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Expression node. `offset` is the byte offset of the node in its source
/// and is ignored by equality, which is structural.
#[derive(Clone, Debug)]
pub struct Expr {
    pub kind: ExprKind,
    pub offset: usize,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (ExprKind::Const(a), ExprKind::Const(b)) => a.to_bits() == b.to_bits(),
            (ExprKind::Var(a), ExprKind::Var(b)) => a == b,
            (ExprKind::Neg(a), ExprKind::Neg(b)) => a == b,
            (ExprKind::Binary(o1, l1, r1), ExprKind::Binary(o2, l2, r2)) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (ExprKind::Call(f1, a1), ExprKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&super::format(self))
    }
}

impl Expr {
    pub fn constant(value: f64) -> Expr {
        if value < 0.0 {
            return Expr::neg(Expr::constant(-value));
        }
        Expr {
            kind: ExprKind::Const(value),
            offset: 0,
        }
    }

    pub fn var(c: Coord) -> Expr {
        Expr {
            kind: ExprKind::Var(c),
            offset: 0,
        }
    }

    pub fn neg(e: Expr) -> Expr {
        Expr {
            kind: ExprKind::Neg(Box::new(e)),
            offset: 0,
        }
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr {
            kind: ExprKind::Binary(op, Box::new(l), Box::new(r)),
            offset: 0,
        }
    }

    pub fn call(func: Func, arg: Expr) -> Expr {
        Expr {
            kind: ExprKind::Call(func, Box::new(arg)),
            offset: 0,
        }
    }

    pub fn is_zero_literal(&self) -> bool {
        matches!(self.kind, ExprKind::Const(c) if c == 0.0)
    }

    /// True when no variable occurs in the subtree.
    pub fn is_constant(&self) -> bool {
        match &self.kind {
            ExprKind::Const(_) => true,
            ExprKind::Var(_) => false,
            ExprKind::Neg(a) | ExprKind::Call(_, a) => a.is_constant(),
            ExprKind::Binary(_, l, r) => l.is_constant() && r.is_constant(),
        }
    }

    /// Calls `f` on every variable occurring in the subtree.
    pub fn visit_vars(&self, f: &mut impl FnMut(Coord, usize)) {
        match &self.kind {
            ExprKind::Const(_) => {}
            ExprKind::Var(c) => f(*c, self.offset),
            ExprKind::Neg(a) | ExprKind::Call(_, a) => a.visit_vars(f),
            ExprKind::Binary(_, l, r) => {
                l.visit_vars(f);
                r.visit_vars(f);
            }
        }
    }

    /// First variable not accepted by `allowed`, with its offset.
    pub fn find_var(&self, allowed: impl Fn(Coord) -> bool) -> Option<(Coord, usize)> {
        let mut bad = None;
        self.visit_vars(&mut |c, off| {
            if bad.is_none() && !allowed(c) {
                bad = Some((c, off));
            }
        });
        bad
    }

    pub fn check_dims(&self, dims: Dims) -> Result<()> {
        match self.find_var(|c| dims.check(c).is_ok()) {
            Some((c, off)) => Err(Error::eval(off, format!("variable {c} out of range for {dims:?}"))),
            None => Ok(()),
        }
    }

    /// Evaluates at a jet point over any scalar kind. Domain violations
    /// report the byte offset of the offending node.
    pub fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        let r = self.eval_node(pt)?;
        if !r.re().is_finite() {
            return Err(Error::eval(self.offset, "non-finite result"));
        }
        Ok(r)
    }

    fn eval_node<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        match &self.kind {
            ExprKind::Const(c) => Ok(S::from_f64(*c)),
            ExprKind::Var(c) => {
                let d = pt.dims();
                d.check(*c)
                    .map_err(|_| Error::eval(self.offset, format!("variable {c} out of range for {d:?}")))?;
                Ok(pt.get(*c))
            }
            ExprKind::Neg(a) => Ok(-a.eval_node(pt)?),
            ExprKind::Binary(op, l, r) => {
                let a = l.eval_node(pt)?;
                match op {
                    BinOp::Add => Ok(a + r.eval_node(pt)?),
                    BinOp::Sub => Ok(a - r.eval_node(pt)?),
                    BinOp::Mul => Ok(a * r.eval_node(pt)?),
                    BinOp::Div => {
                        let b = r.eval_node(pt)?;
                        if b.re() == 0.0 {
                            return Err(Error::eval(self.offset, "division by zero"));
                        }
                        Ok(a / b)
                    }
                    BinOp::Pow => self.eval_pow(a, r, pt),
                }
            }
            ExprKind::Call(func, arg) => {
                let a = arg.eval_node(pt)?;
                let x = a.re();
                let fail = |msg: &str| Err(Error::eval(self.offset, format!("{}: {msg}", func.name())));
                match func {
                    Func::Sin => Ok(a.sin()),
                    Func::Cos => Ok(a.cos()),
                    Func::Tan => {
                        if x.cos() == 0.0 {
                            return fail("pole");
                        }
                        Ok(a.tan())
                    }
                    Func::Exp => Ok(a.exp()),
                    Func::Log => {
                        if x <= 0.0 {
                            return fail("non-positive argument");
                        }
                        Ok(a.ln())
                    }
                    Func::Sqrt => {
                        if x < 0.0 {
                            return fail("negative argument");
                        }
                        if x == 0.0 && S::HAS_DERIVATIVES {
                            return fail("not differentiable at 0");
                        }
                        Ok(a.sqrt())
                    }
                    Func::Sinh => Ok(a.sinh()),
                    Func::Cosh => Ok(a.cosh()),
                    Func::Abs => {
                        if x == 0.0 && S::HAS_DERIVATIVES {
                            return fail("not differentiable at 0");
                        }
                        Ok(a.abs())
                    }
                }
            }
        }
    }

    fn eval_pow<S: Scalar>(&self, base: S, exponent: &Expr, pt: &JetPoint<S>) -> Result<S> {
        let b = base.re();
        if exponent.is_constant() {
            let c = exponent.eval_node(pt)?.re();
            if c.fract() == 0.0 && c.abs() <= i32::MAX as f64 {
                if b == 0.0 && c < 0.0 {
                    return Err(Error::eval(self.offset, "zero to a negative power"));
                }
                return Ok(base.powi(c as i32));
            }
            if b < 0.0 {
                return Err(Error::eval(self.offset, "negative base with fractional exponent"));
            }
            if b == 0.0 && (S::HAS_DERIVATIVES || c < 0.0) {
                return Err(Error::eval(self.offset, "power not differentiable at 0"));
            }
            return Ok(base.powf(c));
        }
        if b <= 0.0 {
            return Err(Error::eval(
                self.offset,
                "variable exponent needs a positive base",
            ));
        }
        let e = exponent.eval_node(pt)?;
        Ok((e * base.ln()).exp())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;
    use crate::scalar::Dual;

    fn pt(dims: Dims, t: &[f64], x: &[f64], v: &[f64]) -> JetPoint {
        JetPoint::new(dims, t.to_vec(), x.to_vec(), v.to_vec()).unwrap()
    }

    #[test]
    fn evaluates_examples() {
        let d = Dims::new(1, 1).unwrap();
        let e = parse("7", d).unwrap();
        assert_eq!(e.eval(&pt(d, &[3.0], &[1.0], &[2.0])).unwrap(), 7.0);
        let e = parse("v1_1^2", d).unwrap();
        assert_eq!(e.eval(&pt(d, &[0.0], &[0.0], &[-2.0])).unwrap(), 4.0);
        let e = parse("exp(t1)*x1", d).unwrap();
        assert_eq!(e.eval(&pt(d, &[0.0], &[5.0], &[0.0])).unwrap(), 5.0);
    }

    #[test]
    fn sin_squared_example() {
        let d = Dims::new(2, 1).unwrap();
        let e = parse("sin(t1)^2 * v1_2", d).unwrap();
        let p = pt(d, &[std::f64::consts::FRAC_PI_2, 0.0], &[0.0], &[0.0, 3.0]);
        // Interpreter oracle: evaluate the same formula directly.
        let direct = p.t[0].sin().powi(2) * p.v[1];
        let got = e.eval(&p).unwrap();
        assert!((got - 3.0).abs() < 1e-15);
        assert_eq!(got, direct);
    }

    #[test]
    fn domain_errors_carry_offsets() {
        let d = Dims::new(1, 1).unwrap();
        let p = pt(d, &[0.0], &[-1.0], &[0.0]);
        let e = parse("1 + log(x1)", d).unwrap();
        assert!(matches!(e.eval(&p), Err(Error::Eval { offset: 4, .. })));
        let e = parse("2 / (x1 + 1)", d).unwrap();
        assert!(matches!(e.eval(&p), Err(Error::Eval { offset: 2, .. })));
    }

    #[test]
    fn sqrt_at_zero_is_fine_but_not_differentiable() {
        let d = Dims::new(1, 1).unwrap();
        let e = parse("sqrt(x1)", d).unwrap();
        let p = pt(d, &[0.0], &[0.0], &[0.0]);
        assert_eq!(e.eval(&p).unwrap(), 0.0);
        assert!(e.eval(&p.seeded(Coord::X(0))).is_err());
    }

    #[test]
    fn power_rules() {
        let d = Dims::new(1, 1).unwrap();
        let p = pt(d, &[2.0], &[-3.0], &[0.0]);
        assert_eq!(parse("x1^3", d).unwrap().eval(&p).unwrap(), -27.0);
        assert!(parse("x1^0.5", d).unwrap().eval(&p).is_err());
        let e = parse("t1^x1", d).unwrap();
        assert!((e.eval(&p).unwrap() - 0.125).abs() < 1e-15);
        let dp = p.seeded(Coord::T(0));
        let r: Dual<f64> = e.eval(&dp).unwrap();
        // d/dt t^x = x t^(x-1)
        assert!((r.eps - (-3.0 * 2f64.powf(-4.0))).abs() < 1e-14);
    }
}
