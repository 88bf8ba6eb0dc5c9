//! Forward-mode partial derivatives of fields on the jet bundle, with a
//! central finite-difference cross-check.
//!
//! Fields are written once against [`Scalar`]; a derivative is one evaluation
//! on a lifted point. Nesting the lift differentiates fields that are
//! themselves built from derivatives.

use serde::Serialize;

use crate::dsl::Expr;
use crate::error::Result;
use crate::jet::{Coord, Dims, JetPoint};
use crate::scalar::{Dual, HyperDual, Scalar};

/// A real-valued field on `J¹(T,M)`, evaluable over any scalar kind.
pub trait ScalarField: Sync {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S>;
}

/// A field with several components, evaluated together.
pub trait TensorField: Sync {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>>;
}

impl ScalarField for Expr {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        Expr::eval(self, pt)
    }
}

impl TensorField for Expr {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        Ok(vec![Expr::eval(self, pt)?])
    }
}

impl<F: ScalarField + ?Sized> ScalarField for &F {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        (**self).eval(pt)
    }
}

impl<F: TensorField + ?Sized> TensorField for &F {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        (**self).eval(pt)
    }
}

/// `∂f/∂c` at `pt`.
pub fn d1<F: ScalarField + ?Sized, S: Scalar>(f: &F, pt: &JetPoint<S>, c: Coord) -> Result<S> {
    Ok(f.eval(&pt.seeded(c))?.eps)
}

/// `∂²f/∂a∂b` at `pt`, from one hyper-dual evaluation.
pub fn d2<F: ScalarField + ?Sized, S: Scalar>(
    f: &F,
    pt: &JetPoint<S>,
    a: Coord,
    b: Coord,
) -> Result<S> {
    Ok(f.eval(&seed2(pt, a, b))?.eps.eps)
}

fn seed2<S: Scalar>(pt: &JetPoint<S>, a: Coord, b: Coord) -> JetPoint<HyperDual<S>> {
    let mut out = pt.map(|s| Dual::constant(Dual::constant(s)));
    let mut x = out.get(a);
    x.re.eps = S::one();
    out.set(a, x);
    let mut y = out.get(b);
    y.eps.re = S::one();
    out.set(b, y);
    out
}

/// Partials of `f` along each of `coords`.
pub fn gradient<F: ScalarField + ?Sized, S: Scalar>(
    f: &F,
    pt: &JetPoint<S>,
    coords: &[Coord],
) -> Result<Vec<S>> {
    coords.iter().map(|&c| d1(f, pt, c)).collect()
}

/// Square Hessian over `coords`, row-major. The upper triangle is computed
/// and mirrored.
pub fn hessian<F: ScalarField + ?Sized, S: Scalar>(
    f: &F,
    pt: &JetPoint<S>,
    coords: &[Coord],
) -> Result<Vec<S>> {
    let m = coords.len();
    let mut out = vec![S::zero(); m * m];
    for a in 0..m {
        for b in a..m {
            let v = d2(f, pt, coords[a], coords[b])?;
            out[a * m + b] = v;
            out[b * m + a] = v;
        }
    }
    Ok(out)
}

/// Componentwise `∂F/∂c`.
pub fn partial<F: TensorField + ?Sized, S: Scalar>(
    f: &F,
    pt: &JetPoint<S>,
    c: Coord,
) -> Result<Vec<S>> {
    Ok(f.eval(&pt.seeded(c))?.into_iter().map(|d| d.eps).collect())
}

/// Value and the partials along each of `coords`: `(F, [∂F/∂c for c in coords])`.
pub fn jacobian<F: TensorField + ?Sized, S: Scalar>(
    f: &F,
    pt: &JetPoint<S>,
    coords: &[Coord],
) -> Result<(Vec<S>, Vec<Vec<S>>)> {
    let mut value = None;
    let mut parts = Vec::with_capacity(coords.len());
    for &c in coords {
        let r = f.eval(&pt.seeded(c))?;
        if value.is_none() {
            value = Some(r.iter().map(|d| d.re).collect());
        }
        parts.push(r.into_iter().map(|d| d.eps).collect());
    }
    let value = match value {
        Some(v) => v,
        None => f.eval(pt)?,
    };
    Ok((value, parts))
}

/// Temporal, spatial and vertical coordinate lists for `dims`.
pub fn t_coords(dims: Dims) -> Vec<Coord> {
    (0..dims.p).map(Coord::T).collect()
}

pub fn x_coords(dims: Dims) -> Vec<Coord> {
    (0..dims.n).map(Coord::X).collect()
}

pub fn v_coords(dims: Dims) -> Vec<Coord> {
    dims.coords().filter(|c| matches!(c, Coord::V(..))).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiffConfig {
    pub fd_step_1: f64,
    pub fd_step_2: f64,
    pub crosscheck_tol: f64,
    /// Absolute discrepancy below which a partial always passes.
    pub abs_floor: f64,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            fd_step_1: 6e-6,
            fd_step_2: 2e-4,
            crosscheck_tol: 1e-5,
            abs_floor: 1e-8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckEntry {
    pub wrt: Vec<String>,
    pub forward: f64,
    pub finite_difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckReport {
    /// Largest `|ad − fd|` over first partials, relative to the largest
    /// first partial (floored at 1e-3).
    pub first_order: f64,
    pub second_order: f64,
    /// Largest `|∂a∂b f − ∂b∂a f|`, relative like `second_order`.
    pub schwartz: f64,
    pub passed: bool,
    pub failures: Vec<CrosscheckEntry>,
}

impl CrosscheckReport {
    pub fn max_relative(&self) -> f64 {
        self.first_order.max(self.second_order)
    }
}

const SCALE_FLOOR: f64 = 1e-3;

/// Compares every first and second forward-mode partial of `f` at `pt`
/// against central finite differences.
pub fn fd_crosscheck<F: ScalarField + ?Sized>(
    f: &F,
    pt: &JetPoint,
    cfg: &DiffConfig,
) -> Result<CrosscheckReport> {
    let coords: Vec<Coord> = pt.dims().coords().collect();
    let m = coords.len();
    let step = |base: f64, c: Coord| base * pt.get(c).abs().max(1.0);
    let at = |shifts: &[(Coord, f64)]| -> Result<f64> {
        let mut q = pt.clone();
        for &(c, dh) in shifts {
            q.set(c, q.get(c) + dh);
        }
        f.eval(&q)
    };

    let f0 = f.eval(pt)?;
    let mut first = Vec::with_capacity(m);
    for &c in &coords {
        let h = step(cfg.fd_step_1, c);
        let fd = (at(&[(c, h)])? - at(&[(c, -h)])?) / (2.0 * h);
        first.push((vec![c], d1(f, pt, c)?, fd));
    }

    let mut second = Vec::with_capacity(m * (m + 1) / 2);
    let mut schwartz = Vec::with_capacity(m * (m + 1) / 2);
    for a in 0..m {
        for b in a..m {
            let (ca, cb) = (coords[a], coords[b]);
            let ad = d2(f, pt, ca, cb)?;
            let (ha, hb) = (step(cfg.fd_step_2, ca), step(cfg.fd_step_2, cb));
            let fd = if a == b {
                (at(&[(ca, ha)])? - 2.0 * f0 + at(&[(ca, -ha)])?) / (ha * ha)
            } else {
                (at(&[(ca, ha), (cb, hb)])? - at(&[(ca, ha), (cb, -hb)])?
                    - at(&[(ca, -ha), (cb, hb)])?
                    + at(&[(ca, -ha), (cb, -hb)])?)
                    / (4.0 * ha * hb)
            };
            if a != b {
                schwartz.push((ad - d2(f, pt, cb, ca)?).abs());
            }
            second.push((vec![ca, cb], ad, fd));
        }
    }

    let mut failures = Vec::new();
    let mut summarize = |entries: &[(Vec<Coord>, f64, f64)]| -> (f64, f64) {
        let scale = entries
            .iter()
            .fold(0.0f64, |s, e| s.max(e.1.abs()))
            .max(SCALE_FLOOR);
        let mut worst = 0.0f64;
        for (wrt, ad, fd) in entries {
            let diff = (ad - fd).abs();
            if !(diff <= cfg.abs_floor.max(cfg.crosscheck_tol * scale)) {
                failures.push(CrosscheckEntry {
                    wrt: wrt.iter().map(|c| c.to_string()).collect(),
                    forward: *ad,
                    finite_difference: *fd,
                });
            }
            worst = worst.max(diff / scale);
        }
        (worst, scale)
    };
    let (first_order, _) = summarize(&first);
    let (second_order, scale2) = summarize(&second);
    let schwartz = schwartz.into_iter().fold(0.0f64, f64::max) / scale2;

    Ok(CrosscheckReport {
        first_order,
        second_order,
        schwartz,
        passed: failures.is_empty(),
        failures,
    })
}
