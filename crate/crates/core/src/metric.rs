//! Temporal metric `h_{αβ}(t)` and spatial metrics `g_{ij}`: inverses,
//! Christoffel symbols and curvature.
//!
//! Layouts (row-major, zero-based):
//! `H^γ_{αβ}` at `(γ·p + α)·p + β`; `H^γ_{μαβ}` at `((γ·p + μ)·p + α)·p + β`;
//! `Γ^l_{jk}` at `(l·n + j)·n + k`; `r^m_{pij}` at `((m·n + p)·n + i)·n + j`.

use crate::calculus::{jacobian, t_coords, x_coords, TensorField};
use crate::dsl::Expr;
use crate::error::{Error, Result};
use crate::jet::{Coord, Dims, JetPoint};
use crate::linalg;
use crate::scalar::Scalar;

/// Semi-Riemannian metric on the temporal manifold.
#[derive(Clone, Debug)]
pub struct TemporalMetric {
    p: usize,
    signature: (usize, usize),
    entries: Option<Vec<Expr>>,
}

impl TemporalMetric {
    /// Constant `diag(+1, …, +1, −1, …, −1)` with the given sign counts.
    pub fn flat(signature: (usize, usize)) -> Result<Self> {
        let p = signature.0 + signature.1;
        if p == 0 {
            return Err(Error::Dimension("temporal metric needs p ≥ 1".into()));
        }
        Ok(TemporalMetric {
            p,
            signature,
            entries: None,
        })
    }

    /// Metric from `p×p` expressions in `t` only. Entries are symmetrized on
    /// evaluation.
    pub fn from_entries(p: usize, entries: Vec<Expr>, signature: (usize, usize)) -> Result<Self> {
        if entries.len() != p * p {
            return Err(Error::Dimension(format!(
                "temporal metric needs {} entries, got {}",
                p * p,
                entries.len()
            )));
        }
        if signature.0 + signature.1 != p {
            return Err(Error::Invalid(format!(
                "signature {signature:?} does not add up to p={p}"
            )));
        }
        for e in &entries {
            if let Some((c, off)) = e.find_var(|c| matches!(c, Coord::T(a) if a < p)) {
                return Err(Error::eval(off, format!("temporal metric may only use t1..t{p}, found {c}")));
            }
        }
        Ok(TemporalMetric {
            p,
            signature,
            entries: Some(entries),
        })
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn is_constant(&self) -> bool {
        self.entries.as_ref().map_or(true, |es| es.iter().all(Expr::is_constant))
    }

    /// `h_{αβ}` at the temporal part of `pt`.
    pub fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        let p = self.p;
        match &self.entries {
            None => Ok((0..p * p)
                .map(|k| {
                    let (a, b) = (k / p, k % p);
                    match (a == b, a < self.signature.0) {
                        (false, _) => S::zero(),
                        (true, true) => S::one(),
                        (true, false) => -S::one(),
                    }
                })
                .collect()),
            Some(es) => {
                let raw: Vec<S> = es.iter().map(|e| e.eval(pt)).collect::<Result<_>>()?;
                let mut out = raw.clone();
                for a in 0..p {
                    for b in a + 1..p {
                        let m = (raw[a * p + b] + raw[b * p + a]).scale(0.5);
                        out[a * p + b] = m;
                        out[b * p + a] = m;
                    }
                }
                Ok(out)
            }
        }
    }

    /// Largest `|h_{αβ} − h_{βα}|` of the raw entries at `pt`.
    pub fn asymmetry(&self, pt: &JetPoint) -> Result<f64> {
        let Some(es) = &self.entries else { return Ok(0.0) };
        let raw: Vec<f64> = es.iter().map(|e| e.eval(pt)).collect::<Result<_>>()?;
        Ok(linalg::symmetrize(&raw, self.p).1)
    }

    /// Checks nondegeneracy and the declared signature at `pt`.
    pub fn validate(&self, pt: &JetPoint) -> Result<()> {
        let h = self.eval(pt)?;
        linalg::check_nondegenerate(&h, self.p)?;
        let sig = linalg::signature(&h, self.p);
        if sig != self.signature {
            return Err(Error::Invalid(format!(
                "temporal metric has signature {sig:?} at t={:?}, declared {:?}",
                pt.t, self.signature
            )));
        }
        Ok(())
    }

    pub fn inverse<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        linalg::invert(&self.eval(pt)?, self.p)
    }
}

impl TensorField for TemporalMetric {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        TemporalMetric::eval(self, pt)
    }
}

/// `h^{αβ}` of an explicit matrix.
pub fn invert_metric(m: &[f64], dim: usize) -> Result<Vec<f64>> {
    linalg::invert(m, dim)
}

/// Christoffel process `½ m^{lq}(∂_k m_{jq} + ∂_j m_{kq} − ∂_q m_{jk})`.
/// `d[c]` holds the derivative of the metric along the `c`-th direction,
/// where direction `c` is identified with index `c` of the metric.
pub(crate) fn christoffel_process<S: Scalar>(inv: &[S], d: &[Vec<S>], dim: usize) -> Vec<S> {
    let mut out = vec![S::zero(); dim * dim * dim];
    for l in 0..dim {
        for j in 0..dim {
            for k in j..dim {
                let mut s = S::zero();
                for q in 0..dim {
                    let inner = d[k][j * dim + q] + d[j][k * dim + q] - d[q][j * dim + k];
                    s += inv[l * dim + q] * inner;
                }
                let s = s.scale(0.5);
                out[(l * dim + j) * dim + k] = s;
                out[(l * dim + k) * dim + j] = s;
            }
        }
    }
    out
}

/// Riemann tensor of a connection `c` given its partials `dc[q] = ∂_q c`:
/// `∂_j c^m_{pi} − ∂_i c^m_{pj} + c^k_{pi} c^m_{kj} − c^k_{pj} c^m_{ki}`.
pub(crate) fn riemann<S: Scalar>(c: &[S], dc: &[Vec<S>], dim: usize) -> Vec<S> {
    let idx = |a: usize, b: usize, e: usize| (a * dim + b) * dim + e;
    let mut out = vec![S::zero(); dim.pow(4)];
    for m in 0..dim {
        for p in 0..dim {
            for i in 0..dim {
                for j in i + 1..dim {
                    let mut s = dc[j][idx(m, p, i)] - dc[i][idx(m, p, j)];
                    for k in 0..dim {
                        s += c[idx(k, p, i)] * c[idx(m, k, j)] - c[idx(k, p, j)] * c[idx(m, k, i)];
                    }
                    out[((m * dim + p) * dim + i) * dim + j] = s;
                    out[((m * dim + p) * dim + j) * dim + i] = -s;
                }
            }
        }
    }
    out
}

/// `H^γ_{αβ}` of the temporal metric.
pub fn h_christoffel<S: Scalar>(h: &TemporalMetric, pt: &JetPoint<S>) -> Result<Vec<S>> {
    let (hv, dh) = jacobian(h, pt, &t_coords(pt.dims()))?;
    let inv = linalg::invert(&hv, h.p)?;
    Ok(christoffel_process(&inv, &dh, h.p))
}

struct HChristoffelField<'a>(&'a TemporalMetric);

impl TensorField for HChristoffelField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        h_christoffel(self.0, pt)
    }
}

/// `H^γ_{μαβ} = ∂_β H^γ_{μα} − ∂_α H^γ_{μβ} + H^η_{μα}H^γ_{ηβ} − H^η_{μβ}H^γ_{ηα}`.
pub fn h_curvature<S: Scalar>(h: &TemporalMetric, pt: &JetPoint<S>) -> Result<Vec<S>> {
    let (c, dc) = jacobian(&HChristoffelField(h), pt, &t_coords(pt.dims()))?;
    Ok(riemann(&c, &dc, h.p))
}

/// A spatial metric `g_{ij}` on the jet bundle (`n×n`, row-major).
pub trait SpatialMetric: Sync {
    fn n(&self) -> usize;
    fn g<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>>;
}

impl<M: SpatialMetric + ?Sized> SpatialMetric for &M {
    fn n(&self) -> usize {
        (**self).n()
    }
    fn g<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        (**self).g(pt)
    }
}

/// Adapts a spatial metric to a [`TensorField`].
pub struct MetricField<'a, M: ?Sized>(pub &'a M);

impl<M: SpatialMetric + ?Sized> TensorField for MetricField<'_, M> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        self.0.g(pt)
    }
}

/// Spatial metric from `n×n` expressions, symmetrized on evaluation.
#[derive(Clone, Debug)]
pub struct ExplicitMetric {
    n: usize,
    entries: Vec<Expr>,
}

impl ExplicitMetric {
    pub fn new(dims: Dims, entries: Vec<Expr>) -> Result<Self> {
        if entries.len() != dims.n * dims.n {
            return Err(Error::Dimension(format!(
                "spatial metric needs {} entries, got {}",
                dims.n * dims.n,
                entries.len()
            )));
        }
        for e in &entries {
            e.check_dims(dims)?;
        }
        Ok(ExplicitMetric { n: dims.n, entries })
    }

    pub fn entries(&self) -> &[Expr] {
        &self.entries
    }

    /// True when no entry mentions a velocity.
    pub fn velocity_free(&self) -> bool {
        self.entries.iter().all(|e| e.find_var(|c| !matches!(c, Coord::V(..))).is_none())
    }

    /// True when entries depend on `x` only.
    pub fn autonomous(&self) -> bool {
        self.entries.iter().all(|e| e.find_var(|c| matches!(c, Coord::X(_))).is_none())
    }

    pub fn asymmetry(&self, pt: &JetPoint) -> Result<f64> {
        let raw: Vec<f64> = self.entries.iter().map(|e| e.eval(pt)).collect::<Result<_>>()?;
        Ok(linalg::symmetrize(&raw, self.n).1)
    }
}

impl SpatialMetric for ExplicitMetric {
    fn n(&self) -> usize {
        self.n
    }

    fn g<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        let n = self.n;
        let raw: Vec<S> = self.entries.iter().map(|e| e.eval(pt)).collect::<Result<_>>()?;
        let mut out = raw.clone();
        for i in 0..n {
            for j in i + 1..n {
                let m = (raw[i * n + j] + raw[j * n + i]).scale(0.5);
                out[i * n + j] = m;
                out[j * n + i] = m;
            }
        }
        Ok(out)
    }
}

/// Generalized Christoffel symbols `Γ^l_{jk}` from the `x`-partials of `g`.
pub fn g_christoffel<M: SpatialMetric + ?Sized, S: Scalar>(g: &M, pt: &JetPoint<S>) -> Result<Vec<S>> {
    let (gv, dg) = jacobian(&MetricField(g), pt, &x_coords(pt.dims()))?;
    let inv = linalg::invert(&gv, g.n())?;
    Ok(christoffel_process(&inv, &dg, g.n()))
}

pub(crate) struct GChristoffelField<'a, M: ?Sized>(pub &'a M);

impl<M: SpatialMetric + ?Sized> TensorField for GChristoffelField<'_, M> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        g_christoffel(self.0, pt)
    }
}

/// `r^m_{pij} = ∂_j Γ^m_{pi} − ∂_i Γ^m_{pj} + Γ^k_{pi}Γ^m_{kj} − Γ^k_{pj}Γ^m_{ki}`.
pub fn g_curvature<M: SpatialMetric + ?Sized, S: Scalar>(g: &M, pt: &JetPoint<S>) -> Result<Vec<S>> {
    let (c, dc) = jacobian(&GChristoffelField(g), pt, &x_coords(pt.dims()))?;
    Ok(riemann(&c, &dc, g.n()))
}
