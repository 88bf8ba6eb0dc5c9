//! Multi-time Lagrangians and the metrical multi-time Lagrange space they
//! define together with a temporal metric.

use crate::calculus::{d1, d2, jacobian, t_coords, x_coords, ScalarField, TensorField};
use crate::dsl::Expr;
use crate::error::{Error, Result};
use crate::jet::{Coord, Dims, JetPoint};
use crate::linalg;
use crate::metric::{ExplicitMetric, SpatialMetric, TemporalMetric};
use crate::scalar::Scalar;

#[derive(Clone, Debug)]
pub enum Lagrangian {
    /// Arbitrary scalar expression in `(t, x, v)`.
    Expression(Expr),
    /// `h^{αβ} g_{ij} x^i_α x^j_β + U^{(α)}_{(i)} x^i_α + F`. With `u` and
    /// `f` absent this is the harmonic (pure kinetic) Lagrangian.
    Electrodynamics {
        g: ExplicitMetric,
        /// `U^{(α)}_{(i)}` at `i·p + α`.
        u: Option<Vec<Expr>>,
        f: Option<Expr>,
    },
}

/// `ML^n_p = (J¹(T,M), L)` with its fixed temporal metric.
#[derive(Clone, Debug)]
pub struct MultiTimeSpace {
    dims: Dims,
    lagrangian: Lagrangian,
    h: TemporalMetric,
}

impl MultiTimeSpace {
    pub fn new(dims: Dims, lagrangian: Lagrangian, h: TemporalMetric) -> Result<Self> {
        if h.p() != dims.p {
            return Err(Error::Dimension(format!(
                "temporal metric is {}x{} but p={}",
                h.p(),
                h.p(),
                dims.p
            )));
        }
        match &lagrangian {
            Lagrangian::Expression(e) => e.check_dims(dims)?,
            Lagrangian::Electrodynamics { g, u, f } => {
                if g.n() != dims.n {
                    return Err(Error::Dimension("spatial metric size differs from n".into()));
                }
                if let Some(u) = u {
                    if u.len() != dims.n * dims.p {
                        return Err(Error::Dimension(format!(
                            "U needs n·p = {} entries, got {}",
                            dims.n * dims.p,
                            u.len()
                        )));
                    }
                    for e in u {
                        e.check_dims(dims)?;
                    }
                }
                if let Some(f) = f {
                    f.check_dims(dims)?;
                }
            }
        }
        Ok(MultiTimeSpace { dims, lagrangian, h })
    }

    /// Harmonic Lagrangian `h^{αβ} g_{ij} x^i_α x^j_β`.
    pub fn harmonic(dims: Dims, g: ExplicitMetric, h: TemporalMetric) -> Result<Self> {
        Self::new(
            dims,
            Lagrangian::Electrodynamics { g, u: None, f: None },
            h,
        )
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    pub fn h(&self) -> &TemporalMetric {
        &self.h
    }

    /// True for the electrodynamics form with `g = g(x)`.
    pub fn is_autonomous_electrodynamics(&self) -> bool {
        matches!(&self.lagrangian, Lagrangian::Electrodynamics { g, .. } if g.autonomous())
    }

    pub fn eval_l<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        match &self.lagrangian {
            Lagrangian::Expression(e) => e.eval(pt),
            Lagrangian::Electrodynamics { g, u, f } => {
                let (p, n) = (self.dims.p, self.dims.n);
                let gv = g.g(pt)?;
                let hinv = self.h.inverse(pt)?;
                let mut l = S::zero();
                for a in 0..p {
                    for b in 0..p {
                        let hab = hinv[a * p + b];
                        for i in 0..n {
                            for j in 0..n {
                                l += hab * gv[i * n + j] * pt.vel(i, a) * pt.vel(j, b);
                            }
                        }
                    }
                }
                if let Some(u) = u {
                    for (k, e) in u.iter().enumerate() {
                        l += e.eval(pt)? * pt.v[k];
                    }
                }
                if let Some(f) = f {
                    l += f.eval(pt)?;
                }
                Ok(l)
            }
        }
    }

    /// Spatial metric `g_{ij} = (1/p) h_{αβ} G^{(α)(β)}_{(i)(j)}`. For the
    /// electrodynamics form this is the declared `g`.
    pub fn metric<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        match &self.lagrangian {
            Lagrangian::Electrodynamics { g, .. } => g.g(pt),
            Lagrangian::Expression(_) => {
                let (p, n) = (self.dims.p, self.dims.n);
                let h = self.h.eval(pt)?;
                let w = S::from_f64(0.5 / p as f64);
                let mut g = vec![S::zero(); n * n];
                for i in 0..n {
                    for j in i..n {
                        let mut s = S::zero();
                        for a in 0..p {
                            for b in 0..p {
                                let hab = h[a * p + b];
                                if hab.re() == 0.0 && !S::HAS_DERIVATIVES {
                                    continue;
                                }
                                s += hab * d2(&LagrangianField(self), pt, Coord::V(i, a), Coord::V(j, b))?;
                            }
                        }
                        g[i * n + j] = s * w;
                        g[j * n + i] = s * w;
                    }
                }
                Ok(g)
            }
        }
    }

    /// `(g_{ij}, U^{(α)}_{(i)}, F)` of the electrodynamics form at the
    /// `(t, x)` part of `pt`, concatenated. For an expression Lagrangian
    /// they are read off at zero velocity: `F = L(t,x,0)`,
    /// `U = ∂L/∂x^i_α (t,x,0)`, `g` by h-trace.
    pub fn electro_fields<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        let (p, n) = (self.dims.p, self.dims.n);
        let base = pt.with_zero_velocity();
        let mut out = Vec::with_capacity(n * n + n * p + 1);
        match &self.lagrangian {
            Lagrangian::Electrodynamics { g, u, f } => {
                out.extend(g.g(&base)?);
                match u {
                    Some(u) => {
                        for e in u {
                            out.push(e.eval(&base)?);
                        }
                    }
                    None => out.extend(std::iter::repeat(S::zero()).take(n * p)),
                }
                out.push(match f {
                    Some(f) => f.eval(&base)?,
                    None => S::zero(),
                });
            }
            Lagrangian::Expression(_) => {
                out.extend(self.metric(&base)?);
                for i in 0..n {
                    for a in 0..p {
                        out.push(d1(&LagrangianField(self), &base, Coord::V(i, a))?);
                    }
                }
                out.push(self.eval_l(&base)?);
            }
        }
        Ok(out)
    }
}

impl ScalarField for MultiTimeSpace {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        self.eval_l(pt)
    }
}

impl SpatialMetric for MultiTimeSpace {
    fn n(&self) -> usize {
        self.dims.n
    }
    fn g<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        self.metric(pt)
    }
}

/// The Lagrangian of a space as a [`ScalarField`].
pub struct LagrangianField<'a>(pub &'a MultiTimeSpace);

impl ScalarField for LagrangianField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<S> {
        self.0.eval_l(pt)
    }
}

pub(crate) struct ElectroField<'a>(pub &'a MultiTimeSpace);

impl TensorField for ElectroField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        self.0.electro_fields(pt)
    }
}

/// Electrodynamics data with first partials in `t` and `x`, as needed by the
/// closed-form spray and connection formulas for `p ≥ 2`.
pub(crate) struct ElectroJet<S> {
    pub n: usize,
    pub p: usize,
    pub value: Vec<S>,
    pub dt: Vec<Vec<S>>,
    pub dx: Vec<Vec<S>>,
    pub ginv: Vec<S>,
}

impl<S: Scalar> ElectroJet<S> {
    pub fn new(space: &MultiTimeSpace, pt: &JetPoint<S>) -> Result<Self> {
        let dims = space.dims();
        let mut coords = t_coords(dims);
        coords.extend(x_coords(dims));
        let (value, mut parts) = jacobian(&ElectroField(space), pt, &coords)?;
        let dx = parts.split_off(dims.p);
        let ginv = linalg::invert(&value[..dims.n * dims.n], dims.n)?;
        Ok(ElectroJet {
            n: dims.n,
            p: dims.p,
            value,
            dt: parts,
            dx,
            ginv,
        })
    }

    pub fn dg_dt(&self, a: usize, i: usize, j: usize) -> S {
        self.dt[a][i * self.n + j]
    }
    pub fn u(&self, i: usize, a: usize) -> S {
        self.value[self.n * self.n + i * self.p + a]
    }
    pub fn du_dt(&self, b: usize, i: usize, a: usize) -> S {
        self.dt[b][self.n * self.n + i * self.p + a]
    }
    pub fn du_dx(&self, k: usize, i: usize, a: usize) -> S {
        self.dx[k][self.n * self.n + i * self.p + a]
    }
    pub fn df_dx(&self, k: usize) -> S {
        self.dx[k][self.n * self.n + self.n * self.p]
    }
    /// `U^{(α)}_{(i)j} = ∂U^{(α)}_{(i)}/∂x^j − ∂U^{(α)}_{(j)}/∂x^i`.
    pub fn u_curl(&self, a: usize, i: usize, j: usize) -> S {
        self.du_dx(j, i, a) - self.du_dx(i, j, a)
    }
    /// Generalized Christoffel symbols of `g(t,x)`.
    pub fn gamma(&self) -> Vec<S> {
        let n = self.n;
        let d: Vec<Vec<S>> = (0..n).map(|k| self.dx[k][..n * n].to_vec()).collect();
        crate::metric::christoffel_process(&self.ginv, &d, n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsl::parse;

    fn e(d: Dims, s: &str) -> Expr {
        parse(s, d).unwrap()
    }

    #[test]
    fn electrodynamics_matches_expression() {
        let d = Dims::new(2, 2).unwrap();
        let h = TemporalMetric::from_entries(2, vec![e(d, "1"), e(d, "0"), e(d, "0"), e(d, "1 + t1^2")], (2, 0)).unwrap();
        let g = ExplicitMetric::new(d, vec![e(d, "1 + x2^2"), e(d, "0"), e(d, "0"), e(d, "2")]).unwrap();
        let u = vec![e(d, "t1*x2"), e(d, "0"), e(d, "x1"), e(d, "t2")];
        let f = e(d, "t1 + x1");
        let ed = MultiTimeSpace::new(
            d,
            Lagrangian::Electrodynamics { g, u: Some(u), f: Some(f) },
            h.clone(),
        )
        .unwrap();
        let src = "(1 + x2^2)*(v1_1^2 + v1_2^2/(1 + t1^2)) + 2*(v2_1^2 + v2_2^2/(1 + t1^2)) \
                   + t1*x2*v1_1 + x1*v2_1 + t2*v2_2 + t1 + x1";
        let ex = MultiTimeSpace::new(d, Lagrangian::Expression(e(d, src)), h).unwrap();
        let pt = JetPoint::new(d, vec![0.3, -0.2], vec![0.5, 0.7], vec![0.1, -0.4, 0.9, 0.2]).unwrap();
        assert!((ed.eval_l(&pt).unwrap() - ex.eval_l(&pt).unwrap()).abs() < 1e-14);
        let (a, b) = (ed.metric(&pt).unwrap(), ex.metric(&pt).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13);
        }
        let (a, b) = (ed.electro_fields(&pt).unwrap(), ex.electro_fields(&pt).unwrap());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-13, "{a:?} vs {b:?}");
        }
    }
}
