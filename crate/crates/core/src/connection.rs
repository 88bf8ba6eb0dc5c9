//! Canonical spray `(H, G)` and nonlinear connection `Γ = (M, N)` of a
//! multi-time Lagrange space, adapted-frame derivatives, the Euler-Lagrange
//! residual of maps and the Sasakian-like metric.
//!
//! Layouts: `M^{(i)}_{(α)β}` and `H^{(i)}_{(α)β}` at `(i·p + α)·p + β`,
//! `N^{(i)}_{(α)j}` at `(i·p + α)·n + j`, `G^{(l)}_{(α)β}` at `(l·p + α)·p + β`.

use serde::Serialize;

use crate::calculus::{d1, d2, jacobian, partial, ScalarField, TensorField};
use crate::dsl::Expr;
use crate::error::{Error, Result};
use crate::jet::{slots, Coord, DTensor, Dims, JetPoint, SlotKind};
use crate::lagrangian::{ElectroJet, Lagrangian, LagrangianField, MultiTimeSpace};
use crate::linalg;
use crate::metric::{g_christoffel, h_christoffel, SpatialMetric, TemporalMetric};
use crate::regularity::reassembly_defect;
use crate::scalar::Scalar;

/// The halved entities `𝒮, ℋ, 𝒥, 𝒢` at a point.
#[derive(Clone, Debug)]
pub(crate) struct SprayCore<S> {
    pub s: Vec<S>,
    pub h: Vec<S>,
    pub j: Vec<S>,
    pub gc: Vec<S>,
}

/// `H^γ_{αγ}` for each `α`.
fn h_trace<S: Scalar>(hc: &[S], p: usize) -> Vec<S> {
    (0..p)
        .map(|a| (0..p).fold(S::zero(), |s, c| s + hc[(c * p + a) * p + c]))
        .collect()
}

pub(crate) fn spray_core<S: Scalar>(space: &MultiTimeSpace, pt: &JetPoint<S>) -> Result<SprayCore<S>> {
    let dims = space.dims();
    let (p, n) = (dims.p, dims.n);
    let lf = LagrangianField(space);
    let ginv = linalg::invert(&space.metric(pt)?, n)?;
    let hinv = space.h().inverse(pt)?;
    let hc = h_christoffel(space.h(), pt)?;
    let tr = h_trace(&hc, p);

    let mut a = vec![S::zero(); n];
    let mut b = vec![S::zero(); n];
    for i in 0..n {
        a[i] = -d1(&lf, pt, Coord::X(i))?;
        for al in 0..p {
            for j in 0..n {
                a[i] += d2(&lf, pt, Coord::X(j), Coord::V(i, al))? * pt.vel(j, al);
            }
            b[i] += d2(&lf, pt, Coord::T(al), Coord::V(i, al))?;
            if !tr[al].is_exact_zero() {
                b[i] += d1(&lf, pt, Coord::V(i, al))? * tr[al];
            }
        }
    }
    let mut out = SprayCore {
        s: vec![S::zero(); n],
        h: vec![S::zero(); n],
        j: vec![S::zero(); n],
        gc: vec![S::zero(); n],
    };
    for k in 0..n {
        for i in 0..n {
            let w = ginv[k * n + i].scale(0.25);
            out.s[k] += w * a[i];
            out.h[k] += w * b[i];
        }
        for al in 0..p {
            for be in 0..p {
                for c in 0..p {
                    out.j[k] += hinv[al * p + be] * hc[(c * p + al) * p + be] * pt.vel(k, c);
                }
            }
        }
        out.j[k] = out.j[k].scale(0.5);
        out.gc[k] = out.s[k] + out.h[k] + out.j[k];
    }
    Ok(out)
}

/// `𝒢` as a field, so that it can be differentiated.
struct SprayField<'a>(&'a MultiTimeSpace);

impl TensorField for SprayField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        Ok(spray_core(self.0, pt)?.gc)
    }
}

/// `𝒯^l = (g^{li}/4)[2h^{αβ}∂_α g_{ij} x^j_β + U^{(α)}_{(i)j} x^j_α
/// + ∂_α U^{(α)}_{(i)} + U^{(α)}_{(i)} H^γ_{αγ} − ∂_i F]`.
fn t_entity<S: Scalar>(ej: &ElectroJet<S>, hinv: &[S], tr: &[S], pt: &JetPoint<S>) -> Vec<S> {
    let (p, n) = (ej.p, ej.n);
    let mut br = vec![S::zero(); n];
    for (i, bi) in br.iter_mut().enumerate() {
        let mut s = -ej.df_dx(i);
        for a in 0..p {
            s += ej.du_dt(a, i, a) + ej.u(i, a) * tr[a];
            for j in 0..n {
                s += ej.u_curl(a, i, j) * pt.vel(j, a);
                for b in 0..p {
                    s += (hinv[a * p + b] * ej.dg_dt(a, i, j) * pt.vel(j, b)).scale(2.0);
                }
            }
        }
        *bi = s;
    }
    (0..n)
        .map(|l| (0..n).fold(S::zero(), |s, i| s + ej.ginv[l * n + i] * br[i]).scale(0.25))
        .collect()
}

/// Spray coefficients at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SprayPack {
    pub s: Vec<f64>,
    pub hc: Vec<f64>,
    pub j: Vec<f64>,
    pub gc: Vec<f64>,
    /// `G^{(l)}_{(α)β}`.
    pub g_spatial: DTensor,
    /// `H^{(i)}_{(α)β} = −½ H^γ_{αβ} x^i_γ`.
    pub h_temporal: DTensor,
    /// `T^{(l)}_{(α)β} = (h_{αβ}/p) 𝒯^l`, for `p ≥ 2`.
    pub t_tensor: Option<DTensor>,
}

impl SprayPack {
    /// Largest `|𝒢^l − h^{αβ} G^{(l)}_{(α)β}|`.
    pub fn h_trace_defect(&self, hinv: &[f64]) -> f64 {
        let p = self.g_spatial.slots[1].extent;
        self.gc
            .iter()
            .enumerate()
            .map(|(l, g)| {
                let mut tr = 0.0;
                for a in 0..p {
                    for b in 0..p {
                        tr += hinv[a * p + b] * self.g_spatial.data[(l * p + a) * p + b];
                    }
                }
                (g - tr).abs()
            })
            .fold(0.0, f64::max)
    }
}

fn temporal_spray<S: Scalar>(hc: &[S], pt: &JetPoint<S>, dims: Dims, k: f64) -> Vec<S> {
    let (p, n) = (dims.p, dims.n);
    let mut out = vec![S::zero(); n * p * p];
    for i in 0..n {
        for a in 0..p {
            for b in 0..p {
                let mut s = S::zero();
                for c in 0..p {
                    s += hc[(c * p + a) * p + b] * pt.vel(i, c);
                }
                out[(i * p + a) * p + b] = s.scale(k);
            }
        }
    }
    out
}

/// Spray entities at `pt`. For `p ≥ 2` the spatial spray is assembled from
/// the electrodynamics data as `½Γ^l_{jk}x^j_α x^k_β + (h_{αβ}/p)𝒯^l`,
/// independently of `𝒢`; for `p = 1` it is `h₁₁𝒢^l`.
pub fn spray_entities(space: &MultiTimeSpace, pt: &JetPoint) -> Result<SprayPack> {
    let dims = space.dims();
    let (p, n) = (dims.p, dims.n);
    let core = spray_core(space, pt)?;
    let h = space.h().eval(pt)?;
    let hc = h_christoffel(space.h(), pt)?;
    let vl = [SlotKind::VerticalUpper, SlotKind::TemporalLower];
    let (g_spatial, t_tensor) = if p == 1 {
        let g = core.gc.iter().map(|x| h[0] * x).collect();
        (g, None)
    } else {
        let hinv = space.h().inverse(pt)?;
        let ej = ElectroJet::new(space, pt)?;
        let gamma = ej.gamma();
        let te = t_entity(&ej, &hinv, &h_trace(&hc, p), pt);
        let mut g = vec![0.0; n * p * p];
        let mut t = vec![0.0; n * p * p];
        for l in 0..n {
            for a in 0..p {
                for b in 0..p {
                    let mut s = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            s += gamma[(l * n + j) * n + k] * pt.vel(j, a) * pt.vel(k, b);
                        }
                    }
                    let tv = h[a * p + b] / p as f64 * te[l];
                    t[(l * p + a) * p + b] = tv;
                    g[(l * p + a) * p + b] = 0.5 * s + tv;
                }
            }
        }
        (g, Some(DTensor::from_data(slots(dims, &vl), t)?))
    };
    Ok(SprayPack {
        s: core.s,
        hc: core.h,
        j: core.j,
        gc: core.gc,
        g_spatial: DTensor::from_data(slots(dims, &vl), g_spatial)?,
        h_temporal: DTensor::from_data(slots(dims, &vl), temporal_spray(&hc, pt, dims, -0.5))?,
        t_tensor,
    })
}

/// A nonlinear connection, evaluable over any scalar kind.
pub trait NonlinearConnection: Sync {
    fn dims(&self) -> Dims;
    /// `M^{(i)}_{(α)β}`.
    fn m<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>>;
    /// `N^{(i)}_{(α)j}`.
    fn n<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>>;
}

impl<C: NonlinearConnection + ?Sized> NonlinearConnection for &C {
    fn dims(&self) -> Dims {
        (**self).dims()
    }
    fn m<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        (**self).m(pt)
    }
    fn n<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        (**self).n(pt)
    }
}

/// `M^{(i)}_{(α)β} = −H^γ_{αβ} x^i_γ`, shared by every connection here.
fn temporal_m<S: Scalar>(h: &TemporalMetric, pt: &JetPoint<S>) -> Result<Vec<S>> {
    let hc = h_christoffel(h, pt)?;
    Ok(temporal_spray(&hc, pt, pt.dims(), -1.0))
}

/// How the spatial components `N` of the canonical connection are computed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum NRoute {
    /// `Spray` for `p = 1`, `ClosedForm` for `p ≥ 2`.
    Auto,
    /// `h_{αγ} ∂𝒢^i/∂x^j_γ` by forward mode through the whole spray.
    Spray,
    /// `Γ^i_{jk}x^k_α + (g^{ik}/2)∂g_{jk}/∂t^α + (g^{ik}/4)h_{αγ}U^{(γ)}_{(k)j}`,
    /// valid for electrodynamics-form Lagrangians.
    ClosedForm,
}

/// The canonical nonlinear connection induced by the spray of `L`.
#[derive(Clone, Copy, Debug)]
pub struct CanonicalConnection<'a> {
    space: &'a MultiTimeSpace,
    route: NRoute,
}

impl<'a> CanonicalConnection<'a> {
    pub fn new(space: &'a MultiTimeSpace) -> Self {
        Self::with_route(space, NRoute::Auto)
    }

    pub fn with_route(space: &'a MultiTimeSpace, route: NRoute) -> Self {
        let route = match route {
            NRoute::Auto if space.dims().p == 1 => NRoute::Spray,
            NRoute::Auto => NRoute::ClosedForm,
            r => r,
        };
        CanonicalConnection { space, route }
    }

    pub fn space(&self) -> &'a MultiTimeSpace {
        self.space
    }

    pub fn route(&self) -> NRoute {
        self.route
    }
}

/// Builds the canonical connection. For `p ≥ 2` and an expression
/// Lagrangian, the electrodynamics form the closed-form `N` relies on is
/// checked at `probe` first.
pub fn canonical_nonlinear_connection<'a>(
    space: &'a MultiTimeSpace,
    probe: &[JetPoint],
) -> Result<CanonicalConnection<'a>> {
    if space.dims().p >= 2 && matches!(space.lagrangian(), Lagrangian::Expression(_)) {
        for pt in probe {
            let defect = reassembly_defect(space, pt)?;
            let tolerance = 1e-8 * space.eval_l(pt)?.abs().max(1.0);
            if !(defect.abs() <= tolerance) {
                return Err(Error::Decomposition {
                    residual: defect.abs(),
                    tolerance,
                });
            }
        }
    }
    Ok(CanonicalConnection::new(space))
}

impl NonlinearConnection for CanonicalConnection<'_> {
    fn dims(&self) -> Dims {
        self.space.dims()
    }

    fn m<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        temporal_m(self.space.h(), pt)
    }

    fn n<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        let dims = self.space.dims();
        let (p, n) = (dims.p, dims.n);
        let h = self.space.h().eval(pt)?;
        let mut out = vec![S::zero(); n * p * n];
        match self.route {
            NRoute::Spray | NRoute::Auto => {
                for j in 0..n {
                    for c in 0..p {
                        let dg = partial(&SprayField(self.space), pt, Coord::V(j, c))?;
                        for i in 0..n {
                            for a in 0..p {
                                out[(i * p + a) * n + j] += h[a * p + c] * dg[i];
                            }
                        }
                    }
                }
            }
            NRoute::ClosedForm => {
                let ej = ElectroJet::new(self.space, pt)?;
                let gamma = ej.gamma();
                for i in 0..n {
                    for a in 0..p {
                        for j in 0..n {
                            let mut s = S::zero();
                            for k in 0..n {
                                s += gamma[(i * n + j) * n + k] * pt.vel(k, a);
                                let gik = ej.ginv[i * n + k];
                                s += (gik * ej.dg_dt(a, j, k)).scale(0.5);
                                for c in 0..p {
                                    s += (gik * h[a * p + c] * ej.u_curl(c, k, j)).scale(0.25);
                                }
                            }
                            out[(i * p + a) * n + j] = s;
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `Γ₀` of a metric pair: `M = −H^γ_{αβ}x^i_γ`, `N = γ^i_{jk} x^k_α`.
pub struct MetricPairConnection<'a, M: ?Sized> {
    dims: Dims,
    h: &'a TemporalMetric,
    g: &'a M,
}

impl<'a, M: SpatialMetric + ?Sized> MetricPairConnection<'a, M> {
    pub fn new(dims: Dims, h: &'a TemporalMetric, g: &'a M) -> Result<Self> {
        if h.p() != dims.p || g.n() != dims.n {
            return Err(Error::Dimension("metric pair does not match dims".into()));
        }
        Ok(MetricPairConnection { dims, h, g })
    }

    pub fn h(&self) -> &'a TemporalMetric {
        self.h
    }

    pub fn g(&self) -> &'a M {
        self.g
    }
}

impl<M: SpatialMetric + ?Sized> NonlinearConnection for MetricPairConnection<'_, M> {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn m<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        temporal_m(self.h, pt)
    }

    fn n<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        let (p, n) = (self.dims.p, self.dims.n);
        let gamma = g_christoffel(self.g, pt)?;
        let mut out = vec![S::zero(); n * p * n];
        for i in 0..n {
            for a in 0..p {
                for j in 0..n {
                    for k in 0..n {
                        out[(i * p + a) * n + j] += gamma[(i * n + j) * n + k] * pt.vel(k, a);
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `M = 0`, `N = 0`.
#[derive(Clone, Copy, Debug)]
pub struct ZeroConnection(pub Dims);

impl NonlinearConnection for ZeroConnection {
    fn dims(&self) -> Dims {
        self.0
    }
    fn m<S: Scalar>(&self, _pt: &JetPoint<S>) -> Result<Vec<S>> {
        Ok(vec![S::zero(); self.0.n * self.0.p * self.0.p])
    }
    fn n<S: Scalar>(&self, _pt: &JetPoint<S>) -> Result<Vec<S>> {
        Ok(vec![S::zero(); self.0.n * self.0.p * self.0.n])
    }
}

/// `M` and `N` at a point as tensors.
pub fn connection_tensors<C: NonlinearConnection + ?Sized>(conn: &C, pt: &JetPoint) -> Result<(DTensor, DTensor)> {
    let dims = conn.dims();
    let m = DTensor::from_data(
        slots(dims, &[SlotKind::VerticalUpper, SlotKind::TemporalLower]),
        conn.m(pt)?,
    )?;
    let n = DTensor::from_data(
        slots(dims, &[SlotKind::VerticalUpper, SlotKind::SpatialLower]),
        conn.n(pt)?,
    )?;
    Ok((m, n))
}

/// Direction of an adapted-frame derivative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Direction {
    /// `δ/δt^α`
    Temporal(usize),
    /// `δ/δx^i`
    Spatial(usize),
    /// `∂/∂x^i_α`
    Vertical(usize, usize),
}

/// A field with all of its adapted derivatives at one point.
#[derive(Clone, Debug)]
pub struct AdaptedJacobian<S> {
    pub value: Vec<S>,
    /// `δF/δt^α`
    pub dt: Vec<Vec<S>>,
    /// `δF/δx^i`
    pub dx: Vec<Vec<S>>,
    /// `∂F/∂x^i_α` at `i·p + α`
    pub dv: Vec<Vec<S>>,
}

impl<S: Scalar> AdaptedJacobian<S> {
    pub fn along(&self, dir: Direction, p: usize) -> &[S] {
        match dir {
            Direction::Temporal(a) => &self.dt[a],
            Direction::Spatial(i) => &self.dx[i],
            Direction::Vertical(i, a) => &self.dv[i * p + a],
        }
    }
}

/// `δ/δt^α = ∂/∂t^α − M^{(j)}_{(β)α}∂/∂x^j_β`,
/// `δ/δx^i = ∂/∂x^i − N^{(j)}_{(β)i}∂/∂x^j_β`, and the vertical partials,
/// for every component of `f`. `M` and `N` are only evaluated when `f`
/// depends on the velocities.
pub fn adapted_jacobian<F, C, S>(f: &F, conn: &C, pt: &JetPoint<S>) -> Result<AdaptedJacobian<S>>
where
    F: TensorField + ?Sized,
    C: NonlinearConnection + ?Sized,
    S: Scalar,
{
    let dims = pt.dims();
    let (p, n) = (dims.p, dims.n);
    let coords: Vec<Coord> = dims.coords().collect();
    let (value, mut parts) = jacobian(f, pt, &coords)?;
    let dv = parts.split_off(p + n);
    let mut dx = parts.split_off(p);
    let mut dt = parts;
    if dv.iter().flatten().all(Scalar::is_exact_zero) {
        return Ok(AdaptedJacobian { value, dt, dx, dv });
    }
    let m = conn.m(pt)?;
    let nn = conn.n(pt)?;
    for j in 0..n {
        for b in 0..p {
            let col = &dv[j * p + b];
            for a in 0..p {
                let c = m[(j * p + b) * p + a];
                if !c.is_exact_zero() {
                    for (d, v) in dt[a].iter_mut().zip(col) {
                        *d -= c * *v;
                    }
                }
            }
            for i in 0..n {
                let c = nn[(j * p + b) * n + i];
                if !c.is_exact_zero() {
                    for (d, v) in dx[i].iter_mut().zip(col) {
                        *d -= c * *v;
                    }
                }
            }
        }
    }
    Ok(AdaptedJacobian { value, dt, dx, dv })
}

/// One adapted derivative of every component of `f`.
pub fn adapted_derivative<F, C>(f: &F, conn: &C, pt: &JetPoint, dir: Direction) -> Result<Vec<f64>>
where
    F: TensorField + ?Sized,
    C: NonlinearConnection + ?Sized,
{
    let dims = pt.dims();
    let c = match dir {
        Direction::Temporal(a) => Coord::T(a),
        Direction::Spatial(i) => Coord::X(i),
        Direction::Vertical(i, a) => Coord::V(i, a),
    };
    dims.check(c)?;
    let mut out = partial(f, pt, c)?;
    let (p, n) = (dims.p, dims.n);
    let lift = match dir {
        Direction::Vertical(..) => return Ok(out),
        Direction::Temporal(a) => {
            let m = conn.m(pt)?;
            (0..n * p).map(|jb| m[jb * p + a]).collect::<Vec<_>>()
        }
        Direction::Spatial(i) => {
            let nn = conn.n(pt)?;
            (0..n * p).map(|jb| nn[jb * n + i]).collect::<Vec<_>>()
        }
    };
    for (jb, c) in lift.into_iter().enumerate() {
        if c != 0.0 {
            let dv = partial(f, pt, Coord::V(jb / p, jb % p))?;
            for (o, d) in out.iter_mut().zip(dv) {
                *o -= c * d;
            }
        }
    }
    Ok(out)
}

/// Sasakian-like metric `h_{αβ}dt^α dt^β + g_{ij}dx^i dx^j
/// + h^{αβ}g_{ij}δx^i_α δx^j_β`, in the adapted coframe and in natural
/// coordinates `(t, x, v)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SasakianMetric {
    pub dim: usize,
    pub adapted: Vec<f64>,
    pub natural: Vec<f64>,
}

pub fn sasakian_metric<M, C>(h: &TemporalMetric, g: &M, conn: &C, pt: &JetPoint) -> Result<SasakianMetric>
where
    M: SpatialMetric + ?Sized,
    C: NonlinearConnection + ?Sized,
{
    let dims = pt.dims();
    let (p, n) = (dims.p, dims.n);
    let hv = h.eval(pt)?;
    let gv = g.g(pt)?;
    linalg::check_nondegenerate(&hv, p)?;
    linalg::check_nondegenerate(&gv, n)?;
    let hinv = linalg::invert(&hv, p)?;
    let dim = dims.coord_count();
    let mut a = vec![0.0; dim * dim];
    for r in 0..p {
        for c in 0..p {
            a[r * dim + c] = hv[r * p + c];
        }
    }
    for r in 0..n {
        for c in 0..n {
            a[(p + r) * dim + p + c] = gv[r * n + c];
        }
    }
    let off = p + n;
    for i in 0..n {
        for al in 0..p {
            for j in 0..n {
                for be in 0..p {
                    a[(off + i * p + al) * dim + off + j * p + be] = hinv[al * p + be] * gv[i * n + j];
                }
            }
        }
    }
    // Rows: adapted coframe (dt, dx, δv) in terms of (dt, dx, dv).
    let m = conn.m(pt)?;
    let nn = conn.n(pt)?;
    let mut b = linalg::identity(dim);
    for ia in 0..n * p {
        for be in 0..p {
            b[(off + ia) * dim + be] = m[ia * p + be];
        }
        for j in 0..n {
            b[(off + ia) * dim + p + j] = nn[ia * n + j];
        }
    }
    let mut bt = vec![0.0; dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            bt[c * dim + r] = b[r * dim + c];
        }
    }
    let natural = linalg::matmul(&bt, &linalg::matmul(&a, &b, dim), dim);
    Ok(SasakianMetric { dim, adapted: a, natural })
}

/// Second-order jet of a map `T → M` at one parameter value.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MapJet {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// `x^i_α` at `i·p + α`
    pub x1: Vec<f64>,
    /// `x^i_{αβ}` at `(i·p + α)·p + β`
    pub x2: Vec<f64>,
}

impl MapJet {
    pub fn point(&self, dims: Dims) -> Result<JetPoint> {
        JetPoint::new(dims, self.t.clone(), self.x.clone(), self.x1.clone())
    }
}

/// A `C²` map from the temporal manifold, with its derivatives.
pub trait JetMap: Sync {
    fn dims(&self) -> Dims;
    fn jet(&self, t: &[f64]) -> Result<MapJet>;
}

/// Map whose components `x^i(t)` are expressions in `t`.
#[derive(Clone, Debug)]
pub struct ExprMap {
    dims: Dims,
    x: Vec<Expr>,
}

impl ExprMap {
    pub fn new(dims: Dims, x: Vec<Expr>) -> Result<Self> {
        if x.len() != dims.n {
            return Err(Error::Dimension(format!("map needs {} components, got {}", dims.n, x.len())));
        }
        for e in &x {
            if let Some((c, off)) = e.find_var(|c| matches!(c, Coord::T(a) if a < dims.p)) {
                return Err(Error::eval(off, format!("map components may only use t, found {c}")));
            }
        }
        Ok(ExprMap { dims, x })
    }
}

impl JetMap for ExprMap {
    fn dims(&self) -> Dims {
        self.dims
    }

    fn jet(&self, t: &[f64]) -> Result<MapJet> {
        let (p, n) = (self.dims.p, self.dims.n);
        if t.len() != p {
            return Err(Error::Dimension(format!("expected {p} time coordinates")));
        }
        let mut pt = JetPoint::zeros(self.dims);
        pt.t.copy_from_slice(t);
        let mut out = MapJet {
            t: t.to_vec(),
            x: vec![0.0; n],
            x1: vec![0.0; n * p],
            x2: vec![0.0; n * p * p],
        };
        for (i, e) in self.x.iter().enumerate() {
            out.x[i] = e.eval(&pt)?;
            for a in 0..p {
                out.x1[i * p + a] = d1(e, &pt, Coord::T(a))?;
                for b in 0..p {
                    out.x2[(i * p + a) * p + b] = d2(e, &pt, Coord::T(a), Coord::T(b))?;
                }
            }
        }
        Ok(out)
    }
}

/// Left side of the Euler-Lagrange equations along a map:
/// `2G^{(α)(β)}_{(i)(j)} x^j_{αβ} + ∂²L/∂x^j∂x^i_α x^j_α − ∂L/∂x^i
/// + ∂²L/∂t^α∂x^i_α + ∂L/∂x^i_α H^γ_{αγ}`.
pub fn euler_lagrange_residual<F: ScalarField + ?Sized>(l: &F, h: &TemporalMetric, jet: &MapJet, dims: Dims) -> Result<Vec<f64>> {
    let (p, n) = (dims.p, dims.n);
    let pt = jet.point(dims)?;
    let tr = h_trace(&h_christoffel(h, &pt)?, p);
    let mut out = vec![0.0; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut s = -d1(l, &pt, Coord::X(i))?;
        for a in 0..p {
            let vi = Coord::V(i, a);
            s += d2(l, &pt, Coord::T(a), vi)? + d1(l, &pt, vi)? * tr[a];
            for j in 0..n {
                s += d2(l, &pt, Coord::X(j), vi)? * jet.x1[j * p + a];
                for b in 0..p {
                    s += d2(l, &pt, vi, Coord::V(j, b))? * jet.x2[(j * p + a) * p + b];
                }
            }
        }
        *o = s;
    }
    Ok(out)
}

/// `Δ_h x^k = h^{αβ}(x^k_{αβ} − H^γ_{αβ} x^k_γ)`.
pub fn h_laplacian(h: &TemporalMetric, jet: &MapJet, dims: Dims) -> Result<Vec<f64>> {
    let (p, n) = (dims.p, dims.n);
    let pt = jet.point(dims)?;
    let hinv = h.inverse(&pt)?;
    let hc = h_christoffel(h, &pt)?;
    Ok((0..n)
        .map(|k| {
            let mut s = 0.0;
            for a in 0..p {
                for b in 0..p {
                    let mut v = jet.x2[(k * p + a) * p + b];
                    for c in 0..p {
                        v -= hc[(c * p + a) * p + b] * jet.x1[k * p + c];
                    }
                    s += hinv[a * p + b] * v;
                }
            }
            s
        })
        .collect())
}

/// `Δ_h x + 2𝒢` along a map.
pub fn harmonic_defect(space: &MultiTimeSpace, jet: &MapJet) -> Result<Vec<f64>> {
    let dims = space.dims();
    let lap = h_laplacian(space.h(), jet, dims)?;
    let core = spray_core(space, &jet.point(dims)?)?;
    Ok(lap.iter().zip(&core.gc).map(|(l, g)| l + 2.0 * g).collect())
}
