//! h-normal Γ-linear connections: the Cartan canonical connection of a
//! multi-time Lagrange space and the Berwald connection of a metric pair,
//! with their T-horizontal, M-horizontal and vertical covariant derivatives.
//!
//! Coefficient layouts: `H^γ_{αβ}` at `(γ·p + α)·p + β`; `G^k_{jγ}` at
//! `(k·n + j)·p + γ`; `L^i_{jk}` at `(i·n + j)·n + k`; `C^{i(γ)}_{j(k)}` at
//! `(i·n + j)·(n·p) + k·p + γ`.

use serde::Serialize;

use crate::calculus::TensorField;
use crate::connection::{adapted_jacobian, Direction, MetricPairConnection, NonlinearConnection};
use crate::error::{Error, Result};
use crate::jet::{slots, DTensor, Dims, JetPoint, MultiIndexIter, SlotKind};
use crate::lagrangian::MultiTimeSpace;
use crate::linalg;
use crate::metric::{g_christoffel, h_christoffel, christoffel_process, MetricField, SpatialMetric, TemporalMetric};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PackKind {
    Cartan,
    Berwald,
}

/// The four effective coefficient families `(H, G, L, C)`.
#[derive(Clone, Debug)]
pub struct Coefficients<S> {
    pub h: Vec<S>,
    pub g: Vec<S>,
    pub l: Vec<S>,
    pub c: Vec<S>,
}

impl<S: Scalar> Coefficients<S> {
    fn concat(self) -> Vec<S> {
        let mut out = self.h;
        out.extend(self.g);
        out.extend(self.l);
        out.extend(self.c);
        out
    }
}

/// A connection determined by `(H^γ_{αβ}, G^k_{jγ}, L^i_{jk}, C^{i(γ)}_{j(k)})`.
pub trait HNormalConnection: Sync {
    fn dims(&self) -> Dims;
    fn kind(&self) -> PackKind;
    fn coefficients<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Coefficients<S>>;
}

impl<K: HNormalConnection + ?Sized> HNormalConnection for &K {
    fn dims(&self) -> Dims {
        (**self).dims()
    }
    fn kind(&self) -> PackKind {
        (**self).kind()
    }
    fn coefficients<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Coefficients<S>> {
        (**self).coefficients(pt)
    }
}

/// All coefficients concatenated as one field, in the order `H, G, L, C`.
pub(crate) struct CoefficientField<'a, K: ?Sized>(pub &'a K);

impl<K: HNormalConnection + ?Sized> TensorField for CoefficientField<'_, K> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        Ok(self.0.coefficients(pt)?.concat())
    }
}

/// Offsets of the four families inside [`CoefficientField`] output.
pub(crate) fn coefficient_offsets(dims: Dims) -> [usize; 4] {
    let (p, n) = (dims.p, dims.n);
    let g = p * p * p;
    let l = g + n * n * p;
    let c = l + n * n * n;
    [0, g, l, c]
}

/// Cartan canonical connection over a nonlinear connection `conn`.
pub struct CartanConnection<'a, C> {
    space: &'a MultiTimeSpace,
    conn: C,
}

pub fn cartan_connection<C: NonlinearConnection>(space: &MultiTimeSpace, conn: C) -> Result<CartanConnection<'_, C>> {
    if conn.dims() != space.dims() {
        return Err(Error::Dimension("nonlinear connection does not match the space".into()));
    }
    Ok(CartanConnection { space, conn })
}

impl<C: NonlinearConnection> CartanConnection<'_, C> {
    pub fn nonlinear(&self) -> &C {
        &self.conn
    }
}

impl<C: NonlinearConnection> HNormalConnection for CartanConnection<'_, C> {
    fn dims(&self) -> Dims {
        self.space.dims()
    }

    fn kind(&self) -> PackKind {
        PackKind::Cartan
    }

    fn coefficients<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Coefficients<S>> {
        let dims = self.space.dims();
        let (p, n) = (dims.p, dims.n);
        let aj = adapted_jacobian(&MetricField(self.space), &self.conn, pt)?;
        let ginv = linalg::invert(&aj.value, n)?;
        let mut g = vec![S::zero(); n * n * p];
        for k in 0..n {
            for j in 0..n {
                for c in 0..p {
                    let mut s = S::zero();
                    for i in 0..n {
                        s += ginv[k * n + i] * aj.dt[c][i * n + j];
                    }
                    g[(k * n + j) * p + c] = s.scale(0.5);
                }
            }
        }
        let l = christoffel_process(&ginv, &aj.dx, n);
        let mut cc = vec![S::zero(); n * n * n * p];
        for c in 0..p {
            let d: Vec<Vec<S>> = (0..n).map(|k| aj.dv[k * p + c].clone()).collect();
            if d.iter().flatten().all(Scalar::is_exact_zero) {
                continue;
            }
            let cg = christoffel_process(&ginv, &d, n);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        cc[(i * n + j) * n * p + k * p + c] = cg[(i * n + j) * n + k];
                    }
                }
            }
        }
        Ok(Coefficients {
            h: h_christoffel(self.space.h(), pt)?,
            g,
            l,
            c: cc,
        })
    }
}

/// Berwald connection `(H^γ_{αβ}, 0, γ^k_{ij}, 0)` of a metric pair; `g`
/// is expected to depend on `x` only.
pub struct BerwaldConnection<'a, M: ?Sized> {
    pair: MetricPairConnection<'a, M>,
}

pub fn berwald_connection<'a, M: SpatialMetric + ?Sized>(
    dims: Dims,
    h: &'a TemporalMetric,
    g: &'a M,
) -> Result<BerwaldConnection<'a, M>> {
    Ok(BerwaldConnection {
        pair: MetricPairConnection::new(dims, h, g)?,
    })
}

impl<'a, M: SpatialMetric + ?Sized> BerwaldConnection<'a, M> {
    /// `Γ₀`, the nonlinear connection the Berwald connection lives over.
    pub fn nonlinear(&self) -> &MetricPairConnection<'a, M> {
        &self.pair
    }
}

impl<M: SpatialMetric + ?Sized> HNormalConnection for BerwaldConnection<'_, M> {
    fn dims(&self) -> Dims {
        self.pair.dims()
    }

    fn kind(&self) -> PackKind {
        PackKind::Berwald
    }

    fn coefficients<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Coefficients<S>> {
        let (p, n) = (self.dims().p, self.dims().n);
        Ok(Coefficients {
            h: h_christoffel(self.pair.h(), pt)?,
            g: vec![S::zero(); n * n * p],
            l: g_christoffel(self.pair.g(), pt)?,
            c: vec![S::zero(); n * n * n * p],
        })
    }
}

/// Coefficients of an h-normal connection at a point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinearConnectionPack {
    pub kind: PackKind,
    pub dims: Dims,
    /// `H^γ_{αβ}`
    pub hbar: DTensor,
    /// `G^k_{jγ}`
    pub gk: DTensor,
    /// `L^i_{jk}`
    pub lk: DTensor,
    /// `C^{i(γ)}_{j(k)}`
    pub ck: DTensor,
}

pub fn pack<K: HNormalConnection + ?Sized>(k: &K, pt: &JetPoint) -> Result<LinearConnectionPack> {
    let dims = k.dims();
    let c = k.coefficients(pt)?;
    use SlotKind::*;
    Ok(LinearConnectionPack {
        kind: k.kind(),
        dims,
        hbar: DTensor::from_data(slots(dims, &[TemporalUpper, TemporalLower, TemporalLower]), c.h)?,
        gk: DTensor::from_data(slots(dims, &[SpatialUpper, SpatialLower, TemporalLower]), c.g)?,
        lk: DTensor::from_data(slots(dims, &[SpatialUpper, SpatialLower, SpatialLower]), c.l)?,
        ck: DTensor::from_data(slots(dims, &[SpatialUpper, SpatialLower, VerticalLower]), c.c)?,
    })
}

impl LinearConnectionPack {
    /// `H^γ_{αβ}`
    pub fn h(&self, g: usize, a: usize, b: usize) -> f64 {
        let p = self.dims.p;
        self.hbar.data[(g * p + a) * p + b]
    }
    /// `G^k_{jγ}`
    pub fn g(&self, k: usize, j: usize, c: usize) -> f64 {
        let (p, n) = (self.dims.p, self.dims.n);
        self.gk.data[(k * n + j) * p + c]
    }
    /// `L^i_{jk}`
    pub fn l(&self, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dims.n;
        self.lk.data[(i * n + j) * n + k]
    }
    /// `C^{i(γ)}_{j(k)}`
    pub fn c(&self, i: usize, j: usize, k: usize, c: usize) -> f64 {
        let (p, n) = (self.dims.p, self.dims.n);
        self.ck.data[(i * n + j) * n * p + k * p + c]
    }

    /// Spatial coefficient `Γ^m_{l·}` for a direction: `G^m_{lγ}`,
    /// `L^m_{lk}` or `C^{m(γ)}_{l(k)}`.
    fn spatial(&self, m: usize, l: usize, dir: Direction) -> f64 {
        match dir {
            Direction::Temporal(c) => self.g(m, l, c),
            Direction::Spatial(k) => self.l(m, l, k),
            Direction::Vertical(k, c) => self.c(m, l, k, c),
        }
    }

    /// Temporal coefficient `H^α_{μγ}` for T-horizontal directions, zero otherwise.
    fn temporal(&self, a: usize, mu: usize, dir: Direction) -> f64 {
        match dir {
            Direction::Temporal(c) => self.h(a, mu, c),
            _ => 0.0,
        }
    }

    /// `G^{(k)(β)}_{(α)(i)γ} = δ^β_α G^k_{iγ} − δ^k_i H^β_{αγ}` at
    /// `[(k·p + α)][(i·p + β)][γ]`.
    pub fn g_vertical(&self) -> Result<DTensor> {
        let (p, n) = (self.dims.p, self.dims.n);
        let mut t = DTensor::new(slots(self.dims, &[SlotKind::VerticalUpper, SlotKind::VerticalLower, SlotKind::TemporalLower]))?;
        for k in 0..n {
            for a in 0..p {
                for i in 0..n {
                    for b in 0..p {
                        for c in 0..p {
                            let mut v = 0.0;
                            if a == b {
                                v += self.g(k, i, c);
                            }
                            if k == i {
                                v -= self.h(b, a, c);
                            }
                            t.data[((k * p + a) * n * p + i * p + b) * p + c] = v;
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    /// `L^{(k)(β)}_{(α)(i)j} = δ^β_α L^k_{ij}`.
    pub fn l_vertical(&self) -> Result<DTensor> {
        let (p, n) = (self.dims.p, self.dims.n);
        let mut t = DTensor::new(slots(self.dims, &[SlotKind::VerticalUpper, SlotKind::VerticalLower, SlotKind::SpatialLower]))?;
        for k in 0..n {
            for a in 0..p {
                for i in 0..n {
                    for j in 0..n {
                        t.data[((k * p + a) * n * p + i * p + a) * n + j] = self.l(k, i, j);
                    }
                }
            }
        }
        Ok(t)
    }

    /// `C^{(k)(β)(γ)}_{(α)(i)(j)} = δ^β_α C^{k(γ)}_{i(j)}`.
    pub fn c_vertical(&self) -> Result<DTensor> {
        let (p, n) = (self.dims.p, self.dims.n);
        let np = n * p;
        let mut t = DTensor::new(slots(self.dims, &[SlotKind::VerticalUpper, SlotKind::VerticalLower, SlotKind::VerticalLower]))?;
        for k in 0..n {
            for a in 0..p {
                for i in 0..n {
                    for j in 0..n {
                        for c in 0..p {
                            t.data[((k * p + a) * np + i * p + a) * np + j * p + c] = self.c(k, i, j, c);
                        }
                    }
                }
            }
        }
        Ok(t)
    }

    /// Largest `|L^i_{jk} − L^i_{kj}|` and `|C^{i(γ)}_{j(k)} − C^{i(γ)}_{k(j)}|`.
    pub fn symmetry_defects(&self) -> (f64, f64) {
        let (p, n) = (self.dims.p, self.dims.n);
        let (mut dl, mut dc) = (0.0f64, 0.0f64);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    dl = dl.max((self.l(i, j, k) - self.l(i, k, j)).abs());
                    for c in 0..p {
                        dc = dc.max((self.c(i, j, k, c) - self.c(i, k, j, c)).abs());
                    }
                }
            }
        }
        (dl, dc)
    }
}

fn check_valence(valence: &[SlotKind], dims: Dims, len: usize) -> Result<Vec<usize>> {
    let shape: Vec<usize> = valence.iter().map(|k| k.extent(dims)).collect();
    let size: usize = shape.iter().product();
    if size != len {
        return Err(Error::Contraction(format!(
            "valence {valence:?} has {size} components, field has {len}"
        )));
    }
    Ok(shape)
}

/// Adds the connection terms of every slot of `valence` to `out`, where
/// `value` holds the field components.
pub(crate) fn add_connection_terms(
    valence: &[SlotKind],
    pack: &LinearConnectionPack,
    dir: Direction,
    value: &[f64],
    out: &mut [f64],
) -> Result<()> {
    let dims = pack.dims;
    let (p, n) = (dims.p, dims.n);
    let shape = check_valence(valence, dims, value.len())?;
    let strides: Vec<usize> = (0..shape.len()).map(|s| shape[s + 1..].iter().product()).collect();
    let horizontal_t = matches!(dir, Direction::Temporal(_));
    for (flat, idx) in MultiIndexIter::new(shape.clone()).enumerate() {
        let mut acc = 0.0;
        for (s, &kind) in valence.iter().enumerate() {
            let base = flat - idx[s] * strides[s];
            let at = |q: usize| value[base + q * strides[s]];
            match kind {
                SlotKind::SpatialUpper => {
                    let m = idx[s];
                    for l in 0..n {
                        acc += pack.spatial(m, l, dir) * at(l);
                    }
                }
                SlotKind::SpatialLower => {
                    let i = idx[s];
                    for m in 0..n {
                        acc -= pack.spatial(m, i, dir) * at(m);
                    }
                }
                SlotKind::TemporalUpper if horizontal_t => {
                    let a = idx[s];
                    for mu in 0..p {
                        acc += pack.temporal(a, mu, dir) * at(mu);
                    }
                }
                SlotKind::TemporalLower if horizontal_t => {
                    let b = idx[s];
                    for mu in 0..p {
                        acc -= pack.temporal(mu, b, dir) * at(mu);
                    }
                }
                SlotKind::TemporalUpper | SlotKind::TemporalLower => {}
                SlotKind::VerticalUpper => {
                    let (i, a) = (idx[s] / p, idx[s] % p);
                    for l in 0..n {
                        acc += pack.spatial(i, l, dir) * at(l * p + a);
                    }
                    if horizontal_t {
                        for mu in 0..p {
                            acc -= pack.temporal(mu, a, dir) * at(i * p + mu);
                        }
                    }
                }
                SlotKind::VerticalLower => {
                    let (i, a) = (idx[s] / p, idx[s] % p);
                    for m in 0..n {
                        acc -= pack.spatial(m, i, dir) * at(m * p + a);
                    }
                    if horizontal_t {
                        for mu in 0..p {
                            acc += pack.temporal(a, mu, dir) * at(i * p + mu);
                        }
                    }
                }
            }
        }
        out[flat] += acc;
    }
    Ok(())
}

/// Covariant derivatives of a field in every direction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CovariantJacobian {
    /// `F_{/γ}`
    pub dt: Vec<DTensor>,
    /// `F_{|k}`
    pub dx: Vec<DTensor>,
    /// `F|^{(γ)}_{(k)}` at `k·p + γ`
    pub dv: Vec<DTensor>,
}

impl CovariantJacobian {
    pub fn along(&self, dir: Direction, p: usize) -> &DTensor {
        match dir {
            Direction::Temporal(c) => &self.dt[c],
            Direction::Spatial(k) => &self.dx[k],
            Direction::Vertical(k, c) => &self.dv[k * p + c],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.dt.iter().chain(&self.dx).chain(&self.dv).map(DTensor::max_abs).fold(0.0, f64::max)
    }
}

/// T-horizontal, M-horizontal and vertical covariant derivatives of `field`
/// with slot kinds `valence`: the adapted derivative plus one connection term
/// per slot.
pub fn covariant_derivatives<F, C>(
    field: &F,
    valence: &[SlotKind],
    pack: &LinearConnectionPack,
    conn: &C,
    pt: &JetPoint,
) -> Result<CovariantJacobian>
where
    F: TensorField + ?Sized,
    C: NonlinearConnection + ?Sized,
{
    let dims = pack.dims;
    let (p, n) = (dims.p, dims.n);
    let aj = adapted_jacobian(field, conn, pt)?;
    check_valence(valence, dims, aj.value.len())?;
    let slot_list = if valence.is_empty() {
        vec![]
    } else {
        slots(dims, valence)
    };
    let build = |dir: Direction, base: &[f64]| -> Result<DTensor> {
        let mut out = base.to_vec();
        add_connection_terms(valence, pack, dir, &aj.value, &mut out)?;
        if slot_list.is_empty() {
            return Ok(DTensor::scalar(out[0]));
        }
        DTensor::from_data(slot_list.clone(), out)
    };
    let dt = (0..p).map(|c| build(Direction::Temporal(c), &aj.dt[c])).collect::<Result<_>>()?;
    let dx = (0..n).map(|k| build(Direction::Spatial(k), &aj.dx[k])).collect::<Result<_>>()?;
    let dv = (0..n * p)
        .map(|kc| build(Direction::Vertical(kc / p, kc % p), &aj.dv[kc]))
        .collect::<Result<_>>()?;
    Ok(CovariantJacobian { dt, dx, dv })
}

/// One covariant derivative.
pub fn covariant_derivative<F, C>(
    field: &F,
    valence: &[SlotKind],
    pack: &LinearConnectionPack,
    conn: &C,
    pt: &JetPoint,
    dir: Direction,
) -> Result<DTensor>
where
    F: TensorField + ?Sized,
    C: NonlinearConnection + ?Sized,
{
    Ok(covariant_derivatives(field, valence, pack, conn, pt)?.along(dir, pack.dims.p).clone())
}

/// Largest components of `g_{ij|k}`, `g_{ij}|^{(γ)}_{(k)}`, `g_{ij/γ}`,
/// `h_{αβ/γ}`, `h_{αβ|k}`, `h_{αβ}|^{(γ)}_{(k)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CompatibilityReport {
    pub g_m: f64,
    pub g_v: f64,
    pub g_t: f64,
    pub h_t: f64,
    pub h_m: f64,
    pub h_v: f64,
}

impl CompatibilityReport {
    pub fn worst(&self) -> f64 {
        [self.g_m, self.g_v, self.g_t, self.h_t, self.h_m, self.h_v].into_iter().fold(0.0, f64::max)
    }

    pub fn entries(&self) -> [(&'static str, f64); 6] {
        [
            ("g_ij|k", self.g_m),
            ("g_ij|(k)(γ)", self.g_v),
            ("g_ij/γ", self.g_t),
            ("h_αβ/γ", self.h_t),
            ("h_αβ|k", self.h_m),
            ("h_αβ|(k)(γ)", self.h_v),
        ]
    }
}

fn max_of(ts: &[DTensor]) -> f64 {
    ts.iter().map(DTensor::max_abs).fold(0.0, f64::max)
}

pub fn metric_compatibility<C: NonlinearConnection + ?Sized>(
    space: &MultiTimeSpace,
    pack: &LinearConnectionPack,
    conn: &C,
    pt: &JetPoint,
) -> Result<CompatibilityReport> {
    use SlotKind::*;
    let g = covariant_derivatives(&MetricField(space), &[SpatialLower, SpatialLower], pack, conn, pt)?;
    let h = covariant_derivatives(space.h(), &[TemporalLower, TemporalLower], pack, conn, pt)?;
    Ok(CompatibilityReport {
        g_m: max_of(&g.dx),
        g_v: max_of(&g.dv),
        g_t: max_of(&g.dt),
        h_t: max_of(&h.dt),
        h_m: max_of(&h.dx),
        h_v: max_of(&h.dv),
    })
}

/// Distance of a pack from the connection that metric compatibility and
/// symmetry force, per family, with the worst index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub g_mismatch: f64,
    pub l_mismatch: f64,
    pub c_mismatch: f64,
    pub h_mismatch: f64,
    pub worst: String,
    pub passed: bool,
}

/// Re-derives `G`, `L` and `C` from the compatibility conditions by a
/// Christoffel process on the covariant derivatives of `g` computed with
/// `pack` itself, and compares. A pack that is already Cartan is its own
/// fixed point.
pub fn uniqueness_probe<C: NonlinearConnection + ?Sized>(
    pack: &LinearConnectionPack,
    space: &MultiTimeSpace,
    conn: &C,
    pt: &JetPoint,
    tol: f64,
) -> Result<UniquenessReport> {
    use SlotKind::*;
    let dims = pack.dims;
    let (p, n) = (dims.p, dims.n);
    let gv = space.metric(pt)?;
    let ginv = linalg::invert(&gv, n)?;
    let cov = covariant_derivatives(&MetricField(space), &[SpatialLower, SpatialLower], pack, conn, pt)?;
    let raise = |low: &dyn Fn(usize, usize, usize) -> f64, m: usize, j: usize, k: usize| -> f64 {
        (0..n).map(|i| ginv[m * n + i] * low(i, j, k)).sum()
    };
    let lower = |coef: &dyn Fn(usize, usize, usize) -> f64, i: usize, j: usize, k: usize| -> f64 {
        (0..n).map(|m| gv[i * n + m] * coef(m, j, k)).sum()
    };
    let mut worst = (0.0f64, String::from("none"));
    let note = |d: f64, name: String, w: &mut (f64, String)| {
        if d > w.0 {
            *w = (d, name);
        }
        d
    };

    // Christoffel process on D_{ijk} = g_{ij|k} (or its vertical analogue).
    let christoffel_fix = |coef: &dyn Fn(usize, usize, usize) -> f64, d: &dyn Fn(usize, usize, usize) -> f64, m: usize, j: usize, k: usize| -> f64 {
        let sym = |a: usize, b: usize, c: usize| 0.5 * (coef(a, b, c) + coef(a, c, b));
        let low = |i: usize, j: usize, k: usize| lower(&sym, i, j, k) + 0.5 * (d(i, j, k) + d(i, k, j) - d(j, k, i));
        raise(&low, m, j, k)
    };

    let mut l_mis = 0.0f64;
    {
        let d = |i: usize, j: usize, k: usize| cov.dx[k].data[i * n + j];
        let coef = |m: usize, j: usize, k: usize| pack.l(m, j, k);
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let diff = (pack.l(m, j, k) - christoffel_fix(&coef, &d, m, j, k)).abs();
                    l_mis = l_mis.max(note(diff, format!("L^{}_{}{}", m + 1, j + 1, k + 1), &mut worst));
                }
            }
        }
    }
    let mut c_mis = 0.0f64;
    for c in 0..p {
        let d = |i: usize, j: usize, k: usize| cov.dv[k * p + c].data[i * n + j];
        let coef = |m: usize, j: usize, k: usize| pack.c(m, j, k, c);
        for m in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let diff = (pack.c(m, j, k, c) - christoffel_fix(&coef, &d, m, j, k)).abs();
                    c_mis = c_mis.max(note(diff, format!("C^{}({})_{}({})", m + 1, c + 1, j + 1, k + 1), &mut worst));
                }
            }
        }
    }
    // G: lowered G symmetric in (i, j), so G_{i,jγ} = sym(G_pack)_{i,jγ} + ½ g_{ij/γ}.
    let mut g_mis = 0.0f64;
    for c in 0..p {
        let coef = |m: usize, j: usize, _k: usize| pack.g(m, j, c);
        let low = |i: usize, j: usize, _k: usize| {
            0.5 * (lower(&coef, i, j, 0) + lower(&coef, j, i, 0)) + 0.5 * cov.dt[c].data[i * n + j]
        };
        for m in 0..n {
            for j in 0..n {
                let diff = (pack.g(m, j, c) - raise(&low, m, j, 0)).abs();
                g_mis = g_mis.max(note(diff, format!("G^{}_{}{}", m + 1, j + 1, c + 1), &mut worst));
            }
        }
    }
    let hc = h_christoffel(space.h(), pt)?;
    let mut h_mis = 0.0f64;
    for (k, (a, b)) in pack.hbar.data.iter().zip(&hc).enumerate() {
        h_mis = h_mis.max(note((a - b).abs(), format!("H[{k}]"), &mut worst));
    }
    let passed = g_mis.max(l_mis).max(c_mis).max(h_mis) <= tol;
    Ok(UniquenessReport {
        g_mismatch: g_mis,
        l_mismatch: l_mis,
        c_mismatch: c_mis,
        h_mismatch: h_mis,
        worst: worst.1,
        passed,
    })
}
