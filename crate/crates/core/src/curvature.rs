//! Torsion and curvature d-tensors of an h-normal Γ-linear connection, their
//! closed forms for electrodynamics-type spaces, and audits of the cells the
//! tables declare zero.
//!
//! Torsion layouts (first index upper): `R^{(m)}_{(μ)αβ}` at
//! `[(m·p+μ)][α][β]`, `T^m_{αj}` at `[m][α][j]`, `P^{(m)(β)}_{(μ)α(j)}` at
//! `[(m·p+μ)][α][(j·p+β)]`, and so on. Curvature layouts: `R^l_{iβk}` at
//! `[l][i][β][k]`, `P^{l(γ)}_{ij(k)}` at `[l][i][j][(k·p+γ)]`,
//! `S^{l(β)(γ)}_{i(j)(k)}` at `[l][i][(j·p+β)][(k·p+γ)]`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::calculus::{jacobian, t_coords, x_coords, TensorField};
use crate::cartan::{add_connection_terms, coefficient_offsets, CoefficientField, HNormalConnection, LinearConnectionPack, PackKind};
use crate::connection::{adapted_jacobian, Direction, NonlinearConnection};
use crate::error::Result;
use crate::jet::{slots, Coord, DTensor, Dims, JetPoint, SlotKind};
use crate::lagrangian::{ElectroJet, MultiTimeSpace};
use crate::metric::{g_curvature, h_christoffel, h_curvature, riemann, SpatialMetric, TemporalMetric};
use crate::scalar::Scalar;

use SlotKind::{SpatialLower as SL, SpatialUpper as SU, TemporalLower as TL, TemporalUpper as TU, VerticalLower as VL, VerticalUpper as VU};

struct MField<'a, C: ?Sized>(&'a C);

impl<C: NonlinearConnection + ?Sized> TensorField for MField<'_, C> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        self.0.m(pt)
    }
}

struct NField<'a, C: ?Sized>(&'a C);

impl<C: NonlinearConnection + ?Sized> TensorField for NField<'_, C> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        self.0.n(pt)
    }
}

fn kron(a: usize, b: usize) -> f64 {
    if a == b {
        1.0
    } else {
        0.0
    }
}

fn tensor(dims: Dims, kinds: &[SlotKind], f: impl Fn(&[usize]) -> f64) -> Result<DTensor> {
    let mut t = DTensor::new(slots(dims, kinds))?;
    for (k, idx) in t.indices().enumerate() {
        t.data[k] = f(&idx);
    }
    Ok(t)
}

/// The nine torsion families.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TorsionTable {
    pub dims: Dims,
    /// `R^{(m)}_{(μ)αβ}`
    pub r_tt: DTensor,
    /// `T^m_{αj}`
    pub t_tx: DTensor,
    /// `R^{(m)}_{(μ)αj}`
    pub r_tx: DTensor,
    /// `T^m_{ij}`
    pub t_xx: DTensor,
    /// `R^{(m)}_{(μ)ij}`
    pub r_xx: DTensor,
    /// `P^{(m)(β)}_{(μ)α(j)}`
    pub p_tv: DTensor,
    /// `P^{m(β)}_{i(j)}`
    pub p_xv: DTensor,
    /// `P^{(m)(β)}_{(μ)i(j)}`
    pub p_vxv: DTensor,
    /// `S^{(m)(α)(β)}_{(μ)(i)(j)}`
    pub s_vv: DTensor,
}

impl TorsionTable {
    pub fn families(&self) -> [(&'static str, &DTensor); 9] {
        [
            ("R_tt", &self.r_tt),
            ("T_tx", &self.t_tx),
            ("R_tx", &self.r_tx),
            ("T_xx", &self.t_xx),
            ("R_xx", &self.r_xx),
            ("P_tv", &self.p_tv),
            ("P_xv", &self.p_xv),
            ("P_vxv", &self.p_vxv),
            ("S_vv", &self.s_vv),
        ]
    }

    pub fn get(&self, family: &str) -> Option<&DTensor> {
        self.families().into_iter().find(|(k, _)| *k == family).map(|(_, t)| t)
    }
}

/// Torsion of `pack` over the nonlinear connection `conn`: `M`- and
/// `N`-terms by adapted derivatives, the rest from the coefficients.
pub fn torsion_table<C: NonlinearConnection + ?Sized>(
    pack: &LinearConnectionPack,
    conn: &C,
    pt: &JetPoint,
) -> Result<TorsionTable> {
    let dims = pack.dims;
    let (p, n) = (dims.p, dims.n);
    let am = adapted_jacobian(&MField(conn), conn, pt)?;
    let an = adapted_jacobian(&NField(conn), conn, pt)?;
    let mi = |m: usize, mu: usize, a: usize| (m * p + mu) * p + a;
    let ni = |m: usize, mu: usize, j: usize| (m * p + mu) * n + j;
    Ok(TorsionTable {
        dims,
        r_tt: tensor(dims, &[VU, TL, TL], |ix| {
            let (mmu, a, b) = (ix[0], ix[1], ix[2]);
            am.dt[b][mmu * p + a] - am.dt[a][mmu * p + b]
        })?,
        t_tx: tensor(dims, &[SU, TL, SL], |ix| -pack.g(ix[0], ix[2], ix[1]))?,
        r_tx: tensor(dims, &[VU, TL, SL], |ix| {
            let (m, mu, a, j) = (ix[0] / p, ix[0] % p, ix[1], ix[2]);
            am.dx[j][mi(m, mu, a)] - an.dt[a][ni(m, mu, j)]
        })?,
        t_xx: tensor(dims, &[SU, SL, SL], |ix| pack.l(ix[0], ix[1], ix[2]) - pack.l(ix[0], ix[2], ix[1]))?,
        r_xx: tensor(dims, &[VU, SL, SL], |ix| {
            let (m, mu, i, j) = (ix[0] / p, ix[0] % p, ix[1], ix[2]);
            an.dx[j][ni(m, mu, i)] - an.dx[i][ni(m, mu, j)]
        })?,
        p_tv: tensor(dims, &[VU, TL, VL], |ix| {
            let (m, mu, a, j, b) = (ix[0] / p, ix[0] % p, ix[1], ix[2] / p, ix[2] % p);
            am.dv[ix[2]][mi(m, mu, a)] - kron(b, mu) * pack.g(m, j, a) + kron(m, j) * pack.h(b, mu, a)
        })?,
        p_xv: tensor(dims, &[SU, SL, VL], |ix| pack.c(ix[0], ix[1], ix[2] / p, ix[2] % p))?,
        p_vxv: tensor(dims, &[VU, SL, VL], |ix| {
            let (m, mu, i, j, b) = (ix[0] / p, ix[0] % p, ix[1], ix[2] / p, ix[2] % p);
            an.dv[ix[2]][ni(m, mu, i)] - kron(b, mu) * pack.l(m, j, i)
        })?,
        s_vv: tensor(dims, &[VU, VL, VL], |ix| {
            let (m, mu) = (ix[0] / p, ix[0] % p);
            let (i, a) = (ix[1] / p, ix[1] % p);
            let (j, b) = (ix[2] / p, ix[2] % p);
            kron(a, mu) * pack.c(m, i, j, b) - kron(b, mu) * pack.c(m, j, i, a)
        })?,
    })
}

/// The seven effective curvature families.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CurvatureTable {
    pub dims: Dims,
    /// `H^α_{ηβγ}`
    pub h_tt: DTensor,
    /// `R^l_{iβγ}`
    pub r_tt: DTensor,
    /// `R^l_{iβk}`
    pub r_tx: DTensor,
    /// `R^l_{ijk}`
    pub r_xx: DTensor,
    /// `P^{l(γ)}_{iβ(k)}`
    pub p_tv: DTensor,
    /// `P^{l(γ)}_{ij(k)}`
    pub p_xv: DTensor,
    /// `S^{l(β)(γ)}_{i(j)(k)}`
    pub s_vv: DTensor,
}

impl CurvatureTable {
    pub fn families(&self) -> [(&'static str, &DTensor); 7] {
        [
            ("H_tt", &self.h_tt),
            ("R_tt", &self.r_tt),
            ("R_tx", &self.r_tx),
            ("R_xx", &self.r_xx),
            ("P_tv", &self.p_tv),
            ("P_xv", &self.p_xv),
            ("S_vv", &self.s_vv),
        ]
    }

    pub fn get(&self, family: &str) -> Option<&DTensor> {
        self.families().into_iter().find(|(k, _)| *k == family).map(|(_, t)| t)
    }

    /// `δ^α_η X^l_{i…}` with the first two slots promoted to vertical ones,
    /// plus `δ^l_i H^α_{ηβγ}` when `with_h`.
    fn lift(&self, base: &DTensor, with_h: bool) -> Result<DTensor> {
        let dims = self.dims;
        let (p, n) = (dims.p, dims.n);
        let mut kinds = vec![VU, VL];
        kinds.extend(base.slots[2..].iter().map(|s| s.kind));
        let tail: usize = base.slots[2..].iter().map(|s| s.extent).product();
        let mut out = DTensor::new(slots(dims, &kinds))?;
        for l in 0..n {
            for eta in 0..p {
                for i in 0..n {
                    for a in 0..p {
                        let row = ((l * p + eta) * n * p + i * p + a) * tail;
                        for r in 0..tail {
                            let mut v = kron(a, eta) * base.data[(l * n + i) * tail + r];
                            if with_h && l == i {
                                v += self.h_tt.data[(a * p + eta) * tail + r];
                            }
                            out.data[row + r] = v;
                        }
                    }
                }
            }
        }
        Ok(out)
    }

    /// The v-column of the full table, each entry assembled from the
    /// effective families by Kronecker lifts.
    pub fn v_column(&self) -> Result<[(&'static str, DTensor); 6]> {
        Ok([
            ("R_tt", self.lift(&self.r_tt, true)?),
            ("R_tx", self.lift(&self.r_tx, false)?),
            ("R_xx", self.lift(&self.r_xx, false)?),
            ("P_tv", self.lift(&self.p_tv, false)?),
            ("P_xv", self.lift(&self.p_xv, false)?),
            ("S_vv", self.lift(&self.s_vv, false)?),
        ])
    }
}

/// Curvature of the connection `k` over `conn`. `torsion` supplies the
/// `R` and `P` torsions in the `C`-terms.
pub fn curvature_table<K, C>(k: &K, conn: &C, pt: &JetPoint, torsion: &TorsionTable) -> Result<CurvatureTable>
where
    K: HNormalConnection + ?Sized,
    C: NonlinearConnection + ?Sized,
{
    let dims = k.dims();
    let (p, n) = (dims.p, dims.n);
    let np = n * p;
    let pack = crate::cartan::pack(k, pt)?;
    let aj = adapted_jacobian(&CoefficientField(k), conn, pt)?;
    let [oh, og, ol, oc] = coefficient_offsets(dims);
    let csize = n * n * np;
    let block = |v: &[f64], off: usize, len: usize| v[off..off + len].to_vec();

    // covariant derivatives of C with valence (SU, SL, VL)
    let cov_c = |dir: Direction| -> Result<Vec<f64>> {
        let mut out = block(aj.along(dir, p), oc, csize);
        add_connection_terms(&[SU, SL, VL], &pack, dir, &pack.ck.data, &mut out)?;
        Ok(out)
    };
    let c_t: Vec<Vec<f64>> = (0..p).map(|b| cov_c(Direction::Temporal(b))).collect::<Result<_>>()?;
    let c_x: Vec<Vec<f64>> = (0..n).map(|j| cov_c(Direction::Spatial(j))).collect::<Result<_>>()?;

    let dg = |dir: Direction, l: usize, i: usize, b: usize| aj.along(dir, p)[og + (l * n + i) * p + b];
    let dl = |dir: Direction, l: usize, i: usize, j: usize| aj.along(dir, p)[ol + (l * n + i) * n + j];
    let dc = |kc: usize, l: usize, i: usize, jb: usize| aj.dv[kc][oc + (l * n + i) * np + jb];
    // C^{l(μ)}_{i(m)} X^{(m)}_{(μ)…}, with X's first slot at (m·p+μ)
    let c_contract = |x: &DTensor, l: usize, i: usize, tail: usize, r: usize| -> f64 {
        let mut s = 0.0;
        for m in 0..n {
            for mu in 0..p {
                s += pack.c(l, i, m, mu) * x.data[(m * p + mu) * tail + r];
            }
        }
        s
    };

    let hblocks: Vec<Vec<f64>> = (0..p).map(|c| block(&aj.dt[c], oh, p * p * p)).collect();
    let h_tt = riemann(&pack.hbar.data, &hblocks, p);
    let lblocks: Vec<Vec<f64>> = (0..n).map(|c| block(&aj.dx[c], ol, n * n * n)).collect();
    let r_base = riemann(&pack.lk.data, &lblocks, n);

    Ok(CurvatureTable {
        dims,
        h_tt: DTensor::from_data(slots(dims, &[TU, TL, TL, TL]), h_tt)?,
        r_tt: tensor(dims, &[SU, SL, TL, TL], |ix| {
            let (l, i, b, c) = (ix[0], ix[1], ix[2], ix[3]);
            let mut s = dg(Direction::Temporal(c), l, i, b) - dg(Direction::Temporal(b), l, i, c);
            for m in 0..n {
                s += pack.g(m, i, b) * pack.g(l, m, c) - pack.g(m, i, c) * pack.g(l, m, b);
            }
            s + c_contract(&torsion.r_tt, l, i, p * p, b * p + c)
        })?,
        r_tx: tensor(dims, &[SU, SL, TL, SL], |ix| {
            let (l, i, b, k) = (ix[0], ix[1], ix[2], ix[3]);
            let mut s = dg(Direction::Spatial(k), l, i, b) - dl(Direction::Temporal(b), l, i, k);
            for m in 0..n {
                s += pack.g(m, i, b) * pack.l(l, m, k) - pack.l(m, i, k) * pack.g(l, m, b);
            }
            s + c_contract(&torsion.r_tx, l, i, p * n, b * n + k)
        })?,
        r_xx: tensor(dims, &[SU, SL, SL, SL], |ix| {
            let (l, i, j, k) = (ix[0], ix[1], ix[2], ix[3]);
            r_base[((l * n + i) * n + j) * n + k] + c_contract(&torsion.r_xx, l, i, n * n, j * n + k)
        })?,
        p_tv: tensor(dims, &[SU, SL, TL, VL], |ix| {
            let (l, i, b, kc) = (ix[0], ix[1], ix[2], ix[3]);
            dg(Direction::Vertical(kc / p, kc % p), l, i, b) - c_t[b][(l * n + i) * np + kc]
                + c_contract(&torsion.p_tv, l, i, p * np, b * np + kc)
        })?,
        p_xv: tensor(dims, &[SU, SL, SL, VL], |ix| {
            let (l, i, j, kc) = (ix[0], ix[1], ix[2], ix[3]);
            dl(Direction::Vertical(kc / p, kc % p), l, i, j) - c_x[j][(l * n + i) * np + kc]
                + c_contract(&torsion.p_vxv, l, i, n * np, j * np + kc)
        })?,
        s_vv: tensor(dims, &[SU, SL, VL, VL], |ix| {
            let (l, i, jb, kc) = (ix[0], ix[1], ix[2], ix[3]);
            let mut s = dc(kc, l, i, jb) - dc(jb, l, i, kc);
            for m in 0..n {
                s += pack.c(m, i, jb / p, jb % p) * pack.c(l, m, kc / p, kc % p)
                    - pack.c(m, i, kc / p, kc % p) * pack.c(l, m, jb / p, jb % p);
            }
            s
        })?,
    })
}

/// What the tables' zero cells depend on besides `p` and the pack kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum InstanceClass {
    General,
    /// Electrodynamics form with `g = g(x)`.
    AutonomousElectrodynamics,
}

impl InstanceClass {
    pub fn of(space: &MultiTimeSpace) -> Self {
        if space.is_autonomous_electrodynamics() {
            InstanceClass::AutonomousElectrodynamics
        } else {
            InstanceClass::General
        }
    }
}

/// Torsion families the tables declare zero.
pub fn torsion_zero_families(p: usize, kind: PackKind, class: InstanceClass) -> Vec<&'static str> {
    match (kind, class) {
        (PackKind::Berwald, InstanceClass::AutonomousElectrodynamics) => {
            vec!["T_tx", "R_tx", "T_xx", "P_tv", "P_xv", "P_vxv", "S_vv"]
        }
        // a t-dependent g feeds ∂γ/∂t into R_tx
        (PackKind::Berwald, InstanceClass::General) => vec!["T_tx", "T_xx", "P_tv", "P_xv", "P_vxv", "S_vv"],
        (PackKind::Cartan, InstanceClass::AutonomousElectrodynamics) => {
            vec!["T_tx", "T_xx", "P_tv", "P_xv", "P_vxv", "S_vv"]
        }
        (PackKind::Cartan, InstanceClass::General) if p == 1 => vec!["R_tt", "T_xx", "S_vv"],
        (PackKind::Cartan, InstanceClass::General) => vec!["T_xx", "P_xv", "P_vxv", "S_vv"],
    }
}

/// Curvature families the tables declare zero.
pub fn curvature_zero_families(p: usize, kind: PackKind, class: InstanceClass) -> Vec<&'static str> {
    match (kind, class) {
        (_, InstanceClass::AutonomousElectrodynamics) => vec!["R_tt", "R_tx", "P_tv", "P_xv", "S_vv"],
        (PackKind::Berwald, InstanceClass::General) => vec!["R_tt", "P_tv", "P_xv", "S_vv"],
        (PackKind::Cartan, InstanceClass::General) if p == 1 => vec!["H_tt", "R_tt"],
        (PackKind::Cartan, InstanceClass::General) => vec!["P_tv", "P_xv", "S_vv"],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellReport {
    pub table: &'static str,
    pub family: &'static str,
    pub max_abs: f64,
    pub worst_point: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ZeroAudit {
    pub kind: PackKind,
    pub class: InstanceClass,
    pub cells: Vec<CellReport>,
    pub max_abs: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Evaluates the full tables at every point and reports the largest entry
/// of each family declared zero for `(p, kind, class)`.
pub fn table_zero_audit<K, C>(k: &K, conn: &C, class: InstanceClass, points: &[JetPoint], tolerance: f64) -> Result<ZeroAudit>
where
    K: HNormalConnection + ?Sized,
    C: NonlinearConnection + ?Sized,
{
    use rayon::prelude::*;
    let dims = k.dims();
    let kind = k.kind();
    let tz = torsion_zero_families(dims.p, kind, class);
    let cz = curvature_zero_families(dims.p, kind, class);
    let per_point: Vec<Vec<f64>> = points
        .par_iter()
        .map(|pt| {
            let pk = crate::cartan::pack(k, pt)?;
            let tor = torsion_table(&pk, conn, pt)?;
            let cur = curvature_table(k, conn, pt, &tor)?;
            let mut v: Vec<f64> = tz.iter().map(|f| tor.get(f).map_or(0.0, DTensor::max_abs)).collect();
            v.extend(cz.iter().map(|f| cur.get(f).map_or(0.0, DTensor::max_abs)));
            Ok(v)
        })
        .collect::<Result<_>>()?;
    let names = tz.iter().map(|f| ("torsion", *f)).chain(cz.iter().map(|f| ("curvature", *f)));
    let mut cells = Vec::new();
    for (c, (table, family)) in names.enumerate() {
        let (worst_point, max_abs) = per_point
            .iter()
            .map(|v| v[c])
            .enumerate()
            .fold((0, 0.0f64), |acc, (i, x)| if x > acc.1 { (i, x) } else { acc });
        cells.push(CellReport { table, family, max_abs, worst_point });
    }
    let max_abs = cells.iter().map(|c| c.max_abs).fold(0.0, f64::max);
    Ok(ZeroAudit {
        kind,
        class,
        cells,
        max_abs,
        tolerance,
        passed: max_abs <= tolerance,
    })
}

/// Distance between a generic table entry and a closed form.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormCheck {
    pub name: &'static str,
    pub deviation: f64,
}

fn check(name: &'static str, a: &DTensor, b: &[f64]) -> ClosedFormCheck {
    let deviation = a.data.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    ClosedFormCheck { name, deviation }
}

/// `F^m_{i(μ)} = (g^{mq}/2)[∂g_{qi}/∂t^μ + ½ h_{μβ}U^{(β)}_{(q)i}]` at
/// `(m·n + i)·p + μ`.
struct FField<'a>(&'a MultiTimeSpace);

impl TensorField for FField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        let ej = ElectroJet::new(self.0, pt)?;
        let h = self.0.h().eval(pt)?;
        let (p, n) = (ej.p, ej.n);
        let mut out = vec![S::zero(); n * n * p];
        for m in 0..n {
            for i in 0..n {
                for mu in 0..p {
                    let mut s = S::zero();
                    for q in 0..n {
                        let mut inner = ej.dg_dt(mu, q, i);
                        for b in 0..p {
                            inner += (h[mu * p + b] * ej.u_curl(b, q, i)).scale(0.5);
                        }
                        s += ej.ginv[m * n + q] * inner;
                    }
                    out[(m * n + i) * p + mu] = s.scale(0.5);
                }
            }
        }
        Ok(out)
    }
}

/// `U^{(η)}_{(k)j}` at `(η·n + k)·n + j`.
struct UCurlField<'a>(&'a MultiTimeSpace);

impl TensorField for UCurlField<'_> {
    fn eval<S: Scalar>(&self, pt: &JetPoint<S>) -> Result<Vec<S>> {
        let ej = ElectroJet::new(self.0, pt)?;
        let (p, n) = (ej.p, ej.n);
        let mut out = Vec::with_capacity(p * n * n);
        for e in 0..p {
            for k in 0..n {
                for j in 0..n {
                    out.push(ej.u_curl(e, k, j));
                }
            }
        }
        Ok(out)
    }
}

/// `−H^γ_{μαβ}x^m_γ` in the `R^{(m)}_{(μ)αβ}` layout.
fn temporal_curvature_form(h: &TemporalMetric, pt: &JetPoint) -> Result<Vec<f64>> {
    let dims = pt.dims();
    let (p, n) = (dims.p, dims.n);
    let hc = h_curvature(h, pt)?;
    let mut out = vec![0.0; n * p * p * p];
    for m in 0..n {
        for mu in 0..p {
            for a in 0..p {
                for b in 0..p {
                    out[((m * p + mu) * p + a) * p + b] =
                        -(0..p).map(|g| hc[((g * p + mu) * p + a) * p + b] * pt.vel(m, g)).sum::<f64>();
                }
            }
        }
    }
    Ok(out)
}

/// `r^m_{kij}x^k_μ` in the `R^{(m)}_{(μ)ij}` layout.
fn spatial_curvature_form<M: SpatialMetric + ?Sized>(g: &M, pt: &JetPoint) -> Result<Vec<f64>> {
    let dims = pt.dims();
    let (p, n) = (dims.p, dims.n);
    let r = g_curvature(g, pt)?;
    let mut out = vec![0.0; n * p * n * n];
    for m in 0..n {
        for mu in 0..p {
            for i in 0..n {
                for j in 0..n {
                    out[((m * p + mu) * n + i) * n + j] =
                        (0..n).map(|k| r[((m * n + k) * n + i) * n + j] * pt.vel(k, mu)).sum::<f64>();
                }
            }
        }
    }
    Ok(out)
}

/// Closed forms of the Cartan torsion against the generic table.
///
/// `p = 1`: `T^m_{1j} = P^{(m)(1)}_{(1)1(j)} = −G^m_{j1}` and
/// `R^{(m)}_{(1)1j} = −∂N/∂t + H^1_{11}[N − (∂N/∂y^k)y^k]`.
/// `p ≥ 2` (electrodynamics form): `R_{αβ} = −H^γ_{μαβ}x^m_γ`, the `F`-form
/// of `R_{αj}` and `R_{ij} = r^m_{kij}x^k_μ + F^m_{i(μ)|j} − F^m_{j(μ)|i}`.
/// Autonomous electrodynamics additionally gets the `U`-forms.
pub fn cartan_torsion_closed_forms<C: NonlinearConnection + ?Sized>(
    space: &MultiTimeSpace,
    pack: &LinearConnectionPack,
    conn: &C,
    pt: &JetPoint,
    table: &TorsionTable,
) -> Result<Vec<ClosedFormCheck>> {
    let dims = space.dims();
    let (p, n) = (dims.p, dims.n);
    let mut out = Vec::new();
    let minus_g = |m: usize, a: usize, j: usize| -pack.g(m, j, a);
    let tg: Vec<f64> = table.t_tx.indices().map(|ix| minus_g(ix[0], ix[1], ix[2])).collect();
    out.push(check("T_tx = -G", &table.t_tx, &tg));
    let ptv: Vec<f64> = table
        .p_tv
        .indices()
        .map(|ix| kron(ix[2] % p, ix[0] % p) * minus_g(ix[0] / p, ix[1], ix[2] / p))
        .collect();
    out.push(check("P_tv = -δG", &table.p_tv, &ptv));

    let mut coords = t_coords(dims);
    coords.extend(x_coords(dims));
    coords.extend((0..n).flat_map(|i| (0..p).map(move |a| Coord::V(i, a))));
    let (nv, nd) = jacobian(&NField(conn), pt, &coords)?;
    let dn_dt = |a: usize, idx: usize| nd[a][idx];
    let dn_dv = |jb: usize, idx: usize| nd[p + n + jb][idx];
    let hc = h_christoffel(space.h(), pt)?;

    if p == 1 {
        let want: Vec<f64> = table
            .r_tx
            .indices()
            .map(|ix| {
                let idx = ix[0] * n + ix[2];
                let euler: f64 = (0..n).map(|k| dn_dv(k, idx) * pt.v[k]).sum();
                -dn_dt(0, idx) + hc[0] * (nv[idx] - euler)
            })
            .collect();
        out.push(check("R_tx p=1 form", &table.r_tx, &want));
        return Ok(out);
    }

    out.push(check("R_tt = -Hx", &table.r_tt, &temporal_curvature_form(space.h(), pt)?));
    let ej = ElectroJet::new(space, pt)?;
    let h = space.h().eval(pt)?;
    let want: Vec<f64> = table
        .r_tx
        .indices()
        .map(|ix| {
            let (m, mu, a, j) = (ix[0] / p, ix[0] % p, ix[1], ix[2]);
            let mut s = -dn_dt(a, (m * p + mu) * n + j);
            for k in 0..n {
                for b in 0..p {
                    let mut inner = ej.dg_dt(b, j, k);
                    for c in 0..p {
                        inner += 0.5 * h[b * p + c] * ej.u_curl(c, k, j);
                    }
                    s += 0.5 * ej.ginv[m * n + k] * hc[(b * p + mu) * p + a] * inner;
                }
            }
            s
        })
        .collect();
    out.push(check("R_tx F-form", &table.r_tx, &want));

    let gamma = ej.gamma();
    let gm = |l: usize, j: usize, k: usize| gamma[(l * n + j) * n + k];
    let (f, df) = jacobian(&FField(space), pt, &x_coords(dims))?;
    let fi = |m: usize, i: usize, mu: usize| (m * n + i) * p + mu;
    // F^m_{i(μ)|j}
    let f_bar = |m: usize, i: usize, mu: usize, j: usize| {
        let mut s = df[j][fi(m, i, mu)];
        for l in 0..n {
            s += gm(m, l, j) * f[fi(l, i, mu)] - gm(l, i, j) * f[fi(m, l, mu)];
        }
        s
    };
    let rv = spatial_curvature_form(space, pt)?;
    let want: Vec<f64> = table
        .r_xx
        .indices()
        .enumerate()
        .map(|(q, ix)| {
            let (m, mu, i, j) = (ix[0] / p, ix[0] % p, ix[1], ix[2]);
            rv[q] + f_bar(m, i, mu, j) - f_bar(m, j, mu, i)
        })
        .collect();
    out.push(check("R_xx F-form", &table.r_xx, &want));

    if InstanceClass::of(space) == InstanceClass::AutonomousElectrodynamics {
        let (uc, duc_t) = jacobian(&UCurlField(space), pt, &t_coords(dims))?;
        let (_, duc_x) = jacobian(&UCurlField(space), pt, &x_coords(dims))?;
        let ui = |e: usize, k: usize, j: usize| (e * n + k) * n + j;
        let want: Vec<f64> = table
            .r_tx
            .indices()
            .map(|ix| {
                let (m, mu, a, j) = (ix[0] / p, ix[0] % p, ix[1], ix[2]);
                let mut s = 0.0;
                for e in 0..p {
                    for k in 0..n {
                        let mut inner = duc_t[a][ui(e, k, j)];
                        for c in 0..p {
                            inner += hc[(e * p + a) * p + c] * uc[ui(c, k, j)];
                        }
                        s += h[mu * p + e] * ej.ginv[m * n + k] * inner;
                    }
                }
                -0.25 * s
            })
            .collect();
        out.push(check("R_tx U-form", &table.r_tx, &want));
        // U^{(η)}_{(k)i|j}
        let u_bar = |e: usize, k: usize, i: usize, j: usize| {
            let mut s = duc_x[j][ui(e, k, i)];
            for l in 0..n {
                s -= gm(l, k, j) * uc[ui(e, l, i)] + gm(l, i, j) * uc[ui(e, k, l)];
            }
            s
        };
        let want: Vec<f64> = table
            .r_xx
            .indices()
            .enumerate()
            .map(|(q, ix)| {
                let (m, mu, i, j) = (ix[0] / p, ix[0] % p, ix[1], ix[2]);
                let mut s = 0.0;
                for e in 0..p {
                    for k in 0..n {
                        s += h[mu * p + e] * ej.ginv[m * n + k] * (u_bar(e, k, i, j) - u_bar(e, k, j, i));
                    }
                }
                rv[q] + 0.25 * s
            })
            .collect();
        out.push(check("R_xx U-form", &table.r_xx, &want));
    }
    Ok(out)
}

/// Berwald torsion: `R^{(m)}_{(μ)αβ} = −H^γ_{μαβ}x^m_γ`,
/// `R^{(m)}_{(μ)ij} = r^m_{kij}x^k_μ`.
pub fn berwald_torsion_closed_forms<M: SpatialMetric + ?Sized>(
    h: &TemporalMetric,
    g: &M,
    pt: &JetPoint,
    table: &TorsionTable,
) -> Result<Vec<ClosedFormCheck>> {
    Ok(vec![
        check("R_tt = -Hx", &table.r_tt, &temporal_curvature_form(h, pt)?),
        check("R_xx = r x", &table.r_xx, &spatial_curvature_form(g, pt)?),
    ])
}

/// `H^α_{ηβγ}` and `R^l_{ijk}` against the curvatures of `h` and `g`; valid
/// whenever `L` is the Christoffel symbol of `g` and `C` vanishes (Berwald,
/// Cartan with `p ≥ 2` or autonomous).
pub fn curvature_closed_forms<M: SpatialMetric + ?Sized>(
    h: &TemporalMetric,
    g: &M,
    pt: &JetPoint,
    table: &CurvatureTable,
) -> Result<Vec<ClosedFormCheck>> {
    Ok(vec![
        check("H_tt = h curvature", &table.h_tt, &h_curvature(h, pt)?),
        check("R_xx = r", &table.r_xx, &g_curvature(g, pt)?),
    ])
}

/// Largest violation of the table antisymmetries.
pub fn antisymmetry_defects(tor: &TorsionTable, cur: &CurvatureTable) -> BTreeMap<&'static str, f64> {
    let swap_last = |t: &DTensor| -> f64 {
        let r = t.slots.len();
        let e = t.slots[r - 1].extent;
        let mut worst = 0.0f64;
        for (k, idx) in t.indices().enumerate() {
            let mut sw = idx.clone();
            sw.swap(r - 2, r - 1);
            if sw[r - 1] < e {
                worst = worst.max((t.data[k] + t.get(&sw).unwrap_or(0.0)).abs());
            }
        }
        worst
    };
    let mut m = BTreeMap::new();
    m.insert("torsion R_tt", swap_last(&tor.r_tt));
    m.insert("torsion R_xx", swap_last(&tor.r_xx));
    m.insert("torsion T_xx", swap_last(&tor.t_xx));
    m.insert("torsion S_vv", swap_last(&tor.s_vv));
    m.insert("curvature H_tt", swap_last(&cur.h_tt));
    m.insert("curvature R_tt", swap_last(&cur.r_tt));
    m.insert("curvature R_xx", swap_last(&cur.r_xx));
    m.insert("curvature S_vv", swap_last(&cur.s_vv));
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{berwald_connection, cartan_connection, pack};
    use crate::connection::CanonicalConnection;
    use crate::dsl::{parse, Expr};
    use crate::lagrangian::Lagrangian;
    use crate::metric::ExplicitMetric;
    use crate::sampling::SamplingBox;

    fn e(d: Dims, s: &str) -> Expr {
        parse(s, d).unwrap()
    }

    fn sphere(d: Dims) -> ExplicitMetric {
        ExplicitMetric::new(d, vec![e(d, "1"), e(d, "0"), e(d, "0"), e(d, "sin(x1)^2")]).unwrap()
    }

    fn sphere_box(d: Dims) -> SamplingBox {
        let mut r = vec![(-1.0, 1.0); d.coord_count()];
        r[d.p] = (0.4, 2.7);
        SamplingBox::new(d, r).unwrap()
    }

    fn tables<K: HNormalConnection, C: NonlinearConnection>(k: &K, c: &C, pt: &JetPoint) -> (LinearConnectionPack, TorsionTable, CurvatureTable) {
        let pk = pack(k, pt).unwrap();
        let t = torsion_table(&pk, c, pt).unwrap();
        let r = curvature_table(k, c, pt, &t).unwrap();
        (pk, t, r)
    }

    fn assert_checks(cs: &[ClosedFormCheck], tol: f64) {
        for c in cs {
            assert!(c.deviation <= tol, "{} off by {}", c.name, c.deviation);
        }
    }

    #[test]
    fn flat_everything_vanishes() {
        let d = Dims::new(2, 2).unwrap();
        let g = ExplicitMetric::new(d, vec![e(d, "1"), e(d, "0"), e(d, "0"), e(d, "1")]).unwrap();
        let s = MultiTimeSpace::harmonic(d, g, TemporalMetric::flat((2, 0)).unwrap()).unwrap();
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let pt = JetPoint::new(d, vec![0.3, 0.1], vec![0.2, 0.5], vec![1.0, -2.0, 0.5, 0.7]).unwrap();
        let (_, t, r) = tables(&k, &conn, &pt);
        assert!(t.families().iter().all(|(_, x)| x.max_abs() == 0.0));
        assert!(r.families().iter().all(|(_, x)| x.max_abs() == 0.0));
    }

    #[test]
    fn sphere_curvature_entry() {
        let d = Dims::new(1, 2).unwrap();
        let s = MultiTimeSpace::harmonic(d, sphere(d), TemporalMetric::flat((1, 0)).unwrap()).unwrap();
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let x1: f64 = 1.1;
        let pt = JetPoint::new(d, vec![0.2], vec![x1, 0.4], vec![0.3, -0.6]).unwrap();
        let (_, t, r) = tables(&k, &conn, &pt);
        assert!((r.r_xx.get(&[0, 1, 1, 0]).unwrap() - x1.sin().powi(2)).abs() < 1e-12);
        assert_eq!(r.h_tt.max_abs(), 0.0);
        // R^{(m)}_{(1)ij} = r^m_{kij} y^k
        assert_checks(&berwald_torsion_closed_forms(s.h(), &s, &pt, &t).unwrap(), 1e-12);
        assert_checks(&curvature_closed_forms(s.h(), &s, &pt, &r).unwrap(), 1e-12);
    }

    #[test]
    fn autonomous_electrodynamics_p2() {
        let d = Dims::new(2, 2).unwrap();
        let h = TemporalMetric::from_entries(2, vec![e(d, "exp(t1)"), e(d, "0"), e(d, "0"), e(d, "1 + t1^2")], (2, 0)).unwrap();
        let u = vec![e(d, "x2*t2"), e(d, "x1^2"), e(d, "x1*x2"), e(d, "t1*x1")];
        let s = MultiTimeSpace::new(d, Lagrangian::Electrodynamics { g: sphere(d), u: Some(u), f: Some(e(d, "x1")) }, h).unwrap();
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let pts = sphere_box(d).samples(4, 3);
        let audit = table_zero_audit(&k, &conn, InstanceClass::of(&s), &pts, 1e-7).unwrap();
        assert!(audit.passed, "{audit:?}");
        for pt in &pts {
            let (pk, t, r) = tables(&k, &conn, pt);
            assert!(t.r_tx.max_abs() > 1e-3 && t.r_tt.max_abs() > 1e-3);
            assert_checks(&cartan_torsion_closed_forms(&s, &pk, &conn, pt, &t).unwrap(), 1e-8);
            assert_checks(&curvature_closed_forms(s.h(), &s, pt, &r).unwrap(), 1e-9);
            assert!(antisymmetry_defects(&t, &r).values().all(|&v| v < 1e-9));
        }
    }

    #[test]
    fn nonautonomous_p2_closed_forms() {
        let d = Dims::new(2, 2).unwrap();
        let h = TemporalMetric::from_entries(2, vec![e(d, "1"), e(d, "0.2*t2"), e(d, "0.2*t2"), e(d, "exp(t1)")], (2, 0)).unwrap();
        let g = ExplicitMetric::new(d, vec![e(d, "2 + t1*x2"), e(d, "0.1*t2"), e(d, "0.1*t2"), e(d, "1 + x1^2 + t2^2")]).unwrap();
        let u = vec![e(d, "x2*t2"), e(d, "x1^2"), e(d, "x1*x2 + t1"), e(d, "t1*x1")];
        let s = MultiTimeSpace::new(d, Lagrangian::Electrodynamics { g, u: Some(u), f: None }, h).unwrap();
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let pts = SamplingBox::uniform(d, -0.5, 0.5).unwrap().samples(4, 5);
        let audit = table_zero_audit(&k, &conn, InstanceClass::General, &pts, 1e-7).unwrap();
        assert!(audit.passed, "{audit:?}");
        for pt in &pts {
            let (pk, t, r) = tables(&k, &conn, pt);
            assert!(t.t_tx.max_abs() > 1e-3 && r.r_tt.max_abs() > 1e-4);
            assert_checks(&cartan_torsion_closed_forms(&s, &pk, &conn, pt, &t).unwrap(), 1e-8);
            assert_checks(&curvature_closed_forms(s.h(), &s, pt, &r).unwrap(), 1e-9);
        }
        // the autonomous zero pattern does not hold here
        let strict = table_zero_audit(&k, &conn, InstanceClass::AutonomousElectrodynamics, &pts, 1e-7).unwrap();
        assert!(!strict.passed);

        let Lagrangian::Electrodynamics { g, .. } = s.lagrangian() else { unreachable!() };
        let b = berwald_connection(d, s.h(), g).unwrap();
        assert!(table_zero_audit(&b, b.nonlinear(), InstanceClass::General, &pts, 1e-7).unwrap().passed);
        let (_, t, r) = tables(&b, b.nonlinear(), &pts[0]);
        assert!(t.r_tx.max_abs() > 1e-3 && r.r_tx.max_abs() > 1e-3);
    }

    #[test]
    fn p1_lagrange_space() {
        let d = Dims::new(1, 2).unwrap();
        let h = TemporalMetric::from_entries(1, vec![e(d, "exp(2*t1)")], (1, 0)).unwrap();
        let l = e(d, "exp(-2*t1)*((1 + x2^2)*v1_1^2 + v2_1^2 + 0.1*v1_1^4 + t1*v1_1^2*v2_1^2) + x1*v2_1");
        let s = MultiTimeSpace::new(d, Lagrangian::Expression(l), h).unwrap();
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let pts = SamplingBox::uniform(d, -0.6, 0.6).unwrap().samples(3, 1);
        let audit = table_zero_audit(&k, &conn, InstanceClass::General, &pts, 1e-7).unwrap();
        assert!(audit.passed, "{audit:?}");
        // T^m_{1j} = −G^m_{j1} is generically nonzero and not audited
        assert!(!audit.cells.iter().any(|c| c.family == "T_tx"));
        for pt in &pts {
            let (pk, t, r) = tables(&k, &conn, pt);
            assert!(t.t_tx.max_abs() > 1e-3 && r.s_vv.max_abs() > 1e-4 && r.p_xv.max_abs() > 1e-4);
            assert_checks(&cartan_torsion_closed_forms(&s, &pk, &conn, pt, &t).unwrap(), 1e-8);
            assert!(antisymmetry_defects(&t, &r).values().all(|&v| v < 1e-9));
        }
    }

    #[test]
    fn berwald_metric_pair() {
        let d = Dims::new(2, 2).unwrap();
        let h = TemporalMetric::from_entries(2, vec![e(d, "exp(t2)"), e(d, "0"), e(d, "0"), e(d, "1 + t1^2")], (2, 0)).unwrap();
        let g = sphere(d);
        let b = berwald_connection(d, &h, &g).unwrap();
        let pts = sphere_box(d).samples(4, 8);
        let audit = table_zero_audit(&b, b.nonlinear(), InstanceClass::General, &pts, 1e-7).unwrap();
        assert!(audit.passed, "{audit:?}");
        for pt in &pts {
            let (_, t, r) = tables(&b, b.nonlinear(), pt);
            assert!(t.r_xx.max_abs() > 1e-3);
            assert_checks(&berwald_torsion_closed_forms(&h, &g, pt, &t).unwrap(), 1e-10);
            assert_checks(&curvature_closed_forms(&h, &g, pt, &r).unwrap(), 1e-10);
        }
    }

    #[test]
    fn delta_lifts() {
        let d = Dims::new(2, 1).unwrap();
        let h = TemporalMetric::from_entries(2, vec![e(d, "exp(t2)"), e(d, "0"), e(d, "0"), e(d, "1 + t1^2")], (2, 0)).unwrap();
        let g = ExplicitMetric::new(d, vec![e(d, "1 + t1^2 + x1^2")]).unwrap();
        let s = MultiTimeSpace::harmonic(d, g, h).unwrap();
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let pt = JetPoint::new(d, vec![0.3, 0.4], vec![0.2], vec![0.5, -0.1]).unwrap();
        let (_, _, r) = tables(&k, &conn, &pt);
        let v = r.v_column().unwrap();
        let lifted = &v[0].1;
        for eta in 0..2 {
            for a in 0..2 {
                for b in 0..2 {
                    for c in 0..2 {
                        let want = kron(a, eta) * r.r_tt.get(&[0, 0, b, c]).unwrap() + r.h_tt.get(&[a, eta, b, c]).unwrap();
                        assert_eq!(lifted.get(&[eta, a, b, c]).unwrap(), want);
                    }
                }
            }
        }
        assert_eq!(v[2].1.get(&[1, 0, 0, 0]).unwrap(), 0.0);
    }
}
