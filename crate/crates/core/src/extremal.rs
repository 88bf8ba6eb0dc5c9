//! Extremals of the energy functional: RK4 integration for one time
//! parameter, finite-difference harmonic-map residuals on grids for several,
//! and trapezoidal actions.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::ScalarField;
use crate::connection::{euler_lagrange_residual, harmonic_defect, spray_core, JetMap, MapJet};
use crate::error::{Error, Result};
use crate::jet::{Dims, JetPoint, MultiIndexIter};
use crate::lagrangian::MultiTimeSpace;
use crate::linalg;
use crate::metric::h_christoffel;

/// Initial data and step control for a single-time extremal.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExtremalProblem {
    pub t0: f64,
    pub x0: Vec<f64>,
    pub y0: Vec<f64>,
    pub t_end: f64,
    pub dt: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub t: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Trajectory {
    pub points: Vec<TrajectoryPoint>,
    /// Largest Euler-Lagrange component at each point; empty when the
    /// trajectory has fewer than five points.
    pub el_residual: Vec<f64>,
    pub el_residual_max: f64,
    /// Why integration stopped early, if it did.
    pub aborted: Option<String>,
}

impl Trajectory {
    pub fn last(&self) -> &TrajectoryPoint {
        self.points.last().expect("trajectory holds its initial point")
    }
}

/// `x'' = H^1_{11} x' − 2h_{11}𝒢(t, x, x')`.
fn acceleration(space: &MultiTimeSpace, t: f64, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let pt = JetPoint::new(space.dims(), vec![t], x.to_vec(), y.to_vec())?;
    let h11 = space.h().eval(&pt)?[0];
    let hc = h_christoffel(space.h(), &pt)?[0];
    let core = spray_core(space, &pt)?;
    let out: Vec<f64> = y.iter().zip(&core.gc).map(|(yk, g)| hc * yk - 2.0 * h11 * g).collect();
    if out.iter().any(|a| !a.is_finite()) {
        return Err(Error::Invalid(format!("non-finite spray at t = {t}")));
    }
    Ok(out)
}

fn rk4_step(space: &MultiTimeSpace, t: f64, x: &[f64], y: &[f64], dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let axpy = |a: &[f64], s: f64, b: &[f64]| a.iter().zip(b).map(|(u, v)| u + s * v).collect::<Vec<_>>();
    let k1x = y.to_vec();
    let k1y = acceleration(space, t, x, y)?;
    let (x2, y2) = (axpy(x, dt / 2.0, &k1x), axpy(y, dt / 2.0, &k1y));
    let k2y = acceleration(space, t + dt / 2.0, &x2, &y2)?;
    let (x3, y3) = (axpy(x, dt / 2.0, &y2), axpy(y, dt / 2.0, &k2y));
    let k3y = acceleration(space, t + dt / 2.0, &x3, &y3)?;
    let (x4, y4) = (axpy(x, dt, &y3), axpy(y, dt, &k3y));
    let k4y = acceleration(space, t + dt, &x4, &y4)?;
    let n = x.len();
    let mut xn = vec![0.0; n];
    let mut yn = vec![0.0; n];
    for i in 0..n {
        xn[i] = x[i] + dt / 6.0 * (k1x[i] + 2.0 * y2[i] + 2.0 * y3[i] + y4[i]);
        yn[i] = y[i] + dt / 6.0 * (k1y[i] + 2.0 * k2y[i] + 2.0 * k3y[i] + k4y[i]);
    }
    Ok((xn, yn))
}

/// Fourth-order derivative stencil of a uniformly sampled sequence at `k`,
/// one-sided near the ends.
fn fd4(f: &[f64], k: usize, h: f64) -> f64 {
    let len = f.len();
    let c = if k >= 2 && k + 2 < len {
        -f[k + 2] + 8.0 * f[k + 1] - 8.0 * f[k - 1] + f[k - 2]
    } else if k == 0 {
        -25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]
    } else if k == 1 {
        -3.0 * f[0] - 10.0 * f[1] + 18.0 * f[2] - 6.0 * f[3] + f[4]
    } else if k == len - 1 {
        25.0 * f[k] - 48.0 * f[k - 1] + 36.0 * f[k - 2] - 16.0 * f[k - 3] + 3.0 * f[k - 4]
    } else {
        3.0 * f[k + 1] + 10.0 * f[k] - 18.0 * f[k - 1] + 6.0 * f[k - 2] - f[k - 3]
    };
    c / (12.0 * h)
}

/// Euler-Lagrange residual at every point, with `x''` from a fourth-order
/// difference of the velocities.
fn el_residuals(space: &MultiTimeSpace, pts: &[TrajectoryPoint], dt: f64) -> Result<Vec<f64>> {
    let dims = space.dims();
    if pts.len() < 5 {
        return Ok(Vec::new());
    }
    let n = dims.n;
    let cols: Vec<Vec<f64>> = (0..n).map(|i| pts.iter().map(|q| q.y[i]).collect()).collect();
    (0..pts.len())
        .into_par_iter()
        .map(|k| {
            let q = &pts[k];
            let jet = MapJet {
                t: vec![q.t],
                x: q.x.clone(),
                x1: q.y.clone(),
                x2: cols.iter().map(|c| fd4(c, k, dt)).collect(),
            };
            let r = euler_lagrange_residual(space, space.h(), &jet, dims)?;
            Ok(linalg::max_abs(&r))
        })
        .collect()
}

/// Classical RK4 on `(x, y)`. A failing spray evaluation stops the
/// integration and keeps the states computed so far.
pub fn integrate_extremal(space: &MultiTimeSpace, problem: &ExtremalProblem) -> Result<Trajectory> {
    let dims = space.dims();
    if dims.p != 1 {
        return Err(Error::Dimension(format!("extremal integration needs p = 1, got p = {}", dims.p)));
    }
    if problem.x0.len() != dims.n || problem.y0.len() != dims.n {
        return Err(Error::Dimension(format!("initial data must have {} components", dims.n)));
    }
    if !(problem.dt > 0.0 && problem.dt.is_finite() && problem.t_end > problem.t0) {
        return Err(Error::Invalid("need dt > 0 and t_end > t0".into()));
    }
    let steps = ((problem.t_end - problem.t0) / problem.dt).round().max(1.0) as usize;
    let dt = (problem.t_end - problem.t0) / steps as f64;
    let mut points = vec![TrajectoryPoint {
        t: problem.t0,
        x: problem.x0.clone(),
        y: problem.y0.clone(),
    }];
    let mut aborted = None;
    for k in 0..steps {
        let cur = points.last().expect("nonempty");
        match rk4_step(space, cur.t, &cur.x, &cur.y, dt) {
            Ok((x, y)) => points.push(TrajectoryPoint {
                t: problem.t0 + (k + 1) as f64 * dt,
                x,
                y,
            }),
            Err(e) => {
                aborted = Some(format!("step {k} at t = {}: {e}", cur.t));
                break;
            }
        }
    }
    let el_residual = el_residuals(space, &points, dt)?;
    let el_residual_max = el_residual.iter().copied().fold(0.0, f64::max);
    Ok(Trajectory {
        points,
        el_residual,
        el_residual_max,
        aborted,
    })
}

/// Trapezoidal `∫ L √|h| dt` along sampled `(t, x, x')`.
pub fn path_action<F: ScalarField + ?Sized>(l: &F, space: &MultiTimeSpace, pts: &[TrajectoryPoint]) -> Result<f64> {
    let dims = space.dims();
    let dens = pts
        .iter()
        .map(|q| {
            let pt = JetPoint::new(dims, vec![q.t], q.x.clone(), q.y.clone())?;
            let h = space.h().eval(&pt)?;
            Ok(l.eval(&pt)? * linalg::det(&h, 1).abs().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(pts
        .windows(2)
        .zip(dens.windows(2))
        .map(|(w, d)| 0.5 * (w[1].t - w[0].t) * (d[0] + d[1]))
        .sum())
}

/// Action of an integrated extremal.
pub fn action_value(space: &MultiTimeSpace, traj: &Trajectory) -> Result<f64> {
    path_action(space, space, &traj.points)
}

/// A map `T → M` sampled on a rectangular lattice; node values are stored
/// row-major over the lattice, `n` components per node.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridMap {
    dims: Dims,
    lo: Vec<f64>,
    spacing: Vec<f64>,
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl GridMap {
    pub fn new(dims: Dims, lo: Vec<f64>, spacing: Vec<f64>, shape: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if lo.len() != dims.p || spacing.len() != dims.p || shape.len() != dims.p {
            return Err(Error::Dimension(format!("grid needs {} axes", dims.p)));
        }
        if let Some(s) = shape.iter().find(|&&s| s < 5) {
            return Err(Error::Stencil(format!("grid axes need at least 5 nodes, got {s}")));
        }
        if spacing.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::Stencil("grid spacing must be positive".into()));
        }
        let nodes: usize = shape.iter().product();
        if values.len() != nodes * dims.n {
            return Err(Error::Dimension(format!("grid needs {} values, got {}", nodes * dims.n, values.len())));
        }
        Ok(GridMap { dims, lo, spacing, shape, values })
    }

    /// Samples `map` on `shape` nodes spanning `bounds` (inclusive).
    pub fn sample<M: JetMap + ?Sized>(map: &M, bounds: &[(f64, f64)], shape: &[usize]) -> Result<Self> {
        let dims = map.dims();
        if bounds.len() != dims.p || shape.len() != dims.p {
            return Err(Error::Dimension(format!("grid needs {} axes", dims.p)));
        }
        if shape.iter().any(|&s| s < 2) {
            return Err(Error::Stencil("grid axes need at least 5 nodes".into()));
        }
        let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let spacing: Vec<f64> = bounds.iter().zip(shape).map(|(b, &s)| (b.1 - b.0) / (s - 1) as f64).collect();
        let mut values = Vec::new();
        for idx in MultiIndexIter::new(shape.to_vec()) {
            let t: Vec<f64> = (0..dims.p).map(|a| lo[a] + idx[a] as f64 * spacing[a]).collect();
            values.extend(map.jet(&t)?.x);
        }
        Self::new(dims, lo, spacing, shape.to_vec(), values)
    }

    pub fn dims(&self) -> Dims {
        self.dims
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.shape).fold(0, |acc, (i, s)| acc * s + i)
    }

    pub fn t(&self, idx: &[usize]) -> Vec<f64> {
        (0..self.dims.p).map(|a| self.lo[a] + idx[a] as f64 * self.spacing[a]).collect()
    }

    pub fn value(&self, idx: &[usize]) -> &[f64] {
        let n = self.dims.n;
        let f = self.flat(idx);
        &self.values[f * n..(f + 1) * n]
    }

    fn shifted(&self, idx: &[usize], moves: &[(usize, isize)]) -> &[f64] {
        let mut j = idx.to_vec();
        for &(a, d) in moves {
            j[a] = (j[a] as isize + d) as usize;
        }
        self.value(&j)
    }

    fn is_interior(&self, idx: &[usize]) -> bool {
        idx.iter().zip(&self.shape).all(|(&i, &s)| i > 0 && i + 1 < s)
    }

    /// `x^i_α`, central in the interior and second-order one-sided on the
    /// boundary.
    fn first_derivatives(&self, idx: &[usize]) -> Vec<f64> {
        let (p, n) = (self.dims.p, self.dims.n);
        let mut x1 = vec![0.0; n * p];
        for a in 0..p {
            let h = self.spacing[a];
            for i in 0..n {
                let v = |d: isize| self.shifted(idx, &[(a, d)])[i];
                x1[i * p + a] = if idx[a] == 0 {
                    (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
                } else if idx[a] + 1 == self.shape[a] {
                    (3.0 * v(0) - 4.0 * v(-1) + v(-2)) / (2.0 * h)
                } else {
                    (v(1) - v(-1)) / (2.0 * h)
                };
            }
        }
        x1
    }

    /// Second-order central jet at an interior node.
    pub fn jet_at(&self, idx: &[usize]) -> Result<MapJet> {
        if !self.is_interior(idx) {
            return Err(Error::Stencil(format!("node {idx:?} is on the boundary")));
        }
        let (p, n) = (self.dims.p, self.dims.n);
        let x1 = self.first_derivatives(idx);
        let mut x2 = vec![0.0; n * p * p];
        for a in 0..p {
            for b in 0..p {
                for i in 0..n {
                    let d = if a == b {
                        let h = self.spacing[a];
                        (self.shifted(idx, &[(a, 1)])[i] - 2.0 * self.value(idx)[i] + self.shifted(idx, &[(a, -1)])[i]) / (h * h)
                    } else {
                        let s = |da: isize, db: isize| self.shifted(idx, &[(a, da), (b, db)])[i];
                        (s(1, 1) - s(1, -1) - s(-1, 1) + s(-1, -1)) / (4.0 * self.spacing[a] * self.spacing[b])
                    };
                    x2[(i * p + a) * p + b] = d;
                }
            }
        }
        Ok(MapJet {
            t: self.t(idx),
            x: self.value(idx).to_vec(),
            x1,
            x2,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NodeResidual {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarmonicResidual {
    pub nodes: Vec<NodeResidual>,
    pub max: f64,
    pub rms: f64,
}

/// `Δ_h x + 2𝒢` at every interior node of `grid`.
pub fn harmonic_residual(space: &MultiTimeSpace, grid: &GridMap) -> Result<HarmonicResidual> {
    let dims = space.dims();
    if dims.p < 2 {
        return Err(Error::Dimension("harmonic residuals need p ≥ 2; use integrate_extremal for p = 1".into()));
    }
    if grid.dims() != dims {
        return Err(Error::Dimension("grid dimensions differ from the space".into()));
    }
    let interior: Vec<Vec<usize>> = MultiIndexIter::new(grid.shape.clone()).filter(|i| grid.is_interior(i)).collect();
    let nodes = interior
        .par_iter()
        .map(|idx| {
            let jet = grid.jet_at(idx)?;
            let residual = harmonic_defect(space, &jet)?;
            Ok(NodeResidual {
                t: jet.t,
                x: jet.x,
                residual,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let all: Vec<f64> = nodes.iter().flat_map(|r| r.residual.iter().copied()).collect();
    let max = linalg::max_abs(&all);
    let rms = if all.is_empty() {
        0.0
    } else {
        (all.iter().map(|r| r * r).sum::<f64>() / all.len() as f64).sqrt()
    };
    Ok(HarmonicResidual { nodes, max, rms })
}

/// Tensor-product trapezoidal `∫ L √|det h| dt¹…dt^p` over the grid, with
/// `x^i_α` from finite differences.
pub fn grid_action(space: &MultiTimeSpace, grid: &GridMap) -> Result<f64> {
    let dims = space.dims();
    if grid.dims() != dims {
        return Err(Error::Dimension("grid dimensions differ from the space".into()));
    }
    let idxs: Vec<Vec<usize>> = MultiIndexIter::new(grid.shape.clone()).collect();
    let terms = idxs
        .par_iter()
        .map(|idx| {
            let pt = JetPoint::new(dims, grid.t(idx), grid.value(idx).to_vec(), grid.first_derivatives(idx))?;
            let h = space.h().eval(&pt)?;
            let w: f64 = idx
                .iter()
                .zip(&grid.shape)
                .zip(&grid.spacing)
                .map(|((&i, &s), &hs)| if i == 0 || i + 1 == s { 0.5 * hs } else { hs })
                .product();
            Ok(w * space.eval_l(&pt)? * linalg::det(&h, dims.p).abs().sqrt())
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(terms.iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::connection::ExprMap;
    use crate::dsl::{parse, Expr};
    use crate::lagrangian::Lagrangian;
    use crate::metric::{ExplicitMetric, TemporalMetric};
    use rand::Rng;

    fn e(d: Dims, s: &str) -> Expr {
        parse(s, d).unwrap()
    }

    fn euclid(d: Dims) -> ExplicitMetric {
        let n = d.n;
        let entries = (0..n * n).map(|k| e(d, if k / n == k % n { "1" } else { "0" })).collect();
        ExplicitMetric::new(d, entries).unwrap()
    }

    fn sphere(d: Dims) -> ExplicitMetric {
        ExplicitMetric::new(d, vec![e(d, "1"), e(d, "0"), e(d, "0"), e(d, "sin(x1)^2")]).unwrap()
    }

    fn problem(x0: &[f64], y0: &[f64], dt: f64) -> ExtremalProblem {
        ExtremalProblem {
            t0: 0.0,
            x0: x0.to_vec(),
            y0: y0.to_vec(),
            t_end: 1.0,
            dt,
        }
    }

    // Geodesics of the round sphere, integrated independently of the spray.
    fn sphere_geodesic(x0: [f64; 2], y0: [f64; 2], dt: f64, steps: usize) -> [f64; 4] {
        let f = |s: [f64; 4]| {
            let (th, _ph, a, b) = (s[0], s[1], s[2], s[3]);
            [a, b, th.sin() * th.cos() * b * b, -2.0 * th.cos() / th.sin() * a * b]
        };
        let mut s = [x0[0], x0[1], y0[0], y0[1]];
        for _ in 0..steps {
            let add = |a: [f64; 4], k: [f64; 4], c: f64| [a[0] + c * k[0], a[1] + c * k[1], a[2] + c * k[2], a[3] + c * k[3]];
            let k1 = f(s);
            let k2 = f(add(s, k1, dt / 2.0));
            let k3 = f(add(s, k2, dt / 2.0));
            let k4 = f(add(s, k3, dt));
            for i in 0..4 {
                s[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        s
    }

    #[test]
    fn straight_lines() {
        let d = Dims::new(1, 2).unwrap();
        let s = MultiTimeSpace::harmonic(d, euclid(d), TemporalMetric::flat((1, 0)).unwrap()).unwrap();
        let tr = integrate_extremal(&s, &problem(&[0.0, 0.0], &[1.0, 2.0], 1e-2)).unwrap();
        assert!(tr.aborted.is_none());
        for q in &tr.points {
            assert!((q.x[0] - q.t).abs() < 1e-13 && (q.x[1] - 2.0 * q.t).abs() < 1e-13);
        }
        assert!(tr.el_residual_max < 1e-10);
    }

    #[test]
    fn sphere_great_circle_matches_geodesic_oracle() {
        let d = Dims::new(1, 2).unwrap();
        let s = MultiTimeSpace::harmonic(d, sphere(d), TemporalMetric::flat((1, 0)).unwrap()).unwrap();
        let (x0, y0) = ([std::f64::consts::FRAC_PI_2, 0.0], [0.3, 0.8]);
        let tr = integrate_extremal(&s, &problem(&x0, &y0, 1e-3)).unwrap();
        let want = sphere_geodesic(x0, y0, 1e-3, 1000);
        let last = tr.last();
        let dev = (last.x[0] - want[0]).abs().max((last.x[1] - want[1]).abs());
        assert!(dev < 1e-6, "{dev}");
        assert!(tr.el_residual_max < 1e-6, "{}", tr.el_residual_max);
        // the energy g(y, y) is conserved along geodesics
        let en = |q: &TrajectoryPoint| q.y[0].powi(2) + q.x[0].sin().powi(2) * q.y[1].powi(2);
        assert!((en(last) - en(&tr.points[0])).abs() < 1e-10);
    }

    #[test]
    fn expanding_time_metric() {
        // h11 = e^{2t}: x'' = x', x = x0 + y0(e^t − 1)
        let d = Dims::new(1, 2).unwrap();
        let h = TemporalMetric::from_entries(1, vec![e(d, "exp(2*t1)")], (1, 0)).unwrap();
        let s = MultiTimeSpace::harmonic(d, euclid(d), h).unwrap();
        let err = |dt: f64| {
            let tr = integrate_extremal(&s, &problem(&[0.5, -1.0], &[1.0, 0.25], dt)).unwrap();
            let q = tr.last();
            let want = [0.5 + (1f64.exp() - 1.0), -1.0 + 0.25 * (1f64.exp() - 1.0)];
            (q.x[0] - want[0]).abs().max((q.x[1] - want[1]).abs())
        };
        let (a, b) = (err(0.04), err(0.02));
        assert!(a < 1e-6);
        let order = (a / b).log2();
        assert!(order > 3.8, "{order}");
        assert!(err(1e-3) < 1e-12);
        let tr = integrate_extremal(&s, &problem(&[0.5, -1.0], &[1.0, 0.25], 1e-3)).unwrap();
        assert!(tr.el_residual_max < 1e-6, "{}", tr.el_residual_max);
    }

    #[test]
    fn non_single_time_rejected() {
        let d = Dims::new(2, 1).unwrap();
        let s = MultiTimeSpace::harmonic(d, euclid(d), TemporalMetric::flat((2, 0)).unwrap()).unwrap();
        let p = ExtremalProblem {
            t0: 0.0,
            x0: vec![0.0],
            y0: vec![1.0],
            t_end: 1.0,
            dt: 0.1,
        };
        assert!(matches!(integrate_extremal(&s, &p), Err(Error::Dimension(_))));
    }

    #[test]
    fn singular_metric_aborts_with_partial_trajectory() {
        // g = √(1 − x) pulls the path into x = 1, where the metric dies
        let d = Dims::new(1, 1).unwrap();
        let g = ExplicitMetric::new(d, vec![e(d, "sqrt(1 - x1)")]).unwrap();
        let s = MultiTimeSpace::harmonic(d, g, TemporalMetric::flat((1, 0)).unwrap()).unwrap();
        let mut pr = problem(&[0.0], &[1.0], 0.01);
        pr.t_end = 3.0;
        let tr = integrate_extremal(&s, &pr).unwrap();
        assert!(tr.aborted.is_some());
        assert!(tr.points.len() > 10 && tr.points.len() < 301);
    }

    #[test]
    fn action_values() {
        let d = Dims::new(1, 1).unwrap();
        let s = MultiTimeSpace::new(d, Lagrangian::Expression(e(d, "v1_1^2")), TemporalMetric::flat((1, 0)).unwrap()).unwrap();
        let tr = integrate_extremal(&s, &problem(&[0.0], &[1.0], 0.01)).unwrap();
        assert!((action_value(&s, &tr).unwrap() - 1.0).abs() < 1e-12);
        let tr2 = integrate_extremal(&s, &problem(&[0.0], &[2.0], 0.01)).unwrap();
        assert!((action_value(&s, &tr2).unwrap() - 4.0).abs() < 1e-12);
    }

    fn bump(t: f64) -> (f64, f64) {
        // sin²(πt) on [0, 1] and its derivative
        let pi = std::f64::consts::PI;
        ((pi * t).sin().powi(2), pi * (2.0 * pi * t).sin())
    }

    fn perturbed(pts: &[TrajectoryPoint], eps: f64, comp: usize, mode: f64) -> Vec<TrajectoryPoint> {
        pts.iter()
            .map(|q| {
                let (b, db) = bump(q.t);
                let (s, ds) = ((mode * q.t).sin(), mode * (mode * q.t).cos());
                let mut r = q.clone();
                r.x[comp] += eps * b * s;
                r.y[comp] += eps * (db * s + b * ds);
                r
            })
            .collect()
    }

    #[test]
    fn first_variation_vanishes() {
        let d = Dims::new(1, 2).unwrap();
        let s = MultiTimeSpace::harmonic(d, sphere(d), TemporalMetric::flat((1, 0)).unwrap()).unwrap();
        let tr = integrate_extremal(&s, &problem(&[1.2, 0.0], &[0.3, 0.5], 1e-3)).unwrap();
        let a0 = action_value(&s, &tr).unwrap();
        let dev = |eps: f64| path_action(&s, &s, &perturbed(&tr.points, eps, 0, 1.0)).unwrap() - a0;
        let (d3, d4) = (dev(1e-3), dev(1e-4));
        // quadratic: a tenfold smaller ε gives a hundredfold smaller change
        assert!((d3 / d4 - 100.0).abs() < 5.0, "{d3} {d4}");
    }

    #[test]
    fn extremal_is_locally_minimal() {
        let d = Dims::new(1, 2).unwrap();
        let s = MultiTimeSpace::harmonic(d, sphere(d), TemporalMetric::flat((1, 0)).unwrap()).unwrap();
        let tr = integrate_extremal(&s, &problem(&[1.2, 0.0], &[0.3, 0.5], 1e-3)).unwrap();
        let a0 = action_value(&s, &tr).unwrap();
        let mut rng = crate::sampling::rng(11);
        for _ in 0..50 {
            let eps = rng.gen_range(-0.05..0.05);
            let comp = rng.gen_range(0..2);
            let mode = rng.gen_range(0.0..6.0);
            let a = path_action(&s, &s, &perturbed(&tr.points, eps, comp, mode)).unwrap();
            assert!(a >= a0 - 1e-12, "{a} < {a0}");
        }
    }

    // x¹ = 2·atan(e^{c t¹}), x² = c t²
    struct SheetMap(f64);

    impl JetMap for SheetMap {
        fn dims(&self) -> Dims {
            Dims::new(2, 2).unwrap()
        }

        fn jet(&self, t: &[f64]) -> Result<MapJet> {
            let c = self.0;
            let s = c * t[0];
            let sech = 1.0 / s.cosh();
            let mut x2 = vec![0.0; 8];
            x2[0] = -c * c * sech * s.tanh();
            Ok(MapJet {
                t: t.to_vec(),
                x: vec![2.0 * s.exp().atan(), c * t[1]],
                x1: vec![c * sech, 0.0, 0.0, c],
                x2,
            })
        }
    }

    fn refine<M: JetMap>(s: &MultiTimeSpace, m: &M, bounds: &[(f64, f64)]) -> Vec<f64> {
        [9usize, 17, 33, 65]
            .iter()
            .map(|&k| harmonic_residual(s, &GridMap::sample(m, bounds, &[k, k]).unwrap()).unwrap().max)
            .collect()
    }

    #[test]
    fn affine_map_is_harmonic_in_flat_space() {
        let d = Dims::new(2, 2).unwrap();
        let s = MultiTimeSpace::harmonic(d, euclid(d), TemporalMetric::flat((2, 0)).unwrap()).unwrap();
        let m = ExprMap::new(d, vec![e(d, "1 + 2*t1 - t2"), e(d, "0.5*t1 + 3*t2")]).unwrap();
        for r in refine(&s, &m, &[(0.0, 1.0), (-1.0, 0.5)]) {
            assert!(r < 1e-9, "{r}");
        }
    }

    #[test]
    fn sphere_sheet_converges_quadratically() {
        let d = Dims::new(2, 2).unwrap();
        let s = MultiTimeSpace::harmonic(d, sphere(d), TemporalMetric::flat((2, 0)).unwrap()).unwrap();
        let m = SheetMap(0.7);
        // the exact map has zero defect
        let jet = m.jet(&[0.3, -0.2]).unwrap();
        assert!(linalg::max_abs(&harmonic_defect(&s, &jet).unwrap()) < 1e-12);
        let r = refine(&s, &m, &[(-1.0, 1.0), (-1.0, 1.0)]);
        for w in r.windows(2) {
            assert!(w[0] / w[1] > 3.5, "{r:?}");
        }
        // a non-harmonic map stays far above the truncation error
        let bad = ExprMap::new(d, vec![e(d, "1 + 0.3*t1^2"), e(d, "t1*t2")]).unwrap();
        let g = GridMap::sample(&bad, &[(-1.0, 1.0), (-1.0, 1.0)], &[33, 33]).unwrap();
        assert!(harmonic_residual(&s, &g).unwrap().max > 10.0 * r[2]);
    }

    #[test]
    fn grid_checks() {
        let d = Dims::new(2, 1).unwrap();
        let m = ExprMap::new(d, vec![e(d, "t1")]).unwrap();
        assert!(matches!(GridMap::sample(&m, &[(0.0, 1.0), (0.0, 1.0)], &[4, 9]), Err(Error::Stencil(_))));
        let g = GridMap::sample(&m, &[(0.0, 1.0), (0.0, 2.0)], &[5, 9]).unwrap();
        assert!(matches!(g.jet_at(&[0, 3]), Err(Error::Stencil(_))));
        // ∫∫ (x_1² + x_2²) over [0,1]×[0,2] with x = t1
        let s = MultiTimeSpace::harmonic(d, euclid(d), TemporalMetric::flat((2, 0)).unwrap()).unwrap();
        assert!((grid_action(&s, &g).unwrap() - 2.0).abs() < 1e-12);
    }
}
