//! Vertical Hessian of a Lagrangian, the Kronecker h-regularity test and the
//! electrodynamics decomposition it implies for `p ≥ 2`.

use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::{d2, v_coords, ScalarField};
use crate::error::{Error, Result};
use crate::jet::{slots, Coord, DTensor, Dims, JetPoint, SlotKind};
use crate::lagrangian::{ElectroJet, MultiTimeSpace};
use crate::linalg;
use crate::sampling::{self, SamplingBox};

/// `G^{(α)(β)}_{(i)(j)}` at a point, stored as an `(n·p)×(n·p)` matrix with
/// rows and columns indexed by `i·p + α`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerticalFundamentalTensor {
    pub values: DTensor,
}

impl VerticalFundamentalTensor {
    pub fn dim(&self) -> usize {
        self.values.slots[0].extent
    }

    pub fn block(&self, i: usize, a: usize, j: usize, b: usize, p: usize) -> f64 {
        let m = self.dim();
        self.values.data[(i * p + a) * m + j * p + b]
    }

    /// Largest `|G_{AB} − G_{BA}|`.
    pub fn asymmetry(&self) -> f64 {
        linalg::symmetrize(&self.values.data, self.dim()).1
    }
}

/// `G^{(α)(β)}_{(i)(j)} = ½ ∂²L/∂x^i_α ∂x^j_β`.
pub fn vertical_hessian<F: ScalarField + ?Sized>(l: &F, pt: &JetPoint) -> Result<VerticalFundamentalTensor> {
    let dims = pt.dims();
    let vc = v_coords(dims);
    let m = vc.len();
    let mut data = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let v = 0.5 * d2(l, pt, vc[a], vc[b])?;
            data[a * m + b] = v;
            data[b * m + a] = v;
        }
    }
    let values = DTensor::from_data(slots(dims, &[SlotKind::VerticalLower, SlotKind::VerticalLower]), data)?;
    Ok(VerticalFundamentalTensor { values })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegularityOptions {
    pub samples: usize,
    pub tolerance: f64,
    pub seed: u64,
    pub velocity_redraws: usize,
}

impl Default for RegularityOptions {
    fn default() -> Self {
        RegularityOptions {
            samples: 64,
            tolerance: 1e-6,
            seed: 0,
            velocity_redraws: 8,
        }
    }
}

/// Outcome at one sample point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleVerdict {
    pub index: usize,
    pub point: JetPoint,
    pub g_estimate: Vec<f64>,
    pub residual: f64,
    pub g_asymmetry: f64,
    pub det_g: f64,
    pub signature: (usize, usize),
    /// Largest change of `g_estimate` over velocity redraws at fixed `(t,x)`.
    pub velocity_spread: f64,
    pub diagnostic: Option<String>,
}

impl SampleVerdict {
    fn ok(&self, tol: f64) -> bool {
        self.diagnostic.is_none() && self.residual <= tol && self.g_asymmetry <= tol
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityVerdict {
    pub is_kronecker: bool,
    pub max_block_residual: f64,
    pub velocity_dependent_g: bool,
    /// Signature of `g` when it is the same at every sample.
    pub signature: Option<(usize, usize)>,
    pub tolerance: f64,
    pub seed: u64,
    pub samples: Vec<SampleVerdict>,
    pub diagnostics: Vec<String>,
}

impl RegularityVerdict {
    pub fn g_estimates(&self) -> impl Iterator<Item = &[f64]> {
        self.samples.iter().map(|s| s.g_estimate.as_slice())
    }

    pub fn points(&self) -> impl Iterator<Item = &JetPoint> {
        self.samples.iter().map(|s| &s.point)
    }
}

/// h-trace `(1/p) h_{αβ} G^{(α)(β)}_{(i)(j)}` and the residual
/// `max |G − h^{αβ} g_{ij}|`.
fn g_estimate(gt: &VerticalFundamentalTensor, h: &[f64], hinv: &[f64], dims: Dims) -> (Vec<f64>, f64) {
    let (p, n) = (dims.p, dims.n);
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for a in 0..p {
                for b in 0..p {
                    s += h[a * p + b] * gt.block(i, a, j, b, p);
                }
            }
            g[i * n + j] = s / p as f64;
        }
    }
    let mut res = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for a in 0..p {
                for b in 0..p {
                    res = res.max((gt.block(i, a, j, b, p) - hinv[a * p + b] * g[i * n + j]).abs());
                }
            }
        }
    }
    (g, res)
}

fn examine(
    space: &MultiTimeSpace,
    index: usize,
    pt: JetPoint,
    redraws: &[JetPoint],
) -> SampleVerdict {
    let dims = space.dims();
    let n = dims.n;
    let mut out = SampleVerdict {
        index,
        point: pt.clone(),
        g_estimate: vec![f64::NAN; n * n],
        residual: f64::INFINITY,
        g_asymmetry: f64::INFINITY,
        det_g: f64::NAN,
        signature: (0, 0),
        velocity_spread: 0.0,
        diagnostic: None,
    };
    let run = |out: &mut SampleVerdict| -> Result<()> {
        space.h().validate(&pt)?;
        let h = space.h().eval(&pt)?;
        let hinv = space.h().inverse(&pt)?;
        let gt = vertical_hessian(space, &pt)?;
        let (g, res) = g_estimate(&gt, &h, &hinv, dims);
        out.residual = res;
        out.g_asymmetry = linalg::symmetrize(&g, n).1;
        out.det_g = linalg::det(&g, n);
        out.signature = linalg::signature(&linalg::symmetrize(&g, n).0, n);
        out.g_estimate = g.clone();
        for q in redraws {
            let gq = vertical_hessian(space, q)?;
            let (g2, _) = g_estimate(&gq, &h, &hinv, dims);
            let d = g.iter().zip(&g2).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            out.velocity_spread = out.velocity_spread.max(d);
        }
        linalg::check_nondegenerate(&g, n)?;
        Ok(())
    };
    if let Err(e) = run(&mut out) {
        out.diagnostic = Some(format!("sample {index}: {e}"));
    }
    out
}

/// Samples `opts.samples` points of `bx`, decides whether the vertical
/// Hessian factors as `h^{αβ}(t) g_{ij}` everywhere, and reports per sample.
/// Samples are examined in parallel and merged in index order.
pub fn kronecker_test(space: &MultiTimeSpace, bx: &SamplingBox, opts: &RegularityOptions) -> Result<RegularityVerdict> {
    if opts.samples == 0 {
        return Err(Error::Invalid("regularity test needs at least one sample".into()));
    }
    if bx.dims() != space.dims() {
        return Err(Error::Dimension("sampling box dimensions differ from the space".into()));
    }
    let tol = opts.tolerance;
    let mut rng = sampling::rng(opts.seed);
    let work: Vec<(JetPoint, Vec<JetPoint>)> = (0..opts.samples)
        .map(|_| {
            let pt = bx.sample(&mut rng);
            let redraws = (0..opts.velocity_redraws).map(|_| bx.redraw_velocity(&pt, &mut rng)).collect();
            (pt, redraws)
        })
        .collect();
    let samples: Vec<SampleVerdict> = work
        .into_par_iter()
        .enumerate()
        .map(|(k, (pt, rd))| examine(space, k, pt, &rd))
        .collect();

    let mut diagnostics: Vec<String> = samples.iter().filter_map(|s| s.diagnostic.clone()).collect();
    let max_block_residual = samples.iter().fold(0.0f64, |m, s| m.max(s.residual));
    let velocity_dependent_g = samples.iter().any(|s| s.velocity_spread > tol);
    let sig0 = samples[0].signature;
    let constant_sig = samples.iter().all(|s| s.signature == sig0);
    if !constant_sig {
        diagnostics.push("signature of g changes across samples".into());
    }
    if let Some(s) = samples.iter().find(|s| s.diagnostic.is_none() && s.residual > tol) {
        diagnostics.push(format!(
            "sample {}: block residual {:e} exceeds {:e}",
            s.index, s.residual, tol
        ));
    }
    let mut is_kronecker = constant_sig && samples.iter().all(|s| s.ok(tol));
    if space.dims().p >= 2 && velocity_dependent_g {
        diagnostics.push("g depends on velocities, impossible for a Kronecker h-regular L with p ≥ 2".into());
        is_kronecker = false;
    }
    Ok(RegularityVerdict {
        is_kronecker,
        max_block_residual,
        velocity_dependent_g,
        signature: constant_sig.then_some(sig0),
        tolerance: tol,
        seed: opts.seed,
        samples,
        diagnostics,
    })
}

/// `(g, U, F, U_curl)` at one `(t, x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecompositionSample {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    /// `g_{ij}` at `i·n + j`.
    pub g: Vec<f64>,
    /// `U^{(α)}_{(i)}` at `i·p + α`.
    pub u: Vec<f64>,
    pub f: f64,
    /// `U^{(α)}_{(i)j}` at `(α·n + i)·n + j`.
    pub u_curl: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ElectrodynamicsDecomposition {
    pub samples: Vec<DecompositionSample>,
    pub reassembly_residual: f64,
    pub tolerance: f64,
}

/// Reads `g`, `U`, `F` off `L` at zero velocity and checks that
/// `h^{αβ} g_{ij} v^i_α v^j_β + U^{(α)}_{(i)} v^i_α + F` reproduces `L` at
/// `draws` random velocities per base point.
pub fn electrodynamics_decompose(
    space: &MultiTimeSpace,
    base: &[JetPoint],
    bx: &SamplingBox,
    seed: u64,
    draws: usize,
    tolerance: f64,
) -> Result<ElectrodynamicsDecomposition> {
    let dims = space.dims();
    let (p, n) = (dims.p, dims.n);
    let mut rng = sampling::rng(seed);
    let mut samples = Vec::with_capacity(base.len());
    let mut worst = 0.0f64;
    for b in base {
        let b0 = b.with_zero_velocity();
        let ej = ElectroJet::new(space, &b0)?;
        let g = ej.value[..n * n].to_vec();
        let u = ej.value[n * n..n * n + n * p].to_vec();
        let f = ej.value[n * n + n * p];
        let mut u_curl = vec![0.0; p * n * n];
        for a in 0..p {
            for i in 0..n {
                for j in 0..n {
                    u_curl[(a * n + i) * n + j] = ej.u_curl(a, i, j);
                }
            }
        }
        let hinv = space.h().inverse(&b0)?;
        for _ in 0..draws {
            let q = bx.redraw_velocity(&b0, &mut rng);
            let mut r = f;
            for i in 0..n {
                for a in 0..p {
                    r += u[i * p + a] * q.vel(i, a);
                    for j in 0..n {
                        for c in 0..p {
                            r += hinv[a * p + c] * g[i * n + j] * q.vel(i, a) * q.vel(j, c);
                        }
                    }
                }
            }
            worst = worst.max((space.eval_l(&q)? - r).abs());
        }
        samples.push(DecompositionSample {
            t: b0.t.clone(),
            x: b0.x.clone(),
            g,
            u,
            f,
            u_curl,
        });
    }
    if !(worst <= tolerance) {
        return Err(Error::Decomposition {
            residual: worst,
            tolerance,
        });
    }
    Ok(ElectrodynamicsDecomposition {
        samples,
        reassembly_residual: worst,
        tolerance,
    })
}

/// Value of `L` minus its electrodynamics reassembly at one point; zero for
/// Lagrangians quadratic in the velocities.
pub fn reassembly_defect(space: &MultiTimeSpace, pt: &JetPoint) -> Result<f64> {
    let dims = space.dims();
    let (p, n) = (dims.p, dims.n);
    let fields = space.electro_fields(pt)?;
    let hinv = space.h().inverse(pt)?;
    let mut r = fields[n * n + n * p];
    for i in 0..n {
        for a in 0..p {
            r += fields[n * n + i * p + a] * pt.get(Coord::V(i, a));
            for j in 0..n {
                for c in 0..p {
                    r += hinv[a * p + c] * fields[i * n + j] * pt.vel(i, a) * pt.vel(j, c);
                }
            }
        }
    }
    Ok(space.eval_l(pt)? - r)
}
