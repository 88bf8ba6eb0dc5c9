//! Shared instance corpus for the integration tests.
#![allow(dead_code)]

use jetlag_core::{parse, Dims, ExplicitMetric, Expr, Lagrangian, MultiTimeSpace, SamplingBox, TemporalMetric};
use rand::Rng;

pub fn e(d: Dims, s: &str) -> Expr {
    parse(s, d).unwrap_or_else(|err| panic!("{s}: {err}"))
}

pub fn exprs(d: Dims, src: &[String]) -> Vec<Expr> {
    src.iter().map(|s| e(d, s)).collect()
}

/// Non-flat Riemannian `h` on `T`.
pub fn temporal(d: Dims) -> TemporalMetric {
    let p = d.p;
    let mut src = vec![String::from("0"); p * p];
    for a in 0..p {
        src[a * p + a] = if a == 0 { "exp(0.4*t1)".into() } else { format!("1 + 0.25*t{}^2", a + 1) };
    }
    if p >= 2 {
        src[1] = "0.1*sin(t1)".into();
        src[p] = "0.1*sin(t1)".into();
    }
    TemporalMetric::from_entries(p, exprs(d, &src), (p, 0)).unwrap()
}

/// Tridiagonal positive-definite `g`; `t`-dependent unless `autonomous`.
pub fn spatial_text(d: Dims, autonomous: bool) -> Vec<String> {
    let n = d.n;
    let mut src = vec![String::from("0"); n * n];
    for i in 0..n {
        let k = (i + 1) % n + 1;
        src[i * n + i] = if autonomous {
            format!("2 + 0.5*sin(x{k})")
        } else {
            format!("(2 + 0.5*sin(x{k}))*(1 + 0.2*t1^2)")
        };
        if i + 1 < n {
            let c = if autonomous {
                format!("0.3*cos(x{})", i + 1)
            } else {
                format!("0.3*cos(x{})*cos(t{})", i + 1, d.p)
            };
            src[i * n + i + 1] = c.clone();
            src[(i + 1) * n + i] = c;
        }
    }
    src
}

pub fn spatial(d: Dims, autonomous: bool) -> ExplicitMetric {
    ExplicitMetric::new(d, exprs(d, &spatial_text(d, autonomous))).unwrap()
}

pub fn potential_text(d: Dims) -> (Vec<String>, String) {
    let (p, n) = (d.p, d.n);
    let mut u = Vec::with_capacity(n * p);
    for i in 0..n {
        for a in 0..p {
            u.push(format!("0.5*x{}*cos(t{}) + 0.2*x{}^2", (i + 1) % n + 1, a + 1, i + 1));
        }
    }
    (u, "0.3*sin(x1)*t1".into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Harmonic,
    Autonomous,
    NonAutonomous,
}

pub struct Instance {
    pub name: String,
    pub family: Family,
    pub space: MultiTimeSpace,
}

pub fn instance(d: Dims, family: Family) -> Instance {
    let h = temporal(d);
    let (u, f) = potential_text(d);
    let lagrangian = match family {
        Family::Harmonic => Lagrangian::Electrodynamics { g: spatial(d, true), u: None, f: None },
        Family::Autonomous => Lagrangian::Electrodynamics {
            g: spatial(d, true),
            u: Some(exprs(d, &u)),
            f: Some(e(d, &f)),
        },
        Family::NonAutonomous => Lagrangian::Electrodynamics {
            g: spatial(d, false),
            u: Some(exprs(d, &u)),
            f: Some(e(d, &f)),
        },
    };
    Instance {
        name: format!("{family:?} p={} n={}", d.p, d.n),
        family,
        space: MultiTimeSpace::new(d, lagrangian, h).unwrap(),
    }
}

/// Every family for `p, n ∈ {1, 2, 3}`.
pub fn corpus() -> Vec<Instance> {
    let mut out = Vec::new();
    for p in 1..=3 {
        for n in 1..=3 {
            let d = Dims::new(p, n).unwrap();
            for f in [Family::Harmonic, Family::Autonomous, Family::NonAutonomous] {
                out.push(instance(d, f));
            }
        }
    }
    out
}

/// Single-time Lagrangian whose fundamental tensor depends on the velocity.
pub fn finsler_like() -> MultiTimeSpace {
    let d = Dims::new(1, 2).unwrap();
    let h = TemporalMetric::from_entries(1, vec![e(d, "exp(2*t1)")], (1, 0)).unwrap();
    let l = e(d, "exp(-2*t1)*((1 + x2^2)*v1_1^2 + v2_1^2 + 0.1*v1_1^4 + t1*v1_1^2*v2_1^2) + x1*v2_1");
    MultiTimeSpace::new(d, Lagrangian::Expression(l), h).unwrap()
}

pub fn unit_box(d: Dims) -> SamplingBox {
    SamplingBox::uniform(d, -1.0, 1.0).unwrap()
}

/// Random electrodynamics Lagrangian written out as one expression, with
/// `h = diag(e^{c_α t^α})`.
pub fn random_electrodynamics(rng: &mut impl Rng, d: Dims) -> MultiTimeSpace {
    let (p, n) = (d.p, d.n);
    let c: Vec<f64> = (0..p).map(|_| rng.gen_range(-0.5..0.5)).collect();
    let mut hs = vec![String::from("0"); p * p];
    for a in 0..p {
        hs[a * p + a] = format!("exp({:.6}*t{})", c[a], a + 1);
    }
    let h = TemporalMetric::from_entries(p, exprs(d, &hs), (p, 0)).unwrap();
    let mut g = vec![String::new(); n * n];
    for i in 0..n {
        for j in i..n {
            let s = if i == j {
                format!("({:.6} + {:.6}*sin(x{}) + {:.6}*t1^2)", rng.gen_range(2.0..3.0), rng.gen_range(-0.4..0.4), (i + 1) % n + 1, rng.gen_range(0.0..0.3))
            } else {
                format!("({:.6}*cos(x{} + t{}))", rng.gen_range(-0.25..0.25), i + 1, p)
            };
            g[i * n + j] = s.clone();
            g[j * n + i] = s;
        }
    }
    let mut terms = Vec::new();
    for a in 0..p {
        for i in 0..n {
            for j in 0..n {
                terms.push(format!("exp({:.6}*t{})*{}*v{}_{}*v{}_{}", -c[a], a + 1, g[i * n + j], i + 1, a + 1, j + 1, a + 1));
            }
            terms.push(format!("{:.6}*x{}*t{}*v{}_{}", rng.gen_range(-1.0..1.0), (i + a) % n + 1, a + 1, i + 1, a + 1));
        }
    }
    terms.push(format!("{:.6}*cos(x1)*t1", rng.gen_range(-1.0..1.0)));
    let src = terms.join(" + ");
    MultiTimeSpace::new(d, Lagrangian::Expression(e(d, &src)), h).unwrap()
}
