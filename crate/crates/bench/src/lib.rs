//! Workloads shared by the criterion benches.

use jetlag_core::{parse, Dims, ExplicitMetric, Expr, Lagrangian, MultiTimeSpace, TemporalMetric};

fn e(d: Dims, s: &str) -> Expr {
    parse(s, d).expect("bench expressions parse")
}

/// Non-autonomous electrodynamics Lagrangian with tridiagonal `g`, a
/// rotation-like `U` and a quadratic potential.
pub fn electrodynamics(p: usize, n: usize) -> MultiTimeSpace {
    let d = Dims::new(p, n).expect("valid dims");
    let mut g = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let text = match i.abs_diff(j) {
                0 => format!("{} + 0.2*x{}^2 + 0.1*sin(t1)", 1 + i, i + 1),
                1 => format!("0.1*x{}", i.min(j) + 1),
                _ => "0".into(),
            };
            g.push(e(d, &text));
        }
    }
    let u = (0..n)
        .flat_map(|i| (0..p).map(move |a| (i, a)))
        .map(|(i, a)| e(d, &format!("{}*x{}*t{}", if i % 2 == 0 { "0.5" } else { "-0.5" }, (i + 1) % n + 1, a + 1)))
        .collect();
    let h_entries = (0..p * p)
        .map(|k| if k % (p + 1) == 0 { e(d, &format!("1 + 0.25*t{}^2", k / p + 1)) } else { e(d, "0") })
        .collect();
    let h = TemporalMetric::from_entries(p, h_entries, (p, 0)).expect("positive h");
    let g = ExplicitMetric::new(d, g).expect("square g");
    let f = e(d, "0.3*x1^2");
    MultiTimeSpace::new(d, Lagrangian::Electrodynamics { g, u: Some(u), f: Some(f) }, h).expect("consistent space")
}

/// Round sphere geodesics, `p = 1`.
pub fn sphere() -> MultiTimeSpace {
    let d = Dims::new(1, 2).expect("valid dims");
    let g = ExplicitMetric::new(d, vec![e(d, "1"), e(d, "0"), e(d, "0"), e(d, "sin(x1)^2")]).expect("square g");
    MultiTimeSpace::harmonic(d, g, TemporalMetric::flat((1, 0)).expect("flat h")).expect("consistent space")
}

/// Harmonic maps into the round sphere, `p = 2`.
pub fn sphere_sheet_target() -> MultiTimeSpace {
    let d = Dims::new(2, 2).expect("valid dims");
    let g = ExplicitMetric::new(d, vec![e(d, "1"), e(d, "0"), e(d, "0"), e(d, "sin(x1)^2")]).expect("square g");
    MultiTimeSpace::harmonic(d, g, TemporalMetric::flat((2, 0)).expect("flat h")).expect("consistent space")
}

pub const PARSE_SAMPLE: &str = "exp(-0.4*t1)*(v1_1^2 + 2*x1*v1_1*v2_1 + sin(x2)^2*v2_1^2) + cos(x1 + t1)*v2_1 - 0.3*x1^2/(1 + x2^2)";
