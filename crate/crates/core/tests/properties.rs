mod common;

use common::*;
use jetlag_core::cartan::{cartan_connection, metric_compatibility, pack};
use jetlag_core::connection::{spray_entities, CanonicalConnection};
use jetlag_core::curvature::{antisymmetry_defects, curvature_table, torsion_table};
use jetlag_core::dsl::ExprKind;
use jetlag_core::extremal::{integrate_extremal, ExtremalProblem};
use jetlag_core::regularity::{kronecker_test, RegularityOptions};
use jetlag_core::sampling::rng;
use jetlag_core::{d2, parse, Coord, Dims, Expr, JetPoint, MultiTimeSpace};
use proptest::prelude::*;

fn setup(p: usize, n: usize, seed: u64) -> (MultiTimeSpace, JetPoint) {
    let d = Dims::new(p, n).unwrap();
    let s = random_electrodynamics(&mut rng(seed), d);
    let pt = unit_box(d).samples(1, seed).remove(0);
    (s, pt)
}

fn coords(d: Dims) -> Vec<Coord> {
    let mut c: Vec<Coord> = (0..d.p).map(Coord::T).collect();
    c.extend((0..d.n).map(Coord::X));
    for i in 0..d.n {
        c.extend((0..d.p).map(|a| Coord::V(i, a)));
    }
    c
}

fn all_consts_non_negative(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Const(c) => *c >= 0.0,
        ExprKind::Var(_) => true,
        ExprKind::Neg(a) | ExprKind::Call(_, a) => all_consts_non_negative(a),
        ExprKind::Binary(_, a, b) => all_consts_non_negative(a) && all_consts_non_negative(b),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn second_derivatives_commute(p in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let (s, pt) = setup(p, n, seed);
        let cs = coords(s.dims());
        for &a in &cs {
            for &b in &cs {
                let ab = d2(&s, &pt, a, b).unwrap();
                let ba = d2(&s, &pt, b, a).unwrap();
                prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab.abs()));
            }
        }
    }

    #[test]
    fn h_trace_vanishes(p in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let (s, pt) = setup(p, n, seed);
        let hinv = s.h().inverse(&pt).unwrap();
        prop_assert!(spray_entities(&s, &pt).unwrap().h_trace_defect(&hinv) <= 1e-8);
    }

    #[test]
    fn cartan_is_metric(p in 1usize..=3, n in 1usize..=3, seed in any::<u64>()) {
        let (s, pt) = setup(p, n, seed);
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let rep = metric_compatibility(&s, &pack(&k, &pt).unwrap(), &conn, &pt).unwrap();
        prop_assert!(rep.worst() <= 1e-7, "{:?}", rep.entries());
    }

    #[test]
    fn tables_antisymmetric(p in 1usize..=2, n in 1usize..=2, seed in any::<u64>()) {
        let (s, pt) = setup(p, n, seed);
        let conn = CanonicalConnection::new(&s);
        let k = cartan_connection(&s, conn).unwrap();
        let tor = torsion_table(&pack(&k, &pt).unwrap(), &conn, &pt).unwrap();
        let cur = curvature_table(&k, &conn, &pt, &tor).unwrap();
        for (name, dev) in antisymmetry_defects(&tor, &cur) {
            prop_assert!(dev <= 1e-9, "{} {}", name, dev);
        }
    }

    #[test]
    fn regularity_is_deterministic(p in 1usize..=3, n in 1usize..=2, seed in any::<u64>()) {
        let (s, _) = setup(p, n, seed);
        let opts = RegularityOptions { samples: 4, seed, ..RegularityOptions::default() };
        let bx = unit_box(s.dims());
        let a = kronecker_test(&s, &bx, &opts).unwrap();
        let b = kronecker_test(&s, &bx, &opts).unwrap();
        prop_assert_eq!(a.max_block_residual.to_bits(), b.max_block_residual.to_bits());
        prop_assert_eq!(a.is_kronecker, b.is_kronecker);
    }

    #[test]
    fn extremals_are_deterministic(n in 1usize..=3, seed in any::<u64>()) {
        let (s, _) = setup(1, n, seed);
        let pr = ExtremalProblem { t0: 0.0, x0: vec![0.1; n], y0: vec![0.3; n], t_end: 0.2, dt: 0.01 };
        let a = integrate_extremal(&s, &pr).unwrap();
        let b = integrate_extremal(&s, &pr).unwrap();
        for (u, v) in a.points.iter().zip(&b.points) {
            prop_assert!(u.x.iter().zip(&v.x).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn parsed_constants_are_non_negative(src in "[-+*/^() 0-9.eEtxv_1sincoexp]{0,32}") {
        if let Ok(e) = parse(&src, Dims::new(2, 2).unwrap()) {
            prop_assert!(all_consts_non_negative(&e));
        }
    }
}
