//! One function per subcommand. Each returns the text for stdout (or
//! `--out`), notes for stderr and the exit status.

use jetlag_core::cartan::{
    berwald_connection, cartan_connection, metric_compatibility, pack, uniqueness_probe, PackKind,
};
use jetlag_core::connection::{canonical_nonlinear_connection, spray_entities, ExprMap, NonlinearConnection};
use jetlag_core::curvature::{
    antisymmetry_defects, berwald_torsion_closed_forms, cartan_torsion_closed_forms, curvature_closed_forms,
    curvature_table, curvature_zero_families, table_zero_audit, torsion_table, torsion_zero_families, InstanceClass,
};
use jetlag_core::extremal::{harmonic_residual, integrate_extremal, ExtremalProblem, GridMap};
use jetlag_core::metric::g_christoffel;
use jetlag_core::regularity::{electrodynamics_decompose, kronecker_test, RegularityOptions, RegularityVerdict};
use jetlag_core::sampling::rng;
use jetlag_core::{fd_crosscheck, parse, DiffConfig, Error, JetPoint, Lagrangian, MultiTimeSpace};
use serde_json::{json, Value};

use crate::config::{DeclaredDecomposition, Problem};
use crate::error::CliError;
use crate::report::{csv, num, to_value, Check, GeometryReport};

/// Absolute reassembly tolerance for electrodynamics decompositions.
pub const REASSEMBLY_TOL: f64 = 1e-8;
const REASSEMBLY_DRAWS: usize = 4;
const H_TRACE_TOL: f64 = 1e-8;
const SCHWARTZ_TOL: f64 = 1e-9;
const SYMMETRY_TOL: f64 = 1e-9;
const REDUCTION_TOL: f64 = 1e-8;

pub struct Rendered {
    pub body: String,
    pub notes: Vec<String>,
    pub code: i32,
}

impl Rendered {
    fn report(report: &GeometryReport, code: i32) -> Self {
        Rendered {
            body: report.render(),
            notes: report.warnings.iter().map(|w| format!("warning: {w}")).collect(),
            code,
        }
    }
}

fn envelope(problem: &Problem, command: &'static str, result: Value) -> GeometryReport {
    GeometryReport::new(command, &problem.hash, problem.seed(), &problem.warnings, result)
}

fn regularity(problem: &Problem) -> Result<RegularityVerdict, CliError> {
    let opts = RegularityOptions {
        samples: problem.config.sampling.count,
        tolerance: problem.config.tolerances.regularity,
        seed: problem.seed(),
        ..RegularityOptions::default()
    };
    Ok(kronecker_test(&problem.space, &problem.bx, &opts)?)
}

fn irregular(problem: &Problem, command: &'static str, verdict: &RegularityVerdict) -> Rendered {
    let report = envelope(problem, command, json!({ "regularity": verdict }));
    let mut out = Rendered::report(&report, 2);
    out.notes.push(format!(
        "error: L is not Kronecker h-regular (block residual {})",
        num(verdict.max_block_residual)
    ));
    out
}

pub fn analyze(problem: &Problem) -> Result<Rendered, CliError> {
    let verdict = regularity(problem)?;
    let decomposition = if verdict.is_kronecker {
        let pts: Vec<JetPoint> = verdict.points().cloned().collect();
        match electrodynamics_decompose(&problem.space, &pts, &problem.bx, problem.seed(), REASSEMBLY_DRAWS, REASSEMBLY_TOL) {
            Ok(d) => to_value(&d),
            // regular for p = 1 without being of electrodynamics form
            Err(Error::Decomposition { residual, tolerance }) => json!({
                "electrodynamics_form": false,
                "reassembly_residual": residual,
                "tolerance": tolerance,
            }),
            Err(e) => return Err(e.into()),
        }
    } else {
        Value::Null
    };
    let code = if verdict.is_kronecker { 0 } else { 2 };
    let report = envelope(problem, "analyze", json!({ "regularity": verdict, "decomposition": decomposition }));
    Ok(Rendered::report(&report, code))
}

/// `g` is usable as a Berwald metric when it does not depend on the
/// velocities.
fn berwald_available(verdict: &RegularityVerdict) -> bool {
    !verdict.velocity_dependent_g
}

pub fn connection(problem: &Problem, point: Option<&str>) -> Result<Rendered, CliError> {
    let pt = problem.point(point)?;
    let verdict = regularity(problem)?;
    if !verdict.is_kronecker {
        return Ok(irregular(problem, "connection", &verdict));
    }
    let space = &problem.space;
    let conn = canonical_nonlinear_connection(space, &problem.points())?;
    let cartan = cartan_connection(space, conn)?;
    let berwald = if berwald_available(&verdict) {
        let b = berwald_connection(problem.dims, space.h(), space)?;
        to_value(&pack(&b, &pt)?)
    } else {
        Value::Null
    };
    let result = json!({
        "point": pt,
        "n_route": conn.route(),
        "spray": spray_entities(space, &pt)?,
        "M": conn.m(&pt)?,
        "N": conn.n(&pt)?,
        "cartan": pack(&cartan, &pt)?,
        "berwald": berwald,
    });
    Ok(Rendered::report(&envelope(problem, "connection", result), 0))
}

pub fn tables(problem: &Problem, point: Option<&str>, curvature: bool) -> Result<Rendered, CliError> {
    let command = if curvature { "curvature" } else { "torsion" };
    let pt = problem.point(point)?;
    let verdict = regularity(problem)?;
    if !verdict.is_kronecker {
        return Ok(irregular(problem, command, &verdict));
    }
    let space = &problem.space;
    let p = problem.dims.p;
    let class = InstanceClass::of(space);
    let conn = canonical_nonlinear_connection(space, &problem.points())?;
    let cartan = cartan_connection(space, conn)?;
    let zeros = |kind| {
        if curvature {
            curvature_zero_families(p, kind, class)
        } else {
            torsion_zero_families(p, kind, class)
        }
    };
    let tor = torsion_table(&pack(&cartan, &pt)?, &conn, &pt)?;
    let table = if curvature { to_value(&curvature_table(&cartan, &conn, &pt, &tor)?) } else { to_value(&tor) };
    let cartan_value = json!({ "table": table, "zero_families": zeros(PackKind::Cartan) });
    let berwald_value = if berwald_available(&verdict) {
        let b = berwald_connection(problem.dims, space.h(), space)?;
        let tor = torsion_table(&pack(&b, &pt)?, b.nonlinear(), &pt)?;
        let table = if curvature { to_value(&curvature_table(&b, b.nonlinear(), &pt, &tor)?) } else { to_value(&tor) };
        json!({ "table": table, "zero_families": zeros(PackKind::Berwald) })
    } else {
        Value::Null
    };
    let result = json!({ "point": pt, "class": class, "cartan": cartan_value, "berwald": berwald_value });
    Ok(Rendered::report(&envelope(problem, command, result), 0))
}

fn header(prefix: &str, count: usize) -> impl Iterator<Item = String> + '_ {
    (1..=count).map(move |k| format!("{prefix}{k}"))
}

pub fn extremal(problem: &Problem, json_out: bool) -> Result<Rendered, CliError> {
    let (p, n) = (problem.dims.p, problem.dims.n);
    if p != 1 {
        return Err(CliError::Usage(format!("extremal needs p = 1, got p = {p}; use `residual` for p >= 2")));
    }
    let solver = problem
        .config
        .solver
        .as_ref()
        .ok_or_else(|| CliError::Usage("extremal needs a `solver` block in the config".into()))?;
    let init = &solver.initial;
    if init.x.len() != n || init.y.len() != n {
        return Err(CliError::Config {
            path: "solver.initial".into(),
            message: format!("x and y need {n} entries each"),
        });
    }
    let tr = integrate_extremal(
        &problem.space,
        &ExtremalProblem {
            t0: init.t0,
            x0: init.x.clone(),
            y0: init.y.clone(),
            t_end: solver.t_end,
            dt: solver.dt,
        },
    )?;
    let mut notes: Vec<String> = problem.warnings.iter().map(|w| format!("warning: {w}")).collect();
    notes.push(format!(
        "points={} el_residual_max={}",
        tr.points.len(),
        num(tr.el_residual_max)
    ));
    let code = match &tr.aborted {
        Some(why) => {
            notes.push(format!("error: integration stopped early: {why}"));
            1
        }
        None => 0,
    };
    let body = if json_out {
        envelope(problem, "extremal", json!({ "trajectory": tr })).render()
    } else {
        let mut head = vec!["t1".to_string()];
        head.extend(header("x", n));
        head.extend(header("y", n));
        head.push("residual".into());
        let rows = tr.points.iter().enumerate().map(|(k, q)| {
            let mut row = vec![q.t];
            row.extend(&q.x);
            row.extend(&q.y);
            row.push(tr.el_residual.get(k).copied().unwrap_or(f64::NAN));
            row
        });
        csv(&head, rows)
    };
    Ok(Rendered { body, notes, code })
}

pub fn residual(problem: &Problem, json_out: bool) -> Result<Rendered, CliError> {
    let (p, n) = (problem.dims.p, problem.dims.n);
    if p < 2 {
        return Err(CliError::Usage("residual needs p >= 2; use `extremal` for p = 1".into()));
    }
    let grid = problem
        .config
        .grid
        .as_ref()
        .ok_or_else(|| CliError::Usage("residual needs a `grid` block in the config".into()))?;
    let bad = |message: String| CliError::Config { path: "grid".into(), message };
    if grid.shape.len() != p || grid.bx.len() != p || grid.map.len() != n {
        return Err(bad(format!("needs {p} shape entries, {p} box ranges and {n} map components")));
    }
    let exprs = grid
        .map
        .iter()
        .enumerate()
        .map(|(i, t)| {
            parse(t, problem.dims).map_err(|d| CliError::Config {
                path: format!("grid.map[{i}]"),
                message: d.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let map = ExprMap::new(problem.dims, exprs).map_err(|e| bad(e.to_string()))?;
    let bounds: Vec<(f64, f64)> = grid.bx.iter().map(|[lo, hi]| (*lo, *hi)).collect();
    let sampled = GridMap::sample(&map, &bounds, &grid.shape).map_err(|e| bad(e.to_string()))?;
    let res = harmonic_residual(&problem.space, &sampled)?;
    let mut notes: Vec<String> = problem.warnings.iter().map(|w| format!("warning: {w}")).collect();
    notes.push(format!("nodes={} max={} rms={}", res.nodes.len(), num(res.max), num(res.rms)));
    let body = if json_out {
        envelope(problem, "residual", json!({ "residual": res })).render()
    } else {
        let head: Vec<String> = header("t", p).chain(header("x", n)).chain(header("residual", n)).collect();
        let rows = res.nodes.iter().map(|node| {
            let mut row = node.t.clone();
            row.extend(&node.x);
            row.extend(&node.residual);
            row
        });
        csv(&head, rows)
    };
    Ok(Rendered { body, notes, code: 0 })
}

/// Accumulates named checks; an evaluation error fails the check instead of
/// aborting the suite.
#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn record(&mut self, name: &str, tolerance: f64, f: impl FnOnce() -> jetlag_core::Result<f64>) {
        let (value, note) = match f() {
            Ok(v) => (v, None),
            Err(e) => (f64::NAN, Some(e.to_string())),
        };
        self.checks.push(Check {
            name: name.into(),
            value,
            tolerance,
            passed: value <= tolerance,
            note,
        });
    }

    fn skip(&mut self, name: &str, why: &str) {
        self.checks.push(Check {
            name: name.into(),
            value: f64::NAN,
            tolerance: 0.0,
            passed: false,
            note: Some(format!("not run: {why}")),
        });
    }
}

fn max_over<T>(items: &[T], f: impl Fn(&T) -> jetlag_core::Result<f64>) -> jetlag_core::Result<f64> {
    items.iter().try_fold(0.0f64, |m, x| Ok(m.max(f(x)?)))
}

/// `max |L − (h^{αβ} g_{ij} v^i_α v^j_β + U^{(α)}_{(i)} v^i_α + F)|` with the
/// declared `g`, `U`, `F`, at redrawn velocities.
fn declared_defect(problem: &Problem, d: &DeclaredDecomposition, points: &[JetPoint]) -> jetlag_core::Result<f64> {
    let space = &problem.space;
    let (p, n) = (problem.dims.p, problem.dims.n);
    let mut r = rng(problem.seed().wrapping_add(1));
    let mut worst = 0.0f64;
    for base in points {
        for _ in 0..REASSEMBLY_DRAWS {
            let q = problem.bx.redraw_velocity(base, &mut r);
            let hinv = space.h().inverse(&q)?;
            let g: Vec<f64> = d.g.iter().map(|e| e.eval(&q)).collect::<jetlag_core::Result<_>>()?;
            let mut s = match &d.f {
                Some(f) => f.eval(&q)?,
                None => 0.0,
            };
            for i in 0..n {
                for a in 0..p {
                    if let Some(u) = &d.u {
                        s += u[i * p + a].eval(&q)? * q.vel(i, a);
                    }
                    for j in 0..n {
                        for c in 0..p {
                            s += hinv[a * p + c] * g[i * n + j] * q.vel(i, a) * q.vel(j, c);
                        }
                    }
                }
            }
            worst = worst.max((space.eval_l(&q)? - s).abs());
        }
    }
    Ok(worst)
}

/// `p = 1`, constant `h`, `L = g_{ij}(x) y^i y^j`: the Riemannian case.
fn riemannian(space: &MultiTimeSpace) -> Option<&jetlag_core::ExplicitMetric> {
    match space.lagrangian() {
        Lagrangian::Electrodynamics { g, u: None, f: None }
            if space.dims().p == 1 && space.h().is_constant() && g.autonomous() =>
        {
            Some(g)
        }
        _ => None,
    }
}

pub fn verify(problem: &Problem, json_out: bool) -> Result<Rendered, CliError> {
    let space = &problem.space;
    let tol = problem.config.tolerances;
    let points = problem.points();
    let class = InstanceClass::of(space);
    let mut suite = Suite::default();

    let cfg = DiffConfig {
        crosscheck_tol: tol.crosscheck,
        ..DiffConfig::default()
    };
    let reports: Vec<_> = points.iter().map(|pt| fd_crosscheck(space, pt, &cfg)).collect();
    suite.record("crosscheck.relative", tol.crosscheck, || max_over(&reports, |r| Ok(r.as_ref().map_err(Clone::clone)?.max_relative())));
    suite.record("crosscheck.schwartz", SCHWARTZ_TOL, || max_over(&reports, |r| Ok(r.as_ref().map_err(Clone::clone)?.schwartz)));

    let verdict = regularity(problem)?;
    suite.checks.push(Check {
        name: "regularity.kronecker".into(),
        value: verdict.max_block_residual,
        tolerance: tol.regularity,
        passed: verdict.is_kronecker,
        note: verdict.diagnostics.first().cloned(),
    });
    let electro_form = problem.dims.p >= 2 || matches!(space.lagrangian(), Lagrangian::Electrodynamics { .. });
    if problem.dims.p >= 2 {
        let spread = verdict.samples.iter().map(|s| s.velocity_spread).fold(0.0, f64::max);
        suite.checks.push(Check {
            name: "regularity.velocity_free_g".into(),
            value: spread,
            tolerance: tol.regularity,
            passed: !verdict.velocity_dependent_g,
            note: None,
        });
    }
    if electro_form {
        suite.record("decomposition.reassembly", REASSEMBLY_TOL, || {
            match electrodynamics_decompose(space, &points, &problem.bx, problem.seed(), REASSEMBLY_DRAWS, REASSEMBLY_TOL) {
                Ok(d) => Ok(d.reassembly_residual),
                Err(Error::Decomposition { residual, .. }) => Ok(residual),
                Err(e) => Err(e),
            }
        });
    }
    if let Some(d) = &problem.declared {
        suite.record("decomposition.declared", REASSEMBLY_TOL, || declared_defect(problem, d, &points));
    }
    suite.record("spray.h_trace", H_TRACE_TOL, || {
        max_over(&points, |pt| Ok(spray_entities(space, pt)?.h_trace_defect(&space.h().inverse(pt)?)))
    });

    let geometry = if verdict.is_kronecker {
        canonical_nonlinear_connection(space, &points).map_err(|e| e.to_string())
    } else {
        Err("L is not Kronecker h-regular".to_string())
    };
    match geometry {
        Err(why) => {
            for name in ["cartan.compatibility", "cartan.uniqueness", "symmetry.tables", "zero_audit.cartan"] {
                suite.skip(name, &why);
            }
        }
        Ok(conn) => {
            let cartan = cartan_connection(space, conn)?;
            let packs: Vec<_> = points.iter().map(|pt| pack(&cartan, pt)).collect::<jetlag_core::Result<_>>()?;
            let pairs: Vec<(&JetPoint, _)> = points.iter().zip(&packs).collect();
            suite.record("cartan.compatibility", tol.compatibility, || {
                max_over(&pairs, |(pt, pk)| Ok(metric_compatibility(space, pk, &conn, pt)?.worst()))
            });
            suite.record("cartan.uniqueness", tol.compatibility, || {
                max_over(&pairs, |(pt, pk)| {
                    let u = uniqueness_probe(pk, space, &conn, pt, tol.compatibility)?;
                    Ok(u.g_mismatch.max(u.l_mismatch).max(u.c_mismatch).max(u.h_mismatch))
                })
            });
            suite.record("symmetry.pack", SYMMETRY_TOL, || {
                max_over(&packs, |pk| {
                    let (dl, dc) = pk.symmetry_defects();
                    Ok(dl.max(dc))
                })
            });
            suite.record("symmetry.tables", SYMMETRY_TOL, || {
                max_over(&pairs, |(pt, pk)| {
                    let tor = torsion_table(pk, &conn, pt)?;
                    let cur = curvature_table(&cartan, &conn, pt, &tor)?;
                    Ok(antisymmetry_defects(&tor, &cur).values().copied().fold(0.0, f64::max))
                })
            });
            suite.record("closed_form.cartan_torsion", tol.compatibility, || {
                max_over(&pairs, |(pt, pk)| {
                    let tor = torsion_table(pk, &conn, pt)?;
                    let checks = cartan_torsion_closed_forms(space, pk, &conn, pt, &tor)?;
                    Ok(checks.iter().map(|c| c.deviation).fold(0.0, f64::max))
                })
            });
            if problem.dims.p >= 2 || class == InstanceClass::AutonomousElectrodynamics {
                suite.record("closed_form.cartan_curvature", tol.compatibility, || {
                    max_over(&pairs, |(pt, pk)| {
                        let tor = torsion_table(pk, &conn, pt)?;
                        let cur = curvature_table(&cartan, &conn, pt, &tor)?;
                        let checks = curvature_closed_forms(space.h(), space, pt, &cur)?;
                        Ok(checks.iter().map(|c| c.deviation).fold(0.0, f64::max))
                    })
                });
            }
            suite.record("zero_audit.cartan", tol.compatibility, || {
                Ok(table_zero_audit(&cartan, &conn, class, &points, tol.compatibility)?.max_abs)
            });
            if berwald_available(&verdict) {
                let b = berwald_connection(problem.dims, space.h(), space)?;
                suite.record("zero_audit.berwald", tol.compatibility, || {
                    Ok(table_zero_audit(&b, b.nonlinear(), class, &points, tol.compatibility)?.max_abs)
                });
            }
            if class == InstanceClass::AutonomousElectrodynamics {
                let b = berwald_connection(problem.dims, space.h(), space)?;
                suite.record("closed_form.berwald", tol.compatibility, || {
                    max_over(&points, |pt| {
                        let tor = torsion_table(&pack(&b, pt)?, b.nonlinear(), pt)?;
                        let cur = curvature_table(&b, b.nonlinear(), pt, &tor)?;
                        let mut checks = berwald_torsion_closed_forms(space.h(), space, pt, &tor)?;
                        checks.extend(curvature_closed_forms(space.h(), space, pt, &cur)?);
                        Ok(checks.iter().map(|c| c.deviation).fold(0.0, f64::max))
                    })
                });
            }
            if let Some(g) = riemannian(space) {
                let n = problem.dims.n;
                suite.record("reduction.levi_civita", REDUCTION_TOL, || {
                    max_over(&pairs, |(pt, pk)| {
                        let gamma = g_christoffel(g, *pt)?;
                        let nn = conn.n(*pt)?;
                        let mut worst = pk.gk.max_abs().max(pk.ck.max_abs()).max(pk.hbar.max_abs());
                        for i in 0..n {
                            for j in 0..n {
                                let want: f64 = (0..n).map(|k| gamma[(i * n + j) * n + k] * pt.v[k]).sum();
                                worst = worst.max((nn[i * n + j] - want).abs());
                                for k in 0..n {
                                    worst = worst.max((pk.l(i, j, k) - gamma[(i * n + j) * n + k]).abs());
                                }
                            }
                        }
                        Ok(worst)
                    })
                });
            }
        }
    }

    let passed = suite.checks.iter().all(|c| c.passed);
    let code = if passed { 0 } else { 1 };
    let mut report = envelope(problem, "verify", json!({ "passed": passed, "points": points.len() }));
    report.checks = suite.checks;
    let mut notes: Vec<String> = problem.warnings.iter().map(|w| format!("warning: {w}")).collect();
    let failing: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if !failing.is_empty() {
        notes.push(format!("failing: {}", failing.join(", ")));
    }
    let body = if json_out {
        report.render()
    } else {
        let mut out = String::new();
        for c in &report.checks {
            out.push_str(&format!(
                "{} {} value={} tolerance={}",
                if c.passed { "PASS" } else { "FAIL" },
                c.name,
                num(c.value),
                num(c.tolerance)
            ));
            if let Some(note) = &c.note {
                out.push_str(&format!(" ({note})"));
            }
            out.push('\n');
        }
        out.push_str(&format!("config {}\n", problem.hash));
        out
    };
    Ok(Rendered { body, notes, code })
}
