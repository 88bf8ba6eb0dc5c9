//! Problem configuration: the JSON schema and its translation into a
//! [`MultiTimeSpace`] plus sampling data.

use jetlag_core::dsl::format;
use jetlag_core::{parse, Dims, ExplicitMetric, Expr, JetPoint, Lagrangian, MultiTimeSpace, SamplingBox, TemporalMetric};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub dims: DimsConfig,
    pub lagrangian: LagrangianConfig,
    pub temporal_metric: TemporalConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub solver: Option<SolverConfig>,
    #[serde(default)]
    pub grid: Option<GridConfig>,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct DimsConfig {
    pub p: usize,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LagrangianKind {
    Expression,
    Harmonic,
    Electrodynamics,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianConfig {
    pub kind: LagrangianKind,
    #[serde(default)]
    pub expression: Option<String>,
    #[serde(default)]
    pub g_entries: Option<Vec<Vec<String>>>,
    /// Rows are spatial indices `i`, columns temporal indices `α`.
    #[serde(default, rename = "U_entries")]
    pub u_entries: Option<Vec<Vec<String>>>,
    #[serde(default, rename = "F")]
    pub f: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TemporalKind {
    Flat,
    Expression,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TemporalConfig {
    pub kind: TemporalKind,
    #[serde(default)]
    pub entries: Option<Vec<Vec<String>>>,
    pub signature: [usize; 2],
}

/// One `[lo, hi]` for every coordinate, or one per coordinate in the order
/// `t, x, v` with `v^i_α` at `i·p + α`.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum BoxSpec {
    All([f64; 2]),
    PerCoordinate(Vec<[f64; 2]>),
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    #[serde(rename = "box", default = "default_box")]
    pub bx: BoxSpec,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_box() -> BoxSpec {
    BoxSpec::All([-1.0, 1.0])
}

fn default_count() -> usize {
    64
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            bx: default_box(),
            count: default_count(),
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_regularity")]
    pub regularity: f64,
    #[serde(default = "default_compatibility")]
    pub compatibility: f64,
    #[serde(default = "default_crosscheck")]
    pub crosscheck: f64,
}

fn default_regularity() -> f64 {
    1e-6
}
fn default_compatibility() -> f64 {
    1e-7
}
fn default_crosscheck() -> f64 {
    1e-5
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            regularity: default_regularity(),
            compatibility: default_compatibility(),
            crosscheck: default_crosscheck(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub t_end: f64,
    pub dt: f64,
    pub initial: InitialConfig,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default)]
    pub t0: f64,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub shape: Vec<usize>,
    /// One `[lo, hi]` per temporal axis.
    #[serde(rename = "box")]
    pub bx: Vec<[f64; 2]>,
    /// Components `x^i(t)` of the map whose harmonic residual is sampled.
    pub map: Vec<String>,
}

/// `g`, `U`, `F` claimed alongside an expression Lagrangian; `verify`
/// checks that they reassemble `L`.
#[derive(Clone, Debug)]
pub struct DeclaredDecomposition {
    pub g: Vec<Expr>,
    pub u: Option<Vec<Expr>>,
    pub f: Option<Expr>,
}

/// A validated configuration.
#[derive(Clone, Debug)]
pub struct Problem {
    pub config: ProblemConfig,
    pub dims: Dims,
    pub space: MultiTimeSpace,
    pub bx: SamplingBox,
    pub declared: Option<DeclaredDecomposition>,
    pub warnings: Vec<String>,
    /// SHA-256 of the canonical (sorted-key, compact) JSON.
    pub hash: String,
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Config {
        path: path.into(),
        message: message.into(),
    }
}

pub fn config_hash(value: &serde_json::Value) -> String {
    // serde_json maps are ordered by key, so this is canonical
    let canonical = serde_json::to_string(value).expect("a JSON value always serializes");
    let digest = Sha256::digest(canonical.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Problem, CliError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| invalid("config", e.to_string()))?;
        let config: ProblemConfig = serde_json::from_value(value.clone()).map_err(|e| invalid("config", e.to_string()))?;
        let hash = config_hash(&value);
        Problem::build(config, hash)
    }

    fn build(config: ProblemConfig, hash: String) -> Result<Problem, CliError> {
        let dims = Dims::new(config.dims.p, config.dims.n).map_err(|e| invalid("dims", e.to_string()))?;
        let mut warnings = Vec::new();
        let h = temporal_metric(&config.temporal_metric, dims, &mut warnings)?;
        let (lagrangian, declared) = lagrangian(&config.lagrangian, dims, &mut warnings)?;
        let space = MultiTimeSpace::new(dims, lagrangian, h).map_err(|e| invalid("lagrangian", e.to_string()))?;
        let bx = sampling_box(&config.sampling, dims)?;
        if config.sampling.count == 0 {
            return Err(invalid("sampling.count", "must be at least 1"));
        }
        if let Some(s) = &config.solver {
            if !(s.dt > 0.0) || !s.t_end.is_finite() || !s.dt.is_finite() {
                return Err(invalid("solver", "dt must be positive and t_end finite"));
            }
        }
        Ok(Problem {
            config,
            dims,
            space,
            bx,
            declared,
            warnings,
            hash,
        })
    }

    pub fn seed(&self) -> u64 {
        self.config.sampling.seed
    }

    pub fn points(&self) -> Vec<JetPoint> {
        self.bx.samples(self.config.sampling.count, self.seed())
    }

    /// Centre of the sampling box.
    pub fn centre(&self) -> JetPoint {
        let flat: Vec<f64> = self.bx.ranges().iter().map(|(lo, hi)| 0.5 * (lo + hi)).collect();
        JetPoint::from_flat(self.dims, &flat)
    }

    /// Parses `t=..;x=..;v=..`; omitted groups take the box centre.
    pub fn point(&self, spec: Option<&str>) -> Result<JetPoint, CliError> {
        let mut pt = self.centre();
        let Some(spec) = spec else { return Ok(pt) };
        let (p, n) = (self.dims.p, self.dims.n);
        for group in spec.split(';').map(str::trim).filter(|g| !g.is_empty()) {
            let (key, values) = group
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("--point group `{group}` is not of the form key=values")))?;
            let values: Vec<f64> = values
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("--point group `{group}`: {e}")))?;
            let (target, want) = match key.trim() {
                "t" => (&mut pt.t, p),
                "x" => (&mut pt.x, n),
                "v" => (&mut pt.v, n * p),
                other => return Err(CliError::Usage(format!("--point key `{other}` is not t, x or v"))),
            };
            if values.len() != want {
                return Err(CliError::Usage(format!("--point `{key}` needs {want} values, got {}", values.len())));
            }
            target.copy_from_slice(&values);
        }
        Ok(pt)
    }
}

fn expr(text: &str, dims: Dims, path: &str) -> Result<Expr, CliError> {
    parse(text, dims).map_err(|d| invalid(path, d.to_string()))
}

/// Square matrix of expressions in row-major order, with a warning for every
/// pair that differs from its transpose after normalization.
fn matrix(rows: &[Vec<String>], size: usize, dims: Dims, path: &str, warnings: &mut Vec<String>) -> Result<Vec<Expr>, CliError> {
    if rows.len() != size || rows.iter().any(|r| r.len() != size) {
        return Err(invalid(path, format!("must be a {size}x{size} matrix")));
    }
    let mut out = Vec::with_capacity(size * size);
    for (i, row) in rows.iter().enumerate() {
        for (j, text) in row.iter().enumerate() {
            out.push(expr(text, dims, &format!("{path}[{i}][{j}]"))?);
        }
    }
    for i in 0..size {
        for j in i + 1..size {
            let (a, b) = (format(&out[i * size + j]), format(&out[j * size + i]));
            if a != b {
                warnings.push(format!(
                    "{path}[{i}][{j}] and {path}[{j}][{i}] differ after normalization ({a} vs {b}); the symmetric part is used"
                ));
            }
        }
    }
    Ok(out)
}

fn temporal_metric(cfg: &TemporalConfig, dims: Dims, warnings: &mut Vec<String>) -> Result<TemporalMetric, CliError> {
    let sig = (cfg.signature[0], cfg.signature[1]);
    if sig.0 + sig.1 != dims.p {
        return Err(invalid("temporal_metric.signature", format!("must add up to p = {}", dims.p)));
    }
    let path = "temporal_metric";
    match (cfg.kind, &cfg.entries) {
        (TemporalKind::Flat, None) => TemporalMetric::flat(sig).map_err(|e| invalid(path, e.to_string())),
        (TemporalKind::Flat, Some(_)) => Err(invalid("temporal_metric.entries", "not allowed for a flat metric")),
        (TemporalKind::Expression, None) => Err(invalid("temporal_metric.entries", "required for an expression metric")),
        (TemporalKind::Expression, Some(rows)) => {
            let entries = matrix(rows, dims.p, dims, "temporal_metric.entries", warnings)?;
            let h = TemporalMetric::from_entries(dims.p, entries, sig).map_err(|e| invalid(path, e.to_string()))?;
            Ok(h)
        }
    }
}

fn u_entries(rows: &[Vec<String>], dims: Dims) -> Result<Vec<Expr>, CliError> {
    if rows.len() != dims.n || rows.iter().any(|r| r.len() != dims.p) {
        return Err(invalid("lagrangian.U_entries", format!("must be {} rows of {} entries", dims.n, dims.p)));
    }
    let mut out = Vec::with_capacity(dims.n * dims.p);
    for (i, row) in rows.iter().enumerate() {
        for (a, text) in row.iter().enumerate() {
            out.push(expr(text, dims, &format!("lagrangian.U_entries[{i}][{a}]"))?);
        }
    }
    Ok(out)
}

fn lagrangian(
    cfg: &LagrangianConfig,
    dims: Dims,
    warnings: &mut Vec<String>,
) -> Result<(Lagrangian, Option<DeclaredDecomposition>), CliError> {
    let g = cfg
        .g_entries
        .as_ref()
        .map(|rows| matrix(rows, dims.n, dims, "lagrangian.g_entries", warnings))
        .transpose()?;
    let u = cfg.u_entries.as_ref().map(|rows| u_entries(rows, dims)).transpose()?;
    let f = cfg.f.as_ref().map(|t| expr(t, dims, "lagrangian.F")).transpose()?;
    let metric = |g: Vec<Expr>| ExplicitMetric::new(dims, g).map_err(|e| invalid("lagrangian.g_entries", e.to_string()));
    match cfg.kind {
        LagrangianKind::Expression => {
            let text = cfg
                .expression
                .as_ref()
                .ok_or_else(|| invalid("lagrangian.expression", "required for kind \"expression\""))?;
            let l = expr(text, dims, "lagrangian.expression")?;
            let declared = match (g, u, f) {
                (None, None, None) => None,
                (Some(g), u, f) => Some(DeclaredDecomposition { g, u, f }),
                _ => return Err(invalid("lagrangian.g_entries", "a declared decomposition needs g_entries")),
            };
            Ok((Lagrangian::Expression(l), declared))
        }
        LagrangianKind::Harmonic => {
            if cfg.expression.is_some() || u.is_some() || f.is_some() {
                return Err(invalid("lagrangian", "kind \"harmonic\" takes g_entries only"));
            }
            let g = g.ok_or_else(|| invalid("lagrangian.g_entries", "required for kind \"harmonic\""))?;
            Ok((Lagrangian::Electrodynamics { g: metric(g)?, u: None, f: None }, None))
        }
        LagrangianKind::Electrodynamics => {
            if cfg.expression.is_some() {
                return Err(invalid("lagrangian.expression", "not allowed for kind \"electrodynamics\""));
            }
            let g = g.ok_or_else(|| invalid("lagrangian.g_entries", "required for kind \"electrodynamics\""))?;
            Ok((Lagrangian::Electrodynamics { g: metric(g)?, u, f }, None))
        }
    }
}

fn sampling_box(cfg: &SamplingConfig, dims: Dims) -> Result<SamplingBox, CliError> {
    let m = dims.coord_count();
    let ranges: Vec<(f64, f64)> = match &cfg.bx {
        BoxSpec::All([lo, hi]) => vec![(*lo, *hi); m],
        BoxSpec::PerCoordinate(r) if r.len() == m => r.iter().map(|[lo, hi]| (*lo, *hi)).collect(),
        BoxSpec::PerCoordinate(r) => {
            return Err(invalid("sampling.box", format!("needs one range or {m} ranges, got {}", r.len())));
        }
    };
    SamplingBox::new(dims, ranges).map_err(|e| invalid("sampling.box", e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> serde_json::Value {
        serde_json::json!({
            "dims": {"p": 1, "n": 2},
            "lagrangian": {"kind": "harmonic", "g_entries": [["1", "0"], ["0", "1"]]},
            "temporal_metric": {"kind": "flat", "signature": [1, 0]}
        })
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let p = Problem::from_json(&base().to_string()).unwrap();
        assert_eq!(p.config.sampling.count, 64);
        assert_eq!(p.bx.ranges().len(), 5);
        assert!(p.warnings.is_empty());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut v = base();
        v["lagrangian"]["extra"] = serde_json::json!(1);
        assert!(matches!(Problem::from_json(&v.to_string()), Err(CliError::Config { .. })));
        let mut v = base();
        v["colour"] = serde_json::json!("blue");
        assert!(Problem::from_json(&v.to_string()).is_err());
    }

    #[test]
    fn parse_errors_carry_path_and_position() {
        let mut v = base();
        v["lagrangian"]["g_entries"][0][0] = serde_json::json!("1 +");
        let err = Problem::from_json(&v.to_string()).unwrap_err().to_string();
        assert!(err.starts_with("lagrangian.g_entries[0][0]: 1:4:"), "{err}");
    }

    #[test]
    fn asymmetric_text_warns() {
        let mut v = base();
        v["lagrangian"]["g_entries"] = serde_json::json!([["1", "x1"], ["0", "1"]]);
        let p = Problem::from_json(&v.to_string()).unwrap();
        assert_eq!(p.warnings.len(), 1);
        // equal after normalization: no warning
        v["lagrangian"]["g_entries"] = serde_json::json!([["1", "(x1)"], ["x1 ", "1"]]);
        assert!(Problem::from_json(&v.to_string()).unwrap().warnings.is_empty());
    }

    #[test]
    fn hash_ignores_key_order_and_whitespace() {
        let a = r#"{"dims":{"p":1,"n":2},"lagrangian":{"kind":"harmonic","g_entries":[["1","0"],["0","1"]]},"temporal_metric":{"kind":"flat","signature":[1,0]}}"#;
        let b = r#"{ "temporal_metric": {"signature":[1,0], "kind":"flat"},
                     "lagrangian": {"g_entries":[["1","0"],["0","1"]], "kind":"harmonic"}, "dims": {"n":2,"p":1} }"#;
        assert_eq!(Problem::from_json(a).unwrap().hash, Problem::from_json(b).unwrap().hash);
    }

    #[test]
    fn point_groups() {
        let p = Problem::from_json(&base().to_string()).unwrap();
        let pt = p.point(Some("t=0.5; x=1,2")).unwrap();
        assert_eq!((pt.t[0], pt.x[1], pt.v[0]), (0.5, 2.0, 0.0));
        assert!(p.point(Some("x=1")).is_err());
        assert!(p.point(Some("y=1")).is_err());
    }

    #[test]
    fn box_shape_checked() {
        let mut v = base();
        v["sampling"] = serde_json::json!({"box": [[0, 1], [0, 1]]});
        assert!(Problem::from_json(&v.to_string()).is_err());
    }
}
