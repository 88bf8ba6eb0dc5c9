//! Report envelope and the fixed-precision JSON and CSV writers.

use serde::Serialize;
use serde_json::Value;

/// Every float is printed with 17 significant digits so it parses back to
/// the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        // JSON has no infinities; CSV readers accept these spellings
        format!("{x}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct GeometryReport {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub seed: u64,
    pub warnings: Vec<String>,
    pub result: Value,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
}

impl GeometryReport {
    pub fn new(command: &'static str, hash: &str, seed: u64, warnings: &[String], result: Value) -> Self {
        GeometryReport {
            tool: "jetlag",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_hash: hash.to_string(),
            seed,
            warnings: warnings.to_vec(),
            result,
            checks: Vec::new(),
        }
    }

    pub fn render(&self) -> String {
        let v = serde_json::to_value(self).expect("reports serialize");
        let mut out = String::new();
        write_value(&v, 0, &mut out);
        out.push('\n');
        out
    }
}

pub fn to_value<T: Serialize>(t: &T) -> Value {
    serde_json::to_value(t).expect("reports serialize")
}

fn indent(level: usize, out: &mut String) {
    out.push('\n');
    for _ in 0..level {
        out.push_str("  ");
    }
}

/// Pretty JSON with floats through [`num`]. Non-finite floats were already
/// mapped to `null` by serde_json.
pub fn write_value(v: &Value, level: usize, out: &mut String) {
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => match (n.as_u64(), n.as_i64()) {
            (Some(u), _) => out.push_str(&u.to_string()),
            (None, Some(i)) => out.push_str(&i.to_string()),
            _ => out.push_str(&num(n.as_f64().unwrap_or(f64::NAN))),
        },
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) => {
            // flat numeric arrays stay on one line
            let inline = items.iter().all(|x| x.is_number());
            out.push('[');
            for (k, x) in items.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                    if inline {
                        out.push(' ');
                    }
                }
                if !inline {
                    indent(level + 1, out);
                }
                write_value(x, level + 1, out);
            }
            if !inline {
                indent(level, out);
            }
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push('{');
            for (k, (key, x)) in map.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                indent(level + 1, out);
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push_str(": ");
                write_value(x, level + 1, out);
            }
            indent(level, out);
            out.push('}');
        }
    }
}

/// CSV with a header row; every cell goes through [`num`].
pub fn csv(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| num(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = num(x);
            assert_eq!(s.parse::<f64>().unwrap().to_bits(), x.to_bits(), "{s}");
            let digits: String = s.split('e').next().unwrap().chars().filter(|c| c.is_ascii_digit()).collect();
            assert_eq!(digits.len(), 17);
        }
    }

    #[test]
    fn rendered_json_parses_back() {
        let v = serde_json::json!({"a": [1.5, 2, -3], "b": {"c": null, "d": "q\"uote"}, "e": []});
        let mut out = String::new();
        write_value(&v, 0, &mut out);
        let back: Value = serde_json::from_str(&out).unwrap();
        assert_eq!(back["a"][0].as_f64(), Some(1.5));
        assert_eq!(back["b"]["d"], "q\"uote");
        assert!(out.contains("1.5000000000000000e0"));
    }

    #[test]
    fn csv_layout() {
        let s = csv(&["t".into(), "x1".into()], vec![vec![0.0, 1.0]]);
        assert_eq!(s, "t,x1\n0.0000000000000000e0,1.0000000000000000e0\n");
    }
}
