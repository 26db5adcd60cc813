//! Instance files.
//!
//! A JSON object with fields `n`, `k`, `a`, `c`, `p0`, `delta`, optional `l`
//! and `u`, and `D` as a list of 0-based `[row, col, value]` triples in
//! storage order. Numbers are shortest round-trip decimals, so reading a
//! written file gives back the identical instance.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, json_error, read_text, write_atomic};
use crate::model::{Bounds, Instance};
use crate::sparse::CsrMatrix;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    n: usize,
    k: usize,
    a: Vec<f64>,
    c: Vec<f64>,
    p0: Vec<f64>,
    delta: Vec<f64>,
    #[serde(default)]
    l: Option<Vec<f64>>,
    #[serde(default)]
    u: Option<Vec<f64>>,
    #[serde(rename = "D")]
    d: Vec<(usize, usize, f64)>,
}

pub fn instance_to_string(instance: &Instance) -> String {
    let vector = |v: &[f64]| {
        let items: Vec<String> = v.iter().map(|&x| fmt_f64(x)).collect();
        format!("[{}]", items.join(", "))
    };
    let mut s = String::with_capacity(64 * instance.d().nnz() + 96 * instance.n());
    s.push_str("{\n");
    let _ = writeln!(s, "  \"n\": {},", instance.n());
    let _ = writeln!(s, "  \"k\": {},", instance.k());
    let _ = writeln!(s, "  \"a\": {},", vector(instance.a()));
    let _ = writeln!(s, "  \"c\": {},", vector(instance.c()));
    let _ = writeln!(s, "  \"p0\": {},", vector(instance.p0()));
    let _ = writeln!(s, "  \"delta\": {},", vector(instance.delta()));
    if let Some(b) = instance.bounds() {
        let _ = writeln!(s, "  \"l\": {},", vector(&b.lower));
        let _ = writeln!(s, "  \"u\": {},", vector(&b.upper));
    }
    s.push_str("  \"D\": [");
    for (idx, (r, c, v)) in instance.d().triplets().enumerate() {
        s.push_str(if idx == 0 { "\n    " } else { ",\n    " });
        let _ = write!(s, "[{r}, {c}, {}]", fmt_f64(v));
    }
    s.push_str("\n  ]\n}\n");
    s
}

pub fn write_instance(instance: &Instance, path: &Path) -> Result<()> {
    write_atomic(path, instance_to_string(instance).as_bytes())
}

/// Parses an instance document; `origin` labels error locations.
pub fn parse_instance(text: &str, origin: &Path) -> Result<Instance> {
    let doc: Document = serde_json::from_str(text).map_err(|e| json_error(origin, &e))?;
    let n = doc.n;
    for (name, len) in [("a", doc.a.len()), ("c", doc.c.len()), ("p0", doc.p0.len()), ("delta", doc.delta.len())] {
        if len != n {
            return Err(Error::validation(name, format!("has {len} entries but n = {n}")));
        }
    }
    let bounds = match (doc.l, doc.u) {
        (None, None) => None,
        (Some(lower), Some(upper)) => Some(Bounds { lower, upper }),
        (Some(_), None) => return Err(Error::validation("u", "lower bounds given without upper bounds")),
        (None, Some(_)) => return Err(Error::validation("l", "upper bounds given without lower bounds")),
    };
    let d = CsrMatrix::from_triplets(n, &doc.d).map_err(|e| Error::validation("D", e.to_string()))?;
    let instance = Instance::new(doc.k, doc.a, d, doc.c, doc.p0, doc.delta, bounds)?;
    instance.check_solvable()?;
    Ok(instance)
}

pub fn read_instance(path: &Path) -> Result<Instance> {
    parse_instance(&read_text(path)?, path)
}
