//! Instance file formats.
//!
//! NK: a JSON object `{"type": "nk", n, k, seed, links, tables}` with table
//! entries written in scientific notation with 17 significant digits.
//!
//! QUBO: a text header `qubo n nnz` followed by `nnz` lines `i j q_ij`
//! (0-indexed). Files may list the upper triangle only (mirrored on load) or
//! the full matrix (both halves must agree). Repeating an `(i, j)` pair is an
//! error. Lines starting with `#` are comments; `# meta ...` carries the
//! generator parameters.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::qubo::{Family, QuboInstance, QuboMetadata};
use super::{Instance, NkInstance};
use crate::error::{Error, Result};

pub fn save_instance(inst: &Instance, path: &Path) -> Result<()> {
    save_with_provenance(inst, path, None)
}

pub(crate) fn save_with_provenance(inst: &Instance, path: &Path, provenance: Option<&str>) -> Result<()> {
    let text = write_instance(inst, provenance);
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_instance(path: &Path) -> Result<Instance> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_instance(&text, path)
}

/// Serialize to the on-disk text form.
pub fn write_instance(inst: &Instance, provenance: Option<&str>) -> String {
    match inst {
        Instance::Nk(nk) => write_nk(nk, provenance),
        Instance::Qubo(q) => write_qubo(q, provenance),
    }
}

/// Parse either format; `origin` is only used in error messages.
pub fn read_instance(text: &str, origin: &Path) -> Result<Instance> {
    if text.trim_start().starts_with('{') {
        read_nk(text, origin).map(Instance::Nk)
    } else {
        read_qubo(text, origin).map(Instance::Qubo)
    }
}

fn write_nk(inst: &NkInstance, provenance: Option<&str>) -> String {
    let mut s = String::new();
    s.push_str("{\n  \"type\": \"nk\",\n");
    if let Some(p) = provenance {
        let _ = writeln!(s, "  \"provenance\": {},", serde_json::Value::from(p));
    }
    let _ = writeln!(s, "  \"n\": {},\n  \"k\": {},\n  \"seed\": {},", inst.n(), inst.k(), inst.seed());
    s.push_str("  \"links\": [");
    for (i, l) in inst.links().iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let items: Vec<String> = l.iter().map(usize::to_string).collect();
        let _ = write!(s, "[{}]", items.join(", "));
    }
    s.push_str("],\n  \"tables\": [\n");
    let n = inst.tables().len();
    for (i, t) in inst.tables().iter().enumerate() {
        let items: Vec<String> = t.iter().map(|v| format!("{v:.16e}")).collect();
        let _ = write!(s, "    [{}]", items.join(", "));
        s.push_str(if i + 1 < n { ",\n" } else { "\n" });
    }
    s.push_str("  ]\n}\n");
    s
}

fn read_nk(text: &str, origin: &Path) -> Result<NkInstance> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::malformed(origin, e.to_string()))?;
    match value.get("type").and_then(|t| t.as_str()) {
        Some("nk") => {}
        other => {
            return Err(Error::malformed(origin, format!("expected type \"nk\", found {other:?}")));
        }
    }
    serde_json::from_value(value).map_err(|e| Error::malformed(origin, e.to_string()))
}

fn write_qubo(q: &QuboInstance, provenance: Option<&str>) -> String {
    let n = q.n();
    let mut lines = Vec::new();
    for i in 0..n {
        for j in i..n {
            let v = q.get(i, j);
            if v != 0.0 {
                lines.push(format!("{i} {j} {v}"));
            }
        }
    }
    let mut s = format!("qubo {n} {}\n", lines.len());
    if let Some(m) = q.metadata() {
        let family = m.family.map(|f| f.short_name()).unwrap_or("none");
        let _ = writeln!(
            s,
            "# meta m={} d={} alpha={} family={} seed={}",
            m.m, m.d, m.alpha, family, m.seed
        );
    }
    if let Some(p) = provenance {
        let _ = writeln!(s, "# provenance {p}");
    }
    for l in lines {
        s.push_str(&l);
        s.push('\n');
    }
    s
}

fn parse_meta(line: &str, origin: &Path) -> Result<QuboMetadata> {
    let mut fields = BTreeMap::new();
    for tok in line.split_whitespace() {
        let (k, v) = tok
            .split_once('=')
            .ok_or_else(|| Error::malformed(origin, format!("bad meta token '{tok}'")))?;
        fields.insert(k, v);
    }
    let get = |k: &str| {
        fields
            .get(k)
            .copied()
            .ok_or_else(|| Error::malformed(origin, format!("meta missing '{k}'")))
    };
    let bad = |k: &str| Error::malformed(origin, format!("meta field '{k}' unparsable"));
    let family = match get("family")? {
        "none" => None,
        f => Some(f.parse::<Family>().map_err(|_| bad("family"))?),
    };
    Ok(QuboMetadata {
        m: get("m")?.parse().map_err(|_| bad("m"))?,
        d: get("d")?.parse().map_err(|_| bad("d"))?,
        alpha: get("alpha")?.parse().map_err(|_| bad("alpha"))?,
        family,
        seed: get("seed")?.parse().map_err(|_| bad("seed"))?,
    })
}

fn read_qubo(text: &str, origin: &Path) -> Result<QuboInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut meta = None;
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some(m) = comment.trim_start().strip_prefix("meta ") {
                meta = Some(parse_meta(m, origin)?);
            }
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let at = |msg: &str| Error::malformed(origin, format!("line {}: {msg}", lineno + 1));
        match header {
            None => {
                if toks.len() != 3 || toks[0] != "qubo" {
                    return Err(at("expected header 'qubo n nnz'"));
                }
                let n = toks[1].parse().map_err(|_| at("bad n"))?;
                let nnz = toks[2].parse().map_err(|_| at("bad nnz"))?;
                header = Some((n, nnz));
            }
            Some((n, _)) => {
                if toks.len() != 3 {
                    return Err(at("expected 'i j q_ij'"));
                }
                let i: usize = toks[0].parse().map_err(|_| at("bad row index"))?;
                let j: usize = toks[1].parse().map_err(|_| at("bad column index"))?;
                let v: f64 = toks[2].parse().map_err(|_| at("bad coefficient"))?;
                if i >= n || j >= n {
                    return Err(Error::IndexOutOfRange { index: i.max(j), n });
                }
                if !v.is_finite() {
                    return Err(at("non-finite coefficient"));
                }
                if entries.insert((i, j), v).is_some() {
                    return Err(Error::DuplicateEntry { i, j });
                }
            }
        }
    }
    let (n, nnz) = header.ok_or_else(|| Error::malformed(origin, "missing header"))?;
    if entries.len() != nnz {
        return Err(Error::malformed(
            origin,
            format!("header declares {nnz} entries, found {}", entries.len()),
        ));
    }
    if n == 0 {
        return Err(Error::malformed(origin, "n must be positive"));
    }
    let mut q = vec![0.0; n * n];
    for (&(i, j), &v) in &entries {
        if let Some(&t) = entries.get(&(j, i)) {
            if t != v {
                return Err(Error::Asymmetric { i, j, a: v, b: t });
            }
        }
        q[i * n + j] = v;
        q[j * n + i] = v;
    }
    let inst = QuboInstance::from_dense(n, q)?;
    Ok(match meta {
        Some(m) => inst.with_metadata(m),
        None => inst,
    })
}
