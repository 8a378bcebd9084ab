//! JSON inputs, CSV outputs and atomic file writes.
//!
//! A POVM file looks like
//!
//! ```json
//! {"outcomes": [1, -1],
//!  "effects": [[[[0.5, 0], [0.5, 0]], [[0.5, 0], [0.5, 0]]],
//!              [[[0.5, 0], [-0.5, 0]], [[-0.5, 0], [0.5, 0]]]]}
//! ```
//!
//! with each effect a 2×2 matrix of `[re, im]` entries. Coefficient files are
//! either a bare array or `{"coeffs": [...], "first": k}`, with entries given
//! as real numbers or `[re, im]` pairs.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::operator::{Mat2, Povm};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovmJson {
    pub outcomes: Vec<f64>,
    pub effects: Vec<[[[f64; 2]; 2]; 2]>,
}

impl PovmJson {
    pub fn from_povm(povm: &Povm) -> Self {
        let effects = povm
            .effects()
            .iter()
            .map(|e| {
                let mut m = [[[0.0; 2]; 2]; 2];
                for (i, row) in m.iter_mut().enumerate() {
                    for (j, cell) in row.iter_mut().enumerate() {
                        let z = e.get(i, j);
                        *cell = [z.re, z.im];
                    }
                }
                m
            })
            .collect();
        PovmJson { outcomes: povm.outcomes().to_vec(), effects }
    }

    /// Builds and validates the POVM.
    pub fn into_povm(self) -> Result<Povm> {
        let effects = self
            .effects
            .iter()
            .map(|m| {
                let z = |i: usize, j: usize| Complex64::new(m[i][j][0], m[i][j][1]);
                Mat2([[z(0, 0), z(0, 1)], [z(1, 0), z(1, 1)]])
            })
            .collect();
        Povm::new(self.outcomes, effects)
    }
}

pub fn povm_from_json_str(text: &str) -> Result<Povm> {
    let parsed: PovmJson =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("POVM JSON: {e}")))?;
    parsed.into_povm()
}

pub fn povm_to_json(povm: &Povm) -> String {
    serde_json::to_string_pretty(&PovmJson::from_povm(povm)).expect("POVM serializes")
}

/// `builtin:sx`, `builtin:sy`, `builtin:sz`, or a path to a POVM JSON file.
pub fn load_povm(spec: &str) -> Result<Povm> {
    match spec {
        "builtin:sx" => Ok(Povm::sigma_x()),
        "builtin:sy" => Ok(Povm::sigma_y()),
        "builtin:sz" => Ok(Povm::sigma_z()),
        s if s.starts_with("builtin:") => Err(Error::InvalidInput(format!("unknown builtin POVM {s}"))),
        path => povm_from_json_str(&read_text(path)?),
    }
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn complex_entry(v: &Value) -> Result<Complex64> {
    match v {
        Value::Number(n) => Ok(Complex64::new(n.as_f64().unwrap_or(f64::NAN), 0.0)),
        Value::Array(pair) if pair.len() == 2 => {
            let re = pair[0].as_f64();
            let im = pair[1].as_f64();
            match (re, im) {
                (Some(re), Some(im)) => Ok(Complex64::new(re, im)),
                _ => Err(Error::InvalidInput(format!("bad complex entry {v}"))),
            }
        }
        _ => Err(Error::InvalidInput(format!("bad complex entry {v}"))),
    }
}

fn complex_array(v: &Value) -> Result<Vec<Complex64>> {
    v.as_array()
        .ok_or_else(|| Error::InvalidInput("coefficients must be a JSON array".into()))?
        .iter()
        .map(complex_entry)
        .collect()
}

/// Coefficients and the excitation number of the first one.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffsJson {
    pub coeffs: Vec<Complex64>,
    pub first: usize,
}

pub fn coeffs_from_json_str(text: &str) -> Result<CoeffsJson> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("coefficient JSON: {e}")))?;
    match &v {
        Value::Array(_) => Ok(CoeffsJson { coeffs: complex_array(&v)?, first: 0 }),
        Value::Object(map) => {
            if let Some(key) = map.keys().find(|k| !matches!(k.as_str(), "coeffs" | "first")) {
                return Err(Error::InvalidInput(format!("unknown key {key:?} in coefficient JSON")));
            }
            let coeffs = complex_array(map.get("coeffs").ok_or_else(|| Error::InvalidInput("missing \"coeffs\"".into()))?)?;
            let first = match map.get("first") {
                None => 0,
                Some(f) => f
                    .as_u64()
                    .ok_or_else(|| Error::InvalidInput("\"first\" must be a non-negative integer".into()))?
                    as usize,
            };
            Ok(CoeffsJson { coeffs, first })
        }
        _ => Err(Error::InvalidInput("coefficient JSON must be an array or object".into())),
    }
}

/// Square matrix of coefficients `c_kl`, given as an array of rows.
pub fn coeff_matrix_from_json_str(text: &str) -> Result<(usize, Vec<Complex64>)> {
    let v: Value = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("coefficient JSON: {e}")))?;
    let rows = v.as_array().ok_or_else(|| Error::InvalidInput("expected an array of rows".into()))?;
    let dim = rows.len();
    let mut out = Vec::with_capacity(dim * dim);
    for row in rows {
        let r = complex_array(row)?;
        if r.len() != dim {
            return Err(Error::InvalidInput("coefficient matrix must be square".into()));
        }
        out.extend(r);
    }
    Ok((dim, out))
}

/// Normalized coefficients with independent uniform real and imaginary
/// parts, reproducible from `seed`.
pub fn random_coeffs(dim: usize, seed: u64) -> Vec<Complex64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut c: Vec<Complex64> =
        (0..dim).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    let norm = c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    c.iter_mut().for_each(|z| *z /= norm);
    c
}

/// Named single-party states, or a path to a coefficient JSON file.
///
/// `w` is `|N,1⟩`, `dicke:K` is `|N,K⟩`, `product` is `|N,0⟩`, `equal` is
/// `(|N,0⟩ + |N,1⟩)/√2`, `reference` is `(2/√10, 1/√2, 1/√10)` on `k = 0,1,2`
/// and `random` draws `dim` coefficients from `seed`.
pub fn resolve_coeffs(spec: &str, seed: u64, dim: usize) -> Result<CoeffsJson> {
    let one = |first| Ok(CoeffsJson { coeffs: vec![Complex64::new(1.0, 0.0)], first });
    match spec {
        "w" => one(1),
        "product" => one(0),
        "equal" => {
            let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            Ok(CoeffsJson { coeffs: vec![h, h], first: 0 })
        }
        "reference" => Ok(CoeffsJson { coeffs: crate::bell::reference_state(), first: 0 }),
        "random" => {
            if dim == 0 {
                return Err(Error::InvalidInput("random state needs dim >= 1".into()));
            }
            Ok(CoeffsJson { coeffs: random_coeffs(dim, seed), first: 0 })
        }
        s if s.starts_with("dicke:") => {
            let k = s[6..].parse::<usize>().map_err(|_| Error::InvalidInput(format!("bad Dicke index in {s:?}")))?;
            one(k)
        }
        s if s.trim_start().starts_with('[') || s.trim_start().starts_with('{') => coeffs_from_json_str(s),
        path => coeffs_from_json_str(&read_text(path)?),
    }
}

/// `a:b:n` for `n` evenly spaced points, or a comma-separated list.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("bad grid {spec:?}; use a:b:n or a comma list"));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = if parts.len() == 3 {
        let a: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let b: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let n: usize = parts[2].trim().parse().map_err(|_| bad())?;
        if n == 0 || (n == 1 && a != b) {
            return Err(bad());
        }
        if n == 1 { vec![a] } else { crate::numeric::linspace(a, b, n) }
    } else {
        spec.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?
    };
    if grid.is_empty() || grid.iter().any(|x| !x.is_finite()) {
        return Err(bad());
    }
    Ok(grid)
}

/// Formats a float with 18 significant digits.
pub fn fmt_float(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if x.is_finite() {
        format!("{x:.17e}")
    } else {
        format!("{x}")
    }
}

/// CSV text with a header line and one row per record.
pub fn csv_string<'a>(header: &[&str], rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.iter().map(|&x| fmt_float(x)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Writes through a temporary file in the target directory, then renames it
/// into place, so readers never see a partial file.
pub fn atomic_write(path: impl AsRef<Path>, contents: &[u8]) -> Result<()> {
    let path = path.as_ref();
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}
