//! JSON file formats exchanged with the CLI and other tools.
//!
//! Complex scalars are two-element arrays `[re, im]`. Matrices are nested
//! row-major arrays of such pairs. Times are decimal strings.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cocycle::{StepFunction, Time};
use crate::error::{parse_err, Error, Result};
use crate::generator::GeneratorMatrix;
use crate::models::Lattice;
use crate::numerics::{ComplexMatrix, C64};

pub type Pair = [f64; 2];

pub fn pair(z: C64) -> Pair {
    [z.re, z.im]
}

pub fn from_pair(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

fn finite_pair(p: Pair, field: &str) -> Result<C64> {
    if p[0].is_finite() && p[1].is_finite() {
        Ok(from_pair(p))
    } else {
        Err(parse_err(field, "non-finite entry"))
    }
}

pub fn matrix_to_json(m: &ComplexMatrix) -> Vec<Vec<Pair>> {
    (0..m.rows())
        .map(|r| m.row(r).iter().map(|&z| pair(z)).collect())
        .collect()
}

pub fn matrix_from_json(rows: &[Vec<Pair>], field: &str) -> Result<ComplexMatrix> {
    let nr = rows.len();
    let nc = rows.first().map_or(0, Vec::len);
    if nr == 0 || nc == 0 {
        return Err(parse_err(field, "empty matrix"));
    }
    let mut data = Vec::with_capacity(nr * nc);
    for (r, row) in rows.iter().enumerate() {
        if row.len() != nc {
            return Err(parse_err(
                format!("{field}[{r}]"),
                format!("row has {} entries, expected {nc}", row.len()),
            ));
        }
        for (c, &p) in row.iter().enumerate() {
            data.push(finite_pair(p, &format!("{field}[{r}][{c}]"))?);
        }
    }
    ComplexMatrix::from_row_major(nr, nc, data)
}

/// `{"h_dim": m, "noise_dim": d, "blocks": [[M_αβ]]}` with an optional
/// `"lattice"` describing which basis edges are truncations.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeneratorFile {
    pub h_dim: usize,
    pub noise_dim: usize,
    pub blocks: Vec<Vec<Vec<Vec<Pair>>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lattice: Option<Lattice>,
}

impl GeneratorFile {
    pub fn from_generator(f: &GeneratorMatrix) -> Self {
        let blocks = f
            .block_rows()
            .iter()
            .map(|row| row.iter().map(matrix_to_json).collect())
            .collect();
        Self {
            h_dim: f.h_dim(),
            noise_dim: f.noise_dim(),
            blocks,
            lattice: Some(f.lattice()),
        }
    }

    pub fn into_generator(self) -> Result<GeneratorMatrix> {
        if self.h_dim == 0 {
            return Err(parse_err("h_dim", "must be positive"));
        }
        let aug = self.noise_dim + 1;
        if self.blocks.len() != aug {
            return Err(parse_err(
                "blocks",
                format!("{} block rows, expected noise_dim + 1 = {aug}", self.blocks.len()),
            ));
        }
        let mut rows = Vec::with_capacity(aug);
        for (a, row) in self.blocks.iter().enumerate() {
            if row.len() != aug {
                return Err(parse_err(
                    format!("blocks[{a}]"),
                    format!("{} blocks, expected {aug}", row.len()),
                ));
            }
            let mut out = Vec::with_capacity(aug);
            for (b, m) in row.iter().enumerate() {
                let field = format!("blocks[{a}][{b}]");
                let mat = matrix_from_json(m, &field)?;
                if mat.shape() != (self.h_dim, self.h_dim) {
                    return Err(parse_err(
                        field,
                        format!(
                            "block is {}x{}, expected h_dim x h_dim = {}x{}",
                            mat.rows(),
                            mat.cols(),
                            self.h_dim,
                            self.h_dim
                        ),
                    ));
                }
                out.push(mat);
            }
            rows.push(out);
        }
        let f = GeneratorMatrix::from_blocks(rows)?;
        match self.lattice {
            Some(l) => f
                .with_lattice(l)
                .map_err(|e| parse_err("lattice", e.to_string())),
            None => Ok(f),
        }
    }
}

/// `{"entries": [[re, im], …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VectorFile {
    pub entries: Vec<Pair>,
}

impl VectorFile {
    pub fn from_vec(v: &[C64]) -> Self {
        Self {
            entries: v.iter().map(|&z| pair(z)).collect(),
        }
    }

    pub fn into_vec(self) -> Result<Vec<C64>> {
        self.entries
            .iter()
            .enumerate()
            .map(|(k, &p)| finite_pair(p, &format!("entries[{k}]")))
            .collect()
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SegmentJson {
    pub t0: String,
    pub value: Vec<Pair>,
}

/// `{"T": "2.0", "segments": [{"t0": "0", "value": [[re, im], …]}, …]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StepFunctionFile {
    #[serde(rename = "T")]
    pub support_end: String,
    pub segments: Vec<SegmentJson>,
}

impl StepFunctionFile {
    pub fn from_step(f: &StepFunction) -> Self {
        Self {
            support_end: f.support_end().to_decimal_string(),
            segments: f
                .segments()
                .iter()
                .map(|s| SegmentJson {
                    t0: s.start.to_decimal_string(),
                    value: s.value.iter().map(|&z| pair(z)).collect(),
                })
                .collect(),
        }
    }

    pub fn into_step(self) -> Result<StepFunction> {
        let end = Time::parse(&self.support_end).map_err(|e| parse_err("T", e.to_string()))?;
        let mut segs = Vec::with_capacity(self.segments.len());
        for (k, s) in self.segments.into_iter().enumerate() {
            let t0 = Time::parse(&s.t0)
                .map_err(|e| parse_err(format!("segments[{k}].t0"), e.to_string()))?;
            let value = s
                .value
                .iter()
                .enumerate()
                .map(|(j, &p)| finite_pair(p, &format!("segments[{k}].value[{j}]")))
                .collect::<Result<Vec<_>>>()?;
            segs.push((t0, value));
        }
        StepFunction::new(segs, end).map_err(|e| parse_err("segments", e.to_string()))
    }
}

/// Permutation file: JSON array of target indices, `k ↦ perm[k]`.
pub fn parse_permutation(text: &str, n: usize) -> Result<Vec<usize>> {
    let perm: Vec<usize> = serde_json::from_str(text)?;
    check_permutation(&perm, n)?;
    Ok(perm)
}

pub fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    if perm.len() != n {
        return Err(Error::InvalidInput(format!(
            "permutation has {} entries, expected {n}",
            perm.len()
        )));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return Err(Error::InvalidInput(format!("not a permutation of 0..{n}: target {p}")));
        }
    }
    Ok(())
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

pub fn read_generator(path: &Path) -> Result<GeneratorMatrix> {
    read_json::<GeneratorFile>(path)?.into_generator()
}

pub fn read_vector(path: &Path) -> Result<Vec<C64>> {
    read_json::<VectorFile>(path)?.into_vec()
}

pub fn read_step_function(path: &Path) -> Result<StepFunction> {
    read_json::<StepFunctionFile>(path)?.into_step()
}

/// Float formatting for CSV output: 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
