//! Stochastic generator matrices `F = [F^α_β]` on truncated `𝔥 ⊗ k̂`.
//!
//! Block index 0 is the time slot of `k̂ = ℂ ⊕ k`; indices `1..=d` are the
//! noise basis. `Δ` zeroes block row 0. Full matrices are laid out with the
//! noise index outermost: row `α·m + k` is `e_k ⊗ e_α`.
//!
//! Semiregularity needs no runtime check: the noise index set is finite.

mod diagnostics;

use std::collections::BTreeMap;

pub use diagnostics::{
    diagnostics, diagnostics_with, BoundPoint, DiagnosticsOptions, DiagnosticsReport,
    ProfileFamily, RelativeBoundProfile, Verdicts,
};

use crate::error::{Error, Result};
use crate::models::{interior_compress, InteriorMask, Lattice};
use crate::numerics::{herm_function, herm_max_eig, op_norm, re, ComplexMatrix, C64};

/// Default tolerance for every verdict.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Index set `Î = {0, …, d}` of the augmented noise space.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseBasis {
    noise_dim: usize,
}

impl NoiseBasis {
    pub fn new(noise_dim: usize) -> Self {
        Self { noise_dim }
    }

    pub fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    pub fn augmented_dim(&self) -> usize {
        self.noise_dim + 1
    }

    /// `ĉ = (1, c)`.
    pub fn hat(&self, c: &[C64]) -> Result<Vec<C64>> {
        if c.len() != self.noise_dim {
            return Err(Error::Dimension(format!(
                "noise vector has length {}, expected {}",
                c.len(),
                self.noise_dim
            )));
        }
        let mut v = Vec::with_capacity(self.noise_dim + 1);
        v.push(C64::new(1.0, 0.0));
        v.extend_from_slice(c);
        Ok(v)
    }
}

/// Block operator matrix `[F^α_β]` with `m×m` blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorMatrix {
    h_dim: usize,
    basis: NoiseBasis,
    blocks: Vec<ComplexMatrix>,
    lattice: Lattice,
}

impl GeneratorMatrix {
    pub fn zeros(h_dim: usize, noise_dim: usize) -> Self {
        let n = (noise_dim + 1) * (noise_dim + 1);
        Self {
            h_dim,
            basis: NoiseBasis::new(noise_dim),
            blocks: vec![ComplexMatrix::zeros(h_dim, h_dim); n],
            lattice: Lattice::HalfLine,
        }
    }

    /// Builds from a square array of blocks indexed `[α][β]`.
    pub fn from_blocks(blocks: Vec<Vec<ComplexMatrix>>) -> Result<Self> {
        let aug = blocks.len();
        if aug == 0 {
            return Err(Error::Dimension("generator needs at least the (0,0) block".into()));
        }
        let h_dim = blocks[0]
            .first()
            .map(|b| b.rows())
            .ok_or_else(|| Error::Dimension("empty block row".into()))?;
        let mut flat = Vec::with_capacity(aug * aug);
        for (alpha, row) in blocks.into_iter().enumerate() {
            if row.len() != aug {
                return Err(Error::Dimension(format!(
                    "block row {alpha} has {} blocks, expected {aug}",
                    row.len()
                )));
            }
            for (beta, b) in row.into_iter().enumerate() {
                if b.shape() != (h_dim, h_dim) {
                    return Err(Error::Dimension(format!(
                        "block ({alpha},{beta}) is {}x{}, expected {h_dim}x{h_dim}",
                        b.rows(),
                        b.cols()
                    )));
                }
                flat.push(b);
            }
        }
        Ok(Self {
            h_dim,
            basis: NoiseBasis::new(aug - 1),
            blocks: flat,
            lattice: Lattice::HalfLine,
        })
    }

    pub fn with_lattice(mut self, lattice: Lattice) -> Result<Self> {
        lattice.check(self.h_dim)?;
        self.lattice = lattice;
        Ok(self)
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn basis(&self) -> NoiseBasis {
        self.basis
    }

    pub fn noise_dim(&self) -> usize {
        self.basis.noise_dim
    }

    pub fn augmented_dim(&self) -> usize {
        self.basis.augmented_dim()
    }

    pub fn lattice(&self) -> Lattice {
        self.lattice
    }

    fn slot(&self, alpha: usize, beta: usize) -> Result<usize> {
        let aug = self.augmented_dim();
        if alpha >= aug || beta >= aug {
            return Err(Error::IndexOutOfRange(format!(
                "block ({alpha},{beta}) outside {aug}x{aug} generator"
            )));
        }
        Ok(alpha * aug + beta)
    }

    /// `F^α_β`. Panics when out of range; see [`GeneratorMatrix::try_block`].
    pub fn block(&self, alpha: usize, beta: usize) -> &ComplexMatrix {
        &self.blocks[self.slot(alpha, beta).expect("block index")]
    }

    pub fn try_block(&self, alpha: usize, beta: usize) -> Result<&ComplexMatrix> {
        Ok(&self.blocks[self.slot(alpha, beta)?])
    }

    pub fn set_block(&mut self, alpha: usize, beta: usize, m: ComplexMatrix) -> Result<()> {
        let slot = self.slot(alpha, beta)?;
        if m.shape() != (self.h_dim, self.h_dim) {
            return Err(Error::Dimension(format!(
                "block is {}x{}, expected {}x{}",
                m.rows(),
                m.cols(),
                self.h_dim,
                self.h_dim
            )));
        }
        self.blocks[slot] = m;
        Ok(())
    }

    /// Blocks as a nested `[α][β]` array.
    pub fn block_rows(&self) -> Vec<Vec<ComplexMatrix>> {
        let aug = self.augmented_dim();
        (0..aug)
            .map(|a| (0..aug).map(|b| self.block(a, b).clone()).collect())
            .collect()
    }

    pub fn map_blocks(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        Self {
            h_dim: self.h_dim,
            basis: self.basis,
            blocks: self.blocks.iter().map(f).collect(),
            lattice: self.lattice,
        }
    }

    /// The operator on `𝔥 ⊗ k̂` as one `m(d+1)` square matrix.
    pub fn to_full(&self) -> ComplexMatrix {
        let (m, aug) = (self.h_dim, self.augmented_dim());
        let mut full = ComplexMatrix::zeros(m * aug, m * aug);
        for a in 0..aug {
            for b in 0..aug {
                full.set_block(a * m, b * m, self.block(a, b));
            }
        }
        full
    }

    /// Blockwise maximum of `‖F^α_β − G^α_β‖`.
    pub fn max_block_distance(&self, other: &Self) -> f64 {
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| op_norm(&(a - b)))
            .fold(0.0, f64::max)
    }

    /// Interior mask for this generator's lattice.
    pub fn interior_mask(&self, margin: usize) -> Result<InteriorMask> {
        InteriorMask::new(self.lattice, self.h_dim, margin)
    }
}

/// `D(F) = F + F* + F*ΔF`, returned exactly Hermitian.
pub fn deficit_operator(f: &GeneratorMatrix) -> ComplexMatrix {
    let full = f.to_full();
    let mut delta_f = full.clone();
    delta_f.zero_rows(0..f.h_dim);
    let mut d = &full + &full.adjoint();
    d += &(&delta_f.adjoint() * &delta_f);
    d.hermitian_part()
}

/// Deficit restricted to the kept interior indices.
pub fn deficit_on(f: &GeneratorMatrix, mask: &InteriorMask) -> Result<ComplexMatrix> {
    interior_compress(&deficit_operator(f), mask)
}

/// Largest eigenvalue of the deficit; the form inequality holds iff `≤ tol`.
pub fn max_form_deficit(f: &GeneratorMatrix) -> f64 {
    herm_max_eig(&deficit_operator(f)).expect("deficit is square")
}

pub fn max_form_deficit_on(f: &GeneratorMatrix, mask: &InteriorMask) -> Result<f64> {
    herm_max_eig(&deficit_on(f, mask)?)
}

/// `‖D(F)‖`; zero iff the equality case holds at this truncation.
pub fn isometry_defect(f: &GeneratorMatrix) -> f64 {
    op_norm(&deficit_operator(f))
}

pub fn isometry_defect_on(f: &GeneratorMatrix, mask: &InteriorMask) -> Result<f64> {
    Ok(op_norm(&deficit_on(f, mask)?))
}

/// Semigroup generators keyed by `(α, β)`.
pub type GFamily = BTreeMap<(usize, usize), ComplexMatrix>;

/// `G^{αβ}` from the blocks of `F`.
///
/// `G^{00} = F^0_0`, `G^{i0} = F^0_0 + F^i_0 − ½`, `G^{0j} = F^0_0 + F^0_j − ½`,
/// `G^{ij} = F^0_0 + F^0_j + F^i_0 + F^i_j + (δ^i_j − 1)`. Terms are summed in the
/// same order as the general `(c, d)` expansion so the two agree bit for bit.
pub fn g_from_f(f: &GeneratorMatrix, alpha: usize, beta: usize) -> Result<ComplexMatrix> {
    f.slot(alpha, beta)?;
    let mut g = f.block(0, 0).clone();
    if beta != 0 {
        g += f.block(0, beta);
    }
    if alpha != 0 {
        g += f.block(alpha, 0);
        if beta != 0 {
            g += f.block(alpha, beta);
        }
    }
    let shift = match (alpha, beta) {
        (0, 0) => 0.0,
        (0, _) | (_, 0) => -0.5,
        (i, j) if i == j => 0.0,
        _ => -1.0,
    };
    Ok(if shift == 0.0 { g } else { g.add_identity(re(shift)) })
}

/// All `(d+1)²` generators.
pub fn g_family(f: &GeneratorMatrix) -> GFamily {
    let aug = f.augmented_dim();
    let mut out = GFamily::new();
    for a in 0..aug {
        for b in 0..aug {
            out.insert((a, b), g_from_f(f, a, b).expect("in range"));
        }
    }
    out
}

/// Inverse of [`g_from_f`].
pub fn f_from_g(g: &GFamily) -> Result<GeneratorMatrix> {
    let aug = (g.len() as f64).sqrt().round() as usize;
    if aug == 0 || aug * aug != g.len() {
        return Err(Error::InvalidInput(format!(
            "{} generators do not form a square (d+1)² family",
            g.len()
        )));
    }
    let get = |a: usize, b: usize| {
        g.get(&(a, b))
            .ok_or_else(|| Error::InvalidInput(format!("missing generator G^({a},{b})")))
    };
    let g00 = get(0, 0)?;
    let m = g00.rows();
    for ((a, b), x) in g {
        if x.shape() != (m, m) {
            return Err(Error::Dimension(format!(
                "G^({a},{b}) is {}x{}, expected {m}x{m}",
                x.rows(),
                x.cols()
            )));
        }
    }
    let mut f = GeneratorMatrix::zeros(m, aug - 1);
    f.set_block(0, 0, g00.clone())?;
    for i in 1..aug {
        f.set_block(i, 0, (get(i, 0)? - g00).add_identity(re(0.5)))?;
        f.set_block(0, i, (get(0, i)? - g00).add_identity(re(0.5)))?;
    }
    for i in 1..aug {
        for j in 1..aug {
            let mut x = get(i, j)? - get(i, 0)?;
            x -= get(0, j)?;
            x += g00;
            if i == j {
                x = x.add_identity(re(-1.0));
            }
            f.set_block(i, j, x)?;
        }
    }
    Ok(f)
}

/// Adjoint block matrix `F† = [(F^β_α)*]`.
pub fn journe_dual(f: &GeneratorMatrix) -> GeneratorMatrix {
    let aug = f.augmented_dim();
    let mut out = f.clone();
    for a in 0..aug {
        for b in 0..aug {
            out.blocks[a * aug + b] = f.block(b, a).adjoint();
        }
    }
    out
}

/// Contraction `C_n = n(nI − S)⁻¹` with `S` the Hermitian part of `F^0_0`.
pub fn regularizing_contraction(f: &GeneratorMatrix, n: usize) -> Result<ComplexMatrix> {
    if n == 0 {
        return Err(Error::InvalidInput("regularization index must be positive".into()));
    }
    let n = n as f64;
    herm_function(f.block(0, 0), |s| n / (n - s))
}

/// `F^(n) = (C_n ⊗ I)* F (C_n ⊗ I)` at the default tolerance.
pub fn regularize(f: &GeneratorMatrix, n: usize) -> Result<GeneratorMatrix> {
    regularize_with_tol(f, n, DEFAULT_TOL)
}

/// Conjugation by `C_n ⊗ I` preserves the form inequality because `Δ`
/// commutes with it and `C_n² ≤ I`; it is refused when `F` violates it.
pub fn regularize_with_tol(f: &GeneratorMatrix, n: usize, tol: f64) -> Result<GeneratorMatrix> {
    let deficit = max_form_deficit(f);
    if deficit > tol {
        return Err(Error::Precondition(format!(
            "form inequality violated (max deficit {deficit:.3e} > {tol:.1e}); regularization undefined"
        )));
    }
    let c = regularizing_contraction(f, n)?;
    Ok(f.map_blocks(|b| &(&c * b) * &c))
}
