//! Interior compression: restricting truncated-operator identities to basis
//! indices far enough from the artificial truncation boundary.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::ComplexMatrix;

/// Geometry of the truncated basis of 𝔥; decides which edges are artificial.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Lattice {
    /// `e_0 … e_{m-1}` of ℓ²(ℤ₊); only the top edge is a truncation.
    #[default]
    HalfLine,
    /// Symmetric window `e_{-M} … e_M` of ℓ²(ℤ); both edges are truncations.
    Window,
    /// Row-major product basis `e_{p,q}` of ℓ²(ℤ₊²) with `p < dims[0]`, `q < dims[1]`.
    Grid { dims: [usize; 2] },
}

impl Lattice {
    /// Distance of basis index `k` from the nearest truncation edge.
    fn distance(&self, h_dim: usize, k: usize) -> usize {
        match *self {
            Lattice::HalfLine => h_dim - 1 - k,
            Lattice::Window => k.min(h_dim - 1 - k),
            Lattice::Grid { dims } => {
                let (p, q) = (k / dims[1], k % dims[1]);
                (dims[0] - 1 - p).min(dims[1] - 1 - q)
            }
        }
    }

    pub fn check(&self, h_dim: usize) -> Result<()> {
        if let Lattice::Grid { dims } = *self {
            if dims[0] * dims[1] != h_dim || dims[0] == 0 || dims[1] == 0 {
                return Err(Error::Dimension(format!(
                    "grid {}x{} does not match h_dim {h_dim}",
                    dims[0], dims[1]
                )));
            }
        }
        Ok(())
    }
}

/// Basis indices kept by interior compression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InteriorMask {
    margin: usize,
    h_dim: usize,
    kept: Vec<usize>,
}

impl InteriorMask {
    pub fn new(lattice: Lattice, h_dim: usize, margin: usize) -> Result<Self> {
        lattice.check(h_dim)?;
        let kept: Vec<usize> = (0..h_dim)
            .filter(|&k| lattice.distance(h_dim, k) >= margin)
            .collect();
        if kept.is_empty() {
            return Err(Error::InvalidInput(format!(
                "margin {margin} leaves no interior indices in dimension {h_dim}"
            )));
        }
        Ok(Self { margin, h_dim, kept })
    }

    /// The mask that keeps everything.
    pub fn full(h_dim: usize) -> Self {
        Self {
            margin: 0,
            h_dim,
            kept: (0..h_dim).collect(),
        }
    }

    pub fn margin(&self) -> usize {
        self.margin
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn is_full(&self) -> bool {
        self.kept.len() == self.h_dim
    }

    /// Kept indices replicated across `blocks` consecutive copies of 𝔥.
    pub fn block_indices(&self, blocks: usize) -> Vec<usize> {
        (0..blocks)
            .flat_map(|b| self.kept.iter().map(move |&k| b * self.h_dim + k))
            .collect()
    }
}

/// Principal submatrix on the kept indices. A matrix whose side is a multiple
/// of `h_dim` is treated as a block matrix and compressed blockwise.
pub fn interior_compress(a: &ComplexMatrix, mask: &InteriorMask) -> Result<ComplexMatrix> {
    if !a.is_square() || a.rows() % mask.h_dim != 0 {
        return Err(Error::Dimension(format!(
            "cannot compress {}x{} matrix with a mask on dimension {}",
            a.rows(),
            a.cols(),
            mask.h_dim
        )));
    }
    if mask.is_full() {
        return Ok(a.clone());
    }
    a.principal_submatrix(&mask.block_indices(a.rows() / mask.h_dim))
}
