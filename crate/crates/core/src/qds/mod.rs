//! Vacuum-expectation semigroup `𝒯_t` with form-generator
//! `𝓛(X) = X F^0_0 + (F^0_0)* X + Σ_i (F^i_0)* X F^i_0`.
//!
//! Superoperators act on column-stacked matrices, `vec(AXB) = (Bᵀ ⊗ A) vec X`.
//! At finite truncation the master equation has a unique solution, so no
//! minimality selection is needed.

use std::fmt::Write as _;
use std::sync::OnceLock;

use serde::Serialize;

use crate::error::{dim_err, Error, Result};
use crate::formats::fmt_f64;
use crate::generator::{journe_dual, GeneratorMatrix};
use crate::numerics::{expm, expm_action, herm_min_eig, op_norm, ComplexMatrix, C64};
use crate::par::{try_map_range, Execution};

/// Above this `h_dim` evolution uses the matrix-free exponential action
/// instead of a dense `m² × m²` exponential.
pub const DENSE_LIMIT: usize = 24;
/// Largest `h_dim` accepted by [`cp_check`] (the Choi matrix is `m² × m²`).
pub const CP_LIMIT: usize = 64;

pub fn lindblad_apply(f: &GeneratorMatrix, x: &ComplexMatrix) -> Result<ComplexMatrix> {
    let m = f.h_dim();
    if x.shape() != (m, m) {
        return Err(dim_err(format!("X is {}x{}, expected {m}x{m}", x.rows(), x.cols())));
    }
    let f00 = f.block(0, 0);
    let mut out = x * f00;
    out += &(&f00.adjoint() * x);
    for i in 1..=f.noise_dim() {
        let l = f.block(i, 0);
        out += &(&(&l.adjoint() * x) * l);
    }
    Ok(out)
}

/// `𝓛` as an `m² × m²` matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct QdsSuperoperator {
    h_dim: usize,
    matrix: ComplexMatrix,
}

impl QdsSuperoperator {
    pub fn new(f: &GeneratorMatrix) -> Self {
        let m = f.h_dim();
        let id = ComplexMatrix::identity(m);
        let f00 = f.block(0, 0);
        let mut s = f00.transpose().kron(&id);
        s += &id.kron(&f00.adjoint());
        for i in 1..=f.noise_dim() {
            let l = f.block(i, 0);
            s += &l.transpose().kron(&l.adjoint());
        }
        Self { h_dim: m, matrix: s }
    }

    pub fn h_dim(&self) -> usize {
        self.h_dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> ComplexMatrix {
        let m = self.h_dim;
        ComplexMatrix::unvectorize(&self.matrix.mul_vec(&x.vectorize()), m, m)
    }
}

fn norm_inf(a: &ComplexMatrix) -> f64 {
    a.adjoint().norm_one()
}

/// `𝒯` for one generator. The dense superoperator is built on first use.
pub struct QdsSemigroup {
    source: GeneratorMatrix,
    superop: OnceLock<QdsSuperoperator>,
}

impl QdsSemigroup {
    pub fn new(source: GeneratorMatrix) -> Self {
        Self {
            source,
            superop: OnceLock::new(),
        }
    }

    pub fn source(&self) -> &GeneratorMatrix {
        &self.source
    }

    pub fn superoperator(&self) -> &QdsSuperoperator {
        self.superop.get_or_init(|| QdsSuperoperator::new(&self.source))
    }

    fn is_dense(&self) -> bool {
        self.source.h_dim() <= DENSE_LIMIT
    }

    /// `‖𝓛‖₁` bound on vectorized matrices: `‖F^0_0‖_∞ + ‖F^0_0‖₁ + Σ ‖L_i‖_∞ ‖L_i‖₁`.
    fn norm_bound(&self) -> f64 {
        let f = &self.source;
        let f00 = f.block(0, 0);
        let mut b = norm_inf(f00) + f00.norm_one();
        for i in 1..=f.noise_dim() {
            let l = f.block(i, 0);
            b += norm_inf(l) * l.norm_one();
        }
        b
    }

    /// `exp(t 𝓛)` as an `m² × m²` matrix (dense path only).
    pub fn propagator(&self, t: f64) -> Result<ComplexMatrix> {
        check_time(t)?;
        expm(&self.superoperator().matrix.scale_re(t))
    }

    pub fn evolve(&self, x: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
        check_time(t)?;
        let m = self.source.h_dim();
        if x.shape() != (m, m) {
            return Err(dim_err(format!("X is {}x{}, expected {m}x{m}", x.rows(), x.cols())));
        }
        if self.is_dense() {
            let v = self.propagator(t)?.mul_vec(&x.vectorize());
            return Ok(ComplexMatrix::unvectorize(&v, m, m));
        }
        let f = &self.source;
        let apply = |v: &[C64]| {
            let xm = ComplexMatrix::unvectorize(v, m, m);
            lindblad_apply(f, &xm).expect("shape checked").vectorize()
        };
        let v = expm_action(apply, self.norm_bound(), t, &x.vectorize());
        Ok(ComplexMatrix::unvectorize(&v, m, m))
    }
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("time must be finite and >= 0, got {t}")))
    }
}

pub fn qds_evolve(f: &GeneratorMatrix, x: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    QdsSemigroup::new(f.clone()).evolve(x, t)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConservativityPoint {
    pub t: f64,
    /// `‖𝒯_t(I) − I‖`.
    pub defect: f64,
    /// `⟨e_k, (I − 𝒯_t(I)) e_k⟩ = 1 − ‖V_t(e_k ⊗ Ω)‖²`.
    pub diagonal: Vec<f64>,
    /// Index of the smallest diagonal entry (first on ties).
    pub min_diag_defect_index: usize,
}

impl QdsSemigroup {
    pub fn conservativity(&self, t: f64) -> Result<ConservativityPoint> {
        let m = self.source.h_dim();
        let id = ComplexMatrix::identity(m);
        let ti = self.evolve(&id, t)?;
        let diff = &ti - &id;
        let diagonal: Vec<f64> = (0..m).map(|k| -diff[(k, k)].re).collect();
        let min_diag_defect_index = diagonal
            .iter()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (k, &x)| if x < acc.1 { (k, x) } else { acc })
            .0;
        Ok(ConservativityPoint {
            t,
            defect: op_norm(&diff),
            diagonal,
            min_diag_defect_index,
        })
    }

    /// Minimum eigenvalue of the Choi matrix `Σ_ij E_ij ⊗ 𝒯_t(E_ij)`.
    pub fn cp_min_eig(&self, t: f64, exec: Execution) -> Result<f64> {
        check_time(t)?;
        let m = self.source.h_dim();
        if m > CP_LIMIT {
            return Err(Error::InvalidInput(format!("cp_check needs h_dim <= {CP_LIMIT}, got {m}")));
        }
        let images: Vec<ComplexMatrix> = if self.is_dense() {
            let p = self.propagator(t)?;
            (0..m * m)
                .map(|col| ComplexMatrix::unvectorize(&p.col(col), m, m))
                .collect()
        } else {
            try_map_range(exec, m * m, |col| {
                let mut e = ComplexMatrix::zeros(m, m);
                e[(col % m, col / m)] = C64::new(1.0, 0.0);
                self.evolve(&e, t)
            })?
        };
        let mut choi = ComplexMatrix::zeros(m * m, m * m);
        for i in 0..m {
            for j in 0..m {
                // vec(E_ij) is basis vector j·m + i.
                choi.set_block(i * m, j * m, &images[j * m + i]);
            }
        }
        herm_min_eig(&choi)
    }
}

pub fn conservativity_defect(f: &GeneratorMatrix, t: f64) -> Result<ConservativityPoint> {
    QdsSemigroup::new(f.clone()).conservativity(t)
}

pub fn cp_check(f: &GeneratorMatrix, t: f64) -> Result<f64> {
    QdsSemigroup::new(f.clone()).cp_min_eig(t, Execution::default())
}

/// One row of the `qds` CSV.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QdsRow {
    pub point: ConservativityPoint,
    pub min_choi_eig: Option<f64>,
}

/// Conservativity (and optionally the Choi minimum) at every grid time.
pub fn qds_table(sg: &QdsSemigroup, tgrid: &[f64], with_cp: bool, exec: Execution) -> Result<Vec<QdsRow>> {
    try_map_range(exec, tgrid.len(), |k| {
        let point = sg.conservativity(tgrid[k])?;
        let min_choi_eig = if with_cp {
            Some(sg.cp_min_eig(tgrid[k], Execution::Sequential)?)
        } else {
            None
        };
        Ok(QdsRow { point, min_choi_eig })
    })
}

/// `t,defect,min_diag_defect_index,min_choi_eig`; the last column is empty
/// when the Choi check was skipped.
pub fn qds_csv(rows: &[QdsRow]) -> String {
    let mut out = String::from("t,defect,min_diag_defect_index,min_choi_eig\n");
    for r in rows {
        let choi = r.min_choi_eig.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(r.point.t),
            fmt_f64(r.point.defect),
            r.point.min_diag_defect_index,
            choi
        );
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UnitarityReport {
    pub tgrid: Vec<f64>,
    /// Conservativity defect of `F` (isometry of the cocycle on vacuum vectors).
    pub forward: Vec<f64>,
    /// Conservativity defect of the Journé dual (coisometry).
    pub dual: Vec<f64>,
}

pub fn unitarity_report(f: &GeneratorMatrix, tgrid: &[f64], exec: Execution) -> Result<UnitarityReport> {
    let fwd = QdsSemigroup::new(f.clone());
    let dual = QdsSemigroup::new(journe_dual(f));
    let forward = try_map_range(exec, tgrid.len(), |k| fwd.conservativity(tgrid[k]).map(|p| p.defect))?;
    let dual = try_map_range(exec, tgrid.len(), |k| dual.conservativity(tgrid[k]).map(|p| p.defect))?;
    Ok(UnitarityReport {
        tgrid: tgrid.to_vec(),
        forward,
        dual,
    })
}
