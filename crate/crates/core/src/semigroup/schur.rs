//! Schur-product admissibility of a semigroup family.
//!
//! For noise vectors `c_1 … c_n`, positive `A, B` and a block column matrix
//! `Y = [Y_ij]` with `Y_ij ∈ ℂ^m`, the family must map the unit ball of
//! `A^{-1/2} · B^{-1/2}` into the unit ball of
//! `(A • ϖ)^{-1/2} · (B • ϖ)^{-1/2}` after `Y ↦ Q • Y`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use super::{overlap_exponent, SemigroupFamily};
use crate::error::{dim_err, Error, Result};
use crate::numerics::{herm_function, herm_min_eig, op_norm, schur_product, ComplexMatrix, C64};
use crate::par::{try_map_range, Execution};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchurOutcome {
    pub holds: bool,
    /// `1 − conclusion_norm`; negative on violation.
    pub margin: f64,
    /// `‖A^{-1/2} Y B^{-1/2}‖` of the supplied `Y`, before rescaling.
    pub hypothesis_norm: f64,
    pub conclusion_norm: f64,
    /// Whether `Y` was scaled down to meet the hypothesis.
    pub rescaled: bool,
}

/// `ϖ^c_t`, with entries `exp(t(⟨c_i,c_j⟩ − ½‖c_i‖² − ½‖c_j‖²))` formed in log space.
pub fn varpi_matrix(c: &[Vec<C64>], t: f64) -> ComplexMatrix {
    let n = c.len();
    ComplexMatrix::from_fn(n, n, |i, j| (overlap_exponent(&c[i], &c[j]) * t).exp())
}

fn inv_sqrt(a: &ComplexMatrix, what: &str) -> Result<ComplexMatrix> {
    let min = herm_min_eig(a)?;
    let asym = (a - &a.adjoint()).max_abs();
    if !(min > 0.0) || asym > 1e-12 * a.max_abs().max(1.0) {
        return Err(Error::InvalidInput(format!(
            "{what} is not positive definite (min eigenvalue {min:e})"
        )));
    }
    herm_function(a, |x| x.powf(-0.5))
}

/// `(S ⊗ I_m) Y T` for an `(n m) × n` block column matrix `Y`.
fn sandwich(s: &ComplexMatrix, y: &ComplexMatrix, tr: &ComplexMatrix, m: usize) -> ComplexMatrix {
    &(&s.kron(&ComplexMatrix::identity(m)) * y) * tr
}

pub fn schur_criterion(
    fam: &SemigroupFamily,
    a: &ComplexMatrix,
    b: &ComplexMatrix,
    y: &ComplexMatrix,
    c: &[Vec<C64>],
    t: f64,
    tol: f64,
) -> Result<SchurOutcome> {
    let n = c.len();
    let m = fam.h_dim();
    if n == 0 {
        return Err(Error::InvalidInput("empty list of noise vectors".into()));
    }
    if a.shape() != (n, n) || b.shape() != (n, n) || y.shape() != (n * m, n) {
        return Err(dim_err(format!(
            "schur criterion with n = {n}, m = {m}: A {}x{}, B {}x{}, Y {}x{} (expected {n}x{n}, {n}x{n}, {}x{n})",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols(),
            y.rows(),
            y.cols(),
            n * m
        )));
    }
    let a_is = inv_sqrt(a, "A")?;
    let b_is = inv_sqrt(b, "B")?;
    let hypothesis_norm = op_norm(&sandwich(&a_is, y, &b_is, m));
    let rescaled = hypothesis_norm > 1.0;
    let y = if rescaled { y.scale_re(1.0 / hypothesis_norm) } else { y.clone() };

    let varpi = varpi_matrix(c, t);
    let mut qy = ComplexMatrix::zeros(n * m, n);
    for i in 0..n {
        for j in 0..n {
            let q = fam.propagator(&c[i], &c[j], t)?;
            let col = q.mul_vec(&y.block(i * m, j, m, 1).into_vec());
            qy.set_block(i * m, j, &ComplexMatrix::column(&col));
        }
    }
    let av = inv_sqrt(&schur_product(a, &varpi)?, "A • ϖ")?;
    let bv = inv_sqrt(&schur_product(b, &varpi)?, "B • ϖ")?;
    let conclusion_norm = op_norm(&sandwich(&av, &qy, &bv, m));
    Ok(SchurOutcome {
        holds: conclusion_norm <= 1.0 + tol,
        margin: 1.0 - conclusion_norm,
        hypothesis_norm,
        conclusion_norm,
        rescaled,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SchurSweep {
    pub trials: usize,
    pub violations: usize,
    pub worst_margin: f64,
    pub worst_trial: Option<usize>,
}

fn gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

fn gaussian_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(r, c, |_, _| gaussian(rng))
}

/// Seeded random trials with `n ≤ n_max`, `A = MM* + 0.1 I`, `t ∈ [0, 2]`.
/// Trial `k` draws from stream `k` of the seed, so results do not depend on
/// scheduling.
pub fn random_schur_trials(
    fam: &SemigroupFamily,
    trials: usize,
    n_max: usize,
    seed: u64,
    tol: f64,
    exec: Execution,
) -> Result<SchurSweep> {
    if n_max == 0 {
        return Err(Error::InvalidInput("n_max must be positive".into()));
    }
    let m = fam.h_dim();
    let d = fam.noise_dim();
    let outcomes = try_map_range(exec, trials, |k| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let n = rng.random_range(1..=n_max);
        let pd = |rng: &mut ChaCha8Rng| {
            let g = gaussian_matrix(rng, n, n);
            (&g * &g.adjoint()).add_identity(C64::new(0.1, 0.0))
        };
        let a = pd(&mut rng);
        let b = pd(&mut rng);
        let y = gaussian_matrix(&mut rng, n * m, n);
        let c: Vec<Vec<C64>> = (0..n).map(|_| (0..d).map(|_| gaussian(&mut rng)).collect()).collect();
        let t = rng.random_range(0.0..=2.0);
        schur_criterion(fam, &a, &b, &y, &c, t, tol)
    })?;
    let mut sweep = SchurSweep {
        trials,
        violations: 0,
        worst_margin: f64::INFINITY,
        worst_trial: None,
    };
    for (k, o) in outcomes.iter().enumerate() {
        if !o.holds {
            sweep.violations += 1;
        }
        if o.margin < sweep.worst_margin {
            sweep.worst_margin = o.margin;
            sweep.worst_trial = Some(k);
        }
    }
    Ok(sweep)
}
