//! Finite-truncation surrogates for the hypotheses of the construction theorem
//! and the necessary conditions on a contractive stochastic generator.
//!
//! The relative-bound profile is a diagnostic, not a proof: it reports, for a
//! grid of `a` values, the least `b` with `‖X u‖ ≤ a‖u‖ + b‖F^0_0 u‖` over the
//! standard basis and a seeded set of random unit vectors. A profile that grows
//! with the truncation flags a likely failure of relative boundedness.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{deficit_operator, g_from_f, GeneratorMatrix, DEFAULT_TOL};
use crate::error::Result;
use crate::models::interior_compress;
use crate::numerics::{basis_vector, herm_max_eig, op_norm, vec_norm, ComplexMatrix, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsOptions {
    pub tol: f64,
    /// Interior margin; 0 keeps the whole truncation.
    pub margin: usize,
    pub seed: u64,
    pub random_probes: usize,
    pub a_grid: Vec<f64>,
}

impl Default for DiagnosticsOptions {
    fn default() -> Self {
        Self {
            tol: DEFAULT_TOL,
            margin: 0,
            seed: 0,
            random_probes: 1000,
            a_grid: vec![0.1, 1.0, 10.0],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    /// `F^0_i`, the coefficient constrained by hypothesis (i).
    Annihilation,
    /// `F^i_0`, whose relative bound is a necessary condition.
    Creation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub a: f64,
    /// `None` when some probe has `‖F^0_0 u‖ = 0` but `‖X u‖ > a`.
    pub b: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelativeBoundProfile {
    pub family: ProfileFamily,
    pub index: usize,
    /// `(‖X e_k‖, ‖F^0_0 e_k‖)` for every basis vector `e_k`.
    pub basis_pairs: Vec<(f64, f64)>,
    pub bounds: Vec<BoundPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub form_inequality: bool,
    pub isometric: bool,
    pub drift_dissipative: bool,
    pub g_dissipative: bool,
    pub exchange_contractive: bool,
    /// Surrogate for hypothesis (i): every annihilation profile finite.
    pub relative_bound_finite: bool,
    /// Surrogate for hypothesis (ii): each `F^0_0 + F^0_i − ½I` dissipative.
    pub annihilation_shift_dissipative: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub tol: f64,
    pub margin: usize,
    pub max_form_deficit: f64,
    pub isometry_defect: f64,
    /// Keyed `"α,β"`.
    pub g_dissipativity: BTreeMap<String, f64>,
    pub exchange_norm: f64,
    pub relative_bound_profile: Vec<RelativeBoundProfile>,
    pub verdicts: Verdicts,
}

/// Diagnostics with default options at tolerance `tol`.
pub fn diagnostics(f: &GeneratorMatrix, tol: f64) -> Result<DiagnosticsReport> {
    diagnostics_with(
        f,
        &DiagnosticsOptions {
            tol,
            ..Default::default()
        },
    )
}

pub fn diagnostics_with(f: &GeneratorMatrix, opts: &DiagnosticsOptions) -> Result<DiagnosticsReport> {
    let mask = f.interior_mask(opts.margin)?;
    let tol = opts.tol;
    let m = f.h_dim();
    let d = f.noise_dim();

    let deficit = interior_compress(&deficit_operator(f), &mask)?;
    let max_form_deficit = herm_max_eig(&deficit)?;
    let isometry_defect = op_norm(&deficit);

    let mut g_dissipativity = BTreeMap::new();
    for a in 0..=d {
        for b in 0..=d {
            let g = interior_compress(&g_from_f(f, a, b)?, &mask)?;
            g_dissipativity.insert(format!("{a},{b}"), herm_max_eig(&g)?);
        }
    }

    let exchange_norm = if d == 0 {
        0.0
    } else {
        let mut ex = ComplexMatrix::zeros(m * d, m * d);
        for i in 1..=d {
            for j in 1..=d {
                let mut blk = f.block(i, j).clone();
                if i == j {
                    blk = blk.add_identity(crate::numerics::ONE);
                }
                ex.set_block((i - 1) * m, (j - 1) * m, &blk);
            }
        }
        op_norm(&interior_compress(&ex, &mask)?)
    };

    let probes = probe_vectors(m, opts.random_probes, opts.seed);
    let f00 = f.block(0, 0);
    let mut relative_bound_profile = Vec::with_capacity(2 * d);
    for family in [ProfileFamily::Annihilation, ProfileFamily::Creation] {
        for i in 1..=d {
            let x = match family {
                ProfileFamily::Annihilation => f.block(0, i),
                ProfileFamily::Creation => f.block(i, 0),
            };
            relative_bound_profile.push(profile(family, i, x, f00, &probes, &opts.a_grid));
        }
    }

    let g_dissipative = g_dissipativity.values().all(|&v| v <= tol);
    let annihilation_shift_dissipative =
        (1..=d).all(|i| g_dissipativity[&format!("0,{i}")] <= tol);
    let drift_dissipative = g_dissipativity["0,0"] <= tol;
    let relative_bound_finite = relative_bound_profile
        .iter()
        .filter(|p| p.family == ProfileFamily::Annihilation)
        .all(|p| p.bounds.iter().all(|pt| pt.b.is_some()));

    Ok(DiagnosticsReport {
        tol,
        margin: mask.margin(),
        max_form_deficit,
        isometry_defect,
        g_dissipativity,
        exchange_norm,
        relative_bound_profile,
        verdicts: Verdicts {
            form_inequality: max_form_deficit <= tol,
            isometric: isometry_defect <= tol,
            drift_dissipative,
            g_dissipative,
            exchange_contractive: exchange_norm <= 1.0 + tol,
            relative_bound_finite,
            annihilation_shift_dissipative,
        },
    })
}

fn probe_vectors(m: usize, random: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Vec<C64>> = (0..m).map(|k| basis_vector(m, k)).collect();
    for _ in 0..random {
        let v: Vec<C64> = (0..m)
            .map(|_| C64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let n = vec_norm(&v);
        out.push(v.into_iter().map(|z| z / n).collect());
    }
    out
}

fn profile(
    family: ProfileFamily,
    index: usize,
    x: &ComplexMatrix,
    f00: &ComplexMatrix,
    probes: &[Vec<C64>],
    a_grid: &[f64],
) -> RelativeBoundProfile {
    let norms: Vec<(f64, f64)> = probes
        .iter()
        .map(|u| (vec_norm(&x.mul_vec(u)), vec_norm(&f00.mul_vec(u))))
        .collect();
    let basis_pairs = norms[..x.rows()].to_vec();
    let bounds = a_grid
        .iter()
        .map(|&a| {
            let mut b = 0.0f64;
            for &(nx, nf) in &norms {
                if nx <= a {
                    continue;
                }
                if nf == 0.0 {
                    return BoundPoint { a, b: None };
                }
                b = b.max((nx - a) / nf);
            }
            BoundPoint { a, b: Some(b) }
        })
        .collect();
    RelativeBoundProfile {
        family,
        index,
        basis_pairs,
        bounds,
    }
}
