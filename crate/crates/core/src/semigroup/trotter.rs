//! Trotter–Kato convergence of regularized semigroups at fixed truncation.

use std::fmt::Write as _;

use serde::Serialize;

use super::{evolve, generator_cd};
use crate::error::{Error, Result};
use crate::formats::fmt_f64;
use crate::generator::{max_form_deficit, regularize_with_tol, GeneratorMatrix};
use crate::numerics::{vec_norm, C64};
use crate::par::{try_map_range, Execution};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrotterStudy {
    pub schedule: Vec<usize>,
    pub tgrid: Vec<f64>,
    #[serde(skip)]
    pub probes: Vec<Vec<C64>>,
    #[serde(skip)]
    pub c: Vec<C64>,
    #[serde(skip)]
    pub d: Vec<C64>,
    /// `errors[k][j] = max_u ‖(Q^{(n_k)}_{t_j} − Q_{t_j}) u‖`.
    pub errors: Vec<Vec<f64>>,
    /// `max_form_deficit(F^(n_k))`.
    pub regularized_deficits: Vec<f64>,
}

impl TrotterStudy {
    /// Largest error over the time grid for each schedule entry.
    pub fn sup_errors(&self) -> Vec<f64> {
        self.errors
            .iter()
            .map(|row| row.iter().copied().fold(0.0, f64::max))
            .collect()
    }

    /// Whether every column is nonincreasing along the schedule up to `slack`.
    pub fn is_monotone(&self, slack: f64) -> bool {
        self.errors
            .windows(2)
            .all(|w| w[0].iter().zip(&w[1]).all(|(a, b)| *b <= a + slack))
    }

    /// `n,t,error` rows in schedule-major order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,t,error\n");
        for (n, row) in self.schedule.iter().zip(&self.errors) {
            for (t, e) in self.tgrid.iter().zip(row) {
                let _ = writeln!(out, "{n},{},{}", fmt_f64(*t), fmt_f64(*e));
            }
        }
        out
    }
}

pub fn trotter_study(
    f: &GeneratorMatrix,
    schedule: &[usize],
    c: &[C64],
    d: &[C64],
    tgrid: &[f64],
    probes: &[Vec<C64>],
    tol: f64,
    exec: Execution,
) -> Result<TrotterStudy> {
    if schedule.is_empty() || schedule[0] == 0 || schedule.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(format!(
            "schedule must be nonempty, positive and strictly increasing: {schedule:?}"
        )));
    }
    let m = f.h_dim();
    if probes.iter().any(|u| u.len() != m || vec_norm(u) == 0.0) {
        return Err(Error::InvalidInput(format!("probes must be nonzero vectors of length {m}")));
    }
    if tgrid.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
        return Err(Error::InvalidInput("time grid must be finite and >= 0".into()));
    }

    let g = generator_cd(f, c, d)?;
    let exact = try_map_range(exec, tgrid.len(), |j| evolve(&g, tgrid[j]))?;
    let rows = try_map_range(exec, schedule.len(), |k| -> Result<(Vec<f64>, f64)> {
        let fn_ = regularize_with_tol(f, schedule[k], tol)?;
        let gn = generator_cd(&fn_, c, d)?;
        let mut errs = Vec::with_capacity(tgrid.len());
        for (j, &t) in tgrid.iter().enumerate() {
            let diff = &evolve(&gn, t)? - &exact[j];
            let e = probes
                .iter()
                .map(|u| vec_norm(&diff.mul_vec(u)))
                .fold(0.0, f64::max);
            errs.push(e);
        }
        Ok((errs, max_form_deficit(&fn_)))
    })?;
    let (errors, regularized_deficits) = rows.into_iter().unzip();
    Ok(TrotterStudy {
        schedule: schedule.to_vec(),
        tgrid: tgrid.to_vec(),
        probes: probes.to_vec(),
        c: c.to_vec(),
        d: d.to_vec(),
        errors,
        regularized_deficits,
    })
}
