//! Cocycle matrix elements on exponential vectors of step functions.
//!
//! For a partition `0 = τ_0 < … < τ_n < t` containing every jump of `f` and
//! `g` below `t`,
//! `⟨u ⊗ ϖ(f1_[0,t[), V_t v ⊗ ϖ(g1_[0,t[)⟩ = ⟨u, Q^{f(τ_0),g(τ_0)}_{Δ_0} ⋯ Q^{f(τ_n),g(τ_n)}_{Δ_n} v⟩`
//! with the earliest piece leftmost. The unnormalized element `⟨u ⊗ ε(f), …⟩`
//! is the normalized one times `exp(½∫‖f‖² + ½∫‖g‖²)`.

mod time;

pub use time::Time;

use crate::error::{dim_err, Error, Result};
use crate::generator::GeneratorMatrix;
use crate::numerics::{expm, inner, vec_norm, ComplexMatrix, C64, ONE, ZERO};
use crate::semigroup::{evolve, generator_cd, overlap_exponent, SemigroupFamily};

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: Time,
    pub value: Vec<C64>,
}

/// Right-continuous step function `ℝ₊ → ℂ^d` supported in `[0, T[`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    segments: Vec<Segment>,
    end: Time,
}

impl StepFunction {
    /// Segment `k` holds its value on `[start_k, start_{k+1})`, the last one up to `end`.
    pub fn new(segments: Vec<(Time, Vec<C64>)>, end: Time) -> Result<Self> {
        let Some((first, v0)) = segments.first() else {
            return Err(Error::InvalidInput("step function needs at least one segment".into()));
        };
        if !first.is_zero() {
            return Err(Error::InvalidInput(format!("first segment starts at {first}, not 0")));
        }
        if end.is_zero() {
            return Err(Error::InvalidInput("support end T must be positive".into()));
        }
        let d = v0.len();
        for (k, w) in segments.windows(2).enumerate() {
            if w[1].0 <= w[0].0 {
                return Err(Error::InvalidInput(format!(
                    "segment starts not strictly increasing at index {}",
                    k + 1
                )));
            }
        }
        if let Some((k, _)) = segments.iter().enumerate().find(|(_, s)| s.0 >= end) {
            return Err(Error::InvalidInput(format!("segment {k} starts at or beyond T = {end}")));
        }
        if let Some((k, _)) = segments.iter().enumerate().find(|(_, s)| s.1.len() != d) {
            return Err(dim_err(format!("segment {k} value has wrong length (expected {d})")));
        }
        if segments.iter().flat_map(|s| &s.1).any(|z| !z.is_finite()) {
            return Err(Error::InvalidInput("non-finite step value".into()));
        }
        Ok(Self {
            segments: segments
                .into_iter()
                .map(|(start, value)| Segment { start, value })
                .collect(),
            end,
        })
    }

    pub fn constant(value: Vec<C64>, end: Time) -> Result<Self> {
        Self::new(vec![(Time::zero(), value)], end)
    }

    pub fn zero(noise_dim: usize, end: Time) -> Result<Self> {
        Self::constant(vec![ZERO; noise_dim], end)
    }

    pub fn noise_dim(&self) -> usize {
        self.segments[0].value.len()
    }

    pub fn support_end(&self) -> &Time {
        &self.end
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Value at `s`; zero from `T` on.
    pub fn value_at(&self, s: &Time) -> Vec<C64> {
        if *s >= self.end {
            return vec![ZERO; self.noise_dim()];
        }
        let k = self.segments.partition_point(|seg| seg.start <= *s);
        self.segments[k - 1].value.clone()
    }
}

/// One piece `[start, start + len)` of the merged partition with the constant
/// values of `f` and `g` on it.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub start: Time,
    pub len: Time,
    pub c: Vec<C64>,
    pub d: Vec<C64>,
}

/// Merged partition of `[0, t[` by the breakpoints of `f` and `g`.
/// A breakpoint equal to `t` contributes no zero-length piece.
pub fn merged_pieces(f: &StepFunction, g: &StepFunction, t: &Time) -> Vec<Piece> {
    let mut cuts: Vec<Time> = f
        .segments
        .iter()
        .chain(&g.segments)
        .map(|s| s.start.clone())
        .filter(|s| s < t)
        .collect();
    cuts.sort();
    cuts.dedup();
    let mut out = Vec::with_capacity(cuts.len());
    for (k, start) in cuts.iter().enumerate() {
        let stop = cuts.get(k + 1).unwrap_or(t);
        out.push(Piece {
            start: start.clone(),
            len: stop - start,
            c: f.value_at(start),
            d: g.value_at(start),
        });
    }
    out
}

fn refine(pieces: &[Piece], splits: u64) -> Vec<Piece> {
    if splits == 1 {
        return pieces.to_vec();
    }
    let mut out = Vec::with_capacity(pieces.len() * splits as usize);
    for p in pieces {
        let h = p.len.div_int(splits);
        for k in 0..splits {
            out.push(Piece {
                start: &p.start + &h.mul_int(k),
                len: h.clone(),
                c: p.c.clone(),
                d: p.d.clone(),
            });
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixElementQuery {
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    pub f: StepFunction,
    pub g: StepFunction,
    pub t: Time,
    /// `ϖ` convention when set, `ε` otherwise.
    pub normalized: bool,
}

impl MatrixElementQuery {
    pub fn validate(&self, h_dim: usize, noise_dim: usize) -> Result<()> {
        if self.u.len() != h_dim || self.v.len() != h_dim {
            return Err(dim_err(format!(
                "u, v have lengths {}, {}; expected h_dim = {h_dim}",
                self.u.len(),
                self.v.len()
            )));
        }
        if self.f.noise_dim() != noise_dim || self.g.noise_dim() != noise_dim {
            return Err(dim_err(format!(
                "step functions have noise dimensions {}, {}; expected {noise_dim}",
                self.f.noise_dim(),
                self.g.noise_dim()
            )));
        }
        check_support(&self.f, &self.g, &self.t)
    }

    pub fn pieces(&self) -> Vec<Piece> {
        merged_pieces(&self.f, &self.g, &self.t)
    }
}

fn check_support(f: &StepFunction, g: &StepFunction, t: &Time) -> Result<()> {
    if t > &f.end || t > &g.end {
        return Err(Error::InvalidInput(format!(
            "t = {t} exceeds the support (T_f = {}, T_g = {})",
            f.end, g.end
        )));
    }
    Ok(())
}

fn log_overlap(pieces: &[Piece], normalized: bool) -> C64 {
    pieces
        .iter()
        .map(|p| {
            let rate = if normalized { overlap_exponent(&p.c, &p.d) } else { inner(&p.c, &p.d) };
            rate * p.len.to_f64()
        })
        .sum()
}

/// `½∫‖f‖² + ½∫‖g‖²` over the pieces.
fn log_norms(pieces: &[Piece]) -> f64 {
    pieces
        .iter()
        .map(|p| 0.5 * (vec_norm(&p.c).powi(2) + vec_norm(&p.d).powi(2)) * p.len.to_f64())
        .sum()
}

/// `⟨ϖ(f1_[0,t[), ϖ(g1_[0,t[)⟩` or `⟨ε(f1_[0,t[), ε(g1_[0,t[)⟩`.
pub fn exp_overlap(f: &StepFunction, g: &StepFunction, t: &Time, normalized: bool) -> Result<C64> {
    check_support(f, g, t)?;
    if f.noise_dim() != g.noise_dim() {
        return Err(dim_err("step functions of different noise dimensions"));
    }
    Ok(log_overlap(&merged_pieces(f, g, t), normalized).exp())
}

fn reconstruct_pieces(fam: &SemigroupFamily, q: &MatrixElementQuery, pieces: &[Piece]) -> Result<C64> {
    let mut x = q.v.clone();
    for p in pieces.iter().rev() {
        x = fam.propagator(&p.c, &p.d, p.len.to_f64())?.mul_vec(&x);
    }
    let normalized = inner(&q.u, &x);
    Ok(if q.normalized { normalized } else { normalized * log_norms(pieces).exp() })
}

pub fn reconstruct(fam: &SemigroupFamily, q: &MatrixElementQuery) -> Result<C64> {
    q.validate(fam.h_dim(), fam.noise_dim())?;
    reconstruct_pieces(fam, q, &q.pieces())
}

/// Matrix elements at each time in `times` (each at most the query's supports).
pub fn reconstruct_trace(fam: &SemigroupFamily, q: &MatrixElementQuery, times: &[Time]) -> Result<Vec<C64>> {
    times
        .iter()
        .map(|t| {
            let qt = MatrixElementQuery { t: t.clone(), ..q.clone() };
            reconstruct(fam, &qt)
        })
        .collect()
}

/// `|reconstruct(q) − reconstruct(q on a partition with every piece split
/// into `splits` equal parts)|`; zero exactly when `splits = 1`.
pub fn refine_check(fam: &SemigroupFamily, q: &MatrixElementQuery, splits: u64) -> Result<f64> {
    if splits == 0 {
        return Err(Error::InvalidInput("splits must be positive".into()));
    }
    q.validate(fam.h_dim(), fam.noise_dim())?;
    let pieces = q.pieces();
    let coarse = reconstruct_pieces(fam, q, &pieces)?;
    let fine = reconstruct_pieces(fam, q, &refine(&pieces, splits))?;
    Ok((coarse - fine).norm())
}

/// Residual of the integrated QSDE
/// `⟨u ε(f), (V_τ − I) v ε(g)⟩ = ∫_0^τ Σ f̄^α g^β ⟨u ε(f), V_s F^α_β v ε(g)⟩ ds`
/// (with `f^0 = g^0 = 1`, all functions cut off at `t`), maximized over the
/// nodes `τ` of a grid of about `nt` intervals aligned to the breakpoints.
/// The right side is integrated by the composite trapezoid rule.
pub fn qsde_residual(f: &GeneratorMatrix, q: &MatrixElementQuery, nt: usize) -> Result<f64> {
    if q.normalized {
        return Err(Error::InvalidInput("the QSDE residual uses the unnormalized convention".into()));
    }
    if nt < 16 {
        return Err(Error::InvalidInput(format!("nt = {nt} is below the minimum of 16")));
    }
    q.validate(f.h_dim(), f.noise_dim())?;
    if q.t.is_zero() {
        return Ok(0.0);
    }
    let t = q.t.to_f64();
    let pieces = q.pieces();
    let total_overlap = log_overlap(&pieces, false);

    let mut u_k = q.u.clone();
    // ½∫_0^s (‖f‖² + ‖g‖²) and ∫_0^s ⟨f,g⟩ at the start of the current piece.
    let mut norm_acc = 0.0f64;
    let mut overlap_acc = ZERO;
    let lhs0 = inner(&q.u, &q.v) * total_overlap.exp();
    let mut integral = ZERO;
    let mut worst = 0.0f64;

    for p in &pieces {
        let len = p.len.to_f64();
        let steps = ((nt as f64 * len / t).round() as usize).max(1);
        let h = len / steps as f64;
        let g = generator_cd(f, &p.c, &p.d)?;
        let step = expm(&g.scale_re(h))?;
        let x = coupling(f, &p.c, &p.d)?;
        let norm_rate = 0.5 * (vec_norm(&p.c).powi(2) + vec_norm(&p.d).powi(2));
        let overlap_rate = inner(&p.c, &p.d);
        // Unnormalizing factor up to s times the tail overlap ∫_s^t ⟨f,g⟩.
        let scalar = |s: f64| {
            (C64::from(norm_acc + norm_rate * s) + total_overlap - overlap_acc - overlap_rate * s).exp()
        };

        let mut y_v = q.v.clone();
        let mut y_x = x.mul_vec(&q.v);
        let mut prev = inner(&u_k, &y_x) * scalar(0.0);
        for j in 1..=steps {
            y_v = step.mul_vec(&y_v);
            y_x = step.mul_vec(&y_x);
            let s = j as f64 * h;
            let cur = inner(&u_k, &y_x) * scalar(s);
            integral += (prev + cur) * (0.5 * h);
            prev = cur;
            let lhs = inner(&u_k, &y_v) * scalar(s) - lhs0;
            worst = worst.max((lhs - integral).norm());
        }

        u_k = evolve(&g, len)?.adjoint().mul_vec(&u_k);
        norm_acc += norm_rate * len;
        overlap_acc += overlap_rate * len;
    }
    Ok(worst)
}

/// `Σ_{α,β} conj(ĉ_α) d̂_β F^α_β`.
fn coupling(f: &GeneratorMatrix, c: &[C64], d: &[C64]) -> Result<ComplexMatrix> {
    let basis = f.basis();
    let c_hat = basis.hat(c)?;
    let d_hat = basis.hat(d)?;
    let mut x = ComplexMatrix::zeros(f.h_dim(), f.h_dim());
    for (a, ca) in c_hat.iter().enumerate() {
        for (b, db) in d_hat.iter().enumerate() {
            let coeff = ca.conj() * db;
            if coeff != ZERO {
                x += &(if coeff == ONE { f.block(a, b).clone() } else { f.block(a, b).scale(coeff) });
            }
        }
    }
    Ok(x)
}

/// Least-squares slope of `−log r` against `log n`: the observed order of
/// convergence of residuals `r` at resolutions `n`.
pub fn convergence_order(ns: &[usize], residuals: &[f64]) -> Result<f64> {
    if ns.len() != residuals.len() || ns.len() < 2 {
        return Err(Error::InvalidInput("need at least two (n, residual) pairs".into()));
    }
    if residuals.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::InvalidInput("residuals must be positive for a log-log fit".into()));
    }
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = residuals.iter().map(|r| -r.ln()).collect();
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}
