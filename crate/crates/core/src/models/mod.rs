//! Example generators on truncated spaces.
//!
//! Shift and ladder operators are compressed to the truncation, so each
//! model's identities hold only away from the artificial edges. The margin at
//! which they hold is recorded next to each factory.

mod interior;

use std::path::Path;

use serde::Deserialize;

pub use interior::{interior_compress, InteriorMask, Lattice};

use crate::error::{Error, Result};
use crate::formats::{check_permutation, from_pair, Pair};
use crate::generator::GeneratorMatrix;
use crate::numerics::{ComplexMatrix, C64, I, ONE, ZERO};

/// Interior margin for models whose coefficients move an index by at most one.
pub const ONE_STEP_MARGIN: usize = 2;
/// Interior margin for second harmonic generation (`a₁*²` moves by two).
pub const SHG_MARGIN: usize = 3;
/// The Cayley-shift identities hold on the full truncation.
pub const CAYLEY_MARGIN: usize = 0;

/// A coefficient `n ↦ λ(n)` on ℤ.
#[derive(Clone, Debug, PartialEq)]
pub enum CoefficientFunction {
    Zero,
    /// `√max(n, 0)`.
    Sqrt,
    /// `√|n|`.
    AbsSqrt,
    /// `√n` on odd `n ≥ 0`, zero elsewhere.
    OddSqrt,
    Const(f64),
    /// `a n + b`.
    Linear { a: f64, b: f64 },
    /// `values[n − offset]`; undefined outside the table.
    Table { offset: i64, values: Vec<C64> },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum TableFile {
    Plain(Vec<Pair>),
    Offset { offset: i64, values: Vec<Pair> },
}

impl CoefficientFunction {
    /// `zero`, `sqrt`, `abs-sqrt`, `odd-sqrt`, `const:x`, `linear:a,b`, or
    /// `@path` to a JSON table (`[[re, im], …]` or `{"offset": k, "values": …}`).
    pub fn parse(s: &str) -> Result<Self> {
        let bad = |why: &str| Error::InvalidInput(format!("coefficient {s:?}: {why}"));
        let num = |x: &str| x.trim().parse::<f64>().ok().filter(|v| v.is_finite());
        if let Some(path) = s.strip_prefix('@') {
            return Self::from_table_file(Path::new(path));
        }
        match s.split_once(':') {
            None => match s {
                "zero" => Ok(Self::Zero),
                "sqrt" => Ok(Self::Sqrt),
                "abs-sqrt" => Ok(Self::AbsSqrt),
                "odd-sqrt" => Ok(Self::OddSqrt),
                _ => Err(bad("unknown preset")),
            },
            Some(("const", x)) => num(x).map(Self::Const).ok_or_else(|| bad("expected const:x")),
            Some(("linear", ab)) => {
                let (a, b) = ab.split_once(',').ok_or_else(|| bad("expected linear:a,b"))?;
                match (num(a), num(b)) {
                    (Some(a), Some(b)) => Ok(Self::Linear { a, b }),
                    _ => Err(bad("expected linear:a,b")),
                }
            }
            Some(_) => Err(bad("unknown preset")),
        }
    }

    pub fn from_table_file(path: &Path) -> Result<Self> {
        let (offset, values) = match crate::formats::read_json::<TableFile>(path)? {
            TableFile::Plain(v) => (0, v),
            TableFile::Offset { offset, values } => (offset, values),
        };
        if values.iter().any(|p| !(p[0].is_finite() && p[1].is_finite())) {
            return Err(Error::InvalidInput(format!("{}: non-finite table entry", path.display())));
        }
        Ok(Self::Table {
            offset,
            values: values.into_iter().map(from_pair).collect(),
        })
    }

    pub fn eval(&self, n: i64) -> Result<C64> {
        let r = |x: f64| C64::new(x, 0.0);
        Ok(match self {
            Self::Zero => ZERO,
            Self::Sqrt => r((n.max(0) as f64).sqrt()),
            Self::AbsSqrt => r((n.unsigned_abs() as f64).sqrt()),
            Self::OddSqrt => r(if n >= 0 && n % 2 == 1 { (n as f64).sqrt() } else { 0.0 }),
            Self::Const(x) => r(*x),
            Self::Linear { a, b } => r(a * n as f64 + b),
            Self::Table { offset, values } => {
                let k = n - offset;
                if k < 0 || k as usize >= values.len() {
                    return Err(Error::InvalidInput(format!(
                        "coefficient table covers {offset}..{} but index {n} was requested",
                        offset + values.len() as i64
                    )));
                }
                values[k as usize]
            }
        })
    }
}

/// `c|λ(n)| ≤ |λ(n+1)|` for every `n` in `range`.
pub fn growth_check(lambda: &CoefficientFunction, c: f64, range: std::ops::Range<i64>) -> Result<bool> {
    if !(c > 0.0) {
        return Err(Error::InvalidInput(format!("growth constant must be positive, got {c}")));
    }
    for n in range {
        if c * lambda.eval(n)?.norm() > lambda.eval(n + 1)?.norm() {
            return Ok(false);
        }
    }
    Ok(true)
}

fn gen2(blocks: [[ComplexMatrix; 2]; 2], lattice: Lattice) -> Result<GeneratorMatrix> {
    let rows = blocks.into_iter().map(|r| r.into_iter().collect()).collect();
    GeneratorMatrix::from_blocks(rows)?.with_lattice(lattice)
}

fn gen3(blocks: [[ComplexMatrix; 3]; 3], lattice: Lattice) -> Result<GeneratorMatrix> {
    let rows = blocks.into_iter().map(|r| r.into_iter().collect()).collect();
    GeneratorMatrix::from_blocks(rows)?.with_lattice(lattice)
}

/// `i(I + W)(I − W)⁻¹` on `e_0 … e_{m−1}`: `i` on the diagonal, `2i` below.
fn cayley_transform(m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, m, |r, c| match r.cmp(&c) {
        std::cmp::Ordering::Equal => I,
        std::cmp::Ordering::Greater => I * 2.0,
        std::cmp::Ordering::Less => ZERO,
    })
}

fn cayley_blocks(l: &ComplexMatrix, m: usize) -> [[ComplexMatrix; 2]; 2] {
    let ld = l.adjoint();
    let ltl = &ld * l;
    [
        [ltl.block(0, 0, m, m).scale_re(-0.5), -&ld.block(0, 0, m, m)],
        [l.block(0, 0, m, m), ComplexMatrix::zeros(m, m)],
    ]
}

/// `[−½L*L, −L*; L, 0]` with `L` the Cayley transform of the truncated right shift.
/// Isometric on the full truncation.
pub fn cayley_shift(m: usize) -> Result<GeneratorMatrix> {
    if m < 3 {
        return Err(Error::InvalidInput(format!("cayley_shift needs m >= 3, got {m}")));
    }
    gen2(cayley_blocks(&cayley_transform(m), m), Lattice::HalfLine)
}

/// Cayley-shift blocks formed on an `ambient`-dimensional truncation and then
/// compressed to the first `m` basis vectors. `L*L` keeps the contributions of
/// the discarded rows, so the drift loses mass through the edge.
pub fn cayley_shift_compressed(m: usize, ambient: usize) -> Result<GeneratorMatrix> {
    if m < 3 || ambient <= m {
        return Err(Error::InvalidInput(format!(
            "cayley_shift_compressed needs 3 <= m < ambient, got m = {m}, ambient = {ambient}"
        )));
    }
    gen2(cayley_blocks(&cayley_transform(ambient), m), Lattice::HalfLine)
}

/// Quantum harmonic oscillator
/// `[−½|λ|²(N+1) + iμ(N), W*λ̄(N); −λ(N)W, 0]` on ℓ²(ℤ₊). Margin [`ONE_STEP_MARGIN`].
pub fn iho(m: usize, lambda: &CoefficientFunction, mu: &CoefficientFunction) -> Result<GeneratorMatrix> {
    if m == 0 {
        return Err(Error::InvalidInput("iho needs m >= 1".into()));
    }
    let mut f00 = ComplexMatrix::zeros(m, m);
    let mut f01 = ComplexMatrix::zeros(m, m);
    let mut f10 = ComplexMatrix::zeros(m, m);
    for n in 0..m {
        let k = n as i64;
        let mu_n = mu.eval(k)?;
        if mu_n.im != 0.0 {
            return Err(Error::InvalidInput(format!("mu must be real, mu({n}) = {mu_n}")));
        }
        let up = lambda.eval(k + 1)?;
        f00[(n, n)] = C64::new(-0.5 * up.norm_sqr(), mu_n.re);
        if n > 0 {
            f01[(n - 1, n)] = lambda.eval(k)?.conj();
        }
        if n + 1 < m {
            f10[(n + 1, n)] = -up;
        }
    }
    gen2([[f00, f01], [f10, ComplexMatrix::zeros(m, m)]], Lattice::HalfLine)
}

/// Birth–death process on ℤ, window `e_{−M} … e_M` with `window = 2M + 1`:
/// `[−½|λ|²(N) − ½|μ|²(N), λ̄(N)W*, μ̄(N)W; −λ(N), W* − I, 0; −μ(N), 0, W − I]`.
/// Margin [`ONE_STEP_MARGIN`].
pub fn birth_death(window: usize, lambda: &CoefficientFunction, mu: &CoefficientFunction) -> Result<GeneratorMatrix> {
    if window % 2 == 0 {
        return Err(Error::InvalidInput(format!("birth_death window must be odd, got {window}")));
    }
    let half = (window / 2) as i64;
    let z = || ComplexMatrix::zeros(window, window);
    let (mut f00, mut f01, mut f02, mut f10, mut f20) = (z(), z(), z(), z(), z());
    let (mut w, mut wd) = (z(), z());
    for k in 0..window {
        let n = k as i64 - half;
        let (l, u) = (lambda.eval(n)?, mu.eval(n)?);
        f00[(k, k)] = C64::new(-0.5 * l.norm_sqr() - 0.5 * u.norm_sqr(), 0.0);
        f10[(k, k)] = -l;
        f20[(k, k)] = -u;
        if k > 0 {
            f01[(k - 1, k)] = lambda.eval(n - 1)?.conj();
            wd[(k - 1, k)] = ONE;
        }
        if k + 1 < window {
            f02[(k + 1, k)] = mu.eval(n + 1)?.conj();
            w[(k + 1, k)] = ONE;
        }
    }
    let minus_one = -ONE;
    gen3(
        [
            [f00, f01, f02],
            [f10, wd.add_identity(minus_one), z()],
            [f20, z(), w.add_identity(minus_one)],
        ],
        Lattice::Window,
    )
}

/// Sign of the number-operator term of the SHG drift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KSign {
    /// `+½(a₁*a₁ + a₂*a₂)`, as printed.
    #[default]
    Printed,
    /// `−½(a₁*a₁ + a₂*a₂)`, the dissipative choice under which the isometry identity holds.
    Dissipative,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ShgOptions {
    pub sign: KSign,
    /// Basis permutations `k ↦ perm[k]` of the product basis giving `V₁`, `V₂`.
    pub perm1: Option<Vec<usize>>,
    pub perm2: Option<Vec<usize>>,
}

/// Truncated annihilator `a e_n = √n e_{n−1}`.
fn annihilator(m: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(m, m, |r, c| {
        if c == r + 1 {
            C64::new((c as f64).sqrt(), 0.0)
        } else {
            ZERO
        }
    })
}

fn permutation_matrix(perm: &[usize]) -> ComplexMatrix {
    let n = perm.len();
    let mut v = ComplexMatrix::zeros(n, n);
    for (k, &p) in perm.iter().enumerate() {
        v[(p, k)] = ONE;
    }
    v
}

/// Second harmonic generation on ℓ²(ℤ₊²), basis `e_{p,q}` at index `p·m2 + q`:
/// `K = ±½(a₁*a₁ + a₂*a₂) + ω(a₁* − a₁) + λ(a₁*²a₂ − a₁²a₂*)` and
/// `F = [K, −a₁*V₁, −a₂*V₂; a₁, V₁ − I, 0; a₂, 0, V₂ − I]`, with `V = I` when
/// no permutation is given. Margin [`SHG_MARGIN`].
pub fn shg(m1: usize, m2: usize, omega: f64, lambda: f64, opts: &ShgOptions) -> Result<GeneratorMatrix> {
    if m1 < 3 || m2 < 3 {
        return Err(Error::InvalidInput(format!("shg needs m1, m2 >= 3, got {m1}, {m2}")));
    }
    if !omega.is_finite() || !lambda.is_finite() {
        return Err(Error::InvalidInput("shg couplings must be finite".into()));
    }
    let n = m1 * m2;
    let a1 = annihilator(m1).kron(&ComplexMatrix::identity(m2));
    let a2 = ComplexMatrix::identity(m1).kron(&annihilator(m2));
    let (a1d, a2d) = (a1.adjoint(), a2.adjoint());
    let half = match opts.sign {
        KSign::Printed => 0.5,
        KSign::Dissipative => -0.5,
    };
    let number = &(&a1d * &a1) + &(&a2d * &a2);
    let mut k = number.scale_re(half);
    k += &(&a1d - &a1).scale_re(omega);
    let pump = &(&(&a1d * &a1d) * &a2) - &(&(&a1 * &a1) * &a2d);
    k += &pump.scale_re(lambda);

    let exchange = |perm: &Option<Vec<usize>>, ad: &ComplexMatrix| -> Result<(ComplexMatrix, ComplexMatrix)> {
        match perm {
            None => Ok((-ad, ComplexMatrix::zeros(n, n))),
            Some(p) => {
                check_permutation(p, n)?;
                let v = permutation_matrix(p);
                Ok((-&(ad * &v), v.add_identity(-ONE)))
            }
        }
    };
    let (f01, f11) = exchange(&opts.perm1, &a1d)?;
    let (f02, f22) = exchange(&opts.perm2, &a2d)?;
    let z = || ComplexMatrix::zeros(n, n);
    gen3(
        [[k, f01, f02], [a1, f11, z()], [a2, z(), f22]],
        Lattice::Grid { dims: [m1, m2] },
    )
}
