//! Associated semigroups `Q^{c,d}_t = exp(t G^{c,d})` of a stochastic generator.
//!
//! `G^{c,d} = (I ⊗ ⟨ĉ|) F (I ⊗ |d̂⟩) + (⟨c,d⟩ − ½‖c‖² − ½‖d‖²) I` with
//! `ĉ = (1, c)`. At basis values `(c, d) ∈ {0, e_i} × {0, e_j}` this is exactly
//! the generator `G^{αβ}` of the generator module.

mod schur;
mod trotter;

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

pub use schur::{random_schur_trials, schur_criterion, varpi_matrix, SchurOutcome, SchurSweep};
pub use trotter::{trotter_study, TrotterStudy};

use crate::error::{Error, Result};
use crate::generator::GeneratorMatrix;
use crate::numerics::{expm, inner, re, vec_norm, ComplexMatrix, C64, ZERO};

/// Scalar part `⟨c,d⟩ − ½‖c‖² − ½‖d‖²`.
pub fn overlap_exponent(c: &[C64], d: &[C64]) -> C64 {
    inner(c, d) - re(0.5 * vec_norm(c).powi(2) + 0.5 * vec_norm(d).powi(2))
}

/// `G^{c,d}` for arbitrary noise vectors.
pub fn generator_cd(f: &GeneratorMatrix, c: &[C64], d: &[C64]) -> Result<ComplexMatrix> {
    let basis = f.basis();
    let c_hat = basis.hat(c)?;
    let d_hat = basis.hat(d)?;
    let mut g = f.block(0, 0).clone();
    for (alpha, ca) in c_hat.iter().enumerate() {
        for (beta, db) in d_hat.iter().enumerate() {
            if alpha == 0 && beta == 0 {
                continue;
            }
            let coeff = ca.conj() * db;
            if coeff == ZERO {
                continue;
            }
            let blk = f.block(alpha, beta);
            g += &(if coeff == crate::numerics::ONE { blk.clone() } else { blk.scale(coeff) });
        }
    }
    let scalar = overlap_exponent(c, d);
    Ok(if scalar == ZERO { g } else { g.add_identity(scalar) })
}

/// `exp(t G)`.
pub fn evolve(g: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::InvalidInput(format!("evolution time must be >= 0, got {t}")));
    }
    expm(&g.scale_re(t))
}

type PairKey = Vec<u64>;

fn pair_key(c: &[C64], d: &[C64]) -> PairKey {
    c.iter()
        .chain(d)
        .flat_map(|z| [z.re.to_bits(), z.im.to_bits()])
        .collect()
}

/// The family `{Q^{c,d}}` of a generator with memoized generators and propagators.
///
/// Keys are the exact bit patterns of `(c, d)` (and `t`); readers share the
/// caches and insertion takes the write lock.
pub struct SemigroupFamily {
    source: GeneratorMatrix,
    generators: RwLock<HashMap<PairKey, Arc<ComplexMatrix>>>,
    propagators: RwLock<HashMap<(PairKey, u64), Arc<ComplexMatrix>>>,
}

impl SemigroupFamily {
    pub fn new(source: GeneratorMatrix) -> Self {
        Self {
            source,
            generators: RwLock::new(HashMap::new()),
            propagators: RwLock::new(HashMap::new()),
        }
    }

    pub fn source(&self) -> &GeneratorMatrix {
        &self.source
    }

    pub fn h_dim(&self) -> usize {
        self.source.h_dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.source.noise_dim()
    }

    pub fn generator(&self, c: &[C64], d: &[C64]) -> Result<Arc<ComplexMatrix>> {
        let key = pair_key(c, d);
        if let Some(g) = self.generators.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(g));
        }
        let g = Arc::new(generator_cd(&self.source, c, d)?);
        let mut w = self.generators.write().expect("cache lock");
        Ok(Arc::clone(w.entry(key).or_insert(g)))
    }

    /// `Q^{c,d}_t`.
    pub fn propagator(&self, c: &[C64], d: &[C64], t: f64) -> Result<Arc<ComplexMatrix>> {
        let key = (pair_key(c, d), t.to_bits());
        if let Some(q) = self.propagators.read().expect("cache lock").get(&key) {
            return Ok(Arc::clone(q));
        }
        let q = Arc::new(evolve(&*self.generator(c, d)?, t)?);
        let mut w = self.propagators.write().expect("cache lock");
        Ok(Arc::clone(w.entry(key).or_insert(q)))
    }

    /// Snapshot of every cached `(c, d) ↦ G^{c,d}`, with `c` and `d` decoded.
    pub fn cached_generators(&self) -> Vec<(Vec<C64>, Vec<C64>, Arc<ComplexMatrix>)> {
        let d = self.noise_dim();
        self.generators
            .read()
            .expect("cache lock")
            .iter()
            .map(|(k, g)| {
                let z: Vec<C64> = k
                    .chunks(2)
                    .map(|p| C64::new(f64::from_bits(p[0]), f64::from_bits(p[1])))
                    .collect();
                (z[..d].to_vec(), z[d..].to_vec(), Arc::clone(g))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::tests::{random_contractive, random_generator};
    use crate::generator::{g_from_f, max_form_deficit};
    use crate::numerics::{basis_vector, herm_max_eig, op_norm, ONE};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(d: usize, i: usize) -> Vec<C64> {
        if i == 0 {
            vec![ZERO; d]
        } else {
            basis_vector(d, i - 1)
        }
    }

    #[test]
    fn basis_values_agree_bitwise_with_g_from_f() {
        let f = random_generator(21, 3, 2);
        for a in 0..3 {
            for b in 0..3 {
                let g = generator_cd(&f, &unit(2, a), &unit(2, b)).unwrap();
                assert_eq!(g, g_from_f(&f, a, b).unwrap(), "({a},{b})");
            }
        }
    }

    #[test]
    fn zero_pair_is_drift_and_creation_shift() {
        let f = random_generator(3, 3, 1);
        assert_eq!(&generator_cd(&f, &[ZERO], &[ZERO]).unwrap(), f.block(0, 0));
        let g = generator_cd(&f, &[ONE], &[ZERO]).unwrap();
        let want = (f.block(0, 0) + f.block(1, 0)).add_identity(re(-0.5));
        assert_eq!(g, want);
    }

    #[test]
    fn general_pair_matches_expansion_loop() {
        let f = random_generator(5, 3, 2);
        let c = [C64::new(0.3, -0.7), C64::new(-1.1, 0.2)];
        let d = [C64::new(0.5, 0.5), C64::new(0.0, 0.9)];
        let c_hat = [ONE, c[0], c[1]];
        let d_hat = [ONE, d[0], d[1]];
        let mut want = ComplexMatrix::zeros(3, 3);
        for a in 0..3 {
            for b in 0..3 {
                for r in 0..3 {
                    for k in 0..3 {
                        want[(r, k)] += c_hat[a].conj() * d_hat[b] * f.block(a, b)[(r, k)];
                    }
                }
            }
        }
        let mut scalar = ZERO;
        for i in 0..2 {
            scalar += c[i].conj() * d[i] - 0.5 * c[i].norm_sqr() - 0.5 * d[i].norm_sqr();
        }
        for r in 0..3 {
            want[(r, r)] += scalar;
        }
        let got = generator_cd(&f, &c, &d).unwrap();
        assert!((&got - &want).max_abs() < 1e-14);
    }

    #[test]
    fn length_mismatch_rejected() {
        let f = GeneratorMatrix::zeros(2, 2);
        assert!(matches!(generator_cd(&f, &[ZERO], &[ZERO, ZERO]), Err(Error::Dimension(_))));
    }

    #[test]
    fn evolve_cases() {
        let g = ComplexMatrix::identity(3).scale_re(-1.0);
        assert_eq!(evolve(&g, 0.0).unwrap(), ComplexMatrix::identity(3));
        let half = evolve(&g, std::f64::consts::LN_2).unwrap();
        assert!((&half - &ComplexMatrix::identity(3).scale_re(0.5)).max_abs() < 1e-15);
        assert!(evolve(&g, -1.0).is_err());
        assert!(evolve(&g, f64::NAN).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn semigroup_law_and_contraction(seed in 0u64..10_000, s in 0.0f64..3.0, t in 0.0f64..3.0) {
            let f = random_contractive(seed, 4, 2);
            prop_assert!(max_form_deficit(&f) <= 1e-10);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut rv = || vec![
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
                C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            ];
            let (c, d) = (rv(), rv());
            let g = generator_cd(&f, &c, &d).unwrap();
            prop_assert!(herm_max_eig(&g).unwrap() <= 1e-10);
            let qs = evolve(&g, s).unwrap();
            let qt = evolve(&g, t).unwrap();
            let qst = evolve(&g, s + t).unwrap();
            prop_assert!((&qst - &(&qs * &qt)).max_abs() <= 1e-10);
            prop_assert!(op_norm(&qst) <= 1.0 + 1e-10);
        }
    }

    #[test]
    fn family_cache_is_bit_exact() {
        let f = random_generator(8, 3, 1);
        let fam = SemigroupFamily::new(f.clone());
        let pairs = [
            ([C64::new(0.1, 0.2)], [C64::new(-0.3, 0.0)]),
            ([ZERO], [ONE]),
            ([C64::new(1.0 / 3.0, 0.0)], [ZERO]),
        ];
        for (c, d) in &pairs {
            fam.generator(c, d).unwrap();
            fam.generator(c, d).unwrap();
        }
        let cached = fam.cached_generators();
        assert_eq!(cached.len(), 3);
        for (c, d, g) in cached {
            assert_eq!(*g, generator_cd(&f, &c, &d).unwrap());
        }
        let q = fam.propagator(&[ZERO], &[ONE], 0.5).unwrap();
        let again = fam.propagator(&[ZERO], &[ONE], 0.5).unwrap();
        assert!(Arc::ptr_eq(&q, &again));
    }

    #[test]
    fn family_is_shareable_across_threads() {
        let fam = Arc::new(SemigroupFamily::new(random_contractive(2, 3, 1)));
        let handles: Vec<_> = (0..4)
            .map(|k| {
                let fam = Arc::clone(&fam);
                std::thread::spawn(move || {
                    let c = [C64::new(k as f64 * 0.1, 0.0)];
                    fam.propagator(&c, &c, 1.0).unwrap()
                })
            })
            .collect();
        for h in handles {
            assert!(op_norm(&h.join().unwrap()) <= 1.0 + 1e-10);
        }
    }
}
