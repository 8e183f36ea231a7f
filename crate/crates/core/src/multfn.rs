//! Unimodular completely multiplicative functions: the constant one, the
//! archimedean family `n^{i alpha}`, and seeded Steinhaus samples.

use crate::error::{Error, Result};
use crate::ntcore::FactorTable;
use num_complex::Complex64;
use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::RwLock;

/// Which member of the family a [`UnimodularCmf`] is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CmfKind {
    ConstantOne,
    Archimedean { alpha: f64 },
    Steinhaus { seed: u64 },
}

impl CmfKind {
    /// Short human-readable label, as accepted by the `--f` flag.
    pub fn label(&self) -> String {
        match self {
            CmfKind::ConstantOne => "one".to_string(),
            CmfKind::Archimedean { alpha } => format!("arch:{alpha}"),
            CmfKind::Steinhaus { seed } => format!("steinhaus:{seed}"),
        }
    }
}

/// A completely multiplicative `f` with `|f(n)| = 1`, determined by its
/// values on primes up to `prime_limit`.
///
/// Steinhaus values are derived per prime from the seed: the key is
/// `ChaCha20Rng::seed_from_u64(seed)`, the stream number is the prime, and
/// the top 53 bits of the first 64-bit output give `u_p` in `[0, 1)`, so
/// `f(p) = exp(2 pi i u_p)`. Each prime is independent of query order.
#[derive(Debug)]
pub struct UnimodularCmf {
    kind: CmfKind,
    prime_limit: u64,
    // prime -> u_p (turns); filled lazily, every fill writes the same value
    phases: RwLock<HashMap<u32, f64>>,
}

impl Clone for UnimodularCmf {
    fn clone(&self) -> Self {
        let phases = self.phases.read().expect("phase cache poisoned").clone();
        Self {
            kind: self.kind,
            prime_limit: self.prime_limit,
            phases: RwLock::new(phases),
        }
    }
}

/// `f(p) = exp(2 pi i u_p)` with `u_p` drawn from the seed-and-prime keyed stream.
pub fn steinhaus_turns(seed: u64, p: u32) -> f64 {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(p as u64);
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

impl UnimodularCmf {
    pub fn new(kind: CmfKind, prime_limit: u64) -> Result<Self> {
        if prime_limit < 2 {
            return Err(Error::invalid("prime_limit must be >= 2"));
        }
        if let CmfKind::Archimedean { alpha } = kind {
            if !alpha.is_finite() {
                return Err(Error::invalid("archimedean alpha must be finite"));
            }
        }
        Ok(Self {
            kind,
            prime_limit,
            phases: RwLock::new(HashMap::new()),
        })
    }

    pub fn constant_one() -> Self {
        Self::new(CmfKind::ConstantOne, u64::MAX).expect("valid")
    }

    /// `f(n) = n^{i alpha}`.
    pub fn archimedean(alpha: f64) -> Result<Self> {
        Self::new(CmfKind::Archimedean { alpha }, u64::MAX)
    }

    pub fn steinhaus(seed: u64, prime_limit: u64) -> Result<Self> {
        Self::new(CmfKind::Steinhaus { seed }, prime_limit)
    }

    pub fn kind(&self) -> CmfKind {
        self.kind
    }

    pub fn prime_limit(&self) -> u64 {
        self.prime_limit
    }

    /// True when every value is real, so `D_N(-t) = conj(D_N(t))`.
    pub fn is_real_valued(&self) -> bool {
        matches!(self.kind, CmfKind::ConstantOne) || matches!(self.kind, CmfKind::Archimedean { alpha } if alpha == 0.0)
    }

    fn check_prime(&self, p: u32) -> Result<()> {
        if p as u64 > self.prime_limit {
            return Err(Error::OutOfRange {
                what: "prime factor",
                value: p as u64,
                limit: self.prime_limit,
            });
        }
        Ok(())
    }

    fn steinhaus_phase(&self, seed: u64, p: u32) -> f64 {
        if let Some(&u) = self.phases.read().expect("phase cache poisoned").get(&p) {
            return u;
        }
        let u = steinhaus_turns(seed, p);
        self.phases.write().expect("phase cache poisoned").entry(p).or_insert(u);
        u
    }

    /// `f(p)` for a prime `p`.
    pub fn prime_value(&self, p: u32) -> Result<Complex64> {
        self.eval_factored(&[(p, 1)])
    }

    /// `prod f(p)^e` over the given factorization.
    pub fn eval_factored(&self, factors: &[(u32, u32)]) -> Result<Complex64> {
        for &(p, _) in factors {
            self.check_prime(p)?;
        }
        Ok(match self.kind {
            CmfKind::ConstantOne => Complex64::new(1.0, 0.0),
            CmfKind::Archimedean { alpha } => {
                let log_n: f64 = factors.iter().map(|&(p, e)| e as f64 * (p as f64).ln()).sum();
                Complex64::cis(alpha * log_n)
            }
            CmfKind::Steinhaus { seed } => {
                // Accumulate turns modulo one so the result is exactly one cis call.
                let mut turns = 0.0f64;
                for &(p, e) in factors {
                    turns = (turns + e as f64 * self.steinhaus_phase(seed, p)).fract();
                }
                Complex64::cis(TAU * turns)
            }
        })
    }

    /// `f(n)` via the sieve factorization.
    pub fn eval(&self, n: u64, table: &FactorTable) -> Result<Complex64> {
        if n == 0 {
            return Err(Error::invalid("f is defined on positive integers"));
        }
        if let CmfKind::Archimedean { alpha } = self.kind {
            // n^{i alpha} directly; identical to the product over primes.
            return Ok(Complex64::cis(alpha * (n as f64).ln()));
        }
        let factors = table.factorize(n)?;
        self.eval_factored(&factors)
    }

    /// `[f(1), f(2), ..., f(n_max)]`.
    pub fn values_up_to(&self, n_max: u64, table: &FactorTable) -> Result<Vec<Complex64>> {
        (1..=n_max).map(|n| self.eval(n, table)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn steinhaus_is_deterministic() {
        let t = FactorTable::new(100).unwrap();
        let f = UnimodularCmf::steinhaus(42, 100).unwrap();
        let g = UnimodularCmf::steinhaus(42, 100).unwrap();
        // query g in reverse order to exercise order independence
        let gv: Vec<_> = (1..=100u64).rev().map(|n| g.eval(n, &t).unwrap()).collect();
        for n in 1..=100u64 {
            assert_eq!(f.eval(n, &t).unwrap(), gv[100 - n as usize]);
            assert_eq!(f.eval(n, &t).unwrap(), f.eval(n, &t).unwrap());
        }
        assert!(((f.prime_value(2).unwrap()).norm() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn distinct_seeds_differ() {
        let a = UnimodularCmf::steinhaus(1, 100).unwrap();
        let b = UnimodularCmf::steinhaus(2, 100).unwrap();
        let t = FactorTable::new(100).unwrap();
        let primes = t.primes_in(2.0, 100.0).unwrap();
        assert!(primes
            .iter()
            .any(|&p| a.prime_value(p).unwrap() != b.prime_value(p).unwrap()));
        // stable values for the published seed pair
        assert_ne!(steinhaus_turns(1, 2), steinhaus_turns(2, 2));
        assert!((0.0..1.0).contains(&steinhaus_turns(1, 2)));
    }

    #[test]
    fn eval_examples() {
        let t = FactorTable::new(1000).unwrap();
        assert_eq!(
            UnimodularCmf::constant_one().eval(12, &t).unwrap(),
            Complex64::new(1.0, 0.0)
        );
        let alpha = 0.7;
        let f = UnimodularCmf::archimedean(alpha).unwrap();
        assert!(close(f.eval(6, &t).unwrap(), Complex64::cis(alpha * 6f64.ln()), 1e-15));

        let s = UnimodularCmf::steinhaus(7, 1000).unwrap();
        let f2 = s.prime_value(2).unwrap();
        let f3 = s.prime_value(3).unwrap();
        assert!(close(s.eval(12, &t).unwrap(), f2 * f2 * f3, 1e-14));
    }

    #[test]
    fn archimedean_family() {
        let t = FactorTable::new(1000).unwrap();
        let zero = UnimodularCmf::archimedean(0.0).unwrap();
        for n in 1..=100 {
            assert_eq!(zero.eval(n, &t).unwrap(), Complex64::new(1.0, 0.0));
        }
        let f = UnimodularCmf::archimedean(TAU / 2f64.ln()).unwrap();
        assert!(close(f.eval(2, &t).unwrap(), Complex64::new(1.0, 0.0), 1e-12));
        for alpha in [0.3, -2.0, 17.5] {
            let f = UnimodularCmf::archimedean(alpha).unwrap();
            let f2 = f.eval(2, &t).unwrap();
            assert!(close(f.eval(4, &t).unwrap(), f2 * f2, 1e-12));
        }
        assert!(UnimodularCmf::archimedean(f64::NAN).is_err());
    }

    #[test]
    fn prime_limit_enforced() {
        let t = FactorTable::new(100).unwrap();
        let s = UnimodularCmf::steinhaus(3, 10).unwrap();
        assert!(s.eval(7 * 3, &t).is_ok());
        assert!(matches!(s.eval(2 * 11, &t), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn unit_modulus_up_to_ten_thousand() {
        let t = FactorTable::new(10_000).unwrap();
        let s = UnimodularCmf::steinhaus(99, 10_000).unwrap();
        for z in s.values_up_to(10_000, &t).unwrap() {
            assert!((z.norm() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn multiplicative_on_random_coprime_pairs() {
        use rand::{Rng, SeedableRng};
        let t = FactorTable::new(1_000_000).unwrap();
        let s = UnimodularCmf::steinhaus(2024, 1_000_000).unwrap();
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        let mut checked = 0;
        while checked < 500 {
            let m: u64 = rng.gen_range(1..1000);
            let n: u64 = rng.gen_range(1..1000);
            if crate::ntcore::gcd_unchecked(m, n) != 1 {
                continue;
            }
            let lhs = s.eval(m * n, &t).unwrap();
            let rhs = s.eval(m, &t).unwrap() * s.eval(n, &t).unwrap();
            assert!(close(lhs, rhs, 1e-12));
            checked += 1;
        }
    }

    proptest! {
        #[test]
        fn completely_multiplicative(seed in any::<u64>(), m in 1u64..1000, n in 1u64..1000) {
            let t = FactorTable::new(1_000_000).unwrap();
            let s = UnimodularCmf::steinhaus(seed, 1_000_000).unwrap();
            let lhs = s.eval(m * n, &t).unwrap();
            let rhs = s.eval(m, &t).unwrap() * s.eval(n, &t).unwrap();
            prop_assert!(close(lhs, rhs, 1e-12));
        }
    }
}
