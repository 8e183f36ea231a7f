//! Brute-force reference implementations. Deliberately naive and
//! single-threaded: each one re-derives a quantity from its definition so the
//! optimized paths in `moments` can be checked against it.

use crate::bump::phi;
use crate::error::{Error, Result};
use crate::multfn::UnimodularCmf;
use crate::ntcore::{gcd_unchecked, FactorTable};
use crate::quad::composite_simpson;
use crate::resonator::{PrimeWeights, Resonator, Support};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Largest `N X` accepted by the quadruple loops.
pub const BRUTEFORCE_LIMIT: u64 = 10_000;

/// Panels of the fixed Simpson rule in [`m2_bruteforce_quadrature`].
pub const ORACLE_PANELS: usize = 1_000_000;

/// An explicit table `n -> r(n)` for `1 <= n <= cap`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyResonator {
    values: Vec<f64>,
    /// Cached `(p, r(p))` when the table is multiplicative and squarefree-supported.
    primes: Vec<(u32, f64)>,
}

fn trial_factor(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            let mut e = 0;
            while n.is_multiple_of(p) {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
        p += 1;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

impl ToyResonator {
    /// From explicit values; unlisted `n <= cap` get `r(n) = 0`.
    pub fn new(cap: u64, values: impl IntoIterator<Item = (u64, f64)>) -> Result<Self> {
        if cap == 0 || cap > 10_000_000 {
            return Err(Error::invalid(format!(
                "toy resonator cap must be in [1, 1e7], got {cap}"
            )));
        }
        let mut table = vec![0.0; cap as usize + 1];
        for (n, r) in values {
            if n == 0 || n > cap {
                return Err(Error::invalid(format!("toy resonator key {n} outside [1, {cap}]")));
            }
            if !(r >= 0.0) || !r.is_finite() {
                return Err(Error::invalid(format!(
                    "toy resonator value r({n}) = {r} must be finite and >= 0"
                )));
            }
            table[n as usize] = r;
        }
        let mut toy = Self {
            values: table,
            primes: Vec::new(),
        };
        if toy.is_multiplicative_squarefree() {
            toy.primes = (2..=cap)
                .filter(|&n| trial_factor(n) == [(n, 1)] && toy.value(n) > 0.0)
                .map(|p| (p as u32, toy.value(p)))
                .collect();
        }
        Ok(toy)
    }

    /// Squarefree multiplicative extension of the given prime values, built by
    /// trial division.
    pub fn from_prime_weights(cap: u64, weights: &[(u32, f64)]) -> Result<Self> {
        let weight = |p: u64| weights.iter().find(|w| w.0 as u64 == p).map_or(0.0, |w| w.1);
        let values = (1..=cap).map(|n| {
            let r = trial_factor(n)
                .into_iter()
                .map(|(p, e)| if e == 1 { weight(p) } else { 0.0 })
                .product::<f64>();
            (n, r)
        });
        Self::new(cap, values)
    }

    /// The values of `res` on `[1, cap]`, through factorization.
    pub fn from_resonator(res: &Resonator, cap: u64, table: &FactorTable) -> Result<Self> {
        let values = (1..=cap)
            .map(|n| res.r_value(n, table).map(|r| (n, r)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cap, values)
    }

    pub fn cap(&self) -> u64 {
        self.values.len() as u64 - 1
    }

    /// `r(n)`, zero beyond the cap.
    pub fn value(&self, n: u64) -> f64 {
        self.values.get(n as usize).copied().unwrap_or(0.0)
    }

    /// `r(1) = 1`, `r` vanishes off squarefree integers, and `r(ab) = r(a) r(b)`
    /// for coprime `a, b` with `ab <= cap` (to 1e-12 relative).
    pub fn is_multiplicative_squarefree(&self) -> bool {
        let cap = self.cap();
        if self.value(1) != 1.0 {
            return false;
        }
        for n in 2..=cap {
            if trial_factor(n).iter().any(|&(_, e)| e > 1) && self.value(n) != 0.0 {
                return false;
            }
        }
        for a in 2..=cap {
            for b in 2..=cap / a {
                if gcd_unchecked(a, b) == 1 {
                    let lhs = self.value(a * b);
                    let rhs = self.value(a) * self.value(b);
                    if (lhs - rhs).abs() > 1e-12 * lhs.abs().max(rhs.abs()) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Support of the table, for feeding the optimized paths.
    pub fn to_support(&self) -> Result<Support> {
        if self.primes.is_empty() && !self.is_multiplicative_squarefree() {
            return Err(Error::invalid(
                "toy resonator is not multiplicative and squarefree-supported",
            ));
        }
        self.support(self.cap() as f64, self.values.len())
    }
}

impl PrimeWeights for ToyResonator {
    fn prime_weights(&self) -> &[(u32, f64)] {
        &self.primes
    }
}

fn check_small(n: u64, x: u64) -> Result<()> {
    if n == 0 || x == 0 {
        return Err(Error::invalid("N and X must be positive"));
    }
    if n.saturating_mul(x) > BRUTEFORCE_LIMIT {
        return Err(Error::resource(format!(
            "brute force needs N X <= {BRUTEFORCE_LIMIT}, got N = {n}, X = {x}"
        )));
    }
    Ok(())
}

/// `sum_{m, n <= N; a, b <= X; ma = nb} r(a) r(b)` by a quadruple loop.
pub fn diagonal_sum_bruteforce(r: &ToyResonator, n: u64, x: u64) -> Result<f64> {
    check_small(n, x)?;
    let mut total = 0.0;
    for m in 1..=n {
        for k in 1..=n {
            for a in 1..=x {
                for b in 1..=x {
                    if m * a == k * b {
                        total += r.value(a) * r.value(b);
                    }
                }
            }
        }
    }
    Ok(total)
}

/// `M2` by composite Simpson with [`ORACLE_PANELS`] panels on `[T/2, T]`,
/// with `R(t) = sum_{n <= cap} f(n) r(n) n^{it}` read off the table.
pub fn m2_bruteforce_quadrature(
    r: &ToyResonator,
    f: &UnimodularCmf,
    n: u64,
    t_len: f64,
    table: &FactorTable,
) -> Result<f64> {
    if n == 0 || !(t_len > 0.0) {
        return Err(Error::invalid("need N >= 1 and T > 0"));
    }
    let mut res_terms = Vec::new();
    for k in 1..=r.cap() {
        let rk = r.value(k);
        if rk != 0.0 {
            res_terms.push((f.eval(k, table)? * rk, (k as f64).ln()));
        }
    }
    let dir_terms: Vec<(Complex64, f64)> = (1..=n)
        .map(|k| Ok((f.eval(k, table)?, (k as f64).ln())))
        .collect::<Result<_>>()?;
    let eval = |terms: &[(Complex64, f64)], t: f64| -> f64 {
        terms
            .iter()
            .map(|(c, w)| c * Complex64::cis(t * w))
            .sum::<Complex64>()
            .norm_sqr()
    };
    let inv_n = 1.0 / n as f64;
    Ok(composite_simpson(
        |t| phi(t / t_len) * eval(&res_terms, t) * eval(&dir_terms, t) * inv_n,
        0.5 * t_len,
        t_len,
        ORACLE_PANELS,
    ))
}

/// Checks that `(m, n, a, b) -> (g, h, a', b')` with `g = (a, b)`, `h = (m, n)`
/// is a bijection from solutions of `ma = nb` (`m, n <= N`, `a, b <= X`) onto
/// tuples with `(a', b') = 1`, `a' g, b' g <= X` and `h max(a', b') <= N`.
pub fn parametrization_bijection_check(n: u64, x: u64) -> Result<bool> {
    check_small(n, x)?;
    let mut forward = Vec::new();
    for m in 1..=n {
        for k in 1..=n {
            for a in 1..=x {
                for b in 1..=x {
                    if m * a != k * b {
                        continue;
                    }
                    let g = gcd_unchecked(a, b);
                    let h = gcd_unchecked(m, k);
                    let (a1, b1) = (a / g, b / g);
                    // the inverse must reproduce the quadruple
                    if (h * b1, h * a1, a1 * g, b1 * g) != (m, k, a, b) {
                        return Ok(false);
                    }
                    forward.push((g, h, a1, b1));
                }
            }
        }
    }
    let mut params = Vec::new();
    for a1 in 1..=x {
        for b1 in 1..=x {
            if gcd_unchecked(a1, b1) != 1 {
                continue;
            }
            let mx = a1.max(b1);
            for g in 1..=x / mx {
                for h in 1..=n / mx {
                    params.push((g, h, a1, b1));
                }
            }
        }
    }
    let count = forward.len();
    forward.sort_unstable();
    forward.dedup();
    params.sort_unstable();
    Ok(forward.len() == count && forward == params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::{diagonal_sum, DEFAULT_BUDGET_TERMS};

    fn two_toy() -> ToyResonator {
        ToyResonator::new(2, [(1, 1.0), (2, 1.0)]).unwrap()
    }

    #[test]
    fn toy_examples() {
        let r = two_toy();
        assert!(r.is_multiplicative_squarefree());
        assert_eq!(diagonal_sum_bruteforce(&r, 2, 2).unwrap(), 6.0);
        let s = r.to_support().unwrap();
        assert_eq!(diagonal_sum(&s, 2, DEFAULT_BUDGET_TERMS).unwrap(), 6.0);
        assert!(parametrization_bijection_check(2, 2).unwrap());
    }

    #[test]
    fn toy_validation() {
        assert!(ToyResonator::new(5, [(6, 1.0)]).is_err());
        assert!(ToyResonator::new(5, [(2, -1.0)]).is_err());
        let not_mult = ToyResonator::new(6, [(1, 1.0), (2, 0.5), (3, 0.5), (6, 0.3)]).unwrap();
        assert!(!not_mult.is_multiplicative_squarefree());
        assert!(not_mult.to_support().is_err());
        let square = ToyResonator::new(4, [(1, 1.0), (4, 0.5)]).unwrap();
        assert!(!square.is_multiplicative_squarefree());
        let built = ToyResonator::from_prime_weights(30, &[(2, 0.5), (3, 0.25), (7, 2.0)]).unwrap();
        assert!(built.is_multiplicative_squarefree());
        assert_eq!(built.value(14), 1.0);
        assert_eq!(built.value(4), 0.0);
        assert_eq!(built.value(5), 0.0);
    }

    #[test]
    fn degenerate_cases() {
        let r = ToyResonator::from_prime_weights(20, &[(2, 0.3), (5, 0.7)]).unwrap();
        let s2: f64 = (1..=20).map(|a| r.value(a).powi(2)).sum();
        assert!((diagonal_sum_bruteforce(&r, 1, 20).unwrap() - s2).abs() < 1e-15);
        assert!((diagonal_sum_bruteforce(&r, 9, 1).unwrap() - 9.0).abs() < 1e-15);
        assert!(diagonal_sum_bruteforce(&r, 200, 100).unwrap_err().is_resource_limit());
    }

    #[test]
    fn bijection_holds_on_small_grid() {
        for n in 1..=12 {
            for x in 1..=12 {
                assert!(parametrization_bijection_check(n, x).unwrap(), "N={n} X={x}");
            }
        }
    }

    #[test]
    fn resonator_table_round_trip() {
        let t = FactorTable::new(10_000).unwrap();
        let res = Resonator::from_log_x(20.0, &t).unwrap();
        let toy = ToyResonator::from_resonator(&res, 200, &t).unwrap();
        assert!(toy.is_multiplicative_squarefree());
        assert_eq!(toy.prime_weights(), res.prime_weights());
    }
}
