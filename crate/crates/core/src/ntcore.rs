//! Integer arithmetic substrate: a smallest-prime-factor sieve plus the
//! factorization, prime enumeration, gcd and squarefree tests built on it.

use crate::error::{Error, Result};

/// Default sieve limit used by the command-line front end.
pub const DEFAULT_SIEVE_LIMIT: u32 = 1 << 24;

/// Default ceiling on the memory a sieve may allocate (1 GiB).
pub const DEFAULT_SIEVE_MEMORY_CAP: usize = 1 << 30;

/// Smallest-prime-factor table for every integer `2 ..= limit`.
///
/// Immutable after construction, so it can be shared freely across threads.
#[derive(Debug, Clone)]
pub struct FactorTable {
    limit: u32,
    spf: Vec<u32>,
}

impl FactorTable {
    /// Builds the table with the default memory cap.
    pub fn new(limit: u32) -> Result<Self> {
        Self::with_memory_cap(limit, DEFAULT_SIEVE_MEMORY_CAP)
    }

    /// Builds the table, refusing to allocate more than `max_bytes`.
    pub fn with_memory_cap(limit: u32, max_bytes: usize) -> Result<Self> {
        if limit < 2 {
            return Err(Error::invalid(format!("sieve limit must be >= 2, got {limit}")));
        }
        let bytes = (limit as usize + 1) * std::mem::size_of::<u32>();
        if bytes > max_bytes {
            return Err(Error::resource(format!(
                "sieve up to {limit} needs {bytes} bytes, cap is {max_bytes}"
            )));
        }

        let n = limit as usize;
        let mut spf = vec![0u32; n + 1];
        let mut primes: Vec<u32> = Vec::new();
        // Linear sieve: every composite is crossed off exactly once, by its
        // smallest prime factor.
        for i in 2..=n {
            if spf[i] == 0 {
                spf[i] = i as u32;
                primes.push(i as u32);
            }
            let si = spf[i];
            for &p in &primes {
                if p > si {
                    break;
                }
                let Some(m) = i.checked_mul(p as usize) else { break };
                if m > n {
                    break;
                }
                spf[m] = p;
            }
        }
        Ok(Self { limit, spf })
    }

    pub fn limit(&self) -> u32 {
        self.limit
    }

    /// Smallest prime factor of `n`, for `2 <= n <= limit`.
    pub fn spf(&self, n: u64) -> Result<u32> {
        self.check(n)?;
        if n < 2 {
            return Err(Error::invalid("smallest prime factor is undefined below 2"));
        }
        Ok(self.spf[n as usize])
    }

    pub fn is_prime(&self, n: u64) -> Result<bool> {
        self.check(n)?;
        Ok(n >= 2 && self.spf[n as usize] as u64 == n)
    }

    fn check(&self, n: u64) -> Result<()> {
        if n > self.limit as u64 {
            return Err(Error::OutOfRange {
                what: "n",
                value: n,
                limit: self.limit as u64,
            });
        }
        Ok(())
    }

    /// Prime factorization of `n` as ascending `(prime, exponent)` pairs.
    /// `factorize(1)` is the empty list.
    pub fn factorize(&self, n: u64) -> Result<Vec<(u32, u32)>> {
        if n == 0 {
            return Err(Error::invalid("cannot factorize 0"));
        }
        self.check(n)?;
        let mut out: Vec<(u32, u32)> = Vec::new();
        let mut m = n as usize;
        while m > 1 {
            let p = self.spf[m];
            let mut e = 0;
            while m.is_multiple_of(p as usize) {
                m /= p as usize;
                e += 1;
            }
            out.push((p, e));
        }
        Ok(out)
    }

    /// Primes `p` with `lo <= p <= hi`, ascending. `lo > hi` gives an empty list.
    pub fn primes_in(&self, lo: f64, hi: f64) -> Result<Vec<u32>> {
        if lo.is_nan() || hi.is_nan() {
            return Err(Error::invalid("prime window bounds must not be NaN"));
        }
        if lo > hi {
            return Ok(Vec::new());
        }
        if hi > self.limit as f64 {
            return Err(Error::OutOfRange {
                what: "prime window upper end",
                value: hi.ceil().min(u64::MAX as f64) as u64,
                limit: self.limit as u64,
            });
        }
        let start = lo.ceil().max(2.0) as u32;
        let end = hi.floor();
        if end < 2.0 {
            return Ok(Vec::new());
        }
        let end = end as u32;
        Ok((start..=end).filter(|&n| self.spf[n as usize] == n).collect())
    }

    /// True when no prime divides `n` twice. `is_squarefree(1)` is true.
    pub fn is_squarefree(&self, n: u64) -> Result<bool> {
        Ok(self.factorize(n)?.iter().all(|&(_, e)| e == 1))
    }
}

/// Greatest common divisor; `gcd(0, 0)` is rejected.
pub fn gcd(a: u64, b: u64) -> Result<u64> {
    if a == 0 && b == 0 {
        return Err(Error::invalid("gcd(0, 0) is undefined"));
    }
    Ok(gcd_unchecked(a, b))
}

#[inline]
pub(crate) fn gcd_unchecked(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_is_prime(n: u64) -> bool {
        if n < 2 {
            return false;
        }
        let mut d = 2;
        while d * d <= n {
            if n.is_multiple_of(d) {
                return false;
            }
            d += 1;
        }
        true
    }

    #[test]
    fn small_table() {
        let t = FactorTable::new(10).unwrap();
        let spf: Vec<u32> = (2..=10).map(|n| t.spf(n).unwrap()).collect();
        assert_eq!(spf, vec![2, 3, 2, 5, 2, 7, 2, 3, 2]);
        assert_eq!(FactorTable::new(2).unwrap().spf(2).unwrap(), 2);
    }

    #[test]
    fn rejects_bad_limits() {
        assert!(matches!(FactorTable::new(1), Err(Error::InvalidArgument(_))));
        assert!(matches!(
            FactorTable::with_memory_cap(1000, 100),
            Err(Error::ResourceLimit(_))
        ));
    }

    #[test]
    fn large_prime_near_ten_million() {
        assert!(trial_division_is_prime(9_999_991));
        let t = FactorTable::new(10_000_000).unwrap();
        assert_eq!(t.spf(9_999_991).unwrap(), 9_999_991);
    }

    #[test]
    fn factorize_examples() {
        let t = FactorTable::new(100).unwrap();
        assert_eq!(t.factorize(12).unwrap(), vec![(2, 2), (3, 1)]);
        assert_eq!(t.factorize(1).unwrap(), Vec::<(u32, u32)>::new());
        assert_eq!(t.factorize(97).unwrap(), vec![(97, 1)]);
        assert!(matches!(t.factorize(101), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn factorization_round_trip_exhaustive() {
        let t = FactorTable::new(100_000).unwrap();
        for n in 1..=100_000u64 {
            let f = t.factorize(n).unwrap();
            assert!(f.windows(2).all(|w| w[0].0 < w[1].0));
            let prod: u64 = f.iter().map(|&(p, e)| (p as u64).pow(e)).product();
            assert_eq!(prod, n);
            if n >= 2 {
                let s = t.spf(n).unwrap() as u64;
                assert_eq!(n % s, 0);
                assert!(s * s <= n || s == n);
                assert_eq!(t.is_prime(n).unwrap(), s == n);
            }
        }
    }

    #[test]
    fn primes_in_examples() {
        let t = FactorTable::new(100).unwrap();
        assert_eq!(t.primes_in(59.9, 65.9).unwrap(), vec![61]);
        assert_eq!(t.primes_in(24.0, 28.0).unwrap(), Vec::<u32>::new());
        assert_eq!(t.primes_in(2.0, 10.0).unwrap(), vec![2, 3, 5, 7]);
        assert_eq!(t.primes_in(50.0, 10.0).unwrap(), Vec::<u32>::new());
        assert!(matches!(t.primes_in(2.0, 101.0), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn gcd_and_squarefree_examples() {
        let t = FactorTable::new(100).unwrap();
        assert_eq!(gcd(12, 18).unwrap(), 6);
        assert_eq!(gcd(0, 7).unwrap(), 7);
        assert!(gcd(0, 0).is_err());
        assert!(t.is_squarefree(10).unwrap());
        assert!(!t.is_squarefree(12).unwrap());
        assert!(t.is_squarefree(1).unwrap());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn binary_gcd(mut a: u64, mut b: u64) -> u64 {
            if a == 0 {
                return b;
            }
            if b == 0 {
                return a;
            }
            let shift = (a | b).trailing_zeros();
            a >>= a.trailing_zeros();
            loop {
                b >>= b.trailing_zeros();
                if a > b {
                    std::mem::swap(&mut a, &mut b);
                }
                b -= a;
                if b == 0 {
                    return a << shift;
                }
            }
        }

        proptest! {
            #[test]
            fn gcd_matches_binary_gcd(a in 0u64..1_000_000_000, b in 1u64..1_000_000_000) {
                let g = gcd(a, b).unwrap();
                prop_assert_eq!(g, binary_gcd(a, b));
                prop_assert_eq!(a % g, 0);
                prop_assert_eq!(b % g, 0);
            }

            #[test]
            fn primes_in_matches_trial_division(lo in 0.0f64..5000.0, width in 0.0f64..500.0) {
                let t = FactorTable::new(6000).unwrap();
                let hi = lo + width;
                let got = t.primes_in(lo, hi).unwrap();
                let want: Vec<u32> = (0u32..=6000)
                    .filter(|&n| (n as f64) >= lo && (n as f64) <= hi && trial_division_is_prime(n as u64))
                    .collect();
                prop_assert_eq!(got, want);
            }
        }
    }
}
