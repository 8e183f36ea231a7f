//! The resonator `r(n)`: a nonnegative multiplicative function supported on
//! squarefree products of primes in `[lambda^2, exp((log lambda)^2)]`, with
//! `r(p) = lambda / (sqrt(p) log p)` there and `lambda = sqrt(log X log log X)`.
//! The companion `t(p) = r(p) / (1 + r(p)^2)` lives here too.

use crate::error::{Error, Result};
use crate::ntcore::{gcd_unchecked, FactorTable};
use crate::sum::sum_f64;
use serde::{Deserialize, Serialize};

/// Default maximum number of support integers materialized by one enumeration.
pub const DEFAULT_SUPPORT_BUDGET: usize = 10_000_000;

/// Anything whose coefficients form a squarefree-supported multiplicative
/// function, described by its values on the (finitely many) support primes.
pub trait PrimeWeights {
    /// Ascending `(p, r(p))` with `r(p) > 0`.
    fn prime_weights(&self) -> &[(u32, f64)];

    /// `r(p)` or zero off the support.
    fn weight_of(&self, p: u32) -> f64 {
        let w = self.prime_weights();
        match w.binary_search_by_key(&p, |&(q, _)| q) {
            Ok(i) => w[i].1,
            Err(_) => 0.0,
        }
    }

    /// Squarefree support up to `cap`, including 1.
    fn support(&self, cap: f64, budget: usize) -> Result<Support> {
        Support::enumerate(self.prime_weights(), cap, budget)
    }

    /// `prod_{p not in excluded} (1 + r(p)^2)` in log space.
    fn log_euler_product_one_plus_r2(&self, excluded: &[u32]) -> f64 {
        sum_f64(
            self.prime_weights()
                .iter()
                .filter(|(p, _)| !excluded.contains(p))
                .map(|&(_, r)| (r * r).ln_1p()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportEntry {
    pub n: u64,
    pub r: f64,
    pub t: f64,
    /// Index of `n / prime` in the support (entries are ascending, so it precedes this one).
    parent: u32,
    /// Largest prime factor of `n`, 0 for `n = 1`.
    prime: u32,
}

const ROOT: u32 = u32::MAX;

/// The ascending list of support integers `n <= cap` of a squarefree
/// multiplicative weight, each with `r(n)` and `t(n)`.
#[derive(Debug, Clone)]
pub struct Support {
    entries: Vec<SupportEntry>,
    cap: f64,
}

impl Support {
    /// Depth-first products over ascending primes, pruned at `cap`.
    pub fn enumerate(weights: &[(u32, f64)], cap: f64, budget: usize) -> Result<Self> {
        if !(cap >= 1.0) {
            return Err(Error::invalid(format!("support cap must be >= 1, got {cap}")));
        }
        debug_assert!(weights.windows(2).all(|w| w[0].0 < w[1].0));

        // (n, r, t, parent_n, prime)
        let mut raw: Vec<(u64, f64, f64, u64, u32)> = vec![(1, 1.0, 1.0, 0, 0)];
        let mut stack: Vec<(usize, u64, f64, f64)> = vec![(0, 1, 1.0, 1.0)];
        while let Some((start, n, r, t)) = stack.pop() {
            for (j, &(p, rp)) in weights.iter().enumerate().skip(start) {
                let Some(m) = n.checked_mul(p as u64) else { break };
                if m as f64 > cap {
                    break;
                }
                if raw.len() >= budget {
                    return Err(Error::resource(format!(
                        "support enumeration up to {cap:e} exceeded the budget of {budget} integers \
                         (partial count {})",
                        raw.len()
                    )));
                }
                let (rm, tm) = (r * rp, t * rp / (1.0 + rp * rp));
                raw.push((m, rm, tm, n, p));
                stack.push((j + 1, m, rm, tm));
            }
        }
        raw.sort_unstable_by_key(|e| e.0);
        let entries = raw
            .iter()
            .map(|&(n, r, t, parent_n, prime)| {
                let parent = if n == 1 {
                    ROOT
                } else {
                    raw.binary_search_by_key(&parent_n, |e| e.0).expect("parent enumerated") as u32
                };
                SupportEntry { n, r, t, parent, prime }
            })
            .collect();
        Ok(Self { entries, cap })
    }

    pub fn cap(&self) -> f64 {
        self.cap
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[SupportEntry] {
        &self.entries
    }

    pub fn values(&self) -> Vec<u64> {
        self.entries.iter().map(|e| e.n).collect()
    }

    pub fn max_value(&self) -> u64 {
        self.entries.last().map_or(1, |e| e.n)
    }

    pub fn index_of(&self, n: u64) -> Option<usize> {
        self.entries.binary_search_by_key(&n, |e| e.n).ok()
    }

    /// Prime factors of the `idx`-th support integer, descending.
    pub fn prime_factors(&self, idx: usize) -> Vec<u32> {
        let mut out = Vec::new();
        let mut i = idx as u32;
        while i != ROOT {
            let e = &self.entries[i as usize];
            if e.prime != 0 {
                out.push(e.prime);
            }
            i = e.parent;
        }
        out
    }

    /// Evaluates the multiplicative function with prime values `h(p)` on every
    /// support integer, in support order.
    pub fn map_multiplicative<T, F>(&self, one: T, mut h: F) -> Vec<T>
    where
        T: Copy + std::ops::Mul<Output = T>,
        F: FnMut(u32) -> T,
    {
        let mut out: Vec<T> = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let v = if e.parent == ROOT {
                one
            } else {
                out[e.parent as usize] * h(e.prime)
            };
            out.push(v);
        }
        out
    }

    /// Support restricted to `n <= cap`.
    pub fn truncated(&self, cap: f64) -> &[SupportEntry] {
        let k = self.entries.partition_point(|e| e.n as f64 <= cap);
        &self.entries[..k]
    }
}

/// The resonator built from the length scale `X`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Resonator {
    log_x: f64,
    lambda: f64,
    support_lo: f64,
    support_hi: f64,
    primes: Vec<(u32, f64)>,
    alpha_default: f64,
}

impl PrimeWeights for Resonator {
    fn prime_weights(&self) -> &[(u32, f64)] {
        &self.primes
    }
}

impl Resonator {
    /// Builds the resonator for `X = x`.
    pub fn build(x: f64, table: &FactorTable) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::invalid(format!(
                "resonator length X must be finite and positive, got {x}"
            )));
        }
        Self::from_log_x(x.ln(), table)
    }

    /// Builds the resonator from `log X`, which stays exact for astronomically large `X`.
    /// For `0 <= log X <= 1`, where `lambda` is undefined, the result is the
    /// trivial resonator `r = 1_{n=1}` with `lambda = 0` and `alpha_default = 0`.
    pub fn from_log_x(log_x: f64, table: &FactorTable) -> Result<Self> {
        if (0.0..=1.0).contains(&log_x) {
            return Ok(Self {
                log_x,
                lambda: 0.0,
                support_lo: 1.0,
                support_hi: 0.0,
                primes: Vec::new(),
                alpha_default: 0.0,
            });
        }
        let (lambda, lo, hi) = Self::window(log_x)?;
        let primes = if lo > hi {
            Vec::new()
        } else {
            if hi > table.limit() as f64 {
                return Err(Error::resource(format!(
                    "resonator window reaches {hi:.1}; sieve limit {} too small (need at least {})",
                    table.limit(),
                    hi.floor() as u64
                )));
            }
            table
                .primes_in(lo, hi)?
                .into_iter()
                .map(|p| (p, Self::formula_weight(lambda, p)))
                .collect()
        };
        Ok(Self {
            log_x,
            lambda,
            support_lo: lo,
            support_hi: hi,
            primes,
            alpha_default: lambda.ln().powi(-3),
        })
    }

    /// A resonator with the standard `X`, `lambda` and `alpha` bookkeeping
    /// but caller-chosen prime weights. Used for small test instances.
    pub fn with_prime_weights(log_x: f64, mut weights: Vec<(u32, f64)>) -> Result<Self> {
        let (lambda, lo, hi) = Self::window(log_x)?;
        weights.sort_unstable_by_key(|w| w.0);
        if weights.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("duplicate prime in resonator weights"));
        }
        if weights.iter().any(|&(_, r)| !(r > 0.0) || !r.is_finite()) {
            return Err(Error::invalid("resonator weights must be finite and positive"));
        }
        Ok(Self {
            log_x,
            lambda,
            support_lo: lo,
            support_hi: hi,
            primes: weights,
            alpha_default: lambda.ln().powi(-3),
        })
    }

    /// `(lambda, lambda^2, exp((log lambda)^2))` for the given `log X`.
    pub fn window(log_x: f64) -> Result<(f64, f64, f64)> {
        if !(log_x > 1.0) || !log_x.is_finite() {
            return Err(Error::invalid(format!(
                "need log log X > 0 (X > e), got log X = {log_x}"
            )));
        }
        let lambda = (log_x * log_x.ln()).sqrt();
        let ll = lambda.ln();
        Ok((lambda, lambda * lambda, (ll * ll).exp()))
    }

    pub fn formula_weight(lambda: f64, p: u32) -> f64 {
        let p = p as f64;
        lambda / (p.sqrt() * p.ln())
    }

    pub fn log_x(&self) -> f64 {
        self.log_x
    }

    /// `X` itself; infinite when `log X > 709`.
    pub fn x(&self) -> f64 {
        self.log_x.exp()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn support_window(&self) -> (f64, f64) {
        (self.support_lo, self.support_hi)
    }

    pub fn alpha_default(&self) -> f64 {
        self.alpha_default
    }

    pub fn primes(&self) -> Vec<u32> {
        self.primes.iter().map(|&(p, _)| p).collect()
    }

    /// No support primes: `r` vanishes except `r(1) = 1`.
    pub fn is_degenerate(&self) -> bool {
        self.primes.is_empty()
    }

    fn multiplicative_value(&self, n: u64, table: &FactorTable, h: impl Fn(f64) -> f64) -> Result<f64> {
        if n == 0 {
            return Err(Error::invalid("r is defined on positive integers"));
        }
        let mut v = 1.0;
        for (p, e) in table.factorize(n)? {
            let rp = self.weight_of(p);
            if e > 1 || rp == 0.0 {
                return Ok(0.0);
            }
            v *= h(rp);
        }
        Ok(v)
    }

    pub fn r_value(&self, n: u64, table: &FactorTable) -> Result<f64> {
        self.multiplicative_value(n, table, |r| r)
    }

    pub fn t_value(&self, n: u64, table: &FactorTable) -> Result<f64> {
        self.multiplicative_value(n, table, |r| r / (1.0 + r * r))
    }

    pub fn enumerate_support(&self, cap: f64) -> Result<Support> {
        self.support(cap, DEFAULT_SUPPORT_BUDGET)
    }

    /// `sum_{n <= cap} r(n)^2`.
    pub fn sum_r_squared(&self, cap: f64) -> Result<f64> {
        Ok(sum_r_squared(&self.enumerate_support(cap)?, cap))
    }

    /// `sum_{n <= cap} t(n) / sqrt(n)`.
    pub fn sum_t_over_sqrt(&self, cap: f64) -> Result<f64> {
        Ok(sum_t_over_sqrt(&self.enumerate_support(cap)?, cap))
    }

    /// `prod_{p not in excluded} (1 + r(p)^2)`.
    pub fn euler_product_one_plus_r2(&self, excluded: &[u32]) -> f64 {
        self.log_euler_product_one_plus_r2(excluded).exp()
    }

    pub fn summary(&self, sum_cap: Option<f64>) -> ResonatorSummary {
        let sum_r_squared = sum_cap.and_then(|c| self.sum_r_squared(c).ok());
        let log_euler = self.log_euler_product_one_plus_r2(&[]);
        ResonatorSummary {
            log_x: self.log_x,
            lambda: self.lambda,
            support_lo: self.support_lo,
            support_hi: self.support_hi,
            prime_count: self.primes.len(),
            degenerate: self.is_degenerate(),
            alpha_default: self.alpha_default,
            sum_r_squared,
            log_euler_product: log_euler,
            euler_product: log_euler.exp(),
        }
    }
}

pub fn sum_r_squared(support: &Support, cap: f64) -> f64 {
    sum_f64(support.truncated(cap).iter().map(|e| e.r * e.r))
}

pub fn sum_t_over_sqrt(support: &Support, cap: f64) -> f64 {
    sum_f64(support.truncated(cap).iter().map(|e| e.t / (e.n as f64).sqrt()))
}

pub fn sum_r(support: &Support, cap: f64) -> f64 {
    sum_f64(support.truncated(cap).iter().map(|e| e.r))
}

/// Whether two support integers are coprime.
#[inline]
pub fn coprime(a: u64, b: u64) -> bool {
    gcd_unchecked(a, b) == 1
}

/// Serializable digest of a resonator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorSummary {
    pub log_x: f64,
    pub lambda: f64,
    pub support_lo: f64,
    pub support_hi: f64,
    pub prime_count: usize,
    pub degenerate: bool,
    pub alpha_default: f64,
    pub sum_r_squared: Option<f64>,
    pub log_euler_product: f64,
    pub euler_product: f64,
}
