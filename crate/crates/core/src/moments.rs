//! The resonance moments
//!
//! ```text
//! M1 = int |R(t)|^2 Phi(t/T) dt,   M2 = int |R(t)|^2 |D_N(t)|^2 Phi(t/T) dt,
//! ```
//!
//! with `R(t) = sum f(n) r(n) n^{it}`. Both are available by quadrature, as
//! exact Fourier double sums (tiny instances), and as a diagonal main term
//! with a rigorous off-diagonal bracket. The diagonal `an = bm` of `M2` is
//! free of `f`, which is what makes the lower bound `sqrt(M2 / M1)` uniform.

use crate::bump::{Bump, DecayEnvelope, TRANSFORM_CUTOFF};
use crate::dirichlet::{f_on_support, ExpSum};
use crate::error::{Error, Result};
use crate::multfn::UnimodularCmf;
use crate::ntcore::{gcd_unchecked, FactorTable};
use crate::quad::Integrator;
use crate::resonator::{PrimeWeights, Resonator, Support, SupportEntry, DEFAULT_SUPPORT_BUDGET};
use crate::sum::{sum_f64, CompensatedSum, ComplexSum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Default cap on term evaluations before a computation path is refused.
pub const DEFAULT_BUDGET_TERMS: u64 = 100_000_000;

/// Budget units charged per in-range `phi_hat` term of an exact double sum
/// (one transform costs about as much as a thousand plain terms).
pub const TRANSFORM_COST: u64 = 1_000;

pub const DEFAULT_QUAD_REL_TOL: f64 = 1e-8;

/// `log(k / l)` without cancellation for nearby integers.
#[inline]
pub fn log_ratio(k: u64, l: u64) -> f64 {
    let diff = k as i128 - l as i128;
    (diff as f64 / l as f64).ln_1p()
}

fn check_budget(what: &str, cost: u64, budget: u64, hint: &str) -> Result<()> {
    if cost > budget {
        return Err(Error::resource(format!(
            "{what} needs ~{cost} term evaluations, over the budget of {budget}; {hint}"
        )));
    }
    Ok(())
}

fn check_t(t_len: f64) -> Result<()> {
    if !(t_len > 0.0) || !t_len.is_finite() {
        return Err(Error::invalid(format!("T must be finite and positive, got {t_len}")));
    }
    Ok(())
}

// ---------------------------------------------------------------- quadrature

fn frequency_spread(p: &ExpSum) -> f64 {
    let lo = p.freqs().iter().copied().fold(f64::INFINITY, f64::min);
    let hi = p.freqs().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi >= lo {
        hi - lo
    } else {
        0.0
    }
}

/// Adaptive quadrature of `Phi(t/T) prod_k |S_k(t)|^2` over `[T/2, T]`.
fn weighted_quadrature(polys: &[&ExpSum], t_len: f64, rel_tol: f64, budget: u64) -> Result<f64> {
    check_t(t_len)?;
    // |S|^2 oscillates with frequencies up to twice the spread of its log-frequencies
    let spread: f64 = polys.iter().map(|p| 2.0 * frequency_spread(p)).sum();
    let panels = (0.5 * t_len * spread / std::f64::consts::PI).ceil() as usize + 16;
    let terms: usize = polys.iter().map(|p| p.len()).sum();
    let cost = (panels as u64).saturating_mul(15 * 4).saturating_mul(terms as u64);
    check_budget("quadrature", cost, budget, "use the exact or bracketed moments instead")?;
    let bump = |y: f64| crate::bump::phi(y);
    let est = Integrator::relative(rel_tol)
        .with_max_panels(4 * panels + 100_000)
        .integrate(
            |t| {
                let w = bump(t / t_len);
                if w == 0.0 {
                    return 0.0;
                }
                polys.iter().map(|p| p.norm_sqr(t)).product::<f64>() * w
            },
            0.5 * t_len,
            t_len,
            panels,
        )?;
    Ok(est.value)
}

/// `M1` by adaptive quadrature.
pub fn m1_quadrature(support: &Support, f: &UnimodularCmf, t_len: f64, rel_tol: f64, budget: u64) -> Result<f64> {
    let r = ExpSum::resonator(support, f)?;
    weighted_quadrature(&[&r], t_len, rel_tol, budget)
}

/// `M2` by adaptive quadrature.
#[allow(clippy::too_many_arguments)]
pub fn m2_quadrature(
    support: &Support,
    f: &UnimodularCmf,
    n: u64,
    t_len: f64,
    rel_tol: f64,
    budget: u64,
    table: &FactorTable,
) -> Result<f64> {
    let r = ExpSum::resonator(support, f)?;
    let d = ExpSum::dirichlet(f, n, table)?;
    weighted_quadrature(&[&r, &d], t_len, rel_tol, budget)
}

// ------------------------------------------------------------- exact sums

/// `T sum_{k, l} A_k conj(A_l) phi_hat(-T log(k / l))` for ascending distinct
/// `k`. Only pairs with `T |log(k/l)| <= TRANSFORM_CUTOFF` contribute.
/// Returns the real part after checking the imaginary residue.
fn fourier_double_sum(
    coeffs: &[(u64, Complex64)],
    t_len: f64,
    bump: &Bump,
    budget: u64,
    residue_tol: f64,
) -> Result<f64> {
    check_t(t_len)?;
    let logs: Vec<f64> = coeffs.iter().map(|&(k, _)| (k as f64).ln()).collect();
    let reach = TRANSFORM_CUTOFF / t_len * (1.0 + 1e-9) + 1e-12;
    // row i pairs with columns lo[i]..hi[i]
    let windows: Vec<(usize, usize)> = logs
        .iter()
        .map(|&x| {
            (
                logs.partition_point(|&y| y < x - reach),
                logs.partition_point(|&y| y <= x + reach),
            )
        })
        .collect();
    let pairs: u64 = windows.iter().map(|&(a, b)| (b - a) as u64).sum();
    check_budget(
        "exact Fourier sum",
        pairs.saturating_mul(TRANSFORM_COST),
        budget,
        "use the diagonal main term with the off-diagonal bracket instead",
    )?;

    let rows: Vec<Result<(ComplexSum, f64)>> = (0..coeffs.len())
        .into_par_iter()
        .map(|i| {
            let (k, ak) = coeffs[i];
            let mut acc = ComplexSum::new();
            let mut mag = 0.0;
            for &(l, al) in &coeffs[windows[i].0..windows[i].1] {
                let xi = t_len * log_ratio(k, l);
                // phi_hat(-xi) = exp(3 i xi / 4) G(xi)
                let g = bump.centered_transform(xi)?;
                if g == 0.0 {
                    continue;
                }
                let term = ak * al.conj() * Complex64::cis(0.75 * xi) * g;
                mag += term.norm();
                acc.add(term);
            }
            Ok((acc, mag))
        })
        .collect();
    let mut total = ComplexSum::new();
    let mut mag = CompensatedSum::new();
    for row in rows {
        let (acc, m) = row?;
        total.add(acc.value());
        mag.add(m);
    }
    let z = total.value();
    if z.im.abs() > residue_tol * mag.value().max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalFailure {
            message: format!("Fourier double sum has imaginary residue {:e}", z.im),
            achieved_error: z.im.abs(),
        });
    }
    Ok(t_len * z.re)
}

/// `M1 = T sum_{a, b} r_f(a) conj(r_f(b)) phi_hat(-T log(a / b))`.
pub fn m1_exact(support: &Support, f: &UnimodularCmf, t_len: f64, bump: &Bump, budget: u64) -> Result<f64> {
    let fv = f_on_support(support, f)?;
    let coeffs: Vec<(u64, Complex64)> = support.entries().iter().zip(fv).map(|(e, v)| (e.n, v * e.r)).collect();
    fourier_double_sum(&coeffs, t_len, bump, budget, 1e-12)
}

/// Coefficients of `R(t) D_N(t) sqrt(N)` grouped by frequency `k = a n`.
fn product_coefficients(
    support: &Support,
    f: &UnimodularCmf,
    n: u64,
    table: &FactorTable,
) -> Result<Vec<(u64, Complex64)>> {
    let fs = f_on_support(support, f)?;
    let fd = f.values_up_to(n, table)?;
    let mut grouped: BTreeMap<u64, ComplexSum> = BTreeMap::new();
    for (e, fa) in support.entries().iter().zip(&fs) {
        for (m, fm) in (1..=n).zip(&fd) {
            let k =
                e.n.checked_mul(m)
                    .ok_or_else(|| Error::resource("product a n overflows u64"))?;
            grouped.entry(k).or_default().add(fa * fm * e.r);
        }
    }
    Ok(grouped.into_iter().map(|(k, s)| (k, s.value())).collect())
}

/// `M2 = (T/N) sum r_f(a) conj(r_f(b)) f(n) conj(f(m)) phi_hat(-T log(an / bm))`,
/// summed over distinct products `an`, `bm`.
pub fn m2_exact(
    support: &Support,
    f: &UnimodularCmf,
    n: u64,
    t_len: f64,
    bump: &Bump,
    budget: u64,
    table: &FactorTable,
) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    // conservative: charges every one of the |S| N products for its own diagonal transform
    check_budget(
        "exact M2",
        (support.len() as u64).saturating_mul(n).saturating_mul(TRANSFORM_COST),
        budget,
        "use the diagonal main term with the off-diagonal bracket instead",
    )?;
    let coeffs = product_coefficients(support, f, n, table)?;
    Ok(fourier_double_sum(&coeffs, t_len, bump, budget, 1e-10)? / n as f64)
}

/// `T phi_hat(0) sum_{n <= X} r(n)^2`; free of `f`.
pub fn m1_main(support: &Support, t_len: f64, bump: &Bump) -> Result<f64> {
    Ok(t_len * bump.phi_hat_zero()? * sum_f64(support.entries().iter().map(|e| e.r * e.r)))
}

// --------------------------------------------------------------- diagonal

fn entries_up_to(support: &Support, z: f64) -> &[SupportEntry] {
    support.truncated(z)
}

fn pair_budget(rows: usize, budget: u64, what: &str) -> Result<()> {
    check_budget(what, (rows as u64).saturating_mul(rows as u64), budget, "reduce N or X")
}

/// Exact `sum_{m, n <= N; a, b <= X; ma = nb} r(a) r(b)` with `X` the support cap.
///
/// With `g = (a, b)`, `a = a'g`, `b = b'g`, the solutions are `m = h b'`,
/// `n = h a'` for `h <= N / max(a', b')`. Every `g` is kept and `r(a'g) r(b'g)`
/// is looked up directly; it vanishes unless `(g, a'b') = 1`.
pub fn diagonal_sum(support: &Support, n: u64, budget: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    let x = support.cap();
    let small = entries_up_to(support, x.min(n as f64));
    pair_budget(small.len(), budget, "diagonal sum")?;
    let all = support.entries();
    let lookup = |v: u64| support.index_of(v).map(|i| all[i].r);

    let rows: Vec<f64> = small
        .par_iter()
        .map(|ea| {
            let mut row = CompensatedSum::new();
            for eb in small {
                let (a1, b1) = (ea.n, eb.n);
                if gcd_unchecked(a1, b1) != 1 {
                    continue;
                }
                let mx = a1.max(b1);
                let h = (n / mx) as f64;
                let mut inner = CompensatedSum::new();
                for eg in support.truncated(x / mx as f64) {
                    let g = eg.n;
                    let ra = a1.checked_mul(g).and_then(lookup);
                    let rb = b1.checked_mul(g).and_then(lookup);
                    let coprime = gcd_unchecked(g, a1) == 1 && gcd_unchecked(g, b1) == 1;
                    match (ra, rb) {
                        (Some(ra), Some(rb)) => {
                            debug_assert!(coprime);
                            inner.add(ra * rb);
                        }
                        _ => debug_assert!(!coprime, "missing support entry for coprime g"),
                    }
                }
                row.add(h * inner.value());
            }
            row.value()
        })
        .collect();
    Ok(sum_f64(rows))
}

/// The restricted sum
/// `sum_{(a',b')=1; a',b' <= min(X,N)} r(a')r(b') floor(N / max(a',b')) sum_{(g,a'b')=1, g <= X/max} r(g)^2`.
/// It never exceeds [`diagonal_sum`] and coincides with it for squarefree `r`.
pub fn restricted_diagonal_lower_bound(support: &Support, n: u64, budget: u64) -> Result<f64> {
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    let x = support.cap();
    let small = entries_up_to(support, x.min(n as f64));
    pair_budget(small.len(), budget, "diagonal lower bound")?;
    let rows: Vec<f64> = small
        .par_iter()
        .map(|ea| {
            let mut row = CompensatedSum::new();
            for eb in small {
                if gcd_unchecked(ea.n, eb.n) != 1 {
                    continue;
                }
                let mx = ea.n.max(eb.n);
                let inner = sum_f64(
                    support
                        .truncated(x / mx as f64)
                        .iter()
                        .filter(|eg| gcd_unchecked(eg.n, ea.n) == 1 && gcd_unchecked(eg.n, eb.n) == 1)
                        .map(|eg| eg.r * eg.r),
                );
                row.add(ea.r * eb.r * (n / mx) as f64 * inner);
            }
            row.value()
        })
        .collect();
    Ok(sum_f64(rows))
}

// ----------------------------------------------------------- off-diagonal

/// Bounds on the off-diagonal parts of `M1` and `M2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffDiagonal {
    /// `|M2 - (T/N) phi_hat(0) diag|` is at most this.
    pub m2: f64,
    /// `|M1 - T phi_hat(0) sum r^2|` is at most this.
    pub m1: f64,
    /// The coarse uniform bound `(T/N) N^2 (sum r)^2 C_nu (T/(N X))^{-nu}`.
    pub m2_uniform: Option<f64>,
}

/// Off-diagonal bounds from the decay envelope `B >= |phi_hat|`.
///
/// For a pair `(a, b)` with `g = (a, b)`, `M' = max(a, b) / g`, each
/// off-diagonal `(m, n)` has `k' = |a n - b m| / g >= 1`,
/// `|log(an / bm)| >= k' / (N M')`, and at most `2 ceil(N / M')` pairs share a
/// given `k'`. Hence the `(a, b)` block is at most
/// `2 ceil(N/M') sum_{k'=1}^{N M'} B(T k' / (N M'))`, and never more than the
/// number of off-diagonal pairs times `phi_hat(0)`. In `M1`, `|log(a/b)| >= 1/M'`.
pub fn offdiag_bounds(support: &Support, n: u64, t_len: f64, env: &DecayEnvelope, budget: u64) -> Result<OffDiagonal> {
    check_t(t_len)?;
    if n == 0 {
        return Err(Error::invalid("N must be positive"));
    }
    let entries = support.entries();
    pair_budget(entries.len(), budget, "off-diagonal bound")?;
    let nf = n as f64;
    let rows: Vec<(f64, f64)> = entries
        .par_iter()
        .map(|ea| {
            let mut m2 = CompensatedSum::new();
            let mut m1 = CompensatedSum::new();
            for eb in entries {
                let g = gcd_unchecked(ea.n, eb.n);
                let mp = (ea.n.max(eb.n) / g) as f64;
                let per_k = 2.0 * (nf / mp).ceil();
                let lattice = env.lattice_sum(t_len / (nf * mp), nf * mp);
                let off_pairs = nf * nf - (n / (ea.n.max(eb.n) / g)) as f64;
                let block = (per_k * lattice).min(off_pairs * env.phi_hat_zero);
                m2.add(ea.r * eb.r * block);
                if ea.n != eb.n {
                    m1.add(ea.r * eb.r * env.bound(t_len / mp));
                }
            }
            (m2.value(), m1.value())
        })
        .collect();
    let m2 = t_len / nf * sum_f64(rows.iter().map(|r| r.0));
    let m1 = t_len * sum_f64(rows.iter().map(|r| r.1));

    let sum_r = sum_f64(entries.iter().map(|e| e.r));
    let nu = env.nu as f64;
    let log_uniform =
        t_len.ln() + nf.ln() + 2.0 * sum_r.ln() + env.c_nu.ln() - nu * (t_len.ln() - nf.ln() - support.cap().ln());
    Ok(OffDiagonal {
        m2,
        m1,
        m2_uniform: finite(log_uniform.exp()),
    })
}

/// Smallest `|log(P/Q)|` over distinct products `P = m a`, `Q = n b` with
/// `m, n <= N` and `a, b <= X` (all integers); `None` when only one product exists.
pub fn min_offdiag_gap(n: u64, x: u64) -> Result<Option<f64>> {
    if n == 0 || x == 0 {
        return Err(Error::invalid("N and X must be positive"));
    }
    check_budget("gap enumeration", n.saturating_mul(x), 100_000_000, "use smaller N, X")?;
    let mut prods: Vec<u64> = (1..=n).flat_map(|m| (1..=x).map(move |a| m * a)).collect();
    prods.sort_unstable();
    prods.dedup();
    Ok(prods
        .windows(2)
        .map(|w| log_ratio(w[1], w[0]))
        .min_by(|a, b| a.total_cmp(b)))
}

// ------------------------------------------------------- Hough and Rankin

/// `prod_{p | n} (1 + r(p)^2)` on every support entry.
fn euler_factors(res: &Resonator, support: &Support) -> Vec<f64> {
    support.map_multiplicative(1.0, |p| {
        let r = res.weight_of(p);
        1.0 + r * r
    })
}

/// `sum_{(a,b)=1; a, b <= z} t(a) t(b) a b / max(a, b)^3` over support entries.
fn coprime_t_sum(entries: &[SupportEntry]) -> f64 {
    let rows: Vec<f64> = entries
        .par_iter()
        .map(|ea| {
            sum_f64(entries.iter().filter(|eb| gcd_unchecked(ea.n, eb.n) == 1).map(|eb| {
                let (lo, hi) = (ea.n.min(eb.n) as f64, ea.n.max(eb.n) as f64);
                ea.t * eb.t * (lo / hi) / hi
            }))
        })
        .collect();
    sum_f64(rows)
}

/// Main term `sum_{(a',b')=1; a',b' <= min(X,N)} r(a')r(b') a'b'/max^3 / prod_{p|a'b'}(1 + r(p)^2)`,
/// evaluated through `t(a') t(b')` after checking that identity on every pair.
pub fn hough_main_term(res: &Resonator, support: &Support, n: u64, budget: u64) -> Result<f64> {
    let z = support.cap().min(n as f64);
    let small = entries_up_to(support, z);
    pair_budget(small.len(), budget, "main term")?;
    let euler = euler_factors(res, support);
    for (i, ea) in small.iter().enumerate() {
        for (j, eb) in small.iter().enumerate() {
            if gcd_unchecked(ea.n, eb.n) != 1 {
                continue;
            }
            let lhs = ea.r * eb.r / (euler[i] * euler[j]);
            let rhs = ea.t * eb.t;
            if (lhs - rhs).abs() > 1e-12 * rhs.abs().max(1e-300) {
                return Err(Error::NumericalFailure {
                    message: format!("r(a)r(b)/prod(1+r(p)^2) != t(a)t(b) at ({}, {})", ea.n, eb.n),
                    achieved_error: (lhs - rhs).abs(),
                });
            }
        }
    }
    Ok(coprime_t_sum(small))
}

/// `E = prod(1+r(p)^2)^{-1} X^{-alpha} sum_{(a',b')=1; <= min(X,N)} r(a')r(b')(a'b')^{alpha-1/2}
/// sum_{(g,a'b')=1} r(g)^2 g^alpha`, with the `g`-sum over the full support taken as an Euler product.
pub fn rankin_error_term(res: &Resonator, support: &Support, n: u64, alpha: f64, budget: u64) -> Result<f64> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::invalid(format!(
            "alpha must be finite and nonnegative, got {alpha}"
        )));
    }
    let z = support.cap().min(n as f64);
    let small = entries_up_to(support, z);
    pair_budget(small.len(), budget, "Rankin error term")?;
    let weights = res.prime_weights();
    let local = |p: u32, r: f64| (r * r * (p as f64).powf(alpha)).ln_1p();
    let log_all_alpha = sum_f64(weights.iter().map(|&(p, r)| local(p, r)));
    let log_all = res.log_euler_product_one_plus_r2(&[]);
    // log prod_{p | a} (1 + r(p)^2 p^alpha) per entry
    let log_local: Vec<f64> = support
        .map_multiplicative(1.0, |p| local(p, res.weight_of(p)).exp())
        .into_iter()
        .map(f64::ln)
        .collect();
    let base = log_all_alpha - log_all - alpha * res.log_x();
    let rows: Vec<f64> = small
        .par_iter()
        .enumerate()
        .map(|(i, ea)| {
            sum_f64(
                small
                    .iter()
                    .enumerate()
                    .filter(|(_, eb)| gcd_unchecked(ea.n, eb.n) == 1)
                    .map(|(j, eb)| {
                        let ln_ab = (ea.n as f64).ln() + (eb.n as f64).ln();
                        ea.r * eb.r * ((alpha - 0.5) * ln_ab + base - log_local[i] - log_local[j]).exp()
                    }),
            )
        })
        .collect();
    Ok(sum_f64(rows))
}

/// Exact Rankin tail versus its bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankinCheck {
    /// `sum_{g > cap, (g, ab) = 1} r(g)^2` over the full support.
    pub exact_tail: f64,
    /// `cap^{-alpha} prod_{p not | ab} (1 + r(p)^2 p^alpha)`.
    pub rankin_bound: f64,
    pub holds: bool,
}

/// Evaluates both sides of Rankin's trick for the `g`-sum coprime to `ab`.
pub fn rankin_tail_identity_check(res: &Resonator, ab: u64, cap: f64, alpha: f64, budget: u64) -> Result<RankinCheck> {
    if ab == 0 || !(cap > 0.0) || !(alpha > 0.0) || !alpha.is_finite() {
        return Err(Error::invalid("need ab >= 1, cap > 0, alpha > 0"));
    }
    let primes: Vec<(u32, f64)> = res
        .prime_weights()
        .iter()
        .copied()
        .filter(|&(p, _)| !ab.is_multiple_of(p as u64))
        .collect();
    // suffix[i] = prod_{j >= i} (1 + r_j^2)
    let mut suffix = vec![1.0; primes.len() + 1];
    for i in (0..primes.len()).rev() {
        suffix[i] = suffix[i + 1] * (1.0 + primes[i].1 * primes[i].1);
    }
    let mut tail = CompensatedSum::new();
    if cap < 1.0 {
        tail.add(suffix[0]);
    } else {
        // depth-first over products <= cap; once a product passes cap, every
        // extension by larger primes does too and is summed in closed form
        let mut stack: Vec<(usize, f64, f64)> = vec![(0, 1.0, 1.0)];
        let mut visited: u64 = 0;
        while let Some((start, prod, w)) = stack.pop() {
            visited += 1;
            if visited > budget {
                return Err(Error::resource(format!(
                    "Rankin tail enumeration exceeded {budget} nodes; lower cap"
                )));
            }
            for (j, &(p, r)) in primes.iter().enumerate().skip(start) {
                let m = prod * p as f64;
                let wm = w * r * r;
                if m > cap {
                    tail.add(wm * suffix[j + 1]);
                } else {
                    stack.push((j + 1, m, wm));
                }
            }
        }
    }
    let log_bound = -alpha * cap.ln() + sum_f64(primes.iter().map(|&(p, r)| (r * r * (p as f64).powf(alpha)).ln_1p()));
    let exact_tail = tail.value();
    let rankin_bound = log_bound.exp();
    Ok(RankinCheck {
        exact_tail,
        rankin_bound,
        holds: exact_tail <= rankin_bound,
    })
}

/// Both sides of the coprime-pair inequality at `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoprimeSumCheck {
    pub z: f64,
    /// `sum_{(m1,m2)=1; m1,m2 <= z} t(m1) t(m2) m1 m2 / max(m1,m2)^3`.
    pub lhs: f64,
    /// `(1 / log z) (sum_{m <= z} t(m) / sqrt(m))^2`.
    pub rhs: f64,
    /// `log(lhs) log(lambda) / lambda`, when `lambda > 1`.
    pub diagnostic: Option<f64>,
}

pub fn coprime_sum_check(res: &Resonator, z: f64, budget: u64) -> Result<CoprimeSumCheck> {
    if !(z > 1.0) || !z.is_finite() {
        return Err(Error::invalid(format!("z must be finite and > 1, got {z}")));
    }
    let support = res.support(z, budget.min(DEFAULT_SUPPORT_BUDGET as u64) as usize)?;
    pair_budget(support.len(), budget, "lemma check")?;
    let lhs = coprime_t_sum(support.entries());
    let s = sum_f64(support.entries().iter().map(|e| e.t / (e.n as f64).sqrt()));
    let rhs = s * s / z.ln();
    let lambda = res.lambda();
    let diagnostic = (lambda > 1.0).then(|| lhs.ln() * lambda.ln() / lambda);
    Ok(CoprimeSumCheck {
        z,
        lhs,
        rhs,
        diagnostic,
    })
}

// ----------------------------------------------------------------- report

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Parameters of one certificate run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentConfig {
    pub n: u64,
    pub log_t: f64,
    pub delta: f64,
    pub gamma: f64,
    pub nu: u32,
    /// Rankin exponent; the resonator default `(log lambda)^{-3}` when absent.
    pub alpha: Option<f64>,
    pub budget_terms: u64,
    pub quad_rel_tol: f64,
}

impl MomentConfig {
    pub fn new(n: u64, log_t: f64, delta: f64) -> Self {
        Self {
            n,
            log_t,
            delta,
            gamma: 0.5,
            nu: 3,
            alpha: None,
            budget_terms: DEFAULT_BUDGET_TERMS,
            quad_rel_tol: DEFAULT_QUAD_REL_TOL,
        }
    }

    /// `log X = (1 - 2 delta / 3) log T`.
    pub fn log_x(&self) -> f64 {
        (1.0 - 2.0 * self.delta / 3.0) * self.log_t
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("N must be positive"));
        }
        if !(self.log_t >= 0.0) || !self.log_t.is_finite() {
            return Err(Error::invalid(format!(
                "log T must be finite and >= 0, got {}",
                self.log_t
            )));
        }
        if self.log_t > 700.0 {
            return Err(Error::invalid(format!(
                "T = exp({}) overflows double precision",
                self.log_t
            )));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid(format!("delta must lie in (0, 1), got {}", self.delta)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid(format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if self.nu < 2 {
            return Err(Error::invalid(format!("nu must be at least 2, got {}", self.nu)));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::invalid(format!("alpha must be positive, got {a}")));
            }
        }
        if !(self.quad_rel_tol > 0.0) {
            return Err(Error::invalid("quadrature tolerance must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feasibility {
    /// `T >= N^{2/delta}`.
    pub t_ge_n_pow_2_over_delta: bool,
    /// `C <= (log N)^gamma` with `T = N^C`.
    pub c_le_log_n_pow_gamma: bool,
    /// `log N > 3 lambda log log lambda`.
    pub log_n_gt_3_lambda_loglog_lambda: bool,
    /// `log X > 3 lambda log log lambda`.
    pub log_x_gt_3_lambda_loglog_lambda: bool,
}

impl Feasibility {
    pub fn all(&self) -> bool {
        self.t_ge_n_pow_2_over_delta
            && self.c_le_log_n_pow_gamma
            && self.log_n_gt_3_lambda_loglog_lambda
            && self.log_x_gt_3_lambda_loglog_lambda
    }
}

/// Everything computed by one certificate run. Optional fields are absent
/// when undefined (e.g. `C` for `N = 1`) or when their computation exceeded
/// the budget; every skipped computation is listed in `skipped`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub n: u64,
    pub t: f64,
    pub log_t: f64,
    /// `C = log T / log N`; absent for `N = 1`.
    pub c: Option<f64>,
    pub delta: f64,
    pub gamma: f64,
    pub x: Option<f64>,
    pub log_x: f64,
    pub lambda: f64,
    pub support_lo: f64,
    pub support_hi: f64,
    pub support_primes: usize,
    pub support_size: Option<usize>,
    pub m1_quad: Option<f64>,
    pub m1_exact: Option<f64>,
    pub m1_main: Option<f64>,
    pub m2_quad: Option<f64>,
    pub m2_exact: Option<f64>,
    pub diag_sum: Option<f64>,
    pub restricted_diag_lower_bound: Option<f64>,
    pub m2_diag_main: Option<f64>,
    /// Bound on `|M2 - m2_diag_main|`; relies on the empirical decay constant.
    pub offdiag_bound: Option<f64>,
    pub offdiag_bound_uniform: Option<f64>,
    /// Bound on `|M1 - m1_main|`.
    pub m1_offdiag_bound: Option<f64>,
    pub nu: u32,
    pub c_nu: f64,
    pub decay_margin: f64,
    pub bound_basis: String,
    pub ratio: Option<f64>,
    pub ratio_lower: Option<f64>,
    pub ratio_upper: Option<f64>,
    pub exact_ratio: Option<f64>,
    pub lower_bound: Option<f64>,
    pub hough_main: Option<f64>,
    pub rankin_error: Option<f64>,
    pub alpha: f64,
    pub alpha_admissible: bool,
    pub coprime_z: f64,
    pub coprime_lhs: Option<f64>,
    pub coprime_rhs: Option<f64>,
    pub coprime_diagnostic: Option<f64>,
    pub theorem_bound: Option<f64>,
    pub corollary_bound: Option<f64>,
    /// `log(lower_bound) / sqrt((1 - delta) log T / log log T)`.
    pub lower_bound_diagnostic: Option<f64>,
    pub feasibility: Feasibility,
    pub skipped: Vec<String>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl MomentReport {
    /// Fixed CSV column order.
    pub fn csv_columns(&self) -> Vec<(&'static str, String)> {
        let f = &self.feasibility;
        vec![
            ("n", self.n.to_string()),
            ("t", self.t.to_string()),
            ("log_t", self.log_t.to_string()),
            ("c", opt(self.c)),
            ("delta", self.delta.to_string()),
            ("gamma", self.gamma.to_string()),
            ("x", opt(self.x)),
            ("log_x", self.log_x.to_string()),
            ("lambda", self.lambda.to_string()),
            ("support_lo", self.support_lo.to_string()),
            ("support_hi", self.support_hi.to_string()),
            ("support_primes", self.support_primes.to_string()),
            ("support_size", opt(self.support_size)),
            ("m1_quad", opt(self.m1_quad)),
            ("m1_exact", opt(self.m1_exact)),
            ("m1_main", opt(self.m1_main)),
            ("m2_quad", opt(self.m2_quad)),
            ("m2_exact", opt(self.m2_exact)),
            ("diag_sum", opt(self.diag_sum)),
            ("restricted_diag_lower_bound", opt(self.restricted_diag_lower_bound)),
            ("m2_diag_main", opt(self.m2_diag_main)),
            ("offdiag_bound", opt(self.offdiag_bound)),
            ("offdiag_bound_uniform", opt(self.offdiag_bound_uniform)),
            ("m1_offdiag_bound", opt(self.m1_offdiag_bound)),
            ("nu", self.nu.to_string()),
            ("c_nu", self.c_nu.to_string()),
            ("ratio", opt(self.ratio)),
            ("ratio_lower", opt(self.ratio_lower)),
            ("ratio_upper", opt(self.ratio_upper)),
            ("exact_ratio", opt(self.exact_ratio)),
            ("lower_bound", opt(self.lower_bound)),
            ("hough_main", opt(self.hough_main)),
            ("rankin_error", opt(self.rankin_error)),
            ("alpha", self.alpha.to_string()),
            ("coprime_z", self.coprime_z.to_string()),
            ("coprime_lhs", opt(self.coprime_lhs)),
            ("coprime_rhs", opt(self.coprime_rhs)),
            ("coprime_diagnostic", opt(self.coprime_diagnostic)),
            ("theorem_bound", opt(self.theorem_bound)),
            ("corollary_bound", opt(self.corollary_bound)),
            ("lower_bound_diagnostic", opt(self.lower_bound_diagnostic)),
            ("feasible_t", f.t_ge_n_pow_2_over_delta.to_string()),
            ("feasible_c", f.c_le_log_n_pow_gamma.to_string()),
            ("feasible_log_n", f.log_n_gt_3_lambda_loglog_lambda.to_string()),
            ("feasible_log_x", f.log_x_gt_3_lambda_loglog_lambda.to_string()),
            ("skipped", self.skipped.len().to_string()),
        ]
    }

    pub fn csv_header(&self) -> String {
        self.csv_columns().iter().map(|c| c.0).collect::<Vec<_>>().join(",")
    }

    pub fn csv_row(&self) -> String {
        self.csv_columns()
            .into_iter()
            .map(|c| c.1)
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `exp(sqrt((1 - delta) log T / log log T))`.
pub fn theorem_bound(log_t: f64, delta: f64) -> Option<f64> {
    let ll = log_t.ln();
    (log_t > 0.0 && ll > 0.0).then(|| ((1.0 - delta) * log_t / ll).sqrt().exp())
}

/// `exp(sqrt(((1 - delta) / (1 + gamma)) C log N / log log N))`.
pub fn corollary_bound(c: f64, n: u64, delta: f64, gamma: f64) -> Option<f64> {
    let ln = (n as f64).ln();
    let lln = ln.ln();
    let v = ((1.0 - delta) / (1.0 + gamma) * c * ln / lln).sqrt().exp();
    (ln > 0.0 && lln > 0.0 && v.is_finite()).then_some(v)
}

/// Builds the resonator for `cfg` and assembles the report.
pub fn ratio_and_bounds(
    cfg: &MomentConfig,
    f: &UnimodularCmf,
    bump: &Bump,
    table: &FactorTable,
) -> Result<MomentReport> {
    cfg.validate()?;
    let res = Resonator::from_log_x(cfg.log_x(), table)?;
    ratio_and_bounds_with(cfg, &res, f, bump, table)
}

/// Report for an explicit resonator; its `log X` overrides the one implied by `cfg`.
pub fn ratio_and_bounds_with(
    cfg: &MomentConfig,
    res: &Resonator,
    f: &UnimodularCmf,
    bump: &Bump,
    table: &FactorTable,
) -> Result<MomentReport> {
    cfg.validate()?;
    let n = cfg.n;
    let nf = n as f64;
    let log_t = cfg.log_t;
    let t_len = log_t.exp();
    let log_x = res.log_x();
    let x = log_x.exp();
    let budget = cfg.budget_terms;
    let env = DecayEnvelope::shared(cfg.nu)?;
    let phi0 = bump.phi_hat_zero()?;

    // Over-budget computations are recorded and skipped; anything else is an error.
    let mut skipped = Vec::new();
    let mut keep = |what: &str, r: Result<f64>| -> Result<Option<f64>> {
        match r {
            Ok(v) => Ok(Some(v)),
            Err(e) if e.is_resource_limit() => {
                skipped.push(format!("{what}: {e}"));
                Ok(None)
            }
            Err(e) => Err(e),
        }
    };

    let support = match res.support(x, budget.min(DEFAULT_SUPPORT_BUDGET as u64) as usize) {
        Ok(s) => Some(s),
        Err(e) if e.is_resource_limit() => {
            keep("support", Err(e))?;
            None
        }
        Err(e) => return Err(e),
    };

    let mut m1_main = None;
    let mut sum_r2 = None;
    let (mut diag, mut restricted_diag, mut off) = (None, None, None);
    let (mut m1e, mut m2e, mut m1q, mut m2q) = (None, None, None, None);
    let (mut hough, mut rankin) = (None, None);
    let alpha = cfg.alpha.unwrap_or(res.alpha_default());
    if let Some(support) = &support {
        let s2 = sum_f64(support.entries().iter().map(|e| e.r * e.r));
        sum_r2 = Some(s2);
        m1_main = Some(t_len * phi0 * s2);
        diag = keep("diagonal sum", diagonal_sum(support, n, budget))?;
        restricted_diag = keep(
            "diagonal lower bound",
            restricted_diagonal_lower_bound(support, n, budget),
        )?;
        off = match offdiag_bounds(support, n, t_len, &env, budget) {
            Ok(o) => Some(o),
            Err(e) => {
                keep("off-diagonal bound", Err(e))?;
                None
            }
        };
        m1e = keep("exact M1", m1_exact(support, f, t_len, bump, budget))?;
        m2e = keep("exact M2", m2_exact(support, f, n, t_len, bump, budget, table))?;
        m1q = keep(
            "M1 quadrature",
            m1_quadrature(support, f, t_len, cfg.quad_rel_tol, budget),
        )?;
        m2q = keep(
            "M2 quadrature",
            m2_quadrature(support, f, n, t_len, cfg.quad_rel_tol, budget, table),
        )?;
        hough = keep("main term", hough_main_term(res, support, n, budget))?;
        rankin = keep("Rankin error term", rankin_error_term(res, support, n, alpha, budget))?;
    }
    let z = x.min(nf);
    let coprime = if z > 1.0 {
        match coprime_sum_check(res, z, budget) {
            Ok(l) => Some(l),
            Err(e) => {
                keep("lemma check", Err(e))?;
                None
            }
        }
    } else {
        None
    };

    let m2_diag_main = diag.map(|d| t_len / nf * phi0 * d);
    let ratio = diag.zip(sum_r2).map(|(d, s)| d / nf / s);
    let (mut ratio_lower, mut ratio_upper) = (None, None);
    if let (Some(main2), Some(main1), Some(o)) = (m2_diag_main, m1_main, off) {
        ratio_lower = Some(((main2 - o.m2) / (main1 + o.m1)).max(0.0));
        ratio_upper = (main1 > o.m1).then(|| (main2 + o.m2) / (main1 - o.m1));
    }
    let lower_bound = ratio_lower.map(f64::sqrt);
    let exact_ratio = match (m1e, m2e) {
        (Some(a), Some(b)) if a > 0.0 => Some(b / a),
        _ => None,
    };

    let c = (n > 1).then(|| log_t / nf.ln());
    let lambda = res.lambda();
    let lll = 3.0 * lambda * lambda.ln().ln();
    let feasibility = Feasibility {
        t_ge_n_pow_2_over_delta: log_t >= 2.0 / cfg.delta * nf.ln(),
        c_le_log_n_pow_gamma: c.is_some_and(|c| c <= nf.ln().powf(cfg.gamma)),
        log_n_gt_3_lambda_loglog_lambda: nf.ln() > lll,
        log_x_gt_3_lambda_loglog_lambda: log_x > lll,
    };
    let scale = (log_t > 0.0 && log_t.ln() > 0.0).then(|| ((1.0 - cfg.delta) * log_t / log_t.ln()).sqrt());
    let lower_bound_diagnostic = scale.zip(lower_bound).and_then(|(s, lb)| finite(lb.ln() / s));

    Ok(MomentReport {
        n,
        t: t_len,
        log_t,
        c,
        delta: cfg.delta,
        gamma: cfg.gamma,
        x: finite(x),
        log_x,
        lambda,
        support_lo: res.support_window().0,
        support_hi: res.support_window().1,
        support_primes: res.prime_weights().len(),
        support_size: support.as_ref().map(Support::len),
        m1_quad: m1q,
        m1_exact: m1e,
        m1_main,
        m2_quad: m2q,
        m2_exact: m2e,
        diag_sum: diag,
        restricted_diag_lower_bound: restricted_diag,
        m2_diag_main,
        offdiag_bound: off.map(|o| o.m2),
        offdiag_bound_uniform: off.and_then(|o| o.m2_uniform),
        m1_offdiag_bound: off.map(|o| o.m1),
        nu: env.nu,
        c_nu: env.c_nu,
        decay_margin: env.margin,
        bound_basis: "empirical decay constant".to_string(),
        ratio,
        ratio_lower,
        ratio_upper,
        exact_ratio,
        lower_bound,
        hough_main: hough,
        rankin_error: rankin,
        alpha,
        alpha_admissible: alpha > 0.0 && alpha < 0.5,
        coprime_z: z,
        coprime_lhs: coprime.map(|l| l.lhs),
        coprime_rhs: coprime.map(|l| l.rhs),
        coprime_diagnostic: coprime.and_then(|l| l.diagnostic),
        theorem_bound: theorem_bound(log_t, cfg.delta),
        corollary_bound: c.and_then(|c| corollary_bound(c, n, cfg.delta, cfg.gamma)),
        lower_bound_diagnostic,
        feasibility,
        skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> FactorTable {
        FactorTable::new(100_000).unwrap()
    }

    fn single_61() -> Resonator {
        Resonator::from_log_x(20.0, &table()).unwrap()
    }

    fn toy(weights: &[(u32, f64)]) -> Resonator {
        Resonator::with_prime_weights(20.0, weights.to_vec()).unwrap()
    }

    #[test]
    fn log_ratio_is_accurate_for_neighbours() {
        let k = 1_000_000_007u64;
        assert!((log_ratio(k + 1, k) - (1.0 / k as f64 - 0.5 / (k as f64).powi(2))).abs() < 1e-24);
        assert_eq!(log_ratio(5, 5), 0.0);
        assert!((log_ratio(2, 1) - 2f64.ln()).abs() < 1e-16);
        assert!((log_ratio(1, 2) + 2f64.ln()).abs() < 1e-16);
    }

    #[test]
    fn gap_examples() {
        assert!((min_offdiag_gap(2, 2).unwrap().unwrap() - 2f64.ln()).abs() < 1e-15);
        assert!((min_offdiag_gap(3, 2).unwrap().unwrap() - (4.0f64 / 3.0).ln()).abs() < 1e-15);
        assert_eq!(min_offdiag_gap(1, 1).unwrap(), None);
        for n in 1..=20 {
            for x in 1..=20 {
                if let Some(g) = min_offdiag_gap(n, x).unwrap() {
                    assert!(g >= 1.0 / (n * x) as f64);
                }
            }
        }
    }

    #[test]
    fn diagonal_examples() {
        let res = single_61();
        let support = res.enumerate_support(1e12).unwrap();
        let r61 = res.r_value(61, &table()).unwrap();
        // N = 1: only a = b
        let d1 = diagonal_sum(&support, 1, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((d1 - (1.0 + r61 * r61)).abs() < 1e-15);
        // N = 100: a' = b' = 1 gives 100 (1 + r^2); (61, 1), (1, 61) give floor(100/61) r each
        let d = diagonal_sum(&support, 100, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((d - (100.0 * (1.0 + r61 * r61) + 2.0 * r61)).abs() < 1e-12);
        let p = restricted_diagonal_lower_bound(&support, 100, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((p - d).abs() < 1e-12);
    }

    #[test]
    fn diagonal_ratio_is_one_at_n_one() {
        let res = toy(&[(2, 0.7), (3, 0.4), (5, 0.9)]);
        let support = res.enumerate_support(30.0).unwrap();
        let d = diagonal_sum(&support, 1, DEFAULT_BUDGET_TERMS).unwrap();
        let s: f64 = support.entries().iter().map(|e| e.r * e.r).sum();
        assert!((d - s).abs() < 1e-14);
    }

    #[test]
    fn hough_and_lemma_examples() {
        let res = single_61();
        let t61 = 0.227_841_062_231_190_7;
        let support = res.enumerate_support(res.x()).unwrap();
        let m = hough_main_term(&res, &support, 100, DEFAULT_BUDGET_TERMS).unwrap();
        let expected = 1.0 + 2.0 * t61 / (61.0 * 61.0);
        assert!((m - expected).abs() < 1e-13, "{m}");
        assert!((m - 1.000_122_462_274_782).abs() < 1e-13);
        let empty = toy(&[]);
        let es = empty.enumerate_support(1e6).unwrap();
        assert_eq!(hough_main_term(&empty, &es, 100, DEFAULT_BUDGET_TERMS).unwrap(), 1.0);

        let l = coprime_sum_check(&res, 61.0, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((l.lhs - expected).abs() < 1e-13);
        assert!((l.rhs - 0.257_656_926_839_527).abs() < 1e-13, "{}", l.rhs);
        assert!(l.lhs >= l.rhs);
        let below = coprime_sum_check(&res, 10.0, DEFAULT_BUDGET_TERMS).unwrap();
        assert_eq!(below.lhs, 1.0);
        assert!(below.rhs < 1.0);
        assert!(coprime_sum_check(&res, 1.0, DEFAULT_BUDGET_TERMS).is_err());
    }

    #[test]
    fn rankin_examples() {
        let res = single_61();
        let r2 = res.r_value(61, &table()).unwrap().powi(2);
        let support = res.enumerate_support(res.x()).unwrap();
        let alpha = 0.05;
        let e = rankin_error_term(&res, &support, 100, alpha, DEFAULT_BUDGET_TERMS).unwrap();
        // pairs (1,1), (1,61), (61,1)
        let big = 1.0 + r2 * 61f64.powf(alpha);
        let r = r2.sqrt();
        let closed = (-alpha * 20.0f64).exp() / (1.0 + r2) * (big + 2.0 * r * 61f64.powf(alpha - 0.5));
        assert!((e - closed).abs() < 1e-14 * closed, "{e} vs {closed}");

        let empty = toy(&[]);
        let es = empty.enumerate_support(1e6).unwrap();
        let e0 = rankin_error_term(&empty, &es, 100, alpha, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((e0 - (-alpha * 20.0f64).exp()).abs() < 1e-15);

        let c = rankin_tail_identity_check(&res, 1, 1.0, alpha, 1_000_000).unwrap();
        assert!((c.exact_tail - r2).abs() < 1e-15);
        assert!((c.rankin_bound - big).abs() < 1e-14);
        assert!(c.holds && c.exact_tail < c.rankin_bound);
        let c = rankin_tail_identity_check(&res, 1, 61.0, alpha, 1_000_000).unwrap();
        assert_eq!(c.exact_tail, 0.0);
        let c = rankin_tail_identity_check(&res, 61, 1.0, alpha, 1_000_000).unwrap();
        assert_eq!(c.exact_tail, 0.0);
        assert!((c.rankin_bound - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rankin_tail_matches_enumeration() {
        let res = toy(&[(2, 0.8), (3, 0.5), (5, 0.3), (7, 0.6), (11, 0.2)]);
        let full = res.enumerate_support(1e9).unwrap();
        for cap in [1.0, 2.5, 10.0, 30.0, 100.0, 2000.0] {
            for ab in [1u64, 6, 7, 35] {
                let c = rankin_tail_identity_check(&res, ab, cap, 0.1, 1_000_000).unwrap();
                let direct: f64 = full
                    .entries()
                    .iter()
                    .filter(|e| e.n as f64 > cap && gcd_unchecked(e.n, ab) == 1)
                    .map(|e| e.r * e.r)
                    .sum();
                assert!((c.exact_tail - direct).abs() < 1e-14, "cap={cap} ab={ab}");
                assert!(c.holds);
            }
        }
    }

    #[test]
    fn m1_main_examples() {
        let bump = Bump::default();
        let res = single_61();
        let support = res.enumerate_support(res.x()).unwrap();
        let r = res.r_value(61, &table()).unwrap();
        let v = m1_main(&support, 1e4, &bump).unwrap();
        assert!((v - 1e4 * 0.375 * (1.0 + r * r)).abs() < 1e-9);
        let empty = toy(&[]);
        let es = empty.enumerate_support(10.0).unwrap();
        assert!((m1_main(&es, 1e3, &bump).unwrap() - 375.0).abs() < 1e-10);
    }

    #[test]
    fn exact_moments_of_empty_support() {
        let bump = Bump::default();
        let empty = toy(&[]);
        let es = empty.enumerate_support(10.0).unwrap();
        let f = UnimodularCmf::steinhaus(1, 100).unwrap();
        let m1 = m1_exact(&es, &f, 1e3, &bump, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((m1 - 375.0).abs() < 1e-9);
        let q = m1_quadrature(&es, &f, 1e3, 1e-10, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((q - 375.0).abs() < 1e-7, "{q}");
        // D_1 = 1
        let m2 = m2_exact(&es, &f, 1, 1e3, &bump, DEFAULT_BUDGET_TERMS, &table()).unwrap();
        assert!((m2 - m1).abs() < 1e-12);
    }

    #[test]
    fn exact_matches_quadrature_on_single_prime() {
        let t = table();
        let bump = Bump::default();
        let res = single_61();
        let support = res.enumerate_support(res.x()).unwrap();
        let f = UnimodularCmf::steinhaus(9, 1000).unwrap();
        let t_len = 1e4;
        let e1 = m1_exact(&support, &f, t_len, &bump, DEFAULT_BUDGET_TERMS).unwrap();
        let q1 = m1_quadrature(&support, &f, t_len, 1e-10, DEFAULT_BUDGET_TERMS).unwrap();
        assert!((e1 - q1).abs() < 1e-7 * e1, "{e1} {q1}");
        let e2 = m2_exact(&support, &f, 3, t_len, &bump, DEFAULT_BUDGET_TERMS, &t).unwrap();
        let q2 = m2_quadrature(&support, &f, 3, t_len, 1e-10, DEFAULT_BUDGET_TERMS, &t).unwrap();
        assert!((e2 - q2).abs() < 1e-7 * e2, "{e2} {q2}");
    }

    #[test]
    fn offdiagonal_bounds_bracket_exact_moments() {
        let t = table();
        let bump = Bump::default();
        let env = DecayEnvelope::shared(3).unwrap();
        let res = toy(&[(2, 0.5), (3, 0.4), (5, 0.3)]);
        let support = res.enumerate_support(30.0).unwrap();
        let f = UnimodularCmf::steinhaus(4, 100).unwrap();
        for (n, t_len) in [(1u64, 1e3), (4, 1e3), (7, 1e3), (5, 300.0)] {
            let phi0 = bump.phi_hat_zero().unwrap();
            let off = offdiag_bounds(&support, n, t_len, &env, DEFAULT_BUDGET_TERMS).unwrap();
            let m1 = m1_exact(&support, &f, t_len, &bump, DEFAULT_BUDGET_TERMS).unwrap();
            let main1 = m1_main(&support, t_len, &bump).unwrap();
            assert!((m1 - main1).abs() <= off.m1 + 1e-9 * main1);
            let m2 = m2_exact(&support, &f, n, t_len, &bump, DEFAULT_BUDGET_TERMS, &t).unwrap();
            let diag = diagonal_sum(&support, n, DEFAULT_BUDGET_TERMS).unwrap();
            let main2 = t_len / n as f64 * phi0 * diag;
            assert!((m2 - main2).abs() <= off.m2 + 1e-9 * main2, "n={n} T={t_len}");
        }
    }

    #[test]
    fn report_for_single_term_polynomial() {
        let t = table();
        let bump = Bump::default();
        let cfg = MomentConfig::new(1, 3.0, 0.5);
        let r = ratio_and_bounds(&cfg, &UnimodularCmf::constant_one(), &bump, &t).unwrap();
        assert_eq!(r.ratio, Some(1.0));
        assert_eq!(r.lower_bound, Some(1.0));
        assert_eq!(r.c, None);
        assert!(r.m1_exact.is_some() && r.m2_exact.is_some());
    }

    #[test]
    fn report_bounds_and_flags() {
        let t = table();
        let bump = Bump::default();
        assert!((theorem_bound(100.0, 0.5).unwrap() - 26.978_8).abs() < 1e-3);
        // log X = 20: support {1, 61}
        let mut cfg = MomentConfig::new(1000, 30.0, 0.5);
        cfg.budget_terms = 1_000_000;
        let r = ratio_and_bounds(&cfg, &UnimodularCmf::constant_one(), &bump, &t).unwrap();
        assert_eq!(r.support_size, Some(2));
        assert!(r.skipped.iter().any(|s| s.starts_with("exact M2")));
        assert!(r.feasibility.t_ge_n_pow_2_over_delta);
        assert!(!r.feasibility.c_le_log_n_pow_gamma);
        let (ratio, lb) = (r.ratio.unwrap(), r.lower_bound.unwrap());
        assert!(ratio >= 1.0);
        assert!(lb * lb <= ratio * (1.0 + 1e-12));
        assert!(r.hough_main.unwrap() >= 1.0 && r.rankin_error.unwrap() > 0.0);
        assert!(r.restricted_diag_lower_bound.unwrap() <= r.diag_sum.unwrap() * (1.0 + 1e-12));
        let back: MomentReport = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        assert_eq!(r.csv_header().split(',').count(), r.csv_row().split(',').count());
    }

    #[test]
    fn asymptotic_configuration_gives_partial_report() {
        let t = table();
        let bump = Bump::default();
        let cfg = MomentConfig::new(1000, 100.0, 0.5);
        let r = ratio_and_bounds(&cfg, &UnimodularCmf::constant_one(), &bump, &t).unwrap();
        assert!((r.theorem_bound.unwrap() - 26.978_8).abs() < 1e-3);
        assert!(r.support_primes > 100);
        assert_eq!(r.ratio, None);
        assert!(r.skipped[0].starts_with("support"));
    }

    #[test]
    fn ratio_is_free_of_f() {
        let t = table();
        let bump = Bump::default();
        let res = toy(&[(2, 0.5), (3, 0.4), (5, 0.3)]);
        let mut cfg = MomentConfig::new(6, 3000f64.ln(), 0.5);
        cfg.budget_terms = 10_000_000;
        let base = ratio_and_bounds_with(&cfg, &res, &UnimodularCmf::constant_one(), &bump, &t).unwrap();
        for seed in 0..3 {
            let f = UnimodularCmf::steinhaus(seed, 1000).unwrap();
            let r = ratio_and_bounds_with(&cfg, &res, &f, &bump, &t).unwrap();
            assert_eq!(r.ratio.unwrap().to_bits(), base.ratio.unwrap().to_bits());
            assert_eq!(r.lower_bound, base.lower_bound);
        }
    }
}
