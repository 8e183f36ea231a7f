//! Evaluation of `D_N(t) = N^{-1/2} sum_{n <= N} f(n) n^{it}` and of the
//! resonator polynomial `R(t) = sum f(n) r(n) n^{it}`, plus certified grid
//! search for `sup |D_N(t)|`.

use crate::error::{Error, Result};
use crate::multfn::UnimodularCmf;
use crate::ntcore::FactorTable;
use crate::resonator::Support;
use crate::sum::ComplexSum;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

/// Grid points between rotor re-synchronizations from direct `exp` calls.
pub const RESYNC_STEPS: usize = 10_000;

/// Default cap on grid points times polynomial terms for one search.
pub const DEFAULT_EVAL_BUDGET: u64 = 50_000_000_000;

/// A finite exponential sum `scale * sum_k c_k exp(i t w_k)`.
#[derive(Debug, Clone)]
pub struct ExpSum {
    coeffs: Vec<Complex64>,
    freqs: Vec<f64>,
    scale: f64,
}

impl ExpSum {
    pub fn new(coeffs: Vec<Complex64>, freqs: Vec<f64>, scale: f64) -> Self {
        assert_eq!(coeffs.len(), freqs.len());
        Self { coeffs, freqs, scale }
    }

    /// `D_N` for the function `f`.
    pub fn dirichlet(f: &UnimodularCmf, n: u64, table: &FactorTable) -> Result<Self> {
        if n == 0 {
            return Err(Error::invalid("N must be positive"));
        }
        let coeffs = f.values_up_to(n, table)?;
        let freqs = (1..=n).map(|k| (k as f64).ln()).collect();
        Ok(Self::new(coeffs, freqs, 1.0 / (n as f64).sqrt()))
    }

    /// `R(t) = sum_{n in support} f(n) r(n) n^{it}`.
    pub fn resonator(support: &Support, f: &UnimodularCmf) -> Result<Self> {
        let values = f_on_support(support, f)?;
        let coeffs = values.iter().zip(support.entries()).map(|(fv, e)| fv * e.r).collect();
        let freqs = support.entries().iter().map(|e| (e.n as f64).ln()).collect();
        Ok(Self::new(coeffs, freqs, 1.0))
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn freqs(&self) -> &[f64] {
        &self.freqs
    }

    /// Compensated evaluation at `t`.
    pub fn eval(&self, t: f64) -> Complex64 {
        let acc: ComplexSum = self
            .coeffs
            .iter()
            .zip(&self.freqs)
            .map(|(c, w)| c * Complex64::cis(t * w))
            .collect();
        acc.value() * self.scale
    }

    pub fn norm_sqr(&self, t: f64) -> f64 {
        self.eval(t).norm_sqr()
    }

    /// `scale * sum |c_k| |w_k|`, a bound on `|d/dt|` of the sum.
    pub fn derivative_bound(&self) -> f64 {
        self.scale
            * self
                .coeffs
                .iter()
                .zip(&self.freqs)
                .map(|(c, w)| c.norm() * w.abs())
                .sum::<f64>()
    }

    /// `|S(t0 + j h)|` for `j in 0..count`, via per-term phase rotors that
    /// are re-synchronized every [`RESYNC_STEPS`] points.
    pub fn scan_abs(&self, t0: f64, h: f64, count: usize) -> Vec<f64> {
        let mut out = vec![0.0; count];
        out.par_chunks_mut(RESYNC_STEPS).enumerate().for_each(|(chunk, slot)| {
            let start = chunk * RESYNC_STEPS;
            self.rotor_pass(t0, h, start, slot.len(), |j, v| slot[j] = v);
        });
        out
    }

    /// Best grid point of `|S|` on `t0 + j h`, `j in 0..count`, with the
    /// deterministic tie-break (larger value, then smaller `|t|`, then smaller `t`).
    /// Also samples `(t, |S(t)|)` every `trace_stride` points when requested.
    pub fn scan_max(&self, t0: f64, h: f64, count: usize, trace_stride: Option<usize>) -> (GridPoint, Vec<(f64, f64)>) {
        let chunks = count.div_ceil(RESYNC_STEPS);
        let partial: Vec<(GridPoint, Vec<(f64, f64)>)> = (0..chunks)
            .into_par_iter()
            .map(|chunk| {
                let start = chunk * RESYNC_STEPS;
                let len = RESYNC_STEPS.min(count - start);
                let mut best = GridPoint {
                    t: f64::NAN,
                    value: -1.0,
                };
                let mut trace = Vec::new();
                self.rotor_pass(t0, h, start, len, |j, v| {
                    let idx = start + j;
                    let t = t0 + h * idx as f64;
                    best = best.better(GridPoint { t, value: v });
                    if let Some(k) = trace_stride {
                        if idx.is_multiple_of(k) {
                            trace.push((t, v));
                        }
                    }
                });
                (best, trace)
            })
            .collect();
        let mut best = GridPoint {
            t: f64::NAN,
            value: -1.0,
        };
        let mut trace = Vec::new();
        for (b, tr) in partial {
            best = best.better(b);
            trace.extend(tr);
        }
        (best, trace)
    }

    fn rotor_pass(&self, t0: f64, h: f64, start: usize, len: usize, mut sink: impl FnMut(usize, f64)) {
        let ts = t0 + h * start as f64;
        let mut z: Vec<Complex64> = self
            .coeffs
            .iter()
            .zip(&self.freqs)
            .map(|(c, w)| c * Complex64::cis(ts * w))
            .collect();
        let rot: Vec<Complex64> = self.freqs.iter().map(|w| Complex64::cis(h * w)).collect();
        for j in 0..len {
            let mut re = 0.0;
            let mut im = 0.0;
            for zk in &z {
                re += zk.re;
                im += zk.im;
            }
            sink(j, self.scale * re.hypot(im));
            for (zk, rk) in z.iter_mut().zip(&rot) {
                *zk *= rk;
            }
        }
    }
}

/// `f(n)` on every support integer, in support order.
pub fn f_on_support(support: &Support, f: &UnimodularCmf) -> Result<Vec<Complex64>> {
    let mut err = None;
    let values = support.map_multiplicative(Complex64::new(1.0, 0.0), |p| match f.prime_value(p) {
        Ok(v) => v,
        Err(e) => {
            err.get_or_insert(e);
            Complex64::new(f64::NAN, f64::NAN)
        }
    });
    match err {
        Some(e) => Err(e),
        None => Ok(values),
    }
}

/// `D_N(t)`.
pub fn eval_dn(f: &UnimodularCmf, n: u64, t: f64, table: &FactorTable) -> Result<Complex64> {
    Ok(ExpSum::dirichlet(f, n, table)?.eval(t))
}

/// `R(t)` over the given support.
pub fn eval_r(support: &Support, f: &UnimodularCmf, t: f64) -> Result<Complex64> {
    Ok(ExpSum::resonator(support, f)?.eval(t))
}

/// A candidate maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub t: f64,
    pub value: f64,
}

impl GridPoint {
    /// Larger value wins; ties go to smaller `|t|`, then smaller `t`.
    pub fn better(self, other: GridPoint) -> GridPoint {
        match other.value.total_cmp(&self.value) {
            Ordering::Greater => other,
            Ordering::Less => self,
            Ordering::Equal => {
                let key = |g: &GridPoint| (g.t.abs(), g.t);
                if key(&other).partial_cmp(&key(&self)) == Some(Ordering::Less) {
                    other
                } else {
                    self
                }
            }
        }
    }
}

/// Outcome of a sup search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub t_star: f64,
    /// `|D_N(t_star)|`, recomputed directly.
    pub value: f64,
    pub grid_step: f64,
    pub grid_points: u64,
    pub refinement_iterations: u32,
    /// Largest possible gap between the true sup and `value`; absent for
    /// heuristic searches.
    pub certified_slack: Option<f64>,
    pub lo: f64,
    pub hi: f64,
}

/// Search settings shared by the grid and guided searches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Maximum grid points times terms.
    pub eval_budget: u64,
    /// Emit `(t, |D_N(t)|)` every this many grid points.
    pub trace_stride: Option<usize>,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            eval_budget: DEFAULT_EVAL_BUDGET,
            trace_stride: None,
        }
    }
}

/// Derivative bound used for grid spacing: `sqrt(N) log N >= N^{-1/2} sum log n`.
pub fn dn_derivative_bound(n: u64) -> f64 {
    (n as f64).sqrt() * (n as f64).ln()
}

/// Golden-section maximization of `|S|^2` on `[a, b]` down to width
/// `1e-10 max(1, |t|)`. Returns the best point seen and the iteration count.
pub fn refine_max(poly: &ExpSum, a: f64, b: f64) -> (GridPoint, u32) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = poly.norm_sqr(c);
    let mut fd = poly.norm_sqr(d);
    let mut iters = 0;
    while (b - a) > 1e-10 * 1f64.max(0.5 * (a + b).abs()) && iters < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = poly.norm_sqr(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = poly.norm_sqr(d);
        }
        iters += 1;
    }
    let (t, v) = if fc >= fd { (c, fc) } else { (d, fd) };
    (GridPoint { t, value: v.sqrt() }, iters)
}

/// Certified search of `sup_{lo <= t <= hi} |S(t)|` for an exponential sum
/// whose derivative is bounded by `deriv_bound`: the grid step is
/// `2 eps / deriv_bound`, so the sup exceeds the returned value by at most `eps`.
pub fn grid_sup_poly(
    poly: &ExpSum,
    deriv_bound: f64,
    lo: f64,
    hi: f64,
    eps: f64,
    opts: &SearchOptions,
) -> Result<(SearchResult, Vec<(f64, f64)>)> {
    if !(eps > 0.0) {
        return Err(Error::invalid(format!("eps must be positive, got {eps}")));
    }
    if !(lo <= hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::invalid(format!("invalid search window [{lo}, {hi}]")));
    }
    let width = hi - lo;
    let h = if deriv_bound > 0.0 {
        (2.0 * eps / deriv_bound).min(width.max(f64::MIN_POSITIVE))
    } else {
        width.max(1.0)
    };

    // grid t = j h for integer j in [lo, hi], so t = 0 is on it when covered
    let j_lo = (lo / h).ceil();
    let j_hi = (hi / h).floor();
    let count = if j_hi >= j_lo { (j_hi - j_lo) as u64 + 1 } else { 0 };
    let evals = (count + 2).saturating_mul(poly.len() as u64);
    if evals > opts.eval_budget {
        let suggested = eps * (evals as f64 / opts.eval_budget as f64);
        return Err(Error::resource(format!(
            "grid of {count} points x {} terms exceeds the evaluation budget {}; try eps >= {suggested:.3e}",
            poly.len(),
            opts.eval_budget
        )));
    }

    let (mut best, trace) = if count > 0 {
        poly.scan_max(j_lo * h, h, count as usize, opts.trace_stride)
    } else {
        (
            GridPoint {
                t: f64::NAN,
                value: -1.0,
            },
            Vec::new(),
        )
    };
    for t in [lo, hi] {
        best = best.better(GridPoint {
            t,
            value: poly.eval(t).norm(),
        });
    }
    // exact re-evaluation of the grid winner
    best = GridPoint {
        t: best.t,
        value: poly.eval(best.t).norm(),
    };

    let (refined, iters) = refine_max(poly, (best.t - h).max(lo), (best.t + h).min(hi));
    let refined = GridPoint {
        t: refined.t,
        value: poly.eval(refined.t).norm(),
    };
    if refined.value > best.value {
        best = refined;
    }

    Ok((
        SearchResult {
            t_star: best.t,
            value: best.value,
            grid_step: h,
            grid_points: count,
            refinement_iterations: iters,
            certified_slack: Some(0.5 * h * deriv_bound),
            lo,
            hi,
        },
        trace,
    ))
}

/// Certified `sup_{t in [lo, hi]} |D_N(t)|` to within `eps`.
pub fn grid_sup_window(
    f: &UnimodularCmf,
    n: u64,
    lo: f64,
    hi: f64,
    eps: f64,
    table: &FactorTable,
    opts: &SearchOptions,
) -> Result<(SearchResult, Vec<(f64, f64)>)> {
    let poly = ExpSum::dirichlet(f, n, table)?;
    let bound = dn_derivative_bound(n);
    // |D_N(-t)| = |D_N(t)| for real f: scan the right half only
    if f.is_real_valued() && lo == -hi && hi > 0.0 {
        let (mut res, trace) = grid_sup_poly(&poly, bound, 0.0, hi, eps, opts)?;
        if res.t_star > 0.0 {
            res.t_star = -res.t_star;
        }
        res.lo = lo;
        return Ok((res, trace));
    }
    grid_sup_poly(&poly, bound, lo, hi, eps, opts)
}

/// Certified `sup_{|t| <= T} |D_N(t)|` to within `eps`.
pub fn grid_sup(f: &UnimodularCmf, n: u64, t_max: f64, eps: f64, table: &FactorTable) -> Result<SearchResult> {
    if !(t_max > 0.0) {
        return Err(Error::invalid(format!("T must be positive, got {t_max}")));
    }
    Ok(grid_sup_window(f, n, -t_max, t_max, eps, table, &SearchOptions::default())?.0)
}

/// Number of `|R|` peaks refined by [`resonance_guided_search`].
pub const GUIDED_TOP_K: usize = 8;

/// Heuristic search: locate the largest local maxima of `|R(t)|` on a coarse
/// grid, then search `|D_N|` finely around each. The result is a witness
/// (a lower bound for the sup) without a slack certificate.
#[allow(clippy::too_many_arguments)]
pub fn resonance_guided_search(
    support: &Support,
    f: &UnimodularCmf,
    n: u64,
    lo: f64,
    hi: f64,
    coarse_eps: f64,
    table: &FactorTable,
    opts: &SearchOptions,
) -> Result<SearchResult> {
    let dn = ExpSum::dirichlet(f, n, table)?;
    let bound = dn_derivative_bound(n);
    if support.len() <= 1 {
        let (mut res, _) = grid_sup_poly(&dn, bound, lo, hi, coarse_eps, opts)?;
        res.certified_slack = None;
        return Ok(res);
    }
    if !(coarse_eps > 0.0) || !(lo <= hi) {
        return Err(Error::invalid("guided search needs coarse_eps > 0 and lo <= hi"));
    }
    let r = ExpSum::resonator(support, f)?;
    let h = if bound > 0.0 {
        2.0 * coarse_eps / bound
    } else {
        (hi - lo).max(1.0)
    };
    let count = ((hi - lo) / h).floor() as u64 + 1;
    let cost = count.saturating_mul(r.len() as u64);
    if cost > opts.eval_budget {
        return Err(Error::resource(format!(
            "coarse resonator grid of {count} points x {} terms exceeds the evaluation budget {}; \
             try a larger eps",
            r.len(),
            opts.eval_budget
        )));
    }
    let values = r.scan_abs(lo, h, count as usize);
    let mut peaks: Vec<GridPoint> = (0..values.len())
        .filter(|&j| {
            let left = if j > 0 { values[j - 1] } else { f64::NEG_INFINITY };
            let right = values.get(j + 1).copied().unwrap_or(f64::NEG_INFINITY);
            values[j] >= left && values[j] >= right
        })
        .map(|j| GridPoint {
            t: lo + h * j as f64,
            value: values[j],
        })
        .collect();
    peaks.sort_by(|a, b| {
        if a.better(*b) == *a {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    });
    peaks.truncate(GUIDED_TOP_K);

    let fine_eps = coarse_eps / 100.0;
    let mut best: Option<SearchResult> = None;
    let mut points = count;
    for p in peaks {
        let (res, _) = grid_sup_poly(&dn, bound, (p.t - h).max(lo), (p.t + h).min(hi), fine_eps, opts)?;
        points += res.grid_points;
        best = Some(match best {
            None => res,
            Some(prev) => {
                let a = GridPoint {
                    t: prev.t_star,
                    value: prev.value,
                };
                let b = GridPoint {
                    t: res.t_star,
                    value: res.value,
                };
                if a.better(b) == a {
                    prev
                } else {
                    res
                }
            }
        });
    }
    let mut out = best.expect("at least one peak on a nonempty grid");
    out.certified_slack = None;
    out.grid_points = points;
    out.lo = lo;
    out.hi = hi;
    Ok(out)
}
