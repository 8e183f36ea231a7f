//! The smooth cutoff `Phi`: zero outside `[1/2, 1]`, one on `[5/8, 7/8]`,
//! with `exp(-1/s)` transitions, and its Fourier transform
//! `phi_hat(xi) = int Phi(x) exp(-i xi x) dx`.
//!
//! `Phi` is symmetric about `3/4`, so `phi_hat(xi) = exp(-3 i xi / 4) G(xi)`
//! with `G` real and even. Only `G` is integrated numerically: the plateau
//! contributes `sin(xi / 8) / xi` in closed form and each ramp is one
//! oscillatory integral over a panel of width `1/8`.

use crate::error::{Error, Result};
use crate::quad::Integrator;
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock, RwLock};

pub const RAMP_WIDTH: f64 = 0.125;

/// Default absolute accuracy of `phi_hat`.
pub const DEFAULT_TRANSFORM_TOL: f64 = 1e-12;

/// `|xi|` beyond which `phi_hat` is returned as zero; the transform is
/// already below `1e-19` there (see the decay tests).
pub const TRANSFORM_CUTOFF: f64 = 1.0e4;

/// Below this `|xi|` the transform is integrated directly; above it, after
/// two integrations by parts.
const PARTS_THRESHOLD: f64 = 8.0;

#[inline]
fn sigma(s: f64) -> f64 {
    if s > 0.0 {
        (-1.0 / s).exp()
    } else {
        0.0
    }
}

/// Smooth transition from 0 (s <= 0) to 1 (s >= 1), with `psi(s) + psi(1 - s) = 1`.
#[inline]
pub fn psi(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        let a = sigma(s);
        a / (a + sigma(1.0 - s))
    }
}

/// `psi''(s)`, writing `psi` as the logistic function of `u(s) = 1/(1-s) - 1/s`.
pub fn psi_second(s: f64) -> f64 {
    // psi(1 - psi) < exp(-400) outside this range
    if s <= 2.5e-3 || s >= 1.0 - 2.5e-3 {
        return 0.0;
    }
    let l = psi(s);
    let q = 1.0 - s;
    let du = 1.0 / (s * s) + 1.0 / (q * q);
    let d2u = -2.0 / (s * s * s) + 2.0 / (q * q * q);
    l * (1.0 - l) * (d2u + (1.0 - 2.0 * l) * du * du)
}

/// The cutoff `Phi(y)`.
pub fn phi(y: f64) -> f64 {
    if !(0.5..=1.0).contains(&y) {
        0.0
    } else if y < 0.625 {
        psi((y - 0.5) / RAMP_WIDTH)
    } else if y <= 0.875 {
        1.0
    } else {
        psi((1.0 - y) / RAMP_WIDTH)
    }
}

/// Memoization key: `|xi|` rounded to 12 significant digits.
fn memo_key(xi: f64) -> u64 {
    let a = xi.abs();
    if a == 0.0 {
        return 0;
    }
    let e = a.log10().floor() as i32;
    let scale = 10f64.powi(11 - e);
    ((a * scale).round() / scale).to_bits()
}

/// `Phi` plus a memoized evaluator for its transform.
#[derive(Debug)]
pub struct Bump {
    tol: f64,
    // |xi| key -> G(|xi|); concurrent fills store identical values
    memo: RwLock<HashMap<u64, f64>>,
}

impl Default for Bump {
    fn default() -> Self {
        Self::new(DEFAULT_TRANSFORM_TOL)
    }
}

impl Clone for Bump {
    fn clone(&self) -> Self {
        Self {
            tol: self.tol,
            memo: RwLock::new(self.memo.read().expect("memo poisoned").clone()),
        }
    }
}

impl Bump {
    pub fn new(tol: f64) -> Self {
        Self {
            tol,
            memo: RwLock::new(HashMap::new()),
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn phi(&self, y: f64) -> f64 {
        phi(y)
    }

    /// `G(xi) = exp(3 i xi / 4) phi_hat(xi)`, real and even.
    pub fn centered_transform(&self, xi: f64) -> Result<f64> {
        if !xi.is_finite() {
            return Err(Error::invalid("phi_hat argument must be finite"));
        }
        let a = xi.abs();
        if a > TRANSFORM_CUTOFF {
            return Ok(0.0);
        }
        let key = memo_key(a);
        if let Some(&g) = self.memo.read().expect("memo poisoned").get(&key) {
            return Ok(g);
        }
        let g = self.compute_centered(a)?;
        self.memo.write().expect("memo poisoned").entry(key).or_insert(g);
        Ok(g)
    }

    fn compute_centered(&self, a: f64) -> Result<f64> {
        if a < PARTS_THRESHOLD {
            // plateau 2 int_0^{1/8} cos(a u) du, plus the ramp with u = 1/4 - w s
            let plateau = if a < 1e-8 {
                0.125 - a * a / 6.0 * 0.125f64.powi(3)
            } else {
                (a * 0.125).sin() / a
            };
            let ramp = Integrator::absolute(0.25 * self.tol).integrate(
                |s| psi(s) * (a * (0.25 - RAMP_WIDTH * s)).cos(),
                0.0,
                1.0,
                2,
            )?;
            return Ok(2.0 * (plateau + RAMP_WIDTH * ramp.value));
        }
        // Two integrations by parts (psi' vanishes at both ends to all orders):
        // G(a) = -2 / (a^2 w) int_0^1 psi''(s) cos(a (1/4 - w s)) ds.
        // The plateau term cancels exactly and quadrature noise shrinks like a^-2.
        let scale = 2.0 / (a * a * RAMP_WIDTH);
        let inner_tol = (self.tol / scale).min(1e-12);
        let panels = (a * RAMP_WIDTH / std::f64::consts::PI).ceil() as usize + 2;
        let inner = Integrator::absolute(inner_tol).with_max_panels(1_000_000).integrate(
            |s| psi_second(s) * (a * (0.25 - RAMP_WIDTH * s)).cos(),
            0.0,
            1.0,
            panels,
        )?;
        Ok(-scale * inner.value)
    }

    /// `phi_hat(xi) = int Phi(x) exp(-i xi x) dx`.
    pub fn phi_hat(&self, xi: f64) -> Result<Complex64> {
        let g = self.centered_transform(xi)?;
        Ok(Complex64::cis(-0.75 * xi) * g)
    }

    /// `phi_hat(0) = int Phi`.
    pub fn phi_hat_zero(&self) -> Result<f64> {
        self.centered_transform(0.0)
    }

    /// `max_{xi in grid} |phi_hat(xi)| |xi|^nu`.
    pub fn decay_constant(&self, nu: u32, xi_grid: &[f64]) -> Result<f64> {
        let mut best = 0.0f64;
        for &xi in xi_grid {
            if !(xi.abs() >= 1.0) {
                return Err(Error::invalid(format!(
                    "decay grid points must satisfy |xi| >= 1, got {xi}"
                )));
            }
            let v = self.centered_transform(xi)?.abs() * xi.abs().powi(nu as i32);
            best = best.max(v);
        }
        Ok(best)
    }

    /// Number of cached transform samples.
    pub fn cached(&self) -> usize {
        self.memo.read().expect("memo poisoned").len()
    }
}

/// Grid on which the off-diagonal decay constant is measured: step 1/4 on
/// `[1, 2000]`, then geometric with ratio `1.001` up to the cutoff.
pub fn published_decay_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (4..=8000).map(|k| 0.25 * k as f64).collect();
    let mut xi = 2000.0f64;
    while xi < TRANSFORM_CUTOFF {
        xi *= 1.001;
        grid.push(xi.min(TRANSFORM_CUTOFF));
    }
    grid
}

/// Envelope `B(xi) = min(phi_hat(0), margin * C_nu * |xi|^{-nu})` dominating
/// `|phi_hat|`. `C_nu` is measured empirically on [`published_decay_grid`].
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DecayEnvelope {
    pub phi_hat_zero: f64,
    pub nu: u32,
    pub c_nu: f64,
    pub margin: f64,
}

/// Safety factor applied to the measured decay constant.
pub const DECAY_MARGIN: f64 = 1.1;

impl DecayEnvelope {
    pub fn measure(bump: &Bump, nu: u32) -> Result<Self> {
        Ok(Self {
            phi_hat_zero: bump.phi_hat_zero()?,
            nu,
            c_nu: bump.decay_constant(nu, &published_decay_grid())?,
            margin: DECAY_MARGIN,
        })
    }

    /// [`DecayEnvelope::measure`] on a default-tolerance bump, memoized per
    /// `nu` for the life of the process (the measurement takes seconds).
    pub fn shared(nu: u32) -> Result<Self> {
        static CACHE: OnceLock<Mutex<HashMap<u32, DecayEnvelope>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("envelope cache poisoned");
        if let Some(env) = guard.get(&nu) {
            return Ok(*env);
        }
        let env = Self::measure(&Bump::default(), nu)?;
        guard.insert(nu, env);
        Ok(env)
    }

    #[inline]
    pub fn bound(&self, xi: f64) -> f64 {
        let a = xi.abs();
        if a == 0.0 {
            return self.phi_hat_zero;
        }
        self.phi_hat_zero
            .min(self.margin * self.c_nu * a.powi(-(self.nu as i32)))
    }

    /// `sum_{k >= 1}^{k_max} B(scale * k)`, bounded above in closed form.
    pub fn lattice_sum(&self, scale: f64, k_max: f64) -> f64 {
        if k_max < 1.0 {
            return 0.0;
        }
        let c = self.margin * self.c_nu;
        let nu = self.nu as f64;
        // B = phi0 for k <= k0, the power law beyond.
        let k0 = ((c / self.phi_hat_zero).powf(1.0 / nu) / scale).floor().max(0.0);
        if k0 >= k_max {
            return self.phi_hat_zero * k_max.floor();
        }
        let head = self.phi_hat_zero * k0;
        // sum_{k > k0} k^{-nu} <= (k0 + 1)^{-nu} + int_{k0+1}^inf x^{-nu} dx
        let k1 = k0 + 1.0;
        let tail = k1.powf(-nu) + k1.powf(1.0 - nu) / (nu - 1.0);
        head + c * scale.powf(-nu) * tail
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::composite_simpson;

    fn direct_transform(xi: f64) -> Complex64 {
        let panels = 20_000 + (xi.abs() * 40.0) as usize;
        let re = composite_simpson(|x| phi(x) * (xi * x).cos(), 0.5, 1.0, panels);
        let im = composite_simpson(|x| -phi(x) * (xi * x).sin(), 0.5, 1.0, panels);
        Complex64::new(re, im)
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(0.75), 1.0);
        assert_eq!(phi(0.25), 0.0);
        assert!((phi(0.5625) - 0.5).abs() < 1e-15);
        assert_eq!(phi(0.5), 0.0);
        assert_eq!(phi(1.0), 0.0);
    }

    #[test]
    fn support_plateau_and_symmetry() {
        for k in 0..=10_000 {
            let y = -0.5 + 2.0 * k as f64 / 10_000.0;
            let v = phi(y);
            assert!((0.0..=1.0).contains(&v));
            if !(0.5..=1.0).contains(&y) {
                assert_eq!(v, 0.0);
            }
            if (0.625..=0.875).contains(&y) {
                assert_eq!(v, 1.0);
            }
            assert!((v - phi(1.5 - y)).abs() < 1e-12, "y={y}");
        }
    }

    #[test]
    fn phi_hat_zero_is_three_eighths() {
        let b = Bump::default();
        let v = b.phi_hat_zero().unwrap();
        assert!((0.25..=0.5).contains(&v));
        assert!((v - 0.375).abs() < 1e-12, "{v}");
    }

    #[test]
    fn transform_matches_direct_quadrature() {
        let b = Bump::default();
        for xi in [-37.0, -3.5, 0.7, 5.0, 64.0, 333.3, 2500.0] {
            let fast = b.phi_hat(xi).unwrap();
            let slow = direct_transform(xi);
            assert!((fast - slow).norm() < 1e-10, "xi={xi}: {fast} vs {slow}");
            assert!(fast.norm() <= b.phi_hat_zero().unwrap() + 1e-12);
        }
    }

    #[test]
    fn psi_second_matches_finite_differences() {
        let h = 1e-5;
        for s in [0.05, 0.2, 0.37, 0.5, 0.71, 0.93] {
            let fd = (psi(s + h) - 2.0 * psi(s) + psi(s - h)) / (h * h);
            assert!((psi_second(s) - fd).abs() < 1e-4 * (1.0 + fd.abs()), "s={s}");
        }
    }

    #[test]
    fn both_evaluation_routes_agree_near_threshold() {
        let b = Bump::default();
        for a in [6.0f64, 7.9, 8.1, 12.0] {
            let by_parts = b.compute_centered(a.max(PARTS_THRESHOLD));
            let direct = 2.0
                * ((a * 0.125f64).sin() / a
                    + RAMP_WIDTH
                        * composite_simpson(|s| psi(s) * (a * (0.25 - RAMP_WIDTH * s)).cos(), 0.0, 1.0, 20_000));
            if a >= PARTS_THRESHOLD {
                assert!((by_parts.unwrap() - direct).abs() < 1e-12, "a={a}");
            }
            assert!((b.centered_transform(a).unwrap() - direct).abs() < 1e-12, "a={a}");
        }
    }

    #[test]
    fn conjugate_symmetry() {
        let b = Bump::default();
        for xi in [0.3, 12.0, 150.0, 4321.0] {
            let p = b.phi_hat(xi).unwrap();
            let m = b.phi_hat(-xi).unwrap();
            assert!((p - m.conj()).norm() < 1e-12);
            assert!((p.norm() - m.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn tolerance_halving_is_consistent() {
        let coarse = Bump::new(1e-10);
        let fine = Bump::new(5e-11);
        for xi in [1.3, 47.0, 801.5, 9000.0] {
            let d = (coarse.phi_hat(xi).unwrap() - fine.phi_hat(xi).unwrap()).norm();
            assert!(d < 1e-10, "xi={xi}: {d}");
        }
    }

    #[test]
    fn negligible_at_cutoff() {
        let b = Bump::default();
        for (xi, below) in [(3000.0, 1e-14), (5000.0, 1e-17), (0.999 * TRANSFORM_CUTOFF, 1e-19)] {
            assert!(b.phi_hat(xi).unwrap().norm() < below, "xi={xi}");
        }
        assert_eq!(b.phi_hat(2.0 * TRANSFORM_CUTOFF).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn decay_constants() {
        let b = Bump::default();
        let phi0 = b.phi_hat_zero().unwrap();
        let grid: Vec<f64> = (1..=400).map(|k| 10f64.powf(1.0 + 3.0 * k as f64 / 400.0)).collect();
        assert!(b.decay_constant(0, &grid).unwrap() <= phi0 + 1e-12);
        let c3 = b.decay_constant(3, &grid).unwrap();
        assert!(c3.is_finite() && c3 > 0.0);
        for &xi in &grid {
            assert!(b.phi_hat(xi).unwrap().norm() <= c3 * xi.powi(-3) * (1.0 + 1e-12));
        }
        assert!(b.decay_constant(3, &[0.5]).is_err());
    }

    #[test]
    fn envelope_lattice_sum_dominates_direct_sum() {
        let b = Bump::default();
        let env = DecayEnvelope::measure(&b, 3).unwrap();
        for scale in [0.3, 1.0, 7.5, 100.0] {
            for k_max in [1.0, 10.0, 1000.0, 1e6] {
                let direct: f64 = (1..=(k_max as u64).min(100_000))
                    .map(|k| env.bound(scale * k as f64))
                    .sum();
                assert!(env.lattice_sum(scale, k_max) >= direct * (1.0 - 1e-12));
            }
        }
    }
}
