//! Globally adaptive 15-point Gauss-Kronrod quadrature for smooth real integrands.

use crate::error::{Error, Result};
use crate::sum::sum_f64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Value and estimated absolute error of an integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// One Kronrod panel: (integral, error estimate).
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut res_g = fc * WG[3];
    let mut res_k = fc * WGK[7];
    let mut res_abs = res_k.abs();
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv1[j] = f1;
        fv2[j] = f2;
        res_k += WGK[j] * (f1 + f2);
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            res_g += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * res_k;
    let mut res_asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = res_k * half;
    let res_abs = res_abs * half.abs();
    let res_asc = res_asc * half.abs();
    let mut err = ((res_k - res_g) * half).abs();
    // QUADPACK error rescaling
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * (200.0 * err / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Tolerances and limits for [`Integrator::integrate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for Integrator {
    fn default() -> Self {
        Self {
            abs_tol: 1e-12,
            rel_tol: 0.0,
            max_panels: 200_000,
        }
    }
}

impl Integrator {
    pub fn absolute(abs_tol: f64) -> Self {
        Self {
            abs_tol,
            ..Self::default()
        }
    }

    pub fn relative(rel_tol: f64) -> Self {
        Self {
            abs_tol: 0.0,
            rel_tol,
            ..Self::default()
        }
    }

    pub fn with_max_panels(mut self, max_panels: usize) -> Self {
        self.max_panels = max_panels;
        self
    }

    /// Integrates `f` over `[a, b]`, starting from `initial_panels` equal
    /// panels (use roughly one per oscillation for oscillatory integrands)
    /// and bisecting the worst panel until the total error estimate meets
    /// `max(abs_tol, rel_tol * |value|)`.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64, initial_panels: usize) -> Result<Estimate> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::invalid("integration bounds must be finite"));
        }
        if a == b {
            return Ok(Estimate {
                value: 0.0,
                error: 0.0,
                intervals: 0,
            });
        }
        let panels = initial_panels.clamp(1, self.max_panels);
        let width = (b - a) / panels as f64;
        let mut heap = BinaryHeap::with_capacity(panels * 2);
        let mut total = 0.0;
        let mut total_err = 0.0;
        for k in 0..panels {
            let lo = a + width * k as f64;
            let hi = if k + 1 == panels { b } else { a + width * (k + 1) as f64 };
            let (v, e) = gk15(&f, lo, hi);
            total += v;
            total_err += e;
            heap.push(Panel {
                a: lo,
                b: hi,
                value: v,
                error: e,
            });
        }

        loop {
            let target = self.abs_tol.max(self.rel_tol * total.abs());
            if total_err <= target {
                break;
            }
            if heap.len() >= self.max_panels {
                return Err(Error::NumericalFailure {
                    message: format!(
                        "adaptive quadrature on [{a}, {b}] did not reach {target:e} within {} panels",
                        self.max_panels
                    ),
                    achieved_error: total_err,
                });
            }
            let worst = heap.pop().expect("nonempty");
            let mid = 0.5 * (worst.a + worst.b);
            if mid <= worst.a || mid >= worst.b {
                // panel at roundoff width; nothing left to gain
                heap.push(worst);
                break;
            }
            let (v1, e1) = gk15(&f, worst.a, mid);
            let (v2, e2) = gk15(&f, mid, worst.b);
            total += v1 + v2 - worst.value;
            total_err += e1 + e2 - worst.error;
            heap.push(Panel {
                a: worst.a,
                b: mid,
                value: v1,
                error: e1,
            });
            heap.push(Panel {
                a: mid,
                b: worst.b,
                value: v2,
                error: e2,
            });
        }

        // Re-sum in interval order so the result does not depend on heap history.
        let mut panels: Vec<Panel> = heap.into_vec();
        panels.sort_by(|x, y| x.a.total_cmp(&y.a));
        let value = sum_f64(panels.iter().map(|p| p.value));
        let error = sum_f64(panels.iter().map(|p| p.error));
        Ok(Estimate {
            value,
            error,
            intervals: panels.len(),
        })
    }
}

/// Composite Simpson rule with `panels` (rounded up to even) equal panels.
pub fn composite_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let n = (panels.max(2) + 1) & !1;
    let h = (b - a) / n as f64;
    let mut acc = crate::sum::CompensatedSum::new();
    acc.add(f(a));
    acc.add(f(b));
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc.add(w * f(a + h * k as f64));
    }
    acc.value() * h / 3.0
}
