//! Smooth compactly supported test functions.
//!
//! Two families: `C^∞` exponential bumps with analytically known derivatives
//! for the change-of-variables and telescoping checks, and a seeded
//! polynomial-times-Gaussian corpus for reproducible inequality sweeps.

use crate::grid::GridFunction;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `C^∞` bump `amp * exp(-1/(x(1-x)))` with `x = (r-lo)/(hi-lo)`.
#[derive(Debug, Clone, Copy)]
pub struct ExpBump {
    pub lo: f64,
    pub hi: f64,
    pub amp: f64,
}

impl ExpBump {
    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi, amp: 1.0 }
    }

    pub fn eval(&self, r: f64) -> f64 {
        let x = (r - self.lo) / (self.hi - self.lo);
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        self.amp * (-1.0 / (x * (1.0 - x))).exp()
    }

    pub fn deriv(&self, r: f64) -> f64 {
        let w = self.hi - self.lo;
        let x = (r - self.lo) / w;
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        let g = x * (1.0 - x);
        // d/dx exp(-1/g) = exp(-1/g) * g'/g^2, g' = 1 - 2x
        self.amp * (-1.0 / g).exp() * (1.0 - 2.0 * x) / (g * g) / w
    }

    pub fn to_grid_function(&self, grid: &[f64]) -> crate::Result<GridFunction> {
        GridFunction::sample(
            grid.to_vec(),
            |r| self.eval(r),
            Some(|r| self.deriv(r)),
            true,
        )
    }
}

/// Polynomial-squared × Gaussian bump, `C^1` at the support ends and smooth
/// inside; closed-form derivative.
#[derive(Debug, Clone, Copy)]
pub struct PolyGaussBump {
    pub lo: f64,
    pub hi: f64,
    pub center: f64,
    pub width: f64,
    pub amp: f64,
}

impl PolyGaussBump {
    pub fn eval(&self, r: f64) -> f64 {
        if r <= self.lo || r >= self.hi {
            return 0.0;
        }
        let p = (r - self.lo) * (self.hi - r);
        let z = (r - self.center) / self.width;
        self.amp * p * p * (-z * z).exp()
    }

    pub fn deriv(&self, r: f64) -> f64 {
        if r <= self.lo || r >= self.hi {
            return 0.0;
        }
        let p = (r - self.lo) * (self.hi - r);
        let dp = (self.hi - r) - (r - self.lo);
        let z = (r - self.center) / self.width;
        let e = (-z * z).exp();
        self.amp * e * (2.0 * p * dp - p * p * 2.0 * z / self.width)
    }

    pub fn to_grid_function(&self, grid: &[f64]) -> crate::Result<GridFunction> {
        GridFunction::sample(
            grid.to_vec(),
            |r| self.eval(r),
            Some(|r| self.deriv(r)),
            true,
        )
    }
}

/// Deterministic corpus of `count` bumps with supports inside
/// `[support_lo, support_hi]` (log-uniform placement).
pub fn seeded_corpus(
    seed: u64,
    count: usize,
    support_lo: f64,
    support_hi: f64,
) -> Vec<PolyGaussBump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (tl, th) = (support_lo.ln(), support_hi.ln());
    (0..count)
        .map(|_| {
            let t0 = rng.gen_range(tl..th - 0.2);
            let t1 = rng.gen_range(t0 + 0.1..(t0 + 3.0).min(th));
            let lo = t0.exp();
            let hi = t1.exp();
            let center = lo + (hi - lo) * rng.gen_range(0.25..0.75);
            let width = (hi - lo) * rng.gen_range(0.15..0.6);
            // normalize away the (hi-lo)^4 scale so amplitudes stay O(1)
            let amp = rng.gen_range(0.5..2.0) / ((hi - lo) / 2.0).powi(4);
            PolyGaussBump {
                lo,
                hi,
                center,
                width,
                amp,
            }
        })
        .collect()
}
