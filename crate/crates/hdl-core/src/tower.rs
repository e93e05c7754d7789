//! The iterated-logarithm tower `X_k` and the series built from it.
//!
//! `X_1(s) = 1/(a - log s)` for `a > 1`, `X_{k+1} = X_1 ∘ X_k`. On
//! `(0, e^{a-1})` every `X_k` takes values in `(0, 1)`, the products
//! `pi_k = X_1 ... X_k` decay at least geometrically, and the series
//!
//! * `W_inf(s) = 1 + (1/8) Σ pi_k(s)^2`   (the optimal potential near 0)
//! * `nbar(s)  = (1/2) Σ pi_k(s)`         (the multiplier generator)
//!
//! converge with easily bounded tails. The exact differential identities
//!
//! * `s X_1' = X_1^2`
//! * `s pi_k' = pi_k sigma_k`
//! * `2 s sigma_k' - sigma_k^2 = Σ_{j<=k} pi_j^2`
//! * `s nbar' - nbar^2 = 2 (W_inf - 1)`
//!
//! are used throughout for derivative evaluation free of differencing noise.

use crate::{Error, Result};

/// Parameters of the tower: the constant `a`, the derived domain end
/// `e^{a-1}`, the relative tail cutoff and the depth cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogTower {
    a: f64,
    domain_end: f64,
    trunc_tol: f64,
    max_depth: usize,
}

/// One tower sample: `X_k(s)`, the running product `pi_k` and sum `sigma_k`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TowerValue {
    pub s: f64,
    pub depth: usize,
    pub x: f64,
    pub pi: f64,
    pub sigma: f64,
}

/// One-pass evaluation of every series the tower generates.
///
/// `sum_pi` feeds `nbar`, `sum_pi_sq` feeds `W_inf`, and the
/// `sigma`-weighted sums feed the exact derivatives `nbar'` and `W_inf'`.
#[derive(Debug, Clone, Copy)]
pub struct TowerSeries {
    pub sum_pi: f64,
    pub sum_pi_sq: f64,
    pub sum_pi_sigma: f64,
    pub sum_pi_sq_sigma: f64,
    pub depth: usize,
}

impl LogTower {
    pub const DEFAULT_TRUNC_TOL: f64 = 1e-14;
    pub const DEFAULT_MAX_DEPTH: usize = 64;

    /// Tower with constant `a` and default truncation parameters.
    pub fn new(a: f64) -> Result<Self> {
        Self::with_params(a, Self::DEFAULT_TRUNC_TOL, Self::DEFAULT_MAX_DEPTH)
    }

    pub fn with_params(a: f64, trunc_tol: f64, max_depth: usize) -> Result<Self> {
        if !(a > 1.0) || !a.is_finite() {
            return Err(Error::InvalidParameter(format!("a = {a} must be > 1")));
        }
        if !(trunc_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "trunc_tol = {trunc_tol} must be > 0"
            )));
        }
        if max_depth < 1 {
            return Err(Error::InvalidParameter("max_depth must be >= 1".into()));
        }
        Ok(Self {
            a,
            domain_end: (a - 1.0).exp(),
            trunc_tol,
            max_depth,
        })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// Upper endpoint of validity, `e^{a-1}` exactly.
    pub fn domain_end(&self) -> f64 {
        self.domain_end
    }

    pub fn trunc_tol(&self) -> f64 {
        self.trunc_tol
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    fn check_domain(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) || !(s < self.domain_end) || !s.is_finite() {
            return Err(Error::Domain {
                s,
                domain_end: self.domain_end,
            });
        }
        Ok(s.ln())
    }

    /// `X_1(s) = 1/(a - log s)`, in `(0, 1)` on the domain.
    pub fn x1(&self, s: f64) -> Result<f64> {
        let t = self.check_domain(s)?;
        Ok(self.x1_log(t))
    }

    /// `X_1` as a function of `t = log s`; valid for every `t < a - 1`.
    ///
    /// Evaluating from the logarithm keeps the tower usable far below the
    /// underflow threshold of `s` itself.
    pub fn x1_log(&self, t: f64) -> f64 {
        1.0 / (self.a - t)
    }

    /// `X_k(s)` by `k`-fold composition.
    pub fn xk(&self, s: f64, k: usize) -> Result<f64> {
        let t = self.check_domain(s)?;
        self.xk_log(t, k)
    }

    /// `X_k` from `t = log s`.
    pub fn xk_log(&self, t: f64, k: usize) -> Result<f64> {
        if k < 1 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if k > self.max_depth {
            return Err(Error::Depth {
                k,
                max_depth: self.max_depth,
            });
        }
        let mut x = self.x1_log(t);
        for _ in 1..k {
            x = self.x1_log(x.ln());
        }
        Ok(x)
    }

    /// `X_k`, `pi_k`, `sigma_k` in one pass.
    pub fn sigma_pi(&self, s: f64, k: usize) -> Result<TowerValue> {
        let t = self.check_domain(s)?;
        if k < 1 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if k > self.max_depth {
            return Err(Error::Depth {
                k,
                max_depth: self.max_depth,
            });
        }
        let mut x = self.x1_log(t);
        let mut pi = x;
        let mut sigma = x;
        for _ in 1..k {
            x = self.x1_log(x.ln());
            pi *= x;
            sigma += pi;
        }
        Ok(TowerValue {
            s,
            depth: k,
            x,
            pi,
            sigma,
        })
    }

    /// All convergent series in one sweep, truncated when the next term is
    /// below `trunc_tol` relative to the running sums.
    pub fn series(&self, s: f64) -> Result<TowerSeries> {
        let t = self.check_domain(s)?;
        self.series_log(t)
    }

    /// Series evaluation from `t = log s` (valid for any `t < a - 1`).
    pub fn series_log(&self, t: f64) -> Result<TowerSeries> {
        if !(t < self.a - 1.0) {
            return Err(Error::Domain {
                s: t.exp(),
                domain_end: self.domain_end,
            });
        }
        let mut x = self.x1_log(t);
        let mut pi = x;
        let mut sigma = x;
        let mut sum_pi = pi;
        let mut sum_pi_sq = pi * pi;
        let mut sum_pi_sigma = pi * sigma;
        let mut sum_pi_sq_sigma = pi * pi * sigma;
        for depth in 1..=self.max_depth {
            // pi_k decays like (s*)^k with s* = the fixed point of X_1 in
            // (0,1), so both tails shrink at least geometrically.
            if pi < self.trunc_tol * sum_pi && pi * pi < self.trunc_tol * sum_pi_sq {
                return Ok(TowerSeries {
                    sum_pi,
                    sum_pi_sq,
                    sum_pi_sigma,
                    sum_pi_sq_sigma,
                    depth,
                });
            }
            x = self.x1_log(x.ln());
            pi *= x;
            sigma += pi;
            sum_pi += pi;
            sum_pi_sq += pi * pi;
            sum_pi_sigma += pi * sigma;
            sum_pi_sq_sigma += pi * pi * sigma;
        }
        Err(Error::NonConvergence {
            max_depth: self.max_depth,
        })
    }

    /// Optimal potential `W_inf(s) = 1 + (1/8) Σ pi_k^2 >= 1`.
    pub fn w_infinity(&self, s: f64) -> Result<f64> {
        Ok(1.0 + self.series(s)?.sum_pi_sq / 8.0)
    }

    /// `W_inf` from `t = log s`.
    pub fn w_infinity_log(&self, t: f64) -> Result<f64> {
        Ok(1.0 + self.series_log(t)?.sum_pi_sq / 8.0)
    }

    /// Exact derivative `W_inf'(s) = Σ pi_j^2 sigma_j / (4 s)`.
    pub fn w_infinity_prime(&self, s: f64) -> Result<f64> {
        Ok(self.series(s)?.sum_pi_sq_sigma / (4.0 * s))
    }

    /// Multiplier generator `nbar(s) = (1/2) Σ pi_j > 0`.
    pub fn nbar(&self, s: f64) -> Result<f64> {
        Ok(self.series(s)?.sum_pi / 2.0)
    }

    /// `nbar` from `t = log s`.
    pub fn nbar_log(&self, t: f64) -> Result<f64> {
        Ok(self.series_log(t)?.sum_pi / 2.0)
    }

    /// `nbar'` through the exact identity `s nbar' = nbar^2 + 2 (W_inf - 1)`.
    pub fn nbar_prime(&self, s: f64) -> Result<f64> {
        let series = self.series(s)?;
        let nbar = series.sum_pi / 2.0;
        Ok((nbar * nbar + series.sum_pi_sq / 4.0) / s)
    }

    /// `nbar'` by termwise differentiation, `s pi_k' = pi_k sigma_k`.
    ///
    /// Independent of [`Self::nbar_prime`]; the two agreeing is the series
    /// form of the identity `s nbar' - nbar^2 = 2 (W_inf - 1)`.
    pub fn nbar_prime_series(&self, s: f64) -> Result<f64> {
        Ok(self.series(s)?.sum_pi_sigma / (2.0 * s))
    }

    /// Level-`k` partial sum `Σ_{j<=k} pi_j^2` from `t = log s`.
    pub fn partial_pi_sq_log(&self, t: f64, k: usize) -> Result<f64> {
        if k > self.max_depth {
            return Err(Error::Depth {
                k,
                max_depth: self.max_depth,
            });
        }
        let mut pi = 1.0;
        let mut tv = t;
        let mut sum = 0.0;
        for _ in 0..k {
            let x = self.x1_log(tv);
            tv = x.ln();
            pi *= x;
            sum += pi * pi;
        }
        Ok(sum)
    }
}
