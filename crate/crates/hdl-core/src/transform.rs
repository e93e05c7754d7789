//! Change of variables between the Dirac-side and Laplace-side inequalities.
//!
//! For a potential `W` with `W/r^3` integrable at infinity,
//! `y(r) = 1 / ∫_r^∞ (s + W(s)) s^{-3} ds` is strictly increasing, and with
//! `q(y) = u(r(y))` the weighted radial inequalities
//!
//! `∫ r^3/(r+W) |u'|^2 dr >= ∫ W r |u|^2 dr`
//! `∫ y^2 |q'|^2 dy    >= ∫ V |q|^2 dy`
//!
//! transform into each other exactly, with
//! `V(y) = W r^4 / (y^2 (W + r))`. The module also carries the telescoping
//! substitution chain that peels one tower level at a time from
//! `∫ r^2 |u'|^2 dr`.

use crate::bump::ExpBump;
use crate::potential::{Potential, Tail};
use crate::quad::{bisect, simpson_log, trapezoid_log};
use crate::tower::LogTower;
use crate::{Error, Result};

/// Radius past which the declared tail form replaces numerical quadrature.
const SWITCH_RADIUS: f64 = 1e3;

fn tail_integral(tail: Tail, r: f64) -> f64 {
    match tail {
        // ∫_r^∞ (s + c) s^{-3} ds
        Tail::Constant(c) => 1.0 / r + c / (2.0 * r * r),
        // W ~ s + 1/(8s): ∫ (2 s + 1/(8s)) s^{-3} ds
        Tail::HardyLinear => 2.0 / r + 1.0 / (24.0 * r * r * r),
        // W = c s exactly
        Tail::Slope(c) => (1.0 + c) / r,
        // W = c s^p: ∫ (s + c s^p) s^{-3} ds
        Tail::Power { coeff, exponent } => {
            1.0 / r + coeff * r.powf(exponent - 2.0) / (2.0 - exponent)
        }
    }
}

/// Simpson over `[t0, t1]` split at interior kink positions, so one-sided
/// derivative jumps of the integrand do not degrade the order.
fn simpson_piecewise<G: Fn(f64) -> f64>(g: &G, t0: f64, t1: f64, kinks_t: &[f64]) -> f64 {
    let mut pts = vec![t0];
    for &k in kinks_t {
        if k > t0 + 1e-14 && k < t1 - 1e-14 {
            pts.push(k);
        }
    }
    pts.push(t1);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut acc = 0.0;
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        acc += (g(a) + 4.0 * g(0.5 * (a + b)) + g(b)) * (b - a) / 6.0;
    }
    acc
}

/// The map `r -> y` for one potential, with a cached cumulative integral and
/// a bisection inverse.
#[derive(Debug, Clone)]
pub struct VariableMap {
    potential: Potential,
    tail: Tail,
    /// cache nodes (log spaced on `[cache_lo, SWITCH_RADIUS]`)
    grid: Vec<f64>,
    /// `I(grid[i]) = ∫_{grid[i]}^∞ (s+W) s^{-3} ds`
    cum: Vec<f64>,
    /// kink positions in `t = log s`
    kinks_t: Vec<f64>,
}

impl VariableMap {
    pub fn new(potential: Potential) -> Result<Self> {
        let tail = potential.tail().ok_or(Error::TailDivergence)?;
        let cache_lo = 1e-12;
        let ppd = 1024usize;
        let decades = (SWITCH_RADIUS / cache_lo).log10();
        let n = (decades * ppd as f64).ceil() as usize + 1;
        let (tl, th) = (cache_lo.ln(), SWITCH_RADIUS.ln());
        let ht = (th - tl) / (n - 1) as f64;
        let grid: Vec<f64> = (0..n).map(|i| (tl + ht * i as f64).exp()).collect();
        // integrand of the tail integral in t = log s coordinates
        potential.eval(cache_lo)?;
        let g = |t: f64| {
            let s = t.exp();
            (s + potential.eval(s).unwrap()) / (s * s * s) * s
        };
        let kinks_t: Vec<f64> = potential.value_kinks().iter().map(|k| k.ln()).collect();
        let mut cum = vec![0.0; n];
        cum[n - 1] = tail_integral(tail, SWITCH_RADIUS);
        // per-cell Simpson accumulated right to left, split at kinks
        for i in (0..n - 1).rev() {
            let t0 = tl + ht * i as f64;
            cum[i] = cum[i + 1] + simpson_piecewise(&g, t0, t0 + ht, &kinks_t);
        }
        Ok(Self {
            potential,
            tail,
            grid,
            cum,
            kinks_t,
        })
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    /// `∫_r^∞ (s + W) s^{-3} ds`.
    fn tail_from(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::Domain {
                s: r,
                domain_end: f64::INFINITY,
            });
        }
        if r >= SWITCH_RADIUS {
            return Ok(tail_integral(self.tail, r));
        }
        let lo = self.grid[0];
        if r < lo {
            // rare: extend below the cache numerically
            let head = simpson_log(
                |s| (s + self.potential.eval(s).unwrap()) / (s * s * s),
                r,
                lo,
                2048,
            );
            return Ok(head + self.cum[0]);
        }
        // locate the cell and integrate the partial piece by Simpson
        let t = r.ln();
        let tl = self.grid[0].ln();
        let ht = (SWITCH_RADIUS.ln() - tl) / (self.grid.len() - 1) as f64;
        let i = (((t - tl) / ht).floor() as usize).min(self.grid.len() - 2);
        let t1 = tl + ht * (i + 1) as f64;
        let g = |u: f64| {
            let s = u.exp();
            (s + self.potential.eval(s).unwrap()) / (s * s * s) * s
        };
        let partial = if t1 > t {
            simpson_piecewise(&g, t, t1, &self.kinks_t)
        } else {
            0.0
        };
        Ok(self.cum[i + 1] + partial)
    }

    /// `y(r)`.
    pub fn y_of_r(&self, r: f64) -> Result<f64> {
        Ok(1.0 / self.tail_from(r)?)
    }

    /// Inverse map by monotone bisection on the cached integral.
    pub fn r_of_y(&self, y: f64) -> Result<f64> {
        let lo = self.grid[0];
        let hi = 1e6;
        let f = |r: f64| self.y_of_r(r).unwrap() - y;
        if f(lo) > 0.0 || f(hi) < 0.0 {
            return Err(Error::InversionRange { y });
        }
        bisect(f, lo, hi, 1e-13)
    }

    /// `V(y) = W(r) r^4 / (y^2 (W(r) + r))` with `r = r(y)`.
    pub fn v_of_y(&self, y: f64) -> Result<f64> {
        let r = self.r_of_y(y)?;
        let w = self.potential.eval(r)?;
        Ok(w * r.powi(4) / (y * y * (w + r)))
    }

    /// The algebraically equal second form
    /// `V = W/(W+r) ( ∫_1^∞ (t r + W(t r)) t^{-3} dt )^2`, with the inner
    /// integral quadratured independently in the `t` variable.
    pub fn v_of_y_second_form(&self, y: f64) -> Result<f64> {
        let r = self.r_of_y(y)?;
        let w = self.potential.eval(r)?;
        let t_switch = (SWITCH_RADIUS / r).max(2.0);
        let g = |u: f64| {
            let t = u.exp();
            (t * r + self.potential.eval(t * r).unwrap()) / (t * t * t) * t
        };
        let kinks_u: Vec<f64> = self.kinks_t.iter().map(|k| k - r.ln()).collect();
        let uh = t_switch.ln();
        let cells = ((uh / std::f64::consts::LN_10) * 1024.0).ceil() as usize;
        let hu = uh / cells as f64;
        let mut inner = 0.0;
        for i in 0..cells {
            inner += simpson_piecewise(&g, hu * i as f64, hu * (i + 1) as f64, &kinks_u);
        }
        inner += r * r * tail_integral(self.tail, t_switch * r);
        Ok(w / (w + r) * inner * inner)
    }
}

/// Both sides of the two equivalent inequalities for one test function.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct EquivalenceReport {
    pub lhs23: f64,
    pub rhs23: f64,
    #[serde(rename = "lhsAA2")]
    pub lhs_aa2: f64,
    #[serde(rename = "rhsAA2")]
    pub rhs_aa2: f64,
    pub rel_mismatch: f64,
}

/// Composite trapezoid on a log grid, split at known kink radii so the
/// derivative jumps of the built-in potentials do not pollute the order.
fn trapezoid_log_split<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    points_per_decade: usize,
    kinks: &[f64],
) -> f64 {
    let mut cuts = vec![lo];
    for &k in kinks {
        if k > lo * (1.0 + 1e-12) && k < hi * (1.0 - 1e-12) {
            cuts.push(k);
        }
    }
    cuts.push(hi);
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.windows(2)
        .map(|w| trapezoid_log(&f, w[0], w[1], points_per_decade))
        .sum()
}

/// Evaluate the four integrals on independent `r`- and `y`-grids.
///
/// Trapezoid quadrature on log-uniform grids keeps the mismatch decaying at
/// (at least) second order under refinement.
pub fn equivalence_check(
    map: &VariableMap,
    u: &ExpBump,
    points_per_decade: usize,
) -> Result<EquivalenceReport> {
    if !(u.lo > 0.0) {
        return Err(Error::SupportViolation {
            r: u.lo,
            value: u.eval(u.lo),
        });
    }
    let w = |r: f64| map.potential().eval(r).unwrap();
    let kinks_r = map.potential().value_kinks();
    let lhs23 = trapezoid_log_split(
        |r| r * r * r / (r + w(r)) * u.deriv(r).powi(2),
        u.lo,
        u.hi,
        points_per_decade,
        &kinks_r,
    );
    let rhs23 = trapezoid_log_split(
        |r| w(r) * r * u.eval(r).powi(2),
        u.lo,
        u.hi,
        points_per_decade,
        &kinks_r,
    );
    // y-side on its own grid; q(y) = u(r(y)), q' = u'(r) r^3/(y^2 (r+W))
    let y_lo = map.y_of_r(u.lo)?;
    let y_hi = map.y_of_r(u.hi)?;
    let kinks_y: Vec<f64> = kinks_r
        .iter()
        .filter(|&&k| k > u.lo && k < u.hi)
        .map(|&k| map.y_of_r(k).unwrap())
        .collect();
    let q_sq = |y: f64| {
        let r = map.r_of_y(y).unwrap();
        u.eval(r).powi(2)
    };
    let qprime_sq = |y: f64| {
        let r = map.r_of_y(y).unwrap();
        let dr_dy = r * r * r / (y * y * (r + w(r)));
        (u.deriv(r) * dr_dy).powi(2)
    };
    let lhs_aa2 = trapezoid_log_split(
        |y| y * y * qprime_sq(y),
        y_lo,
        y_hi,
        points_per_decade,
        &kinks_y,
    );
    let rhs_aa2 = trapezoid_log_split(
        |y| map.v_of_y(y).unwrap() * q_sq(y),
        y_lo,
        y_hi,
        points_per_decade,
        &kinks_y,
    );
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    Ok(EquivalenceReport {
        lhs23,
        rhs23,
        lhs_aa2,
        rhs_aa2,
        rel_mismatch: rel(lhs23, lhs_aa2).max(rel(rhs23, rhs_aa2)),
    })
}

/// Both sides of the level-`k` telescoped identity.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct TelescopeReport {
    pub lhs: f64,
    pub rhs: f64,
    pub tower_term: f64,
    pub remainder: f64,
    pub rel_gap: f64,
}

/// Verify `∫_0^R r^2 |u'|^2 dr = (1/4) ∫ (1 + Σ_{j<=k} pi_j^2) |u|^2 dr
/// + ∫ |g'_{k+1}|^2 dt` for a test bump supported in `(0, R)`.
///
/// The remainder is evaluated in the original variable, where the chain of
/// substitutions collapses to
/// `∫ r^2 [u' + (1 + sigma_k) u / (2r)]^2 dr`.
pub fn telescope(
    tower: &LogTower,
    u: &ExpBump,
    k: usize,
    r_cap: f64,
    points_per_decade: usize,
) -> Result<TelescopeReport> {
    if k > tower.max_depth() {
        return Err(Error::Depth {
            k,
            max_depth: tower.max_depth(),
        });
    }
    if !(u.hi <= r_cap) {
        return Err(Error::SupportViolation {
            r: u.hi,
            value: u.eval(u.hi * 0.999),
        });
    }
    if !(r_cap < tower.a().exp()) {
        return Err(Error::Domain {
            s: r_cap,
            domain_end: tower.a().exp(),
        });
    }
    let lhs = simpson_log(
        |r| r * r * u.deriv(r).powi(2),
        u.lo,
        u.hi,
        points_per_decade,
    );
    let tower_term = simpson_log(
        |r| {
            // 1 + sum_{j<=k} pi_j^2 accumulated level by level
            let mut sum = 1.0;
            let mut pi = 1.0;
            let mut t = r.ln();
            for _ in 0..k {
                let x = tower.x1_log(t);
                t = x.ln();
                pi *= x;
                sum += pi * pi;
            }
            0.25 * sum * u.eval(r).powi(2)
        },
        u.lo,
        u.hi,
        points_per_decade,
    );
    let remainder = simpson_log(
        |r| {
            let sigma = tower.sigma_pi(r, k).unwrap().sigma;
            let val = u.deriv(r) + (1.0 + sigma) * u.eval(r) / (2.0 * r);
            r * r * val * val
        },
        u.lo,
        u.hi,
        points_per_decade,
    );
    let rhs = tower_term + remainder;
    Ok(TelescopeReport {
        lhs,
        rhs,
        tower_term,
        remainder,
        rel_gap: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tower() -> LogTower {
        LogTower::new(5.0).unwrap()
    }

    #[test]
    fn y_equals_r_without_potential() {
        let map = VariableMap::new(Potential::Constant(0.0)).unwrap();
        for &r in &[1e-3, 0.1, 1.0, 40.0] {
            let y = map.y_of_r(r).unwrap();
            assert!((y - r).abs() < 1e-9 * r, "y({r}) = {y}");
        }
    }

    #[test]
    fn y_closed_form_constant_potential() {
        // W == c: y = 2 r^2 / (2 r + c)
        let map = VariableMap::new(Potential::Constant(2.0)).unwrap();
        for &r in &[0.05, 1.0, 12.0] {
            let y = map.y_of_r(r).unwrap();
            let closed = 2.0 * r * r / (2.0 * r + 2.0);
            assert!((y - closed).abs() < 1e-9 * closed);
        }
        assert!((map.y_of_r(1.0).unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn y_monotone_for_w2() {
        let map = VariableMap::new(Potential::w2().unwrap()).unwrap();
        let mut prev = 0.0;
        let mut r = 1e-4;
        while r < 500.0 {
            let y = map.y_of_r(r).unwrap();
            assert!(y > prev, "y not increasing at r = {r}");
            prev = y;
            r *= 1.7;
        }
    }

    #[test]
    fn roundtrip_inverse() {
        let map = VariableMap::new(Potential::w2().unwrap()).unwrap();
        for &r in &[1e-3, 0.2, 3.0, 90.0] {
            let y = map.y_of_r(r).unwrap();
            let y2 = map.y_of_r(map.r_of_y(y).unwrap()).unwrap();
            assert!((y2 - y).abs() < 1e-10 * y.max(1.0), "roundtrip at r = {r}");
        }
    }

    #[test]
    fn v_values() {
        // W == 0 gives V == 0
        let zero = VariableMap::new(Potential::Constant(0.0)).unwrap();
        let y = zero.y_of_r(1.0).unwrap();
        assert!(zero.v_of_y(y).unwrap().abs() < 1e-12);
        // W == 1 at r = 1: y = 2/3, V = 9/8
        let one = VariableMap::new(Potential::One).unwrap();
        let y1 = one.y_of_r(1.0).unwrap();
        assert!((y1 - 2.0 / 3.0).abs() < 1e-9);
        assert!((one.v_of_y(y1).unwrap() - 1.125).abs() < 1e-8);
    }

    #[test]
    fn v_second_form_agrees() {
        let map = VariableMap::new(Potential::w2().unwrap()).unwrap();
        for &r in &[0.01, 0.5, 5.0] {
            let y = map.y_of_r(r).unwrap();
            let a = map.v_of_y(y).unwrap();
            let b = map.v_of_y_second_form(y).unwrap();
            assert!(
                (a - b).abs() < 1e-10 * a.abs().max(1.0),
                "r = {r}: {a} vs {b}"
            );
        }
    }

    #[test]
    fn v_exceeds_quarter_for_tower_potential() {
        // V(y) - 1/4 > 0 and decreasing toward 0 at the origin
        let map = VariableMap::new(Potential::tower_optimal(tower())).unwrap();
        let mut prev = f64::INFINITY;
        for &r in &[1e-2, 1e-4, 1e-6, 1e-8] {
            let y = map.y_of_r(r).unwrap();
            let v = map.v_of_y(y).unwrap();
            assert!(v > 0.25, "V = {v} at r = {r}");
            assert!(v - 0.25 < prev);
            prev = v - 0.25;
        }
        assert!(prev < 0.02);
    }

    #[test]
    fn equivalence_for_unit_potential() {
        let map = VariableMap::new(Potential::One).unwrap();
        let bump = ExpBump::new(0.05, 1.0);
        let rep = equivalence_check(&map, &bump, 512).unwrap();
        assert!(rep.rel_mismatch < 1e-6, "mismatch {:.3e}", rep.rel_mismatch);
        assert!(rep.lhs23 > 0.0 && rep.rhs23 > 0.0);
    }

    #[test]
    fn equivalence_zero_function() {
        let map = VariableMap::new(Potential::One).unwrap();
        let bump = ExpBump {
            lo: 0.1,
            hi: 1.0,
            amp: 0.0,
        };
        let rep = equivalence_check(&map, &bump, 128).unwrap();
        assert_eq!(rep.lhs23, 0.0);
        assert_eq!(rep.rhs_aa2, 0.0);
    }

    #[test]
    fn equivalence_second_order_refinement() {
        let map = VariableMap::new(Potential::One).unwrap();
        let bump = ExpBump::new(0.05, 1.0);
        let coarse = equivalence_check(&map, &bump, 64).unwrap().rel_mismatch;
        let fine = equivalence_check(&map, &bump, 128).unwrap().rel_mismatch;
        let finest = equivalence_check(&map, &bump, 256).unwrap().rel_mismatch;
        // two halvings should buy roughly a factor 16
        assert!(
            coarse / finest > 8.0,
            "refinement gain {:.2} ({coarse:.3e} -> {finest:.3e})",
            coarse / finest
        );
        assert!(fine < coarse);
    }

    #[test]
    fn telescope_identity() {
        let t = tower();
        let bump = ExpBump::new(0.02, 0.9);
        for k in 1..=3 {
            let rep = telescope(&t, &bump, k, 1.0, 512).unwrap();
            assert!(rep.rel_gap < 1e-5, "k = {k}: gap {:.3e}", rep.rel_gap);
            assert!(rep.remainder >= 0.0);
        }
    }

    #[test]
    fn telescope_quadratic_scaling() {
        let t = tower();
        let bump = ExpBump::new(0.02, 0.9);
        let one = telescope(&t, &bump, 2, 1.0, 256).unwrap();
        let scaled = telescope(&t, &ExpBump { amp: 3.0, ..bump }, 2, 1.0, 256).unwrap();
        assert!((scaled.lhs / one.lhs - 9.0).abs() < 1e-10);
        assert!((scaled.rhs / one.rhs - 9.0).abs() < 1e-10);
    }

    #[test]
    fn telescope_support_checks() {
        let t = tower();
        let bump = ExpBump::new(0.5, 2.0);
        assert!(matches!(
            telescope(&t, &bump, 1, 1.0, 128),
            Err(Error::SupportViolation { .. })
        ));
        assert!(matches!(
            telescope(&t, &bump, 99, 3.0, 128),
            Err(Error::Depth { .. })
        ));
        let too_big = ExpBump::new(1.0, 200.0);
        assert!(matches!(
            telescope(&t, &too_big, 1, 300.0, 128),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn bar_envelope_has_no_declared_tail() {
        assert!(VariableMap::new(Potential::BarEnvelope { tower: tower() }).is_err());
    }
}
