//! Discretized quadratic forms and Rayleigh quotients on radial channels.
//!
//! A two-spinor attached to the spin-orbit eigenvalue `n` contributes the
//! channel form
//!
//! `∫ r^3/(r+W) |v'|^2 dr
//!  + ∫ ((n^2+2n)(r+W) - (1+W') r n) r / (r+W)^2 |v|^2 dr`
//!
//! (radial measure `r^2 dr`; the `4π` factor is dropped consistently on both
//! sides of every inequality, and sphere integrals reduce to
//! `R^2 |v(R)|^2`). Under the derivative-growth condition
//! `-r <= r W' <= 3W + 2r` every `n != 0` channel dominates the `n = 0`
//! one, which carries the optimizers.
//!
//! Discrete sharp constants come from P1 Rayleigh quotients: conforming
//! elements keep the discrete minimum above the continuum infimum, and on a
//! log grid of range `L` the minimum sits at `inf + pi^2/L^2` up to
//! discretization error.

use crate::bump::ExpBump;
use crate::eigen::{assemble_p1, smallest_eigenpair, Tridiag};
use crate::grid::{log_grid_ppd, GridFunction};
use crate::potential::{ChannelSign, MultiplierPair, Potential};
use crate::quad::{simpson_log, trapezoid};
use crate::tower::LogTower;
use crate::{Error, Result};

/// Spin-orbit channel index; `n = -1` is excluded (the shifted spin-orbit
/// operator has no kernel).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Channel(i32);

impl Channel {
    pub fn new(n: i32) -> Result<Self> {
        if n == -1 {
            return Err(Error::InvalidParameter(
                "n = -1 is not a spin-orbit eigenvalue".into(),
            ));
        }
        Ok(Channel(n))
    }

    pub fn n(&self) -> i32 {
        self.0
    }

    /// The channel carrying the optimizers.
    pub fn ground() -> Self {
        Channel(0)
    }

    /// The extremal negative channel.
    pub fn negative_ground() -> Self {
        Channel(-2)
    }
}

/// Value of a quadratic form or quotient with grid metadata.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FormReport {
    pub value: f64,
    pub quotient: Option<f64>,
    pub grid_size: usize,
    /// `(h, value)` pairs from refinement passes, when available.
    pub refinement_history: Vec<(f64, f64)>,
    pub channel: i32,
    /// Set when finite differences of `W'` disagree with the analytic
    /// derivative away from declared jumps.
    pub smoothness_warning: bool,
}

fn gradient_integral<F: Fn(f64) -> f64>(v: &GridFunction, weight: F) -> f64 {
    match &v.dv {
        Some(dv) => {
            let y: Vec<f64> = v
                .r
                .iter()
                .zip(dv.iter())
                .map(|(&r, &d)| weight(r) * d * d)
                .collect();
            trapezoid(&v.r, &y)
        }
        None => {
            // cell-midpoint form, the P1 gradient energy
            let mut acc = 0.0;
            for i in 1..v.r.len() {
                let h = v.r[i] - v.r[i - 1];
                let slope = (v.v[i] - v.v[i - 1]) / h;
                acc += weight(0.5 * (v.r[i] + v.r[i - 1])) * slope * slope * h;
            }
            acc
        }
    }
}

fn value_integral<F: Fn(f64) -> f64>(v: &GridFunction, weight: F) -> f64 {
    let y: Vec<f64> = v
        .r
        .iter()
        .zip(v.v.iter())
        .map(|(&r, &val)| weight(r) * val * val)
        .collect();
    trapezoid(&v.r, &y)
}

/// The channel quadratic form for a Dirichlet test function.
pub fn dirac_channel_form(
    potential: &Potential,
    channel: Channel,
    v: &GridFunction,
) -> Result<FormReport> {
    if !v.dirichlet {
        return Err(Error::SupportViolation {
            r: v.r[0],
            value: v.v[0],
        });
    }
    let n = channel.n() as f64;
    let w = |r: f64| potential.eval(r).unwrap();
    let kinetic = gradient_integral(v, |r| r * r * r / (r + w(r)));
    let angular = if channel.n() == 0 {
        0.0
    } else {
        value_integral(v, |r| {
            let wv = w(r);
            let wp = potential.eval_deriv(r).unwrap();
            ((n * n + 2.0 * n) * (r + wv) - (1.0 + wp) * r * n) * r / ((r + wv) * (r + wv))
        })
    };
    // flag non-smooth W' away from the declared break radii
    let jumps: Vec<f64> = potential.break_radii().map(|(a, b)| vec![a, b]).unwrap_or_default();
    let mut warning = false;
    let m = v.r.len();
    for idx in [m / 4, m / 2, 3 * m / 4] {
        let r = v.r[idx];
        if jumps.iter().any(|&j| (r / j).ln().abs() < 0.05) {
            continue;
        }
        let h = r * 1e-6;
        let fd = (w(r + h) - w(r - h)) / (2.0 * h);
        let an = potential.eval_deriv(r).unwrap();
        if (fd - an).abs() > 1e-3 * (1.0 + an.abs()) {
            warning = true;
        }
    }
    Ok(FormReport {
        value: kinetic + angular,
        quotient: None,
        grid_size: v.len(),
        refinement_history: vec![],
        channel: channel.n(),
        smoothness_warning: warning,
    })
}

/// Pointwise margins of the derivative-growth condition
/// `-r <= r W'(r) <= 3 W + 2 r`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RpetitReport {
    pub r: Vec<f64>,
    pub margin_lower: Vec<f64>,
    pub margin_upper: Vec<f64>,
    pub min_margin: f64,
    pub pass: bool,
}

pub fn rpetit_check(potential: &Potential, r_cap: f64, grid: &[f64]) -> Result<RpetitReport> {
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut rs = Vec::new();
    let mut min_margin = f64::INFINITY;
    for &r in grid.iter().filter(|&&r| r < r_cap) {
        let w = potential.eval(r)?;
        let rwp = r * potential.eval_deriv(r)?;
        let lo = rwp + r;
        let hi = 3.0 * w + 2.0 * r - rwp;
        min_margin = min_margin.min(lo).min(hi);
        rs.push(r);
        lower.push(lo);
        upper.push(hi);
    }
    Ok(RpetitReport {
        r: rs,
        margin_lower: lower,
        margin_upper: upper,
        min_margin,
        pass: min_margin >= -1e-12,
    })
}

/// Quotient `∫ r^2 |v'|^2 dr / ∫ |v|^2 dr` (sharp constant 1/4).
pub fn hardy_quotient(v: &GridFunction) -> FormReport {
    let num = gradient_integral(v, |r| r * r);
    let den = value_integral(v, |_| 1.0);
    FormReport {
        value: num,
        quotient: Some(num / den),
        grid_size: v.len(),
        refinement_history: vec![],
        channel: 0,
        smoothness_warning: false,
    }
}

/// Quotient `∫ r^3 |v'|^2 dr / ∫ r |v|^2 dr` (sharp constant 1).
pub fn r3_quotient(v: &GridFunction) -> FormReport {
    let num = gradient_integral(v, |r| r * r * r);
    let den = value_integral(v, |r| r);
    FormReport {
        value: num,
        quotient: Some(num / den),
        grid_size: v.len(),
        refinement_history: vec![],
        channel: 0,
        smoothness_warning: false,
    }
}

/// Discrete minimum of the `1/4`-quotient over the grid space.
///
/// The exact substitution `v = r^{-1/2} χ(log r)` turns the quotient into
/// `1/4 + ∫|χ'|^2 dt / ∫|χ|^2 dt`, so the sharp constant is carried
/// algebraically and only the vanishing Dirichlet eigenvalue of the log
/// window (`pi^2 / L^2` for range `L`) is discretized.
pub fn hardy_discrete_min(grid: &[f64]) -> Result<f64> {
    Ok(0.25 + log_window_eigenvalue(grid)?)
}

/// Discrete minimum of the weighted quotient with sharp constant 1
/// (`v = r^{-1} φ(log r)` reduces it to `1 + ∫|φ'|^2 / ∫|φ|^2`).
pub fn r3_discrete_min(grid: &[f64]) -> Result<f64> {
    Ok(1.0 + log_window_eigenvalue(grid)?)
}

fn log_window_eigenvalue(grid: &[f64]) -> Result<f64> {
    if grid.len() < 3 || !(grid[0] > 0.0) {
        return Err(Error::BadGrid);
    }
    let t: Vec<f64> = grid.iter().map(|&r| r.ln()).collect();
    let (a, b) = assemble_p1(&t, |_| 1.0, |_| 1.0);
    Ok(smallest_eigenpair(&a, &b, 1e-12, 800)?.0)
}

/// The gap functional of the Coulomb-type inequality at coupling `nu`:
/// `G(v) = ∫ |v'|^2 r^2/(1 + γ + ν/r) dr + (1-γ) ∫ |v|^2 r^2 dr
///         - ν ∫ |v|^2 r dr`, with `γ = sqrt(1-ν^2)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct GapReport {
    pub kinetic: f64,
    pub mass_term: f64,
    pub coulomb_term: f64,
    pub gap: f64,
    pub normalized_gap: f64,
}

pub fn verify_r6(nu: f64, v: &GridFunction) -> Result<GapReport> {
    if !(nu > 0.0 && nu <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "coupling nu = {nu} outside (0, 1]"
        )));
    }
    let gamma = (1.0 - nu * nu).sqrt();
    let kinetic = gradient_integral(v, |r| r * r * r / ((1.0 + gamma) * r + nu));
    let mass = value_integral(v, |r| r * r);
    let mass_term = (1.0 - gamma) * mass;
    let coulomb_term = nu * value_integral(v, |r| r);
    let gap = kinetic + mass_term - coulomb_term;
    Ok(GapReport {
        kinetic,
        mass_term,
        coulomb_term,
        gap,
        normalized_gap: gap / mass,
    })
}

/// The limiting case `nu = 1` of the gap functional.
pub fn verify_r1(v: &GridFunction) -> Result<GapReport> {
    verify_r6(1.0, v)
}

/// Channel-wise two-sided evaluation of the multiplier inequality with
/// surface terms at the declared jumps.
#[derive(Debug, Clone, serde::Serialize)]
pub struct R8Report {
    pub lhs_plus: f64,
    pub rhs_plus: f64,
    pub surface_plus: f64,
    pub margin_plus: f64,
    pub lhs_minus: f64,
    pub rhs_minus: f64,
    pub surface_minus: f64,
    pub margin_minus: f64,
    pub margin_min: f64,
    /// `C(R) = -max([m_-], [m_+])`.
    pub surface_constant: f64,
    /// Aggregate surface contribution `C(R) R^2 (v_+(R)^2 + v_-(R)^2)`.
    pub surface_term_aggregate: f64,
}

fn node_value_at(v: &GridFunction, r: f64) -> Result<f64> {
    let idx = v
        .r
        .iter()
        .position(|&g| (g - r).abs() <= 1e-9 * r.max(1e-300))
        .ok_or(Error::JumpOffGrid { r })?;
    Ok(v.v[idx])
}

fn channel_rhs(
    potential: &Potential,
    pair_side: &crate::potential::Multiplier,
    sign: ChannelSign,
    v: &GridFunction,
) -> Result<f64> {
    let mut y = Vec::with_capacity(v.r.len());
    for (&r, &val) in v.r.iter().zip(v.v.iter()) {
        let w = potential.eval(r)?;
        let (m, mp) = pair_side.eval(r)?;
        let smp = match sign {
            ChannelSign::Plus => r * mp,
            ChannelSign::Minus => -r * mp,
        };
        y.push((2.0 * m + smp - (r + w) * m * m) * r * val * val);
    }
    Ok(trapezoid(&v.r, &y))
}

pub fn verify_r8(
    potential: &Potential,
    pair: &MultiplierPair,
    v_plus: &GridFunction,
    ch_plus: Channel,
    v_minus: &GridFunction,
    ch_minus: Channel,
) -> Result<R8Report> {
    if ch_plus.n() < 0 || ch_minus.n() >= 0 {
        return Err(Error::InvalidParameter(
            "plus channel needs n >= 0, minus channel n <= -2".into(),
        ));
    }
    let lhs_plus = dirac_channel_form(potential, ch_plus, v_plus)?.value;
    let lhs_minus = dirac_channel_form(potential, ch_minus, v_minus)?.value;
    let rhs_plus = channel_rhs(potential, &pair.plus, ChannelSign::Plus, v_plus)?;
    let rhs_minus = channel_rhs(potential, &pair.minus, ChannelSign::Minus, v_minus)?;
    // surface adjustments: -[m_+] R^2 v_+(R)^2 and +[m_-] R^2 v_-(R)^2
    let mut surface_plus = 0.0;
    for j in pair.plus.jumps() {
        let val = node_value_at(v_plus, j.location)?;
        surface_plus -= j.magnitude * j.location * j.location * val * val;
    }
    let mut surface_minus = 0.0;
    for j in pair.minus.jumps() {
        let val = node_value_at(v_minus, j.location)?;
        surface_minus += j.magnitude * j.location * j.location * val * val;
    }
    let margin_plus = lhs_plus + surface_plus - rhs_plus;
    let margin_minus = lhs_minus + surface_minus - rhs_minus;
    let c = pair.surface_constant();
    let mut aggregate = 0.0;
    for j in pair.plus.jumps().iter().chain(pair.minus.jumps().iter()) {
        let vp = node_value_at(v_plus, j.location)?;
        let vm = node_value_at(v_minus, j.location)?;
        aggregate += c * j.location * j.location * (vp * vp + vm * vm);
    }
    Ok(R8Report {
        lhs_plus,
        rhs_plus,
        surface_plus,
        margin_plus,
        lhs_minus,
        rhs_minus,
        surface_minus,
        margin_minus,
        margin_min: margin_plus.min(margin_minus),
        surface_constant: c,
        surface_term_aggregate: aggregate,
    })
}

/// One row of the mass-kept rescaling sweep `φ_λ(r) = λ^{-3/2} v(r/λ)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ScalingRow {
    pub lambda: f64,
    /// `∫ |φ'|^2 r^2 dr` — scales exactly like `λ^{-2}`.
    pub gradient: f64,
    /// `∫ |φ'|^2 r^3/(r+W) dr`.
    pub gradient_weighted: f64,
    /// `∫ |φ|^2 r^2 dr` — invariant.
    pub mass: f64,
    /// `∫ W φ^2 r dr`.
    pub potential_term: f64,
    /// `gradient_weighted + mass - potential_term`.
    pub margin: f64,
}

pub fn scaling_demo(
    potential: &Potential,
    v: &ExpBump,
    lambdas: &[f64],
    points_per_decade: usize,
) -> Result<Vec<ScalingRow>> {
    let mut rows = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let phi = |r: f64| lambda.powf(-1.5) * v.eval(r / lambda);
        let dphi = |r: f64| lambda.powf(-2.5) * v.deriv(r / lambda);
        let (lo, hi) = (v.lo * lambda, v.hi * lambda);
        let w = |r: f64| potential.eval(r).unwrap();
        let gradient = simpson_log(|r| dphi(r).powi(2) * r * r, lo, hi, points_per_decade);
        let gradient_weighted = simpson_log(
            |r| dphi(r).powi(2) * r * r * r / (r + w(r)),
            lo,
            hi,
            points_per_decade,
        );
        let mass = simpson_log(|r| phi(r).powi(2) * r * r, lo, hi, points_per_decade);
        let potential_term =
            simpson_log(|r| w(r) * phi(r).powi(2) * r, lo, hi, points_per_decade);
        rows.push(ScalingRow {
            lambda,
            gradient,
            gradient_weighted,
            mass,
            potential_term,
            margin: gradient_weighted + mass - potential_term,
        });
    }
    Ok(rows)
}

fn tridiag_axpy(a: &Tridiag, scale: f64, b: &Tridiag) -> Tridiag {
    Tridiag {
        diag: a
            .diag
            .iter()
            .zip(b.diag.iter())
            .map(|(x, y)| x + scale * y)
            .collect(),
        off: a
            .off
            .iter()
            .zip(b.off.iter())
            .map(|(x, y)| x + scale * y)
            .collect(),
    }
}

/// Sharpness probe for the level-`k` truncated Laplace-side potential
/// `V_k = (1/4)(1 + Σ_{j<=k} pi_j^2)`.
///
/// Works in `t = log y` after the exact substitution `q = e^{-t/2} χ`,
/// which turns `∫ y^2 |q'|^2 dy` into `∫ |χ'|^2 dt + (1/4) ∫ |χ|^2 dt` and
/// removes every exponential scale. Returns the discrete minimum of
/// `(∫|χ'|^2 + (1/4)∫|χ|^2) / ∫ V_k χ^2 dt` for supports `(0, y_top]`;
/// each support is resolved `depth_factor * |log y_top|` deep in `t`, so
/// the spectral floor of the window shrinks with the support.
pub fn terti_probe(
    tower: &LogTower,
    k: usize,
    y_tops: &[f64],
    depth_factor: f64,
    nodes: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(y_tops.len());
    for &y_top in y_tops {
        let t_hi = y_top.ln();
        let t_lo = t_hi - depth_factor * t_hi.abs().max(1.0);
        let grid: Vec<f64> = (0..nodes)
            .map(|i| t_lo + (t_hi - t_lo) * i as f64 / (nodes - 1) as f64)
            .collect();
        let (a_grad, b_unit) = assemble_p1(&grid, |_| 1.0, |_| 1.0);
        let a = tridiag_axpy(&a_grad, 0.25, &b_unit);
        let (_, b_v) = assemble_p1(&grid, |_| 1.0, |t| {
            0.25 * (1.0 + tower.partial_pi_sq_log(t, k).unwrap())
        });
        let (lam, _) = smallest_eigenpair(&a, &b_v, 1e-12, 800)?;
        out.push(lam);
    }
    Ok(out)
}

/// Log-uniform verification grid over `(1e-6, 1e2)` at 256 points/decade.
pub fn standard_grid() -> Vec<f64> {
    log_grid_ppd(1e-6, 1e2, 256)
}

/// Insert extra nodes (jump radii) into a sorted grid.
pub fn grid_with_nodes(base: &[f64], extra: &[f64]) -> Vec<f64> {
    let mut g = base.to_vec();
    for &x in extra {
        if x > 0.0 {
            g.push(x);
        }
    }
    g.sort_by(|a, b| a.partial_cmp(b).unwrap());
    g.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    g
}
