//! Multiplier-generated potentials and the explicit optimal constructions.
//!
//! A multiplier function `m` generates the channel potentials
//!
//! `W^{±,m}(s) = (2 m ± s m' - s m^2 + s) / (1 + m^2)`,
//!
//! and the pointwise admissibility condition for a potential `W` is
//! `W <= W^{±,m_±}` for both channels. Margins are reported in exactly that
//! scale-normalized form.
//!
//! Explicit constructions (`a > 1` is the tower constant, `nbar` its
//! multiplier generator):
//!
//! * `Wbar = min(W^{+,1+nbar}, W^{-,1-nbar})` — optimal near the origin,
//!   drops below 1 at a radius `R+` in (0,1).
//! * `W1 = max(Wbar, 1)` with multipliers patched to 1 beyond the break.
//! * `W2 = max(1, Wtilde)`, `Wtilde` the envelope of the `m = 1/(4s)`
//!   channels; optimal at infinity, `W2 ≈ s + 1/(8s)` for large `s`. The
//!   envelope crosses 1 at the threshold `T ≈ 0.866876`, a root of
//!   `16 s^3 - 16 s^2 + 3 s - 1`.
//! * `W3` — both optimal ends at once: equal to `W_inf` up to the radius
//!   where `W^{+,1/(4s)}` catches up, then the `1/(4s)`-channel; the inner
//!   plus-multiplier is the singular-ODE solution.

use std::sync::Arc;

use crate::ode::{EscapeTrace, MultiplierCurve, OdeSolution};
use crate::quad::bisect;
use crate::tower::LogTower;
use crate::{Error, Result};

/// Default pointwise admissibility tolerance on normalized margins.
pub const TOL_POINTWISE: f64 = 1e-9;

/// Which sign the `s m'` term carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelSign {
    Plus,
    Minus,
}

/// `W^{±,m}` for given multiplier value and derivative.
pub fn w_pm(m: f64, m_prime: f64, s: f64, sign: ChannelSign) -> f64 {
    let sm = match sign {
        ChannelSign::Plus => s * m_prime,
        ChannelSign::Minus => -s * m_prime,
    };
    (2.0 * m + sm - s * m * m + s) / (1.0 + m * m)
}

/// `W^{±,1/(4s)}` in closed form.
pub(crate) fn quarter_channel(s: f64, sign: ChannelSign) -> f64 {
    match sign {
        ChannelSign::Plus => (16.0 * s * s * s + 3.0 * s) / (16.0 * s * s + 1.0),
        ChannelSign::Minus => (16.0 * s * s * s + 11.0 * s) / (16.0 * s * s + 1.0),
    }
}

fn quarter_channel_deriv(s: f64) -> f64 {
    let d = 16.0 * s * s + 1.0;
    (256.0 * s * s * s * s + 3.0) / (d * d)
}

/// `W^{±,1±nbar}` with the exact `nbar'` identity folded in:
/// plus numerator `2(W_inf-1) - s nbar (2+nbar)`, minus numerator
/// `2(W_inf-1) + s nbar (2-nbar)`.
pub(crate) fn bar_channel(tower: &LogTower, s: f64, sign: ChannelSign) -> Result<f64> {
    let series = tower.series(s)?;
    let n = series.sum_pi / 2.0;
    let q = series.sum_pi_sq / 4.0;
    Ok(match sign {
        ChannelSign::Plus => 1.0 + (q - s * n * (2.0 + n)) / (2.0 + 2.0 * n + n * n),
        ChannelSign::Minus => 1.0 + (q + s * n * (2.0 - n)) / (2.0 - 2.0 * n + n * n),
    })
}

fn bar_channel_deriv(tower: &LogTower, s: f64, sign: ChannelSign) -> Result<f64> {
    let series = tower.series(s)?;
    let n = series.sum_pi / 2.0;
    let q = series.sum_pi_sq / 4.0;
    let q_prime = series.sum_pi_sq_sigma / (2.0 * s); // q' = 2 W_inf'
    let sn_prime = n * n + q; // s nbar'
    match sign {
        ChannelSign::Plus => {
            let num = q - s * n * (2.0 + n);
            let den = 2.0 + 2.0 * n + n * n;
            let num_p = q_prime - n * (2.0 + n) - sn_prime * (2.0 + 2.0 * n);
            let den_p = (2.0 + 2.0 * n) * sn_prime / s;
            Ok((num_p * den - num * den_p) / (den * den))
        }
        ChannelSign::Minus => {
            let num = q + s * n * (2.0 - n);
            let den = 2.0 - 2.0 * n + n * n;
            let num_p = q_prime + n * (2.0 - n) + sn_prime * (2.0 - 2.0 * n);
            let den_p = (2.0 * n - 2.0) * sn_prime / s;
            Ok((num_p * den - num * den_p) / (den * den))
        }
    }
}

/// A jump of a piecewise multiplier: location and `m(R+) - m(R-)`.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct Jump {
    pub location: f64,
    pub magnitude: f64,
}

/// Piecewise-analytic multiplier with derivative access.
#[derive(Debug, Clone)]
pub enum Multiplier {
    One,
    Constant(f64),
    /// `1 + nbar` below the break radius, `1` beyond.
    OnePlusNbar { tower: LogTower, r: f64 },
    /// `1 - nbar` below the break radius, `1` beyond.
    OneMinusNbar { tower: LogTower, r: f64 },
    /// `1` below the break radius, `1/(4s)` beyond.
    QuarterTail { t: f64 },
    /// Singular-ODE multiplier on `(0, r]`, `1/(4s)` beyond.
    OdeThenQuarter {
        ode: Arc<OdeSolution>,
        curve: Arc<MultiplierCurve>,
        r: f64,
    },
    /// `1 - nbar` on `(0, r]`, `1/(4s)` beyond.
    MinusNbarThenQuarter { tower: LogTower, r: f64 },
}

impl Multiplier {
    /// `(m, m')` at `s`; right-continuous at jumps.
    pub fn eval(&self, s: f64) -> Result<(f64, f64)> {
        match self {
            Multiplier::One => Ok((1.0, 0.0)),
            Multiplier::Constant(c) => Ok((*c, 0.0)),
            Multiplier::OnePlusNbar { tower, r } => {
                if s < *r {
                    Ok((1.0 + tower.nbar(s)?, tower.nbar_prime(s)?))
                } else {
                    Ok((1.0, 0.0))
                }
            }
            Multiplier::OneMinusNbar { tower, r } => {
                if s < *r {
                    Ok((1.0 - tower.nbar(s)?, -tower.nbar_prime(s)?))
                } else {
                    Ok((1.0, 0.0))
                }
            }
            Multiplier::QuarterTail { t } => {
                if s < *t {
                    Ok((1.0, 0.0))
                } else {
                    Ok((0.25 / s, -0.25 / (s * s)))
                }
            }
            Multiplier::OdeThenQuarter { ode, curve, r } => {
                if s >= *r {
                    Ok((0.25 / s, -0.25 / (s * s)))
                } else if s <= ode.delta {
                    Ok((ode.m_at(s)?, ode.m_prime_at(s)?))
                } else {
                    Ok((curve.m_at(s), curve.m_prime_at(s)?))
                }
            }
            Multiplier::MinusNbarThenQuarter { tower, r } => {
                if s < *r {
                    Ok((1.0 - tower.nbar(s)?, -tower.nbar_prime(s)?))
                } else {
                    Ok((0.25 / s, -0.25 / (s * s)))
                }
            }
        }
    }

    pub fn jumps(&self) -> Vec<Jump> {
        let jump_at = |r: f64, left: f64, right: f64| Jump {
            location: r,
            magnitude: right - left,
        };
        match self {
            Multiplier::One | Multiplier::Constant(_) => vec![],
            Multiplier::OnePlusNbar { tower, r } => {
                let n = tower.nbar(*r).unwrap_or(0.0);
                vec![jump_at(*r, 1.0 + n, 1.0)]
            }
            Multiplier::OneMinusNbar { tower, r } => {
                let n = tower.nbar(*r).unwrap_or(0.0);
                vec![jump_at(*r, 1.0 - n, 1.0)]
            }
            Multiplier::QuarterTail { t } => vec![jump_at(*t, 1.0, 0.25 / t)],
            Multiplier::OdeThenQuarter { curve, r, .. } => {
                vec![jump_at(*r, curve.m_at(*r), 0.25 / r)]
            }
            Multiplier::MinusNbarThenQuarter { tower, r } => {
                let n = tower.nbar(*r).unwrap_or(0.0);
                vec![jump_at(*r, 1.0 - n, 0.25 / r)]
            }
        }
    }
}

/// The pair `(m_+, m_-)` generating a potential.
#[derive(Debug, Clone)]
pub struct MultiplierPair {
    pub plus: Multiplier,
    pub minus: Multiplier,
}

impl MultiplierPair {
    pub fn ones() -> Self {
        Self {
            plus: Multiplier::One,
            minus: Multiplier::One,
        }
    }

    pub fn constants(c: f64) -> Self {
        Self {
            plus: Multiplier::Constant(c),
            minus: Multiplier::Constant(c),
        }
    }

    /// Surface constant `C(R) = -max([m_-], [m_+])` over all recorded jumps.
    pub fn surface_constant(&self) -> f64 {
        let mut worst = 0.0_f64;
        for j in self.plus.jumps() {
            worst = worst.max(j.magnitude);
        }
        for j in self.minus.jumps() {
            worst = worst.max(j.magnitude);
        }
        -worst
    }
}

/// Large-`s` behavior used for analytic tail integrals.
#[derive(Debug, Clone, Copy)]
pub enum Tail {
    /// `W -> c` beyond the switch radius.
    Constant(f64),
    /// `W ~ s + 1/(8s)` beyond the switch radius.
    HardyLinear,
    /// `W = c s` exactly.
    Slope(f64),
    /// `W = c s^p` exactly, `p < 2`.
    Power { coeff: f64, exponent: f64 },
}

/// An evaluable radial potential.
#[derive(Debug, Clone)]
pub enum Potential {
    /// `W == 1`.
    One,
    /// `W == c`.
    Constant(f64),
    /// `W == c s`.
    Linear(f64),
    /// `W == c s^p` (test potential for the derivative-growth condition).
    Power { coeff: f64, exponent: f64 },
    /// `W_inf`, continued as a constant beyond `s_cap`.
    TowerOptimal { tower: LogTower, s_cap: f64 },
    /// The raw near-origin envelope `Wbar` (drops below 1; defined on the
    /// tower domain only).
    BarEnvelope { tower: LogTower },
    /// `max(Wbar, 1)`.
    W1 { tower: LogTower, r_plus: f64 },
    /// `max(1, Wtilde)`.
    W2 { t_plus: f64, t_minus: f64 },
    /// `W_inf` up to `r_plus`, the `1/(4s)` plus-channel beyond.
    W3 {
        tower: LogTower,
        r_plus: f64,
        r_minus: f64,
        ode: Option<Arc<OdeSolution>>,
        curve: Option<Arc<MultiplierCurve>>,
    },
}

impl Potential {
    pub fn tower_optimal(tower: LogTower) -> Self {
        let s_cap = tower.domain_end() * 0.5;
        Potential::TowerOptimal { tower, s_cap }
    }

    /// `W1`: locate the break radius where the plus-channel envelope
    /// crosses 1 (the minus channel stays above 1 on the whole domain).
    pub fn w1(tower: LogTower) -> Result<Self> {
        let r_plus = bisect(
            |s| bar_channel(&tower, s, ChannelSign::Plus).unwrap() - 1.0,
            1e-6,
            0.5,
            1e-12,
        )?;
        Ok(Potential::W1 { tower, r_plus })
    }

    /// `W2` with both channel break radii.
    pub fn w2() -> Result<Self> {
        let t_plus = bisect(
            |s| quarter_channel(s, ChannelSign::Plus) - 1.0,
            0.1,
            2.0,
            1e-13,
        )?;
        let t_minus = bisect(
            |s| quarter_channel(s, ChannelSign::Minus) - 1.0,
            1e-3,
            2.0,
            1e-13,
        )?;
        Ok(Potential::W2 { t_plus, t_minus })
    }

    /// `W3` without its ODE multiplier attached yet.
    pub fn w3(tower: LogTower) -> Result<Self> {
        let r_plus = bisect(
            |s| tower.w_infinity(s).unwrap() - quarter_channel(s, ChannelSign::Plus),
            0.5,
            2.0,
            1e-12,
        )?;
        let r_minus = bisect(
            |s| tower.w_infinity(s).unwrap() - quarter_channel(s, ChannelSign::Minus),
            0.02,
            0.5,
            1e-12,
        )?;
        Ok(Potential::W3 {
            tower,
            r_plus,
            r_minus,
            ode: None,
            curve: None,
        })
    }

    /// Attach the singular-ODE solution and continue it to the patch radius.
    pub fn attach_ode(self, sol: Arc<OdeSolution>) -> Result<Self> {
        match self {
            Potential::W3 {
                tower,
                r_plus,
                r_minus,
                ..
            } => {
                let curve = Arc::new(sol.continue_to(r_plus)?);
                Ok(Potential::W3 {
                    tower,
                    r_plus,
                    r_minus,
                    ode: Some(sol),
                    curve: Some(curve),
                })
            }
            other => Ok(other),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Potential::One => "one",
            Potential::Constant(_) => "constant",
            Potential::Linear(_) => "linear",
            Potential::Power { .. } => "power",
            Potential::TowerOptimal { .. } => "winf",
            Potential::BarEnvelope { .. } => "wbar",
            Potential::W1 { .. } => "w1",
            Potential::W2 { .. } => "w2",
            Potential::W3 { .. } => "w3",
        }
    }

    /// `W(s)`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::Domain {
                s,
                domain_end: f64::INFINITY,
            });
        }
        match self {
            Potential::One => Ok(1.0),
            Potential::Constant(c) => Ok(*c),
            Potential::Linear(c) => Ok(c * s),
            Potential::Power { coeff, exponent } => Ok(coeff * s.powf(*exponent)),
            Potential::TowerOptimal { tower, s_cap } => tower.w_infinity(s.min(*s_cap)),
            Potential::BarEnvelope { tower } => {
                let p = bar_channel(tower, s, ChannelSign::Plus)?;
                let m = bar_channel(tower, s, ChannelSign::Minus)?;
                Ok(p.min(m))
            }
            Potential::W1 { tower, r_plus } => {
                if s < *r_plus {
                    Ok(bar_channel(tower, s, ChannelSign::Plus)?.max(1.0))
                } else {
                    Ok(1.0)
                }
            }
            Potential::W2 { t_plus, .. } => {
                if s < *t_plus {
                    Ok(1.0)
                } else {
                    Ok(quarter_channel(s, ChannelSign::Plus))
                }
            }
            Potential::W3 {
                tower,
                r_plus,
                ode,
                ..
            } => {
                if ode.is_none() {
                    return Err(Error::MissingOdeSolution);
                }
                if s <= *r_plus {
                    tower.w_infinity(s)
                } else {
                    Ok(quarter_channel(s, ChannelSign::Plus))
                }
            }
        }
    }

    /// `W'(s)` (one-sided at the patch radii).
    pub fn eval_deriv(&self, s: f64) -> Result<f64> {
        match self {
            Potential::One | Potential::Constant(_) => Ok(0.0),
            Potential::Linear(c) => Ok(*c),
            Potential::Power { coeff, exponent } => {
                Ok(coeff * exponent * s.powf(exponent - 1.0))
            }
            Potential::TowerOptimal { tower, s_cap } => {
                if s < *s_cap {
                    tower.w_infinity_prime(s)
                } else {
                    Ok(0.0)
                }
            }
            Potential::BarEnvelope { tower } => {
                let p = bar_channel(tower, s, ChannelSign::Plus)?;
                let m = bar_channel(tower, s, ChannelSign::Minus)?;
                if p <= m {
                    bar_channel_deriv(tower, s, ChannelSign::Plus)
                } else {
                    bar_channel_deriv(tower, s, ChannelSign::Minus)
                }
            }
            Potential::W1 { tower, r_plus } => {
                if s < *r_plus {
                    bar_channel_deriv(tower, s, ChannelSign::Plus)
                } else {
                    Ok(0.0)
                }
            }
            Potential::W2 { t_plus, .. } => {
                if s < *t_plus {
                    Ok(0.0)
                } else {
                    Ok(quarter_channel_deriv(s))
                }
            }
            Potential::W3 {
                tower,
                r_plus,
                ode,
                ..
            } => {
                if ode.is_none() {
                    return Err(Error::MissingOdeSolution);
                }
                if s <= *r_plus {
                    tower.w_infinity_prime(s)
                } else {
                    Ok(quarter_channel_deriv(s))
                }
            }
        }
    }

    /// Break radii `(plus, minus)` of the associated multiplier pair.
    ///
    /// For `W1` the minus channel never dips below 1 inside the domain, so
    /// both multipliers are patched at the plus crossing.
    pub fn break_radii(&self) -> Result<(f64, f64)> {
        match self {
            Potential::W1 { r_plus, .. } => Ok((*r_plus, *r_plus)),
            Potential::W2 { t_plus, t_minus } => Ok((*t_plus, *t_minus)),
            Potential::W3 {
                r_plus, r_minus, ..
            } => Ok((*r_plus, *r_minus)),
            _ => Err(Error::InvalidParameter(
                "break radii are defined for W1, W2, W3".into(),
            )),
        }
    }

    /// The generating multiplier pair.
    pub fn multiplier_pair(&self) -> Result<MultiplierPair> {
        match self {
            Potential::One => Ok(MultiplierPair::ones()),
            Potential::BarEnvelope { tower } => {
                let end = tower.domain_end();
                Ok(MultiplierPair {
                    plus: Multiplier::OnePlusNbar {
                        tower: *tower,
                        r: end,
                    },
                    minus: Multiplier::OneMinusNbar {
                        tower: *tower,
                        r: end,
                    },
                })
            }
            Potential::W1 { tower, r_plus } => Ok(MultiplierPair {
                plus: Multiplier::OnePlusNbar {
                    tower: *tower,
                    r: *r_plus,
                },
                minus: Multiplier::OneMinusNbar {
                    tower: *tower,
                    r: *r_plus,
                },
            }),
            Potential::W2 { t_plus, t_minus } => Ok(MultiplierPair {
                plus: Multiplier::QuarterTail { t: *t_plus },
                minus: Multiplier::QuarterTail { t: *t_minus },
            }),
            Potential::W3 {
                tower,
                r_plus,
                r_minus,
                ode,
                curve,
            } => match (ode, curve) {
                (Some(ode), Some(curve)) => Ok(MultiplierPair {
                    plus: Multiplier::OdeThenQuarter {
                        ode: ode.clone(),
                        curve: curve.clone(),
                        r: *r_plus,
                    },
                    minus: Multiplier::MinusNbarThenQuarter {
                        tower: *tower,
                        r: *r_minus,
                    },
                }),
                _ => Err(Error::MissingOdeSolution),
            },
            _ => Err(Error::InvalidParameter(format!(
                "no canonical multiplier pair for `{}`",
                self.name()
            ))),
        }
    }

    /// Radii where the value switches branch (derivative kinks); quadrature
    /// across the potential splits cells there.
    pub fn value_kinks(&self) -> Vec<f64> {
        match self {
            Potential::TowerOptimal { s_cap, .. } => vec![*s_cap],
            Potential::W1 { r_plus, .. } => vec![*r_plus],
            Potential::W2 { t_plus, .. } => vec![*t_plus],
            Potential::W3 { r_plus, .. } => vec![*r_plus],
            _ => vec![],
        }
    }

    /// Declared large-`s` behavior for tail integrals.
    pub fn tail(&self) -> Option<Tail> {
        match self {
            Potential::One => Some(Tail::Constant(1.0)),
            Potential::Constant(c) => Some(Tail::Constant(*c)),
            Potential::Linear(c) => Some(Tail::Slope(*c)),
            Potential::Power { coeff, exponent } => {
                (*exponent < 2.0).then_some(Tail::Power {
                    coeff: *coeff,
                    exponent: *exponent,
                })
            }
            Potential::TowerOptimal { tower, s_cap } => {
                Some(Tail::Constant(tower.w_infinity(*s_cap).ok()?))
            }
            Potential::BarEnvelope { .. } => None,
            Potential::W1 { .. } => Some(Tail::Constant(1.0)),
            Potential::W2 { .. } | Potential::W3 { .. } => Some(Tail::HardyLinear),
        }
    }
}

/// Pointwise admissibility margins `W^{±,m_±}(s) - W(s)` on a grid.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AdmissibilityReport {
    pub s: Vec<f64>,
    pub margin_plus: Vec<f64>,
    pub margin_minus: Vec<f64>,
    pub min_margin: f64,
    pub tol: f64,
    pub pass: bool,
}

pub fn admissible(
    pair: &MultiplierPair,
    potential: &Potential,
    grid: &[f64],
    tol: f64,
) -> Result<AdmissibilityReport> {
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) || !(grid[0] > 0.0) {
        return Err(Error::BadGrid);
    }
    let mut margin_plus = Vec::with_capacity(grid.len());
    let mut margin_minus = Vec::with_capacity(grid.len());
    let mut min_margin = f64::INFINITY;
    for &s in grid {
        let w = potential.eval(s)?;
        let (mp, mp_d) = pair.plus.eval(s)?;
        let (mm, mm_d) = pair.minus.eval(s)?;
        let a = w_pm(mp, mp_d, s, ChannelSign::Plus) - w;
        let b = w_pm(mm, mm_d, s, ChannelSign::Minus) - w;
        min_margin = min_margin.min(a).min(b);
        margin_plus.push(a);
        margin_minus.push(b);
    }
    Ok(AdmissibilityReport {
        s: grid.to_vec(),
        margin_plus,
        margin_minus,
        min_margin,
        tol,
        pass: min_margin >= -tol,
    })
}

/// Smallest `T > 0` past which the `1/(4s)`-channel envelope stays `>= 1`,
/// by bisection of the envelope crossing.
pub fn find_t() -> Result<f64> {
    bisect(
        |s| {
            let env = quarter_channel(s, ChannelSign::Plus)
                .min(quarter_channel(s, ChannelSign::Minus));
            env - 1.0
        },
        0.1,
        2.0,
        1e-13,
    )
}

/// Closed-form radical for the same threshold,
/// `(1/48) [ (4096 - 192 √417)^{1/3} + 4 (4 + (64 + 3 √417)^{1/3}) ]`.
pub fn t_closed_form() -> f64 {
    let r = 417.0_f64.sqrt();
    ((4096.0 - 192.0 * r).cbrt() + 4.0 * (4.0 + (64.0 + 3.0 * r).cbrt())) / 48.0
}

/// Forward Riccati scan from `(s0, m0)` under a potential; demonstrates
/// finite-radius escape whenever `W >= 1`, `W != 1` and `m0 > 1`.
pub fn blowup_demo(potential: &Potential, s0: f64, m0: f64, s_max: f64) -> Result<EscapeTrace> {
    let w = |s: f64| potential.eval(s).unwrap_or(1.0);
    Ok(crate::ode::escape_scan(w, s0, m0, s_max, 1e6, &[]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::log_grid;
    use proptest::prelude::*;

    fn tower() -> LogTower {
        LogTower::new(5.0).unwrap()
    }

    // 60-digit oracle values.
    const T_ORACLE: f64 = 0.8668759642641293940954717;
    const T_MINUS_ORACLE: f64 = 0.1053524654655379833787548;
    const R_PLUS_W1: f64 = 0.02434355139955856488491056;
    const R3_PLUS: f64 = 0.8724439767219398894476025;
    const R3_MINUS: f64 = 0.1057035826080577249556432;

    #[test]
    fn w_pm_identity_multiplier() {
        for &s in &[1e-6, 0.3, 7.0, 1e3] {
            assert_eq!(w_pm(1.0, 0.0, s, ChannelSign::Plus), 1.0);
            assert_eq!(w_pm(1.0, 0.0, s, ChannelSign::Minus), 1.0);
        }
    }

    #[test]
    fn w_pm_constant_multiplier() {
        // m = c: (2c + s(1 - c^2)) / (1 + c^2)
        let (c, s) = (0.5, 2.0);
        let expect = (2.0 * c + s * (1.0 - c * c)) / (1.0 + c * c);
        assert!((w_pm(c, 0.0, s, ChannelSign::Plus) - expect).abs() < 1e-15);
        assert!((expect - 2.0).abs() < 1e-15);
    }

    #[test]
    fn w_pm_quarter_multiplier() {
        // m = 1/(4s), plus sign: (s + 3/(16 s)) / (1 + 1/(16 s^2))
        for &s in &[0.3, 1.0, 10.0] {
            let m = 0.25 / s;
            let direct = w_pm(m, -0.25 / (s * s), s, ChannelSign::Plus);
            let closed = (s + 3.0 / (16.0 * s)) / (1.0 + 1.0 / (16.0 * s * s));
            assert!((direct - closed).abs() < 1e-14);
            assert!((direct - quarter_channel(s, ChannelSign::Plus)).abs() < 1e-14);
        }
        // large-s expansion s + 1/(8s)
        let s = 200.0;
        let v = quarter_channel(s, ChannelSign::Plus);
        assert!((v - (s + 1.0 / (8.0 * s))).abs() < 1e-6);
    }

    #[test]
    fn threshold_value_and_radical() {
        let t = find_t().unwrap();
        assert!((t - 0.866876).abs() < 1e-5);
        assert!((t - T_ORACLE).abs() < 1e-11);
        assert!((t_closed_form() - T_ORACLE).abs() < 1e-14);
        assert!((t - t_closed_form()).abs() < 1e-10);
        // envelope value 1 at the crossing
        let env =
            quarter_channel(t, ChannelSign::Plus).min(quarter_channel(t, ChannelSign::Minus));
        assert!((env - 1.0).abs() < 1e-8);
    }

    #[test]
    fn w2_break_radii() {
        let w2 = Potential::w2().unwrap();
        let (tp, tm) = w2.break_radii().unwrap();
        assert!((tp - T_ORACLE).abs() < 1e-11);
        assert!((tm - T_MINUS_ORACLE).abs() < 1e-11);
        // envelope break == threshold
        assert!((tp - find_t().unwrap()).abs() < 1e-8);
        // bisection is converged: refining the bracket does not move it
        let finer = bisect(
            |s| quarter_channel(s, ChannelSign::Plus) - 1.0,
            0.8,
            0.9,
            1e-14,
        )
        .unwrap();
        assert!((finer - tp).abs() < 1e-10);
    }

    #[test]
    fn w1_break_radius_in_unit_interval() {
        let w1 = Potential::w1(tower()).unwrap();
        let (rp, rm) = w1.break_radii().unwrap();
        assert!(rp > 0.0 && rp < 1.0);
        assert!(rm > 0.0 && rm < 1.0);
        assert!((rp - R_PLUS_W1).abs() < 1e-10);
    }

    #[test]
    fn w1_matches_tower_potential_near_origin() {
        let t = tower();
        let w1 = Potential::w1(t).unwrap();
        let mut prev = f64::INFINITY;
        for &s in &[1e-3, 1e-4, 1e-5, 1e-6] {
            let diff = (w1.eval(s).unwrap() - t.w_infinity(s).unwrap()).abs();
            assert!(diff < prev, "difference should shrink toward 0");
            prev = diff;
        }
        // gap scale is X_1^3/16 at the last sample
        assert!(prev < 2e-5);
    }

    #[test]
    fn w2_values() {
        let w2 = Potential::w2().unwrap();
        assert!((w2.eval(10.0).unwrap() - 10.0125).abs() < 1e-3);
        assert_eq!(w2.eval(0.5).unwrap(), 1.0);
        assert!((w2.eval(100.0).unwrap() / 100.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn w3_requires_ode() {
        let w3 = Potential::w3(tower()).unwrap();
        assert!(matches!(w3.eval(0.5), Err(Error::MissingOdeSolution)));
        assert!(matches!(
            w3.multiplier_pair(),
            Err(Error::MissingOdeSolution)
        ));
        let (rp, rm) = w3.break_radii().unwrap();
        assert!((rp - R3_PLUS).abs() < 1e-10);
        assert!((rm - R3_MINUS).abs() < 1e-10);
    }

    #[test]
    fn potentials_at_least_one() {
        let t = tower();
        let w1 = Potential::w1(t).unwrap();
        let w2 = Potential::w2().unwrap();
        for &s in log_grid(1e-6, 50.0, 400).iter() {
            assert!(w1.eval(s).unwrap() >= 1.0 - 1e-12, "W1 < 1 at {s}");
            assert!(w2.eval(s).unwrap() >= 1.0 - 1e-12, "W2 < 1 at {s}");
        }
    }

    #[test]
    fn admissible_equality_for_ones() {
        let grid = log_grid(1e-4, 20.0, 200);
        let report = admissible(
            &MultiplierPair::ones(),
            &Potential::One,
            &grid,
            TOL_POINTWISE,
        )
        .unwrap();
        assert!(report.pass);
        for (&a, &b) in report.margin_plus.iter().zip(report.margin_minus.iter()) {
            assert!(a.abs() < 1e-14 && b.abs() < 1e-14);
        }
    }

    #[test]
    fn admissible_constant_coulomb_multiplier() {
        // m = (1 - sqrt(1 - nu^2))/nu generates exactly the potential
        // (2m + s(1-m^2))/(1+m^2); margins vanish by construction
        let nu = 0.8_f64;
        let m = (1.0 - (1.0 - nu * nu).sqrt()) / nu;
        assert!((m - 0.5).abs() < 1e-15);
        let grid = log_grid(1e-3, 10.0, 100);
        for &s in &grid {
            let w = w_pm(m, 0.0, s, ChannelSign::Plus);
            let w2 = w_pm(m, 0.0, s, ChannelSign::Minus);
            assert!((w - w2).abs() < 1e-15);
        }
    }

    #[test]
    fn admissible_w1_w2() {
        let t = tower();
        let grid = log_grid(1e-6, 50.0, 1200);
        for p in [Potential::w1(t).unwrap(), Potential::w2().unwrap()] {
            let pair = p.multiplier_pair().unwrap();
            let report = admissible(&pair, &p, &grid, TOL_POINTWISE).unwrap();
            assert!(
                report.pass,
                "{}: min margin {:.3e}",
                p.name(),
                report.min_margin
            );
        }
    }

    #[test]
    fn w1_surface_constant_negative() {
        let w1 = Potential::w1(tower()).unwrap();
        let pair = w1.multiplier_pair().unwrap();
        let c = pair.surface_constant();
        assert!(c < 0.0, "C(R) = {c}");
        // C(R) = -nbar(R+) for the minus-channel jump
        let (rp, _) = w1.break_radii().unwrap();
        let nb = tower().nbar(rp).unwrap();
        assert!((c + nb).abs() < 1e-12);
    }

    #[test]
    fn w2_w3_linear_growth_with_sharp_correction() {
        // |W(s)/s - 1| < 2/(8 s^2) + 1e-6 for s >= 100; exact for W2:
        // W2/s - 1 = 2/(16 s^2 + 1)
        let w2 = Potential::w2().unwrap();
        for &s in &[100.0, 316.0, 1000.0] {
            let excess = (w2.eval(s).unwrap() / s - 1.0).abs();
            assert!(excess < 0.25 / (s * s) + 1e-6, "s = {s}: {excess:.3e}");
        }
    }

    #[test]
    fn bar_envelope_normalized_asymptotics() {
        // (Wbar - 1 - (1/8) sum_{j<=k} pi_j^2) / pi_{k+1}^2 <= 1/8 + 0.05
        // near the origin
        let t = tower();
        let bar = Potential::BarEnvelope { tower: t };
        for k in 1..=3 {
            for i in 0..40 {
                let s = 1e-8 * (1e5_f64).powf(i as f64 / 39.0);
                let mut partial = 0.0;
                for j in 1..=k {
                    partial += t.sigma_pi(s, j).unwrap().pi.powi(2);
                }
                let pi_next = t.sigma_pi(s, k + 1).unwrap().pi;
                let norm = (bar.eval(s).unwrap() - 1.0 - partial / 8.0) / (pi_next * pi_next);
                assert!(norm <= 0.125 + 0.05, "k = {k}, s = {s:.2e}: {norm:.4}");
            }
        }
    }

    #[test]
    fn blowup_stationary_and_growth() {
        // W == 1, m0 = 1: stationary, no escape
        let trace = blowup_demo(&Potential::One, 0.1, 1.0, 30.0).unwrap();
        assert!(trace.blowup_radius.is_none());
        // m nondecreasing wherever W >= 1 and m >= 1
        let w1 = Potential::w1(tower()).unwrap();
        let tr = blowup_demo(&w1, 0.05, 1.2, 30.0).unwrap();
        assert!(tr.blowup_radius.is_some(), "multiplier must escape");
    }

    proptest! {
        #[test]
        fn channel_sign_symmetry(
            n in -0.9f64..0.9,
            nprime in -5.0f64..5.0,
            s in 1e-3f64..50.0,
        ) {
            // minus channel with 1-n maps to the plus channel under
            // n -> -n, up to the sign of the s m' term
            let m = 1.0 - n;
            let wm = w_pm(m, -nprime, s, ChannelSign::Minus);
            let wp = w_pm(m, -nprime, s, ChannelSign::Plus);
            let gap = wm - wp - 2.0 * s * nprime / (1.0 + m * m);
            prop_assert!(gap.abs() < 1e-12 * (1.0 + wm.abs() + wp.abs()));
        }

        #[test]
        fn riccati_monotone_above_one(m0 in 1.0f64..1.5, s0 in 0.05f64..0.5) {
            // s m' = (m-1)^2 + s(m^2-1) + (W-1)(1+m^2) >= 0 for W >= 1
            let w1 = Potential::w1(tower()).unwrap();
            let tr = blowup_demo(&w1, s0, m0, 5.0).unwrap();
            prop_assert!(tr.m_end >= m0 - 1e-9 || tr.blowup_radius.is_some());
        }
    }
}
