//! Bump perturbations of the optimal potential.
//!
//! Adding a sequence of disjoint bumps `W = W_inf + Σ B((s - s_n)/ε_n)`
//! with `s_n -> 0`, `Σ ε_n < ∞`, keeps `W >= 1` but destroys every
//! multiplier continuous at the origin: the forward Riccati flow picks up a
//! kick at each bump and escapes strictly earlier than the smooth control.
//! The demonstrations here are numerical evidence over finite trials, not a
//! proof.

use crate::ode::{escape_scan, EscapeTrace};
use crate::tower::LogTower;
use crate::{Error, Result};

/// Disjoint bump family `s_n = 2^{-n}`, `ε_n = 4^{-n-2}` by default.
#[derive(Debug, Clone)]
pub struct BumpFamily {
    pub centers: Vec<f64>,
    pub widths: Vec<f64>,
    pub height: f64,
}

impl BumpFamily {
    /// Family with `count` bumps at `s_n = 2^{-n}`, `ε_n = 4^{-n-2}`.
    pub fn dyadic(height: f64, count: usize) -> Result<Self> {
        let centers: Vec<f64> = (0..count).map(|n| 0.5_f64.powi(n as i32)).collect();
        let widths: Vec<f64> = (0..count).map(|n| 0.25_f64.powi(n as i32 + 2)).collect();
        Self::new(centers, widths, height)
    }

    pub fn new(centers: Vec<f64>, widths: Vec<f64>, height: f64) -> Result<Self> {
        if centers.len() != widths.len() || centers.is_empty() {
            return Err(Error::InvalidParameter("empty bump family".into()));
        }
        if height < 0.0 {
            return Err(Error::InvalidParameter("height must be >= 0".into()));
        }
        // disjointness: ε_{n+1} < s_n - s_{n+1}, and each support
        // (s_n, s_n + ε_n) must stay below s_{n-1}
        for i in 1..centers.len() {
            if !(centers[i] < centers[i - 1]) {
                return Err(Error::InvalidParameter("centers must decrease".into()));
            }
            if !(widths[i] < centers[i - 1] - centers[i]) {
                return Err(Error::InvalidParameter(format!(
                    "bump {i} overlaps its neighbour"
                )));
            }
        }
        let total: f64 = widths.iter().sum();
        if !total.is_finite() {
            return Err(Error::InvalidParameter("widths must sum finitely".into()));
        }
        Ok(Self {
            centers,
            widths,
            height,
        })
    }

    /// Smooth profile `16 x^2 (1-x)^2` on `(0,1)`, peak height 1.
    fn profile(x: f64) -> f64 {
        if x <= 0.0 || x >= 1.0 {
            return 0.0;
        }
        16.0 * x * x * (1.0 - x) * (1.0 - x)
    }

    /// Value of the bump sum at `s` (at most one bump is active).
    pub fn eval(&self, s: f64) -> f64 {
        for (&c, &w) in self.centers.iter().zip(self.widths.iter()) {
            if s > c && s < c + w {
                return self.height * Self::profile((s - c) / w);
            }
            if c + w < s {
                break; // centers decrease; nothing further can contain s
            }
        }
        0.0
    }

    /// Bump supports as intervals (for integrator refinement).
    pub fn supports(&self) -> Vec<(f64, f64)> {
        self.centers
            .iter()
            .zip(self.widths.iter())
            .map(|(&c, &w)| (c, c + w))
            .collect()
    }
}

/// The perturbed potential `W_inf + bumps`.
#[derive(Debug, Clone)]
pub struct BumpedPotential {
    pub tower: LogTower,
    pub bumps: BumpFamily,
}

impl BumpedPotential {
    pub fn eval(&self, s: f64) -> Result<f64> {
        Ok(self.tower.w_infinity(s)? + self.bumps.eval(s))
    }

    /// `limsup_{s->0} W(s)` sampled at bump peaks exceeds `1 + height`.
    pub fn peak_values(&self) -> Vec<f64> {
        self.bumps
            .centers
            .iter()
            .zip(self.bumps.widths.iter())
            .map(|(&c, &w)| self.eval(c + 0.5 * w).unwrap())
            .collect()
    }
}

/// One trial of the no-continuous-multiplier demonstration.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub s_start: f64,
    pub blowup_radius: Option<f64>,
    pub max_m: f64,
}

/// Report for a family of candidate initial data.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NoContinuousMultiplierReport {
    pub height: f64,
    pub trials: Vec<TrialRecord>,
    /// Escape radius of the unperturbed control from the same data.
    pub control: Vec<TrialRecord>,
    /// True when every perturbed trial escapes no later than its control
    /// and strictly inside the scan window.
    pub all_blow_up: bool,
}

/// Integrate the equality Riccati flow through the bumps from candidate
/// data `m(s_start) = 1 + nbar(s_start)` at decreasing `s_start`.
///
/// A surviving trajectory is reported in the records, not raised.
pub fn no_continuous_multiplier(
    potential: &BumpedPotential,
    trials: usize,
    s_max: f64,
) -> Result<NoContinuousMultiplierReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let tower = potential.tower;
    let supports = potential.bumps.supports();
    let mut recs = Vec::with_capacity(trials);
    let mut ctrl = Vec::with_capacity(trials);
    for k in 0..trials {
        let s_start = 1e-3 * 10f64.powi(-(k as i32));
        let m0 = 1.0 + tower.nbar(s_start)?;
        let bumped = escape_scan(
            |s| potential.eval(s).unwrap(),
            s_start,
            m0,
            s_max,
            1e6,
            &supports,
        );
        let control = escape_scan(
            |s| tower.w_infinity(s).unwrap(),
            s_start,
            m0,
            s_max,
            1e6,
            &[],
        );
        recs.push(TrialRecord {
            trial: k,
            s_start,
            blowup_radius: bumped.blowup_radius,
            max_m: bumped.max_m,
        });
        ctrl.push(TrialRecord {
            trial: k,
            s_start,
            blowup_radius: control.blowup_radius,
            max_m: control.max_m,
        });
    }
    let all_blow_up = recs.iter().zip(ctrl.iter()).all(|(b, c)| {
        match (b.blowup_radius, c.blowup_radius) {
            (Some(rb), Some(rc)) => rb <= rc,
            (Some(_), None) => true,
            _ => false,
        }
    });
    Ok(NoContinuousMultiplierReport {
        height: potential.bumps.height,
        trials: recs,
        control: ctrl,
        all_blow_up,
    })
}

/// Escape radius of a single perturbed run (used by the sweep tools).
pub fn escape_with_bumps(
    potential: &BumpedPotential,
    s_start: f64,
    s_max: f64,
) -> Result<EscapeTrace> {
    let m0 = 1.0 + potential.tower.nbar(s_start)?;
    Ok(escape_scan(
        |s| potential.eval(s).unwrap(),
        s_start,
        m0,
        s_max,
        1e6,
        &potential.bumps.supports(),
    ))
}
