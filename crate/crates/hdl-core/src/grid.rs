//! Radial grids and sampled functions.

use crate::{Error, Result};

/// Log-uniform grid of `n` points on `[lo, hi]` (inclusive endpoints).
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    assert!(lo > 0.0 && hi > lo && n >= 2);
    let (tl, th) = (lo.ln(), hi.ln());
    let mut g: Vec<f64> = (0..n)
        .map(|i| (tl + (th - tl) * i as f64 / (n - 1) as f64).exp())
        .collect();
    // pin endpoints exactly
    g[0] = lo;
    g[n - 1] = hi;
    g
}

/// Log-uniform grid with a fixed points-per-decade density.
pub fn log_grid_ppd(lo: f64, hi: f64, points_per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * points_per_decade as f64).ceil() as usize).max(2) + 1;
    log_grid(lo, hi, n)
}

/// A real function sampled on a strictly increasing positive radial grid.
#[derive(Debug, Clone)]
pub struct GridFunction {
    pub r: Vec<f64>,
    pub v: Vec<f64>,
    /// Analytic derivative samples, when the generating function has one.
    pub dv: Option<Vec<f64>>,
    /// Dirichlet flag: the function vanishes at both grid endpoints.
    pub dirichlet: bool,
}

impl GridFunction {
    pub fn new(r: Vec<f64>, v: Vec<f64>, dirichlet: bool) -> Result<Self> {
        if r.len() != v.len() || r.len() < 2 {
            return Err(Error::BadGrid);
        }
        if !(r[0] > 0.0) || r.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::BadGrid);
        }
        if dirichlet && (v[0] != 0.0 || v[v.len() - 1] != 0.0) {
            return Err(Error::SupportViolation {
                r: if v[0] != 0.0 { r[0] } else { r[r.len() - 1] },
                value: if v[0] != 0.0 { v[0] } else { v[v.len() - 1] },
            });
        }
        Ok(Self {
            r,
            v,
            dv: None,
            dirichlet,
        })
    }

    pub fn with_derivative(mut self, dv: Vec<f64>) -> Result<Self> {
        if dv.len() != self.r.len() {
            return Err(Error::BadGrid);
        }
        self.dv = Some(dv);
        Ok(self)
    }

    /// Sample a function (and optionally its derivative) on a grid.
    pub fn sample<F, G>(r: Vec<f64>, f: F, df: Option<G>, dirichlet: bool) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let v: Vec<f64> = r.iter().map(|&x| f(x)).collect();
        let mut gf = Self::new(r, v, dirichlet)?;
        if let Some(df) = df {
            let dv: Vec<f64> = gf.r.iter().map(|&x| df(x)).collect();
            gf.dv = Some(dv);
        }
        Ok(gf)
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Linear interpolation (constant extrapolation outside the grid).
    pub fn interp(&self, x: f64) -> f64 {
        let n = self.r.len();
        if x <= self.r[0] {
            return self.v[0];
        }
        if x >= self.r[n - 1] {
            return self.v[n - 1];
        }
        let i = match self.r.partition_point(|&g| g < x) {
            0 => 1,
            j => j,
        };
        let (r0, r1) = (self.r[i - 1], self.r[i]);
        let w = (x - r0) / (r1 - r0);
        self.v[i - 1] * (1.0 - w) + self.v[i] * w
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_grid_endpoints_and_monotone() {
        let g = log_grid(1e-6, 1e2, 257);
        assert_eq!(g[0], 1e-6);
        assert_eq!(g[256], 1e2);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn grid_function_validation() {
        assert!(GridFunction::new(vec![1.0, 2.0], vec![0.0, 0.0], true).is_ok());
        assert!(GridFunction::new(vec![2.0, 1.0], vec![0.0, 0.0], false).is_err());
        assert!(GridFunction::new(vec![0.0, 1.0], vec![0.0, 0.0], false).is_err());
        assert!(matches!(
            GridFunction::new(vec![1.0, 2.0], vec![0.5, 0.0], true),
            Err(Error::SupportViolation { .. })
        ));
    }

    #[test]
    fn interpolation_is_exact_on_nodes() {
        let g = GridFunction::new(vec![1.0, 2.0, 4.0], vec![1.0, 3.0, 9.0], false).unwrap();
        assert_eq!(g.interp(2.0), 3.0);
        assert_eq!(g.interp(3.0), 6.0);
        assert_eq!(g.interp(0.5), 1.0);
        assert_eq!(g.interp(10.0), 9.0);
    }
}
