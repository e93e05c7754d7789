//! Quadrature on radial grids.
//!
//! Everything singular here lives at the origin with an integrable
//! `1/(s log^2 s)`-type profile, so the workhorse is composite quadrature in
//! `t = log s`, where those integrands are smooth and slowly varying.

/// Trapezoid rule over an arbitrary strictly increasing grid.
pub fn trapezoid(x: &[f64], y: &[f64]) -> f64 {
    debug_assert_eq!(x.len(), y.len());
    let mut acc = 0.0;
    for i in 1..x.len() {
        acc += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
    }
    acc
}

/// Composite trapezoid of `f` over `[lo, hi]`, uniform in `log x`.
pub fn trapezoid_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points_per_decade: usize) -> f64 {
    assert!(lo > 0.0 && hi > lo);
    let (tl, th) = (lo.ln(), hi.ln());
    let n = (((th - tl) / std::f64::consts::LN_10 * points_per_decade as f64).ceil() as usize)
        .max(2);
    let h = (th - tl) / n as f64;
    // integrand in t-coordinates carries the Jacobian x = e^t
    let g = |t: f64| {
        let x = t.exp();
        f(x) * x
    };
    let mut acc = 0.5 * (g(tl) + g(th));
    for i in 1..n {
        acc += g(tl + h * i as f64);
    }
    acc * h
}

/// Composite Simpson of `f` over `[lo, hi]`, uniform in `log x`.
pub fn simpson_log<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, points_per_decade: usize) -> f64 {
    assert!(lo > 0.0 && hi > lo);
    let (tl, th) = (lo.ln(), hi.ln());
    let mut n = (((th - tl) / std::f64::consts::LN_10 * points_per_decade as f64).ceil() as usize)
        .max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = (th - tl) / n as f64;
    let g = |t: f64| {
        let x = t.exp();
        f(x) * x
    };
    let mut acc = g(tl) + g(th);
    for i in 1..n {
        acc += g(tl + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Composite Simpson of `g(t)` over `[tl, th]` in plain coordinates.
pub fn simpson<F: Fn(f64) -> f64>(g: F, tl: f64, th: f64, n_min: usize) -> f64 {
    let mut n = n_min.max(2);
    if n % 2 == 1 {
        n += 1;
    }
    let h = (th - tl) / n as f64;
    let mut acc = g(tl) + g(th);
    for i in 1..n {
        acc += g(tl + h * i as f64) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Bisection root finder on a bracketing interval.
///
/// The callers bracket sign changes of continuous margins (channel potential
/// minus one, envelope crossings), so plain bisection is the robust choice.
pub fn bisect<F: Fn(f64) -> f64>(
    f: F,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> crate::Result<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.signum() == fhi.signum() {
        return Err(crate::Error::BracketFailure { lo, hi });
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating point resolution
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
