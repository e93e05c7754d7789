//! Tridiagonal generalized eigensolver for discrete Rayleigh quotients.
//!
//! Quotients `∫ w_a |v'|^2 / ∫ w_b |v|^2` are discretized with P1 elements on
//! the radial grid (Dirichlet at both ends), giving a symmetric positive
//! definite tridiagonal pencil `A x = λ B x`. The smallest eigenvalue is the
//! discrete sharp constant; a conforming subspace keeps it an upper bound of
//! the continuum infimum.

use crate::{Error, Result};

/// Symmetric tridiagonal matrix: `diag` of length n, `off` of length n-1.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl Tridiag {
    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn mul(&self, x: &[f64], out: &mut [f64]) {
        let n = self.n();
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                v += self.off[i] * x[i + 1];
            }
            out[i] = v;
        }
    }

    /// LDL^T factorization (no pivoting; valid for the SPD matrices here).
    fn factor(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = self.n();
        let mut d = vec![0.0; n];
        let mut l = vec![0.0; n.saturating_sub(1)];
        d[0] = self.diag[0];
        if d[0] <= 0.0 {
            return Err(Error::Eigen("matrix not positive definite".into()));
        }
        for i in 1..n {
            l[i - 1] = self.off[i - 1] / d[i - 1];
            d[i] = self.diag[i] - l[i - 1] * self.off[i - 1];
            if d[i] <= 0.0 || !d[i].is_finite() {
                return Err(Error::Eigen(format!("pivot {i} not positive")));
            }
        }
        Ok((d, l))
    }
}

fn solve_ldlt(d: &[f64], l: &[f64], rhs: &mut [f64]) {
    let n = d.len();
    for i in 1..n {
        rhs[i] -= l[i - 1] * rhs[i - 1];
    }
    for i in 0..n {
        rhs[i] /= d[i];
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= l[i] * rhs[i + 1];
    }
}

/// Smallest eigenvalue (and vector) of `A x = λ B x` by inverse power
/// iteration with shift 0.
pub fn smallest_eigenpair(
    a: &Tridiag,
    b: &Tridiag,
    tol: f64,
    max_iter: usize,
) -> Result<(f64, Vec<f64>)> {
    let n = a.n();
    if n == 0 || b.n() != n {
        return Err(Error::Eigen("dimension mismatch".into()));
    }
    let (d, l) = a.factor()?;
    let mut x = vec![1.0; n];
    let mut bx = vec![0.0; n];
    let mut ax = vec![0.0; n];
    let mut lambda = f64::INFINITY;
    for _ in 0..max_iter {
        b.mul(&x, &mut bx);
        let mut y = bx.clone();
        solve_ldlt(&d, &l, &mut y);
        // normalize in the B-inner product
        b.mul(&y, &mut bx);
        let nb: f64 = y.iter().zip(&bx).map(|(u, v)| u * v).sum();
        if !(nb > 0.0) {
            return Err(Error::Eigen("degenerate iterate".into()));
        }
        let scale = nb.sqrt();
        for v in y.iter_mut() {
            *v /= scale;
        }
        x = y;
        a.mul(&x, &mut ax);
        b.mul(&x, &mut bx);
        let num: f64 = x.iter().zip(&ax).map(|(u, v)| u * v).sum();
        let den: f64 = x.iter().zip(&bx).map(|(u, v)| u * v).sum();
        let next = num / den;
        if (next - lambda).abs() <= tol * next.abs() {
            return Ok((next, x));
        }
        lambda = next;
    }
    Ok((lambda, x))
}

/// Assemble the P1 pencil for `∫ w_a |v'|^2 dr` against `∫ w_b |v|^2 dr` on
/// `grid` with Dirichlet ends. Cell integrals use 3-point Gauss (exact for
/// the polynomial weights used by the verifier).
pub fn assemble_p1<FA, FB>(grid: &[f64], wa: FA, wb: FB) -> (Tridiag, Tridiag)
where
    FA: Fn(f64) -> f64,
    FB: Fn(f64) -> f64,
{
    let n = grid.len();
    assert!(n >= 3, "need at least one interior node");
    let m = n - 2; // interior dofs
    let mut a = Tridiag {
        diag: vec![0.0; m],
        off: vec![0.0; m.saturating_sub(1)],
    };
    let mut b = Tridiag {
        diag: vec![0.0; m],
        off: vec![0.0; m.saturating_sub(1)],
    };
    // 3-point Gauss-Legendre on [0,1]
    const GP: [f64; 3] = [0.112701665379258311, 0.5, 0.887298334620741689];
    const GW: [f64; 3] = [5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0];
    for c in 0..n - 1 {
        let (r0, r1) = (grid[c], grid[c + 1]);
        let h = r1 - r0;
        let (mut ia, mut ib00, mut ib01, mut ib11) = (0.0, 0.0, 0.0, 0.0);
        for (gp, gw) in GP.iter().zip(GW.iter()) {
            let r = r0 + h * gp;
            let w = gw * h;
            ia += wa(r) * w;
            let p0 = 1.0 - gp; // hat centered at r0
            let p1 = *gp; // hat centered at r1
            let wbr = wb(r) * w;
            ib00 += wbr * p0 * p0;
            ib01 += wbr * p0 * p1;
            ib11 += wbr * p1 * p1;
        }
        let ka = ia / (h * h); // gradient term: phi' = ±1/h on the cell
        let (i0, i1) = (c as isize - 1, c as isize); // interior indices
        if i0 >= 0 {
            a.diag[i0 as usize] += ka;
            b.diag[i0 as usize] += ib00;
        }
        if (i1 as usize) < m {
            a.diag[i1 as usize] += ka;
            b.diag[i1 as usize] += ib11;
        }
        if i0 >= 0 && (i1 as usize) < m {
            a.off[i0 as usize] += -ka;
            b.off[i0 as usize] += ib01;
        }
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_laplacian_eigenvalue() {
        // -u'' = λ u on (0,1): λ_1 = π², via A = ∫u'², B = ∫u²
        let n = 2001;
        let grid: Vec<f64> = (0..n).map(|i| 1e-9 + i as f64 / (n - 1) as f64).collect();
        let (a, b) = assemble_p1(&grid, |_| 1.0, |_| 1.0);
        let (lam, _) = smallest_eigenpair(&a, &b, 1e-12, 400).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!(
            (lam - pi2).abs() / pi2 < 1e-5,
            "λ = {lam}, expected ≈ {pi2}"
        );
        // conforming discretization bounds the eigenvalue from above
        assert!(lam >= pi2);
    }
}
