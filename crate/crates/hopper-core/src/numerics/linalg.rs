//! Dense linear algebra for the small systems this crate needs: LU with
//! partial pivoting (KKT solves, Newton steps) and a real nonsymmetric
//! eigensolver (Hessenberg reduction followed by shifted double-step QR,
//! the classical EISPACK `orthes`/`hqr` pair).

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math;

/// Scalar field for the LU routines (`f64` or `Complex64`).
pub trait Scalar:
    Copy
    + PartialEq
    + core::ops::Add<Output = Self>
    + core::ops::Sub<Output = Self>
    + core::ops::Mul<Output = Self>
    + core::ops::Div<Output = Self>
    + core::ops::Neg<Output = Self>
{
    fn zero() -> Self;
    fn modulus(self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        math::hypot(self.re, self.im)
    }
}

/// Solves `A x = b` in place for a row-major `n x n` matrix over `f64` or
/// `Complex64`, using LU factorization with partial pivoting.
///
/// Both `a` and `b` are consumed as scratch; the solution is left in `b`.
/// Returns the ratio of largest to smallest pivot as a cheap conditioning
/// estimate. Fails with [`Error::SingularMatrix`] when a pivot falls below
/// `n * eps * max|a_ij|`.
pub fn lu_solve_slice<T: Scalar>(a: &mut [T], n: usize, b: &mut [T]) -> Result<f64> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n);

    let mut scale = 0.0f64;
    for v in a.iter() {
        scale = scale.max(v.modulus());
    }
    let tiny = (n as f64) * f64::EPSILON * scale;

    let mut max_piv = 0.0f64;
    let mut min_piv = f64::INFINITY;

    for col in 0..n {
        // pivot search
        let mut p_row = col;
        let mut p_val = a[col * n + col].modulus();
        for row in (col + 1)..n {
            let v = a[row * n + col].modulus();
            if v > p_val {
                p_val = v;
                p_row = row;
            }
        }
        if p_val <= tiny || p_val == 0.0 {
            return Err(Error::SingularMatrix {
                cond_estimate: if p_val > 0.0 { max_piv / p_val } else { f64::INFINITY },
            });
        }
        if p_row != col {
            for j in 0..n {
                a.swap(col * n + j, p_row * n + j);
            }
            b.swap(col, p_row);
        }
        max_piv = max_piv.max(p_val);
        min_piv = min_piv.min(p_val);

        let piv = a[col * n + col];
        for row in (col + 1)..n {
            let factor = a[row * n + col] / piv;
            if factor.modulus() == 0.0 {
                continue;
            }
            a[row * n + col] = factor;
            for j in (col + 1)..n {
                let sub = factor * a[col * n + j];
                a[row * n + j] = a[row * n + j] - sub;
            }
            let sub = factor * b[col];
            b[row] = b[row] - sub;
        }
    }

    // back substitution
    for col in (0..n).rev() {
        let mut acc = b[col];
        for j in (col + 1)..n {
            acc = acc - a[col * n + j] * b[j];
        }
        b[col] = acc / a[col * n + col];
    }

    Ok(max_piv / min_piv)
}

/// Solves `A x = b` for a fixed-size real system, returning the solution.
pub fn lu_solve<const N: usize>(a: &[[f64; N]; N], b: &[f64; N]) -> Result<[f64; N]> {
    let mut aw = *a;
    let mut x = *b;
    lu_solve_slice(aw.as_flattened_mut(), N, &mut x)?;
    Ok(x)
}

/// As [`lu_solve`], but also reports the pivot-ratio condition estimate.
pub fn lu_solve_cond<const N: usize>(a: &[[f64; N]; N], b: &[f64; N]) -> Result<([f64; N], f64)> {
    let mut aw = *a;
    let mut x = *b;
    let cond = lu_solve_slice(aw.as_flattened_mut(), N, &mut x)?;
    Ok((x, cond))
}

/// Maximum number of QR sweeps before giving up.
pub const QR_SWEEP_CAP: usize = 200;

/// Eigenvalues of a real row-major `n x n` matrix.
///
/// The matrix is reduced to upper Hessenberg form by Householder similarity
/// transforms, then iterated to quasi-triangular form with the implicit
/// double-shift QR step; trailing 2x2 blocks are resolved analytically so
/// complex conjugate pairs come out exact. The result is sorted by
/// descending magnitude with conjugate pairs adjacent (positive imaginary
/// part first).
pub fn eigenvalues(a: &[f64], n: usize) -> Result<Vec<Complex64>> {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(Vec::new());
    }
    if n == 1 {
        return Ok(vec![Complex64::new(a[0], 0.0)]);
    }

    let mut h = a.to_vec();
    hessenberg(&mut h, n);
    let mut re = vec![0.0; n];
    let mut im = vec![0.0; n];
    hqr(&mut h, n, &mut re, &mut im)?;

    let mut eigs: Vec<Complex64> = re
        .iter()
        .zip(im.iter())
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect();
    eigs.sort_by(|a, b| {
        let (ma, mb) = (a.modulus(), b.modulus());
        mb.partial_cmp(&ma)
            .unwrap_or(core::cmp::Ordering::Equal)
            .then(b.re.partial_cmp(&a.re).unwrap_or(core::cmp::Ordering::Equal))
            .then(b.im.partial_cmp(&a.im).unwrap_or(core::cmp::Ordering::Equal))
    });
    Ok(eigs)
}

/// Householder reduction to upper Hessenberg form (EISPACK `orthes`,
/// transform not accumulated).
fn hessenberg(h: &mut [f64], n: usize) {
    let high = n - 1;
    let mut ort = vec![0.0; n];

    for m in 1..high {
        let mut scale = 0.0;
        for i in m..=high {
            scale += h[i * n + m - 1].abs();
        }
        if scale == 0.0 {
            continue;
        }

        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[i * n + m - 1] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = math::sqrt(hh);
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        // similarity transform H <- (I - u u^T / hh) H (I - u u^T / hh)
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[i * n + j];
            }
            f /= hh;
            for i in m..=high {
                h[i * n + j] -= f * ort[i];
            }
        }
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[i * n + j];
            }
            f /= hh;
            for j in m..=high {
                h[i * n + j] -= f * ort[j];
            }
        }

        h[m * n + m - 1] = scale * g;
    }

    // entries below the first subdiagonal are implicitly zero from here on
    for i in 2..n {
        for j in 0..(i - 1) {
            h[i * n + j] = 0.0;
        }
    }
}

/// Shifted double-step QR on an upper Hessenberg matrix (EISPACK `hqr`,
/// eigenvalues only). Roots land in `wr`/`wi`.
fn hqr(h: &mut [f64], nn: usize, wr: &mut [f64], wi: &mut [f64]) -> Result<()> {
    let eps = f64::EPSILON / 2.0;
    let low: isize = 0;
    let high = nn - 1;

    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h[i * nn + j].abs();
        }
    }

    let mut en: isize = high as isize;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut sweeps = 0usize;

    let (mut p, mut q, mut r, mut s, mut z, mut w, mut x, mut y);
    p = 0.0;
    q = 0.0;
    r = 0.0;

    while en >= low {
        let n = en as usize;

        // look for a single small subdiagonal element
        let mut l = n;
        while l as isize > low {
            s = h[(l - 1) * nn + l - 1].abs() + h[l * nn + l].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[l * nn + l - 1].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == n {
            // one real root
            wr[n] = h[n * nn + n] + exshift;
            wi[n] = 0.0;
            en -= 1;
            iter = 0;
            continue;
        }
        if l == n - 1 {
            // a 2x2 trailing block: resolve analytically
            w = h[n * nn + n - 1] * h[(n - 1) * nn + n];
            p = (h[(n - 1) * nn + n - 1] - h[n * nn + n]) / 2.0;
            q = p * p + w;
            z = math::sqrt(q.abs());
            x = h[n * nn + n] + exshift;
            if q >= 0.0 {
                // real pair
                z = if p >= 0.0 { p + z } else { p - z };
                wr[n - 1] = x + z;
                wr[n] = if z != 0.0 { x - w / z } else { wr[n - 1] };
                wi[n - 1] = 0.0;
                wi[n] = 0.0;
            } else {
                // complex conjugate pair
                wr[n - 1] = x + p;
                wr[n] = x + p;
                wi[n - 1] = z;
                wi[n] = -z;
            }
            en -= 2;
            iter = 0;
            continue;
        }

        // no convergence yet: form shift
        x = h[n * nn + n];
        y = h[(n - 1) * nn + n - 1];
        w = h[n * nn + n - 1] * h[(n - 1) * nn + n];

        if iter == 10 {
            // Wilkinson's exceptional shift
            exshift += x;
            for i in (low as usize)..=n {
                h[i * nn + i] -= x;
            }
            s = h[n * nn + n - 1].abs() + h[(n - 1) * nn + n - 2].abs();
            x = 0.75 * s;
            y = x;
            w = -0.4375 * s * s;
        }
        if iter == 30 {
            // second exceptional shift
            s = (y - x) / 2.0;
            s = s * s + w;
            if s > 0.0 {
                s = math::sqrt(s);
                if y < x {
                    s = -s;
                }
                s = x - w / ((y - x) / 2.0 + s);
                for i in (low as usize)..=n {
                    h[i * nn + i] -= s;
                }
                exshift += s;
                x = 0.964;
                y = x;
                w = x;
            }
        }

        iter += 1;
        sweeps += 1;
        if sweeps > QR_SWEEP_CAP {
            return Err(Error::EigenNoConvergence { sweeps });
        }

        // look for two consecutive small subdiagonal elements
        let mut m = n - 2;
        loop {
            z = h[m * nn + m];
            r = x - z;
            s = y - z;
            p = (r * s - w) / h[(m + 1) * nn + m] + h[m * nn + m + 1];
            q = h[(m + 1) * nn + m + 1] - z - r - s;
            r = h[(m + 2) * nn + m + 1];
            s = p.abs() + q.abs() + r.abs();
            p /= s;
            q /= s;
            r /= s;
            if m == l {
                break;
            }
            let tst = h[m * nn + m - 1].abs() * (q.abs() + r.abs());
            let ref_sz = p.abs()
                * (h[(m - 1) * nn + m - 1].abs() + z.abs() + h[(m + 1) * nn + m + 1].abs());
            if tst < eps * ref_sz {
                break;
            }
            m -= 1;
        }

        for i in (m + 2)..=n {
            h[i * nn + i - 2] = 0.0;
            if i > m + 2 {
                h[i * nn + i - 3] = 0.0;
            }
        }

        // double QR sweep on rows l..=n, columns m..=n
        for k in m..n {
            let notlast = k != n - 1;
            if k != m {
                p = h[k * nn + k - 1];
                q = h[(k + 1) * nn + k - 1];
                r = if notlast { h[(k + 2) * nn + k - 1] } else { 0.0 };
                x = p.abs() + q.abs() + r.abs();
                if x == 0.0 {
                    continue;
                }
                p /= x;
                q /= x;
                r /= x;
            }

            s = math::sqrt(p * p + q * q + r * r);
            if p < 0.0 {
                s = -s;
            }
            if s == 0.0 {
                continue;
            }
            if k != m {
                h[k * nn + k - 1] = -s * x;
            } else if l != m {
                h[k * nn + k - 1] = -h[k * nn + k - 1];
            }
            p += s;
            x = p / s;
            y = q / s;
            z = r / s;
            q /= p;
            r /= p;

            // row modification
            for j in k..nn {
                let mut pp = h[k * nn + j] + q * h[(k + 1) * nn + j];
                if notlast {
                    pp += r * h[(k + 2) * nn + j];
                    h[(k + 2) * nn + j] -= pp * z;
                }
                h[k * nn + j] -= pp * x;
                h[(k + 1) * nn + j] -= pp * y;
            }

            // column modification
            for i in 0..=n.min(k + 3) {
                let mut pp = x * h[i * nn + k] + y * h[i * nn + k + 1];
                if notlast {
                    pp += z * h[i * nn + k + 2];
                    h[i * nn + k + 2] -= pp * r;
                }
                h[i * nn + k] -= pp;
                h[i * nn + k + 1] -= pp * q;
            }
        }
    }

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn lu_identity_returns_rhs() {
        let a = [[1.0, 0.0], [0.0, 1.0]];
        let b = [3.0, -4.5];
        assert_eq!(lu_solve(&a, &b).unwrap(), b);
    }

    #[test]
    fn lu_diagonal() {
        let a = [[2.0, 0.0], [0.0, 4.0]];
        let x = lu_solve(&a, &[2.0, 8.0]).unwrap();
        assert_eq!(x, [1.0, 2.0]);
    }

    #[test]
    fn lu_singular_reports_error() {
        let a = [[1.0, 2.0], [2.0, 4.0]];
        match lu_solve(&a, &[1.0, 1.0]) {
            Err(Error::SingularMatrix { .. }) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }

    #[test]
    fn lu_needs_pivoting() {
        // zero leading pivot forces a row swap
        let a = [[0.0, 1.0], [1.0, 0.0]];
        let x = lu_solve(&a, &[2.0, 3.0]).unwrap();
        assert_eq!(x, [3.0, 2.0]);
    }

    #[test]
    fn eig_2x2_real() {
        // companion of lambda^2 + 3 lambda + 2 -> {-1, -2}
        let a = [0.0, 1.0, -2.0, -3.0];
        let e = eigenvalues(&a, 2).unwrap();
        assert_close(e[0].re, -2.0, 1e-12);
        assert_close(e[1].re, -1.0, 1e-12);
        assert_close(e[0].im, 0.0, 1e-12);
    }

    #[test]
    fn eig_rotation_is_pure_imaginary() {
        let a = [0.0, -1.0, 1.0, 0.0];
        let e = eigenvalues(&a, 2).unwrap();
        assert_close(e[0].im, 1.0, 1e-12);
        assert_close(e[1].im, -1.0, 1e-12);
        assert_close(e[0].re, 0.0, 1e-12);
    }

    #[test]
    fn eig_companion_cubic() {
        // roots 1, 2, 3: x^3 - 6x^2 + 11x - 6
        let a = [0.0, 0.0, 6.0, 1.0, 0.0, -11.0, 0.0, 1.0, 6.0];
        let e = eigenvalues(&a, 3).unwrap();
        assert_close(e[0].re, 3.0, 1e-8);
        assert_close(e[1].re, 2.0, 1e-8);
        assert_close(e[2].re, 1.0, 1e-8);
    }

    #[test]
    fn eig_upper_triangular_reads_diagonal() {
        let a = [
            4.0, 1.0, 2.0, 0.5, //
            0.0, -3.0, 1.0, 0.2, //
            0.0, 0.0, 2.0, 7.0, //
            0.0, 0.0, 0.0, -1.0,
        ];
        let e = eigenvalues(&a, 4).unwrap();
        let mags: Vec<f64> = e.iter().map(|c| c.modulus()).collect();
        assert!(mags.windows(2).all(|w| w[0] >= w[1]), "sorted descending");
        assert_close(e[0].re, 4.0, 1e-10);
        assert_close(e[1].re, -3.0, 1e-10);
        assert_close(e[2].re, 2.0, 1e-10);
        assert_close(e[3].re, -1.0, 1e-10);
    }
}
