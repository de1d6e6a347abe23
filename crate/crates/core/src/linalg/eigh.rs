//! Hermitian eigensolver: Householder reduction to a real tridiagonal matrix
//! followed by implicit-shift QL iterations.

use super::CMatrix;
use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;

/// Eigen-decomposition `A = V diag(values) V†`, eigenvalues ascending, eigenvectors in the columns of `vectors`.
#[derive(Clone, Debug)]
pub struct Eigh<T> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

const MAX_QL_SWEEPS: usize = 60;

/// Full eigen-decomposition of a Hermitian matrix.
pub fn eigh<T: Real>(a: &CMatrix<T>) -> Result<Eigh<T>> {
    check_input(a)?;
    let n = a.dim();
    let (mut d, mut e, q, phases) = householder_complex(a, true);
    let q = q.expect("accumulated reflector requested");
    let mut zt = vec![T::zero(); n * n];
    for i in 0..n {
        zt[i * n + i] = T::one();
    }
    ql_implicit(&mut d, &mut e, Some(&mut zt))?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].partial_cmp(&d[j]).expect("finite eigenvalues"));
    let values: Vec<T> = order.iter().map(|&i| d[i]).collect();

    let mut vectors = CMatrix::zeros(n, n);
    match q {
        Reflector::Identity => {
            for (col, &src) in order.iter().enumerate() {
                let z = &zt[src * n..(src + 1) * n];
                for i in 0..n {
                    vectors[(i, col)] = phases[i] * z[i];
                }
            }
        }
        Reflector::Dense(q) => {
            let mut qd = q;
            for i in 0..n {
                for (r, x) in qd.row_mut(i).iter_mut().enumerate() {
                    *x = *x * phases[r];
                }
            }
            for (col, &src) in order.iter().enumerate() {
                let z = &zt[src * n..(src + 1) * n];
                for i in 0..n {
                    let row = qd.row(i);
                    let mut acc = Complex::new(T::zero(), T::zero());
                    for (x, &zr) in row.iter().zip(z) {
                        acc = acc + *x * zr;
                    }
                    vectors[(i, col)] = acc;
                }
            }
        }
    }
    Ok(Eigh { values, vectors })
}

/// Eigenvalues only, ascending. Real symmetric inputs take a cheaper real reduction.
pub fn eigvalsh<T: Real>(a: &CMatrix<T>) -> Result<Vec<T>> {
    check_input(a)?;
    let (mut d, mut e) = if a.is_real() {
        householder_real(a)
    } else {
        let (d, e, _, _) = householder_complex(a, false);
        (d, e)
    };
    ql_implicit(&mut d, &mut e, None)?;
    d.sort_by(|x, y| x.partial_cmp(y).expect("finite eigenvalues"));
    Ok(d)
}

fn check_input<T: Real>(a: &CMatrix<T>) -> Result<()> {
    if !a.is_square() {
        return Err(Error::InvalidParameter("eigensolver needs a square matrix".into()));
    }
    if a.as_slice().iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
    }
    Ok(())
}

/// Squared column-tail size below which a reflection is skipped: dropping it
/// perturbs `A` by at most `ε‖A‖_F`, and it keeps `2/‖v‖²` finite.
fn negligible_tail<T: Real>(a: &CMatrix<T>) -> T {
    let scale = T::epsilon() * a.frobenius();
    scale * scale
}

enum Reflector<T> {
    Identity,
    Dense(CMatrix<T>),
}

/// Reduces Hermitian `a` to real symmetric tridiagonal form.
///
/// Returns the diagonal, the off-diagonal moduli (last entry zero), the
/// accumulated unitary `Q` when requested, and the diagonal phases `φ` such
/// that `A = (Q diag(φ)) T (Q diag(φ))†`.
fn householder_complex<T: Real>(
    a: &CMatrix<T>,
    accumulate: bool,
) -> (Vec<T>, Vec<T>, Option<Reflector<T>>, Vec<Complex<T>>) {
    let n = a.dim();
    let zero = Complex::new(T::zero(), T::zero());
    let mut w = a.clone();
    let mut sub = vec![zero; n];
    let mut q: Option<CMatrix<T>> = None;
    let two = T::lit(2.0);
    let negligible = negligible_tail(a);

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let x: Vec<Complex<T>> = (k + 1..n).map(|i| w[(i, k)]).collect();
        let alpha = x.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt();
        if alpha == T::zero() {
            sub[k] = zero;
            continue;
        }
        let tail = x[1..].iter().map(|z| z.norm_sqr()).sum::<T>();
        if m == 1 || tail <= negligible {
            sub[k] = x[0];
            continue;
        }
        let x0n = x[0].norm();
        let phase = if x0n == T::zero() { Complex::new(T::one(), T::zero()) } else { x[0] / x0n };
        let mut v = x;
        v[0] = v[0] + phase * alpha;
        let vnorm2 = v.iter().map(|z| z.norm_sqr()).sum::<T>();
        let beta = two / vnorm2;
        sub[k] = -(phase * alpha);

        // p = β A22 v
        let mut p = vec![zero; m];
        for (ii, pi) in p.iter_mut().enumerate() {
            let row = &w.row(k + 1 + ii)[k + 1..];
            let mut acc = zero;
            for (a_ij, &vj) in row.iter().zip(&v) {
                acc = acc + *a_ij * vj;
            }
            *pi = acc * beta;
        }
        let s: T = v.iter().zip(&p).map(|(vi, pi)| (vi.conj() * *pi).re).sum();
        let half = beta * s / two;
        let wv: Vec<Complex<T>> = p.iter().zip(&v).map(|(&pi, &vi)| pi - vi * half).collect();
        for ii in 0..m {
            let (vi, wi) = (v[ii], wv[ii]);
            let row = &mut w.row_mut(k + 1 + ii)[k + 1..];
            for (jj, a_ij) in row.iter_mut().enumerate() {
                *a_ij = *a_ij - vi * wv[jj].conj() - wi * v[jj].conj();
            }
        }

        if accumulate {
            let qm = q.get_or_insert_with(|| CMatrix::identity(n));
            for i in 0..n {
                let row = &mut qm.row_mut(i)[k + 1..];
                let mut dot = zero;
                for (qij, &vj) in row.iter().zip(&v) {
                    dot = dot + *qij * vj;
                }
                let dot = dot * beta;
                for (qij, &vj) in row.iter_mut().zip(&v) {
                    *qij = *qij - dot * vj.conj();
                }
            }
        }
    }

    let d: Vec<T> = (0..n).map(|i| w[(i, i)].re).collect();
    let mut phases = vec![Complex::new(T::one(), T::zero()); n];
    let mut e = vec![T::zero(); n];
    for k in 0..n.saturating_sub(1) {
        let r = sub[k].norm();
        e[k] = r;
        phases[k + 1] = if r == T::zero() { phases[k] } else { phases[k] * (sub[k] / r) };
    }
    let reflector = if !accumulate {
        None
    } else {
        Some(match q {
            Some(m) => Reflector::Dense(m),
            None => Reflector::Identity,
        })
    };
    (d, e, reflector, phases)
}

/// Real symmetric reduction working on the lower triangle only.
fn householder_real<T: Real>(a: &CMatrix<T>) -> (Vec<T>, Vec<T>) {
    let n = a.dim();
    let mut w: Vec<T> = a.as_slice().iter().map(|z| z.re).collect();
    let mut e = vec![T::zero(); n];
    let two = T::lit(2.0);
    let mut v = vec![T::zero(); n];
    let mut p = vec![T::zero(); n];
    let negligible = negligible_tail(a);

    for k in 0..n.saturating_sub(1) {
        let m = n - k - 1;
        let x0 = w[(k + 1) * n + k];
        let tail: T = (k + 2..n).map(|i| w[i * n + k] * w[i * n + k]).sum();
        if m == 1 || tail <= negligible {
            e[k] = x0.abs();
            continue;
        }
        let alpha = (x0 * x0 + tail).sqrt();
        let sign = if x0 < T::zero() { -T::one() } else { T::one() };
        let v = &mut v[..m];
        for (ii, vi) in v.iter_mut().enumerate() {
            *vi = w[(k + 1 + ii) * n + k];
        }
        v[0] += sign * alpha;
        let vnorm2: T = v.iter().map(|&x| x * x).sum();
        let beta = two / vnorm2;
        e[k] = alpha;

        // p = β A22 v using the lower triangle.
        let p = &mut p[..m];
        p.iter_mut().for_each(|x| *x = T::zero());
        for ii in 0..m {
            let row = &w[(k + 1 + ii) * n + k + 1..(k + 1 + ii) * n + k + 1 + ii + 1];
            let vi = v[ii];
            let mut acc = T::zero();
            for jj in 0..ii {
                let a_ij = row[jj];
                acc += a_ij * v[jj];
                p[jj] += a_ij * vi;
            }
            p[ii] += acc + row[ii] * vi;
        }
        p.iter_mut().for_each(|x| *x *= beta);
        let s: T = v.iter().zip(p.iter()).map(|(&a, &b)| a * b).sum();
        let half = beta * s / two;
        for (pi, &vi) in p.iter_mut().zip(v.iter()) {
            *pi -= half * vi;
        }
        for ii in 0..m {
            let (vi, wi) = (v[ii], p[ii]);
            let row = &mut w[(k + 1 + ii) * n + k + 1..(k + 1 + ii) * n + k + 1 + ii + 1];
            for (jj, a_ij) in row.iter_mut().enumerate() {
                *a_ij -= vi * p[jj] + wi * v[jj];
            }
        }
    }
    let d = (0..n).map(|i| w[i * n + i]).collect();
    (d, e)
}

/// Implicit-shift QL on the symmetric tridiagonal `(d, e)`, where `e[i]`
/// couples `d[i]` and `d[i+1]`. Rotations are applied to the rows of `zt`.
fn ql_implicit<T: Real>(d: &mut [T], e: &mut [T], mut zt: Option<&mut [T]>) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    e[n - 1] = T::zero();
    let eps = T::epsilon();
    let two = T::lit(2.0);
    // Absolute floor so blocks of near-zero eigenvalues still deflate.
    let anorm = (0..n).map(|i| d[i].abs() + e[i].abs()).fold(T::zero(), |a, b| a.max(b));
    let floor = eps * anorm;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= eps * dd || e[m].abs() <= floor {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_SWEEPS {
                return Err(Error::NoConvergence);
            }
            let mut g = (d[l + 1] - d[l]) / (two * e[l]);
            let mut r = g.hypot(T::one());
            let signed_r = if g >= T::zero() { r.abs() } else { -r.abs() };
            g = d[m] - d[l] + e[l] / (g + signed_r);
            let (mut s, mut c, mut p) = (T::one(), T::one(), T::zero());
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] -= p;
                    e[m] = T::zero();
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + two * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = zt.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut((i + 1) * n);
                    let zi = &mut lo[i * n..];
                    let zi1 = &mut hi[..n];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    Ok(())
}
