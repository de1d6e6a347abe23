use super::{CMatrix, Eigh};
use crate::error::{Error, Result};
use crate::scalar::Real;
use num_complex::Complex;

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigensolver for Hermitian matrices.
///
/// Slower than [`super::eigh`] but structurally independent, which makes it a
/// cross-check for the Householder/QL path.
pub fn jacobi_eigh<T: Real>(a: &CMatrix<T>) -> Result<Eigh<T>> {
    if !a.is_square() {
        return Err(Error::InvalidParameter("eigensolver needs a square matrix".into()));
    }
    let n = a.dim();
    let mut w = a.clone();
    let mut v = CMatrix::identity(n);
    let scale = w.frobenius().max(T::min_positive_value());
    let tol = T::epsilon() * T::epsilon() * scale * scale;

    for _ in 0..MAX_SWEEPS {
        let off: T = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| w[(i, j)].norm_sqr()).sum();
        if off <= tol {
            let values: Vec<T> = (0..n).map(|i| w[(i, i)].re).collect();
            return Ok(sorted(values, v));
        }
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut w, &mut v, p, q);
            }
        }
    }
    Err(Error::NoConvergence)
}

fn rotate<T: Real>(w: &mut CMatrix<T>, v: &mut CMatrix<T>, p: usize, q: usize) {
    let apq = w[(p, q)];
    let b = apq.norm();
    if b == T::zero() {
        return;
    }
    let n = w.dim();
    let u = apq / b;
    let two = T::lit(2.0);
    let tau = (w[(q, q)].re - w[(p, p)].re) / (two * b);
    let t = if tau >= T::zero() {
        T::one() / (tau + (T::one() + tau * tau).sqrt())
    } else {
        -T::one() / (-tau + (T::one() + tau * tau).sqrt())
    };
    let c = T::one() / (T::one() + t * t).sqrt();
    let s = t * c;
    let g_pp = Complex::new(c, T::zero());
    let g_pq = Complex::new(s, T::zero());
    let g_qp = u.conj() * (-s);
    let g_qq = u.conj() * c;

    for k in 0..n {
        let (ap, aq) = (w[(k, p)], w[(k, q)]);
        w[(k, p)] = ap * g_pp + aq * g_qp;
        w[(k, q)] = ap * g_pq + aq * g_qq;
        let (vp, vq) = (v[(k, p)], v[(k, q)]);
        v[(k, p)] = vp * g_pp + vq * g_qp;
        v[(k, q)] = vp * g_pq + vq * g_qq;
    }
    for k in 0..n {
        let (ap, aq) = (w[(p, k)], w[(q, k)]);
        w[(p, k)] = g_pp.conj() * ap + g_qp.conj() * aq;
        w[(q, k)] = g_pq.conj() * ap + g_qq.conj() * aq;
    }
    let zero = Complex::new(T::zero(), T::zero());
    w[(p, q)] = zero;
    w[(q, p)] = zero;
    w[(p, p)] = Complex::new(w[(p, p)].re, T::zero());
    w[(q, q)] = Complex::new(w[(q, q)].re, T::zero());
}

fn sorted<T: Real>(values: Vec<T>, v: CMatrix<T>) -> Eigh<T> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite eigenvalues"));
    let vectors = CMatrix::from_fn(n, n, |i, c| v[(i, order[c])]);
    Eigh { values: order.iter().map(|&i| values[i]).collect(), vectors }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::eigh;
    use num_complex::Complex64;

    #[test]
    fn agrees_with_householder_ql() {
        let n = 12;
        let a = CMatrix::from_fn(n, n, |i, j| {
            let x = ((i * 7 + j * 3) % 11) as f64 / 11.0 - 0.5;
            let y = ((i * 5 + j * 2) % 13) as f64 / 13.0 - 0.5;
            if i == j {
                Complex64::new(x, 0.0)
            } else if i < j {
                Complex64::new(x, y)
            } else {
                Complex64::new(((j * 7 + i * 3) % 11) as f64 / 11.0 - 0.5, -(((j * 5 + i * 2) % 13) as f64 / 13.0 - 0.5))
            }
        });
        assert!(a.hermitian_defect() < 1e-15);
        let jac = jacobi_eigh(&a).unwrap();
        let ql = eigh(&a).unwrap();
        for (x, y) in jac.values.iter().zip(&ql.values) {
            assert!((x - y).abs() < 1e-12);
        }
        let lam = CMatrix::from_real_diag(&jac.values);
        assert!((&a.matmul(&jac.vectors) - &jac.vectors.matmul(&lam)).max_abs() < 1e-12);
    }
}
