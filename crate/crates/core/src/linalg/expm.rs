use super::CMatrix;
use crate::scalar::Real;
use num_complex::Complex;

/// Matrix exponential by scaling and squaring with a Taylor core.
///
/// The argument is scaled until its 1-norm is at most 1/2, and the Taylor
/// order is the first at which the next term's norm bound drops below
/// machine precision.
pub fn expm<T: Real>(a: &CMatrix<T>) -> CMatrix<T> {
    assert!(a.is_square(), "expm needs a square matrix");
    let n = a.dim();
    let norm = a.norm_one();
    let half = T::lit(0.5);
    let mut squarings = 0u32;
    let mut scaled_norm = norm;
    while scaled_norm > half {
        scaled_norm = scaled_norm * half;
        squarings += 1;
    }
    let b = a.scale_real(T::one() / T::lit(2f64.powi(squarings as i32)));

    let mut result = CMatrix::identity(n);
    let mut term = CMatrix::identity(n);
    let mut bound = T::one();
    let eps = T::epsilon();
    for k in 1..=40 {
        term = term.matmul(&b).scale(Complex::new(T::one() / T::from_count(k), T::zero()));
        result = &result + &term;
        bound = bound * scaled_norm / T::from_count(k + 1);
        if bound <= eps {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}
