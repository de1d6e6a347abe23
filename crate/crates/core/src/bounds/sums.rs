//! Series behind the constants: `C_α(ℓ)`, `s_D` and the Hurwitz zeta function.

use crate::error::{invalid, Result};
use crate::states::DecayModel;

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Eulerian numbers `A(k, m)`, `m = 0..k`.
fn eulerian(k: u32) -> Vec<f64> {
    let mut row = vec![1.0];
    for n in 1..=k {
        let mut next = vec![0.0; n as usize];
        for m in 0..n as usize {
            let left = if m >= 1 { (n as usize - m) as f64 * row[m - 1] } else { 0.0 };
            let right = if m < row.len() { (m + 1) as f64 * row[m] } else { 0.0 };
            next[m] = left + right;
        }
        row = next;
    }
    row
}

/// `Σ_{s≥0} s^k q^s` for `0 ≤ q < 1` (with `0^0 = 1`), given `1 − q` to full precision.
fn power_geometric(k: u32, q: f64, one_minus_q: f64) -> f64 {
    if k == 0 {
        return 1.0 / one_minus_q;
    }
    let poly: f64 = eulerian(k).iter().rev().fold(0.0, |acc, &a| acc * q + a);
    q * poly / one_minus_q.powi(k as i32 + 1)
}

const BERNOULLI_2J: [f64; 8] = [1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0, -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0];

/// Hurwitz zeta `ζ(s, a) = Σ_{n≥0} (a + n)^{−s}` for `s > 1`, `a > 0`, by Euler–Maclaurin.
pub fn hurwitz_zeta(s: f64, a: f64) -> Result<f64> {
    if !(s > 1.0) || !(a > 0.0) {
        return invalid(format!("Hurwitz zeta needs s > 1 and a > 0 (s = {s}, a = {a})"));
    }
    let shift = 24usize;
    let head: f64 = (0..shift).rev().map(|n| (a + n as f64).powf(-s)).sum();
    let x = a + shift as f64;
    let mut tail = x.powf(1.0 - s) / (s - 1.0) + 0.5 * x.powf(-s);
    let mut rising = s;
    let mut fact = 2.0;
    let mut power = x.powf(-s - 1.0);
    for (j, b) in BERNOULLI_2J.iter().enumerate() {
        tail += b / fact * rising * power;
        let jj = (2 * j + 2) as f64;
        rising *= (s + jj - 1.0) * (s + jj);
        fact *= (jj + 1.0) * (jj + 2.0);
        power /= x * x;
    }
    Ok(head + tail)
}

/// `s_p = Σ_{m≥0} (m + 2)^p 2^{−m}`, summed until the geometric tail bound falls below `1e−16` of the value.
pub fn s_series(p: u32) -> f64 {
    let mut total = 0.0;
    let mut m = 0u32;
    loop {
        let term = ((m + 2) as f64).powi(p as i32) * 0.5f64.powi(m as i32);
        total += term;
        m += 1;
        let ratio = (((m + 2) as f64) / ((m + 1) as f64)).powi(p as i32) * 0.5;
        if ratio < 1.0 {
            let next = ((m + 2) as f64).powi(p as i32) * 0.5f64.powi(m as i32);
            if next * ratio.max(0.5) / (1.0 - ratio) <= 1e-16 * total {
                return total;
            }
        }
    }
}

/// `C_α(ℓ) = c_D Σ_{r≥ℓ} α(r)(r + 1)^{D−1}`.
pub fn c_alpha(decay: &DecayModel, c_d: f64, d: u32, ell: u64) -> Result<f64> {
    if ell < 1 {
        return invalid("C_α is defined for ℓ ≥ 1");
    }
    let d = d.max(1);
    let p = d - 1;
    let ell_f = ell as f64;
    match *decay {
        DecayModel::Uncorrelated => Ok(0.0),
        DecayModel::Exponential { l0, xi } => {
            if !(xi > 0.0) {
                return invalid("ξ must be positive");
            }
            // q^ℓ Σ_k C(p,k)(ℓ+1)^{p−k} Σ_s s^k q^s with q = e^{−1/ξ}.
            let q = (-1.0 / xi).exp();
            let one_minus_q = -(-1.0 / xi).exp_m1();
            let inner: f64 = (0..=p).map(|k| binomial(p, k) * (ell_f + 1.0).powi((p - k) as i32) * power_geometric(k, q, one_minus_q)).sum();
            Ok(c_d * l0 * (-ell_f / xi).exp() * inner)
        }
        DecayModel::Algebraic { l0, beta, d: d_model } => {
            let exponent = d_model as f64 + beta;
            if exponent - p as f64 <= 1.0 {
                return invalid(format!("C_α diverges: α(r)(r+1)^{{D−1}} decays as r^{{−{}}}", exponent - p as f64));
            }
            // (r+1)^p = Σ_k C(p,k) r^k.
            let mut total = 0.0;
            for k in 0..=p {
                total += binomial(p, k) * hurwitz_zeta(exponent - k as f64, ell_f)?;
            }
            Ok(c_d * l0 * total)
        }
    }
}
