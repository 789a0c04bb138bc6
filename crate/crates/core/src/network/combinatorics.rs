use crate::error::{Error, Result};

/// Largest `n` accepted by [`bell_number`].
pub const BELL_MAX: usize = 20;
/// Largest `K` accepted by [`tanh_deriv_poly`].
pub const TANH_POLY_MAX: usize = 12;

/// `B_n` through `B_{n+1} = Σ_k binom(n, k) B_k`, `B_0 = 1`.
pub fn bell_number(n: usize) -> Result<u64> {
    if n > BELL_MAX {
        return Err(Error::Overflow { what: "bell_number", arg: n });
    }
    let mut b = vec![1u64];
    for m in 0..n {
        let next = (0..=m).map(|k| binom(m as u64, k as u64) * b[k]).sum();
        b.push(next);
    }
    Ok(b[n])
}

fn binom(n: u64, k: u64) -> u64 {
    (0..k).fold(1, |r, i| r * (n - i) / (i + 1))
}

/// Coefficients (ascending powers) of `P_K` with `tanh^(K) = P_K(tanh)`,
/// from `P_0(X) = X`, `P_{K+1}(X) = (1 − X²) P_K'(X)`.
pub fn tanh_deriv_poly(k: usize) -> Result<Vec<f64>> {
    if k > TANH_POLY_MAX {
        return Err(Error::Overflow { what: "tanh_deriv_poly", arg: k });
    }
    let mut p: Vec<i64> = vec![0, 1];
    for _ in 0..k {
        let dp: Vec<i64> = p.iter().enumerate().skip(1).map(|(j, &c)| j as i64 * c).collect();
        let mut next = vec![0i64; dp.len() + 2];
        for (j, &c) in dp.iter().enumerate() {
            next[j] += c;
            next[j + 2] -= c;
        }
        p = next;
    }
    Ok(p.into_iter().map(|c| c as f64).collect())
}

/// Evaluate a polynomial given by ascending coefficients.
pub fn eval_poly(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Upper bound `2^{K−1}(K+2)!` on `sup |tanh^(K)|` for `K ≥ 1`; `1` for `K = 0`.
pub fn tanh_deriv_bound(k: usize) -> f64 {
    if k == 0 {
        return 1.0;
    }
    2f64.powi(k as i32 - 1) * factorial(k + 2)
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Solutions `(i_1, …, i_K)` of `i_1 + 2 i_2 + ⋯ + K i_K = K`.
pub fn weighted_compositions(k: usize) -> Vec<Vec<usize>> {
    fn rec(level: usize, remaining: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if level == 0 {
            if remaining == 0 {
                let mut v = cur.clone();
                v.reverse();
                out.push(v);
            }
            return;
        }
        for i in 0..=remaining / level {
            cur.push(i);
            rec(level - 1, remaining - i * level, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(k, k, &mut Vec::new(), &mut out);
    out
}

pub const C_CONST_MAX_K: usize = 6;
pub const C_CONST_MAX_H: usize = 10;

/// Constant `C_{K,H}` of the Hölder-norm bound on tanh networks.
///
/// `C_{0,H} = 1`, `C_{K,1} = 2^{K−1}(K+2)!` and
/// `C_{K,H+1} = B_K 2^{K−1}(K+2)! max Π_{ℓ : i_ℓ > 0} C_{ℓ,H}^{i_ℓ}`, the max
/// running over `i_1 + 2 i_2 + ⋯ + K i_K = K`. Each factor carries the
/// exponent `i_ℓ` because it bounds `‖∂^{α(S)} f‖` once per block of size `ℓ`.
pub fn c_const(k: usize, h: usize) -> Result<f64> {
    if k > C_CONST_MAX_K {
        return Err(Error::Overflow { what: "c_const order", arg: k });
    }
    if h == 0 || h > C_CONST_MAX_H {
        return Err(Error::Overflow { what: "c_const depth", arg: h });
    }
    // table[h-1][k]
    let mut prev: Vec<f64> = (0..=k).map(tanh_deriv_bound).collect();
    prev[0] = 1.0;
    for _ in 1..h {
        let mut next = vec![1.0; k + 1];
        for (kk, slot) in next.iter_mut().enumerate().skip(1) {
            let best = weighted_compositions(kk)
                .iter()
                .map(|comp| {
                    comp.iter()
                        .enumerate()
                        .filter(|(_, &i)| i > 0)
                        .map(|(l, &i)| prev[l + 1].powi(i as i32))
                        .product::<f64>()
                })
                .fold(0.0, f64::max);
            *slot = bell_number(kk)? as f64 * tanh_deriv_bound(kk) * best;
        }
        prev = next;
    }
    Ok(prev[k])
}
