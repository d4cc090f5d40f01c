use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Largest feature count the weight recurrences and binomial conversions
/// are evaluated for. Beyond this the intermediate binomials leave the
/// double range.
pub const MAX_FEATURES: usize = 512;

/// Chebyshev-Gauss nodes on (0, 1): `t_ℓ = ½(1 + cos((2ℓ+1)π / 2m))`.
///
/// Returned in generation order, i.e. decreasing.
pub fn chebyshev_nodes(m: usize) -> Vec<f64> {
    (0..m)
        .map(|l| {
            let theta = (2 * l + 1) as f64 * PI / (2 * m) as f64;
            0.5 * (1.0 + theta.cos())
        })
        .collect()
}

/// `α_s = s!(n−s−1)!/n!` for `s = 0..n−1`.
pub fn shapley_weights(n: usize) -> Result<Vec<f64>> {
    if n == 0 || n > MAX_FEATURES {
        return Err(Error::UnsupportedFeatureCount { n, max: MAX_FEATURES });
    }
    // α_0 = 1/n, α_{s+1} = α_s (s+1)/(n−s−1)
    let mut out = Vec::with_capacity(n);
    let mut a = 1.0 / n as f64;
    for s in 0..n {
        out.push(a);
        if s + 1 < n {
            a *= (s + 1) as f64 / (n - s - 1) as f64;
        }
    }
    Ok(out)
}

/// `β_s(n,k) = s!(n−k−s)!/(n−k+1)!` for `s = 0..n−k`.
pub fn sii_weights(n: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > n {
        return Err(Error::OrderOutOfRange { k, n });
    }
    if n > MAX_FEATURES {
        return Err(Error::UnsupportedFeatureCount { n, max: MAX_FEATURES });
    }
    shapley_weights(n - k + 1)
}

/// Binomial coefficient as a float, exact while the result fits 53 bits.
pub fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    let mut acc = 1.0;
    for i in 0..r {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Converts monomial coefficients `b_j` of a probe polynomial in `t` into
/// size-aggregated marginals `m_s`, `s = 0..=big_n`.
///
/// With all `N = big_n` non-target legs scaled by `t`,
/// `Q(t) = Σ_T Δc_T t^{|T|}` over the Möbius coefficients of the
/// discrete derivative, while `m_s = Σ_{|C|=s} Δv(C) = Σ_T Δc_T C(N−|T|, s−|T|)`.
pub fn monomial_to_marginals(b: &[f64]) -> Vec<f64> {
    let big_n = b.len() - 1;
    (0..=big_n)
        .map(|s| {
            (0..=s)
                .map(|j| b[j] * binomial(big_n - j, s - j))
                .sum()
        })
        .collect()
}
