//! Special functions used by the series expansions and the closed-form
//! models: Bessel functions of the first kind and exact binomials.

/// Bessel functions `J_0(x), …, J_{m_max}(x)` for real `x ≥ 0`.
///
/// Miller's backward recurrence, started well above both `m_max` and `x`
/// and normalized with `J_0 + 2 Σ_k J_{2k} = 1`.
pub fn bessel_j_all(m_max: usize, x: f64) -> Vec<f64> {
    assert!(x >= 0.0 && x.is_finite(), "bessel_j_all requires finite x ≥ 0");
    let mut out = vec![0.0; m_max + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let top = m_max.max(x.ceil() as usize);
    let mut start = top + 20 + (40.0 * (top as f64 + 1.0)).sqrt() as usize;
    if start % 2 == 1 {
        start += 1;
    }
    let mut j_next = 0.0; // J_{k+1}
    let mut j_cur = 1e-300; // J_k
    let mut norm = 0.0;
    let mut buf = vec![0.0; start + 1];
    buf[start] = j_cur;
    for k in (1..=start).rev() {
        let j_prev = 2.0 * k as f64 / x * j_cur - j_next;
        j_next = j_cur;
        j_cur = j_prev;
        buf[k - 1] = j_cur;
        if j_cur.abs() > 1e250 {
            // rescale to stay in range
            for v in buf[k - 1..].iter_mut() {
                *v *= 1e-250;
            }
            j_cur *= 1e-250;
            j_next *= 1e-250;
        }
    }
    for (k, v) in buf.iter().enumerate() {
        if k == 0 {
            norm += v;
        } else if k % 2 == 0 {
            norm += 2.0 * v;
        }
    }
    for (m, o) in out.iter_mut().enumerate() {
        *o = buf[m] / norm;
    }
    out
}

/// Derivatives `J_m'(x)` for `m = 0..=m_max`, via `J_0' = −J_1` and
/// `J_m' = (J_{m−1} − J_{m+1})/2`.
pub fn bessel_j_prime_all(m_max: usize, x: f64) -> Vec<f64> {
    let j = bessel_j_all(m_max + 1, x);
    (0..=m_max)
        .map(|m| if m == 0 { -j[1] } else { 0.5 * (j[m - 1] - j[m + 1]) })
        .collect()
}

/// Binomial coefficient C(n, k), exact in 128-bit integers; zero when
/// `k < 0` or `k > n`.
pub fn binomial(n: u32, k: i64) -> u128 {
    if k < 0 || k > n as i64 {
        return 0;
    }
    let k = (k as u32).min(n - k as u32);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bessel integral (1/π)∫₀^π cos(mτ − x sin τ) dτ by the trapezoid rule,
    /// which converges spectrally for this periodic integrand.
    fn bessel_quadrature(m: usize, x: f64) -> f64 {
        let n = 4000;
        let h = std::f64::consts::PI / n as f64;
        let f = |t: f64| (m as f64 * t - x * t.sin()).cos();
        let mut s = 0.5 * (f(0.0) + f(std::f64::consts::PI));
        for i in 1..n {
            s += f(i as f64 * h);
        }
        s * h / std::f64::consts::PI
    }

    #[test]
    fn matches_quadrature() {
        for &x in &[0.1, 1.0, 5.5, 17.5, 40.0] {
            let j = bessel_j_all(60, x);
            for m in [0usize, 1, 2, 7, 20, 45, 60] {
                let q = bessel_quadrature(m, x);
                assert!((j[m] - q).abs() < 1e-13, "J_{m}({x}) = {} vs {}", j[m], q);
            }
        }
    }

    #[test]
    fn known_values() {
        let j = bessel_j_all(2, 1.0);
        assert!((j[0] - 0.765_197_686_557_966_6).abs() < 1e-15);
        assert!((j[1] - 0.440_050_585_744_933_5).abs() < 1e-15);
        assert_eq!(bessel_j_all(3, 0.0), vec![1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn derivative_by_finite_difference() {
        let x = 3.7;
        let h = 1e-5;
        let jp = bessel_j_prime_all(10, x);
        let a = bessel_j_all(10, x + h);
        let b = bessel_j_all(10, x - h);
        for m in 0..=10 {
            assert!((jp[m] - (a[m] - b[m]) / (2.0 * h)).abs() < 1e-9);
        }
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(10, 5), 252);
        assert_eq!(binomial(10, -1), 0);
        assert_eq!(binomial(10, 11), 0);
        assert_eq!(binomial(30, 15), 155_117_520);
        assert_eq!(binomial(100, 50), 100_891_344_545_564_193_334_812_497_256);
    }
}
