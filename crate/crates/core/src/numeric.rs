//! Small numerical helpers shared by the other modules.

use std::ops::Add;

const LEAF: usize = 128;
const PAR_SPLIT: usize = 1 << 15;

/// Sum of `term(i)` for `i in 0..n` by fixed-shape pairwise recursion.
///
/// The tree shape depends only on `n`, so the result is identical whether the
/// two halves run on one thread or two.
pub fn pairwise_sum_by<T, F>(n: usize, term: F) -> T
where
    T: Copy + Default + Add<Output = T> + Send,
    F: Fn(usize) -> T + Sync,
{
    fn rec<T, F>(lo: usize, hi: usize, term: &F) -> T
    where
        T: Copy + Default + Add<Output = T> + Send,
        F: Fn(usize) -> T + Sync,
    {
        let len = hi - lo;
        if len <= LEAF {
            let mut acc = T::default();
            for i in lo..hi {
                acc = acc + term(i);
            }
            return acc;
        }
        let mid = lo + len / 2;
        if len >= PAR_SPLIT {
            let (a, b) = rayon::join(|| rec(lo, mid, term), || rec(mid, hi, term));
            a + b
        } else {
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    rec(0, n, &term)
}

pub fn pairwise_sum<T>(values: &[T]) -> T
where
    T: Copy + Default + Add<Output = T> + Send + Sync,
{
    pairwise_sum_by(values.len(), |i| values[i])
}

/// Γ(k/2) for a positive integer `k`, by the exact half-integer recursion.
pub fn gamma_half(k: u32) -> f64 {
    assert!(k > 0, "gamma_half needs a positive argument");
    let (mut value, mut arg2) = if k % 2 == 0 {
        (1.0, 2u32)
    } else {
        (std::f64::consts::PI.sqrt(), 1u32)
    };
    while arg2 < k {
        value *= arg2 as f64 / 2.0;
        arg2 += 2;
    }
    value
}

/// Least-squares line through `(x, y)`; returns `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    assert!(x.len() >= 2, "need at least two points");
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// `(cos 2πt, sin 2πt)` with `t` first reduced modulo 1.
#[inline]
pub fn turn(t: f64) -> (f64, f64) {
    let frac = t - t.round();
    let (s, c) = (2.0 * std::f64::consts::PI * frac).sin_cos();
    (c, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn pairwise_matches_naive_on_integers() {
        let total: f64 = pairwise_sum_by(100_000, |i| i as f64);
        assert_eq!(total, 99_999.0 * 100_000.0 / 2.0);
    }

    #[test]
    fn pairwise_is_exact_on_empty_and_single() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[3.5]), 3.5);
    }

    #[test]
    fn gamma_half_known_values() {
        assert_eq!(gamma_half(2), 1.0);
        assert_eq!(gamma_half(4), 1.0);
        assert_eq!(gamma_half(6), 2.0);
        assert!((gamma_half(1) - PI.sqrt()).abs() < 1e-15);
        assert!((gamma_half(3) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert!((gamma_half(5) - 3.0 * PI.sqrt() / 4.0).abs() < 1e-15);
    }

    #[test]
    fn fit_recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.5 * v - 1.0).collect();
        let (m, b) = linear_fit(&x, &y);
        assert!((m - 2.5).abs() < 1e-12 && (b + 1.0).abs() < 1e-12);
    }

    #[test]
    fn turn_reduces_large_arguments() {
        let (c, s) = turn(1e6 + 0.25);
        assert!(c.abs() < 1e-9 && (s - 1.0).abs() < 1e-9);
    }
}
