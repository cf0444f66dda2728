//! Gauss-Legendre rules and polynomial extrapolation to zero.

use alloc::vec::Vec;

#[allow(unused_imports)]
use num_traits::Float;

/// Nodes and weights of the `n`-point Gauss-Legendre rule on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let mut z = (core::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x.push(z);
        w.push(2.0 / ((1.0 - z * z) * dp * dp));
    }
    (x, w)
}

/// Composite Gauss-Legendre integration of `f` over [a, b].
pub fn integrate<T, F>(f: F, a: f64, b: f64, panels: usize, order: usize) -> T
where
    T: core::ops::Add<Output = T> + core::ops::Mul<f64, Output = T> + Default,
    F: Fn(f64) -> T,
{
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut acc = T::default();
    for p in 0..panels {
        let lo = a + h * p as f64;
        let mid = lo + 0.5 * h;
        for (xi, wi) in x.iter().zip(&w) {
            acc = acc + f(mid + 0.5 * h * xi) * (0.5 * h * wi);
        }
    }
    acc
}

/// Value at `x = 0` of the interpolating polynomial through `(xs[i], ys[i])` (Neville).
pub fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let mut p: Vec<f64> = ys.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (xa, xb) = (xs[i], xs[i + level]);
            p[i] = (xb * p[i] - xa * p[i + 1]) / (xb - xa);
        }
    }
    p.first().copied().unwrap_or(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let v: f64 = integrate(|x| x.powi(9) + 3.0 * x * x, 0.0, 2.0, 1, 5);
        assert!((v - (1024.0 / 10.0 + 8.0)).abs() < 1e-11);
        let (_, w) = gauss_legendre(12);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn neville_recovers_intercept() {
        let xs = [0.1, 0.05, 0.025, 0.0125];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - 3.0 * x + x * x * x).collect();
        assert!((extrapolate_to_zero(&xs, &ys) - 2.0).abs() < 1e-12);
    }
}
