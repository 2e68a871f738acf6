//! Adaptive Gauss–Legendre integration over `(0, ∞)`.
//!
//! The half line is mapped by `t = e^u` and split at `t = 1`; each half is
//! compactified with `u = ±s/(1−s)` and integrated by recursive bisection,
//! comparing one panel against its two halves.

use std::sync::OnceLock;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadConfig {
    pub rel_tol: f64,
    pub max_depth: u32,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { rel_tol: 1e-7, max_depth: 40 }
    }
}

const ORDER: usize = 10;
/// Bisections allowed per call to [`integrate`].
const MAX_SPLITS: usize = 20_000;

fn nodes() -> &'static (Vec<f64>, Vec<f64>) {
    static NODES: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    NODES.get_or_init(|| gauss_legendre(ORDER))
}

/// Nodes and weights on `[-1, 1]` by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
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
        x[i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn panel(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let (x, w) = nodes();
    let h = 0.5 * (b - a);
    let m = 0.5 * (a + b);
    x.iter().zip(w).map(|(xi, wi)| wi * f(m + h * xi)).sum::<f64>() * h
}

struct Budget {
    splits: usize,
    worst: f64,
}

fn adapt(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32, budget: &mut Budget) -> f64 {
    let m = 0.5 * (a + b);
    let left = panel(f, a, m);
    let right = panel(f, m, b);
    let err = (left + right - whole).abs();
    if err <= tol || depth == 0 || budget.splits == 0 {
        if err > tol {
            budget.worst = budget.worst.max(err);
        }
        return left + right;
    }
    budget.splits -= 1;
    adapt(f, a, m, left, 0.5 * tol, depth - 1, budget) + adapt(f, m, b, right, 0.5 * tol, depth - 1, budget)
}

/// `∫_a^b f`, adaptive to `rel_tol` of a coarse estimate.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, cfg: &QuadConfig) -> Result<f64> {
    let pieces = 8;
    let h = (b - a) / pieces as f64;
    let coarse: Vec<f64> = (0..pieces).map(|k| panel(f, a + k as f64 * h, a + (k + 1) as f64 * h)).collect();
    let scale = coarse.iter().map(|v| v.abs()).sum::<f64>();
    let tol = (cfg.rel_tol * scale).max(1e-300);
    let mut budget = Budget { splits: MAX_SPLITS, worst: 0.0 };
    let mut total = 0.0;
    for (k, whole) in coarse.iter().enumerate() {
        let lo = a + k as f64 * h;
        total += adapt(f, lo, lo + h, *whole, tol / pieces as f64, cfg.max_depth, &mut budget);
    }
    let worst = budget.worst;
    if !total.is_finite() {
        return Err(Error::QuadratureFailure { residual: f64::INFINITY });
    }
    if worst > tol {
        return Err(Error::QuadratureFailure { residual: worst });
    }
    Ok(total)
}

/// `∫_0^∞ g(t) dt` through the log map split at `t = 1`.
pub fn integrate_half_line(g: &dyn Fn(f64) -> f64, cfg: &QuadConfig) -> Result<f64> {
    let upper = |s: f64| {
        let u = s / (1.0 - s);
        let t = u.exp();
        let v = g(t) * t / ((1.0 - s) * (1.0 - s));
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let lower = |s: f64| {
        let u = -s / (1.0 - s);
        let t = u.exp();
        if t == 0.0 {
            return 0.0;
        }
        let v = g(t) * t / ((1.0 - s) * (1.0 - s));
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    let cfg_half = QuadConfig { rel_tol: cfg.rel_tol * 0.5, ..*cfg };
    Ok(integrate(&upper, 0.0, 1.0, &cfg_half)? + integrate(&lower, 0.0, 1.0, &cfg_half)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_weights_sum_to_two() {
        let (x, w) = gauss_legendre(10);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        // exact for degree 19
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert!((s - 2.0 / 19.0).abs() < 1e-14);
    }

    #[test]
    fn half_line_integrals() {
        let cfg = QuadConfig::default();
        let v = integrate_half_line(&|t| 1.0 / (1.0 + t * t), &cfg).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-9);
        // ∫ t^{-1/2}/(1+t) dt = π
        let v = integrate_half_line(&|t| t.powf(-0.5) / (1.0 + t), &cfg).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-7 * std::f64::consts::PI);
    }

    #[test]
    fn unreachable_tolerance_fails_quickly() {
        let cfg = QuadConfig { rel_tol: 1e-300, max_depth: 40 };
        let r = integrate(&|t: f64| t.sqrt(), 0.0, 1.0, &cfg);
        assert!(matches!(r, Err(Error::QuadratureFailure { .. })));
    }
}
