//! Seeded sampling of matrices, states and unitaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{c, fro, zeros, ComplexMatrix, PositiveOperator, C64};

pub type QRng = ChaCha8Rng;

pub fn rng(seed: u64) -> QRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed (SplitMix64 step).
pub fn child_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn gaussian(rng: &mut QRng) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn ginibre(rng: &mut QRng, rows: usize, cols: usize) -> ComplexMatrix {
    let mut m = zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = c(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2;
        }
    }
    m
}

pub fn hermitian(rng: &mut QRng, d: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, d);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-random isometry `C^cols → C^rows` (`rows ≥ cols`).
pub fn isometry(rng: &mut QRng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols);
    let g = ginibre(rng, rows, cols);
    let qr = g.qr();
    let q = qr.q();
    let r = qr.r();
    let mut v = q.columns(0, cols).into_owned();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for x in v.column_mut(j).iter_mut() {
            *x *= phase;
        }
    }
    v
}

pub fn unitary(rng: &mut QRng, d: usize) -> ComplexMatrix {
    isometry(rng, d, d)
}

/// Random density matrix of the given rank (Hilbert–Schmidt-type measure).
pub fn density(rng: &mut QRng, d: usize, rank: usize) -> ComplexMatrix {
    let g = ginibre(rng, d, rank.max(1));
    let m = &g * g.adjoint();
    let t = crate::linalg::trace(&m).re;
    m.unscale(t)
}

/// Random density matrix with spectrum bounded away from zero.
pub fn faithful_density(rng: &mut QRng, d: usize) -> ComplexMatrix {
    let m = density(rng, d, d) + crate::linalg::identity(d).scale(0.05);
    let t = crate::linalg::trace(&m).re;
    m.unscale(t)
}

pub fn positive(rng: &mut QRng, d: usize, rank: usize) -> PositiveOperator {
    PositiveOperator::new(density(rng, d, rank)).expect("sampled density is PSD")
}

pub fn faithful(rng: &mut QRng, d: usize) -> PositiveOperator {
    PositiveOperator::new(faithful_density(rng, d)).expect("sampled density is PSD")
}

/// Random matrix normalised to unit Frobenius norm.
pub fn unit_matrix(rng: &mut QRng, rows: usize, cols: usize) -> ComplexMatrix {
    let g = ginibre(rng, rows, cols);
    let n = fro(&g);
    g.unscale(n)
}

pub fn uniform(rng: &mut QRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn index(rng: &mut QRng, n: usize) -> usize {
    rng.random_range(0..n)
}
