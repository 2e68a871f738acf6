//! Small worked instances with known verdict patterns.

use serde::Serialize;

use super::{power_trace, run_battery, BatteryConfig, BatteryReport};
use crate::channels::{
    adjoint_multiplicative_domain, block_diag, channel_direct_sum, diagonal_pinching, partial_trace_channel, Channel,
};
use crate::error::{Error, Result};
use crate::linalg::{c, commutator, complement, diag, fro, identity, matrix_unit, ComplexMatrix, PositiveOperator, C64};
use crate::random;

#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub phi: Channel,
    pub rho: PositiveOperator,
    pub sigma: PositiveOperator,
    pub k: ComplexMatrix,
}

impl Scenario {
    pub fn battery(&self, config: &BatteryConfig) -> Result<BatteryReport> {
        run_battery(&self.phi, &self.rho, &self.sigma, &self.k, config)
    }
}

/// `|ψ⟩ = (|00⟩ + |11⟩)/√2` in `C^d ⊗ C^d` as a projection.
pub fn maximally_entangled(d: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(d * d, 1);
    for i in 0..d {
        v[(i * d + i, 0)] = c(1.0 / (d as f64).sqrt(), 0.0);
    }
    &v * v.adjoint()
}

/// Partial trace with `ρ = σ` maximally entangled on `C^d ⊗ C^d`.
/// Equality in (vii) holds iff `K` is a multiple of `I`.
pub fn entangled_partial_trace(d: usize, k: ComplexMatrix) -> Result<Scenario> {
    let psi = PositiveOperator::new(maximally_entangled(d))?;
    Ok(Scenario {
        name: "entangled-partial-trace".into(),
        phi: partial_trace_channel(d, d),
        rho: psi.clone(),
        sigma: psi,
        k,
    })
}

/// `σ̃⁰ K σ̃⁰ ∈ ℂ σ̃⁰`.
pub fn is_scalar_on_support(sigma_t: &PositiveOperator, k: &ComplexMatrix, tol: f64) -> bool {
    let p = sigma_t.support_projection();
    let pk = &p * k * &p;
    let r = sigma_t.support_rank().max(1) as f64;
    let lambda = crate::linalg::trace(&pk) / c(r, 0.0);
    fro(&(&pk - &p * lambda)) <= tol * (1.0 + fro(k))
}

/// Ten test operators on `C²`: four scalar multiples of `I`, six others.
pub fn qubit_operator_set() -> Vec<ComplexMatrix> {
    let e = |i, j| matrix_unit(2, 2, i, j);
    vec![
        identity(2),
        identity(2) * c(0.0, 2.0),
        identity(2) * c(-0.5, 0.0),
        ComplexMatrix::zeros(2, 2),
        diag(&[1.0, -1.0]),
        e(0, 1),
        e(1, 0),
        e(0, 0),
        e(0, 1) + e(1, 0),
        identity(2) + e(0, 1) * c(0.0, 0.3),
    ]
}

/// Diagonal pinching on `C^d` with `ρ = σ = |e₁⟩⟨e₁|`. Conditions (ii)-(ix)
/// hold for every `K`; (i) holds iff `ℂe₁` reduces `K`.
pub fn pinched_pure_state(d: usize, k: ComplexMatrix) -> Result<Scenario> {
    let e1 = PositiveOperator::new(matrix_unit(d, d, 0, 0))?;
    Ok(Scenario { name: "pinched-pure-state".into(), phi: diagonal_pinching(d), rho: e1.clone(), sigma: e1, k })
}

/// `⟨e_i, K e₁⟩ = ⟨e_i, K* e₁⟩ = 0` for `i ≠ 1`.
pub fn e1_reduces(k: &ComplexMatrix, tol: f64) -> bool {
    (1..k.nrows()).all(|i| k[(i, 0)].norm() <= tol && k[(0, i)].norm() <= tol)
}

/// Pinching on `M₂` with `σ = I`, `ρ^{1/2} = [[a, c], [c̄, b]]`.
pub fn pinched_qubit(a: f64, b: f64, cc: C64, k: ComplexMatrix) -> Result<Scenario> {
    if !(a > 0.0 && b > 0.0 && cc.norm_sqr() < a * b) {
        return Err(Error::ParameterOutOfRange(format!("need a,b > 0 and |c|^2 < ab, got a={a}, b={b}, c={cc}")));
    }
    let mut s = ComplexMatrix::zeros(2, 2);
    s[(0, 0)] = c(a, 0.0);
    s[(0, 1)] = cc;
    s[(1, 0)] = cc.conj();
    s[(1, 1)] = c(b, 0.0);
    Ok(Scenario {
        name: "pinched-qubit".into(),
        phi: diagonal_pinching(2),
        rho: PositiveOperator::new(&s * &s)?,
        sigma: PositiveOperator::new(identity(2))?,
        k,
    })
}

/// Closed form of (vii) at `α = 1/2` for [`pinched_qubit`]: holds iff
/// `c = x₁₂ = x₂₁ = 0` or `K = 0`.
pub fn pinched_qubit_vii_predicate(cc: C64, k: &ComplexMatrix, tol: f64) -> bool {
    let z = |v: C64| v.norm() <= tol;
    (z(cc) && z(k[(0, 1)]) && z(k[(1, 0)])) || fro(k) <= tol
}

/// Closed form of (xi) for [`pinched_qubit`]: holds iff `x₁₂ = x₂₁ = 0`
/// and one of `c, x₁₁, x₂₂` vanishes.
pub fn pinched_qubit_xi_predicate(cc: C64, k: &ComplexMatrix, tol: f64) -> bool {
    let z = |v: C64| v.norm() <= tol;
    z(k[(0, 1)]) && z(k[(1, 0)]) && (z(cc) || z(k[(0, 0)]) || z(k[(1, 1)]))
}

/// The closed-form (vii) sides for [`pinched_qubit`] at `α = 1/2`.
pub fn pinched_qubit_vii_sides(a: f64, b: f64, cc: C64, k: &ComplexMatrix) -> (f64, f64) {
    let n = |i, j| k[(i, j)].norm_sqr();
    let lhs = (a * a + cc.norm_sqr()).sqrt() * (n(0, 0) + n(0, 1)) + (b * b + cc.norm_sqr()).sqrt() * (n(1, 0) + n(1, 1));
    (lhs, a * n(0, 0) + b * n(1, 1))
}

/// Composite instance where (vii') holds at `β` and (vii) fails, with
/// `K₂ ∈ M_{Φ₂*}` and `ρ₂⁰ = σ₂⁰` but `ρ₂⁰Φ₂*(K₂)(I − σ₂⁰) ≠ 0`.
#[derive(Debug, Clone)]
pub struct CounterexampleBundle {
    pub scenario: Scenario,
    pub seed: u64,
    pub beta: f64,
    pub lambda: f64,
    /// `|lhs − rhs|` of (vii') at `β` after calibration.
    pub calibration_residual: f64,
    /// `lhs − rhs` of (vii) at `α = 1/2`.
    pub vii_gap: f64,
    pub md_distance: f64,
    pub support_distance: f64,
    pub boundary_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BundleChecks {
    pub calibrated: bool,
    pub vii_fails: bool,
    pub k_in_md: bool,
    pub supports_equal: bool,
    pub boundary_nonzero: bool,
}

impl BundleChecks {
    pub fn all(&self) -> bool {
        self.calibrated && self.vii_fails && self.k_in_md && self.supports_equal && self.boundary_nonzero
    }
}

impl CounterexampleBundle {
    pub fn checks(&self) -> BundleChecks {
        BundleChecks {
            calibrated: self.calibration_residual <= 1e-8,
            vii_fails: self.vii_gap > 1e-3,
            k_in_md: self.md_distance <= 1e-9,
            supports_equal: self.support_distance <= 1e-9,
            boundary_nonzero: self.boundary_norm > 1e-6,
        }
    }
}

const MAX_ATTEMPTS: u64 = 8;

/// Builds the composite counterexample, retrying with derived seeds when
/// the calibration of `λ` fails.
pub fn calibrated_counterexample(seed: u64, beta: f64) -> Result<CounterexampleBundle> {
    if !(beta > 1.0 && beta < 2.0) {
        return Err(Error::ParameterOutOfRange(format!("beta must lie in (1,2), got {beta}")));
    }
    let mut last = None;
    for attempt in 0..MAX_ATTEMPTS {
        let s = if attempt == 0 { seed } else { random::child_seed(seed, attempt) };
        match build_bundle(s, beta) {
            Ok(b) => return Ok(b),
            Err(e @ Error::CalibrationFailure(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or_else(|| Error::CalibrationFailure("no attempt made".into())))
}

fn build_bundle(seed: u64, beta: f64) -> Result<CounterexampleBundle> {
    let d = 2;
    let d1 = 2;
    let mut rng = random::rng(seed);
    let (rho1, sigma1) = loop {
        let r = random::faithful_density(&mut rng, d1);
        let s = random::faithful_density(&mut rng, d1);
        if fro(&commutator(&r, &s)) > 1e-2 {
            break (r, s);
        }
    };
    let psi = maximally_entangled(d);
    let phi = channel_direct_sum(&partial_trace_channel(d, d), &partial_trace_channel(1, d1))?;
    let k = diag(&[1.0, -1.0]);
    let k2 = block_diag(&k, &identity(1));

    let states = |lambda: f64| -> Result<(PositiveOperator, PositiveOperator)> {
        let rho = PositiveOperator::new(block_diag(&psi, &rho1.scale(lambda)))?;
        let sigma = PositiveOperator::new(block_diag(&psi, &sigma1.scale(lambda)))?;
        Ok((rho, sigma))
    };
    let diff = |lambda: f64, alpha: f64| -> Result<(f64, f64)> {
        let (rho, sigma) = states(lambda)?;
        let rt = phi.apply_positive(&rho)?;
        let st = phi.apply_positive(&sigma)?;
        let l = power_trace(&k2, &rt, &st, alpha);
        let r = power_trace(&phi.apply_adjoint(&k2), &rho, &sigma, alpha);
        Ok((l - r, 1.0 + l.abs() + r.abs()))
    };

    // The (vii') difference is affine and decreasing in λ.
    let (f0, _) = diff(0.0, beta)?;
    if f0 <= 0.0 {
        return Err(Error::CalibrationFailure(format!("no strict gap on the entangled block ({f0:.3e})")));
    }
    let mut hi = 1.0;
    let mut grow = 0;
    while diff(hi, beta)?.0 > 0.0 {
        hi *= 2.0;
        grow += 1;
        if grow > 60 {
            return Err(Error::CalibrationFailure("no sign change for the scaling factor".into()));
        }
    }
    let mut lo = 0.0;
    let mut lambda = hi;
    let mut residual = f64::INFINITY;
    for _ in 0..200 {
        lambda = 0.5 * (lo + hi);
        let (f, _) = diff(lambda, beta)?;
        residual = f.abs();
        if residual <= 1e-12 {
            break;
        }
        if f > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
    }
    if residual > 1e-8 {
        return Err(Error::CalibrationFailure(format!("bisection residual {residual:.3e}")));
    }

    let (rho, sigma) = states(lambda)?;
    let (vii_gap, _) = diff(lambda, 0.5)?;
    let md = adjoint_multiplicative_domain(&phi)?;
    let md_distance = md.distance(&k2) / fro(&k2);
    let rho0 = rho.support_projection();
    let sigma0 = sigma.support_projection();
    let support_distance = fro(&(&rho0 - &sigma0));
    let boundary_norm = fro(&(&rho0 * phi.apply_adjoint(&k2) * complement(&sigma0)));
    Ok(CounterexampleBundle {
        scenario: Scenario { name: "calibrated-composite".into(), phi, rho, sigma, k: k2 },
        seed,
        beta,
        lambda,
        calibration_residual: residual,
        vii_gap,
        md_distance,
        support_distance,
        boundary_norm,
    })
}
