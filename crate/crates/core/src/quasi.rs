//! Quasi-entropies and the superoperators built from a pair of states.
//!
//! With spectral decompositions `ρ = Σ a P_a`, `σ = Σ b Q_b` the
//! quasi-entropy is the double sum `Σ b f(a/b) Tr K*P_a K Q_b`, using the
//! boundary conventions of [`boundary_weighted_eval`].

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functions::{boundary_weighted_eval, SpectralFunction};
use crate::linalg::{
    complement, eigh, fro, hs, identity, kron, sandwich_superoperator, vectorize, ComplexMatrix, PositiveOperator,
    SuperOperator,
};

/// Relative weight below which an infinite term is treated as `(+∞)·0 = 0`.
pub const WEIGHT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuasiEntropyValue {
    /// Spectral double sum (may be `+∞`).
    #[serde(with = "crate::json::ext_real")]
    pub value: f64,
    /// `⟨Kσ^{1/2}, f(Δ) Kσ^{1/2}⟩` with `f(0) := f(0⁺)`; absent when `f(0⁺)` is infinite.
    #[serde(with = "crate::json::ext_real_opt")]
    pub fc_term: Option<f64>,
    /// `f′(∞)·Tr K*ρK(I − σ⁰)`.
    #[serde(with = "crate::json::ext_real")]
    pub boundary_term: f64,
    pub decomposition_valid: bool,
}

/// One term of the spectral double sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairWeight {
    pub a: f64,
    pub b: f64,
    pub weight: f64,
}

fn check_dims(rho: &PositiveOperator, sigma: &PositiveOperator, k: &ComplexMatrix) -> Result<()> {
    let d = rho.dim();
    if sigma.dim() != d || k.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!(
            "rho {d}, sigma {}, K {:?}",
            sigma.dim(),
            k.shape()
        )));
    }
    Ok(())
}

fn check_convexity(f: &SpectralFunction) -> Result<()> {
    let t = f.tags();
    if t.is_convex() || t.is_concave() {
        Ok(())
    } else {
        Err(Error::IndeterminateForm(format!("{} is tagged neither convex nor concave", f.name())))
    }
}

/// `Tr K* P_a K Q_b` over all pairs of spectral clusters.
pub fn pair_weights(rho: &PositiveOperator, sigma: &PositiveOperator, k: &ComplexMatrix) -> Vec<PairWeight> {
    let kd = k.adjoint();
    let mut out = Vec::with_capacity(rho.clusters().len() * sigma.clusters().len());
    for pa in rho.clusters() {
        let left = &kd * &pa.projection * k;
        for qb in sigma.clusters() {
            let weight = hs(&left, &qb.projection).re.max(0.0);
            out.push(PairWeight { a: pa.value, b: qb.value, weight });
        }
    }
    out
}

/// `Δ_{ρ,σ} = L_ρ R_{σ⁻¹}` with the generalized inverse.
pub fn relative_modular(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<SuperOperator> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("rho {} vs sigma {}", rho.dim(), sigma.dim())));
    }
    Ok(sandwich_superoperator(rho.matrix(), &sigma.generalized_inverse()))
}

/// `J_f(ρ,σ) = Σ b f(a/b) L_{P_a} R_{Q_b}`.
pub fn j_superoperator(f: &SpectralFunction, rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<SuperOperator> {
    check_convexity(f)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("rho {} vs sigma {}", rho.dim(), sigma.dim())));
    }
    let d = rho.dim();
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for pa in rho.clusters() {
        for qb in sigma.clusters() {
            let w = boundary_weighted_eval(f, pa.value, qb.value);
            if !w.is_finite() {
                return Err(Error::InfiniteWeight);
            }
            if w != 0.0 {
                m += kron(&qb.projection.transpose(), &pa.projection).scale(w);
            }
        }
    }
    SuperOperator::new(d, d, m)
}

/// `J_f(ρ,σ)⁻¹` for invertible `ρ, σ` and `f > 0` on `(0,∞)`.
pub fn j_inverse(f: &SpectralFunction, rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<SuperOperator> {
    if !rho.is_invertible() || !sigma.is_invertible() {
        return Err(Error::NotInvertible("J_f inverse needs invertible rho and sigma".into()));
    }
    let d = rho.dim();
    let mut m = ComplexMatrix::zeros(d * d, d * d);
    for pa in rho.clusters() {
        for qb in sigma.clusters() {
            let w = qb.value * f.eval(pa.value / qb.value);
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::NotPositiveFunction(format!("{} at {}", f.name(), pa.value / qb.value)));
            }
            m += kron(&qb.projection.transpose(), &pa.projection).scale(1.0 / w);
        }
    }
    SuperOperator::new(d, d, m)
}

/// The quasi-entropy `S_f^K(ρ‖σ)` split into functional-calculus and boundary terms.
pub fn quasi_entropy(
    f: &SpectralFunction,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
) -> Result<QuasiEntropyValue> {
    check_dims(rho, sigma, k)?;
    check_convexity(f)?;
    let tol = WEIGHT_TOL * fro(k).powi(2).max(1.0);

    let mut value = 0.0;
    for pw in pair_weights(rho, sigma, k) {
        let bw = boundary_weighted_eval(f, pw.a, pw.b);
        if bw.is_infinite() {
            if pw.weight > tol {
                value = bw;
                break;
            }
            continue;
        }
        value += bw * pw.weight;
    }

    // Individual eigenvectors, no clustering: Δ acts diagonally on |u_i⟩⟨v_j|.
    let f0 = f.f_zero_plus();
    let fc_term = if f0.is_finite() {
        let (a, u) = (rho.eigenvalues(), rho.eigenvectors());
        let (b, v) = (sigma.eigenvalues(), sigma.eigenvectors());
        let m = u.adjoint() * k * v;
        let mut s = 0.0;
        for j in 0..b.len() {
            if b[j] <= 0.0 {
                continue;
            }
            for i in 0..a.len() {
                let w = m[(i, j)].norm_sqr();
                s += b[j] * f.eval0(a[i] / b[j]) * w;
            }
        }
        Some(s)
    } else {
        None
    };

    let off = complement(&sigma.support_projection());
    let tr = hs(&(k * off), &(rho.matrix() * k)).re.max(0.0);
    let boundary_term = if tr <= tol { 0.0 } else { f.f_prime_inf() * tr };

    let decomposition_valid = match fc_term {
        Some(fc) => {
            let total = fc + boundary_term;
            if value.is_infinite() || total.is_infinite() {
                value == total
            } else {
                (value - total).abs() <= 1e-9 * (1.0 + value.abs())
            }
        }
        None => false,
    };
    Ok(QuasiEntropyValue { value, fc_term, boundary_term, decomposition_valid })
}

/// `S_f(ρ‖σ) = S_f^I(ρ‖σ)`.
pub fn standard_f_divergence(f: &SpectralFunction, rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<QuasiEntropyValue> {
    quasi_entropy(f, rho, sigma, &identity(rho.dim()))
}

/// `⟨Kσ^{1/2}, f(Δ) Kσ^{1/2}⟩` through an eigendecomposition of the
/// relative modular operator on the Hilbert–Schmidt space.
pub fn modular_form(f: &SpectralFunction, rho: &PositiveOperator, sigma: &PositiveOperator, k: &ComplexMatrix) -> Result<f64> {
    check_dims(rho, sigma, k)?;
    let delta = relative_modular(rho, sigma)?;
    let sp = eigh(delta.matrix());
    let scale = sp.max().abs().max(1.0);
    let x = vectorize(&(k * sigma.sqrt()));
    let coeffs = sp.eigenvectors.adjoint() * &x;
    let mut s = 0.0;
    for (j, &l) in sp.eigenvalues.iter().enumerate() {
        let w = coeffs[j].norm_sqr();
        if w == 0.0 {
            continue;
        }
        let lam = if l.abs() <= 1e-10 * scale { 0.0 } else { l };
        let fv = f.eval0(lam);
        if !fv.is_finite() {
            return Err(Error::DomainError(format!("{} undefined at 0", f.name())));
        }
        s += fv * w;
    }
    Ok(s)
}

/// `S_f^K(ρ+εI‖σ+εI)` by the invertible-case formula.
pub fn epsilon_regularized(
    f: &SpectralFunction,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    eps: f64,
) -> Result<f64> {
    check_dims(rho, sigma, k)?;
    check_convexity(f)?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::ParameterOutOfRange(format!("epsilon must be positive, got {eps}")));
    }
    let (a, u) = (rho.eigenvalues(), rho.eigenvectors());
    let (b, v) = (sigma.eigenvalues(), sigma.eigenvectors());
    let m = u.adjoint() * k * v;
    let mut s = 0.0;
    for j in 0..b.len() {
        let bj = b[j] + eps;
        for i in 0..a.len() {
            s += bj * f.eval((a[i] + eps) / bj) * m[(i, j)].norm_sqr();
        }
    }
    Ok(s)
}

/// Default regularization grid `ε = 10⁻², …, 10⁻⁹`.
pub fn default_epsilon_grid() -> Vec<f64> {
    (2..=9).map(|k| 10f64.powi(-k)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Gauge {
    Power(f64),
    PowerLog(f64),
}

impl Gauge {
    fn eval(&self, e: f64) -> f64 {
        match *self {
            Gauge::Power(p) => e.powf(p),
            Gauge::PowerLog(p) => e.powf(p) * e.ln(),
        }
    }

    fn order(&self) -> f64 {
        match *self {
            Gauge::Power(p) => p,
            Gauge::PowerLog(p) => p - 1e-6,
        }
    }
}

/// Asymptotic scale functions of `ε ↦ S_f(ρ+εI‖σ+εI)` near zero. Boundary
/// terms behave like `ε^α` or `ε^{1−α}` for powers and like `ε log ε` for
/// `x log x`; interior terms are analytic.
fn gauges(f: &SpectralFunction, n: usize) -> Vec<Gauge> {
    let mut exps: Vec<Gauge> = (0..n).map(|k| Gauge::Power(k as f64)).collect();
    let shifts: Vec<f64> = match f.name() {
        "power" => {
            let a = f.params()[0];
            vec![a, 1.0 - a]
        }
        _ => vec![],
    };
    for s in shifts {
        for k in 0..n {
            let p = s + k as f64;
            if p > 0.0 {
                exps.push(Gauge::Power(p));
            }
        }
    }
    if f.name() == "xlogx" {
        exps.push(Gauge::PowerLog(1.0));
    }
    exps.sort_by(|x, y| x.order().total_cmp(&y.order()));
    exps.dedup_by(|x, y| match (x, y) {
        (Gauge::Power(p), Gauge::Power(q)) => (*p - *q).abs() < 1e-9,
        _ => false,
    });
    exps.truncate(n);
    exps
}

/// Extrapolates `lim_{ε→0} S_f(ρ+εI‖σ+εI)` from a grid of regularized
/// values, fitting the asymptotic scale functions exactly
/// (generalized Richardson extrapolation).
pub fn regularized_limit(
    f: &SpectralFunction,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    grid: &[f64],
) -> Result<f64> {
    let values: Vec<f64> = grid.iter().map(|&e| epsilon_regularized(f, rho, sigma, k, e)).collect::<Result<_>>()?;
    Ok(richardson(f, grid, &values))
}

/// Limit of the regularized family with divergence detection: `+∞` when the
/// increments along the (decreasing) grid are positive and stop shrinking,
/// otherwise the extrapolated limit.
pub fn regularized_oracle(
    f: &SpectralFunction,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    grid: &[f64],
) -> Result<f64> {
    let values: Vec<f64> = grid.iter().map(|&e| epsilon_regularized(f, rho, sigma, k, e)).collect::<Result<_>>()?;
    if diverges(&values) {
        return Ok(f64::INFINITY);
    }
    Ok(richardson(f, grid, &values))
}

fn diverges(values: &[f64]) -> bool {
    let n = values.len();
    if n < 4 {
        return false;
    }
    if values.iter().any(|v| v.is_infinite()) {
        return true;
    }
    let scale = 1.0 + values[0].abs();
    let d: Vec<f64> = values.windows(2).map(|w| w[1] - w[0]).collect();
    let m = d.len();
    d[m - 1] > 1e-6 * scale && d[m - 2] > 1e-6 * scale && d[m - 1] >= 0.9 * d[m - 2] && d[m - 2] >= 0.9 * d[m - 3]
}

fn richardson(f: &SpectralFunction, grid: &[f64], values: &[f64]) -> f64 {
    let n = grid.len();
    if values.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    let g = gauges(f, n);
    let m = g.len();
    let mut a = DMatrix::<f64>::zeros(n, m);
    for (i, &e) in grid.iter().enumerate() {
        for (j, gj) in g.iter().enumerate() {
            a[(i, j)] = gj.eval(e);
        }
    }
    let mut scales = vec![1.0; m];
    for (j, scale) in scales.iter_mut().enumerate() {
        let s = a.column(j).amax();
        if s > 0.0 {
            *scale = s;
            a.column_mut(j).unscale_mut(s);
        }
    }
    let rhs = DVector::from_column_slice(values);
    let sol = if n == m {
        a.clone().lu().solve(&rhs)
    } else {
        let at = a.transpose();
        (&at * &a).lu().solve(&(&at * rhs))
    };
    match sol {
        Some(c) => c[0] / scales[0],
        None => f64::NAN,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupportTermReport {
    /// `Tr X*ρX(I−σ⁰)`
    pub trace_term: f64,
    /// `‖ρ⁰X(I−σ⁰)‖_F`
    pub off_support_norm: f64,
    /// `‖σ⁰X*ρXσ⁰ − X*ρX‖_F`
    pub compression_defect: f64,
    pub vanishes: bool,
    pub consistent: bool,
}

/// Evaluates the three equivalent forms of the support condition
/// `ρ⁰X(I−σ⁰) = 0`.
pub fn support_term_equivalence(rho: &PositiveOperator, sigma: &PositiveOperator, x: &ComplexMatrix, tol: f64) -> Result<SupportTermReport> {
    check_dims(rho, sigma, x)?;
    let s0 = sigma.support_projection();
    let off = complement(&s0);
    let xrx = x.adjoint() * rho.matrix() * x;
    let trace_term = hs(&off, &xrx).re;
    let off_support_norm = fro(&(rho.support_projection() * x * &off));
    let compression_defect = fro(&(&s0 * &xrx * &s0 - &xrx));
    let flags = [trace_term.abs() <= tol, off_support_norm <= tol.sqrt(), compression_defect <= tol.sqrt()];
    Ok(SupportTermReport {
        trace_term,
        off_support_norm,
        compression_defect,
        vanishes: flags.iter().all(|&b| b),
        consistent: flags.iter().all(|&b| b) || flags.iter().all(|&b| !b),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::make_function;
    use crate::linalg::{diag, matrix_unit, re};

    fn pos(v: &[f64]) -> PositiveOperator {
        PositiveOperator::new(diag(v)).unwrap()
    }

    #[test]
    fn kl_of_diagonal_pair() {
        let f = make_function("xlogx", &[]).unwrap();
        let v = standard_f_divergence(&f, &pos(&[0.5, 0.5]), &pos(&[0.75, 0.25])).unwrap();
        // 0.5 ln(0.5/0.75) + 0.5 ln(0.5/0.25)
        let expected = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * 2f64.ln();
        assert!((v.value - expected).abs() < 1e-14);
        assert!((v.value - 0.1438410).abs() < 1e-7);
        assert!(v.decomposition_valid);
    }

    #[test]
    fn disjoint_supports_are_infinite() {
        let f = make_function("xlogx", &[]).unwrap();
        let v = standard_f_divergence(&f, &pos(&[1.0, 0.0]), &pos(&[0.0, 1.0])).unwrap();
        assert_eq!(v.value, f64::INFINITY);
        assert_eq!(v.boundary_term, f64::INFINITY);
        assert!(v.decomposition_valid);
    }

    #[test]
    fn modular_action_on_matrix_unit() {
        let d = relative_modular(&pos(&[1.0, 2.0]), &pos(&[3.0, 4.0])).unwrap();
        let e12 = matrix_unit(2, 2, 0, 1);
        let y = d.apply(&e12);
        assert!((y[(0, 1)] - re(0.25)).norm() < 1e-15);
        assert!(fro(&(y - e12.scale(0.25))) < 1e-15);
    }

    #[test]
    fn j_of_sqrt_scales_by_geometric_mean() {
        let f = make_function("power", &[0.5]).unwrap();
        let j = j_superoperator(&f, &pos(&[1.0, 4.0]), &pos(&[1.0, 1.0])).unwrap();
        let e12 = matrix_unit(2, 2, 0, 1);
        let e21 = matrix_unit(2, 2, 1, 0);
        assert!(fro(&(j.apply(&e12) - &e12)) < 1e-14);
        assert!(fro(&(j.apply(&e21) - e21.scale(2.0))) < 1e-14);
        let g = make_function("xlogx", &[]).unwrap();
        assert_eq!(j_superoperator(&g, &pos(&[1.0, 0.0]), &pos(&[0.0, 1.0])).unwrap_err(), Error::InfiniteWeight);
    }

    #[test]
    fn refuses_untagged_functions() {
        let f = crate::functions::make_function_unchecked("power", &[3.0]).unwrap();
        let r = quasi_entropy(&f, &pos(&[1.0, 1.0]), &pos(&[1.0, 1.0]), &identity(2));
        assert!(matches!(r, Err(Error::IndeterminateForm(_))));
    }

    #[test]
    fn support_report_example() {
        let r = support_term_equivalence(&pos(&[1.0, 0.0]), &pos(&[1.0, 0.0]), &matrix_unit(2, 2, 0, 1), 1e-12).unwrap();
        assert!((r.trace_term - 1.0).abs() < 1e-15);
        assert!(r.off_support_norm > 0.5 && r.compression_defect > 0.5);
        assert!(r.consistent && !r.vanishes);
    }

    #[test]
    fn regularized_limit_of_scalar_boundary_cases() {
        for (name, p) in [("power", vec![0.5]), ("power", vec![0.25]), ("xlogx", vec![]), ("psi_t", vec![2.0])] {
            let f = make_function(name, &p).unwrap();
            for (a, b) in [(0.0, 1.0), (0.7, 0.3), (0.0, 0.0)] {
                let lim = regularized_limit(&f, &pos(&[a]), &pos(&[b]), &identity(1), &default_epsilon_grid()).unwrap();
                let exact = boundary_weighted_eval(&f, a, b);
                assert!((lim - exact).abs() < 1e-6, "{name} a={a} b={b}: {lim} vs {exact}");
            }
        }
    }
}
