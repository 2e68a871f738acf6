//! Two-point monotone metrics, χ²-divergences and their equality cases.

use serde::Serialize;

use crate::channels::{petz_recovery, Channel};
use crate::equality::{
    distinct_ratios, finish, pair_classes, ratio_grouped_equality, require_hypotheses, scalar_report, worst_matrix,
    worst_scalar, Anomaly, ConditionReport, Outcome, RatioDecomposition, Witness, DEFAULT_TOL,
};
use crate::error::{Error, Result};
use crate::functions::{make_function, FunctionSpec, SpectralFunction};
use crate::linalg::{c, fro, trace, ComplexMatrix, PositiveOperator, SpectralCluster, C64};
use crate::quadrature::QuadConfig;
use crate::quasi::quasi_entropy;

fn require_invertible(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<()> {
    if !rho.is_invertible() || !sigma.is_invertible() {
        return Err(Error::NotInvertible("monotone metrics need invertible feet".into()));
    }
    Ok(())
}

fn require_om_positive(h: &SpectralFunction) -> Result<()> {
    let t = h.tags();
    if !(t.operator_monotone && t.positive) {
        return Err(Error::NotPositiveFunction(format!("{} is not a positive operator monotone function", h.name())));
    }
    Ok(())
}

/// `Σ_{a,b} w(a,b) Tr X* P_a Y Q_b` over the positive spectral clusters.
fn cluster_form(
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    w: impl Fn(f64, f64) -> f64,
) -> C64 {
    let xd = x.adjoint();
    let mut acc = c(0.0, 0.0);
    for pa in rho.positive_clusters() {
        for qb in sigma.positive_clusters() {
            acc += trace(&(&xd * &pa.projection * y * &qb.projection)) * w(pa.value, qb.value);
        }
    }
    acc
}

fn metric_unchecked(h: &SpectralFunction, rho: &PositiveOperator, sigma: &PositiveOperator, x: &ComplexMatrix, y: &ComplexMatrix) -> C64 {
    cluster_form(rho, sigma, x, y, |a, b| 1.0 / (b * h.eval(a / b)))
}

/// `γ^h_{ρ,σ}(X, Y) = ⟨X, J_h(ρ,σ)⁻¹ Y⟩` for invertible `ρ, σ`.
pub fn monotone_metric(
    h: &SpectralFunction,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
) -> Result<C64> {
    require_om_positive(h)?;
    require_invertible(rho, sigma)?;
    let d = rho.dim();
    if sigma.dim() != d || x.shape() != (d, d) || y.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("metric arguments must all be {d}x{d}")));
    }
    Ok(metric_unchecked(h, rho, sigma, x, y))
}

/// The same metric through the integral representation of `1/h`:
/// `J_h⁻¹ = a R_σ⁻¹ + b L_ρ⁻¹ + ∫ (Δ + t)⁻¹ R_σ⁻¹ (1+t) dλ(t)`.
pub fn monotone_metric_quadrature(
    h: &SpectralFunction,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    quad: &QuadConfig,
) -> Result<C64> {
    require_om_positive(h)?;
    require_invertible(rho, sigma)?;
    let k = h.reciprocal()?;
    let lam = k
        .measure()
        .ok_or_else(|| Error::NoMeasure(format!("no closed-form measure for 1/{}", h.name())))?
        .clone();
    let xd = x.adjoint();
    let mut acc = c(0.0, 0.0);
    for pa in rho.positive_clusters() {
        for qb in sigma.positive_clusters() {
            let ratio = pa.value / qb.value;
            let kv = lam.reconstruct(ratio, quad)?;
            acc += trace(&(&xd * &pa.projection * y * &qb.projection)) * (kv / qb.value);
        }
    }
    Ok(acc)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Chi2Value {
    /// `⟨ρ − σ, Ω_σ^k (ρ − σ)⟩`
    pub value: f64,
    /// `γ_σ^{1/k}(ρ, ρ) − 1`
    pub via_metric: f64,
    pub routes_agree: bool,
}

/// Compresses `ρ, σ` to `σ⁰H`, after checking densities and `ρ⁰ ≤ σ⁰`.
fn compress_to_support(rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<(ComplexMatrix, PositiveOperator, PositiveOperator)> {
    for (name, x) in [("rho", rho), ("sigma", sigma)] {
        if (x.trace() - 1.0).abs() > 1e-9 {
            return Err(Error::NotDensity(format!("Tr {name} = {}", x.trace())));
        }
    }
    let off = crate::linalg::complement(&sigma.support_projection());
    if fro(&(&off * rho.matrix())) > 1e-9 {
        return Err(Error::SupportViolation("rho^0 is not below sigma^0".into()));
    }
    let w = sigma.support_isometry();
    let rc = PositiveOperator::from_computed(w.adjoint() * rho.matrix() * &w)?;
    let sc = PositiveOperator::from_computed(w.adjoint() * sigma.matrix() * &w)?;
    Ok((w, rc, sc))
}

fn require_chi2_function(k: &SpectralFunction) -> Result<()> {
    let t = k.tags();
    if !(t.operator_monotone_decreasing && t.positive) {
        return Err(Error::NotPositiveFunction(format!("{} is not positive operator monotone decreasing", k.name())));
    }
    if (k.eval(1.0) - 1.0).abs() > 1e-12 {
        return Err(Error::ParamOutOfClassRange(format!("{} has k(1) = {}", k.name(), k.eval(1.0))));
    }
    Ok(())
}

/// `χ²_k(ρ, σ)` for densities with `ρ⁰ ≤ σ⁰`, computed on `B(σ⁰H)`.
pub fn chi2_divergence(k: &SpectralFunction, rho: &PositiveOperator, sigma: &PositiveOperator) -> Result<Chi2Value> {
    require_chi2_function(k)?;
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch(format!("rho {} vs sigma {}", rho.dim(), sigma.dim())));
    }
    let (_, rc, sc) = compress_to_support(rho, sigma)?;
    let diff = rc.matrix() - sc.matrix();
    let value = cluster_form(&sc, &sc, &diff, &diff, |a, b| k.eval(a / b) / b).re;
    let h = k.reciprocal()?;
    let via_metric = metric_unchecked(&h, &sc, &sc, rc.matrix(), rc.matrix()).re - 1.0;
    let routes_agree = (value - via_metric).abs() <= 1e-9 * (1.0 + value.abs());
    Ok(Chi2Value { value, via_metric, routes_agree })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HessianReport {
    pub finite_difference: f64,
    pub metric: f64,
    pub abs_error: f64,
    pub step: f64,
    pub agrees: bool,
}

fn relative_entropy(a: &PositiveOperator, b: &PositiveOperator) -> f64 {
    let la = a.map(|x| if x > 0.0 { x.ln() } else { 0.0 });
    let lb = b.map(|x| if x > 0.0 { x.ln() } else { 0.0 });
    trace(&(a.matrix() * (la - lb))).re
}

/// Compares `−∂²/∂s∂t D(σ + sX ‖ σ + tY)` at the origin with the Kubo–Mori
/// metric `γ_σ^{h₀}(X, Y)`, by a four-point central difference with one
/// Richardson step. The default step is `10⁻³·λ_min(σ)`.
pub fn kubo_mori_hessian_check(
    sigma: &PositiveOperator,
    x: &ComplexMatrix,
    y: &ComplexMatrix,
    step: Option<f64>,
) -> Result<HessianReport> {
    if !sigma.is_invertible() {
        return Err(Error::NotInvertible("Hessian check needs an invertible sigma".into()));
    }
    let step = step.unwrap_or(1e-3 * sigma.min_eigenvalue());
    let h0 = make_function("kubo_mori", &[])?;
    let metric = metric_unchecked(&h0, sigma, sigma, x, y).re;
    let shifted = |s: f64, z: &ComplexMatrix| -> Result<PositiveOperator> {
        let m = sigma.matrix() + z.scale(s);
        PositiveOperator::from_computed(m.clone())
            .ok()
            .filter(|p| p.is_invertible())
            .ok_or_else(|| Error::GridTooCoarse(format!("sigma + {s:e}·X leaves the positive cone")))
    };
    let mixed = |e: f64| -> Result<f64> {
        let mut acc = 0.0;
        for (s, t, sign) in [(e, e, 1.0), (e, -e, -1.0), (-e, e, -1.0), (-e, -e, 1.0)] {
            acc += sign * relative_entropy(&shifted(s, x)?, &shifted(t, y)?);
        }
        Ok(acc / (4.0 * e * e))
    };
    let coarse = mixed(step)?;
    let fine = mixed(step / 2.0)?;
    let finite_difference = -(4.0 * fine - coarse) / 3.0;
    let abs_error = (finite_difference - metric).abs();
    Ok(HessianReport { finite_difference, metric, abs_error, step, agrees: abs_error <= 1e-4 * (1.0 + metric.abs()) })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricBatteryConfig {
    pub tol: f64,
    pub alpha: f64,
    pub h_ii: FunctionSpec,
    pub h_iv: FunctionSpec,
    pub schwarz_samples: usize,
    pub seed: u64,
}

impl Default for MetricBatteryConfig {
    fn default() -> Self {
        MetricBatteryConfig {
            tol: DEFAULT_TOL,
            alpha: 0.5,
            h_ii: FunctionSpec::new("kubo_mori", &[]),
            h_iv: FunctionSpec::new("power", &[0.25]),
            schwarz_samples: crate::channels::DEFAULT_SCHWARZ_SAMPLES,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricBatteryReport {
    pub conditions: Vec<ConditionReport>,
    pub anomalies: Vec<Anomaly>,
}

impl MetricBatteryReport {
    pub fn get(&self, tag: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.tag == tag)
    }

    pub fn passed(&self, tag: &str) -> bool {
        self.get(tag).is_some_and(|c| c.passed())
    }

    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.verdict != Outcome::Fail)
    }

    pub fn all_fail(&self) -> bool {
        self.conditions.iter().all(|c| c.verdict != Outcome::Pass)
    }
}

struct MetricInstance<'a> {
    rho: &'a PositiveOperator,
    sigma: &'a PositiveOperator,
    k: &'a ComplexMatrix,
    rho_t: PositiveOperator,
    sigma_t: PositiveOperator,
    k_t: ComplexMatrix,
    ratios: Vec<f64>,
    spectrum_size: usize,
}

impl MetricInstance<'_> {
    fn metric_pair(&self, h: &SpectralFunction) -> (f64, f64) {
        let l = metric_unchecked(h, &self.rho_t, &self.sigma_t, &self.k_t, &self.k_t).re;
        let r = metric_unchecked(h, self.rho, self.sigma, self.k, self.k).re;
        (l, r)
    }

    fn inverse_quasi_pair(&self, f: &SpectralFunction) -> Result<(f64, f64)> {
        let inv = |x: &PositiveOperator| PositiveOperator::from_computed(x.generalized_inverse());
        let l = quasi_entropy(f, &inv(&self.rho_t)?, &inv(&self.sigma_t)?, &self.k_t)?.value;
        let r = quasi_entropy(f, &inv(self.rho)?, &inv(self.sigma)?, self.k)?.value;
        Ok((l, r))
    }

    fn power_pair(&self, alpha: f64) -> (f64, f64) {
        let side = |k: &ComplexMatrix, r: &PositiveOperator, s: &PositiveOperator| {
            trace(&(k.adjoint() * r.power(-alpha) * k * s.power(alpha - 1.0))).re
        };
        (side(&self.k_t, &self.rho_t, &self.sigma_t), side(self.k, self.rho, self.sigma))
    }

    /// `Σ P_a K Q_b / b` grouped by `a/b` on both sides.
    fn classes(&self) -> (RatioDecomposition, RatioDecomposition) {
        let coeff = |k: &ComplexMatrix| {
            let k = k.clone();
            move |p: &SpectralCluster, q: &SpectralCluster| (&p.projection * &k * &q.projection).unscale(q.value)
        };
        let l = RatioDecomposition::from_spectra(&self.rho_t, &self.sigma_t, coeff(&self.k_t));
        let r = RatioDecomposition::from_spectra(self.rho, self.sigma, coeff(self.k));
        (l, r)
    }
}

fn function_items(
    specs: &[FunctionSpec],
    eval: impl Fn(&SpectralFunction) -> Result<(f64, f64)>,
) -> Result<Vec<(Witness, f64, f64)>> {
    specs
        .iter()
        .map(|s| {
            let f = s.build()?;
            let (l, r) = eval(&f)?;
            Ok((Witness::Function { spec: s.clone() }, l, r))
        })
        .collect()
}

/// Equality cases of `γ^h_{Φ(ρ),Φ(σ)}(Φ(K),Φ(K)) ≤ γ^h_{ρ,σ}(K,K)` for
/// invertible `ρ, σ`: conditions (i)-(vii), and (viii) when `ρ = σ`.
pub fn metric_equality_battery(
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    config: &MetricBatteryConfig,
) -> Result<MetricBatteryReport> {
    require_hypotheses(phi, config.schwarz_samples, config.seed)?;
    require_invertible(rho, sigma)?;
    if !(config.alpha > 0.0 && config.alpha < 1.0) {
        return Err(Error::ParameterOutOfRange(format!("alpha must lie in (0,1), got {}", config.alpha)));
    }
    let d = phi.dim_in();
    if rho.dim() != d || sigma.dim() != d || k.shape() != (d, d) {
        return Err(Error::DimensionMismatch(format!("rho, sigma and K must be {d}x{d}")));
    }
    let rho_t = phi.apply_positive(rho)?;
    let sigma_t = phi.apply_positive(sigma)?;
    let mut ratios = Vec::new();
    distinct_ratios(rho, sigma, &mut ratios);
    distinct_ratios(&rho_t, &sigma_t, &mut ratios);
    ratios.sort_by(|a, b| a.total_cmp(b));
    let inst = MetricInstance {
        rho,
        sigma,
        k,
        k_t: phi.apply(k),
        rho_t,
        sigma_t,
        spectrum_size: ratios.len(),
        ratios,
    };
    let tau = config.tol;
    let mut out = Vec::new();

    // Shifted family x + t, with the affine endpoints 1 and x.
    let mut fam_i = vec![FunctionSpec::new("const", &[1.0]), FunctionSpec::new("affine", &[0.0, 1.0])];
    fam_i.extend(inst.ratios.iter().map(|&t| FunctionSpec::new("affine", &[t, 1.0])));
    out.push(worst_scalar("i", "i", function_items(&fam_i, |h| Ok(inst.metric_pair(h)))?, tau));

    let h_ii = config.h_ii.build()?;
    require_om_positive(&h_ii)?;
    let lam_ok = h_ii.reciprocal()?.measure().is_some_and(|m| m.support_size().at_least(inst.spectrum_size));
    out.push(if lam_ok {
        let (l, r) = inst.metric_pair(&h_ii);
        scalar_report(&format!("ii({})", config.h_ii), "ii", l, r, tau, Witness::Function { spec: config.h_ii.clone() })
    } else {
        ConditionReport::not_applicable("ii", "ii", "|supp lambda_{1/h}| below the spectral bound")
    });

    let mut fam_iii = vec![FunctionSpec::new("const", &[1.0]), FunctionSpec::new("affine", &[0.0, 1.0])];
    fam_iii.extend(inst.ratios.iter().map(|&t| FunctionSpec::new("phi_t", &[t])));
    out.push(worst_scalar("iii", "iii", function_items(&fam_iii, |h| inst.inverse_quasi_pair(h))?, tau));

    let h_iv = config.h_iv.build()?;
    require_om_positive(&h_iv)?;
    let mu_ok = h_iv.measure().is_some_and(|m| m.support_size().at_least(inst.spectrum_size));
    out.push(if mu_ok {
        let (l, r) = inst.inverse_quasi_pair(&h_iv)?;
        scalar_report(&format!("iv({})", config.h_iv), "iv", l, r, tau, Witness::Function { spec: config.h_iv.clone() })
    } else {
        ConditionReport::not_applicable("iv", "iv", "|supp mu_h| below the spectral bound")
    });

    let (cl, cr) = inst.classes();
    let kd = k.adjoint();
    let ktd = inst.k_t.adjoint();
    let sl = cl.map(|m| ComplexMatrix::from_element(1, 1, trace(&(&ktd * m))));
    let sr = cr.map(|m| ComplexMatrix::from_element(1, 1, trace(&(&kd * m))));
    let mut v = ratio_grouped_equality(&sl, &sr, tau);
    v.id = "v".into();
    v.tag = "v".into();
    out.push(v);

    let (l, r) = inst.power_pair(config.alpha);
    out.push(scalar_report(&format!("vi({})", config.alpha), "vi", l, r, tau, Witness::Exponent { alpha: config.alpha }));

    let ml = cl.map(|m| phi.apply_adjoint(m));
    let items = pair_classes(&ml, &cr).into_iter().map(|(q, a, b)| (Witness::Ratio { ratio: q }, a, b)).collect();
    out.push(worst_matrix("vii", "vii", items, tau));

    if fro(&(rho.matrix() - sigma.matrix())) <= 1e-12 * (1.0 + fro(sigma.matrix())) {
        let petz = petz_recovery(phi, sigma)?;
        let rec = petz.apply(&inst.k_t);
        out.push(worst_matrix("viii", "viii", vec![(Witness::Operator, rec, k.clone())], tau));
    } else {
        out.push(ConditionReport::not_applicable("viii", "viii", "only defined for rho = sigma"));
    }

    let anomalies = audit_all_equal(&out);
    Ok(MetricBatteryReport { conditions: out, anomalies })
}

fn audit_all_equal(reports: &[ConditionReport]) -> Vec<Anomaly> {
    let pass: Vec<&str> = reports.iter().filter(|r| r.passed()).map(|r| r.tag.as_str()).collect();
    let fail: Vec<&str> = reports.iter().filter(|r| r.failed()).map(|r| r.tag.as_str()).collect();
    if !pass.is_empty() && !fail.is_empty() {
        vec![Anomaly { kind: "equivalence".into(), detail: format!("pass {pass:?}, fail {fail:?}") }]
    } else {
        vec![]
    }
}

/// Equality cases of `χ²_k(Φ(ρ),Φ(σ)) ≤ χ²_k(ρ,σ)` for densities with
/// `ρ⁰ ≤ σ⁰`, reported as (i'), (ii'), (vi'), (vii'). The channel is first
/// restricted to `B(σ⁰H)`.
pub fn chi2_equality_battery(
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    config: &MetricBatteryConfig,
) -> Result<MetricBatteryReport> {
    if rho.dim() != phi.dim_in() || sigma.dim() != phi.dim_in() {
        return Err(Error::DimensionMismatch(format!("states must match the channel input {}", phi.dim_in())));
    }
    let (w, rc, sc) = compress_to_support(rho, sigma)?;
    let embed = Channel::from_kraus(vec![w])?;
    let restricted = phi.compose(&embed)?.with_schwarz_verdict(phi.certificates().schwarz_adjoint);
    let rep = metric_equality_battery(&restricted, &sc, &sc, rc.matrix(), config)?;
    let keep = [("i", "i'"), ("ii", "ii'"), ("vi", "vi'"), ("vii", "vii'")];
    let conditions: Vec<ConditionReport> = rep
        .conditions
        .into_iter()
        .filter_map(|mut c| {
            let (_, primed) = keep.iter().find(|(t, _)| *t == c.tag)?;
            c.id = c.id.replacen(&c.tag, primed, 1);
            c.tag = (*primed).into();
            Some(c)
        })
        .collect();
    let anomalies = audit_all_equal(&conditions);
    Ok(MetricBatteryReport { conditions, anomalies })
}

/// Signed monotonicity gap `γ(X,X) − γ_Φ(Φ(X),Φ(X))`.
pub fn metric_monotonicity_gap(
    h: &SpectralFunction,
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    x: &ComplexMatrix,
) -> Result<ConditionReport> {
    require_om_positive(h)?;
    require_invertible(rho, sigma)?;
    let rt = phi.apply_positive(rho)?;
    let st = phi.apply_positive(sigma)?;
    let xt = phi.apply(x);
    let out = metric_unchecked(h, &rt, &st, &xt, &xt).re;
    let inp = metric_unchecked(h, rho, sigma, x, x).re;
    let gap = inp - out;
    let tol = 1e-9 * (1.0 + inp.abs());
    let mut rep = finish("metric-monotonicity", "metric-monotonicity", out, inp, gap, tol, Witness::Function { spec: h.spec() });
    rep.verdict = if gap >= -tol { Outcome::Pass } else { Outcome::Fail };
    if rep.passed() {
        rep.witness = None;
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{identity_channel, partial_trace_channel, random_tpcp};
    use crate::linalg::{diag, identity, kron};
    use crate::random;

    fn f(name: &str, p: &[f64]) -> SpectralFunction {
        make_function(name, p).unwrap()
    }

    fn hermitian_traceless(rng: &mut random::QRng, d: usize) -> ComplexMatrix {
        let h = random::hermitian(rng, d);
        let t = trace(&h) / c(d as f64, 0.0);
        h - identity(d) * t
    }

    #[test]
    fn constant_h_is_right_inverse() {
        let mut rng = random::rng(1);
        let s = random::faithful(&mut rng, 3);
        let x = random::ginibre(&mut rng, 3, 3);
        let g = monotone_metric(&f("const", &[1.0]), &s, &s, &x, &x).unwrap();
        let direct = trace(&(x.adjoint() * &x * s.power(-1.0)));
        assert!((g - direct).norm() < 1e-10);
    }

    #[test]
    fn commuting_case_gives_classical_form() {
        let s = PositiveOperator::new(diag(&[0.2, 0.3, 0.5])).unwrap();
        let x = diag(&[0.1, -0.4, 0.3]);
        for h in [f("power", &[0.5]), f("kubo_mori", &[]), f("harmonic", &[])] {
            let g = monotone_metric(&h, &s, &s, &x, &x).unwrap().re;
            let classical = 0.1f64.powi(2) / 0.2 + 0.4f64.powi(2) / 0.3 + 0.3f64.powi(2) / 0.5;
            assert!((g - classical).abs() < 1e-12, "{}", h.name());
        }
    }

    #[test]
    fn sesquilinear_and_homogeneous() {
        let mut rng = random::rng(2);
        let r = random::faithful(&mut rng, 3);
        let s = random::faithful(&mut rng, 3);
        let x = random::ginibre(&mut rng, 3, 3);
        let y1 = random::ginibre(&mut rng, 3, 3);
        let y2 = random::ginibre(&mut rng, 3, 3);
        let a = c(0.3, -1.2);
        let h = f("power", &[0.3]);
        let lhs = monotone_metric(&h, &r, &s, &x, &(&y1 * a + &y2)).unwrap();
        let rhs = monotone_metric(&h, &r, &s, &x, &y1).unwrap() * a + monotone_metric(&h, &r, &s, &x, &y2).unwrap();
        assert!((lhs - rhs).norm() < 1e-10);
        assert!(monotone_metric(&h, &r, &s, &x, &x).unwrap().re >= 0.0);
        let al = 2.5;
        let scaled = monotone_metric(&h, &r.scaled(al).unwrap(), &s.scaled(al).unwrap(), &x.scale(al), &x.scale(al)).unwrap();
        assert!((scaled - monotone_metric(&h, &r, &s, &x, &x).unwrap() * al).norm() < 1e-10);
    }

    #[test]
    fn quadrature_route_agrees() {
        let mut rng = random::rng(3);
        let r = random::faithful(&mut rng, 3);
        let s = random::faithful(&mut rng, 3);
        let x = random::ginibre(&mut rng, 3, 3);
        for h in [f("power", &[0.5]), f("power", &[0.2]), f("kubo_mori", &[]), f("phi_t", &[0.7]), f("harmonic", &[])] {
            let a = monotone_metric(&h, &r, &s, &x, &x).unwrap();
            let b = monotone_metric_quadrature(&h, &r, &s, &x, &x, &QuadConfig::default()).unwrap();
            assert!((a - b).norm() <= 1e-6 * (1.0 + a.norm()), "{}: {a} vs {b}", h.name());
        }
    }

    #[test]
    fn duality_with_inverse_quasi_entropy() {
        for seed in 0..20u64 {
            let mut rng = random::rng(seed);
            let r = random::faithful(&mut rng, 3);
            let s = random::faithful(&mut rng, 3);
            let x = random::ginibre(&mut rng, 3, 3);
            let ri = PositiveOperator::from_computed(r.power(-1.0)).unwrap();
            let si = PositiveOperator::from_computed(s.power(-1.0)).unwrap();
            for h in [f("power", &[0.5]), f("kubo_mori", &[]), f("phi_t", &[2.0]), f("affine", &[1.0, 2.0])] {
                let g = monotone_metric(&h, &r, &s, &x, &x).unwrap().re;
                let q = quasi_entropy(&h.adjoint_star().unwrap(), &ri, &si, &x).unwrap().value;
                assert!((g - q).abs() <= 1e-9 * (1.0 + g.abs()), "{}: {g} vs {q}", h.name());
            }
        }
    }

    #[test]
    fn metric_is_monotone_and_jointly_convex() {
        let h = f("power", &[0.5]);
        for seed in 0..10u64 {
            let mut rng = random::rng(seed);
            let r = random::faithful(&mut rng, 4);
            let s = random::faithful(&mut rng, 4);
            let x = random::ginibre(&mut rng, 4, 4);
            let phi = random_tpcp(4, 3, None, seed).unwrap();
            assert!(metric_monotonicity_gap(&h, &phi, &r, &s, &x).unwrap().passed());

            let r2 = random::faithful(&mut rng, 4);
            let s2 = random::faithful(&mut rng, 4);
            let x2 = random::ginibre(&mut rng, 4, 4);
            let l = 0.3;
            let mix = |a: &PositiveOperator, b: &PositiveOperator| {
                PositiveOperator::new(a.matrix().scale(l) + b.matrix().scale(1.0 - l)).unwrap()
            };
            let xm = x.scale(l) + x2.scale(1.0 - l);
            let lhs = monotone_metric(&h, &mix(&r, &r2), &mix(&s, &s2), &xm, &xm).unwrap().re;
            let rhs = l * monotone_metric(&h, &r, &s, &x, &x).unwrap().re
                + (1.0 - l) * monotone_metric(&h, &r2, &s2, &x2, &x2).unwrap().re;
            assert!(lhs <= rhs + 1e-8);
        }
    }

    #[test]
    fn chi2_basic_cases() {
        let k = f("kalpha", &[0.5]);
        let p = [0.5, 0.3, 0.2];
        let q = [0.25, 0.25, 0.5];
        let r = PositiveOperator::new(diag(&p)).unwrap();
        let s = PositiveOperator::new(diag(&q)).unwrap();
        let v = chi2_divergence(&k, &r, &s).unwrap();
        let classical: f64 = p.iter().zip(&q).map(|(a, b)| (a - b) * (a - b) / b).sum();
        assert!((v.value - classical).abs() < 1e-12 && v.routes_agree);
        assert!(chi2_divergence(&k, &s, &s).unwrap().value.abs() < 1e-12);

        let mut rng = random::rng(4);
        let r = random::faithful(&mut rng, 3);
        let s = random::faithful(&mut rng, 3);
        let v = chi2_divergence(&k, &r, &s).unwrap();
        let direct = trace(&(r.matrix() * s.power(-0.5) * r.matrix() * s.power(-0.5))).re - 1.0;
        assert!((v.value - direct).abs() < 1e-9 && v.value > 0.0 && v.routes_agree);
        let sym = chi2_divergence(&k.symmetrized().unwrap(), &r, &s).unwrap();
        assert!((sym.value - v.value).abs() < 1e-9);
        let k3 = f("kalpha", &[0.3]);
        let a = chi2_divergence(&k3, &r, &s).unwrap().value;
        let b = chi2_divergence(&k3.symmetrized().unwrap(), &r, &s).unwrap().value;
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn chi2_rejects_bad_inputs() {
        let k = f("kalpha", &[0.5]);
        let r = PositiveOperator::new(diag(&[0.5, 0.5])).unwrap();
        let s = PositiveOperator::new(diag(&[1.0, 0.0])).unwrap();
        assert!(matches!(chi2_divergence(&k, &r, &s), Err(Error::SupportViolation(_))));
        let big = PositiveOperator::new(diag(&[1.0, 1.0])).unwrap();
        assert!(matches!(chi2_divergence(&k, &big, &r), Err(Error::NotDensity(_))));
        let v = chi2_divergence(&k, &s, &r).unwrap();
        assert!((v.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn chi2_is_monotone() {
        let k = f("kalpha", &[0.5]);
        for seed in 0..10u64 {
            let mut rng = random::rng(50 + seed);
            let r = random::faithful(&mut rng, 4);
            let s = random::faithful(&mut rng, 4);
            let phi = random_tpcp(4, 2, None, seed).unwrap();
            let before = chi2_divergence(&k, &r, &s).unwrap().value;
            let after = chi2_divergence(&k, &phi.apply_positive(&r).unwrap(), &phi.apply_positive(&s).unwrap()).unwrap().value;
            assert!(after <= before + 1e-9);
        }
    }

    #[test]
    fn hessian_matches_kubo_mori() {
        let s = PositiveOperator::new(diag(&[0.2, 0.3, 0.5])).unwrap();
        let x = diag(&[0.1, -0.4, 0.3]);
        let rep = kubo_mori_hessian_check(&s, &x, &x, None).unwrap();
        let fisher = 0.1f64.powi(2) / 0.2 + 0.4f64.powi(2) / 0.3 + 0.3f64.powi(2) / 0.5;
        assert!((rep.metric - fisher).abs() < 1e-12);
        assert!(rep.agrees, "{rep:?}");
        let zero = ComplexMatrix::zeros(3, 3);
        let rep = kubo_mori_hessian_check(&s, &zero, &zero, None).unwrap();
        assert!(rep.metric == 0.0 && rep.finite_difference.abs() < 1e-6);

        let mut rng = random::rng(5);
        let s = random::faithful(&mut rng, 2);
        let x = hermitian_traceless(&mut rng, 2);
        let y = hermitian_traceless(&mut rng, 2);
        let rep = kubo_mori_hessian_check(&s, &x, &y, Some(1e-3)).unwrap();
        assert!(rep.agrees, "{rep:?}");
        assert!(matches!(kubo_mori_hessian_check(&s, &x, &y, Some(10.0)), Err(Error::GridTooCoarse(_))));
    }

    #[test]
    fn metric_battery_identity_and_tensor_form() {
        let mut rng = random::rng(6);
        let r = random::faithful(&mut rng, 3);
        let s = random::faithful(&mut rng, 3);
        let k = random::ginibre(&mut rng, 3, 3);
        let rep = metric_equality_battery(&identity_channel(3), &r, &s, &k, &MetricBatteryConfig::default()).unwrap();
        assert!(rep.all_pass() && rep.anomalies.is_empty(), "{rep:?}");

        // ρ = ρ₁⊗ω, σ = σ₁⊗ω and K = K₁⊗ω under the partial trace.
        let omega = random::faithful_density(&mut rng, 2);
        let r1 = random::faithful_density(&mut rng, 2);
        let s1 = random::faithful_density(&mut rng, 2);
        let k1 = random::ginibre(&mut rng, 2, 2);
        let rho = PositiveOperator::new(kron(&r1, &omega)).unwrap();
        let sigma = PositiveOperator::new(kron(&s1, &omega)).unwrap();
        let k = kron(&k1, &omega);
        let rep = metric_equality_battery(&partial_trace_channel(2, 2), &rho, &sigma, &k, &MetricBatteryConfig::default()).unwrap();
        assert!(rep.all_pass(), "{rep:#?}");
        let rep = metric_equality_battery(&partial_trace_channel(2, 2), &sigma, &sigma, &k, &MetricBatteryConfig::default()).unwrap();
        assert!(rep.all_pass() && rep.passed("viii"), "{rep:#?}");
    }

    #[test]
    fn metric_battery_random_instances_fail_together() {
        for seed in 0..8u64 {
            let mut rng = random::rng(70 + seed);
            let r = random::faithful(&mut rng, 3);
            let s = random::faithful(&mut rng, 3);
            let k = random::ginibre(&mut rng, 3, 3);
            let phi = random_tpcp(3, 2, None, seed).unwrap();
            let rep = metric_equality_battery(&phi, &r, &s, &k, &MetricBatteryConfig::default()).unwrap();
            assert!(rep.all_fail() && rep.anomalies.is_empty(), "seed {seed}: {rep:#?}");
        }
    }

    #[test]
    fn chi2_battery_primed_conditions() {
        let mut rng = random::rng(8);
        let omega = random::faithful_density(&mut rng, 2);
        let r1 = random::faithful_density(&mut rng, 2);
        let s1 = random::faithful_density(&mut rng, 2);
        let rho = PositiveOperator::new(kron(&r1, &omega)).unwrap();
        let sigma = PositiveOperator::new(kron(&s1, &omega)).unwrap();
        let cfg = MetricBatteryConfig::default();
        let rep = chi2_equality_battery(&partial_trace_channel(2, 2), &rho, &sigma, &cfg).unwrap();
        assert_eq!(rep.conditions.len(), 4);
        assert!(rep.all_pass(), "{rep:#?}");
        let rho = random::faithful(&mut rng, 4);
        let rep = chi2_equality_battery(&partial_trace_channel(2, 2), &rho, &sigma, &cfg).unwrap();
        assert!(rep.all_fail(), "{rep:#?}");
        assert!(rep.get("vi'").is_some());
    }
}
