//! Monotonicity checks and equality-condition batteries.
//!
//! Conditions quantified over all `z ∈ ℂ` or all `t ∈ ℝ` are finite
//! exponential sums `Σ_r r^z C_r` in the spectral ratios `r = a/b`; they hold
//! identically exactly when the coefficients agree class by class, which is
//! how they are decided here.

pub mod scenarios;

use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{adjoint_multiplicative_domain, petz_recovery, schwarz_check, Channel, MultiplicativeDomain, Verdict};
use crate::error::{Error, Result};
use crate::functions::{make_function, FunctionSpec, SpectralFunction};
use crate::linalg::{
    commutator, complement, fro, matrix_unit, ComplexMatrix, PositiveOperator, SpectralCluster, C64,
};
use crate::quasi::quasi_entropy;

pub const DEFAULT_TOL: f64 = 1e-8;
pub const RATIO_TOL: f64 = 1e-9;
pub const MEMBERSHIP_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "tag", rename_all = "kebab-case")]
pub enum ConditionId {
    I,
    Ii,
    Iii { h: FunctionSpec },
    Iv { h: FunctionSpec },
    V,
    Vi,
    Vii { alpha: f64 },
    Viii,
    Ix { alpha: f64 },
    X,
    IPrime,
    IvPrime { f: FunctionSpec },
    ViiPrime { alpha: f64 },
    IxPrime { alpha: f64 },
    Xi,
}

impl ConditionId {
    pub fn tag(&self) -> &'static str {
        match self {
            ConditionId::I => "i",
            ConditionId::Ii => "ii",
            ConditionId::Iii { .. } => "iii",
            ConditionId::Iv { .. } => "iv",
            ConditionId::V => "v",
            ConditionId::Vi => "vi",
            ConditionId::Vii { .. } => "vii",
            ConditionId::Viii => "viii",
            ConditionId::Ix { .. } => "ix",
            ConditionId::X => "x",
            ConditionId::IPrime => "i'",
            ConditionId::IvPrime { .. } => "iv'",
            ConditionId::ViiPrime { .. } => "vii'",
            ConditionId::IxPrime { .. } => "ix'",
            ConditionId::Xi => "xi",
        }
    }

    /// Tag with its parameter, e.g. `vii(0.5)` or `iii(kubo_mori)`.
    pub fn label(&self) -> String {
        match self {
            ConditionId::Iii { h } | ConditionId::Iv { h } => format!("{}({h})", self.tag()),
            ConditionId::IvPrime { f } => format!("{}({f})", self.tag()),
            ConditionId::Vii { alpha } | ConditionId::Ix { alpha } | ConditionId::ViiPrime { alpha } | ConditionId::IxPrime { alpha } => {
                format!("{}({alpha})", self.tag())
            }
            _ => self.tag().to_string(),
        }
    }

    fn order(&self) -> usize {
        ALL_TAGS.iter().position(|t| *t == self.tag()).unwrap_or(usize::MAX)
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ConditionId::Vii { alpha } | ConditionId::Ix { alpha } if !(*alpha > 0.0 && *alpha < 1.0) => {
                Err(Error::ParameterOutOfRange(format!("{} needs alpha in (0,1), got {alpha}", self.tag())))
            }
            ConditionId::ViiPrime { alpha } | ConditionId::IxPrime { alpha } if !(*alpha > 1.0 && *alpha < 2.0) => {
                Err(Error::ParameterOutOfRange(format!("{} needs alpha in (1,2), got {alpha}", self.tag())))
            }
            _ => Ok(()),
        }
    }
}

pub const ALL_TAGS: [&str; 15] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x", "i'", "iv'", "vii'", "ix'", "xi"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Witness {
    Ratio { ratio: f64 },
    RatioBasis { ratio: f64, row: usize, col: usize },
    Function { spec: FunctionSpec },
    Exponent { alpha: f64 },
    Operator,
    Eigenvector { min_eig: f64 },
    Note { text: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionReport {
    pub id: String,
    pub tag: String,
    #[serde(with = "crate::json::ext_real")]
    pub lhs: f64,
    #[serde(with = "crate::json::ext_real")]
    pub rhs: f64,
    #[serde(with = "crate::json::ext_real")]
    pub gap: f64,
    pub verdict: Outcome,
    pub tolerance: f64,
    pub marginal: bool,
    pub witness: Option<Witness>,
}

impl ConditionReport {
    pub fn passed(&self) -> bool {
        self.verdict == Outcome::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Outcome::Fail
    }

    pub(crate) fn not_applicable(id: &str, tag: &str, reason: &str) -> ConditionReport {
        ConditionReport {
            id: id.into(),
            tag: tag.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            gap: 0.0,
            verdict: Outcome::NotApplicable,
            tolerance: 0.0,
            marginal: false,
            witness: Some(Witness::Note { text: reason.into() }),
        }
    }
}

pub(crate) fn finish(id: &str, tag: &str, lhs: f64, rhs: f64, gap: f64, tolerance: f64, witness: Witness) -> ConditionReport {
    let pass = gap <= tolerance;
    let marginal = gap.is_finite() && gap > tolerance / 10.0 && gap <= tolerance * 10.0;
    ConditionReport {
        id: id.into(),
        tag: tag.into(),
        lhs,
        rhs,
        gap,
        verdict: if pass { Outcome::Pass } else { Outcome::Fail },
        tolerance,
        marginal,
        witness: if pass { None } else { Some(witness) },
    }
}

fn ext_gap(l: f64, r: f64) -> f64 {
    if l == r {
        0.0
    } else {
        (l - r).abs()
    }
}

fn rel_tol(tau: f64, l: f64, r: f64) -> f64 {
    let s = 1.0 + l.abs() + r.abs();
    if s.is_finite() {
        tau * s
    } else {
        tau
    }
}

pub(crate) fn scalar_report(id: &str, tag: &str, l: f64, r: f64, tau: f64, witness: Witness) -> ConditionReport {
    finish(id, tag, l, r, ext_gap(l, r), rel_tol(tau, l, r), witness)
}

/// Several scalar comparisons reported at the one with the largest relative gap.
pub(crate) fn worst_scalar(id: &str, tag: &str, items: Vec<(Witness, f64, f64)>, tau: f64) -> ConditionReport {
    let mut best: Option<(f64, Witness, f64, f64)> = None;
    for (w, l, r) in items {
        let score = ext_gap(l, r) / rel_tol(1.0, l, r);
        if best.as_ref().is_none_or(|b| score > b.0 || (score.is_nan() && !b.0.is_nan())) {
            best = Some((score, w, l, r));
        }
    }
    match best {
        Some((_, w, l, r)) => scalar_report(id, tag, l, r, tau, w),
        None => finish(id, tag, 0.0, 0.0, 0.0, tau, Witness::Operator),
    }
}

/// Matrix comparisons in Frobenius norm, reported at the worst item.
pub(crate) fn worst_matrix(id: &str, tag: &str, items: Vec<(Witness, ComplexMatrix, ComplexMatrix)>, tau: f64) -> ConditionReport {
    let mut best: Option<(f64, Witness, f64, f64, f64)> = None;
    for (w, l, r) in items {
        let (nl, nr, g) = (fro(&l), fro(&r), fro(&(&l - &r)));
        let score = g / (1.0 + nl + nr);
        if best.as_ref().is_none_or(|b| score > b.0) {
            best = Some((score, w, nl, nr, g));
        }
    }
    match best {
        Some((_, w, nl, nr, g)) => finish(id, tag, nl, nr, g, tau * (1.0 + nl + nr), w),
        None => finish(id, tag, 0.0, 0.0, 0.0, tau, Witness::Operator),
    }
}

/// Exponential-sum data `z ↦ Σ_r r^z C_r` grouped by distinct ratio.
#[derive(Debug, Clone)]
pub struct RatioDecomposition {
    pub classes: Vec<(f64, ComplexMatrix)>,
    pub clustering_tol: f64,
}

fn same_ratio(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

impl RatioDecomposition {
    pub fn new(clustering_tol: f64) -> Self {
        RatioDecomposition { classes: Vec::new(), clustering_tol }
    }

    pub fn add(&mut self, ratio: f64, coeff: ComplexMatrix) {
        let tol = self.clustering_tol;
        match self.classes.iter_mut().find(|(r, _)| same_ratio(*r, ratio, tol)) {
            Some((_, c)) => *c += coeff,
            None => self.classes.push((ratio, coeff)),
        }
    }

    /// Groups `coeff(P_a, Q_b)` over positive clusters of `ρ` and `σ` by `a/b`.
    pub fn from_spectra(
        rho: &PositiveOperator,
        sigma: &PositiveOperator,
        coeff: impl Fn(&SpectralCluster, &SpectralCluster) -> ComplexMatrix,
    ) -> Self {
        let mut d = RatioDecomposition::new(RATIO_TOL);
        for pa in rho.positive_clusters() {
            for qb in sigma.positive_clusters() {
                d.add(pa.value / qb.value, coeff(pa, qb));
            }
        }
        d.classes.sort_by(|x, y| x.0.total_cmp(&y.0));
        d
    }

    pub fn map(&self, f: impl Fn(&ComplexMatrix) -> ComplexMatrix) -> Self {
        RatioDecomposition { classes: self.classes.iter().map(|(r, c)| (*r, f(c))).collect(), clustering_tol: self.clustering_tol }
    }

    /// `Σ_r r^z C_r`.
    pub fn eval(&self, z: C64) -> ComplexMatrix {
        let shape = self.classes.first().map_or((1, 1), |(_, c)| c.shape());
        let mut acc = ComplexMatrix::zeros(shape.0, shape.1);
        for (r, c) in &self.classes {
            acc += c * (z * r.ln()).exp();
        }
        acc
    }

    pub fn ratios(&self) -> Vec<f64> {
        self.classes.iter().map(|(r, _)| *r).collect()
    }
}

/// Pairs the classes of two decompositions over the union of their ratios
/// (a missing class has coefficient zero).
pub(crate) fn pair_classes(lhs: &RatioDecomposition, rhs: &RatioDecomposition) -> Vec<(f64, ComplexMatrix, ComplexMatrix)> {
    let tol = lhs.clustering_tol.max(rhs.clustering_tol);
    let any = lhs.classes.first().or(rhs.classes.first()).map_or((1, 1), |(_, c)| c.shape());
    let ls = lhs.classes.first().map_or(any, |(_, c)| c.shape());
    let rs = rhs.classes.first().map_or(any, |(_, c)| c.shape());
    let mut out: Vec<(f64, ComplexMatrix, ComplexMatrix)> =
        lhs.classes.iter().map(|(r, c)| (*r, c.clone(), ComplexMatrix::zeros(rs.0, rs.1))).collect();
    for (r, c) in &rhs.classes {
        match out.iter_mut().find(|(q, _, _)| same_ratio(*q, *r, tol)) {
            Some(e) => e.2 += c,
            None => out.push((*r, ComplexMatrix::zeros(ls.0, ls.1), c.clone())),
        }
    }
    out.sort_by(|x, y| x.0.total_cmp(&y.0));
    out
}

/// Decides `Σ r^z L_r = Σ r^z R_r` for all `z` by comparing coefficients per ratio class.
pub fn ratio_grouped_equality(lhs: &RatioDecomposition, rhs: &RatioDecomposition, tol: f64) -> ConditionReport {
    let items = pair_classes(lhs, rhs).into_iter().map(|(r, l, rr)| (Witness::Ratio { ratio: r }, l, rr)).collect();
    worst_matrix("ratio-grouped", "ratio-grouped", items, tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    Generic,
    SupportsEqual,
    KInMd,
    KInMdBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegimeInfo {
    /// `‖ρ⁰ − σ⁰‖_F`
    pub support_distance: f64,
    /// `‖K − P_M(K)‖_F / ‖K‖_F`
    pub md_distance: f64,
    /// `‖ρ⁰Φ*(K)(I − σ⁰)‖_F`
    pub boundary_norm: f64,
    pub supports_equal: bool,
    pub k_in_md: bool,
    pub boundary_vanishes: bool,
}

impl RegimeInfo {
    pub fn strongest(&self) -> Regime {
        if self.k_in_md && self.boundary_vanishes {
            Regime::KInMdBoundary
        } else if self.k_in_md {
            Regime::KInMd
        } else if self.supports_equal {
            Regime::SupportsEqual
        } else {
            Regime::Generic
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Anomaly {
    pub kind: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryConfig {
    pub tol: f64,
    pub alpha: f64,
    pub beta: f64,
    pub h_iii: FunctionSpec,
    pub h_iv: FunctionSpec,
    pub f_iv_prime: FunctionSpec,
    pub membership_tol: f64,
    pub schwarz_samples: usize,
    pub seed: u64,
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            tol: DEFAULT_TOL,
            alpha: 0.5,
            beta: 1.5,
            h_iii: FunctionSpec::new("kubo_mori", &[]),
            h_iv: FunctionSpec::new("power", &[0.25]),
            f_iv_prime: FunctionSpec::new("xlogx", &[]),
            membership_tol: MEMBERSHIP_TOL,
            schwarz_samples: crate::channels::DEFAULT_SCHWARZ_SAMPLES,
            seed: 0,
        }
    }
}

impl BatteryConfig {
    /// The conditions run by the battery, in report order.
    pub fn conditions(&self) -> Vec<ConditionId> {
        vec![
            ConditionId::I,
            ConditionId::Ii,
            ConditionId::Iii { h: self.h_iii.clone() },
            ConditionId::Iv { h: self.h_iv.clone() },
            ConditionId::V,
            ConditionId::Vi,
            ConditionId::Vii { alpha: self.alpha },
            ConditionId::Viii,
            ConditionId::Ix { alpha: self.alpha },
            ConditionId::X,
            ConditionId::IPrime,
            ConditionId::IvPrime { f: self.f_iv_prime.clone() },
            ConditionId::ViiPrime { alpha: self.beta },
            ConditionId::IxPrime { alpha: self.beta },
            ConditionId::Xi,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatteryReport {
    pub conditions: Vec<ConditionReport>,
    pub regime: Regime,
    pub regime_info: RegimeInfo,
    pub anomalies: Vec<Anomaly>,
}

impl BatteryReport {
    pub fn get(&self, tag: &str) -> Option<&ConditionReport> {
        self.conditions.iter().find(|c| c.tag == tag)
    }

    pub fn passed(&self, tag: &str) -> bool {
        self.get(tag).is_some_and(|c| c.passed())
    }

    pub fn all_pass(&self, tags: &[&str]) -> bool {
        tags.iter().all(|t| self.passed(t))
    }

    pub fn all_fail(&self, tags: &[&str]) -> bool {
        tags.iter().all(|t| self.get(t).is_some_and(|c| c.failed()))
    }
}

/// Data shared by all conditions of one instance.
struct Prepared<'a> {
    phi: &'a Channel,
    rho: &'a PositiveOperator,
    sigma: &'a PositiveOperator,
    k: &'a ComplexMatrix,
    rho_t: PositiveOperator,
    sigma_t: PositiveOperator,
    kp: ComplexMatrix,
    sigma0: ComplexMatrix,
    /// Distinct positive values of `Sp(Δ) ∪ Sp(Δ̃)`.
    ratios: Vec<f64>,
    /// `|Sp(Δ) ∪ Sp(Δ̃)|`, zero included.
    spectrum_size: usize,
}

pub(crate) fn distinct_ratios(rho: &PositiveOperator, sigma: &PositiveOperator, out: &mut Vec<f64>) {
    for pa in rho.positive_clusters() {
        for qb in sigma.positive_clusters() {
            let r = pa.value / qb.value;
            if !out.iter().any(|q| same_ratio(*q, r, RATIO_TOL)) {
                out.push(r);
            }
        }
    }
}

fn has_zero(rho: &PositiveOperator, sigma: &PositiveOperator) -> bool {
    !rho.is_invertible() || !sigma.is_invertible()
}

impl<'a> Prepared<'a> {
    fn new(phi: &'a Channel, rho: &'a PositiveOperator, sigma: &'a PositiveOperator, k: &'a ComplexMatrix) -> Result<Self> {
        if rho.dim() != phi.dim_in() || sigma.dim() != phi.dim_in() {
            return Err(Error::DimensionMismatch(format!(
                "rho {}, sigma {} vs channel input {}",
                rho.dim(),
                sigma.dim(),
                phi.dim_in()
            )));
        }
        if k.shape() != (phi.dim_out(), phi.dim_out()) {
            return Err(Error::DimensionMismatch(format!("K is {:?}, channel output {}", k.shape(), phi.dim_out())));
        }
        let rho_t = phi.apply_positive(rho)?;
        let sigma_t = phi.apply_positive(sigma)?;
        let kp = phi.apply_adjoint(k);
        let mut ratios = Vec::new();
        distinct_ratios(rho, sigma, &mut ratios);
        distinct_ratios(&rho_t, &sigma_t, &mut ratios);
        ratios.sort_by(|a, b| a.total_cmp(b));
        let zero = has_zero(rho, sigma) || has_zero(&rho_t, &sigma_t);
        let spectrum_size = ratios.len() + usize::from(zero);
        Ok(Prepared { phi, rho, sigma, k, rho_t, sigma_t, kp, sigma0: sigma.support_projection(), ratios, spectrum_size })
    }

    /// `(S^K(ρ̃‖σ̃), S^{Φ*(K)}(ρ‖σ))`.
    fn quasi_pair(&self, f: &SpectralFunction) -> Result<(f64, f64)> {
        let l = quasi_entropy(f, &self.rho_t, &self.sigma_t, self.k)?.value;
        let r = quasi_entropy(f, self.rho, self.sigma, &self.kp)?.value;
        Ok((l, r))
    }

    fn power_trace_pair(&self, alpha: f64) -> (f64, f64) {
        let l = power_trace(self.k, &self.rho_t, &self.sigma_t, alpha);
        let r = power_trace(&self.kp, self.rho, self.sigma, alpha);
        (l, r)
    }

    /// `Σ b P_a K Q_b` grouped by `a/b` for both sides.
    fn weighted_classes(&self) -> (RatioDecomposition, RatioDecomposition) {
        let l = RatioDecomposition::from_spectra(&self.rho_t, &self.sigma_t, |p, q| (&p.projection * self.k * &q.projection).scale(q.value));
        let r = RatioDecomposition::from_spectra(self.rho, self.sigma, |p, q| (&p.projection * &self.kp * &q.projection).scale(q.value));
        (l, r)
    }

    /// `Σ P_a K Q_b` grouped by `a/b` for both sides.
    fn plain_classes(&self) -> (RatioDecomposition, RatioDecomposition) {
        let l = RatioDecomposition::from_spectra(&self.rho_t, &self.sigma_t, |p, q| &p.projection * self.k * &q.projection);
        let r = RatioDecomposition::from_spectra(self.rho, self.sigma, |p, q| &p.projection * &self.kp * &q.projection);
        (l, r)
    }
}

/// `Tr K*ρ^α K σ^{1−α}` with powers restricted to supports.
pub fn power_trace(k: &ComplexMatrix, rho: &PositiveOperator, sigma: &PositiveOperator, alpha: f64) -> f64 {
    crate::linalg::trace(&(k.adjoint() * rho.power(alpha) * k * sigma.power(1.0 - alpha))).re
}

fn function_pair_items(p: &Prepared, catalog: &[FunctionSpec]) -> Result<Vec<(Witness, f64, f64)>> {
    catalog
        .iter()
        .map(|spec| {
            let f = spec.build()?;
            let (l, r) = p.quasi_pair(&f)?;
            Ok((Witness::Function { spec: spec.clone() }, l, r))
        })
        .collect()
}

fn phi_family(p: &Prepared) -> Vec<FunctionSpec> {
    p.ratios.iter().map(|&t| FunctionSpec::new("phi_t", &[t])).collect()
}

fn check_prepared(id: &ConditionId, p: &Prepared, tau: f64) -> Result<ConditionReport> {
    id.validate()?;
    let label = id.label();
    let tag = id.tag();
    let report = match id {
        ConditionId::I => {
            let mut cat = vec![FunctionSpec::new("const", &[1.0]), FunctionSpec::new("affine", &[0.0, 1.0])];
            cat.extend(phi_family(p));
            worst_scalar(&label, tag, function_pair_items(p, &cat)?, tau)
        }
        ConditionId::Ii => {
            let cat = phi_family(p);
            worst_scalar(&label, tag, function_pair_items(p, &cat)?, tau)
        }
        ConditionId::IPrime => {
            let mut cat = vec![
                FunctionSpec::new("const", &[1.0]),
                FunctionSpec::new("affine", &[0.0, 1.0]),
                FunctionSpec::new("power", &[2.0]),
                FunctionSpec::new("xlogx", &[]),
            ];
            cat.extend(p.ratios.iter().map(|&t| FunctionSpec::new("psi_t", &[t])));
            worst_scalar(&label, tag, function_pair_items(p, &cat)?, tau)
        }
        ConditionId::Iii { h } => {
            let f = h.build()?;
            let t = f.tags();
            if !(t.operator_monotone && t.positive) {
                return Err(Error::HypothesisViolated(format!("(iii) needs h in OM+, got {h}")));
            }
            let ok = f.measure().is_some_and(|m| m.support_size() == crate::functions::SupportSize::Continuum);
            if !ok {
                return Err(Error::HypothesisViolated(format!("(iii) needs supp mu_h with a limit point, {h} has none recorded")));
            }
            let (l, r) = p.quasi_pair(&f)?;
            scalar_report(&label, tag, l, r, tau, Witness::Function { spec: h.clone() })
        }
        ConditionId::Iv { h } => {
            let f = h.build()?;
            let t = f.tags();
            if !(t.operator_monotone && t.positive) {
                return Err(Error::HypothesisViolated(format!("(iv) needs h in OM+, got {h}")));
            }
            if !f.measure().is_some_and(|m| m.support_size().at_least(p.spectrum_size)) {
                return Ok(ConditionReport::not_applicable(&label, tag, "|supp mu_h| below the spectral bound"));
            }
            let (l, r) = p.quasi_pair(&f)?;
            scalar_report(&label, tag, l, r, tau, Witness::Function { spec: h.clone() })
        }
        ConditionId::IvPrime { f: spec } => {
            let f = spec.build()?;
            if !f.tags().operator_convex || f.f_zero_plus() != 0.0 || f.f_prime_inf() != f64::INFINITY {
                return Err(Error::HypothesisViolated(format!("(iv') needs f in OC with f(0)=0, f'(inf)=+inf, got {spec}")));
            }
            if !f.measure().is_some_and(|m| m.support_size().at_least(p.spectrum_size)) {
                return Ok(ConditionReport::not_applicable(&label, tag, "|supp nu_f| below the spectral bound"));
            }
            let (l, r) = p.quasi_pair(&f)?;
            if l.is_infinite() || r.is_infinite() {
                finish(&label, tag, l, r, f64::INFINITY, tau, Witness::Function { spec: spec.clone() })
            } else {
                scalar_report(&label, tag, l, r, tau, Witness::Function { spec: spec.clone() })
            }
        }
        ConditionId::V => {
            let (l, r) = p.weighted_classes();
            let r = r.map(|m| p.phi.apply(m));
            let items = pair_classes(&l, &r).into_iter().map(|(q, a, b)| (Witness::Ratio { ratio: q }, a, b)).collect();
            worst_matrix(&label, tag, items, tau)
        }
        ConditionId::Vi => {
            let (l, r) = p.weighted_classes();
            let kd = p.k.adjoint();
            let kpd = p.kp.adjoint();
            let l = l.map(|m| ComplexMatrix::from_element(1, 1, crate::linalg::trace(&(&kd * m))));
            let r = r.map(|m| ComplexMatrix::from_element(1, 1, crate::linalg::trace(&(&kpd * m))));
            let mut rep = ratio_grouped_equality(&l, &r, tau);
            rep.id = label.clone();
            rep.tag = tag.into();
            rep
        }
        ConditionId::Vii { alpha } | ConditionId::ViiPrime { alpha } => {
            let (l, r) = p.power_trace_pair(*alpha);
            scalar_report(&label, tag, l, r, tau, Witness::Exponent { alpha: *alpha })
        }
        ConditionId::Viii => {
            let (l, r) = p.plain_classes();
            let pairs = pair_classes(&l, &r);
            let d = p.phi.dim_out();
            let s0 = &p.sigma0;
            let mut items = Vec::with_capacity(d * d * pairs.len());
            for i in 0..d {
                for j in 0..d {
                    let y = matrix_unit(d, d, i, j);
                    let py = p.phi.apply_adjoint(&y);
                    for (q, a, b) in &pairs {
                        let lhs = s0 * p.phi.apply_adjoint(&(&y * a)) * s0;
                        let rhs = s0 * &py * b;
                        items.push((Witness::RatioBasis { ratio: *q, row: i, col: j }, lhs, rhs));
                    }
                }
            }
            worst_matrix(&label, tag, items, tau)
        }
        ConditionId::Ix { alpha } | ConditionId::IxPrime { alpha } => {
            let s0 = &p.sigma0;
            let inner = p.k.adjoint() * p.rho_t.power(*alpha) * p.k * p.sigma_t.power(-alpha);
            let lhs = s0 * p.phi.apply_adjoint(&inner) * s0;
            let rhs = s0 * p.kp.adjoint() * p.rho.power(*alpha) * &p.kp * p.sigma.power(-alpha);
            worst_matrix(&label, tag, vec![(Witness::Exponent { alpha: *alpha }, lhs, rhs)], tau)
        }
        ConditionId::X => {
            let (l, r) = p.plain_classes();
            let l = l.map(|m| p.phi.apply_adjoint(m) * &p.sigma0);
            let items = pair_classes(&l, &r).into_iter().map(|(q, a, b)| (Witness::Ratio { ratio: q }, a, b)).collect();
            worst_matrix(&label, tag, items, tau)
        }
        ConditionId::Xi => {
            let s0 = &p.sigma0;
            let lhs = s0 * p.kp.adjoint() * p.rho.matrix() * &p.kp * s0;
            let petz = petz_recovery(p.phi, p.sigma)?;
            let rhs = petz.apply(&(p.k.adjoint() * p.rho_t.matrix() * p.k));
            worst_matrix(&label, tag, vec![(Witness::Operator, lhs, rhs)], tau)
        }
    };
    Ok(report)
}

pub(crate) fn require_hypotheses(phi: &Channel, samples: usize, seed: u64) -> Result<()> {
    if !phi.is_tp() {
        return Err(Error::HypothesisViolated(format!("channel is not trace-preserving (residual {:.3e})", phi.tp_residual())));
    }
    match phi.certificates().schwarz_adjoint {
        Verdict::Certified | Verdict::SampledPass => Ok(()),
        Verdict::Fail => Err(Error::HypothesisViolated("adjoint is not a Schwarz map".into())),
        Verdict::Unknown => match schwarz_check(&phi.adjoint_channel(), samples, seed)? {
            crate::channels::SchwarzVerdict::Fail { min_eig, .. } => {
                Err(Error::HypothesisViolated(format!("adjoint is not a Schwarz map (min eigenvalue {min_eig:.3e})")))
            }
            _ => Ok(()),
        },
    }
}

/// Evaluates one equality condition.
pub fn check_condition(
    id: &ConditionId,
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    tol: f64,
) -> Result<ConditionReport> {
    require_hypotheses(phi, crate::channels::DEFAULT_SCHWARZ_SAMPLES, 0)?;
    let p = Prepared::new(phi, rho, sigma, k)?;
    check_prepared(id, &p, tol)
}

fn regime_info(p: &Prepared, md: &MultiplicativeDomain, tol: f64) -> RegimeInfo {
    let rho0 = p.rho.support_projection();
    let support_distance = fro(&(&rho0 - &p.sigma0));
    let kn = fro(p.k);
    let md_distance = if kn == 0.0 { 0.0 } else { md.distance(p.k) / kn };
    let boundary_norm = fro(&(&rho0 * &p.kp * complement(&p.sigma0)));
    RegimeInfo {
        support_distance,
        md_distance,
        boundary_norm,
        supports_equal: support_distance <= 1e-8,
        k_in_md: md_distance <= tol,
        boundary_vanishes: boundary_norm <= 1e-8 * (1.0 + kn),
    }
}

/// Edges `(upstream, downstream)` of the elementary implication graph.
const IMPLICATIONS: [(&str, &str); 12] = [
    ("i", "ii"),
    ("ii", "vii"),
    ("vii", "iii"),
    ("iii", "iv"),
    ("viii", "v"),
    ("v", "vi"),
    ("vi", "vii"),
    ("viii", "ix"),
    ("ix", "vii"),
    ("vi", "vii'"),
    ("viii", "ix'"),
    ("ix'", "vii'"),
];

fn equivalence_classes(info: &RegimeInfo) -> Vec<(&'static str, Vec<&'static str>)> {
    let mut out = vec![("ii-iii-vi-vii", vec!["ii", "iii", "vi", "vii"]), ("i-i'", vec!["i", "i'"])];
    if info.supports_equal {
        out.push(("supports-equal", vec!["ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"]));
    }
    if info.k_in_md {
        out.push(("k-in-md", vec!["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x"]));
    }
    if info.k_in_md && info.boundary_vanishes {
        out.push((
            "k-in-md-boundary",
            vec!["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x", "i'", "iv'", "vii'", "ix'"],
        ));
    }
    out
}

fn audit(reports: &[ConditionReport], info: &RegimeInfo) -> Vec<Anomaly> {
    let get = |t: &str| reports.iter().find(|r| r.tag == t);
    let mut out = Vec::new();
    for (up, down) in IMPLICATIONS {
        if let (Some(u), Some(d)) = (get(up), get(down)) {
            if u.passed() && d.failed() && d.gap > 10.0 * d.tolerance {
                out.push(Anomaly {
                    kind: "implication".into(),
                    detail: format!("({up}) passes but ({down}) fails with gap {:.3e}", d.gap),
                });
            }
        }
    }
    for (name, class) in equivalence_classes(info) {
        let verdicts: Vec<&ConditionReport> =
            class.iter().filter_map(|t| get(t)).filter(|r| r.verdict != Outcome::NotApplicable).collect();
        let pass: Vec<&str> = verdicts.iter().filter(|r| r.passed()).map(|r| r.tag.as_str()).collect();
        let fail: Vec<&str> = verdicts.iter().filter(|r| r.failed()).map(|r| r.tag.as_str()).collect();
        if !pass.is_empty() && !fail.is_empty() {
            out.push(Anomaly {
                kind: "equivalence".into(),
                detail: format!("class {name}: pass {pass:?}, fail {fail:?}"),
            });
        }
    }
    if info.k_in_md && !info.boundary_vanishes {
        if let Some(r) = get("iv'") {
            if r.passed() {
                out.push(Anomaly {
                    kind: "equivalence".into(),
                    detail: "(iv') passes although rho^0 Phi*(K)(I - sigma^0) != 0".into(),
                });
            }
        }
    }
    if info.supports_equal || info.k_in_md {
        let core = ["ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"];
        if core.iter().all(|t| get(t).is_some_and(|r| r.passed())) {
            if let Some(r) = get("xi") {
                if r.failed() && r.gap > 10.0 * r.tolerance {
                    out.push(Anomaly { kind: "implication".into(), detail: "(ii)-(ix) pass but (xi) fails".into() });
                }
            }
        }
    }
    out
}

/// Runs every condition on one instance, classifies the hypothesis regime and
/// audits the verdict pattern against the known implications and equivalences.
pub fn run_battery(
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    config: &BatteryConfig,
) -> Result<BatteryReport> {
    require_hypotheses(phi, config.schwarz_samples, config.seed)?;
    let p = Prepared::new(phi, rho, sigma, k)?;
    let md = adjoint_multiplicative_domain(phi)?;
    let info = regime_info(&p, &md, config.membership_tol);
    let ids = config.conditions();
    let mut reports: Vec<(usize, ConditionReport)> = ids
        .par_iter()
        .map(|id| check_prepared(id, &p, config.tol).map(|r| (id.order(), r)))
        .collect::<Result<_>>()?;
    reports.sort_by_key(|(o, _)| *o);
    let conditions: Vec<ConditionReport> = reports.into_iter().map(|(_, r)| r).collect();
    let anomalies = audit(&conditions, &info);
    Ok(BatteryReport { conditions, regime: info.strongest(), regime_info: info, anomalies })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionKind {
    OperatorMonotone,
    OperatorConvex,
}

/// Monotonicity under `Φ`: for operator monotone `h`,
/// `S_h^K(Φ(ρ)‖Φ(σ)) ≥ S_h^{Φ*(K)}(ρ‖σ)`; for operator convex `f` and
/// `K ∈ M_{Φ*}` the reverse inequality. The signed gap is
/// (larger side) − (smaller side); the check passes when it is `≥ −slack·scale`.
pub fn dpi_check(
    kind: FunctionKind,
    f: &SpectralFunction,
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    slack: f64,
) -> Result<ConditionReport> {
    require_hypotheses(phi, crate::channels::DEFAULT_SCHWARZ_SAMPLES, 0)?;
    let t = f.tags();
    let label = format!("dpi({})", f.spec());
    match kind {
        FunctionKind::OperatorMonotone if !t.operator_monotone => {
            return Err(Error::HypothesisViolated(format!("{} is not operator monotone", f.name())))
        }
        FunctionKind::OperatorConvex if !t.operator_convex => {
            return Err(Error::HypothesisViolated(format!("{} is not operator convex", f.name())))
        }
        _ => {}
    }
    let p = Prepared::new(phi, rho, sigma, k)?;
    if kind == FunctionKind::OperatorConvex {
        let md = adjoint_multiplicative_domain(phi)?;
        if !md.contains(k, MEMBERSHIP_TOL) {
            return Ok(ConditionReport::not_applicable(&label, "dpi", "K is not in the multiplicative domain of the adjoint"));
        }
    }
    let (out, inp) = p.quasi_pair(f)?;
    let (big, small) = match kind {
        FunctionKind::OperatorMonotone => (out, inp),
        FunctionKind::OperatorConvex => (inp, out),
    };
    let gap = if big == small { 0.0 } else { big - small };
    let tol = rel_tol(slack, big, small);
    let mut rep = finish(&label, "dpi", out, inp, -gap, tol, Witness::Function { spec: f.spec() });
    rep.gap = gap;
    rep.verdict = if gap >= -tol { Outcome::Pass } else { Outcome::Fail };
    if rep.passed() {
        rep.witness = None;
    }
    rep.marginal = gap.is_finite() && gap.abs() <= 10.0 * tol && gap < 0.0;
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperopDpiReport {
    /// `J_f(ρ,σ)⁻¹ − Φ* J_f(Φ(ρ),Φ(σ))⁻¹ Φ ≥ 0`
    pub inverse_form: ConditionReport,
    /// `J_f(Φ(ρ),Φ(σ)) − Φ J_f(ρ,σ) Φ* ≥ 0`
    pub direct_form: ConditionReport,
}

fn psd_report(label: &str, m: &ComplexMatrix, slack: f64) -> ConditionReport {
    let h = (m + m.adjoint()).scale(0.5);
    let sp = crate::linalg::eigh(&h);
    let scale = sp.max().abs().max(sp.min().abs()).max(1.0);
    let tol = slack * scale;
    let min = sp.min();
    let gap = (-min).max(0.0);
    let mut rep = finish(label, label, min, 0.0, gap, tol, Witness::Eigenvector { min_eig: min });
    rep.marginal = gap > tol / 10.0 && gap <= 10.0 * tol;
    rep
}

/// Superoperator monotonicity of `J_f` for invertible `ρ, σ, Φ(ρ), Φ(σ)`.
pub fn superop_dpi_check(
    f: &SpectralFunction,
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    slack: f64,
) -> Result<SuperopDpiReport> {
    let rt = phi.apply_positive(rho)?;
    let st = phi.apply_positive(sigma)?;
    if !rho.is_invertible() || !sigma.is_invertible() || !rt.is_invertible() || !st.is_invertible() {
        return Err(Error::NotInvertible("superoperator monotonicity needs invertible rho, sigma and images".into()));
    }
    let m = phi.superop().matrix();
    let md = phi.adjoint_superop().matrix();
    let jinv = crate::quasi::j_inverse(f, rho, sigma)?;
    let jtinv = crate::quasi::j_inverse(f, &rt, &st)?;
    let d2 = jinv.matrix() - md * jtinv.matrix() * m;
    let j = crate::quasi::j_superoperator(f, rho, sigma)?;
    let jt = crate::quasi::j_superoperator(f, &rt, &st)?;
    let d3 = jt.matrix() - m * j.matrix() * md;
    Ok(SuperopDpiReport { inverse_form: psd_report("ii'-superop", &d2, slack), direct_form: psd_report("iii'-superop", &d3, slack) })
}

/// Joint concavity/convexity equality for `ρ = ⊕ρ_k`, `σ = ⊕σ_k` under the
/// block-trace channel, with the conditions renamed in upper case.
pub fn joint_convexity_equality(
    rhos: &[PositiveOperator],
    sigmas: &[PositiveOperator],
    k: &ComplexMatrix,
    config: &BatteryConfig,
) -> Result<BatteryReport> {
    let n = rhos.len();
    if n == 0 || sigmas.len() != n {
        return Err(Error::DimensionMismatch(format!("{} rho blocks vs {} sigma blocks", n, sigmas.len())));
    }
    let d = rhos[0].dim();
    if rhos.iter().chain(sigmas).any(|x| x.dim() != d) || k.shape() != (d, d) {
        return Err(Error::DimensionMismatch("all blocks and K must share one dimension".into()));
    }
    let stack = |xs: &[PositiveOperator]| -> Result<PositiveOperator> {
        let mut m = ComplexMatrix::zeros(n * d, n * d);
        for (i, x) in xs.iter().enumerate() {
            m.view_mut((i * d, i * d), (d, d)).copy_from(x.matrix());
        }
        PositiveOperator::from_computed(m)
    };
    let rho = stack(rhos)?;
    let sigma = stack(sigmas)?;
    let phi = crate::channels::direct_sum_channel(n, d);
    let mut rep = run_battery(&phi, &rho, &sigma, k, config)?;
    for c in &mut rep.conditions {
        c.tag = c.tag.to_uppercase();
        c.id = c.id.replacen(&c.id.split('(').next().unwrap_or("").to_string(), &c.tag, 1);
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommutationAudit {
    /// `‖[Φ(σ)⁰, K]‖_F`
    pub commutator_norm: f64,
    pub commutes: bool,
    pub sigma_invertible: bool,
    pub i_passes: bool,
    pub ii_to_ix_pass: bool,
    /// The verdict pattern agrees with what the commutation predicts.
    pub consistent: bool,
}

/// Cross-checks (i) against (ii)–(ix) when `ρ⁰ = σ⁰`: commutation of `K`
/// with `Φ(σ)⁰` makes them equivalent, and for invertible `σ` failure of
/// commutation forces (i) to fail whenever (ii)–(ix) hold.
pub fn support_commutation_audit(
    phi: &Channel,
    rho: &PositiveOperator,
    sigma: &PositiveOperator,
    k: &ComplexMatrix,
    config: &BatteryConfig,
) -> Result<CommutationAudit> {
    if fro(&(rho.support_projection() - sigma.support_projection())) > 1e-8 {
        return Err(Error::HypothesisViolated("commutation audit needs rho^0 = sigma^0".into()));
    }
    let st = phi.apply_positive(sigma)?;
    let commutator_norm = fro(&commutator(&st.support_projection(), k));
    let commutes = commutator_norm <= 1e-8 * (1.0 + fro(k));
    let rep = run_battery(phi, rho, sigma, k, config)?;
    let i_passes = rep.passed("i");
    let ii_to_ix_pass = rep.all_pass(&["ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"]);
    let sigma_invertible = sigma.is_invertible();
    let consistent = if commutes {
        i_passes == ii_to_ix_pass
    } else if sigma_invertible && ii_to_ix_pass {
        !i_passes
    } else {
        true
    };
    Ok(CommutationAudit { commutator_norm, commutes, sigma_invertible, i_passes, ii_to_ix_pass, consistent })
}

/// Builds a catalog function by name (convenience for front ends).
pub fn catalog_function(name: &str, params: &[f64]) -> Result<SpectralFunction> {
    make_function(name, params)
}
