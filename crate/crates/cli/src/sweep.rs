//! Seeded property sweeps. Each instance draws its randomness from
//! `child_seed(seed, index)`, so rows are independent of thread scheduling.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use qlab_core::channels::{
    adjoint_multiplicative_domain, diagonal_pinching, embed_partial_trace, partial_trace_channel, pinching_channel,
    random_tpcp, tensor_embed, Channel,
};
use qlab_core::equality::{dpi_check, run_battery, superop_dpi_check, BatteryConfig, FunctionKind};
use qlab_core::error::{Error, Result};
use qlab_core::functions::{make_function, SpectralFunction};
use qlab_core::linalg::{diag, eigh, identity, kron, ComplexMatrix, PositiveOperator};
use qlab_core::metrics::{kubo_mori_hessian_check, monotone_metric};
use qlab_core::quasi::{default_epsilon_grid, j_inverse, j_superoperator, quasi_entropy, regularized_oracle};
use qlab_core::random::{self, QRng};
use qlab_core::structure::{
    detect_full_multiplicative_domain, detect_tensor_embed, embed_shortcut, factorize_embed_partial_trace,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepKind {
    Dpi,
    Superop,
    Convexity,
    Battery,
    Oracle,
    Metric,
    Structure,
}

impl SweepKind {
    pub fn name(&self) -> &'static str {
        match self {
            SweepKind::Dpi => "dpi",
            SweepKind::Superop => "superop",
            SweepKind::Convexity => "convexity",
            SweepKind::Battery => "battery",
            SweepKind::Oracle => "oracle",
            SweepKind::Metric => "metric",
            SweepKind::Structure => "structure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "dpi" => SweepKind::Dpi,
            "superop" => SweepKind::Superop,
            "convexity" => SweepKind::Convexity,
            "battery" => SweepKind::Battery,
            "oracle" => SweepKind::Oracle,
            "metric" => SweepKind::Metric,
            "structure" => SweepKind::Structure,
            _ => return Err(Error::UnknownName(s.to_string())),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub kind: SweepKind,
    pub n: usize,
    pub dim: usize,
    pub seed: u64,
    pub tol: f64,
}

impl SweepConfig {
    pub fn new(kind: SweepKind, n: usize, dim: usize, seed: u64) -> Self {
        SweepConfig { kind, n, dim, seed, tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub seed: u64,
    pub checks: usize,
    pub violations: usize,
    /// Smallest signed margin; negative values beyond tolerance are violations.
    pub min_margin: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub rows: Vec<SweepRow>,
    pub checks: usize,
    pub violations: usize,
    /// Named counters beyond pass/fail, e.g. demonstrations of a boundary.
    pub counters: Vec<(String, usize)>,
}

impl SweepReport {
    pub fn counter(&self, name: &str) -> usize {
        self.counters.iter().find(|(k, _)| k == name).map_or(0, |(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let c = &self.config;
        let mut s = String::from("# qlab-report v1\n");
        let _ = writeln!(s, "# kind={} n={} dim={} seed={} tol={:e}", c.kind.name(), c.n, c.dim, c.seed, c.tol);
        s.push_str("index,seed,checks,violations,min_margin,note\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{},{},{:e},{}", r.index, r.seed, r.checks, r.violations, r.min_margin, r.note);
        }
        let min = self.rows.iter().map(|r| r.min_margin).fold(f64::INFINITY, f64::min);
        let counters: Vec<String> = self.counters.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "summary,,{},{},{:e},{}", self.checks, self.violations, min, counters.join(";"));
        s
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                json!({
                    "index": r.index,
                    "seed": r.seed,
                    "checks": r.checks,
                    "violations": r.violations,
                    "min_margin": qlab_core::json::ext_real_value(r.min_margin),
                    "note": r.note,
                })
            })
            .collect();
        let counters: serde_json::Map<String, Value> =
            self.counters.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
        json!({
            "kind": self.config.kind.name(),
            "n": self.config.n,
            "dim": self.config.dim,
            "seed": self.config.seed,
            "checks": self.checks,
            "violations": self.violations,
            "counters": counters,
            "rows": rows,
        })
    }
}

struct Outcome {
    checks: usize,
    violations: usize,
    min_margin: f64,
    notes: Vec<String>,
    counters: Vec<(&'static str, usize)>,
}

impl Outcome {
    fn new() -> Self {
        Outcome { checks: 0, violations: 0, min_margin: f64::INFINITY, notes: vec![], counters: vec![] }
    }

    /// Records one check; `margin < 0` means violated.
    fn check(&mut self, margin: f64, what: impl FnOnce() -> String) {
        self.checks += 1;
        self.min_margin = self.min_margin.min(margin);
        if margin < 0.0 || margin.is_nan() {
            self.violations += 1;
            self.notes.push(what());
        }
    }

    fn flag(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.check(if ok { 0.0 } else { -1.0 }, what);
    }

    fn count(&mut self, name: &'static str) {
        match self.counters.iter_mut().find(|(k, _)| *k == name) {
            Some(e) => e.1 += 1,
            None => self.counters.push((name, 1)),
        }
    }
}

pub fn run_sweep(config: &SweepConfig) -> Result<SweepReport> {
    if config.dim < 2 || config.dim > 6 {
        return Err(Error::ParameterOutOfRange(format!("sweep dimension must lie in [2,6], got {}", config.dim)));
    }
    let results: Vec<(u64, Outcome)> = (0..config.n)
        .into_par_iter()
        .map(|i| {
            let seed = random::child_seed(config.seed, i as u64);
            let mut rng = random::rng(seed);
            let out = match config.kind {
                SweepKind::Dpi => dpi_instance(&mut rng, i, config),
                SweepKind::Superop => superop_instance(&mut rng, i, config),
                SweepKind::Convexity => convexity_instance(&mut rng, config),
                SweepKind::Battery => battery_instance(&mut rng, i, seed),
                SweepKind::Oracle => oracle_instance(&mut rng, config),
                SweepKind::Metric => metric_instance(&mut rng, config),
                SweepKind::Structure => structure_instance(&mut rng, i, seed),
            }?;
            Ok((seed, out))
        })
        .collect::<Result<_>>()?;

    let mut counters: Vec<(String, usize)> = Vec::new();
    let mut rows = Vec::with_capacity(results.len());
    for (index, (seed, o)) in results.into_iter().enumerate() {
        for (k, v) in &o.counters {
            match counters.iter_mut().find(|(name, _)| name == k) {
                Some(e) => e.1 += v,
                None => counters.push((k.to_string(), *v)),
            }
        }
        rows.push(SweepRow {
            index,
            seed,
            checks: o.checks,
            violations: o.violations,
            min_margin: o.min_margin,
            note: o.notes.join(";"),
        });
    }
    counters.sort();
    Ok(SweepReport {
        config: *config,
        checks: rows.iter().map(|r| r.checks).sum(),
        violations: rows.iter().map(|r| r.violations).sum(),
        rows,
        counters,
    })
}

fn f(name: &str, params: &[f64]) -> SpectralFunction {
    make_function(name, params).expect("catalog function")
}

/// Operator monotone `h` and operator convex `f` families of the sweeps.
fn function_classes(rng: &mut QRng) -> (Vec<SpectralFunction>, Vec<SpectralFunction>) {
    let t = random::uniform(rng, 0.1, 5.0);
    let s = random::uniform(rng, 0.1, 5.0);
    (
        vec![f("power", &[0.25]), f("power", &[0.5]), f("power", &[0.75]), f("phi_t", &[t])],
        vec![f("xlogx", &[]), f("power", &[2.0]), f("power", &[1.5]), f("psi_t", &[s])],
    )
}

fn block_pinching(sizes: &[usize]) -> Result<Channel> {
    let d: usize = sizes.iter().sum();
    let mut start = 0;
    let mut projections = Vec::new();
    for &s in sizes {
        let v: Vec<f64> = (0..d).map(|i| if i >= start && i < start + s { 1.0 } else { 0.0 }).collect();
        projections.push(diag(&v));
        start += s;
    }
    pinching_channel(&projections)
}

fn block_positive(rng: &mut QRng, sizes: &[usize]) -> Result<PositiveOperator> {
    let d: usize = sizes.iter().sum();
    let mut m = ComplexMatrix::zeros(d, d);
    let mut start = 0;
    for &s in sizes {
        m.view_mut((start, start), (s, s)).copy_from(random::faithful(rng, s).matrix());
        start += s;
    }
    PositiveOperator::from_computed(m)
}

fn block_matrix(rng: &mut QRng, sizes: &[usize]) -> ComplexMatrix {
    let d: usize = sizes.iter().sum();
    let mut m = ComplexMatrix::zeros(d, d);
    let mut start = 0;
    for &s in sizes {
        m.view_mut((start, start), (s, s)).copy_from(&random::ginibre(rng, s, s));
        start += s;
    }
    m
}

fn dpi_instance(rng: &mut QRng, i: usize, config: &SweepConfig) -> Result<Outcome> {
    let d = config.dim;
    let phi = match i % 3 {
        0 => {
            let d_out = 2 + random::index(rng, d - 1);
            let env = d.div_ceil(d_out) + random::index(rng, 2);
            random_tpcp(d, d_out, Some(env), random::child_seed(config.seed ^ 0x5eed, i as u64))?
        }
        1 => partial_trace_channel(if d >= 3 { 3 } else { 2 }, 2),
        _ => block_pinching(&[d - d / 2, d / 2])?,
    };
    let din = phi.dim_in();
    let rho = random::faithful(rng, din);
    let sigma = random::faithful(rng, din);
    let md = adjoint_multiplicative_domain(&phi)?;
    let k = md.sample(rng);
    let (oms, ocs) = function_classes(rng);
    let mut out = Outcome::new();
    for (kind, fs) in [(FunctionKind::OperatorMonotone, &oms), (FunctionKind::OperatorConvex, &ocs)] {
        for h in fs {
            let r = dpi_check(kind, h, &phi, &rho, &sigma, &k, config.tol)?;
            out.check(r.gap + r.tolerance, || format!("{} gap {:e}", r.id, r.gap));
        }
    }
    Ok(out)
}

fn op_norm(m: &ComplexMatrix) -> f64 {
    let h = (m + m.adjoint()).scale(0.5);
    let sp = eigh(&h);
    sp.max().abs().max(sp.min().abs())
}

fn superop_instance(rng: &mut QRng, i: usize, config: &SweepConfig) -> Result<Outcome> {
    let d = config.dim.min(4);
    let d_out = 2 + random::index(rng, d - 1);
    let phi = random_tpcp(d, d_out, None, random::child_seed(config.seed ^ 0x5eed, i as u64))?;
    let rho = random::faithful(rng, d);
    let sigma = random::faithful(rng, d);
    let (oms, _) = function_classes(rng);
    let h = &oms[i % oms.len()];
    let rep = superop_dpi_check(h, &phi, &rho, &sigma, config.tol)?;
    let rt = phi.apply_positive(&rho)?;
    let st = phi.apply_positive(&sigma)?;
    let jinv = op_norm(j_inverse(h, &rho, &sigma)?.matrix());
    let jt = op_norm(j_superoperator(h, &rt, &st)?.matrix());
    let mut out = Outcome::new();
    let (a, b) = (rep.inverse_form.lhs, rep.direct_form.lhs);
    out.check(a + 1e-9 * jinv, || format!("inverse form of {} min eig {a:e}", h.name()));
    out.check(b + 1e-9 * jt, || format!("direct form of {} min eig {b:e}", h.name()));
    let sq = f("power", &[2.0]);
    let rep2 = superop_dpi_check(&sq, &phi, &rho, &sigma, config.tol)?;
    let j2 = op_norm(j_inverse(&sq, &rho, &sigma)?.matrix());
    if rep2.inverse_form.lhs < -1e-9 * j2 {
        out.count("x2_inverse_violations");
    }
    Ok(out)
}

fn convexity_instance(rng: &mut QRng, config: &SweepConfig) -> Result<Outcome> {
    let d = config.dim;
    let lambda = random::uniform(rng, 0.05, 0.95);
    let r1 = random::faithful(rng, d);
    let r2 = random::faithful(rng, d);
    let s1 = random::faithful(rng, d);
    let s2 = random::faithful(rng, d);
    let k = random::ginibre(rng, d, d);
    let mix = |a: &PositiveOperator, b: &PositiveOperator| {
        PositiveOperator::from_computed(a.matrix().scale(lambda) + b.matrix().scale(1.0 - lambda))
    };
    let rm = mix(&r1, &r2)?;
    let sm = mix(&s1, &s2)?;
    let (oms, ocs) = function_classes(rng);
    let mut out = Outcome::new();
    for (convex, fs) in [(false, &oms), (true, &ocs)] {
        for h in fs {
            let joint = quasi_entropy(h, &rm, &sm, &k)?.value;
            let sep = lambda * quasi_entropy(h, &r1, &s1, &k)?.value
                + (1.0 - lambda) * quasi_entropy(h, &r2, &s2, &k)?.value;
            let gap = if convex { sep - joint } else { joint - sep };
            let tol = config.tol * (1.0 + joint.abs() + sep.abs());
            out.check(gap + tol, || format!("{} gap {gap:e}", h.spec()));
        }
    }
    Ok(out)
}

/// Conditions every constructed equality instance satisfies.
const CLAIMED: [&str; 12] = ["i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix", "x", "i'", "xi"];
const CORE_CLASS: [&str; 4] = ["ii", "iii", "vi", "vii"];

fn battery_instance(rng: &mut QRng, i: usize, seed: u64) -> Result<Outcome> {
    let cfg = BatteryConfig { seed, ..BatteryConfig::default() };
    let (phi, rho, sigma, k, prho, psigma, pk, regime) = match i % 3 {
        0 => {
            let phi = partial_trace_channel(2, 2);
            let omega = random::faithful_density(rng, 2);
            let r1 = random::faithful(rng, 2);
            let s1 = random::faithful(rng, 2);
            let rho = PositiveOperator::new(kron(r1.matrix(), &omega))?;
            let sigma = PositiveOperator::new(kron(s1.matrix(), &omega))?;
            let k = random::ginibre(rng, 2, 2);
            let prho = random::faithful(rng, 4);
            let psigma = random::faithful(rng, 4);
            let pk = random::ginibre(rng, 2, 2);
            (phi, rho, sigma, k, prho, psigma, pk, "partial-trace")
        }
        1 => {
            let sizes = [2, 2];
            let phi = block_pinching(&sizes)?;
            let rho = block_positive(rng, &sizes)?;
            let sigma = block_positive(rng, &sizes)?;
            let k = block_matrix(rng, &sizes);
            let prho = random::faithful(rng, 4);
            let psigma = random::faithful(rng, 4);
            let pk = block_matrix(rng, &sizes);
            (phi, rho, sigma, k, prho, psigma, pk, "pinching")
        }
        _ => {
            let u = random::unitary(rng, 2);
            let eta = random::faithful_density(rng, 2);
            let w = random::isometry(rng, 5, 4);
            let phi = tensor_embed(&u, &eta, Some(&w))?;
            let md = adjoint_multiplicative_domain(&phi)?;
            let r_rank = 1 + random::index(rng, 2);
            let s_rank = 1 + random::index(rng, 2);
            let rho = random::positive(rng, 2, r_rank);
            let sigma = random::positive(rng, 2, s_rank);
            let k = md.sample(rng);
            let prho = random::faithful(rng, 2);
            let psigma = random::faithful(rng, 2);
            let pk = md.sample(rng) + random::ginibre(rng, 5, 5);
            (phi, rho, sigma, k, prho, psigma, pk, "tensor-embed")
        }
    };
    let mut out = Outcome::new();
    let rep = run_battery(&phi, &rho, &sigma, &k, &cfg)?;
    out.flag(rep.anomalies.is_empty(), || format!("{regime}: anomalies {:?}", rep.anomalies));
    for c in rep.conditions.iter().filter(|c| CLAIMED.contains(&c.tag.as_str())) {
        out.flag(!c.failed(), || format!("{regime}: {} fails with gap {:e}", c.tag, c.gap));
    }
    let prep = run_battery(&phi, &prho, &psigma, &pk, &cfg)?;
    out.flag(prep.anomalies.is_empty(), || format!("{regime} perturbed: anomalies {:?}", prep.anomalies));
    let min_gap = CORE_CLASS.iter().filter_map(|t| prep.get(t)).map(|c| c.gap).fold(f64::INFINITY, f64::min);
    out.check(min_gap - 1e-6, || format!("{regime} perturbed: smallest core gap {min_gap:e}"));
    out.flag(prep.all_fail(&CORE_CLASS), || format!("{regime} perturbed: core class does not fail together"));
    Ok(out)
}

/// Rank-deficient pair; in half the draws the support of `ρ` lies in that of `σ`.
fn rank_deficient_pair(rng: &mut QRng, d: usize) -> Result<(PositiveOperator, PositiveOperator)> {
    let u = random::unitary(rng, d);
    let s_rank = 1 + random::index(rng, d - 1);
    let inside = random::index(rng, 2) == 0;
    let mut s = vec![0.0; d];
    for v in s.iter_mut().take(s_rank) {
        *v = random::uniform(rng, 0.1, 1.0);
    }
    let sigma = PositiveOperator::from_computed(&u * diag(&s) * u.adjoint())?;
    let rho = if inside {
        let w = sigma.support_isometry();
        let r_rank = 1 + random::index(rng, s_rank);
        let inner = random::positive(rng, s_rank, r_rank);
        PositiveOperator::from_computed(&w * inner.matrix() * w.adjoint())?
    } else {
        let r_rank = 1 + random::index(rng, d - 1);
        random::positive(rng, d, r_rank)
    };
    Ok((rho, sigma))
}

fn oracle_instance(rng: &mut QRng, config: &SweepConfig) -> Result<Outcome> {
    let d = 2 + random::index(rng, config.dim.min(4) - 1);
    let (rho, sigma) = rank_deficient_pair(rng, d)?;
    let k = random::ginibre(rng, d, d);
    let (oms, ocs) = function_classes(rng);
    let grid = default_epsilon_grid();
    let off = qlab_core::linalg::complement(&sigma.support_projection());
    let weight = qlab_core::linalg::hs_inner(&(&k * &off), &(rho.matrix() * &k))?.re;
    let mut out = Outcome::new();
    for h in oms.iter().chain(&ocs) {
        let exact = quasi_entropy(h, &rho, &sigma, &k)?;
        let oracle = regularized_oracle(h, &rho, &sigma, &k, &grid)?;
        let expect_inf = h.f_prime_inf().is_infinite() && weight > 1e-12 * (1.0 + k.norm_squared());
        let v = exact.value;
        let name = h.spec().to_string();
        let inf_ok = v.is_infinite() == expect_inf && oracle.is_infinite() == expect_inf;
        if !inf_ok {
            out.count("oracle_violations");
        }
        out.flag(inf_ok, || {
            format!("{name}: spectral {v:e}, oracle {oracle:e}, expected infinite {expect_inf}")
        });
        if v.is_finite() && oracle.is_finite() {
            out.count("finite");
            let err = (v - oracle).abs();
            if err > 1e-5 * (1.0 + v.abs()) {
                out.count("oracle_violations");
            }
            out.check(1e-5 * (1.0 + v.abs()) - err, || format!("{name}: |spectral - oracle| = {err:e}"));
        } else {
            out.count("infinite");
        }
        if let Some(fc) = exact.fc_term {
            let total = fc + exact.boundary_term;
            let ok = if v.is_infinite() || total.is_infinite() { v == total } else { (v - total).abs() <= 1e-9 * (1.0 + v.abs()) };
            if !(ok && exact.decomposition_valid) {
                out.count("decomposition_violations");
            }
            out.flag(ok && exact.decomposition_valid, || format!("{name}: decomposition {v:e} vs {total:e}"));
        }
    }
    Ok(out)
}

fn hermitian_traceless(rng: &mut QRng, d: usize) -> ComplexMatrix {
    let h = random::hermitian(rng, d);
    let t = qlab_core::linalg::trace(&h) / qlab_core::linalg::c(d as f64, 0.0);
    &h - identity(d) * t
}

fn metric_instance(rng: &mut QRng, config: &SweepConfig) -> Result<Outcome> {
    let d = config.dim.min(4);
    let rho = random::faithful(rng, d);
    let sigma = random::faithful(rng, d);
    let x = random::ginibre(rng, d, d);
    let ri = PositiveOperator::from_computed(rho.power(-1.0))?;
    let si = PositiveOperator::from_computed(sigma.power(-1.0))?;
    let t = random::uniform(rng, 0.1, 5.0);
    let catalog = [
        f("power", &[0.25]),
        f("power", &[0.5]),
        f("power", &[0.75]),
        f("kubo_mori", &[]),
        f("phi_t", &[t]),
        f("affine", &[1.0, 2.0]),
        f("harmonic", &[]),
    ];
    let mut out = Outcome::new();
    for h in &catalog {
        let g = monotone_metric(h, &rho, &sigma, &x, &x)?.re;
        let q = quasi_entropy(&h.adjoint_star()?, &ri, &si, &x)?.value;
        let rel = (g - q).abs() / g.abs().max(f64::MIN_POSITIVE);
        out.check(1e-9 - rel, || format!("{}: relative error {rel:e}", h.spec()));
    }
    let s = random::faithful(rng, d.min(3));
    let dd = s.dim();
    let s = PositiveOperator::from_computed(s.matrix().scale(1.0 / s.trace()))?;
    let a = hermitian_traceless(rng, dd);
    let b = hermitian_traceless(rng, dd);
    let rep = kubo_mori_hessian_check(&s, &a, &b, None)?;
    out.check(1e-4 * (1.0 + rep.metric.abs()) - rep.abs_error, || format!("hessian error {:e}", rep.abs_error));
    Ok(out)
}

fn structure_instance(rng: &mut QRng, i: usize, seed: u64) -> Result<Outcome> {
    let mut out = Outcome::new();
    let d1 = 1 + random::index(rng, 3);
    let d2 = 1 + random::index(rng, 3);
    let n = d1 + random::index(rng, 2);
    let v = random::isometry(rng, n, d1);
    let phi = embed_partial_trace(&v, (d1, d2))?;
    match factorize_embed_partial_trace(&phi) {
        Ok(cert) => {
            out.flag(cert.split_dims == (d1, d2), || format!("embed split {:?} != {:?}", cert.split_dims, (d1, d2)));
            out.check(1e-8 - cert.residual, || format!("embed residual {:e}", cert.residual));
        }
        Err(e) => out.flag(false, || format!("embed factorization: {e}")),
    }
    out.flag(embed_shortcut(&phi, 1e-8)?.holds, || "shortcut misses an embed construction".into());

    let e1 = 1 + random::index(rng, 3);
    let e2 = 1 + random::index(rng, 3);
    let extra = random::index(rng, 2);
    let u = random::unitary(rng, e1);
    let eta = random::faithful_density(rng, e2);
    let w = random::isometry(rng, e1 * e2 + extra, e1 * e2);
    let tphi = tensor_embed(&u, &eta, Some(&w))?;
    let probe = random::faithful(rng, e1);
    match detect_tensor_embed(&tphi, &probe) {
        Ok(cert) => {
            out.flag(cert.split_dims == (e1, e2), || format!("tensor split {:?} != {:?}", cert.split_dims, (e1, e2)));
            out.check(1e-8 - cert.residual, || format!("tensor residual {:e}", cert.residual));
            let want = PositiveOperator::new(eta.clone())?;
            let got = cert.eta.as_ref().map(|e| e.eigenvalues().to_vec()).unwrap_or_default();
            let err = want
                .eigenvalues()
                .iter()
                .zip(&got)
                .map(|(a, b)| (a - b).abs())
                .fold(if got.len() == e2 { 0.0 } else { f64::INFINITY }, f64::max);
            out.check(1e-9 - err, || format!("eta error {err:e}"));
        }
        Err(e) => out.flag(false, || format!("tensor detection: {e}")),
    }

    let pinch = diagonal_pinching(2 + i % 2);
    let rep = detect_full_multiplicative_domain(&pinch)?;
    out.flag(!rep.full, || "pinching reported with full domain".into());
    out.flag(
        matches!(factorize_embed_partial_trace(&pinch), Err(Error::NotFullMultiplicativeDomain)),
        || "pinching factorized".into(),
    );
    out.flag(!embed_shortcut(&pinch, 1e-8)?.holds, || "shortcut accepts a pinching".into());

    let generic = random_tpcp(2, 2, Some(2), seed)?;
    let full = detect_full_multiplicative_domain(&generic)?.full;
    out.flag(embed_shortcut(&generic, 1e-8)?.holds == full, || "shortcut disagrees on a random channel".into());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in [
            SweepKind::Dpi,
            SweepKind::Superop,
            SweepKind::Convexity,
            SweepKind::Battery,
            SweepKind::Oracle,
            SweepKind::Metric,
            SweepKind::Structure,
        ] {
            assert_eq!(SweepKind::parse(k.name()).unwrap(), k);
        }
        assert!(SweepKind::parse("bogus").is_err());
    }

    #[test]
    fn dimension_bounds() {
        assert!(run_sweep(&SweepConfig::new(SweepKind::Dpi, 2, 1, 0)).is_err());
        assert!(run_sweep(&SweepConfig::new(SweepKind::Dpi, 2, 7, 0)).is_err());
    }

    #[test]
    fn csv_layout_and_seed_sensitivity() {
        let a = run_sweep(&SweepConfig::new(SweepKind::Convexity, 5, 2, 1)).unwrap();
        let b = run_sweep(&SweepConfig::new(SweepKind::Convexity, 5, 2, 2)).unwrap();
        let csv = a.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# qlab-report v1");
        assert_eq!(lines[2], "index,seed,checks,violations,min_margin,note");
        assert_eq!(lines.len(), 3 + 5 + 1);
        assert_ne!(csv, b.to_csv());
        assert_eq!(a.rows.iter().map(|r| r.index).collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }
}
