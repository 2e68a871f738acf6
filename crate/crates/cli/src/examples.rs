//! Worked scenarios with documented verdict patterns.

use serde_json::{json, Value};

use qlab_core::equality::scenarios::{
    calibrated_counterexample, e1_reduces, entangled_partial_trace, is_scalar_on_support, pinched_pure_state, pinched_qubit,
    pinched_qubit_vii_predicate, pinched_qubit_vii_sides, pinched_qubit_xi_predicate, qubit_operator_set, Scenario,
};
use qlab_core::equality::BatteryConfig;
use qlab_core::error::{Error, Result};
use qlab_core::linalg::{c, diag, matrix_unit, C64};

use crate::input::instance_to_value;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Example {
    /// Partial trace of a maximally entangled state.
    Entangled,
    /// Diagonal pinching of a pure basis state.
    PureState,
    /// Pinching of a qubit state against the identity.
    Qubit,
    /// Calibrated composite where only the `β`-condition holds.
    Composite,
}

impl Example {
    pub const ALL: [Example; 4] = [Example::Entangled, Example::PureState, Example::Qubit, Example::Composite];

    pub fn name(&self) -> &'static str {
        match self {
            Example::Entangled => "entangled",
            Example::PureState => "pure-state",
            Example::Qubit => "qubit",
            Example::Composite => "composite",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Example::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

struct Assertions(Vec<(String, bool)>);

impl Assertions {
    fn push(&mut self, name: impl Into<String>, holds: bool) {
        self.0.push((name.into(), holds));
    }

    fn finish(self, mut body: Value) -> Result<Value> {
        let failed: Vec<&str> = self.0.iter().filter(|(_, h)| !h).map(|(n, _)| n.as_str()).collect();
        if !failed.is_empty() {
            return Err(Error::ScenarioMismatch(failed.join(", ")));
        }
        body["assertions"] = self.0.iter().map(|(n, h)| json!({ "name": n, "holds": h })).collect();
        Ok(body)
    }
}

/// The instance a scenario is built around, as a battery input.
pub fn fixture(which: Example, seed: u64) -> Result<Value> {
    let s = base_scenario(which, seed)?;
    Ok(instance_to_value(which.name(), &s.phi, &s.rho, &s.sigma, &s.k))
}

fn base_scenario(which: Example, seed: u64) -> Result<Scenario> {
    match which {
        Example::Entangled => entangled_partial_trace(2, diag(&[1.0, -1.0])),
        Example::PureState => pinched_pure_state(3, matrix_unit(3, 3, 0, 1)),
        Example::Qubit => pinched_qubit(1.0, 1.0, c(0.5, 0.0), matrix_unit(2, 2, 0, 0)),
        Example::Composite => Ok(calibrated_counterexample(seed, 1.5)?.scenario),
    }
}

pub fn run_example(which: Example, seed: u64, config: &BatteryConfig) -> Result<Value> {
    match which {
        Example::Entangled => entangled(config),
        Example::PureState => pure_state(config),
        Example::Qubit => qubit(config),
        Example::Composite => composite(seed, config),
    }
}

fn entangled(config: &BatteryConfig) -> Result<Value> {
    let mut a = Assertions(vec![]);
    let mut cases = Vec::new();
    for (i, k) in qubit_operator_set().into_iter().enumerate() {
        let s = entangled_partial_trace(2, k.clone())?;
        let rep = s.battery(config)?;
        let st = s.phi.apply_positive(&s.sigma)?;
        let scalar = is_scalar_on_support(&st, &k, 1e-9);
        let vii = rep.get("vii").expect("battery runs (vii)");
        a.push(format!("K[{i}]: (vii) holds iff scalar on the output support"), vii.passed() == scalar);
        cases.push(json!({ "index": i, "scalar": scalar, "vii_gap": vii.gap, "vii_pass": vii.passed() }));
    }
    let gap = |idx: usize| cases[idx]["vii_gap"].as_f64().unwrap_or(f64::NAN);
    a.push("diag(1,-1) has gap 1", (gap(4) - 1.0).abs() <= 1e-10);
    a.push("scalar K has gap 0", gap(1).abs() <= 1e-10);
    a.finish(json!({ "example": "entangled", "cases": cases }))
}

fn pure_state(config: &BatteryConfig) -> Result<Value> {
    let mut a = Assertions(vec![]);
    let middle = ["ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"];
    let mut cases = Vec::new();
    for (label, k) in [("E12", matrix_unit(3, 3, 0, 1)), ("E11", matrix_unit(3, 3, 0, 0))] {
        let rep = pinched_pure_state(3, k.clone())?.battery(config)?;
        let reduces = e1_reduces(&k, 1e-12);
        a.push(format!("{label}: (ii)-(ix) pass"), rep.all_pass(&middle));
        a.push(format!("{label}: (i) holds iff e1 spans a reducing subspace"), rep.passed("i") == reduces);
        cases.push(json!({ "K": label, "i_pass": rep.passed("i"), "reducing": reduces }));
    }
    a.push("E12: (i) fails", cases[0]["i_pass"] == json!(false));
    a.finish(json!({ "example": "pure-state", "cases": cases }))
}

fn qubit(config: &BatteryConfig) -> Result<Value> {
    let mut a = Assertions(vec![]);
    let e = |i, j| matrix_unit(2, 2, i, j);
    let s = pinched_qubit(1.0, 1.0, c(0.5, 0.0), e(0, 0))?;
    let rep = s.battery(config)?;
    let vii = rep.get("vii").expect("battery runs (vii)");
    let expected = 5f64.sqrt() / 2.0 - 1.0;
    a.push("(vii) gap equals sqrt(5)/2 - 1", (vii.gap - expected).abs() <= 1e-10);
    a.push("(xi) passes", rep.passed("xi"));
    let ks = [("E11", e(0, 0)), ("diag(1,2)", diag(&[1.0, 2.0])), ("E12", e(0, 1)), ("E11+E12", e(0, 0) + e(0, 1))];
    let mut cases = Vec::new();
    for cc in [c(0.0, 0.0), c(0.5, 0.0), c(0.2, 0.3)] {
        for (label, k) in &ks {
            let rep = pinched_qubit(1.0, 1.2, cc, k.clone())?.battery(config)?;
            let (l, r) = pinched_qubit_vii_sides(1.0, 1.2, cc, k);
            let pv = pinched_qubit_vii_predicate(cc, k, 1e-12);
            let px = pinched_qubit_xi_predicate(cc, k, 1e-12);
            let tag = format!("c={}, K={label}", fmt_c(cc));
            a.push(format!("{tag}: (vii) closed form"), rep.passed("vii") == pv);
            a.push(format!("{tag}: (xi) closed form"), rep.passed("xi") == px);
            a.push(format!("{tag}: (vii) sides"), (rep.get("vii").map_or(f64::NAN, |c| c.gap) - (l - r).abs()).abs() <= 1e-9);
            cases.push(json!({ "c": fmt_c(cc), "K": label, "vii_pass": pv, "xi_pass": px }));
        }
    }
    a.finish(json!({ "example": "qubit", "vii_gap": vii.gap, "expected_gap": expected, "cases": cases }))
}

fn fmt_c(z: C64) -> String {
    format!("{}{:+}i", z.re, z.im)
}

fn composite(seed: u64, config: &BatteryConfig) -> Result<Value> {
    let mut a = Assertions(vec![]);
    let b = calibrated_counterexample(seed, config.beta)?;
    let checks = b.checks();
    a.push("calibration residual <= 1e-8", checks.calibrated);
    a.push("(vii) gap > 1e-3", checks.vii_fails);
    a.push("K in the multiplicative domain", checks.k_in_md);
    a.push("supports equal", checks.supports_equal);
    a.push("boundary term nonzero", checks.boundary_nonzero);
    let rep = b.scenario.battery(config)?;
    a.push("battery: (vii') passes", rep.passed("vii'"));
    a.push("battery: (vii) fails", rep.get("vii").is_some_and(|c| c.failed()));
    a.finish(json!({
        "example": "composite",
        "seed": b.seed,
        "beta": b.beta,
        "lambda": b.lambda,
        "calibration_residual": b.calibration_residual,
        "vii_gap": b.vii_gap,
        "md_distance": b.md_distance,
        "support_distance": b.support_distance,
        "boundary_norm": b.boundary_norm,
    }))
}
