//! Scalar functions with operator-class metadata.
//!
//! Every [`SpectralFunction`] carries its boundary data `f(0⁺)` and
//! `f′(∞) = lim f(x)/x` as extended reals (`f64` infinities are in-band),
//! caller-asserted class tags, and, for catalog members, an integral
//! representation:
//!
//! * operator monotone: `h(x) = h(0) + h′(∞)x + ∫ x(1+t)/(x+t) dμ(t)`
//! * operator convex: `f(x) = f(0) + ax + bx² + ∫ (x/(1+t) − x/(x+t)) dν(t)`
//! * operator monotone decreasing: `k(x) = a + b/x + ∫ (1+t)/(x+t) dλ(t)`

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, PositiveOperator};
use crate::quadrature::{integrate_half_line, QuadConfig};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassTags {
    pub operator_monotone: bool,
    pub operator_monotone_decreasing: bool,
    pub operator_convex: bool,
    pub operator_concave: bool,
    pub positive: bool,
}

impl ClassTags {
    pub fn om(positive: bool) -> Self {
        ClassTags { operator_monotone: true, operator_concave: true, positive, ..Default::default() }
    }

    pub fn oc(positive: bool) -> Self {
        ClassTags { operator_convex: true, positive, ..Default::default() }
    }

    pub fn omd() -> Self {
        ClassTags { operator_monotone_decreasing: true, operator_convex: true, positive: true, ..Default::default() }
    }

    pub fn is_convex(&self) -> bool {
        self.operator_convex || self.operator_monotone_decreasing
    }

    pub fn is_concave(&self) -> bool {
        self.operator_concave || self.operator_monotone
    }

    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.operator_monotone {
            v.push("operator-monotone");
        }
        if self.operator_monotone_decreasing {
            v.push("operator-monotone-decreasing");
        }
        if self.operator_convex {
            v.push("operator-convex");
        }
        if self.operator_concave {
            v.push("operator-concave");
        }
        if self.positive {
            v.push("positive");
        }
        v
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeasureKind {
    OperatorMonotone,
    OperatorConvex,
    OperatorMonotoneDecreasing,
}

/// Density of an absolutely continuous measure on `(0, ∞)`.
#[derive(Clone)]
pub struct Density(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl Density {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Density(Arc::new(f))
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Density(..)")
    }
}

/// Size of the support of a representing measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportSize {
    Finite(usize),
    Continuum,
}

impl SupportSize {
    pub fn at_least(&self, n: usize) -> bool {
        match self {
            SupportSize::Continuum => true,
            SupportSize::Finite(k) => *k >= n,
        }
    }
}

/// Integral representation. Affine coefficients by kind:
/// OM uses `constant + linear·x`; OC uses `constant + linear·x + quadratic·x²`;
/// OMD uses `constant + inverse/x`.
#[derive(Debug, Clone)]
pub struct RepresentingMeasure {
    pub kind: MeasureKind,
    pub density: Option<Density>,
    pub point_masses: Vec<(f64, f64)>,
    pub constant: f64,
    pub linear: f64,
    pub quadratic: f64,
    pub inverse: f64,
}

impl RepresentingMeasure {
    fn empty(kind: MeasureKind) -> Self {
        RepresentingMeasure {
            kind,
            density: None,
            point_masses: vec![],
            constant: 0.0,
            linear: 0.0,
            quadratic: 0.0,
            inverse: 0.0,
        }
    }

    fn with_density(kind: MeasureKind, d: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let mut m = Self::empty(kind);
        m.density = Some(Density::new(d));
        m
    }

    fn with_point(kind: MeasureKind, t: f64, w: f64) -> Self {
        let mut m = Self::empty(kind);
        m.point_masses.push((t, w));
        m
    }

    pub fn support_size(&self) -> SupportSize {
        if self.density.is_some() {
            SupportSize::Continuum
        } else {
            SupportSize::Finite(self.point_masses.iter().filter(|(_, w)| *w > 0.0).count())
        }
    }

    pub fn kernel(&self, x: f64, t: f64) -> f64 {
        match self.kind {
            MeasureKind::OperatorMonotone => x * (1.0 + t) / (x + t),
            MeasureKind::OperatorConvex => x * (x - 1.0) / ((1.0 + t) * (x + t)),
            MeasureKind::OperatorMonotoneDecreasing => (1.0 + t) / (x + t),
        }
    }

    fn affine_part(&self, x: f64) -> f64 {
        match self.kind {
            MeasureKind::OperatorMonotone => self.constant + self.linear * x,
            MeasureKind::OperatorConvex => self.constant + self.linear * x + self.quadratic * x * x,
            MeasureKind::OperatorMonotoneDecreasing => self.constant + self.inverse / x,
        }
    }

    /// Reconstructs the represented function at `x`.
    pub fn reconstruct(&self, x: f64, quad: &QuadConfig) -> Result<f64> {
        let mut v = self.affine_part(x);
        for &(t, w) in &self.point_masses {
            v += w * self.kernel(x, t);
        }
        if let Some(d) = &self.density {
            v += integrate_half_line(&|t| self.kernel(x, t) * d.eval(t), quad)?;
        }
        Ok(v)
    }

    /// `∫ g dμ` for a caller-supplied integrand, including point masses.
    pub fn integrate(&self, g: &dyn Fn(f64) -> f64, quad: &QuadConfig) -> Result<f64> {
        let mut v: f64 = self.point_masses.iter().map(|&(t, w)| w * g(t)).sum();
        if let Some(d) = &self.density {
            v += integrate_half_line(&|t| g(t) * d.eval(t), quad)?;
        }
        Ok(v)
    }

    pub fn total_mass(&self, quad: &QuadConfig) -> Result<f64> {
        self.integrate(&|_| 1.0, quad)
    }

    fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        if let Some(d) = self.density.clone() {
            m.density = Some(Density::new(move |t| s * d.eval(t)));
        }
        for p in m.point_masses.iter_mut() {
            p.1 *= s;
        }
        m.constant *= s;
        m.linear *= s;
        m.quadratic *= s;
        m.inverse *= s;
        m
    }
}

#[derive(Clone)]
enum Kind {
    Power(f64),
    XLogX,
    Phi(f64),
    Psi(f64),
    KuboMori,
    KAlpha(f64),
    Constant(f64),
    Affine(f64, f64),
    Scaled(f64, Box<SpectralFunction>),
    Adjoint(Box<SpectralFunction>),
    Reciprocal(Box<SpectralFunction>),
    Symmetrized(Box<SpectralFunction>),
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// A real function on `(0, ∞)` with the metadata needed by the spectral
/// formulas. Cheap to clone.
#[derive(Clone)]
pub struct SpectralFunction {
    name: String,
    params: Vec<f64>,
    kind: Kind,
    f_zero_plus: f64,
    f_prime_inf: f64,
    at_infinity: f64,
    slope_at_zero: f64,
    tags: ClassTags,
    measure: Option<RepresentingMeasure>,
}

impl fmt::Debug for SpectralFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralFunction")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("f_zero_plus", &self.f_zero_plus)
            .field("f_prime_inf", &self.f_prime_inf)
            .field("tags", &self.tags)
            .finish()
    }
}

/// JSON form `{"name": ..., "params": [...]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunctionSpec {
    pub name: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl FunctionSpec {
    pub fn new(name: &str, params: &[f64]) -> Self {
        FunctionSpec { name: name.to_string(), params: params.to_vec() }
    }

    pub fn build(&self) -> Result<SpectralFunction> {
        make_function(&self.name, &self.params)
    }

    /// Parses `name` or `name:p1,p2`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.starts_with('{') {
            return serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()));
        }
        let (name, rest) = match s.split_once(':') {
            Some((n, r)) => (n, Some(r)),
            None => (s, None),
        };
        let params = match rest {
            None => vec![],
            Some(r) => r
                .split(',')
                .map(|p| p.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{p}: {e}"))))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(FunctionSpec { name: name.to_string(), params })
    }
}

impl fmt::Display for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.params.is_empty() {
            write!(f, "{}", self.name)
        } else {
            let p: Vec<String> = self.params.iter().map(|p| format!("{p}")).collect();
            write!(f, "{}:{}", self.name, p.join(","))
        }
    }
}

fn inv_ext(x: f64) -> f64 {
    if x == 0.0 {
        f64::INFINITY
    } else if x.is_infinite() {
        0.0
    } else {
        1.0 / x
    }
}

fn kubo_mori(x: f64) -> f64 {
    let u = x - 1.0;
    if u == 0.0 {
        1.0
    } else {
        u / u.ln_1p()
    }
}

fn expect_params(name: &str, params: &[f64], n: usize) -> Result<()> {
    if params.len() != n {
        return Err(Error::ParamOutOfClassRange(format!("{name} expects {n} parameter(s), got {}", params.len())));
    }
    if params.iter().any(|p| !p.is_finite()) {
        return Err(Error::ParamOutOfClassRange(format!("{name}: non-finite parameter")));
    }
    Ok(())
}

/// Builds a catalog function. Names: `power`, `xlogx`, `phi_t`, `psi_t`,
/// `kubo_mori`, `kalpha`, `const`, `affine`, `harmonic` (`2x/(x+1)`).
pub fn make_function(name: &str, params: &[f64]) -> Result<SpectralFunction> {
    build(name, params, false)
}

/// Like [`make_function`] but out-of-range parameters yield a function with
/// empty class tags instead of an error.
pub fn make_function_unchecked(name: &str, params: &[f64]) -> Result<SpectralFunction> {
    build(name, params, true)
}

fn build(name: &str, params: &[f64], allow_out_of_range: bool) -> Result<SpectralFunction> {
    match name {
        "power" => {
            expect_params(name, params, 1)?;
            let a = params[0];
            let in_range = (-1.0..=2.0).contains(&a);
            if !in_range && !allow_out_of_range {
                return Err(Error::ParamOutOfClassRange(format!(
                    "power exponent {a} outside [-1,0] ∪ [0,1] ∪ [1,2]"
                )));
            }
            Ok(power(a, in_range))
        }
        "xlogx" => {
            expect_params(name, params, 0)?;
            Ok(SpectralFunction {
                name: name.into(),
                params: vec![],
                kind: Kind::XLogX,
                f_zero_plus: 0.0,
                f_prime_inf: f64::INFINITY,
                at_infinity: f64::INFINITY,
                slope_at_zero: f64::NEG_INFINITY,
                tags: ClassTags::oc(false),
                measure: Some(RepresentingMeasure::with_density(MeasureKind::OperatorConvex, |_| 1.0)),
            })
        }
        "phi_t" => {
            expect_params(name, params, 1)?;
            let t = params[0];
            if t <= 0.0 {
                return Err(Error::ParamOutOfClassRange(format!("phi_t requires t > 0, got {t}")));
            }
            Ok(SpectralFunction {
                name: name.into(),
                params: vec![t],
                kind: Kind::Phi(t),
                f_zero_plus: 0.0,
                f_prime_inf: 0.0,
                at_infinity: 1.0,
                slope_at_zero: 1.0 / t,
                tags: ClassTags::om(true),
                measure: Some(RepresentingMeasure::with_point(MeasureKind::OperatorMonotone, t, 1.0 / (1.0 + t))),
            })
        }
        "psi_t" => {
            expect_params(name, params, 1)?;
            let t = params[0];
            if t <= 0.0 {
                return Err(Error::ParamOutOfClassRange(format!("psi_t requires t > 0, got {t}")));
            }
            Ok(SpectralFunction {
                name: name.into(),
                params: vec![t],
                kind: Kind::Psi(t),
                f_zero_plus: 0.0,
                f_prime_inf: 1.0 / (1.0 + t),
                at_infinity: f64::INFINITY,
                slope_at_zero: 1.0 / (1.0 + t) - 1.0 / t,
                tags: ClassTags::oc(false),
                measure: Some(RepresentingMeasure::with_point(MeasureKind::OperatorConvex, t, 1.0)),
            })
        }
        "kubo_mori" => {
            expect_params(name, params, 0)?;
            Ok(SpectralFunction {
                name: name.into(),
                params: vec![],
                kind: Kind::KuboMori,
                f_zero_plus: 0.0,
                f_prime_inf: 0.0,
                at_infinity: f64::INFINITY,
                slope_at_zero: f64::INFINITY,
                tags: ClassTags::om(true),
                measure: Some(RepresentingMeasure::with_density(MeasureKind::OperatorMonotone, |t| {
                    let l = t.ln();
                    1.0 / (t * (l * l + PI * PI))
                })),
            })
        }
        "kalpha" => {
            expect_params(name, params, 1)?;
            let a = params[0];
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::ParamOutOfClassRange(format!("kalpha requires alpha in (0,1), got {a}")));
            }
            let s = (a * PI).sin() / (2.0 * PI);
            Ok(SpectralFunction {
                name: name.into(),
                params: vec![a],
                kind: Kind::KAlpha(a),
                f_zero_plus: f64::INFINITY,
                f_prime_inf: 0.0,
                at_infinity: 0.0,
                slope_at_zero: f64::INFINITY,
                tags: ClassTags::omd(),
                measure: Some(RepresentingMeasure::with_density(MeasureKind::OperatorMonotoneDecreasing, move |t| {
                    s * (t.powf(-a) + t.powf(a - 1.0)) / (1.0 + t)
                })),
            })
        }
        "const" => {
            expect_params(name, params, 1)?;
            Ok(constant(params[0]))
        }
        "affine" => {
            expect_params(name, params, 2)?;
            Ok(affine(params[0], params[1]))
        }
        "harmonic" => {
            expect_params(name, params, 0)?;
            let mut h = make_function("phi_t", &[1.0])?.scaled(2.0)?;
            h.name = "harmonic".into();
            h.params = vec![];
            Ok(h)
        }
        _ => Err(Error::UnknownName(name.to_string())),
    }
}

fn power(a: f64, tagged: bool) -> SpectralFunction {
    let f_zero_plus = if a > 0.0 {
        0.0
    } else if a == 0.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let f_prime_inf = if a < 1.0 {
        0.0
    } else if a == 1.0 {
        1.0
    } else {
        f64::INFINITY
    };
    let at_infinity = if a > 0.0 {
        f64::INFINITY
    } else if a == 0.0 {
        1.0
    } else {
        0.0
    };
    let slope_at_zero = if a < 1.0 {
        f64::INFINITY
    } else if a == 1.0 {
        1.0
    } else {
        0.0
    };
    let mut tags = ClassTags::default();
    let mut measure = None;
    if tagged {
        if (0.0..=1.0).contains(&a) {
            tags = ClassTags::om(true);
            if a == 1.0 {
                tags.operator_convex = true;
            }
            measure = Some(if a == 0.0 {
                let mut m = RepresentingMeasure::empty(MeasureKind::OperatorMonotone);
                m.constant = 1.0;
                m
            } else if a == 1.0 {
                let mut m = RepresentingMeasure::empty(MeasureKind::OperatorMonotone);
                m.linear = 1.0;
                m
            } else {
                let s = (a * PI).sin() / PI;
                RepresentingMeasure::with_density(MeasureKind::OperatorMonotone, move |t| {
                    s * t.powf(a - 1.0) / (1.0 + t)
                })
            });
        }
        if (1.0..=2.0).contains(&a) && a > 1.0 {
            tags = ClassTags::oc(true);
            measure = Some(if a == 2.0 {
                let mut m = RepresentingMeasure::empty(MeasureKind::OperatorConvex);
                m.quadratic = 1.0;
                m
            } else {
                let s = ((a - 1.0) * PI).sin() / PI;
                let mut m =
                    RepresentingMeasure::with_density(MeasureKind::OperatorConvex, move |t| s * t.powf(a - 1.0));
                m.linear = 1.0;
                m
            });
        }
        if (-1.0..0.0).contains(&a) {
            tags = ClassTags::omd();
            measure = Some(if a == -1.0 {
                let mut m = RepresentingMeasure::empty(MeasureKind::OperatorMonotoneDecreasing);
                m.inverse = 1.0;
                m
            } else {
                let g = -a;
                let s = (g * PI).sin() / PI;
                RepresentingMeasure::with_density(MeasureKind::OperatorMonotoneDecreasing, move |t| {
                    s * t.powf(-g) / (1.0 + t)
                })
            });
        }
    }
    SpectralFunction {
        name: "power".into(),
        params: vec![a],
        kind: Kind::Power(a),
        f_zero_plus,
        f_prime_inf,
        at_infinity,
        slope_at_zero,
        tags,
        measure,
    }
}

fn constant(c: f64) -> SpectralFunction {
    let mut m = RepresentingMeasure::empty(MeasureKind::OperatorMonotone);
    m.constant = c;
    let mut tags = ClassTags::om(c > 0.0);
    tags.operator_convex = true;
    SpectralFunction {
        name: "const".into(),
        params: vec![c],
        kind: Kind::Constant(c),
        f_zero_plus: c,
        f_prime_inf: 0.0,
        at_infinity: c,
        slope_at_zero: if c > 0.0 {
            f64::INFINITY
        } else if c < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        },
        tags,
        measure: Some(m),
    }
}

fn affine(c0: f64, c1: f64) -> SpectralFunction {
    let kind = if c1 >= 0.0 { MeasureKind::OperatorMonotone } else { MeasureKind::OperatorConvex };
    let mut m = RepresentingMeasure::empty(kind);
    m.constant = c0;
    m.linear = c1;
    let tags = ClassTags {
        operator_monotone: c1 >= 0.0,
        operator_convex: true,
        operator_concave: true,
        positive: c0 >= 0.0 && c1 >= 0.0 && (c0 > 0.0 || c1 > 0.0),
        ..Default::default()
    };
    SpectralFunction {
        name: "affine".into(),
        params: vec![c0, c1],
        kind: Kind::Affine(c0, c1),
        f_zero_plus: c0,
        f_prime_inf: c1,
        at_infinity: if c1 > 0.0 {
            f64::INFINITY
        } else if c1 < 0.0 {
            f64::NEG_INFINITY
        } else {
            c0
        },
        slope_at_zero: if c0 > 0.0 {
            f64::INFINITY
        } else if c0 < 0.0 {
            f64::NEG_INFINITY
        } else {
            c1
        },
        tags,
        measure: Some(m),
    }
}

impl SpectralFunction {
    /// A caller-described function. Tags and boundary data are trusted.
    pub fn custom(
        name: &str,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_zero_plus: f64,
        f_prime_inf: f64,
        tags: ClassTags,
    ) -> Self {
        SpectralFunction {
            name: name.to_string(),
            params: vec![],
            kind: Kind::Custom(Arc::new(f)),
            f_zero_plus,
            f_prime_inf,
            at_infinity: f64::NAN,
            slope_at_zero: f64::NAN,
            tags,
            measure: None,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn spec(&self) -> FunctionSpec {
        FunctionSpec { name: self.name.clone(), params: self.params.clone() }
    }

    pub fn f_zero_plus(&self) -> f64 {
        self.f_zero_plus
    }

    pub fn f_prime_inf(&self) -> f64 {
        self.f_prime_inf
    }

    pub fn tags(&self) -> ClassTags {
        self.tags
    }

    pub fn measure(&self) -> Option<&RepresentingMeasure> {
        self.measure.as_ref()
    }

    /// Value at `x > 0`.
    pub fn eval(&self, x: f64) -> f64 {
        match &self.kind {
            Kind::Power(a) => x.powf(*a),
            Kind::XLogX => x * x.ln(),
            Kind::Phi(t) => x / (x + t),
            Kind::Psi(t) => x * (x - 1.0) / ((1.0 + t) * (x + t)),
            Kind::KuboMori => kubo_mori(x),
            Kind::KAlpha(a) => 0.5 * (x.powf(-a) + x.powf(a - 1.0)),
            Kind::Constant(c) => *c,
            Kind::Affine(c0, c1) => c0 + c1 * x,
            Kind::Scaled(s, f) => s * f.eval(x),
            Kind::Adjoint(h) => 1.0 / h.eval(1.0 / x),
            Kind::Reciprocal(h) => 1.0 / h.eval(x),
            Kind::Symmetrized(k) => 0.5 * (k.eval(x) + k.eval(1.0 / x) / x),
            Kind::Custom(f) => f(x),
        }
    }

    /// Value on `[0, ∞)`: `f(0)` is read as `f(0⁺)`.
    pub fn eval0(&self, x: f64) -> f64 {
        if x == 0.0 {
            self.f_zero_plus
        } else {
            self.eval(x)
        }
    }

    /// Positive multiple `s·f`.
    pub fn scaled(&self, s: f64) -> Result<SpectralFunction> {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::ParamOutOfClassRange(format!("scale factor must be positive, got {s}")));
        }
        Ok(SpectralFunction {
            name: format!("{}*{}", s, self.name),
            params: self.params.clone(),
            kind: Kind::Scaled(s, Box::new(self.clone())),
            f_zero_plus: s * self.f_zero_plus,
            f_prime_inf: s * self.f_prime_inf,
            at_infinity: s * self.at_infinity,
            slope_at_zero: s * self.slope_at_zero,
            tags: self.tags,
            measure: self.measure.as_ref().map(|m| m.scaled(s)),
        })
    }

    fn check_positive(&self) -> Result<()> {
        let positive_tag = self.tags.positive;
        let sampled = (-8..=8).all(|k| self.eval(10f64.powi(k)) > 0.0);
        if positive_tag && sampled {
            Ok(())
        } else {
            Err(Error::NonPositiveFunction(self.name.clone()))
        }
    }

    /// `1/h`. Positive operator monotone `h` gives an operator monotone
    /// decreasing function; the representing measure is attached for the
    /// catalog members where it is known in closed form.
    pub fn reciprocal(&self) -> Result<SpectralFunction> {
        self.check_positive()?;
        let mut tags = ClassTags { positive: true, ..Default::default() };
        if self.tags.operator_monotone {
            tags.operator_monotone_decreasing = true;
            tags.operator_convex = true;
        }
        if self.tags.operator_monotone_decreasing {
            tags.operator_monotone = true;
            tags.operator_concave = true;
        }
        Ok(SpectralFunction {
            name: format!("1/{}", self.name),
            params: self.params.clone(),
            kind: Kind::Reciprocal(Box::new(self.clone())),
            f_zero_plus: inv_ext(self.f_zero_plus),
            f_prime_inf: 0.0,
            at_infinity: inv_ext(self.at_infinity),
            slope_at_zero: f64::INFINITY,
            tags,
            measure: self.reciprocal_measure(),
        })
    }

    fn reciprocal_measure(&self) -> Option<RepresentingMeasure> {
        use MeasureKind::OperatorMonotoneDecreasing as Omd;
        match &self.kind {
            Kind::Power(a) if *a == 0.0 => {
                let mut m = RepresentingMeasure::empty(Omd);
                m.constant = 1.0;
                Some(m)
            }
            Kind::Power(a) if *a == 1.0 => {
                let mut m = RepresentingMeasure::empty(Omd);
                m.inverse = 1.0;
                Some(m)
            }
            Kind::Power(a) if *a > 0.0 && *a < 1.0 => {
                let g = *a;
                let s = (g * PI).sin() / PI;
                Some(RepresentingMeasure::with_density(Omd, move |t| s * t.powf(-g) / (1.0 + t)))
            }
            Kind::Phi(t) => {
                let mut m = RepresentingMeasure::empty(Omd);
                m.constant = 1.0;
                m.inverse = *t;
                Some(m)
            }
            Kind::KuboMori => Some(RepresentingMeasure::with_density(Omd, |t| 1.0 / ((1.0 + t) * (1.0 + t)))),
            Kind::Constant(c) if *c > 0.0 => {
                let mut m = RepresentingMeasure::empty(Omd);
                m.constant = 1.0 / c;
                Some(m)
            }
            Kind::Affine(c0, c1) if *c0 >= 0.0 && *c1 >= 0.0 => {
                let mut m = RepresentingMeasure::empty(Omd);
                if *c1 == 0.0 {
                    m.constant = 1.0 / c0;
                } else if *c0 == 0.0 {
                    m.inverse = 1.0 / c1;
                } else {
                    m.point_masses.push((c0 / c1, 1.0 / (c0 + c1)));
                }
                Some(m)
            }
            Kind::Scaled(s, h) => h.reciprocal_measure().map(|m| m.scaled(1.0 / s)),
            _ => None,
        }
    }

    /// The adjoint `h*(x) = 1/h(1/x)`.
    pub fn adjoint_star(&self) -> Result<SpectralFunction> {
        self.check_positive()?;
        if let Kind::Adjoint(inner) = &self.kind {
            return Ok((**inner).clone());
        }
        let name = format!("{}*", self.name);
        let closed = match &self.kind {
            Kind::Power(a) if self.tags.operator_monotone => Some(power(*a, true)),
            Kind::Constant(c) => Some(constant(1.0 / c)),
            _ => None,
        };
        if let Some(mut f) = closed {
            f.kind = Kind::Adjoint(Box::new(self.clone()));
            f.name = name;
            return Ok(f);
        }
        // h*(0+) = 1/h(∞), h*'(∞) = 1/h'(0+), h*(∞) = 1/h(0+), slope of h* at 0 = 1/h'(∞).
        let measure = self.reciprocal_measure().map(|lam| {
            let mut m = RepresentingMeasure::empty(MeasureKind::OperatorMonotone);
            m.constant = lam.constant;
            m.linear = lam.inverse;
            m.point_masses = lam.point_masses.iter().map(|&(t, w)| (1.0 / t, w)).collect();
            if let Some(d) = lam.density {
                m.density = Some(Density::new(move |s| d.eval(1.0 / s) / (s * s)));
            }
            m
        });
        let tags = if self.tags.operator_monotone { ClassTags::om(true) } else { ClassTags { positive: true, ..Default::default() } };
        Ok(SpectralFunction {
            name,
            params: self.params.clone(),
            kind: Kind::Adjoint(Box::new(self.clone())),
            f_zero_plus: inv_ext(self.at_infinity),
            f_prime_inf: inv_ext(self.slope_at_zero),
            at_infinity: inv_ext(self.f_zero_plus),
            slope_at_zero: inv_ext(self.f_prime_inf),
            tags,
            measure,
        })
    }

    /// `k_sym(x) = (k(x) + x⁻¹k(x⁻¹))/2` for a positive decreasing `k`.
    pub fn symmetrized(&self) -> Result<SpectralFunction> {
        self.check_positive()?;
        let probe_inf = 1e12 * self.eval(1e12);
        let probe_zero = 1e-12 * self.eval(1e-12);
        let grow = |v: f64| if v > 1e5 { f64::INFINITY } else { v };
        let f_zero_plus = 0.5 * (self.f_zero_plus + grow(probe_inf));
        let at_infinity = 0.5 * (self.at_infinity + probe_zero);
        Ok(SpectralFunction {
            name: format!("sym({})", self.name),
            params: self.params.clone(),
            kind: Kind::Symmetrized(Box::new(self.clone())),
            f_zero_plus,
            f_prime_inf: 0.0,
            at_infinity,
            slope_at_zero: f64::INFINITY,
            tags: self.tags,
            measure: None,
        })
    }

    /// Rescales so that `f(1) = 1`.
    pub fn normalized(&self) -> Result<SpectralFunction> {
        let v = self.eval(1.0);
        if v > 0.0 {
            self.scaled(1.0 / v)
        } else {
            Err(Error::NonPositiveFunction(format!("{} has f(1) = {v}", self.name)))
        }
    }

    /// `f(A)` by functional calculus, with `f(0) := f(0⁺)`.
    pub fn apply(&self, a: &PositiveOperator) -> Result<ComplexMatrix> {
        if a.support_rank() < a.dim() && !self.f_zero_plus.is_finite() {
            return Err(Error::DomainError(format!("{}(0+) is infinite and 0 is in the spectrum", self.name)));
        }
        Ok(a.map(|l| self.eval0(l)))
    }
}

/// Functional calculus `U diag(f(λ)) U*`.
pub fn matrix_function(a: &PositiveOperator, f: &SpectralFunction) -> Result<ComplexMatrix> {
    f.apply(a)
}

/// `b·f(a/b)` with the boundary conventions: `f(0⁺)·b` at `a = 0`,
/// `f′(∞)·a` at `b = 0`, `0` at `a = b = 0`, and `(±∞)·0 = 0`.
pub fn boundary_weighted_eval(f: &SpectralFunction, a: f64, b: f64) -> f64 {
    fn times(v: f64, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            v * s
        }
    }
    if a == 0.0 && b == 0.0 {
        0.0
    } else if a == 0.0 {
        times(f.f_zero_plus, b)
    } else if b == 0.0 {
        times(f.f_prime_inf, a)
    } else {
        b * f.eval(a / b)
    }
}

/// Reconstructs `f(x)` from the attached representing measure.
pub fn representing_measure_eval(f: &SpectralFunction, x: f64, quad: &QuadConfig) -> Result<f64> {
    let m = f.measure.as_ref().ok_or_else(|| Error::NoMeasure(f.name.clone()))?;
    m.reconstruct(x, quad)
}
