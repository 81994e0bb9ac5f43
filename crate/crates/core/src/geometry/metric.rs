use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::jet::Jet;

/// The closed-form metric families.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricFamily {
    Flat,
    Melvin,
    AsymptoticallyMelvin,
    SchwarzschildMelvin,
    CompanionFlat,
    EtaPlus,
    EtaMinus,
}

/// Amplitudes of the built-in decaying perturbations
/// `vᵢ = aᵢ (1 + r²)^{-1/2} (1 + ½ sin²θ)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    #[serde(default)]
    pub a1: f64,
    #[serde(default)]
    pub a2: f64,
    #[serde(default)]
    pub a3: f64,
}

impl Perturbation {
    pub const ZERO: Perturbation = Perturbation {
        a1: 0.0,
        a2: 0.0,
        a3: 0.0,
    };

    pub fn new(a1: f64, a2: f64, a3: f64) -> Self {
        Perturbation { a1, a2, a3 }
    }

    pub fn is_zero(&self) -> bool {
        self.a1 == 0.0 && self.a2 == 0.0 && self.a3 == 0.0
    }

    fn amplitudes(&self) -> [f64; 3] {
        [self.a1, self.a2, self.a3]
    }

    /// Shape shared by all three perturbations.
    pub fn profile(r: Jet, theta: Jet) -> Jet {
        (1.0 + r * r).powf(-0.5) * (1.0 + 0.5 * theta.sin().powi(2))
    }

    /// `1 + vᵢ` for `i ∈ {1, 2, 3}`.
    pub fn one_plus(&self, i: usize, r: Jet, theta: Jet) -> Jet {
        let a = self.amplitudes()[i - 1];
        if a == 0.0 {
            Jet::constant(1.0)
        } else {
            1.0 + Perturbation::profile(r, theta) * a
        }
    }
}

/// `F = 1 + b r² sin²θ`.
pub fn melvin_factor(b: f64, r: Jet, theta: Jet) -> Jet {
    1.0 + (r * theta.sin()).powi(2) * b
}

/// A scalar profile of `(r, θ)` with exact first and second derivatives.
#[derive(Clone)]
pub struct ScalarField {
    name: String,
    f: Arc<dyn Fn(Jet, Jet) -> Jet + Send + Sync>,
}

impl ScalarField {
    pub fn new(name: impl Into<String>, f: impl Fn(Jet, Jet) -> Jet + Send + Sync + 'static) -> Self {
        ScalarField {
            name: name.into(),
            f: Arc::new(f),
        }
    }

    pub fn constant(c: f64) -> Self {
        ScalarField::new(format!("{c}"), move |_, _| Jet::constant(c))
    }

    /// The Melvin factor `F` for parameter `b`.
    pub fn melvin_factor(b: f64) -> Self {
        ScalarField::new(format!("F[b={b}]"), move |r, t| melvin_factor(b, r, t))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn jet(&self, r: f64, theta: f64) -> Jet {
        let (jr, jt) = Jet::coordinates(r, theta);
        (self.f)(jr, jt)
    }

    pub fn apply(&self, r: Jet, theta: Jet) -> Jet {
        (self.f)(r, theta)
    }

    pub fn eval(&self, r: f64, theta: f64) -> f64 {
        (self.f)(Jet::constant(r), Jet::constant(theta)).v
    }

    /// Pointwise product, e.g. the warped fiber `q·f`.
    pub fn product(&self, other: &ScalarField) -> ScalarField {
        let (a, b) = (self.f.clone(), other.f.clone());
        ScalarField::new(format!("({})*({})", self.name, other.name), move |r, t| {
            a(r, t) * b(r, t)
        })
    }

    pub fn powf(&self, p: f64) -> ScalarField {
        let a = self.f.clone();
        ScalarField::new(format!("({})^{p}", self.name), move |r, t| a(r, t).powf(p))
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("ScalarField").field(&self.name).finish()
    }
}

/// Names the metric whose orthonormal frame a spinor's components refer to.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameTag(pub String);

impl fmt::Display for FrameTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Parameters of a closed-form metric, as they appear in scenario files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MetricParams {
    pub family: MetricFamily,
    #[serde(default)]
    pub b: f64,
    #[serde(default, rename = "B")]
    pub field_strength: Option<f64>,
    #[serde(default, rename = "M")]
    pub mass: f64,
    #[serde(default)]
    pub perturbation: Perturbation,
}

impl MetricParams {
    pub fn build(&self) -> Result<MetricSpec> {
        make_metric(
            self.family,
            self.b,
            self.field_strength,
            self.mass,
            self.perturbation,
        )
    }
}

#[derive(Clone, Debug)]
enum Form {
    Closed(MetricParams),
    /// `factor² · base`.
    Conformal {
        base: Arc<MetricSpec>,
        factor: ScalarField,
    },
    /// Meridional part of `base` plus `fiber · dφ²`.
    Warped {
        base: Arc<MetricSpec>,
        fiber: ScalarField,
    },
}

/// A diagonal, φ-independent 3-metric `g_rr dr² + g_θθ dθ² + g_φφ dφ²`.
///
/// Components are evaluated as [`Jet`]s so every consumer sees exact first and second
/// coordinate derivatives. Immutable once built.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    form: Form,
    tag: FrameTag,
}

/// Builds a closed-form metric after validating the family/parameter combination.
///
/// For [`MetricFamily::Melvin`] the field strength `B` is converted with `b = B²/4`;
/// passing only `b` is also accepted.
pub fn make_metric(
    family: MetricFamily,
    b: f64,
    field_strength: Option<f64>,
    mass: f64,
    perturbation: Perturbation,
) -> Result<MetricSpec> {
    use MetricFamily::*;
    let bad = |msg: String| Err(Error::InvalidParameter(msg));

    for (name, v) in [
        ("b", b),
        ("M", mass),
        ("a1", perturbation.a1),
        ("a2", perturbation.a2),
        ("a3", perturbation.a3),
    ] {
        if !v.is_finite() {
            return bad(format!("{name} must be finite"));
        }
    }
    if b < 0.0 {
        return bad(format!("b = {b} must be nonnegative"));
    }
    if mass < 0.0 {
        return bad(format!("M = {mass} must be nonnegative"));
    }
    for a in perturbation.amplitudes() {
        if a.abs() >= 0.5 {
            return bad(format!("perturbation amplitude {a} must satisfy |a| < 1/2"));
        }
    }
    if field_strength.is_some() && family != Melvin {
        return bad(format!("B is only meaningful for the Melvin family, not {family:?}"));
    }
    if mass != 0.0 && !matches!(family, SchwarzschildMelvin | CompanionFlat | EtaPlus | EtaMinus) {
        return bad(format!("M is not a parameter of {family:?}"));
    }

    let mut b = b;
    let mut field = None;
    match family {
        Flat => {
            if b != 0.0 || !perturbation.is_zero() {
                return bad("the flat metric takes no b or perturbation".into());
            }
        }
        Melvin => {
            if !perturbation.is_zero() {
                return bad("Melvin's slice is exact; use AsymptoticallyMelvin for perturbations".into());
            }
            match field_strength {
                Some(bf) => {
                    if !bf.is_finite() || bf < 0.0 {
                        return bad(format!("B = {bf} must be finite and nonnegative"));
                    }
                    let from_field = 0.25 * bf * bf;
                    if b != 0.0 && (b - from_field).abs() > 1e-12 * from_field.max(1.0) {
                        return bad(format!("b = {b} disagrees with B²/4 = {from_field}"));
                    }
                    b = from_field;
                    field = Some(bf);
                }
                None => field = Some(2.0 * b.sqrt()),
            }
        }
        EtaPlus | EtaMinus => {
            if !perturbation.is_zero() {
                return bad("the η metrics are built on the unperturbed base".into());
            }
        }
        AsymptoticallyMelvin | SchwarzschildMelvin | CompanionFlat => {}
    }

    let params = MetricParams {
        family,
        b,
        field_strength: field,
        mass,
        perturbation,
    };
    Ok(MetricSpec::closed(params))
}

impl MetricSpec {
    fn closed(params: MetricParams) -> Self {
        let p = params.perturbation;
        let tag = format!(
            "{:?}(b={},M={},a=[{},{},{}])",
            params.family, params.b, params.mass, p.a1, p.a2, p.a3
        );
        MetricSpec {
            form: Form::Closed(params),
            tag: FrameTag(tag),
        }
    }

    pub fn flat() -> Self {
        make_metric(MetricFamily::Flat, 0.0, None, 0.0, Perturbation::ZERO).expect("flat is valid")
    }

    pub fn melvin(field_strength: f64) -> Result<Self> {
        make_metric(MetricFamily::Melvin, 0.0, Some(field_strength), 0.0, Perturbation::ZERO)
    }

    pub fn asymptotically_melvin(b: f64, perturbation: Perturbation) -> Result<Self> {
        make_metric(MetricFamily::AsymptoticallyMelvin, b, None, 0.0, perturbation)
    }

    pub fn schwarzschild_melvin(b: f64, mass: f64, perturbation: Perturbation) -> Result<Self> {
        make_metric(MetricFamily::SchwarzschildMelvin, b, None, mass, perturbation)
    }

    pub fn companion_flat(b: f64, mass: f64, perturbation: Perturbation) -> Result<Self> {
        make_metric(MetricFamily::CompanionFlat, b, None, mass, perturbation)
    }

    /// `factor² · base`.
    pub fn conformal(base: &MetricSpec, factor: ScalarField) -> Self {
        let tag = FrameTag(format!("conformal({}, {})", base.tag, factor.name()));
        MetricSpec {
            form: Form::Conformal {
                base: Arc::new(base.clone()),
                factor,
            },
            tag,
        }
    }

    /// The meridional part of `base` with `g_φφ` replaced by `fiber`.
    pub fn warped(base: &MetricSpec, fiber: ScalarField) -> Self {
        let tag = FrameTag(format!("warped({}, {})", base.tag, fiber.name()));
        MetricSpec {
            form: Form::Warped {
                base: Arc::new(base.clone()),
                fiber,
            },
            tag,
        }
    }

    pub fn tag(&self) -> &FrameTag {
        &self.tag
    }

    /// Closed-form parameters, `None` for derived metrics.
    pub fn params(&self) -> Option<&MetricParams> {
        match &self.form {
            Form::Closed(p) => Some(p),
            _ => None,
        }
    }

    pub fn family(&self) -> Option<MetricFamily> {
        self.params().map(|p| p.family)
    }

    /// Melvin parameter `b`; derived metrics report their base's.
    pub fn b(&self) -> f64 {
        match &self.form {
            Form::Closed(p) => p.b,
            Form::Conformal { base, .. } | Form::Warped { base, .. } => base.b(),
        }
    }

    pub fn mass(&self) -> f64 {
        match &self.form {
            Form::Closed(p) => p.mass,
            Form::Conformal { base, .. } | Form::Warped { base, .. } => base.mass(),
        }
    }

    pub fn perturbation(&self) -> Perturbation {
        match &self.form {
            Form::Closed(p) => p.perturbation,
            Form::Conformal { base, .. } | Form::Warped { base, .. } => base.perturbation(),
        }
    }

    /// Smallest admissible radius (exclusive).
    pub fn r_floor(&self) -> f64 {
        match &self.form {
            Form::Closed(p) => match p.family {
                MetricFamily::SchwarzschildMelvin
                | MetricFamily::CompanionFlat
                | MetricFamily::EtaPlus
                | MetricFamily::EtaMinus => 2.0 * p.mass,
                _ => 0.0,
            },
            Form::Conformal { base, .. } | Form::Warped { base, .. } => base.r_floor(),
        }
    }

    /// The asymptotically flat companion obtained by stripping the `F` factors.
    pub fn companion(&self) -> Result<MetricSpec> {
        let p = self
            .params()
            .ok_or_else(|| Error::InvalidParameter("derived metrics have no companion".into()))?;
        match p.family {
            MetricFamily::Flat | MetricFamily::CompanionFlat => Ok(self.clone()),
            MetricFamily::Melvin | MetricFamily::AsymptoticallyMelvin => {
                MetricSpec::companion_flat(p.b, 0.0, p.perturbation)
            }
            MetricFamily::SchwarzschildMelvin => {
                MetricSpec::companion_flat(p.b, p.mass, p.perturbation)
            }
            MetricFamily::EtaPlus | MetricFamily::EtaMinus => Err(Error::InvalidParameter(
                "the η metrics have no companion".into(),
            )),
        }
    }

    pub(crate) fn check_domain(&self, r: f64, theta: f64) -> Result<()> {
        if !(r.is_finite() && theta.is_finite()) {
            return Err(Error::DomainError(format!("non-finite point ({r}, {theta})")));
        }
        if theta <= 0.0 || theta >= std::f64::consts::PI {
            return Err(Error::DomainError(format!("θ = {theta} is on or beyond the axis")));
        }
        let floor = self.r_floor();
        if r <= floor {
            return Err(Error::DomainError(format!("r = {r} must exceed {floor}")));
        }
        Ok(())
    }

    /// `(g_rr, g_θθ, g_φφ)` as jets at `(r, θ)`.
    pub fn components(&self, r: f64, theta: f64) -> Result<[Jet; 3]> {
        self.check_domain(r, theta)?;
        let (jr, jt) = Jet::coordinates(r, theta);
        Ok(self.components_jet(jr, jt))
    }

    /// Component values without derivatives.
    pub fn component_values(&self, r: f64, theta: f64) -> Result<[f64; 3]> {
        self.check_domain(r, theta)?;
        let c = self.components_jet(Jet::constant(r), Jet::constant(theta));
        Ok([c[0].v, c[1].v, c[2].v])
    }

    pub(crate) fn components_jet(&self, r: Jet, theta: Jet) -> [Jet; 3] {
        match &self.form {
            Form::Closed(p) => closed_components(p, r, theta),
            Form::Conformal { base, factor } => {
                let z2 = factor.apply(r, theta).powi(2);
                let g = base.components_jet(r, theta);
                [z2 * g[0], z2 * g[1], z2 * g[2]]
            }
            Form::Warped { base, fiber } => {
                let g = base.components_jet(r, theta);
                [g[0], g[1], fiber.apply(r, theta)]
            }
        }
    }

    /// `√det g` at a point.
    pub fn volume_density(&self, r: f64, theta: f64) -> Result<f64> {
        let [a, b, c] = self.component_values(r, theta)?;
        Ok((a * b * c).sqrt())
    }
}

fn closed_components(p: &MetricParams, r: Jet, theta: Jet) -> [Jet; 3] {
    use MetricFamily::*;
    let pert = &p.perturbation;
    let s2 = theta.sin().powi(2);
    let r2 = r * r;
    let f = melvin_factor(p.b, r, theta);
    let lapse = || 1.0 - 2.0 * p.mass / r;
    match p.family {
        Flat => [Jet::constant(1.0), r2, r2 * s2],
        Melvin | AsymptoticallyMelvin => {
            let f2 = f * f;
            let w1 = pert.one_plus(1, r, theta);
            [
                w1 * f2,
                w1 * f2 * r2,
                pert.one_plus(2, r, theta) * r2 * s2 / f2,
            ]
        }
        SchwarzschildMelvin => {
            let f2 = f * f;
            let w3 = pert.one_plus(3, r, theta);
            [
                w3 * f2 / lapse(),
                w3 * f2 * r2,
                pert.one_plus(2, r, theta) * r2 * s2 / f2,
            ]
        }
        CompanionFlat => {
            let fiber = pert.one_plus(2, r, theta) * r2 * s2;
            if p.mass == 0.0 {
                let w1 = pert.one_plus(1, r, theta);
                [w1, w1 * r2, fiber]
            } else {
                let w3 = pert.one_plus(3, r, theta);
                [w3 / lapse(), w3 * r2, fiber]
            }
        }
        EtaPlus | EtaMinus => {
            let sign = if p.family == EtaPlus { 1.0 } else { -1.0 };
            let w = eta_weight(sign, p.mass, r);
            let f2 = f * f;
            let zeta = w / f2;
            [zeta * (f2 / lapse()), zeta * (f2 * r2), w * r2 * s2]
        }
    }
}

/// `(1/4)(1 − M/r ± √(1 − 2M/r))²`.
fn eta_weight(sign: f64, mass: f64, r: Jet) -> Jet {
    let lapse = 1.0 - 2.0 * mass / r;
    let root = if mass == 0.0 {
        Jet::constant(1.0)
    } else {
        lapse.sqrt()
    };
    (1.0 - mass / r + root * sign).powi(2) * 0.25
}

/// Pair of metrics `η± = ζ± ḡ + f± dφ²` over the unperturbed Schwarzschild–Melvin base.
#[derive(Clone, Debug)]
pub struct EtaPair {
    pub plus: MetricSpec,
    pub minus: MetricSpec,
    mass: f64,
    b: f64,
}

/// Builds `η⁺` and `η⁻`. `η⁻` is allowed to degenerate at infinity and must not be
/// handed to the solver.
pub fn eta_metrics(mass: f64, b: f64) -> Result<EtaPair> {
    if !mass.is_finite() || mass < 0.0 {
        return Err(Error::InvalidParameter(format!("M = {mass} must be nonnegative")));
    }
    Ok(EtaPair {
        plus: make_metric(MetricFamily::EtaPlus, b, None, mass, Perturbation::ZERO)?,
        minus: make_metric(MetricFamily::EtaMinus, b, None, mass, Perturbation::ZERO)?,
        mass,
        b,
    })
}

/// Sign selector for [`EtaPair::profiles`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EtaSign {
    Plus,
    Minus,
}

impl EtaPair {
    /// `(ζ±, f±)` at a point. Valid for `r ≥ 2M`, including the horizon limit `r = 2M`.
    pub fn profiles(&self, sign: EtaSign, r: f64, theta: f64) -> Result<(f64, f64)> {
        let floor = 2.0 * self.mass;
        if !(r > 0.0 && r >= floor) {
            return Err(Error::DomainError(format!("r = {r} is below 2M = {floor}")));
        }
        let s = if sign == EtaSign::Plus { 1.0 } else { -1.0 };
        let x = 1.0 - self.mass / r;
        let lapse = (1.0 - 2.0 * self.mass / r).max(0.0);
        let w = 0.25 * (x + s * lapse.sqrt()).powi(2);
        let f = 1.0 + self.b * (r * theta.sin()).powi(2);
        Ok((w / (f * f), w * (r * theta.sin()).powi(2)))
    }
}
