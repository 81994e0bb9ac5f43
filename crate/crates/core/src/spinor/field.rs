use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::geometry::{FrameTag, MetricSpec, ScalarField};
use crate::jet::Jet;

use super::algebra::{Spinor, SpinorJet};

type FieldFn = dyn Fn(Jet, Jet) -> SpinorJet + Send + Sync;

/// A closed-form, `∂_φ`-invariant spinor field with exact derivatives in `(r, θ)`.
///
/// The tag names the metric whose orthonormal frame the components refer to.
#[derive(Clone)]
pub struct AnalyticSpinorField {
    tag: FrameTag,
    name: String,
    f: Arc<FieldFn>,
}

impl AnalyticSpinorField {
    /// Field given by four real component functions `(Re ξ¹, Im ξ¹, Re ξ², Im ξ²)`.
    pub fn new(
        metric: &MetricSpec,
        name: impl Into<String>,
        parts: impl Fn(Jet, Jet) -> [Jet; 4] + Send + Sync + 'static,
    ) -> Self {
        AnalyticSpinorField {
            tag: metric.tag().clone(),
            name: name.into(),
            f: Arc::new(move |r, t| SpinorJet::from_parts(parts(r, t))),
        }
    }

    pub fn constant(metric: &MetricSpec, xi: Spinor) -> Self {
        AnalyticSpinorField {
            tag: metric.tag().clone(),
            name: format!("const({:.3},{:.3})", xi[0], xi[1]),
            f: Arc::new(move |_, _| SpinorJet::constant(xi)),
        }
    }

    pub fn zero(metric: &MetricSpec) -> Self {
        AnalyticSpinorField::constant(metric, super::algebra::zero_spinor())
    }

    pub fn tag(&self) -> &FrameTag {
        &self.tag
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn jet(&self, r: f64, theta: f64) -> SpinorJet {
        let (jr, jt) = Jet::coordinates(r, theta);
        (self.f)(jr, jt)
    }

    pub fn value(&self, r: f64, theta: f64) -> Spinor {
        (self.f)(Jet::constant(r), Jet::constant(theta)).v
    }

    /// Same components, now declared to live in `metric`'s frame.
    pub fn in_frame_of(&self, metric: &MetricSpec) -> Self {
        AnalyticSpinorField {
            tag: metric.tag().clone(),
            name: self.name.clone(),
            f: self.f.clone(),
        }
    }

    /// `u · ξ` for a real scalar profile `u`.
    pub fn scaled(&self, u: &ScalarField) -> Self {
        let (inner, u2) = (self.f.clone(), u.clone());
        AnalyticSpinorField {
            tag: self.tag.clone(),
            name: format!("{}*{}", u.name(), self.name),
            f: Arc::new(move |r, t| inner(r, t).scale(u2.apply(r, t))),
        }
    }

    /// `a·self + b·other`; both must share a frame.
    pub fn combine(&self, a: Complex64, other: &AnalyticSpinorField, b: Complex64) -> Self {
        assert_eq!(self.tag, other.tag, "combining fields from different frames");
        let (f, g) = (self.f.clone(), other.f.clone());
        AnalyticSpinorField {
            tag: self.tag.clone(),
            name: format!("{a}*{} + {b}*{}", self.name, other.name),
            f: Arc::new(move |r, t| f(r, t).mul_complex(a) + g(r, t).mul_complex(b)),
        }
    }
}

impl fmt::Debug for AnalyticSpinorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnalyticSpinorField")
            .field("tag", &self.tag)
            .field("name", &self.name)
            .finish()
    }
}
