//! Axisymmetric diagonal 3-metrics and their frame geometry.

mod frame;
mod metric;

pub use frame::{
    christoffel, connection_coefficients, frame_point, scalar_curvature, ChristoffelData,
    ConnectionData, CurvaturePoint, FramePoint, PointGeometry, AZIMUTHAL, POLAR, RADIAL,
};
pub use metric::{
    eta_metrics, make_metric, melvin_factor, EtaPair, EtaSign, FrameTag, MetricFamily,
    MetricParams, MetricSpec, Perturbation, ScalarField,
};
