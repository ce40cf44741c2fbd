//! Multilinear algebra on a single tangent space.

pub mod complex;
pub mod forms;
pub mod structure;

pub use complex::{
    hermitian_eigenbasis, project_pq, type_residual, wedge_all, ComplexVolumePoint, CVec,
    EigenBasis, HermitianFormPoint, NijenhuisPoint, UnitaryFrame,
};
pub use forms::{one_form, wedge, Coeff, ComplexForm, Form, KForm};
pub use structure::{
    compatible_metric, split_two_form, top_power_oriented, AlmostComplexPoint, Compatibility,
    CompatibleMetric, MetricPoint,
};
