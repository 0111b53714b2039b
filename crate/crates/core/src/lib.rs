//! Numerical laboratory for Gauduchon factors on complex tori.

pub mod calculus;
pub mod constants;
pub mod cutoff;
pub mod error;
pub mod family;
pub mod field;
pub mod grid;
pub mod io;
pub mod lobpcg;
pub mod local_model;
pub mod metric;
pub mod quadrature;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use field::{Form, FormField, ScalarField, C64};
pub use grid::PeriodicGrid;
pub use metric::{build_metric, HermitianMetricField, MetricEquivalence, MetricSpec, TrigTerm};
pub use spectral::{CalculusContext, Partial};
