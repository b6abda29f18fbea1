//! Numerical tools for spacetimes with torsion: metric and connection
//! evaluation, autoparallel integration, parallel-transported frames, the
//! kinematic decomposition of reference frames and frame classification.

pub mod error;
pub mod catalog;
pub mod classify;
pub mod connection;
pub mod expr;
pub mod integrate;
pub mod jet;
pub mod kinematics;
pub mod normal;
pub mod spacetime;
pub mod tensor;
pub mod transport;

pub use error::{Error, Result};
pub use expr::Expression;
pub use jet::ScalarJet;
pub use spacetime::{
    parse_spacetime_spec, parse_spacetime_spec_with, CoordinateChart, FrameEval, FrameFieldSpec,
    MetricEval, MetricField, SpacetimeSpec, TangentClass, TorsionField,
};
pub use tensor::{Tensor3, Tensor4};
