//! Geometry of multi-time Lagrange spaces on first-order jet bundles.

pub mod calculus;
pub mod cartan;
pub mod connection;
pub mod curvature;
pub mod dsl;
pub mod error;
pub mod extremal;
pub mod jet;
pub mod lagrangian;
pub mod linalg;
pub mod metric;
pub mod regularity;
pub mod sampling;
pub mod scalar;

pub use cartan::{
    berwald_connection, cartan_connection, covariant_derivative, covariant_derivatives, metric_compatibility, pack,
    uniqueness_probe, BerwaldConnection, CartanConnection, CompatibilityReport, CovariantJacobian, HNormalConnection,
    LinearConnectionPack, PackKind, UniquenessReport,
};
pub use connection::{
    adapted_derivative, canonical_nonlinear_connection, connection_tensors, euler_lagrange_residual, harmonic_defect,
    sasakian_metric, spray_entities, CanonicalConnection, Direction, ExprMap, JetMap, MapJet, MetricPairConnection,
    NRoute, NonlinearConnection, SprayPack, ZeroConnection,
};
pub use curvature::{
    curvature_table, table_zero_audit, torsion_table, CurvatureTable, InstanceClass, TorsionTable, ZeroAudit,
};
pub use extremal::{
    action_value, grid_action, harmonic_residual, integrate_extremal, ExtremalProblem, GridMap, HarmonicResidual,
    Trajectory,
};
pub use regularity::{electrodynamics_decompose, kronecker_test, RegularityOptions, RegularityVerdict};
pub use calculus::{d1, d2, fd_crosscheck, DiffConfig, ScalarField, TensorField};
pub use dsl::{parse, Expr, ParseDiagnostic};
pub use error::{Error, Result};
pub use jet::{contract, Coord, DTensor, Dims, IndexSlot, JetPoint, SlotKind};
pub use lagrangian::{Lagrangian, MultiTimeSpace};
pub use metric::{ExplicitMetric, SpatialMetric, TemporalMetric};
pub use sampling::SamplingBox;
pub use scalar::{Dual, HyperDual, Scalar};
