//! Sparse fluid-antenna array designs, snapshot synthesis, co-array
//! covariance processing, LoS DOA estimation and its Cramér–Rao bound.
//!
//! Numerical code is generic over [`Real`] (`f32` or `f64`). The `*64`
//! aliases below fix the scalar to `f64`.

pub mod covariance;
pub mod crb;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod linalg;
pub mod poly;
pub mod scalar;
pub mod signal;

pub use covariance::{
    build_rr, expected_covariance, lag_multiplicity, rearrange_to_lags, sample_covariance, CovarianceMode,
    CovarianceStack, LagVector,
};
pub use crb::{crb_rmse_deg, crb_theta, fim, model_covariance, Crb, CrbInput};
pub use error::{Error, Result};
pub use estimator::{
    detect_los_count, estimate, mdl_count, mse_prediction, root_music, subspace_split, Detector,
    EstimationRecord, EstimationResult,
};
pub use geometry::{
    design, design_aligned, design_misaligned, difference_coarray, max_consecutive_dof, virtual_positions,
    DesignKind, GeometryDesign, LagSet,
};
pub use linalg::{CMatrix, Matrix};
pub use scalar::{Cplx, Real};
pub use signal::{steering_vector, synthesize, Alignment, Scenario, SnapshotBlock, Target};

pub type C64 = Cplx<f64>;
pub type CMatrix64 = CMatrix<f64>;
pub type SnapshotBlock64 = SnapshotBlock<f64>;
pub type CovarianceStack64 = CovarianceStack<f64>;
pub type LagVector64 = LagVector<f64>;
pub type EstimationResult64 = EstimationResult<f64>;
pub type Crb64 = Crb<f64>;
