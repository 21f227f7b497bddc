//! Reconstruction of weighted bipartite holdings networks from node
//! strengths and the total number of links.
//!
//! Three ensembles are provided: the fully connected CAPM baseline, the
//! maximum-entropy MECAPM with geometric weights, and ECAPM, which draws the
//! topology from a fitness-induced configuration model calibrated to L and
//! corrects the weights so that each pair's mean stays at V_iC_α/W.
//!
//! ```
//! use ecapm_core::{EcapmModel, StrengthSequences, ZSolver, sample};
//!
//! let s = StrengthSequences::new(vec![1.0, 2.0], vec![3.0]).unwrap();
//! let (model, fit) = EcapmModel::calibrate(s, 1.0, &ZSolver::default()).unwrap();
//! assert!((fit.z - 0.235702).abs() < 1e-6);
//! let net = sample(&model, 42);
//! assert_eq!(net.n_holders(), 2);
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod error;
pub mod exec;
pub mod indicators;
pub mod io;
pub mod models;
pub mod network;
pub mod sampling;
pub mod synthetic;

pub use calibration::{
    expected_link_count, solve_bicm, solve_z, sparse_calibration, sparse_z, BicmMultipliers, BicmSolver,
    CalibrationMethod, CalibrationResult, ZSolver,
};
pub use error::{Error, Result};
pub use exec::Execution;
pub use models::{CapmModel, EcapmModel, MecapmModel, ModelKind, PairEnsemble, PairMoments, WeightLaw};
pub use network::{BipartiteNetwork, DegreeSequences, Edge, StrengthSequences};
pub use sampling::{draw_seed, sample, sample_with, EnsembleSampler};
