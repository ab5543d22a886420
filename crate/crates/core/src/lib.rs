//! Entanglement of formation, its Legendre–Fenchel conjugate and numerical
//! checks of additivity on bipartite and four-party systems.

pub mod codec;
pub mod config;
pub mod conjugate;
pub mod entanglement;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod manifold;
pub mod rng;
pub mod states;

pub use config::OptimizerConfig;
pub use error::{Error, Result};
pub use linalg::{BipartiteDims, ComplexMatrix, ComplexVector, C64};
pub use states::{DensityMatrix, Ensemble, FourPartyDims, HermitianObservable, IsometryParameter, PureState};
