//! Mixed-integer black-box optimization with CMA-ES and the margin correction.
//!
//! The crate provides
//! - [`cma::CmaEs`]: CMA-ES with margin on a [`space::MixedIntegerSpace`],
//! - [`im::CmaEsIm`]: CMA-ES with integer mutation, the usual baseline,
//! - [`mo::MoCmaEs`]: bi-objective MO-CMA-ES with per-individual margin,
//! - [`benchmarks`]: the mixed-integer test functions used to compare them.
//!
//! ```
//! use margin_cma::benchmarks::{Benchmark, BenchmarkSpec};
//! use margin_cma::cma::{CmaEs, CmaParams, CmaState, CovarianceFactors};
//! use margin_cma::numerics::{RngStream, SymmetricMatrix};
//!
//! let spec = BenchmarkSpec::new(Benchmark::SphereOneMax, 4).unwrap();
//! let mut rng = RngStream::new(1);
//! let state = CmaState::new(spec.initial_mean(&mut rng), 1.0, SymmetricMatrix::identity(4)).unwrap();
//! let mut es = CmaEs::new(CmaParams::new(4).unwrap(), state, spec.space.clone()).unwrap();
//! for _ in 0..10 {
//!     let factors = CovarianceFactors::new(&es.state.cov).unwrap();
//!     es.step(&factors, &mut rng, |v| spec.evaluate(v).unwrap()).unwrap();
//! }
//! ```

pub mod benchmarks;
pub mod cma;
pub mod error;
pub mod im;
pub mod margin;
pub mod mo;
pub mod numerics;
pub mod space;

pub use error::{Error, Result};
