//! Numerical toolkit for binary-outcome nonlocality in the triangle network.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, the command line
//! front end and thread-level parallelism live in the `trinet` companion
//! crate.
//!
//! Module map:
//!
//! * [`tensor`]: dense complex matrices over multipartite spaces, partial
//!   traces and transposes, Hermitian eigendecomposition, link product.
//! * [`dists`]: distributions over three binary outcomes, the noisy W family.
//! * [`local`]: classical triangle-local models, evaluation and search.
//! * [`quantum`]: the five-parameter quantum model, fits and scans.
//! * [`testers`]: quantum testers and the triangle contraction.
//! * [`seesaw`]: alternating optimization over three testers.
//! * [`inflation`]: inflation linear programs and Farkas certificates.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod dists;
pub mod error;
pub mod inflation;
pub mod local;
pub mod optim;
pub mod quantum;
pub mod rational;
pub mod rng;
pub mod seesaw;
pub mod tensor;
pub mod testers;

pub use dists::{TripartiteDistribution, Visibility};
pub use error::{Error, Result};
pub use tensor::{ComplexMatrix, LabeledOperator, SubsystemShape};
