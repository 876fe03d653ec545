//! Observable lower bounds on multipartite concurrence.
//!
//! For an N-partite state `rho` the two-copy expectation `Tr[(rho (x) rho) V]`
//! bounds the squared concurrence from below and is saturated on pure
//! states. It can be read off from simultaneous parity measurements on the N
//! particle-copy pairs. This crate evaluates the bound exactly through the
//! lattice of reduced purities ([`bound`]), cross-checks it against explicit
//! two-copy operators ([`observable`]), and simulates the finite-shot parity
//! protocol ([`measurement`]).

pub mod bound;
pub mod error;
pub mod experiments;
pub mod hilbert;
pub mod measurement;
pub mod observable;
pub mod statefile;
pub mod states;

pub use error::{Error, Result};
pub use hilbert::{HilbertStructure, SubsystemMask};
pub use states::{DensityMatrix, PureState};
