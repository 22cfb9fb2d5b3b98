//! Construction, verification, normalization, and search of q-analog Steiner
//! systems, with the puncturing and extension calculus for subspaces of F_q^n.

pub mod design;
pub mod dlx;
pub mod error;
pub mod gf;
pub mod io;
pub mod puncture;
pub mod punctured;
pub mod search;
pub mod structure;
pub mod subspace;

pub use design::DesignMultiset;
pub use error::{Error, Result};
pub use gf::Field;
pub use subspace::Subspace;
