//! Construction and verification of compactly supported multivariate dual
//! and tight wavelet frames with a prescribed number of vanishing moments,
//! for an arbitrary integer dilation matrix.

mod accurate;
pub mod analysis;
pub mod builder;
pub mod error;
pub mod extension;
pub mod factorization;
pub mod grid;
pub mod lattice;
pub mod moments;
pub mod multi_index;
pub mod polyphase;
pub mod trigpoly;
pub mod verify;

pub use error::{Error, Result};
pub use lattice::DilationMatrix;
pub use moments::LambdaSet;
pub use multi_index::MultiIndex;
pub use trigpoly::TrigPoly;
