//! Principal balances for compositional regression and classification.
//!
//! The crate turns an n×D table of strictly positive parts into orthonormal
//! balance coordinates. [`pb::pls_pb`] builds them greedily so each balance
//! has maximal covariance with a response; [`pb::pca_pb`] builds the
//! variance-maximising counterpart. Around that core sit SIMPLS and PCA on clr
//! data ([`latent`]), cross-validated model-size selection ([`modelsel`]), a
//! simulation generator based on pivot coordinates ([`simgen`]) and the
//! command implementations behind the `plspb` binary ([`cli`]).

pub mod cli;
pub mod coda;
pub mod error;
pub mod io;
pub mod latent;
pub mod modelsel;
pub mod pb;
pub mod simgen;
pub mod study;

pub use error::{Error, Result};
