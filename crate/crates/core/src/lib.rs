//! Saliency enhancement with edges.
//!
//! Edge maps are fused with images and saliency maps in the gradient domain and
//! integrated back with an FFT Green's-function Laplacian solver. The crate also
//! ships the evaluation metrics and the batch harness used by the `see` CLI.

pub mod error;
pub mod field;
pub mod filter;
pub mod gdm;
pub mod harness;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod provider;
pub mod selftest;
pub mod solver;

pub use error::{Result, SeeError};
pub use field::{BinaryMask, ColorImage, ScalarField};
