//! Kashin decompositions of vectors and matrices over structured orthogonal
//! transforms, low-bit codebook quantization of the resulting factors, and
//! the binary formats that store them.

pub mod error;
pub mod analysis;
pub mod decomp;
pub mod ortho;
pub mod quantize;
pub mod tensorio;

pub use error::{FormatError, KashinError, Result};
