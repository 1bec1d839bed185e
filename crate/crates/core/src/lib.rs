//! Sparse innovative linear network coding for erasure broadcast channels
//! with feedback.

pub mod codes;
pub mod gfield;
pub mod gfmatrix;
pub mod hitting;
pub mod innovate;
pub mod ops;
pub mod simulate;
