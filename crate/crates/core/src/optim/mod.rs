//! Derivative-free optimizers used to maximize acquisition functions.

pub mod direct;
pub mod nelder_mead;

pub use direct::{direct_maximize, direct_minimize, DirectOptions, Rect};
pub use nelder_mead::{nelder_mead_maximize, nelder_mead_minimize, NelderMeadOptions, NelderMeadResult, Simplex};
