//! Numerical laboratory for Musielak-Orlicz spaces and UMD constants.

pub mod bounds;
pub mod cli;
pub mod martingale;
pub mod modular;
pub mod solve;
pub mod young;
