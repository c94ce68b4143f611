//! Pseudo-spectral laboratory for the filtered Camassa-Holm equation
//!
//! ```text
//! u_t + 3u u_x = -α²∂x³(1-α²∂x²)^{-1} u² - (α²/2) ∂x(1-α²∂x²)^{-1} (u_x)²
//! ```
//!
//! and its zero-filter limit, the inviscid Burgers equation `u_t + 3u u_x = 0`,
//! on a periodic cell standing in for the real line.

pub mod constructions;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod operators;
pub mod spectral;

pub use error::{Error, Result};
