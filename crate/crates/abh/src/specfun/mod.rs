//! Special functions and quadrature primitives.

pub mod quad;
pub mod special;

pub use quad::{
    integrate, integrate_adaptive, integrate_oscillatory, wynn_epsilon, QuadOptions,
    QuadratureResult,
};
pub use special::{
    chi, e1, e1_scaled, ei, ei_scaled, naive_shi_chi_combo, shi, si, stable_shi_chi_combo,
    EULER_GAMMA,
};
