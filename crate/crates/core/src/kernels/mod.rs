//! Closed-form kernels.
//!
//! All kernels follow one operator convention: the elliptic operator is
//! `(1/4π)Δ` and the parabolic one `(1/4π)Δ − ∂ₜ`, i.e. diffusion coefficient
//! `1/(4π)`. The heat kernel is then `Δt^{−n/2} exp(−π r²/Δt)` with unit mass,
//! and Green functions are `4π` times the textbook ones (the 3D free kernel
//! is `1/r`). To convert to the `Δ` convention divide Green functions by `4π`
//! and rescale time by `4πD`.

mod boundary;
mod domain;
mod free;
mod hyperbolic;

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GreenError, Result};

pub use boundary::{
    ball_poisson_kernel, boundary_kernel_elliptic, boundary_kernel_parabolic,
    half_space_poisson_kernel, quadrant_boundary_kernel, quadrant_harmonic_density, QuadrantMode,
};
pub(crate) use domain::green_by_heat_integral;
pub use domain::{
    ball_green_3d, domain_green, heat_domain_kernel, quadrant_green, strip_green_paired_images,
    strip_theta,
};
pub use free::{fixed_energy, free_elliptic, free_elliptic_constant, free_heat, free_heat_real};
pub use hyperbolic::hyperbolic_i;

/// Kernel values are complex; real kernels have imaginary part exactly 0.
pub type KernelValue = Complex64;

/// The parameter `s ∈ {1, i}` distinguishing diffusion from Schrödinger-type
/// and wave kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelCase {
    Real,
    Imaginary,
}

impl fmt::Display for KernelCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Real => "real",
            Self::Imaginary => "imaginary",
        })
    }
}

impl FromStr for KernelCase {
    type Err = GreenError;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "real" | "1" => Ok(Self::Real),
            "imaginary" | "i" => Ok(Self::Imaginary),
            _ => Err(GreenError::Parse {
                input: s.into(),
                reason: "expected real or imaginary".into(),
            }),
        }
    }
}

/// Constant energy shift ℰ ≥ 0 of the fixed-energy kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyParam(f64);

impl EnergyParam {
    pub fn new(e: f64) -> Result<Self> {
        if !(e >= 0.0) || !e.is_finite() {
            return Err(GreenError::InvalidParameter(format!(
                "energy must be finite and ≥ 0, got {e}"
            )));
        }
        Ok(Self(e))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Standard deviation of the Gaussian mollifier used for the distributional
/// wave kernel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierWidth(f64);

impl MollifierWidth {
    pub fn new(w: f64) -> Result<Self> {
        if !(w > 0.0) || !w.is_finite() {
            return Err(GreenError::InvalidParameter(format!(
                "mollifier width must be positive, got {w}"
            )));
        }
        Ok(Self(w))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}
