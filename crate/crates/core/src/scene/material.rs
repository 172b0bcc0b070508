use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::Real;

/// Index into a scene's material table.
pub type MaterialId = usize;

pub const DEFAULT_IOR: f64 = 1.43;
pub const DEFAULT_SUBSURFACE_MFP: f64 = 0.5;
pub const DEFAULT_SUBSURFACE_ALBEDO: f64 = 0.95;

/// The three shader-mix weights of the material model.
///
/// `final_factor` mixes the absorbing component (0) with the scattering
/// component (1). Inside the scattering component `scattering_factor` mixes a
/// transparent pass (0) with subsurface scattering (1). Inside the absorbing
/// component a transparent pass is mixed half and half with a refraction whose
/// tint is `absorption_factor` (0 black, 1 clear).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct FactorTriple<T> {
    pub final_factor: T,
    pub absorption_factor: T,
    pub scattering_factor: T,
}

impl<T: Real> FactorTriple<T> {
    pub fn new(final_factor: T, absorption_factor: T, scattering_factor: T) -> Self {
        Self { final_factor, absorption_factor, scattering_factor }
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        for (name, v) in [
            ("final_factor", self.final_factor),
            ("absorption_factor", self.absorption_factor),
            ("scattering_factor", self.scattering_factor),
        ] {
            check_unit(&format!("{path}.{name}"), v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct Material<T> {
    pub factors: FactorTriple<T>,
    /// Authored red-channel proxy written to the ground-truth map.
    pub gt_absorption: T,
    /// Authored green-channel proxy written to the ground-truth map.
    pub gt_scattering: T,
    pub hg_g: T,
    pub ior: T,
    /// Mean free path of the subsurface walk, mm.
    pub subsurface_mfp: T,
    pub subsurface_albedo: T,
}

impl<T: Real> Material<T> {
    /// Material with the given factors and explicitly authored ground truth;
    /// physical knobs at their defaults.
    pub fn new(factors: FactorTriple<T>, gt_absorption: T, gt_scattering: T) -> Self {
        Self {
            factors,
            gt_absorption,
            gt_scattering,
            hg_g: T::zero(),
            ior: T::lit(DEFAULT_IOR),
            subsurface_mfp: T::lit(DEFAULT_SUBSURFACE_MFP),
            subsurface_albedo: T::lit(DEFAULT_SUBSURFACE_ALBEDO),
        }
    }

    /// Final-factor-only material with the shipped ground-truth convention
    /// `gt = (1 - final, final)`, absorption and scattering factors at 1.
    pub fn from_final_factor(final_factor: T) -> Self {
        let one = T::one();
        Self::new(FactorTriple::new(final_factor, one, one), one - final_factor, final_factor)
    }

    /// Extinction coefficient of the subsurface walk, mm⁻¹.
    #[inline]
    pub fn subsurface_sigma_t(&self) -> T {
        self.subsurface_mfp.recip()
    }

    pub fn validate(&self, path: &str) -> Result<()> {
        self.factors.validate(&format!("{path}.factors"))?;
        check_unit(&format!("{path}.gt_absorption"), self.gt_absorption)?;
        check_unit(&format!("{path}.gt_scattering"), self.gt_scattering)?;
        if !(self.hg_g.abs() < T::one()) {
            return Err(Error::invalid(
                format!("{path}.hg_g"),
                format!("anisotropy must lie in (-1, 1), got {}", self.hg_g),
            ));
        }
        if !(self.ior > T::one()) {
            return Err(Error::invalid(
                format!("{path}.ior"),
                format!("refractive index must be > 1, got {}", self.ior),
            ));
        }
        if !(self.subsurface_mfp > T::zero()) || !self.subsurface_mfp.is_finite() {
            return Err(Error::invalid(
                format!("{path}.subsurface_mfp"),
                format!("mean free path must be > 0, got {}", self.subsurface_mfp),
            ));
        }
        check_unit(&format!("{path}.subsurface_albedo"), self.subsurface_albedo)
    }
}

fn check_unit<T: Real>(path: &str, v: T) -> Result<()> {
    if v >= T::zero() && v <= T::one() {
        Ok(())
    } else {
        Err(Error::invalid(path, format!("must lie in [0, 1], got {v}")))
    }
}
