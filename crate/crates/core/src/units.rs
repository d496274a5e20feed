//! Physical constants in the eV / Å / fs unit system.

use crate::error::{contract, Result};

/// Reduced Planck constant, eV·fs.
pub const HBAR: f64 = 0.658_211_956_9;
/// ħ²/(2mₑ) for the electron, eV·Å².
pub const HBAR2_OVER_2M: f64 = 3.809_982_1;
/// Speed of light, Å/fs.
pub const SPEED_OF_LIGHT: f64 = 2_997.924_58;

/// The three constants every other module works with.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// ħ in eV·fs.
    pub hbar: f64,
    /// ħ²/(2m) in eV·Å².
    pub hbar2_over_2m: f64,
    /// c in Å/fs.
    pub c: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        Self::electron()
    }
}

impl UnitSystem {
    /// CODATA values for an electron.
    pub const fn electron() -> Self {
        Self {
            hbar: HBAR,
            hbar2_over_2m: HBAR2_OVER_2M,
            c: SPEED_OF_LIGHT,
        }
    }

    pub fn new(hbar: f64, hbar2_over_2m: f64, c: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !(ok(hbar) && ok(hbar2_over_2m) && ok(c)) {
            return Err(contract("unit constants must be finite and strictly positive"));
        }
        Ok(Self {
            hbar,
            hbar2_over_2m,
            c,
        })
    }

    /// Free-particle wavenumber (Å⁻¹) for kinetic energy `energy` (eV).
    pub fn wavenumber(&self, energy: f64) -> f64 {
        (energy / self.hbar2_over_2m).sqrt()
    }

    /// Kinetic energy (eV) for wavenumber `k` (Å⁻¹).
    pub fn energy(&self, k: f64) -> f64 {
        self.hbar2_over_2m * k * k
    }

    /// Group velocity υ = ħk/m in Å/fs.
    pub fn velocity(&self, k: f64) -> f64 {
        2.0 * self.hbar2_over_2m * k / self.hbar
    }

    /// Decay constant κ = √(2m(V − E))/ħ in Å⁻¹; zero when E ≥ V.
    pub fn kappa(&self, barrier: f64, energy: f64) -> f64 {
        ((barrier - energy).max(0.0) / self.hbar2_over_2m).sqrt()
    }

    /// ħ/m in Å²/fs, the prefactor of the probability flux.
    pub fn hbar_over_m(&self) -> f64 {
        2.0 * self.hbar2_over_2m / self.hbar
    }

    /// dE/dk = ħυ in eV·Å.
    pub fn de_dk(&self, k: f64) -> f64 {
        2.0 * self.hbar2_over_2m * k
    }
}
