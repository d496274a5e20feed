//! Undersized rectangular waveguides as photon barriers.
//!
//! Lengths are in cm, times in fs. A TE_mn mode of an a × b guide (a < b)
//! propagates for λ < λ_c and is evanescent beyond.

use std::f64::consts::PI;

use crate::error::{contract, Result};
use crate::potential::PiecewisePotential;
use crate::stationary_times::phase_time;
use crate::units::UnitSystem;

/// Speed of light in cm/s.
pub const C_CM_PER_S: f64 = 2.997_924_58e10;
/// |λ − λ_c|/λ_c below this is treated as sitting on the cutoff.
pub const CUTOFF_DEGENERACY_TOL: f64 = 1e-9;
/// Opaque-limit formulas are refused below this Lκ_em.
pub const OPAQUE_MIN: f64 = 5.0;
pub const OPAQUE_WARN: f64 = 8.0;

const CM_TO_ANGSTROM: f64 = 1e8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveguideSpec {
    pub a: f64,
    pub b: f64,
    pub m: u32,
    pub n: u32,
    pub l: f64,
    pub lambda: f64,
}

impl WaveguideSpec {
    pub fn new(a: f64, b: f64, m: u32, n: u32, l: f64, lambda: f64) -> Result<Self> {
        let spec = Self { a, b, m, n, l, lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [self.a, self.b, self.l, self.lambda].iter().all(|v| v.is_finite() && *v > 0.0);
        if !positive {
            return Err(contract("waveguide dimensions and wavelength must be finite and positive"));
        }
        if self.a > self.b {
            return Err(contract(format!("waveguide needs a ≤ b, got a = {}, b = {}", self.a, self.b)));
        }
        if self.m == 0 && self.n == 0 {
            return Err(contract("TE mode needs m and n not both zero"));
        }
        Ok(())
    }

    /// Transverse wavenumbers (k_z, k_y) = (mπ/a, nπ/b), cm⁻¹.
    pub fn transverse(&self) -> (f64, f64) {
        (self.m as f64 * PI / self.a, self.n as f64 * PI / self.b)
    }
}

/// λ_c from (1/λ_c)² = (m/2a)² + (n/2b)².
pub fn cutoff_wavelength(spec: &WaveguideSpec) -> Result<f64> {
    spec.validate()?;
    let s = (spec.m as f64 / (2.0 * spec.a)).powi(2) + (spec.n as f64 / (2.0 * spec.b)).powi(2);
    Ok(1.0 / s.sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Propagation {
    /// Real axial wavenumber γ, cm⁻¹.
    Propagating { gamma: f64 },
    /// Decay constant κ_em, cm⁻¹.
    Evanescent { kappa: f64 },
    /// λ within the degeneracy tolerance of λ_c; the axial wavenumber is zero.
    AtCutoff,
}

pub fn propagation_constant(spec: &WaveguideSpec) -> Result<Propagation> {
    let lc = cutoff_wavelength(spec)?;
    if ((spec.lambda - lc) / lc).abs() < CUTOFF_DEGENERACY_TOL {
        return Ok(Propagation::AtCutoff);
    }
    let d = (1.0 / spec.lambda).powi(2) - (1.0 / lc).powi(2);
    Ok(if d > 0.0 {
        Propagation::Propagating { gamma: 2.0 * PI * d.sqrt() }
    } else {
        Propagation::Evanescent { kappa: 2.0 * PI * (-d).sqrt() }
    })
}

fn evanescent_kappa(spec: &WaveguideSpec) -> Result<f64> {
    match propagation_constant(spec)? {
        Propagation::Evanescent { kappa } => Ok(kappa),
        other => Err(contract(format!("waveguide section is not evanescent ({other:?})"))),
    }
}

/// Transverse TE field components (E_y, E_z) at (y, z); E_x vanishes.
pub fn te_mode_fields(spec: &WaveguideSpec, y: f64, z: f64) -> Result<(f64, f64)> {
    spec.validate()?;
    if !(0.0..=spec.b).contains(&y) || !(0.0..=spec.a).contains(&z) {
        return Err(contract(format!("point (y = {y}, z = {z}) lies outside the guide")));
    }
    let (kz, ky) = spec.transverse();
    // Wall values are set exactly rather than through sin(π) ≈ 1e-16.
    let s = |m: u32, arg: f64, at_wall: bool| if m == 0 || at_wall { 0.0 } else { arg.sin() };
    let ey = s(spec.m, kz * z, z == 0.0 || z == spec.a) * (ky * y).cos();
    let ez = if spec.n == 0 || spec.m == 0 {
        0.0
    } else {
        -(ky / kz) * (kz * z).cos() * s(spec.n, ky * y, y == 0.0 || y == spec.b)
    };
    Ok((ey, ez))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhotonPhaseTime {
    /// 2/(cκ_em), fs.
    pub tau: f64,
    /// L/τ, cm/s.
    pub effective_velocity: f64,
    /// Lκ_em > 2.
    pub superluminal: bool,
    pub opaque_warning: bool,
}

pub fn photon_phase_time(spec: &WaveguideSpec) -> Result<PhotonPhaseTime> {
    let kappa = evanescent_kappa(spec)?;
    let opacity = spec.l * kappa;
    if opacity < OPAQUE_MIN {
        return Err(contract(format!("photon phase time needs Lκ_em ≥ {OPAQUE_MIN}, got {opacity}")));
    }
    Ok(PhotonPhaseTime {
        tau: 2.0 / (C_CM_PER_S * kappa) * 1e15,
        effective_velocity: effective_velocity(spec.l, kappa),
        superluminal: is_superluminal(spec.l, kappa),
        opaque_warning: opacity < OPAQUE_WARN,
    })
}

/// υ_eff = Lκ_em c/2 in cm/s, without any opacity requirement.
pub fn effective_velocity(l: f64, kappa: f64) -> f64 {
    0.5 * l * kappa * C_CM_PER_S
}

pub fn is_superluminal(l: f64, kappa: f64) -> bool {
    l * kappa > 2.0
}

/// Rectangular quantum barrier with κ = κ_em and width L.
#[derive(Debug, Clone, PartialEq)]
pub struct MappedBarrier {
    pub v0: f64,
    pub energy: f64,
    /// Width in Å.
    pub a: f64,
    pub potential: PiecewisePotential,
}

impl MappedBarrier {
    /// Phase time of the mapped barrier rescaled from υ to c, fs.
    pub fn photon_phase_time(&self, units: &UnitSystem) -> Result<f64> {
        let tau = phase_time(&self.potential, self.energy, units)?;
        let v = units.velocity(units.wavenumber(self.energy));
        Ok(tau * v / units.c)
    }
}

/// Barrier whose free wavenumber is 2π/λ and whose κ is κ_em, in electron units.
pub fn map_to_barrier(spec: &WaveguideSpec, units: &UnitSystem) -> Result<MappedBarrier> {
    evanescent_kappa(spec)?;
    let lc = cutoff_wavelength(spec)?;
    let to_inv_angstrom = |lambda: f64| 2.0 * PI / (lambda * CM_TO_ANGSTROM);
    let energy = units.hbar2_over_2m * to_inv_angstrom(spec.lambda).powi(2);
    let v0 = units.hbar2_over_2m * to_inv_angstrom(lc).powi(2);
    let a = spec.l * CM_TO_ANGSTROM;
    Ok(MappedBarrier {
        v0,
        energy,
        a,
        potential: PiecewisePotential::rectangular(v0, a)?,
    })
}

/// Lateral shift D = υ_z τ^Ph (Å) and rotation δ_i = Ω τ_z (rad).
pub fn ftir_shifts(tau_ph: f64, v_z: f64, tau_la_z: f64, omega: f64) -> Result<(f64, f64)> {
    if !(tau_ph > 0.0 && v_z > 0.0 && tau_la_z > 0.0 && omega >= 0.0) {
        return Err(contract("FTIR inputs must be positive (Ω may be zero)"));
    }
    Ok((v_z * tau_ph, omega * tau_la_z))
}
