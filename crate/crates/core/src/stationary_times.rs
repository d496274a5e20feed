//! Single-energy tunnelling times.

use num_complex::Complex64;

use crate::diff::{darg, darg_de, dde_abs, DiffOptions};
use crate::error::{contract, Error, Result};
use crate::potential::{PiecewisePotential, RegionMarkers};
use crate::quadrature::Grid1D;
use crate::scattering::{solve_with, two_phase, ScatteringSolution, TwoPhase};
use crate::units::UnitSystem;
use crate::wavepacket::SpectralPacket;

fn step(energy: f64, opts: DiffOptions) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(contract(format!("time needs E > 0, got {energy}")));
    }
    let mut rel = opts.rel_step;
    while rel >= 1.0 {
        rel *= 0.5;
    }
    Ok(rel * energy)
}

/// ħ d(arg A_T)/dE in fs, from the continuous log of A_T.
pub fn phase_delay(pot: &PiecewisePotential, energy: f64, units: &UnitSystem, opts: DiffOptions) -> Result<f64> {
    let h = step(energy, opts)?;
    let d = darg_de(|e| Ok(solve_with(pot, e, units)?.ln_a_t), energy, h, opts.richardson)?;
    Ok(units.hbar * d)
}

/// Phase time ħ d(arg A_T + k·a_total)/dE across the outer barrier edges.
pub fn phase_time(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<f64> {
    phase_time_with(pot, energy, units, DiffOptions::default())
}

pub fn phase_time_with(pot: &PiecewisePotential, energy: f64, units: &UnitSystem, opts: DiffOptions) -> Result<f64> {
    let ballistic = pot.total_width() / units.velocity(units.wavenumber(energy));
    Ok(phase_delay(pot, energy, units, opts)? + ballistic)
}

/// Transmission phase time (x_f − x_i)/υ + ħ d(arg A_T)/dE between markers.
pub fn phase_time_between(
    pot: &PiecewisePotential,
    energy: f64,
    markers: RegionMarkers,
    units: &UnitSystem,
) -> Result<f64> {
    let ballistic = markers.length() / units.velocity(units.wavenumber(energy));
    Ok(phase_delay(pot, energy, units, DiffOptions::default())? + ballistic)
}

/// Büttiker–Landauer time ħ|d ln|A_T|/dE|.
pub fn bl_time(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<f64> {
    bl_time_with(pot, energy, units, DiffOptions::default())
}

pub fn bl_time_with(pot: &PiecewisePotential, energy: f64, units: &UnitSystem, opts: DiffOptions) -> Result<f64> {
    if let Some(vmin) = pot.min_barrier_height() {
        if !(energy < vmin) {
            return Err(contract(format!(
                "Büttiker–Landauer time needs E below every barrier (E = {energy}, lowest barrier {vmin})"
            )));
        }
    }
    let h = step(energy, opts)?;
    let d = dde_abs(
        |e| solve_with(pot, e, units).map_or(f64::NAN, |s| s.ln_a_t.re),
        energy,
        h,
        opts.richardson,
    )?;
    Ok(units.hbar * d.abs())
}

/// Larmor-z time; by definition identical to [`bl_time`].
pub fn larmor_z(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<f64> {
    bl_time(pot, energy, units)
}

/// Largest relative change allowed when the dwell x-grid is refined.
pub const DWELL_QUADRATURE_TOL: f64 = 1e-8;

fn density_integral(sol: &ScatteringSolution, pot: &PiecewisePotential, markers: RegionMarkers, panel: f64) -> Result<f64> {
    let mut breaks = vec![markers.x_i];
    for s in pot.segments() {
        for x in [s.x_start, s.x_end] {
            if x > markers.x_i && x < markers.x_f {
                breaks.push(x);
            }
        }
    }
    breaks.push(markers.x_f);
    breaks.sort_by(f64::total_cmp);
    let grid = Grid1D::piecewise_gauss_legendre(&breaks, panel, 16)?;
    Ok(grid.integrate_fn(|x| sol.psi(x).norm_sqr()))
}

/// Stationary dwell time ∫|ψ|²dx/υ over the markers' interval.
pub fn dwell_time_stationary(
    pot: &PiecewisePotential,
    energy: f64,
    markers: RegionMarkers,
    units: &UnitSystem,
) -> Result<f64> {
    if !(energy > 0.0) {
        return Err(contract("dwell time needs E > 0"));
    }
    if markers.length() == 0.0 {
        return Ok(0.0);
    }
    let sol = solve_with(pot, energy, units)?;
    let q_max = sol
        .segment_coeffs
        .iter()
        .map(|r| r.q.norm())
        .fold(sol.k, f64::max);
    let panel = (1.0 / q_max).min(1.0);
    let coarse = density_integral(&sol, pot, markers, panel)?;
    let fine = density_integral(&sol, pot, markers, 0.5 * panel)?;
    if (fine - coarse).abs() > DWELL_QUADRATURE_TOL * fine.abs() {
        return Err(Error::Convergence(format!(
            "dwell quadrature changed by {:e} relative on refinement",
            (fine - coarse).abs() / fine.abs()
        )));
    }
    Ok(fine / units.velocity(sol.k))
}

/// Larmor-y time −ħ[|A_T|² ∂arg A_T/∂V + |A_R|² ∂arg A_R/∂V], where V is a
/// uniform potential offset on the markers' interval.
pub fn larmor_y(pot: &PiecewisePotential, energy: f64, markers: RegionMarkers, units: &UnitSystem) -> Result<f64> {
    if !(energy > 0.0) || markers.length() <= 0.0 {
        return Err(contract("Larmor time needs E > 0 and a non-empty interval"));
    }
    let sol = solve_with(pot, energy, units)?;
    let scale = pot.max_height().max(energy);
    let h = 1e-4 * scale;
    let logs = |dv: f64| -> Result<(Complex64, Complex64)> {
        let p = pot.with_offset(markers.x_i, markers.x_f, dv)?;
        let s = solve_with(&p, energy, units)?;
        Ok((s.ln_a_t, s.a_r.ln()))
    };
    let d_t = darg(|v| Ok(logs(v)?.0), 0.0, h, true)?;
    let d_r = if sol.a_r.norm() > 0.0 {
        darg(|v| Ok(logs(v)?.1), 0.0, h, true)?
    } else {
        0.0
    };
    Ok(-units.hbar * (sol.transmission() * d_t + sol.reflection() * d_r))
}

/// Closed-form Larmor-y time for the barrier V0 on (0, a):
/// (mk/ħκ)[2κa(κ²−k²) + k₀² sinh 2κa]/[4k²κ² + k₀⁴ sinh²κa].
pub fn larmor_y_rect(v0: f64, a: f64, energy: f64, units: &UnitSystem) -> Result<f64> {
    if !(energy > 0.0 && energy < v0) {
        return Err(contract("closed form needs 0 < E < V0"));
    }
    let k = units.wavenumber(energy);
    let kappa = units.kappa(v0, energy);
    let k0sq = v0 / units.hbar2_over_2m;
    let m_over_hbar = 1.0 / units.hbar_over_m();
    let x = kappa * a;
    if x > 350.0 {
        return Ok(m_over_hbar * k / kappa * 2.0 / k0sq);
    }
    let num = 2.0 * x * (kappa * kappa - k * k) + k0sq * (2.0 * x).sinh();
    let den = 4.0 * k * k * kappa * kappa + k0sq * k0sq * x.sinh().powi(2);
    Ok(m_over_hbar * k / kappa * num / den)
}

/// (τ from ħ∂φ₂/∂E, τ_z = ħ(∂φ₁/∂E) cot φ₁) for a single rectangular barrier.
///
/// τ_z is evaluated as ħ d ln sin φ₁/dE, which stays finite when φ₁ → 0.
pub fn two_phase_times(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<(f64, f64)> {
    two_phase_times_with(pot, energy, units, DiffOptions::default())
}

pub fn two_phase_times_with(
    pot: &PiecewisePotential,
    energy: f64,
    units: &UnitSystem,
    opts: DiffOptions,
) -> Result<(f64, f64)> {
    let [seg] = pot.segments() else {
        return Err(contract("two-phase times need a single rectangular barrier"));
    };
    let a = seg.width();
    let phases = |e: f64| -> Result<TwoPhase> { two_phase(&solve_with(pot, e, units)?, a) };
    let h = step(energy, opts)?;
    let d_phi2 = darg_de(|e| Ok(Complex64::new(0.0, phases(e)?.phi2)), energy, h, opts.richardson)?;
    let d_ln_sin = dde_abs(
        |e| phases(e).map_or(f64::NAN, |p| p.ln_sin_phi1()),
        energy,
        h,
        opts.richardson,
    )?;
    Ok((units.hbar * d_phi2, units.hbar * d_ln_sin))
}

/// Lorentzian delay ħΓ/[(E−E_r)² + Γ²] + τ_nr.
pub fn resonance_delay(energy: f64, e_r: f64, gamma: f64, tau_nr: f64, units: &UnitSystem) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(contract(format!("resonance width must be positive, got {gamma}")));
    }
    let d = energy - e_r;
    Ok(units.hbar * gamma / (d * d + gamma * gamma) + tau_nr)
}

/// Every stationary time at one energy, across the outer barrier edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeCatalog {
    pub energy: f64,
    pub tau_phase: f64,
    pub tau_bl: f64,
    pub tau_dwell: f64,
    pub tau_larmor_y: f64,
    pub tau_larmor_z: f64,
}

pub fn time_catalog(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<TimeCatalog> {
    let markers = RegionMarkers::barrier_edges(pot)?;
    let tau_bl = bl_time(pot, energy, units)?;
    Ok(TimeCatalog {
        energy,
        tau_phase: phase_time(pot, energy, units)?,
        tau_bl,
        tau_dwell: dwell_time_stationary(pot, energy, markers, units)?,
        tau_larmor_y: larmor_y(pot, energy, markers, units)?,
        tau_larmor_z: tau_bl,
    })
}

/// Weight used for energy averages over a packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyWeight {
    /// Incident flux |G|²dk.
    #[default]
    Incident,
    /// Transmitted flux |G A_T|²dk.
    Transmitted,
    /// υ|G|²dE taken literally with G the k-amplitude, ∝ υ²|G|²dk.
    VelocityWeighted,
}

/// ⟨f⟩_E over the packet, f evaluated at each k-node's energy.
pub fn energy_average(
    pot: &PiecewisePotential,
    packet: &SpectralPacket,
    weight: EnergyWeight,
    f: impl Fn(f64) -> Result<f64> + Sync,
) -> Result<f64> {
    let units = *packet.units();
    match weight {
        EnergyWeight::Incident => packet.average(|_| 1.0, |k| f(units.energy(k))),
        EnergyWeight::VelocityWeighted => packet.average(|k| units.velocity(k).powi(2), |k| f(units.energy(k))),
        EnergyWeight::Transmitted => packet.average(
            |k| solve_with(pot, units.energy(k), &units).map_or(0.0, |s| s.transmission()),
            |k| f(units.energy(k)),
        ),
    }
}
