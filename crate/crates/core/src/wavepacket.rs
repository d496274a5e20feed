//! Wavepackets as spectral superpositions of exact stationary states.
//!
//! `Ψ(x,t) = ∫ G(k) e^{−ikx₀} ψ_k(x) e^{−iω(k)(t−t₀)} dk`, so a free packet is
//! centred on x₀ at t₀. ψ_k is the left-incidence scattering state.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{contract, Error, Result};
use crate::potential::PiecewisePotential;
use crate::quadrature::Grid1D;
use crate::scattering::{solve_with, ScatteringSolution};
use crate::units::UnitSystem;

/// Half-width of the k-grid in units of Δk. |G| at the ends is e^{−36}.
pub const GRID_HALF_WIDTH: f64 = 12.0;
/// Default number of Gauss–Legendre nodes on the k-grid.
pub const DEFAULT_NK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Dispersion {
    /// ω = ħk²/2m.
    #[default]
    Schrodinger,
    /// ω = ck.
    Photon,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CutoffForm {
    /// Keep E < V0.
    #[default]
    SubBarrier,
    /// Keep E > V0, the other reading of the step function.
    AboveBarrier,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cutoff {
    pub v0: f64,
    pub form: CutoffForm,
}

/// Weight amplitude G(k − k̄) sampled on a Gauss–Legendre k-grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPacket {
    k_grid: Grid1D,
    g: Vec<Complex64>,
    k_bar: f64,
    delta_k: f64,
    cutoff: Option<Cutoff>,
    x0: f64,
    t0: f64,
    dispersion: Dispersion,
    units: UnitSystem,
}

/// Gaussian packet G = C exp[−(k−k̄)²/(2Δk)²], normalized to ∫|G|² dE = 1.
pub fn gaussian_packet(
    k_bar: f64,
    delta_k: f64,
    n_k: usize,
    cutoff: Option<Cutoff>,
    units: &UnitSystem,
) -> Result<SpectralPacket> {
    SpectralPacket::gaussian(k_bar, delta_k, n_k, cutoff, Dispersion::Schrodinger, units)
}

impl SpectralPacket {
    pub fn gaussian(
        k_bar: f64,
        delta_k: f64,
        n_k: usize,
        cutoff: Option<Cutoff>,
        dispersion: Dispersion,
        units: &UnitSystem,
    ) -> Result<Self> {
        if !(delta_k > 0.0) || !(k_bar > 6.0 * delta_k) {
            return Err(contract(format!(
                "packet needs Δk > 0 and k̄ > 6Δk (k̄ = {k_bar}, Δk = {delta_k})"
            )));
        }
        if n_k < 128 {
            return Err(contract(format!("packet needs at least 128 k-nodes, got {n_k}")));
        }
        let mut lo = (k_bar - GRID_HALF_WIDTH * delta_k).max(1e-3 * delta_k);
        let mut hi = k_bar + GRID_HALF_WIDTH * delta_k;
        if let Some(c) = cutoff {
            if !(c.v0 > 0.0) {
                return Err(contract("cutoff barrier height must be positive"));
            }
            let kc = units.wavenumber(c.v0);
            match c.form {
                CutoffForm::SubBarrier => hi = hi.min(kc),
                CutoffForm::AboveBarrier => lo = lo.max(kc),
            }
            if !(hi > lo) {
                return Err(contract("cutoff leaves no k-components in the packet"));
            }
        }
        let k_grid = Grid1D::gauss_legendre(lo, hi, n_k)?;
        let shape = |k: f64| (-(k - k_bar).powi(2) / (4.0 * delta_k * delta_k)).exp();
        let mut packet = Self {
            g: k_grid.points().iter().map(|&k| Complex64::new(shape(k), 0.0)).collect(),
            k_grid,
            k_bar,
            delta_k,
            cutoff,
            x0: 0.0,
            t0: 0.0,
            dispersion,
            units: *units,
        };
        let norm = packet.energy_norm();
        let c = 1.0 / norm.sqrt();
        for g in &mut packet.g {
            *g *= c;
        }
        Ok(packet)
    }

    /// Packet whose free motion is centred on `x0` at time `t0`.
    pub fn with_focus(mut self, x0: f64, t0: f64) -> Self {
        self.x0 = x0;
        self.t0 = t0;
        self
    }

    pub fn k_grid(&self) -> &Grid1D {
        &self.k_grid
    }

    pub fn g(&self) -> &[Complex64] {
        &self.g
    }

    pub fn k_bar(&self) -> f64 {
        self.k_bar
    }

    pub fn delta_k(&self) -> f64 {
        self.delta_k
    }

    pub fn cutoff(&self) -> Option<Cutoff> {
        self.cutoff
    }

    pub fn focus(&self) -> (f64, f64) {
        (self.x0, self.t0)
    }

    pub fn dispersion(&self) -> Dispersion {
        self.dispersion
    }

    pub fn units(&self) -> &UnitSystem {
        &self.units
    }

    /// ω(k) in rad/fs.
    pub fn omega(&self, k: f64) -> f64 {
        match self.dispersion {
            Dispersion::Schrodinger => self.units.energy(k) / self.units.hbar,
            Dispersion::Photon => self.units.c * k,
        }
    }

    /// Group velocity dω/dk in Å/fs.
    pub fn group_velocity(&self, k: f64) -> f64 {
        match self.dispersion {
            Dispersion::Schrodinger => self.units.velocity(k),
            Dispersion::Photon => self.units.c,
        }
    }

    /// Mean group velocity at k̄.
    pub fn mean_velocity(&self) -> f64 {
        self.group_velocity(self.k_bar)
    }

    /// ∫|G|² dE on the grid, with dE = ħ (dω/dk) dk.
    pub fn energy_norm(&self) -> f64 {
        self.k_grid
            .points()
            .iter()
            .zip(self.k_grid.weights())
            .zip(&self.g)
            .map(|((&k, &w), g)| w * g.norm_sqr() * self.units.hbar * self.group_velocity(k))
            .sum()
    }

    /// |G| at the grid ends relative to the largest sample.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.g.iter().map(|g| g.norm()).fold(0.0, f64::max);
        let ends = self.g[0].norm().max(self.g[self.g.len() - 1].norm());
        ends / peak
    }

    /// Spatial standard deviation of the free packet at t₀: 1/(2Δk).
    pub fn spatial_width(&self) -> f64 {
        0.5 / self.delta_k
    }

    /// Weighted mean of `f(k)` with weight `w(k)|G|²dk`.
    pub fn average(&self, weight: impl Fn(f64) -> f64 + Sync, f: impl Fn(f64) -> Result<f64> + Sync) -> Result<f64> {
        let parts: Vec<(f64, f64)> = self
            .k_grid
            .points()
            .par_iter()
            .zip(self.k_grid.weights())
            .zip(&self.g)
            .map(|((&k, &w), g)| {
                let wt = w * g.norm_sqr() * weight(k);
                if wt == 0.0 {
                    return Ok((0.0, 0.0));
                }
                Ok((wt * f(k)?, wt))
            })
            .collect::<Result<_>>()?;
        let (num, den) = parts.iter().fold((0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1));
        if !(den > 0.0) {
            return Err(contract("average weight vanishes on the packet grid"));
        }
        Ok(num / den)
    }
}

/// Ψ and ∂Ψ/∂x evaluator with the stationary states cached per k-node.
#[derive(Debug, Clone)]
pub struct PacketEvaluator {
    packet: SpectralPacket,
    potential: PiecewisePotential,
    solutions: Vec<ScatteringSolution>,
    /// w_i G_i e^{−ik_i x₀}.
    coef: Vec<Complex64>,
    omega: Vec<f64>,
    flux_prefactor: f64,
}

impl PacketEvaluator {
    pub fn new(pot: &PiecewisePotential, packet: &SpectralPacket) -> Result<Self> {
        let units = packet.units;
        let nodes = packet.k_grid.points();
        let solutions: Vec<ScatteringSolution> = nodes
            .par_iter()
            .map(|&k| solve_with(pot, units.energy(k), &units))
            .collect::<Result<_>>()?;
        let coef = nodes
            .iter()
            .zip(packet.k_grid.weights())
            .zip(&packet.g)
            .map(|((&k, &w), g)| g * w * Complex64::new(0.0, -k * packet.x0).exp())
            .collect();
        let omega = nodes.iter().map(|&k| packet.omega(k)).collect();
        // J = (ħ/m) Im(Ψ*Ψ′); for linear dispersion the plane-wave flux c|Ψ|² fixes c/k̄.
        let flux_prefactor = match packet.dispersion {
            Dispersion::Schrodinger => units.hbar_over_m(),
            Dispersion::Photon => units.c / packet.k_bar,
        };
        Ok(Self {
            packet: packet.clone(),
            potential: pot.clone(),
            solutions,
            coef,
            omega,
            flux_prefactor,
        })
    }

    /// The same packet propagating with no barrier.
    pub fn free(packet: &SpectralPacket) -> Result<Self> {
        Self::new(&PiecewisePotential::free(), packet)
    }

    pub fn packet(&self) -> &SpectralPacket {
        &self.packet
    }

    pub fn potential(&self) -> &PiecewisePotential {
        &self.potential
    }

    pub fn solutions(&self) -> &[ScatteringSolution] {
        &self.solutions
    }

    /// Spatial factors coef·ψ_k(x) and coef·ψ_k′(x) for every k-node.
    pub fn spatial_factors(&self, x: f64) -> (Vec<Complex64>, Vec<Complex64>) {
        self.solutions
            .iter()
            .zip(&self.coef)
            .map(|(s, c)| {
                let (p, d) = s.psi_and_derivative(x);
                (c * p, c * d)
            })
            .unzip()
    }

    fn time_factor(&self, i: usize, t: f64) -> Complex64 {
        Complex64::new(0.0, -self.omega[i] * (t - self.packet.t0)).exp()
    }

    /// e^{−iω(k)(t−t₀)} for every k-node.
    pub fn time_factors(&self, t: f64) -> Vec<Complex64> {
        (0..self.omega.len()).map(|i| self.time_factor(i, t)).collect()
    }

    /// Ψ(x,t) and ∂Ψ/∂x(x,t) from precomputed spatial factors.
    pub fn combine(&self, factors: &(Vec<Complex64>, Vec<Complex64>), t: f64) -> (Complex64, Complex64) {
        let mut psi = Complex64::new(0.0, 0.0);
        let mut dpsi = Complex64::new(0.0, 0.0);
        for i in 0..self.omega.len() {
            let e = self.time_factor(i, t);
            psi += factors.0[i] * e;
            dpsi += factors.1[i] * e;
        }
        (psi, dpsi)
    }

    pub fn psi_and_derivative(&self, x: f64, t: f64) -> (Complex64, Complex64) {
        let mut psi = Complex64::new(0.0, 0.0);
        let mut dpsi = Complex64::new(0.0, 0.0);
        for (i, (s, c)) in self.solutions.iter().zip(&self.coef).enumerate() {
            let (p, d) = s.psi_and_derivative(x);
            let e = c * self.time_factor(i, t);
            psi += p * e;
            dpsi += d * e;
        }
        (psi, dpsi)
    }

    pub fn psi(&self, x: f64, t: f64) -> Complex64 {
        self.psi_and_derivative(x, t).0
    }

    pub fn density(&self, x: f64, t: f64) -> f64 {
        self.psi(x, t).norm_sqr()
    }

    /// Flux from Ψ and ∂Ψ/∂x.
    pub fn flux_from(&self, psi: Complex64, dpsi: Complex64) -> f64 {
        self.flux_prefactor * (psi.conj() * dpsi).im
    }

    pub fn flux(&self, x: f64, t: f64) -> f64 {
        let (p, d) = self.psi_and_derivative(x, t);
        self.flux_from(p, d)
    }

    /// Breakpoints of the potential inside (lo, hi), with both ends.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut b = vec![lo];
        for s in self.potential.segments() {
            for x in [s.x_start, s.x_end] {
                if x > lo && x < hi {
                    b.push(x);
                }
            }
        }
        b.push(hi);
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// A Gauss–Legendre x-grid on [lo, hi] that respects barrier edges.
    pub fn x_grid(&self, lo: f64, hi: f64, max_panel: f64) -> Result<Grid1D> {
        Grid1D::piecewise_gauss_legendre(&self.breakpoints(lo, hi), max_panel, 16)
    }

    /// ∫ρ dx over `grid` at time t.
    pub fn probability(&self, grid: &Grid1D, t: f64) -> f64 {
        grid.points()
            .par_iter()
            .zip(grid.weights())
            .map(|(&x, &w)| w * self.density(x, t))
            .sum()
    }

    /// Spatial standard deviation of ρ over `grid` at time t.
    pub fn width(&self, grid: &Grid1D, t: f64) -> f64 {
        let rows: Vec<(f64, f64)> = grid.points().par_iter().map(|&x| (x, self.density(x, t))).collect();
        let (mut m0, mut m1, mut m2) = (0.0, 0.0, 0.0);
        for ((x, r), w) in rows.iter().zip(grid.weights()) {
            m0 += w * r;
            m1 += w * r * x;
            m2 += w * r * x * x;
        }
        let mean = m1 / m0;
        (m2 / m0 - mean * mean).max(0.0).sqrt()
    }
}

/// Sampled flux J(x,t) at fixed x on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxSeries {
    pub x: f64,
    pub t_grid: Grid1D,
    pub j: Vec<f64>,
    pub j_plus: Vec<f64>,
    pub j_minus: Vec<f64>,
    /// Whether the captured-mass condition held when sampling stopped.
    pub tail_captured: bool,
    pub extensions: usize,
}

impl FluxSeries {
    pub fn from_samples(x: f64, t_grid: Grid1D, j: Vec<f64>, tail_captured: bool, extensions: usize) -> Result<Self> {
        if j.len() != t_grid.len() {
            return Err(contract("flux samples do not match the time grid"));
        }
        let j_plus = j.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
        let j_minus = j.iter().map(|&v| if v < 0.0 { v } else { 0.0 }).collect();
        Ok(Self {
            x,
            t_grid,
            j,
            j_plus,
            j_minus,
            tail_captured,
            extensions,
        })
    }

    pub fn times(&self) -> &[f64] {
        self.t_grid.points()
    }

    /// ∫|J| dt.
    pub fn abs_mass(&self) -> f64 {
        self.t_grid.integrate_fn_indexed(|i| self.j[i].abs())
    }

    pub fn mass(&self) -> f64 {
        self.t_grid.integrate_fn_indexed(|i| self.j[i])
    }

    pub fn plus_mass(&self) -> f64 {
        self.t_grid.integrate_fn_indexed(|i| self.j_plus[i])
    }

    pub fn minus_mass(&self) -> f64 {
        self.t_grid.integrate_fn_indexed(|i| self.j_minus[i])
    }
}

impl Grid1D {
    pub(crate) fn integrate_fn_indexed(&self, f: impl Fn(usize) -> f64) -> f64 {
        self.weights().iter().enumerate().map(|(i, w)| w * f(i)).sum()
    }
}

/// Sampling controls for [`flux_series`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    /// Relative change of ∫|J|dt allowed when the window grows by 25% per side.
    pub tail_eps: f64,
    pub max_extensions: usize,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            tail_eps: 1e-4,
            max_extensions: 8,
        }
    }
}

/// Flux at x on `n_t` uniform samples over `t_range`, widened until the tails are captured.
pub fn flux_series(eval: &PacketEvaluator, x: f64, t_range: (f64, f64), n_t: usize) -> Result<FluxSeries> {
    flux_series_with(eval, x, t_range, n_t, SeriesOptions::default())
}

pub fn flux_series_with(
    eval: &PacketEvaluator,
    x: f64,
    t_range: (f64, f64),
    n_t: usize,
    opts: SeriesOptions,
) -> Result<FluxSeries> {
    let (t_lo, t_hi) = t_range;
    if !(t_lo.is_finite() && t_hi.is_finite() && t_hi > t_lo) {
        return Err(contract(format!("invalid time range ({t_lo}, {t_hi})")));
    }
    if n_t < 256 {
        return Err(contract(format!("flux series needs n_t ≥ 256, got {n_t}")));
    }
    let dt = (t_hi - t_lo) / (n_t - 1) as f64;
    let factors = eval.spatial_factors(x);
    let sample = |t: f64| {
        let (p, d) = eval.combine(&factors, t);
        eval.flux_from(p, d)
    };
    // Samples on t_lo + i·dt for i in [first, first + values.len()).
    let mut first: i64 = 0;
    let mut values: Vec<f64> = (0..n_t).into_par_iter().map(|i| sample(t_lo + dt * i as f64)).collect();
    let abs_trap = |v: &[f64]| -> f64 {
        let s: f64 = v.iter().map(|x| x.abs()).sum();
        dt * (s - 0.5 * (v[0].abs() + v[v.len() - 1].abs()))
    };
    let mut captured = false;
    let mut extensions = 0;
    loop {
        let pad = ((values.len() as f64) * 0.25).ceil() as i64;
        let before: Vec<f64> = (first - pad..first)
            .into_par_iter()
            .map(|i| sample(t_lo + dt * i as f64))
            .collect();
        let end = first + values.len() as i64;
        let after: Vec<f64> = (end..end + pad)
            .into_par_iter()
            .map(|i| sample(t_lo + dt * i as f64))
            .collect();
        let inner = abs_trap(&values);
        let mut grown = before;
        grown.extend_from_slice(&values);
        grown.extend_from_slice(&after);
        let outer = abs_trap(&grown);
        let total = outer.max(f64::MIN_POSITIVE);
        if (outer - inner).abs() <= opts.tail_eps * total {
            captured = true;
            break;
        }
        if extensions == opts.max_extensions {
            values = grown;
            first -= pad;
            break;
        }
        values = grown;
        first -= pad;
        extensions += 1;
    }
    let start = t_lo + dt * first as f64;
    let stop = start + dt * (values.len() - 1) as f64;
    let grid = Grid1D::trapezoid(start, stop, values.len())?;
    FluxSeries::from_samples(x, grid, values, captured, extensions)
}

/// Flux at x on an already chosen time grid.
pub fn flux_on_grid(eval: &PacketEvaluator, x: f64, grid: &Grid1D) -> Result<FluxSeries> {
    let factors = eval.spatial_factors(x);
    let j: Vec<f64> = grid
        .points()
        .par_iter()
        .map(|&t| {
            let (p, d) = eval.combine(&factors, t);
            eval.flux_from(p, d)
        })
        .collect();
    if j.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { energy: f64::NAN });
    }
    FluxSeries::from_samples(x, grid.clone(), j, true, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn packet(e: f64, dk: f64) -> SpectralPacket {
        let u = UnitSystem::electron();
        gaussian_packet(u.wavenumber(e), dk, DEFAULT_NK, None, &u).unwrap()
    }

    #[test]
    fn reference_k_bar() {
        let u = UnitSystem::electron();
        assert!((u.wavenumber(5.0) - 1.1455).abs() < 1e-4);
    }

    #[test]
    fn normalization_and_boundaries() {
        let p = packet(5.0, 0.02);
        assert!((p.energy_norm() - 1.0).abs() < 1e-8);
        assert!(p.boundary_ratio() < 1e-12);
        assert!(p.k_grid().points()[0] > 0.0);
    }

    #[test]
    fn contract_violations() {
        let u = UnitSystem::electron();
        assert!(gaussian_packet(0.1, 0.02, 512, None, &u).is_err());
        assert!(gaussian_packet(1.0, 0.02, 64, None, &u).is_err());
        let far_above = Cutoff {
            v0: 1.0,
            form: CutoffForm::SubBarrier,
        };
        assert!(gaussian_packet(u.wavenumber(20.0), 0.02, 512, Some(far_above), &u).is_err());
    }

    #[test]
    fn cutoff_keeps_sub_barrier_band() {
        let u = UnitSystem::electron();
        let c = Cutoff {
            v0: 5.0,
            form: CutoffForm::SubBarrier,
        };
        let p = gaussian_packet(u.wavenumber(5.0), 0.02, 256, Some(c), &u).unwrap();
        assert!(p.k_grid().points().iter().all(|&k| u.energy(k) < 5.0));
        assert!((p.energy_norm() - 1.0).abs() < 1e-8);
        let c = Cutoff {
            v0: 5.0,
            form: CutoffForm::AboveBarrier,
        };
        let p = gaussian_packet(u.wavenumber(5.0), 0.02, 256, Some(c), &u).unwrap();
        assert!(p.k_grid().points().iter().all(|&k| u.energy(k) > 5.0));
    }

    #[test]
    fn free_peak_at_focus() {
        let p = packet(5.0, 0.05).with_focus(-30.0, 0.0);
        let ev = PacketEvaluator::free(&p).unwrap();
        let centre = ev.density(-30.0, 0.0);
        for dx in [-5.0, -1.0, 1.0, 5.0] {
            assert!(ev.density(-30.0 + dx, 0.0) < centre);
        }
    }

    #[test]
    fn sign_separation_identity() {
        let pot = PiecewisePotential::rectangular(10.0, 5.0).unwrap();
        let p = packet(5.0, 0.05);
        let ev = PacketEvaluator::new(&pot, &p).unwrap();
        let fs = flux_series(&ev, -2.0, (-20.0, 20.0), 512).unwrap();
        for i in 0..fs.j.len() {
            assert_eq!(fs.j[i], fs.j_plus[i] + fs.j_minus[i]);
            assert!(fs.j_plus[i] >= 0.0 && fs.j_minus[i] <= 0.0);
            assert_eq!(fs.j_plus[i] * fs.j_minus[i], 0.0);
        }
        assert!(fs.plus_mass() > 0.0 && fs.minus_mass() < 0.0);
        assert!((fs.mass() - fs.plus_mass() - fs.minus_mass()).abs() < 1e-12 * fs.abs_mass());
        assert!(fs.tail_captured);
    }

    #[test]
    fn free_packet_has_no_backward_flux() {
        let p = packet(5.0, 0.02);
        let ev = PacketEvaluator::free(&p).unwrap();
        let fs = flux_series(&ev, 10.0, (-30.0, 30.0), 512).unwrap();
        assert!(fs.j_minus.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn no_flux_before_arrival() {
        let p = packet(5.0, 0.05).with_focus(-400.0, 0.0);
        let ev = PacketEvaluator::free(&p).unwrap();
        let peak = ev.flux(-400.0, 0.0);
        for t in [-10.0, -5.0, 0.0] {
            assert!(ev.flux(100.0, t - 20.0).abs() < 1e-10 * peak);
        }
    }
}
