//! Flux-weighted passage-time statistics and the durations built from them.
//!
//! The mean passage time through x is ∫t J±(x,t) dt / ∫J±(x,t) dt, with J±
//! the positive and negative parts of the flux. Durations are differences of
//! such means; their variances are the sums of the two passage-time variances.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::diff::dde_abs;
use crate::error::{contract, Error, Result};
use crate::potential::{PiecewisePotential, RegionMarkers};
use crate::quadrature::Grid1D;
use crate::stationary_times::{energy_average, phase_time_between, EnergyWeight};
use crate::wavepacket::{flux_on_grid, flux_series_with, Dispersion, FluxSeries, PacketEvaluator, SeriesOptions, SpectralPacket};

/// A sign-selected flux lighter than this fraction of ∫|J|dt has no statistics.
pub const MIN_RELATIVE_MASS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
    Total,
}

impl Sign {
    fn label(self) -> &'static str {
        match self {
            Sign::Plus => "positive",
            Sign::Minus => "negative",
            Sign::Total => "total",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeStatistics {
    pub mean: f64,
    pub variance: f64,
    pub std_dev: f64,
    /// |∫J± dt|.
    pub weight_mass: f64,
}

fn signed_weights(series: &FluxSeries, sign: Sign) -> &[f64] {
    match sign {
        Sign::Plus => &series.j_plus,
        Sign::Minus => &series.j_minus,
        Sign::Total => &series.j,
    }
}

fn moments(grid: &Grid1D, w: &[f64]) -> (f64, f64, f64) {
    let m0: f64 = grid.weights().iter().zip(w).map(|(q, j)| q * j).sum();
    let m1: f64 = grid.weights().iter().zip(grid.points()).zip(w).map(|((q, t), j)| q * t * j).sum();
    let mean = m1 / m0;
    let m2: f64 = grid
        .weights()
        .iter()
        .zip(grid.points())
        .zip(w)
        .map(|((q, t), j)| q * (t - mean).powi(2) * j)
        .sum();
    (m0, mean, m2 / m0)
}

/// Mean and variance of the passage time through `series.x`.
pub fn mean_time(series: &FluxSeries, sign: Sign) -> Result<TimeStatistics> {
    let w = signed_weights(series, sign);
    let abs = series.abs_mass();
    let m0 = series.t_grid.integrate_real(w)?;
    let relative_mass = if abs > 0.0 { m0.abs() / abs } else { 0.0 };
    if !(relative_mass > MIN_RELATIVE_MASS) {
        return Err(Error::NoSuchFlux {
            x: series.x,
            sign: sign.label(),
            relative_mass,
        });
    }
    let (m0, mean, var) = moments(&series.t_grid, w);
    let variance = var.max(0.0);
    Ok(TimeStatistics {
        mean,
        variance,
        std_dev: variance.sqrt(),
        weight_mass: m0.abs(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DurationKind {
    Transmission,
    Tunnelling,
    Penetration,
    Reflection,
    Dwell,
    AsymptoticTransmission,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DurationReport {
    pub kind: DurationKind,
    pub markers: RegionMarkers,
    pub mean: f64,
    /// Sum of the per-point variances; NaN for dwell, which has none.
    pub variance: f64,
    /// mean² + variance.
    pub mean_square: f64,
    /// Named intermediate quantities, in fs, fs² or as fractions.
    pub components: Vec<(String, f64)>,
    /// False when a flux series still carried weight at its window edge.
    pub tail_captured: bool,
}

impl DurationReport {
    fn new(kind: DurationKind, markers: RegionMarkers, mean: f64, variance: f64, components: Vec<(String, f64)>) -> Self {
        Self {
            kind,
            markers,
            mean,
            variance,
            mean_square: mean * mean + variance,
            components,
            tail_captured: true,
        }
    }

    fn with_tails(mut self, series: &[&FluxSeries]) -> Self {
        self.tail_captured &= series.iter().all(|s| s.tail_captured);
        self
    }

    pub fn component(&self, name: &str) -> Option<f64> {
        self.components.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }
}

fn named(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
    pairs.iter().map(|(n, v)| (n.to_string(), *v)).collect()
}

/// Sampling and tolerance controls for [`FluxAnalysis`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisOptions {
    /// Half-width of every time window in units of the packet's duration.
    pub n_sigma: f64,
    pub max_dt: f64,
    pub samples_per_sigma: f64,
    pub series: SeriesOptions,
    /// Allowed relative disagreement of the two dwell forms.
    pub dwell_tol: f64,
    /// Longest spatial quadrature panel times the largest k-node.
    pub panel_k: f64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        Self {
            n_sigma: 10.0,
            max_dt: 0.05,
            samples_per_sigma: 40.0,
            series: SeriesOptions::default(),
            dwell_tol: 1e-3,
            panel_k: 2.0,
        }
    }
}

/// A packet on a potential together with the same packet in free space.
#[derive(Debug, Clone)]
pub struct FluxAnalysis {
    eval: PacketEvaluator,
    free: PacketEvaluator,
    opts: AnalysisOptions,
}

impl FluxAnalysis {
    pub fn new(pot: &PiecewisePotential, packet: &SpectralPacket) -> Result<Self> {
        Self::with_options(pot, packet, AnalysisOptions::default())
    }

    pub fn with_options(pot: &PiecewisePotential, packet: &SpectralPacket, opts: AnalysisOptions) -> Result<Self> {
        Ok(Self {
            eval: PacketEvaluator::new(pot, packet)?,
            free: PacketEvaluator::free(packet)?,
            opts,
        })
    }

    pub fn evaluator(&self) -> &PacketEvaluator {
        &self.eval
    }

    pub fn free_evaluator(&self) -> &PacketEvaluator {
        &self.free
    }

    pub fn potential(&self) -> &PiecewisePotential {
        self.eval.potential()
    }

    pub fn packet(&self) -> &SpectralPacket {
        self.eval.packet()
    }

    /// Duration of the free packet's passage around time t.
    fn sigma_t(&self, t: f64) -> f64 {
        let p = self.packet();
        let s0 = p.spatial_width();
        let v = p.mean_velocity();
        match p.dispersion() {
            Dispersion::Photon => s0 / v,
            Dispersion::Schrodinger => {
                let u = p.units();
                let spread = u.hbar2_over_2m / u.hbar * (t - p.focus().1) / (s0 * s0);
                s0 * (1.0 + spread * spread).sqrt() / v
            }
        }
    }

    /// Classical arrival instants at x of the direct and the reflected packet.
    fn arrivals(&self, x: f64) -> Vec<f64> {
        let p = self.packet();
        let (x0, t0) = p.focus();
        let v = p.mean_velocity();
        let mut out = vec![t0 + (x - x0) / v];
        if let (Some(l), Some(r)) = (self.potential().left_edge(), self.potential().right_edge()) {
            out.push(t0 + (l - x0) / v);
            if x < r {
                out.push(t0 + (2.0 * l - x0 - x.min(l)) / v);
            }
        }
        out
    }

    /// Time window that holds every expected passage through x.
    pub fn window(&self, x: f64) -> (f64, f64) {
        let a = self.arrivals(x);
        let lo = a.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let t0 = self.packet().focus().1;
        let far = (lo - t0).abs().max((hi - t0).abs());
        let half = self.opts.n_sigma * self.sigma_t(t0 + far);
        (lo - half, hi + half)
    }

    fn dt(&self) -> f64 {
        let t0 = self.packet().focus().1;
        self.opts.max_dt.min(self.sigma_t(t0) / self.opts.samples_per_sigma)
    }

    fn count(&self, range: (f64, f64)) -> usize {
        (((range.1 - range.0) / self.dt()).ceil() as usize + 1).max(256)
    }

    /// Flux through x with the barrier present.
    pub fn series(&self, x: f64) -> Result<FluxSeries> {
        let w = self.window(x);
        flux_series_with(&self.eval, x, w, self.count(w), self.opts.series)
    }

    /// Flux through x of the same packet in free space.
    pub fn incident_series(&self, x: f64) -> Result<FluxSeries> {
        let w = self.window(x);
        flux_series_with(&self.free, x, w, self.count(w), self.opts.series)
    }

    /// A uniform grid covering the windows of every series given.
    fn common_grid(&self, series: &[&FluxSeries]) -> Result<Grid1D> {
        let lo = series.iter().map(|s| s.t_grid.lower()).fold(f64::INFINITY, f64::min);
        let hi = series.iter().map(|s| s.t_grid.upper()).fold(f64::NEG_INFINITY, f64::max);
        let dt = series
            .iter()
            .filter_map(|s| s.t_grid.uniform_step())
            .fold(self.dt(), f64::min);
        let n = (((hi - lo) / dt).ceil() as usize + 1).max(256);
        Grid1D::trapezoid(lo, hi, n)
    }

    /// Flux-normalised ⟨T⟩_E and ⟨R⟩_E over the k-grid, weight |G|²dk.
    pub fn spectral_probabilities(&self) -> (f64, f64) {
        let p = self.packet();
        let (mut t, mut r, mut n) = (0.0, 0.0, 0.0);
        for ((w, g), s) in p.k_grid().weights().iter().zip(p.g()).zip(self.eval.solutions()) {
            let q = w * g.norm_sqr();
            t += q * s.transmission();
            r += q * s.reflection();
            n += q;
        }
        (t / n, r / n)
    }

    /// ⟨r(x)⟩ = ∫[J₊(x,t) − J_in(x,t)]dt / ∫J_in dt.
    pub fn reflection_share(&self, x: f64) -> Result<f64> {
        let s = self.series(x)?;
        let inc = self.incident_series(x)?;
        let grid = self.common_grid(&[&s, &inc])?;
        let s = flux_on_grid(&self.eval, x, &grid)?;
        let inc = flux_on_grid(&self.free, x, &grid)?;
        let m_in = inc.mass();
        Ok((s.plus_mass() - m_in) / m_in)
    }

    /// ⟨τ^Ph_T(x_i, x_f)⟩_E with the transmitted-flux weight |G A_T|²dk.
    pub fn phase_time_average(&self, markers: RegionMarkers) -> Result<f64> {
        let pot = self.potential();
        let units = *self.packet().units();
        energy_average(pot, self.packet(), EnergyWeight::Transmitted, |e| {
            phase_time_between(pot, e, markers, &units)
        })
    }

    pub fn duration(&self, kind: DurationKind, markers: RegionMarkers) -> Result<DurationReport> {
        let pot = self.potential();
        match kind {
            DurationKind::Dwell => return self.dwell(markers),
            DurationKind::AsymptoticTransmission => return self.asymptotic_transmission(markers),
            DurationKind::Transmission => markers.check_transmission(pot)?,
            DurationKind::Tunnelling => {
                if RegionMarkers::barrier_edges(pot)? != markers {
                    return Err(contract("tunnelling markers must be the barrier edges"));
                }
            }
            DurationKind::Penetration => markers.check_penetration(pot)?,
            DurationKind::Reflection => {
                if let Some(r) = pot.right_edge() {
                    if !(markers.x_f < r) {
                        return Err(contract(format!("reflection needs x_f < {r}, got {}", markers.x_f)));
                    }
                }
            }
        }
        let (si, sf) = (self.series(markers.x_i)?, self.series(markers.x_f)?);
        let start = mean_time(&si, Sign::Plus)?;
        let end_sign = if kind == DurationKind::Reflection { Sign::Minus } else { Sign::Plus };
        let end = mean_time(&sf, end_sign)?;
        let end_name = if end_sign == Sign::Minus { "t_minus(x_f)" } else { "t_plus(x_f)" };
        Ok(DurationReport::new(
            kind,
            markers,
            end.mean - start.mean,
            end.variance + start.variance,
            named(&[
                (end_name, end.mean),
                ("t_plus(x_i)", start.mean),
                ("var(x_f)", end.variance),
                ("var(x_i)", start.variance),
            ]),
        )
        .with_tails(&[&si, &sf]))
    }

    /// Dwell time by the space-time integral, cross-checked by flux moments.
    pub fn dwell(&self, markers: RegionMarkers) -> Result<DurationReport> {
        markers.check_transmission(self.potential())?;
        if !(markers.length() > 0.0) {
            return Err(contract("dwell needs x_i < x_f"));
        }
        let (xi, xf) = (markers.x_i, markers.x_f);
        let si = self.series(xi)?;
        let sf = self.series(xf)?;
        let inc = self.incident_series(xi)?;
        let grid = self.common_grid(&[&si, &sf, &inc])?;
        let ji = flux_on_grid(&self.eval, xi, &grid)?;
        let jf = flux_on_grid(&self.eval, xf, &grid)?;
        let m_in = flux_on_grid(&self.free, xi, &grid)?.mass();

        let k_max = *self.packet().k_grid().points().last().unwrap_or(&1.0);
        let kappa_max = self
            .potential()
            .segments()
            .iter()
            .map(|s| self.packet().units().kappa(s.height, 0.0))
            .fold(0.0, f64::max);
        let panel = self.opts.panel_k / k_max.max(kappa_max);
        let xgrid = self.eval.x_grid(xi, xf, panel)?;
        let factors: Vec<Vec<Complex64>> = xgrid
            .points()
            .par_iter()
            .map(|&x| self.eval.spatial_factors(x).0)
            .collect();
        let occupancy: Vec<f64> = grid
            .points()
            .par_iter()
            .map(|&t| {
                let e = self.eval.time_factors(t);
                factors
                    .iter()
                    .zip(xgrid.weights())
                    .map(|(f, w)| {
                        let psi: Complex64 = f.iter().zip(&e).map(|(a, b)| a * b).sum();
                        w * psi.norm_sqr()
                    })
                    .sum()
            })
            .collect();
        let space_time = grid.integrate_real(&occupancy)? / m_in;
        let first = |j: &FluxSeries| -> f64 { grid.weights().iter().zip(grid.points()).zip(&j.j).map(|((q, t), v)| q * t * v).sum() };
        let flux_moment = (first(&jf) - first(&ji)) / m_in;
        let rel = (space_time - flux_moment).abs() / space_time.abs().max(f64::MIN_POSITIVE);
        if !(rel <= self.opts.dwell_tol) {
            return Err(Error::DwellMismatch {
                space_time,
                flux_moment,
            });
        }
        let edge = occupancy[0].max(occupancy[occupancy.len() - 1]) * (grid.upper() - grid.lower()) / m_in;
        Ok(DurationReport::new(
            DurationKind::Dwell,
            markers,
            space_time,
            f64::NAN,
            named(&[
                ("flux_moment_form", flux_moment),
                ("relative_difference", rel),
                ("window_edge_occupancy", edge),
            ]),
        )
        .with_tails(&[&si, &sf, &inc]))
    }

    /// Dwell time split into transmitted and reflected parts.
    ///
    /// Components: `T_E`, `R_E`, `r(x_i)`, `tau_T`, `tau_R`, the
    /// reconstruction `weighted_rule` with its `weighted_rule_residual`, and `weighted_rule_no_interference` without ⟨r(x_i)⟩.
    pub fn dwell_decomposition(&self, markers: RegionMarkers) -> Result<DurationReport> {
        let dwell = self.dwell(markers)?;
        let (t_e, r_e) = self.spectral_probabilities();
        let r_xi = self.reflection_share(markers.x_i)?;
        let si = self.series(markers.x_i)?;
        let sf = self.series(markers.x_f)?;
        let ti = mean_time(&si, Sign::Plus)?;
        let tf = mean_time(&sf, Sign::Plus)?;
        let tau_t = tf.mean - ti.mean;
        let tau_r = match mean_time(&si, Sign::Minus) {
            Ok(s) => s.mean - ti.mean,
            Err(Error::NoSuchFlux { .. }) => 0.0,
            Err(e) => return Err(e),
        };
        let weighted = t_e * tau_t + (r_e + r_xi) * tau_r;
        let no_interference = t_e * tau_t + r_e * tau_r;
        let residual = (weighted - dwell.mean).abs() / dwell.mean.abs().max(f64::MIN_POSITIVE);
        let mut components = named(&[
            ("T_E", t_e),
            ("R_E", r_e),
            ("r(x_i)", r_xi),
            ("tau_T", tau_t),
            ("tau_R", tau_r),
            ("weighted_rule", weighted),
            ("weighted_rule_residual", residual),
            ("weighted_rule_no_interference", no_interference),
        ]);
        let tails = dwell.tail_captured;
        components.extend(dwell.components);
        let mut report = DurationReport::new(DurationKind::Dwell, markers, dwell.mean, f64::NAN, components).with_tails(&[&si, &sf]);
        report.tail_captured &= tails;
        Ok(report)
    }

    /// Far upstream: ⟨t(x_f)⟩ of the transmitted packet minus ⟨t(x_i)⟩ of the incident one.
    ///
    /// Components: `phase_time_average`, `amplitude_slope_variance`
    /// (ħ²⟨(∂|A_T|/∂E)²⟩_E/⟨|A_T|²⟩_E) and `barrier_excess_variance`
    /// (D t(x_f) minus the free packet's D t(x_f)).
    pub fn asymptotic_transmission(&self, markers: RegionMarkers) -> Result<DurationReport> {
        let pot = self.potential();
        markers.check_transmission(pot)?;
        let p = self.packet();
        let reference = pot.left_edge().unwrap_or(0.0);
        let need = 10.0 * pot.total_width().max(1.0 / p.delta_k());
        if reference - markers.x_i < need {
            return Err(contract(format!(
                "asymptotic transmission needs x_i at least {need} Å upstream of the barrier, got {}",
                markers.x_i
            )));
        }
        let (sf, si, free_sf) = (self.series(markers.x_f)?, self.incident_series(markers.x_i)?, self.incident_series(markers.x_f)?);
        let tf = mean_time(&sf, Sign::Total)?;
        let ti = mean_time(&si, Sign::Total)?;
        let free_f = mean_time(&free_sf, Sign::Total)?;
        let phase = self.phase_time_average(markers)?;
        let slope_var = self.amplitude_slope_variance()?;
        Ok(DurationReport::new(
            DurationKind::AsymptoticTransmission,
            markers,
            tf.mean - ti.mean,
            tf.variance + ti.variance,
            named(&[
                ("t_T(x_f)", tf.mean),
                ("t_in(x_i)", ti.mean),
                ("phase_time_average", phase),
                ("amplitude_slope_variance", slope_var),
                ("barrier_excess_variance", tf.variance - free_f.variance),
            ]),
        )
        .with_tails(&[&sf, &si, &free_sf]))
    }

    /// ħ²⟨(∂|A_T|/∂E)²⟩_E / ⟨|A_T|²⟩_E with the incident weight.
    pub fn amplitude_slope_variance(&self) -> Result<f64> {
        let pot = self.potential();
        let p = self.packet();
        let units = *p.units();
        let num = energy_average(pot, p, EnergyWeight::Incident, |e| {
            let d = dde_abs(
                |x| crate::scattering::solve_with(pot, x, &units).map_or(f64::NAN, |s| s.transmission().sqrt()),
                e,
                1e-5 * e,
                true,
            )?;
            Ok(d * d)
        })?;
        let den = energy_average(pot, p, EnergyWeight::Incident, |e| {
            Ok(crate::scattering::solve_with(pot, e, &units)?.transmission())
        })?;
        Ok(units.hbar * units.hbar * num / den)
    }

    /// Transmission duration with only the incident flux counted at x_i.
    ///
    /// Components: `phase_time_average` for comparison.
    pub fn projected_transmission(&self, markers: RegionMarkers) -> Result<DurationReport> {
        markers.check_transmission(self.potential())?;
        let (sf, si) = (self.series(markers.x_f)?, self.incident_series(markers.x_i)?);
        let tf = mean_time(&sf, Sign::Plus)?;
        let ti = mean_time(&si, Sign::Total)?;
        let phase = self.phase_time_average(markers)?;
        Ok(DurationReport::new(
            DurationKind::Transmission,
            markers,
            tf.mean - ti.mean,
            tf.variance + ti.variance,
            named(&[("t_plus(x_f)", tf.mean), ("t_in(x_i)", ti.mean), ("phase_time_average", phase)]),
        )
        .with_tails(&[&sf, &si]))
    }

    pub fn causality_check(&self, x_f: f64, variant: CausalityVariant) -> Result<CausalityReport> {
        let pot = self.potential();
        if let CausalityVariant::Effective { x_i } = variant {
            let si = mean_time(&self.series(x_i)?, Sign::Plus)?;
            let sf = mean_time(&self.series(x_f)?, Sign::Plus)?;
            let margin = sf.mean + sf.std_dev - (si.mean - si.std_dev);
            return Ok(CausalityReport {
                variant,
                passed: margin >= 0.0,
                applicable: true,
                margin,
                naive_peak_delay: f64::NAN,
                detail: format!("mean duration {} fs", sf.mean - si.mean),
            });
        }
        if let Some(r) = pot.right_edge() {
            if x_f < r {
                return Err(contract(format!("causality needs x_f ≥ {r}, got {x_f}")));
            }
        }
        let fin = self.series(x_f)?;
        let inc = self.incident_series(x_f)?;
        let grid = self.common_grid(&[&fin, &inc])?;
        let fin = flux_on_grid(&self.eval, x_f, &grid)?;
        let inc = flux_on_grid(&self.free, x_f, &grid)?;
        let m_in = inc.plus_mass();
        let naive_peak_delay = mean_time(&fin, Sign::Plus)?.mean - mean_time(&inc, Sign::Plus)?.mean;
        match variant {
            CausalityVariant::Integral => {
                let d: Vec<f64> = inc.j_plus.iter().zip(&fin.j_plus).map(|(a, b)| a - b).collect();
                let h = grid.uniform_step().unwrap_or(0.0);
                let (mut run, mut min) = (0.0f64, 0.0f64);
                for w in d.windows(2) {
                    run += 0.5 * h * (w[0] + w[1]);
                    min = min.min(run);
                }
                let margin = min / m_in;
                Ok(CausalityReport {
                    variant,
                    passed: margin >= -INTEGRAL_TOL,
                    applicable: true,
                    margin,
                    naive_peak_delay,
                    detail: format!("final running integral {}", run / m_in),
                })
            }
            CausalityVariant::Delay => self.delay_variant(x_f, &grid, &fin, &inc, naive_peak_delay),
            CausalityVariant::Effective { .. } => unreachable!(),
        }
    }

    fn delay_variant(
        &self,
        x_f: f64,
        grid: &Grid1D,
        fin: &FluxSeries,
        inc: &FluxSeries,
        naive_peak_delay: f64,
    ) -> Result<CausalityReport> {
        let peak_in = inc.j_plus.iter().copied().fold(0.0, f64::max);
        let peak_fin = fin.j_plus.iter().copied().fold(0.0, f64::max);
        let d: Vec<f64> = inc.j_plus.iter().zip(&fin.j_plus).map(|(a, b)| a - b).collect();
        let report = |t0: f64, applicable: bool, detail: String| -> Result<CausalityReport> {
            if !applicable {
                return Ok(CausalityReport {
                    variant: CausalityVariant::Delay,
                    passed: false,
                    applicable,
                    margin: f64::NAN,
                    naive_peak_delay,
                    detail,
                });
            }
            let (lo, hi) = (grid.lower(), t0.min(grid.upper()));
            let n = ((hi - lo) / grid.uniform_step().unwrap_or(self.dt())).ceil() as usize + 1;
            let g = Grid1D::trapezoid(lo, hi, n.max(2))?;
            let f = flux_on_grid(&self.eval, x_f, &g)?;
            let i = flux_on_grid(&self.free, x_f, &g)?;
            let margin = moments(&g, &f.j_plus).1 - moments(&g, &i.j_plus).1;
            Ok(CausalityReport {
                variant: CausalityVariant::Delay,
                passed: margin >= 0.0,
                applicable,
                margin,
                naive_peak_delay,
                detail,
            })
        };
        if d.iter().all(|v| v.abs() <= COINCIDENT_TOL * peak_in) {
            return report(grid.upper(), true, "envelopes coincide".into());
        }
        let p = fin.j_plus.iter().enumerate().fold(0, |b, (i, v)| if *v > fin.j_plus[b] { i } else { b });
        let significant = |i: usize| inc.j_plus[i] > SIGNIFICANT * peak_in && fin.j_plus[i] > SIGNIFICANT * peak_fin;
        for i in p..d.len() - 1 {
            if significant(i) && significant(i + 1) && d[i] != 0.0 && d[i].signum() != d[i + 1].signum() {
                let fin_f = self.eval.spatial_factors(x_f);
                let inc_f = self.free.spatial_factors(x_f);
                let diff = |t: f64| {
                    let (a, b) = self.free.combine(&inc_f, t);
                    let (c, e) = self.eval.combine(&fin_f, t);
                    self.free.flux_from(a, b).max(0.0) - self.eval.flux_from(c, e).max(0.0)
                };
                let (mut lo, mut hi) = (grid.points()[i], grid.points()[i + 1]);
                let s_lo = diff(lo).signum();
                for _ in 0..60 {
                    let m = 0.5 * (lo + hi);
                    if diff(m).signum() == s_lo {
                        lo = m;
                    } else {
                        hi = m;
                    }
                }
                let t0 = 0.5 * (lo + hi);
                return report(t0, true, format!("envelopes cross at t0 = {t0} fs"));
            }
        }
        report(f64::NAN, false, "envelopes do not cross after the final-flux peak".into())
    }
}

const INTEGRAL_TOL: f64 = 1e-9;
const COINCIDENT_TOL: f64 = 1e-12;
const SIGNIFICANT: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CausalityVariant {
    /// ∫_{−∞}^t [J_in(x_f) − J_fin,+(x_f)] dτ ≥ 0 for every t.
    Integral,
    /// Forward-front means truncated at the post-peak envelope crossing t₀.
    Delay,
    /// t^eff_f − t^eff_i = ⟨t(x_f)⟩ + σ_f − ⟨t(x_i)⟩ + σ_i ≥ 0.
    Effective { x_i: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CausalityReport {
    pub variant: CausalityVariant,
    pub passed: bool,
    pub applicable: bool,
    /// Integral: min_t of the running integral over ∫J_in; delay: the mean
    /// difference; effective: t^eff_f − t^eff_i. NaN when not applicable.
    pub margin: f64,
    /// ⟨t₊(x_f)⟩ with the barrier minus the free ⟨t(x_f)⟩; NaN for the effective variant.
    pub naive_peak_delay: f64,
    pub detail: String,
}

pub fn duration(
    pot: &PiecewisePotential,
    packet: &SpectralPacket,
    kind: DurationKind,
    markers: RegionMarkers,
) -> Result<DurationReport> {
    FluxAnalysis::new(pot, packet)?.duration(kind, markers)
}

pub fn dwell(pot: &PiecewisePotential, packet: &SpectralPacket, markers: RegionMarkers) -> Result<DurationReport> {
    FluxAnalysis::new(pot, packet)?.dwell(markers)
}

pub fn dwell_decomposition(
    pot: &PiecewisePotential,
    packet: &SpectralPacket,
    markers: RegionMarkers,
) -> Result<DurationReport> {
    FluxAnalysis::new(pot, packet)?.dwell_decomposition(markers)
}

pub fn asymptotic_transmission(
    pot: &PiecewisePotential,
    packet: &SpectralPacket,
    markers: RegionMarkers,
) -> Result<DurationReport> {
    FluxAnalysis::new(pot, packet)?.asymptotic_transmission(markers)
}

pub fn causality_check(
    pot: &PiecewisePotential,
    packet: &SpectralPacket,
    x_f: f64,
    variant: CausalityVariant,
) -> Result<CausalityReport> {
    FluxAnalysis::new(pot, packet)?.causality_check(x_f, variant)
}
