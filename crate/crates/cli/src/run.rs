//! Scan expansion and per-observable row computation.

use rayon::prelude::*;
use tuntime::double_barrier::{phase_time_total, solve_exact, OPAQUE_WARN as DB_OPAQUE_WARN};
use tuntime::emguide::{cutoff_wavelength, map_to_barrier, photon_phase_time, propagation_constant, Propagation, WaveguideSpec};
use tuntime::flux_times::{CausalityVariant, DurationKind, FluxAnalysis};
use tuntime::stationary_times::{bl_time, dwell_time_stationary, phase_time, two_phase_times};
use tuntime::wavepacket::{gaussian_packet, Cutoff, CutoffForm, SpectralPacket};
use tuntime::{Error, PiecewisePotential, RegionMarkers, UnitSystem};

use crate::config::{Observable, PacketSpec, PotentialSpec, Scenario, WaveguideBlock};

/// κa below which a single barrier is not treated as opaque.
const SINGLE_OPAQUE_WARN: f64 = 8.0;

/// One scan point with every parameter resolved.
#[derive(Debug, Clone)]
pub struct Point {
    pub values: Vec<f64>,
    pub potential: PotentialSpec,
    pub energy: f64,
    pub delta_k: Option<f64>,
    pub waveguide: Option<WaveguideBlock>,
}

pub fn expand(s: &Scenario) -> Vec<Point> {
    let mut points = vec![Point {
        values: Vec::new(),
        potential: s.potential.clone(),
        energy: s.energy,
        delta_k: None,
        waveguide: s.waveguide,
    }];
    for axis in &s.scan {
        let vals = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                vals.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.values.push(v);
                    match axis.name.as_str() {
                        "energy" => q.energy = v,
                        "delta_k" => q.delta_k = Some(v),
                        n if n.starts_with("waveguide.") => {
                            if let Some(w) = q.waveguide.as_mut() {
                                w.set(n, v);
                            }
                        }
                        n => q.potential.set(n, v),
                    }
                    q
                })
            })
            .collect();
    }
    points
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Flags {
    pub tail_captured: bool,
    pub on_resonance: bool,
    pub opaque_warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Status {
    Ok,
    /// The parameters at this row are outside an operation's domain.
    Skipped(String),
    /// A numerical routine failed.
    Failed(String),
}

#[derive(Debug, Clone)]
pub struct Row {
    pub keys: Vec<f64>,
    pub values: Vec<f64>,
    pub flags: Flags,
    pub status: Status,
}

impl Row {
    pub fn warns(&self) -> bool {
        !self.flags.tail_captured || self.flags.on_resonance || self.flags.opaque_warning || self.status != Status::Ok
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub observable: Observable,
    pub key_columns: Vec<String>,
    pub value_columns: Vec<&'static str>,
    pub rows: Vec<Row>,
}

pub fn value_columns(o: Observable) -> &'static [&'static str] {
    match o {
        Observable::PhaseTime => &["tau_phase_fs"],
        Observable::BlTime => &["tau_bl_fs"],
        Observable::Dwell => &["tau_dwell_fs"],
        Observable::OrTimes => &[
            "tau_tun_fs",
            "t_plus_entry_fs",
            "t_plus_exit_fs",
            "phase_time_avg_fs",
            "tau_dwell_fs",
            "transmission",
            "reflection",
            "reflection_share_entry",
        ],
        Observable::Causality => &[
            "integral_passed",
            "integral_margin",
            "naive_peak_delay_fs",
            "delay_applicable",
            "delay_passed",
            "delay_margin_fs",
            "effective_passed",
            "effective_margin_fs",
        ],
        Observable::TwoPhase => &["tau_phi2_fs", "tau_z_fs"],
        Observable::DoubleBarrierScan => &["l", "tau_total_fs", "tau_opaque_fs", "delta_rad", "transmission"],
        Observable::HartmanScan => &["kappa_a", "tau_phase_fs", "tau_bl_fs", "tau_dwell_fs"],
        Observable::Waveguide => &["lambda_c_cm", "kappa_per_cm", "l_kappa", "tau_fs", "v_eff_cm_s", "superluminal", "tau_mapped_fs"],
    }
}

type Computed = tuntime::Result<(Vec<f64>, Flags)>;

fn units() -> UnitSystem {
    UnitSystem::electron()
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn stationary_flags(pot: &PiecewisePotential, energy: f64) -> Flags {
    let u = units();
    let opacity: f64 = pot
        .segments()
        .iter()
        .filter(|s| energy < s.height)
        .map(|s| u.kappa(s.height, energy) * s.width())
        .sum();
    Flags {
        tail_captured: true,
        on_resonance: false,
        opaque_warning: opacity < SINGLE_OPAQUE_WARN,
    }
}

fn stationary(o: Observable, p: &Point) -> Computed {
    let u = units();
    let pot = p.potential.build()?;
    let e = p.energy;
    let flags = stationary_flags(&pot, e);
    let values = match o {
        Observable::PhaseTime => vec![phase_time(&pot, e, &u)?],
        Observable::BlTime => vec![bl_time(&pot, e, &u)?],
        Observable::Dwell => vec![dwell_time_stationary(&pot, e, RegionMarkers::barrier_edges(&pot)?, &u)?],
        Observable::TwoPhase => {
            let (t2, tz) = two_phase_times(&pot, e, &u)?;
            vec![t2, tz]
        }
        Observable::HartmanScan => {
            let PotentialSpec::Single { v0, a } = p.potential else {
                unreachable!("validated as single")
            };
            let m = RegionMarkers::barrier_edges(&pot)?;
            vec![
                u.kappa(v0, e) * a,
                phase_time(&pot, e, &u)?,
                bl_time(&pot, e, &u)?,
                dwell_time_stationary(&pot, e, m, &u)?,
            ]
        }
        Observable::DoubleBarrierScan => {
            let PotentialSpec::Double { v0, a, l } = p.potential else {
                unreachable!("validated as double")
            };
            let t = phase_time_total(v0, a, l, e, &u)?;
            let s = solve_exact(v0, a, l, e, &u)?;
            let flags = Flags {
                tail_captured: true,
                on_resonance: t.on_resonance || s.on_resonance,
                opaque_warning: u.kappa(v0, e) * a < DB_OPAQUE_WARN,
            };
            return Ok((vec![l, t.exact, t.closed_form, s.delta, s.total_transmission().norm_sqr()], flags));
        }
        _ => unreachable!("not a stationary observable"),
    };
    Ok((values, flags))
}

fn waveguide(p: &Point) -> Computed {
    let u = units();
    let w = p.waveguide.expect("validated waveguide block");
    let spec = WaveguideSpec::new(w.a, w.b, w.m, w.n, w.l, w.lambda)?;
    let lc = cutoff_wavelength(&spec)?;
    let kappa = match propagation_constant(&spec)? {
        Propagation::Evanescent { kappa } => kappa,
        other => return Err(Error::Contract(format!("mode is not evanescent ({other:?})"))),
    };
    let ph = photon_phase_time(&spec)?;
    let mapped = map_to_barrier(&spec, &u)?.photon_phase_time(&u)?;
    let flags = Flags {
        tail_captured: true,
        on_resonance: false,
        opaque_warning: ph.opaque_warning,
    };
    Ok((
        vec![lc, kappa, w.l * kappa, ph.tau, ph.effective_velocity, flag(ph.superluminal), mapped],
        flags,
    ))
}

/// Packet from its spec, with Ē and Δk optionally taken from the scan point.
fn build_packet(spec: &PacketSpec, energy: Option<f64>, delta_k: Option<f64>, pot: &PiecewisePotential) -> tuntime::Result<SpectralPacket> {
    let u = units();
    let k_bar = energy.map_or_else(|| spec.k_bar(&u), |e| u.wavenumber(e));
    let cutoff = match (spec.cutoff, pot.min_barrier_height()) {
        (true, Some(v0)) => {
            if !(u.energy(k_bar) < v0) {
                return Err(Error::Contract(format!("mean energy {} eV is not below the barrier", u.energy(k_bar))));
            }
            Some(Cutoff {
                v0,
                form: CutoffForm::SubBarrier,
            })
        }
        _ => None,
    };
    Ok(gaussian_packet(k_bar, delta_k.unwrap_or(spec.delta_k), spec.n_k, cutoff, &u)?.with_focus(-spec.standoff, 0.0))
}

fn packet_row(o: Observable, p: &Point, spec: &PacketSpec, energy_scanned: bool) -> Computed {
    let pot = p.potential.build()?;
    let packet = build_packet(spec, energy_scanned.then_some(p.energy), p.delta_k, &pot)?;
    let fa = FluxAnalysis::new(&pot, &packet)?;
    let m = RegionMarkers::barrier_edges(&pot)?;
    let opaque = stationary_flags(&pot, units().energy(packet.k_bar())).opaque_warning;
    match o {
        Observable::OrTimes => {
            let tun = fa.duration(DurationKind::Tunnelling, m)?;
            let dec = fa.dwell_decomposition(m)?;
            let get = |r: &tuntime::flux_times::DurationReport, n: &str| r.component(n).unwrap_or(f64::NAN);
            let flags = Flags {
                tail_captured: tun.tail_captured && dec.tail_captured,
                on_resonance: false,
                opaque_warning: opaque,
            };
            Ok((
                vec![
                    tun.mean,
                    get(&tun, "t_plus(x_i)"),
                    get(&tun, "t_plus(x_f)"),
                    fa.phase_time_average(m)?,
                    dec.mean,
                    get(&dec, "T_E"),
                    get(&dec, "R_E"),
                    get(&dec, "r(x_i)"),
                ],
                flags,
            ))
        }
        Observable::Causality => {
            let int = fa.causality_check(m.x_f, CausalityVariant::Integral)?;
            let del = fa.causality_check(m.x_f, CausalityVariant::Delay)?;
            let eff = fa.causality_check(m.x_f, CausalityVariant::Effective { x_i: m.x_i })?;
            let flags = Flags {
                tail_captured: true,
                on_resonance: false,
                opaque_warning: opaque,
            };
            Ok((
                vec![
                    flag(int.passed),
                    int.margin,
                    int.naive_peak_delay,
                    flag(del.applicable),
                    flag(del.passed),
                    del.margin,
                    flag(eff.passed),
                    eff.margin,
                ],
                flags,
            ))
        }
        _ => unreachable!("not a packet observable"),
    }
}

fn to_row(keys: Vec<f64>, width: usize, r: Computed) -> Row {
    match r {
        Ok((values, flags)) => Row {
            keys,
            values,
            flags,
            status: Status::Ok,
        },
        Err(e) => Row {
            keys,
            values: vec![f64::NAN; width],
            flags: Flags {
                tail_captured: true,
                ..Flags::default()
            },
            status: match e {
                Error::Contract(msg) => Status::Skipped(msg),
                other => Status::Failed(other.to_string()),
            },
        },
    }
}

/// Computes one table; rows follow scan order whatever the completion order.
pub fn table(s: &Scenario, o: Observable, points: &[Point]) -> Table {
    let width = value_columns(o).len();
    let mut key_columns: Vec<String> = s.scan.iter().map(|a| a.name.clone()).collect();
    let energy_scanned = s.scan.iter().any(|a| a.name == "energy");
    let rows: Vec<Row> = if o.uses_packets() {
        key_columns.extend(["packet".to_string(), "energy_bar_ev".to_string(), "delta_k".to_string()]);
        let u = units();
        let jobs: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (0..s.packets.len()).map(move |j| (i, j))).collect();
        jobs.par_iter()
            .map(|&(i, j)| {
                let p = &points[i];
                let spec = &s.packets[j];
                let e_bar = if energy_scanned { p.energy } else { spec.mean_energy(&u) };
                let mut keys = p.values.clone();
                keys.extend([j as f64, e_bar, p.delta_k.unwrap_or(spec.delta_k)]);
                to_row(keys, width, packet_row(o, p, spec, energy_scanned))
            })
            .collect()
    } else {
        if o.uses_energy() && !energy_scanned {
            key_columns.push("energy".into());
        }
        points
            .par_iter()
            .map(|p| {
                let mut keys = p.values.clone();
                if o.uses_energy() && !energy_scanned {
                    keys.push(p.energy);
                }
                let r = if o == Observable::Waveguide { waveguide(p) } else { stationary(o, p) };
                to_row(keys, width, r)
            })
            .collect()
    };
    Table {
        observable: o,
        key_columns,
        value_columns: value_columns(o).to_vec(),
        rows,
    }
}
