//! Two equal rectangular barriers on (0, a) and (L, L + a).
//!
//! Region conventions:
//! I `e^{ikx} + A_R e^{−ikx}`; II `α e^{−χx} + β e^{χx}`;
//! III `A_T[e^{ikx} + A′_R e^{−ikx}]`; IV `A_T[α′ e^{−χ(x−L)} + β′ e^{χ(x−L)}]`;
//! V `A_T A′_T e^{ikx}`.

use num_complex::Complex64;

use crate::diff::darg_de;
use crate::error::{contract, Error, Result};
use crate::potential::PiecewisePotential;
use crate::scattering::{solve_from_right, solve_with};
use crate::units::UnitSystem;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Opaque closed forms are refused below this χa.
pub const OPAQUE_MIN: f64 = 5.0;
/// Opaque closed forms carry a warning below this χa.
pub const OPAQUE_WARN: f64 = 8.0;
/// |2χk cos kd + (χ²−k²) sin kd| below this fraction of χk counts as on resonance.
pub const RESONANCE_DENOMINATOR_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoubleBarrierSolution {
    pub energy: f64,
    pub k: f64,
    pub chi: f64,
    pub a_r: Complex64,
    /// Amplitude of the right-moving wave in the cavity, region III.
    pub a_t: Complex64,
    pub a_r_prime: Complex64,
    pub a_t_prime: Complex64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub alpha_prime: Complex64,
    pub beta_prime: Complex64,
    /// The real factor A in A_T A′_T e^{ik(L+a)} = −e^{−2χa}·4iχk/(χ−ik)²·A.
    pub a_factor: Complex64,
    /// δ = arg(A′_R e^{−2ikL}).
    pub delta: f64,
    pub on_resonance: bool,
    pub opaque_warning: bool,
}

impl DoubleBarrierSolution {
    /// Amplitude of the outgoing wave in region V.
    pub fn total_transmission(&self) -> Complex64 {
        self.a_t * self.a_t_prime
    }
}

fn check(v0: f64, a: f64, l: f64, energy: f64) -> Result<()> {
    if !(energy > 0.0 && energy < v0) || !(a > 0.0) || !(l >= a) {
        return Err(contract(format!(
            "double barrier needs 0 < E < V0, a > 0, L ≥ a (E = {energy}, V0 = {v0}, a = {a}, L = {l})"
        )));
    }
    Ok(())
}

/// 2χk cos k(L−a) + (χ²−k²) sin k(L−a); resonances sit near its zeros.
pub fn resonance_denominator(v0: f64, a: f64, l: f64, energy: f64, units: &UnitSystem) -> f64 {
    let k = units.wavenumber(energy);
    let chi = units.kappa(v0, energy);
    let d = l - a;
    2.0 * chi * k * (k * d).cos() + (chi * chi - k * k) * (k * d).sin()
}

/// The closed-form opaque prefactor −e^{−2χa}·4iχk/(χ−ik)².
fn opaque_prefactor(k: f64, chi: f64, a: f64) -> Complex64 {
    let d = Complex64::new(chi, -k);
    -(-2.0 * chi * a).exp() * 4.0 * I * chi * k / (d * d)
}

/// All eight coefficients by explicit matching at the four joints.
///
/// The matching is carried from region V leftwards with e^{χa} factors kept
/// as separate logarithmic scales, so opaque barriers do not overflow.
pub fn solve_exact(v0: f64, a: f64, l: f64, energy: f64, units: &UnitSystem) -> Result<DoubleBarrierSolution> {
    check(v0, a, l, energy)?;
    let k = units.wavenumber(energy);
    let chi = units.kappa(v0, energy);
    let ik = I * k;
    let r = ik / chi;
    let e = |x: f64| (ik * x).exp();
    let g = (-2.0 * chi * a).exp();

    // Region V amplitude set to 1; P = A_T α′, Q = A_T β′.
    // Everything in regions III and IV is scaled by e^{−χa}.
    let p = 0.5 * (ONE - r) * e(l + a);
    let q = 0.5 * (ONE + r) * e(l + a) * g;
    // Region III at x = L: U = A_T, W = A_T A′_R.
    let s = p + q;
    let dd = (q - p) / r;
    let u = 0.5 * (s + dd) * e(-l);
    let w = 0.5 * (s - dd) * e(l);
    // Region II at x = a; α carries a further e^{−χa} scale, β is relative to it.
    let psi_a = u * e(a) + w * e(-a);
    let dpsi_a = r * (u * e(a) - w * e(-a));
    let alpha_s = 0.5 * (psi_a - dpsi_a);
    let beta_s = 0.5 * (psi_a + dpsi_a) * g;
    // Region I at x = 0.
    let psi0 = alpha_s + beta_s;
    let dpsi0 = (beta_s - alpha_s) / r;
    let inc = 0.5 * (psi0 + dpsi0);
    let refl = 0.5 * (psi0 - dpsi0);
    if inc.norm() == 0.0 || !inc.re.is_finite() {
        return Err(Error::NonFinite { energy });
    }
    // True values: region I ∝ e^{2χa}·(scaled), region II same, III and IV ∝ e^{χa}.
    let a_r = refl / inc;
    let alpha = alpha_s / inc;
    let beta = beta_s / inc;
    let a_t = u / inc * g.sqrt();
    let a_r_prime = w / u;
    let alpha_prime = p / u;
    let beta_prime = q / u;
    let a_t_prime = g.sqrt() / u;
    let total = a_t * a_t_prime;
    let a_factor = total * e(l + a) / opaque_prefactor(k, chi, a);
    let delta = (a_r_prime * e(-2.0 * l)).arg();
    let den = resonance_denominator(v0, a, l, energy, units);
    Ok(DoubleBarrierSolution {
        energy,
        k,
        chi,
        a_r,
        a_t,
        a_r_prime,
        a_t_prime,
        alpha,
        beta,
        alpha_prime,
        beta_prime,
        a_factor,
        delta,
        on_resonance: den.abs() < RESONANCE_DENOMINATOR_TOL * chi * k,
        opaque_warning: chi * a < OPAQUE_WARN,
    })
}

/// Closed-form coefficients in the opaque limit χa ≫ 1.
pub fn opaque_coefficients(v0: f64, a: f64, l: f64, energy: f64, units: &UnitSystem) -> Result<DoubleBarrierSolution> {
    check(v0, a, l, energy)?;
    let k = units.wavenumber(energy);
    let chi = units.kappa(v0, energy);
    if chi * a < OPAQUE_MIN {
        return Err(contract(format!("opaque limit needs χa ≥ {OPAQUE_MIN}, got {}", chi * a)));
    }
    let ik = I * k;
    let e = |x: f64| (ik * x).exp();
    let g = (-2.0 * chi * a).exp();
    let m = ik - chi;
    let alpha_prime = e(l) * 2.0 * ik / m;
    let beta_prime = e(l) * g * (-2.0 * ik * (ik + chi)) / (m * m);
    let a_r_prime = e(2.0 * l) * (ik + chi) / m;
    let a_t_prime = (-chi * a).exp() * e(-a) * (-4.0 * ik * chi) / (m * m);
    let den = resonance_denominator(v0, a, l, energy, units);
    let a_factor = Complex64::new(2.0 * chi * k / den, 0.0);
    let total_shifted = opaque_prefactor(k, chi, a) * a_factor;
    let total = total_shifted * e(-(l + a));
    let a_t = total / a_t_prime;
    // Barrier II: growing wave fixed by region III through the joint at x = a,
    // decaying wave by region I.
    let psi_a = a_t * (e(a) + a_r_prime * e(-a));
    let dpsi_a = a_t * ik * (e(a) - a_r_prime * e(-a));
    let beta = 0.5 * (psi_a + dpsi_a / chi) * (-chi * a).exp();
    let alpha = 2.0 * ik / (ik - chi);
    let a_r = (ik + chi) / (ik - chi);
    Ok(DoubleBarrierSolution {
        energy,
        k,
        chi,
        a_r,
        a_t,
        a_r_prime,
        a_t_prime,
        alpha,
        beta,
        alpha_prime,
        beta_prime,
        a_factor,
        delta: ((ik + chi) / m).arg(),
        on_resonance: den.abs() < RESONANCE_DENOMINATOR_TOL * chi * k,
        opaque_warning: chi * a < OPAQUE_WARN,
    })
}

/// Total phase time across (0, L + a) by two routes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseTimeTotal {
    /// ħ d/dE arg[−4ikχ/(ik−χ)²].
    pub closed_form: f64,
    /// ħ d/dE arg[A_T A′_T e^{ik(L+a)}] from exact matching.
    pub exact: f64,
    pub on_resonance: bool,
}

/// ħ d/dE arg[−4ikχ/(ik−χ)²], independent of a and L.
pub fn opaque_phase_time(v0: f64, energy: f64, units: &UnitSystem, rel_step: f64) -> Result<f64> {
    let f = |e: f64| -> Result<Complex64> {
        if !(e > 0.0 && e < v0) {
            return Err(contract("opaque phase needs 0 < E < V0"));
        }
        let k = units.wavenumber(e);
        let chi = units.kappa(v0, e);
        let m = Complex64::new(-chi, k);
        Ok((-4.0 * I * k * chi / (m * m)).ln())
    };
    Ok(units.hbar * darg_de(f, energy, rel_step * energy, true)?)
}

/// Exact total phase time with an absolute energy step `h`.
pub fn exact_phase_time(v0: f64, a: f64, l: f64, energy: f64, h: f64, units: &UnitSystem) -> Result<f64> {
    let f = |e: f64| -> Result<Complex64> {
        let s = solve_exact(v0, a, l, e, units)?;
        let k = units.wavenumber(e);
        Ok((s.total_transmission() * (I * k * (l + a)).exp()).ln())
    };
    Ok(units.hbar * darg_de(f, energy, h, true)?)
}

pub fn phase_time_total(v0: f64, a: f64, l: f64, energy: f64, units: &UnitSystem) -> Result<PhaseTimeTotal> {
    let sol = solve_exact(v0, a, l, energy, units)?;
    let closed_form = opaque_phase_time(v0, energy, units, 1e-5)?;
    // A step well inside the nearest resonance width keeps the exact route resolved.
    let mut h = 1e-5 * energy;
    if let Ok(res) = find_resonances(v0, a, l, (energy - 50.0 * h, energy + 50.0 * h).clamp_to(v0), units) {
        for r in res {
            if let Some(gamma) = r.gamma {
                h = h.min(1e-3 * gamma);
            }
        }
    }
    let exact = exact_phase_time(v0, a, l, energy, h, units)?;
    Ok(PhaseTimeTotal {
        closed_form,
        exact,
        on_resonance: sol.on_resonance,
    })
}

trait ClampRange {
    fn clamp_to(self, v0: f64) -> (f64, f64);
}

impl ClampRange for (f64, f64) {
    fn clamp_to(self, v0: f64) -> (f64, f64) {
        (self.0.max(1e-6 * v0), self.1.min(v0 * (1.0 - 1e-9)))
    }
}

/// A transmission resonance of the cavity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    pub energy: f64,
    /// Half width at half maximum of |A_T A′_T|²; None when narrower than 1e-12 eV.
    pub gamma: Option<f64>,
    pub peak_transmission: f64,
}

/// Round-trip phase of a wave in the cavity, arg(r₂ r₁′), wrapped to (−π, π].
///
/// r₂ reflects a right-moving cavity wave at the second barrier and r₁′ a
/// left-moving one at the first; both are taken in the global x origin.
pub fn round_trip_phase(v0: f64, a: f64, l: f64, energy: f64, units: &UnitSystem) -> Result<f64> {
    let second = PiecewisePotential::rectangular(v0, a)?.shifted(l);
    let r2 = solve_with(&second, energy, units)?.a_r;
    let first = PiecewisePotential::rectangular(v0, a)?;
    let r1p = solve_from_right(&first, energy, units)?.a_r;
    Ok((r2 * r1p).arg())
}

fn total_transmission(v0: f64, a: f64, l: f64, e: f64, units: &UnitSystem) -> f64 {
    solve_exact(v0, a, l, e, units).map_or(0.0, |s| s.total_transmission().norm_sqr())
}

/// Transmission peaks in `e_range`, located by zeros of the round-trip phase
/// and refined by golden-section search on |A_T A′_T|².
pub fn find_resonances(v0: f64, a: f64, l: f64, e_range: (f64, f64), units: &UnitSystem) -> Result<Vec<Resonance>> {
    let (lo, hi) = e_range;
    if !(lo > 0.0 && hi < v0 && hi > lo) {
        return Err(contract(format!("resonance search range ({lo}, {hi}) must lie inside (0, V0)")));
    }
    if l == a {
        return Ok(Vec::new());
    }
    let n = 400usize.max((((l - a) * units.wavenumber(hi)) * 8.0).ceil() as usize);
    let phase = |e: f64| round_trip_phase(v0, a, l, e, units);
    let mut out = Vec::new();
    let mut e_prev = lo;
    let mut p_prev = phase(lo)?;
    for i in 1..=n {
        let e_cur = lo + (hi - lo) * i as f64 / n as f64;
        let p_cur = phase(e_cur)?;
        // A genuine zero, not the ±π branch jump.
        if p_prev.signum() != p_cur.signum() && p_prev.abs() < 1.5 && p_cur.abs() < 1.5 {
            let (mut a0, mut b0, mut pa) = (e_prev, e_cur, p_prev);
            for _ in 0..200 {
                let m = 0.5 * (a0 + b0);
                let pm = phase(m)?;
                if pm.signum() == pa.signum() {
                    a0 = m;
                    pa = pm;
                } else {
                    b0 = m;
                }
                if b0 - a0 < 1e-15 * m {
                    break;
                }
            }
            let guess = 0.5 * (a0 + b0);
            out.push(refine_peak(v0, a, l, guess, (e_prev, e_cur), units));
        }
        e_prev = e_cur;
        p_prev = p_cur;
    }
    Ok(out)
}

fn refine_peak(v0: f64, a: f64, l: f64, guess: f64, bracket: (f64, f64), units: &UnitSystem) -> Resonance {
    let t = |e: f64| total_transmission(v0, a, l, e, units);
    // Shrink the bracket around the phase zero until |T|² is unimodal in it.
    let mut half = (bracket.1 - bracket.0).min(guess * 1e-2);
    let peak_guess = t(guess);
    while half > guess * 1e-15 && t(guess - half).max(t(guess + half)) > 0.5 * peak_guess {
        half *= 0.5;
    }
    let mut lo = (guess - 4.0 * half).max(bracket.0.min(guess - half));
    let mut hi = (guess + 4.0 * half).min(bracket.1.max(guess + half));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let (mut f1, mut f2) = (t(x1), t(x2));
    for _ in 0..200 {
        if hi - lo < 1e-15 * hi {
            break;
        }
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = t(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = t(x1);
        }
    }
    let e_r = 0.5 * (lo + hi);
    let peak = t(e_r);
    let half_point = |dir: f64| -> Option<f64> {
        let mut step = half.max(1e-14 * e_r);
        let mut inner = e_r;
        let mut outer = e_r + dir * step;
        let mut guard = 0;
        while t(outer) > 0.5 * peak {
            inner = outer;
            step *= 2.0;
            outer = e_r + dir * step;
            guard += 1;
            if guard > 200 || outer <= 0.0 || outer >= v0 {
                return None;
            }
        }
        for _ in 0..200 {
            let m = 0.5 * (inner + outer);
            if t(m) > 0.5 * peak {
                inner = m;
            } else {
                outer = m;
            }
            if (outer - inner).abs() < 1e-15 * e_r {
                break;
            }
        }
        Some((0.5 * (inner + outer) - e_r).abs())
    };
    let gamma = match (half_point(-1.0), half_point(1.0)) {
        (Some(l), Some(r)) => Some(0.5 * (l + r)),
        _ => None,
    }
    .filter(|g| *g >= 1e-12);
    Resonance {
        energy: e_r,
        gamma,
        peak_transmission: peak,
    }
}
