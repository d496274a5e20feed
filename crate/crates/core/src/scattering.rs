//! Stationary scattering on piecewise-constant potentials.
//!
//! Inside region j the solution is written as
//! `ψ = F_j [e^{iq(x−x_j)} + ρ_j e^{−iq(x−x_j)}]`, referenced to the region's
//! left edge x_j. The reflection ratios ρ_j are built from the right, where
//! ρ = 0, and the amplitude ratios F_{j+1}/F_j are accumulated as complex
//! logarithms so that ln A_T stays finite for arbitrarily opaque barriers.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{contract, Error, Result};
use crate::potential::{PiecewisePotential, Region};
use crate::units::UnitSystem;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };
const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Energies within this fraction of max(E, |V|) of a segment height V are
/// shifted up by the same fraction.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Coefficients of the stationary state in one region.
///
/// `ψ = forward·e^{iq(x−x_start)} + backward·e^{−iq(x−x_start)}`. Below the
/// region's height q = iκ, so `forward` is the evanescent and `backward` the
/// anti-evanescent coefficient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionState {
    pub x_start: f64,
    pub x_end: f64,
    pub height: f64,
    pub q: Complex64,
    pub forward: Complex64,
    pub backward: Complex64,
}

impl RegionState {
    fn eval(&self, x: f64) -> (Complex64, Complex64) {
        let phase = I * self.q * (x - self.x_start);
        let f = self.forward * phase.exp();
        let b = self.backward * (-phase).exp();
        (f + b, I * self.q * (f - b))
    }
}

/// Left-incidence stationary state `e^{ikx} + A_R e^{−ikx}` → `A_T e^{ikx}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringSolution {
    /// Energy actually used, after any degeneracy shift.
    pub energy: f64,
    pub k: f64,
    pub a_t: Complex64,
    pub a_r: Complex64,
    /// ln A_T; its real part stays finite when |A_T| underflows.
    pub ln_a_t: Complex64,
    pub segment_coeffs: Vec<RegionState>,
    /// Set when E was within the relative [`DEGENERACY_TOL`] of a segment height.
    pub energy_shifted: bool,
    /// Whether the potential was mirror-symmetric about its centre.
    pub symmetric: bool,
}

fn wavenumber_in(units: &UnitSystem, energy: f64, height: f64) -> Complex64 {
    let d = (energy - height) / units.hbar2_over_2m;
    if d >= 0.0 {
        Complex64::new(d.sqrt(), 0.0)
    } else {
        Complex64::new(0.0, (-d).sqrt())
    }
}

fn shifted_energy(pot: &PiecewisePotential, energy: f64) -> (f64, bool) {
    let near = |e: f64| {
        pot.segments()
            .iter()
            .any(|s| (e - s.height).abs() < DEGENERACY_TOL * e.abs().max(s.height.abs()))
    };
    if near(energy) {
        let step = DEGENERACY_TOL * energy;
        let mut e = energy + step;
        while near(e) {
            e += step;
        }
        (e, true)
    } else {
        (energy, false)
    }
}

/// Solves for unit incidence from the left with the electron unit system.
pub fn solve(pot: &PiecewisePotential, energy: f64) -> Result<ScatteringSolution> {
    solve_with(pot, energy, &UnitSystem::default())
}

/// Solves for unit incidence from the left.
pub fn solve_with(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<ScatteringSolution> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(contract(format!("scattering needs E > 0, got {energy}")));
    }
    let (energy, energy_shifted) = shifted_energy(pot, energy);
    let k = units.wavenumber(energy);
    let kc = Complex64::new(k, 0.0);
    let regions: Vec<Region> = pot.regions();
    let symmetric = pot.is_symmetric();
    if regions.is_empty() {
        return Ok(ScatteringSolution {
            energy,
            k,
            a_t: ONE,
            a_r: ZERO,
            ln_a_t: ZERO,
            segment_coeffs: Vec::new(),
            energy_shifted,
            symmetric,
        });
    }

    let n = regions.len();
    let qs: Vec<Complex64> = regions.iter().map(|r| wavenumber_in(units, energy, r.height)).collect();
    let mut rho = vec![ZERO; n];
    // ln(F_{j+1}/F_j) for j = 0..n, where F_0 belongs to the incidence region
    // and F_{n+1} to the transmission region.
    let mut ln_ratio = vec![ZERO; n + 1];
    let mut q_next = kc;
    let mut rho_next = ZERO;
    for j in (0..n).rev() {
        let q = qs[j];
        let w = regions[j].x_end - regions[j].x_start;
        let a = q * (ONE + rho_next);
        let b = q_next * (ONE - rho_next);
        let den = a + b;
        if den.norm() == 0.0 {
            return Err(Error::NonFinite { energy });
        }
        rho[j] = (2.0 * I * q * w).exp() * (a - b) / den;
        ln_ratio[j + 1] = (2.0 * q).ln() + I * q * w - den.ln();
        q_next = q;
        rho_next = rho[j];
    }
    let a = kc * (ONE + rho_next);
    let b = q_next * (ONE - rho_next);
    let den = a + b;
    let rho0 = (a - b) / den;
    ln_ratio[0] = (2.0 * kc).ln() - den.ln();

    let x1 = regions[0].x_start;
    let x_right = regions[n - 1].x_end;
    let a_r = rho0 * (2.0 * I * kc * x1).exp();

    let mut ln_f = I * kc * x1;
    let mut segment_coeffs = Vec::with_capacity(n);
    for j in 0..n {
        ln_f += ln_ratio[j];
        let f = ln_f.exp();
        segment_coeffs.push(RegionState {
            x_start: regions[j].x_start,
            x_end: regions[j].x_end,
            height: regions[j].height,
            q: qs[j],
            forward: f,
            backward: f * rho[j],
        });
    }
    ln_f += ln_ratio[n];
    let ln_a_t = ln_f - I * kc * x_right;
    let a_t = ln_a_t.exp();
    if !(a_t.re.is_finite() && a_t.im.is_finite() && a_r.re.is_finite() && a_r.im.is_finite()) {
        return Err(Error::NonFinite { energy });
    }
    Ok(ScatteringSolution {
        energy,
        k,
        a_t,
        a_r,
        ln_a_t,
        segment_coeffs,
        energy_shifted,
        symmetric,
    })
}

/// Solution for a wave `e^{−ikx}` incident from the right, expressed through the
/// mirrored potential: the returned `a_t`, `a_r` are the right-incidence
/// transmission and reflection amplitudes in the original frame.
pub fn solve_from_right(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<ScatteringSolution> {
    solve_with(&pot.mirrored(), energy, units)
}

impl ScatteringSolution {
    /// |A_T|², computed from the log so it underflows gracefully.
    pub fn transmission(&self) -> f64 {
        (2.0 * self.ln_a_t.re).exp()
    }

    pub fn reflection(&self) -> f64 {
        self.a_r.norm_sqr()
    }

    pub fn unitarity_residual(&self) -> f64 {
        (self.transmission() + self.reflection() - 1.0).abs()
    }

    pub fn left_edge(&self) -> Option<f64> {
        self.segment_coeffs.first().map(|r| r.x_start)
    }

    pub fn right_edge(&self) -> Option<f64> {
        self.segment_coeffs.last().map(|r| r.x_end)
    }

    /// ψ(x) and ψ′(x).
    pub fn psi_and_derivative(&self, x: f64) -> (Complex64, Complex64) {
        let ik = I * self.k;
        let (Some(left), Some(right)) = (self.left_edge(), self.right_edge()) else {
            let e = (ik * x).exp();
            return (e, ik * e);
        };
        if x < left {
            let f = (ik * x).exp();
            let b = self.a_r * (-ik * x).exp();
            return (f + b, ik * (f - b));
        }
        if x >= right {
            let t = (self.ln_a_t + ik * x).exp();
            return (t, ik * t);
        }
        let idx = self
            .segment_coeffs
            .partition_point(|r| r.x_start <= x)
            .saturating_sub(1);
        self.segment_coeffs[idx].eval(x)
    }

    pub fn psi(&self, x: f64) -> Complex64 {
        self.psi_and_derivative(x).0
    }

    /// Largest relative jump of ψ or ψ′ across any joint.
    pub fn continuity_residual(&self) -> f64 {
        let n = self.segment_coeffs.len();
        if n == 0 {
            return 0.0;
        }
        let ik = I * self.k;
        let mut worst: f64 = 0.0;
        let mut check = |l: (Complex64, Complex64), r: (Complex64, Complex64)| {
            let s0 = l.0.norm().max(r.0.norm()).max(1e-300);
            let s1 = l.1.norm().max(r.1.norm()).max(1e-300);
            worst = worst.max((l.0 - r.0).norm() / s0).max((l.1 - r.1).norm() / s1);
        };
        let x1 = self.segment_coeffs[0].x_start;
        let f = (ik * x1).exp();
        let b = self.a_r * (-ik * x1).exp();
        check((f + b, ik * (f - b)), self.segment_coeffs[0].eval(x1));
        for j in 0..n - 1 {
            let x = self.segment_coeffs[j].x_end;
            check(self.segment_coeffs[j].eval(x), self.segment_coeffs[j + 1].eval(x));
        }
        let last = &self.segment_coeffs[n - 1];
        let t = (self.ln_a_t + ik * last.x_end).exp();
        check(last.eval(last.x_end), (t, ik * t));
        worst
    }

    /// Reflection amplitude referenced to the midpoint of the outer barrier edges.
    pub fn centred_reflection(&self) -> Complex64 {
        match (self.left_edge(), self.right_edge()) {
            (Some(l), Some(r)) => self.a_r * (-I * self.k * (l + r)).exp(),
            _ => self.a_r,
        }
    }
}

/// Closed-form amplitudes for the barrier of height V0 on (0, a), 0 < E < V0.
pub fn rect_amplitude(v0: f64, a: f64, energy: f64, units: &UnitSystem) -> Result<(Complex64, Complex64)> {
    if !(energy > 0.0 && energy < v0) || !(a > 0.0) {
        return Err(contract(format!(
            "closed form needs 0 < E < V0 and a > 0 (E = {energy}, V0 = {v0}, a = {a})"
        )));
    }
    let k = units.wavenumber(energy);
    let kappa = units.kappa(v0, energy);
    let decay = (-2.0 * kappa * a).exp();
    let d_minus = 1.0 - decay;
    let d_plus = 1.0 + decay;
    let ik = I * k;
    let den = (k * k - kappa * kappa) * d_minus + 2.0 * ik * kappa * d_plus;
    let a_t = 4.0 * ik * kappa * (-(kappa + ik) * a).exp() / den;
    let a_r = (k * k + kappa * kappa) * d_minus / den;
    Ok((a_t, a_r))
}

/// The two real phases of a symmetric single barrier.
///
/// `A_T = i sin φ₁ e^{i(φ₂−ka)}` and `r = cos φ₁ e^{i(φ₂−ka)}`, where r is the
/// reflection amplitude referenced to the barrier centre.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoPhase {
    pub phi1: f64,
    pub phi2: f64,
    /// ln tan φ₁, finite when φ₁ itself underflows.
    pub ln_tan_phi1: f64,
    pub k: f64,
    pub a: f64,
}

impl TwoPhase {
    pub fn transmission_amplitude(&self) -> Complex64 {
        I * self.phi1.sin() * (I * (self.phi2 - self.k * self.a)).exp()
    }

    /// Centre-referenced reflection amplitude.
    pub fn reflection_amplitude(&self) -> Complex64 {
        self.phi1.cos() * (I * (self.phi2 - self.k * self.a)).exp()
    }

    /// ln sin φ₁.
    pub fn ln_sin_phi1(&self) -> f64 {
        let t = self.ln_tan_phi1;
        if t > 0.0 {
            -0.5 * (-2.0 * t).exp().ln_1p()
        } else {
            t - 0.5 * (2.0 * t).exp().ln_1p()
        }
    }
}

/// Tolerance on the reconstruction residual of [`two_phase`].
pub const TWO_PHASE_TOL: f64 = 1e-6;

/// Two-phase form of a single rectangular barrier of width `a`.
pub fn two_phase(sol: &ScatteringSolution, a: f64) -> Result<TwoPhase> {
    let [seg] = sol.segment_coeffs.as_slice() else {
        return Err(contract("two-phase form needs a single rectangular barrier"));
    };
    if (seg.x_end - seg.x_start - a).abs() > 1e-9 * a.max(1.0) {
        return Err(contract(format!(
            "barrier width {} does not match a = {a}",
            seg.x_end - seg.x_start
        )));
    }
    if !(sol.energy < seg.height) {
        return Err(contract("two-phase form needs a sub-barrier energy"));
    }
    let r = sol.centred_reflection();
    let ln_t = sol.ln_a_t.re;
    let ln_r = r.norm().ln();
    let ln_tan_phi1 = ln_t - ln_r;
    let mut phi1 = ln_tan_phi1.exp().atan();
    // r A_T* = −i cos φ₁ sin φ₁ on the principal branch.
    let cross = (r * sol.a_t.conj()).im;
    if cross > 0.0 {
        phi1 = std::f64::consts::PI - phi1;
    }
    let phi2 = sol.ln_a_t.im - FRAC_PI_2 + sol.k * a;
    let tp = TwoPhase {
        phi1,
        phi2,
        ln_tan_phi1,
        k: sol.k,
        a,
    };
    let residual = (tp.transmission_amplitude() - sol.a_t)
        .norm()
        .max((tp.reflection_amplitude() - r).norm());
    if residual > TWO_PHASE_TOL {
        return Err(Error::BranchResolution { residual });
    }
    Ok(tp)
}

/// φ₁ = arctan{2σ/[(1+σ²) sinh κa]} with σ = κ/k.
pub fn rect_phi1_closed_form(v0: f64, a: f64, energy: f64, units: &UnitSystem) -> f64 {
    let k = units.wavenumber(energy);
    let kappa = units.kappa(v0, energy);
    let sigma = kappa / k;
    (2.0 * sigma / ((1.0 + sigma * sigma) * (kappa * a).sinh())).atan()
}

/// Two-channel collision matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix {
    pub s: [[Complex64; 2]; 2],
    /// False when the potential is not mirror-symmetric; the matrix is then
    /// filled from left-incidence data only.
    pub symmetric: bool,
}

impl SMatrix {
    /// max |S S† − I|.
    pub fn unitarity_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for k in 0..2 {
                let mut acc = ZERO;
                for j in 0..2 {
                    acc += self.s[i][j] * self.s[k][j].conj();
                }
                let target = if i == k { ONE } else { ZERO };
                worst = worst.max((acc - target).norm());
            }
        }
        worst
    }
}

/// S with S₀₀ = S₁₁ = A_T and S₀₁ = S₁₀ = the centre-referenced reflection.
pub fn s_matrix(sol: &ScatteringSolution) -> SMatrix {
    let r = sol.centred_reflection();
    SMatrix {
        s: [[sol.a_t, r], [r, sol.a_t]],
        symmetric: sol.symmetric,
    }
}

type Mat2 = [[Complex64; 2]; 2];

fn mat_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

fn diag(a: Complex64, b: Complex64) -> Mat2 {
    [[a, ZERO], [ZERO, b]]
}

/// Explicit 2×2 transfer matrix in the asymptotic plane-wave basis.
///
/// Maps the right-region coefficients (f, b) of `f e^{ikx} + b e^{−ikx}` to
/// the left-region ones. Exponentials e^{κw} appear unscaled, so this route
/// is for moderate opacity; [`solve`] is the production path.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix {
    pub m: Mat2,
    pub k: f64,
}

impl TransferMatrix {
    pub fn for_potential(pot: &PiecewisePotential, energy: f64, units: &UnitSystem) -> Result<Self> {
        if !(energy > 0.0) {
            return Err(contract("transfer matrix needs E > 0"));
        }
        let (energy, _) = shifted_energy(pot, energy);
        let k = units.wavenumber(energy);
        let kc = Complex64::new(k, 0.0);
        let regions = pot.regions();
        let mut m = diag(ONE, ONE);
        if regions.is_empty() {
            return Ok(Self { m, k });
        }
        let interface = |ql: Complex64, qr: Complex64| -> Mat2 {
            let s = qr / ql;
            [[0.5 * (ONE + s), 0.5 * (ONE - s)], [0.5 * (ONE - s), 0.5 * (ONE + s)]]
        };
        let x1 = regions[0].x_start;
        let xr = regions[regions.len() - 1].x_end;
        m = mat_mul(&m, &diag((-I * kc * x1).exp(), (I * kc * x1).exp()));
        let mut q_prev = kc;
        for r in &regions {
            let q = wavenumber_in(units, energy, r.height);
            let w = r.x_end - r.x_start;
            m = mat_mul(&m, &interface(q_prev, q));
            m = mat_mul(&m, &diag((-I * q * w).exp(), (I * q * w).exp()));
            q_prev = q;
        }
        m = mat_mul(&m, &interface(q_prev, kc));
        m = mat_mul(&m, &diag((I * kc * xr).exp(), (-I * kc * xr).exp()));
        Ok(Self { m, k })
    }

    /// diag(e^{−ikd}, e^{ikd}): conjugating by this translates a potential by d.
    pub fn translation(k: f64, d: f64) -> Self {
        let p = Complex64::new(0.0, -k * d).exp();
        Self {
            m: diag(p, p.conj()),
            k,
        }
    }

    pub fn inverse(&self) -> Self {
        let [[a, b], [c, d]] = self.m;
        let det = a * d - b * c;
        Self {
            m: [[d / det, -b / det], [-c / det, a / det]],
            k: self.k,
        }
    }

    pub fn compose(&self, rhs: &Self) -> Self {
        Self {
            m: mat_mul(&self.m, &rhs.m),
            k: self.k,
        }
    }

    /// (A_T, A_R) for unit incidence from the left.
    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        let a_t = ONE / self.m[0][0];
        (a_t, self.m[1][0] * a_t)
    }

    /// max |M − other| relative to max |M|.
    pub fn relative_distance(&self, other: &Self) -> f64 {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                diff = diff.max((self.m[i][j] - other.m[i][j]).norm());
                scale = scale.max(self.m[i][j].norm());
            }
        }
        diff / scale
    }
}
