//! Central differences in energy.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{contract, Error, Result};

/// Default relative step for energy derivatives.
pub const DEFAULT_REL_STEP: f64 = 1e-6;

/// How an energy derivative is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffOptions {
    pub rel_step: f64,
    /// Combine steps h and h/2 to cancel the O(h²) error term.
    pub richardson: bool,
}

impl Default for DiffOptions {
    fn default() -> Self {
        Self {
            rel_step: DEFAULT_REL_STEP,
            richardson: false,
        }
    }
}

impl DiffOptions {
    pub fn with_step(rel_step: f64) -> Self {
        Self {
            rel_step,
            richardson: false,
        }
    }

    pub fn richardson(rel_step: f64) -> Self {
        Self {
            rel_step,
            richardson: true,
        }
    }
}

fn checked_step(energy: f64, rel_step: f64) -> Result<f64> {
    if !(energy > 0.0) || !energy.is_finite() {
        return Err(contract(format!("derivative needs E > 0, got {energy}")));
    }
    if !(rel_step > 0.0) {
        return Err(contract("relative step must be positive"));
    }
    // E(1 - rel_step) must stay positive.
    let mut rel = rel_step;
    while rel >= 1.0 {
        rel *= 0.5;
    }
    Ok(rel * energy)
}

fn eval(f: &impl Fn(f64) -> f64, e: f64) -> Result<f64> {
    let v = f(e);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite { energy: e })
    }
}

/// df/dE at `energy` by a central difference with h = rel_step·E.
pub fn dde(f: impl Fn(f64) -> f64, energy: f64, rel_step: f64) -> Result<f64> {
    let h = checked_step(energy, rel_step)?;
    Ok((eval(&f, energy + h)? - eval(&f, energy - h)?) / (2.0 * h))
}

/// Same as [`dde`] with options, including Richardson extrapolation.
pub fn dde_with(f: impl Fn(f64) -> f64, energy: f64, opts: DiffOptions) -> Result<f64> {
    let h = checked_step(energy, opts.rel_step)?;
    let central = |h: f64| -> Result<f64> { Ok((eval(&f, energy + h)? - eval(&f, energy - h)?) / (2.0 * h)) };
    let d1 = central(h)?;
    if !opts.richardson {
        return Ok(d1);
    }
    let d2 = central(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Absolute-step central difference, with optional Richardson extrapolation.
pub fn dde_abs(f: impl Fn(f64) -> f64, energy: f64, h: f64, richardson: bool) -> Result<f64> {
    if !(h > 0.0) || !(energy - h > 0.0) {
        return Err(contract(format!("invalid step {h} at E = {energy}")));
    }
    let central = |h: f64| -> Result<f64> { Ok((eval(&f, energy + h)? - eval(&f, energy - h)?) / (2.0 * h)) };
    let d1 = central(h)?;
    if !richardson {
        return Ok(d1);
    }
    Ok((4.0 * central(0.5 * h)? - d1) / 3.0)
}

/// Maps an angle to (−π, π].
pub fn wrap_angle(x: f64) -> f64 {
    let mut y = x % (2.0 * PI);
    if y <= -PI {
        y += 2.0 * PI;
    } else if y > PI {
        y -= 2.0 * PI;
    }
    y
}

/// Removes 2π jumps from a sampled phase, keeping the first sample fixed.
pub fn unwrap_phase(phases: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(phases.len());
    let mut offset = 0.0;
    for (i, &p) in phases.iter().enumerate() {
        if i > 0 {
            let prev = phases[i - 1];
            let jump = p - prev;
            if jump > PI {
                offset -= 2.0 * PI * ((jump + PI) / (2.0 * PI)).floor();
            } else if jump < -PI {
                offset += 2.0 * PI * ((-jump + PI) / (2.0 * PI)).floor();
            }
        }
        out.push(p + offset);
    }
    out
}

/// d(arg z)/dE for a complex function of energy, from phase differences
/// wrapped to (−π, π].
///
/// `log_z` returns ln z; only its imaginary part is used, so the derivative
/// survives even when |z| underflows. The step is refined up to three times
/// when a wrapped difference exceeds π/2.
pub fn darg_de(log_z: impl Fn(f64) -> Result<Complex64>, energy: f64, h: f64, richardson: bool) -> Result<f64> {
    if !(h > 0.0) || !(energy > 0.0) {
        return Err(contract(format!("invalid step {h} at E = {energy}")));
    }
    darg(log_z, energy, h.min(0.5 * energy), richardson)
}

/// Like [`darg_de`] for a parameter of either sign, e.g. a potential offset.
pub fn darg(log_z: impl Fn(f64) -> Result<Complex64>, energy: f64, h: f64, richardson: bool) -> Result<f64> {
    if !(h > 0.0) {
        return Err(contract(format!("invalid step {h}")));
    }
    let phase_step = |h: f64| -> Result<Option<f64>> {
        let lo = log_z(energy - h)?;
        let hi = log_z(energy + h)?;
        if !lo.im.is_finite() || !hi.im.is_finite() {
            return Err(Error::NonFinite { energy });
        }
        let d = wrap_angle(hi.im - lo.im);
        Ok((d.abs() <= 0.5 * PI).then_some(d / (2.0 * h)))
    };
    let mut step = h;
    for _ in 0..4 {
        if let Some(d1) = phase_step(step)? {
            if !richardson {
                return Ok(d1);
            }
            if let Some(d2) = phase_step(0.5 * step)? {
                return Ok((4.0 * d2 - d1) / 3.0);
            }
        }
        step *= 0.1;
    }
    let lo = log_z(energy - step)?;
    let hi = log_z(energy + step)?;
    Err(Error::PhaseUnwrap {
        energy,
        jump: wrap_angle(hi.im - lo.im),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function() {
        for e in [1e-3, 0.5, 3.0, 1e4] {
            assert!((dde(|x| x, e, DEFAULT_REL_STEP).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn square_at_two() {
        let d = dde(|x| x * x, 2.0, DEFAULT_REL_STEP).unwrap();
        assert!(((d - 4.0) / 4.0).abs() < 1e-6);
    }

    #[test]
    fn constant_function() {
        assert!(dde(|_| 7.5, 3.0, DEFAULT_REL_STEP).unwrap().abs() < 1e-12);
    }

    #[test]
    fn oversized_step_is_reduced() {
        let d = dde(|x| x * x, 1.0, 1.5).unwrap();
        assert!(d.is_finite());
        assert!((d - 2.0).abs() < 1e-12);
    }

    #[test]
    fn non_finite_propagates() {
        let err = dde(|x| if x > 1.0 { f64::NAN } else { x }, 1.0, 1e-3).unwrap_err();
        assert!(matches!(err, Error::NonFinite { .. }));
    }

    #[test]
    fn richardson_beats_plain_central() {
        let f = |x: f64| x.exp();
        let plain = dde_with(f, 1.0, DiffOptions::with_step(1e-2)).unwrap();
        let rich = dde_with(f, 1.0, DiffOptions::richardson(1e-2)).unwrap();
        let exact = 1f64.exp();
        assert!((rich - exact).abs() < (plain - exact).abs() * 1e-2);
    }

    #[test]
    fn truncation_error_scales_with_third_derivative() {
        // f = E³: error of the central difference is h²·f‴/6 = h².
        let e = 3.0;
        let rel = 1e-3;
        let d = dde(|x| x * x * x, e, rel).unwrap();
        let h = rel * e;
        assert!((d - 27.0 - h * h).abs() < 1e-8);
    }

    #[test]
    fn unwrap_removes_jumps() {
        let raw: Vec<f64> = (0..200).map(|i| wrap_angle(0.1 * i as f64)).collect();
        let un = unwrap_phase(&raw);
        for (i, p) in un.iter().enumerate() {
            assert!((p - 0.1 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn phase_derivative_through_branch_cut() {
        // arg e^{iE·40} has slope 40 and wraps every 2π/40.
        let d = darg_de(|e| Ok(Complex64::new(0.0, 40.0 * e)), 1.0, 1e-6, false).unwrap();
        assert!((d - 40.0).abs() < 1e-6);
        let d = darg_de(|e| Ok(Complex64::new(-300.0, 40.0 * e)), 0.08, 1e-6, true).unwrap();
        assert!((d - 40.0).abs() < 1e-6);
    }
}
