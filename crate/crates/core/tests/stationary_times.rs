use proptest::prelude::*;
use tuntime::stationary_times::{bl_time, dwell_time_stationary, larmor_y, phase_time, resonance_delay, time_catalog};
use tuntime::{PiecewisePotential, RegionMarkers, UnitSystem};

const U: UnitSystem = UnitSystem::electron();

fn m_over_hbar() -> f64 {
    U.hbar / (2.0 * U.hbar2_over_2m)
}

fn shared(v0: f64, a: f64, e: f64) -> (f64, f64, f64, f64) {
    let k = U.wavenumber(e);
    let kappa = U.kappa(v0, e);
    let k0sq = v0 / U.hbar2_over_2m;
    let den = 4.0 * k * k * kappa * kappa + k0sq * k0sq * (kappa * a).sinh().powi(2);
    (k, kappa, k0sq, den)
}

// Closed-form traversal phase time of a rectangular barrier.
fn phase_oracle(v0: f64, a: f64, e: f64) -> f64 {
    let (k, kappa, k0sq, den) = shared(v0, a, e);
    let num = 2.0 * kappa * a * k * k * (kappa * kappa - k * k) + k0sq * k0sq * (2.0 * kappa * a).sinh();
    m_over_hbar() / (k * kappa) * num / den
}

// Closed-form dwell time of a rectangular barrier.
fn dwell_oracle(v0: f64, a: f64, e: f64) -> f64 {
    let (k, kappa, k0sq, den) = shared(v0, a, e);
    let num = 2.0 * kappa * a * (kappa * kappa - k * k) + k0sq * (2.0 * kappa * a).sinh();
    m_over_hbar() * k / kappa * num / den
}

fn ln_abs_t(v0: f64, a: f64, e: f64) -> f64 {
    let kappa = U.kappa(v0, e);
    -0.5 * (1.0 + v0 * v0 * (kappa * a).sinh().powi(2) / (4.0 * e * (v0 - e))).ln()
}

#[test]
fn phase_and_dwell_match_closed_forms() {
    for &a in &[0.5, 2.0, 5.0, 10.0] {
        for &e in &[1.0, 3.0, 5.0, 8.0, 9.5] {
            let pot = PiecewisePotential::rectangular(10.0, a).unwrap();
            let m = RegionMarkers::barrier_edges(&pot).unwrap();
            let ph = phase_time(&pot, e, &U).unwrap();
            let dw = dwell_time_stationary(&pot, e, m, &U).unwrap();
            assert!((ph / phase_oracle(10.0, a, e) - 1.0).abs() < 1e-6, "phase a={a} E={e}");
            assert!((dw / dwell_oracle(10.0, a, e) - 1.0).abs() < 1e-7, "dwell a={a} E={e}");
        }
    }
}

#[test]
fn larmor_y_equals_dwell_for_rectangular() {
    for &a in &[1.0, 4.0] {
        let pot = PiecewisePotential::rectangular(10.0, a).unwrap();
        let m = RegionMarkers::barrier_edges(&pot).unwrap();
        let e = 4.0;
        let ly = larmor_y(&pot, e, m, &U).unwrap();
        assert!((ly / dwell_oracle(10.0, a, e) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn bl_matches_textbook_log_derivative() {
    for &a in &[1.0, 3.0, 8.0] {
        let pot = PiecewisePotential::rectangular(10.0, a).unwrap();
        let e = 5.0;
        let h = 1e-4;
        let d = (ln_abs_t(10.0, a, e + h) - ln_abs_t(10.0, a, e - h)) / (2.0 * h);
        let bl = bl_time(&pot, e, &U).unwrap();
        assert!((bl / (U.hbar * d.abs()) - 1.0).abs() < 1e-6);
    }
}

#[test]
fn catalog_is_consistent() {
    let pot = PiecewisePotential::rectangular(10.0, 3.0).unwrap();
    let c = time_catalog(&pot, 5.0, &U).unwrap();
    assert_eq!(c.tau_bl, c.tau_larmor_z);
    assert!((c.tau_dwell - c.tau_larmor_y).abs() < 1e-6 * c.tau_dwell);
    assert!(c.tau_phase > 0.0);
}

#[test]
fn bl_rejects_above_barrier() {
    let pot = PiecewisePotential::rectangular(10.0, 3.0).unwrap();
    assert!(bl_time(&pot, 12.0, &U).is_err());
}

#[test]
fn lorentzian_area_is_pi_hbar() {
    let (er, g) = (3.0, 1e-3);
    let n = 200_000;
    let (lo, hi) = (er - 2000.0 * g, er + 2000.0 * g);
    let h = (hi - lo) / n as f64;
    let area: f64 = (0..n).map(|i| resonance_delay(lo + (i as f64 + 0.5) * h, er, g, 0.0, &U).unwrap() * h).sum();
    assert!((area / (std::f64::consts::PI * U.hbar) - 1.0).abs() < 1e-3);
    assert!(resonance_delay(er, er, 0.0, 0.0, &U).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn dwell_is_additive(a in 0.5f64..6.0, f in 0.05f64..0.95, xi in -6.0f64..0.0, split in 0.0f64..1.0, tail in 0.0f64..6.0) {
        let pot = PiecewisePotential::rectangular(10.0, a).unwrap();
        let e = 10.0 * f;
        let xf = a + tail;
        let xm = xi + split * (xf - xi);
        let whole = dwell_time_stationary(&pot, e, RegionMarkers::new(xi, xf).unwrap(), &U).unwrap();
        let left = dwell_time_stationary(&pot, e, RegionMarkers::new(xi, xm).unwrap(), &U).unwrap();
        let right = dwell_time_stationary(&pot, e, RegionMarkers::new(xm, xf).unwrap(), &U).unwrap();
        prop_assert!((left + right - whole).abs() < 1e-7 * whole);
    }

    #[test]
    fn phase_time_is_positive_under_barrier(a in 0.2f64..12.0, f in 0.02f64..0.98) {
        let pot = PiecewisePotential::rectangular(10.0, a).unwrap();
        prop_assert!(phase_time(&pot, 10.0 * f, &U).unwrap() > 0.0);
    }
}
