use num_complex::Complex64;
use proptest::prelude::*;
use tuntime::wavepacket::{flux_series, gaussian_packet, Cutoff, CutoffForm, PacketEvaluator, SpectralPacket};
use tuntime::{PiecewisePotential, UnitSystem};

const U: UnitSystem = UnitSystem::electron();

// Ψ = N ∫ exp[−(k−k̄)²/(4Δk²) + ik(x−x₀) − iCk²t/ħ] dk in closed form.
fn free_gaussian(p: &SpectralPacket, x: f64, t: f64) -> Complex64 {
    let (kb, dk) = (p.k_bar(), p.delta_k());
    let k0 = p.k_grid().points()[0];
    let n = p.g()[0].re / (-(k0 - kb).powi(2) / (4.0 * dk * dk)).exp();
    let (x0, t0) = p.focus();
    let a = Complex64::new(1.0 / (4.0 * dk * dk), U.hbar2_over_2m * (t - t0) / U.hbar);
    let b = Complex64::new(kb / (2.0 * dk * dk), x - x0);
    let d = -kb * kb / (4.0 * dk * dk);
    n * (std::f64::consts::PI / a).sqrt() * (b * b / (4.0 * a) + d).exp()
}

#[test]
fn free_packet_matches_closed_form() {
    let p = gaussian_packet(U.wavenumber(5.0), 0.05, 512, None, &U).unwrap().with_focus(-30.0, 0.0);
    let ev = PacketEvaluator::free(&p).unwrap();
    let peak = free_gaussian(&p, -30.0, 0.0).norm();
    for &t in &[0.0, 1.0, 4.0, 10.0] {
        let centre = -30.0 + p.mean_velocity() * t;
        for i in -20..=20 {
            let x = centre + 3.0 * i as f64;
            let err = (ev.psi(x, t) - free_gaussian(&p, x, t)).norm();
            assert!(err < 1e-9 * peak, "x = {x}, t = {t}: {err}");
        }
    }
}

#[test]
fn free_width_spreads_as_gaussian() {
    let dk = 0.05;
    let p = gaussian_packet(U.wavenumber(5.0), dk, 512, None, &U).unwrap();
    let ev = PacketEvaluator::free(&p).unwrap();
    let sigma0 = 1.0 / (2.0 * dk);
    let beta = 2.0 * U.hbar2_over_2m / U.hbar;
    for &t in &[0.0, 5.0, 20.0] {
        let c = p.mean_velocity() * t;
        let g = ev.x_grid(c - 600.0, c + 600.0, 1.0).unwrap();
        let expected = sigma0 * (1.0 + (beta * dk * dk * t * 2.0).powi(2)).sqrt();
        assert!((ev.width(&g, t) / expected - 1.0).abs() < 1e-6, "t = {t}");
    }
}

#[test]
fn free_arrival_flux_is_forward() {
    let p = gaussian_packet(U.wavenumber(5.0), 0.05, 512, None, &U).unwrap().with_focus(-100.0, 0.0);
    let ev = PacketEvaluator::free(&p).unwrap();
    let s = flux_series(&ev, 0.0, (-5.0, 25.0), 600).unwrap();
    assert!(s.minus_mass() < 1e-12 * s.plus_mass());
    let g = ev.x_grid(-700.0, 700.0, 1.0).unwrap();
    let n = ev.probability(&g, 0.0);
    assert!((s.mass() / n - 1.0).abs() < 1e-6, "arrival mass {} vs norm {n}", s.mass());
}

#[test]
fn cutoff_restricts_spectrum() {
    let kc = U.wavenumber(10.0);
    let cut = Cutoff { v0: 10.0, form: CutoffForm::SubBarrier };
    let p = gaussian_packet(U.wavenumber(9.0), 0.05, 256, Some(cut), &U).unwrap();
    assert!(p.k_grid().points().iter().all(|&k| k < kc));
    assert!((p.energy_norm() - 1.0).abs() < 1e-10);
    let above = Cutoff { v0: 10.0, form: CutoffForm::AboveBarrier };
    assert!(gaussian_packet(U.wavenumber(5.0), 0.02, 256, Some(above), &U).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn probability_is_conserved(a in 0.5f64..6.0, v0 in 2.0f64..12.0, t in -10.0f64..10.0) {
        let p = gaussian_packet(U.wavenumber(0.5 * v0), 0.04, 512, None, &U).unwrap();
        let pot = PiecewisePotential::rectangular(v0, a).unwrap();
        let ev = PacketEvaluator::new(&pot, &p).unwrap();
        let g = ev.x_grid(-700.0, 700.0, 1.0).unwrap();
        let n0 = ev.probability(&g, 0.0);
        let d = (ev.probability(&g, t) / n0 - 1.0).abs();
        prop_assert!(d < 1e-8, "drift {d}");
    }
}
