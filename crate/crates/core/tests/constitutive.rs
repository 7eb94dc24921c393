use phasefrac::params::derive_lame;
use phasefrac::physics::{apply_tangent, split_energy, split_stress, Elasticity, SplitMode, Strain2};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rock() -> Elasticity<f64> {
    let (mu, lambda, _) = derive_lame(1.5e10, 0.15).unwrap();
    Elasticity::from_lame(mu, lambda)
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(f64::MIN_POSITIVE)
}

#[test]
fn split_sums_on_ten_thousand_strains() {
    let mat = rock();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..10_000 {
        let e = Strain2::new(rng.random_range(-1e-2..1e-2), rng.random_range(-1e-2..1e-2), rng.random_range(-1e-2..1e-2));
        for mode in [SplitMode::VolDev, SplitMode::None] {
            let en = split_energy(&e, &mat, mode);
            let total = mat.energy(&e);
            assert!(rel(en.psi_plus + en.psi_minus, total, total) <= 1e-12);
            assert!(en.psi_plus >= 0.0 && en.psi_minus >= 0.0);
            let s = split_stress(&e, &mat, mode);
            let full = mat.stress(&e);
            let scale = full.ddot(&full).sqrt();
            let sum = s.sigma_plus.add(&s.sigma_minus);
            assert!(rel(sum.xx, full.xx, scale) <= 1e-12);
            assert!(rel(sum.yy, full.yy, scale) <= 1e-12);
            assert!(rel(sum.xy, full.xy, scale) <= 1e-12);
        }
    }
}

// Voigt component k of the stress as a derivative of `energy` with respect to
// engineering strain component k.
fn fd_stress(energy: impl Fn(&Strain2<f64>) -> f64, e: &Strain2<f64>, h: f64) -> [f64; 3] {
    let bump = |k: usize, d: f64| {
        let mut p = *e;
        match k {
            0 => p.xx += d,
            1 => p.yy += d,
            _ => p.xy += d / 2.0,
        }
        p
    };
    [0, 1, 2].map(|k| (energy(&bump(k, h)) - energy(&bump(k, -h))) / (2.0 * h))
}

fn strain() -> impl Strategy<Value = Strain2<f64>> {
    (-1e-3..1e-3f64, -1e-3..1e-3f64, -1e-3..1e-3f64).prop_map(|(a, b, c)| Strain2::new(a, b, c))
}

proptest! {
    #[test]
    fn stresses_are_energy_derivatives(e in strain(), voldev in any::<bool>()) {
        // Stay clear of the trace kink, where one-sided derivatives differ.
        prop_assume!(e.trace().abs() > 1e-5);
        let mode = if voldev { SplitMode::VolDev } else { SplitMode::None };
        let mat = rock();
        let h = 1e-9;
        let s = split_stress(&e, &mat, mode);
        let fp = fd_stress(|x| split_energy(x, &mat, mode).psi_plus, &e, h);
        let fm = fd_stress(|x| split_energy(x, &mat, mode).psi_minus, &e, h);
        let full = mat.stress(&e);
        let scale = full.ddot(&full).sqrt();
        let sp = [s.sigma_plus.xx, s.sigma_plus.yy, s.sigma_plus.xy];
        let sm = [s.sigma_minus.xx, s.sigma_minus.yy, s.sigma_minus.xy];
        for k in 0..3 {
            prop_assert!(rel(sp[k], fp[k], scale) <= 1e-6, "plus {k}: {} vs {}", sp[k], fp[k]);
            prop_assert!(rel(sm[k], fm[k], scale) <= 1e-6, "minus {k}: {} vs {}", sm[k], fm[k]);
        }
    }

    #[test]
    fn tangents_are_stress_derivatives(e in strain(), d in strain()) {
        prop_assume!(e.trace().abs() > 1e-5);
        let mat = rock();
        let h = 1e-9 / (d.ddot(&d).sqrt() + 1e-300);
        prop_assume!(d.ddot(&d).sqrt() > 1e-5);
        let s = split_stress(&e, &mat, SplitMode::VolDev);
        let at = |x: &Strain2<f64>| split_stress(x, &mat, SplitMode::VolDev);
        let hi = at(&e.add(&d.scale(h)));
        let lo = at(&e.sub(&d.scale(h)));
        let fd_plus = hi.sigma_plus.sub(&lo.sigma_plus).scale(0.5 / h);
        let fd_minus = hi.sigma_minus.sub(&lo.sigma_minus).scale(0.5 / h);
        let tp = apply_tangent(&s.tangent_plus, &d);
        let tm = apply_tangent(&s.tangent_minus, &d);
        let scale = apply_tangent(&mat.tangent(), &d);
        let scale = scale.ddot(&scale).sqrt();
        for (a, b) in [(tp, fd_plus), (tm, fd_minus)] {
            let diff = a.sub(&b);
            prop_assert!(diff.ddot(&diff).sqrt() <= 1e-6 * scale);
        }
    }

    #[test]
    fn no_split_degenerates_to_full_energy(e in strain()) {
        let mat = rock();
        let en = split_energy(&e, &mat, SplitMode::None);
        prop_assert_eq!(en.psi_minus, 0.0);
        prop_assert!(rel(en.psi_plus, mat.energy(&e), mat.energy(&e)) <= 1e-14);
    }
}

#[test]
fn hand_values() {
    let mat = rock();
    let e = split_energy(&Strain2::isotropic(1e-3), &mat, SplitMode::VolDev);
    assert!(rel(e.psi_plus, 1.86335e4, 1.86335e4) < 1e-5);
    assert_eq!(e.psi_minus, 0.0);
    let e = split_energy(&Strain2::new(0.0, 0.0, 5e-4), &mat, SplitMode::VolDev);
    assert!(rel(e.psi_plus, 3.26087e3, 3.26087e3) < 1e-5);
    let e = split_energy(&Strain2::isotropic(-1e-3), &mat, SplitMode::VolDev);
    assert_eq!(e.psi_plus, 0.0);
    assert!(rel(e.psi_minus, 1.86335e4, 1.86335e4) < 1e-5);
}
