use phasefrac::fem::{assemble, energies, Coefficients, DofMap};
use phasefrac::mesh::QuadMesh;
use phasefrac::params::derive_lame;
use phasefrac::physics::{Elasticity, SplitMode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn coeffs(split: SplitMode) -> Coefficients<f64> {
    let (mu, lambda, _) = derive_lame(1.5e10, 0.15).unwrap();
    Coefficients { elastic: Elasticity::from_lame(mu, lambda), split, kappa: 1e-10, gc: 5.5e5, eps: 50.0, drive: 3.7e6 }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

// Random state with phi kept away from 0 and 1, displacements of a size
// that makes the elastic and fracture rows comparable.
fn state(d: &DofMap<f64>, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..d.n_dofs()).map(|i| if i < d.n_u() { rng.random_range(-1e-2..1e-2) } else { rng.random_range(0.2..0.8) }).collect()
}

fn check(split: SplitMode, seed: u64) {
    let m = QuadMesh::<f64>::generate_uniform(200.0, 2);
    assert_eq!(m.n_leaves(), 16);
    let d = DofMap::new(&m);
    let c = coeffs(split);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = state(&d, &mut rng);
    let pt: Vec<f64> = (0..m.n_vertices()).map(|_| rng.random_range(0.3..1.0)).collect();
    let jac = assemble(&m, &d, &c, &x, &pt, true).unwrap().matrix.unwrap();
    for _ in 0..10 {
        let dir: Vec<f64> = (0..d.n_dofs()).map(|i| if i < d.n_u() { 1e-2 } else { 1.0 } * rng.random_range(-1.0..1.0)).collect();
        let h = 1e-6;
        let shift = |s: f64| x.iter().zip(&dir).map(|(a, b)| a + s * h * b).collect::<Vec<_>>();
        let rp = assemble(&m, &d, &c, &shift(1.0), &pt, false).unwrap().residual;
        let rm = assemble(&m, &d, &c, &shift(-1.0), &pt, false).unwrap().residual;
        let fd: Vec<f64> = rp.iter().zip(&rm).map(|(a, b)| (a - b) / (2.0 * h)).collect();
        let jd = jac.mul_vec(&dir);
        // Each block is compared on its own scale; the two differ by orders of magnitude.
        for range in [0..d.n_u(), d.phi_range()] {
            let err: Vec<f64> = fd[range.clone()].iter().zip(&jd[range.clone()]).map(|(a, b)| a - b).collect();
            let rel = norm(&err) / norm(&jd[range.clone()]);
            assert!(rel <= 1e-5, "{split:?} block {range:?}: relative error {rel:e}");
        }
    }
}

#[test]
fn jacobian_matches_differences_with_split() {
    check(SplitMode::VolDev, 11);
}

#[test]
fn jacobian_matches_differences_without_split() {
    check(SplitMode::None, 12);
}

#[test]
fn phase_rows_are_energy_gradient() {
    let m = QuadMesh::<f64>::generate_uniform(200.0, 2);
    let d = DofMap::new(&m);
    let c = coeffs(SplitMode::VolDev);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = state(&d, &mut rng);
    let pt = d.phi_nodal(&m, &x);
    let g = assemble(&m, &d, &c, &x, &pt, false).unwrap().residual;
    // Only the fracture and degraded elastic parts of the functional depend
    // on phi, so the phase rows equal the derivative of E_mech + E_frac
    // plus the pressure work, which vanishes for a zero drive.
    let c0 = Coefficients { drive: 0.0, ..c };
    let g0 = assemble(&m, &d, &c0, &x, &pt, false).unwrap().residual;
    let total = |x: &[f64]| {
        let e = energies(&m, &d, &c0, x).unwrap();
        e.mechanical + e.fracture
    };
    let h = 1e-6;
    for i in d.phi_range().step_by(3) {
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[i] += h;
        xm[i] -= h;
        let fd = (total(&xp) - total(&xm)) / (2.0 * h);
        assert!((fd - g0[i]).abs() <= 1e-6 * g0[i].abs().max(1.0), "dof {i}: {fd} vs {}", g0[i]);
    }
    assert!(g.iter().zip(&g0).any(|(a, b)| a != b));
}
