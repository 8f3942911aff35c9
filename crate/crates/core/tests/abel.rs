use zn_thomae::abel::lattice_residual;
use zn_thomae::config::seeded_curve;
use zn_thomae::partition::Partition;
use zn_thomae::surface::{MarkedCurve, Settings};
use zn_thomae::theta::Characteristic;
use zn_thomae::C64;

fn marked(n: usize, m: usize, seed: u64) -> MarkedCurve {
    MarkedCurve::build(seeded_curve(n, m, seed).unwrap(), Settings::default()).unwrap()
}

#[test]
fn branch_points_are_n_torsion_apart() {
    for (n, m, seed) in [(2, 3, 1), (3, 2, 7)] {
        let mc = marked(n, m, seed);
        let tau = mc.periods.tau_symmetric();
        for a in &mc.abel.branch_vectors {
            let v: Vec<C64> = a.iter().map(|x| x * n as f64).collect();
            assert!(lattice_residual(&v, &tau).unwrap() < 1e-6);
        }
    }
}

#[test]
fn riemann_vector_is_a_clearly_identified_half_period() {
    let mc = marked(3, 2, 7);
    let tau = mc.periods.tau_symmetric();
    let twice: Vec<C64> = mc.abel.riemann.iter().map(|x| x * 2.0).collect();
    assert!(lattice_residual(&twice, &tau).unwrap() < 1e-9);
    assert!(mc.abel.riemann_vanishing < 1e-9);
    assert!(mc.abel.riemann_runner_up > 1e-4);
}

#[test]
fn genus_one_riemann_vector() {
    let mc = marked(2, 2, 3);
    let tau = mc.periods.tau_symmetric();
    let expected = (C64::new(0.0, 2.0 * std::f64::consts::PI) - tau[(0, 0)]) / 2.0;
    let diff = [mc.abel.riemann[0] - expected];
    assert!(lattice_residual(&diff, &tau).unwrap() < 1e-9);
}

#[test]
fn characteristics_land_on_the_grid() {
    for (n, m, seed) in [(2, 3, 1), (3, 2, 7)] {
        let mc = marked(n, m, seed);
        let base = Partition::consecutive(n, m);
        let e = mc.e_lambda(&base).unwrap();
        assert!(e.residual < 1e-6, "residual {}", e.residual);
        let z = vec![C64::new(0.0, 0.0); mc.genus()];
        let th = mc.theta_at(&z, &e.rounded).unwrap();
        assert!(th.value.norm() > 1e-6 * th.scale());
        for j in 1..n {
            let rot = mc.e_lambda(&base.rotate(j)).unwrap();
            let diff: Vec<C64> = e.e.iter().zip(&rot.e).map(|(a, b)| a - b).collect();
            assert!(lattice_residual(&diff, &mc.periods.tau_symmetric()).unwrap() < 1e-6);
        }
        let rev = mc.e_lambda(&base.reverse()).unwrap();
        let sum: Vec<C64> = e.e.iter().zip(&rev.e).map(|(a, b)| a + b).collect();
        assert!(lattice_residual(&sum, &mc.periods.tau_symmetric()).unwrap() < 1e-6);
    }
}

#[test]
fn odd_characteristic_is_odd_and_nonsingular() {
    let mc = marked(3, 2, 7);
    assert!(mc.odd.is_odd());
    let z = vec![C64::new(0.0, 0.0); mc.genus()];
    let r = mc.theta_at(&z, &mc.odd).unwrap();
    assert!(r.value.norm() < 1e-9 * r.scale());
    assert!(r.gradient.iter().any(|x| x.norm() > 1e-3));
    let g1 = marked(2, 2, 3);
    assert_eq!(g1.odd, Characteristic::rational(2, vec![1], vec![1]));
}

#[test]
fn cycles_shift_abel_vectors_by_periods() {
    use zn_thomae::periods::integrate_cycle;
    let mc = marked(3, 2, 7);
    let cfg = mc.settings.quad;
    for k in [0, 3] {
        let a = mc.periods.normalize(&integrate_cycle(&mc.curve, &mc.basis, &mc.basis.a_cycles[k], &cfg).unwrap());
        let b = mc.periods.normalize(&integrate_cycle(&mc.curve, &mc.basis, &mc.basis.b_cycles[k], &cfg).unwrap());
        for j in 0..mc.genus() {
            let want = if j == k { C64::new(0.0, 2.0 * std::f64::consts::PI) } else { C64::new(0.0, 0.0) };
            assert!((a[j] - want).norm() < 1e-9);
            assert!((b[j] - mc.periods.tau[(k, j)]).norm() < 1e-9);
        }
    }
}
