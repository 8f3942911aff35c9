use zn_thomae::config::seeded_curve;
use zn_thomae::kernel::{compare_szego, sample_pairs, AlgebraicKernel, KernelEngine};
use zn_thomae::partition::Partition;
use zn_thomae::surface::{MarkedCurve, Settings};
use zn_thomae::C64;

fn marked(n: usize, m: usize, seed: u64) -> MarkedCurve {
    MarkedCurve::build(seeded_curve(n, m, seed).unwrap(), Settings::default()).unwrap()
}

#[test]
fn szego_kernels_agree_on_z3() {
    let mc = marked(3, 2, 7);
    let engine = KernelEngine::new(&mc).unwrap();
    let pairs = sample_pairs(&engine, 20, 11).unwrap();
    for lambda in [Partition::consecutive(3, 2), Partition::consecutive(3, 2).reverse(), Partition::consecutive(3, 2).rotate(1)] {
        let cmp = compare_szego(&engine, &lambda, &pairs).unwrap();
        eprintln!("{} sign {} dev {:e} mod {:e}", cmp.partition, cmp.sign, cmp.max_deviation, cmp.max_modulus_deviation);
        assert!(cmp.max_modulus_deviation < 1e-8);
        assert!(cmp.max_deviation < 1e-6);
    }
}

#[test]
fn szego_kernels_agree_hyperelliptic() {
    let mc = marked(2, 3, 1);
    let engine = KernelEngine::new(&mc).unwrap();
    let pairs = sample_pairs(&engine, 10, 5).unwrap();
    let cmp = compare_szego(&engine, &Partition::consecutive(2, 3), &pairs).unwrap();
    eprintln!("sign {} dev {:e}", cmp.sign, cmp.max_deviation);
    assert!(cmp.max_deviation < 1e-6);
}

#[test]
fn algebraic_kernel_local_expansion() {
    let mc = marked(3, 2, 7);
    let lambda = Partition::consecutive(3, 2).exchange(0, 1);
    let alg = AlgebraicKernel::new(&mc.curve, &lambda).unwrap();
    let x = mc.point(1, mc.curve.centroid() + C64::new(0.3, 0.2)).unwrap().tracked;
    let g = |d: C64| {
        let y = x.advance(&mc.curve, x.z + d);
        alg.eval(&x, &y).unwrap() * d
    };
    for d in [C64::new(1e-3, 0.0), C64::new(0.0, 1e-3)] {
        assert!((g(d) - 1.0).norm() < 1e-2);
        let c2 = (g(d) + g(-d) - 2.0) / (2.0 * d * d);
        let expect = alg.second_order(&lambda, x.z);
        assert!((c2 - expect).norm() < 1e-4 * expect.norm().max(1.0), "{c2} vs {expect}");
    }
}

#[test]
fn genus_zero_kernel_is_elementary() {
    let (a, b) = (C64::new(-1.0, 0.2), C64::new(0.7, -0.5));
    let curve = zn_thomae::curve::ZnCurve::new(2, vec![a, b]).unwrap();
    let lambda = Partition::consecutive(2, 1);
    let alg = AlgebraicKernel::new(&curve, &lambda).unwrap();
    let frame = zn_thomae::curve::SheetFrame::new(&curve, C64::new(0.1, 2.0), 0).unwrap();
    // On s^2 = (z-a)(z-b) the kernel is ((u_x/u_y)^{1/4} + (u_y/u_x)^{1/4}) / 2(z_y - z_x)
    // with u = (z-a)/(z-b), and (u_x/u_y)^{1/2} = (z_x-a)s_y/((z_y-a)s_x).
    for sheet_y in 0..2 {
        let x = frame.point(&curve, 0).advance(&curve, C64::new(0.4, 1.1));
        let y = frame.point(&curve, sheet_y).advance(&curve, C64::new(-0.8, 1.5));
        let f = alg.eval(&x, &y).unwrap() * 2.0 * (y.z - x.z);
        let t = (x.z - a) * y.s / ((y.z - a) * x.s);
        assert!((f * f - 2.0 - (t + 1.0 / t)).norm() < 1e-12, "{f} vs {t}");
    }
}

#[test]
fn prime_form_and_bidifferential_symmetries() {
    let mc = marked(3, 2, 7);
    let engine = KernelEngine::new(&mc).unwrap();
    for (x, y) in sample_pairs(&engine, 4, 3).unwrap() {
        let e = engine.prime_form(&x, &y).unwrap();
        assert!((e + engine.prime_form(&y, &x).unwrap()).norm() < 1e-12 * e.norm());
        let w = engine.canonical_diff_analytic(&x, &y).unwrap();
        assert!((w - engine.canonical_diff_analytic(&y, &x).unwrap()).norm() < 1e-10 * w.norm());
        let fd = engine.canonical_diff(&x, &y, 1e-3).unwrap();
        assert!((fd - w).norm() < 1e-5 * w.norm(), "{fd} vs {w}");
    }
}

#[test]
fn fay_identity_converges_quadratically() {
    let mc = marked(3, 2, 7);
    let engine = KernelEngine::new(&mc).unwrap();
    let e = mc.e_lambda(&Partition::consecutive(3, 2)).unwrap().rounded;
    let (x, y) = sample_pairs(&engine, 1, 9).unwrap().remove(0);
    let h = engine.default_step(&x, &y);
    let r1 = engine.fay(&x, &y, &e, 2.0 * h).unwrap().residual;
    let r2 = engine.fay(&x, &y, &e, h).unwrap().residual;
    eprintln!("fay {r1:e} {r2:e}");
    assert!(r2 < 1e-4);
    assert!(r1 / r2 > 3.0 && r1 / r2 < 5.0);
}

