//! Analytic against algebraic Szegő kernel, and the Fay identity.
use zn_thomae::config::seeded_curve;
use zn_thomae::kernel::{compare_szego, sample_pairs, KernelEngine};
use zn_thomae::partition::Partition;
use zn_thomae::surface::{MarkedCurve, Settings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mc = MarkedCurve::build(seeded_curve(3, 2, 7)?, Settings::default())?;
    let engine = KernelEngine::new(&mc)?;
    let pairs = sample_pairs(&engine, 20, 7)?;
    let lambda = Partition::consecutive(3, 2);
    let cmp = compare_szego(&engine, &lambda, &pairs)?;
    println!("sign {}, max |R - sF|/|F| = {:e}, max modulus deviation {:e}", cmp.sign, cmp.max_deviation, cmp.max_modulus_deviation);
    let e = mc.e_lambda(&lambda)?.rounded;
    for (x, y) in pairs.iter().take(3) {
        let h = engine.default_step(x, y);
        let a = engine.fay(x, y, &e, 2.0 * h)?.residual;
        let b = engine.fay(x, y, &e, h)?.residual;
        println!("fay at z = {:.3}, {:.3}: {b:e} (step {h:.1e}), ratio on halving {:.2}", x.z(), y.z(), a / b);
    }
    Ok(())
}
