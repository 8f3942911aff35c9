//! Theta constants with characteristics e_Lambda, and their vanishing gradients.
use zn_thomae::config::seeded_curve;
use zn_thomae::partition::Partition;
use zn_thomae::surface::{MarkedCurve, Settings};
use zn_thomae::thomae::{control_characteristic, gradient_ratio};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mc = MarkedCurve::build(seeded_curve(3, 2, 7)?, Settings::default())?;
    let zero = vec![zn_thomae::C64::new(0.0, 0.0); mc.genus()];
    for p in ["1,2|3,4|5,6", "1,2|5,6|3,4", "1,3|2,4|5,6"] {
        let lambda: Partition = p.parse()?;
        let lc = mc.e_lambda(&lambda)?;
        let t = mc.theta_at(&zero, &lc.rounded)?;
        let ex = lc.rounded.exact.as_ref().unwrap();
        println!("{p}: delta = {:?}/{d}, eps = {:?}/{d}", ex.delta, ex.eps, d = ex.den);
        println!("  theta(0) = {:.10}, |grad|/|theta| = {:e}", t.value, gradient_ratio(&mc, &lc.rounded)?);
    }
    let ctl = control_characteristic(mc.genus(), 1);
    println!("generic characteristic: |grad|/|theta| = {:.4}", gradient_ratio(&mc, &ctl)?);
    Ok(())
}
