//! Period matrices of a hyperelliptic and a Z_3 curve.
use zn_thomae::config::seeded_curve;
use zn_thomae::surface::{MarkedCurve, Settings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (n, m, seed) in [(2, 2, 3), (2, 3, 1), (3, 2, 7)] {
        let mc = MarkedCurve::build(seeded_curve(n, m, seed)?, Settings::default())?;
        let p = &mc.periods;
        println!("(N, m) = ({n}, {m}), genus {}", mc.genus());
        println!("  det A = {:.10}", p.det_a);
        println!("  symmetry residual {:e}, max eigenvalue of Re tau {:.4}", p.symmetry_residual(), p.re_tau_max_eigenvalue());
        for j in 0..mc.genus() {
            let row: Vec<String> = (0..mc.genus()).map(|k| format!("{:.6}", p.tau[(j, k)])).collect();
            println!("  [{}]", row.join(", "));
        }
    }
    Ok(())
}
