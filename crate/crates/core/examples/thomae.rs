//! Thomae constants C_Lambda over the standard partition sample.
use zn_thomae::config::seeded_curve;
use zn_thomae::surface::{MarkedCurve, Settings};
use zn_thomae::thomae::{c_spread, check_exchange_ratio, hyperelliptic_constant, standard_sample, thomae_records};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (n, m, seed) in [(2, 3, 1), (3, 2, 7)] {
        let mc = MarkedCurve::build(seeded_curve(n, m, seed)?, Settings::default())?;
        let sample = standard_sample(n, m);
        let recs = thomae_records(&mc, &sample)?;
        println!("(N, m) = ({n}, {m})");
        for r in &recs {
            println!("  {:<14} C = {:.6e}  C^2N = {:.10e}", r.partition, r.c, r.c_2n);
        }
        println!("  spread of C^2N: {:e}", c_spread(&recs));
        let x = check_exchange_ratio(&mc, &sample[0])?;
        println!("  exchange {} -> {}: deviation {:e}", x.first, x.second, x.deviation);
        if n == 2 {
            let h = hyperelliptic_constant(&mc, &sample[0])?;
            println!("  |C|^2 = {:.12e}, (2 pi)^(-4(m-1)) = {:.12e}", h.abs_c_sq, h.expected);
        }
    }
    Ok(())
}
