//! dtau/dlambda_i and d log theta[e_Lambda](0)/dlambda_i by central differences.
use zn_thomae::config::seeded_curve;
use zn_thomae::partition::Partition;
use zn_thomae::surface::{MarkedCurve, Settings};
use zn_thomae::thomae::{check_lambda_derivative, check_variation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for (n, m, seed) in [(2, 2, 3), (3, 2, 7)] {
        let mc = MarkedCurve::build(seeded_curve(n, m, seed)?, Settings::default())?;
        println!("(N, m) = ({n}, {m})");
        for i in 0..n * m {
            let v = check_variation(&mc, i, 1e-4)?;
            let l = check_lambda_derivative(&mc, &Partition::consecutive(n, m), i, 1e-4)?;
            println!(
                "  lambda_{}: tau error {:.2e} (x{:.2} on halving), log theta error {:.2e} (x{:.2})",
                i + 1, v.error_h, v.order_ratio, l.error_h, l.order_ratio
            );
        }
    }
    Ok(())
}
