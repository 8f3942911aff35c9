//! Canonical homology basis of a seeded Z_3 curve and its intersection matrix.
use zn_thomae::config::seeded_curve;
use zn_thomae::homology::{build_basis, monodromy, LoopSystem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curve = seeded_curve(3, 2, 7)?;
    let loops = LoopSystem::new(&curve)?;
    println!("genus {}, base point {:.4}", curve.genus(), loops.base());
    let mono = monodromy(&curve, &loops)?;
    println!("monodromy: {:?}", mono);
    let basis = build_basis(&curve, &loops)?;
    for (k, (a, b)) in basis.a_cycles.iter().zip(&basis.b_cycles).enumerate() {
        println!("A{} = {:?}\nB{} = {:?}", k + 1, a.coeffs, k + 1, b.coeffs);
    }
    for row in basis.intersection_matrix() {
        println!("{row:?}");
    }
    Ok(())
}
