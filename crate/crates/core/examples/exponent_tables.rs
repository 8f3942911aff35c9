//! Exact Thomae exponents for N = 2..5.
use zn_thomae::partition::{mu, q_pair_closed, thomae_exponents, Partition, Q};

fn main() {
    for n in 2..=5usize {
        let nq = Q::from_integer(n as i64);
        let q0: Vec<String> = (0..n as i64).map(|j| q_pair_closed(n, 0, j).to_string()).collect();
        let powers: Vec<String> = (0..=n as i64 / 2)
            .map(|d| (Q::from_integer(2) * nq * q_pair_closed(n, 0, d) + nq * mu(n)).to_string())
            .collect();
        println!("N = {n}: mu = {}, q(0,j) = [{}], block powers by |i-j| = [{}]", mu(n), q0.join(", "), powers.join(", "));
    }
    let table = thomae_exponents(&"1,4|2,5|3,6".parse::<Partition>().unwrap());
    print!("\n{}", table.to_csv());
}
