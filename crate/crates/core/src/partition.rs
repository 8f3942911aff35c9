//! Ordered partitions of the branch points and the exact rational exponents
//! attached to them.

use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

pub type Q = Ratio<i64>;

/// Λ = (Λ_0, …, Λ_{N-1}), stored with 0-based branch indices.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    parts: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(mut parts: Vec<Vec<usize>>) -> Result<Self> {
        let n = parts.len();
        if n < 2 {
            return input("a partition needs at least two parts");
        }
        let m = parts[0].len();
        if m == 0 || parts.iter().any(|p| p.len() != m) {
            return input("all parts must have the same non-zero size");
        }
        let mut seen = vec![false; n * m];
        for p in &mut parts {
            p.sort_unstable();
            for &i in p.iter() {
                if i >= n * m || seen[i] {
                    return input(format!("index {} repeated or out of range 1..={}", i + 1, n * m));
                }
                seen[i] = true;
            }
        }
        Ok(Partition { parts })
    }

    /// Λ_j = {jm, …, jm + m - 1}.
    pub fn consecutive(n: usize, m: usize) -> Self {
        Partition { parts: (0..n).map(|j| (j * m..(j + 1) * m).collect()).collect() }
    }

    /// Rebuilds the partition from the weights k_i.
    pub fn from_weights(n: usize, k: &[usize]) -> Result<Self> {
        let mut parts = vec![Vec::new(); n];
        for (i, &kj) in k.iter().enumerate() {
            if kj >= n {
                return input(format!("weight {kj} out of range for N = {n}"));
            }
            parts[kj].push(i);
        }
        Partition::new(parts)
    }

    pub fn parts(&self) -> &[Vec<usize>] {
        &self.parts
    }

    pub fn sheets(&self) -> usize {
        self.parts.len()
    }

    pub fn m(&self) -> usize {
        self.parts[0].len()
    }

    /// k_i = j iff i ∈ Λ_j.
    pub fn weights(&self) -> Vec<usize> {
        let mut k = vec![0; self.sheets() * self.m()];
        for (j, p) in self.parts.iter().enumerate() {
            for &i in p {
                k[i] = j;
            }
        }
        k
    }

    /// Λ(j) = (Λ_j, Λ_{j+1}, …, Λ_{j-1}).
    pub fn rotate(&self, j: usize) -> Partition {
        let n = self.sheets();
        Partition { parts: (0..n).map(|t| self.parts[(t + j) % n].clone()).collect() }
    }

    /// Λ⁻ = (Λ_0, Λ_{N-1}, …, Λ_1).
    pub fn reverse(&self) -> Partition {
        let n = self.sheets();
        Partition { parts: (0..n).map(|t| self.parts[(n - t) % n].clone()).collect() }
    }

    /// Swaps branch point `a` (in some part) with branch point `b` (in another).
    pub fn exchange(&self, a: usize, b: usize) -> Partition {
        let mut parts = self.parts.clone();
        for p in &mut parts {
            for x in p.iter_mut() {
                if *x == a {
                    *x = b;
                } else if *x == b {
                    *x = a;
                }
            }
            p.sort_unstable();
        }
        Partition { parts }
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self
            .parts
            .iter()
            .map(|p| p.iter().map(|i| (i + 1).to_string()).collect::<Vec<_>>().join(","))
            .collect();
        write!(f, "{}", s.join("|"))
    }
}

impl FromStr for Partition {
    type Err = Error;

    /// Parses "1,4|2,5|3,6" (1-based indices).
    fn from_str(s: &str) -> Result<Self> {
        let mut parts = Vec::new();
        for part in s.split('|') {
            let mut p = Vec::new();
            for tok in part.split(',') {
                let tok = tok.trim();
                let i: usize = tok.parse().map_err(|_| Error::Input(format!("bad partition index '{tok}'")))?;
                if i == 0 {
                    return input("partition indices are 1-based");
                }
                p.push(i - 1);
            }
            parts.push(p);
        }
        Partition::new(parts)
    }
}

fn frac(x: Q) -> Q {
    x - x.floor()
}

/// The label set L = {-(N-1)/2, …, (N-1)/2}, each l given as 2l.
pub fn labels(n: usize) -> impl Iterator<Item = i64> {
    let n = n as i64;
    (0..n).map(move |j| 2 * j - (n - 1))
}

/// q_l(i) = (1-N)/(2N) + {(l + i + (N-1)/2)/N}, with l passed as 2l.
pub fn q_l(n: usize, l2: i64, i: i64) -> Result<Q> {
    let ni = n as i64;
    if l2.abs() > ni - 1 || (l2 + ni - 1) % 2 != 0 {
        return Err(Error::Input(format!("l = {l2}/2 is not in L for N = {n}")));
    }
    let j = (l2 + ni - 1) / 2;
    Ok(Q::new(1 - ni, 2 * ni) + frac(Q::new(j + i, ni)))
}

/// q(i,j) = Σ_{l∈L} q_l(i) q_l(j), computed from the definition and checked
/// against the closed form (1/N)((N²-1)/12 - ½(t-r)(N-t+r)).
pub fn q_pair(n: usize, i: i64, j: i64) -> Q {
    let by_sum: Q = labels(n).map(|l2| q_l(n, l2, i).unwrap() * q_l(n, l2, j).unwrap()).sum();
    let closed = q_pair_closed(n, i, j);
    assert_eq!(by_sum, closed, "q(i,j) definitions disagree for N = {n}, i = {i}, j = {j}");
    by_sum
}

pub fn q_pair_closed(n: usize, i: i64, j: i64) -> Q {
    let ni = n as i64;
    let d = (j - i).mod_floor(&ni);
    (Q::new(ni * ni - 1, 12) - Q::new(d * (ni - d), 2)) / Q::from_integer(ni)
}

/// μ = (N-1)(2N-1)/(6N).
pub fn mu(n: usize) -> Q {
    let ni = n as i64;
    Q::new((ni - 1) * (2 * ni - 1), 6 * ni)
}

/// Σ_{l∈L} l q_l(r) = (N²-1)/12 - ½ r(N-r) for every r in 0..N.
pub fn weighted_sum_check(n: usize) -> bool {
    let ni = n as i64;
    (0..ni).all(|r| {
        let lhs: Q = labels(n).map(|l2| Q::new(l2, 2) * q_l(n, l2, r).unwrap()).sum();
        lhs == Q::new(ni * ni - 1, 12) - Q::new(r * (ni - r), 2)
    })
}

/// Exact exponent data for one partition.
#[derive(Clone, Debug, PartialEq)]
pub struct ExponentTable {
    pub n: usize,
    pub mu: Q,
    /// q(i,j) for 0 ≤ i,j < N.
    pub q: Vec<Vec<Q>>,
    pub weights: Vec<usize>,
    /// e_ij = 2N q(k_i,k_j) + Nμ for i < j (entries with i ≥ j are zero).
    pub e: Vec<Vec<Q>>,
}

pub fn thomae_exponents(lambda: &Partition) -> ExponentTable {
    let n = lambda.sheets();
    let k = lambda.weights();
    let q: Vec<Vec<Q>> = (0..n as i64).map(|i| (0..n as i64).map(|j| q_pair(n, i, j)).collect()).collect();
    let mu = mu(n);
    let nn = Q::from_integer(n as i64);
    let e = (0..k.len())
        .map(|i| {
            (0..k.len())
                .map(|j| if i < j { Q::from_integer(2) * nn * q[k[i]][k[j]] + nn * mu } else { Q::from_integer(0) })
                .collect()
        })
        .collect();
    ExponentTable { n, mu, q, weights: k, e }
}

impl ExponentTable {
    /// Upper triangle as CSV rows "i,j,p/q" with 1-based indices.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,exponent\n");
        for i in 0..self.e.len() {
            for j in i + 1..self.e.len() {
                out.push_str(&format!("{},{},{}\n", i + 1, j + 1, self.e[i][j]));
            }
        }
        out
    }
}
