//! Curve input: seeded generation and the JSON document format.

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::ZnCurve;
use crate::error::{input, Error, Result};

/// Minimum separation of seeded branch points.
pub const SEED_SEPARATION: f64 = 0.15;

/// Nm points uniform in the annulus 1 ≤ |λ| ≤ 2, pairwise at least
/// SEED_SEPARATION apart, from a ChaCha8 stream.
pub fn seeded_lambdas(n: usize, m: usize, seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<C64> = Vec::with_capacity(n * m);
    while out.len() < n * m {
        let r = rng.gen_range(1.0f64..4.0).sqrt();
        let th = rng.gen_range(0.0..std::f64::consts::TAU);
        let z = C64::from_polar(r, th);
        if out.iter().all(|w| (z - w).norm() > SEED_SEPARATION) {
            out.push(z);
        }
    }
    out
}

pub fn seeded_curve(n: usize, m: usize, seed: u64) -> Result<ZnCurve> {
    if m == 0 {
        return input("m must be at least 1");
    }
    ZnCurve::new(n, seeded_lambdas(n, m, seed))
}

/// {"N": int, "lambdas": [[re, im], ...]}
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveDoc {
    #[serde(rename = "N")]
    pub n: usize,
    pub lambdas: Vec<[f64; 2]>,
}

impl CurveDoc {
    pub fn from_curve(c: &ZnCurve) -> Self {
        CurveDoc { n: c.sheets(), lambdas: c.lambdas().iter().map(|z| [z.re, z.im]).collect() }
    }

    pub fn into_curve(self) -> Result<ZnCurve> {
        ZnCurve::new(self.n, self.lambdas.iter().map(|p| C64::new(p[0], p[1])).collect())
    }
}

pub fn parse_curve_json(text: &str) -> Result<ZnCurve> {
    let doc: CurveDoc = serde_json::from_str(text).map_err(|e| Error::Input(format!("curve JSON: {e}")))?;
    doc.into_curve()
}

/// Parses "re,im;re,im;…" (imaginary part optional).
pub fn parse_lambdas(text: &str) -> Result<Vec<C64>> {
    text.split(';')
        .filter(|t| !t.trim().is_empty())
        .enumerate()
        .map(|(i, t)| {
            let parts: Vec<&str> = t.split(',').map(str::trim).collect();
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::Input(format!("lambda {}: bad number '{s}'", i + 1)));
            match parts.as_slice() {
                [re] => Ok(C64::new(num(re)?, 0.0)),
                [re, im] => Ok(C64::new(num(re)?, num(im)?)),
                _ => Err(Error::Input(format!("lambda {}: expected 're,im'", i + 1))),
            }
        })
        .collect()
}
