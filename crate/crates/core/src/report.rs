//! Serializable reports and their CSV mirrors.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::CurveDoc;
use crate::kernel::SzegoComparison;
use crate::surface::MarkedCurve;
use crate::thomae::{ExchangeCheck, FdCheck, HyperellipticConstant, ThomaeRecord, VanishingCheck};

pub type Matrix = Vec<Vec<C64>>;

pub fn matrix(m: &DMatrix<C64>) -> Matrix {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub curve: CurveDoc,
    pub seed: Option<u64>,
    pub tolerances: serde_json::Value,
}

/// SHA-256 over the differential basis, the generator list and the cycle
/// coefficients: equal fingerprints mean the same marking.
pub fn basis_fingerprint(mc: &MarkedCurve) -> String {
    let mut h = Sha256::new();
    for d in &mc.periods.basis {
        h.update(format!("w{},{};", d.alpha, d.beta));
    }
    for g in &mc.basis.generators {
        h.update(format!("g{},{},{};", g.a, g.b, g.sheet));
    }
    for c in mc.basis.a_cycles.iter().chain(&mc.basis.b_cycles) {
        h.update(format!("{:?};", c.coeffs));
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodReport {
    pub provenance: Provenance,
    pub genus: usize,
    pub basis: Vec<[usize; 2]>,
    pub basis_fingerprint: String,
    pub base_point: C64,
    pub a: Matrix,
    pub b: Matrix,
    pub tau: Matrix,
    pub det_a: C64,
    pub symmetry_residual: f64,
    pub re_tau_max_eigenvalue: f64,
    pub condition: f64,
    pub quad_error: f64,
    pub normalization_residual: f64,
    pub riemann_char: Vec<f64>,
    pub odd_char: Vec<f64>,
}

impl PeriodReport {
    pub fn new(mc: &MarkedCurve, provenance: Provenance) -> Self {
        let p = &mc.periods;
        let flat = |c: &crate::theta::Characteristic| c.delta.iter().chain(&c.eps).copied().collect();
        PeriodReport {
            provenance,
            genus: mc.genus(),
            basis: p.basis.iter().map(|d| [d.alpha, d.beta]).collect(),
            basis_fingerprint: basis_fingerprint(mc),
            base_point: mc.basis.loops.base(),
            a: matrix(&p.a),
            b: matrix(&p.b),
            tau: matrix(&p.tau),
            det_a: p.det_a,
            symmetry_residual: p.symmetry_residual(),
            re_tau_max_eigenvalue: p.re_tau_max_eigenvalue(),
            condition: p.condition,
            quad_error: p.quad_error,
            normalization_residual: p.normalization_residual(),
            riemann_char: flat(&mc.abel.riemann_char),
            odd_char: flat(&mc.odd),
        }
    }

    /// One row per τ entry.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("j,k,re,im\n");
        for (j, row) in self.tau.iter().enumerate() {
            for (k, x) in row.iter().enumerate() {
                out.push_str(&format!("{},{},{:e},{:e}\n", j + 1, k + 1, x.re, x.im));
            }
        }
        out
    }
}

/// One named pass/fail line.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Informational lines never fail the run.
    pub gating: bool,
}

impl CheckLine {
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckLine { name: name.into(), value, tolerance, pass: value < tolerance, gating: true }
    }

    pub fn above(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckLine { name: name.into(), value, tolerance, pass: value > tolerance, gating: true }
    }

    pub fn informational(mut self) -> Self {
        self.gating = false;
        self
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct VerifyDetails {
    pub thomae: Vec<ThomaeRecord>,
    pub c_spread: Option<f64>,
    pub vanishing: Vec<VanishingCheck>,
    pub control_ratio: Option<f64>,
    pub szego: Option<SzegoComparison>,
    pub fay: Vec<FayLine>,
    pub variation: Vec<FdCheck>,
    pub lambda_derivative: Vec<FdCheck>,
    pub exchange: Vec<ExchangeCheck>,
    pub hyperelliptic: Option<HyperellipticConstant>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FayLine {
    pub x: C64,
    pub y: C64,
    pub h: f64,
    pub residual: f64,
    pub residual_2h: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThomaeReport {
    pub provenance: Provenance,
    pub basis_fingerprint: String,
    pub checks: Vec<CheckLine>,
    pub details: VerifyDetails,
    pub pass: bool,
}

impl ThomaeReport {
    pub fn new(mc: &MarkedCurve, provenance: Provenance, checks: Vec<CheckLine>, details: VerifyDetails) -> Self {
        let pass = checks.iter().all(|c| c.pass || !c.gating);
        ThomaeReport { provenance, basis_fingerprint: basis_fingerprint(mc), checks, details, pass }
    }

    /// Per-partition Thomae records.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("partition,c_re,c_im,c2n_re,c2n_im,theta0_re,theta0_im,char_residual\n");
        for r in &self.details.thomae {
            out.push_str(&format!(
                "\"{}\",{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                r.partition, r.c.re, r.c.im, r.c_2n.re, r.c_2n.im, r.theta0.re, r.theta0.im, r.char_residual
            ));
        }
        out
    }
}

pub fn checks_csv(checks: &[CheckLine]) -> String {
    let mut out = String::from("check,value,tolerance,pass,gating\n");
    for c in checks {
        out.push_str(&format!("{},{:e},{:e},{},{}\n", c.name, c.value, c.tolerance, c.pass, c.gating));
    }
    out
}
