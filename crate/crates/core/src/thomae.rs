//! The Thomae constants C_Λ and the checks built on them: partition
//! invariance, vanishing of theta derivatives, the exchange ratio, the
//! variation of τ and the λ-derivative of log θ[e_Λ](0).

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::{mu, q_pair_closed, thomae_exponents, Partition, Q};
use crate::periods::branch_taylor;
use crate::surface::MarkedCurve;
use crate::theta::Characteristic;

fn qf(q: Q) -> f64 {
    *q.numer() as f64 / *q.denom() as f64
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm())
}

/// θ[e](0) below this fraction of the largest lattice term counts as zero.
pub const SINGULAR_THRESHOLD: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThomaeRecord {
    pub partition: String,
    /// Characteristic numerators over 2N.
    pub delta: Vec<i64>,
    pub eps: Vec<i64>,
    pub char_residual: f64,
    pub theta0: C64,
    /// log θ[e_Λ](0)^{2N} and log RHS₀, principal branches of the factors.
    pub log_lhs: C64,
    pub log_rhs0: C64,
    pub c: C64,
    pub c_2n: C64,
}

/// Σ_{i<j} e_ij log(λ_i - λ_j) for integer exponents e_ij.
fn log_lambda_product(mc: &MarkedCurve, exps: impl Fn(usize, usize) -> i64) -> C64 {
    let l = mc.curve.lambdas();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            s += (l[i] - l[j]).ln() * exps(i, j) as f64;
        }
    }
    s
}

fn theta_constant(mc: &MarkedCurve, ch: &Characteristic) -> Result<C64> {
    let r = mc.theta_at(&vec![C64::new(0.0, 0.0); mc.genus()], ch)?;
    if r.value.norm() < SINGULAR_THRESHOLD * r.scale() {
        return Err(Error::Numerical(format!("θ[e](0) vanishes for {ch:?}, a non-singularity counterexample candidate")));
    }
    Ok(r.value)
}

pub fn thomae_sides(mc: &MarkedCurve, lambda: &Partition) -> Result<ThomaeRecord> {
    let n = mc.curve.sheets();
    let lc = mc.e_lambda(lambda)?;
    let theta0 = theta_constant(mc, &lc.rounded)?;
    let table = thomae_exponents(lambda);
    let log_lhs = theta0.ln() * (2 * n) as f64;
    let exps = |i: usize, j: usize| {
        let e = table.e[i][j];
        assert!(e.is_integer(), "Thomae exponents are integers");
        e.to_integer()
    };
    let log_rhs0 = mc.periods.det_a.ln() * n as f64 + log_lambda_product(mc, exps);
    let log_c = log_lhs - log_rhs0;
    let exact = lc.rounded.exact.as_ref().expect("rounded characteristics are rational");
    Ok(ThomaeRecord {
        partition: lc.partition,
        delta: exact.delta.clone(),
        eps: exact.eps.clone(),
        char_residual: lc.residual,
        theta0,
        log_lhs,
        log_rhs0,
        c: log_c.exp(),
        c_2n: (log_c * (2 * n) as f64).exp(),
    })
}

/// All N rotations of the consecutive partition, Λ⁻, and the exchanges of
/// the last (and the first) elements of Λ_j and Λ_{j+1}, without repeats.
pub fn standard_sample(n: usize, m: usize) -> Vec<Partition> {
    let base = Partition::consecutive(n, m);
    let mut out: Vec<Partition> = (0..n).map(|j| base.rotate(j)).collect();
    out.push(base.reverse());
    for j in 0..n - 1 {
        let (p, q) = (&base.parts()[j], &base.parts()[j + 1]);
        out.push(base.exchange(p[m - 1], q[m - 1]));
        out.push(base.exchange(p[0], q[0]));
    }
    let mut seen = Vec::new();
    out.retain(|p| {
        let key = p.to_string();
        if seen.contains(&key) {
            false
        } else {
            seen.push(key);
            true
        }
    });
    out
}

pub fn thomae_records(mc: &MarkedCurve, partitions: &[Partition]) -> Result<Vec<ThomaeRecord>> {
    partitions.par_iter().map(|p| thomae_sides(mc, p)).collect()
}

/// max over pairs of |C_Λ^{2N} - C_Λ'^{2N}| / |C_Λ^{2N}|.
pub fn c_spread(records: &[ThomaeRecord]) -> f64 {
    let mut worst = 0.0f64;
    for a in records {
        for b in records {
            worst = worst.max((a.c_2n - b.c_2n).norm() / a.c_2n.norm());
        }
    }
    worst
}

/// max_i |∂θ[e]/∂z_i(0)| / |θ[e](0)|.
pub fn gradient_ratio(mc: &MarkedCurve, ch: &Characteristic) -> Result<f64> {
    let r = mc.theta_at(&vec![C64::new(0.0, 0.0); mc.genus()], ch)?;
    Ok(r.gradient.iter().map(|x| x.norm()).fold(0.0, f64::max) / r.value.norm())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VanishingCheck {
    pub partition: String,
    pub ratio: f64,
}

pub fn check_derivative_vanishing(mc: &MarkedCurve, lambda: &Partition) -> Result<VanishingCheck> {
    let ch = mc.e_lambda(lambda)?.rounded;
    Ok(VanishingCheck { partition: lambda.to_string(), ratio: gradient_ratio(mc, &ch)? })
}

/// A seeded generic real characteristic, used as the negative control.
pub fn control_characteristic(g: usize, seed: u64) -> Characteristic {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = || (0..g).map(|_| rng.gen_range(0.05..0.95)).collect::<Vec<f64>>();
    let delta = v();
    Characteristic::real(delta, v())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExchangeCheck {
    pub first: String,
    pub second: String,
    /// (θ[e_Λ1](0)/θ[e_Λ2](0))^{4N²} and the λ-product with B = 1.
    pub lhs: C64,
    pub rhs: C64,
    pub deviation: f64,
    /// Same λ-product written as ∏(λ_i-λ_j)^{4N²(q(k_i,k_j)-q(k'_i,k'_j))}.
    pub product_mismatch: f64,
}

/// Compares Λ with the partition obtained by swapping the last elements of
/// Λ_0 and Λ_{N-1}.
pub fn check_exchange_ratio(mc: &MarkedCurve, lambda: &Partition) -> Result<ExchangeCheck> {
    let n = lambda.sheets();
    let m = lambda.m();
    let parts = lambda.parts();
    let (a, b) = (parts[0][m - 1], parts[n - 1][m - 1]);
    let second = lambda.exchange(a, b);
    let t1 = theta_constant(mc, &mc.e_lambda(lambda)?.rounded)?;
    let t2 = theta_constant(mc, &mc.e_lambda(&second)?.rounded)?;
    let p = (4 * n * n) as f64;
    let log_lhs = (t1.ln() - t2.ln()) * p;
    let l = mc.curve.lambdas();
    let d = |i: usize, j: usize| (l[i] - l[j]).ln();
    let nn = n as f64;
    let mut log_rhs = C64::new(0.0, 0.0);
    for (r, part) in parts.iter().enumerate().take(n - 1).skip(1) {
        for &i in part {
            log_rhs += (d(i, a) - d(i, b)) * (2.0 * nn * (nn - 1.0 - 2.0 * r as f64));
        }
    }
    for s in 0..m - 1 {
        let (x, y) = (parts[n - 1][s], parts[0][s]);
        log_rhs += (d(x, b) + d(y, a) - d(y, b) - d(x, a)) * (2.0 * nn * (nn - 1.0));
    }
    let (k1, k2) = (lambda.weights(), second.weights());
    let four = Q::from_integer((4 * n * n) as i64);
    let via_q = log_lambda_product(mc, |i, j| {
        let e = four * (q_pair_closed(n, k1[i] as i64, k1[j] as i64) - q_pair_closed(n, k2[i] as i64, k2[j] as i64));
        e.to_integer()
    });
    let (lhs, rhs) = (log_lhs.exp(), log_rhs.exp());
    Ok(ExchangeCheck {
        first: lambda.to_string(),
        second: second.to_string(),
        lhs,
        rhs,
        deviation: rel(lhs, rhs),
        product_mismatch: rel(via_q.exp(), rhs),
    })
}

/// |C_Λ|² against (2π)^{-4(m-1)} for N = 2.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HyperellipticConstant {
    pub partition: String,
    pub abs_c_sq: f64,
    pub expected: f64,
    pub deviation: f64,
}

pub fn hyperelliptic_constant(mc: &MarkedCurve, lambda: &Partition) -> Result<HyperellipticConstant> {
    if mc.curve.sheets() != 2 {
        return Err(Error::Input("the hyperelliptic constant needs N = 2".into()));
    }
    let rec = thomae_sides(mc, lambda)?;
    let expected = (2.0 * std::f64::consts::PI).powi(-4 * (mc.curve.m() as i32 - 1));
    let abs_c_sq = rec.c.norm_sqr();
    Ok(HyperellipticConstant { partition: rec.partition, abs_c_sq, expected, deviation: (abs_c_sq - expected).abs() / expected })
}

/// Central difference at h and at h/2 against an exact value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FdCheck {
    pub branch: usize,
    pub h: f64,
    pub error_h: f64,
    pub error_half: f64,
    /// error_h / error_half, ~4 for a second-order difference.
    pub order_ratio: f64,
}

impl FdCheck {
    fn new(branch: usize, h: f64, error_h: f64, error_half: f64) -> Self {
        FdCheck { branch, h, error_h, error_half, order_ratio: error_h / error_half }
    }

    /// Passes when the error at h is below tol and halving h either gives
    /// roughly a 4× gain or already sits at roundoff level.
    pub fn passes(&self, tol: f64) -> bool {
        self.error_h < tol && (self.order_ratio > 2.5 && self.order_ratio < 6.0 || self.error_h < 1e-3 * tol)
    }
}

fn perturbed_pair(mc: &MarkedCurve, i: usize, h: f64) -> Result<(MarkedCurve, MarkedCurve)> {
    Ok((mc.perturbed(i, C64::new(h, 0.0))?, mc.perturbed(i, C64::new(-h, 0.0))?))
}

/// dτ_jk/dλ_i = (1/N) Σ_α a_j^(α) a_k^(N-2-α), a the Taylor coefficients of
/// v_j/dt at λ_i in the local parameter t.
pub fn variation_formula(mc: &MarkedCurve, i: usize) -> Vec<Vec<C64>> {
    let n = mc.curve.sheets();
    let bt = branch_taylor(&mc.curve, &mc.basis.loops, &mc.periods, i);
    let g = mc.genus();
    (0..g)
        .map(|j| {
            (0..g)
                .map(|k| (0..n - 1).map(|a| bt.coeffs[a][j] * bt.coeffs[n - 2 - a][k]).sum::<C64>() / n as f64)
                .collect()
        })
        .collect()
}

fn tau_fd_error(mc: &MarkedCurve, i: usize, h: f64, exact: &[Vec<C64>]) -> Result<f64> {
    let (p, m) = perturbed_pair(mc, i, h)?;
    let scale = exact.iter().flatten().map(|x| x.norm()).fold(0.0, f64::max);
    let mut worst = 0.0f64;
    for (j, row) in exact.iter().enumerate() {
        for (k, x) in row.iter().enumerate() {
            let fd = (p.periods.tau[(j, k)] - m.periods.tau[(j, k)]) / (2.0 * h);
            worst = worst.max((fd - x).norm() / scale);
        }
    }
    Ok(worst)
}

/// Errors are max_jk |FD - formula| / max_jk |formula|.
pub fn check_variation(mc: &MarkedCurve, i: usize, h: f64) -> Result<FdCheck> {
    let exact = variation_formula(mc, i);
    let e1 = tau_fd_error(mc, i, h, &exact)?;
    let e2 = tau_fd_error(mc, i, h / 2.0, &exact)?;
    Ok(FdCheck::new(i, h, e1, e2))
}

/// ½ ∂log det A + (μ/2) Σ_j 1/(λ_i-λ_j) + Σ_j q(k_i,k_j)/(λ_i-λ_j), with
/// ∂log det A itself from central differences.
fn lambda_derivative_sides(mc: &MarkedCurve, lambda: &Partition, i: usize, h: f64) -> Result<(C64, C64)> {
    let n = mc.curve.sheets();
    let ch = mc.e_lambda(lambda)?.rounded;
    let (p, m) = perturbed_pair(mc, i, h)?;
    for (side, c) in [(&p, "+h"), (&m, "-h")] {
        if side.e_lambda(lambda)?.rounded != ch {
            return Err(Error::Numerical(format!("e_Λ changed under the {c} perturbation of λ_{}", i + 1)));
        }
    }
    let lhs = (theta_constant(&p, &ch)? / theta_constant(&m, &ch)?).ln() / (2.0 * h);
    let dlog_det = (p.periods.det_a / m.periods.det_a).ln() / (2.0 * h);
    let l = mc.curve.lambdas();
    let k = lambda.weights();
    let muf = qf(mu(n));
    let mut rhs = dlog_det * 0.5;
    for j in (0..l.len()).filter(|&j| j != i) {
        rhs += (muf / 2.0 + qf(q_pair_closed(n, k[i] as i64, k[j] as i64))) / (l[i] - l[j]);
    }
    Ok((lhs, rhs))
}

/// Errors are |LHS - RHS| / |RHS|.
pub fn check_lambda_derivative(mc: &MarkedCurve, lambda: &Partition, i: usize, h: f64) -> Result<FdCheck> {
    let (a, b) = lambda_derivative_sides(mc, lambda, i, h)?;
    let (c, d) = lambda_derivative_sides(mc, lambda, i, h / 2.0)?;
    Ok(FdCheck::new(i, h, (a - b).norm() / b.norm(), (c - d).norm() / d.norm()))
}
