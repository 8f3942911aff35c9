//! Riemann theta functions with characteristics,
//! θ[δ;ε](z) = Σ_m exp(½ nτnᵗ + (z + 2πiε)nᵗ), n = m + δ, for Re τ negative definite.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, gamma_ur};

use crate::error::{Error, Result};

/// Largest ellipsoid radius the engine will enumerate.
const MAX_RADIUS: f64 = 40.0;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalChar {
    pub den: i64,
    pub delta: Vec<i64>,
    pub eps: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Characteristic {
    pub delta: Vec<f64>,
    pub eps: Vec<f64>,
    pub exact: Option<RationalChar>,
}

impl Characteristic {
    pub fn zero(g: usize) -> Self {
        Characteristic::rational(1, vec![0; g], vec![0; g])
    }

    pub fn rational(den: i64, delta: Vec<i64>, eps: Vec<i64>) -> Self {
        let d = den as f64;
        Characteristic {
            delta: delta.iter().map(|&x| x as f64 / d).collect(),
            eps: eps.iter().map(|&x| x as f64 / d).collect(),
            exact: Some(RationalChar { den, delta, eps }),
        }
    }

    pub fn real(delta: Vec<f64>, eps: Vec<f64>) -> Self {
        Characteristic { delta, eps, exact: None }
    }

    pub fn genus(&self) -> usize {
        self.delta.len()
    }

    /// Half characteristic from bits: δ_i = bits_i/2, ε_i = bits_{g+i}/2.
    pub fn half(g: usize, bits: u64) -> Self {
        let delta = (0..g).map(|i| ((bits >> i) & 1) as i64).collect();
        let eps = (0..g).map(|i| ((bits >> (g + i)) & 1) as i64).collect();
        Characteristic::rational(2, delta, eps)
    }

    /// Parity 4δ·ε mod 2 of a half characteristic.
    pub fn is_odd(&self) -> bool {
        let s: f64 = self.delta.iter().zip(&self.eps).map(|(d, e)| d * e).sum();
        (4.0 * s).round() as i64 % 2 != 0
    }

    /// e = 2πiε + δτ.
    pub fn vector(&self, tau: &DMatrix<C64>) -> Vec<C64> {
        let g = self.genus();
        (0..g)
            .map(|k| C64::new(0.0, 2.0 * PI * self.eps[k]) + (0..g).map(|j| tau[(j, k)] * self.delta[j]).sum::<C64>())
            .collect()
    }

    /// Real (δ, ε) with e = 2πiε + δτ.
    pub fn from_vector(e: &[C64], tau: &DMatrix<C64>) -> Result<Self> {
        let g = e.len();
        let re = tau.map(|x| x.re);
        let im = tau.map(|x| x.im);
        let rhs = DVector::from_iterator(g, e.iter().map(|x| x.re));
        let delta = re
            .transpose()
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Numerical("Re τ is singular".into()))?;
        let eps: Vec<f64> = (0..g)
            .map(|k| (e[k].im - (0..g).map(|j| delta[j] * im[(j, k)]).sum::<f64>()) / (2.0 * PI))
            .collect();
        Ok(Characteristic::real(delta.iter().copied().collect(), eps))
    }

    /// Distance of 2Nδ, 2Nε (den = 2N) from the integer grid.
    pub fn grid_residual(&self, den: i64) -> f64 {
        let d = den as f64;
        self.delta
            .iter()
            .chain(&self.eps)
            .map(|x| (x * d - (x * d).round()).abs())
            .fold(0.0, f64::max)
    }

    /// Rounds to the grid (1/den) Z and reduces into [0, 1).
    pub fn rounded(&self, den: i64, tol: f64) -> Result<Self> {
        let r = self.grid_residual(den);
        if r > tol {
            return Err(Error::Numerical(format!("characteristic is {r:e} away from the 1/{den} grid")));
        }
        let snap = |v: &[f64]| v.iter().map(|x| ((x * den as f64).round() as i64).rem_euclid(den)).collect();
        Ok(Characteristic::rational(den, snap(&self.delta), snap(&self.eps)))
    }

    pub fn negated(&self) -> Self {
        match &self.exact {
            Some(r) => Characteristic::rational(
                r.den,
                r.delta.iter().map(|x| (-x).rem_euclid(r.den)).collect(),
                r.eps.iter().map(|x| (-x).rem_euclid(r.den)).collect(),
            ),
            None => Characteristic::real(self.delta.iter().map(|x| -x).collect(), self.eps.iter().map(|x| -x).collect()),
        }
    }

    /// Characteristic shifted by integer vectors (m, n), not reduced.
    pub fn shifted(&self, m: &[i64], n: &[i64]) -> Self {
        Characteristic::real(
            self.delta.iter().zip(m).map(|(d, x)| d + *x as f64).collect(),
            self.eps.iter().zip(n).map(|(e, x)| e + *x as f64).collect(),
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ThetaResult {
    pub value: C64,
    pub gradient: Vec<C64>,
    pub hessian: Vec<Vec<C64>>,
    /// Ellipsoid radius in units where terms are exp(-r²) relative to the envelope.
    pub radius: f64,
    /// Bound on the neglected terms relative to the envelope exp(log_scale).
    pub tail_bound: f64,
    /// ½ cQc, the log of the largest possible term modulus.
    pub log_scale: f64,
    pub points: usize,
}

impl ThetaResult {
    pub fn scale(&self) -> f64 {
        self.log_scale.exp()
    }

    /// ∂² log θ = H/θ - ∇θ∇θᵗ/θ².
    pub fn log_hessian(&self) -> Vec<Vec<C64>> {
        let g = self.gradient.len();
        let v = self.value;
        (0..g)
            .map(|i| (0..g).map(|j| self.hessian[i][j] / v - self.gradient[i] * self.gradient[j] / (v * v)).collect())
            .collect()
    }
}

/// Precomputed data for a fixed Riemann matrix τ.
#[derive(Clone, Debug)]
pub struct Theta {
    tau: DMatrix<C64>,
    q: DMatrix<f64>,
    q_inv: DMatrix<f64>,
    /// Upper triangular U with Q = UᵗU.
    u: DMatrix<f64>,
    /// Shortest lattice vector length in the metric sqrt(½ vQv).
    rho: f64,
    lambda_min: f64,
}

impl Theta {
    pub fn new(tau: &DMatrix<C64>) -> Result<Self> {
        let g = tau.nrows();
        if g == 0 || tau.ncols() != g {
            return Err(Error::Theta("τ must be a non-empty square matrix".into()));
        }
        let tau = (tau + tau.transpose()) * C64::new(0.5, 0.0);
        let q = tau.map(|x| -x.re);
        let lambda_min = q.clone().symmetric_eigenvalues().min();
        if !(lambda_min > 0.0) {
            return Err(Error::Theta(format!("Re τ is not negative definite (eigenvalue {:e})", -lambda_min)));
        }
        let chol = q.clone().cholesky().ok_or_else(|| Error::Theta("Cholesky of -Re τ failed".into()))?;
        let u = chol.l().transpose();
        let q_inv = chol.inverse();
        let mut t = Theta { tau, q, q_inv, u, rho: 0.0, lambda_min };
        t.rho = t.shortest_vector();
        Ok(t)
    }

    pub fn genus(&self) -> usize {
        self.tau.nrows()
    }

    pub fn tau(&self) -> &DMatrix<C64> {
        &self.tau
    }

    fn shortest_vector(&self) -> f64 {
        let g = self.genus();
        let bound = (0..g).map(|i| self.q[(i, i)]).fold(f64::INFINITY, f64::min);
        let mut best = bound;
        let center = vec![0.0; g];
        self.enumerate(&center, (bound * 0.5).sqrt() * 1.000001, |m| {
            if m.iter().any(|&x| x != 0) {
                let v: f64 = (0..g).map(|i| (0..g).map(|j| m[i] as f64 * self.q[(i, j)] * m[j] as f64).sum::<f64>()).sum();
                best = best.min(v);
            }
        });
        (0.5 * best).sqrt()
    }

    /// Calls `f` on every integer m with ½(m - center)Q(m - center) ≤ r², in
    /// lexicographic order of (m_{g-1}, …, m_0).
    fn enumerate(&self, center: &[f64], r: f64, mut f: impl FnMut(&[i64])) {
        let g = self.genus();
        let mut m = vec![0i64; g];
        self.enum_level(g - 1, center, 2.0 * r * r, &mut m, &mut f);
    }

    fn enum_level(&self, i: usize, center: &[f64], budget: f64, m: &mut Vec<i64>, f: &mut impl FnMut(&[i64])) {
        let g = self.genus();
        let uii = self.u[(i, i)];
        let s: f64 = (i + 1..g).map(|j| self.u[(i, j)] * (m[j] as f64 - center[j])).sum::<f64>() / uii;
        let half = budget.max(0.0).sqrt() / uii;
        let lo = (center[i] - s - half).ceil() as i64;
        let hi = (center[i] - s + half).floor() as i64;
        for mi in lo..=hi {
            m[i] = mi;
            let x = mi as f64 - center[i] + s;
            let rest = budget - uii * uii * x * x;
            if rest < 0.0 {
                continue;
            }
            if i == 0 {
                f(m);
            } else {
                self.enum_level(i - 1, center, rest, m, f);
            }
        }
    }

    /// Bound on Σ over points outside radius R of ‖n‖^p exp(-r²), p ≤ 2.
    fn tail(&self, r: f64, a: f64, p: u32) -> f64 {
        let g = self.genus() as f64;
        let rho = self.rho;
        let x = (r - 0.5 * rho).max(0.0).powi(2);
        let b = (2.0 / self.lambda_min).sqrt();
        let upper = |s: f64| gamma_ur(s, x) * gamma(s);
        let mut sum = 0.0;
        for k in 0..=p {
            let binom = match (p, k) {
                (2, 1) => 2.0,
                _ => 1.0,
            };
            sum += binom * b.powi(k as i32) * a.powi((p - k) as i32) * upper((g + k as f64) / 2.0);
        }
        0.5 * g * (2.0 / rho).powf(g) * sum
    }

    /// Smallest radius (on a 0.05 grid) whose tail bound for value, gradient
    /// and Hessian is below tol.
    pub fn radius_for(&self, center_norm: f64, tol: f64) -> Result<(f64, f64)> {
        let g = self.genus() as f64;
        let a = center_norm + 1.0;
        let mut r = 0.5 * (g.sqrt() + self.rho) + 0.5;
        loop {
            let bound = (0..=2).map(|p| self.tail(r, a, p)).fold(0.0, f64::max);
            if bound < tol {
                return Ok((r, bound));
            }
            r += 0.05;
            if r > MAX_RADIUS {
                return Err(Error::Theta(format!("truncation radius exceeds {MAX_RADIUS} for tol {tol:e}")));
            }
        }
    }

    fn center(&self, z: &[C64]) -> Vec<f64> {
        let re = DVector::from_iterator(z.len(), z.iter().map(|x| x.re));
        (&self.q_inv * re).iter().copied().collect()
    }

    pub fn eval(&self, z: &[C64], ch: &Characteristic, tol: f64) -> Result<ThetaResult> {
        if z.len() != self.genus() || ch.genus() != self.genus() {
            return Err(Error::Input("dimension mismatch in theta evaluation".into()));
        }
        if !(tol > 0.0) {
            return Err(Error::Input("theta tolerance must be positive".into()));
        }
        let c = self.center(z);
        let cn = c.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (r, bound) = self.radius_for(cn, tol)?;
        let mut res = self.eval_with_radius(z, ch, r);
        res.tail_bound = bound;
        Ok(res)
    }

    /// Sum over the ellipsoid of radius r without a tail estimate.
    pub fn eval_with_radius(&self, z: &[C64], ch: &Characteristic, r: f64) -> ThetaResult {
        let g = self.genus();
        let c = self.center(z);
        let log_scale: f64 = 0.5 * (0..g).map(|i| z[i].re * c[i]).sum::<f64>();
        let w: Vec<C64> = (0..g).map(|k| z[k] + C64::new(0.0, 2.0 * PI * ch.eps[k])).collect();
        let shifted: Vec<f64> = (0..g).map(|i| c[i] - ch.delta[i]).collect();
        let mut value = C64::new(0.0, 0.0);
        let mut grad = vec![C64::new(0.0, 0.0); g];
        let mut hess = vec![vec![C64::new(0.0, 0.0); g]; g];
        let mut n = vec![0.0; g];
        let mut points = 0;
        self.enumerate(&shifted, r, |m| {
            for i in 0..g {
                n[i] = m[i] as f64 + ch.delta[i];
            }
            let mut e = C64::new(-log_scale, 0.0);
            for i in 0..g {
                let mut row = C64::new(0.0, 0.0);
                for j in 0..g {
                    row += self.tau[(i, j)] * n[j];
                }
                e += (row * 0.5 + w[i]) * n[i];
            }
            let t = e.exp();
            value += t;
            for i in 0..g {
                let ti = t * n[i];
                grad[i] += ti;
                for j in i..g {
                    hess[i][j] += ti * n[j];
                }
            }
            points += 1;
        });
        for i in 0..g {
            for j in 0..i {
                hess[i][j] = hess[j][i];
            }
        }
        let s = log_scale.exp();
        ThetaResult {
            value: value * s,
            gradient: grad.into_iter().map(|x| x * s).collect(),
            hessian: hess.into_iter().map(|row| row.into_iter().map(|x| x * s).collect()).collect(),
            radius: r,
            tail_bound: f64::NAN,
            log_scale,
            points,
        }
    }

    pub fn value(&self, z: &[C64], ch: &Characteristic, tol: f64) -> Result<C64> {
        Ok(self.eval(z, ch, tol)?.value)
    }
}

/// |θ(z + 2πiλ + κτ) - factor θ(z)| / |θ(z)| with
/// factor = exp(-½κτκ - zκ + 2πi(δλ - εκ)).
pub fn quasi_periodicity_residual(th: &Theta, z: &[C64], ch: &Characteristic, lambda: &[i64], kappa: &[i64], tol: f64) -> Result<f64> {
    let g = th.genus();
    let tau = th.tau();
    let kt: Vec<C64> = (0..g).map(|j| (0..g).map(|i| tau[(i, j)] * kappa[i] as f64).sum()).collect();
    let shifted: Vec<C64> = (0..g).map(|j| z[j] + C64::new(0.0, 2.0 * PI * lambda[j] as f64) + kt[j]).collect();
    let lhs = th.eval(&shifted, ch, tol)?;
    let base = th.eval(z, ch, tol)?;
    if base.value.norm() < 1e-13 * base.scale() {
        return Err(Error::Numerical("θ(z) vanishes; quasi-periodicity check indeterminate".into()));
    }
    let mut expo = C64::new(0.0, 0.0);
    for j in 0..g {
        let k = kappa[j] as f64;
        expo += -kt[j] * k * 0.5 - z[j] * k;
        expo += C64::new(0.0, 2.0 * PI * (ch.delta[j] * lambda[j] as f64 - ch.eps[j] * k));
    }
    Ok((lhs.value - expo.exp() * base.value).norm() / base.value.norm())
}

/// Relative difference between ∂²θ/∂z_k∂z_r and the τ-derivative given by
/// the heat equation, using a central difference of step h in τ_kr (= τ_rk).
pub fn heat_check(tau: &DMatrix<C64>, z: &[C64], ch: &Characteristic, k: usize, r: usize, h: f64, tol: f64) -> Result<f64> {
    let th = Theta::new(tau)?;
    let analytic = th.eval(z, ch, tol)?.hessian[k][r];
    let bump = |sign: f64| -> Result<C64> {
        let mut t = tau.clone();
        t[(k, r)] += sign * h;
        if k != r {
            t[(r, k)] += sign * h;
        }
        Theta::new(&t)?.value(z, ch, tol)
    };
    let fd = (bump(1.0)? - bump(-1.0)?) / (2.0 * h);
    let expected = if k == r { fd * 2.0 } else { fd };
    Ok((analytic - expected).norm() / analytic.norm())
}

/// A seeded symmetric τ with Re τ = -(MMᵀ + I) for M with entries in
/// [-1, 1], and Im τ symmetric with entries in [-2, 2].
pub fn random_period_matrix(g: usize, seed: u64) -> DMatrix<C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let m = DMatrix::<f64>::from_fn(g, g, |_, _| rng.gen_range(-1.0..1.0));
    let re = -(&m * m.transpose() + DMatrix::<f64>::identity(g, g));
    let mut im = DMatrix::<f64>::zeros(g, g);
    for i in 0..g {
        for j in i..g {
            let x = rng.gen_range(-2.0..2.0);
            im[(i, j)] = x;
            im[(j, i)] = x;
        }
    }
    DMatrix::from_fn(g, g, |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tau2() -> DMatrix<C64> {
        DMatrix::from_row_slice(2, 2, &[C64::new(-3.1, 0.7), C64::new(0.9, -0.4), C64::new(0.9, -0.4), C64::new(-2.4, 1.3)])
    }

    fn brute(tau: &DMatrix<C64>, z: &[C64], ch: &Characteristic, r: i64) -> C64 {
        let g = tau.nrows();
        let mut total = C64::new(0.0, 0.0);
        let count = (2 * r + 1).pow(g as u32);
        for idx in 0..count {
            let mut rem = idx;
            let n: Vec<f64> = (0..g)
                .map(|i| {
                    let m = rem % (2 * r + 1) - r;
                    rem /= 2 * r + 1;
                    m as f64 + ch.delta[i]
                })
                .collect();
            let mut e = C64::new(0.0, 0.0);
            for i in 0..g {
                for j in 0..g {
                    e += tau[(i, j)] * n[i] * n[j] * 0.5;
                }
                e += (z[i] + C64::new(0.0, 2.0 * PI * ch.eps[i])) * n[i];
            }
            total += e.exp();
        }
        total
    }

    #[test]
    fn jacobi_theta_three() {
        let tau = DMatrix::from_element(1, 1, C64::new(-2.0 * PI, 0.0));
        let th = Theta::new(&tau).unwrap();
        let v = th.value(&[C64::new(0.0, 0.0)], &Characteristic::zero(1), 1e-15).unwrap();
        assert!((v - C64::new(1.086434811213308, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn matches_brute_force_with_derivatives() {
        let tau = tau2();
        let th = Theta::new(&tau).unwrap();
        let z = [C64::new(0.8, -0.3), C64::new(-1.1, 0.6)];
        let ch = Characteristic::rational(6, vec![1, 4], vec![5, 2]);
        let r = th.eval(&z, &ch, 1e-14).unwrap();
        let b = brute(&tau, &z, &ch, 10);
        assert!((r.value - b).norm() < 1e-13 * b.norm());
        let h = 1e-5;
        for k in 0..2 {
            let mut zp = z;
            let mut zm = z;
            zp[k] += h;
            zm[k] -= h;
            let fd = (brute(&tau, &zp, &ch, 10) - brute(&tau, &zm, &ch, 10)) / (2.0 * h);
            assert!((fd - r.gradient[k]).norm() < 1e-6 * fd.norm());
        }
    }

    #[test]
    fn radius_plus_two_changes_little() {
        let tau = tau2();
        let th = Theta::new(&tau).unwrap();
        let z = [C64::new(2.5, 1.0), C64::new(-3.0, 0.2)];
        let ch = Characteristic::rational(4, vec![1, 3], vec![2, 1]);
        for tol in [1e-8, 1e-12] {
            let r = th.eval(&z, &ch, tol).unwrap();
            let wide = th.eval_with_radius(&z, &ch, r.radius + 2.0);
            assert!(r.tail_bound <= tol);
            assert!((wide.value - r.value).norm() < tol * r.scale());
        }
    }

    #[test]
    fn evenness_and_characteristic_shift() {
        let tau = tau2();
        let th = Theta::new(&tau).unwrap();
        let z = [C64::new(0.4, 0.1), C64::new(-0.2, 0.9)];
        let mz = [-z[0], -z[1]];
        let zero = Characteristic::zero(2);
        let a = th.value(&z, &zero, 1e-14).unwrap();
        let b = th.value(&mz, &zero, 1e-14).unwrap();
        assert!((a - b).norm() < 1e-13 * a.norm());
        let ch = Characteristic::rational(6, vec![1, 2], vec![3, 5]);
        let (m, n) = ([1, -2], [2, 1]);
        let lhs = th.value(&z, &ch.shifted(&m, &n), 1e-14).unwrap();
        let phase: f64 = (0..2).map(|i| n[i] as f64 * ch.delta[i]).sum();
        let rhs = C64::from_polar(1.0, 2.0 * PI * phase) * th.value(&z, &ch, 1e-14).unwrap();
        assert!((lhs - rhs).norm() < 1e-12 * rhs.norm());
    }

    #[test]
    fn quasi_periodicity() {
        let tau = tau2();
        let th = Theta::new(&tau).unwrap();
        let z = [C64::new(0.3, -0.2), C64::new(0.1, 0.4)];
        let ch = Characteristic::rational(4, vec![1, 0], vec![3, 2]);
        assert_eq!(quasi_periodicity_residual(&th, &z, &ch, &[0, 0], &[0, 0], 1e-14).unwrap(), 0.0);
        assert!(quasi_periodicity_residual(&th, &z, &ch, &[1, 0], &[0, 0], 1e-14).unwrap() < 1e-10);
        for (l, k) in [([2, -1], [1, 0]), ([0, 1], [-1, 2]), ([-2, 2], [2, -1])] {
            assert!(quasi_periodicity_residual(&th, &z, &ch, &l, &k, 1e-15).unwrap() < 1e-9);
        }
    }

    #[test]
    fn heat_equation() {
        let tau1 = DMatrix::from_element(1, 1, C64::new(-2.3, 0.4));
        let z1 = [C64::new(0.3, 0.2)];
        let ch1 = Characteristic::rational(2, vec![1], vec![0]);
        let e1 = heat_check(&tau1, &z1, &ch1, 0, 0, 1e-4, 1e-15).unwrap();
        let e2 = heat_check(&tau1, &z1, &ch1, 0, 0, 5e-5, 1e-15).unwrap();
        assert!(e1 < 1e-5);
        assert!(e2 < e1 / 3.0);
        let z2 = [C64::new(0.2, -0.1), C64::new(0.5, 0.3)];
        let ch2 = Characteristic::rational(2, vec![1, 0], vec![0, 1]);
        assert!(heat_check(&tau2(), &z2, &ch2, 0, 1, 1e-4, 1e-15).unwrap() < 1e-5);
    }

    #[test]
    fn characteristic_round_trip() {
        let tau = tau2();
        let ch = Characteristic::rational(6, vec![1, 4], vec![5, 2]);
        let e = ch.vector(&tau);
        let back = Characteristic::from_vector(&e, &tau).unwrap();
        assert!(back.grid_residual(6) < 1e-12);
        assert_eq!(back.rounded(6, 1e-8).unwrap(), ch);
        assert!(Characteristic::half(2, 0b0101).is_odd());
        assert!(!Characteristic::half(2, 0b0110).is_odd());
    }

    #[test]
    fn rejects_non_definite() {
        let tau = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
        assert!(Theta::new(&tau).is_err());
    }
}
