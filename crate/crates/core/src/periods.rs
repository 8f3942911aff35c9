//! Period matrices, normalized differentials and their expansions at branch points.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curve::{root_of_unity, DiffIndex, TrackedPoint, ZnCurve};
use crate::error::{Error, Result};
use crate::homology::{Cycle, Generator, LoopSystem, SymplecticBasis};
use crate::path::{integrate_path, PathPiece, PathSpec};
use crate::quadrature::QuadConfig;

const TWO_PI_I: C64 = C64 { re: 0.0, im: 2.0 * std::f64::consts::PI };

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeriodData {
    pub basis: Vec<DiffIndex>,
    /// J_i = ∫ w from the base point on sheet 0 to λ_i along the straight spoke.
    pub spokes: Vec<Vec<C64>>,
    /// A_{i,w} = ∫_{A_i} w, rows are cycles, columns follow the basis order.
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
    /// v_j = Σ_w σ_{jw} w with ∫_{A_k} v_j = 2πi δ_jk.
    pub sigma: DMatrix<C64>,
    /// τ_jk = ∫_{B_j} v_k.
    pub tau: DMatrix<C64>,
    pub det_a: C64,
    /// Largest singular value of A over the smallest.
    pub condition: f64,
    pub quad_error: f64,
}

/// Spoke integrals from the base on sheet 0 to every branch point.
pub fn spoke_integrals(curve: &ZnCurve, loops: &LoopSystem, cfg: &QuadConfig) -> Result<(Vec<Vec<C64>>, f64)> {
    let basis = curve.differential_basis();
    let start = loops.frame.point(curve, 0);
    let results: Vec<Result<(Vec<C64>, f64)>> = (0..curve.branch_count())
        .into_par_iter()
        .map(|i| {
            let path = PathSpec::new(start.sheet_point()).then(PathPiece::ToBranch { index: i });
            let r = integrate_path(curve, &basis, &start, &path, cfg)?;
            Ok((r.values, r.error))
        })
        .collect();
    let mut spokes = Vec::with_capacity(results.len());
    let mut err = 0.0;
    for r in results {
        let (v, e) = r?;
        spokes.push(v);
        err += e;
    }
    Ok((spokes, err))
}

/// ∫ over a generator: e_{i,k} contributes ω^{-αk} J_i for the differential with index α.
pub fn generator_period(curve: &ZnCurve, basis: &[DiffIndex], spokes: &[Vec<C64>], gen: &Generator) -> Vec<C64> {
    let n = curve.sheets();
    basis
        .iter()
        .enumerate()
        .map(|(w, d)| {
            let a = d.alpha as i64;
            let phase = root_of_unity(n, -a * gen.sheet as i64) * (C64::new(1.0, 0.0) - root_of_unity(n, -a));
            phase * (spokes[gen.a][w] - spokes[gen.b][w])
        })
        .collect()
}

pub fn cycle_period(curve: &ZnCurve, sb: &SymplecticBasis, spokes: &[Vec<C64>], c: &Cycle) -> Vec<C64> {
    let basis = curve.differential_basis();
    let mut out = vec![C64::new(0.0, 0.0); basis.len()];
    for (x, g) in c.coeffs.iter().zip(&sb.generators) {
        if *x != 0 {
            for (o, p) in out.iter_mut().zip(generator_period(curve, &basis, spokes, g)) {
                *o += p * *x as f64;
            }
        }
    }
    out
}

/// Integrates the basis over the cycle realized as closed paths on the
/// curve. Independent of the spoke bookkeeping; used as a cross-check.
pub fn integrate_cycle(curve: &ZnCurve, sb: &SymplecticBasis, c: &Cycle, cfg: &QuadConfig) -> Result<Vec<C64>> {
    let basis = curve.differential_basis();
    let mut out = vec![C64::new(0.0, 0.0); basis.len()];
    for (x, path) in sb.realize(curve, c) {
        let sheet = sb.loops.frame.sheet_of(curve, path.start.s);
        let start: TrackedPoint = sb.loops.frame.point(curve, sheet);
        let r = integrate_path(curve, &basis, &start, &path, cfg)?;
        for (o, v) in out.iter_mut().zip(r.values) {
            *o += v * x as f64;
        }
    }
    Ok(out)
}

fn rows(curve: &ZnCurve, sb: &SymplecticBasis, spokes: &[Vec<C64>], cycles: &[Cycle]) -> DMatrix<C64> {
    let g = cycles.len();
    let mut m = DMatrix::zeros(g, g);
    for (i, c) in cycles.iter().enumerate() {
        for (w, v) in cycle_period(curve, sb, spokes, c).into_iter().enumerate() {
            m[(i, w)] = v;
        }
    }
    m
}

pub fn compute_periods(curve: &ZnCurve, sb: &SymplecticBasis, cfg: &QuadConfig) -> Result<PeriodData> {
    let g = curve.genus();
    if g == 0 {
        return Err(Error::Input("genus 0 curve has no periods".into()));
    }
    let (spokes, quad_error) = spoke_integrals(curve, &sb.loops, cfg)?;
    let a = rows(curve, sb, &spokes, &sb.a_cycles);
    let b = rows(curve, sb, &spokes, &sb.b_cycles);
    let sv = a.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    if !(smin > 1e-14 * smax) {
        return Err(Error::Periods(format!("A-period matrix is singular (singular values {smin:e}..{smax:e})")));
    }
    let inv = a.clone().try_inverse().ok_or_else(|| Error::Periods("A-period matrix is not invertible".into()))?;
    let sigma = inv.transpose() * TWO_PI_I;
    let tau = &b * sigma.transpose();
    let data = PeriodData { basis: curve.differential_basis(), spokes, det_a: a.determinant(), a, b, sigma, tau, condition: smax / smin, quad_error };
    let sym = data.symmetry_residual();
    let scale = data.tau.iter().map(|x| x.norm()).fold(0.0, f64::max);
    if sym > 1e-8 * scale {
        return Err(Error::Periods(format!("τ is not symmetric: residual {sym:e}")));
    }
    let top = data.re_tau_max_eigenvalue();
    if top >= 0.0 {
        return Err(Error::Periods(format!("Re τ is not negative definite: largest eigenvalue {top:e}")));
    }
    Ok(data)
}

impl PeriodData {
    pub fn genus(&self) -> usize {
        self.tau.nrows()
    }

    pub fn symmetry_residual(&self) -> f64 {
        (&self.tau - self.tau.transpose()).iter().map(|x| x.norm()).fold(0.0, f64::max)
    }

    pub fn re_tau(&self) -> DMatrix<f64> {
        let r = self.tau.map(|x| x.re);
        (&r + r.transpose()) * 0.5
    }

    pub fn re_tau_max_eigenvalue(&self) -> f64 {
        self.re_tau().symmetric_eigenvalues().max()
    }

    /// The symmetrized τ, used for theta evaluation.
    pub fn tau_symmetric(&self) -> DMatrix<C64> {
        (&self.tau + self.tau.transpose()) * C64::new(0.5, 0.0)
    }

    /// Coefficients σ·w of the normalized differentials from basis values.
    pub fn normalize(&self, w: &[C64]) -> Vec<C64> {
        (0..self.genus()).map(|j| (0..w.len()).map(|q| self.sigma[(j, q)] * w[q]).sum()).collect()
    }

    /// ∫_{A_k} v_j recomputed from A and σ; should be 2πi δ_jk.
    pub fn normalization_residual(&self) -> f64 {
        let m = &self.a * self.sigma.transpose();
        let g = self.genus();
        let mut worst = 0.0f64;
        for k in 0..g {
            for j in 0..g {
                let want = if j == k { TWO_PI_I } else { C64::new(0.0, 0.0) };
                worst = worst.max((m[(k, j)] - want).norm());
            }
        }
        worst
    }
}

/// Expansion of the normalized differentials at λ_i in the local parameter
/// t = (z* - λ_i)^{1/N} u where z = λ_i + (z* - λ_i) u^N along the spoke on
/// sheet 0: v_j = Σ_α coeffs[α][j] t^α dt + O(t^N).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchTaylor {
    pub branch: usize,
    /// Root of (z* - λ_i)^{1/N} fixing the branch of t.
    pub t_unit: C64,
    /// s / t at λ_i.
    pub h: C64,
    pub coeffs: Vec<Vec<C64>>,
}

impl BranchTaylor {
    /// Coefficient of t^α dt scaled by α!, i.e. the α-th t-derivative of v_j/dt at λ_i.
    pub fn derivative(&self, alpha: usize, j: usize) -> C64 {
        let fact: f64 = (1..=alpha).map(|x| x as f64).product();
        self.coeffs[alpha][j] * fact
    }

    /// Σ_α coeffs[α][j] t^α.
    pub fn eval(&self, j: usize, t: C64) -> C64 {
        self.coeffs.iter().enumerate().map(|(a, c)| c[j] * t.powu(a as u32)).sum()
    }
}

pub fn branch_taylor(curve: &ZnCurve, loops: &LoopSystem, periods: &PeriodData, i: usize) -> BranchTaylor {
    let n = curve.sheets();
    let lams = curve.lambdas();
    let lam = lams[i];
    let base = loops.base();
    let t_unit = (base - lam).powf(1.0 / n as f64);
    let sum: C64 = (0..lams.len()).filter(|&j| j != i).map(|j| ((lam - lams[j]) / (base - lams[j])).ln()).sum();
    let h = loops.frame.s_base * (sum / n as f64).exp() / t_unit;
    let g = periods.genus();
    let mut coeffs = vec![vec![C64::new(0.0, 0.0); g]; n - 1];
    for (q, d) in periods.basis.iter().enumerate() {
        let alpha = n - 1 - d.alpha;
        let w = lam.powu(d.beta as u32 - 1) * h.powi(-(d.alpha as i32)) * n as f64;
        for j in 0..g {
            coeffs[alpha][j] += periods.sigma[(j, q)] * w;
        }
    }
    BranchTaylor { branch: i, t_unit, h, coeffs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homology::build_basis;

    fn curve(n: usize, lams: &[(f64, f64)]) -> ZnCurve {
        ZnCurve::new(n, lams.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
    }

    fn c32() -> ZnCurve {
        curve(3, &[(1.0, 0.2), (-0.7, 1.1), (0.3, -1.4), (-1.2, -0.5), (1.5, 1.3), (0.1, 0.9)])
    }

    fn setup(c: &ZnCurve) -> (SymplecticBasis, PeriodData) {
        let sb = build_basis(c, &LoopSystem::new(c).unwrap()).unwrap();
        let p = compute_periods(c, &sb, &QuadConfig::default()).unwrap();
        (sb, p)
    }

    #[test]
    fn riemann_relations_hold() {
        let c = c32();
        let (_, p) = setup(&c);
        assert_eq!(p.genus(), 4);
        assert!(p.symmetry_residual() < 1e-10);
        assert!(p.re_tau_max_eigenvalue() < 0.0);
        assert!(p.normalization_residual() < 1e-10);
    }

    #[test]
    fn genus_one_scalar() {
        let c = curve(2, &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.2), (0.3, -1.0)]);
        let (_, p) = setup(&c);
        assert_eq!(p.tau.nrows(), 1);
        assert!(p.tau[(0, 0)].re < 0.0);
    }

    #[test]
    fn realized_cycles_match_spoke_bookkeeping() {
        let c = c32();
        let (sb, p) = setup(&c);
        let cfg = QuadConfig::default();
        for (i, cyc) in sb.a_cycles.iter().chain(&sb.b_cycles).enumerate().step_by(3) {
            let direct = integrate_cycle(&c, &sb, cyc, &cfg).unwrap();
            let book = cycle_period(&c, &sb, &p.spokes, cyc);
            for (x, y) in direct.iter().zip(&book) {
                assert!((x - y).norm() < 1e-9 * y.norm().max(1.0), "cycle {i}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn self_convergence_under_refinement() {
        let c = c32();
        let sb = build_basis(&c, &LoopSystem::new(&c).unwrap()).unwrap();
        let cfg = QuadConfig::default();
        let p1 = compute_periods(&c, &sb, &cfg).unwrap();
        let fine = QuadConfig { min_panels: 2 * cfg.min_panels, ..cfg.scaled(1e-2) };
        let p2 = compute_periods(&c, &sb, &fine).unwrap();
        assert!(((p1.det_a - p2.det_a) / p2.det_a).norm() < 1e-9);
        let d = (&p1.tau - &p2.tau).iter().map(|x| x.norm()).fold(0.0, f64::max);
        assert!(d < 1e-9);
    }

    #[test]
    fn trapezoid_oracle_for_hyperelliptic_pair() {
        // N = 2, f = z(z-1)(z-a)(z-b): a circle around {0, 1} carries a single
        // valued s, and the periodic trapezoid rule converges exponentially.
        let c = curve(2, &[(0.0, 0.0), (1.0, 0.0), (3.0, 4.0), (-3.5, 3.0)]);
        let sb = build_basis(&c, &LoopSystem::new(&c).unwrap()).unwrap();
        let gen = sb.generators.iter().position(|g| (g.a.min(g.b), g.a.max(g.b)) == (0, 1)).expect("0 and 1 adjacent");
        let mut coeffs = vec![0; sb.generators.len()];
        coeffs[gen] = 1;
        let direct = integrate_cycle(&c, &sb, &Cycle { coeffs }, &QuadConfig::default()).unwrap();
        let m = 4000;
        let center = C64::new(0.5, 0.0);
        let r = 1.2;
        let mut s = c.roots_at(center + r).unwrap()[0];
        let mut total = C64::new(0.0, 0.0);
        for k in 0..m {
            let th = 2.0 * std::f64::consts::PI * k as f64 / m as f64;
            let z = center + C64::from_polar(r, th);
            let roots = c.roots_at(z).unwrap();
            s = if (roots[0] - s).norm() < (roots[1] - s).norm() { roots[0] } else { roots[1] };
            let dz = C64::new(0.0, 1.0) * (z - center);
            total += dz / s * (2.0 * std::f64::consts::PI / m as f64);
        }
        // The sheet of the oracle circle is arbitrary, so compare up to sign.
        let d = (direct[0] - total).norm().min((direct[0] + total).norm());
        assert!(d < 1e-8 * total.norm(), "{} vs {}", direct[0], total);
    }

    #[test]
    fn branch_taylor_reconstructs_differentials() {
        let c = c32();
        let (sb, p) = setup(&c);
        let base = sb.loops.base();
        for i in [0, 3] {
            let bt = branch_taylor(&c, &sb.loops, &p, i);
            let lam = c.lambdas()[i];
            for u in [0.05, 0.1] {
                // Point on the spoke: z = λ + (z* - λ) u^3, reached by tracking from the base.
                let z = lam + (base - lam) * u * u * u;
                let pt = sb.loops.frame.point(&c, 0).advance(&c, z);
                let v = p.normalize(&c.eval_differentials(&pt.sheet_point()));
                let t = bt.t_unit * u;
                for j in 0..p.genus() {
                    let direct = v[j] * 3.0 * t * t; // dz/dt = N t^{N-1}
                    let series = bt.eval(j, t);
                    let err = (direct - series).norm() / series.norm().max(1e-3);
                    assert!(err < 20.0 * u.powi(3), "i {i} u {u} j {j}: {err}");
                }
            }
        }
    }
}
