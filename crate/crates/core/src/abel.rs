//! Abel map with base at a branch point, the Riemann vector, and the
//! characteristics e_Λ attached to ordered partitions.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::curve::{root_of_unity, TrackedPoint, ZnCurve};
use crate::error::{Error, Result};
use crate::homology::SymplecticBasis;
use crate::partition::Partition;
use crate::path::{integrate_path, PathPiece, PathSpec};
use crate::periods::PeriodData;
use crate::quadrature::QuadConfig;
use crate::theta::{Characteristic, Theta};

/// A point of the curve reached from the base on a given sheet along
/// explicit pieces, with its Abel vector measured from Q_ref.
#[derive(Clone, Debug)]
pub struct CurvePoint {
    pub sheet: usize,
    pub pieces: Vec<PathPiece>,
    pub tracked: TrackedPoint,
    pub abel: Vec<C64>,
}

impl CurvePoint {
    pub fn z(&self) -> C64 {
        self.tracked.z
    }

    pub fn s(&self) -> C64 {
        self.tracked.s
    }
}

/// Abel vector of base-sheet point P*_k: the path Q_ref → P*_k runs back
/// along the lifted spoke, contributing -ω^{-αk} J_ref.
fn base_sheet_abel(curve: &ZnCurve, periods: &PeriodData, ref_branch: usize, sheet: usize) -> Vec<C64> {
    let w: Vec<C64> = periods
        .basis
        .iter()
        .enumerate()
        .map(|(q, d)| -root_of_unity(curve.sheets(), -(d.alpha as i64) * sheet as i64) * periods.spokes[ref_branch][q])
        .collect();
    periods.normalize(&w)
}

/// Point reached from P*_sheet along `pieces`.
pub fn point_along(
    curve: &ZnCurve,
    sb: &SymplecticBasis,
    periods: &PeriodData,
    sheet: usize,
    pieces: Vec<PathPiece>,
    cfg: &QuadConfig,
) -> Result<CurvePoint> {
    let frame = &sb.loops.frame;
    let start = frame.point(curve, sheet);
    let path = PathSpec { start: start.sheet_point(), pieces: pieces.clone() };
    if pieces.iter().any(|p| matches!(p, PathPiece::ToBranch { .. })) {
        return Err(Error::Input("curve points must not end at a branch point".into()));
    }
    let r = integrate_path(curve, &periods.basis, &start, &path, cfg)?;
    let mut abel = base_sheet_abel(curve, periods, frame.ref_branch, sheet);
    for (a, v) in abel.iter_mut().zip(periods.normalize(&r.values)) {
        *a += v;
    }
    Ok(CurvePoint { sheet, pieces, tracked: r.end.expect("path ends at a regular point"), abel })
}

/// Extends a point by a straight segment of displacement dz.
pub fn extend(curve: &ZnCurve, periods: &PeriodData, p: &CurvePoint, dz: C64, cfg: &QuadConfig) -> Result<CurvePoint> {
    let to = p.z() + dz;
    let path = PathSpec::new(p.tracked.sheet_point()).then(PathPiece::Segment { to });
    let r = integrate_path(curve, &periods.basis, &p.tracked, &path, cfg)?;
    let mut pieces = p.pieces.clone();
    pieces.push(PathPiece::Segment { to });
    let abel = p.abel.iter().zip(periods.normalize(&r.values)).map(|(a, v)| a + v).collect();
    Ok(CurvePoint { sheet: p.sheet, pieces, tracked: r.end.expect("regular end"), abel })
}

/// Distance of (κ, λ) from integers when v = 2πiλ + κτ.
pub fn lattice_residual(v: &[C64], tau: &DMatrix<C64>) -> Result<f64> {
    Ok(Characteristic::from_vector(v, tau)?.grid_residual(1))
}

/// Half characteristic number `idx` in lexicographic order of
/// (δ_1, …, δ_g, ε_1, …, ε_g) with entries in {0, ½}.
pub fn half_lex(g: usize, idx: u64) -> Characteristic {
    let bit = |p: usize| ((idx >> (2 * g - 1 - p)) & 1) as i64;
    Characteristic::rational(2, (0..g).map(bit).collect(), (g..2 * g).map(bit).collect())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AbelData {
    pub ref_branch: usize,
    /// A(Q_i) = ∫_{Q_ref}^{Q_i} v through the base on sheet 0.
    pub branch_vectors: Vec<Vec<C64>>,
    /// The Riemann vector for base Q_ref, a half period 2πiε + δτ.
    pub riemann: Vec<C64>,
    pub riemann_char: Characteristic,
    /// Normalized |θ(A(D) - k)| for the chosen k, and the runner-up value.
    pub riemann_vanishing: f64,
    pub riemann_runner_up: f64,
}

/// Deterministic generic points used to probe Riemann's vanishing theorem.
fn probe_points(curve: &ZnCurve, sb: &SymplecticBasis, periods: &PeriodData, count: usize, cfg: &QuadConfig) -> Result<Vec<CurvePoint>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e7a);
    let c = curve.centroid();
    let spread = curve.spread();
    let sep = (0..curve.branch_count())
        .flat_map(|i| (i + 1..curve.branch_count()).map(move |j| (i, j)))
        .map(|(i, j)| (curve.lambdas()[i] - curve.lambdas()[j]).norm())
        .fold(f64::INFINITY, f64::min);
    let base = sb.loops.base();
    let mut out = Vec::with_capacity(count);
    let mut tries = 0;
    while out.len() < count {
        tries += 1;
        if tries > 10_000 {
            return Err(Error::Numerical("could not place probe points".into()));
        }
        let r = spread * rng.gen_range(0.2..1.1);
        let z = c + C64::from_polar(r, rng.gen_range(0.0..std::f64::consts::TAU));
        let sheet = rng.gen_range(0..curve.sheets());
        let path = PathSpec::new(sb.loops.frame.point(curve, sheet).sheet_point()).then(PathPiece::Segment { to: z });
        if path.clearance(curve).1 < 0.2 * sep || (z - base).norm() < 0.1 {
            continue;
        }
        out.push(point_along(curve, sb, periods, sheet, vec![PathPiece::Segment { to: z }], cfg)?);
    }
    Ok(out)
}

/// Identifies the Riemann vector for base Q_ref among the 2^{2g} half
/// periods as the one with θ(A(D) - k) = 0 for effective divisors D of
/// degree g - 1.
fn riemann_vector(
    curve: &ZnCurve,
    sb: &SymplecticBasis,
    periods: &PeriodData,
    theta: &Theta,
    cfg: &QuadConfig,
    tol: f64,
) -> Result<(Characteristic, f64, f64)> {
    let g = periods.genus();
    let probes = probe_points(curve, sb, periods, 2 * (g - 1), cfg)?;
    let divisors: Vec<Vec<C64>> = if g == 1 {
        vec![vec![C64::new(0.0, 0.0)]]
    } else {
        probes
            .chunks(g - 1)
            .map(|ch| (0..g).map(|k| ch.iter().map(|p| p.abel[k]).sum()).collect())
            .collect()
    };
    let zero = Characteristic::zero(g);
    let tau = periods.tau_symmetric();
    let mut scores: Vec<(f64, u64)> = Vec::with_capacity(1 << (2 * g));
    for idx in 0..(1u64 << (2 * g)) {
        let cand = half_lex(g, idx).vector(&tau);
        let mut worst = 0.0f64;
        for d in &divisors {
            let arg: Vec<C64> = d.iter().zip(&cand).map(|(a, c)| a - c).collect();
            let r = theta.eval(&arg, &zero, tol)?;
            worst = worst.max(r.value.norm() / r.scale());
        }
        scores.push((worst, idx));
    }
    scores.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (best, idx) = scores[0];
    let runner = scores.get(1).map_or(f64::INFINITY, |s| s.0);
    if !(best < 1e-6 && runner > 1e3 * best) {
        return Err(Error::Numerical(format!("Riemann vector not identified: best {best:e}, runner-up {runner:e}")));
    }
    Ok((half_lex(g, idx), best, runner))
}

pub fn abel_data(
    curve: &ZnCurve,
    sb: &SymplecticBasis,
    periods: &PeriodData,
    theta: &Theta,
    cfg: &QuadConfig,
    tol: f64,
) -> Result<AbelData> {
    let r = sb.loops.frame.ref_branch;
    let branch_vectors: Vec<Vec<C64>> = periods
        .spokes
        .iter()
        .map(|j| {
            let w: Vec<C64> = j.iter().zip(&periods.spokes[r]).map(|(a, b)| a - b).collect();
            periods.normalize(&w)
        })
        .collect();
    let (riemann_char, riemann_vanishing, riemann_runner_up) = riemann_vector(curve, sb, periods, theta, cfg, tol)?;
    let riemann = riemann_char.vector(&periods.tau_symmetric());
    Ok(AbelData { ref_branch: r, branch_vectors, riemann, riemann_char, riemann_vanishing, riemann_runner_up })
}

/// e_Λ with its real and rounded characteristics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LambdaCharacteristic {
    pub partition: String,
    pub e: Vec<C64>,
    pub raw: Characteristic,
    pub rounded: Characteristic,
    pub residual: f64,
}

/// e_Λ = Σ_j j Σ_{q∈Λ_j} A(Q_q) - N A(Q_ref) - k, rounded to the 1/(2N) grid.
pub fn e_lambda(curve: &ZnCurve, periods: &PeriodData, abel: &AbelData, lambda: &Partition, tol_char: f64) -> Result<LambdaCharacteristic> {
    let n = curve.sheets();
    if lambda.sheets() != n || lambda.m() != curve.m() {
        return Err(Error::Input(format!("partition {lambda} does not fit N = {n}, m = {}", curve.m())));
    }
    let g = periods.genus();
    let mut e = vec![C64::new(0.0, 0.0); g];
    for (j, part) in lambda.parts().iter().enumerate() {
        for &q in part {
            for k in 0..g {
                e[k] += abel.branch_vectors[q][k] * j as f64;
            }
        }
    }
    for k in 0..g {
        e[k] -= abel.branch_vectors[abel.ref_branch][k] * n as f64 + abel.riemann[k];
    }
    let tau = periods.tau_symmetric();
    let raw = Characteristic::from_vector(&e, &tau)?;
    let den = 2 * n as i64;
    let residual = raw.grid_residual(den) / den as f64;
    if residual > tol_char {
        return Err(Error::Numerical(format!("e_Λ for {lambda} is {residual:e} off the 1/{den} grid")));
    }
    let rounded = raw.rounded(den, f64::INFINITY)?;
    Ok(LambdaCharacteristic { partition: lambda.to_string(), e, raw, rounded, residual })
}

/// First odd half characteristic (lexicographic order) whose gradient at 0
/// is within a factor 100 of the largest among odd ones.
pub fn find_odd_half_char(theta: &Theta, tol: f64) -> Result<(Characteristic, Vec<f64>)> {
    let g = theta.genus();
    let zero = vec![C64::new(0.0, 0.0); g];
    let mut cands = Vec::new();
    for idx in 0..(1u64 << (2 * g)) {
        let ch = half_lex(g, idx);
        if ch.is_odd() {
            let r = theta.eval(&zero, &ch, tol)?;
            let norm = r.gradient.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            cands.push((ch, norm));
        }
    }
    let norms: Vec<f64> = cands.iter().map(|c| c.1).collect();
    let top = norms.iter().copied().fold(0.0, f64::max);
    let chosen = cands
        .into_iter()
        .find(|c| c.1 >= 1e-2 * top && c.1 > 1e-8)
        .ok_or_else(|| Error::Numerical(format!("no non-singular odd half characteristic; gradient norms {norms:?}")))?;
    Ok((chosen.0, norms))
}
