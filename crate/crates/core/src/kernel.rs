//! Prime form, the analytic and algebraic Szegő kernels, the canonical
//! bidifferential and the Fay identity, all trivialized by √dz in z-charts.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::abel::CurvePoint;
use crate::curve::{TrackedPoint, ZnCurve};
use crate::error::{Error, Result};
use crate::partition::{labels, q_l, Partition, Q};
use crate::path::{chunks, tracked_at, PathSpec};
use crate::surface::MarkedCurve;
use crate::theta::Characteristic;

/// Continues √f along t ∈ [0, 1] from `start`, with steps small enough that
/// f changes by less than 20% relative, which makes the sign choice unambiguous.
fn track_sqrt(f: impl Fn(f64) -> C64, start: C64) -> Result<C64> {
    let mut t = 0.0f64;
    let mut dt = 0.05f64;
    let mut cur = start;
    let mut fv = f(0.0);
    while t < 1.0 {
        let t1 = (t + dt).min(1.0);
        let f1 = f(t1);
        if (f1 / fv - 1.0).norm() > 0.2 {
            dt *= 0.5;
            if dt < 1e-10 {
                return Err(Error::Continuation { at: C64::new(t, 0.0), reason: "square root argument vanishes along the path".into() });
            }
            continue;
        }
        let r = f1.sqrt();
        cur = if (r - cur).norm() <= (r + cur).norm() { r } else { -r };
        fv = f1;
        t = t1;
        dt = (dt * 1.5).min(0.25);
    }
    Ok(cur)
}

/// A sample point with its prime-form half differential h_α.
#[derive(Clone, Debug)]
pub struct KernelPoint {
    pub point: CurvePoint,
    pub h: C64,
}

impl KernelPoint {
    pub fn z(&self) -> C64 {
        self.point.z()
    }

    pub fn tracked(&self) -> &TrackedPoint {
        &self.point.tracked
    }
}

/// Relative step of the ω finite differences; small enough for the Fay
/// residual to sit well below 1e-4, large enough that the O(h²) error
/// still dominates roundoff.
pub const OMEGA_STEP: f64 = 2e-3;

pub struct KernelEngine<'a> {
    pub mc: &'a MarkedCurve,
    /// ∇θ[α](0).
    grad: Vec<C64>,
    /// h_α at the base point on each sheet, continued from sheet 0 by
    /// winding around the reference branch point.
    h_base: Vec<C64>,
}

impl<'a> KernelEngine<'a> {
    pub fn new(mc: &'a MarkedCurve) -> Result<Self> {
        let zero = vec![C64::new(0.0, 0.0); mc.genus()];
        let grad = mc.theta_at(&zero, &mc.odd)?.gradient;
        let mut engine = KernelEngine { mc, grad, h_base: Vec::new() };
        let curve = &mc.curve;
        let loops = &mc.basis.loops;
        let p0 = loops.frame.point(curve, 0);
        let h0 = engine.h_alpha_sq(&p0).sqrt();
        let mut h_base = vec![h0];
        for k in 1..curve.sheets() {
            let path = loops.keyhole(curve, loops.frame.ref_branch, 0, k as i32);
            h_base.push(engine.continue_h(&p0, &path, h0)?);
        }
        engine.h_base = h_base;
        Ok(engine)
    }

    /// h_α² = Σ ∂θ[α]/∂z_j(0) v_j, as a coefficient of dz.
    pub fn h_alpha_sq(&self, p: &TrackedPoint) -> C64 {
        let v = self.mc.periods.normalize(&self.mc.curve.eval_differentials(&p.sheet_point()));
        self.grad.iter().zip(&v).map(|(a, b)| a * b).sum()
    }

    fn continue_h(&self, start: &TrackedPoint, path: &PathSpec, h_start: C64) -> Result<C64> {
        let curve = &self.mc.curve;
        path.validate(curve)?;
        let mut anchor = start.clone();
        let mut h = h_start;
        for ch in chunks(curve, path) {
            h = track_sqrt(|t| self.h_alpha_sq(&tracked_at(curve, &anchor, &ch, t)), h)?;
            anchor = tracked_at(curve, &anchor, &ch, 1.0);
        }
        Ok(h)
    }

    pub fn wrap(&self, point: CurvePoint) -> Result<KernelPoint> {
        let frame = &self.mc.basis.loops.frame;
        let start = frame.point(&self.mc.curve, point.sheet);
        let path = PathSpec { start: start.sheet_point(), pieces: point.pieces.clone() };
        let h = self.continue_h(&start, &path, self.h_base[point.sheet])?;
        if h.norm_sqr() < 1e-14 * self.grad.iter().map(|g| g.norm_sqr()).sum::<f64>() {
            return Err(Error::Numerical("h_α vanishes at the sample point".into()));
        }
        Ok(KernelPoint { point, h })
    }

    /// Point on `sheet` over z, reached by the straight segment from the base.
    pub fn point(&self, sheet: usize, z: C64) -> Result<KernelPoint> {
        self.wrap(self.mc.point(sheet, z)?)
    }

    pub fn extend(&self, p: &KernelPoint, dz: C64) -> Result<KernelPoint> {
        let q = self.mc.extend(&p.point, dz)?;
        let h = track_sqrt(
            |t| self.h_alpha_sq(&p.point.tracked.advance(&self.mc.curve, p.z() + dz * t)),
            p.h,
        )?;
        Ok(KernelPoint { point: q, h })
    }

    fn diff(x: &KernelPoint, y: &KernelPoint) -> Vec<C64> {
        y.point.abel.iter().zip(&x.point.abel).map(|(a, b)| a - b).collect()
    }

    /// E(x, y) = θ[α](y - x) / (h_α(x) h_α(y)).
    pub fn prime_form(&self, x: &KernelPoint, y: &KernelPoint) -> Result<C64> {
        let th = self.mc.theta_at(&Self::diff(x, y), &self.mc.odd)?;
        Ok(th.value / (x.h * y.h))
    }

    /// R(x, y | e) = θ[e](y - x) / (θ[e](0) E(x, y)).
    pub fn szego_analytic(&self, x: &KernelPoint, y: &KernelPoint, e: &Characteristic) -> Result<C64> {
        let g = self.mc.genus();
        let t0 = self.mc.theta_at(&vec![C64::new(0.0, 0.0); g], e)?;
        if t0.value.norm() < 1e-10 * t0.scale() {
            return Err(Error::Numerical("θ[e](0) vanishes; e is singular".into()));
        }
        let t = self.mc.theta_at(&Self::diff(x, y), e)?;
        Ok(t.value / (t0.value * self.prime_form(x, y)?))
    }

    /// Finite-difference step for ω: a fixed fraction of the distance from
    /// x and y to the nearest branch point and to each other.
    pub fn default_step(&self, x: &KernelPoint, y: &KernelPoint) -> f64 {
        let curve = &self.mc.curve;
        let d = |z: C64| curve.lambdas().iter().map(|l| (z - l).norm()).fold(f64::INFINITY, f64::min);
        OMEGA_STEP * d(x.z()).min(d(y.z())).min((x.z() - y.z()).norm())
    }

    /// ω(x, y) = ∂_x ∂_y log θ[α](y - x) by central differences of step h in both charts.
    pub fn canonical_diff(&self, x: &KernelPoint, y: &KernelPoint, h: f64) -> Result<C64> {
        let xs = [self.mc.extend(&x.point, C64::new(h, 0.0))?, self.mc.extend(&x.point, C64::new(-h, 0.0))?];
        let ys = [self.mc.extend(&y.point, C64::new(h, 0.0))?, self.mc.extend(&y.point, C64::new(-h, 0.0))?];
        let th = |a: &CurvePoint, b: &CurvePoint| -> Result<C64> {
            let d: Vec<C64> = b.abel.iter().zip(&a.abel).map(|(p, q)| p - q).collect();
            Ok(self.mc.theta_at(&d, &self.mc.odd)?.value)
        };
        let ratio = th(&xs[0], &ys[0])? * th(&xs[1], &ys[1])? / (th(&xs[0], &ys[1])? * th(&xs[1], &ys[0])?);
        Ok(ratio.ln() / (4.0 * h * h))
    }

    /// -Σ ∂²log θ[α](y - x) v_i(x) v_j(y).
    pub fn canonical_diff_analytic(&self, x: &KernelPoint, y: &KernelPoint) -> Result<C64> {
        let lh = self.mc.theta_at(&Self::diff(x, y), &self.mc.odd)?.log_hessian();
        Ok(-bilinear(&lh, &self.mc.differentials(&x.point), &self.mc.differentials(&y.point)))
    }

    /// Both sides of R(x,y|e) R(x,y|-e) = ω(x,y) + Σ ∂²log θ[e](0) v_i(x) v_j(y).
    pub fn fay(&self, x: &KernelPoint, y: &KernelPoint, e: &Characteristic, h: f64) -> Result<FaySample> {
        let lhs = self.szego_analytic(x, y, e)? * self.szego_analytic(x, y, &e.negated())?;
        let g = self.mc.genus();
        let lh = self.mc.theta_at(&vec![C64::new(0.0, 0.0); g], e)?.log_hessian();
        let corr = bilinear(&lh, &self.mc.differentials(&x.point), &self.mc.differentials(&y.point));
        let omega = self.canonical_diff(x, y, h)?;
        let rhs = omega + corr;
        Ok(FaySample { lhs, rhs, residual: (lhs - rhs).norm() / lhs.norm() })
    }
}

fn bilinear(m: &[Vec<C64>], a: &[C64], b: &[C64]) -> C64 {
    let mut s = C64::new(0.0, 0.0);
    for (i, row) in m.iter().enumerate() {
        for (j, x) in row.iter().enumerate() {
            s += x * a[i] * b[j];
        }
    }
    s
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct FaySample {
    pub lhs: C64,
    pub rhs: C64,
    pub residual: f64,
}

/// Exponent data for F(x, y | Λ): q_base(k_i) = q_{-(N-1)/2}(k_i) and the
/// integers r_ij = q_l(k_i) - q_base(k_i) - j/N with l = -(N-1)/2 + j.
#[derive(Clone, Debug)]
pub struct AlgebraicKernel {
    n: usize,
    lambdas: Vec<C64>,
    base: Vec<f64>,
    r: Vec<Vec<i32>>,
}

impl AlgebraicKernel {
    pub fn new(curve: &ZnCurve, lambda: &Partition) -> Result<Self> {
        let n = curve.sheets();
        if lambda.sheets() != n || lambda.m() != curve.m() {
            return Err(Error::Input(format!("partition {lambda} does not fit the curve")));
        }
        let k = lambda.weights();
        let l2s: Vec<i64> = labels(n).collect();
        let base: Vec<Q> = k.iter().map(|&ki| q_l(n, l2s[0], ki as i64)).collect::<Result<_>>()?;
        let mut r = vec![vec![0i32; n]; k.len()];
        for (j, &l2) in l2s.iter().enumerate() {
            for (i, &ki) in k.iter().enumerate() {
                let x = q_l(n, l2, ki as i64)? - base[i] - Q::new(j as i64, n as i64);
                if !x.is_integer() {
                    return Err(Error::Numerical(format!("exponent shift r_{i}{j} = {x} is not an integer")));
                }
                r[i][j] = x.to_integer() as i32;
            }
        }
        let base = base.iter().map(|q| *q.numer() as f64 / *q.denom() as f64).collect();
        Ok(AlgebraicKernel { n, lambdas: curve.lambdas().to_vec(), base, r })
    }

    /// F(x, y | Λ) in the √dz(x)√dz(y) trivialization; branches follow the
    /// tracked logarithms of both points.
    pub fn eval(&self, x: &TrackedPoint, y: &TrackedPoint) -> Result<C64> {
        let dz = y.z - x.z;
        if dz.norm() == 0.0 {
            return Err(Error::Input("F is singular on z(x) = z(y)".into()));
        }
        let expo: C64 = self.base.iter().zip(x.logs.iter().zip(&y.logs)).map(|(q, (lx, ly))| (lx - ly) * *q).sum();
        let ratios: Vec<C64> = self.lambdas.iter().map(|l| (x.z - l) / (y.z - l)).collect();
        let sratio = x.s / y.s;
        let mut total = C64::new(0.0, 0.0);
        for j in 0..self.n {
            let mut term = sratio.powu(j as u32);
            for (i, rho) in ratios.iter().enumerate() {
                term *= rho.powi(self.r[i][j]);
            }
            total += term;
        }
        Ok(expo.exp() * total / (dz * self.n as f64))
    }

    /// (1/2N) Σ_{i,j} q(k_i,k_j) / ((z - λ_i)(z - λ_j)).
    pub fn second_order(&self, lambda: &Partition, z: C64) -> C64 {
        let k = lambda.weights();
        let n = self.n;
        let mut s = C64::new(0.0, 0.0);
        for (i, li) in self.lambdas.iter().enumerate() {
            for (j, lj) in self.lambdas.iter().enumerate() {
                let q = crate::partition::q_pair_closed(n, k[i] as i64, k[j] as i64);
                let qf = *q.numer() as f64 / *q.denom() as f64;
                s += qf / ((z - li) * (z - lj));
            }
        }
        s / (2.0 * n as f64)
    }
}

pub fn szego_algebraic(curve: &ZnCurve, lambda: &Partition, x: &TrackedPoint, y: &TrackedPoint) -> Result<C64> {
    AlgebraicKernel::new(curve, lambda)?.eval(x, y)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SzegoSample {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub sheet_x: usize,
    pub sheet_y: usize,
    pub r_abs: f64,
    pub f_abs: f64,
    /// |R - sF| / |F| with the global sign s.
    pub deviation: f64,
    pub modulus_deviation: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SzegoComparison {
    pub partition: String,
    pub sign: i32,
    pub samples: Vec<SzegoSample>,
    pub max_deviation: f64,
    pub max_modulus_deviation: f64,
}

/// Compares R(x,y|e_Λ) and F(x,y|Λ) on the given pairs, fixing the global
/// sign on the first pair.
pub fn compare_szego(engine: &KernelEngine, lambda: &Partition, pairs: &[(KernelPoint, KernelPoint)]) -> Result<SzegoComparison> {
    let mc = engine.mc;
    let e = mc.e_lambda(lambda)?.rounded;
    let alg = AlgebraicKernel::new(&mc.curve, lambda)?;
    let mut values = Vec::with_capacity(pairs.len());
    for (x, y) in pairs {
        let r = engine.szego_analytic(x, y, &e)?;
        let f = alg.eval(x.tracked(), y.tracked())?;
        values.push((r, f));
    }
    let (r0, f0) = values.first().copied().ok_or_else(|| Error::Input("no sample pairs".into()))?;
    let sign = if (r0 - f0).norm() <= (r0 + f0).norm() { 1 } else { -1 };
    let samples: Vec<SzegoSample> = pairs
        .iter()
        .zip(&values)
        .map(|((x, y), (r, f))| SzegoSample {
            x: [x.z().re, x.z().im],
            y: [y.z().re, y.z().im],
            sheet_x: x.point.sheet,
            sheet_y: y.point.sheet,
            r_abs: r.norm(),
            f_abs: f.norm(),
            deviation: (r - f * sign as f64).norm() / f.norm(),
            modulus_deviation: (r.norm() - f.norm()).abs() / f.norm(),
        })
        .collect();
    let max_deviation = samples.iter().map(|s| s.deviation).fold(0.0, f64::max);
    let max_modulus_deviation = samples.iter().map(|s| s.modulus_deviation).fold(0.0, f64::max);
    Ok(SzegoComparison { partition: lambda.to_string(), sign, samples, max_deviation, max_modulus_deviation })
}

/// Deterministic sample pairs (x, y) on random sheets, with straight
/// paths from the base keeping clear of the branch points and |z_x - z_y|
/// bounded below.
pub fn sample_pairs(engine: &KernelEngine, count: usize, seed: u64) -> Result<Vec<(KernelPoint, KernelPoint)>> {
    use rand::{Rng, SeedableRng};
    let mc = engine.mc;
    let curve = &mc.curve;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let c = curve.centroid();
    let spread = curve.spread();
    let sep = min_separation(curve);
    let base = mc.basis.loops.base();
    let pick = |rng: &mut rand_chacha::ChaCha8Rng| -> Result<KernelPoint> {
        for _ in 0..10_000 {
            let z = c + C64::from_polar(spread * rng.gen_range(0.2..1.1), rng.gen_range(0.0..std::f64::consts::TAU));
            let sheet = rng.gen_range(0..curve.sheets());
            let path = PathSpec::new(mc.basis.loops.frame.point(curve, sheet).sheet_point()).then(crate::path::PathPiece::Segment { to: z });
            if path.clearance(curve).1 < 0.2 * sep || (z - base).norm() < 0.1 {
                continue;
            }
            return engine.point(sheet, z);
        }
        Err(Error::Numerical("could not place sample points".into()))
    };
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = pick(&mut rng)?;
        let y = pick(&mut rng)?;
        if (x.z() - y.z()).norm() > 0.1 * spread {
            out.push((x, y));
        }
    }
    Ok(out)
}

pub(crate) fn min_separation(curve: &ZnCurve) -> f64 {
    let l = curve.lambdas();
    let mut best = f64::INFINITY;
    for i in 0..l.len() {
        for j in i + 1..l.len() {
            best = best.min((l[i] - l[j]).norm());
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_tracking_follows_the_branch() {
        // √(e^{iθ}) continued once around the circle changes sign.
        let r = track_sqrt(|t| C64::from_polar(1.0, std::f64::consts::TAU * t), C64::new(1.0, 0.0)).unwrap();
        assert!((r + 1.0).norm() < 1e-12);
        let r = track_sqrt(|t| C64::new(1.0 + 3.0 * t, 0.0), C64::new(-1.0, 0.0)).unwrap();
        assert!((r + 2.0).norm() < 1e-12);
        assert!(track_sqrt(|t| C64::new(1.0 - 2.0 * t, 0.0), C64::new(1.0, 0.0)).is_err());
    }
}
