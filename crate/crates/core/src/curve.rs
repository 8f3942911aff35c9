use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{input, Error, Result};

/// Thresholds used when validating curves and paths.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveTolerances {
    /// Minimum allowed distance between two branch points.
    pub eps_sep: f64,
    /// Minimum distance an integration path may come to a branch point it does not end at.
    pub eps_clear: f64,
    /// Relative gap required to tell apart the N roots of s^N = f(z).
    pub eps_root: f64,
}

impl Default for CurveTolerances {
    fn default() -> Self {
        CurveTolerances { eps_sep: 1e-6, eps_clear: 1e-8, eps_root: 1e-10 }
    }
}

/// Index (α, β) of the holomorphic differential z^{β-1} dz / s^α.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DiffIndex {
    pub alpha: usize,
    pub beta: usize,
}

/// A point of the curve in the affine chart: z together with the chosen root s.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetPoint {
    pub z: C64,
    pub s: C64,
}

/// The curve s^N = ∏ (z - λ_i) with Nm distinct branch points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ZnCurve {
    n: usize,
    lambdas: Vec<C64>,
    tol: CurveTolerances,
}

pub fn genus(n: usize, m: usize) -> usize {
    (n - 1) * (n * m - 2) / 2
}

pub fn root_of_unity(n: usize, k: i64) -> C64 {
    let k = k.rem_euclid(n as i64) as f64;
    C64::from_polar(1.0, 2.0 * PI * k / n as f64)
}

impl ZnCurve {
    pub fn new(n: usize, lambdas: Vec<C64>) -> Result<Self> {
        Self::with_tolerances(n, lambdas, CurveTolerances::default())
    }

    pub fn with_tolerances(n: usize, lambdas: Vec<C64>, tol: CurveTolerances) -> Result<Self> {
        if n < 2 {
            return input(format!("N must be at least 2, got {n}"));
        }
        if lambdas.is_empty() || lambdas.len() % n != 0 {
            return input(format!("need Nm branch points with m >= 1, got {} for N = {n}", lambdas.len()));
        }
        if let Some(i) = lambdas.iter().position(|l| !l.re.is_finite() || !l.im.is_finite()) {
            return input(format!("branch point {i} is not finite"));
        }
        for i in 0..lambdas.len() {
            for j in i + 1..lambdas.len() {
                if (lambdas[i] - lambdas[j]).norm() < tol.eps_sep {
                    return Err(Error::DegenerateCurve { i, j, eps: tol.eps_sep });
                }
            }
        }
        Ok(ZnCurve { n, lambdas, tol })
    }

    /// N, the number of sheets.
    pub fn sheets(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.lambdas.len() / self.n
    }

    pub fn branch_count(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[C64] {
        &self.lambdas
    }

    pub fn tolerances(&self) -> CurveTolerances {
        self.tol
    }

    pub fn genus(&self) -> usize {
        genus(self.n, self.m())
    }

    pub fn omega(&self) -> C64 {
        root_of_unity(self.n, 1)
    }

    pub fn centroid(&self) -> C64 {
        self.lambdas.iter().sum::<C64>() / self.lambdas.len() as f64
    }

    /// Distance from the centroid to the farthest branch point.
    pub fn spread(&self) -> f64 {
        let c = self.centroid();
        self.lambdas.iter().map(|l| (l - c).norm()).fold(0.0, f64::max)
    }

    /// The default reference point: one unit beyond the farthest branch point,
    /// on the positive real direction from the centroid.
    pub fn default_reference(&self) -> C64 {
        self.centroid() + C64::new(1.0 + self.spread(), 0.0)
    }

    pub fn f(&self, z: C64) -> C64 {
        self.lambdas.iter().map(|l| z - l).product()
    }

    /// Index and distance of the branch point nearest to z.
    pub fn nearest_branch(&self, z: C64) -> (usize, f64) {
        self.lambdas
            .iter()
            .enumerate()
            .map(|(i, l)| (i, (z - l).norm()))
            .fold((usize::MAX, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a })
    }

    /// The N roots of s^N = f(z), ordered by principal argument in (-π, π].
    pub fn roots_at(&self, z: C64) -> Result<Vec<C64>> {
        let (i, d) = self.nearest_branch(z);
        if d < self.tol.eps_clear {
            return Err(Error::PathTooClose { index: i, dist: d, at: z });
        }
        let r0 = self.f(z).powf(1.0 / self.n as f64);
        let mut roots: Vec<C64> = (0..self.n).map(|k| r0 * root_of_unity(self.n, k as i64)).collect();
        roots.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
        Ok(roots)
    }

    /// Basis of holomorphic differentials in lexicographic (α, β) order,
    /// 1 ≤ α ≤ N-1, 1 ≤ β ≤ αm - 1.
    pub fn differential_basis(&self) -> Vec<DiffIndex> {
        let m = self.m();
        (1..self.n)
            .flat_map(|alpha| (1..alpha * m).map(move |beta| DiffIndex { alpha, beta }))
            .collect()
    }

    /// Coefficient of dz in each basis differential at the point.
    pub fn eval_differentials(&self, p: &SheetPoint) -> Vec<C64> {
        let basis = self.differential_basis();
        let mut out = Vec::with_capacity(basis.len());
        eval_basis(&basis, p.z, p.s, &mut out);
        out
    }

    /// The same curve with λ_i moved by h.
    pub fn perturbed(&self, i: usize, h: C64) -> Result<ZnCurve> {
        if i >= self.lambdas.len() {
            return input(format!("branch index {i} out of range"));
        }
        let mut lambdas = self.lambdas.clone();
        lambdas[i] += h;
        ZnCurve::with_tolerances(self.n, lambdas, self.tol)
    }
}

/// Writes z^{β-1}/s^α for each basis element into `out` (cleared first).
pub(crate) fn eval_basis(basis: &[DiffIndex], z: C64, s: C64, out: &mut Vec<C64>) {
    out.clear();
    let sinv = s.inv();
    for d in basis {
        out.push(z.powu(d.beta as u32 - 1) * sinv.powu(d.alpha as u32));
    }
}

/// A point carrying continuously tracked logarithms L_j = log(z - λ_j).
///
/// The root is s = c · exp(Σ L_j / N) for a constant c fixed by the frame,
/// so s and every fractional power of (z - λ_j) are continued together.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackedPoint {
    pub z: C64,
    pub s: C64,
    pub logs: Vec<C64>,
}

impl TrackedPoint {
    pub fn sheet_point(&self) -> SheetPoint {
        SheetPoint { z: self.z, s: self.s }
    }

    /// Moves along the straight segment to `to`. The caller guarantees the
    /// segment avoids every branch point.
    pub fn advance(&self, curve: &ZnCurve, to: C64) -> TrackedPoint {
        let n = curve.sheets() as f64;
        let mut sum = C64::new(0.0, 0.0);
        let logs = self
            .logs
            .iter()
            .zip(curve.lambdas())
            .map(|(l, lam)| {
                let d = ((to - lam) / (self.z - lam)).ln();
                sum += d;
                l + d
            })
            .collect();
        TrackedPoint { z: to, s: self.s * (sum / n).exp(), logs }
    }
}

/// Sheet labelling at a base point z*: sheet 0 carries the root of smallest
/// principal argument and sheet k carries s_0 ω^k.
///
/// Logarithms on sheet k are those reached by winding k times around the
/// reference branch point, so L_ref picks up 2πik.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SheetFrame {
    pub base: C64,
    pub s_base: C64,
    pub ref_branch: usize,
}

impl SheetFrame {
    pub fn new(curve: &ZnCurve, base: C64, ref_branch: usize) -> Result<Self> {
        let s_base = curve.roots_at(base)?[0];
        Ok(SheetFrame { base, s_base, ref_branch })
    }

    /// The frame for a deformed curve: same base point, sheet 0 root chosen
    /// nearest to the old one.
    pub fn transported(&self, curve: &ZnCurve) -> Result<Self> {
        let roots = curve.roots_at(self.base)?;
        let s_base = *roots
            .iter()
            .min_by(|a, b| (*a - self.s_base).norm().total_cmp(&(*b - self.s_base).norm()))
            .expect("N >= 2 roots");
        Ok(SheetFrame { s_base, ..self.clone() })
    }

    pub fn point(&self, curve: &ZnCurve, sheet: usize) -> TrackedPoint {
        let n = curve.sheets();
        let mut logs: Vec<C64> = curve.lambdas().iter().map(|l| (self.base - l).ln()).collect();
        logs[self.ref_branch] += C64::new(0.0, 2.0 * PI * (sheet % n) as f64);
        TrackedPoint { z: self.base, s: self.s_base * root_of_unity(n, sheet as i64), logs }
    }

    /// Sheet index of a root s of s^N = f(z*).
    pub fn sheet_of(&self, curve: &ZnCurve, s: C64) -> usize {
        let n = curve.sheets();
        let ratio = s / self.s_base;
        let k = (ratio.arg() / (2.0 * PI) * n as f64).round() as i64;
        k.rem_euclid(n as i64) as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ZnCurve {
        ZnCurve::new(3, vec![C64::new(1.0, 0.2), C64::new(-0.7, 1.1), C64::new(0.3, -1.4), C64::new(-1.2, -0.5), C64::new(1.5, 1.3), C64::new(0.1, 0.9)]).unwrap()
    }

    #[test]
    fn genus_matches_riemann_hurwitz() {
        for (n, m) in [(2, 2), (2, 3), (3, 1), (3, 2), (4, 1), (5, 1)] {
            // 2g - 2 = -2N + (N-1)Nm
            let g = genus(n, m) as i64;
            assert_eq!(2 * g - 2, -2 * n as i64 + (n as i64 - 1) * (n * m) as i64);
        }
        assert_eq!(genus(3, 2), 4);
        assert_eq!(genus(2, 3), 2);
    }

    #[test]
    fn basis_size_is_genus() {
        let c = sample();
        let b = c.differential_basis();
        assert_eq!(b.len(), c.genus());
        assert_eq!(b[0], DiffIndex { alpha: 1, beta: 1 });
        assert!(b.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn roots_solve_curve() {
        let c = sample();
        let z = C64::new(0.4, 0.35);
        let roots = c.roots_at(z).unwrap();
        for r in &roots {
            assert!((r.powu(3) - c.f(z)).norm() < 1e-12 * c.f(z).norm());
        }
        assert!(roots.windows(2).all(|w| w[0].arg() <= w[1].arg()));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ZnCurve::new(1, vec![C64::new(0.0, 0.0)]).is_err());
        assert!(ZnCurve::new(2, vec![C64::new(0.0, 0.0); 3]).is_err());
        let e = ZnCurve::new(2, vec![C64::new(0.0, 0.0), C64::new(1e-9, 0.0)]).unwrap_err();
        assert!(matches!(e, Error::DegenerateCurve { .. }));
    }

    #[test]
    fn frame_sheets_and_tracking() {
        let c = sample();
        let frame = SheetFrame::new(&c, c.default_reference(), 0).unwrap();
        for k in 0..3 {
            let p = frame.point(&c, k);
            assert_eq!(frame.sheet_of(&c, p.s), k);
            let expected = frame.s_base * root_of_unity(3, k as i64);
            assert!((p.s - expected).norm() < 1e-14 * p.s.norm());
            let q = p.advance(&c, C64::new(2.0, 2.0)).advance(&c, C64::new(-2.5, 2.0));
            assert!((q.s.powu(3) - c.f(q.z)).norm() < 1e-11 * c.f(q.z).norm());
            let direct: C64 = q.logs.iter().sum::<C64>() / 3.0;
            let c0 = p.s / (p.logs.iter().sum::<C64>() / 3.0).exp();
            assert!((c0 * direct.exp() - q.s).norm() < 1e-12 * q.s.norm());
        }
    }
}
