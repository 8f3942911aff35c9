//! Paths on the curve: geometry, root continuation and integration of the
//! holomorphic differentials.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::curve::{eval_basis, DiffIndex, SheetPoint, TrackedPoint, ZnCurve};
use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadConfig};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum PathPiece {
    Segment { to: C64 },
    /// Circular arc around `center`, counterclockwise for positive sweep (radians).
    Arc { center: C64, sweep: f64 },
    /// Straight segment ending at branch point `index`.
    ToBranch { index: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub start: SheetPoint,
    pub pieces: Vec<PathPiece>,
}

fn end_of(curve: &ZnCurve, from: C64, piece: &PathPiece) -> C64 {
    match *piece {
        PathPiece::Segment { to } => to,
        PathPiece::Arc { center, sweep } => center + (from - center) * C64::from_polar(1.0, sweep),
        PathPiece::ToBranch { index } => curve.lambdas()[index],
    }
}

fn segment_distance(a: C64, b: C64, p: C64) -> f64 {
    let d = b - a;
    if d.norm_sqr() == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
    (p - (a + d * t)).norm()
}

fn arc_distance(from: C64, center: C64, sweep: f64, p: C64) -> f64 {
    let r = (from - center).norm();
    let theta0 = (from - center).arg();
    let rel = (p - center).arg() - theta0;
    let (lo, hi) = if sweep >= 0.0 { (0.0, sweep) } else { (sweep, 0.0) };
    // Any angle congruent to rel within the swept range means the nearest
    // circle point lies on the arc.
    let k_min = ((lo - rel) / (2.0 * PI)).ceil();
    if rel + 2.0 * PI * k_min <= hi {
        return ((p - center).norm() - r).abs();
    }
    let end = center + (from - center) * C64::from_polar(1.0, sweep);
    (p - from).norm().min((p - end).norm())
}

impl PathSpec {
    pub fn new(start: SheetPoint) -> Self {
        PathSpec { start, pieces: Vec::new() }
    }

    pub fn then(mut self, piece: PathPiece) -> Self {
        self.pieces.push(piece);
        self
    }

    /// The sequence of piece start points followed by the end point.
    pub fn vertices(&self, curve: &ZnCurve) -> Vec<C64> {
        let mut out = vec![self.start.z];
        for p in &self.pieces {
            let last = *out.last().expect("non-empty");
            out.push(end_of(curve, last, p));
        }
        out
    }

    pub fn end_z(&self, curve: &ZnCurve) -> C64 {
        *self.vertices(curve).last().expect("non-empty")
    }

    /// Smallest distance from the path to a branch point it does not end at.
    pub fn clearance(&self, curve: &ZnCurve) -> (usize, f64, C64) {
        let verts = self.vertices(curve);
        let mut best = (usize::MAX, f64::INFINITY, self.start.z);
        for (k, piece) in self.pieces.iter().enumerate() {
            let (a, b) = (verts[k], verts[k + 1]);
            for (i, &lam) in curve.lambdas().iter().enumerate() {
                if let PathPiece::ToBranch { index } = piece {
                    if *index == i {
                        continue;
                    }
                }
                let d = match *piece {
                    PathPiece::Arc { center, sweep } => arc_distance(a, center, sweep, lam),
                    _ => segment_distance(a, b, lam),
                };
                if d < best.1 {
                    best = (i, d, a);
                }
            }
        }
        best
    }

    /// Fails if the path passes within eps_clear of a branch point, or if a
    /// branch point terminates anything but the last piece.
    pub fn validate(&self, curve: &ZnCurve) -> Result<()> {
        for (k, p) in self.pieces.iter().enumerate() {
            if let PathPiece::ToBranch { index } = p {
                if *index >= curve.branch_count() {
                    return Err(Error::Input(format!("branch index {index} out of range")));
                }
                if k + 1 != self.pieces.len() {
                    return Err(Error::Input("a path may only end at a branch point".into()));
                }
            }
        }
        let (index, dist, at) = self.clearance(curve);
        if dist < curve.tolerances().eps_clear {
            return Err(Error::PathTooClose { index, dist, at });
        }
        Ok(())
    }
}

/// A piece of path on which every point can be reached from `anchor` by the
/// principal logarithm of (z - λ_j)/(anchor - λ_j).
#[derive(Clone, Copy, Debug)]
pub(crate) enum Chunk {
    Line { from: C64, to: C64 },
    Arc { center: C64, from: C64, sweep: f64 },
}

impl Chunk {
    pub fn z(&self, t: f64) -> C64 {
        match *self {
            Chunk::Line { from, to } => from + (to - from) * t,
            Chunk::Arc { center, from, sweep } => center + (from - center) * C64::from_polar(1.0, sweep * t),
        }
    }

    pub fn dz(&self, t: f64) -> C64 {
        match *self {
            Chunk::Line { from, to } => to - from,
            Chunk::Arc { center, from, sweep } => {
                (from - center) * C64::from_polar(1.0, sweep * t) * C64::new(0.0, sweep)
            }
        }
    }
}

/// Splits non-terminal pieces into chunks. Segments are single chunks; arcs
/// are cut so that each sub-arc stays within half the anchor's distance to
/// the nearest branch point.
pub(crate) fn chunks(curve: &ZnCurve, path: &PathSpec) -> Vec<Chunk> {
    let mut out = Vec::new();
    let mut cur = path.start.z;
    for piece in &path.pieces {
        match *piece {
            PathPiece::Segment { to } => {
                out.push(Chunk::Line { from: cur, to });
                cur = to;
            }
            PathPiece::Arc { center, sweep } => {
                let r = (cur - center).norm();
                let mut done = 0.0f64;
                while done.abs() < sweep.abs() {
                    let from = cur;
                    let d = curve.nearest_branch(from).1;
                    let step = (0.45 * d / r.max(1e-300)).min(0.5);
                    let remaining = sweep - done;
                    let this = if remaining.abs() <= step { remaining } else { step * sweep.signum() };
                    out.push(Chunk::Arc { center, from, sweep: this });
                    cur = center + (from - center) * C64::from_polar(1.0, this);
                    done += this;
                }
            }
            PathPiece::ToBranch { index } => {
                cur = curve.lambdas()[index];
            }
        }
    }
    out
}

/// Tracked point at parameter t of a chunk whose start is `anchor`.
pub(crate) fn tracked_at(curve: &ZnCurve, anchor: &TrackedPoint, chunk: &Chunk, t: f64) -> TrackedPoint {
    anchor.advance(curve, chunk.z(t))
}

/// Root s at parameter t of a chunk, continued from the anchor.
fn s_at(curve: &ZnCurve, anchor_z: C64, anchor_s: C64, z: C64) -> C64 {
    let n = curve.sheets() as f64;
    let sum: C64 = curve.lambdas().iter().map(|l| ((z - l) / (anchor_z - l)).ln()).sum();
    anchor_s * (sum / n).exp()
}

/// Continues the root s along the path by tracking the nearest root of
/// s^N = f(z) with adaptive steps. A step is accepted only if the nearest
/// root is at least twice as close as the second nearest.
pub fn continue_s(curve: &ZnCurve, path: &PathSpec) -> Result<SheetPoint> {
    path.validate(curve)?;
    let n = curve.sheets();
    let mut s = path.start.s;
    let mut z = path.start.z;
    let chunks = chunks(curve, path);
    for chunk in &chunks {
        let mut t = 0.0f64;
        let mut dt = 0.05f64;
        while t < 1.0 {
            let t1 = (t + dt).min(1.0);
            let z1 = chunk.z(t1);
            let roots = curve.roots_at(z1)?;
            let mut dist: Vec<(f64, C64)> = roots.iter().map(|r| ((r - s).norm(), *r)).collect();
            dist.sort_by(|a, b| a.0.total_cmp(&b.0));
            let spacing = roots[0].norm() * 2.0 * (PI / n as f64).sin();
            if dist[0].0 * 2.0 <= dist[1].0 && dist[0].0 < 0.25 * spacing {
                s = dist[0].1;
                z = z1;
                t = t1;
                dt = (dt * 1.5).min(0.25);
            } else {
                dt *= 0.5;
                if dt < 1e-12 {
                    return Err(Error::Continuation { at: z, reason: "step size underflow".into() });
                }
            }
        }
    }
    if let Some(PathPiece::ToBranch { index }) = path.pieces.last() {
        return Ok(SheetPoint { z: curve.lambdas()[*index], s: C64::new(0.0, 0.0) });
    }
    Ok(SheetPoint { z, s })
}

/// Integrals of the basis differentials along a path together with the
/// tracked end point (absent when the path ends at a branch point).
#[derive(Clone, Debug)]
pub struct PathIntegral {
    pub values: Vec<C64>,
    pub error: f64,
    pub end: Option<TrackedPoint>,
}

/// Integrates every basis differential along the path starting from the
/// tracked point `start` (which must sit at path.start).
pub fn integrate_path(
    curve: &ZnCurve,
    basis: &[DiffIndex],
    start: &TrackedPoint,
    path: &PathSpec,
    cfg: &QuadConfig,
) -> Result<PathIntegral> {
    path.validate(curve)?;
    let g = basis.len();
    let mut values = vec![C64::new(0.0, 0.0); g];
    let mut error = 0.0;
    let mut anchor = start.clone();
    let mut buf = Vec::with_capacity(g);
    for chunk in chunks(curve, path) {
        let (az, as_) = (anchor.z, anchor.s);
        let r = integrate(
            |t, out| {
                let z = chunk.z(t);
                let s = s_at(curve, az, as_, z);
                let dz = chunk.dz(t);
                eval_basis(basis, z, s, &mut buf);
                for (o, v) in out.iter_mut().zip(&buf) {
                    *o = v * dz;
                }
            },
            0.0,
            1.0,
            g,
            cfg,
        )?;
        for (v, r) in values.iter_mut().zip(&r.value) {
            *v += r;
        }
        error += r.error;
        anchor = tracked_at(curve, &anchor, &chunk, 1.0);
    }
    if let Some(PathPiece::ToBranch { index }) = path.pieces.last() {
        let r = integrate_to_branch(curve, basis, &anchor, *index, cfg)?;
        for (v, r) in values.iter_mut().zip(&r.0) {
            *v += r;
        }
        error += r.1;
        return Ok(PathIntegral { values, error, end: None });
    }
    Ok(PathIntegral { values, error, end: Some(anchor) })
}

/// ∫ from the tracked point a to λ_i along the straight segment, using
/// z = λ_i + (a - λ_i) u^N so the integrand is smooth in u.
pub(crate) fn integrate_to_branch(
    curve: &ZnCurve,
    basis: &[DiffIndex],
    a: &TrackedPoint,
    i: usize,
    cfg: &QuadConfig,
) -> Result<(Vec<C64>, f64)> {
    let n = curve.sheets();
    let lams = curve.lambdas();
    let lam = lams[i];
    let d = a.z - lam;
    // s = u · a.s · exp((1/N) Σ_{j≠i} Log((z-λ_j)/(a-λ_j))) along the segment.
    let r = integrate(
        |u, out| {
            let un = u.powi(n as i32);
            let z = lam + d * un;
            let mut sum = C64::new(0.0, 0.0);
            for (j, l) in lams.iter().enumerate() {
                if j != i {
                    sum += ((z - l) / (a.z - l)).ln();
                }
            }
            let h = a.s * (sum / n as f64).exp();
            let hinv = h.inv();
            for (o, b) in out.iter_mut().zip(basis) {
                let pw = (n - 1 - b.alpha) as i32;
                *o = z.powu(b.beta as u32 - 1) * hinv.powu(b.alpha as u32) * u.powi(pw) * d * n as f64;
            }
        },
        1.0,
        0.0,
        basis.len(),
        cfg,
    )?;
    Ok((r.value, r.error))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::SheetFrame;

    fn curve() -> ZnCurve {
        ZnCurve::new(3, vec![C64::new(1.0, 0.2), C64::new(-0.7, 1.1), C64::new(0.3, -1.4), C64::new(-1.2, -0.5), C64::new(1.5, 1.3), C64::new(0.1, 0.9)]).unwrap()
    }

    #[test]
    fn root_tracking_agrees_with_log_tracking() {
        let c = curve();
        let frame = SheetFrame::new(&c, c.default_reference(), 0).unwrap();
        let start = frame.point(&c, 1);
        let path = PathSpec::new(start.sheet_point())
            .then(PathPiece::Segment { to: C64::new(0.5, 3.0) })
            .then(PathPiece::Arc { center: C64::new(0.0, 0.0), sweep: 2.5 })
            .then(PathPiece::Segment { to: C64::new(0.2, 0.0) });
        let by_roots = continue_s(&c, &path).unwrap();
        let mut p = start.clone();
        for ch in chunks(&c, &path) {
            p = tracked_at(&c, &p, &ch, 1.0);
        }
        assert!((p.z - by_roots.z).norm() < 1e-13);
        assert!((p.s - by_roots.s).norm() < 1e-10 * p.s.norm());
    }

    #[test]
    fn loop_around_branch_point_changes_sheet() {
        let c = curve();
        let lam = c.lambdas()[2];
        let z0 = lam + C64::new(0.3, 0.0);
        let s0 = c.roots_at(z0).unwrap()[0];
        let path = PathSpec::new(SheetPoint { z: z0, s: s0 }).then(PathPiece::Arc { center: lam, sweep: 2.0 * PI });
        let end = continue_s(&c, &path).unwrap();
        assert!((end.s - s0 * c.omega()).norm() < 1e-10 * s0.norm());
    }

    #[test]
    fn closed_loop_integral_vanishes_when_contractible() {
        // A small circle avoiding all branch points bounds a disc with no
        // singularities, so every holomorphic integral around it is zero.
        let c = curve();
        let z0 = C64::new(3.0, 0.0);
        let s0 = c.roots_at(z0).unwrap()[1];
        let start = TrackedPoint { z: z0, s: s0, logs: c.lambdas().iter().map(|l| (z0 - l).ln()).collect() };
        let path = PathSpec::new(start.sheet_point()).then(PathPiece::Arc { center: C64::new(3.5, 0.0), sweep: 2.0 * PI });
        let basis = c.differential_basis();
        let r = integrate_path(&c, &basis, &start, &path, &QuadConfig::default()).unwrap();
        assert!(r.values.iter().all(|v| v.norm() < 1e-12));
        let end = r.end.unwrap();
        assert!((end.s - s0).norm() < 1e-12);
    }

    #[test]
    fn branch_endpoint_matches_truncated_segment() {
        let c = curve();
        let frame = SheetFrame::new(&c, c.default_reference(), 0).unwrap();
        let start = frame.point(&c, 0);
        let basis = c.differential_basis();
        let cfg = QuadConfig::default();
        let i = 4;
        let full = PathSpec::new(start.sheet_point()).then(PathPiece::ToBranch { index: i });
        let full = integrate_path(&c, &basis, &start, &full, &cfg).unwrap();
        // Stop short and add the remaining piece by the leading-order local
        // expansion: near λ, w ≈ c (z-λ)^{-α/N} dz so the tail is c N/(N-α) ε^{1-α/N}.
        let lam = c.lambdas()[i];
        let eps = 1e-7;
        let near = lam + (start.z - lam) * eps;
        let part = PathSpec::new(start.sheet_point()).then(PathPiece::Segment { to: near });
        let part = integrate_path(&c, &basis, &start, &part, &cfg).unwrap();
        let endp = part.end.unwrap();
        for (k, b) in basis.iter().enumerate() {
            let w_near = endp.z.powu(b.beta as u32 - 1) / endp.s.powu(b.alpha as u32);
            let expo = 1.0 - b.alpha as f64 / 3.0;
            let tail = -w_near * (endp.z - lam) / expo;
            let diff = (full.values[k] - part.values[k] - tail).norm();
            assert!(diff < 1e-6 * full.values[k].norm().max(1.0), "{k}: {diff}");
        }
    }
}
