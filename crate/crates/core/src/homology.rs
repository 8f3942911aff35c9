//! Loop system at a base point, monodromy, and a symplectic homology basis
//! built from lifted keyhole loops.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::curve::{SheetFrame, ZnCurve};
use crate::error::{Error, Result};
use crate::path::{continue_s, PathPiece, PathSpec};

/// Base point, angular ordering of the branch points and sheet labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoopSystem {
    pub frame: SheetFrame,
    /// Angle of each branch point seen from the base, relative to the centroid direction.
    pub angles: Vec<f64>,
    /// Branch indices sorted by angle (ties by distance).
    pub order: Vec<usize>,
    /// Radius of the small circle used around each branch point.
    pub radii: Vec<f64>,
}

fn spoke_clearance(lams: &[C64], base: C64) -> f64 {
    let mut clr = f64::INFINITY;
    for (i, li) in lams.iter().enumerate() {
        let d = li - base;
        for (j, lj) in lams.iter().enumerate() {
            if i != j {
                let v = lj - base;
                let t = ((v * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0);
                clr = clr.min((v - d * t).norm());
            }
        }
    }
    clr
}

impl LoopSystem {
    /// Picks the base on the circle of radius 1 + spread around the centroid
    /// that keeps straight spokes farthest from the other branch points.
    pub fn new(curve: &ZnCurve) -> Result<Self> {
        let c = curve.centroid();
        let r = 1.0 + curve.spread();
        let lams = curve.lambdas();
        let mut best = (f64::NEG_INFINITY, c + r);
        for t in 0..64 {
            let base = c + C64::from_polar(r, 2.0 * PI * t as f64 / 64.0);
            let clr = spoke_clearance(lams, base);
            if clr > best.0 + 1e-12 {
                best = (clr, base);
            }
        }
        if best.0 < curve.tolerances().eps_clear {
            return Err(Error::Homology("no base point with clear spokes".into()));
        }
        Self::with_base(curve, best.1)
    }

    pub fn with_base(curve: &ZnCurve, base: C64) -> Result<Self> {
        let c = curve.centroid();
        let lams = curve.lambdas();
        let angles: Vec<f64> = lams.iter().map(|l| ((l - base) / (c - base)).arg()).collect();
        let mut order: Vec<usize> = (0..lams.len()).collect();
        order.sort_by(|&a, &b| {
            angles[a].total_cmp(&angles[b]).then((lams[a] - base).norm().total_cmp(&(lams[b] - base).norm()))
        });
        let radii = (0..lams.len())
            .map(|i| {
                let near = (0..lams.len()).filter(|&j| j != i).map(|j| (lams[j] - lams[i]).norm()).fold(f64::INFINITY, f64::min);
                0.3 * near.min((base - lams[i]).norm())
            })
            .collect();
        Ok(LoopSystem { frame: SheetFrame::new(curve, base, 0)?, angles, order, radii })
    }

    pub fn base(&self) -> C64 {
        self.frame.base
    }

    /// The keyhole loop around branch point i starting on `sheet` at the
    /// base: out along the spoke, `turns` full circles (counterclockwise when
    /// positive), and back.
    pub fn keyhole(&self, curve: &ZnCurve, i: usize, sheet: usize, turns: i32) -> PathSpec {
        let lam = curve.lambdas()[i];
        let dir = (self.base() - lam) / (self.base() - lam).norm();
        let near = lam + dir * self.radii[i];
        PathSpec::new(self.frame.point(curve, sheet).sheet_point())
            .then(PathPiece::Segment { to: near })
            .then(PathPiece::Arc { center: lam, sweep: 2.0 * PI * turns as f64 })
            .then(PathPiece::Segment { to: self.base() })
    }

    /// Keyhole loop around i followed by the inverse keyhole loop around j.
    pub fn keyhole_pair(&self, curve: &ZnCurve, i: usize, j: usize, sheet: usize) -> PathSpec {
        let first = self.keyhole(curve, i, sheet, 1);
        let second = self.keyhole(curve, j, (sheet + 1) % curve.sheets(), -1);
        let mut path = first;
        path.pieces.extend(second.pieces);
        path
    }
}

/// Sheet permutations of the keyhole loops, σ_i(k) = sheet reached from sheet k.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonodromyData {
    pub base: C64,
    pub order: Vec<usize>,
    pub perms: Vec<Vec<usize>>,
}

fn is_single_cycle(p: &[usize]) -> bool {
    let mut k = 0;
    for step in 1..=p.len() {
        k = p[k];
        if k == 0 {
            return step == p.len();
        }
    }
    false
}

/// Continues s around every keyhole loop by root tracking and checks that
/// each permutation is an N-cycle and that their ordered product is trivial.
pub fn monodromy(curve: &ZnCurve, loops: &LoopSystem) -> Result<MonodromyData> {
    let n = curve.sheets();
    let mut perms = Vec::with_capacity(curve.branch_count());
    for i in 0..curve.branch_count() {
        let mut p = Vec::with_capacity(n);
        for k in 0..n {
            let end = continue_s(curve, &loops.keyhole(curve, i, k, 1))?;
            p.push(loops.frame.sheet_of(curve, end.s));
        }
        if !is_single_cycle(&p) {
            return Err(Error::Homology(format!("monodromy at branch point {i} is not an N-cycle: {p:?}")));
        }
        perms.push(p);
    }
    for k in 0..n {
        let end = loops.order.iter().fold(k, |s, &i| perms[i][s]);
        if end != k {
            return Err(Error::Homology("product of monodromies is not the identity".into()));
        }
    }
    Ok(MonodromyData { base: loops.base(), order: loops.order.clone(), perms })
}

/// Lift of ℓ_a ℓ_b^{-1} starting on sheet k, with (a, b) consecutive in the
/// angular order. As a chain of lifted spokes e_{i,k} (from the base on sheet
/// k to branch point i) it is e_{a,k} - e_{a,k+1} - e_{b,k} + e_{b,k+1}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generator {
    pub a: usize,
    pub b: usize,
    pub sheet: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Vertex {
    Base(usize),
    Branch(usize),
}

/// Edge = lifted spoke (branch, sheet).
type Edge = (usize, usize);

impl Generator {
    /// (vertex, incoming edge, outgoing edge) in traversal order.
    fn visits(&self, n: usize) -> [(Vertex, Edge, Edge); 4] {
        let (a, b, k) = (self.a, self.b, self.sheet);
        let k1 = (k + 1) % n;
        [
            (Vertex::Branch(a), (a, k), (a, k1)),
            (Vertex::Base(k1), (a, k1), (b, k1)),
            (Vertex::Branch(b), (b, k1), (b, k)),
            (Vertex::Base(k), (b, k), (a, k)),
        ]
    }
}

/// Intersection number of two generators, counted at shared vertices by
/// whether the chords of the two paths cross in the cyclic order of edges
/// around the vertex (the first path displaced slightly).
fn generator_intersection(angles: &[f64], n: usize, g1: &Generator, g2: &Generator) -> i64 {
    // Position of an edge around a vertex: the spoke angle at a base vertex,
    // the sheet index at a branch vertex. The displaced copy of the first
    // path sits just after its edges at the tail (base) and just before them
    // at the head (branch).
    let pos = |v: Vertex, e: Edge, disp: i32| -> (f64, i32) {
        match v {
            Vertex::Base(_) => (angles[e.0].rem_euclid(2.0 * PI), disp),
            Vertex::Branch(_) => (e.1 as f64, -disp),
        }
    };
    let lt = |x: (f64, i32), y: (f64, i32)| x.0 < y.0 || (x.0 == y.0 && x.1 < y.1);
    let in_arc = |x, a, b| if lt(a, b) { lt(a, x) && lt(x, b) } else { lt(a, x) || lt(x, b) };
    let mut total = 0;
    for (v1, i1, o1) in g1.visits(n) {
        for (v2, i2, o2) in g2.visits(n) {
            if v1 != v2 {
                continue;
            }
            let (a, b) = (pos(v1, i1, 1), pos(v1, o1, 1));
            let (c, d) = (pos(v2, i2, 0), pos(v2, o2, 0));
            let (ci, di) = (in_arc(c, a, b), in_arc(d, a, b));
            if ci && !di {
                total += 1;
            } else if di && !ci {
                total -= 1;
            }
        }
    }
    total
}

/// Integer combination of generators.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub coeffs: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymplecticBasis {
    pub loops: LoopSystem,
    pub generators: Vec<Generator>,
    /// Intersection matrix of the generators.
    pub generator_pairing: Vec<Vec<i64>>,
    pub a_cycles: Vec<Cycle>,
    pub b_cycles: Vec<Cycle>,
}

impl SymplecticBasis {
    pub fn genus(&self) -> usize {
        self.a_cycles.len()
    }

    pub fn intersection(&self, c1: &Cycle, c2: &Cycle) -> i64 {
        let k = &self.generator_pairing;
        let mut total = 0;
        for (p, &x) in c1.coeffs.iter().enumerate() {
            if x != 0 {
                for (q, &y) in c2.coeffs.iter().enumerate() {
                    total += x * y * k[p][q];
                }
            }
        }
        total
    }

    /// Intersection matrix of (A_1..A_g, B_1..B_g).
    pub fn intersection_matrix(&self) -> Vec<Vec<i64>> {
        let all: Vec<&Cycle> = self.a_cycles.iter().chain(&self.b_cycles).collect();
        all.iter().map(|c1| all.iter().map(|c2| self.intersection(c1, c2)).collect()).collect()
    }

    /// The cycle as a formal sum of closed paths on the curve.
    pub fn realize(&self, curve: &ZnCurve, c: &Cycle) -> Vec<(i64, PathSpec)> {
        c.coeffs
            .iter()
            .zip(&self.generators)
            .filter(|(&x, _)| x != 0)
            .map(|(&x, g)| (x, self.loops.keyhole_pair(curve, g.a, g.b, g.sheet)))
            .collect()
    }
}

impl SymplecticBasis {
    /// The same marking on a slightly deformed curve: base point and cycles
    /// are kept, the sheet-0 root is continued, and the combinatorics must
    /// be unchanged.
    pub fn transport(&self, curve: &ZnCurve) -> Result<SymplecticBasis> {
        let mut loops = LoopSystem::with_base(curve, self.loops.base())?;
        loops.frame = self.loops.frame.transported(curve)?;
        if loops.order != self.loops.order {
            return Err(Error::Homology("deformation changed the angular order of branch points".into()));
        }
        let (_, k) = generators(curve, &loops);
        if k != self.generator_pairing {
            return Err(Error::Homology("deformation changed the intersection pairing".into()));
        }
        Ok(SymplecticBasis { loops, ..self.clone() })
    }
}

/// Builds generators for all consecutive pairs and sheets 0..N-2 and
/// returns them with their intersection matrix.
pub fn generators(curve: &ZnCurve, loops: &LoopSystem) -> (Vec<Generator>, Vec<Vec<i64>>) {
    let n = curve.sheets();
    let mut gens = Vec::new();
    for p in 0..loops.order.len() - 1 {
        for k in 0..n - 1 {
            gens.push(Generator { a: loops.order[p], b: loops.order[p + 1], sheet: k });
        }
    }
    let k = gens
        .iter()
        .map(|g1| gens.iter().map(|g2| generator_intersection(&loops.angles, n, g1, g2)).collect())
        .collect();
    (gens, k)
}

/// Reduces an antisymmetric integer matrix K by integer congruence
/// (K → T K Tᵀ) to a direct sum of [[0, 1], [-1, 0]] blocks and zeros.
/// Returns T and the (A, B) row pairs.
pub fn symplectic_reduction(k: &[Vec<i64>]) -> Result<(Vec<Vec<i64>>, Vec<(usize, usize)>)> {
    let m = k.len();
    let mut k: Vec<Vec<i64>> = k.to_vec();
    let mut t: Vec<Vec<i64>> = (0..m).map(|i| (0..m).map(|j| (i == j) as i64).collect()).collect();
    let mut open: Vec<usize> = (0..m).collect();
    let mut pairs = Vec::new();
    // row_dst += c row_src, and the same on columns.
    let add = |k: &mut Vec<Vec<i64>>, t: &mut Vec<Vec<i64>>, dst: usize, src: usize, c: i64| {
        for x in 0..m {
            t[dst][x] += c * t[src][x];
            k[dst][x] += c * k[src][x];
        }
        for x in 0..m {
            k[x][dst] += c * k[x][src];
        }
    };
    loop {
        let Some(i) = open.iter().copied().find(|&i| open.iter().any(|&j| k[i][j] != 0)) else {
            break;
        };
        loop {
            let j = *open
                .iter()
                .filter(|&&j| j != i && k[i][j] != 0)
                .min_by_key(|&&j| k[i][j].abs())
                .expect("pivot row has a non-zero entry");
            let mut done = true;
            for &l in &open {
                if l == i || l == j || k[i][l] == 0 {
                    continue;
                }
                let q = k[i][l].div_euclid(k[i][j]);
                add(&mut k, &mut t, l, j, -q);
                if k[i][l] != 0 {
                    done = false;
                }
            }
            if !done {
                continue;
            }
            let d = k[i][j];
            if d.abs() != 1 {
                let bad = open.iter().copied().find(|&l| open.iter().any(|&c| k[l][c].rem_euclid(d) != 0));
                match bad {
                    Some(l) => {
                        add(&mut k, &mut t, i, l, 1);
                        continue;
                    }
                    None => return Err(Error::Homology(format!("pairing is not unimodular (divisor {d})"))),
                }
            }
            if d == -1 {
                for x in 0..m {
                    t[j][x] = -t[j][x];
                    k[j][x] = -k[j][x];
                }
                for x in 0..m {
                    k[x][j] = -k[x][j];
                }
            }
            for &l in &open {
                if l != i && l != j && k[l][j] != 0 {
                    let c = -k[l][j];
                    add(&mut k, &mut t, l, i, c);
                }
            }
            open.retain(|&x| x != i && x != j);
            pairs.push((i, j));
            break;
        }
    }
    Ok((t, pairs))
}

/// Exact determinant by fraction-free (Bareiss) elimination.
pub fn integer_determinant(a: &[Vec<i64>]) -> i128 {
    let n = a.len();
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let mut sign = 1;
    let mut prev = 1i128;
    for k in 0..n {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * m[n - 1][n - 1]
    }
}

pub fn build_basis(curve: &ZnCurve, loops: &LoopSystem) -> Result<SymplecticBasis> {
    let (gens, k) = generators(curve, loops);
    let (t, pairs) = symplectic_reduction(&k)?;
    let g = curve.genus();
    if pairs.len() != g {
        return Err(Error::Homology(format!("found {} symplectic pairs, expected genus {g}", pairs.len())));
    }
    let basis = SymplecticBasis {
        loops: loops.clone(),
        generators: gens,
        generator_pairing: k,
        a_cycles: pairs.iter().map(|&(a, _)| Cycle { coeffs: t[a].clone() }).collect(),
        b_cycles: pairs.iter().map(|&(_, b)| Cycle { coeffs: t[b].clone() }).collect(),
    };
    let j = basis.intersection_matrix();
    for (r, row) in j.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            let want = if c == r + g { 1 } else if r == c + g { -1 } else { 0 };
            if x != want {
                return Err(Error::Homology(format!("intersection matrix entry ({r},{c}) is {x}")));
            }
        }
    }
    Ok(basis)
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn curve(n: usize, lams: &[(f64, f64)]) -> ZnCurve {
        ZnCurve::new(n, lams.iter().map(|&(a, b)| C64::new(a, b)).collect()).unwrap()
    }

    fn c32() -> ZnCurve {
        curve(3, &[(1.0, 0.2), (-0.7, 1.1), (0.3, -1.4), (-1.2, -0.5), (1.5, 1.3), (0.1, 0.9)])
    }

    fn rank(k: &[Vec<i64>]) -> usize {
        let mut m: Vec<Vec<Ratio<i64>>> = k.iter().map(|r| r.iter().map(|&x| Ratio::from_integer(x)).collect()).collect();
        let (rows, cols) = (m.len(), m[0].len());
        let mut r = 0;
        for c in 0..cols {
            if let Some(p) = (r..rows).find(|&i| m[i][c] != Ratio::from_integer(0)) {
                m.swap(r, p);
                for i in 0..rows {
                    if i != r {
                        let f = m[i][c] / m[r][c];
                        for j in 0..cols {
                            let v = m[r][j];
                            m[i][j] -= f * v;
                        }
                    }
                }
                r += 1;
            }
        }
        r
    }

    #[test]
    fn monodromy_is_the_same_shift_everywhere() {
        let c = c32();
        let loops = LoopSystem::new(&c).unwrap();
        let mono = monodromy(&c, &loops).unwrap();
        for p in &mono.perms {
            assert_eq!(p, &vec![1, 2, 0]);
        }
        let c2 = curve(2, &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.2), (0.3, -1.0)]);
        let loops2 = LoopSystem::new(&c2).unwrap();
        assert!(monodromy(&c2, &loops2).unwrap().perms.iter().all(|p| p == &vec![1, 0]));
    }

    #[test]
    fn pairing_is_antisymmetric_with_rank_2g() {
        let c = c32();
        let loops = LoopSystem::new(&c).unwrap();
        let (gens, k) = generators(&c, &loops);
        assert_eq!(gens.len(), 10);
        for i in 0..k.len() {
            for j in 0..k.len() {
                assert_eq!(k[i][j], -k[j][i]);
            }
        }
        assert_eq!(rank(&k), 2 * c.genus());
    }

    #[test]
    fn genus_one_basis() {
        let c = curve(2, &[(1.0, 0.0), (0.0, 1.0), (-1.0, 0.2), (0.3, -1.0)]);
        let b = build_basis(&c, &LoopSystem::new(&c).unwrap()).unwrap();
        assert_eq!(b.genus(), 1);
        assert_eq!(b.intersection(&b.a_cycles[0], &b.b_cycles[0]), 1);
        assert_eq!(b.intersection(&b.b_cycles[0], &b.a_cycles[0]), -1);
        assert_eq!(b.intersection(&b.a_cycles[0], &b.a_cycles[0]), 0);
    }

    #[test]
    fn basis_for_n3_m2() {
        let c = c32();
        let b = build_basis(&c, &LoopSystem::new(&c).unwrap()).unwrap();
        assert_eq!(b.genus(), 4);
        let j = b.intersection_matrix();
        assert_eq!(j.len(), 8);
        let (_, k) = generators(&c, &b.loops);
        let (t, _) = symplectic_reduction(&k).unwrap();
        assert_eq!(integer_determinant(&t).abs(), 1);
    }

    #[test]
    fn reduction_rejects_non_unimodular() {
        let k = vec![vec![0, 2], vec![-2, 0]];
        assert!(symplectic_reduction(&k).is_err());
        let k = vec![vec![0, 2, 1], vec![-2, 0, 0], vec![-1, 0, 0]];
        let (_, pairs) = symplectic_reduction(&k).unwrap();
        assert_eq!(pairs.len(), 1);
    }

    #[test]
    fn bareiss_determinant() {
        assert_eq!(integer_determinant(&[vec![2, 1], vec![7, 4]]), 1);
        assert_eq!(integer_determinant(&[vec![0, 1, 0], vec![1, 0, 0], vec![0, 0, 3]]), -3);
    }
}
