//! Adaptive Gauss–Kronrod (7/15) quadrature for vector-valued complex integrands.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
// Gauss weights for XGK[1], XGK[3], XGK[5], XGK[7].
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub min_panels: usize,
    pub max_panels: usize,
}

impl Default for QuadConfig {
    fn default() -> Self {
        QuadConfig { abs_tol: 1e-15, rel_tol: 1e-13, min_panels: 4, max_panels: 20_000 }
    }
}

impl QuadConfig {
    /// Same configuration with both tolerances scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> QuadConfig {
        QuadConfig { abs_tol: self.abs_tol * factor, rel_tol: self.rel_tol * factor, ..*self }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuadResult {
    pub value: Vec<C64>,
    /// Sum over panels of the largest component-wise |Kronrod - Gauss|.
    pub error: f64,
    /// Sum over panels of the Kronrod estimate of ∫|f| (largest component).
    pub scale: f64,
    pub panels: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: Vec<C64>,
    error: f64,
    scale: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error).then(other.a.total_cmp(&self.a))
    }
}

fn panel<F>(f: &mut F, a: f64, b: f64, dim: usize, buf: &mut [C64]) -> Panel
where
    F: FnMut(f64, &mut [C64]),
{
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut k = vec![C64::new(0.0, 0.0); dim];
    let mut g = vec![C64::new(0.0, 0.0); dim];
    let mut absk = vec![0.0; dim];
    let mut add = |x: f64, wk: f64, wg: f64, f: &mut F, buf: &mut [C64]| {
        f(x, buf);
        for d in 0..dim {
            k[d] += buf[d] * wk;
            g[d] += buf[d] * wg;
            absk[d] += buf[d].norm() * wk;
        }
    };
    for i in 0..7 {
        let wg = if i % 2 == 1 { WG[i / 2] } else { 0.0 };
        add(c - h * XGK[i], WGK[i], wg, f, buf);
        add(c + h * XGK[i], WGK[i], wg, f, buf);
    }
    add(c, WGK[7], WG[3], f, buf);
    let mut error = 0.0f64;
    let mut scale = 0.0f64;
    for d in 0..dim {
        k[d] *= h;
        error = error.max(((k[d] - g[d] * h).norm()).abs());
        scale = scale.max(absk[d] * h.abs());
    }
    Panel { a, b, value: k, error, scale }
}

/// Integrates a `dim`-component complex function over [a, b].
///
/// `f(t, out)` writes the integrand at t into `out`. Panels with the largest
/// error estimate are bisected until the total estimate falls below
/// max(abs_tol, rel_tol · ∫|f|).
pub fn integrate<F>(mut f: F, a: f64, b: f64, dim: usize, cfg: &QuadConfig) -> Result<QuadResult>
where
    F: FnMut(f64, &mut [C64]),
{
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let n0 = cfg.min_panels.max(1);
    let mut heap = BinaryHeap::new();
    for i in 0..n0 {
        let x0 = a + (b - a) * i as f64 / n0 as f64;
        let x1 = a + (b - a) * (i + 1) as f64 / n0 as f64;
        heap.push(panel(&mut f, x0, x1, dim, &mut buf));
    }
    loop {
        let error: f64 = heap.iter().map(|p| p.error).sum();
        let scale: f64 = heap.iter().map(|p| p.scale).sum();
        if error <= cfg.abs_tol.max(cfg.rel_tol * scale) {
            let mut panels: Vec<Panel> = heap.into_vec();
            panels.sort_by(|p, q| p.a.total_cmp(&q.a));
            let mut value = vec![C64::new(0.0, 0.0); dim];
            for p in &panels {
                for d in 0..dim {
                    value[d] += p.value[d];
                }
            }
            return Ok(QuadResult { value, error, scale, panels: panels.len() });
        }
        if heap.len() >= cfg.max_panels {
            return Err(Error::Quadrature { estimate: error, panels: heap.len() });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a.min(worst.b) || mid >= worst.a.max(worst.b) {
            return Err(Error::Quadrature { estimate: error, panels: heap.len() + 1 });
        }
        heap.push(panel(&mut f, worst.a, mid, dim, &mut buf));
        heap.push(panel(&mut f, mid, worst.b, dim, &mut buf));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_are_exact() {
        // Kronrod 15 integrates degree 22 exactly; single panel suffices.
        let cfg = QuadConfig { min_panels: 1, ..Default::default() };
        let r = integrate(|t, o| o[0] = C64::new(t.powi(10), t.powi(3)), 0.0, 1.0, 1, &cfg).unwrap();
        assert!((r.value[0] - C64::new(1.0 / 11.0, 0.25)).norm() < 1e-15);
        assert_eq!(r.panels, 1);
    }

    #[test]
    fn adapts_to_near_singularity() {
        // ∫_0^1 dt / (t^2 + 1e-4) = 100 atan(100)
        let cfg = QuadConfig::default();
        let r = integrate(|t, o| o[0] = C64::new(1.0 / (t * t + 1e-4), 0.0), 0.0, 1.0, 1, &cfg).unwrap();
        let exact = 100.0 * 100f64.atan();
        assert!((r.value[0].re - exact).abs() < 1e-11 * exact);
        assert!(r.panels > 4);
    }

    #[test]
    fn vector_valued_and_reversed() {
        let cfg = QuadConfig::default();
        let f = |t: f64, o: &mut [C64]| {
            o[0] = C64::new(0.0, t).exp();
            o[1] = C64::new(t.sqrt(), 0.0);
        };
        let fwd = integrate(f, 0.0, 2.0, 2, &cfg).unwrap();
        let back = integrate(f, 2.0, 0.0, 2, &cfg).unwrap();
        let e0 = (C64::new(0.0, 2.0).exp() - 1.0) / C64::new(0.0, 1.0);
        assert!((fwd.value[0] - e0).norm() < 1e-13);
        assert!((fwd.value[1].re - 2.0 / 3.0 * 2f64.powf(1.5)).abs() < 1e-12);
        assert!((fwd.value[0] + back.value[0]).norm() < 1e-13);
    }

    #[test]
    fn reports_failure() {
        let cfg = QuadConfig { max_panels: 8, ..Default::default() };
        let r = integrate(|t, o| o[0] = C64::new(1.0 / t.abs().sqrt().max(1e-300), 0.0), -1.0, 1.0, 1, &cfg);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }
}
