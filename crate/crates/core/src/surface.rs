//! A curve together with one fixed marking and everything derived from it.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::abel::{self, AbelData, CurvePoint, LambdaCharacteristic};
use crate::curve::ZnCurve;
use crate::error::{Error, Result};
use crate::homology::{build_basis, LoopSystem, SymplecticBasis};
use crate::partition::Partition;
use crate::path::PathPiece;
use crate::periods::{compute_periods, PeriodData};
use crate::quadrature::QuadConfig;
use crate::theta::{Characteristic, Theta, ThetaResult};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub quad: QuadConfig,
    /// Truncation tolerance for theta sums, relative to the Gaussian envelope.
    pub theta_tol: f64,
    /// Allowed distance of e_Λ characteristics from the 1/(2N) grid.
    pub char_tol: f64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings { quad: QuadConfig::default(), theta_tol: 1e-15, char_tol: 1e-6 }
    }
}

#[derive(Clone, Debug)]
pub struct MarkedCurve {
    pub curve: ZnCurve,
    pub basis: SymplecticBasis,
    pub periods: PeriodData,
    pub theta: Theta,
    pub abel: AbelData,
    /// Non-singular odd half characteristic used for the prime form.
    pub odd: Characteristic,
    pub settings: Settings,
}

impl MarkedCurve {
    pub fn build(curve: ZnCurve, settings: Settings) -> Result<Self> {
        if curve.genus() == 0 {
            return Err(Error::Input("genus 0 curve has no Jacobian to mark".into()));
        }
        let loops = LoopSystem::new(&curve)?;
        let basis = build_basis(&curve, &loops)?;
        Self::with_basis(curve, basis, settings, None)
    }

    fn with_basis(curve: ZnCurve, basis: SymplecticBasis, settings: Settings, inherit: Option<&MarkedCurve>) -> Result<Self> {
        let periods = compute_periods(&curve, &basis, &settings.quad)?;
        let theta = Theta::new(&periods.tau_symmetric())?;
        let (abel, odd) = match inherit {
            None => {
                let abel = abel::abel_data(&curve, &basis, &periods, &theta, &settings.quad, settings.theta_tol)?;
                let (odd, _) = abel::find_odd_half_char(&theta, settings.theta_tol)?;
                (abel, odd)
            }
            Some(parent) => {
                let mut abel = parent.abel.clone();
                let r = abel.ref_branch;
                abel.branch_vectors = periods
                    .spokes
                    .iter()
                    .map(|j| periods.normalize(&j.iter().zip(&periods.spokes[r]).map(|(a, b)| a - b).collect::<Vec<_>>()))
                    .collect();
                abel.riemann = abel.riemann_char.vector(&periods.tau_symmetric());
                (abel, parent.odd.clone())
            }
        };
        Ok(MarkedCurve { curve, basis, periods, theta, abel, odd, settings })
    }

    /// The curve with λ_i moved by h, carrying the same marking, Riemann
    /// characteristic and odd characteristic.
    pub fn perturbed(&self, i: usize, h: C64) -> Result<MarkedCurve> {
        let curve = self.curve.perturbed(i, h)?;
        let basis = self.basis.transport(&curve)?;
        Self::with_basis(curve, basis, self.settings, Some(self))
    }

    pub fn genus(&self) -> usize {
        self.periods.genus()
    }

    pub fn point(&self, sheet: usize, z: C64) -> Result<CurvePoint> {
        self.point_along(sheet, vec![PathPiece::Segment { to: z }])
    }

    pub fn point_along(&self, sheet: usize, pieces: Vec<PathPiece>) -> Result<CurvePoint> {
        if sheet >= self.curve.sheets() {
            return Err(Error::Input(format!("sheet {sheet} out of range")));
        }
        abel::point_along(&self.curve, &self.basis, &self.periods, sheet, pieces, &self.settings.quad)
    }

    pub fn extend(&self, p: &CurvePoint, dz: C64) -> Result<CurvePoint> {
        abel::extend(&self.curve, &self.periods, p, dz, &self.settings.quad)
    }

    pub fn e_lambda(&self, lambda: &Partition) -> Result<LambdaCharacteristic> {
        abel::e_lambda(&self.curve, &self.periods, &self.abel, lambda, self.settings.char_tol)
    }

    pub fn theta_at(&self, z: &[C64], ch: &Characteristic) -> Result<ThetaResult> {
        self.theta.eval(z, ch, self.settings.theta_tol)
    }

    /// Normalized differentials v_j at a point, as coefficients of dz.
    pub fn differentials(&self, p: &CurvePoint) -> Vec<C64> {
        self.periods.normalize(&self.curve.eval_differentials(&p.tracked.sheet_point()))
    }
}
