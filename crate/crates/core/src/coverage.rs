//! `P{V ∈ R_V}` as the sum of eight iterated polar integrals.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::band_forms::BandForm;
use crate::error::{MacsError, Result};
use crate::geometry::{sub_angles, zeta_angles, CriticalConstants, RegionPiece, Scenario, WedgeGeometry};
use crate::numeric::{integrate, QuadratureOptions};
use crate::pivotal_density::DensityParams;

/// Fans narrower than this are rejected as degenerate.
pub const MIN_FAN_ANGLE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageOptions {
    /// Over δ, per piece.
    pub outer: QuadratureOptions,
    /// Over r, per ray.
    pub inner: QuadratureOptions,
}

impl Default for CoverageOptions {
    fn default() -> Self {
        Self {
            outer: QuadratureOptions {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
                max_intervals: 200,
            },
            inner: QuadratureOptions {
                abs_tol: 1e-11,
                rel_tol: 1e-11,
                max_intervals: 200,
            },
        }
    }
}

impl CoverageOptions {
    /// Outer tolerance `tol`, inner one a decade tighter.
    pub fn with_tolerance(tol: f64) -> Self {
        let mut o = Self::default();
        o.outer.abs_tol = tol;
        o.outer.rel_tol = tol;
        o.inner.abs_tol = 0.1 * tol;
        o.inner.rel_tol = 0.1 * tol;
        o
    }
}

/// Everything about a coverage evaluation that does not depend on `(c₁, c₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoverageModel {
    pub scenario: Scenario,
    pub form: BandForm,
    pub params: DensityParams,
    pub xi: f64,
    pub theta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub options: CoverageOptions,
    /// Radius where the radial integral switches to `r = r_split/w`.
    r_split: f64,
}

impl CoverageModel {
    pub fn new(scn: &Scenario, form: BandForm) -> Result<Self> {
        Self::with_options(scn, form, CoverageOptions::default())
    }

    pub fn with_options(scn: &Scenario, form: BandForm, options: CoverageOptions) -> Result<Self> {
        let (xi, theta) = form.xi_theta(scn.nu())?;
        let params = DensityParams::new(scn, form)?;
        let (phi1, phi2) = sub_angles(scn, xi)?;
        let phi = phi1 + phi2;
        if phi <= MIN_FAN_ANGLE {
            return Err(MacsError::DegenerateGeometry { phi });
        }
        Ok(Self {
            scenario: *scn,
            form,
            params,
            xi,
            theta,
            phi1,
            phi2,
            options,
            r_split: 2.0 + 1.5 * params.q2.abs(),
        })
    }

    pub fn phi(&self) -> f64 {
        self.phi1 + self.phi2
    }

    pub fn geometry(&self, cc: &CriticalConstants) -> Result<WedgeGeometry> {
        zeta_angles(cc, self.phi(), self.phi1, self.phi2)
    }

    pub fn coverage(&self, cc: &CriticalConstants) -> Result<f64> {
        Ok(self.piece_masses(cc)?.iter().sum())
    }

    /// Probability mass of each piece, in [`WedgeGeometry::pieces`] order.
    pub fn piece_masses(&self, cc: &CriticalConstants) -> Result<[f64; 8]> {
        let geo = self.geometry(cc)?;
        let mut out = [0.0; 8];
        for (slot, piece) in out.iter_mut().zip(geo.pieces(cc)) {
            *slot = self.piece_mass(&piece)?;
        }
        Ok(out)
    }

    fn piece_mass(&self, piece: &RegionPiece) -> Result<f64> {
        if piece.width() <= 0.0 {
            return Ok(0.0);
        }
        let est = integrate(
            |delta| self.radial_mass(delta, piece.radius_at(delta)),
            piece.start,
            piece.end,
            &self.options.outer,
        )?;
        Ok(est.value)
    }

    /// `∫₀^ρ f_{R,δ}(r, δ) dr`; `ρ` may be infinite.
    pub fn radial_mass(&self, delta: f64, rho: f64) -> Result<f64> {
        let (s, c) = delta.sin_cos();
        let p = &self.params;
        let ray = |r: f64| -> Result<f64> { Ok(r * p.density(r * c, r * s)?) };
        let r0 = self.r_split;
        let near = integrate(ray, 0.0, rho.min(r0), &self.options.inner)?.value;
        if rho <= r0 {
            return Ok(near);
        }
        let w_lo = if rho.is_finite() { r0 / rho } else { 0.0 };
        let far = integrate(
            |w| {
                let r = r0 / w;
                Ok(ray(r)? * r / w)
            },
            w_lo,
            1.0,
            &self.options.inner,
        )?
        .value;
        Ok(near + far)
    }

    /// Mass of the whole plane; 1 up to quadrature error.
    pub fn total_mass(&self) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..8 {
            let lo = TAU * k as f64 / 8.0;
            let hi = TAU * (k + 1) as f64 / 8.0;
            total += integrate(|d| self.radial_mass(d, f64::INFINITY), lo, hi, &self.options.outer)?.value;
        }
        Ok(total)
    }

    /// Central differences of coverage in `c₁` and `c₂` with step `10⁻⁴·c`.
    pub fn gradient(&self, cc: &CriticalConstants) -> Result<(f64, f64)> {
        self.gradient_with_step(cc, 1e-4)
    }

    pub fn gradient_with_step(&self, cc: &CriticalConstants, rel_step: f64) -> Result<(f64, f64)> {
        let h1 = rel_step * cc.c1;
        let h2 = rel_step * cc.c2;
        let cov = |c1, c2| self.coverage(&CriticalConstants::new(c1, c2)?);
        let d1 = (cov(cc.c1 + h1, cc.c2)? - cov(cc.c1 - h1, cc.c2)?) / (2.0 * h1);
        let d2 = (cov(cc.c1, cc.c2 + h2)? - cov(cc.c1, cc.c2 - h2)?) / (2.0 * h2);
        Ok((d1, d2))
    }
}

pub fn coverage_probability(cc: &CriticalConstants, scn: &Scenario, form: BandForm) -> Result<f64> {
    CoverageModel::new(scn, form)?.coverage(cc)
}

pub fn coverage_gradient_check(cc: &CriticalConstants, scn: &Scenario, form: BandForm) -> Result<(f64, f64)> {
    CoverageModel::new(scn, form)?.gradient(cc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band_forms::BandName;
    use std::f64::consts::PI;

    fn model(name: BandName, alpha: f64, gamma: f64, n: u32, s: f64) -> CoverageModel {
        let scn = Scenario::symmetric(alpha, gamma, n, s).unwrap();
        CoverageModel::new(&scn, BandForm::symmetric(name)).unwrap()
    }

    /// Radius of `R_V` along `delta` from the constraint definition alone.
    fn brute_radius(m: &CoverageModel, cc: &CriticalConstants, delta: f64) -> f64 {
        let fit = |centre: f64| {
            let d = (delta - centre + PI).rem_euclid(TAU) - PI;
            let off = (d - m.phi1).max(-m.phi2 - d).max(0.0);
            off.cos()
        };
        let mut r = f64::INFINITY;
        for (centre, c) in [(0.0, cc.c1), (PI, cc.c2)] {
            let cos = fit(centre);
            if cos > 0.0 {
                r = r.min(c / cos);
            }
        }
        r
    }

    fn direct_coverage(m: &CoverageModel, cc: &CriticalConstants) -> f64 {
        let opts = QuadratureOptions {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_intervals: 2000,
        };
        let mut cuts = vec![-m.phi2, m.phi1, PI - m.phi2, PI + m.phi1, TAU - m.phi2];
        cuts.sort_by(f64::total_cmp);
        cuts.windows(2)
            .map(|w| {
                integrate(|d| m.radial_mass(d, brute_radius(m, cc, d)), w[0], w[1], &opts)
                    .unwrap()
                    .value
            })
            .sum()
    }

    #[test]
    fn eight_pieces_match_direct_integration() {
        for &(name, alpha, gamma, n, s, c1, c2) in &[
            (BandName::SB, 0.1, 0.75, 10, 0.1, 2.0, 2.4),
            (BandName::TBE, 0.01, 0.95, 10, 10.0, 4.5, 3.1),
            (BandName::UV, 0.1, 0.95, 100, 1.0, 2.2, 2.9),
            (BandName::V, 0.01, 0.75, 10, 1.0, 3.0, 3.0),
        ] {
            let m = model(name, alpha, gamma, n, s);
            let cc = CriticalConstants::new(c1, c2).unwrap();
            let got = m.coverage(&cc).unwrap();
            let want = direct_coverage(&m, &cc);
            assert!((got - want).abs() < 1e-8, "{name:?}: {got} vs {want}");
        }
    }

    #[test]
    fn trimmed_arc_cases_match_direct_integration() {
        let scn = Scenario::new(0.05, 0.05, 9, 0.0, 1.0, -2.0, 1.5).unwrap();
        let m = CoverageModel::new(&scn, BandForm::asymmetric(BandName::UV)).unwrap();
        for (c1, c2) in [(4.0, 1.0), (1.0, 4.0), (3.23, 2.016)] {
            let cc = CriticalConstants::new(c1, c2).unwrap();
            assert!(m.phi() > PI / 2.0);
            let got = m.coverage(&cc).unwrap();
            let want = direct_coverage(&m, &cc);
            assert!((got - want).abs() < 1e-8, "({c1}, {c2}): {got} vs {want}");
        }
    }

    #[test]
    fn limits() {
        let m = model(BandName::TBU, 0.05, 0.9, 10, 1.0);
        let big = m.coverage(&CriticalConstants::symmetric(1e4).unwrap()).unwrap();
        assert!((big - 1.0).abs() < 1e-8, "{big}");
        let small = m.coverage(&CriticalConstants::symmetric(1e-4).unwrap()).unwrap();
        assert!(small < 1e-6);
        assert!((m.total_mass().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_in_constants_at_median() {
        let m = model(BandName::SB, 0.1, 0.5, 10, 1.0);
        let a = m.coverage(&CriticalConstants::new(2.1, 2.7).unwrap()).unwrap();
        let b = m.coverage(&CriticalConstants::new(2.7, 2.1).unwrap()).unwrap();
        assert!((a - b).abs() < 1e-9);
        let (d1, d2) = m.gradient(&CriticalConstants::symmetric(2.4).unwrap()).unwrap();
        assert!((d1 - d2).abs() < 1e-6 && d1 > 0.0);
    }

    #[test]
    fn gradient_is_positive_and_second_order() {
        let m = model(BandName::UV, 0.01, 0.95, 10, 1.0);
        let cc = CriticalConstants::new(2.5, 3.5).unwrap();
        let (a1, a2) = m.gradient_with_step(&cc, 1e-2).unwrap();
        let (b1, b2) = m.gradient_with_step(&cc, 5e-3).unwrap();
        let (c1, c2) = m.gradient_with_step(&cc, 2.5e-3).unwrap();
        assert!(a1 > 0.0 && a2 > 0.0);
        // O(h²) error: successive differences shrink by about 4.
        let r1 = (a1 - b1) / (b1 - c1);
        let r2 = (a2 - b2) / (b2 - c2);
        assert!((r1 - 4.0).abs() < 0.5 && (r2 - 4.0).abs() < 0.5, "{r1} {r2}");
    }

    #[test]
    fn degenerate_fan_is_rejected() {
        let scn = Scenario::new(0.1, 0.9, 10, 0.0, 1.0, 0.2, 0.2 + 1e-10).unwrap();
        assert!(matches!(
            CoverageModel::new(&scn, BandForm::symmetric(BandName::SB)),
            Err(MacsError::DegenerateGeometry { .. })
        ));
    }
}
