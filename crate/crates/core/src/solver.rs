//! Critical constants: symmetric root finding and the asymmetric
//! minimum-area search along the coverage contour.

use std::cell::Cell;

use serde::Serialize;

use crate::band_forms::BandForm;
use crate::coverage::{CoverageModel, CoverageOptions};
use crate::error::{MacsError, Result};
use crate::geometry::{region_area, scale_area, AreaResult, CriticalConstants, Scenario, WedgeGeometry};
use crate::numeric::{brent_minimize, brent_root};

/// Initial bracket for the symmetric constant.
const SYMMETRIC_BRACKET: (f64, f64) = (0.1, 50.0);
/// The asymmetric scan covers this multiple of the symmetric constant.
const SCAN_RANGE: (f64, f64) = (0.6, 1.8);
const SCAN_POINTS: usize = 8;
/// Larger constants are treated as "no solution" for the other side.
const C_CEILING: f64 = 1e3;
/// Area differences below this (relative) count as a plateau.
const PLATEAU: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    pub coverage: CoverageOptions,
    /// Absolute tolerance on the constants from root finding.
    pub c_tol: f64,
    /// Absolute tolerance on `c₁` in the area minimization.
    pub min_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            coverage: CoverageOptions::default(),
            c_tol: 1e-9,
            min_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Solution {
    pub form: BandForm,
    pub scenario: Scenario,
    pub constants: CriticalConstants,
    pub coverage: f64,
    pub area: AreaResult,
    pub geometry: WedgeGeometry,
    pub coverage_evaluations: usize,
}

pub struct Solver {
    model: CoverageModel,
    options: SolverOptions,
    evaluations: Cell<usize>,
}

impl Solver {
    pub fn new(scn: &Scenario, form: BandForm) -> Result<Self> {
        Self::with_options(scn, form, SolverOptions::default())
    }

    pub fn with_options(scn: &Scenario, form: BandForm, options: SolverOptions) -> Result<Self> {
        Ok(Self {
            model: CoverageModel::with_options(scn, form, options.coverage)?,
            options,
            evaluations: Cell::new(0),
        })
    }

    pub fn model(&self) -> &CoverageModel {
        &self.model
    }

    fn target(&self) -> f64 {
        self.model.scenario.confidence()
    }

    fn coverage(&self, c1: f64, c2: f64) -> Result<f64> {
        self.evaluations.set(self.evaluations.get() + 1);
        self.model.coverage(&CriticalConstants::new(c1, c2)?)
    }

    pub fn area_rv(&self, cc: &CriticalConstants) -> Result<f64> {
        Ok(region_area(cc, &self.model.geometry(cc)?))
    }

    /// Solves the form's own problem: symmetric or asymmetric.
    pub fn solve(&self) -> Result<Solution> {
        if self.model.form.symmetric {
            self.solve_symmetric()
        } else {
            self.solve_asymmetric()
        }
    }

    pub fn solve_symmetric(&self) -> Result<Solution> {
        let c = self.symmetric_constant()?;
        self.finish(CriticalConstants::symmetric(c)?)
    }

    fn symmetric_constant(&self) -> Result<f64> {
        let target = self.target();
        let g = |c: f64| Ok(self.coverage(c, c)? - target);
        let (mut lo, hi) = SYMMETRIC_BRACKET;
        let g_hi = g(hi)?;
        if g_hi < 0.0 {
            return Err(MacsError::Unsolvable(format!(
                "coverage at c = {hi} is {:.9}, below the target {target}",
                g_hi + target
            )));
        }
        let mut g_lo = g(lo)?;
        while g_lo > 0.0 {
            lo /= 10.0;
            if lo < 1e-12 {
                return Err(MacsError::Unsolvable(format!("target {target} is met by every c > 0")));
            }
            g_lo = g(lo)?;
        }
        Ok(brent_root(g, lo, hi, g_lo, g_hi, self.options.c_tol, 0.0)?.x)
    }

    /// `c₂` with `coverage(c₁, c₂) = 1 − α`, or `None` when even
    /// [`C_CEILING`] is not enough. `guess` seeds the bracket search.
    pub fn c2_for_c1(&self, c1: f64, guess: f64) -> Result<Option<f64>> {
        let target = self.target();
        let g = |c2: f64| Ok(self.coverage(c1, c2)? - target);
        let mut a = guess;
        let mut ga = g(a)?;
        let mut step = 0.02 * guess;
        let (b, gb) = loop {
            let b = if ga < 0.0 { a + step } else { (a - step).max(0.5 * a) };
            if b > C_CEILING {
                return Ok(None);
            }
            let gb = g(b)?;
            if gb.signum() != ga.signum() || gb == 0.0 {
                break (b, gb);
            }
            a = b;
            ga = gb;
            step *= 2.0;
        };
        Ok(Some(brent_root(g, a, b, ga, gb, self.options.c_tol, 0.0)?.x))
    }

    /// Minimizes `Area(R_V)` over the coverage contour parameterized by `c₁`.
    pub fn solve_asymmetric(&self) -> Result<Solution> {
        let c_sym = self.symmetric_constant()?;
        let sym = CriticalConstants::symmetric(c_sym)?;
        let sym_area = self.area_rv(&sym)?;

        let mut tried: Vec<(f64, f64, f64)> = vec![(c_sym, c_sym, sym_area)];
        let mut last_c2 = c_sym;
        let eval = |c1: f64, tried: &mut Vec<(f64, f64, f64)>, guess: f64| -> Result<(f64, f64)> {
            match self.c2_for_c1(c1, guess)? {
                Some(c2) => {
                    let area = self.area_rv(&CriticalConstants::new(c1, c2)?)?;
                    tried.push((c1, c2, area));
                    Ok((area, c2))
                }
                None => Ok((f64::INFINITY, guess)),
            }
        };

        // Coarse scan, from the top so that c₂ grows as c₁ shrinks.
        let (lo_m, hi_m) = SCAN_RANGE;
        let mut xs: Vec<f64> = (0..SCAN_POINTS)
            .map(|i| c_sym * (lo_m + (hi_m - lo_m) * i as f64 / (SCAN_POINTS - 1) as f64))
            .collect();
        let mut fs = vec![f64::INFINITY; SCAN_POINTS];
        for i in (0..SCAN_POINTS).rev() {
            let guess = if i == SCAN_POINTS - 1 { c_sym / hi_m } else { last_c2 };
            let (area, c2) = eval(xs[i], &mut tried, guess)?;
            fs[i] = area;
            if area.is_finite() {
                last_c2 = c2;
            } else {
                // Smaller c₁ only makes c₂ larger still.
                break;
            }
        }
        let argmin = |fs: &[f64]| (0..fs.len()).min_by(|&i, &j| fs[i].total_cmp(&fs[j])).unwrap();

        // Extend past either end while the minimum sits there.
        loop {
            let i = argmin(&fs);
            if i == 0 {
                let x = xs[0] * 0.8;
                let (area, c2) = eval(x, &mut tried, last_c2)?;
                xs.insert(0, x);
                fs.insert(0, area);
                if area.is_finite() {
                    last_c2 = c2;
                }
                if !(area < fs[1]) {
                    break;
                }
            } else if i == fs.len() - 1 {
                let x = xs[i] * 1.25;
                let guess = tried.last().map_or(c_sym, |t| t.1);
                let (area, _) = eval(x, &mut tried, guess)?;
                xs.push(x);
                fs.push(area);
                if !(area < fs[i]) {
                    break;
                }
            } else {
                break;
            }
        }

        let i = argmin(&fs);
        if !fs[i].is_finite() {
            return Err(MacsError::Unsolvable("no feasible point on the coverage contour".into()));
        }
        let (a, b) = (xs[i - 1], xs[i + 1]);
        let near_c2 = tried
            .iter()
            .find(|t| t.0 == xs[i])
            .map_or(c_sym, |t| t.1);
        let guess = Cell::new(near_c2);
        brent_minimize(
            |c1| {
                let (area, c2) = eval(c1, &mut tried, guess.get())?;
                if area.is_finite() {
                    guess.set(c2);
                }
                Ok(area)
            },
            a,
            b,
            xs[i],
            fs[i],
            self.options.min_tol,
        )?;

        let best = tried.iter().map(|t| t.2).fold(f64::INFINITY, f64::min);
        let &(c1, c2, _) = tried
            .iter()
            .filter(|t| t.2 <= best * (1.0 + PLATEAU))
            .min_by(|p, q| (p.0 - p.1).abs().total_cmp(&(q.0 - q.1).abs()))
            .unwrap();
        self.finish(CriticalConstants::new(c1, c2)?)
    }

    fn finish(&self, cc: CriticalConstants) -> Result<Solution> {
        let geometry = self.model.geometry(&cc)?;
        let coverage = self.model.coverage(&cc)?;
        let area = scale_area(region_area(&cc, &geometry), &self.model.scenario, self.model.xi);
        Ok(Solution {
            form: self.model.form,
            scenario: self.model.scenario,
            constants: cc,
            coverage,
            area,
            geometry,
            coverage_evaluations: self.evaluations.get(),
        })
    }
}

pub fn solve_symmetric(scn: &Scenario, form: BandForm) -> Result<Solution> {
    Solver::new(scn, BandForm { symmetric: true, ..form })?.solve_symmetric()
}

pub fn solve_asymmetric(scn: &Scenario, form: BandForm) -> Result<Solution> {
    Solver::new(scn, BandForm { symmetric: false, ..form })?.solve_asymmetric()
}

/// Solves according to `form.symmetric`.
pub fn solve(scn: &Scenario, form: BandForm) -> Result<Solution> {
    Solver::new(scn, form)?.solve()
}

pub fn constants_to_areas(cc: &CriticalConstants, scn: &Scenario, form: BandForm) -> Result<AreaResult> {
    let model = CoverageModel::new(scn, form)?;
    let geo = model.geometry(cc)?;
    Ok(scale_area(region_area(cc, &geo), scn, model.xi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band_forms::BandName;

    #[test]
    fn symmetric_hits_target() {
        let scn = Scenario::symmetric(0.1, 0.75, 10, 1.0).unwrap();
        let sol = solve_symmetric(&scn, BandForm::symmetric(BandName::TBE)).unwrap();
        assert!((sol.coverage - 0.9).abs() < 1e-8);
        assert_eq!(sol.constants.c1, sol.constants.c2);
    }

    #[test]
    fn asymmetric_no_worse_than_symmetric() {
        let scn = Scenario::symmetric(0.01, 0.95, 10, 1.0).unwrap();
        let s = solve_symmetric(&scn, BandForm::symmetric(BandName::UV)).unwrap();
        let a = solve_asymmetric(&scn, BandForm::asymmetric(BandName::UV)).unwrap();
        assert!((a.coverage - 0.99).abs() < 1e-8);
        assert!(a.area.area_ct <= s.area.area_ct + 1e-9);
        assert!(a.constants.c1 != a.constants.c2);
    }

    #[test]
    fn median_minimizer_is_symmetric() {
        let scn = Scenario::symmetric(0.1, 0.5, 10, 1.0).unwrap();
        let a = solve_asymmetric(&scn, BandForm::asymmetric(BandName::SB)).unwrap();
        assert!((a.constants.c1 - a.constants.c2).abs() < 1e-4, "{:?}", a.constants);
    }

    #[test]
    fn vanishing_confidence_gives_small_constant() {
        let scn = Scenario::symmetric(0.999, 0.75, 10, 1.0).unwrap();
        let sol = solve_symmetric(&scn, BandForm::symmetric(BandName::SB)).unwrap();
        assert!(sol.constants.c1 < 0.1);
    }

    #[test]
    fn type_one_area_is_unscaled() {
        let scn = Scenario::symmetric(0.1, 0.95, 10, 1.0).unwrap();
        let cc = CriticalConstants::new(2.0, 2.5).unwrap();
        let r = constants_to_areas(&cc, &scn, BandForm::symmetric(BandName::SB)).unwrap();
        assert_eq!(r.area_ct, r.area_rv);
        let r = constants_to_areas(&cc, &scn, BandForm::symmetric(BandName::UV)).unwrap();
        assert!(r.area_ct > r.area_rv);
    }
}
