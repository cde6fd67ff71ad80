//! Monte-Carlo oracle for coverage and region area.
//!
//! Each of `stream_count` substreams is a ChaCha8 stream selected by index
//! from the same seed, so results do not depend on thread scheduling.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::band_forms::BandForm;
use crate::error::{MacsError, Result};
use crate::geometry::{sub_angles, CriticalConstants, Scenario, WedgeGeometry};
use crate::pivotal_density::DensityParams;

/// Above this, `χ²_ν` is drawn from a gamma sampler instead of a sum of squares.
const SUM_OF_SQUARES_MAX_NU: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct McConfig {
    pub n_draws: u64,
    pub seed: u64,
    pub stream_count: u32,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_draws: 1_000_000,
            seed: 42,
            stream_count: 16,
        }
    }
}

impl McConfig {
    pub fn new(n_draws: u64, seed: u64) -> Result<Self> {
        let cfg = Self { n_draws, seed, ..Self::default() };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_draws < 10_000 {
            return Err(MacsError::Domain(format!("need at least 10^4 draws, got {}", self.n_draws)));
        }
        if self.stream_count == 0 {
            return Err(MacsError::Domain("stream_count must be positive".into()));
        }
        Ok(())
    }

    fn stream_rng(&self, stream: u32) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream as u64);
        rng
    }

    fn stream_draws(&self, stream: u32) -> u64 {
        let k = self.stream_count as u64;
        self.n_draws / k + u64::from((stream as u64) < self.n_draws % k)
    }

    /// Runs `per_draw` on every draw of every stream and counts `true`s.
    fn count_hits<F>(&self, per_draw: F) -> u64
    where
        F: Fn(&mut ChaCha8Rng) -> bool + Sync,
    {
        let counts: Vec<u64> = (0..self.stream_count)
            .into_par_iter()
            .map(|s| {
                let mut rng = self.stream_rng(s);
                (0..self.stream_draws(s)).filter(|_| per_draw(&mut rng)).count() as u64
            })
            .collect();
        counts.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub draws: u64,
}

impl McEstimate {
    fn proportion(hits: u64, draws: u64, scale: f64) -> Self {
        let p = hits as f64 / draws as f64;
        Self {
            estimate: scale * p,
            std_error: scale * (p * (1.0 - p) / draws as f64).sqrt(),
            hits,
            draws,
        }
    }

    /// `|estimate − value|` in standard errors (infinite if SE is 0 and they differ).
    pub fn z_score(&self, value: f64) -> f64 {
        let d = (self.estimate - value).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Largest `(cos ψ, sin ψ)'v` over `ψ ∈ [centre − phi2, centre + phi1]`.
fn fan_max(v1: f64, v2: f64, centre: f64, phi1: f64, phi2: f64) -> f64 {
    let r = v1.hypot(v2);
    let d = (v2.atan2(v1) - centre + PI).rem_euclid(2.0 * PI) - PI;
    let off = if d > phi1 {
        d - phi1
    } else if d < -phi2 {
        -phi2 - d
    } else {
        0.0
    };
    r * off.cos()
}

/// `−c₂ ≤ (cos ψ, sin ψ)'v ≤ c₁` for every `ψ ∈ [−φ₂, φ₁]`, checked through
/// the exact extremes over the fan.
pub fn contains(v1: f64, v2: f64, cc: &CriticalConstants, phi1: f64, phi2: f64) -> bool {
    fan_max(v1, v2, 0.0, phi1, phi2) <= cc.c1 && fan_max(v1, v2, PI, phi1, phi2) <= cc.c2
}

/// `√(χ²_ν/ν)`.
pub fn sample_u<R: Rng + ?Sized>(rng: &mut R, nu: u32) -> f64 {
    (sample_chi_squared(rng, nu) / nu as f64).sqrt()
}

pub fn sample_chi_squared<R: Rng + ?Sized>(rng: &mut R, nu: u32) -> f64 {
    if nu <= SUM_OF_SQUARES_MAX_NU {
        (0..nu)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                z * z
            })
            .sum()
    } else {
        ChiSquared::new(nu as f64).expect("positive degrees of freedom").sample(rng)
    }
}

/// One draw of `V = (q₁(N₁ − q₃)/U + q₂, N₂/U)`.
pub fn sample_v<R: Rng + ?Sized>(rng: &mut R, p: &DensityParams) -> (f64, f64) {
    let n1: f64 = StandardNormal.sample(rng);
    let n2: f64 = StandardNormal.sample(rng);
    let u = sample_u(rng, p.nu);
    (p.q1 * (n1 - p.q3) / u + p.q2, n2 / u)
}

pub fn mc_coverage(cc: &CriticalConstants, scn: &Scenario, form: BandForm, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let params = DensityParams::new(scn, form)?;
    let (xi, _) = form.xi_theta(scn.nu())?;
    let (phi1, phi2) = sub_angles(scn, xi)?;
    let hits = cfg.count_hits(|rng| {
        let (v1, v2) = sample_v(rng, &params);
        contains(v1, v2, cc, phi1, phi2)
    });
    Ok(McEstimate::proportion(hits, cfg.n_draws, 1.0))
}

/// Hit-or-miss estimate of `Area(R_V)`. Points are drawn uniformly from the
/// smaller of the parallelogram cut out by the two endpoint slabs and the
/// square enclosing the region's farthest boundary point.
pub fn mc_region_area(cc: &CriticalConstants, geo: &WedgeGeometry, cfg: &McConfig) -> Result<McEstimate> {
    cfg.validate()?;
    let (phi1, phi2) = (geo.phi1, geo.phi2);
    let width = cc.c1 + cc.c2;
    let sin_phi = (phi1 + phi2).sin();
    let para_area = width * width / sin_phi;
    let reach = geo
        .pieces(cc)
        .iter()
        .filter(|p| p.width() > 0.0)
        .flat_map(|p| [p.radius_at(p.start), p.radius_at(p.end)])
        .fold(0.0f64, f64::max);
    let square_area = 4.0 * reach * reach;

    let hits = if para_area <= square_area {
        // Slab coordinates s = e₁'v, t = e₂'v with e₁ at φ₁ and e₂ at −φ₂.
        let (s1, c1) = phi1.sin_cos();
        let (s2, c2) = (-phi2).sin_cos();
        let det = c1 * s2 - s1 * c2;
        cfg.count_hits(|rng| {
            let s = rng.random_range(-cc.c2..cc.c1);
            let t = rng.random_range(-cc.c2..cc.c1);
            let v1 = (s * s2 - t * s1) / det;
            let v2 = (t * c1 - s * c2) / det;
            contains(v1, v2, cc, phi1, phi2)
        })
    } else {
        cfg.count_hits(|rng| {
            let v1 = rng.random_range(-reach..reach);
            let v2 = rng.random_range(-reach..reach);
            contains(v1, v2, cc, phi1, phi2)
        })
    };
    Ok(McEstimate::proportion(hits, cfg.n_draws, para_area.min(square_area)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band_forms::BandName;
    use crate::geometry::{region_area, zeta_angles};
    use statrs::distribution::{ChiSquared as ChiSquaredDist, ContinuousCDF};

    fn ks_p_value(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        let d = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).max((i + 1) as f64 / n - f)
            })
            .fold(0.0, f64::max);
        let lambda = (n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d;
        let p: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                2.0 * (-1f64).powf(k - 1.0) * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum();
        p.clamp(0.0, 1.0)
    }

    #[test]
    fn chi_squared_samplers_pass_ks() {
        for nu in [3u32, 8, 32, 33, 98] {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + nu as u64);
            let xs: Vec<f64> = (0..100_000).map(|_| sample_chi_squared(&mut rng, nu)).collect();
            let dist = ChiSquaredDist::new(nu as f64).unwrap();
            let p = ks_p_value(xs, |x| dist.cdf(x));
            assert!(p > 0.001, "nu={nu}: p={p}");
        }
    }

    #[test]
    fn zero_constants_never_cover() {
        let scn = Scenario::symmetric(0.1, 0.75, 10, 1.0).unwrap();
        let cc = CriticalConstants { c1: 0.0, c2: 0.0 };
        let cfg = McConfig::new(10_000, 3).unwrap();
        let est = mc_coverage(&cc, &scn, BandForm::symmetric(BandName::SB), &cfg).unwrap();
        assert_eq!(est.hits, 0);
        assert_eq!(est.estimate, 0.0);
    }

    #[test]
    fn deterministic_and_scaling() {
        let scn = Scenario::symmetric(0.1, 0.75, 10, 1.0).unwrap();
        let form = BandForm::symmetric(BandName::TBE);
        let cc = CriticalConstants::symmetric(2.3).unwrap();
        let cfg = McConfig::new(40_000, 9).unwrap();
        let a = mc_coverage(&cc, &scn, form, &cfg).unwrap();
        let b = mc_coverage(&cc, &scn, form, &cfg).unwrap();
        assert_eq!(a, b);
        let big = mc_coverage(&cc, &scn, form, &McConfig { n_draws: 160_000, ..cfg }).unwrap();
        let ratio = a.std_error / big.std_error;
        assert!((ratio - 2.0).abs() < 0.1, "{ratio}");
    }

    #[test]
    fn single_thread_matches_pool() {
        let scn = Scenario::symmetric(0.01, 0.95, 10, 10.0).unwrap();
        let form = BandForm::asymmetric(BandName::UV);
        let cc = CriticalConstants::new(3.0, 4.0).unwrap();
        let cfg = McConfig::new(20_000, 5).unwrap();
        let pooled = mc_coverage(&cc, &scn, form, &cfg).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| mc_coverage(&cc, &scn, form, &cfg).unwrap());
        assert_eq!(pooled, single);
    }

    #[test]
    fn right_angle_square_area() {
        let cc = CriticalConstants::symmetric(2.0).unwrap();
        let geo = zeta_angles(&cc, PI / 2.0, PI / 4.0, PI / 4.0).unwrap();
        let est = mc_region_area(&cc, &geo, &McConfig::new(200_000, 1).unwrap()).unwrap();
        assert!(est.z_score(8.0 + 2.0 * PI) < 3.5, "{est:?}");
    }

    #[test]
    fn fan_check_agrees_with_dense_discretization() {
        let scn = Scenario::new(0.05, 0.05, 9, 0.0, 2.0, -1.482, 0.518).unwrap();
        let form = BandForm::asymmetric(BandName::UV);
        let p = DensityParams::new(&scn, form).unwrap();
        let (xi, _) = form.xi_theta(7).unwrap();
        let (phi1, phi2) = sub_angles(&scn, xi).unwrap();
        let cc = CriticalConstants::new(3.23, 2.016).unwrap();
        let lead = (1.0 / 9.0 + scn.z_gamma().powi(2) * xi).sqrt();
        let dirs: Vec<(f64, f64)> = (0..10_000)
            .map(|i| {
                let x = scn.a + (scn.b - scn.a) * i as f64 / 9_999.0;
                let w2 = x / scn.s_xx.sqrt();
                let norm = lead.hypot(w2);
                (lead / norm, w2 / norm)
            })
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut disagreements = 0;
        for _ in 0..100_000 {
            let (v1, v2) = sample_v(&mut rng, &p);
            let exact = contains(v1, v2, &cc, phi1, phi2);
            let (mut hi, mut lo) = (f64::NEG_INFINITY, f64::INFINITY);
            for &(a, b) in &dirs {
                let proj = a * v1 + b * v2;
                hi = hi.max(proj);
                lo = lo.min(proj);
            }
            let dense = hi <= cc.c1 && lo >= -cc.c2;
            // The grid can only miss an interior maximum by O(step²).
            if exact != dense && (hi - cc.c1).abs() > 1e-6 && (lo + cc.c2).abs() > 1e-6 {
                disagreements += 1;
            }
        }
        assert_eq!(disagreements, 0);
    }

    #[test]
    fn area_estimates_match_closed_form_in_every_case() {
        for &(c1, c2, phi1, phi2) in &[
            (2.0, 2.5, 0.3, 0.3),
            (2.0, 2.0, PI / 4.0, PI / 4.0),
            (3.0, 2.6, 1.0, 1.1),
            (1.0, 4.0, 1.5, 1.4),
            (4.0, 1.0, 1.5, 1.4),
        ] {
            let cc = CriticalConstants::new(c1, c2).unwrap();
            let geo = zeta_angles(&cc, phi1 + phi2, phi1, phi2).unwrap();
            let est = mc_region_area(&cc, &geo, &McConfig::new(200_000, 11).unwrap()).unwrap();
            let exact = region_area(&cc, &geo);
            assert!(est.z_score(exact) < 3.5, "{:?}: {est:?} vs {exact}", geo.case_tag);
        }
    }

    #[test]
    fn narrow_fan_fills_its_strip() {
        // R_V is the slab parallelogram minus corners of relative size O(φ²).
        let cc = CriticalConstants::symmetric(2.0).unwrap();
        let geo = zeta_angles(&cc, 0.02, 0.01, 0.01).unwrap();
        let est = mc_region_area(&cc, &geo, &McConfig::new(200_000, 11).unwrap()).unwrap();
        let exact = region_area(&cc, &geo);
        assert!((est.estimate - exact).abs() < 1e-4 * exact, "{est:?} vs {exact}");
        assert!((exact - 16.0 / 0.02f64.sin()).abs() < 1e-4 * exact);
    }
}
