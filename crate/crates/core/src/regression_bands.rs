//! Centred simple linear regression, band evaluation and threshold crossings.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::band_forms::BandForm;
use crate::error::{MacsError, Result};
use crate::geometry::{CriticalConstants, Scenario};
use crate::solver::Solution;

/// Grid points scanned for a sign change before bisecting.
const SCAN_POINTS: usize = 1000;
const CROSSING_TOL: f64 = 1e-6;
/// Slack when checking that `x` lies in the band interval.
const INTERVAL_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Dataset {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

#[derive(Deserialize)]
struct Row {
    x: String,
    y: String,
}

impl Dataset {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(MacsError::Data(format!("{} x values but {} y values", x.len(), y.len())));
        }
        if x.len() < 3 {
            return Err(MacsError::Data(format!("need at least 3 observations, got {}", x.len())));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(MacsError::Data("observations must be finite".into()));
        }
        Ok(Self { x, y })
    }

    /// Reads CSV with header `x,y`; lines starting with `#` are comments.
    /// Rows that do not parse as two finite numbers are dropped with a warning.
    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "y"] {
            return Err(MacsError::Data(format!("expected header 'x,y', found '{}'", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (i, rec) in rdr.deserialize::<Row>().enumerate() {
            let parsed = rec.ok().and_then(|r| {
                let x = r.x.parse::<f64>().ok()?;
                let y = r.y.parse::<f64>().ok()?;
                (x.is_finite() && y.is_finite()).then_some((x, y))
            });
            match parsed {
                Some((x, y)) => {
                    xs.push(x);
                    ys.push(y);
                }
                None => log::warn!("dropping unparsable data row {}", i + 1),
            }
        }
        Self::new(xs, ys)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_reader(std::fs::File::open(path)?)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitResult {
    /// Fitted value at `x̄`.
    pub beta0_hat: f64,
    pub beta1_hat: f64,
    pub sigma_hat: f64,
    pub n: u32,
    pub nu: u32,
    pub x_bar: f64,
    pub s_xx: f64,
    pub r_squared: f64,
}

impl FitResult {
    pub fn predict(&self, x: f64) -> f64 {
        self.beta0_hat + self.beta1_hat * (x - self.x_bar)
    }

    /// Scenario for a band over `(x_lo, x_hi)` in original units.
    pub fn scenario(&self, alpha: f64, gamma: f64, x_lo: f64, x_hi: f64) -> Result<Scenario> {
        Scenario::from_design(alpha, gamma, self.n, self.x_bar, self.s_xx, x_lo, x_hi)
    }
}

/// Least squares for `y = β₀ + β₁(x − x̄) + ε`.
pub fn fit(ds: &Dataset) -> Result<FitResult> {
    let n = ds.len();
    let nf = n as f64;
    let x_bar = ds.x.iter().sum::<f64>() / nf;
    let y_bar = ds.y.iter().sum::<f64>() / nf;
    let s_xx: f64 = ds.x.iter().map(|x| (x - x_bar).powi(2)).sum();
    if !(s_xx > 0.0) {
        return Err(MacsError::DegenerateDesign("all x values are equal (S_xx = 0)".into()));
    }
    let s_xy: f64 = ds.x.iter().zip(&ds.y).map(|(x, y)| (x - x_bar) * (y - y_bar)).sum();
    let s_yy: f64 = ds.y.iter().map(|y| (y - y_bar).powi(2)).sum();
    let beta1 = s_xy / s_xx;
    let sse: f64 = ds
        .x
        .iter()
        .zip(&ds.y)
        .map(|(x, y)| (y - y_bar - beta1 * (x - x_bar)).powi(2))
        .sum();
    let nu = n - 2;
    let r_squared = if s_yy > 0.0 {
        (1.0 - sse / s_yy).clamp(0.0, 1.0)
    } else {
        log::warn!("response has zero variance; reporting R^2 = 1");
        1.0
    };
    Ok(FitResult {
        beta0_hat: y_bar,
        beta1_hat: beta1,
        sigma_hat: (sse / nu as f64).sqrt(),
        n: n as u32,
        nu: nu as u32,
        x_bar,
        s_xx,
        r_squared,
    })
}

/// A solved band: constants plus what is needed to evaluate it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BandCurve {
    pub form: BandForm,
    pub cc: CriticalConstants,
    pub scn: Scenario,
    pub xi: f64,
    pub theta: f64,
}

impl BandCurve {
    pub fn new(form: BandForm, cc: CriticalConstants, scn: Scenario) -> Result<Self> {
        let (xi, theta) = form.xi_theta(scn.nu())?;
        Ok(Self { form, cc, scn, xi, theta })
    }

    pub fn from_solution(sol: &Solution) -> Result<Self> {
        Self::new(sol.form, sol.constants, sol.scenario)
    }

    /// Interval in original covariate units.
    pub fn x_range(&self) -> (f64, f64) {
        (self.scn.x_bar + self.scn.a, self.scn.x_bar + self.scn.b)
    }
}

/// `(lower, upper)` at `x`: centre `β̂₀ + β̂₁(x − x̄) + z_γσ̂/θ`, lower
/// half-width `c₁σ̂√(1/n + (x − x̄)²/S_xx + z_γ²ξ)`, upper half-width with `c₂`.
pub fn band_at(x: f64, fit: &FitResult, curve: &BandCurve) -> Result<(f64, f64)> {
    let (lo, hi) = curve.x_range();
    let slack = INTERVAL_SLACK * (1.0 + lo.abs().max(hi.abs()));
    if !(x >= lo - slack && x <= hi + slack) {
        return Err(MacsError::OutOfInterval { x, lower: lo, upper: hi });
    }
    Ok(band_unchecked(x, fit, curve))
}

fn band_unchecked(x: f64, fit: &FitResult, curve: &BandCurve) -> (f64, f64) {
    let z = curve.scn.z_gamma();
    let dx = x - fit.x_bar;
    let centre = fit.predict(x) + z * fit.sigma_hat / curve.theta;
    let spread = fit.sigma_hat * (1.0 / fit.n as f64 + dx * dx / fit.s_xx + z * z * curve.xi).sqrt();
    (centre - curve.cc.c1 * spread, centre + curve.cc.c2 * spread)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossings {
    /// Where the lower band reaches `h`.
    pub lower: Option<f64>,
    /// Where the upper band reaches `h`.
    pub upper: Option<f64>,
}

/// First crossing of `h` by each band curve over the interval, located by
/// a scan on 10³ points and refined by bisection to 10⁻⁶.
pub fn threshold_crossings(h: f64, fit: &FitResult, curve: &BandCurve) -> Crossings {
    let lower = first_crossing(|x| band_unchecked(x, fit, curve).0 - h, curve.x_range());
    let upper = first_crossing(|x| band_unchecked(x, fit, curve).1 - h, curve.x_range());
    Crossings { lower, upper }
}

fn first_crossing(g: impl Fn(f64) -> f64, (lo, hi): (f64, f64)) -> Option<f64> {
    let mut x0 = lo;
    let mut g0 = g(x0);
    if g0 == 0.0 {
        return Some(x0);
    }
    for i in 1..SCAN_POINTS {
        let x1 = lo + (hi - lo) * i as f64 / (SCAN_POINTS - 1) as f64;
        let g1 = g(x1);
        if g1 == 0.0 {
            return Some(x1);
        }
        if g1.signum() != g0.signum() {
            let (mut a, mut b) = (x0, x1);
            while b - a > CROSSING_TOL {
                let m = 0.5 * (a + b);
                if g(m).signum() == g0.signum() {
                    a = m;
                } else {
                    b = m;
                }
            }
            return Some(0.5 * (a + b));
        }
        x0 = x1;
        g0 = g1;
    }
    None
}
