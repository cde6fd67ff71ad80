//! Joint density of the pivotal vector `V = (V₁, V₂)`.
//!
//! With `N₁, N₂` independent standard normals and `U = √(χ²_ν/ν)`,
//! `V₁ = q₁(N₁ − q₃)/U + q₂` and `V₂ = N₂/U`. Integrating the auxiliary
//! `V₃ = U` out of the three-dimensional change of variables gives
//!
//! `f(v₁, v₂) = ν^{ν/2} e^{−q₃²/2} / (q₁ 2^{ν/2} π Γ(ν/2)) · ∫₀^∞ t^{ν+1} e^{−(A t² + 2B t)/2} dt`
//!
//! with `u = (v₁ − q₂)/q₁`, `A = u² + v₂² + ν` and `B = q₃ u`.
//! Everything below is evaluated in log space.

use std::f64::consts::{LN_2, PI, SQRT_2};

use serde::Serialize;
use libm::erfc;
use libm::lgamma as ln_gamma;

use crate::band_forms::BandForm;
use crate::error::{MacsError, QuadratureFailure, Result};
use crate::geometry::Scenario;

/// Forward recursion is used while `μ√k` stays below this; above it the
/// recursion loses more than about `e^{2·FORWARD_LIMIT}` in relative accuracy.
const FORWARD_LIMIT: f64 = 4.0;
const RESCALE: f64 = 1e250;
/// Trapezoid nodes are added until the log-integrand is this far below its peak.
const TAIL_DROP: f64 = 40.0;
const MAX_NODES: usize = 100_000;
/// For small `k` the strip of analyticity, not the mode width, limits the step.
const MAX_STEP: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityParams {
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub nu: u32,
    #[serde(skip)]
    ln_norm: f64,
}

impl DensityParams {
    pub fn new(scn: &Scenario, form: BandForm) -> Result<Self> {
        let nu = scn.nu();
        let (xi, theta) = form.xi_theta(nu)?;
        Self::from_parts(scn.z_gamma(), scn.n, xi, theta)
    }

    /// From `z_γ`, `n`, and the band form's `(ξ, θ)`; `ν = n − 2`.
    pub fn from_parts(z: f64, n: u32, xi: f64, theta: f64) -> Result<Self> {
        if n < 3 {
            return Err(MacsError::Domain(format!("need n >= 3, got {n}")));
        }
        if !(theta > 0.0) || !(xi >= 0.0) || !z.is_finite() {
            return Err(MacsError::Domain(format!("invalid (z, xi, theta) = ({z}, {xi}, {theta})")));
        }
        let nf = n as f64;
        let stretch = 1.0 + nf * z * z * xi;
        let q1 = stretch.recip().sqrt();
        let q3 = z * nf.sqrt();
        let q2 = q3 * q1 / theta;
        let nu = n - 2;
        let half = 0.5 * nu as f64;
        let ln_norm = half * (nu as f64).ln() - q1.ln() - half * LN_2 - PI.ln() - ln_gamma(half);
        Ok(Self { q1, q2, q3, nu, ln_norm })
    }

    /// `ln f(v₁, v₂)`.
    pub fn ln_density(&self, v1: f64, v2: f64) -> Result<f64> {
        let u = (v1 - self.q2) / self.q1;
        let rest = v2 * v2 + self.nu as f64;
        let a = u * u + rest;
        let b = self.q3 * u;
        // e^{−q₃²/2} combined with the e^{μ²/2} pulled out of the inner integral.
        let gauss = -0.5 * self.q3 * self.q3 * rest / a;
        Ok(self.ln_norm + gauss + ln_scaled_moment(a, b, self.nu + 1)?)
    }

    pub fn density(&self, v1: f64, v2: f64) -> Result<f64> {
        Ok(self.ln_density(v1, v2)?.exp())
    }

    /// `r · f(r cos δ, r sin δ)`.
    pub fn polar(&self, r: f64, delta: f64) -> Result<f64> {
        if r <= 0.0 {
            return Ok(0.0);
        }
        let (s, c) = delta.sin_cos();
        Ok(r * self.density(r * c, r * s)?)
    }
}

pub fn density_v(v1: f64, v2: f64, p: &DensityParams) -> Result<f64> {
    p.density(v1, v2)
}

pub fn density_polar(r: f64, delta: f64, p: &DensityParams) -> Result<f64> {
    p.polar(r, delta)
}

/// `∫₀^∞ t^{ν+1} exp(−(A t² + 2B t)/2) dt`.
pub fn inner_v3_integral(a: f64, b: f64, nu: u32) -> Result<f64> {
    if !(a > 0.0) || !b.is_finite() {
        return Err(MacsError::Domain(format!("inner integral needs A > 0 and finite B, got ({a}, {b})")));
    }
    let mu = b / a.sqrt();
    Ok((ln_scaled_moment(a, b, nu + 1)? + 0.5 * mu * mu).exp())
}

/// `ln[e^{−μ²/2} ∫₀^∞ t^k e^{−(A t² + 2B t)/2} dt]` with `μ = B/√A`.
///
/// Substituting `t = y/√A` leaves `A^{−(k+1)/2} G_k(μ)` where
/// `G_k(μ) = ∫₀^∞ y^k e^{−y²/2 − μ y} dy`; the factor `e^{−μ²/2}` is
/// removed because the density absorbs it into its Gaussian term.
fn ln_scaled_moment(a: f64, b: f64, k: u32) -> Result<f64> {
    let mu = b / a.sqrt();
    let ln_g = ln_moment(mu, k)?;
    Ok(ln_g - 0.5 * (k as f64 + 1.0) * a.ln() - 0.5 * mu * mu)
}

/// `ln G_k(μ)`, `G_k(μ) = ∫₀^∞ y^k e^{−y²/2 − μ y} dy`.
pub fn ln_moment(mu: f64, k: u32) -> Result<f64> {
    if mu <= 0.0 || mu * (k as f64).sqrt() <= FORWARD_LIMIT {
        Ok(ln_moment_recursion(mu, k))
    } else {
        ln_moment_trapezoid(mu, k)
    }
}

/// `G₀ = √(π/2) e^{μ²/2} erfc(μ/√2)`, `G₁ = 1 − μG₀`,
/// `G_{j+1} = j G_{j−1} − μ G_j`. All terms are positive for `μ ≤ 0`.
pub(crate) fn ln_moment_recursion(mu: f64, k: u32) -> f64 {
    let ln_g0 = 0.5 * (PI / 2.0).ln() + 0.5 * mu * mu + erfc(mu / SQRT_2).ln();
    if k == 0 {
        return ln_g0;
    }
    let g0 = ln_g0.exp();
    let mut offset = 0.0;
    let (mut prev, mut cur) = if g0.is_finite() {
        (g0, 1.0 - mu * g0)
    } else {
        // Only reachable for very negative μ; work relative to G₀.
        offset = ln_g0;
        (1.0, (-ln_g0).exp() - mu)
    };
    for j in 1..k {
        let next = j as f64 * prev - mu * cur;
        prev = cur;
        cur = next;
        if cur.abs() > RESCALE {
            prev /= RESCALE;
            cur /= RESCALE;
            offset += RESCALE.ln();
        }
    }
    cur.ln() + offset
}

/// Trapezoid rule in `s = ln y` centred on the mode of the log-concave
/// integrand `exp((k+1)s − e^{2s}/2 − μe^s)`. The integrand is entire and
/// decays doubly-exponentially to the right, so a step of half its local
/// standard deviation is accurate to roughly `e^{−4π²}`.
pub(crate) fn ln_moment_trapezoid(mu: f64, k: u32) -> Result<f64> {
    let kp = k as f64 + 1.0;
    let y_mode = 2.0 * kp / (mu + (mu * mu + 4.0 * kp).sqrt());
    let sd = (y_mode * y_mode + kp).sqrt().recip();
    let h = (0.5 * sd).min(MAX_STEP);
    let s_mode = y_mode.ln();
    let log_term = |y: f64, s: f64| kp * s - 0.5 * y * y - mu * y;
    let peak = log_term(y_mode, s_mode);
    let step = h.exp();

    let mut sum = 1.0;
    let mut nodes = 1;
    for dir in [1.0, -1.0] {
        let factor = if dir > 0.0 { step } else { step.recip() };
        let mut y = y_mode;
        let mut i = 0.0;
        loop {
            i += 1.0;
            y *= factor;
            let drop = log_term(y, s_mode + dir * i * h) - peak;
            sum += drop.exp();
            nodes += 1;
            if drop < -TAIL_DROP {
                break;
            }
            if nodes > MAX_NODES {
                return Err(MacsError::Quadrature(QuadratureFailure {
                    lower: 0.0,
                    upper: f64::INFINITY,
                    estimate: sum,
                    error_estimate: f64::NAN,
                    intervals: nodes,
                }));
            }
        }
    }
    Ok(peak + (sum * h).ln())
}
