//! Direction-fan angles and the spindle-shaped acceptance region `R_V`.
//!
//! As `x − x̄` sweeps `(a, b)` the normalized direction
//! `w(x) = (√(1/n + z_γ²ξ), (x − x̄)/√S_xx)` sweeps the fan `[−φ₂, φ₁]`.
//! `R_V` is the set of `V` with `−c₂ ≤ ŵ'V ≤ c₁` for every direction in the
//! fan: an arc of radius `c₁` over the fan, an arc of radius `c₂` over the
//! reflected fan `[π − φ₂, π + φ₁]`, joined by tangent edges.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{MacsError, Result};

/// |φ − π/2| below this is treated as the right-angle case.
pub const RIGHT_ANGLE_TOL: f64 = 1e-9;

/// One problem instance. `a` and `b` are in centred units `x − x̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    pub alpha: f64,
    pub gamma: f64,
    pub n: u32,
    pub x_bar: f64,
    pub s_xx: f64,
    pub a: f64,
    pub b: f64,
}

impl Scenario {
    pub fn new(alpha: f64, gamma: f64, n: u32, x_bar: f64, s_xx: f64, a: f64, b: f64) -> Result<Self> {
        let bad = |msg: String| Err(MacsError::InvalidScenario(msg));
        if !(alpha > 0.0 && alpha < 1.0) {
            return bad(format!("alpha must lie in (0, 1), got {alpha}"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {gamma}"));
        }
        if n < 3 {
            return bad(format!("need n >= 3 observations, got {n}"));
        }
        if !(s_xx > 0.0 && s_xx.is_finite()) {
            return bad(format!("S_xx must be positive and finite, got {s_xx}"));
        }
        if !x_bar.is_finite() || !a.is_finite() || !b.is_finite() {
            return bad("interval and covariate mean must be finite".into());
        }
        if a >= b {
            return bad(format!("interval must satisfy a < b, got ({a}, {b})"));
        }
        Ok(Self { alpha, gamma, n, x_bar, s_xx, a, b })
    }

    /// Symmetric interval `a = −b` parameterized by `s = b/√S_xx`.
    pub fn symmetric(alpha: f64, gamma: f64, n: u32, s: f64) -> Result<Self> {
        if !(s > 0.0) {
            return Err(MacsError::InvalidScenario(format!("s must be positive, got {s}")));
        }
        Self::new(alpha, gamma, n, 0.0, 1.0, -s, s)
    }

    /// Interval given in original covariate units; centred internally.
    pub fn from_design(
        alpha: f64,
        gamma: f64,
        n: u32,
        x_bar: f64,
        s_xx: f64,
        x_lo: f64,
        x_hi: f64,
    ) -> Result<Self> {
        Self::new(alpha, gamma, n, x_bar, s_xx, x_lo - x_bar, x_hi - x_bar)
    }

    pub fn nu(&self) -> u32 {
        self.n - 2
    }

    pub fn confidence(&self) -> f64 {
        1.0 - self.alpha
    }

    /// `z_γ = Φ⁻¹(γ)`.
    pub fn z_gamma(&self) -> f64 {
        Normal::standard().inverse_cdf(self.gamma)
    }

    /// `b/√S_xx`, the spread parameter of symmetric designs.
    pub fn s(&self) -> f64 {
        self.b / self.s_xx.sqrt()
    }

    /// First component of `w`, squared: `1/n + z_γ² ξ`.
    fn lead_squared(&self, xi: f64) -> Result<f64> {
        let z = self.z_gamma();
        let k2 = 1.0 / self.n as f64 + z * z * xi;
        if !(k2 > 0.0) {
            return Err(MacsError::InvalidGeometry(format!(
                "1/n + z_gamma^2 xi = {k2:e} is not positive"
            )));
        }
        Ok(k2)
    }
}

/// Angle swept by `w(x)` over the interval.
///
/// This is the arccos of the normalized inner product of the two endpoint
/// directions, evaluated as `atan2(|cross|, dot)` so no clamping is needed
/// and tiny or near-π fans keep full precision.
pub fn fan_angle(scn: &Scenario, xi: f64) -> Result<f64> {
    let (phi1, phi2) = sub_angles(scn, xi)?;
    Ok(phi1 + phi2)
}

/// Angles from the `v₁` axis to the `b`-endpoint (`φ₁`) and to the
/// `a`-endpoint (`φ₂`). `φ₂` is negative when `a > 0`.
pub fn sub_angles(scn: &Scenario, xi: f64) -> Result<(f64, f64)> {
    let k = scn.lead_squared(xi)?.sqrt();
    let root = scn.s_xx.sqrt();
    Ok(((scn.b / root).atan2(k), (-scn.a / root).atan2(k)))
}

/// Critical constants: `c1` bounds `ŵ'V` from above, `c2` from below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CriticalConstants {
    pub c1: f64,
    pub c2: f64,
}

impl CriticalConstants {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        if !(c1 > 0.0 && c2 > 0.0) || !c1.is_finite() || !c2.is_finite() {
            return Err(MacsError::Domain(format!(
                "critical constants must be positive and finite, got ({c1}, {c2})"
            )));
        }
        Ok(Self { c1, c2 })
    }

    pub fn symmetric(c: f64) -> Result<Self> {
        Self::new(c, c)
    }

    pub fn c_min(&self) -> f64 {
        self.c1.min(self.c2)
    }

    pub fn c_max(&self) -> f64 {
        self.c1.max(self.c2)
    }

    pub fn swapped(&self) -> Self {
        Self { c1: self.c2, c2: self.c1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum CaseTag {
    /// φ < π/2
    AcuteFan,
    /// φ = π/2 within [`RIGHT_ANGLE_TOL`]
    RightFan,
    /// φ > π/2 and both gap triangles survive
    ObtuseEdge,
    /// φ > π/2 and the smaller side's tangent edges cut into the larger arc
    ObtuseArc,
}

/// Which radius arc the opposite side's tangent edges cut short.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TrimmedArc {
    /// The `c₁` arc over the fan (happens when `c₂ < c₁`).
    Upper,
    /// The `c₂` arc over the reflected fan (happens when `c₁ < c₂`).
    Lower,
}

/// Angular layout of `R_V` for a particular pair of constants.
///
/// Going counter-clockwise from the fan's lower end: `c₁` arc, the upper gap
/// (edge tangent at `φ₁` for `ζ₁`, then edge tangent at `π − φ₂`), the `c₂`
/// arc, and the lower gap (edge tangent at `π + φ₁` for `ζ₂`, then edge
/// tangent at `2π − φ₂`). In the [`CaseTag::ObtuseArc`] case the starred
/// angles give the shortened arc: `[π − φ₂*, π + φ₁*]` when the lower arc is
/// trimmed, `[−φ₂*, φ₁*]` when the upper one is.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WedgeGeometry {
    pub phi: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub phi1_star: f64,
    pub phi2_star: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub case_tag: CaseTag,
    pub trimmed: Option<TrimmedArc>,
}

/// Fills in the gap-split angles and case tag.
///
/// When `c₁ ≤ c₂` these agree with the classical three-case rule
/// (`ζ₁ = arctan(c_max/c_min)` at a right angle, and so on); when `c₁ > c₂`
/// the roles of the two sides are mirrored.
pub fn zeta_angles(cc: &CriticalConstants, phi: f64, phi1: f64, phi2: f64) -> Result<WedgeGeometry> {
    if !(phi > 0.0 && phi < PI) {
        return Err(MacsError::InvalidGeometry(format!("fan angle {phi} outside (0, π)")));
    }
    let (c1, c2) = (cc.c1, cc.c2);
    let gap = PI - phi;
    let case_tag = if (phi - FRAC_PI_2).abs() < RIGHT_ANGLE_TOL {
        CaseTag::RightFan
    } else if phi < FRAC_PI_2 {
        CaseTag::AcuteFan
    } else if cc.c_min() <= cc.c_max() * gap.cos() {
        CaseTag::ObtuseArc
    } else {
        CaseTag::ObtuseEdge
    };

    let mut geo = WedgeGeometry {
        phi,
        phi1,
        phi2,
        phi1_star: phi1,
        phi2_star: phi2,
        zeta1: 0.0,
        zeta2: 0.0,
        case_tag,
        trimmed: None,
    };

    if case_tag == CaseTag::ObtuseArc {
        let eta = (cc.c_min() / cc.c_max()).acos();
        geo.phi1_star = PI - phi2 - eta;
        geo.phi2_star = PI - phi1 - eta;
        if c1 <= c2 {
            geo.zeta1 = eta;
            geo.trimmed = Some(TrimmedArc::Lower);
        } else {
            geo.zeta2 = eta;
            geo.trimmed = Some(TrimmedArc::Upper);
        }
    } else {
        // Intersection of the c₁ edge at φ₁ with the c₂ edge at π − φ₂.
        let zeta1 = (c2 - c1 * gap.cos()).atan2(c1 * gap.sin());
        geo.zeta1 = zeta1;
        geo.zeta2 = gap - zeta1;
    }
    Ok(geo)
}

/// Which of the eight polar pieces of `R_V`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum RegionId {
    M1,
    M2,
    M3,
    M4,
    N1,
    N2,
    N3,
    N4,
}

/// Outer boundary of a polar piece.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Boundary {
    Arc { radius: f64 },
    /// The line `{v : (cos ψ, sin ψ)'v = distance}` with `ψ = normal`.
    Edge { distance: f64, normal: f64 },
}

/// `{(r, δ) : start ≤ δ < end, 0 ≤ r ≤ boundary(δ)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionPiece {
    pub id: RegionId,
    pub start: f64,
    pub end: f64,
    pub boundary: Boundary,
}

impl RegionPiece {
    pub fn width(&self) -> f64 {
        self.end - self.start
    }

    pub fn radius_at(&self, delta: f64) -> f64 {
        match self.boundary {
            Boundary::Arc { radius } => radius,
            Boundary::Edge { distance, normal } => distance / (delta - normal).cos(),
        }
    }

    pub fn area(&self) -> f64 {
        match self.boundary {
            Boundary::Arc { radius } => 0.5 * radius * radius * self.width(),
            Boundary::Edge { distance, normal } => {
                0.5 * distance * distance * ((self.end - normal).tan() - (self.start - normal).tan())
            }
        }
    }
}

impl WedgeGeometry {
    /// Angular span of the `c₁` arc.
    pub fn upper_arc(&self) -> (f64, f64) {
        match self.trimmed {
            Some(TrimmedArc::Upper) => (-self.phi2_star, self.phi1_star),
            _ => (-self.phi2, self.phi1),
        }
    }

    /// Angular span of the `c₂` arc.
    pub fn lower_arc(&self) -> (f64, f64) {
        match self.trimmed {
            Some(TrimmedArc::Lower) => (PI - self.phi2_star, PI + self.phi1_star),
            _ => (PI - self.phi2, PI + self.phi1),
        }
    }

    /// The four edge triangles `M₁…M₄` and four arc fans `N₁…N₄`, in that
    /// order. Together they tile one full turn; some may be empty.
    pub fn pieces(&self, cc: &CriticalConstants) -> [RegionPiece; 8] {
        let (u_lo, u_hi) = self.upper_arc();
        let (l_lo, l_hi) = self.lower_arc();
        let c1_arc = Boundary::Arc { radius: cc.c1 };
        let c2_arc = Boundary::Arc { radius: cc.c2 };
        let split_up = 0f64.clamp(u_lo, u_hi);
        let split_lo = PI.clamp(l_lo, l_hi);
        let piece = |id, start, end, boundary| RegionPiece { id, start, end, boundary };
        [
            piece(
                RegionId::M1,
                u_hi,
                u_hi + self.zeta1,
                Boundary::Edge { distance: cc.c1, normal: self.phi1 },
            ),
            piece(
                RegionId::M2,
                u_hi + self.zeta1,
                l_lo,
                Boundary::Edge { distance: cc.c2, normal: PI - self.phi2 },
            ),
            piece(
                RegionId::M3,
                l_hi,
                l_hi + self.zeta2,
                Boundary::Edge { distance: cc.c2, normal: PI + self.phi1 },
            ),
            piece(
                RegionId::M4,
                l_hi + self.zeta2,
                u_lo + TAU,
                Boundary::Edge { distance: cc.c1, normal: TAU - self.phi2 },
            ),
            piece(RegionId::N1, split_up, u_hi, c1_arc),
            piece(RegionId::N2, l_lo, split_lo, c2_arc),
            piece(RegionId::N3, split_lo, l_hi, c2_arc),
            piece(RegionId::N4, u_lo, split_up, c1_arc),
        ]
    }
}

/// `Area(R_V)` in closed form. Depends on the constants only through
/// `{c_min, c_max}` and `c₁² + c₂²`.
pub fn region_area(cc: &CriticalConstants, geo: &WedgeGeometry) -> f64 {
    let (c_min, c_max) = (cc.c_min(), cc.c_max());
    let phi = geo.phi;
    let arcs = 0.5 * phi * (cc.c1 * cc.c1 + cc.c2 * cc.c2);
    match geo.case_tag {
        CaseTag::AcuteFan => {
            let t = phi.tan();
            (c_min / phi.cos() + c_max).powi(2) / t - c_min * c_min * t + arcs
        }
        CaseTag::RightFan => 2.0 * cc.c1 * cc.c2 + arcs,
        CaseTag::ObtuseEdge => {
            let gap = PI - phi;
            let t = gap.tan();
            c_min * c_min * t - (c_min / gap.cos() - c_max).powi(2) / t + arcs
        }
        CaseTag::ObtuseArc => {
            c_min * (c_max * c_max - c_min * c_min).sqrt()
                + 0.5 * c_min * c_min * phi
                + 0.5 * c_max * c_max * (TAU - phi - 2.0 * (c_min / c_max).acos())
        }
    }
}

/// `Area(R_V)` and the confidence-set area `Area(C(T*)) = Area(R_V)·√(1 + n z_γ² ξ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AreaResult {
    pub area_rv: f64,
    pub scale: f64,
    pub area_ct: f64,
}

pub fn area_scale(scn: &Scenario, xi: f64) -> f64 {
    let z = scn.z_gamma();
    (1.0 + scn.n as f64 * z * z * xi).sqrt()
}

pub fn scale_area(area_rv: f64, scn: &Scenario, xi: f64) -> AreaResult {
    let scale = if xi == 0.0 { 1.0 } else { area_scale(scn, xi) };
    AreaResult {
        area_rv,
        scale,
        area_ct: area_rv * scale,
    }
}
