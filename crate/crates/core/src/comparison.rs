//! Area ratios between bands and the standard comparison tables.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::Serialize;

use crate::band_forms::{BandForm, BandName};
use crate::error::{MacsError, Result};
use crate::geometry::{fan_angle, Scenario};
use crate::solver::{Solution, Solver, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum TableId {
    T2,
    T3,
    T4,
    T5,
}

impl std::str::FromStr for TableId {
    type Err = MacsError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "T2" | "2" => Ok(Self::T2),
            "T3" | "3" => Ok(Self::T3),
            "T4" | "4" => Ok(Self::T4),
            "T5" | "5" => Ok(Self::T5),
            _ => Err(MacsError::Domain(format!("unknown table id '{s}' (expected T2..T5)"))),
        }
    }
}

impl std::fmt::Display for TableId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// One row of the standard grid; the interval is `(−s, s)` with `S_xx = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridCell {
    pub confidence: f64,
    pub gamma: f64,
    pub n: u32,
    pub s: f64,
}

impl GridCell {
    pub fn scenario(&self) -> Result<Scenario> {
        Scenario::symmetric(1.0 - self.confidence, self.gamma, self.n, self.s)
    }
}

/// `1−α ∈ {0.9, 0.99}` × `γ ∈ {0.75, 0.95}` × `n ∈ {10, 100}` × `s ∈ {0.1, 1, 10}`.
pub fn standard_grid() -> Vec<GridCell> {
    let mut cells = Vec::with_capacity(24);
    for confidence in [0.9, 0.99] {
        for gamma in [0.75, 0.95] {
            for n in [10, 100] {
                for s in [0.1, 1.0, 10.0] {
                    cells.push(GridCell { confidence, gamma, n, s });
                }
            }
        }
    }
    cells
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct CacheKey {
    form: BandForm,
    bits: [u64; 6],
    n: u32,
}

impl CacheKey {
    fn new(scn: &Scenario, form: BandForm) -> Self {
        Self {
            form,
            bits: [scn.alpha, scn.gamma, scn.x_bar, scn.s_xx, scn.a, scn.b].map(f64::to_bits),
            n: scn.n,
        }
    }
}

type Slot = Arc<OnceLock<std::result::Result<Solution, String>>>;

/// Solved constants keyed by band form and scenario. Concurrent requests
/// for the same key solve once and share the result.
#[derive(Default)]
pub struct SolveCache {
    options: SolverOptions,
    slots: Mutex<HashMap<CacheKey, Slot>>,
}

impl SolveCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_options(options: SolverOptions) -> Self {
        Self {
            options,
            slots: Mutex::default(),
        }
    }

    pub fn options(&self) -> &SolverOptions {
        &self.options
    }

    pub fn solve(&self, scn: &Scenario, form: BandForm) -> Result<Solution> {
        let slot = {
            let mut slots = self.slots.lock().unwrap_or_else(|e| e.into_inner());
            slots.entry(CacheKey::new(scn, form)).or_default().clone()
        };
        let outcome = slot.get_or_init(|| {
            Solver::with_options(scn, form, self.options)
                .and_then(|s| s.solve())
                .map_err(|e| e.to_string())
        });
        outcome.clone().map_err(|message| MacsError::BandFailed {
            band: form.label(),
            message,
        })
    }

    pub fn len(&self) -> usize {
        self.slots.lock().unwrap_or_else(|e| e.into_inner()).len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RatioRecord {
    pub confidence: f64,
    pub gamma: f64,
    pub n: u32,
    /// Present for symmetric-interval cells.
    pub s: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub phi_i: f64,
    pub phi_ii: f64,
    pub numerator_band: BandForm,
    pub denominator_band: BandForm,
    /// `Area(C_B)/Area(C_A)` with B the numerator and A the denominator.
    pub r: Option<f64>,
    pub error: Option<String>,
}

/// Fan angles for the Type I and Type II (UV) direction vectors.
pub fn phi_pair(scn: &Scenario) -> Result<(f64, f64)> {
    let (xi, _) = BandForm::symmetric(BandName::UV).xi_theta(scn.nu())?;
    Ok((fan_angle(scn, 0.0)?, fan_angle(scn, xi)?))
}

fn interval_s(scn: &Scenario) -> Option<f64> {
    (scn.x_bar == 0.0 && scn.s_xx == 1.0 && scn.a == -scn.b).then_some(scn.b)
}

/// `r = Area(C_B(T*))/Area(C_A(T*))`; `r > 1` means `A` is better.
pub fn ratio(band_a: BandForm, band_b: BandForm, scn: &Scenario, cache: &SolveCache) -> Result<RatioRecord> {
    let (phi_i, phi_ii) = phi_pair(scn)?;
    let den = cache.solve(scn, band_a)?;
    let num = cache.solve(scn, band_b)?;
    Ok(RatioRecord {
        confidence: scn.confidence(),
        gamma: scn.gamma,
        n: scn.n,
        s: interval_s(scn),
        a: scn.a,
        b: scn.b,
        phi_i,
        phi_ii,
        numerator_band: band_b,
        denominator_band: band_a,
        r: Some(num.area.area_ct / den.area.area_ct),
        error: None,
    })
}

/// Like [`ratio`] but records a failure instead of returning it.
fn ratio_or_gap(band_a: BandForm, band_b: BandForm, scn: &Scenario, cache: &SolveCache) -> Result<RatioRecord> {
    match ratio(band_a, band_b, scn, cache) {
        Ok(r) => Ok(r),
        Err(e @ MacsError::BandFailed { .. }) => {
            let (phi_i, phi_ii) = phi_pair(scn)?;
            Ok(RatioRecord {
                confidence: scn.confidence(),
                gamma: scn.gamma,
                n: scn.n,
                s: interval_s(scn),
                a: scn.a,
                b: scn.b,
                phi_i,
                phi_ii,
                numerator_band: band_b,
                denominator_band: band_a,
                r: None,
                error: Some(e.to_string()),
            })
        }
        Err(e) => Err(e),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableLayout {
    pub reference: BandForm,
    pub columns: Vec<BandForm>,
    pub show_phi_i: bool,
    pub show_phi_ii: bool,
}

impl TableId {
    pub fn layout(self) -> TableLayout {
        use BandName::*;
        let sym = BandForm::symmetric;
        let asym = BandForm::asymmetric;
        match self {
            TableId::T2 => TableLayout {
                reference: asym(TBE),
                columns: vec![sym(SB), sym(TBU), sym(TBE), asym(SB), asym(TBU)],
                show_phi_i: true,
                show_phi_ii: false,
            },
            TableId::T3 => TableLayout {
                reference: asym(UV),
                columns: vec![sym(V), sym(UV), sym(TT), asym(V), asym(TT)],
                show_phi_i: false,
                show_phi_ii: true,
            },
            TableId::T4 => TableLayout {
                reference: asym(UV),
                columns: vec![sym(TBE), asym(TBE), sym(UV)],
                show_phi_i: true,
                show_phi_ii: true,
            },
            TableId::T5 => TableLayout {
                reference: asym(UV),
                columns: [true, false]
                    .into_iter()
                    .flat_map(|symmetric| BandName::ALL.map(|name| BandForm { name, symmetric }))
                    .collect(),
                show_phi_i: false,
                show_phi_ii: false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub scenario: Scenario,
    pub confidence: f64,
    pub gamma: f64,
    pub n: u32,
    pub s: Option<f64>,
    pub phi_i: f64,
    pub phi_ii: f64,
    pub ratios: Vec<RatioRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Table {
    pub id: TableId,
    pub layout: TableLayout,
    pub rows: Vec<TableRow>,
}

impl Table {
    pub fn records(&self) -> impl Iterator<Item = &RatioRecord> {
        self.rows.iter().flat_map(|r| r.ratios.iter())
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = ["1-alpha", "gamma", "n", "s"].map(String::from).into();
        if self.layout.show_phi_i {
            h.push("phi_I".into());
        }
        if self.layout.show_phi_ii {
            h.push("phi_II".into());
        }
        h.extend(self.layout.columns.iter().map(|f| f.label()));
        h
    }

    /// Rows as strings: 3 decimals, round-half-even; failed cells are empty.
    pub fn formatted_rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|row| {
                let mut out = vec![
                    format!("{}", row.confidence),
                    format!("{}", row.gamma),
                    row.n.to_string(),
                    row.s.map_or_else(String::new, |s| format!("{s}")),
                ];
                if self.layout.show_phi_i {
                    out.push(format_3dp(row.phi_i));
                }
                if self.layout.show_phi_ii {
                    out.push(format_3dp(row.phi_ii));
                }
                out.extend(row.ratios.iter().map(|r| r.r.map_or_else(String::new, format_3dp)));
                out
            })
            .collect()
    }
}

/// Rounds to 3 decimals with ties to even.
pub fn round_3dp(x: f64) -> f64 {
    let y = x * 1000.0;
    let r = y.round();
    let r = if (y - y.trunc()).abs() == 0.5 && r % 2.0 != 0.0 { r - y.signum() } else { r };
    r / 1000.0
}

pub fn format_3dp(x: f64) -> String {
    format!("{:.3}", round_3dp(x))
}

/// Builds a table over the given scenarios, solving all needed bands first
/// (in parallel) so each band is solved once per scenario.
pub fn table_for(id: TableId, scenarios: &[Scenario], cache: &SolveCache) -> Result<Table> {
    let layout = id.layout();
    let jobs: Vec<(Scenario, BandForm)> = scenarios
        .iter()
        .flat_map(|s| std::iter::once(layout.reference).chain(layout.columns.iter().copied()).map(move |f| (*s, f)))
        .collect();
    jobs.par_iter().for_each(|(s, f)| {
        let _ = cache.solve(s, *f);
    });

    let mut rows = Vec::with_capacity(scenarios.len());
    for scn in scenarios {
        let (phi_i, phi_ii) = phi_pair(scn)?;
        let ratios = layout
            .columns
            .iter()
            .map(|&col| ratio_or_gap(layout.reference, col, scn, cache))
            .collect::<Result<Vec<_>>>()?;
        rows.push(TableRow {
            scenario: *scn,
            confidence: scn.confidence(),
            gamma: scn.gamma,
            n: scn.n,
            s: interval_s(scn),
            phi_i,
            phi_ii,
            ratios,
        });
    }
    Ok(Table { id, layout, rows })
}

/// Tables T2–T4 over [`standard_grid`]. T5 needs the drug-stability
/// scenario; use [`table_for`] with it.
pub fn table(id: TableId, cache: &SolveCache) -> Result<Table> {
    if id == TableId::T5 {
        return Err(MacsError::Data(
            "table T5 is computed from the drug-stability data: external dataset required".into(),
        ));
    }
    let scenarios = standard_grid()
        .iter()
        .map(GridCell::scenario)
        .collect::<Result<Vec<_>>>()?;
    table_for(id, &scenarios, cache)
}

/// `s` for which the Type I fan angle equals `phi` (with `S_xx = 1`, `a = −s`).
pub fn s_for_phi(phi: f64, n: u32) -> f64 {
    (0.5 * phi).tan() / (n as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub phi: f64,
    pub s: f64,
    /// TBEa area over UVa area.
    pub r: Option<f64>,
    pub below_one: bool,
    pub error: Option<String>,
}

/// TBEa/UVa area ratio along a grid of Type I fan angles in `(0, π)`.
/// Output is sorted by `phi` without duplicates.
pub fn ratio_curve(gamma: f64, n: u32, alpha: f64, phi_grid: &[f64], cache: &SolveCache) -> Result<Vec<CurvePoint>> {
    let mut phis: Vec<f64> = phi_grid.to_vec();
    if let Some(bad) = phis.iter().find(|p| !(**p > 0.0 && **p < PI)) {
        return Err(MacsError::Domain(format!("curve angle {bad} outside (0, π)")));
    }
    phis.sort_by(f64::total_cmp);
    phis.dedup();
    let den = BandForm::asymmetric(BandName::UV);
    let num = BandForm::asymmetric(BandName::TBE);
    phis.par_iter()
        .map(|&phi| {
            let s = s_for_phi(phi, n);
            let scn = Scenario::symmetric(alpha, gamma, n, s)?;
            Ok(match ratio(den, num, &scn, cache) {
                Ok(rec) => {
                    let r = rec.r.expect("converged ratio");
                    CurvePoint { phi, s, r: Some(r), below_one: r < 1.0, error: None }
                }
                Err(e) => CurvePoint { phi, s, r: None, below_one: false, error: Some(e.to_string()) },
            })
        })
        .collect()
}

/// `count` evenly spaced angles strictly inside `(lo, hi)`, ends included.
pub fn phi_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![0.5 * (lo + hi)],
        _ => (0..count).map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64).collect(),
    }
}
