//! Subcommand implementations. Each returns `Ok(false)` when it ran but a
//! check failed, so `main` can map that to a non-zero exit.

use anyhow::{bail, Context, Result};
use macs::comparison::{phi_grid, standard_grid};
use macs::coverage::CoverageOptions;
use macs::regression_bands::{band_at, fit, threshold_crossings, BandCurve, Dataset, FitResult};
use macs::{
    mc_coverage, mc_region_area, ratio_curve, region_area, table, table_for, zeta_angles, BandForm, BandName,
    CaseTag, CoverageModel, CriticalConstants, McConfig, Scenario, SolveCache, Solver, SolverOptions, TableId,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::output::{output_path, render_table, sig6, write_csv, write_json, Manifest};
use crate::{Command, CurveArgs, DataArgs, ExpiryArgs, Format, SolveArgs, Suite, TableArgs, ValidateArgs};

pub fn run(cmd: Command) -> Result<bool> {
    match cmd {
        Command::Solve(a) => solve(a),
        Command::Table(a) => table_cmd(a),
        Command::Curve(a) => curve(a),
        Command::Expiry(a) => expiry(a),
        Command::Validate(a) => validate(a),
    }
}

fn solver_options(tol: f64) -> Result<SolverOptions> {
    if !(tol > 0.0 && tol < 1e-2) {
        bail!("--tol must lie in (0, 0.01), got {tol}");
    }
    Ok(SolverOptions {
        coverage: CoverageOptions::with_tolerance(tol),
        ..SolverOptions::default()
    })
}

fn tolerances_json(opts: &SolverOptions) -> serde_json::Value {
    json!({
        "coverage_outer": opts.coverage.outer.abs_tol,
        "coverage_inner": opts.coverage.inner.abs_tol,
        "constants": opts.c_tol,
        "minimizer": opts.min_tol,
    })
}

fn solve(args: SolveArgs) -> Result<bool> {
    let scn = match args.s {
        Some(s) => Scenario::symmetric(args.alpha, args.gamma, args.n, s)?,
        None => Scenario::new(
            args.alpha,
            args.gamma,
            args.n,
            0.0,
            args.sxx.expect("clap enforces --sxx"),
            args.a.expect("clap enforces --a"),
            args.b.expect("clap enforces --b"),
        )?,
    };
    let form = BandForm {
        symmetric: args.band.symmetric && !args.asymmetric,
        ..args.band
    };
    let sol = Solver::with_options(&scn, form, solver_options(args.tol.tol)?)?.solve()?;

    let mc = if args.mc_check {
        let cfg = McConfig::new(args.draws, args.seed)?;
        Some(mc_coverage(&sol.constants, &scn, form, &cfg)?)
    } else {
        None
    };
    let mc_ok = mc.is_none_or(|m| m.z_score(scn.confidence()) < 3.5);

    if args.json {
        let doc = json!({
            "band": form.label(),
            "scenario": scn,
            "c1": sol.constants.c1,
            "c2": sol.constants.c2,
            "coverage": sol.coverage,
            "area_rv": sol.area.area_rv,
            "area_ct": sol.area.area_ct,
            "case": sol.geometry.case_tag,
            "mc_check": mc.map(|m| json!({
                "seed": args.seed, "draws": m.draws, "estimate": m.estimate,
                "std_error": m.std_error, "within_3_5_se": mc_ok,
            })),
        });
        println!("{}", serde_json::to_string_pretty(&crate::output::round_json(doc))?);
    } else {
        println!("band      {}", form.label());
        println!("c1        {}", sig6(sol.constants.c1));
        println!("c2        {}", sig6(sol.constants.c2));
        println!("coverage  {}", sig6(sol.coverage));
        println!("area_rv   {}", sig6(sol.area.area_rv));
        println!("area_ct   {}", sig6(sol.area.area_ct));
        println!("case      {:?}", sol.geometry.case_tag);
        if let Some(m) = mc {
            println!(
                "mc        {} ± {} (seed {}, {} draws) {}",
                sig6(m.estimate),
                sig6(m.std_error),
                args.seed,
                m.draws,
                if mc_ok { "ok" } else { "MISMATCH" }
            );
        }
    }
    Ok(mc_ok)
}

fn load_fit(data: &DataArgs) -> Result<(Dataset, FitResult)> {
    if !data.data.exists() {
        bail!(
            "external dataset required: {} not found (set --data or MACS_DRUG_DATA)",
            data.data.display()
        );
    }
    let ds = Dataset::from_path(&data.data).with_context(|| format!("reading {}", data.data.display()))?;
    let f = fit(&ds)?;
    Ok((ds, f))
}

fn data_scenario(data: &DataArgs, f: &FitResult) -> Result<Scenario> {
    let [lo, hi] = data.x_range[..] else {
        bail!("--x-range takes two values");
    };
    Ok(f.scenario(data.alpha, data.gamma, lo, hi)?)
}

fn table_cmd(args: TableArgs) -> Result<bool> {
    let opts = solver_options(args.tol.tol)?;
    let cache = SolveCache::with_options(opts);
    let (tab, grid) = if args.id == TableId::T5 {
        let (_, f) = load_fit(&args.data)?;
        let scn = data_scenario(&args.data, &f)?;
        (table_for(TableId::T5, &[scn], &cache)?, json!({ "data": args.data.data, "scenario": scn }))
    } else {
        (table(args.id, &cache)?, json!({ "cells": standard_grid() }))
    };
    let header = tab.header();
    let rows = tab.formatted_rows();
    println!("{}", render_table(&header, &rows));

    let manifest = Manifest::new(format!("table --id {}", args.id), None, tolerances_json(&opts), grid);
    let stem = format!("table_{}", args.id);
    if matches!(args.format, Format::Csv | Format::Both) {
        write_csv(&output_path(&args.out_dir, &stem, "csv")?, &manifest, &header, &rows)?;
    }
    if matches!(args.format, Format::Json | Format::Both) {
        write_json(&output_path(&args.out_dir, &stem, "json")?, &manifest, &tab)?;
    }
    let failures: Vec<_> = tab.records().filter_map(|r| r.error.as_deref()).collect();
    for f in &failures {
        eprintln!("cell failed: {f}");
    }
    Ok(failures.is_empty())
}

fn curve(args: CurveArgs) -> Result<bool> {
    let opts = solver_options(args.tol.tol)?;
    let cache = SolveCache::with_options(opts);
    if !(args.phi_min > 0.0 && args.phi_max < std::f64::consts::PI && args.phi_min < args.phi_max) {
        bail!("need 0 < --phi-min < --phi-max < π");
    }
    let grid = phi_grid(args.phi_min, args.phi_max, args.points);
    let header: Vec<String> = ["1-alpha", "phi", "s", "r_TBEa_over_UVa", "below_one"].map(String::from).into();
    let mut rows = Vec::new();
    let mut all_ok = true;
    for &alpha in &args.alpha {
        let pts = ratio_curve(args.gamma, args.n, alpha, &grid, &cache)?;
        let below: Vec<f64> = pts.iter().filter(|p| p.below_one).map(|p| p.phi).collect();
        match below.first() {
            Some(first) => println!("1-alpha = {}: r < 1 from phi = {first:.3} ({} of {} points)", 1.0 - alpha, below.len(), pts.len()),
            None => println!("1-alpha = {}: r >= 1 everywhere on the grid", 1.0 - alpha),
        }
        for p in &pts {
            if let Some(e) = &p.error {
                eprintln!("phi = {}: {e}", p.phi);
                all_ok = false;
            }
            rows.push(vec![
                format!("{}", 1.0 - alpha),
                sig6(p.phi),
                sig6(p.s),
                p.r.map_or_else(String::new, sig6),
                p.below_one.to_string(),
            ]);
        }
    }
    let manifest = Manifest::new(
        format!("curve --gamma {} --n {}", args.gamma, args.n),
        None,
        tolerances_json(&opts),
        json!({ "alpha": args.alpha, "phi": grid }),
    );
    let stem = format!("curve_gamma{}_n{}", args.gamma, args.n);
    write_csv(&output_path(&args.out_dir, &stem, "csv")?, &manifest, &header, &rows)?;
    Ok(all_ok)
}

fn expiry(args: ExpiryArgs) -> Result<bool> {
    let opts = solver_options(args.tol.tol)?;
    let (ds, f) = load_fit(&args.data)?;
    let scn = data_scenario(&args.data, &f)?;
    let sol = Solver::with_options(&scn, args.band, opts)?.solve()?;
    let curve = BandCurve::from_solution(&sol)?;
    let cross = threshold_crossings(args.h, &f, &curve);

    if args.json {
        let doc = json!({ "fit": f, "band": args.band.label(), "c1": sol.constants.c1, "c2": sol.constants.c2,
                          "coverage": sol.coverage, "h": args.h, "crossings": cross });
        println!("{}", serde_json::to_string_pretty(&crate::output::round_json(doc))?);
    } else {
        println!("n = {}, x̄ = {}, fit y = {} + {}(x − x̄), R² = {}, σ̂ = {}",
            f.n, sig6(f.x_bar), sig6(f.beta0_hat), sig6(f.beta1_hat), sig6(f.r_squared), sig6(f.sigma_hat));
        println!("{} constants (c1, c2) = ({}, {}), coverage {}",
            args.band.label(), sig6(sol.constants.c1), sig6(sol.constants.c2), sig6(sol.coverage));
        let pct = 100.0 * (1.0 - scn.gamma);
        match (cross.lower, cross.upper) {
            (Some(lo), Some(hi)) => {
                println!("crossings of h = {}: lower band at x = {lo:.3}, upper band at x = {hi:.3}", args.h);
                println!(
                    "With confidence {}, at least {pct}% of units exceed h before x = {lo:.3}, fewer than {pct}% do after x = {hi:.3}; the percentile line reaches h somewhere in ({lo:.3}, {hi:.3}).",
                    1.0 - scn.alpha
                );
            }
            (lo, hi) => println!(
                "crossings of h = {}: lower band {}, upper band {}",
                args.h,
                lo.map_or("none".into(), |x| format!("{x:.3}")),
                hi.map_or("none".into(), |x| format!("{x:.3}"))
            ),
        }
    }
    if let Some(path) = &args.out {
        let (lo, hi) = curve.x_range();
        let rows: Vec<Vec<String>> = (0..=200)
            .map(|i| {
                let x = lo + (hi - lo) * i as f64 / 200.0;
                let (l, u) = band_at(x, &f, &curve)?;
                Ok(vec![sig6(x), sig6(l), sig6(u)])
            })
            .collect::<macs::Result<_>>()?;
        let manifest = Manifest::new(
            format!("expiry --band {} --h {}", args.band.label(), args.h),
            None,
            tolerances_json(&opts),
            json!({ "data": args.data.data, "rows": ds.len(), "x_range": args.data.x_range }),
        );
        write_csv(path, &manifest, &["x".into(), "lower".into(), "upper".into()], &rows)?;
    }
    Ok(true)
}

fn validate(args: ValidateArgs) -> Result<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let mut failures = 0usize;
    let mut report = |label: String, ok: bool| {
        println!("{} {label}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };
    match args.suite {
        Suite::Density => {
            for name in BandName::ALL {
                for gamma in [0.05, 0.5, 0.75, 0.95] {
                    for n in [5, 10, 100] {
                        let scn = Scenario::symmetric(0.05, gamma, n, 1.0)?;
                        let mass = CoverageModel::new(&scn, BandForm::symmetric(name))?.total_mass()?;
                        report(format!("{name:?} gamma={gamma} n={n}: mass {mass:.12}"), (mass - 1.0).abs() < 1e-6);
                    }
                }
            }
        }
        Suite::Areas => {
            let cfg = |i: usize| McConfig::new(args.draws, args.seed.wrapping_add(i as u64));
            for i in 0..args.cases {
                let cc = CriticalConstants::new(rng.random_range(0.5..5.0), rng.random_range(0.5..5.0))?;
                let phi1 = rng.random_range(0.05..1.55);
                let phi2 = rng.random_range(0.05..1.55);
                let geo = zeta_angles(&cc, phi1 + phi2, phi1, phi2)?;
                let exact = region_area(&cc, &geo);
                let est = mc_region_area(&cc, &geo, &cfg(i)?)?;
                let tag: CaseTag = geo.case_tag;
                report(
                    format!("case {i} {tag:?}: closed form {} mc {} ± {}", sig6(exact), sig6(est.estimate), sig6(est.std_error)),
                    est.z_score(exact) < 3.5,
                );
            }
        }
        Suite::Coverage => {
            for i in 0..args.cases {
                let name = BandName::ALL[rng.random_range(0..6)];
                let form = BandForm { name, symmetric: rng.random_bool(0.5) };
                let gamma = rng.random_range(0.05..0.95);
                let n = rng.random_range(5..60u32);
                let s = 10f64.powf(rng.random_range(-1.0..1.0));
                let scn = Scenario::symmetric(0.05, gamma, n, s)?;
                let cc = CriticalConstants::new(rng.random_range(1.5..4.5), rng.random_range(1.5..4.5))?;
                let exact = CoverageModel::new(&scn, form)?.coverage(&cc)?;
                let est = mc_coverage(&cc, &scn, form, &McConfig::new(args.draws, args.seed.wrapping_add(i as u64))?)?;
                report(
                    format!(
                        "case {i} {form} gamma={gamma:.3} n={n} s={s:.3} c=({:.3}, {:.3}): {} vs mc {} ± {}",
                        cc.c1, cc.c2, sig6(exact), sig6(est.estimate), sig6(est.std_error)
                    ),
                    est.z_score(exact) < 3.5,
                );
            }
        }
    }
    println!("{failures} failure(s)");
    Ok(failures == 0)
}
