//! Scenario runner for the singular-problem laboratory: parses a TOML
//! scenario, orchestrates the core solvers, and writes reproducible CSV/JSON
//! artifacts plus gnuplot-ready curves. Everything is deterministic: running
//! the same scenario twice produces byte-identical outputs.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use config::{Kind, Scenario};
use output::{note, number};
use serde_json::json;
use sfl_core as core;
use sfl_core::{
    classify_limit, derive_datum, find_c_star, forbidden_cone_check,
    instability_schedule, power_seam_solution, recover_constant_c, solve_bvp_newton,
    solve_regularized_bvp, stability_datum, sweep_family, tail_fix, weak_solution_report,
    CStarOutcome, GridFn, LimitRunEntry, RootSide,
};

/// Exit codes: 0 success, 1 numeric failure, 2 verification failure,
/// 3 unexpected no-solution outcome, 64 configuration error.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(PathBuf, std::io::Error),
    Numeric(String),
    Verification(String),
    NoSolution(String),
}

impl CliError {
    pub fn config<S: Into<String>>(msg: S) -> Self {
        CliError::Config(msg.into())
    }

    pub fn config_from<E: std::fmt::Display>(e: E) -> Self {
        CliError::Config(e.to_string())
    }

    pub fn numeric(e: core::Error) -> Self {
        CliError::Numeric(e.to_string())
    }

    pub fn numeric_msg<S: Into<String>>(msg: S) -> Self {
        CliError::Numeric(msg.into())
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Io(path.to_path_buf(), e)
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 64,
            CliError::Io(..) => 1,
            CliError::Numeric(_) => 1,
            CliError::Verification(_) => 2,
            CliError::NoSolution(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(p, e) => write!(f, "io error at {}: {e}", p.display()),
            CliError::Numeric(m) => write!(f, "numeric error: {m}"),
            CliError::Verification(m) => write!(f, "verification failure: {m}"),
            CliError::NoSolution(m) => write!(f, "no solution: {m}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out_dir: PathBuf,
    pub grid_n: Option<usize>,
    pub quiet: bool,
}

/// Run one scenario file; returns the summary path. The `kind` given on the
/// command line must match the scenario's own.
pub fn run_scenario(kind: Kind, config_path: &Path, opts: &RunOptions) -> Result<PathBuf, CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", config_path.display())))?;
    let scenario = Scenario::parse(&text)?;
    if scenario.kind != kind {
        return Err(CliError::config(format!(
            "scenario file declares kind `{}` but `{}` was requested",
            scenario.kind.as_str(),
            kind.as_str()
        )));
    }
    output::ensure_dir(&opts.out_dir)?;
    let summary = match kind {
        Kind::SolveIvp => run_solve_ivp(&scenario, opts),
        Kind::SolveBvp => run_solve_bvp(&scenario, opts),
        Kind::SweepC => run_sweep(&scenario, opts),
        Kind::FindCstar => run_find_cstar(&scenario, opts),
        Kind::Construct => run_construct(&scenario, opts, false),
        Kind::Verify => run_construct(&scenario, opts, true),
        Kind::TailFix => run_tail_fix(&scenario, opts),
        Kind::Alternative => run_alternative(&scenario, opts),
        Kind::Stability => run_stability(&scenario, opts),
        Kind::Instability => run_instability(&scenario, opts),
    }?;
    output::write_summary(&opts.out_dir, &summary)
}

fn run_solve_ivp(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let phi = sc.phi()?;
    let a = sc.coefficient(&grid)?;
    let g = sc.datum(&grid)?;
    let h = g.map(|v| v + sc.params.c).map_err(CliError::numeric)?;
    let sol = core::solve_ivp(&a, &h, &phi, &sc.tolerances.ladder()).map_err(CliError::numeric)?;
    output::write_ivp_csv(&opts.out_dir, &format!("{}__v", sc.name), &sol)?;
    output::write_profile_csv(&opts.out_dir, &format!("{}__v_nodes", sc.name), &sol.v)?;
    let mut cones = Vec::new();
    if !sc.params.cone_ks.is_empty() {
        output::emit_cone_overlay(&opts.out_dir, &sc.name, &sol.v, &sc.params.cone_ks)?;
        for k in &sc.params.cone_ks {
            let check = forbidden_cone_check(&sol.v, 0, *k).map_err(CliError::numeric)?;
            cones.push(json!({ "k": k, "delta": check.delta }));
        }
    }
    note(
        opts.quiet,
        &format!(
            "{}: v(L) = {}, sup = {}",
            sc.name,
            number(sol.endpoint()),
            number(sol.v.sup_norm())
        ),
    );
    Ok(json!({
        "scenario": sc.name,
        "kind": "solve-ivp",
        "grid_n": grid.cells(),
        "endpoint": sol.endpoint(),
        "sup_norm": sol.v.sup_norm(),
        "positivity_certificate": sol.positivity_certificate,
        "phi_l2_estimate": sol.phi_l2_estimate,
        "ladder_trace": sol.ladder_trace,
        "forbidden_cones": cones,
    }))
}

fn bounded_member(sc: &Scenario) -> Result<core::Nonlinearity, CliError> {
    let phi = sc.phi()?;
    let phi_n = match (&sc.family, sc.params.member_index) {
        (Some(f), Some(idx)) => f.build(phi)?.member(idx).map_err(CliError::config_from)?,
        (None, Some(_)) => {
            return Err(CliError::config(
                "member_index given without a [family] table",
            ));
        }
        _ => phi,
    };
    if !phi_n.sup_abs().is_finite() {
        return Err(CliError::config(
            "solve-bvp needs a bounded nonlinearity (give a [family] and member_index)",
        ));
    }
    Ok(phi_n)
}

fn run_solve_bvp(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let phi_n = bounded_member(sc)?;
    let a = sc.coefficient(&grid)?;
    let g = sc.datum(&grid)?;
    let settings = sc.tolerances.bvp()?;
    let out = solve_regularized_bvp(&a, &g, &phi_n, &settings).map_err(CliError::numeric)?;
    output::write_curve_dat(
        &opts.out_dir,
        &sc.name,
        "endpointmap",
        ("c", "endpoint"),
        out.endpoint_samples.iter().cloned(),
    )?;
    let mut roots = Vec::new();
    for (i, sol) in out.solutions.iter().enumerate() {
        output::write_profile_csv(&opts.out_dir, &format!("{}__root{i}", sc.name), &sol.u)?;
        roots.push(json!({
            "c": sol.c,
            "sup_norm": sol.u.sup_norm(),
            "endpoint_residue": sol.endpoint_residue,
            "newton_polished": sol.newton_polished,
        }));
    }
    note(
        opts.quiet,
        &format!("{}: {} root(s) in the bracket", sc.name, out.solutions.len()),
    );
    Ok(json!({
        "scenario": sc.name,
        "kind": "solve-bvp",
        "grid_n": grid.cells(),
        "bracket": [out.bracket.0, out.bracket.1],
        "cross_check_distance": out.cross_check_distance,
        "no_root_in_bracket": out.solutions.is_empty(),
        "roots": roots,
    }))
}

/// The datum to search/sweep with: explicit [data] g, or derived from the
/// seam profile when one is given instead (the constructed good data).
fn datum_or_derived(
    sc: &Scenario,
    grid: &core::Grid,
    a: &core::CellFn,
    phi: &core::Nonlinearity,
) -> Result<core::CellFn, CliError> {
    if sc.data.g.is_some() {
        return sc.datum(grid);
    }
    let seam = sc.seam()?;
    let w = power_seam_solution(&seam, grid).map_err(CliError::numeric)?;
    derive_datum(a, &w, phi, sc.params.c).map_err(CliError::numeric)
}

fn run_find_cstar(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let phi = sc.phi()?;
    let a = sc.coefficient(&grid)?;
    let g = datum_or_derived(sc, &grid, &a, &phi)?;
    let bracket = sc
        .params
        .bracket
        .ok_or_else(|| CliError::config("find-cstar needs params.bracket = [lo, hi]"))?;
    let settings = sc.tolerances.bvp()?;
    let outcome = find_c_star(&a, &g, &phi, (bracket[0], bracket[1]), &settings)
        .map_err(CliError::numeric)?;
    match outcome {
        CStarOutcome::Found {
            c_star,
            width,
            upper_bound,
            bound_satisfied,
            endpoint_at_cstar,
            tau,
        } => {
            let path = opts.out_dir.join(format!("{}__cstar.dat", sc.name));
            std::fs::write(
                &path,
                format!("# c_star tau\n{} {}\n", number(c_star), number(tau)),
            )
            .map_err(|e| CliError::io(&path, e))?;
            note(opts.quiet, &format!("{}: c* = {}", sc.name, number(c_star)));
            Ok(json!({
                "scenario": sc.name,
                "kind": "find-cstar",
                "grid_n": grid.cells(),
                "c_star": c_star,
                "width": width,
                "upper_bound": upper_bound,
                "bound_satisfied": bound_satisfied,
                "endpoint_at_cstar": endpoint_at_cstar,
                "tau": tau,
            }))
        }
        CStarOutcome::NoSolution {
            endpoint_at_lo,
            tau,
            bracket,
        } => {
            let summary = json!({
                "scenario": sc.name,
                "kind": "find-cstar",
                "grid_n": grid.cells(),
                "c_star": null,
                "no_solution": true,
                "endpoint_at_bracket_low": endpoint_at_lo,
                "tau": tau,
                "bracket": [bracket.0, bracket.1],
            });
            if sc.params.expect_solution {
                // still record the outcome before signalling
                output::write_summary(&opts.out_dir, &summary)?;
                return Err(CliError::NoSolution(format!(
                    "no admissible constant in [{}, {}]",
                    bracket.0, bracket.1
                )));
            }
            note(opts.quiet, &format!("{}: no critical constant", sc.name));
            Ok(summary)
        }
    }
}

fn run_sweep(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let phi = sc.phi()?;
    let a = sc.coefficient(&grid)?;
    let g = datum_or_derived(sc, &grid, &a, &phi)?;
    let settings = sc.tolerances.bvp()?;
    if sc.params.c_list.is_empty() {
        return Err(CliError::config("sweep-c needs a non-empty params.c_list"));
    }

    let c_star = if sc.params.relative_to_cstar {
        let bracket = sc
            .params
            .bracket
            .ok_or_else(|| CliError::config("relative sweeps need params.bracket"))?;
        match find_c_star(&a, &g, &phi, (bracket[0], bracket[1]), &settings)
            .map_err(CliError::numeric)?
        {
            CStarOutcome::Found { c_star, .. } => Some(c_star),
            CStarOutcome::NoSolution { tau, .. } => {
                // empty sweep: no curve files, the summary says why
                note(opts.quiet, &format!("{}: empty sweep (no c*)", sc.name));
                let summary = json!({
                    "scenario": sc.name,
                    "kind": "sweep-c",
                    "grid_n": grid.cells(),
                    "no_solution": true,
                    "tau": tau,
                    "samples": [],
                });
                if sc.params.expect_solution {
                    output::write_summary(&opts.out_dir, &summary)?;
                    return Err(CliError::NoSolution("no critical constant to sweep from".into()));
                }
                return Ok(summary);
            }
        }
    } else {
        None
    };

    let c_list: Vec<f64> = match c_star {
        Some(cs) => sc.params.c_list.iter().map(|d| cs + d).collect(),
        None => sc.params.c_list.clone(),
    };
    let record =
        sweep_family(&a, &g, &phi, &c_list, c_star, &settings).map_err(CliError::numeric)?;

    let mut rows = Vec::new();
    let mut samples = Vec::new();
    for (i, sample) in record.samples.iter().enumerate() {
        let mut pinned = sample.u.clone();
        pinned.set_value(grid.cells(), 0.0);
        pinned.set_value(0, 0.0);
        let recovered = recover_constant_c(&a, &pinned, &g, &phi).ok();
        rows.push((
            sample.c,
            sample.endpoint,
            sample.sup_norm,
            recovered.unwrap_or(f64::NAN),
        ));
        output::write_profile_csv(&opts.out_dir, &format!("{}__c{i}", sc.name), &sample.u)?;
        samples.push(json!({
            "c": sample.c,
            "endpoint": sample.endpoint,
            "sup_norm": sample.sup_norm,
            "recovered_c": recovered,
        }));
    }
    output::write_sweep_csv(&opts.out_dir, &format!("{}__sweep", sc.name), &rows)?;
    output::emit_family_plot_data(&opts.out_dir, &sc.name, &record)?;
    note(
        opts.quiet,
        &format!(
            "{}: swept {} constants, ordering {}",
            sc.name,
            record.samples.len(),
            record.ordering_verdict
        ),
    );
    Ok(json!({
        "scenario": sc.name,
        "kind": "sweep-c",
        "grid_n": grid.cells(),
        "c_star": record.c_star,
        "ordering_verdict": record.ordering_verdict,
        "sup_trend_ok": record.trend_ok,
        "endpoint_monotone": record.endpoint_monotone,
        "endpoints_below_tau": record.endpoints_below_tau,
        "tau": record.tau,
        "samples": samples,
    }))
}

fn construct_pair(
    sc: &Scenario,
    grid: &core::Grid,
) -> Result<(core::Nonlinearity, core::CellFn, GridFn, core::CellFn), CliError> {
    let seam = sc.seam()?;
    let phi = match &sc.phi {
        Some(p) => p.build()?,
        None => core::Nonlinearity::power(1.0, seam.gamma).map_err(CliError::config_from)?,
    };
    let a = sc.coefficient(grid)?;
    let w = power_seam_solution(&seam, grid).map_err(CliError::numeric)?;
    let g = derive_datum(&a, &w, &phi, sc.params.c).map_err(CliError::numeric)?;
    Ok((phi, a, w, g))
}

fn run_construct(
    sc: &Scenario,
    opts: &RunOptions,
    verify_only: bool,
) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let (phi, a, w, mut g) = construct_pair(sc, &grid)?;
    if verify_only && sc.data.g.is_some() {
        // verify an explicitly supplied datum against the seam profile
        g = sc.datum(&grid)?;
    }
    if !verify_only {
        output::write_profile_csv(&opts.out_dir, &format!("{}__u", sc.name), &w)?;
        output::write_cells_csv(&opts.out_dir, &format!("{}__g", sc.name), &g)?;
    }
    let report = weak_solution_report(&a, &w, &g, &phi).map_err(CliError::numeric)?;
    let summary = json!({
        "scenario": sc.name,
        "kind": if verify_only { "verify" } else { "construct" },
        "grid_n": grid.cells(),
        "injected_c": sc.params.c,
        "report": output::report_json(&report),
    });
    note(
        opts.quiet,
        &format!("{}: verdict {}", sc.name, report.verdict),
    );
    if !report.verdict {
        output::write_summary(&opts.out_dir, &summary)?;
        return Err(CliError::Verification(format!(
            "weak-solution report failed (residual {}, energy {})",
            number(report.residual_sup),
            number(report.energy_gap)
        )));
    }
    Ok(summary)
}

fn run_tail_fix(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let phi = sc.phi()?;
    let a = sc.coefficient(&grid)?;
    let g = sc.datum(&grid)?;
    let delta = sc
        .params
        .delta
        .ok_or_else(|| CliError::config("tail-fix needs params.delta"))?;
    let fix = tail_fix(&a, &g, &phi, delta, &sc.tolerances.ladder()).map_err(CliError::numeric)?;
    output::write_profile_csv(&opts.out_dir, &format!("{}__u_hat", sc.name), &fix.u_hat)?;
    output::write_cells_csv(&opts.out_dir, &format!("{}__g_hat", sc.name), &fix.g_hat)?;
    let report =
        weak_solution_report(&a, &fix.u_hat, &fix.g_hat, &phi).map_err(CliError::numeric)?;
    let tail_cells = grid.cells() / 10;
    let tail_min = fix.g_hat.values()[grid.cells() - tail_cells..]
        .iter()
        .fold(f64::INFINITY, |m, v| m.min(*v));
    let summary = json!({
        "scenario": sc.name,
        "kind": "tail-fix",
        "grid_n": grid.cells(),
        "delta_used": fix.delta_used,
        "splice_value": fix.splice_value,
        "bridge_rate": fix.rate,
        "tail_datum_min": tail_min,
        "report": output::report_json(&report),
    });
    note(
        opts.quiet,
        &format!(
            "{}: delta = {}, verdict {}",
            sc.name,
            number(fix.delta_used),
            report.verdict
        ),
    );
    if !report.verdict {
        output::write_summary(&opts.out_dir, &summary)?;
        return Err(CliError::Verification(
            "tail-fixed pair failed its weak-solution report".into(),
        ));
    }
    Ok(summary)
}

fn run_alternative(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let phi = sc.phi()?;
    let a = sc.coefficient(&grid)?;
    let g = sc.datum(&grid)?;
    let family = sc
        .family
        .as_ref()
        .ok_or_else(|| CliError::config("alternative needs a [family] table"))?
        .build(phi)?;
    // washing-run conventions: raw shooting on the nonnegative branch
    let mut settings = sc.tolerances.bvp()?;
    settings.polish = false;
    settings.root_side = RootSide::Nonnegative;

    let mut entries = Vec::new();
    let mut rows = Vec::new();
    for (n, member) in family.members().map_err(CliError::numeric)? {
        let out = solve_regularized_bvp(&a, &g, &member, &settings).map_err(CliError::numeric)?;
        let sol = out.solutions.first().ok_or_else(|| {
            CliError::Numeric(format!("no regularized solution at index {n}"))
        })?;
        let entry = LimitRunEntry::from_solution(n, sol, &member);
        rows.push(json!({
            "index": entry.index,
            "sup_norm": entry.sup_norm,
            "c": entry.c,
            "min_phi": entry.min_phi,
            "phi_l2": entry.phi_l2,
        }));
        entries.push(entry);
    }
    let evidence = classify_limit(&entries).map_err(CliError::numeric)?;
    output::write_curve_dat(
        &opts.out_dir,
        &sc.name,
        "sup_trend",
        ("index", "sup_norm"),
        entries.iter().map(|e| (e.index, e.sup_norm)),
    )?;
    let verdict = format!("{:?}", evidence.class);
    note(opts.quiet, &format!("{}: {}", sc.name, verdict));
    Ok(json!({
        "scenario": sc.name,
        "kind": "alternative",
        "grid_n": grid.cells(),
        "verdict": verdict,
        "sup_change": evidence.sup_change,
        "c_change": evidence.c_change,
        "min_phi_change": evidence.min_phi_change,
        "phi_l2_change": evidence.phi_l2_change,
        "run": rows,
    }))
}

fn run_stability(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let (phi, a, u0, g) = construct_pair(sc, &grid)?;
    let family = sc
        .family
        .as_ref()
        .ok_or_else(|| CliError::config("stability needs a [family] table"))?
        .build(phi.clone())?;
    let mut schedule = Vec::new();
    for (n, member) in family.members().map_err(CliError::numeric)? {
        let g_n = stability_datum(&g, &phi, &member, &u0).map_err(CliError::numeric)?;
        let sol =
            solve_bvp_newton(&a, &g_n, &member, Some((&u0, sc.params.c))).map_err(CliError::numeric)?;
        let distance = sol.u.sup_distance(&u0);
        let datum_gap = g_n.zip(&g, |p, q| p - q).map_err(CliError::numeric)?.l2();
        schedule.push(json!({
            "index": n,
            "sup_distance": distance,
            "datum_l2_gap": datum_gap,
            "c": sol.c,
        }));
    }
    note(opts.quiet, &format!("{}: {} stability runs", sc.name, schedule.len()));
    Ok(json!({
        "scenario": sc.name,
        "kind": "stability",
        "grid_n": grid.cells(),
        "injected_c": sc.params.c,
        "schedule": schedule,
    }))
}

fn run_instability(sc: &Scenario, opts: &RunOptions) -> Result<serde_json::Value, CliError> {
    let grid = sc.grid(opts.grid_n)?;
    let (phi, a, _u0, g) = construct_pair(sc, &grid)?;
    let family = sc
        .family
        .as_ref()
        .ok_or_else(|| CliError::config("instability needs a [family] table"))?
        .build(phi)?;
    if sc.params.eps.is_empty() || sc.params.clamp_levels.len() != sc.params.eps.len() {
        return Err(CliError::config(
            "instability needs matching params.eps and params.clamp_levels",
        ));
    }
    let g_bar: Result<Vec<_>, _> = sc
        .params
        .clamp_levels
        .iter()
        .map(|m| core::clamp_datum(&g, *m))
        .collect();
    let g_bar = g_bar.map_err(CliError::numeric)?;
    let out =
        instability_schedule(&g_bar, &family, &sc.params.eps, &a).map_err(CliError::numeric)?;
    let evidence = classify_limit(&out.diagonal).map_err(CliError::numeric)?;
    let entries: Vec<_> = out
        .entries
        .iter()
        .map(|e| {
            json!({
                "n": e.n,
                "eps": e.eps,
                "k_star": e.k_star,
                "k_bar": e.k_bar,
                "l2": e.l2,
            })
        })
        .collect();
    let verdict = format!("{:?}", evidence.class);
    note(opts.quiet, &format!("{}: diagonal classifies {}", sc.name, verdict));
    Ok(json!({
        "scenario": sc.name,
        "kind": "instability",
        "grid_n": grid.cells(),
        "entries": entries,
        "budget_exceeded": out.entries.iter().filter(|e| e.k_star.is_none()).count(),
        "diagonal_verdict": verdict,
    }))
}
