//! Deterministic artifact writers: profile CSVs (17 significant digits, LF
//! endings), the summary JSON, and gnuplot-consumable .dat curves.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use sfl_core::{CellFn, FamilyRecord, GridFn, IvpSolution, WeakSolutionReport};

use crate::CliError;

pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Nodal profile: `x,value` rows, one per node.
pub fn write_profile_csv(dir: &Path, stem: &str, u: &GridFn) -> Result<PathBuf, CliError> {
    let mut out = String::from("x,value\n");
    for j in 0..u.grid().nodes() {
        out.push_str(&number(u.grid().node(j)));
        out.push(',');
        out.push_str(&number(u.value(j)));
        out.push('\n');
    }
    let path = dir.join(format!("{stem}.csv"));
    write_file(&path, &out)?;
    Ok(path)
}

/// Cell datum profile: `x,value` rows at cell midpoints.
pub fn write_cells_csv(dir: &Path, stem: &str, g: &CellFn) -> Result<PathBuf, CliError> {
    let mut out = String::from("x,value\n");
    for j in 0..g.grid().cells() {
        out.push_str(&number(g.grid().midpoint(j)));
        out.push(',');
        out.push_str(&number(g.value(j)));
        out.push('\n');
    }
    let path = dir.join(format!("{stem}.csv"));
    write_file(&path, &out)?;
    Ok(path)
}

/// Trajectory with its composition samples: `x,v,phi_of_v` at cell midpoints.
pub fn write_ivp_csv(dir: &Path, stem: &str, sol: &IvpSolution) -> Result<PathBuf, CliError> {
    let grid = sol.v.grid();
    let mids = sol.v.midpoint_values();
    let mut out = String::from("x,v,phi_of_v\n");
    for j in 0..grid.cells() {
        out.push_str(&number(grid.midpoint(j)));
        out.push(',');
        out.push_str(&number(mids[j]));
        out.push(',');
        out.push_str(&number(sol.phi_of_v.value(j)));
        out.push('\n');
    }
    let path = dir.join(format!("{stem}.csv"));
    write_file(&path, &out)?;
    Ok(path)
}

/// Sweep record: `c,endpoint_value,sup_norm,recovered_c`.
pub fn write_sweep_csv(
    dir: &Path,
    stem: &str,
    rows: &[(f64, f64, f64, f64)],
) -> Result<PathBuf, CliError> {
    let mut out = String::from("c,endpoint_value,sup_norm,recovered_c\n");
    for (c, e, s, r) in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            number(*c),
            number(*e),
            number(*s),
            number(*r)
        ));
    }
    let path = dir.join(format!("{stem}.csv"));
    write_file(&path, &out)?;
    Ok(path)
}

/// Two-column gnuplot curve with a header comment naming the columns.
pub fn write_curve_dat(
    dir: &Path,
    scenario: &str,
    curve: &str,
    columns: (&str, &str),
    rows: impl Iterator<Item = (f64, f64)>,
) -> Result<PathBuf, CliError> {
    let mut out = format!("# {} {}\n", columns.0, columns.1);
    for (x, y) in rows {
        out.push_str(&number(x));
        out.push(' ');
        out.push_str(&number(y));
        out.push('\n');
    }
    let path = dir.join(format!("{scenario}__{curve}.dat"));
    write_file(&path, &out)?;
    Ok(path)
}

/// The fan of family profiles plus the critical-constant marker file.
pub fn emit_family_plot_data(
    dir: &Path,
    scenario: &str,
    record: &FamilyRecord,
) -> Result<Vec<PathBuf>, CliError> {
    let mut files = Vec::new();
    for (i, sample) in record.samples.iter().enumerate() {
        let grid = *sample.u.grid();
        files.push(write_curve_dat(
            dir,
            scenario,
            &format!("profile{i}"),
            ("x", "u"),
            (0..grid.nodes()).map(|j| (grid.node(j), sample.u.value(j))),
        )?);
    }
    if let Some(cs) = record.c_star {
        let path = dir.join(format!("{scenario}__cstar.dat"));
        write_file(&path, &format!("# c_star tau\n{} {}\n", number(cs), number(record.tau)))?;
        files.push(path);
    }
    Ok(files)
}

/// Forbidden-region overlay: the trajectory plus the cone lines k (x - x0).
pub fn emit_cone_overlay(
    dir: &Path,
    scenario: &str,
    v: &GridFn,
    ks: &[f64],
) -> Result<Vec<PathBuf>, CliError> {
    let grid = *v.grid();
    let mut files = vec![write_curve_dat(
        dir,
        scenario,
        "v",
        ("x", "v"),
        (0..grid.nodes()).map(|j| (grid.node(j), v.value(j))),
    )?];
    for k in ks {
        files.push(write_curve_dat(
            dir,
            scenario,
            &format!("cone_k{k}"),
            ("x", "kx"),
            (0..grid.nodes()).map(|j| (grid.node(j), k * grid.node(j))),
        )?);
    }
    Ok(files)
}

pub fn report_json(report: &WeakSolutionReport) -> serde_json::Value {
    serde_json::json!({
        "residual_sup": report.residual_sup,
        "recovered_c": report.recovered_c,
        "energy_gap": report.energy_gap,
        "apriori_ratio_h1": report.apriori_ratio_h1,
        "apriori_ratio_sup": report.apriori_ratio_sup,
        "chain_rule_gap": report.chain_rule_gap,
        "membership": report.membership,
        "verdict": report.verdict,
        "residual_cells_skipped": report.residual_cells_skipped,
        "tolerances": {
            "residual": report.tolerances.residual,
            "energy": report.tolerances.energy,
            "ratio_slack": report.tolerances.ratio_slack,
            "holder_floor": report.tolerances.holder_floor,
        },
    })
}

pub fn write_summary(dir: &Path, summary: &serde_json::Value) -> Result<PathBuf, CliError> {
    let path = dir.join("summary.json");
    let mut text = serde_json::to_string_pretty(summary)
        .map_err(|e| CliError::numeric_msg(format!("summary serialization: {e}")))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Stdout line unless quieted.
pub fn note(quiet: bool, msg: &str) {
    if !quiet {
        let mut stdout = std::io::stdout();
        let _ = writeln!(stdout, "{msg}");
    }
}
