//! The singular Cauchy problem a v' = phi(v) + h, v(0) = 0, solved through a
//! ladder of bounded regularizations (truncate the value, cap the argument),
//! each level integrated cell by cell.

pub(crate) mod step;

use crate::error::{Error, Result};
use crate::grid::{CellFn, Grid, GridFn};
use crate::nonlinearity::psi::PreparedPhi;
use crate::nonlinearity::Nonlinearity;
pub(crate) use step::StepPolicy;

/// Ladder configuration. Truncation heights grow as 4^k and argument caps as
/// 2^k times the a priori sup estimate.
#[derive(Clone, Copy, Debug)]
pub struct LadderSettings {
    pub depth: usize,
    /// Stop early once consecutive levels agree to this relative tolerance.
    pub settle_tol: f64,
}

impl Default for LadderSettings {
    fn default() -> Self {
        LadderSettings {
            depth: 8,
            settle_tol: 1e-12,
        }
    }
}

/// Solution of the initial-value problem with its diagnostics.
#[derive(Clone, Debug)]
pub struct IvpSolution {
    pub v: GridFn,
    /// phi evaluated at the chord midpoints of v (the true phi, not a ladder
    /// member).
    pub phi_of_v: CellFn,
    /// (truncation height of level k, sup distance between levels k and k+1).
    pub ladder_trace: Vec<(f64, f64)>,
    /// All interior nodes strictly positive.
    pub positivity_certificate: bool,
    /// Discrete surrogate of |phi(v)|_{L^2}.
    pub phi_l2_estimate: f64,
}

impl IvpSolution {
    pub fn endpoint(&self) -> f64 {
        self.v.last()
    }
}

/// Solve the singular IVP with nodal values tracking the true solution (the
/// exact frozen-flow step takes over inside |v| < sqrt(dx)).
pub fn solve_ivp(
    a: &CellFn,
    h: &CellFn,
    phi: &Nonlinearity,
    ladder: &LadderSettings,
) -> Result<IvpSolution> {
    solve_ivp_policy(a, h, phi, ladder, StepPolicy::Accurate)
}

/// Same ladder, but every cell satisfies the single implicit chord relation,
/// which makes the discrete energy identity of the output exact. The
/// two-point solvers use this policy for everything they return.
pub(crate) fn solve_ivp_chord(
    a: &CellFn,
    h: &CellFn,
    phi: &Nonlinearity,
    ladder: &LadderSettings,
) -> Result<IvpSolution> {
    solve_ivp_policy(a, h, phi, ladder, StepPolicy::ChordConsistent)
}

pub(crate) fn solve_ivp_policy(
    a: &CellFn,
    h: &CellFn,
    phi: &Nonlinearity,
    ladder: &LadderSettings,
    policy: StepPolicy,
) -> Result<IvpSolution> {
    let grid = *a.grid();
    if h.grid() != &grid {
        return Err(Error::DomainMismatch(
            "coefficient and source live on different grids".into(),
        ));
    }
    let alpha = a.min();
    if !(alpha > 0.0) {
        return Err(Error::CoercivityViolation { min: alpha });
    }
    if ladder.depth == 0 {
        return Err(Error::InvalidInput("ladder depth must be at least 1".into()));
    }

    let h_l2 = h.l2();
    let length = grid.length();
    // a priori sup estimate |v|_inf <= sqrt(L) |v'|_2 <= sqrt(L) C_R / (L+1)
    let c_r = apriori_bound_c_r(phi, h, alpha, length, 1.0)?;
    let est = (length.sqrt() * c_r / (length + 1.0)).max(1.0);
    let _ = h_l2;

    let sup_phi = phi.sup_abs();
    if sup_phi.is_finite() {
        // a bounded nonlinearity needs no regularization: one march
        let prep = PreparedPhi::new(phi, 4.0 * est + 1.0)?;
        let v = march(&grid, a, h, &prep, policy)?;
        return finish(v, phi, Vec::new());
    }
    let mut levels: Vec<GridFn> = Vec::new();
    let mut trace: Vec<(f64, f64)> = Vec::new();
    for k in 1..=ladder.depth {
        let height = 4f64.powi(k as i32);
        let cap = 2f64.powi(k as i32) * est;
        // once the truncation can no longer bind, the member is phi itself
        // (the argument cap is redundant there: est already bounds the flow);
        // a level-independent antiderivative range keeps those levels
        // bit-identical so the ladder settles immediately
        let (member, range) = if sup_phi <= height {
            (phi.clone(), 4.0 * est + 1.0)
        } else {
            (phi.truncate(height)?.cap_at(cap)?, cap.max(est) + 1.0)
        };
        let prep = PreparedPhi::new(&member, range)?;
        let v = march(&grid, a, h, &prep, policy)?;
        if let Some(prev) = levels.last() {
            let dist = prev.sup_distance(&v);
            trace.push((height / 4.0, dist));
            let settled = dist <= ladder.settle_tol * (1.0 + v.sup_norm());
            levels.push(v);
            if settled {
                break;
            }
        } else {
            levels.push(v);
        }
    }
    if trace.len() >= 3 {
        let tail = &trace[trace.len() - 3..];
        if tail.windows(2).all(|w| w[1].1 >= w[0].1) && tail[0].1 > ladder.settle_tol {
            return Err(Error::NoConvergence(tail.iter().map(|t| t.1).collect()));
        }
    }
    let v = levels.pop().expect("at least one ladder level");
    finish(v, phi, trace)
}

fn march(
    grid: &Grid,
    a: &CellFn,
    h: &CellFn,
    prep: &PreparedPhi,
    policy: StepPolicy,
) -> Result<GridFn> {
    let n = grid.cells();
    let dx = grid.dx();
    let mut values = vec![0.0; n + 1];
    for j in 0..n {
        values[j + 1] = step::advance(prep, values[j], a.value(j), h.value(j), dx, policy)?;
        if !values[j + 1].is_finite() {
            return Err(Error::NonFinite {
                context: format!("IVP state at node {}", j + 1),
            });
        }
    }
    GridFn::from_values(*grid, values)
}

fn finish(v: GridFn, phi: &Nonlinearity, trace: Vec<(f64, f64)>) -> Result<IvpSolution> {
    let grid = *v.grid();
    let mids = v.midpoint_values();
    let mut phi_vals = Vec::with_capacity(mids.len());
    for m in &mids {
        let p = phi.eval(*m);
        if !p.is_finite() {
            return Err(Error::NonFinite {
                context: format!("phi(v) at a chord midpoint (v = {m:.3e})"),
            });
        }
        phi_vals.push(p);
    }
    let phi_of_v = CellFn::from_values(grid, phi_vals)?;
    let phi_l2_estimate = phi_of_v.l2();
    let positivity_certificate = v.values()[1..grid.cells()].iter().all(|x| *x > 0.0);
    Ok(IvpSolution {
        v,
        phi_of_v,
        ladder_trace: trace,
        positivity_certificate,
        phi_l2_estimate,
    })
}

/// The a priori constant
/// C_R = (L+1) [ (sqrt(L) |phi|_{inf, |s|>=R} + |h|_2) / alpha
///               + sqrt(|phi|_{L1(-R,R)} / alpha) ].
pub fn apriori_bound_c_r(
    phi: &Nonlinearity,
    h: &CellFn,
    alpha: f64,
    length: f64,
    r: f64,
) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::CoercivityViolation { min: alpha });
    }
    let l1 = phi.l1_origin(r)?;
    let tail = phi.sup_abs_outside(r);
    let h_l2 = h.l2();
    Ok((length + 1.0)
        * ((length.sqrt() * tail + h_l2) / alpha + (l1 / alpha).sqrt()))
}

/// Solve the pure singular flow w' = K phi_plus(w), w(0) = 0, by inverting
/// zeta(w) = K x. `phi_plus` must come from the plus-shift (>= 1 everywhere).
pub fn pure_zeta_solve(k_rate: f64, phi_plus: &Nonlinearity, grid: &Grid) -> Result<GridFn> {
    if !(k_rate > 0.0 && k_rate.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "zeta solve needs a positive rate, got {k_rate}"
        )));
    }
    let target = k_rate * grid.length();
    let mut s_max = 1.0f64;
    let mut transform = crate::nonlinearity::ZetaTransform::build(phi_plus, s_max)?;
    let mut tries = 0usize;
    while transform.zeta_max() < target {
        tries += 1;
        if tries > 60 {
            return Err(Error::RangeExceeded {
                target,
                max: transform.zeta_max(),
            });
        }
        s_max *= 2.0;
        transform = crate::nonlinearity::ZetaTransform::build(phi_plus, s_max)?;
    }
    let mut values = Vec::with_capacity(grid.nodes());
    for j in 0..grid.nodes() {
        values.push(transform.inverse(k_rate * grid.node(j))?);
    }
    let mut out = GridFn::from_values(*grid, values)?;
    out.set_value(0, 0.0);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nonlinearity::plus_shift_and_zeta;

    fn grid(n: usize) -> Grid {
        Grid::new(1.0, n).unwrap()
    }

    fn constant_data(g: &Grid, a: f64, h: f64) -> (CellFn, CellFn) {
        (CellFn::constant(*g, a), CellFn::constant(*g, h))
    }

    #[test]
    fn constant_phi_gives_linear_solution() {
        let g = grid(64);
        let (a, h) = constant_data(&g, 1.0, 0.0);
        let sol = solve_ivp(&a, &h, &Nonlinearity::constant(1.0), &LadderSettings::default())
            .unwrap();
        for j in 0..=64 {
            assert!((sol.v.value(j) - g.node(j)).abs() < 1e-10);
        }
    }

    #[test]
    fn constant_phi_with_coefficient_and_source() {
        // a = 2, h = 3, phi = 1: v' = (1 + 3) / 2 = 2
        let g = grid(64);
        let (a, h) = constant_data(&g, 2.0, 3.0);
        let sol = solve_ivp(&a, &h, &Nonlinearity::constant(1.0), &LadderSettings::default())
            .unwrap();
        for j in 0..=64 {
            assert!((sol.v.value(j) - 2.0 * g.node(j)).abs() < 1e-10);
        }
    }

    #[test]
    fn separable_oracle_inverse_cube_root() {
        // v' = v^{-1/3}, v(0) = 0 has v(x) = (4x/3)^{3/4}
        let g = grid(4096);
        let (a, h) = constant_data(&g, 1.0, 0.0);
        let phi = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        let sol = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        let mut worst = 0.0f64;
        for j in 0..=4096 {
            let truth = (4.0 * g.node(j) / 3.0).powf(0.75);
            worst = worst.max((sol.v.value(j) - truth).abs());
        }
        assert!(worst <= 1e-4, "max node error {worst}");
        assert!(sol.positivity_certificate);
        assert!(sol.phi_l2_estimate.is_finite());
    }

    #[test]
    fn ladder_trace_contracts_and_settles() {
        let g = grid(256);
        let (a, h) = constant_data(&g, 1.0, 0.0);
        let phi = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        let sol = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        assert!(!sol.ladder_trace.is_empty());
        let last = sol.ladder_trace.last().unwrap().1;
        assert!(last <= 1e-10, "ladder did not settle: {last}");
    }

    #[test]
    fn ladder_depths_agree_when_comparison_applies() {
        let g = grid(256);
        let (a, h) = constant_data(&g, 1.0, 0.5);
        let phi = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        let shallow = solve_ivp(
            &a,
            &h,
            &phi,
            &LadderSettings {
                depth: 6,
                ..Default::default()
            },
        )
        .unwrap();
        let deep = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        assert!(shallow.v.sup_distance(&deep.v) < 1e-9);
    }

    #[test]
    fn coercivity_violation_detected() {
        let g = grid(16);
        let a = CellFn::constant(g, -0.5);
        let h = CellFn::constant(g, 0.0);
        assert!(matches!(
            solve_ivp(&a, &h, &Nonlinearity::constant(1.0), &LadderSettings::default()),
            Err(Error::CoercivityViolation { .. })
        ));
    }

    #[test]
    fn positivity_with_bounded_below_source() {
        let g = grid(512);
        let a = CellFn::constant(g, 1.0);
        let h = CellFn::sample(g, |x| -2.0 + (6.0 * x).sin()).unwrap();
        let phi = Nonlinearity::power(1.0, 0.5).unwrap();
        let sol = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        assert!(sol.positivity_certificate);
    }

    #[test]
    fn comparison_principle_nodewise() {
        let g = grid(512);
        let a = CellFn::constant(g, 1.0);
        let h1 = CellFn::sample(g, |x| -1.0 + x).unwrap();
        let h2 = CellFn::sample(g, |x| -0.5 + x).unwrap();
        let phi = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        let v1 = solve_ivp(&a, &h1, &phi, &LadderSettings::default()).unwrap();
        let v2 = solve_ivp(&a, &h2, &phi, &LadderSettings::default()).unwrap();
        for j in 0..=512 {
            assert!(v1.v.value(j) <= v2.v.value(j) + 1e-6);
        }
    }

    #[test]
    fn apriori_constant_examples() {
        let g = grid(64);
        let zero = CellFn::constant(g, 0.0);
        // L = 1, alpha = 1, h = 0, phi = |s|^{-1/3}, R = 1:
        // |phi|_L1 = 3, tail sup = 1 -> C_R = 2 (1 + sqrt 3)
        let phi = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        let c = apriori_bound_c_r(&phi, &zero, 1.0, 1.0, 1.0).unwrap();
        assert!((c - 2.0 * (1.0 + 3.0f64.sqrt())).abs() < 1e-3, "C_R = {c}");
        // phi = 0: C_R = 0
        let c0 = apriori_bound_c_r(&Nonlinearity::constant(0.0), &zero, 1.0, 1.0, 2.0).unwrap();
        assert!(c0.abs() < 1e-12);
        // |h|_2 = 2, phi = 0: C_R = (1+1) * 2 / 1 = 4
        let h2 = CellFn::constant(g, 2.0);
        let c4 = apriori_bound_c_r(&Nonlinearity::constant(0.0), &h2, 1.0, 1.0, 1.0).unwrap();
        assert!((c4 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn apriori_bound_holds_for_solver_output() {
        let g = grid(512);
        let a = CellFn::constant(g, 1.0);
        let h = CellFn::sample(g, |x| 1.0 - 2.0 * x).unwrap();
        let phi = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        let sol = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        let c_r = apriori_bound_c_r(&phi, &h, 1.0, 1.0, 1.0).unwrap();
        let h1 = sol.v.l2() + sol.v.h1_semi();
        assert!(h1 <= c_r * (1.0 + 1e-6), "{h1} vs C_R {c_r}");
    }

    #[test]
    fn pure_zeta_solve_constant_two() {
        // phi_plus = 2: w' = K * 2, w(x) = 2 K x; with K = 1, w(x) = 2x
        let g = grid(64);
        let w = pure_zeta_solve(1.0, &Nonlinearity::constant(2.0), &g).unwrap();
        for j in 0..=64 {
            assert!((w.value(j) - 2.0 * g.node(j)).abs() < 1e-9);
        }
    }

    #[test]
    fn pure_zeta_solve_hits_target_through_zeta_rate() {
        // phi_plus = 2 on [0, 1]: zeta(1) = 1/2; K = zeta(1)/0.5 = 1 gives w(0.5) = 1
        let g = grid(64);
        let shift = plus_shift_and_zeta(&Nonlinearity::constant(2.0), 4.0).unwrap();
        let k = shift.zeta.eval(1.0).unwrap() / 0.5;
        let w = pure_zeta_solve(k, &shift.phi_plus, &g).unwrap();
        let half = w.interp(0.5);
        assert!((half - 1.0).abs() < 1e-8, "w(1/2) = {half}");
    }

    #[test]
    fn pure_zeta_solve_inverse_sqrt_plus_one() {
        // phi_plus = 1 + |s|^{-1/2}, K = zeta(1): w(1) = 1
        let phi = Nonlinearity::power(1.0, 0.5).unwrap();
        let shift = plus_shift_and_zeta(&phi, 2.0).unwrap();
        let k = shift.zeta.eval(1.0).unwrap();
        assert!((k - 0.386_294_361_1).abs() < 1e-7);
        let g = grid(128);
        let w = pure_zeta_solve(k, &shift.phi_plus, &g).unwrap();
        assert!((w.last() - 1.0).abs() < 1e-6, "w(1) = {}", w.last());
        // discrete residual sense: w' close to K phi_plus(w) at chord midpoints
        let slopes = w.cell_slopes();
        for (j, s) in slopes.iter().enumerate().skip(1) {
            let m = 0.5 * (w.value(j) + w.value(j + 1));
            let rhs = k * shift.phi_plus.eval(m);
            assert!(
                (s - rhs).abs() <= 0.02 * rhs.abs() + 1e-6,
                "cell {j}: slope {s} vs rhs {rhs}"
            );
        }
    }

    #[test]
    fn forbidden_cone_for_resolved_singularity() {
        // strong amplitude makes the cone at the origin grid-resolvable for
        // k up to 100
        let g = grid(4096);
        let a = CellFn::constant(g, 1.0);
        let h = CellFn::constant(g, -1.0);
        let phi = Nonlinearity::power(100.0, 0.5).unwrap();
        let sol = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        for k in [1.0, 10.0, 100.0] {
            let first = sol.v.value(1);
            assert!(first >= k * g.node(1), "cone k = {k} unresolved");
        }
    }

    #[test]
    fn chain_rule_gap_small_for_ivp_output() {
        let g = grid(1024);
        let (a, h) = constant_data(&g, 1.0, 0.0);
        let phi = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        let sol = solve_ivp(&a, &h, &phi, &LadderSettings::default()).unwrap();
        // int phi(v) v' over the run vs psi(v(L)) - psi(0)
        let slopes = sol.v.cell_slopes();
        let dx = g.dx();
        let lhs: f64 = sol
            .phi_of_v
            .values()
            .iter()
            .zip(slopes.iter())
            .map(|(p, s)| p * s * dx)
            .sum();
        let rhs = phi.antiderivative(sol.v.last()).unwrap();
        assert!(
            (lhs - rhs).abs() < dx.sqrt(),
            "chain-rule gap {} at dx {dx}",
            (lhs - rhs).abs()
        );
    }
}
