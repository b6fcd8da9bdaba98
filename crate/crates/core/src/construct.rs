//! Explicit admissible solutions and the data they generate: power-seam
//! profiles that vanish at chosen interior points, the datum that makes any
//! admissible profile a weak solution, the tail fix that repairs an arbitrary
//! datum on a right margin, and the dual stability/instability schedules of
//! approximating data.

use crate::bvp::{self, BvpSolution, LimitRunEntry};
use crate::error::{Error, Result};
use crate::grid::{CellFn, Grid, GridFn};
use crate::nonlinearity::psi::PreparedPhi;
use crate::nonlinearity::{plus_shift_and_zeta, ApproxFamily, Nonlinearity, ZetaTransform};
use crate::ode::{self, LadderSettings};
use crate::verify;

/// Amplitude/exponent of a one-sided power seam.
#[derive(Clone, Copy, Debug)]
pub struct SeamEnd {
    pub amplitude: f64,
    pub exponent: f64,
}

/// An interior zero with its two one-sided seams.
#[derive(Clone, Copy, Debug)]
pub struct SeamPoint {
    pub x: f64,
    pub amp_left: f64,
    pub exp_left: f64,
    pub amp_right: f64,
    pub exp_right: f64,
}

/// Specification of a seam profile for the power model with exponent gamma.
/// With no interior points the profile is the model bump
/// K x^{lambda_r} (L - x)^{lambda_l}.
#[derive(Clone, Debug)]
pub struct SeamSpec {
    pub gamma: f64,
    pub left: SeamEnd,
    pub interior: Vec<SeamPoint>,
    pub right: SeamEnd,
    pub splice_radius: f64,
}

impl SeamSpec {
    /// Single model bump K x^lambda (L-x)^lambda.
    pub fn bump(gamma: f64, amplitude: f64, exponent: f64) -> Self {
        SeamSpec {
            gamma,
            left: SeamEnd {
                amplitude,
                exponent,
            },
            interior: Vec::new(),
            right: SeamEnd {
                amplitude,
                exponent,
            },
            splice_radius: 0.0,
        }
    }

    /// Exponent window (1/2, 1/(2 gamma)), open at both ends.
    pub fn exponent_window(&self) -> (f64, f64) {
        (0.5, 1.0 / (2.0 * self.gamma))
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::InvalidInput(format!(
                "seam constructions need 0 < gamma < 1, got {}",
                self.gamma
            )));
        }
        let (lo, hi) = self.exponent_window();
        let mut exponents = vec![self.left.exponent, self.right.exponent];
        for p in &self.interior {
            exponents.push(p.exp_left);
            exponents.push(p.exp_right);
        }
        for lambda in exponents {
            if !(lambda > lo && lambda < hi) {
                return Err(Error::ExponentOutOfWindow { lambda, lo, hi });
            }
        }
        // sign condition K_i^r K_{i+1}^l > 0 across every connector span
        let mut rights = vec![self.left.amplitude];
        let mut lefts = Vec::new();
        for p in &self.interior {
            lefts.push(p.amp_left);
            rights.push(p.amp_right);
        }
        lefts.push(self.right.amplitude);
        for (kr, kl) in rights.iter().zip(lefts.iter()) {
            if *kr == 0.0 || *kl == 0.0 || kr * kl <= 0.0 {
                return Err(Error::SignClash {
                    left: *kr,
                    right: *kl,
                });
            }
        }
        // geometry
        let mut points = vec![0.0];
        points.extend(self.interior.iter().map(|p| p.x));
        points.push(length);
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "interior seam points must be strictly increasing inside (0, L)".into(),
            ));
        }
        if !self.interior.is_empty() {
            let delta = self.splice_radius;
            if !(delta > 0.0) {
                return Err(Error::InvalidInput(
                    "a positive splice radius is required with interior points".into(),
                ));
            }
            if points.windows(2).any(|w| w[0] + delta >= w[1] - delta) {
                return Err(Error::InvalidInput(
                    "splice radii overlap: need x_i + delta < x_{i+1} - delta".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Build the seam profile on the grid. Interior zeros are snapped to the
/// nearest node so the profile vanishes exactly at nodes.
pub fn power_seam_solution(spec: &SeamSpec, grid: &Grid) -> Result<GridFn> {
    spec.validate(grid.length())?;
    let length = grid.length();
    if spec.interior.is_empty() {
        let (k, lr, ll) = (
            spec.left.amplitude,
            spec.left.exponent,
            spec.right.exponent,
        );
        return GridFn::sample_h10(*grid, |x| k * x.powf(lr) * (length - x).powf(ll));
    }

    // zeros snapped to nodes
    let mut zeros = vec![0usize];
    for p in &spec.interior {
        let j = grid.nearest_node(p.x);
        zeros.push(j);
    }
    zeros.push(grid.cells());
    if zeros.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput(
            "seam points collapse onto the same node at this resolution".into(),
        ));
    }

    let delta = spec.splice_radius;
    let mut values = vec![0.0; grid.nodes()];
    for span in 0..zeros.len() - 1 {
        let (j0, j1) = (zeros[span], zeros[span + 1]);
        let (x0, x1) = (grid.node(j0), grid.node(j1));
        let (kr, lr) = if span == 0 {
            (spec.left.amplitude, spec.left.exponent)
        } else {
            (
                spec.interior[span - 1].amp_right,
                spec.interior[span - 1].exp_right,
            )
        };
        let (kl, ll) = if span + 1 == zeros.len() - 1 {
            (spec.right.amplitude, spec.right.exponent)
        } else {
            (spec.interior[span].amp_left, spec.interior[span].exp_left)
        };
        let y1 = kr * delta.powf(lr);
        let y2 = kl * delta.powf(ll);
        let eta = 0.5 * y1.abs().min(y2.abs());
        for j in j0..=j1 {
            let x = grid.node(j);
            let v = if x <= x0 + delta {
                kr * (x - x0).powf(lr)
            } else if x >= x1 - delta {
                kl * (x1 - x).powf(ll)
            } else {
                // cubic with zero end slopes joining the seam values, kept
                // away from zero (automatic for same-sign ends)
                let t = (x - (x0 + delta)) / ((x1 - delta) - (x0 + delta));
                let h = y1 + (y2 - y1) * (3.0 * t * t - 2.0 * t * t * t);
                if h.abs() < eta {
                    eta * h.signum()
                } else {
                    h
                }
            };
            values[j] = v;
        }
        values[j0] = 0.0;
        values[j1] = 0.0;
    }
    GridFn::from_values(*grid, values)
}

/// The datum that makes an admissible profile w a weak solution with
/// constant c: g = a w' - phi(w) - c, with the chord composition so the
/// round trip through the verifier is exact.
pub fn derive_datum(
    a: &CellFn,
    w: &GridFn,
    phi: &Nonlinearity,
    c: f64,
) -> Result<CellFn> {
    let membership = verify::membership_u(phi, w);
    if !membership.is_member() {
        return Err(Error::MembershipFailure(format!(
            "profile is not admissible for this nonlinearity ({:?})",
            membership.verdict
        )));
    }
    if a.grid() != w.grid() {
        return Err(Error::DomainMismatch(
            "coefficient and profile live on different grids".into(),
        ));
    }
    let prep = PreparedPhi::new(phi, w.sup_norm() + 1.0)?;
    let slopes = w.cell_slopes();
    let vals: Vec<f64> = (0..w.grid().cells())
        .map(|j| a.value(j) * slopes[j] - prep.chord(w.value(j), w.value(j + 1)) - c)
        .collect();
    CellFn::from_values(*w.grid(), vals)
}

/// Result of repairing a datum on the right margin `[L - delta, L]`.
#[derive(Clone, Debug)]
pub struct TailFix {
    pub u_hat: GridFn,
    pub g_hat: CellFn,
    /// The margin actually used (snapped to nodes, possibly shrunk).
    pub delta_used: f64,
    /// Value of the forward trajectory at the splice.
    pub splice_value: f64,
    /// Rate of the pure flow bridging the splice value back to zero.
    pub rate: f64,
}

/// Modify g only on [L - delta, L] so that the problem (a, g_hat, phi) has a
/// weak solution: run the forward flow with the original datum up to the
/// splice, then bridge back to zero with the pure shifted flow inverted
/// through its zeta transform.
pub fn tail_fix(
    a: &CellFn,
    g: &CellFn,
    phi: &Nonlinearity,
    delta: f64,
    ladder: &LadderSettings,
) -> Result<TailFix> {
    let grid = *a.grid();
    let length = grid.length();
    if !(delta > 0.0 && delta < length) {
        return Err(Error::InvalidInput(format!(
            "tail margin must lie in (0, L), got {delta}"
        )));
    }
    if !phi.singular_at_zero() {
        return Err(Error::InvalidInput(
            "the tail fix is stated for nonlinearities singular at the origin".into(),
        ));
    }
    if phi.integrability_class()? != crate::nonlinearity::IntegrabilityClass::BothIntegrable {
        return Err(Error::NonIntegrableSingularity {
            side: crate::error::Side::Right,
        });
    }

    let tau = bvp::tau_threshold(&grid, 1.0);
    let mut margin_cells = grid.cells() - grid.nearest_node(length - delta);
    margin_cells = margin_cells.clamp(1, grid.cells() - 8);
    let mut attempts = 0usize;
    let (splice_node, v) = loop {
        let splice_node = grid.cells() - margin_cells;
        let prefix = grid.prefix(splice_node)?;
        let a_pre = CellFn::from_values(prefix, a.values()[..splice_node].to_vec())?;
        let g_pre = CellFn::from_values(prefix, g.values()[..splice_node].to_vec())?;
        let sol = ode::solve_ivp(&a_pre, &g_pre, phi, ladder)?;
        if sol.endpoint().abs() > tau {
            break (splice_node, sol);
        }
        attempts += 1;
        if attempts >= 8 || margin_cells <= 1 {
            return Err(Error::ZeroAtSplice {
                threshold: tau,
                attempts,
            });
        }
        // shrink the margin toward L, as the construction allows
        margin_cells = (margin_cells / 2).max(1);
    };
    let delta_used = (grid.cells() - splice_node) as f64 * grid.dx();
    let splice_value = v.endpoint();

    // bridge on [L - delta_used, L] through the shifted pure flow
    let shift = plus_shift_and_zeta(phi, splice_value.abs() * 2.0 + 1.0)?;
    let (zeta, target) = if splice_value > 0.0 {
        (
            ZetaTransform::build(&shift.phi_plus, splice_value.abs() * 2.0 + 1.0)?,
            splice_value,
        )
    } else {
        (
            ZetaTransform::build_mirrored(&shift.phi_plus, splice_value.abs() * 2.0 + 1.0)?,
            -splice_value,
        )
    };
    let rate = zeta.eval(target)? / delta_used;

    let mut values = vec![0.0; grid.nodes()];
    values[..=splice_node].copy_from_slice(&v.v.values()[..=splice_node]);
    for j in splice_node..=grid.cells() {
        let y = length - grid.node(j); // distance back from L
        let w = zeta.inverse(rate * y)?;
        values[j] = if splice_value > 0.0 { w } else { -w };
    }
    values[splice_node] = splice_value;
    values[grid.cells()] = 0.0;
    let u_hat = GridFn::from_values(grid, values)?;

    // g_hat: the original cells up to the splice (bitwise), the derived
    // bridge cells after it (zero first-order constant throughout)
    let prep = PreparedPhi::new(phi, u_hat.sup_norm() + 1.0)?;
    let slopes = u_hat.cell_slopes();
    let mut g_vals = g.values().to_vec();
    for j in splice_node..grid.cells() {
        g_vals[j] =
            a.value(j) * slopes[j] - prep.chord(u_hat.value(j), u_hat.value(j + 1));
    }
    let g_hat = CellFn::from_values(grid, g_vals)?;
    Ok(TailFix {
        u_hat,
        g_hat,
        delta_used,
        splice_value,
        rate,
    })
}

/// The datum schedule that keeps u solving the regularized problems exactly:
/// g_n = phi(u) - phi_n(u) + g, with both compositions taken as chord
/// averages so that u satisfies the discrete (phi_n, g_n) relation to
/// round-off on every cell.
pub fn stability_datum(
    g: &CellFn,
    phi: &Nonlinearity,
    phi_n: &Nonlinearity,
    u: &GridFn,
) -> Result<CellFn> {
    if g.grid() != u.grid() {
        return Err(Error::DomainMismatch(
            "datum and profile live on different grids".into(),
        ));
    }
    let range = u.sup_norm() + 1.0;
    let prep_full = PreparedPhi::new(phi, range)?;
    let prep_member = PreparedPhi::new(phi_n, range)?;
    let mut vals = Vec::with_capacity(g.grid().cells());
    for j in 0..g.grid().cells() {
        let (p, q) = (u.value(j), u.value(j + 1));
        let full = prep_full.chord(p, q);
        let member = prep_member.chord(p, q);
        if !full.is_finite() || !member.is_finite() {
            return Err(Error::NonFinite {
                context: format!("stability datum at cell {j}"),
            });
        }
        vals.push(full - member + g.value(j));
    }
    CellFn::from_values(*g.grid(), vals)
}

/// Clamp a datum's cells to [-level, level]; the essentially bounded
/// approximations the instability schedule requires.
pub fn clamp_datum(g: &CellFn, level: f64) -> Result<CellFn> {
    if !(level > 0.0) {
        return Err(Error::InvalidInput("clamp level must be positive".into()));
    }
    g.map(|v| v.clamp(-level, level))
}

#[derive(Clone, Debug)]
pub struct InstabilityEntry {
    /// Position in the datum schedule.
    pub n: usize,
    pub eps: f64,
    /// Minimal family index k with |v_n^k|_2 <= eps_n, if found in budget.
    pub k_star: Option<f64>,
    /// Strictly increasing repair (running maximum pushed one slot up).
    pub k_bar: Option<f64>,
    /// The norm reached at k_star.
    pub l2: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct InstabilityOutcome {
    pub entries: Vec<InstabilityEntry>,
    /// Diagonal run (phi_{k_bar(n)}, g_bar_n) ready for limit classification.
    pub diagonal: Vec<LimitRunEntry>,
    pub diagonal_solutions: Vec<BvpSolution>,
}

/// Scan the endpoint map and keep the smallest solution: the washing branch
/// the instability construction follows (clamped data admit several roots
/// and warm-started Newton would track whichever branch it started on).
fn solve_washing(a: &CellFn, g_n: &CellFn, member: &Nonlinearity) -> Result<BvpSolution> {
    let scan = bvp::solve_regularized_bvp(a, g_n, member, &bvp::BvpSettings::default())?;
    scan.solutions
        .into_iter()
        .min_by(|p, q| p.u.l2().partial_cmp(&q.u.l2()).unwrap())
        .ok_or_else(|| Error::Inconclusive("no root in the scan bracket".into()))
}

/// For each bounded datum g_bar_n, walk the approximation family upward until
/// the regularized solution is washed below eps_n in L^2, and assemble the
/// strictly increasing diagonal schedule.
pub fn instability_schedule(
    g_bar: &[CellFn],
    family: &ApproxFamily,
    eps: &[f64],
    a: &CellFn,
) -> Result<InstabilityOutcome> {
    if g_bar.is_empty() || g_bar.len() != eps.len() {
        return Err(Error::InvalidInput(
            "need one epsilon per bounded datum".into(),
        ));
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) || eps.iter().any(|e| *e <= 0.0) {
        return Err(Error::InvalidInput(
            "epsilons must be positive and strictly decreasing".into(),
        ));
    }
    let schedule = &family.schedule;
    let mut entries = Vec::with_capacity(g_bar.len());
    let mut norms: Vec<Vec<Option<(f64, BvpSolution)>>> =
        vec![vec![None; schedule.len()]; g_bar.len()];

    for (n, (g_n, eps_n)) in g_bar.iter().zip(eps.iter()).enumerate() {
        let mut k_star = None;
        let mut l2_at = None;
        for (pos, k) in schedule.iter().enumerate() {
            let member = family.member(*k)?;
            let sol = solve_washing(a, g_n, &member)?;
            let l2 = sol.u.l2();
            norms[n][pos] = Some((l2, sol.clone()));
            if l2 <= *eps_n {
                k_star = Some(*k);
                l2_at = Some(l2);
                break;
            }
        }
        entries.push(InstabilityEntry {
            n,
            eps: *eps_n,
            k_star,
            k_bar: None,
            l2: l2_at,
        });
    }

    // strictly increasing repair: running maxima pushed one schedule slot up
    let pos_of = |k: f64| schedule.iter().position(|s| *s == k).unwrap_or(0);
    let mut prev_pos: Option<usize> = None;
    for entry in entries.iter_mut() {
        let Some(k) = entry.k_star else { continue };
        let mut pos = pos_of(k);
        if let Some(p) = prev_pos {
            if pos <= p {
                pos = p + 1;
            }
        }
        if pos >= schedule.len() {
            entry.k_bar = None; // ran off the schedule
            continue;
        }
        entry.k_bar = Some(schedule[pos]);
        prev_pos = Some(pos);
    }

    // diagonal run
    let mut diagonal = Vec::new();
    let mut diagonal_solutions = Vec::new();
    for entry in &entries {
        let Some(kb) = entry.k_bar else { continue };
        let pos = pos_of(kb);
        let member = family.member(kb)?;
        let sol = match &norms[entry.n][pos] {
            Some((_, s)) => s.clone(),
            None => solve_washing(a, &g_bar[entry.n], &member)?,
        };
        diagonal.push(LimitRunEntry::from_solution(kb, &sol, &member));
        diagonal_solutions.push(sol);
    }
    Ok(InstabilityOutcome {
        entries,
        diagonal,
        diagonal_solutions,
    })
}
