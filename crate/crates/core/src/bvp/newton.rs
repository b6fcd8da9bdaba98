//! Damped Newton on the finite-difference first-order system
//!
//!   a_j (u_{j+1} - u_j)/dx - Phi(u_j, u_{j+1}) - g_j - c = 0,   j = 0..N-1,
//!   u_0 = u_N = 0,
//!
//! with unknowns (u_1..u_{N-1}, c). The Jacobian is bidiagonal plus a dense
//! column for c, so each Newton step is a forward substitution: propagate the
//! affine dependence du_{j+1} = p_{j+1} + q_{j+1} dc and close with u_N = 0.

use crate::error::{Error, Result};
use crate::grid::{CellFn, Grid, GridFn};
use crate::nonlinearity::psi::PreparedPhi;

pub(crate) struct NewtonOutcome {
    pub u: GridFn,
    pub c: f64,
    pub residual_sup: f64,
}

pub(crate) fn solve_newton_fd(
    a: &CellFn,
    g: &CellFn,
    prep: &PreparedPhi,
    grid: &Grid,
    init: Option<(&GridFn, f64)>,
) -> Result<NewtonOutcome> {
    let n = grid.cells();
    let dx = grid.dx();

    // linear (phi = 0) closed-form start unless a warm start is given:
    // u' = (g + c)/a with c fixed by u(L) = 0
    let (mut u, mut c) = match init {
        Some((u0, c0)) => (u0.values().to_vec(), c0),
        None => {
            let swg: f64 = (0..n).map(|j| g.value(j) / a.value(j)).sum();
            let swa: f64 = (0..n).map(|j| 1.0 / a.value(j)).sum();
            let c0 = -swg / swa;
            let mut vals = vec![0.0; n + 1];
            for j in 0..n {
                vals[j + 1] = vals[j] + dx * (g.value(j) + c0) / a.value(j);
            }
            vals[n] = 0.0;
            (vals, c0)
        }
    };

    let residual = |u: &[f64], c: f64| -> Vec<f64> {
        (0..n)
            .map(|j| {
                a.value(j) * (u[j + 1] - u[j]) / dx - prep.chord(u[j], u[j + 1]) - g.value(j) - c
            })
            .collect()
    };
    let norm2 = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut res = residual(&u, c);
    let mut best = norm2(&res);
    let scale = 1.0 + g.l2() + c.abs();
    for _iter in 0..80 {
        if sup(&res) <= 1e-11 * scale {
            break;
        }
        // chord partials: d/dq Phi(p, q) = (phi(q) - Phi) / (q - p) exactly,
        // with a symmetric-difference fallback on collapsed chords
        let mut dp = vec![0.0; n];
        let mut dq = vec![0.0; n];
        for j in 0..n {
            let (p, q) = (u[j], u[j + 1]);
            let gap = q - p;
            if gap.abs() > 1e-9 * (1.0 + p.abs().max(q.abs())) {
                let chord = prep.chord(p, q);
                let fp = prep.eval(p);
                let fq = prep.eval(q);
                dp[j] = if fp.is_finite() { (chord - fp) / gap } else { 0.0 };
                dq[j] = if fq.is_finite() { (fq - chord) / gap } else { 0.0 };
            } else {
                let mid = 0.5 * (p + q);
                let hm = 1e-7 * (1.0 + mid.abs());
                let d = (prep.eval(mid + hm) - prep.eval(mid - hm)) / (2.0 * hm);
                let d = if d.is_finite() { d } else { 0.0 };
                dp[j] = 0.5 * d;
                dq[j] = 0.5 * d;
            }
        }
        // F_j + A_j du_j + B_j du_{j+1} - dc = 0 with
        // A_j = -a/dx - dPhi/dp, B_j = a/dx - dPhi/dq
        // propagate du_{j+1} = p_{j+1} + q_{j+1} dc from du_0 = 0
        let mut pvec = vec![0.0; n + 1];
        let mut qvec = vec![0.0; n + 1];
        for j in 0..n {
            let aj = -a.value(j) / dx - dp[j];
            let bj = a.value(j) / dx - dq[j];
            if bj.abs() < 1e-300 {
                return Err(Error::NonFinite {
                    context: "singular Newton pivot".into(),
                });
            }
            pvec[j + 1] = (-res[j] - aj * pvec[j]) / bj;
            qvec[j + 1] = (1.0 - aj * qvec[j]) / bj;
        }
        if qvec[n].abs() < 1e-300 {
            return Err(Error::NonFinite {
                context: "Newton closure has no c-sensitivity".into(),
            });
        }
        let dc = -pvec[n] / qvec[n];

        // damped update
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let mut trial = u.clone();
            for j in 1..n {
                trial[j] = u[j] + lambda * (pvec[j] + qvec[j] * dc);
            }
            let c_trial = c + lambda * dc;
            let r_trial = residual(&trial, c_trial);
            let nrm = norm2(&r_trial);
            if nrm.is_finite() && nrm < best * (1.0 - 1e-4 * lambda) {
                u = trial;
                c = c_trial;
                res = r_trial;
                best = nrm;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let residual_sup = sup(&res);
    if residual_sup > 1e-7 * scale {
        return Err(Error::NoConvergence(vec![residual_sup]));
    }
    let mut out = GridFn::from_values(*grid, u)?;
    out.set_value(0, 0.0);
    out.set_value(n, 0.0);
    Ok(NewtonOutcome {
        u: out,
        c,
        residual_sup,
    })
}

fn sup(r: &[f64]) -> f64 {
    r.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
