//! Antiderivatives psi(s) = int_0^s phi(t) dt.
//!
//! Model shapes and their clamp/cap/offset/reflection wrappers have closed
//! forms; everything else falls back to graded quadrature with divergence
//! detection, or to a cumulative table when a solver needs psi in a hot loop.

use super::{Nonlinearity, Polynomial};
use crate::error::{Error, Result, Side};
use crate::quad::{self, Graded};

pub(crate) fn eval(phi: &Nonlinearity, s: f64) -> Result<f64> {
    if s == 0.0 {
        return Ok(0.0);
    }
    match phi {
        Nonlinearity::Constant(k) => Ok(k * s),
        Nonlinearity::Smooth(p) => Ok(p.antiderivative().eval(s)),
        Nonlinearity::Power { c, gamma, smooth } => {
            power_psi(*c, *gamma, *gamma, smooth, s)
        }
        Nonlinearity::PiecewisePower {
            c,
            gamma_left,
            gamma_right,
            smooth,
        } => power_psi(*c, *gamma_left, *gamma_right, smooth, s),
        Nonlinearity::Capped { base, radius } => {
            if s.abs() <= *radius {
                eval(base, s)
            } else {
                let edge = radius.copysign(s);
                Ok(eval(base, edge)? + base.eval(edge) * (s - edge))
            }
        }
        Nonlinearity::Offset { base, shift } => Ok(eval(base, s)? + shift * s),
        Nonlinearity::Reflected(base) => eval(base, -s).map_err(flip_side),
        Nonlinearity::Truncated { base, height } => match &**base {
            Nonlinearity::Power { c, gamma, smooth } if smooth.as_constant().is_some() => Ok(
                truncated_power_psi(*c, *gamma, *gamma, smooth.as_constant().unwrap(), *height, s),
            ),
            Nonlinearity::PiecewisePower {
                c,
                gamma_left,
                gamma_right,
                smooth,
            } if smooth.as_constant().is_some() => Ok(truncated_power_psi(
                *c,
                *gamma_left,
                *gamma_right,
                smooth.as_constant().unwrap(),
                *height,
                s,
            )),
            Nonlinearity::Constant(k) => Ok(k.clamp(-height, *height) * s),
            _ => numeric(phi, s),
        },
        Nonlinearity::Tabulated(t) => {
            let f = |x: f64| tab_cumulative(t, x);
            Ok(f(s) - f(0.0))
        }
        Nonlinearity::Homographic { .. } | Nonlinearity::Mollified { .. } => numeric(phi, s),
    }
}

fn flip_side(e: Error) -> Error {
    match e {
        Error::NonIntegrableSingularity { side } => Error::NonIntegrableSingularity {
            side: match side {
                Side::Left => Side::Right,
                Side::Right => Side::Left,
            },
        },
        other => other,
    }
}

/// True when `eval` resolves without quadrature.
pub fn has_closed_antiderivative(phi: &Nonlinearity) -> bool {
    match phi {
        Nonlinearity::Constant(_)
        | Nonlinearity::Smooth(_)
        | Nonlinearity::Power { .. }
        | Nonlinearity::PiecewisePower { .. }
        | Nonlinearity::Tabulated(_) => true,
        Nonlinearity::Capped { base, .. }
        | Nonlinearity::Offset { base, .. }
        | Nonlinearity::Reflected(base) => has_closed_antiderivative(base),
        Nonlinearity::Truncated { base, .. } => match &**base {
            Nonlinearity::Power { smooth, .. } | Nonlinearity::PiecewisePower { smooth, .. } => {
                smooth.as_constant().is_some()
            }
            Nonlinearity::Constant(_) => true,
            _ => false,
        },
        Nonlinearity::Homographic { .. } | Nonlinearity::Mollified { .. } => false,
    }
}

fn power_psi(c: f64, gamma_left: f64, gamma_right: f64, smooth: &Polynomial, s: f64) -> Result<f64> {
    let (gamma, side) = if s > 0.0 {
        (gamma_right, Side::Right)
    } else {
        (gamma_left, Side::Left)
    };
    if gamma >= 1.0 {
        return Err(Error::NonIntegrableSingularity { side });
    }
    let power_part = s.signum() * c * s.abs().powf(1.0 - gamma) / (1.0 - gamma);
    Ok(power_part + smooth.antiderivative().eval(s))
}

/// int_0^t (c r^{-gamma} + k0) dr taken away from the origin, valid for t in a
/// region that excludes 0 when gamma >= 1.
fn power_primitive(c: f64, gamma: f64, k0: f64, t: f64) -> f64 {
    if (gamma - 1.0).abs() < 1e-14 {
        c * t.ln() + k0 * t
    } else {
        c * t.powf(1.0 - gamma) / (1.0 - gamma) + k0 * t
    }
}

/// Closed antiderivative of T_height(c |s|^{-gamma_side} + k0), one side at a
/// time; always finite because the truncation bounds the integrand.
fn truncated_power_psi(
    c: f64,
    gamma_left: f64,
    gamma_right: f64,
    k0: f64,
    height: f64,
    s: f64,
) -> f64 {
    let gamma = if s > 0.0 { gamma_right } else { gamma_left };
    let x = s.abs();
    let value = if height <= k0 {
        // the function never drops below the upper clamp
        height * x
    } else {
        let s_hi = (c / (height - k0)).powf(1.0 / gamma);
        let s_lo = if k0 < -height {
            Some((c / (-height - k0)).powf(1.0 / gamma))
        } else {
            None
        };
        if x <= s_hi {
            height * x
        } else {
            let mut acc = height * s_hi;
            let upper_free = s_lo.map_or(x, |lo| x.min(lo));
            acc += power_primitive(c, gamma, k0, upper_free) - power_primitive(c, gamma, k0, s_hi);
            if let Some(lo) = s_lo {
                if x > lo {
                    acc += -height * (x - lo);
                }
            }
            acc
        }
    };
    s.signum() * value
}

/// Cumulative integral of a piecewise-linear table measured from its first
/// break (exact).
fn tab_cumulative(t: &super::Tabulated, x: f64) -> f64 {
    let breaks = t.breaks();
    let values = t.values();
    let n = breaks.len();
    if x <= breaks[0] {
        return values[0] * (x - breaks[0]);
    }
    let mut acc = 0.0;
    for i in 0..n - 1 {
        let (b0, b1) = (breaks[i], breaks[i + 1]);
        if x >= b1 {
            acc += 0.5 * (values[i] + values[i + 1]) * (b1 - b0);
        } else {
            let d = x - b0;
            let slope = (values[i + 1] - values[i]) / (b1 - b0);
            acc += values[i] * d + 0.5 * slope * d * d;
            return acc;
        }
    }
    acc + values[n - 1] * (x - breaks[n - 1])
}

fn numeric(phi: &Nonlinearity, s: f64) -> Result<f64> {
    let f = |t: f64| {
        let v = phi.eval(t);
        if v.is_infinite() {
            0.0 // measure-zero point of an integrable singularity
        } else {
            v
        }
    };
    let (value, partials, side) = if s > 0.0 {
        let (v, p) = quad::graded_with_trace(&f, 0.0, s, Graded::Left, 40)?;
        (v, p, Side::Right)
    } else {
        let (v, p) = quad::graded_with_trace(&f, s, 0.0, Graded::Right, 40)?;
        (-v, p, Side::Left)
    };
    match quad::classify_partials(&partials, 4, 0.01) {
        quad::RefinementTrend::Diverging => Err(Error::NonIntegrableSingularity { side }),
        quad::RefinementTrend::Mixed => Err(Error::Inconclusive(format!(
            "antiderivative refinements neither settle nor clearly diverge on the {side} side"
        ))),
        quad::RefinementTrend::Converged => Ok(value),
    }
}

/// Cumulative table for antiderivatives of (bounded) nonlinearities without a
/// closed form. Dense geometric breakpoints with cumulative masses from GL8
/// panels; queries interpolate with a cubic Hermite whose slopes are the
/// exact phi values at the breakpoints.
#[derive(Clone, Debug)]
pub(crate) struct PsiTable {
    edges: Vec<f64>, // ascending, straddling 0
    cum: Vec<f64>,   // psi at the edges
    slope: Vec<f64>, // phi at the edges
    phi: Nonlinearity,
}

impl PsiTable {
    pub(crate) fn build(phi: &Nonlinearity, range: f64) -> Result<Self> {
        let range = range.max(1.0);
        let f = |t: f64| {
            let v = phi.eval(t);
            if v.is_infinite() {
                0.0
            } else {
                v
            }
        };
        const PER_SIDE: usize = 1536;
        let lo = range * 1e-14;
        let ratio = (range / lo).powf(1.0 / (PER_SIDE as f64 - 1.0));
        let mut pos = Vec::with_capacity(PER_SIDE + 1);
        pos.push(0.0);
        let mut s = lo;
        for _ in 0..PER_SIDE {
            pos.push(s);
            s *= ratio;
        }
        let mut edges: Vec<f64> = pos.iter().skip(1).rev().map(|x| -x).collect();
        edges.extend(pos);
        let zero_at = edges.iter().position(|e| *e == 0.0).unwrap();
        let mut cum = vec![0.0; edges.len()];
        for i in zero_at..edges.len() - 1 {
            cum[i + 1] = cum[i] + quad::gl8(&f, edges[i], edges[i + 1]);
        }
        for i in (0..zero_at).rev() {
            cum[i] = cum[i + 1] - quad::gl8(&f, edges[i], edges[i + 1]);
        }
        if cum.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "antiderivative table".into(),
            });
        }
        let slope: Vec<f64> = edges.iter().map(|e| f(*e)).collect();
        Ok(PsiTable {
            edges,
            cum,
            slope,
            phi: phi.clone(),
        })
    }

    pub(crate) fn query(&self, s: f64) -> f64 {
        let f = |t: f64| {
            let v = self.phi.eval(t);
            if v.is_infinite() {
                0.0
            } else {
                v
            }
        };
        let n = self.edges.len();
        if s <= self.edges[0] {
            return self.cum[0] - quad::composite(&f, s, self.edges[0], 8);
        }
        if s >= self.edges[n - 1] {
            return self.cum[n - 1] + quad::composite(&f, self.edges[n - 1], s, 8);
        }
        let i = match self
            .edges
            .binary_search_by(|e| e.partial_cmp(&s).unwrap())
        {
            Ok(i) => return self.cum[i],
            Err(i) => i - 1,
        };
        // cubic Hermite on [edges[i], edges[i+1]] with exact endpoint slopes
        let h = self.edges[i + 1] - self.edges[i];
        let t = (s - self.edges[i]) / h;
        let (y0, y1) = (self.cum[i], self.cum[i + 1]);
        let (m0, m1) = (self.slope[i] * h, self.slope[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }
}

/// A nonlinearity packaged with a fast antiderivative for solver loops.
#[derive(Clone, Debug)]
pub(crate) struct PreparedPhi {
    phi: Nonlinearity,
    table: Option<PsiTable>,
}

impl PreparedPhi {
    /// `range` is the largest |s| the solver expects to query.
    pub(crate) fn new(phi: &Nonlinearity, range: f64) -> Result<Self> {
        if has_closed_antiderivative(phi) {
            // surface non-integrable singularities now rather than mid-solve
            eval(phi, range.max(1.0))?;
            eval(phi, -range.max(1.0))?;
            Ok(PreparedPhi {
                phi: phi.clone(),
                table: None,
            })
        } else {
            let table = PsiTable::build(phi, 2.0 * range.max(1.0))?;
            Ok(PreparedPhi {
                phi: phi.clone(),
                table: Some(table),
            })
        }
    }

    pub(crate) fn eval(&self, s: f64) -> f64 {
        self.phi.eval(s)
    }

    pub(crate) fn psi(&self, s: f64) -> f64 {
        match &self.table {
            Some(t) => t.query(s),
            None => eval(&self.phi, s).unwrap_or(f64::NAN),
        }
    }

    /// Chord average (psi(q) - psi(p)) / (q - p): the exact mean of phi along
    /// the segment, the composition rule the discrete chain rule needs.
    pub(crate) fn chord(&self, p: f64, q: f64) -> f64 {
        let scale = 1.0f64.max(p.abs()).max(q.abs());
        if (q - p).abs() <= 1e-14 * scale {
            let mid = 0.5 * (p + q);
            return self.eval(mid);
        }
        (self.psi(q) - self.psi(p)) / (q - p)
    }
}
