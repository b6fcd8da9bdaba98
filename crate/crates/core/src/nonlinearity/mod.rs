//! Singular nonlinearities and the transforms the problem theory needs:
//! capping, truncation, homographic flattening, reflection, vertical shifts,
//! smoothing, and the approximation families built from them.
//!
//! Values are immutable after construction and every operation is pure, so a
//! `Nonlinearity` may be shared freely between workers.

mod family;
pub(crate) mod psi;
mod zeta;

pub use family::{
    check_member_sequence, check_reasonable_family, ApproxFamily, DriftSchedule, FamilyKind,
    MemberCheck, ReasonableReport,
};
pub use psi::has_closed_antiderivative;
pub use zeta::{plus_shift_and_zeta, PlusShift, ZetaTransform};

use crate::error::{Error, Result, Side};
use crate::quad::{self, Graded};

/// Scan radius used whenever a bound on phi has to be estimated by sampling;
/// hypothesis-level tail bounds justify stopping there.
pub(crate) const SCAN_RADIUS: f64 = 1e6;

/// Polynomial with ascending coefficients, used for the smooth part of model
/// nonlinearities and for polynomial data.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial(Vec<f64>);

impl Polynomial {
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut c = coeffs;
        while c.len() > 1 && c.last() == Some(&0.0) {
            c.pop();
        }
        if c.is_empty() {
            c.push(0.0);
        }
        Polynomial(c)
    }

    pub fn zero() -> Self {
        Polynomial(vec![0.0])
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.0.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|c| *c == 0.0)
    }

    /// Some(k) when the polynomial is the constant k.
    pub fn as_constant(&self) -> Option<f64> {
        if self.degree() == 0 {
            Some(self.0[0])
        } else {
            None
        }
    }

    /// Antiderivative with zero constant term.
    pub fn antiderivative(&self) -> Polynomial {
        let mut out = vec![0.0];
        for (k, c) in self.0.iter().enumerate() {
            out.push(c / (k as f64 + 1.0));
        }
        Polynomial::new(out)
    }
}

/// Piecewise-linear tabulated nonlinearity, constant outside the table.
#[derive(Clone, Debug, PartialEq)]
pub struct Tabulated {
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl Tabulated {
    pub fn new(breaks: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if breaks.len() != values.len() || breaks.len() < 2 {
            return Err(Error::InvalidInput(
                "tabulated nonlinearity needs matching breaks/values with at least 2 entries"
                    .into(),
            ));
        }
        if breaks.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "tabulated breaks must be strictly increasing".into(),
            ));
        }
        if breaks.iter().chain(values.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "tabulated nonlinearity".into(),
            });
        }
        Ok(Tabulated { breaks, values })
    }

    pub fn eval(&self, s: f64) -> f64 {
        if s <= self.breaks[0] {
            return self.values[0];
        }
        let last = self.breaks.len() - 1;
        if s >= self.breaks[last] {
            return self.values[last];
        }
        let i = match self
            .breaks
            .binary_search_by(|b| b.partial_cmp(&s).unwrap())
        {
            Ok(i) => return self.values[i],
            Err(i) => i - 1,
        };
        let t = (s - self.breaks[i]) / (self.breaks[i + 1] - self.breaks[i]);
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }

    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Where a nonlinearity blows up at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Singularity {
    None,
    PlusInfinity,
    MinusInfinity,
}

/// Integrability of phi on the two sides of the origin. `RightOnly` means the
/// integral over (0, delta) is finite while the one over (-delta, 0) is not.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegrabilityClass {
    BothIntegrable,
    RightOnly,
    LeftOnly,
    NoneIntegrable,
}

/// Model parameters of a power-type nonlinearity c/|s|^gamma + smooth(s).
#[derive(Clone, Debug, PartialEq)]
pub struct PowerModel {
    pub c: f64,
    pub gamma_left: f64,
    pub gamma_right: f64,
    pub smooth: Polynomial,
}

/// An evaluable nonlinearity phi: R -> R u {+-inf}, finite away from 0.
#[derive(Clone, Debug, PartialEq)]
pub enum Nonlinearity {
    /// c / |s|^gamma + smooth(s) with c > 0, gamma > 0.
    Power { c: f64, gamma: f64, smooth: Polynomial },
    /// Power model with different exponents left and right of the origin.
    PiecewisePower {
        c: f64,
        gamma_left: f64,
        gamma_right: f64,
        smooth: Polynomial,
    },
    Constant(f64),
    Smooth(Polynomial),
    /// phi(clamp(s, -radius, radius)): flattens the tails, keeps the origin.
    Capped { base: Box<Nonlinearity>, radius: f64 },
    /// T_height(phi(s)): clamps the value to [-height, height].
    Truncated { base: Box<Nonlinearity>, height: f64 },
    /// phi / (1 + |phi| / level), equal to level at a plus-infinity origin.
    Homographic { base: Box<Nonlinearity>, level: f64 },
    /// s -> -phi(-s); maps a minus-infinity singularity to a plus-infinity one.
    Reflected(Box<Nonlinearity>),
    /// phi + shift.
    Offset { base: Box<Nonlinearity>, shift: f64 },
    /// Smoothing by a compactly supported kernel of the given width.
    Mollified { base: Box<Nonlinearity>, width: f64 },
    Tabulated(Tabulated),
}

use Nonlinearity::*;

impl Nonlinearity {
    pub fn power(c: f64, gamma: f64) -> Result<Self> {
        Self::power_with_smooth(c, gamma, Polynomial::zero())
    }

    pub fn power_with_smooth(c: f64, gamma: f64, smooth: Polynomial) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) || !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "power model needs c > 0 and gamma > 0, got c = {c}, gamma = {gamma}"
            )));
        }
        Ok(Power { c, gamma, smooth })
    }

    pub fn piecewise_power(
        c: f64,
        gamma_left: f64,
        gamma_right: f64,
        smooth: Polynomial,
    ) -> Result<Self> {
        if !(c > 0.0) || !(gamma_left > 0.0) || !(gamma_right > 0.0) {
            return Err(Error::InvalidInput(
                "piecewise power model needs c > 0 and positive exponents".into(),
            ));
        }
        Ok(PiecewisePower {
            c,
            gamma_left,
            gamma_right,
            smooth,
        })
    }

    pub fn constant(k: f64) -> Self {
        Constant(k)
    }

    pub fn smooth(p: Polynomial) -> Self {
        Smooth(p)
    }

    pub fn tabulated(t: Tabulated) -> Self {
        Tabulated(t)
    }

    /// Cap the argument at +-m (the hat transform that bounds phi outside
    /// every neighbourhood of the origin without touching the singularity).
    pub fn cap_at(&self, m: f64) -> Result<Self> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(Error::InvalidInput(format!("cap radius must be positive, got {m}")));
        }
        Ok(Capped {
            base: Box::new(self.clone()),
            radius: m,
        })
    }

    /// Truncate the value at height n.
    pub fn truncate(&self, n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "truncation height must be positive, got {n}"
            )));
        }
        Ok(Truncated {
            base: Box::new(self.clone()),
            height: n,
        })
    }

    /// Homographic flattening phi / (1 + |phi| / n).
    pub fn homographic(&self, n: f64) -> Result<Self> {
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "homographic level must be positive, got {n}"
            )));
        }
        Ok(Homographic {
            base: Box::new(self.clone()),
            level: n,
        })
    }

    /// s -> -phi(-s). An involution on values; turns phi(0) = -inf data into
    /// the +inf convention (the solution/datum pair transforms as
    /// (u, g) -> (-u, -g) alongside).
    pub fn reflect(&self) -> Self {
        if let Reflected(base) = self {
            return (**base).clone();
        }
        Reflected(Box::new(self.clone()))
    }

    pub fn offset(&self, shift: f64) -> Self {
        Offset {
            base: Box::new(self.clone()),
            shift,
        }
    }

    /// Convolution with a compactly supported smoothing kernel. Defined only
    /// for bases that are finite everywhere.
    pub fn mollify(&self, width: f64) -> Result<Self> {
        if self.singularity() != Singularity::None {
            return Err(Error::UnsupportedKind(
                "mollification of a singular nonlinearity".into(),
            ));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "mollifier width must be positive, got {width}"
            )));
        }
        Ok(Mollified {
            base: Box::new(self.clone()),
            width,
        })
    }

    /// Evaluate phi(s). May return +-infinity only at s = 0.
    pub fn eval(&self, s: f64) -> f64 {
        match self {
            Power { c, gamma, smooth } => {
                if s == 0.0 {
                    f64::INFINITY
                } else {
                    c * s.abs().powf(-gamma) + smooth.eval(s)
                }
            }
            PiecewisePower {
                c,
                gamma_left,
                gamma_right,
                smooth,
            } => {
                if s == 0.0 {
                    f64::INFINITY
                } else {
                    let gamma = if s > 0.0 { *gamma_right } else { *gamma_left };
                    c * s.abs().powf(-gamma) + smooth.eval(s)
                }
            }
            Constant(k) => *k,
            Smooth(p) => p.eval(s),
            Capped { base, radius } => base.eval(s.clamp(-radius, *radius)),
            Truncated { base, height } => {
                let v = base.eval(s);
                if v.is_infinite() {
                    height * v.signum()
                } else {
                    v.clamp(-height, *height)
                }
            }
            Homographic { base, level } => {
                let v = base.eval(s);
                if v.is_infinite() {
                    level * v.signum()
                } else {
                    v / (1.0 + v.abs() / level)
                }
            }
            Reflected(base) => -base.eval(-s),
            Offset { base, shift } => base.eval(s) + shift,
            Mollified { base, width } => {
                // quartic kernel 15/16 (1 - t^2)^2 on [-1, 1]
                let f = |t: f64| {
                    let k = 15.0 / 16.0 * (1.0 - t * t).powi(2);
                    k * base.eval(s - width * t)
                };
                quad::composite(&f, -1.0, 1.0, 4)
            }
            Tabulated(t) => t.eval(s),
        }
    }

    /// Behaviour at the origin.
    pub fn singularity(&self) -> Singularity {
        match self {
            Power { .. } | PiecewisePower { .. } => Singularity::PlusInfinity,
            Constant(_) | Smooth(_) | Tabulated(_) => Singularity::None,
            Capped { base, .. } | Offset { base, .. } => base.singularity(),
            Truncated { .. } | Homographic { .. } | Mollified { .. } => Singularity::None,
            Reflected(base) => match base.singularity() {
                Singularity::None => Singularity::None,
                Singularity::PlusInfinity => Singularity::MinusInfinity,
                Singularity::MinusInfinity => Singularity::PlusInfinity,
            },
        }
    }

    /// phi(0) = +infinity.
    pub fn singular_at_zero(&self) -> bool {
        self.singularity() == Singularity::PlusInfinity
    }

    /// Power-model parameters when this is (a wrapper around) one.
    pub fn model(&self) -> Option<PowerModel> {
        match self {
            Power { c, gamma, smooth } => Some(PowerModel {
                c: *c,
                gamma_left: *gamma,
                gamma_right: *gamma,
                smooth: smooth.clone(),
            }),
            PiecewisePower {
                c,
                gamma_left,
                gamma_right,
                smooth,
            } => Some(PowerModel {
                c: *c,
                gamma_left: *gamma_left,
                gamma_right: *gamma_right,
                smooth: smooth.clone(),
            }),
            _ => None,
        }
    }

    /// True when phi is bounded on {|s| >= delta} for every delta > 0
    /// (hypothesis-level tail flag).
    pub fn bounded_outside_origin(&self) -> bool {
        match self {
            Power { smooth, .. } | PiecewisePower { smooth, .. } => smooth.degree() == 0,
            Constant(_) | Tabulated(_) => true,
            Smooth(p) => p.degree() == 0,
            Capped { .. } | Truncated { .. } | Homographic { .. } => true,
            Reflected(base) | Offset { base, .. } | Mollified { base, .. } => {
                base.bounded_outside_origin()
            }
        }
    }

    /// Monotone non-increasing for s > 0 (the comparison/uniqueness
    /// hypothesis). Analytic for the model shapes, sampled otherwise.
    pub fn monotone_nonincreasing_on_positive(&self) -> bool {
        match self {
            Power { smooth, .. } | PiecewisePower { smooth, .. } => match smooth.as_constant() {
                Some(_) => true,
                None => self.scan_monotone_nonincreasing(),
            },
            Constant(_) => true,
            Smooth(p) => p.as_constant().is_some() || self.scan_monotone_nonincreasing(),
            // clamps and the homographic map are monotone transforms
            Capped { base, .. } | Truncated { base, .. } | Homographic { base, .. } => {
                base.monotone_nonincreasing_on_positive()
            }
            Offset { base, .. } => base.monotone_nonincreasing_on_positive(),
            Reflected(_) | Mollified { .. } | Tabulated(_) => {
                self.scan_monotone_nonincreasing()
            }
        }
    }

    fn scan_monotone_nonincreasing(&self) -> bool {
        let points = geometric_scan_points(1e-9, SCAN_RADIUS, 240);
        let mut prev = f64::INFINITY;
        for s in points {
            let v = self.eval(s);
            if v.is_nan() {
                return false;
            }
            if v > prev + 1e-10 * (1.0 + prev.abs()) {
                return false;
            }
            prev = v;
        }
        true
    }

    /// Infimum over the reals, with the radius of the scan when one was
    /// needed. Errors with `InfiniteInfimum` when the tail trend points down
    /// without a floor.
    pub fn infimum(&self) -> Result<(f64, Option<f64>)> {
        match self {
            Constant(k) => Ok((*k, None)),
            Power { smooth, .. } | PiecewisePower { smooth, .. } => {
                if let Some(k0) = smooth.as_constant() {
                    // c / |s|^gamma > 0 decays to 0 at infinity
                    Ok((k0, None))
                } else {
                    self.scan_infimum()
                }
            }
            Smooth(p) => {
                if let Some(k) = p.as_constant() {
                    Ok((k, None))
                } else {
                    let lead = *p.coeffs().last().unwrap();
                    let odd = p.degree() % 2 == 1;
                    if odd || lead < 0.0 {
                        Err(Error::InfiniteInfimum {
                            value: f64::NEG_INFINITY,
                            at: if lead < 0.0 { SCAN_RADIUS } else { -SCAN_RADIUS },
                        })
                    } else {
                        self.scan_infimum()
                    }
                }
            }
            Truncated { base, height } => {
                let (b, r) = base.infimum()?;
                Ok((b.clamp(-height, *height), r))
            }
            Homographic { base, level } => {
                let (b, _) = match base.infimum() {
                    Ok(v) => v,
                    // a base unbounded below maps to -level
                    Err(Error::InfiniteInfimum { .. }) => {
                        return Ok((-level, None));
                    }
                    Err(e) => return Err(e),
                };
                Ok((b / (1.0 + b.abs() / level), None))
            }
            Offset { base, shift } => {
                let (b, r) = base.infimum()?;
                Ok((b + shift, r))
            }
            Reflected(base) => {
                if base.singular_at_zero() {
                    return Err(Error::InfiniteInfimum {
                        value: f64::NEG_INFINITY,
                        at: 0.0,
                    });
                }
                self.scan_infimum()
            }
            Tabulated(t) => Ok((
                t.values().iter().fold(f64::INFINITY, |m, v| m.min(*v)),
                None,
            )),
            Capped { .. } | Mollified { .. } => self.scan_infimum(),
        }
    }

    fn scan_infimum(&self) -> Result<(f64, Option<f64>)> {
        let mut best = f64::INFINITY;
        let mut best_at = 0.0;
        let pts = geometric_scan_points(1e-9, SCAN_RADIUS, 240);
        for s in pts.iter().flat_map(|s| [*s, -*s]) {
            let v = self.eval(s);
            if v.is_finite() && v < best {
                best = v;
                best_at = s;
            }
        }
        // unbounded-below heuristic: minimum sits at the scan edge and the
        // value is still falling there
        for edge in [SCAN_RADIUS, -SCAN_RADIUS] {
            let v_edge = self.eval(edge);
            let v_half = self.eval(edge / 2.0);
            if v_edge.is_finite()
                && (v_edge - best).abs() <= 1e-12 * (1.0 + best.abs())
                && v_edge < v_half - 1e-9 * (1.0 + v_half.abs())
            {
                return Err(Error::InfiniteInfimum {
                    value: v_edge,
                    at: edge,
                });
            }
        }
        if !best.is_finite() {
            return Err(Error::InfiniteInfimum {
                value: best,
                at: best_at,
            });
        }
        Ok((best, Some(SCAN_RADIUS)))
    }

    /// sup |phi| over {|s| >= r}, estimated on a geometric scan up to the
    /// standard radius.
    pub fn sup_abs_outside(&self, r: f64) -> f64 {
        let lo = r.max(1e-12);
        let pts = geometric_scan_points(lo, SCAN_RADIUS.max(2.0 * lo), 200);
        let mut best = 0.0f64;
        for s in pts.iter().flat_map(|s| [*s, -*s]) {
            let v = self.eval(s).abs();
            if v.is_finite() && v > best {
                best = v;
            }
        }
        best
    }

    /// Bound on |phi| over the whole line; infinite for singular shapes.
    pub fn sup_abs(&self) -> f64 {
        match self {
            Constant(k) => k.abs(),
            Truncated { height, .. } => *height,
            Homographic { level, .. } => *level,
            Tabulated(t) => t.values().iter().fold(0.0f64, |m, v| m.max(v.abs())),
            _ => {
                if self.singularity() != Singularity::None {
                    f64::INFINITY
                } else {
                    self.sup_abs_outside(0.0).max(self.eval(0.0).abs())
                }
            }
        }
    }

    /// L^1 norm of phi over (-r, r), by graded quadrature of |phi|.
    pub fn l1_origin(&self, r: f64) -> Result<f64> {
        let right = side_l1(self, r, Side::Right)?;
        let left = side_l1(self, r, Side::Left)?;
        Ok(left + right)
    }

    /// Classify integrability of phi near the origin on each side.
    pub fn integrability_class(&self) -> Result<IntegrabilityClass> {
        match self {
            Power { gamma, .. } => Ok(if *gamma < 1.0 {
                IntegrabilityClass::BothIntegrable
            } else {
                IntegrabilityClass::NoneIntegrable
            }),
            PiecewisePower {
                gamma_left,
                gamma_right,
                ..
            } => Ok(class_from_sides(*gamma_right < 1.0, *gamma_left < 1.0)),
            Constant(_) | Smooth(_) | Tabulated(_) => Ok(IntegrabilityClass::BothIntegrable),
            Truncated { .. } | Homographic { .. } | Mollified { .. } => {
                Ok(IntegrabilityClass::BothIntegrable)
            }
            Capped { base, .. } | Offset { base, .. } => base.integrability_class(),
            Reflected(base) => Ok(match base.integrability_class()? {
                IntegrabilityClass::RightOnly => IntegrabilityClass::LeftOnly,
                IntegrabilityClass::LeftOnly => IntegrabilityClass::RightOnly,
                other => other,
            }),
        }
    }

    /// psi(s) = int_0^s phi(t) dt. Closed form for the model shapes, graded
    /// quadrature otherwise; errors when the singularity is not integrable on
    /// the side the integral needs.
    pub fn antiderivative(&self, s: f64) -> Result<f64> {
        psi::eval(self, s)
    }
}

fn class_from_sides(right: bool, left: bool) -> IntegrabilityClass {
    match (right, left) {
        (true, true) => IntegrabilityClass::BothIntegrable,
        (true, false) => IntegrabilityClass::RightOnly,
        (false, true) => IntegrabilityClass::LeftOnly,
        (false, false) => IntegrabilityClass::NoneIntegrable,
    }
}

fn side_l1(phi: &Nonlinearity, r: f64, side: Side) -> Result<f64> {
    // closed form for power models with a constant smooth part
    if let Some(model) = phi.model() {
        if let Some(k0) = model.smooth.as_constant() {
            let gamma = match side {
                Side::Right => model.gamma_right,
                Side::Left => model.gamma_left,
            };
            if gamma >= 1.0 {
                return Err(Error::NonIntegrableSingularity { side });
            }
            let power_mass = |t: f64| model.c * t.powf(1.0 - gamma) / (1.0 - gamma);
            // |c t^-gamma + k0| changes sign at most once on (0, r)
            let value = if k0 >= 0.0 {
                power_mass(r) + k0 * r
            } else {
                let crossing = (model.c / -k0).powf(1.0 / gamma);
                if crossing >= r {
                    power_mass(r) + k0 * r
                } else {
                    let inner = power_mass(crossing) + k0 * crossing;
                    let outer = -(power_mass(r) - power_mass(crossing) + k0 * (r - crossing));
                    inner + outer
                }
            };
            return Ok(value);
        }
    }
    let f = |t: f64| phi.eval(t).abs();
    let (value, partials) = match side {
        Side::Right => quad::graded_with_trace(&f, 0.0, r, Graded::Left, 40)?,
        Side::Left => quad::graded_with_trace(&f, -r, 0.0, Graded::Right, 40)?,
    };
    match quad::classify_partials(&partials, 4, 0.01) {
        quad::RefinementTrend::Diverging => Err(Error::NonIntegrableSingularity { side }),
        quad::RefinementTrend::Mixed => Err(Error::Inconclusive(format!(
            "graded refinements of the {side}-side L1 mass neither settle nor clearly diverge"
        ))),
        quad::RefinementTrend::Converged => Ok(value),
    }
}

/// Numerically detect whether int over (0, delta) (right) or (-delta, 0)
/// (left) of f is finite, by the graded-refinement divergence heuristic.
pub fn detect_side_integrable<F: Fn(f64) -> f64>(f: F, delta: f64, side: Side) -> Result<bool> {
    let (_, partials) = match side {
        Side::Right => quad::graded_with_trace(&f, 0.0, delta, Graded::Left, 40)?,
        Side::Left => quad::graded_with_trace(&f, -delta, 0.0, Graded::Right, 40)?,
    };
    match quad::classify_partials(&partials, 4, 0.01) {
        quad::RefinementTrend::Converged => Ok(true),
        quad::RefinementTrend::Diverging => Ok(false),
        quad::RefinementTrend::Mixed => Err(Error::Inconclusive(format!(
            "cannot separate slow divergence from a large finite value on the {side} side"
        ))),
    }
}

/// Geometric sample set {lo * ratio^k} up to hi, ascending.
pub(crate) fn geometric_scan_points(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let ratio = (hi / lo).powf(1.0 / (count as f64 - 1.0));
    let mut s = lo;
    for _ in 0..count {
        out.push(s);
        s *= ratio;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv_sqrt() -> Nonlinearity {
        Nonlinearity::power(1.0, 0.5).unwrap()
    }

    #[test]
    fn eval_power_model() {
        let phi = inv_sqrt();
        assert!((phi.eval(4.0) - 0.5).abs() < 1e-15);
        assert_eq!(phi.eval(0.0), f64::INFINITY);
        assert!(phi.singular_at_zero());
    }

    #[test]
    fn eval_capped_clamps_argument() {
        let phi = inv_sqrt().cap_at(4.0).unwrap();
        assert!((phi.eval(9.0) - 0.5).abs() < 1e-15);
        assert!((phi.eval(1.0) - 1.0).abs() < 1e-15);
        assert!((phi.eval(-25.0) - 0.5).abs() < 1e-15);
        // still singular at the origin
        assert_eq!(phi.eval(0.0), f64::INFINITY);
        assert!(phi.bounded_outside_origin());
    }

    #[test]
    fn cap_leaves_values_inside_the_window() {
        let base = Nonlinearity::power_with_smooth(2.0, 0.4, Polynomial::new(vec![0.3, -1.0]))
            .unwrap();
        let capped = base.cap_at(3.0).unwrap();
        for s in [-3.0, -1.5, -0.01, 0.02, 0.7, 3.0] {
            assert_eq!(base.eval(s), capped.eval(s));
        }
    }

    #[test]
    fn truncation_is_tk_of_phi() {
        let phi = inv_sqrt().truncate(3.0).unwrap();
        // T_3(phi(1/16)) = T_3(4) = 3
        assert!((phi.eval(1.0 / 16.0) - 3.0).abs() < 1e-15);
        assert!((phi.eval(1.0) - 1.0).abs() < 1e-15);
        assert_eq!(phi.eval(0.0), 3.0);
        assert!(!phi.singular_at_zero());
    }

    #[test]
    fn homographic_values() {
        let phi = inv_sqrt().homographic(2.0).unwrap();
        // phi(1/4) = 2 -> 2 / (1 + 2/2) = 1
        assert!((phi.eval(0.25) - 1.0).abs() < 1e-15);
        // value at a singular origin is the level
        let seven = inv_sqrt().homographic(7.0).unwrap();
        assert_eq!(seven.eval(0.0), 7.0);
    }

    #[test]
    fn reflect_flips_sign_and_argument() {
        // hat phi(s) = -1/sqrt(|s|) as the reflection of 1/sqrt(|s|)
        let hat = inv_sqrt().reflect();
        assert_eq!(hat.singularity(), Singularity::MinusInfinity);
        assert!((hat.eval(1.0) + 1.0).abs() < 1e-15);
        let back = hat.reflect();
        assert!((back.eval(1.0) - 1.0).abs() < 1e-15);

        // hat phi(s) = -1/sqrt(|s|) + s, reflected at s = 2 -> 1/sqrt(2) + 2
        let base =
            Nonlinearity::power_with_smooth(1.0, 0.5, Polynomial::new(vec![0.0, 1.0])).unwrap();
        let hat = base.reflect();
        let r = hat.reflect();
        assert!((r.eval(2.0) - (1.0 / 2.0f64.sqrt() + 2.0)).abs() < 1e-14);
    }

    #[test]
    fn reflect_is_an_involution_on_samples() {
        let base =
            Nonlinearity::power_with_smooth(1.5, 0.3, Polynomial::new(vec![0.2, -0.7, 0.1]))
                .unwrap();
        let twice = base.reflect().reflect();
        for s in [-10.0, -1.0, -1e-4, 1e-4, 0.5, 3.0, 100.0] {
            assert!((base.eval(s) - twice.eval(s)).abs() < 1e-12 * (1.0 + base.eval(s).abs()));
        }
    }

    #[test]
    fn integrability_classes() {
        let third = Nonlinearity::power(1.0, 1.0 / 3.0).unwrap();
        assert_eq!(
            third.integrability_class().unwrap(),
            IntegrabilityClass::BothIntegrable
        );
        let one = Nonlinearity::power(1.0, 1.0).unwrap();
        assert_eq!(
            one.integrability_class().unwrap(),
            IntegrabilityClass::NoneIntegrable
        );
        let pw = Nonlinearity::piecewise_power(1.0, 0.5, 1.0, Polynomial::zero()).unwrap();
        assert_eq!(
            pw.integrability_class().unwrap(),
            IntegrabilityClass::LeftOnly
        );
    }

    #[test]
    fn infimum_of_model_is_smooth_constant() {
        let phi = Nonlinearity::power_with_smooth(2.0, 0.5, Polynomial::new(vec![-3.0])).unwrap();
        let (inf, radius) = phi.infimum().unwrap();
        assert_eq!(inf, -3.0);
        assert!(radius.is_none());
    }

    #[test]
    fn infimum_detects_unbounded_below() {
        let phi = Nonlinearity::smooth(Polynomial::new(vec![0.0, 1.0]));
        assert!(matches!(phi.infimum(), Err(Error::InfiniteInfimum { .. })));
        let refl = inv_sqrt().reflect();
        assert!(matches!(refl.infimum(), Err(Error::InfiniteInfimum { .. })));
    }

    #[test]
    fn monotonicity_flags() {
        assert!(inv_sqrt().monotone_nonincreasing_on_positive());
        assert!(inv_sqrt().truncate(5.0).unwrap().monotone_nonincreasing_on_positive());
        assert!(inv_sqrt().homographic(5.0).unwrap().monotone_nonincreasing_on_positive());
        let rising =
            Nonlinearity::power_with_smooth(1.0, 0.5, Polynomial::new(vec![0.0, 50.0])).unwrap();
        assert!(!rising.monotone_nonincreasing_on_positive());
    }

    #[test]
    fn mollify_rejects_singular_base() {
        assert!(matches!(
            inv_sqrt().mollify(0.1),
            Err(Error::UnsupportedKind(_))
        ));
        let smooth = Nonlinearity::smooth(Polynomial::new(vec![1.0, 2.0]));
        let m = smooth.mollify(0.01).unwrap();
        // smoothing an affine function changes nothing
        assert!((m.eval(0.7) - smooth.eval(0.7)).abs() < 1e-10);
    }

    #[test]
    fn detect_side_integrability_numeric() {
        assert!(detect_side_integrable(|t: f64| t.abs().powf(-0.5), 1.0, Side::Right).unwrap());
        assert!(!detect_side_integrable(|t: f64| 1.0 / t.abs(), 1.0, Side::Right).unwrap());
        assert!(detect_side_integrable(|t: f64| t.abs().powf(-0.5), 1.0, Side::Left).unwrap());
    }

    #[test]
    fn tabulated_eval_and_extension() {
        let t = Tabulated::new(vec![-1.0, 0.0, 1.0], vec![2.0, 5.0, 3.0]).unwrap();
        let phi = Nonlinearity::tabulated(t);
        assert_eq!(phi.eval(-2.0), 2.0);
        assert_eq!(phi.eval(2.0), 3.0);
        assert!((phi.eval(0.5) - 4.0).abs() < 1e-15);
        assert!(!phi.singular_at_zero());
    }
}
