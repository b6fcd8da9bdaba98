//! Approximation families phi_n and the two-part check that a family is a
//! reasonable approximation of its base: local uniform convergence away from
//! the origin plus uniform divergence to +infinity near it.

use super::{geometric_scan_points, Nonlinearity};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FamilyKind {
    Truncation,
    Homographic,
    Identity,
    ExponentDrift,
    Mollified,
}

/// Per-index model parameters for an exponent-drift family, aligned with the
/// index schedule. The smooth part is inherited from the base.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftSchedule {
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// A scheduled family of approximations of a base nonlinearity.
#[derive(Clone, Debug)]
pub struct ApproxFamily {
    pub kind: FamilyKind,
    pub base: Nonlinearity,
    pub schedule: Vec<f64>,
    pub drift: Option<DriftSchedule>,
}

impl ApproxFamily {
    pub fn new(kind: FamilyKind, base: Nonlinearity, schedule: Vec<f64>) -> Result<Self> {
        if schedule.is_empty() {
            return Err(Error::InvalidInput("empty index schedule".into()));
        }
        if schedule.iter().any(|n| !(n.is_finite() && *n > 0.0)) {
            return Err(Error::InvalidInput(
                "index schedule entries must be positive".into(),
            ));
        }
        if schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "index schedule must be strictly increasing".into(),
            ));
        }
        if kind == FamilyKind::ExponentDrift {
            return Err(Error::InvalidInput(
                "exponent-drift families need a drift schedule; use with_drift".into(),
            ));
        }
        Ok(ApproxFamily {
            kind,
            base,
            schedule,
            drift: None,
        })
    }

    pub fn with_drift(base: Nonlinearity, schedule: Vec<f64>, drift: DriftSchedule) -> Result<Self> {
        if base.model().is_none() {
            return Err(Error::UnsupportedKind(
                "exponent drift requires a power-model base".into(),
            ));
        }
        if drift.c.len() != schedule.len() || drift.gamma.len() != schedule.len() {
            return Err(Error::InvalidInput(
                "drift parameter lists must match the index schedule length".into(),
            ));
        }
        let mut fam = ApproxFamily::new(FamilyKind::Identity, base, schedule)?;
        fam.kind = FamilyKind::ExponentDrift;
        fam.drift = Some(drift);
        Ok(fam)
    }

    fn position(&self, n: f64) -> Result<usize> {
        self.schedule
            .iter()
            .position(|m| (m - n).abs() <= 1e-12 * (1.0 + n.abs()))
            .ok_or_else(|| {
                Error::InvalidInput(format!("index {n} is not in the family schedule"))
            })
    }

    /// Materialize the member with scheduled index n.
    pub fn member(&self, n: f64) -> Result<Nonlinearity> {
        let pos = self.position(n)?;
        match self.kind {
            FamilyKind::Truncation => self.base.truncate(n),
            FamilyKind::Homographic => self.base.homographic(n),
            FamilyKind::Identity => Ok(self.base.clone()),
            FamilyKind::Mollified => self.base.mollify(1.0 / n),
            FamilyKind::ExponentDrift => {
                let drift = self.drift.as_ref().expect("validated at construction");
                let model = self.base.model().expect("validated at construction");
                Nonlinearity::power_with_smooth(drift.c[pos], drift.gamma[pos], model.smooth)
            }
        }
    }

    pub fn members(&self) -> Result<Vec<(f64, Nonlinearity)>> {
        self.schedule
            .iter()
            .map(|n| Ok((*n, self.member(*n)?)))
            .collect()
    }
}

/// One scheduled member's distance/divergence measurements.
#[derive(Clone, Debug)]
pub struct MemberCheck {
    pub index: f64,
    /// sup over sampled [eta, R] and [-R, -eta] of |phi_n - phi|.
    pub sup_distance: f64,
    /// min over sampled [-eta, eta] of phi_n.
    pub min_near_zero: f64,
}

/// Report of the reasonable-approximation check.
#[derive(Clone, Debug)]
pub struct ReasonableReport {
    pub members: Vec<MemberCheck>,
    /// (eta_k, min over the tail half of the schedule of min_{[-eta_k, eta_k]} phi_n)
    pub eta_trend: Vec<(f64, f64)>,
    pub uniform_pass: bool,
    /// None when the base is not singular; blow-up is only required then.
    pub blowup_pass: Option<bool>,
    pub verdict: bool,
}

/// Check a scheduled family against its base.
pub fn check_reasonable_family(
    family: &ApproxFamily,
    eta: f64,
    r: f64,
    tol: f64,
) -> Result<ReasonableReport> {
    let members = family.members()?;
    check_member_sequence(&family.base, &members, eta, r, tol)
}

/// Same check on an explicit member list, for families built by hand.
pub fn check_member_sequence(
    base: &Nonlinearity,
    members: &[(f64, Nonlinearity)],
    eta: f64,
    r: f64,
    tol: f64,
) -> Result<ReasonableReport> {
    if !(0.0 < eta && eta < r) {
        return Err(Error::InvalidInput(format!(
            "need 0 < eta < R, got eta = {eta}, R = {r}"
        )));
    }
    if members.is_empty() {
        return Err(Error::InvalidInput("no members to check".into()));
    }
    let away = geometric_scan_points(eta, r, 257);
    let mut checks = Vec::with_capacity(members.len());
    for (index, phi_n) in members {
        let mut sup = 0.0f64;
        for s in away.iter().flat_map(|s| [*s, -*s]) {
            let d = (phi_n.eval(s) - base.eval(s)).abs();
            if d.is_nan() || d > sup {
                sup = if d.is_nan() { f64::INFINITY } else { d };
            }
        }
        checks.push(MemberCheck {
            index: *index,
            sup_distance: sup,
            min_near_zero: min_on_symmetric_interval(phi_n, eta),
        });
    }

    let uniform_pass = {
        let last = checks.last().unwrap().sup_distance;
        let first = checks.first().unwrap().sup_distance;
        last <= tol && last <= first + tol
    };

    if !base.singular_at_zero() {
        return Ok(ReasonableReport {
            members: checks,
            eta_trend: Vec::new(),
            uniform_pass,
            blowup_pass: None,
            verdict: uniform_pass,
        });
    }

    // Blow-up near the origin is a double limit: for shrinking eta_k, the
    // minima over [-eta_k, eta_k] of the late members must climb without a
    // ceiling (for a fixed eta they saturate at inf_{[-eta,eta]} phi).
    let tail_from = members.len() / 2;
    let mut trend = Vec::new();
    for k in 0..6 {
        let eta_k = eta * 0.5f64.powi(k);
        let tail_min = members[tail_from..]
            .iter()
            .map(|(_, phi_n)| min_on_symmetric_interval(phi_n, eta_k))
            .fold(f64::INFINITY, f64::min);
        trend.push((eta_k, tail_min));
    }
    let strictly_up = trend.windows(2).all(|w| w[1].1 > w[0].1);
    let grows = trend.last().unwrap().1 >= 2.0 * trend.first().unwrap().1.max(1e-12);
    let pass = strictly_up && grows;
    Ok(ReasonableReport {
        members: checks,
        eta_trend: trend,
        uniform_pass,
        blowup_pass: Some(pass),
        verdict: uniform_pass && pass,
    })
}

fn min_on_symmetric_interval(phi: &Nonlinearity, eta: f64) -> f64 {
    let mut best = f64::INFINITY;
    if eta <= 0.0 {
        let v = phi.eval(0.0);
        return if v.is_finite() { v } else { f64::INFINITY };
    }
    let pts = geometric_scan_points(eta * 1e-6, eta, 129);
    for s in pts.iter().flat_map(|s| [*s, -*s]).chain([0.0]) {
        let v = phi.eval(s);
        if v.is_finite() && v < best {
            best = v;
        }
    }
    best
}
