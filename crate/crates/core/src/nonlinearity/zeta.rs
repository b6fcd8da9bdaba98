//! The shifted-reciprocal transform: phi_plus = phi - inf phi + 1 >= 1,
//! zeta(s) = int_0^s dr / phi_plus(r), and its monotone inverse. zeta
//! linearizes the pure singular flow w' = K phi_plus(w) into zeta(w) = K x.

use super::Nonlinearity;
use crate::error::{Error, Result};
use crate::quad;

/// Tabulated zeta on [0, s_max] with exact panel refinement at query time.
#[derive(Clone, Debug)]
pub struct ZetaTransform {
    phi_plus: Nonlinearity,
    edges: Vec<f64>,
    cum: Vec<f64>,
    /// Integrate 1 / phi_plus(-r) instead (the minus branch of the splice).
    mirrored: bool,
}

impl ZetaTransform {
    pub fn build(phi_plus: &Nonlinearity, s_max: f64) -> Result<Self> {
        Self::build_oriented(phi_plus, s_max, false)
    }

    /// zeta on the mirrored axis: int_0^s dr / phi_plus(-r).
    pub fn build_mirrored(phi_plus: &Nonlinearity, s_max: f64) -> Result<Self> {
        Self::build_oriented(phi_plus, s_max, true)
    }

    fn build_oriented(phi_plus: &Nonlinearity, s_max: f64, mirrored: bool) -> Result<Self> {
        if !(s_max > 0.0 && s_max.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "zeta range must be positive, got {s_max}"
            )));
        }
        let sign = if mirrored { -1.0 } else { 1.0 };
        // 0 <= 1/phi_plus <= 1 needs phi_plus >= 1
        for s in super::geometric_scan_points(1e-9 * s_max, s_max, 120) {
            let v = phi_plus.eval(sign * s);
            if v < 1.0 - 1e-9 {
                return Err(Error::InvalidInput(format!(
                    "phi_plus drops to {v} at s = {}; it must stay >= 1",
                    sign * s
                )));
            }
        }
        let mut edges = vec![0.0];
        for k in (0..=50).rev() {
            edges.push(s_max * 0.5f64.powi(k));
        }
        edges.dedup();
        let w = integrand(phi_plus, mirrored);
        let mut cum = vec![0.0; edges.len()];
        for i in 0..edges.len() - 1 {
            cum[i + 1] = cum[i] + quad::gl8(&w, edges[i], edges[i + 1]);
        }
        if cum.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "zeta table".into(),
            });
        }
        Ok(ZetaTransform {
            phi_plus: phi_plus.clone(),
            edges,
            cum,
            mirrored,
        })
    }

    pub fn s_max(&self) -> f64 {
        *self.edges.last().unwrap()
    }

    pub fn zeta_max(&self) -> f64 {
        *self.cum.last().unwrap()
    }

    /// zeta(s) for s in [0, s_max].
    pub fn eval(&self, s: f64) -> Result<f64> {
        if !(0.0..=self.s_max() * (1.0 + 1e-12)).contains(&s) {
            return Err(Error::RangeExceeded {
                target: s,
                max: self.s_max(),
            });
        }
        Ok(self.eval_unchecked(s.min(self.s_max())))
    }

    fn eval_unchecked(&self, s: f64) -> f64 {
        let w = integrand(&self.phi_plus, self.mirrored);
        let i = match self
            .edges
            .binary_search_by(|e| e.partial_cmp(&s).unwrap())
        {
            Ok(i) => return self.cum[i],
            Err(0) => return 0.0,
            Err(i) => i - 1,
        };
        self.cum[i] + quad::gl8(&w, self.edges[i], s)
    }

    /// Monotone bisection inverse: the s in [0, s_max] with zeta(s) = t, to
    /// 1e-12 absolute accuracy on the transformed axis.
    pub fn inverse(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.zeta_max() * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::RangeExceeded {
                target: t,
                max: self.zeta_max(),
            });
        }
        let mut lo = 0.0;
        let mut hi = self.s_max();
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let v = self.eval_unchecked(mid);
            if (v - t).abs() <= 1e-12 {
                return Ok(mid);
            }
            if v < t {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= f64::EPSILON * self.s_max() {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

fn integrand(phi_plus: &Nonlinearity, mirrored: bool) -> impl Fn(f64) -> f64 + '_ {
    let sign = if mirrored { -1.0 } else { 1.0 };
    move |r: f64| {
        let v = phi_plus.eval(sign * r);
        if v.is_infinite() {
            0.0
        } else {
            1.0 / v
        }
    }
}

/// The shift/transform bundle for one nonlinearity.
#[derive(Clone, Debug)]
pub struct PlusShift {
    pub phi_plus: Nonlinearity,
    pub zeta: ZetaTransform,
    /// inf phi over the reals used for the shift.
    pub inf_phi: f64,
    /// Radius of the scan when the infimum had to be sampled.
    pub scan_radius: Option<f64>,
}

/// Build phi_plus = phi - inf phi + 1 together with zeta and its inverse on
/// [0, s_max]. Fails with `InfiniteInfimum` when the tail scan finds phi
/// unbounded below.
pub fn plus_shift_and_zeta(phi: &Nonlinearity, s_max: f64) -> Result<PlusShift> {
    let (inf_phi, scan_radius) = phi.infimum()?;
    let phi_plus = phi.offset(1.0 - inf_phi);
    let zeta = ZetaTransform::build(&phi_plus, s_max)?;
    Ok(PlusShift {
        phi_plus,
        zeta,
        inf_phi,
        scan_radius,
    })
}
