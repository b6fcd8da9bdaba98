//! Scenario configuration: TOML with one table per ingredient. Every
//! tolerance and schedule the solvers use appears here with the library
//! defaults, so under-specified constants are visible and overridable.

use serde::Deserialize;
use sfl_core::{
    ApproxFamily, BvpSettings, CellFn, DriftSchedule, FamilyKind, Grid, LadderSettings,
    Nonlinearity, Polynomial, RootSide, SeamEnd, SeamPoint, SeamSpec, Tabulated,
};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    SolveIvp,
    SolveBvp,
    SweepC,
    FindCstar,
    Construct,
    TailFix,
    Verify,
    Alternative,
    Stability,
    Instability,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::SolveIvp => "solve-ivp",
            Kind::SolveBvp => "solve-bvp",
            Kind::SweepC => "sweep-c",
            Kind::FindCstar => "find-cstar",
            Kind::Construct => "construct",
            Kind::TailFix => "tail-fix",
            Kind::Verify => "verify",
            Kind::Alternative => "alternative",
            Kind::Stability => "stability",
            Kind::Instability => "instability",
        }
    }
}

impl std::str::FromStr for Kind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "solve-ivp" => Ok(Kind::SolveIvp),
            "solve-bvp" => Ok(Kind::SolveBvp),
            "sweep-c" => Ok(Kind::SweepC),
            "find-cstar" => Ok(Kind::FindCstar),
            "construct" => Ok(Kind::Construct),
            "tail-fix" => Ok(Kind::TailFix),
            "verify" => Ok(Kind::Verify),
            "alternative" => Ok(Kind::Alternative),
            "stability" => Ok(Kind::Stability),
            "instability" => Ok(Kind::Instability),
            other => Err(format!("unknown scenario kind `{other}`")),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub kind: Kind,
    pub grid: GridConfig,
    #[serde(default)]
    pub phi: Option<PhiConfig>,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    #[serde(default)]
    pub seam: Option<SeamConfig>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "one")]
    pub length: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    #[serde(default)]
    pub a: Option<FieldConfig>,
    #[serde(default)]
    pub g: Option<FieldConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FieldConfig {
    Constant { value: f64 },
    Poly { coeffs: Vec<f64> },
}

impl FieldConfig {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            FieldConfig::Constant { value } => *value,
            FieldConfig::Poly { coeffs } => Polynomial::new(coeffs.clone()).eval(x),
        }
    }

    pub fn cells(&self, grid: &Grid) -> Result<CellFn, CliError> {
        match self {
            FieldConfig::Constant { value } => Ok(CellFn::constant(*grid, *value)),
            FieldConfig::Poly { coeffs } => {
                let p = Polynomial::new(coeffs.clone());
                CellFn::sample(*grid, |x| p.eval(x)).map_err(CliError::numeric)
            }
        }
    }
}

/// `kind = power | piecewise-power | capped | tabulated | constant | smooth`
/// with the model keys `c`, `gamma`, `gamma_left`, `gamma_right`, `cap_m`,
/// and `smooth_part` (ascending polynomial coefficients).
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhiConfig {
    pub kind: String,
    #[serde(default)]
    pub c: Option<f64>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub gamma_left: Option<f64>,
    #[serde(default)]
    pub gamma_right: Option<f64>,
    #[serde(default)]
    pub cap_m: Option<f64>,
    #[serde(default)]
    pub smooth_part: Option<Vec<f64>>,
    #[serde(default)]
    pub value: Option<f64>,
    #[serde(default)]
    pub s: Option<Vec<f64>>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl PhiConfig {
    pub fn build(&self) -> Result<Nonlinearity, CliError> {
        let smooth = Polynomial::new(self.smooth_part.clone().unwrap_or_default());
        let need = |field: &Option<f64>, name: &str| -> Result<f64, CliError> {
            field.ok_or_else(|| {
                CliError::config(format!("[phi] kind `{}` needs field `{name}`", self.kind))
            })
        };
        let base = match self.kind.as_str() {
            "power" => Nonlinearity::power_with_smooth(
                need(&self.c, "c")?,
                need(&self.gamma, "gamma")?,
                smooth,
            )
            .map_err(CliError::config_from)?,
            "piecewise-power" => Nonlinearity::piecewise_power(
                need(&self.c, "c")?,
                need(&self.gamma_left, "gamma_left")?,
                need(&self.gamma_right, "gamma_right")?,
                smooth,
            )
            .map_err(CliError::config_from)?,
            "capped" => {
                let inner = Nonlinearity::power_with_smooth(
                    need(&self.c, "c")?,
                    need(&self.gamma, "gamma")?,
                    smooth,
                )
                .map_err(CliError::config_from)?;
                inner
                    .cap_at(need(&self.cap_m, "cap_m")?)
                    .map_err(CliError::config_from)?
            }
            "constant" => Nonlinearity::constant(need(&self.value, "value")?),
            "smooth" => Nonlinearity::smooth(smooth),
            "tabulated" => {
                let s = self
                    .s
                    .clone()
                    .ok_or_else(|| CliError::config("[phi] tabulated needs `s`"))?;
                let values = self
                    .values
                    .clone()
                    .ok_or_else(|| CliError::config("[phi] tabulated needs `values`"))?;
                Nonlinearity::tabulated(
                    Tabulated::new(s, values).map_err(CliError::config_from)?,
                )
            }
            other => {
                return Err(CliError::config(format!("unknown phi kind `{other}`")));
            }
        };
        Ok(base)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: String,
    pub schedule: Vec<f64>,
    #[serde(default)]
    pub drift_c: Option<Vec<f64>>,
    #[serde(default)]
    pub drift_gamma: Option<Vec<f64>>,
}

impl FamilyConfig {
    pub fn build(&self, base: Nonlinearity) -> Result<ApproxFamily, CliError> {
        let kind = match self.kind.as_str() {
            "truncation" => FamilyKind::Truncation,
            "homographic" => FamilyKind::Homographic,
            "identity" => FamilyKind::Identity,
            "mollified" => FamilyKind::Mollified,
            "exponent-drift" => {
                let drift = DriftSchedule {
                    c: self
                        .drift_c
                        .clone()
                        .ok_or_else(|| CliError::config("[family] drift needs `drift_c`"))?,
                    gamma: self.drift_gamma.clone().ok_or_else(|| {
                        CliError::config("[family] drift needs `drift_gamma`")
                    })?,
                };
                return ApproxFamily::with_drift(base, self.schedule.clone(), drift)
                    .map_err(CliError::config_from);
            }
            other => {
                return Err(CliError::config(format!("unknown family kind `{other}`")));
            }
        };
        ApproxFamily::new(kind, base, self.schedule.clone()).map_err(CliError::config_from)
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeamEndConfig {
    pub amplitude: f64,
    pub exponent: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeamPointConfig {
    pub x: f64,
    pub amp_left: f64,
    pub exp_left: f64,
    pub amp_right: f64,
    pub exp_right: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeamConfig {
    pub gamma: f64,
    pub left: SeamEndConfig,
    pub right: SeamEndConfig,
    #[serde(default)]
    pub interior: Vec<SeamPointConfig>,
    #[serde(default)]
    pub splice_radius: f64,
}

impl SeamConfig {
    pub fn build(&self) -> SeamSpec {
        SeamSpec {
            gamma: self.gamma,
            left: SeamEnd {
                amplitude: self.left.amplitude,
                exponent: self.left.exponent,
            },
            interior: self
                .interior
                .iter()
                .map(|p| SeamPoint {
                    x: p.x,
                    amp_left: p.amp_left,
                    exp_left: p.exp_left,
                    amp_right: p.amp_right,
                    exp_right: p.exp_right,
                })
                .collect(),
            right: SeamEnd {
                amplitude: self.right.amplitude,
                exponent: self.right.exponent,
            },
            splice_radius: self.splice_radius,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    /// Constant added to the source (solve-ivp) or injected into a
    /// construction (construct/verify/stability).
    #[serde(default)]
    pub c: f64,
    /// Tail margin for tail-fix.
    #[serde(default)]
    pub delta: Option<f64>,
    /// Sweep constants; interpreted relative to the located critical value
    /// when `relative_to_cstar` is set.
    #[serde(default)]
    pub c_list: Vec<f64>,
    #[serde(default)]
    pub relative_to_cstar: bool,
    /// Bracket for the critical-constant search.
    #[serde(default)]
    pub bracket: Option<[f64; 2]>,
    /// Exit with code 3 when no critical constant exists in the bracket.
    #[serde(default)]
    pub expect_solution: bool,
    /// Family index selecting the member for solve-bvp (optional; phi itself
    /// must be bounded otherwise).
    #[serde(default)]
    pub member_index: Option<f64>,
    /// Washing thresholds for the instability schedule.
    #[serde(default)]
    pub eps: Vec<f64>,
    /// Clamp levels generating the bounded data of the instability schedule.
    #[serde(default)]
    pub clamp_levels: Vec<f64>,
    /// Cone slopes for forbidden-region overlays (solve-ivp).
    #[serde(default)]
    pub cone_ks: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TolerancesConfig {
    pub ladder_depth: usize,
    pub ladder_settle: f64,
    pub scan_points: usize,
    pub bisect_rel: f64,
    pub tau_kappa: f64,
    pub cstar_width: f64,
    pub cross_check_factor: f64,
    pub polish: bool,
    pub root_side: String,
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        let b = BvpSettings::default();
        let l = LadderSettings::default();
        TolerancesConfig {
            ladder_depth: l.depth,
            ladder_settle: l.settle_tol,
            scan_points: b.scan_points,
            bisect_rel: b.bisect_rel,
            tau_kappa: b.tau_kappa,
            cstar_width: b.cstar_width,
            cross_check_factor: b.cross_check_factor,
            polish: b.polish,
            root_side: "nearest-zero".into(),
        }
    }
}

impl TolerancesConfig {
    pub fn ladder(&self) -> LadderSettings {
        LadderSettings {
            depth: self.ladder_depth,
            settle_tol: self.ladder_settle,
        }
    }

    pub fn bvp(&self) -> Result<BvpSettings, CliError> {
        let root_side = match self.root_side.as_str() {
            "nearest-zero" => RootSide::NearestZero,
            "nonnegative" => RootSide::Nonnegative,
            other => {
                return Err(CliError::config(format!(
                    "unknown root_side `{other}` (expected nearest-zero or nonnegative)"
                )));
            }
        };
        Ok(BvpSettings {
            ladder: self.ladder(),
            scan_points: self.scan_points,
            bisect_rel: self.bisect_rel,
            tau_kappa: self.tau_kappa,
            cstar_width: self.cstar_width,
            cross_check_factor: self.cross_check_factor,
            polish: self.polish,
            root_side,
        })
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Scenario, CliError> {
        toml::from_str(text).map_err(|e| CliError::config(format!("{e}")))
    }

    pub fn grid(&self, override_n: Option<usize>) -> Result<Grid, CliError> {
        let n = override_n.unwrap_or(self.grid.n);
        if !n.is_power_of_two() || !(32..=65536).contains(&n) {
            return Err(CliError::config(format!(
                "grid n must be a power of two between 2^5 and 2^16, got {n}"
            )));
        }
        Grid::new(self.grid.length, n).map_err(CliError::config_from)
    }

    pub fn phi(&self) -> Result<Nonlinearity, CliError> {
        self.phi
            .as_ref()
            .ok_or_else(|| CliError::config("scenario needs a [phi] table"))?
            .build()
    }

    pub fn coefficient(&self, grid: &Grid) -> Result<CellFn, CliError> {
        match &self.data.a {
            Some(f) => f.cells(grid),
            None => Ok(CellFn::constant(*grid, 1.0)),
        }
    }

    pub fn datum(&self, grid: &Grid) -> Result<CellFn, CliError> {
        self.data
            .g
            .as_ref()
            .ok_or_else(|| CliError::config("scenario needs [data] g"))?
            .cells(grid)
    }

    pub fn seam(&self) -> Result<SeamSpec, CliError> {
        Ok(self
            .seam
            .as_ref()
            .ok_or_else(|| CliError::config("scenario needs a [seam] table"))?
            .build())
    }
}
