//! Numerical laboratory for the one-dimensional singular problem
//!
//! ```text
//! -(a(x) u')' = -(phi(u))' - g'   on (0, L),    u(0) = u(L) = 0,
//! ```
//!
//! where `a` is bounded between positive constants, `g` is square-integrable
//! data, and the nonlinearity `phi` may blow up at the origin (model:
//! `phi(s) = c / |s|^gamma`). A weak solution is a zero-boundary function `u`
//! with `phi(u)` square-integrable satisfying `a u' = phi(u) + g + c` for the
//! constant `c` determined by the data.
//!
//! The crate provides:
//!
//! - [`nonlinearity`]: singular nonlinearities, their antiderivatives, the
//!   approximation families (truncation, homographic, drift, smoothing), and
//!   the shifted-reciprocal transform that linearizes the pure singular flow;
//! - [`grid`]: uniform grids, nodal/cell samplings, discrete norms, and
//!   endpoint-graded quadrature;
//! - [`ode`]: the singular initial-value solver with its regularization
//!   ladder and a priori constant;
//! - [`bvp`]: shooting and damped-Newton solvers for the two-point problem,
//!   the critical-constant search, parameter sweeps of the ordered solution
//!   family, and limit classification;
//! - [`construct`]: explicit solution/datum constructions (power seams, tail
//!   fixes, stability and instability schedules);
//! - [`verify`]: the report machinery that turns the theory's identities and
//!   obstructions into checkable numbers.

pub mod bvp;
pub mod construct;
pub mod error;
pub mod grid;
pub mod nonlinearity;
pub mod ode;
pub mod quad;
pub mod verify;

pub use bvp::{
    classify_limit, cstar_upper_bound, find_c_star, solve_bvp_newton, solve_regularized_bvp,
    sweep_family, tau_threshold, v_of_c, BvpSettings, BvpSolution, CStarOutcome, FamilyRecord,
    FamilySample, LimitClass, LimitEvidence, LimitRunEntry, RootSide, ScanOutcome,
    SolveMethod,
};
pub use construct::{
    clamp_datum, derive_datum, instability_schedule, power_seam_solution, stability_datum,
    tail_fix, InstabilityEntry, InstabilityOutcome, SeamEnd, SeamPoint, SeamSpec, TailFix,
};
pub use error::{Error, Result, Side};
pub use grid::{integrate, integrate_graded, CellFn, Grid, GridFn, Norms};
pub use nonlinearity::{
    check_reasonable_family, plus_shift_and_zeta, ApproxFamily, DriftSchedule, FamilyKind,
    IntegrabilityClass, Nonlinearity, PlusShift, Polynomial, ReasonableReport, Singularity,
    Tabulated, ZetaTransform,
};
pub use ode::{apriori_bound_c_r, pure_zeta_solve, solve_ivp, IvpSolution, LadderSettings};
pub use verify::{
    forbidden_cone_check, membership_u, nonexistence_flags, recover_constant_c,
    weak_solution_report, weak_solution_report_with, ConeCheck, Membership, MembershipVerdict,
    NonexistenceFlags, SignClass, Tolerances, WeakSolutionReport,
};
