//! Quadrature building blocks: fixed Gauss-Legendre panels and geometrically
//! graded meshes for integrands that blow up at interval endpoints.
//!
//! Nothing here ever evaluates an integrand at a panel endpoint, so endpoint
//! singularities are legal as long as they are integrable.

use crate::error::{Error, Result};

/// 8-point Gauss-Legendre nodes on (-1, 1).
const GL8_X: [f64; 8] = [
    -0.960_289_856_497_536_2,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329_0,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329_0,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_2,
];
const GL8_W: [f64; 8] = [
    0.101_228_536_290_376_26,
    0.222_381_034_453_374_47,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362_0,
    0.362_683_783_378_362_0,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_47,
    0.101_228_536_290_376_26,
];

/// Single 8-point Gauss-Legendre panel over [a, b].
pub fn gl8<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL8_X.iter().zip(GL8_W.iter()) {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Composite Gauss-Legendre rule with `panels` equal panels.
pub fn composite<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, panels: usize) -> f64 {
    let n = panels.max(1);
    let h = (b - a) / n as f64;
    let mut acc = 0.0;
    for k in 0..n {
        acc += gl8(f, a + k as f64 * h, a + (k + 1) as f64 * h);
    }
    acc
}

/// Which endpoints of an interval the graded mesh should refine toward.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Graded {
    Left,
    Right,
    Both,
}

/// Panel edges of a mesh that accumulates geometrically (ratio 1/2) toward the
/// flagged endpoints of [a, b], with `levels` dyadic levels per singular end.
pub fn graded_edges(a: f64, b: f64, toward: Graded, levels: usize) -> Vec<f64> {
    assert!(b > a, "graded_edges needs a nonempty interval");
    let mut edges = vec![a, b];
    let mid = 0.5 * (a + b);
    match toward {
        Graded::Left => {
            let w = b - a;
            for k in 1..=levels {
                edges.push(a + w * 0.5f64.powi(k as i32));
            }
        }
        Graded::Right => {
            let w = b - a;
            for k in 1..=levels {
                edges.push(b - w * 0.5f64.powi(k as i32));
            }
        }
        Graded::Both => {
            edges.push(mid);
            let w = mid - a;
            for k in 1..=levels {
                edges.push(a + w * 0.5f64.powi(k as i32));
                edges.push(b - w * 0.5f64.powi(k as i32));
            }
        }
    }
    edges.sort_by(|p, q| p.partial_cmp(q).unwrap());
    edges.dedup();
    edges
}

/// Integrate `f` over (a, b) on a graded mesh. Returns the value together with
/// the per-level partial sums accumulated from the singular end(s) outward,
/// which callers use for divergence detection.
pub fn graded_with_trace<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    toward: Graded,
    levels: usize,
) -> Result<(f64, Vec<f64>)> {
    let edges = graded_edges(a, b, toward, levels);
    let mut total = 0.0;
    let mut panel_values = Vec::with_capacity(edges.len() - 1);
    for pair in edges.windows(2) {
        let v = gl8(f, pair[0], pair[1]);
        if !v.is_finite() {
            return Err(Error::NonFinite {
                context: format!("graded quadrature panel [{:.3e}, {:.3e}]", pair[0], pair[1]),
            });
        }
        panel_values.push(v);
        total += v;
    }
    // Partial sums adding panels from the coarse interior toward the singular
    // ends, so successive entries are successive graded refinements.
    let mut partials = Vec::with_capacity(levels + 1);
    match toward {
        Graded::Left => {
            let mut acc = 0.0;
            for v in panel_values.iter().rev() {
                acc += v;
                partials.push(acc);
            }
        }
        Graded::Right => {
            let mut acc = 0.0;
            for v in panel_values.iter() {
                acc += v;
                partials.push(acc);
            }
        }
        Graded::Both => {
            // Pair panels symmetrically from the middle outward.
            let n = panel_values.len();
            let mut acc = 0.0;
            let mut lo = n / 2;
            let mut hi = n / 2;
            if n % 2 == 1 {
                acc += panel_values[lo];
                hi += 1;
            }
            partials.push(acc);
            while lo > 0 {
                lo -= 1;
                acc += panel_values[lo];
                if hi < n {
                    acc += panel_values[hi];
                    hi += 1;
                }
                partials.push(acc);
            }
        }
    }
    Ok((total, partials))
}

/// Plain graded integral (ratio 1/2, 40 levels) toward the flagged ends.
pub fn graded<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, toward: Graded) -> Result<f64> {
    graded_with_trace(f, a, b, toward, 40).map(|(v, _)| v)
}

/// Outcome of the divergence heuristic on nested graded refinements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RefinementTrend {
    Converged,
    Diverging,
    Mixed,
}

/// Classify the tail of a partial-sum trace: diverging when the last `window`
/// refinements each grow the running value by more than `rel` in relative
/// terms, converged when none of them does, mixed otherwise.
pub fn classify_partials(partials: &[f64], window: usize, rel: f64) -> RefinementTrend {
    if partials.len() < window + 1 {
        return RefinementTrend::Mixed;
    }
    let n = partials.len();
    let mut grew = 0usize;
    for k in (n - window)..n {
        let prev = partials[k - 1].abs().max(1e-300);
        let inc = (partials[k] - partials[k - 1]).abs();
        if inc > rel * prev {
            grew += 1;
        }
    }
    if grew == window {
        RefinementTrend::Diverging
    } else if grew == 0 {
        RefinementTrend::Converged
    } else {
        RefinementTrend::Mixed
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl8_is_exact_on_low_degree_polynomials() {
        let f = |x: f64| 3.0 * x * x - 2.0 * x + 1.0;
        let exact = 4.0; // int_{-1}^{1} = 2 + 0 + 2
        assert!((gl8(&f, -1.0, 1.0) - exact).abs() < 1e-14);
    }

    #[test]
    fn graded_handles_inverse_cube_root() {
        // int_0^1 x^(-1/3) dx = 3/2
        let v = graded(&|x: f64| x.powf(-1.0 / 3.0), 0.0, 1.0, Graded::Left).unwrap();
        assert!((v - 1.5).abs() < 1e-4, "got {v}");
    }

    #[test]
    fn graded_both_handles_two_singular_ends() {
        // int_0^1 (x(1-x))^(-1/3) dx = B(2/3, 2/3)
        let beta = 2.053_390_217_939_177; // Gamma(2/3)^2 / Gamma(4/3)
        let v = graded(
            &|x: f64| (x * (1.0 - x)).powf(-1.0 / 3.0),
            0.0,
            1.0,
            Graded::Both,
        )
        .unwrap();
        assert!((v - beta).abs() < 1e-4, "got {v}");
    }

    #[test]
    fn divergence_heuristic_flags_log_blowup() {
        let (_, partials) =
            graded_with_trace(&|x: f64| 1.0 / x, 0.0, 1.0, Graded::Left, 40).unwrap();
        assert_eq!(
            classify_partials(&partials, 4, 0.01),
            RefinementTrend::Diverging
        );
        let (_, partials) =
            graded_with_trace(&|x: f64| x.powf(-0.25), 0.0, 1.0, Graded::Left, 40).unwrap();
        assert_eq!(
            classify_partials(&partials, 4, 0.01),
            RefinementTrend::Converged
        );
    }
}
