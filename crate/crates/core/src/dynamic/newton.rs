//! Lagrange multiplier for the simplex constraint on a state update.
//!
//! The update `h_i = c_i / (β + 1/η_i)` must sum to one. With
//! `g(β) = Σ_i c_i / (β + 1/η_i)` strictly decreasing and convex on
//! `(-min_i 1/η_i, ∞)`, the root of `g(β) = 1` is unique and Newton's method
//! converges monotonically once inside a bracket.
//!
//! The solver works on the shift `δ = β + p`, where `p` is the smallest `1/η_i`
//! among components with positive counts. Every denominator becomes
//! `δ + (1/η_i - p)` with both terms nonnegative, which avoids cancellation
//! when the frame mass is much smaller than `1/η`.

use crate::error::{Error, Result};

/// Convergence threshold on `|g(β) - 1|`.
pub const BETA_TOL: f64 = 1e-10;

/// Iteration cap for the safeguarded Newton loop.
pub const BETA_MAX_ITERS: usize = 200;

/// Solution of the simplex constraint for one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiplierSolution {
    /// The Lagrange multiplier `β`.
    pub beta: f64,
    /// The updated probability vector `h`.
    pub h: Vec<f64>,
    pub iterations: usize,
}

/// Finds `β` such that `Σ_i c_i / (β + 1/η_i) = 1`.
pub fn solve_beta(c: &[f64], eta: &[f64]) -> Result<f64> {
    solve_multiplier(c, eta).map(|s| s.beta)
}

/// Solves for `β` and returns the constrained update `h_i = c_i / (β + 1/η_i)`.
///
/// Components with zero count get `h_i = 0`; only positive-count components
/// constrain the admissible range of `β`.
pub fn solve_multiplier(c: &[f64], eta: &[f64]) -> Result<MultiplierSolution> {
    if c.len() != eta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} counts for {} predictions",
            c.len(),
            eta.len()
        )));
    }
    if let Some(index) = eta.iter().position(|e| *e <= 0.0 || !e.is_finite()) {
        return Err(Error::NonPositive {
            index,
            value: eta[index],
        });
    }
    if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::InvalidArgument("counts must be finite and nonnegative".into()));
    }
    let gamma: f64 = c.iter().sum();
    if gamma <= 0.0 {
        return Err(Error::InvalidArgument("counts sum to zero".into()));
    }

    let pivot = c
        .iter()
        .zip(eta)
        .filter(|(cv, _)| **cv > 0.0)
        .map(|(_, e)| 1.0 / e)
        .fold(f64::INFINITY, f64::min);
    let offsets: Vec<f64> = eta.iter().map(|e| 1.0 / e - pivot).collect();

    let eval = |delta: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut dg = 0.0;
        for (cv, u) in c.iter().zip(&offsets) {
            if *cv > 0.0 {
                let d = delta + u;
                g += cv / d;
                dg -= cv / (d * d);
            }
        }
        (g, dg)
    };

    // Every active offset is >= 0, so g(δ) <= γ/δ and δ = γ brackets from above.
    // The pivot components alone give g(δ) >= c_p/δ, so δ = c_p brackets from below.
    let pivot_mass: f64 = c
        .iter()
        .zip(&offsets)
        .filter(|(cv, u)| **cv > 0.0 && **u <= 0.0)
        .map(|(cv, _)| cv)
        .sum();
    let mut lo = pivot_mass;
    let mut hi = gamma;
    let (g_lo, _) = eval(lo);
    if (g_lo - 1.0).abs() <= BETA_TOL || lo >= hi {
        return Ok(finish(c, &offsets, pivot, lo, 0));
    }
    let (g_hi, _) = eval(hi);
    if (g_hi - 1.0).abs() <= BETA_TOL {
        return Ok(finish(c, &offsets, pivot, hi, 0));
    }

    // Start from the closed form of the uniform-prior case, β0 = γ - 1.
    let mut delta = gamma - 1.0 + pivot;
    if !(delta > lo && delta < hi) {
        delta = if hi > 4.0 * lo { geometric_mid(lo, hi) } else { 0.5 * (lo + hi) };
    }
    let mut residual = f64::INFINITY;
    for iter in 1..=BETA_MAX_ITERS {
        let (g, dg) = eval(delta);
        residual = g - 1.0;
        if residual.abs() <= BETA_TOL {
            // The residual bounds g, not β; one more step costs nothing and
            // takes β to rounding level when γ is large.
            let polished = delta - residual / dg;
            let delta = if polished > lo && polished < hi { polished } else { delta };
            return Ok(finish(c, &offsets, pivot, delta, iter));
        }
        if residual > 0.0 {
            lo = delta;
        } else {
            hi = delta;
        }
        let step = delta - residual / dg;
        let next = if step > lo && step < hi {
            step
        } else if hi > 4.0 * lo {
            // The root can sit many decades below γ when a near-empty pivot dominates.
            geometric_mid(lo, hi)
        } else {
            0.5 * (lo + hi)
        };
        if next == delta || hi - lo <= f64::EPSILON * hi {
            // Bracket collapsed to adjacent floats; this is as close as f64 gets.
            return Ok(finish(c, &offsets, pivot, delta, iter));
        }
        delta = next;
    }
    Err(Error::NoConvergence {
        iters: BETA_MAX_ITERS,
        residual,
    })
}

/// `sqrt(lo * hi)` without underflow of the product.
fn geometric_mid(lo: f64, hi: f64) -> f64 {
    lo.sqrt() * hi.sqrt()
}

fn finish(c: &[f64], offsets: &[f64], pivot: f64, delta: f64, iterations: usize) -> MultiplierSolution {
    let h = c
        .iter()
        .zip(offsets)
        .map(|(cv, u)| if *cv > 0.0 { cv / (delta + u) } else { 0.0 })
        .collect();
    MultiplierSolution {
        beta: delta - pivot,
        h,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Plain bisection on β over (-min 1/η, hi], independent of the shifted solver.
    fn bisection_beta(c: &[f64], eta: &[f64]) -> f64 {
        let g = |beta: f64| -> f64 { c.iter().zip(eta).map(|(cv, e)| cv / (beta + 1.0 / e)).sum() };
        let beta_min = eta.iter().map(|e| -1.0 / e).fold(f64::NEG_INFINITY, f64::max);
        let mut lo = beta_min;
        let mut hi = beta_min.abs().max(1.0);
        while g(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..400 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn uniform_prediction_closed_form() {
        let c = [0.7, 2.1, 0.05, 1.3];
        let beta = solve_beta(&c, &[1.0; 4]).unwrap();
        let gamma: f64 = c.iter().sum();
        assert!((beta - (gamma - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn two_component_matches_bisection() {
        let c = [0.6, 0.4];
        let eta = [2.0, 0.5];
        let beta = solve_beta(&c, &eta).unwrap();
        let oracle = bisection_beta(&c, &eta);
        assert!((beta - oracle).abs() < 1e-8, "{beta} vs {oracle}");
    }

    #[test]
    fn all_mass_on_one_component() {
        let s = solve_multiplier(&[1.0, 0.0], &[1.0, 1.0]).unwrap();
        assert!(s.beta.abs() < 1e-12);
        assert_eq!(s.h, vec![1.0, 0.0]);
    }

    #[test]
    fn invalid_inputs() {
        assert!(solve_beta(&[0.0, 0.0], &[1.0, 1.0]).is_err());
        assert!(solve_beta(&[1.0], &[0.0]).is_err());
        assert!(solve_beta(&[1.0, 2.0], &[1.0]).is_err());
        assert!(solve_beta(&[-1.0, 2.0], &[1.0, 1.0]).is_err());
    }

    #[test]
    fn tiny_mass_against_strong_prior() {
        // γ far below 1/η: the unshifted formulation loses all precision here.
        let c = [1e-11, 3e-11, 2e-11];
        let eta = [0.9, 0.3, 1e-6];
        let s = solve_multiplier(&c, &eta).unwrap();
        let sum: f64 = s.h.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8, "{sum}");
        assert!(s.h.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn near_empty_pivot_absorbs_mass() {
        let c = [0.004693255670919403, 2.7114419114083426e-168, 10.329307663376674, 1.2870858231134962e-128];
        let eta = [1.532452362718016e-6, 1.0000000000000006e-12, 0.01921610970200317, 5.890252449702274];
        let s = solve_multiplier(&c, &eta).unwrap();
        let sum: f64 = s.h.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8, "{:?}", s.h);
        assert!(s.h[3] > 0.5);
        assert!(s.iterations < BETA_MAX_ITERS);
    }

    #[test]
    fn bracket_far_below_unity_does_not_underflow() {
        let c = [2.8886899372895213e-174, 0.050986722810692456, 0.0017164812805840592, 0.05967381778437639];
        let eta = [1.741374259481168, 0.5764010992211611, 0.8579484772442365, 0.8364911621293165];
        let s = solve_multiplier(&c, &eta).unwrap();
        assert!(s.h.iter().all(|v| v.is_finite()));
        let sum: f64 = s.h.iter().sum();
        assert!((sum - 1.0).abs() < 1e-8, "{:?}", s.h);
        assert!(s.h[0] > 0.8);
    }

    #[test]
    fn randomized_against_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(1..=16);
            let c: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..5.0)).collect();
            let eta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..5.0)).collect();
            let s = solve_multiplier(&c, &eta).unwrap();
            let oracle = bisection_beta(&c, &eta);
            assert!((s.beta - oracle).abs() < 1e-8);
            let sum: f64 = s.h.iter().sum();
            assert!((sum - 1.0).abs() < 1e-8);
            for (e, _) in eta.iter().zip(&s.h) {
                assert!(s.beta + 1.0 / e > 0.0);
            }
        }
    }
}
