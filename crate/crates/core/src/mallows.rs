//! The Mallows distribution over rankings,
//! `P(pi) = exp(-theta * d_tau(pi, center)) / Z(theta)`.
//!
//! Closed forms use `k = rho` items:
//!
//! ```text
//! Z(theta)     = prod_{j=1..k} (1 - e^{-theta j}) / (1 - e^{-theta})
//! E_theta[D]   = k e^{-theta} / (1 - e^{-theta}) - sum_{j=1..k} j e^{-theta j} / (1 - e^{-theta j})
//! dE/dtheta    = -k e^{-theta} / (1 - e^{-theta})^2 + sum_{j=1..k} j^2 e^{-theta j} / (1 - e^{-theta j})^2
//! ```
//!
//! The backward map inverts `E_theta[D]` by bisection; it is strictly
//! decreasing in `theta`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::perm::Permutation;

/// Lower end of the backward-map bracket.
pub const THETA_MIN: f64 = 1e-8;
/// Upper end of the backward-map bracket.
pub const THETA_MAX: f64 = 50.0;
const BISECTION_TOL: f64 = 1e-12;
const BISECTION_MAX_ITER: usize = 200;

// Below this theta the closed forms cancel catastrophically; a two-term
// expansion around the uniform distribution is used instead.
const SMALL_THETA: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MallowsModel {
    pub center: Permutation,
    pub theta: f64,
}

impl MallowsModel {
    pub fn new(center: Permutation, theta: f64) -> Result<Self> {
        if !(theta >= 0.0) || !theta.is_finite() {
            return Err(Error::Domain(format!("theta must be finite and >= 0, got {theta}")));
        }
        Ok(MallowsModel { center, theta })
    }

    pub fn rho(&self) -> usize {
        self.center.len()
    }

    /// Draws one ranking with the repeated-insertion construction.
    ///
    /// Items are inserted in center order; item `j` lands with `r` of the
    /// `j` already-placed items after it (creating `r` discordant pairs) with
    /// probability proportional to `e^{-theta r}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Permutation {
        let rho = self.rho();
        let q = (-self.theta).exp();
        let mut out: Vec<usize> = Vec::with_capacity(rho);
        let mut weights = Vec::with_capacity(rho);
        for (j, &item) in self.center.as_slice().iter().enumerate() {
            weights.clear();
            let mut w = 1.0;
            let mut total = 0.0;
            for _ in 0..=j {
                weights.push(w);
                total += w;
                w *= q;
            }
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut r = j;
            for (k, &wk) in weights.iter().enumerate() {
                acc += wk;
                if u < acc {
                    r = k;
                    break;
                }
            }
            out.insert(j - r, item);
        }
        Permutation::from_vec_unchecked(out)
    }
}

fn check_theta(theta: f64) -> Result<()> {
    if !(theta > 0.0) || theta.is_nan() {
        return Err(Error::Domain(format!("theta must be > 0, got {theta}")));
    }
    Ok(())
}

/// Mean inversion count of a uniformly random ranking, `rho (rho - 1) / 4`.
pub fn uniform_mean_distance(rho: usize) -> f64 {
    (rho * rho.saturating_sub(1)) as f64 / 4.0
}

/// Variance of the inversion count under the uniform distribution.
fn uniform_distance_variance(rho: usize) -> f64 {
    let k = rho as f64;
    k * (k - 1.0) * (2.0 * k + 5.0) / 72.0
}

/// `log Z(theta)` for `rho` items, with `Z = sum_pi exp(-theta d_tau(pi, center))`.
pub fn log_partition(theta: f64, rho: usize) -> Result<f64> {
    check_theta(theta)?;
    if rho == 0 {
        return invalid("rho must be >= 1");
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    let denom = (-(-theta).exp_m1()).ln();
    Ok((1..=rho)
        .map(|j| (-(-theta * j as f64).exp_m1()).ln() - denom)
        .sum())
}

/// `E_theta[d_tau(pi, center)]` under the Mallows law.
pub fn expected_distance(theta: f64, rho: usize) -> Result<f64> {
    check_theta(theta)?;
    if rho < 2 {
        return invalid("expected distance needs rho >= 2");
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    if theta < SMALL_THETA {
        return Ok(uniform_mean_distance(rho) - theta * uniform_distance_variance(rho));
    }
    let k = rho as f64;
    // e^{-x} / (1 - e^{-x}) = 1 / expm1(x)
    let head = k / theta.exp_m1();
    let tail: f64 = (1..=rho).map(|j| j as f64 / (theta * j as f64).exp_m1()).sum();
    Ok(head - tail)
}

/// Derivative of [`expected_distance`] with respect to `theta`.
pub fn d_expected_distance(theta: f64, rho: usize) -> Result<f64> {
    check_theta(theta)?;
    if rho < 2 {
        return invalid("expected distance needs rho >= 2");
    }
    if theta.is_infinite() {
        return Ok(0.0);
    }
    if theta < SMALL_THETA {
        return Ok(-uniform_distance_variance(rho));
    }
    // e^{-x} / (1 - e^{-x})^2 = e^{-x} / expm1(-x)^2
    let term = |x: f64| {
        let em = (-x).exp_m1();
        (-x).exp() / (em * em)
    };
    let k = rho as f64;
    let tail: f64 = (1..=rho).map(|j| (j * j) as f64 * term(theta * j as f64)).sum();
    Ok(-k * term(theta) + tail)
}

/// Solves `expected_distance(theta, rho) = mean_distance` for `theta`.
///
/// Returns [`Error::InfeasibleMean`] unless `0 < mean_distance < rho(rho-1)/4`.
/// Means too small to be reached inside the bracket return [`THETA_MAX`].
pub fn backward_map(mean_distance: f64, rho: usize) -> Result<f64> {
    if rho < 2 {
        return invalid("backward map needs rho >= 2");
    }
    let upper = uniform_mean_distance(rho);
    if !(mean_distance > 0.0 && mean_distance < upper) {
        return Err(Error::InfeasibleMean { mean: mean_distance, upper });
    }
    bisect_decreasing(mean_distance, |t| expected_distance(t, rho))
}

/// Bisection for `f(theta) = target` on a strictly decreasing `f` over the
/// bracket `[THETA_MIN, THETA_MAX]`.
pub(crate) fn bisect_decreasing(target: f64, f: impl Fn(f64) -> Result<f64>) -> Result<f64> {
    let (mut lo, mut hi) = (THETA_MIN, THETA_MAX);
    if f(lo)? <= target {
        return Ok(lo);
    }
    if f(hi)? >= target {
        return Ok(hi);
    }
    for _ in 0..BISECTION_MAX_ITER {
        let mid = 0.5 * (lo + hi);
        if f(mid)? > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= BISECTION_TOL {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
