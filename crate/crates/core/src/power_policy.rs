//! The user-side power allocation: the per-state transmit-power fixed point
//! and the calibration of the energy-causality multiplier lambda2 so that
//! the long-run energy balance holds with equality.

use crate::bounds::EtInputDistribution;
use crate::error::{Error, Result};
use crate::model::{FadingDist, FadingGrid, SystemParams};

/// Calibrated transmit-power surface: `p_ehu[v_index][class_index]` pairs
/// with the amplitude classes of the [`EtInputDistribution`] it was built
/// for. Immutable once calibrated.
#[derive(Debug, Clone)]
pub struct PowerPolicy {
    pub p_ehu: Vec<Vec<f64>>,
    pub lambda1: Option<f64>,
    pub lambda2: f64,
}

impl PowerPolicy {
    /// Mean transmit power E[P_EHU] over the fading and input distributions.
    pub fn mean_power(&self, dist: &EtInputDistribution, v_dist: &FadingDist) -> f64 {
        let mut acc = 0.0;
        for (vi, &pv) in v_dist.probs.iter().enumerate() {
            for (ci, class) in dist.classes(vi).iter().enumerate() {
                acc += pv * class.prob * self.p_ehu[vi][ci];
            }
        }
        acc
    }
}

/// Sum over the eavesdropper-link grid of f^2 / (f^2 P + sigma3^2).
fn eve_marginal_sum(p: f64, sigma3_sq: f64, f_dist: &FadingDist) -> f64 {
    f_dist
        .gains
        .iter()
        .zip(&f_dist.probs)
        .map(|(&f2, &pf)| {
            if f2 == 0.0 {
                0.0
            } else {
                f2 / (f2 * p + sigma3_sq) * pf
            }
        })
        .sum()
}

/// Nonnegative root of the per-state stationarity condition of the user's
/// transmit power, for transmitter amplitude-squared `x2_sq` and channel
/// gain `v_sq`:
///
/// v^2/(s2^2 + x2^2 a2) + (1 + v^2 P / (s2^2 + x2^2 a2)) * sum_f f^2/(f^2 P + s3^2) p(f)
///   = (1 + v^2 P / (s2^2 + x2^2 a2)) * lambda2 * (1 - eta (qbar1^2 + a1)).
///
/// Returns 0 when no positive root exists. When the root lies beyond the
/// expansion cap (only reachable for vanishing lambda2 during bracket
/// hunting) the last expansion point is returned; it preserves the sign of
/// every energy-balance residual built on top of it.
pub fn solve_ehu_power(
    x2_sq: f64,
    v_sq: f64,
    lambda2: f64,
    params: &SystemParams,
    fading_f: &FadingDist,
) -> f64 {
    solve_ehu_power_tol(x2_sq, v_sq, lambda2, params, fading_f, 0.0)
}

/// Same root with a relative bracket tolerance; `rel_tol = 0` bisects to
/// adjacent floats. The looser setting is used inside calibration loops
/// where only the sign and magnitude of aggregate residuals matter.
pub(crate) fn solve_ehu_power_tol(
    x2_sq: f64,
    v_sq: f64,
    lambda2: f64,
    params: &SystemParams,
    fading_f: &FadingDist,
    rel_tol: f64,
) -> f64 {
    let noise = params.sigma2_sq + x2_sq * params.alpha2;
    let a = v_sq / noise;
    let l = lambda2 * (1.0 - params.recycle_fraction());
    let g = |p: f64| a + (1.0 + a * p) * (eve_marginal_sum(p, params.sigma3_sq, fading_f) - l);
    if g(0.0) <= 0.0 {
        return 0.0;
    }
    // physical powers cannot exceed a multiple of the harvest ceiling
    let omega_v_proxy = v_sq.max(1e-300);
    let p_hi0 = (10.0 * params.eta * params.p_et.max(x2_sq) * omega_v_proxy
        / (1.0 - params.recycle_fraction()))
    .max(params.sigma2_sq / omega_v_proxy)
    .max(1e-12);
    let mut lo = 0.0;
    let mut hi = p_hi0;
    let mut found = g(hi) < 0.0;
    if !found {
        for _ in 0..60 {
            lo = hi;
            hi *= 2.0;
            if g(hi) < 0.0 {
                found = true;
                break;
            }
        }
    }
    if !found {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= rel_tol * mid {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Residual of the transmit-power stationarity at a given power; zero at
/// the root [`solve_ehu_power`] finds.
pub fn ehu_power_residual(
    p: f64,
    x2_sq: f64,
    v_sq: f64,
    lambda2: f64,
    params: &SystemParams,
    fading_f: &FadingDist,
) -> f64 {
    let noise = params.sigma2_sq + x2_sq * params.alpha2;
    let a = v_sq / noise;
    let l = lambda2 * (1.0 - params.recycle_fraction());
    a + (1.0 + a * p) * (eve_marginal_sum(p, params.sigma3_sq, fading_f) - l)
}

/// Average harvested power eta * E[v^2 x2^2] of a transmit distribution.
pub fn mean_harvest(dist: &EtInputDistribution, params: &SystemParams, v_dist: &FadingDist) -> f64 {
    let mut acc = 0.0;
    for (vi, (&v2, &pv)) in v_dist.gains.iter().zip(&v_dist.probs).enumerate() {
        let ex2: f64 = dist.classes(vi).iter().map(|c| c.x2_sq * c.prob).sum();
        acc += v2 * ex2 * pv;
    }
    params.eta * acc
}

fn solve_policy_surface(
    dist: &EtInputDistribution,
    lambda2: f64,
    params: &SystemParams,
    fading: &FadingGrid,
    rel_tol: f64,
) -> Vec<Vec<f64>> {
    // sequential on purpose: callers parallelize across candidates
    fading
        .v_sq
        .gains
        .iter()
        .enumerate()
        .map(|(vi, &v2)| {
            dist.classes(vi)
                .iter()
                .map(|c| solve_ehu_power_tol(c.x2_sq, v2, lambda2, params, &fading.f_sq, rel_tol))
                .collect()
        })
        .collect()
}

/// Left minus right side of the energy-causality constraint:
/// [E[P_EHU] + P_p] - [eta E[v^2 x2^2] + eta (qbar1^2 + alpha1) E[P_EHU]].
/// Zero means the battery neither drains nor accumulates on average.
pub fn energy_balance_residual(
    policy: &PowerPolicy,
    dist: &EtInputDistribution,
    params: &SystemParams,
    fading: &FadingGrid,
) -> f64 {
    let spend = policy.mean_power(dist, &fading.v_sq);
    let harvest = mean_harvest(dist, params, &fading.v_sq);
    (1.0 - params.recycle_fraction()) * spend + params.p_p - harvest
}

/// Calibrates lambda2 so the energy balance holds with equality and returns
/// the full power surface. The residual is monotone nonincreasing in
/// lambda2 (powers shrink as the multiplier grows); this is verified at the
/// solution rather than assumed.
pub fn calibrate_lambda2(
    dist: &EtInputDistribution,
    params: &SystemParams,
    fading: &FadingGrid,
) -> Result<PowerPolicy> {
    calibrate_lambda2_with_hint(dist, params, fading, None)
}

/// [`calibrate_lambda2`] with an optional starting guess for the multiplier
/// (for example the calibrated value of a nearby distribution), which
/// shortens the bracket hunt considerably inside candidate searches.
pub fn calibrate_lambda2_with_hint(
    dist: &EtInputDistribution,
    params: &SystemParams,
    fading: &FadingGrid,
    hint: Option<f64>,
) -> Result<PowerPolicy> {
    let harvest = mean_harvest(dist, params, &fading.v_sq);
    if harvest <= params.p_p {
        return Err(Error::InfeasibleEnergy {
            harvest,
            p_p: params.p_p,
        });
    }
    let recycle = params.recycle_fraction();
    let residual_tol = |lambda2: f64, rel_tol: f64| -> (f64, Vec<Vec<f64>>) {
        let surface = solve_policy_surface(dist, lambda2, params, fading, rel_tol);
        let mut spend = 0.0;
        for (vi, &pv) in fading.v_sq.probs.iter().enumerate() {
            for (ci, class) in dist.classes(vi).iter().enumerate() {
                spend += pv * class.prob * surface[vi][ci];
            }
        }
        ((1.0 - recycle) * spend + params.p_p - harvest, surface)
    };
    let residual_at = |lambda2: f64| residual_tol(lambda2, 1e-13);

    // seed the bracket from the no-eavesdropper closed form at the mean state
    let p_avg = (harvest - params.p_p) / (1.0 - recycle);
    let ex2: f64 = {
        let mut acc = 0.0;
        for (vi, &pv) in fading.v_sq.probs.iter().enumerate() {
            acc += pv * dist.classes(vi).iter().map(|c| c.x2_sq * c.prob).sum::<f64>();
        }
        acc
    };
    let a_avg = fading.v_sq.mean() / (params.sigma2_sq + ex2 * params.alpha2);
    let seed = hint
        .unwrap_or(a_avg / ((1.0 + a_avg * p_avg) * (1.0 - recycle)))
        .max(f64::MIN_POSITIVE);

    let mut lo = seed;
    let mut hi = seed;
    let (mut r_hi, _) = residual_at(hi);
    let mut guard = 0;
    while r_hi > 0.0 {
        hi *= 4.0;
        r_hi = residual_at(hi).0;
        guard += 1;
        if guard > 400 {
            return Err(Error::JointSolverNonConvergence {
                context: "lambda2 bracket (upper) not found".into(),
                budget_residual: 0.0,
                energy_residual: r_hi,
            });
        }
    }
    let (mut r_lo, _) = residual_at(lo);
    guard = 0;
    while r_lo < 0.0 {
        lo /= 4.0;
        r_lo = residual_at(lo).0;
        guard += 1;
        if guard > 400 {
            return Err(Error::JointSolverNonConvergence {
                context: "lambda2 bracket (lower) not found".into(),
                budget_residual: 0.0,
                energy_residual: r_lo,
            });
        }
    }

    let mut best = (lo, r_lo);
    for _ in 0..200 {
        let mid = (lo * hi).sqrt();
        if mid == lo || mid == hi {
            break;
        }
        let (r, _) = residual_at(mid);
        if r.abs() < best.1.abs() {
            best = (mid, r);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi / lo - 1.0 < 1e-15 {
            break;
        }
    }
    let (lambda2, residual) = best;
    // final surface at full root precision
    let (r_final, surface) = residual_tol(lambda2, 0.0);

    if r_final.abs() > 1e-9 * harvest {
        return Err(Error::JointSolverNonConvergence {
            context: "lambda2 calibration residual above tolerance".into(),
            budget_residual: 0.0,
            energy_residual: r_final,
        });
    }
    let _ = residual;

    // monotonicity spot check around the solution
    let r_minus = residual_at(lambda2 * (1.0 - 1e-3)).0;
    let r_plus = residual_at(lambda2 * (1.0 + 1e-3)).0;
    if r_minus + 1e-12 * harvest.abs() < r_plus {
        return Err(Error::MonotonicityViolation { lambda2 });
    }

    Ok(PowerPolicy {
        p_ehu: surface,
        lambda1: None,
        lambda2,
    })
}
