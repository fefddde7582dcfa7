//! Quadrature for Gaussian-mixture differential entropies, the binary-mixture
//! entropy deficit used by the closed-form mutual-information expressions, and
//! the bracketing root finder shared by every solver in the crate.
//!
//! All entropies are in nats. Conversion to bits happens at reporting
//! boundaries only.

use crate::error::{Error, Result};

/// ln(2*pi*e)/2, the differential entropy of a unit-variance Gaussian.
pub const HALF_LN_2PIE: f64 = 1.418_938_533_204_672_7;

/// A Gaussian mixture with a common component variance.
///
/// This is the density family every eavesdropper-side entropy in the crate
/// reduces to: (1/sqrt(2*pi*s^2)) * sum_j p_j exp(-(y-mu_j)^2 / (2 s^2)).
#[derive(Debug, Clone)]
pub struct MixtureSpec {
    pub means: Vec<f64>,
    pub probs: Vec<f64>,
    pub sigma_sq: f64,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.means.len() != self.probs.len() {
            return Err(Error::domain("mixture means/probs length mismatch"));
        }
        if self.means.is_empty() {
            return Err(Error::domain("empty mixture"));
        }
        if !(self.sigma_sq > 0.0) {
            return Err(Error::domain("mixture variance must be positive"));
        }
        let total: f64 = self.probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::domain("mixture probabilities must sum to 1"));
        }
        if self.probs.iter().any(|&p| p < 0.0) {
            return Err(Error::domain("negative mixture probability"));
        }
        Ok(())
    }
}

/// One component of a general Gaussian mixture (per-component variance).
#[derive(Debug, Clone, Copy)]
pub struct GaussComponent {
    pub mean: f64,
    pub sigma: f64,
    pub weight: f64,
}

// Gauss-Kronrod 7-15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991455371120813,
    0.949107912342759,
    0.864864423359769,
    0.741531185599394,
    0.586087235467691,
    0.405845151377397,
    0.207784955007898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022935322010529,
    0.063092092629979,
    0.104790010322250,
    0.140653259715525,
    0.169004726639267,
    0.190350578064785,
    0.204432940075298,
    0.209482141084728,
];
const WG: [f64; 4] = [
    0.129484966168870,
    0.279705391489277,
    0.381830050505119,
    0.417959183673469,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut kronrod = 0.0;
    let mut gauss = 0.0;
    for i in 0..8 {
        let dx = h * XGK[i];
        let (fl, fr) = (f(c - dx), f(c + dx));
        let s = if i == 7 { fl } else { fl + fr };
        kronrod += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    let i_k = kronrod * h;
    let i_g = gauss * h;
    (i_k, (i_k - i_g).abs())
}

/// Adaptive Gauss-Kronrod integration of `f` over [a, b] to absolute
/// tolerance `tol`. Returns the estimate or an error carrying the achieved
/// error estimate when the subdivision budget runs out.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    // interval worklist, largest error first
    let (v, e) = gk15(f, a, b);
    let mut segs = vec![(a, b, v, e)];
    let mut total_err: f64 = e;
    for _ in 0..2000 {
        if total_err <= tol {
            break;
        }
        // split the worst segment
        let (idx, _) = segs
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.partial_cmp(&y.1 .3).unwrap())
            .unwrap();
        let (sa, sb, _, se) = segs.swap_remove(idx);
        let m = 0.5 * (sa + sb);
        let (v1, e1) = gk15(f, sa, m);
        let (v2, e2) = gk15(f, m, sb);
        total_err += e1 + e2 - se;
        segs.push((sa, m, v1, e1));
        segs.push((m, sb, v2, e2));
    }
    let value = segs.iter().map(|s| s.2).sum();
    if total_err > tol.max(1e-14 * segs.iter().map(|s| s.2.abs()).sum::<f64>()) {
        return Err(Error::QuadratureNonConvergence {
            achieved: total_err,
            requested: tol,
        });
    }
    Ok(value)
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn mixture_density(comps: &[GaussComponent], y: f64) -> f64 {
    let mut p = 0.0;
    for c in comps {
        let z = (y - c.mean) / c.sigma;
        p += c.weight * INV_SQRT_2PI / c.sigma * (-0.5 * z * z).exp();
    }
    p
}

/// Differential entropy (nats) of a general Gaussian mixture.
///
/// Components closer than 10 sigma of each other are integrated together;
/// groups further apart than that contribute independently, which is the
/// truncation [min mu - 10 sigma, max mu + 10 sigma] of the defining
/// integral (the omitted cross terms are below 1e-20).
pub fn mixture_entropy_general(components: &[GaussComponent]) -> Result<f64> {
    mixture_entropy_general_tol(components, 1e-9)
}

/// [`mixture_entropy_general`] with an explicit absolute tolerance, for
/// callers that aggregate many states and can afford a looser per-state
/// budget.
pub fn mixture_entropy_general_tol(components: &[GaussComponent], tol: f64) -> Result<f64> {
    let mut comps: Vec<GaussComponent> = components
        .iter()
        .copied()
        .filter(|c| c.weight > 0.0)
        .collect();
    if comps.is_empty() {
        return Err(Error::domain("mixture has no positive-weight component"));
    }
    if comps.iter().any(|c| !(c.sigma > 0.0)) {
        return Err(Error::domain("mixture component sigma must be positive"));
    }
    comps.sort_by(|a, b| a.mean.partial_cmp(&b.mean).unwrap());
    // merge coincident components (same mean and sigma)
    let mut merged: Vec<GaussComponent> = Vec::with_capacity(comps.len());
    for c in comps {
        match merged.last_mut() {
            Some(m) if m.mean == c.mean && m.sigma == c.sigma => m.weight += c.weight,
            _ => merged.push(c),
        }
    }

    // cluster split where the +-10 sigma intervals do not overlap
    let mut clusters: Vec<Vec<GaussComponent>> = vec![vec![merged[0]]];
    for c in merged.into_iter().skip(1) {
        let last = clusters.last().unwrap();
        let reach = last
            .iter()
            .map(|k| k.mean + 10.0 * k.sigma)
            .fold(f64::NEG_INFINITY, f64::max);
        if c.mean - 10.0 * c.sigma > reach {
            clusters.push(vec![c]);
        } else {
            clusters.last_mut().unwrap().push(c);
        }
    }

    let n_quad = clusters.iter().filter(|cl| cl.len() > 1).count();
    let tol_each = if n_quad > 0 { tol / n_quad as f64 } else { tol };

    let mut h = 0.0;
    for cl in &clusters {
        if cl.len() == 1 {
            let c = cl[0];
            // isolated Gaussian: w * (h(N(0,s^2)) - ln w)
            h += c.weight * (HALF_LN_2PIE + c.sigma.ln() - c.weight.ln());
        } else {
            let lo = cl
                .iter()
                .map(|c| c.mean - 10.0 * c.sigma)
                .fold(f64::INFINITY, f64::min);
            let hi = cl
                .iter()
                .map(|c| c.mean + 10.0 * c.sigma)
                .fold(f64::NEG_INFINITY, f64::max);
            let cluster = cl.as_slice();
            let integrand = move |y: f64| {
                let p = mixture_density(cluster, y);
                if p > 0.0 {
                    -p * p.ln()
                } else {
                    0.0
                }
            };
            h += integrate(&integrand, lo, hi, tol_each)?;
        }
    }
    Ok(h)
}

/// Differential entropy (nats) of a common-variance Gaussian mixture,
/// evaluated to an absolute accuracy of 1e-9 nats.
pub fn mixture_entropy(spec: &MixtureSpec) -> Result<f64> {
    spec.validate()?;
    let sigma = spec.sigma_sq.sqrt();
    let comps: Vec<GaussComponent> = spec
        .means
        .iter()
        .zip(&spec.probs)
        .map(|(&m, &p)| GaussComponent {
            mean: m,
            sigma,
            weight: p,
        })
        .collect();
    mixture_entropy_general(&comps)
}

/// Entropy excess of the symmetric binary mixture 0.5 N(-a,1) + 0.5 N(a,1)
/// over a single unit-variance Gaussian. Lies in [0, ln 2], nondecreasing,
/// and saturates at ln 2 once the two components separate.
pub fn ent_excess(alpha: f64) -> Result<f64> {
    if alpha < 0.0 {
        return Err(Error::domain("ent_excess requires alpha >= 0"));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let h = mixture_entropy(&MixtureSpec {
        means: vec![-alpha, alpha],
        probs: vec![0.5, 0.5],
        sigma_sq: 1.0,
    })?;
    Ok((h - HALF_LN_2PIE).clamp(0.0, std::f64::consts::LN_2))
}

/// The entropy-deficit function of the symmetric binary Gaussian mixture:
/// cal_i(a) = a^2 + h(N(0,1)) - h(0.5 N(-a,1) + 0.5 N(a,1)).
///
/// cal_i(0) = 0, cal_i is nondecreasing, and cal_i(a) -> a^2 - ln 2 for
/// large a. The quantity a^2 - cal_i(a) (available directly and without
/// cancellation as [`ent_excess`]) is the per-state mutual information of a
/// binary antipodal input over an AWGN channel, capped at ln 2 nats.
pub fn cal_i(alpha: f64) -> Result<f64> {
    Ok(alpha * alpha - ent_excess(alpha)?)
}

/// Options for [`bisect_root`].
#[derive(Debug, Clone, Copy)]
pub struct BisectOpts {
    /// Absolute tolerance on the bracket width.
    pub x_tol_abs: f64,
    /// Relative tolerance on the bracket width.
    pub x_tol_rel: f64,
    /// Allow doubling `hi` upward until the sign changes.
    pub expand_up: bool,
    /// Cap on the number of doublings during expansion.
    pub max_expand: u32,
}

impl Default for BisectOpts {
    fn default() -> Self {
        BisectOpts {
            x_tol_abs: 0.0,
            x_tol_rel: 4.0 * f64::EPSILON,
            expand_up: false,
            max_expand: 60,
        }
    }
}

/// Bracketing bisection for a root of `f` on [lo, hi].
///
/// Requires a sign change on the bracket; with `expand_up` the upper end is
/// doubled (up to `max_expand` times) until one appears. Converges to the
/// requested width or to adjacent floats, whichever comes first.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, opts: BisectOpts) -> Result<f64> {
    let mut lo = lo;
    let mut hi = hi;
    let mut flo = f(lo);
    if flo == 0.0 {
        return Ok(lo);
    }
    let mut fhi = f(hi);
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo * fhi > 0.0 {
        if !opts.expand_up {
            return Err(Error::NoSignChange { lo, hi });
        }
        let mut expanded = false;
        for _ in 0..opts.max_expand {
            lo = hi;
            flo = fhi;
            hi *= 2.0;
            fhi = f(hi);
            if fhi == 0.0 {
                return Ok(hi);
            }
            if flo * fhi < 0.0 {
                expanded = true;
                break;
            }
        }
        if !expanded {
            return Err(Error::NoSignChange { lo, hi });
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Ok(mid);
        }
        if fm * flo < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fm;
        }
        if hi - lo <= opts.x_tol_abs + opts.x_tol_rel * mid.abs() {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
