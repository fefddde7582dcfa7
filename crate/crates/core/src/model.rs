//! Physical parameters, unit conversions, the path-loss model, and the
//! discretized fading distributions shared by every solver.
//!
//! Channel gains are handled throughout as squared magnitudes (v^2, f^2,
//! g^2); amplitudes enter only where a formula genuinely needs them.

use crate::error::{Error, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// All physical constants of the link.
///
/// Units: powers and noise variances in watts, distances in meters, carrier
/// frequency in hertz; gains are linear (not dB).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemParams {
    /// Energy-harvesting efficiency, in (0,1).
    pub eta: f64,
    /// AWGN variance at the harvesting user (its own receiver).
    pub sigma1_sq: f64,
    /// AWGN variance at the energy transmitter's receiver.
    pub sigma2_sq: f64,
    /// AWGN variance at the eavesdropper.
    pub sigma3_sq: f64,
    /// Variance of the zero-mean part of the user's self-interference channel.
    pub alpha1: f64,
    /// Mean (amplitude gain) of the user's self-interference channel.
    pub qbar1: f64,
    /// Variance of the residual self-interference channel at the transmitter.
    pub alpha2: f64,
    /// Energy transmitter average power budget.
    pub p_et: f64,
    /// Processing cost the user pays per channel use while transmitting.
    pub p_p: f64,
    /// Carrier frequency.
    pub fc: f64,
    /// Path-loss exponent.
    pub gamma: f64,
    /// User <-> transmitter distance.
    pub d_ehu_et: f64,
    /// User -> eavesdropper distance.
    pub d_ehu_eve: f64,
    /// Transmitter -> eavesdropper distance.
    pub d_et_eve: f64,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            eta: 0.8,
            sigma1_sq: 1e-12,
            sigma2_sq: 1e-12,
            sigma3_sq: 1e-12,
            alpha1: 1e-4,
            qbar1: 1.0,
            alpha2: 1e-10,
            p_et: 1e-3,
            p_p: 1e-12,
            fc: 2.4e9,
            gamma: 3.0,
            d_ehu_et: 10.0,
            d_ehu_eve: 12.0,
            d_et_eve: 12.0,
        }
    }
}

impl SystemParams {
    /// eta * (qbar1^2 + alpha1): the fraction of the user's own transmit
    /// energy it recycles per channel use. Must be < 1.
    pub fn recycle_fraction(&self) -> f64 {
        self.eta * (self.qbar1 * self.qbar1 + self.alpha1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::domain("eta must lie in (0,1)"));
        }
        for (name, v) in [
            ("sigma1_sq", self.sigma1_sq),
            ("sigma2_sq", self.sigma2_sq),
            ("sigma3_sq", self.sigma3_sq),
            ("p_et", self.p_et),
            ("p_p", self.p_p),
            ("fc", self.fc),
            ("gamma", self.gamma),
            ("d_ehu_et", self.d_ehu_et),
            ("d_ehu_eve", self.d_ehu_eve),
            ("d_et_eve", self.d_et_eve),
        ] {
            if !(v > 0.0) && name != "p_et" {
                return Err(Error::domain(format!("{name} must be positive")));
            }
            if name == "p_et" && v < 0.0 {
                return Err(Error::domain("p_et must be nonnegative"));
            }
        }
        if self.alpha1 < 0.0 || self.alpha2 < 0.0 || self.qbar1 < 0.0 {
            return Err(Error::domain("gains must be nonnegative"));
        }
        if self.recycle_fraction() >= 1.0 {
            return Err(Error::domain(
                "eta*(qbar1^2+alpha1) must be < 1: the user cannot recycle more than it spends",
            ));
        }
        Ok(())
    }
}

/// Average channel power gain of a link at distance `d`:
/// (c / (4 pi fc))^2 * d^(-gamma).
pub fn path_loss(fc: f64, d: f64, gamma: f64) -> Result<f64> {
    if !(fc > 0.0) || !(d > 0.0) || !(gamma > 0.0) {
        return Err(Error::domain("path_loss requires positive fc, d, gamma"));
    }
    let a = SPEED_OF_LIGHT / (4.0 * std::f64::consts::PI * fc);
    Ok(a * a * d.powf(-gamma))
}

pub fn db_to_linear(x_db: f64) -> f64 {
    10f64.powf(x_db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

pub fn dbm_to_watts(x_dbm: f64) -> f64 {
    10f64.powf((x_dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// A discretized nonnegative fading-gain distribution: mass points over the
/// squared channel gain with their probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingDist {
    pub gains: Vec<f64>,
    pub probs: Vec<f64>,
}

impl FadingDist {
    pub fn singleton(gain: f64) -> Self {
        FadingDist {
            gains: vec![gain],
            probs: vec![1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.gains.iter().zip(&self.probs).map(|(g, p)| g * p).sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gains.len() != self.probs.len() || self.gains.is_empty() {
            return Err(Error::domain("fading grid shape mismatch"));
        }
        if self.gains.iter().any(|&g| g < 0.0) {
            return Err(Error::domain("fading gains must be nonnegative"));
        }
        let s: f64 = self.probs.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!(
                "fading probabilities sum to {s}, expected 1"
            )));
        }
        Ok(())
    }
}

/// Quantile discretization of an exponential distribution with mean `omega`
/// into `n_points` equal-probability bins, each represented by its
/// conditional mean. The grid mean equals `omega` by the law of total
/// expectation.
pub fn discretize_exponential(omega: f64, n_points: usize) -> Result<FadingDist> {
    if !(omega > 0.0) {
        return Err(Error::domain("omega must be positive"));
    }
    if n_points == 0 {
        return Err(Error::domain("need at least one grid point"));
    }
    let n = n_points as f64;
    let mut gains = Vec::with_capacity(n_points);
    for i in 0..n_points {
        // bin edges in units of omega: [-ln(1-i/n), -ln(1-(i+1)/n))
        let lo = -(1.0 - i as f64 / n).ln();
        let m = if i + 1 == n_points {
            // top bin extends to infinity: conditional mean is lo + 1
            lo + 1.0
        } else {
            let hi = -(1.0 - (i as f64 + 1.0) / n).ln();
            let (elo, ehi) = ((-lo).exp(), (-hi).exp());
            1.0 + (lo * elo - hi * ehi) / (elo - ehi)
        };
        gains.push(omega * m);
    }
    Ok(FadingDist {
        gains,
        probs: vec![1.0 / n; n_points],
    })
}

/// The three discretized squared-gain distributions of the link plus their
/// average powers.
#[derive(Debug, Clone)]
pub struct FadingGrid {
    /// User <-> transmitter squared gain V^2.
    pub v_sq: FadingDist,
    /// User -> eavesdropper squared gain F^2.
    pub f_sq: FadingDist,
    /// Transmitter -> eavesdropper squared gain G^2.
    pub g_sq: FadingDist,
    pub omega_v: f64,
    pub omega_f: f64,
    pub omega_g: f64,
}

impl FadingGrid {
    /// Rayleigh-fading grid for the geometry in `params`: each squared gain
    /// is exponential with mean given by the path-loss model.
    pub fn rayleigh(params: &SystemParams, n_points: usize) -> Result<Self> {
        let omega_v = path_loss(params.fc, params.d_ehu_et, params.gamma)?;
        let omega_f = path_loss(params.fc, params.d_ehu_eve, params.gamma)?;
        let omega_g = path_loss(params.fc, params.d_et_eve, params.gamma)?;
        Ok(FadingGrid {
            v_sq: discretize_exponential(omega_v, n_points)?,
            f_sq: discretize_exponential(omega_f, n_points)?,
            g_sq: discretize_exponential(omega_g, n_points)?,
            omega_v,
            omega_f,
            omega_g,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.v_sq.validate()?;
        self.f_sq.validate()?;
        self.g_sq.validate()
    }
}

/// Per-slot fading sampler. One instance per thread of execution; draws are
/// deterministic for a fixed seed.
#[derive(Debug, Clone)]
pub struct FadingSampler {
    rng: ChaCha8Rng,
}

impl FadingSampler {
    pub fn new(seed: u64) -> Self {
        FadingSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    fn draw_index(&mut self, probs: &[f64]) -> usize {
        let u: f64 = self.rng.gen();
        let mut cum = 0.0;
        for (i, &p) in probs.iter().enumerate() {
            cum += p;
            if u <= cum {
                return i;
            }
        }
        probs.len() - 1
    }

    /// Independent draws of (v^2, f^2, g^2) for one block-fading slot.
    pub fn sample_slot(&mut self, grid: &FadingGrid) -> (f64, f64, f64) {
        let (iv, if_, ig) = self.sample_slot_indices(grid);
        (
            grid.v_sq.gains[iv],
            grid.f_sq.gains[if_],
            grid.g_sq.gains[ig],
        )
    }

    pub fn sample_slot_indices(&mut self, grid: &FadingGrid) -> (usize, usize, usize) {
        (
            self.draw_index(&grid.v_sq.probs),
            self.draw_index(&grid.f_sq.probs),
            self.draw_index(&grid.g_sq.probs),
        )
    }

    /// Access to the underlying RNG for in-slot noise draws.
    pub fn rng(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_loss_matches_direct_evaluation() {
        // (c / (4 pi 2.4e9))^2 at 1 m
        let pl1 = path_loss(2.4e9, 1.0, 3.0).unwrap();
        assert!((pl1 - 9.881e-5).abs() / 9.881e-5 < 1e-3, "pl1 = {pl1:e}");
        let pl10 = path_loss(2.4e9, 10.0, 3.0).unwrap();
        assert!((pl10 - 9.881e-8).abs() / 9.881e-8 < 1e-3, "pl10 = {pl10:e}");
    }

    #[test]
    fn path_loss_power_law() {
        let a = path_loss(2.4e9, 5.0, 3.0).unwrap();
        let b = path_loss(2.4e9, 10.0, 3.0).unwrap();
        assert!((a / b - 8.0).abs() < 1e-9);
    }

    #[test]
    fn path_loss_monotone() {
        let mut prev = f64::INFINITY;
        for d in [1.0, 2.0, 5.0, 20.0, 100.0] {
            let v = path_loss(2.4e9, d, 3.0).unwrap();
            assert!(v < prev);
            prev = v;
        }
        assert!(
            path_loss(2.4e9, 10.0, 3.5).unwrap() < path_loss(2.4e9, 10.0, 3.0).unwrap()
        );
        assert!(path_loss(2.4e9, -1.0, 3.0).is_err());
    }

    #[test]
    fn unit_conversions() {
        assert!((db_to_linear(-100.0) - 1e-10).abs() < 1e-22);
        assert!((dbm_to_watts(-90.0) - 1e-12).abs() < 1e-24);
        assert_eq!(db_to_linear(0.0), 1.0);
    }

    #[test]
    fn exponential_grid_mean_and_mass() {
        for n in [1usize, 4, 16, 64, 333] {
            let d = discretize_exponential(2.5, n).unwrap();
            d.validate().unwrap();
            let s: f64 = d.probs.iter().sum();
            assert!((s - 1.0).abs() < 1e-12);
            assert!(
                (d.mean() - 2.5).abs() / 2.5 < 1e-12,
                "n={n} mean={}",
                d.mean()
            );
        }
        let one = discretize_exponential(1.0, 1).unwrap();
        assert_eq!(one.gains, vec![1.0]);
        assert_eq!(one.probs, vec![1.0]);
    }

    #[test]
    fn exponential_grid_quartile_bins_match_monte_carlo() {
        // closed-form conditional means for n = 4 against a sampling oracle
        let d = discretize_exponential(1.0, 4).unwrap();
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let n_samp = 10_000_000usize;
        let mut sums = [0.0f64; 4];
        let mut counts = [0usize; 4];
        let edges = [
            -(1.0f64 - 0.25).ln(),
            -(1.0f64 - 0.5).ln(),
            -(1.0f64 - 0.75).ln(),
        ];
        for _ in 0..n_samp {
            let x = -rng.gen::<f64>().ln();
            let bin = edges.iter().filter(|&&e| x >= e).count();
            sums[bin] += x;
            counts[bin] += 1;
        }
        for i in 0..4 {
            let mc = sums[i] / counts[i] as f64;
            assert!(
                (d.gains[i] - mc).abs() < 3e-3,
                "bin {i}: closed form {} vs mc {mc}",
                d.gains[i]
            );
        }
    }

    #[test]
    fn sampler_is_deterministic_and_unbiased() {
        let params = SystemParams::default();
        let grid = FadingGrid::rayleigh(&params, 8).unwrap();
        let mut s1 = FadingSampler::new(99);
        let mut s2 = FadingSampler::new(99);
        for _ in 0..1000 {
            assert_eq!(s1.sample_slot(&grid), s2.sample_slot(&grid));
        }

        // empirical frequencies within 3 standard errors
        let mut s = FadingSampler::new(1234);
        let n = 1_000_000usize;
        let mut counts = vec![0usize; grid.v_sq.len()];
        for _ in 0..n {
            let (iv, _, _) = s.sample_slot_indices(&grid);
            counts[iv] += 1;
        }
        for (i, &c) in counts.iter().enumerate() {
            let p = grid.v_sq.probs[i];
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let diff = (c as f64 / n as f64 - p).abs();
            assert!(diff < 3.0 * se, "bin {i}: diff {diff} > 3 se {se}");
        }
    }

    #[test]
    fn degenerate_grid_always_same_point() {
        let grid = FadingGrid {
            v_sq: FadingDist::singleton(2.0),
            f_sq: FadingDist::singleton(3.0),
            g_sq: FadingDist::singleton(5.0),
            omega_v: 2.0,
            omega_f: 3.0,
            omega_g: 5.0,
        };
        let mut s = FadingSampler::new(1);
        for _ in 0..100 {
            assert_eq!(s.sample_slot(&grid), (2.0, 3.0, 5.0));
        }
    }

    #[test]
    fn recycle_fraction_gate() {
        let mut p = SystemParams::default();
        p.validate().unwrap();
        p.qbar1 = 1.2; // eta*(1.44+1e-4) > 1
        assert!(p.validate().is_err());
    }
}
