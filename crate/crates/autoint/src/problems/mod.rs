//! The case studies, each packaged as a [`SurrogateProblem`] factory plus
//! readout functions on the trained surrogate.

pub mod basket;
pub mod european;
pub mod moi;
pub mod population;
pub mod potential;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Ornstein–Uhlenbeck process dX = ν(μ − X)dt + σ dW started from a Dirac
/// peak at (x0, t0), with the option strike K and terminal time T.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OuParams {
    pub sigma: f64,
    pub nu: f64,
    pub mu: f64,
    pub x0: f64,
    pub t0: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
    pub strike: f64,
    pub terminal_time: f64,
}

impl Default for OuParams {
    fn default() -> Self {
        OuParams {
            sigma: 1.0,
            nu: 5.0,
            mu: 0.0,
            x0: 2.0,
            t0: 0.0,
            x_min: -5.0,
            x_max: 5.0,
            t_min: 0.1,
            t_max: 0.5,
            strike: 0.06,
            terminal_time: 0.5,
        }
    }
}

impl OuParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.nu <= 0.0 {
            return Err(format!("reversion speed must be positive, got {}", self.nu));
        }
        if self.sigma <= 0.0 {
            return Err(format!("volatility must be positive, got {}", self.sigma));
        }
        Ok(())
    }
}

/// Spinning vessel of rotating fluid: density rho, width w, radius R, rest
/// height h0, gravity g, angular frequency omega.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VesselParams {
    pub rho: f64,
    pub width: f64,
    pub radius: f64,
    pub h0: f64,
    pub g: f64,
    pub omega: f64,
}

impl Default for VesselParams {
    fn default() -> Self {
        VesselParams {
            rho: 1.0,
            width: 0.1,
            radius: 1.0,
            h0: 1.0,
            g: 9.81,
            omega: 0.0,
        }
    }
}

/// Advection–diffusion of a charge density along a tube, observed from the
/// off-axis point obs = (x, y, z); the initial drop is a Gaussian of mass
/// `mass`, center `center`, width `width` released at t = 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AdvectionParams {
    pub velocity: f64,
    pub diffusion: f64,
    pub lambda: f64,
    pub obs: [f64; 3],
    pub mass: f64,
    pub center: f64,
    pub width: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub t_min: f64,
    pub t_max: f64,
}

impl Default for AdvectionParams {
    fn default() -> Self {
        AdvectionParams {
            velocity: 1.0,
            diffusion: 0.1,
            lambda: 1.0,
            obs: [0.0, 1.0, 0.0],
            mass: 1.0,
            center: -2.0,
            width: 0.2,
            x_min: -6.0,
            x_max: 6.0,
            t_min: 0.1,
            t_max: 1.0,
        }
    }
}

impl AdvectionParams {
    /// Distance from a tube point (x, 0, 0) to the observation point. Never
    /// zero when the observation point is off the axis.
    pub fn obs_distance(&self, x: f64) -> f64 {
        let dx = x - self.obs[0];
        (dx * dx + self.obs[1] * self.obs[1] + self.obs[2] * self.obs[2]).sqrt()
    }
}

/// Volterra–Fredholm population growth on [0, t_max], b(0) = 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PopulationParams {
    pub t_max: f64,
    pub n_points: usize,
}

impl Default for PopulationParams {
    fn default() -> Self {
        PopulationParams {
            t_max: 1.0,
            n_points: 25,
        }
    }
}

/// u(t) = (6(1 + t) − 7e^{t/2} − 4 sin t)/4; note u(0) = −1/4.
pub fn population_forcing(t: f64) -> f64 {
    (6.0 * (1.0 + t) - 7.0 * (0.5 * t).exp() - 4.0 * t.sin()) / 4.0
}

/// u′(t) = (6 − (7/2)e^{t/2} − 4 cos t)/4.
pub fn population_forcing_deriv(t: f64) -> f64 {
    (6.0 - 3.5 * (0.5 * t).exp() - 4.0 * t.cos()) / 4.0
}

/// Seeded standard-normal draws by Box–Muller.
pub fn gaussian_samples(mean: f64, std: f64, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen_range(0.0..1.0);
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        out.push(mean + std * r * theta.cos());
        if out.len() < n {
            out.push(mean + std * r * theta.sin());
        }
    }
    out
}

/// How sampled slices are turned into a density estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityEstimator {
    Kde,
    Histogram,
}

impl Default for DensityEstimator {
    fn default() -> Self {
        DensityEstimator::Kde
    }
}

/// Gaussian kernel density estimate with Silverman's bandwidth.
#[derive(Debug, Clone)]
pub struct Kde1d {
    samples: Vec<f64>,
    bandwidth: f64,
}

pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let quartile = |q: f64| {
        let pos = q * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let frac = pos - lo as f64;
        if lo + 1 < sorted.len() {
            sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac
        } else {
            sorted[lo]
        }
    };
    let iqr = quartile(0.75) - quartile(0.25);
    let spread = if iqr > 0.0 {
        std.min(iqr / 1.34)
    } else {
        std
    };
    0.9 * spread * n.powf(-0.2)
}

impl Kde1d {
    pub fn new(samples: Vec<f64>) -> Self {
        let bandwidth = silverman_bandwidth(&samples);
        Kde1d { samples, bandwidth }
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn density(&self, x: f64) -> f64 {
        let h = self.bandwidth;
        let norm = 1.0 / ((2.0 * std::f64::consts::PI).sqrt() * h * self.samples.len() as f64);
        self.samples
            .iter()
            .map(|s| (-0.5 * ((x - s) / h).powi(2)).exp())
            .sum::<f64>()
            * norm
    }
}

/// Histogram density estimate (alternative to KDE, constant within bins).
#[derive(Debug, Clone)]
pub struct Histogram1d {
    lo: f64,
    bin_width: f64,
    density: Vec<f64>,
}

impl Histogram1d {
    pub fn new(samples: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let bin_width = (hi - lo) / bins as f64;
        let mut counts = vec![0usize; bins];
        for &s in samples {
            if s >= lo && s < hi {
                counts[((s - lo) / bin_width) as usize] += 1;
            }
        }
        let norm = 1.0 / (samples.len() as f64 * bin_width);
        Histogram1d {
            lo,
            bin_width,
            density: counts.iter().map(|&c| c as f64 * norm).collect(),
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let idx = ((x - self.lo) / self.bin_width).floor();
        if idx < 0.0 || idx as usize >= self.density.len() {
            0.0
        } else {
            self.density[idx as usize]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_sampling_hits_the_mean() {
        let samples = gaussian_samples(1.2, 0.25, 50, 7);
        assert_eq!(samples.len(), 50);
        let mean = samples.iter().sum::<f64>() / 50.0;
        // within 3 sigma / sqrt(50)
        assert!((mean - 1.2).abs() < 3.0 * 0.25 / 50f64.sqrt(), "mean = {mean}");
    }

    #[test]
    fn kde_integrates_to_one() {
        let samples = gaussian_samples(0.0, 1.0, 200, 3);
        let kde = Kde1d::new(samples);
        let rule = crate::oracles::QuadratureRule::GaussLegendre { points: 256 };
        let mass = rule.integrate(-8.0, 8.0, |x| kde.density(x));
        assert!((mass - 1.0).abs() < 1e-8, "mass = {mass}");
    }

    #[test]
    fn histogram_integrates_to_one() {
        let samples = gaussian_samples(0.0, 1.0, 500, 11);
        let hist = Histogram1d::new(&samples, -5.0, 5.0, 40);
        let mass: f64 = hist.density.iter().sum::<f64>() * hist.bin_width;
        assert!((mass - 1.0).abs() < 1e-12);
    }

    #[test]
    fn population_forcing_at_zero() {
        assert!((population_forcing(0.0) + 0.25).abs() < 1e-15);
        let fd = (population_forcing(1e-6) - population_forcing(-1e-6)) / 2e-6;
        assert!((population_forcing_deriv(0.0) - fd).abs() < 1e-9);
    }
}
