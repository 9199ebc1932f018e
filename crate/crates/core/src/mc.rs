//! Monte Carlo oracle: log-Euler spot, full-truncation variance, compound
//! Poisson lognormal jumps, antithetic pairs.
//!
//! Paths are generated in fixed-size blocks, each with its own ChaCha stream,
//! and block sums are reduced in block order, so the estimate does not depend
//! on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{BatesParams, ContractSpec};

pub const MIN_PATHS: usize = 10_000;
const PAIRS_PER_BLOCK: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: usize,
    pub n_steps: usize,
    pub seed: u64,
    /// Extra log-drift per unit time. Zero in production; tests use it to
    /// corrupt the simulation on purpose.
    pub drift_bump: f64,
}

impl Default for McConfig {
    fn default() -> Self {
        Self { n_paths: 1_000_000, n_steps: 250, seed: 20_240_601, drift_bump: 0.0 }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_paths < MIN_PATHS {
            return Err(Error::Config(format!("n_paths = {} is below the minimum of {MIN_PATHS}", self.n_paths)));
        }
        if self.n_steps == 0 {
            return Err(Error::Config("n_steps must be positive".into()));
        }
        if !self.drift_bump.is_finite() {
            return Err(Error::Config("drift_bump must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct McResult {
    pub price: f64,
    pub stderr: f64,
    pub n_paths: usize,
}

impl McResult {
    /// |x − price| in standard errors.
    pub fn z_score(&self, x: f64) -> f64 {
        (x - self.price).abs() / self.stderr
    }
}

struct Sampler {
    p: BatesParams,
    dt: f64,
    sqdt: f64,
    rho_bar: f64,
    drift: f64,
    poisson: Option<Poisson<f64>>,
}

impl Sampler {
    fn new(p: &BatesParams, expiry: f64, cfg: &McConfig) -> Result<Self> {
        let dt = expiry / cfg.n_steps as f64;
        let poisson = if p.lambda > 0.0 {
            Some(Poisson::new(p.lambda * dt).map_err(|e| Error::Config(format!("jump intensity: {e}")))?)
        } else {
            None
        };
        Ok(Self {
            p: *p,
            dt,
            sqdt: dt.sqrt(),
            rho_bar: (1.0 - p.rho * p.rho).sqrt(),
            drift: p.r - p.lambda * p.xi_b() + cfg.drift_bump,
            poisson,
        })
    }

    /// Terminal log-returns of one antithetic pair.
    fn pair(&self, rng: &mut ChaCha8Rng, n_steps: usize, v0: f64) -> (f64, f64) {
        let p = &self.p;
        let (mut xa, mut xb, mut va, mut vb) = (0.0, 0.0, v0, v0);
        for _ in 0..n_steps {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let (nj, zj) = match &self.poisson {
                Some(pois) => {
                    let n = pois.sample(rng);
                    let z: f64 = if n > 0.0 { rng.sample(StandardNormal) } else { 0.0 };
                    (n, z)
                }
                None => (0.0, 0.0),
            };
            let w2 = p.rho * z1 + self.rho_bar * z2;
            let jump = nj * p.gamma_j;
            let jump_dev = nj.sqrt() * p.delta_j * zj;
            for (x, v, s) in [(&mut xa, &mut va, 1.0), (&mut xb, &mut vb, -1.0)] {
                let vp = v.max(0.0);
                let sv = vp.sqrt() * self.sqdt;
                *x += (self.drift - 0.5 * vp) * self.dt + sv * s * z1 + jump + s * jump_dev;
                *v += p.kappa * (p.theta - vp) * self.dt + p.sigma_v * sv * s * w2;
            }
        }
        (xa, xb)
    }
}

/// Discounted expectation of `payoff(S_T)` started from (spot, variance).
pub fn mc_expectation<F>(params: &BatesParams, expiry: f64, spot: f64, variance: f64, cfg: &McConfig, payoff: F) -> Result<McResult>
where
    F: Fn(f64) -> f64 + Sync,
{
    params.validate()?;
    cfg.validate()?;
    if !(spot > 0.0 && variance >= 0.0 && expiry > 0.0) {
        return Err(Error::Domain(format!("bad MC start: S = {spot}, v = {variance}, T = {expiry}")));
    }
    let sampler = Sampler::new(params, expiry, cfg)?;
    let pairs = cfg.n_paths / 2;
    let blocks = pairs.div_ceil(PAIRS_PER_BLOCK);
    let sums: Vec<(f64, f64)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let count = PAIRS_PER_BLOCK.min(pairs - b * PAIRS_PER_BLOCK);
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let (xa, xb) = sampler.pair(&mut rng, cfg.n_steps, variance);
                let y = 0.5 * (payoff(spot * xa.exp()) + payoff(spot * xb.exp()));
                s += y;
                s2 += y * y;
            }
            (s, s2)
        })
        .collect();
    let (s, s2) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = pairs as f64;
    let mean = s / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    let disc = (-params.r * expiry).exp();
    Ok(McResult { price: disc * mean, stderr: disc * (var / n).sqrt(), n_paths: 2 * pairs })
}

pub fn mc_price(params: &BatesParams, contract: &ContractSpec, spot: f64, variance: f64, cfg: &McConfig) -> Result<McResult> {
    contract.validate()?;
    let k = contract.strike;
    mc_expectation(params, contract.expiry, spot, variance, cfg, |s| (k - s).max(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::distribution::{ContinuousCDF, Normal};

    fn small(seed: u64) -> McConfig {
        McConfig { n_paths: 40_000, n_steps: 50, seed, drift_bump: 0.0 }
    }

    #[test]
    fn discounted_spot_is_a_martingale() {
        let p = BatesParams::default();
        let r = mc_expectation(&p, 0.5, 100.0, 0.04, &small(7), |s| s).unwrap();
        assert!(r.z_score(100.0) < 4.0, "{r:?}");
    }

    #[test]
    fn black_scholes_limit() {
        let p = BatesParams { lambda: 0.0, sigma_v: 1e-8, kappa: 1.0, theta: 0.04, ..BatesParams::default() };
        let (s, k, t, v) = (100.0f64, 100.0, 0.5, 0.04f64);
        let n = Normal::new(0.0, 1.0).unwrap();
        let sd = (v * t).sqrt();
        let d1 = ((s / k).ln() + (p.r + 0.5 * v) * t) / sd;
        let bs = k * (-p.r * t).exp() * n.cdf(-(d1 - sd)) - s * n.cdf(-d1);
        let r = mc_price(&p, &ContractSpec::put(k, t), s, v, &small(3)).unwrap();
        assert!(r.z_score(bs) < 4.0, "{r:?} vs {bs}");
    }

    #[test]
    fn stderr_scales_like_inverse_root_n() {
        let p = BatesParams::default();
        let c = ContractSpec::put(100.0, 0.5);
        let a = mc_price(&p, &c, 100.0, 0.01, &McConfig { n_paths: 20_000, ..small(1) }).unwrap();
        let b = mc_price(&p, &c, 100.0, 0.01, &McConfig { n_paths: 80_000, ..small(1) }).unwrap();
        let ratio = a.stderr / b.stderr;
        assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
    }

    #[test]
    fn reproducible_and_rejects_tiny_runs() {
        let p = BatesParams::default();
        let c = ContractSpec::put(100.0, 0.5);
        let a = mc_price(&p, &c, 100.0, 0.01, &small(11)).unwrap();
        let b = mc_price(&p, &c, 100.0, 0.01, &small(11)).unwrap();
        assert_eq!(a, b);
        assert!(matches!(mc_price(&p, &c, 100.0, 0.01, &McConfig { n_paths: 0, ..small(1) }), Err(Error::Config(_))));
    }
}
