//! Bates-model parameters, jump density, coordinate transform and payoff.
//!
//! Solver coordinates: x = log(S/K), y = σ/σ_v, τ = T − t, and the
//! growth-factored price per unit strike u = e^{(r+λ)τ}·V/K.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatesParams {
    pub kappa: f64,
    pub theta: f64,
    pub sigma_v: f64,
    pub rho: f64,
    pub r: f64,
    pub lambda: f64,
    pub gamma_j: f64,
    pub delta_j: f64,
}

impl Default for BatesParams {
    fn default() -> Self {
        Self {
            kappa: 2.0,
            theta: 0.01,
            sigma_v: 0.1,
            rho: -0.5,
            r: 0.05,
            lambda: 0.2,
            gamma_j: -0.5,
            delta_j: 0.1,
        }
    }
}

impl BatesParams {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.kappa, self.theta, self.sigma_v, self.rho, self.r, self.lambda, self.gamma_j,
            self.delta_j,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        let check = |ok: bool, msg: &str| if ok { Ok(()) } else { Err(Error::Config(msg.into())) };
        check(self.kappa >= 0.0, "kappa must be >= 0")?;
        check(self.theta >= 0.0, "theta must be >= 0")?;
        check(self.sigma_v > 0.0, "sigma_v must be > 0")?;
        check(self.delta_j > 0.0, "delta_j must be > 0")?;
        check(self.lambda >= 0.0, "lambda must be >= 0")?;
        check(self.rho.abs() <= 1.0, "|rho| must be <= 1")
    }

    pub fn xi_b(&self) -> f64 {
        xi_b(self)
    }

    /// Risk-neutral drift r − λξ_B.
    pub fn mu_b(&self) -> f64 {
        self.r - self.lambda * self.xi_b()
    }

    /// Rate in the growth factor e^{(r+λ)τ} relating u to V/K.
    pub fn growth_rate(&self) -> f64 {
        self.r + self.lambda
    }
}

pub fn xi_b(p: &BatesParams) -> f64 {
    (p.gamma_j + 0.5 * p.delta_j * p.delta_j).exp_m1()
}

/// Density of the log jump size z: normal with mean gamma_j, std delta_j.
pub fn jump_density_z(z: f64, p: &BatesParams) -> f64 {
    let s = (z - p.gamma_j) / p.delta_j;
    (-0.5 * s * s).exp() / ((2.0 * PI).sqrt() * p.delta_j)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    #[default]
    Put,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ContractSpec {
    pub strike: f64,
    pub expiry: f64,
    pub kind: OptionKind,
}

impl Default for ContractSpec {
    fn default() -> Self {
        Self { strike: 100.0, expiry: 0.5, kind: OptionKind::Put }
    }
}

impl ContractSpec {
    pub fn put(strike: f64, expiry: f64) -> Self {
        Self { strike, expiry, kind: OptionKind::Put }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.strike > 0.0 && self.strike.is_finite()) {
            return Err(Error::Config("strike must be > 0".into()));
        }
        if !(self.expiry > 0.0 && self.expiry.is_finite()) {
            return Err(Error::Config("expiry must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MarketPoint {
    pub spot: f64,
    /// Instantaneous variance σ.
    pub variance: f64,
    /// Time to expiry.
    pub tau: f64,
}

impl MarketPoint {
    pub fn validate(&self, c: &ContractSpec) -> Result<()> {
        if !(self.spot > 0.0) {
            return Err(Error::Domain(format!("spot {} must be > 0", self.spot)));
        }
        if !(self.variance > 0.0) {
            return Err(Error::Domain(format!("variance {} must be > 0", self.variance)));
        }
        if !(0.0..=c.expiry).contains(&self.tau) {
            return Err(Error::Domain(format!("tau {} outside [0, {}]", self.tau, c.expiry)));
        }
        Ok(())
    }
}

/// (x, y, τ) for a market point.
pub fn to_solver_coords(p: &MarketPoint, c: &ContractSpec, params: &BatesParams) -> (f64, f64, f64) {
    ((p.spot / c.strike).ln(), p.variance / params.sigma_v, p.tau)
}

pub fn from_solver_coords(x: f64, y: f64, tau: f64, c: &ContractSpec, params: &BatesParams) -> MarketPoint {
    MarketPoint { spot: c.strike * x.exp(), variance: y * params.sigma_v, tau }
}

pub fn put_payoff_transformed(x: f64) -> f64 {
    (-x.exp_m1()).max(0.0)
}

pub fn from_solver_value(u: f64, tau: f64, c: &ContractSpec, params: &BatesParams) -> f64 {
    c.strike * (-params.growth_rate() * tau).exp() * u
}

fn cubic_bspline(s: f64) -> f64 {
    let s = s.abs();
    if s < 1.0 {
        (4.0 - 6.0 * s * s + 3.0 * s * s * s) / 6.0
    } else if s < 2.0 {
        (2.0 - s).powi(3) / 6.0
    } else {
        0.0
    }
}

/// Kreiss–Thomée–Widlund Φ4 kernel: reproduces cubics, support [−3, 3].
fn phi4(s: f64) -> f64 {
    (4.0 / 3.0) * cubic_bspline(s) - (cubic_bspline(s - 1.0) + cubic_bspline(s + 1.0)) / 6.0
}

/// Put payoff averaged against Φ4 at scale h: ∫ Φ4(s)·payoff(x − h s) ds.
///
/// Removes the O(h²) error the strike kink otherwise injects into a
/// fourth-order scheme; smooth data is left unchanged to O(h⁴).
pub fn kreiss_payoff(x: f64, h: f64) -> f64 {
    let (nodes, weights) = gauss_legendre_16();
    let mut breaks: Vec<f64> = (-3..=3).map(f64::from).collect();
    let kink = x / h;
    if kink > -3.0 && kink < 3.0 {
        breaks.push(kink);
        breaks.sort_by(f64::total_cmp);
    }
    let mut total = 0.0;
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        if half <= 0.0 {
            continue;
        }
        for (t, wt) in nodes.iter().zip(weights.iter()) {
            let s = mid + half * t;
            total += wt * half * phi4(s) * put_payoff_transformed(x - h * s);
        }
    }
    total
}

fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    use std::sync::OnceLock;
    static GL: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    GL.get_or_init(|| {
        let n = 16;
        let mut x = [0.0; 16];
        let mut w = [0.0; 16];
        for i in 0..n {
            // Newton on P_n from the Chebyshev-like initial guess
            let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, t);
                for k in 2..=n {
                    let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                    p0 = p1;
                    p1 = p2;
                }
                let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
                let dt = p1 / dp;
                t -= dt;
                if dt.abs() < 1e-16 {
                    let (mut q0, mut q1) = (1.0, t);
                    for k in 2..=n {
                        let q2 = ((2 * k - 1) as f64 * t * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    let dq = n as f64 * (t * q1 - q0) / (t * t - 1.0);
                    w[i] = 2.0 / ((1.0 - t * t) * dq * dq);
                    break;
                }
            }
            x[i] = t;
        }
        (x, w)
    })
}
