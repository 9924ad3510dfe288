//! System configuration: cell geometry, budgets, noise, and solver tolerances.
//!
//! Configs load from a flat key-value TOML file. Powers are given in dBm and
//! gain-like quantities in dB in the file; everything is converted to linear
//! units (watts) at load time, except the antenna gain (dBi) and the Rician
//! factor (dB), which are consumed in dB form by the channel model. Per-user
//! entries (`p_max_ul`, `noise_dl`) accept either a scalar (broadcast to all
//! users) or a list.

use crate::error::{Error, Result};
use serde::Deserialize;
use std::path::Path;

/// Converts dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts watts to dBm.
pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// Converts a dB ratio to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Full parameter set for one cell setup.
///
/// All powers are stored in watts and `rho` in linear scale. `antenna_gain_dbi`
/// and `rician_k_db` keep their dB form; they are converted where used.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Number of subcarriers N_F.
    pub n_subcarriers: usize,
    /// Number of DL users K.
    pub n_dl: usize,
    /// Number of UL users J.
    pub n_ul: usize,
    /// BS transmit power budget, watts.
    pub p_max_dl: f64,
    /// Per-UL-user transmit power budgets, watts (length `n_ul`).
    pub p_max_ul: Vec<f64>,
    /// Per-DL-user receiver noise power, watts (length `n_dl`).
    pub noise_dl: Vec<f64>,
    /// BS receiver noise power, watts.
    pub noise_bs: f64,
    /// Residual self-interference constant, linear, in (0, 1).
    pub rho: f64,
    /// Rician factor of the SI channel, dB.
    pub rician_k_db: f64,
    /// Path loss exponent.
    pub path_loss_exp: f64,
    /// Inner cell radius, meters.
    pub inner_radius: f64,
    /// Outer cell radius, meters.
    pub outer_radius: f64,
    /// BS antenna gain, dBi, applied once on every BS-terminated link.
    pub antenna_gain_dbi: f64,
    /// Outer (polyblock) relative termination tolerance.
    pub epsilon: f64,
    /// Inner (projection) termination tolerance.
    pub delta: f64,
    /// Outer iteration cap for the polyblock loop.
    pub max_outer_iters: usize,
    /// Iteration cap for the successive convex approximation loop.
    pub max_sca_iters: usize,
    /// Seed for instance generation.
    pub rng_seed: u64,
}

impl SystemConfig {
    /// Desk-scale defaults: two subcarriers, two users per direction, and the
    /// standard cell parameters (24 dBm BS budget, 18 dBm UL budgets, -125 dBm
    /// noise, rho = -90 dB, path loss exponent 3.6, 30..600 m annulus).
    pub fn desk_default() -> Self {
        SystemConfig {
            n_subcarriers: 2,
            n_dl: 2,
            n_ul: 2,
            p_max_dl: dbm_to_watts(24.0),
            p_max_ul: vec![dbm_to_watts(18.0); 2],
            noise_dl: vec![dbm_to_watts(-125.0); 2],
            noise_bs: dbm_to_watts(-125.0),
            rho: db_to_linear(-90.0),
            rician_k_db: 5.0,
            path_loss_exp: 3.6,
            inner_radius: 30.0,
            outer_radius: 600.0,
            antenna_gain_dbi: 10.0,
            epsilon: 0.01,
            delta: 0.01,
            max_outer_iters: 2000,
            max_sca_iters: 100,
            rng_seed: 1,
        }
    }

    /// Checks every invariant; returns the first violation found.
    pub fn validate(&self) -> Result<()> {
        fn positive(name: &str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be strictly positive, got {v}")))
            }
        }
        if self.n_subcarriers == 0 || self.n_dl == 0 || self.n_ul == 0 {
            return Err(Error::Config("n_subcarriers, n_dl, n_ul must be positive".into()));
        }
        positive("p_max_dl", self.p_max_dl)?;
        if self.p_max_ul.len() != self.n_ul {
            return Err(Error::Config(format!(
                "p_max_ul has {} entries, expected n_ul = {}",
                self.p_max_ul.len(),
                self.n_ul
            )));
        }
        for (r, &p) in self.p_max_ul.iter().enumerate() {
            positive(&format!("p_max_ul[{r}]"), p)?;
        }
        if self.noise_dl.len() != self.n_dl {
            return Err(Error::Config(format!(
                "noise_dl has {} entries, expected n_dl = {}",
                self.noise_dl.len(),
                self.n_dl
            )));
        }
        for (m, &v) in self.noise_dl.iter().enumerate() {
            positive(&format!("noise_dl[{m}]"), v)?;
        }
        positive("noise_bs", self.noise_bs)?;
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::Config(format!("rho must be in (0,1) linear, got {}", self.rho)));
        }
        positive("path_loss_exp", self.path_loss_exp)?;
        positive("inner_radius", self.inner_radius)?;
        positive("outer_radius", self.outer_radius)?;
        if self.inner_radius >= self.outer_radius {
            return Err(Error::Config("inner_radius must be below outer_radius".into()));
        }
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must be in (0,1), got {v}")));
            }
        }
        if self.max_outer_iters == 0 || self.max_sca_iters == 0 {
            return Err(Error::Config("iteration caps must be positive".into()));
        }
        Ok(())
    }

    /// Loads a config from a TOML file (see crate docs for the schema).
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Parses a config from TOML text. Unknown keys are rejected.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| Error::Config(format!("toml parse error: {e}")))?;
        let cfg = raw.into_config()?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Scalar-or-list helper for per-user file entries.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ScalarOrList {
    Scalar(f64),
    List(Vec<f64>),
}

impl ScalarOrList {
    fn broadcast(self, n: usize, name: &str) -> Result<Vec<f64>> {
        match self {
            ScalarOrList::Scalar(v) => Ok(vec![v; n]),
            ScalarOrList::List(v) if v.len() == n => Ok(v),
            ScalarOrList::List(v) => Err(Error::Config(format!(
                "{name} has {} entries, expected {n}",
                v.len()
            ))),
        }
    }
}

/// File-facing schema: powers in dBm, gains in dB.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    n_subcarriers: usize,
    n_dl: usize,
    n_ul: usize,
    /// BS power budget, dBm.
    p_max_dl: f64,
    /// UL user power budgets, dBm (scalar broadcasts).
    p_max_ul: ScalarOrList,
    /// DL receiver noise, dBm (scalar broadcasts).
    noise_dl: ScalarOrList,
    /// BS receiver noise, dBm.
    noise_bs: f64,
    /// SI cancellation constant, dB (negative).
    rho: f64,
    /// Rician factor of the SI channel, dB.
    rician_k: f64,
    path_loss_exp: f64,
    inner_radius: f64,
    outer_radius: f64,
    /// BS antenna gain, dBi.
    antenna_gain: f64,
    epsilon: f64,
    delta: f64,
    max_outer_iters: usize,
    max_sca_iters: usize,
    rng_seed: u64,
}

impl RawConfig {
    fn into_config(self) -> Result<SystemConfig> {
        Ok(SystemConfig {
            n_subcarriers: self.n_subcarriers,
            n_dl: self.n_dl,
            n_ul: self.n_ul,
            p_max_dl: dbm_to_watts(self.p_max_dl),
            p_max_ul: self
                .p_max_ul
                .broadcast(self.n_ul, "p_max_ul")?
                .into_iter()
                .map(dbm_to_watts)
                .collect(),
            noise_dl: self
                .noise_dl
                .broadcast(self.n_dl, "noise_dl")?
                .into_iter()
                .map(dbm_to_watts)
                .collect(),
            noise_bs: dbm_to_watts(self.noise_bs),
            rho: db_to_linear(self.rho),
            rician_k_db: self.rician_k,
            path_loss_exp: self.path_loss_exp,
            inner_radius: self.inner_radius,
            outer_radius: self.outer_radius,
            antenna_gain_dbi: self.antenna_gain,
            epsilon: self.epsilon,
            delta: self.delta,
            max_outer_iters: self.max_outer_iters,
            max_sca_iters: self.max_sca_iters,
            rng_seed: self.rng_seed,
        })
    }
}
