//! Channel model and random instance generation.
//!
//! Geometry: the BS sits at the origin; users are dropped uniformly over the
//! annulus between the inner and outer radius. Large-scale attenuation is
//! free-space at the 1 m reference distance (2.5 GHz carrier) followed by a
//! log-distance power law; the BS antenna gain is applied once on every
//! BS-terminated link (DL and UL), never on user-to-user links. Small-scale
//! fading is i.i.d. Rayleigh per link and subcarrier; the SI channel is
//! Rician with unit mean power so the cancellation constant rho carries the
//! entire SI attenuation. No shadowing term is generated.
//!
//! Determinism: instances are a pure function of (config, seed). The
//! generator is ChaCha8 seeded with the 64-bit seed, and the draw order is
//! fixed: DL positions, UL positions, then DL fading, UL fading, user-to-user
//! fading, and the SI channel, each looped subcarrier-major.

use crate::config::{db_to_linear, SystemConfig};
use crate::error::{Error, Result};
use crate::tuples::Dims;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Carrier frequency of the cell, hertz. Only the 1 m free-space reference
/// gain depends on it.
const CARRIER_HZ: f64 = 2.5e9;
const REFERENCE_DISTANCE_M: f64 = 1.0;

/// Free-space amplitude-squared gain at the reference distance.
fn reference_gain() -> f64 {
    let lambda = SPEED_OF_LIGHT / CARRIER_HZ;
    let a = lambda / (4.0 * std::f64::consts::PI * REFERENCE_DISTANCE_M);
    a * a
}

/// Large-scale power gain of a BS-terminated link at `distance` meters:
/// antenna gain times free-space reference times (d0/d)^alpha.
pub fn path_loss_gain(distance: f64, config: &SystemConfig) -> Result<f64> {
    if !(distance > 0.0) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    let ant = db_to_linear(config.antenna_gain_dbi);
    Ok(ant * reference_gain() * (REFERENCE_DISTANCE_M / distance).powf(config.path_loss_exp))
}

/// Large-scale gain of a user-to-user link (no BS antenna gain).
fn user_link_gain(distance: f64, config: &SystemConfig) -> f64 {
    reference_gain() * (REFERENCE_DISTANCE_M / distance).powf(config.path_loss_exp)
}

/// One realization of the allocation problem: normalized channel gains,
/// weights, budgets, and solver tolerances. Immutable after construction and
/// safe to share across concurrent solver runs.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub dims: Dims,
    /// Normalized DL gains H[i][m] = pathloss_m |h|^2 / noise_dl[m], flat [i*K+m].
    h: Vec<f64>,
    /// Normalized UL gains G[i][r], flat [i*J+r].
    g: Vec<f64>,
    /// Normalized UL-to-DL interference gains F[i][r][m], flat [(i*J+r)*K+m].
    cci: Vec<f64>,
    /// Normalized SI gains L_SI[i] = |l_si|^2 / noise_bs.
    l_si: Vec<f64>,
    /// DL weights, in (0,1], max = 1.
    pub w: Vec<f64>,
    /// UL weights, in (0,1], max = 1.
    pub mu: Vec<f64>,
    pub p_max_dl: f64,
    pub p_max_ul: Vec<f64>,
    pub rho: f64,
    pub noise_dl: Vec<f64>,
    pub epsilon: f64,
    pub delta: f64,
    pub max_outer_iters: usize,
    pub max_sca_iters: usize,
    /// BS-to-user distances, meters (kept for the weight rule and diagnostics).
    pub dl_dist: Vec<f64>,
    pub ul_dist: Vec<f64>,
    pub seed: u64,
}

impl ProblemInstance {
    /// H gain of DL user m on subcarrier i (1-based indices).
    #[inline]
    pub fn h(&self, i: usize, m: usize) -> f64 {
        self.h[(i - 1) * self.dims.n_dl + (m - 1)]
    }

    /// G gain of UL user r on subcarrier i.
    #[inline]
    pub fn g(&self, i: usize, r: usize) -> f64 {
        self.g[(i - 1) * self.dims.n_ul + (r - 1)]
    }

    /// Interference gain from UL user r into DL user m on subcarrier i.
    #[inline]
    pub fn f(&self, i: usize, r: usize, m: usize) -> f64 {
        self.cci[((i - 1) * self.dims.n_ul + (r - 1)) * self.dims.n_dl + (m - 1)]
    }

    /// Normalized SI gain on subcarrier i.
    #[inline]
    pub fn l_si(&self, i: usize) -> f64 {
        self.l_si[i - 1]
    }

    /// Residual SI power coefficient rho * L_SI on subcarrier i.
    #[inline]
    pub fn si_coeff(&self, i: usize) -> f64 {
        self.rho * self.l_si[i - 1]
    }

    /// Builds an instance from explicit gain tensors (tests and hand-crafted
    /// cases). Tensor layouts match the accessor conventions.
    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        dims: Dims,
        h: Vec<f64>,
        g: Vec<f64>,
        cci: Vec<f64>,
        l_si: Vec<f64>,
        w: Vec<f64>,
        mu: Vec<f64>,
        p_max_dl: f64,
        p_max_ul: Vec<f64>,
        rho: f64,
    ) -> Result<Self> {
        if h.len() != dims.n_sc * dims.n_dl
            || g.len() != dims.n_sc * dims.n_ul
            || cci.len() != dims.n_sc * dims.n_ul * dims.n_dl
            || l_si.len() != dims.n_sc
            || w.len() != dims.n_dl
            || mu.len() != dims.n_ul
            || p_max_ul.len() != dims.n_ul
        {
            return Err(Error::Domain("gain tensor shapes do not match dims".into()));
        }
        for v in h.iter().chain(&g).chain(&cci).chain(&l_si) {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(Error::Domain(format!("gains must be finite and nonnegative, got {v}")));
            }
        }
        for v in w.iter().chain(&mu) {
            if !(*v >= 0.0 && *v <= 1.0) {
                return Err(Error::Domain(format!("weights must lie in [0,1], got {v}")));
            }
        }
        Ok(ProblemInstance {
            dims,
            h,
            g,
            cci,
            l_si,
            w,
            mu,
            p_max_dl,
            p_max_ul,
            rho,
            noise_dl: vec![1.0; dims.n_dl],
            epsilon: 0.01,
            delta: 0.01,
            max_outer_iters: 2000,
            max_sca_iters: 100,
            dl_dist: vec![0.0; dims.n_dl],
            ul_dist: vec![0.0; dims.n_ul],
            seed: 0,
        })
    }
}

/// Standard normal via Box-Muller; two uniforms per draw, fixed order.
fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// |CN(0,1)|^2 sample: unit-mean exponential.
fn rayleigh_power<R: Rng>(rng: &mut R) -> f64 {
    let re = standard_normal(rng) * std::f64::consts::FRAC_1_SQRT_2;
    let im = standard_normal(rng) * std::f64::consts::FRAC_1_SQRT_2;
    re * re + im * im
}

/// |Rician|^2 sample with factor `k_lin`, mean power 1.
fn rician_power<R: Rng>(rng: &mut R, k_lin: f64) -> f64 {
    let los = (k_lin / (k_lin + 1.0)).sqrt();
    let scatter = (0.5 / (k_lin + 1.0)).sqrt();
    let re = los + scatter * standard_normal(rng);
    let im = scatter * standard_normal(rng);
    re * re + im * im
}

/// Uniform position on the annulus; returns (x, y).
fn annulus_position<R: Rng>(rng: &mut R, inner: f64, outer: f64) -> (f64, f64) {
    let u: f64 = rng.gen_range(0.0..1.0);
    let radius = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
    let theta: f64 = rng.gen_range(0.0..(2.0 * std::f64::consts::PI));
    (radius * theta.cos(), radius * theta.sin())
}

/// Draws one problem instance. Pure function of (config, config.rng_seed).
pub fn generate_instance(config: &SystemConfig) -> Result<ProblemInstance> {
    generate_instance_seeded(config, config.rng_seed)
}

/// Same as [`generate_instance`] with an explicit seed override.
pub fn generate_instance_seeded(config: &SystemConfig, seed: u64) -> Result<ProblemInstance> {
    config.validate()?;
    let dims = Dims::new(config.n_subcarriers, config.n_dl, config.n_ul);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let dl_pos: Vec<(f64, f64)> = (0..dims.n_dl)
        .map(|_| annulus_position(&mut rng, config.inner_radius, config.outer_radius))
        .collect();
    let ul_pos: Vec<(f64, f64)> = (0..dims.n_ul)
        .map(|_| annulus_position(&mut rng, config.inner_radius, config.outer_radius))
        .collect();
    let norm = |p: &(f64, f64)| (p.0 * p.0 + p.1 * p.1).sqrt();
    let dl_dist: Vec<f64> = dl_pos.iter().map(norm).collect();
    let ul_dist: Vec<f64> = ul_pos.iter().map(norm).collect();

    let dl_pl: Vec<f64> =
        dl_dist.iter().map(|&d| path_loss_gain(d, config)).collect::<Result<_>>()?;
    let ul_pl: Vec<f64> =
        ul_dist.iter().map(|&d| path_loss_gain(d, config)).collect::<Result<_>>()?;
    // User-to-user large-scale gains; users never collide in practice but a
    // degenerate drop would make the distance zero.
    let mut cci_pl = vec![0.0; dims.n_ul * dims.n_dl];
    for r in 0..dims.n_ul {
        for m in 0..dims.n_dl {
            let dx = ul_pos[r].0 - dl_pos[m].0;
            let dy = ul_pos[r].1 - dl_pos[m].1;
            let d = (dx * dx + dy * dy).sqrt();
            if !(d > 0.0) {
                return Err(Error::Domain("coincident UL/DL user positions".into()));
            }
            cci_pl[r * dims.n_dl + m] = user_link_gain(d, config);
        }
    }

    let mut h = vec![0.0; dims.n_sc * dims.n_dl];
    for i in 0..dims.n_sc {
        for m in 0..dims.n_dl {
            h[i * dims.n_dl + m] = dl_pl[m] * rayleigh_power(&mut rng) / config.noise_dl[m];
        }
    }
    let mut g = vec![0.0; dims.n_sc * dims.n_ul];
    for i in 0..dims.n_sc {
        for r in 0..dims.n_ul {
            g[i * dims.n_ul + r] = ul_pl[r] * rayleigh_power(&mut rng) / config.noise_bs;
        }
    }
    let mut cci = vec![0.0; dims.n_sc * dims.n_ul * dims.n_dl];
    for i in 0..dims.n_sc {
        for r in 0..dims.n_ul {
            for m in 0..dims.n_dl {
                cci[(i * dims.n_ul + r) * dims.n_dl + m] =
                    cci_pl[r * dims.n_dl + m] * rayleigh_power(&mut rng) / config.noise_dl[m];
            }
        }
    }
    let k_lin = db_to_linear(config.rician_k_db);
    let l_si: Vec<f64> =
        (0..dims.n_sc).map(|_| rician_power(&mut rng, k_lin) / config.noise_bs).collect();

    // Weight rule: normalized distance to the BS, so the farthest user in each
    // direction carries weight 1.
    let max_dl = dl_dist.iter().cloned().fold(f64::MIN, f64::max);
    let max_ul = ul_dist.iter().cloned().fold(f64::MIN, f64::max);
    let w: Vec<f64> = dl_dist.iter().map(|d| d / max_dl).collect();
    let mu: Vec<f64> = ul_dist.iter().map(|d| d / max_ul).collect();

    Ok(ProblemInstance {
        dims,
        h,
        g,
        cci,
        l_si,
        w,
        mu,
        p_max_dl: config.p_max_dl,
        p_max_ul: config.p_max_ul.clone(),
        rho: config.rho,
        noise_dl: config.noise_dl.clone(),
        epsilon: config.epsilon,
        delta: config.delta,
        max_outer_iters: config.max_outer_iters,
        max_sca_iters: config.max_sca_iters,
        dl_dist,
        ul_dist,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> SystemConfig {
        SystemConfig::desk_default()
    }

    #[test]
    fn reference_distance_gives_reference_gain() {
        let c = cfg();
        let g = path_loss_gain(1.0, &c).unwrap();
        assert!((g - db_to_linear(10.0) * reference_gain()).abs() / g < 1e-15);
    }

    #[test]
    fn doubling_distance_scales_by_power_law() {
        let c = cfg();
        let g1 = path_loss_gain(123.0, &c).unwrap();
        let g2 = path_loss_gain(246.0, &c).unwrap();
        assert!((g2 / g1 - 2f64.powf(-3.6)).abs() < 1e-12);
    }

    #[test]
    fn cell_edge_ratio_matches_exponent() {
        // Direct power-law evaluation across the annulus radii.
        let c = cfg();
        let near = path_loss_gain(30.0, &c).unwrap();
        let far = path_loss_gain(600.0, &c).unwrap();
        let expect = (600.0f64 / 30.0).powf(3.6);
        assert!((near / far - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn nonpositive_distance_rejected() {
        assert!(path_loss_gain(0.0, &cfg()).is_err());
        assert!(path_loss_gain(-3.0, &cfg()).is_err());
    }

    #[test]
    fn same_seed_same_instance() {
        let c = cfg();
        let a = generate_instance_seeded(&c, 42).unwrap();
        let b = generate_instance_seeded(&c, 42).unwrap();
        assert_eq!(a.h, b.h);
        assert_eq!(a.g, b.g);
        assert_eq!(a.cci, b.cci);
        assert_eq!(a.l_si, b.l_si);
        assert_eq!(a.w, b.w);
        let c2 = generate_instance_seeded(&c, 43).unwrap();
        assert_ne!(a.h, c2.h);
    }

    #[test]
    fn single_dl_user_gets_weight_one() {
        let mut c = cfg();
        c.n_dl = 1;
        c.noise_dl = vec![c.noise_bs];
        let inst = generate_instance_seeded(&c, 5).unwrap();
        assert_eq!(inst.w, vec![1.0]);
    }

    #[test]
    fn weights_in_unit_interval_with_max_one() {
        for seed in 0..20 {
            let inst = generate_instance_seeded(&cfg(), seed).unwrap();
            for v in inst.w.iter().chain(&inst.mu) {
                assert!(*v > 0.0 && *v <= 1.0);
            }
            assert!(inst.w.iter().any(|&v| v == 1.0));
            assert!(inst.mu.iter().any(|&v| v == 1.0));
        }
    }

    #[test]
    fn gains_strictly_positive() {
        let inst = generate_instance_seeded(&cfg(), 9).unwrap();
        for i in 1..=inst.dims.n_sc {
            assert!(inst.l_si(i) > 0.0);
            for m in 1..=inst.dims.n_dl {
                assert!(inst.h(i, m) > 0.0);
            }
            for r in 1..=inst.dims.n_ul {
                assert!(inst.g(i, r) > 0.0);
                for m in 1..=inst.dims.n_dl {
                    assert!(inst.f(i, r, m) > 0.0);
                }
            }
        }
    }

    #[test]
    fn rayleigh_power_has_unit_mean() {
        // Monte-Carlo estimate of E|h|^2 over 1e5 draws.
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let n = 100_000;
        let mean = (0..n).map(|_| rayleigh_power(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean = {mean}");
    }

    #[test]
    fn rician_power_has_unit_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(321);
        let k = db_to_linear(5.0);
        let n = 100_000;
        let mean = (0..n).map(|_| rician_power(&mut rng, k)).sum::<f64>() / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean = {mean}");
    }
}
