//! Closed-form per-link statistics: pathloss, blockage, RF-chain contention,
//! SINR power bounds and the load ceiling that keeps contention tolerable.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::geometry::GridCell;
use crate::scenario::Scenario;

/// Carrier frequency in GHz used by the pathloss fit.
pub const CARRIER_GHZ: f64 = 28.0;

/// Poisson tail mass below which the contention series is truncated.
const SERIES_TAIL: f64 = 1e-14;

/// Radio parameters as they appear in the scenario `radio` block: gains in
/// dB, noise in dBm, everything else linear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    pub h_bs: f64,
    pub h_ue: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r_max: f64,
    pub n_rf: u32,
    #[serde(alias = "z")]
    pub sinr_threshold: f64,
    pub gamma: f64,
    pub g_main_db: f64,
    pub g_side_db: f64,
    pub p_tx: f64,
    pub noise_dbm: f64,
    pub eps_bisect: f64,
}

impl Default for RadioConfig {
    fn default() -> Self {
        RadioConfig {
            h_bs: 10.0,
            h_ue: 1.5,
            alpha: 0.08,
            beta: 0.08,
            r_max: 200.0,
            n_rf: 12,
            sinr_threshold: 1.0,
            gamma: 0.05,
            g_main_db: 15.0,
            g_side_db: -9.0,
            p_tx: 1.0,
            noise_dbm: -104.5,
            eps_bisect: 0.1,
        }
    }
}

/// Validated radio parameters in linear units.
#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub h_bs: f64,
    pub h_ue: f64,
    pub alpha: f64,
    pub beta: f64,
    pub r_max: f64,
    pub n_rf: u32,
    pub z: f64,
    pub gamma: f64,
    pub g_main: f64,
    pub g_side: f64,
    pub p_tx: f64,
    pub noise: f64,
    pub eps_bisect: f64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    db_to_linear(dbm - 30.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

impl RadioParams {
    pub fn from_config(cfg: &RadioConfig) -> Result<Self> {
        let p = RadioParams {
            h_bs: cfg.h_bs,
            h_ue: cfg.h_ue,
            alpha: cfg.alpha,
            beta: cfg.beta,
            r_max: cfg.r_max,
            n_rf: cfg.n_rf,
            z: cfg.sinr_threshold,
            gamma: cfg.gamma,
            g_main: db_to_linear(cfg.g_main_db),
            g_side: db_to_linear(cfg.g_side_db),
            p_tx: cfg.p_tx,
            noise: dbm_to_watts(cfg.noise_dbm),
            eps_bisect: cfg.eps_bisect,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(CoreError::InvalidRadio(msg.to_string()));
        let finite = [
            self.h_bs,
            self.h_ue,
            self.alpha,
            self.beta,
            self.r_max,
            self.z,
            self.gamma,
            self.g_main,
            self.g_side,
            self.p_tx,
            self.noise,
            self.eps_bisect,
        ];
        if finite.iter().any(|v| !v.is_finite()) {
            return bad("all parameters must be finite");
        }
        if self.r_max <= 0.0 {
            return bad("r_max must be positive");
        }
        if self.n_rf < 1 {
            return bad("n_rf must be at least 1");
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad("gamma must lie in (0, 1)");
        }
        if !(self.g_main > self.g_side && self.g_side > 0.0) {
            return bad("need g_main > g_side > 0");
        }
        if self.p_tx <= 0.0 || self.noise <= 0.0 || self.eps_bisect <= 0.0 || self.z <= 0.0 {
            return bad("p_tx, noise, eps_bisect and the SINR threshold must be positive");
        }
        if self.alpha < 0.0 || self.beta < 0.0 {
            return bad("blockage parameters must be nonnegative");
        }
        if self.h_ue < 0.0 || self.h_bs <= self.h_ue {
            return bad("need h_bs > h_ue >= 0");
        }
        Ok(())
    }
}

/// Linear LoS pathloss gain at distance `r` meters.
pub fn pathloss(r: f64) -> Result<f64> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(CoreError::Domain {
            what: "link distance",
            value: r,
        });
    }
    Ok(10f64.powf(-3.24 - 2.1 * r.log10() - 2.0 * CARRIER_GHZ.log10()))
}

/// Pathloss in dB (positive number).
pub fn pathloss_db(r: f64) -> Result<f64> {
    pathloss(r).map(|pl| -10.0 * pl.log10())
}

/// Probability that a link of length `r` is physically blocked.
pub fn blockage_prob(r: f64, los: bool, params: &RadioParams) -> f64 {
    if !los || r > params.r_max {
        return 1.0;
    }
    -(-params.beta * r - params.alpha).exp_m1()
}

/// Σ_{i >= start} Pois(i; mu) f(i) for 0 <= f <= 1, truncated once the
/// remaining Poisson mass is below `SERIES_TAIL`.
fn poisson_series(mu: f64, start: u64, f: impl Fn(u64) -> f64) -> f64 {
    let ln_mu = mu.ln();
    let mut ln_fact: f64 = (2..=start).map(|k| (k as f64).ln()).sum();
    let mut sum = 0.0;
    let mut i = start;
    loop {
        let p = (-mu + i as f64 * ln_mu - ln_fact).exp();
        sum += p * f(i);
        i += 1;
        ln_fact += (i as f64).ln();
        if (i as f64) > mu + 1.0 {
            // Terms past the mode shrink by at least mu / (i + 1) each step.
            let next = (-mu + i as f64 * ln_mu - ln_fact).exp();
            let ratio = mu / (i as f64 + 1.0);
            if next / (1.0 - ratio) < SERIES_TAIL {
                break;
            }
        }
    }
    sum
}

fn check_mu(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(CoreError::Domain {
            what: "expected UE count",
            value: mu,
        });
    }
    Ok(())
}

/// Probability that a UE is denied an RF chain when the number of unblocked
/// active UEs in the cell is Poisson with mean `mu` and the BS has `n_rf`
/// chains: E[(n - n_rf)^+ / n].
pub fn access_block_prob(mu: f64, n_rf: u32) -> Result<f64> {
    check_mu(mu)?;
    if mu == 0.0 {
        return Ok(0.0);
    }
    let n = n_rf as u64;
    let v = poisson_series(mu, n + 1, |i| (i - n) as f64 / i as f64);
    Ok(v.clamp(0.0, 1.0))
}

/// E[((n - n_rf)^+ / n)^2] for the same Poisson count; used for the
/// sampling error of per-trial denial ratios.
pub fn access_block_second_moment(mu: f64, n_rf: u32) -> Result<f64> {
    check_mu(mu)?;
    if mu == 0.0 {
        return Ok(0.0);
    }
    let n = n_rf as u64;
    Ok(poisson_series(mu, n + 1, |i| {
        let r = (i - n) as f64 / i as f64;
        r * r
    }))
}

/// Largest expected load whose denial probability does not exceed `gamma`.
/// The returned value always satisfies `access_block_prob(phi) <= gamma`.
pub fn solve_phi(gamma: f64, n_rf: u32) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CoreError::Domain {
            what: "access blockage tolerance",
            value: gamma,
        });
    }
    let rho = |mu: f64| access_block_prob(mu, n_rf).expect("finite nonnegative load");
    let mut hi = 1.0;
    while rho(hi) <= gamma {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rho(mid) <= gamma {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Blockage parameters (alpha, beta) from obstacle statistics: density per
/// m², mean length and width, and the CDF of obstacle heights.
pub fn blockage_from_obstacles(
    lambda_obs: f64,
    mean_len: f64,
    mean_wid: f64,
    height_cdf: impl Fn(f64) -> f64,
    h_bs: f64,
    h_ue: f64,
) -> (f64, f64) {
    // Fraction of obstacles tall enough to cut the link, averaged along it.
    const STEPS: usize = 1000;
    let at = |s: f64| height_cdf(s * h_ue + (1.0 - s) * h_bs);
    let h = 1.0 / STEPS as f64;
    let mut integral = at(0.0) + at(1.0);
    for k in 1..STEPS {
        integral += if k % 2 == 1 { 4.0 } else { 2.0 } * at(k as f64 * h);
    }
    integral *= h / 3.0;
    let eta = 1.0 - integral;
    let alpha = lambda_obs * mean_len * mean_wid;
    let beta = 2.0 * lambda_obs * (mean_len + mean_wid) / std::f64::consts::PI * eta;
    (alpha, beta)
}

/// Expected unblocked active UEs in the cell of site `b` for association
/// row `row` (length G).
pub fn mean_active_ue(b: usize, row: &[bool], links: &LinkTable, grids: &[GridCell]) -> f64 {
    row.iter()
        .zip(grids)
        .enumerate()
        .filter(|(_, (&on, _))| on)
        .map(|(g, (_, cell))| cell.mean_ues() * (1.0 - links.p_blk(b, g)))
        .sum()
}

/// Per (site, grid) link quantities, row-major by site.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkTable {
    pub n_sites: usize,
    pub n_grids: usize,
    los: Vec<bool>,
    r: Vec<f64>,
    pl: Vec<f64>,
    p_blk: Vec<f64>,
    p_bar: Vec<f64>,
    i_hat_unassoc: Vec<f64>,
    i_hat_assoc: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEntry {
    pub los: bool,
    pub r: f64,
    pub pl: f64,
    pub p_blk: f64,
    pub p_bar: f64,
    pub i_hat_unassoc: f64,
    pub i_hat_assoc: f64,
}

/// Link quantities for one pair, from the closed forms.
pub fn link_entry(los: bool, r: f64, params: &RadioParams) -> Result<LinkEntry> {
    let pl = pathloss(r)?;
    let p_blk = blockage_prob(r, los, params);
    let p_bar = if p_blk < 1.0 {
        params.p_tx * params.g_main * pl / params.n_rf as f64
    } else {
        0.0
    };
    let side = if los {
        params.p_tx * params.g_side * pl
    } else {
        0.0
    };
    Ok(LinkEntry {
        los,
        r,
        pl,
        p_blk,
        p_bar,
        i_hat_unassoc: side,
        i_hat_assoc: (1.0 - 1.0 / params.n_rf as f64) * side,
    })
}

impl LinkTable {
    #[inline]
    fn at(&self, b: usize, g: usize) -> usize {
        debug_assert!(b < self.n_sites && g < self.n_grids);
        b * self.n_grids + g
    }

    pub fn los(&self, b: usize, g: usize) -> bool {
        self.los[self.at(b, g)]
    }
    pub fn r(&self, b: usize, g: usize) -> f64 {
        self.r[self.at(b, g)]
    }
    pub fn pl(&self, b: usize, g: usize) -> f64 {
        self.pl[self.at(b, g)]
    }
    pub fn p_blk(&self, b: usize, g: usize) -> f64 {
        self.p_blk[self.at(b, g)]
    }
    pub fn p_bar(&self, b: usize, g: usize) -> f64 {
        self.p_bar[self.at(b, g)]
    }
    /// Interference bound from site `b` at grid `g` given whether the grid is
    /// associated with `b`.
    pub fn i_hat(&self, b: usize, g: usize, associated: bool) -> f64 {
        if associated {
            self.i_hat_assoc[self.at(b, g)]
        } else {
            self.i_hat_unassoc[self.at(b, g)]
        }
    }
    /// Whether `b` could serve `g` at all (LoS within the distance limit).
    pub fn usable(&self, b: usize, g: usize) -> bool {
        self.p_blk(b, g) < 1.0
    }

    /// Table from entries listed row-major by site.
    pub fn from_entries(n_sites: usize, n_grids: usize, entries: &[LinkEntry]) -> LinkTable {
        assert_eq!(
            entries.len(),
            n_sites * n_grids,
            "entry count must be n_sites * n_grids"
        );
        LinkTable {
            n_sites,
            n_grids,
            los: entries.iter().map(|e| e.los).collect(),
            r: entries.iter().map(|e| e.r).collect(),
            pl: entries.iter().map(|e| e.pl).collect(),
            p_blk: entries.iter().map(|e| e.p_blk).collect(),
            p_bar: entries.iter().map(|e| e.p_bar).collect(),
            i_hat_unassoc: entries.iter().map(|e| e.i_hat_unassoc).collect(),
            i_hat_assoc: entries.iter().map(|e| e.i_hat_assoc).collect(),
        }
    }

    pub fn entry(&self, b: usize, g: usize) -> LinkEntry {
        let k = self.at(b, g);
        LinkEntry {
            los: self.los[k],
            r: self.r[k],
            pl: self.pl[k],
            p_blk: self.p_blk[k],
            p_bar: self.p_bar[k],
            i_hat_unassoc: self.i_hat_unassoc[k],
            i_hat_assoc: self.i_hat_assoc[k],
        }
    }
}

/// Evaluates every (site, grid) pair of the scenario.
pub fn build_link_table(scenario: &Scenario) -> Result<LinkTable> {
    let n_sites = scenario.sites.len();
    let n_grids = scenario.grids.len();
    let rows: Vec<Vec<LinkEntry>> = (0..n_sites)
        .into_par_iter()
        .map(|b| {
            (0..n_grids)
                .map(|g| {
                    link_entry(
                        scenario.los_visible(b, g)?,
                        scenario.link_distance(b, g)?,
                        &scenario.radio,
                    )
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let entries: Vec<LinkEntry> = rows.into_iter().flatten().collect();
    Ok(LinkTable::from_entries(n_sites, n_grids, &entries))
}
