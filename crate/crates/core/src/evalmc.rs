//! Monte Carlo evaluation of a deployment.
//!
//! Each trial drops Poisson UEs into every grid, draws an independent
//! blockage outcome for every (UE, built LoS site) pair, lets each site serve
//! a uniformly random subset of its unblocked associated UEs when they
//! outnumber its RF chains, and computes the realized SINR of every served
//! link with sidelobe interference from all built sites the UE can see.
//!
//! Randomness is split into fixed ChaCha8 streams so trials can run in any
//! order and on any number of threads: trial `t` uses stream
//! `t·2³² + g` for grid `g` (UE count, positions, blockage draws) and stream
//! `t·2³² + 2³¹ + b` for the access contention at site `b`.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::deploy::Deployment;
use crate::error::{CoreError, Result};
use crate::geometry::Point3;
use crate::linkmodel::{
    access_block_prob, access_block_second_moment, blockage_prob, mean_active_ue, pathloss,
    LinkTable,
};
use crate::scenario::Scenario;

const SITE_STREAMS: u64 = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McConfig {
    pub n_trials: usize,
    pub seed: u64,
    /// SINR threshold `z` (linear).
    pub sinr_threshold: f64,
    /// Put every UE at its grid center instead of a uniform position.
    pub use_grid_center: bool,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            n_trials: 50,
            seed: 0,
            sinr_threshold: 1.0,
            use_grid_center: false,
        }
    }
}

impl McConfig {
    /// Default configuration with the scenario's SINR threshold.
    pub fn for_scenario(scenario: &Scenario) -> Self {
        McConfig {
            sinr_threshold: scenario.radio.z,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_trials == 0 {
            return Err(CoreError::InvalidScenario(
                "at least one Monte Carlo trial is required".into(),
            ));
        }
        if !(self.sinr_threshold > 0.0) || !self.sinr_threshold.is_finite() {
            return Err(CoreError::Domain {
                what: "SINR threshold",
                value: self.sinr_threshold,
            });
        }
        Ok(())
    }
}

/// A served, unblocked link of one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkSample {
    pub site: usize,
    pub grid: usize,
    pub sinr: f64,
    /// Deterministic lower bound of the same (site, grid) pair.
    pub sinr_lb: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialRecord {
    pub links: Vec<LinkSample>,
    pub ues: Vec<u32>,
    pub outages: Vec<u32>,
    /// Unblocked associated UEs per site.
    pub attempting: Vec<u32>,
    pub served: Vec<u32>,
}

struct Ue {
    grid: usize,
    /// `(site, unblocked, pathloss)` for every built site with grid LoS.
    visible: Vec<(usize, bool, f64)>,
}

fn grid_stream(seed: u64, trial: u64, g: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 32) + g as u64);
    rng
}

fn site_stream(seed: u64, trial: u64, b: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 32) + SITE_STREAMS + b as u64);
    rng
}

fn check_dims(d: &Deployment, scenario: &Scenario, links: &LinkTable) -> Result<()> {
    let (b, g) = (scenario.n_sites(), scenario.n_grids());
    if d.y.len() != b
        || d.x.rows() != b
        || d.x.cols() != g
        || links.n_sites != b
        || links.n_grids != g
        || d.per_grid.len() != g
    {
        return Err(CoreError::InvalidScenario(format!(
            "deployment ({} sites, {}x{} association) does not match the scenario ({b} sites, {g} grids)",
            d.y.len(),
            d.x.rows(),
            d.x.cols()
        )));
    }
    Ok(())
}

/// One independent realization.
pub fn run_trial(
    d: &Deployment,
    scenario: &Scenario,
    links: &LinkTable,
    cfg: &McConfig,
    trial: u64,
) -> Result<TrialRecord> {
    check_dims(d, scenario, links)?;
    let params = &scenario.radio;
    let n_sites = scenario.n_sites();
    let n_grids = scenario.n_grids();
    let built: Vec<usize> = (0..n_sites).filter(|&b| d.y[b]).collect();

    let mut ues: Vec<Ue> = Vec::new();
    let mut rec = TrialRecord {
        ues: vec![0; n_grids],
        outages: vec![0; n_grids],
        attempting: vec![0; n_sites],
        served: vec![0; n_sites],
        links: Vec::new(),
    };
    for (g, cell) in scenario.grids.iter().enumerate() {
        let mean = cell.mean_ues();
        if mean <= 0.0 {
            continue;
        }
        let mut rng = grid_stream(cfg.seed, trial, g);
        let n = Poisson::new(mean)
            .map_err(|_| CoreError::Domain {
                what: "UE mean",
                value: mean,
            })?
            .sample(&mut rng) as u32;
        rec.ues[g] = n;
        let seen: Vec<usize> = built.iter().copied().filter(|&b| links.los(b, g)).collect();
        for _ in 0..n {
            let pos = if cfg.use_grid_center {
                None
            } else {
                let h = cell.side / 2.0;
                Some(Point3::new(
                    cell.center.x + rng.random_range(-h..h),
                    cell.center.y + rng.random_range(-h..h),
                    cell.center.z,
                ))
            };
            let mut visible = Vec::with_capacity(seen.len());
            for &b in &seen {
                let (r, pl) = match &pos {
                    None => (links.r(b, g), links.pl(b, g)),
                    Some(p) => {
                        let r = scenario.sites[b].position.distance(p);
                        (r, pathloss(r)?)
                    }
                };
                let p_blk = blockage_prob(r, true, params);
                let unblocked = rng.random::<f64>() >= p_blk;
                visible.push((b, unblocked, pl));
            }
            ues.push(Ue { grid: g, visible });
        }
    }

    // Access contention.
    let mut queue: Vec<Vec<usize>> = vec![Vec::new(); n_sites];
    for (k, ue) in ues.iter().enumerate() {
        for &(b, unblocked, _) in &ue.visible {
            if unblocked && d.x.get(b, ue.grid) {
                queue[b].push(k);
            }
        }
    }
    let n_rf = params.n_rf as usize;
    let mut served: Vec<Vec<bool>> = ues.iter().map(|u| vec![false; u.visible.len()]).collect();
    let mut n_served = vec![0usize; n_sites];
    for b in 0..n_sites {
        let q = &queue[b];
        rec.attempting[b] = q.len() as u32;
        let chosen: Vec<usize> = if q.len() > n_rf {
            let mut rng = site_stream(cfg.seed, trial, b);
            let mut idx = sample(&mut rng, q.len(), n_rf).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|i| q[i]).collect()
        } else {
            q.clone()
        };
        n_served[b] = chosen.len();
        rec.served[b] = chosen.len() as u32;
        for k in chosen {
            let slot = ues[k]
                .visible
                .iter()
                .position(|v| v.0 == b)
                .expect("queued UEs see the site");
            served[k][slot] = true;
        }
    }

    // Realized SINR and outage.
    for (k, ue) in ues.iter().enumerate() {
        let g = ue.grid;
        let interference: f64 = ue
            .visible
            .iter()
            .filter(|v| v.1 && n_served[v.0] > 0)
            .map(|&(i, _, pl)| {
                let n = n_served[i] as f64;
                let x = if d.x.get(i, g) { 1.0 } else { 0.0 };
                (n - x) / n * params.p_tx * params.g_side * pl
            })
            .sum();
        let mut covered = false;
        for (slot, &(b, unblocked, pl)) in ue.visible.iter().enumerate() {
            if !unblocked || !served[k][slot] {
                continue;
            }
            let signal = params.p_tx * params.g_main * pl / n_served[b] as f64;
            let sinr = signal / (params.noise + interference);
            let sinr_lb = d.per_grid[g]
                .sinr_lb
                .iter()
                .find(|e| e.0 == b)
                .map_or(0.0, |e| e.1);
            rec.links.push(LinkSample {
                site: b,
                grid: g,
                sinr,
                sinr_lb,
            });
            if sinr >= cfg.sinr_threshold {
                covered = true;
            }
        }
        if !covered {
            rec.outages[g] += 1;
        }
    }
    Ok(rec)
}

/// Access-blockage statistics of one built site.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SiteAccess {
    pub site: usize,
    /// Mean over trials of denied / attempting (0 without attempts).
    pub estimate: f64,
    /// Standard error of `estimate` under the Poisson load model.
    pub std_error: f64,
    /// Closed-form value at the expected load.
    pub closed_form: f64,
    /// Expected unblocked associated UEs.
    pub expected_load: f64,
    pub mean_attempting: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub n_trials: usize,
    pub sinr_samples: Vec<f64>,
    pub sinr_lb_samples: Vec<f64>,
    pub access_block_est: Vec<SiteAccess>,
    /// Outage fraction per grid; `None` when no UE was ever sampled there.
    pub ue_outage_est: Vec<Option<f64>>,
    pub ue_counts: Vec<u64>,
    pub diversity_hist: Vec<usize>,
    /// Served links whose realized SINR fell below their bound.
    pub bound_violations: usize,
}

/// Relative slack allowed when comparing a realized SINR with its bound.
pub const BOUND_REL_TOL: f64 = 1e-12;

/// Pools trial records into a report.
pub fn aggregate(
    trials: &[TrialRecord],
    d: &Deployment,
    scenario: &Scenario,
    links: &LinkTable,
) -> Result<McReport> {
    check_dims(d, scenario, links)?;
    if trials.is_empty() {
        return Err(CoreError::InvalidScenario("no trials to aggregate".into()));
    }
    let n_grids = scenario.n_grids();
    let n_rf = scenario.radio.n_rf;
    let n = trials.len() as f64;

    let mut sinr_samples = Vec::new();
    let mut sinr_lb_samples = Vec::new();
    let mut bound_violations = 0;
    let mut ue_counts = vec![0u64; n_grids];
    let mut outages = vec![0u64; n_grids];
    for t in trials {
        for l in &t.links {
            sinr_samples.push(l.sinr);
            sinr_lb_samples.push(l.sinr_lb);
            if l.sinr < l.sinr_lb * (1.0 - BOUND_REL_TOL) {
                bound_violations += 1;
            }
        }
        for g in 0..n_grids {
            ue_counts[g] += t.ues[g] as u64;
            outages[g] += t.outages[g] as u64;
        }
    }

    let mut access_block_est = Vec::new();
    for b in (0..scenario.n_sites()).filter(|&b| d.y[b]) {
        let mu = mean_active_ue(b, d.x.row(b), links, &scenario.grids);
        let closed_form = access_block_prob(mu, n_rf)?;
        let second = access_block_second_moment(mu, n_rf)?;
        let mut sum = 0.0;
        let mut attempts = 0.0;
        for t in trials {
            let a = t.attempting[b];
            attempts += a as f64;
            if a > 0 {
                sum += (a - t.served[b]) as f64 / a as f64;
            }
        }
        access_block_est.push(SiteAccess {
            site: b,
            estimate: sum / n,
            std_error: ((second - closed_form * closed_form).max(0.0) / n).sqrt(),
            closed_form,
            expected_load: mu,
            mean_attempting: attempts / n,
        });
    }

    Ok(McReport {
        n_trials: trials.len(),
        sinr_samples,
        sinr_lb_samples,
        access_block_est,
        ue_outage_est: (0..n_grids)
            .map(|g| (ue_counts[g] > 0).then(|| outages[g] as f64 / ue_counts[g] as f64))
            .collect(),
        ue_counts,
        diversity_hist: d.diversity_histogram(),
        bound_violations,
    })
}

/// Runs `cfg.n_trials` trials in parallel and aggregates them.
pub fn evaluate(
    d: &Deployment,
    scenario: &Scenario,
    links: &LinkTable,
    cfg: &McConfig,
) -> Result<McReport> {
    cfg.validate()?;
    let trials = (0..cfg.n_trials as u64)
        .into_par_iter()
        .map(|t| run_trial(d, scenario, links, cfg, t))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&trials, d, scenario, links)
}

impl McReport {
    /// Binomial standard error of grid `g`'s outage estimate at the
    /// tolerance `zeta`; `None` when the grid never saw a UE.
    pub fn outage_std_error(&self, g: usize, zeta: f64) -> Option<f64> {
        let n = self.ue_counts[g];
        (n > 0).then(|| (zeta * (1.0 - zeta) / n as f64).sqrt())
    }

    /// Per-grid outage estimates of grids that saw UEs.
    pub fn defined_outages(&self) -> Vec<f64> {
        self.ue_outage_est.iter().flatten().copied().collect()
    }
}

/// Empirical CDF as `(value, fraction ≤ value)` points, one per sample.
pub fn empirical_cdf(values: &[f64]) -> Vec<(f64, f64)> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(k, &x)| (x, (k + 1) as f64 / n))
        .collect()
}
