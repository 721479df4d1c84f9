//! Comparison planners: macro-diversity ILP (MDP), RSS-guaranteed greedy
//! (ASSGP) and blockage-guaranteed greedy (BGGA).
//!
//! MDP and ASSGP associate every LoS grid within `r_max` of a built site;
//! BGGA uses the capacity-limited coverage of the proposed method. Only grids
//! with an outage guarantee (`ζ < 1`) constrain any scheme.

use std::fmt;
use std::str::FromStr;

use log::{debug, info};
use mmwave_ilp::{solve_bb, Constraint, IlpInstance, Sense, Status};
use serde::{Deserialize, Serialize};

use crate::deploy::{
    log_term, make_deployment, site_costs, solve_prepared, InfeasibleReport, Outcome, Prepared,
};
use crate::error::{CoreError, Result};
use crate::geometry::GridCell;
use crate::linkmodel::{watts_to_dbm, LinkTable, RadioParams};
use crate::matrix::BoolMatrix;
use crate::scenario::Scenario;

/// Slack on `log ζ` when replaying the blockage-only guarantee.
const LOG_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Average-RSS floor of ASSGP in dB.
    pub rss_threshold: f64,
    /// Required number of associated links per grid (MDP and ASSGP).
    pub min_diversity: usize,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            rss_threshold: -90.0,
            min_diversity: 2,
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_diversity == 0 {
            return Err(CoreError::InvalidScenario(
                "min_diversity must be at least 1".into(),
            ));
        }
        if self.rss_threshold.is_nan() {
            return Err(CoreError::Domain {
                what: "RSS threshold",
                value: self.rss_threshold,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Proposed,
    Mdp,
    Assgp,
    Bgga,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Proposed, Scheme::Mdp, Scheme::Assgp, Scheme::Bgga];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Proposed => "proposed",
            Scheme::Mdp => "mdp",
            Scheme::Assgp => "assgp",
            Scheme::Bgga => "bgga",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown scheme '{s}' (expected proposed, mdp, assgp or bgga)"))
    }
}

/// Unconstrained association: LoS and within `r_max`.
pub fn los_association(links: &LinkTable) -> BoolMatrix {
    BoolMatrix::from_fn(links.n_sites, links.n_grids, |b, g| links.usable(b, g))
}

/// Received power of link `(b, g)` in dBm: transmit power plus main-lobe
/// gain minus pathloss.
pub fn rss_db(links: &LinkTable, b: usize, g: usize, params: &RadioParams) -> f64 {
    watts_to_dbm(params.p_tx) + 10.0 * params.g_main.log10() + 10.0 * links.pl(b, g).log10()
}

/// Arithmetic mean of the dB RSS over the associated links of grid `g`;
/// `None` without any link.
pub fn mean_rss_db(
    y: &[bool],
    assoc: &BoolMatrix,
    links: &LinkTable,
    g: usize,
    params: &RadioParams,
) -> Option<f64> {
    let (n, sum) = (0..links.n_sites)
        .filter(|&b| y[b] && assoc.get(b, g))
        .fold((0usize, 0.0), |(n, s), b| {
            (n + 1, s + rss_db(links, b, g, params))
        });
    (n > 0).then(|| sum / n as f64)
}

/// Diversity constraint of MDP for grid `g` under the LoS association.
pub fn mdp_grid_ok(y: &[bool], assoc: &BoolMatrix, g: usize, min_diversity: usize) -> bool {
    (0..y.len()).filter(|&b| y[b] && assoc.get(b, g)).count() >= min_diversity
}

/// Joint diversity and average-RSS constraint of ASSGP for grid `g`.
pub fn assgp_grid_ok(
    y: &[bool],
    assoc: &BoolMatrix,
    links: &LinkTable,
    g: usize,
    params: &RadioParams,
    cfg: &BenchmarkConfig,
) -> bool {
    mdp_grid_ok(y, assoc, g, cfg.min_diversity)
        && mean_rss_db(y, assoc, links, g, params).is_some_and(|m| m >= cfg.rss_threshold)
}

/// Blockage-only outage guarantee of grid `g` with coverage `lambda`.
pub fn bgga_grid_ok(
    y: &[bool],
    lambda: &BoolMatrix,
    links: &LinkTable,
    cell: &GridCell,
    g: usize,
    gamma: f64,
) -> bool {
    if !cell.needs_guarantee() {
        return true;
    }
    crate::deploy::blockage_only_lhs(y, lambda, links, g, gamma)
        <= cell.outage_tolerance.ln() + LOG_TOL
}

fn guaranteed(grids: &[GridCell]) -> Vec<usize> {
    (0..grids.len())
        .filter(|&g| grids[g].needs_guarantee())
        .collect()
}

/// The MDP selection ILP over the site variables.
pub fn build_mdp_ilp(
    assoc: &BoolMatrix,
    grids: &[GridCell],
    costs: &[f64],
    min_diversity: usize,
) -> Result<IlpInstance> {
    let mut inst = IlpInstance::new(costs.to_vec());
    inst.var_names = (0..costs.len())
        .map(|b| Some(format!("y{}", b + 1)))
        .collect();
    for g in guaranteed(grids) {
        let row: Vec<(usize, f64)> = assoc.col_ones(g).map(|b| (b, 1.0)).collect();
        inst.add_constraint(
            Constraint::new(row, Sense::Ge, min_diversity as f64).named(format!("div_{}", g + 1)),
        )?;
    }
    Ok(inst)
}

pub fn solve_mdp(scenario: &Scenario, prep: &Prepared, cfg: &BenchmarkConfig) -> Result<Outcome> {
    cfg.validate()?;
    let grids = &scenario.grids;
    let assoc = los_association(&prep.links);
    let short: Vec<usize> = guaranteed(grids)
        .into_iter()
        .filter(|&g| assoc.col_count(g) < cfg.min_diversity)
        .collect();
    if !short.is_empty() {
        return Ok(Outcome::Infeasible(InfeasibleReport {
            scheme: Scheme::Mdp.name().into(),
            grids: short,
            reason: format!(
                "fewer than {} LoS candidates within range",
                cfg.min_diversity
            ),
        }));
    }
    let costs = site_costs(scenario);
    let inst = build_mdp_ilp(&assoc, grids, &costs, cfg.min_diversity)?;
    let sol = solve_bb(&inst)?;
    info!("MDP: {} nodes", sol.nodes_explored);
    if sol.status == Status::Infeasible {
        return Ok(Outcome::Infeasible(InfeasibleReport {
            scheme: Scheme::Mdp.name().into(),
            grids: Vec::new(),
            reason: "diversity ILP infeasible".into(),
        }));
    }
    Ok(Outcome::Deployed(make_deployment(
        Scheme::Mdp.name(),
        sol.assignment,
        &assoc,
        &prep.links,
        grids,
        &costs,
        &scenario.radio,
        Some(sol.nodes_explored),
    )))
}

/// Incremental per-grid state of a greedy planner.
trait Criterion {
    fn satisfied(&self, g: usize) -> bool;
    /// Whether `g` would be satisfied after adding `b`, and how much closer
    /// it would get otherwise.
    fn try_add(&self, b: usize, g: usize) -> (bool, f64);
    fn add(&mut self, b: usize, g: usize);
}

struct Candidate {
    site: usize,
    newly: usize,
    score: f64,
    cost: f64,
}

/// Adds one site per round until every target grid is satisfied.
///
/// The score of a candidate is the number of grids it newly satisfies,
/// divided by its cost when `per_cost` is set; ties go to more grids, then
/// lower cost, then lower index. When no candidate completes a grid, the
/// one with the largest (cost-normalized) progress is taken instead.
fn greedy(
    crit: &mut impl Criterion,
    relevant: &BoolMatrix,
    costs: &[f64],
    targets: &[usize],
    per_cost: bool,
) -> std::result::Result<Vec<bool>, Vec<usize>> {
    let n_sites = costs.len();
    let mut y = vec![false; n_sites];
    let mut open: Vec<usize> = targets
        .iter()
        .copied()
        .filter(|&g| !crit.satisfied(g))
        .collect();
    let normalize = |v: f64, cost: f64| {
        if !per_cost {
            v
        } else if cost > 0.0 {
            v / cost
        } else if v > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    };
    let better = |a: &Candidate, b: &Candidate| {
        a.score > b.score
            || (a.score == b.score
                && (a.newly > b.newly
                    || (a.newly == b.newly
                        && (a.cost < b.cost || (a.cost == b.cost && a.site < b.site)))))
    };

    while !open.is_empty() {
        let mut best: Option<Candidate> = None;
        let mut fallback: Option<Candidate> = None;
        for b in (0..n_sites).filter(|&b| !y[b]) {
            let mut newly = 0;
            let mut progress = 0.0;
            for &g in &open {
                if !relevant.get(b, g) {
                    continue;
                }
                let (done, step) = crit.try_add(b, g);
                if done {
                    newly += 1;
                }
                progress += step;
            }
            if newly > 0 {
                let c = Candidate {
                    site: b,
                    newly,
                    score: normalize(newly as f64, costs[b]),
                    cost: costs[b],
                };
                if best.as_ref().is_none_or(|o| better(&c, o)) {
                    best = Some(c);
                }
            } else if progress > 0.0 {
                let c = Candidate {
                    site: b,
                    newly: 0,
                    score: normalize(progress, costs[b]),
                    cost: costs[b],
                };
                if fallback.as_ref().is_none_or(|o| better(&c, o)) {
                    fallback = Some(c);
                }
            }
        }
        let Some(pick) = best.or(fallback) else {
            return Err(open);
        };
        debug!(
            "greedy adds site {} ({} grids newly satisfied)",
            pick.site, pick.newly
        );
        y[pick.site] = true;
        for g in 0..relevant.cols() {
            if relevant.get(pick.site, g) {
                crit.add(pick.site, g);
            }
        }
        open.retain(|&g| !crit.satisfied(g));
    }
    Ok(y)
}

struct RssCriterion<'a> {
    rss: &'a dyn Fn(usize, usize) -> f64,
    count: Vec<usize>,
    sum: Vec<f64>,
    min_diversity: usize,
    threshold: f64,
}

impl RssCriterion<'_> {
    fn ok(&self, count: usize, sum: f64) -> bool {
        count >= self.min_diversity && count > 0 && sum / count as f64 >= self.threshold
    }
}

impl Criterion for RssCriterion<'_> {
    fn satisfied(&self, g: usize) -> bool {
        self.ok(self.count[g], self.sum[g])
    }
    fn try_add(&self, b: usize, g: usize) -> (bool, f64) {
        let r = (self.rss)(b, g);
        let (c, s) = (self.count[g] + 1, self.sum[g] + r);
        if self.ok(c, s) {
            return (true, 1.0);
        }
        // Progress: a missing link, or a link that lifts the average.
        let lifts = self.count[g] > 0 && r > self.sum[g] / self.count[g] as f64;
        let step = if self.count[g] < self.min_diversity || lifts {
            1.0
        } else {
            0.0
        };
        (false, step)
    }
    fn add(&mut self, b: usize, g: usize) {
        self.count[g] += 1;
        self.sum[g] += (self.rss)(b, g);
    }
}

pub fn solve_assgp(scenario: &Scenario, prep: &Prepared, cfg: &BenchmarkConfig) -> Result<Outcome> {
    cfg.validate()?;
    let grids = &scenario.grids;
    let params = &scenario.radio;
    let links = &prep.links;
    let assoc = los_association(links);
    let costs = site_costs(scenario);
    let rss = |b: usize, g: usize| rss_db(links, b, g, params);
    let mut crit = RssCriterion {
        rss: &rss,
        count: vec![0; grids.len()],
        sum: vec![0.0; grids.len()],
        min_diversity: cfg.min_diversity,
        threshold: cfg.rss_threshold,
    };
    match greedy(&mut crit, &assoc, &costs, &guaranteed(grids), true) {
        Ok(y) => Ok(Outcome::Deployed(make_deployment(
            Scheme::Assgp.name(),
            y,
            &assoc,
            links,
            grids,
            &costs,
            params,
            None,
        ))),
        Err(open) => Ok(Outcome::Infeasible(InfeasibleReport {
            scheme: Scheme::Assgp.name().into(),
            grids: open,
            reason: "no further site improves the diversity or average-RSS constraints".into(),
        })),
    }
}

struct BlockageCriterion {
    /// `log(p + γ(1 - p))` per (site, grid), row-major.
    term: Vec<f64>,
    n_grids: usize,
    lhs: Vec<f64>,
    target: Vec<f64>,
}

impl Criterion for BlockageCriterion {
    fn satisfied(&self, g: usize) -> bool {
        self.lhs[g] <= self.target[g] + LOG_TOL
    }
    fn try_add(&self, b: usize, g: usize) -> (bool, f64) {
        let t = self.term[b * self.n_grids + g];
        let after = self.lhs[g] + t;
        if after <= self.target[g] + LOG_TOL {
            (true, 0.0)
        } else {
            (false, -t)
        }
    }
    fn add(&mut self, b: usize, g: usize) {
        self.lhs[g] += self.term[b * self.n_grids + g];
    }
}

pub fn solve_bgga(scenario: &Scenario, prep: &Prepared) -> Result<Outcome> {
    let grids = &scenario.grids;
    let params = &scenario.radio;
    let links = &prep.links;
    let lambda = &prep.coverage.lambda;
    let costs = site_costs(scenario);
    let hopeless = crate::deploy::hopeless_grids(&prep.coverage, links, grids, params.gamma);
    if !hopeless.is_empty() {
        return Ok(Outcome::Infeasible(InfeasibleReport {
            scheme: Scheme::Bgga.name().into(),
            grids: hopeless,
            reason: "blockage terms of all covering sites cannot reach the outage tolerance".into(),
        }));
    }
    let n_grids = grids.len();
    let mut term = vec![0.0; links.n_sites * n_grids];
    for b in 0..links.n_sites {
        for g in lambda
            .row(b)
            .iter()
            .enumerate()
            .filter(|(_, &on)| on)
            .map(|(g, _)| g)
        {
            term[b * n_grids + g] = log_term(links.p_blk(b, g), params.gamma);
        }
    }
    let mut crit = BlockageCriterion {
        term,
        n_grids,
        lhs: vec![0.0; n_grids],
        target: grids.iter().map(|c| c.outage_tolerance.ln()).collect(),
    };
    match greedy(&mut crit, lambda, &costs, &guaranteed(grids), false) {
        Ok(y) => Ok(Outcome::Deployed(make_deployment(
            Scheme::Bgga.name(),
            y,
            lambda,
            links,
            grids,
            &costs,
            params,
            None,
        ))),
        Err(open) => Ok(Outcome::Infeasible(InfeasibleReport {
            scheme: Scheme::Bgga.name().into(),
            grids: open,
            reason: "no further site tightens the blockage-only guarantee".into(),
        })),
    }
}

/// Runs any scheme, the proposed one included, on prepared inputs.
pub fn solve_scheme(
    scheme: Scheme,
    scenario: &Scenario,
    prep: &Prepared,
    cfg: &BenchmarkConfig,
) -> Result<Outcome> {
    match scheme {
        Scheme::Proposed => solve_prepared(scenario, prep),
        Scheme::Mdp => solve_mdp(scenario, prep, cfg),
        Scheme::Assgp => solve_assgp(scenario, prep, cfg),
        Scheme::Bgga => solve_bgga(scenario, prep),
    }
}
