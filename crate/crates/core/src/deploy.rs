//! Minimum-cost site selection under per-grid UE outage guarantees.
//!
//! A link `(b, g)` helps grid `g` only when site `b` is built, covers `g`, and
//! its SINR lower bound reaches the threshold. Each such event is an
//! auxiliary binary `s[b,g]` tied to the site variables by a pair of big-M
//! rows; the outage guarantee is then linear in `s`.

use log::{debug, info};
use mmwave_ilp::{solve_bb, Constraint, IlpInstance, Sense, Status};
use serde::Serialize;

use crate::coverage::{max_coverage, CoverageSolution};
use crate::error::{CoreError, Result};
use crate::geometry::GridCell;
use crate::linkmodel::{build_link_table, solve_phi, LinkTable, RadioParams};
use crate::matrix::BoolMatrix;
use crate::scenario::Scenario;

/// How the big-M constant of the SINR indicator rows is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BigMRule {
    /// `2σ² + ΣÎ + P̄/z`: large enough for both rows whatever `y` is.
    #[default]
    Widened,
    /// `2σ² + ΣÎ` without the desired-power term. Too small whenever
    /// `P̄/z` exceeds the interference-plus-noise budget; kept for comparison.
    InterferenceOnly,
}

/// Per-link data of the selection problem, one entry per covering pair of a
/// grid that carries a guarantee.
#[derive(Debug, Clone, PartialEq)]
pub struct OutageModel {
    pub pairs: Vec<(usize, usize)>,
    /// `log(p + γ(1 - p))` for each pair.
    pub log_term_blocked: Vec<f64>,
    pub p_bar: Vec<f64>,
    pub big_m: Vec<f64>,
    /// Interference bounds `(site, Î)` seen by each grid, all LoS sites.
    pub i_hat_rows: Vec<Vec<(usize, f64)>>,
    /// `log ζ` for each grid.
    pub zeta_log: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SelectionIlp {
    pub instance: IlpInstance,
    pub n_sites: usize,
    pub model: OutageModel,
    /// Variable index of `s` for each entry of `model.pairs`.
    pub s_vars: Vec<usize>,
    /// Rows that force `s = 1` whenever the link's bound clears `z`.
    pub lower_rows: Vec<usize>,
    /// Rows that allow `s = 1` only when the link's bound clears `z`, one per
    /// pair.
    pub upper_rows: Vec<usize>,
    /// Outage row of each grid that carries a guarantee.
    pub outage_rows: Vec<Option<usize>>,
}

impl SelectionIlp {
    /// The instance handed to branch-and-bound, equivalent in cost and site
    /// choice to the full system but smaller:
    ///
    /// * the rows that push `s` up are dropped: `s` costs nothing and only
    ///   ever helps the outage rows, so raising it to its forced value keeps
    ///   any solution feasible;
    /// * a link whose bound clears `z` even with every site built has
    ///   `s = y_b` at every optimum, so its outage coefficient moves onto
    ///   `y_b` and `s` is pinned to 0.
    ///
    /// Only the site part of a solution of this instance is meaningful.
    pub fn search_instance(&self) -> IlpInstance {
        let mut inst = self.instance.clone();
        let all = vec![true; inst.n_vars];
        let mut folded = vec![false; inst.n_vars];
        for (k, &(b, g)) in self.model.pairs.iter().enumerate() {
            if !self.instance.constraints[self.upper_rows[k]].satisfied_by(&all) {
                continue;
            }
            let sv = self.s_vars[k];
            let row = self.outage_rows[g].expect("pairs only exist on guaranteed grids");
            let coeffs = &mut inst.constraints[row].coeffs;
            coeffs.retain(|&(j, _)| j != sv);
            coeffs.push((b, self.model.log_term_blocked[k]));
            folded[sv] = true;
        }
        for (j, &f) in folded.iter().enumerate() {
            if f {
                inst.fixed.insert(j, false);
            }
        }
        let drop: std::collections::BTreeSet<usize> = self.lower_rows.iter().copied().collect();
        inst.constraints = inst
            .constraints
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, c)| c)
            .collect();
        inst
    }
}

/// Per-grid values of a deployment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridDiagnostics {
    pub macro_diversity: usize,
    pub outage_bound_lhs: f64,
    pub log_zeta: f64,
    /// `(site index, SINR lower bound)` for every associated link.
    pub sinr_lb: Vec<(usize, f64)>,
}

impl GridDiagnostics {
    pub fn slack(&self) -> f64 {
        self.log_zeta - self.outage_bound_lhs
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Deployment {
    pub scheme: String,
    pub y: Vec<bool>,
    pub x: BoolMatrix,
    pub cost: f64,
    pub per_grid: Vec<GridDiagnostics>,
    pub nodes_explored: Option<usize>,
}

impl Deployment {
    pub fn n_deployed(&self) -> usize {
        self.y.iter().filter(|&&v| v).count()
    }

    /// Histogram of per-grid diversity orders; index = order.
    pub fn diversity_histogram(&self) -> Vec<usize> {
        let max = self
            .per_grid
            .iter()
            .map(|d| d.macro_diversity)
            .max()
            .unwrap_or(0);
        let mut h = vec![0; max + 1];
        for d in &self.per_grid {
            h[d.macro_diversity] += 1;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfeasibleReport {
    pub scheme: String,
    /// Offending grid indices (0-based).
    pub grids: Vec<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Deployed(Deployment),
    Infeasible(InfeasibleReport),
}

impl Outcome {
    pub fn deployment(&self) -> Option<&Deployment> {
        match self {
            Outcome::Deployed(d) => Some(d),
            Outcome::Infeasible(_) => None,
        }
    }
}

/// Shared inputs of the selection stage.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub links: LinkTable,
    pub phi: f64,
    pub coverage: CoverageSolution,
}

pub fn prepare(scenario: &Scenario) -> Result<Prepared> {
    let links = build_link_table(scenario)?;
    let phi = solve_phi(scenario.radio.gamma, scenario.radio.n_rf)?;
    let coverage = max_coverage(&links, &scenario.grids, phi, &scenario.radio);
    debug!("phi = {phi}, {} covering pairs", coverage.lambda.count());
    Ok(Prepared {
        links,
        phi,
        coverage,
    })
}

pub(crate) fn log_term(p_blk: f64, gamma: f64) -> f64 {
    (p_blk + gamma * (1.0 - p_blk)).ln()
}

/// SINR lower bound of link `(b, g)` when the sites in `y` are built and
/// `assoc` is the association pattern used for the interference bounds.
pub fn sinr_lower_bound(
    y: &[bool],
    assoc: &BoolMatrix,
    links: &LinkTable,
    b: usize,
    g: usize,
    params: &RadioParams,
) -> f64 {
    links.p_bar(b, g) / (params.noise + interference_bound(y, assoc, links, g))
}

fn interference_bound(y: &[bool], assoc: &BoolMatrix, links: &LinkTable, g: usize) -> f64 {
    (0..links.n_sites)
        .filter(|&i| y[i])
        .map(|i| links.i_hat(i, g, assoc.get(i, g)))
        .sum()
}

/// Left side of grid `g`'s outage guarantee for built sites `y` and
/// association pattern `assoc` (only pairs with both set contribute).
pub fn outage_lhs(
    y: &[bool],
    assoc: &BoolMatrix,
    links: &LinkTable,
    g: usize,
    params: &RadioParams,
) -> f64 {
    let denom = params.noise + interference_bound(y, assoc, links, g);
    let gamma = params.gamma;
    (0..links.n_sites)
        .filter(|&b| y[b] && assoc.get(b, g))
        .map(|b| {
            let p = links.p_blk(b, g);
            let sinr_out = if links.p_bar(b, g) / denom < params.z {
                1.0
            } else {
                0.0
            };
            (p + gamma * (1.0 - p) + (1.0 - gamma) * (1.0 - p) * sinr_out).ln()
        })
        .sum()
}

/// Outage-guarantee left side of grid `g` for deployment `y` under the
/// coverage pattern of `coverage`.
pub fn evaluate_outage_lhs(
    y: &[bool],
    coverage: &CoverageSolution,
    links: &LinkTable,
    g: usize,
    params: &RadioParams,
) -> Result<f64> {
    if y.len() != links.n_sites {
        return Err(CoreError::InvalidScenario(format!(
            "deployment vector has {} entries for {} sites",
            y.len(),
            links.n_sites
        )));
    }
    if g >= links.n_grids {
        return Err(CoreError::UnknownGrid(g));
    }
    Ok(outage_lhs(y, &coverage.lambda, links, g, params))
}

/// Blockage-only left side: every associated link counted as meeting SINR.
pub fn blockage_only_lhs(
    y: &[bool],
    assoc: &BoolMatrix,
    links: &LinkTable,
    g: usize,
    gamma: f64,
) -> f64 {
    (0..links.n_sites)
        .filter(|&b| y[b] && assoc.get(b, g))
        .map(|b| log_term(links.p_blk(b, g), gamma))
        .sum()
}

/// Grids with a guarantee that no deployment can meet: even with every
/// covering link counted as good the blockage terms are too weak.
pub fn hopeless_grids(
    coverage: &CoverageSolution,
    links: &LinkTable,
    grids: &[GridCell],
    gamma: f64,
) -> Vec<usize> {
    let all = vec![true; links.n_sites];
    (0..grids.len())
        .filter(|&g| grids[g].needs_guarantee())
        .filter(|&g| {
            blockage_only_lhs(&all, &coverage.lambda, links, g, gamma)
                > grids[g].outage_tolerance.ln()
        })
        .collect()
}

pub fn build_selection_ilp(
    coverage: &CoverageSolution,
    links: &LinkTable,
    grids: &[GridCell],
    costs: &[f64],
    params: &RadioParams,
    rule: BigMRule,
) -> Result<SelectionIlp> {
    let n_sites = links.n_sites;
    let hopeless = hopeless_grids(coverage, links, grids, params.gamma);
    if !hopeless.is_empty() {
        return Err(CoreError::Uncoverable { grids: hopeless });
    }

    let mut inst = IlpInstance::new(costs.to_vec());
    inst.var_names = (0..n_sites).map(|b| Some(format!("y{}", b + 1))).collect();
    // Site choices drive everything else; settle them before link indicators.
    inst.priority = vec![1; n_sites];

    let mut model = OutageModel {
        pairs: Vec::new(),
        log_term_blocked: Vec::new(),
        p_bar: Vec::new(),
        big_m: Vec::new(),
        i_hat_rows: Vec::with_capacity(grids.len()),
        zeta_log: grids.iter().map(|c| c.outage_tolerance.ln()).collect(),
    };
    let mut s_vars = Vec::new();
    let mut lower_rows = Vec::new();
    let mut upper_rows = Vec::new();
    let mut outage_rows = vec![None; grids.len()];
    let sigma2 = params.noise;

    for (g, cell) in grids.iter().enumerate() {
        let i_row: Vec<(usize, f64)> = (0..n_sites)
            .map(|i| (i, links.i_hat(i, g, coverage.lambda.get(i, g))))
            .filter(|&(_, v)| v > 0.0)
            .collect();
        let i_sum: f64 = i_row.iter().map(|&(_, v)| v).sum();
        model.i_hat_rows.push(i_row.clone());
        if !cell.needs_guarantee() {
            continue;
        }
        let mut outage_row = Vec::new();
        for b in coverage.lambda.col_ones(g) {
            let p_bar = links.p_bar(b, g);
            let m = match rule {
                BigMRule::Widened => 2.0 * sigma2 + i_sum + p_bar / params.z,
                BigMRule::InterferenceOnly => 2.0 * sigma2 + i_sum,
            };
            let s = inst.add_var(0.0, Some(format!("s{}_{}", b + 1, g + 1)));
            let lt = log_term(links.p_blk(b, g), params.gamma);
            model.pairs.push((b, g));
            model.log_term_blocked.push(lt);
            model.p_bar.push(p_bar);
            model.big_m.push(m);
            s_vars.push(s);

            inst.add_constraint(
                Constraint::new(vec![(s, 1.0), (b, -1.0)], Sense::Le, 0.0).named(format!(
                    "link_{}_{}",
                    b + 1,
                    g + 1
                )),
            )?;

            // Σ Î_i y_i - (P̄/z) y_b + M s, divided through by M.
            let mut coeffs: Vec<(usize, f64)> = Vec::with_capacity(i_row.len() + 2);
            let mut own = -p_bar / params.z;
            for &(i, v) in &i_row {
                if i == b {
                    own += v;
                } else {
                    coeffs.push((i, v / m));
                }
            }
            coeffs.push((b, own / m));
            coeffs.push((s, 1.0));
            lower_rows.push(inst.constraints.len());
            inst.add_constraint(
                Constraint::new(coeffs.clone(), Sense::Ge, -sigma2 / m).named(format!(
                    "sinr_lo_{}_{}",
                    b + 1,
                    g + 1
                )),
            )?;
            // Non-strict on purpose: a link exactly at z counts as good, and a
            // strict margin here would leave bounds just above z with no
            // admissible value of s at all.
            upper_rows.push(inst.constraints.len());
            inst.add_constraint(
                Constraint::new(coeffs, Sense::Le, (m - sigma2) / m).named(format!(
                    "sinr_hi_{}_{}",
                    b + 1,
                    g + 1
                )),
            )?;
            outage_row.push((s, lt));
        }
        outage_rows[g] = Some(inst.constraints.len());
        inst.add_constraint(
            Constraint::new(outage_row, Sense::Le, cell.outage_tolerance.ln())
                .named(format!("outage_{}", g + 1)),
        )?;
    }

    Ok(SelectionIlp {
        instance: inst,
        n_sites,
        model,
        s_vars,
        lower_rows,
        upper_rows,
        outage_rows,
    })
}

/// Assembles a deployment record for built sites `y` and association
/// pattern `assoc` (masked by `y`).
#[allow(clippy::too_many_arguments)]
pub fn make_deployment(
    scheme: &str,
    y: Vec<bool>,
    assoc: &BoolMatrix,
    links: &LinkTable,
    grids: &[GridCell],
    costs: &[f64],
    params: &RadioParams,
    nodes_explored: Option<usize>,
) -> Deployment {
    let x = assoc.masked_rows(&y);
    let per_grid = (0..grids.len())
        .map(|g| GridDiagnostics {
            macro_diversity: x.col_count(g),
            outage_bound_lhs: outage_lhs(&y, &x, links, g, params),
            log_zeta: grids[g].outage_tolerance.ln(),
            sinr_lb: x
                .col_ones(g)
                .map(|b| (b, sinr_lower_bound(&y, &x, links, b, g, params)))
                .collect(),
        })
        .collect();
    let cost = costs
        .iter()
        .zip(&y)
        .filter(|(_, &on)| on)
        .map(|(c, _)| c)
        .sum();
    Deployment {
        scheme: scheme.to_string(),
        y,
        x,
        cost,
        per_grid,
        nodes_explored,
    }
}

pub fn site_costs(scenario: &Scenario) -> Vec<f64> {
    scenario.sites.iter().map(|s| s.cost).collect()
}

/// Solves the selection stage on prepared inputs.
pub fn solve_prepared(scenario: &Scenario, prep: &Prepared) -> Result<Outcome> {
    let costs = site_costs(scenario);
    let grids = &scenario.grids;
    let params = &scenario.radio;
    let ilp = match build_selection_ilp(
        &prep.coverage,
        &prep.links,
        grids,
        &costs,
        params,
        BigMRule::Widened,
    ) {
        Ok(ilp) => ilp,
        Err(CoreError::Uncoverable { grids }) => {
            return Ok(Outcome::Infeasible(InfeasibleReport {
                scheme: "proposed".into(),
                grids,
                reason: "no covering candidate set can meet the outage tolerance".into(),
            }))
        }
        Err(e) => return Err(e),
    };
    info!(
        "selection ILP: {} variables, {} rows",
        ilp.instance.n_vars,
        ilp.instance.constraints.len()
    );
    let sol = solve_bb(&ilp.search_instance())?;
    info!("branch-and-bound explored {} nodes", sol.nodes_explored);
    if sol.status == Status::Infeasible {
        let all = vec![true; scenario.n_sites()];
        let violated: Vec<usize> = (0..grids.len())
            .filter(|&g| grids[g].needs_guarantee())
            .filter(|&g| {
                outage_lhs(&all, &prep.coverage.lambda, &prep.links, g, params)
                    > grids[g].outage_tolerance.ln() + 1e-9
            })
            .collect();
        return Ok(Outcome::Infeasible(InfeasibleReport {
            scheme: "proposed".into(),
            grids: violated,
            reason: "no deployment meets every outage guarantee; listed grids fail even with all sites built".into(),
        }));
    }
    let y = sol.assignment[..scenario.n_sites()].to_vec();
    Ok(Outcome::Deployed(make_deployment(
        "proposed",
        y,
        &prep.coverage.lambda,
        &prep.links,
        grids,
        &costs,
        params,
        Some(sol.nodes_explored),
    )))
}

/// Full pipeline: link table, load ceiling, coverage, selection ILP.
pub fn solve_deployment(scenario: &Scenario) -> Result<Outcome> {
    let prep = prepare(scenario)?;
    solve_prepared(scenario, &prep)
}
