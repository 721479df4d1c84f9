//! The plan.json document shared by `optimize`, `benchmark` and `evaluate`.
//!
//! Sites and grids appear by their 1-based ids everywhere in the file.

use anyhow::{bail, Context, Result};
use mmwave_core::deploy::{Deployment, InfeasibleReport, Outcome};
use mmwave_core::{BoolMatrix, Scenario};
use serde::{Deserialize, Serialize};

use crate::manifest::RunManifest;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub grid: usize,
    pub macro_diversity: usize,
    pub outage_bound_lhs: f64,
    pub log_zeta: f64,
    /// `log ζ` minus the bound; negative means the guarantee is missed.
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Number of grids per macro-diversity order (index = order).
    pub macro_diversity_histogram: Vec<usize>,
    pub grids: Vec<GridRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub manifest: RunManifest,
    /// `"deployed"` or `"infeasible"`.
    pub status: String,
    pub scheme: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deployed_sites: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<Vec<bool>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub site_costs: Option<Vec<f64>>,
    /// Covering site ids of each grid, in grid order.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nodes_explored: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<Diagnostics>,
    /// Offending grid ids of an infeasible plan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grids: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl PlanFile {
    pub fn from_outcome(manifest: RunManifest, outcome: &Outcome, scenario: &Scenario) -> Self {
        match outcome {
            Outcome::Deployed(d) => Self::deployed(manifest, d, scenario),
            Outcome::Infeasible(r) => Self::infeasible(manifest, r, scenario),
        }
    }

    fn deployed(manifest: RunManifest, d: &Deployment, scenario: &Scenario) -> Self {
        let site_id = |b: usize| scenario.sites[b].id;
        let grids = d
            .per_grid
            .iter()
            .enumerate()
            .map(|(g, diag)| GridRecord {
                grid: scenario.grids[g].id,
                macro_diversity: diag.macro_diversity,
                outage_bound_lhs: diag.outage_bound_lhs,
                log_zeta: diag.log_zeta,
                slack: diag.slack(),
            })
            .collect();
        PlanFile {
            manifest,
            status: "deployed".into(),
            scheme: d.scheme.clone(),
            cost: Some(d.cost),
            deployed_sites: Some((0..d.y.len()).filter(|&b| d.y[b]).map(site_id).collect()),
            y: Some(d.y.clone()),
            site_costs: Some(scenario.sites.iter().map(|s| s.cost).collect()),
            x: Some(
                (0..d.x.cols())
                    .map(|g| d.x.col_ones(g).map(site_id).collect())
                    .collect(),
            ),
            nodes_explored: d.nodes_explored,
            diagnostics: Some(Diagnostics {
                macro_diversity_histogram: d.diversity_histogram(),
                grids,
            }),
            grids: None,
            reason: None,
        }
    }

    fn infeasible(manifest: RunManifest, r: &InfeasibleReport, scenario: &Scenario) -> Self {
        PlanFile {
            manifest,
            status: "infeasible".into(),
            scheme: r.scheme.clone(),
            cost: None,
            deployed_sites: None,
            y: None,
            site_costs: None,
            x: None,
            nodes_explored: None,
            diagnostics: None,
            grids: Some(r.grids.iter().map(|&g| scenario.grids[g].id).collect()),
            reason: Some(r.reason.clone()),
        }
    }

    pub fn is_infeasible(&self) -> bool {
        self.status == "infeasible"
    }

    /// Site vector and association matrix of a deployed plan, checked
    /// against the scenario's dimensions.
    pub fn decisions(&self, scenario: &Scenario) -> Result<(Vec<bool>, BoolMatrix)> {
        if self.is_infeasible() {
            bail!("plan is infeasible; there is no deployment to evaluate");
        }
        let y = self.y.clone().context("plan has no 'y' field")?;
        let x = self.x.as_ref().context("plan has no 'x' field")?;
        let (nb, ng) = (scenario.n_sites(), scenario.n_grids());
        if y.len() != nb {
            bail!("plan has {} sites but the scenario has {nb}", y.len());
        }
        if x.len() != ng {
            bail!("plan has {} grids but the scenario has {ng}", x.len());
        }
        let mut assoc = BoolMatrix::new(nb, ng);
        for (g, ids) in x.iter().enumerate() {
            for &id in ids {
                if id == 0 || id > nb {
                    bail!("grid {} lists unknown site id {id}", g + 1);
                }
                if !y[id - 1] {
                    bail!(
                        "grid {} is associated with site {id}, which is not deployed",
                        g + 1
                    );
                }
                assoc.set(id - 1, g, true);
            }
        }
        Ok((y, assoc))
    }
}
