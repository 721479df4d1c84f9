//! Per-site maximum coverage under the expected-load ceiling.
//!
//! Each site serves the LoS grids nearest to it first. The largest radius
//! whose expected unblocked load stays within `phi` is found by bisection on
//! `[0, r_max]`; a final pass admits the equal-distance grid groups that lie
//! between the last feasible radius and the first infeasible one, so the
//! returned disc is exactly maximal rather than maximal up to `eps`.

use rayon::prelude::*;

use crate::geometry::GridCell;
use crate::linkmodel::{LinkTable, RadioParams};
use crate::matrix::BoolMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct CoverageSolution {
    pub r_max_per_site: Vec<f64>,
    pub lambda: BoolMatrix,
    pub mean_load_per_site: Vec<f64>,
    /// Bisection iterations spent on each site.
    pub iterations: Vec<u32>,
    /// Sites with no usable grid at all; they report `r_max` and cover
    /// nothing.
    pub no_los_sites: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SiteCoverage {
    pub r_max: f64,
    /// Covered grids in service order.
    pub grids: Vec<usize>,
    pub load: f64,
    pub iterations: u32,
}

/// Usable grids of site `b` by ascending distance, ties by ascending index.
pub fn sorted_feasible_grids(links: &LinkTable, b: usize) -> Vec<usize> {
    let mut out: Vec<usize> = (0..links.n_grids).filter(|&g| links.usable(b, g)).collect();
    out.sort_by(|&g1, &g2| links.r(b, g1).total_cmp(&links.r(b, g2)).then(g1.cmp(&g2)));
    out
}

struct Ordered {
    grids: Vec<usize>,
    dist: Vec<f64>,
    /// `cum[k]` is the load of the first `k` grids.
    cum: Vec<f64>,
}

fn ordered(links: &LinkTable, grids: &[GridCell], b: usize) -> Ordered {
    let order = sorted_feasible_grids(links, b);
    let dist = order.iter().map(|&g| links.r(b, g)).collect();
    let mut cum = Vec::with_capacity(order.len() + 1);
    cum.push(0.0);
    let mut acc = 0.0;
    for &g in &order {
        acc += grids[g].mean_ues() * (1.0 - links.p_blk(b, g));
        cum.push(acc);
    }
    Ordered {
        grids: order,
        dist,
        cum,
    }
}

impl Ordered {
    fn within(&self, r: f64) -> usize {
        self.dist.partition_point(|&d| d <= r)
    }

    /// End of the equal-distance group starting at `k`.
    fn group_end(&self, k: usize) -> usize {
        let d = self.dist[k];
        k + self.dist[k..].partition_point(|&x| x == d)
    }
}

/// Bisection for a single site.
pub fn site_coverage(
    links: &LinkTable,
    grids: &[GridCell],
    b: usize,
    phi: f64,
    params: &RadioParams,
) -> SiteCoverage {
    let ord = ordered(links, grids, b);
    let mut lb = 0.0;
    let mut ub = params.r_max;
    let mut iterations = 0;
    while ub - lb > params.eps_bisect {
        let md = 0.5 * (lb + ub);
        if ord.cum[ord.within(md)] <= phi {
            lb = md;
        } else {
            ub = md;
        }
        iterations += 1;
    }
    if ord.grids.is_empty() {
        return SiteCoverage {
            r_max: params.r_max,
            grids: Vec::new(),
            load: 0.0,
            iterations,
        };
    }
    let base = ord.within(lb);
    let mut k = base;
    let limit = ub.min(params.r_max);
    while k < ord.grids.len() && ord.dist[k] <= limit {
        let end = ord.group_end(k);
        if ord.cum[end] > phi {
            break;
        }
        k = end;
    }
    let r_max = if k > base {
        lb.max(ord.dist[k - 1])
    } else {
        lb
    };
    SiteCoverage {
        r_max,
        grids: ord.grids[..k].to_vec(),
        load: ord.cum[k],
        iterations,
    }
}

/// Direct scan: admit whole equal-distance groups in order while the load
/// stays within `phi`.
pub fn site_prefix_scan(
    links: &LinkTable,
    grids: &[GridCell],
    b: usize,
    phi: f64,
    params: &RadioParams,
) -> SiteCoverage {
    let ord = ordered(links, grids, b);
    let mut k = 0;
    while k < ord.grids.len() {
        let end = ord.group_end(k);
        if ord.cum[end] > phi {
            break;
        }
        k = end;
    }
    let r_max = if k == ord.grids.len() {
        params.r_max
    } else if k > 0 {
        ord.dist[k - 1]
    } else {
        0.0
    };
    SiteCoverage {
        r_max,
        grids: ord.grids[..k].to_vec(),
        load: ord.cum[k],
        iterations: 0,
    }
}

fn assemble(n_grids: usize, per_site: Vec<SiteCoverage>, links: &LinkTable) -> CoverageSolution {
    let mut lambda = BoolMatrix::new(per_site.len(), n_grids);
    let mut no_los_sites = Vec::new();
    for (b, s) in per_site.iter().enumerate() {
        for &g in &s.grids {
            lambda.set(b, g, true);
        }
        if (0..n_grids).all(|g| !links.usable(b, g)) {
            no_los_sites.push(b);
        }
    }
    CoverageSolution {
        r_max_per_site: per_site.iter().map(|s| s.r_max).collect(),
        mean_load_per_site: per_site.iter().map(|s| s.load).collect(),
        iterations: per_site.iter().map(|s| s.iterations).collect(),
        lambda,
        no_los_sites,
    }
}

/// Coverage of every site by bisection.
pub fn max_coverage(
    links: &LinkTable,
    grids: &[GridCell],
    phi: f64,
    params: &RadioParams,
) -> CoverageSolution {
    let per_site = (0..links.n_sites)
        .into_par_iter()
        .map(|b| site_coverage(links, grids, b, phi, params))
        .collect();
    assemble(grids.len(), per_site, links)
}

/// Coverage of every site by the direct scan; identical coverage sets.
pub fn prefix_scan_coverage(
    links: &LinkTable,
    grids: &[GridCell],
    phi: f64,
    params: &RadioParams,
) -> CoverageSolution {
    let per_site = (0..links.n_sites)
        .into_par_iter()
        .map(|b| site_prefix_scan(links, grids, b, phi, params))
        .collect();
    assemble(grids.len(), per_site, links)
}
