//! Branch-and-bound over binary variables.
//!
//! Every node runs activity-based bound propagation on the scaled rows, then
//! solves the LP relaxation over the variables that are still free. Search is
//! best-bound with depth-first plunging: after branching, the `x = 1` child is
//! processed immediately and the `x = 0` child is queued under the parent's
//! bound. Branching picks the most fractional free variable, lowest index on
//! ties.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use log::{debug, trace};

use crate::error::IlpError;
use crate::model::{IlpInstance, IlpSolution, Status, FEAS_TOL};
use crate::simplex::{Dictionary, LpProblem, LpResult};

const INT_TOL: f64 = 1e-6;
/// Nodes whose bound is within this of the incumbent are pruned.
const PRUNE_TOL: f64 = 1e-9;
/// Largest free-variable count the debug-build bound audit will enumerate.
const AUDIT_MAX_FREE: usize = 10;
/// Warm starts chained before a node is re-solved from scratch.
const MAX_WARM_CHAIN: usize = 32;

const FREE: i8 = -1;

/// Rows in `a·x <= b` form, divided by their largest coefficient magnitude.
pub(crate) struct ScaledRows {
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
    pub by_var: Vec<Vec<usize>>,
}

impl ScaledRows {
    pub fn new(inst: &IlpInstance) -> Self {
        let mut rows = Vec::with_capacity(inst.constraints.len());
        let mut by_var = vec![Vec::new(); inst.n_vars];
        for (i, c) in inst.constraints.iter().enumerate() {
            let (coeffs, rhs) = c.as_le();
            let s = c.scale();
            let coeffs: Vec<(usize, f64)> = coeffs.into_iter().map(|(j, a)| (j, a / s)).collect();
            for &(j, _) in &coeffs {
                by_var[j].push(i);
            }
            rows.push((coeffs, rhs / s));
        }
        ScaledRows { rows, by_var }
    }
}

/// Fixes binaries implied by row activity bounds. Returns false when some
/// row cannot be satisfied under the domain.
fn propagate(rows: &ScaledRows, dom: &mut [i8]) -> bool {
    let mut queued = vec![true; rows.rows.len()];
    let mut work: Vec<usize> = (0..rows.rows.len()).rev().collect();
    while let Some(r) = work.pop() {
        queued[r] = false;
        let (coeffs, rhs) = &rows.rows[r];
        let mut min_act = 0.0;
        for &(j, a) in coeffs {
            min_act += match dom[j] {
                1 => a,
                0 => 0.0,
                _ => a.min(0.0),
            };
        }
        if min_act > rhs + FEAS_TOL {
            return false;
        }
        for &(j, a) in coeffs {
            if dom[j] != FREE {
                continue;
            }
            let fix = if a > 0.0 && min_act + a > rhs + FEAS_TOL {
                0
            } else if a < 0.0 && min_act - a > rhs + FEAS_TOL {
                1
            } else {
                continue;
            };
            dom[j] = fix;
            for &r2 in &rows.by_var[j] {
                if !queued[r2] {
                    queued[r2] = true;
                    work.push(r2);
                }
            }
        }
    }
    true
}

pub(crate) struct NodeLp {
    pub bound: f64,
    pub x: Vec<f64>,
}

/// A solved node dictionary over the variables that were free when it was
/// built; children re-solve it after tightening bounds.
pub(crate) struct Warm {
    dict: Dictionary,
    /// Dictionary column to instance variable.
    free: Vec<usize>,
    chain: usize,
}

/// Solves the relaxation over the free variables of `dom`, substituting fixed
/// ones. `None` means the relaxation is infeasible.
pub(crate) fn node_relaxation(
    inst: &IlpInstance,
    rows: &ScaledRows,
    dom: &[i8],
) -> Result<Option<(NodeLp, Warm)>, IlpError> {
    let n = inst.n_vars;
    let mut compact = vec![usize::MAX; n];
    let mut free = Vec::new();
    for j in 0..n {
        if dom[j] == FREE {
            compact[j] = free.len();
            free.push(j);
        }
    }
    let mut lp_rows = Vec::new();
    for (coeffs, rhs) in &rows.rows {
        let mut fixed_act = 0.0;
        let mut max_free = 0.0;
        let mut row = Vec::new();
        for &(j, a) in coeffs {
            match dom[j] {
                1 => fixed_act += a,
                0 => {}
                _ => {
                    row.push((compact[j], a));
                    if a > 0.0 {
                        max_free += a;
                    }
                }
            }
        }
        let rhs = rhs - fixed_act;
        if row.is_empty() {
            if rhs < -FEAS_TOL {
                return Ok(None);
            }
            continue;
        }
        if max_free <= rhs {
            continue;
        }
        lp_rows.push((row, rhs));
    }
    let problem = LpProblem {
        cost: free.iter().map(|&j| inst.objective[j]).collect(),
        rows: lp_rows,
        lb: vec![0.0; free.len()],
        ub: vec![1.0; free.len()],
    };
    let warm = Warm {
        dict: Dictionary::new(&problem)?,
        free,
        chain: 0,
    };
    resolve(inst, dom, warm)
}

/// Tightens a parent's dictionary to the domain `dom` and re-optimizes.
fn resolve(
    inst: &IlpInstance,
    dom: &[i8],
    mut warm: Warm,
) -> Result<Option<(NodeLp, Warm)>, IlpError> {
    for (k, &j) in warm.free.iter().enumerate() {
        if dom[j] != FREE && !warm.dict.is_fixed(k) {
            let v = dom[j] as f64;
            warm.dict.set_bounds(k, v, v);
        }
    }
    match warm.dict.optimize()? {
        LpResult::Infeasible => Ok(None),
        LpResult::Optimal { value, x: xf } => {
            let mut x: Vec<f64> = dom
                .iter()
                .map(|&d| if d == 1 { 1.0 } else { 0.0 })
                .collect();
            let mut bound = value;
            for (k, &j) in warm.free.iter().enumerate() {
                x[j] = xf[k];
            }
            let in_dict: Vec<bool> = {
                let mut m = vec![false; dom.len()];
                for &j in &warm.free {
                    m[j] = true;
                }
                m
            };
            for j in 0..dom.len() {
                if dom[j] == 1 && !in_dict[j] {
                    bound += inst.objective[j];
                }
            }
            Ok(Some((NodeLp { bound, x }, warm)))
        }
    }
}

struct Node {
    dom: Vec<i8>,
    parent_bound: f64,
    seq: usize,
    warm: Option<Warm>,
}

/// Spacing of the objective values an integer point can take, when every
/// cost is an integer multiple of a common unit.
fn objective_unit(objective: &[f64]) -> Option<f64> {
    let costs: Vec<f64> = objective
        .iter()
        .map(|c| c.abs())
        .filter(|&c| c > 0.0)
        .collect();
    let largest = costs.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return None;
    }
    let tol = 1e-9 * largest;
    let mut unit = costs[0];
    for &c in &costs[1..] {
        let (mut a, mut b) = (unit.max(c), unit.min(c));
        while b > tol {
            let r = a % b;
            a = b;
            b = r;
        }
        unit = a;
    }
    if unit < 1e-6 * largest {
        return None;
    }
    let integral = costs.iter().all(|&c| {
        let q = c / unit;
        (q - q.round()).abs() <= 1e-9
    });
    integral.then_some(unit)
}

struct Queued(Node);

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Queued {}
impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Queued {
    // BinaryHeap is a max-heap; smallest bound, then oldest node, pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .parent_bound
            .total_cmp(&self.0.parent_bound)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Exact minimization of a binary ILP.
pub fn solve_bb(inst: &IlpInstance) -> Result<IlpSolution, IlpError> {
    inst.validate()?;
    let n = inst.n_vars;
    let rows = ScaledRows::new(inst);

    let mut root = vec![FREE; n];
    for (&j, &v) in &inst.fixed {
        root[j] = v as i8;
    }

    let unit = objective_unit(&inst.objective);
    // A bound rounded up to the objective lattice.
    let dominated = |bound: f64, best: f64| {
        let bound = match unit {
            Some(u) => (bound / u - 1e-6).ceil() * u,
            None => bound,
        };
        bound >= best - PRUNE_TOL
    };

    let mut incumbent: Option<(Vec<bool>, f64)> = None;
    let mut nodes = 0usize;
    let mut seq = 0usize;
    let mut heap: BinaryHeap<Queued> = BinaryHeap::new();
    let mut next = Some(Node {
        dom: root,
        parent_bound: f64::NEG_INFINITY,
        seq,
        warm: None,
    });

    loop {
        let mut node = match next.take() {
            Some(node) => node,
            None => match heap.pop() {
                Some(Queued(node)) => node,
                None => break,
            },
        };
        if let Some((_, best)) = &incumbent {
            if dominated(node.parent_bound, *best) {
                continue;
            }
        }
        nodes += 1;

        if !propagate(&rows, &mut node.dom) {
            trace!("node {} infeasible by propagation", node.seq);
            continue;
        }
        let solved = match node.warm.take() {
            Some(w)
                if w.chain < MAX_WARM_CHAIN
                    && 2 * free_count(&node.dom, &w.free) >= w.dict.n_structural() =>
            {
                let chain = w.chain + 1;
                resolve(inst, &node.dom, w)?.map(|(lp, mut w)| {
                    w.chain = chain;
                    (lp, w)
                })
            }
            _ => node_relaxation(inst, &rows, &node.dom)?,
        };
        let Some((lp, warm)) = solved else {
            trace!("node {} LP infeasible", node.seq);
            continue;
        };
        if cfg!(debug_assertions) {
            audit_bound(inst, &node.dom, lp.bound);
        }
        if let Some((_, best)) = &incumbent {
            if dominated(lp.bound, *best) {
                continue;
            }
        }

        // Most fractional within the highest priority class that has a
        // fractional variable; lowest index on ties.
        let mut branch_var: Option<(usize, u32, f64)> = None;
        let mut first_free = None;
        for j in 0..n {
            if node.dom[j] != FREE {
                continue;
            }
            first_free.get_or_insert(j);
            let frac = lp.x[j].min(1.0 - lp.x[j]);
            if frac <= INT_TOL {
                continue;
            }
            let prio = inst.priority[j];
            let better = match branch_var {
                None => true,
                Some((_, p, f)) => prio > p || (prio == p && frac > f + 1e-12),
            };
            if better {
                branch_var = Some((j, prio, frac));
            }
        }

        let branch_on = match branch_var {
            Some((j, _, _)) => Some(j),
            None => {
                let assignment: Vec<bool> = lp.x.iter().map(|&v| v > 0.5).collect();
                if inst.is_feasible(&assignment) {
                    let value = inst.objective_value(&assignment);
                    if incumbent
                        .as_ref()
                        .is_none_or(|(_, best)| value < best - PRUNE_TOL)
                    {
                        debug!("incumbent {value} at node {nodes}");
                        incumbent = Some((assignment, value));
                    }
                    None
                } else {
                    // Integral LP point that fails exact verification: keep splitting.
                    first_free
                }
            }
        };

        if let Some(j) = branch_on {
            let mut up = node.dom.clone();
            up[j] = 1;
            let mut down = node.dom;
            down[j] = 0;
            seq += 1;
            heap.push(Queued(Node {
                dom: down,
                parent_bound: lp.bound,
                seq,
                warm: None,
            }));
            seq += 1;
            next = Some(Node {
                dom: up,
                parent_bound: lp.bound,
                seq,
                warm: Some(warm),
            });
        }
    }

    debug!("branch-and-bound finished after {nodes} nodes");
    Ok(match incumbent {
        Some((assignment, objective_value)) => IlpSolution {
            assignment,
            objective_value,
            status: Status::Optimal,
            nodes_explored: nodes,
        },
        None => IlpSolution {
            assignment: vec![false; n],
            objective_value: f64::INFINITY,
            status: Status::Infeasible,
            nodes_explored: nodes,
        },
    })
}

fn free_count(dom: &[i8], cols: &[usize]) -> usize {
    cols.iter().filter(|&&j| dom[j] == FREE).count()
}

/// Debug-build check that the node bound never exceeds the best integer
/// completion, by enumeration when few variables remain free.
fn audit_bound(inst: &IlpInstance, dom: &[i8], bound: f64) {
    let free: Vec<usize> = (0..dom.len()).filter(|&j| dom[j] == FREE).collect();
    if free.len() > AUDIT_MAX_FREE {
        return;
    }
    let mut assignment: Vec<bool> = dom.iter().map(|&d| d == 1).collect();
    let mut best = f64::INFINITY;
    for mask in 0u32..(1 << free.len()) {
        for (k, &j) in free.iter().enumerate() {
            assignment[j] = mask >> k & 1 == 1;
        }
        if inst.constraints.iter().all(|c| c.satisfied_by(&assignment)) {
            best = best.min(inst.objective_value(&assignment));
        }
    }
    debug_assert!(
        bound <= best + 1e-6,
        "LP bound {bound} exceeds best integer completion {best}"
    );
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Constraint, Sense};

    #[test]
    fn propagation_nulls_children_of_a_zero_parent() {
        // s_k <= y for k = 1..3
        let mut inst = IlpInstance::new(vec![1.0, 0.0, 0.0, 0.0]);
        for k in 1..4 {
            inst.add_constraint(Constraint::new(vec![(k, 1.0), (0, -1.0)], Sense::Le, 0.0))
                .unwrap();
        }
        let rows = ScaledRows::new(&inst);
        let mut dom = vec![0, FREE, FREE, FREE];
        assert!(propagate(&rows, &mut dom));
        assert_eq!(dom, vec![0, 0, 0, 0]);
    }

    #[test]
    fn propagation_detects_conflict() {
        let mut inst = IlpInstance::new(vec![1.0, 1.0]);
        inst.add_constraint(Constraint::new(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 2.0))
            .unwrap();
        let rows = ScaledRows::new(&inst);
        let mut dom = vec![0, FREE];
        assert!(!propagate(&rows, &mut dom));
        let mut dom = vec![FREE, FREE];
        assert!(propagate(&rows, &mut dom));
        assert_eq!(dom, vec![1, 1]);
    }

    #[test]
    fn objective_lattice() {
        let u = objective_unit(&[0.2, 0.4, 0.6000000000000001, 1.0, 0.0]).unwrap();
        assert!((u - 0.2).abs() < 1e-12);
        assert_eq!(objective_unit(&[3.0, -6.0, 9.0]), Some(3.0));
        assert_eq!(objective_unit(&[0.0, 0.0]), None);
        assert_eq!(objective_unit(&[1.0, std::f64::consts::PI]), None);
    }
}
