//! Standalone LP relaxation and variable nulling.

use std::collections::BTreeSet;

use crate::bb::ScaledRows;
use crate::error::IlpError;
use crate::model::IlpInstance;
use crate::simplex::{self, LpProblem, LpResult};

#[derive(Debug, Clone, PartialEq)]
pub enum LpRelaxation {
    Optimal { value: f64, solution: Vec<f64> },
    Infeasible,
}

impl LpRelaxation {
    pub fn value(&self) -> Option<f64> {
        match self {
            LpRelaxation::Optimal { value, .. } => Some(*value),
            LpRelaxation::Infeasible => None,
        }
    }
}

/// LP relaxation of `inst` with per-variable boxes `bounds[j] = (lo, hi)`,
/// `0 <= lo <= hi <= 1`. Variables in `inst.fixed` are pinned regardless.
pub fn lp_relax(inst: &IlpInstance, bounds: &[(f64, f64)]) -> Result<LpRelaxation, IlpError> {
    inst.validate()?;
    if bounds.len() != inst.n_vars {
        return Err(IlpError::Malformed {
            row: usize::MAX,
            reason: format!("{} bounds for {} variables", bounds.len(), inst.n_vars),
        });
    }
    let mut lb = Vec::with_capacity(inst.n_vars);
    let mut ub = Vec::with_capacity(inst.n_vars);
    for (j, &(lo, hi)) in bounds.iter().enumerate() {
        if !(0.0 <= lo && lo <= hi && hi <= 1.0) {
            return Err(IlpError::InvalidBounds { var: j, lo, hi });
        }
        match inst.fixed.get(&j) {
            Some(&v) => {
                let v = v as u8 as f64;
                lb.push(v);
                ub.push(v);
            }
            None => {
                lb.push(lo);
                ub.push(hi);
            }
        }
    }
    let rows = ScaledRows::new(inst).rows;
    let problem = LpProblem {
        cost: inst.objective.clone(),
        rows,
        lb,
        ub,
    };
    Ok(match simplex::solve(&problem)? {
        LpResult::Optimal { value, x } => LpRelaxation::Optimal { value, solution: x },
        LpResult::Infeasible => LpRelaxation::Infeasible,
    })
}

/// Pins every variable of `zero_set` to 0 and drops it from the rows. Rows
/// left empty and satisfied are removed; variable indices are unchanged.
pub fn null_variables(inst: &IlpInstance, zero_set: &[usize]) -> Result<IlpInstance, IlpError> {
    inst.validate()?;
    let zeros: BTreeSet<usize> = zero_set.iter().copied().collect();
    let mut out = inst.clone();
    for &j in &zeros {
        if j >= inst.n_vars {
            return Err(IlpError::UnknownVariable {
                var: j,
                n_vars: inst.n_vars,
            });
        }
        if inst.fixed.get(&j) == Some(&true) {
            return Err(IlpError::ConflictingFix { var: j });
        }
        out.fixed.insert(j, false);
    }
    if zeros.is_empty() {
        return Ok(out);
    }
    out.constraints = inst
        .constraints
        .iter()
        .filter_map(|c| {
            let mut c = c.clone();
            c.coeffs.retain(|(j, _)| !zeros.contains(j));
            if c.coeffs.is_empty() && c.satisfied_by(&[]) {
                None
            } else {
                Some(c)
            }
        })
        .collect();
    Ok(out)
}
