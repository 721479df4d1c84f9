//! Modeling layer: binary variables, linear rows and partial assignments.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::IlpError;

/// Relative slack used to close a strict `<` row: `a·x < b` becomes
/// `a·x <= b - STRICT_REL_EPS * max(|b|, 1)`.
pub const STRICT_REL_EPS: f64 = 1e-6;

/// Absolute feasibility tolerance, applied to rows after scaling by their
/// largest coefficient magnitude.
pub const FEAS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sense {
    Le,
    Ge,
    /// Strict `<`, closed with a declared epsilon (see [`Constraint::strict_epsilon`]).
    Lt,
}

impl fmt::Display for Sense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Lt => "<",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    /// Sparse coefficients `(var, coef)`; indices are unique.
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
    pub name: Option<String>,
}

impl Constraint {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Constraint {
            coeffs,
            sense,
            rhs,
            name: None,
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    /// Margin a strict row must hold by. Zero for non-strict rows.
    pub fn strict_epsilon(&self) -> f64 {
        match self.sense {
            Sense::Lt => STRICT_REL_EPS * self.rhs.abs().max(1.0),
            _ => 0.0,
        }
    }

    pub fn activity(&self, values: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * values[j]).sum()
    }

    /// Row in `a·x <= b` form, strictness folded into the right-hand side.
    pub(crate) fn as_le(&self) -> (Vec<(usize, f64)>, f64) {
        match self.sense {
            Sense::Le => (self.coeffs.clone(), self.rhs),
            Sense::Lt => (self.coeffs.clone(), self.rhs - self.strict_epsilon()),
            Sense::Ge => (
                self.coeffs.iter().map(|&(j, a)| (j, -a)).collect(),
                -self.rhs,
            ),
        }
    }

    /// Largest coefficient magnitude, at least 1e-300 so it can divide.
    pub(crate) fn scale(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|&(_, a)| a.abs())
            .fold(0.0, f64::max)
            .max(1e-300)
    }

    /// True when the 0/1 assignment satisfies the row: non-strict rows within
    /// [`FEAS_TOL`] (relative to the row scale), strict rows with their full
    /// epsilon margin.
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        let act: f64 = self
            .coeffs
            .iter()
            .filter(|&&(j, _)| assignment[j])
            .map(|&(_, a)| a)
            .sum();
        let (act, rhs) = match self.sense {
            Sense::Ge => (-act, -self.rhs),
            Sense::Le => (act, self.rhs),
            Sense::Lt => (act, self.rhs - self.strict_epsilon()),
        };
        let tol = FEAS_TOL * self.scale().max(1.0);
        act <= rhs + tol
    }
}

/// A binary linear program, always minimized.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IlpInstance {
    pub n_vars: usize,
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    /// Partial assignment: variables pinned to 0 or 1.
    pub fixed: BTreeMap<usize, bool>,
    pub var_names: Vec<Option<String>>,
    /// Branching priority per variable; higher classes are branched on
    /// first. All zero by default.
    pub priority: Vec<u32>,
}

impl IlpInstance {
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        IlpInstance {
            n_vars: n,
            objective,
            constraints: Vec::new(),
            fixed: BTreeMap::new(),
            var_names: vec![None; n],
            priority: vec![0; n],
        }
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, cost: f64, name: Option<String>) -> usize {
        self.objective.push(cost);
        self.var_names.push(name);
        self.priority.push(0);
        self.n_vars += 1;
        self.n_vars - 1
    }

    pub fn add_constraint(&mut self, row: Constraint) -> Result<usize, IlpError> {
        self.check_row(&row, self.constraints.len())?;
        self.constraints.push(row);
        Ok(self.constraints.len() - 1)
    }

    pub fn fix(&mut self, var: usize, value: bool) -> Result<(), IlpError> {
        if var >= self.n_vars {
            return Err(IlpError::UnknownVariable {
                var,
                n_vars: self.n_vars,
            });
        }
        self.fixed.insert(var, value);
        Ok(())
    }

    pub fn set_priority(&mut self, var: usize, priority: u32) -> Result<(), IlpError> {
        if var >= self.n_vars {
            return Err(IlpError::UnknownVariable {
                var,
                n_vars: self.n_vars,
            });
        }
        self.priority[var] = priority;
        Ok(())
    }

    pub fn name_of(&self, var: usize) -> String {
        self.var_names
            .get(var)
            .and_then(|n| n.clone())
            .unwrap_or_else(|| format!("x{var}"))
    }

    fn check_row(&self, row: &Constraint, index: usize) -> Result<(), IlpError> {
        if !row.rhs.is_finite() {
            return Err(IlpError::Malformed {
                row: index,
                reason: "non-finite right-hand side".into(),
            });
        }
        let mut seen = std::collections::HashSet::with_capacity(row.coeffs.len());
        for &(j, a) in &row.coeffs {
            if j >= self.n_vars {
                return Err(IlpError::Malformed {
                    row: index,
                    reason: format!("variable {j} out of range (n_vars = {})", self.n_vars),
                });
            }
            if !a.is_finite() {
                return Err(IlpError::Malformed {
                    row: index,
                    reason: format!("non-finite coefficient on variable {j}"),
                });
            }
            if !seen.insert(j) {
                return Err(IlpError::Malformed {
                    row: index,
                    reason: format!("variable {j} appears twice"),
                });
            }
        }
        Ok(())
    }

    /// Full structural validation: objective length, row indices, fixings.
    pub fn validate(&self) -> Result<(), IlpError> {
        if self.objective.len() != self.n_vars {
            return Err(IlpError::Malformed {
                row: usize::MAX,
                reason: format!(
                    "objective has {} entries for {} variables",
                    self.objective.len(),
                    self.n_vars
                ),
            });
        }
        if self.priority.len() != self.n_vars || self.var_names.len() != self.n_vars {
            return Err(IlpError::Malformed {
                row: usize::MAX,
                reason: format!(
                    "{} priorities and {} names for {} variables",
                    self.priority.len(),
                    self.var_names.len(),
                    self.n_vars
                ),
            });
        }
        if let Some((j, _)) = self
            .objective
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite())
        {
            return Err(IlpError::Malformed {
                row: usize::MAX,
                reason: format!("non-finite objective coefficient on variable {j}"),
            });
        }
        for (i, row) in self.constraints.iter().enumerate() {
            self.check_row(row, i)?;
        }
        if let Some((&var, _)) = self.fixed.iter().find(|(&v, _)| v >= self.n_vars) {
            return Err(IlpError::UnknownVariable {
                var,
                n_vars: self.n_vars,
            });
        }
        Ok(())
    }

    pub fn objective_value(&self, assignment: &[bool]) -> f64 {
        self.objective
            .iter()
            .zip(assignment)
            .filter(|(_, &on)| on)
            .map(|(c, _)| c)
            .sum()
    }

    /// Checks every row and every fixing against a full 0/1 assignment.
    pub fn is_feasible(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.n_vars
            && self.fixed.iter().all(|(&j, &v)| assignment[j] == v)
            && self.constraints.iter().all(|c| c.satisfied_by(assignment))
    }

    /// Index of every row violated by `assignment`.
    pub fn violated_rows(&self, assignment: &[bool]) -> Vec<usize> {
        self.constraints
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.satisfied_by(assignment))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IlpSolution {
    pub assignment: Vec<bool>,
    pub objective_value: f64,
    pub status: Status,
    pub nodes_explored: usize,
}

impl IlpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == Status::Optimal
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strict_rows_need_the_epsilon_margin() {
        let row = Constraint::new(vec![(0, 1.0)], Sense::Lt, 1.0);
        assert!(!row.satisfied_by(&[true]));
        assert!(row.satisfied_by(&[false]));
        let row = Constraint::new(vec![(0, 1.0)], Sense::Lt, 1.0 + 2e-6);
        assert!(row.satisfied_by(&[true]));
        assert!((Constraint::new(vec![], Sense::Lt, -50.0).strict_epsilon() - 5e-5).abs() < 1e-18);
    }

    #[test]
    fn ge_rows_flip() {
        let row = Constraint::new(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 1.0);
        assert!(row.satisfied_by(&[true, false]));
        assert!(!row.satisfied_by(&[false, false]));
        let (coeffs, rhs) = row.as_le();
        assert_eq!(coeffs, vec![(0, -1.0), (1, -1.0)]);
        assert_eq!(rhs, -1.0);
    }

    #[test]
    fn malformed_rows_are_rejected() {
        let mut inst = IlpInstance::new(vec![1.0, 1.0]);
        assert!(inst
            .add_constraint(Constraint::new(vec![(2, 1.0)], Sense::Le, 1.0))
            .is_err());
        assert!(inst
            .add_constraint(Constraint::new(vec![(0, 1.0), (0, 2.0)], Sense::Le, 1.0))
            .is_err());
        assert!(inst
            .add_constraint(Constraint::new(vec![(0, f64::NAN)], Sense::Le, 1.0))
            .is_err());
        assert!(inst.fix(5, true).is_err());
    }
}
