//! Dense bounded-variable primal simplex in dictionary form.
//!
//! Solves `min c·x  s.t.  A x <= b,  lb <= x <= ub` with every structural
//! variable boxed. One slack per row starts basic; nonbasic variables always
//! sit at one of their bounds. Phase one minimizes the sum of basic bound
//! violations from whatever basis is current, phase two the real objective.
//!
//! Pricing is Dantzig (largest reduced cost) until a run of degenerate
//! pivots is seen, after which Bland's smallest-index rule takes over until
//! the objective strictly moves again.

use crate::error::IlpError;

const PRIMAL_TOL: f64 = 1e-9;
const DUAL_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;
const MAX_TABLEAU_ENTRIES: usize = 400_000_000;

#[derive(Debug, Clone)]
pub(crate) struct LpProblem {
    pub cost: Vec<f64>,
    /// Rows `a·x <= b`.
    pub rows: Vec<(Vec<(usize, f64)>, f64)>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum LpResult {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
}

pub(crate) struct Dictionary {
    m: usize,
    ncols: usize,
    /// Row-major `m x ncols`; basic `i` equals `beta_i - sum_j t[i][j] * x_{nb[j]}`.
    t: Vec<f64>,
    basis: Vec<usize>,
    nb: Vec<usize>,
    val: Vec<f64>,
    lb: Vec<f64>,
    ub: Vec<f64>,
    cost: Vec<f64>,
}

impl Dictionary {
    /// Slack basis for `problem`, structurals at their cheaper bound.
    pub fn new(problem: &LpProblem) -> Result<Self, IlpError> {
        let n = problem.cost.len();
        let m = problem.rows.len();
        if m.saturating_mul(n.max(1)) > MAX_TABLEAU_ENTRIES {
            return Err(IlpError::TooLarge { rows: m, cols: n });
        }
        for j in 0..n {
            if !(problem.lb[j] <= problem.ub[j])
                || !problem.lb[j].is_finite()
                || !problem.ub[j].is_finite()
            {
                return Err(IlpError::InvalidBounds {
                    var: j,
                    lo: problem.lb[j],
                    hi: problem.ub[j],
                });
            }
        }

        let mut lb = problem.lb.clone();
        let mut ub = problem.ub.clone();
        lb.extend(std::iter::repeat_n(0.0, m));
        ub.extend(std::iter::repeat_n(f64::INFINITY, m));
        let mut cost = problem.cost.clone();
        cost.extend(std::iter::repeat_n(0.0, m));

        let mut t = vec![0.0; m * n];
        let mut val = vec![0.0; n + m];
        for j in 0..n {
            val[j] = if problem.cost[j] < 0.0 { ub[j] } else { lb[j] };
        }
        for (i, (coeffs, rhs)) in problem.rows.iter().enumerate() {
            let mut act = 0.0;
            for &(j, a) in coeffs {
                t[i * n + j] += a;
                act += a * val[j];
            }
            val[n + i] = rhs - act;
        }

        Ok(Dictionary {
            m,
            ncols: n,
            t,
            basis: (n..n + m).collect(),
            nb: (0..n).collect(),
            val,
            lb,
            ub,
            cost,
        })
    }

    /// Number of structural variables.
    pub fn n_structural(&self) -> usize {
        self.ncols
    }

    pub fn is_fixed(&self, j: usize) -> bool {
        self.lb[j] == self.ub[j]
    }

    /// Moves the box of structural `j`. A nonbasic variable follows to the
    /// matching bound and the basic values are updated; a basic one is left
    /// for phase one to repair.
    pub fn set_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        let at_lower = self.val[j] <= self.lb[j];
        self.lb[j] = lo;
        self.ub[j] = hi;
        let Some(c) = self.nb.iter().position(|&k| k == j) else {
            return;
        };
        let new = if at_lower { lo } else { hi };
        let delta = new - self.val[j];
        self.val[j] = new;
        if delta != 0.0 {
            for i in 0..self.m {
                let tij = self.t[i * self.ncols + c];
                if tij != 0.0 {
                    self.val[self.basis[i]] -= tij * delta;
                }
            }
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.ncols + j]
    }

    fn row_infeasibility(&self, i: usize) -> f64 {
        let v = self.val[self.basis[i]];
        let k = self.basis[i];
        if v < self.lb[k] - PRIMAL_TOL {
            -1.0
        } else if v > self.ub[k] + PRIMAL_TOL {
            1.0
        } else {
            0.0
        }
    }

    /// Reduced costs for either the phase-one or the true objective.
    fn reduced_costs(&self, phase_one: bool) -> Vec<f64> {
        let mut d = vec![0.0; self.ncols];
        if !phase_one {
            for (j, dj) in d.iter_mut().enumerate() {
                *dj = self.cost[self.nb[j]];
            }
        }
        for i in 0..self.m {
            let cb = if phase_one {
                self.row_infeasibility(i)
            } else {
                self.cost[self.basis[i]]
            };
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.ncols..(i + 1) * self.ncols];
            for (dj, &tij) in d.iter_mut().zip(row) {
                *dj -= cb * tij;
            }
        }
        d
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let p = self.at(r, j);
        let row_start = r * n;
        for k in 0..n {
            if k != j {
                self.t[row_start + k] /= p;
            }
        }
        self.t[row_start + j] = 1.0 / p;
        let pivot_row: Vec<(usize, f64)> = (0..n)
            .filter(|&k| k != j)
            .map(|k| (k, self.t[row_start + k]))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let s = i * n;
            let tij = self.t[s + j];
            if tij == 0.0 {
                continue;
            }
            for &(k, v) in &pivot_row {
                self.t[s + k] -= tij * v;
            }
            self.t[s + j] = -tij / p;
        }
        std::mem::swap(&mut self.basis[r], &mut self.nb[j]);
    }
}

pub(crate) fn solve(problem: &LpProblem) -> Result<LpResult, IlpError> {
    Dictionary::new(problem)?.optimize()
}

impl Dictionary {
    /// Runs phase one (if needed) and phase two from the current basis.
    pub fn optimize(&mut self) -> Result<LpResult, IlpError> {
        let dict = self;
        let n = dict.ncols;
        let m = dict.m;
        let max_iter = 200 * (n + m) + 1000;
        let mut bland = false;
        let mut degenerate_run = 0usize;
        let mut d_phase2: Option<Vec<f64>> = None;

        for _iter in 0..max_iter {
            let phase_one = (0..m).any(|i| dict.row_infeasibility(i) != 0.0);
            let d = if phase_one {
                d_phase2 = None;
                dict.reduced_costs(true)
            } else {
                match d_phase2.take() {
                    Some(d) => d,
                    None => dict.reduced_costs(false),
                }
            };

            // Entering column.
            let mut enter: Option<(usize, f64)> = None;
            let mut best = 0.0;
            for j in 0..n {
                let k = dict.nb[j];
                if dict.ub[k] - dict.lb[k] <= 0.0 {
                    continue;
                }
                let at_lower = dict.val[k] <= dict.lb[k];
                let dir = if at_lower && d[j] < -DUAL_TOL {
                    1.0
                } else if !at_lower && d[j] > DUAL_TOL {
                    -1.0
                } else {
                    continue;
                };
                if bland {
                    let better = match enter {
                        None => true,
                        Some((jj, _)) => k < dict.nb[jj],
                    };
                    if better {
                        enter = Some((j, dir));
                    }
                } else if d[j].abs() > best {
                    best = d[j].abs();
                    enter = Some((j, dir));
                }
            }

            let Some((j, dir)) = enter else {
                if phase_one {
                    return Ok(LpResult::Infeasible);
                }
                let x: Vec<f64> = dict.val[..n].to_vec();
                let value = dict.cost[..n].iter().zip(&x).map(|(c, v)| c * v).sum();
                return Ok(LpResult::Optimal { value, x });
            };

            // Ratio test.
            let k_enter = dict.nb[j];
            let mut step = dict.ub[k_enter] - dict.lb[k_enter];
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let tij = dict.at(i, j);
                if tij.abs() <= PIVOT_TOL {
                    continue;
                }
                let rate = -dir * tij;
                let kb = dict.basis[i];
                let v = dict.val[kb];
                let (l, u) = (dict.lb[kb], dict.ub[kb]);
                let (limit, target) = if rate < 0.0 {
                    if phase_one && v > u + PRIMAL_TOL {
                        ((v - u) / -rate, u)
                    } else if v < l - PRIMAL_TOL {
                        continue;
                    } else {
                        (((v - l).max(0.0)) / -rate, l)
                    }
                } else if phase_one && v < l - PRIMAL_TOL {
                    ((l - v) / rate, l)
                } else if v > u + PRIMAL_TOL || u == f64::INFINITY {
                    continue;
                } else {
                    (((u - v).max(0.0)) / rate, u)
                };
                let replace = if limit < step - 1e-12 {
                    true
                } else if limit <= step + 1e-12 {
                    match leave {
                        // Tie with the bound flip: prefer the flip.
                        None => false,
                        Some((ii, _)) if bland => kb < dict.basis[ii],
                        Some((ii, _)) => tij.abs() > dict.at(ii, j).abs(),
                    }
                } else {
                    false
                };
                if replace {
                    step = step.min(limit);
                    leave = Some((i, target));
                }
            }

            if !step.is_finite() {
                return Err(IlpError::Unbounded);
            }

            if step <= PRIMAL_TOL {
                degenerate_run += 1;
                if degenerate_run > DEGENERATE_RUN {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
                bland = false;
            }

            // Move.
            dict.val[k_enter] += dir * step;
            for i in 0..m {
                let tij = dict.at(i, j);
                if tij != 0.0 {
                    let kb = dict.basis[i];
                    dict.val[kb] += -dir * tij * step;
                }
            }

            match leave {
                None => {
                    // Bound flip.
                    dict.val[k_enter] = if dir > 0.0 {
                        dict.ub[k_enter]
                    } else {
                        dict.lb[k_enter]
                    };
                    if !phase_one {
                        d_phase2 = Some(d);
                    }
                }
                Some((r, target)) => {
                    let kb = dict.basis[r];
                    dict.val[kb] = target;
                    let p = dict.at(r, j);
                    if !phase_one {
                        let mut d = d;
                        let dj = d[j];
                        let row = &dict.t[r * n..(r + 1) * n];
                        for k in 0..n {
                            if k != j {
                                d[k] -= dj * row[k] / p;
                            }
                        }
                        d[j] = -dj / p;
                        d_phase2 = Some(d);
                    }
                    dict.pivot(r, j);
                }
            }
        }
        Err(IlpError::IterationLimit(max_iter))
    }
}
