//! Exhaustive optimum of the coverage-constrained scheduling problem.
//!
//! Every ordered subset of heuristics is tried with every combination of
//! breakpoint budgets. Budgets between breakpoints never help: lowering a
//! budget to the next breakpoint below keeps the solved set and lowers cost.
//! Exponential, so guarded by [`ExactLimits`].

use crate::dataset::{Dataset, IterationCostProfile};
use crate::error::{Error, Result};
use crate::schedule::{check_alpha, meets_alpha, weights, Schedule, ScheduleEntry};

const OBJECTIVE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExactLimits {
    pub max_heuristics: usize,
    pub max_breakpoints_per_heuristic: usize,
    /// Maximum number of candidate schedules to enumerate.
    pub enumeration_budget: u128,
}

impl Default for ExactLimits {
    fn default() -> Self {
        Self {
            max_heuristics: 6,
            max_breakpoints_per_heuristic: 8,
            enumeration_budget: 20_000_000,
        }
    }
}

impl ExactLimits {
    fn validate(&self) -> Result<()> {
        if self.max_heuristics == 0 || self.max_breakpoints_per_heuristic == 0 || self.enumeration_budget == 0 {
            return Err(Error::Invalid("exact limits must all be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExactSolution {
    pub schedule: Schedule,
    pub objective: f64,
    pub solved_nodes: usize,
    pub candidates_evaluated: u128,
}

/// Number of ordered schedules over heuristics with `counts[h]` budgets each:
/// `sum_k k! * e_k(counts)`.
pub fn candidate_count(counts: &[usize]) -> u128 {
    // elementary symmetric polynomials e_0..e_n
    let mut e = vec![0u128; counts.len() + 1];
    e[0] = 1;
    for &c in counts {
        for k in (1..e.len()).rev() {
            e[k] = e[k].saturating_add(e[k - 1].saturating_mul(c as u128));
        }
    }
    let mut total: u128 = 0;
    let mut factorial: u128 = 1;
    for (k, ek) in e.iter().enumerate() {
        if k > 0 {
            factorial = factorial.saturating_mul(k as u128);
        }
        total = total.saturating_add(ek.saturating_mul(factorial));
    }
    total
}

struct Search<'a> {
    d: &'a Dataset,
    w: Vec<f64>,
    alpha: f64,
    used: Vec<bool>,
    path: Vec<(usize, u64)>,
    best: Option<(f64, usize, Vec<(usize, u64)>)>,
    evaluated: u128,
}

#[derive(Clone)]
struct Frame {
    // accumulated cost at each still-unsolved node; NaN marks solved nodes
    open_cost: Vec<f64>,
    solved_cost: f64,
    solved: usize,
}

impl Frame {
    fn objective(&self) -> f64 {
        self.solved_cost
            + self
                .open_cost
                .iter()
                .filter(|c| !c.is_nan())
                .map(|c| c + 1.0)
                .sum::<f64>()
    }
}

/// `(len, heuristic sequence, budget sequence)` ordering used for ties.
fn tie_key(path: &[(usize, u64)]) -> (usize, Vec<usize>, Vec<u64>) {
    (
        path.len(),
        path.iter().map(|p| p.0).collect(),
        path.iter().map(|p| p.1).collect(),
    )
}

impl Search<'_> {
    fn consider(&mut self, frame: &Frame) {
        self.evaluated += 1;
        if !meets_alpha(frame.solved, self.d.num_nodes(), self.alpha) {
            return;
        }
        let objective = frame.objective();
        let better = match &self.best {
            None => true,
            Some((best_obj, _, best_path)) => {
                let tol = OBJECTIVE_TOLERANCE * objective.abs().max(best_obj.abs());
                if objective < best_obj - tol {
                    true
                } else if objective <= best_obj + tol {
                    tie_key(&self.path) < tie_key(best_path)
                } else {
                    false
                }
            }
        };
        if better {
            self.best = Some((objective, frame.solved, self.path.clone()));
        }
    }

    fn descend(&mut self, frame: &Frame) {
        self.consider(frame);
        for h in 0..self.d.num_heuristics() {
            if self.used[h] {
                continue;
            }
            self.used[h] = true;
            for &budget in self.d.breakpoints_of(h) {
                let mut next = frame.clone();
                for (n, cost) in next.open_cost.iter_mut().enumerate() {
                    if cost.is_nan() {
                        continue;
                    }
                    match self.d.tau(h, n) {
                        Some(tau) if tau <= budget => {
                            next.solved_cost += *cost + self.w[h] * tau as f64;
                            next.solved += 1;
                            *cost = f64::NAN;
                        }
                        _ => *cost += self.w[h] * budget as f64,
                    }
                }
                self.path.push((h, budget));
                self.descend(&next);
                self.path.pop();
            }
            self.used[h] = false;
        }
    }
}

/// Minimum-objective schedule solving at least `alpha` of the nodes, or
/// `Ok(None)` when no schedule reaches that coverage.
pub fn solve_exact(
    d: &Dataset,
    alpha: f64,
    costs: &IterationCostProfile,
    normalize: bool,
    limits: ExactLimits,
) -> Result<Option<ExactSolution>> {
    check_alpha(alpha)?;
    limits.validate()?;
    if d.num_heuristics() > limits.max_heuristics {
        return Err(Error::LimitExceeded {
            limit: "max_heuristics",
            actual: d.num_heuristics() as u128,
            allowed: limits.max_heuristics as u128,
        });
    }
    let counts: Vec<usize> = (0..d.num_heuristics()).map(|h| d.breakpoints_of(h).len()).collect();
    if let Some(&worst) = counts.iter().max() {
        if worst > limits.max_breakpoints_per_heuristic {
            return Err(Error::LimitExceeded {
                limit: "max_breakpoints_per_heuristic",
                actual: worst as u128,
                allowed: limits.max_breakpoints_per_heuristic as u128,
            });
        }
    }
    let total = candidate_count(&counts);
    if total > limits.enumeration_budget {
        return Err(Error::LimitExceeded {
            limit: "enumeration_budget",
            actual: total,
            allowed: limits.enumeration_budget,
        });
    }

    let mut search = Search {
        d,
        w: weights(d, costs, normalize)?,
        alpha,
        used: vec![false; d.num_heuristics()],
        path: Vec::new(),
        best: None,
        evaluated: 0,
    };
    let root = Frame {
        open_cost: vec![0.0; d.num_nodes()],
        solved_cost: 0.0,
        solved: 0,
    };
    search.descend(&root);
    debug_assert_eq!(search.evaluated, total);

    let evaluated = search.evaluated;
    search
        .best
        .map(|(objective, solved_nodes, path)| {
            let entries = path
                .into_iter()
                .map(|(h, budget)| ScheduleEntry {
                    heuristic: d.heuristics()[h].clone(),
                    budget,
                })
                .collect();
            Ok(ExactSolution {
                schedule: Schedule::new(entries)?,
                objective,
                solved_nodes,
                candidates_evaluated: evaluated,
            })
        })
        .transpose()
}
