//! Cost-normalized greedy schedule construction.
//!
//! Each step appends the action `(h, tau)` that maximizes newly solved nodes per
//! unit of cost. With extensions enabled, the last scheduled heuristic may also
//! be run longer; that action pays only for the additional iterations and is
//! merged into the last entry.

use std::fmt;

use crate::dataset::{avg_iteration_cost, Dataset, HeuristicId, IterationCostProfile};
use crate::error::{Error, Result};
use crate::schedule::{evaluate, Schedule, ScheduleEvaluation};

/// Relative tolerance under which two ratios (or costs) count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GreedyOptions {
    /// Allow running the last scheduled heuristic for longer.
    pub allow_extension: bool,
    /// Weight iterations by each heuristic's average seconds per iteration.
    pub normalize_costs: bool,
    /// Coverage level reported (not enforced) on the final schedule.
    pub alpha_report: f64,
}

impl Default for GreedyOptions {
    fn default() -> Self {
        Self {
            allow_extension: true,
            normalize_costs: false,
            alpha_report: 0.0,
        }
    }
}

/// A candidate `(heuristic, budget)` pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub heuristic: usize,
    pub budget: u64,
    pub extension: bool,
}

/// The actions available at one greedy step.
#[derive(Clone, Debug, Default)]
pub struct ActionSet {
    candidates: Vec<Candidate>,
}

impl ActionSet {
    /// Fresh heuristics at each of their breakpoints, plus (when allowed) the
    /// last entry at breakpoints strictly above its current budget.
    pub fn build(d: &Dataset, used: &[bool], last: Option<(usize, u64)>, allow_extension: bool) -> Self {
        let mut candidates = Vec::new();
        for h in 0..d.num_heuristics() {
            if !used[h] {
                candidates.extend(d.breakpoints_of(h).iter().map(|&budget| Candidate {
                    heuristic: h,
                    budget,
                    extension: false,
                }));
            } else if let Some((lh, lb)) = last.filter(|&(lh, _)| allow_extension && lh == h) {
                candidates.extend(
                    d.breakpoints_of(lh)
                        .iter()
                        .filter(|&&b| b > lb)
                        .map(|&budget| Candidate {
                            heuristic: lh,
                            budget,
                            extension: true,
                        }),
                );
            }
        }
        Self { candidates }
    }

    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Action {
    pub heuristic: usize,
    pub budget: u64,
    pub extension: bool,
    pub newly_solved: usize,
    pub marginal_cost: f64,
    pub ratio: f64,
}

fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_TOLERANCE * a.abs().max(b.abs())
}

/// Argmax order: higher ratio, then cheaper, then earlier heuristic, then smaller budget.
fn beats(a: &Action, b: &Action) -> bool {
    if !approx_eq(a.ratio, b.ratio) {
        return a.ratio > b.ratio;
    }
    if !approx_eq(a.marginal_cost, b.marginal_cost) {
        return a.marginal_cost < b.marginal_cost;
    }
    (a.heuristic, a.budget) < (b.heuristic, b.budget)
}

/// Marginal cost of a candidate given the last entry of the schedule.
pub fn action_cost(c: &Candidate, costs: &IterationCostProfile, last: Option<(usize, u64)>) -> f64 {
    let per_iteration = costs.get(c.heuristic);
    match last {
        Some((lh, lb)) if c.extension && lh == c.heuristic => per_iteration * (c.budget - lb) as f64,
        _ => per_iteration * c.budget as f64,
    }
}

/// Number of unsolved nodes heuristic `h` solves within `budget` iterations.
pub fn newly_solved(d: &Dataset, unsolved: &[bool], h: usize, budget: u64) -> usize {
    (0..d.num_nodes())
        .filter(|&n| unsolved[n] && d.tau(h, n).is_some_and(|t| t <= budget))
        .count()
}

/// The action with the best solved-per-cost ratio, or `None` if no action
/// solves a single unsolved node.
pub fn best_action(
    unsolved: &[bool],
    actions: &ActionSet,
    d: &Dataset,
    costs: &IterationCostProfile,
    last: Option<(usize, u64)>,
) -> Option<Action> {
    // sorted finite taus over unsolved nodes, per heuristic, so each candidate is a binary search
    let mut open_taus: Vec<Option<Vec<u64>>> = vec![None; d.num_heuristics()];
    let mut best: Option<Action> = None;
    for c in actions.candidates() {
        let taus = open_taus[c.heuristic].get_or_insert_with(|| {
            let mut t: Vec<u64> = (0..d.num_nodes())
                .filter(|&n| unsolved[n])
                .filter_map(|n| d.tau(c.heuristic, n))
                .collect();
            t.sort_unstable();
            t
        });
        let solved = taus.partition_point(|&t| t <= c.budget);
        if solved == 0 {
            continue;
        }
        let marginal_cost = action_cost(c, costs, last);
        let action = Action {
            heuristic: c.heuristic,
            budget: c.budget,
            extension: c.extension,
            newly_solved: solved,
            marginal_cost,
            ratio: solved as f64 / marginal_cost,
        };
        if best.as_ref().is_none_or(|b| beats(&action, b)) {
            best = Some(action);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyStep {
    pub heuristic: HeuristicId,
    pub budget: u64,
    pub extension: bool,
    pub newly_solved: usize,
    pub marginal_cost: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GreedyTrace {
    pub steps: Vec<GreedyStep>,
}

impl fmt::Display for GreedyTrace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.steps.iter().enumerate() {
            writeln!(
                f,
                "step {:>3}  {:<12} budget {:>6}  solved {:>5}  cost {:>12}  ratio {}{}",
                i + 1,
                s.heuristic.as_str(),
                s.budget,
                s.newly_solved,
                crate::numfmt::sig6(s.marginal_cost),
                crate::numfmt::sig6(s.ratio),
                if s.extension { "  (extension)" } else { "" }
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GreedyOutcome {
    pub schedule: Schedule,
    pub trace: GreedyTrace,
    pub evaluation: ScheduleEvaluation,
}

/// Greedy schedule with costs derived from the dataset's recorded durations.
pub fn build_schedule(d: &Dataset, opts: GreedyOptions) -> Result<GreedyOutcome> {
    let costs = if opts.normalize_costs {
        avg_iteration_cost(d)
    } else {
        IterationCostProfile::uniform(d.num_heuristics())
    };
    build_schedule_with_costs(d, opts, &costs)
}

/// Greedy schedule under an explicit cost profile. The profile is used only
/// when `opts.normalize_costs` is set; otherwise every iteration costs 1.
pub fn build_schedule_with_costs(
    d: &Dataset,
    opts: GreedyOptions,
    costs: &IterationCostProfile,
) -> Result<GreedyOutcome> {
    if d.num_heuristics() == 0 {
        return Err(Error::EmptyDataset("no heuristics"));
    }
    if d.num_nodes() == 0 {
        return Err(Error::EmptyDataset("no nodes"));
    }
    crate::schedule::check_alpha(opts.alpha_report)?;
    let uniform;
    let step_costs = if opts.normalize_costs {
        if costs.len() != d.num_heuristics() {
            return Err(Error::Invalid("cost profile does not match dataset".into()));
        }
        costs
    } else {
        uniform = IterationCostProfile::uniform(d.num_heuristics());
        &uniform
    };

    let mut unsolved = vec![true; d.num_nodes()];
    let mut remaining = d.num_nodes();
    let mut used = vec![false; d.num_heuristics()];
    let mut last: Option<(usize, u64)> = None;
    let mut schedule = Schedule::empty();
    let mut trace = GreedyTrace::default();

    while remaining > 0 {
        let actions = ActionSet::build(d, &used, last, opts.allow_extension);
        let Some(a) = best_action(&unsolved, &actions, d, step_costs, last) else {
            break;
        };
        let id = d.heuristics()[a.heuristic].clone();
        if a.extension {
            schedule.extend_last(a.budget)?;
        } else {
            schedule.push(id.clone(), a.budget)?;
            used[a.heuristic] = true;
        }
        last = Some((a.heuristic, a.budget));
        for n in 0..d.num_nodes() {
            if unsolved[n] && d.tau(a.heuristic, n).is_some_and(|t| t <= a.budget) {
                unsolved[n] = false;
                remaining -= 1;
            }
        }
        trace.steps.push(GreedyStep {
            heuristic: id,
            budget: a.budget,
            extension: a.extension,
            newly_solved: a.newly_solved,
            marginal_cost: a.marginal_cost,
            ratio: a.ratio,
        });
    }

    let evaluation = evaluate(&schedule, d, opts.alpha_report, costs, opts.normalize_costs)?;
    Ok(GreedyOutcome {
        schedule,
        trace,
        evaluation,
    })
}
