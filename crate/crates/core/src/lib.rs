//! Data-driven scheduling of primal heuristics inside branch-and-bound.
//!
//! The crate learns an ordered list of `(heuristic, iteration budget)` pairs
//! from shadow-mode observations, evaluates schedules against that data,
//! checks them against an exhaustive oracle and an exported MIQP model, and
//! measures primal performance through the primal integral. A synthetic
//! branch-and-bound node stream stands in for a real solver when generating
//! training data and replaying schedules.

pub mod dataset;
pub mod error;
pub mod exact;
pub mod fixtures;
pub mod greedy;
pub mod metrics;
pub mod miqp;
pub mod numfmt;
pub mod schedule;
pub mod sim;

pub use dataset::{
    avg_iteration_cost, breakpoints, load_dataset, Dataset, HeuristicId, IterationCostProfile,
    NodeId, Observation,
};
pub use error::{Error, Result};
pub use exact::{solve_exact, ExactLimits, ExactSolution};
pub use greedy::{
    best_action, build_schedule, build_schedule_with_costs, Action, GreedyOptions, GreedyOutcome, GreedyStep,
    GreedyTrace,
};
pub use metrics::{gap_function, primal_gap, primal_integral, GapFunction, IncumbentTimeline, Sense};
pub use miqp::{check_assignment, export_miqp, Assignment, CheckReport, MiqpModel};
pub use schedule::{evaluate, node_cost, NodeOutcome, Schedule, ScheduleEntry, ScheduleEvaluation};
pub use sim::{
    baseline_from_config, baseline_from_dataset, collect_shadow_dataset, compare_policies, generate_instance,
    run_with_schedule, ComparisonReport, HeuristicSpec, RunTrace, SimConfig, SimInstance,
};
