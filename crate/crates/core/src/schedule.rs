//! Heuristic schedules and their replay against a dataset.

use std::collections::HashSet;

use crate::dataset::{Dataset, HeuristicId, IterationCostProfile, NodeId};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "position,heuristic,max_iterations";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ScheduleEntry {
    pub heuristic: HeuristicId,
    pub budget: u64,
}

/// Ordered `(heuristic, iteration budget)` pairs; each heuristic at most once.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Schedule {
    entries: Vec<ScheduleEntry>,
}

impl Schedule {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(entries: Vec<ScheduleEntry>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(entries.len());
        for e in &entries {
            if e.budget == 0 {
                return Err(Error::InvalidSchedule(format!(
                    "budget of `{}` must be at least 1",
                    e.heuristic
                )));
            }
            if !seen.insert(&e.heuristic) {
                return Err(Error::InvalidSchedule(format!(
                    "heuristic `{}` appears more than once",
                    e.heuristic
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn from_pairs(pairs: &[(&str, u64)]) -> Result<Self> {
        let entries = pairs
            .iter()
            .map(|(h, b)| {
                Ok(ScheduleEntry {
                    heuristic: HeuristicId::new(*h)?,
                    budget: *b,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(entries)
    }

    pub fn entries(&self) -> &[ScheduleEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn last(&self) -> Option<&ScheduleEntry> {
        self.entries.last()
    }

    pub fn push(&mut self, heuristic: HeuristicId, budget: u64) -> Result<()> {
        if budget == 0 {
            return Err(Error::InvalidSchedule(format!(
                "budget of `{heuristic}` must be at least 1"
            )));
        }
        if self.entries.iter().any(|e| e.heuristic == heuristic) {
            return Err(Error::InvalidSchedule(format!(
                "heuristic `{heuristic}` appears more than once"
            )));
        }
        self.entries.push(ScheduleEntry { heuristic, budget });
        Ok(())
    }

    /// Raises the budget of the last entry.
    pub fn extend_last(&mut self, budget: u64) -> Result<()> {
        let last = self
            .entries
            .last_mut()
            .ok_or_else(|| Error::InvalidSchedule("cannot extend an empty schedule".into()))?;
        if budget <= last.budget {
            return Err(Error::InvalidSchedule(format!(
                "extension of `{}` to {budget} does not exceed current budget {}",
                last.heuristic, last.budget
            )));
        }
        last.budget = budget;
        Ok(())
    }

    pub fn set_budget(&mut self, position: usize, budget: u64) -> Result<()> {
        if budget == 0 {
            return Err(Error::InvalidSchedule("budget must be at least 1".into()));
        }
        let entry = self
            .entries
            .get_mut(position)
            .ok_or_else(|| Error::InvalidSchedule(format!("no entry at position {position}")))?;
        entry.budget = budget;
        Ok(())
    }

    /// Maps entries onto dataset heuristic indices.
    pub fn resolve(&self, d: &Dataset) -> Result<Vec<(usize, u64)>> {
        self.entries
            .iter()
            .map(|e| {
                d.index_of_heuristic(&e.heuristic)
                    .map(|h| (h, e.budget))
                    .ok_or_else(|| Error::UnknownHeuristic(e.heuristic.to_string()))
            })
            .collect()
    }

    pub fn from_csv(source: &str) -> Result<Self> {
        let mut header_seen = false;
        let mut entries = Vec::new();
        for (i, line) in source.lines().enumerate() {
            let row = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if !header_seen {
                let header: Vec<&str> = trimmed.split(',').map(str::trim).collect();
                if header.join(",") != CSV_HEADER {
                    return Err(Error::Parse {
                        row,
                        message: format!("expected header `{CSV_HEADER}`"),
                    });
                }
                header_seen = true;
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            let err = |message: String| Error::Parse { row, message };
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let position: usize = fields[0]
                .parse()
                .map_err(|_| err(format!("position `{}` is not an integer", fields[0])))?;
            if position != entries.len() + 1 {
                return Err(err(format!(
                    "positions must be contiguous from 1, expected {} found {position}",
                    entries.len() + 1
                )));
            }
            let heuristic = HeuristicId::new(fields[1]).map_err(|e| err(e.to_string()))?;
            let budget: u64 = fields[2]
                .parse()
                .map_err(|_| err(format!("max_iterations `{}` is not an integer", fields[2])))?;
            entries.push(ScheduleEntry { heuristic, budget });
        }
        if !header_seen {
            return Err(Error::Parse {
                row: 0,
                message: format!("missing header `{CSV_HEADER}`"),
            });
        }
        Self::new(entries)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for (i, e) in self.entries.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", i + 1, e.heuristic, e.budget));
        }
        out
    }
}

impl std::fmt::Display for Schedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("<")?;
        for (i, e) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "({}, {})", e.heuristic, e.budget)?;
        }
        f.write_str(">")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeOutcome {
    pub node: NodeId,
    /// 1-based position of the first entry that solves the node.
    pub first_success_position: Option<usize>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScheduleEvaluation {
    pub objective: f64,
    pub solved_nodes: usize,
    pub total_nodes: usize,
    pub success_rate: f64,
    pub alpha: f64,
    pub feasible: bool,
    pub per_node: Vec<NodeOutcome>,
}

/// Per-heuristic multipliers applied to iteration counts.
pub(crate) fn weights(d: &Dataset, costs: &IterationCostProfile, normalize: bool) -> Result<Vec<f64>> {
    if !normalize {
        return Ok(vec![1.0; d.num_heuristics()]);
    }
    if costs.len() != d.num_heuristics() {
        return Err(Error::Invalid(format!(
            "cost profile covers {} heuristics, dataset has {}",
            costs.len(),
            d.num_heuristics()
        )));
    }
    Ok(costs.values().to_vec())
}

/// First-success position (0-based) and cost at one node.
#[inline]
pub(crate) fn replay_node(resolved: &[(usize, u64)], d: &Dataset, node: usize, w: &[f64]) -> (Option<usize>, f64) {
    let mut cost = 0.0;
    for (j, &(h, budget)) in resolved.iter().enumerate() {
        match d.tau(h, node) {
            Some(tau) if tau <= budget => return (Some(j), cost + w[h] * tau as f64),
            _ => cost += w[h] * budget as f64,
        }
    }
    (None, cost + 1.0)
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if (0.0..=1.0).contains(&alpha) {
        Ok(())
    } else {
        Err(Error::InvalidAlpha(alpha))
    }
}

/// `solved >= alpha * total`, evaluated without rounding the product away.
pub(crate) fn meets_alpha(solved: usize, total: usize, alpha: f64) -> bool {
    solved as f64 >= alpha * total as f64
}

/// Time spent by the schedule at one node, with the unsolved-node penalty of +1.
pub fn node_cost(
    s: &Schedule,
    d: &Dataset,
    n: &NodeId,
    costs: &IterationCostProfile,
    normalize: bool,
) -> Result<NodeOutcome> {
    let node = d
        .index_of_node(n)
        .ok_or_else(|| Error::UnknownNode(n.to_string()))?;
    let resolved = s.resolve(d)?;
    let w = weights(d, costs, normalize)?;
    let (pos, cost) = replay_node(&resolved, d, node, &w);
    Ok(NodeOutcome {
        node: n.clone(),
        first_success_position: pos.map(|p| p + 1),
        cost,
    })
}

/// Scheduling objective, coverage and feasibility against `alpha`.
pub fn evaluate(
    s: &Schedule,
    d: &Dataset,
    alpha: f64,
    costs: &IterationCostProfile,
    normalize: bool,
) -> Result<ScheduleEvaluation> {
    check_alpha(alpha)?;
    let resolved = s.resolve(d)?;
    let w = weights(d, costs, normalize)?;
    let per_node: Vec<NodeOutcome> = d
        .nodes()
        .iter()
        .enumerate()
        .map(|(n, id)| {
            let (pos, cost) = replay_node(&resolved, d, n, &w);
            NodeOutcome {
                node: id.clone(),
                first_success_position: pos.map(|p| p + 1),
                cost,
            }
        })
        .collect();
    let objective = per_node.iter().map(|o| o.cost).sum();
    let solved_nodes = per_node
        .iter()
        .filter(|o| o.first_success_position.is_some())
        .count();
    let total_nodes = d.num_nodes();
    let success_rate = if total_nodes == 0 {
        1.0
    } else {
        solved_nodes as f64 / total_nodes as f64
    };
    Ok(ScheduleEvaluation {
        objective,
        solved_nodes,
        total_nodes,
        success_rate,
        alpha,
        feasible: meets_alpha(solved_nodes, total_nodes, alpha),
        per_node,
    })
}
