//! Training data: which heuristic solved which node, after how many iterations.
//!
//! A [`Dataset`] is the set of triplets `(h, N, tau)` collected in shadow mode,
//! extended with the iterations a call actually executed and its wall-clock
//! duration. Pairs without an observation count as failures that never ran.

use std::borrow::Borrow;
use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "heuristic,node,iterations_to_solution,iterations_executed,duration_seconds";

fn check_identifier(kind: &str, name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Invalid(format!("{kind} identifier must be non-empty")));
    }
    if name.contains(',') || name.contains('\n') || name.contains('\r') {
        return Err(Error::Invalid(format!(
            "{kind} identifier `{name}` may not contain commas or line breaks"
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HeuristicId(String);

impl HeuristicId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        check_identifier("heuristic", &name)?;
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for HeuristicId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for HeuristicId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(String);

impl NodeId {
    pub fn new(name: impl Into<String>) -> Result<Self> {
        let name = name.into();
        check_identifier("node", &name)?;
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl Borrow<str> for NodeId {
    fn borrow(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// One heuristic call at one node.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub heuristic: HeuristicId,
    pub node: NodeId,
    /// `None` encodes FAIL (infinitely many iterations).
    pub iterations_to_solution: Option<u64>,
    pub iterations_executed: u64,
    pub duration_seconds: Option<f64>,
}

impl Observation {
    pub fn new(
        heuristic: HeuristicId,
        node: NodeId,
        iterations_to_solution: Option<u64>,
        iterations_executed: u64,
        duration_seconds: Option<f64>,
    ) -> Result<Self> {
        let obs = Self {
            heuristic,
            node,
            iterations_to_solution,
            iterations_executed,
            duration_seconds,
        };
        if let Some(message) = obs.violation() {
            return Err(Error::InvalidObservation {
                heuristic: obs.heuristic.0,
                node: obs.node.0,
                message,
            });
        }
        Ok(obs)
    }

    fn violation(&self) -> Option<String> {
        if self.iterations_executed == 0 {
            return Some("iterations_executed must be positive".into());
        }
        if let Some(tau) = self.iterations_to_solution {
            if tau == 0 {
                return Some("iterations_to_solution must be at least 1".into());
            }
            if tau > self.iterations_executed {
                return Some(format!(
                    "iterations_to_solution {tau} exceeds iterations_executed {}",
                    self.iterations_executed
                ));
            }
        }
        if let Some(d) = self.duration_seconds {
            if !(d.is_finite() && d >= 0.0) {
                return Some(format!("duration_seconds must be a nonnegative number, got {d}"));
            }
        }
        None
    }

    pub fn succeeded(&self) -> bool {
        self.iterations_to_solution.is_some()
    }
}

/// Immutable training dataset with dense `(heuristic, node)` lookup.
#[derive(Clone, Debug)]
pub struct Dataset {
    heuristics: Vec<HeuristicId>,
    nodes: Vec<NodeId>,
    heuristic_index: HashMap<HeuristicId, usize>,
    node_index: HashMap<NodeId, usize>,
    observations: Vec<Observation>,
    // cells[h * nodes.len() + n] indexes into `observations`
    cells: Vec<Option<usize>>,
    breakpoints: Vec<Vec<u64>>,
}

impl PartialEq for Dataset {
    fn eq(&self, other: &Self) -> bool {
        self.heuristics == other.heuristics
            && self.nodes == other.nodes
            && self.observations == other.observations
    }
}

impl Dataset {
    /// Builds a dataset with explicitly registered heuristics and nodes.
    pub fn new(
        heuristics: Vec<HeuristicId>,
        nodes: Vec<NodeId>,
        observations: Vec<Observation>,
    ) -> Result<Self> {
        let mut heuristic_index = HashMap::with_capacity(heuristics.len());
        for (i, h) in heuristics.iter().enumerate() {
            if heuristic_index.insert(h.clone(), i).is_some() {
                return Err(Error::Invalid(format!("heuristic `{h}` registered twice")));
            }
        }
        let mut node_index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if node_index.insert(n.clone(), i).is_some() {
                return Err(Error::Invalid(format!("node `{n}` registered twice")));
            }
        }

        let mut cells = vec![None; heuristics.len() * nodes.len()];
        for (k, obs) in observations.iter().enumerate() {
            if let Some(message) = obs.violation() {
                return Err(Error::InvalidObservation {
                    heuristic: obs.heuristic.0.clone(),
                    node: obs.node.0.clone(),
                    message,
                });
            }
            let h = *heuristic_index
                .get(&obs.heuristic)
                .ok_or_else(|| Error::UnknownHeuristic(obs.heuristic.0.clone()))?;
            let n = *node_index
                .get(&obs.node)
                .ok_or_else(|| Error::UnknownNode(obs.node.0.clone()))?;
            let cell = &mut cells[h * nodes.len() + n];
            if cell.is_some() {
                return Err(Error::DuplicateObservation {
                    heuristic: obs.heuristic.0.clone(),
                    node: obs.node.0.clone(),
                });
            }
            *cell = Some(k);
        }

        let mut dataset = Self {
            heuristics,
            nodes,
            heuristic_index,
            node_index,
            observations,
            cells,
            breakpoints: Vec::new(),
        };
        dataset.breakpoints = (0..dataset.heuristics.len())
            .map(|h| {
                let mut taus: Vec<u64> = (0..dataset.nodes.len())
                    .filter_map(|n| dataset.tau(h, n))
                    .collect();
                taus.sort_unstable();
                taus.dedup();
                taus
            })
            .collect();
        Ok(dataset)
    }

    /// Registers heuristics and nodes in first-appearance order.
    pub fn from_observations(observations: Vec<Observation>) -> Result<Self> {
        let mut heuristics = Vec::new();
        let mut nodes = Vec::new();
        let mut seen_h = std::collections::HashSet::new();
        let mut seen_n = std::collections::HashSet::new();
        for obs in &observations {
            if seen_h.insert(obs.heuristic.clone()) {
                heuristics.push(obs.heuristic.clone());
            }
            if seen_n.insert(obs.node.clone()) {
                nodes.push(obs.node.clone());
            }
        }
        Self::new(heuristics, nodes, observations)
    }

    /// Dense table of iterations-to-solution, one row per heuristic.
    ///
    /// Failed calls are recorded as having executed as many iterations as the
    /// heuristic's largest finite value (at least one). No durations.
    pub fn from_tau_table(
        heuristics: &[&str],
        nodes: &[&str],
        taus: &[Vec<Option<u64>>],
    ) -> Result<Self> {
        if taus.len() != heuristics.len() {
            return Err(Error::Invalid("one tau row per heuristic required".into()));
        }
        let hs = heuristics
            .iter()
            .map(|h| HeuristicId::new(*h))
            .collect::<Result<Vec<_>>>()?;
        let ns = nodes
            .iter()
            .map(|n| NodeId::new(*n))
            .collect::<Result<Vec<_>>>()?;
        let mut observations = Vec::with_capacity(hs.len() * ns.len());
        for (h, row) in hs.iter().zip(taus) {
            if row.len() != ns.len() {
                return Err(Error::Invalid(format!("tau row of `{h}` has wrong length")));
            }
            let fail_executed = row.iter().flatten().copied().max().unwrap_or(1);
            for (n, tau) in ns.iter().zip(row) {
                observations.push(Observation {
                    heuristic: h.clone(),
                    node: n.clone(),
                    iterations_to_solution: *tau,
                    iterations_executed: tau.unwrap_or(fail_executed),
                    duration_seconds: None,
                });
            }
        }
        Self::new(hs, ns, observations)
    }

    pub fn from_csv(source: &str) -> Result<Self> {
        let mut header_seen = false;
        let mut observations = Vec::new();
        let mut seen = std::collections::HashSet::new();
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
            let obs = parse_row(row, trimmed)?;
            if !seen.insert((obs.heuristic.clone(), obs.node.clone())) {
                return Err(Error::DuplicateObservation {
                    heuristic: obs.heuristic.0,
                    node: obs.node.0,
                });
            }
            observations.push(obs);
        }
        if !header_seen {
            return Err(Error::Parse {
                row: 0,
                message: format!("missing header `{CSV_HEADER}`"),
            });
        }
        Self::from_observations(observations)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.observations.len() + 1));
        out.push_str(CSV_HEADER);
        out.push('\n');
        for obs in &self.observations {
            let tau = obs
                .iterations_to_solution
                .map_or_else(|| "inf".to_string(), |t| t.to_string());
            let duration = obs
                .duration_seconds
                .map_or_else(String::new, |d| d.to_string());
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                obs.heuristic, obs.node, tau, obs.iterations_executed, duration
            ));
        }
        out
    }

    pub fn heuristics(&self) -> &[HeuristicId] {
        &self.heuristics
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn num_heuristics(&self) -> usize {
        self.heuristics.len()
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn heuristic_index(&self, name: &str) -> Option<usize> {
        self.heuristic_index.get(name).copied()
    }

    pub fn node_index(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn index_of_heuristic(&self, h: &HeuristicId) -> Option<usize> {
        self.heuristic_index.get(h).copied()
    }

    pub fn index_of_node(&self, n: &NodeId) -> Option<usize> {
        self.node_index.get(n).copied()
    }

    pub fn observation(&self, heuristic: usize, node: usize) -> Option<&Observation> {
        self.cells[heuristic * self.nodes.len() + node].map(|k| &self.observations[k])
    }

    /// Iterations heuristic `heuristic` needs at `node`; `None` is FAIL.
    #[inline]
    pub fn tau(&self, heuristic: usize, node: usize) -> Option<u64> {
        self.observation(heuristic, node)
            .and_then(|o| o.iterations_to_solution)
    }

    /// Sorted distinct finite iterations-to-solution of one heuristic.
    pub fn breakpoints_of(&self, heuristic: usize) -> &[u64] {
        &self.breakpoints[heuristic]
    }

    /// Largest finite iterations-to-solution of a heuristic, 0 if it never succeeds.
    pub fn max_tau(&self, heuristic: usize) -> u64 {
        self.breakpoints[heuristic].last().copied().unwrap_or(0)
    }
}

fn parse_row(row: usize, line: &str) -> Result<Observation> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    let err = |message: String| Error::Parse { row, message };
    if fields.len() != 5 {
        return Err(err(format!("expected 5 fields, found {}", fields.len())));
    }
    let heuristic = HeuristicId::new(fields[0]).map_err(|e| err(e.to_string()))?;
    let node = NodeId::new(fields[1]).map_err(|e| err(e.to_string()))?;
    let tau = match fields[2] {
        "" => None,
        s if s.eq_ignore_ascii_case("inf") => None,
        s => Some(
            s.parse::<u64>()
                .map_err(|_| err(format!("iterations_to_solution `{s}` is not a non-negative integer")))?,
        ),
    };
    let executed = fields[3]
        .parse::<u64>()
        .map_err(|_| err(format!("iterations_executed `{}` is not a non-negative integer", fields[3])))?;
    let duration = match fields[4] {
        "" => None,
        s => Some(
            s.parse::<f64>()
                .map_err(|_| err(format!("duration_seconds `{s}` is not a number")))?,
        ),
    };
    let obs = Observation {
        heuristic,
        node,
        iterations_to_solution: tau,
        iterations_executed: executed,
        duration_seconds: duration,
    };
    if let Some(message) = obs.violation() {
        return Err(err(message));
    }
    Ok(obs)
}

/// Parses the dataset CSV format.
pub fn load_dataset(source: &str) -> Result<Dataset> {
    Dataset::from_csv(source)
}

/// Average seconds per iteration, one entry per registered heuristic.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationCostProfile {
    seconds_per_iteration: Vec<f64>,
    fallbacks: Vec<usize>,
}

impl IterationCostProfile {
    /// Every heuristic costs one unit per iteration.
    pub fn uniform(num_heuristics: usize) -> Self {
        Self {
            seconds_per_iteration: vec![1.0; num_heuristics],
            fallbacks: Vec::new(),
        }
    }

    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::Invalid(format!(
                "average iteration cost must be positive and finite, got {v}"
            )));
        }
        Ok(Self {
            seconds_per_iteration: values,
            fallbacks: Vec::new(),
        })
    }

    #[inline]
    pub fn get(&self, heuristic: usize) -> f64 {
        self.seconds_per_iteration[heuristic]
    }

    pub fn values(&self) -> &[f64] {
        &self.seconds_per_iteration
    }

    /// Heuristics whose durations summed over zero executed iterations.
    pub fn fallbacks(&self) -> &[usize] {
        &self.fallbacks
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            seconds_per_iteration: self.seconds_per_iteration.iter().map(|v| v * factor).collect(),
            fallbacks: self.fallbacks.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.seconds_per_iteration.len()
    }

    pub fn is_empty(&self) -> bool {
        self.seconds_per_iteration.is_empty()
    }
}

/// Total recorded duration over total executed iterations, per heuristic.
///
/// Only observations that carry a duration contribute. Failed calls count.
/// Heuristics without any duration cost 1.0 per iteration.
pub fn avg_iteration_cost(d: &Dataset) -> IterationCostProfile {
    let mut seconds = vec![0.0f64; d.num_heuristics()];
    let mut iterations = vec![0u64; d.num_heuristics()];
    let mut timed = vec![false; d.num_heuristics()];
    for obs in d.observations() {
        if let Some(duration) = obs.duration_seconds {
            let h = d.heuristic_index[&obs.heuristic];
            seconds[h] += duration;
            iterations[h] += obs.iterations_executed;
            timed[h] = true;
        }
    }
    let mut fallbacks = Vec::new();
    let values = (0..d.num_heuristics())
        .map(|h| {
            if !timed[h] {
                1.0
            } else if iterations[h] == 0 || seconds[h] <= 0.0 {
                fallbacks.push(h);
                1.0
            } else {
                seconds[h] / iterations[h] as f64
            }
        })
        .collect();
    IterationCostProfile {
        seconds_per_iteration: values,
        fallbacks,
    }
}

/// Candidate iteration budgets of heuristic `h`.
pub fn breakpoints(d: &Dataset, h: &str) -> Result<Vec<u64>> {
    let idx = d
        .heuristic_index(h)
        .ok_or_else(|| Error::UnknownHeuristic(h.to_string()))?;
    Ok(d.breakpoints_of(idx).to_vec())
}
