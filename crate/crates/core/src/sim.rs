//! Synthetic branch-and-bound node stream.
//!
//! Stands in for an instrumented MIP solver. Each instance is a linear stream
//! of nodes; at every node each heuristic has a latent outcome (success flag,
//! iterations needed, solution quality) drawn once from the instance seed.
//! Shadow-mode collection records every heuristic at every node; replay runs a
//! schedule through the heuristic loop and emits incumbent events.

use std::collections::HashSet;
use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::dataset::{Dataset, HeuristicId, NodeId, Observation};
use crate::error::{Error, Result};
use crate::metrics::{primal_integral, IncumbentTimeline, Sense};
use crate::numfmt::sig6;
use crate::schedule::{Schedule, ScheduleEntry};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeuristicClass {
    Diving,
    Lns,
}

impl HeuristicClass {
    fn as_str(self) -> &'static str {
        match self {
            HeuristicClass::Diving => "diving",
            HeuristicClass::Lns => "lns",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HeuristicSpec {
    pub id: HeuristicId,
    pub class: HeuristicClass,
    /// Probability that the heuristic can solve a node at all.
    pub success_probability: f64,
    /// Per-iteration success rate of the truncated geometric law.
    pub geometric_rate: f64,
    pub max_iterations: u64,
    pub seconds_per_iteration: f64,
    /// Solution values are drawn uniformly from `optimum + [0, spread] * max(|optimum|, 1)`.
    pub quality_spread: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimConfig {
    pub name: Option<String>,
    pub heuristics: Vec<HeuristicSpec>,
    pub nodes_min: usize,
    pub nodes_max: usize,
    pub instances: usize,
    pub node_interarrival_seconds: f64,
    /// Optimal objective of every simulated instance (minimization).
    pub optimum_value: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            name: None,
            heuristics: Vec::new(),
            nodes_min: 20,
            nodes_max: 40,
            instances: 10,
            node_interarrival_seconds: 1.0,
            optimum_value: 100.0,
        }
    }
}

fn parse_num<T: std::str::FromStr>(row: usize, key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("line {row}: `{key}` has invalid value `{value}`")))
}

impl SimConfig {
    /// Parses `key = value` lines. `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = SimConfig::default();
        // (heuristic, which required fields were seen)
        let mut partial: Vec<(HeuristicSpec, [bool; 4])> = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let row = i + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {row}: expected `key = value`")))?;
            let (key, value) = (key.trim(), value.trim());
            if let Some(rest) = key.strip_prefix("heuristic.") {
                let (id, field) = rest
                    .rsplit_once('.')
                    .ok_or_else(|| Error::InvalidConfig(format!("line {row}: expected heuristic.<id>.<field>")))?;
                let id = HeuristicId::new(id).map_err(|e| Error::InvalidConfig(e.to_string()))?;
                let k = match partial.iter().position(|(s, _)| s.id == id) {
                    Some(k) => k,
                    None => {
                        partial.push((
                            HeuristicSpec {
                                id,
                                class: HeuristicClass::Diving,
                                success_probability: 0.0,
                                geometric_rate: 1.0,
                                max_iterations: 1,
                                seconds_per_iteration: 1.0,
                                quality_spread: 0.5,
                            },
                            [false; 4],
                        ));
                        partial.len() - 1
                    }
                };
                let (hs, seen) = &mut partial[k];
                match field {
                    "class" => {
                        hs.class = match value.to_ascii_lowercase().as_str() {
                            "diving" => HeuristicClass::Diving,
                            "lns" => HeuristicClass::Lns,
                            other => {
                                return Err(Error::InvalidConfig(format!(
                                    "line {row}: unknown class `{other}`"
                                )))
                            }
                        }
                    }
                    "success_probability" => {
                        hs.success_probability = parse_num(row, key, value)?;
                        seen[0] = true;
                    }
                    "geometric_rate" => {
                        hs.geometric_rate = parse_num(row, key, value)?;
                        seen[1] = true;
                    }
                    "max_iterations" => {
                        hs.max_iterations = parse_num(row, key, value)?;
                        seen[2] = true;
                    }
                    "seconds_per_iteration" => {
                        hs.seconds_per_iteration = parse_num(row, key, value)?;
                        seen[3] = true;
                    }
                    "quality_spread" => hs.quality_spread = parse_num(row, key, value)?,
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "line {row}: unknown heuristic field `{other}`"
                        )))
                    }
                }
                continue;
            }
            match key {
                "name" => cfg.name = Some(value.to_string()),
                "instances" => cfg.instances = parse_num(row, key, value)?,
                "nodes_min" => cfg.nodes_min = parse_num(row, key, value)?,
                "nodes_max" => cfg.nodes_max = parse_num(row, key, value)?,
                "node_interarrival_seconds" => cfg.node_interarrival_seconds = parse_num(row, key, value)?,
                "optimum_value" => cfg.optimum_value = parse_num(row, key, value)?,
                other => return Err(Error::InvalidConfig(format!("line {row}: unknown key `{other}`"))),
            }
        }
        const REQUIRED: [&str; 4] = [
            "success_probability",
            "geometric_rate",
            "max_iterations",
            "seconds_per_iteration",
        ];
        for (hs, seen) in partial {
            if let Some(k) = seen.iter().position(|s| !s) {
                return Err(Error::InvalidConfig(format!(
                    "heuristic `{}` is missing `{}`",
                    hs.id, REQUIRED[k]
                )));
            }
            cfg.heuristics.push(hs);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        if let Some(name) = &self.name {
            writeln!(out, "name = {name}").unwrap();
        }
        writeln!(out, "instances = {}", self.instances).unwrap();
        writeln!(out, "nodes_min = {}", self.nodes_min).unwrap();
        writeln!(out, "nodes_max = {}", self.nodes_max).unwrap();
        writeln!(out, "node_interarrival_seconds = {}", self.node_interarrival_seconds).unwrap();
        writeln!(out, "optimum_value = {}", self.optimum_value).unwrap();
        for h in &self.heuristics {
            let id = &h.id;
            writeln!(out, "heuristic.{id}.class = {}", h.class.as_str()).unwrap();
            writeln!(out, "heuristic.{id}.success_probability = {}", h.success_probability).unwrap();
            writeln!(out, "heuristic.{id}.geometric_rate = {}", h.geometric_rate).unwrap();
            writeln!(out, "heuristic.{id}.max_iterations = {}", h.max_iterations).unwrap();
            writeln!(out, "heuristic.{id}.seconds_per_iteration = {}", h.seconds_per_iteration).unwrap();
            writeln!(out, "heuristic.{id}.quality_spread = {}", h.quality_spread).unwrap();
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.heuristics.is_empty() {
            return bad("at least one heuristic is required".into());
        }
        let mut ids = HashSet::new();
        for h in &self.heuristics {
            if !ids.insert(&h.id) {
                return bad(format!("heuristic `{}` declared twice", h.id));
            }
            if !(0.0..=1.0).contains(&h.success_probability) {
                return bad(format!("success_probability of `{}` must lie in [0, 1]", h.id));
            }
            if !(h.geometric_rate > 0.0 && h.geometric_rate <= 1.0) {
                return bad(format!("geometric_rate of `{}` must lie in (0, 1]", h.id));
            }
            if h.max_iterations == 0 {
                return bad(format!("max_iterations of `{}` must be positive", h.id));
            }
            if !(h.seconds_per_iteration.is_finite() && h.seconds_per_iteration > 0.0) {
                return bad(format!("seconds_per_iteration of `{}` must be positive", h.id));
            }
            if !(h.quality_spread.is_finite() && h.quality_spread >= 0.0) {
                return bad(format!("quality_spread of `{}` must be nonnegative", h.id));
            }
        }
        if self.nodes_min == 0 || self.nodes_max < self.nodes_min {
            return bad("need 1 <= nodes_min <= nodes_max".into());
        }
        if self.instances == 0 {
            return bad("instances must be positive".into());
        }
        if !(self.node_interarrival_seconds.is_finite() && self.node_interarrival_seconds > 0.0) {
            return bad("node_interarrival_seconds must be positive".into());
        }
        if !self.optimum_value.is_finite() {
            return bad("optimum_value must be finite".into());
        }
        Ok(())
    }

    pub fn heuristic_index(&self, id: &HeuristicId) -> Option<usize> {
        self.heuristics.iter().position(|h| &h.id == id)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LatentOutcome {
    pub succeeds: bool,
    /// Iterations needed on success; iterations executed (the cap) on failure.
    pub iterations: u64,
    /// Objective value of the solution found, if any.
    pub quality: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimInstance {
    pub seed: u64,
    pub config: SimConfig,
    pub nodes: Vec<NodeId>,
    /// `outcomes[node][heuristic]`, heuristics in config order.
    pub outcomes: Vec<Vec<LatentOutcome>>,
}

/// Independent stream per (instance seed, node, heuristic), so outcomes do not
/// depend on declaration order.
fn cell_rng(seed: u64, node: usize, heuristic: &HeuristicId) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update((node as u64).to_le_bytes());
    hasher.update(heuristic.as_str().as_bytes());
    ChaCha8Rng::from_seed(hasher.finalize().into())
}

/// Inverse-CDF draw of a geometric variable conditioned on `<= cap`.
pub fn truncated_geometric(u: f64, rate: f64, cap: u64) -> u64 {
    if rate >= 1.0 {
        return 1;
    }
    let log_fail = (1.0 - rate).ln();
    let mass = 1.0 - (cap as f64 * log_fail).exp();
    let k = ((1.0 - u * mass).ln() / log_fail).ceil();
    (k as u64).clamp(1, cap)
}

pub fn generate_instance(cfg: &SimConfig, seed: u64) -> Result<SimInstance> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let count = rng.random_range(cfg.nodes_min..=cfg.nodes_max);
    let nodes = (0..count)
        .map(|k| NodeId::new(format!("s{seed}-n{k}")))
        .collect::<Result<Vec<_>>>()?;
    let scale = cfg.optimum_value.abs().max(1.0);
    let outcomes = (0..count)
        .map(|k| {
            cfg.heuristics
                .iter()
                .map(|h| {
                    let mut r = cell_rng(seed, k, &h.id);
                    let succeeds = r.random::<f64>() < h.success_probability;
                    let u_iter = r.random::<f64>();
                    let u_quality = r.random::<f64>();
                    if succeeds {
                        LatentOutcome {
                            succeeds,
                            iterations: truncated_geometric(u_iter, h.geometric_rate, h.max_iterations),
                            quality: Some(cfg.optimum_value + u_quality * h.quality_spread * scale),
                        }
                    } else {
                        LatentOutcome {
                            succeeds,
                            iterations: h.max_iterations,
                            quality: None,
                        }
                    }
                })
                .collect()
        })
        .collect();
    Ok(SimInstance {
        seed,
        config: cfg.clone(),
        nodes,
        outcomes,
    })
}

/// Records every heuristic at every node, independent of any call order.
pub fn collect_shadow_dataset(instances: &[SimInstance]) -> Result<Dataset> {
    let Some(first) = instances.first() else {
        return Dataset::new(Vec::new(), Vec::new(), Vec::new());
    };
    let heuristics: Vec<HeuristicId> = first.config.heuristics.iter().map(|h| h.id.clone()).collect();
    let mut nodes = Vec::new();
    let mut seen = HashSet::new();
    let mut observations = Vec::new();
    for inst in instances {
        let ids: HashSet<&HeuristicId> = inst.config.heuristics.iter().map(|h| &h.id).collect();
        if ids.len() != heuristics.len() || heuristics.iter().any(|h| !ids.contains(h)) {
            return Err(Error::InvalidConfig(format!(
                "instance with seed {} uses a different heuristic set",
                inst.seed
            )));
        }
        for (k, node) in inst.nodes.iter().enumerate() {
            if !seen.insert(node.clone()) {
                return Err(Error::Invalid(format!("duplicate node id `{node}` across instances")));
            }
            nodes.push(node.clone());
            for h in &heuristics {
                let hi = inst.config.heuristic_index(h).expect("checked above");
                let hs = &inst.config.heuristics[hi];
                let o = inst.outcomes[k][hi];
                observations.push(Observation::new(
                    h.clone(),
                    node.clone(),
                    o.succeeds.then_some(o.iterations),
                    o.iterations,
                    Some(o.iterations as f64 * hs.seconds_per_iteration),
                )?);
            }
        }
    }
    Dataset::new(heuristics, nodes, observations)
}

#[derive(Clone, Debug, PartialEq)]
pub struct NodeRecord {
    pub node: NodeId,
    /// Heuristics called at the node and the iterations each spent.
    pub tries: Vec<(HeuristicId, u64)>,
    /// 1-based schedule position that produced a new incumbent.
    pub success_position: Option<usize>,
    pub heuristic_seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    pub records: Vec<NodeRecord>,
    pub timeline: IncumbentTimeline,
}

/// Runs the heuristic loop with `s` at every node until `time_limit`.
///
/// A success ends the loop at a node only if it improves the incumbent.
pub fn run_with_schedule(inst: &SimInstance, s: &Schedule, time_limit: f64) -> Result<RunTrace> {
    if !(time_limit.is_finite() && time_limit > 0.0) {
        return Err(Error::InvalidTimeLimit(time_limit));
    }
    let cfg = &inst.config;
    let plan = s
        .entries()
        .iter()
        .map(|e| {
            cfg.heuristic_index(&e.heuristic)
                .map(|h| (h, e.budget))
                .ok_or_else(|| Error::UnknownHeuristic(e.heuristic.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut clock = 0.0;
    let mut incumbent: Option<f64> = None;
    let mut events = Vec::new();
    let mut records = Vec::new();
    for (k, node) in inst.nodes.iter().enumerate() {
        clock += cfg.node_interarrival_seconds;
        if clock > time_limit {
            break;
        }
        let start = clock;
        let mut tries = Vec::with_capacity(plan.len());
        let mut success_position = None;
        for (j, &(h, budget)) in plan.iter().enumerate() {
            let hs = &cfg.heuristics[h];
            let o = inst.outcomes[k][h];
            let spent = budget.min(o.iterations);
            clock += spent as f64 * hs.seconds_per_iteration;
            tries.push((hs.id.clone(), spent));
            if !(o.succeeds && o.iterations <= budget) {
                continue;
            }
            let quality = o.quality.expect("successful outcomes carry a quality");
            if incumbent.is_none_or(|inc| quality < inc) {
                incumbent = Some(quality);
                if clock <= time_limit {
                    events.push((clock, quality));
                }
                success_position = Some(j + 1);
                break;
            }
        }
        records.push(NodeRecord {
            node: node.clone(),
            tries,
            success_position,
            heuristic_seconds: clock - start,
        });
    }
    let timeline = IncumbentTimeline::new(events, cfg.optimum_value, Sense::Min)?;
    Ok(RunTrace { records, timeline })
}

/// Registration-order schedule with every heuristic at its iteration cap.
pub fn baseline_from_config(cfg: &SimConfig) -> Schedule {
    Schedule::new(
        cfg.heuristics
            .iter()
            .map(|h| ScheduleEntry {
                heuristic: h.id.clone(),
                budget: h.max_iterations,
            })
            .collect(),
    )
    .expect("config heuristics are unique")
}

/// Registration-order schedule with every heuristic at its largest breakpoint;
/// heuristics that never succeed are left out.
pub fn baseline_from_dataset(d: &Dataset) -> Schedule {
    Schedule::new(
        (0..d.num_heuristics())
            .filter(|&h| d.max_tau(h) > 0)
            .map(|h| ScheduleEntry {
                heuristic: d.heuristics()[h].clone(),
                budget: d.max_tau(h),
            })
            .collect(),
    )
    .expect("dataset heuristics are unique")
}

#[derive(Clone, Debug, PartialEq)]
pub struct SeedComparison {
    pub seed: u64,
    pub schedule_integral: f64,
    pub baseline_integral: f64,
    pub ratio: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub rows: Vec<SeedComparison>,
    pub mean_ratio: f64,
    pub std_ratio: f64,
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

pub fn format_mean_std(mean: f64, std: f64) -> String {
    format!("{} ± {}", sig6(mean), sig6(std))
}

impl ComparisonReport {
    pub fn cell(&self) -> String {
        format_mean_std(self.mean_ratio, self.std_ratio)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("seed,schedule_integral,baseline_integral,ratio\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{}",
                r.seed,
                sig6(r.schedule_integral),
                sig6(r.baseline_integral),
                sig6(r.ratio)
            )
            .unwrap();
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:>12}  {:>14}  {:>14}  {:>10}\n",
            "seed", "schedule P(T)", "baseline P(T)", "ratio"
        );
        for r in &self.rows {
            writeln!(
                out,
                "{:>12}  {:>14}  {:>14}  {:>10}",
                r.seed,
                sig6(r.schedule_integral),
                sig6(r.baseline_integral),
                sig6(r.ratio)
            )
            .unwrap();
        }
        writeln!(out, "relative primal integral: {}", self.cell()).unwrap();
        out
    }
}

/// Primal integral of `s` relative to `baseline` on fresh instances, one per seed.
pub fn compare_policies(
    cfg: &SimConfig,
    seeds: &[u64],
    s: &Schedule,
    baseline: &Schedule,
    time_limit: f64,
) -> Result<ComparisonReport> {
    if seeds.is_empty() {
        return Err(Error::Invalid("at least one seed is required".into()));
    }
    let mut rows = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let inst = generate_instance(cfg, seed)?;
        let ps = primal_integral(&run_with_schedule(&inst, s, time_limit)?.timeline, time_limit)?;
        let pb = primal_integral(&run_with_schedule(&inst, baseline, time_limit)?.timeline, time_limit)?;
        let ratio = if ps == pb { 1.0 } else { ps / pb };
        rows.push(SeedComparison {
            seed,
            schedule_integral: ps,
            baseline_integral: pb,
            ratio,
        });
    }
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let (mean_ratio, std_ratio) = mean_std(&ratios);
    Ok(ComparisonReport {
        rows,
        mean_ratio,
        std_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const THREE: &str = "\
name = three
nodes_min = 5
nodes_max = 5
node_interarrival_seconds = 0.5
optimum_value = 100
heuristic.dive.class = diving
heuristic.dive.success_probability = 0.6
heuristic.dive.geometric_rate = 0.3
heuristic.dive.max_iterations = 20
heuristic.dive.seconds_per_iteration = 2.0
heuristic.rens.class = lns
heuristic.rens.success_probability = 0.4
heuristic.rens.geometric_rate = 0.1
heuristic.rens.max_iterations = 50
heuristic.rens.seconds_per_iteration = 0.5
heuristic.frac.success_probability = 0.5
heuristic.frac.geometric_rate = 0.5
heuristic.frac.max_iterations = 10
heuristic.frac.seconds_per_iteration = 0.1
";

    fn cfg() -> SimConfig {
        SimConfig::parse(THREE).unwrap()
    }

    #[test]
    fn config_round_trip_and_errors() {
        let c = cfg();
        assert_eq!(c.heuristics.len(), 3);
        assert_eq!(c.heuristics[1].class, HeuristicClass::Lns);
        assert_eq!(SimConfig::parse(&c.to_text()).unwrap(), c);
        assert!(SimConfig::parse("bogus = 1").is_err());
        assert!(SimConfig::parse("heuristic.a.success_probability = 0.5").is_err());
        let bad_prob = THREE.replace("= 0.6", "= 1.5");
        assert!(SimConfig::parse(&bad_prob).is_err());
    }

    #[test]
    fn zero_success_means_all_fail() {
        let mut c = cfg();
        for h in &mut c.heuristics {
            h.success_probability = 0.0;
        }
        let inst = generate_instance(&c, 3).unwrap();
        assert!(inst.outcomes.iter().flatten().all(|o| !o.succeeds));
        let d = collect_shadow_dataset(&[inst]).unwrap();
        assert!((0..d.num_heuristics()).all(|h| d.breakpoints_of(h).is_empty()));
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(generate_instance(&cfg(), 7).unwrap(), generate_instance(&cfg(), 7).unwrap());
        assert_ne!(generate_instance(&cfg(), 7).unwrap(), generate_instance(&cfg(), 8).unwrap());
    }

    #[test]
    fn unit_rate_needs_one_iteration() {
        let mut c = cfg();
        for h in &mut c.heuristics {
            h.geometric_rate = 1.0;
            h.success_probability = 1.0;
        }
        let inst = generate_instance(&c, 1).unwrap();
        assert!(inst.outcomes.iter().flatten().all(|o| o.succeeds && o.iterations == 1));
    }

    #[test]
    fn truncated_geometric_stays_in_range() {
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            let k = truncated_geometric(u, 0.05, 30);
            assert!((1..=30).contains(&k));
        }
        assert_eq!(truncated_geometric(0.0, 0.5, 10), 1);
        assert_eq!(truncated_geometric(0.999_999, 0.5, 10), 10);
    }

    #[test]
    fn shadow_dataset_counts_and_durations() {
        let insts: Vec<_> = [1, 2].iter().map(|&s| generate_instance(&cfg(), s).unwrap()).collect();
        let d = collect_shadow_dataset(&insts).unwrap();
        assert_eq!(d.num_nodes(), 10);
        assert_eq!(d.observations().len(), 30);
        for o in d.observations() {
            let spi = cfg().heuristics[cfg().heuristic_index(&o.heuristic).unwrap()].seconds_per_iteration;
            assert_eq!(o.duration_seconds, Some(o.iterations_executed as f64 * spi));
        }
        assert!(collect_shadow_dataset(&[insts[0].clone(), insts[0].clone()]).is_err());
    }

    #[test]
    fn duration_is_iterations_times_cost() {
        let mut c = cfg();
        c.heuristics.truncate(1);
        c.heuristics[0].seconds_per_iteration = 2.0;
        c.heuristics[0].success_probability = 1.0;
        let mut inst = generate_instance(&c, 5).unwrap();
        inst.outcomes[0][0].iterations = 7;
        let d = collect_shadow_dataset(&[inst]).unwrap();
        assert_eq!(d.observations()[0].duration_seconds, Some(14.0));
    }

    #[test]
    fn empty_schedule_has_no_events() {
        let inst = generate_instance(&cfg(), 1).unwrap();
        let trace = run_with_schedule(&inst, &Schedule::empty(), 50.0).unwrap();
        assert!(trace.timeline.events().is_empty());
        assert_eq!(primal_integral(&trace.timeline, 50.0).unwrap(), 50.0);
    }

    #[test]
    fn first_event_clock() {
        let mut c = cfg();
        c.heuristics[2].success_probability = 1.0;
        c.heuristics[2].geometric_rate = 1.0;
        let inst = generate_instance(&c, 1).unwrap();
        let s = Schedule::from_pairs(&[("frac", 5)]).unwrap();
        let trace = run_with_schedule(&inst, &s, 50.0).unwrap();
        let (t, _) = trace.timeline.events()[0];
        assert!((t - (0.5 + 0.1)).abs() < 1e-12);
        assert_eq!(trace.records[0].success_position, Some(1));
    }

    #[test]
    fn all_miss_costs_full_budget() {
        let mut c = cfg();
        for h in &mut c.heuristics {
            h.success_probability = 1.0;
            h.geometric_rate = 0.01;
        }
        let mut inst = generate_instance(&c, 2).unwrap();
        for row in &mut inst.outcomes {
            for o in row.iter_mut() {
                o.iterations = o.iterations.max(5);
            }
        }
        let s = Schedule::from_pairs(&[("dive", 4), ("frac", 4)]).unwrap();
        let trace = run_with_schedule(&inst, &s, 1e6).unwrap();
        assert!(trace.timeline.events().is_empty());
        for r in &trace.records {
            assert!((r.heuristic_seconds - (4.0 * 2.0 + 4.0 * 0.1)).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_heuristic_in_schedule() {
        let inst = generate_instance(&cfg(), 1).unwrap();
        let s = Schedule::from_pairs(&[("nope", 1)]).unwrap();
        assert!(matches!(run_with_schedule(&inst, &s, 10.0), Err(Error::UnknownHeuristic(_))));
    }

    #[test]
    fn identical_policies_ratio_one() {
        let c = cfg();
        let s = baseline_from_config(&c);
        let r = compare_policies(&c, &[1, 2, 3], &s, &s, 100.0).unwrap();
        assert!(r.rows.iter().all(|x| x.ratio == 1.0));
        assert_eq!(r.std_ratio, 0.0);
        assert!(compare_policies(&c, &[], &s, &s, 100.0).is_err());
    }

    #[test]
    fn empty_baseline_loses() {
        let c = cfg();
        let s = baseline_from_config(&c);
        let r = compare_policies(&c, &[1, 2, 3, 4], &s, &Schedule::empty(), 200.0).unwrap();
        for row in &r.rows {
            assert_eq!(row.baseline_integral, 200.0);
            assert!(row.ratio < 1.0);
        }
    }

    #[test]
    fn replay_matches_normalized_node_cost() {
        let c = cfg();
        let inst = generate_instance(&c, 11).unwrap();
        let d = collect_shadow_dataset(std::slice::from_ref(&inst)).unwrap();
        let costs = crate::dataset::avg_iteration_cost(&d);
        let s = Schedule::from_pairs(&[("frac", 3), ("dive", 5), ("rens", 20)]).unwrap();
        let trace = run_with_schedule(&inst, &s, 1e9).unwrap();
        let mut compared = 0;
        for r in &trace.records {
            let nc = crate::schedule::node_cost(&s, &d, &r.node, &costs, true).unwrap();
            // a success that fails to improve the incumbent keeps the loop going
            if nc.first_success_position != r.success_position {
                continue;
            }
            let expected = if nc.first_success_position.is_some() { nc.cost } else { nc.cost - 1.0 };
            assert!((r.heuristic_seconds - expected).abs() < 1e-9);
            compared += 1;
        }
        assert!(compared >= 1);
        assert!(trace.records[0].success_position.is_some() || compared == trace.records.len());
    }

    #[test]
    fn mean_and_sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[0.7]), (0.7, 0.0));
    }
}
