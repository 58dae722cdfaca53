//! Small hand-built datasets used throughout the tests and examples.

use crate::dataset::Dataset;

/// Three heuristics on three nodes; greedy and optimum both give `<(h1,1),(h2,3)>`.
pub const WORKED_EXAMPLE_CSV: &str = "\
heuristic,node,iterations_to_solution,iterations_executed,duration_seconds
h1,N1,1,1,
h1,N2,inf,1,
h1,N3,inf,1,
h2,N1,4,4,
h2,N2,3,4,
h2,N3,3,4,
h3,N1,inf,4,
h3,N2,4,4,
h3,N3,2,4,
";

pub fn worked_example() -> Dataset {
    Dataset::from_csv(WORKED_EXAMPLE_CSV).expect("fixture parses")
}

/// One heuristic, 100 nodes: node 1 solved after one iteration, the rest after 100.
pub fn pathological() -> Dataset {
    let names: Vec<String> = (1..=100).map(|i| format!("N{i}")).collect();
    let nodes: Vec<&str> = names.iter().map(String::as_str).collect();
    let row = (1..=100)
        .map(|i| Some(if i == 1 { 1 } else { 100 }))
        .collect();
    Dataset::from_tau_table(&["h"], &nodes, &[row]).expect("fixture builds")
}
