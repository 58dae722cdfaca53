use heursched_core::dataset::{avg_iteration_cost, Dataset, HeuristicId, IterationCostProfile, NodeId, Observation};
use heursched_core::metrics::{gap_function, primal_gap, primal_integral, IncumbentTimeline, Sense};
use heursched_core::schedule::{evaluate, node_cost, Schedule, ScheduleEntry};
use heursched_core::sim::{collect_shadow_dataset, generate_instance, SimConfig};
use heursched_core::{build_schedule, build_schedule_with_costs, solve_exact, ExactLimits, GreedyOptions};
use proptest::prelude::*;

fn table() -> impl Strategy<Value = Vec<Vec<Option<u64>>>> {
    (1usize..=4, 1usize..=7).prop_flat_map(|(nh, nn)| {
        prop::collection::vec(
            prop::collection::vec(prop::option::weighted(0.7, 1u64..=6), nn),
            nh,
        )
    })
}

fn dataset(taus: &[Vec<Option<u64>>]) -> Dataset {
    let hs: Vec<String> = (0..taus.len()).map(|h| format!("h{h}")).collect();
    let ns: Vec<String> = (0..taus[0].len()).map(|n| format!("N{n}")).collect();
    let hs: Vec<&str> = hs.iter().map(String::as_str).collect();
    let ns: Vec<&str> = ns.iter().map(String::as_str).collect();
    Dataset::from_tau_table(&hs, &ns, taus).unwrap()
}

fn timed(taus: &[Vec<Option<u64>>], durations: &[f64]) -> Vec<Observation> {
    let mut out = Vec::new();
    for (h, row) in taus.iter().enumerate() {
        for (n, tau) in row.iter().enumerate() {
            let executed = tau.unwrap_or(7);
            out.push(
                Observation::new(
                    HeuristicId::new(format!("h{h}")).unwrap(),
                    NodeId::new(format!("N{n}")).unwrap(),
                    *tau,
                    executed,
                    Some(executed as f64 * durations[h]),
                )
                .unwrap(),
            );
        }
    }
    out
}

fn some_schedule(d: &Dataset, picks: &[(usize, usize)]) -> Schedule {
    let mut entries: Vec<ScheduleEntry> = Vec::new();
    for &(h, b) in picks {
        let h = h % d.num_heuristics();
        let id = d.heuristics()[h].clone();
        if entries.iter().any(|e| e.heuristic == id) {
            continue;
        }
        entries.push(ScheduleEntry { heuristic: id, budget: 1 + b as u64 });
    }
    Schedule::new(entries).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn csv_round_trip_keeps_observations(taus in table()) {
        let d = dataset(&taus);
        let back = Dataset::from_csv(&d.to_csv()).unwrap();
        prop_assert_eq!(back, d);
    }

    #[test]
    fn breakpoints_are_sorted_observed_taus(taus in table()) {
        let d = dataset(&taus);
        for (h, row) in taus.iter().enumerate() {
            let bp = d.breakpoints_of(h);
            prop_assert!(bp.windows(2).all(|w| w[0] < w[1]));
            prop_assert!(bp.iter().all(|b| row.contains(&Some(*b))));
            prop_assert!(row.iter().flatten().all(|t| bp.contains(t)));
        }
    }

    #[test]
    fn avg_cost_ignores_observation_order(taus in table(), seed in any::<u64>()) {
        let durations: Vec<f64> = (0..taus.len()).map(|h| 0.1 * (h + 1) as f64).collect();
        let obs = timed(&taus, &durations);
        let d1 = Dataset::from_observations(obs.clone()).unwrap();
        let mut shuffled = obs;
        let len = shuffled.len();
        for i in 0..len {
            shuffled.swap(i, (seed as usize).wrapping_add(i * 7) % len);
        }
        let d2 = Dataset::new(d1.heuristics().to_vec(), d1.nodes().to_vec(), shuffled).unwrap();
        let (a, b) = (avg_iteration_cost(&d1), avg_iteration_cost(&d2));
        for h in 0..d1.num_heuristics() {
            prop_assert!((a.get(h) - b.get(h)).abs() <= 1e-12 * a.get(h));
        }
    }

    #[test]
    fn appending_never_loses_coverage(taus in table(), picks in prop::collection::vec((0usize..4, 0usize..6), 1..5)) {
        let d = dataset(&taus);
        let full = some_schedule(&d, &picks);
        let costs = IterationCostProfile::uniform(d.num_heuristics());
        let mut prefix = Schedule::empty();
        let mut prev = evaluate(&prefix, &d, 0.0, &costs, false).unwrap().solved_nodes;
        for e in full.entries() {
            prefix.push(e.heuristic.clone(), e.budget).unwrap();
            let now = evaluate(&prefix, &d, 0.0, &costs, false).unwrap().solved_nodes;
            prop_assert!(now >= prev);
            prev = now;
        }
    }

    #[test]
    fn node_cost_bounded_by_full_run(taus in table(), picks in prop::collection::vec((0usize..4, 0usize..6), 1..5)) {
        let d = dataset(&taus);
        let s = some_schedule(&d, &picks);
        let costs = IterationCostProfile::uniform(d.num_heuristics());
        let full: f64 = s.entries().iter().map(|e| e.budget as f64).sum();
        for n in d.nodes() {
            let o = node_cost(&s, &d, n, &costs, false).unwrap();
            prop_assert!(o.cost <= full + 1.0);
            prop_assert_eq!(o.cost == full + 1.0, o.first_success_position.is_none());
        }
    }

    #[test]
    fn unit_costs_match_unnormalized(taus in table(), picks in prop::collection::vec((0usize..4, 0usize..6), 0..5)) {
        let d = dataset(&taus);
        let s = some_schedule(&d, &picks);
        let costs = IterationCostProfile::uniform(d.num_heuristics());
        let a = evaluate(&s, &d, 0.5, &costs, false).unwrap();
        let b = evaluate(&s, &d, 0.5, &costs, true).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn later_budgets_do_not_matter_after_success(
        taus in table(),
        picks in prop::collection::vec((0usize..4, 0usize..6), 1..5),
        bump in 1u64..50,
    ) {
        let d = dataset(&taus);
        let s = some_schedule(&d, &picks);
        let costs = IterationCostProfile::uniform(d.num_heuristics());
        for n in d.nodes() {
            let o = node_cost(&s, &d, n, &costs, false).unwrap();
            let Some(j) = o.first_success_position else { continue };
            let mut mutated = s.clone();
            for k in j..s.len() {
                let b = s.entries()[k].budget + bump;
                mutated.set_budget(k, b).unwrap();
            }
            prop_assert_eq!(node_cost(&mutated, &d, n, &costs, false).unwrap(), o);
        }
    }

    #[test]
    fn greedy_steps_and_uniqueness(taus in table(), extension in any::<bool>()) {
        let d = dataset(&taus);
        let opts = GreedyOptions { allow_extension: extension, ..GreedyOptions::default() };
        let out = build_schedule(&d, opts).unwrap();
        let bound = d.num_nodes() + (0..d.num_heuristics()).map(|h| d.breakpoints_of(h).len()).sum::<usize>();
        prop_assert!(out.trace.steps.len() <= bound);
        prop_assert!(out.trace.steps.iter().all(|s| s.newly_solved > 0));
        let mut ids: Vec<_> = out.schedule.entries().iter().map(|e| e.heuristic.clone()).collect();
        ids.sort();
        ids.dedup();
        prop_assert_eq!(ids.len(), out.schedule.len());
        let total: usize = out.trace.steps.iter().map(|s| s.newly_solved).sum();
        prop_assert_eq!(total, out.evaluation.solved_nodes);
    }

    #[test]
    fn greedy_ignores_uniform_cost_scaling(taus in table(), factor in 0.01f64..100.0) {
        let d = dataset(&taus);
        let durations: Vec<f64> = (0..d.num_heuristics()).map(|h| [0.3, 1.7, 0.05, 2.2][h]).collect();
        let base = IterationCostProfile::from_values(durations).unwrap();
        let opts = GreedyOptions { normalize_costs: true, ..GreedyOptions::default() };
        let a = build_schedule_with_costs(&d, opts, &base).unwrap();
        let b = build_schedule_with_costs(&d, opts, &base.scaled(factor)).unwrap();
        prop_assert_eq!(a.schedule, b.schedule);
    }

    #[test]
    fn single_heuristic_greedy_reaches_full_coverage(row in prop::collection::vec(prop::option::weighted(0.8, 1u64..=9), 1..10)) {
        let d = dataset(&[row]);
        let costs = IterationCostProfile::uniform(1);
        let out = build_schedule(&d, GreedyOptions::default()).unwrap();
        let bp = d.breakpoints_of(0);
        if bp.is_empty() {
            prop_assert!(out.schedule.is_empty());
            return Ok(());
        }
        let budget = out.schedule.entries()[0].budget;
        prop_assert_eq!(budget, *bp.last().unwrap());
        // among single-entry schedules with the same coverage it is the cheapest
        for &b in bp {
            let s = Schedule::new(vec![ScheduleEntry { heuristic: d.heuristics()[0].clone(), budget: b }]).unwrap();
            let e = evaluate(&s, &d, 0.0, &costs, false).unwrap();
            if e.solved_nodes >= out.evaluation.solved_nodes {
                prop_assert!(out.evaluation.objective <= e.objective);
            }
        }
    }

    #[test]
    fn exact_is_invariant_under_relabeling(taus in table(), alpha in prop::sample::select(vec![0.0, 0.5, 1.0])) {
        let d = dataset(&taus);
        let costs = IterationCostProfile::uniform(d.num_heuristics());
        let base = solve_exact(&d, alpha, &costs, false, ExactLimits::default()).unwrap();
        // reverse both heuristic and node order
        let flipped: Vec<Vec<Option<u64>>> = taus.iter().rev().map(|r| r.iter().rev().copied().collect()).collect();
        let d2 = dataset(&flipped);
        let other = solve_exact(&d2, alpha, &costs, false, ExactLimits::default()).unwrap();
        match (base, other) {
            (None, None) => {}
            (Some(a), Some(b)) => {
                prop_assert_eq!(a.objective, b.objective);
                prop_assert_eq!(a.schedule.len(), b.schedule.len());
            }
            _ => prop_assert!(false, "feasibility changed under relabeling"),
        }
    }

    #[test]
    fn gap_stays_in_unit_interval(a in -1e6f64..1e6, b in -1e6f64..1e6) {
        let g = primal_gap(a, b);
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert_eq!(primal_gap(a, a), 0.0);
    }

    #[test]
    fn integral_step_sum_matches_segments(
        raw in prop::collection::vec((0.01f64..5.0, 0.01f64..50.0), 0..8),
        horizon in 0.5f64..40.0,
    ) {
        let mut t = 0.0;
        let mut v = 200.0;
        let events: Vec<(f64, f64)> = raw.iter().map(|&(dt, dv)| { t += dt; v -= dv; (t, v) }).collect();
        let tl = IncumbentTimeline::new(events, v.min(-60.0), Sense::Min).unwrap();
        let p = primal_integral(&tl, horizon).unwrap();
        prop_assert!((0.0..=horizon).contains(&p));
        let area = gap_function(&tl).area(horizon);
        prop_assert!((p - area).abs() <= 1e-12 * p.max(1.0));
        prop_assert!(primal_integral(&tl, horizon + 1.0).unwrap() >= p);
    }
}

const PERMUTED: [&str; 2] = [
    "nodes_min = 4\nnodes_max = 6\n\
     heuristic.a.success_probability = 0.5\nheuristic.a.geometric_rate = 0.3\n\
     heuristic.a.max_iterations = 12\nheuristic.a.seconds_per_iteration = 0.2\n\
     heuristic.b.success_probability = 0.8\nheuristic.b.geometric_rate = 0.6\n\
     heuristic.b.max_iterations = 5\nheuristic.b.seconds_per_iteration = 0.05\n",
    "nodes_min = 4\nnodes_max = 6\n\
     heuristic.b.success_probability = 0.8\nheuristic.b.geometric_rate = 0.6\n\
     heuristic.b.max_iterations = 5\nheuristic.b.seconds_per_iteration = 0.05\n\
     heuristic.a.success_probability = 0.5\nheuristic.a.geometric_rate = 0.3\n\
     heuristic.a.max_iterations = 12\nheuristic.a.seconds_per_iteration = 0.2\n",
];

#[test]
fn shadow_dataset_ignores_registration_order() {
    for seed in 0..20 {
        let a = collect_shadow_dataset(&[generate_instance(&SimConfig::parse(PERMUTED[0]).unwrap(), seed).unwrap()])
            .unwrap();
        let b = collect_shadow_dataset(&[generate_instance(&SimConfig::parse(PERMUTED[1]).unwrap(), seed).unwrap()])
            .unwrap();
        assert_eq!(a.nodes(), b.nodes());
        let mut oa = a.observations().to_vec();
        let mut ob = b.observations().to_vec();
        let key = |o: &Observation| (o.heuristic.clone(), o.node.clone());
        oa.sort_by_key(key);
        ob.sort_by_key(key);
        assert_eq!(oa, ob);
    }
}
