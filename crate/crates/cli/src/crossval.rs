//! Train/test evaluation of greedy schedules across simulator configs.

use std::fmt::Write as _;

use heursched_core::numfmt::sig6;
use heursched_core::sim::{
    baseline_from_dataset, collect_shadow_dataset, compare_policies, format_mean_std, generate_instance, mean_std,
    SimConfig,
};
use heursched_core::{build_schedule, Error, GreedyOptions, Result, Schedule};
use sha2::{Digest, Sha256};

/// Seed of instance `instance` of config `config`, derived from the base seed.
pub fn instance_seed(base: u64, config: usize, instance: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(base.to_le_bytes());
    h.update((config as u64).to_le_bytes());
    h.update((instance as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Greedy schedule (cost-normalized) and the default baseline, both learned
/// from shadow data on the given instance seeds.
pub fn train(cfg: &SimConfig, seeds: &[u64]) -> Result<(Schedule, Schedule)> {
    let instances = seeds
        .iter()
        .map(|&s| generate_instance(cfg, s))
        .collect::<Result<Vec<_>>>()?;
    let d = collect_shadow_dataset(&instances)?;
    let opts = GreedyOptions {
        normalize_costs: true,
        ..GreedyOptions::default()
    };
    let schedule = build_schedule(&d, opts)?.schedule;
    Ok((schedule, baseline_from_dataset(&d)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CrossvalReport {
    pub names: Vec<String>,
    /// `cells[train][test]`
    pub cells: Vec<Vec<Cell>>,
    /// Absolute baseline primal integral per test config.
    pub baseline: Vec<Cell>,
}

fn cell(values: Vec<f64>) -> Cell {
    let (mean, std) = mean_std(&values);
    Cell {
        ratios: values,
        mean,
        std,
    }
}

/// Instance `i` of each config belongs to fold `i % folds`. Each matrix cell
/// trains on the other folds of the train config and tests on the held-out
/// fold of the test config; with one fold both use every instance.
pub fn crossval(configs: &[(String, SimConfig)], folds: usize, seed: u64, time_limit: f64) -> Result<CrossvalReport> {
    if configs.len() < 2 {
        return Err(Error::Invalid("crossval needs at least two configs".into()));
    }
    if folds == 0 {
        return Err(Error::Invalid("folds must be positive".into()));
    }
    for (name, cfg) in configs {
        if folds > cfg.instances {
            return Err(Error::Invalid(format!(
                "{folds} folds exceed the {} instances of config `{name}`",
                cfg.instances
            )));
        }
    }
    let fold_seeds = |c: usize, fold: usize, held_out: bool| -> Vec<u64> {
        (0..configs[c].1.instances)
            .filter(|i| folds == 1 || ((i % folds == fold) == held_out))
            .map(|i| instance_seed(seed, c, i))
            .collect()
    };

    let n = configs.len();
    let mut ratios = vec![vec![Vec::new(); n]; n];
    let mut baseline_pt = vec![Vec::new(); n];
    for (a, (_, train_cfg)) in configs.iter().enumerate() {
        for fold in 0..folds {
            let (schedule, baseline) = train(train_cfg, &fold_seeds(a, fold, false))?;
            for (b, (_, test_cfg)) in configs.iter().enumerate() {
                let report = compare_policies(test_cfg, &fold_seeds(b, fold, true), &schedule, &baseline, time_limit)?;
                for row in &report.rows {
                    ratios[a][b].push(row.ratio);
                    if a == 0 {
                        baseline_pt[b].push(row.baseline_integral);
                    }
                }
            }
        }
    }
    Ok(CrossvalReport {
        names: configs.iter().map(|(n, _)| n.clone()).collect(),
        cells: ratios.into_iter().map(|row| row.into_iter().map(cell).collect()).collect(),
        baseline: baseline_pt.into_iter().map(cell).collect(),
    })
}

impl CrossvalReport {
    pub fn to_table(&self) -> String {
        let cells: Vec<Vec<String>> = self
            .cells
            .iter()
            .map(|row| row.iter().map(|c| format_mean_std(c.mean, c.std)).collect())
            .collect();
        let base: Vec<String> = self.baseline.iter().map(|c| format_mean_std(c.mean, c.std)).collect();
        let first = self
            .names
            .iter()
            .map(|n| n.chars().count() + 7)
            .chain([16])
            .max()
            .unwrap_or(16);
        let width = cells
            .iter()
            .flatten()
            .chain(&base)
            .map(|s| s.chars().count())
            .chain(self.names.iter().map(|n| n.chars().count() + 6))
            .max()
            .unwrap_or(8);
        let mut out = String::from("relative primal integral (mean ± std), rows train, columns test\n");
        write!(out, "{:<first$}", "").unwrap();
        for name in &self.names {
            write!(out, "  {:>width$}", format!("test: {name}")).unwrap();
        }
        out.push('\n');
        for (name, row) in self.names.iter().zip(&cells) {
            write!(out, "{:<first$}", format!("train: {name}")).unwrap();
            for c in row {
                write!(out, "  {c:>width$}").unwrap();
            }
            out.push('\n');
        }
        write!(out, "{:<first$}", "baseline P(T)").unwrap();
        for c in &base {
            write!(out, "  {c:>width$}").unwrap();
        }
        out.push('\n');
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("train,test,mean,std,samples\n");
        for (a, row) in self.cells.iter().enumerate() {
            for (b, c) in row.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    self.names[a],
                    self.names[b],
                    sig6(c.mean),
                    sig6(c.std),
                    c.ratios.len()
                )
                .unwrap();
            }
        }
        for (b, c) in self.baseline.iter().enumerate() {
            writeln!(
                out,
                "baseline,{},{},{},{}",
                self.names[b],
                sig6(c.mean),
                sig6(c.std),
                c.ratios.len()
            )
            .unwrap();
        }
        out
    }
}
