use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use ofdma_core::{OfdmaInstance, UtilityKind};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::generate::{GenObjective, GenSpec};
use crate::io::{self, InputError, EXIT_DISAGREEMENT, EXIT_OK};
use crate::solve::{check_report, solve_instance, Method, ObjectiveArg, SolveConfig};
use crate::GlobalOpts;

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Directory of instance JSON files.
    #[arg(long, conflicts_with_all = ["k", "n"])]
    pub dir: Option<PathBuf>,

    /// Generate the ensemble instead: users per instance.
    #[arg(long, requires = "n")]
    pub k: Option<usize>,

    /// Subcarriers per generated instance.
    #[arg(long, requires = "k")]
    pub n: Option<usize>,

    #[arg(long, default_value_t = 10)]
    pub count: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Methods to run on every instance, comma separated.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "auto")]
    pub methods: Vec<Method>,

    #[arg(long, value_enum, default_value_t = ObjectiveArg::Auto)]
    pub objective: ObjectiveArg,

    #[arg(long, default_value = "sum-rate")]
    pub utility: UtilityKind,

    /// Output CSV.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub method: String,
    /// A solve status, or `NotApplicable` / `Unverified`.
    pub status: String,
    pub value: Option<f64>,
    pub wall_time: f64,
}

fn load_dir(dir: &Path) -> Result<Vec<(String, OfdmaInstance)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .filter(|p| p.file_name().is_some_and(|f| f != "gen-spec.json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, io::read_json(&p)?))
        })
        .collect()
}

fn generated(k: usize, n: usize, count: usize, seed: u64, objective: ObjectiveArg) -> Result<Vec<(String, OfdmaInstance)>> {
    let spec = GenSpec {
        num_users: k,
        num_subcarriers: n,
        gain: (0.1, 10.0),
        noise: (0.1, 1.0),
        subcarrier_budget: (1.0, 5.0),
        rate_target: (0.5, 3.0),
        user_budget: (1.0, 10.0),
        objective: match objective {
            ObjectiveArg::Utility => GenObjective::Utility,
            _ => GenObjective::MinPower,
        },
        seed,
    };
    spec.check()?;
    Ok((0..count).map(|i| (format!("instance-{i:04}"), spec.instance(i as u64))).collect())
}

pub fn bench_rows(
    ensemble: &[(String, OfdmaInstance)],
    methods: &[Method],
    objective: ObjectiveArg,
    utility: UtilityKind,
    g: &GlobalOpts,
) -> Vec<BenchRow> {
    let jobs: Vec<(usize, usize)> = (0..ensemble.len())
        .flat_map(|i| (0..methods.len()).map(move |m| (i, m)))
        .collect();
    jobs.par_iter()
        .map(|&(i, m)| {
            let (name, inst) = &ensemble[i];
            let cfg = SolveConfig { method: methods[m], objective, utility, weights: None };
            match solve_instance(inst, &cfg, g) {
                Ok(r) => {
                    let status = if check_report(inst, &r).is_empty() {
                        r.status.to_string()
                    } else {
                        "Unverified".into()
                    };
                    BenchRow {
                        instance: name.clone(),
                        method: methods[m].to_string(),
                        status,
                        value: r.value,
                        wall_time: r.wall_time,
                    }
                }
                Err(_) => BenchRow {
                    instance: name.clone(),
                    method: methods[m].to_string(),
                    status: "NotApplicable".into(),
                    value: None,
                    wall_time: 0.0,
                },
            }
        })
        .collect()
}

/// Largest relative spread of the Optimal values reported for one instance.
pub fn max_spread(rows: &[BenchRow]) -> f64 {
    let mut worst = 0.0f64;
    for chunk in rows.chunk_by(|a, b| a.instance == b.instance) {
        let vals: Vec<f64> = chunk.iter().filter(|r| r.status == "Optimal").filter_map(|r| r.value).collect();
        if let (Some(lo), Some(hi)) = (
            vals.iter().copied().reduce(f64::min),
            vals.iter().copied().reduce(f64::max),
        ) {
            worst = worst.max((hi - lo) / hi.abs().max(1.0));
        }
    }
    worst
}

pub fn run(a: &BenchArgs, g: &GlobalOpts) -> Result<u8> {
    let ensemble = match (&a.dir, a.k, a.n) {
        (Some(dir), _, _) => load_dir(dir)?,
        (None, Some(k), Some(n)) => generated(k, n, a.count, a.seed, a.objective)?,
        _ => return Err(InputError("give --dir DIR or --k K --n N".into()).into()),
    };
    let rows = bench_rows(&ensemble, &a.methods, a.objective, a.utility, g);

    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    for r in &rows {
        w.serialize(r)?;
    }
    w.flush()?;

    let unverified = rows.iter().filter(|r| r.status == "Unverified").count();
    println!(
        "bench: {} instances x {} methods, max spread of optimal values {:.3e}, {unverified} unverified; wrote {}",
        ensemble.len(),
        a.methods.len(),
        max_spread(&rows),
        a.out.display()
    );
    Ok(if unverified > 0 { EXIT_DISAGREEMENT } else { EXIT_OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_methods_agree() {
        let g = GlobalOpts { eps: 1e-10, enum_budget: 100_000_000, c_bound: 4, workers: None };
        let ens = generated(3, 3, 8, 11, ObjectiveArg::MinPower).unwrap();
        let rows = bench_rows(&ens, &[Method::Assignment, Method::Exact], ObjectiveArg::MinPower, UtilityKind::SumRate, &g);
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| r.status == "Optimal" || r.status == "Infeasible"));
        assert!(rows.chunks(2).all(|c| c[0].status == c[1].status));
        assert!(max_spread(&rows) < 1e-8);
    }

    #[test]
    fn rows_are_ordered() {
        let g = GlobalOpts { eps: 1e-10, enum_budget: 100_000_000, c_bound: 4, workers: None };
        let ens = generated(2, 3, 4, 2, ObjectiveArg::MinPower).unwrap();
        let rows = bench_rows(&ens, &[Method::Exact, Method::Waterfill], ObjectiveArg::MinPower, UtilityKind::SumRate, &g);
        let names: Vec<_> = rows.iter().map(|r| (r.instance.as_str(), r.method.as_str())).collect();
        assert_eq!(names[0], ("instance-0000", "exact"));
        assert_eq!(names[1], ("instance-0000", "waterfill"));
        assert_eq!(rows[1].status, "NotApplicable");
    }
}
