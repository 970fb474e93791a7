use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, ValueEnum};
use ofdma_core::OfdmaInstance;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{self, parse_range, InputError, EXIT_OK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenObjective {
    MinPower,
    Utility,
    Both,
}

/// Everything that determines a generated ensemble. Each range is sampled
/// log-uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    #[serde(rename = "K")]
    pub num_users: usize,
    #[serde(rename = "N")]
    pub num_subcarriers: usize,
    pub gain: (f64, f64),
    pub noise: (f64, f64),
    pub subcarrier_budget: (f64, f64),
    pub rate_target: (f64, f64),
    pub user_budget: (f64, f64),
    pub objective: GenObjective,
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[arg(long)]
    pub k: usize,

    #[arg(long)]
    pub n: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of instances; more than one writes a directory.
    #[arg(long, default_value_t = 1)]
    pub count: usize,

    #[arg(long, value_enum, default_value_t = GenObjective::MinPower)]
    pub objective: GenObjective,

    #[arg(long, default_value = "0.1:10", value_parser = parse_range)]
    pub gain: (f64, f64),

    #[arg(long, default_value = "0.1:1", value_parser = parse_range)]
    pub noise: (f64, f64),

    /// Per-subcarrier power budgets.
    #[arg(long, default_value = "1:5", value_parser = parse_range)]
    pub budget: (f64, f64),

    #[arg(long, default_value = "0.5:3", value_parser = parse_range)]
    pub target: (f64, f64),

    #[arg(long, default_value = "1:10", value_parser = parse_range)]
    pub user_budget: (f64, f64),

    /// Output file, or directory when --count > 1.
    #[arg(long)]
    pub out: PathBuf,
}

impl GenArgs {
    pub fn spec(&self) -> GenSpec {
        GenSpec {
            num_users: self.k,
            num_subcarriers: self.n,
            gain: self.gain,
            noise: self.noise,
            subcarrier_budget: self.budget,
            rate_target: self.target,
            user_budget: self.user_budget,
            objective: self.objective,
            seed: self.seed,
        }
    }
}

fn log_uniform(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        return lo;
    }
    rng.gen_range(lo.ln()..hi.ln()).exp()
}

impl GenSpec {
    pub fn check(&self) -> Result<()> {
        if self.num_users == 0 || self.num_subcarriers == 0 {
            return Err(InputError("K and N must be positive".into()).into());
        }
        for (name, (lo, hi)) in [
            ("gain", self.gain),
            ("noise", self.noise),
            ("subcarrier_budget", self.subcarrier_budget),
            ("rate_target", self.rate_target),
            ("user_budget", self.user_budget),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(InputError(format!("{name} range must satisfy 0 < lo <= hi")).into());
            }
        }
        Ok(())
    }

    /// Instance `index` of the ensemble; each index has its own stream of
    /// the seeded generator.
    pub fn instance(&self, index: u64) -> OfdmaInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        let (k, n) = (self.num_users, self.num_subcarriers);
        let mut matrix = |range| -> Vec<Vec<f64>> {
            (0..k).map(|_| (0..n).map(|_| log_uniform(&mut rng, range)).collect()).collect()
        };
        let direct_gain = matrix(self.gain);
        let noise = matrix(self.noise);
        let subcarrier_budget = matrix(self.subcarrier_budget);
        let mut vector = |range| -> Vec<f64> { (0..k).map(|_| log_uniform(&mut rng, range)).collect() };
        let rate_target = vector(self.rate_target);
        let user_budget = vector(self.user_budget);
        OfdmaInstance {
            num_users: k,
            num_subcarriers: n,
            direct_gain,
            noise,
            subcarrier_budget,
            user_budget: (self.objective != GenObjective::MinPower).then_some(user_budget),
            rate_target: (self.objective != GenObjective::Utility).then_some(rate_target),
        }
    }
}

pub fn instance_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("instance-{index:04}.json"))
}

pub fn write_ensemble(spec: &GenSpec, count: usize, out: &Path) -> Result<Vec<PathBuf>> {
    spec.check()?;
    if count == 1 {
        io::write_json(out, &spec.instance(0))?;
        return Ok(vec![out.to_path_buf()]);
    }
    io::write_json(&out.join("gen-spec.json"), spec)?;
    (0..count)
        .map(|i| {
            let path = instance_path(out, i);
            io::write_json(&path, &spec.instance(i as u64))?;
            Ok(path)
        })
        .collect()
}

pub fn run(a: &GenArgs) -> Result<u8> {
    let paths = write_ensemble(&a.spec(), a.count, &a.out)?;
    println!("wrote {} instance(s) to {}", paths.len(), a.out.display());
    Ok(EXIT_OK)
}
