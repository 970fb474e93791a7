use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use ofdma_core::exact::ExactOptions;
use ofdma_core::reductions::{verify_reduction_roundtrip, RoundTrip, ThreeDMInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::io::{self, InputError, EXIT_BUDGET, EXIT_DISAGREEMENT, EXIT_OK};
use crate::reduce::variant_of;
use crate::{GadgetArgs, GlobalOpts};

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Directory of 3DM instance JSON files.
    #[arg(long, conflicts_with = "random")]
    pub dir: Option<PathBuf>,

    /// Number of random 3DM instances to draw instead.
    #[arg(long, requires = "seed")]
    pub random: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Largest random 3DM size; sizes are uniform in 2..=MAX_K.
    #[arg(long, default_value_t = 4)]
    pub max_k: usize,

    #[command(flatten)]
    pub gadget: GadgetArgs,
}

/// `count` instances with size uniform in `2..=max_k` and between `K` and
/// `K^2` triples.
pub fn random_ensemble(count: usize, seed: u64, max_k: usize) -> Result<Vec<(String, ThreeDMInstance)>> {
    if max_k < 2 {
        return Err(InputError(format!("--max-k must be at least 2, got {max_k}")).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let k = rng.gen_range(2..=max_k);
            let r = rng.gen_range(k..=k * k);
            Ok((format!("random-{i:04}"), ThreeDMInstance::random(&mut rng, k, r)?))
        })
        .collect()
}

pub fn read_dir(dir: &Path) -> Result<Vec<(String, ThreeDMInstance)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap_or_default().to_string_lossy().into_owned();
            Ok((name, io::read_json(&p)?))
        })
        .collect()
}

fn answer(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

pub fn run(a: &VerifyArgs, g: &GlobalOpts) -> Result<u8> {
    let ensemble = match (&a.dir, a.random) {
        (Some(dir), _) => read_dir(dir)?,
        (None, Some(count)) => random_ensemble(count, a.seed.expect("clap requires --seed"), a.max_k)?,
        (None, None) => return Err(InputError("give --dir DIR or --random COUNT --seed S".into()).into()),
    };
    let variant = variant_of(&a.gadget)?;
    let opts = ExactOptions { enum_budget: g.enum_budget, eps: g.eps };

    let results: Vec<ofdma_core::Result<RoundTrip>> = ensemble
        .par_iter()
        .map(|(_, tdm)| verify_reduction_roundtrip(tdm, variant, &opts))
        .collect();

    let (mut agree, mut disagree, mut skipped) = (0usize, 0usize, 0usize);
    for ((name, tdm), res) in ensemble.iter().zip(&results) {
        match res {
            Ok(rt) => {
                let verdict = if rt.agree { "agree" } else { "DISAGREE" };
                println!(
                    "{name}: K={} |R|={} 3dm={} ofdma={} {verdict}",
                    tdm.size(),
                    tdm.triples().len(),
                    answer(rt.tdm_answer),
                    answer(rt.ofdma_answer)
                );
                if rt.agree {
                    agree += 1;
                } else {
                    disagree += 1;
                }
            }
            Err(e @ (ofdma_core::Error::EnumerationBudgetExceeded { .. } | ofdma_core::Error::SizeBoundExceeded { .. })) => {
                println!("{name}: K={} |R|={} skipped: {e}", tdm.size(), tdm.triples().len());
                skipped += 1;
            }
            Err(e) => return Err(anyhow::Error::new(e.clone()).context(format!("verifying {name}"))),
        }
    }
    println!("verify: {} instances, {agree} agree, {disagree} disagree, {skipped} over budget", ensemble.len());
    Ok(if disagree > 0 {
        EXIT_DISAGREEMENT
    } else if skipped > 0 {
        EXIT_BUDGET
    } else {
        EXIT_OK
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ensemble_is_seeded_and_in_range() {
        let a = random_ensemble(30, 9, 4).unwrap();
        let b = random_ensemble(30, 9, 4).unwrap();
        assert_eq!(a, b);
        for (_, t) in &a {
            let k = t.size();
            assert!((2..=4).contains(&k));
            assert!((k..=k * k).contains(&t.triples().len()));
        }
        assert!(random_ensemble(1, 0, 1).is_err());
    }
}
