use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use ofdma_core::reductions::{
    reduce_feasibility, reduce_feasibility_c, reduce_utility, reduce_utility_c, ReducedInstanceBundle, Role,
    ThreeDMInstance, Variant,
};
use ofdma_core::UtilityKind;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::io::{self, InputError, EXIT_OK};
use crate::{default_sidecar, GadgetArgs, VariantArg};

const INDEX_NOTE: &str = "users and subcarriers are 0-based; user x-1 is 3DM element x; \
subcarrier y-1 is element y of Y and subcarrier K1+z-1 is element z of Z, \
where K1 is the 3DM size; Type-II padding follows";

#[derive(Debug, Args)]
pub struct ReduceArgs {
    /// 3DM instance JSON: {"size": K, "triples": [[x, y, z], ...]}, 1-based.
    #[arg(long, conflicts_with = "random")]
    pub input: Option<PathBuf>,

    /// Draw a random 3DM instance of this size instead.
    #[arg(long, requires = "seed")]
    pub random: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of random triples (default: 2K).
    #[arg(long, requires = "random")]
    pub triples: Option<usize>,

    #[command(flatten)]
    pub gadget: GadgetArgs,

    /// Output instance JSON.
    #[arg(long)]
    pub out: PathBuf,

    /// Sidecar JSON (default: <out stem>.sidecar.json).
    #[arg(long)]
    pub sidecar: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub variant: Variant,
    pub c: String,
    pub threshold: Option<f64>,
    pub utility: Option<UtilityKind>,
    pub user_roles: Vec<Role>,
    pub subcarrier_roles: Vec<Role>,
    pub source: ThreeDMInstance,
    pub index_note: String,
}

pub fn variant_of(g: &GadgetArgs) -> Result<Variant> {
    let (num, den) = g.c;
    let is_two = num == 2 * den;
    Ok(match g.variant {
        VariantArg::Feasibility if !is_two => {
            return Err(InputError(format!(
                "the feasibility variant has c = 2, got {num}/{den}; use --variant feasibility-c"
            ))
            .into())
        }
        VariantArg::Feasibility => Variant::Feasibility,
        VariantArg::FeasibilityC => Variant::FeasibilityC { num, den },
        VariantArg::Utility if is_two => Variant::Utility { kind: g.utility },
        VariantArg::Utility => Variant::UtilityC { kind: g.utility, num, den },
    })
}

pub fn build_bundle(tdm: &ThreeDMInstance, variant: Variant) -> Result<ReducedInstanceBundle> {
    Ok(match variant {
        Variant::Feasibility => {
            let k = tdm.size();
            ReducedInstanceBundle {
                instance: reduce_feasibility(tdm),
                threshold: None,
                utility: None,
                user_roles: vec![Role::TypeI; k],
                subcarrier_roles: vec![Role::TypeI; 2 * k],
                source: tdm.clone(),
            }
        }
        Variant::FeasibilityC { num, den } => reduce_feasibility_c(tdm, num, den)?,
        Variant::Utility { kind } => reduce_utility(tdm, kind),
        Variant::UtilityC { kind, num, den } => reduce_utility_c(tdm, kind, num, den)?,
    })
}

pub fn run(a: &ReduceArgs) -> Result<u8> {
    let tdm = match (&a.input, a.random) {
        (Some(path), _) => io::read_json::<ThreeDMInstance>(path)?,
        (None, Some(k)) => {
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed.expect("clap requires --seed"));
            ThreeDMInstance::random(&mut rng, k, a.triples.unwrap_or(2 * k))?
        }
        (None, None) => return Err(InputError("give --input FILE or --random K --seed S".into()).into()),
    };
    let variant = variant_of(&a.gadget)?;
    let b = build_bundle(&tdm, variant)?;
    let sidecar = Sidecar {
        variant,
        c: format!("{}/{}", a.gadget.c.0, a.gadget.c.1),
        threshold: b.threshold,
        utility: b.utility,
        user_roles: b.user_roles,
        subcarrier_roles: b.subcarrier_roles,
        source: b.source,
        index_note: INDEX_NOTE.into(),
    };
    let sidecar_path = a.sidecar.clone().unwrap_or_else(|| default_sidecar(&a.out));
    io::write_json(&a.out, &b.instance)?;
    io::write_json(&sidecar_path, &sidecar)?;
    println!(
        "wrote {} (K = {}, N = {}) and {}",
        a.out.display(),
        b.instance.num_users,
        b.instance.num_subcarriers,
        sidecar_path.display()
    );
    Ok(EXIT_OK)
}
