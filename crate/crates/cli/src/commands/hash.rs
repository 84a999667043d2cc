//! `hash`: coupled samples of one distribution.

use anyhow::Result;
use pairwise_ot::couplings::Coupling;
use pairwise_ot::mc::{trial_seed, BLOCK};
use pairwise_ot::SeedContext;
use rayon::prelude::*;

use super::label;
use crate::io::load_dists;
use crate::{Session, HashArgs};

/// One hash under the master seed, or `--batch N` hashes under its trial
/// seeds streamed in trial order.
pub fn hash(ctx: &Session, args: &HashArgs) -> Result<()> {
    let (loaded, dists) = load_dists(args.space.space.as_deref(), std::slice::from_ref(&args.dist))?;
    let space = &loaded.space;
    let coupling = Coupling::with_options(args.coupling.algo, space, args.coupling.options())?;
    let p = &dists[0];
    coupling.validate(std::slice::from_ref(p))?;
    let master = SeedContext::new(ctx.seed);
    let mass = [p.mass()];
    let Some(batch) = args.batch else {
        let x = coupling.sample_masses(&mass, &master)[0];
        let mut out = ctx.table(&["point", "label"])?;
        out.row(&[x.into(), label(space, x)])?;
        return out.finish();
    };
    let mut out = ctx.table(&["trial", "point", "label"])?;
    for block in 0..batch.div_ceil(BLOCK) {
        let points: Vec<usize> = (block * BLOCK..((block + 1) * BLOCK).min(batch))
            .into_par_iter()
            .map(|t| coupling.sample_masses(&mass, &trial_seed(&master, t))[0])
            .collect();
        for (i, x) in points.into_iter().enumerate() {
            out.row(&[(block * BLOCK + i as u64).into(), x.into(), label(space, x)])?;
        }
    }
    out.finish()
}
