//! `ratio` and `bounds`.

use anyhow::Result;
use pairwise_ot::couplings::Coupling;
use pairwise_ot::ratio::{bound_calculator, estimate_ratio, estimate_truncated_ratio, BoundParams};
use pairwise_ot::SeedContext;

use crate::io::load_dists;
use crate::output::Cell;
use crate::{BoundsArgs, Session, RatioArgs};

/// One row per pair, then a `max` row repeating the maximizing pair.
pub fn ratio(ctx: &Session, args: &RatioArgs) -> Result<()> {
    let (loaded, dists) = load_dists(args.space.space.as_deref(), &args.dists)?;
    let space = &loaded.space;
    let coupling = Coupling::with_options(args.coupling.algo, space, args.coupling.options())?;
    let master = SeedContext::new(ctx.seed);
    let est = match args.truncate {
        Some(eta) => estimate_truncated_ratio(&coupling, space, &dists, eta, args.trials, &master)?,
        None => estimate_ratio(&coupling, space, &dists, args.trials, &master)?,
    };
    let mut out = ctx.table(&["row", "a", "b", "mean", "stderr", "c_star", "ratio", "ratio_stderr"])?;
    for pair in &est.pairs {
        out.row(&[
            "pair".into(),
            pair.a.into(),
            pair.b.into(),
            pair.mean.into(),
            pair.stderr.into(),
            pair.c_star.into(),
            pair.ratio.into(),
            pair.ratio_stderr.into(),
        ])?;
    }
    let worst = est.worst.map(|i| &est.pairs[i]);
    out.row(&[
        "max".into(),
        worst.map(|p| p.a).into(),
        worst.map(|p| p.b).into(),
        worst.map(|p| p.mean).into(),
        worst.map(|p| p.stderr).into(),
        worst.map(|p| p.c_star).into(),
        est.ratio.into(),
        est.ratio_stderr.into(),
    ])?;
    out.finish()
}

pub fn bounds(ctx: &Session, args: &BoundsArgs) -> Result<()> {
    let params = BoundParams {
        n: args.n,
        p: args.p.0,
        q: args.q,
        s: args.s,
        size: args.size,
        gamma: args.gamma,
        eta: args.eta,
    };
    let value = bound_calculator(args.kind, &params)?;
    let mut out = ctx.table(&["kind", "value"])?;
    out.row(&[Cell::Text(args.kind.to_string()), value.into()])?;
    out.finish()
}
