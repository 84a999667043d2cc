//! `emd`, `dpc` and `ultrametric`.

use anyhow::Result;
use pairwise_ot::mc::Moments;
use pairwise_ot::poisson::{dpc_closed_form, dpc_empirical};
use pairwise_ot::spfr::build_minimax_ultrametric;
use pairwise_ot::{emd_exact, tv_distance, SeedContext};
use serde_json::json;

use crate::io::{load_dists, load_space};
use crate::output::{write_document, Format};
use crate::{Session, DpcArgs, EmdArgs, UltrametricArgs};

pub fn emd(ctx: &Session, args: &EmdArgs) -> Result<()> {
    let (loaded, dists) = load_dists(args.space.space.as_deref(), &[args.p.clone(), args.q.clone()])?;
    let space = &loaded.space;
    let result = emd_exact(&dists[0], &dists[1], space)?;
    if let Some(path) = &args.plan {
        let entries: Vec<_> = result
            .plan
            .entries()
            .map(|(x, y, m)| json!({"x": x, "y": y, "x_label": space.label(x), "y_label": space.label(y), "mass": m}))
            .collect();
        write_document(Some(path), ctx.metadata(), json!({"value": result.value, "plan": entries}))?;
    }
    let mut out = ctx.table(&["value"])?;
    out.row(&[result.value.into()])?;
    out.finish()
}

pub fn dpc(ctx: &Session, args: &DpcArgs) -> Result<()> {
    let (_, dists) = load_dists(args.space.space.as_deref(), &[args.p.clone(), args.q.clone()])?;
    let (p, q) = (&dists[0], &dists[1]);
    let closed = dpc_closed_form(p, q)?;
    let tv = tv_distance(p, q)?;
    let empirical: Option<Moments> = args
        .empirical
        .map(|trials| dpc_empirical(p, q, trials, &SeedContext::new(ctx.seed)))
        .transpose()?;
    let mut out = ctx.table(&["dpc", "tv", "empirical", "empirical_stderr", "trials"])?;
    out.row(&[
        closed.into(),
        tv.into(),
        empirical.as_ref().map(|m| m.mean(0)).into(),
        empirical.as_ref().map(|m| m.stderr(0)).into(),
        args.empirical.into(),
    ])?;
    out.finish()
}

/// Writes the ultrametric as a space file with `--format json`, or as a
/// distance table with CSV.
pub fn ultrametric(ctx: &Session, args: &UltrametricArgs) -> Result<()> {
    let loaded = load_space(&args.space)?;
    let u = build_minimax_ultrametric(&loaded.space)?;
    if ctx.format == Format::Json {
        return write_document(ctx.out.as_deref(), ctx.metadata(), serde_json::to_value(u.to_raw())?);
    }
    let mut out = ctx.table(&["x", "y", "dist"])?;
    for x in 0..u.len() {
        for y in 0..u.len() {
            out.row(&[x.into(), y.into(), u.dist(x, y).into()])?;
        }
    }
    out.finish()
}
