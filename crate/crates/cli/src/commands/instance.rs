//! `instance cycle` and `instance mixture`.

use std::fs;
use std::path::Path;

use anyhow::{Context as _, Result};
use pairwise_ot::dist::RawDistribution;
use pairwise_ot::ratio::{cycle_instance, grid_boundary_walk, mixture_instance, Instance};
use serde_json::json;

use crate::io::{load_space, LoadedSpace};
use crate::output::{fmt_num, Cell};
use crate::{Session, CycleArgs, MixtureArgs};

pub fn cycle(ctx: &Session, args: &CycleArgs) -> Result<()> {
    let loaded = load_space(&args.space)?;
    let inst = cycle_instance(&loaded.space, &args.points)?;
    emit(ctx, &loaded, &inst, args.emit_dir.as_deref())
}

pub fn mixture(ctx: &Session, args: &MixtureArgs) -> Result<()> {
    let loaded = load_space(&args.space)?;
    let points = if args.grid_walk {
        grid_boundary_walk(&loaded.space)?
    } else {
        args.points.clone()
    };
    let inst = mixture_instance(&loaded.space, &points)?;
    emit(ctx, &loaded, &inst, args.emit_dir.as_deref())
}

/// One row per member: its support, masses on the support and the lower
/// bound. With `dir`, also writes `space.json`, `dist_<i>.json` and an
/// `instance.json` that the `sketch` subcommand and `ratio --dists` accept.
fn emit(ctx: &Session, loaded: &LoadedSpace, inst: &Instance, dir: Option<&Path>) -> Result<()> {
    if let Some(dir) = dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let write = |name: &str, value: serde_json::Value| -> Result<()> {
            let path = dir.join(name);
            fs::write(&path, serde_json::to_string_pretty(&value)? + "\n")
                .with_context(|| format!("cannot write {}", path.display()))
        };
        write("space.json", serde_json::to_value(&loaded.raw)?)?;
        let mut names = Vec::with_capacity(inst.collection.len());
        for (i, p) in inst.collection.iter().enumerate() {
            let name = format!("dist_{i}.json");
            let raw = RawDistribution {
                space: Some("space.json".into()),
                ..p.to_raw()
            };
            write(&name, serde_json::to_value(raw)?)?;
            names.push(name);
        }
        write(
            "instance.json",
            json!({"space": "space.json", "dists": names, "lower_bound": inst.lower_bound}),
        )?;
    }
    let mut out = ctx.table(&["dist", "support", "mass", "lower_bound"])?;
    for (i, p) in inst.collection.iter().enumerate() {
        let support = p.support();
        let joined = |v: Vec<String>| Cell::Text(v.join(" "));
        out.row(&[
            i.into(),
            joined(support.iter().map(usize::to_string).collect()),
            joined(support.iter().map(|&x| fmt_num(p.get(x))).collect()),
            inst.lower_bound.into(),
        ])?;
    }
    out.finish()
}
