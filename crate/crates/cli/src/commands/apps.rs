//! `sketch`, `robust-demo`, `online` and `round-labels`.

use std::path::Path;

use anyhow::Result;
use pairwise_ot::apps::{
    circle_online_instance, greedy_closed_form, make_sketch, online_simulate, plan_product_distance,
    robust_demo_space, robust_plan, round_labels as round_once, rounding_moments, sketch_estimate, CircleVariant,
    LabelingInstance, Scheme, Task, TaskSequence,
};
use pairwise_ot::couplings::{Algo, Coupling};
use pairwise_ot::mc::trial_seed;
use pairwise_ot::ratio::{estimate_ratio, RatioEstimate};
use pairwise_ot::{emd_exact, CostSpace, DiscreteDistribution, SeedContext};
use serde_json::Value;

use crate::io::{dist_from_value, dists_from_value, field, invalid, read_json, space_from_value, typed_field};
use crate::output::Cell;
use crate::{Session, LabelArgs, OnlineArgs, RobustArgs, SketchArgs};

/// Sketches every distribution of the instance with `k = --trials` entries
/// and reports the estimate of each pair next to its exact cost.
pub fn sketch(ctx: &Session, args: &SketchArgs) -> Result<()> {
    let doc: Value = read_json(&args.instance)?;
    let file = args.instance.as_path();
    let space = space_from_value(field(&doc, "space")?, file, "space")?.space;
    let dists = dists_from_value(field(&doc, "dists")?, &space, file, "dists")?;
    let algo = match (args.algo, doc.get("algo")) {
        (Some(a), _) => a,
        (None, Some(_)) => typed_field::<Algo>(&doc, "algo")?,
        (None, None) => Algo::Metric,
    };
    let k = usize::try_from(args.trials).map_err(|_| invalid("trials", "too large for a sketch"))?;
    let coupling = Coupling::new(algo, &space)?;
    let sketches = dists
        .iter()
        .map(|p| make_sketch(&coupling, p, k, ctx.seed))
        .collect::<pairwise_ot::Result<Vec<_>>>()?;
    let mut out = ctx.table(&["a", "b", "estimate", "c_star"])?;
    for a in 0..dists.len() {
        for b in a + 1..dists.len() {
            let estimate = sketch_estimate(&sketches[a], &sketches[b], &space)?;
            let c_star = emd_exact(&dists[a], &dists[b], &space)?.value;
            out.row(&[a.into(), b.into(), estimate.into(), c_star.into()])?;
        }
    }
    out.finish()
}

fn quantity(out: &mut crate::output::Output, name: &str, value: impl Into<Cell>) -> Result<()> {
    out.row(&[name.into(), value.into()])
}

/// Robust plans of `(P, Q)` and `(P, Q')` from one coupling, compared with
/// the optimal plans of the same two problems.
pub fn robust(ctx: &Session, args: &RobustArgs) -> Result<()> {
    let (space, p, q, q2) = match &args.instance {
        Some(path) => {
            let doc: Value = read_json(path)?;
            let space = space_from_value(field(&doc, "space")?, path, "space")?.space;
            let p = dist_from_value(field(&doc, "p")?, &space, path, "p")?;
            let q = dist_from_value(field(&doc, "q")?, &space, path, "q")?;
            let q2 = dist_from_value(field(&doc, "q_prime")?, &space, path, "q_prime")?;
            (space, p, q, q2)
        }
        None => robust_demo_space(args.eps)?,
    };
    let coupling = Coupling::new(args.algo, &space)?;
    let master = SeedContext::new(ctx.seed);
    let g1 = robust_plan(&coupling, &p, &q, &space, args.trials, &master)?;
    let g2 = robust_plan(&coupling, &p, &q2, &space, args.trials, &master)?;
    let moved = plan_product_distance(&g1, &g2, &space)?;
    let est = estimate_ratio(&coupling, &space, &[p.clone(), q.clone(), q2.clone()], args.trials, &master)?;
    let perturbation = emd_exact(&q, &q2, &space)?.value;
    let o1 = emd_exact(&p, &q, &space)?.plan;
    let o2 = emd_exact(&p, &q2, &space)?.plan;
    let optimal_moved = plan_product_distance(&o1, &o2, &space)?;
    let mut out = ctx.table(&["quantity", "value"])?;
    quantity(&mut out, "perturbation", perturbation)?;
    quantity(&mut out, "robust_plan_distance", moved)?;
    quantity(&mut out, "optimal_plan_distance", optimal_moved)?;
    quantity(&mut out, "ratio", est.ratio)?;
    quantity(&mut out, "ratio_stderr", est.ratio_stderr)?;
    quantity(&mut out, "ratio_times_perturbation", est.ratio * perturbation)?;
    out.finish()
}

/// Reads `{"space", "initial", "tasks": [{"b", "dist"?}]}`. A task with
/// `b = t` is new and needs `dist`; `b < t` revisits task `b`; `b = -1`
/// stops.
fn load_online(path: &Path) -> Result<(CostSpace, TaskSequence)> {
    let doc: Value = read_json(path)?;
    let space = space_from_value(field(&doc, "space")?, path, "space")?.space;
    let initial = dist_from_value(field(&doc, "initial")?, &space, path, "initial")?;
    let tasks = field(&doc, "tasks")?
        .as_array()
        .ok_or_else(|| invalid("tasks", "expected an array"))?;
    let mut seen = vec![initial.clone()];
    let mut steps = Vec::with_capacity(tasks.len());
    for (i, task) in tasks.iter().enumerate() {
        let name = format!("tasks[{i}]");
        let b = task
            .get("b")
            .and_then(Value::as_i64)
            .ok_or_else(|| invalid(format!("{name}.b"), "expected an integer"))?;
        let dist = match task.get("dist") {
            Some(v) => dist_from_value(v, &space, path, &format!("{name}.dist"))?,
            None => usize::try_from(b)
                .ok()
                .and_then(|b| seen.get(b).cloned())
                .or_else(|| (b == -1).then(|| initial.clone()))
                .ok_or_else(|| invalid(format!("{name}.dist"), "required for a new task"))?,
        };
        seen.push(dist.clone());
        steps.push((b, dist));
    }
    Ok((space, TaskSequence::from_indexed(initial, steps)?))
}

/// The initial distribution and every new task of `seq`.
fn distinct(seq: &TaskSequence) -> Vec<DiscreteDistribution> {
    std::iter::once(seq.initial().clone())
        .chain(seq.tasks().iter().filter_map(|t| match t {
            Task::New(p) => Some(p.clone()),
            _ => None,
        }))
        .collect()
}

/// Simulates the greedy and preemptive schemes and reports each mean cost
/// beside `r_hat * sum C*`, where `r_hat` is the coupling's estimated ratio
/// on the distinct distributions of the sequence.
pub fn online(ctx: &Session, args: &OnlineArgs) -> Result<()> {
    let (space, seq, circle) = match (&args.instance, args.circle) {
        (Some(path), _) => {
            let (space, seq) = load_online(path)?;
            (space, seq, None)
        }
        (None, Some(l)) => {
            let horizon = args.horizon.ok_or_else(|| invalid("horizon", "required with --circle"))?;
            let (space, seq) = circle_online_instance(l, horizon, args.variant)?;
            (space, seq, Some((l, horizon)))
        }
        (None, None) => return Err(invalid("instance", "give --instance or --circle")),
    };
    let coupling = Coupling::new(args.algo, &space)?;
    let master = SeedContext::new(ctx.seed);
    let members = distinct(&seq);
    let r_hat: Option<RatioEstimate> = (members.len() >= 2)
        .then(|| estimate_ratio(&coupling, &space, &members, args.trials, &master))
        .transpose()?;
    let schemes = match args.scheme {
        Some(s) => vec![s],
        None => vec![Scheme::Greedy, Scheme::Preemptive],
    };
    let mut out = ctx.table(&[
        "scheme",
        "mean",
        "stderr",
        "sum_optimal",
        "ratio",
        "ratio_stderr",
        "ratio_bound",
        "bound_26",
        "closed_form",
    ])?;
    for scheme in schemes {
        let res = online_simulate(scheme, &seq, &space, &coupling, args.trials, &master)?;
        let name = serde_json::to_value(scheme)?;
        let closed = circle
            .filter(|_| scheme == Scheme::Greedy)
            .map(|(l, h)| greedy_closed_form(l, h, args.variant));
        let bound_26 = circle
            .filter(|_| args.variant == CircleVariant::Chord)
            .map(|_| 26.0 * res.sum_optimal);
        out.row(&[
            Cell::Text(name.as_str().unwrap_or_default().to_owned()),
            res.mean.into(),
            res.stderr.into(),
            res.sum_optimal.into(),
            r_hat.as_ref().map(|r| r.ratio).into(),
            r_hat.as_ref().map(|r| r.ratio_stderr).into(),
            r_hat.as_ref().map(|r| r.ratio * res.sum_optimal).into(),
            bound_26.into(),
            closed.into(),
        ])?;
    }
    out.finish()
}

/// Reads `{"space", "g": [[..]], "edges": [[a, b, w]], "fractional": [..]}`.
fn load_labeling(path: &Path) -> Result<LabelingInstance> {
    let doc: Value = read_json(path)?;
    let space = space_from_value(field(&doc, "space")?, path, "space")?.space;
    let g: Vec<Vec<f64>> = typed_field(&doc, "g")?;
    let edges: Vec<(usize, usize, f64)> = typed_field(&doc, "edges")?;
    let fractional = dists_from_value(field(&doc, "fractional")?, &space, path, "fractional")?;
    Ok(LabelingInstance::new(space, g, edges, fractional)?)
}

/// Mean rounded energy over `--trials` seeds against `r_hat` times the
/// fractional energy, plus one rounding under the first trial seed.
pub fn round_labels(ctx: &Session, args: &LabelArgs) -> Result<()> {
    let inst = load_labeling(&args.instance)?;
    let coupling = Coupling::new(args.algo, inst.space())?;
    let master = SeedContext::new(ctx.seed);
    let (mean, stderr) = rounding_moments(&inst, &coupling, args.trials, &master)?;
    let one = round_once(&inst, &coupling, &trial_seed(&master, 0))?;
    let r_hat: Option<RatioEstimate> = (inst.objects() >= 2)
        .then(|| estimate_ratio(&coupling, inst.space(), inst.fractional(), args.trials, &master))
        .transpose()?;
    let labels: Vec<String> = one.labels.iter().map(|&x| inst.space().label(x).to_string()).collect();
    let mut out = ctx.table(&["quantity", "value"])?;
    quantity(&mut out, "fractional_energy", one.fractional_energy)?;
    quantity(&mut out, "mean_energy", mean)?;
    quantity(&mut out, "mean_energy_stderr", stderr)?;
    quantity(&mut out, "ratio", r_hat.as_ref().map(|r| r.ratio))?;
    quantity(&mut out, "ratio_stderr", r_hat.as_ref().map(|r| r.ratio_stderr))?;
    quantity(&mut out, "ratio_bound", r_hat.as_ref().map(|r| r.ratio * one.fractional_energy))?;
    quantity(&mut out, "sample_energy", one.energy)?;
    quantity(&mut out, "sample_labels", labels.join(" "))?;
    out.finish()
}
