use anyhow::Result;
use clap::ValueEnum;
use ldpustat::kernel::{
    check_assumptions, cut_distance, cut_norm, degree_profile, lp_norm, weak_cut_distance, AssumptionThresholds,
    CutNormOptions, WeakCutOptions,
};
use serde_json::json;

use crate::inputs;
use crate::opts::{parse_list, Opts};
use crate::output::{num, to_json, Sink};

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Op {
    Cutnorm,
    Cutdist,
    Weakcut,
    Norms,
    Degrees,
    Assumptions,
}

pub fn run(op: Op, o: &Opts) -> Result<bool> {
    let sink = Sink::new(o.out.as_deref())?;
    let cut = CutNormOptions { seed: o.seed(), ..CutNormOptions::default() };
    let value = match op {
        Op::Cutnorm => {
            let w = inputs::single_kernel(o)?;
            to_json(&cut_norm(&w, &cut))?
        }
        Op::Cutdist => {
            let (a, b) = inputs::kernel_pair(o)?;
            to_json(&cut_distance(&a, &b, &cut))?
        }
        Op::Weakcut => {
            let (a, b) = inputs::kernel_pair(o)?;
            let opts = WeakCutOptions { cut, seed: o.seed(), ..WeakCutOptions::default() };
            let mut v = to_json(&weak_cut_distance(&a, &b, &opts))?;
            v["note"] = json!("upper bound over block permutations of the first kernel");
            v
        }
        Op::Norms => {
            let w = inputs::single_kernel(o)?;
            let rs = parse_list(o.r.as_deref().unwrap_or("1,2,inf"), "--r")?;
            let mut map = serde_json::Map::new();
            for r in rs {
                map.insert(ldpustat::io::fmt12(r), num(lp_norm(&w, r)?));
            }
            json!({ "norms": map })
        }
        Op::Degrees => {
            let w = inputs::single_kernel(o)?;
            let d = degree_profile(&w);
            json!({
                "breakpoints": to_json(&d.breakpoints())?,
                "values": to_json(&d.values())?,
                "mean": num(d.integral()),
                "sup": num(d.sup_abs()),
            })
        }
        Op::Assumptions => {
            let (wn, w) = inputs::kernel_pair(o)?;
            let motif = inputs::motif(o)?;
            let q = o.q.unwrap_or(2.0);
            let p = o.p.unwrap_or(if q.is_infinite() { 1.0 } else { q / (q - 1.0) });
            to_json(&check_assumptions(&wn, &w, &motif, p, q, &AssumptionThresholds::default())?)?
        }
    };
    sink.json("kernel.json", &value)?;
    Ok(true)
}
