use anyhow::Result;
use clap::ValueEnum;
use ldpustat::io;
use ldpustat::ustat::{holder_bound, local_field, local_field_u, u_statistic, v_statistic};
use ldpustat::variational::Family;
use serde_json::json;

use crate::inputs;
use crate::opts::Opts;
use crate::output::{num, to_json, Sink};
use crate::InputError;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Op {
    Eval,
    Field,
    Holder,
}

pub fn run(op: Op, o: &Opts) -> Result<bool> {
    let sink = Sink::new(o.out.as_deref())?;
    let path = o.matrix.as_ref().ok_or_else(|| InputError("missing --matrix".into()))?;
    let q = inputs::matrix(path)?;
    let motif = inputs::motif(o)?;
    let fam = match &o.family {
        Some(_) => inputs::family(o)?,
        None => Family::Multilinear,
    };
    let mu = inputs::measure(o, fam)?;
    let phi = inputs::phi(o, motif.v(), &mu, fam)?;
    let data = o.data.as_ref().ok_or_else(|| InputError("missing --data".into()))?;
    let x = io::parse_data(&inputs::read(data)?, mu.len())?;
    let value = match op {
        Op::Eval => {
            let v = v_statistic(&motif, &q, &x, &phi)?;
            let u = if q.n() >= motif.v() { num(u_statistic(&motif, &q, &x, &phi)?) } else { serde_json::Value::Null };
            json!({ "n": q.n(), "v": motif.v(), "phi": phi.name(), "v_n": num(v), "u_n": u })
        }
        Op::Field => {
            let site = o.site.ok_or_else(|| InputError("missing --site".into()))?;
            if site >= q.n() {
                return Err(InputError(format!("--site {site} is not below n = {}", q.n())).into());
            }
            json!({
                "site": site,
                "atoms": to_json(&mu.atoms())?,
                "field_v": to_json(&local_field(&motif, &q, &x, &phi, site)?)?,
                "field_u": to_json(&local_field_u(&motif, &q, &x, &phi, site)?)?,
            })
        }
        Op::Holder => {
            let qe = o.q.unwrap_or(f64::INFINITY);
            let v = v_statistic(&motif, &q, &x, &phi)?;
            let b = holder_bound(&motif, &q, &x, &phi, qe)?;
            json!({ "v_n": num(v), "bound": num(b), "q": num(qe), "holds": v.abs() <= b * (1.0 + 1e-12) })
        }
    };
    sink.json("ustat.json", &value)?;
    Ok(true)
}
