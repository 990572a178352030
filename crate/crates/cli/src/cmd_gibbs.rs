use anyhow::Result;
use clap::ValueEnum;
use ldpustat::gibbs::{
    estimate_logz_ti, exact_logz, exact_logz_complete, glauber_chain, tail_probability_exact, twin_classes, ChainConfig,
    ExactOptions, GibbsModel, TiConfig, DEFAULT_STATE_LIMIT,
};
use ldpustat::io::table_csv;
use serde_json::{json, Value};

use crate::inputs;
use crate::opts::Opts;
use crate::output::{num, to_json, Sink};
use crate::InputError;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Op {
    /// `Z_n(θ)` by enumeration.
    Exact,
    /// Heat-bath chain with per-sweep records.
    Chain,
    /// Thermodynamic integration of `Z_n` over `--grid`.
    Ti,
    /// Exact `−n⁻¹ log P(U_n ≥ t)` for each `--n`.
    Tail,
}

pub fn chain_config(o: &Opts, n: usize, sweeps: usize, burn_in: usize) -> ChainConfig {
    ChainConfig {
        sweeps: o.sweeps.unwrap_or(sweeps),
        burn_in: o.burnin.unwrap_or(burn_in),
        thin: o.thin.unwrap_or(1),
        seed: o.seed(),
        blocks: o.blocks.unwrap_or(10).min(n),
        ..ChainConfig::default()
    }
}

pub fn run(op: Op, o: &Opts) -> Result<bool> {
    let sink = Sink::new(o.out.as_deref())?;
    let value = match op {
        Op::Exact => {
            let m = inputs::gibbs_model(o, None)?;
            let z = exact_logz(&m, &ExactOptions::default())?;
            let mut v = json!({
                "n": m.n(),
                "theta": num(m.theta()),
                "z_n": num(z),
                "classes": twin_classes(m.coupling()).len(),
                "model_hash": m.fingerprint(),
            });
            if o.matrix.is_none() {
                let (cf, mu) = inputs::complete_family(o)?;
                v["z_n_closed_sum"] = num(exact_logz_complete(cf, m.n(), m.theta(), &mu, DEFAULT_STATE_LIMIT)?);
            }
            v
        }
        Op::Chain => {
            let m = inputs::gibbs_model(o, None)?;
            let cfg = chain_config(o, m.n(), 10_000, 1_000);
            let rec = glauber_chain(&m, &cfg)?;
            let csv = sink.file("chain.csv", &rec.to_csv())?;
            let us: Vec<f64> = rec.records.iter().map(|r| r.u_n).collect();
            let meta = json!({
                "seed": rec.seed,
                "burn_in": rec.burn_in,
                "thin": rec.thin,
                "blocks": rec.blocks,
                "model_hash": rec.model_hash,
                "records": rec.records.len(),
                "max_drift": num(rec.max_drift),
            });
            sink.file("chain_meta.json", &(serde_json::to_string_pretty(&meta)? + "\n"))?;
            json!({ "meta": meta, "mean_u_n": num(us.iter().sum::<f64>() / us.len().max(1) as f64), "csv": csv })
        }
        Op::Ti => {
            let m = inputs::gibbs_model(o, None)?;
            let theta = o.theta_or(1.0);
            let grid = match o.grid()? {
                Some(g) => g,
                None => (0..21).map(|i| theta * i as f64 / 20.0).collect(),
            };
            let cfg = TiConfig { chain: chain_config(o, m.n(), 20_000, 1_000), ..TiConfig::default() };
            let est = estimate_logz_ti(&m, &grid, &cfg)?;
            let rows: Vec<Vec<f64>> =
                est.grid.iter().zip(&est.means).zip(&est.mean_errors).map(|((&g, &mu), &e)| vec![g, mu, e]).collect();
            let csv = sink.file("ti_means.csv", &table_csv(&["theta", "mean_u_n", "stderr"], &rows))?;
            let mut v = to_json(&est)?;
            v["csv"] = json!(csv);
            v
        }
        Op::Tail => tail(o, &sink)?,
    };
    sink.json("gibbs.json", &value)?;
    Ok(true)
}

fn tail(o: &Opts, sink: &Sink) -> Result<Value> {
    if o.matrix.is_some() {
        return Err(InputError("tail rates need a size family: use --family with --n".into()).into());
    }
    let ts = o.ts()?.ok_or_else(|| InputError("missing --t".into()))?;
    if ts.len() != 1 {
        return Err(InputError("--t takes a single threshold here".into()).into());
    }
    let ns = o.ns(&[8, 12, 16, 20])?;
    let build = |n: usize| -> ldpustat::Result<GibbsModel> {
        let (cf, mu) = inputs::complete_family(o).map_err(|e| ldpustat::Error::Config(e.to_string()))?;
        GibbsModel::complete(cf, n, 0.0, mu)
    };
    let rates = tail_probability_exact(&build, ts[0], &ns, &ExactOptions::default())?;
    let rows: Vec<Vec<f64>> = rates.iter().map(|r| vec![r.n as f64, r.log_probability, r.rate]).collect();
    let csv = sink.file("tail.csv", &table_csv(&["n", "log_probability", "rate"], &rows))?;
    let entries: Vec<Value> = rates
        .iter()
        .map(|r| json!({ "n": r.n, "log_probability": num(r.log_probability), "rate": num(r.rate) }))
        .collect();
    Ok(json!({ "t": num(ts[0]), "rates": entries, "csv": csv }))
}
