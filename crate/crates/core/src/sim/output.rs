//! Experiment CSVs and the run manifest.
//!
//! Column orders are fixed; see the README for the full tables.

use std::io::Write;

use serde::Serialize;

use crate::error::Result;
use crate::io::format_number;

use super::config::ExperimentConfig;
use super::run::ReplicationRecord;
use super::summary::SummaryRow;

/// `git describe` of the source tree this library was built from.
pub const GIT_DESCRIBE: &str = env!("REMLE_GIT_DESCRIBE");

fn opt_number(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

fn bool_cell(b: bool) -> String {
    b.to_string()
}

/// Header of the records CSV for `s` groups.
pub fn records_header(s: usize) -> Vec<String> {
    let mut h: Vec<String> = vec!["seed".into(), "n".into()];
    if s == 1 {
        for c in ["p", "g", "gamma0", "sigma0_sq", "gamma_hat"] {
            h.push(c.into());
        }
    } else {
        h.extend((1..=s).map(|i| format!("p_{i}")));
        h.extend((1..=s).map(|i| format!("gamma0_{i}")));
        h.extend((1..=s).map(|i| format!("gamma_hat_{i}")));
        h.push("gamma_hat_total".into());
    }
    for c in ["sigma_eps_hat", "iterations", "converged"] {
        h.push(c.into());
    }
    if s > 1 {
        h.push("sigma0_sq".into());
        h.extend((1..=s).map(|i| format!("g_{i}")));
    }
    for c in ["boundary", "sweep_index", "replication", "design", "theory", "status"] {
        h.push(c.into());
    }
    h
}

fn record_row(r: &ReplicationRecord, s: usize) -> Vec<String> {
    let pt = &r.point;
    let gh = |i: usize| opt_number(r.gamma_hat.get(i).copied());
    let ok = r.succeeded();
    let mut row = vec![r.seed.to_string(), pt.n.to_string()];
    if s == 1 {
        row.push(pt.p[0].to_string());
        row.push(format_number(pt.g[0]));
        row.push(format_number(pt.gamma0[0]));
        row.push(format_number(pt.sigma0_sq));
        row.push(gh(0));
    } else {
        row.extend(pt.p.iter().map(usize::to_string));
        row.extend(pt.gamma0.iter().map(|v| format_number(*v)));
        row.extend((0..s).map(gh));
        row.push(opt_number(ok.then(|| r.gamma_total())));
    }
    row.push(opt_number(ok.then_some(r.sigma_eps_hat)));
    row.push(r.iterations.to_string());
    row.push(bool_cell(r.converged));
    if s > 1 {
        row.push(format_number(pt.sigma0_sq));
        row.extend(pt.g.iter().map(|v| format_number(*v)));
    }
    row.push(bool_cell(r.boundary));
    row.push(r.sweep_index.to_string());
    row.push(r.replication.to_string());
    row.push(r.design.name().into());
    row.push(if r.design.within_theory() { "within" } else { "outside" }.into());
    row.push(match &r.error {
        None => "ok".into(),
        Some(e) => format!("error: {e}"),
    });
    row
}

/// One row per replication.
pub fn write_records_csv(w: impl Write, records: &[ReplicationRecord]) -> Result<()> {
    let s = records.first().map_or(1, |r| r.point.p.len());
    let mut out = csv::Writer::from_writer(w);
    out.write_record(records_header(s))?;
    for r in records {
        out.write_record(record_row(r, s))?;
    }
    out.flush()?;
    Ok(())
}

pub const SUMMARY_HEADER: [&str; 12] = [
    "sweep_index",
    "sweep_value",
    "parameter",
    "count",
    "converged_rate",
    "mean",
    "sd",
    "min",
    "q1",
    "median",
    "q3",
    "max",
];

/// Long format: one row per sweep point and parameter.
pub fn write_summary_csv(w: impl Write, rows: &[SummaryRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_HEADER)?;
    for r in rows {
        let mut row = vec![
            r.sweep_index.to_string(),
            opt_number(r.sweep_value),
            r.parameter.clone(),
            r.stats.map_or(0, |s| s.count).to_string(),
            format_number(r.converged_rate),
        ];
        match r.stats {
            Some(s) => row.extend(
                [s.mean, s.sd, s.min, s.q1, s.median, s.q3, s.max].map(format_number),
            ),
            None => row.extend(std::iter::repeat_n(String::new(), 7)),
        }
        out.write_record(row)?;
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SeedEntry {
    sweep_index: usize,
    replication: usize,
    seed: String,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    name: Option<&'a str>,
    crate_version: &'a str,
    git_describe: &'a str,
    threads: usize,
    elapsed_seconds: f64,
    config: &'a ExperimentConfig,
    seeds: Vec<SeedEntry>,
}

/// JSON manifest: config echo, build identity and every replication seed.
///
/// Seeds are written as decimal strings so JSON readers with 53-bit
/// integers do not round them.
pub fn write_manifest(
    w: impl Write,
    cfg: &ExperimentConfig,
    records: &[ReplicationRecord],
    threads: usize,
    elapsed_seconds: f64,
) -> Result<()> {
    let m = Manifest {
        name: cfg.name.as_deref(),
        crate_version: env!("CARGO_PKG_VERSION"),
        git_describe: GIT_DESCRIBE,
        threads,
        elapsed_seconds,
        config: cfg,
        seeds: records
            .iter()
            .map(|r| SeedEntry {
                sweep_index: r.sweep_index,
                replication: r.replication,
                seed: r.seed.to_string(),
            })
            .collect(),
    };
    let mut w = w;
    serde_json::to_writer_pretty(&mut w, &m).map_err(std::io::Error::from)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{run_experiment, summarize, RunOptions};

    const CFG: &str = "design = \"gaussian\"\nn = 20\np = [15, 15]\ng = 0.5\ngamma0 = 2\n\
                       sigma0_sq = 0.5\nreplications = 2\nbase_seed = 3\n";

    #[test]
    fn group_columns_line_up() {
        let cfg = ExperimentConfig::from_toml_str(CFG).unwrap();
        let recs = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_records_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        let head: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&head[..4], ["seed", "n", "p_1", "p_2"]);
        assert_eq!(head.len(), records_header(2).len());
        for l in lines {
            assert_eq!(l.split(',').count(), head.len());
        }

        let mut sbuf = Vec::new();
        write_summary_csv(&mut sbuf, &summarize(&recs).unwrap()).unwrap();
        assert_eq!(String::from_utf8(sbuf).unwrap().lines().count(), 1 + 4);
    }

    #[test]
    fn manifest_is_json() {
        let cfg = ExperimentConfig::from_toml_str(CFG).unwrap();
        let recs = run_experiment(&cfg, &RunOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_manifest(&mut buf, &cfg, &recs, 1, 0.5).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(v["seeds"].as_array().unwrap().len(), 2);
        assert_eq!(v["config"]["n"], 20);
    }
}
