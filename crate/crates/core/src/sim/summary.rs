use serde::Serialize;

use crate::error::{Error, Result};

use super::run::ReplicationRecord;

/// Location and spread of one sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation (`n − 1` denominator); 0 for a single value.
    pub sd: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Stats {
    /// `None` for an empty sample. Quartiles interpolate linearly between order statistics.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(Self {
            count: n,
            mean,
            sd,
            min: sorted[0],
            q1: quantile_sorted(&sorted, 0.25),
            median: quantile_sorted(&sorted, 0.5),
            q3: quantile_sorted(&sorted, 0.75),
            max: sorted[n - 1],
        })
    }
}

fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub sweep_index: usize,
    pub sweep_value: Option<f64>,
    pub parameter: String,
    /// Share of the point's replications that converged, failures included.
    pub converged_rate: f64,
    /// `None` when every replication at the point failed.
    pub stats: Option<Stats>,
}

/// Names of the summarized parameters for `s` groups.
pub fn parameter_names(s: usize) -> Vec<String> {
    if s == 1 {
        vec!["gamma_hat".into(), "sigma_eps_hat".into()]
    } else {
        let mut v: Vec<String> = (1..=s).map(|i| format!("gamma_hat_{i}")).collect();
        v.push("gamma_hat_total".into());
        v.push("sigma_eps_hat".into());
        v
    }
}

/// Estimates of a successful record, in [`parameter_names`] order.
pub fn estimates(r: &ReplicationRecord) -> Vec<f64> {
    let mut v = r.gamma_hat.clone();
    if v.len() > 1 {
        v.push(r.gamma_total());
    }
    v.push(r.sigma_eps_hat);
    v
}

/// Per sweep point and parameter: convergence rate and the distribution of
/// the estimates over successful replications.
pub fn summarize(records: &[ReplicationRecord]) -> Result<Vec<SummaryRow>> {
    let first = records.first().ok_or_else(|| Error::invalid("no records to summarize"))?;
    let s = first.point.p.len();
    let names = parameter_names(s);

    let mut out = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let idx = records[start].sweep_index;
        let end = start + records[start..].iter().take_while(|r| r.sweep_index == idx).count();
        let block = &records[start..end];
        let ok: Vec<&ReplicationRecord> = block.iter().filter(|r| r.succeeded()).collect();
        let converged = block.iter().filter(|r| r.converged).count() as f64 / block.len() as f64;
        for (k, name) in names.iter().enumerate() {
            let values: Vec<f64> = ok.iter().map(|r| estimates(r)[k]).collect();
            out.push(SummaryRow {
                sweep_index: idx,
                sweep_value: block[0].point.value,
                parameter: name.clone(),
                converged_rate: converged,
                stats: Stats::of(&values),
            });
        }
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_value() {
        let s = Stats::of(&[3.5]).unwrap();
        assert_eq!((s.mean, s.sd, s.q1, s.q3), (3.5, 0.0, 3.5, 3.5));
    }

    #[test]
    fn interpolated_quartiles() {
        let s = Stats::of(&[4.0, 1.0, 3.0, 2.0]).unwrap();
        assert_eq!(s.median, 2.5);
        assert_eq!(s.q1, 1.75);
        assert_eq!(s.q3, 3.25);
        assert!((s.sd - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empty_is_none() {
        assert!(Stats::of(&[]).is_none());
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn names() {
        assert_eq!(parameter_names(1), ["gamma_hat", "sigma_eps_hat"]);
        assert_eq!(
            parameter_names(2),
            ["gamma_hat_1", "gamma_hat_2", "gamma_hat_total", "sigma_eps_hat"]
        );
    }
}
