use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::group::{default_group_init, group_deltas, group_mm_fit, group_scores, GroupedDesign};
use crate::io::{write_matrix_csv, write_truth_csv, write_vector_csv};
use crate::single::{default_init, delta, mm_fit, score, MmOptions};
use crate::spectral::{decompose, SpectralCache};

use super::config::{ExperimentConfig, SweepPoint};
use super::generate::{gen_coefficients, gen_design, gen_response, permute_coefficients, DesignKind};
use super::rng::child_seed;

/// Replication index reserved for the shared design of a sweep point.
pub const FIXED_DESIGN_REP: u64 = u64::MAX;

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; 0 lets rayon decide.
    pub threads: usize,
    /// Where to write per-replication `Z`, `y` and truth CSVs, if anywhere.
    pub dump_dir: Option<PathBuf>,
    /// Fill [`ReplicationRecord::diagnostics`].
    pub diagnostics: bool,
}

/// Optimality checks of one fit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitDiagnostics {
    /// Largest drop of the log-likelihood between consecutive iterations (0 if it never fell).
    pub max_loglik_drop: f64,
    /// Score at the estimate: noise component first, then one entry per group.
    pub scores: Vec<f64>,
    /// Likelihood equation(s) in the SNR at the estimate, one per group.
    pub deltas: Vec<f64>,
}

fn max_drop(path: &[f64]) -> f64 {
    path.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationRecord {
    pub sweep_index: usize,
    pub replication: usize,
    pub seed: u64,
    pub point: SweepPoint,
    pub design: DesignKind,
    /// One entry per group; empty when the replication failed.
    pub gamma_hat: Vec<f64>,
    /// Estimated noise variance.
    pub sigma_eps_hat: f64,
    pub iterations: usize,
    pub converged: bool,
    pub boundary: bool,
    pub error: Option<String>,
    pub diagnostics: Option<FitDiagnostics>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl ReplicationRecord {
    pub fn succeeded(&self) -> bool {
        self.error.is_none()
    }

    pub fn gamma_total(&self) -> f64 {
        self.gamma_hat.iter().sum()
    }
}

/// A design drawn once and reused by every replication of a sweep point.
enum Prepared {
    Single(DesignMatrix<f64>, SpectralCache<f64>),
    Grouped(DesignMatrix<f64>, GroupedDesign<f64>),
}

impl Prepared {
    fn build(kind: DesignKind, pt: &SweepPoint, seed: u64) -> Result<Self> {
        let z = gen_design(kind, pt.n, pt.p_total(), seed)?;
        if pt.is_grouped() {
            let g = GroupedDesign::from_partition(&z, &pt.p)?;
            Ok(Prepared::Grouped(z, g))
        } else {
            let c = decompose(&z)?;
            Ok(Prepared::Single(z, c))
        }
    }

    fn matrix(&self) -> &DesignMatrix<f64> {
        match self {
            Prepared::Single(z, _) | Prepared::Grouped(z, _) => z,
        }
    }
}

struct Fit {
    gamma_hat: Vec<f64>,
    sigma_eps_hat: f64,
    iterations: usize,
    converged: bool,
    boundary: bool,
    diagnostics: Option<FitDiagnostics>,
}

/// Runs every replication of every sweep point.
///
/// Records come back ordered by `(sweep_index, replication)` and are
/// identical for any thread count. A failing replication is kept with its
/// error message.
pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<Vec<ReplicationRecord>> {
    cfg.validate()?;
    let points = cfg.points()?;
    if let Some(dir) = &opts.dump_dir {
        std::fs::create_dir_all(dir)?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::invalid(format!("thread pool: {e}")))?;

    let records = pool.install(|| {
        let shared: Vec<Option<std::result::Result<Arc<Prepared>, String>>> = points
            .par_iter()
            .map(|pt| {
                cfg.fix_design.then(|| {
                    let seed = child_seed(cfg.base_seed, pt.index as u64, FIXED_DESIGN_REP);
                    Prepared::build(cfg.design, pt, seed).map(Arc::new).map_err(|e| e.to_string())
                })
            })
            .collect();

        let jobs: Vec<(usize, usize)> = (0..points.len())
            .flat_map(|s| (0..cfg.replications).map(move |r| (s, r)))
            .collect();
        jobs.par_iter()
            .map(|&(s, r)| {
                let pt = &points[s];
                let seed = child_seed(cfg.base_seed, s as u64, r as u64);
                let start = Instant::now();
                let fit = match &shared[s] {
                    Some(Err(e)) => Err(e.clone()),
                    Some(Ok(p)) => replicate(cfg, opts, pt, r, seed, Some(p)).map_err(|e| e.to_string()),
                    None => replicate(cfg, opts, pt, r, seed, None).map_err(|e| e.to_string()),
                };
                record(cfg, pt, r, seed, fit, start.elapsed())
            })
            .collect()
    });
    Ok(records)
}

fn record(
    cfg: &ExperimentConfig,
    pt: &SweepPoint,
    replication: usize,
    seed: u64,
    fit: std::result::Result<Fit, String>,
    wall_time: Duration,
) -> ReplicationRecord {
    let mut rec = ReplicationRecord {
        sweep_index: pt.index,
        replication,
        seed,
        point: pt.clone(),
        design: cfg.design,
        gamma_hat: Vec::new(),
        sigma_eps_hat: f64::NAN,
        iterations: 0,
        converged: false,
        boundary: false,
        error: None,
        diagnostics: None,
        wall_time,
    };
    match fit {
        Ok(f) => {
            rec.gamma_hat = f.gamma_hat;
            rec.sigma_eps_hat = f.sigma_eps_hat;
            rec.iterations = f.iterations;
            rec.converged = f.converged;
            rec.boundary = f.boundary;
            rec.diagnostics = f.diagnostics;
        }
        Err(e) => rec.error = Some(e),
    }
    rec
}

/// True coefficients of one replication, one vector per group.
pub fn replication_coefficients(cfg: &ExperimentConfig, pt: &SweepPoint, seed: u64) -> Result<Vec<Vec<f64>>> {
    pt.p.iter()
        .enumerate()
        .map(|(i, &p)| {
            let mut b = gen_coefficients(p, pt.g[i], pt.gamma0[i], pt.sigma0_sq)?;
            if cfg.permute_coefficients {
                permute_coefficients(&mut b, child_seed(seed, i as u64, 0));
            }
            Ok(b)
        })
        .collect()
}

fn replicate(
    cfg: &ExperimentConfig,
    opts: &RunOptions,
    pt: &SweepPoint,
    rep: usize,
    seed: u64,
    shared: Option<&Arc<Prepared>>,
) -> Result<Fit> {
    let own;
    let prepared: &Prepared = match shared {
        Some(p) => p,
        None => {
            own = Prepared::build(cfg.design, pt, seed)?;
            &own
        }
    };
    let betas = replication_coefficients(cfg, pt, seed)?;
    let beta: Vec<f64> = betas.concat();
    let z = prepared.matrix();
    let y = gen_response(z, &beta, pt.sigma0_sq, seed)?;

    if let Some(dir) = &opts.dump_dir {
        let stem = format!("sweep{}_rep{}", pt.index, rep);
        write_matrix_csv(&dir.join(format!("{stem}_Z.csv")), z)?;
        write_vector_csv(&dir.join(format!("{stem}_y.csv")), &y)?;
        write_truth_csv(&dir.join(format!("{stem}_truth.csv")), pt.sigma0_sq, &beta)?;
    }

    let mut mm = MmOptions::default().with_tol(cfg.tol).with_max_iter(cfg.max_iter);
    if opts.diagnostics {
        mm = mm.recording();
    }
    match prepared {
        Prepared::Single(_, cache) => {
            let ry = cache.rotate_response(&y)?;
            let est = mm_fit(cache, &ry, default_init(&ry), &mm)?;
            let diagnostics = match &est.path {
                Some(path) => {
                    let (a, b) = score(cache, &ry, est.sigma_eps_sq, est.sigma_alpha_sq)?;
                    Some(FitDiagnostics {
                        max_loglik_drop: max_drop(path),
                        scores: vec![a, b],
                        deltas: vec![delta(cache, &ry, est.gamma_hat)?],
                    })
                }
                None => None,
            };
            Ok(Fit {
                gamma_hat: vec![est.gamma_hat],
                sigma_eps_hat: est.sigma_eps_sq,
                iterations: est.iterations,
                converged: est.converged,
                boundary: est.boundary,
                diagnostics,
            })
        }
        Prepared::Grouped(_, design) => {
            let (se, sa) = default_group_init(&y, design.s());
            let est = group_mm_fit(design, &y, (se, &sa), &mm)?;
            let diagnostics = match &est.path {
                Some(path) => Some(FitDiagnostics {
                    max_loglik_drop: max_drop(path),
                    scores: group_scores(design, &y, est.sigma_eps_sq, &est.sigma_alpha_sq)?,
                    deltas: group_deltas(design, &y, &est.gamma_hat)?,
                }),
                None => None,
            };
            Ok(Fit {
                diagnostics,
                gamma_hat: est.gamma_hat,
                sigma_eps_hat: est.sigma_eps_sq,
                iterations: est.iterations,
                converged: est.converged,
                boundary: est.boundary,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(extra: &str) -> ExperimentConfig {
        let text = format!(
            "design = \"gaussian\"\nn = 30\np = 40\ng = 0.5\ngamma0 = 2.0\n\
             sigma0_sq = 0.5\nreplications = 3\nbase_seed = 5\n{extra}"
        );
        ExperimentConfig::from_toml_str(&text).unwrap()
    }

    #[test]
    fn ordered_and_seeded() {
        let c = cfg("[sweep]\nfield = \"g\"\nvalues = [0.0, 1.0]\n");
        let recs = run_experiment(&c, &RunOptions { threads: 2, ..Default::default() }).unwrap();
        assert_eq!(recs.len(), 6);
        for (k, r) in recs.iter().enumerate() {
            assert_eq!((r.sweep_index, r.replication), (k / 3, k % 3));
            assert_eq!(r.seed, child_seed(5, r.sweep_index as u64, r.replication as u64));
            assert!(r.succeeded(), "{:?}", r.error);
            assert_eq!(r.gamma_hat.len(), 1);
        }
    }

    #[test]
    fn fixed_design_shares_matrix() {
        let c = cfg("fix_design = true\n");
        let dir = tempfile::tempdir().unwrap();
        let opts = RunOptions { threads: 1, dump_dir: Some(dir.path().to_path_buf()), diagnostics: false };
        let recs = run_experiment(&c, &opts).unwrap();
        assert!(recs.iter().all(ReplicationRecord::succeeded));
        let z0 = std::fs::read(dir.path().join("sweep0_rep0_Z.csv")).unwrap();
        let z1 = std::fs::read(dir.path().join("sweep0_rep1_Z.csv")).unwrap();
        let y0 = std::fs::read(dir.path().join("sweep0_rep0_y.csv")).unwrap();
        let y1 = std::fs::read(dir.path().join("sweep0_rep1_y.csv")).unwrap();
        assert_eq!(z0, z1);
        assert_ne!(y0, y1);
    }

    #[test]
    fn grouped_run_has_vector_estimates() {
        let text = "design = \"rademacher\"\nn = 30\np = [20, 20]\ng = 0.5\ngamma0 = [1.0, 2.0]\n\
                    sigma0_sq = 0.5\nreplications = 2\nbase_seed = 1\n";
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        let opts = RunOptions { diagnostics: true, ..Default::default() };
        let recs = run_experiment(&c, &opts).unwrap();
        for r in &recs {
            assert!(r.succeeded(), "{:?}", r.error);
            assert_eq!(r.gamma_hat.len(), 2);
            let d = r.diagnostics.as_ref().unwrap();
            assert_eq!((d.scores.len(), d.deltas.len()), (3, 2));
            assert!(d.max_loglik_drop <= 1e-10);
        }
    }

    #[test]
    fn failure_is_recorded() {
        // a 1 × 1 genotype column is always constant
        let text = "design = \"genotype\"\nn = 1\np = 1\ng = 0\ngamma0 = 1\n\
                    sigma0_sq = 0.5\nreplications = 2\nbase_seed = 1\n";
        let c = ExperimentConfig::from_toml_str(text).unwrap();
        let recs = run_experiment(&c, &RunOptions::default()).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().all(|r| !r.succeeded() && r.gamma_hat.is_empty()));
    }
}
