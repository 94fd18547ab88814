use std::sync::mpsc;
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SyntheticConfig};
use crate::error::{Error, Result};
use crate::fairness::{GroupAttr, GroupLabels};
use crate::recommenders::{recommend_cf, recommend_fair_match, CfParams, FairMatchParams, Scored};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    /// `(n, m)` pairs in ascending order.
    pub sizes: Vec<(usize, usize)>,
    /// Market template; `n`, `m` and `seed` are overridden per size.
    pub synthetic: SyntheticConfig,
    pub fair_match: FairMatchParams,
    pub cf: CfParams,
    pub seed: u64,
    /// Timed runs per size and algorithm; the median is reported.
    pub repeats: usize,
    /// Worker threads for the timed runs.
    pub threads: usize,
    /// Budget per size, covering all repeats of both algorithms.
    pub timeout_secs: Option<f64>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            sizes: vec![(100, 100), (200, 200), (400, 400), (800, 800)],
            synthetic: SyntheticConfig::default(),
            fair_match: FairMatchParams::default(),
            cf: CfParams::default(),
            seed: 0,
            repeats: 5,
            threads: 1,
            timeout_secs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub m: usize,
    pub work: usize,
    pub fair_match_secs: Option<f64>,
    pub cf_secs: Option<f64>,
    /// Dense score tables plus candidate pools, in bytes.
    pub memory_estimate_bytes: usize,
    pub aborted: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of ln(seconds) on ln(n * m); `None` below two
    /// completed sizes.
    pub fair_match_slope: Option<f64>,
    pub cf_slope: Option<f64>,
}

impl BenchReport {
    pub fn aborted(&self) -> bool {
        self.rows.iter().any(|r| r.aborted)
    }
}

/// Ordinary least-squares slope through `(x, y)` after taking logs of both.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let mid = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[mid]
    } else {
        0.5 * (xs[mid - 1] + xs[mid])
    }
}

fn time_size(config: &BenchConfig, n: usize, m: usize) -> Result<(f64, f64)> {
    let dataset = Dataset::synthetic(&SyntheticConfig {
        n,
        m,
        seed: config.seed,
        ..config.synthetic.clone()
    })?;
    let graph = dataset.graph();
    let labels = GroupLabels::from_dataset(&dataset, GroupAttr::Group)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads.max(1))
        .build()
        .map_err(|e| Error::config(e.to_string()))?;
    pool.install(|| {
        // Untimed warm-up.
        recommend_fair_match(&graph, &labels, &config.fair_match)?;
        recommend_cf(&graph, &config.cf)?;
        let mut fm = Vec::with_capacity(config.repeats);
        let mut cf = Vec::with_capacity(config.repeats);
        for _ in 0..config.repeats.max(1) {
            let t = Instant::now();
            recommend_fair_match(&graph, &labels, &config.fair_match)?;
            fm.push(t.elapsed().as_secs_f64());
            let t = Instant::now();
            recommend_cf(&graph, &config.cf)?;
            cf.push(t.elapsed().as_secs_f64());
        }
        Ok((median(fm), median(cf)))
    })
}

/// Times FAIR-MATCH and CF on generated markets of growing size. A size that
/// exceeds the budget is recorded as aborted and larger sizes are skipped.
pub fn scaling_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    if config.sizes.is_empty() {
        return Err(Error::config("no benchmark sizes given"));
    }
    if config
        .sizes
        .windows(2)
        .any(|w| w[0].0 * w[0].1 > w[1].0 * w[1].1)
    {
        return Err(Error::config("benchmark sizes must be ascending"));
    }
    config.fair_match.validate()?;
    let pool_bytes =
        config.fair_match.pool_factor * config.fair_match.k * std::mem::size_of::<Scored>();

    let mut rows = Vec::with_capacity(config.sizes.len());
    for &(n, m) in &config.sizes {
        let mut row = BenchRow {
            n,
            m,
            work: n * m,
            fair_match_secs: None,
            cf_secs: None,
            memory_estimate_bytes: 2 * n * m * std::mem::size_of::<f64>() + (n + m) * pool_bytes,
            aborted: false,
        };
        let (tx, rx) = mpsc::channel();
        let worker_config = config.clone();
        thread::spawn(move || {
            let _ = tx.send(time_size(&worker_config, n, m));
        });
        let outcome = match config.timeout_secs {
            Some(secs) => rx.recv_timeout(Duration::from_secs_f64(secs)).ok(),
            None => rx.recv().ok(),
        };
        match outcome {
            Some(result) => {
                let (fm, cf) = result?;
                row.fair_match_secs = Some(fm);
                row.cf_secs = Some(cf);
                rows.push(row);
            }
            None => {
                row.aborted = true;
                rows.push(row);
                break;
            }
        }
    }

    let slope = |pick: fn(&BenchRow) -> Option<f64>| {
        let points: Vec<(f64, f64)> = rows
            .iter()
            .filter_map(|r| pick(r).map(|t| (r.work as f64, t)))
            .collect();
        log_log_slope(&points)
    };
    Ok(BenchReport {
        fair_match_slope: slope(|r| r.fair_match_secs),
        cf_slope: slope(|r| r.cf_secs),
        rows,
    })
}
