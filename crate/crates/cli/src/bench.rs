//! Timing trials comparing the sequential sampler with the rejection baseline.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use esc_core::samplers::{
    assemble_partition, prepare, rng_from_seed, sample_sizes, NaiveSampler, SamplerMode,
};
use esc_core::{ClusterSizeSpec, Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// The CSV header, fixed so downstream scripts can rely on it.
pub const CSV_HEADER: &str = "method,kind,params,n,samples,trial,wall_seconds,attempts";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Fast,
    Naive,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Fast => "fast",
            Method::Naive => "naive",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fast" => Ok(Method::Fast),
            "naive" => Ok(Method::Naive),
            other => Err(Error::Argument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub spec: ClusterSizeSpec,
    pub n: usize,
    pub samples: usize,
    pub trials: usize,
    pub seed: u64,
    pub mode: SamplerMode,
    pub max_attempts: u64,
    pub methods: Vec<Method>,
    /// Also time label assignment, which is the same work for both methods.
    pub labels: bool,
    /// Run trials on a thread pool. Timings then compete for cores.
    pub parallel: bool,
}

impl BenchConfig {
    pub fn new(spec: ClusterSizeSpec, n: usize) -> Self {
        Self {
            spec,
            n,
            samples: 200,
            trials: 20,
            seed: esc_core::samplers::DEFAULT_SEED,
            mode: SamplerMode::default(),
            max_attempts: esc_core::samplers::DEFAULT_MAX_ATTEMPTS,
            methods: vec![Method::Fast, Method::Naive],
            labels: false,
            parallel: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRecord {
    pub method: Method,
    pub kind: &'static str,
    pub params: String,
    pub n: usize,
    pub samples: usize,
    pub trial: usize,
    pub wall_seconds: f64,
    /// Rejection attempts over the whole trial; naive only.
    pub attempts: Option<u64>,
    /// The naive sampler hit its attempt cap before finishing the trial.
    pub exhausted: bool,
}

impl BenchRecord {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.method,
            self.kind,
            self.params,
            self.n,
            self.samples,
            self.trial,
            self.wall_seconds,
            self.attempts.map(|a| a.to_string()).unwrap_or_default()
        )
    }
}

/// Times one trial: `samples` draws with seed `seed + trial`. The fast
/// method's time includes building its tables.
pub fn run_trial(config: &BenchConfig, method: Method, trial: usize) -> Result<BenchRecord> {
    let mut rng = rng_from_seed(config.seed.wrapping_add(trial as u64));
    let mut attempts = None;
    let mut exhausted = false;
    let start = Instant::now();
    match method {
        Method::Fast => {
            let tables = prepare(&config.spec, config.n, config.mode)?;
            for _ in 0..config.samples {
                let sizes = sample_sizes(&tables, &mut rng);
                if config.labels {
                    std::hint::black_box(assemble_partition(sizes, &mut rng));
                } else {
                    std::hint::black_box(sizes);
                }
            }
        }
        Method::Naive => {
            let sampler = NaiveSampler::new(&config.spec, config.n, config.max_attempts)?;
            let mut total = 0;
            for _ in 0..config.samples {
                match sampler.sample(&mut rng) {
                    Ok(draw) => {
                        total += draw.attempts;
                        if config.labels {
                            std::hint::black_box(assemble_partition(draw.sizes, &mut rng));
                        } else {
                            std::hint::black_box(draw.sizes);
                        }
                    }
                    Err(Error::Exhausted { attempts }) => {
                        total += attempts;
                        exhausted = true;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            attempts = Some(total);
        }
    }
    let wall_seconds = start.elapsed().as_secs_f64();
    Ok(BenchRecord {
        method,
        kind: config.spec.kind_name(),
        params: config.spec.params_label(),
        n: config.n,
        samples: config.samples,
        trial,
        wall_seconds,
        attempts,
        exhausted,
    })
}

/// All trials for all configured methods, ordered by trial then method.
pub fn run(config: &BenchConfig) -> Result<Vec<BenchRecord>> {
    if config.samples == 0 || config.trials == 0 {
        return Err(Error::Argument(
            "samples and trials must both be positive".into(),
        ));
    }
    if config.n == 0 {
        return Err(Error::Argument("benchmarking needs n >= 1".into()));
    }
    let jobs: Vec<(usize, Method)> = (0..config.trials)
        .flat_map(|t| config.methods.iter().map(move |&m| (t, m)))
        .collect();
    if config.parallel {
        jobs.par_iter()
            .map(|&(t, m)| run_trial(config, m, t))
            .collect()
    } else {
        jobs.iter().map(|&(t, m)| run_trial(config, m, t)).collect()
    }
}

/// Median wall time of one method's records.
pub fn median_seconds(records: &[BenchRecord], method: Method) -> Option<f64> {
    let mut times: Vec<f64> = records
        .iter()
        .filter(|r| r.method == method)
        .map(|r| r.wall_seconds)
        .collect();
    if times.is_empty() {
        return None;
    }
    times.sort_by(f64::total_cmp);
    let mid = times.len() / 2;
    Some(if times.len() % 2 == 1 {
        times[mid]
    } else {
        0.5 * (times[mid - 1] + times[mid])
    })
}
