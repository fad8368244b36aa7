//! Seeded, chunked Monte Carlo. Chunk `i` draws from ChaCha8 stream `i` of the
//! run seed and chunks are merged in index order, so results depend on
//! (seed, samples) only and never on the number of worker threads.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub workers: usize,
}

impl McConfig {
    pub fn new(samples: usize, seed: u64, workers: usize) -> Result<Self> {
        let c = McConfig { samples, seed, workers };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 1000 {
            return Err(Error::Invalid(format!("{} samples, need at least 1000", self.samples)));
        }
        if self.workers == 0 {
            return Err(Error::Invalid("workers must be positive".into()));
        }
        Ok(())
    }
}

pub fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean_re: f64,
    mean_im: f64,
    m2_re: f64,
    m2_im: f64,
    max_abs: f64,
    sum_abs: f64,
    sum_pow: f64,
}

impl Moments {
    fn push(&mut self, w: Complex64) {
        self.n += 1.0;
        let dr = w.re - self.mean_re;
        self.mean_re += dr / self.n;
        self.m2_re += dr * (w.re - self.mean_re);
        let di = w.im - self.mean_im;
        self.mean_im += di / self.n;
        self.m2_im += di * (w.im - self.mean_im);
        let a = w.norm();
        self.max_abs = self.max_abs.max(a);
        self.sum_abs += a;
        self.sum_pow += a.powf(1.1);
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        let dr = o.mean_re - self.mean_re;
        let di = o.mean_im - self.mean_im;
        self.m2_re += o.m2_re + dr * dr * self.n * o.n / n;
        self.m2_im += o.m2_im + di * di * self.n * o.n / n;
        self.mean_re += dr * o.n / n;
        self.mean_im += di * o.n / n;
        self.n = n;
        self.max_abs = self.max_abs.max(o.max_abs);
        self.sum_abs += o.sum_abs;
        self.sum_pow += o.sum_pow;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McStats {
    pub mean: Complex64,
    pub stderr: f64,
    pub n_samples: usize,
    /// Largest single |weight| over the sum of |weights|.
    pub max_weight_ratio: f64,
    /// Sample mean of |weight|^1.1.
    pub delta_moment: f64,
}

impl McStats {
    pub fn heavy_tail_warning(&self) -> bool {
        self.max_weight_ratio > 0.01 || !self.delta_moment.is_finite()
    }
}

/// Runs `cfg.samples` draws of `weight` and returns the sample statistics.
pub fn run<F>(cfg: &McConfig, weight: F) -> Result<McStats>
where
    F: Fn(&mut ChaCha8Rng) -> Complex64 + Sync,
{
    cfg.validate()?;
    let n_chunks = cfg.samples.div_ceil(CHUNK);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::NumericalError(e.to_string()))?;
    let parts: Vec<Moments> = pool.install(|| {
        (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = chunk_rng(cfg.seed, c as u64);
                let len = CHUNK.min(cfg.samples - c * CHUNK);
                let mut m = Moments::default();
                for _ in 0..len {
                    m.push(weight(&mut rng));
                }
                m
            })
            .collect()
    });
    let mut tot = Moments::default();
    for p in &parts {
        tot.merge(p);
    }
    if !(tot.mean_re.is_finite() && tot.mean_im.is_finite()) {
        return Err(Error::NumericalError("non-finite Monte Carlo mean".into()));
    }
    let n = tot.n;
    let var_re = tot.m2_re / (n - 1.0);
    let var_im = tot.m2_im / (n - 1.0);
    Ok(McStats {
        mean: Complex64::new(tot.mean_re, tot.mean_im),
        stderr: ((var_re + var_im) / n).sqrt(),
        n_samples: cfg.samples,
        max_weight_ratio: if tot.sum_abs > 0.0 { tot.max_abs / tot.sum_abs } else { 0.0 },
        delta_moment: tot.sum_pow / n,
    })
}
