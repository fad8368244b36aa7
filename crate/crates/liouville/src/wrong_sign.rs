//! Expectations under wrong-sign Gaussians: E f(X) := E f̃(iW) with W standard
//! normal, for f analytic. Also integration by parts, the backward heat
//! equation, tilted measures and the one-dimensional semiclassical toys.

use crate::error::{Error, Result};
use crate::mc::{self, McConfig};
use crate::quad::{adaptive_gk, gauss_hermite_prob};
use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

pub type EvalFn = Arc<dyn Fn(&[Complex64]) -> Complex64 + Send + Sync>;

/// A function analytic on C^(m+n). The first `arity_m` arguments are ordinary
/// Gaussian coordinates, the remaining `arity_n` have negative variance.
#[derive(Clone)]
pub struct AnalyticFn {
    pub arity_m: usize,
    pub arity_n: usize,
    pub eval: EvalFn,
    /// Constant c in |f(z)| = O(exp(c|z|^2)), when known.
    pub growth_bound: Option<f64>,
}

impl AnalyticFn {
    pub fn new<F>(arity_m: usize, arity_n: usize, f: F) -> Self
    where
        F: Fn(&[Complex64]) -> Complex64 + Send + Sync + 'static,
    {
        AnalyticFn { arity_m, arity_n, eval: Arc::new(f), growth_bound: None }
    }

    /// One negative-variance variable.
    pub fn univariate<F>(f: F) -> Self
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync + 'static,
    {
        Self::new(0, 1, move |z: &[Complex64]| f(z[0]))
    }

    pub fn with_growth_bound(mut self, c: f64) -> Self {
        self.growth_bound = Some(c);
        self
    }

    pub fn dim(&self) -> usize {
        self.arity_m + self.arity_n
    }
}

impl std::fmt::Debug for AnalyticFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AnalyticFn")
            .field("arity_m", &self.arity_m)
            .field("arity_n", &self.arity_n)
            .field("growth_bound", &self.growth_bound)
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadScheme {
    GaussHermiteTensor,
    MonteCarlo,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: QuadScheme,
    /// Nodes per dimension (tensor rule) or sample count (Monte Carlo).
    pub points: usize,
    pub seed: u64,
}

impl QuadratureSpec {
    /// 200-node tensor rule up to two dimensions, Monte Carlo beyond.
    pub fn default_for(dim: usize) -> Self {
        if dim <= 2 {
            QuadratureSpec { scheme: QuadScheme::GaussHermiteTensor, points: 200, seed: 0 }
        } else {
            QuadratureSpec { scheme: QuadScheme::MonteCarlo, points: 1_000_000, seed: 0 }
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self.scheme {
            QuadScheme::GaussHermiteTensor if dim > 6 => {
                Err(Error::Invalid(format!("tensor rule in {dim} dimensions (limit 6)")))
            }
            QuadScheme::GaussHermiteTensor if self.points == 0 => {
                Err(Error::Invalid("need at least one node".into()))
            }
            QuadScheme::MonteCarlo if self.points < 1000 => {
                Err(Error::Invalid("Monte Carlo needs at least 1000 samples".into()))
            }
            _ => Ok(()),
        }
    }
}

/// E g(W) for W standard normal in `dim` dimensions, g taking real arguments.
fn gaussian_average<G>(dim: usize, q: &QuadratureSpec, g: G) -> Result<Complex64>
where
    G: Fn(&[f64]) -> Complex64 + Sync,
{
    q.validate(dim)?;
    match q.scheme {
        QuadScheme::GaussHermiteTensor => {
            let (x, w) = gauss_hermite_prob(q.points);
            let n = q.points;
            let total = n.pow(dim as u32);
            let mut idx = vec![0usize; dim];
            let mut pt = vec![0.0; dim];
            let mut acc = Complex64::new(0.0, 0.0);
            for _ in 0..total {
                let mut wt = 1.0;
                for d in 0..dim {
                    pt[d] = x[idx[d]];
                    wt *= w[idx[d]];
                }
                let v = g(&pt);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::DivergentIntegrand(format!("{pt:?}")));
                }
                acc += v * wt;
                for d in 0..dim {
                    idx[d] += 1;
                    if idx[d] < n {
                        break;
                    }
                    idx[d] = 0;
                }
            }
            Ok(acc)
        }
        QuadScheme::MonteCarlo => {
            let cfg = McConfig { samples: q.points, seed: q.seed, workers: rayon::current_num_threads() };
            let stats = mc::run(&cfg, |rng| {
                let pt: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                let v = g(&pt);
                if v.re.is_finite() && v.im.is_finite() {
                    v
                } else {
                    Complex64::new(f64::NAN, f64::NAN)
                }
            })
            .map_err(|_| Error::DivergentIntegrand("non-finite sample".into()))?;
            Ok(stats.mean)
        }
    }
}

fn check_growth(f: &AnalyticFn) -> Result<()> {
    if let Some(c) = f.growth_bound {
        if c >= 0.5 {
            return Err(Error::GrowthViolation(format!(
                "growth constant {c} makes the Gaussian average diverge"
            )));
        }
    }
    Ok(())
}

/// E f(W_1, …, W_m, iW_{m+1}, …, iW_{m+n}).
pub fn expect_wrong_sign(f: &AnalyticFn, q: &QuadratureSpec) -> Result<Complex64> {
    check_growth(f)?;
    let m = f.arity_m;
    let dim = f.dim();
    gaussian_average(dim, q, |w| {
        let z: Vec<Complex64> = w
            .iter()
            .enumerate()
            .map(|(k, &v)| if k < m { Complex64::new(v, 0.0) } else { Complex64::new(0.0, v) })
            .collect();
        (f.eval)(&z)
    })
}

/// E(Y_j f(Z)) + E(∂_{m+j} f(Z)) with j indexing the negative-variance block.
pub fn ward_residual(f: &AnalyticFn, df: &AnalyticFn, j: usize, q: &QuadratureSpec) -> Result<Complex64> {
    if j >= f.arity_n {
        return Err(Error::Invalid(format!("coordinate {j} out of range")));
    }
    let k = f.arity_m + j;
    let inner = f.eval.clone();
    let yf = AnalyticFn {
        arity_m: f.arity_m,
        arity_n: f.arity_n,
        eval: Arc::new(move |z: &[Complex64]| z[k] * inner(z)),
        growth_bound: f.growth_bound,
    };
    Ok(expect_wrong_sign(&yf, q)? + expect_wrong_sign(df, q)?)
}

/// f(t, x) = E h(x + i√(2t) Z), the solution of ∂_t f = −Δf with f(0) = h.
pub fn backward_heat(h: &AnalyticFn, t: f64, x: &[f64], q: &QuadratureSpec) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::Invalid(format!("time {t} must be nonnegative")));
    }
    if x.len() != h.dim() {
        return Err(Error::Invalid("point dimension does not match h".into()));
    }
    if let Some(c) = h.growth_bound {
        if 4.0 * c * t >= 1.0 {
            return Err(Error::HorizonExceeded { t, horizon: 1.0 / (4.0 * c) });
        }
    }
    let s = (2.0 * t).sqrt();
    let x = x.to_vec();
    gaussian_average(h.dim(), q, |w| {
        let z: Vec<Complex64> = x.iter().zip(w).map(|(&a, &v)| Complex64::new(a, s * v)).collect();
        (h.eval)(&z)
    })
}

/// Σ_k Σ_j (−1)^k e^{−(k−2j)²/2}/(j!(k−j)!), the exact value of E exp(−e^X − e^{−X}).
pub fn toy_series() -> f64 {
    let mut total = 0.0;
    let mut k = 0usize;
    let mut ln_kfact = 0.0;
    loop {
        // row k: Σ_j C(k,j) e^{−(k−2j)²/2} / k!, bounded by 2^k / k!
        let mut row = 0.0;
        let mut ln_binom = 0.0;
        for j in 0..=k {
            if j > 0 {
                ln_binom += ((k - j + 1) as f64).ln() - (j as f64).ln();
            }
            let e = (k as f64 - 2.0 * j as f64).powi(2) / 2.0;
            row += (ln_binom - ln_kfact - e).exp();
        }
        total += if k % 2 == 0 { row } else { -row };
        let bound = (k as f64 * 2f64.ln() - ln_kfact).exp();
        if k > 4 && bound < 1e-14 {
            break;
        }
        k += 1;
        ln_kfact += (k as f64).ln();
    }
    total
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NaiveVsCorrect {
    pub naive: Complex64,
    pub correct: Complex64,
}

/// Naive continuation h(i) of the Gaussian average of exp(−e^x − e^{−x})
/// against the wrong-sign expectation of the same function.
pub fn naive_vs_correct_demo() -> Result<NaiveVsCorrect> {
    // (1/(√(2π) i)) ∫_0^∞ u^{-1} exp(−u − 1/u + (ln u)²/2) du, with u = e^s
    let f = |s: f64| Complex64::new((-s.exp() - (-s).exp() + 0.5 * s * s).exp(), 0.0);
    let breaks: Vec<f64> = (-16..=16).map(|k| k as f64 * 0.5).collect();
    let (v, _) = adaptive_gk(&f, &breaks, 1e-15, 1e-14, 2000)?;
    let naive = v / (2.0 * PI).sqrt() / Complex64::new(0.0, 1.0);
    let toy = AnalyticFn::univariate(|z| (-z.exp() - (-z).exp()).exp());
    let correct = expect_wrong_sign(&toy, &QuadratureSpec::default_for(1))?;
    Ok(NaiveVsCorrect { naive, correct })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tilt {
    /// F(x) = a x
    Linear(f64),
    /// F(x) = e^{αx}
    Exponential(f64),
}

/// Smaller root of x = α e^{αx}.
pub fn critical_point(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::RootNotBracketed(format!("alpha = {alpha} must be positive")));
    }
    let f = |x: f64| x - alpha * (alpha * x).exp();
    let (mut lo, mut hi) = (0.0, 1.0 / alpha);
    if f(hi) < 0.0 {
        return Err(Error::RootNotBracketed(format!("alpha = {alpha} exceeds e^(-1/2)")));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = 1.0 - alpha * alpha * (alpha * x).exp();
        if d > 1e-8 {
            x -= f(x) / d;
        }
    }
    Ok(x)
}

/// Shifted-contour weight for F = e^{αx}: the integrand of
/// E(e^{−F(bX)/b²}) e^{−H(x0)/b²} against the standard normal, at node x.
fn exp_tilt_kernel(alpha: f64, x0: f64, b: f64, x: f64) -> Complex64 {
    let th = alpha * b * x;
    let th_minus_sin = if th.abs() < 1e-3 {
        th.powi(3) / 6.0 - th.powi(5) / 120.0
    } else {
        th - th.sin()
    };
    let s = (0.5 * th).sin();
    let a = (alpha * x0).exp() / (b * b);
    Complex64::new(2.0 * a * s * s, a * th_minus_sin).exp()
}

/// ⟨g⟩_b = E(g(bX) e^{−F(bX)/b²}) / E(e^{−F(bX)/b²}), evaluated on the
/// contour through the critical point so the integrand does not oscillate.
pub fn tilted_expectation(g: &AnalyticFn, tilt: Tilt, b: f64, q: &QuadratureSpec) -> Result<Complex64> {
    if g.dim() != 1 {
        return Err(Error::Invalid("tilted expectations take a function of one variable".into()));
    }
    if !(b > 0.0) {
        return Err(Error::Invalid(format!("b = {b} must be positive")));
    }
    if let Some(c) = g.growth_bound {
        if b >= (2.0 * c).powf(-0.5) {
            return Err(Error::GrowthViolation(format!("b = {b} too large for growth constant {c}")));
        }
    }
    let ev = g.eval.clone();
    match tilt {
        Tilt::Linear(a) => {
            // The partition function e^{−a²/(2b²)} cancels exactly.
            gaussian_average(1, q, |w| ev(&[Complex64::new(a, b * w[0])]))
        }
        Tilt::Exponential(alpha) => {
            let x0 = critical_point(alpha)?;
            let num = gaussian_average(1, q, |w| {
                ev(&[Complex64::new(x0, b * w[0])]) * exp_tilt_kernel(alpha, x0, b, w[0])
            })?;
            let den = gaussian_average(1, q, |w| exp_tilt_kernel(alpha, x0, b, w[0]))?;
            Ok(num / den)
        }
    }
}

/// E(e^{−F(bX)/b²}) / e^{H(x0)/b²} for F = e^{αx}, one value per b.
pub fn toy_partition_limit(alpha: f64, b_list: &[f64], q: &QuadratureSpec) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < (-0.5f64).exp()) {
        return Err(Error::RootNotBracketed(format!("alpha = {alpha} outside (0, e^(-1/2))")));
    }
    let x0 = critical_point(alpha)?;
    b_list
        .iter()
        .map(|&b| {
            if !(b > 0.0 && b <= 0.5) {
                return Err(Error::Invalid(format!("b = {b} outside (0, 0.5]")));
            }
            Ok(gaussian_average(1, q, |w| exp_tilt_kernel(alpha, x0, b, w[0]))?.re)
        })
        .collect()
}

/// 1/√(1 − αx0), the b → 0 limit of `toy_partition_limit`.
pub fn toy_partition_target(alpha: f64) -> Result<f64> {
    let x0 = critical_point(alpha)?;
    Ok(1.0 / (1.0 - alpha * x0).sqrt())
}
