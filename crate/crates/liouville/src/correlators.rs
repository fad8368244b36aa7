//! Coulomb-gas Monte Carlo for k-point functions in the plane and sphere
//! frames, the regularized series, and the complex Selberg integral.

use crate::error::{Error, Result};
use crate::mc::{self, McConfig, McStats};
use crate::special_fn::{ln_gamma, ln_gamma_ratio};
use crate::sphere_geom::{
    conformal_weight, green, green_chordal, green_regularized, inverse_stereographic,
    round_metric, sample_uniform_sphere, stereographic, LiouvilleParams, RegularizationConfig,
    SpherePoint, NORTH_POLE,
};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Position {
    Plane(Complex64),
    Sphere(SpherePoint),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    pub position: Position,
    pub alpha: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frame {
    Plane,
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InsertionSet {
    pub entries: Vec<Insertion>,
    pub frame: Frame,
}

impl InsertionSet {
    pub fn plane(points: &[Complex64], alphas: &[Complex64]) -> Result<Self> {
        if points.len() != alphas.len() {
            return Err(Error::Invalid("positions and charges differ in length".into()));
        }
        let entries = points
            .iter()
            .zip(alphas)
            .map(|(&z, &a)| Insertion { position: Position::Plane(z), alpha: a })
            .collect();
        let s = InsertionSet { entries, frame: Frame::Plane };
        s.validate()?;
        Ok(s)
    }

    pub fn sphere(points: &[SpherePoint], alphas: &[Complex64]) -> Result<Self> {
        if points.len() != alphas.len() {
            return Err(Error::Invalid("positions and charges differ in length".into()));
        }
        let entries = points
            .iter()
            .zip(alphas)
            .map(|(&x, &a)| Insertion { position: Position::Sphere(x), alpha: a })
            .collect();
        let s = InsertionSet { entries, frame: Frame::Sphere };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for e in &self.entries {
            match (self.frame, e.position) {
                (Frame::Plane, Position::Plane(z)) if z.re.is_finite() && z.im.is_finite() => {}
                (Frame::Sphere, Position::Sphere(x)) => {
                    if x.is_north_pole() {
                        return Err(Error::NorthPoleError);
                    }
                }
                _ => return Err(Error::Invalid("position does not match frame".into())),
            }
        }
        let pts = self.sphere_points()?;
        for i in 0..pts.len() {
            for j in 0..i {
                if pts[i].chordal(&pts[j]) < 1e-12 {
                    return Err(Error::CoincidentInsertions);
                }
            }
        }
        Ok(())
    }

    pub fn alphas(&self) -> Vec<Complex64> {
        self.entries.iter().map(|e| e.alpha).collect()
    }

    pub fn plane_points(&self) -> Result<Vec<Complex64>> {
        self.entries
            .iter()
            .map(|e| match e.position {
                Position::Plane(z) => Ok(z),
                Position::Sphere(x) => stereographic(&x),
            })
            .collect()
    }

    pub fn sphere_points(&self) -> Result<Vec<SpherePoint>> {
        Ok(self
            .entries
            .iter()
            .map(|e| match e.position {
                Position::Plane(z) => inverse_stereographic(z),
                Position::Sphere(x) => x,
            })
            .collect())
    }

    pub fn to_plane(&self) -> Result<Self> {
        InsertionSet::plane(&self.plane_points()?, &self.alphas())
    }

    pub fn to_sphere(&self) -> Result<Self> {
        InsertionSet::sphere(&self.sphere_points()?, &self.alphas())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NeutralityReport {
    pub w_exact: Complex64,
    pub w_int: Option<u32>,
    pub is_neutral: bool,
}

pub fn neutrality_of(params: &LiouvilleParams, alphas: &[Complex64]) -> NeutralityReport {
    let sum: Complex64 = alphas.iter().sum();
    let w = (params.q - sum) / params.b;
    let r = w.re.round();
    let is_neutral = (w.re - r).abs() < 1e-9 && w.im.abs() < 1e-9 && r >= 1.0;
    NeutralityReport { w_exact: w, w_int: is_neutral.then_some(r as u32), is_neutral }
}

pub fn neutrality(params: &LiouvilleParams, ins: &InsertionSet) -> NeutralityReport {
    neutrality_of(params, &ins.alphas())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub mean: Complex64,
    pub stderr: f64,
    pub n_samples: usize,
    pub prefactor_log: Complex64,
    pub max_weight_ratio: f64,
    pub delta_moment: f64,
    pub heavy_tail_warning: bool,
    /// stderr/|mean| > 1
    pub statistical_failure: bool,
}

impl CorrelationEstimate {
    fn from_stats(stats: &McStats, prefactor_log: Complex64) -> Self {
        let pf = prefactor_log.exp();
        let mean = pf * stats.mean;
        let stderr = pf.norm() * stats.stderr;
        CorrelationEstimate {
            mean,
            stderr,
            n_samples: stats.n_samples,
            prefactor_log,
            max_weight_ratio: stats.max_weight_ratio,
            delta_moment: stats.delta_moment,
            heavy_tail_warning: stats.heavy_tail_warning(),
            statistical_failure: stderr > mean.norm(),
        }
    }

    /// Distance between two estimates in units of their combined stderr.
    pub fn sigmas_from(&self, other: &CorrelationEstimate) -> f64 {
        let s = (self.stderr.powi(2) + other.stderr.powi(2)).sqrt();
        (self.mean - other.mean).norm() / s
    }
}

/// Mixture proposal on the sphere: uniform plus power-law caps
/// p(y) ∝ d(y, c)^{s−2} around each singular point c.
#[derive(Debug, Clone)]
pub(crate) struct Proposal {
    p_uniform: f64,
    caps: Vec<Cap>,
}

#[derive(Debug, Clone)]
struct Cap {
    tag: usize,
    center: [f64; 3],
    e1: [f64; 3],
    e2: [f64; 3],
    s: f64,
    radius: f64,
    weight: f64,
}

/// A proposal draw. When drawn from a cap, `ln_d` is the exact log chordal
/// distance to that cap's centre; the coordinates of `y` cannot resolve it
/// once d falls below machine precision.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Draw {
    pub y: SpherePoint,
    pub tag: Option<usize>,
    pub ln_d: f64,
}

impl Draw {
    /// log chordal distance to the singular point with index `tag`.
    pub(crate) fn ln_dist(&self, tag: usize, c: &SpherePoint) -> f64 {
        if self.tag == Some(tag) {
            self.ln_d
        } else {
            self.y.chordal(c).ln()
        }
    }
}

fn orthonormal_frame(c: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let a = if c[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = a[0] * c[0] + a[1] * c[1] + a[2] * c[2];
    let mut e1 = [a[0] - d * c[0], a[1] - d * c[1], a[2] - d * c[2]];
    let n = (e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]).sqrt();
    e1 = [e1[0] / n, e1[1] / n, e1[2] / n];
    let e2 = [c[1] * e1[2] - c[2] * e1[1], c[2] * e1[0] - c[0] * e1[2], c[0] * e1[1] - c[1] * e1[0]];
    (e1, e2)
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    if lo == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

impl Proposal {
    /// `singular` lists (center, exponent 4b Re α) pairs; only negative
    /// exponents get a cap. Caps are tagged with their index in `singular`.
    pub(crate) fn new(singular: &[(SpherePoint, f64)]) -> Self {
        let centers: Vec<(usize, SpherePoint, f64)> = singular
            .iter()
            .enumerate()
            .filter(|(_, (_, e))| *e < 0.0)
            .map(|(i, (c, e))| (i, *c, *e))
            .collect();
        let mut min_sep: f64 = 2.0;
        for i in 0..centers.len() {
            for j in 0..i {
                min_sep = min_sep.min(centers[i].1.chordal(&centers[j].1));
            }
        }
        let radius = (0.5 * min_sep).min(1.0);
        let p_uniform = if centers.is_empty() { 1.0 } else { 0.5 };
        let wcap = if centers.is_empty() { 0.0 } else { 0.5 / centers.len() as f64 };
        let caps = centers
            .iter()
            .map(|&(tag, c, e)| {
                let (e1, e2) = orthonormal_frame(c.coords);
                Cap { tag, center: c.coords, e1, e2, s: 2.0 + e, radius, weight: wcap }
            })
            .collect();
        Proposal { p_uniform, caps }
    }

    pub(crate) fn sample(&self, rng: &mut ChaCha8Rng) -> Draw {
        let u: f64 = rng.random();
        if u < self.p_uniform || self.caps.is_empty() {
            return Draw { y: sample_uniform_sphere(rng), tag: None, ln_d: 0.0 };
        }
        let mut acc = self.p_uniform;
        let mut cap = &self.caps[self.caps.len() - 1];
        for c in &self.caps {
            acc += c.weight;
            if u < acc {
                cap = c;
                break;
            }
        }
        let v: f64 = 1.0 - rng.random::<f64>();
        let ln_d = cap.radius.ln() + v.ln() / cap.s;
        let d = ln_d.exp();
        let th = 2.0 * (0.5 * d).asin();
        let phi = 2.0 * PI * rng.random::<f64>();
        let (st, ct) = th.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let mut y = [0.0; 3];
        for k in 0..3 {
            y[k] = ct * cap.center[k] + st * (cp * cap.e1[k] + sp * cap.e2[k]);
        }
        Draw { y: SpherePoint::normalized(y), tag: Some(cap.tag), ln_d }
    }

    /// log density relative to the uniform probability measure on the sphere.
    pub(crate) fn ln_density(&self, dr: &Draw) -> f64 {
        let mut lq = self.p_uniform.ln();
        for c in &self.caps {
            let ln_d = if dr.tag == Some(c.tag) {
                dr.ln_d
            } else {
                let dv = [dr.y.coords[0] - c.center[0], dr.y.coords[1] - c.center[1], dr.y.coords[2] - c.center[2]];
                0.5 * (dv[0] * dv[0] + dv[1] * dv[1] + dv[2] * dv[2]).ln()
            };
            if ln_d < c.radius.ln() {
                let t = (c.weight * 2.0 * c.s).ln() - c.s * c.radius.ln() + (c.s - 2.0) * ln_d;
                lq = log_add(lq, t);
            }
        }
        lq
    }
}

/// A plane point held as t = σ(y) in the southern hemisphere and as 1/t in
/// the northern one, so that neighbourhoods of ∞ keep full precision.
#[derive(Debug, Clone, Copy)]
struct PlanePt {
    north: bool,
    v: Complex64,
}

impl PlanePt {
    fn from_sphere(y: &SpherePoint) -> Self {
        let [x1, x2, x3] = y.coords;
        if x3 > 0.0 {
            PlanePt { north: true, v: Complex64::new(x1, -x2) / (1.0 + x3) }
        } else {
            PlanePt { north: false, v: Complex64::new(x1, x2) / (1.0 - x3) }
        }
    }

    fn ln_abs_v(&self) -> f64 {
        self.v.norm().ln()
    }

    /// ln(1 + |t|²)
    fn ln_one_plus_t2(&self) -> f64 {
        let l = self.v.norm_sqr().ln_1p();
        if self.north {
            l - 2.0 * self.ln_abs_v()
        } else {
            l
        }
    }

    /// ln|a − t| for finite a.
    fn ln_dist(&self, a: Complex64) -> f64 {
        if self.north {
            (1.0 - a * self.v).norm().ln() - self.ln_abs_v()
        } else {
            (a - self.v).norm().ln()
        }
    }

    fn ln_pair(&self, o: &PlanePt) -> f64 {
        match (self.north, o.north) {
            (false, false) => (self.v - o.v).norm().ln(),
            (true, true) => (self.v - o.v).norm().ln() - self.ln_abs_v() - o.ln_abs_v(),
            (true, false) => o.ln_dist_from_north(self),
            (false, true) => self.ln_dist_from_north(o),
        }
    }

    fn ln_dist_from_north(&self, n: &PlanePt) -> f64 {
        (1.0 - self.v * n.v).norm().ln() - n.ln_abs_v()
    }
}

fn check_charges(params: &LiouvilleParams, alphas: &[Complex64]) -> Result<u32> {
    if alphas.len() < 3 {
        return Err(Error::Invalid("need at least three insertions".into()));
    }
    let rep = neutrality_of(params, alphas);
    let w = rep.w_int.ok_or_else(|| Error::NotNeutral(format!("{}", rep.w_exact)))?;
    for (j, a) in alphas.iter().enumerate() {
        if a.re <= -0.5 / params.b {
            return Err(Error::SingularInsertion { index: j });
        }
    }
    Ok(w)
}

fn ln_factorial(n: u32) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// log of e^{−iπw} μ^w / w!
fn ln_screening_prefactor(params: &LiouvilleParams, w: u32) -> Complex64 {
    Complex64::new(w as f64 * params.mu.ln() - ln_factorial(w), -PI * w as f64)
}

fn ln_four_over_e(params: &LiouvilleParams) -> f64 {
    (1.0 - 1.0 / (params.b * params.b)) * (4f64.ln() - 1.0)
}

/// Plane-frame Coulomb gas integral weight for one draw of w screening charges.
/// Proposal tags below `z.len()` refer to the insertions.
fn plane_weight(
    b: f64,
    z: &[Complex64],
    alphas: &[Complex64],
    prop: &Proposal,
    w: usize,
    rng: &mut ChaCha8Rng,
) -> Complex64 {
    let mut ts = Vec::with_capacity(w);
    let mut lw = Complex64::new(0.0, 0.0);
    for _ in 0..w {
        let dr = prop.sample(rng);
        let t = PlanePt::from_sphere(&dr.y);
        if t.north && t.v == Complex64::new(0.0, 0.0) {
            return Complex64::new(0.0, 0.0);
        }
        let l1t = t.ln_one_plus_t2();
        for (j, (zj, aj)) in z.iter().zip(alphas).enumerate() {
            let ld = match dr.tag {
                // chordal identity |z − t| = d √((1+|z|²)(1+|t|²)) / 2
                Some(k) if k == j => dr.ln_d + 0.5 * (zj.norm_sqr().ln_1p() + l1t) - LN_2,
                _ => t.ln_dist(*zj),
            };
            lw += 4.0 * b * aj * ld;
        }
        // 4π / g(t) = π (1 + |t|²)²
        lw += PI.ln() + 2.0 * l1t - prop.ln_density(&dr);
        ts.push(t);
    }
    for l in 0..w {
        for m in 0..l {
            lw += 4.0 * b * b * ts[l].ln_pair(&ts[m]);
        }
    }
    lw.exp()
}

/// k-point function from the plane Coulomb-gas formula.
pub fn kpoint_plane(params: &LiouvilleParams, ins: &InsertionSet, mc: &McConfig) -> Result<CorrelationEstimate> {
    ins.validate()?;
    let alphas = ins.alphas();
    let w = check_charges(params, &alphas)?;
    let z = ins.plane_points()?;
    let b = params.b;
    let mut pf = ln_screening_prefactor(params, w) + ln_four_over_e(params);
    for j in 0..z.len() {
        for k in 0..j {
            pf += 4.0 * alphas[j] * alphas[k] * (z[j] - z[k]).norm().ln();
        }
    }
    let singular: Vec<(SpherePoint, f64)> =
        z.iter().zip(&alphas).map(|(&zj, a)| (inverse_stereographic(zj), 4.0 * b * a.re)).collect();
    let prop = Proposal::new(&singular);
    let stats = mc::run(mc, |rng| plane_weight(b, &z, &alphas, &prop, w as usize, rng))?;
    Ok(CorrelationEstimate::from_stats(&stats, pf))
}

/// log of e^{χα(b−α)} g(σ(x))^{−Δ_α}
pub fn ln_vertex_prefactor(params: &LiouvilleParams, x: &SpherePoint, alpha: Complex64) -> Result<Complex64> {
    let g = round_metric(stereographic(x)?);
    Ok(params.chi * alpha * (params.b - alpha) - conformal_weight(params, alpha) * g.ln())
}

/// k-point function from the sphere Green's-function formula.
pub fn kpoint_sphere(params: &LiouvilleParams, ins: &InsertionSet, mc: &McConfig) -> Result<CorrelationEstimate> {
    ins.validate()?;
    let alphas = ins.alphas();
    let w = check_charges(params, &alphas)? as usize;
    let x = ins.sphere_points()?;
    let b = params.b;
    let mut pf = ln_screening_prefactor(params, w as u32);
    for (xj, aj) in x.iter().zip(&alphas) {
        pf += ln_vertex_prefactor(params, xj, *aj)?;
    }
    for j in 0..x.len() {
        for k in 0..j {
            pf -= 4.0 * alphas[j] * alphas[k] * green(&x[j], &x[k])?;
        }
    }
    let singular: Vec<(SpherePoint, f64)> = x.iter().zip(&alphas).map(|(&p, a)| (p, 4.0 * b * a.re)).collect();
    let prop = Proposal::new(&singular);
    let stats = mc::run(mc, |rng| {
        let mut ys = Vec::with_capacity(w);
        let mut lw = Complex64::new(0.0, 0.0);
        for _ in 0..w {
            let dr = prop.sample(rng);
            for (j, (xj, aj)) in x.iter().zip(&alphas).enumerate() {
                // G = −ln d − 1/2 + ln 2
                lw -= 4.0 * b * aj * (-dr.ln_dist(j, xj) - 0.5 + LN_2);
            }
            lw += (4.0 * PI).ln() - prop.ln_density(&dr);
            ys.push(dr.y);
        }
        for l in 0..w {
            for m in 0..l {
                lw -= 4.0 * b * b * green_chordal(ys[l].chordal(&ys[m]));
            }
        }
        lw.exp()
    })?;
    Ok(CorrelationEstimate::from_stats(&stats, pf))
}

/// Terms n = 0..=n_max of the regularized correlation series.
pub fn regularized_series(
    params: &LiouvilleParams,
    ins: &InsertionSet,
    cfg: &RegularizationConfig,
    n_max: usize,
    mc: &McConfig,
) -> Result<Vec<CorrelationEstimate>> {
    ins.validate()?;
    let alphas = ins.alphas();
    let rep = neutrality(params, ins);
    let w = rep.w_exact;
    if let Some(wi) = rep.w_int {
        if n_max < wi as usize + 2 {
            return Err(Error::Invalid(format!("n_max = {n_max} must be at least w + 2")));
        }
    }
    let x = ins.sphere_points()?;
    let b = params.b;
    let mut base = Complex64::new(0.0, 0.0);
    for (xj, aj) in x.iter().zip(&alphas) {
        base += ln_vertex_prefactor(params, xj, *aj)?;
    }
    for j in 0..x.len() {
        for k in 0..j {
            base -= 4.0 * alphas[j] * alphas[k] * green_regularized(cfg, &x[j], &x[k]);
        }
    }
    let mut terms = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let nf = n as f64;
        // (−μ)^n / n!
        let mut pf = base + Complex64::new(nf * params.mu.ln() - ln_factorial(n as u32), PI * nf);
        pf -= (nf - w) * (nf - w) * b * b / (4.0 * PI * cfg.epsilon);
        if n == 0 {
            let one = McStats {
                mean: Complex64::new(1.0, 0.0),
                stderr: 0.0,
                n_samples: mc.samples,
                max_weight_ratio: 0.0,
                delta_moment: 1.0,
            };
            terms.push(CorrelationEstimate::from_stats(&one, pf));
            continue;
        }
        let stats = mc::run(mc, |rng| {
            let ys: Vec<SpherePoint> = (0..n).map(|_| sample_uniform_sphere(rng)).collect();
            let mut lw = Complex64::new(nf * (4.0 * PI).ln(), 0.0);
            for y in &ys {
                for (xj, aj) in x.iter().zip(&alphas) {
                    lw -= 4.0 * b * aj * green_regularized(cfg, xj, y);
                }
            }
            for l in 0..n {
                for m in 0..l {
                    lw -= 4.0 * b * b * green_regularized(cfg, &ys[l], &ys[m]);
                }
            }
            lw.exp()
        })?;
        terms.push(CorrelationEstimate::from_stats(&stats, pf));
    }
    Ok(terms)
}

/// Aomoto conditions for the complex Selberg integral.
pub fn aomoto_check(b: f64, alpha1: f64, alpha2: f64, w: u32) -> Result<()> {
    let wf = w as f64;
    let conds = [
        (2.0 * b * alpha1 > -1.0, "2b alpha1 > -1"),
        (2.0 * b * alpha2 > -1.0, "2b alpha2 > -1"),
        (2.0 * b * (alpha1 + alpha2) < -1.0, "2b(alpha1 + alpha2) < -1"),
        (2.0 * (wf - 1.0) * b * b + 2.0 * b * (alpha1 + alpha2) < -1.0, "2(w-1)b^2 + 2b(alpha1 + alpha2) < -1"),
    ];
    for (ok, name) in conds {
        if !ok {
            return Err(Error::ConvergenceConditionViolated(name.into()));
        }
    }
    Ok(())
}

/// ∫_{C^w} Π|t_l|^{4bα₁}|1−t_l|^{4bα₂} Π|t_l−t_{l'}|^{4b²} by Monte Carlo.
pub fn selberg_complex(b: f64, alpha1: f64, alpha2: f64, w: u32, mc: &McConfig) -> Result<CorrelationEstimate> {
    if !(b > 0.0 && b <= 1.0) || w == 0 {
        return Err(Error::Invalid("need 0 < b <= 1 and w >= 1".into()));
    }
    aomoto_check(b, alpha1, alpha2, w)?;
    let alpha3 = b - 1.0 / b - alpha1 - alpha2 - b * w as f64;
    let z = [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
    let alphas = [Complex64::new(alpha1, 0.0), Complex64::new(alpha2, 0.0)];
    let prop = Proposal::new(&[
        (inverse_stereographic(z[0]), 4.0 * b * alpha1),
        (inverse_stereographic(z[1]), 4.0 * b * alpha2),
        (NORTH_POLE, 4.0 * b * alpha3),
    ]);
    let stats = mc::run(mc, |rng| plane_weight(b, &z, &alphas, &prop, w as usize, rng))?;
    Ok(CorrelationEstimate::from_stats(&stats, Complex64::new(0.0, 0.0)))
}

/// log of w! π^w γ(b²)^{−w} Π_j γ(jb²) Π_r Π_j γ(1 + 2bα_r + (j−1)b²).
/// Returns None when some factor vanishes.
pub fn ln_selberg_closed_form(b: f64, alphas: [Complex64; 3], w: u32) -> Result<Option<Complex64>> {
    let b2 = b * b;
    let wf = w as f64;
    let mut acc = Complex64::new(ln_gamma(Complex64::new(wf + 1.0, 0.0))?.re + wf * PI.ln(), 0.0);
    let lg = |x: Complex64, r: usize, j: usize| {
        ln_gamma_ratio(x).map_err(|_| Error::PoleInFactor { r, j })
    };
    match lg(Complex64::new(b2, 0.0), 0, 0)? {
        Some(l) => acc -= wf * l,
        None => return Err(Error::PoleInFactor { r: 0, j: 0 }),
    }
    for j in 1..=w as usize {
        match lg(Complex64::new(j as f64 * b2, 0.0), 0, j)? {
            Some(l) => acc += l,
            None => return Ok(None),
        }
        for (r, a) in alphas.iter().enumerate() {
            match lg(1.0 + 2.0 * b * a + (j as f64 - 1.0) * b2, r + 1, j)? {
                Some(l) => acc += l,
                None => return Ok(None),
            }
        }
    }
    Ok(Some(acc))
}

pub fn selberg_closed_form(b: f64, alpha1: Complex64, alpha2: Complex64, alpha3: Complex64, w: u32) -> Result<Complex64> {
    Ok(ln_selberg_closed_form(b, [alpha1, alpha2, alpha3], w)?.map_or(Complex64::new(0.0, 0.0), |l| l.exp()))
}
