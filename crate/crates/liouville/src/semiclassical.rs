//! Heavy-operator semiclassical limit: the entropy functional S = L + 2βR + H
//! on mesh densities, its minimizer, the limit value and the complex saddle ψ̂.
//!
//! The solver factorises ρ = K·u with K(x) = exp(−4Σα̃_j G(x_j, x)) carried
//! exactly by per-cell weights W_m = ∫_cell K da, and u piecewise constant.
//! This keeps the insertion singularities out of the discrete unknowns.

use crate::error::{Error, Result};
use crate::quad::gauss_legendre;
use crate::sphere_geom::{
    green, green_chordal, legendre_p, round_metric, stereographic, MeshCell, SphereMesh, SpherePoint,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};
use std::sync::Arc;

const FIXED_POINT_TOL: f64 = 1e-8;
const DENSE_LIMIT: usize = 8000;
const GL_ORDER: usize = 8;
const MAX_SUBDIVISION: u32 = 40;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SemiclassicalProblem {
    pub alphas_tilde: Vec<f64>,
    pub points: Vec<SpherePoint>,
    pub mu_tilde: f64,
    pub beta: f64,
}

impl SemiclassicalProblem {
    pub fn new(alphas_tilde: Vec<f64>, points: Vec<SpherePoint>, mu_tilde: f64) -> Result<Self> {
        let k = alphas_tilde.len();
        if k < 3 || points.len() != k {
            return Err(Error::Invalid("need k >= 3 charges and one point per charge".into()));
        }
        if let Some(j) = alphas_tilde.iter().position(|a| !(*a > -0.5) || !a.is_finite()) {
            return Err(Error::Invalid(format!("alpha_tilde[{j}] must exceed -1/2")));
        }
        if !(mu_tilde > 0.0) || !mu_tilde.is_finite() {
            return Err(Error::Invalid("mu_tilde must be positive".into()));
        }
        let beta = -1.0 - alphas_tilde.iter().sum::<f64>();
        if !(beta > 0.0) {
            return Err(Error::Invalid(format!("beta = {beta} must be positive")));
        }
        for j in 0..k {
            for i in 0..j {
                if points[i].chordal(&points[j]) < 1e-12 {
                    return Err(Error::CoincidentInsertions);
                }
            }
        }
        Ok(SemiclassicalProblem { alphas_tilde, points, mu_tilde, beta })
    }

    /// exp(−4Σα̃_j G(x_j, x))
    fn kernel(&self, x: &SpherePoint) -> f64 {
        let mut s = 0.0;
        for (xj, a) in self.points.iter().zip(&self.alphas_tilde) {
            s -= 4.0 * a * green_chordal(xj.chordal(x));
        }
        s.exp()
    }

    /// Kernel with the distance to insertion j supplied by the caller, for
    /// points too close to x_j to resolve through their coordinates.
    fn kernel_near(&self, x: &SpherePoint, j: usize, dj: f64) -> f64 {
        let mut s = 0.0;
        for (k, (xk, a)) in self.points.iter().zip(&self.alphas_tilde).enumerate() {
            let d = if k == j { dj } else { xk.chordal(x) };
            s -= 4.0 * a * green_chordal(d);
        }
        s.exp()
    }
}

/// Piecewise-constant probability density on a mesh (values are cell averages).
#[derive(Debug, Clone)]
pub struct Density {
    pub mesh: Arc<SphereMesh>,
    pub values: Vec<f64>,
}

impl Density {
    pub fn new(mesh: Arc<SphereMesh>, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::Invalid("one value per cell required".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Invalid("density values must be finite and nonnegative".into()));
        }
        let mass: f64 = values.iter().zip(&mesh.cells).map(|(v, c)| v * c.area).sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Invalid(format!("density integrates to {mass}, not 1")));
        }
        Ok(Density { mesh, values })
    }

    pub fn uniform(mesh: Arc<SphereMesh>) -> Self {
        let total = mesh.total_area();
        let values = vec![1.0 / total; mesh.len()];
        Density { mesh, values }
    }

    /// Rescale nonnegative cell values to unit mass.
    pub fn normalized(mesh: Arc<SphereMesh>, mut values: Vec<f64>) -> Result<Self> {
        let mass: f64 = values.iter().zip(&mesh.cells).map(|(v, c)| v * c.area).sum();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::Invalid("cannot normalize a density with zero mass".into()));
        }
        values.iter_mut().for_each(|v| *v /= mass);
        Density::new(mesh, values)
    }
}

/// Average of G(x, ·) over a geodesic-free planar disk of area `area` centred at x.
fn green_disk_self(area: f64) -> f64 {
    let r = (area / PI).sqrt();
    -r.ln() + LN_2
}

/// Average of G(y, y') for y, y' independent uniform in a disk of area `area`.
fn green_disk_pair(area: f64) -> f64 {
    let r = (area / PI).sqrt();
    -r.ln() + 0.25 - 0.5 + LN_2
}

fn contains(cell: &MeshCell, lat: f64, lon: f64) -> Option<f64> {
    let [l0, l1, o0, o1] = cell.bounds;
    let tol = 1e-12;
    if lat < l0 - tol || lat > l1 + tol {
        return None;
    }
    [0.0, 2.0 * PI, -2.0 * PI].into_iter().map(|s| lon + s).find(|o| *o >= o0 - tol && *o <= o1 + tol)
}

fn lat_lon(x: &SpherePoint) -> (f64, f64) {
    x.lat_lon()
}

/// Indices of insertions lying in the closed parameter rectangle of a cell,
/// with the longitude shifted into the cell's range.
fn insertions_in(cell: &MeshCell, problem: &SemiclassicalProblem) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for (j, x) in problem.points.iter().enumerate() {
        let (lat, lon) = lat_lon(x);
        if let Some(o) = contains(cell, lat, lon) {
            out.push((j, lat, o));
        }
    }
    out
}

/// Integrals of (K, K x₁, K x₂, K x₃) over cells.
struct CellIntegrator<'a> {
    problem: &'a SemiclassicalProblem,
    t: Vec<f64>,
    w: Vec<f64>,
}

type Moments = [f64; 4];

fn add(a: &mut Moments, b: Moments, s: f64) {
    for i in 0..4 {
        a[i] += s * b[i];
    }
}

impl<'a> CellIntegrator<'a> {
    fn new(problem: &'a SemiclassicalProblem) -> Self {
        let (x, w) = gauss_legendre(GL_ORDER);
        CellIntegrator {
            problem,
            t: x.iter().map(|v| 0.5 * (v + 1.0)).collect(),
            w: w.iter().map(|v| 0.5 * v).collect(),
        }
    }

    fn integrand(&self, lat: f64, lon: f64) -> Moments {
        let p = SpherePoint::from_lat_lon(lat, lon);
        let k = self.problem.kernel(&p) * lat.cos();
        [k, k * p.coords[0], k * p.coords[1], k * p.coords[2]]
    }

    fn rect(&self, l0: f64, l1: f64, o0: f64, o1: f64) -> Moments {
        let mut acc = [0.0; 4];
        for (ti, wi) in self.t.iter().zip(&self.w) {
            for (tj, wj) in self.t.iter().zip(&self.w) {
                add(&mut acc, self.integrand(l0 + (l1 - l0) * ti, o0 + (o1 - o0) * tj), wi * wj);
            }
        }
        acc.iter_mut().for_each(|v| *v *= (l1 - l0) * (o1 - o0));
        acc
    }

    /// Rectangle with insertion j at corner (lc, oc), extending by (dl, dlon).
    /// Split into two triangles and graded towards the corner.
    fn duffy(&self, j: usize, lc: f64, oc: f64, dl: f64, dlon: f64, p: f64) -> Moments {
        let mut acc = [0.0; 4];
        if dl.abs() < 1e-15 || dlon.abs() < 1e-15 {
            return acc;
        }
        // s = τ^m turns the d^p singularity into a regular τ¹ factor
        let m = if p < 0.0 { 2.0 / (p + 2.0) } else { 1.0 };
        for tri in 0..2 {
            for (tau, wt) in self.t.iter().zip(&self.w) {
                let s = tau.powf(m);
                let js = m * tau.powf(m - 1.0);
                for (tt, wu) in self.t.iter().zip(&self.w) {
                    let (a, o) = if tri == 0 { (dl * s, dlon * s * tt) } else { (dl * s * tt, dlon * s) };
                    // the graded offsets fall below the rounding of lc, so
                    // the distance to the corner comes from the offsets
                    let lat = lc + a;
                    let h = (0.5 * a).sin().powi(2) + lc.cos() * lat.cos() * (0.5 * o).sin().powi(2);
                    let x = SpherePoint::from_lat_lon(lat, oc + o);
                    let k = self.problem.kernel_near(&x, j, 2.0 * h.sqrt()) * lat.cos();
                    let v = [k, k * x.coords[0], k * x.coords[1], k * x.coords[2]];
                    add(&mut acc, v, wt * wu * s * js);
                }
            }
        }
        acc.iter_mut().for_each(|v| *v *= (dl * dlon).abs());
        acc
    }

    /// Corner-singular rectangle: a near-square piece at the corner goes to
    /// the Duffy rule, the elongated remainder to adaptive subdivision.
    fn corner(&self, j: usize, lc: f64, oc: f64, dl: f64, dlon: f64, p: f64) -> Moments {
        let c = lc.cos().max(1e-300);
        let (ll, lo) = (dl.abs(), dlon.abs() * c);
        if lo > 1.5 * ll && ll > 0.0 {
            let d2 = dlon.signum() * ll / c;
            let mut acc = self.duffy(j, lc, oc, dl, d2, p);
            let (a, b) = (oc + d2, oc + dlon);
            add(&mut acc, self.subdivide(lc.min(lc + dl), lc.max(lc + dl), a.min(b), a.max(b), 0), 1.0);
            acc
        } else if ll > 1.5 * lo && lo > 0.0 {
            let d1 = dl.signum() * lo;
            let mut acc = self.duffy(j, lc, oc, d1, dlon, p);
            let (a, b) = (lc + d1, lc + dl);
            add(&mut acc, self.subdivide(a.min(b), a.max(b), oc.min(oc + dlon), oc.max(oc + dlon), 0), 1.0);
            acc
        } else {
            self.duffy(j, lc, oc, dl, dlon, p)
        }
    }

    fn subdivide(&self, l0: f64, l1: f64, o0: f64, o1: f64, depth: u32) -> Moments {
        let lm = 0.5 * (l0 + l1);
        let om = 0.5 * (o0 + o1);
        let c = SpherePoint::from_lat_lon(lm, om);
        let diam = (l1 - l0).hypot((o1 - o0) * lm.cos());
        let near = self.problem.points.iter().map(|x| x.chordal(&c)).fold(f64::INFINITY, f64::min);
        if near > 2.0 * diam || depth >= MAX_SUBDIVISION {
            return self.rect(l0, l1, o0, o1);
        }
        let mut acc = [0.0; 4];
        for (a, b) in [(l0, lm), (lm, l1)] {
            for (c0, c1) in [(o0, om), (om, o1)] {
                add(&mut acc, self.subdivide(a, b, c0, c1, depth + 1), 1.0);
            }
        }
        acc
    }

    fn cell(&self, cell: &MeshCell) -> Result<Moments> {
        let inside = insertions_in(cell, self.problem);
        let [l0, l1, o0, o1] = cell.bounds;
        match inside.as_slice() {
            [] => Ok(self.subdivide(l0, l1, o0, o1, 0)),
            [(j, lat, lon)] => {
                let p = 4.0 * self.problem.alphas_tilde[*j];
                let mut acc = [0.0; 4];
                for dl in [l0 - lat, l1 - lat] {
                    for dlon in [o0 - lon, o1 - lon] {
                        add(&mut acc, self.corner(*j, *lat, *lon, dl, dlon, p), 1.0);
                    }
                }
                Ok(acc)
            }
            _ => Err(Error::InvalidResolution("mesh too coarse: one cell holds two insertions".into())),
        }
    }
}

enum Kernel {
    Dense(Vec<f64>),
    OnTheFly,
}

/// Discretised problem on a fixed mesh.
pub struct SemiclassicalSolver {
    pub problem: SemiclassicalProblem,
    pub mesh: Arc<SphereMesh>,
    /// W_m = ∫_cell exp(−4Σα̃_j G(x_j, ·)) da
    pub cell_weights: Vec<f64>,
    /// K-weighted centroids, used as collocation points for Gρ.
    pub rep_points: Vec<SpherePoint>,
    /// Σ_j α̃_j Ḡ_jm with Ḡ the centred cell value of G(x_j, ·).
    pub insertion_potential: Vec<f64>,
    diag: Vec<f64>,
    row_mean: Vec<f64>,
    total_mean: f64,
    kernel: Kernel,
}

#[derive(Debug, Clone)]
pub struct SolverReport {
    pub rho_hat: Density,
    pub multiplier_lambda: f64,
    pub s_value: f64,
    pub fixed_point_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// ρ̂ at cell centres: cell-averaged kernel times the discrete u.
    pub point_density: Vec<f64>,
    /// (Gρ̂) at the collocation points.
    pub potential: Vec<f64>,
    /// Cell masses ρ̂_m = W_m u_m.
    pub cell_mass: Vec<f64>,
    pub rep_points: Vec<SpherePoint>,
    pub insertion_potential: Vec<f64>,
}

impl SemiclassicalSolver {
    pub fn new(problem: &SemiclassicalProblem, mesh: Arc<SphereMesh>) -> Result<Self> {
        if mesh.cells.iter().any(|c| c.bounds == [0.0; 4]) {
            return Err(Error::InvalidResolution("mesh cells carry no parameter bounds".into()));
        }
        let integ = CellIntegrator::new(problem);
        let moments: Vec<Moments> = mesh.cells.par_iter().map(|c| integ.cell(c)).collect::<Result<_>>()?;
        let cell_weights: Vec<f64> = moments.iter().map(|m| m[0]).collect();
        let rep_points: Vec<SpherePoint> = moments
            .iter()
            .zip(&mesh.cells)
            .map(|(m, c)| if m[0] > 0.0 { SpherePoint::normalized([m[1], m[2], m[3]]) } else { c.center })
            .collect();
        let n = mesh.len();
        let areas: Vec<f64> = mesh.cells.iter().map(|c| c.area).collect();
        let total: f64 = areas.iter().sum();

        let mut insertion_potential = vec![0.0; n];
        for (xj, a) in problem.points.iter().zip(&problem.alphas_tilde) {
            let mut gbar: Vec<f64> = mesh
                .cells
                .iter()
                .map(|c| {
                    let (lat, lon) = lat_lon(xj);
                    if contains(c, lat, lon).is_some() {
                        green_disk_self(c.area)
                    } else {
                        green_chordal(xj.chordal(&c.center))
                    }
                })
                .collect();
            let mean = gbar.iter().zip(&areas).map(|(g, a)| g * a).sum::<f64>() / total;
            gbar.iter_mut().for_each(|g| *g -= mean);
            for m in 0..n {
                insertion_potential[m] += a * gbar[m];
            }
        }

        let diag: Vec<f64> = areas.iter().map(|a| green_disk_pair(*a)).collect();
        let kernel = if n <= DENSE_LIMIT {
            let mut g = vec![0.0; n * n];
            g.par_chunks_mut(n).enumerate().for_each(|(m, row)| {
                for (k, v) in row.iter_mut().enumerate() {
                    *v = raw_green(&rep_points, &diag, m, k);
                }
            });
            Kernel::Dense(g)
        } else {
            Kernel::OnTheFly
        };
        let mut s = SemiclassicalSolver {
            problem: problem.clone(),
            mesh,
            cell_weights,
            rep_points,
            insertion_potential,
            diag,
            row_mean: vec![0.0; n],
            total_mean: 0.0,
            kernel,
        };
        // double-centre the kernel so that Gρ has zero area mean
        let w: Vec<f64> = areas.iter().map(|a| a / total).collect();
        let r = s.raw_apply(&w);
        s.total_mean = r.iter().zip(&w).map(|(a, b)| a * b).sum();
        s.row_mean = r;
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.cell_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cell_weights.is_empty()
    }

    fn raw_apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        match &self.kernel {
            Kernel::Dense(g) => g.par_chunks(n).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect(),
            Kernel::OnTheFly => (0..n)
                .into_par_iter()
                .map(|m| (0..n).map(|k| raw_green(&self.rep_points, &self.diag, m, k) * v[k]).sum())
                .collect(),
        }
    }

    /// Centred Green operator applied to cell masses.
    pub fn apply_green(&self, mass: &[f64]) -> Vec<f64> {
        let total: f64 = mass.iter().sum();
        let rm: f64 = self.row_mean.iter().zip(mass).map(|(a, b)| a * b).sum();
        self.raw_apply(mass)
            .into_iter()
            .zip(&self.row_mean)
            .map(|(g, r)| g - r * total - rm + self.total_mean * total)
            .collect()
    }

    /// S for ρ = K·u given u per cell (with Σ W u = 1) and the matching Gρ.
    fn s_with(&self, u: &[f64], gr: &[f64]) -> f64 {
        let mut s = 0.0;
        for m in 0..self.len() {
            let rho = self.cell_weights[m] * u[m];
            if rho > 0.0 {
                s += rho * u[m].ln() + 2.0 * self.problem.beta * rho * gr[m];
            }
        }
        s
    }

    /// S of the density K·u; u is normalised first.
    pub fn s_of_factor(&self, u: &[f64]) -> f64 {
        let u = self.normalize_factor(u.to_vec());
        let mass: Vec<f64> = u.iter().zip(&self.cell_weights).map(|(a, b)| a * b).collect();
        self.s_with(&u, &self.apply_green(&mass))
    }

    fn normalize_factor(&self, mut u: Vec<f64>) -> Vec<f64> {
        let z: f64 = u.iter().zip(&self.cell_weights).map(|(a, b)| a * b).sum();
        u.iter_mut().for_each(|v| *v /= z);
        u
    }

    /// Fixed-point update target and λ for the given Gρ.
    fn update(&self, gr: &[f64]) -> (Vec<f64>, f64) {
        let e: Vec<f64> = gr.iter().map(|g| -4.0 * self.problem.beta * g).collect();
        let mx = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let z: f64 = e.iter().zip(&self.cell_weights).map(|(a, w)| w * (a - mx).exp()).sum();
        let lambda = mx + z.ln();
        (e.iter().map(|a| (a - lambda).exp()).collect(), lambda)
    }

    /// Damped fixed-point iteration. Always returns the last accepted iterate;
    /// `converged` tells whether the residual dropped below 1e-8.
    pub fn solve(&self, damping: f64, max_iter: usize, initial: Option<&Density>) -> Result<SolverReport> {
        if !(damping > 0.0 && damping <= 1.0) {
            return Err(Error::Invalid("damping must lie in (0, 1]".into()));
        }
        let n = self.len();
        let mut u = match initial {
            Some(d) => {
                if d.values.len() != n {
                    return Err(Error::Invalid("initial density is on a different mesh".into()));
                }
                let u0: Vec<f64> = (0..n)
                    .map(|m| {
                        let w = self.cell_weights[m];
                        if w > 0.0 {
                            d.values[m] * self.mesh.cells[m].area / w
                        } else {
                            0.0
                        }
                    })
                    .collect();
                self.normalize_factor(u0)
            }
            None => self.normalize_factor(vec![1.0; n]),
        };
        let mut mass: Vec<f64> = u.iter().zip(&self.cell_weights).map(|(a, b)| a * b).collect();
        let mut gr = self.apply_green(&mass);
        let mut s = self.s_with(&u, &gr);
        let mut d = damping;
        let mut iterations = 0;
        let (mut target, mut lambda) = self.update(&gr);
        let mut residual = fp_residual(&u, &target);
        while residual >= FIXED_POINT_TOL && iterations < max_iter {
            iterations += 1;
            let trial: Vec<f64> = u.iter().zip(&target).map(|(a, b)| (1.0 - d) * a + d * b).collect();
            let trial = self.normalize_factor(trial);
            let tmass: Vec<f64> = trial.iter().zip(&self.cell_weights).map(|(a, b)| a * b).collect();
            let tgr = self.apply_green(&tmass);
            let ts = self.s_with(&trial, &tgr);
            if ts > s + 1e-10 {
                d *= 0.5;
                if d < 1e-12 {
                    break;
                }
                continue;
            }
            u = trial;
            mass = tmass;
            gr = tgr;
            s = ts;
            (target, lambda) = self.update(&gr);
            residual = fp_residual(&u, &target);
        }
        let values: Vec<f64> = mass.iter().zip(&self.mesh.cells).map(|(m, c)| m / c.area).collect();
        let point_density =
            self.insertion_potential.iter().zip(&u).map(|(p, v)| (-4.0 * p).exp() * v).collect();
        Ok(SolverReport {
            rho_hat: Density { mesh: self.mesh.clone(), values },
            multiplier_lambda: lambda,
            s_value: s,
            fixed_point_residual: residual,
            iterations,
            converged: residual < FIXED_POINT_TOL,
            point_density,
            potential: gr,
            cell_mass: mass,
            rep_points: self.rep_points.clone(),
            insertion_potential: self.insertion_potential.clone(),
        })
    }
}

fn raw_green(pts: &[SpherePoint], diag: &[f64], m: usize, k: usize) -> f64 {
    if m == k {
        return diag[m];
    }
    let d = pts[m].chordal(&pts[k]);
    if d > 0.0 {
        green_chordal(d)
    } else {
        diag[m]
    }
}

/// sup_m |4β(Gρ)_m + ln u_m + λ| = sup_m |ln u_m − ln target_m|
fn fp_residual(u: &[f64], target: &[f64]) -> f64 {
    u.iter()
        .zip(target)
        .map(|(a, b)| if *a > 0.0 && *b > 0.0 { (a.ln() - b.ln()).abs() } else { f64::INFINITY })
        .fold(0.0, f64::max)
}

/// Minimize S on a mesh, starting from the normalised kernel.
pub fn minimize_s(
    problem: &SemiclassicalProblem,
    mesh: Arc<SphereMesh>,
    damping: f64,
    max_iter: usize,
) -> Result<SolverReport> {
    let rep = SemiclassicalSolver::new(problem, mesh)?.solve(damping, max_iter, None)?;
    if !rep.converged {
        return Err(Error::NoConvergence { iterations: rep.iterations, residual: rep.fixed_point_residual });
    }
    Ok(rep)
}

/// Off-diagonal Green matrix between cell centres with the equal-area disk
/// average on the diagonal.
fn cell_green(cells: &[MeshCell], m: usize, k: usize) -> f64 {
    if m == k {
        green_disk_pair(cells[m].area)
    } else {
        green_chordal(cells[m].center.chordal(&cells[k].center))
    }
}

/// G(x, cell centre), or its disk average when the cell holds x.
fn insertion_green(cell: &MeshCell, x: &SpherePoint) -> f64 {
    let (lat, lon) = lat_lon(x);
    if contains(cell, lat, lon).is_some() {
        green_disk_self(cell.area)
    } else {
        green_chordal(x.chordal(&cell.center))
    }
}

pub fn functional_h(rho: &Density) -> f64 {
    rho.values
        .iter()
        .zip(&rho.mesh.cells)
        .filter(|(v, _)| **v > 0.0)
        .map(|(v, c)| v * v.ln() * c.area)
        .sum()
}

pub fn functional_r(rho: &Density) -> f64 {
    let cells = &rho.mesh.cells;
    let mass: Vec<f64> = rho.values.iter().zip(cells).map(|(v, c)| v * c.area).collect();
    (0..cells.len())
        .into_par_iter()
        .map(|m| mass[m] * (0..cells.len()).map(|k| cell_green(cells, m, k) * mass[k]).sum::<f64>())
        .sum()
}

pub fn functional_l(problem: &SemiclassicalProblem, rho: &Density) -> f64 {
    let mut l = 0.0;
    for (xj, a) in problem.points.iter().zip(&problem.alphas_tilde) {
        let s: f64 =
            rho.values.iter().zip(&rho.mesh.cells).map(|(v, c)| insertion_green(c, xj) * v * c.area).sum();
        l += 4.0 * a * s;
    }
    l
}

pub fn functional_s(problem: &SemiclassicalProblem, rho: &Density) -> f64 {
    functional_l(problem, rho) + 2.0 * problem.beta * functional_r(rho) + functional_h(rho)
}

/// Right-hand side of the heavy-operator limit of (1/n) log C̃.
pub fn limit_value(problem: &SemiclassicalProblem, solver: &SolverReport) -> Result<Complex64> {
    let b = problem.beta;
    let a = &problem.alphas_tilde;
    let mut re = 1.0 + problem.mu_tilde.ln() - b.ln();
    re += (1.0 - 4f64.ln()) * a.iter().map(|x| x * x).sum::<f64>() / b;
    for (x, aj) in problem.points.iter().zip(a) {
        re += aj * (1.0 + aj) / b * round_metric(stereographic(x)?).ln();
    }
    for j in 0..a.len() {
        for k in 0..j {
            re -= 4.0 / b * a[j] * a[k] * green(&problem.points[j], &problem.points[k])?;
        }
    }
    re -= solver.s_value;
    Ok(Complex64::new(re, -PI))
}

/// ψ̂ at the cell centres.
pub fn psi_hat(problem: &SemiclassicalProblem, solver: &SolverReport) -> Result<Vec<Complex64>> {
    psi_hat_impl(problem, solver, true)
}

fn psi_hat_impl(problem: &SemiclassicalProblem, solver: &SolverReport, imaginary: bool) -> Result<Vec<Complex64>> {
    for c in &solver.rho_hat.mesh.cells {
        if problem.points.iter().any(|x| x.chordal(&c.center) < 1e-12) {
            return Err(Error::EvaluationAtInsertion);
        }
    }
    let b = problem.beta;
    let c0 = -0.5 * solver.multiplier_lambda + 0.5 * b.ln() - 0.5 * problem.mu_tilde.ln();
    let im = if imaginary { 0.5 * PI } else { 0.0 };
    Ok(solver
        .potential
        .iter()
        .zip(&solver.insertion_potential)
        .map(|(g, p)| Complex64::new(-2.0 * b * g + c0 - 2.0 * p, im))
        .collect())
}

/// Area mean of ψ̂ over the mesh.
pub fn psi_hat_mean(psi: &[Complex64], mesh: &SphereMesh) -> Complex64 {
    let s: Complex64 = psi.iter().zip(&mesh.cells).map(|(p, c)| p * c.area).sum();
    s / mesh.total_area()
}

/// Test field φ(x) = P_l(axis·x); Δφ = −l(l+1)φ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LegendreField {
    pub degree: usize,
    pub axis: SpherePoint,
}

impl LegendreField {
    pub fn constant() -> Self {
        LegendreField { degree: 0, axis: crate::sphere_geom::NORTH_POLE }
    }

    pub fn value(&self, x: &SpherePoint) -> f64 {
        legendre_p(self.degree, self.axis.dot(x))
    }

    pub fn laplacian(&self, x: &SpherePoint) -> f64 {
        let l = self.degree as f64;
        -l * (l + 1.0) * self.value(x)
    }
}

/// Weak-form residual of the saddle equation for each test field. With
/// `drop_imaginary` the constant iπ/2 is removed from ψ̂.
pub fn weak_form_residuals(
    problem: &SemiclassicalProblem,
    solver: &SolverReport,
    tests: &[LegendreField],
    drop_imaginary: bool,
) -> Result<Vec<f64>> {
    let psi = psi_hat_impl(problem, solver, !drop_imaginary)?;
    let cells = &solver.rho_hat.mesh.cells;
    // e^{2ψ̂} integrated per cell: −(β/μ̃)·ρ̂_m, sign flipped without iπ/2
    let sign = if drop_imaginary { 1.0 } else { -1.0 };
    let scale = sign * problem.beta / problem.mu_tilde;
    let mut out = Vec::with_capacity(tests.len());
    for phi in tests {
        let mut r = Complex64::new(0.0, 0.0);
        for (x, a) in problem.points.iter().zip(&problem.alphas_tilde) {
            r += 2.0 * a * phi.value(x);
        }
        for (m, c) in cells.iter().enumerate() {
            r += c.area * phi.value(&c.center) / (2.0 * PI);
            r -= c.area * psi[m] * phi.laplacian(&c.center) / (2.0 * PI);
            r -= 2.0 * problem.mu_tilde * scale * solver.cell_mass[m] * phi.value(&solver.rep_points[m]);
        }
        out.push(r.norm());
    }
    Ok(out)
}

/// max over test fields of the weak-form residual.
pub fn critical_residual(problem: &SemiclassicalProblem, solver: &SolverReport, tests: &[LegendreField]) -> Result<f64> {
    Ok(weak_form_residuals(problem, solver, tests, false)?.into_iter().fold(0.0, f64::max))
}

/// sup_m |−μ̃ e^{2ψ̂}/β − ρ̂| / ρ̂ at cell centres.
pub fn hatrho_identity_error(problem: &SemiclassicalProblem, solver: &SolverReport) -> Result<f64> {
    let psi = psi_hat(problem, solver)?;
    Ok(psi
        .iter()
        .zip(&solver.point_density)
        .map(|(p, r)| ((-problem.mu_tilde * (2.0 * p).exp() / problem.beta) - r).norm() / r)
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sphere_geom::build_trapezoid_mesh;

    fn equatorial(a: f64) -> SemiclassicalProblem {
        let pts = (0..3).map(|k| SpherePoint::from_lat_lon(0.0, 2.0 * PI * k as f64 / 3.0)).collect();
        SemiclassicalProblem::new(vec![a; 3], pts, 1.0).unwrap()
    }

    #[test]
    fn uniform_functionals() {
        let mesh = Arc::new(build_trapezoid_mesh(PI / 32.0).unwrap());
        let u = Density::uniform(mesh);
        assert!((functional_h(&u) + (4.0 * PI).ln()).abs() < 1e-12);
        assert!(functional_r(&u).abs() < 1e-3, "{}", functional_r(&u));
        assert!(functional_l(&equatorial(-0.4), &u).abs() < 1e-2);
    }

    #[test]
    fn cell_weights_sum_to_kernel_integral() {
        // with one charge the others vanish and ∫K da has a closed form:
        // ∫ (e^{1/2}/2 · d)^{4a} da = 4π (e^{1/2}/2)^{4a} 2^{4a} / (2a + 1)
        let pts = vec![
            SpherePoint::from_lat_lon(0.3, 0.2),
            SpherePoint::from_lat_lon(-0.5, 2.0),
            SpherePoint::from_lat_lon(1.0, 4.0),
        ];
        let a = -0.4;
        let p = SemiclassicalProblem { alphas_tilde: vec![a, 0.0, 0.0], points: pts, mu_tilde: 1.0, beta: 0.4 };
        let want = 4.0 * PI * (0.5f64.exp()).powf(4.0 * a) / (2.0 * a + 1.0);
        let mesh = Arc::new(build_trapezoid_mesh(PI / 16.0).unwrap());
        let s = SemiclassicalSolver::new(&p, mesh).unwrap();
        let total: f64 = s.cell_weights.iter().sum();
        assert!((total - want).abs() < 1e-8 * want, "{total} {want}");
    }
}
