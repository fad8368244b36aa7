//! Geometry of the sphere and the plane: stereographic projection, Green's
//! functions, Legendre sums, conformal weights and the trapezoid mesh.

use crate::error::{Error, Result};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{LN_2, PI};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpherePoint {
    pub coords: [f64; 3],
}

pub const NORTH_POLE: SpherePoint = SpherePoint { coords: [0.0, 0.0, 1.0] };

impl SpherePoint {
    pub fn new(coords: [f64; 3]) -> Result<Self> {
        let n = norm3(coords);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::Invalid(format!("|x| = {n} is not 1")));
        }
        Ok(SpherePoint { coords })
    }

    /// Projects a nonzero vector onto the sphere.
    pub fn normalized(v: [f64; 3]) -> Self {
        let n = norm3(v);
        SpherePoint { coords: [v[0] / n, v[1] / n, v[2] / n] }
    }

    pub fn from_lat_lon(lat: f64, lon: f64) -> Self {
        SpherePoint { coords: [lat.cos() * lon.cos(), lat.cos() * lon.sin(), lat.sin()] }
    }

    /// (latitude, longitude) with longitude in [0, 2π).
    pub fn lat_lon(&self) -> (f64, f64) {
        let [x, y, z] = self.coords;
        let lon = y.atan2(x).rem_euclid(2.0 * PI);
        (z.clamp(-1.0, 1.0).asin(), lon)
    }

    pub fn dot(&self, o: &SpherePoint) -> f64 {
        self.coords.iter().zip(&o.coords).map(|(a, b)| a * b).sum()
    }

    pub fn chordal(&self, o: &SpherePoint) -> f64 {
        let d = [
            self.coords[0] - o.coords[0],
            self.coords[1] - o.coords[1],
            self.coords[2] - o.coords[2],
        ];
        norm3(d)
    }

    pub fn is_north_pole(&self) -> bool {
        self.chordal(&NORTH_POLE) < 1e-12
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleParams {
    pub b: f64,
    pub mu: f64,
    #[serde(rename = "Q")]
    pub q: f64,
    pub chi: f64,
}

impl LiouvilleParams {
    pub fn new(b: f64, mu: f64) -> Result<Self> {
        if !(b > 0.0 && b <= 1.0) {
            return Err(Error::Invalid(format!("coupling b = {b} outside (0, 1]")));
        }
        if !(mu > 0.0 && mu.is_finite()) {
            return Err(Error::Invalid(format!("cosmological constant mu = {mu} must be positive")));
        }
        Ok(LiouvilleParams { b, mu, q: b - 1.0 / b, chi: 4f64.ln() - 1.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularizationConfig {
    pub reg_lambda: f64,
    pub cutoff_l: usize,
    pub epsilon: f64,
}

impl RegularizationConfig {
    pub fn new(reg_lambda: f64, cutoff_l: usize, epsilon: f64) -> Result<Self> {
        if !(reg_lambda > 0.0 && reg_lambda < 1.0) || cutoff_l == 0 || !(epsilon > 0.0) {
            return Err(Error::Invalid("need 0 < lambda < 1, L >= 1, epsilon > 0".into()));
        }
        Ok(RegularizationConfig { reg_lambda, cutoff_l, epsilon })
    }
}

pub fn stereographic(x: &SpherePoint) -> Result<Complex64> {
    if x.is_north_pole() {
        return Err(Error::NorthPoleError);
    }
    let [a, b, c] = x.coords;
    Ok(Complex64::new(a, b) / (1.0 - c))
}

pub fn inverse_stereographic(z: Complex64) -> SpherePoint {
    let r2 = z.norm_sqr();
    let d = 1.0 + r2;
    SpherePoint { coords: [2.0 * z.re / d, 2.0 * z.im / d, (r2 - 1.0) / d] }
}

/// |‖x−y‖² − 4|u−v|²/((1+|u|²)(1+|v|²))| for u, v the projections of x, y.
pub fn chordal_identity_check(x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    let u = stereographic(x)?;
    let v = stereographic(y)?;
    let lhs = x.chordal(y).powi(2);
    let rhs = 4.0 * (u - v).norm_sqr() / ((1.0 + u.norm_sqr()) * (1.0 + v.norm_sqr()));
    Ok((lhs - rhs).abs())
}

/// Green's function of the sphere, from the chordal distance.
pub fn green_chordal(d: f64) -> f64 {
    -d.ln() - 0.5 + LN_2
}

pub fn green(x: &SpherePoint, y: &SpherePoint) -> Result<f64> {
    let d = x.chordal(y);
    if d == 0.0 {
        return Err(Error::CoincidentPointsError);
    }
    Ok(green_chordal(d))
}

/// Σ_{l=1}^{L} λ^l (2l+1)/(2l(l+1)) P_l(t) via the three-term recurrence.
pub fn green_regularized_dot(reg_lambda: f64, cutoff_l: usize, t: f64) -> f64 {
    let t = t.clamp(-1.0, 1.0);
    let (mut p0, mut p1) = (1.0, t);
    let mut lam = reg_lambda;
    let mut sum = 0.0;
    for l in 1..=cutoff_l {
        let lf = l as f64;
        sum += lam * (2.0 * lf + 1.0) / (2.0 * lf * (lf + 1.0)) * p1;
        let p2 = ((2.0 * lf + 1.0) * t * p1 - lf * p0) / (lf + 1.0);
        p0 = p1;
        p1 = p2;
        lam *= reg_lambda;
        if lam == 0.0 {
            break;
        }
    }
    sum
}

pub fn green_regularized(cfg: &RegularizationConfig, x: &SpherePoint, y: &SpherePoint) -> f64 {
    green_regularized_dot(cfg.reg_lambda, cfg.cutoff_l, x.dot(y))
}

/// Legendre polynomial P_l(t).
pub fn legendre_p(l: usize, t: f64) -> f64 {
    let (mut p0, mut p1) = (1.0, t);
    if l == 0 {
        return 1.0;
    }
    for k in 1..l {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * t * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    p1
}

pub fn round_metric(z: Complex64) -> f64 {
    4.0 / (1.0 + z.norm_sqr()).powi(2)
}

pub fn conformal_weight(params: &LiouvilleParams, alpha: Complex64) -> Complex64 {
    alpha * (params.q - alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshCell {
    pub center: SpherePoint,
    pub area: f64,
    /// (lat0, lat1, lon0, lon1) of the parameter rectangle.
    #[serde(skip)]
    pub bounds: [f64; 4],
}

impl MeshCell {
    /// Largest chord between sampled boundary points.
    pub fn diameter(&self) -> f64 {
        let [l0, l1, o0, o1] = self.bounds;
        let mut pts = Vec::new();
        for i in 0..=4 {
            for j in 0..=4 {
                if i == 0 || i == 4 || j == 0 || j == 4 {
                    let lat = l0 + (l1 - l0) * i as f64 / 4.0;
                    let lon = o0 + (o1 - o0) * j as f64 / 4.0;
                    pts.push(SpherePoint::from_lat_lon(lat, lon));
                }
            }
        }
        let mut d: f64 = 0.0;
        for a in &pts {
            for b in &pts {
                d = d.max(a.chordal(b));
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMesh {
    pub cells: Vec<MeshCell>,
    pub resolution_eps: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshExportCell {
    pub center: [f64; 3],
    pub area: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeshExport {
    pub cells: Vec<MeshExportCell>,
}

impl SphereMesh {
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn total_area(&self) -> f64 {
        self.cells.iter().map(|c| c.area).sum()
    }

    pub fn export(&self) -> MeshExport {
        MeshExport {
            cells: self
                .cells
                .iter()
                .map(|c| MeshExportCell { center: c.center.coords, area: c.area })
                .collect(),
        }
    }
}

/// Latitude bands of width eps, each split into round(2π r_n/eps) longitude
/// sectors where r_n is the radius of the band's middle circle.
pub fn build_trapezoid_mesh(eps: f64) -> Result<SphereMesh> {
    let qf = PI / (2.0 * eps);
    let q = qf.round();
    if !(eps > 0.0) || (qf - q).abs() > 1e-9 * qf.max(1.0) || q < 4.0 {
        return Err(Error::InvalidResolution(format!("eps = {eps} is not pi/(2q) with q >= 4")));
    }
    let q = q as i64;
    let mut cells = Vec::new();
    for n in -q..q {
        let lat0 = n as f64 * eps;
        let lat1 = (n + 1) as f64 * eps;
        let r = ((n as f64 + 0.5) * eps).cos();
        let m = ((2.0 * PI * r / eps + 0.5).floor() as usize).max(1);
        let band_area = 2.0 * PI * (lat1.sin() - lat0.sin());
        for k in 0..m {
            let lon0 = 2.0 * PI * k as f64 / m as f64;
            let lon1 = 2.0 * PI * (k + 1) as f64 / m as f64;
            cells.push(MeshCell {
                center: SpherePoint::from_lat_lon(0.5 * (lat0 + lat1), 0.5 * (lon0 + lon1)),
                area: band_area / m as f64,
                bounds: [lat0, lat1, lon0, lon1],
            });
        }
    }
    Ok(SphereMesh { cells, resolution_eps: eps })
}

pub fn sample_uniform_sphere<R: Rng + ?Sized>(rng: &mut R) -> SpherePoint {
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let phi = 2.0 * PI * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    SpherePoint { coords: [s * phi.cos(), s * phi.sin(), z] }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stereographic_examples() {
        let s = |c| stereographic(&SpherePoint::new(c).unwrap()).unwrap();
        assert!(s([0.0, 0.0, -1.0]).norm() < 1e-15);
        assert!((s([1.0, 0.0, 0.0]) - 1.0).norm() < 1e-15);
        assert!((s([0.6, 0.0, 0.8]) - 3.0).norm() < 1e-12);
        assert_eq!(stereographic(&NORTH_POLE), Err(Error::NorthPoleError));
    }

    #[test]
    fn green_examples() {
        let x = SpherePoint::new([0.0, 0.0, -1.0]).unwrap();
        let y = NORTH_POLE;
        assert!((green(&x, &y).unwrap() + 0.5).abs() < 1e-15);
        assert!(green_chordal(2.0 * (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(green(&x, &x), Err(Error::CoincidentPointsError));
    }

    #[test]
    fn regularized_single_term() {
        let cfg = RegularizationConfig::new(0.5, 1, 1.0).unwrap();
        let x = SpherePoint::new([1.0, 0.0, 0.0]).unwrap();
        assert!((green_regularized(&cfg, &x, &x) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn metric_and_weight() {
        assert_eq!(round_metric(Complex64::new(0.0, 0.0)), 4.0);
        assert_eq!(round_metric(Complex64::new(1.0, 0.0)), 1.0);
        let p = LiouvilleParams::new(0.9, 1.0).unwrap();
        assert_eq!(conformal_weight(&p, Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        assert!(conformal_weight(&p, Complex64::new(p.q, 0.0)).norm() < 1e-15);
        let d = conformal_weight(&p, Complex64::new(-0.35, 0.0));
        assert!((d.re - (-0.35) * (0.9 - 1.0 / 0.9 + 0.35)).abs() < 1e-15);
    }

    #[test]
    fn mesh_properties() {
        let m = build_trapezoid_mesh(PI / 8.0).unwrap();
        let n0 = 2.0 * 64.0;
        assert!((m.len() as f64) > n0 / 10.0 && (m.len() as f64) < n0 * 10.0);
        assert!((m.total_area() - 4.0 * PI).abs() < 1e-8);
        let d1 = m.cells.iter().map(|c| c.diameter()).fold(0.0, f64::max);
        assert!(d1 <= 4.0 * PI / 8.0);
        let m2 = build_trapezoid_mesh(PI / 16.0).unwrap();
        let d2 = m2.cells.iter().map(|c| c.diameter()).fold(0.0, f64::max);
        assert!(d2 <= 4.0 * PI / 16.0);
        let ratio = d1 / d2;
        assert!(ratio > 1.0 && ratio < 4.0, "{ratio}");
        assert!(matches!(build_trapezoid_mesh(0.3), Err(Error::InvalidResolution(_))));
        assert!(matches!(build_trapezoid_mesh(PI / 6.0), Err(Error::InvalidResolution(_))));
    }

    #[test]
    fn uniform_sampler_is_deterministic() {
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            assert_eq!(sample_uniform_sphere(&mut a), sample_uniform_sphere(&mut b));
        }
    }
}
