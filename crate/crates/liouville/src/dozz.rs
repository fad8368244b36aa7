//! Timelike DOZZ structure constants, three-point functions, Möbius
//! covariance and the pole structure in the fixed-w chart.

use crate::correlators::{kpoint_plane, neutrality_of, InsertionSet};
use crate::error::{Error, Result};
use crate::mc::McConfig;
use crate::special_fn::{gamma_ratio, is_upsilon_zero, ln_upsilon, UpsilonConfig, ZeroLatticeQuery};
use crate::sphere_geom::{conformal_weight, LiouvilleParams};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MobiusMap {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

impl MobiusMap {
    /// Normalizes to unit determinant.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self> {
        let det = a * d - b * c;
        if det.norm() < 1e-300 {
            return Err(Error::Invalid("degenerate Mobius map".into()));
        }
        let s = det.sqrt();
        Ok(MobiusMap { a: a / s, b: b / s, c: c / s, d: d / s })
    }

    pub fn identity() -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        MobiusMap { a: one, b: zero, c: zero, d: one }
    }

    /// The map sending (z1, z2, z3) to (0, 1, ∞).
    pub fn cross_ratio(z1: Complex64, z2: Complex64, z3: Complex64) -> Result<Self> {
        // f(z) = (z − z1)(z2 − z3) / ((z − z3)(z2 − z1))
        MobiusMap::new(z2 - z3, -z1 * (z2 - z3), z2 - z1, -z3 * (z2 - z1))
    }
}

fn map_denominator(map: &MobiusMap, z: Complex64) -> Result<Complex64> {
    let den = map.c * z + map.d;
    if den.norm() < 1e-300 {
        return Err(Error::PoleOfMap);
    }
    Ok(den)
}

pub fn mobius_apply(map: &MobiusMap, z: Complex64) -> Result<Complex64> {
    let den = map_denominator(map, z)?;
    Ok((map.a * z + map.b) / den)
}

pub fn mobius_derivative(map: &MobiusMap, z: Complex64) -> Result<Complex64> {
    let den = map_denominator(map, z)?;
    Ok(1.0 / (den * den))
}

/// Logs of the factors whose product is the structure constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DozzFactors {
    /// −iπw
    pub phase: Complex64,
    /// w ln(−πμγ(−b²))
    pub gamma_power: Complex64,
    /// (1 − 1/b²) ln(4/e)
    pub four_over_e: f64,
    /// (2b²w + 2w) ln b
    pub b_power: f64,
    /// ln Υ(bw+b) + Σ ln Υ(2α_j + bw + 1/b)
    pub upsilon_numerator: Complex64,
    /// ln Υ(b) + Σ ln Υ(2α_j + 1/b)
    pub upsilon_denominator: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StructureConstant {
    pub value: Complex64,
    pub log_value: Complex64,
    pub w: u32,
    pub factors: DozzFactors,
}

fn lattice_tol(z: Complex64) -> f64 {
    1e-9 * (1.0 + z.norm())
}

pub fn on_zero_lattice(b: f64, z: Complex64) -> bool {
    is_upsilon_zero(&ZeroLatticeQuery { b, z, tol: lattice_tol(z) })
}

fn assemble(params: &LiouvilleParams, alphas: [Complex64; 3], w: u32, cfg: &UpsilonConfig) -> Result<StructureConstant> {
    let b = params.b;
    let wf = w as f64;
    for (j, a) in alphas.iter().enumerate() {
        if on_zero_lattice(b, 2.0 * a + 1.0 / b) {
            return Err(Error::DenominatorZero { index: j });
        }
    }
    let g = gamma_ratio(Complex64::new(-b * b, 0.0))?;
    let gamma_power = wf * (-PI * params.mu * g).ln();
    let phase = Complex64::new(0.0, -PI * wf);
    let four_over_e = (1.0 - 1.0 / (b * b)) * (4f64.ln() - 1.0);
    let b_power = (2.0 * b * b * wf + 2.0 * wf) * b.ln();
    let bw = Complex64::new(b * wf, 0.0);
    let mut num = ln_upsilon(b, bw + b, cfg)?;
    let mut den = ln_upsilon(b, Complex64::new(b, 0.0), cfg)?;
    for a in &alphas {
        num += ln_upsilon(b, 2.0 * a + bw + 1.0 / b, cfg)?;
        den += ln_upsilon(b, 2.0 * a + 1.0 / b, cfg)?;
    }
    let log_value = phase + gamma_power + four_over_e + b_power + num - den;
    let value = if log_value.re == f64::NEG_INFINITY { Complex64::new(0.0, 0.0) } else { log_value.exp() };
    Ok(StructureConstant {
        value,
        log_value,
        w,
        factors: DozzFactors { phase, gamma_power, four_over_e, b_power, upsilon_numerator: num, upsilon_denominator: den },
    })
}

fn neutral_w(params: &LiouvilleParams, alphas: &[Complex64]) -> Result<u32> {
    let rep = neutrality_of(params, alphas);
    rep.w_int.ok_or_else(|| Error::NotNeutral(format!("{}", rep.w_exact)))
}

/// Timelike DOZZ structure constant C(α₁, α₂, α₃; b; μ).
pub fn structure_constant(params: &LiouvilleParams, alphas: [Complex64; 3], cfg: &UpsilonConfig) -> Result<StructureConstant> {
    let w = neutral_w(params, &alphas)?;
    assemble(params, alphas, w, cfg)
}

/// The same constant written with Υ(Q − Σα + b), Υ(α₁ − α₂ − α₃ + b), … over Υ(b − 2α_j).
pub fn structure_constant_reflected(params: &LiouvilleParams, alphas: [Complex64; 3], cfg: &UpsilonConfig) -> Result<Complex64> {
    let w = neutral_w(params, &alphas)? as f64;
    let b = params.b;
    let [a1, a2, a3] = alphas;
    let g = gamma_ratio(Complex64::new(-b * b, 0.0))?;
    let mut l = Complex64::new(0.0, -PI * w) + w * (-PI * params.mu * g).ln();
    l += (1.0 - 1.0 / (b * b)) * (4f64.ln() - 1.0) + (2.0 * b * b * w + 2.0 * w) * b.ln();
    l += ln_upsilon(b, params.q - a1 - a2 - a3 + b, cfg)? - ln_upsilon(b, Complex64::new(b, 0.0), cfg)?;
    l += ln_upsilon(b, a1 - a2 - a3 + b, cfg)?;
    l += ln_upsilon(b, a2 - a1 - a3 + b, cfg)?;
    l += ln_upsilon(b, a3 - a1 - a2 + b, cfg)?;
    for a in &alphas {
        l -= ln_upsilon(b, b - 2.0 * a, cfg)?;
    }
    Ok(l.exp())
}

fn ln_position_factor(params: &LiouvilleParams, alphas: [Complex64; 3], z: [Complex64; 3]) -> Result<Complex64> {
    let d: Vec<Complex64> = alphas.iter().map(|a| conformal_weight(params, *a)).collect();
    let sum: Complex64 = d.iter().sum();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, k) in [(0, 1), (0, 2), (1, 2)] {
        let r = (z[j] - z[k]).norm();
        if r == 0.0 {
            return Err(Error::CoincidentInsertions);
        }
        acc += 2.0 * (2.0 * d[j] + 2.0 * d[k] - sum) * r.ln();
    }
    Ok(acc)
}

/// log C(α; z₁, z₂, z₃) = log C(α) + Σ 2Δ_jk ln|z_jk|.
pub fn ln_three_point(params: &LiouvilleParams, alphas: [Complex64; 3], z: [Complex64; 3], cfg: &UpsilonConfig) -> Result<Complex64> {
    let pos = ln_position_factor(params, alphas, z)?;
    Ok(structure_constant(params, alphas, cfg)?.log_value + pos)
}

pub fn three_point(params: &LiouvilleParams, alphas: [Complex64; 3], z: [Complex64; 3], cfg: &UpsilonConfig) -> Result<Complex64> {
    Ok(ln_three_point(params, alphas, z, cfg)?.exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Sl2cMode {
    ClosedForm(UpsilonConfig),
    /// Both sides by Monte Carlo; the transformed side uses seed + 1.
    MonteCarlo(McConfig),
}

/// Covariance check C(f(z)) = Π|f'(z_j)|^{2Δ_j} C(z). Returns |lhs/rhs − 1|
/// for three points with the closed form, or the separation in combined
/// standard errors for Monte Carlo.
pub fn sl2c_residual(
    params: &LiouvilleParams,
    alphas: &[Complex64],
    positions: &[Complex64],
    map: &MobiusMap,
    mode: &Sl2cMode,
) -> Result<f64> {
    if alphas.len() != positions.len() {
        return Err(Error::Invalid("charges and positions differ in length".into()));
    }
    let mut ln_jac = Complex64::new(0.0, 0.0);
    let mut image = Vec::with_capacity(positions.len());
    for (z, a) in positions.iter().zip(alphas) {
        image.push(mobius_apply(map, *z)?);
        ln_jac += 2.0 * conformal_weight(params, *a) * mobius_derivative(map, *z)?.norm().ln();
    }
    match mode {
        Sl2cMode::ClosedForm(cfg) => {
            if alphas.len() != 3 {
                return Err(Error::Invalid("closed form needs exactly three insertions".into()));
            }
            let a = [alphas[0], alphas[1], alphas[2]];
            // The structure constant cancels; compare the position factors.
            let lhs = ln_position_factor(params, a, [image[0], image[1], image[2]])?;
            let rhs = ln_position_factor(params, a, [positions[0], positions[1], positions[2]])? + ln_jac;
            structure_constant(params, a, cfg)?;
            Ok(((lhs - rhs).exp() - 1.0).norm())
        }
        Sl2cMode::MonteCarlo(mc) => {
            let before = kpoint_plane(params, &InsertionSet::plane(positions, alphas)?, mc)?;
            let mc2 = McConfig { seed: mc.seed.wrapping_add(1), ..*mc };
            let after = kpoint_plane(params, &InsertionSet::plane(&image, alphas)?, &mc2)?;
            let jac = ln_jac.exp();
            let s = (after.stderr.powi(2) + (jac.norm() * before.stderr).powi(2)).sqrt();
            Ok((after.mean - jac * before.mean).norm() / s)
        }
    }
}

/// C_w(α₁, α₂) with α₃ = Q − α₁ − α₂ − bw, continued in the fixed-w chart.
pub fn continued_cw(params: &LiouvilleParams, w: u32, alpha1: Complex64, alpha2: Complex64, cfg: &UpsilonConfig) -> Result<StructureConstant> {
    let b = params.b;
    if w == 0 || w as f64 >= 1.0 + 1.0 / (2.0 * b * b) {
        return Err(Error::RegionViolated(format!("w = {w} needs b < (2(w-1))^(-1/2)")));
    }
    let alpha3 = params.q - alpha1 - alpha2 - b * w as f64;
    assemble(params, [alpha1, alpha2, alpha3], w, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoleCandidate {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    /// Index of the vanishing denominator Υ(2α_j + 1/b).
    pub index: usize,
}

/// The four pole conditions at one point of the fixed-w chart.
/// Assumes b² is irrational, which floating point cannot check.
pub fn pole_condition(params: &LiouvilleParams, w: u32, alpha1: f64, alpha2: f64) -> Option<PoleCandidate> {
    let b = params.b;
    let wf = w as f64;
    if w == 0 || wf >= 1.0 + 1.0 / (2.0 * b * b) {
        return None;
    }
    let alpha3 = params.q - alpha1 - alpha2 - b * wf;
    let a = [alpha1, alpha2, alpha3];
    let c = |x: f64| Complex64::new(x, 0.0);
    let zero_den = a.iter().position(|&x| on_zero_lattice(b, c(2.0 * x + 1.0 / b)))?;
    if a.iter().any(|&x| on_zero_lattice(b, c(2.0 * x + b * wf + 1.0 / b))) {
        return None;
    }
    if on_zero_lattice(b, c(b * wf + b)) {
        return None;
    }
    Some(PoleCandidate { alpha1, alpha2, alpha3, index: zero_den })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanGrid {
    pub alpha1_min: f64,
    pub alpha1_max: f64,
    pub n1: usize,
    pub alpha2_min: f64,
    pub alpha2_max: f64,
    pub n2: usize,
}

impl ScanGrid {
    fn axis(min: f64, max: f64, n: usize) -> Vec<f64> {
        match n {
            0 => vec![],
            1 => vec![min],
            _ => (0..n).map(|i| min + (max - min) * i as f64 / (n - 1) as f64).collect(),
        }
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        let a2 = Self::axis(self.alpha2_min, self.alpha2_max, self.n2);
        Self::axis(self.alpha1_min, self.alpha1_max, self.n1)
            .into_iter()
            .flat_map(|x| a2.iter().map(move |&y| (x, y)))
            .collect()
    }
}

/// Grid points satisfying all four pole conditions, rows scanned in parallel.
pub fn pole_scan(params: &LiouvilleParams, w: u32, grid: &ScanGrid) -> Vec<PoleCandidate> {
    grid.points()
        .par_iter()
        .filter_map(|&(a1, a2)| pole_condition(params, w, a1, a2))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> Complex64 {
        Complex64::new(x, 0.0)
    }

    #[test]
    fn mobius_examples() {
        let id = MobiusMap::identity();
        let z = Complex64::new(0.3, -1.2);
        assert_eq!(mobius_apply(&id, z).unwrap(), z);
        assert_eq!(mobius_derivative(&id, z).unwrap(), c(1.0));
        let inv = MobiusMap::new(c(0.0), c(1.0), c(-1.0), c(0.0)).unwrap();
        assert!((mobius_apply(&inv, z).unwrap() + 1.0 / z).norm() < 1e-15);
        assert!((mobius_derivative(&inv, z).unwrap() - 1.0 / (z * z)).norm() < 1e-14);
        assert_eq!(mobius_apply(&inv, c(0.0)), Err(Error::PoleOfMap));
        let (z1, z2, z3) = (Complex64::new(0.2, 0.1), c(-1.0), Complex64::new(2.0, 3.0));
        let f = MobiusMap::cross_ratio(z1, z2, z3).unwrap();
        assert!(mobius_apply(&f, z1).unwrap().norm() < 1e-14);
        assert!((mobius_apply(&f, z2).unwrap() - 1.0).norm() < 1e-14);
    }

    #[test]
    fn section_pole_point_is_flagged() {
        let b = 1.0 / PI.sqrt();
        let p = LiouvilleParams::new(b, 1.0).unwrap();
        let a1 = -b / 2.0 - 1.0 / (2.0 * b);
        let a2 = -b / 2.0 - 1.0 / (4.0 * b);
        let cand = pole_condition(&p, 2, a1, a2).expect("flagged");
        assert_eq!(cand.index, 0);
        assert!((cand.alpha3 + 1.0 / (4.0 * b)).abs() < 1e-12);
        let r = continued_cw(&p, 2, c(a1), c(a2), &UpsilonConfig::default());
        assert_eq!(r.unwrap_err(), Error::DenominatorZero { index: 0 });
    }

    #[test]
    fn region_gate() {
        let p = LiouvilleParams::new(0.9, 1.0).unwrap();
        let r = continued_cw(&p, 2, c(-0.3), c(-0.3), &UpsilonConfig::default());
        assert!(matches!(r, Err(Error::RegionViolated(_))));
    }
}
