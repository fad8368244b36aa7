//! The gamma ratio γ(x) = Γ(x)/Γ(1−x) and the Upsilon function Υ_b.

use crate::error::{Error, Result};
use crate::quad::adaptive_gk;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Maximum number of b-shifts used to bring an argument into the strip.
pub const MAX_SHIFT_STEPS: usize = 50;

fn near_nonpositive_integer(x: Complex64) -> bool {
    let r = x.re.round();
    r <= 0.0 && (x.re - r).abs() < 1e-14 * r.abs().max(1.0) && x.im.abs() < 1e-14
}

/// Principal-ish log Γ(z); the imaginary part is only defined modulo 2π.
pub fn ln_gamma(z: Complex64) -> Result<Complex64> {
    if near_nonpositive_integer(z) {
        return Err(Error::PoleError(format!("{z}")));
    }
    if z.re < 0.5 {
        let s = (z * PI).sin();
        return Ok(Complex64::new(PI.ln(), 0.0) - s.ln() - ln_gamma(Complex64::new(1.0, 0.0) - z)?);
    }
    let z = z - 1.0;
    let mut x = Complex64::new(LANCZOS[0], 0.0);
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        x += *c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    Ok(0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + x.ln())
}

/// log γ(x), or None when γ(x) = 0 (x a positive integer).
pub fn ln_gamma_ratio(x: Complex64) -> Result<Option<Complex64>> {
    if near_nonpositive_integer(x) {
        return Err(Error::PoleError(format!("{x}")));
    }
    let one_minus = Complex64::new(1.0, 0.0) - x;
    if near_nonpositive_integer(one_minus) {
        return Ok(None);
    }
    Ok(Some(ln_gamma(x)? - ln_gamma(one_minus)?))
}

pub fn gamma_ratio(x: Complex64) -> Result<Complex64> {
    Ok(ln_gamma_ratio(x)?.map_or(Complex64::new(0.0, 0.0), |l| l.exp()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpsilonConfig {
    pub strip_quadrature_nodes: usize,
    pub tail_cutoff: f64,
    pub abs_tol: f64,
}

impl Default for UpsilonConfig {
    fn default() -> Self {
        UpsilonConfig { strip_quadrature_nodes: 4000, tail_cutoff: 80.0, abs_tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZeroLatticeQuery {
    pub b: f64,
    pub z: Complex64,
    pub tol: f64,
}

impl ZeroLatticeQuery {
    pub fn new(b: f64, z: Complex64, tol: f64) -> Result<Self> {
        if !(b > 0.0) || !(tol > 0.0) || tol >= b / 10.0 || tol >= 1.0 / (10.0 * b) {
            return Err(Error::Invalid(format!("lattice tolerance {tol} too coarse for b = {b}")));
        }
        Ok(ZeroLatticeQuery { b, z, tol })
    }
}

/// Whether z lies within tol of a zero mb + n/b of Υ_b.
pub fn is_upsilon_zero(q: &ZeroLatticeQuery) -> bool {
    let b = q.b;
    if q.z.im.abs() >= q.tol {
        return false;
    }
    let x = q.z.re;
    // m ranges over the integers whose mb + n/b can come within tol of x.
    let m_lo = ((x - q.tol) / b).floor().min(0.0) as i64 - 1;
    let m_hi = ((x + q.tol) / b).ceil().max(0.0) as i64 + 1;
    for m in m_lo..=m_hi {
        let n = ((x - m as f64 * b) * b).round() as i64;
        let same_sign = (m >= 1 && n >= 1) || (m <= 0 && n <= 0);
        if same_sign && (q.z - Complex64::new(m as f64 * b + n as f64 / b, 0.0)).norm() < q.tol {
            return true;
        }
    }
    false
}

fn ln_sinh_real(x: f64) -> f64 {
    if x < 1.0 {
        x.sinh().ln()
    } else {
        x + (-(-2.0 * x).exp()).ln_1p() - std::f64::consts::LN_2
    }
}

/// log sinh(w)^2 for complex w, stable for large |Re w|.
fn ln_sinh_sq(w: Complex64) -> Complex64 {
    let w = if w.re < 0.0 { -w } else { w };
    if w.norm() < 1.0 {
        2.0 * w.sinh().ln()
    } else {
        2.0 * (w + (Complex64::new(1.0, 0.0) - (-2.0 * w).exp()).ln() - std::f64::consts::LN_2)
    }
}

/// Integrand of ln Υ_b(z) on the strip, in terms of c = (b + 1/b)/2 − z.
pub fn upsilon_integrand(b: f64, c: Complex64, tau: f64) -> Complex64 {
    let num = ln_sinh_sq(c * (0.5 * tau));
    let den = ln_sinh_real(0.5 * b * tau) + ln_sinh_real(0.5 * tau / b);
    (c * c * (-tau).exp() - (num - den).exp()) / tau
}

/// Tail cutoff guaranteeing the integrand is negligible beyond it.
pub fn effective_tail_cutoff(b: f64, z: Complex64, cfg: &UpsilonConfig) -> f64 {
    let rate = z.re.min(b + 1.0 / b - z.re).min(1.0);
    cfg.tail_cutoff.max(1.2 * (10.0 / cfg.abs_tol).ln() / rate)
}

/// ln Υ_b(z) by direct quadrature; requires 0 < Re z < b + 1/b.
pub fn ln_upsilon_strip(b: f64, z: Complex64, cfg: &UpsilonConfig) -> Result<Complex64> {
    let qb = b + 1.0 / b;
    if !(z.re > 0.0 && z.re < qb) {
        return Err(Error::Invalid(format!("{z} outside the strip (0, {qb})")));
    }
    let c = Complex64::new(0.5 * qb, 0.0) - z;
    if c.norm() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let tau0 = 1e-3 * b.min(1.0 / c.norm()).min(1.0);
    // Series below tau0: integrand = c^2 (-1 + tau k), k from the sinh expansions.
    let k = 0.5 - c * c / 12.0 + (b * b + 1.0 / (b * b)) / 24.0;
    let head = c * c * (-tau0 + 0.5 * tau0 * tau0 * k);

    let t_max = effective_tail_cutoff(b, z, cfg);
    let mut breaks = vec![tau0];
    let mut t = tau0;
    while t < 1.0 {
        t = (2.0 * t).min(1.0);
        breaks.push(t);
    }
    let step = (t_max / 40.0).max(1.0);
    while t < t_max {
        t = (t + step).min(t_max);
        breaks.push(t);
    }
    let f = |tau: f64| upsilon_integrand(b, c, tau);
    let (val, _) = adaptive_gk(&f, &breaks, 0.1 * cfg.abs_tol, 1e-14, cfg.strip_quadrature_nodes)?;
    Ok(head + val)
}

/// ln Υ_b(z) anywhere in the plane; `-inf` real part at lattice zeros.
pub fn ln_upsilon(b: f64, z: Complex64, cfg: &UpsilonConfig) -> Result<Complex64> {
    if !(b > 0.0 && b <= 1.0) {
        return Err(Error::Invalid(format!("b = {b} outside (0, 1]")));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Invalid("non-finite argument".into()));
    }
    let qb = b + 1.0 / b;
    // Canonical representative of the reflection pair {z, qb - z}.
    let mut x = if z.re < 0.5 * qb { Complex64::new(qb, 0.0) - z } else { z };
    let margin = 0.5;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut steps = 0;
    let lnb = b.ln();
    while x.re > qb - margin {
        if steps == MAX_SHIFT_STEPS {
            return Err(Error::NumericalError(format!(
                "continuation of Upsilon_{b} to {z} needs more than {MAX_SHIFT_STEPS} shifts"
            )));
        }
        // Υ(x) = γ(b(x−b)) b^{1−2b(x−b)} Υ(x−b)
        let y = x - b;
        match ln_gamma_ratio(y * b)? {
            None => return Ok(Complex64::new(f64::NEG_INFINITY, 0.0)),
            Some(lg) => acc += lg + (Complex64::new(1.0, 0.0) - 2.0 * b * y) * lnb,
        }
        x = y;
        steps += 1;
    }
    Ok(acc + ln_upsilon_strip(b, x, cfg)?)
}

pub fn upsilon(b: f64, z: Complex64, cfg: &UpsilonConfig) -> Result<Complex64> {
    let l = ln_upsilon(b, z, cfg)?;
    if l.re == f64::NEG_INFINITY {
        return Ok(Complex64::new(0.0, 0.0));
    }
    Ok(l.exp())
}
