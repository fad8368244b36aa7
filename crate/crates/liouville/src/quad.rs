//! Quadrature rules shared by the rest of the crate.

use crate::error::{Error, Result};
use num_complex::Complex64;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64) -> (Complex64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for i in 0..7 {
        let x = h * XGK[i];
        let s = f(c - x) + f(c + x);
        k += s * WGK[i];
        if i % 2 == 1 {
            g += s * WG[i / 2];
        }
    }
    ((k * h), ((k - g) * h).norm())
}

struct Panel {
    a: f64,
    b: f64,
    val: Complex64,
    err: f64,
}

impl PartialEq for Panel {
    fn eq(&self, o: &Self) -> bool {
        self.err == o.err
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Panel {
    fn cmp(&self, o: &Self) -> Ordering {
        self.err.total_cmp(&o.err)
    }
}

/// Globally adaptive Gauss-Kronrod (7/15) over the given breakpoints.
/// Returns the integral and the estimated absolute error.
pub fn adaptive_gk<F: Fn(f64) -> Complex64>(
    f: &F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<(Complex64, f64)> {
    let mut heap = BinaryHeap::new();
    for w in breaks.windows(2) {
        let (val, err) = gk15(f, w[0], w[1]);
        heap.push(Panel { a: w[0], b: w[1], val, err });
    }
    loop {
        let total: Complex64 = heap.iter().map(|p| p.val).sum();
        let err: f64 = heap.iter().map(|p| p.err).sum();
        if !total.re.is_finite() || !total.im.is_finite() {
            return Err(Error::NumericalError("non-finite quadrature sum".into()));
        }
        if err <= abs_tol.max(rel_tol * total.norm()) {
            return Ok((total, err));
        }
        if heap.len() >= max_panels {
            return Err(Error::NumericalError(format!(
                "adaptive quadrature stalled at error {err:e}"
            )));
        }
        let worst = heap.pop().expect("nonempty");
        let m = 0.5 * (worst.a + worst.b);
        let (v1, e1) = gk15(f, worst.a, m);
        let (v2, e2) = gk15(f, m, worst.b);
        heap.push(Panel { a: worst.a, b: m, val: v1, err: e1 });
        heap.push(Panel { a: m, b: worst.b, val: v2, err: e2 });
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = nf * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Number of eigenvalues below x of the physicists' Hermite Jacobi matrix
/// (zero diagonal, off-diagonal sqrt(k/2)), by Sturm sequence.
fn hermite_sturm_count(n: usize, x: f64) -> usize {
    let mut count = 0;
    let mut d = -x;
    if d < 0.0 {
        count += 1;
    }
    for k in 1..n {
        let e2 = k as f64 / 2.0;
        let prev = if d == 0.0 { 1e-300 } else { d };
        d = -x - e2 / prev;
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Orthonormal Hermite recurrence at z: returns (p_n, p_{n-1}, ln of the
/// scale factor removed to keep both in range).
fn hermite_orthonormal(n: usize, z: f64) -> (f64, f64, f64) {
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut ln_scale = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > 1e100 {
            p1 *= 1e-100;
            p2 *= 1e-100;
            ln_scale += 100.0 * std::f64::consts::LN_10;
        }
    }
    (p1, p2, ln_scale)
}

/// Gauss-Hermite rule for the standard normal density: sum w_k f(x_k) ~ E f(W).
pub fn gauss_hermite_prob(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let bound = (2.0 * nf + 2.0).sqrt();
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        // i-th smallest eigenvalue by bisection on the Sturm count
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if hermite_sturm_count(n, mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
            if hi - lo < 1e-15 * hi.abs().max(1.0) {
                break;
            }
        }
        let mut z = 0.5 * (lo + hi);
        let mut pp = 1.0;
        let mut ln_scale = 0.0;
        for _ in 0..3 {
            let (p1, p2, s) = hermite_orthonormal(n, z);
            pp = (2.0 * nf).sqrt() * p2;
            ln_scale = s;
            let dz = p1 / pp;
            if dz.abs() < 1e-6 {
                z -= dz;
            }
        }
        let wt = (std::f64::consts::LN_2 - 2.0 * (pp.abs().ln() + ln_scale)).exp();
        x.push(z * std::f64::consts::SQRT_2);
        w.push(wt / std::f64::consts::PI.sqrt());
    }
    (x, w)
}
