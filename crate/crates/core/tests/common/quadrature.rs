//! Numerical-quadrature reference integrals.
//!
//! Everything here is evaluated on Gauss-Legendre grids straight from the
//! definitions; the Coulomb kernel is handled through
//! 1/r = (2/√π) ∫_0^∞ exp(-t² r²) dt, which makes every remaining
//! integrand separable per Cartesian axis.

use idmft_core::system::AoFunction;
use nalgebra::Vector3;

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 1 { z } else { p1 };
            let pnm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pnm1) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

pub struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

impl Rule {
    pub fn new(points: usize) -> Self {
        let (x, w) = gauss_legendre(points);
        Self { x, w }
    }

    /// Composite rule over [lo, hi] with `panels` equal panels.
    pub fn integrate(&self, lo: f64, hi: f64, panels: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
        let h = (hi - lo) / panels as f64;
        let mut acc = 0.0;
        for p in 0..panels {
            let a = lo + p as f64 * h;
            let mid = a + 0.5 * h;
            for (xi, wi) in self.x.iter().zip(&self.w) {
                acc += wi * f(mid + 0.5 * h * xi);
            }
        }
        acc * 0.5 * h
    }
}

struct Prim {
    a: f64,
    c: f64,
    center: Vector3<f64>,
    powers: [u8; 3],
}

fn prims(f: &AoFunction<f64>) -> Vec<Prim> {
    f.exponents
        .iter()
        .zip(&f.coefficients)
        .map(|(&a, &c)| Prim {
            a,
            c,
            center: f.center,
            powers: f.powers,
        })
        .collect()
}

fn g1(p: &Prim, k: usize, x: f64) -> f64 {
    let d = x - p.center[k];
    d.powi(p.powers[k] as i32) * (-p.a * d * d).exp()
}

fn dg1(p: &Prim, k: usize, x: f64) -> f64 {
    let d = x - p.center[k];
    let i = p.powers[k] as i32;
    let lead = if i > 0 { i as f64 * d.powi(i - 1) } else { 0.0 };
    (lead - 2.0 * p.a * d.powi(i + 1)) * (-p.a * d * d).exp()
}

const SPAN: f64 = 48.0;

/// ∫ f_a f_b exp(-s (x - c)²) dx along axis k.
fn axis_pair(rule: &Rule, pa: &Prim, pb: &Prim, k: usize, s: f64, c: f64, deriv: bool) -> f64 {
    let alpha = pa.a + pb.a + s;
    let center = (pa.a * pa.center[k] + pb.a * pb.center[k] + s * c) / alpha;
    let half = (SPAN / alpha).sqrt() + 1.0 / alpha.sqrt();
    rule.integrate(center - half, center + half, 12, |x| {
        let w = (-s * (x - c) * (x - c)).exp();
        if deriv {
            dg1(pa, k, x) * dg1(pb, k, x) * w
        } else {
            g1(pa, k, x) * g1(pb, k, x) * w
        }
    })
}

pub fn overlap(a: &AoFunction<f64>, b: &AoFunction<f64>) -> f64 {
    let rule = Rule::new(24);
    let mut acc = 0.0;
    for pa in prims(a) {
        for pb in prims(b) {
            let s: f64 = (0..3)
                .map(|k| axis_pair(&rule, &pa, &pb, k, 0.0, 0.0, false))
                .product();
            acc += pa.c * pb.c * s;
        }
    }
    acc
}

/// ½ ∫ ∇a · ∇b.
pub fn kinetic(a: &AoFunction<f64>, b: &AoFunction<f64>) -> f64 {
    let rule = Rule::new(24);
    let mut acc = 0.0;
    for pa in prims(a) {
        for pb in prims(b) {
            let s: Vec<f64> = (0..3)
                .map(|k| axis_pair(&rule, &pa, &pb, k, 0.0, 0.0, false))
                .collect();
            let d: Vec<f64> = (0..3)
                .map(|k| axis_pair(&rule, &pa, &pb, k, 0.0, 0.0, true))
                .collect();
            acc +=
                pa.c * pb.c * 0.5 * (d[0] * s[1] * s[2] + s[0] * d[1] * s[2] + s[0] * s[1] * d[2]);
        }
    }
    acc
}

/// Integrates g(t) over t ∈ [0, ∞) through t = u/(1-u).
fn t_integral(mut g: impl FnMut(f64) -> f64) -> f64 {
    let rule = Rule::new(16);
    rule.integrate(0.0, 1.0, 96, |u| {
        if u >= 1.0 {
            return 0.0;
        }
        let t = u / (1.0 - u);
        g(t) / ((1.0 - u) * (1.0 - u))
    })
}

pub fn nuclear(a: &AoFunction<f64>, b: &AoFunction<f64>, charge: f64, c: Vector3<f64>) -> f64 {
    let rule = Rule::new(24);
    let mut acc = 0.0;
    for pa in prims(a) {
        for pb in prims(b) {
            let val = t_integral(|t| {
                (0..3)
                    .map(|k| axis_pair(&rule, &pa, &pb, k, t * t, c[k], false))
                    .product()
            });
            acc += pa.c * pb.c * val;
        }
    }
    -charge * 2.0 / std::f64::consts::PI.sqrt() * acc
}

pub fn eri(
    a: &AoFunction<f64>,
    b: &AoFunction<f64>,
    c: &AoFunction<f64>,
    d: &AoFunction<f64>,
) -> f64 {
    let outer = Rule::new(20);
    let inner = Rule::new(20);
    let mut acc = 0.0;
    for pa in prims(a) {
        for pb in prims(b) {
            for pc in prims(c) {
                for pd in prims(d) {
                    let val = t_integral(|t| {
                        let s = t * t;
                        (0..3)
                            .map(|k| {
                                let p = pa.a + pb.a;
                                let pcen = (pa.a * pa.center[k] + pb.a * pb.center[k]) / p;
                                let ph = (SPAN / p).sqrt() + 1.0 / p.sqrt();
                                outer.integrate(pcen - ph, pcen + ph, 6, |x1| {
                                    let bra = g1(&pa, k, x1) * g1(&pb, k, x1);
                                    if bra == 0.0 {
                                        return 0.0;
                                    }
                                    let q = pc.a + pd.a + s;
                                    let qcen =
                                        (pc.a * pc.center[k] + pd.a * pd.center[k] + s * x1) / q;
                                    let qh = (SPAN / q).sqrt() + 1.0 / q.sqrt();
                                    let ket = inner.integrate(qcen - qh, qcen + qh, 6, |x2| {
                                        g1(&pc, k, x2)
                                            * g1(&pd, k, x2)
                                            * (-s * (x1 - x2) * (x1 - x2)).exp()
                                    });
                                    bra * ket
                                })
                            })
                            .product()
                    });
                    acc += pa.c * pb.c * pc.c * pd.c * val;
                }
            }
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * acc
}

/// F_m(x) = ∫_0^1 t^{2m} exp(-x t²) dt.
pub fn boys(m: usize, x: f64) -> f64 {
    Rule::new(24).integrate(0.0, 1.0, 16, |t| t.powi(2 * m as i32) * (-x * t * t).exp())
}
