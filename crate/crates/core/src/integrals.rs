//! One- and two-electron integrals over contracted Cartesian Gaussians.
//!
//! Products of Gaussians are expanded in Hermite Gaussians
//! (McMurchie-Davidson); the Coulomb kernel reduces to Boys-function
//! driven Hermite integrals `R_tuv`.

use std::fmt::Write as _;

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::scalar::{from_usize, lit, Real};
use crate::system::{nuclear_repulsion, AoBasis, AoFunction, Molecule};

/// Boys functions `F_0(x) .. F_{m_max}(x)`.
///
/// Each order is summed from its own series for `x < 30` (downward
/// recursion loses about `2x/(2m-1)` per step there); beyond, asymptotic
/// `F_0` with upward recursion.
pub fn boys<T: Real>(m_max: usize, x: T) -> Vec<T> {
    let two = lit::<T>(2.0);
    let emx = (-x).exp();
    if x < lit(30.0) {
        (0..=m_max)
            .map(|m| {
                // F_m(x) = e^{-x} Σ_k (2x)^k / ((2m+1)(2m+3)...(2m+2k+1))
                let mut denom = from_usize::<T>(2 * m + 1);
                let mut term = T::one() / denom;
                let mut sum = term;
                for _ in 0..500 {
                    denom += two;
                    term = term * two * x / denom;
                    sum += term;
                    if term < sum * lit(1e-17) {
                        break;
                    }
                }
                emx * sum
            })
            .collect()
    } else {
        let mut out = vec![T::zero(); m_max + 1];
        out[0] = lit::<T>(0.5) * (T::pi() / x).sqrt();
        for m in 0..m_max {
            out[m + 1] = (from_usize::<T>(2 * m + 1) * out[m] - emx) / (two * x);
        }
        out
    }
}

/// Hermite expansion coefficient `E_t^{ij}` along one axis for primitives
/// with exponents `a`, `b` and center separation `qx = A_x - B_x`.
fn hermite_e<T: Real>(i: i32, j: i32, t: i32, qx: T, a: T, b: T) -> T {
    if t < 0 || t > i + j || i < 0 || j < 0 {
        return T::zero();
    }
    let p = a + b;
    let q = a * b / p;
    if i == 0 && j == 0 {
        return (-q * qx * qx).exp();
    }
    let half_p = T::one() / (lit::<T>(2.0) * p);
    let t1 = lit::<T>(f64::from(t + 1));
    if j == 0 {
        half_p * hermite_e(i - 1, j, t - 1, qx, a, b)
            - (q * qx / a) * hermite_e(i - 1, j, t, qx, a, b)
            + t1 * hermite_e(i - 1, j, t + 1, qx, a, b)
    } else {
        half_p * hermite_e(i, j - 1, t - 1, qx, a, b)
            + (q * qx / b) * hermite_e(i, j - 1, t, qx, a, b)
            + t1 * hermite_e(i, j - 1, t + 1, qx, a, b)
    }
}

/// Hermite Coulomb integrals `R_tuv` (order n = 0) for all
/// `t + u + v <= l_max`, with exponent `alpha` and separation `pc`.
struct HermiteCoulomb<T: Real> {
    l: usize,
    table: Vec<T>,
}

impl<T: Real> HermiteCoulomb<T> {
    fn new(l_max: usize, alpha: T, pc: &Vector3<T>) -> Self {
        let dim = l_max + 1;
        let f = boys(l_max, alpha * pc.norm_squared());
        let mut memo: Vec<Option<T>> = vec![None; dim * dim * dim * dim];
        let mut table = vec![T::zero(); dim * dim * dim];
        for t in 0..dim {
            for u in 0..dim - t {
                for v in 0..dim - t - u {
                    table[(t * dim + u) * dim + v] =
                        Self::rec(0, t, u, v, dim, alpha, pc, &f, &mut memo);
                }
            }
        }
        Self { l: dim, table }
    }

    #[allow(clippy::too_many_arguments)]
    fn rec(
        n: usize,
        t: usize,
        u: usize,
        v: usize,
        dim: usize,
        alpha: T,
        pc: &Vector3<T>,
        f: &[T],
        memo: &mut [Option<T>],
    ) -> T {
        let key = ((n * dim + t) * dim + u) * dim + v;
        if let Some(x) = memo[key] {
            return x;
        }
        let val = if t == 0 && u == 0 && v == 0 {
            (lit::<T>(-2.0) * alpha).powi(n as i32) * f[n]
        } else if t > 0 {
            let mut acc = pc.x * Self::rec(n + 1, t - 1, u, v, dim, alpha, pc, f, memo);
            if t > 1 {
                acc +=
                    from_usize::<T>(t - 1) * Self::rec(n + 1, t - 2, u, v, dim, alpha, pc, f, memo);
            }
            acc
        } else if u > 0 {
            let mut acc = pc.y * Self::rec(n + 1, t, u - 1, v, dim, alpha, pc, f, memo);
            if u > 1 {
                acc +=
                    from_usize::<T>(u - 1) * Self::rec(n + 1, t, u - 2, v, dim, alpha, pc, f, memo);
            }
            acc
        } else {
            let mut acc = pc.z * Self::rec(n + 1, t, u, v - 1, dim, alpha, pc, f, memo);
            if v > 1 {
                acc +=
                    from_usize::<T>(v - 1) * Self::rec(n + 1, t, u, v - 2, dim, alpha, pc, f, memo);
            }
            acc
        };
        memo[key] = Some(val);
        val
    }

    #[inline]
    fn get(&self, t: usize, u: usize, v: usize) -> T {
        self.table[(t * self.l + u) * self.l + v]
    }
}

/// Gaussian-product data for one pair of primitives.
struct PrimitivePair<T: Real> {
    p: T,
    center: Vector3<T>,
    coef: T,
    /// `E_t` per axis, `t = 0..=i+j`.
    e: [Vec<T>; 3],
}

fn primitive_pairs<T: Real>(a: &AoFunction<T>, b: &AoFunction<T>) -> Vec<PrimitivePair<T>> {
    let ab = a.center - b.center;
    let mut out = Vec::with_capacity(a.exponents.len() * b.exponents.len());
    for (&ea, &ca) in a.exponents.iter().zip(&a.coefficients) {
        for (&eb, &cb) in b.exponents.iter().zip(&b.coefficients) {
            let p = ea + eb;
            let center = (a.center * ea + b.center * eb) / p;
            let e = std::array::from_fn(|k| {
                let (i, j) = (a.powers[k] as i32, b.powers[k] as i32);
                (0..=i + j)
                    .map(|t| hermite_e(i, j, t, ab[k], ea, eb))
                    .collect()
            });
            out.push(PrimitivePair {
                p,
                center,
                coef: ca * cb,
                e,
            });
        }
    }
    out
}

/// One-dimensional overlap of unnormalized primitives `x^i`, `x^j`.
fn overlap_1d<T: Real>(i: i32, j: i32, qx: T, a: T, b: T) -> T {
    if i < 0 || j < 0 {
        return T::zero();
    }
    hermite_e(i, j, 0, qx, a, b) * (T::pi() / (a + b)).sqrt()
}

fn kinetic_1d<T: Real>(i: i32, j: i32, qx: T, a: T, b: T) -> T {
    let two = lit::<T>(2.0);
    let jf = lit::<T>(f64::from(j));
    b * (two * jf + T::one()) * overlap_1d(i, j, qx, a, b)
        - two * b * b * overlap_1d(i, j + 2, qx, a, b)
        - lit::<T>(0.5) * jf * (jf - T::one()) * overlap_1d(i, j - 2, qx, a, b)
}

/// `⟨a|b⟩`.
pub fn overlap<T: Real>(a: &AoFunction<T>, b: &AoFunction<T>) -> T {
    let ab = a.center - b.center;
    let mut s = T::zero();
    for (&ea, &ca) in a.exponents.iter().zip(&a.coefficients) {
        for (&eb, &cb) in b.exponents.iter().zip(&b.coefficients) {
            let mut prod = ca * cb;
            for k in 0..3 {
                prod *= overlap_1d(a.powers[k] as i32, b.powers[k] as i32, ab[k], ea, eb);
            }
            s += prod;
        }
    }
    s
}

/// `⟨a|-½∇²|b⟩`.
pub fn kinetic<T: Real>(a: &AoFunction<T>, b: &AoFunction<T>) -> T {
    let ab = a.center - b.center;
    let mut out = T::zero();
    for (&ea, &ca) in a.exponents.iter().zip(&a.coefficients) {
        for (&eb, &cb) in b.exponents.iter().zip(&b.coefficients) {
            let s: [T; 3] = std::array::from_fn(|k| {
                overlap_1d(a.powers[k] as i32, b.powers[k] as i32, ab[k], ea, eb)
            });
            let t: [T; 3] = std::array::from_fn(|k| {
                kinetic_1d(a.powers[k] as i32, b.powers[k] as i32, ab[k], ea, eb)
            });
            out += ca * cb * (t[0] * s[1] * s[2] + s[0] * t[1] * s[2] + s[0] * s[1] * t[2]);
        }
    }
    out
}

/// `⟨a| Σ_C -Z_C/|r - C| |b⟩` for point charges `(Z, position)`.
pub fn nuclear_attraction<T: Real>(
    a: &AoFunction<T>,
    b: &AoFunction<T>,
    nuclei: &[(T, Vector3<T>)],
) -> T {
    let l = (a.l() + b.l()) as usize;
    let mut out = T::zero();
    for pair in primitive_pairs(a, b) {
        let pref = lit::<T>(2.0) * T::pi() / pair.p * pair.coef;
        for (z, c) in nuclei {
            let r = HermiteCoulomb::new(l, pair.p, &(pair.center - c));
            let mut acc = T::zero();
            for (t, &et) in pair.e[0].iter().enumerate() {
                for (u, &eu) in pair.e[1].iter().enumerate() {
                    for (v, &ev) in pair.e[2].iter().enumerate() {
                        acc += et * eu * ev * r.get(t, u, v);
                    }
                }
            }
            out -= *z * pref * acc;
        }
    }
    out
}

fn eri_pairs<T: Real>(bra: &[PrimitivePair<T>], ket: &[PrimitivePair<T>], l: usize) -> T {
    let two = lit::<T>(2.0);
    let pi = T::pi();
    let mut out = T::zero();
    for p in bra {
        for q in ket {
            let alpha = p.p * q.p / (p.p + q.p);
            let pref = two * pi.powf(lit(2.5)) / (p.p * q.p * (p.p + q.p).sqrt()) * p.coef * q.coef;
            let r = HermiteCoulomb::new(l, alpha, &(p.center - q.center));
            let mut acc = T::zero();
            for (t, &et) in p.e[0].iter().enumerate() {
                for (u, &eu) in p.e[1].iter().enumerate() {
                    for (v, &ev) in p.e[2].iter().enumerate() {
                        let ebra = et * eu * ev;
                        for (tau, &ft) in q.e[0].iter().enumerate() {
                            for (nu, &fu) in q.e[1].iter().enumerate() {
                                for (phi, &fv) in q.e[2].iter().enumerate() {
                                    let term =
                                        ebra * ft * fu * fv * r.get(t + tau, u + nu, v + phi);
                                    if (tau + nu + phi) % 2 == 0 {
                                        acc += term;
                                    } else {
                                        acc -= term;
                                    }
                                }
                            }
                        }
                    }
                }
            }
            out += pref * acc;
        }
    }
    out
}

/// `(ab|cd)` in chemists' notation.
pub fn eri<T: Real>(
    a: &AoFunction<T>,
    b: &AoFunction<T>,
    c: &AoFunction<T>,
    d: &AoFunction<T>,
) -> T {
    let l = (a.l() + b.l() + c.l() + d.l()) as usize;
    eri_pairs(&primitive_pairs(a, b), &primitive_pairs(c, d), l)
}

/// Dense `(μν|λσ)` tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct EriTensor<T: Real> {
    n: usize,
    data: Vec<T>,
}

impl<T: Real> EriTensor<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![T::zero(); n * n * n * n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize, l: usize) -> usize {
        ((i * self.n + j) * self.n + k) * self.n + l
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> T {
        self.data[self.idx(i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: T) {
        let ix = self.idx(i, j, k, l);
        self.data[ix] = v;
    }

    /// Writes `v` at all eight index permutations.
    pub fn set_symmetric(&mut self, i: usize, j: usize, k: usize, l: usize, v: T) {
        for (a, b, c, d) in [
            (i, j, k, l),
            (j, i, k, l),
            (i, j, l, k),
            (j, i, l, k),
            (k, l, i, j),
            (l, k, i, j),
            (k, l, j, i),
            (l, k, j, i),
        ] {
            self.set(a, b, c, d, v);
        }
    }

    /// Largest deviation from 8-fold permutational symmetry.
    pub fn symmetry_error(&self) -> T {
        let n = self.n;
        let mut worst = T::zero();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let v = self.get(i, j, k, l);
                        for w in [
                            self.get(j, i, k, l),
                            self.get(i, j, l, k),
                            self.get(k, l, i, j),
                        ] {
                            worst = worst.max((v - w).abs());
                        }
                    }
                }
            }
        }
        worst
    }

    /// Full tensor over `basis`, computed once per unique quartet.
    pub fn compute(basis: &AoBasis<T>) -> Self {
        let n = basis.len();
        let fs = &basis.functions;
        let mut pairs = Vec::with_capacity(n * (n + 1) / 2);
        for i in 0..n {
            for j in 0..=i {
                pairs.push((i, j, primitive_pairs(&fs[i], &fs[j]), fs[i].l() + fs[j].l()));
            }
        }
        let mut out = Self::zeros(n);
        for (ij, (i, j, bra, lb)) in pairs.iter().enumerate() {
            for (k, l, ket, lk) in pairs.iter().take(ij + 1) {
                let v = eri_pairs(bra, ket, (lb + lk) as usize);
                out.set_symmetric(*i, *j, *k, *l, v);
            }
        }
        out
    }
}

/// Overlap, kinetic, nuclear-attraction, core Hamiltonian and ERI over one
/// AO basis, plus the nuclear repulsion of the geometry they belong to.
#[derive(Clone, Debug)]
pub struct IntegralSet<T: Real> {
    pub overlap: DMatrix<T>,
    pub kinetic: DMatrix<T>,
    pub nuclear: DMatrix<T>,
    pub hcore: DMatrix<T>,
    pub eri: EriTensor<T>,
    pub nuclear_repulsion: T,
}

impl<T: Real> IntegralSet<T> {
    pub fn compute(molecule: &Molecule<T>, basis: &AoBasis<T>) -> Result<Self> {
        let v_nn = nuclear_repulsion(molecule)?;
        let nuclei: Vec<(T, Vector3<T>)> = molecule
            .atoms
            .iter()
            .map(|a| (lit::<T>(a.charge as f64), a.position))
            .collect();
        let n = basis.len();
        let fs = &basis.functions;
        let mut overlap_m = DMatrix::zeros(n, n);
        let mut kinetic_m = DMatrix::zeros(n, n);
        let mut nuclear_m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let s = overlap(&fs[i], &fs[j]);
                let t = kinetic(&fs[i], &fs[j]);
                let v = nuclear_attraction(&fs[i], &fs[j], &nuclei);
                for (m, x) in [
                    (&mut overlap_m, s),
                    (&mut kinetic_m, t),
                    (&mut nuclear_m, v),
                ] {
                    m[(i, j)] = x;
                    m[(j, i)] = x;
                }
            }
        }
        let hcore = &kinetic_m + &nuclear_m;
        Ok(Self {
            overlap: overlap_m,
            kinetic: kinetic_m,
            nuclear: nuclear_m,
            hcore,
            eri: EriTensor::compute(basis),
            nuclear_repulsion: v_nn,
        })
    }

    pub fn n_ao(&self) -> usize {
        self.overlap.nrows()
    }

    /// Plain-text dump: one labeled entry per line, 17 significant digits.
    /// ERI entries are written for unique quartets only.
    pub fn dump(&self) -> String {
        let n = self.n_ao();
        let mut out = String::new();
        let _ = writeln!(out, "NAO {n}");
        let _ = writeln!(out, "ENUC {:.16e}", self.nuclear_repulsion);
        for (label, m) in [("S", &self.overlap), ("H", &self.hcore)] {
            for i in 0..n {
                for j in 0..=i {
                    let _ = writeln!(out, "{label} {i} {j} {:.16e}", m[(i, j)]);
                }
            }
        }
        for i in 0..n {
            for j in 0..=i {
                let ij = i * (i + 1) / 2 + j;
                for k in 0..n {
                    for l in 0..=k {
                        if k * (k + 1) / 2 + l > ij {
                            continue;
                        }
                        let _ =
                            writeln!(out, "ERI {i} {j} {k} {l} {:.16e}", self.eri.get(i, j, k, l));
                    }
                }
            }
        }
        out
    }

    /// Checks that another set is over the same AO dimension.
    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.n_ao() != n {
            return Err(Error::DimensionMismatch {
                expected: self.n_ao(),
                found: n,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{build_ao_basis, parse_basis, CC_PVDZ};
    use approx::assert_abs_diff_eq;

    fn s_gauss(alpha: f64, center: Vector3<f64>, powers: [u8; 3]) -> AoFunction<f64> {
        let l = powers.iter().sum::<u8>();
        AoFunction {
            atom: 0,
            center,
            powers,
            exponents: vec![alpha],
            coefficients: vec![crate::system::primitive_norm(alpha, l)],
        }
    }

    #[test]
    fn boys_limits() {
        let f = boys::<f64>(4, 0.0);
        for (m, v) in f.iter().enumerate() {
            assert_abs_diff_eq!(*v, 1.0 / (2 * m + 1) as f64, epsilon = 1e-15);
        }
        // continuity across the series/asymptotic switch
        // dF_m/dx = -F_{m+1}
        let h = 1e-6;
        let below = boys::<f64>(5, 30.0 - h);
        let above = boys::<f64>(5, 30.0);
        for m in 0..=4 {
            assert_abs_diff_eq!(below[m], above[m] + h * above[m + 1], epsilon = 1e-13);
        }
    }

    #[test]
    fn self_overlap_and_parity() {
        let a = s_gauss(1.0, Vector3::zeros(), [0, 0, 0]);
        let px = s_gauss(1.0, Vector3::zeros(), [1, 0, 0]);
        assert_abs_diff_eq!(overlap(&a, &a), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(overlap(&px, &px), 1.0, epsilon = 1e-14);
        assert_eq!(overlap(&a, &px), 0.0);
    }

    #[test]
    fn kinetic_of_unit_s_gaussian() {
        let a = s_gauss(1.0, Vector3::new(0.3, -0.1, 0.7), [0, 0, 0]);
        assert_abs_diff_eq!(kinetic(&a, &a), 1.5, epsilon = 1e-14);
    }

    #[test]
    fn nuclear_attraction_at_center() {
        // ⟨s|-1/r|s⟩ = -2 sqrt(2α/π) for a normalized s Gaussian on the nucleus
        let a = s_gauss(1.0, Vector3::zeros(), [0, 0, 0]);
        let v = nuclear_attraction(&a, &a, &[(1.0, Vector3::zeros())]);
        assert_abs_diff_eq!(
            v,
            -2.0 * (2.0 / std::f64::consts::PI).sqrt(),
            epsilon = 1e-14
        );
    }

    #[test]
    fn ssss_one_center() {
        // (ss|ss) for four unit-exponent normalized s Gaussians: 2 sqrt(α/π)
        let a = s_gauss(1.0, Vector3::zeros(), [0, 0, 0]);
        let v = eri(&a, &a, &a, &a);
        assert_abs_diff_eq!(v, 2.0 / std::f64::consts::PI.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn contracted_functions_are_normalized() {
        let map = parse_basis::<f64>(CC_PVDZ).unwrap();
        let m = Molecule::diatomic_angstrom("He", "H", 0.8, 1).unwrap();
        let basis = build_ao_basis(&m, &map, "cc-pvdz").unwrap();
        for f in &basis.functions {
            assert_abs_diff_eq!(overlap(f, f), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn heh_integral_set_properties() {
        let map = parse_basis::<f64>(CC_PVDZ).unwrap();
        let m = Molecule::diatomic_angstrom("He", "H", 0.8, 1).unwrap();
        let basis = build_ao_basis(&m, &map, "cc-pvdz").unwrap();
        let ints = IntegralSet::compute(&m, &basis).unwrap();
        for mat in [&ints.overlap, &ints.kinetic, &ints.nuclear, &ints.hcore] {
            assert!((mat - mat.transpose()).amax() < 1e-14);
        }
        let (vals, _) = crate::linalg::eigh(&ints.overlap);
        assert!(vals[0] > 1e-7);
        assert!(ints.eri.symmetry_error() < 1e-12);
        let n = ints.n_ao();
        for i in 0..n {
            for j in 0..n {
                assert!(ints.eri.get(i, j, i, j) >= 0.0);
            }
        }

        let shift = Vector3::new(1.3, -0.7, 2.1);
        let moved = m.translated(&shift);
        let moved_basis = build_ao_basis(&moved, &map, "cc-pvdz").unwrap();
        let moved_ints = IntegralSet::compute(&moved, &moved_basis).unwrap();
        assert!((&ints.hcore - &moved_ints.hcore).amax() < 1e-12);
        assert!((&ints.overlap - &moved_ints.overlap).amax() < 1e-12);
        let worst = (0..n.pow(4))
            .map(|ix| {
                let (i, j, k, l) = (ix / n.pow(3), ix / n.pow(2) % n, ix / n % n, ix % n);
                (ints.eri.get(i, j, k, l) - moved_ints.eri.get(i, j, k, l)).abs()
            })
            .fold(0.0, f64::max);
        assert!(worst < 1e-12);
    }

    #[test]
    fn dump_format() {
        let map = parse_basis::<f64>(CC_PVDZ).unwrap();
        let m = Molecule::diatomic("H", "H", 1.4, 0).unwrap();
        let basis = build_ao_basis(&m, &map, "cc-pvdz").unwrap();
        let text = IntegralSet::compute(&m, &basis).unwrap().dump();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("NAO 10"));
        let enuc = lines.next().unwrap();
        assert!(enuc.starts_with("ENUC 7.1428571428571"));
        let eri_count = text.lines().filter(|l| l.starts_with("ERI")).count();
        assert_eq!(eri_count, 55 * 56 / 2);
        let sample = text.lines().find(|l| l.starts_with("S 0 0")).unwrap();
        let mantissa = sample
            .split_whitespace()
            .last()
            .unwrap()
            .split('e')
            .next()
            .unwrap();
        assert_eq!(mantissa.replace(['.', '-'], "").len(), 17);
    }

    #[test]
    fn single_precision_instantiation() {
        let a = AoFunction::<f32> {
            atom: 0,
            center: Vector3::zeros(),
            powers: [0, 1, 0],
            exponents: vec![0.8],
            coefficients: vec![crate::system::primitive_norm(0.8f32, 1)],
        };
        assert!((overlap(&a, &a) - 1.0).abs() < 1e-5);
        assert!((kinetic(&a, &a) - 2.5 * 0.8).abs() < 1e-5);
    }
}
