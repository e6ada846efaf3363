//! One-variable complex polynomials: evaluation and complete root extraction.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{finite, Scalar};

/// A point of the complex plane.
pub type PlanePoint<T> = Complex<T>;

/// A point of C².
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct SpacePoint<T> {
    pub z: Complex<T>,
    pub w: Complex<T>,
}

impl<T: Scalar> SpacePoint<T> {
    pub fn new(z: Complex<T>, w: Complex<T>) -> Self {
        Self { z, w }
    }

    pub fn real(z: T, w: T) -> Self {
        Self { z: Complex::new(z, T::zero()), w: Complex::new(w, T::zero()) }
    }

    pub fn is_finite(&self) -> bool {
        finite(self.z) && finite(self.w)
    }

    /// Max-norm of the two coordinates.
    pub fn max_norm(&self) -> T {
        self.z.norm().max(self.w.norm())
    }
}

/// Iteration cap shared by the simultaneous root iterations.
pub const MAX_ROOT_ITERATIONS: usize = 500;

/// Complex polynomial stored by ascending powers.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<T> {
    coeffs: Vec<Complex<T>>,
}

impl<T: Scalar> Polynomial<T> {
    /// Builds a polynomial from `c_0..c_d`, dropping trailing coefficients of
    /// magnitude at most `1e-14`. The remaining degree must be at least one.
    pub fn new(mut coeffs: Vec<Complex<T>>) -> Result<Self> {
        if coeffs.iter().any(|c| !finite(*c)) {
            return Err(Error::InvalidPolynomial("non-finite coefficient".into()));
        }
        while coeffs.last().is_some_and(|c| c.norm() <= T::zero_tol()) {
            coeffs.pop();
        }
        if coeffs.len() < 2 {
            return Err(Error::InvalidPolynomial("degree must be at least 1".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn from_real(coeffs: &[T]) -> Result<Self> {
        Self::new(coeffs.iter().map(|&c| Complex::new(c, T::zero())).collect())
    }

    /// `z^m`.
    pub fn monomial(m: usize) -> Result<Self> {
        let mut c = vec![Complex::new(T::zero(), T::zero()); m + 1];
        c[m] = Complex::new(T::one(), T::zero());
        Self::new(c)
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[Complex<T>] {
        &self.coeffs
    }

    /// Coefficient of `z^i`, zero past the degree.
    pub fn coeff(&self, i: usize) -> Complex<T> {
        self.coeffs.get(i).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
    }

    pub fn leading(&self) -> Complex<T> {
        self.coeffs[self.degree()]
    }

    pub fn max_coeff_modulus(&self) -> T {
        self.coeffs.iter().fold(T::zero(), |m, c| m.max(c.norm()))
    }

    /// Horner evaluation.
    pub fn evaluate(&self, z: Complex<T>) -> Complex<T> {
        self.coeffs.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, &c| acc * z + c)
    }

    pub fn derivative_at(&self, z: Complex<T>) -> Complex<T> {
        self.evaluate_with_derivative(z).1
    }

    pub fn evaluate_with_derivative(&self, z: Complex<T>) -> (Complex<T>, Complex<T>) {
        let zero = Complex::new(T::zero(), T::zero());
        self.coeffs.iter().rev().fold((zero, zero), |(p, dp), &c| (p * z + c, dp * z + p))
    }

    /// Coefficients of `p'`.
    pub fn derivative_coeffs(&self) -> Vec<Complex<T>> {
        self.coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(i, &c)| c * T::from_usize(i).unwrap())
            .collect()
    }

    /// Zeros of `p'`; empty for linear polynomials.
    pub fn critical_points(&self) -> Result<Vec<Complex<T>>> {
        if self.degree() < 2 {
            return Ok(Vec::new());
        }
        Polynomial::new(self.derivative_coeffs())?.all_roots()
    }

    /// `p - v`.
    pub fn minus_constant(&self, v: Complex<T>) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs[0] -= v;
        Self { coeffs }
    }

    /// Residual bound `1e-10 * (1 + max|c_i|)` accepted for a computed root.
    pub fn root_tolerance(&self) -> T {
        T::residual_tol() * (T::one() + self.max_coeff_modulus())
    }

    pub fn cast<U: Scalar>(&self) -> Polynomial<U> {
        Polynomial {
            coeffs: self
                .coeffs
                .iter()
                .map(|c| Complex::new(U::from(c.re).unwrap(), U::from(c.im).unwrap()))
                .collect(),
        }
    }

    /// Distinct roots with multiplicities; roots closer than `1e-7` are merged.
    pub fn roots_with_multiplicity(&self) -> Result<Vec<(Complex<T>, usize)>> {
        let raw = self.raw_roots()?;
        let clustered = cluster(&raw, T::cluster_tol());
        let bound = self.root_tolerance();
        for (r, _) in &clustered {
            let residual = self.evaluate(*r).norm();
            if !(residual <= bound) {
                return Err(Error::RootResidual {
                    residual: residual.to_f64().unwrap_or(f64::NAN),
                    bound: bound.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(clustered)
    }

    /// All `d` roots, repeated according to multiplicity.
    pub fn all_roots(&self) -> Result<Vec<Complex<T>>> {
        Ok(self
            .roots_with_multiplicity()?
            .into_iter()
            .flat_map(|(r, m)| std::iter::repeat_n(r, m))
            .collect())
    }

    /// Solutions of `p(z) = v`, with multiplicity.
    pub fn preimages_of_value(&self, v: Complex<T>) -> Result<Vec<Complex<T>>> {
        self.minus_constant(v).all_roots()
    }

    fn raw_roots(&self) -> Result<Vec<Complex<T>>> {
        let d = self.degree();
        let lead = self.leading();
        let monic: Vec<Complex<T>> = self.coeffs.iter().map(|&c| c / lead).collect();
        if d == 1 {
            return Ok(vec![-monic[0]]);
        }
        let radius = T::one() + monic[..d].iter().fold(T::zero(), |m, c| m.max(c.norm()));
        let start = |offset: f64| -> Vec<Complex<T>> {
            (0..d)
                .map(|k| {
                    let theta = T::lit(2.0 * std::f64::consts::PI * k as f64 / d as f64 + offset);
                    Complex::from_polar(radius, theta)
                })
                .collect()
        };
        if let Some(r) = aberth(&monic, start(0.4)) {
            return Ok(r);
        }
        log::debug!("aberth iteration failed for degree {d}; falling back to durand-kerner");
        durand_kerner(&monic, start(1.1))
            .ok_or(Error::RootNonConvergence { degree: d, iterations: MAX_ROOT_ITERATIONS })
    }
}

/// Value, derivative, and the rounding scale `sum |a_j| |z|^j` of a monic polynomial.
fn horner_scaled<T: Scalar>(monic: &[Complex<T>], z: Complex<T>) -> (Complex<T>, Complex<T>, T) {
    let zero = Complex::new(T::zero(), T::zero());
    let r = z.norm();
    monic.iter().rev().fold((zero, zero, T::zero()), |(p, dp, s), &c| (p * z + c, dp * z + p, s * r + c.norm()))
}

fn converged<T: Scalar>(p: Complex<T>, scale: T, step: Complex<T>, z: Complex<T>, floor: T, d: usize) -> bool {
    let eps = T::epsilon();
    let gamma = T::lit(16.0) * T::from_usize(d).unwrap() * eps;
    p.norm() <= gamma * scale || step.norm() <= T::lit(4.0) * eps * z.norm() || step.norm() <= floor
}

fn aberth<T: Scalar>(monic: &[Complex<T>], mut z: Vec<Complex<T>>) -> Option<Vec<Complex<T>>> {
    let d = z.len();
    let floor = T::epsilon() * T::epsilon() * z[0].norm();
    for _ in 0..MAX_ROOT_ITERATIONS {
        let mut all_done = true;
        for i in 0..d {
            let (p, dp, scale) = horner_scaled(monic, z[i]);
            if p.norm() <= T::lit(16.0) * T::from_usize(d).unwrap() * T::epsilon() * scale {
                continue;
            }
            let mut s = Complex::new(T::zero(), T::zero());
            for j in 0..d {
                if j != i {
                    let diff = z[i] - z[j];
                    if diff.norm() > T::zero() {
                        s += diff.inv();
                    }
                }
            }
            let denom = dp - p * s;
            let step = if denom.norm() > T::zero() {
                p / denom
            } else {
                Complex::new(floor.max(T::epsilon()), floor.max(T::epsilon()))
            };
            z[i] -= step;
            if !finite(z[i]) {
                return None;
            }
            if !converged(p, scale, step, z[i], floor, d) {
                all_done = false;
            }
        }
        if all_done {
            return Some(z);
        }
    }
    None
}

fn durand_kerner<T: Scalar>(monic: &[Complex<T>], mut z: Vec<Complex<T>>) -> Option<Vec<Complex<T>>> {
    let d = z.len();
    let floor = T::epsilon() * T::epsilon() * z[0].norm();
    for _ in 0..MAX_ROOT_ITERATIONS {
        let mut all_done = true;
        for i in 0..d {
            let (p, _, scale) = horner_scaled(monic, z[i]);
            let mut prod = Complex::new(T::one(), T::zero());
            for j in 0..d {
                if j != i {
                    prod *= z[i] - z[j];
                }
            }
            if prod.norm() == T::zero() {
                prod = Complex::new(T::epsilon(), T::zero());
            }
            let step = p / prod;
            z[i] -= step;
            if !finite(z[i]) {
                return None;
            }
            if !converged(p, scale, step, z[i], floor, d) {
                all_done = false;
            }
        }
        if all_done {
            return Some(z);
        }
    }
    None
}

/// Greedy single-linkage clustering; each cluster is reported at its centroid.
fn cluster<T: Scalar>(roots: &[Complex<T>], tol: T) -> Vec<(Complex<T>, usize)> {
    let n = roots.len();
    let mut label = vec![usize::MAX; n];
    let mut out = Vec::new();
    for i in 0..n {
        if label[i] != usize::MAX {
            continue;
        }
        let id = out.len();
        label[i] = id;
        let mut members = vec![i];
        let mut k = 0;
        while k < members.len() {
            let a = roots[members[k]];
            for j in 0..n {
                if label[j] == usize::MAX && (roots[j] - a).norm() < tol {
                    label[j] = id;
                    members.push(j);
                }
            }
            k += 1;
        }
        let sum = members.iter().fold(Complex::new(T::zero(), T::zero()), |s, &m| s + roots[m]);
        out.push((sum / T::from_usize(members.len()).unwrap(), members.len()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn sorted(mut v: Vec<C>) -> Vec<C> {
        v.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap().then(a.im.partial_cmp(&b.im).unwrap()));
        v
    }

    #[test]
    fn evaluate_examples() {
        let sq = Polynomial::<f64>::monomial(2).unwrap();
        assert_eq!(sq.evaluate(c(0.5, 0.0)), c(0.25, 0.0));
        let p = Polynomial::from_real(&[0.0, 0.3, 1.0]).unwrap();
        assert_eq!(p.evaluate(c(0.0, 0.0)), c(0.0, 0.0));
        assert!((p.evaluate(c(1.0, 0.0)) - c(1.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn derivative_examples() {
        let sq = Polynomial::<f64>::monomial(2).unwrap();
        assert_eq!(sq.derivative_at(c(0.0, 0.0)), c(0.0, 0.0));
        let p = Polynomial::from_real(&[0.0, 0.3, 1.0]).unwrap();
        assert!((p.derivative_at(c(0.0, 0.0)) - c(0.3, 0.0)).norm() < 1e-15);
        let q = Polynomial::from_real(&[0.0, 0.01, 1.0]).unwrap();
        assert!((q.derivative_at(c(1.0, 0.0)) - c(2.01, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn trailing_zeros_are_trimmed() {
        let p = Polynomial::from_real(&[0.0, 1.0, 1.0, 1e-20]).unwrap();
        assert_eq!(p.degree(), 2);
        assert!(Polynomial::from_real(&[1.0, 1e-16]).is_err());
        assert!(Polynomial::from_real(&[f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn roots_of_quadratics() {
        let p = Polynomial::from_real(&[-0.01, 0.0, 1.0]).unwrap();
        let r = sorted(p.all_roots().unwrap());
        assert!((r[0] - c(-0.1, 0.0)).norm() < 1e-14);
        assert!((r[1] - c(0.1, 0.0)).norm() < 1e-14);

        let p = Polynomial::from_real(&[0.0, 0.3, 1.0]).unwrap();
        let r = sorted(p.all_roots().unwrap());
        assert!((r[0] - c(-0.3, 0.0)).norm() < 1e-14);
        assert!(r[1].norm() < 1e-14);
    }

    #[test]
    fn cube_roots_of_unity() {
        let p = Polynomial::from_real(&[-1.0, 0.0, 0.0, 1.0]).unwrap();
        let r = p.all_roots().unwrap();
        assert_eq!(r.len(), 3);
        for k in 0..3 {
            let expected = C::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0);
            assert!(r.iter().any(|x| (x - expected).norm() < 1e-12), "missing {expected}");
        }
    }

    #[test]
    fn double_root_reported_with_multiplicity() {
        let sq = Polynomial::<f64>::monomial(2).unwrap();
        let m = sq.roots_with_multiplicity().unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].1, 2);
        assert!(m[0].0.norm() < 1e-12);
        assert_eq!(sq.preimages_of_value(c(0.0, 0.0)).unwrap().len(), 2);

        let shifted = Polynomial::from_real(&[0.25, -1.0, 1.0]).unwrap();
        let m = shifted.roots_with_multiplicity().unwrap();
        assert_eq!(m.len(), 1);
        assert!((m[0].0 - c(0.5, 0.0)).norm() < 1e-7);
    }

    #[test]
    fn preimage_examples() {
        let sq = Polynomial::<f64>::monomial(2).unwrap();
        let r = sorted(sq.preimages_of_value(c(0.01, 0.0)).unwrap());
        assert!((r[0] - c(-0.1, 0.0)).norm() < 1e-14 && (r[1] - c(0.1, 0.0)).norm() < 1e-14);
        let p = Polynomial::from_real(&[0.0, 0.3, 1.0]).unwrap();
        let r = sorted(p.preimages_of_value(c(0.0, 0.0)).unwrap());
        assert!((r[0] - c(-0.3, 0.0)).norm() < 1e-14 && r[1].norm() < 1e-14);
    }

    #[test]
    fn single_precision_roots() {
        let p = Polynomial::<f32>::from_real(&[-0.25, 0.0, 1.0]).unwrap();
        let r = p.all_roots().unwrap();
        assert!(r.iter().any(|x| (x - Complex::new(0.5f32, 0.0)).norm() < 1e-5));
        assert!(r.iter().any(|x| (x - Complex::new(-0.5f32, 0.0)).norm() < 1e-5));
    }

    #[test]
    fn higher_degree_with_complex_coefficients() {
        let p = Polynomial::new(vec![c(0.3, -0.2), c(-0.5, 0.1), c(0.0, 0.7), c(0.2, 0.2), c(-0.6, 0.1), c(0.9, 0.0)]).unwrap();
        let roots = p.all_roots().unwrap();
        assert_eq!(roots.len(), 5);
        for r in roots {
            assert!(p.evaluate(r).norm() < 1e-12);
        }
    }
}
