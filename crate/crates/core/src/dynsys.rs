//! Product maps `(P(z), Q(w))` and skew products `(P(z), Q(z, w))` on C².

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::polycore::{Polynomial, SpacePoint};
use crate::scalar::Scalar;

/// Default escape radius for forward orbits and basin membership.
pub const DEFAULT_ESCAPE_RADIUS: f64 = 1e6;

/// Multiplier tolerance used by [`classify_fixed_point`].
pub const MULTIPLIER_TOL: f64 = 1e-12;

/// Ratio read into "much larger than" for the quadratic skew family.
pub const HIERARCHY_RATIO: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FixedPointKind {
    Superattracting,
    Geometric,
    Parabolic,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FixedPointClass<T> {
    pub multiplier: Complex<T>,
    pub kind: FixedPointKind,
}

/// Classifies the fixed point at the origin by its multiplier `p'(0)`.
pub fn classify_fixed_point<T: Scalar>(p: &Polynomial<T>) -> Result<FixedPointClass<T>> {
    let at0 = p.coeff(0).norm();
    if at0 > T::zero_tol() {
        return Err(Error::OriginNotFixed { value: at0.to_f64().unwrap_or(f64::NAN) });
    }
    let multiplier = p.coeff(1);
    let tol = T::lit(MULTIPLIER_TOL);
    let modulus = multiplier.norm();
    let kind = if modulus <= tol {
        FixedPointKind::Superattracting
    } else if (multiplier - Complex::new(T::one(), T::zero())).norm() <= tol {
        FixedPointKind::Parabolic
    } else if modulus < T::one() - tol {
        FixedPointKind::Geometric
    } else {
        FixedPointKind::Other
    };
    Ok(FixedPointClass { multiplier, kind })
}

/// A polynomial self-map of C² with computable backward steps.
pub trait PlaneMap<T: Scalar>: Send + Sync {
    fn apply(&self, p: SpacePoint<T>) -> SpacePoint<T>;

    /// All preimages of `target`, with multiplicity.
    fn inverse_step(&self, target: SpacePoint<T>) -> Result<Vec<SpacePoint<T>>>;
}

/// `F(z, w) = (P(z), Q(w))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductMap<T> {
    p: Polynomial<T>,
    q: Polynomial<T>,
}

impl<T: Scalar> ProductMap<T> {
    pub fn new(p: Polynomial<T>, q: Polynomial<T>) -> Result<Self> {
        for (name, poly) in [("P", &p), ("Q", &q)] {
            if poly.coeff(0).norm() > T::zero_tol() {
                return Err(Error::InvalidMap(format!("{name}(0) != 0")));
            }
        }
        Ok(Self { p, q })
    }

    pub fn p(&self) -> &Polynomial<T> {
        &self.p
    }

    pub fn q(&self) -> &Polynomial<T> {
        &self.q
    }
}

impl<T: Scalar> PlaneMap<T> for ProductMap<T> {
    fn apply(&self, x: SpacePoint<T>) -> SpacePoint<T> {
        SpacePoint::new(self.p.evaluate(x.z), self.q.evaluate(x.w))
    }

    fn inverse_step(&self, target: SpacePoint<T>) -> Result<Vec<SpacePoint<T>>> {
        let zs = self.p.preimages_of_value(target.z)?;
        let ws = self.q.preimages_of_value(target.w)?;
        Ok(zs.iter().flat_map(|&z| ws.iter().map(move |&w| SpacePoint::new(z, w))).collect())
    }
}

/// Second coordinate of a skew product.
#[derive(Clone, Debug, PartialEq)]
pub enum FiberForm<T> {
    /// `w² + a z`.
    W2PlusAz { a: Complex<T> },
    /// `w² + c w + b z`.
    W2CwBz { b: Complex<T>, c: Complex<T> },
    /// `sum coeffs[i][j] z^i w^j`.
    General(Vec<Vec<Complex<T>>>),
}

impl<T: Scalar> FiberForm<T> {
    pub fn evaluate(&self, z: Complex<T>, w: Complex<T>) -> Complex<T> {
        match self {
            FiberForm::W2PlusAz { a } => w * w + a * z,
            FiberForm::W2CwBz { b, c } => w * w + c * w + b * z,
            FiberForm::General(table) => {
                let zero = Complex::new(T::zero(), T::zero());
                table.iter().rev().fold(zero, |acc, row| {
                    acc * z + row.iter().rev().fold(zero, |r, &c| r * w + c)
                })
            }
        }
    }

    /// `∂Q/∂w`.
    pub fn dw(&self, z: Complex<T>, w: Complex<T>) -> Complex<T> {
        let two = T::lit(2.0);
        match self {
            FiberForm::W2PlusAz { .. } => w * two,
            FiberForm::W2CwBz { c, .. } => w * two + c,
            FiberForm::General(table) => {
                let zero = Complex::new(T::zero(), T::zero());
                table.iter().rev().fold(zero, |acc, row| {
                    let d = row
                        .iter()
                        .enumerate()
                        .skip(1)
                        .rev()
                        .fold(zero, |r, (j, &c)| r * w + c * T::from_usize(j).unwrap());
                    acc * z + d
                })
            }
        }
    }

    /// The fiber polynomial `W ↦ Q(Z, W)` at fixed `Z`.
    pub fn fiber_polynomial(&self, z: Complex<T>) -> Result<Polynomial<T>> {
        let one = Complex::new(T::one(), T::zero());
        let coeffs = match self {
            FiberForm::W2PlusAz { a } => vec![a * z, Complex::new(T::zero(), T::zero()), one],
            FiberForm::W2CwBz { b, c } => vec![b * z, *c, one],
            FiberForm::General(table) => {
                let width = table.iter().map(Vec::len).max().unwrap_or(0);
                (0..width)
                    .map(|j| {
                        table.iter().rev().fold(Complex::new(T::zero(), T::zero()), |acc, row| {
                            acc * z + row.get(j).copied().unwrap_or_else(|| Complex::new(T::zero(), T::zero()))
                        })
                    })
                    .collect()
            }
        };
        Polynomial::new(coeffs)
    }
}

/// Ratio checks `|a| ≥ 10|c|`, `|a| ≥ 10|b|`, `|c| ≥ 10|ab|` for the quadratic skew family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HierarchyFlags {
    pub a_over_c: bool,
    pub a_over_b: bool,
    pub c_over_ab: bool,
}

impl HierarchyFlags {
    pub fn evaluate(a: f64, b: f64, c: f64) -> Self {
        Self {
            a_over_c: a >= HIERARCHY_RATIO * c,
            a_over_b: a >= HIERARCHY_RATIO * b,
            c_over_ab: c >= HIERARCHY_RATIO * a * b,
        }
    }

    pub fn all(&self) -> bool {
        self.a_over_c && self.a_over_b && self.c_over_ab
    }
}

/// `F(z, w) = (P(z), Q(z, w))`.
#[derive(Clone, Debug, PartialEq)]
pub struct SkewMap<T> {
    p: Polynomial<T>,
    q: FiberForm<T>,
    hierarchy: Option<HierarchyFlags>,
}

impl<T: Scalar> SkewMap<T> {
    pub fn new(p: Polynomial<T>, q: FiberForm<T>) -> Result<Self> {
        if p.coeff(0).norm() > T::zero_tol() {
            return Err(Error::InvalidMap("P(0) != 0".into()));
        }
        let zero = Complex::new(T::zero(), T::zero());
        if q.evaluate(zero, zero).norm() > T::zero_tol() {
            return Err(Error::InvalidMap("Q(0, 0) != 0".into()));
        }
        let mut hierarchy = None;
        match &q {
            FiberForm::W2PlusAz { a } => {
                if a.norm() <= T::zero_tol() {
                    return Err(Error::InvalidMap("w^2 + az requires a != 0".into()));
                }
            }
            FiberForm::W2CwBz { b, c } => {
                let a = p.coeff(1).norm();
                if a <= T::zero_tol() || b.norm() <= T::zero_tol() || c.norm() <= T::zero_tol() {
                    return Err(Error::InvalidMap("w^2 + cw + bz requires nonzero a, b, c".into()));
                }
                let flags = HierarchyFlags::evaluate(
                    a.to_f64().unwrap(),
                    b.norm().to_f64().unwrap(),
                    c.norm().to_f64().unwrap(),
                );
                if !flags.all() {
                    log::warn!("parameter hierarchy |a| >> |c|, |a| >> |b|, |c| >> |ab| violated: {flags:?}");
                }
                hierarchy = Some(flags);
            }
            FiberForm::General(_) => {}
        }
        q.fiber_polynomial(zero)?;
        Ok(Self { p, q, hierarchy })
    }

    /// `(z², w² + a z)`.
    pub fn square(a: Complex<T>) -> Result<Self> {
        Self::new(Polynomial::monomial(2)?, FiberForm::W2PlusAz { a })
    }

    /// `(a z + z², w² + c w + b z)`.
    pub fn quadratic(a: Complex<T>, b: Complex<T>, c: Complex<T>) -> Result<Self> {
        let zero = Complex::new(T::zero(), T::zero());
        let one = Complex::new(T::one(), T::zero());
        Self::new(Polynomial::new(vec![zero, a, one])?, FiberForm::W2CwBz { b, c })
    }

    pub fn p(&self) -> &Polynomial<T> {
        &self.p
    }

    pub fn q(&self) -> &FiberForm<T> {
        &self.q
    }

    pub fn hierarchy(&self) -> Option<HierarchyFlags> {
        self.hierarchy
    }
}

impl<T: Scalar> PlaneMap<T> for SkewMap<T> {
    fn apply(&self, x: SpacePoint<T>) -> SpacePoint<T> {
        SpacePoint::new(self.p.evaluate(x.z), self.q.evaluate(x.z, x.w))
    }

    fn inverse_step(&self, target: SpacePoint<T>) -> Result<Vec<SpacePoint<T>>> {
        let mut out = Vec::new();
        for z in self.p.preimages_of_value(target.z)? {
            for w in self.q.fiber_polynomial(z)?.preimages_of_value(target.w)? {
                out.push(SpacePoint::new(z, w));
            }
        }
        Ok(out)
    }
}

/// Forward orbit, possibly cut short by escape.
#[derive(Clone, Debug, PartialEq)]
pub struct Orbit<T> {
    pub points: Vec<SpacePoint<T>>,
    pub escaped: bool,
}

/// Iterates `n` times from `start`, stopping early once a coordinate exceeds `escape_radius`.
pub fn forward_orbit<T: Scalar, M: PlaneMap<T> + ?Sized>(
    map: &M,
    start: SpacePoint<T>,
    n: usize,
    escape_radius: T,
) -> Orbit<T> {
    let mut points = Vec::with_capacity(n + 1);
    points.push(start);
    let mut x = start;
    for _ in 0..n {
        if !x.is_finite() || x.max_norm() > escape_radius {
            return Orbit { points, escaped: true };
        }
        x = map.apply(x);
        points.push(x);
    }
    let escaped = !x.is_finite() || x.max_norm() > escape_radius;
    Orbit { points, escaped }
}

#[cfg(test)]
mod tests {
    use super::*;

    type C = Complex<f64>;

    fn c(re: f64, im: f64) -> C {
        C::new(re, im)
    }

    fn quad(lin: f64) -> Polynomial<f64> {
        Polynomial::from_real(&[0.0, lin, 1.0]).unwrap()
    }

    #[test]
    fn classification_examples() {
        let k = |p: &Polynomial<f64>| classify_fixed_point(p).unwrap().kind;
        assert_eq!(k(&Polynomial::monomial(2).unwrap()), FixedPointKind::Superattracting);
        assert_eq!(k(&quad(0.3)), FixedPointKind::Geometric);
        assert_eq!(k(&quad(1.0)), FixedPointKind::Parabolic);
        assert_eq!(k(&quad(-1.0)), FixedPointKind::Other);
        assert_eq!(k(&quad(1.5)), FixedPointKind::Other);
        let shifted = Polynomial::from_real(&[0.1, 0.3, 1.0]).unwrap();
        assert!(matches!(classify_fixed_point(&shifted), Err(Error::OriginNotFixed { .. })));
    }

    #[test]
    fn orbit_examples() {
        let sq = ProductMap::new(Polynomial::monomial(2).unwrap(), Polynomial::monomial(2).unwrap()).unwrap();
        let o = forward_orbit(&sq, SpacePoint::real(0.5, 0.5), 2, DEFAULT_ESCAPE_RADIUS);
        assert!(!o.escaped);
        assert_eq!(o.points, vec![SpacePoint::real(0.5, 0.5), SpacePoint::real(0.25, 0.25), SpacePoint::real(0.0625, 0.0625)]);

        let skew = SkewMap::square(c(0.1, 0.0)).unwrap();
        let o = forward_orbit(&skew, SpacePoint::real(0.0, 0.0), 3, DEFAULT_ESCAPE_RADIUS);
        assert_eq!(o.points.len(), 4);
        assert!(o.points.iter().all(|p| p.max_norm() == 0.0));

        let geo = ProductMap::new(quad(0.3), quad(0.3)).unwrap();
        let o = forward_orbit(&geo, SpacePoint::real(0.1, 0.0), 1, DEFAULT_ESCAPE_RADIUS);
        assert!((o.points[1].z - c(0.04, 0.0)).norm() < 1e-16);
        assert_eq!(o.points[1].w, c(0.0, 0.0));
    }

    #[test]
    fn orbit_escape_is_flagged() {
        let sq = ProductMap::new(Polynomial::monomial(2).unwrap(), Polynomial::monomial(2).unwrap()).unwrap();
        let o = forward_orbit(&sq, SpacePoint::real(2.0, 0.0), 50, DEFAULT_ESCAPE_RADIUS);
        assert!(o.escaped);
        assert!(o.points.len() < 51);
    }

    #[test]
    fn inverse_step_examples() {
        let sq = ProductMap::new(Polynomial::monomial(2).unwrap(), Polynomial::monomial(2).unwrap()).unwrap();
        let pre = sq.inverse_step(SpacePoint::real(0.01, 0.01)).unwrap();
        assert_eq!(pre.len(), 4);
        for (sz, sw) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            let e = SpacePoint::real(0.1 * sz, 0.1 * sw);
            assert!(pre.iter().any(|p| (p.z - e.z).norm() < 1e-14 && (p.w - e.w).norm() < 1e-14));
        }

        let skew = SkewMap::square(c(0.1, 0.0)).unwrap();
        let pre = skew.inverse_step(SpacePoint::real(0.04, 0.0)).unwrap();
        assert_eq!(pre.len(), 4);
        let r = 0.02f64.sqrt();
        for e in [
            SpacePoint::new(c(0.2, 0.0), c(0.0, r)),
            SpacePoint::new(c(0.2, 0.0), c(0.0, -r)),
            SpacePoint::new(c(-0.2, 0.0), c(r, 0.0)),
            SpacePoint::new(c(-0.2, 0.0), c(-r, 0.0)),
        ] {
            assert!(pre.iter().any(|p| (p.z - e.z).norm() < 1e-14 && (p.w - e.w).norm() < 1e-14), "missing {e:?}");
        }

        let geo = ProductMap::new(quad(0.3), quad(0.3)).unwrap();
        let pre = geo.inverse_step(SpacePoint::real(0.0, 0.0)).unwrap();
        assert_eq!(pre.len(), 4);
        for p in &pre {
            assert!(p.z.norm() < 1e-14 || (p.z - c(-0.3, 0.0)).norm() < 1e-14);
            assert!(p.w.norm() < 1e-14 || (p.w - c(-0.3, 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn skew_validation() {
        assert!(SkewMap::square(c(0.0, 0.0)).is_err());
        let m = SkewMap::quadratic(c(0.1, 0.0), c(0.001, 0.0), c(0.01, 0.0)).unwrap();
        assert!(m.hierarchy().unwrap().all());
        let loose = SkewMap::quadratic(c(0.1, 0.0), c(0.05, 0.0), c(0.01, 0.0)).unwrap();
        let flags = loose.hierarchy().unwrap();
        assert!(flags.a_over_c && !flags.a_over_b && !flags.c_over_ab);
    }

    #[test]
    fn general_fiber_form_matches_named_forms() {
        let (b, cc) = (c(0.001, 0.0), c(0.01, 0.0));
        // rows are powers of z, columns powers of w
        let table = vec![vec![c(0.0, 0.0), cc, c(1.0, 0.0)], vec![b]];
        let general = FiberForm::General(table);
        let named = FiberForm::W2CwBz { b, c: cc };
        for (z, w) in [(c(0.3, -0.2), c(0.5, 0.1)), (c(-0.7, 0.4), c(0.0, 0.9))] {
            assert!((general.evaluate(z, w) - named.evaluate(z, w)).norm() < 1e-15);
            assert!((general.dw(z, w) - named.dw(z, w)).norm() < 1e-15);
            let fp = general.fiber_polynomial(z).unwrap();
            assert!((fp.evaluate(w) - named.evaluate(z, w)).norm() < 1e-15);
        }
    }
}
