//! Hyperbolic distances with curvature −1: exact forms on model domains and
//! two-sided grid estimates on rasterized planar domains.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use num_complex::Complex;

use crate::basin::{connectivity_report, GridDomain};
use crate::error::{Error, Result};
use crate::polycore::SpacePoint;
use crate::scalar::Scalar;
use crate::C64;

/// How a [`DistanceBound`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CertificateKind {
    ClosedForm,
    Projection,
    PuncturedDisk,
    GeodesicGrid,
    ProductMax,
}

impl CertificateKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            CertificateKind::ClosedForm => "CLOSED_FORM",
            CertificateKind::Projection => "PROJECTION",
            CertificateKind::PuncturedDisk => "PUNCTURED_DISK",
            CertificateKind::GeodesicGrid => "GEODESIC_GRID",
            CertificateKind::ProductMax => "PRODUCT_MAX",
        }
    }

    /// Kinds whose lower bound is rigorous rather than a grid estimate.
    pub fn certifies_lower(&self) -> bool {
        matches!(self, CertificateKind::ClosedForm | CertificateKind::Projection | CertificateKind::PuncturedDisk)
    }
}

/// Interval `[lower, upper]` enclosing a distance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DistanceBound {
    pub lower: f64,
    pub upper: f64,
    pub certificate: CertificateKind,
}

impl DistanceBound {
    pub fn new(lower: f64, upper: f64, certificate: CertificateKind) -> Result<Self> {
        if !(lower >= 0.0) || !(upper >= lower) {
            return Err(Error::InvalidParameter(format!("invalid bound [{lower}, {upper}]")));
        }
        if certificate == CertificateKind::ClosedForm && lower != upper {
            return Err(Error::InvalidParameter("closed-form bound must be exact".into()));
        }
        Ok(Self { lower, upper, certificate })
    }

    pub fn exact(value: f64) -> Self {
        Self { lower: value, upper: value, certificate: CertificateKind::ClosedForm }
    }

    /// Lower bound only; the upper end is `+∞`.
    pub fn lower_only(lower: f64, certificate: CertificateKind) -> Self {
        Self { lower, upper: f64::INFINITY, certificate }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// Max-rule for products: `d((z,w),(z',w')) = max(d(z,z'), d(w,w'))`.
pub fn product_max_distance(b1: DistanceBound, b2: DistanceBound) -> DistanceBound {
    DistanceBound {
        lower: b1.lower.max(b2.lower),
        upper: b1.upper.max(b2.upper),
        certificate: CertificateKind::ProductMax,
    }
}

fn check_disk<T: Scalar>(a: Complex<T>) -> Result<()> {
    if a.norm() < T::one() {
        Ok(())
    } else {
        Err(Error::OutOfDomain {
            what: "open unit disk",
            re: a.re.to_f64().unwrap_or(f64::NAN),
            im: a.im.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// `|(a − b)/(1 − a·conj(b))|`.
pub fn pseudo_hyperbolic<T: Scalar>(a: Complex<T>, b: Complex<T>) -> T {
    let one = Complex::new(T::one(), T::zero());
    (a - b).norm() / (one - a * b.conj()).norm()
}

/// Poincaré distance `ln((1+ρ)/(1−ρ))` on the unit disk.
///
/// Evaluated as `2 ln(1+ρ) − ln(1−ρ²)` with `1−ρ² = (1−|a|²)(1−|b|²)/|1−a·conj(b)|²`,
/// which keeps relative accuracy near the circle.
pub fn disk_distance<T: Scalar>(a: Complex<T>, b: Complex<T>) -> Result<T> {
    check_disk(a)?;
    check_disk(b)?;
    if a == b {
        return Ok(T::zero());
    }
    let one = Complex::new(T::one(), T::zero());
    let den = (one - a * b.conj()).norm_sqr();
    let rho = ((a - b).norm_sqr() / den).sqrt();
    let comp = |x: Complex<T>| {
        let r = x.norm();
        (T::one() - r) * (T::one() + r)
    };
    let one_minus_rho2 = comp(a) * comp(b) / den;
    Ok(T::lit(2.0) * rho.ln_1p() - one_minus_rho2.ln())
}

/// `max(d_Δ(p.z, q.z), d_Δ(p.w, q.w))` on the unit bidisc.
pub fn polydisc_distance<T: Scalar>(p: SpacePoint<T>, q: SpacePoint<T>) -> Result<T> {
    Ok(disk_distance(p.z, q.z)?.max(disk_distance(p.w, q.w)?))
}

/// `2 atanh(x)` for a real point `x = 1 − β` of the unit disk, given `β ∈ (0, 2)`.
pub fn real_coordinate_from_complement<T: Scalar>(beta: T) -> T {
    (T::lit(2.0) - beta).ln() - beta.ln()
}

/// `2 atanh(x)` for real `x ∈ (−1, 1)`.
pub fn real_coordinate<T: Scalar>(x: T) -> T {
    x.ln_1p() - (-x).ln_1p()
}

/// Distance between real points `1 − β_a` and `1 − β_b` of the unit disk,
/// accurate when both lie within rounding distance of 1.
pub fn real_disk_distance_near_one<T: Scalar>(beta_a: T, beta_b: T) -> Result<T> {
    let two = T::lit(2.0);
    for b in [beta_a, beta_b] {
        if !(b > T::zero() && b < two) {
            return Err(Error::InvalidParameter(format!("complement {b} outside (0, 2)")));
        }
    }
    Ok((real_coordinate_from_complement(beta_a) - real_coordinate_from_complement(beta_b)).abs())
}

/// `| ln|ln(|y|/R)| − ln|ln(|x|/R)| |`: lower bound for the distance in `{0 < |ζ| < R}`.
pub fn punctured_lower_bound<T: Scalar>(x: Complex<T>, y: Complex<T>, r: T) -> Result<T> {
    punctured_lower_bound_moduli(x.norm(), y.norm(), r)
}

/// [`punctured_lower_bound`] from the moduli alone.
pub fn punctured_lower_bound_moduli<T: Scalar>(x: T, y: T, r: T) -> Result<T> {
    if !(r > T::one()) || !r.is_finite() {
        return Err(Error::InvalidParameter(format!("punctured radius {r} must exceed 1")));
    }
    for m in [x, y] {
        if !(m > T::zero() && m < r) {
            return Err(Error::InvalidParameter(format!("modulus {m} outside (0, {r})")));
        }
    }
    let ll = |m: T| (m / r).ln().abs().ln();
    Ok((ll(y) - ll(x)).abs())
}

/// Worst-case ratio of octile to Euclidean path length, `1/cos(π/8)`.
pub const OCTILE_FACTOR: f64 = 1.082_392_200_292_394;

/// Two-sided bound from a quasihyperbolic length `q_len`.
///
/// Upper `2Q` holds on every domain since `λ ≤ 2/δ`. Lower `Q/(2κ)` uses
/// `λ ≥ 1/(2δ)` (simply connected only) and the octile overestimate `κ`.
pub fn koebe_bound(q_len: f64, simply_connected: bool) -> DistanceBound {
    let lower = if simply_connected { q_len / (2.0 * OCTILE_FACTOR) } else { 0.0 };
    DistanceBound { lower, upper: 2.0 * q_len, certificate: CertificateKind::GeodesicGrid }
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    cost: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.cost.total_cmp(&self.cost).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn member_cell(d: &GridDomain, z: C64) -> Result<usize> {
    match d.cell_of(z) {
        Some((i, j)) if d.is_member_cell(i, j) => Ok(d.index(i, j)),
        _ => Err(Error::OutOfDomain { what: "member set", re: z.re, im: z.im }),
    }
}

/// Single-source quasihyperbolic distances over the 8-neighbor cell graph.
#[derive(Clone, Debug)]
pub struct GeodesicField<'a> {
    domain: &'a GridDomain,
    source: C64,
    source_cell: usize,
    dist: Vec<f64>,
    simply_connected: bool,
}

impl<'a> GeodesicField<'a> {
    pub fn new(domain: &'a GridDomain, source: C64) -> Result<Self> {
        let simply_connected = connectivity_report(domain).hole_count == 0;
        Self::with_topology(domain, source, simply_connected)
    }

    /// As [`GeodesicField::new`] with the hole count already known.
    pub fn with_topology(domain: &'a GridDomain, source: C64, simply_connected: bool) -> Result<Self> {
        if !domain.has_boundary_dist() {
            return Err(Error::InvalidParameter("boundary distance field missing".into()));
        }
        let source_cell = member_cell(domain, source)?;
        let n = domain.resolution();
        let bd = domain.boundary_dist();
        let member = domain.membership();
        let (hx, hy) = (domain.cell_width(), domain.cell_height());
        let diag = hx.hypot(hy);
        let mut dist = vec![f64::INFINITY; n * n];
        let start = (source - domain.center_of_index(source_cell)).norm() / bd[source_cell];
        dist[source_cell] = start;
        let mut heap = BinaryHeap::from([Entry { cost: start, cell: source_cell }]);
        while let Some(Entry { cost, cell }) = heap.pop() {
            if cost > dist[cell] {
                continue;
            }
            let (i, j) = ((cell % n) as isize, (cell / n) as isize);
            let inv = 1.0 / bd[cell];
            for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)] {
                let (a, b) = (i + di, j + dj);
                if a < 0 || b < 0 || a >= n as isize || b >= n as isize {
                    continue;
                }
                let nb = b as usize * n + a as usize;
                if !member[nb] {
                    continue;
                }
                let len = if di != 0 && dj != 0 {
                    let side1 = j as usize * n + a as usize;
                    let side2 = b as usize * n + i as usize;
                    if !member[side1] || !member[side2] {
                        continue;
                    }
                    diag
                } else if di != 0 {
                    hx
                } else {
                    hy
                };
                let next = cost + len * 0.5 * (inv + 1.0 / bd[nb]);
                if next < dist[nb] {
                    dist[nb] = next;
                    heap.push(Entry { cost: next, cell: nb });
                }
            }
        }
        Ok(Self { domain, source, source_cell, dist, simply_connected })
    }

    pub fn source(&self) -> C64 {
        self.source
    }

    pub fn simply_connected(&self) -> bool {
        self.simply_connected
    }

    /// Quasihyperbolic length of the grid path from the source to `q`.
    pub fn quasi_length_to(&self, q: C64) -> Result<f64> {
        let cell = member_cell(self.domain, q)?;
        let bd = self.domain.boundary_dist()[cell];
        if cell == self.source_cell {
            return Ok((q - self.source).norm() / bd);
        }
        let tail = (q - self.domain.center_of_index(cell)).norm() / bd;
        Ok(self.dist[cell] + tail)
    }

    pub fn bound_to(&self, q: C64) -> Result<DistanceBound> {
        Ok(koebe_bound(self.quasi_length_to(q)?, self.simply_connected))
    }

    /// Largest single edge weight touching either endpoint cell: one cell of slack.
    pub fn cell_slack(&self, q: C64) -> Result<f64> {
        let cell = member_cell(self.domain, q)?;
        let bd = self.domain.boundary_dist();
        Ok(2.0 * self.domain.cell_diagonal() / bd[cell].min(bd[self.source_cell]))
    }
}

/// Two-sided estimate of the hyperbolic distance between `p` and `q` in the rasterized domain.
pub fn grid_geodesic_distance(d: &GridDomain, p: C64, q: C64) -> Result<DistanceBound> {
    member_cell(d, q)?;
    GeodesicField::new(d, p)?.bound_to(q)
}

/// Doubles the resolution until the upper bound moves by less than `rel_tol`.
/// Returns the last bound and the resolution it was computed at.
pub fn refine_geodesic_upper(
    build: impl Fn(usize) -> Result<GridDomain>,
    p: C64,
    q: C64,
    start_resolution: usize,
    max_resolution: usize,
    rel_tol: f64,
) -> Result<(DistanceBound, usize)> {
    let mut res = start_resolution;
    let mut prev = grid_geodesic_distance(&build(res)?, p, q)?;
    while res * 2 <= max_resolution {
        res *= 2;
        let next = grid_geodesic_distance(&build(res)?, p, q)?;
        let change = (next.upper - prev.upper).abs() / prev.upper.max(f64::MIN_POSITIVE);
        prev = next;
        if change < rel_tol {
            break;
        }
    }
    Ok((prev, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basin::GridBox;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    #[test]
    fn disk_distance_examples() {
        assert_eq!(disk_distance(c(0.0, 0.0), c(0.0, 0.0)).unwrap(), 0.0);
        assert!((disk_distance(c(0.0, 0.0), c(0.5, 0.0)).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert!((disk_distance(c(0.0, 0.0), c(0.9, 0.0)).unwrap() - 19f64.ln()).abs() < 1e-14);
        assert!(disk_distance(c(1.0, 0.0), c(0.0, 0.0)).is_err());
        assert!(disk_distance(c(0.0, 0.0), c(0.6, 0.8)).is_err());
    }

    #[test]
    fn disk_distance_single_precision() {
        let d = disk_distance(Complex::new(0.0f32, 0.0), Complex::new(0.5f32, 0.0)).unwrap();
        assert!((d - 3f32.ln()).abs() < 1e-6);
    }

    #[test]
    fn polydisc_examples() {
        let o = SpacePoint::real(0.0, 0.0);
        assert!((polydisc_distance(o, SpacePoint::real(0.5, 0.8)).unwrap() - 9f64.ln()).abs() < 1e-14);
        assert!((polydisc_distance(o, SpacePoint::real(0.5, 0.5)).unwrap() - 3f64.ln()).abs() < 1e-15);
        let p = SpacePoint::new(c(0.3, -0.2), c(0.1, 0.4));
        assert_eq!(polydisc_distance(p, p).unwrap(), 0.0);
    }

    #[test]
    fn near_one_form_matches_generic_distance() {
        for (a, b) in [(0.25, 0.01), (1e-6, 0.3), (1e-3, 1e-5)] {
            let generic = disk_distance(c(1.0 - a, 0.0), c(1.0 - b, 0.0)).unwrap();
            let stable = real_disk_distance_near_one(a, b).unwrap();
            assert!((generic - stable).abs() < 1e-9 * generic.max(1.0), "{a} {b}");
        }
        assert!((real_coordinate(0.5f64) - 3f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn punctured_examples() {
        assert_eq!(punctured_lower_bound(c(0.3, 0.0), c(0.0, 0.3), 2.0).unwrap(), 0.0);
        let v = punctured_lower_bound(c(0.1, 0.0), c(0.5, 0.0), 2.0).unwrap();
        assert!((v - 0.770_554_440_386_667_7).abs() < 1e-12);
        let v = punctured_lower_bound_moduli(1e-38f64, 0.3, 2.0).unwrap();
        assert!((v - 3.839_172_295_149_382).abs() < 1e-12);
        assert!(punctured_lower_bound(c(0.0, 0.0), c(0.5, 0.0), 2.0).is_err());
        assert!(punctured_lower_bound(c(2.0, 0.0), c(0.5, 0.0), 2.0).is_err());
        assert!(punctured_lower_bound(c(0.2, 0.0), c(0.5, 0.0), 1.0).is_err());
    }

    #[test]
    fn product_max_examples() {
        let b = |l, u| DistanceBound { lower: l, upper: u, certificate: CertificateKind::GeodesicGrid };
        let r = product_max_distance(b(1.0, 1.0), b(2.0, 2.0));
        assert_eq!((r.lower, r.upper, r.certificate), (2.0, 2.0, CertificateKind::ProductMax));
        let r = product_max_distance(b(0.0, 3.0), b(2.0, 2.0));
        assert_eq!((r.lower, r.upper), (2.0, 3.0));
        let r = product_max_distance(b(0.0, 0.0), b(0.0, 0.0));
        assert_eq!((r.lower, r.upper), (0.0, 0.0));
    }

    #[test]
    fn bound_validation() {
        assert!(DistanceBound::new(2.0, 1.0, CertificateKind::GeodesicGrid).is_err());
        assert!(DistanceBound::new(1.0, 2.0, CertificateKind::ClosedForm).is_err());
        assert!(DistanceBound::new(-1.0, 2.0, CertificateKind::GeodesicGrid).is_err());
        assert!(DistanceBound::new(1.0, f64::INFINITY, CertificateKind::PuncturedDisk).is_ok());
    }

    fn unit_disk(res: usize) -> GridDomain {
        GridDomain::from_predicate(GridBox::square(1.05), res, |z| z.norm() < 1.0).unwrap()
    }

    #[test]
    fn geodesic_examples_on_unit_disk() {
        let d = unit_disk(512);
        for (r, exact) in [(0.9, 19f64.ln()), (0.5, 3f64.ln())] {
            let b = grid_geodesic_distance(&d, c(0.0, 0.0), c(r, 0.0)).unwrap();
            assert!(b.contains(exact), "{b:?} vs {exact}");
            assert!(b.upper / b.lower <= 4.5);
        }
        let p = c(0.1, -0.2);
        let b = grid_geodesic_distance(&d, p, p).unwrap();
        assert_eq!((b.lower, b.upper), (0.0, 0.0));
        assert!(grid_geodesic_distance(&d, c(0.0, 0.0), c(1.02, 0.0)).is_err());
    }

    #[test]
    fn holes_drop_the_lower_bound() {
        let ann = GridDomain::from_predicate(GridBox::square(1.05), 128, |z| z.norm() < 1.0 && z.norm() > 0.2).unwrap();
        let b = grid_geodesic_distance(&ann, c(0.5, 0.0), c(-0.5, 0.0)).unwrap();
        assert_eq!(b.lower, 0.0);
        assert!(b.upper > 0.0);
    }

    #[test]
    fn refinement_converges() {
        let (b, res) = refine_geodesic_upper(|n| Ok(unit_disk(n)), c(0.0, 0.0), c(0.5, 0.0), 64, 1024, 0.02).unwrap();
        assert!((128..=1024).contains(&res));
        assert!(b.contains(3f64.ln()));
    }
}
