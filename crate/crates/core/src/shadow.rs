//! Backward-orbit trees, the shadowing statistic, and unboundedness certificates.

use std::collections::HashMap;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basin::GridDomain;
use crate::dynsys::{classify_fixed_point, FixedPointKind, PlaneMap, ProductMap};
use crate::error::{Error, Result};
use crate::hypmetric::{
    real_coordinate, real_coordinate_from_complement, CertificateKind, DistanceBound, GeodesicField,
};
use crate::polycore::{Polynomial, SpacePoint};
use crate::scalar::Scalar;
use crate::C64;

/// Default tolerance below which two tree nodes are the same point.
pub const DEDUP_TOL: f64 = 1e-9;

/// Points that can be stored in a [`PreimageTree`].
pub trait TreePoint: Copy + Send + Sync {
    /// Real coordinates used for deduplication.
    fn coords(&self) -> Vec<f64>;

    fn distance(&self, other: &Self) -> f64 {
        self.coords()
            .iter()
            .zip(other.coords())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }
}

impl TreePoint for C64 {
    fn coords(&self) -> Vec<f64> {
        vec![self.re, self.im]
    }
}

impl TreePoint for SpacePoint<f64> {
    fn coords(&self) -> Vec<f64> {
        vec![self.z.re, self.z.im, self.w.re, self.w.im]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TreeNode<P> {
    pub point: P,
    pub depth: usize,
    pub parent: Option<usize>,
}

/// Deduplicated backward orbit `∪_k F^{-k}(root)`, stored breadth-first.
#[derive(Clone, Debug, PartialEq)]
pub struct PreimageTree<P> {
    nodes: Vec<TreeNode<P>>,
    depth_start: Vec<usize>,
    dedup_tol: f64,
    root: P,
}

impl<P: TreePoint> PreimageTree<P> {
    pub fn nodes(&self) -> &[TreeNode<P>] {
        &self.nodes
    }

    pub fn root(&self) -> P {
        self.root
    }

    pub fn dedup_tol(&self) -> f64 {
        self.dedup_tol
    }

    pub fn max_depth(&self) -> usize {
        self.depth_start.len() - 2
    }

    /// Nodes first appearing at depth `k`.
    pub fn at_depth(&self, k: usize) -> &[TreeNode<P>] {
        if k > self.max_depth() {
            return &[];
        }
        &self.nodes[self.depth_start[k]..self.depth_start[k + 1]]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

struct Dedup<P> {
    tol: f64,
    buckets: HashMap<Vec<i64>, Vec<usize>>,
    _marker: std::marker::PhantomData<P>,
}

impl<P: TreePoint> Dedup<P> {
    fn new(tol: f64) -> Self {
        Self { tol, buckets: HashMap::new(), _marker: std::marker::PhantomData }
    }

    fn key(&self, p: &P) -> Vec<i64> {
        p.coords().iter().map(|c| (c / self.tol).floor() as i64).collect()
    }

    fn find(&self, p: &P, nodes: &[TreeNode<P>]) -> bool {
        let base = self.key(p);
        let dims = base.len();
        let mut offset = vec![-1i64; dims];
        loop {
            let k: Vec<i64> = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(list) = self.buckets.get(&k) {
                if list.iter().any(|&i| nodes[i].point.distance(p) < self.tol) {
                    return true;
                }
            }
            let mut d = 0;
            while d < dims {
                offset[d] += 1;
                if offset[d] <= 1 {
                    break;
                }
                offset[d] = -1;
                d += 1;
            }
            if d == dims {
                return false;
            }
        }
    }

    fn insert(&mut self, p: &P, idx: usize) {
        let k = self.key(p);
        self.buckets.entry(k).or_default().push(idx);
    }
}

/// Breadth-first backward expansion.
///
/// `preimages` yields all preimages of a point; nodes rejected by `keep`
/// are dropped with their subtrees, and a node within `dedup_tol` of any
/// earlier node (at any depth) is dropped since its subtree repeats.
/// `dedup_tol = None` keeps every preimage.
pub fn build_tree<P: TreePoint + std::fmt::Debug>(
    root: P,
    depth: usize,
    dedup_tol: Option<f64>,
    preimages: impl Fn(P) -> Result<Vec<P>> + Sync,
    keep: impl Fn(&P) -> bool + Sync,
) -> Result<PreimageTree<P>> {
    let tol = dedup_tol.unwrap_or(0.0);
    let mut dedup = Dedup::new(if tol > 0.0 { tol } else { 1.0 });
    let mut nodes = vec![TreeNode { point: root, depth: 0, parent: None }];
    if tol > 0.0 {
        dedup.insert(&root, 0);
    }
    let mut depth_start = vec![0, 1];
    for k in 1..=depth {
        let (lo, hi) = (depth_start[k - 1], depth_start[k]);
        let expanded: Vec<Result<Vec<P>>> = nodes[lo..hi].par_iter().map(|n| preimages(n.point)).collect();
        for (offset, pre) in expanded.into_iter().enumerate() {
            let parent = lo + offset;
            let pre = pre.map_err(|e| {
                let c = nodes[parent].point.coords();
                Error::Preimage { depth: k, re: c[0], im: c[1], source: Box::new(e) }
            })?;
            for p in pre {
                if !keep(&p) {
                    continue;
                }
                if tol > 0.0 {
                    if dedup.find(&p, &nodes) {
                        continue;
                    }
                    dedup.insert(&p, nodes.len());
                }
                nodes.push(TreeNode { point: p, depth: k, parent: Some(parent) });
            }
        }
        depth_start.push(nodes.len());
    }
    Ok(PreimageTree { nodes, depth_start, dedup_tol: tol, root })
}

/// One-variable tree pruned to the member set of `domain`, deduplicated at `1e-9`.
pub fn build_tree_1d(p: &Polynomial<f64>, root: C64, depth: usize, domain: &GridDomain) -> Result<PreimageTree<C64>> {
    if !domain.is_member_point(root) {
        return Err(Error::OutOfDomain { what: "tree domain", re: root.re, im: root.im });
    }
    build_tree(root, depth, Some(DEDUP_TOL), |z| p.preimages_of_value(z), |z| domain.is_member_point(*z))
}

/// Tree of a map of C², filtered by `keep`.
pub fn build_tree_2d<M: PlaneMap<f64>>(
    map: &M,
    root: SpacePoint<f64>,
    depth: usize,
    keep: impl Fn(&SpacePoint<f64>) -> bool + Sync,
) -> Result<PreimageTree<SpacePoint<f64>>> {
    build_tree(root, depth, Some(DEDUP_TOL), |x| map.inverse_step(x), keep)
}

/// Shadowing bounds for one probe, per tree depth.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeShadow {
    pub probe: SpacePoint<f64>,
    /// Smaller of the two coordinate boundary distances.
    pub boundary_dist: f64,
    /// Bound over nodes of depth `≤ k`, for `k = 0..=K`.
    pub per_depth: Vec<DistanceBound>,
    /// Shallowest depth attaining the final upper bound.
    pub best_depth: usize,
}

impl ProbeShadow {
    pub fn bound(&self) -> DistanceBound {
        *self.per_depth.last().expect("at least depth 0")
    }
}

/// Running minima of (lower, upper) over tree depth for one coordinate.
fn coordinate_minima(field: &GeodesicField<'_>, tree: &PreimageTree<C64>) -> Result<Vec<(f64, f64)>> {
    let mut out = Vec::with_capacity(tree.max_depth() + 1);
    let (mut lo, mut up) = (f64::INFINITY, f64::INFINITY);
    for k in 0..=tree.max_depth() {
        for node in tree.at_depth(k) {
            let b = field.bound_to(node.point)?;
            lo = lo.min(b.lower);
            up = up.min(b.upper);
        }
        out.push((lo, up));
    }
    Ok(out)
}

/// For each probe, `min` over node pairs of the product max-rule bound,
/// computed coordinatewise since the pairs range over a full product.
pub fn shadow_statistic_product(
    ptree: &PreimageTree<C64>,
    qtree: &PreimageTree<C64>,
    probes: &[SpacePoint<f64>],
    grid_p: &GridDomain,
    grid_q: &GridDomain,
) -> Result<Vec<ProbeShadow>> {
    let sp = crate::basin::connectivity_report(grid_p).hole_count == 0;
    let sq = crate::basin::connectivity_report(grid_q).hole_count == 0;
    let depth = ptree.max_depth().min(qtree.max_depth());
    probes
        .par_iter()
        .map(|probe| {
            let fz = GeodesicField::with_topology(grid_p, probe.z, sp)?;
            let fw = GeodesicField::with_topology(grid_q, probe.w, sq)?;
            let mz = coordinate_minima(&fz, ptree)?;
            let mw = coordinate_minima(&fw, qtree)?;
            let per_depth: Vec<DistanceBound> = (0..=depth)
                .map(|k| DistanceBound {
                    lower: mz[k].0.max(mw[k].0),
                    upper: mz[k].1.max(mw[k].1),
                    certificate: CertificateKind::ProductMax,
                })
                .collect();
            let last = per_depth[depth].upper;
            let best_depth = per_depth.iter().position(|b| b.upper <= last).unwrap_or(depth);
            let boundary_dist = grid_p
                .boundary_dist_at(probe.z)
                .unwrap_or(0.0)
                .min(grid_q.boundary_dist_at(probe.w).unwrap_or(0.0));
            Ok(ProbeShadow { probe: *probe, boundary_dist, per_depth, best_depth })
        })
        .collect()
}

/// Upper edges, in cell sizes, of the boundary-distance strata used for probes.
pub const PROBE_STRATA: [f64; 4] = [2.0, 8.0, 32.0, 128.0];

fn strata(grid: &GridDomain) -> Vec<Vec<usize>> {
    let h = grid.cell_width().max(grid.cell_height());
    let mut out = vec![Vec::new(); PROBE_STRATA.len() + 1];
    for (k, (&m, &d)) in grid.membership().iter().zip(grid.boundary_dist()).enumerate() {
        if m {
            let s = PROBE_STRATA.iter().position(|&e| d <= e * h).unwrap_or(PROBE_STRATA.len());
            out[s].push(k);
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

/// Member-cell centers stratified by boundary distance in each coordinate,
/// starting with the band within two cells of the boundary.
pub fn stratified_probes(grid_p: &GridDomain, grid_q: &GridDomain, count: usize, seed: u64) -> Vec<SpacePoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (sp, sq) = (strata(grid_p), strata(grid_q));
    if sp.is_empty() || sq.is_empty() {
        return Vec::new();
    }
    (0..count)
        .map(|i| {
            let a = &sp[i % sp.len()];
            let b = &sq[(i / sp.len()) % sq.len()];
            let z = grid_p.center_of_index(a[rng.random_range(0..a.len())]);
            let w = grid_q.center_of_index(b[rng.random_range(0..b.len())]);
            SpacePoint::new(z, w)
        })
        .collect()
}

/// Parameters of [`boundedness_scan`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScanConfig {
    pub depth: usize,
    pub probe_count: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundednessScan {
    /// `Ĉ_K`, the largest per-probe shadowing upper bound at full depth.
    pub c_hat: f64,
    /// `Ĉ_0..Ĉ_K`.
    pub per_depth: Vec<f64>,
    pub probes: Vec<ProbeShadow>,
    pub p_tree_size: usize,
    pub q_tree_size: usize,
}

impl BoundednessScan {
    pub fn c_hat_at(&self, k: usize) -> Option<f64> {
        self.per_depth.get(k).copied()
    }
}

/// Empirical shadowing constant of a product of two geometrically attracting maps.
pub fn boundedness_scan(
    map: &ProductMap<f64>,
    grid_p: &GridDomain,
    grid_q: &GridDomain,
    config: &ScanConfig,
) -> Result<BoundednessScan> {
    for poly in [map.p(), map.q()] {
        let class = classify_fixed_point(poly)?;
        if class.kind != FixedPointKind::Geometric {
            return Err(Error::InvalidParameter(format!(
                "boundedness scan needs geometric fixed points, found {:?}",
                class.kind
            )));
        }
    }
    let origin = Complex::new(0.0, 0.0);
    let ptree = build_tree_1d(map.p(), origin, config.depth, grid_p)?;
    let qtree = build_tree_1d(map.q(), origin, config.depth, grid_q)?;
    let probes = stratified_probes(grid_p, grid_q, config.probe_count, config.seed);
    let shadows = shadow_statistic_product(&ptree, &qtree, &probes, grid_p, grid_q)?;
    let per_depth: Vec<f64> = (0..=config.depth)
        .map(|k| shadows.iter().map(|s| s.per_depth[k].upper).fold(0.0, f64::max))
        .collect();
    Ok(BoundednessScan {
        c_hat: *per_depth.last().unwrap(),
        per_depth,
        probes: shadows,
        p_tree_size: ptree.len(),
        q_tree_size: qtree.len(),
    })
}

fn check_certificate_params<T: Scalar>(eps: T, delta: T) -> Result<()> {
    if !(eps >= T::zero() && eps < T::one()) {
        return Err(Error::InvalidParameter(format!("eps = {eps} outside [0, 1)")));
    }
    if !(delta > T::zero() && delta < T::lit(0.5)) {
        return Err(Error::InvalidParameter(format!("delta = {delta} outside (0, 0.5)")));
    }
    Ok(())
}

/// `1 − ε^{1/m^k}`, computed without cancellation; `None` when `ε = 0`.
fn root_complement<T: Scalar>(eps: T, m: usize, k: usize) -> Option<T> {
    if eps == T::zero() {
        return None;
    }
    let e = T::from_usize(m).unwrap().powi(k as i32);
    Some(-(eps.ln() / e).exp_m1())
}

/// `2 atanh(ε^{1/m^k})`.
fn root_coordinate<T: Scalar>(eps: T, m: usize, k: usize) -> T {
    match root_complement(eps, m, k) {
        None => T::zero(),
        Some(beta) => real_coordinate_from_complement(beta),
    }
}

/// Per-depth terms `(d_Δ(1−δ, ε^{1/m₁^k}), d_Δ(δ, ε^{1/m₂^k}))` for `k = 0..=kmax`.
pub fn superattracting_terms<T: Scalar>(m1: usize, m2: usize, eps: T, delta: T, kmax: usize) -> Result<Vec<[T; 2]>> {
    check_certificate_params(eps, delta)?;
    if eps == T::zero() || m1 < 2 || m2 < 2 {
        return Err(Error::InvalidParameter("need eps > 0 and m1, m2 >= 2".into()));
    }
    let probe_z = real_coordinate_from_complement(delta);
    let probe_w = real_coordinate(delta);
    Ok((0..=kmax)
        .map(|k| [(probe_z - root_coordinate(eps, m1, k)).abs(), (root_coordinate(eps, m2, k) - probe_w).abs()])
        .collect())
}

/// `min_{k ≤ kmax} d_{Δ²}((1−δ, δ), (ε^{1/m₁^k}, ε^{1/m₂^k}))`: a lower bound on the
/// shadowing distance of the probe under `(z^{m₁}, w^{m₂})`, whose basin is the bidisc.
///
/// Preimages at depth `k` are `ε^{1/m^k}` times roots of unity; for the positive
/// real probe coordinates the positive real preimage is the nearest one.
pub fn unbounded_certificate_superattracting<T: Scalar>(m1: usize, m2: usize, eps: T, delta: T, kmax: usize) -> Result<T> {
    Ok(superattracting_terms(m1, m2, eps, delta, kmax)?
        .into_iter()
        .map(|[a, b]| a.max(b))
        .fold(T::infinity(), T::min))
}

/// Projection bound `min_{k ≤ kmax} d_Δ(1−δ, ε^{1/m^k})` for a first coordinate `z^m`.
/// `ε = 0` takes the fixed point itself as the shadow target.
pub fn projection_certificate<T: Scalar>(m: usize, eps: T, delta: T, kmax: usize) -> Result<T> {
    check_certificate_params(eps, delta)?;
    if m < 2 {
        return Err(Error::InvalidParameter("need m >= 2".into()));
    }
    let probe = real_coordinate_from_complement(delta);
    Ok((0..=kmax).map(|k| (probe - root_coordinate(eps, m, k)).abs()).fold(T::infinity(), T::min))
}

/// [`projection_certificate`] for `(z^m, Q(w))` with `Q` geometrically attracting.
pub fn unbounded_certificate_mixed<T: Scalar>(q: &Polynomial<T>, m: usize, eps: T, delta: T, kmax: usize) -> Result<T> {
    let class = classify_fixed_point(q)?;
    if class.kind != FixedPointKind::Geometric {
        return Err(Error::InvalidParameter(format!("Q must be geometric, found {:?}", class.kind)));
    }
    projection_certificate(m, eps, delta, kmax)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basin::{extract_immediate_basin, GridBox};
    use crate::hypmetric::polydisc_distance;

    fn c(re: f64, im: f64) -> C64 {
        Complex::new(re, im)
    }

    fn geometric() -> Polynomial<f64> {
        Polynomial::from_real(&[0.0, 0.3, 1.0]).unwrap()
    }

    #[test]
    fn tree_examples() {
        let sq = Polynomial::monomial(2).unwrap();
        let disk = extract_immediate_basin(&sq, GridBox::square(1.5), 128).unwrap();
        let t = build_tree_1d(&sq, c(0.01, 0.0), 1, &disk).unwrap();
        assert_eq!(t.len(), 3);
        assert!(t.at_depth(1).iter().any(|n| (n.point - c(0.1, 0.0)).norm() < 1e-14));
        assert!(t.at_depth(1).iter().any(|n| (n.point - c(-0.1, 0.0)).norm() < 1e-14));

        let p = geometric();
        let basin = extract_immediate_basin(&p, GridBox::square(1.5), 128).unwrap();
        let t = build_tree_1d(&p, c(0.0, 0.0), 1, &basin).unwrap();
        assert_eq!(t.len(), 2);
        assert!((t.at_depth(1)[0].point - c(-0.3, 0.0)).norm() < 1e-14);

        let t = build_tree_1d(&p, c(0.0, 0.0), 0, &basin).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.max_depth(), 0);
    }

    #[test]
    fn tree_invariants() {
        let p = geometric();
        let basin = extract_immediate_basin(&p, GridBox::square(1.5), 256).unwrap();
        let t = build_tree_1d(&p, c(0.0, 0.0), 7, &basin).unwrap();
        for n in t.nodes() {
            if let Some(parent) = n.parent {
                assert!((p.evaluate(n.point) - t.nodes()[parent].point).norm() < 1e-8);
                assert_eq!(n.depth, t.nodes()[parent].depth + 1);
            }
        }
        for k in 0..=7 {
            let level = t.at_depth(k);
            for (i, a) in level.iter().enumerate() {
                for b in &level[i + 1..] {
                    assert!((a.point - b.point).norm() >= t.dedup_tol());
                }
            }
        }
        let raw = build_tree(c(0.0, 0.0), 7, None, |z| p.preimages_of_value(z), |_| true).unwrap();
        for k in 0..=7 {
            assert!(raw.at_depth(k).len() <= 1 << k);
        }
    }

    #[test]
    fn shadow_of_root_is_zero() {
        let p = geometric();
        let basin = extract_immediate_basin(&p, GridBox::square(1.5), 128).unwrap();
        let t = build_tree_1d(&p, c(0.0, 0.0), 3, &basin).unwrap();
        let node = t.at_depth(2)[0].point;
        let probes = [SpacePoint::new(c(0.0, 0.0), c(0.0, 0.0)), SpacePoint::new(node, c(0.0, 0.0))];
        let s = shadow_statistic_product(&t, &t, &probes, &basin, &basin).unwrap();
        assert_eq!(s[0].bound().upper, 0.0);
        assert_eq!(s[1].bound().upper, 0.0);
        assert!(s[1].per_depth[1].upper > 0.0);
    }

    #[test]
    fn probe_outside_grid_is_rejected() {
        let p = geometric();
        let basin = extract_immediate_basin(&p, GridBox::square(1.5), 64).unwrap();
        let t = build_tree_1d(&p, c(0.0, 0.0), 1, &basin).unwrap();
        let r = shadow_statistic_product(&t, &t, &[SpacePoint::new(c(1.4, 0.0), c(0.0, 0.0))], &basin, &basin);
        assert!(matches!(r, Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn superattracting_certificate_oracles() {
        let v = unbounded_certificate_superattracting(2, 2, 0.01f64, 0.25, 0).unwrap();
        let direct = polydisc_distance(SpacePoint::real(0.75, 0.25), SpacePoint::real(0.01, 0.01)).unwrap();
        assert!((v - 1.925_909_482_348_643_8).abs() < 1e-12);
        assert!((v - direct).abs() < 1e-12);
        let ladder = [
            (3, 1.435_548_701_849_034_8),
            (4, 1.820_263_479_301_893_7),
            (8, 3.317_469_437_678_931_8),
            (12, 4.710_683_684_311_168_9),
            (16, 6.097_410_528_199_400_2),
            (20, 7.483_731_919_461_998_5),
            (24, 8.870_027_969_965_692_1),
            (30, 10.949_469_622_511_34),
            (40, 14.415_205_527_069_122),
        ];
        for (j, expected) in ladder {
            let v = unbounded_certificate_superattracting(2, 2, 0.01f64, 2f64.powi(-j), 60).unwrap();
            assert!((v - expected).abs() < 1e-12, "2^-{j}: {v} vs {expected}");
        }
        let v = unbounded_certificate_superattracting(3, 2, 0.05f64, 2f64.powi(-25), 60).unwrap();
        assert!((v - 7.220_577_585_055_271_5).abs() < 1e-12);
    }

    #[test]
    fn certificate_in_single_precision() {
        let v = unbounded_certificate_superattracting(2, 2, 0.01f32, 2f32.powi(-8), 60).unwrap();
        assert!((v - 3.317_469_4).abs() < 1e-4);
    }

    #[test]
    fn superattracting_terms_grow_in_both_cases() {
        let terms = superattracting_terms(2, 2, 0.01f64, 2f64.powi(-10), 60).unwrap();
        // past the crossover the second coordinate drives the growth in k
        let cross = terms.iter().position(|t| t[1] > t[0]).unwrap();
        for w in terms[cross..].windows(2) {
            assert!(w[1][1] >= w[0][1]);
        }
        for k in [0usize, 3, 7] {
            let crossover = 1.0 - 0.01f64.powf(1.0 / 2f64.powi(k as i32));
            let mut prev = 0.0;
            for j in (3..=40).filter(|&j| 2f64.powi(-j) < crossover) {
                let t = superattracting_terms(2, 2, 0.01f64, 2f64.powi(-j), k).unwrap()[k][0];
                assert!(t >= prev);
                prev = t;
            }
        }
    }

    #[test]
    fn mixed_certificate_oracles() {
        let q = geometric();
        let v = unbounded_certificate_mixed(&q, 2, 0.01f64, 1e-6, 60).unwrap();
        assert!((v - 0.093_451_711_453_152_947).abs() < 1e-12);
        let v = unbounded_certificate_mixed(&q, 2, 0.01f64, 1.0 - 0.01, 60);
        assert!(v.is_err());
        let v = projection_certificate(2, 0.6f64, 0.4, 0).unwrap();
        assert!(v.abs() < 1e-12);
        for (j, expected) in [(3, 2.708_050_201_102_210_1), (7, 5.541_263_545_158_426_1), (40, 28.419_034_402_957_303)] {
            let v = unbounded_certificate_mixed(&q, 2, 0.0f64, 2f64.powi(-j), 60).unwrap();
            assert!((v - expected).abs() < 1e-12);
        }
        let sq = Polynomial::<f64>::monomial(2).unwrap();
        assert!(unbounded_certificate_mixed(&sq, 2, 0.0, 0.1, 60).is_err());
    }
}
