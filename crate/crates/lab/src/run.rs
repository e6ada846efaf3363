//! Scenario execution: one runner per regime.
//!
//! Every runner fills probes, ladders, checks and cross-checks; the verdict
//! rule then reads the probes. Runs are deterministic for a fixed seed.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use shadowlab_core::basin::{
    connectivity_report, extract_immediate_basin, extract_parabolic_basin, extract_slice, forward_invariance_fraction,
    space_membership, Membership, MembershipParams,
};
use shadowlab_core::dynsys::HierarchyFlags;
use shadowlab_core::hypmetric::{disk_distance, punctured_lower_bound_moduli, GeodesicField};
use shadowlab_core::lamination::{
    limit_graph, transport_quadratic, transport_sqrt, verify_region_lemmas, w_shrinkage_report, write_leaf_csv,
    GraphFamily, SampleDisk, SheetProduct,
};
use shadowlab_core::shadow::{
    boundedness_scan, build_tree_1d, build_tree_2d, projection_certificate, superattracting_terms,
    unbounded_certificate_mixed, unbounded_certificate_superattracting, PreimageTree, ScanConfig,
};
use shadowlab_core::{
    CertificateKind, DistanceBound, GridBox, GridDomain, Polynomial, ProductMap, SkewMap, SpacePoint, C64,
};

use crate::error::{LabError, StageExt};
use crate::report::{Artifacts, Check, CrossCheck, LadderRecord, ProbeRecord, Report, ARTIFACT};
use crate::scenario::{cx, GridSpec, LeafSpec, Regime, Scenario};
use crate::svg::{self, Frame};
use crate::verdict::{best_certified, decide, stabilization};

/// Start value of transported graphs, `w = 2/3`.
const START: f64 = 2.0 / 3.0;
/// Outer radius over the largest sampled `|h|`.
const RADIUS_MARGIN: f64 = 1.25;
/// A point is resolvable on a raster when it lies this many cell diagonals inside.
const RESOLVABLE_CELLS: f64 = 3.0;
/// Box half-width used when sampling `w` for basin points.
const W_SAMPLE_RADIUS: f64 = 1.6;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub accept_heuristic_parabolic: bool,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub report: Report,
    pub artifacts: Artifacts,
}

struct Run {
    s: Scenario,
    probes: Vec<ProbeRecord>,
    ladders: Vec<LadderRecord>,
    checks: Vec<Check>,
    cross: Vec<CrossCheck>,
    notes: Vec<String>,
    c_hat: Vec<f64>,
    stabilization: Option<f64>,
    heuristic: bool,
    localized: Option<String>,
    artifacts: Artifacts,
    clock: Instant,
}

impl Run {
    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        self.artifacts.timing.push((stage.into(), (now - self.clock).as_secs_f64()));
        self.clock = now;
    }

    fn check(&mut self, name: impl Into<String>, passed: bool, value: f64, detail: impl Into<String>) {
        self.checks.push(Check::new(name, passed, value, detail));
    }

    fn ladder(&mut self, name: &str, parameter: &str, points: Vec<[f64; 2]>) {
        self.ladders.push(LadderRecord { name: name.into(), parameter: parameter.into(), points });
    }

    fn grid(&self) -> GridSpec {
        self.s.grid.expect("validated")
    }

    fn leaf(&self) -> LeafSpec {
        self.s.leaf.clone().expect("validated")
    }

    /// One check per threshold: the first ladder rung whose value exceeds it.
    fn threshold_checks(&mut self, points: &[[f64; 2]], parameter: &str) {
        for t in self.s.thresholds.clone() {
            let hit = points.iter().find(|p| p[1] > t);
            let detail = hit.map_or_else(|| "never exceeded".to_string(), |p| format!("first at {parameter} = {}", p[0]));
            self.check(format!("exceeds_{t}"), hit.is_some(), hit.map_or(f64::NAN, |p| p[0]), detail);
        }
    }
}

pub fn run(scenario: &Scenario, options: &RunOptions) -> Result<RunOutput, LabError> {
    let mut s = scenario.clone();
    if let Some(seed) = options.seed {
        s.seed = seed;
    }
    let regime = s.validate()?;
    let mut run = Run {
        s,
        probes: Vec::new(),
        ladders: Vec::new(),
        checks: Vec::new(),
        cross: Vec::new(),
        notes: Vec::new(),
        c_hat: Vec::new(),
        stabilization: None,
        heuristic: false,
        localized: None,
        artifacts: Artifacts::default(),
        clock: Instant::now(),
    };
    match regime {
        Regime::SuperattractingProduct { m1, m2 } => superattracting_product(&mut run, m1, m2)?,
        Regime::GeometricProduct => geometric_product(&mut run)?,
        Regime::SuperattractingMixed { m, parabolic } => superattracting_mixed(&mut run, m, parabolic)?,
        Regime::LeafSquare => leaf_square(&mut run)?,
        Regime::LeafGeneral => leaf_general(&mut run)?,
        Regime::LeafQuadratic => leaf_quadratic(&mut run)?,
    }
    let (mut verdict, mut reason) = decide(
        &run.probes,
        &run.s.thresholds,
        run.stabilization,
        run.heuristic,
        options.accept_heuristic_parabolic,
    );
    if verdict == crate::report::Verdict::Inconclusive {
        if let Some(why) = &run.localized {
            reason = why.clone();
        }
    }
    if run.cross.iter().any(|c| !c.passed) {
        verdict = crate::report::Verdict::Inconclusive;
        reason = "a certified lower bound exceeds a grid upper bound for the same pair".into();
    }
    let best = best_certified(&run.probes).map(|(v, _)| v);
    let report = Report {
        artifact: ARTIFACT.into(),
        regime: regime.as_str().into(),
        heuristic: run.heuristic,
        verdict,
        verdict_reason: reason,
        best_certified_lower: best,
        c_hat: run.c_hat,
        probes: run.probes,
        ladders: run.ladders,
        checks: run.checks,
        cross_checks: run.cross,
        notes: run.notes,
        scenario: run.s,
    };
    Ok(RunOutput { report, artifacts: run.artifacts })
}

fn argmin(values: impl Iterator<Item = f64>) -> (usize, f64) {
    values.enumerate().fold((0, f64::INFINITY), |best, (i, v)| if v < best.1 { (i, v) } else { best })
}

fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn uniform_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    C64::from_polar(radius * rng.random::<f64>().sqrt(), rng.random_range(0.0..std::f64::consts::TAU))
}

/// Smallest multiple of 0.1 strictly above `x`.
fn round_up_tenth(x: f64) -> f64 {
    let r = (x * 10.0).ceil() / 10.0;
    if r > x { r } else { r + 0.1 }
}

fn unit_disk(grid: GridSpec) -> Result<GridDomain, LabError> {
    Ok(GridDomain::from_predicate(GridBox::square(grid.half_width), grid.resolution, |z| z.norm() < 1.0)
        .stage("grid")?
        .with_boundary_distance())
}

/// `{0 < |ζ| < r}` rasterized; cells within one cell width of the origin form the puncture.
fn punctured_disk(r: f64, resolution: usize) -> Result<GridDomain, LabError> {
    let bbox = GridBox::square(r * 1.02);
    let h = 2.0 * r * 1.02 / resolution as f64;
    Ok(GridDomain::from_predicate(bbox, resolution, |z| z.norm() < r && z.norm() > h)
        .stage("grid")?
        .with_boundary_distance())
}

fn resolvable(grid: &GridDomain, z: C64) -> bool {
    grid.boundary_dist_at(z).is_some_and(|d| d >= RESOLVABLE_CELLS * grid.cell_diagonal())
}

/// Certified lower bound for the pair `(source, target)`.
struct Pair {
    source: C64,
    target: C64,
    lower: f64,
    label: String,
}

/// Sets each resolvable pair's lower bound against the grid upper bound plus one cell of slack.
fn cross_check(grid: &GridDomain, pairs: Vec<Pair>) -> Result<(Vec<CrossCheck>, usize), LabError> {
    let total = pairs.len();
    let pairs: Vec<Pair> =
        pairs.into_iter().filter(|p| resolvable(grid, p.source) && resolvable(grid, p.target)).collect();
    let mut sources: Vec<C64> = Vec::new();
    for p in &pairs {
        if !sources.contains(&p.source) {
            sources.push(p.source);
        }
    }
    let simply = connectivity_report(grid).hole_count == 0;
    let per_source: Vec<shadowlab_core::Result<Vec<CrossCheck>>> = sources
        .par_iter()
        .map(|&src| {
            let field = GeodesicField::with_topology(grid, src, simply)?;
            pairs
                .iter()
                .filter(|p| p.source == src)
                .map(|p| {
                    let upper = field.bound_to(p.target)?.upper;
                    Ok(CrossCheck::new(p.label.clone(), p.lower, upper, field.cell_slack(p.target)?))
                })
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    for r in per_source {
        out.extend(r.stage("cross_check")?);
    }
    Ok((out, total - pairs.len()))
}

fn record_cross(run: &mut Run, what: &str, result: (Vec<CrossCheck>, usize)) {
    let (checks, skipped) = result;
    let failed = checks.iter().filter(|c| !c.passed).count();
    run.notes.push(format!(
        "cross-check {what}: {} pairs compared, {failed} violations, {skipped} pairs too close to the raster boundary",
        checks.len()
    ));
    run.cross.extend(checks);
}

// ---------------------------------------------------------------- products

fn superattracting_product(run: &mut Run, m1: usize, m2: usize) -> Result<(), LabError> {
    let eps = run.s.target.z[0];
    let kmax = run.s.tree.depth;
    let ladder = run.s.probes.delta_ladder.expect("validated");
    let mut points = Vec::new();
    let mut all_terms = Vec::new();
    for j in ladder.first..=ladder.last {
        let delta = ladder.base.powi(-j);
        let terms = superattracting_terms(m1, m2, eps, delta, kmax).stage("certificate")?;
        let cert = unbounded_certificate_superattracting(m1, m2, eps, delta, kmax).stage("certificate")?;
        let (depth, _) = argmin(terms.iter().map(|t| t[0].max(t[1])));
        run.probes.push(ProbeRecord::new(
            format!("delta={}^-{j}", ladder.base),
            SpacePoint::real(1.0 - delta, delta),
            Some(delta),
            depth,
            DistanceBound::exact(cert),
        ));
        points.push([j as f64, cert]);
        all_terms.push((delta, terms));
    }
    run.threshold_checks(&points, "j");
    run.ladder("certificate", "j", points.clone());

    // growth in k past the crossover, at every fixed delta
    let mut case1 = true;
    let mut case1_min = f64::INFINITY;
    for (_, terms) in &all_terms {
        let cross = terms.iter().position(|t| t[1] > t[0]).unwrap_or(terms.len());
        case1 &= terms[cross..].windows(2).all(|w| w[1][1] >= w[0][1]);
        case1_min = case1_min.min(terms[kmax][1]);
    }
    run.check(
        "case1_growth_in_k",
        case1,
        case1_min,
        format!("second-coordinate term nondecreasing in k past the crossover for every delta; smallest term at k = {kmax} shown"),
    );
    // growth as delta -> 0, at every fixed k
    let mut case2 = true;
    for k in 0..=kmax {
        let root = eps.powf(1.0 / (m1 as f64).powi(k as i32));
        let mut prev = 0.0;
        for (delta, terms) in all_terms.iter().filter(|(d, _)| 1.0 - d > root) {
            let _ = delta;
            case2 &= terms[k][0] >= prev;
            prev = terms[k][0];
        }
    }
    let last = &all_terms.last().expect("nonempty ladder").1;
    run.check(
        "case2_growth_in_delta",
        case2,
        last[0][0],
        "first-coordinate term nondecreasing as delta decreases past the crossover, for every k; the k = 0 term at the smallest delta shown",
    );
    run.lap("certificate");

    if let Some(g) = run.s.grid {
        let disk = unit_disk(g)?;
        let mut pairs = Vec::new();
        for (delta, terms) in &all_terms {
            for (k, t) in terms.iter().enumerate() {
                let r1 = eps.powf(1.0 / (m1 as f64).powi(k as i32));
                let r2 = eps.powf(1.0 / (m2 as f64).powi(k as i32));
                let label = format!("delta={delta:e},k={k}");
                pairs.push(Pair { source: c64(r1, 0.0), target: c64(1.0 - delta, 0.0), lower: t[0], label: format!("{label},z") });
                pairs.push(Pair { source: c64(r2, 0.0), target: c64(*delta, 0.0), lower: t[1], label: format!("{label},w") });
            }
        }
        let result = cross_check(&disk, pairs)?;
        record_cross(run, "polydisc terms on the unit-disk raster", result);
        run.lap("cross_check");
    }
    let chart = svg::ladder_chart(&[("certificate", &points)], &run.s.thresholds, "j (delta = 2^-j)");
    run.artifacts.plots.push(("certificates.svg".into(), svg::document(&run.s.name, &chart)));
    Ok(())
}

fn basin_checks(run: &mut Run, name: &str, grid: &GridDomain, p: &Polynomial<f64>) {
    if let Some(stats) = grid.stats() {
        let u = stats.undecided_fraction();
        run.check(format!("basin_{name}_undecided"), u < 0.01, u, "fraction of undecided cells");
    }
    let inv = forward_invariance_fraction(grid, |z| p.evaluate(z));
    run.check(format!("basin_{name}_forward_invariance"), inv >= 0.99, inv, "member cells mapped into the member set");
    let conn = connectivity_report(grid);
    run.check(
        format!("basin_{name}_simply_connected"),
        conn.simply_connected(),
        conn.hole_count as f64,
        format!("{} components, {} holes", conn.component_count, conn.hole_count),
    );
}

fn tree_layers(tree: &PreimageTree<C64>) -> Vec<Vec<C64>> {
    (0..=tree.max_depth()).map(|k| tree.at_depth(k).iter().map(|n| n.point).collect()).collect()
}

/// `½ ln(δ_lo(a) / δ_up(b))` from a raster: boundary distance minus (plus) one cell diagonal.
fn ratio_lower(grid: &GridDomain, a: C64, b_upper: f64) -> f64 {
    let Some(da) = grid.boundary_dist_at(a) else { return 0.0 };
    let lo = da - grid.cell_diagonal();
    if lo <= 0.0 || b_upper <= 0.0 {
        return 0.0;
    }
    (0.5 * (lo / b_upper).ln()).max(0.0)
}

fn delta_upper(grid: &GridDomain, z: C64) -> f64 {
    grid.boundary_dist_at(z).map_or(f64::INFINITY, |d| d + grid.cell_diagonal())
}

/// Two-sided Koebe ratio bound `½ |ln(δ(a)/δ(b))|` from a raster.
fn ratio_pair_lower(grid: &GridDomain, a: C64, b: C64) -> f64 {
    ratio_lower(grid, a, delta_upper(grid, b)).max(ratio_lower(grid, b, delta_upper(grid, a)))
}

fn geometric_product(run: &mut Run) -> Result<(), LabError> {
    let map: ProductMap<f64> = run.s.map.product_map()?;
    let g = run.grid();
    let bbox = GridBox::square(g.half_width);
    let gp = extract_immediate_basin(map.p(), bbox, g.resolution).stage("basin")?;
    let same = map.p() == map.q();
    let gq = if same { gp.clone() } else { extract_immediate_basin(map.q(), bbox, g.resolution).stage("basin")? };
    run.lap("basin");
    basin_checks(run, "p", &gp, map.p());
    if !same {
        basin_checks(run, "q", &gq, map.q());
    }

    let (depth, extra) = (run.s.tree.depth, run.s.tree.extra_depth);
    let config = ScanConfig {
        depth: depth + extra,
        probe_count: run.s.probes.stratified.expect("validated"),
        seed: run.s.seed,
    };
    let scan = boundedness_scan(&map, &gp, &gq, &config).stage("scan")?;
    run.lap("scan");
    run.c_hat = scan.per_depth.clone();
    run.stabilization = stabilization(&run.c_hat, depth, extra);
    let (ck, ce) = (run.c_hat[depth], run.c_hat[depth + extra]);
    run.check("c_hat_finite", ck.is_finite(), ck, format!("C_hat at depth {depth}"));
    run.check(
        "c_hat_nonincreasing",
        ck - ce >= 0.0,
        ck - ce,
        format!("C_hat({depth}) - C_hat({})", depth + extra),
    );
    let rel = run.stabilization.unwrap_or(f64::INFINITY);
    run.check(
        "stabilization",
        rel <= crate::verdict::STABILIZATION_TOL,
        rel,
        format!("|C_hat({}) - C_hat({depth})| / C_hat({depth})", depth + extra),
    );
    let c_points: Vec<[f64; 2]> = run.c_hat.iter().enumerate().map(|(k, c)| [k as f64, *c]).collect();
    run.ladder("c_hat", "depth", c_points.clone());
    run.notes.push(format!(
        "trees: {} nodes in P, {} in Q, pruned to the rasterized basins",
        scan.p_tree_size, scan.q_tree_size
    ));
    for (i, ps) in scan.probes.iter().enumerate() {
        run.probes.push(ProbeRecord::new(format!("stratified-{i}"), ps.probe, Some(ps.boundary_dist), ps.best_depth, ps.bound()));
    }

    // Koebe ratio bounds against the grid geodesic from the fixed point
    let origin = c64(0.0, 0.0);
    let pairs_z: Vec<Pair> = scan
        .probes
        .iter()
        .enumerate()
        .map(|(i, ps)| Pair { source: origin, target: ps.probe.z, lower: ratio_pair_lower(&gp, ps.probe.z, origin), label: format!("stratified-{i},z") })
        .collect();
    let pairs_w: Vec<Pair> = scan
        .probes
        .iter()
        .enumerate()
        .map(|(i, ps)| Pair { source: origin, target: ps.probe.w, lower: ratio_pair_lower(&gq, ps.probe.w, origin), label: format!("stratified-{i},w") })
        .collect();
    let rz = cross_check(&gp, pairs_z)?;
    record_cross(run, "Koebe ratio bounds in the P-basin", rz);
    let rw = cross_check(&gq, pairs_w)?;
    record_cross(run, "Koebe ratio bounds in the Q-basin", rw);
    run.lap("cross_check");

    let tree = build_tree_1d(map.p(), origin, depth, &gp).stage("tree")?;
    let frame = Frame::new(bbox);
    let probes_z: Vec<C64> = scan.probes.iter().map(|p| p.probe.z).collect();
    let body = svg::heatmap(&gp) + &svg::depth_layers(frame, &tree_layers(&tree)) + &svg::markers(frame, &probes_z, "black");
    run.artifacts.plots.push(("basin_p.svg".into(), svg::document(&format!("{}: P-basin and tree", run.s.name), &body)));
    let chart = svg::ladder_chart(&[("C_hat", &c_points)], &[], "tree depth");
    run.artifacts.plots.push(("c_hat.svg".into(), svg::document(&run.s.name, &chart)));
    run.artifacts.grids.push(("basin_p".into(), gp));
    if !same {
        run.artifacts.grids.push(("basin_q".into(), gq));
    }
    Ok(())
}

fn superattracting_mixed(run: &mut Run, m: usize, parabolic: bool) -> Result<(), LabError> {
    let map = run.s.map.product_map()?;
    let g = run.grid();
    let bbox = GridBox::square(g.half_width);
    let gq = if parabolic {
        extract_parabolic_basin(map.q(), bbox, g.resolution)
    } else {
        extract_immediate_basin(map.q(), bbox, g.resolution)
    }
    .stage("basin")?;
    run.lap("basin");
    run.heuristic = gq.is_heuristic();
    let eps = run.s.target.z[0];
    let w0 = cx(run.s.target.w);
    let in_basin = gq.is_member_point(w0);
    let wdist = gq.boundary_dist_at(w0).unwrap_or(0.0);
    run.check("target_in_q_basin", in_basin, wdist, "boundary distance of the target's second coordinate");
    if !in_basin {
        return Err(LabError::Validation("target w lies outside the immediate basin of Q".into()));
    }
    if parabolic {
        run.notes.push("parabolic basin membership is heuristic (slow convergence, finite iteration budget)".into());
    }

    let kmax = run.s.tree.depth;
    let ladder = run.s.probes.delta_ladder.expect("validated");
    let mut points = Vec::new();
    let mut pairs = Vec::new();
    for j in ladder.first..=ladder.last {
        let delta = ladder.base.powi(-j);
        let cert = if parabolic {
            projection_certificate(m, eps, delta, kmax)
        } else {
            unbounded_certificate_mixed(map.q(), m, eps, delta, kmax)
        }
        .stage("certificate")?;
        let depth = if eps == 0.0 {
            0
        } else {
            let terms = superattracting_terms(m, m, eps, delta, kmax).stage("certificate")?;
            argmin(terms.iter().map(|t| t[0])).0
        };
        let bound = DistanceBound::lower_only(cert, CertificateKind::Projection);
        run.probes.push(ProbeRecord::new(
            format!("delta={}^-{j}", ladder.base),
            SpacePoint::new(c64(1.0 - delta, 0.0), w0),
            Some(delta.min(wdist)),
            depth,
            bound,
        ));
        points.push([j as f64, cert]);
        let root = if eps == 0.0 { 0.0 } else { eps.powf(1.0 / (m as f64).powi(depth as i32)) };
        pairs.push(Pair {
            source: c64(root, 0.0),
            target: c64(1.0 - delta, 0.0),
            lower: cert,
            label: format!("delta={delta:e}"),
        });
    }
    run.threshold_checks(&points, "j");
    run.ladder("certificate", "j", points.clone());
    if eps == 0.0 && !parabolic {
        let diag: Vec<[f64; 2]> = (ladder.first..=ladder.last)
            .map(|j| Ok([j as f64, unbounded_certificate_mixed(map.q(), m, 0.01, ladder.base.powi(-j), kmax)?]))
            .collect::<shadowlab_core::Result<_>>()
            .stage("certificate")?;
        let top = diag.iter().map(|p| p[1]).fold(0.0, f64::max);
        run.notes.push(format!(
            "diagnostic: against the backward orbit of (0.01, 0) the minimum over k stays below {top:.4} on the whole ladder"
        ));
        run.ladder("diagnostic_eps_0.01", "j", diag);
    }
    run.lap("certificate");

    let disk = unit_disk(GridSpec { half_width: 1.05, resolution: g.resolution })?;
    let result = cross_check(&disk, pairs)?;
    record_cross(run, "first-coordinate projections on the unit-disk raster", result);
    run.lap("cross_check");

    let frame = Frame::new(bbox);
    let body = svg::heatmap(&gq) + &svg::markers(frame, &[w0], "red");
    run.artifacts.plots.push(("basin_q.svg".into(), svg::document(&format!("{}: Q-basin", run.s.name), &body)));
    let chart = svg::ladder_chart(&[("certificate", &points)], &run.s.thresholds, "j (delta = 2^-j)");
    run.artifacts.plots.push(("certificates.svg".into(), svg::document(&run.s.name, &chart)));
    run.artifacts.grids.push(("basin_q".into(), gq));
    Ok(())
}

// ---------------------------------------------------------------- skew products

fn basin_keep(map: &SkewMap<f64>) -> impl Fn(&SpacePoint<f64>) -> bool + Sync + '_ {
    let params = MembershipParams::default();
    move |x| space_membership(map, *x, &params) == Membership::Converges
}

/// Basin points `(z, w)` with `z` drawn by `draw_z` and `|w| < 1.6`.
fn sample_basin(
    map: &SkewMap<f64>,
    count: usize,
    seed: u64,
    mut draw_z: impl FnMut(&mut ChaCha8Rng) -> C64,
) -> Vec<SpacePoint<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = basin_keep(map);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count * 50 {
        let x = SpacePoint::new(draw_z(&mut rng), uniform_disk(&mut rng, W_SAMPLE_RADIUS));
        if keep(&x) {
            out.push(x);
            if out.len() == count {
                break;
            }
        }
    }
    out
}

fn leaf_values(f: &GraphFamily, points: &[SpacePoint<f64>]) -> Result<Vec<C64>, LabError> {
    points.par_iter().map(|x| Ok(x.w - f.evaluate(x.z)?)).collect::<shadowlab_core::Result<Vec<_>>>().stage("leaf")
}

/// Outer radius `R`: configured, or sampled `max |h|` with a margin.
fn puncture_radius(run: &mut Run, leaf: &LeafSpec, moduli: impl Iterator<Item = f64>, what: &str) -> f64 {
    let (count, max_h, min_h) =
        moduli.fold((0usize, 0.0f64, f64::INFINITY), |(n, hi, lo), h| (n + 1, hi.max(h), lo.min(h)));
    let r = leaf.radius.unwrap_or_else(|| round_up_tenth(RADIUS_MARGIN * max_h));
    run.check(
        "puncture_radius",
        max_h < r && min_h > 0.0,
        max_h / r,
        format!("R = {r}; sampled |h| in [{min_h:.3e}, {max_h:.6}] over {count} {what}"),
    );
    r
}

fn growth_check(run: &mut Run, name: &str, points: &[[f64; 2]]) {
    let increasing = points.windows(2).all(|w| w[1][1] > w[0][1]);
    let last = points.last().map_or(f64::NAN, |p| p[1]);
    run.check(name, increasing, last, "strictly increasing as the probe approaches the leaf; last value shown");
}

/// Lower bound at a probe: the minimum over tree nodes of `max(projection, punctured)` per node.
fn min_over_nodes(per_node: impl Iterator<Item = (usize, f64, CertificateKind)>) -> Option<(usize, DistanceBound)> {
    per_node
        .fold(None, |best: Option<(usize, f64, CertificateKind)>, x| match best {
            Some(b) if b.1 <= x.1 => Some(b),
            _ => Some(x),
        })
        .map(|(d, v, k)| (d, DistanceBound::lower_only(v, k)))
}

fn larger(a: (f64, CertificateKind), b: (f64, CertificateKind)) -> (f64, CertificateKind) {
    if b.0 > a.0 { b } else { a }
}

fn leaf_square(run: &mut Run) -> Result<(), LabError> {
    let map = run.s.map.skew_map()?;
    let a = match &run.s.map {
        crate::scenario::MapSpec::SkewSquare { a } => cx(*a),
        _ => unreachable!("validated"),
    };
    let leaf = run.leaf();
    let seed = run.s.seed;

    let lemmas = verify_region_lemmas(a, c64(0.0, 0.0), c64(0.0, 0.0), leaf.lemma_samples, seed);
    let bidisc = &lemmas.checks[0];
    run.check(bidisc.name, bidisc.passed, bidisc.worst_margin, format!("{} samples of {{|z|<1, |w|<3/4}}", bidisc.samples));
    run.lap("lemmas");

    let disk = SampleDisk::new(leaf.sample_radius, leaf.rays, leaf.radii).stage("transport")?;
    let mut f = GraphFamily::constant(c64(START, 0.0), disk);
    for _ in 0..leaf.generations {
        f = transport_sqrt(&f, a).stage("transport")?;
    }
    run.lap("transport");
    let min_mod = (0..=f.generation()).map(|g| f.min_modulus(g)).fold(f64::INFINITY, f64::min);
    run.check("min_modulus", min_mod >= START - 1e-9, min_mod, format!("min |f_n| over {} generations", leaf.generations));
    let origin: Vec<[f64; 2]> = (0..=f.generation()).map(|g| [g as f64, f.values(g)[0].re]).collect();
    let f0 = f.current()[0];
    run.check("origin_value", (f0 - 1.0).norm() <= 1e-6, (f0 - 1.0).norm(), format!("|f_{}(0) - 1|", leaf.generations));
    run.ladder("f_at_origin", "generation", origin);
    match limit_graph(&f, 1e-6) {
        Ok(lim) => {
            let mv = *lim.movements.last().unwrap();
            run.check("limit_convergence", true, mv, "sup movement of the last generation");
        }
        Err(e) => run.check("limit_convergence", false, f64::NAN, e.to_string()),
    }
    let limit_origin = f.origin_fixed_point();

    let target = run.s.target.point();
    let tree = build_tree_2d(&map, target, run.s.tree.depth, basin_keep(&map)).stage("tree")?;
    let nodes: Vec<SpacePoint<f64>> = tree.nodes().iter().map(|n| n.point).collect();
    let node_h = leaf_values(&f, &nodes)?;
    run.lap("tree");

    let radius = leaf.sample_radius;
    let samples = sample_basin(&map, leaf.radius_samples, seed ^ 0x5eed, |rng| uniform_disk(rng, radius));
    let sample_h = leaf_values(&f, &samples)?;
    let r = puncture_radius(
        run,
        &leaf,
        sample_h.iter().chain(&node_h).map(|h| h.norm()),
        "basin samples and tree nodes",
    );

    // approach to the leaf over z = 0, where h(0, f(0) - δ) = -δ
    let reference = leaf.reference_modulus.unwrap_or_else(|| (target.w - limit_origin).norm());
    let approach: Vec<[f64; 2]> = run
        .s
        .probes
        .leaf_deltas
        .iter()
        .map(|&d| Ok([d, punctured_lower_bound_moduli(d, reference, r)?]))
        .collect::<shadowlab_core::Result<_>>()
        .stage("leaf")?;
    growth_check(run, "leaf_certificate_growth", &approach);
    run.ladder("leaf_approach", "delta", approach);
    run.notes.push(format!(
        "leaf through ({}, {}) over z = 0; reference |h| = {reference}; R = {r}",
        limit_origin.re, limit_origin.im
    ));
    run.lap("leaf");

    let ladder = run.s.probes.delta_ladder.expect("validated");
    let mut points = Vec::new();
    let mut probe_h = Vec::new();
    for j in ladder.first..=ladder.last {
        let delta = ladder.base.powi(-j);
        let zp = c64(1.0 - delta, 0.0);
        let hp = -f.evaluate(zp).stage("leaf")?;
        let per_node = tree.nodes().iter().zip(&node_h).map(|(n, h)| {
            let proj = disk_distance(zp, n.point.z).unwrap_or(0.0);
            let punct = punctured_lower_bound_moduli(hp.norm(), h.norm(), r).unwrap_or(0.0);
            let (v, k) = larger((proj, CertificateKind::Projection), (punct, CertificateKind::PuncturedDisk));
            (n.depth, v, k)
        });
        let (depth, bound) = min_over_nodes(per_node).expect("tree has a root");
        run.probes.push(ProbeRecord::new(
            format!("delta={}^-{j}", ladder.base),
            SpacePoint::new(zp, c64(0.0, 0.0)),
            Some(delta),
            depth,
            bound,
        ));
        points.push([j as f64, bound.lower]);
        probe_h.push(hp);
    }
    run.threshold_checks(&points, "j");
    run.ladder("certificate", "j", points.clone());
    run.notes.push(format!(
        "probe bounds are minima over the {} tree nodes up to depth {}",
        tree.len(),
        run.s.tree.depth
    ));
    run.lap("certificate");

    // projections on the unit disk, from nodes up to depth 3
    let g = run.grid();
    let disk_grid = unit_disk(g)?;
    let mut pairs = Vec::new();
    for n in tree.nodes().iter().filter(|n| n.depth <= 3) {
        for (p, j) in run.probes.iter().zip(ladder.first..) {
            let zp = c64(p.probe[0], p.probe[1]);
            pairs.push(Pair {
                source: n.point.z,
                target: zp,
                lower: disk_distance(zp, n.point.z).unwrap_or(0.0),
                label: format!("j={j},node-depth={}", n.depth),
            });
        }
    }
    let res = cross_check(&disk_grid, pairs)?;
    record_cross(run, "projections on the unit-disk raster", res);
    let punct_grid = punctured_disk(r, g.resolution)?;
    let stride = (node_h.len() / 200).max(1);
    let mut pairs = Vec::new();
    for (hp, j) in probe_h.iter().zip(ladder.first..).take(6) {
        for (i, h) in node_h.iter().enumerate().step_by(stride) {
            pairs.push(Pair {
                source: *hp,
                target: *h,
                lower: punctured_lower_bound_moduli(hp.norm(), h.norm(), r).unwrap_or(0.0),
                label: format!("j={j},node={i}"),
            });
        }
    }
    let res = cross_check(&punct_grid, pairs)?;
    record_cross(run, "punctured-disk bounds on the punctured raster", res);
    run.lap("cross_check");

    let mut csv = Vec::new();
    write_leaf_csv(&[&f], &[0, 1, leaf.generations], &mut csv)?;
    run.artifacts.files.push(("leaves.csv".into(), String::from_utf8(csv).expect("ascii")));
    leaf_plot(run, &[&f], "lamination.svg");
    let chart = svg::ladder_chart(&[("certificate", &points)], &run.s.thresholds, "j (delta = 2^-j)");
    run.artifacts.plots.push(("certificates.svg".into(), svg::document(&run.s.name, &chart)));
    Ok(())
}

/// Images of the outermost sample circle under each family's last generation.
fn leaf_plot(run: &mut Run, families: &[&GraphFamily], name: &str) {
    let frame = Frame::new(GridBox::square(1.3));
    let curves: Vec<Vec<C64>> = families
        .iter()
        .map(|f| {
            let radii = f.disk().radii.len();
            f.current().iter().skip(1).skip(radii - 1).step_by(radii).copied().collect()
        })
        .collect();
    let unit: Vec<C64> = (0..256).map(|i| C64::from_polar(1.0, i as f64 / 256.0 * std::f64::consts::TAU)).collect();
    let body = svg::curves(frame, &[unit], "unit-circle") + &svg::curves(frame, &curves, "leaves");
    run.artifacts.plots.push((name.into(), svg::document(&format!("{}: leaf graphs", run.s.name), &body)));
}

fn leaf_general(run: &mut Run) -> Result<(), LabError> {
    let map = run.s.map.skew_map()?;
    let a = match &run.s.map {
        crate::scenario::MapSpec::SkewSquare { a } => cx(*a),
        _ => unreachable!("validated"),
    };
    let leaf = run.leaf();
    let sheets_spec = leaf.sheets.expect("validated");
    let seed = run.s.seed;

    let lemmas = verify_region_lemmas(a, c64(0.0, 0.0), c64(0.0, 0.0), leaf.lemma_samples, seed);
    let bidisc = &lemmas.checks[0];
    run.check(
        bidisc.name,
        bidisc.passed,
        bidisc.worst_margin,
        format!("{} samples; needs |a| < 3/16, so certificates are localized", bidisc.samples),
    );
    let disk = SampleDisk::new(leaf.sample_radius, leaf.rays, leaf.radii).stage("transport")?;
    let mut f = GraphFamily::constant(c64(START, 0.0), disk);
    let mut failure = None;
    for g in 0..leaf.generations {
        match transport_sqrt(&f, a) {
            Ok(next) => f = next,
            Err(e) => {
                failure = Some(format!("generation {}: {e}", g + 1));
                break;
            }
        }
    }
    let min_mod = (0..=f.generation()).map(|g| f.min_modulus(g)).fold(f64::INFINITY, f64::min);
    run.check(
        "full_disk_transport",
        failure.is_none() && min_mod >= START - 1e-9,
        min_mod,
        failure.unwrap_or_else(|| format!("min |f_n| on |z| <= {} over {} generations", leaf.sample_radius, f.generation())),
    );
    run.lap("transport");

    let sheets = SheetProduct::new(a, sheets_spec.eta, sheets_spec.inner_generations, sheets_spec.generation).stage("sheets")?;
    let r_loc = sheets.domain_radius();
    run.notes.push(format!(
        "sheet product of {} sheets valid on |z| < {r_loc:.6} (eta = {})",
        sheets.sheet_count(),
        sheets_spec.eta
    ));
    let tree = build_tree_2d(&map, run.s.target.point(), run.s.tree.depth, basin_keep(&map)).stage("tree")?;
    let local: Vec<(usize, SpacePoint<f64>)> =
        tree.nodes().iter().filter(|n| sheets.in_domain(n.point.z)).map(|n| (n.depth, n.point)).collect();
    let h_of = |x: &SpacePoint<f64>| sheets.h_hat(*x);
    let node_h: Vec<C64> =
        local.par_iter().map(|(_, x)| h_of(x)).collect::<shadowlab_core::Result<_>>().stage("sheets")?;
    let samples = sample_basin(&map, leaf.radius_samples, seed ^ 0x5eed, |rng| uniform_disk(rng, r_loc));
    let sample_h: Vec<C64> = samples.par_iter().map(h_of).collect::<shadowlab_core::Result<_>>().stage("sheets")?;
    let r = puncture_radius(run, &leaf, sample_h.iter().chain(&node_h).map(|h| h.norm()), "localized samples and nodes");
    run.lap("sheets");

    let reference_point = SpacePoint::new(c64(0.0, 0.0), c64(1.0 - leaf.reference_modulus.unwrap_or(0.3), 0.0));
    let h_ref = sheets.h_hat(reference_point).stage("sheets")?.norm();
    let deltas = run.s.probes.leaf_deltas.clone();
    let approach: Vec<[f64; 2]> = deltas
        .iter()
        .map(|&d| Ok([d, punctured_lower_bound_moduli(sheets.origin_h_modulus(d), h_ref, r)?]))
        .collect::<shadowlab_core::Result<_>>()
        .stage("sheets")?;
    growth_check(run, "leaf_certificate_growth", &approach);
    run.ladder("localized_leaf_approach", "delta", approach);

    for &d in &deltas {
        let hp = sheets.origin_h_modulus(d);
        let per_node = local.iter().zip(&node_h).map(|((depth, _), h)| {
            (*depth, punctured_lower_bound_moduli(hp, h.norm(), r).unwrap_or(0.0), CertificateKind::PuncturedDisk)
        });
        if let Some((depth, bound)) = min_over_nodes(per_node) {
            let mut rec = ProbeRecord::new(
                format!("leaf delta={d:e}"),
                SpacePoint::new(c64(0.0, 0.0), c64(1.0 - d, 0.0)),
                Some(d),
                depth,
                bound,
            );
            rec.certified = false;
            run.probes.push(rec);
        }
    }
    run.notes.push(format!(
        "{} of {} tree nodes lie in the localized domain; probe bounds hold for the distance in the localized basin only",
        local.len(),
        tree.len()
    ));
    run.localized = Some(format!(
        "localized: the sheet-product certificate holds on |z| < {r_loc:.4} only, not on the whole basin"
    ));
    run.lap("certificate");

    let g = run.grid();
    let punct_grid = punctured_disk(r, g.resolution)?;
    let stride = (node_h.len() / 200).max(1);
    let h_ref_point = sheets.h_hat(reference_point).stage("sheets")?;
    let pairs: Vec<Pair> = node_h
        .iter()
        .enumerate()
        .step_by(stride)
        .map(|(i, h)| Pair {
            source: h_ref_point,
            target: *h,
            lower: punctured_lower_bound_moduli(h_ref, h.norm(), r).unwrap_or(0.0),
            label: format!("reference,node={i}"),
        })
        .collect();
    let res = cross_check(&punct_grid, pairs)?;
    record_cross(run, "sheet-product bounds on the punctured raster", res);
    run.lap("cross_check");
    leaf_plot(run, &[&f], "lamination.svg");
    Ok(())
}

/// `z_1 = start`, then the preimage with the largest real part (ties: largest imaginary part).
pub fn preimage_chain(p: &Polynomial<f64>, start: C64, n: usize) -> shadowlab_core::Result<Vec<C64>> {
    let mut chain = vec![start];
    while chain.len() < n {
        let pre = p.preimages_of_value(*chain.last().unwrap())?;
        let next = pre
            .into_iter()
            .reduce(|best, z| {
                if z.re > best.re + 1e-12 || ((z.re - best.re).abs() <= 1e-12 && z.im > best.im) { z } else { best }
            })
            .expect("degree >= 1");
        chain.push(next);
    }
    Ok(chain)
}

fn leaf_quadratic(run: &mut Run) -> Result<(), LabError> {
    let map = run.s.map.skew_map()?;
    let (a, b, c) = match &run.s.map {
        crate::scenario::MapSpec::SkewQuadratic { a, b, c } => (cx(*a), cx(*b), cx(*c)),
        _ => unreachable!("validated"),
    };
    let leaf = run.leaf();
    let seed = run.s.seed;
    let g = run.grid();

    let lemmas = verify_region_lemmas(a, b, c, leaf.lemma_samples, seed);
    for l in &lemmas.checks {
        run.check(l.name, l.passed, l.worst_margin, format!("{} samples, worst margin shown", l.samples));
    }
    let flags = HierarchyFlags::evaluate(a.norm(), b.norm(), c.norm());
    run.check(
        "parameter_hierarchy",
        flags.all(),
        f64::NAN,
        format!("a >= 10c: {}, a >= 10b: {}, c >= 10ab: {}", flags.a_over_c, flags.a_over_b, flags.c_over_ab),
    );
    run.lap("lemmas");

    let bbox = GridBox::square(g.half_width);
    let gp = extract_immediate_basin(map.p(), bbox, g.resolution).stage("basin")?;
    let reach = gp.max_member_modulus();
    run.check("basin_inside_radius_2", reach < 2.0, reach, "largest member modulus of the P-basin raster");
    run.lap("basin");

    // transport of every start angle, following the plus and the minus branch
    let thetas: Vec<f64> = (0..leaf.thetas).map(|i| i as f64 / leaf.thetas as f64 * std::f64::consts::TAU).collect();
    let disk = SampleDisk::new(leaf.sample_radius, leaf.rays, leaf.radii).stage("transport")?;
    let chains: Vec<shadowlab_core::Result<(GraphFamily, GraphFamily, f64)>> = thetas
        .par_iter()
        .map(|&t| {
            let start = GraphFamily::constant(C64::from_polar(START, t), disk.clone());
            let (mut plus, mut minus) = (start.clone(), start);
            let mut gap = f64::INFINITY;
            for _ in 0..leaf.generations {
                let (pp, pm) = transport_quadratic(&plus, a, b, c)?;
                let (mp, mm) = transport_quadratic(&minus, a, b, c)?;
                for (x, y) in [(&pp, &pm), (&mp, &mm)] {
                    let d = x.current().iter().zip(y.current()).map(|(u, v)| (u - v).norm()).fold(f64::INFINITY, f64::min);
                    gap = gap.min(d);
                }
                plus = pp;
                minus = mm;
            }
            Ok((plus, minus, gap))
        })
        .collect();
    let mut families = Vec::new();
    for r in chains {
        families.push(r.stage("transport")?);
    }
    run.lap("transport");
    let margin = families
        .iter()
        .flat_map(|(p, m, _)| (1..=p.generation()).map(move |g| p.min_margin(g).min(m.min_margin(g))))
        .fold(f64::INFINITY, f64::min);
    run.check(
        "no_discriminant_collapse",
        margin > shadowlab_core::lamination::MARGIN_TOL,
        margin,
        format!("{} start angles x {} generations, smallest discriminant margin", leaf.thetas, leaf.generations),
    );
    let gap = families.iter().map(|f| f.2).fold(f64::INFINITY, f64::min);
    run.check("branch_disjointness", gap > 0.0, gap, "smallest |f_plus - f_minus| between sibling graphs");
    let min_mod = families
        .iter()
        .flat_map(|(p, m, _)| (0..=p.generation()).map(move |g| p.min_modulus(g).min(m.min_modulus(g))))
        .fold(f64::INFINITY, f64::min);
    run.check("min_modulus", min_mod >= START - 1e-9, min_mod, "min |f_n| over all families");
    let (plus, minus) = (families[0].0.clone(), families[0].1.clone());
    let spread = families.iter().map(|(p, _, _)| (p.current()[0] - plus.current()[0]).norm()).fold(0.0, f64::max);
    run.check(
        "start_independence",
        spread <= 1e-3,
        spread,
        "spread of f_plus(0) over start angles at the last generation",
    );
    match limit_graph(&plus, 1e-4) {
        Ok(lim) => run.check("limit_convergence", true, *lim.movements.last().unwrap(), "sup movement of the last generation"),
        Err(e) => run.check("limit_convergence", false, f64::NAN, e.to_string()),
    }
    let f_origin = plus.origin_fixed_point();

    let mut slices = Vec::new();
    for z0 in [c64(0.0, 0.0), -a, c64(0.3, 0.0), c64(0.0, 0.5)] {
        let slice = extract_slice(&map, z0, GridBox::square(1.5), 256).stage("slice")?;
        let conn = connectivity_report(&slice);
        slices.push((z0, conn));
    }
    for (z0, conn) in slices {
        run.check(
            format!("slice_connected_z0={}{:+}i", z0.re, z0.im),
            conn.simply_connected(),
            conn.hole_count as f64,
            format!("{} components, {} holes", conn.component_count, conn.hole_count),
        );
    }
    let shrink = w_shrinkage_report(a, b, c, &[10, 20, 30], 50, seed).stage("shrinkage")?;
    run.check(
        "w_shrinkage_depth",
        shrink.unsettled == 0 && shrink.min_modulus > 0.0,
        shrink.empirical_l as f64,
        format!(
            "{} orbits; empirical L = {}; {} unsettled; chain fraction {:.3}; min |w| {:.3e}",
            shrink.orbits, shrink.empirical_l, shrink.unsettled, shrink.chain_fraction, shrink.min_modulus
        ),
    );
    run.lap("slices");

    let target = run.s.target.point();
    let tree = build_tree_2d(&map, target, run.s.tree.depth, basin_keep(&map)).stage("tree")?;
    let nodes: Vec<SpacePoint<f64>> = tree.nodes().iter().map(|n| n.point).collect();
    let node_hp = leaf_values(&plus, &nodes)?;
    let node_hm = leaf_values(&minus, &nodes)?;
    run.lap("tree");

    // basin samples over member cells whose segment to the origin stays in the raster basin
    let members: Vec<usize> = (0..gp.membership().len())
        .filter(|&k| {
            let z = gp.center_of_index(k);
            gp.membership()[k] && (1..=32).all(|i| gp.is_member_point(z * (i as f64 / 32.0)))
        })
        .collect();
    let samples = sample_basin(&map, leaf.radius_samples, seed ^ 0x5eed, |rng| {
        let k = members[rng.random_range(0..members.len())];
        let jitter = c64(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)) * gp.cell_width();
        gp.center_of_index(k) + jitter
    });
    let sample_hp = leaf_values(&plus, &samples)?;
    let sample_hm = leaf_values(&minus, &samples)?;
    let r = puncture_radius(
        run,
        &leaf,
        sample_hp.iter().chain(&sample_hm).chain(&node_hp).chain(&node_hm).map(|h| h.norm()),
        "basin samples and tree nodes (both leaves)",
    );
    let reference = leaf.reference_modulus.unwrap_or_else(|| (target.w - f_origin).norm());
    let approach: Vec<[f64; 2]> = run
        .s
        .probes
        .leaf_deltas
        .iter()
        .map(|&d| Ok([d, punctured_lower_bound_moduli(d, reference, r)?]))
        .collect::<shadowlab_core::Result<_>>()
        .stage("leaf")?;
    growth_check(run, "leaf_certificate_growth", &approach);
    run.ladder("leaf_approach", "delta", approach);
    run.notes.push(format!(
        "plus leaf through ({}, {}) over z = 0; reference |h| = {reference}; R = {r}",
        f_origin.re, f_origin.im
    ));
    run.lap("leaf");

    // probes (z_N, 0) along a preimage chain of -a converging to the repelling fixed point 1 - a
    let beta = c64(1.0, 0.0) - a;
    let depths = run.s.probes.chain_depths.clone();
    let chain = preimage_chain(map.p(), -a, *depths.iter().max().unwrap()).stage("chain")?;
    let node_dlo: Vec<Option<f64>> = nodes
        .iter()
        .map(|n| gp.boundary_dist_at(n.z).map(|d| d - gp.cell_diagonal()).filter(|d| *d > 0.0))
        .collect();
    let mut points = Vec::new();
    let mut probe_h = Vec::new();
    for &n in &depths {
        let zn = chain[n - 1];
        let d_up = (zn - beta).norm() + 4.0 * f64::EPSILON;
        let hp = -plus.evaluate(zn).stage("leaf")?;
        let hm = -minus.evaluate(zn).stage("leaf")?;
        let per_node = tree.nodes().iter().enumerate().map(|(i, node)| {
            let proj = node_dlo[i].map_or(0.0, |lo| (0.5 * (lo / d_up).ln()).max(0.0));
            let pp = punctured_lower_bound_moduli(hp.norm(), node_hp[i].norm(), r).unwrap_or(0.0);
            let pm = punctured_lower_bound_moduli(hm.norm(), node_hm[i].norm(), r).unwrap_or(0.0);
            let best = larger(
                (proj, CertificateKind::Projection),
                larger((pp, CertificateKind::PuncturedDisk), (pm, CertificateKind::PuncturedDisk)),
            );
            (node.depth, best.0, best.1)
        });
        let (depth, bound) = min_over_nodes(per_node).expect("tree has a root");
        run.probes.push(ProbeRecord::new(
            format!("chain N={n}"),
            SpacePoint::new(zn, c64(0.0, 0.0)),
            Some(d_up),
            depth,
            bound,
        ));
        points.push([n as f64, bound.lower]);
        probe_h.push(hp);
    }
    run.threshold_checks(&points, "N");
    run.ladder("certificate", "N", points.clone());
    run.notes.push(format!(
        "probe bounds are minima over the {} tree nodes up to depth {}; dist(z_N, boundary) <= |z_N - (1 - a)|",
        tree.len(),
        run.s.tree.depth
    ));
    run.lap("certificate");

    // Koebe ratio bounds in the P-basin against the grid geodesic from the origin
    let origin = c64(0.0, 0.0);
    let mut pairs = Vec::new();
    let mut seen: Vec<C64> = Vec::new();
    for node in tree.nodes().iter().filter(|n| n.depth <= 3) {
        if seen.iter().any(|s| (s - node.point.z).norm() < 1e-9) {
            continue;
        }
        seen.push(node.point.z);
        pairs.push(Pair {
            source: origin,
            target: node.point.z,
            lower: ratio_pair_lower(&gp, node.point.z, origin),
            label: format!("node z=({:.4},{:.4})", node.point.z.re, node.point.z.im),
        });
    }
    for (k, z) in chain.iter().enumerate().take(8) {
        let lower = ratio_lower(&gp, origin, (z - beta).norm() + 4.0 * f64::EPSILON);
        pairs.push(Pair { source: origin, target: *z, lower, label: format!("chain N={}", k + 1) });
    }
    let res = cross_check(&gp, pairs)?;
    record_cross(run, "Koebe ratio bounds in the P-basin", res);
    let punct_grid = punctured_disk(r, g.resolution.min(512))?;
    let stride = (node_hp.len() / 200).max(1);
    let mut pairs = Vec::new();
    for (hp, n) in probe_h.iter().zip(&depths).take(2) {
        for (i, h) in node_hp.iter().enumerate().step_by(stride) {
            pairs.push(Pair {
                source: *hp,
                target: *h,
                lower: punctured_lower_bound_moduli(hp.norm(), h.norm(), r).unwrap_or(0.0),
                label: format!("N={n},node={i}"),
            });
        }
    }
    let res = cross_check(&punct_grid, pairs)?;
    record_cross(run, "punctured-disk bounds on the punctured raster", res);
    run.lap("cross_check");

    let frame = Frame::new(bbox);
    let layers: Vec<Vec<C64>> =
        (0..=tree.max_depth()).map(|k| tree.at_depth(k).iter().map(|n| n.point.z).collect()).collect();
    let chain_marks: Vec<C64> = depths.iter().map(|&n| chain[n - 1]).collect();
    let body = svg::heatmap(&gp) + &svg::depth_layers(frame, &layers) + &svg::markers(frame, &chain_marks, "red");
    run.artifacts.plots.push(("basin_p.svg".into(), svg::document(&format!("{}: P-basin and tree", run.s.name), &body)));
    let fam_refs: Vec<&GraphFamily> = families.iter().take(8).flat_map(|(p, m, _)| [p, m]).collect();
    leaf_plot(run, &fam_refs, "lamination.svg");
    let mut csv = Vec::new();
    write_leaf_csv(&[&plus, &minus], &[0, 1, leaf.generations], &mut csv)?;
    run.artifacts.files.push(("leaves.csv".into(), String::from_utf8(csv).expect("ascii")));
    let chart = svg::ladder_chart(&[("certificate", &points)], &run.s.thresholds, "chain depth N");
    run.artifacts.plots.push(("certificates.svg".into(), svg::document(&run.s.name, &chart)));
    run.artifacts.grids.push(("basin_p".into(), gp));
    Ok(())
}
