//! Backward transport of boundary graphs `w = f(z)` for skew products
//! `(P(z), w² + c w + b z)`, limit leaves, and punctured-disk certificates
//! through `h(z, w) = w − f(z)`.
//!
//! A family of generation `n` is defined by the recursion
//! `f_k(Z)² + c_k f_k(Z) + b_k Z = f_{k-1}(P_k(Z))` from a constant `f_0`.
//! Values are obtained by continuing every level simultaneously along the
//! ray from `0` to `Z`, starting from the branch rule at the origin.

use std::io::{self, Write};

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hypmetric::{punctured_lower_bound_moduli, CertificateKind, DistanceBound};
use crate::polycore::{Polynomial, SpacePoint};
use crate::C64;

/// Points per sample circle.
pub const SAMPLE_RAYS: usize = 256;
/// Sample circles per disk, geometrically spaced.
pub const SAMPLE_RADII: usize = 64;
/// Smallest admissible `|f(P(z)) − b z|` (square-root steps) or discriminant (quadratic steps).
pub const MARGIN_TOL: f64 = 1e-9;
/// Cap on the number of sheets of a multi-sheet product.
pub const MAX_SHEET_GENERATION: usize = 10;

const MAX_HALVINGS: usize = 40;

fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// Root selection at `z = 0`; away from the origin roots follow by continuity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Branch {
    /// The root with larger real part.
    PositiveAtZero,
    /// `(−c + √disc)/2` with the principal square root.
    Plus,
    /// `(−c − √disc)/2` with the principal square root.
    Minus,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::PositiveAtZero => "POSITIVE_AT_ZERO",
            Branch::Plus => "PLUS",
            Branch::Minus => "MINUS",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum StepKind {
    Sqrt,
    Quadratic,
}

/// One backward transport through `W² + c W + b Z = f(P(Z))`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportStep {
    pub base: Polynomial<f64>,
    pub b: C64,
    pub c: C64,
    pub branch: Branch,
    kind: StepKind,
}

impl TransportStep {
    /// The two roots `(−c ± s)/2` and the margin used for collapse detection.
    fn roots(&self, y: C64, prev: C64) -> (C64, C64, f64) {
        let disc = self.c * self.c - self.b * y * 4.0 + prev * 4.0;
        let s = disc.sqrt();
        let margin = match self.kind {
            StepKind::Sqrt => (prev - self.b * y).norm(),
            StepKind::Quadratic => disc.norm(),
        };
        ((-self.c + s) * 0.5, (-self.c - s) * 0.5, margin)
    }

    fn at_origin(&self, prev: C64) -> (C64, f64) {
        let (plus, minus, margin) = self.roots(c64(0.0, 0.0), prev);
        let v = match self.branch {
            Branch::Plus => plus,
            Branch::Minus => minus,
            Branch::PositiveAtZero => {
                if plus.re >= minus.re {
                    plus
                } else {
                    minus
                }
            }
        };
        (v, margin)
    }
}

/// Sample points: the origin followed by `rays × radii` points, ray-major, radii ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleDisk {
    pub radius: f64,
    pub rays: usize,
    pub radii: Vec<f64>,
}

impl SampleDisk {
    /// Geometric radii from `radius·1e-3` to `radius`.
    pub fn new(radius: f64, rays: usize, n_radii: usize) -> Result<Self> {
        if !(radius > 0.0) || rays == 0 || n_radii < 2 {
            return Err(Error::InvalidParameter("sample disk needs radius > 0, rays >= 1, radii >= 2".into()));
        }
        let r0 = radius * 1e-3;
        let ratio = (radius / r0).powf(1.0 / (n_radii - 1) as f64);
        let radii = (0..n_radii).map(|k| if k + 1 == n_radii { radius } else { r0 * ratio.powi(k as i32) }).collect();
        Ok(Self { radius, rays, radii })
    }

    pub fn standard(radius: f64) -> Result<Self> {
        Self::new(radius, SAMPLE_RAYS, SAMPLE_RADII)
    }

    pub fn direction(&self, ray: usize) -> C64 {
        C64::from_polar(1.0, 2.0 * std::f64::consts::PI * ray as f64 / self.rays as f64)
    }

    pub fn points(&self) -> Vec<C64> {
        let mut out = vec![c64(0.0, 0.0)];
        for ray in 0..self.rays {
            let d = self.direction(ray);
            out.extend(self.radii.iter().map(|&r| d * r));
        }
        out
    }
}

/// Sampled graphs `f_0, …, f_n` of a transported family.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphFamily {
    start: C64,
    steps: Vec<TransportStep>,
    disk: SampleDisk,
    z_samples: Vec<C64>,
    values: Vec<Vec<C64>>,
    margins: Vec<f64>,
}

impl GraphFamily {
    /// Generation zero: the constant graph `w = start`.
    pub fn constant(start: C64, disk: SampleDisk) -> Self {
        let z_samples = disk.points();
        let values = vec![vec![start; z_samples.len()]];
        Self { start, steps: Vec::new(), disk, z_samples, values, margins: vec![f64::INFINITY] }
    }

    pub fn generation(&self) -> usize {
        self.steps.len()
    }

    pub fn start(&self) -> C64 {
        self.start
    }

    pub fn steps(&self) -> &[TransportStep] {
        &self.steps
    }

    pub fn disk(&self) -> &SampleDisk {
        &self.disk
    }

    pub fn z_samples(&self) -> &[C64] {
        &self.z_samples
    }

    /// Sampled `f_g`.
    pub fn values(&self, g: usize) -> &[C64] {
        &self.values[g]
    }

    pub fn current(&self) -> &[C64] {
        &self.values[self.generation()]
    }

    /// Smallest `|f_g|` over the samples.
    pub fn min_modulus(&self, g: usize) -> f64 {
        self.values[g].iter().map(|v| v.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Smallest collapse margin met while computing generation `g`.
    pub fn min_margin(&self, g: usize) -> f64 {
        self.margins[g]
    }

    /// `f_n(z)` for the current generation.
    pub fn evaluate(&self, z: C64) -> Result<C64> {
        self.evaluate_generation(self.generation(), z)
    }

    pub fn evaluate_generation(&self, g: usize, z: C64) -> Result<C64> {
        let r = z.norm();
        if r == 0.0 {
            return Ok(self.origin_values(g)?.0[g]);
        }
        Ok(self.trace(g, z / r, &[r])?.0[0])
    }

    /// Value at `z = 0` of the limit of repeating the last step forever.
    pub fn origin_fixed_point(&self) -> C64 {
        let Some(step) = self.steps.last() else { return self.start };
        let mut v = self.current()[0];
        for _ in 0..2000 {
            let next = step.at_origin(v).0;
            if (next - v).norm() <= 1e-17 * next.norm().max(1.0) {
                return next;
            }
            v = next;
        }
        v
    }

    fn origin_values(&self, g: usize) -> Result<(Vec<C64>, f64)> {
        let mut v = Vec::with_capacity(g + 1);
        v.push(self.start);
        let mut margin = f64::INFINITY;
        for (k, step) in self.steps[..g].iter().enumerate() {
            let (x, m) = step.at_origin(v[k]);
            margin = margin.min(m);
            self.check_margin(k + 1, c64(0.0, 0.0), m)?;
            v.push(x);
        }
        Ok((v, margin))
    }

    fn check_margin(&self, generation: usize, z: C64, margin: f64) -> Result<()> {
        if margin >= MARGIN_TOL {
            return Ok(());
        }
        Err(match self.steps[generation - 1].kind {
            StepKind::Sqrt => Error::ZeroCrossing { generation, re: z.re, im: z.im, modulus: margin },
            StepKind::Quadratic => Error::DiscriminantCollapse { generation, re: z.re, im: z.im, modulus: margin },
        })
    }

    /// Level points `y_k = P_{k+1}∘…∘P_g(z)` for `k = 1..=g` (index `k`).
    fn level_points(&self, g: usize, z: C64, out: &mut [C64]) {
        out[g] = z;
        for k in (1..g).rev() {
            out[k] = self.steps[k].base.evaluate(out[k + 1]);
        }
    }

    /// Continues all levels of generation `g` along `t·dir`, returning `f_g` at each radius.
    fn trace(&self, g: usize, dir: C64, radii: &[f64]) -> Result<(Vec<C64>, f64)> {
        let (mut state, mut margin) = self.origin_values(g)?;
        if g == 0 {
            return Ok((vec![self.start; radii.len()], margin));
        }
        let mut y = vec![c64(0.0, 0.0); g + 1];
        let mut trial = state.clone();
        let mut out = Vec::with_capacity(radii.len());
        let mut t = 0.0;
        let initial_step = radii.last().copied().unwrap_or(0.0) / 64.0;
        for &target in radii {
            let mut h = initial_step.min(target - t).max(0.0);
            while t < target {
                h = h.min(target - t);
                let mut halvings = 0;
                loop {
                    let tn = if target - t <= h { target } else { t + h };
                    self.level_points(g, dir * tn, &mut y);
                    let mut ok = true;
                    let mut local = f64::INFINITY;
                    for k in 1..=g {
                        let (p, m, mg) = self.steps[k - 1].roots(y[k], trial[k - 1]);
                        local = local.min(mg);
                        if mg < MARGIN_TOL {
                            self.check_margin(k, dir * tn, mg)?;
                        }
                        let prev = state[k];
                        let (near, far) = if (p - prev).norm() <= (m - prev).norm() { (p, m) } else { (m, p) };
                        if (near - prev).norm() >= 0.25 * (far - near).norm() {
                            ok = false;
                            break;
                        }
                        trial[k] = near;
                    }
                    if ok {
                        state[1..].copy_from_slice(&trial[1..]);
                        margin = margin.min(local);
                        t = tn;
                        h *= 1.5;
                        break;
                    }
                    trial.copy_from_slice(&state);
                    h *= 0.5;
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        let z = dir * t;
                        return Err(Error::BranchAmbiguity { generation: g, re: z.re, im: z.im });
                    }
                }
            }
            out.push(state[g]);
        }
        Ok((out, margin))
    }

    fn push_step(&self, step: TransportStep) -> Result<Self> {
        let mut next = self.clone();
        next.steps.push(step);
        let g = next.generation();
        let (origin, m0) = next.origin_values(g)?;
        let traced: Vec<Result<(Vec<C64>, f64)>> =
            (0..next.disk.rays).into_par_iter().map(|ray| next.trace(g, next.disk.direction(ray), &next.disk.radii)).collect();
        let mut values = vec![origin[g]];
        let mut margin = m0;
        for r in traced {
            let (v, m) = r?;
            values.extend(v);
            margin = margin.min(m);
        }
        next.values.push(values);
        next.margins.push(margin);
        Ok(next)
    }
}

/// `f_{n+1}(z) = √(f_n(z²) − a z)`, positive at `z = 0`.
pub fn transport_sqrt(f: &GraphFamily, a: C64) -> Result<GraphFamily> {
    let step = TransportStep {
        base: Polynomial::monomial(2)?,
        b: a,
        c: c64(0.0, 0.0),
        branch: Branch::PositiveAtZero,
        kind: StepKind::Sqrt,
    };
    f.push_step(step)
}

/// Both families `(−c ± √(c² − 4bZ + 4 f_j(Z² + aZ)))/2`, as `(plus, minus)` at `Z = 0`.
pub fn transport_quadratic(f: &GraphFamily, a: C64, b: C64, c: C64) -> Result<(GraphFamily, GraphFamily)> {
    let base = Polynomial::new(vec![c64(0.0, 0.0), a, c64(1.0, 0.0)])?;
    let step = |branch| TransportStep { base: base.clone(), b, c, branch, kind: StepKind::Quadratic };
    Ok((f.push_step(step(Branch::Plus))?, f.push_step(step(Branch::Minus))?))
}

/// A converged family with its movement history.
#[derive(Clone, Debug, PartialEq)]
pub struct LimitGraph {
    pub family: GraphFamily,
    /// `max_z |f_g(z) − f_{g−1}(z)|` for `g = 1..=n`.
    pub movements: Vec<f64>,
}

/// Movements below this are rounding noise and never count as stagnation.
const MOVEMENT_FLOOR: f64 = 1e-13;

/// Accepts the last generation once consecutive generations move less than `tol`.
pub fn limit_graph(f: &GraphFamily, tol: f64) -> Result<LimitGraph> {
    if f.generation() < 3 {
        return Err(Error::InvalidParameter("limit needs at least 3 generations".into()));
    }
    let movements: Vec<f64> = (1..=f.generation())
        .map(|g| {
            f.values[g]
                .iter()
                .zip(&f.values[g - 1])
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let mut stalled = 0;
    for w in movements.windows(2) {
        stalled = if w[1] >= w[0] && w[1] > MOVEMENT_FLOOR { stalled + 1 } else { 0 };
        if stalled >= 5 {
            return Err(Error::NoConvergence { movements });
        }
    }
    if !(*movements.last().unwrap() < tol) {
        return Err(Error::NoConvergence { movements });
    }
    Ok(LimitGraph { family: f.clone(), movements })
}

/// `h(z, w) = w − f(z)`.
pub fn leaf_h(f: &GraphFamily, x: SpacePoint<f64>) -> Result<C64> {
    Ok(x.w - f.evaluate(x.z)?)
}

/// Punctured-disk lower bound from known moduli `|h(p)|`, `|h(q)|`.
pub fn punctured_certificate_moduli(hp: f64, hq: f64, r: f64) -> Result<DistanceBound> {
    if hp == 0.0 || hq == 0.0 {
        return Err(Error::InvalidParameter("point lies on the leaf (h = 0)".into()));
    }
    Ok(DistanceBound::lower_only(punctured_lower_bound_moduli(hp, hq, r)?, CertificateKind::PuncturedDisk))
}

/// Lower bound on `d_Ω(p, q)` from `h(Ω) ⊂ {0 < |ζ| < R}`.
pub fn punctured_certificate(f: &GraphFamily, p: SpacePoint<f64>, q: SpacePoint<f64>, r: f64) -> Result<DistanceBound> {
    punctured_certificate_moduli(leaf_h(f, p)?.norm(), leaf_h(f, q)?.norm(), r)
}

/// Writes `generation,z_re,z_im,f_re,f_im,branch` rows for the selected generations.
pub fn write_leaf_csv<W: Write>(families: &[&GraphFamily], generations: &[usize], mut out: W) -> io::Result<()> {
    writeln!(out, "generation,z_re,z_im,f_re,f_im,branch")?;
    for fam in families {
        for &g in generations.iter().filter(|&&g| g <= fam.generation()) {
            let label = if g == 0 { "CONSTANT" } else { fam.steps[g - 1].branch.as_str() };
            for (z, v) in fam.z_samples.iter().zip(&fam.values[g]) {
                writeln!(out, "{g},{},{},{},{},{label}", z.re, z.im, v.re, v.im)?;
            }
        }
    }
    Ok(())
}

/// Outcome of one sampled inequality.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest slack observed; positive when the inequality held everywhere.
    pub worst_margin: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionLemmaReport {
    pub checks: [LemmaCheck; 4],
}

impl RegionLemmaReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

fn uniform_disk(rng: &mut ChaCha8Rng, radius: f64) -> C64 {
    let r = radius * rng.random::<f64>().sqrt();
    C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

fn uniform_annulus(rng: &mut ChaCha8Rng, inner: f64, outer: f64) -> C64 {
    let u: f64 = rng.random();
    let r = (inner * inner + u * (outer * outer - inner * inner)).sqrt();
    C64::from_polar(r, rng.random_range(0.0..std::f64::consts::TAU))
}

fn sampled(name: &'static str, samples: usize, mut margin: impl FnMut() -> f64) -> LemmaCheck {
    let worst = (0..samples).map(|_| margin()).fold(f64::INFINITY, f64::min);
    LemmaCheck { name, passed: worst > 0.0, worst_margin: worst, samples }
}

/// Samples the four invariance inequalities at `sample_count` random points each:
///
/// 1. `|w² + a z| < 3/4` on `{|z| < 1, |w| < 3/4}`;
/// 2. `|w² + c w + b z| < 2/3` on `{|z| < 2, |w| < 2/3}`;
/// 3. `|w² + c w + 2b| < |w|(|w| + |c| + 1/2) < 7|w|/8` on `{4|b| < |w| < 1/4}`;
/// 4. `|2w + c| ≥ 2|w| − |c| > 7/6` on `{|w| > 2/3}` (sampled up to `|w| < 2`).
pub fn verify_region_lemmas(a: C64, b: C64, c: C64, sample_count: usize, seed: u64) -> RegionLemmaReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bidisc = sampled("bidisc_invariance", sample_count, || {
        let z = uniform_disk(&mut rng, 1.0);
        let w = uniform_disk(&mut rng, 0.75);
        0.75 - (w * w + a * z).norm()
    });
    let cylinder = sampled("cylinder_invariance", sample_count, || {
        let z = uniform_disk(&mut rng, 2.0);
        let w = uniform_disk(&mut rng, 2.0 / 3.0);
        2.0 / 3.0 - (w * w + c * w + b * z).norm()
    });
    let (inner, outer) = (4.0 * b.norm(), 0.25);
    let shrink = sampled("w_shrinkage", sample_count, || {
        let w = uniform_annulus(&mut rng, inner, outer);
        let r = w.norm();
        let mid = r * (r + c.norm() + 0.5);
        let lhs = (w * w + c * w + b * 2.0).norm();
        (mid - lhs).min(0.875 * r - mid)
    });
    let derivative = sampled("fiber_derivative", sample_count, || {
        let w = uniform_annulus(&mut rng, 2.0 / 3.0, 2.0);
        let r = w.norm();
        let lower = 2.0 * r - c.norm();
        ((w * 2.0 + c).norm() - lower).min(lower - 7.0 / 6.0)
    });
    RegionLemmaReport { checks: [bidisc, cylinder, shrink, derivative] }
}

/// Numerical record of the fiber-coordinate chain along orbits from `(z_N, w_N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkageReport {
    pub depths: Vec<usize>,
    pub orbits: usize,
    /// Largest number of steps before `|w|` stays below `4|b|` up to `z_1 = −a`.
    pub empirical_l: usize,
    /// Orbits on which `|w|` never fell below `4|b|` before reaching `z_1`.
    pub unsettled: usize,
    /// Fraction of orbits with `|ab|/2 ≤ |w_0| ≤ 2|ab|`.
    pub chain_fraction: f64,
    /// Smallest `|w|` seen anywhere along the orbits.
    pub min_modulus: f64,
}

/// Follows orbits of `(a z + z², w² + c w + b z)` from points over a backward
/// orbit `z_N → … → z_1 = −a → z_0 = 0` with random `|w_N| < 2/3`.
pub fn w_shrinkage_report(a: C64, b: C64, c: C64, depths: &[usize], per_depth: usize, seed: u64) -> Result<ShrinkageReport> {
    let p = Polynomial::new(vec![c64(0.0, 0.0), a, c64(1.0, 0.0)])?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let threshold = 4.0 * b.norm();
    let ab = (a * b).norm();
    let (mut empirical_l, mut unsettled, mut chain_ok, mut orbits) = (0usize, 0usize, 0usize, 0usize);
    let mut min_modulus = f64::INFINITY;
    for &n in depths {
        for _ in 0..per_depth {
            let mut z = -a;
            for _ in 1..n {
                let pre = p.preimages_of_value(z)?;
                z = pre[rng.random_range(0..pre.len())];
            }
            let mut w = uniform_disk(&mut rng, 2.0 / 3.0);
            // before step s the fiber coordinate is w_{N−s}
            let mut last_above = None;
            for step in 0..n {
                if w.norm() >= threshold {
                    last_above = Some(step);
                }
                let wn = w * w + c * w + b * z;
                z = p.evaluate(z);
                w = wn;
                min_modulus = min_modulus.min(w.norm());
            }
            if last_above == Some(n - 1) {
                unsettled += 1;
            }
            empirical_l = empirical_l.max(last_above.map_or(0, |s| s + 1));
            let w0 = w.norm();
            if 0.5 * ab <= w0 && w0 <= 2.0 * ab {
                chain_ok += 1;
            }
            orbits += 1;
        }
    }
    Ok(ShrinkageReport {
        depths: depths.to_vec(),
        orbits,
        empirical_l,
        unsettled,
        chain_fraction: if orbits == 0 { 0.0 } else { chain_ok as f64 / orbits as f64 },
        min_modulus,
    })
}

/// Product `ĥ(z, w) = Π (w − g)` over all `2^n` sheets obtained by pulling a
/// leaf over `|z| < η` back `n` times under `(z², w² + a z)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SheetProduct {
    a: C64,
    eta: f64,
    sheets_generation: usize,
    inner: GraphFamily,
}

impl SheetProduct {
    /// Builds the inner leaf on `|z| < η` with `inner_generations` square-root transports.
    pub fn new(a: C64, eta: f64, inner_generations: usize, sheets_generation: usize) -> Result<Self> {
        if sheets_generation > MAX_SHEET_GENERATION {
            return Err(Error::InvalidParameter(format!(
                "sheet generation {sheets_generation} exceeds cap {MAX_SHEET_GENERATION}"
            )));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::InvalidParameter(format!("eta = {eta} outside (0, 1)")));
        }
        let mut f = GraphFamily::constant(c64(2.0 / 3.0, 0.0), SampleDisk::new(eta, 64, 16)?);
        for _ in 0..inner_generations {
            f = transport_sqrt(&f, a)?;
        }
        Ok(Self { a, eta, sheets_generation, inner: f })
    }

    pub fn inner(&self) -> &GraphFamily {
        &self.inner
    }

    pub fn sheet_count(&self) -> usize {
        1 << self.sheets_generation
    }

    pub fn sheets_generation(&self) -> usize {
        self.sheets_generation
    }

    /// `η^{1/2^n}`: the sheets are defined on `|z|` below this radius.
    pub fn domain_radius(&self) -> f64 {
        self.eta.powf(1.0 / self.sheet_count() as f64)
    }

    pub fn in_domain(&self, z: C64) -> bool {
        z.norm() < self.domain_radius()
    }

    /// All sheet values over `z`.
    pub fn sheet_values(&self, z: C64) -> Result<Vec<C64>> {
        if !self.in_domain(z) {
            return Err(Error::OutOfDomain { what: "sheet domain", re: z.re, im: z.im });
        }
        let n = self.sheets_generation;
        let mut u = vec![z; n + 1];
        for k in (0..n).rev() {
            u[k] = u[k + 1] * u[k + 1];
        }
        let mut sheets = vec![self.inner.evaluate(u[0])?];
        for (k, &uk) in u.iter().enumerate().skip(1) {
            let mut next = Vec::with_capacity(sheets.len() * 2);
            for g in &sheets {
                let arg = g - self.a * uk;
                if arg.norm() < MARGIN_TOL {
                    return Err(Error::ZeroCrossing { generation: k, re: uk.re, im: uk.im, modulus: arg.norm() });
                }
                let s = arg.sqrt();
                next.push(s);
                next.push(-s);
            }
            sheets = next;
        }
        Ok(sheets)
    }

    pub fn h_hat(&self, x: SpacePoint<f64>) -> Result<C64> {
        Ok(self.sheet_values(x.z)?.iter().fold(c64(1.0, 0.0), |acc, g| acc * (x.w - g)))
    }

    /// `|ĥ(0, 1 − δ)|`: the sheets over the origin are the `2^n`-th roots of unity,
    /// so `ĥ(0, w) = w^{2^n} − 1`.
    pub fn origin_h_modulus(&self, delta: f64) -> f64 {
        -((self.sheet_count() as f64) * (-delta).ln_1p()).exp_m1()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_family(a: f64, generations: usize, disk: SampleDisk) -> GraphFamily {
        let mut f = GraphFamily::constant(c64(2.0 / 3.0, 0.0), disk);
        for _ in 0..generations {
            f = transport_sqrt(&f, c64(a, 0.0)).unwrap();
        }
        f
    }

    fn small_disk(r: f64) -> SampleDisk {
        SampleDisk::new(r, 32, 16).unwrap()
    }

    #[test]
    fn first_transport_values() {
        let f = square_family(0.1, 1, small_disk(0.9));
        assert!((f.current()[0] - c64(0.816_496_580_927_726_03, 0.0)).norm() < 1e-15);
        let v = f.evaluate(c64(0.5, 0.0)).unwrap();
        assert!((v - c64(0.785_281_265_959_316_43, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn pure_square_root_cascade() {
        let f = square_family(0.0, 5, small_disk(0.9));
        let expected = [
            2.0 / 3.0,
            0.816_496_580_927_726_03,
            0.903_602_003_609_844_83,
            0.950_579_824_954_140_73,
            0.974_976_833_034_580_74,
            0.987_409_151_787_940_81,
        ];
        for (g, e) in expected.iter().enumerate() {
            assert!((f.values(g)[0].re - e).abs() < 1e-15);
            // with a = 0 every sample equals the value at the origin
            assert!(f.values(g).iter().all(|v| (v - c64(*e, 0.0)).norm() < 1e-14));
        }
    }

    #[test]
    fn quadratic_branches_at_origin() {
        let f = GraphFamily::constant(c64(2.0 / 3.0, 0.0), small_disk(0.8));
        let (plus, minus) = transport_quadratic(&f, c64(0.1, 0.0), c64(0.001, 0.0), c64(0.01, 0.0)).unwrap();
        assert!((plus.current()[0] - c64(0.811_511_890_095_096_33, 0.0)).norm() < 1e-15);
        assert!((minus.current()[0] - c64(-0.821_511_890_095_096_33, 0.0)).norm() < 1e-15);
        let bound = 8.0 / 3.0 - 4.0 * 0.001 * 2.0 - 0.0001;
        assert!(plus.min_margin(1) >= bound);
        for (p, m) in plus.current().iter().zip(minus.current()) {
            assert!((p - m).norm() > 1e-9);
        }
    }

    #[test]
    fn quadratic_reduces_to_square_root_without_b_and_c() {
        let f = GraphFamily::constant(c64(2.0 / 3.0, 0.0), small_disk(0.8));
        let (plus, _) = transport_quadratic(&f, c64(0.1, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)).unwrap();
        let (plus, minus) = transport_quadratic(&plus, c64(0.1, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)).unwrap();
        for &z in &[c64(0.3, 0.2), c64(-0.5, 0.1)] {
            let prev = plus.evaluate_generation(1, z * z + z * 0.1).unwrap();
            let v = plus.evaluate(z).unwrap();
            assert!((v * v - prev).norm() < 1e-12);
            assert!((minus.evaluate(z).unwrap() + v).norm() < 1e-12);
        }
    }

    #[test]
    fn backward_consistency() {
        let f = square_family(0.1, 6, small_disk(0.95));
        for g in 1..=6 {
            for (z, v) in f.z_samples().iter().zip(f.values(g)).step_by(7) {
                let prev = f.evaluate_generation(g - 1, z * z).unwrap();
                assert!((v * v + z * 0.1 - prev).norm() < 1e-8);
            }
        }
    }

    #[test]
    fn limit_of_square_family() {
        let f = square_family(0.1, 25, small_disk(0.99));
        for g in 0..=25 {
            assert!(f.min_modulus(g) >= 2.0 / 3.0 - 1e-9);
        }
        assert!((f.current()[0].re - 1.0).abs() <= 1e-6);
        let lim = limit_graph(&f, 1e-6).unwrap();
        assert!(lim.movements[10] < 0.6 * lim.movements[9]);
        assert!((f.origin_fixed_point() - c64(1.0, 0.0)).norm() < 1e-15);
        let too_early = square_family(0.1, 4, small_disk(0.99));
        assert!(matches!(limit_graph(&too_early, 1e-6), Err(Error::NoConvergence { .. })));
    }

    #[test]
    fn zero_crossing_is_reported() {
        let f = GraphFamily::constant(c64(0.05, 0.0), small_disk(0.9));
        let r = transport_sqrt(&f, c64(0.1, 0.0));
        assert!(matches!(r, Err(Error::ZeroCrossing { generation: 1, .. })), "{r:?}");
    }

    #[test]
    fn discriminant_collapse_is_reported() {
        // c² − 4bZ + 4·(2/3) vanishes at Z = (c² + 8/3)/(4b) when that lies in the disk
        let b = (0.0001 + 8.0 / 3.0) / (4.0 * 0.5);
        let f = GraphFamily::constant(c64(2.0 / 3.0, 0.0), small_disk(0.9));
        let r = transport_quadratic(&f, c64(0.1, 0.0), c64(b, 0.0), c64(0.01, 0.0));
        assert!(matches!(r, Err(Error::DiscriminantCollapse { .. })), "{r:?}");
    }

    #[test]
    fn punctured_certificate_examples() {
        let f = square_family(0.1, 3, small_disk(0.9));
        let p = SpacePoint::new(c64(0.2, 0.1), c64(0.3, 0.0));
        assert_eq!(punctured_certificate(&f, p, p, 2.0).unwrap().lower, 0.0);
        let b = punctured_certificate_moduli(1e-38, 0.3, 2.0).unwrap();
        assert!((b.lower - 3.839_172_295_149_382).abs() < 1e-12);
        assert_eq!(b.upper, f64::INFINITY);
        let on_leaf = SpacePoint::new(c64(0.0, 0.0), f.current()[0]);
        assert!(punctured_certificate(&f, on_leaf, p, 2.0).is_err());
    }

    #[test]
    fn region_lemma_examples() {
        let r = verify_region_lemmas(c64(0.1, 0.0), c64(0.001, 0.0), c64(0.01, 0.0), 10_000, 7);
        assert!(r.all_passed(), "{r:?}");
        let w = C64::from_polar(0.74, 1.0);
        assert!((w * w + c64(0.1, 0.0) * 0.99).norm() <= 0.5476 + 0.099);
        let bad = verify_region_lemmas(c64(0.4, 0.0), c64(0.001, 0.0), c64(0.01, 0.0), 10_000, 7);
        assert!(!bad.checks[0].passed);
    }

    #[test]
    fn shrinkage_chain() {
        let r = w_shrinkage_report(c64(0.1, 0.0), c64(0.001, 0.0), c64(0.01, 0.0), &[12, 20], 20, 3).unwrap();
        assert_eq!(r.orbits, 40);
        assert!(r.min_modulus > 0.0);
        assert!(r.empirical_l < 20);
    }

    #[test]
    fn sheet_product_over_origin() {
        let s = SheetProduct::new(c64(0.5, 0.0), 0.05, 40, 4).unwrap();
        assert_eq!(s.sheet_count(), 16);
        let delta = 1e-6;
        let direct = s.h_hat(SpacePoint::new(c64(0.0, 0.0), c64(1.0 - delta, 0.0))).unwrap().norm();
        assert!((direct - s.origin_h_modulus(delta)).abs() / direct < 1e-5);
        let z = c64(0.3, 0.2);
        for g in s.sheet_values(z).unwrap() {
            assert!(s.h_hat(SpacePoint::new(z, g)).unwrap().norm() < 1e-10);
        }
        assert!(SheetProduct::new(c64(0.5, 0.0), 0.05, 5, 11).is_err());
    }
}
