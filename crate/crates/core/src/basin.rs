//! Rasterized basins of attraction in one complex variable.

use std::collections::VecDeque;
use std::io::{self, Write};

use num_complex::Complex;
use rayon::prelude::*;

use crate::dynsys::{classify_fixed_point, FixedPointKind, DEFAULT_ESCAPE_RADIUS};
use crate::error::{Error, Result};
use crate::polycore::{Polynomial, SpacePoint};
use crate::dynsys::{PlaneMap, SkewMap};
use crate::C64;

/// Axis-aligned rectangle of the complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridBox {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl GridBox {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) && re_min < re_max && im_min < im_max;
        if !ok {
            return Err(Error::InvalidParameter(format!(
                "degenerate box [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    /// `[-half, half]²`.
    pub fn square(half: f64) -> Self {
        Self { re_min: -half, re_max: half, im_min: -half, im_max: half }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }
}

/// Outcome of iterating a single point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Membership {
    Converges,
    Escapes,
    Undecided,
}

/// Iteration limits for membership classification.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MembershipParams {
    pub max_iter: usize,
    pub converge_radius: f64,
    pub escape_radius: f64,
    /// Consecutive modulus decreases required when entering `converge_radius`.
    pub monotone_steps: usize,
}

impl Default for MembershipParams {
    fn default() -> Self {
        Self { max_iter: 1000, converge_radius: 1e-6, escape_radius: DEFAULT_ESCAPE_RADIUS, monotone_steps: 0 }
    }
}

impl MembershipParams {
    /// Slow-convergence settings for a multiplier-one fixed point. Results are heuristic.
    pub fn parabolic() -> Self {
        Self { max_iter: 100_000, converge_radius: 1e-3, escape_radius: DEFAULT_ESCAPE_RADIUS, monotone_steps: 16 }
    }
}

fn classify_sequence(mut next: impl FnMut() -> f64, start: f64, params: &MembershipParams) -> Membership {
    let mut prev = start;
    let mut decreasing = 0usize;
    if start < params.converge_radius && params.monotone_steps == 0 {
        return Membership::Converges;
    }
    for _ in 0..params.max_iter {
        let r = next();
        if !r.is_finite() || r > params.escape_radius {
            return Membership::Escapes;
        }
        decreasing = if r < prev { decreasing + 1 } else { 0 };
        if r < params.converge_radius && decreasing >= params.monotone_steps {
            return Membership::Converges;
        }
        prev = r;
    }
    Membership::Undecided
}

/// Classifies `z` by iterating `p` toward the fixed point at the origin.
pub fn membership_test(p: &Polynomial<f64>, z: C64, params: &MembershipParams) -> Membership {
    let mut x = z;
    classify_sequence(
        || {
            x = p.evaluate(x);
            x.norm()
        },
        z.norm(),
        params,
    )
}

/// Classifies `(z, w)` by iterating a map of C² toward the origin (max-norm).
pub fn space_membership<M: PlaneMap<f64> + ?Sized>(map: &M, x0: SpacePoint<f64>, params: &MembershipParams) -> Membership {
    let mut x = x0;
    classify_sequence(
        || {
            x = map.apply(x);
            x.max_norm()
        },
        x0.max_norm(),
        params,
    )
}

/// Cell counts by classification outcome.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ClassStats {
    pub converges: usize,
    pub escapes: usize,
    pub undecided: usize,
}

impl ClassStats {
    pub fn undecided_fraction(&self) -> f64 {
        let total = self.converges + self.escapes + self.undecided;
        if total == 0 { 0.0 } else { self.undecided as f64 / total as f64 }
    }
}

/// Rasterized planar domain: square cells, membership bitmap, and distance to the complement.
#[derive(Clone, Debug, PartialEq)]
pub struct GridDomain {
    bbox: GridBox,
    resolution: usize,
    membership: Vec<bool>,
    boundary_dist: Vec<f64>,
    stats: Option<ClassStats>,
    heuristic: bool,
}

impl GridDomain {
    /// Builds a domain from an explicit bitmap, row-major with row 0 at `im_min`.
    pub fn from_bitmap(bbox: GridBox, resolution: usize, membership: Vec<bool>) -> Result<Self> {
        if resolution < 2 || membership.len() != resolution * resolution {
            return Err(Error::InvalidParameter(format!(
                "bitmap of length {} does not match resolution {resolution}",
                membership.len()
            )));
        }
        Ok(Self { bbox, resolution, membership, boundary_dist: Vec::new(), stats: None, heuristic: false })
    }

    /// Marks every cell whose center satisfies `pred`.
    pub fn from_predicate(bbox: GridBox, resolution: usize, pred: impl Fn(C64) -> bool + Sync) -> Result<Self> {
        let probe = Self::from_bitmap(bbox, resolution, vec![false; resolution * resolution])?;
        let membership = (0..resolution * resolution)
            .into_par_iter()
            .map(|k| pred(probe.center_of_index(k)))
            .collect();
        Ok(Self { membership, ..probe }.with_boundary_distance())
    }

    pub fn bbox(&self) -> GridBox {
        self.bbox
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn cell_width(&self) -> f64 {
        (self.bbox.re_max - self.bbox.re_min) / self.resolution as f64
    }

    pub fn cell_height(&self) -> f64 {
        (self.bbox.im_max - self.bbox.im_min) / self.resolution as f64
    }

    pub fn cell_diagonal(&self) -> f64 {
        self.cell_width().hypot(self.cell_height())
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    /// Per-cell distance to the complement; zero off the member set.
    pub fn boundary_dist(&self) -> &[f64] {
        &self.boundary_dist
    }

    pub fn has_boundary_dist(&self) -> bool {
        self.boundary_dist.len() == self.membership.len()
    }

    pub fn stats(&self) -> Option<ClassStats> {
        self.stats
    }

    /// True when membership came from slow (parabolic) classification.
    pub fn is_heuristic(&self) -> bool {
        self.heuristic
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    pub fn center(&self, i: usize, j: usize) -> C64 {
        Complex::new(
            self.bbox.re_min + (i as f64 + 0.5) * self.cell_width(),
            self.bbox.im_min + (j as f64 + 0.5) * self.cell_height(),
        )
    }

    pub fn center_of_index(&self, k: usize) -> C64 {
        self.center(k % self.resolution, k / self.resolution)
    }

    /// Cell `(i, j)` containing `z`, if inside the box.
    pub fn cell_of(&self, z: C64) -> Option<(usize, usize)> {
        if !self.bbox.contains(z) {
            return None;
        }
        let i = ((z.re - self.bbox.re_min) / self.cell_width()).floor() as usize;
        let j = ((z.im - self.bbox.im_min) / self.cell_height()).floor() as usize;
        Some((i.min(self.resolution - 1), j.min(self.resolution - 1)))
    }

    pub fn is_member_cell(&self, i: usize, j: usize) -> bool {
        self.membership[self.index(i, j)]
    }

    pub fn is_member_point(&self, z: C64) -> bool {
        self.cell_of(z).is_some_and(|(i, j)| self.is_member_cell(i, j))
    }

    /// Boundary distance of the cell containing `z`, if it is a member.
    pub fn boundary_dist_at(&self, z: C64) -> Option<f64> {
        let (i, j) = self.cell_of(z)?;
        let k = self.index(i, j);
        (self.membership[k] && self.has_boundary_dist()).then(|| self.boundary_dist[k])
    }

    pub fn member_count(&self) -> usize {
        self.membership.iter().filter(|&&m| m).count()
    }

    pub fn member_area(&self) -> f64 {
        self.member_count() as f64 * self.cell_width() * self.cell_height()
    }

    /// Largest modulus of a member cell center.
    pub fn max_member_modulus(&self) -> f64 {
        (0..self.membership.len())
            .filter(|&k| self.membership[k])
            .map(|k| self.center_of_index(k).norm())
            .fold(0.0, f64::max)
    }

    /// Fills the boundary-distance field; see [`boundary_distance_field`].
    pub fn with_boundary_distance(mut self) -> Self {
        self.boundary_dist = distance_to_complement(&self);
        self
    }

    /// Member-cell indices whose boundary distance is at most `cells` cell sizes.
    pub fn near_boundary_cells(&self, cells: f64) -> Vec<usize> {
        let h = self.cell_width().max(self.cell_height());
        (0..self.membership.len())
            .filter(|&k| self.membership[k] && self.boundary_dist[k] <= cells * h)
            .collect()
    }

    /// Binary PGM (P5), one byte per cell, top row at `im_max`; members are white.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> io::Result<()> {
        let n = self.resolution;
        write!(out, "P5\n{n} {n}\n255\n")?;
        let mut row = vec![0u8; n];
        for j in (0..n).rev() {
            for (i, px) in row.iter_mut().enumerate() {
                *px = if self.is_member_cell(i, j) { 255 } else { 0 };
            }
            out.write_all(&row)?;
        }
        Ok(())
    }

    /// CSV with header `i,j,re,im,member,boundary_dist`.
    pub fn write_distance_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "i,j,re,im,member,boundary_dist")?;
        for j in 0..self.resolution {
            for i in 0..self.resolution {
                let k = self.index(i, j);
                let c = self.center(i, j);
                let d = self.boundary_dist.get(k).copied().unwrap_or(0.0);
                writeln!(out, "{i},{j},{},{},{},{}", c.re, c.im, u8::from(self.membership[k]), d)?;
            }
        }
        Ok(())
    }

    /// Boundary distances as little-endian `f64`, row-major from `im_min`.
    pub fn write_distance_bin<W: Write>(&self, mut out: W) -> io::Result<()> {
        for d in &self.boundary_dist {
            out.write_all(&d.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Classifies every cell center in parallel.
pub fn classify_grid(
    bbox: GridBox,
    resolution: usize,
    classify: impl Fn(C64) -> Membership + Sync,
) -> Result<(GridDomain, Vec<Membership>)> {
    let base = GridDomain::from_bitmap(bbox, resolution, vec![false; resolution * resolution])?;
    let labels: Vec<Membership> =
        (0..resolution * resolution).into_par_iter().map(|k| classify(base.center_of_index(k))).collect();
    Ok((base, labels))
}

fn stats_of(labels: &[Membership]) -> ClassStats {
    let mut s = ClassStats::default();
    for l in labels {
        match l {
            Membership::Converges => s.converges += 1,
            Membership::Escapes => s.escapes += 1,
            Membership::Undecided => s.undecided += 1,
        }
    }
    s
}

/// 4-connected component of converging cells containing `seed`.
pub fn extract_component(
    bbox: GridBox,
    resolution: usize,
    seed: C64,
    classify: impl Fn(C64) -> Membership + Sync,
) -> Result<GridDomain> {
    let (base, labels) = classify_grid(bbox, resolution, classify)?;
    let (si, sj) = base
        .cell_of(seed)
        .ok_or(Error::OutOfDomain { what: "grid box", re: seed.re, im: seed.im })?;
    let start = base.index(si, sj);
    if labels[start] != Membership::Converges {
        return Err(Error::SeedNotConverging { re: seed.re, im: seed.im });
    }
    let open: Vec<bool> = labels.iter().map(|&l| l == Membership::Converges).collect();
    let membership = flood(&open, resolution, start, false);
    Ok(GridDomain { membership, stats: Some(stats_of(&labels)), ..base }.with_boundary_distance())
}

/// All converging cells, without component extraction.
pub fn extract_converging(
    bbox: GridBox,
    resolution: usize,
    classify: impl Fn(C64) -> Membership + Sync,
) -> Result<GridDomain> {
    let (base, labels) = classify_grid(bbox, resolution, classify)?;
    let membership = labels.iter().map(|&l| l == Membership::Converges).collect();
    Ok(GridDomain { membership, stats: Some(stats_of(&labels)), ..base }.with_boundary_distance())
}

/// Immediate basin of the attracting fixed point at the origin.
pub fn extract_immediate_basin(p: &Polynomial<f64>, bbox: GridBox, resolution: usize) -> Result<GridDomain> {
    let class = classify_fixed_point(p)?;
    match class.kind {
        FixedPointKind::Superattracting | FixedPointKind::Geometric => {}
        _ => return Err(Error::NotAttracting { modulus: class.multiplier.norm() }),
    }
    let params = MembershipParams::default();
    extract_component(bbox, resolution, Complex::new(0.0, 0.0), |z| membership_test(p, z, &params))
}

/// Immediate basin of a multiplier-one fixed point, seeded at a converging critical point.
/// Membership uses [`MembershipParams::parabolic`] and the result is flagged heuristic.
pub fn extract_parabolic_basin(p: &Polynomial<f64>, bbox: GridBox, resolution: usize) -> Result<GridDomain> {
    let class = classify_fixed_point(p)?;
    if class.kind != FixedPointKind::Parabolic {
        return Err(Error::InvalidParameter("fixed point is not parabolic".into()));
    }
    let params = MembershipParams::parabolic();
    let seed = p
        .critical_points()?
        .into_iter()
        .find(|&c| bbox.contains(c) && membership_test(p, c, &params) == Membership::Converges)
        .ok_or(Error::SeedNotConverging { re: 0.0, im: 0.0 })?;
    let mut d = extract_component(bbox, resolution, seed, |z| membership_test(p, z, &params))?;
    d.heuristic = true;
    Ok(d)
}

/// Slice `{w : (z0, w) converges}` of a skew product's basin.
pub fn extract_slice(map: &SkewMap<f64>, z0: C64, bbox: GridBox, resolution: usize) -> Result<GridDomain> {
    let params = MembershipParams::default();
    extract_converging(bbox, resolution, |w| space_membership(map, SpacePoint::new(z0, w), &params))
}

fn flood(open: &[bool], n: usize, start: usize, eight: bool) -> Vec<bool> {
    let mut seen = vec![false; open.len()];
    let mut queue = VecDeque::from([start]);
    seen[start] = true;
    while let Some(k) = queue.pop_front() {
        for nb in neighbors(k, n, eight) {
            if open[nb] && !seen[nb] {
                seen[nb] = true;
                queue.push_back(nb);
            }
        }
    }
    seen
}

fn neighbors(k: usize, n: usize, eight: bool) -> impl Iterator<Item = usize> {
    let (i, j) = ((k % n) as isize, (k / n) as isize);
    const FOUR: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    const DIAG: [(isize, isize); 4] = [(1, 1), (1, -1), (-1, 1), (-1, -1)];
    let extra: &'static [(isize, isize)] = if eight { &DIAG } else { &[] };
    FOUR.iter().chain(extra.iter()).filter_map(move |&(di, dj)| {
        let (a, b) = (i + di, j + dj);
        (a >= 0 && b >= 0 && a < n as isize && b < n as isize).then(|| (b as usize) * n + a as usize)
    })
}

/// Exact Euclidean distance transform (lower envelope of parabolas) of the complement,
/// with cells beyond the box counted as non-members. Returns center-to-center distance
/// minus half a cell, so members always get a positive value.
fn distance_to_complement(d: &GridDomain) -> Vec<f64> {
    let n = d.resolution;
    let m = n + 2;
    let (hx, hy) = (d.cell_width(), d.cell_height());
    let mut f = vec![f64::INFINITY; m * m];
    for j in 0..m {
        for i in 0..m {
            let border = i == 0 || j == 0 || i == m - 1 || j == m - 1;
            if border || !d.membership[(j - 1) * n + (i - 1)] {
                f[j * m + i] = 0.0;
            }
        }
    }
    let mut line = vec![0.0; m];
    for j in 0..m {
        line.copy_from_slice(&f[j * m..(j + 1) * m]);
        let out = edt_1d(&line, hx);
        f[j * m..(j + 1) * m].copy_from_slice(&out);
    }
    for i in 0..m {
        for j in 0..m {
            line[j] = f[j * m + i];
        }
        let out = edt_1d(&line, hy);
        for j in 0..m {
            f[j * m + i] = out[j];
        }
    }
    let half = 0.5 * hx.min(hy);
    let mut out = vec![0.0; n * n];
    for j in 0..n {
        for i in 0..n {
            if d.membership[j * n + i] {
                out[j * n + i] = f[(j + 1) * m + (i + 1)].sqrt() - half;
            }
        }
    }
    out
}

/// Squared distance transform of a sampled function on a line with spacing `h`.
fn edt_1d(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len();
    let h2 = h * h;
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = f.iter().position(|x| x.is_finite());
    let Some(first) = first else { return vec![f64::INFINITY; n] };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    let meet = |q: usize, p: usize| -> f64 {
        let (qf, pf) = (q as f64, p as f64);
        ((f[q] + h2 * qf * qf) - (f[p] + h2 * pf * pf)) / (2.0 * h2 * (qf - pf))
    };
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        let mut s = meet(q, v[k]);
        while s <= z[k] {
            k -= 1;
            s = meet(q, v[k]);
        }
        k += 1;
        v[k] = q;
        z[k] = s;
        z[k + 1] = f64::INFINITY;
    }
    let mut out = vec![0.0; n];
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let dq = q as f64 - v[k] as f64;
        *o = h2 * dq * dq + f[v[k]];
    }
    out
}

/// Fills the boundary-distance field of `d`.
pub fn boundary_distance_field(d: GridDomain) -> GridDomain {
    d.with_boundary_distance()
}

/// Number of 4-connected member components and of bounded 8-connected complement components.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ConnectivityReport {
    pub component_count: usize,
    pub hole_count: usize,
}

impl ConnectivityReport {
    pub fn simply_connected(&self) -> bool {
        self.component_count == 1 && self.hole_count == 0
    }
}

pub fn connectivity_report(d: &GridDomain) -> ConnectivityReport {
    let n = d.resolution;
    let members = &d.membership;
    let mut seen = vec![false; members.len()];
    let mut component_count = 0;
    for k in 0..members.len() {
        if members[k] && !seen[k] {
            component_count += 1;
            for (s, f) in seen.iter_mut().zip(flood(members, n, k, false)) {
                *s |= f;
            }
        }
    }
    let complement: Vec<bool> = members.iter().map(|&m| !m).collect();
    let mut seen = vec![false; members.len()];
    let mut hole_count = 0;
    for k in 0..members.len() {
        if complement[k] && !seen[k] {
            let comp = flood(&complement, n, k, true);
            let mut touches_edge = false;
            for (idx, (&c, s)) in comp.iter().zip(seen.iter_mut()).enumerate() {
                if c {
                    *s = true;
                    let (i, j) = (idx % n, idx / n);
                    touches_edge |= i == 0 || j == 0 || i == n - 1 || j == n - 1;
                }
            }
            if !touches_edge {
                hole_count += 1;
            }
        }
    }
    ConnectivityReport { component_count, hole_count }
}

/// Fraction of member cells whose center maps into the member set or one of its 8-neighbors.
pub fn forward_invariance_fraction(d: &GridDomain, f: impl Fn(C64) -> C64 + Sync) -> f64 {
    let n = d.resolution;
    let members: Vec<usize> = (0..n * n).filter(|&k| d.membership[k]).collect();
    if members.is_empty() {
        return 1.0;
    }
    let good = members
        .par_iter()
        .filter(|&&k| {
            let Some((i, j)) = d.cell_of(f(d.center_of_index(k))) else { return false };
            let idx = d.index(i, j);
            d.membership[idx] || neighbors(idx, n, true).any(|nb| d.membership[nb])
        })
        .count();
    good as f64 / members.len() as f64
}
