//! Scenario files and presets.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! schema = "shadowlab.scenario/1"
//! name = "THM32_GEOM"
//! seed = 1
//! thresholds = [3.0, 5.0, 8.0]
//!
//! [map]
//! family = "product"                  # product | skew_square | skew_quadratic
//! p = [[0.0, 0.0], [0.3, 0.0], [1.0, 0.0]]   # ascending coefficients as [re, im]
//! q = [[0.0, 0.0], [0.3, 0.0], [1.0, 0.0]]
//!
//! [target]                            # root of the backward orbit
//! z = [0.0, 0.0]
//! w = [0.0, 0.0]
//!
//! [tree]
//! depth = 8
//! extra_depth = 2                     # stabilization check compares depth and depth + extra
//!
//! [probes]
//! stratified = 200                    # grid probes by boundary-distance stratum
//! delta_ladder = { base = 2.0, first = 3, last = 40 }   # δ = base^-j
//! leaf_deltas = [1e-3, 1e-9]          # approach to a boundary leaf
//! chain_depths = [8, 16]              # preimage-chain probes (z_N, 0)
//!
//! [grid]
//! half_width = 1.5
//! resolution = 512
//!
//! [leaf]                              # skew families only
//! generations = 25
//! ```
//!
//! `skew_square` takes `a` and denotes `(z², w² + a z)`; `skew_quadratic`
//! takes `a`, `b`, `c` and denotes `(a z + z², w² + c w + b z)`.

use serde::{Deserialize, Serialize};
use shadowlab_core::dynsys::classify_fixed_point;
use shadowlab_core::{FixedPointKind, Polynomial, ProductMap, SkewMap, SpacePoint, C64};

use crate::error::LabError;

pub const SCHEMA: &str = "shadowlab.scenario/1";

/// Complex number as `[re, im]`.
pub type Cx = [f64; 2];

pub fn cx(c: Cx) -> C64 {
    C64::new(c[0], c[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub description: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    pub map: MapSpec,
    pub target: TargetSpec,
    pub tree: TreeSpec,
    #[serde(default)]
    pub probes: ProbeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leaf: Option<LeafSpec>,
}

fn default_thresholds() -> Vec<f64> {
    vec![3.0, 5.0, 8.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapSpec {
    Product { p: Vec<Cx>, q: Vec<Cx> },
    SkewSquare { a: Cx },
    SkewQuadratic { a: Cx, b: Cx, c: Cx },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub z: Cx,
    pub w: Cx,
}

impl TargetSpec {
    pub fn point(&self) -> SpacePoint<f64> {
        SpacePoint::new(cx(self.z), cx(self.w))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreeSpec {
    pub depth: usize,
    #[serde(default)]
    pub extra_depth: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Ladder {
    pub base: f64,
    pub first: i32,
    pub last: i32,
}

impl Ladder {
    pub fn deltas(&self) -> Vec<f64> {
        (self.first..=self.last).map(|j| self.base.powi(-j)).collect()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stratified: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_ladder: Option<Ladder>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub leaf_deltas: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub chain_depths: Vec<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub half_width: f64,
    pub resolution: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeafSpec {
    pub generations: usize,
    /// Start graphs `w = (2/3) e^{iθ}` at this many equally spaced angles.
    #[serde(default = "one")]
    pub thetas: usize,
    pub sample_radius: f64,
    #[serde(default = "default_rays")]
    pub rays: usize,
    #[serde(default = "default_radii")]
    pub radii: usize,
    /// Samples per region-lemma inequality.
    #[serde(default)]
    pub lemma_samples: usize,
    /// Outer radius of the punctured disk; sampled from `|h|` over the basin when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default = "default_radius_samples")]
    pub radius_samples: usize,
    /// Leaf-ladder reference at `|h| =` this value over `z = 0`; the target otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_modulus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sheets: Option<SheetSpec>,
}

fn one() -> usize {
    1
}

fn default_rays() -> usize {
    shadowlab_core::lamination::SAMPLE_RAYS
}

fn default_radii() -> usize {
    shadowlab_core::lamination::SAMPLE_RADII
}

fn default_radius_samples() -> usize {
    2000
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SheetSpec {
    pub eta: f64,
    pub generation: usize,
    pub inner_generations: usize,
}

/// Which argument a scenario exercises, read off the map.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// `(z^m₁, w^m₂)`: closed-form polydisc certificates.
    SuperattractingProduct { m1: usize, m2: usize },
    /// Both coordinates geometrically attracting: boundedness scan.
    GeometricProduct,
    /// `(z^m, Q(w))` with `Q` geometric or parabolic: projection certificates.
    SuperattractingMixed { m: usize, parabolic: bool },
    /// `(z², w² + a z)` with `|a| < 3/16`: leaf certificates.
    LeafSquare,
    /// `(z², w² + a z)` with larger `|a|`: sheet products on a localized domain.
    LeafGeneral,
    /// `(a z + z², w² + c w + b z)`.
    LeafQuadratic,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::SuperattractingProduct { .. } => "SUPERATTRACTING_PRODUCT",
            Regime::GeometricProduct => "GEOMETRIC_PRODUCT",
            Regime::SuperattractingMixed { parabolic: false, .. } => "SUPERATTRACTING_GEOMETRIC",
            Regime::SuperattractingMixed { parabolic: true, .. } => "SUPERATTRACTING_PARABOLIC",
            Regime::LeafSquare => "SKEW_SQUARE_LEAF",
            Regime::LeafGeneral => "SKEW_SQUARE_SHEETS",
            Regime::LeafQuadratic => "SKEW_QUADRATIC_LEAF",
        }
    }
}

/// Largest `|a|` for which `{|z| < 1, |w| < 3/4}` is forward invariant.
pub const BIDISC_A_LIMIT: f64 = 3.0 / 16.0;

fn poly(c: &[Cx]) -> Result<Polynomial<f64>, LabError> {
    Polynomial::new(c.iter().map(|&x| cx(x)).collect()).map_err(|e| LabError::Validation(e.to_string()))
}

/// Exponent `m` when `p = z^m`.
fn monomial_degree(p: &Polynomial<f64>) -> Option<usize> {
    let d = p.degree();
    let lead = p.leading();
    let pure = p.coeffs()[..d].iter().all(|c| c.norm() == 0.0);
    (pure && lead == C64::new(1.0, 0.0)).then_some(d)
}

impl MapSpec {
    pub fn product_map(&self) -> Result<ProductMap<f64>, LabError> {
        match self {
            MapSpec::Product { p, q } => {
                ProductMap::new(poly(p)?, poly(q)?).map_err(|e| LabError::Validation(e.to_string()))
            }
            _ => Err(LabError::Validation("not a product map".into())),
        }
    }

    pub fn skew_map(&self) -> Result<SkewMap<f64>, LabError> {
        let m = match self {
            MapSpec::SkewSquare { a } => SkewMap::square(cx(*a)),
            MapSpec::SkewQuadratic { a, b, c } => SkewMap::quadratic(cx(*a), cx(*b), cx(*c)),
            MapSpec::Product { .. } => return Err(LabError::Validation("not a skew product".into())),
        };
        m.map_err(|e| LabError::Validation(e.to_string()))
    }

    pub fn family(&self) -> &'static str {
        match self {
            MapSpec::Product { .. } => "product",
            MapSpec::SkewSquare { .. } => "skew_square",
            MapSpec::SkewQuadratic { .. } => "skew_quadratic",
        }
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Validation(msg.into())
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    /// Checks the scenario and determines its regime.
    pub fn validate(&self) -> Result<Regime, LabError> {
        if self.schema != SCHEMA {
            return Err(invalid(format!("unsupported schema `{}`, expected `{SCHEMA}`", self.schema)));
        }
        if self.name.trim().is_empty() {
            return Err(invalid("empty scenario name"));
        }
        if self.thresholds.is_empty() || self.thresholds.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(invalid("thresholds must be finite and positive"));
        }
        if self.thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(invalid("thresholds must be strictly increasing"));
        }
        if !self.target.point().is_finite() {
            return Err(invalid("target must be finite"));
        }
        if let Some(g) = &self.grid {
            if !(g.half_width > 0.0 && g.half_width.is_finite()) || g.resolution < 16 {
                return Err(invalid("grid needs half_width > 0 and resolution >= 16"));
            }
        }
        if let Some(l) = &self.probes.delta_ladder {
            if !(l.base > 1.0) || l.first > l.last || l.base.powi(-l.first) >= 0.5 {
                return Err(invalid("delta ladder needs base > 1, first <= last, deltas below 1/2"));
            }
        }
        if self.probes.leaf_deltas.iter().any(|d| !(*d > 0.0 && *d < 0.5)) {
            return Err(invalid("leaf deltas must lie in (0, 1/2)"));
        }
        let regime = self.regime()?;
        let need = |ok: bool, what: &str| if ok { Ok(()) } else { Err(invalid(format!("{} needs {what}", regime.as_str()))) };
        match regime {
            Regime::SuperattractingProduct { .. } => {
                need(self.probes.delta_ladder.is_some(), "probes.delta_ladder")?;
                let (z, w) = (self.target.z, self.target.w);
                need(z == w && z[1] == 0.0 && z[0] > 0.0 && z[0] < 1.0, "a target (ε, ε) with 0 < ε < 1")?;
            }
            Regime::SuperattractingMixed { .. } => {
                need(self.probes.delta_ladder.is_some(), "probes.delta_ladder")?;
                let z = self.target.z;
                need(z[1] == 0.0 && z[0] >= 0.0 && z[0] < 1.0, "a target z-coordinate ε with 0 ≤ ε < 1")?;
                need(self.grid.is_some(), "grid")?;
            }
            Regime::GeometricProduct => {
                need(self.grid.is_some(), "grid")?;
                need(self.probes.stratified.is_some_and(|n| n > 0), "probes.stratified")?;
                need(self.target.point().max_norm() == 0.0, "the fixed point (0, 0) as target")?;
            }
            Regime::LeafSquare | Regime::LeafQuadratic | Regime::LeafGeneral => {
                let leaf = self.leaf.as_ref().ok_or_else(|| invalid(format!("{} needs [leaf]", regime.as_str())))?;
                need(leaf.generations >= 3, "leaf.generations >= 3")?;
                need(leaf.thetas >= 1 && leaf.rays >= 1 && leaf.radii >= 2, "positive leaf sampling")?;
                need(leaf.sample_radius > 0.0, "leaf.sample_radius > 0")?;
                need(leaf.radius.is_none_or(|r| r > 1.0), "leaf.radius > 1")?;
                need(self.grid.is_some(), "grid")?;
                if regime == Regime::LeafGeneral {
                    need(leaf.sheets.is_some(), "leaf.sheets")?;
                }
                if regime == Regime::LeafQuadratic {
                    need(!self.probes.chain_depths.is_empty(), "probes.chain_depths")?;
                } else {
                    need(self.probes.delta_ladder.is_some() || regime == Regime::LeafGeneral, "probes.delta_ladder")?;
                }
            }
        }
        Ok(regime)
    }

    fn regime(&self) -> Result<Regime, LabError> {
        match &self.map {
            MapSpec::Product { .. } => {
                let map = self.map.product_map()?;
                let kind = |p: &Polynomial<f64>| {
                    classify_fixed_point(p).map(|c| c.kind).map_err(|e| invalid(e.to_string()))
                };
                match (monomial_degree(map.p()), monomial_degree(map.q()), kind(map.q())?) {
                    (Some(m1), Some(m2), _) => Ok(Regime::SuperattractingProduct { m1, m2 }),
                    (Some(m), None, FixedPointKind::Geometric) => Ok(Regime::SuperattractingMixed { m, parabolic: false }),
                    (Some(m), None, FixedPointKind::Parabolic) => Ok(Regime::SuperattractingMixed { m, parabolic: true }),
                    (None, None, FixedPointKind::Geometric) if kind(map.p())? == FixedPointKind::Geometric => {
                        Ok(Regime::GeometricProduct)
                    }
                    _ => Err(invalid("unsupported product: need P = z^m with Q superattracting, geometric or parabolic, or both geometric")),
                }
            }
            MapSpec::SkewSquare { a } => {
                self.map.skew_map()?;
                Ok(if cx(*a).norm() < BIDISC_A_LIMIT { Regime::LeafSquare } else { Regime::LeafGeneral })
            }
            MapSpec::SkewQuadratic { .. } => {
                self.map.skew_map()?;
                Ok(Regime::LeafQuadratic)
            }
        }
    }
}

pub const PRESET_NAMES: [&str; 7] = [
    "THM31_SUPER",
    "THM32_GEOM",
    "THM33_MIXED_SUPER_GEOM",
    "THM33_PARABOLIC",
    "THM41_SKEW_SQUARE",
    "THM41_GENERAL_A",
    "THM42_SKEW_QUADRATIC",
];

fn re(x: f64) -> Cx {
    [x, 0.0]
}

fn base(name: &str, description: &str, map: MapSpec, target: (f64, f64), depth: usize) -> Scenario {
    Scenario {
        schema: SCHEMA.into(),
        name: name.into(),
        description: description.into(),
        seed: 1,
        thresholds: default_thresholds(),
        map,
        target: TargetSpec { z: re(target.0), w: re(target.1) },
        tree: TreeSpec { depth, extra_depth: 0 },
        probes: ProbeSpec::default(),
        grid: None,
        leaf: None,
    }
}

const BINARY_LADDER: Ladder = Ladder { base: 2.0, first: 3, last: 40 };
const LEAF_DELTAS: [f64; 4] = [1e-3, 1e-9, 1e-20, 1e-38];

pub fn preset(name: &str) -> Option<Scenario> {
    let square = vec![re(0.0), re(0.0), re(1.0)];
    let geometric = vec![re(0.0), re(0.3), re(1.0)];
    let s = match name {
        "THM31_SUPER" => {
            let mut s = base(
                name,
                "(z^2, w^2): polydisc certificates against the backward orbit of (eps, eps)",
                MapSpec::Product { p: square.clone(), q: square },
                (0.01, 0.01),
                60,
            );
            s.probes.delta_ladder = Some(BINARY_LADDER);
            s.grid = Some(GridSpec { half_width: 1.05, resolution: 512 });
            s
        }
        "THM32_GEOM" => {
            let mut s = base(
                name,
                "(z^2 + 0.3z, w^2 + 0.3w): empirical shadowing constant over stratified probes",
                MapSpec::Product { p: geometric.clone(), q: geometric },
                (0.0, 0.0),
                8,
            );
            s.tree.extra_depth = 2;
            s.probes.stratified = Some(200);
            s.grid = Some(GridSpec { half_width: 1.5, resolution: 512 });
            s
        }
        "THM33_MIXED_SUPER_GEOM" => {
            let mut s = base(
                name,
                "(z^2, w^2 + 0.3w): projection certificates against the backward orbit of (0, 0)",
                MapSpec::Product { p: square, q: geometric },
                (0.0, 0.0),
                60,
            );
            s.probes.delta_ladder = Some(BINARY_LADDER);
            s.grid = Some(GridSpec { half_width: 1.5, resolution: 256 });
            s
        }
        "THM33_PARABOLIC" => {
            let mut s = base(
                name,
                "(z^2, w^2 + w): projection certificates with a parabolic second coordinate",
                MapSpec::Product { p: square, q: vec![re(0.0), re(1.0), re(1.0)] },
                (0.0, -0.01),
                60,
            );
            s.probes.delta_ladder = Some(BINARY_LADDER);
            s.grid = Some(GridSpec { half_width: 1.5, resolution: 256 });
            s
        }
        "THM41_SKEW_SQUARE" => {
            let mut s = base(
                name,
                "(z^2, w^2 + 0.1z): boundary leaf through w = 1 over z = 0",
                MapSpec::SkewSquare { a: re(0.1) },
                (0.01, 0.0),
                6,
            );
            s.probes.delta_ladder = Some(BINARY_LADDER);
            s.probes.leaf_deltas = LEAF_DELTAS.to_vec();
            s.grid = Some(GridSpec { half_width: 1.05, resolution: 512 });
            s.leaf = Some(LeafSpec {
                generations: 25,
                thetas: 1,
                sample_radius: 0.99,
                rays: default_rays(),
                radii: default_radii(),
                lemma_samples: 100_000,
                radius: None,
                radius_samples: default_radius_samples(),
                reference_modulus: Some(0.3),
                sheets: None,
            });
            s
        }
        "THM41_GENERAL_A" => {
            let mut s = base(
                name,
                "(z^2, w^2 + 0.5z): sheet-product certificates on a localized domain",
                MapSpec::SkewSquare { a: re(0.5) },
                (0.01, 0.0),
                4,
            );
            s.probes.leaf_deltas = LEAF_DELTAS.to_vec();
            s.grid = Some(GridSpec { half_width: 1.05, resolution: 256 });
            s.leaf = Some(LeafSpec {
                generations: 25,
                thetas: 1,
                sample_radius: 0.99,
                rays: default_rays(),
                radii: default_radii(),
                lemma_samples: 100_000,
                radius: None,
                radius_samples: default_radius_samples(),
                reference_modulus: Some(0.3),
                sheets: Some(SheetSpec { eta: 0.05, generation: 3, inner_generations: 40 }),
            });
            s
        }
        "THM42_SKEW_QUADRATIC" => {
            let mut s = base(
                name,
                "(0.1z + z^2, w^2 + 0.01w + 0.001z): probes (z_N, 0) over a preimage chain of -a",
                MapSpec::SkewQuadratic { a: re(0.1), b: re(0.001), c: re(0.01) },
                (0.0, 0.0),
                6,
            );
            s.probes.leaf_deltas = LEAF_DELTAS.to_vec();
            s.probes.chain_depths = vec![8, 16, 24, 32, 40, 48];
            s.grid = Some(GridSpec { half_width: 1.6, resolution: 1024 });
            s.leaf = Some(LeafSpec {
                generations: 15,
                thetas: 32,
                sample_radius: 0.8,
                rays: 64,
                radii: 16,
                lemma_samples: 100_000,
                radius: None,
                radius_samples: default_radius_samples(),
                reference_modulus: None,
                sheets: None,
            });
            s
        }
        _ => return None,
    };
    Some(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate_and_round_trip() {
        let expected = [
            Regime::SuperattractingProduct { m1: 2, m2: 2 },
            Regime::GeometricProduct,
            Regime::SuperattractingMixed { m: 2, parabolic: false },
            Regime::SuperattractingMixed { m: 2, parabolic: true },
            Regime::LeafSquare,
            Regime::LeafGeneral,
            Regime::LeafQuadratic,
        ];
        for (name, regime) in PRESET_NAMES.iter().zip(expected) {
            let s = preset(name).unwrap();
            assert_eq!(s.validate().unwrap(), regime, "{name}");
            let back = Scenario::from_toml(&s.to_toml()).unwrap();
            assert_eq!(back, s);
        }
        assert!(preset("THM99").is_none());
    }

    #[test]
    fn rejects_bad_scenarios() {
        let mut s = preset("THM32_GEOM").unwrap();
        s.thresholds = vec![3.0, 3.0];
        assert!(s.validate().is_err());
        let mut s = preset("THM32_GEOM").unwrap();
        s.schema = "shadowlab.scenario/0".into();
        assert!(s.validate().is_err());
        let mut s = preset("THM32_GEOM").unwrap();
        s.map = MapSpec::Product { p: vec![re(0.1), re(1.0), re(1.0)], q: vec![re(0.0), re(0.3), re(1.0)] };
        assert!(s.validate().is_err());
        let mut s = preset("THM31_SUPER").unwrap();
        s.probes.delta_ladder = None;
        assert!(s.validate().is_err());
        assert!(Scenario::from_toml("schema = 1").is_err());
        let text = preset("THM31_SUPER").unwrap().to_toml().replace("[tree]", "[tree]\nbogus = 1");
        assert!(Scenario::from_toml(&text).is_err());
    }
}
