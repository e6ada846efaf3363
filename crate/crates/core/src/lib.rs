//! Numerical core for orbit shadowing in attracting basins of polynomial maps on C².
//!
//! The closed-form layers ([`polycore`], [`dynsys`], the exact distances in
//! [`hypmetric`], and the certificate scans in [`shadow`]) are generic over
//! [`Scalar`]. Rasterized domains, grid geodesics, preimage trees and the
//! lamination transport work in `f64`.

pub mod basin;
pub mod dynsys;
pub mod error;
pub mod hypmetric;
pub mod lamination;
pub mod polycore;
pub mod scalar;
pub mod shadow;

pub use basin::{GridBox, GridDomain};
pub use dynsys::{FiberForm, FixedPointKind, PlaneMap, ProductMap, SkewMap};
pub use error::{Error, Result};
pub use hypmetric::{CertificateKind, DistanceBound};
pub use polycore::{PlanePoint, Polynomial, SpacePoint};
pub use scalar::Scalar;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;
pub type Polynomial64 = Polynomial<f64>;
pub type Polynomial32 = Polynomial<f32>;
pub type SpacePoint64 = SpacePoint<f64>;
pub type SpacePoint32 = SpacePoint<f32>;
pub type ProductMap64 = ProductMap<f64>;
pub type ProductMap32 = ProductMap<f32>;
pub type SkewMap64 = SkewMap<f64>;
pub type SkewMap32 = SkewMap<f32>;
