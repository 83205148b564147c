//! Approximated Brunn-Minkowski inequalities `BM(N, h)` on finite metric
//! measure spaces.
//!
//! The crate is `no_std` (it needs `alloc`). It covers:
//!
//! - finite spaces, subsets, mass, dilation and cross-distance extremes
//!   ([`space`], [`subset`], [`measure`]);
//! - the `h`-approximated `s`-intermediate set ([`intermediate`]);
//! - evaluation of the dimensional and multiplicative inequalities, a seeded
//!   violation search and an exact check for tiny spaces ([`bm`]);
//! - grid discretizations of boxes and circles with closed-form cell masses
//!   ([`discretize`]);
//! - couplings, an exact transportation solver and the Markov transfer bound
//!   ([`coupling`]);
//! - declarative subset constructors ([`compact`]) and the replay of the
//!   stability argument on nested grids ([`stability`]).

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod bm;
pub mod compact;
pub mod coupling;
pub mod discretize;
pub mod error;
pub mod intermediate;
pub mod measure;
pub mod query;
pub mod space;
pub mod stability;
pub mod subset;

pub use error::{Error, Result};
pub use query::BMQuery;
pub use space::{FiniteMetricMeasureSpace, Metric};
pub use subset::{SpaceId, SubsetMask};
