//! Exact-arithmetic constructions and checks for highest-weight module
//! theory at rank <= 2: root data, Weyl combinatorics, formal characters,
//! divided-power hyperalgebras, weight-truncated modules, twisting functors,
//! BGG / Cousin complexes and the rank-1 quantum picture.
//!
//! Everything is computed over exact scalars (rationals, prime fields,
//! integer Laurent polynomials); there is no floating point anywhere.

pub mod bgg;
pub mod charring;
pub mod chevalley;
pub mod error;
pub mod hyperalgebra;
pub mod linalg;
pub mod modules;
pub mod quantum;
pub mod rootdata;
pub mod scalar;
pub mod twisting;
pub mod weyl;

pub use error::{Error, Result};
pub use rootdata::{build_root_datum, RootDatum, RootVec, TypeLabel, Weight};
pub use weyl::{enumerate_weyl, BruhatPoset, WeylElement};
