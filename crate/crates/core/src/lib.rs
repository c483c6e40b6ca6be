//! Exact discrete p-values, mid p-values and FDR control for binomial and
//! Fisher exact tests.
//!
//! The crate is organised bottom-up:
//!
//! - [`dist`]: exact null and alternative PMFs with rational masses
//! - [`pvalue`]: conventional, mid and randomized two-sided p-values
//! - [`procedure`]: step-up procedures, BH, adaptive BH and SARP
//! - [`bounds`]: sufficient conditions and FDR upper bounds for mid p-values
//! - [`oracle`]: exact FDR and power by enumeration
//! - [`sim`]: simulation studies
//! - [`io`]: count tables and run reports

pub mod bounds;
pub mod dist;
pub mod error;
pub mod exact;
pub mod io;
pub mod oracle;
pub mod procedure;
pub mod pvalue;
pub mod sim;

pub use dist::{ExactPmf, TestFamily};
pub use error::{Error, Result};
pub use procedure::{bh, Method, StepUpResult};
pub use pvalue::{Flavor, PValueRecord, PValueTable};
