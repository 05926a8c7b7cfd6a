//! Co-design of a truck-charging microgrid: joint sizing of grid connection,
//! PV and hybrid energy storage together with their dispatch.
//!
//! The pipeline is
//!
//! 1. [`data`]: load historical price, demand and PV profiles and the storage
//!    catalog (or generate a demo dataset);
//! 2. [`scenario`]: cluster historical days, pick representatives and sample a
//!    synthetic period from a Markov chain over clusters;
//! 3. [`model`] and [`cost`]: assemble the total-cost-of-ownership linear
//!    program over the synthetic period;
//! 4. [`solver`]: solve it with the embedded bounded revised simplex, verify
//!    the solution, or export it as MPS;
//! 5. [`report`]: run experiment matrices and emit summaries and traces.

pub mod cost;
pub mod data;
pub mod error;
pub mod model;
pub mod par;
pub mod report;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use par::Execution;
