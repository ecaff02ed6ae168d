//! Test support: a naive reference replay, a generator of valid session
//! logs, brute-force versions of the text measures and chain rules, a
//! generator of valid schemas, and the assertions built on them.

pub mod checks;
pub mod generate;
pub mod naive;
pub mod oracles;
pub mod schemas;
pub mod script;

pub use generate::{random_log, GenLimits};
pub use naive::NaiveReplay;
pub use schemas::random_schema;
pub use script::Script;
