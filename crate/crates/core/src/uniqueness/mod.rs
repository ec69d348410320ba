//! Uniqueness criteria on mixed spectral data.

pub mod corollary;
pub mod counting;
pub mod dataset;
pub mod jensen;
pub mod lemmas;
pub mod system;

pub use corollary::{corollary_check, CorollaryId, CorollaryInput, CorollaryReport};
pub use counting::{criterion_margin, CountingReport, Verdict};
pub use dataset::{EigenRecord, MixedDataset};
pub use jensen::{jensen_audit, jensen_audit_pair, JensenAudit};
pub use system::{build_system, closedness_diagnostic, FunctionSystem};
