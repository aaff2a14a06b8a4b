//! Agreement between objective metric scores and subjective MOS: a
//! five-parameter logistic mapping followed by PLCC, plus SROCC on the raw
//! scores, per distortion subset and overall.

mod corr;
mod fit;
mod report;

pub use corr::{mid_ranks, plcc, srocc};
pub use fit::{fit_logistic, logistic5, LogisticFit, MAX_ITERATIONS, RELATIVE_TOLERANCE};
pub use report::{build_report, CorrelationReport, CorrelationRow, Subset};

#[cfg(test)]
mod tests;
