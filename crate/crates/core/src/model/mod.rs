//! Arrays of random variables, marginal laws, weights and normalizers.

pub mod array;
pub mod dist;
pub mod normalizing;
pub mod scan;
pub mod tail;
pub mod weights;

pub use array::{ArraySpec, Layout, RowDependence, RowLength, RowModel, Run, SequenceModel};
pub use dist::{CustomDist, DistSpec};
pub use normalizing::{NormalizingSequence, SvfForm};
pub use scan::{c0, row_weight_sum, scan_rows, weighted_row, C0Report, RowScan, ScanConfig};
pub use tail::{TailFunction, TailKind};
pub use weights::{CoefficientSource, NormalizerFlavor, WeightScheme};

/// Exact survival function of `|X|` for a cell law.
pub fn tail_of(spec: &DistSpec) -> TailFunction {
    spec.tail()
}
