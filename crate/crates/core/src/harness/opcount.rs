use serde::{Deserialize, Serialize};

use crate::linear::{op_count_mmse, op_count_qubo, reduction_ratio, OperationCounts};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpCountRow {
    pub antennas: usize,
    pub streams: usize,
    pub mmse: OperationCounts,
    pub qubo: OperationCounts,
    pub reduction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpCountReport {
    pub rows: Vec<OpCountRow>,
    /// Mean reduction over all rows; `None` for an empty report.
    pub average_reduction: Option<f64>,
}

/// Evaluate the operation-count models for complex `(antennas, streams)`
/// sizes, i.e. `m = 2 * antennas`, `k = 2 * streams`.
pub fn report_op_counts(configs: &[(usize, usize)]) -> OpCountReport {
    let rows: Vec<OpCountRow> = configs
        .iter()
        .map(|&(antennas, streams)| {
            let (m, k) = (2 * antennas, 2 * streams);
            OpCountRow {
                antennas,
                streams,
                mmse: op_count_mmse(m, k),
                qubo: op_count_qubo(m, k),
                reduction: reduction_ratio(m, k),
            }
        })
        .collect();
    let average_reduction = (!rows.is_empty())
        .then(|| rows.iter().map(|r| r.reduction).sum::<f64>() / rows.len() as f64);
    OpCountReport {
        rows,
        average_reduction,
    }
}
