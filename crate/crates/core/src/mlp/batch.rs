use super::NetworkError;
use crate::matrix::Matrix;

/// Paired inputs (fixed-subset readings) and targets (moved-subset readings),
/// one sample per row, in normalized units.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl SampleBatch {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self, NetworkError> {
        if inputs.rows() != targets.rows() {
            return Err(NetworkError::Dimension {
                what: "target rows",
                expected: inputs.rows(),
                found: targets.rows(),
            });
        }
        Ok(Self { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> SampleBatch {
        SampleBatch {
            inputs: self.inputs.select_rows(rows),
            targets: self.targets.select_rows(rows),
        }
    }
}
