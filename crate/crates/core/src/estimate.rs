use serde::{Deserialize, Serialize};

/// Which side of the true constant an estimate lies on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sidedness {
    /// A supremum over finitely many samples: never above the true value.
    LowerEstimateOfSup,
    /// A feasible value for an infimum: never below the true value.
    UpperBoundOfInf,
    /// Closed-form evaluation.
    Exact,
}

/// A sampled constant with its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub value: f64,
    pub samples: usize,
    pub seed: u64,
    pub sidedness: Sidedness,
}

impl ConstantEstimate {
    pub fn sup(value: f64, samples: usize, seed: u64) -> Self {
        ConstantEstimate { value, samples, seed, sidedness: Sidedness::LowerEstimateOfSup }
    }

    pub fn inf(value: f64, samples: usize, seed: u64) -> Self {
        ConstantEstimate { value, samples, seed, sidedness: Sidedness::UpperBoundOfInf }
    }
}
