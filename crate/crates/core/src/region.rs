use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointKind {
    Distortion,
    Relevance,
}

/// Successive decoding order. `Rd1` decodes agent 2 first (agent 1 enjoys
/// U2 as extra side information); `Rd2` swaps the roles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Permutation {
    Rd1,
    Rd2,
}

impl Permutation {
    pub fn label(self) -> &'static str {
        match self {
            Permutation::Rd1 => "RD1",
            Permutation::Rd2 => "RD2",
        }
    }
}

/// (R_1, …, R_K, D) or (R_1, …, R_K, Δ), all in nats.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub rates: Vec<f64>,
    pub value: f64,
    pub kind: PointKind,
    pub permutation: Permutation,
}

impl RegionPoint {
    pub fn distortion(rates: Vec<f64>, d: f64, permutation: Permutation) -> Self {
        RegionPoint { rates, value: d, kind: PointKind::Distortion, permutation }
    }

    pub fn sum_rate(&self) -> f64 {
        self.rates.iter().sum()
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.rates.iter().all(|r| r.is_finite())
    }

    /// Converts between D and Δ = h(X) − D; the map is its own inverse.
    pub fn flip_kind(&self, hx: f64) -> RegionPoint {
        let kind = match self.kind {
            PointKind::Distortion => PointKind::Relevance,
            PointKind::Relevance => PointKind::Distortion,
        };
        RegionPoint { rates: self.rates.clone(), value: hx - self.value, kind, permutation: self.permutation }
    }
}
