use serde::Serialize;

use crate::types::{FeatureSubset, Instance};

/// Evidence attached to a negative answer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Witness {
    /// `f(composed) ≠ f(x)` where `composed = (x_S ; z_S̄)`.
    Completion { x: Instance, z: Instance, composed: Instance },
    /// `x` and `flipped` differ only in `feature`.
    Flip { x: Instance, feature: usize, flipped: Instance },
    /// A feature subset, reported as a sorted index array.
    Subset(FeatureSubset),
}

impl Witness {
    pub(crate) fn flip(x: Instance, feature: usize) -> Witness {
        let flipped = x.flipped(feature).expect("feature in range");
        Witness::Flip { x, feature, flipped }
    }

    pub(crate) fn completion(x: Instance, z: Instance, s: &FeatureSubset) -> Witness {
        let composed = crate::types::compose(&x, &z, s).expect("matching dimensions");
        Witness::Completion { x, z, composed }
    }
}
