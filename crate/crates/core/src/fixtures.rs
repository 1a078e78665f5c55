//! Hand-built instances.

use crate::model::Instance;

/// Three packets `(1,1,w1)`, `(1,2,w2)`, `(2,2,w2)` over two steps. With
/// `w1 < w2/φ`, MG and the offline optimum both send `2·w2`, while MLP sends
/// `w1` first and ends with `w1 + w2`.
pub fn hard_instance(w1: f64, w2: f64) -> Instance {
    Instance::from_triples(2, &[(1, 1, w1), (1, 2, w2), (2, 2, w2)]).expect("positive weights")
}
