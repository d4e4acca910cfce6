//! Seeded tiny training problems small enough for exhaustive search.

use rand::Rng;

use crate::dataset::{rng_from_seed, BinaryDataset, Instance};
use crate::encoder::{EncodingLayout, Hyperparams};
use crate::model_ir::VarId;

pub const MAX_FEATURES: usize = 3;
pub const MAX_CLASSES: usize = 3;
pub const MAX_INSTANCES: usize = 4;

/// `(alpha, beta)` pairs drawn by [`tiny_instance`].
pub const HYPERPARAMS: [(i64, i64); 3] = [(1, 2), (2, 5), (5, 10)];

#[derive(Debug, Clone)]
pub struct TinyInstance {
    pub seed: u64,
    pub train: BinaryDataset,
    pub hp: Hyperparams,
}

/// `1..=3` features, `2..=3` classes, `2..=4` instances.
pub fn tiny_instance(seed: u64) -> TinyInstance {
    let mut rng = rng_from_seed(seed);
    let f = rng.gen_range(1..=MAX_FEATURES);
    let c = rng.gen_range(2..=MAX_CLASSES);
    let n = rng.gen_range(2..=MAX_INSTANCES);
    let instances = (0..n)
        .map(|_| Instance {
            x: (0..f).map(|_| rng.gen_bool(0.5)).collect(),
            label: rng.gen_range(0..c),
        })
        .collect();
    let (alpha, beta) = HYPERPARAMS[rng.gen_range(0..HYPERPARAMS.len())];
    TinyInstance {
        seed,
        train: BinaryDataset::new(instances, f, c).expect("generated within bounds"),
        hp: Hyperparams::from_integers(alpha, beta).expect("positive"),
    }
}

pub fn tiny_suite(count: usize) -> Vec<TinyInstance> {
    (0..count as u64).map(tiny_instance).collect()
}

/// Weight and bias variables, the set the oracle must enumerate for a
/// direct (non-quantized) encoding.
pub fn oracle_variables(layout: &EncodingLayout) -> Vec<VarId> {
    let mut vars: Vec<VarId> = layout.weight_vars().collect();
    vars.extend(layout.bias_vars());
    vars
}
