//! Deterministic seed derivation.
//!
//! Every randomized stage owns a numbered stream; per-item seeds derive from
//! `(master seed, stream, item index)` so that parallel execution order can
//! never change results.

/// Well-known stream tags. Each randomized subsystem draws from its own
/// stream so that, e.g., adding a search trial never shifts cohort sampling.
pub mod streams {
    pub const ATLAS_REGION: u64 = 0x01;
    pub const COHORT_BASE_COV: u64 = 0x02;
    pub const COHORT_SUBJECT: u64 = 0x03;
    pub const SPLIT: u64 = 0x04;
    pub const KFOLD: u64 = 0x05;
    pub const SEARCH_TRIAL: u64 = 0x06;
    pub const TRAIN_FOLD: u64 = 0x07;
    pub const PFI_FEATURE: u64 = 0x08;
    pub const FINAL_TRAIN: u64 = 0x09;
    pub const TRAIN_SHUFFLE: u64 = 0x0a;
    pub const TRAIN_DROPOUT: u64 = 0x0b;
    pub const SEARCH_CONFIG: u64 = 0x0c;
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a child seed from a parent seed and a stream tag.
pub fn derive(parent: u64, stream: u64) -> u64 {
    mix(parent
        .wrapping_add(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(stream.wrapping_mul(0xd134_2543_de82_ef95)))
}

/// Derive a per-item seed within a stream: `derive(derive(parent, stream), index)`.
pub fn derive_item(parent: u64, stream: u64, index: u64) -> u64 {
    derive(derive(parent, stream), index)
}
