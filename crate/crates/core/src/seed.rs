//! Deterministic seed derivation for replications.

/// SplitMix64 finaliser.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of replication `rep` derived from `base`. Distinct `(base, rep)`
/// pairs give statistically unrelated streams.
pub fn replicate_seed(base: u64, rep: u64) -> u64 {
    mix64(base ^ mix64(rep.wrapping_add(1)))
}

/// Seed for a named sub-stream, e.g. calibration vs. population draws.
pub fn stream_seed(base: u64, tag: &str) -> u64 {
    tag.bytes()
        .fold(mix64(base), |acc, b| mix64(acc ^ u64::from(b)))
}
