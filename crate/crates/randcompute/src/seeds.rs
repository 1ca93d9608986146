//! Deterministic seed derivation.
//!
//! A single user-facing seed is expanded into independent per-replica or
//! per-retry seeds with a counter-based split, so replica k of a run is
//! reproducible in isolation and adding replicas never perturbs earlier ones.

/// SplitMix64 finalizer; full-period permutation of `u64`.
#[must_use]
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derive the seed for logical stream `stream` from a base seed.
///
/// Distinct `(base, stream)` pairs give statistically independent seeds;
/// the same pair always gives the same seed.
#[must_use]
pub fn split(base: u64, stream: u64) -> u64 {
    splitmix64(base ^ splitmix64(stream.wrapping_add(0xA076_1D64_78BD_642F)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_deterministic_and_stream_sensitive() {
        assert_eq!(split(7, 0), split(7, 0));
        assert_ne!(split(7, 0), split(7, 1));
        assert_ne!(split(7, 0), split(8, 0));
        // counter-based: stream k is independent of whether k+1 is ever used
        let early = split(99, 3);
        let _ = split(99, 4);
        assert_eq!(early, split(99, 3));
    }

    #[test]
    fn splitmix_matches_reference_vector() {
        // reference output of SplitMix64 for seed 0 (first value)
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
