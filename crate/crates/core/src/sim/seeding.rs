//! Run seeds.
//!
//! Run `k` of policy `name` under master seed `m` uses
//!
//! ```text
//! splitmix64(splitmix64(splitmix64(m) ^ fnv1a64(name)) ^ k)
//! ```
//!
//! so any single run can be replayed without the others, and different
//! policies draw from unrelated environment streams. Within a run, arm `j`
//! draws from `ChaCha8Rng::seed_from_u64(run_seed)` on stream `j`.

/// One round of the splitmix64 output function (with its increment).
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// 64-bit FNV-1a.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn run_seed(master: u64, policy: &str, run: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ fnv1a64(policy.as_bytes())) ^ run)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // First output of the reference splitmix64 generator seeded with 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(fnv1a64(b""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(fnv1a64(b"a"), 0xaf63_dc4c_8601_ec8c);
    }

    #[test]
    fn distinct_streams() {
        let a = run_seed(7, "cee", 0);
        assert_eq!(a, run_seed(7, "cee", 0));
        assert_ne!(a, run_seed(7, "cee", 1));
        assert_ne!(a, run_seed(7, "rca", 0));
        assert_ne!(a, run_seed(8, "cee", 0));
    }
}
