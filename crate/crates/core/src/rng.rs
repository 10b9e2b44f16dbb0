//! Counter-based random streams.
//!
//! A [`StreamKey`] is a 64-bit master seed plus a path of integer labels.
//! Child keys are derived by hashing, so any stream (trial 17, prover B,
//! share copy for round 3) can be recreated without touching its siblings.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// Labels used when splitting a debate's stream.
pub mod label {
    pub const TRIAL: u64 = 1;
    pub const PROVER_A: u64 = 2;
    pub const PROVER_B: u64 = 3;
    pub const VERIFIER: u64 = 4;
    pub const COPY_OF_A: u64 = 5;
    pub const COPY_OF_B: u64 = 6;
    pub const ORACLE: u64 = 7;
    pub const SUBPROTOCOL: u64 = 8;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamKey {
    state: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl StreamKey {
    pub fn new(seed: u64) -> Self {
        Self {
            state: splitmix64(seed ^ 0x6a09_e667_f3bc_c908),
        }
    }

    pub fn child(self, label: u64) -> Self {
        Self {
            state: splitmix64(self.state.rotate_left(17) ^ splitmix64(label)),
        }
    }

    pub fn path(self, labels: &[u64]) -> Self {
        labels.iter().fold(self, |k, &l| k.child(l))
    }

    pub fn rng(self) -> StreamRng {
        let mut seed = [0u8; 32];
        let mut s = self.state;
        for chunk in seed.chunks_mut(8) {
            s = splitmix64(s);
            chunk.copy_from_slice(&s.to_le_bytes());
        }
        ChaCha12Rng::from_seed(seed)
    }

    /// A 64-bit digest, handy as a reproduction seed in reports.
    pub fn digest(self) -> u64 {
        self.state
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn children_are_distinct_and_reproducible() {
        let k = StreamKey::new(7);
        assert_ne!(k.child(1), k.child(2));
        assert_eq!(k.path(&[1, 2]), k.child(1).child(2));
        assert_ne!(k.path(&[1, 2]), k.path(&[2, 1]));
        let a: u64 = k.child(3).rng().random();
        let b: u64 = k.child(3).rng().random();
        assert_eq!(a, b);
    }
}
