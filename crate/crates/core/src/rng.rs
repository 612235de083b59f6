//! Keyed random streams.
//!
//! Every random draw in the library is taken from a ChaCha stream addressed
//! by a [`Domain`] and up to four integer coordinates (for example
//! individual, haplotype side, group and replicate). Streams are independent
//! of one another and of the order in which they are created, so parallel
//! work reproduces the sequential result draw for draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Purpose tag mixed into every stream id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Domain {
    GlobalTwin = 1,
    LocalTwin = 2,
    Posterior = 3,
    ModifiedTwin = 4,
    Ties = 5,
    Founders = 6,
    Offspring = 7,
    Phenotype = 8,
    CrossValidation = 9,
    Permutation = 10,
    Calibration = 11,
    Design = 12,
}

#[derive(Clone, Debug)]
pub struct Streams {
    seed: u64,
    key: [u8; 32],
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Streams {
    pub fn new(seed: u64) -> Self {
        let mut state = seed;
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        Streams { seed, key }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Derives an unrelated family of streams, e.g. one per simulation
    /// replicate.
    pub fn child(&self, index: u64) -> Streams {
        let mut state = self.seed ^ 0xD1B5_4A32_D192_ED03;
        let a = splitmix64(&mut state);
        let mut mixed = a ^ index.wrapping_mul(0xA24B_AED4_963E_E407);
        Streams::new(splitmix64(&mut mixed))
    }

    pub fn stream(&self, domain: Domain, coords: [u64; 4]) -> ChaCha8Rng {
        let mut state = domain as u64;
        let mut id = splitmix64(&mut state);
        for c in coords {
            state ^= c.wrapping_add(0x6A09_E667_F3BC_C909);
            id ^= splitmix64(&mut state);
        }
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(id);
        rng
    }
}
