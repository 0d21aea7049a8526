//! Randomness sources. Every random draw in the system goes through a
//! [`PoeRng`], so fixing a seed fixes keys, challenges, passwords and codes.

use std::sync::Mutex;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::digest::sha256_concat;

pub type PoeRng = ChaCha20Rng;

pub fn seeded(seed: u64) -> PoeRng {
    PoeRng::seed_from_u64(seed)
}

pub fn from_entropy() -> PoeRng {
    rand::make_rng()
}

/// Independent stream for one role under a shared run seed.
pub fn derive(seed: u64, label: &str) -> PoeRng {
    let d = sha256_concat(&[&seed.to_be_bytes(), label.as_bytes()]);
    PoeRng::from_seed(*d.as_bytes())
}

/// A generator shared by the sessions of one node.
#[derive(Debug)]
pub struct SharedRng(Mutex<PoeRng>);

impl SharedRng {
    pub fn new(rng: PoeRng) -> Self {
        Self(Mutex::new(rng))
    }

    pub fn fill(&self, buf: &mut [u8]) {
        self.0.lock().unwrap().fill_bytes(buf);
    }

    pub fn bytes<const N: usize>(&self) -> [u8; N] {
        let mut out = [0u8; N];
        self.fill(&mut out);
        out
    }

    /// Split off a child generator.
    pub fn fork(&self) -> PoeRng {
        PoeRng::from_seed(self.bytes())
    }
}

impl Default for SharedRng {
    fn default() -> Self {
        Self::new(from_entropy())
    }
}
