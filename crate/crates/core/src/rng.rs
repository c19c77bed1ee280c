// Copyright 2026 The butterfly Developers
//
// Licensed under the Apache License, Version 2.0 (the "License"); you may not use this file except
// in compliance with the License. You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software distributed under the License
// is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express
// or implied. See the License for the specific language governing permissions and limitations under
// the License.

//! Seed derivation for reproducible parallel runs.
//!
//! A master seed and a domain tag are mixed with splitmix64 into a ChaCha8
//! key; each independent task (realization, Haar sample, grid point) then
//! uses its own ChaCha stream selected by index. Results therefore depend
//! only on `(master_seed, domain, index)` and never on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Domain tags keep streams of unrelated consumers disjoint.
pub mod domain {
    pub const HAAR_UNITARY: u64 = 0x4841_4152_5f55_0001;
    pub const HAAR_STATE: u64 = 0x4841_4152_5f53_0002;
    pub const COUPLINGS: u64 = 0x434f_5550_4c45_0003;
    pub const POSITIONS: u64 = 0x504f_5349_5449_0004;
    pub const CIRCUIT: u64 = 0x4349_5243_5549_0005;
    pub const GATES: u64 = 0x4741_5445_5300_0006;
    pub const MONTE_CARLO: u64 = 0x4d4f_4e54_4543_0007;
    pub const NOISE: u64 = 0x4e4f_4953_4500_0008;
}

#[inline]
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Generator for task `index` of `domain` under `master_seed`.
pub fn stream(master_seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut state = master_seed ^ domain.rotate_left(17);
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Derives a child seed, e.g. one disorder realization per grid point.
pub fn child_seed(master_seed: u64, domain: u64, index: u64) -> u64 {
    let mut state = master_seed ^ domain.rotate_left(29) ^ index.wrapping_mul(0xd134_2543_de82_ef95);
    splitmix64(&mut state)
}
