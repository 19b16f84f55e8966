//! Counter-based random substreams.
//!
//! Every (replica, layer, component) triple gets its own ChaCha stream keyed
//! by the master seed, so results do not depend on the order in which work is
//! scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

pub type StreamRng = ChaCha12Rng;

/// Layer id reserved for resampling streams.
pub const BOOTSTRAP_LAYER: u32 = 0xFFFF;
/// Layer id reserved for streams outside the cascade.
pub const AUX_LAYER: u32 = 0xFFFE;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(master: u64) -> [u8; 32] {
    let mut state = master;
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// Stream for one replica, layer and superposition component.
///
/// Panics if `layer` or `component` does not fit in 16 bits or `replica` in 32.
pub fn substream(master: u64, replica: u64, layer: u32, component: u32) -> StreamRng {
    assert!(replica < (1 << 32), "replica id must fit in 32 bits");
    assert!(layer < (1 << 16) && component < (1 << 16), "layer and component ids must fit in 16 bits");
    let mut rng = ChaCha12Rng::from_seed(key_from_seed(master));
    rng.set_stream((replica << 32) | (u64::from(layer) << 16) | u64::from(component));
    rng
}

/// Stream for standalone draws not tied to a cascade position.
pub fn aux_stream(master: u64, index: u32) -> StreamRng {
    substream(master, 0, AUX_LAYER, index & 0xFFFF)
}
