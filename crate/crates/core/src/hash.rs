//! 64-bit FNV-1a, used by the default embedder, the echo backend and the
//! completion transcript.

const OFFSET_BASIS: u64 = 0xcbf2_9ce4_8422_2325;
const PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(OFFSET_BASIS, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Lowercase, zero-padded 16 hex digit rendering of [`fnv1a64`].
pub fn fnv1a64_hex(text: &str) -> String {
    format!("{:016x}", fnv1a64(text.as_bytes()))
}
