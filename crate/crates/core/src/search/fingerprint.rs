//! Semantic hashing of expressions on fixed probe points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::expr::{EvalPoint, Expr};

const NONFINITE: u64 = 0x7ff8_dead_beef_0001;
const SNAP_TO_ZERO: f64 = 1e-12;

/// Quantizes `x` to about nine significant digits so values within roughly
/// 1e-9 relative of each other usually share a key.
#[inline]
pub fn quantize(x: f64) -> u64 {
    if !x.is_finite() {
        NONFINITE
    } else if x.abs() < SNAP_TO_ZERO {
        0
    } else {
        (x.to_bits().wrapping_add(1 << 21)) >> 22
    }
}

/// FNV-1a style mixing of 64-bit words.
#[derive(Clone, Copy)]
pub struct Mixer(u64);

impl Default for Mixer {
    fn default() -> Self {
        Mixer(0xcbf2_9ce4_8422_2325)
    }
}

impl Mixer {
    #[inline]
    pub fn push(&mut self, w: u64) {
        self.0 = (self.0 ^ w).wrapping_mul(0x0000_0100_0000_01b3);
        self.0 ^= self.0 >> 29;
    }

    pub fn finish(self) -> u64 {
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
}

/// Hash of the values of every root at every probe; probes where the
/// expression is undefined contribute a fixed marker, so the domain-error
/// pattern is part of the hash.
pub fn fingerprint(e: &Expr, probes: &[EvalPoint]) -> u64 {
    let mut h = Mixer::default();
    h.push(e.root_count() as u64);
    let mut buf = Vec::new();
    for p in probes {
        let vars = p.vars();
        match e.eval_nodes(&vars, &mut buf) {
            Ok(()) => {
                for &r in e.roots() {
                    h.push(quantize(buf[r as usize]));
                }
            }
            Err(_) => {
                for _ in e.roots() {
                    h.push(NONFINITE);
                }
            }
        }
    }
    h.finish()
}

/// `n` points drawn uniformly from the box `bounds` (`t` first), seeded.
pub fn box_probes(bounds: &[(f64, f64)], n: usize, seed: u64) -> Vec<EvalPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0f_9e0b);
    (0..n)
        .map(|_| {
            let mut v: Vec<f64> = bounds
                .iter()
                .map(|&(lo, hi)| if hi > lo { rng.random_range(lo..hi) } else { lo })
                .collect();
            let t = v.remove(0);
            EvalPoint::new(t, v)
        })
        .collect()
}
