//! Seeded random streams and the handful of inverse-CDF draws the crate needs.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent, reproducible stream `stream` under master seed `seed`.
///
/// Work split across replicates or batches draws from `stream(seed, index)`
/// so results do not depend on scheduling.
pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Well-mixed child seed for sub-task `index` (splitmix64 finaliser).
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform draw on the open interval (0, 1).
#[inline]
pub fn open01<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Open01)
}

/// Fréchet(`alpha`) draw `(-log U)^(-1/alpha)`.
#[inline]
pub fn frechet<R: Rng + ?Sized>(rng: &mut R, alpha: f64) -> f64 {
    let e = -open01(rng).ln();
    if alpha == 1.0 {
        1.0 / e
    } else if alpha == 2.0 {
        1.0 / e.sqrt()
    } else {
        e.powf(-1.0 / alpha)
    }
}

/// GPD(`sigma`, `xi`) excess draw by inversion.
#[inline]
pub fn gpd_excess<R: Rng + ?Sized>(rng: &mut R, sigma: f64, xi: f64) -> f64 {
    let e = -open01(rng).ln();
    if xi.abs() < crate::margins::XI_ZERO_TOL {
        sigma * e
    } else {
        sigma / xi * (xi * e).exp_m1()
    }
}
