//! The seeded block shuffle and its padding-free closed-form moments.

use rand_core::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

use super::vector::GradientVector;

/// Block size and seed for one shuffle draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShuffleParams {
    pub block_size: usize,
    pub seed: u64,
}

fn check_block_size(beta: usize, dim: usize) -> Result<()> {
    if beta < 1 || beta > dim {
        return Err(Error::BlockSizeOutOfRange { beta, dim });
    }
    Ok(())
}

/// Apply the block permutation `perm` to the flattened, zero-padded
/// components and trim back to the original length.
pub(crate) fn apply_block_permutation(
    components: &[f64],
    beta: usize,
    perm: &[usize],
) -> Vec<f64> {
    let d = components.len();
    let m = perm.len();
    debug_assert_eq!(m, d.div_ceil(beta));
    let mut out = Vec::with_capacity(d);
    for &source_block in perm {
        let start = source_block * beta;
        for offset in 0..beta {
            if out.len() == d {
                break;
            }
            let idx = start + offset;
            // Indices past the input length are zero padding.
            out.push(if idx < d { components[idx] } else { 0.0 });
        }
    }
    out
}

/// Shuffle the gradient's blocks with a caller-supplied random stream.
///
/// Flattens, zero-pads to a multiple of `beta`, partitions into
/// `ceil(d / beta)` blocks, permutes the block order uniformly at random
/// (unbiased Fisher–Yates on the block indices), then flattens, trims to the
/// original length, and restores the shape. When `beta = d` there is a single
/// block and the output equals the input.
pub fn block_shuffle_in<R: RngCore + ?Sized>(
    g: &GradientVector,
    beta: usize,
    rng: &mut R,
) -> Result<GradientVector> {
    let d = g.dim();
    check_block_size(beta, d)?;
    let m = d.div_ceil(beta);
    let mut perm: Vec<usize> = (0..m).collect();
    rng::fisher_yates(&mut perm, rng);
    let out = apply_block_permutation(g.components(), beta, &perm);
    Ok(GradientVector::from_validated(out, g.shape().to_vec()))
}

/// Seeded block shuffle: deterministic for a fixed `(gradient, params)` pair.
pub fn block_shuffle(g: &GradientVector, params: ShuffleParams) -> Result<GradientVector> {
    let mut rng = rng::stream(&[params.seed]);
    block_shuffle_in(g, params.block_size, &mut rng)
}

/// Exact per-component mean of the shuffled gradient in the padding-free
/// regime: entry `i` is the average of the input components that share `i`'s
/// within-block offset.
///
/// Requires `beta | d`; padding would make the closed form invalid.
pub fn per_offset_expectation(g: &GradientVector, beta: usize) -> Result<GradientVector> {
    let d = g.dim();
    check_block_size(beta, d)?;
    if !d.is_multiple_of(beta) {
        return Err(Error::BlockSizeNotDivisor { beta, dim: d });
    }
    let m = d / beta;
    let offset_means = offset_means(g.components(), beta, m);
    let out = (0..d).map(|i| offset_means[i % beta]).collect();
    Ok(GradientVector::from_validated(out, g.shape().to_vec()))
}

/// Exact per-component variance of the shuffled gradient in the padding-free
/// regime: entry `i` is the population variance of the input components
/// sharing `i`'s within-block offset.
pub fn exact_shuffle_variance(g: &GradientVector, beta: usize) -> Result<GradientVector> {
    let d = g.dim();
    check_block_size(beta, d)?;
    if !d.is_multiple_of(beta) {
        return Err(Error::BlockSizeNotDivisor { beta, dim: d });
    }
    let m = d / beta;
    let means = offset_means(g.components(), beta, m);
    let mut variances = vec![0.0; beta];
    for (offset, variance) in variances.iter_mut().enumerate() {
        let mut acc = 0.0;
        for block in 0..m {
            let dev = g.components()[block * beta + offset] - means[offset];
            acc += dev * dev;
        }
        *variance = acc / m as f64;
    }
    let out = (0..d).map(|i| variances[i % beta]).collect();
    Ok(GradientVector::from_validated(out, g.shape().to_vec()))
}

fn offset_means(components: &[f64], beta: usize, m: usize) -> Vec<f64> {
    let mut means = vec![0.0; beta];
    for (offset, mean) in means.iter_mut().enumerate() {
        let mut acc = 0.0;
        for block in 0..m {
            acc += components[block * beta + offset];
        }
        *mean = acc / m as f64;
    }
    means
}
