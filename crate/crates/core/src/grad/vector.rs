//! The gradient container and its scalar summaries.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A flat real-valued gradient together with its original tensor shape.
///
/// Construction validates that every component is finite and that the shape
/// product matches the component count, so downstream code never has to
/// re-check either.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGradient")]
pub struct GradientVector {
    components: Vec<f64>,
    shape: Vec<usize>,
}

#[derive(Deserialize)]
struct RawGradient {
    components: Vec<f64>,
    shape: Vec<usize>,
}

impl TryFrom<RawGradient> for GradientVector {
    type Error = Error;
    fn try_from(raw: RawGradient) -> Result<Self> {
        GradientVector::new(raw.components, raw.shape)
    }
}

impl GradientVector {
    pub fn new(components: Vec<f64>, shape: Vec<usize>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::EmptyGradient);
        }
        for (index, &value) in components.iter().enumerate() {
            if !value.is_finite() {
                return Err(Error::NonFiniteComponent { index, value });
            }
        }
        let product: usize = shape.iter().product();
        if shape.is_empty() || shape.contains(&0) || product != components.len() {
            return Err(Error::ShapeMismatch {
                product,
                len: components.len(),
            });
        }
        Ok(Self { components, shape })
    }

    /// One-dimensional gradient with shape `[len]`.
    pub fn flat(components: Vec<f64>) -> Result<Self> {
        let len = components.len();
        Self::new(components, vec![len])
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn into_components(self) -> Vec<f64> {
        self.components
    }

    /// Internal constructor for values already known to satisfy the
    /// invariants (permutations and rescalings of validated gradients).
    pub(crate) fn from_validated(components: Vec<f64>, shape: Vec<usize>) -> Self {
        debug_assert_eq!(shape.iter().product::<usize>(), components.len());
        Self { components, shape }
    }

    /// L2 norm, summed in sorted order so permutations of the same multiset
    /// produce the bit-identical norm (clipping must commute with shuffling
    /// exactly, not just to rounding).
    pub fn l2_norm(&self) -> f64 {
        let mut squares: Vec<f64> = self.components.iter().map(|x| x * x).collect();
        squares.sort_unstable_by(f64::total_cmp);
        squares.iter().sum::<f64>().sqrt()
    }
}

/// Norm, mean, and population variance of a gradient's components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradientStats {
    pub l2_norm: f64,
    pub mean: f64,
    /// Population variance: divisor `d`, not `d - 1`.
    pub variance: f64,
}

/// Scalar summaries of the components: `l2_norm = sqrt(sum x_i^2)`,
/// `mean = sum x_i / d`, `variance = sum (x_i - mean)^2 / d`.
pub fn stats(g: &GradientVector) -> GradientStats {
    let d = g.dim() as f64;
    let l2_norm = g.l2_norm();
    let mean = g.components().iter().sum::<f64>() / d;
    let variance = g
        .components()
        .iter()
        .map(|x| {
            let dev = x - mean;
            dev * dev
        })
        .sum::<f64>()
        / d;
    GradientStats {
        l2_norm,
        mean,
        variance,
    }
}

/// Rescale `g` to L2 norm at most `clip_value`: `g * min(1, C / ||g||)`.
///
/// A gradient already inside the ball is returned bit-for-bit unchanged,
/// which also covers the zero vector.
pub fn clip(g: &GradientVector, clip_value: f64) -> Result<GradientVector> {
    if !clip_value.is_finite() || clip_value <= 0.0 {
        return Err(Error::InvalidClip(clip_value));
    }
    let norm = g.l2_norm();
    if norm <= clip_value {
        return Ok(g.clone());
    }
    let factor = clip_value / norm;
    let components = g.components().iter().map(|x| x * factor).collect();
    Ok(GradientVector::from_validated(
        components,
        g.shape().to_vec(),
    ))
}
