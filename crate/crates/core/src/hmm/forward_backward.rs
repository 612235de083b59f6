use std::ops::Range;

use super::{check_lengths, kernel, GeneticMap, HaplotypePair, HmmParams, Strand};
use crate::error::{Error, Result};

/// Scaled forward and backward weights for one transmitted haplotype.
///
/// `forward[j]` is `alpha_j / (c_1 ... c_j)` and sums to one over the two
/// states; `backward[j]` is `beta_j / (c_{j+1} ... c_p)`. The per-site
/// scaling factors are kept as logarithms, so the likelihood is
/// `exp(sum(log_scale))` and the posterior at `j` is simply
/// `forward[j] * backward[j]`.
#[derive(Clone, Debug)]
pub struct WeightTable {
    forward: Vec<[f64; 2]>,
    backward: Vec<[f64; 2]>,
    log_scale: Vec<f64>,
}

impl WeightTable {
    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn forward(&self, j: usize) -> [f64; 2] {
        self.forward[j]
    }

    pub fn backward(&self, j: usize) -> [f64; 2] {
        self.backward[j]
    }

    pub fn log_scale(&self, j: usize) -> f64 {
        self.log_scale[j]
    }

    pub fn log_likelihood(&self) -> f64 {
        self.log_scale.iter().sum()
    }

    /// `P(U_j = a | data)` and `P(U_j = b | data)`.
    pub fn posterior(&self, j: usize) -> [f64; 2] {
        let f = self.forward[j];
        let b = self.backward[j];
        let w = [f[0] * b[0], f[1] * b[1]];
        let z = w[0] + w[1];
        [w[0] / z, w[1] / z]
    }

    pub fn posterior_of(&self, j: usize, s: Strand) -> f64 {
        self.posterior(j)[s.index()]
    }

    /// Natural log of the unscaled forward weights `alpha_j(u)`.
    pub fn log_forward_unscaled(&self, j: usize) -> [f64; 2] {
        let shift: f64 = self.log_scale[..=j].iter().sum();
        self.forward[j].map(|w| w.ln() + shift)
    }

    /// Natural log of the unscaled backward weights `beta_j(u)`.
    pub fn log_backward_unscaled(&self, j: usize) -> [f64; 2] {
        let shift: f64 = self.log_scale[j + 1..].iter().sum();
        self.backward[j].map(|w| w.ln() + shift)
    }
}

#[inline]
fn emissions(haplotype: &[u8], parents: &HaplotypePair, params: &HmmParams, j: usize) -> [f64; 2] {
    [
        params.emission(haplotype[j], parents.strand_a[j]),
        params.emission(haplotype[j], parents.strand_b[j]),
    ]
}

fn degenerate(j: usize) -> Error {
    Error::DegenerateEvidence(format!(
        "haplotype cannot be produced from the parental strands at site {j} (zero likelihood)"
    ))
}

/// Forward pass over `range`, treating `range.start` as the start of a chain
/// with the uniform stationary prior. Returns the normalised weights and the
/// log scaling factor of each site.
pub(crate) fn forward_pass(
    haplotype: &[u8],
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    range: Range<usize>,
) -> Result<(Vec<[f64; 2]>, Vec<f64>)> {
    let mut fwd = Vec::with_capacity(range.len());
    let mut log_scale = Vec::with_capacity(range.len());
    let mut prev = [0.5, 0.5];
    for j in range.clone() {
        let e = emissions(haplotype, parents, params, j);
        let pred = if j == range.start {
            [0.5, 0.5]
        } else {
            let k = kernel(map.distance(j));
            [
                prev[0] * k[0][0] + prev[1] * k[1][0],
                prev[0] * k[0][1] + prev[1] * k[1][1],
            ]
        };
        let w = [pred[0] * e[0], pred[1] * e[1]];
        let c = w[0] + w[1];
        if !(c > 0.0) || !c.is_finite() {
            return Err(degenerate(j));
        }
        prev = [w[0] / c, w[1] / c];
        fwd.push(prev);
        log_scale.push(c.ln());
    }
    Ok((fwd, log_scale))
}

/// Backward pass over `range` with `beta = 1` at the last site. When
/// `scales` is given the weights are divided by the forward scaling factors
/// (the classical scaled recursion); otherwise each step is renormalised to
/// sum to one, which preserves every ratio needed for sampling.
pub(crate) fn backward_pass(
    haplotype: &[u8],
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    range: Range<usize>,
    scales: Option<&[f64]>,
) -> Result<Vec<[f64; 2]>> {
    let n = range.len();
    let mut bwd = vec![[1.0, 1.0]; n];
    for off in (0..n.saturating_sub(1)).rev() {
        let j = range.start + off;
        let e = emissions(haplotype, parents, params, j + 1);
        let k = kernel(map.distance(j + 1));
        let next = bwd[off + 1];
        let t = [e[0] * next[0], e[1] * next[1]];
        let mut b = [
            k[0][0] * t[0] + k[0][1] * t[1],
            k[1][0] * t[0] + k[1][1] * t[1],
        ];
        let z = match scales {
            Some(s) => s[off + 1].exp(),
            None => b[0] + b[1],
        };
        if !(z > 0.0) || !(b[0] + b[1] > 0.0) {
            return Err(degenerate(j + 1));
        }
        b = [b[0] / z, b[1] / z];
        bwd[off] = b;
    }
    Ok(bwd)
}

/// Forward and backward weights of `haplotype` given the parent that
/// transmitted it, over the whole map.
pub fn compute_fb_weights(
    haplotype: &[u8],
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
) -> Result<WeightTable> {
    params.validate()?;
    check_lengths(map, parents, Some(haplotype))?;
    let (forward, log_scale) = forward_pass(haplotype, parents, map, params, 0..map.len())?;
    let backward = backward_pass(
        haplotype,
        parents,
        map,
        params,
        0..map.len(),
        Some(&log_scale),
    )?;
    Ok(WeightTable {
        forward,
        backward,
        log_scale,
    })
}
