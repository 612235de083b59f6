use rand::seq::SliceRandom;
use rand::Rng;

use crate::data::{Phenotype, TrioDataset, TrioRecord};
use crate::error::{Error, Result};
use crate::hmm::{GeneticMap, HaplotypePair, HmmParams};

const MAX_ENUMERATION: f64 = 5e6;

/// Eight offspring from two subpopulations. Every parent in the first
/// subpopulation carries the allele on both strands and every parent in the
/// second carries none, so `X = 2` in the first and `X = 0` in the second.
/// The trait is the subpopulation indicator and has no causal link to the
/// single site. Mutations are switched off.
pub fn make_confounded_example() -> TrioDataset {
    let map = GeneticMap::uniform(&[(1, 1, 0.0, 1)]).expect("single-site map");
    let params = HmmParams::with_epsilon(0.0).expect("epsilon 0 is valid");
    let mut records = Vec::with_capacity(8);
    let mut y = Vec::with_capacity(8);
    for i in 0..8 {
        let allele = u8::from(i < 4);
        let parent = HaplotypePair::new(vec![allele], vec![allele]).expect("equal strands");
        let rec = TrioRecord::new(
            format!("subject{}", i + 1),
            vec![allele],
            vec![allele],
            Some(parent.clone()),
            Some(parent),
        )
        .expect("valid trio");
        records.push(rec);
        y.push(allele);
    }
    let phenotype = Phenotype::binary(y).expect("binary trait");
    TrioDataset::new(records, phenotype, map, params).expect("consistent example")
}

fn check(column: &[f64], phenotype: &Phenotype) -> Result<Vec<f64>> {
    if column.len() != phenotype.len() {
        return Err(Error::input(format!(
            "{} genotypes for {} phenotypes",
            column.len(),
            phenotype.len()
        )));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("genotypes must be finite"));
    }
    Ok(phenotype.values())
}

fn score(column: &[f64], y: &[f64]) -> f64 {
    column.iter().zip(y).map(|(x, y)| x * y).sum()
}

/// Label-permutation test of `sum_i X_i Y_i`: the quantile of the observed
/// score among `replicates` random permutations of the phenotype,
/// `(1 + #{k: T_k >= T}) / (K + 1)`.
pub fn permutation_test<R: Rng + ?Sized>(
    column: &[f64],
    phenotype: &Phenotype,
    replicates: usize,
    rng: &mut R,
) -> Result<f64> {
    let mut y = check(column, phenotype)?;
    if replicates == 0 {
        return Err(Error::input("the number of permutations must be positive"));
    }
    let t = score(column, &y);
    let mut at_least = 0usize;
    for _ in 0..replicates {
        y.shuffle(rng);
        if score(column, &y) >= t {
            at_least += 1;
        }
    }
    Ok((1 + at_least) as f64 / (replicates + 1) as f64)
}

/// Exact permutation p-value of `sum_i X_i Y_i` for a binary phenotype:
/// the fraction of all case sets of the observed size whose score is at
/// least the observed one.
pub fn exact_permutation_pvalue(column: &[f64], phenotype: &Phenotype) -> Result<f64> {
    let y = check(column, phenotype)?;
    if phenotype.as_binary().is_none() {
        return Err(Error::input("exact enumeration needs a binary phenotype"));
    }
    let n = column.len();
    let k = y.iter().filter(|&&v| v == 1.0).count();
    let total = binomial(n, k);
    if total > MAX_ENUMERATION {
        return Err(Error::input(format!(
            "{total} case sets are too many to enumerate"
        )));
    }
    let t = score(column, &y);
    let (mut hits, mut count) = (0u64, 0u64);
    let mut chosen: Vec<usize> = (0..k).collect();
    loop {
        count += 1;
        // small tolerance so that reordered sums of equal sets still count
        if chosen.iter().map(|&i| column[i]).sum::<f64>() >= t - 1e-9 * t.abs().max(1.0) {
            hits += 1;
        }
        // next k-subset in lexicographic order
        let Some(pos) = (0..k).rev().find(|&r| chosen[r] < n - k + r) else {
            break;
        };
        chosen[pos] += 1;
        for r in pos + 1..k {
            chosen[r] = chosen[r - 1] + 1;
        }
    }
    Ok(hits as f64 / count as f64)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}
