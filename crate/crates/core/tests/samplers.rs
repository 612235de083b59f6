//! Twin samplers against exact laws obtained by path enumeration.

mod common;

use digital_twins::hmm::{
    sample_global_twin, sample_global_twin_at, sample_local_twin, sample_modified_local_twin,
    GeneticMap, HmmParams, Interval, Site, Strand,
};
use digital_twins::rng::{Domain, Streams};

use common::*;

const DRAWS: usize = 40_000;
const MIN_P: f64 = 1e-4;

fn parents() -> digital_twins::hmm::HaplotypePair {
    pair(&[0, 1, 1, 0, 1, 0], &[1, 1, 0, 0, 0, 1])
}

const GAPS: [f64; 5] = [0.3, 0.01, 0.6, 0.15, 0.3];

/// Marginal of `law` (indexed by full haplotype code) on `sites`.
fn marginal(law: &[f64], p: usize, sites: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; 1 << sites.len()];
    for (x, &px) in law.iter().enumerate() {
        let xs = bits(x, p);
        let sub: Vec<u8> = sites.iter().map(|&j| xs[j]).collect();
        out[code(&sub)] += px;
    }
    out
}

#[test]
fn global_twin_matches_path_enumeration() {
    let map = map_from_gaps(&GAPS);
    let params = HmmParams::with_epsilon(0.03).unwrap();
    let mut rng = Streams::new(3).stream(Domain::GlobalTwin, [0; 4]);
    let mut counts = vec![0u64; 1 << 6];
    for _ in 0..DRAWS {
        counts[code(
            &sample_global_twin(&parents(), &map, &params, &mut rng)
                .unwrap()
                .0,
        )] += 1;
    }
    let p = chi_square_pvalue(&counts, &transmitted_law(&parents(), &GAPS, 0.03));
    assert!(p > MIN_P, "p = {p}");
}

#[test]
fn subset_twin_matches_marginal_law() {
    let map = map_from_gaps(&GAPS);
    for (k, sites) in [
        vec![0, 1, 2, 3, 4, 5],
        vec![0, 2, 5],
        vec![1, 3, 4],
        vec![4],
    ]
    .iter()
    .enumerate()
    {
        for eps in [0.0, 0.2] {
            let params = HmmParams::with_epsilon(eps).unwrap();
            let mut rng =
                Streams::new(4).stream(Domain::GlobalTwin, [k as u64, (eps * 10.0) as u64, 0, 0]);
            let mut counts = vec![0u64; 1 << sites.len()];
            for _ in 0..DRAWS {
                counts[code(
                    &sample_global_twin_at(&parents(), &map, &params, sites, &mut rng).unwrap(),
                )] += 1;
            }
            let law = marginal(&transmitted_law(&parents(), &GAPS, eps), 6, sites);
            let p = chi_square_pvalue(&counts, &law);
            assert!(p > MIN_P, "sites {sites:?} eps {eps}: p = {p}");
        }
    }
}

#[test]
fn subset_twin_is_independent_across_chromosomes() {
    let site = |k: usize, chrom: u32, pos: f64| Site {
        id: format!("s{k}"),
        chromosome: chrom,
        physical_pos: 1 + k as u64,
        genetic_pos: pos,
    };
    let map = GeneticMap::new(vec![
        site(0, 1, 0.0),
        site(1, 1, 0.001),
        site(2, 2, 0.0),
        site(3, 2, 0.001),
    ])
    .unwrap();
    let parents = pair(&[0, 0, 0, 0], &[1, 1, 1, 1]);
    let params = HmmParams::with_epsilon(0.0).unwrap();
    let mut rng = Streams::new(5).stream(Domain::GlobalTwin, [0; 4]);
    let (mut first, mut third) = (Vec::new(), Vec::new());
    for _ in 0..DRAWS {
        let x = sample_global_twin_at(&parents, &map, &params, &[0, 1, 2, 3], &mut rng).unwrap();
        first.push(x[0] == 1);
        third.push(x[2] == 1);
    }
    assert!(independence_pvalue(&first, &third) > MIN_P);
}

#[test]
fn subset_twin_rejects_unsorted_sites() {
    let map = map_from_gaps(&GAPS);
    let params = HmmParams::default();
    let mut rng = Streams::new(6).stream(Domain::GlobalTwin, [0; 4]);
    assert!(sample_global_twin_at(&parents(), &map, &params, &[2, 1], &mut rng).is_err());
    assert!(sample_global_twin_at(&parents(), &map, &params, &[7], &mut rng).is_err());
}

#[test]
fn local_twin_matches_conditional_law() {
    let map = map_from_gaps(&GAPS);
    let params = HmmParams::with_epsilon(0.03).unwrap();
    let observed = [1, 1, 0, 1, 0, 1];
    let mut rng = Streams::new(7).stream(Domain::LocalTwin, [0; 4]);
    for (first, last) in [(1, 3), (0, 5), (4, 5)] {
        let group = Interval::new(first, last).unwrap();
        let mut counts = vec![0u64; 1 << group.len()];
        for _ in 0..DRAWS {
            counts[code(
                &sample_local_twin(&observed, &parents(), &map, &params, group, &mut rng).unwrap(),
            )] += 1;
        }
        let p = chi_square_pvalue(
            &counts,
            &local_law(&parents(), &GAPS, 0.03, &observed, first, last),
        );
        assert!(p > MIN_P, "group {first}..={last}: p = {p}");
    }
}

#[test]
fn modified_twin_matches_odd_poisson_law() {
    let map = map_from_gaps(&GAPS);
    let params = HmmParams::with_epsilon(0.03).unwrap();
    let group = Interval::new(1, 4).unwrap();
    let mut rng = Streams::new(8).stream(Domain::ModifiedTwin, [0; 4]);
    for (start, ends) in [(0, (Strand::A, Strand::B)), (1, (Strand::B, Strand::A))] {
        let mut counts = vec![0u64; 1 << group.len()];
        for _ in 0..DRAWS {
            let (x, _) =
                sample_modified_local_twin(ends, &parents(), &map, &params, group, &mut rng)
                    .unwrap();
            counts[code(&x)] += 1;
        }
        let p = chi_square_pvalue(&counts, &modified_law(&parents(), &GAPS, 0.03, start, 1, 4));
        assert!(p > MIN_P, "start {start}: p = {p}");
    }
}
