use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_distr::{Exp1, Geometric};

use super::forward_backward::{backward_pass, compute_fb_weights, forward_pass};
use super::{
    check_lengths, kernel, stay_prob, AncestryVector, GeneticMap, HaplotypePair, HmmParams,
    Interval, PointWeighting, Strand,
};
use crate::error::{Error, Result};

#[inline]
fn emit<R: Rng + ?Sized>(
    parents: &HaplotypePair,
    s: Strand,
    j: usize,
    epsilon: f64,
    rng: &mut R,
) -> u8 {
    let copied = parents.allele(s, j);
    if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
        1 - copied
    } else {
        copied
    }
}

#[inline]
fn uniform_strand<R: Rng + ?Sized>(rng: &mut R) -> Strand {
    if rng.gen::<bool>() {
        Strand::A
    } else {
        Strand::B
    }
}

/// Draws a strand with probabilities proportional to `w`.
#[inline]
fn draw_strand<R: Rng + ?Sized>(w: [f64; 2], rng: &mut R) -> Option<Strand> {
    let z = w[0] + w[1];
    if !(z > 0.0) || !z.is_finite() {
        return None;
    }
    Some(if rng.gen::<f64>() * z < w[0] {
        Strand::A
    } else {
        Strand::B
    })
}

fn check_sorted_sites(sites: &[usize], within: impl Fn(usize) -> bool) -> Result<()> {
    for (k, &j) in sites.iter().enumerate() {
        if !within(j) {
            return Err(Error::input(format!(
                "site index {j} is outside the sampled range"
            )));
        }
        if k > 0 && sites[k - 1] >= j {
            return Err(Error::input("site indices must be strictly increasing"));
        }
    }
    Ok(())
}

/// Unconditional draw of a transmitted haplotype and its copying states.
pub fn sample_global_twin<R: Rng + ?Sized>(
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    rng: &mut R,
) -> Result<(Vec<u8>, AncestryVector)> {
    params.validate()?;
    check_lengths(map, parents, None)?;
    let p = map.len();
    let mut states = Vec::with_capacity(p);
    let mut hap = Vec::with_capacity(p);
    let mut prev = Strand::A;
    for j in 0..p {
        let d = map.distance(j);
        let s = if d.is_infinite() {
            uniform_strand(rng)
        } else if rng.gen::<f64>() < stay_prob(d) {
            prev
        } else {
            prev.other()
        };
        hap.push(emit(parents, s, j, params.epsilon, rng));
        states.push(s);
        prev = s;
    }
    Ok((hap, AncestryVector { states }))
}

/// Unconditional draw of the transmitted alleles at a strictly increasing
/// subset of sites. The copying chain restricted to any subset of sites is
/// again Markov with summed distances, so this is an exact marginal of
/// [`sample_global_twin`].
pub fn sample_global_twin_at<R: Rng + ?Sized>(
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    sites: &[usize],
    rng: &mut R,
) -> Result<Vec<u8>> {
    check_lengths(map, parents, None)?;
    check_sorted_sites(sites, |j| j < map.len())?;
    Ok(global_twin_at_unchecked(
        parents,
        map,
        params.epsilon,
        sites,
        rng,
    ))
}

pub(crate) fn global_twin_at_unchecked<R: Rng + ?Sized>(
    parents: &HaplotypePair,
    map: &GeneticMap,
    epsilon: f64,
    sites: &[usize],
    rng: &mut R,
) -> Vec<u8> {
    let mut out = Vec::with_capacity(sites.len());
    SiteTrack::new(map, sites).sample(parents, epsilon, rng, &mut out);
    out
}

/// Positions of a strictly increasing subset of sites, kept apart from the
/// map so that repeated twin draws touch only flat arrays.
pub(crate) struct SiteTrack<'a> {
    sites: &'a [usize],
    pos: Vec<f64>,
    fresh: Vec<bool>,
}

impl<'a> SiteTrack<'a> {
    pub(crate) fn new(map: &GeneticMap, sites: &'a [usize]) -> Self {
        let pos = sites.iter().map(|&j| map.site(j).genetic_pos).collect();
        let fresh = (0..sites.len())
            .map(|k| k == 0 || !map.same_chromosome(sites[k - 1], sites[k]))
            .collect();
        SiteTrack { sites, pos, fresh }
    }

    /// Appends one unconditional twin draw at the track's sites to `out`.
    ///
    /// Strand switches between two sites are the parity of a unit-rate
    /// Poisson count over their distance, so crossovers are drawn as
    /// exponential gaps and miscopies as geometric skips. Runs between
    /// crossovers are copied as whole slices.
    pub(crate) fn sample<R: Rng + ?Sized>(
        &self,
        parents: &HaplotypePair,
        epsilon: f64,
        rng: &mut R,
        out: &mut Vec<u8>,
    ) {
        let start = out.len();
        let strands = [&parents.strand_a[..], &parents.strand_b[..]];
        let m = self.sites.len();
        let mut k = 0;
        while k < m {
            // one chromosome: sites k..end
            let end = k
                + 1
                + self.fresh[k + 1..]
                    .iter()
                    .position(|&f| f)
                    .unwrap_or(m - k - 1);
            let mut u = usize::from(rng.gen::<bool>());
            let mut crossover = self.pos[k] + rng.sample::<f64, _>(Exp1);
            while k < end {
                let stop = k + self.pos[k..end].partition_point(|&x| x <= crossover);
                self.copy_run(strands[u], k, stop.max(k + 1), out);
                k = stop.max(k + 1);
                if k < end {
                    while crossover < self.pos[k] {
                        u ^= 1;
                        crossover += rng.sample::<f64, _>(Exp1);
                    }
                }
            }
        }
        if epsilon > 0.0 {
            let skips = Geometric::new(epsilon.min(1.0)).expect("valid epsilon");
            let mut idx = start as u64 + skips.sample(rng);
            while idx < out.len() as u64 {
                out[idx as usize] ^= 1;
                idx += 1 + skips.sample(rng);
            }
        }
    }

    fn copy_run(&self, strand: &[u8], from: usize, to: usize, out: &mut Vec<u8>) {
        let (a, b) = (self.sites[from], self.sites[to - 1]);
        if b - a == to - 1 - from {
            out.extend_from_slice(&strand[a..=b]);
        } else {
            out.extend(self.sites[from..to].iter().map(|&j| strand[j]));
        }
    }
}

/// Exact sampler for a transmitted haplotype inside `group`, conditional on
/// the observed haplotype at every site outside the group.
///
/// Sites on other chromosomes carry no information, so only the
/// flanking stretches of the group's own chromosome are scanned: a forward
/// pass up to the site before the group and a backward pass from the site
/// after it. The two resulting messages are all that is needed to draw
/// the copying states inside the group as a Markov bridge.
#[derive(Clone, Debug)]
pub struct LocalTwinSampler {
    group: Interval,
    /// `P(U_{first} = u | X before the group)`, unnormalised.
    entry: [f64; 2],
    /// `P(X after the group | U_{last} = u)`, unnormalised.
    exit: [f64; 2],
}

impl LocalTwinSampler {
    pub fn new(
        haplotype: &[u8],
        parents: &HaplotypePair,
        map: &GeneticMap,
        params: &HmmParams,
        group: Interval,
    ) -> Result<Self> {
        params.validate()?;
        check_lengths(map, parents, Some(haplotype))?;
        let chrom = group.check_within(map)?;
        let entry = if group.first == chrom.start {
            [0.5, 0.5]
        } else {
            let (fwd, _) = forward_pass(haplotype, parents, map, params, chrom.start..group.first)?;
            let f = fwd[fwd.len() - 1];
            let k = kernel(map.distance(group.first));
            [
                f[0] * k[0][0] + f[1] * k[1][0],
                f[0] * k[0][1] + f[1] * k[1][1],
            ]
        };
        let exit = if group.last + 1 == chrom.end {
            [1.0, 1.0]
        } else {
            backward_pass(haplotype, parents, map, params, group.last..chrom.end, None)?[0]
        };
        Ok(LocalTwinSampler { group, entry, exit })
    }

    /// Samplers for several groups of one haplotype from a single
    /// forward-backward sweep over the map.
    pub fn for_groups(
        haplotype: &[u8],
        parents: &HaplotypePair,
        map: &GeneticMap,
        params: &HmmParams,
        groups: &[Interval],
    ) -> Result<Vec<Self>> {
        let weights = compute_fb_weights(haplotype, parents, map, params)?;
        groups
            .iter()
            .map(|&group| {
                let chrom = group.check_within(map)?;
                let entry = if group.first == chrom.start {
                    [0.5, 0.5]
                } else {
                    let f = weights.forward(group.first - 1);
                    let k = kernel(map.distance(group.first));
                    [
                        f[0] * k[0][0] + f[1] * k[1][0],
                        f[0] * k[0][1] + f[1] * k[1][1],
                    ]
                };
                let exit = if group.last + 1 == chrom.end {
                    [1.0, 1.0]
                } else {
                    weights.backward(group.last)
                };
                Ok(LocalTwinSampler { group, entry, exit })
            })
            .collect()
    }

    pub fn group(&self) -> Interval {
        self.group
    }

    /// `P(X after the group | U_j = u)` for a site `j` inside the group,
    /// ignoring the emissions inside the group.
    #[inline]
    fn exit_message(&self, map: &GeneticMap, j: usize) -> [f64; 2] {
        let k = kernel(map.distance_between(j, self.group.last));
        [
            k[0][0] * self.exit[0] + k[0][1] * self.exit[1],
            k[1][0] * self.exit[0] + k[1][1] * self.exit[1],
        ]
    }

    /// Copying states at strictly increasing `sites` inside the group.
    pub fn sample_states_at<R: Rng + ?Sized>(
        &self,
        map: &GeneticMap,
        sites: &[usize],
        rng: &mut R,
    ) -> Result<Vec<Strand>> {
        check_sorted_sites(sites, |j| self.group.contains(j))?;
        let mut out = Vec::with_capacity(sites.len());
        let mut prev: Option<(usize, Strand)> = None;
        for &j in sites {
            let h = self.exit_message(map, j);
            let w = match prev {
                None => {
                    let k = kernel(map.distance_between(self.group.first, j));
                    let e = self.entry;
                    [
                        (e[0] * k[0][0] + e[1] * k[1][0]) * h[0],
                        (e[0] * k[0][1] + e[1] * k[1][1]) * h[1],
                    ]
                }
                Some((i, u)) => {
                    let k = kernel(map.distance_between(i, j));
                    [k[u.index()][0] * h[0], k[u.index()][1] * h[1]]
                }
            };
            let s = draw_strand(w, rng).ok_or_else(|| {
                Error::DegenerateEvidence(format!("no admissible copying state at site {j}"))
            })?;
            out.push(s);
            prev = Some((j, s));
        }
        Ok(out)
    }

    /// Twin alleles at strictly increasing `sites` inside the group.
    pub fn sample_at<R: Rng + ?Sized>(
        &self,
        parents: &HaplotypePair,
        map: &GeneticMap,
        params: &HmmParams,
        sites: &[usize],
        rng: &mut R,
    ) -> Result<Vec<u8>> {
        let states = self.sample_states_at(map, sites, rng)?;
        Ok(states
            .iter()
            .zip(sites)
            .map(|(&s, &j)| emit(parents, s, j, params.epsilon, rng))
            .collect())
    }
}

/// Local digital twin: a fresh draw of the haplotype segment over `group`
/// given the observed haplotype everywhere else.
pub fn sample_local_twin<R: Rng + ?Sized>(
    haplotype: &[u8],
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    group: Interval,
    rng: &mut R,
) -> Result<Vec<u8>> {
    let sampler = LocalTwinSampler::new(haplotype, parents, map, params, group)?;
    let sites: Vec<usize> = group.indices().collect();
    sampler.sample_at(parents, map, params, &sites, rng)
}

/// Draws the copying states of an observed haplotype from their posterior
/// (forward filtering on backward messages, one chain per chromosome).
pub fn sample_ancestry_posterior<R: Rng + ?Sized>(
    haplotype: &[u8],
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    rng: &mut R,
) -> Result<AncestryVector> {
    params.validate()?;
    check_lengths(map, parents, Some(haplotype))?;
    let mut states = Vec::with_capacity(map.len());
    for chrom in map.chromosomes() {
        let bwd = backward_pass(
            haplotype,
            parents,
            map,
            params,
            chrom.start..chrom.end,
            None,
        )?;
        let mut prev = Strand::A;
        for j in chrom.start..chrom.end {
            let b = bwd[j - chrom.start];
            let e = [
                params.emission(haplotype[j], parents.strand_a[j]),
                params.emission(haplotype[j], parents.strand_b[j]),
            ];
            let t = if j == chrom.start {
                [0.5, 0.5]
            } else {
                kernel(map.distance(j))[prev.index()]
            };
            let s = draw_strand([t[0] * e[0] * b[0], t[1] * e[1] * b[1]], rng).ok_or_else(|| {
                Error::DegenerateEvidence(format!(
                    "haplotype cannot be produced from the parental strands at site {j} (zero likelihood)"
                ))
            })?;
            states.push(s);
            prev = s;
        }
    }
    Ok(AncestryVector { states })
}

/// Poisson(`mean`) conditioned on an odd outcome, by inversion over the odd
/// support. `mean == 0` returns the limiting value 1.
pub(crate) fn sample_odd_poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> u64 {
    if !(mean > 0.0) {
        return 1;
    }
    let total = 0.5 * (-(-2.0 * mean).exp_m1());
    let target = rng.gen::<f64>() * total;
    let mut k = 1u64;
    let mut term = mean * (-mean).exp();
    let mut acc = term;
    while acc <= target {
        let next = term * mean * mean / (((k + 1) * (k + 2)) as f64);
        if next == 0.0 || !next.is_finite() {
            break;
        }
        k += 2;
        term = next;
        acc += term;
    }
    k
}

/// Modified local twin over `group` given the copying states at its two
/// endpoints, which must differ.
///
/// An odd number of crossovers is drawn, their positions are placed on the
/// intervals between consecutive sites of the group, and every interval hit
/// an odd number of times switches the copying state. Returns the twin
/// alleles and copying states over the whole group.
///
/// When the endpoint states agree the caller must keep the observed
/// segment instead; that case is rejected here.
pub fn sample_modified_local_twin<R: Rng + ?Sized>(
    boundary_states: (Strand, Strand),
    parents: &HaplotypePair,
    map: &GeneticMap,
    params: &HmmParams,
    group: Interval,
    rng: &mut R,
) -> Result<(Vec<u8>, Vec<Strand>)> {
    params.validate()?;
    check_lengths(map, parents, None)?;
    group.check_within(map)?;
    if boundary_states.0 == boundary_states.1 {
        return Err(Error::Contract(
            "modified twins are only drawn when the endpoint states differ; copy the observed segment instead".into(),
        ));
    }
    if group.len() < 2 {
        return Err(Error::Contract(
            "a single-site group cannot have different endpoint states".into(),
        ));
    }
    let mean = map.distance_between(group.first, group.last);
    let m = sample_odd_poisson(mean, rng);

    let weights: Vec<f64> = (group.first + 1..=group.last)
        .map(|j| match params.point_weighting {
            PointWeighting::StayProbability => stay_prob(map.distance(j)),
            PointWeighting::Distance => map.distance(j),
        })
        .collect();
    let mut flips = vec![false; group.len()];
    match WeightedIndex::new(&weights) {
        Ok(points) => {
            for _ in 0..m {
                flips[1 + points.sample(rng)] ^= true;
            }
        }
        // all intervals have zero length: place points uniformly
        Err(_) => {
            for _ in 0..m {
                flips[1 + rng.gen_range(0..weights.len())] ^= true;
            }
        }
    }

    let mut states = Vec::with_capacity(group.len());
    let mut alleles = Vec::with_capacity(group.len());
    let mut u = boundary_states.0;
    for (off, j) in group.indices().enumerate() {
        if flips[off] {
            u = u.other();
        }
        states.push(u);
        alleles.push(emit(parents, u, j, params.epsilon, rng));
    }
    debug_assert_eq!(u, boundary_states.1);
    Ok((alleles, states))
}

/// Expected transmitted allele at every site of `group` given the parental
/// strands and the copying states at the two endpoints.
pub fn posterior_mean_segment(
    parents: &HaplotypePair,
    boundary_states: (Strand, Strand),
    map: &GeneticMap,
    params: &HmmParams,
    group: Interval,
) -> Result<Vec<f64>> {
    params.validate()?;
    check_lengths(map, parents, None)?;
    group.check_within(map)?;
    let eps = params.epsilon;
    let (start, end) = (boundary_states.0.index(), boundary_states.1.index());
    group
        .indices()
        .map(|j| {
            let left = kernel(map.distance_between(group.first, j));
            let right = kernel(map.distance_between(j, group.last));
            let w = [
                left[start][0] * right[0][end],
                left[start][1] * right[1][end],
            ];
            let z = w[0] + w[1];
            if !(z > 0.0) {
                return Err(Error::DegenerateEvidence(format!(
                    "endpoint states {:?} cannot be joined across a zero-length group",
                    boundary_states
                )));
            }
            let (ma, mb) = (parents.strand_a[j] as f64, parents.strand_b[j] as f64);
            let (pa, pb) = (w[0] / z, w[1] / z);
            Ok((1.0 - eps) * (pa * ma + pb * mb) + eps * (pa * (1.0 - ma) + pb * (1.0 - mb)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    #[test]
    fn batched_samplers_match_single_group() {
        let map = GeneticMap::uniform(&[(1, 12, 0.4, 12_000), (2, 6, 0.2, 6000)]).unwrap();
        let parents = HaplotypePair::new(
            vec![0, 1, 1, 0, 1, 0, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 1, 0],
            vec![1, 0, 1, 1, 0, 0, 1, 0, 1, 1, 0, 1, 0, 1, 1, 0, 0, 1],
        )
        .unwrap();
        let hap = vec![0, 1, 1, 1, 0, 0, 1, 0, 1, 1, 1, 0, 1, 1, 1, 0, 0, 0];
        let params = HmmParams::with_epsilon(0.01).unwrap();
        let groups = [
            Interval::new(0, 2).unwrap(),
            Interval::new(4, 7).unwrap(),
            Interval::new(9, 11).unwrap(),
            Interval::new(12, 14).unwrap(),
            Interval::new(15, 17).unwrap(),
        ];
        let batch = LocalTwinSampler::for_groups(&hap, &parents, &map, &params, &groups).unwrap();
        for (b, &g) in batch.iter().zip(&groups) {
            let single = LocalTwinSampler::new(&hap, &parents, &map, &params, g).unwrap();
            let norm = |v: [f64; 2]| [v[0] / (v[0] + v[1]), v[1] / (v[0] + v[1])];
            for (x, y) in norm(b.entry).iter().zip(norm(single.entry)) {
                assert!((x - y).abs() < 1e-12);
            }
            for (x, y) in norm(b.exit).iter().zip(norm(single.exit)) {
                assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn identical_parents_copy_common_strand() {
        let map = GeneticMap::uniform(&[(1, 5, 0.4, 5000)]).unwrap();
        let strand = vec![1, 0, 0, 1, 1];
        let parents = HaplotypePair::new(strand.clone(), strand.clone()).unwrap();
        let params = HmmParams::with_epsilon(0.0).unwrap();
        let mut r = rng();
        for _ in 0..50 {
            let (hap, _) = sample_global_twin(&parents, &map, &params, &mut r).unwrap();
            assert_eq!(hap, strand);
            let seg = sample_local_twin(
                &hap,
                &parents,
                &map,
                &params,
                Interval::new(1, 3).unwrap(),
                &mut r,
            )
            .unwrap();
            assert_eq!(seg, strand[1..=3]);
        }
    }

    #[test]
    fn zero_distance_copies_one_whole_strand() {
        let map = GeneticMap::uniform(&[(1, 4, 0.0, 4000)]).unwrap();
        let parents = HaplotypePair::new(vec![0, 0, 0, 0], vec![1, 1, 1, 1]).unwrap();
        let params = HmmParams::with_epsilon(0.0).unwrap();
        let mut r = rng();
        let mut ones = 0;
        for _ in 0..2000 {
            let (hap, _) = sample_global_twin(&parents, &map, &params, &mut r).unwrap();
            assert!(hap == vec![0; 4] || hap == vec![1; 4]);
            ones += hap[0] as usize;
        }
        // binomial(2000, 1/2): sd ~ 22
        assert!((ones as f64 - 1000.0).abs() < 4.0 * 22.4);
    }

    #[test]
    fn length_mismatch_rejected() {
        let map = GeneticMap::uniform(&[(1, 4, 0.1, 4000)]).unwrap();
        let parents = HaplotypePair::new(vec![0, 0, 0], vec![1, 1, 1]).unwrap();
        assert!(sample_global_twin(&parents, &map, &HmmParams::default(), &mut rng()).is_err());
    }

    #[test]
    fn local_group_spanning_chromosomes_rejected() {
        let map = GeneticMap::uniform(&[(1, 2, 0.1, 2000), (2, 2, 0.1, 2000)]).unwrap();
        let parents = HaplotypePair::new(vec![0, 1, 0, 1], vec![1, 0, 1, 0]).unwrap();
        let err = sample_local_twin(
            &[0, 1, 0, 1],
            &parents,
            &map,
            &HmmParams::default(),
            Interval::new(1, 2).unwrap(),
            &mut rng(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn posterior_follows_matching_strand() {
        let map = GeneticMap::uniform(&[(1, 6, 0.5, 6000)]).unwrap();
        let x = vec![1, 0, 1, 1, 0, 0];
        let other: Vec<u8> = x.iter().map(|v| 1 - v).collect();
        let parents = HaplotypePair::new(x.clone(), other).unwrap();
        let params = HmmParams::with_epsilon(0.0).unwrap();
        let mut r = rng();
        for _ in 0..20 {
            let u = sample_ancestry_posterior(&x, &parents, &map, &params, &mut r).unwrap();
            assert!(u.states.iter().all(|&s| s == Strand::A));
        }
    }

    #[test]
    fn modified_twin_requires_distinct_endpoints() {
        let map = GeneticMap::uniform(&[(1, 4, 0.1, 4000)]).unwrap();
        let parents = HaplotypePair::new(vec![0, 0, 0, 0], vec![1, 1, 1, 1]).unwrap();
        let g = Interval::new(0, 3).unwrap();
        let err = sample_modified_local_twin(
            (Strand::A, Strand::A),
            &parents,
            &map,
            &HmmParams::default(),
            g,
            &mut rng(),
        );
        assert!(matches!(err, Err(Error::Contract(_))));
    }

    #[test]
    fn modified_twin_emits_copied_alleles_without_mutation() {
        let map = GeneticMap::uniform(&[(1, 8, 0.2, 8000)]).unwrap();
        let parents =
            HaplotypePair::new(vec![0, 1, 1, 0, 1, 0, 0, 1], vec![1, 1, 0, 0, 0, 1, 1, 1]).unwrap();
        let params = HmmParams::with_epsilon(0.0).unwrap();
        let g = Interval::new(1, 6).unwrap();
        let mut r = rng();
        for _ in 0..500 {
            let (alleles, states) = sample_modified_local_twin(
                (Strand::B, Strand::A),
                &parents,
                &map,
                &params,
                g,
                &mut r,
            )
            .unwrap();
            assert_eq!(states[0], Strand::B);
            assert_eq!(*states.last().unwrap(), Strand::A);
            let switches = states.windows(2).filter(|w| w[0] != w[1]).count();
            assert_eq!(switches % 2, 1);
            for (k, j) in g.indices().enumerate() {
                assert_eq!(alleles[k], parents.allele(states[k], j));
            }
        }
    }

    #[test]
    fn odd_poisson_small_mean_is_one() {
        let mut r = rng();
        for _ in 0..1000 {
            assert_eq!(sample_odd_poisson(1e-9, &mut r), 1);
        }
        assert_eq!(sample_odd_poisson(0.0, &mut r), 1);
    }

    #[test]
    fn odd_poisson_matches_pmf() {
        let mean: f64 = 1.7;
        let mut r = rng();
        let n = 200_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            let k = sample_odd_poisson(mean, &mut r);
            assert_eq!(k % 2, 1);
            if k <= 7 {
                counts[(k as usize - 1) / 2] += 1;
            }
        }
        let z = (mean.exp() - (-mean).exp()) / 2.0;
        let pmf = |k: i32| mean.powi(k) / (1..=k).map(|x| x as f64).product::<f64>() / z;
        for (i, k) in [1, 3, 5, 7].into_iter().enumerate() {
            let expected = pmf(k) * n as f64;
            let sd = (expected * (1.0 - pmf(k))).sqrt();
            assert!(
                (counts[i] as f64 - expected).abs() < 4.0 * sd + 1.0,
                "k={k}"
            );
        }
    }

    #[test]
    fn bridge_mean_pinned_and_symmetric() {
        let map = GeneticMap::uniform(&[(1, 3, 0.2, 3000)]).unwrap();
        let parents = HaplotypePair::new(vec![1, 1, 0], vec![0, 1, 1]).unwrap();
        let params = HmmParams::with_epsilon(0.0).unwrap();
        let g = Interval::new(0, 2).unwrap();
        let e = posterior_mean_segment(&parents, (Strand::A, Strand::B), &map, &params, g).unwrap();
        // endpoints pinned, midpoint of a symmetric bridge is 1/2 either way
        assert_eq!(e[0], 1.0);
        assert_eq!(e[1], 1.0);
        assert_eq!(e[2], 1.0);
        let parents = HaplotypePair::new(vec![1, 1, 0], vec![0, 0, 1]).unwrap();
        let e = posterior_mean_segment(&parents, (Strand::A, Strand::B), &map, &params, g).unwrap();
        assert!((e[1] - 0.5).abs() < 1e-12);
        let eps = HmmParams::with_epsilon(0.01).unwrap();
        let near = GeneticMap::uniform(&[(1, 3, 1e-9, 3000)]).unwrap();
        let e = posterior_mean_segment(&parents, (Strand::A, Strand::A), &near, &eps, g).unwrap();
        assert!((e[1] - 0.99).abs() < 1e-6);
    }
}
