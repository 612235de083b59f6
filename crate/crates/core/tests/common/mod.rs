//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use digital_twins::hmm::{GeneticMap, HaplotypePair, Site};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Map of one chromosome with the given inter-site distances in Morgans.
pub fn map_from_gaps(gaps: &[f64]) -> GeneticMap {
    let mut pos = 0.0;
    let mut sites = vec![site(0, pos)];
    for (k, g) in gaps.iter().enumerate() {
        pos += g;
        sites.push(site(k + 1, pos));
    }
    GeneticMap::new(sites).unwrap()
}

fn site(k: usize, morgans: f64) -> Site {
    Site {
        id: format!("s{}", k + 1),
        chromosome: 1,
        physical_pos: 1 + 1000 * k as u64,
        genetic_pos: morgans,
    }
}

pub fn pair(a: &[u8], b: &[u8]) -> HaplotypePair {
    HaplotypePair::new(a.to_vec(), b.to_vec()).unwrap()
}

/// Bits of `code`, site 0 first.
pub fn bits(code: usize, len: usize) -> Vec<u8> {
    (0..len).map(|j| ((code >> j) & 1) as u8).collect()
}

pub fn code(x: &[u8]) -> usize {
    x.iter().enumerate().map(|(j, &a)| (a as usize) << j).sum()
}

fn stay(d: f64) -> f64 {
    0.5 * (1.0 + (-2.0 * d).exp())
}

fn emit(observed: u8, copied: u8, eps: f64) -> f64 {
    if observed == copied {
        1.0 - eps
    } else {
        eps
    }
}

/// Law of a transmitted haplotype, indexed by [`code`], by summing over all
/// copying-state paths.
pub fn transmitted_law(parents: &HaplotypePair, gaps: &[f64], eps: f64) -> Vec<f64> {
    let p = gaps.len() + 1;
    let strands = [&parents.strand_a, &parents.strand_b];
    let mut law = vec![0.0; 1 << p];
    for path in 0..1usize << p {
        let u = bits(path, p);
        let mut pu = 0.5;
        for j in 1..p {
            let s = stay(gaps[j - 1]);
            pu *= if u[j] == u[j - 1] { s } else { 1.0 - s };
        }
        for (x, slot) in law.iter_mut().enumerate() {
            let xs = bits(x, p);
            let e: f64 = (0..p)
                .map(|j| emit(xs[j], strands[u[j] as usize][j], eps))
                .product();
            *slot += pu * e;
        }
    }
    law
}

/// Law of the segment `first..=last` given the rest of `observed`, indexed
/// by [`code`] of the segment.
pub fn local_law(
    parents: &HaplotypePair,
    gaps: &[f64],
    eps: f64,
    observed: &[u8],
    first: usize,
    last: usize,
) -> Vec<f64> {
    let joint = transmitted_law(parents, gaps, eps);
    let len = last - first + 1;
    let mut law = vec![0.0; 1 << len];
    for (x, &px) in joint.iter().enumerate() {
        let xs = bits(x, observed.len());
        if (0..observed.len()).any(|j| (j < first || j > last) && xs[j] != observed[j]) {
            continue;
        }
        law[code(&xs[first..=last])] += px;
    }
    let total: f64 = law.iter().sum();
    law.iter().map(|v| v / total).collect()
}

/// Law of the modified twin over `first..=last` that starts on strand
/// `start` and ends on the other strand: an odd Poisson number of points
/// with mean equal to the group length, placed independently on the
/// intervals with probability proportional to their stay probability, each
/// interval switching strands when hit an odd number of times.
pub fn modified_law(
    parents: &HaplotypePair,
    gaps: &[f64],
    eps: f64,
    start: usize,
    first: usize,
    last: usize,
) -> Vec<f64> {
    let intervals: Vec<f64> = gaps[first..last].to_vec();
    let l = intervals.len();
    let mu: f64 = intervals.iter().sum();
    let w: Vec<f64> = intervals.iter().map(|&d| stay(d)).collect();
    let total: f64 = w.iter().sum();
    let q: Vec<f64> = w.iter().map(|v| v / total).collect();
    let odd = 0.5 * (1.0 - (-2.0 * mu).exp());
    // P(parity pattern F) = 2^-L sum_S (-1)^{|S & F|} E[r_S^M | M odd]
    let moment = |r: f64| (-mu).exp() * (mu * r).sinh() / odd;
    let strands = [&parents.strand_a, &parents.strand_b];
    let len = l + 1;
    let mut law = vec![0.0; 1 << len];
    for f in 0..1usize << l {
        let mut pf = 0.0;
        for s in 0..1usize << l {
            let r: f64 = (0..l)
                .map(|j| if (s >> j) & 1 == 1 { -q[j] } else { q[j] })
                .sum();
            let sign = if (s & f).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            pf += sign * moment(r);
        }
        pf /= (1usize << l) as f64;
        if pf <= 1e-15 {
            continue;
        }
        let mut u = vec![start; len];
        for k in 1..len {
            u[k] = if (f >> (k - 1)) & 1 == 1 {
                1 - u[k - 1]
            } else {
                u[k - 1]
            };
        }
        for (x, slot) in law.iter_mut().enumerate() {
            let xs = bits(x, len);
            let e: f64 = (0..len)
                .map(|k| emit(xs[k], strands[u[k]][first + k], eps))
                .product();
            *slot += pf * e;
        }
    }
    law
}

/// Pearson chi-square goodness of fit; cells with expected count below 5
/// are pooled.
pub fn chi_square_pvalue(counts: &[u64], law: &[f64]) -> f64 {
    let n: u64 = counts.iter().sum();
    let (mut stat, mut cells) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(law) {
        let e = p * n as f64;
        if e < 5.0 {
            pooled_obs += c as f64;
            pooled_exp += e;
        } else {
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp.max(1e-300);
        cells += 1;
    }
    if cells < 2 {
        return 1.0;
    }
    1.0 - ChiSquared::new((cells - 1) as f64).unwrap().cdf(stat)
}

/// Kolmogorov-Smirnov distance of `sample` from the uniform law on [0, 1].
pub fn ks_uniform(sample: &[f64]) -> f64 {
    let mut s = sample.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| ((i + 1) as f64 / n - x).max(x - i as f64 / n))
        .fold(0.0, f64::max)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Chi-square test of independence on a 2x2 table.
pub fn independence_pvalue(a: &[bool], b: &[bool]) -> f64 {
    let mut t = [[0.0f64; 2]; 2];
    for (&x, &y) in a.iter().zip(b) {
        t[x as usize][y as usize] += 1.0;
    }
    let n = a.len() as f64;
    let rows = [t[0][0] + t[0][1], t[1][0] + t[1][1]];
    let cols = [t[0][0] + t[1][0], t[0][1] + t[1][1]];
    let mut stat = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            let e = rows[r] * cols[c] / n;
            if e > 0.0 {
                stat += (t[r][c] - e).powi(2) / e;
            }
        }
    }
    1.0 - ChiSquared::new(1.0).unwrap().cdf(stat)
}
