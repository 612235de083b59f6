//! Cohort containers shared by the tests, statistics and simulator.

use crate::error::{Error, Result};
use crate::hmm::{GeneticMap, HaplotypePair, HmmParams, Interval};

/// Which parent transmitted a haplotype.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Maternal,
    Paternal,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Maternal, Side::Paternal];

    pub fn index(self) -> usize {
        match self {
            Side::Maternal => 0,
            Side::Paternal => 1,
        }
    }
}

/// One offspring with its two transmitted haplotypes and whichever parents
/// were genotyped.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrioRecord {
    pub id: String,
    pub x_m: Vec<u8>,
    pub x_f: Vec<u8>,
    pub mother: Option<HaplotypePair>,
    pub father: Option<HaplotypePair>,
}

impl TrioRecord {
    pub fn new(
        id: impl Into<String>,
        x_m: Vec<u8>,
        x_f: Vec<u8>,
        mother: Option<HaplotypePair>,
        father: Option<HaplotypePair>,
    ) -> Result<Self> {
        let rec = TrioRecord {
            id: id.into(),
            x_m,
            x_f,
            mother,
            father,
        };
        rec.validate(None)?;
        Ok(rec)
    }

    pub fn len(&self) -> usize {
        self.x_m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x_m.is_empty()
    }

    pub fn validate(&self, p: Option<usize>) -> Result<()> {
        let p = p.unwrap_or(self.x_m.len());
        if self.mother.is_none() && self.father.is_none() {
            return Err(Error::input(format!(
                "record {} has no genotyped parent",
                self.id
            )));
        }
        let bad_len = self.x_m.len() != p
            || self.x_f.len() != p
            || self.mother.as_ref().is_some_and(|m| m.len() != p)
            || self.father.as_ref().is_some_and(|f| f.len() != p);
        if bad_len {
            return Err(Error::input(format!(
                "record {} has haplotypes of inconsistent length (expected {p})",
                self.id
            )));
        }
        if self.x_m.iter().chain(&self.x_f).any(|&x| x > 1) {
            return Err(Error::input(format!(
                "record {} has alleles other than 0/1",
                self.id
            )));
        }
        Ok(())
    }

    pub fn haplotype(&self, side: Side) -> &[u8] {
        match side {
            Side::Maternal => &self.x_m,
            Side::Paternal => &self.x_f,
        }
    }

    pub fn parent(&self, side: Side) -> Option<&HaplotypePair> {
        match side {
            Side::Maternal => self.mother.as_ref(),
            Side::Paternal => self.father.as_ref(),
        }
    }

    #[inline]
    pub fn genotype(&self, j: usize) -> u8 {
        self.x_m[j] + self.x_f[j]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PhenotypeKind {
    Binary,
    Continuous,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Phenotype {
    Binary(Vec<u8>),
    Continuous(Vec<f64>),
}

impl Phenotype {
    pub fn binary(values: Vec<u8>) -> Result<Self> {
        if values.iter().any(|&y| y > 1) {
            return Err(Error::input("binary phenotype values must be 0 or 1"));
        }
        Ok(Phenotype::Binary(values))
    }

    pub fn continuous(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|y| !y.is_finite()) {
            return Err(Error::input("continuous phenotype values must be finite"));
        }
        Ok(Phenotype::Continuous(values))
    }

    pub fn kind(&self) -> PhenotypeKind {
        match self {
            Phenotype::Binary(_) => PhenotypeKind::Binary,
            Phenotype::Continuous(_) => PhenotypeKind::Continuous,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Phenotype::Binary(v) => v.len(),
            Phenotype::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        match self {
            Phenotype::Binary(v) => v[i] as f64,
            Phenotype::Continuous(v) => v[i],
        }
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.value(i)).collect()
    }

    pub fn as_binary(&self) -> Option<&[u8]> {
        match self {
            Phenotype::Binary(v) => Some(v),
            Phenotype::Continuous(_) => None,
        }
    }

    /// Reorders observations: entry `i` of the result is entry `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Phenotype {
        match self {
            Phenotype::Binary(v) => Phenotype::Binary(order.iter().map(|&i| v[i]).collect()),
            Phenotype::Continuous(v) => {
                Phenotype::Continuous(order.iter().map(|&i| v[i]).collect())
            }
        }
    }
}

/// Dense `n x p` matrix of (possibly fractional) genotype dosages, stored
/// column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct GenotypeMatrix {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl GenotypeMatrix {
    pub fn zeros(n: usize, p: usize) -> Self {
        GenotypeMatrix {
            n,
            p,
            data: vec![0.0; n * p],
        }
    }

    pub fn from_fn(n: usize, p: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * p);
        for j in 0..p {
            for i in 0..n {
                data.push(f(i, j));
            }
        }
        GenotypeMatrix { n, p, data }
    }

    /// Builds from rows; every row must have the same length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::input("genotype rows differ in length"));
        }
        Ok(GenotypeMatrix::from_fn(n, p, |i, j| rows[i][j]))
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    pub fn n_cols(&self) -> usize {
        self.p
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.n + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.n + i] = v;
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.n..(j + 1) * self.n]
    }

    #[inline]
    pub fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.n..(j + 1) * self.n]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.p).map(|j| self.get(i, j)).collect()
    }

    pub fn select_rows(&self, rows: &[usize]) -> GenotypeMatrix {
        GenotypeMatrix::from_fn(rows.len(), self.p, |i, j| self.get(rows[i], j))
    }
}

/// Disjoint blocks of contiguous sites, each inside one chromosome, in
/// genomic order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupPartition {
    groups: Vec<Interval>,
}

impl GroupPartition {
    pub fn new(mut groups: Vec<Interval>, map: &GeneticMap) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::input("a partition needs at least one group"));
        }
        groups.sort();
        for g in &groups {
            g.check_within(map)?;
        }
        for w in groups.windows(2) {
            if w[1].first <= w[0].last {
                return Err(Error::input(format!(
                    "groups {}..={} and {}..={} overlap",
                    w[0].first, w[0].last, w[1].first, w[1].last
                )));
            }
        }
        Ok(GroupPartition { groups })
    }

    /// Splits every chromosome into consecutive groups of at most
    /// `width_morgans` genetic length, measured from each group's first site.
    pub fn by_genetic_width(map: &GeneticMap, width_morgans: f64) -> Result<Self> {
        if !(width_morgans > 0.0) {
            return Err(Error::input("group width must be positive"));
        }
        Self::by_key(map, |j| map.site(j).genetic_pos, width_morgans)
    }

    /// Splits every chromosome into windows of `width_bp` base pairs anchored
    /// at the chromosome's first site; empty windows are skipped.
    pub fn by_physical_width(map: &GeneticMap, width_bp: u64) -> Result<Self> {
        if width_bp == 0 {
            return Err(Error::input("group width must be positive"));
        }
        let mut groups = Vec::new();
        for c in map.chromosomes() {
            let origin = map.site(c.start).physical_pos;
            let mut first = c.start;
            let mut window = 0u64;
            for j in c.start..c.end {
                let w = (map.site(j).physical_pos - origin) / width_bp;
                if w != window {
                    groups.push(Interval { first, last: j - 1 });
                    first = j;
                    window = w;
                }
            }
            groups.push(Interval {
                first,
                last: c.end - 1,
            });
        }
        GroupPartition::new(groups, map)
    }

    /// Splits every chromosome into `per_chromosome` groups with (nearly)
    /// equal site counts.
    pub fn equal_count(map: &GeneticMap, per_chromosome: usize) -> Result<Self> {
        if per_chromosome == 0 {
            return Err(Error::input("need at least one group per chromosome"));
        }
        let mut groups = Vec::new();
        for c in map.chromosomes() {
            let k = per_chromosome.min(c.len());
            for g in 0..k {
                let first = c.start + g * c.len() / k;
                let last = c.start + (g + 1) * c.len() / k - 1;
                groups.push(Interval { first, last });
            }
        }
        GroupPartition::new(groups, map)
    }

    fn by_key(map: &GeneticMap, key: impl Fn(usize) -> f64, width: f64) -> Result<Self> {
        let mut groups = Vec::new();
        for c in map.chromosomes() {
            let mut first = c.start;
            for j in c.start + 1..c.end {
                if key(j) - key(first) >= width {
                    groups.push(Interval { first, last: j - 1 });
                    first = j;
                }
            }
            groups.push(Interval {
                first,
                last: c.end - 1,
            });
        }
        GroupPartition::new(groups, map)
    }

    pub fn groups(&self) -> &[Interval] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    /// Index of the group containing site `j`, if any.
    pub fn group_of(&self, j: usize) -> Option<usize> {
        let k = self.groups.partition_point(|g| g.last < j);
        (k < self.groups.len() && self.groups[k].contains(j)).then_some(k)
    }
}

/// Offspring haplotypes, parents and phenotype for `n` families.
#[derive(Clone, Debug)]
pub struct TrioDataset {
    pub records: Vec<TrioRecord>,
    pub phenotype: Phenotype,
    pub map: GeneticMap,
    pub params: HmmParams,
}

impl TrioDataset {
    pub fn new(
        records: Vec<TrioRecord>,
        phenotype: Phenotype,
        map: GeneticMap,
        params: HmmParams,
    ) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::input("dataset has no records"));
        }
        if phenotype.len() != records.len() {
            return Err(Error::input(format!(
                "{} phenotype values for {} records",
                phenotype.len(),
                records.len()
            )));
        }
        params.validate()?;
        for r in &records {
            r.validate(Some(map.len()))?;
        }
        Ok(TrioDataset {
            records,
            phenotype,
            map,
            params,
        })
    }

    pub fn n(&self) -> usize {
        self.records.len()
    }

    pub fn p(&self) -> usize {
        self.map.len()
    }

    /// Offspring genotypes `x_m + x_f`.
    pub fn genotype_matrix(&self) -> GenotypeMatrix {
        GenotypeMatrix::from_fn(self.n(), self.p(), |i, j| {
            self.records[i].genotype(j) as f64
        })
    }

    pub fn with_phenotype(&self, phenotype: Phenotype) -> Result<TrioDataset> {
        TrioDataset::new(
            self.records.clone(),
            phenotype,
            self.map.clone(),
            self.params,
        )
    }
}
