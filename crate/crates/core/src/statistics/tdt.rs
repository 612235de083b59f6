use statrs::function::erf::erfc;

use super::{ColumnBlock, PreparedStatistic, Statistic};
use crate::data::{GenotypeMatrix, Phenotype, Side, TrioRecord};
use crate::error::{Error, Result};

fn cases(y: &Phenotype) -> Result<Vec<usize>> {
    let y = y
        .as_binary()
        .ok_or_else(|| Error::input("the TDT statistic needs a binary phenotype"))?;
    Ok(y.iter()
        .enumerate()
        .filter(|(_, &v)| v == 1)
        .map(|(i, _)| i)
        .collect())
}

/// Allele count among cases, `sum_i X_ij * 1{Y_i = 1}`, maximised over
/// `columns`.
pub fn tdt_statistic(x: &GenotypeMatrix, columns: &[usize], y: &Phenotype) -> Result<f64> {
    if x.n_rows() != y.len() {
        return Err(Error::input("genotype rows and phenotype length differ"));
    }
    if columns.is_empty() {
        return Err(Error::input("the TDT statistic needs at least one column"));
    }
    let cases = cases(y)?;
    Ok(columns
        .iter()
        .map(|&j| {
            let col = x.column(j);
            cases.iter().map(|&i| col[i]).sum::<f64>()
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Case allele count, maximised over the tested SNPs.
#[derive(Clone, Copy, Debug, Default)]
pub struct TdtStatistic;

struct PreparedTdt {
    cases: Vec<usize>,
}

impl PreparedStatistic for PreparedTdt {
    fn score(&self, block: &ColumnBlock) -> Result<f64> {
        if block.columns().is_empty() {
            return Err(Error::input("the TDT statistic needs at least one column"));
        }
        Ok((0..block.columns().len())
            .map(|k| {
                let col = block.column(k);
                self.cases.iter().map(|&i| col[i]).sum::<f64>()
            })
            .fold(f64::NEG_INFINITY, f64::max))
    }
}

impl Statistic for TdtStatistic {
    fn name(&self) -> String {
        "tdt".into()
    }

    fn check(&self, phenotype: &Phenotype, _n_cols: usize) -> Result<()> {
        cases(phenotype).map(|_| ())
    }

    fn relevant_columns(&self, tested: &[usize]) -> Vec<usize> {
        tested.to_vec()
    }

    fn prepare<'a>(
        &'a self,
        _x: &'a GenotypeMatrix,
        y: &'a Phenotype,
        _tested: &[usize],
    ) -> Result<Box<dyn PreparedStatistic + 'a>> {
        Ok(Box::new(PreparedTdt { cases: cases(y)? }))
    }
}

/// Transmission counts from heterozygous parents to affected offspring.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TdtCounts {
    /// Transmissions of allele 1.
    pub b: u64,
    /// Transmissions of allele 0.
    pub c: u64,
    pub statistic: f64,
    pub p_value: f64,
}

/// Classical transmission disequilibrium test at one SNP: McNemar's
/// `(b - c)^2 / (b + c)` against a chi-square with one degree of freedom.
pub fn tdt_analytic(
    records: &[TrioRecord],
    phenotype: &Phenotype,
    snp: usize,
) -> Result<TdtCounts> {
    let y = phenotype
        .as_binary()
        .ok_or_else(|| Error::input("the TDT needs a binary phenotype"))?;
    if y.len() != records.len() {
        return Err(Error::input(
            "phenotype length differs from the number of records",
        ));
    }
    let (mut b, mut c) = (0u64, 0u64);
    for (rec, &yi) in records.iter().zip(y) {
        if yi != 1 {
            continue;
        }
        if snp >= rec.len() {
            return Err(Error::input(format!("SNP index {snp} out of range")));
        }
        for side in Side::BOTH {
            if let Some(par) = rec.parent(side) {
                if par.strand_a[snp] != par.strand_b[snp] {
                    if rec.haplotype(side)[snp] == 1 {
                        b += 1;
                    } else {
                        c += 1;
                    }
                }
            }
        }
    }
    let (statistic, p_value) = if b + c == 0 {
        (0.0, 1.0)
    } else {
        let diff = b as f64 - c as f64;
        let s = diff * diff / (b + c) as f64;
        (s, erfc((s / 2.0).sqrt()).min(1.0))
    };
    Ok(TdtCounts {
        b,
        c,
        statistic,
        p_value,
    })
}
