//! Test statistics for the digital twin tests.
//!
//! A [`Statistic`] scores a genotype matrix against a phenotype, larger
//! meaning stronger evidence. The randomization tests only ever change a
//! block of "tested" columns between evaluations, so statistics are
//! prepared once per test with the fixed columns and then scored against
//! each replacement block. This keeps the per-replicate cost proportional
//! to the block rather than to the whole genome.

mod lasso;
mod loss;
mod tdt;
mod weights;

pub use lasso::{
    fit_at_lambda, fit_penalized, lambda_max, Family, FittedModel, GwasDataset, LambdaPath,
};
pub use loss::{loss_statistic, LossStatistic};
pub use tdt::{tdt_analytic, tdt_statistic, TdtCounts, TdtStatistic};
pub use weights::{group_weights, order_by_weight, support};

use crate::data::{GenotypeMatrix, Phenotype};
use crate::error::{Error, Result};

/// Values of a set of columns for every observation, column by column.
#[derive(Clone, Debug, PartialEq)]
pub struct ColumnBlock {
    n: usize,
    columns: Vec<usize>,
    values: Vec<f64>,
}

impl ColumnBlock {
    pub fn zeros(n: usize, columns: Vec<usize>) -> Self {
        let values = vec![0.0; n * columns.len()];
        ColumnBlock { n, columns, values }
    }

    pub fn from_matrix(x: &GenotypeMatrix, columns: &[usize]) -> Self {
        let mut b = ColumnBlock::zeros(x.n_rows(), columns.to_vec());
        for (k, &j) in columns.iter().enumerate() {
            b.column_mut(k).copy_from_slice(x.column(j));
        }
        b
    }

    pub fn n_rows(&self) -> usize {
        self.n
    }

    /// Global column indices, in block order.
    pub fn columns(&self) -> &[usize] {
        &self.columns
    }

    #[inline]
    pub fn column(&self, k: usize) -> &[f64] {
        &self.values[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn column_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.values[k * self.n..(k + 1) * self.n]
    }

    #[inline]
    pub fn set(&mut self, i: usize, k: usize, v: f64) {
        self.values[k * self.n + i] = v;
    }

    #[inline]
    pub fn add(&mut self, i: usize, k: usize, v: f64) {
        self.values[k * self.n + i] += v;
    }

    /// Raw values, column-major.
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// A scoring rule `T(X, Y)`.
pub trait Statistic: Send + Sync {
    fn name(&self) -> String;

    /// Rejects phenotypes or dimensions the statistic cannot score.
    fn check(&self, phenotype: &Phenotype, n_cols: usize) -> Result<()>;

    /// The subset of `tested` that can change the score. Twins are only
    /// drawn at these columns.
    fn relevant_columns(&self, tested: &[usize]) -> Vec<usize>;

    /// Fixes every column outside `tested` (taken from `x`) and the
    /// phenotype.
    fn prepare<'a>(
        &'a self,
        x: &'a GenotypeMatrix,
        y: &'a Phenotype,
        tested: &[usize],
    ) -> Result<Box<dyn PreparedStatistic + 'a>>;
}

/// A statistic with everything but the tested block fixed.
pub trait PreparedStatistic: Send + Sync {
    /// Scores one block whose columns are `relevant_columns(tested)`.
    fn score(&self, block: &ColumnBlock) -> Result<f64>;
}

/// Plain evaluation `T(x, y)` over every column.
pub fn evaluate(stat: &dyn Statistic, x: &GenotypeMatrix, y: &Phenotype) -> Result<f64> {
    if x.n_rows() != y.len() {
        return Err(Error::input(format!(
            "{} genotype rows but {} phenotype values",
            x.n_rows(),
            y.len()
        )));
    }
    stat.check(y, x.n_cols())?;
    let all: Vec<usize> = (0..x.n_cols()).collect();
    let cols = stat.relevant_columns(&all);
    let prepared = stat.prepare(x, y, &all)?;
    prepared.score(&ColumnBlock::from_matrix(x, &cols))
}
