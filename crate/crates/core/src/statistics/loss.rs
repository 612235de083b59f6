use super::{ColumnBlock, Family, FittedModel, PreparedStatistic, Statistic};
use crate::data::{GenotypeMatrix, Phenotype, PhenotypeKind};
use crate::error::{Error, Result};

/// `log(1 + exp(eta))` without overflow.
#[inline]
pub(crate) fn softplus(eta: f64) -> f64 {
    if eta > 0.0 {
        eta + (-eta).exp().ln_1p()
    } else {
        eta.exp().ln_1p()
    }
}

#[inline]
fn pointwise(family: Family, eta: f64, y: f64) -> f64 {
    match family {
        Family::GaussianLinear => {
            let r = eta - y;
            -r * r
        }
        // y log s(eta) + (1 - y) log(1 - s(eta))
        Family::BinaryLogistic => y * eta - softplus(eta),
    }
}

fn check_family(model: &FittedModel, y: &Phenotype) -> Result<()> {
    let ok = matches!(
        (model.family, y.kind()),
        (Family::GaussianLinear, PhenotypeKind::Continuous)
            | (Family::BinaryLogistic, PhenotypeKind::Binary)
    );
    if ok {
        Ok(())
    } else {
        Err(Error::input(format!(
            "model family {:?} does not match a {:?} phenotype",
            model.family,
            y.kind()
        )))
    }
}

fn finite(total: f64) -> Result<f64> {
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Numeric("loss statistic is not finite".into()))
    }
}

/// Negated total loss of a fixed model: minus the residual sum of squares
/// for a linear model, the Bernoulli log-likelihood for a logistic one.
/// Larger values mean a better fit.
pub fn loss_statistic(model: &FittedModel, x: &GenotypeMatrix, y: &Phenotype) -> Result<f64> {
    check_family(model, y)?;
    if x.n_cols() != model.coefficients.len() || x.n_rows() != y.len() {
        return Err(Error::input(format!(
            "genotypes are {}x{}, model has {} coefficients and phenotype {} values",
            x.n_rows(),
            x.n_cols(),
            model.coefficients.len(),
            y.len()
        )));
    }
    let mut eta = vec![model.intercept; x.n_rows()];
    for (j, &b) in model.coefficients.iter().enumerate() {
        if b != 0.0 {
            for (e, &v) in eta.iter_mut().zip(x.column(j)) {
                *e += b * v;
            }
        }
    }
    finite(
        eta.iter()
            .enumerate()
            .map(|(i, &e)| pointwise(model.family, e, y.value(i)))
            .sum(),
    )
}

/// [`loss_statistic`] of a model fitted on external data.
#[derive(Clone, Debug)]
pub struct LossStatistic {
    model: FittedModel,
    nonzero: Vec<usize>,
}

impl LossStatistic {
    pub fn new(model: FittedModel) -> Self {
        let nonzero = model
            .coefficients
            .iter()
            .enumerate()
            .filter(|(_, &b)| b != 0.0)
            .map(|(j, _)| j)
            .collect();
        LossStatistic { model, nonzero }
    }

    pub fn model(&self) -> &FittedModel {
        &self.model
    }
}

struct PreparedLoss<'a> {
    model: &'a FittedModel,
    y: Vec<f64>,
    base_eta: Vec<f64>,
}

impl PreparedStatistic for PreparedLoss<'_> {
    fn score(&self, block: &ColumnBlock) -> Result<f64> {
        let mut eta = self.base_eta.clone();
        for (k, &j) in block.columns().iter().enumerate() {
            let b = self.model.coefficients[j];
            for (e, &v) in eta.iter_mut().zip(block.column(k)) {
                *e += b * v;
            }
        }
        finite(
            eta.iter()
                .zip(&self.y)
                .map(|(&e, &y)| pointwise(self.model.family, e, y))
                .sum(),
        )
    }
}

impl Statistic for LossStatistic {
    fn name(&self) -> String {
        match self.model.family {
            Family::GaussianLinear => "loss-gaussian".into(),
            Family::BinaryLogistic => "loss-logistic".into(),
        }
    }

    fn check(&self, phenotype: &Phenotype, n_cols: usize) -> Result<()> {
        check_family(&self.model, phenotype)?;
        if n_cols != self.model.coefficients.len() {
            return Err(Error::input(format!(
                "model has {} coefficients for {} sites",
                self.model.coefficients.len(),
                n_cols
            )));
        }
        Ok(())
    }

    fn relevant_columns(&self, tested: &[usize]) -> Vec<usize> {
        tested
            .iter()
            .copied()
            .filter(|&j| self.model.coefficients.get(j).is_some_and(|&b| b != 0.0))
            .collect()
    }

    fn prepare<'a>(
        &'a self,
        x: &'a GenotypeMatrix,
        y: &'a Phenotype,
        tested: &[usize],
    ) -> Result<Box<dyn PreparedStatistic + 'a>> {
        self.check(y, x.n_cols())?;
        let mut is_tested = vec![false; x.n_cols()];
        for &j in tested {
            is_tested[j] = true;
        }
        let mut base_eta = vec![self.model.intercept; x.n_rows()];
        for &j in &self.nonzero {
            if !is_tested[j] {
                let b = self.model.coefficients[j];
                for (e, &v) in base_eta.iter_mut().zip(x.column(j)) {
                    *e += b * v;
                }
            }
        }
        Ok(Box::new(PreparedLoss {
            model: &self.model,
            y: y.values(),
            base_eta,
        }))
    }
}
