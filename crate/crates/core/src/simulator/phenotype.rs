use rand::Rng;
use rand_distr::{Distribution, Normal};
use statrs::function::erf::erfc_inv;

use crate::data::{GenotypeMatrix, Phenotype};
use crate::error::{Error, Result};
use crate::statistics::Family;

/// Generative model of a trait given offspring genotypes.
#[derive(Clone, Debug, PartialEq)]
pub struct TraitModel {
    pub family: Family,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Standard deviation of the gaussian noise (linear family only).
    pub noise_sd: f64,
}

impl TraitModel {
    pub fn null(family: Family, p: usize) -> Self {
        TraitModel {
            family,
            coefficients: vec![0.0; p],
            intercept: 0.0,
            noise_sd: 1.0,
        }
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.coefficients.len())
            .filter(|&j| self.coefficients[j] != 0.0)
            .collect()
    }

    /// `b0 + beta' x` for every row.
    pub fn linear_predictor(&self, x: &GenotypeMatrix) -> Result<Vec<f64>> {
        if x.n_cols() != self.coefficients.len() {
            return Err(Error::input(format!(
                "trait has {} coefficients for {} sites",
                self.coefficients.len(),
                x.n_cols()
            )));
        }
        Ok(genetic_value(x, &self.coefficients, self.intercept))
    }
}

fn genetic_value(x: &GenotypeMatrix, coefficients: &[f64], intercept: f64) -> Vec<f64> {
    let mut eta = vec![intercept; x.n_rows()];
    for (j, &b) in coefficients.iter().enumerate() {
        if b != 0.0 {
            for (e, &v) in eta.iter_mut().zip(x.column(j)) {
                *e += b * v;
            }
        }
    }
    eta
}

fn sigmoid(e: f64) -> f64 {
    if e >= 0.0 {
        1.0 / (1.0 + (-e).exp())
    } else {
        let t = e.exp();
        t / (1.0 + t)
    }
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n)
}

/// Independent draws `Y_i ~ Bernoulli(sigmoid(b0 + beta' X_i))`.
pub fn generate_binary_phenotype<R: Rng + ?Sized>(
    x: &GenotypeMatrix,
    model: &TraitModel,
    rng: &mut R,
) -> Result<Phenotype> {
    if model.family != Family::BinaryLogistic {
        return Err(Error::input(
            "binary phenotypes need a logistic trait model",
        ));
    }
    let eta = model.linear_predictor(x)?;
    Phenotype::binary(
        eta.iter()
            .map(|&e| u8::from(rng.gen::<f64>() < sigmoid(e)))
            .collect(),
    )
}

/// `Y_i = b0 + beta' X_i + noise_sd * N(0, 1)`.
pub fn generate_continuous_phenotype<R: Rng + ?Sized>(
    x: &GenotypeMatrix,
    model: &TraitModel,
    rng: &mut R,
) -> Result<Phenotype> {
    if model.family != Family::GaussianLinear {
        return Err(Error::input(
            "continuous phenotypes need a linear trait model",
        ));
    }
    if !(model.noise_sd >= 0.0 && model.noise_sd.is_finite()) {
        return Err(Error::input(
            "noise standard deviation must be finite and nonnegative",
        ));
    }
    let eta = model.linear_predictor(x)?;
    let noise = Normal::new(0.0, 1.0).expect("standard normal");
    Phenotype::continuous(
        eta.iter()
            .map(|&e| e + model.noise_sd * noise.sample(rng))
            .collect(),
    )
}

pub fn generate_phenotype<R: Rng + ?Sized>(
    x: &GenotypeMatrix,
    model: &TraitModel,
    rng: &mut R,
) -> Result<Phenotype> {
    match model.family {
        Family::BinaryLogistic => generate_binary_phenotype(x, model, rng),
        Family::GaussianLinear => generate_continuous_phenotype(x, model, rng),
    }
}

fn normal_density_at_quantile(p: f64) -> f64 {
    let z = -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p);
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Liability-scale heritability of a binary trait over the rows of `x`:
///
/// ```text
/// var(Yhat) / var(Y) * Ybar (1 - Ybar) / phi(Phi^-1(Ybar))
/// ```
///
/// with `Yhat = sigmoid(b0 + beta' X)`, `Ybar` its mean and
/// `var(Y) = Ybar (1 - Ybar)`.
pub fn liability_heritability(x: &GenotypeMatrix, model: &TraitModel) -> Result<f64> {
    if model.family != Family::BinaryLogistic {
        return Err(Error::input(
            "liability-scale heritability is defined for binary traits",
        ));
    }
    if x.n_rows() == 0 {
        return Err(Error::input("no genotypes"));
    }
    let yhat: Vec<f64> = model
        .linear_predictor(x)?
        .into_iter()
        .map(sigmoid)
        .collect();
    liability_from_probabilities(&yhat)
}

fn liability_from_probabilities(yhat: &[f64]) -> Result<f64> {
    let (ybar, var_hat) = mean_var(yhat);
    let var_y = ybar * (1.0 - ybar);
    if !(var_y > 0.0) {
        return Err(Error::DegenerateEvidence(format!(
            "prevalence {ybar} leaves no variance"
        )));
    }
    Ok(var_hat / var_y * var_y / normal_density_at_quantile(ybar))
}

/// Intercept giving mean `sigmoid(g_i + b0)` equal to `prevalence`.
fn intercept_for(g: &[f64], prevalence: f64) -> f64 {
    let mean = |b0: f64| g.iter().map(|&e| sigmoid(e + b0)).sum::<f64>() / g.len() as f64;
    let reach = 60.0 + g.iter().fold(0.0, |m: f64, e| m.max(e.abs()));
    let (mut lo, mut hi) = (-reach, reach);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(mid) < prevalence {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Equal positive effects on `support`, scaled to reach the target
/// heritability on the rows of `x`. For a binary trait the intercept is set
/// for the target prevalence (liability-scale heritability); for a
/// continuous one the noise level is set from `h2 = var(g) / var(Y)`.
pub fn calibrate_trait(
    x: &GenotypeMatrix,
    support: &[usize],
    h2: f64,
    prevalence: f64,
    family: Family,
) -> Result<TraitModel> {
    if !(0.0..1.0).contains(&h2) && !(family == Family::GaussianLinear && h2 == 1.0) {
        return Err(Error::input(format!("heritability {h2} is out of range")));
    }
    if let Some(&j) = support.iter().find(|&&j| j >= x.n_cols()) {
        return Err(Error::input(format!("causal site {j} is out of range")));
    }
    if x.n_rows() < 2 {
        return Err(Error::input("calibration needs at least two genotype rows"));
    }
    let p = x.n_cols();
    let with_strength = |b: f64| {
        let mut c = vec![0.0; p];
        for &j in support {
            c[j] = b;
        }
        c
    };
    match family {
        Family::GaussianLinear => {
            if h2 == 0.0 {
                return Ok(TraitModel::null(family, p));
            }
            let coefficients = with_strength(1.0);
            let (_, var_g) = mean_var(&genetic_value(x, &coefficients, 0.0));
            if !(var_g > 0.0) {
                return Err(Error::input(
                    "causal sites do not vary in the calibration sample",
                ));
            }
            Ok(TraitModel {
                family,
                coefficients,
                intercept: 0.0,
                noise_sd: (var_g * (1.0 - h2) / h2).sqrt(),
            })
        }
        Family::BinaryLogistic => {
            if !(prevalence > 0.0 && prevalence < 1.0) {
                return Err(Error::input(format!(
                    "prevalence {prevalence} is not in (0, 1)"
                )));
            }
            let fit = |b: f64| -> Result<(TraitModel, f64)> {
                let coefficients = with_strength(b);
                let g = genetic_value(x, &coefficients, 0.0);
                let intercept = intercept_for(&g, prevalence);
                let yhat: Vec<f64> = g.iter().map(|&e| sigmoid(e + intercept)).collect();
                let h = liability_from_probabilities(&yhat)?;
                Ok((
                    TraitModel {
                        family,
                        coefficients,
                        intercept,
                        noise_sd: 0.0,
                    },
                    h,
                ))
            };
            if h2 == 0.0 {
                return Ok(fit(0.0)?.0);
            }
            if support.is_empty() {
                return Err(Error::input("a positive heritability needs causal sites"));
            }
            let mut hi = 0.05;
            while fit(hi)?.1 < h2 {
                hi *= 2.0;
                if hi > 200.0 {
                    return Err(Error::input(format!(
                        "heritability {h2} is not reachable with {} causal sites at prevalence {prevalence}",
                        support.len()
                    )));
                }
            }
            let mut lo = 0.0;
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if fit(mid)?.1 < h2 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            Ok(fit(0.5 * (lo + hi))?.0)
        }
    }
}
