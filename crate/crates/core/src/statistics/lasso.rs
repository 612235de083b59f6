//! L1-penalized linear and logistic regression by cyclic coordinate
//! descent, with the penalty chosen by k-fold cross-validation.
//!
//! Columns are standardized internally (population standard deviation)
//! and coefficients are reported on the original 0/1/2 scale. The
//! standardized problem minimised at a given `lambda` is
//!
//! ```text
//! (1/n) L(b0, beta) + lambda * |beta|_1
//! ```
//!
//! with `L = 1/2 * RSS` for the linear model and the negative Bernoulli
//! log-likelihood for the logistic one.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;

use super::loss::softplus;
use crate::data::{GenotypeMatrix, Phenotype, PhenotypeKind};
use crate::error::{Error, Result};

const KKT_TARGET: f64 = 1e-7;
const DELTA_TOL: f64 = 1e-9;
const MAX_SWEEPS: usize = 100_000;
const MAX_NEWTON: usize = 200;
const MIN_WEIGHT: f64 = 1e-5;
/// Largest active set solved with a cached Gram matrix.
const MAX_GRAM: usize = 1500;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Family {
    BinaryLogistic,
    GaussianLinear,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::BinaryLogistic => "binary-logistic",
            Family::GaussianLinear => "gaussian-linear",
        }
    }

    pub fn from_name(s: &str) -> Option<Family> {
        match s {
            "binary-logistic" | "logistic" | "binary" => Some(Family::BinaryLogistic),
            "gaussian-linear" | "gaussian" | "linear" | "continuous" => {
                Some(Family::GaussianLinear)
            }
            _ => None,
        }
    }

    /// The family matching a phenotype kind.
    pub fn for_phenotype(kind: PhenotypeKind) -> Family {
        match kind {
            PhenotypeKind::Binary => Family::BinaryLogistic,
            PhenotypeKind::Continuous => Family::GaussianLinear,
        }
    }
}

/// A fitted regression model on the original genotype scale.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedModel {
    pub intercept: f64,
    pub coefficients: Vec<f64>,
    pub family: Family,
    pub lambda: f64,
    pub cv_score: f64,
}

impl FittedModel {
    pub fn zeros(p: usize, family: Family) -> Self {
        FittedModel {
            intercept: 0.0,
            coefficients: vec![0.0; p],
            family,
            lambda: 0.0,
            cv_score: f64::NAN,
        }
    }

    /// Linear predictor for every row of `x`.
    pub fn linear_predictor(&self, x: &GenotypeMatrix) -> Vec<f64> {
        let mut eta = vec![self.intercept; x.n_rows()];
        for (j, &b) in self.coefficients.iter().enumerate() {
            if b != 0.0 {
                for (e, &v) in eta.iter_mut().zip(x.column(j)) {
                    *e += b * v;
                }
            }
        }
        eta
    }

    fn eta_on(&self, data: &GwasDataset) -> Vec<f64> {
        let mut eta = vec![self.intercept; data.n];
        for (j, &b) in self.coefficients.iter().enumerate() {
            if b != 0.0 {
                for (e, &v) in eta.iter_mut().zip(data.column(j)) {
                    *e += b * v as f64;
                }
            }
        }
        eta
    }

    /// Largest violation of the optimality conditions of the standardized
    /// problem on `data` at `self.lambda`.
    pub fn kkt_residual(&self, data: &GwasDataset) -> Result<f64> {
        if self.coefficients.len() != data.p {
            return Err(Error::input("model and dataset have different SNP counts"));
        }
        let d = Standardized::new(data);
        let eta = self.eta_on(data);
        let resid = d.response_residual(self.family, &eta);
        let n = d.n as f64;
        let mut worst = (resid.iter().sum::<f64>() / n).abs();
        for j in 0..data.p {
            if d.inv_sd[j] == 0.0 {
                continue;
            }
            let g = d.dot(j, &resid) / n;
            let b = self.coefficients[j];
            let r = if b != 0.0 {
                (g - self.lambda * b.signum()).abs()
            } else {
                (g.abs() - self.lambda).max(0.0)
            };
            worst = worst.max(r);
        }
        Ok(worst)
    }
}

/// External genotype and phenotype data used only for fitting.
#[derive(Clone, Debug, PartialEq)]
pub struct GwasDataset {
    n: usize,
    p: usize,
    genotypes: Vec<u8>,
    phenotype: Phenotype,
}

impl GwasDataset {
    /// `genotypes` is column-major, `n * p` entries in {0, 1, 2}.
    pub fn new(n: usize, p: usize, genotypes: Vec<u8>, phenotype: Phenotype) -> Result<Self> {
        if genotypes.len() != n * p {
            return Err(Error::input(format!(
                "expected {} genotype entries, got {}",
                n * p,
                genotypes.len()
            )));
        }
        if phenotype.len() != n {
            return Err(Error::input(format!(
                "{} individuals but {} phenotype values",
                n,
                phenotype.len()
            )));
        }
        if let Some(v) = genotypes.iter().find(|&&v| v > 2) {
            return Err(Error::input(format!("genotype {v} is not in {{0, 1, 2}}")));
        }
        Ok(GwasDataset {
            n,
            p,
            genotypes,
            phenotype,
        })
    }

    pub fn from_rows(rows: &[Vec<u8>], phenotype: Phenotype) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::input("genotype rows have different lengths"));
        }
        let mut g = vec![0u8; n * p];
        for (i, r) in rows.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                g[j * n + i] = v;
            }
        }
        GwasDataset::new(n, p, g, phenotype)
    }

    pub fn from_matrix(x: &GenotypeMatrix, phenotype: Phenotype) -> Result<Self> {
        let mut g = Vec::with_capacity(x.n_rows() * x.n_cols());
        for j in 0..x.n_cols() {
            for &v in x.column(j) {
                if v != 0.0 && v != 1.0 && v != 2.0 {
                    return Err(Error::input(format!("genotype {v} is not in {{0, 1, 2}}")));
                }
                g.push(v as u8);
            }
        }
        GwasDataset::new(x.n_rows(), x.n_cols(), g, phenotype)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn column(&self, j: usize) -> &[u8] {
        &self.genotypes[j * self.n..(j + 1) * self.n]
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.genotypes[j * self.n + i]
    }

    pub fn phenotype(&self) -> &Phenotype {
        &self.phenotype
    }

    pub fn subset(&self, rows: &[usize]) -> GwasDataset {
        let n = rows.len();
        let mut g = Vec::with_capacity(n * self.p);
        for j in 0..self.p {
            let col = self.column(j);
            g.extend(rows.iter().map(|&i| col[i]));
        }
        GwasDataset {
            n,
            p: self.p,
            genotypes: g,
            phenotype: self.phenotype.permuted(rows),
        }
    }

    pub fn to_matrix(&self) -> GenotypeMatrix {
        GenotypeMatrix::from_fn(self.n, self.p, |i, j| self.get(i, j) as f64)
    }
}

/// Penalty values to fit, largest first.
#[derive(Clone, Debug, PartialEq)]
pub enum LambdaPath {
    /// `count` log-spaced values from `lambda_max` down to
    /// `min_ratio * lambda_max`.
    Auto {
        count: usize,
        min_ratio: f64,
    },
    Explicit(Vec<f64>),
}

impl Default for LambdaPath {
    fn default() -> Self {
        LambdaPath::Auto {
            count: 100,
            min_ratio: 1e-3,
        }
    }
}

impl LambdaPath {
    fn values(&self, lambda_max: f64) -> Result<Vec<f64>> {
        let mut v = match self {
            LambdaPath::Auto { count, min_ratio } => {
                if *count == 0 {
                    return Err(Error::input("empty lambda path"));
                }
                if !(*min_ratio > 0.0 && *min_ratio <= 1.0) {
                    return Err(Error::input("lambda min_ratio must be in (0, 1]"));
                }
                if lambda_max == 0.0 || *count == 1 {
                    vec![lambda_max]
                } else {
                    let step = min_ratio.ln() / (*count - 1) as f64;
                    (0..*count)
                        .map(|k| lambda_max * (step * k as f64).exp())
                        .collect()
                }
            }
            LambdaPath::Explicit(v) => {
                if v.is_empty() {
                    return Err(Error::input("empty lambda path"));
                }
                if v.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
                    return Err(Error::input("lambda values must be finite and nonnegative"));
                }
                v.clone()
            }
        };
        v.sort_by(|a, b| b.total_cmp(a));
        Ok(v)
    }
}

/// Design with columns standardized on the fly from the 0/1/2 codes.
struct Standardized<'a> {
    n: usize,
    p: usize,
    data: &'a GwasDataset,
    mean: Vec<f64>,
    inv_sd: Vec<f64>,
    y: Vec<f64>,
}

impl<'a> Standardized<'a> {
    fn new(data: &'a GwasDataset) -> Self {
        let n = data.n as f64;
        let mut mean = Vec::with_capacity(data.p);
        let mut inv_sd = Vec::with_capacity(data.p);
        for j in 0..data.p {
            let mut counts = [0usize; 3];
            for &v in data.column(j) {
                counts[v as usize] += 1;
            }
            let m = (counts[1] + 2 * counts[2]) as f64 / n;
            let m2 = (counts[1] + 4 * counts[2]) as f64 / n;
            let var = (m2 - m * m).max(0.0);
            mean.push(m);
            inv_sd.push(if var > 1e-12 { 1.0 / var.sqrt() } else { 0.0 });
        }
        Standardized {
            n: data.n,
            p: data.p,
            data,
            mean,
            inv_sd,
            y: data.phenotype.values(),
        }
    }

    /// `sum_i z_ij v_i`.
    fn dot(&self, j: usize, v: &[f64]) -> f64 {
        let (mut sx, mut s) = (0.0, 0.0);
        for (&x, &vi) in self.data.column(j).iter().zip(v) {
            sx += x as f64 * vi;
            s += vi;
        }
        self.inv_sd[j] * (sx - self.mean[j] * s)
    }

    /// `sum_i w_i z_ij v_i`.
    fn dot_weighted(&self, j: usize, w: &[f64], v: &[f64]) -> f64 {
        let (mut sx, mut s) = (0.0, 0.0);
        for ((&x, &wi), &vi) in self.data.column(j).iter().zip(w).zip(v) {
            let t = wi * vi;
            sx += x as f64 * t;
            s += t;
        }
        self.inv_sd[j] * (sx - self.mean[j] * s)
    }

    /// `(1/n) sum_i w_i z_ij^2`.
    fn weighted_norm(&self, j: usize, w: &[f64]) -> f64 {
        let (mut s2, mut s1, mut s0) = (0.0, 0.0, 0.0);
        for (&x, &wi) in self.data.column(j).iter().zip(w) {
            let x = x as f64;
            s2 += wi * x * x;
            s1 += wi * x;
            s0 += wi;
        }
        let m = self.mean[j];
        self.inv_sd[j] * self.inv_sd[j] * (s2 - 2.0 * m * s1 + m * m * s0) / self.n as f64
    }

    /// Column `j` on the standardized scale.
    fn standardized_column(&self, j: usize) -> Vec<f64> {
        let table = [
            -self.mean[j] * self.inv_sd[j],
            (1.0 - self.mean[j]) * self.inv_sd[j],
            (2.0 - self.mean[j]) * self.inv_sd[j],
        ];
        self.data
            .column(j)
            .iter()
            .map(|&x| table[x as usize])
            .collect()
    }

    /// `v_i += a * z_ij`.
    fn axpy(&self, j: usize, a: f64, v: &mut [f64]) {
        let c = a * self.inv_sd[j];
        let d = c * self.mean[j];
        let table = [-d, c - d, 2.0 * c - d];
        for (vi, &x) in v.iter_mut().zip(self.data.column(j)) {
            *vi += table[x as usize];
        }
    }

    /// `y - E[y | eta]`.
    fn response_residual(&self, family: Family, eta: &[f64]) -> Vec<f64> {
        match family {
            Family::GaussianLinear => self.y.iter().zip(eta).map(|(y, e)| y - e).collect(),
            Family::BinaryLogistic => self
                .y
                .iter()
                .zip(eta)
                .map(|(y, &e)| y - sigmoid(e))
                .collect(),
        }
    }

    fn loss(&self, family: Family, eta: &[f64]) -> f64 {
        let total: f64 = match family {
            Family::GaussianLinear => self
                .y
                .iter()
                .zip(eta)
                .map(|(y, e)| 0.5 * (y - e) * (y - e))
                .sum(),
            Family::BinaryLogistic => self
                .y
                .iter()
                .zip(eta)
                .map(|(y, &e)| softplus(e) - y * e)
                .sum(),
        };
        total / self.n as f64
    }

    fn null_intercept(&self, family: Family) -> f64 {
        let ybar = self.y.iter().sum::<f64>() / self.n as f64;
        match family {
            Family::GaussianLinear => ybar,
            Family::BinaryLogistic => (ybar / (1.0 - ybar)).ln(),
        }
    }

    /// `(1/n) sum_i z_ij (y_i - mu_i)` for every column.
    fn gradient(&self, family: Family, eta: &[f64]) -> Vec<f64> {
        let r = self.response_residual(family, eta);
        let n = self.n as f64;
        (0..self.p)
            .map(|j| {
                if self.inv_sd[j] == 0.0 {
                    0.0
                } else {
                    self.dot(j, &r) / n
                }
            })
            .collect()
    }
}

#[inline]
fn sigmoid(e: f64) -> f64 {
    if e >= 0.0 {
        1.0 / (1.0 + (-e).exp())
    } else {
        let t = e.exp();
        t / (1.0 + t)
    }
}

#[inline]
fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

fn check_phenotype(data: &GwasDataset, family: Family) -> Result<()> {
    if Family::for_phenotype(data.phenotype.kind()) != family {
        return Err(Error::input(format!(
            "family {} does not match a {:?} phenotype",
            family.name(),
            data.phenotype.kind()
        )));
    }
    if data.n < 2 {
        return Err(Error::input(
            "at least two individuals are needed to fit a model",
        ));
    }
    let y = data.phenotype.values();
    if y.iter().all(|&v| v == y[0]) {
        return Err(Error::input("the phenotype is constant"));
    }
    Ok(())
}

/// Smallest penalty at which every coefficient is zero.
pub fn lambda_max(data: &GwasDataset, family: Family) -> Result<f64> {
    check_phenotype(data, family)?;
    let d = Standardized::new(data);
    let eta = vec![d.null_intercept(family); d.n];
    Ok(d.gradient(family, &eta)
        .iter()
        .fold(0.0, |m, g| m.max(g.abs())))
}

/// Coordinate descent state on the standardized scale.
struct Solver<'d, 'a> {
    d: &'d Standardized<'a>,
    family: Family,
    b0: f64,
    beta: Vec<f64>,
    eta: Vec<f64>,
    trace: Vec<f64>,
}

impl<'d, 'a> Solver<'d, 'a> {
    fn new(d: &'d Standardized<'a>, family: Family) -> Self {
        let b0 = d.null_intercept(family);
        Solver {
            d,
            family,
            b0,
            beta: vec![0.0; d.p],
            eta: vec![b0; d.n],
            trace: Vec::new(),
        }
    }

    fn objective(&self, lambda: f64) -> f64 {
        self.d.loss(self.family, &self.eta)
            + lambda * self.beta.iter().map(|b| b.abs()).sum::<f64>()
    }

    fn record(&mut self, lambda: f64) {
        let f = self.objective(lambda);
        if let Some(&prev) = self.trace.last() {
            debug_assert!(
                f <= prev + 1e-12 * prev.abs().max(1.0),
                "objective increased from {prev} to {f}"
            );
        }
        self.trace.push(f);
    }

    /// Solves at `lambda`, starting from the current state, restricting
    /// updates to `set` until the full optimality check passes. Returns
    /// the final full gradient.
    fn solve(&mut self, lambda: f64, mut set: Vec<usize>) -> Result<Vec<f64>> {
        set.retain(|&j| self.d.inv_sd[j] != 0.0);
        let mut in_set = vec![false; self.d.p];
        for &j in &set {
            in_set[j] = true;
        }
        self.trace.clear();
        self.record(lambda);
        loop {
            match self.family {
                Family::GaussianLinear => self.solve_gaussian(lambda, &set),
                Family::BinaryLogistic => self.solve_logistic(lambda, &set),
            }
            let grad = self.d.gradient(self.family, &self.eta);
            let mut added = false;
            for j in 0..self.d.p {
                if !in_set[j] && self.d.inv_sd[j] != 0.0 && grad[j].abs() > lambda {
                    in_set[j] = true;
                    set.push(j);
                    added = true;
                }
            }
            if !added {
                if !self.eta.iter().all(|e| e.is_finite()) {
                    return Err(Error::Numeric("coordinate descent diverged".into()));
                }
                return Ok(grad);
            }
        }
    }

    fn solve_gaussian(&mut self, lambda: f64, set: &[usize]) {
        let d = self.d;
        let n = d.n as f64;
        let mut resid: Vec<f64> = d.y.iter().zip(&self.eta).map(|(y, e)| y - e).collect();
        let mut active: Vec<usize> = Vec::new();
        let mut full = true;
        for _ in 0..MAX_SWEEPS {
            let mut max_delta: f64 = 0.0;
            let visit: &[usize] = if full { set } else { &active };
            for &j in visit {
                let old = self.beta[j];
                let new = soft_threshold(old + d.dot(j, &resid) / n, lambda);
                if new != old {
                    d.axpy(j, old - new, &mut resid);
                    d.axpy(j, new - old, &mut self.eta);
                    self.beta[j] = new;
                    max_delta = max_delta.max((new - old).abs());
                }
            }
            let shift = resid.iter().sum::<f64>() / n;
            if shift != 0.0 {
                self.b0 += shift;
                resid.iter_mut().for_each(|r| *r -= shift);
                self.eta.iter_mut().for_each(|e| *e += shift);
            }
            self.record(lambda);
            let converged = max_delta < DELTA_TOL && shift.abs() < DELTA_TOL;
            if converged && full {
                break;
            }
            if full {
                active = set
                    .iter()
                    .copied()
                    .filter(|&j| self.beta[j] != 0.0)
                    .collect();
            }
            full = converged;
        }
    }

    fn restricted_kkt(&self, lambda: f64, set: &[usize]) -> f64 {
        let r = self.d.response_residual(self.family, &self.eta);
        let n = self.d.n as f64;
        let mut worst = (r.iter().sum::<f64>() / n).abs();
        for &j in set {
            let g = self.d.dot(j, &r) / n;
            let b = self.beta[j];
            worst = worst.max(if b != 0.0 {
                (g - lambda * b.signum()).abs()
            } else {
                (g.abs() - lambda).max(0.0)
            });
        }
        worst
    }

    fn solve_logistic(&mut self, lambda: f64, set: &[usize]) {
        let d = self.d;
        let n = d.n as f64;
        for _ in 0..MAX_NEWTON {
            if self.restricted_kkt(lambda, set) < KKT_TARGET {
                return;
            }
            let pi: Vec<f64> = self.eta.iter().map(|&e| sigmoid(e)).collect();
            let w: Vec<f64> = pi.iter().map(|p| (p * (1.0 - p)).max(MIN_WEIGHT)).collect();
            let w_sum: f64 = w.iter().sum();
            let rho0: Vec<f64> =
                d.y.iter()
                    .zip(&pi)
                    .zip(&w)
                    .map(|((y, p), wi)| (y - p) / wi)
                    .collect();
            let mut rho = rho0.clone();
            let h: Vec<f64> = set.iter().map(|&j| d.weighted_norm(j, &w)).collect();
            let mut beta = self.beta.clone();
            let mut b0 = self.b0;
            for _ in 0..MAX_SWEEPS {
                let mut max_delta: f64 = 0.0;
                for (k, &j) in set.iter().enumerate() {
                    if h[k] <= 0.0 {
                        continue;
                    }
                    let g = d.dot_weighted(j, &w, &rho) / n;
                    let old = beta[j];
                    let new = soft_threshold(h[k] * old + g, lambda) / h[k];
                    if new != old {
                        d.axpy(j, old - new, &mut rho);
                        beta[j] = new;
                        max_delta = max_delta.max((new - old).abs() * h[k].sqrt());
                    }
                }
                let shift = w.iter().zip(&rho).map(|(wi, r)| wi * r).sum::<f64>() / w_sum;
                b0 += shift;
                rho.iter_mut().for_each(|r| *r -= shift);
                if max_delta < DELTA_TOL && shift.abs() < DELTA_TOL {
                    break;
                }
                let active: Vec<usize> = (0..set.len())
                    .filter(|&k| beta[set[k]] != 0.0 && h[k] > 0.0)
                    .collect();
                if active.len() <= MAX_GRAM {
                    let cols: Vec<usize> = active.iter().map(|&k| set[k]).collect();
                    let h_active: Vec<f64> = active.iter().map(|&k| h[k]).collect();
                    cycle_active(
                        d, &w, w_sum, lambda, &cols, &h_active, &mut beta, &mut b0, &mut rho,
                    );
                }
            }
            let step_eta: Vec<f64> = rho0.iter().zip(&rho).map(|(a, b)| a - b).collect();
            let f_old = self.objective(lambda);
            let (old_b0, old_beta, old_eta) = (self.b0, self.beta.clone(), self.eta.clone());
            let mut t = 1.0;
            let mut accepted = false;
            for _ in 0..50 {
                self.b0 = old_b0 + t * (b0 - old_b0);
                for &j in set {
                    self.beta[j] = old_beta[j] + t * (beta[j] - old_beta[j]);
                }
                for ((e, o), s) in self.eta.iter_mut().zip(&old_eta).zip(&step_eta) {
                    *e = o + t * s;
                }
                if self.objective(lambda) <= f_old {
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                self.b0 = old_b0;
                self.beta = old_beta;
                self.eta = old_eta;
                return;
            }
            self.record(lambda);
        }
    }

    fn model(&self, lambda: f64) -> FittedModel {
        let coefficients: Vec<f64> = self
            .beta
            .iter()
            .zip(&self.d.inv_sd)
            .map(|(b, s)| b * s)
            .collect();
        let intercept = self.b0
            - coefficients
                .iter()
                .zip(&self.d.mean)
                .map(|(c, m)| c * m)
                .sum::<f64>();
        FittedModel {
            intercept,
            coefficients,
            family: self.family,
            lambda,
            cv_score: f64::NAN,
        }
    }
}

/// Coordinate descent on the weighted least-squares subproblem of one
/// Newton step, restricted to `cols`. A cached weighted Gram matrix makes
/// each update cost `cols.len()` instead of `n`; `rho` and `b0` are brought
/// up to date at the end.
#[allow(clippy::too_many_arguments)]
fn cycle_active(
    d: &Standardized,
    w: &[f64],
    w_sum: f64,
    lambda: f64,
    cols: &[usize],
    h: &[f64],
    beta: &mut [f64],
    b0: &mut f64,
    rho: &mut [f64],
) {
    let m = cols.len();
    if m == 0 {
        return;
    }
    let n = d.n as f64;
    let z: Vec<Vec<f64>> = cols.iter().map(|&j| d.standardized_column(j)).collect();
    let wz: Vec<Vec<f64>> = z
        .iter()
        .map(|c| c.iter().zip(w).map(|(a, b)| a * b).collect())
        .collect();
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut gram = vec![0.0; m * m];
    for a in 0..m {
        for b in a..m {
            let v = dot(&wz[a], &z[b]) / n;
            gram[a * m + b] = v;
            gram[b * m + a] = v;
        }
    }
    let col_sum: Vec<f64> = wz.iter().map(|c| c.iter().sum::<f64>()).collect();
    let mut g: Vec<f64> = wz.iter().map(|c| dot(c, rho) / n).collect();
    let mut s: f64 = w.iter().zip(rho.iter()).map(|(a, b)| a * b).sum();
    let mut moved = vec![0.0; m];
    let mut total_shift = 0.0;
    for _ in 0..MAX_SWEEPS {
        let mut max_delta: f64 = 0.0;
        for a in 0..m {
            let j = cols[a];
            let old = beta[j];
            let new = soft_threshold(h[a] * old + g[a], lambda) / h[a];
            if new != old {
                let delta = new - old;
                let row = &gram[a * m..(a + 1) * m];
                for (gb, r) in g.iter_mut().zip(row) {
                    *gb -= delta * r;
                }
                s -= delta * col_sum[a];
                beta[j] = new;
                moved[a] += delta;
                max_delta = max_delta.max(delta.abs() * h[a].sqrt());
            }
        }
        let shift = s / w_sum;
        *b0 += shift;
        total_shift += shift;
        for (gb, c) in g.iter_mut().zip(&col_sum) {
            *gb -= shift * c / n;
        }
        s -= shift * w_sum;
        if max_delta < DELTA_TOL && shift.abs() < DELTA_TOL {
            break;
        }
    }
    for (a, &j) in cols.iter().enumerate() {
        if moved[a] != 0.0 {
            d.axpy(j, -moved[a], rho);
        }
    }
    rho.iter_mut().for_each(|r| *r -= total_shift);
}

/// Fits along `lambdas` (decreasing) with warm starts and the sequential
/// strong rule, returning one model per value.
fn fit_path(d: &Standardized, family: Family, lambdas: &[f64]) -> Result<Vec<FittedModel>> {
    let mut solver = Solver::new(d, family);
    let mut grad = d.gradient(family, &solver.eta);
    let mut prev = grad.iter().fold(0.0, |m: f64, g| m.max(g.abs()));
    let mut out = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let cut = 2.0 * lambda - prev;
        let set: Vec<usize> = (0..d.p)
            .filter(|&j| solver.beta[j] != 0.0 || grad[j].abs() >= cut)
            .collect();
        grad = solver.solve(lambda, set)?;
        out.push(solver.model(lambda));
        prev = lambda;
    }
    Ok(out)
}

/// Fits at a single penalty from a cold start. Also returns the value of
/// the standardized objective after every sweep (linear model) or Newton
/// step (logistic model) of the final pass.
pub fn fit_at_lambda(
    data: &GwasDataset,
    family: Family,
    lambda: f64,
) -> Result<(FittedModel, Vec<f64>)> {
    check_phenotype(data, family)?;
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::input("lambda must be finite and nonnegative"));
    }
    let d = Standardized::new(data);
    let mut solver = Solver::new(&d, family);
    let grad = d.gradient(family, &solver.eta);
    let lmax = grad.iter().fold(0.0, |m: f64, g| m.max(g.abs()));
    let set: Vec<usize> = (0..d.p)
        .filter(|&j| grad[j].abs() >= 2.0 * lambda - lmax)
        .collect();
    solver.solve(lambda, set)?;
    Ok((solver.model(lambda), std::mem::take(&mut solver.trace)))
}

fn deviance(family: Family, eta: &[f64], y: &[f64]) -> f64 {
    match family {
        Family::GaussianLinear => y.iter().zip(eta).map(|(y, e)| (y - e) * (y - e)).sum(),
        Family::BinaryLogistic => {
            2.0 * y
                .iter()
                .zip(eta)
                .map(|(y, &e)| softplus(e) - y * e)
                .sum::<f64>()
        }
    }
}

/// Fold labels, with binary phenotypes spread evenly over folds.
fn assign_folds<R: Rng + ?Sized>(y: &Phenotype, k: usize, rng: &mut R) -> Vec<usize> {
    let n = y.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    if let Some(b) = y.as_binary() {
        order.sort_by_key(|&i| b[i]);
    }
    let mut folds = vec![0; n];
    for (pos, &i) in order.iter().enumerate() {
        folds[i] = pos % k;
    }
    folds
}

/// Fits the penalized model along `path` and returns the fit at the
/// penalty with the smallest cross-validated deviance. `cv_score` is
/// that deviance divided by the number of individuals.
pub fn fit_penalized<R: Rng + ?Sized>(
    data: &GwasDataset,
    family: Family,
    path: &LambdaPath,
    cv_folds: usize,
    rng: &mut R,
) -> Result<FittedModel> {
    check_phenotype(data, family)?;
    if cv_folds < 2 || cv_folds > data.n {
        return Err(Error::input(format!(
            "need 2 <= folds <= n, got {} folds for {} individuals",
            cv_folds, data.n
        )));
    }
    let d = Standardized::new(data);
    let lmax = {
        let eta = vec![d.null_intercept(family); d.n];
        d.gradient(family, &eta)
            .iter()
            .fold(0.0, |m: f64, g| m.max(g.abs()))
    };
    let lambdas = path.values(lmax)?;
    let folds = assign_folds(&data.phenotype, cv_folds, rng);

    let per_fold: Vec<Vec<f64>> = (0..cv_folds)
        .into_par_iter()
        .map(|k| -> Result<Vec<f64>> {
            let train: Vec<usize> = (0..data.n).filter(|&i| folds[i] != k).collect();
            let test: Vec<usize> = (0..data.n).filter(|&i| folds[i] == k).collect();
            let train_data = data.subset(&train);
            check_phenotype(&train_data, family).map_err(|_| {
                Error::input(format!(
                    "cross-validation fold {k} leaves a constant training phenotype"
                ))
            })?;
            let test_data = data.subset(&test);
            let y_test = test_data.phenotype.values();
            let models = fit_path(&Standardized::new(&train_data), family, &lambdas)?;
            Ok(models
                .iter()
                .map(|m| deviance(family, &m.eta_on(&test_data), &y_test))
                .collect())
        })
        .collect::<Result<_>>()?;

    let cv: Vec<f64> = (0..lambdas.len())
        .map(|l| per_fold.iter().map(|f| f[l]).sum::<f64>() / data.n as f64)
        .collect();
    let best = cv
        .iter()
        .enumerate()
        .fold(0, |b, (l, &v)| if v < cv[b] { l } else { b });
    let mut model = fit_path(&d, family, &lambdas[..=best])?
        .pop()
        .expect("path is nonempty");
    model.cv_score = cv[best];
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Two-level orthogonal array on three factors, repeated to n = 100.
    fn orthogonal_design() -> (GwasDataset, Vec<f64>) {
        let runs = [[0u8, 0, 0], [0, 2, 2], [2, 0, 2], [2, 2, 0]];
        let coef = [1.5, -0.4, 0.05];
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for i in 0..100 {
            let r = runs[i % 4];
            let noise = ((i * 37 % 11) as f64 - 5.0) * 0.01;
            y.push(0.3 + r.iter().zip(&coef).map(|(&x, c)| x as f64 * c).sum::<f64>() + noise);
            rows.push(r.to_vec());
        }
        let data =
            GwasDataset::from_rows(&rows, Phenotype::continuous(y.clone()).unwrap()).unwrap();
        (data, y)
    }

    #[test]
    fn orthogonal_design_soft_thresholds() {
        let (data, y) = orthogonal_design();
        let n = 100.0;
        let ybar = y.iter().sum::<f64>() / n;
        for &lambda in &[0.0, 0.05, 0.2, 0.5] {
            let (m, _) = fit_at_lambda(&data, Family::GaussianLinear, lambda).unwrap();
            for j in 0..3 {
                // standardized column is +-1, sd of the raw column is 1
                let z: Vec<f64> = data.column(j).iter().map(|&x| x as f64 - 1.0).collect();
                let ols = z.iter().zip(&y).map(|(z, y)| z * (y - ybar)).sum::<f64>() / n;
                let want = soft_threshold(ols, lambda);
                assert!(
                    (m.coefficients[j] - want).abs() < 1e-4,
                    "lambda {lambda} j {j}"
                );
            }
        }
    }

    #[test]
    fn lambda_max_gives_zero_model() {
        let (data, y) = orthogonal_design();
        let lmax = lambda_max(&data, Family::GaussianLinear).unwrap();
        let (m, _) = fit_at_lambda(&data, Family::GaussianLinear, lmax).unwrap();
        assert!(m.coefficients.iter().all(|&b| b == 0.0));
        assert!((m.intercept - y.iter().sum::<f64>() / 100.0).abs() < 1e-12);
        let (m, _) = fit_at_lambda(&data, Family::GaussianLinear, 0.99 * lmax).unwrap();
        assert!(m.coefficients.iter().any(|&b| b != 0.0));
    }

    fn logistic_toy(seed: u64, n: usize, p: usize) -> GwasDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rows = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n {
            let r: Vec<u8> = (0..p).map(|_| rng.gen_range(0..3u8)).collect();
            let eta = -1.0 + 1.2 * r[0] as f64;
            y.push(u8::from(rng.gen::<f64>() < sigmoid(eta)));
            rows.push(r);
        }
        GwasDataset::from_rows(&rows, Phenotype::binary(y).unwrap()).unwrap()
    }

    #[test]
    fn objective_trace_non_increasing() {
        let data = logistic_toy(3, 300, 12);
        let lmax = lambda_max(&data, Family::BinaryLogistic).unwrap();
        let (m, trace) = fit_at_lambda(&data, Family::BinaryLogistic, 0.05 * lmax).unwrap();
        assert!(trace.len() > 1);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.kkt_residual(&data).unwrap() < 1e-6);

        let (data, _) = orthogonal_design();
        let (_, trace) = fit_at_lambda(&data, Family::GaussianLinear, 0.01).unwrap();
        assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    }

    #[test]
    fn cross_validated_fit_satisfies_kkt_and_is_deterministic() {
        let data = logistic_toy(5, 400, 20);
        let path = LambdaPath::Auto {
            count: 30,
            min_ratio: 1e-2,
        };
        let a = fit_penalized(
            &data,
            Family::BinaryLogistic,
            &path,
            5,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        let b = fit_penalized(
            &data,
            Family::BinaryLogistic,
            &path,
            5,
            &mut ChaCha8Rng::seed_from_u64(1),
        )
        .unwrap();
        assert_eq!(a, b);
        assert!(a.coefficients[0] > 0.0);
        assert!(a.cv_score.is_finite());
        assert!(a.kkt_residual(&data).unwrap() < 1e-6);
    }

    #[test]
    fn rejects_bad_inputs() {
        let rows = vec![vec![0u8], vec![1], vec![2]];
        let flat =
            GwasDataset::from_rows(&rows, Phenotype::binary(vec![1, 1, 1]).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(fit_penalized(
            &flat,
            Family::BinaryLogistic,
            &LambdaPath::default(),
            2,
            &mut rng
        )
        .is_err());
        let ok = GwasDataset::from_rows(&rows, Phenotype::binary(vec![1, 0, 1]).unwrap()).unwrap();
        let empty = LambdaPath::Explicit(vec![]);
        assert!(fit_penalized(&ok, Family::BinaryLogistic, &empty, 2, &mut rng).is_err());
        assert!(fit_penalized(
            &ok,
            Family::GaussianLinear,
            &LambdaPath::default(),
            2,
            &mut rng
        )
        .is_err());
        assert!(GwasDataset::from_rows(&[vec![3u8]], Phenotype::binary(vec![1]).unwrap()).is_err());
    }
}
