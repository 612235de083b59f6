//! Procedures turning per-group p-values into a set of discoveries.

use crate::error::{Error, Result};

/// Largest p-value used inside the accumulation function, which diverges
/// at 1.
const ACCUMULATION_P_MAX: f64 = 1.0 - 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Procedure {
    Bonferroni,
    BenjaminiHochberg,
    AccumulationTest,
    SelectiveSeqStep,
}

impl Procedure {
    pub fn name(self) -> &'static str {
        match self {
            Procedure::Bonferroni => "bonferroni",
            Procedure::BenjaminiHochberg => "bh",
            Procedure::AccumulationTest => "accumulation",
            Procedure::SelectiveSeqStep => "seqstep",
        }
    }

    pub fn from_name(s: &str) -> Option<Procedure> {
        match s {
            "bonferroni" => Some(Procedure::Bonferroni),
            "bh" | "benjamini-hochberg" => Some(Procedure::BenjaminiHochberg),
            "accumulation" | "accumulation-test" => Some(Procedure::AccumulationTest),
            "seqstep" | "selective-seqstep" => Some(Procedure::SelectiveSeqStep),
            _ => None,
        }
    }

    /// Error rate the procedure controls for independent null p-values.
    pub fn guarantee(self) -> Guarantee {
        match self {
            Procedure::Bonferroni => Guarantee::Fwer,
            Procedure::BenjaminiHochberg | Procedure::SelectiveSeqStep => Guarantee::Fdr,
            Procedure::AccumulationTest => Guarantee::ModifiedFdr,
        }
    }

    /// Whether the procedure uses the order of its input.
    pub fn is_ordered(self) -> bool {
        matches!(
            self,
            Procedure::AccumulationTest | Procedure::SelectiveSeqStep
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Guarantee {
    /// Family-wise error rate.
    Fwer,
    /// False discovery rate.
    Fdr,
    /// `E[V / (R + 1/alpha)]`-type modified false discovery rate.
    ModifiedFdr,
}

/// Rejected hypotheses, as indices into the p-values passed in.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct DiscoverySet {
    pub procedure: Procedure,
    pub guarantee: Guarantee,
    pub alpha: f64,
    pub parameter: Option<f64>,
    pub rejected: Vec<usize>,
}

impl DiscoverySet {
    fn new(
        procedure: Procedure,
        alpha: f64,
        parameter: Option<f64>,
        mut rejected: Vec<usize>,
    ) -> Self {
        rejected.sort_unstable();
        DiscoverySet {
            procedure,
            guarantee: procedure.guarantee(),
            alpha,
            parameter,
            rejected,
        }
    }

    pub fn len(&self) -> usize {
        self.rejected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rejected.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.rejected.binary_search(&i).is_ok()
    }

    /// Rejection flag per hypothesis.
    pub fn mask(&self, m: usize) -> Vec<bool> {
        let mut out = vec![false; m];
        for &i in &self.rejected {
            out[i] = true;
        }
        out
    }
}

fn check(pvals: &[f64], alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::input(format!(
            "alpha must be in (0, 1), got {alpha}"
        )));
    }
    if let Some(p) = pvals.iter().find(|p| !(**p > 0.0 && **p <= 1.0)) {
        return Err(Error::input(format!("p-values must be in (0, 1], got {p}")));
    }
    Ok(())
}

/// Rejects every `p_i <= alpha / m`.
pub fn bonferroni(pvals: &[f64], alpha: f64) -> Result<DiscoverySet> {
    check(pvals, alpha)?;
    let cut = alpha / pvals.len().max(1) as f64;
    let rejected = (0..pvals.len()).filter(|&i| pvals[i] <= cut).collect();
    Ok(DiscoverySet::new(
        Procedure::Bonferroni,
        alpha,
        None,
        rejected,
    ))
}

/// Step-up procedure: rejects the `k` smallest p-values for the largest
/// `k` with `p_(k) <= alpha * k / m`.
pub fn benjamini_hochberg(pvals: &[f64], alpha: f64) -> Result<DiscoverySet> {
    check(pvals, alpha)?;
    let m = pvals.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| pvals[a].total_cmp(&pvals[b]));
    let k = (1..=m)
        .rev()
        .find(|&k| pvals[order[k - 1]] <= alpha * k as f64 / m as f64)
        .unwrap_or(0);
    Ok(DiscoverySet::new(
        Procedure::BenjaminiHochberg,
        alpha,
        None,
        order[..k].to_vec(),
    ))
}

/// Hinge-exponential accumulation function,
/// `c * log(1 / (c (1 - p)))` for `p > 1 - 1/c` and 0 otherwise.
pub fn hinge_exp(p: f64, c: f64) -> f64 {
    let p = p.min(ACCUMULATION_P_MAX);
    if p > 1.0 - 1.0 / c {
        c * (1.0 / (c * (1.0 - p))).ln()
    } else {
        0.0
    }
}

/// Accumulation test over p-values in their given order: rejects the
/// longest prefix whose mean accumulation value is at most `alpha`.
pub fn accumulation_test(ordered: &[f64], alpha: f64, c: f64) -> Result<DiscoverySet> {
    check(ordered, alpha)?;
    if !(c > 1.0 && c.is_finite()) {
        return Err(Error::input(format!(
            "hinge-exponential parameter must exceed 1, got {c}"
        )));
    }
    let mut sum = 0.0;
    let mut k_hat = 0;
    for (k, &p) in ordered.iter().enumerate() {
        sum += hinge_exp(p, c);
        if sum / (k + 1) as f64 <= alpha {
            k_hat = k + 1;
        }
    }
    Ok(DiscoverySet::new(
        Procedure::AccumulationTest,
        alpha,
        Some(c),
        (0..k_hat).collect(),
    ))
}

/// Selective SeqStep over p-values in their given order: finds the longest
/// prefix whose estimated false discovery proportion
/// `(1 + #{p > c}) / max(1, #{p <= c}) * c / (1 - c)` is at most `alpha`
/// and rejects its p-values at most `c`.
pub fn selective_seqstep(ordered: &[f64], alpha: f64, c: f64) -> Result<DiscoverySet> {
    check(ordered, alpha)?;
    if !(c > 0.0 && c < 1.0) {
        return Err(Error::input(format!(
            "SeqStep threshold must be in (0, 1), got {c}"
        )));
    }
    let ratio = c / (1.0 - c);
    let (mut small, mut large) = (0usize, 0usize);
    let mut k_hat = 0;
    for (k, &p) in ordered.iter().enumerate() {
        if p <= c {
            small += 1;
        } else {
            large += 1;
        }
        if (1 + large) as f64 / small.max(1) as f64 * ratio <= alpha {
            k_hat = k + 1;
        }
    }
    let rejected = (0..k_hat).filter(|&i| ordered[i] <= c).collect();
    Ok(DiscoverySet::new(
        Procedure::SelectiveSeqStep,
        alpha,
        Some(c),
        rejected,
    ))
}

/// Runs `procedure` with its default parameter (2 for the accumulation
/// test, 0.5 for SeqStep). Ordered procedures read `pvals` in the order
/// given by `order`; the returned indices always refer to `pvals`.
pub fn combine(
    procedure: Procedure,
    pvals: &[f64],
    order: Option<&[usize]>,
    alpha: f64,
) -> Result<DiscoverySet> {
    let order: Vec<usize> = match order {
        Some(o) => {
            let mut seen = vec![false; pvals.len()];
            if o.len() != pvals.len()
                || o.iter()
                    .any(|&i| i >= pvals.len() || std::mem::replace(&mut seen[i], true))
            {
                return Err(Error::input(
                    "order must be a permutation of the hypotheses",
                ));
            }
            o.to_vec()
        }
        None => (0..pvals.len()).collect(),
    };
    let ordered: Vec<f64> = order.iter().map(|&i| pvals[i]).collect();
    let mut set = match procedure {
        Procedure::Bonferroni => return bonferroni(pvals, alpha),
        Procedure::BenjaminiHochberg => return benjamini_hochberg(pvals, alpha),
        Procedure::AccumulationTest => accumulation_test(&ordered, alpha, 2.0)?,
        Procedure::SelectiveSeqStep => selective_seqstep(&ordered, alpha, 0.5)?,
    };
    set.rejected = set.rejected.iter().map(|&k| order[k]).collect();
    set.rejected.sort_unstable();
    Ok(set)
}
