use super::FittedModel;
use crate::data::GroupPartition;

/// Ordering weight of each group, `sum_{j in g} |beta_j|`.
pub fn group_weights(model: &FittedModel, partition: &GroupPartition) -> Vec<f64> {
    partition
        .groups()
        .iter()
        .map(|g| g.indices().map(|j| model.coefficients[j].abs()).sum())
        .collect()
}

/// Indices sorted by decreasing weight, ties kept in index order.
pub fn order_by_weight(weights: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    order
}

/// Sites with a nonzero coefficient.
pub fn support(model: &FittedModel) -> Vec<usize> {
    model
        .coefficients
        .iter()
        .enumerate()
        .filter(|(_, &b)| b != 0.0)
        .map(|(j, _)| j)
        .collect()
}
