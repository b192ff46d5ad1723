//! Norm-equalising lift from a bilinear utility to a distance utility.
//!
//! Item `x` becomes `(x, γ)` with `γ ≥ 0` chosen so every lifted item has
//! norm `B`; user `y` becomes `(−y, 0)`. Then
//! `‖x̃_i − ỹ‖² − ‖x̃_j − ỹ‖² = 2 (x_iᵗy − x_jᵗy)`, so the item orders of
//! both utilities coincide for every user.

/// Lifts one item with a given common norm `bound ≥ ‖x‖`.
pub fn lift_with_bound(x: &[f64], bound: f64) -> Vec<f64> {
    let sq: f64 = x.iter().map(|v| v * v).sum();
    let gamma = (bound * bound - sq).max(0.0).sqrt();
    let mut out = x.to_vec();
    out.push(gamma);
    out
}

pub(crate) fn lift_user(y: &[f64]) -> Vec<f64> {
    let mut out: Vec<f64> = y.iter().map(|v| -v).collect();
    out.push(0.0);
    out
}

/// Lifts items and users from `ℝ^d` to `ℝ^{d+1}` with `B = max ‖x_i‖`.
pub fn lift_inner_product(items: &[Vec<f64>], users: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let bound = items
        .iter()
        .map(|x| x.iter().map(|v| v * v).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    (
        items.iter().map(|x| lift_with_bound(x, bound)).collect(),
        users.iter().map(|y| lift_user(y)).collect(),
    )
}
