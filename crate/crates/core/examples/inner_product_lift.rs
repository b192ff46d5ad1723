//! Bilinear preferences `xᵗy` realised as a distance model one dimension up.

use multirank::synthgen::{lift_inner_product, utility};

fn main() {
    let items = vec![vec![0.9, 0.1], vec![-0.3, 0.5], vec![0.2, -0.7]];
    let users = vec![vec![0.6, 0.2], vec![-0.4, 0.8]];
    let (xt, yt) = lift_inner_product(&items, &users);
    for (u, y) in users.iter().enumerate() {
        let dots: Vec<f64> = items.iter().map(|x| x[0] * y[0] + x[1] * y[1]).collect();
        let lifted: Vec<f64> = xt.iter().map(|x| utility(x, &yt[u])).collect();
        println!("user {u}: x.y = {dots:.3?}, lifted utility = {lifted:.3?}");
    }
}
