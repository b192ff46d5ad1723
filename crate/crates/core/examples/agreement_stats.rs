//! How often two users order their common items the same way.

use multirank::agreement::{agreement_stat, common_items, nonoverlap_pairs, AgreementMode};
use multirank::matrix::SparseRatingMatrix;

fn main() -> multirank::error::Result<()> {
    let u = [5.0, 4.0, 3.0, 2.0, 1.0];
    let v = [4.0, 5.0, 3.0, 1.0, 2.0];
    let m = SparseRatingMatrix::from_triples(5, 2, (0..5).flat_map(|i| [(i, 0, u[i]), (i, 1, v[i])]))?;

    let common = common_items(&m, 0, 1)?;
    println!("common items {common:?}, disjoint pairs {:?}", nonoverlap_pairs(&common));
    for mode in [AgreementMode::Nonoverlapping, AgreementMode::AllPairs] {
        let s = agreement_stat(&m, 0, 1, mode)?;
        println!("{mode:?}: R = {:.3} ({} of {} pairs)", s.value, s.agreements, s.pair_count);
    }
    Ok(())
}
