//! Inputs for the pipeline benchmarks under `benches/`.

use contractcheck_core::BAKERY_FIXTURE;

/// The bakery agreement with `extra` additional share transfers appended,
/// each for its own asset held by the seller.
pub fn bakery_with_transfers(extra: usize) -> String {
    let mut text = BAKERY_FIXTURE.to_string();
    for i in 0..extra {
        text.push_str(&format!(
            "\nblock Asset Lot{i}\n  type: Shares\nend\n\
             \nblock PropertyFact EvaHolds{i}\n  asset: Lot{i}\n  owner: Eva\nend\n\
             \nblock TransferClaim Deliver{i}\n  debtor: Eva\n  creditor: Chris\n  asset: Lot{i}\n  due: {}\nend\n",
            28 + i
        ));
    }
    text
}
