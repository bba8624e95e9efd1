//! Shared fixtures for the criterion benchmarks.

use lfold_core::{EigenformTable, SquarefreeSieve};

/// Discriminant table and matching sieve of size `n`.
pub fn fixture(n: usize) -> (EigenformTable, SquarefreeSieve) {
    let table = EigenformTable::delta(n).expect("table builds");
    let sieve = SquarefreeSieve::new(n).expect("sieve builds");
    (table, sieve)
}
