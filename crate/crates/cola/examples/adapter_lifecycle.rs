//! Adapter lifecycle in one sitting: initialize, train-like edits, compute
//! the scaled delta, merge into frozen weights, and re-initialize at a new
//! rank.

use cola::linalg::{DenseMatrix, SeededRng};
use cola::lora::{effective_delta, init_adapter, merge_into, reinit};

fn main() {
    let mut rng = SeededRng::new(42);
    let (d, k) = (6usize, 8usize);
    let frozen = DenseMatrix::gaussian(&mut rng, d, k, 0.3).expect("frozen weight");

    let mut adapter = init_adapter(&mut rng, d, k, 4, 16.0, 0.02).expect("adapter");
    println!(
        "fresh adapter: rank {}, alpha {}, scale alpha/rank = {}",
        adapter.rank(),
        adapter.alpha(),
        adapter.scaling()
    );
    println!(
        "delta after init is zero: {}",
        effective_delta(&adapter).is_zero()
    );

    // Pretend training moved b.
    for x in adapter.b_mut().data_mut() {
        *x = 0.1 * rng.next_gaussian();
    }
    let delta = effective_delta(&adapter);
    println!("after edits, ||delta||_F = {:.6}", delta.frobenius_norm());

    let merged = merge_into(&frozen, &adapter).expect("merge");
    println!(
        "merged weight shape {:?} (same as frozen {:?}); ||merged - frozen||_F = {:.6}",
        merged.shape(),
        frozen.shape(),
        merged.add_scaled(&frozen, -1.0).unwrap().frobenius_norm()
    );

    let stepped_down = reinit(&adapter, &mut rng, 2, 0.02).expect("reinit");
    println!(
        "reinit at rank {}: a is {:?}, b is {:?}, delta zero again: {}",
        stepped_down.rank(),
        stepped_down.a().shape(),
        stepped_down.b().shape(),
        effective_delta(&stepped_down).is_zero()
    );
}
