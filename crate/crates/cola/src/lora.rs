//! Low-rank adapter lifecycle: init, scaled delta, merge, re-init.
//!
//! An adapter holds the trainable pair `(a, b)` for one frozen `d x k`
//! weight. The effective weight update is `(alpha / rank) * b * a`, which is
//! exactly zero right after (re-)initialization because `b` starts at zero.
//! Merging adds that delta into the frozen weight and returns a matrix of
//! the same shape, so serving a merged model costs nothing extra.

use crate::linalg::{DenseMatrix, LinalgError, SeededRng};

/// Conventional scale for the Gaussian init of `a` when no override is given.
pub const DEFAULT_INIT_STD: f64 = 0.02;

#[derive(Debug, Clone, thiserror::Error)]
pub enum LoraError {
    #[error("adapter rank {rank} out of range for a {d}x{k} weight (must be 1..={max})")]
    RankOutOfRange {
        rank: usize,
        d: usize,
        k: usize,
        max: usize,
    },
    #[error("alpha must be positive, got {alpha}")]
    NonPositiveAlpha { alpha: f64 },
    #[error("adapter is {ad}x{ak} for a {d}x{k} weight; merge target is {wr}x{wc}")]
    MergeShape {
        ad: usize,
        ak: usize,
        d: usize,
        k: usize,
        wr: usize,
        wc: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Trainable low-rank pair for one `d x k` weight: `a` is `rank x k`,
/// `b` is `d x rank`, and updates are scaled by `alpha / rank`.
#[derive(Clone, Debug, PartialEq)]
pub struct LoraAdapter {
    a: DenseMatrix,
    b: DenseMatrix,
    rank: usize,
    alpha: f64,
}

impl LoraAdapter {
    pub fn a(&self) -> &DenseMatrix {
        &self.a
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    /// Mutable access for the optimizer. Shapes must be preserved.
    pub fn a_mut(&mut self) -> &mut DenseMatrix {
        &mut self.a
    }

    pub fn b_mut(&mut self) -> &mut DenseMatrix {
        &mut self.b
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Update scale `alpha / rank`.
    pub fn scaling(&self) -> f64 {
        self.alpha / self.rank as f64
    }

    /// Output dimension `d` of the adapted weight.
    pub fn out_dim(&self) -> usize {
        self.b.rows()
    }

    /// Input dimension `k` of the adapted weight.
    pub fn in_dim(&self) -> usize {
        self.a.cols()
    }

    /// Zero out `b`, forcing the effective delta to exactly zero. Used when
    /// a trained adapter has been merged and must stop contributing.
    pub(crate) fn zero_b(&mut self) {
        for x in self.b.data_mut() {
            *x = 0.0;
        }
    }
}

fn check_rank(d: usize, k: usize, rank: usize) -> Result<(), LoraError> {
    let max = d.min(k);
    if rank == 0 || rank > max {
        return Err(LoraError::RankOutOfRange { rank, d, k, max });
    }
    if rank == max {
        log::warn!("adapter rank {rank} equals min(d, k) = {max}; expected rank well below the weight dimensions");
    }
    Ok(())
}

/// Fresh adapter for a `d x k` weight: `a ~ N(0, init_std^2)`, `b = 0`.
pub fn init_adapter(
    rng: &mut SeededRng,
    d: usize,
    k: usize,
    rank: usize,
    alpha: f64,
    init_std: f64,
) -> Result<LoraAdapter, LoraError> {
    check_rank(d, k, rank)?;
    if !(alpha > 0.0) {
        return Err(LoraError::NonPositiveAlpha { alpha });
    }
    let a = DenseMatrix::gaussian(rng, rank, k, init_std)?;
    let b = DenseMatrix::zeros(d, rank);
    Ok(LoraAdapter { a, b, rank, alpha })
}

/// Effective weight update `(alpha / rank) * b * a`, shape `d x k`.
pub fn effective_delta(ad: &LoraAdapter) -> DenseMatrix {
    ad.b.matmul(&ad.a)
        .expect("adapter invariant: b cols == a rows == rank")
        .scale(ad.scaling())
}

/// `w + effective_delta(ad)`; `w` is untouched and the result has its shape.
pub fn merge_into(w: &DenseMatrix, ad: &LoraAdapter) -> Result<DenseMatrix, LoraError> {
    if w.shape() != (ad.out_dim(), ad.in_dim()) {
        return Err(LoraError::MergeShape {
            ad: ad.out_dim(),
            ak: ad.in_dim(),
            d: ad.out_dim(),
            k: ad.in_dim(),
            wr: w.rows(),
            wc: w.cols(),
        });
    }
    Ok(w.add_scaled(&effective_delta(ad), 1.0)?)
}

/// Fresh adapter for the same weight with a possibly different rank.
/// `alpha` carries over; `a` is redrawn Gaussian and `b` is zero, so the
/// effective delta restarts at exactly zero.
pub fn reinit(
    ad: &LoraAdapter,
    rng: &mut SeededRng,
    new_rank: usize,
    init_std: f64,
) -> Result<LoraAdapter, LoraError> {
    init_adapter(rng, ad.out_dim(), ad.in_dim(), new_rank, ad.alpha, init_std)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rng() -> SeededRng {
        SeededRng::new(31)
    }

    #[test]
    fn init_delta_is_exactly_zero() {
        let mut r = rng();
        let ad = init_adapter(&mut r, 6, 9, 3, 16.0, 0.02).unwrap();
        assert!(effective_delta(&ad).is_zero());
        assert_eq!(effective_delta(&ad).shape(), (6, 9));
    }

    #[test]
    fn scaling_matches_alpha_over_rank() {
        let mut r = rng();
        let ad = init_adapter(&mut r, 16, 16, 8, 16.0, 0.02).unwrap();
        assert_eq!(ad.scaling(), 2.0);
    }

    #[test]
    fn same_seed_same_a() {
        let a1 = init_adapter(&mut SeededRng::new(3), 5, 7, 2, 8.0, 0.02).unwrap();
        let a2 = init_adapter(&mut SeededRng::new(3), 5, 7, 2, 8.0, 0.02).unwrap();
        assert_eq!(a1, a2);
    }

    #[test]
    fn rank_bounds_enforced() {
        let mut r = rng();
        assert!(init_adapter(&mut r, 4, 6, 0, 1.0, 0.02).is_err());
        assert!(init_adapter(&mut r, 4, 6, 5, 1.0, 0.02).is_err());
        assert!(init_adapter(&mut r, 4, 6, 4, 1.0, 0.02).is_ok());
    }

    #[test]
    fn hand_computed_delta() {
        // d = k = 2, rank 1, alpha 1 (scale 1): b = [[1],[0]], a = [[0,1]].
        let mut r = rng();
        let mut ad = init_adapter(&mut r, 2, 2, 1, 1.0, 0.02).unwrap();
        ad.a_mut().data_mut().copy_from_slice(&[0.0, 1.0]);
        ad.b_mut().data_mut().copy_from_slice(&[1.0, 0.0]);
        let delta = effective_delta(&ad);
        assert_eq!(delta, DenseMatrix::from_rows(&[&[0.0, 1.0], &[0.0, 0.0]]));
    }

    #[test]
    fn merge_with_fresh_adapter_is_identity() {
        let mut r = rng();
        let w = DenseMatrix::gaussian(&mut r, 4, 5, 1.0).unwrap();
        let ad = init_adapter(&mut r, 4, 5, 2, 16.0, 0.02).unwrap();
        assert_eq!(merge_into(&w, &ad).unwrap(), w);
    }

    #[test]
    fn merge_hand_example() {
        let mut r = rng();
        let mut ad = init_adapter(&mut r, 2, 2, 1, 1.0, 0.02).unwrap();
        ad.a_mut().data_mut().copy_from_slice(&[0.0, 1.0]);
        ad.b_mut().data_mut().copy_from_slice(&[1.0, 0.0]);
        let w = DenseMatrix::identity(2);
        let merged = merge_into(&w, &ad).unwrap();
        assert_eq!(merged, DenseMatrix::from_rows(&[&[1.0, 1.0], &[0.0, 1.0]]));
    }

    #[test]
    fn merge_shape_mismatch() {
        let mut r = rng();
        let ad = init_adapter(&mut r, 4, 5, 2, 16.0, 0.02).unwrap();
        assert!(merge_into(&DenseMatrix::zeros(5, 4), &ad).is_err());
    }

    #[test]
    fn reinit_steps_rank_down_and_keeps_alpha() {
        let mut r = rng();
        let ad = init_adapter(&mut r, 16, 12, 8, 16.0, 0.02).unwrap();
        let ad2 = reinit(&ad, &mut r, 4, 0.02).unwrap();
        assert_eq!(ad2.rank(), 4);
        assert_eq!(ad2.alpha(), 16.0);
        assert_eq!(ad2.a().shape(), (4, 12));
        assert_eq!(ad2.b().shape(), (16, 4));
        assert!(effective_delta(&ad2).is_zero());
    }

    #[test]
    fn reinit_is_deterministic() {
        let base = init_adapter(&mut SeededRng::new(4), 6, 6, 3, 6.0, 0.02).unwrap();
        let r1 = reinit(&base, &mut SeededRng::new(8), 2, 0.02).unwrap();
        let r2 = reinit(&base, &mut SeededRng::new(8), 2, 0.02).unwrap();
        assert_eq!(r1, r2);
    }
}
