//! Dense real matrices, a reproducible random stream, and top-singular-pair
//! extraction.
//!
//! Everything downstream (adapters, models, training drivers, the
//! conditional-gradient solver) is built on [`DenseMatrix`] and [`SeededRng`].
//! Storage is row-major `f64`; there is no BLAS, no sparsity, no complex
//! scalars. The random stream is SplitMix64 with Gaussian draws produced by
//! the polar method on top of a series-based `ln`, so a given seed yields the
//! same bits on every platform.

use serde::{Deserialize, Serialize};

/// Errors from matrix construction and arithmetic.
#[derive(Debug, Clone, thiserror::Error)]
pub enum LinalgError {
    #[error("{op}: dimension mismatch, left is {left_rows}x{left_cols}, right is {right_rows}x{right_cols}")]
    ShapeMismatch {
        op: &'static str,
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },
    #[error("matrix data length {got} does not match {rows}x{cols}")]
    DataLength {
        rows: usize,
        cols: usize,
        got: usize,
    },
    #[error("matrix dimensions must be positive, got {rows}x{cols}")]
    EmptyShape { rows: usize, cols: usize },
    #[error("standard deviation must be positive, got {std}")]
    NonPositiveStd { std: f64 },
    #[error("tolerance must be positive, got {tol}")]
    NonPositiveTol { tol: f64 },
    #[error(
        "power iteration did not converge after {iters} iterations \
         (sigma {sigma:.6e}, residual {residual:.3e}); the last estimate is attached"
    )]
    NoConvergence {
        iters: usize,
        sigma: f64,
        residual: f64,
        /// Last iterate; callers may accept it together with `residual`.
        best: Box<SingularTriple>,
    },
}

pub type Result<T> = std::result::Result<T, LinalgError>;

// ---------------------------------------------------------------------------
// Seeded random stream
// ---------------------------------------------------------------------------

/// Deterministic random stream: SplitMix64 over a 64-bit seed.
///
/// The generator is fully specified here so streams are bit-reproducible
/// across platforms: `state += 0x9E3779B97F4A7C15`, then two xor-shift
/// multiplies finalize each output word. Uniform doubles take the top 53
/// bits; Gaussian draws use the polar method with [`ln_deterministic`]
/// (IEEE-exact primitive ops only, no libm).
///
/// A `SeededRng` must be owned by exactly one caller; every draw advances
/// the state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
    state: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed, state: seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in `[0, 1)` with 53 bits of precision.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
    }

    /// Standard normal draw (mean 0, variance 1), polar method.
    ///
    /// The companion value of each accepted pair is discarded; the stream
    /// stays a pure function of the seed and the call sequence.
    pub fn next_gaussian(&mut self) -> f64 {
        loop {
            let u = 2.0 * self.next_f64() - 1.0;
            let v = 2.0 * self.next_f64() - 1.0;
            let s = u * u + v * v;
            if s > 0.0 && s < 1.0 {
                return u * (-2.0 * ln_deterministic(s) / s).sqrt();
            }
        }
    }

    /// Unbiased draw in `[0, n)` by rejection.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below requires n > 0");
        let threshold = u64::MAX - u64::MAX % n;
        loop {
            let x = self.next_u64();
            if x < threshold {
                return x % n;
            }
        }
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            items.swap(i, j);
        }
    }
}

/// Natural logarithm from exponent split plus an atanh series.
///
/// Uses only add/sub/mul/div (IEEE-exact), so the result bits do not depend
/// on the platform libm. Accepts normal positive finite inputs.
fn ln_deterministic(x: f64) -> f64 {
    debug_assert!(x.is_finite() && x >= f64::MIN_POSITIVE, "ln input {x}");
    let bits = x.to_bits();
    let mut exp = ((bits >> 52) & 0x7ff) as i64 - 1022;
    let mut m = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | (1022u64 << 52));
    // m in [0.5, 1); renormalize into [1/sqrt(2), sqrt(2)) so |t| <= 0.172.
    if m < std::f64::consts::FRAC_1_SQRT_2 {
        m *= 2.0;
        exp -= 1;
    }
    let t = (m - 1.0) / (m + 1.0);
    let t2 = t * t;
    let mut term = t;
    let mut acc = 0.0;
    for k in 0..40u32 {
        let contrib = term / f64::from(2 * k + 1);
        acc += contrib;
        if contrib.abs() <= 1e-18 * acc.abs() {
            break;
        }
        term *= t2;
    }
    2.0 * acc + exp as f64 * std::f64::consts::LN_2
}

// ---------------------------------------------------------------------------
// DenseMatrix
// ---------------------------------------------------------------------------

/// Real d x k matrix in row-major order: `data[i * cols + j]` is entry (i, j).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyShape { rows, cols });
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DataLength {
                rows,
                cols,
                got: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    /// Build from row slices. Panics on ragged input; intended for literals.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        assert!(!rows.is_empty(), "from_rows: need at least one row");
        let cols = rows[0].len();
        assert!(cols > 0, "from_rows: need at least one column");
        let mut data = Vec::with_capacity(rows.len() * cols);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), cols, "from_rows: row {i} has wrong length");
            data.extend_from_slice(row);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    /// i.i.d. N(0, std^2) entries drawn from `rng`.
    pub fn gaussian(rng: &mut SeededRng, rows: usize, cols: usize, std: f64) -> Result<Self> {
        if !(std > 0.0) {
            return Err(LinalgError::NonPositiveStd { std });
        }
        if rows == 0 || cols == 0 {
            return Err(LinalgError::EmptyShape { rows, cols });
        }
        let data = (0..rows * cols)
            .map(|_| std * rng.next_gaussian())
            .collect();
        Ok(Self { rows, cols, data })
    }

    /// Rank-one matrix `scale * u v^T`.
    pub fn rank_one(scale: f64, u: &[f64], v: &[f64]) -> Self {
        let mut data = Vec::with_capacity(u.len() * v.len());
        for &ui in u {
            for &vj in v {
                data.push(scale * ui * vj);
            }
        }
        Self {
            rows: u.len(),
            cols: v.len(),
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| *x == 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    /// Standard product `self * b`.
    pub fn matmul(&self, b: &Self) -> Result<Self> {
        if self.cols != b.rows {
            return Err(self.shape_err("matmul", b));
        }
        let (m, p, n) = (self.rows, self.cols, b.cols);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &self.data[i * p..(i + 1) * p];
            let orow = &mut out[i * n..(i + 1) * n];
            for (kk, &aik) in arow.iter().enumerate() {
                let brow = &b.data[kk * n..(kk + 1) * n];
                for j in 0..n {
                    orow[j] += aik * brow[j];
                }
            }
        }
        Ok(Self {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// `self * b^T`; both operands traversed row-wise.
    pub fn matmul_transposed(&self, b: &Self) -> Result<Self> {
        if self.cols != b.cols {
            return Err(self.shape_err("matmul_transposed", b));
        }
        let (m, p, n) = (self.rows, self.cols, b.rows);
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            let arow = &self.data[i * p..(i + 1) * p];
            for j in 0..n {
                let brow = &b.data[j * p..(j + 1) * p];
                let mut acc = 0.0;
                for k in 0..p {
                    acc += arow[k] * brow[k];
                }
                out[i * n + j] = acc;
            }
        }
        Ok(Self {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// `self^T * b`.
    pub fn t_matmul(&self, b: &Self) -> Result<Self> {
        if self.rows != b.rows {
            return Err(self.shape_err("t_matmul", b));
        }
        let (m, p, n) = (self.cols, self.rows, b.cols);
        let mut out = vec![0.0; m * n];
        for r in 0..p {
            let arow = &self.data[r * m..(r + 1) * m];
            let brow = &b.data[r * n..(r + 1) * n];
            for (i, &ari) in arow.iter().enumerate() {
                let orow = &mut out[i * n..(i + 1) * n];
                for j in 0..n {
                    orow[j] += ari * brow[j];
                }
            }
        }
        Ok(Self {
            rows: m,
            cols: n,
            data: out,
        })
    }

    /// Elementwise `self + s * b`.
    pub fn add_scaled(&self, b: &Self, s: f64) -> Result<Self> {
        if self.shape() != b.shape() {
            return Err(self.shape_err("add_scaled", b));
        }
        let data = self
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| x + s * y)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data,
        })
    }

    pub fn scale(&self, s: f64) -> Self {
        let data = self.data.iter().map(|x| s * x).collect();
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Frobenius inner product.
    pub fn dot(&self, b: &Self) -> Result<f64> {
        if self.shape() != b.shape() {
            return Err(self.shape_err("dot", b));
        }
        Ok(self.data.iter().zip(&b.data).map(|(x, y)| x * y).sum())
    }

    /// `self * v` for a column vector given as a slice.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            v.len(),
            self.cols,
            "matvec: vector length {} vs {} cols",
            v.len(),
            self.cols
        );
        self.data
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// `self^T * v`.
    pub fn t_matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(
            v.len(),
            self.rows,
            "t_matvec: vector length {} vs {} rows",
            v.len(),
            self.rows
        );
        let mut out = vec![0.0; self.cols];
        for (row, vi) in self.data.chunks_exact(self.cols).zip(v) {
            for (o, a) in out.iter_mut().zip(row) {
                *o += vi * a;
            }
        }
        out
    }

    fn shape_err(&self, op: &'static str, b: &Self) -> LinalgError {
        LinalgError::ShapeMismatch {
            op,
            left_rows: self.rows,
            left_cols: self.cols,
            right_rows: b.rows,
            right_cols: b.cols,
        }
    }
}

// ---------------------------------------------------------------------------
// Top singular pair
// ---------------------------------------------------------------------------

/// Approximate top singular triple `(sigma, u, v)` with unit `u`, `v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SingularTriple {
    pub sigma: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = norm2(&v);
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    v
}

fn basis_vector(len: usize) -> Vec<f64> {
    let mut e = vec![0.0; len];
    e[0] = 1.0;
    e
}

impl DenseMatrix {
    /// Dominant singular triple by power iteration on the Gram matrix.
    ///
    /// The start vector comes from a private SplitMix64 stream keyed by the
    /// shape, so results are deterministic and independent of caller RNGs.
    /// Convergence is declared when the triple residual
    /// `||m^T u - sigma v||` drops below `tol * sigma`; by construction
    /// `m v = sigma u` holds exactly for the returned triple.
    ///
    /// The zero matrix yields the documented convention
    /// `(0, e1, e1)`. Non-convergence returns
    /// [`LinalgError::NoConvergence`] carrying the last estimate and its
    /// residual so callers can accept or abort.
    ///
    /// When the top singular value is tied, the returned `u`, `v` are some
    /// pair inside the top subspace; only `sigma` and the residual identity
    /// are specified.
    pub fn top_singular_pair(&self, tol: f64, max_iter: usize) -> Result<SingularTriple> {
        if !(tol > 0.0) {
            return Err(LinalgError::NonPositiveTol { tol });
        }
        if self.is_zero() {
            return Ok(SingularTriple {
                sigma: 0.0,
                u: basis_vector(self.rows),
                v: basis_vector(self.cols),
            });
        }

        let mut start =
            SeededRng::new(0x7097_2D68_2F9A_55C1 ^ ((self.rows as u64) << 32) ^ self.cols as u64);
        let mut v = unit((0..self.cols).map(|_| start.next_gaussian()).collect());

        let mut last: Option<(SingularTriple, f64)> = None;
        let mut redraws = 0u32;
        let mut it = 0usize;
        while it < max_iter {
            it += 1;
            let mv = self.matvec(&v);
            let sigma = norm2(&mv);
            if sigma == 0.0 {
                // v landed in the null space of a nonzero matrix; redraw.
                redraws += 1;
                if redraws > 8 {
                    break;
                }
                v = unit((0..self.cols).map(|_| start.next_gaussian()).collect());
                continue;
            }
            let u: Vec<f64> = mv.iter().map(|x| x / sigma).collect();
            let mtu = self.t_matvec(&u);
            let mut residual_sq = 0.0;
            for (w, vi) in mtu.iter().zip(&v) {
                let d = w - sigma * vi;
                residual_sq += d * d;
            }
            let residual = residual_sq.sqrt();
            if residual <= tol * sigma {
                return Ok(SingularTriple { sigma, u, v });
            }
            last = Some((
                SingularTriple {
                    sigma,
                    u,
                    v: v.clone(),
                },
                residual,
            ));
            v = unit(mtu);
        }

        let (best, residual) = last.unwrap_or_else(|| {
            (
                SingularTriple {
                    sigma: 0.0,
                    u: basis_vector(self.rows),
                    v: basis_vector(self.cols),
                },
                f64::INFINITY,
            )
        });
        Err(LinalgError::NoConvergence {
            iters: it,
            sigma: best.sigma,
            residual,
            best: Box::new(best),
        })
    }

    /// All singular values by repeated top-pair extraction with deflation.
    ///
    /// Accuracy degrades gently with depth (each deflation leaves an error
    /// of order `tol * sigma`); adequate for feasibility checks and rank
    /// estimates, not a substitute for a full SVD.
    pub fn singular_values(&self, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
        let mut work = self.clone();
        let mut out = Vec::new();
        let q = self.rows.min(self.cols);
        let mut top = 0.0f64;
        for _ in 0..q {
            let triple = match work.top_singular_pair(tol, max_iter) {
                Ok(t) => t,
                Err(LinalgError::NoConvergence { sigma, best, .. }) => {
                    if sigma <= 1e-12 * top.max(1e-300) {
                        break;
                    }
                    *best
                }
                Err(e) => return Err(e),
            };
            if triple.sigma == 0.0 {
                break;
            }
            top = top.max(triple.sigma);
            if triple.sigma <= 1e-13 * top {
                break;
            }
            out.push(triple.sigma);
            let correction = DenseMatrix::rank_one(triple.sigma, &triple.u, &triple.v);
            work = work.add_scaled(&correction, -1.0)?;
        }
        Ok(out)
    }

    /// Trace norm (sum of singular values), via [`Self::singular_values`].
    pub fn trace_norm(&self, tol: f64, max_iter: usize) -> Result<f64> {
        Ok(self.singular_values(tol, max_iter)?.iter().sum())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let m = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let id = DenseMatrix::identity(2);
        assert_eq!(id.matmul(&m).unwrap(), m);
    }

    #[test]
    fn matmul_hand_example() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let b = DenseMatrix::from_rows(&[&[0.0], &[1.0]]);
        let c = a.matmul(&b).unwrap();
        assert_eq!(c, DenseMatrix::from_rows(&[&[2.0], &[4.0]]));
    }

    #[test]
    fn matmul_shape_error_names_both_shapes() {
        let a = DenseMatrix::zeros(2, 3);
        let b = DenseMatrix::zeros(2, 3);
        let err = a.matmul(&b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("2x3"), "message was: {msg}");
    }

    #[test]
    fn add_scaled_cancels() {
        let mut rng = SeededRng::new(11);
        let m = DenseMatrix::gaussian(&mut rng, 3, 4, 1.0).unwrap();
        let z = m.add_scaled(&m, -1.0).unwrap();
        assert!(z.is_zero());
    }

    #[test]
    fn add_scaled_from_zero() {
        let mut rng = SeededRng::new(12);
        let m = DenseMatrix::gaussian(&mut rng, 3, 4, 1.0).unwrap();
        let z = DenseMatrix::zeros(3, 4);
        assert_eq!(z.add_scaled(&m, 1.0).unwrap(), m);
    }

    #[test]
    fn gaussian_same_seed_is_bit_identical() {
        let mut r1 = SeededRng::new(42);
        let mut r2 = SeededRng::new(42);
        let a = DenseMatrix::gaussian(&mut r1, 8, 64, 0.02).unwrap();
        let b = DenseMatrix::gaussian(&mut r2, 8, 64, 0.02).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.shape(), (8, 64));
    }

    #[test]
    fn gaussian_rejects_nonpositive_std() {
        let mut rng = SeededRng::new(1);
        assert!(DenseMatrix::gaussian(&mut rng, 2, 2, 0.0).is_err());
        assert!(DenseMatrix::gaussian(&mut rng, 2, 2, -1.0).is_err());
    }

    #[test]
    fn gaussian_sample_moments() {
        // 10^4 entries: mean within 5*std/100, variance within 10% of std^2.
        let std = 0.7;
        let mut rng = SeededRng::new(2024);
        let m = DenseMatrix::gaussian(&mut rng, 100, 100, std).unwrap();
        let n = m.data().len() as f64;
        let mean = m.data().iter().sum::<f64>() / n;
        let var = m
            .data()
            .iter()
            .map(|x| (x - mean) * (x - mean))
            .sum::<f64>()
            / n;
        assert!(mean.abs() < 5.0 * std / 100.0, "mean {mean}");
        assert!((var - std * std).abs() < 0.1 * std * std, "var {var}");
    }

    #[test]
    fn ln_matches_std() {
        let mut rng = SeededRng::new(7);
        for _ in 0..2000 {
            let x = rng.next_f64();
            if x == 0.0 {
                continue;
            }
            let got = ln_deterministic(x);
            let want = x.ln();
            assert!(
                (got - want).abs() <= 4.0 * f64::EPSILON * want.abs().max(1.0),
                "x={x}: {got} vs {want}"
            );
        }
        assert_eq!(ln_deterministic(1.0), 0.0);
        let two = ln_deterministic(0.5).abs();
        assert!((two - std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn top_pair_diagonal() {
        let m = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let t = m.top_singular_pair(1e-10, 1000).unwrap();
        assert!((t.sigma - 3.0).abs() < 1e-9);
        assert!(t.u[0].abs() > 1.0 - 1e-8);
        assert!(t.v[0].abs() > 1.0 - 1e-8);
    }

    #[test]
    fn top_pair_zero_matrix_convention() {
        let m = DenseMatrix::zeros(3, 2);
        let t = m.top_singular_pair(1e-10, 100).unwrap();
        assert_eq!(t.sigma, 0.0);
        assert_eq!(t.u, vec![1.0, 0.0, 0.0]);
        assert_eq!(t.v, vec![1.0, 0.0]);
    }

    #[test]
    fn top_pair_degenerate_spectrum_still_gives_valid_triple() {
        // sigma1 == sigma2: only sigma and the residual identity are asserted.
        let m = DenseMatrix::identity(3).scale(2.0);
        let t = m.top_singular_pair(1e-10, 2000).unwrap();
        assert!((t.sigma - 2.0).abs() < 1e-9);
        let mv = m.matvec(&t.v);
        for (a, b) in mv.iter().zip(&t.u) {
            assert!((a - t.sigma * b).abs() < 1e-9);
        }
    }

    #[test]
    fn frobenius_and_dot() {
        let id = DenseMatrix::identity(2);
        assert!((id.frobenius_norm() - 2f64.sqrt()).abs() < 1e-15);
        let z = DenseMatrix::zeros(2, 2);
        assert_eq!(id.dot(&z).unwrap(), 0.0);
        assert!(id.dot(&DenseMatrix::zeros(3, 3)).is_err());
    }

    #[test]
    fn seeded_stream_is_reproducible() {
        let mut a = SeededRng::new(99);
        let mut b = SeededRng::new(99);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        let g1: Vec<f64> = (0..50).map(|_| a.next_gaussian()).collect();
        let g2: Vec<f64> = (0..50).map(|_| b.next_gaussian()).collect();
        assert_eq!(g1, g2);
    }

    #[test]
    fn shuffle_is_a_permutation() {
        let mut rng = SeededRng::new(5);
        let mut xs: Vec<usize> = (0..20).collect();
        rng.shuffle(&mut xs);
        let mut sorted = xs.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..20).collect::<Vec<_>>());
    }

    #[test]
    fn singular_values_of_known_rank() {
        let u = [1.0, 2.0, -1.0];
        let v = [0.5, 1.0];
        let m = DenseMatrix::rank_one(2.0, &u, &v);
        let svs = m.singular_values(1e-12, 5000).unwrap();
        assert_eq!(svs.len(), 1);
        let expect = 2.0 * norm2(&u) * norm2(&v);
        assert!((svs[0] - expect).abs() < 1e-9 * expect);
    }

    #[test]
    fn trace_norm_of_diag() {
        let m = DenseMatrix::from_rows(&[&[3.0, 0.0], &[0.0, 1.0]]);
        let tn = m.trace_norm(1e-12, 5000).unwrap();
        assert!((tn - 4.0).abs() < 1e-8);
    }
}
