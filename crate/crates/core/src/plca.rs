//! Static NMF building blocks.
//!
//! Two families live here: the Itakura-Saito multiplicative updates, which the
//! dynamic model reuses to estimate its autoregressive matrices, and the PLCA
//! expectation/maximization steps that every fit in this crate is built from.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::{NonnegMatrix, StochasticMatrix, EPS};

/// Half-open range of the uniform draws used to initialize factors.
pub const INIT_RANGE: (f64, f64) = (0.1, 1.1);

/// Default number of EM iterations.
pub const DEFAULT_ITERS: usize = 100;

fn check_conformable(x: &NonnegMatrix, w: &NonnegMatrix, h: &NonnegMatrix) -> Result<()> {
    if w.cols() != h.rows() || x.rows() != w.rows() || x.cols() != h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "X {:?} vs W {:?} * H {:?}",
            x.shape(),
            w.shape(),
            h.shape()
        )));
    }
    Ok(())
}

/// `(WH)^-1` and `(WH)^-2 ⊙ X`, with `WH` floored at [`EPS`].
fn is_ratios(x: &NonnegMatrix, w: &NonnegMatrix, h: &NonnegMatrix) -> Result<(Vec<f64>, Vec<f64>)> {
    let approx = w.matmul(h)?;
    let inv: Vec<f64> = approx.as_slice().iter().map(|v| 1.0 / v.max(EPS)).collect();
    let weighted = inv
        .iter()
        .zip(x.as_slice())
        .map(|(r, xv)| r * r * xv)
        .collect();
    Ok((inv, weighted))
}

/// One Itakura-Saito multiplicative update of the coefficients `H`.
pub fn is_nmf_update_h(
    x: &NonnegMatrix,
    w: &NonnegMatrix,
    h: &NonnegMatrix,
) -> Result<NonnegMatrix> {
    check_conformable(x, w, h)?;
    let (inv, weighted) = is_ratios(x, w, h)?;
    let (k_dim, t_dim) = x.shape();
    let i_dim = w.cols();
    let mut num = vec![0.0; i_dim * t_dim];
    let mut den = vec![0.0; i_dim * t_dim];
    for k in 0..k_dim {
        let wrow = w.row(k);
        let wr = &weighted[k * t_dim..(k + 1) * t_dim];
        let ir = &inv[k * t_dim..(k + 1) * t_dim];
        for (i, wki) in wrow.iter().enumerate() {
            let n = &mut num[i * t_dim..(i + 1) * t_dim];
            for (nv, a) in n.iter_mut().zip(wr) {
                *nv += wki * a;
            }
            let d = &mut den[i * t_dim..(i + 1) * t_dim];
            for (dv, a) in d.iter_mut().zip(ir) {
                *dv += wki * a;
            }
        }
    }
    let data = h
        .as_slice()
        .iter()
        .zip(num.iter().zip(&den))
        .map(|(hv, (n, d))| hv * n / d.max(EPS))
        .collect();
    NonnegMatrix::new(i_dim, t_dim, data)
}

/// One Itakura-Saito multiplicative update of the basis `W`.
pub fn is_nmf_update_w(
    x: &NonnegMatrix,
    w: &NonnegMatrix,
    h: &NonnegMatrix,
) -> Result<NonnegMatrix> {
    check_conformable(x, w, h)?;
    let (inv, weighted) = is_ratios(x, w, h)?;
    let (k_dim, t_dim) = x.shape();
    let i_dim = w.cols();
    let mut data = Vec::with_capacity(k_dim * i_dim);
    for k in 0..k_dim {
        let wr = &weighted[k * t_dim..(k + 1) * t_dim];
        let ir = &inv[k * t_dim..(k + 1) * t_dim];
        for i in 0..i_dim {
            let hrow = h.row(i);
            let num: f64 = hrow.iter().zip(wr).map(|(a, b)| a * b).sum();
            let den: f64 = hrow.iter().zip(ir).map(|(a, b)| a * b).sum();
            data.push(w.get(k, i) * num / den.max(EPS));
        }
    }
    NonnegMatrix::new(k_dim, i_dim, data)
}

/// Posterior probabilities `f(z = i | k)` for one frame, as a `K x I` matrix.
///
/// Row `k` is the distribution over basis vectors that explains bin `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    matrix: NonnegMatrix,
}

impl Responsibilities {
    pub fn matrix(&self) -> &NonnegMatrix {
        &self.matrix
    }

    /// Responsibility-weighted counts `c_i = Σ_k x_k f(z = i | k)`.
    pub fn weighted_counts(&self, x_t: &[f64]) -> Result<Vec<f64>> {
        if x_t.len() != self.matrix.rows() {
            return Err(Error::DimensionMismatch(format!(
                "frame of length {} against {} bins",
                x_t.len(),
                self.matrix.rows()
            )));
        }
        let mut c = vec![0.0; self.matrix.cols()];
        for (k, xv) in x_t.iter().enumerate() {
            for (ci, r) in c.iter_mut().zip(self.matrix.row(k)) {
                *ci += xv * r;
            }
        }
        Ok(c)
    }
}

/// E-step for one frame: `f(z = i | k) = w_ki h_i / Σ_i w_ki h_i`.
pub fn plca_posterior(w: &StochasticMatrix, h_t: &[f64]) -> Result<Responsibilities> {
    if h_t.len() != w.cols() {
        return Err(Error::DimensionMismatch(format!(
            "coefficient vector of length {} for {} basis vectors",
            h_t.len(),
            w.cols()
        )));
    }
    let (k_dim, i_dim) = w.shape();
    let mut data = Vec::with_capacity(k_dim * i_dim);
    for k in 0..k_dim {
        let joint: Vec<f64> = w.row(k).iter().zip(h_t).map(|(a, b)| a * b).collect();
        let total: f64 = joint.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroDenominator(k));
        }
        data.extend(joint.into_iter().map(|v| v / total));
    }
    Ok(Responsibilities {
        matrix: NonnegMatrix::new(k_dim, i_dim, data)?,
    })
}

/// Basis M-step: `w_ki ∝ Σ_t x_kt f_t(z = i | k)`, normalized per column.
pub fn plca_update_w(x: &NonnegMatrix, responsibilities: &[Responsibilities]) -> Result<StochasticMatrix> {
    if responsibilities.len() != x.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} frames of responsibilities for {} data columns",
            responsibilities.len(),
            x.cols()
        )));
    }
    let k_dim = x.rows();
    let i_dim = responsibilities.first().map_or(0, |r| r.matrix.cols());
    let mut acc = vec![0.0; k_dim * i_dim];
    for (t, resp) in responsibilities.iter().enumerate() {
        if resp.matrix.shape() != (k_dim, i_dim) {
            return Err(Error::DimensionMismatch(format!(
                "responsibilities {:?} at frame {t}",
                resp.matrix.shape()
            )));
        }
        for k in 0..k_dim {
            let xv = x.get(k, t);
            for (a, r) in acc[k * i_dim..(k + 1) * i_dim].iter_mut().zip(resp.matrix.row(k)) {
                *a += xv * r;
            }
        }
    }
    basis_from_counts(k_dim, i_dim, acc, None)
}

/// Normalizes an accumulated `K x I` count matrix into a basis.
///
/// With `floor` set, entries are raised to it first so no column can vanish.
pub(crate) fn basis_from_counts(
    k_dim: usize,
    i_dim: usize,
    mut acc: Vec<f64>,
    floor: Option<f64>,
) -> Result<StochasticMatrix> {
    if let Some(f) = floor {
        acc.iter_mut().for_each(|v| *v = v.max(f));
    }
    let m = NonnegMatrix::new(k_dim, i_dim, acc)?;
    m.normalize_columns().map_err(|e| match e {
        Error::ZeroColumn(c) => Error::EmptyBasis(c),
        other => other,
    })
}

/// Fused E-step for one frame.
///
/// Returns the weighted counts `c_i` and, when `acc` is given, adds
/// `x_k f(z = i | k)` into the `K x I` row-major basis accumulator. The
/// posterior is never materialized.
pub(crate) fn frame_counts(
    x_t: &[f64],
    w: &[f64],
    i_dim: usize,
    h_t: &[f64],
    acc: Option<&mut [f64]>,
) -> Vec<f64> {
    let mut sums = vec![0.0; i_dim];
    let mut acc = acc;
    for (k, xv) in x_t.iter().enumerate() {
        let wrow = &w[k * i_dim..(k + 1) * i_dim];
        let denom: f64 = wrow.iter().zip(h_t).map(|(a, b)| a * b).sum();
        let ratio = xv / denom.max(EPS);
        for (s, wv) in sums.iter_mut().zip(wrow) {
            *s += wv * ratio;
        }
        if let Some(acc) = acc.as_deref_mut() {
            let arow = &mut acc[k * i_dim..(k + 1) * i_dim];
            for ((a, wv), hv) in arow.iter_mut().zip(wrow).zip(h_t) {
                *a += wv * hv * ratio;
            }
        }
    }
    sums.iter_mut().zip(h_t).for_each(|(s, hv)| *s *= hv);
    sums
}

/// Static PLCA coefficient update: the counts renormalized to a probability vector.
pub(crate) fn static_h(counts: &[f64]) -> Vec<f64> {
    let total: f64 = counts.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / counts.len() as f64; counts.len()];
    }
    counts.iter().map(|c| c / total).collect()
}

/// Draws a `rows x cols` row-major block, i.i.d. uniform on [`INIT_RANGE`].
pub(crate) fn random_block(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f64> {
    (0..rows * cols)
        .map(|_| rng.gen_range(INIT_RANGE.0..INIT_RANGE.1))
        .collect()
}

/// Column-normalized `rows x cols` random block.
pub(crate) fn random_stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> StochasticMatrix {
    NonnegMatrix::new(rows, cols, random_block(rng, rows, cols))
        .and_then(|m| m.normalize_columns())
        .expect("positive random draws always normalize")
}

/// Seeded generator shared by all fits.
pub fn seeded_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Data columns floored at [`EPS`], plus per-frame mass `γ_t = Σ_k x_kt`.
pub(crate) fn floored_frames(x: &NonnegMatrix) -> (Vec<Vec<f64>>, Vec<f64>) {
    let frames: Vec<Vec<f64>> = x
        .floored(EPS)
        .columns();
    let mass = x.column_sums();
    (frames, mass)
}

/// Static PLCA: `x_t ≈ γ_t W h_t` with column-stochastic `W` and `H`.
///
/// This is the zero-order special case of the dynamic model and shares its
/// initialization and update order, so the two agree bit for bit.
pub fn fit_static_plca(
    x: &NonnegMatrix,
    rank: usize,
    iters: usize,
    seed: u64,
) -> Result<(StochasticMatrix, StochasticMatrix)> {
    if rank == 0 {
        return Err(Error::InvalidArgument("rank must be at least 1".into()));
    }
    let (k_dim, t_dim) = x.shape();
    let (frames, _) = floored_frames(x);
    let mut rng = seeded_rng(seed);
    let mut w = random_stochastic(&mut rng, k_dim, rank).into_inner().into_vec();
    let mut h = random_stochastic(&mut rng, rank, t_dim).columns();

    for _ in 0..iters {
        let mut acc = vec![0.0; k_dim * rank];
        for (x_t, h_t) in frames.iter().zip(h.iter_mut()) {
            let counts = frame_counts(x_t, &w, rank, h_t, Some(&mut acc));
            *h_t = static_h(&counts);
        }
        w = basis_from_counts(k_dim, rank, acc, Some(EPS))?.into_inner().into_vec();
    }
    let w = StochasticMatrix::new(NonnegMatrix::new(k_dim, rank, w)?)?;
    let h = StochasticMatrix::from_columns(rank, &h)?;
    Ok((w, h))
}

/// Reconstruction `γ_t W h_t` for every frame.
pub fn reconstruct(w: &NonnegMatrix, h: &NonnegMatrix, frame_mass: &[f64]) -> Result<NonnegMatrix> {
    if frame_mass.len() != h.cols() {
        return Err(Error::DimensionMismatch(format!(
            "{} frame masses for {} frames",
            frame_mass.len(),
            h.cols()
        )));
    }
    let wh = w.matmul(h)?;
    let cols = wh.cols();
    let data = wh
        .as_slice()
        .iter()
        .enumerate()
        .map(|(idx, v)| v * frame_mass[idx % cols])
        .collect();
    NonnegMatrix::new(wh.rows(), cols, data)
}
