//! Online reward regression: a gradient learner and a heavy-tail-robust
//! median-of-means ridge learner over a bounded sample buffer.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

/// FIFO capacity of the regression sample buffer.
pub const MAX_BUFFER: usize = 2000;

pub fn predict(theta: &[f64], phi: &[f64]) -> f64 {
    debug_assert_eq!(theta.len(), phi.len());
    theta.iter().zip(phi).map(|(t, p)| t * p).sum()
}

/// One stochastic gradient step on squared error:
/// theta += 2 * alpha * (reward - theta . phi) * phi.
pub fn nol_update(theta: &mut [f64], phi: &[f64], reward: f64, alpha: f64) {
    let residual = reward - predict(theta, phi);
    for (t, p) in theta.iter_mut().zip(phi) {
        *t += 2.0 * alpha * residual * p;
    }
}

/// Moore–Penrose pseudoinverse. Built on a one-sided Jacobi SVD, which keeps
/// full accuracy on rank-deficient inputs. Singular values at or below
/// `max_sv * 1e-12` are treated as zero.
pub fn pinv(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DMatrix::zeros(a.ncols(), a.nrows());
    }
    if a.nrows() < a.ncols() {
        return pinv(&a.transpose()).transpose();
    }
    let m = a.nrows();
    let n = a.ncols();
    let mut b = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);

    // Rotate column pairs of B until they are mutually orthogonal; V
    // accumulates the rotations, so B = (U * Sigma) and A = B * V^T.
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = b.column(p).dot(&b.column(p));
                let beta = b.column(q).dot(&b.column(q));
                let gamma = b.column(p).dot(&b.column(q));
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let bip = b[(i, p)];
                    let biq = b[(i, q)];
                    b[(i, p)] = c * bip - s * biq;
                    b[(i, q)] = s * bip + c * biq;
                }
                for i in 0..n {
                    let vip = v[(i, p)];
                    let viq = v[(i, q)];
                    v[(i, p)] = c * vip - s * viq;
                    v[(i, q)] = s * vip + c * viq;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    let sigmas: Vec<f64> = (0..n).map(|j| b.column(j).norm()).collect();
    let max_sv = sigmas.iter().cloned().fold(0.0, f64::max);
    let cutoff = max_sv * 1e-12;
    // pinv = sum over retained triples of v_j sigma_j^{-1} u_j^T.
    let mut p = DMatrix::zeros(n, m);
    for j in 0..n {
        if sigmas[j] <= cutoff || sigmas[j] == 0.0 {
            continue;
        }
        for r in 0..n {
            let scale = v[(r, j)] / (sigmas[j] * sigmas[j]);
            for col in 0..m {
                p[(r, col)] += scale * b[(col, j)];
            }
        }
    }
    p
}

/// Minimum-norm solution of (X^T X + lambda I) w = X^T y.
pub fn pseudo_solve(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    assert_eq!(x.nrows(), y.len(), "row count mismatch");
    if lambda < 0.0 {
        return Err(Error::InvalidConfig(format!("ridge weight {} negative", lambda)));
    }
    let d = x.ncols();
    let mut gram = x.transpose() * x;
    for i in 0..d {
        gram[(i, i)] += lambda;
    }
    let w = pinv(&gram) * x.transpose() * y;
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("pseudo_solve"));
    }
    Ok(w)
}

fn median(values: &mut [f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.sort_by(|a, b| a.partial_cmp(b).expect("non-finite distance"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        (values[mid - 1] + values[mid]) / 2.0
    }
}

/// Median-of-means regression: partition the samples into `k` random
/// subsamples, ridge-solve each, and return the candidate whose median
/// distance to the others is smallest. Distance between candidates i, j is
/// the quadratic form of their difference under subsample j's augmented
/// covariance. `k = 1` reduces to `pseudo_solve` on everything.
pub fn htr_fit(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    k: usize,
    lambda: f64,
    rng: &mut impl Rng,
) -> Result<DVector<f64>> {
    let n = x.nrows();
    let d = x.ncols();
    if n == 0 {
        return Err(Error::EmptyBuffer);
    }
    if k == 0 || k > n {
        return Err(Error::TooManySubsamples { k, n });
    }

    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(rng);

    let base = n / k;
    let remainder = n % k;
    let mut omegas: Vec<DVector<f64>> = Vec::with_capacity(k);
    let mut sigmas: Vec<DMatrix<f64>> = Vec::with_capacity(k);
    let mut cursor = 0;
    for i in 0..k {
        let size = base + usize::from(i < remainder);
        let rows = &indices[cursor..cursor + size];
        cursor += size;
        let xi = DMatrix::from_fn(size, d, |r, c| x[(rows[r], c)]);
        let yi = DVector::from_fn(size, |r, _| y[rows[r]]);
        omegas.push(pseudo_solve(&xi, &yi, lambda)?);
        let mut sigma = xi.transpose() * &xi / size as f64;
        for j in 0..d {
            sigma[(j, j)] += lambda;
        }
        sigmas.push(sigma);
    }

    let mut best = 0;
    let mut best_m = f64::INFINITY;
    for i in 0..k {
        let mut dists: Vec<f64> = Vec::with_capacity(k - 1);
        for j in 0..k {
            if j == i {
                continue;
            }
            let diff = &omegas[i] - &omegas[j];
            dists.push((&sigmas[j] * &diff).dot(&diff));
        }
        let m = median(&mut dists);
        if m < best_m {
            best_m = m;
            best = i;
        }
    }
    Ok(omegas.swap_remove(best))
}

/// How the subsample count scales with the buffer size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KPolicy {
    Constant(usize),
    Ln,
    Log2,
    Log10,
}

/// Resolves a policy to a concrete k, clamped into [1, n].
pub fn k_from_policy(policy: KPolicy, n: usize) -> usize {
    let raw = match policy {
        KPolicy::Constant(k) => k,
        KPolicy::Ln => (n as f64).ln().ceil() as usize,
        KPolicy::Log2 => (n as f64).log2().ceil() as usize,
        KPolicy::Log10 => (n as f64).log10().ceil() as usize,
    };
    raw.clamp(1, n.max(1))
}

impl std::str::FromStr for KPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ln" => Ok(KPolicy::Ln),
            "log2" => Ok(KPolicy::Log2),
            "log10" => Ok(KPolicy::Log10),
            other => other
                .parse::<usize>()
                .map(KPolicy::Constant)
                .map_err(|_| Error::InvalidConfig(format!("unrecognized subsample policy {:?}", other))),
        }
    }
}

impl std::fmt::Display for KPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            KPolicy::Constant(k) => write!(f, "{}", k),
            KPolicy::Ln => write!(f, "ln"),
            KPolicy::Log2 => write!(f, "log2"),
            KPolicy::Log10 => write!(f, "log10"),
        }
    }
}

/// Bounded FIFO of (features, reward) pairs feeding `htr_fit`.
#[derive(Debug, Clone)]
pub struct SampleBuffer {
    x: VecDeque<Vec<f64>>,
    y: VecDeque<f64>,
    cap: usize,
}

impl Default for SampleBuffer {
    fn default() -> Self {
        SampleBuffer::new(MAX_BUFFER)
    }
}

impl SampleBuffer {
    pub fn new(cap: usize) -> Self {
        assert!(cap > 0, "buffer capacity must be positive");
        SampleBuffer {
            x: VecDeque::new(),
            y: VecDeque::new(),
            cap,
        }
    }

    /// Appends one sample, evicting the oldest when full.
    pub fn append(&mut self, phi: &[f64], reward: f64) {
        if let Some(first) = self.x.front() {
            assert_eq!(first.len(), phi.len(), "feature dimension changed");
        }
        if self.x.len() == self.cap {
            self.x.pop_front();
            self.y.pop_front();
        }
        self.x.push_back(phi.to_vec());
        self.y.push_back(reward);
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn oldest(&self) -> Option<(&[f64], f64)> {
        self.x.front().map(|x| (x.as_slice(), self.y[0]))
    }

    pub fn to_matrices(&self) -> (DMatrix<f64>, DVector<f64>) {
        let n = self.x.len();
        let d = self.x.front().map_or(0, Vec::len);
        let x = DMatrix::from_fn(n, d, |r, c| self.x[r][c]);
        let y = DVector::from_fn(n, |r, _| self.y[r]);
        (x, y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Pareto, StandardNormal};

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
    }

    /// Dense linear solve by Gaussian elimination with partial pivoting.
    /// Independent of the SVD path under test.
    fn solve_by_elimination(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| a[(i, j)]).chain([b[i]]).collect())
            .collect();
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| m[i][col].abs().partial_cmp(&m[j][col].abs()).unwrap())
                .unwrap();
            m.swap(col, pivot);
            assert!(m[col][col].abs() > 1e-12, "singular system");
            for row in 0..n {
                if row == col {
                    continue;
                }
                let factor = m[row][col] / m[col][col];
                for j in col..=n {
                    m[row][j] -= factor * m[col][j];
                }
            }
        }
        DVector::from_fn(n, |i, _| m[i][n] / m[i][i])
    }

    #[test]
    fn predict_is_dot_product() {
        assert_eq!(predict(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]), 32.0);
    }

    #[test]
    fn nol_update_moves_against_residual() {
        let mut theta = [0.5, -0.25];
        let phi = [1.0, 2.0];
        let reward = 3.0;
        let residual = reward - predict(&theta, &phi);
        nol_update(&mut theta, &phi, reward, 0.1);
        assert!((theta[0] - (0.5 + 0.2 * residual)).abs() < 1e-15);
        assert!((theta[1] - (-0.25 + 0.4 * residual)).abs() < 1e-15);
    }

    #[test]
    fn nol_update_with_zero_rate_is_identity() {
        let mut theta = [0.3, 0.7, -1.2];
        nol_update(&mut theta, &[1.0, 1.0, 1.0], 10.0, 0.0);
        assert_eq!(theta, [0.3, 0.7, -1.2]);
    }

    #[test]
    fn pseudo_solve_matches_elimination_on_ridge_systems() {
        let mut r = rng(17);
        for _ in 0..20 {
            let x = random_matrix(20, 5, &mut r);
            let y = DVector::from_fn(20, |_, _| StandardNormal.sample(&mut r));
            let lambda = 0.1;
            let w = pseudo_solve(&x, &y, lambda).unwrap();

            let mut gram = x.transpose() * &x;
            for i in 0..5 {
                gram[(i, i)] += lambda;
            }
            let expected = solve_by_elimination(&gram, &(x.transpose() * &y));
            assert!((w - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn pinv_satisfies_penrose_conditions() {
        let mut r = rng(23);
        for trial in 0..30 {
            // Every third matrix is rank-deficient by construction.
            let a = if trial % 3 == 0 {
                let left = random_matrix(8, 2, &mut r);
                let right = random_matrix(2, 6, &mut r);
                left * right
            } else {
                random_matrix(7, 5, &mut r)
            };
            let p = pinv(&a);
            let err = (&a * &p * &a - &a).norm();
            assert!(err < 1e-9, "trial {}: reconstruction error {:e}", trial, err);
            assert!((&p * &a * &p - &p).norm() < 1e-9);
            let ap = &a * &p;
            let pa = &p * &a;
            assert!((&ap - ap.transpose()).norm() < 1e-9);
            assert!((&pa - pa.transpose()).norm() < 1e-9);
        }
    }

    #[test]
    fn pinv_of_zero_matrix_is_zero() {
        let a = DMatrix::zeros(4, 3);
        let p = pinv(&a);
        assert_eq!(p.nrows(), 3);
        assert_eq!(p.ncols(), 4);
        assert!(p.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn htr_with_single_subsample_is_plain_ridge() {
        let mut r = rng(5);
        let x = random_matrix(40, 5, &mut r);
        let y = DVector::from_fn(40, |_, _| StandardNormal.sample(&mut r));
        let direct = pseudo_solve(&x, &y, 0.1).unwrap();
        let via_htr = htr_fit(&x, &y, 1, 0.1, &mut rng(99)).unwrap();
        assert!((direct - via_htr).norm() < 1e-10);
    }

    #[test]
    fn htr_recovers_planted_weights_without_noise() {
        for seed in [1, 2, 3] {
            let mut r = rng(seed);
            let n = 500;
            let x = random_matrix(n, 5, &mut r);
            let theta_star = DVector::from_vec(vec![0.7, -1.3, 0.05, 2.0, -0.4]);
            let y = &x * &theta_star;
            let k = k_from_policy(KPolicy::Ln, n);
            let fitted = htr_fit(&x, &y, k, 0.0, &mut r).unwrap();
            let err = (fitted - &theta_star).abs().max();
            assert!(err <= 1e-6, "seed {}: max error {}", seed, err);
        }
    }

    #[test]
    fn subsampling_beats_single_fit_under_pareto_noise() {
        let theta_star = DVector::from_vec(vec![1.0, -0.5, 0.25, 2.0, -1.0]);
        let n = 400;
        let trials = 20;
        let pareto = Pareto::new(1.0, 1.5).unwrap();
        let mut errs_k1 = Vec::new();
        let mut errs_kln = Vec::new();
        for seed in 0..trials {
            let mut r = rng(1000 + seed);
            let x = random_matrix(n, 5, &mut r);
            // Center the noise so both estimators chase the same target.
            let noise = DVector::from_fn(n, |_, _| {
                let v: f64 = pareto.sample(&mut r);
                v - 3.0
            });
            let y = &x * &theta_star + noise;
            let w1 = htr_fit(&x, &y, 1, 0.0, &mut r).unwrap();
            let k = k_from_policy(KPolicy::Ln, n);
            let wk = htr_fit(&x, &y, k, 0.0, &mut r).unwrap();
            errs_k1.push((w1 - &theta_star).norm());
            errs_kln.push((wk - &theta_star).norm());
        }
        let med = |v: &mut Vec<f64>| median(v.as_mut_slice());
        assert!(
            med(&mut errs_kln) < med(&mut errs_k1),
            "median error with subsampling {:?} vs single fit {:?}",
            errs_kln,
            errs_k1
        );
    }

    #[test]
    fn htr_handles_one_row_per_subsample() {
        let mut r = rng(31);
        let x = random_matrix(12, 5, &mut r);
        let y = DVector::from_fn(12, |_, _| StandardNormal.sample(&mut r));
        let w = htr_fit(&x, &y, 12, 0.0, &mut r).unwrap();
        assert!(w.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn htr_determinism() {
        let mut r = rng(7);
        let x = random_matrix(60, 5, &mut r);
        let y = DVector::from_fn(60, |_, _| StandardNormal.sample(&mut r));
        let a = htr_fit(&x, &y, 6, 0.0, &mut rng(42)).unwrap();
        let b = htr_fit(&x, &y, 6, 0.0, &mut rng(42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn htr_rejects_bad_k() {
        let x = DMatrix::zeros(3, 2);
        let y = DVector::zeros(3);
        assert!(matches!(
            htr_fit(&x, &y, 4, 0.0, &mut rng(0)),
            Err(Error::TooManySubsamples { k: 4, n: 3 })
        ));
        assert!(matches!(
            htr_fit(&x, &y, 0, 0.0, &mut rng(0)),
            Err(Error::TooManySubsamples { k: 0, n: 3 })
        ));
        let empty_x = DMatrix::zeros(0, 2);
        let empty_y = DVector::zeros(0);
        assert!(matches!(
            htr_fit(&empty_x, &empty_y, 1, 0.0, &mut rng(0)),
            Err(Error::EmptyBuffer)
        ));
    }

    #[test]
    fn k_policy_values() {
        assert_eq!(k_from_policy(KPolicy::Ln, 1000), 7);
        assert_eq!(k_from_policy(KPolicy::Log10, 1000), 3);
        assert_eq!(k_from_policy(KPolicy::Log2, 8), 3);
        assert_eq!(k_from_policy(KPolicy::Constant(128), 50), 50);
        assert_eq!(k_from_policy(KPolicy::Ln, 1), 1);
        assert_eq!(k_from_policy(KPolicy::Constant(0), 10), 1);
    }

    #[test]
    fn k_policy_parsing() {
        assert_eq!("ln".parse::<KPolicy>().unwrap(), KPolicy::Ln);
        assert_eq!("log2".parse::<KPolicy>().unwrap(), KPolicy::Log2);
        assert_eq!("log10".parse::<KPolicy>().unwrap(), KPolicy::Log10);
        assert_eq!("12".parse::<KPolicy>().unwrap(), KPolicy::Constant(12));
        assert!("seven".parse::<KPolicy>().is_err());
    }

    #[test]
    fn buffer_evicts_oldest_beyond_capacity() {
        let mut buf = SampleBuffer::new(MAX_BUFFER);
        for i in 0..2100 {
            buf.append(&[i as f64, 1.0], i as f64);
        }
        assert_eq!(buf.len(), 2000);
        let (x0, y0) = buf.oldest().unwrap();
        assert_eq!(x0[0], 100.0);
        assert_eq!(y0, 100.0);

        let (x, y) = buf.to_matrices();
        assert_eq!(x.nrows(), 2000);
        assert_eq!(x.ncols(), 2);
        assert_eq!(y.len(), 2000);
        assert_eq!(x[(0, 0)], 100.0);
        assert_eq!(x[(1999, 0)], 2099.0);
    }
}
