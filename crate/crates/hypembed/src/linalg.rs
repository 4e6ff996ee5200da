//! Dense symmetric eigensolver (cyclic Jacobi) and power iteration.
//!
//! Jacobi is chosen over faster tridiagonalization schemes because it is
//! simple to run verbatim under software floats at any mantissa width, and
//! the matrices here stay moderate (n in the hundreds to low thousands).

use crate::error::{HypError, Result};
use crate::scalar::{vecs, Scalar};

/// Dense symmetric matrix with full row-major storage.
#[derive(Clone, Debug)]
pub struct SymMatrix<S> {
    n: usize,
    a: Vec<S>,
}

impl<S: Scalar> SymMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        SymMatrix { n, a: vecs::zeros(n * n) }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.a[i * n + i] = S::one();
        }
        m
    }

    /// Builds from a function of (i, j); the function is called once per
    /// unordered pair and mirrored, so symmetry holds by construction.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.a[i * n + j] = v.clone();
                m.a[j * n + i] = v;
            }
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &S {
        &self.a[i * self.n + j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: S) {
        self.a[i * self.n + j] = v.clone();
        self.a[j * self.n + i] = v;
    }

    pub fn frobenius(&self) -> S {
        vecs::norm(&self.a)
    }

    /// Matrix-vector product.
    pub fn mul_vec(&self, x: &[S]) -> Vec<S> {
        let n = self.n;
        let mut y = vecs::zeros(n);
        for i in 0..n {
            let row = &self.a[i * n..(i + 1) * n];
            y[i] = vecs::dot(row, x);
        }
        y
    }

    pub fn is_finite(&self) -> bool {
        self.a.iter().all(|v| v.is_finite())
    }
}

/// Top-k eigenpairs of a symmetric matrix, eigenvalues in descending
/// algebraic order, eigenvectors orthonormal.
pub fn sym_eig<S: Scalar>(m: &SymMatrix<S>, k: usize) -> Result<(Vec<S>, Vec<Vec<S>>)> {
    let n = m.n();
    if k > n {
        return Err(HypError::Invalid(format!("requested {k} eigenpairs of a {n}x{n} matrix")));
    }
    let (mut evals, mut evecs) = jacobi(m)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| evals[j].partial_cmp(&evals[i]).expect("finite eigenvalues"));
    let mut vals = Vec::with_capacity(k);
    let mut vecs_out = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        vals.push(std::mem::replace(&mut evals[idx], S::zero()));
        vecs_out.push(std::mem::take(&mut evecs[idx]));
    }
    Ok((vals, vecs_out))
}

/// Cyclic Jacobi with threshold skipping. Returns all eigenvalues and the
/// corresponding eigenvectors (as rows of the returned Vec, i.e. one Vec<S>
/// per eigenpair), unsorted.
fn jacobi<S: Scalar>(m: &SymMatrix<S>) -> Result<(Vec<S>, Vec<Vec<S>>)> {
    let n = m.n();
    if !m.is_finite() {
        return Err(HypError::Invalid("matrix has non-finite entries".into()));
    }
    if n == 0 {
        return Ok((vec![], vec![]));
    }
    if n == 1 {
        return Ok((vec![m.get(0, 0).clone()], vec![vec![S::one()]]));
    }

    let mut a = m.a.clone();
    // v[c] is the c-th eigenvector; kept as rows for cache-friendly updates.
    let mut v: Vec<Vec<S>> = (0..n)
        .map(|c| {
            let mut col = vecs::zeros(n);
            col[c] = S::one();
            col
        })
        .collect();

    let fro = m.frobenius();
    if fro.is_zero() {
        let evals = (0..n).map(|_| S::zero()).collect();
        return Ok((evals, v));
    }
    let conv = S::ulp_one() * S::from_usize(4 * n);
    let target = conv.clone() * &fro;
    let skip = target.clone() / S::from_usize(n * n);
    let max_sweeps = 64;

    let one = S::one();
    let half = S::from_f64(0.5);

    for _sweep in 0..max_sweeps {
        if off_norm(&a, n) <= target {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q].clone();
                if apq.abs() <= skip {
                    continue;
                }
                let app = a[p * n + p].clone();
                let aqq = a[q * n + q].clone();
                // rotation angle from the standard two-sided Jacobi formulas
                let theta = (aqq - &app) * &half / &apq;
                let t = {
                    let r = (theta.clone() * &theta + &one).sqrt();
                    let denom = theta.abs() + &r;
                    let mag = one.clone() / &denom;
                    if theta.is_negative() { -mag } else { mag }
                };
                let c = one.clone() / (t.clone() * &t + &one).sqrt();
                let s = t.clone() * &c;

                // A <- J^T A J on rows/columns p and q
                for i in 0..n {
                    let aip = a[i * n + p].clone();
                    let aiq = a[i * n + q].clone();
                    a[i * n + p] = c.clone() * &aip - s.clone() * &aiq;
                    a[i * n + q] = s.clone() * &aip + c.clone() * &aiq;
                }
                for j in 0..n {
                    let apj = a[p * n + j].clone();
                    let aqj = a[q * n + j].clone();
                    a[p * n + j] = c.clone() * &apj - s.clone() * &aqj;
                    a[q * n + j] = s.clone() * &apj + c.clone() * &aqj;
                }
                for i in 0..n {
                    let vip = v[p][i].clone();
                    let viq = v[q][i].clone();
                    v[p][i] = c.clone() * &vip - s.clone() * &viq;
                    v[q][i] = s.clone() * &vip + c.clone() * &viq;
                }
            }
        }
    }

    let achieved = off_norm(&a, n);
    if achieved > target {
        return Err(HypError::Numerical(format!(
            "Jacobi eigensolver did not converge in {max_sweeps} sweeps; off-diagonal residual {} (target {})",
            achieved, target
        )));
    }

    let evals = (0..n).map(|i| a[i * n + i].clone()).collect();
    Ok((evals, v))
}

fn off_norm<S: Scalar>(a: &[S], n: usize) -> S {
    let mut acc = S::zero();
    for p in 0..n - 1 {
        for q in p + 1..n {
            let x = a[p * n + q].clone();
            acc += x.clone() * &x;
        }
    }
    (acc.clone() + &acc).sqrt()
}

/// Dominant eigenpair by power iteration with a Rayleigh-quotient stop.
///
/// Requires the dominant eigenvalue to be separated in magnitude; otherwise
/// the iteration stalls and a max-iteration error is returned.
pub fn top_eigenpair<S: Scalar>(m: &SymMatrix<S>) -> Result<(S, Vec<S>)> {
    let n = m.n();
    if n == 0 {
        return Err(HypError::Invalid("empty matrix".into()));
    }
    let fro = m.frobenius();
    if fro.is_zero() {
        let mut e0 = vecs::zeros(n);
        e0[0] = S::one();
        return Ok((S::zero(), e0));
    }

    // deterministic start with nonzero projection on (almost) any direction
    let mut x: Vec<S> = (0..n).map(|i| S::from_f64(1.0 + 0.1 * ((i % 7) as f64) + 1e-3 * (i as f64))).collect();
    let nx = vecs::norm(&x);
    for xi in x.iter_mut() {
        *xi /= &nx;
    }

    let tol = S::power_tol();
    let floor = fro.clone() / S::from_usize(n);
    let max_iters = 20_000 + 200 * n;
    let mut lambda = S::zero();
    for _ in 0..max_iters {
        let y = m.mul_vec(&x);
        lambda = vecs::dot(&x, &y);
        // residual ||Ax - lambda x||
        let mut r = S::zero();
        for i in 0..n {
            let d = y[i].clone() - lambda.clone() * &x[i];
            r += d.clone() * &d;
        }
        let r = r.sqrt();
        let scale = lambda.abs().max_s(&floor);
        if r <= tol.clone() * &scale {
            return Ok((lambda, x));
        }
        let ny = vecs::norm(&y);
        if ny.is_zero() {
            // x lies in the kernel; restart from a shifted direction
            x = (0..n).map(|i| S::from_f64(((i * 13 + 7) % 17) as f64 + 1.0)).collect();
            let nx = vecs::norm(&x);
            for xi in x.iter_mut() {
                *xi /= &nx;
            }
            continue;
        }
        x = y;
        for xi in x.iter_mut() {
            *xi /= &ny;
        }
    }
    Err(HypError::Numerical(format!(
        "power iteration did not reach relative residual {} in {} iterations (no dominant eigenvalue?); last Rayleigh quotient {}",
        tol, max_iters, lambda
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{set_mp_precision, Mp};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_sym(n: usize, seed: u64) -> SymMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        SymMatrix::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn identity_eigenpairs() {
        let m: SymMatrix<f64> = SymMatrix::identity(3);
        let (vals, vecs_) = sym_eig(&m, 3).unwrap();
        assert_eq!(vals, vec![1.0, 1.0, 1.0]);
        for v in &vecs_ {
            assert!((vecs::norm(v) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn diagonal_matrix_axis_eigenvectors() {
        let mut m: SymMatrix<f64> = SymMatrix::zeros(3);
        m.set_sym(0, 0, 5.0);
        m.set_sym(1, 1, -2.0);
        m.set_sym(2, 2, 1.0);
        let (vals, vecs_) = sym_eig(&m, 2).unwrap();
        assert_eq!(vals, vec![5.0, 1.0]);
        assert!(vecs_[0][0].abs() > 1.0 - 1e-12);
        assert!(vecs_[1][2].abs() > 1.0 - 1e-12);
    }

    #[test]
    fn matches_qr_oracle_on_random_8x8() {
        // independent oracle: nalgebra's tridiagonalization + QR eigensolver
        let m = random_sym(8, 42);
        let (vals, vecs_) = sym_eig(&m, 8).unwrap();

        let mut na = nalgebra::DMatrix::<f64>::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                na[(i, j)] = *m.get(i, j);
            }
        }
        let eig = nalgebra::SymmetricEigen::new(na);
        let mut oracle: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        oracle.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for (ours, theirs) in vals.iter().zip(&oracle) {
            assert!((ours - theirs).abs() < 1e-10, "{ours} vs {theirs}");
        }
        // eigenvector quality: ||Av - lambda v|| small, pairwise orthogonal
        for (l, v) in vals.iter().zip(&vecs_) {
            let av = m.mul_vec(v);
            for i in 0..8 {
                assert!((av[i] - l * v[i]).abs() < 1e-10);
            }
        }
        for i in 0..8 {
            for j in i + 1..8 {
                assert!(vecs::dot(&vecs_[i], &vecs_[j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn reconstruction_and_trace() {
        let n = 6;
        let m = random_sym(n, 7);
        let (vals, vecs_) = sym_eig(&m, n).unwrap();
        // sum of eigenvalues equals trace
        let trace: f64 = (0..n).map(|i| m.get(i, i)).sum();
        let sum: f64 = vals.iter().sum();
        assert!((trace - sum).abs() < 1e-12 * trace.abs().max(1.0));
        // sum of lambda v v^T reproduces the matrix
        for i in 0..n {
            for j in 0..n {
                let mut acc = 0.0;
                for k in 0..n {
                    acc += vals[k] * vecs_[k][i] * vecs_[k][j];
                }
                assert!((acc - m.get(i, j)).abs() < (n as f64) * 1e-12);
            }
        }
    }

    #[test]
    fn power_iteration_diag() {
        let mut m: SymMatrix<f64> = SymMatrix::zeros(2);
        m.set_sym(0, 0, 3.0);
        m.set_sym(1, 1, 1.0);
        let (l, v) = top_eigenpair(&m).unwrap();
        assert!((l - 3.0).abs() < 1e-11);
        assert!(v[0].abs() > 1.0 - 1e-10);
    }

    #[test]
    fn power_iteration_rank_one() {
        // u u^T for u = (1,2,2): dominant pair (9, u/3) by direct eigenstructure
        let u = [1.0, 2.0, 2.0];
        let m = SymMatrix::from_fn(3, |i, j| u[i] * u[j]);
        let (l, v) = top_eigenpair(&m).unwrap();
        assert!((l - 9.0).abs() < 1e-10);
        for i in 0..3 {
            assert!((v[i].abs() - u[i] / 3.0).abs() < 1e-10);
        }
    }

    #[test]
    fn power_iteration_agrees_with_sym_eig() {
        let m = random_sym(10, 99);
        let (l, v) = top_eigenpair(&m).unwrap();
        let (vals, vecs_) = sym_eig(&m, 10).unwrap();
        // dominant by magnitude
        let (refl, refv) = vals
            .iter()
            .zip(&vecs_)
            .max_by(|a, b| a.0.abs().partial_cmp(&b.0.abs()).unwrap())
            .unwrap();
        assert!((l - refl).abs() < 1e-9);
        assert!(vecs::dot(&v, refv).abs() > 1.0 - 1e-9);
    }

    #[test]
    fn power_iteration_no_dominance_errors() {
        let mut m: SymMatrix<f64> = SymMatrix::zeros(2);
        m.set_sym(0, 0, 1.0);
        m.set_sym(1, 1, -1.0);
        assert!(top_eigenpair(&m).is_err());
    }

    #[test]
    fn doubling_precision_does_not_worsen_residuals() {
        let fixture = random_sym(6, 3);
        let mut resids = Vec::new();
        for bits in [64usize, 128] {
            set_mp_precision(bits);
            let m: SymMatrix<Mp> = SymMatrix::from_fn(6, |i, j| Mp::from_f64(*fixture.get(i, j)));
            let (vals, vecs_) = sym_eig(&m, 6).unwrap();
            let mut worst = 0.0f64;
            for (l, v) in vals.iter().zip(&vecs_) {
                let av = m.mul_vec(v);
                for i in 0..6 {
                    let d = (av[i].clone() - l.clone() * &v[i]).to_f64().abs();
                    worst = worst.max(d);
                }
            }
            resids.push(worst);
        }
        assert!(resids[1] <= resids[0], "residuals {resids:?} not improved by doubling precision");
    }
}
