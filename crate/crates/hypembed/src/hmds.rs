//! Exact hyperbolic MDS: recover points from pairwise distances by
//! eigendecomposing the entrywise cosh of the distance matrix. The recovered
//! configuration is automatically pseudo-Euclidean centered (`X^T u = 0`),
//! which is what turns the recovery into an ordinary PCA problem; an optional
//! post-step recenters at the Karcher mean instead. Also houses the
//! second-order perturbation bound and the orthogonal-Procrustes gap used to
//! check it.

use crate::embedding::Embedding;
use crate::error::{HypError, Result};
use crate::geometry::{
    dist_poincare_saturating, karcher_mean, pseudo_euclidean_mean, to_poincare, translate_to_origin,
    HyperboloidPoint, PoincarePoint,
};
use crate::graph::DistanceMatrix;
use crate::linalg::{sym_eig, SymMatrix};
use crate::scalar::{vecs, Scalar};

/// Entrywise `cosh` of a fully observed distance matrix (unit diagonal).
pub fn cosh_matrix<S: Scalar>(d: &DistanceMatrix<S>) -> Result<SymMatrix<S>> {
    if !d.fully_observed() {
        return Err(HypError::Invalid(
            "distance matrix has unobserved entries; complete it first (shortest-path completion)".into(),
        ));
    }
    Ok(SymMatrix::from_fn(d.n(), |i, j| d.get(i, j).cosh()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Recenter {
    None,
    #[default]
    Karcher,
    PseudoEuclidean,
}

impl std::str::FromStr for Recenter {
    type Err = HypError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Recenter::None),
            "karcher" => Ok(Recenter::Karcher),
            "pseudo-euclidean" | "pseudo_euclidean" => Ok(Recenter::PseudoEuclidean),
            other => Err(HypError::Invalid(format!("unknown recentering mode {other:?}"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HmdsResult<S> {
    pub embedding: Embedding<S>,
    /// All eigenvalues of `-Y`, descending.
    pub eigenvalues: Vec<S>,
    /// Recovered Gans coordinates (pre-recentering), one row per node.
    pub gans_x: Vec<Vec<S>>,
    /// `u_i = sqrt(1 + ||x_i||^2)`.
    pub gans_u: Vec<S>,
    /// `max_{i,j} |d_H(f(i), f(j)) - d_{i,j}|`, measured on the
    /// pre-recentering configuration with the saturating extended metric.
    pub residual: S,
    /// `||X^T u|| / (||X||_F ||u||)`: the Lemma-1 centering quality.
    pub centered_ratio: S,
    pub warning: Option<String>,
}

/// Runs the recovery at the requested rank.
///
/// Eigenvalues of `-Y` below `tol * lambda_1` are clamped to zero before the
/// square root; `u` is rebuilt from the recovered rows rather than read off
/// the negative eigenvector, which is the numerically stabler route.
pub fn run_hmds<S: Scalar>(
    d: &DistanceMatrix<S>,
    rank: usize,
    recenter: Recenter,
) -> Result<HmdsResult<S>> {
    let n = d.n();
    if n < 2 {
        return Err(HypError::Invalid("need at least 2 points".into()));
    }
    if rank == 0 || rank > n - 1 {
        return Err(HypError::Invalid(format!("rank must be in 1..={} for n = {n}", n - 1)));
    }
    d.validate()?;
    let y = cosh_matrix(d)?;
    let neg_y = SymMatrix::from_fn(n, |i, j| -y.get(i, j).clone());
    let (evals, evecs) = sym_eig(&neg_y, n)?;

    let lambda1 = evals[0].clone();
    let clamp_tol = if S::mantissa_bits() == 53 {
        S::from_f64(1e-10)
    } else {
        S::tol()
    };
    let clamp = clamp_tol * lambda1.abs();

    // more than one strongly negative eigenvalue beyond the u-direction
    // means the input is not exactly embeddable at any rank
    let strongly_negative = evals.iter().filter(|l| **l < -clamp.clone()).count();
    let mut warning = if strongly_negative > 1 {
        Some(format!(
            "{} eigenvalues are significantly negative (one is expected); input distances are not exactly hyperbolic-embeddable",
            strongly_negative
        ))
    } else {
        None
    };

    // X = V diag(sqrt(max(lambda, 0))) on the top `rank` eigenpairs
    let mut gans_x: Vec<Vec<S>> = vec![vecs::zeros(rank); n];
    for (k, (l, v)) in evals.iter().zip(&evecs).take(rank).enumerate() {
        if *l <= clamp {
            continue;
        }
        let s = l.sqrt();
        for i in 0..n {
            gans_x[i][k] = s.clone() * &v[i];
        }
    }
    let gans_u: Vec<S> = gans_x.iter().map(|r| (vecs::norm_sq(r) + S::one()).sqrt()).collect();

    // Lemma-1 centering ratio of the recovered configuration
    let centered_ratio = {
        let mut xtu = vecs::zeros::<S>(rank);
        let mut x_fro = S::zero();
        let mut u_sq = S::zero();
        for (r, u) in gans_x.iter().zip(&gans_u) {
            vecs::axpy(&mut xtu, u, r);
            x_fro += vecs::norm_sq(r);
            u_sq += u.clone() * u;
        }
        let denom = (x_fro.sqrt() * u_sq.sqrt()).max_s(&S::ulp_one());
        vecs::norm(&xtu) / &denom
    };

    // convert to the ball and measure the reconstruction residual
    let points: Vec<PoincarePoint<S>> = gans_x
        .iter()
        .zip(&gans_u)
        .map(|(xbar, u)| to_poincare(&HyperboloidPoint { x0: u.clone(), xbar: xbar.clone() }))
        .collect();
    let mut residual = S::zero();
    for i in 0..n {
        for j in i + 1..n {
            let dh = dist_poincare_saturating(&points[i], &points[j]);
            let err = (dh - d.get(i, j)).abs();
            if !err.is_finite() || err > residual {
                residual = err;
            }
        }
    }

    if points.iter().any(|p| p.norm_sq() >= S::one()) {
        warning = Some(format!(
            "{}recovered points reached the ball boundary at {} bits; increase --precision",
            warning.map(|w| w + "; ").unwrap_or_default(),
            S::mantissa_bits()
        ));
    }

    let points = match recenter {
        Recenter::None => points,
        Recenter::Karcher | Recenter::PseudoEuclidean => {
            if points.iter().any(|p| p.norm_sq() >= S::one()) {
                // collapsed output cannot be recentered; return it as-is
                points
            } else {
                let mean = match recenter {
                    Recenter::Karcher => karcher_mean(&points)?,
                    _ => pseudo_euclidean_mean(&points)?,
                };
                translate_to_origin(&mean, &points)
            }
        }
    };

    Ok(HmdsResult {
        embedding: Embedding {
            labels: d.labels().to_vec(),
            points,
            method: format!("hmds-r{rank}"),
            tau: 1.0,
            scale: 1.0,
            precision_bits: S::mantissa_bits(),
        },
        eigenvalues: evals,
        gans_x,
        gans_u,
        residual,
        centered_ratio,
        warning,
    })
}

/// Second-order perturbation bound on the Procrustes gap:
/// `(2 n^2 / lambda_min) sinh^2(||H||_inf) ||Delta(H)||_inf^2`,
/// where `||.||_inf` is the largest entry magnitude and `lambda_min` the
/// smallest nonzero eigenvalue of `X X^T`.
pub fn perturbation_bound<S: Scalar>(
    h: &DistanceMatrix<S>,
    delta_inf: &S,
    lambda_min: &S,
    n: usize,
) -> Result<S> {
    if *lambda_min <= S::zero() {
        return Err(HypError::Invalid("lambda_min must be positive".into()));
    }
    let mut h_inf = S::zero();
    for i in 0..h.n() {
        for j in 0..h.n() {
            let v = h.get(i, j).abs();
            if v > h_inf {
                h_inf = v;
            }
        }
    }
    let sh = h_inf.sinh();
    let n2 = S::from_usize(n * n);
    Ok(S::two() * n2 / lambda_min.clone() * &sh * &sh * delta_inf * delta_inf)
}

/// `D_E(X, Y) = inf { tr((X - YP)^T (X - YP)) : P^T P = I }` via the
/// classical Procrustes solution: `tr(X^T X) + tr(Y^T Y) - 2 sum sigma_i`
/// with `sigma_i` the singular values of `Y^T X`.
pub fn procrustes_gap<S: Scalar>(x: &[Vec<S>], y: &[Vec<S>]) -> Result<S> {
    if x.len() != y.len() || x.is_empty() {
        return Err(HypError::Invalid("configurations must have matching nonzero size".into()));
    }
    let r = x[0].len();
    if y[0].len() != r {
        return Err(HypError::Invalid("configurations must have matching dimension".into()));
    }
    let mut xtx = S::zero();
    let mut yty = S::zero();
    for (xi, yi) in x.iter().zip(y) {
        xtx += vecs::norm_sq(xi);
        yty += vecs::norm_sq(yi);
    }
    // M = Y^T X (r x r)
    let mut m = vec![S::zero(); r * r];
    for (xi, yi) in x.iter().zip(y) {
        for a in 0..r {
            for b in 0..r {
                m[a * r + b] += yi[a].clone() * &xi[b];
            }
        }
    }
    // singular values via the spectrum of M^T M
    let mtm = SymMatrix::from_fn(r, |a, b| {
        let mut acc = S::zero();
        for k in 0..r {
            acc += m[k * r + a].clone() * &m[k * r + b];
        }
        acc
    });
    let (evals, _) = sym_eig(&mtm, r)?;
    let mut nuclear = S::zero();
    for l in evals {
        if l > S::zero() {
            nuclear += l.sqrt();
        }
    }
    let gap = xtx + yty - S::two() * nuclear;
    // tiny negative values are rounding noise on exact matches
    Ok(gap.max_s(&S::zero()))
}
