//! Principal geodesic analysis: center a point set at its Karcher mean,
//! transform with `w = sqrt(8) x / (1 - ||x||^2)`, and fit a geodesic
//! through the origin minimizing the squared hyperbolic residuals. The loss
//! is nonconvex with attractive non-global minima, so the fit restarts from
//! deterministic directions; a per-point certificate identifies the locally
//! convex regime where descent is trustworthy.

use crate::error::{HypError, Result};
use crate::geometry::{acosh_over_sqrt, dist_poincare, karcher_mean, translate_to_origin, PoincarePoint};
use crate::linalg::{top_eigenpair, SymMatrix};
use crate::scalar::{vecs, Scalar};

/// A geodesic through the origin: the diameter `{(2t - 1) u}` for a unit
/// direction `u`.
#[derive(Clone, Debug)]
pub struct Geodesic<S> {
    direction: Vec<S>,
}

impl<S: Scalar> Geodesic<S> {
    pub fn new(direction: Vec<S>) -> Result<Self> {
        let n = vecs::norm(&direction);
        if (n.clone() - S::one()).abs() > S::from_f64(1e-9) {
            return Err(HypError::Invalid(format!("direction must be unit length, got {n}")));
        }
        Ok(Geodesic { direction })
    }

    pub fn direction(&self) -> &[S] {
        &self.direction
    }
}

/// Centered inputs plus their w-transforms.
#[derive(Clone, Debug)]
pub struct PgaProblem<S> {
    pub centered: Vec<PoincarePoint<S>>,
    pub w: Vec<Vec<S>>,
    pub mean: PoincarePoint<S>,
}

impl<S: Scalar> PgaProblem<S> {
    pub fn dim(&self) -> usize {
        self.w.first().map_or(0, |w| w.len())
    }
}

/// Karcher-centers the points and applies the w-transform.
pub fn pga_prepare<S: Scalar>(pts: &[PoincarePoint<S>]) -> Result<PgaProblem<S>> {
    if pts.len() < 2 {
        return Err(HypError::Invalid("PGA needs at least 2 points".into()));
    }
    let mean = karcher_mean(pts)?;
    let centered = translate_to_origin(&mean, pts);
    let sqrt8 = S::from_f64(8.0).sqrt();
    let w = centered
        .iter()
        .map(|p| {
            let denom = S::one() - p.norm_sq();
            vecs::scale(p.coords(), &(sqrt8.clone() / &denom))
        })
        .collect();
    Ok(PgaProblem { centered, w, mean })
}

/// Squared Euclidean point-to-line residual `||(I - u u^T) w||^2`.
fn line_residual_sq<S: Scalar>(u: &[S], w: &[S]) -> S {
    let t = vecs::dot(u, w);
    vecs::norm_sq(w) - t.clone() * &t
}

/// `f(u) = 1/4 sum acosh^2(1 + ||(I - u u^T) w_i||^2)`.
pub fn pga_loss<S: Scalar>(u: &[S], prob: &PgaProblem<S>) -> S {
    let quarter = S::from_f64(0.25);
    let mut acc = S::zero();
    for w in &prob.w {
        let r = line_residual_sq(u, w).max_s(&S::zero());
        let a = (S::one() + r).acosh_unchecked();
        acc += a.clone() * &a;
    }
    acc * &quarter
}

/// Analytic gradient of the loss, projected to the sphere's tangent space
/// at `u` (so `<grad, u> = 0`).
pub fn pga_grad<S: Scalar>(u: &[S], prob: &PgaProblem<S>) -> Vec<S> {
    let dim = u.len();
    let mut grad = vecs::zeros::<S>(dim);
    for w in &prob.w {
        let r = line_residual_sq(u, w).max_s(&S::zero());
        // d/du 1/4 acosh^2(1+r) = g(1+r)/2 * dr/du, dr/du = -2 <u,w> w
        let g = acosh_over_sqrt(&(S::one() + &r));
        let c = -(g * vecs::dot(u, w));
        vecs::axpy(&mut grad, &c, w);
    }
    let radial = vecs::dot(&grad, u);
    for (gi, ui) in grad.iter_mut().zip(u) {
        *gi -= radial.clone() * ui;
    }
    grad
}

#[derive(Clone, Debug)]
pub struct PgaFit<S> {
    pub geodesic: Geodesic<S>,
    pub loss: S,
    pub restarts: usize,
    pub converged: bool,
    pub convexity_certified: bool,
    /// Final loss of each restart, in restart order (warm start first).
    pub restart_losses: Vec<S>,
}

/// Deterministic restart directions: evenly spaced half-circle angles in the
/// plane, a Fibonacci sphere in 3-d, and a seeded Gaussian sample above.
fn restart_directions<S: Scalar>(dim: usize, count: usize, seed: u64) -> Vec<Vec<S>> {
    use rand::{Rng, SeedableRng};
    let mut out = Vec::with_capacity(count);
    match dim {
        2 => {
            for k in 0..count {
                let theta = S::pi() * S::from_usize(k) / S::from_usize(count.max(1));
                out.push(vec![theta.cos(), theta.sin()]);
            }
        }
        3 => {
            let golden = S::from_f64(1.0 + 5f64.sqrt()) / S::two();
            for k in 0..count {
                let i = S::from_usize(k) + S::from_f64(0.5);
                let z = S::one() - S::two() * i.clone() / S::from_usize(count.max(1));
                let rho = (S::one() - z.clone() * &z).max_s(&S::zero()).sqrt();
                let theta = S::two() * S::pi() * i / &golden;
                out.push(vec![rho.clone() * theta.cos(), rho * theta.sin(), z]);
            }
        }
        _ => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            while out.len() < count {
                let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let n = vecs::norm(&v);
                if n > 1e-3 {
                    out.push(vecs::from_f64::<S>(&vecs::scale(&v, &(1.0 / n))));
                }
            }
        }
    }
    out
}

fn canonicalize_sign<S: Scalar>(u: &mut [S]) {
    let flip = u
        .iter()
        .find(|c| c.abs() > S::from_f64(1e-12))
        .map(|c| c.is_negative())
        .unwrap_or(false);
    if flip {
        for c in u.iter_mut() {
            *c = -c.clone();
        }
    }
}

/// Projected gradient descent on the unit sphere from `restarts` seeded
/// directions plus the top Euclidean-PCA direction of the `w_i` as a warm
/// start. Ties between equal minima resolve to the lowest restart index.
pub fn fit_geodesic<S: Scalar>(prob: &PgaProblem<S>, restarts: usize, seed: u64) -> Result<PgaFit<S>> {
    let dim = prob.dim();
    if dim < 2 {
        return Err(HypError::Invalid("PGA needs dimension at least 2".into()));
    }

    let mut starts: Vec<Vec<S>> = Vec::with_capacity(restarts + 1);
    // warm start: dominant eigenvector of sum w w^T
    let scatter = SymMatrix::from_fn(dim, |i, j| {
        let mut acc = S::zero();
        for w in &prob.w {
            acc += w[i].clone() * &w[j];
        }
        acc
    });
    if let Ok((_, v)) = top_eigenpair(&scatter) {
        starts.push(v);
    }
    starts.extend(restart_directions::<S>(dim, restarts, seed));

    let tol = S::from_f64(1e-10).max_s(&S::tol());
    let mut best: Option<(S, Vec<S>, bool)> = None;
    let mut restart_losses = Vec::with_capacity(starts.len());
    for start in &starts {
        let (u, loss, converged) = descend(start.clone(), prob, &tol);
        restart_losses.push(loss.clone());
        let better = match &best {
            None => true,
            Some((bl, _, _)) => loss < *bl,
        };
        if better {
            best = Some((loss, u, converged));
        }
    }
    let (loss, mut u, converged) = best.expect("at least one restart");
    canonicalize_sign(&mut u);
    let (cert_flags, certified) = convexity_certificate(&u, prob);
    let _ = cert_flags;
    Ok(PgaFit {
        geodesic: Geodesic { direction: u },
        loss,
        restarts: starts.len(),
        converged,
        convexity_certified: certified,
        restart_losses,
    })
}

fn renormalize<S: Scalar>(u: &mut Vec<S>) {
    let n = vecs::norm(u);
    for c in u.iter_mut() {
        *c /= &n;
    }
}

fn descend<S: Scalar>(mut u: Vec<S>, prob: &PgaProblem<S>, tol: &S) -> (Vec<S>, S, bool) {
    renormalize(&mut u);
    let mut loss = pga_loss(&u, prob);
    let max_iters = 5000;
    for _ in 0..max_iters {
        let grad = pga_grad(&u, prob);
        let gnorm = vecs::norm(&grad);
        if gnorm <= *tol {
            return (u, loss, true);
        }
        // backtracking step halving from 1, tangent step then renormalize
        let mut step = S::one();
        let mut accepted = false;
        for _ in 0..50 {
            let mut cand: Vec<S> = u
                .iter()
                .zip(&grad)
                .map(|(ui, gi)| ui.clone() - step.clone() * gi)
                .collect();
            renormalize(&mut cand);
            let closs = pga_loss(&cand, prob);
            if closs < loss {
                u = cand;
                loss = closs;
                accepted = true;
                break;
            }
            step = step * S::from_f64(0.5);
        }
        if !accepted {
            // objective at its rounding plateau; descend on the gradient norm
            let mut step = S::one();
            for _ in 0..50 {
                let mut cand: Vec<S> = u
                    .iter()
                    .zip(&grad)
                    .map(|(ui, gi)| ui.clone() - step.clone() * gi)
                    .collect();
                renormalize(&mut cand);
                let cgnorm = vecs::norm(&pga_grad(&cand, prob));
                if cgnorm < gnorm {
                    loss = pga_loss(&cand, prob);
                    u = cand;
                    accepted = true;
                    break;
                }
                step = step * S::from_f64(0.5);
            }
        }
        if !accepted {
            let near = vecs::norm(&pga_grad(&u, prob)) <= S::from_f64(1e-8);
            return (u, loss, near);
        }
    }
    let converged = vecs::norm(&pga_grad(&u, prob)) <= *tol;
    (u, loss, converged)
}

/// Per-point local-convexity flags: `acosh^2(1 + d_E^2) < min(1, ||w||^2/3)`,
/// plus the conjunction.
pub fn convexity_certificate<S: Scalar>(u: &[S], prob: &PgaProblem<S>) -> (Vec<bool>, bool) {
    let third = S::one() / S::from_f64(3.0);
    let flags: Vec<bool> = prob
        .w
        .iter()
        .map(|w| {
            let r = line_residual_sq(u, w).max_s(&S::zero());
            let a = (S::one() + r).acosh_unchecked();
            let lhs = a.clone() * &a;
            let rhs = S::one().min_s(&(vecs::norm_sq(w) * &third));
            lhs < rhs
        })
        .collect();
    let all = flags.iter().all(|&b| b);
    (flags, all)
}

#[derive(Clone, Debug)]
pub struct GeodesicProjection<S> {
    /// Signed coordinate along the geodesic in the w-domain.
    pub t: S,
    /// The footpoint on the geodesic, back in the ball.
    pub point: PoincarePoint<S>,
    /// Hyperbolic residual `d_H(geodesic, x_i)`.
    pub residual: S,
}

/// Projects every problem point onto the fitted geodesic. The residual is
/// `acosh(1 + d_E(gamma, w)^2) / 2`, which equals half the hyperbolic
/// distance between a point and its Euclidean reflection across the line.
pub fn project_to_geodesic<S: Scalar>(prob: &PgaProblem<S>, u: &[S]) -> Vec<GeodesicProjection<S>> {
    let sqrt8 = S::from_f64(8.0).sqrt();
    let half = S::from_f64(0.5);
    prob.w
        .iter()
        .map(|w| {
            let t = vecs::dot(u, w);
            // invert s = sqrt(8) a/(1-a^2) for the on-geodesic coordinate
            let alpha = if t.is_zero() {
                S::zero()
            } else {
                let disc = (S::from_f64(8.0) + S::from_f64(4.0) * t.clone() * &t).sqrt();
                (disc - &sqrt8) / (S::two() * &t)
            };
            let point = PoincarePoint::new_unchecked(vecs::scale(u, &alpha));
            let r = line_residual_sq(u, w).max_s(&S::zero());
            let residual = (S::one() + r).acosh_unchecked() * &half;
            GeodesicProjection { t, point, residual }
        })
        .collect()
}
