//! Gradient-descent embedder: minimize the squared gap between scaled
//! hyperbolic distances and target distances, jointly over the points and a
//! learned scale `tau`. Supports observation masks (incomplete distance
//! matrices), exponential down-weighting of long paths, the Riemannian
//! metric correction, component clipping, and ball projection.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embedding::Embedding;
use crate::error::{HypError, Result};
use crate::geometry::{acosh_over_sqrt, cosh_dist_and_grad, PoincarePoint};
use crate::graph::DistanceMatrix;
use crate::scalar::{vecs, Scalar};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Weighting {
    None,
    /// `exp(-beta * d_ij)`: penalizes long paths less, sharpening local
    /// reconstruction.
    Exponential(f64),
}

impl Weighting {
    fn weight<S: Scalar>(&self, d: &S) -> S {
        match self {
            Weighting::None => S::one(),
            Weighting::Exponential(beta) => (-(S::from_f64(*beta) * d)).exp(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SgdConfig {
    pub rank: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub tau_init: f64,
    pub weighting: Weighting,
    pub seed: u64,
    /// Pairs per minibatch once the instance outgrows full-batch updates.
    pub batch_pairs: usize,
}

impl Default for SgdConfig {
    fn default() -> Self {
        SgdConfig {
            rank: 2,
            learning_rate: 1e-2,
            epochs: 500,
            tau_init: 1.0,
            weighting: Weighting::None,
            seed: 0,
            batch_pairs: 4096,
        }
    }
}

/// Scale floor: the learned `tau` never drops below this.
pub const TAU_MIN: f64 = 0.1;
/// Gradient components clip to this magnitude.
pub const GRAD_CLIP: f64 = 1e5;
/// Points project radially back to this norm when an update overshoots.
pub const BALL_RADIUS: f64 = 1.0 - 1e-5;
/// Instances up to this many nodes take full-gradient steps.
pub const FULL_BATCH_LIMIT: usize = 512;

/// `sum over observed pairs of w(d_ij) (tau d_H(x_i, x_j) - d_ij)^2`.
pub fn sgd_loss<S: Scalar>(
    points: &[PoincarePoint<S>],
    tau: &S,
    d: &DistanceMatrix<S>,
    weighting: Weighting,
) -> S {
    let mut acc = S::zero();
    for (i, j) in d.observed_pairs() {
        let (t, _) = cosh_dist_and_grad(points[i].coords(), points[j].coords());
        let dh = t.acosh_saturating();
        let gap = tau.clone() * &dh - d.get(i, j);
        acc += weighting.weight(d.get(i, j)) * &gap * &gap;
    }
    acc
}

/// Analytic Euclidean gradient over a batch of pairs, plus the `tau`
/// gradient. The per-point Riemannian correction and clipping are applied by
/// `sgd_step`.
fn batch_gradient<S: Scalar>(
    points: &[PoincarePoint<S>],
    tau: &S,
    d: &DistanceMatrix<S>,
    weighting: Weighting,
    batch: &[(usize, usize)],
) -> Result<(Vec<Vec<S>>, S)> {
    let dim = points[0].dim();
    let mut grads: Vec<Vec<S>> = vec![vecs::zeros(dim); points.len()];
    let mut tau_grad = S::zero();
    for &(i, j) in batch {
        let (t, gt_i) = cosh_dist_and_grad(points[i].coords(), points[j].coords());
        if !t.is_finite() {
            return Err(HypError::Numerical(format!(
                "non-finite distance between points {i} and {j}"
            )));
        }
        let dh = t.acosh_saturating();
        let gap = tau.clone() * &dh - d.get(i, j);
        let w = weighting.weight(d.get(i, j));
        // d/dx_i (tau d - d*)^2 = 2 w (tau d - d*) tau * (dd/dt) dt/dx_i
        let chain = S::two() * &w * &gap * tau;
        let dd_dt = {
            // 1/sqrt(t^2-1) with the same series guard as acosh_over_sqrt
            let g = acosh_over_sqrt(&t);
            let a = t.acosh_saturating();
            if a.is_zero() {
                S::zero() // coincident points: subgradient 0
            } else {
                g / &a
            }
        };
        let c = chain.clone() * &dd_dt;
        vecs::axpy(&mut grads[i], &c, &gt_i);
        // symmetric gradient for x_j: swap roles
        let (_, gt_j) = cosh_dist_and_grad(points[j].coords(), points[i].coords());
        vecs::axpy(&mut grads[j], &c, &gt_j);
        tau_grad += S::two() * &w * &gap * &dh;
    }
    Ok((grads, tau_grad))
}

/// One update over a batch of observed pairs: Euclidean gradients, the
/// `(1-||w||^2)^2/4` metric correction, component clipping, a radial ball
/// projection, then the `tau` step with its floor.
pub fn sgd_step<S: Scalar>(
    points: &mut [PoincarePoint<S>],
    tau: &mut S,
    d: &DistanceMatrix<S>,
    weighting: Weighting,
    batch: &[(usize, usize)],
    lr: &S,
) -> Result<()> {
    let (grads, tau_grad) = batch_gradient(points, tau, d, weighting, batch)?;
    let quarter = S::from_f64(0.25);
    let clip_hi = S::from_f64(GRAD_CLIP);
    let clip_lo = S::from_f64(-GRAD_CLIP);
    let radius = S::from_f64(BALL_RADIUS);
    for (p, g) in points.iter_mut().zip(grads) {
        let conf = {
            let a = S::one() - p.norm_sq();
            quarter.clone() * &a * &a
        };
        let mut coords = p.coords().to_vec();
        for (c, gi) in coords.iter_mut().zip(g) {
            let corrected = (gi * &conf).min_s(&clip_hi).max_s(&clip_lo);
            *c -= lr.clone() * corrected;
        }
        let n = vecs::norm(&coords);
        if n >= radius {
            let shrink = radius.clone() / &n;
            coords = vecs::scale(&coords, &shrink);
        }
        *p = PoincarePoint::new_unchecked(coords);
    }
    let clipped = tau_grad.min_s(&clip_hi).max_s(&clip_lo);
    let cand = tau.clone() - lr.clone() * clipped;
    *tau = cand.max_s(&S::from_f64(TAU_MIN));
    Ok(())
}

pub enum Init<S> {
    Random,
    Warm(Embedding<S>),
}

/// Runs the embedder; returns the embedding (scale metadata set so that
/// original distances are `d_H / scale` with `scale = 1/tau`) and the
/// per-epoch loss trace.
pub fn sgd_embed<S: Scalar>(
    d: &DistanceMatrix<S>,
    cfg: &SgdConfig,
    init: Init<S>,
) -> Result<(Embedding<S>, Vec<f64>)> {
    let n = d.n();
    if n < 2 {
        return Err(HypError::Invalid("need at least 2 points".into()));
    }
    if cfg.rank < 1 {
        return Err(HypError::Invalid("rank must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points: Vec<PoincarePoint<S>> = match init {
        Init::Random => (0..n)
            .map(|_| {
                let c: Vec<f64> = (0..cfg.rank).map(|_| rng.gen_range(-0.1..0.1)).collect();
                PoincarePoint::new_unchecked(vecs::from_f64(&c))
            })
            .collect(),
        Init::Warm(e) => {
            if e.n() != n {
                return Err(HypError::Invalid(format!(
                    "warm start has {} points, expected {n}",
                    e.n()
                )));
            }
            if e.dim() != cfg.rank {
                return Err(HypError::Invalid(format!(
                    "warm start dimension {} does not match rank {}",
                    e.dim(),
                    cfg.rank
                )));
            }
            e.points
        }
    };
    let mut tau = S::from_f64(cfg.tau_init.max(TAU_MIN));
    let lr = S::from_f64(cfg.learning_rate);
    let pairs = d.observed_pairs();
    if pairs.is_empty() {
        return Err(HypError::Invalid("no observed pairs".into()));
    }

    let full_batch = n <= FULL_BATCH_LIMIT;
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    trace.push(sgd_loss(&points, &tau, d, cfg.weighting).to_f64());
    let mut shuffled = pairs.clone();
    for _ in 0..cfg.epochs {
        if full_batch {
            sgd_step(&mut points, &mut tau, d, cfg.weighting, &pairs, &lr)?;
        } else {
            shuffled.shuffle(&mut rng);
            for chunk in shuffled.chunks(cfg.batch_pairs.max(1)) {
                sgd_step(&mut points, &mut tau, d, cfg.weighting, chunk, &lr)?;
            }
        }
        trace.push(sgd_loss(&points, &tau, d, cfg.weighting).to_f64());
    }

    let tau_f = tau.to_f64();
    Ok((
        Embedding {
            labels: d.labels().to_vec(),
            points,
            method: format!("sgd-r{}", cfg.rank),
            tau: tau_f,
            scale: 1.0 / tau_f,
            precision_bits: S::mantissa_bits(),
        },
        trace,
    ))
}
