//! The combinatorial tree construction: recursive child placement in the
//! Poincaré disk by reflection to the origin, its r-dimensional
//! generalization with coding-theoretic child placement, the distortion
//! scale factor, and the precision estimate.
//!
//! Every tree edge (a, c) comes out at hyperbolic length exactly
//! `tau * w(a, c)`; the scale `tau` trades distortion against the mantissa
//! bits needed to keep deep nodes off the ball boundary.

use crate::embedding::Embedding;
use crate::error::{HypError, Result};
use crate::geometry::{mobius_add, PoincarePoint};
use crate::graph::WeightedTree;
use crate::scalar::{vecs, Scalar};

#[derive(Clone, Debug)]
pub struct CombinatorialConfig {
    /// Distortion slack: the construction guarantees worst-case distortion
    /// at most `1 + epsilon` on trees.
    pub epsilon: f64,
    /// Overrides the derived edge scale when set.
    pub tau_override: Option<f64>,
    /// Ball dimension, at least 2.
    pub dim: usize,
}

impl Default for CombinatorialConfig {
    fn default() -> Self {
        CombinatorialConfig { epsilon: 0.1, tau_override: None, dim: 2 }
    }
}

impl CombinatorialConfig {
    pub fn resolve_tau<S: Scalar>(&self, deg_max: usize) -> S {
        match self.tau_override {
            Some(t) => S::from_f64(t),
            None => compute_tau(deg_max, &S::from_f64(self.epsilon)),
        }
    }
}

/// Edge scale `((1+eps)/eps) * 2 ln(deg_max / (pi/2))`, floored at 0.1 for
/// degenerate degrees where the formula goes nonpositive.
pub fn compute_tau<S: Scalar>(deg_max: usize, epsilon: &S) -> S {
    let half_pi = S::pi() / S::two();
    let deg = S::from_usize(deg_max.max(1));
    let base = S::two() * (deg / &half_pi).ln();
    let tau = (S::one() + epsilon) / epsilon.clone() * base;
    let floor = S::from_f64(0.1);
    tau.max_s(&floor)
}

/// Bits needed to represent the deepest point of an embedding at scale
/// `tau`: the largest distance is `ell * tau` for weighted longest path
/// `ell`, and a distance of `d` costs about `d / ln 2` bits.
pub fn required_precision<S: Scalar>(t: &WeightedTree<S>, tau: &S) -> usize {
    let ell = t.longest_path();
    let bits = (ell * tau / S::ln_2()).to_f64();
    bits.ceil().max(1.0) as usize
}

/// Euclidean radius of the hyperbolic circle of radius `rho` around the
/// origin: `(e^rho - 1)/(e^rho + 1) = tanh(rho/2)`.
fn euclidean_radius<S: Scalar>(rho: &S) -> S {
    (rho.clone() / S::two()).tanh()
}

/// Children of a node placed at hyperbolic distance `tau * w_i`, maximally
/// separated in angle from the (reflected) grandparent. Works in the frame
/// where the parent sits at the origin and reflects back.
pub fn place_children_2d<S: Scalar>(
    parent: &PoincarePoint<S>,
    grandparent: Option<&PoincarePoint<S>>,
    weights: &[S],
    tau: &S,
) -> Result<Vec<PoincarePoint<S>>> {
    let count = weights.len();
    if count == 0 {
        return Ok(Vec::new());
    }
    let neg_p = vecs::neg(parent.coords());
    let two_pi = S::two() * S::pi();

    // angle of the reflected grandparent, and the slot count
    let (theta, slots, first) = match grandparent {
        Some(g) => {
            let z = mobius_add(&neg_p, g.coords());
            let th = S::atan2(&z[1], &z[0]);
            (th, count + 1, 1usize)
        }
        None => (S::zero(), count, 0usize),
    };

    let mut out = Vec::with_capacity(count);
    for (i, w) in weights.iter().enumerate() {
        let slot = S::from_usize(first + i);
        let angle = theta.clone() + two_pi.clone() * slot / S::from_usize(slots);
        let rho = tau.clone() * w;
        let rad = euclidean_radius(&rho);
        let y = vec![rad.clone() * angle.cos(), rad * angle.sin()];
        let placed = mobius_add(parent.coords(), &y);
        out.push(PoincarePoint::new_unchecked(placed));
    }
    Ok(out)
}

/// Hypercube vertices indexed by the rows of a Sylvester-Hadamard matrix and
/// their complements: up to `2 * 2^floor(log2 r)` unit vectors with pairwise
/// Euclidean distance at least sqrt(2). When the code length does not divide
/// `r`, the trailing coordinates are zero and the live block is rescaled to
/// keep unit norm (and the same distance floor).
pub fn hypercube_code_points<S: Scalar>(r: usize, count: usize) -> Result<Vec<Vec<S>>> {
    if r < 2 {
        return Err(HypError::Invalid("code placement needs dimension at least 2".into()));
    }
    let m = (usize::BITS - 1 - r.leading_zeros()) as usize;
    let code_len = 1usize << m; // largest power of two <= r
    let capacity = 2 * code_len;
    if count > capacity {
        return Err(HypError::Invalid(format!(
            "cannot place {count} points in dimension {r} (capacity {capacity}); increase the dimension or fall back to the 2d construction"
        )));
    }
    let reps = r / code_len;
    let live = reps * code_len;
    let comp = S::one() / S::from_usize(live).sqrt();

    let mut out = Vec::with_capacity(count);
    for k in 0..count {
        let (row, negate) = if k < code_len { (k, false) } else { (k - code_len, true) };
        let mut v = vecs::zeros::<S>(r);
        for (j, vj) in v.iter_mut().enumerate().take(live) {
            let bit = (row & (j % code_len)).count_ones() % 2 == 1;
            let sign = bit != negate;
            *vj = if sign { -comp.clone() } else { comp.clone() };
        }
        out.push(v);
    }
    Ok(out)
}

/// Householder reflection taking `from` to `to` (both unit vectors).
fn householder_to<S: Scalar>(from: &[S], to: &[S]) -> impl Fn(&[S]) -> Vec<S> {
    let diff = vecs::sub(from, to);
    let nd = vecs::norm(&diff);
    let axis = if nd.to_f64() < 1e-30 { None } else { Some(vecs::scale(&diff, &(S::one() / &nd))) };
    move |x: &[S]| match &axis {
        None => x.to_vec(),
        Some(v) => {
            let c = S::two() * vecs::dot(v, x);
            let mut out = x.to_vec();
            for (o, vi) in out.iter_mut().zip(v) {
                *o -= c.clone() * vi;
            }
            out
        }
    }
}

/// Children placed on rotated hypercube-code directions: codeword 0 is
/// rotated onto the reflected grandparent so every child keeps the code's
/// angular separation from the parent direction as well.
pub fn place_children_rd<S: Scalar>(
    parent: &PoincarePoint<S>,
    grandparent: Option<&PoincarePoint<S>>,
    weights: &[S],
    tau: &S,
    dim: usize,
) -> Result<Vec<PoincarePoint<S>>> {
    let count = weights.len();
    if count == 0 {
        return Ok(Vec::new());
    }
    let neg_p = vecs::neg(parent.coords());
    let dirs: Vec<Vec<S>> = match grandparent {
        Some(g) => {
            let z = mobius_add(&neg_p, g.coords());
            let zn = vecs::norm(&z);
            let zhat = vecs::scale(&z, &(S::one() / &zn));
            let code = hypercube_code_points::<S>(dim, count + 1)?;
            let rot = householder_to(&code[0], &zhat);
            code[1..].iter().map(|c| rot(c)).collect()
        }
        None => hypercube_code_points::<S>(dim, count)?,
    };

    let mut out = Vec::with_capacity(count);
    for (dir, w) in dirs.iter().zip(weights) {
        let rho = tau.clone() * w;
        let rad = euclidean_radius(&rho);
        let y = vecs::scale(dir, &rad);
        let placed = mobius_add(parent.coords(), &y);
        out.push(PoincarePoint::new_unchecked(placed));
    }
    Ok(out)
}

/// Embeds a weighted tree into the Poincaré disk (dim 2).
pub fn embed_tree_2d<S: Scalar>(t: &WeightedTree<S>, cfg: &CombinatorialConfig) -> Result<Embedding<S>> {
    if cfg.dim != 2 {
        return Err(HypError::Invalid(format!("embed_tree_2d requires dim 2, got {}", cfg.dim)));
    }
    embed_tree_impl(t, cfg, PlacementRule::Circle)
}

/// Embeds a weighted tree into the Poincaré ball of dimension `cfg.dim >= 2`
/// using Hadamard-code child placement.
pub fn embed_tree_rd<S: Scalar>(t: &WeightedTree<S>, cfg: &CombinatorialConfig) -> Result<Embedding<S>> {
    if cfg.dim < 2 {
        return Err(HypError::Invalid(format!("ball dimension must be at least 2, got {}", cfg.dim)));
    }
    embed_tree_impl(t, cfg, PlacementRule::Code)
}

/// Dispatches on dimension: evenly spaced circle angles for the disk,
/// code placement above.
pub fn embed_tree<S: Scalar>(t: &WeightedTree<S>, cfg: &CombinatorialConfig) -> Result<Embedding<S>> {
    if cfg.dim == 2 {
        embed_tree_2d(t, cfg)
    } else {
        embed_tree_rd(t, cfg)
    }
}

#[derive(Clone, Copy, PartialEq)]
enum PlacementRule {
    Circle,
    Code,
}

fn embed_tree_impl<S: Scalar>(
    t: &WeightedTree<S>,
    cfg: &CombinatorialConfig,
    rule: PlacementRule,
) -> Result<Embedding<S>> {
    let n = t.n();
    let deg_max = t.graph().max_degree().max(2);
    let tau = cfg.resolve_tau::<S>(deg_max);
    let dim = cfg.dim;

    let mut points: Vec<Option<PoincarePoint<S>>> = vec![None; n];
    points[t.root()] = Some(PoincarePoint::origin(dim));

    for &a in t.bfs_order() {
        let kids = t.children(a);
        if kids.is_empty() {
            continue;
        }
        let parent_pt = points[a].clone().expect("BFS order places parents first");
        let grandparent_pt = t.parent(a).map(|g| points[g].clone().expect("grandparent placed"));
        let weights: Vec<S> = kids.iter().map(|&c| t.parent_weight(c).clone()).collect();
        let placed = match rule {
            PlacementRule::Circle => {
                place_children_2d(&parent_pt, grandparent_pt.as_ref(), &weights, &tau)?
            }
            PlacementRule::Code => {
                place_children_rd(&parent_pt, grandparent_pt.as_ref(), &weights, &tau, dim)?
            }
        };
        for (&c, p) in kids.iter().zip(placed) {
            if S::one() - p.norm_sq() <= S::zero() {
                return Err(HypError::Precision {
                    needed: required_precision(t, &tau),
                    have: S::mantissa_bits(),
                });
            }
            points[c] = Some(p);
        }
    }

    let tau_f = tau.to_f64();
    Ok(Embedding {
        labels: t.graph().labels().to_vec(),
        points: points.into_iter().map(|p| p.expect("all nodes placed")).collect(),
        method: match rule {
            PlacementRule::Circle => "combinatorial-h2".into(),
            PlacementRule::Code => format!("combinatorial-h{dim}"),
        },
        tau: tau_f,
        scale: tau_f,
        precision_bits: S::mantissa_bits(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{dist_poincare, translate_to_origin};
    use crate::graph::{bfs_tree, gen_fixture, FixtureKind};
    use crate::scalar::{set_mp_precision, Mp};

    fn fixture_tree(kind: FixtureKind) -> WeightedTree<f64> {
        let g = gen_fixture(kind).unwrap();
        bfs_tree(&g, 0).unwrap()
    }

    #[test]
    fn tau_formula() {
        // deg 4, eps 0.1: 22 ln(4/(pi/2))
        let tau: f64 = compute_tau(4, &0.1);
        assert!((tau - 22.0 * (4.0 / std::f64::consts::FRAC_PI_2).ln()).abs() < 1e-12);
        assert!((tau - 20.568).abs() < 1e-2);

        // eps 1.0: 4 ln(4/(pi/2))
        let tau: f64 = compute_tau(4, &1.0);
        assert!((tau - 4.0 * (4.0 / std::f64::consts::FRAC_PI_2).ln()).abs() < 1e-12);
        assert!((tau - 3.74).abs() < 1e-2);

        // large eps approaches the Delaunay-only scale
        let tau: f64 = compute_tau(8, &1e9);
        assert!((tau - 2.0 * (8.0 / std::f64::consts::FRAC_PI_2).ln()).abs() < 1e-6);

        // degenerate degrees floor at 0.1
        let tau: f64 = compute_tau(1, &0.1);
        assert_eq!(tau, 0.1);
    }

    #[test]
    fn root_children_on_circle() {
        let tau = 2.0f64;
        let origin = PoincarePoint::origin(2);
        let kids = place_children_2d(&origin, None, &[1.0; 4], &tau).unwrap();
        let want_r = (tau.exp() - 1.0) / (tau.exp() + 1.0);
        for (i, k) in kids.iter().enumerate() {
            assert!((k.norm() - want_r).abs() < 1e-14);
            let angle = k.coords()[1].atan2(k.coords()[0]).rem_euclid(2.0 * std::f64::consts::PI);
            let want = (2.0 * std::f64::consts::PI * i as f64 / 4.0).rem_euclid(2.0 * std::f64::consts::PI);
            assert!((angle - want).abs() < 1e-12, "child {i} angle {angle} want {want}");
        }
    }

    #[test]
    fn children_at_exact_tau_and_separated() {
        let parent = PoincarePoint::from_f64(&[0.4, -0.2]).unwrap();
        let grand = PoincarePoint::from_f64(&[0.1, 0.3]).unwrap();
        let tau = 1.7f64;
        let kids = place_children_2d(&parent, Some(&grand), &[1.0; 3], &tau).unwrap();
        for k in &kids {
            let d = dist_poincare(&parent, k).unwrap();
            assert!((d - tau).abs() < 1e-10, "child distance {d}");
        }
        // angular separation in the frame where the parent is at the origin:
        // every pair among {reflected grandparent, children} at least 2 pi / 4
        let mut frame = translate_to_origin(&parent, &[grand.clone()]);
        frame.extend(translate_to_origin(&parent, &kids));
        let angles: Vec<f64> = frame
            .iter()
            .map(|p| p.coords()[1].atan2(p.coords()[0]))
            .collect();
        let slot = 2.0 * std::f64::consts::PI / 4.0;
        for i in 0..angles.len() {
            for j in i + 1..angles.len() {
                let mut gap = (angles[i] - angles[j]).abs();
                if gap > std::f64::consts::PI {
                    gap = 2.0 * std::f64::consts::PI - gap;
                }
                assert!(gap >= slot - 1e-10, "angular gap {gap} < {slot}");
            }
        }
    }

    #[test]
    fn single_edge_and_path_distances() {
        let cfg = CombinatorialConfig { epsilon: 0.1, tau_override: Some(1.25), dim: 2 };
        let t = fixture_tree(FixtureKind::Path { n: 2 });
        let e = embed_tree_2d(&t, &cfg).unwrap();
        let d = dist_poincare(e.point(0), e.point(1)).unwrap();
        assert!((d - 1.25).abs() < 1e-12);

        // path of 5: consecutive distances tau, end-to-end 4 tau
        let t = fixture_tree(FixtureKind::Path { n: 5 });
        let e = embed_tree_2d(&t, &cfg).unwrap();
        for i in 0..4 {
            let d = dist_poincare(e.point(i), e.point(i + 1)).unwrap();
            assert!((d - 1.25).abs() < 1e-10);
        }
        let end = dist_poincare(e.point(0), e.point(4)).unwrap();
        assert!((end - 5.0).abs() < 1e-9, "end-to-end distance {end}");
    }

    #[test]
    fn weighted_edges_scale_child_radius() {
        let mut g = crate::graph::Graph::<f64>::new();
        let a = g.node("a");
        let b = g.node("b");
        let c = g.node("c");
        g.add_edge(a, b, 2.0).unwrap();
        g.add_edge(b, c, 0.5).unwrap();
        let t = bfs_tree(&g, 0).unwrap();
        let cfg = CombinatorialConfig { epsilon: 0.1, tau_override: Some(1.0), dim: 2 };
        let e = embed_tree_2d(&t, &cfg).unwrap();
        assert!((dist_poincare(e.point(a), e.point(b)).unwrap() - 2.0).abs() < 1e-10);
        assert!((dist_poincare(e.point(b), e.point(c)).unwrap() - 0.5).abs() < 1e-10);
        assert!((dist_poincare(e.point(a), e.point(c)).unwrap() - 2.5).abs() < 1e-9);
    }

    #[test]
    fn hypercube_codes() {
        // r=2: the 4 corners of the square, min pairwise distance sqrt(2)
        let pts = hypercube_code_points::<f64>(2, 4).unwrap();
        assert_eq!(pts.len(), 4);
        for p in &pts {
            assert!((vecs::norm(p) - 1.0).abs() < 1e-12);
            for c in p {
                assert!((c.abs() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
            }
        }
        let mut min_d = f64::INFINITY;
        for i in 0..4 {
            for j in i + 1..4 {
                min_d = min_d.min(vecs::dist_sq(&pts[i], &pts[j]).sqrt());
            }
        }
        assert!((min_d - 2f64.sqrt()).abs() < 1e-12);

        // r=128: 128 unit vectors, min distance >= sqrt(2)
        let pts = hypercube_code_points::<f64>(128, 128).unwrap();
        assert_eq!(pts.len(), 128);
        let mut min_d = f64::INFINITY;
        for i in 0..128 {
            assert!((vecs::norm(&pts[i]) - 1.0).abs() < 1e-12);
            for j in i + 1..128 {
                min_d = min_d.min(vecs::dist_sq(&pts[i], &pts[j]).sqrt());
            }
        }
        assert!(min_d >= 2f64.sqrt() - 1e-12, "min distance {min_d}");

        // non-power-of-two dimension keeps the guarantees
        let pts = hypercube_code_points::<f64>(10, 12).unwrap();
        let mut min_d = f64::INFINITY;
        for i in 0..pts.len() {
            assert!((vecs::norm(&pts[i]) - 1.0).abs() < 1e-12);
            for j in i + 1..pts.len() {
                min_d = min_d.min(vecs::dist_sq(&pts[i], &pts[j]).sqrt());
            }
        }
        assert!(min_d >= 2f64.sqrt() - 1e-12);

        // capacity errors
        assert!(hypercube_code_points::<f64>(2, 5).is_err());
        assert!(hypercube_code_points::<f64>(16, 33).is_err());
    }

    #[test]
    fn rd_embedding_distances_and_angles() {
        // degree-10 star in r=16: children at distance tau, pairwise angles >= 90 deg
        let t = fixture_tree(FixtureKind::Star { n: 11 });
        let cfg = CombinatorialConfig { epsilon: 0.1, tau_override: Some(2.0), dim: 16 };
        let e = embed_tree_rd(&t, &cfg).unwrap();
        for i in 1..11 {
            let d = dist_poincare(e.point(0), e.point(i)).unwrap();
            assert!((d - 2.0).abs() < 1e-10);
        }
        for i in 1..11 {
            for j in i + 1..11 {
                let cosang = vecs::dot(e.point(i).coords(), e.point(j).coords())
                    / (e.point(i).norm() * e.point(j).norm());
                assert!(cosang <= 1e-10, "children {i},{j} angle cos {cosang}");
            }
        }

        // r=2 through the code path degenerates to 4-child hypercube placement
        let t = fixture_tree(FixtureKind::Star { n: 5 });
        let cfg = CombinatorialConfig { epsilon: 0.1, tau_override: Some(1.5), dim: 2 };
        let e = embed_tree_rd(&t, &cfg).unwrap();
        for i in 1..5 {
            let d = dist_poincare(e.point(0), e.point(i)).unwrap();
            assert!((d - 1.5).abs() < 1e-10);
        }
    }

    #[test]
    fn rd_children_keep_distance_in_deep_trees() {
        let t = fixture_tree(FixtureKind::BalancedTree { branching: 3, depth: 3 });
        let cfg = CombinatorialConfig { epsilon: 1.0, tau_override: None, dim: 4 };
        let e = embed_tree_rd(&t, &cfg).unwrap();
        let tau = e.tau;
        for u in 0..t.n() {
            if let Some(p) = t.parent(u) {
                let d = dist_poincare(e.point(u), e.point(p)).unwrap();
                assert!((d - tau).abs() < 1e-9, "edge ({p},{u}) length {d} vs tau {tau}");
            }
        }
    }

    #[test]
    fn required_precision_estimates() {
        let t = fixture_tree(FixtureKind::Path { n: 2 });
        assert_eq!(required_precision(&t, &1.0f64), 2);

        // grows linearly with chain length
        let mut last = 0;
        for m in [2usize, 4, 8] {
            let t = fixture_tree(FixtureKind::ChainStar { deg_max: 4, chain_len: m });
            let tau: f64 = compute_tau(4, &0.1);
            let bits = required_precision(&t, &tau);
            assert!(bits > last);
            if last > 0 {
                let ratio = bits as f64 / last as f64;
                assert!((ratio - 2.0).abs() < 0.2, "doubling m should double bits: {ratio}");
            }
            last = bits;
        }
    }

    #[test]
    fn estimate_close_to_measured_boundary_distance() {
        set_mp_precision(256);
        // path rooted at one end: the deepest point sits a full longest-path
        // away from the origin, so the bit estimate is directly observable
        let g = gen_fixture::<Mp>(FixtureKind::Path { n: 9 }).unwrap();
        let t = bfs_tree(&g, 0).unwrap();
        let cfg = CombinatorialConfig { epsilon: 0.1, tau_override: Some(2.0), dim: 2 };
        let e = embed_tree_2d(&t, &cfg).unwrap();
        let estimate = required_precision(&t, &Mp::from_f64(2.0)) as f64;
        let measured = e
            .points
            .iter()
            .map(|p| {
                let gap = Mp::one() - p.norm();
                -gap.to_f64().log2()
            })
            .fold(0.0f64, f64::max);
        assert!(
            measured <= 2.0 * estimate && estimate <= 2.0 * measured.max(1.0),
            "estimate {estimate} vs measured {measured}"
        );
    }

    #[test]
    fn underflow_names_needed_bits() {
        set_mp_precision(64);
        let g = gen_fixture::<Mp>(FixtureKind::Path { n: 12 }).unwrap();
        let t = bfs_tree(&g, 0).unwrap();
        let cfg = CombinatorialConfig { epsilon: 0.1, tau_override: Some(30.0), dim: 2 };
        match embed_tree_2d(&t, &cfg) {
            Err(HypError::Precision { needed, have }) => {
                assert_eq!(have, 64);
                assert!(needed > 64, "needed {needed}");
            }
            other => panic!("expected precision error, got {other:?}"),
        }
    }

    #[test]
    fn edge_lengths_degrade_monotonically_with_fewer_bits() {
        // fixed small fixture at tau=3: measure worst edge-length error at
        // decreasing precision; halving bits never improves it
        let mut errs = Vec::new();
        for bits in [256usize, 128, 64] {
            set_mp_precision(bits);
            let g = gen_fixture::<Mp>(FixtureKind::BalancedTree { branching: 2, depth: 4 }).unwrap();
            let t = bfs_tree(&g, 0).unwrap();
            let cfg = CombinatorialConfig { epsilon: 0.1, tau_override: Some(3.0), dim: 2 };
            let e = embed_tree_2d(&t, &cfg).unwrap();
            let mut worst = 0.0f64;
            for u in 0..t.n() {
                if let Some(p) = t.parent(u) {
                    let d = dist_poincare(e.point(u), e.point(p)).unwrap();
                    worst = worst.max((d - Mp::from_f64(3.0)).abs().to_f64());
                }
            }
            errs.push(worst);
        }
        assert!(errs[0] <= errs[1] + 1e-30 && errs[1] <= errs[2] + 1e-30, "errors {errs:?}");
    }
}
