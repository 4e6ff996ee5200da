//! Models of hyperbolic space and the operations the embedders build on:
//! distances in the Poincaré ball and on the hyperboloid, conversions
//! between the models, Möbius translations (the isometry taking a chosen
//! point to the origin), and the Karcher and pseudo-Euclidean means.

use crate::error::{HypError, Result};
use crate::scalar::{vecs, Scalar};

/// Point of the Poincaré ball, `||coords|| < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoincarePoint<S> {
    coords: Vec<S>,
}

impl<S: Scalar> PoincarePoint<S> {
    pub fn new(coords: Vec<S>) -> Result<Self> {
        let p = PoincarePoint { coords };
        if p.norm_sq() >= S::one() {
            return Err(HypError::Domain(format!(
                "point with ||x||^2 = {} is not strictly inside the unit ball",
                p.norm_sq()
            )));
        }
        Ok(p)
    }

    /// Caller guarantees the invariant; used on hot paths that construct
    /// points from formulas already bounded inside the ball.
    pub fn new_unchecked(coords: Vec<S>) -> Self {
        PoincarePoint { coords }
    }

    pub fn origin(dim: usize) -> Self {
        PoincarePoint { coords: vecs::zeros(dim) }
    }

    pub fn from_f64(coords: &[f64]) -> Result<Self> {
        Self::new(vecs::from_f64(coords))
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[S] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<S> {
        self.coords
    }

    pub fn norm_sq(&self) -> S {
        vecs::norm_sq(&self.coords)
    }

    pub fn norm(&self) -> S {
        vecs::norm(&self.coords)
    }

    pub fn is_origin(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }

    pub fn to_f64(&self) -> Vec<f64> {
        vecs::to_f64(&self.coords)
    }
}

/// Point of the hyperboloid model in Gans coordinates: `xbar` is stored and
/// `x0 = sqrt(1 + ||xbar||^2)` is maintained alongside it.
#[derive(Clone, Debug)]
pub struct HyperboloidPoint<S> {
    pub x0: S,
    pub xbar: Vec<S>,
}

impl<S: Scalar> HyperboloidPoint<S> {
    /// Builds from Gans coordinates, deriving the `x0` component.
    pub fn from_gans(xbar: Vec<S>) -> Self {
        let x0 = (vecs::norm_sq(&xbar) + S::one()).sqrt();
        HyperboloidPoint { x0, xbar }
    }

    pub fn dim(&self) -> usize {
        self.xbar.len()
    }

    /// Checks `x0 = sqrt(1 + ||xbar||^2)` within the scalar tolerance.
    pub fn validate(&self) -> Result<()> {
        let expect = (vecs::norm_sq(&self.xbar) + S::one()).sqrt();
        let gap = (self.x0.clone() - &expect).abs();
        if gap > S::tol() * expect.max_s(&S::one()) || self.x0 <= S::zero() {
            return Err(HypError::Domain(format!(
                "hyperboloid invariant violated: x0 = {}, sqrt(1+||xbar||^2) = {}",
                self.x0, expect
            )));
        }
        Ok(())
    }
}

/// Poincaré distance `acosh(1 + 2||x-y||^2 / ((1-||x||^2)(1-||y||^2)))`.
pub fn dist_poincare<S: Scalar>(x: &PoincarePoint<S>, y: &PoincarePoint<S>) -> Result<S> {
    let ax = S::one() - x.norm_sq();
    let ay = S::one() - y.norm_sq();
    if ax <= S::zero() || ay <= S::zero() {
        return Err(HypError::Domain("point on or outside the ball boundary".into()));
    }
    if x.is_origin() {
        return Ok(dist_from_origin_log(y));
    }
    if y.is_origin() {
        return Ok(dist_from_origin_log(x));
    }
    let nsq = vecs::dist_sq(x.coords(), y.coords());
    let t = S::one() + S::two() * nsq / (ax * ay);
    t.acosh_checked()
}

/// Log form of the distance from the origin, `log((1+v)/(1-v))`; better
/// conditioned near the boundary than the acosh form.
fn dist_from_origin_log<S: Scalar>(x: &PoincarePoint<S>) -> S {
    let v = x.norm();
    ((S::one() + &v) / (S::one() - &v)).ln()
}

/// Distance from the origin (exposed for tests of the log-form identity).
pub fn dist_origin<S: Scalar>(x: &PoincarePoint<S>) -> Result<S> {
    if x.norm_sq() >= S::one() {
        return Err(HypError::Domain("point on or outside the ball boundary".into()));
    }
    Ok(dist_from_origin_log(x))
}

/// Extended-metric variant used when measuring degraded embeddings: points
/// that reached the boundary are at infinite distance from everything, and
/// quadratic-form dips below 1 saturate to 0 instead of erroring.
pub fn dist_poincare_saturating<S: Scalar>(x: &PoincarePoint<S>, y: &PoincarePoint<S>) -> S {
    let ax = S::one() - x.norm_sq();
    let ay = S::one() - y.norm_sq();
    if ax <= S::zero() || ay <= S::zero() {
        let same = vecs::dist_sq(x.coords(), y.coords()).is_zero();
        return if same { S::zero() } else { S::from_f64(f64::INFINITY) };
    }
    let nsq = vecs::dist_sq(x.coords(), y.coords());
    let t = S::one() + S::two() * nsq / (ax * ay);
    t.acosh_saturating()
}

/// Hyperboloid distance `acosh(x0 y0 - xbar . ybar)`.
pub fn dist_hyperboloid<S: Scalar>(x: &HyperboloidPoint<S>, y: &HyperboloidPoint<S>) -> Result<S> {
    let q = x.x0.clone() * &y.x0 - vecs::dot(&x.xbar, &y.xbar);
    q.acosh_checked()
}

/// Projection from the hyperboloid to the ball: `x -> xbar / (1 + x0)`.
pub fn to_poincare<S: Scalar>(h: &HyperboloidPoint<S>) -> PoincarePoint<S> {
    let denom = S::one() + &h.x0;
    let coords = h.xbar.iter().map(|c| c.clone() / &denom).collect();
    PoincarePoint::new_unchecked(coords)
}

/// Inverse projection: `xbar = 2z/(1-||z||^2)`, `x0 = (1+||z||^2)/(1-||z||^2)`.
pub fn to_hyperboloid<S: Scalar>(z: &PoincarePoint<S>) -> Result<HyperboloidPoint<S>> {
    let nsq = z.norm_sq();
    let denom = S::one() - &nsq;
    if denom <= S::zero() {
        return Err(HypError::Domain("point on or outside the ball boundary".into()));
    }
    let xbar = z.coords().iter().map(|c| S::two() * c.clone() / &denom).collect();
    let x0 = (S::one() + &nsq) / &denom;
    Ok(HyperboloidPoint { x0, xbar })
}

/// Möbius addition `a (+) z`; the ball isometry group in coordinate form.
pub fn mobius_add<S: Scalar>(a: &[S], z: &[S]) -> Vec<S> {
    let az = vecs::dot(a, z);
    let na = vecs::norm_sq(a);
    let nz = vecs::norm_sq(z);
    let ca = S::one() + S::two() * &az + &nz;
    let cz = S::one() - &na;
    let denom = S::one() + S::two() * &az + na * &nz;
    let mut out = vecs::scale(a, &(ca / &denom));
    vecs::axpy(&mut out, &(cz / &denom), z);
    out
}

/// The Möbius translation taking `a` to the origin, applied to each point.
/// Pairwise hyperbolic distances are preserved; `translate_from_origin(a, .)`
/// is the exact inverse.
pub fn translate_to_origin<S: Scalar>(
    a: &PoincarePoint<S>,
    pts: &[PoincarePoint<S>],
) -> Vec<PoincarePoint<S>> {
    let neg_a = vecs::neg(a.coords());
    pts.iter()
        .map(|p| PoincarePoint::new_unchecked(mobius_add(&neg_a, p.coords())))
        .collect()
}

pub fn translate_from_origin<S: Scalar>(
    a: &PoincarePoint<S>,
    pts: &[PoincarePoint<S>],
) -> Vec<PoincarePoint<S>> {
    pts.iter()
        .map(|p| PoincarePoint::new_unchecked(mobius_add(a.coords(), p.coords())))
        .collect()
}

/// `acosh(t)/sqrt(t^2-1)`, extended continuously to 1 at t = 1. Shows up in
/// every gradient of a squared hyperbolic distance.
pub(crate) fn acosh_over_sqrt<S: Scalar>(t: &S) -> S {
    let s = t.clone() - S::one();
    // series 1 - s/3 + O(s^2) once the direct form loses half the mantissa
    let cutoff = S::ulp_one().sqrt();
    if s < cutoff {
        return S::one() - s / S::from_f64(3.0);
    }
    let root = (t.clone() * t - S::one()).sqrt();
    t.acosh_unchecked() / root
}

/// `t = cosh d_H(z, x)` together with its Euclidean gradient in `z`.
pub(crate) fn cosh_dist_and_grad<S: Scalar>(z: &[S], x: &[S]) -> (S, Vec<S>) {
    let az = S::one() - vecs::norm_sq(z);
    let ax = S::one() - vecs::norm_sq(x);
    let nsq = vecs::dist_sq(z, x);
    let t = S::one() + S::two() * &nsq / (az.clone() * &ax);
    // dt/dz = 4(z-x)/(az*ax) + 4*nsq*z/(az^2*ax)
    let four = S::from_f64(4.0);
    let c1 = four.clone() / (az.clone() * &ax);
    let c2 = four * &nsq / (az.clone() * &az * &ax);
    let mut grad = vecs::sub(z, x);
    grad = vecs::scale(&grad, &c1);
    vecs::axpy(&mut grad, &c2, z);
    (t, grad)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanKind {
    Karcher,
    PseudoEuclidean,
}

/// Karcher mean: local minimizer of the sum of squared hyperbolic distances.
pub fn karcher_mean<S: Scalar>(pts: &[PoincarePoint<S>]) -> Result<PoincarePoint<S>> {
    riemannian_mean(pts, MeanKind::Karcher)
}

/// Pseudo-Euclidean mean: local minimizer of `sum sinh^2(d_H)`. Its
/// stationarity at the origin is exactly the `X^T u = 0` condition that
/// makes matrix-factorization recovery work.
pub fn pseudo_euclidean_mean<S: Scalar>(pts: &[PoincarePoint<S>]) -> Result<PoincarePoint<S>> {
    riemannian_mean(pts, MeanKind::PseudoEuclidean)
}

fn riemannian_mean<S: Scalar>(pts: &[PoincarePoint<S>], kind: MeanKind) -> Result<PoincarePoint<S>> {
    if pts.is_empty() {
        return Err(HypError::Invalid("mean of an empty point set".into()));
    }
    let dim = pts[0].dim();
    if pts.len() == 1 {
        return Ok(pts[0].clone());
    }

    // init: Euclidean average of Gans coordinates, projected back to the ball
    let mut acc = vecs::zeros::<S>(dim);
    for p in pts {
        let h = to_hyperboloid(p)?;
        for (a, c) in acc.iter_mut().zip(&h.xbar) {
            *a += c;
        }
    }
    let inv_n = S::one() / S::from_usize(pts.len());
    let gans_avg: Vec<S> = acc.into_iter().map(|a: S| a * &inv_n).collect();
    let mut m = to_poincare(&HyperboloidPoint::from_gans(gans_avg));

    let tol = S::tol().max_s(&S::from_f64(1e-13));
    let max_iters = 200;
    let mut damping = S::one();
    let (mut resid, mut eps) = mean_newton_system(&translate_to_origin(&m, pts), kind)?;
    for _ in 0..max_iters {
        if resid <= tol {
            return Ok(m);
        }
        if !resid.is_finite() {
            return Err(HypError::Numerical("mean solver produced a non-finite gradient".into()));
        }
        // damped Newton: accept a step only if the stationarity residual drops
        let mut accepted = false;
        for _ in 0..50 {
            let scaled = vecs::scale(&eps, &damping);
            let step = to_poincare(&HyperboloidPoint::from_gans(scaled));
            let cand = PoincarePoint::new_unchecked(mobius_add(m.coords(), step.coords()));
            if cand.norm_sq() < S::one() {
                let (cresid, ceps) = mean_newton_system(&translate_to_origin(&cand, pts), kind)?;
                if cresid < resid {
                    m = cand;
                    resid = cresid;
                    eps = ceps;
                    accepted = true;
                    let grown = damping.clone() * S::from_f64(2.0);
                    damping = grown.min_s(&S::one());
                    break;
                }
            }
            damping = damping * S::from_f64(0.5);
        }
        if !accepted {
            // residual at its numerical floor
            if resid <= S::from_f64(1e-10) {
                return Ok(m);
            }
            return Err(HypError::Numerical(format!(
                "mean solver stalled with gradient norm {}",
                resid
            )));
        }
    }
    Err(HypError::Numerical(format!(
        "mean solver did not converge in {max_iters} iterations; gradient norm {}",
        resid
    )))
}

/// Stationarity residual and full Newton step for either mean, evaluated on
/// points already translated so the current estimate sits at the origin.
///
/// Karcher: the gradient of `sum d^2` at the origin is `-2 sum (d/sinh d) xbar`
/// and the Hessian is `sum [ (d coth d) x0^{-1}... ]`; in Gans coordinates the
/// system is `r = sum c(d) xbar`, `A = sum [ c(d) x0 I + k(d) xbar xbar^T ]`
/// with `c = d/sinh d`, `k = (sinh d - d cosh d)/sinh^3 d` (radial eigenvalue
/// exactly 1).
///
/// Pseudo-Euclidean: `r = sum x0 xbar` (the `X^T u` of Lemma-1 centering) and
/// `A = sum (x0^2 I + xbar xbar^T)`, from linearizing a Lorentz boost.
fn mean_newton_system<S: Scalar>(
    centered: &[PoincarePoint<S>],
    kind: MeanKind,
) -> Result<(S, Vec<S>)> {
    let dim = centered[0].dim();
    let n = centered.len();
    let mut r = vecs::zeros::<S>(dim);
    let mut a = crate::linalg::SymMatrix::<S>::zeros(dim);
    let third = S::one() / S::from_f64(3.0);
    let mut x_fro = S::zero();
    let mut u_sq = S::zero();
    for p in centered {
        let h = to_hyperboloid(p)?;
        let (cw, kw) = match kind {
            MeanKind::PseudoEuclidean => {
                x_fro += vecs::norm_sq(&h.xbar);
                u_sq += h.x0.clone() * &h.x0;
                (h.x0.clone(), S::one())
            }
            MeanKind::Karcher => {
                // c = d/sinh d = acosh(x0)/sqrt(x0^2-1)
                let c = acosh_over_sqrt(&h.x0);
                let s_sq = h.x0.clone() * &h.x0 - S::one();
                let k = if s_sq <= S::ulp_one().sqrt() {
                    -third.clone()
                } else {
                    let s = s_sq.sqrt();
                    let d = h.x0.acosh_unchecked();
                    (s.clone() - d * &h.x0) / (s.clone() * &s * &s)
                };
                (c, k)
            }
        };
        vecs::axpy(&mut r, &cw, &h.xbar);
        for i in 0..dim {
            for j in i..dim {
                let mut v = a.get(i, j).clone() + kw.clone() * &h.xbar[i] * &h.xbar[j];
                if i == j {
                    v += cw.clone() * &h.x0;
                }
                a.set_sym(i, j, v);
            }
        }
    }
    let denom = match kind {
        // ||X||_F ||u|| so the residual matches the Lemma-1 ratio
        MeanKind::PseudoEuclidean => (x_fro.sqrt() * u_sq.sqrt()).max_s(&S::ulp_one()),
        MeanKind::Karcher => S::from_usize(n),
    };
    let resid = vecs::norm(&r) / &denom;
    let eps = solve_spd(&a, &r)?;
    // cap the step; far from the optimum the next iteration re-linearizes
    let en = vecs::norm(&eps);
    let cap = S::from_f64(4.0);
    let eps = if en > cap { vecs::scale(&eps, &(cap / &en)) } else { eps };
    Ok((resid, eps))
}

/// Gaussian elimination with partial pivoting; the systems here are tiny
/// (ball dimension) and positive definite.
fn solve_spd<S: Scalar>(a: &crate::linalg::SymMatrix<S>, b: &[S]) -> Result<Vec<S>> {
    let n = b.len();
    let mut m: Vec<S> = Vec::with_capacity(n * (n + 1));
    for i in 0..n {
        for j in 0..n {
            m.push(a.get(i, j).clone());
        }
        m.push(b[i].clone());
    }
    let w = n + 1;
    for col in 0..n {
        let mut piv = col;
        for r in col + 1..n {
            if m[r * w + col].abs() > m[piv * w + col].abs() {
                piv = r;
            }
        }
        if m[piv * w + col].is_zero() {
            return Err(HypError::Numerical("singular system in mean solver".into()));
        }
        if piv != col {
            for c in 0..w {
                m.swap(piv * w + c, col * w + c);
            }
        }
        let d = m[col * w + col].clone();
        for r in col + 1..n {
            let f = m[r * w + col].clone() / &d;
            for c in col..w {
                let sub = f.clone() * &m[col * w + c];
                m[r * w + c] -= sub;
            }
        }
    }
    let mut x = vecs::zeros::<S>(n);
    for r in (0..n).rev() {
        let mut acc = m[r * w + n].clone();
        for c in r + 1..n {
            acc -= m[r * w + c].clone() * &x[c];
        }
        x[r] = acc / &m[r * w + r];
    }
    Ok(x)
}

/// `|-ln(1-||x||) - (d_H(0,x) - ln 2)|`: the gap in the bits-versus-distance
/// law. Bounded by `exp(-d_H(0,x))`, so it vanishes for deep points.
pub fn precision_law_gap<S: Scalar>(x: &PoincarePoint<S>) -> Result<S> {
    let v = x.norm();
    if v >= S::one() {
        return Err(HypError::Domain("point on or outside the ball boundary".into()));
    }
    let lhs = -((S::one() - &v).ln());
    let d = dist_origin(x)?;
    Ok((lhs - (d - S::ln_2())).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn p2(x: f64, y: f64) -> PoincarePoint<f64> {
        PoincarePoint::from_f64(&[x, y]).unwrap()
    }

    fn random_ball_point(rng: &mut impl Rng, dim: usize, max_norm: f64) -> PoincarePoint<f64> {
        loop {
            let c: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let n = vecs::norm(&c);
            if n < 1.0 && n > 1e-6 {
                let scale = rng.gen_range(0.0..max_norm) / n;
                return PoincarePoint::from_f64(&vecs::scale(&c, &scale)).unwrap();
            }
        }
    }

    #[test]
    fn distance_to_self_is_zero() {
        let x = p2(0.3, -0.2);
        assert_eq!(dist_poincare(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn origin_distance_log_form() {
        // d(0, (0.5, 0)) = ln 3
        let d = dist_poincare(&p2(0.0, 0.0), &p2(0.5, 0.0)).unwrap();
        assert!((d - 3f64.ln()).abs() < 1e-15);
        // acosh form agrees with the log form
        let acosh_form = (1.0f64 + 2.0 * 0.25 / (1.0 * 0.75)).acosh();
        assert!((d - acosh_form).abs() < 1e-15);
    }

    #[test]
    fn two_point_log_formula_oracle() {
        // independent evaluation of the two-point log form
        let (x, y) = (p2(0.8, 0.0), p2(0.0, 0.7));
        let d = dist_poincare(&x, &y).unwrap();
        let nx2 = 0.64;
        let ny2 = 0.49;
        let diff = (0.8f64.powi(2) + 0.7f64.powi(2)).sqrt();
        let oracle =
            2.0 * ((diff + (nx2 * ny2 - 2.0 * 0.0 + 1.0).sqrt()) / ((1.0 - nx2) * (1.0 - ny2)).sqrt()).ln();
        assert!((d - oracle).abs() < 1e-12, "{d} vs {oracle}");
    }

    #[test]
    fn boundary_point_is_domain_error() {
        let x = PoincarePoint::new_unchecked(vec![1.0, 0.0]);
        assert!(dist_poincare(&x, &p2(0.0, 0.0)).is_err());
        assert!(PoincarePoint::<f64>::from_f64(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn hyperboloid_distance_and_conversions() {
        let h0 = HyperboloidPoint::from_gans(vec![0.0, 0.0]);
        assert_eq!(dist_hyperboloid(&h0, &h0).unwrap(), 0.0);

        // xbar = (1, 0) projects to (1/(1+sqrt 2), 0)
        let h = HyperboloidPoint::from_gans(vec![1.0, 0.0]);
        let z = to_poincare(&h);
        assert!((z.coords()[0] - 1.0 / (1.0 + 2f64.sqrt())).abs() < 1e-15);

        // inverse pair round trip
        let back = to_hyperboloid(&z).unwrap();
        assert!((back.xbar[0] - 1.0).abs() < 1e-14);
        back.validate().unwrap();

        // origin maps to (1, 0)
        let o = to_hyperboloid(&p2(0.0, 0.0)).unwrap();
        assert_eq!(o.x0, 1.0);

        // model equivalence on a fixed pair
        let a = HyperboloidPoint::from_gans(vec![0.75, 0.0]);
        let b = HyperboloidPoint::from_gans(vec![0.0, 0.5]);
        let dh = dist_hyperboloid(&a, &b).unwrap();
        let dp = dist_poincare(&to_poincare(&a), &to_poincare(&b)).unwrap();
        assert!((dh - dp).abs() < 1e-12);
    }

    #[test]
    fn translate_isometry_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = p2(0.5, 0.0);
        let pts: Vec<_> = (0..6).map(|_| random_ball_point(&mut rng, 2, 0.9)).collect();
        let moved = translate_to_origin(&a, &pts);

        // a maps to the origin
        let a_img = translate_to_origin(&a, std::slice::from_ref(&a));
        assert!(a_img[0].norm() < 1e-15);

        // pairwise distances preserved
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                let before = dist_poincare(&pts[i], &pts[j]).unwrap();
                let after = dist_poincare(&moved[i], &moved[j]).unwrap();
                assert!((before - after).abs() < 1e-12, "{before} vs {after}");
            }
        }

        // inverse recovers inputs
        let back = translate_from_origin(&a, &moved);
        for (orig, rec) in pts.iter().zip(&back) {
            for (o, r) in orig.coords().iter().zip(rec.coords()) {
                assert!((o - r).abs() < 1e-12);
            }
        }

        // a = 0 is the identity
        let id = translate_to_origin(&PoincarePoint::origin(2), &pts);
        for (orig, rec) in pts.iter().zip(&id) {
            assert_eq!(orig.coords(), rec.coords());
        }
    }

    #[test]
    fn karcher_mean_examples() {
        let single = vec![p2(0.3, 0.1)];
        let m = karcher_mean(&single).unwrap();
        assert_eq!(m.coords(), single[0].coords());

        let pair = vec![p2(0.4, 0.2), p2(-0.4, -0.2)];
        let m = karcher_mean(&pair).unwrap();
        assert!(m.norm() < 1e-9, "symmetric pair mean {:?}", m.coords());

        // four-point configuration from the PGA running example
        let four = vec![p2(0.8, 0.0), p2(-0.8, 0.0), p2(0.0, 0.7), p2(0.0, -0.7)];
        let m = karcher_mean(&four).unwrap();
        assert!(m.norm() < 1e-9, "four-point mean {:?}", m.coords());
    }

    #[test]
    fn pseudo_euclidean_mean_examples() {
        let single = vec![p2(0.2, -0.5)];
        assert_eq!(pseudo_euclidean_mean(&single).unwrap().coords(), single[0].coords());

        let pair = vec![p2(0.0, 0.6), p2(0.0, -0.6)];
        let m = pseudo_euclidean_mean(&pair).unwrap();
        assert!(m.norm() < 1e-9);

        // Lemma-1 stationarity: translate the mean to the origin, then the
        // Gans coordinates satisfy X^T u ~ 0
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<_> = (0..8).map(|_| random_ball_point(&mut rng, 3, 0.8)).collect();
        let m = pseudo_euclidean_mean(&pts).unwrap();
        let centered = translate_to_origin(&m, &pts);
        let mut xtu = vecs::zeros::<f64>(3);
        let mut x_fro = 0.0;
        let mut u_norm = 0.0;
        for p in &centered {
            let h = to_hyperboloid(p).unwrap();
            vecs::axpy(&mut xtu, &h.x0, &h.xbar);
            x_fro += vecs::norm_sq(&h.xbar);
            u_norm += h.x0 * h.x0;
        }
        let ratio = vecs::norm(&xtu) / (x_fro.sqrt() * u_norm.sqrt());
        assert!(ratio < 1e-9, "X^T u ratio {ratio}");
    }

    #[test]
    fn means_stay_in_gans_subspace() {
        // points generated inside a 2-dim linear subspace of Gans coordinates
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pts: Vec<PoincarePoint<f64>> = (0..7)
            .map(|_| {
                let g = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), 0.0, 0.0];
                to_poincare(&HyperboloidPoint::from_gans(g))
            })
            .collect();
        for mean in [karcher_mean(&pts).unwrap(), pseudo_euclidean_mean(&pts).unwrap()] {
            let h = to_hyperboloid(&mean).unwrap();
            assert!(h.xbar[2].abs() < 1e-9 && h.xbar[3].abs() < 1e-9, "mean left the subspace: {:?}", h.xbar);
        }
    }

    #[test]
    fn precision_law_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let x = random_ball_point(&mut rng, 2, 0.999);
            if x.norm() < 1e-9 {
                continue;
            }
            let gap = precision_law_gap(&x).unwrap();
            let d = dist_origin(&x).unwrap();
            assert!(gap <= (-d).exp() + 1e-12, "gap {gap} exceeds e^-d {}", (-d).exp());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn metric_axioms(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_ball_point(&mut rng, 3, 0.9);
            let b = random_ball_point(&mut rng, 3, 0.9);
            let c = random_ball_point(&mut rng, 3, 0.9);
            let dab = dist_poincare(&a, &b).unwrap();
            let dba = dist_poincare(&b, &a).unwrap();
            prop_assert_eq!(dab, dba);
            let dac = dist_poincare(&a, &c).unwrap();
            let dcb = dist_poincare(&c, &b).unwrap();
            prop_assert!(dab <= dac + dcb + 1e-10);
            prop_assert!(dab >= 0.0);
        }

        #[test]
        fn model_equivalence(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_ball_point(&mut rng, 3, 0.95);
            let b = random_ball_point(&mut rng, 3, 0.95);
            let dp = dist_poincare(&a, &b).unwrap();
            let dh = dist_hyperboloid(&to_hyperboloid(&a).unwrap(), &to_hyperboloid(&b).unwrap()).unwrap();
            prop_assert!((dp - dh).abs() < 1e-12, "poincare {} vs hyperboloid {}", dp, dh);
        }

        #[test]
        fn translation_preserves_distances(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = random_ball_point(&mut rng, 2, 0.9);
            let x = random_ball_point(&mut rng, 2, 0.9);
            let y = random_ball_point(&mut rng, 2, 0.9);
            let before = dist_poincare(&x, &y).unwrap();
            let moved = translate_to_origin(&a, &[x, y]);
            let after = dist_poincare(&moved[0], &moved[1]).unwrap();
            prop_assert!((before - after).abs() < 1e-12);
        }

        #[test]
        fn log_form_identity(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_ball_point(&mut rng, 2, 0.99);
            let d = dist_poincare(&PoincarePoint::origin(2), &x).unwrap();
            let v = x.norm();
            let log_form = ((1.0 + v) / (1.0 - v)).ln();
            prop_assert!((d - log_form).abs() < 1e-12);
        }
    }
}
