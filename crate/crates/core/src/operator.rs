//! Linear elliptic coefficients with singular growth certificates, and the
//! reduction of quasi-linear comparison data to linear coefficients.

use crate::fields::ScalarField;
use crate::weight::RadialWeight;
use crate::{dist, Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use std::sync::Arc;

/// Tolerance for the symmetry discrepancy of the principal matrix.
const SYMMETRY_TOL: f64 = 1e-12;
/// Margin threshold for certificate checks.
const CHECK_TOL: f64 = 1e-10;

/// sgn with sgn(0) = 0, as used in the reduction coefficients.
pub(crate) fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Ball or annulus domain descriptor.
#[derive(Debug, Clone, Serialize)]
pub enum Domain {
    Ball { center: Vec<f64>, radius: f64 },
    Annulus { center: Vec<f64>, r_inner: f64, r_outer: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => center.len(),
        }
    }

    pub fn center(&self) -> &[f64] {
        match self {
            Domain::Ball { center, .. } | Domain::Annulus { center, .. } => center,
        }
    }

    pub fn outer_radius(&self) -> f64 {
        match self {
            Domain::Ball { radius, .. } => *radius,
            Domain::Annulus { r_outer, .. } => *r_outer,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        let r = dist(x, self.center());
        match self {
            Domain::Ball { radius, .. } => r < *radius,
            Domain::Annulus {
                r_inner, r_outer, ..
            } => r > *r_inner && r < *r_outer,
        }
    }

    /// Distance from x to the outer sphere: the argument of the growth
    /// weight in all coefficient bounds.
    pub fn growth_distance(&self, x: &[f64]) -> f64 {
        self.outer_radius() - dist(x, self.center())
    }
}

/// Outcome of one sampled coefficient check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub pass: bool,
    pub worst_margin: f64,
    /// Sample point realizing the worst margin.
    pub argmin: Vec<f64>,
}

/// Sampled evidence that coefficients obey the growth conditions
/// (ellipticity between |y|^2 and Lambda(d)|y|^2, |b_i| <= Lambda(d),
/// c >= -Lambda(d)/d) on a ball.
#[derive(Debug, Clone, Serialize)]
pub struct GrowthCertificate {
    pub n_samples: usize,
    pub ellipticity_lower: CheckOutcome,
    pub ellipticity_upper: CheckOutcome,
    pub b_bound: CheckOutcome,
    pub c_bound: CheckOutcome,
}

impl GrowthCertificate {
    pub fn pass(&self) -> bool {
        self.ellipticity_lower.pass
            && self.ellipticity_upper.pass
            && self.b_bound.pass
            && self.c_bound.pass
    }
}

type MatrixFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type VectorFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Point-evaluable coefficients of L[u] = sum a_ij u_{x_i x_j}
/// + sum b_i u_{x_i} + c u on a ball or annulus.
#[derive(Clone)]
pub struct OperatorCoefficients {
    pub n: usize,
    a: MatrixFn,
    b: VectorFn,
    c: ScalarFn,
    pub domain: Domain,
    pub certificate: Option<GrowthCertificate>,
}

impl OperatorCoefficients {
    pub fn new(
        n: usize,
        a: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        b: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        c: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        domain: Domain,
    ) -> Self {
        OperatorCoefficients {
            n,
            a: Arc::new(a),
            b: Arc::new(b),
            c: Arc::new(c),
            domain,
            certificate: None,
        }
    }

    /// The Laplacian: a = I, b = 0, c = 0.
    pub fn laplacian(n: usize, domain: Domain) -> Self {
        OperatorCoefficients::new(
            n,
            move |_| DMatrix::identity(n, n),
            move |_| DVector::zeros(n),
            |_| 0.0,
            domain,
        )
    }

    /// Principal matrix at x, symmetrized; errors if the asymmetric part
    /// exceeds the discrepancy tolerance.
    pub fn a_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let a = (self.a)(x);
        let sym = 0.5 * (&a + a.transpose());
        let discrepancy = (&a - &sym).amax();
        if discrepancy > SYMMETRY_TOL {
            return Err(Error::Construction(format!(
                "principal matrix not symmetric at {x:?} (discrepancy {discrepancy:e})"
            )));
        }
        Ok(sym)
    }

    pub fn b_at(&self, x: &[f64]) -> DVector<f64> {
        (self.b)(x)
    }

    pub fn c_at(&self, x: &[f64]) -> f64 {
        (self.c)(x)
    }

    pub fn with_certificate(mut self, certificate: GrowthCertificate) -> Self {
        self.certificate = Some(certificate);
        self
    }
}

fn update_worst(outcome: &mut CheckOutcome, margin: f64, x: &[f64]) {
    if margin < outcome.worst_margin {
        outcome.worst_margin = margin;
        outcome.argmin = x.to_vec();
    }
    if margin < -CHECK_TOL {
        outcome.pass = false;
    }
}

fn fresh_outcome() -> CheckOutcome {
    CheckOutcome {
        pass: true,
        worst_margin: f64::INFINITY,
        argmin: Vec::new(),
    }
}

/// Random unit vector.
fn random_direction<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

/// Sample a point in `domain` with the distance to the outer sphere graded
/// toward zero (quadratic grading), and a guard band at both boundaries.
pub fn graded_sample<R: Rng>(domain: &Domain, weight: &RadialWeight, rng: &mut R) -> Vec<f64> {
    let n = domain.dim();
    let outer = domain.outer_radius();
    let (d_lo, d_hi) = match domain {
        Domain::Ball { radius, .. } => (1e-12, (*radius - 1e-12).min(weight.d_max())),
        Domain::Annulus {
            r_inner, r_outer, ..
        } => (1e-12, (r_outer - r_inner - 1e-12).min(weight.d_max())),
    };
    let t: f64 = rng.gen_range(0.0..1.0);
    let d = (d_lo + (d_hi - d_lo) * t * t).clamp(d_lo, d_hi);
    let dir = random_direction(rng, n);
    let r = outer - d;
    domain
        .center()
        .iter()
        .zip(dir.iter())
        .map(|(c, u)| c + r * u)
        .collect()
}

/// Report of the two-sided ellipticity check (2.19-style bounds).
#[derive(Debug, Clone, Serialize)]
pub struct EllipticityReport {
    pub lower: CheckOutcome,
    pub upper: CheckOutcome,
    pub n_samples: usize,
    pub n_directions: usize,
}

impl EllipticityReport {
    pub fn pass(&self) -> bool {
        self.lower.pass && self.upper.pass
    }
}

/// Check |y|^2 <= y^T a(x) y <= Lambda(d(x)) |y|^2 over samples and
/// directions (axis vectors plus the supplied random directions).
pub fn ellipticity_check(
    coeffs: &OperatorCoefficients,
    weight: &RadialWeight,
    samples: &[Vec<f64>],
    random_directions: &[DVector<f64>],
) -> Result<EllipticityReport> {
    let n = coeffs.n;
    let mut directions: Vec<DVector<f64>> = (0..n)
        .map(|i| DVector::from_fn(n, |j, _| if i == j { 1.0 } else { 0.0 }))
        .collect();
    directions.extend(random_directions.iter().cloned());
    let mut lower = fresh_outcome();
    let mut upper = fresh_outcome();
    for x in samples {
        let a = coeffs.a_at(x)?;
        let d = coeffs.domain.growth_distance(x);
        let lam = weight.eval_clamped(d);
        for y in &directions {
            let quad = (y.transpose() * &a * y)[(0, 0)];
            let y2 = y.norm_squared();
            update_worst(&mut lower, quad - y2, x);
            update_worst(&mut upper, lam * y2 - quad, x);
        }
    }
    Ok(EllipticityReport {
        lower,
        upper,
        n_samples: samples.len(),
        n_directions: directions.len(),
    })
}

/// Sampled growth-certificate check of the coefficient bounds on a ball
/// (or annulus): ellipticity, |b_i| <= Lambda(d), c >= -Lambda(d)/d.
/// Failures are recorded in the certificate, not raised.
pub fn growth_check<R: Rng>(
    coeffs: &OperatorCoefficients,
    weight: &RadialWeight,
    n_samples: usize,
    rng: &mut R,
) -> Result<GrowthCertificate> {
    let samples: Vec<Vec<f64>> = (0..n_samples)
        .map(|_| graded_sample(&coeffs.domain, weight, rng))
        .collect();
    let dirs: Vec<DVector<f64>> = (0..100).map(|_| random_direction(rng, coeffs.n)).collect();
    let ell = ellipticity_check(coeffs, weight, &samples, &dirs)?;

    let mut b_bound = fresh_outcome();
    let mut c_bound = fresh_outcome();
    for x in &samples {
        let d = coeffs.domain.growth_distance(x);
        let lam = weight.eval_clamped(d);
        let b = coeffs.b_at(x);
        for bi in b.iter() {
            update_worst(&mut b_bound, lam - bi.abs(), x);
        }
        let c = coeffs.c_at(x);
        update_worst(&mut c_bound, c + lam / d, x);
    }
    Ok(GrowthCertificate {
        n_samples,
        ellipticity_lower: ell.lower,
        ellipticity_upper: ell.upper,
        b_bound,
        c_bound,
    })
}

/// The saturating coefficient family of the CSMP proof: a = I,
/// b_i(x) = -Lambda(d) sgn(x_i - x0_i), c(x) = -Lambda(d)/d.
pub fn adversarial_coefficients(
    n: usize,
    domain: Domain,
    weight: &RadialWeight,
) -> OperatorCoefficients {
    let w_b = weight.clone();
    let w_c = weight.clone();
    let dom_b = domain.clone();
    let dom_c = domain.clone();
    let center: Vec<f64> = domain.center().to_vec();
    OperatorCoefficients::new(
        n,
        move |_| DMatrix::identity(n, n),
        move |x| {
            let d = dom_b.growth_distance(x).max(1e-300);
            let lam = w_b.eval_clamped(d);
            DVector::from_fn(n, |i, _| -lam * sgn(x[i] - center[i]))
        },
        move |x| {
            let d = dom_c.growth_distance(x).max(1e-300);
            -w_c.eval_clamped(d) / d
        },
        domain,
    )
}

/// Named coefficient families for the CLI and the test suites.
pub fn family_by_name(
    name: &str,
    n: usize,
    domain: Domain,
    weight: &RadialWeight,
) -> Result<OperatorCoefficients> {
    match name {
        "laplacian" => Ok(OperatorCoefficients::laplacian(n, domain)),
        "adversarial" => Ok(adversarial_coefficients(n, domain, weight)),
        // c = -Lambda(d)/d^{3/2}: violates the c growth bound near the boundary.
        "c-violating" => {
            let w = weight.clone();
            let dom = domain.clone();
            Ok(OperatorCoefficients::new(
                n,
                move |_| DMatrix::identity(n, n),
                move |_| DVector::zeros(n),
                move |x| {
                    let d = dom.growth_distance(x).max(1e-300);
                    -w.eval_clamped(d) / d.powf(1.5)
                },
                domain,
            ))
        }
        other => Err(Error::Parse(format!(
            "unknown coefficient family '{other}' (expected laplacian | adversarial | c-violating)"
        ))),
    }
}

/// Supremum bounds declared for quasi-linear data on its sampling box.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct QuasilinearBounds {
    pub m_z: f64,
    pub m_eta: f64,
    pub a_z: f64,
    pub a_eta: f64,
    pub b_z: f64,
    pub b_eta: f64,
}

type NonDivFn = Arc<dyn Fn(&[f64], f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type DivFn = Arc<dyn Fn(&[f64], f64, &DVector<f64>) -> DVector<f64> + Send + Sync>;
type BFn = Arc<dyn Fn(&[f64], f64, &DVector<f64>) -> f64 + Send + Sync>;

/// Principal part of a quasi-linear operator.
#[derive(Clone)]
pub enum PrincipalPart {
    /// A_ij(x, z, eta) of the non-divergence form Q[u] = sum A_ij u_{x_i x_j} + B.
    NonDivergence(NonDivFn),
    /// A(x, z, eta) of the divergence form div A(., u, Du) + B.
    Divergence(DivFn),
}

/// Quasi-linear comparison data (A or A_ij, B, and box bounds).
#[derive(Clone)]
pub struct QuasilinearData {
    pub n: usize,
    pub principal: PrincipalPart,
    pub b: BFn,
    pub bounds: QuasilinearBounds,
}

impl QuasilinearData {
    pub fn non_divergence(
        n: usize,
        a: impl Fn(&[f64], f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
        b: impl Fn(&[f64], f64, &DVector<f64>) -> f64 + Send + Sync + 'static,
        bounds: QuasilinearBounds,
    ) -> Self {
        QuasilinearData {
            n,
            principal: PrincipalPart::NonDivergence(Arc::new(a)),
            b: Arc::new(b),
            bounds,
        }
    }

    pub fn divergence(
        n: usize,
        a: impl Fn(&[f64], f64, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static,
        b: impl Fn(&[f64], f64, &DVector<f64>) -> f64 + Send + Sync + 'static,
        bounds: QuasilinearBounds,
    ) -> Self {
        QuasilinearData {
            n,
            principal: PrincipalPart::Divergence(Arc::new(a)),
            b: Arc::new(b),
            bounds,
        }
    }

    /// The effective principal matrix at (x, z, eta): A_ij directly in the
    /// non-divergence case, the eta-Jacobian of A in the divergence case.
    pub fn a_matrix(&self, x: &[f64], z: f64, eta: &DVector<f64>) -> DMatrix<f64> {
        match &self.principal {
            PrincipalPart::NonDivergence(a) => a(x, z, eta),
            PrincipalPart::Divergence(a) => {
                let n = self.n;
                let h = 1e-6;
                let mut jac = DMatrix::zeros(n, n);
                for j in 0..n {
                    let mut ep = eta.clone();
                    let mut em = eta.clone();
                    ep[j] += h;
                    em[j] -= h;
                    let col = (a(x, z, &ep) - a(x, z, &em)) / (2.0 * h);
                    jac.set_column(j, &col);
                }
                jac
            }
        }
    }

    pub fn b_value(&self, x: &[f64], z: f64, eta: &DVector<f64>) -> f64 {
        (self.b)(x, z, eta)
    }
}

/// Result of the quasi-linear -> linear reduction.
pub struct QuasilinearReduction {
    pub coeffs: OperatorCoefficients,
    /// n^2 * sup |v_{x_k x_l}| + 1, the factor of the reported lower bound
    /// for the reduced zero-order coefficient.
    pub hessian_factor: f64,
    weight: RadialWeight,
}

impl QuasilinearReduction {
    /// The reported lower bound for the reduced c at x:
    /// -(Lambda(d)/d) (n^2 sup |v_{kl}| + 1).
    pub fn c_lower_bound(&self, x: &[f64]) -> f64 {
        let d = self.coeffs.domain.growth_distance(x).max(1e-300);
        -self.weight.eval_clamped(d) / d * self.hessian_factor
    }
}

/// Guard below which the B difference quotient in the reduced c is
/// replaced by its lower bound.
const QUOTIENT_GUARD: f64 = 1e-14;

/// Build linear coefficients from quasi-linear data and a comparison pair
/// (u, v), following the BPL reduction:
/// a~ = A(., u, Du); b~, c~ collect the Lipschitz remainders of the
/// splitting of Q[u] - Q[v], with sgn(0) = 0 and a guarded difference
/// quotient where |u - v| is below working precision.
pub fn quasilinear_reduce(
    q: &QuasilinearData,
    u: Arc<dyn ScalarField>,
    v: Arc<dyn ScalarField>,
    weight: &RadialWeight,
    domain: Domain,
) -> Result<QuasilinearReduction> {
    let n = q.n;
    // sup |v_{x_k x_l}| over the domain, sampled on a deterministic grid.
    let mut hess_sup = 0.0f64;
    {
        let center = domain.center().to_vec();
        let outer = domain.outer_radius();
        let steps = 24usize;
        let mut stack = vec![Vec::<f64>::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for partial in &stack {
                for i in 0..=steps {
                    let mut p = partial.clone();
                    p.push(-outer + 2.0 * outer * (i as f64) / (steps as f64));
                    next.push(p);
                }
            }
            stack = next;
        }
        for offset in &stack {
            let x: Vec<f64> = center.iter().zip(offset).map(|(c, o)| c + o).collect();
            if domain.contains(&x) && domain.growth_distance(&x) > 1e-9 {
                hess_sup = hess_sup.max(v.hessian(&x).amax());
            }
        }
    }
    let hessian_factor = (n * n) as f64 * hess_sup + 1.0;

    let q_a = q.clone();
    let u_a = u.clone();
    let u_b = u.clone();
    let v_b = v.clone();
    let u_c = u.clone();
    let v_c = v.clone();
    let q_c = q.clone();
    let w_b = weight.clone();
    let w_c = weight.clone();
    let dom_b = domain.clone();
    let dom_c = domain.clone();

    let coeffs = OperatorCoefficients::new(
        n,
        move |x| q_a.a_matrix(x, u_a.value(x), &u_a.gradient(x)),
        move |x| {
            let d = dom_b.growth_distance(x).max(1e-300);
            let lam = w_b.eval_clamped(d);
            let w_grad = u_b.gradient(x) - v_b.gradient(x);
            let v_hess = v_b.hessian(x);
            DVector::from_fn(n, |i, _| {
                let mut sum = sgn(w_grad[i]);
                for k in 0..n {
                    for l in 0..n {
                        sum += v_hess[(k, l)] * sgn(v_hess[(k, l)] * w_grad[i]);
                    }
                }
                lam * sum
            })
        },
        move |x| {
            let d = dom_c.growth_distance(x).max(1e-300);
            let lam = w_c.eval_clamped(d);
            let uv = u_c.value(x);
            let vv = v_c.value(x);
            let w_val = uv - vv;
            let v_hess = v_c.hessian(x);
            let mut first = 0.0;
            for k in 0..n {
                for l in 0..n {
                    first += v_hess[(k, l)] * sgn(v_hess[(k, l)] * w_val);
                }
            }
            first *= lam / d;
            let v_grad = v_c.gradient(x);
            let quotient = if w_val.abs() < QUOTIENT_GUARD {
                // The proof only needs the lower bound where u and v touch.
                -lam / d
            } else {
                (q_c.b_value(x, uv, &v_grad) - q_c.b_value(x, vv, &v_grad)) / w_val
            };
            first + quotient
        },
        domain,
    );
    Ok(QuasilinearReduction {
        coeffs,
        hessian_factor,
        weight: weight.clone(),
    })
}

/// Report of the sampled Lipschitz / lower-Lipschitz structure checks on
/// quasi-linear data.
#[derive(Debug, Clone, Serialize)]
pub struct LipschitzReport {
    pub a_condition: CheckOutcome,
    pub b_condition: CheckOutcome,
    pub n_samples: usize,
}

impl LipschitzReport {
    pub fn pass(&self) -> bool {
        self.a_condition.pass && self.b_condition.pass
    }
}

/// Sample tuples (x, z1 >= z2, eta1, eta2) from the declared box and check
/// the weighted Lipschitz bound on the principal part and the weighted
/// lower-Lipschitz bound on B.
pub fn lower_lipschitz_check<R: Rng>(
    q: &QuasilinearData,
    weight: &RadialWeight,
    domain: &Domain,
    budget: usize,
    rng: &mut R,
) -> Result<LipschitzReport> {
    let n = q.n;
    let mut a_cond = fresh_outcome();
    let mut b_cond = fresh_outcome();
    for _ in 0..budget {
        let x = graded_sample(domain, weight, rng);
        let d = domain.growth_distance(&x).max(1e-300);
        let lam = weight.eval_clamped(d);
        let m_z = q.bounds.m_z;
        let m_eta = q.bounds.m_eta;
        let za = rng.gen_range(-m_z..=m_z);
        let zb = rng.gen_range(-m_z..=m_z);
        let (z1, z2) = if za >= zb { (za, zb) } else { (zb, za) };
        let eta1 = DVector::from_fn(n, |_, _| rng.gen_range(-m_eta..=m_eta));
        let eta2 = DVector::from_fn(n, |_, _| rng.gen_range(-m_eta..=m_eta));
        let eta_l1: f64 = (&eta1 - &eta2).iter().map(|e| e.abs()).sum();
        let allowance = lam * ((z1 - z2) / d + eta_l1);

        match &q.principal {
            PrincipalPart::NonDivergence(a) => {
                let diff = (a(&x, z1, &eta1) - a(&x, z2, &eta2)).amax();
                update_worst(&mut a_cond, allowance - diff, &x);
            }
            PrincipalPart::Divergence(a) => {
                let diff = (a(&x, z1, &eta1) - a(&x, z2, &eta2)).amax();
                update_worst(&mut a_cond, allowance - diff, &x);
            }
        }
        let b_diff = q.b_value(&x, z1, &eta1) - q.b_value(&x, z2, &eta2);
        update_worst(&mut b_cond, b_diff + allowance, &x);
    }
    Ok(LipschitzReport {
        a_condition: a_cond,
        b_condition: b_cond,
        n_samples: budget,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_ball(n: usize) -> Domain {
        Domain::Ball {
            center: vec![0.0; n],
            radius: 1.0,
        }
    }

    #[test]
    fn identity_passes_ellipticity_with_zero_lower_margin() {
        let dom = unit_ball(2);
        let coeffs = OperatorCoefficients::laplacian(2, dom);
        let w = RadialWeight::constant(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let samples: Vec<Vec<f64>> = (0..200)
            .map(|_| graded_sample(&coeffs.domain, &w, &mut rng))
            .collect();
        let dirs: Vec<_> = (0..100).map(|_| random_direction(&mut rng, 2)).collect();
        let rep = ellipticity_check(&coeffs, &w, &samples, &dirs).unwrap();
        assert!(rep.pass());
        assert!(rep.lower.worst_margin.abs() < 1e-12);
    }

    #[test]
    fn oversized_diagonal_fails_upper_bound() {
        // a = diag(1, 1 + Lambda) with Lambda = 1: upper check fails at e2.
        let dom = unit_ball(2);
        let coeffs = OperatorCoefficients::new(
            2,
            |_| DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])),
            |_| DVector::zeros(2),
            |_| 0.0,
            dom,
        );
        let w = RadialWeight::constant(1.0, 1.0).unwrap();
        let samples = vec![vec![0.2, 0.1]];
        let rep = ellipticity_check(&coeffs, &w, &samples, &[]).unwrap();
        assert!(!rep.upper.pass);
        assert!(rep.lower.pass);
    }

    #[test]
    fn scaled_identity_passes_for_singular_weight() {
        // a = Lambda(d) I with Lambda = power(2, 1/2): Lambda >= 2 on d <= 1.
        let w = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        let dom = unit_ball(2);
        let wa = w.clone();
        let dom_a = dom.clone();
        let coeffs = OperatorCoefficients::new(
            2,
            move |x| {
                let d = dom_a.growth_distance(x).max(1e-300);
                wa.eval_clamped(d) * DMatrix::identity(2, 2)
            },
            |_| DVector::zeros(2),
            |_| 0.0,
            dom,
        );
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let samples: Vec<Vec<f64>> = (0..500)
            .map(|_| graded_sample(&coeffs.domain, &w, &mut rng))
            .collect();
        let rep = ellipticity_check(&coeffs, &w, &samples, &[]).unwrap();
        assert!(rep.pass(), "lower {:?}", rep.lower.worst_margin);
    }

    #[test]
    fn adversarial_family_saturates_growth_check() {
        let w = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        let coeffs = adversarial_coefficients(2, unit_ball(2), &w);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cert = growth_check(&coeffs, &w, 10_000, &mut rng).unwrap();
        assert!(cert.pass(), "{cert:?}");
        // Saturation: the b and c margins are zero up to roundoff.
        assert!(cert.b_bound.worst_margin.abs() < 1e-12);
        assert!(cert.c_bound.worst_margin.abs() < 1e-10);
    }

    #[test]
    fn adversarial_hand_values() {
        let w = RadialWeight::constant(1.0, 1.0).unwrap();
        let coeffs = adversarial_coefficients(1, unit_ball(1), &w);
        // c(x) = -1/(1-|x|)
        let x = [0.5];
        assert!((coeffs.c_at(&x) - (-2.0)).abs() < 1e-12);
        let wp = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        let cp = adversarial_coefficients(1, unit_ball(1), &wp);
        // d = 0.04: Lambda = 2/0.2 = 10, c = -10/0.04 = -250
        let x = [0.96];
        assert!((cp.c_at(&x) - (-250.0)).abs() < 1e-9);
        // |b_i| = Lambda(R/2) at d = R/2
        let x = [0.5];
        let b = cp.b_at(&x);
        assert!((b[0].abs() - wp.eval(0.5).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn violating_c_fails_growth_check() {
        let w = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        let coeffs = family_by_name("c-violating", 2, unit_ball(2), &w).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cert = growth_check(&coeffs, &w, 10_000, &mut rng).unwrap();
        assert!(!cert.c_bound.pass);
        // Margin diverges toward the boundary.
        assert!(cert.c_bound.worst_margin < -1e3);
    }

    #[test]
    fn classical_bounded_case_passes() {
        let w = RadialWeight::constant(1.0, 1.0).unwrap();
        let coeffs = OperatorCoefficients::laplacian(3, unit_ball(3));
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cert = growth_check(&coeffs, &w, 2_000, &mut rng).unwrap();
        assert!(cert.pass());
    }

    #[test]
    fn asymmetric_principal_matrix_rejected() {
        let coeffs = OperatorCoefficients::new(
            2,
            |_| DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]),
            |_| DVector::zeros(2),
            |_| 0.0,
            unit_ball(2),
        );
        assert!(coeffs.a_at(&[0.1, 0.1]).is_err());
    }

    #[test]
    fn saturating_b_passes_lower_lipschitz_with_zero_margin() {
        // B(x, z, eta) = -z Lambda(d)/d saturates the lower-Lipschitz bound.
        let w = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        let dom = unit_ball(2);
        let wq = w.clone();
        let dom_q = dom.clone();
        let q = QuasilinearData::non_divergence(
            2,
            |_, _, _| DMatrix::identity(2, 2),
            move |x, z, _| {
                let d = dom_q.growth_distance(x).max(1e-300);
                -z * wq.eval_clamped(d) / d
            },
            QuasilinearBounds {
                m_z: 1.0,
                m_eta: 1.0,
                a_z: 0.0,
                a_eta: 0.0,
                b_z: 0.0,
                b_eta: 0.0,
            },
        );
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rep = lower_lipschitz_check(&q, &w, &dom, 5_000, &mut rng).unwrap();
        assert!(rep.pass(), "{rep:?}");
        assert!(rep.b_condition.worst_margin >= -1e-10);
    }

    #[test]
    fn sgn_at_zero_is_zero() {
        assert_eq!(sgn(0.0), 0.0);
        assert_eq!(sgn(2.0), 1.0);
        assert_eq!(sgn(-3.0), -1.0);
    }
}
