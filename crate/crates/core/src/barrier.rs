//! The comparison (barrier) function on the annulus
//! B_R(O) \ closure(B_{R-eps}(O)):
//!
//!   f(r)  = r + k I2(r),   f'(r) = 1 + k I1(r),   f''(r) = k Lambda(r),
//!   v(x)  = f(R - |x|) m / f(eps),
//!
//! with k = 2n(2/R + 1) + 3 and eps small enough that I1(eps) < 1/k.

use crate::operator::OperatorCoefficients;
use crate::weight::RadialWeight;
use crate::{norm, Error, Result};
use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

/// Default tolerance for the residual verification L[v~] - Lambda >= -atol.
pub const RESIDUAL_ATOL: f64 = 1e-8;
/// Guard band kept from both annulus boundaries when sampling; Lambda and
/// c may blow up at |x| = R.
pub const BOUNDARY_GUARD: f64 = 1e-12;

/// The dimensionless barrier constant k = 2n(2/R + 1) + 3.
pub fn compute_k(n: usize, r_outer: f64) -> f64 {
    2.0 * n as f64 * (2.0 / r_outer + 1.0) + 3.0
}

/// Largest admissible annulus width: a bisection over (0, min{1, R/2})
/// for the constraint I1(eps) < (1 - margin)/k.
pub fn admissible_epsilon(n: usize, r_outer: f64, weight: &RadialWeight) -> Result<f64> {
    let k = compute_k(n, r_outer);
    let target = (1.0 - 1e-3) / k;
    let upper = 1.0f64.min(0.5 * r_outer).min(weight.d_max());
    let eps_of = |t: f64| t * upper;
    // I1 is non-decreasing, so bisect on the scaled coordinate t in (0, 1).
    let mut lo = 1e-9;
    let mut hi = 1.0 - 1e-9;
    if weight.integrate_first(eps_of(lo))? >= target {
        return Err(Error::NotFound(format!(
            "no admissible epsilon: I1({}) already exceeds (1 - margin)/k = {target}",
            eps_of(lo)
        )));
    }
    if weight.integrate_first(eps_of(hi))? < target {
        return Ok(eps_of(hi));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if weight.integrate_first(eps_of(mid))? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(eps_of(lo))
}

/// Values of the radial profile f at a point: f, f', and (for r > 0) f''.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ProfileValues {
    pub value: f64,
    pub first: f64,
    pub second: Option<f64>,
}

/// Barrier value and gradient at a point of the closed annulus.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierValues {
    pub v: f64,
    pub gradient: Vec<f64>,
}

/// The annulus comparison function of the boundary point lemma.
#[derive(Debug, Clone)]
pub struct Barrier {
    n: usize,
    r_outer: f64,
    eps: f64,
    m: f64,
    k: f64,
    weight: RadialWeight,
    f_at_eps: f64,
}

impl Barrier {
    pub fn new(n: usize, r_outer: f64, eps: f64, m: f64, weight: RadialWeight) -> Result<Self> {
        if n == 0 {
            return Err(Error::Construction("dimension must be >= 1".into()));
        }
        if !(r_outer > 0.0) {
            return Err(Error::Construction(format!(
                "outer radius must be positive, got {r_outer}"
            )));
        }
        if !(m > 0.0) {
            return Err(Error::Construction(format!(
                "inner boundary value m must be positive, got {m}"
            )));
        }
        if !(eps > 0.0 && eps < 1.0f64.min(0.5 * r_outer)) {
            return Err(Error::Construction(format!(
                "epsilon {eps} outside (0, min(1, R/2)) for R = {r_outer}"
            )));
        }
        if eps > weight.d_max() {
            return Err(Error::Construction(format!(
                "epsilon {eps} exceeds weight support d_max = {}",
                weight.d_max()
            )));
        }
        let k = compute_k(n, r_outer);
        let i1 = weight.integrate_first(eps)?;
        if !(i1 < 1.0 / k) {
            return Err(Error::Construction(format!(
                "admissibility violated: I1(eps) = {i1} >= 1/k = {}",
                1.0 / k
            )));
        }
        let f_at_eps = eps + k * weight.integrate_second(eps)?;
        // f(eps) = eps + k I2(eps) and k I2(eps) < eps k I1(eps) < eps.
        debug_assert!(f_at_eps > eps && f_at_eps < 2.0 * eps);
        Ok(Barrier {
            n,
            r_outer,
            eps,
            m,
            k,
            weight,
            f_at_eps,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn r_outer(&self) -> f64 {
        self.r_outer
    }
    pub fn r_inner(&self) -> f64 {
        self.r_outer - self.eps
    }
    pub fn eps(&self) -> f64 {
        self.eps
    }
    pub fn m(&self) -> f64 {
        self.m
    }
    pub fn k(&self) -> f64 {
        self.k
    }
    pub fn f_at_eps(&self) -> f64 {
        self.f_at_eps
    }
    pub fn weight(&self) -> &RadialWeight {
        &self.weight
    }

    /// f, f', f'' at radial coordinate r in [0, eps].
    pub fn f_eval(&self, r: f64) -> Result<ProfileValues> {
        if !(0.0..=self.eps).contains(&r) {
            return Err(Error::Domain(format!(
                "radial coordinate {r} outside [0, {}]",
                self.eps
            )));
        }
        let (value, first) = if r == 0.0 {
            (0.0, 1.0)
        } else {
            (
                r + self.k * self.weight.integrate_second(r)?,
                1.0 + self.k * self.weight.integrate_first(r)?,
            )
        };
        let second = if r > 0.0 {
            Some(self.k * self.weight.eval(r)?)
        } else {
            None
        };
        Ok(ProfileValues {
            value,
            first,
            second,
        })
    }

    /// v(x) = f(R - |x|) m / f(eps) and its gradient, for x in the closed
    /// annulus.
    pub fn eval(&self, x: &[f64]) -> Result<BarrierValues> {
        let r = norm(x);
        let tol = 1e-12 * self.r_outer.max(1.0);
        if r < self.r_inner() - tol || r > self.r_outer + tol {
            return Err(Error::Domain(format!(
                "|x| = {r} outside closed annulus [{}, {}]",
                self.r_inner(),
                self.r_outer
            )));
        }
        let rad = (self.r_outer - r).clamp(0.0, self.eps);
        let f = self.f_eval(rad)?;
        let scale = self.m / self.f_at_eps;
        let v = f.value * scale;
        let gradient = if r > 0.0 {
            x.iter().map(|xi| -f.first * scale * xi / r).collect()
        } else {
            vec![0.0; self.n]
        };
        Ok(BarrierValues { v, gradient })
    }

    /// Outward normal derivative on |x| = R: exactly -m / f(eps).
    pub fn normal_derivative(&self) -> f64 {
        -self.m / self.f_at_eps
    }

    /// L[v~] at x via the radial closed form (no discretization):
    /// (f''(R-|x|) |x| + f'(R-|x|)) / |x|^3 * sum a_ij x_i x_j
    ///   - f'(R-|x|)/|x| * sum (a_ii + b_i x_i) + f(R-|x|) c(x).
    pub fn operator_value(&self, coeffs: &OperatorCoefficients, x: &[f64]) -> Result<f64> {
        let r = norm(x);
        if r <= self.r_inner() || r >= self.r_outer {
            return Err(Error::Domain(format!(
                "|x| = {r} outside open annulus ({}, {})",
                self.r_inner(),
                self.r_outer
            )));
        }
        let f = self.f_eval(self.r_outer - r)?;
        let f2 = f.second.expect("interior point has r > 0");
        let a = coeffs.a_at(x)?;
        let b = coeffs.b_at(x);
        let c = coeffs.c_at(x);
        let xv = DVector::from_column_slice(x);
        let xax = (xv.transpose() * &a * &xv)[(0, 0)];
        let trace = a.trace();
        let bx = b.dot(&xv);
        Ok((f2 * r + f.first) / (r * r * r) * xax - f.first / r * (trace + bx) + f.value * c)
    }
}

/// JSON report of a residual verification run.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub min_residual: f64,
    pub argmin_point: Vec<f64>,
    pub pass: bool,
    pub n_samples: usize,
    /// Set when the coefficients carry no growth certificate; the PASS
    /// then lacks the usual precondition evidence.
    pub certificate_missing: bool,
}

/// Evaluate min over samples of L[v~](x) - Lambda(R - |x|); PASS iff the
/// minimum clears -atol. Samples are reduced in parallel with a
/// deterministic (value, index) minimum.
pub fn residual_check(
    barrier: &Barrier,
    coeffs: &OperatorCoefficients,
    samples: &[Vec<f64>],
    atol: f64,
) -> Result<ResidualReport> {
    if samples.is_empty() {
        return Err(Error::Domain("residual check needs samples".into()));
    }
    let residuals: Vec<f64> = samples
        .par_iter()
        .map(|x| {
            let lv = barrier.operator_value(coeffs, x)?;
            let d = barrier.r_outer() - norm(x);
            Ok(lv - barrier.weight().eval_clamped(d))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (idx, &min_residual) = residuals
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.partial_cmp(b).unwrap().then(i.cmp(j)))
        .unwrap();
    Ok(ResidualReport {
        min_residual,
        argmin_point: samples[idx].clone(),
        pass: min_residual >= -atol,
        n_samples: samples.len(),
        certificate_missing: coeffs.certificate.is_none(),
    })
}

/// Sample points of the open annulus with grading toward the outer
/// boundary and the guard band applied.
pub fn annulus_samples<R: rand::Rng>(
    barrier: &Barrier,
    count: usize,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    let n = barrier.dim();
    let eps = barrier.eps();
    (0..count)
        .map(|_| {
            let t: f64 = rng.gen_range(0.0..1.0);
            let d = (BOUNDARY_GUARD + (eps - 2.0 * BOUNDARY_GUARD) * t * t)
                .clamp(BOUNDARY_GUARD, eps - BOUNDARY_GUARD);
            let r = barrier.r_outer() - d;
            loop {
                let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0f64));
                let norm = v.norm();
                if norm > 1e-3 {
                    return v.iter().map(|u| u / norm * r).collect();
                }
            }
        })
        .collect()
}
