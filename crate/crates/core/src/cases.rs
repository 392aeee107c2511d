//! Executable counter-example catalog: each case carries a comparison
//! pair (u, v), a quasi-linear operator, an expected verdict for every
//! named check, and the machinery to confirm that exactly the advertised
//! hypothesis breaks while the theorem conclusion is violated.

use crate::fdlab::hopf_quotient;
use crate::fields::{fd_hessian, AnalyticField, ScalarField};
use crate::operator::{Domain, QuasilinearBounds, QuasilinearData};
use crate::weight::RadialWeight;
use crate::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::Serialize;
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseId {
    Ex2_9,
    Ex2_12,
    Ex3_2,
    Ex3_4,
}

impl CaseId {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "ex2_9" => Ok(CaseId::Ex2_9),
            "ex2_12" => Ok(CaseId::Ex2_12),
            "ex3_2" => Ok(CaseId::Ex3_2),
            "ex3_4" => Ok(CaseId::Ex3_4),
            other => Err(Error::Parse(format!(
                "unknown case '{other}' (expected ex2_9 | ex2_12 | ex3_2 | ex3_4)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CaseId::Ex2_9 => "ex2_9",
            CaseId::Ex2_12 => "ex2_12",
            CaseId::Ex3_2 => "ex3_2",
            CaseId::Ex3_4 => "ex3_4",
        }
    }

    pub fn all() -> [CaseId; 4] {
        [CaseId::Ex2_9, CaseId::Ex2_12, CaseId::Ex3_2, CaseId::Ex3_4]
    }
}

type TraceFn = Arc<dyn Fn(&[f64], f64, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type BFn = Arc<dyn Fn(&[f64], f64, &DVector<f64>) -> f64 + Send + Sync>;

/// One fully concrete counter-example.
pub struct CaseStudy {
    pub id: CaseId,
    pub n: usize,
    pub domain: Domain,
    pub u: AnalyticField,
    pub v: AnalyticField,
    pub x_b: Vec<f64>,
    /// Outward unit normal at x_b.
    pub nu: Vec<f64>,
    /// The growth weight attached to the case, where one applies.
    pub weight: Option<RadialWeight>,
    pub quasilinear: QuasilinearData,
    /// Analytic trace-form principal matrix; coincides with the
    /// divergence-form eta-Jacobian for the shipped cases (their A has no
    /// explicit x or z dependence), but avoids its finite-difference
    /// noise in the Q-residual checks.
    a_trace: TraceFn,
    b_fn: BFn,
    /// Smallest boundary distance used when sampling the open domain.
    sample_d_min: f64,
    pub expected: BTreeMap<String, bool>,
}

/// exp(-1/(1-s)) for s < 1, extended by zero; the infinite-order-zero
/// witness, with derivatives in s.
fn bump(s: f64) -> f64 {
    if s < 1.0 {
        (-1.0 / (1.0 - s)).exp()
    } else {
        0.0
    }
}

fn bump_ds(s: f64) -> f64 {
    if s < 1.0 {
        let t = 1.0 - s;
        -bump(s) / (t * t)
    } else {
        0.0
    }
}

fn bump_d2s(s: f64) -> f64 {
    if s < 1.0 {
        let t = 1.0 - s;
        bump(s) * (2.0 * s - 1.0) / (t * t * t * t)
    } else {
        0.0
    }
}

/// Laplacian of the bump composed with |x|^2 in dimension n.
fn bump_sum_vii(x: &[f64]) -> f64 {
    let s: f64 = x.iter().map(|v| v * v).sum();
    2.0 * x.len() as f64 * bump_ds(s) + 4.0 * s * bump_d2s(s)
}

fn expected_map(pairs: &[(&str, bool)]) -> BTreeMap<String, bool> {
    pairs.iter().map(|&(k, v)| (k.to_string(), v)).collect()
}

impl CaseStudy {
    pub fn instantiate(id: CaseId) -> Self {
        match id {
            CaseId::Ex2_9 => {
                // u = 0, v = (1 - |x|^2)^2 on the unit disc; B(x, z) scaled
                // so that v solves Q[v] = 0 exactly.
                let v = AnalyticField::radial_sq(
                    2,
                    |s| (1.0 - s) * (1.0 - s),
                    |s| -2.0 * (1.0 - s),
                    |_| 2.0,
                );
                let b = |x: &[f64], z: f64, _eta: &DVector<f64>| -> f64 {
                    let s: f64 = x.iter().map(|v| v * v).sum();
                    let sum_vii = 16.0 * s - 8.0;
                    let vx = (1.0 - s) * (1.0 - s);
                    -z * sum_vii / vx
                };
                let bounds = QuasilinearBounds {
                    m_z: 8.0,
                    m_eta: 8.0,
                    a_z: 0.0,
                    a_eta: 0.0,
                    b_z: 8.0,
                    b_eta: 0.0,
                };
                CaseStudy {
                    id,
                    n: 2,
                    domain: Domain::Ball {
                        center: vec![0.0, 0.0],
                        radius: 1.0,
                    },
                    u: AnalyticField::zero(2),
                    v,
                    x_b: vec![1.0, 0.0],
                    nu: vec![1.0, 0.0],
                    weight: None,
                    quasilinear: QuasilinearData::non_divergence(
                        2,
                        |_x, _z, _eta| DMatrix::identity(2, 2),
                        b,
                        bounds,
                    ),
                    a_trace: Arc::new(|_x, _z, _eta| DMatrix::identity(2, 2)),
                    b_fn: Arc::new(b),
                    sample_d_min: 1e-6,
                    expected: expected_map(&[
                        ("elliptic_wrt_u", true),
                        ("hessian_bounded", true),
                        ("lower_lipschitz_integrable", false),
                        ("normal_derivatives_equal", true),
                        ("q_u_nonneg", true),
                        ("q_v_nonpos", true),
                        ("touch_at_xb", true),
                        ("u_below_v", true),
                    ]),
                }
            }
            CaseId::Ex2_12 => {
                // u = x^{3/2}, v = 2 x^{3/2} on (0,1);
                // A(x, z) = 1 + (2/x^{3/2}) (3/2 x^{3/2} - z), B = 0.
                let alpha = 0.5;
                let u = AnalyticField::new(
                    1,
                    move |x: &[f64]| x[0].powf(1.0 + alpha),
                    move |x: &[f64]| DVector::from_vec(vec![1.5 * x[0].powf(alpha)]),
                    move |x: &[f64]| {
                        DMatrix::from_vec(1, 1, vec![0.75 * x[0].powf(alpha - 1.0)])
                    },
                );
                let v = AnalyticField::new(
                    1,
                    move |x: &[f64]| 2.0 * x[0].powf(1.0 + alpha),
                    move |x: &[f64]| DVector::from_vec(vec![3.0 * x[0].powf(alpha)]),
                    move |x: &[f64]| {
                        DMatrix::from_vec(1, 1, vec![1.5 * x[0].powf(alpha - 1.0)])
                    },
                );
                let a = move |x: &[f64], z: f64, _eta: &DVector<f64>| -> DMatrix<f64> {
                    let p = x[0].powf(1.0 + alpha);
                    DMatrix::from_vec(1, 1, vec![1.0 + (2.0 / p) * (1.5 * p - z)])
                };
                let b = |_x: &[f64], _z: f64, _eta: &DVector<f64>| 0.0;
                let bounds = QuasilinearBounds {
                    m_z: 2.0,
                    m_eta: 3.0,
                    a_z: 0.0,
                    a_eta: 0.0,
                    b_z: 0.0,
                    b_eta: 0.0,
                };
                CaseStudy {
                    id,
                    n: 1,
                    domain: Domain::Ball {
                        center: vec![0.5],
                        radius: 0.5,
                    },
                    u,
                    v,
                    x_b: vec![0.0],
                    nu: vec![-1.0],
                    weight: Some(
                        RadialWeight::power(2.0, alpha, 0.5)
                            .expect("case weight parameters are valid"),
                    ),
                    quasilinear: QuasilinearData::non_divergence(1, a, b, bounds),
                    a_trace: Arc::new(a),
                    b_fn: Arc::new(b),
                    sample_d_min: 1e-8,
                    expected: expected_map(&[
                        ("elliptic_wrt_u", true),
                        ("hessian_bounded", false),
                        ("lower_lipschitz_integrable", true),
                        ("normal_derivatives_equal", true),
                        ("q_u_nonneg", true),
                        ("q_v_nonpos", true),
                        ("touch_at_xb", true),
                        ("u_below_v", true),
                    ]),
                }
            }
            CaseId::Ex3_2 | CaseId::Ex3_4 => {
                // u = 0, v = exp(-1/(1-|x|^2)); divergence form A(eta) = eta
                // with the same self-cancelling B as ex2_9. ex3_2 lives on
                // the unit disc, ex3_4 on the annulus 0.9 < |x| < 1.
                let v = AnalyticField::radial_sq(2, bump, bump_ds, bump_d2s);
                let b = |x: &[f64], z: f64, _eta: &DVector<f64>| -> f64 {
                    let s: f64 = x.iter().map(|v| v * v).sum();
                    -z * bump_sum_vii(x) / bump(s)
                };
                let bounds = QuasilinearBounds {
                    m_z: 1.0,
                    m_eta: 2.0,
                    a_z: 0.0,
                    a_eta: 1.0,
                    b_z: 8.0,
                    b_eta: 0.0,
                };
                let (domain, expected) = if id == CaseId::Ex3_2 {
                    (
                        Domain::Ball {
                            center: vec![0.0, 0.0],
                            radius: 1.0,
                        },
                        expected_map(&[
                            ("elliptic_wrt_u", true),
                            ("hessian_bounded", true),
                            ("lower_lipschitz_integrable", false),
                            ("q_u_nonneg", true),
                            ("q_v_nonpos", true),
                            ("touch_at_xb", true),
                            ("u_below_v", true),
                            ("zero_order_infinite", true),
                        ]),
                    )
                } else {
                    (
                        Domain::Annulus {
                            center: vec![0.0, 0.0],
                            r_inner: 0.9,
                            r_outer: 1.0,
                        },
                        expected_map(&[
                            ("b_nonincreasing_in_z", true),
                            ("elliptic_wrt_u", true),
                            ("q_u_nonneg", true),
                            ("q_v_nonpos", true),
                            ("regularity_trade", false),
                            ("sum_v_ii_positive", true),
                            ("touch_at_xb", true),
                            ("u_below_v", true),
                            ("zero_order_infinite", true),
                        ]),
                    )
                };
                CaseStudy {
                    id,
                    n: 2,
                    domain,
                    u: AnalyticField::zero(2),
                    v,
                    x_b: vec![1.0, 0.0],
                    nu: vec![1.0, 0.0],
                    weight: None,
                    quasilinear: QuasilinearData::divergence(
                        2,
                        |_x, _z, eta: &DVector<f64>| eta.clone(),
                        b,
                        bounds,
                    ),
                    a_trace: Arc::new(|_x, _z, _eta| DMatrix::identity(2, 2)),
                    b_fn: Arc::new(b),
                    sample_d_min: 2e-3,
                    expected,
                }
            }
        }
    }

    /// Q[w](x) in trace form with the analytic principal matrix.
    pub fn q_apply(&self, w: &AnalyticField, x: &[f64]) -> f64 {
        let z = w.value(x);
        let eta = w.gradient(x);
        let hess = w.hessian(x);
        let a = (self.a_trace)(x, z, &eta);
        let mut acc = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                acc += a[(i, j)] * hess[(i, j)];
            }
        }
        acc + (self.b_fn)(x, z, &eta)
    }

    /// Interior samples: half spread across the domain, half graded
    /// toward the outer boundary where the singularities sit.
    fn interior_samples<R: Rng>(&self, budget: usize, rng: &mut R) -> Vec<Vec<f64>> {
        let center = self.domain.center().to_vec();
        let r_outer = self.domain.outer_radius();
        let r_inner = match &self.domain {
            Domain::Annulus { r_inner, .. } => *r_inner,
            Domain::Ball { .. } => 0.0,
        };
        let span = r_outer - r_inner;
        (0..budget.max(8))
            .map(|i| {
                let d = if i % 2 == 0 {
                    let t: f64 = rng.gen_range(0.0..1.0);
                    (self.sample_d_min + t * span * 0.999).min(span - self.sample_d_min)
                } else {
                    // Cubic grading pushes d toward the singular boundary.
                    let t: f64 = rng.gen_range(0.0..1.0);
                    (self.sample_d_min + t * t * t * span * 0.5).min(span * 0.5)
                };
                let rad = r_outer - d;
                let dir: Vec<f64> = if self.n == 1 {
                    vec![1.0]
                } else {
                    let mut dir: Vec<f64> =
                        (0..self.n).map(|_| rng.gen_range(-1.0..1.0f64)).collect();
                    let nrm = crate::norm(&dir).max(1e-9);
                    dir.iter_mut().for_each(|c| *c /= nrm);
                    dir
                };
                center
                    .iter()
                    .zip(&dir)
                    .map(|(c, u)| c + rad * u)
                    .collect()
            })
            .collect()
    }

    /// Points stepping toward x_b along the inward normal.
    fn approach_point(&self, d: f64) -> Vec<f64> {
        self.x_b
            .iter()
            .zip(&self.nu)
            .map(|(xb, n)| xb - d * n)
            .collect()
    }
}

/// One named verification check.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub expected: bool,
    pub observed: bool,
    pub margin: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseReport {
    pub id: String,
    pub checks: Vec<Check>,
    pub all_match: bool,
}

const Q_RESIDUAL_TOL: f64 = 1e-10;
/// Growth-factor threshold separating a bounded Hessian from a diverging
/// one across the dyadic approach sequence.
const HESSIAN_GROWTH_LIMIT: f64 = 10.0;
/// Lower-Lipschitz ratios blowing up like d^{-p} force Lambda(d) >~
/// d^{1-p}; integrability near zero requires p < 2.
const INTEGRABLE_SLOPE_LIMIT: f64 = 1.9;

/// Estimate the one-sided normal derivative of w at x_b: zero when the
/// quotients decay with a positive log-log slope, otherwise the
/// Richardson-extrapolated quotient.
fn normal_derivative_limit(
    w: &AnalyticField,
    x_b: &[f64],
    nu: &[f64],
    hs: &[f64],
) -> Result<f64> {
    let rep = hopf_quotient(&|y: &[f64]| Ok(w.value(y)), x_b, nu, hs)?;
    if rep.quotients.iter().all(|&(_, q)| q.abs() <= 1e-13) {
        return Ok(0.0);
    }
    match rep.log_slope {
        Some(p) if p > 0.1 => Ok(0.0),
        _ => Ok(rep.extrapolated),
    }
}

fn lsq_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// Run every named check of the case against its expected map.
pub fn verify<R: Rng>(case: &CaseStudy, budget: usize, rng: &mut R) -> Result<CaseReport> {
    let samples = case.interior_samples(budget, rng);
    let mut results: BTreeMap<String, (bool, f64)> = BTreeMap::new();

    // Comparison pair invariants.
    let touch = (case.u.value(&case.x_b) - case.v.value(&case.x_b)).abs();
    results.insert("touch_at_xb".into(), (touch <= 1e-12, -touch));
    let gap = samples
        .iter()
        .map(|x| case.v.value(x) - case.u.value(x))
        .fold(f64::INFINITY, f64::min);
    results.insert("u_below_v".into(), (gap > 0.0, gap));

    // Differential inequalities at the samples.
    let qu_min = samples
        .iter()
        .map(|x| case.q_apply(&case.u, x))
        .fold(f64::INFINITY, f64::min);
    results.insert("q_u_nonneg".into(), (qu_min >= -Q_RESIDUAL_TOL, qu_min));
    let qv_max = samples
        .iter()
        .map(|x| case.q_apply(&case.v, x))
        .fold(f64::NEG_INFINITY, f64::max);
    results.insert("q_v_nonpos".into(), (qv_max <= Q_RESIDUAL_TOL, -qv_max));

    // Ellipticity with respect to u.
    let ell_min = samples
        .iter()
        .map(|x| {
            let z = case.u.value(x);
            let eta = case.u.gradient(x);
            let a = case.quasilinear.a_matrix(x, z, &eta);
            a.symmetric_eigenvalues().min()
        })
        .fold(f64::INFINITY, f64::min);
    results.insert("elliptic_wrt_u".into(), (ell_min > 0.0, ell_min));

    // Approach sequences toward x_b for the hypothesis discriminators.
    let span = match &case.domain {
        Domain::Annulus {
            r_inner, r_outer, ..
        } => r_outer - r_inner,
        Domain::Ball { radius, .. } => *radius,
    };
    let d0 = (0.4 * span).min(0.1);
    let dyadic: Vec<f64> = (0..13).map(|j| d0 * 0.5f64.powi(j)).collect();
    let geometric: Vec<f64> = (0..16).map(|j| d0 * 0.8f64.powi(j)).collect();

    if case.expected.contains_key("hessian_bounded") {
        let sup_h = |d: f64| {
            case.v.hessian(&case.approach_point(d)).amax()
        };
        let coarse = sup_h(dyadic[0]);
        let fine = sup_h(*dyadic.last().unwrap());
        let growth = fine / coarse.max(1e-300);
        results.insert(
            "hessian_bounded".into(),
            (growth < HESSIAN_GROWTH_LIMIT, HESSIAN_GROWTH_LIMIT - growth),
        );
    }

    if case.expected.contains_key("lower_lipschitz_integrable") {
        // Ratio (B(x, z2) - B(x, z1)) / (z1 - z2) for z1 > z2 probes the
        // lower Lipschitz constant; fit its blow-up exponent in d.
        let pts: Vec<(f64, f64)> = geometric
            .iter()
            .filter_map(|&d| {
                let x = case.approach_point(d);
                let eta = DVector::zeros(case.n);
                let ratio = ((case.b_fn)(&x, 0.0, &eta) - (case.b_fn)(&x, 1.0, &eta)).abs();
                if ratio > 1e-13 {
                    Some((d.ln(), ratio.ln()))
                } else {
                    None
                }
            })
            .collect();
        let (ok, margin) = if pts.len() < 5 {
            // A vanishing ratio is trivially integrable.
            (true, INTEGRABLE_SLOPE_LIMIT)
        } else {
            let p = -lsq_slope(&pts);
            (p < INTEGRABLE_SLOPE_LIMIT, INTEGRABLE_SLOPE_LIMIT - p)
        };
        results.insert("lower_lipschitz_integrable".into(), (ok, margin));
    }

    if case.expected.contains_key("sum_v_ii_positive") {
        let min_sum = samples
            .iter()
            .map(|x| bump_sum_vii(x))
            .fold(f64::INFINITY, f64::min);
        results.insert("sum_v_ii_positive".into(), (min_sum > 0.0, min_sum));
    }

    if case.expected.contains_key("b_nonincreasing_in_z") {
        let worst = samples
            .iter()
            .map(|x| {
                let eta = DVector::zeros(case.n);
                (case.b_fn)(x, 1.0, &eta) - (case.b_fn)(x, 0.0, &eta)
            })
            .fold(f64::NEG_INFINITY, f64::max);
        results.insert("b_nonincreasing_in_z".into(), (worst <= 1e-12, -worst));
    }

    // Conclusion checks.
    if case.expected.contains_key("normal_derivatives_equal") {
        let hs: Vec<f64> = (0..6).map(|k| 0.02 * 0.5f64.powi(k)).collect();
        let du = normal_derivative_limit(&case.u, &case.x_b, &case.nu, &hs)?;
        let dv = normal_derivative_limit(&case.v, &case.x_b, &case.nu, &hs)?;
        let diff = (du - dv).abs();
        results.insert("normal_derivatives_equal".into(), (diff <= 1e-8, -diff));
    }

    let zero_order = if case.expected.contains_key("zero_order_infinite")
        || case.expected.contains_key("regularity_trade")
    {
        let distances: Vec<f64> = (0..16).map(|j| d0 * 0.8f64.powi(j)).collect();
        let w = |d: f64| {
            let x = case.approach_point(d);
            case.v.value(&x) - case.u.value(&x)
        };
        Some(zero_order_estimate(&w, &distances)?)
    } else {
        None
    };

    if case.expected.contains_key("zero_order_infinite") {
        let rep = zero_order.as_ref().unwrap();
        let infinite = matches!(rep.order, ZeroOrder::NumericallyInfinite);
        let margin = match rep.order {
            ZeroOrder::NumericallyInfinite => rep.windows.last().copied().unwrap_or(0.0),
            ZeroOrder::Finite(p) => p,
        };
        results.insert("zero_order_infinite".into(), (infinite, margin));
    }

    if case.expected.contains_key("regularity_trade") {
        // The relaxed-regularity hypotheses hold, yet the finite-order
        // conclusion still fails: the trade does not rescue the theorem.
        let rescued = matches!(
            zero_order.as_ref().unwrap().order,
            ZeroOrder::Finite(_)
        );
        results.insert("regularity_trade".into(), (rescued, 0.0));
    }

    // Assemble the report in name order and compare with expectations.
    let mut checks = Vec::new();
    for (name, &expected) in &case.expected {
        let &(observed, margin) = results.get(name).ok_or_else(|| {
            Error::Construction(format!("check '{name}' was never computed"))
        })?;
        checks.push(Check {
            name: name.clone(),
            expected,
            observed,
            margin,
        });
    }
    let all_match = checks.iter().all(|c| c.expected == c.observed);
    let report = CaseReport {
        id: case.id.name().to_string(),
        checks,
        all_match,
    };
    if !all_match {
        let bad: Vec<&str> = report
            .checks
            .iter()
            .filter(|c| c.expected != c.observed)
            .map(|c| c.name.as_str())
            .collect();
        return Err(Error::Mismatch(format!(
            "case {}: checks {:?} contradict expectations",
            report.id, bad
        )));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub enum ZeroOrder {
    Finite(f64),
    NumericallyInfinite,
}

#[derive(Debug, Clone, Serialize)]
pub struct ZeroOrderReport {
    /// Sliding-window slopes, coarsest window first.
    pub windows: Vec<f64>,
    pub order: ZeroOrder,
}

const INFINITE_ORDER_SLOPE: f64 = 20.0;
const ZERO_ORDER_WINDOW: usize = 5;

/// Fit the vanishing order of w along a decreasing geometric distance
/// sequence: the slope of log w against log d over 5-point sliding
/// windows. Slopes that exceed 20 and keep growing toward the boundary
/// are reported as a numerically infinite order.
pub fn zero_order_estimate(
    w: &dyn Fn(f64) -> f64,
    distances: &[f64],
) -> Result<ZeroOrderReport> {
    if distances.len() < ZERO_ORDER_WINDOW {
        return Err(Error::Domain(format!(
            "need at least {ZERO_ORDER_WINDOW} distances"
        )));
    }
    if distances.windows(2).any(|p| p[1] >= p[0]) {
        return Err(Error::Domain("distances must be strictly decreasing".into()));
    }
    let logs: Vec<(f64, f64)> = distances
        .iter()
        .map(|&d| {
            let val = w(d);
            if val <= 0.0 {
                return Err(Error::Domain(format!(
                    "w({d}) = {val} is not positive; the comparison gap must stay positive"
                )));
            }
            Ok((d.ln(), val.ln()))
        })
        .collect::<Result<_>>()?;
    let windows: Vec<f64> = logs
        .windows(ZERO_ORDER_WINDOW)
        .map(lsq_slope)
        .collect();
    let finest = *windows.last().unwrap();
    let monotone = windows.windows(2).all(|p| p[1] >= p[0] - 1e-9);
    let order = if finest > INFINITE_ORDER_SLOPE && monotone {
        ZeroOrder::NumericallyInfinite
    } else {
        ZeroOrder::Finite(finest)
    };
    Ok(ZeroOrderReport { windows, order })
}

#[derive(Debug, Clone, Serialize)]
pub struct RemarkBoundReport {
    /// Supremum of |v|, |v_{x_i}|, |v_{x_i x_j}| over the closed domain.
    pub m_sup: f64,
    /// (collar width R_b - R, M_K) rows.
    pub rows: Vec<(f64, f64)>,
    pub fitted_exponent: f64,
}

/// Track the blow-up of the local lower Lipschitz constant
/// M_K = M n / inf_{B_R} v over shrinking collars for the polynomial
/// witness: the fitted exponent ~ -2 shows Lambda would need a
/// non-integrable 1/d growth.
pub fn remark_2_11_bound(case: &CaseStudy, r_sequence: &[f64]) -> Result<RemarkBoundReport> {
    if case.id != CaseId::Ex2_9 {
        return Err(Error::Domain(
            "the collar bound is defined for the ex2_9 witness only".into(),
        ));
    }
    let r_b = case.domain.outer_radius();
    if r_sequence.iter().any(|&r| !(r > 0.0 && r < r_b)) {
        return Err(Error::Domain(format!(
            "collar radii must lie in (0, {r_b})"
        )));
    }
    // M by dense polar sampling of the closed disc.
    let center = case.domain.center().to_vec();
    let n_rad = 400;
    let n_ang = 64;
    let mut m_sup = 0.0f64;
    for i in 0..=n_rad {
        let rad = r_b * i as f64 / n_rad as f64;
        for j in 0..n_ang {
            let th = 2.0 * std::f64::consts::PI * j as f64 / n_ang as f64;
            let x = vec![center[0] + rad * th.cos(), center[1] + rad * th.sin()];
            m_sup = m_sup
                .max(case.v.value(&x).abs())
                .max(case.v.gradient(&x).amax())
                .max(case.v.hessian(&x).amax());
        }
    }
    let mut rows = Vec::with_capacity(r_sequence.len());
    for &r in r_sequence {
        let mut inf_v = f64::INFINITY;
        for i in 0..=n_rad {
            let rad = r * i as f64 / n_rad as f64;
            for j in 0..n_ang {
                let th = 2.0 * std::f64::consts::PI * j as f64 / n_ang as f64;
                let x = vec![center[0] + rad * th.cos(), center[1] + rad * th.sin()];
                inf_v = inf_v.min(case.v.value(&x));
            }
        }
        rows.push((r_b - r, m_sup * case.n as f64 / inf_v));
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|&(d, mk)| (d.ln(), mk.ln())).collect();
    Ok(RemarkBoundReport {
        m_sup,
        rows,
        fitted_exponent: lsq_slope(&pts),
    })
}

/// Relative agreement of the analytic Hessian with Richardson-refined
/// central differences at x.
pub fn hessian_fd_agreement(field: &AnalyticField, x: &[f64], h: f64) -> f64 {
    let f = |y: &[f64]| field.value(y);
    let coarse = fd_hessian(&f, x, h);
    let fine = fd_hessian(&f, x, h / 2.0);
    // Eliminate the h^2 term of the central stencil.
    let refined = (4.0 * fine - coarse) / 3.0;
    let exact = field.hessian(x);
    (&exact - &refined).amax() / exact.amax().max(1e-300)
}
