//! Twice-differentiable scalar fields with analytic derivatives.

use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// A scalar field with value, gradient and Hessian available pointwise.
pub trait ScalarField: Send + Sync {
    fn value(&self, x: &[f64]) -> f64;
    fn gradient(&self, x: &[f64]) -> DVector<f64>;
    fn hessian(&self, x: &[f64]) -> DMatrix<f64>;
}

/// Field assembled from closures.
#[derive(Clone)]
pub struct AnalyticField {
    pub n: usize,
    value: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
    gradient: Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>,
    hessian: Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>,
}

impl AnalyticField {
    pub fn new(
        n: usize,
        value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        gradient: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        hessian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        AnalyticField {
            n,
            value: Arc::new(value),
            gradient: Arc::new(gradient),
            hessian: Arc::new(hessian),
        }
    }

    /// The zero field in dimension `n`.
    pub fn zero(n: usize) -> Self {
        AnalyticField::new(
            n,
            |_| 0.0,
            move |x| DVector::zeros(x.len()),
            move |x| DMatrix::zeros(x.len(), x.len()),
        )
    }

    /// Radial field g(|x|^2) given g, g' and g'' as functions of s = |x|^2:
    /// grad = 2 g'(s) x, hess_ij = 2 g'(s) delta_ij + 4 g''(s) x_i x_j.
    pub fn radial_sq(
        n: usize,
        g: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        dg: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
        d2g: impl Fn(f64) -> f64 + Send + Sync + Clone + 'static,
    ) -> Self {
        let sq = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
        let g1 = g.clone();
        let dg1 = dg.clone();
        let dg2 = dg.clone();
        AnalyticField::new(
            n,
            move |x| g1(sq(x)),
            move |x| {
                let s = sq(x);
                let c = 2.0 * dg1(s);
                DVector::from_iterator(x.len(), x.iter().map(|&xi| c * xi))
            },
            move |x| {
                let s = sq(x);
                let c1 = 2.0 * dg2(s);
                let c2 = 4.0 * d2g(s);
                let n = x.len();
                DMatrix::from_fn(n, n, |i, j| {
                    let diag = if i == j { c1 } else { 0.0 };
                    diag + c2 * x[i] * x[j]
                })
            },
        )
    }
}

impl ScalarField for AnalyticField {
    fn value(&self, x: &[f64]) -> f64 {
        (self.value)(x)
    }
    fn gradient(&self, x: &[f64]) -> DVector<f64> {
        (self.gradient)(x)
    }
    fn hessian(&self, x: &[f64]) -> DMatrix<f64> {
        (self.hessian)(x)
    }
}

/// Central finite-difference gradient of a pointwise function, used as an
/// independent cross-check of analytic derivatives.
pub fn fd_gradient(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DVector<f64> {
    let n = x.len();
    DVector::from_fn(n, |i, _| {
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[i] += h;
        xm[i] -= h;
        (f(&xp) - f(&xm)) / (2.0 * h)
    })
}

/// Central finite-difference Hessian of a pointwise function.
pub fn fd_hessian(f: &dyn Fn(&[f64]) -> f64, x: &[f64], h: f64) -> DMatrix<f64> {
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            let mut xp = x.to_vec();
            let mut xm = x.to_vec();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - 2.0 * f(x) + f(&xm)) / (h * h)
        } else {
            let mut xpp = x.to_vec();
            let mut xpm = x.to_vec();
            let mut xmp = x.to_vec();
            let mut xmm = x.to_vec();
            xpp[i] += h;
            xpp[j] += h;
            xpm[i] += h;
            xpm[j] -= h;
            xmp[i] -= h;
            xmp[j] += h;
            xmm[i] -= h;
            xmm[j] -= h;
            (f(&xpp) - f(&xpm) - f(&xmp) + f(&xmm)) / (4.0 * h * h)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radial_sq_derivatives_match_fd() {
        // v = (1 - s)^2, s = |x|^2
        let v = AnalyticField::radial_sq(
            2,
            |s| (1.0 - s) * (1.0 - s),
            |s| -2.0 * (1.0 - s),
            |_| 2.0,
        );
        let x = [0.3, -0.4];
        let g = v.gradient(&x);
        let g_fd = fd_gradient(&|y: &[f64]| v.value(y), &x, 1e-6);
        assert!((g - g_fd).amax() < 1e-8);
        let h = v.hessian(&x);
        let h_fd = fd_hessian(&|y: &[f64]| v.value(y), &x, 1e-4);
        assert!((h - h_fd).amax() < 1e-6);
    }
}
