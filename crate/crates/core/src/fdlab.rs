//! Finite-difference laboratory: small grids, discrete operator
//! application, Dirichlet solves, and the maximum-principle / Hopf
//! quotient checks run against them.

use crate::operator::OperatorCoefficients;
use crate::{dist, Error, Result};
use rayon::prelude::*;
use serde::Serialize;

/// Node set for one of the supported geometries. Radial spacing on the
/// annulus is graded with ratio q toward the outer boundary, where the
/// weight singularity lives.
#[derive(Debug, Clone, Serialize)]
pub enum Grid {
    Interval {
        nodes: Vec<f64>,
    },
    Rectangle {
        xs: Vec<f64>,
        ys: Vec<f64>,
    },
    PolarAnnulus {
        center: Vec<f64>,
        radii: Vec<f64>,
        n_theta: usize,
    },
}

/// Spacings of a graded partition of [a, b] into n cells with successive
/// ratio q (q = 1 gives a uniform mesh).
fn graded_nodes(a: f64, b: f64, n_cells: usize, q: f64) -> Vec<f64> {
    let total: f64 = (0..n_cells).map(|j| q.powi(j as i32)).sum();
    let h0 = (b - a) / total;
    let mut nodes = Vec::with_capacity(n_cells + 1);
    let mut x = a;
    nodes.push(x);
    for j in 0..n_cells {
        x += h0 * q.powi(j as i32);
        nodes.push(x);
    }
    // Pin the endpoint against accumulation error.
    *nodes.last_mut().unwrap() = b;
    nodes
}

impl Grid {
    pub fn interval(a: f64, b: f64, n_cells: usize) -> Result<Self> {
        Grid::interval_graded(a, b, n_cells, 1.0)
    }

    pub fn interval_graded(a: f64, b: f64, n_cells: usize, q: f64) -> Result<Self> {
        if !(b > a) || n_cells < 2 {
            return Err(Error::Domain(format!(
                "interval grid needs b > a and >= 2 cells, got [{a}, {b}] with {n_cells}"
            )));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Domain(format!("grading ratio {q} outside (0, 1]")));
        }
        Ok(Grid::Interval {
            nodes: graded_nodes(a, b, n_cells, q),
        })
    }

    pub fn rectangle(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self> {
        if !(x.1 > x.0 && y.1 > y.0) || nx < 2 || ny < 2 {
            return Err(Error::Domain("degenerate rectangle grid".into()));
        }
        Ok(Grid::Rectangle {
            xs: graded_nodes(x.0, x.1, nx, 1.0),
            ys: graded_nodes(y.0, y.1, ny, 1.0),
        })
    }

    /// Annulus r_inner < |x - center| < r_outer in polar coordinates,
    /// radially graded (default ratio 0.9) so nodes crowd the outer
    /// boundary.
    pub fn polar_annulus(
        center: &[f64],
        r_inner: f64,
        r_outer: f64,
        n_radial: usize,
        n_theta: usize,
        q: f64,
    ) -> Result<Self> {
        if center.len() != 2 {
            return Err(Error::Domain("polar annulus grid is two-dimensional".into()));
        }
        if !(r_outer > r_inner && r_inner > 0.0) || n_radial < 2 || n_theta < 4 {
            return Err(Error::Domain(format!(
                "degenerate annulus grid ({r_inner}, {r_outer}) with {n_radial}x{n_theta} cells"
            )));
        }
        if !(q > 0.0 && q <= 1.0) {
            return Err(Error::Domain(format!("grading ratio {q} outside (0, 1]")));
        }
        // graded_nodes shrinks spacings toward its right endpoint, which
        // is exactly the singular outer boundary here.
        let radii = graded_nodes(r_inner, r_outer, n_radial, q);
        Ok(Grid::PolarAnnulus {
            center: center.to_vec(),
            radii,
            n_theta,
        })
    }

    pub fn n_nodes(&self) -> usize {
        match self {
            Grid::Interval { nodes } => nodes.len(),
            Grid::Rectangle { xs, ys } => xs.len() * ys.len(),
            Grid::PolarAnnulus { radii, n_theta, .. } => radii.len() * n_theta,
        }
    }

    /// Cartesian coordinates of node `idx`.
    pub fn coords(&self, idx: usize) -> Vec<f64> {
        match self {
            Grid::Interval { nodes } => vec![nodes[idx]],
            Grid::Rectangle { xs, ys } => {
                let i = idx / ys.len();
                let j = idx % ys.len();
                vec![xs[i], ys[j]]
            }
            Grid::PolarAnnulus {
                center,
                radii,
                n_theta,
            } => {
                let i = idx / n_theta;
                let j = idx % n_theta;
                let theta = 2.0 * std::f64::consts::PI * (j as f64) / (*n_theta as f64);
                vec![
                    center[0] + radii[i] * theta.cos(),
                    center[1] + radii[i] * theta.sin(),
                ]
            }
        }
    }

    pub fn is_boundary(&self, idx: usize) -> bool {
        match self {
            Grid::Interval { nodes } => idx == 0 || idx == nodes.len() - 1,
            Grid::Rectangle { xs, ys } => {
                let i = idx / ys.len();
                let j = idx % ys.len();
                i == 0 || i == xs.len() - 1 || j == 0 || j == ys.len() - 1
            }
            Grid::PolarAnnulus { radii, n_theta, .. } => {
                let i = idx / n_theta;
                i == 0 || i == radii.len() - 1
            }
        }
    }

    pub fn interior_indices(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| !self.is_boundary(i)).collect()
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        (0..self.n_nodes()).filter(|&i| self.is_boundary(i)).collect()
    }
}

/// Grid function.
#[derive(Debug, Clone, Serialize)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<f64>,
}

impl Field {
    pub fn from_fn(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values: Vec<f64> = (0..grid.n_nodes()).map(|i| f(&grid.coords(i))).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field has non-finite node values".into()));
        }
        Ok(Field {
            grid: grid.clone(),
            values,
        })
    }

    /// Linear (1D) or bilinear (rectangle / polar, with periodic wrap in
    /// the angle) interpolation at a point inside the grid's hull.
    pub fn interpolate(&self, x: &[f64]) -> Result<f64> {
        let bracket = |nodes: &[f64], t: f64| -> Result<(usize, f64)> {
            if t < nodes[0] - 1e-12 || t > nodes[nodes.len() - 1] + 1e-12 {
                return Err(Error::Domain(format!(
                    "interpolation point {t} outside [{}, {}]",
                    nodes[0],
                    nodes[nodes.len() - 1]
                )));
            }
            let i = nodes
                .windows(2)
                .position(|w| t <= w[1] + 1e-12)
                .unwrap_or(nodes.len() - 2);
            let s = ((t - nodes[i]) / (nodes[i + 1] - nodes[i])).clamp(0.0, 1.0);
            Ok((i, s))
        };
        match &self.grid {
            Grid::Interval { nodes } => {
                let (i, s) = bracket(nodes, x[0])?;
                Ok((1.0 - s) * self.values[i] + s * self.values[i + 1])
            }
            Grid::Rectangle { xs, ys } => {
                let (i, s) = bracket(xs, x[0])?;
                let (j, t) = bracket(ys, x[1])?;
                let at = |i: usize, j: usize| self.values[i * ys.len() + j];
                Ok((1.0 - s) * ((1.0 - t) * at(i, j) + t * at(i, j + 1))
                    + s * ((1.0 - t) * at(i + 1, j) + t * at(i + 1, j + 1)))
            }
            Grid::PolarAnnulus {
                center,
                radii,
                n_theta,
            } => {
                let r = dist(x, center);
                let theta = (x[1] - center[1])
                    .atan2(x[0] - center[0])
                    .rem_euclid(2.0 * std::f64::consts::PI);
                let (i, s) = bracket(radii, r)?;
                let dtheta = 2.0 * std::f64::consts::PI / (*n_theta as f64);
                let jf = theta / dtheta;
                let j = (jf.floor() as usize) % n_theta;
                let t = jf - jf.floor();
                let at = |i: usize, j: usize| self.values[i * n_theta + (j % n_theta)];
                Ok((1.0 - s) * ((1.0 - t) * at(i, j) + t * at(i, j + 1))
                    + s * ((1.0 - t) * at(i + 1, j) + t * at(i + 1, j + 1)))
            }
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("coords,value\n");
        for i in 0..self.grid.n_nodes() {
            let coords = self
                .grid
                .coords(i)
                .iter()
                .map(|c| format!("{c:.17e}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!("{coords},{:.17e}\n", self.values[i]));
        }
        out
    }
}

/// One assembled interior row of the discrete operator: L_h[u](node) =
/// sum entries (col, coeff) * u[col].
struct Row {
    node: usize,
    entries: Vec<(usize, f64)>,
}

fn push_entry(entries: &mut Vec<(usize, f64)>, col: usize, coeff: f64) {
    if let Some(e) = entries.iter_mut().find(|e| e.0 == col) {
        e.1 += coeff;
    } else {
        entries.push((col, coeff));
    }
}

/// Non-uniform 3-point weights (left, center, right) for u' at a node
/// with gaps hm, hp; exact on quadratics.
fn d1_weights(hm: f64, hp: f64) -> [f64; 3] {
    let denom = hm * hp * (hm + hp);
    [-hp * hp / denom, (hp * hp - hm * hm) / denom, hm * hm / denom]
}

/// Non-uniform 3-point weights for u''.
fn d2_weights(hm: f64, hp: f64) -> [f64; 3] {
    let denom = hm * hp * (hm + hp);
    [2.0 * hp / denom, -2.0 * (hm + hp) / denom, 2.0 * hm / denom]
}

fn assemble_rows(coeffs: &OperatorCoefficients, grid: &Grid) -> Result<Vec<Row>> {
    let interior = grid.interior_indices();
    interior
        .par_iter()
        .map(|&idx| {
            let x = grid.coords(idx);
            let mut entries = Vec::with_capacity(9);
            match grid {
                Grid::Interval { nodes } => {
                    let i = idx;
                    let hm = nodes[i] - nodes[i - 1];
                    let hp = nodes[i + 1] - nodes[i];
                    let a = coeffs.a_at(&x)?[(0, 0)];
                    let b = coeffs.b_at(&x)[0];
                    let d1 = d1_weights(hm, hp);
                    let d2 = d2_weights(hm, hp);
                    for (k, col) in [i - 1, i, i + 1].into_iter().enumerate() {
                        push_entry(&mut entries, col, a * d2[k] + b * d1[k]);
                    }
                    push_entry(&mut entries, i, coeffs.c_at(&x));
                }
                Grid::Rectangle { xs, ys } => {
                    let i = idx / ys.len();
                    let j = idx % ys.len();
                    let hx = xs[1] - xs[0];
                    let hy = ys[1] - ys[0];
                    let a = coeffs.a_at(&x)?;
                    let b = coeffs.b_at(&x);
                    let id = |i: usize, j: usize| i * ys.len() + j;
                    // a11 u_xx, a22 u_yy, central b terms.
                    for (k, ii) in [i - 1, i, i + 1].into_iter().enumerate() {
                        push_entry(
                            &mut entries,
                            id(ii, j),
                            a[(0, 0)] * d2_weights(hx, hx)[k] + b[0] * d1_weights(hx, hx)[k],
                        );
                    }
                    for (k, jj) in [j - 1, j, j + 1].into_iter().enumerate() {
                        push_entry(
                            &mut entries,
                            id(i, jj),
                            a[(1, 1)] * d2_weights(hy, hy)[k] + b[1] * d1_weights(hy, hy)[k],
                        );
                    }
                    // Symmetric 4-point cross stencil for 2 a12 u_xy.
                    let cross = 2.0 * a[(0, 1)] / (4.0 * hx * hy);
                    push_entry(&mut entries, id(i + 1, j + 1), cross);
                    push_entry(&mut entries, id(i - 1, j - 1), cross);
                    push_entry(&mut entries, id(i + 1, j - 1), -cross);
                    push_entry(&mut entries, id(i - 1, j + 1), -cross);
                    push_entry(&mut entries, id(i, j), coeffs.c_at(&x));
                }
                Grid::PolarAnnulus {
                    center,
                    radii,
                    n_theta,
                } => {
                    // The polar assembly is restricted to identity
                    // principal part: Laplacian u_rr + u_r/r + u_tt/r^2.
                    let a = coeffs.a_at(&x)?;
                    let eye = nalgebra::DMatrix::<f64>::identity(2, 2);
                    if (&a - &eye).amax() > 1e-10 {
                        return Err(Error::Construction(
                            "polar annulus assembly supports identity principal part only"
                                .into(),
                        ));
                    }
                    let i = idx / n_theta;
                    let j = idx % n_theta;
                    let r = radii[i];
                    let hm = radii[i] - radii[i - 1];
                    let hp = radii[i + 1] - radii[i];
                    let dtheta = 2.0 * std::f64::consts::PI / (*n_theta as f64);
                    let b = coeffs.b_at(&x);
                    let theta = dtheta * j as f64;
                    let (sin_t, cos_t) = theta.sin_cos();
                    // Cartesian b dotted into polar derivatives:
                    // b . grad u = (b.e_r) u_r + (b.e_theta) u_theta / r.
                    let b_r = b[0] * cos_t + b[1] * sin_t;
                    let b_t = -b[0] * sin_t + b[1] * cos_t;
                    let d1 = d1_weights(hm, hp);
                    let d2 = d2_weights(hm, hp);
                    let id = |i: usize, j: usize| i * n_theta + j.rem_euclid(*n_theta);
                    for (k, ii) in [i - 1, i, i + 1].into_iter().enumerate() {
                        push_entry(&mut entries, id(ii, j), d2[k] + (1.0 / r + b_r) * d1[k]);
                    }
                    let t2 = 1.0 / (r * r * dtheta * dtheta);
                    let t1 = b_t / (r * 2.0 * dtheta);
                    push_entry(&mut entries, id(i, j + 1), t2 + t1);
                    push_entry(&mut entries, id(i, j + n_theta - 1), t2 - t1);
                    push_entry(&mut entries, id(i, j), -2.0 * t2);
                    push_entry(&mut entries, id(i, j), coeffs.c_at(&x));
                    let _ = center;
                }
            }
            Ok(Row { node: idx, entries })
        })
        .collect()
}

/// Apply the discretized operator to a grid field. Returns L_h[u] on the
/// same grid; boundary nodes (which have no full stencil) carry zero.
pub fn apply_operator(coeffs: &OperatorCoefficients, field: &Field) -> Result<Field> {
    let rows = assemble_rows(coeffs, &field.grid)?;
    let mut values = vec![0.0; field.grid.n_nodes()];
    for row in rows {
        values[row.node] = row
            .entries
            .iter()
            .map(|&(col, w)| w * field.values[col])
            .sum();
    }
    Ok(Field {
        grid: field.grid.clone(),
        values,
    })
}

const SOLVE_RTOL: f64 = 1e-10;
const MAX_SWEEPS: usize = 400_000;

/// Solve L_h[u] = rhs with Dirichlet data on the boundary nodes.
/// Requires c <= 0 at interior nodes. Small systems go through a dense
/// LU factorization; larger ones through SOR down to residual 1e-10.
pub fn solve_dirichlet(
    coeffs: &OperatorCoefficients,
    grid: &Grid,
    boundary_data: &(dyn Fn(&[f64]) -> f64 + Sync),
    rhs: &(dyn Fn(&[f64]) -> f64 + Sync),
) -> Result<Field> {
    for &idx in &grid.interior_indices() {
        let c = coeffs.c_at(&grid.coords(idx));
        if c > 1e-12 {
            return Err(Error::Domain(format!(
                "solvability guard: c = {c} > 0 at node {:?}",
                grid.coords(idx)
            )));
        }
    }
    let rows = assemble_rows(coeffs, grid)?;
    let interior = grid.interior_indices();
    let unknown_of: std::collections::HashMap<usize, usize> = interior
        .iter()
        .enumerate()
        .map(|(k, &idx)| (idx, k))
        .collect();
    let mut values = vec![0.0; grid.n_nodes()];
    for &idx in &grid.boundary_indices() {
        values[idx] = boundary_data(&grid.coords(idx));
    }
    // Fold boundary columns into the right-hand side.
    let mut b_vec = vec![0.0; interior.len()];
    let mut reduced: Vec<Vec<(usize, f64)>> = vec![Vec::new(); interior.len()];
    for row in &rows {
        let k = unknown_of[&row.node];
        b_vec[k] = rhs(&grid.coords(row.node));
        for &(col, w) in &row.entries {
            match unknown_of.get(&col) {
                Some(&kc) => reduced[k].push((kc, w)),
                None => b_vec[k] -= w * values[col],
            }
        }
    }
    let m = interior.len();
    let scale = b_vec.iter().fold(1.0f64, |s, v| s.max(v.abs()))
        .max(values.iter().fold(0.0f64, |s, v| s.max(v.abs())));
    let mut u = vec![0.0; m];
    if m <= 600 {
        let mut dense = nalgebra::DMatrix::<f64>::zeros(m, m);
        for (k, row) in reduced.iter().enumerate() {
            for &(kc, w) in row {
                dense[(k, kc)] += w;
            }
        }
        let sol = dense
            .lu()
            .solve(&nalgebra::DVector::from_vec(b_vec.clone()))
            .ok_or_else(|| Error::Construction("singular discrete system".into()))?;
        u.copy_from_slice(sol.as_slice());
    } else {
        // SOR; the M-matrix structure of the shipped families makes the
        // sweep contract.
        let omega = 1.5;
        let mut converged = false;
        for sweep in 0..MAX_SWEEPS {
            for (k, row) in reduced.iter().enumerate() {
                let mut diag = 0.0;
                let mut acc = b_vec[k];
                for &(kc, w) in row {
                    if kc == k {
                        diag += w;
                    } else {
                        acc -= w * u[kc];
                    }
                }
                if diag == 0.0 {
                    return Err(Error::Construction(
                        "zero diagonal in discrete system".into(),
                    ));
                }
                u[k] += omega * (acc / diag - u[k]);
            }
            if sweep % 20 == 19 {
                let res = residual_inf(&reduced, &b_vec, &u);
                if res <= SOLVE_RTOL * scale.max(1.0) {
                    converged = true;
                    break;
                }
            }
        }
        if !converged {
            let res = residual_inf(&reduced, &b_vec, &u);
            return Err(Error::NonConvergence(format!(
                "SOR did not reach tolerance after {MAX_SWEEPS} sweeps (residual {res:e})"
            )));
        }
    }
    for (k, &idx) in interior.iter().enumerate() {
        values[idx] = u[k];
    }
    let field = Field {
        grid: grid.clone(),
        values,
    };
    // Post-condition: discrete residual small against the rhs scale.
    let applied = apply_operator(coeffs, &field)?;
    let worst = grid
        .interior_indices()
        .iter()
        .map(|&idx| (applied.values[idx] - rhs(&grid.coords(idx))).abs())
        .fold(0.0f64, f64::max);
    if worst > 1e-8 * scale.max(1.0) {
        return Err(Error::NonConvergence(format!(
            "discrete residual {worst:e} exceeds tolerance"
        )));
    }
    Ok(field)
}

fn residual_inf(rows: &[Vec<(usize, f64)>], b: &[f64], u: &[f64]) -> f64 {
    rows.iter()
        .enumerate()
        .map(|(k, row)| {
            (b[k] - row.iter().map(|&(kc, w)| w * u[kc]).sum::<f64>()).abs()
        })
        .fold(0.0, f64::max)
}

/// Strong-maximum-principle verdict on a grid field.
#[derive(Debug, Clone, Serialize)]
pub struct CsmpReport {
    pub interior_max: f64,
    pub boundary_max: f64,
    /// Global supremum M_u over the closed grid.
    pub m_u: f64,
    pub argmax: Vec<f64>,
    pub constant: bool,
    pub strict: bool,
}

/// Check that the field's maximum sits strictly on the boundary (unless
/// the field is constant, the other branch of the alternative).
pub fn csmp_check(field: &Field, tolerance: f64) -> CsmpReport {
    let grid = &field.grid;
    let fold_max = |idxs: &[usize]| {
        idxs.iter()
            .map(|&i| (field.values[i], i))
            .fold((f64::NEG_INFINITY, 0), |best, cand| {
                if cand.0 > best.0 {
                    cand
                } else {
                    best
                }
            })
    };
    let (interior_max, i_int) = fold_max(&grid.interior_indices());
    let (boundary_max, i_bnd) = fold_max(&grid.boundary_indices());
    let m_u = interior_max.max(boundary_max);
    let min = field.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let constant = (m_u - min).abs() < 1e-12 * (1.0 + m_u.abs());
    let strict = !constant && interior_max < boundary_max - tolerance;
    let argmax = if boundary_max >= interior_max {
        grid.coords(i_bnd)
    } else {
        grid.coords(i_int)
    };
    CsmpReport {
        interior_max,
        boundary_max,
        m_u,
        argmax,
        constant,
        strict,
    }
}

/// One-sided difference quotients toward the boundary and their
/// Richardson extrapolation.
#[derive(Debug, Clone, Serialize)]
pub struct HopfReport {
    /// (h, quotient) pairs.
    pub quotients: Vec<(f64, f64)>,
    pub extrapolated: f64,
    pub positive: bool,
    /// Least-squares slope of log|quotient| against log h, when all
    /// quotients are nonzero.
    pub log_slope: Option<f64>,
}

const HOPF_TOL: f64 = 1e-8;

/// Evaluate (u(x_b) - u(x_b - h nu)) / h along a decreasing h-sequence.
/// `eval` may be a grid-field interpolation or an analytic function.
pub fn hopf_quotient(
    eval: &dyn Fn(&[f64]) -> Result<f64>,
    x_b: &[f64],
    nu: &[f64],
    h_sequence: &[f64],
) -> Result<HopfReport> {
    if h_sequence.len() < 2 {
        return Err(Error::Domain("need at least two step sizes".into()));
    }
    if h_sequence.windows(2).any(|w| w[1] >= w[0]) || h_sequence.iter().any(|&h| h <= 0.0) {
        return Err(Error::Domain(
            "step sizes must be positive and strictly decreasing".into(),
        ));
    }
    let nu_norm = crate::norm(nu);
    if (nu_norm - 1.0).abs() > 1e-10 {
        return Err(Error::Domain(format!("nu must be a unit vector, |nu| = {nu_norm}")));
    }
    let u_b = eval(x_b)?;
    let mut quotients = Vec::with_capacity(h_sequence.len());
    for &h in h_sequence {
        let y: Vec<f64> = x_b.iter().zip(nu).map(|(xb, n)| xb - h * n).collect();
        quotients.push((h, (u_b - eval(&y)?) / h));
    }
    // First-order quotients: eliminate the O(h) term from the last two.
    let (h1, q1) = quotients[quotients.len() - 2];
    let (h2, q2) = quotients[quotients.len() - 1];
    let extrapolated = (h1 * q2 - h2 * q1) / (h1 - h2);
    let log_slope = if quotients.iter().all(|&(_, q)| q.abs() > 0.0) {
        let pts: Vec<(f64, f64)> = quotients.iter().map(|&(h, q)| (h.ln(), q.abs().ln())).collect();
        let n = pts.len() as f64;
        let sx: f64 = pts.iter().map(|p| p.0).sum();
        let sy: f64 = pts.iter().map(|p| p.1).sum();
        let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
        let sxy: f64 = pts.iter().map(|p| p.0 * p.1).sum();
        Some((n * sxy - sx * sy) / (n * sxx - sx * sx))
    } else {
        None
    };
    Ok(HopfReport {
        quotients,
        extrapolated,
        positive: extrapolated > HOPF_TOL,
        log_slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::barrier::Barrier;
    use crate::operator::{adversarial_coefficients, Domain, OperatorCoefficients};
    use crate::weight::RadialWeight;
    use nalgebra::{DMatrix, DVector};

    fn interval_coeffs(
        b: f64,
        c: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    ) -> OperatorCoefficients {
        OperatorCoefficients::new(
            1,
            |_| DMatrix::identity(1, 1),
            move |_| DVector::from_vec(vec![b]),
            c,
            Domain::Ball {
                center: vec![0.5],
                radius: 0.5,
            },
        )
    }

    #[test]
    fn quadratic_exactness_interval() {
        let grid = Grid::interval(0.0, 1.0, 16).unwrap();
        let u = Field::from_fn(&grid, |x| x[0] * x[0]).unwrap();
        let coeffs = interval_coeffs(0.0, |_| 0.0);
        let lu = apply_operator(&coeffs, &u).unwrap();
        for idx in grid.interior_indices() {
            assert!((lu.values[idx] - 2.0).abs() < 1e-10, "node {idx}");
        }
    }

    #[test]
    fn quadratic_exactness_graded() {
        let grid = Grid::interval_graded(0.0, 1.0, 16, 0.85).unwrap();
        let u = Field::from_fn(&grid, |x| 3.0 * x[0] * x[0] - x[0] + 2.0).unwrap();
        let coeffs = interval_coeffs(1.0, |_| 0.0);
        let lu = apply_operator(&coeffs, &u).unwrap();
        for idx in grid.interior_indices() {
            let x = grid.coords(idx)[0];
            let exact = 6.0 + (6.0 * x - 1.0);
            assert!((lu.values[idx] - exact).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_field_maps_to_zero() {
        let grid = Grid::interval(0.0, 1.0, 10).unwrap();
        let u = Field::from_fn(&grid, |_| 7.0).unwrap();
        let coeffs = interval_coeffs(2.0, |_| 0.0);
        let lu = apply_operator(&coeffs, &u).unwrap();
        for idx in grid.interior_indices() {
            assert!(lu.values[idx].abs() < 1e-12);
        }
    }

    #[test]
    fn first_derivative_error_is_second_order() {
        // u = x^3 with a drift term: the u' stencil carries the h^2 error.
        let coeffs = interval_coeffs(1.0, |_| 0.0);
        let err_at = |n_cells: usize| {
            let grid = Grid::interval(0.0, 1.0, n_cells).unwrap();
            let u = Field::from_fn(&grid, |x| x[0].powi(3)).unwrap();
            let lu = apply_operator(&coeffs, &u).unwrap();
            grid.interior_indices()
                .iter()
                .map(|&idx| {
                    let x = grid.coords(idx)[0];
                    (lu.values[idx] - (6.0 * x + 3.0 * x * x)).abs()
                })
                .fold(0.0f64, f64::max)
        };
        let ratio = err_at(20) / err_at(40);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn rectangle_cross_stencil_exact_on_quadratics() {
        let grid = Grid::rectangle((0.0, 1.0), (0.0, 1.0), 12, 12).unwrap();
        let u = Field::from_fn(&grid, |x| x[0] * x[0] + 3.0 * x[0] * x[1] - x[1] * x[1]).unwrap();
        let coeffs = OperatorCoefficients::new(
            2,
            |_| DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            |_| DVector::zeros(2),
            |_| 0.0,
            Domain::Ball {
                center: vec![0.5, 0.5],
                radius: 1.0,
            },
        );
        let lu = apply_operator(&coeffs, &u).unwrap();
        // 2*2 + 2*0.5*3 + 1*(-2) = 5
        for idx in grid.interior_indices() {
            assert!((lu.values[idx] - 5.0).abs() < 1e-9);
        }
    }

    #[test]
    fn laplace_1d_gives_linear_interpolant() {
        let grid = Grid::interval(0.0, 1.0, 40).unwrap();
        let coeffs = interval_coeffs(0.0, |_| 0.0);
        let u = solve_dirichlet(&coeffs, &grid, &|x| x[0].round(), &|_| 0.0).unwrap();
        for idx in 0..grid.n_nodes() {
            let x = grid.coords(idx)[0];
            assert!((u.values[idx] - x).abs() < 1e-9);
        }
        let rep = csmp_check(&u, 1e-12);
        assert!(rep.strict);
        assert!((rep.boundary_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn positive_rhs_forces_nonpositive_solution() {
        let grid = Grid::interval(0.0, 1.0, 50).unwrap();
        let coeffs = interval_coeffs(0.0, |_| 0.0);
        let u = solve_dirichlet(&coeffs, &grid, &|_| 0.0, &|_| 1.0).unwrap();
        for idx in grid.interior_indices() {
            assert!(u.values[idx] <= 1e-12);
            // u = x(x-1)/2 exactly (quadratic, exact discretization).
            let x = grid.coords(idx)[0];
            assert!((u.values[idx] - 0.5 * x * (x - 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn solvability_guard_rejects_positive_c() {
        let grid = Grid::interval(0.0, 1.0, 10).unwrap();
        let coeffs = interval_coeffs(0.0, |_| 1.0);
        assert!(solve_dirichlet(&coeffs, &grid, &|_| 0.0, &|_| 0.0).is_err());
    }

    fn singular_annulus() -> (Grid, OperatorCoefficients) {
        let center = vec![0.0, 0.0];
        let grid = Grid::polar_annulus(&center, 0.8, 1.0, 24, 32, 0.9).unwrap();
        let weight = RadialWeight::power(2.0, 0.5, 1.0).unwrap();
        let dom = Domain::Annulus {
            center: center.clone(),
            r_inner: 0.8,
            r_outer: 1.0,
        };
        let dom_c = dom.clone();
        let coeffs = OperatorCoefficients::new(
            2,
            |_| DMatrix::identity(2, 2),
            |_| DVector::zeros(2),
            move |x| {
                let d = dom_c.growth_distance(x).max(1e-300);
                -weight.eval_clamped(d) / d
            },
            dom,
        );
        (grid, coeffs)
    }

    #[test]
    fn singular_c_annulus_monotone_profile() {
        let (grid, coeffs) = singular_annulus();
        let u = solve_dirichlet(
            &coeffs,
            &grid,
            &|x| if dist(x, &[0.0, 0.0]) < 0.9 { 1.0 } else { 0.0 },
            &|_| 0.0,
        )
        .unwrap();
        // All values in [0,1], radial profile decreasing outward.
        for v in &u.values {
            assert!((-1e-12..=1.0 + 1e-12).contains(v));
        }
        if let Grid::PolarAnnulus { radii, n_theta, .. } = &u.grid {
            for j in 0..*n_theta {
                for i in 0..radii.len() - 1 {
                    assert!(
                        u.values[i * n_theta + j] >= u.values[(i + 1) * n_theta + j] - 1e-10,
                        "profile not monotone at i={i}, j={j}"
                    );
                }
            }
        }
        let rep = csmp_check(&u, 1e-12);
        assert!(rep.strict);
        assert!((rep.boundary_max - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hopf_quotient_at_outer_max_positive() {
        let (grid, coeffs) = singular_annulus();
        // Max on the outer circle this time.
        let u = solve_dirichlet(
            &coeffs,
            &grid,
            &|x| if dist(x, &[0.0, 0.0]) > 0.9 { 1.0 } else { 0.0 },
            &|_| 0.0,
        )
        .unwrap();
        let x_b = [1.0, 0.0];
        let rep = hopf_quotient(
            &|y: &[f64]| u.interpolate(y),
            &x_b,
            &[1.0, 0.0],
            &[0.02, 0.01, 0.005],
        )
        .unwrap();
        assert!(rep.positive, "{rep:?}");
    }

    #[test]
    fn barrier_positive_under_adversarial_coefficients_on_grid() {
        let weight = RadialWeight::power(1.0, 0.5, 2.0).unwrap();
        let b = Barrier::new(2, 2.0, 1e-4, 1.0, weight.clone()).unwrap();
        let center = vec![0.0, 0.0];
        let grid =
            Grid::polar_annulus(&center, 2.0 - 1e-4, 2.0, 40, 16, 0.9).unwrap();
        let v = Field::from_fn(&grid, |x| b.eval(x).unwrap().v).unwrap();
        let dom = Domain::Annulus {
            center,
            r_inner: 2.0 - 1e-4,
            r_outer: 2.0,
        };
        let coeffs = adversarial_coefficients(2, dom, &weight);
        let lv = apply_operator(&coeffs, &v).unwrap();
        for idx in grid.interior_indices() {
            assert!(lv.values[idx] > 0.0, "L_h[v] = {} at {idx}", lv.values[idx]);
        }
    }

    #[test]
    fn hopf_linear_field_quotient_one() {
        let rep = hopf_quotient(
            &|y: &[f64]| Ok(y[0]),
            &[1.0],
            &[1.0],
            &[0.1, 0.05, 0.025],
        )
        .unwrap();
        for &(_, q) in &rep.quotients {
            assert!((q - 1.0).abs() < 1e-12);
        }
        assert!(rep.positive);
        assert!((rep.extrapolated - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hopf_matches_barrier_normal_derivative() {
        let weight = RadialWeight::constant(1.0, 2.0).unwrap();
        let b = Barrier::new(2, 2.0, 1e-3, 1.0, weight).unwrap();
        let hs: Vec<f64> = (1..=6).map(|k| 2e-4 / (k as f64 * k as f64)).collect();
        let rep = hopf_quotient(
            &|y: &[f64]| b.eval(y).map(|bv| bv.v),
            &[2.0, 0.0],
            &[1.0, 0.0],
            &hs,
        )
        .unwrap();
        let expected = b.normal_derivative();
        assert!(
            (rep.extrapolated - expected).abs() < 1e-4 * expected.abs(),
            "extrapolated {} vs {}",
            rep.extrapolated,
            expected
        );
        assert!(!rep.positive);
    }

    #[test]
    fn hopf_sqrt_vanishes_with_half_order() {
        // u = x^{3/2} toward x_b = 0 (outward normal -1): quotient ~ -h^{1/2}.
        let rep = hopf_quotient(
            &|y: &[f64]| Ok(y[0].max(0.0).powf(1.5)),
            &[0.0],
            &[-1.0],
            &[0.04, 0.02, 0.01, 0.005],
        )
        .unwrap();
        assert!(!rep.positive);
        let slope = rep.log_slope.unwrap();
        assert!((slope - 0.5).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn csmp_constant_field() {
        let grid = Grid::interval(0.0, 1.0, 10).unwrap();
        let u = Field::from_fn(&grid, |_| 3.0).unwrap();
        let rep = csmp_check(&u, 1e-12);
        assert!(rep.constant);
        assert!(!rep.strict);
    }

    #[test]
    fn interpolation_roundtrip_on_nodes() {
        let grid = Grid::polar_annulus(&[0.0, 0.0], 0.5, 1.0, 10, 12, 0.9).unwrap();
        let u = Field::from_fn(&grid, |x| x[0] + 2.0 * x[1]).unwrap();
        for idx in 0..grid.n_nodes() {
            let x = grid.coords(idx);
            let v = u.interpolate(&x).unwrap();
            assert!((v - u.values[idx]).abs() < 1e-9, "node {idx}");
        }
    }
}
