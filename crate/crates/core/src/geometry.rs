//! Singular-set geometry: the outward ball property, porosity checks, and
//! the cone/ball-chain construction with its finite-order certificate.

use crate::{dist, Error, Result};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

const GEOM_TOL: f64 = 1e-12;

/// The ambient domain of a scene.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum Omega {
    /// The open cube (-half_width, half_width)^n.
    Square { n: usize, half_width: f64 },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Omega {
    pub fn dim(&self) -> usize {
        match self {
            Omega::Square { n, .. } => *n,
            Omega::Ball { center, .. } => center.len(),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            Omega::Square { half_width, .. } => x.iter().all(|&xi| xi.abs() < *half_width),
            Omega::Ball { center, radius } => dist(x, center) < *radius,
        }
    }

    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Omega::Square { half_width, .. } => x
                .iter()
                .map(|&xi| half_width - xi.abs())
                .fold(f64::INFINITY, f64::min),
            Omega::Ball { center, radius } => radius - dist(x, center),
        }
    }
}

/// Distance from a point to a segment [a, b].
fn segment_distance(x: &[f64], a: &[f64], b: &[f64]) -> f64 {
    let ab: Vec<f64> = a.iter().zip(b).map(|(p, q)| q - p).collect();
    let ax: Vec<f64> = a.iter().zip(x).map(|(p, q)| q - p).collect();
    let ab2: f64 = ab.iter().map(|v| v * v).sum();
    if ab2 == 0.0 {
        return dist(x, a);
    }
    let t = (ab.iter().zip(&ax).map(|(u, v)| u * v).sum::<f64>() / ab2).clamp(0.0, 1.0);
    let proj: Vec<f64> = a.iter().zip(&ab).map(|(p, u)| p + t * u).collect();
    dist(x, &proj)
}

/// A singular set inside the scene domain.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SingularSet {
    Empty,
    FinitePoints { points: Vec<Vec<f64>> },
    /// Sampled parametric C^2 curve, treated as a polyline with exact
    /// point-to-segment distances.
    Curve { samples: Vec<Vec<f64>> },
    /// Both coordinate axes of (-1,1)^2: {x1 = 0 or x2 = 0}.
    AxisCross,
    /// The axes restricted to [0,1) x (-1,1): the full vertical axis plus
    /// the right half of the horizontal axis.
    HalfCross,
    /// The countable line family {x1 = 1/(2k), k in N} in (-1,1)^2.
    LineFamily,
}

impl SingularSet {
    /// Infimal distance from x to the set (infinite for the empty set).
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            SingularSet::Empty => f64::INFINITY,
            SingularSet::FinitePoints { points } => points
                .iter()
                .map(|p| dist(x, p))
                .fold(f64::INFINITY, f64::min),
            SingularSet::Curve { samples } => samples
                .windows(2)
                .map(|w| segment_distance(x, &w[0], &w[1]))
                .fold(f64::INFINITY, f64::min),
            SingularSet::AxisCross => x[0].abs().min(x[1].abs()),
            SingularSet::HalfCross => {
                let to_vertical = x[0].abs();
                let to_half_horizontal = if x[0] >= 0.0 {
                    x[1].abs()
                } else {
                    (x[0] * x[0] + x[1] * x[1]).sqrt()
                };
                to_vertical.min(to_half_horizontal)
            }
            SingularSet::LineFamily => {
                if x[0] <= 0.0 {
                    // Lines accumulate at x1 = 0; the infimum is |x1|.
                    return x[0].abs();
                }
                let k = (1.0 / (2.0 * x[0])).max(1.0);
                let lo = k.floor().max(1.0);
                [lo, lo + 1.0]
                    .iter()
                    .map(|&kk| (x[0] - 1.0 / (2.0 * kk)).abs())
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// A point of the set strictly inside B_radius(center), if one exists.
    pub fn witness_in_ball(&self, center: &[f64], radius: f64) -> Option<Vec<f64>> {
        match self {
            SingularSet::Empty => None,
            SingularSet::FinitePoints { points } => points
                .iter()
                .find(|p| dist(center, p) < radius - GEOM_TOL)
                .cloned(),
            SingularSet::Curve { samples } => {
                // Walk the polyline for a sample (or segment projection)
                // inside the ball.
                for w in samples.windows(2) {
                    if segment_distance(center, &w[0], &w[1]) < radius - GEOM_TOL {
                        for t in 0..=64 {
                            let t = t as f64 / 64.0;
                            let p: Vec<f64> = w[0]
                                .iter()
                                .zip(&w[1])
                                .map(|(a, b)| a + t * (b - a))
                                .collect();
                            if dist(center, &p) < radius - GEOM_TOL {
                                return Some(p);
                            }
                        }
                    }
                }
                None
            }
            SingularSet::AxisCross => {
                if center[0].abs() < radius - GEOM_TOL {
                    Some(vec![0.0, center[1]])
                } else if center[1].abs() < radius - GEOM_TOL {
                    Some(vec![center[0], 0.0])
                } else {
                    None
                }
            }
            SingularSet::HalfCross => {
                if center[0].abs() < radius - GEOM_TOL {
                    Some(vec![0.0, center[1]])
                } else if center[0] >= 0.0 && center[1].abs() < radius - GEOM_TOL {
                    Some(vec![center[0], 0.0])
                } else {
                    None
                }
            }
            SingularSet::LineFamily => {
                let lo = center[0] - radius;
                let hi = center[0] + radius;
                if hi <= GEOM_TOL {
                    return None;
                }
                // Smallest k whose line x1 = 1/(2k) lies strictly inside
                // the ball's x1-extent.
                let mut k = (1.0 / (2.0 * hi)).floor().max(0.0) as u64 + 1;
                for _ in 0..64 {
                    let t = 1.0 / (2.0 * k as f64);
                    if t < hi - GEOM_TOL && t > lo + GEOM_TOL {
                        return Some(vec![t, center[1]]);
                    }
                    k += 1;
                }
                None
            }
        }
    }
}

/// The relatively closed test set of the outward ball definition.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TestSet {
    Points { points: Vec<Vec<f64>> },
    /// The strip (-1, x1_max] x (-1, 1) in the square scene.
    LeftStrip { x1_max: f64 },
}

impl TestSet {
    pub fn distance(&self, x: &[f64]) -> f64 {
        match self {
            TestSet::Points { points } => points
                .iter()
                .map(|p| dist(x, p))
                .fold(f64::INFINITY, f64::min),
            TestSet::LeftStrip { x1_max } => (x[0] - x1_max).max(0.0),
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        match self {
            TestSet::Points { points } => points.iter().any(|p| dist(x, p) <= GEOM_TOL),
            TestSet::LeftStrip { x1_max } => x[0] <= *x1_max,
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            TestSet::Points { points } => points.is_empty(),
            TestSet::LeftStrip { .. } => false,
        }
    }
}

/// A domain, a singular set, and a test set to probe the outward ball
/// property against.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SingularSetScene {
    pub omega: Omega,
    pub singular: SingularSet,
    pub test_set: TestSet,
}

impl SingularSetScene {
    pub fn new(omega: Omega, singular: SingularSet, test_set: TestSet) -> Result<Self> {
        if test_set.is_empty() {
            return Err(Error::Construction(
                "test set must be nonempty (Definition precondition)".into(),
            ));
        }
        Ok(SingularSetScene {
            omega,
            singular,
            test_set,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("scene JSON: {e}")))
    }

    fn grid_centers(&self, h: f64) -> Vec<Vec<f64>> {
        let n = self.omega.dim();
        let half = match &self.omega {
            Omega::Square { half_width, .. } => *half_width,
            Omega::Ball { radius, .. } => *radius,
        };
        let offset: Vec<f64> = match &self.omega {
            Omega::Square { .. } => vec![0.0; n],
            Omega::Ball { center, .. } => center.clone(),
        };
        let steps = (2.0 * half / h).round() as i64;
        let mut centers = vec![Vec::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for partial in &centers {
                for i in 0..=steps {
                    let mut p = partial.clone();
                    p.push(-half + (i as f64) * h);
                    next.push(p);
                }
            }
            centers = next;
        }
        centers
            .into_iter()
            .map(|p| p.iter().zip(&offset).map(|(a, o)| a + o).collect())
            .filter(|p: &Vec<f64>| self.omega.contains(p))
            .collect()
    }

    /// Candidate outward balls at resolution h: grid centers outside
    /// T and S, with radius dist(center, T), whose ball stays in Omega.
    fn candidates(&self, h: f64) -> Vec<(Vec<f64>, f64)> {
        self.grid_centers(h)
            .into_iter()
            .filter(|x| !self.test_set.contains(x) && self.singular.distance(x) > GEOM_TOL)
            .filter_map(|x| {
                let r = self.test_set.distance(&x);
                if r > GEOM_TOL && self.omega.boundary_distance(&x) >= r - GEOM_TOL {
                    Some((x, r))
                } else {
                    None
                }
            })
            .collect()
    }
}

/// Result of a grid search for an outward ball.
#[derive(Debug, Clone, Serialize)]
pub enum BallSearchOutcome {
    Found {
        center: Vec<f64>,
        radius: f64,
        singular_gap: f64,
    },
    NotFoundAtResolution {
        resolution: f64,
        n_candidates: usize,
    },
}

/// Grid search for a ball B_R(x0) in Omega \ (T u S) whose boundary
/// touches T, with R = dist(x0, T). Returns the accepted candidate of
/// maximal radius (lexicographically smallest center among ties).
pub fn outward_ball_search(scene: &SingularSetScene, resolution: f64) -> Result<BallSearchOutcome> {
    if !(resolution > 0.0) {
        return Err(Error::Domain(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let candidates = scene.candidates(resolution);
    if candidates.is_empty() {
        return Err(Error::Construction(
            "degenerate scene: no candidate centers outside the test set".into(),
        ));
    }
    let mut best: Option<(Vec<f64>, f64, f64)> = None;
    for (x, r) in &candidates {
        let gap = scene.singular.distance(x);
        if gap < *r - GEOM_TOL {
            continue;
        }
        let better = match &best {
            None => true,
            Some((bx, br, _)) => {
                *r > *br + GEOM_TOL
                    || ((*r - *br).abs() <= GEOM_TOL
                        && x.iter()
                            .zip(bx)
                            .find_map(|(a, b)| {
                                if (a - b).abs() > GEOM_TOL {
                                    Some(a < b)
                                } else {
                                    None
                                }
                            })
                            .unwrap_or(false))
            }
        };
        if better {
            best = Some((x.clone(), *r, gap - *r));
        }
    }
    Ok(match best {
        Some((center, radius, singular_gap)) => BallSearchOutcome::Found {
            center,
            radius,
            singular_gap,
        },
        None => BallSearchOutcome::NotFoundAtResolution {
            resolution,
            n_candidates: candidates.len(),
        },
    })
}

/// One candidate ball and (when found) its intersection witness with S.
#[derive(Debug, Clone, Serialize)]
pub struct CandidateWitness {
    pub center: Vec<f64>,
    pub radius: f64,
    pub witness: Option<Vec<f64>>,
}

/// Report of a falsification sweep at one resolution.
#[derive(Debug, Clone, Serialize)]
pub struct FalsifyReport {
    pub resolution: f64,
    pub n_candidates: usize,
    pub n_with_witness: usize,
    /// True iff every T-touching candidate ball meets S.
    pub falsified_at_resolution: bool,
    /// A candidate without witness, when the sweep fails to falsify.
    pub unwitnessed: Option<CandidateWitness>,
    /// A sample witnessed candidate.
    pub example: Option<CandidateWitness>,
}

/// Enumerate all grid balls whose boundary touches T and report, for
/// each, a point of S inside the ball. The verdict is "falsified at this
/// resolution" iff every candidate has a witness.
pub fn falsify_outward_ball(scene: &SingularSetScene, resolution: f64) -> Result<FalsifyReport> {
    if !(resolution > 0.0) {
        return Err(Error::Domain(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    let candidates = scene.candidates(resolution);
    let mut n_with_witness = 0;
    let mut unwitnessed = None;
    let mut example = None;
    for (center, radius) in &candidates {
        let witness = scene.singular.witness_in_ball(center, *radius);
        let cw = CandidateWitness {
            center: center.clone(),
            radius: *radius,
            witness: witness.clone(),
        };
        if witness.is_some() {
            n_with_witness += 1;
            if example.is_none() {
                example = Some(cw);
            }
        } else if unwitnessed.is_none() {
            unwitnessed = Some(cw);
        }
    }
    Ok(FalsifyReport {
        resolution,
        n_candidates: candidates.len(),
        n_with_witness,
        falsified_at_resolution: !candidates.is_empty() && n_with_witness == candidates.len(),
        unwitnessed,
        example,
    })
}

/// Porosity ratios 2 gamma(r) / r per scale, where gamma(r) is the radius
/// of the largest ball found in B_r(s) \ S.
#[derive(Debug, Clone, Serialize)]
pub struct PorosityReport {
    pub point: Vec<f64>,
    pub ratios: Vec<(f64, f64)>,
    pub pass: bool,
}

/// Check 1-porosity of the singular set at one of its points: at every
/// scale, a hole of (normalized) proportional radius must exist. The
/// hole search is a grid scan refined by local pattern search.
pub fn porosity_check(
    scene: &SingularSetScene,
    s: &[f64],
    scales: &[f64],
    tol: f64,
) -> Result<PorosityReport> {
    if scene.singular.distance(s) > 1e-9 {
        return Err(Error::Domain(format!(
            "point {s:?} is not on the singular set (distance {})",
            scene.singular.distance(s)
        )));
    }
    let n = scene.omega.dim();
    let mut ratios = Vec::new();
    for &r in scales {
        let hole = |y: &[f64]| scene.singular.distance(y).min(r - dist(y, s));
        // Coarse grid scan of B_r(s).
        let steps = 40usize;
        let mut best_y = s.to_vec();
        let mut best = f64::NEG_INFINITY;
        let mut grid = vec![Vec::<f64>::new()];
        for _ in 0..n {
            let mut next = Vec::new();
            for partial in &grid {
                for i in 0..=steps {
                    let mut p = partial.clone();
                    p.push(-r + 2.0 * r * (i as f64) / (steps as f64));
                    next.push(p);
                }
            }
            grid = next;
        }
        for offset in grid {
            let y: Vec<f64> = s.iter().zip(&offset).map(|(a, o)| a + o).collect();
            let g = hole(&y);
            if g > best {
                best = g;
                best_y = y;
            }
        }
        // Pattern-search refinement.
        let mut step = r / steps as f64;
        for _ in 0..40 {
            let mut improved = false;
            for i in 0..n {
                for sign in [-1.0, 1.0] {
                    let mut y = best_y.clone();
                    y[i] += sign * step;
                    let g = hole(&y);
                    if g > best {
                        best = g;
                        best_y = y;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
            if step < 1e-14 * r {
                break;
            }
        }
        ratios.push((r, (2.0 * best / r).max(0.0)));
    }
    let pass = ratios.iter().any(|&(_, ratio)| ratio >= 1.0 - tol);
    Ok(PorosityReport {
        point: s.to_vec(),
        ratios,
        pass,
    })
}

/// Geometric chain of balls tangent to a cone of half-angle theta,
/// shrinking toward the apex with the exact ratio
/// kappa = (1 + sin(theta)/3) / (1 + 2 sin(theta)/3).
#[derive(Debug, Clone, Serialize)]
pub struct ConeChain {
    pub apex: Vec<f64>,
    pub axis: Vec<f64>,
    pub theta: f64,
    pub kappa: f64,
    /// (center, radius) pairs, outermost first.
    pub balls: Vec<(Vec<f64>, f64)>,
}

/// The chain contraction ratio for a cone of half-angle theta.
pub fn chain_ratio(theta: f64) -> f64 {
    let s = theta.sin();
    (1.0 + s / 3.0) / (1.0 + 2.0 * s / 3.0)
}

/// Build the tangent ball chain and validate the nesting inclusion
/// B_{r_k/3}(y_k) inside B_{2 r_{k+1}/3}(y_{k+1}) for every consecutive
/// pair (it holds with equality analytically).
pub fn cone_chain(
    apex: &[f64],
    axis: &[f64],
    theta: f64,
    r0: f64,
    count: usize,
) -> Result<ConeChain> {
    if !(theta > 0.0 && theta < std::f64::consts::FRAC_PI_2 + GEOM_TOL) {
        return Err(Error::Domain(format!(
            "half-angle theta = {theta} outside (0, pi/2]"
        )));
    }
    if count < 2 {
        return Err(Error::Domain("chain needs at least two balls".into()));
    }
    if !(r0 > 0.0) {
        return Err(Error::Domain(format!("first radius must be positive, got {r0}")));
    }
    let axis_norm = crate::norm(axis);
    if axis_norm < GEOM_TOL {
        return Err(Error::Domain("axis must be a nonzero vector".into()));
    }
    let unit: Vec<f64> = axis.iter().map(|a| a / axis_norm).collect();
    let kappa = chain_ratio(theta);
    let sin_t = theta.sin();
    let mut balls = Vec::with_capacity(count);
    let mut t = r0 / sin_t;
    for _ in 0..count {
        let center: Vec<f64> = apex.iter().zip(&unit).map(|(a, u)| a + t * u).collect();
        let radius = t * sin_t;
        balls.push((center, radius));
        t *= kappa;
    }
    for pair in balls.windows(2) {
        let (yk, rk) = (&pair[0].0, pair[0].1);
        let (yk1, rk1) = (&pair[1].0, pair[1].1);
        let lhs = dist(yk, yk1) + rk / 3.0;
        let rhs = 2.0 * rk1 / 3.0;
        if lhs > rhs + GEOM_TOL {
            return Err(Error::Construction(format!(
                "ball chain nesting violated: {lhs} > {rhs}"
            )));
        }
        // Tangency to the cone boundary.
        debug_assert!((rk - dist(yk, apex) * sin_t).abs() <= GEOM_TOL * (1.0 + rk.abs()));
    }
    Ok(ConeChain {
        apex: apex.to_vec(),
        axis: unit,
        theta,
        kappa,
        balls,
    })
}

/// Volume of the Euclidean unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    std::f64::consts::PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0 + 1.0)
}

/// Finite-order certificate from the chain/Harnack contradiction:
/// with L = omega_n / (C 3^n), any zero of order >= m* with kappa^{m*} < L
/// is impossible, so the order is below m*.
#[derive(Debug, Clone, Serialize)]
pub struct OrderCertificate {
    pub l_constant: f64,
    pub kappa: f64,
    pub finite_order_bound: u64,
    /// Least-squares slope of log(value) against log(distance), when
    /// samples are supplied.
    pub fitted_slope: Option<f64>,
    /// Whether the observed decay already exceeds the certified bound,
    /// i.e. the samples are inconsistent with the certificate inputs.
    pub observed_exceeds_bound: Option<bool>,
}

/// Compute the order bound m* = min { m : kappa^m < L } and optionally
/// compare against the decay slope observed in (distance, value) samples.
pub fn order_certificate(
    kappa: f64,
    c_harnack: f64,
    n: usize,
    w_samples: &[(f64, f64)],
) -> Result<OrderCertificate> {
    if !(c_harnack > 0.0) {
        return Err(Error::Domain(format!(
            "weak Harnack constant must be positive, got {c_harnack}"
        )));
    }
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(Error::Domain(format!("kappa = {kappa} outside (0, 1)")));
    }
    let l = unit_ball_volume(n) / (c_harnack * 3f64.powi(n as i32));
    let x = l.ln() / kappa.ln();
    let m_star = if x < 0.0 { 0 } else { x.floor() as u64 + 1 };
    let fitted_slope = if w_samples.len() >= 2 {
        let logs: Vec<(f64, f64)> = w_samples
            .iter()
            .filter(|&&(d, v)| d > 0.0 && v > 0.0)
            .map(|&(d, v)| (d.ln(), v.ln()))
            .collect();
        if logs.len() >= 2 {
            let n_pts = logs.len() as f64;
            let sx: f64 = logs.iter().map(|p| p.0).sum();
            let sy: f64 = logs.iter().map(|p| p.1).sum();
            let sxx: f64 = logs.iter().map(|p| p.0 * p.0).sum();
            let sxy: f64 = logs.iter().map(|p| p.0 * p.1).sum();
            Some((n_pts * sxy - sx * sy) / (n_pts * sxx - sx * sx))
        } else {
            None
        }
    } else {
        None
    };
    Ok(OrderCertificate {
        l_constant: l,
        kappa,
        finite_order_bound: m_star,
        fitted_slope,
        observed_exceeds_bound: fitted_slope.map(|s| s > m_star as f64),
    })
}
