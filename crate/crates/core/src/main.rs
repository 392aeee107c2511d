//! Command-line front end: every subcommand builds the relevant objects,
//! runs the module checks, writes a JSON report, and exits 0 only when
//! the verification passed.

use bpp_lab::barrier::{admissible_epsilon, annulus_samples, residual_check, Barrier};
use bpp_lab::cases::{self, CaseId, CaseStudy};
use bpp_lab::fdlab::{csmp_check, hopf_quotient, solve_dirichlet, Grid};
use bpp_lab::geometry::{
    chain_ratio, falsify_outward_ball, order_certificate, outward_ball_search, Omega,
    SingularSet, SingularSetScene, TestSet,
};
use bpp_lab::operator::{family_by_name, growth_check, Domain, OperatorCoefficients};
use bpp_lab::weight::RadialWeight;
use bpp_lab::{Error, Result};
use clap::{Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "bpp-lab", about = "Numerical checks for boundary point principles")]
struct Cli {
    /// Write the JSON report to this path.
    #[arg(long, global = true)]
    json: Option<PathBuf>,
    /// Seed for all sampling; identical seeds give byte-identical reports.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the comparison barrier and check its residual inequality.
    Barrier {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        /// constant:<v> | power:<c>,<alpha> | file:<csv>
        #[arg(long)]
        weight: String,
        #[arg(long, default_value_t = 1.0)]
        m: f64,
        /// Collar width; defaults to the certified admissible value.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long, default_value = "adversarial")]
        coeffs: String,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
    },
    /// Sample the growth-condition certificate of a coefficient family.
    VerifyOperator {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        r: f64,
        #[arg(long)]
        weight: String,
        #[arg(long, default_value = "adversarial")]
        coeffs: String,
        #[arg(long, default_value_t = 2000)]
        samples: usize,
    },
    /// Search for (or falsify) an outward ball in a scene.
    OutwardBall {
        /// finite_points | half_cross | axis_cross | line_family | <path.json>
        #[arg(long)]
        scene: String,
        #[arg(long, default_value_t = 0.05)]
        resolution: f64,
        /// Enumerate candidates and report singular-set witnesses instead.
        #[arg(long, default_value_t = false)]
        falsify: bool,
    },
    /// Solve the singular-coefficient annulus problem and check the
    /// maximum principle on the discrete solution.
    Csmp {
        #[arg(long, default_value = "power:2,0.5")]
        weight: String,
        #[arg(long, default_value_t = 0.8)]
        r_inner: f64,
        #[arg(long, default_value_t = 1.0)]
        r_outer: f64,
        #[arg(long, default_value_t = 24)]
        nr: usize,
        #[arg(long, default_value_t = 32)]
        ntheta: usize,
        #[arg(long, default_value_t = 0.9)]
        grading: f64,
        /// Which circle carries the boundary value 1.
        #[arg(long, default_value = "inner")]
        max_at: String,
    },
    /// Hopf quotient of the annulus solution at its outer boundary max.
    Hopf {
        #[arg(long, default_value = "power:2,0.5")]
        weight: String,
        #[arg(long, default_value_t = 0.8)]
        r_inner: f64,
        #[arg(long, default_value_t = 1.0)]
        r_outer: f64,
        #[arg(long, default_value_t = 24)]
        nr: usize,
        #[arg(long, default_value_t = 32)]
        ntheta: usize,
        #[arg(long, default_value_t = 0.9)]
        grading: f64,
        /// Comma-separated decreasing step sizes.
        #[arg(long, default_value = "0.02,0.01,0.005")]
        hseq: String,
    },
    /// Run a counter-example case against its expected check map.
    Case {
        /// ex2_9 | ex2_12 | ex3_2 | ex3_4
        id: String,
        #[arg(long, default_value_t = 2000)]
        budget: usize,
    },
    /// Finite-order certificate from the cone chain contraction.
    Order {
        #[arg(long)]
        kappa: Option<f64>,
        /// Cone half-angle; alternative way to fix kappa.
        #[arg(long)]
        theta: Option<f64>,
        #[arg(long = "C")]
        c_harnack: f64,
        #[arg(long)]
        n: usize,
    },
}

/// constant:<v> | power:<c>,<alpha> | file:<csv>
fn parse_weight(spec: &str, d_max: f64) -> Result<RadialWeight> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("weight '{spec}' missing ':'")))?;
    match kind {
        "constant" => {
            let v: f64 = rest
                .parse()
                .map_err(|_| Error::Parse(format!("bad constant weight value '{rest}'")))?;
            RadialWeight::constant(v, d_max)
        }
        "power" => {
            let (c, alpha) = rest
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("power weight '{rest}' needs c,alpha")))?;
            let c: f64 = c
                .parse()
                .map_err(|_| Error::Parse(format!("bad power coefficient '{c}'")))?;
            let alpha: f64 = alpha
                .parse()
                .map_err(|_| Error::Parse(format!("bad power exponent '{alpha}'")))?;
            RadialWeight::power(c, alpha, d_max)
        }
        "file" => RadialWeight::from_csv(std::path::Path::new(rest)),
        other => Err(Error::Parse(format!(
            "unknown weight kind '{other}' (expected constant | power | file)"
        ))),
    }
}

fn named_scene(name: &str) -> Result<SingularSetScene> {
    let square = Omega::Square {
        n: 2,
        half_width: 1.0,
    };
    let origin = TestSet::Points {
        points: vec![vec![0.0, 0.0]],
    };
    match name {
        "finite_points" => SingularSetScene::new(
            square,
            SingularSet::FinitePoints {
                points: vec![vec![0.5, 0.5], vec![-0.5, 0.5]],
            },
            TestSet::Points {
                points: vec![vec![0.0, -0.5]],
            },
        ),
        "half_cross" => SingularSetScene::new(square, SingularSet::HalfCross, origin),
        "axis_cross" => SingularSetScene::new(square, SingularSet::AxisCross, origin),
        "line_family" => SingularSetScene::new(
            square,
            SingularSet::LineFamily,
            TestSet::LeftStrip { x1_max: 0.0 },
        ),
        path => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("scene '{path}': {e}")))?;
            SingularSetScene::from_json(&text)
        }
    }
}

/// c = -Lambda(d)/d on the annulus, zero drift, identity principal part.
fn singular_annulus_coeffs(
    r_inner: f64,
    r_outer: f64,
    weight: RadialWeight,
) -> OperatorCoefficients {
    let domain = Domain::Annulus {
        center: vec![0.0, 0.0],
        r_inner,
        r_outer,
    };
    let dom_c = domain.clone();
    OperatorCoefficients::new(
        2,
        |_| DMatrix::identity(2, 2),
        |_| DVector::zeros(2),
        move |x| {
            let d = dom_c.growth_distance(x).max(1e-300);
            -weight.eval_clamped(d) / d
        },
        domain,
    )
}

fn emit<T: Serialize>(
    command: &str,
    seed: u64,
    report: &T,
    pass: bool,
    json_path: &Option<PathBuf>,
) -> Result<i32> {
    let doc = json!({
        "command": command,
        "seed": seed,
        "pass": pass,
        "report": report,
    });
    let text = serde_json::to_string_pretty(&doc)
        .map_err(|e| Error::Parse(format!("report serialization: {e}")))? + "\n";
    if let Some(path) = json_path {
        std::fs::write(path, &text)?;
    }
    print!("{text}");
    Ok(if pass { 0 } else { 1 })
}

fn run(cli: &Cli) -> Result<i32> {
    let seed = cli.seed;
    match &cli.command {
        Command::Barrier {
            n,
            r,
            weight,
            m,
            eps,
            coeffs,
            samples,
        } => {
            let weight = parse_weight(weight, *r)?;
            let eps = match eps {
                Some(e) => *e,
                None => admissible_epsilon(*n, *r, &weight)?,
            };
            let barrier = Barrier::new(*n, *r, eps, *m, weight.clone())?;
            let domain = Domain::Annulus {
                center: vec![0.0; *n],
                r_inner: r - eps,
                r_outer: *r,
            };
            let coeffs = family_by_name(coeffs, *n, domain, &weight)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let pts = annulus_samples(&barrier, *samples, &mut rng);
            let residual = residual_check(&barrier, &coeffs, &pts, 1e-8)?;
            let pass = residual.pass;
            let report = json!({
                "n": n,
                "r_outer": r,
                "k": barrier.k(),
                "eps": barrier.eps(),
                "f_eps": barrier.f_at_eps(),
                "normal_derivative": barrier.normal_derivative(),
                "residual": residual,
            });
            emit("barrier", seed, &report, pass, &cli.json)
        }
        Command::VerifyOperator {
            n,
            r,
            weight,
            coeffs,
            samples,
        } => {
            let weight = parse_weight(weight, *r)?;
            let domain = Domain::Ball {
                center: vec![0.0; *n],
                radius: *r,
            };
            let coeffs = family_by_name(coeffs, *n, domain, &weight)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let certificate = growth_check(&coeffs, &weight, *samples, &mut rng)?;
            let pass = certificate.pass();
            emit("verify-operator", seed, &certificate, pass, &cli.json)
        }
        Command::OutwardBall {
            scene,
            resolution,
            falsify,
        } => {
            let scene = named_scene(scene)?;
            if *falsify {
                let report = falsify_outward_ball(&scene, *resolution)?;
                let pass = report.falsified_at_resolution;
                emit("outward-ball", seed, &report, pass, &cli.json)
            } else {
                let report = outward_ball_search(&scene, *resolution)?;
                let pass = matches!(
                    report,
                    bpp_lab::geometry::BallSearchOutcome::Found { .. }
                );
                emit("outward-ball", seed, &report, pass, &cli.json)
            }
        }
        Command::Csmp {
            weight,
            r_inner,
            r_outer,
            nr,
            ntheta,
            grading,
            max_at,
        } => {
            let span = r_outer - r_inner;
            let weight = parse_weight(weight, span)?;
            let coeffs = singular_annulus_coeffs(*r_inner, *r_outer, weight);
            let grid = Grid::polar_annulus(&[0.0, 0.0], *r_inner, *r_outer, *nr, *ntheta, *grading)?;
            let mid = 0.5 * (r_inner + r_outer);
            let inner_max = match max_at.as_str() {
                "inner" => true,
                "outer" => false,
                other => {
                    return Err(Error::Parse(format!(
                        "--max-at must be inner or outer, got '{other}'"
                    )))
                }
            };
            let u = solve_dirichlet(
                &coeffs,
                &grid,
                &move |x: &[f64]| {
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    if (r < mid) == inner_max {
                        1.0
                    } else {
                        0.0
                    }
                },
                &|_| 0.0,
            )?;
            let report = csmp_check(&u, 1e-12);
            let pass = report.strict;
            emit("csmp", seed, &report, pass, &cli.json)
        }
        Command::Hopf {
            weight,
            r_inner,
            r_outer,
            nr,
            ntheta,
            grading,
            hseq,
        } => {
            let span = r_outer - r_inner;
            let weight = parse_weight(weight, span)?;
            let coeffs = singular_annulus_coeffs(*r_inner, *r_outer, weight);
            let grid = Grid::polar_annulus(&[0.0, 0.0], *r_inner, *r_outer, *nr, *ntheta, *grading)?;
            let mid = 0.5 * (r_inner + r_outer);
            let u = solve_dirichlet(
                &coeffs,
                &grid,
                &move |x: &[f64]| {
                    let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
                    if r > mid {
                        1.0
                    } else {
                        0.0
                    }
                },
                &|_| 0.0,
            )?;
            let hs: Vec<f64> = hseq
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::Parse(format!("bad step '{t}' in --hseq")))
                })
                .collect::<Result<_>>()?;
            let report = hopf_quotient(
                &|y: &[f64]| u.interpolate(y),
                &[*r_outer, 0.0],
                &[1.0, 0.0],
                &hs,
            )?;
            let pass = report.positive;
            emit("hopf", seed, &report, pass, &cli.json)
        }
        Command::Case { id, budget } => {
            let case = CaseStudy::instantiate(CaseId::parse(id)?);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let report = cases::verify(&case, *budget, &mut rng)?;
            let pass = report.all_match;
            emit("case", seed, &report, pass, &cli.json)
        }
        Command::Order {
            kappa,
            theta,
            c_harnack,
            n,
        } => {
            let kappa = match (kappa, theta) {
                (Some(k), None) => *k,
                (None, Some(t)) => chain_ratio(*t),
                _ => {
                    return Err(Error::Parse(
                        "provide exactly one of --kappa or --theta".into(),
                    ))
                }
            };
            let report = order_certificate(kappa, *c_harnack, *n, &[])?;
            emit("order", seed, &report, true, &cli.json)
        }
    }
}

fn main() {
    if let Ok(threads) = std::env::var("BPP_LAB_THREADS") {
        if let Ok(threads) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => std::process::exit(code),
        Err(Error::Parse(msg)) => {
            eprintln!("usage error: {msg}");
            std::process::exit(2);
        }
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(1);
        }
    }
}
