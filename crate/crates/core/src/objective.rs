//! Objective functions and the built-in test suite.
//!
//! Every built-in objective carries certified metadata: a global Lipschitz
//! constant `L` of its gradient, the optimal value `f*` and minimizer where
//! known, the curvature class, and for PL or strongly convex functions the
//! constant `μ`. Those values are what the theoretical acceptance rule and the
//! trace auditors consume, so each one is derived analytically below.

use std::sync::atomic::{AtomicU64, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::simplex::Point;

/// Curvature regime an objective is certified to satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CurvatureClass {
    Nonconvex,
    Pl,
    Convex,
    StronglyConvex,
}

impl CurvatureClass {
    pub fn is_convex(self) -> bool {
        matches!(self, CurvatureClass::Convex | CurvatureClass::StronglyConvex)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveMeta {
    pub lipschitz: Option<f64>,
    /// PL constant, or the strong-convexity modulus for strongly convex functions.
    pub mu: Option<f64>,
    pub f_star: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub class: CurvatureClass,
}

/// A function to be minimized.
///
/// `evaluate` must be deterministic and is the only call that counts toward
/// [`Objective::evaluations`]; gradients are for auditing only.
pub trait Objective: Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn evaluate(&self, x: &Point) -> f64;
    fn gradient(&self, _x: &Point) -> Option<DVector<f64>> {
        None
    }
    fn metadata(&self) -> &ObjectiveMeta;
    fn evaluations(&self) -> u64;
}

/// Wraps a closure as a counted objective.
pub struct FnObjective<F> {
    name: String,
    dim: usize,
    f: F,
    meta: ObjectiveMeta,
    evals: AtomicU64,
}

impl<F: Fn(&Point) -> f64 + Sync> FnObjective<F> {
    pub fn new(name: impl Into<String>, dim: usize, meta: ObjectiveMeta, f: F) -> Self {
        FnObjective { name: name.into(), dim, f, meta, evals: AtomicU64::new(0) }
    }
}

impl<F: Fn(&Point) -> f64 + Sync> Objective for FnObjective<F> {
    fn name(&self) -> &str {
        &self.name
    }
    fn dim(&self) -> usize {
        self.dim
    }
    fn evaluate(&self, x: &Point) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        (self.f)(x)
    }
    fn metadata(&self) -> &ObjectiveMeta {
        &self.meta
    }
    fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}

/// Registry of built-in objectives: `(name, description)`.
pub const BUILTINS: &[(&str, &str)] = &[
    ("quad-iso", "0.5*L*|x - x*|^2; strongly convex, mu = L, f* = 0"),
    ("quad-spectrum", "0.5*(x - x*)'H(x - x*), seeded rotation, eigenvalues log-spaced in [mu, L]"),
    ("logsumexp", "log sum_i (exp(x_i) + exp(-x_i)); convex, L = 1, f* = log(2n)"),
    ("sin-quad", "sum_i x_i^2 + 3 sin^2(x_i); nonconvex PL, L = 8, mu = 0.175, f* = 0"),
    ("damped-sine", "sum_i 0.1 x_i^2 + sin(x_i); nonconvex, L = 1.2, f* unknown"),
];

/// PL constant declared for `sin-quad`.
///
/// The function is separable, so the PL ratio `½‖∇f‖²/(f − f*)` is bounded
/// below by the minimum of the one-dimensional ratio
/// `½(2t + 3 sin 2t)² / (t² + 3 sin² t)`. A dense grid search over
/// `[−60, 60]` puts that minimum at `0.175531` (near `|t| ≈ 2.2017`); the ratio
/// tends to 2 for large `|t|` and to 8 at the origin.
pub const SIN_QUAD_PL: f64 = 0.175;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BuiltinParams {
    pub lipschitz: Option<f64>,
    pub mu: Option<f64>,
    pub x_star: Option<Vec<f64>>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
enum Kind {
    Quadratic { h: DMatrix<f64>, x_star: DVector<f64>, lambda_min: f64 },
    LogSumExp,
    SinQuad,
    DampedSine,
}

#[derive(Debug)]
pub struct BuiltinObjective {
    name: String,
    dim: usize,
    kind: Kind,
    meta: ObjectiveMeta,
    evals: AtomicU64,
}

pub fn builtin(name: &str, n: usize, seed: Option<u64>) -> Result<BuiltinObjective> {
    builtin_with(name, n, &BuiltinParams { seed, ..Default::default() })
}

pub fn builtin_with(name: &str, n: usize, params: &BuiltinParams) -> Result<BuiltinObjective> {
    if n == 0 {
        return Err(invalid("objective dimension must be at least 1"));
    }
    let x_star = match &params.x_star {
        Some(v) if v.len() != n => return Err(invalid(format!("x* has length {}, expected {n}", v.len()))),
        Some(v) => DVector::from_column_slice(v),
        None => DVector::zeros(n),
    };
    let positive = |v: f64, what: &str| -> Result<f64> {
        if v > 0.0 && v.is_finite() {
            Ok(v)
        } else {
            Err(invalid(format!("{what} must be positive, got {v}")))
        }
    };

    let (kind, meta) = match name {
        "quad-iso" => {
            let l = positive(params.lipschitz.unwrap_or(1.0), "L")?;
            let meta = ObjectiveMeta {
                lipschitz: Some(l),
                mu: Some(l),
                f_star: Some(0.0),
                x_star: Some(x_star.iter().copied().collect()),
                class: CurvatureClass::StronglyConvex,
            };
            let h = DMatrix::identity(n, n) * l;
            (Kind::Quadratic { h, x_star, lambda_min: l }, meta)
        }
        "quad-spectrum" => {
            let l = positive(params.lipschitz.unwrap_or(10.0), "L")?;
            let mu = positive(params.mu.unwrap_or(0.1), "mu")?;
            if mu > l {
                return Err(invalid("quad-spectrum needs mu <= L"));
            }
            let eigenvalues: Vec<f64> =
                if n == 1 { vec![l] } else { (0..n).map(|i| mu * (l / mu).powf(i as f64 / (n - 1) as f64)).collect() };
            let lambda_min = eigenvalues[0];
            let q = seeded_orthogonal(n, params.seed.unwrap_or(0));
            let h = &q * DMatrix::from_diagonal(&DVector::from_vec(eigenvalues)) * q.transpose();
            let h = (&h + h.transpose()) * 0.5;
            let meta = ObjectiveMeta {
                lipschitz: Some(l),
                mu: Some(lambda_min),
                f_star: Some(0.0),
                x_star: Some(x_star.iter().copied().collect()),
                class: CurvatureClass::StronglyConvex,
            };
            (Kind::Quadratic { h, x_star, lambda_min }, meta)
        }
        "logsumexp" => {
            // Hessian is diag(2cosh x_i / Z) − ggᵀ ⪯ I, so L = 1.
            let meta = ObjectiveMeta {
                lipschitz: Some(1.0),
                mu: None,
                f_star: Some((2.0 * n as f64).ln()),
                x_star: Some(vec![0.0; n]),
                class: CurvatureClass::Convex,
            };
            (Kind::LogSumExp, meta)
        }
        "sin-quad" => {
            // f'' = 2 + 6 cos 2t ∈ [−4, 8]
            let meta = ObjectiveMeta {
                lipschitz: Some(8.0),
                mu: Some(SIN_QUAD_PL),
                f_star: Some(0.0),
                x_star: Some(vec![0.0; n]),
                class: CurvatureClass::Pl,
            };
            (Kind::SinQuad, meta)
        }
        "damped-sine" => {
            // f'' = 0.2 − sin t ∈ [−0.8, 1.2]
            let meta = ObjectiveMeta {
                lipschitz: Some(1.2),
                mu: None,
                f_star: None,
                x_star: None,
                class: CurvatureClass::Nonconvex,
            };
            (Kind::DampedSine, meta)
        }
        other => return Err(invalid(format!("unknown objective '{other}'"))),
    };
    Ok(BuiltinObjective { name: name.to_string(), dim: n, kind, meta, evals: AtomicU64::new(0) })
}

fn seeded_orthogonal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(&mut rng));
    let qr = a.qr();
    let (mut q, r) = (qr.q(), qr.r());
    // fix column signs so Q does not depend on the QR sign convention
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

impl BuiltinObjective {
    fn value(&self, x: &Point) -> f64 {
        match &self.kind {
            Kind::Quadratic { h, x_star, .. } => {
                let d = x - x_star;
                0.5 * d.dot(&(h * &d))
            }
            Kind::LogSumExp => {
                let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let z: f64 = x.iter().map(|&v| (v - m).exp() + (-v - m).exp()).sum();
                m + z.ln()
            }
            Kind::SinQuad => x.iter().map(|&t| t * t + 3.0 * t.sin().powi(2)).sum(),
            Kind::DampedSine => x.iter().map(|&t| 0.1 * t * t + t.sin()).sum(),
        }
    }

    /// Radius of the sublevel set `{x : f(x) ≤ level}` around the minimizer.
    ///
    /// Exact for the quadratics. For `logsumexp` it uses `2cosh t ≥ 2 + t²`,
    /// which gives `‖x‖² ≤ e^level − 2n` on the sublevel set.
    pub fn sublevel_radius(&self, level: f64) -> Result<f64> {
        let f_star = self.meta.f_star.unwrap_or(0.0);
        match &self.kind {
            Kind::Quadratic { lambda_min, .. } => Ok((2.0 * (level - f_star).max(0.0) / lambda_min).sqrt()),
            Kind::LogSumExp => {
                if level <= f_star {
                    return Ok(0.0);
                }
                Ok((level.exp() - 2.0 * self.dim as f64).max(0.0).sqrt())
            }
            _ => Err(Error::Unsupported(format!("no sublevel radius available for '{}'", self.name))),
        }
    }

    /// The Hessian of the quadratic built-ins.
    pub fn hessian(&self) -> Option<&DMatrix<f64>> {
        match &self.kind {
            Kind::Quadratic { h, .. } => Some(h),
            _ => None,
        }
    }
}

pub fn sublevel_radius(obj: &BuiltinObjective, level: f64) -> Result<f64> {
    obj.sublevel_radius(level)
}

impl Objective for BuiltinObjective {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn evaluate(&self, x: &Point) -> f64 {
        self.evals.fetch_add(1, Ordering::Relaxed);
        self.value(x)
    }

    fn gradient(&self, x: &Point) -> Option<DVector<f64>> {
        Some(match &self.kind {
            Kind::Quadratic { h, x_star, .. } => h * (x - x_star),
            Kind::LogSumExp => {
                let m = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let z: f64 = x.iter().map(|&v| (v - m).exp() + (-v - m).exp()).sum();
                x.map(|v| ((v - m).exp() - (-v - m).exp()) / z)
            }
            Kind::SinQuad => x.map(|t| 2.0 * t + 3.0 * (2.0 * t).sin()),
            Kind::DampedSine => x.map(|t| 0.2 * t + t.cos()),
        })
    }

    fn metadata(&self) -> &ObjectiveMeta {
        &self.meta
    }

    fn evaluations(&self) -> u64 {
        self.evals.load(Ordering::Relaxed)
    }
}
