//! Scaling experiments: solve one objective over a grid of dimensions,
//! tolerances and seeds, then fit how the stopping index grows as `ε` shrinks.

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::objective::{builtin_with, BuiltinParams, Objective};
use crate::solver::{run, AcceptanceRule, Algorithm, SolverConfig, Stopping, TerminalReason};

pub const CSV_HEADER: [&str; 11] =
    ["objective", "n", "epsilon", "seed", "N_r", "N_s", "N_eps", "evals", "final_gap", "reason", "wall_ms"];

/// Acceptance rule with `L` left to the objective's metadata.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RuleTemplate {
    Theoretical { beta: f64 },
    Practical { eta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub objective: String,
    #[serde(default)]
    pub params: BuiltinParams,
    pub dims: Vec<usize>,
    /// Strictly decreasing.
    pub epsilons: Vec<f64>,
    pub repetitions: usize,
    pub base_seed: u64,
    /// Start points are drawn uniformly from `x* + [−w, w]ⁿ`.
    pub start_half_width: f64,
    pub delta0: f64,
    pub gamma: f64,
    pub rule: RuleTemplate,
    pub stopping: Stopping,
    pub max_iterations: u64,
    pub max_evaluations: u64,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.dims.is_empty() || self.dims.contains(&0) {
            return Err(invalid("dimension list must be nonempty and positive"));
        }
        if self.epsilons.is_empty() || self.epsilons.iter().any(|e| !(*e > 0.0)) {
            return Err(invalid("epsilon list must be nonempty and positive"));
        }
        if self.epsilons.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(invalid("epsilon list must be strictly decreasing"));
        }
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if !(self.start_half_width >= 0.0) {
            return Err(invalid("start half-width must be nonnegative"));
        }
        Ok(())
    }

    /// Geometric grid `from, from·ratio, …` with `count` points.
    pub fn geometric_epsilons(from: f64, ratio: f64, count: usize) -> Vec<f64> {
        (0..count).map(|i| from * ratio.powi(i as i32)).collect()
    }

    fn seed(&self, rep: usize) -> u64 {
        self.base_seed.wrapping_add(rep as u64)
    }

    fn start_point(&self, n: usize, seed: u64, x_star: &Option<Vec<f64>>) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(n as u64);
        let w = self.start_half_width;
        (0..n)
            .map(|i| {
                let center = x_star.as_ref().map_or(0.0, |x| x[i]);
                center + if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 }
            })
            .collect()
    }

    /// Solver configuration for one cell.
    pub fn config_for(&self, objective: &dyn Objective, n: usize, epsilon: f64, seed: u64) -> Result<SolverConfig> {
        let rule = match self.rule {
            RuleTemplate::Practical { eta } => AcceptanceRule::Practical { eta },
            RuleTemplate::Theoretical { beta } => AcceptanceRule::Theoretical {
                beta,
                lipschitz: objective
                    .metadata()
                    .lipschitz
                    .ok_or_else(|| invalid("theoretical mode needs an objective with known L"))?,
            },
        };
        Ok(SolverConfig {
            n,
            start: self.start_point(n, seed, &objective.metadata().x_star),
            delta0: self.delta0,
            gamma: self.gamma,
            rule,
            epsilon,
            max_iterations: self.max_iterations,
            max_evaluations: self.max_evaluations,
            algorithm: Algorithm::Rssm,
            stopping: self.stopping,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub objective: String,
    pub n: usize,
    pub epsilon: f64,
    pub seed: u64,
    pub n_r: u64,
    pub n_s: u64,
    /// `None` when the run did not reach `ε`.
    pub n_eps: Option<u64>,
    pub evals: u64,
    pub final_gap: Option<f64>,
    pub reason: TerminalReason,
    pub wall_ms: f64,
}

impl ScalingRow {
    pub fn csv_fields(&self) -> [String; 11] {
        [
            self.objective.clone(),
            self.n.to_string(),
            format!("{:e}", self.epsilon),
            self.seed.to_string(),
            self.n_r.to_string(),
            self.n_s.to_string(),
            self.n_eps.map(|k| k.to_string()).unwrap_or_default(),
            self.evals.to_string(),
            self.final_gap.map(|g| format!("{g:e}")).unwrap_or_default(),
            self.reason.as_str().to_string(),
            format!("{:.3}", self.wall_ms),
        ]
    }

    fn usable(&self) -> bool {
        self.reason == TerminalReason::EpsilonReached && self.n_eps.is_some()
    }
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Pearson correlation of `(x, y)`.
    pub correlation: f64,
    pub points: usize,
}

pub const MIN_FIT_POINTS: usize = 4;

pub fn ols(xs: &[f64], ys: &[f64]) -> Option<LinearFit> {
    if xs.len() != ys.len() || xs.len() < MIN_FIT_POINTS {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let correlation = if syy == 0.0 { 0.0 } else { sxy / (sxx * syy).sqrt() };
    Some(LinearFit { slope, intercept: my - slope * mx, correlation, points: xs.len() })
}

/// Fits for one dimension, over the per-`ε` means of usable rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionFit {
    pub n: usize,
    /// `log N_ε` against `log(1/ε)`; the slope is the fitted exponent.
    pub power_law: Option<LinearFit>,
    /// `N_ε` against `log(1/ε)`.
    pub semilog: Option<LinearFit>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub plan: ExperimentPlan,
    /// Sorted by `(n, ε descending, seed)`.
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<DimensionFit>,
    /// Rows left out of the fits because the run ended before reaching `ε`.
    pub excluded: Vec<ScalingRow>,
}

impl ScalingResult {
    pub fn fit_for(&self, n: usize) -> Option<&DimensionFit> {
        self.fits.iter().find(|f| f.n == n)
    }

    /// CSV text with the fixed header. Every column except `wall_ms` is a
    /// deterministic function of the plan.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER)?;
        for row in &self.rows {
            w.write_record(row.csv_fields())?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut file = std::fs::File::create(path)?;
        file.write_all(self.to_csv()?.as_bytes())?;
        Ok(())
    }
}

fn fit_dimension(n: usize, rows: &[ScalingRow], epsilons: &[f64]) -> DimensionFit {
    let mut log_inv_eps = Vec::new();
    let mut mean_n = Vec::new();
    for &eps in epsilons {
        let cell: Vec<f64> = rows
            .iter()
            .filter(|r| r.n == n && r.epsilon == eps && r.usable())
            .map(|r| r.n_eps.unwrap() as f64)
            .collect();
        if !cell.is_empty() {
            log_inv_eps.push((1.0 / eps).ln());
            mean_n.push(cell.iter().sum::<f64>() / cell.len() as f64);
        }
    }
    let positive: Vec<(f64, f64)> =
        log_inv_eps.iter().zip(&mean_n).filter(|(_, &y)| y > 0.0).map(|(&x, &y)| (x, y.ln())).collect();
    let (px, py): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
    DimensionFit { n, power_law: ols(&px, &py), semilog: ols(&log_inv_eps, &mean_n) }
}

pub fn run_scaling(plan: &ExperimentPlan) -> Result<ScalingResult> {
    plan.validate()?;
    let mut cells = Vec::new();
    for &n in &plan.dims {
        for &eps in &plan.epsilons {
            for rep in 0..plan.repetitions {
                cells.push((n, eps, plan.seed(rep)));
            }
        }
    }
    let mut rows = cells
        .into_par_iter()
        .map(|(n, epsilon, seed)| -> Result<ScalingRow> {
            let params = BuiltinParams { seed: Some(seed), ..plan.params.clone() };
            let objective = builtin_with(&plan.objective, n, &params)?;
            let cfg = plan.config_for(&objective, n, epsilon, seed)?;
            let started = Instant::now();
            let trace = run(&objective, &cfg)?;
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            Ok(ScalingRow {
                objective: plan.objective.clone(),
                n,
                epsilon,
                seed,
                n_r: trace.last.reflections,
                n_s: trace.last.shrinks,
                n_eps: trace.last.n_eps,
                evals: trace.last.evaluations,
                final_gap: trace.last.average_gap,
                reason: trace.reason,
                wall_ms,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| a.n.cmp(&b.n).then(b.epsilon.total_cmp(&a.epsilon)).then(a.seed.cmp(&b.seed)));

    let fits = plan.dims.iter().map(|&n| fit_dimension(n, &rows, &plan.epsilons)).collect();
    let excluded = rows.iter().filter(|r| !r.usable()).cloned().collect();
    Ok(ScalingResult { plan: plan.clone(), rows, fits, excluded })
}

/// Euclidean distance of a point from the objective's minimizer, if known.
pub fn distance_to_minimizer(objective: &dyn Objective, x: &[f64]) -> Option<f64> {
    let x_star = objective.metadata().x_star.as_ref()?;
    Some((DVector::from_column_slice(x) - DVector::from_column_slice(x_star)).norm())
}
