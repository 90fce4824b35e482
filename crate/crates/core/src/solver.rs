//! The regular simplicial search and its reflection-only baseline.
//!
//! Each iteration sorts the vertices by value, reflects the worst one through
//! the opposite face, and keeps the reflection only if it decreases the worst
//! value by a margin proportional to `δ_k²`. Otherwise every vertex but the
//! best moves toward the best by the factor `γ`. Either way the simplex stays
//! regular, with radius `δ₀ γ^{N_s}`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::interp::simplex_gradient;
use crate::objective::Objective;
use crate::simplex::{make_regular_simplex, Point, Simplex};

/// Relative regularity deviation past which a run is aborted.
pub const REGULARITY_LIMIT: f64 = 1e-6;
/// Practical mode stops once `δ_k < RADIUS_FLOOR · δ₀`.
pub const RADIUS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum AcceptanceRule {
    /// Accept iff `f_r − f_w ≤ −(2n+2)/n · β L δ²`.
    Theoretical { beta: f64, lipschitz: f64 },
    /// Accept iff `f_r − f_w ≤ −η δ²`.
    Practical { eta: f64 },
}

impl AcceptanceRule {
    /// The (negative) right-hand side of the acceptance test.
    pub fn threshold(&self, n: usize, delta: f64) -> f64 {
        let d2 = delta * delta;
        match *self {
            AcceptanceRule::Theoretical { beta, lipschitz } => {
                let nf = n as f64;
                -(2.0 * nf + 2.0) / nf * beta * lipschitz * d2
            }
            AcceptanceRule::Practical { eta } => -eta * d2,
        }
    }

    pub fn accepts(&self, f_r: f64, f_worst: f64, n: usize, delta: f64) -> bool {
        f_r - f_worst <= self.threshold(n, delta)
    }

    pub fn is_theoretical(&self) -> bool {
        matches!(self, AcceptanceRule::Theoretical { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Rssm,
    /// Every reflection is accepted; no shrinking.
    ReflectionOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stopping {
    /// `‖∇f̂(c_k)‖ ≤ ε`
    #[default]
    SimplexGradient,
    /// `‖∇f(c_k)‖ ≤ ε`; needs an objective with an exact gradient.
    TrueGradient,
    /// `d̄_k = mean f(x_i) − f* ≤ ε`; needs `f*`.
    AverageGap,
    None,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub n: usize,
    /// Centroid of the initial simplex.
    pub start: Vec<f64>,
    pub delta0: f64,
    pub gamma: f64,
    pub rule: AcceptanceRule,
    pub epsilon: f64,
    pub max_iterations: u64,
    /// Checked before each step, so a run may overshoot by at most `n+1`.
    pub max_evaluations: u64,
    pub algorithm: Algorithm,
    pub stopping: Stopping,
}

impl SolverConfig {
    /// Practical-mode defaults centred at `start`.
    pub fn new(start: Vec<f64>) -> Self {
        SolverConfig {
            n: start.len(),
            start,
            delta0: 1.0,
            gamma: 0.5,
            rule: AcceptanceRule::Practical { eta: 1e-3 },
            epsilon: 1e-6,
            max_iterations: 100_000,
            max_evaluations: 1_000_000,
            algorithm: Algorithm::Rssm,
            stopping: Stopping::SimplexGradient,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.start.len() != self.n {
            return Err(invalid(format!("start has length {}, expected {}", self.start.len(), self.n)));
        }
        if self.start.iter().any(|x| !x.is_finite()) {
            return Err(invalid("start must be finite"));
        }
        if !(self.delta0 > 0.0 && self.delta0.is_finite()) {
            return Err(invalid("delta0 must be positive"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(invalid(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        match self.rule {
            AcceptanceRule::Theoretical { beta, lipschitz } => {
                if !(beta > 0.0) {
                    return Err(invalid("beta must be positive"));
                }
                if !(lipschitz > 0.0 && lipschitz.is_finite()) {
                    return Err(invalid("theoretical mode needs a positive L"));
                }
            }
            AcceptanceRule::Practical { eta } => {
                if !(eta > 0.0) {
                    return Err(invalid("eta must be positive"));
                }
            }
        }
        if !(self.epsilon > 0.0) {
            return Err(invalid("epsilon must be positive"));
        }
        if self.max_iterations == 0 || self.max_evaluations == 0 {
            return Err(invalid("budgets must be positive"));
        }
        Ok(())
    }
}

/// `true` iff the reflection meets the sufficient-decrease test of `cfg`.
pub fn accept_reflection(f_r: f64, f_worst: f64, cfg: &SolverConfig, delta: f64) -> bool {
    cfg.rule.accepts(f_r, f_worst, cfg.n, delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    Reflection,
    Shrink,
}

/// Quantities at iteration `k`, before the step is applied.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub k: u64,
    pub kind: StepKind,
    pub delta: f64,
    /// `S = Σ f(x_i)`
    pub s: f64,
    /// `f(x_{n+1}) − (1/n) Σ_{i≤n} f(x_i)`
    pub v: f64,
    /// `f(x_r) − (1/n) Σ_{i≤n} f(x_i)`
    pub v_r: f64,
    pub f_best: f64,
    pub f_worst: f64,
    pub f_reflected: f64,
    pub simplex_gradient_norm: f64,
    pub true_gradient_norm: Option<f64>,
    pub accepted: bool,
}

#[derive(Debug, Clone)]
pub struct SolverState {
    simplex: Simplex,
    values: Vec<f64>,
    k: u64,
    n_r: u64,
    n_s: u64,
    eval_count: u64,
}

fn checked_eval<O: Objective + ?Sized>(objective: &O, x: &Point) -> Result<f64> {
    let value = objective.evaluate(x);
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Evaluation { point: x.iter().copied().collect(), value })
    }
}

impl SolverState {
    /// Builds the initial regular simplex around `cfg.start` and evaluates it.
    pub fn initial<O: Objective + ?Sized>(objective: &O, cfg: &SolverConfig) -> Result<Self> {
        cfg.validate()?;
        if objective.dim() != cfg.n {
            return Err(invalid(format!("objective has dimension {}, config has {}", objective.dim(), cfg.n)));
        }
        let simplex = make_regular_simplex(&DVector::from_column_slice(&cfg.start), cfg.delta0, cfg.n)?;
        let values = simplex.vertices().iter().map(|x| checked_eval(objective, x)).collect::<Result<Vec<_>>>()?;
        let mut state = SolverState { simplex, values, k: 0, n_r: 0, n_s: 0, eval_count: cfg.n as u64 + 1 };
        state.sort();
        Ok(state)
    }

    fn sort(&mut self) {
        let mut order: Vec<usize> = (0..self.values.len()).collect();
        order.sort_by(|&a, &b| self.values[a].total_cmp(&self.values[b]));
        if order.iter().enumerate().all(|(i, &j)| i == j) {
            return;
        }
        let vertices = order.iter().map(|&i| self.simplex.vertex(i).clone()).collect();
        self.values = order.iter().map(|&i| self.values[i]).collect();
        self.simplex = Simplex::with_radius(vertices, self.simplex.radius()).expect("permutation of a valid simplex");
    }

    pub fn simplex(&self) -> &Simplex {
        &self.simplex
    }

    /// Cached values, ascending, aligned with the simplex vertices.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.simplex.radius()
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn reflections(&self) -> u64 {
        self.n_r
    }

    pub fn shrinks(&self) -> u64 {
        self.n_s
    }

    /// Objective evaluations spent so far, including the rejected trial point
    /// of every shrink iteration.
    pub fn eval_count(&self) -> u64 {
        self.eval_count
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }

    /// `‖∇f̂(c_k)‖` for the current simplex and cached values.
    pub fn stopping_gradient_norm(&self) -> Result<f64> {
        Ok(simplex_gradient(&self.simplex, &self.values)?.norm())
    }

    /// Performs one iteration and returns its record.
    pub fn step<O: Objective + ?Sized>(&mut self, objective: &O, cfg: &SolverConfig) -> Result<IterationRecord> {
        let n = cfg.n;
        let delta = self.delta();
        let f_best = self.values[0];
        let f_worst = self.values[n];
        let best_mean = self.values[..n].iter().sum::<f64>() / n as f64;
        let s = self.sum();
        let simplex_gradient_norm = self.stopping_gradient_norm()?;
        let true_gradient_norm = objective.gradient(&self.simplex.centroid()).map(|g| g.norm());

        let x_r = self.simplex.reflect_worst(n)?;
        let f_r = checked_eval(objective, &x_r)?;
        self.eval_count += 1;

        let accepted = match cfg.algorithm {
            Algorithm::ReflectionOnly => true,
            Algorithm::Rssm => cfg.rule.accepts(f_r, f_worst, n, delta),
        };
        if accepted {
            self.simplex = self.simplex.replace_vertex(n, x_r)?;
            self.values[n] = f_r;
            self.n_r += 1;
        } else {
            self.simplex = self.simplex.shrink_toward_best(0, cfg.gamma)?;
            for i in 1..=n {
                self.values[i] = checked_eval(objective, self.simplex.vertex(i))?;
            }
            self.eval_count += n as u64;
            self.n_s += 1;
        }
        self.sort();

        let record = IterationRecord {
            k: self.k,
            kind: if accepted { StepKind::Reflection } else { StepKind::Shrink },
            delta,
            s,
            v: f_worst - best_mean,
            v_r: f_r - best_mean,
            f_best,
            f_worst,
            f_reflected: f_r,
            simplex_gradient_norm,
            true_gradient_norm,
            accepted,
        };
        self.k += 1;

        let deviation = self.simplex.regularity_report().max_deviation();
        if !(deviation <= REGULARITY_LIMIT) {
            return Err(Error::RegularityFailure { deviation, limit: REGULARITY_LIMIT });
        }
        Ok(record)
    }
}

/// `v_r + v = f(x_r) + f(x_{n+1}) − (2/n) Σ_{i≤n} f(x_i)` for ascending `values`.
pub fn reflection_gap_sum(values: &[f64], f_r: f64) -> f64 {
    let n = values.len() - 1;
    f_r + values[n] - 2.0 / n as f64 * values[..n].iter().sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminalReason {
    EpsilonReached,
    Budget,
    RegularityFailure,
    RadiusFloor,
}

impl TerminalReason {
    pub fn as_str(self) -> &'static str {
        match self {
            TerminalReason::EpsilonReached => "epsilon-reached",
            TerminalReason::Budget => "budget",
            TerminalReason::RegularityFailure => "regularity-failure",
            TerminalReason::RadiusFloor => "radius-floor",
        }
    }
}

/// State after the last step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinalState {
    pub k: u64,
    pub delta: f64,
    pub s: f64,
    pub f_best: f64,
    pub f_worst: f64,
    pub best_point: Vec<f64>,
    pub centroid: Vec<f64>,
    pub simplex_gradient_norm: Option<f64>,
    pub true_gradient_norm: Option<f64>,
    /// `mean f(x_i) − f*`, when `f*` is known.
    pub average_gap: Option<f64>,
    pub reflections: u64,
    pub shrinks: u64,
    pub evaluations: u64,
    /// Index at which the stopping test first passed.
    pub n_eps: Option<u64>,
    /// Populated when the run ended in a regularity failure.
    pub regularity_deviation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub objective: String,
    pub config: SolverConfig,
    pub records: Vec<IterationRecord>,
    pub reason: TerminalReason,
    #[serde(rename = "final")]
    pub last: FinalState,
}

impl Trace {
    /// `S` at iteration `k`, for `k ≤ records.len()`.
    pub fn sum_at(&self, k: usize) -> f64 {
        self.records.get(k).map_or(self.last.s, |r| r.s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `objective,n,epsilon,N_r,N_s,evals,final_gap,reason`; `final_gap` is the
    /// average gap when `f*` is known and empty otherwise.
    pub fn summary_line(&self) -> String {
        let gap = self.last.average_gap.map(|g| format!("{g:e}")).unwrap_or_default();
        format!(
            "{},{},{:e},{},{},{},{},{}",
            self.objective,
            self.config.n,
            self.config.epsilon,
            self.last.reflections,
            self.last.shrinks,
            self.last.evaluations,
            gap,
            self.reason.as_str()
        )
    }
}

pub const SUMMARY_HEADER: &str = "objective,n,epsilon,N_r,N_s,evals,final_gap,reason";

fn stopping_measure<O: Objective + ?Sized>(
    state: &SolverState,
    objective: &O,
    stopping: Stopping,
) -> Result<Option<f64>> {
    Ok(match stopping {
        Stopping::SimplexGradient => Some(state.stopping_gradient_norm()?),
        Stopping::TrueGradient => Some(
            objective
                .gradient(&state.simplex.centroid())
                .ok_or_else(|| Error::Unsupported("true-gradient stopping needs an exact gradient".into()))?
                .norm(),
        ),
        Stopping::AverageGap => {
            let f_star = objective
                .metadata()
                .f_star
                .ok_or_else(|| Error::Unsupported("average-gap stopping needs f*".into()))?;
            Some(state.mean() - f_star)
        }
        Stopping::None => None,
    })
}

/// Runs the configured algorithm to termination.
///
/// A regularity failure ends the run with [`TerminalReason::RegularityFailure`]
/// rather than an error; evaluation errors and invalid configurations are
/// returned as errors.
pub fn run<O: Objective + ?Sized>(objective: &O, cfg: &SolverConfig) -> Result<Trace> {
    let mut state = SolverState::initial(objective, cfg)?;
    if cfg.stopping == Stopping::TrueGradient && objective.gradient(&state.simplex.centroid()).is_none() {
        return Err(Error::Unsupported("true-gradient stopping needs an exact gradient".into()));
    }
    if cfg.stopping == Stopping::AverageGap && objective.metadata().f_star.is_none() {
        return Err(Error::Unsupported("average-gap stopping needs f*".into()));
    }
    let mut records = Vec::new();
    let mut regularity_deviation = None;
    let mut n_eps = None;
    let reason = loop {
        if let Some(m) = stopping_measure(&state, objective, cfg.stopping)? {
            if m <= cfg.epsilon {
                n_eps = Some(state.k);
                break TerminalReason::EpsilonReached;
            }
        }
        if state.k >= cfg.max_iterations || state.eval_count >= cfg.max_evaluations {
            break TerminalReason::Budget;
        }
        if !cfg.rule.is_theoretical() && state.delta() < RADIUS_FLOOR * cfg.delta0 {
            break TerminalReason::RadiusFloor;
        }
        match state.step(objective, cfg) {
            Ok(record) => records.push(record),
            Err(Error::RegularityFailure { deviation, .. }) => {
                regularity_deviation = Some(deviation);
                break TerminalReason::RegularityFailure;
            }
            Err(e) => return Err(e),
        }
    };

    let centroid = state.simplex.centroid();
    let last = FinalState {
        k: state.k,
        delta: state.delta(),
        s: state.sum(),
        f_best: state.values[0],
        f_worst: state.values[cfg.n],
        best_point: state.simplex.vertex(0).iter().copied().collect(),
        centroid: centroid.iter().copied().collect(),
        simplex_gradient_norm: state.stopping_gradient_norm().ok(),
        true_gradient_norm: objective.gradient(&centroid).map(|g| g.norm()),
        average_gap: objective.metadata().f_star.map(|f| state.mean() - f),
        reflections: state.n_r,
        shrinks: state.n_s,
        evaluations: state.eval_count,
        n_eps,
        regularity_deviation,
    };
    Ok(Trace { objective: objective.name().to_string(), config: cfg.clone(), records, reason, last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{builtin, CurvatureClass, FnObjective, ObjectiveMeta};
    use nalgebra::dvector;

    fn meta(l: f64, f_star: Option<f64>) -> ObjectiveMeta {
        ObjectiveMeta { lipschitz: Some(l), mu: None, f_star, x_star: None, class: CurvatureClass::Nonconvex }
    }

    fn theoretical(start: Vec<f64>, beta: f64, l: f64) -> SolverConfig {
        SolverConfig { rule: AcceptanceRule::Theoretical { beta, lipschitz: l }, ..SolverConfig::new(start) }
    }

    #[test]
    fn acceptance_threshold_examples() {
        let rule = AcceptanceRule::Theoretical { beta: 1.0, lipschitz: 1.0 };
        assert_eq!(rule.threshold(2, 1.0), -3.0);
        assert!(rule.accepts(-3.5, 0.0, 2, 1.0));
        assert!(rule.accepts(-3.0, 0.0, 2, 1.0));
        assert!(!rule.accepts(-2.999, 0.0, 2, 1.0));

        let practical = AcceptanceRule::Practical { eta: 0.1 };
        assert!(!practical.accepts(-0.02, 0.0, 1, 0.5));
        assert!(practical.accepts(-0.025, 0.0, 1, 0.5));
    }

    #[test]
    fn one_dimensional_linear_step() {
        let f = FnObjective::new("x", 1, meta(1e-6, None), |x: &Point| x[0]);
        let cfg = theoretical(vec![0.0], 1.0, 1e-6);
        let mut state = SolverState::initial(&f, &cfg).unwrap();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12;
        assert!(close(state.values()[0], -1.0) && close(state.values()[1], 1.0));
        let rec = state.step(&f, &cfg).unwrap();
        assert!(rec.accepted && rec.kind == StepKind::Reflection);
        assert!(close(rec.f_reflected, -3.0));
        assert!(close(state.values()[0], -3.0) && close(state.values()[1], -1.0));
        assert!(close(state.simplex().vertex(0)[0], -3.0));
        assert_eq!(state.delta(), 1.0);
        assert_eq!(state.eval_count(), 3);
    }

    #[test]
    fn centred_quadratic_forces_a_shrink() {
        let f = FnObjective::new("sq", 2, meta(2.0, Some(0.0)), |x: &Point| x.norm_squared());
        let cfg = SolverConfig { gamma: 0.5, ..theoretical(vec![0.0, 0.0], 1.0, 2.0) };
        let mut state = SolverState::initial(&f, &cfg).unwrap();
        let rec = state.step(&f, &cfg).unwrap();
        assert_eq!(rec.kind, StepKind::Shrink);
        assert!(!rec.accepted);
        // x_r = −(1 + 2/n) x_w when the centroid is the origin
        assert!((rec.f_reflected - rec.f_worst - 3.0).abs() <= 1e-12);
        assert_eq!(state.delta(), 0.5);
        assert_eq!(state.eval_count(), 3 + 1 + 2);
    }

    #[test]
    fn constant_objective_only_shrinks() {
        let f = FnObjective::new("c", 3, meta(1.0, Some(2.0)), |_: &Point| 2.0);
        let cfg = SolverConfig { stopping: Stopping::None, max_iterations: 20, ..theoretical(vec![0.0; 3], 0.5, 1.0) };
        let trace = run(&f, &cfg).unwrap();
        assert_eq!(trace.reason, TerminalReason::Budget);
        assert_eq!(trace.last.reflections, 0);
        assert_eq!(trace.last.shrinks, 20);
        assert!(trace.records.iter().all(|r| r.kind == StepKind::Shrink));
        assert!((trace.last.delta - 0.5f64.powi(20)).abs() <= 1e-9 * trace.last.delta);
    }

    #[test]
    fn constant_objective_has_zero_simplex_gradient() {
        let f = FnObjective::new("c", 2, meta(1.0, None), |_: &Point| 5.0);
        let state = SolverState::initial(&f, &SolverConfig::new(vec![1.0, 2.0])).unwrap();
        assert_eq!(state.stopping_gradient_norm().unwrap(), 0.0);
    }

    #[test]
    fn affine_objective_simplex_gradient_norm() {
        let a = dvector![3.0, -4.0, 12.0];
        let f = FnObjective::new("lin", 3, meta(1.0, None), move |x: &Point| a.dot(x) + 1.0);
        let state = SolverState::initial(&f, &SolverConfig::new(vec![0.5, 0.1, -2.0])).unwrap();
        assert!((state.stopping_gradient_norm().unwrap() - 13.0).abs() <= 1e-10);
    }

    #[test]
    fn half_norm_squared_practical_run() {
        let f = FnObjective::new("half", 2, meta(1.0, Some(0.0)), |x: &Point| 0.5 * x.norm_squared());
        let cfg = SolverConfig {
            delta0: 1.0,
            gamma: 0.5,
            rule: AcceptanceRule::Practical { eta: 1e-3 },
            epsilon: 1e-4,
            ..SolverConfig::new(vec![10.0, 10.0])
        };
        let trace = run(&f, &cfg).unwrap();
        assert_eq!(trace.reason, TerminalReason::EpsilonReached);
        assert!(trace.last.simplex_gradient_norm.unwrap() <= 1e-4);
        let (n_r, n_s) = (trace.last.reflections, trace.last.shrinks);
        assert!(n_s > 0);
        // each shrink iteration also pays for its rejected trial point
        assert_eq!(trace.last.evaluations, 3 + n_r + 3 * n_s);
        assert_eq!(f.evaluations(), trace.last.evaluations);
        assert_eq!(trace.records.iter().filter(|r| r.accepted).count() as u64, n_r);
    }

    #[test]
    fn reflection_only_never_shrinks() {
        let f = builtin("damped-sine", 3, None).unwrap();
        let cfg = SolverConfig {
            algorithm: Algorithm::ReflectionOnly,
            stopping: Stopping::None,
            max_iterations: 200,
            ..SolverConfig::new(vec![1.0, -2.0, 0.5])
        };
        let trace = run(&f, &cfg).unwrap();
        assert_eq!(trace.last.shrinks, 0);
        assert_eq!(trace.last.reflections, 200);
        assert!(trace.records.iter().all(|r| r.delta == 1.0));
    }

    #[test]
    fn records_are_contiguous_and_radius_follows_shrinks() {
        let f = builtin("sin-quad", 3, None).unwrap();
        let cfg = SolverConfig { gamma: 0.7, ..theoretical(vec![2.0, -1.5, 3.0], 0.5, 8.0) };
        let trace = run(&f, &cfg).unwrap();
        let mut shrinks = 0;
        for (k, r) in trace.records.iter().enumerate() {
            assert_eq!(r.k, k as u64);
            let expected = 0.7f64.powi(shrinks);
            assert!((r.delta - expected).abs() <= 1e-9 * expected);
            assert_eq!(r.kind == StepKind::Shrink, !r.accepted);
            if !r.accepted {
                shrinks += 1;
            }
        }
    }

    #[test]
    fn gap_sum_identity() {
        let f = builtin("damped-sine", 2, None).unwrap();
        let cfg = SolverConfig { gamma: 0.9, ..SolverConfig::new(vec![3.0, 1.0]) };
        let mut state = SolverState::initial(&f, &cfg).unwrap();
        for _ in 0..60 {
            let values = state.values().to_vec();
            let rec = state.step(&f, &cfg).unwrap();
            assert!(
                ((rec.v_r + rec.v) - reflection_gap_sum(&values, rec.f_reflected)).abs() <= 1e-12 * (1.0 + rec.s.abs())
            );
        }
    }

    #[test]
    fn stable_sort_keeps_prior_order_on_ties() {
        let f = FnObjective::new("c", 2, meta(1.0, None), |_: &Point| 0.0);
        let cfg = SolverConfig::new(vec![0.0, 0.0]);
        let state = SolverState::initial(&f, &cfg).unwrap();
        let fresh = make_regular_simplex(&Point::zeros(2), 1.0, 2).unwrap();
        assert_eq!(state.simplex(), &fresh);
    }

    #[test]
    fn non_finite_value_aborts_with_point() {
        let f = FnObjective::new("nan", 1, meta(1.0, None), |x: &Point| if x[0] > 0.0 { f64::NAN } else { x[0] });
        let err = run(&f, &SolverConfig::new(vec![0.0])).unwrap_err();
        assert!(matches!(err, Error::Evaluation { ref point, .. } if (point[0] - 1.0).abs() < 1e-12));
    }

    #[test]
    fn runs_are_bit_identical() {
        let cfg =
            SolverConfig { stopping: Stopping::TrueGradient, epsilon: 1e-3, ..SolverConfig::new(vec![2.0, 1.0, -1.0]) };
        let a = run(&builtin("quad-spectrum", 3, Some(7)).unwrap(), &cfg).unwrap();
        let b = run(&builtin("quad-spectrum", 3, Some(7)).unwrap(), &cfg).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        assert_eq!(a.summary_line(), b.summary_line());
    }

    #[test]
    fn trace_json_round_trip() {
        let cfg = SolverConfig { max_iterations: 10, stopping: Stopping::None, ..SolverConfig::new(vec![1.0, 1.0]) };
        let trace = run(&builtin("logsumexp", 2, None).unwrap(), &cfg).unwrap();
        let back = Trace::from_json(&trace.to_json().unwrap()).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn precision_loss_is_reported_not_hidden() {
        let f = FnObjective::new("c", 2, meta(1.0, None), |_: &Point| 1.0);
        let cfg = SolverConfig { stopping: Stopping::None, max_iterations: 200, ..SolverConfig::new(vec![1.0, 1.0]) };
        let trace = run(&f, &cfg).unwrap();
        assert_eq!(trace.reason, TerminalReason::RegularityFailure);
        assert!(trace.last.regularity_deviation.unwrap() > REGULARITY_LIMIT);
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::new(vec![0.0]);
        assert!(ok.validate().is_ok());
        assert!(SolverConfig { gamma: 1.0, ..ok.clone() }.validate().is_err());
        assert!(SolverConfig { delta0: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SolverConfig { n: 2, ..ok.clone() }.validate().is_err());
        assert!(SolverConfig { rule: AcceptanceRule::Theoretical { beta: 1.0, lipschitz: 0.0 }, ..ok }
            .validate()
            .is_err());
    }
}
