//! Worst-case complexity constants, predicted iteration bounds, and post-hoc
//! audits of solver traces against the per-step guarantees.
//!
//! All audits read only the trace: `S^{(k)}` comes from the record of
//! iteration `k` (or the final state), `δ_k` and the step kind likewise.
//! Inequalities are checked with a relative tolerance of `1e-9` measured
//! against the magnitudes of the quantities involved, including `|S|`, since
//! differences of sums carry rounding proportional to it.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::objective::{CurvatureClass, ObjectiveMeta};
use crate::solver::{AcceptanceRule, Algorithm, StepKind, Trace};

pub const AUDIT_TOL: f64 = 1e-9;
pub const DEFAULT_ETA_SPLIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Case {
    Nonconvex,
    Pl,
    Convex,
    StronglyConvex,
}

impl From<CurvatureClass> for Case {
    fn from(c: CurvatureClass) -> Self {
        match c {
            CurvatureClass::Nonconvex => Case::Nonconvex,
            CurvatureClass::Pl => Case::Pl,
            CurvatureClass::Convex => Case::Convex,
            CurvatureClass::StronglyConvex => Case::StronglyConvex,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityInputs {
    pub n: usize,
    pub beta: f64,
    pub gamma: f64,
    pub lipschitz: f64,
    pub epsilon: f64,
    pub delta0: f64,
    pub eta_split: f64,
    /// Radius of the initial average-value sublevel set around `x*`.
    pub radius: Option<f64>,
    pub mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityConstants {
    pub inputs: ComplexityInputs,
    /// `(β+1)n + √n/2`
    pub kappa1: f64,
    /// `(β−½)n + √n/2 − ½`
    pub kappa2: f64,
    /// `γε/(Lκ¹)`
    pub delta_bar: f64,
    /// `Lγ/(1+γ) δ₀²`
    pub psi0: f64,
    /// `(2β/n) γ² (1−η)`
    pub c1: f64,
    /// `βγ²(1−η)² / (2LR²n(κ²)²)`
    pub a: Option<f64>,
    /// `4(κ²)² L R² / (1−η)`
    pub d_thr: Option<f64>,
    /// `min{(1−η)ε/(2κ²LR), √((1−η)ε/L)}`
    pub delta_cvx: Option<f64>,
    /// `4βμγ² / (n(L(κ²)² + μ))`
    pub rho: Option<f64>,
}

impl ComplexityConstants {
    pub fn new(inputs: ComplexityInputs) -> Result<Self> {
        let ComplexityInputs { n, beta, gamma, lipschitz: l, epsilon, delta0, eta_split: eta, radius, mu } =
            inputs.clone();
        if n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if !(beta > 0.0) || !(l > 0.0) || !(epsilon > 0.0) || !(delta0 > 0.0) {
            return Err(invalid("beta, L, epsilon and delta0 must be positive"));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid("gamma must lie in (0,1)"));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(invalid("eta_split must lie in (0,1)"));
        }
        if radius.is_some_and(|r| !(r > 0.0)) {
            return Err(invalid("R must be positive"));
        }
        if mu.is_some_and(|m| !(m > 0.0)) {
            return Err(invalid("mu must be positive"));
        }
        let nf = n as f64;
        let kappa1 = (beta + 1.0) * nf + nf.sqrt() / 2.0;
        let kappa2 = (beta - 0.5) * nf + nf.sqrt() / 2.0 - 0.5;
        if (radius.is_some() || mu.is_some()) && !(kappa2 > 0.0) {
            return Err(invalid(format!("kappa2 = {kappa2} is not positive for n = {n}, beta = {beta}")));
        }
        let delta_bar = gamma * epsilon / (l * kappa1);
        let psi0 = l * gamma / (1.0 + gamma) * delta0 * delta0;
        let c1 = 2.0 * beta / nf * gamma * gamma * (1.0 - eta);
        let a = radius.map(|r| beta * gamma * gamma * (1.0 - eta).powi(2) / (2.0 * l * r * r * nf * kappa2 * kappa2));
        let d_thr = radius.map(|r| 4.0 * kappa2 * kappa2 * l * r * r / (1.0 - eta));
        let rho = mu.map(|m| 4.0 * beta * m * gamma * gamma / (nf * (l * kappa2 * kappa2 + m)));
        let mut consts =
            ComplexityConstants { inputs, kappa1, kappa2, delta_bar, psi0, c1, a, d_thr, delta_cvx: None, rho };
        consts.delta_cvx = radius.map(|_| consts.tail(epsilon));
        Ok(consts)
    }

    /// Constants matching a theoretical-mode trace: `n, β, L` from its rule,
    /// `γ, ε, δ₀` from its config, `μ` from the metadata.
    pub fn for_trace(trace: &Trace, meta: &ObjectiveMeta, radius: Option<f64>, eta_split: f64) -> Result<Self> {
        let AcceptanceRule::Theoretical { beta, lipschitz } = trace.config.rule else {
            return Err(invalid("complexity constants need a theoretical-mode trace"));
        };
        ComplexityConstants::new(ComplexityInputs {
            n: trace.config.n,
            beta,
            gamma: trace.config.gamma,
            lipschitz,
            epsilon: trace.config.epsilon,
            delta0: trace.config.delta0,
            eta_split,
            radius,
            mu: meta.mu,
        })
    }

    fn tail(&self, d_bar: f64) -> f64 {
        let r = self.inputs.radius.expect("checked by caller");
        let l = self.inputs.lipschitz;
        let eta = self.inputs.eta_split;
        let d = d_bar.max(0.0);
        let first = (1.0 - eta) * d / (2.0 * self.kappa2 * l * r);
        let second = ((1.0 - eta) * d / l).sqrt();
        first.min(second)
    }
}

/// `δ_tail(d̄) = min{(1−η)d̄/(2κ²LR), √((1−η)d̄/L)}`; nonpositive gaps map to 0.
pub fn tail_radius(d_bar: f64, consts: &ComplexityConstants) -> Result<f64> {
    if consts.inputs.radius.is_none() {
        return Err(invalid("tail radius needs R"));
    }
    if d_bar.is_nan() {
        return Err(invalid("gap is NaN"));
    }
    Ok(consts.tail(d_bar))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictedBound {
    pub case: Case,
    pub total: f64,
    /// Bound on successful iterations (for the convex case, both phases).
    pub reflection_term: f64,
    pub shrink_term: f64,
    pub phase1: Option<f64>,
    pub phase2: Option<f64>,
}

/// Predicted worst-case iteration count.
///
/// `gap0` is the initial average gap `d̄₀ = mean f(x_i⁰) − f*`, except for the
/// PL case where it is the central gap `f(c₀) − f*`. Negative logarithmic
/// terms (e.g. `δ₀` already below `δ̄`) and empty phases count as zero.
pub fn predicted_bounds(consts: &ComplexityConstants, gap0: f64, case: Case) -> Result<PredictedBound> {
    if !(gap0 >= 0.0) {
        return Err(invalid("initial gap must be nonnegative"));
    }
    let ComplexityInputs { n, beta, gamma, lipschitz: l, epsilon, delta0, .. } = consts.inputs;
    let nf = n as f64;
    let k1 = consts.kappa1;
    let nonconvex_shrinks = ((consts.delta_bar / delta0).ln() / gamma.ln()).max(0.0);
    let convex_shrinks = || -> Result<f64> {
        let d = consts.delta_cvx.ok_or_else(|| invalid(format!("{case:?} bound needs R")))?;
        Ok(((delta0 / d).ln() / (1.0 / gamma).ln()).max(0.0))
    };
    let bound = match case {
        Case::Nonconvex | Case::Pl => {
            let dim_factor = if case == Case::Nonconvex { nf } else { 1.0 };
            let refl =
                l * (gap0 + consts.psi0) * dim_factor * k1 * k1 / (2.0 * beta * gamma * gamma * epsilon * epsilon);
            PredictedBound {
                case,
                total: refl + nonconvex_shrinks,
                reflection_term: refl,
                shrink_term: nonconvex_shrinks,
                phase1: None,
                phase2: None,
            }
        }
        Case::Convex => {
            let (a, d_thr) = match (consts.a, consts.d_thr) {
                (Some(a), Some(d)) => (a, d),
                _ => return Err(invalid("convex bound needs R")),
            };
            let p1 = ((gap0 / d_thr).ln() / (1.0 / (1.0 - consts.c1)).ln()).max(0.0);
            let p2 = ((1.0 / epsilon - 1.0 / d_thr) / a).max(0.0);
            let shrink = convex_shrinks()?;
            PredictedBound {
                case,
                total: p1 + p2 + shrink,
                reflection_term: p1 + p2,
                shrink_term: shrink,
                phase1: Some(p1),
                phase2: Some(p2),
            }
        }
        Case::StronglyConvex => {
            let rho = consts.rho.ok_or_else(|| invalid("strongly convex bound needs mu"))?;
            let succ = if gap0 <= epsilon { 0.0 } else { ((gap0 / epsilon).ln() / -(1.0 - rho).ln()).ceil() };
            let shrink = convex_shrinks()?;
            PredictedBound {
                case,
                total: succ + shrink,
                reflection_term: succ,
                shrink_term: shrink,
                phase1: None,
                phase2: None,
            }
        }
    };
    Ok(bound)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AuditStatus {
    Passed,
    Failed,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub status: AuditStatus,
    /// Number of iterations (or aggregate comparisons) checked.
    pub checked: usize,
    /// Smallest `rhs − lhs` seen; negative beyond tolerance means a violation.
    pub worst_slack: Option<f64>,
    pub violations: Vec<u64>,
    pub note: Option<String>,
}

impl AuditCheck {
    fn skipped(name: &str, why: impl Into<String>) -> Self {
        AuditCheck {
            name: name.into(),
            status: AuditStatus::Skipped,
            checked: 0,
            worst_slack: None,
            violations: Vec::new(),
            note: Some(why.into()),
        }
    }
}

struct Tally {
    name: &'static str,
    checked: usize,
    worst: Option<f64>,
    violations: Vec<u64>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally { name, checked: 0, worst: None, violations: Vec::new() }
    }

    /// Checks `lhs ≤ rhs` up to `AUDIT_TOL · scale`.
    fn le(&mut self, k: u64, lhs: f64, rhs: f64, scale: f64) {
        let slack = rhs - lhs;
        self.checked += 1;
        self.worst = Some(self.worst.map_or(slack, |w| w.min(slack)));
        let tol = AUDIT_TOL * scale.abs().max(lhs.abs()).max(rhs.abs());
        if !(slack >= -tol) {
            self.violations.push(k);
        }
    }

    fn finish(self, note: Option<String>) -> AuditCheck {
        AuditCheck {
            name: self.name.into(),
            status: if self.violations.is_empty() { AuditStatus::Passed } else { AuditStatus::Failed },
            checked: self.checked,
            worst_slack: self.worst,
            violations: self.violations,
            note,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub objective: String,
    pub case: Case,
    pub constants: ComplexityConstants,
    pub checks: Vec<AuditCheck>,
    pub iterations: u64,
    pub reflections: u64,
    pub shrinks: u64,
    /// First `k` with `‖∇f(c_k)‖ ≤ ε`, if the trace has exact gradient norms.
    pub n_eps_gradient: Option<u64>,
    /// First `k` with `d̄_k ≤ ε`, if `f*` is known.
    pub n_eps_gap: Option<u64>,
    pub predicted: Option<PredictedBound>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != AuditStatus::Failed)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Audits a theoretical-mode trace of the search.
///
/// Checks that need metadata the caller did not supply (`f*`, `R`, exact
/// gradient norms in the trace) are reported as skipped. The convex checks
/// run only when `case` is convex or strongly convex.
pub fn audit_trace(
    trace: &Trace,
    meta: &ObjectiveMeta,
    consts: &ComplexityConstants,
    case: Case,
) -> Result<AuditReport> {
    let AcceptanceRule::Theoretical { beta, lipschitz: l } = trace.config.rule else {
        return Err(invalid("audits apply to theoretical-mode traces only"));
    };
    if trace.config.algorithm != Algorithm::Rssm {
        return Err(invalid("audits apply to the full search, not the reflection-only baseline"));
    }
    let n = trace.config.n;
    let nf = n as f64;
    let gamma = trace.config.gamma;
    let delta0 = trace.config.delta0;
    let eps = trace.config.epsilon;
    let recs = &trace.records;
    let horizon = recs.len();
    let ds = |k: usize| trace.sum_at(k + 1) - trace.sum_at(k);
    let s_scale = |k: usize| trace.sum_at(k).abs().max(trace.sum_at(k + 1).abs());

    let n_eps_gradient = if recs.iter().all(|r| r.true_gradient_norm.is_some()) && !recs.is_empty()
        || (recs.is_empty() && trace.last.true_gradient_norm.is_some())
    {
        recs.iter()
            .position(|r| r.true_gradient_norm.is_some_and(|g| g <= eps))
            .map(|k| k as u64)
            .or_else(|| trace.last.true_gradient_norm.filter(|&g| g <= eps).map(|_| horizon as u64))
    } else {
        None
    };
    let have_gradients = recs.iter().all(|r| r.true_gradient_norm.is_some()) && trace.last.true_gradient_norm.is_some();
    let grad_horizon = n_eps_gradient.map_or(horizon, |k| k as usize);

    let gap_at = |k: usize, f_star: f64| trace.sum_at(k) / (nf + 1.0) - f_star;
    let n_eps_gap = meta.f_star.and_then(|fs| (0..=horizon).find(|&k| gap_at(k, fs) <= eps).map(|k| k as u64));

    let mut checks = Vec::new();

    let mut t = Tally::new("reflection-sufficient-decrease");
    let per_step = (2.0 * nf + 2.0) / nf * beta * l;
    for (k, r) in recs.iter().enumerate().filter(|(_, r)| r.kind == StepKind::Reflection) {
        t.le(r.k, ds(k), -per_step * r.delta * r.delta, s_scale(k));
    }
    checks.push(t.finish(None));

    let mut t = Tally::new("shrink-increase");
    for (k, r) in recs.iter().enumerate().filter(|(_, r)| r.kind == StepKind::Shrink) {
        t.le(r.k, ds(k), l * gamma * (1.0 - gamma) * (nf + 1.0) * r.delta * r.delta, s_scale(k));
    }
    checks.push(t.finish(None));

    let mut t = Tally::new("shrink-total-ascent");
    let ascent: f64 =
        recs.iter().enumerate().filter(|(_, r)| r.kind == StepKind::Shrink).map(|(k, _)| ds(k).max(0.0)).sum();
    let cap = (nf + 1.0) * consts.psi0;
    t.checked = 1;
    t.worst = Some(cap - ascent);
    if !(ascent <= cap + 1e-9) {
        t.violations.push(horizon as u64);
    }
    checks.push(t.finish(Some(format!("ascent {ascent:e} vs cap {cap:e}"))));

    let pre_nonconvex = delta0 > consts.delta_bar;
    if !have_gradients {
        for name in ["radius-lower-bound", "reflection-decrease-at-target", "shrink-count"] {
            checks.push(AuditCheck::skipped(name, "trace has no exact gradient norms"));
        }
    } else if !pre_nonconvex {
        for name in ["radius-lower-bound", "reflection-decrease-at-target", "shrink-count"] {
            checks.push(AuditCheck::skipped(
                name,
                format!("delta0 {delta0:e} does not exceed delta_bar {:e}", consts.delta_bar),
            ));
        }
    } else {
        let mut t = Tally::new("radius-lower-bound");
        for r in &recs[..grad_horizon] {
            t.le(r.k, consts.delta_bar, r.delta, 0.0);
        }
        checks.push(t.finish(None));

        let mut t = Tally::new("reflection-decrease-at-target");
        let floor = (nf + 1.0) * 2.0 * beta * gamma * gamma * eps * eps / (l * nf * consts.kappa1 * consts.kappa1);
        for (k, r) in recs[..grad_horizon].iter().enumerate().filter(|(_, r)| r.kind == StepKind::Reflection) {
            t.le(r.k, ds(k), -floor, s_scale(k));
        }
        checks.push(t.finish(None));

        let shrinks = recs[..grad_horizon].iter().filter(|r| r.kind == StepKind::Shrink).count();
        let bound = (consts.delta_bar / delta0).ln() / gamma.ln();
        checks.push(strict_count("shrink-count", shrinks, bound, grad_horizon));
    }

    if matches!(case, Case::Convex | Case::StronglyConvex) {
        let mut t = Tally::new("convex-shrink-monotone");
        for (k, r) in recs.iter().enumerate().filter(|(_, r)| r.kind == StepKind::Shrink) {
            t.le(r.k, trace.sum_at(k + 1), trace.sum_at(k), s_scale(k));
        }
        checks.push(t.finish(None));

        match (meta.f_star, consts.delta_cvx) {
            (Some(fs), Some(delta_cvx)) => {
                if delta0 > delta_cvx {
                    let gap_horizon = n_eps_gap.map_or(horizon, |k| k as usize);
                    let shrinks = recs[..gap_horizon].iter().filter(|r| r.kind == StepKind::Shrink).count();
                    let bound = (delta_cvx / delta0).ln() / gamma.ln();
                    checks.push(strict_count("convex-shrink-count", shrinks, bound, gap_horizon));
                } else {
                    checks.push(AuditCheck::skipped(
                        "convex-shrink-count",
                        format!("delta0 {delta0:e} does not exceed delta_cvx {delta_cvx:e}"),
                    ));
                }

                let tail0 = consts.tail(gap_at(0, fs));
                if delta0 > tail0 {
                    let mut t = Tally::new("tail-radius-lower-bound");
                    for k in 0..=horizon {
                        let delta = recs.get(k).map_or(trace.last.delta, |r| r.delta);
                        t.le(k as u64, gamma * consts.tail(gap_at(k, fs)), delta, 0.0);
                    }
                    checks.push(t.finish(None));
                } else {
                    checks.push(AuditCheck::skipped(
                        "tail-radius-lower-bound",
                        format!("delta0 {delta0:e} does not exceed the initial tail radius {tail0:e}"),
                    ));
                }
            }
            _ => {
                for name in ["convex-shrink-count", "tail-radius-lower-bound"] {
                    checks.push(AuditCheck::skipped(name, "needs f* and R"));
                }
            }
        }
    }

    let predicted = meta.f_star.and_then(|fs| match case {
        Case::Pl => None,
        _ => predicted_bounds(consts, gap_at(0, fs).max(0.0), case).ok(),
    });

    Ok(AuditReport {
        objective: trace.objective.clone(),
        case,
        constants: consts.clone(),
        checks,
        iterations: horizon as u64,
        reflections: trace.last.reflections,
        shrinks: trace.last.shrinks,
        n_eps_gradient,
        n_eps_gap,
        predicted,
    })
}

fn strict_count(name: &'static str, observed: usize, bound: f64, horizon: usize) -> AuditCheck {
    let holds = (observed as f64) < bound;
    AuditCheck {
        name: name.into(),
        status: if holds { AuditStatus::Passed } else { AuditStatus::Failed },
        checked: 1,
        worst_slack: Some(bound - observed as f64),
        violations: if holds { Vec::new() } else { vec![horizon as u64] },
        note: Some(format!("{observed} shrinks in the first {horizon} iterations, bound {bound:.6}")),
    }
}
