//! Acceptance criteria. Each test writes one `PASS`/`FAIL` line straight to
//! stderr (bypassing the harness capture) and then asserts its verdict.
//!
//! Expected values are recomputed here from closed forms rather than taken
//! from the library, so the library is checked against an independent oracle.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use rssm_core::complexity::{audit_trace, AuditStatus, Case, ComplexityConstants, DEFAULT_ETA_SPLIT};
use rssm_core::experiments::{run_scaling, ExperimentPlan, RuleTemplate};
use rssm_core::interp::{
    bound_report, dominance_sweep, g_matrix, lagrange_coefficients, mu_certificate, BoundClass, Query, QueryKind,
};
use rssm_core::objective::{builtin, sublevel_radius, BuiltinObjective, BuiltinParams, Objective};
use rssm_core::simplex::{make_regular_simplex, Point, Simplex};
use rssm_core::solver::{run, AcceptanceRule, SolverConfig, StepKind, Stopping, Trace};

fn report(id: u32, title: &str, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("[acceptance] criterion {id:>2} {verdict}: {title} ({detail})\n");
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn offset_center(n: usize) -> Point {
    Point::from_fn(n, |i, _| 0.25 * (i as f64 + 1.0) - 0.1 * (i % 3) as f64)
}

fn random_orthogonal(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = a.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// A regular simplex with random centre, radius, orientation and vertex order.
fn random_regular_simplex(n: usize, rng: &mut ChaCha8Rng) -> Simplex {
    let delta = 10f64.powf(rng.gen_range(-1.0..1.0));
    let center = Point::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
    let base = make_regular_simplex(&Point::zeros(n), delta, n).unwrap();
    let q = random_orthogonal(n, rng);
    let mut vertices: Vec<Point> = base.vertices().iter().map(|v| &q * v + &center).collect();
    for i in (1..vertices.len()).rev() {
        let j = rng.gen_range(0..=i);
        vertices.swap(i, j);
    }
    Simplex::with_radius(vertices, delta).unwrap()
}

#[test]
fn criterion_01_sharp_bounds_attained() {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut cases = 0;
    for n in 1..=12usize {
        let nf = n as f64;
        for l in [1.0, 10.0] {
            for delta in [0.1, 1.0] {
                let s = make_regular_simplex(&offset_center(n), delta, n).unwrap();
                let d2 = delta * delta;
                let mut targets = vec![
                    (
                        Query::standard(QueryKind::Reflection, n, 0.5),
                        BoundClass::Nonconvex,
                        (2.0 * nf + 2.0) / nf * l * d2,
                    ),
                    (Query::Centroid, BoundClass::Nonconvex, l * d2 / 2.0),
                    (
                        Query::standard(QueryKind::Reflection, n, 0.5),
                        BoundClass::Convex,
                        (1.0 + 1.0 / nf).powi(2) * l * d2,
                    ),
                ];
                for g in [0.3, 0.5, 0.9] {
                    targets.push((
                        Query::Shrink { best: 0, moved: n, gamma: g },
                        BoundClass::Nonconvex,
                        (nf + 1.0) / nf * g * (1.0 - g) * l * d2,
                    ));
                }
                for (query, class, expected) in targets {
                    cases += 1;
                    let r = bound_report(&s, query, class, l).unwrap();
                    let e = rel(r.achieved, expected).max(rel(r.bound, expected));
                    worst = worst.max(e);
                    if e > 1e-9 {
                        failures.push(format!("n={n} L={l} delta={delta} {query:?} {class:?}: {e:e}"));
                    }
                }
            }
        }
    }
    let pass = failures.is_empty();
    report(
        1,
        "worst-case quadratics attain the closed-form bounds",
        pass,
        &format!("{cases} cases, max rel err {worst:.2e}"),
    );
    assert!(pass, "{failures:#?}");
}

#[test]
fn criterion_02_bound_dominance_oracle() {
    let mut total = 0;
    let mut violations = 0;
    let mut max_ratio = 0.0f64;
    for n in [2usize, 5, 10] {
        let s = make_regular_simplex(&offset_center(n), 0.7, n).unwrap();
        let sweeps = [
            (Query::standard(QueryKind::Reflection, n, 0.5), BoundClass::Nonconvex),
            (Query::Centroid, BoundClass::Nonconvex),
            (Query::Shrink { best: 0, moved: n, gamma: 0.3 }, BoundClass::Nonconvex),
            (Query::standard(QueryKind::Reflection, n, 0.5), BoundClass::Convex),
        ];
        for (i, (query, class)) in sweeps.into_iter().enumerate() {
            let r = dominance_sweep(&s, query, class, 2.0, 10_000, 1000 + 10 * n as u64 + i as u64).unwrap();
            total += r.samples;
            violations += r.violations;
            max_ratio = max_ratio.max(r.max_ratio);
        }
    }
    let pass = violations == 0;
    report(
        2,
        "random quadratics never exceed the bounds",
        pass,
        &format!("{total} samples, {violations} violations, max ratio {max_ratio:.6}"),
    );
    assert!(pass);
}

#[test]
fn criterion_03_mu_certificates() {
    let mut worst = 0.0f64;
    let mut ok = true;
    for n in 1..=12usize {
        let nf = n as f64;
        let s = make_regular_simplex(&offset_center(n), 1.0, n).unwrap();

        let cert = mu_certificate(&s, &s.reflect_worst(n).unwrap()).unwrap();
        ok &= cert.sharp;
        for i in 1..=n {
            for j in [n + 1, 0] {
                let e = (cert.get(i, j).unwrap() - 1.0 / nf).abs();
                worst = worst.max(e);
                ok &= e <= 1e-10;
            }
        }

        let cert = mu_certificate(&s, &s.centroid()).unwrap();
        ok &= cert.sharp && cert.entries.len() == n + 1;
        for e in &cert.entries {
            ok &= e.j == 0 && (e.value - 1.0 / (nf + 1.0)).abs() <= 1e-12;
        }

        let shrink = Query::Shrink { best: 0, moved: n, gamma: 0.3 }.point(&s).unwrap();
        let cert = mu_certificate(&s, &shrink).unwrap();
        ok &= cert.sharp && cert.entries.len() == 2;
        ok &= (cert.get(1, 0).unwrap() - 0.7).abs() <= 1e-12;
        ok &= (cert.get(n + 1, 0).unwrap() - 0.3).abs() <= 1e-12;
    }
    report(
        3,
        "mu certificates match the closed forms",
        ok,
        &format!("n = 1..12, max reflection deviation {worst:.2e}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_g_spectra_and_count_law() {
    let mut worst = 0.0f64;
    for n in 1..=12usize {
        let nf = n as f64;
        for delta in [0.1, 1.0] {
            let s = make_regular_simplex(&offset_center(n), delta, n).unwrap();
            let g = g_matrix(&s, &s.reflect_worst(n).unwrap()).unwrap();
            let d2 = delta * delta;
            let plus = 2.0 * (nf + 1.0) / (nf * nf) * d2;
            let minus = -2.0 * (nf + 1.0).powi(2) / (nf * nf) * d2;
            for i in 0..n {
                let expected = if i + 1 < n { plus } else { minus };
                worst = worst.max(rel(g.eigenvalues[i], expected));
            }
        }
    }
    let spectra_ok = worst <= 1e-9;

    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let mut mismatches = 0;
    let mut total = 0;
    for kind in [QueryKind::Reflection, QueryKind::Centroid, QueryKind::Shrink] {
        for _ in 0..1000 {
            let n = rng.gen_range(1..=10);
            let s = random_regular_simplex(n, &mut rng);
            let query = match kind {
                QueryKind::Reflection => Query::Reflection { worst: rng.gen_range(0..=n) },
                QueryKind::Centroid => Query::Centroid,
                QueryKind::Shrink => {
                    let best = rng.gen_range(0..=n);
                    let moved = (best + rng.gen_range(1..=n)) % (n + 1);
                    Query::Shrink { best, moved, gamma: rng.gen_range(0.05..0.95) }
                }
            };
            let x = query.point(&s).unwrap();
            let coeffs = lagrange_coefficients(&s, &x).unwrap();
            let g = g_matrix(&s, &x).unwrap();
            total += 1;
            if g.positive_count() != coeffs.positive.len() - 1 || g.negative_count() != coeffs.negative.len() - 1 {
                mismatches += 1;
            }
        }
    }
    let pass = spectra_ok && mismatches == 0;
    report(
        4,
        "reflection spectra and eigenvalue-count law",
        pass,
        &format!("max rel eigenvalue err {worst:.2e}; {mismatches}/{total} count mismatches"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_geometry_preserved() {
    let n = 8;
    let gamma = 0.999;
    let mut s = make_regular_simplex(&Point::from_element(n, 0.5), 1.0, n).unwrap();
    let mut worst = 0.0f64;
    let mut first_bad = None;
    for step in 0..10_000usize {
        let idx = (step / 2 + step / 18) % (n + 1);
        s = if step % 2 == 0 {
            let xr = s.reflect_worst(idx).unwrap();
            s.replace_vertex(idx, xr).unwrap()
        } else {
            s.shrink_toward_best(idx, gamma).unwrap()
        };
        let dev = s.regularity_report().max_deviation();
        worst = worst.max(dev);
        if dev > 1e-8 && first_bad.is_none() {
            first_bad = Some(step);
        }
    }
    let expected_radius = gamma.powi(5000);
    let radius_ok = rel(s.radius(), expected_radius) <= 1e-9;
    let pass = first_bad.is_none() && radius_ok;
    report(
        5,
        "10^4 alternating reflect/shrink steps keep the simplex regular",
        pass,
        &format!("n = 8, max deviation {worst:.2e}, final radius {:.6e}", s.radius()),
    );
    assert!(pass, "first deviation above 1e-8 at step {first_bad:?}");
}

struct AuditRun {
    objective: BuiltinObjective,
    trace: Trace,
    case: Case,
}

fn seeded_start(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect()
}

fn theoretical_run(name: &str, n: usize, seed: u64) -> AuditRun {
    let objective = builtin(name, n, Some(seed)).unwrap();
    let meta = objective.metadata().clone();
    let case = Case::from(meta.class);
    let stopping = if meta.class.is_convex() { Stopping::AverageGap } else { Stopping::TrueGradient };
    let cfg = SolverConfig {
        delta0: 1.0,
        gamma: 0.5,
        rule: AcceptanceRule::Theoretical { beta: 0.5, lipschitz: meta.lipschitz.unwrap() },
        epsilon: 1e-3,
        max_iterations: 200_000,
        max_evaluations: 10_000_000,
        stopping,
        ..SolverConfig::new(seeded_start(n, seed))
    };
    let trace = run(&objective, &cfg).unwrap();
    AuditRun { objective, trace, case }
}

fn initial_mean(trace: &Trace) -> f64 {
    trace.sum_at(0) / (trace.config.n as f64 + 1.0)
}

const AUDIT_OBJECTIVES: [&str; 5] = ["quad-iso", "quad-spectrum", "logsumexp", "sin-quad", "damped-sine"];
const AUDIT_DIMS: [usize; 3] = [2, 4, 8];
const AUDIT_SEEDS: [u64; 2] = [1, 2];

fn audit_runs() -> Vec<AuditRun> {
    let mut runs = Vec::new();
    for name in AUDIT_OBJECTIVES {
        for n in AUDIT_DIMS {
            for seed in AUDIT_SEEDS {
                runs.push(theoretical_run(name, n, seed));
            }
        }
    }
    runs
}

#[test]
fn criterion_06_trace_audits() {
    let mut failures = Vec::new();
    let mut checks = 0;
    let mut skipped = Vec::new();
    for r in audit_runs() {
        let meta = r.objective.metadata();
        let radius = if meta.class.is_convex() {
            Some(sublevel_radius(&r.objective, initial_mean(&r.trace)).unwrap())
        } else {
            None
        };
        let consts = ComplexityConstants::for_trace(&r.trace, meta, radius, DEFAULT_ETA_SPLIT).unwrap();
        let audit = audit_trace(&r.trace, meta, &consts, r.case).unwrap();
        for c in &audit.checks {
            match c.status {
                AuditStatus::Passed => checks += c.checked,
                AuditStatus::Failed => failures.push(format!(
                    "{} n={} {}: {} violations, worst slack {:?}, first at {:?}",
                    r.trace.objective,
                    r.trace.config.n,
                    c.name,
                    c.violations.len(),
                    c.worst_slack,
                    c.violations.first()
                )),
                AuditStatus::Skipped => {
                    if meta.f_star.is_some() {
                        skipped.push(format!("{} n={} {}: {:?}", r.trace.objective, r.trace.config.n, c.name, c.note));
                    }
                }
            }
        }
    }
    let pass = failures.is_empty();
    let detail = format!("{checks} inequality checks, {} failing audits, {} skipped", failures.len(), skipped.len());
    report(6, "per-step guarantees hold on theoretical-mode traces", pass, &detail);
    for f in &failures {
        let _ = std::io::stderr().write_all(format!("[acceptance]     {f}\n").as_bytes());
    }
    assert!(pass, "{failures:#?}");
}

fn fit_plan(objective: &str, epsilons: Vec<f64>, stopping: Stopping) -> ExperimentPlan {
    ExperimentPlan {
        objective: objective.into(),
        params: BuiltinParams::default(),
        dims: vec![4],
        epsilons,
        repetitions: 3,
        base_seed: 17,
        start_half_width: 3.0,
        delta0: 1.0,
        gamma: 0.5,
        rule: RuleTemplate::Theoretical { beta: 0.5 },
        stopping,
        max_iterations: 2_000_000,
        max_evaluations: 100_000_000,
    }
}

#[test]
fn criterion_07_scaling_orders() {
    let decades = |from: f64, to: f64, per_decade: usize| {
        let count = ((from / to).log10() * per_decade as f64).round() as usize + 1;
        ExperimentPlan::geometric_epsilons(from, 10f64.powf(-1.0 / per_decade as f64), count)
    };

    let started = std::time::Instant::now();
    let sc = run_scaling(&fit_plan("quad-iso", decades(1e-1, 1e-6, 1), Stopping::AverageGap)).unwrap();
    let sc_secs = started.elapsed().as_secs_f64();
    let sc_fit = sc.fit_for(4).and_then(|f| f.semilog);
    let sc_ok = sc.excluded.is_empty() && sc_fit.is_some_and(|f| f.correlation >= 0.98) && sc_secs < 300.0;

    let started = std::time::Instant::now();
    let cv = run_scaling(&fit_plan("logsumexp", decades(1e-1, 1e-4, 2), Stopping::AverageGap)).unwrap();
    let cv_secs = started.elapsed().as_secs_f64();
    let cv_fit = cv.fit_for(4).and_then(|f| f.power_law);
    let cv_ok = cv.excluded.is_empty() && cv_fit.is_some_and(|f| (0.0..=1.2).contains(&f.slope)) && cv_secs < 300.0;

    let started = std::time::Instant::now();
    let nc = run_scaling(&fit_plan("damped-sine", decades(1e-1, 1e-3, 2), Stopping::TrueGradient)).unwrap();
    let nc_secs = started.elapsed().as_secs_f64();
    let nc_fit = nc.fit_for(4).and_then(|f| f.power_law);
    let nc_ok = nc.excluded.is_empty() && nc_fit.is_some_and(|f| (0.0..=2.3).contains(&f.slope)) && nc_secs < 300.0;

    let pass = sc_ok && cv_ok && nc_ok;
    let detail = format!(
        "strongly convex r = {:.4} ({sc_secs:.1}s); convex exponent {:.3} ({cv_secs:.1}s); nonconvex exponent {:.3} ({nc_secs:.1}s)",
        sc_fit.map_or(f64::NAN, |f| f.correlation),
        cv_fit.map_or(f64::NAN, |f| f.slope),
        nc_fit.map_or(f64::NAN, |f| f.slope),
    );
    report(7, "empirical scaling stays within the worst-case orders", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_08_shrink_count_bound() {
    let mut traces = 0;
    let mut worst_margin = f64::INFINITY;
    let mut failures = Vec::new();
    for name in ["sin-quad", "damped-sine"] {
        for n in AUDIT_DIMS {
            for seed in [1u64, 2, 3, 4] {
                let r = theoretical_run(name, n, seed);
                let t = &r.trace;
                let AcceptanceRule::Theoretical { beta, lipschitz } = t.config.rule else { unreachable!() };
                let nf = n as f64;
                let kappa1 = (beta + 1.0) * nf + nf.sqrt() / 2.0;
                let delta_bar = t.config.gamma * t.config.epsilon / (lipschitz * kappa1);
                let bound = (delta_bar / t.config.delta0).ln() / t.config.gamma.ln();
                let horizon = t
                    .records
                    .iter()
                    .position(|rec| rec.true_gradient_norm.unwrap() <= t.config.epsilon)
                    .unwrap_or(t.records.len());
                let shrinks = t.records[..horizon].iter().filter(|rec| rec.kind == StepKind::Shrink).count();
                traces += 1;
                worst_margin = worst_margin.min(bound - shrinks as f64);
                if (shrinks as f64) >= bound || bound.is_nan() {
                    failures.push(format!("{name} n={n} seed={seed}: N_s = {shrinks}, bound {bound}"));
                }
            }
        }
    }
    let pass = failures.is_empty();
    report(
        8,
        "shrink count stays strictly below its bound",
        pass,
        &format!("{traces} traces, smallest margin {worst_margin:.3}"),
    );
    assert!(pass, "{failures:#?}");
}

#[test]
fn criterion_09_evaluation_accounting() {
    let mut traces: Vec<(Trace, u64)> =
        audit_runs().into_iter().map(|r| (r.trace, r.objective.evaluations())).collect();
    let f = builtin("quad-iso", 2, None).unwrap();
    let cfg = SolverConfig {
        delta0: 1.0,
        gamma: 0.5,
        rule: AcceptanceRule::Practical { eta: 1e-3 },
        epsilon: 1e-4,
        ..SolverConfig::new(vec![10.0, 10.0])
    };
    traces.push((run(&f, &cfg).unwrap(), f.evaluations()));

    let mut mismatched = 0;
    let mut counter_mismatch = 0;
    let mut first = None;
    for (t, counted) in &traces {
        let n = t.config.n as u64;
        let (n_r, n_s) = (t.last.reflections, t.last.shrinks);
        let formula = (n + 1) + n_r + n * n_s;
        if t.last.evaluations != *counted {
            counter_mismatch += 1;
        }
        if t.last.evaluations != formula {
            mismatched += 1;
            first.get_or_insert(format!(
                "{} n={n}: evals {} vs formula {formula} (N_r={n_r}, N_s={n_s})",
                t.objective, t.last.evaluations
            ));
        }
    }
    let pass = mismatched == 0 && counter_mismatch == 0;
    let detail = format!(
        "{mismatched}/{} traces differ from (n+1) + N_r + n*N_s; objective counters disagree on {counter_mismatch}; first: {}",
        traces.len(),
        first.as_deref().unwrap_or("none")
    );
    report(9, "evaluation count equals (n+1) + N_r + n*N_s", pass, &detail);
    assert!(pass, "{detail}");
}

#[test]
fn criterion_10_determinism() {
    let a = theoretical_run("quad-spectrum", 4, 9);
    let b = theoretical_run("quad-spectrum", 4, 9);
    let traces_equal = a.trace.to_json().unwrap() == b.trace.to_json().unwrap();
    let summaries_equal = a.trace.summary_line() == b.trace.summary_line();

    let plan = ExperimentPlan {
        dims: vec![2, 3],
        epsilons: ExperimentPlan::geometric_epsilons(1e-1, 0.1, 4),
        ..fit_plan("sin-quad", vec![], Stopping::TrueGradient)
    };
    let strip =
        |csv: String| -> Vec<String> { csv.lines().map(|l| l.rsplit_once(',').unwrap().0.to_string()).collect() };
    let c1 = strip(run_scaling(&plan).unwrap().to_csv().unwrap());
    let c2 = strip(run_scaling(&plan).unwrap().to_csv().unwrap());
    let csv_equal = c1 == c2;

    let pass = traces_equal && summaries_equal && csv_equal;
    report(
        10,
        "identical inputs give byte-identical traces and CSV rows",
        pass,
        &format!(
            "trace JSON equal: {traces_equal}, summary equal: {summaries_equal}, CSV rows equal: {csv_equal} ({} rows)",
            c1.len() - 1
        ),
    );
    assert!(pass);
}

#[test]
fn oracle_random_rotations_keep_centroid_inequalities() {
    // companion to the inequality checker: rotated/translated quadratics with ‖H‖₂ = L
    use rssm_core::interp::check_centroid_inequalities;
    use rssm_core::objective::{CurvatureClass, FnObjective, ObjectiveMeta};

    let n = 5;
    let l = 3.0;
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut violations = 0;
    for _ in 0..1000 {
        let q = random_orthogonal(n, &mut rng);
        let diag = DVector::from_fn(n, |i, _| if i == 0 { l } else { rng.gen_range(-l..=l) });
        let h = &q * DMatrix::from_diagonal(&diag) * q.transpose();
        let shift = Point::from_fn(n, |_, _| rng.gen_range(-2.0..2.0));
        let meta = ObjectiveMeta {
            lipschitz: Some(l),
            mu: None,
            f_star: None,
            x_star: None,
            class: CurvatureClass::Nonconvex,
        };
        let (h2, s2) = (h.clone(), shift.clone());
        let f = FnObjective::new("rotated", n, meta, move |x: &Point| {
            let d = x - &s2;
            0.5 * d.dot(&(&h2 * &d))
        });
        struct WithGrad<'a, F> {
            inner: &'a FnObjective<F>,
            h: DMatrix<f64>,
            shift: Point,
        }
        impl<F: Fn(&Point) -> f64 + Sync> Objective for WithGrad<'_, F> {
            fn name(&self) -> &str {
                self.inner.name()
            }
            fn dim(&self) -> usize {
                self.inner.dim()
            }
            fn evaluate(&self, x: &Point) -> f64 {
                self.inner.evaluate(x)
            }
            fn gradient(&self, x: &Point) -> Option<DVector<f64>> {
                Some(&self.h * (x - &self.shift))
            }
            fn metadata(&self) -> &rssm_core::objective::ObjectiveMeta {
                self.inner.metadata()
            }
            fn evaluations(&self) -> u64 {
                self.inner.evaluations()
            }
        }
        let obj = WithGrad { inner: &f, h, shift };
        let s = random_regular_simplex(n, &mut rng);
        let r = check_centroid_inequalities(&s, &obj).unwrap();
        if !r.all_hold() {
            violations += 1;
        }
    }
    assert_eq!(violations, 0);
}
