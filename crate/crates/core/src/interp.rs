//! Linear interpolation and extrapolation over a simplex.
//!
//! For a query point `x` with Lagrange coefficients `ℓ₁..ℓ_{n+1}` on the
//! simplex vertices, set `x₀ := x` and `ℓ₀ := −1`. The interpolation error of
//! any quadratic `f(u) = c + vᵀu + ½uᵀHu` is then
//!
//! ```text
//! f̂(x) − f(x) = Σ_{i=0}^{n+1} ℓ_i f(x_i) = ½ ⟨H, G⟩,   G := Σ ℓ_i x_i x_iᵀ.
//! ```
//!
//! Maximising over `−LI ⪯ H ⪯ LI` gives `L/2 ‖G‖_*`, attained by
//! `H* = L P sign(Λ) Pᵀ`; over `0 ⪯ H ⪯ LI` the two one-sided maxima are
//! `L/2 tr(G₊)` and `L/2 tr(G₋)`. The bound also holds for every `L`-smooth
//! function whenever the `μ` table built from `M = diag(ℓ₊) Y₊ P₋ (Y₋P₋)⁻¹` is
//! nonnegative, which [`mu_certificate`] checks.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::objective::Objective;
use crate::simplex::{Point, Simplex, GEOMETRY_TOL};

/// Below this reciprocal condition number the affine system is treated as singular.
pub const RCOND_GUARD: f64 = 1e-12;
/// Coefficients with `|ℓ| ≤` this are neither positive nor negative.
pub const COEFF_ZERO_TOL: f64 = 1e-12;
/// `μ_ij ≥ −MU_TOL` counts as nonnegative.
pub const MU_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    Reflection,
    Centroid,
    Shrink,
}

/// Function class over which an error bound is taken.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundClass {
    Nonconvex,
    Convex,
}

/// Which one-sided extremum a worst-case quadratic should attain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorSign {
    Positive,
    Negative,
}

/// A query point defined relative to the simplex's vertex order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Query {
    Reflection { worst: usize },
    Centroid,
    Shrink { best: usize, moved: usize, gamma: f64 },
}

impl Query {
    /// The three standard queries with the solver's convention: vertex 0 best,
    /// vertex `n` worst.
    pub fn standard(kind: QueryKind, n: usize, gamma: f64) -> Query {
        match kind {
            QueryKind::Reflection => Query::Reflection { worst: n },
            QueryKind::Centroid => Query::Centroid,
            QueryKind::Shrink => Query::Shrink { best: 0, moved: n, gamma },
        }
    }

    pub fn kind(&self) -> QueryKind {
        match self {
            Query::Reflection { .. } => QueryKind::Reflection,
            Query::Centroid => QueryKind::Centroid,
            Query::Shrink { .. } => QueryKind::Shrink,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Query::Shrink { gamma, .. } => Some(*gamma),
            _ => None,
        }
    }

    pub fn point(&self, s: &Simplex) -> Result<Point> {
        match *self {
            Query::Reflection { worst } => s.reflect_worst(worst),
            Query::Centroid => Ok(s.centroid()),
            Query::Shrink { best, moved, gamma } => {
                if best > s.dim() || moved > s.dim() || best == moved {
                    return Err(invalid("shrink query needs two distinct vertex indices"));
                }
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(invalid(format!("shrink factor must lie in (0,1), got {gamma}")));
                }
                Ok(s.vertex(moved) * gamma + s.vertex(best) * (1.0 - gamma))
            }
        }
    }
}

/// Lagrange coefficients of a query point, with `ell[0] = −1` for the query
/// itself and `ell[i]` belonging to vertex `i − 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryCoefficients {
    pub ell: Vec<f64>,
    /// Indices into `ell` with `ℓ > 0`.
    pub positive: Vec<usize>,
    /// Indices into `ell` with `ℓ < 0`; always contains 0.
    pub negative: Vec<usize>,
}

impl QueryCoefficients {
    fn from_vertex_weights(weights: &[f64]) -> Self {
        let mut ell = Vec::with_capacity(weights.len() + 1);
        ell.push(-1.0);
        ell.extend_from_slice(weights);
        let positive = (0..ell.len()).filter(|&i| ell[i] > COEFF_ZERO_TOL).collect();
        let negative = (0..ell.len()).filter(|&i| ell[i] < -COEFF_ZERO_TOL).collect();
        QueryCoefficients { ell, positive, negative }
    }

    /// Weights of the vertices only, `ℓ₁..ℓ_{n+1}`.
    pub fn vertex_weights(&self) -> &[f64] {
        &self.ell[1..]
    }
}

/// LU factors of the edge matrix `E = [x₁−x₀, …, x_n−x₀]` plus its conditioning.
struct AffineFrame {
    edges: DMatrix<f64>,
}

impl AffineFrame {
    fn new(s: &Simplex) -> Result<Self> {
        let n = s.dim();
        let x0 = s.vertex(0);
        let edges = DMatrix::from_fn(n, n, |r, c| s.vertex(c + 1)[r] - x0[r]);
        let sv = edges.singular_values();
        let max = sv.max();
        let rcond = if max > 0.0 { sv.min() / max } else { 0.0 };
        if !(rcond >= RCOND_GUARD) {
            return Err(Error::DegenerateGeometry { rcond });
        }
        Ok(AffineFrame { edges })
    }

    fn solve(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        self.edges.clone().lu().solve(&rhs).ok_or(Error::DegenerateGeometry { rcond: 0.0 })
    }

    fn solve_transposed(&self, rhs: DVector<f64>) -> Result<DVector<f64>> {
        self.edges.transpose().lu().solve(&rhs).ok_or(Error::DegenerateGeometry { rcond: 0.0 })
    }
}

pub fn lagrange_coefficients(s: &Simplex, x: &Point) -> Result<QueryCoefficients> {
    if x.len() != s.dim() {
        return Err(invalid("query point has wrong dimension"));
    }
    let frame = AffineFrame::new(s)?;
    let lambda = frame.solve(x - s.vertex(0))?;
    let mut weights = Vec::with_capacity(s.dim() + 1);
    weights.push(1.0 - lambda.sum());
    weights.extend(lambda.iter());
    Ok(QueryCoefficients::from_vertex_weights(&weights))
}

/// Gradient of the affine interpolant of `(x_i, values[i])`.
pub fn simplex_gradient(s: &Simplex, values: &[f64]) -> Result<DVector<f64>> {
    if values.len() != s.dim() + 1 {
        return Err(invalid(format!("expected {} values, got {}", s.dim() + 1, values.len())));
    }
    let frame = AffineFrame::new(s)?;
    let diffs = DVector::from_fn(s.dim(), |j, _| values[j + 1] - values[0]);
    frame.solve_transposed(diffs)
}

/// `f̂(x) − f(x) = Σ_{i≥0} ℓ_i f(x_i)`, evaluated directly from function values.
pub fn interpolation_error<F: Fn(&Point) -> f64>(s: &Simplex, x: &Point, coeffs: &QueryCoefficients, f: F) -> f64 {
    let interpolant: f64 = s.vertices().iter().zip(coeffs.vertex_weights()).map(|(xi, l)| l * f(xi)).sum();
    interpolant - f(x)
}

/// Symmetric matrix with a deterministic eigendecomposition: eigenvalues in
/// descending order, each eigenvector's first non-negligible entry positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GMatrix {
    pub matrix: DMatrix<f64>,
    pub eigenvalues: DVector<f64>,
    /// Columns are eigenvectors, in the order of `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl GMatrix {
    pub fn from_symmetric(m: DMatrix<f64>) -> Self {
        let matrix = (&m + m.transpose()) * 0.5;
        let eig = SymmetricEigen::new(matrix.clone());
        let n = matrix.nrows();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let eigenvalues = DVector::from_fn(n, |i, _| eig.eigenvalues[order[i]]);
        let mut eigenvectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
        for mut col in eigenvectors.column_iter_mut() {
            if let Some(first) = col.iter().copied().find(|v| v.abs() > 1e-12) {
                if first < 0.0 {
                    col.neg_mut();
                }
            }
        }
        GMatrix { matrix, eigenvalues, eigenvectors }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn zero_tol(&self) -> f64 {
        1e-9 * self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sign of each eigenvalue, with values within `1e-9·max|λ|` of zero mapped to 0.
    pub fn eigen_signs(&self) -> Vec<i8> {
        let tol = self.zero_tol();
        self.eigenvalues
            .iter()
            .map(|&l| {
                if l > tol {
                    1
                } else if l < -tol {
                    -1
                } else {
                    0
                }
            })
            .collect()
    }

    pub fn positive_count(&self) -> usize {
        self.eigen_signs().iter().filter(|&&s| s > 0).count()
    }

    pub fn negative_count(&self) -> usize {
        self.eigen_signs().iter().filter(|&&s| s < 0).count()
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.eigenvalues.iter().map(|l| l.abs()).sum()
    }

    /// `tr(G₊)`
    pub fn positive_trace(&self) -> f64 {
        self.eigenvalues.iter().map(|&l| l.max(0.0)).sum()
    }

    /// `tr(G₋)`, reported as a nonnegative number.
    pub fn negative_trace(&self) -> f64 {
        self.eigenvalues.iter().map(|&l| (-l).max(0.0)).sum()
    }

    /// Columns of `P` belonging to negative eigenvalues.
    pub fn negative_eigenvectors(&self) -> DMatrix<f64> {
        let cols: Vec<usize> = self.eigen_signs().iter().enumerate().filter(|(_, &s)| s < 0).map(|(i, _)| i).collect();
        DMatrix::from_fn(self.dim(), cols.len(), |r, c| self.eigenvectors[(r, cols[c])])
    }
}

/// `G = Σ_{i=0}^{n+1} ℓ_i x_i x_iᵀ`, assembled in coordinates centred at the
/// query (`Σℓ_i = 0` and `Σℓ_i x_i = 0` make the two forms identical).
pub fn g_matrix(s: &Simplex, x: &Point) -> Result<GMatrix> {
    let coeffs = lagrange_coefficients(s, x)?;
    Ok(g_matrix_from(s, x, &coeffs))
}

fn g_matrix_from(s: &Simplex, x: &Point, coeffs: &QueryCoefficients) -> GMatrix {
    let n = s.dim();
    let mut g = DMatrix::zeros(n, n);
    for (xi, &l) in s.vertices().iter().zip(coeffs.vertex_weights()) {
        let d = xi - x;
        g += (&d * d.transpose()) * l;
    }
    GMatrix::from_symmetric(g)
}

/// Closed-form sharp bounds on `|f̂(x) − f(x)|` for the regular-simplex
/// queries. The shrink bound carries the factor `L` like the others. For
/// centroid and shrink queries `G ⪰ 0`, so the convex bound coincides with
/// the nonconvex one; for the centroid the convex statement is one-sided
/// (`mean − f(c) ≤ Lδ²/2`).
pub fn error_bound(
    kind: QueryKind,
    class: BoundClass,
    n: usize,
    lipschitz: f64,
    delta: f64,
    gamma: Option<f64>,
) -> Result<f64> {
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(lipschitz > 0.0) || !(delta > 0.0) {
        return Err(invalid("L and delta must be positive"));
    }
    let nf = n as f64;
    let d2 = delta * delta;
    match (kind, gamma) {
        (QueryKind::Shrink, None) => Err(invalid("shrink bound needs gamma")),
        (QueryKind::Shrink, Some(g)) if !(g > 0.0 && g < 1.0) => {
            Err(invalid(format!("gamma must lie in (0,1), got {g}")))
        }
        (QueryKind::Shrink, Some(g)) => Ok((nf + 1.0) / nf * g * (1.0 - g) * lipschitz * d2),
        (_, Some(_)) => Err(invalid("gamma only applies to shrink queries")),
        (QueryKind::Centroid, None) => Ok(lipschitz * d2 / 2.0),
        (QueryKind::Reflection, None) => Ok(match class {
            BoundClass::Nonconvex => (2.0 * nf + 2.0) / nf * lipschitz * d2,
            BoundClass::Convex => (1.0 + 1.0 / nf).powi(2) * lipschitz * d2,
        }),
    }
}

/// `L/2 ‖G‖_*` (nonconvex) or `L/2 max{tr G₊, tr G₋}` (convex).
pub fn nuclear_bound_from_g(g: &GMatrix, lipschitz: f64, class: BoundClass) -> f64 {
    match class {
        BoundClass::Nonconvex => 0.5 * lipschitz * g.nuclear_norm(),
        BoundClass::Convex => 0.5 * lipschitz * g.positive_trace().max(g.negative_trace()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuEntry {
    /// Index into `ell` of a positive coefficient.
    pub i: usize,
    /// Index into `ell` of a negative coefficient (0 for the query itself).
    pub j: usize,
    pub value: f64,
    pub nonnegative: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MuCertificate {
    pub entries: Vec<MuEntry>,
    /// All `μ_ij ≥ −1e-12`.
    pub sharp: bool,
}

impl MuCertificate {
    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.entries.iter().find(|e| e.i == i && e.j == j).map(|e| e.value)
    }
}

pub fn mu_certificate(s: &Simplex, x: &Point) -> Result<MuCertificate> {
    let coeffs = lagrange_coefficients(s, x)?;
    let g = g_matrix_from(s, x, &coeffs);
    mu_certificate_from(s, x, &coeffs, &g)
}

fn mu_certificate_from(s: &Simplex, x: &Point, coeffs: &QueryCoefficients, g: &GMatrix) -> Result<MuCertificate> {
    let ell = &coeffs.ell;
    let pos = &coeffs.positive;
    let neg: Vec<usize> = coeffs.negative.iter().copied().filter(|&j| j != 0).collect();

    let mut table = vec![vec![0.0; neg.len()]; pos.len()];
    if !neg.is_empty() {
        let p_neg = g.negative_eigenvectors();
        if p_neg.ncols() != neg.len() {
            return Err(Error::CertificateUnavailable(format!(
                "G has {} negative eigenvalues but {} negative vertex coefficients",
                p_neg.ncols(),
                neg.len()
            )));
        }
        let n = s.dim();
        let row = |idx: usize| s.vertex(idx - 1) - x;
        let y_pos = DMatrix::from_fn(pos.len(), n, |r, c| row(pos[r])[c]);
        let y_neg = DMatrix::from_fn(neg.len(), n, |r, c| row(neg[r])[c]);
        let k = &y_neg * &p_neg;
        let sv = k.singular_values();
        if !(sv.min() >= RCOND_GUARD * sv.max()) {
            return Err(Error::CertificateUnavailable("Y₋P₋ is singular".into()));
        }
        let k_inv = k.try_inverse().ok_or_else(|| Error::CertificateUnavailable("Y₋P₋ is singular".into()))?;
        let weights = DMatrix::from_diagonal(&DVector::from_fn(pos.len(), |r, _| ell[pos[r]]));
        let m = weights * y_pos * p_neg * k_inv;
        for (a, row) in table.iter_mut().enumerate() {
            for (b, v) in row.iter_mut().enumerate() {
                *v = m[(a, b)];
            }
        }
    }

    let mut entries = Vec::new();
    for (a, &i) in pos.iter().enumerate() {
        let row_sum: f64 = table[a].iter().sum();
        let mu0 = ell[i] - row_sum;
        entries.push(MuEntry { i, j: 0, value: mu0, nonnegative: mu0 >= -MU_TOL });
        for (b, &j) in neg.iter().enumerate() {
            let v = table[a][b];
            entries.push(MuEntry { i, j, value: v, nonnegative: v >= -MU_TOL });
        }
    }
    let sharp = entries.iter().all(|e| e.nonnegative);
    Ok(MuCertificate { entries, sharp })
}

/// `f(u) = c + vᵀu + ½uᵀHu`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quadratic {
    pub h: DMatrix<f64>,
    pub v: DVector<f64>,
    pub c: f64,
}

impl Quadratic {
    pub fn pure(h: DMatrix<f64>) -> Self {
        let n = h.nrows();
        Quadratic { h, v: DVector::zeros(n), c: 0.0 }
    }

    pub fn evaluate(&self, u: &Point) -> f64 {
        self.c + self.v.dot(u) + 0.5 * u.dot(&(&self.h * u))
    }

    pub fn gradient(&self, u: &Point) -> DVector<f64> {
        &self.v + &self.h * u
    }

    pub fn spectral_norm(&self) -> f64 {
        self.h.symmetric_eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_lipschitz_smooth(&self, lipschitz: f64) -> bool {
        self.spectral_norm() <= lipschitz * (1.0 + 1e-12)
    }

    pub fn is_convex(&self) -> bool {
        let eig = self.h.symmetric_eigenvalues();
        let scale = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        eig.iter().all(|&l| l >= -1e-12 * scale.max(1.0))
    }
}

/// The quadratic attaining the bound: `H* = L P sign(Λ) Pᵀ` for the nonconvex
/// class (negated for [`ErrorSign::Negative`]), `L P sign(max(0, ±Λ)) Pᵀ` for
/// the convex class.
pub fn worst_case_quadratic(g: &GMatrix, lipschitz: f64, class: BoundClass, sign: ErrorSign) -> Quadratic {
    let signs = g.eigen_signs();
    let diag = DVector::from_fn(g.dim(), |i, _| {
        let s = signs[i] as f64;
        match (class, sign) {
            (BoundClass::Nonconvex, ErrorSign::Positive) => s,
            (BoundClass::Nonconvex, ErrorSign::Negative) => -s,
            (BoundClass::Convex, ErrorSign::Positive) => s.max(0.0),
            (BoundClass::Convex, ErrorSign::Negative) => (-s).max(0.0),
        }
    });
    let p = &g.eigenvectors;
    let h = p * DMatrix::from_diagonal(&diag) * p.transpose() * lipschitz;
    Quadratic::pure((&h + h.transpose()) * 0.5)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub query: Query,
    pub class: BoundClass,
    pub lipschitz: f64,
    pub radius: f64,
    /// Closed-form value, present when the simplex is regular.
    pub closed_form: Option<f64>,
    /// `L/2 ‖G‖_*` or its convex counterpart; valid for any simplex.
    pub bound: f64,
    /// `|f̂(x) − f(x)|` for the worst-case quadratic, by direct evaluation.
    pub achieved: f64,
    pub worst_sign: ErrorSign,
    pub eigenvalues: Vec<f64>,
    pub mu_certificate: Option<MuCertificate>,
    pub certificate_error: Option<String>,
}

impl BoundReport {
    /// The achieved error matches the bound (and the closed form, if any) to
    /// `1e-9` relative, and the certificate is present and nonnegative.
    pub fn is_sharp(&self) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
        close(self.achieved, self.bound)
            && self.closed_form.is_none_or(|c| close(c, self.bound))
            && self.mu_certificate.as_ref().is_some_and(|m| m.sharp)
    }
}

pub fn bound_report(s: &Simplex, query: Query, class: BoundClass, lipschitz: f64) -> Result<BoundReport> {
    if !(lipschitz > 0.0) {
        return Err(invalid("L must be positive"));
    }
    let x = query.point(s)?;
    let coeffs = lagrange_coefficients(s, &x)?;
    let g = g_matrix_from(s, &x, &coeffs);
    let bound = nuclear_bound_from_g(&g, lipschitz, class);

    let worst_sign = match class {
        BoundClass::Nonconvex => ErrorSign::Positive,
        BoundClass::Convex if g.negative_trace() > g.positive_trace() => ErrorSign::Negative,
        BoundClass::Convex => ErrorSign::Positive,
    };
    let q = worst_case_quadratic(&g, lipschitz, class, worst_sign);
    let achieved = interpolation_error(s, &x, &coeffs, |u| q.evaluate(u)).abs();

    let regular = s.regularity_report().max_deviation() <= GEOMETRY_TOL;
    let closed_form = if regular {
        Some(error_bound(query.kind(), class, s.dim(), lipschitz, s.radius(), query.gamma())?)
    } else {
        None
    };
    let (mu_certificate, certificate_error) = match mu_certificate_from(s, &x, &coeffs, &g) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(BoundReport {
        query,
        class,
        lipschitz,
        radius: s.radius(),
        closed_form,
        bound,
        achieved,
        worst_sign,
        eigenvalues: g.eigenvalues.iter().copied().collect(),
        mu_certificate,
        certificate_error,
    })
}

/// Draws a quadratic with `‖H‖₂ ≤ L` (and `H ⪰ 0` for the convex class).
///
/// Roughly one draw in eight sits exactly on `‖H‖₂ = L`; the rest are scaled
/// uniformly below it.
pub fn random_quadratic<R: Rng>(n: usize, lipschitz: f64, class: BoundClass, rng: &mut R) -> Quadratic {
    let mut gauss = || rng.sample::<f64, _>(StandardNormal);
    let a = DMatrix::from_fn(n, n, |_, _| gauss());
    let h = match class {
        BoundClass::Nonconvex => (&a + a.transpose()) * 0.5,
        BoundClass::Convex => &a * a.transpose(),
    };
    let v = DVector::from_fn(n, |_, _| gauss());
    let c = gauss();
    let norm = h.symmetric_eigenvalues().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let level = if rng.gen_range(0..8) == 0 { 1.0 } else { rng.gen_range(0.0..1.0) };
    let h = if norm > 0.0 { h * (lipschitz * level / norm) } else { h };
    Quadratic { h, v, c }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DominanceReport {
    pub query: Query,
    pub class: BoundClass,
    pub bound: f64,
    pub samples: usize,
    pub violations: usize,
    /// Largest observed `|f̂ − f| / bound`.
    pub max_ratio: f64,
}

/// Brute-force check of a bound against seeded random quadratics of the class.
/// Sample `i` draws from ChaCha stream `i`, so the result does not depend on
/// thread scheduling.
pub fn dominance_sweep(
    s: &Simplex,
    query: Query,
    class: BoundClass,
    lipschitz: f64,
    samples: usize,
    seed: u64,
) -> Result<DominanceReport> {
    let x = query.point(s)?;
    let coeffs = lagrange_coefficients(s, &x)?;
    let regular = s.regularity_report().max_deviation() <= GEOMETRY_TOL;
    let bound = if regular {
        error_bound(query.kind(), class, s.dim(), lipschitz, s.radius(), query.gamma())?
    } else {
        nuclear_bound_from_g(&g_matrix_from(s, &x, &coeffs), lipschitz, class)
    };
    let n = s.dim();
    let ratios: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let q = random_quadratic(n, lipschitz, class, &mut rng);
            interpolation_error(s, &x, &coeffs, |u| q.evaluate(u)).abs() / bound
        })
        .collect();
    let violations = ratios.iter().filter(|&&r| r > 1.0 + 1e-9).count();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(DominanceReport { query, class, bound, samples, violations, max_ratio })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`
    pub slack: f64,
    pub holds: bool,
}

impl InequalityCheck {
    fn new(lhs: f64, rhs: f64) -> Self {
        let tol = 1e-9 * lhs.abs().max(rhs.abs()) + 1e-300;
        InequalityCheck { lhs, rhs, slack: rhs - lhs, holds: lhs <= rhs + tol }
    }
}

/// Centroid-gradient inequalities on a regular simplex.
///
/// - `gradient_error`: `‖∇f(c) − ∇f̂(c)‖ ≤ (√n/2) L δ`
/// - `simplex_gradient_upper`: `‖∇f̂(c)‖ ≤ (n/δ)(f_max − mean f)`
/// - `gap_lower`: `f_max − mean f ≥ (δ/n)(‖∇f(c)‖ − (√n/2) L δ)`
///
/// The first and last need an exact gradient and `L`; without them they are
/// `None` and `gradient_available` is false.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub gradient_available: bool,
    pub gradient_error: Option<InequalityCheck>,
    pub simplex_gradient_upper: InequalityCheck,
    pub gap_lower: Option<InequalityCheck>,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        self.simplex_gradient_upper.holds
            && self.gradient_error.is_none_or(|c| c.holds)
            && self.gap_lower.is_none_or(|c| c.holds)
    }
}

pub fn check_centroid_inequalities<O: Objective + ?Sized>(s: &Simplex, objective: &O) -> Result<InequalityReport> {
    let n = s.dim();
    let nf = n as f64;
    let delta = s.radius();
    let values: Vec<f64> = s.vertices().iter().map(|x| objective.evaluate(x)).collect();
    let g_hat = simplex_gradient(s, &values)?;
    let mean = values.iter().sum::<f64>() / (nf + 1.0);
    let f_max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gap = f_max - mean;

    let simplex_gradient_upper = InequalityCheck::new(g_hat.norm(), nf / delta * gap);

    let c = s.centroid();
    let (gradient_error, gap_lower) = match (objective.gradient(&c), objective.metadata().lipschitz) {
        (Some(g), Some(l)) => {
            let half = nf.sqrt() / 2.0 * l * delta;
            (
                Some(InequalityCheck::new((&g - &g_hat).norm(), half)),
                Some(InequalityCheck::new(delta / nf * (g.norm() - half), gap)),
            )
        }
        _ => (None, None),
    };
    Ok(InequalityReport {
        gradient_available: gradient_error.is_some(),
        gradient_error,
        simplex_gradient_upper,
        gap_lower,
    })
}
