//! Regular simplex geometry in `ℝⁿ`.
//!
//! A [`Simplex`] stores its `n+1` vertices together with the nominal radius
//! `δ`, the common centroid-to-vertex distance. Reflection of one vertex
//! through the opposite face and uniform shrinking toward one vertex both map
//! regular simplices to regular simplices, so the solver never re-measures the
//! radius; [`Simplex::regularity_report`] is how drift is detected instead.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type Point = DVector<f64>;

/// Relative tolerance for geometric equality checks against `δ`.
pub const GEOMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SimplexJson", into = "SimplexJson")]
pub struct Simplex {
    vertices: Vec<Point>,
    radius: f64,
}

/// Wire form: `{"dim": n, "radius": δ, "vertices": [[...], ...]}`.
#[derive(Serialize, Deserialize)]
struct SimplexJson {
    dim: usize,
    radius: f64,
    vertices: Vec<Vec<f64>>,
}

impl TryFrom<SimplexJson> for Simplex {
    type Error = Error;

    fn try_from(raw: SimplexJson) -> Result<Self> {
        let vertices: Vec<Point> = raw.vertices.into_iter().map(DVector::from_vec).collect();
        if vertices.first().map(|v| v.len()) != Some(raw.dim) {
            return Err(invalid(format!("vertex length does not match dim {}", raw.dim)));
        }
        Simplex::with_radius(vertices, raw.radius)
    }
}

impl From<Simplex> for SimplexJson {
    fn from(s: Simplex) -> Self {
        SimplexJson {
            dim: s.dim(),
            radius: s.radius,
            vertices: s.vertices.iter().map(|v| v.iter().copied().collect()).collect(),
        }
    }
}

/// Relative deviations from exact regularity, both measured against the
/// nominal radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    /// `max_i |‖x_i − c‖ − δ| / δ`
    pub centroid_distance_deviation: f64,
    /// `max_{i<j} |‖x_i − x_j‖ − e| / e` with `e² = 2(1+1/n)δ²`
    pub edge_length_deviation: f64,
}

impl RegularityReport {
    pub fn max_deviation(&self) -> f64 {
        self.centroid_distance_deviation.max(self.edge_length_deviation)
    }
}

/// Builds the regular simplex with the given centroid and radius.
///
/// The vertices are the rows of the Helmert basis of the hyperplane orthogonal
/// to the all-ones vector in `ℝⁿ⁺¹`, i.e. the projected standard basis vectors
/// written in an orthonormal frame. Coordinate `k` (1-based) of vertex `i`
/// (0-based) is `1/√(k(k+1))` for `i < k`, `−k/√(k(k+1))` for `i = k` and `0`
/// otherwise; each such vertex sits at distance `√(n/(n+1))` from the origin.
pub fn make_regular_simplex(center: &Point, radius: f64, n: usize) -> Result<Simplex> {
    if n == 0 {
        return Err(invalid("dimension must be at least 1"));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be positive and finite, got {radius}")));
    }
    if center.len() != n {
        return Err(invalid(format!("center has length {}, expected {n}", center.len())));
    }
    if center.iter().any(|c| !c.is_finite()) {
        return Err(invalid("center has non-finite coordinates"));
    }

    let scale = radius / (n as f64 / (n as f64 + 1.0)).sqrt();
    let vertices = (0..=n)
        .map(|i| {
            let mut x = center.clone();
            for k in 1..=n {
                let kf = k as f64;
                let norm = (kf * (kf + 1.0)).sqrt();
                let h = match i.cmp(&k) {
                    std::cmp::Ordering::Less => 1.0 / norm,
                    std::cmp::Ordering::Equal => -kf / norm,
                    std::cmp::Ordering::Greater => 0.0,
                };
                x[k - 1] += scale * h;
            }
            x
        })
        .collect();
    Ok(Simplex { vertices, radius })
}

impl Simplex {
    /// Wraps an arbitrary vertex set, taking the mean centroid distance as the
    /// nominal radius. The result need not be regular.
    pub fn from_vertices(vertices: Vec<Point>) -> Result<Self> {
        validate_vertices(&vertices)?;
        let c = mean(&vertices);
        let radius = vertices.iter().map(|v| (v - &c).norm()).sum::<f64>() / vertices.len() as f64;
        Self::with_radius(vertices, radius)
    }

    /// Wraps a vertex set with an explicitly stated nominal radius.
    pub fn with_radius(vertices: Vec<Point>, radius: f64) -> Result<Self> {
        validate_vertices(&vertices)?;
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(invalid(format!("radius must be positive and finite, got {radius}")));
        }
        Ok(Simplex { vertices, radius })
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &Point {
        &self.vertices[i]
    }

    pub fn centroid(&self) -> Point {
        mean(&self.vertices)
    }

    /// `x_r = −x_w + (2/n) Σ_{i≠w} x_i`.
    pub fn reflect_worst(&self, worst: usize) -> Result<Point> {
        self.check_index(worst)?;
        let n = self.dim();
        let mut face_sum = Point::zeros(n);
        for (i, x) in self.vertices.iter().enumerate() {
            if i != worst {
                face_sum += x;
            }
        }
        Ok(face_sum * (2.0 / n as f64) - &self.vertices[worst])
    }

    /// Returns a copy with vertex `index` replaced; the nominal radius is kept,
    /// which is exact when `point` is the reflection of that vertex.
    pub fn replace_vertex(&self, index: usize, point: Point) -> Result<Simplex> {
        self.check_index(index)?;
        if point.len() != self.dim() {
            return Err(invalid("replacement point has wrong dimension"));
        }
        let mut vertices = self.vertices.clone();
        vertices[index] = point;
        Ok(Simplex { vertices, radius: self.radius })
    }

    /// `x_i ← γ x_i + (1−γ) x_best` for every `i ≠ best`; the radius becomes `γδ`.
    pub fn shrink_toward_best(&self, best: usize, gamma: f64) -> Result<Simplex> {
        self.check_index(best)?;
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(invalid(format!("shrink factor must lie in (0,1), got {gamma}")));
        }
        let anchor = &self.vertices[best];
        let vertices = self
            .vertices
            .iter()
            .enumerate()
            .map(|(i, x)| if i == best { x.clone() } else { x * gamma + anchor * (1.0 - gamma) })
            .collect();
        Ok(Simplex { vertices, radius: gamma * self.radius })
    }

    pub fn regularity_report(&self) -> RegularityReport {
        let n = self.dim() as f64;
        let delta = self.radius;
        let edge = delta * (2.0 * (1.0 + 1.0 / n)).sqrt();
        let c = self.centroid();

        let centroid_distance_deviation =
            self.vertices.iter().map(|x| ((x - &c).norm() - delta).abs() / delta).fold(0.0, f64::max);

        let mut edge_length_deviation: f64 = 0.0;
        for (i, xi) in self.vertices.iter().enumerate() {
            for xj in &self.vertices[i + 1..] {
                let dev = ((xi - xj).norm() - edge).abs() / edge;
                edge_length_deviation = edge_length_deviation.max(dev);
            }
        }
        RegularityReport { centroid_distance_deviation, edge_length_deviation }
    }

    fn check_index(&self, index: usize) -> Result<()> {
        if index >= self.vertices.len() {
            return Err(invalid(format!("vertex index {index} out of range for {} vertices", self.vertices.len())));
        }
        Ok(())
    }
}

fn validate_vertices(vertices: &[Point]) -> Result<()> {
    let n = vertices.first().map(|v| v.len()).unwrap_or(0);
    if n == 0 {
        return Err(invalid("simplex needs at least one dimension"));
    }
    if vertices.len() != n + 1 {
        return Err(invalid(format!("expected {} vertices in dimension {n}, got {}", n + 1, vertices.len())));
    }
    if vertices.iter().any(|v| v.len() != n) {
        return Err(invalid("vertices have inconsistent dimensions"));
    }
    if vertices.iter().flat_map(|v| v.iter()).any(|x| !x.is_finite()) {
        return Err(invalid("vertices have non-finite coordinates"));
    }
    Ok(())
}

fn mean(points: &[Point]) -> Point {
    let mut acc = Point::zeros(points[0].len());
    for p in points {
        acc += p;
    }
    acc / points.len() as f64
}
