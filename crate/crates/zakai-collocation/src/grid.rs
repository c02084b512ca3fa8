//! Collocation point sets in the box `(-R, R)^d` and their geometry.
//!
//! Two numbers summarize how well a point set Γ covers the box: the fill
//! distance
//!
//! ```text
//! Δ₁x = sup_{x ∈ (-R,R)^d} min_j |x - x_j|
//! ```
//!
//! (how far any box point can be from Γ) and the separation distance
//! `Δ₂x = (1/2) min_{i≠j} |x_i - x_j|`. Always `Δ₂x ≤ Δ₁x`. The uniform 1-D rule
//! places `N` equispaced points strictly inside the interval, leaving a boundary
//! gap of twice the interior half-spacing, so its fill distance is the boundary
//! gap `2R/(N+1)` while its separation distance is `R/(N+1)`.
//!
//! [`radius_schedule`] grows the half-width with the point count as
//! `R = (1/5)·N^{1-1/(2τ-2)}`, which shrinks the fill distance slowly while the
//! domain expands — the regime the convergence experiments operate in.

use crate::error::{Error, Result};

/// An ordered set of pairwise-distinct collocation points in `(-R, R)^d`,
/// with its fill and separation distances.
///
/// Immutable after construction; safe for unrestricted concurrent reads.
#[derive(Debug, Clone)]
pub struct CollocationGrid {
    points: Vec<Vec<f64>>,
    r: f64,
    fill: f64,
    sep: f64,
    fill_approximate: bool,
}

/// Fill and separation distances of a point set, as computed by [`distances`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distances {
    /// Fill distance `Δ₁x`; a lower bound when `approximate` is set.
    pub fill: f64,
    /// Separation distance `Δ₂x`, always exact.
    pub sep: f64,
    /// True when `fill` was estimated by lattice sampling rather than computed
    /// exactly (any point set with `d ≥ 2` that is not a known tensor grid).
    pub approximate: bool,
}

impl CollocationGrid {
    /// Build a grid from explicit points, computing both distances.
    ///
    /// A single point is allowed as a degenerate grid: its fill distance is the
    /// exact distance to the farthest box corner and its separation distance is
    /// `+∞` by convention (there are no pairs), so the `sep ≤ fill` relation
    /// only applies from two points up.
    pub fn from_points(points: Vec<Vec<f64>>, r: f64) -> Result<Self> {
        let d = validate_points(&points, r)?;
        if points.len() == 1 {
            let fill = points[0]
                .iter()
                .map(|&c| {
                    let gap = (c + r).max(r - c);
                    gap * gap
                })
                .sum::<f64>()
                .sqrt();
            return Ok(Self {
                points,
                r,
                fill,
                sep: f64::INFINITY,
                fill_approximate: false,
            });
        }
        debug_assert!(d >= 1);
        let dist = distances(&points, r)?;
        Ok(Self {
            points,
            r,
            fill: dist.fill,
            sep: dist.sep,
            fill_approximate: dist.approximate,
        })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    /// Number of points `N`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    /// Half-width `R` of the box `(-R, R)^d`.
    pub fn half_width(&self) -> f64 {
        self.r
    }

    /// Fill distance `Δ₁x`.
    pub fn fill(&self) -> f64 {
        self.fill
    }

    /// Separation distance `Δ₂x`.
    pub fn sep(&self) -> f64 {
        self.sep
    }

    /// True when the fill distance is a sampled lower bound, not exact.
    pub fn fill_is_approximate(&self) -> bool {
        self.fill_approximate
    }

    /// The coordinates as a flat vector; only valid for 1-D grids.
    pub fn coords_1d(&self) -> Result<Vec<f64>> {
        if self.dim() != 1 {
            return Err(Error::InvalidParameter(format!(
                "grid is {}-dimensional, expected 1-D",
                self.dim()
            )));
        }
        Ok(self.points.iter().map(|p| p[0]).collect())
    }
}

/// `N` equispaced points `x_j = -R + j·2R/(N+1)`, `j = 1..N`, strictly inside
/// `(-R, R)`. Fill distance `2R/(N+1)` (the boundary gap), separation `R/(N+1)`.
pub fn uniform_grid_1d(n: usize, r: f64) -> Result<CollocationGrid> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "uniform grid needs at least 2 points, got {n}"
        )));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "grid half-width must be positive and finite, got {r}"
        )));
    }
    let h = 2.0 * r / (n as f64 + 1.0);
    let points: Vec<Vec<f64>> = (1..=n).map(|j| vec![-r + j as f64 * h]).collect();
    validate_points(&points, r)?;
    Ok(CollocationGrid {
        points,
        r,
        fill: h,
        sep: h / 2.0,
        fill_approximate: false,
    })
}

/// Tensor product of the 1-D rule: `n^d` points in `(-R, R)^d`. The fill
/// distance is exact (`√d` times the 1-D boundary gap, attained at the box
/// corners); the separation distance is the 1-D value.
pub fn tensor_grid(n_per_axis: usize, r: f64, d: usize) -> Result<CollocationGrid> {
    if d == 0 {
        return Err(Error::InvalidParameter(
            "grid dimension must be positive".into(),
        ));
    }
    let axis = uniform_grid_1d(n_per_axis, r)?;
    let coords = axis.coords_1d()?;
    let total = coords
        .len()
        .checked_pow(d as u32)
        .filter(|&t| t <= 1_000_000)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "tensor grid {n_per_axis}^{d} exceeds the 1e6-point limit"
            ))
        })?;
    let mut points = Vec::with_capacity(total);
    let mut index = vec![0usize; d];
    loop {
        points.push(index.iter().map(|&i| coords[i]).collect());
        // Odometer increment over the d-fold index.
        let mut axis_no = 0;
        loop {
            index[axis_no] += 1;
            if index[axis_no] < coords.len() {
                break;
            }
            index[axis_no] = 0;
            axis_no += 1;
            if axis_no == d {
                return Ok(CollocationGrid {
                    points,
                    r,
                    fill: (d as f64).sqrt() * axis.fill(),
                    sep: axis.sep(),
                    fill_approximate: false,
                });
            }
        }
    }
}

/// The experiment half-width schedule `R = (1/5)·N^{1-1/(2τ-2)}`.
pub fn radius_schedule(n: usize, tau: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "point count must be positive".into(),
        ));
    }
    if tau < 2 {
        return Err(Error::InvalidParameter(format!(
            "radius schedule needs τ ≥ 2 (exponent degenerates), got {tau}"
        )));
    }
    let exponent = 1.0 - 1.0 / (2.0 * tau as f64 - 2.0);
    Ok(0.2 * (n as f64).powf(exponent))
}

/// Fill and separation distances of an arbitrary point set in `(-R, R)^d`.
///
/// The separation distance is always exact. The fill distance is exact in 1-D
/// (largest of the two boundary gaps and the interior half-gaps); for `d ≥ 2`
/// it is approximated from below by sampling a lattice of spacing ≤ sep/4 and
/// flagged `approximate`.
pub fn distances(points: &[Vec<f64>], r: f64) -> Result<Distances> {
    let d = validate_points(points, r)?;
    let sep = separation(points)?;
    if d == 1 {
        let mut coords: Vec<f64> = points.iter().map(|p| p[0]).collect();
        coords.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut fill = (coords[0] + r).max(r - coords[coords.len() - 1]);
        for pair in coords.windows(2) {
            fill = fill.max((pair[1] - pair[0]) / 2.0);
        }
        return Ok(Distances {
            fill,
            sep,
            approximate: false,
        });
    }

    // Dense-lattice lower bound for the sup over the box.
    let spacing = sep / 4.0;
    let nodes_per_axis = (2.0 * r / spacing).ceil() as usize + 1;
    let total = nodes_per_axis
        .checked_pow(d as u32)
        .filter(|&t| t <= 20_000_000)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "fill-distance lattice {nodes_per_axis}^{d} exceeds the 2e7-node limit; \
                 approximate fill is only supported for small point sets"
            ))
        })?;
    let step = 2.0 * r / (nodes_per_axis - 1) as f64;
    let mut fill = 0.0f64;
    let mut index = vec![0usize; d];
    let mut node = vec![0.0f64; d];
    for _ in 0..total {
        for (coord, &i) in node.iter_mut().zip(&index) {
            *coord = -r + i as f64 * step;
        }
        let nearest = points
            .iter()
            .map(|p| squared_distance(p, &node))
            .fold(f64::INFINITY, f64::min);
        fill = fill.max(nearest.sqrt());
        let mut axis_no = 0;
        while axis_no < d {
            index[axis_no] += 1;
            if index[axis_no] < nodes_per_axis {
                break;
            }
            index[axis_no] = 0;
            axis_no += 1;
        }
    }
    Ok(Distances {
        fill,
        sep,
        approximate: true,
    })
}

/// Checks shape, finiteness, box membership, and pairwise distinctness;
/// returns the common dimension.
fn validate_points(points: &[Vec<f64>], r: f64) -> Result<usize> {
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "box half-width must be positive and finite, got {r}"
        )));
    }
    let first = points
        .first()
        .ok_or_else(|| Error::InvalidParameter("point set is empty".into()))?;
    let d = first.len();
    if d == 0 {
        return Err(Error::InvalidParameter(
            "points must have at least one coordinate".into(),
        ));
    }
    for (j, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::InvalidParameter(format!(
                "point {j} has dimension {}, expected {d}",
                p.len()
            )));
        }
        if p.iter().any(|c| !c.is_finite() || c.abs() >= r) {
            return Err(Error::InvalidParameter(format!(
                "point {j} lies outside the open box (-{r}, {r})^{d}"
            )));
        }
    }
    Ok(d)
}

/// Exact separation distance; errors on coincident points.
fn separation(points: &[Vec<f64>]) -> Result<f64> {
    let mut min_sq = f64::INFINITY;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            let d_sq = squared_distance(&points[i], &points[j]);
            if d_sq == 0.0 {
                return Err(Error::DuplicatePoints(i, j));
            }
            min_sq = min_sq.min(d_sq);
        }
    }
    if min_sq.is_infinite() {
        // A single point has no pairs; treat its separation as unconstrained
        // by convention but reject it, since every consumer needs N ≥ 2.
        return Err(Error::InvalidParameter(
            "point set needs at least 2 points".into(),
        ));
    }
    Ok(min_sq.sqrt() / 2.0)
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
