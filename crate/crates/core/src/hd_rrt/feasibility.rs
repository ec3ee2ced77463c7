//! Meta-segment slope evaluation of straight edges over a 2.5D map.

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scalar::{from_usize, lit, Scalar};
use crate::terrain::TerrainView;

/// Climb limit, cumulative flatness budget and meta-segment length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityParams<T> {
    /// Largest admissible `|Δh/Δl|` on any single meta segment.
    pub alpha_grad: T,
    /// Largest admissible sum of `|Δh/Δl|` over an edge's meta segments.
    pub beta_flat: T,
    pub meta_len: T,
}

impl<T: Scalar> FeasibilityParams<T> {
    pub fn validate(&self, resolution: T) -> Result<()> {
        if !(self.alpha_grad > T::zero()) {
            return Err(Error::config("feasibility.alpha_grad", "must be strictly positive"));
        }
        if !(self.beta_flat > T::zero()) {
            return Err(Error::config("feasibility.beta_flat", "must be strictly positive"));
        }
        if !(self.meta_len > T::zero()) || self.meta_len > resolution * lit(2.0) {
            return Err(Error::config(
                "feasibility.meta_len",
                "must lie in (0, 2 × resolution]",
            ));
        }
        Ok(())
    }
}

/// Which clause rejected an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Infeasibility {
    /// Some meta segment is steeper than `alpha_grad`.
    Slope,
    /// Summed meta-segment slope exceeds `beta_flat`.
    Flatness,
    /// The edge crosses a hazard-flagged cell.
    Hazard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Feasible,
    Infeasible(Infeasibility),
    /// Part of the edge lies over terrain that has not been observed.
    Unknown,
}

impl Verdict {
    pub fn is_feasible(self) -> bool {
        self == Verdict::Feasible
    }
}

/// Verdict plus the mean `|ℓ|` over the edge (zero unless feasible).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeAssessment<T> {
    pub verdict: Verdict,
    pub mean_gradient: T,
}

/// Number of meta segments for an edge of planar length `len`.
pub fn meta_segment_count<T: Scalar>(len: T, meta_len: T) -> usize {
    (len / meta_len).ceil().to_usize().unwrap_or(1).max(1)
}

/// Signed rise-over-run of each meta segment along `p -> q`; `None` where an
/// endpoint elevation is unknown.
pub fn gradability<T: Scalar, V: TerrainView<T> + ?Sized>(
    p: Point2<T>,
    q: Point2<T>,
    map: &V,
    meta_len: T,
) -> Result<Vec<Option<T>>> {
    let len = p.distance(q);
    if len == T::zero() {
        return Err(Error::ZeroLengthSegment);
    }
    let n = meta_segment_count(len, meta_len);
    let nf = from_usize::<T>(n);
    let run = len / nf;
    let heights: Vec<Option<T>> = (0..=n)
        .map(|k| map.elevation_at(p.lerp(q, from_usize::<T>(k) / nf)))
        .collect();
    Ok(heights
        .windows(2)
        .map(|w| match (w[0], w[1]) {
            (Some(a), Some(b)) => Some((b - a) / run),
            _ => None,
        })
        .collect())
}

/// Whether the straight segment passes over any hazard-flagged cell.
pub fn crosses_hazard<T: Scalar, V: TerrainView<T> + ?Sized>(p: Point2<T>, q: Point2<T>, map: &V) -> bool {
    let step = map.resolution() * lit(0.125);
    let n = (p.distance(q) / step).ceil().to_usize().unwrap_or(0).max(1);
    let nf = from_usize::<T>(n);
    (0..=n).any(|k| map.is_hazard(p.lerp(q, from_usize::<T>(k) / nf)))
}

/// Full edge evaluation. Clause precedence: hazard, then a too-steep known
/// meta segment, then unknown terrain, then the flatness budget.
pub fn assess_edge<T: Scalar, V: TerrainView<T> + ?Sized>(
    p: Point2<T>,
    q: Point2<T>,
    map: &V,
    params: &FeasibilityParams<T>,
) -> EdgeAssessment<T> {
    let verdict = |v| EdgeAssessment {
        verdict: v,
        mean_gradient: T::zero(),
    };
    if crosses_hazard(p, q, map) {
        return verdict(Verdict::Infeasible(Infeasibility::Hazard));
    }
    let slopes = match gradability(p, q, map, params.meta_len) {
        Ok(s) => s,
        Err(_) => {
            return verdict(if map.elevation_at(p).is_some() {
                Verdict::Feasible
            } else {
                Verdict::Unknown
            })
        }
    };
    if slopes.iter().flatten().any(|l| l.abs() > params.alpha_grad) {
        return verdict(Verdict::Infeasible(Infeasibility::Slope));
    }
    if slopes.iter().any(Option::is_none) {
        return verdict(Verdict::Unknown);
    }
    let total: T = slopes.iter().flatten().map(|l| l.abs()).sum();
    if total > params.beta_flat {
        return verdict(Verdict::Infeasible(Infeasibility::Flatness));
    }
    EdgeAssessment {
        verdict: Verdict::Feasible,
        mean_gradient: total / from_usize(slopes.len()),
    }
}

pub fn check_feasibility<T: Scalar, V: TerrainView<T> + ?Sized>(
    p: Point2<T>,
    q: Point2<T>,
    map: &V,
    params: &FeasibilityParams<T>,
) -> Verdict {
    assess_edge(p, q, map, params).verdict
}
