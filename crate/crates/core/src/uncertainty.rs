//! Box-shaped price uncertainty.
//!
//! Every market price scales independently by a factor in
//! `[1 - alpha, 1 + alpha]` around its nominal value. Pseudo-resource
//! components registered by the model compiler (the dummy tariff) are
//! pinned to a fixed value by equality pairs in the polyhedron.

use crate::model::PriceVector;
use crate::sparse::SparseMatrix;
use thiserror::Error;

/// Absolute slack used by membership tests.
pub const CONTAINS_SLACK: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum UncertaintyError {
    #[error("alpha must lie in [0, 1), got {0}")]
    AlphaOutOfRange(f64),
    #[error("nominal prices must be nonnegative and finite")]
    BadNominal,
}

/// Nominal prices plus a relative half-width.
#[derive(Debug, Clone, PartialEq)]
pub struct PriceBox {
    pub nominal: PriceVector,
    pub alpha: f64,
}

/// Explicit component bounds over the full price space (market components
/// first, pinned pseudo-components after).
#[derive(Debug, Clone, PartialEq)]
pub struct BoxBounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub nominal: Vec<f64>,
}

/// Polyhedron rows `lhs * p >= rhs`.
#[derive(Debug, Clone)]
pub struct PricePolyhedron {
    pub lhs: SparseMatrix,
    pub rhs: Vec<f64>,
}

impl PriceBox {
    pub fn new(nominal: PriceVector, alpha: f64) -> Result<Self, UncertaintyError> {
        if !(0.0..1.0).contains(&alpha) {
            return Err(UncertaintyError::AlphaOutOfRange(alpha));
        }
        if nominal.as_array().iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(UncertaintyError::BadNominal);
        }
        Ok(Self { nominal, alpha })
    }

    /// Component bounds over the full price space; `pins` appends pinned
    /// pseudo-components as `(index, value)` with
    /// `index >= PriceVector::DIM`.
    pub fn bounds(&self, pins: &[(usize, f64)]) -> BoxBounds {
        let market = self.nominal.as_array();
        let dim = PriceVector::DIM + pins.len();
        let mut lower = vec![0.0; dim];
        let mut upper = vec![0.0; dim];
        let mut nominal = vec![0.0; dim];
        for (r, &p) in market.iter().enumerate() {
            lower[r] = p * (1.0 - self.alpha);
            upper[r] = p * (1.0 + self.alpha);
            nominal[r] = p;
        }
        for &(idx, v) in pins {
            assert!(idx >= PriceVector::DIM && idx < dim, "pin index {idx} out of place");
            lower[idx] = v;
            upper[idx] = v;
            nominal[idx] = v;
        }
        BoxBounds { lower, upper, nominal }
    }

    /// The polyhedron rows `E p >= f`: a `p_r >= lo` / `-p_r >= -hi` pair
    /// per market component plus an equality pair per pinned component.
    pub fn to_polyhedron(&self, pins: &[(usize, f64)]) -> PricePolyhedron {
        self.bounds(pins).to_polyhedron()
    }

    /// All corners of the free components (deterministic order), pinned
    /// components held fixed. See [`BoxBounds::corners`].
    pub fn corners(&self, pins: &[(usize, f64)]) -> Vec<Vec<f64>> {
        self.bounds(pins).corners()
    }

    /// Membership within absolute slack [`CONTAINS_SLACK`].
    pub fn contains(&self, p: &[f64], pins: &[(usize, f64)]) -> bool {
        self.bounds(pins).contains(p)
    }
}

impl BoxBounds {
    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    /// Components with genuine width; everything else is pinned.
    pub fn free_components(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&r| self.upper[r] - self.lower[r] > 0.0)
            .collect()
    }

    pub fn to_polyhedron(&self) -> PricePolyhedron {
        let mut lhs = SparseMatrix::new(self.dim());
        let mut rhs = Vec::new();
        for r in 0..self.dim() {
            lhs.push_row(&[(r, 1.0)]);
            rhs.push(self.lower[r]);
            lhs.push_row(&[(r, -1.0)]);
            rhs.push(-self.upper[r]);
        }
        PricePolyhedron { lhs, rhs }
    }

    /// The `2^m` corners over the `m` free components, in lexicographic
    /// order by component index with the low end before the high end; the
    /// first corner is all-low, the last all-high.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let free = self.free_components();
        let m = free.len();
        assert!(m < 20, "corner enumeration over {m} free components");
        let mut out = Vec::with_capacity(1 << m);
        for idx in 0..(1_usize << m) {
            let mut p = self.lower.clone();
            for (pos, &r) in free.iter().enumerate() {
                let high = (idx >> (m - 1 - pos)) & 1 == 1;
                p[r] = if high { self.upper[r] } else { self.lower[r] };
            }
            out.push(p);
        }
        out
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.dim()
            && (0..self.dim()).all(|r| {
                p[r] >= self.lower[r] - CONTAINS_SLACK && p[r] <= self.upper[r] + CONTAINS_SLACK
            })
    }

    /// Midpoint of the box.
    pub fn center(&self) -> Vec<f64> {
        (0..self.dim()).map(|r| 0.5 * (self.lower[r] + self.upper[r])).collect()
    }

    /// Splits along `component` at the midpoint.
    pub fn split(&self, component: usize) -> (BoxBounds, BoxBounds) {
        let mid = 0.5 * (self.lower[component] + self.upper[component]);
        let mut low = self.clone();
        low.upper[component] = mid;
        let mut high = self.clone();
        high.lower[component] = mid;
        (low, high)
    }

    /// Edge lengths relative to the nominal component magnitudes, the
    /// branching measure.
    pub fn relative_widths(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|r| (self.upper[r] - self.lower[r]) / self.nominal[r].abs().max(1e-12))
            .collect()
    }
}
