use crate::error::{Error, Result};

/// Ordered abscissae with optional quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RealGrid {
    points: Vec<f64>,
    weights: Option<Vec<f64>>,
}

impl RealGrid {
    pub fn new(points: Vec<f64>, weights: Option<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidInput("a grid needs at least two points".into()));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidInput("grid points must be finite".into()));
        }
        if points.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput("grid points must be strictly increasing".into()));
        }
        if let Some(w) = &weights {
            if w.len() != points.len() || w.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(
                    "grid weights must be finite and match the number of points".into(),
                ));
            }
        }
        Ok(Self { points, weights })
    }

    /// `n` equally spaced points from `lo` to `hi` inclusive, with trapezoid weights.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 || !(lo < hi) {
            return Err(Error::InvalidInput(format!("bad grid spec {lo}:{hi}:{n}")));
        }
        let step = (hi - lo) / (n - 1) as f64;
        let mut points: Vec<f64> = (0..n).map(|i| lo + step * i as f64).collect();
        points[n - 1] = hi;
        let mut weights = vec![step; n];
        weights[0] = 0.5 * step;
        weights[n - 1] = 0.5 * step;
        Self::new(points, Some(weights))
    }

    /// `n` log-spaced points between positive `lo` and `hi`.
    pub fn geomspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0) {
            return Err(Error::InvalidInput("geomspace needs a positive lower end".into()));
        }
        let log_grid = Self::linspace(lo.ln(), hi.ln(), n)?;
        Self::new(log_grid.points.iter().map(|x| x.exp()).collect(), None)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    pub fn lo(&self) -> f64 {
        self.points[0]
    }

    pub fn hi(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Weighted sum of `values` using the stored weights, or the trapezoid
    /// rule on the points when none are stored.
    pub fn sum(&self, values: &[f64]) -> f64 {
        match &self.weights {
            Some(w) => w.iter().zip(values).map(|(w, v)| w * v).sum(),
            None => self
                .points
                .windows(2)
                .zip(values.windows(2))
                .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
                .sum(),
        }
    }
}
