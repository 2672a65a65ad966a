//! Error curves recorded during training and their cross-run averages.

use crate::error::{Error, Result};

/// `(iteration, cost)` records with strictly increasing iterations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ErrorCurve {
    points: Vec<(u64, f64)>,
}

impl ErrorCurve {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_points(points: Vec<(u64, f64)>) -> Result<Self> {
        let mut curve = Self::new();
        for (it, c) in points {
            curve.push(it, c)?;
        }
        Ok(curve)
    }

    /// Appends a record; the iteration must exceed the last one recorded.
    pub fn push(&mut self, iteration: u64, cost: f64) -> Result<()> {
        if !cost.is_finite() {
            return Err(Error::Numeric {
                iteration,
                candidate: None,
                cost,
            });
        }
        if let Some(&(last, _)) = self.points.last() {
            if iteration <= last {
                return Err(Error::Argument(format!(
                    "curve iteration {iteration} does not follow {last}"
                )));
            }
        }
        self.points.push((iteration, cost));
        Ok(())
    }

    /// Records the final point unless that iteration is already the last one.
    pub(crate) fn finish(&mut self, iteration: u64, cost: f64) -> Result<()> {
        match self.points.last() {
            Some(&(last, _)) if last == iteration => Ok(()),
            _ => self.push(iteration, cost),
        }
    }

    pub fn points(&self) -> &[(u64, f64)] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn last(&self) -> Option<(u64, f64)> {
        self.points.last().copied()
    }

    /// Best cost seen up to each record.
    pub fn running_min(&self) -> Vec<(u64, f64)> {
        let mut best = f64::INFINITY;
        self.points
            .iter()
            .map(|&(it, c)| {
                best = best.min(c);
                (it, best)
            })
            .collect()
    }

    /// First record at or below `target`.
    pub fn first_at_or_below(&self, target: f64) -> Option<(u64, f64)> {
        self.points.iter().copied().find(|&(_, c)| c <= target)
    }

    /// Cost at the latest record not after `iteration`.
    pub fn value_at(&self, iteration: u64) -> Option<f64> {
        let idx = self.points.partition_point(|&(it, _)| it <= iteration);
        idx.checked_sub(1).map(|i| self.points[i].1)
    }
}

/// Mean across runs at every iteration recorded by any run.
///
/// A run contributes its latest recorded cost at or before each iteration,
/// so a run that stopped early carries its final value forward.
pub fn average_curves(curves: &[ErrorCurve]) -> Result<ErrorCurve> {
    if curves.is_empty() || curves.iter().any(ErrorCurve::is_empty) {
        return Err(Error::Argument("cannot average empty curves".into()));
    }
    let mut grid: Vec<u64> = curves.iter().flat_map(|c| c.points.iter().map(|p| p.0)).collect();
    grid.sort_unstable();
    grid.dedup();
    let start = curves.iter().map(|c| c.points[0].0).max().unwrap_or(0);
    let mut out = ErrorCurve::new();
    for it in grid.into_iter().filter(|&it| it >= start) {
        let sum: f64 = curves.iter().filter_map(|c| c.value_at(it)).sum();
        out.push(it, sum / curves.len() as f64)?;
    }
    Ok(out)
}
