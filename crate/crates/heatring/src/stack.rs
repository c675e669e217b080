//! In-memory raster stack: one grid per timeline period, all sharing a spec.
//! Missing cells are NaN internally; the file-level NODATA sentinel is
//! normalized away on load and reinstated on write.

use crate::error::IngestError;
use crate::grid::{CellDistance, GridSpec};
use crate::timeline::{Cadence, MonthKey, Period};

/// One raster layer, row-major, row 0 = north. NaN marks missing cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    pub values: Vec<f64>,
}

impl Grid {
    pub fn constant(spec: GridSpec, value: f64) -> Self {
        Grid { values: vec![value; spec.n_cells()], spec }
    }

    #[inline]
    pub fn idx(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.spec.nrows && col < self.spec.ncols);
        row * self.spec.ncols + col
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[self.idx(row, col)]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        let i = self.idx(row, col);
        self.values[i] = value;
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }
}

/// Immutable time series of grids. Timeline is strictly increasing; gaps are
/// allowed (callers look periods up by key, never by arithmetic on indices).
#[derive(Debug, Clone)]
pub struct RasterStack {
    pub variable: String,
    pub units: String,
    pub cadence: Cadence,
    pub spec: GridSpec,
    pub periods: Vec<Period>,
    pub grids: Vec<Grid>,
}

impl RasterStack {
    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    /// Structural invariants; load paths call this after assembly because
    /// the fields are public and arrive from parsed input.
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.periods.is_empty() {
            return Err(IngestError::EmptyStack);
        }
        if self.grids.len() != self.periods.len() {
            return Err(IngestError::Inconsistent {
                reason: format!(
                    "{} periods but {} grids",
                    self.periods.len(),
                    self.grids.len()
                ),
            });
        }
        for w in self.periods.windows(2) {
            if w[1] <= w[0] {
                return Err(IngestError::TimelineOrder {
                    first: w[0].to_string(),
                    second: w[1].to_string(),
                });
            }
        }
        for (period, grid) in self.periods.iter().zip(&self.grids) {
            let cadence_ok = matches!(
                (self.cadence, period),
                (Cadence::Monthly, Period::Month(_)) | (Cadence::Daily, Period::Day(_))
            );
            if !cadence_ok {
                return Err(IngestError::Inconsistent {
                    reason: format!("period {period} does not match {} cadence", self.cadence),
                });
            }
            if grid.spec != self.spec {
                return Err(IngestError::Inconsistent {
                    reason: format!("grid for {period} disagrees with the stack spec"),
                });
            }
            if grid.values.len() != self.spec.n_cells() {
                return Err(IngestError::Inconsistent {
                    reason: format!(
                        "grid for {period} has {} cells, spec says {}",
                        grid.values.len(),
                        self.spec.n_cells()
                    ),
                });
            }
        }
        Ok(())
    }

    /// Position of month `m` in a monthly timeline, or None if absent
    /// (gap, out of range, or daily cadence).
    pub fn position_of_month(&self, m: MonthKey) -> Option<usize> {
        if self.cadence != Cadence::Monthly {
            return None;
        }
        self.periods.binary_search_by_key(&m.0, |p| p.month().0).ok()
    }

    pub fn first_month(&self) -> Option<MonthKey> {
        self.periods.first().map(Period::month)
    }

    pub fn last_month(&self) -> Option<MonthKey> {
        self.periods.last().map(Period::month)
    }

    /// Per-month mean over `cells` (valid members only), on the contiguous
    /// month axis spanning the stack; NaN where no cell is valid or the
    /// month is absent from the timeline. Also returns per-month valid-cell
    /// counts. Cells are summed in the order given, which keeps the result
    /// bit-identical for a fixed cell list.
    ///
    /// Panics on an empty or non-monthly stack.
    pub fn cell_mean_series(&self, cells: &[CellDistance]) -> (MonthSeries, Vec<u32>) {
        assert_eq!(self.cadence, Cadence::Monthly, "cell_mean_series needs a monthly stack");
        let start = self.first_month().expect("non-empty stack");
        let end = self.last_month().expect("non-empty stack");
        let len = (end.months_since(start) + 1) as usize;
        let mut values = vec![f64::NAN; len];
        let mut counts = vec![0u32; len];
        for (grid, period) in self.grids.iter().zip(&self.periods) {
            let off = period.month().months_since(start) as usize;
            let mut sum = 0.0;
            let mut n = 0u32;
            for c in cells {
                let v = grid.get(c.row, c.col);
                if !v.is_nan() {
                    sum += v;
                    n += 1;
                }
            }
            if n > 0 {
                values[off] = sum / n as f64;
            }
            counts[off] = n;
        }
        (MonthSeries::new(start, values), counts)
    }
}

/// A per-month scalar series on a contiguous month axis. NaN marks months
/// that are missing or invalid; the axis itself has no holes.
#[derive(Debug, Clone, PartialEq)]
pub struct MonthSeries {
    pub start: MonthKey,
    pub values: Vec<f64>,
}

impl MonthSeries {
    pub fn new(start: MonthKey, values: Vec<f64>) -> Self {
        MonthSeries { start, values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Last covered month (inclusive). Meaningless on an empty series.
    pub fn end(&self) -> MonthKey {
        self.start.offset(self.values.len() as i64 - 1)
    }

    /// Value at month `m`; None outside the axis, NaN for covered-but-missing.
    pub fn get(&self, m: MonthKey) -> Option<f64> {
        let off = m.months_since(self.start);
        if off < 0 || off as usize >= self.values.len() {
            None
        } else {
            Some(self.values[off as usize])
        }
    }

    pub fn valid_count(&self) -> usize {
        self.values.iter().filter(|v| !v.is_nan()).count()
    }
}
