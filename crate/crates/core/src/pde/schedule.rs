use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, SpatialGrid};

/// Spatial control field active on `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPiece {
    pub start: f64,
    pub end: f64,
    pub field: Field,
}

/// Trajectory-indexed term `−f(t, φ)/φ · 1_E` added on top of the pieces.
///
/// One field per solver step of the reference run, evaluated at the same
/// midpoint state the integrator feeds to the reaction term, so that in the
/// controlled run the reaction and this term cancel node by node.
#[derive(Debug, Clone)]
pub struct Cancellation {
    pub(crate) start: f64,
    pub(crate) dt: f64,
    pub(crate) terms: Vec<Field>,
    pub(crate) threshold: f64,
    pub(crate) bound: f64,
    pub(crate) nonlinearity: String,
}

impl Cancellation {
    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn steps(&self) -> usize {
        self.terms.len()
    }

    /// Term applied during step `k` of the run.
    pub fn term(&self, k: usize) -> &Field {
        &self.terms[k]
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    /// Declared growth constant of the cancelled reaction.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    /// Largest pointwise magnitude over all steps.
    pub fn max_magnitude(&self) -> f64 {
        self.terms.iter().map(Field::linf_norm).fold(0.0, f64::max)
    }
}

/// Piecewise-in-time control `v(x, t)`, optionally with a cancellation term.
#[derive(Debug, Clone)]
pub struct ControlSchedule {
    pieces: Vec<ControlPiece>,
    cancellation: Option<Cancellation>,
}

impl ControlSchedule {
    /// Pieces must start at 0, be contiguous, have `start < end`, share a grid and be bounded.
    pub fn new(pieces: Vec<ControlPiece>) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::Schedule("schedule needs at least one piece".into()))?;
        if first.start != 0.0 {
            return Err(Error::Schedule(format!(
                "first piece starts at {}, not 0",
                first.start
            )));
        }
        let grid = *first.field.grid();
        for (i, p) in pieces.iter().enumerate() {
            if !(p.start < p.end) || !p.end.is_finite() {
                return Err(Error::Schedule(format!(
                    "piece {i} has empty or invalid interval [{}, {})",
                    p.start, p.end
                )));
            }
            grid.ensure_same(p.field.grid())?;
            if let Some(index) = p.field.first_non_finite() {
                return Err(Error::NonFinite { index });
            }
            if i > 0 && p.start != pieces[i - 1].end {
                return Err(Error::Schedule(format!(
                    "gap or overlap between piece {} (ends {}) and piece {i} (starts {})",
                    i - 1,
                    pieces[i - 1].end,
                    p.start
                )));
            }
        }
        Ok(Self {
            pieces,
            cancellation: None,
        })
    }

    /// Single static piece on `[0, horizon]`.
    pub fn constant(field: Field, horizon: f64) -> Result<Self> {
        Self::new(vec![ControlPiece {
            start: 0.0,
            end: horizon,
            field,
        }])
    }

    pub fn null(grid: SpatialGrid, horizon: f64) -> Result<Self> {
        Self::constant(Field::zeros(grid), horizon)
    }

    pub fn with_cancellation(mut self, cancellation: Cancellation) -> Self {
        self.cancellation = Some(cancellation);
        self
    }

    pub fn pieces(&self) -> &[ControlPiece] {
        &self.pieces
    }

    pub fn cancellation(&self) -> Option<&Cancellation> {
        self.cancellation.as_ref()
    }

    pub fn grid(&self) -> &SpatialGrid {
        self.pieces[0].field.grid()
    }

    /// End of the last piece.
    pub fn horizon(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].end
    }

    /// Index of the piece active at `t`; the closing instant belongs to the last piece.
    pub fn piece_index_at(&self, t: f64) -> Option<usize> {
        if t < 0.0 {
            return None;
        }
        if let Some(i) = self.pieces.iter().position(|p| p.start <= t && t < p.end) {
            return Some(i);
        }
        let last = self.pieces.len() - 1;
        (t <= self.horizon() * (1.0 + 1e-12)).then_some(last)
    }

    pub fn field_at(&self, t: f64) -> Option<&Field> {
        self.piece_index_at(t).map(|i| &self.pieces[i].field)
    }

    /// `max_piece ‖v‖_∞`, excluding any cancellation term.
    pub fn linf_norm(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.field.linf_norm())
            .fold(0.0, f64::max)
    }

    pub fn is_null(&self) -> bool {
        self.cancellation.is_none() && self.linf_norm() == 0.0
    }

    pub fn describe(&self) -> ScheduleDescription {
        ScheduleDescription {
            pieces: self
                .pieces
                .iter()
                .map(|p| PieceDescription {
                    start: p.start,
                    end: p.end,
                    linf_norm: p.field.linf_norm(),
                    field: None,
                })
                .collect(),
            cancellation: self.cancellation.as_ref().map(|c| CancellationDescription {
                nonlinearity: c.nonlinearity.clone(),
                threshold: c.threshold,
                bound: c.bound,
                start: c.start,
                dt: c.dt,
                steps: c.terms.len(),
                max_magnitude: c.max_magnitude(),
            }),
        }
    }
}

/// Serializable summary of a schedule; `field` names the CSV holding the piece when exported.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScheduleDescription {
    pub pieces: Vec<PieceDescription>,
    pub cancellation: Option<CancellationDescription>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PieceDescription {
    pub start: f64,
    pub end: f64,
    pub linf_norm: f64,
    pub field: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CancellationDescription {
    pub nonlinearity: String,
    pub threshold: f64,
    pub bound: f64,
    pub start: f64,
    pub dt: f64,
    pub steps: usize,
    pub max_magnitude: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SpatialGrid {
        SpatialGrid::new(1, 5).unwrap()
    }

    #[test]
    fn rejects_gaps_and_overlaps() {
        let f = Field::zeros(grid());
        let gap = ControlSchedule::new(vec![
            ControlPiece {
                start: 0.0,
                end: 0.4,
                field: f.clone(),
            },
            ControlPiece {
                start: 0.5,
                end: 1.0,
                field: f.clone(),
            },
        ]);
        assert!(matches!(gap, Err(Error::Schedule(_))));
        let late = ControlSchedule::new(vec![ControlPiece {
            start: 0.1,
            end: 1.0,
            field: f.clone(),
        }]);
        assert!(matches!(late, Err(Error::Schedule(_))));
        let empty = ControlSchedule::new(vec![ControlPiece {
            start: 0.0,
            end: 0.0,
            field: f,
        }]);
        assert!(matches!(empty, Err(Error::Schedule(_))));
        assert!(ControlSchedule::new(vec![]).is_err());
    }

    #[test]
    fn lookup_by_time() {
        let a = Field::constant(grid(), 1.0);
        let b = Field::constant(grid(), 2.0);
        let s = ControlSchedule::new(vec![
            ControlPiece {
                start: 0.0,
                end: 0.5,
                field: a,
            },
            ControlPiece {
                start: 0.5,
                end: 1.0,
                field: b,
            },
        ])
        .unwrap();
        assert_eq!(s.piece_index_at(0.0), Some(0));
        assert_eq!(s.piece_index_at(0.499), Some(0));
        assert_eq!(s.piece_index_at(0.5), Some(1));
        assert_eq!(s.piece_index_at(1.0), Some(1));
        assert_eq!(s.piece_index_at(1.1), None);
        assert_eq!(s.linf_norm(), 2.0);
        assert_eq!(s.describe().pieces.len(), 2);
    }
}
