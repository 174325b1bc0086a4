//! Touch-grid state space.
//!
//! Cells are numbered row-major from the bottom-left corner, `cell(r, c) =
//! cols·r + c`. For every cell there is an "off-screen" state meaning the
//! finger was lifted after last touching that cell: `off(cell) = cells +
//! cell`. A 3×3 grid therefore has 18 states, 0–8 on screen and 9–17 off.
//! (States are 0-indexed: state `k` here is `s_{k+1}` in 1-indexed notation.)

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { rows: 3, cols: 3 }
    }
}

impl GridSpec {
    pub fn n_cells(&self) -> usize {
        self.rows * self.cols
    }

    pub fn n_states(&self) -> usize {
        2 * self.n_cells()
    }

    pub fn cell(&self, row: usize, col: usize) -> usize {
        debug_assert!(row < self.rows && col < self.cols);
        self.cols * row + col
    }

    pub fn is_off_screen(&self, state: usize) -> bool {
        (self.n_cells()..self.n_states()).contains(&state)
    }

    pub fn off_screen(&self, cell: usize) -> usize {
        debug_assert!(cell < self.n_cells());
        cell + self.n_cells()
    }

    /// The cell a state refers to (identity for on-screen states).
    pub fn last_cell(&self, state: usize) -> usize {
        if self.is_off_screen(state) {
            state - self.n_cells()
        } else {
            state
        }
    }

    /// Cell containing normalized coordinates `(x, y)` with origin at the
    /// bottom-left. Coordinates of exactly 1.0 fall in the last row/column.
    pub fn quantize(&self, x: f64, y: f64) -> usize {
        let col = ((x * self.cols as f64).floor() as usize).min(self.cols - 1);
        let row = ((y * self.rows as f64).floor() as usize).min(self.rows - 1);
        self.cell(row, col)
    }

    /// A new session begins whenever the finger comes back onto the screen.
    pub fn is_session_boundary(&self, prev: usize, next: usize) -> bool {
        self.is_off_screen(prev) && !self.is_off_screen(next)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn state_layout() {
        let g = GridSpec::default();
        assert_eq!(g.n_states(), 18);
        assert_eq!(g.cell(2, 1), 7);
        assert_eq!(g.off_screen(2), 11);
        // 1-indexed s_{j}, j ∈ 10..18, is "off after cell j − 9"; here j − 1.
        for j in 10..=18usize {
            let state = j - 1;
            assert!(g.is_off_screen(state));
            assert_eq!(g.last_cell(state) + 1, j - 9);
        }
        assert!(!g.is_off_screen(8) && !g.is_off_screen(18));
    }

    #[test]
    fn quantize_partitions_unit_square() {
        let g = GridSpec::default();
        assert_eq!(g.quantize(0.1, 0.1), 0);
        assert_eq!(g.quantize(0.5, 0.1), 1);
        assert_eq!(g.quantize(1.0, 1.0), 8);
        assert_eq!(g.quantize(0.0, 2.0 / 3.0), 6);
        assert_eq!(g.quantize(0.999, 0.34), 5);
    }
}
