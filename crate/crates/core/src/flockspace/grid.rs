use super::geometry::{Position, Torus};

/// Uniform bucket grid over the torus with cells at least `min_cell` wide,
/// so any point within `min_cell` of a query lies in the 3x3 block of cells
/// around it.
#[derive(Debug, Clone)]
pub struct NeighborGrid {
    cols: usize,
    rows: usize,
    cell_w: f64,
    cell_h: f64,
    buckets: Vec<Vec<usize>>,
}

impl NeighborGrid {
    pub fn new(torus: Torus, min_cell: f64) -> Self {
        let cols = ((torus.width / min_cell).floor() as usize).max(1);
        let rows = ((torus.height / min_cell).floor() as usize).max(1);
        Self {
            cols,
            rows,
            cell_w: torus.width / cols as f64,
            cell_h: torus.height / rows as f64,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    /// Smallest radius the 3x3 stencil is guaranteed to cover.
    pub fn reach(&self) -> f64 {
        self.cell_w.min(self.cell_h)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    pub fn cell_of(&self, p: Position) -> (usize, usize) {
        let cx = ((p.x / self.cell_w) as usize).min(self.cols - 1);
        let cy = ((p.y / self.cell_h) as usize).min(self.rows - 1);
        (cx, cy)
    }

    /// Rebuilds all buckets; `points[i]` is stored under index `i`.
    pub fn rebuild(&mut self, points: impl Iterator<Item = Position>) {
        for bucket in &mut self.buckets {
            bucket.clear();
        }
        for (i, p) in points.enumerate() {
            let (cx, cy) = self.cell_of(p);
            self.buckets[cy * self.cols + cx].push(i);
        }
    }

    pub fn bucket(&self, cx: usize, cy: usize) -> &[usize] {
        &self.buckets[cy * self.cols + cx]
    }

    /// Indices stored in the cells adjacent to `p` (itself included), each
    /// cell visited once even when the grid is narrower than three cells.
    pub fn candidates(&self, p: Position) -> Vec<usize> {
        let (cx, cy) = self.cell_of(p);
        let mut cells: Vec<usize> = Vec::with_capacity(9);
        for dy in [self.rows - 1, 0, 1] {
            for dx in [self.cols - 1, 0, 1] {
                let idx = ((cy + dy) % self.rows) * self.cols + (cx + dx) % self.cols;
                if !cells.contains(&idx) {
                    cells.push(idx);
                }
            }
        }
        cells.iter().flat_map(|&c| self.buckets[c].iter().copied()).collect()
    }
}
