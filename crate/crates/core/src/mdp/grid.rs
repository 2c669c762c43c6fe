use super::ModelError;

/// Uniform rectangular partition of a box in `R^d`.
///
/// Flat indices are row-major: the first dimension varies slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct StateGrid {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cells: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl StateGrid {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, cells: Vec<usize>) -> Result<Self, ModelError> {
        let dims = cells.len();
        if dims == 0 {
            return Err(ModelError::InvalidGrid("zero dimensions".into()));
        }
        if lower.len() != dims || upper.len() != dims {
            return Err(ModelError::InvalidGrid(format!(
                "{} cell counts but {} lower and {} upper bounds",
                dims,
                lower.len(),
                upper.len()
            )));
        }
        for d in 0..dims {
            if !(lower[d] < upper[d]) {
                return Err(ModelError::InvalidGrid(format!(
                    "dimension {d}: lower {} is not below upper {}",
                    lower[d], upper[d]
                )));
            }
            if cells[d] == 0 {
                return Err(ModelError::InvalidGrid(format!("dimension {d} has no cells")));
            }
        }
        let mut strides = vec![1; dims];
        for d in (0..dims - 1).rev() {
            strides[d] = strides[d + 1] * cells[d + 1];
        }
        let total = strides[0] * cells[0];
        Ok(Self {
            lower,
            upper,
            cells,
            strides,
            total,
        })
    }

    /// One-dimensional grid of `n` unit cells over `[0, n]`; used for
    /// abstract models whose states carry no geometry.
    pub fn line(n: usize) -> Self {
        Self::new(vec![0.0], vec![n.max(1) as f64], vec![n.max(1)]).expect("valid line grid")
    }

    pub fn dims(&self) -> usize {
        self.cells.len()
    }

    pub fn total_states(&self) -> usize {
        self.total
    }

    pub fn cells(&self) -> &[usize] {
        &self.cells
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn cell_width(&self, d: usize) -> f64 {
        (self.upper[d] - self.lower[d]) / self.cells[d] as f64
    }

    /// Lower boundary of cell `i` along dimension `d` (`i == cells[d]` gives the upper bound).
    pub fn boundary(&self, d: usize, i: usize) -> f64 {
        if i == self.cells[d] {
            self.upper[d]
        } else {
            self.lower[d] + i as f64 * self.cell_width(d)
        }
    }

    pub fn coordinate(&self, d: usize, i: usize) -> f64 {
        self.lower[d] + (i as f64 + 0.5) * self.cell_width(d)
    }

    pub fn multi_index(&self, flat: usize) -> Vec<usize> {
        debug_assert!(flat < self.total);
        self.strides
            .iter()
            .zip(&self.cells)
            .map(|(&s, &n)| (flat / s) % n)
            .collect()
    }

    pub fn flat_index(&self, idx: &[usize]) -> Option<usize> {
        if idx.len() != self.dims() {
            return None;
        }
        let mut flat = 0;
        for d in 0..self.dims() {
            if idx[d] >= self.cells[d] {
                return None;
            }
            flat += idx[d] * self.strides[d];
        }
        Some(flat)
    }

    /// Cell-centre representative point of a flat index.
    pub fn center(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(d, &i)| self.coordinate(d, i))
            .collect()
    }

    /// Cell containing `point`; points on the upper boundary belong to the last cell.
    pub fn locate(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dims() {
            return None;
        }
        let mut idx = Vec::with_capacity(self.dims());
        for d in 0..self.dims() {
            let p = point[d];
            if !(p >= self.lower[d] && p <= self.upper[d]) {
                return None;
            }
            let i = ((p - self.lower[d]) / self.cell_width(d)).floor() as usize;
            idx.push(i.min(self.cells[d] - 1));
        }
        self.flat_index(&idx)
    }

    /// Cell whose centre is nearest to `point`, clamping outside points onto the grid.
    pub fn nearest(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dims() {
            return None;
        }
        let idx: Vec<usize> = (0..self.dims())
            .map(|d| {
                let t = (point[d] - self.lower[d]) / self.cell_width(d) - 0.5;
                (t.round().max(0.0) as usize).min(self.cells[d] - 1)
            })
            .collect();
        self.flat_index(&idx)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_degenerate_bounds() {
        assert!(StateGrid::new(vec![1.0], vec![1.0], vec![4]).is_err());
        assert!(StateGrid::new(vec![0.0], vec![1.0], vec![0]).is_err());
        assert!(StateGrid::new(vec![0.0, 0.0], vec![1.0], vec![2, 2]).is_err());
    }

    #[test]
    fn centers_and_location() {
        let g = StateGrid::new(vec![0.0, 0.0], vec![2.0, 2.0], vec![4, 2]).unwrap();
        assert_eq!(g.total_states(), 8);
        assert_eq!(g.center(0), vec![0.25, 0.5]);
        assert_eq!(g.center(7), vec![1.75, 1.5]);
        assert_eq!(g.locate(&[1.9, 0.1]), Some(6));
        assert_eq!(g.locate(&[2.0, 2.0]), Some(7));
        assert_eq!(g.locate(&[2.1, 0.0]), None);
        assert_eq!(g.nearest(&[5.0, -1.0]), Some(6));
    }

    proptest! {
        #[test]
        fn flat_multi_round_trip(c0 in 1usize..7, c1 in 1usize..7, c2 in 1usize..5, seed in 0usize..1000) {
            let g = StateGrid::new(vec![0.0; 3], vec![1.0; 3], vec![c0, c1, c2]).unwrap();
            let flat = seed % g.total_states();
            let m = g.multi_index(flat);
            prop_assert_eq!(g.flat_index(&m), Some(flat));
            prop_assert_eq!(g.locate(&g.center(flat)), Some(flat));
        }
    }
}
