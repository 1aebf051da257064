//! Uniform cell grid for fixed-radius neighbour queries in low dimension.
//!
//! Points are bucketed into cubic cells of a chosen width over an axis
//! aligned window. Queries walk the 3^d cell neighbourhood (or expanding
//! Chebyshev rings for nearest-neighbour searches).

/// Cell-bucketed point index over a rectangular window.
pub struct CellGrid {
    d: usize,
    lo: Vec<f64>,
    cell_w: f64,
    dims: Vec<usize>,
    cells: Vec<Vec<u32>>,
}

impl CellGrid {
    /// Empty grid over `[lo, hi]` with cells of width `cell_w` (grown to at
    /// least one cell per axis).
    pub fn new(lo: &[f64], hi: &[f64], cell_w: f64) -> Self {
        let d = lo.len();
        let dims: Vec<usize> = (0..d)
            .map(|j| (((hi[j] - lo[j]) / cell_w).ceil() as usize).max(1))
            .collect();
        let total: usize = dims.iter().product();
        CellGrid {
            d,
            lo: lo.to_vec(),
            cell_w,
            dims,
            cells: vec![Vec::new(); total],
        }
    }

    /// Build from flat row-major coordinates (`n * d` values).
    pub fn build(coords: &[f64], d: usize, lo: &[f64], hi: &[f64], cell_w: f64) -> Self {
        let mut grid = CellGrid::new(lo, hi, cell_w);
        for (i, p) in coords.chunks_exact(d).enumerate() {
            grid.insert(p, i as u32);
        }
        grid
    }

    pub fn cell_coords(&self, x: &[f64]) -> Vec<i64> {
        (0..self.d)
            .map(|j| {
                let c = ((x[j] - self.lo[j]) / self.cell_w).floor() as i64;
                c.clamp(0, self.dims[j] as i64 - 1)
            })
            .collect()
    }

    fn cell_index(&self, cc: &[i64]) -> usize {
        let mut idx = 0usize;
        for j in 0..self.d {
            idx = idx * self.dims[j] + cc[j] as usize;
        }
        idx
    }

    pub fn insert(&mut self, x: &[f64], point_idx: u32) {
        let cc = self.cell_coords(x);
        let idx = self.cell_index(&cc);
        self.cells[idx].push(point_idx);
    }

    /// Visit every point bucketed within Chebyshev distance 1 (in cells) of
    /// the cell containing `x`. With cell width >= the query radius this
    /// covers all candidates at Euclidean distance <= that radius.
    pub fn visit_neighbourhood(&self, x: &[f64], mut f: impl FnMut(u32)) {
        let cc = self.cell_coords(x);
        let mut offset = vec![-1i64; self.d];
        loop {
            let mut inside = true;
            let mut cell = Vec::with_capacity(self.d);
            for j in 0..self.d {
                let c = cc[j] + offset[j];
                if c < 0 || c >= self.dims[j] as i64 {
                    inside = false;
                    break;
                }
                cell.push(c);
            }
            if inside {
                for &p in &self.cells[self.cell_index(&cell)] {
                    f(p);
                }
            }
            // odometer over {-1, 0, 1}^d
            let mut j = 0;
            loop {
                if j == self.d {
                    return;
                }
                offset[j] += 1;
                if offset[j] <= 1 {
                    break;
                }
                offset[j] = -1;
                j += 1;
            }
        }
    }

    /// Visit all points in cells at Chebyshev distance exactly `ring` from
    /// the cell containing `x`. Ring 0 is the cell itself. Returns false if
    /// the entire ring lies outside the grid (search exhausted).
    pub fn visit_ring(&self, x: &[f64], ring: i64, mut f: impl FnMut(u32)) -> bool {
        let cc = self.cell_coords(x);
        let mut any_in_grid = false;
        let mut offset = vec![-ring; self.d];
        loop {
            if offset.iter().any(|&o| o.abs() == ring) {
                let mut inside = true;
                let mut cell = Vec::with_capacity(self.d);
                for j in 0..self.d {
                    let c = cc[j] + offset[j];
                    if c < 0 || c >= self.dims[j] as i64 {
                        inside = false;
                        break;
                    }
                    cell.push(c);
                }
                if inside {
                    any_in_grid = true;
                    for &p in &self.cells[self.cell_index(&cell)] {
                        f(p);
                    }
                }
            }
            let mut j = 0;
            loop {
                if j == self.d {
                    return any_in_grid;
                }
                offset[j] += 1;
                if offset[j] <= ring {
                    break;
                }
                offset[j] = -ring;
                j += 1;
            }
        }
    }

    /// Any unvisited point after scanning rings `0..=ring` is at Euclidean
    /// distance at least this much from `x`.
    pub fn ring_guarantee(&self, ring: i64) -> f64 {
        (ring as f64) * self.cell_w
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_w
    }
}

pub fn dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neighbourhood_covers_radius() {
        let pts = [0.05, 0.05, 0.12, 0.08, 0.95, 0.95, 0.5, 0.5];
        let grid = CellGrid::build(&pts, 2, &[0.0, 0.0], &[1.0, 1.0], 0.1);
        let mut seen = Vec::new();
        grid.visit_neighbourhood(&[0.1, 0.1], |i| seen.push(i));
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1]);
    }

    #[test]
    fn rings_partition_cells() {
        let pts: Vec<f64> = (0..25)
            .flat_map(|i| vec![(i % 5) as f64 * 0.2 + 0.1, (i / 5) as f64 * 0.2 + 0.1])
            .collect();
        let grid = CellGrid::build(&pts, 2, &[0.0, 0.0], &[1.0, 1.0], 0.2);
        let mut all = Vec::new();
        let mut ring = 0;
        while grid.visit_ring(&[0.5, 0.5], ring, |i| all.push(i)) {
            ring += 1;
        }
        all.sort_unstable();
        assert_eq!(all, (0..25).collect::<Vec<u32>>());
    }

    #[test]
    fn one_dimensional_grid() {
        let pts = [0.1, 0.4, 0.9];
        let grid = CellGrid::build(&pts, 1, &[0.0], &[1.0], 0.25);
        let mut seen = Vec::new();
        grid.visit_neighbourhood(&[0.35], |i| seen.push(i));
        seen.sort_unstable();
        assert_eq!(seen, vec![0, 1]);
    }
}
