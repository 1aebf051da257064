//! Gilbert graph construction through a cell list.

use crate::error::{Error, Result};
use crate::grid::{dist_sq, CellGrid};

use super::PointSample;

/// Geometric graph: vertices are sample points, edges join pairs at
/// Euclidean distance `<= r` (ties included, compared exactly on squared
/// distances). Neighbour lists are sorted.
#[derive(Debug, Clone)]
pub struct GeoGraph {
    pub sample: PointSample,
    pub r: f64,
    pub adj: Vec<Vec<u32>>,
}

impl GeoGraph {
    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    pub fn edge_count(&self) -> u64 {
        self.adj.iter().map(|a| a.len() as u64).sum::<u64>() / 2
    }

    pub fn has_edge(&self, i: u32, j: u32) -> bool {
        self.adj[i as usize].binary_search(&j).is_ok()
    }

    pub fn degree(&self, i: u32) -> usize {
        self.adj[i as usize].len()
    }
}

/// Build the graph with a cell list of width `r`; expected linear time in
/// points plus edges for bounded densities.
pub fn build_graph(sample: &PointSample, r: f64) -> Result<GeoGraph> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Parameter(format!("radius {r} must be positive and finite")));
    }
    let n = sample.len();
    let d = sample.d;
    let mut adj = vec![Vec::new(); n];
    if n > 1 {
        let (lo, hi) = sample.bounding_box();
        let grid = CellGrid::build(&sample.coords, d, &lo, &hi, r);
        let r2 = r * r;
        for i in 0..n {
            let p = sample.point(i);
            grid.visit_neighbourhood(p, |j| {
                let j = j as usize;
                if j < i && dist_sq(p, sample.point(j)) <= r2 {
                    adj[i].push(j as u32);
                    adj[j].push(i as u32);
                }
            });
        }
        for a in adj.iter_mut() {
            a.sort_unstable();
        }
    }
    Ok(GeoGraph {
        sample: sample.clone(),
        r,
        adj,
    })
}
