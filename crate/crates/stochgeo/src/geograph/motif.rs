//! Motif templates and subgraph/component functionals.
//!
//! Isomorphism testing is table-driven for motif orders 1..=5: an induced
//! subgraph on `kappa` vertices is encoded as a bitmask over vertex pairs
//! and reduced to the minimum mask over all `kappa!` relabellings. Counting
//! enumerates connected vertex subsets only, growing subsets through
//! adjacency, which is exhaustive for connected templates because any
//! subset inducing a connected graph is itself reachable this way.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

use super::GeoGraph;

/// Largest motif order covered by the lookup tables.
pub const MAX_MOTIF_ORDER: usize = 5;

/// Connected template graph on `kappa` labelled vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MotifSpec {
    pub kappa: usize,
    pub edges: Vec<(u8, u8)>,
    canon: u16,
    degree_seq: Vec<u8>,
}

impl MotifSpec {
    pub fn new(kappa: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if kappa == 0 || kappa > MAX_MOTIF_ORDER {
            return Err(Error::MotifOrder { kappa });
        }
        let mut mask = 0u16;
        let mut uf = UnionFind::new(kappa);
        let mut clean = Vec::new();
        for &(a, b) in edges {
            if a >= kappa || b >= kappa || a == b {
                return Err(Error::Parameter(format!(
                    "edge ({a},{b}) invalid for a motif on {kappa} vertices"
                )));
            }
            let (i, j) = (a.min(b), a.max(b));
            let bit = 1u16 << pair_bit(i, j, kappa);
            if mask & bit == 0 {
                mask |= bit;
                clean.push((i as u8, j as u8));
                uf.union(i as u32, j as u32);
            }
        }
        if kappa > 1 && uf.set_size(0) as usize != kappa {
            return Err(Error::Parameter("motif must be connected".into()));
        }
        Ok(MotifSpec {
            kappa,
            edges: clean,
            canon: canonical_code(mask, kappa),
            degree_seq: degree_sequence(mask, kappa),
        })
    }

    pub fn single_vertex() -> Self {
        MotifSpec::new(1, &[]).unwrap()
    }

    pub fn edge() -> Self {
        MotifSpec::new(2, &[(0, 1)]).unwrap()
    }

    pub fn triangle() -> Self {
        MotifSpec::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
    }

    /// Path on `kappa` vertices.
    pub fn path(kappa: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..kappa.saturating_sub(1)).map(|i| (i, i + 1)).collect();
        MotifSpec::new(kappa, &edges)
    }

    /// Cycle on `kappa >= 3` vertices.
    pub fn cycle(kappa: usize) -> Result<Self> {
        if kappa < 3 {
            return Err(Error::Parameter("cycle needs at least 3 vertices".into()));
        }
        let mut edges: Vec<(usize, usize)> = (0..kappa - 1).map(|i| (i, i + 1)).collect();
        edges.push((kappa - 1, 0));
        MotifSpec::new(kappa, &edges)
    }

    /// Complete graph on `kappa` vertices.
    pub fn complete(kappa: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for i in 0..kappa {
            for j in i + 1..kappa {
                edges.push((i, j));
            }
        }
        MotifSpec::new(kappa, &edges)
    }
}

/// Bit position of pair `(i, j)` with `i < j` among the `kappa choose 2`
/// pairs in row-major order.
fn pair_bit(i: usize, j: usize, kappa: usize) -> u32 {
    let off = i * (kappa - 1) - i * i.saturating_sub(1) / 2;
    (off + (j - i - 1)) as u32
}

fn perms(kappa: usize) -> &'static [Vec<u8>] {
    static TABLES: OnceLock<Vec<Vec<Vec<u8>>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| {
        (0..=MAX_MOTIF_ORDER)
            .map(|k| {
                let mut out = Vec::new();
                let mut items: Vec<u8> = (0..k as u8).collect();
                heap_permutations(&mut items, k, &mut out);
                out
            })
            .collect()
    });
    &tables[kappa]
}

fn heap_permutations(items: &mut Vec<u8>, k: usize, out: &mut Vec<Vec<u8>>) {
    if k <= 1 {
        out.push(items.clone());
        return;
    }
    for i in 0..k {
        heap_permutations(items, k - 1, out);
        if k % 2 == 0 {
            items.swap(i, k - 1);
        } else {
            items.swap(0, k - 1);
        }
    }
}

/// Minimum pair-mask over all vertex relabellings.
fn canonical_code(mask: u16, kappa: usize) -> u16 {
    if kappa < 2 {
        return 0;
    }
    let mut best = u16::MAX;
    for perm in perms(kappa) {
        let mut remapped = 0u16;
        for i in 0..kappa {
            for j in i + 1..kappa {
                if mask >> pair_bit(i, j, kappa) & 1 == 1 {
                    let (a, b) = (perm[i].min(perm[j]), perm[i].max(perm[j]));
                    remapped |= 1 << pair_bit(a as usize, b as usize, kappa);
                }
            }
        }
        best = best.min(remapped);
    }
    best
}

fn degree_sequence(mask: u16, kappa: usize) -> Vec<u8> {
    let mut deg = vec![0u8; kappa];
    for i in 0..kappa {
        for j in i + 1..kappa {
            if mask >> pair_bit(i, j, kappa) & 1 == 1 {
                deg[i] += 1;
                deg[j] += 1;
            }
        }
    }
    deg.sort_unstable();
    deg
}

/// Pair-mask of the subgraph induced by `sub` (order <= 5).
fn induced_mask(g: &GeoGraph, sub: &[u32]) -> u16 {
    let k = sub.len();
    let mut mask = 0u16;
    for i in 0..k {
        for j in i + 1..k {
            if g.has_edge(sub[i], sub[j]) {
                mask |= 1 << pair_bit(i, j, k);
            }
        }
    }
    mask
}

fn matches_motif(g: &GeoGraph, sub: &[u32], motif: &MotifSpec) -> bool {
    let mask = induced_mask(g, sub);
    degree_sequence(mask, motif.kappa) == motif.degree_seq
        && canonical_code(mask, motif.kappa) == motif.canon
}

/// Number of `kappa`-subsets of the vertex set whose induced geometric
/// graph is isomorphic to the template. Requires `kappa >= 2`.
pub fn count_induced_subgraphs(g: &GeoGraph, motif: &MotifSpec) -> Result<u64> {
    if motif.kappa < 2 {
        return Err(Error::Parameter(
            "induced-subgraph counting requires a motif on at least 2 vertices".into(),
        ));
    }
    let mut count = 0u64;
    let mut sub = Vec::with_capacity(motif.kappa);
    for v in 0..g.len() as u32 {
        let ext: Vec<u32> = g.adj[v as usize]
            .iter()
            .copied()
            .filter(|&u| u > v)
            .collect();
        sub.push(v);
        esu_extend(g, motif, v, &mut sub, ext, &mut count);
        sub.pop();
    }
    Ok(count)
}

/// One step of connected-subset enumeration: each connected `kappa`-subset
/// is reached exactly once (subsets grow only through exclusive neighbours
/// of the current subset, all above the root vertex).
fn esu_extend(
    g: &GeoGraph,
    motif: &MotifSpec,
    root: u32,
    sub: &mut Vec<u32>,
    mut ext: Vec<u32>,
    count: &mut u64,
) {
    if sub.len() == motif.kappa {
        if matches_motif(g, sub, motif) {
            *count += 1;
        }
        return;
    }
    while let Some(w) = ext.pop() {
        let mut ext2 = ext.clone();
        for &u in &g.adj[w as usize] {
            if u > root
                && !sub.contains(&u)
                && !ext2.contains(&u)
                && !sub.iter().any(|&s| g.has_edge(s, u))
            {
                ext2.push(u);
            }
        }
        sub.push(w);
        esu_extend(g, motif, root, sub, ext2, count);
        sub.pop();
    }
}

/// Connected components as vertex lists (sorted within each component).
pub fn components(g: &GeoGraph) -> Vec<Vec<u32>> {
    let n = g.len();
    let mut uf = UnionFind::new(n);
    for (i, nbrs) in g.adj.iter().enumerate() {
        for &j in nbrs {
            uf.union(i as u32, j);
        }
    }
    let mut by_root: std::collections::HashMap<u32, Vec<u32>> = std::collections::HashMap::new();
    for v in 0..n as u32 {
        by_root.entry(uf.find(v)).or_default().push(v);
    }
    let mut comps: Vec<Vec<u32>> = by_root.into_values().collect();
    comps.sort_by_key(|c| c[0]);
    comps
}

/// Total number of connected components.
pub fn count_components(g: &GeoGraph) -> u64 {
    let n = g.len();
    let mut uf = UnionFind::new(n);
    let mut merges = 0u64;
    for (i, nbrs) in g.adj.iter().enumerate() {
        for &j in nbrs {
            if uf.union(i as u32, j) {
                merges += 1;
            }
        }
    }
    n as u64 - merges
}

/// Number of components isomorphic to the template (order 1 counts
/// isolated vertices).
pub fn count_components_isomorphic(g: &GeoGraph, motif: &MotifSpec) -> Result<u64> {
    let mut count = 0u64;
    for comp in components(g) {
        if comp.len() == motif.kappa && matches_motif(g, &comp, motif) {
            count += 1;
        }
    }
    Ok(count)
}

/// Independence number: the sum of exact per-component maximum independent
/// sets, valid because independence splits across components. Components
/// larger than `component_size_cap` abort the computation, since exact
/// search is only guaranteed cheap in the subcritical regime.
pub fn independence_number(g: &GeoGraph, component_size_cap: usize) -> Result<u64> {
    let cap = component_size_cap.min(64);
    let mut total = 0u64;
    for comp in components(g) {
        if comp.len() > cap {
            return Err(Error::SupercriticalComponent {
                order: comp.len(),
                cap,
            });
        }
        total += component_mis(g, &comp) as u64;
    }
    Ok(total)
}

fn component_mis(g: &GeoGraph, comp: &[u32]) -> u32 {
    // component vertex lists are sorted, so membership is a binary search
    let k = comp.len();
    let mut adj = vec![0u64; k];
    for (i, &v) in comp.iter().enumerate() {
        for &u in &g.adj[v as usize] {
            if let Ok(j) = comp.binary_search(&u) {
                adj[i] |= 1 << j;
            }
        }
    }
    let avail = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    mis_branch(avail, &adj)
}

/// Branch and bound: pick the busiest remaining vertex, either exclude it
/// or take it and drop its neighbourhood.
fn mis_branch(avail: u64, adj: &[u64]) -> u32 {
    if avail == 0 {
        return 0;
    }
    let mut v = 0u32;
    let mut best_deg = -1i32;
    let mut bits = avail;
    while bits != 0 {
        let cand = bits.trailing_zeros();
        let deg = (adj[cand as usize] & avail).count_ones() as i32;
        if deg > best_deg {
            best_deg = deg;
            v = cand;
        }
        bits &= bits - 1;
    }
    if best_deg == 0 {
        // remaining vertices are pairwise non-adjacent
        return avail.count_ones();
    }
    let take = 1 + mis_branch(avail & !adj[v as usize] & !(1u64 << v), adj);
    let skip = mis_branch(avail & !(1u64 << v), adj);
    take.max(skip)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geograph::{build_graph, sample_points, DensitySpec, PointSample};
    use crate::rng::replicate_rng;

    /// Independent isomorphism oracle: try every bijection directly.
    fn iso_oracle(g: &GeoGraph, sub: &[u32], motif: &MotifSpec) -> bool {
        let k = sub.len();
        if k != motif.kappa {
            return false;
        }
        let target: std::collections::HashSet<(u8, u8)> =
            motif.edges.iter().copied().collect();
        perms(k).iter().any(|perm| {
            for i in 0..k {
                for j in i + 1..k {
                    let mapped = (perm[i].min(perm[j]), perm[i].max(perm[j]));
                    if g.has_edge(sub[i], sub[j]) != target.contains(&mapped) {
                        return false;
                    }
                }
            }
            true
        })
    }

    /// Brute-force oracle over all kappa-subsets.
    fn brute_force_count(g: &GeoGraph, motif: &MotifSpec) -> u64 {
        let n = g.len();
        let k = motif.kappa;
        let mut count = 0u64;
        let mut subset: Vec<u32> = (0..k as u32).collect();
        if n < k {
            return 0;
        }
        loop {
            if iso_oracle(g, &subset, motif) {
                count += 1;
            }
            // next lexicographic combination
            let mut i = k;
            loop {
                if i == 0 {
                    return count;
                }
                i -= 1;
                if subset[i] < (n - k + i) as u32 {
                    subset[i] += 1;
                    for t in i + 1..k {
                        subset[t] = subset[t - 1] + 1;
                    }
                    break;
                }
            }
        }
    }

    fn grid_graph(n: usize, spacing: f64, r: f64) -> GeoGraph {
        let coords: Vec<f64> = (0..n).flat_map(|i| vec![i as f64 * spacing, 0.0]).collect();
        build_graph(&PointSample::new(coords, 2).unwrap(), r).unwrap()
    }

    #[test]
    fn edge_motif_counts_edges() {
        let s = sample_points(
            120,
            &DensitySpec::UniformUnitCube { d: 2 },
            &mut replicate_rng(51, 0, 0),
        )
        .unwrap();
        let g = build_graph(&s, 0.12).unwrap();
        assert_eq!(
            count_induced_subgraphs(&g, &MotifSpec::edge()).unwrap(),
            g.edge_count()
        );
    }

    #[test]
    fn one_triangle_rest_isolated() {
        let coords = vec![0.0, 0.0, 0.5, 0.0, 0.25, 0.4, 5.0, 5.0, 9.0, 2.0];
        let g = build_graph(&PointSample::new(coords, 2).unwrap(), 1.0).unwrap();
        assert_eq!(count_induced_subgraphs(&g, &MotifSpec::triangle()).unwrap(), 1);
        assert_eq!(
            count_components_isomorphic(&g, &MotifSpec::single_vertex()).unwrap(),
            2
        );
        assert_eq!(
            count_components_isomorphic(&g, &MotifSpec::triangle()).unwrap(),
            1
        );
        assert_eq!(count_components(&g), 3);
    }

    #[test]
    fn complete_graph_subset_counts() {
        // all points mutually within r: every kappa-subset induces K_kappa
        let coords: Vec<f64> = (0..8).flat_map(|i| vec![i as f64 * 0.01, 0.0]).collect();
        let g = build_graph(&PointSample::new(coords, 2).unwrap(), 1.0).unwrap();
        assert_eq!(count_induced_subgraphs(&g, &MotifSpec::complete(3).unwrap()).unwrap(), 56);
        assert_eq!(count_induced_subgraphs(&g, &MotifSpec::complete(4).unwrap()).unwrap(), 70);
        assert_eq!(count_induced_subgraphs(&g, &MotifSpec::path(3).unwrap()).unwrap(), 0);
    }

    #[test]
    fn esu_matches_brute_force() {
        for (trial, n) in [(0u32, 60usize), (1, 100)] {
            let s = sample_points(
                n,
                &DensitySpec::UniformUnitCube { d: 2 },
                &mut replicate_rng(52, trial, 0),
            )
            .unwrap();
            let g = build_graph(&s, 0.16).unwrap();
            for motif in [
                MotifSpec::path(3).unwrap(),
                MotifSpec::triangle(),
                MotifSpec::path(4).unwrap(),
                MotifSpec::cycle(4).unwrap(),
            ] {
                assert_eq!(
                    count_induced_subgraphs(&g, &motif).unwrap(),
                    brute_force_count(&g, &motif),
                    "n={n} motif kappa={}",
                    motif.kappa
                );
            }
        }
    }

    #[test]
    fn component_classification_matches_oracle() {
        let s = sample_points(
            100,
            &DensitySpec::UniformUnitCube { d: 2 },
            &mut replicate_rng(53, 0, 0),
        )
        .unwrap();
        let g = build_graph(&s, 0.09).unwrap();
        for motif in [
            MotifSpec::single_vertex(),
            MotifSpec::edge(),
            MotifSpec::path(3).unwrap(),
            MotifSpec::triangle(),
        ] {
            let direct: u64 = components(&g)
                .iter()
                .filter(|c| c.len() == motif.kappa && iso_oracle(&g, c, &motif))
                .count() as u64;
            assert_eq!(count_components_isomorphic(&g, &motif).unwrap(), direct);
        }
    }

    #[test]
    fn order_kappa_components_split_by_shape() {
        let s = sample_points(
            150,
            &DensitySpec::UniformUnitCube { d: 2 },
            &mut replicate_rng(54, 0, 0),
        )
        .unwrap();
        let g = build_graph(&s, 0.08).unwrap();
        // every connected graph on 3 vertices is a path or a triangle
        let path3 = count_components_isomorphic(&g, &MotifSpec::path(3).unwrap()).unwrap();
        let tri = count_components_isomorphic(&g, &MotifSpec::triangle()).unwrap();
        let order3 = components(&g).iter().filter(|c| c.len() == 3).count() as u64;
        assert_eq!(path3 + tri, order3);
    }

    #[test]
    fn components_equal_flood_fill() {
        let s = sample_points(
            200,
            &DensitySpec::UniformUnitCube { d: 2 },
            &mut replicate_rng(55, 0, 0),
        )
        .unwrap();
        let g = build_graph(&s, 0.07).unwrap();
        // BFS oracle
        let mut seen = vec![false; g.len()];
        let mut comps = 0u64;
        for start in 0..g.len() {
            if seen[start] {
                continue;
            }
            comps += 1;
            let mut queue = std::collections::VecDeque::from([start]);
            seen[start] = true;
            while let Some(v) = queue.pop_front() {
                for &u in &g.adj[v] {
                    if !seen[u as usize] {
                        seen[u as usize] = true;
                        queue.push_back(u as usize);
                    }
                }
            }
        }
        assert_eq!(count_components(&g), comps);
    }

    #[test]
    fn independence_edgeless_and_clique() {
        let far: Vec<f64> = (0..6).flat_map(|i| vec![i as f64 * 10.0, 0.0]).collect();
        let g = build_graph(&PointSample::new(far, 2).unwrap(), 1.0).unwrap();
        assert_eq!(independence_number(&g, 20).unwrap(), 6);

        let tri = vec![0.0, 0.0, 0.5, 0.0, 0.25, 0.4];
        let g = build_graph(&PointSample::new(tri, 2).unwrap(), 1.0).unwrap();
        assert_eq!(independence_number(&g, 20).unwrap(), 1);
    }

    #[test]
    fn independence_matches_subset_oracle() {
        let s = sample_points(
            60,
            &DensitySpec::UniformUnitCube { d: 2 },
            &mut replicate_rng(56, 0, 0),
        )
        .unwrap();
        let g = build_graph(&s, 0.1).unwrap();
        // exhaustive 2^k oracle per component
        let mut oracle_total = 0u64;
        for comp in components(&g) {
            let k = comp.len();
            assert!(k <= 12, "test graph should stay subcritical");
            let mut best = 0u32;
            for mask in 0u32..(1 << k) {
                let mut ok = true;
                'outer: for i in 0..k {
                    if mask >> i & 1 == 0 {
                        continue;
                    }
                    for j in i + 1..k {
                        if mask >> j & 1 == 1 && g.has_edge(comp[i], comp[j]) {
                            ok = false;
                            break 'outer;
                        }
                    }
                }
                if ok {
                    best = best.max(mask.count_ones());
                }
            }
            oracle_total += best as u64;
        }
        assert_eq!(independence_number(&g, 12).unwrap(), oracle_total);
    }

    #[test]
    fn independence_cap_errors_on_large_component() {
        let g = grid_graph(10, 0.5, 1.0);
        match independence_number(&g, 5) {
            Err(Error::SupercriticalComponent { order, cap }) => {
                assert_eq!(order, 10);
                assert_eq!(cap, 5);
            }
            other => panic!("expected supercritical error, got {other:?}"),
        }
    }

    #[test]
    fn path_independence_on_chain() {
        // chain of 7 in a row: alpha(P7) = 4
        let g = grid_graph(7, 0.9, 1.0);
        assert_eq!(independence_number(&g, 10).unwrap(), 4);
    }

    #[test]
    fn motif_order_cap() {
        assert!(matches!(
            MotifSpec::path(6),
            Err(Error::MotifOrder { kappa: 6 })
        ));
        assert!(MotifSpec::new(3, &[(0, 1)]).is_err(), "disconnected motif");
    }
}
