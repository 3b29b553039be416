//! Cover two adjacent layers with vertex-disjoint short paths: percolate
//! the bipartite graph between layers i and i+1 restricted to the V1
//! class minus degree outliers, drop high-degree vertices, properly
//! edge-color the rest (König), keep the two largest color classes as
//! edge-disjoint matchings, and cut their union into short paths.

use crate::cube::{layer_vertices, Vertex};
use crate::params::ParameterSet;
use crate::percolation::{
    exposure_tags, well_spread_report, Class, EdgeOracle, PartitionOracle, WellSpreadReport,
};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CoverError {
    #[error("maxlen {0} must be even and >= 4")]
    BadMaxLen(usize),
}

/// The percolated bipartite graph on `L_{i,i+1}[V1 \ V_bad]`.
#[derive(Clone, Debug)]
pub struct LayerGraph {
    pub i: u32,
    pub d: u32,
    /// All eligible vertices (both layers), ascending encoding.
    pub verts: Vec<Vertex>,
    /// Open-edge adjacency, each list ascending.
    pub adj: BTreeMap<Vertex, Vec<Vertex>>,
    /// Size of L_{i,i+1}[V1] before removing degree outliers.
    pub v1_size: usize,
    pub report: WellSpreadReport,
}

pub fn build_layer_graph(
    i: u32,
    ps: &ParameterSet,
    eo: &EdgeOracle,
    po: &PartitionOracle,
) -> LayerGraph {
    let d = ps.d;
    let report = well_spread_report(po, i, ps).expect("layer pair in range");
    let bad: BTreeSet<Vertex> = report.v_bad.iter().copied().collect();
    let mut verts: Vec<Vertex> = Vec::new();
    let mut v1_size = 0usize;
    for layer in [i, i + 1] {
        for v in layer_vertices(d, layer) {
            if po.partition_of(v) == Class::V1 {
                v1_size += 1;
                if !bad.contains(&v) {
                    verts.push(v);
                }
            }
        }
    }
    verts.sort();
    let vset: BTreeSet<Vertex> = verts.iter().copied().collect();
    let mut adj: BTreeMap<Vertex, Vec<Vertex>> = verts.iter().map(|&v| (v, Vec::new())).collect();
    for &v in &verts {
        if v.layer() != i {
            continue;
        }
        for j in 1..=d {
            let w = v.flip(j);
            if w.layer() == i + 1
                && vset.contains(&w)
                && eo.edge_open_tagged(v, w, exposure_tags::COVER).unwrap()
            {
                adj.get_mut(&v).unwrap().push(w);
                adj.get_mut(&w).unwrap().push(v);
            }
        }
    }
    for l in adj.values_mut() {
        l.sort();
    }
    LayerGraph { i, d, verts, adj, v1_size, report }
}

/// Remove vertices of degree > cap, properly edge-color the remainder
/// with Δ colors by alternating-path recoloring, and return the two
/// largest color classes. They are edge-disjoint matchings.
pub fn two_matchings(h: &LayerGraph, cap: f64) -> (Vec<(Vertex, Vertex)>, Vec<(Vertex, Vertex)>) {
    let keep: BTreeSet<Vertex> =
        h.verts.iter().filter(|v| (h.adj[v].len() as f64) <= cap).copied().collect();
    let mut edges: Vec<(Vertex, Vertex)> = Vec::new();
    let mut deg: BTreeMap<Vertex, usize> = BTreeMap::new();
    for (&v, nbrs) in &h.adj {
        if v.layer() != h.i || !keep.contains(&v) {
            continue;
        }
        for &w in nbrs {
            if keep.contains(&w) {
                edges.push((v, w));
                *deg.entry(v).or_insert(0) += 1;
                *deg.entry(w).or_insert(0) += 1;
            }
        }
    }
    let max_deg = deg.values().copied().max().unwrap_or(0);
    if max_deg == 0 {
        return (Vec::new(), Vec::new());
    }
    // color[v][c] = partner matched to v under color c
    let mut color: BTreeMap<Vertex, Vec<Option<Vertex>>> = BTreeMap::new();
    for &v in deg.keys() {
        color.insert(v, vec![None; max_deg]);
    }
    for &(u, v) in &edges {
        let a = (0..max_deg).find(|&c| color[&u][c].is_none()).expect("degree bound");
        let b = (0..max_deg).find(|&c| color[&v][c].is_none()).expect("degree bound");
        let c = if color[&v][a].is_none() {
            a
        } else {
            // flip the a/b alternating path starting at v with its
            // a-colored edge; in a bipartite graph it cannot reach u,
            // so afterwards color a is free at both u and v
            let mut chain: Vec<(Vertex, Vertex, usize)> = Vec::new();
            let mut x = v;
            let mut want = a;
            while let Some(y) = color[&x][want] {
                chain.push((x, y, want));
                x = y;
                want = if want == a { b } else { a };
            }
            for &(x, y, cc) in &chain {
                color.get_mut(&x).unwrap()[cc] = None;
                color.get_mut(&y).unwrap()[cc] = None;
            }
            for &(x, y, cc) in &chain {
                let o = if cc == a { b } else { a };
                color.get_mut(&x).unwrap()[o] = Some(y);
                color.get_mut(&y).unwrap()[o] = Some(x);
            }
            a
        };
        debug_assert!(color[&u][c].is_none() && color[&v][c].is_none());
        color.get_mut(&u).unwrap()[c] = Some(v);
        color.get_mut(&v).unwrap()[c] = Some(u);
    }
    let mut classes: Vec<Vec<(Vertex, Vertex)>> = vec![Vec::new(); max_deg];
    for (&v, slots) in &color {
        if v.layer() != h.i {
            continue;
        }
        for (c, w) in slots.iter().enumerate() {
            if let Some(w) = w {
                classes[c].push((v, *w));
            }
        }
    }
    let mut order: Vec<usize> = (0..max_deg).collect();
    order.sort_by_key(|&c| (std::cmp::Reverse(classes[c].len()), c));
    let m1 = classes[order[0]].clone();
    let m2 = if max_deg > 1 { classes[order[1]].clone() } else { Vec::new() };
    (m1, m2)
}

/// A family of vertex-disjoint open paths between two adjacent layers.
#[derive(Clone, Debug, Default)]
pub struct CoverFamily {
    pub i: u32,
    pub paths: Vec<Vec<Vertex>>,
    /// Vertices covered by the family.
    pub covered: usize,
    /// Denominator for the coverage fraction.
    pub denominator: usize,
}

impl CoverFamily {
    pub fn coverage_fraction(&self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.covered as f64 / self.denominator as f64
        }
    }
}

/// Decompose a graph of maximum degree two into path and cycle
/// components. Cycle components are opened at their lowest vertex.
/// Deterministic: components discovered from their lowest vertex.
fn decompose(union: &BTreeMap<Vertex, Vec<Vertex>>) -> Vec<(Vec<Vertex>, bool)> {
    let mut seen: BTreeSet<Vertex> = BTreeSet::new();
    let mut out = Vec::new();
    for &start in union.keys() {
        if seen.contains(&start) {
            continue;
        }
        // find an endpoint (or detect a cycle back at `start`)
        let mut head = start;
        let mut prev: Option<Vertex> = None;
        let mut is_cycle = false;
        loop {
            let next = union[&head].iter().find(|&&w| Some(w) != prev).copied();
            match next {
                None => break,
                Some(w) if w == start && prev.is_some() => {
                    is_cycle = true;
                    head = start;
                    break;
                }
                Some(w) => {
                    prev = Some(head);
                    head = w;
                }
            }
        }
        let mut comp = vec![head];
        seen.insert(head);
        let mut prev: Option<Vertex> = None;
        let mut node = head;
        loop {
            let next = union[&node]
                .iter()
                .find(|&&w| Some(w) != prev && !seen.contains(&w))
                .copied();
            match next {
                Some(w) => {
                    comp.push(w);
                    seen.insert(w);
                    prev = Some(node);
                    node = w;
                }
                None => break,
            }
        }
        out.push((comp, is_cycle));
    }
    out
}

/// Partition `v_count` path vertices into consecutive blocks, each a
/// subpath with edge length in [lo, 2*lo] (block sizes lo+1..=2*lo+1).
/// Returns block sizes; empty when the path is too short.
fn block_sizes(v_count: usize, lo: usize) -> Vec<usize> {
    let unit = lo + 1;
    if v_count < unit {
        return Vec::new();
    }
    let n = v_count / unit;
    let base = v_count / n;
    let extra = v_count % n;
    (0..n).map(|k| base + usize::from(k < extra)).collect()
}

/// The short-path cover of `L_{i,i+1}[V1]`.
pub fn short_path_cover(
    i: u32,
    ps: &ParameterSet,
    eo: &EdgeOracle,
    po: &PartitionOracle,
) -> CoverFamily {
    let h = build_layer_graph(i, ps, eo, po);
    let delta = (1.0 + ps.well_spread_slack) * ps.q1 * ps.d as f64 / 2.0;
    let cap = (1.0 + ps.high_degree_delta) * delta * eo.p;
    let (m1, m2) = two_matchings(&h, cap);
    let mut union: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
    for &(u, v) in m1.iter().chain(m2.iter()) {
        union.entry(u).or_default().push(v);
        union.entry(v).or_default().push(u);
    }
    for l in union.values_mut() {
        l.sort();
        l.dedup();
    }
    let mut family = Vec::new();
    for (comp, _is_cycle) in decompose(&union) {
        let mut start = 0usize;
        for size in block_sizes(comp.len(), ps.cover_len_lo) {
            family.push(comp[start..start + size].to_vec());
            start += size;
        }
    }
    let covered = family.iter().map(|p| p.len()).sum();
    CoverFamily { i, paths: family, covered, denominator: h.v1_size }
}

/// Count open cycles of length ≤ maxlen that touch `L_{i,i+1}` and stay
/// in layers ≥ i. Each cycle counted once (canonical minimum start, one
/// direction). Bounded DFS; intended for small d / short maxlen.
pub fn short_cycle_census(i: u32, maxlen: usize, eo: &EdgeOracle) -> Result<u64, CoverError> {
    if maxlen % 2 != 0 || maxlen < 4 {
        return Err(CoverError::BadMaxLen(maxlen));
    }
    let d = eo.d;
    let top_layer = (i + 1 + maxlen as u32 / 2).min(d);
    let mut count = 0u64;
    let mut starts: Vec<Vertex> = Vec::new();
    for layer in i..=top_layer {
        starts.extend(layer_vertices(d, layer));
    }
    starts.sort();
    let mut path: Vec<Vertex> = Vec::new();
    for &s in &starts {
        path.clear();
        path.push(s);
        count += census_dfs(s, &mut path, i, top_layer, maxlen, eo);
    }
    Ok(count)
}

fn census_dfs(
    s: Vertex,
    path: &mut Vec<Vertex>,
    min_layer: u32,
    top_layer: u32,
    maxlen: usize,
    eo: &EdgeOracle,
) -> u64 {
    let mut found = 0u64;
    let cur = *path.last().unwrap();
    for j in 1..=eo.d {
        let w = cur.flip(j);
        if w.layer() < min_layer || w.layer() > top_layer {
            continue;
        }
        if w == s {
            // closing edge; count one direction only and require the
            // cycle to touch the layer pair
            if path.len() >= 4
                && path[1] < *path.last().unwrap()
                && eo.edge_open(cur, s).unwrap()
                && path.iter().any(|v| v.layer() == min_layer || v.layer() == min_layer + 1)
            {
                found += 1;
            }
            continue;
        }
        if w <= s || path.contains(&w) || path.len() == maxlen {
            continue;
        }
        if eo.edge_open(cur, w).unwrap() {
            path.push(w);
            found += census_dfs(s, path, min_layer, top_layer, maxlen, eo);
            path.pop();
        }
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Mode;
    use crate::percolation::PartitionOracle;

    fn graph_from_edges(i: u32, d: u32, edges: &[(u64, u64)]) -> LayerGraph {
        let mut verts: BTreeSet<Vertex> = BTreeSet::new();
        let mut adj: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        for &(a, b) in edges {
            let (a, b) = (Vertex(a), Vertex(b));
            verts.insert(a);
            verts.insert(b);
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        for l in adj.values_mut() {
            l.sort();
        }
        let verts: Vec<Vertex> = verts.into_iter().collect();
        let v1_size = verts.len();
        let ps = ParameterSet::new(12, 4.0, Mode::Desk).unwrap();
        let po = PartitionOracle::new(0, i, 1.0, 0.0, 0.0);
        let report = well_spread_report(&po, i, &ps).unwrap();
        LayerGraph { i, d, verts, adj, v1_size, report }
    }

    fn assert_matching(m: &[(Vertex, Vertex)]) {
        let mut seen = BTreeSet::new();
        for &(u, v) in m {
            assert!(seen.insert(u), "vertex reused in matching");
            assert!(seen.insert(v), "vertex reused in matching");
        }
    }

    #[test]
    fn four_cycle_splits_into_two_perfect_matchings() {
        // abstract bipartite 4-cycle: two layer-2 words, two layer-3 words
        let g = graph_from_edges(
            2,
            4,
            &[(0b0011, 0b0111), (0b0111, 0b0101), (0b0101, 0b1011), (0b1011, 0b0011)],
        );
        let (m1, m2) = two_matchings(&g, 10.0);
        assert_eq!(m1.len(), 2);
        assert_eq!(m2.len(), 2);
        assert_matching(&m1);
        assert_matching(&m2);
        let all: BTreeSet<_> = m1.iter().chain(m2.iter()).collect();
        assert_eq!(all.len(), 4, "matchings edge-disjoint and cover the cycle");
    }

    #[test]
    fn three_edge_path_outer_vs_middle() {
        let g = graph_from_edges(2, 6, &[(0b000011, 0b000111), (0b000111, 0b000110), (0b000110, 0b001110)]);
        let (m1, m2) = two_matchings(&g, 10.0);
        assert_eq!(m1.len(), 2, "larger class is the two outer edges");
        assert_eq!(m2.len(), 1);
        assert_matching(&m1);
        assert_matching(&m2);
    }

    #[test]
    fn empty_graph_empty_matchings() {
        let g = graph_from_edges(2, 4, &[]);
        let (m1, m2) = two_matchings(&g, 10.0);
        assert!(m1.is_empty() && m2.is_empty());
    }

    #[test]
    fn coloring_is_proper_on_random_layer_graphs() {
        let ps = ParameterSet::new(10, 4.0, Mode::Desk).unwrap();
        for seed in 0..8u64 {
            let eo = EdgeOracle::new(seed, 0.7, ps.d);
            let po = PartitionOracle::for_params(seed, 4, &ps);
            let h = build_layer_graph(4, &ps, &eo, &po);
            let (m1, m2) = two_matchings(&h, 1e9);
            assert_matching(&m1);
            assert_matching(&m2);
            let e1: BTreeSet<_> = m1.iter().collect();
            assert!(m2.iter().all(|e| !e1.contains(e)));
            assert!(m1.len() >= m2.len());
            // with no vertices removed, the union must cover every edge
            // of the graph across all classes — spot-check edge counts
            let total_edges: usize =
                h.adj.iter().filter(|(v, _)| v.layer() == 4).map(|(_, l)| l.len()).sum();
            assert!(m1.len() + m2.len() <= total_edges);
        }
    }

    #[test]
    fn cover_paths_alternate_and_are_disjoint() {
        let ps = ParameterSet::new(10, 8.0, Mode::Desk).unwrap();
        let eo = EdgeOracle::new(3, ps.p, ps.d);
        let po = PartitionOracle::for_params(3, 4, &ps);
        let fam = short_path_cover(4, &ps, &eo, &po);
        assert!(!fam.paths.is_empty());
        let mut seen = BTreeSet::new();
        for p in &fam.paths {
            let len = p.len() - 1;
            assert!(len >= ps.cover_len_lo && len <= ps.cover_len_hi, "len {len}");
            for w in p.windows(2) {
                assert_eq!((w[0].0 ^ w[1].0).count_ones(), 1);
                assert!(eo.edge_open(w[0], w[1]).unwrap());
            }
            for &v in p {
                assert!(v.layer() == 4 || v.layer() == 5);
                assert!(seen.insert(v), "cover paths share a vertex");
            }
        }
        assert_eq!(fam.covered, seen.len());
        assert!(fam.coverage_fraction() <= 1.0);
    }

    #[test]
    fn p_zero_cover_empty() {
        let ps = ParameterSet::new(10, 4.0, Mode::Desk).unwrap();
        let eo = EdgeOracle::new(3, 0.0, ps.d);
        let po = PartitionOracle::for_params(3, 4, &ps);
        let fam = short_path_cover(4, &ps, &eo, &po);
        assert!(fam.paths.is_empty());
        assert_eq!(fam.coverage_fraction(), 0.0);
    }

    #[test]
    fn block_sizes_tile_in_range() {
        for v_count in 1..300usize {
            for lo in 1..10usize {
                let blocks = block_sizes(v_count, lo);
                if v_count < lo + 1 {
                    assert!(blocks.is_empty());
                    continue;
                }
                assert_eq!(blocks.iter().sum::<usize>(), v_count);
                for &b in &blocks {
                    assert!(b >= lo + 1 && b <= 2 * lo + 1, "v={v_count} lo={lo} b={b}");
                }
            }
        }
    }

    #[test]
    fn decompose_identifies_paths_and_cycles() {
        // path 0-1-3 plus 4-cycle 4-5-7-6
        let mut union: BTreeMap<Vertex, Vec<Vertex>> = BTreeMap::new();
        for &(a, b) in &[(0u64, 1u64), (1, 3), (4, 5), (5, 7), (7, 6), (6, 4)] {
            union.entry(Vertex(a)).or_default().push(Vertex(b));
            union.entry(Vertex(b)).or_default().push(Vertex(a));
        }
        for l in union.values_mut() {
            l.sort();
        }
        let comps = decompose(&union);
        assert_eq!(comps.len(), 2);
        let path = comps.iter().find(|(_, c)| !c).unwrap();
        let cycle = comps.iter().find(|(_, c)| *c).unwrap();
        assert_eq!(path.0.len(), 3);
        assert_eq!(cycle.0.len(), 4);
        assert_eq!(cycle.0[0], Vertex(4), "cycle opened at lowest vertex");
    }

    #[test]
    fn census_examples() {
        let d = 3;
        let eo = EdgeOracle::new(1, 0.0, d);
        assert_eq!(short_cycle_census(1, 4, &eo).unwrap(), 0);
        let eo = EdgeOracle::new(1, 1.0, d);
        assert_eq!(short_cycle_census(1, 4, &eo).unwrap(), 3);
        assert!(short_cycle_census(1, 3, &eo).is_err());
    }

    #[test]
    fn census_matches_brute_force_on_q3_q4() {
        // independent enumeration of 4-cycles with layers >= i touching
        // the pair, deduplicated by vertex-set signature
        for d in [3u32, 4] {
            for i in 0..d - 1 {
                let eo = EdgeOracle::new(9, 1.0, d);
                let mut sigs = BTreeSet::new();
                for a in 0..1u64 << d {
                    for j1 in 1..=d {
                        for j2 in 1..=d {
                            if j1 == j2 {
                                continue;
                            }
                            let b = Vertex(a).flip(j1);
                            let c = b.flip(j2);
                            let e = Vertex(a).flip(j2);
                            let quad = [Vertex(a), b, c, e];
                            if quad.iter().all(|v| v.layer() >= i)
                                && quad.iter().any(|v| v.layer() == i || v.layer() == i + 1)
                            {
                                let mut sig: Vec<u64> = quad.iter().map(|v| v.0).collect();
                                sig.sort();
                                sigs.insert(sig);
                            }
                        }
                    }
                }
                assert_eq!(short_cycle_census(i, 4, &eo).unwrap(), sigs.len() as u64, "d={d} i={i}");
            }
        }
    }

    #[test]
    fn census_partial_percolation_matches_brute() {
        for seed in 0..5u64 {
            let d = 4;
            let eo = EdgeOracle::new(seed, 0.6, d);
            let i = 1;
            let mut sigs = BTreeSet::new();
            for a in 0..1u64 << d {
                for j1 in 1..=d {
                    for j2 in 1..=d {
                        if j1 == j2 {
                            continue;
                        }
                        let b = Vertex(a).flip(j1);
                        let c = b.flip(j2);
                        let e = Vertex(a).flip(j2);
                        let quad = [Vertex(a), b, c, e];
                        let edges_open = eo.edge_open(quad[0], quad[1]).unwrap()
                            && eo.edge_open(quad[1], quad[2]).unwrap()
                            && eo.edge_open(quad[2], quad[3]).unwrap()
                            && eo.edge_open(quad[3], quad[0]).unwrap();
                        if edges_open
                            && quad.iter().all(|v| v.layer() >= i)
                            && quad.iter().any(|v| v.layer() == i || v.layer() == i + 1)
                        {
                            let mut sig: Vec<u64> = quad.iter().map(|v| v.0).collect();
                            sig.sort();
                            sigs.insert(sig);
                        }
                    }
                }
            }
            assert_eq!(short_cycle_census(i, 4, &eo).unwrap(), sigs.len() as u64, "seed={seed}");
        }
    }
}
