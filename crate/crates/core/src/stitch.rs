//! Close the surviving paths into one cycle. Each consecutive pair of
//! paths is linked through two-edge connectors into a dedicated
//! stitching subcube inside Q_1, whose edges are still untouched by
//! every earlier stage.

use crate::cube::{stitch_cubes, CoordSet, SubcubeSpec, Vertex};
use crate::mog::{Pef, Witness};
use crate::params::{Mode, ParameterSet};
use crate::percolation::{exposure_tags, EdgeOracle};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StitchError {
    #[error("only {0} eligible coordinates for a stitch set of {1}")]
    NotEnoughCoords(usize, usize),
    #[error("{0} paths cannot share {1} stitch coordinates")]
    TooManyParts(usize, usize),
    #[error("no witnesses recorded for tree {0}")]
    NoWitness(usize),
    #[error("no open link closes class {0}")]
    MissingLink(usize),
    #[error("subcube edge already exposed by stage tag {0}")]
    ExposureViolation(u32),
    #[error("subcube geometry: {0}")]
    Geometry(String),
    #[error("endpoint outside the subcube")]
    OutsideSubcube,
}

/// Stitching plan: coordinate classes, their subcubes, and the cyclic
/// order of the surviving paths.
#[derive(Clone, Debug)]
pub struct ConnectorPlan {
    pub k_set: CoordSet,
    /// Stitch coordinates per class, ascending within each class.
    pub classes: Vec<Vec<u32>>,
    pub subcubes: BTreeMap<u32, SubcubeSpec>,
    /// Alive path ids in cycle order.
    pub order: Vec<usize>,
}

/// Pick the smallest eligible coordinates outside the witness supports
/// and split them evenly over the path links.
pub fn plan_connectors(
    pef: &Pef,
    witnesses: &[Witness],
    ps: &ParameterSet,
) -> Result<ConnectorPlan, StitchError> {
    let mut j = CoordSet::empty();
    for w in witnesses {
        j = j.union(w.j_s);
    }
    let eligible: Vec<u32> = (2..=ps.d).filter(|&c| !j.contains(c)).collect();
    if eligible.len() < ps.stitch_k {
        return Err(StitchError::NotEnoughCoords(eligible.len(), ps.stitch_k));
    }
    let mut k_set = CoordSet::empty();
    for &c in eligible.iter().take(ps.stitch_k) {
        k_set = k_set.insert(c);
    }
    let order = pef.alive_paths();
    let s = order.len().max(1);
    if ps.stitch_k < s {
        return Err(StitchError::TooManyParts(s, ps.stitch_k));
    }
    let ks: Vec<u32> = k_set.iter().collect();
    let base = ks.len() / s;
    let extra = ks.len() % s;
    let mut classes = Vec::with_capacity(s);
    let mut at = 0usize;
    for r in 0..s {
        let take = base + usize::from(r < extra);
        classes.push(ks[at..at + take].to_vec());
        at += take;
    }
    let subcubes: BTreeMap<u32, SubcubeSpec> =
        stitch_cubes(k_set, ps.d, ps.mode == Mode::Paper)
            .map_err(|e| StitchError::Geometry(e.to_string()))?
            .into_iter()
            .collect();
    Ok(ConnectorPlan { k_set, classes, subcubes, order })
}

/// Shortest open path between two subcube vertices, or None. Every
/// edge of the subcube must be unexposed or already carry this
/// subcube's own tag.
pub fn subcube_connect(
    spec: SubcubeSpec,
    a: Vertex,
    b: Vertex,
    eo: &EdgeOracle,
    tag: u32,
) -> Result<Option<Vec<Vertex>>, StitchError> {
    if !spec.contains(a) || !spec.contains(b) {
        return Err(StitchError::OutsideSubcube);
    }
    let free: Vec<u32> = spec.free_coords().iter().collect();
    for v in spec.vertices() {
        for &c in &free {
            if v.has(c) {
                continue;
            }
            if let Some(prior) = eo.exposure_tag(v, v.flip(c)).unwrap() {
                if prior != tag {
                    return Err(StitchError::ExposureViolation(prior));
                }
            }
        }
    }
    if a == b {
        return Ok(Some(vec![a]));
    }
    let mut parent: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    let mut queue = VecDeque::from([a]);
    parent.insert(a, a);
    while let Some(v) = queue.pop_front() {
        for &c in &free {
            let w = v.flip(c);
            if parent.contains_key(&w) || !eo.edge_open_tagged(v, w, tag).unwrap() {
                continue;
            }
            parent.insert(w, v);
            if w == b {
                let mut path = vec![b];
                let mut cur = b;
                while cur != a {
                    cur = parent[&cur];
                    path.push(cur);
                }
                path.reverse();
                return Ok(Some(path));
            }
            queue.push_back(w);
        }
    }
    Ok(None)
}

#[derive(Clone, Debug)]
struct Link {
    /// Exit attachment on the earlier path and entry on the later one.
    s_out: Vertex,
    s_in: Vertex,
    /// Vertices strictly between the two attachments.
    verts: Vec<Vertex>,
}

/// Build one cycle through the interiors of all surviving paths.
pub fn stitch(
    pef: &Pef,
    witnesses: &[Witness],
    ps: &ParameterSet,
    eo: &EdgeOracle,
) -> Result<Vec<Vertex>, StitchError> {
    let plan = plan_connectors(pef, witnesses, ps)?;
    let s = plan.order.len();
    if s == 0 {
        return Err(StitchError::MissingLink(0));
    }
    let by_tree: BTreeMap<usize, &Witness> = witnesses.iter().map(|w| (w.tree, w)).collect();
    let tree_of = |p: usize, plus: bool| -> usize {
        pef.alive_trees()
            .into_iter()
            .find(|&t| pef.trees[t].path == p && pef.trees[t].plus == plus)
            .expect("alive path owns both trees")
    };
    let mut used: BTreeSet<Vertex> = BTreeSet::new();
    for &p in &plan.order {
        used.extend(pef.paths[p].verts.iter().copied());
    }
    let mut links: Vec<Link> = Vec::new();
    for r in 0..s {
        let t_minus = tree_of(plan.order[r], false);
        let t_plus = tree_of(plan.order[(r + 1) % s], true);
        let w_minus = by_tree.get(&t_minus).ok_or(StitchError::NoWitness(t_minus))?;
        let w_plus = by_tree.get(&t_plus).ok_or(StitchError::NoWitness(t_plus))?;
        let mut found = None;
        'search: for &k in &plan.classes[r] {
            let spec = plan.subcubes[&k];
            for &wm in &w_minus.w_s {
                for &wp in &w_plus.w_s {
                    if let Some(link) = try_link(pef, t_minus, wm, t_plus, wp, k, spec, eo, &used) {
                        found = Some(link);
                        break 'search;
                    }
                }
            }
        }
        let link = found.ok_or(StitchError::MissingLink(r))?;
        used.extend(link.verts.iter().copied());
        links.push(link);
    }
    Ok(assemble_cycle(pef, &plan, &links, eo))
}

/// Attempt one link: tree path down to the minus witness, two-edge
/// connector up into the subcube, open subcube path, connector down,
/// tree path back up into the next path.
#[allow(clippy::too_many_arguments)]
fn try_link(
    pef: &Pef,
    t_minus: usize,
    wm: Vertex,
    t_plus: usize,
    wp: Vertex,
    k: u32,
    spec: SubcubeSpec,
    eo: &EdgeOracle,
    used: &BTreeSet<Vertex>,
) -> Option<Link> {
    if wm.in_q1() || wp.in_q1() || wm.has(k) || wp.has(k) {
        return None;
    }
    let chain_m = pef.trees[t_minus].tree.path_to_root(wm);
    let chain_p = pef.trees[t_plus].tree.path_to_root(wp);
    let s_out = *chain_m.last().unwrap();
    let s_in = *chain_p.last().unwrap();
    let um = wm.flip(1);
    let up = wp.flip(1);
    let ym = um.flip(k);
    let yp = up.flip(k);
    for (x, y) in [(wm, um), (um, ym), (yp, up), (up, wp)] {
        if !eo.edge_open_tagged(x, y, exposure_tags::CONNECTOR).unwrap() {
            return None;
        }
    }
    let sub = subcube_connect(spec, ym, yp, eo, exposure_tags::SUBCUBE_BASE + k).ok()??;
    // s_out .. wm .. um, subcube path, up .. wp .. s_in, exclusive ends
    let mut verts: Vec<Vertex> = chain_m.iter().rev().skip(1).copied().collect();
    verts.push(um);
    verts.extend(sub);
    verts.push(up);
    verts.extend(chain_p[..chain_p.len() - 1].iter().copied());
    let distinct: BTreeSet<Vertex> = verts.iter().copied().collect();
    if distinct.len() != verts.len() || verts.iter().any(|v| used.contains(v)) {
        return None;
    }
    Some(Link { s_out, s_in, verts })
}

/// Concatenate path traversals and links into the closed sequence and
/// verify it on the spot.
fn assemble_cycle(pef: &Pef, plan: &ConnectorPlan, links: &[Link], eo: &EdgeOracle) -> Vec<Vertex> {
    let s = plan.order.len();
    let mut cycle: Vec<Vertex> = Vec::new();
    for r in 0..s {
        let p = plan.order[r];
        let verts = &pef.paths[p].verts;
        let s_in = links[(r + s - 1) % s].s_in;
        let s_out = links[r].s_out;
        let a = verts.iter().position(|&x| x == s_in).expect("entry on path");
        let b = verts.iter().position(|&x| x == s_out).expect("exit on path");
        assert!(a <= b, "entry lies in the initial segment, exit in the terminal one");
        cycle.extend_from_slice(&verts[a..=b]);
        cycle.extend(links[r].verts.iter().copied());
    }
    let active_int: usize = plan
        .order
        .iter()
        .map(|&p| pef.paths[p].verts.len() - 2 * pef.segment_len)
        .sum();
    assert!(cycle.len() >= active_int, "cycle must span every active interior");
    let distinct: BTreeSet<Vertex> = cycle.iter().copied().collect();
    assert_eq!(distinct.len(), cycle.len(), "cycle repeats a vertex");
    for i in 0..cycle.len() {
        let u = cycle[i];
        let v = cycle[(i + 1) % cycle.len()];
        assert_eq!((u.0 ^ v.0).count_ones(), 1, "cycle step not a cube edge");
        assert!(eo.edge_open(u, v).unwrap(), "cycle uses a closed edge");
    }
    cycle
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mog::Witness;

    fn v(s: &str) -> Vertex {
        Vertex::from_bit_string(s).unwrap()
    }

    fn ps_for(d: u32, stitch_k: usize) -> ParameterSet {
        let mut ps = ParameterSet::new(d, 4.0, Mode::Desk).unwrap();
        ps.stitch_k = stitch_k;
        ps
    }

    fn witness(tree: usize, leaf: Vertex) -> Witness {
        Witness { tree, w_s: vec![leaf], j_s: leaf.support() }
    }

    /// One 5-vertex path in Q_0 with single-vertex segments.
    fn one_path_pef(d: u32) -> Pef {
        let mut pef = Pef::new(d, 1);
        let path: Vec<Vertex> = ["01100000", "01110000", "00110000", "00111000", "00011000"]
            .iter()
            .map(|s| {
                let mut t = s.to_string();
                t.push_str(&"0".repeat(d as usize - 8));
                v(&t)
            })
            .collect();
        pef.adjoin_path(path);
        pef.validate();
        pef
    }

    #[test]
    fn plan_smallest_coordinates() {
        let pef = one_path_pef(12);
        let ps = ps_for(12, 8);
        // no witness supports: K is the 8 smallest eligible coordinates
        let plan = plan_connectors(&pef, &[], &ps).unwrap();
        assert_eq!(plan.k_set.iter().collect::<Vec<_>>(), (2..=9).collect::<Vec<_>>());
        assert_eq!(plan.classes, vec![(2..=9).collect::<Vec<_>>()]);
        assert_eq!(plan.subcubes.len(), 8);
        // supports consumed by witnesses shift K upward
        let w = witness(0, v("011000000000"));
        let plan = plan_connectors(&pef, &[w], &ps).unwrap();
        assert_eq!(plan.k_set.iter().collect::<Vec<_>>(), vec![4, 5, 6, 7, 8, 9, 10, 11]);
        // not enough coordinates left
        let mut ps = ps_for(12, 11);
        ps.stitch_k = 11;
        let w = witness(0, v("011000000000"));
        assert_eq!(
            plan_connectors(&pef, &[w], &ps).unwrap_err(),
            StitchError::NotEnoughCoords(9, 11)
        );
    }

    #[test]
    fn subcube_connect_basics() {
        let spec = SubcubeSpec {
            bottom: v("100001000000"),
            top: v("111111000011"),
        };
        let a = v("100001000000");
        let b = v("111001000000");
        let tag = exposure_tags::SUBCUBE_BASE + 6;
        let eo = EdgeOracle::new(0, 1.0, 12);
        assert_eq!(subcube_connect(spec, a, a, &eo, tag).unwrap().unwrap(), vec![a]);
        let p = subcube_connect(spec, a, b, &eo, tag).unwrap().unwrap();
        assert_eq!(p.len(), 3, "shortest path has Hamming-distance edges");
        assert_eq!((p[0], p[2]), (a, b));
        // closed world: unreachable
        let eo = EdgeOracle::new(0, 0.0, 12);
        assert!(subcube_connect(spec, a, b, &eo, tag).unwrap().is_none());
        // endpoints must lie inside
        let eo = EdgeOracle::new(0, 1.0, 12);
        assert_eq!(
            subcube_connect(spec, v("010000000000"), b, &eo, tag).unwrap_err(),
            StitchError::OutsideSubcube
        );
        // a foreign exposure inside the subcube is a discipline error
        let eo = EdgeOracle::new(0, 1.0, 12);
        eo.edge_open(a, a.flip(2)).unwrap();
        assert_eq!(
            subcube_connect(spec, a, b, &eo, tag).unwrap_err(),
            StitchError::ExposureViolation(exposure_tags::PLAIN)
        );
    }

    #[test]
    fn single_path_closes_into_cycle() {
        let pef = one_path_pef(8);
        let mut ps = ps_for(8, 2);
        ps.segment_len = 1;
        let ws = vec![
            witness(0, pef.paths[0].verts[0]),
            witness(1, pef.paths[0].verts[4]),
        ];
        let eo = EdgeOracle::new(0, 1.0, 8);
        let cycle = stitch(&pef, &ws, &ps, &eo).unwrap();
        // interior plus both segments plus the 7-vertex link
        assert_eq!(cycle.len(), 12);
        // the whole path appears in order
        assert_eq!(&cycle[..5], &pef.paths[0].verts[..]);
    }

    #[test]
    fn two_paths_close_through_two_classes() {
        let mut pef = Pef::new(12, 1);
        let p1: Vec<Vertex> = ["011000000000", "011100000000", "001100000000",
            "001110000000", "000110000000"]
            .iter().map(|s| v(s)).collect();
        let p2: Vec<Vertex> = ["000001100000", "000001110000", "000000110000",
            "000000111000", "000000011000"]
            .iter().map(|s| v(s)).collect();
        pef.adjoin_path(p1.clone());
        pef.adjoin_path(p2.clone());
        pef.validate();
        let ps = ps_for(12, 2);
        let ws = vec![
            witness(0, p1[0]),
            witness(1, p1[4]),
            witness(2, p2[0]),
            witness(3, p2[4]),
        ];
        let eo = EdgeOracle::new(0, 1.0, 12);
        let cycle = stitch(&pef, &ws, &ps, &eo).unwrap();
        assert_eq!(cycle.len(), 24);
        for p in [&p1, &p2] {
            for x in p {
                assert!(cycle.contains(x));
            }
        }
    }

    #[test]
    fn closed_world_reports_missing_link() {
        let pef = one_path_pef(8);
        let mut ps = ps_for(8, 2);
        ps.segment_len = 1;
        let ws = vec![
            witness(0, pef.paths[0].verts[0]),
            witness(1, pef.paths[0].verts[4]),
        ];
        let eo = EdgeOracle::new(0, 0.0, 8);
        assert_eq!(stitch(&pef, &ws, &ps, &eo).unwrap_err(), StitchError::MissingLink(0));
    }
}
