//! Merge-Or-Grow: a layer-descending process over a path-extension
//! forest. Each surviving path carries two end segments, each segment
//! an extending tree growing toward lower layers. A fresh vertex
//! adjacent to trees of two distinct paths merges them into one longer
//! path; otherwise it is attached as a leaf.

use crate::cube::{CoordSet, Vertex};
use crate::params::ParameterSet;
use crate::percolation::{exposure_tags, prf, streams, Class, EdgeOracle, PartitionOracle, VertexOracle};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MogError {
    #[error("layer {0} outside the even schedule [{1}, {2}]")]
    BadLayer(u32, u32, u32),
    #[error("tree has no usable leaves at layer {0}")]
    NoLeaves(u32),
    #[error("coordinate budget exhausted at tree {0}, first clash with tree {1}")]
    AllocationInfeasible(usize, usize),
    #[error("cover construction failed: {0}")]
    Cover(String),
}

/// Tree extending one segment: member -> parent one layer up; segment
/// vertices are the roots (no parent).
#[derive(Clone, Debug, Default)]
pub struct Tree {
    pub members: BTreeMap<Vertex, Option<Vertex>>,
}

impl Tree {
    pub fn contains(&self, v: Vertex) -> bool {
        self.members.contains_key(&v)
    }

    /// Members at one layer.
    pub fn at_layer(&self, layer: u32) -> Vec<Vertex> {
        self.members.keys().copied().filter(|v| v.layer() == layer).collect()
    }

    /// Walk parent links from `v` up to the first root (segment vertex).
    pub fn path_to_root(&self, v: Vertex) -> Vec<Vertex> {
        let mut out = vec![v];
        let mut cur = v;
        while let Some(&Some(p)) = self.members.get(&cur) {
            out.push(p);
            cur = p;
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct PefPath {
    pub verts: Vec<Vertex>,
    pub alive: bool,
}

/// Tree entry bound to one end of one path.
#[derive(Clone, Debug)]
pub struct TreeEntry {
    pub path: usize,
    /// True when the segment is the initial end of the path.
    pub plus: bool,
    pub alive: bool,
    pub tree: Tree,
}

#[derive(Clone, Debug)]
pub struct MergeEvent {
    pub v: Vertex,
    pub trees: (usize, usize),
    pub x: Vec<Vertex>,
    pub y: Vec<Vertex>,
    pub new_path: usize,
}

/// Path-extension forest with full merge bookkeeping.
#[derive(Clone, Debug)]
pub struct Pef {
    pub d: u32,
    pub segment_len: usize,
    pub paths: Vec<PefPath>,
    pub trees: Vec<TreeEntry>,
    pub merge_log: Vec<MergeEvent>,
    /// Trees discarded for lack of growth (their paths retire).
    pub discards: usize,
    /// Interior mass of retired paths, frozen at retirement.
    retired_int: usize,
    choice_counter: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Noop,
    Attach { tree: usize },
    Merge { new_path: usize },
}

impl Pef {
    pub fn new(d: u32, segment_len: usize) -> Pef {
        Pef {
            d,
            segment_len,
            paths: Vec::new(),
            trees: Vec::new(),
            merge_log: Vec::new(),
            discards: 0,
            retired_int: 0,
            choice_counter: 0,
        }
    }

    /// Adjoin a path with fresh segments whose trees are the segments.
    pub fn adjoin_path(&mut self, verts: Vec<Vertex>) {
        let l = self.segment_len;
        assert!(verts.len() > 2 * l, "path too short to carry two segments");
        let pi = self.paths.len();
        for (plus, range) in [(true, 0..l), (false, verts.len() - l..verts.len())] {
            let mut tree = Tree::default();
            for &v in &verts[range] {
                tree.members.insert(v, None);
            }
            self.trees.push(TreeEntry { path: pi, plus, alive: true, tree });
        }
        self.paths.push(PefPath { verts, alive: true });
    }

    pub fn alive_paths(&self) -> Vec<usize> {
        (0..self.paths.len()).filter(|&p| self.paths[p].alive).collect()
    }

    pub fn alive_trees(&self) -> Vec<usize> {
        (0..self.trees.len()).filter(|&t| self.trees[t].alive).collect()
    }

    pub fn segment_verts(&self, t: usize) -> &[Vertex] {
        let e = &self.trees[t];
        let verts = &self.paths[e.path].verts;
        if e.plus {
            &verts[..self.segment_len]
        } else {
            &verts[verts.len() - self.segment_len..]
        }
    }

    /// Interior mass: path vertices outside segments, including retired
    /// paths. Never decreases.
    pub fn int_total(&self) -> usize {
        self.retired_int
            + self
                .alive_paths()
                .iter()
                .map(|&p| self.paths[p].verts.len() - 2 * self.segment_len)
                .sum::<usize>()
    }

    /// All vertices owned by alive paths and trees.
    pub fn vertex_set(&self) -> BTreeSet<Vertex> {
        let mut s = BTreeSet::new();
        for &p in &self.alive_paths() {
            s.extend(self.paths[p].verts.iter().copied());
        }
        for &t in &self.alive_trees() {
            s.extend(self.trees[t].tree.members.keys().copied());
        }
        s
    }

    /// Structural invariants: two live segments with trees per live
    /// path, tree meets its path exactly in the segment, and global
    /// vertex-disjointness apart from that containment.
    pub fn validate(&self) {
        let l = self.segment_len;
        for &p in &self.alive_paths() {
            assert!(self.paths[p].verts.len() > 2 * l, "degenerate path");
            let ts: Vec<usize> =
                self.alive_trees().into_iter().filter(|&t| self.trees[t].path == p).collect();
            assert_eq!(ts.len(), 2, "path must own exactly two trees");
            assert_ne!(self.trees[ts[0]].plus, self.trees[ts[1]].plus);
        }
        let mut path_verts: BTreeMap<Vertex, usize> = BTreeMap::new();
        for &p in &self.alive_paths() {
            for &v in &self.paths[p].verts {
                assert!(path_verts.insert(v, p).is_none(), "paths overlap at {v:?}");
            }
        }
        let mut tree_verts: BTreeMap<Vertex, usize> = BTreeMap::new();
        for &t in &self.alive_trees() {
            let e = &self.trees[t];
            let seg: BTreeSet<Vertex> = self.segment_verts(t).iter().copied().collect();
            let mut on_path = BTreeSet::new();
            for (&v, parent) in &e.tree.members {
                assert!(tree_verts.insert(v, t).is_none(), "trees overlap at {v:?}");
                match path_verts.get(&v) {
                    Some(&p) => {
                        assert_eq!(p, e.path, "tree touches a foreign path at {v:?}");
                        on_path.insert(v);
                        assert!(parent.is_none(), "segment vertex with a parent");
                    }
                    None => {
                        let p = parent.expect("grown vertex without parent");
                        assert!(e.tree.contains(p), "parent outside tree");
                        assert_eq!(p.layer(), v.layer() + 1, "parent not one layer up");
                    }
                }
            }
            assert_eq!(on_path, seg, "tree ∩ path must equal the segment");
        }
    }

    /// Retire a path whose tree stopped growing: interior is frozen,
    /// both trees die.
    fn retire_path(&mut self, p: usize) {
        assert!(self.paths[p].alive);
        self.retired_int += self.paths[p].verts.len() - 2 * self.segment_len;
        self.paths[p].alive = false;
        for t in 0..self.trees.len() {
            if self.trees[t].alive && self.trees[t].path == p {
                self.trees[t].alive = false;
            }
        }
    }

    /// Apply one B-step for vertex `v` given the revealed adjacency:
    /// (tree id, witness neighbor one layer above v, edge open).
    pub fn process_vertex(&mut self, v: Vertex, revealed: &[(usize, Vertex)], seed: u64) -> Action {
        let mut by_tree: BTreeMap<usize, Vertex> = BTreeMap::new();
        for &(t, u) in revealed {
            assert!(self.trees[t].alive, "revealed edge into a dead tree");
            assert_eq!(u.layer(), v.layer() + 1, "witness not one layer above");
            let e = by_tree.entry(t).or_insert(u);
            *e = (*e).min(u);
        }
        let tree_ids: Vec<usize> = by_tree.keys().copied().collect();
        // mergeable pairs: trees of distinct paths
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for (a, &t1) in tree_ids.iter().enumerate() {
            for &t2 in &tree_ids[a + 1..] {
                if self.trees[t1].path != self.trees[t2].path {
                    pairs.push((t1, t2));
                }
            }
        }
        let draw = prf(seed, streams::MOG_CHOICE, self.choice_counter, v.0);
        self.choice_counter += 1;
        if !pairs.is_empty() {
            let (t1, t2) = pairs[(draw % pairs.len() as u64) as usize];
            let new_path = self.merge(v, t1, by_tree[&t1], t2, by_tree[&t2]);
            return Action::Merge { new_path };
        }
        match tree_ids.len() {
            0 => Action::Noop,
            1 => {
                let t = tree_ids[0];
                self.trees[t].tree.members.insert(v, Some(by_tree[&t]));
                Action::Attach { tree: t }
            }
            2 => {
                // two trees of the same path: fair coin
                let t = tree_ids[(draw >> 32) as usize % 2];
                self.trees[t].tree.members.insert(v, Some(by_tree[&t]));
                Action::Attach { tree: t }
            }
            n => unreachable!("{n} non-mergeable trees cannot share one path"),
        }
    }

    /// B1: merge the paths of trees t1 and t2 through v. The new path
    /// keeps each old path from its far end to the witness attachment,
    /// joined by the two tree paths and v.
    fn merge(&mut self, v: Vertex, t1: usize, u1: Vertex, t2: usize, u2: Vertex) -> usize {
        let l = self.segment_len;
        // side of the first path, ending at the root of u1's tree path
        let chain1 = self.trees[t1].tree.path_to_root(u1);
        let chain2 = self.trees[t2].tree.path_to_root(u2);
        let half = |e: &TreeEntry, chain: &[Vertex], verts: &[Vertex]| -> Vec<Vertex> {
            let root = *chain.last().unwrap();
            let j = verts.iter().position(|&x| x == root).expect("root on path");
            let mut out: Vec<Vertex> = if e.plus {
                verts[j..].iter().rev().copied().collect()
            } else {
                verts[..=j].to_vec()
            };
            out.extend(chain.iter().rev().skip(1));
            out
        };
        let p1 = self.trees[t1].path;
        let p2 = self.trees[t2].path;
        let mut verts = half(&self.trees[t1].clone(), &chain1, &self.paths[p1].verts);
        verts.push(v);
        let back = half(&self.trees[t2].clone(), &chain2, &self.paths[p2].verts);
        verts.extend(back.iter().rev());
        let uniq: BTreeSet<Vertex> = verts.iter().copied().collect();
        assert_eq!(uniq.len(), verts.len(), "merged path must be simple");
        for w in verts.windows(2) {
            assert_eq!((w[0].0 ^ w[1].0).count_ones(), 1, "merged path not a cube path");
        }
        // survivors: the far-end trees, re-pointed at the new path
        let new_path = self.paths.len();
        let survivor1 = self
            .alive_trees()
            .into_iter()
            .find(|&t| t != t1 && self.trees[t].path == p1)
            .expect("far tree of first path");
        let survivor2 = self
            .alive_trees()
            .into_iter()
            .find(|&t| t != t2 && self.trees[t].path == p2)
            .expect("far tree of second path");
        assert!(verts.len() > 2 * l);
        self.paths[p1].alive = false;
        self.paths[p2].alive = false;
        self.trees[t1].alive = false;
        self.trees[t2].alive = false;
        self.trees[survivor1].path = new_path;
        self.trees[survivor1].plus = true;
        self.trees[survivor2].path = new_path;
        self.trees[survivor2].plus = false;
        self.paths.push(PefPath { verts, alive: true });
        self.merge_log.push(MergeEvent {
            v,
            trees: (t1, t2),
            x: chain1,
            y: chain2,
            new_path,
        });
        new_path
    }
}

#[derive(Clone, Debug, Default)]
pub struct IterStats {
    pub i: u32,
    pub merges: usize,
    pub attaches: usize,
    pub noops: usize,
    pub discards: usize,
    pub adjoined: usize,
}

/// The vertex batch for layer pair (i, i+1): class V3 above m2, its
/// Q_0 part at m2, all of Q_0 below.
fn batch(i: u32, ps: &ParameterSet, po: &PartitionOracle) -> Vec<Vertex> {
    let keep = |v: Vertex| -> bool {
        if i > ps.m2 {
            po.partition_of(v) == Class::V3
        } else if i == ps.m2 {
            po.partition_of(v) == Class::V3 && !v.in_q1()
        } else {
            !v.in_q1()
        }
    };
    let mut out: Vec<Vertex> = crate::cube::layer_vertices(ps.d, i + 1)
        .into_iter()
        .filter(|&v| keep(v))
        .collect();
    out.extend(crate::cube::layer_vertices(ps.d, i).into_iter().filter(|&v| keep(v)));
    out
}

/// One layer iteration: process the batch in canonical order (layer
/// i+1 first), then adjoin fresh merged cover paths while i >= m3,
/// then retire trees that gained no member at this depth.
pub fn mog_iteration(
    pef: &mut Pef,
    i: u32,
    ps: &ParameterSet,
    eo: &EdgeOracle,
) -> Result<IterStats, MogError> {
    if i % 2 != 0 || i < ps.m1 || i > ps.m4 {
        return Err(MogError::BadLayer(i, ps.m1, ps.m4));
    }
    let po = PartitionOracle::for_params(eo.seed, i, ps);
    let mut st = IterStats { i, ..Default::default() };
    let mut occupied = pef.vertex_set();
    let mut owner: BTreeMap<Vertex, usize> = BTreeMap::new();
    for t in pef.alive_trees() {
        for &m in pef.trees[t].tree.members.keys() {
            owner.insert(m, t);
        }
    }
    for v in batch(i, ps, &po) {
        if occupied.contains(&v) {
            continue;
        }
        // expose only edges from v upward into current tree vertices
        let mut revealed = Vec::new();
        for c in 1..=ps.d {
            if v.has(c) {
                continue;
            }
            let u = v.flip(c);
            if let Some(&t) = owner.get(&u) {
                if eo.edge_open_tagged(v, u, exposure_tags::MOG).unwrap() {
                    revealed.push((t, u));
                }
            }
        }
        match pef.process_vertex(v, &revealed, eo.seed) {
            Action::Noop => {
                st.noops += 1;
                continue;
            }
            Action::Attach { tree } => {
                st.attaches += 1;
                owner.insert(v, tree);
            }
            Action::Merge { .. } => {
                st.merges += 1;
                // the two consumed trees are gone; drop their members
                owner.retain(|_, t| pef.trees[*t].alive);
            }
        }
        occupied.insert(v);
    }
    if i >= ps.m3 {
        let fam = crate::layer_cover::short_path_cover(i, ps, eo, &po);
        if !fam.paths.is_empty() {
            let g = crate::dfs_merge::build_aux(&fam, i, ps, &po)
                .map_err(|e| MogError::Cover(e.to_string()))?;
            let res = crate::dfs_merge::dfs_aux(&g, ps, eo);
            let merged = crate::dfs_merge::realize_paths(&g, &res, ps, eo)
                .map_err(|e| MogError::Cover(e.to_string()))?;
            let occupied = pef.vertex_set();
            for p in merged.paths {
                if p.len() > 2 * ps.segment_len && p.iter().all(|v| !occupied.contains(v)) {
                    pef.adjoin_path(p);
                    st.adjoined += 1;
                }
            }
        }
    }
    // retire paths whose trees cannot reach the next batch
    for p in pef.alive_paths() {
        let stuck = pef
            .alive_trees()
            .into_iter()
            .filter(|&t| pef.trees[t].path == p)
            .any(|t| pef.trees[t].tree.members.keys().all(|v| v.layer() > i + 1));
        if stuck {
            pef.retire_path(p);
            pef.discards += 2;
            st.discards += 2;
        }
    }
    pef.validate();
    Ok(st)
}

#[derive(Clone, Debug, Default)]
pub struct MogStats {
    pub iterations: Vec<IterStats>,
    pub int_history: Vec<usize>,
    pub merges: usize,
    pub discards: usize,
}

/// Run the layer process from m4 down to `down_to`, asserting the
/// forest invariants and interior monotonicity throughout.
pub fn run_mog(ps: &ParameterSet, eo: &EdgeOracle, down_to: u32) -> Result<(Pef, MogStats), MogError> {
    if down_to % 2 != 0 || down_to < ps.m1 {
        return Err(MogError::BadLayer(down_to, ps.m1, ps.m4));
    }
    let mut pef = Pef::new(ps.d, ps.segment_len);
    let mut stats = MogStats::default();
    let mut last_int = 0usize;
    let mut i = ps.m4;
    while i >= down_to {
        let st = mog_iteration(&mut pef, i, ps, eo)?;
        stats.merges += st.merges;
        stats.discards += st.discards;
        stats.iterations.push(st);
        let now = pef.int_total();
        assert!(now >= last_int, "interior mass shrank at layer {i}");
        last_int = now;
        stats.int_history.push(now);
        if i < down_to + 2 {
            break;
        }
        i -= 2;
    }
    Ok((pef, stats))
}

/// Greedy leaf profile: grow a coordinate set I (never coordinate 1)
/// by repeatedly keeping the coordinate shared by the most surviving
/// leaves of the tree at `target_layer` within Q_0. Returns
/// (M_S, I_S, shortfall).
pub fn leaf_profile(
    tree: &Tree,
    target_layer: u32,
    ps: &ParameterSet,
) -> Result<(Vec<Vertex>, CoordSet, bool), MogError> {
    let mut m: Vec<Vertex> =
        tree.at_layer(target_layer).into_iter().filter(|v| !v.in_q1()).collect();
    if m.is_empty() {
        return Err(MogError::NoLeaves(target_layer));
    }
    let mut i_s = CoordSet::empty();
    while (i_s.len() as usize) < ps.iset_size {
        let best = (2..=ps.d)
            .filter(|&c| !i_s.contains(c))
            .map(|c| (m.iter().filter(|v| v.has(c)).count(), c))
            .filter(|&(n, _)| n > 0)
            .max_by_key(|&(n, c)| (n, std::cmp::Reverse(c)));
        match best {
            Some((_, c)) => {
                m.retain(|v| v.has(c));
                i_s = i_s.insert(c);
            }
            None => return Ok((m, i_s, true)),
        }
    }
    Ok((m, i_s, false))
}

#[derive(Clone, Debug)]
pub struct LeafEntry {
    pub tree: usize,
    pub m_s: Vec<Vertex>,
    pub i_s: CoordSet,
    /// Candidate witness leaves in the bottom layer, Q_0 side.
    pub leaves_m1: Vec<Vertex>,
}

#[derive(Clone, Debug, Default)]
pub struct LeafBook {
    pub entries: Vec<LeafEntry>,
}

#[derive(Clone, Debug)]
pub struct Witness {
    pub tree: usize,
    pub w_s: Vec<Vertex>,
    pub j_s: CoordSet,
}

/// Allocate pairwise-disjoint coordinate budgets J_S ⊆ I_S greedily in
/// book order, then pick witness leaves supported inside J_S.
pub fn select_witnesses(book: &LeafBook, ps: &ParameterSet) -> Result<Vec<Witness>, MogError> {
    let mut used = CoordSet::empty();
    let mut consumed_by: BTreeMap<u32, usize> = BTreeMap::new();
    let mut out = Vec::new();
    for e in &book.entries {
        let mut j_s = CoordSet::empty();
        for c in e.i_s.iter() {
            if j_s.len() as usize >= ps.witness_support {
                break;
            }
            if !used.contains(c) {
                j_s = j_s.insert(c);
            }
        }
        if (j_s.len() as usize) < ps.witness_support {
            let clash = e
                .i_s
                .iter()
                .find_map(|c| consumed_by.get(&c).copied())
                .unwrap_or(e.tree);
            return Err(MogError::AllocationInfeasible(e.tree, clash));
        }
        for c in j_s.iter() {
            used = used.insert(c);
            consumed_by.insert(c, e.tree);
        }
        let w_s: Vec<Vertex> = e
            .leaves_m1
            .iter()
            .copied()
            .filter(|v| !v.in_q1() && v.support().is_subset(j_s))
            .take(ps.witness_count)
            .collect();
        out.push(Witness { tree: e.tree, w_s, j_s });
    }
    Ok(out)
}

/// Monotone-decreasing growth of two trees through the mixed-percolated
/// Q_0 band between layers m1 and m2, never entering `k`.
pub fn agp_grow(
    t1: &Tree,
    t2: &Tree,
    k: &BTreeSet<Vertex>,
    ps: &ParameterSet,
    eo: &EdgeOracle,
    vo: &VertexOracle,
) -> (BTreeSet<Vertex>, BTreeSet<Vertex>) {
    let grow = |t: &Tree| -> BTreeSet<Vertex> {
        let mut set: BTreeSet<Vertex> = t.members.keys().copied().collect();
        let mut frontier: Vec<Vertex> =
            set.iter().copied().filter(|v| v.layer() <= ps.m2).collect();
        while let Some(w) = frontier.pop() {
            if w.layer() <= ps.m1 {
                continue;
            }
            for c in 2..=ps.d {
                if !w.has(c) {
                    continue;
                }
                let x = w.flip(c);
                if x.in_q1() || k.contains(&x) || set.contains(&x) {
                    continue;
                }
                if !vo.retained(x) {
                    continue;
                }
                if eo.edge_open_tagged(w, x, exposure_tags::MOG).unwrap() {
                    set.insert(x);
                    frontier.push(x);
                }
            }
        }
        set
    };
    (grow(t1), grow(t2))
}
