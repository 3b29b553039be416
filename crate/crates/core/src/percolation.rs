//! Seeded, lazily-consistent randomness for the percolated cube.
//!
//! Every random decision is a counter-based pseudorandom function of
//! `(seed, stream, id)` — never a sequential generator — so the sampled
//! world is independent of the order in which the algorithms expose it.
//! Distinct streams keep the edge sample, the vertex sample, the layer
//! partitions, and algorithmic coin flips from perturbing one another.

use crate::cube::{adjacent, layer_vertices, Vertex};
use crate::params::ParameterSet;
use dashmap::DashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PercolationError {
    #[error("vertices {0:?} and {1:?} are not adjacent")]
    NonAdjacent(Vertex, Vertex),
    #[error("layer index {0} must be even")]
    OddLayerIndex(u32),
    #[error("layer pair ({0}, {1}) out of range for d={2}")]
    LayerOutOfRange(u32, u32, u32),
}

/// Stream tags. Each consumer of randomness owns one.
pub mod streams {
    pub const EDGES: u64 = 0x45;
    pub const VERTICES: u64 = 0x56;
    pub const PARTITION: u64 = 0x50;
    pub const MOG_CHOICE: u64 = 0x4d;
    pub const MC: u64 = 0x43;
    pub const BASELINE: u64 = 0x42;
    pub const TEST: u64 = 0x54;
}

/// Exposure tags: who first queried an edge. Used to audit the
/// fresh-randomness discipline of the stitching subcubes.
pub mod exposure_tags {
    pub const PLAIN: u32 = 0;
    pub const COVER: u32 = 1;
    pub const AUX: u32 = 2;
    pub const MOG: u32 = 3;
    pub const CONNECTOR: u32 = 4;
    pub const BASELINE: u32 = 5;
    pub const FALLBACK: u32 = 6;
    /// Subcube for stitching coordinate k gets tag SUBCUBE_BASE + k.
    pub const SUBCUBE_BASE: u32 = 100;
}

#[inline]
fn mix(mut z: u64) -> u64 {
    // splitmix64 finalizer
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58476d1ce4e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Counter-based PRF: a pure function of (seed, stream, a, b).
#[inline]
pub fn prf(seed: u64, stream: u64, a: u64, b: u64) -> u64 {
    let mut h = mix(seed ^ stream.wrapping_mul(0x9e3779b97f4a7c15));
    h = mix(h ^ a.wrapping_mul(0xd1342543de82ef95));
    mix(h ^ b.wrapping_mul(0x2545f4914f6cdd1d))
}

/// Uniform in [0, 1) with 53-bit resolution.
#[inline]
pub fn prf_unit(seed: u64, stream: u64, a: u64, b: u64) -> f64 {
    (prf(seed, stream, a, b) >> 11) as f64 * (1.0 / 9007199254740992.0)
}

#[derive(Clone, Copy, Debug, PartialEq)]
struct Exposure {
    open: bool,
    tag: u32,
}

/// The percolated edge set of `Q^d`: each edge open independently with
/// probability `p`, decided by the PRF on the canonical edge id
/// `(min endpoint, flipped coordinate)`. The ledger records every
/// exposed edge and asserts a decided edge never flips.
pub struct EdgeOracle {
    pub seed: u64,
    pub p: f64,
    pub d: u32,
    ledger: DashMap<(u64, u32), Exposure>,
}

impl EdgeOracle {
    pub fn new(seed: u64, p: f64, d: u32) -> EdgeOracle {
        assert!((0.0..=1.0).contains(&p));
        EdgeOracle { seed, p, d, ledger: DashMap::new() }
    }

    /// Canonical id of the edge {u, v}.
    pub fn canonical_id(u: Vertex, v: Vertex) -> Result<(u64, u32), PercolationError> {
        if !adjacent(u, v) {
            return Err(PercolationError::NonAdjacent(u, v));
        }
        let coord = (u.0 ^ v.0).trailing_zeros() + 1;
        Ok((u.0.min(v.0), coord))
    }

    #[inline]
    fn sample(&self, id: (u64, u32)) -> bool {
        prf_unit(self.seed, streams::EDGES, id.0, id.1 as u64) < self.p
    }

    pub fn edge_open(&self, u: Vertex, v: Vertex) -> Result<bool, PercolationError> {
        self.edge_open_tagged(u, v, exposure_tags::PLAIN)
    }

    /// Query an edge, recording which stage exposed it first.
    pub fn edge_open_tagged(&self, u: Vertex, v: Vertex, tag: u32) -> Result<bool, PercolationError> {
        let id = EdgeOracle::canonical_id(u, v)?;
        let open = self.sample(id);
        let entry = self.ledger.entry(id).or_insert(Exposure { open, tag });
        assert_eq!(entry.open, open, "exposure ledger flip on edge {id:?}");
        Ok(open)
    }

    /// Tag of the stage that first exposed the edge, if any.
    pub fn exposure_tag(&self, u: Vertex, v: Vertex) -> Result<Option<u32>, PercolationError> {
        let id = EdgeOracle::canonical_id(u, v)?;
        Ok(self.ledger.get(&id).map(|e| e.tag))
    }

    pub fn exposed_count(&self) -> usize {
        self.ledger.len()
    }
}

/// Vertex retention for mixed percolation `Q^d_p(q)`.
pub struct VertexOracle {
    pub seed: u64,
    pub q: f64,
    pub d: u32,
}

impl VertexOracle {
    pub fn new(seed: u64, q: f64, d: u32) -> VertexOracle {
        assert!((0.0..=1.0).contains(&q));
        VertexOracle { seed, q, d }
    }

    pub fn retained(&self, v: Vertex) -> bool {
        prf_unit(self.seed, streams::VERTICES, v.0, 0) < self.q
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub enum Class {
    V1,
    V2,
    V3,
}

/// The (V1, V2, V3) partition of one layer pair. A fresh partition is
/// drawn for every even layer index `i`, keyed into the PRF.
pub struct PartitionOracle {
    pub seed: u64,
    pub i: u32,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl PartitionOracle {
    pub fn new(seed: u64, i: u32, q1: f64, q2: f64, q3: f64) -> PartitionOracle {
        assert!((q1 + q2 + q3 - 1.0).abs() < 1e-9, "class probabilities must sum to 1");
        PartitionOracle { seed, i, q1, q2, q3 }
    }

    pub fn for_params(seed: u64, i: u32, ps: &ParameterSet) -> PartitionOracle {
        PartitionOracle::new(seed, i, ps.q1, ps.q2, ps.q3)
    }

    pub fn partition_of(&self, v: Vertex) -> Class {
        let u = prf_unit(self.seed, streams::PARTITION, self.i as u64, v.0);
        if u < self.q1 {
            Class::V1
        } else if u < self.q1 + self.q2 {
            Class::V2
        } else {
            Class::V3
        }
    }
}

/// Well-spreadness audit of a layer-pair partition: per-class counts in
/// each layer, the set of degree-window violators, and the verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct WellSpreadReport {
    pub i: u32,
    /// counts[layer offset 0|1][class 0|1|2]
    pub counts: [[usize; 3]; 2],
    pub layer_sizes: [usize; 2],
    pub v_bad: Vec<Vertex>,
    pub well_spread: bool,
    pub slack: f64,
    pub vbad_cap_frac: f64,
}

/// Audit layers `i, i+1` against the two spread conditions: class sizes
/// within `(1 ± slack)·q_k·|L_j|`, and cross-layer degrees into each class
/// within `(1 ± slack)·q_k·d/2` for all but a `vbad_cap_frac` fraction of
/// each layer. Purely deterministic given the oracle.
pub fn well_spread_report(
    po: &PartitionOracle,
    i: u32,
    ps: &ParameterSet,
) -> Result<WellSpreadReport, PercolationError> {
    if i % 2 != 0 {
        return Err(PercolationError::OddLayerIndex(i));
    }
    let d = ps.d;
    if i + 1 > d.saturating_sub(1) || i >= d {
        return Err(PercolationError::LayerOutOfRange(i, i + 1, d));
    }
    let slack = ps.well_spread_slack;
    let layers = [layer_vertices(d, i), layer_vertices(d, i + 1)];
    let mut counts = [[0usize; 3]; 2];
    let class_idx = |c: Class| match c {
        Class::V1 => 0,
        Class::V2 => 1,
        Class::V3 => 2,
    };
    for (off, layer) in layers.iter().enumerate() {
        for &v in layer {
            counts[off][class_idx(po.partition_of(v))] += 1;
        }
    }
    let half_d = d as f64 / 2.0;
    let qs = [po.q1, po.q2, po.q3];
    let mut v_bad = Vec::new();
    let mut bad_per_layer = [0usize; 2];
    for (off, layer) in layers.iter().enumerate() {
        for &v in layer {
            // degrees into the opposite layer of the pair, per class
            let mut deg = [0f64; 3];
            for j in 1..=d {
                let w = v.flip(j);
                let wl = w.layer();
                let other = if off == 0 { i + 1 } else { i };
                if wl == other {
                    deg[class_idx(po.partition_of(w))] += 1.0;
                }
            }
            let bad = (0..3).any(|k| {
                let lo = (1.0 - slack) * qs[k] * half_d;
                let hi = (1.0 + slack) * qs[k] * half_d;
                deg[k] < lo - 1e-9 || deg[k] > hi + 1e-9
            });
            if bad {
                v_bad.push(v);
                bad_per_layer[off] += 1;
            }
        }
    }
    let mut well_spread = true;
    for off in 0..2 {
        let size = layers[off].len() as f64;
        for k in 0..3 {
            let c = counts[off][k] as f64;
            if c < (1.0 - slack) * qs[k] * size - 1e-9 || c > (1.0 + slack) * qs[k] * size + 1e-9 {
                well_spread = false;
            }
        }
        if bad_per_layer[off] as f64 > ps.vbad_cap_frac * size + 1e-9 {
            well_spread = false;
        }
    }
    Ok(WellSpreadReport {
        i,
        counts,
        layer_sizes: [layers[0].len(), layers[1].len()],
        v_bad,
        well_spread,
        slack,
        vbad_cap_frac: ps.vbad_cap_frac,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cube::{binom, Vertex};
    use crate::params::{Mode, ParameterSet};

    #[test]
    fn edge_oracle_extremes_and_symmetry() {
        let d = 6;
        let full = EdgeOracle::new(7, 1.0, d);
        let none = EdgeOracle::new(7, 0.0, d);
        let half = EdgeOracle::new(7, 0.5, d);
        for w in 0..(1u64 << d) {
            let u = Vertex(w);
            for j in 1..=d {
                let v = u.flip(j);
                assert!(full.edge_open(u, v).unwrap());
                assert!(!none.edge_open(u, v).unwrap());
                let a = half.edge_open(u, v).unwrap();
                let b = half.edge_open(v, u).unwrap();
                assert_eq!(a, b);
                assert_eq!(a, half.edge_open(u, v).unwrap());
            }
        }
        assert!(half.edge_open(Vertex(0), Vertex(0b11)).is_err());
    }

    #[test]
    fn open_fraction_concentrates() {
        let d = 12u32;
        let total_edges = d as u64 * (1u64 << (d - 1));
        for &p in &[0.2f64, 0.5, 0.8] {
            let eo = EdgeOracle::new(99, p, d);
            let mut open = 0u64;
            for w in 0..(1u64 << d) {
                let u = Vertex(w);
                for j in 1..=d {
                    let v = u.flip(j);
                    if v.0 > u.0 && eo.edge_open(u, v).unwrap() {
                        open += 1;
                    }
                }
            }
            let n = total_edges as f64;
            let sigma = (p * (1.0 - p) * n).sqrt();
            assert!(
                (open as f64 - p * n).abs() <= 4.0 * sigma,
                "p={p}: open {open} vs expected {}",
                p * n
            );
        }
    }

    #[test]
    fn partition_classes_partition_layers() {
        let po = PartitionOracle::new(3, 8, 0.5, 0.25, 0.25);
        let layer = layer_vertices(12, 6);
        let mut counts = [0usize; 3];
        for &v in &layer {
            match po.partition_of(v) {
                Class::V1 => counts[0] += 1,
                Class::V2 => counts[1] += 1,
                Class::V3 => counts[2] += 1,
            }
        }
        assert_eq!(counts.iter().sum::<usize>(), layer.len());
    }

    #[test]
    fn partition_frequencies_converge() {
        // class counts over L_{d/2}, d=16, within 5 sigma of expectation
        let d = 16;
        let q = (0.6, 0.25, 0.15);
        let po = PartitionOracle::new(11, d / 2, q.0, q.1, q.2);
        let layer = layer_vertices(d, d / 2);
        let n = layer.len() as f64;
        assert_eq!(n, binom(d, d / 2));
        let mut counts = [0f64; 3];
        for &v in &layer {
            match po.partition_of(v) {
                Class::V1 => counts[0] += 1.0,
                Class::V2 => counts[1] += 1.0,
                Class::V3 => counts[2] += 1.0,
            }
        }
        for (c, qk) in counts.iter().zip([q.0, q.1, q.2]) {
            let sigma = (qk * (1.0 - qk) * n).sqrt();
            assert!((c - qk * n).abs() <= 5.0 * sigma);
        }
    }

    #[test]
    fn degenerate_partition_always_v1() {
        let po = PartitionOracle::new(5, 4, 1.0, 0.0, 0.0);
        for w in 0..256u64 {
            assert_eq!(po.partition_of(Vertex(w)), Class::V1);
        }
    }

    #[test]
    fn well_spread_degenerate_no_bad_vertices() {
        let ps = ParameterSet::new(12, 4.0, Mode::Desk).unwrap();
        let po = PartitionOracle::new(5, 6, 1.0, 0.0, 0.0);
        let rep = well_spread_report(&po, 6, &ps).unwrap();
        assert!(rep.v_bad.is_empty());
        assert_eq!(rep.counts[0][0], rep.layer_sizes[0]);
        assert_eq!(rep.counts[1][1], 0);
        assert!(rep.well_spread);
    }

    #[test]
    fn well_spread_report_reproducible() {
        let ps = ParameterSet::new(16, 4.0, Mode::Desk).unwrap();
        let po = PartitionOracle::for_params(42, 8, &ps);
        let a = well_spread_report(&po, 8, &ps).unwrap();
        let b = well_spread_report(&po, 8, &ps).unwrap();
        assert_eq!(a, b);
        assert!(well_spread_report(&po, 7, &ps).is_err());
    }

    #[test]
    fn exposure_tags_record_first_toucher() {
        let eo = EdgeOracle::new(1, 0.5, 4);
        let u = Vertex(0);
        let v = Vertex(1);
        assert_eq!(eo.exposure_tag(u, v).unwrap(), None);
        eo.edge_open_tagged(u, v, exposure_tags::COVER).unwrap();
        eo.edge_open_tagged(u, v, exposure_tags::MOG).unwrap();
        assert_eq!(eo.exposure_tag(u, v).unwrap(), Some(exposure_tags::COVER));
    }
}
