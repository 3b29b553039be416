//! Hypercube geometry: vertices as bit words, layers, supports, subcubes,
//! shadow bounds, and the explicit disjoint-subcube constructions used by
//! the stitching stage.
//!
//! Coordinates are 1-indexed; coordinate `j` is bit `j-1` of the word.
//! Coordinate 1 splits the cube into `Q_0` (bit clear) and `Q_1` (bit set).

use std::collections::BTreeSet;
use thiserror::Error;

/// Exact enumeration guard: operations that walk whole layers or subcubes
/// refuse dimensions above this.
pub const ENUM_LIMIT: u32 = 24;
/// Subcube intersection in exact mode enumerates one subcube's vertex set.
pub const SUBCUBE_ENUM_LIMIT: u32 = 20;
/// Vertices are stored in a single 64-bit word.
pub const MAX_DIM: u32 = 63;

#[derive(Debug, Error, PartialEq)]
pub enum CubeError {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(u32, u32),
    #[error("dimension {0} exceeds exact-enumeration limit {1}")]
    TooLarge(u32, u32),
    #[error("size {size} out of range for layer {i} of Q^{d}")]
    SizeOutOfRange { size: f64, i: u32, d: u32 },
    #[error("family not contained in a single layer")]
    MixedLayers,
    #[error("support precondition violated: {0}")]
    SupportPrecondition(&'static str),
    #[error("coordinate 1 may not appear in K")]
    CoordOneInK,
    #[error("paper-mode stitch requires |K| = 2d/3 with 3 | d")]
    BadStitchSize,
    #[error("bottom support not contained in top support")]
    InvalidSubcube,
}

/// A vertex of `Q^d`: the low `d` bits of the word.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct Vertex(pub u64);

impl Vertex {
    pub fn layer(self) -> u32 {
        self.0.count_ones()
    }

    pub fn valid(self, d: u32) -> bool {
        d <= MAX_DIM && (d == MAX_DIM || self.0 >> d == 0)
    }

    /// Flip 1-indexed coordinate `j`.
    pub fn flip(self, j: u32) -> Vertex {
        Vertex(self.0 ^ (1u64 << (j - 1)))
    }

    pub fn has(self, j: u32) -> bool {
        self.0 >> (j - 1) & 1 == 1
    }

    pub fn support(self) -> CoordSet {
        CoordSet(self.0)
    }

    pub fn in_q1(self) -> bool {
        self.0 & 1 == 1
    }

    /// Binary string with coordinate 1 leftmost.
    pub fn to_bit_string(self, d: u32) -> String {
        (1..=d).map(|j| if self.has(j) { '1' } else { '0' }).collect()
    }

    pub fn from_bit_string(s: &str) -> Option<Vertex> {
        let mut w = 0u64;
        let mut n = 0u32;
        for c in s.chars() {
            match c {
                '0' => {}
                '1' => w |= 1u64 << n,
                _ => return None,
            }
            n += 1;
            if n > MAX_DIM {
                return None;
            }
        }
        if n == 0 {
            None
        } else {
            Some(Vertex(w))
        }
    }
}

/// A set of 1-indexed coordinates, stored as a bit mask.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Default)]
pub struct CoordSet(pub u64);

impl CoordSet {
    pub fn empty() -> CoordSet {
        CoordSet(0)
    }

    pub fn full(d: u32) -> CoordSet {
        if d == 64 {
            CoordSet(!0)
        } else {
            CoordSet((1u64 << d) - 1)
        }
    }

    pub fn from_coords<I: IntoIterator<Item = u32>>(coords: I) -> CoordSet {
        let mut m = 0u64;
        for j in coords {
            m |= 1u64 << (j - 1);
        }
        CoordSet(m)
    }

    pub fn contains(self, j: u32) -> bool {
        self.0 >> (j - 1) & 1 == 1
    }

    pub fn insert(self, j: u32) -> CoordSet {
        CoordSet(self.0 | 1u64 << (j - 1))
    }

    pub fn remove(self, j: u32) -> CoordSet {
        CoordSet(self.0 & !(1u64 << (j - 1)))
    }

    pub fn union(self, o: CoordSet) -> CoordSet {
        CoordSet(self.0 | o.0)
    }

    pub fn intersection(self, o: CoordSet) -> CoordSet {
        CoordSet(self.0 & o.0)
    }

    pub fn difference(self, o: CoordSet) -> CoordSet {
        CoordSet(self.0 & !o.0)
    }

    pub fn is_subset(self, o: CoordSet) -> bool {
        self.0 & !o.0 == 0
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn len(self) -> u32 {
        self.0.count_ones()
    }

    /// Coordinates in increasing order.
    pub fn iter(self) -> impl Iterator<Item = u32> {
        let mut m = self.0;
        std::iter::from_fn(move || {
            if m == 0 {
                None
            } else {
                let j = m.trailing_zeros() + 1;
                m &= m - 1;
                Some(j)
            }
        })
    }
}

/// Support of a vertex: the coordinates equal to 1.
pub fn support(v: Vertex) -> CoordSet {
    v.support()
}

/// Total support of a family: union of supports.
pub fn total_support<'a, I: IntoIterator<Item = &'a Vertex>>(vs: I) -> CoordSet {
    vs.into_iter().fold(CoordSet::empty(), |a, v| a.union(v.support()))
}

/// Joint support of a family: intersection of supports.
pub fn joint_support<'a, I: IntoIterator<Item = &'a Vertex>>(vs: I) -> Option<CoordSet> {
    let mut it = vs.into_iter();
    let first = it.next()?.support();
    Some(it.fold(first, |a, v| a.intersection(v.support())))
}

/// The `d` neighbors of `v`, in increasing coordinate order.
pub fn neighbors(v: Vertex, d: u32) -> Vec<Vertex> {
    (1..=d).map(|j| v.flip(j)).collect()
}

pub fn adjacent(u: Vertex, v: Vertex) -> bool {
    (u.0 ^ v.0).count_ones() == 1
}

/// All vertices of layer `i` in increasing integer encoding (Gosper's hack).
pub fn layer_vertices(d: u32, i: u32) -> Vec<Vertex> {
    assert!(i <= d && d <= MAX_DIM);
    if i == 0 {
        return vec![Vertex(0)];
    }
    let mut out = Vec::new();
    let limit = if d == 63 { !0u64 >> 1 } else { (1u64 << d) - 1 };
    let mut v: u64 = (1u64 << i) - 1;
    while v <= limit {
        out.push(Vertex(v));
        // next word with the same popcount
        let c = v & v.wrapping_neg();
        let r = v + c;
        if c == 0 || r > limit {
            break;
        }
        v = (((v ^ r) >> 2) / c) | r;
    }
    out
}

/// The subcube `Q[bottom; top]`: vertices `w` with
/// `support(bottom) ⊆ support(w) ⊆ support(top)`.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct SubcubeSpec {
    pub bottom: Vertex,
    pub top: Vertex,
}

impl SubcubeSpec {
    pub fn new(bottom: Vertex, top: Vertex) -> Result<SubcubeSpec, CubeError> {
        if !bottom.support().is_subset(top.support()) {
            return Err(CubeError::InvalidSubcube);
        }
        Ok(SubcubeSpec { bottom, top })
    }

    pub fn dimension(self) -> u32 {
        self.top.layer() - self.bottom.layer()
    }

    pub fn contains(self, v: Vertex) -> bool {
        self.bottom.support().is_subset(v.support()) && v.support().is_subset(self.top.support())
    }

    /// Free coordinates (set in top, clear in bottom).
    pub fn free_coords(self) -> CoordSet {
        self.top.support().difference(self.bottom.support())
    }

    /// Every vertex of the subcube, in increasing encoding.
    pub fn vertices(self) -> Vec<Vertex> {
        let free: Vec<u32> = self.free_coords().iter().collect();
        let n = free.len();
        assert!(n <= SUBCUBE_ENUM_LIMIT as usize);
        let mut out = Vec::with_capacity(1 << n);
        for mask in 0u64..(1u64 << n) {
            let mut v = self.bottom;
            for (b, &j) in free.iter().enumerate() {
                if mask >> b & 1 == 1 {
                    v = v.flip(j);
                }
            }
            out.push(v);
        }
        out.sort();
        out
    }
}

/// Sufficient condition for vertex-disjointness of two subcubes: some
/// coordinate is forced on in one and forced off in the other.
pub fn subcubes_disjoint(a: SubcubeSpec, b: SubcubeSpec) -> bool {
    !a.bottom.support().difference(b.top.support()).is_empty()
        || !b.bottom.support().difference(a.top.support()).is_empty()
}

/// Exact disjointness by enumeration; testing companion to
/// [`subcubes_disjoint`]. The intersection of two subcubes is itself a
/// subcube (bottom = union of bottoms, top = intersection of tops), so no
/// enumeration is actually required — we check whether that subcube is
/// nonempty, which agrees with brute force (asserted in tests).
pub fn subcubes_disjoint_exact(a: SubcubeSpec, b: SubcubeSpec, d: u32) -> Result<bool, CubeError> {
    if d > SUBCUBE_ENUM_LIMIT {
        return Err(CubeError::TooLarge(d, SUBCUBE_ENUM_LIMIT));
    }
    let bottom = a.bottom.support().union(b.bottom.support());
    let top = a.top.support().intersection(b.top.support());
    Ok(!bottom.is_subset(top))
}

/// Generalized binomial coefficient `binom(x, i)` for real `x ≥ i-1`:
/// the product of `(x-j)/(i-j)` over `j < i`.
pub fn gen_binom(x: f64, i: u32) -> f64 {
    let mut prod = 1.0;
    for j in 0..i {
        prod *= (x - j as f64) / (i - j) as f64;
    }
    prod
}

/// Exact integer binomial as f64.
pub fn binom(n: u32, k: u32) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: f64 = 1.0;
    for j in 0..k {
        acc = acc * (n - j) as f64 / (j + 1) as f64;
    }
    acc.round()
}

/// Solve `binom(x, i) = size` for real `x ≥ i-1` by bisection.
/// `gen_binom(·, i)` is continuous, zero at `x = i-1`, and strictly
/// increasing beyond, so the root is unique.
pub fn solve_binom_x(size: f64, i: u32, d: u32) -> Result<f64, CubeError> {
    if i < 1 || i > d || size < 1.0 || size > binom(d, i) {
        return Err(CubeError::SizeOutOfRange { size, i, d });
    }
    let mut lo = (i - 1) as f64;
    let mut hi = d as f64;
    // size ≤ binom(d, i) guarantees the root lies in [i-1, d]
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gen_binom(mid, i) < size {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let x = 0.5 * (lo + hi);
    debug_assert!((gen_binom(x, i) - size).abs() <= 1e-6 * size);
    Ok(x)
}

/// Lower bound on the size of the shadow of a layer-`i` family of the
/// given size: `binom(x, i-1)` where `binom(x, i) = size`.
pub fn kk_shadow_bound(size: u64, i: u32, d: u32) -> Result<f64, CubeError> {
    let x = solve_binom_x(size as f64, i, d)?;
    Ok(gen_binom(x, i - 1))
}

/// Exact lower shadow: all neighbors of `A ⊆ L_i` in `L_{i-1}`.
pub fn lower_shadow(a: &BTreeSet<Vertex>, i: u32, d: u32) -> Result<BTreeSet<Vertex>, CubeError> {
    if d > ENUM_LIMIT {
        return Err(CubeError::TooLarge(d, ENUM_LIMIT));
    }
    let mut out = BTreeSet::new();
    for v in a {
        if v.layer() != i {
            return Err(CubeError::MixedLayers);
        }
        for j in v.support().iter() {
            out.insert(v.flip(j));
        }
    }
    Ok(out)
}

/// Check `i/(3α) · binom(x, i) ≤ binom(x, i-1)` for generalized binomials.
pub fn binom_ratio_check(x: f64, i: u32, alpha: u32) -> bool {
    let lhs = i as f64 / (3.0 * alpha as f64) * gen_binom(x, i);
    lhs <= gen_binom(x, i - 1) + 1e-12 * gen_binom(x, i - 1).abs()
}

/// The bridge vertex `u(z,s)` with `support(u) = support(s) \ (I \ support(z))`.
pub fn bridge_vertex(z: Vertex, s: Vertex, i_set: CoordSet) -> Result<Vertex, CubeError> {
    if !z.support().is_subset(i_set) {
        return Err(CubeError::SupportPrecondition("support(z) ⊄ I"));
    }
    if !i_set.is_subset(s.support()) {
        return Err(CubeError::SupportPrecondition("I ⊄ support(s)"));
    }
    Ok(Vertex(s.support().difference(i_set.difference(z.support())).0))
}

/// Bridge table for all (z, s) pairs. Asserts the two disjointness
/// families: the top subcubes `Q[u(z,s); s]` are pairwise disjoint per
/// fixed `z`, and the bottom subcubes `Q[z; u(z,s)]` are disjoint across
/// distinct `z`, both via the sufficient condition.
pub fn bridge_family(
    s_fam: &[Vertex],
    z_fam: &[Vertex],
    i_set: CoordSet,
) -> Result<Vec<((Vertex, Vertex), Vertex)>, CubeError> {
    if s_fam.is_empty() || z_fam.is_empty() {
        return Err(CubeError::SupportPrecondition("empty family"));
    }
    if !i_set.is_subset(joint_support(s_fam).unwrap()) {
        return Err(CubeError::SupportPrecondition("I ⊄ joint support of S"));
    }
    if !total_support(z_fam).is_subset(i_set) {
        return Err(CubeError::SupportPrecondition("total support of Z ⊄ I"));
    }
    if s_fam.iter().any(|s| s.layer() != s_fam[0].layer()) {
        return Err(CubeError::MixedLayers);
    }
    if z_fam.iter().any(|z| z.layer() != z_fam[0].layer()) {
        return Err(CubeError::MixedLayers);
    }
    let mut table = Vec::new();
    for &z in z_fam {
        for &s in s_fam {
            let u = bridge_vertex(z, s, i_set)?;
            table.push(((z, s), u));
        }
    }
    // top subcubes pairwise disjoint per fixed z
    for &z in z_fam {
        let tops: Vec<SubcubeSpec> = s_fam
            .iter()
            .map(|&s| SubcubeSpec::new(bridge_vertex(z, s, i_set).unwrap(), s).unwrap())
            .collect();
        for (a, ca) in tops.iter().enumerate() {
            for cb in tops.iter().skip(a + 1) {
                assert!(subcubes_disjoint(*ca, *cb), "top subcubes overlap");
            }
        }
    }
    // bottom subcubes disjoint across distinct z
    for (za, &z1) in z_fam.iter().enumerate() {
        for &z2 in z_fam.iter().skip(za + 1) {
            for &s1 in s_fam {
                for &s2 in s_fam {
                    let c1 = SubcubeSpec::new(z1, bridge_vertex(z1, s1, i_set).unwrap()).unwrap();
                    let c2 = SubcubeSpec::new(z2, bridge_vertex(z2, s2, i_set).unwrap()).unwrap();
                    assert!(subcubes_disjoint(c1, c2), "bottom subcubes overlap");
                }
            }
        }
    }
    Ok(table)
}

/// Stitching subcubes: for each `k ∈ K` the subcube `Q[u_k; v_k]` with
/// `support(u_k) = {1,k}` and `support(v_k) = [d] \ (K \ {k})`. All lie in
/// `Q_1`, within layers `[1, d-|K|+1]`, and are pairwise disjoint.
pub fn stitch_cubes(k_set: CoordSet, d: u32, paper_mode: bool) -> Result<Vec<(u32, SubcubeSpec)>, CubeError> {
    if k_set.contains(1) {
        return Err(CubeError::CoordOneInK);
    }
    if !k_set.is_subset(CoordSet::full(d)) {
        return Err(CubeError::SupportPrecondition("K ⊄ [2,d]"));
    }
    if paper_mode && (d % 3 != 0 || k_set.len() != 2 * d / 3) {
        return Err(CubeError::BadStitchSize);
    }
    let full = CoordSet::full(d);
    let mut out = Vec::new();
    for k in k_set.iter() {
        let u = Vertex(CoordSet::from_coords([1, k]).0);
        let v = Vertex(full.difference(k_set.remove(k)).0);
        let spec = SubcubeSpec::new(u, v)?;
        assert_eq!(spec.dimension(), v.layer() - 2);
        assert!(u.layer() >= 1 && v.layer() <= d - k_set.len() + 1);
        out.push((k, spec));
    }
    for (a, &(_, ca)) in out.iter().enumerate() {
        for &(_, cb) in out.iter().skip(a + 1) {
            assert!(subcubes_disjoint(ca, cb), "stitch subcubes overlap");
        }
    }
    Ok(out)
}
