//! Every constant the pipeline depends on, with two presets:
//! `Paper` evaluates the asymptotic formulas (meaningful only for very
//! large `d`), `Desk` substitutes small feasible values so the machinery
//! can actually run at d ≤ 16. Overrides never violate the layer
//! ordering constraints.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParamError {
    #[error("d={0} out of range (2..=63)")]
    BadDimension(u32),
    #[error("C must be > 1, got {0}")]
    BadC(f64),
    #[error("probability {0} outside [0,1]")]
    BadProbability(f64),
    #[error("layer ordering violated: m1={0} m2={1} m3={2} m4={3}, d={4}")]
    LayerOrdering(u32, u32, u32, u32, u32),
    #[error("unknown override key: {0}")]
    UnknownKey(String),
    #[error("bad value for {0}: {1}")]
    BadValue(String, String),
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Paper,
    Desk,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Paper => "paper",
            Mode::Desk => "desk",
        }
    }
}

/// Nearest even integer, clamped below at 0.
pub fn round_even(x: f64) -> u32 {
    let e = (x / 2.0).round() * 2.0;
    if e < 0.0 {
        0
    } else {
        e as u32
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParameterSet {
    pub d: u32,
    pub c: f64,
    pub epsilon: f64,
    pub p: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
    pub m1: u32,
    pub m2: u32,
    pub m3: u32,
    pub m4: u32,
    /// Path-end segment length (vertices) in the extension forest.
    pub segment_len: usize,
    /// End-segment length (vertices) for the DFS merge stage.
    pub aux_segment_len: usize,
    /// Cover paths have edge length in [cover_len_lo, cover_len_hi].
    pub cover_len_lo: usize,
    pub cover_len_hi: usize,
    /// Clean-up removes vertices of degree <= deg_floor.
    pub deg_floor: usize,
    pub phase_vertex_cap: usize,
    pub phase_query_cap: usize,
    /// DFS stacks at least this long (vertices) are kept as merge paths.
    pub long_path_floor: usize,
    pub leaf_target: f64,
    pub iset_size: usize,
    pub witness_count: usize,
    pub witness_support: usize,
    pub path_cap: usize,
    pub high_degree_delta: f64,
    pub well_spread_slack: f64,
    pub vbad_cap_frac: f64,
    /// A merge path is discarded when more than this fraction of its
    /// segment vertices have their partner segment off the path.
    pub bad_path_frac: f64,
    /// Number of stitching coordinates |K|.
    pub stitch_k: usize,
    /// Count rule-(d) queries whose far endpoint already left Z.
    pub strict_queries: bool,
    pub mode: Mode,
    /// False when d is too small for any valid even layer schedule;
    /// the merge-or-grow stage is then skipped entirely.
    pub schedule_ok: bool,
}

impl ParameterSet {
    pub fn new(d: u32, c: f64, mode: Mode) -> Result<ParameterSet, ParamError> {
        // the parameter arithmetic itself works for any d; only code that
        // enumerates vertices needs d <= 63 (enforced at the CLI surface)
        if !(2..=1 << 20).contains(&d) {
            return Err(ParamError::BadDimension(d));
        }
        if c <= 1.0 {
            return Err(ParamError::BadC(c));
        }
        let p = (c / d as f64).min(1.0);
        match mode {
            Mode::Paper => {
                let df = d as f64;
                let q2 = c.powf(-1.0 / 80.0);
                let q1 = 1.0 - 2.0 * q2;
                if !(0.0..=1.0).contains(&q1) {
                    return Err(ParamError::BadC(c));
                }
                let m1 = round_even(50.0 * df.ln());
                let m2 = round_even(df / 2.0 - df.powf(0.7));
                let m3 = round_even(df / 2.0 - df.powf(0.6));
                let m4 = round_even(df / 2.0 + df.powf(0.6));
                let ps = ParameterSet {
                    d,
                    c,
                    epsilon: c.powf(-1.0 / 850.0),
                    p,
                    q1,
                    q2,
                    q3: q2,
                    m1,
                    m2,
                    m3,
                    m4,
                    segment_len: (c.powf(1.0 / 13.0) * df) as usize,
                    aux_segment_len: (2.0 * c.powf(1.0 / 8.0)) as usize,
                    cover_len_lo: c.powf(1.0 / 6.0) as usize,
                    cover_len_hi: (2.0 * c.powf(1.0 / 6.0)) as usize,
                    deg_floor: (c.powf(-1.0 / 14.0) * df) as usize,
                    phase_vertex_cap: ((c.recip() + c.powf(-1.0 / 12.0)) * df) as usize,
                    phase_query_cap: (2.0 * c.powf(-13.0 / 12.0) * df * df) as usize,
                    long_path_floor: (c.powf(-1.0 / 12.0) * df) as usize,
                    leaf_target: df.powf(c.powf(0.75)),
                    iset_size: (df / 6.0) as usize,
                    witness_count: df.powi(20).min(usize::MAX as f64) as usize,
                    witness_support: 2 * m1 as usize,
                    path_cap: 6,
                    high_degree_delta: c.powf(-2.0 / 5.0),
                    well_spread_slack: c.recip(),
                    vbad_cap_frac: 1.0 / df,
                    bad_path_frac: c.powf(-1.0 / 700.0),
                    stitch_k: (2 * d / 3) as usize,
                    strict_queries: false,
                    mode,
                    schedule_ok: true,
                }
                .check_layers()?;
                Ok(ps)
            }
            Mode::Desk => {
                // smallest even schedule that keeps m1 <= m2 <= m3 <= d/2 <= m4 <= d-2
                let even_floor = |x: u32| x & !1;
                let half = d / 2;
                let m3 = even_floor(half).max(2);
                let m4 = (m3 + 2).min(even_floor(d.saturating_sub(2)));
                let m2 = m3.saturating_sub(2).max(2);
                let m1 = 2;
                let schedule_ok =
                    m1 <= m2 && m2 <= m3 && 2 * m3 <= d && 2 * m4 >= d && m4 + 2 <= d;
                Ok(ParameterSet {
                    d,
                    c,
                    epsilon: 0.1,
                    p,
                    q1: 0.5,
                    q2: 0.25,
                    q3: 0.25,
                    m1,
                    m2,
                    m3,
                    m4,
                    segment_len: 2,
                    aux_segment_len: 2,
                    cover_len_lo: 4,
                    cover_len_hi: 8,
                    deg_floor: 0,
                    phase_vertex_cap: 4 * d as usize,
                    phase_query_cap: 8 * (d as usize) * (d as usize),
                    long_path_floor: 5,
                    leaf_target: 8.0,
                    iset_size: ((d / 6) as usize).max(2),
                    witness_count: 4,
                    witness_support: 2,
                    path_cap: 6,
                    high_degree_delta: 0.25,
                    // per-class degree windows are harsh at small d; a
                    // wide slack keeps the violator set a small minority
                    well_spread_slack: 2.0,
                    vbad_cap_frac: 0.25,
                    bad_path_frac: 0.5,
                    stitch_k: ((2 * d / 3) as usize).min(d.saturating_sub(4) as usize).max(1),
                    strict_queries: false,
                    mode,
                    schedule_ok,
                })
            }
        }
    }

    /// Derive C from an explicit p.
    pub fn with_p(d: u32, p: f64, mode: Mode) -> Result<ParameterSet, ParamError> {
        if !(0.0..=1.0).contains(&p) {
            return Err(ParamError::BadProbability(p));
        }
        let c = (p * d as f64).max(1.0 + 1e-9);
        let mut ps = ParameterSet::new(d, c, mode)?;
        ps.p = p;
        Ok(ps)
    }

    fn check_layers(self) -> Result<ParameterSet, ParamError> {
        let ok = self.m1 <= self.m2
            && self.m2 <= self.m3
            && 2 * self.m3 <= self.d
            && 2 * self.m4 >= self.d
            && self.m4 <= self.d;
        if ok {
            Ok(self)
        } else {
            Err(ParamError::LayerOrdering(self.m1, self.m2, self.m3, self.m4, self.d))
        }
    }

    /// Apply a `key=value` override. Layer ordering is re-checked.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<(), ParamError> {
        let bad = |v: &str| ParamError::BadValue(key.to_string(), v.to_string());
        macro_rules! set {
            ($field:ident, $ty:ty) => {
                self.$field = value.parse::<$ty>().map_err(|_| bad(value))?
            };
        }
        match key {
            "epsilon" => set!(epsilon, f64),
            "q1" => set!(q1, f64),
            "q2" => set!(q2, f64),
            "q3" => set!(q3, f64),
            "m1" => set!(m1, u32),
            "m2" => set!(m2, u32),
            "m3" => set!(m3, u32),
            "m4" => set!(m4, u32),
            "segment_len" => set!(segment_len, usize),
            "aux_segment_len" => set!(aux_segment_len, usize),
            "cover_len_lo" => set!(cover_len_lo, usize),
            "cover_len_hi" => set!(cover_len_hi, usize),
            "deg_floor" => set!(deg_floor, usize),
            "phase_vertex_cap" => set!(phase_vertex_cap, usize),
            "phase_query_cap" => set!(phase_query_cap, usize),
            "long_path_floor" => set!(long_path_floor, usize),
            "iset_size" => set!(iset_size, usize),
            "witness_count" => set!(witness_count, usize),
            "witness_support" => set!(witness_support, usize),
            "path_cap" => set!(path_cap, usize),
            "high_degree_delta" => set!(high_degree_delta, f64),
            "well_spread_slack" => set!(well_spread_slack, f64),
            "vbad_cap_frac" => set!(vbad_cap_frac, f64),
            "bad_path_frac" => set!(bad_path_frac, f64),
            "stitch_k" => set!(stitch_k, usize),
            "strict_queries" => set!(strict_queries, bool),
            _ => return Err(ParamError::UnknownKey(key.to_string())),
        }
        self.clone().check_layers()?;
        Ok(())
    }

    /// Even layer indices m4, m4-2, ..., down_to (descending).
    pub fn layer_schedule(&self, down_to: u32) -> Vec<u32> {
        if !self.schedule_ok {
            return Vec::new();
        }
        let mut v = Vec::new();
        let mut i = self.m4;
        while i >= down_to {
            v.push(i);
            if i < down_to + 2 {
                break;
            }
            i -= 2;
        }
        v
    }
}
