//! Experiment runner: pipeline execution, parameter grids, cycle-file
//! verification, and the statistics export shared by every command.

use cubecycle::cube::Vertex;
use cubecycle::mog::{self, LeafBook, LeafEntry};
use cubecycle::oracle::{self, CycleReport};
use cubecycle::params::{Mode, ParameterSet};
use cubecycle::percolation::{exposure_tags, EdgeOracle};
use rayon::prelude::*;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt::Write as _;
use std::str::FromStr;

pub const CSV_HEADER: &str =
    "d,p,C,seed,mode,cycle_length,fraction,path_count_after_mog,int_fraction,merges,discards,runtime_ms,valid";

/// Dimension cap for anything that enumerates vertices.
pub const MAX_RUN_D: u32 = 24;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("parse error at line {0}: {1}")]
    Parse(usize, String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// One fully-resolved run request.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub d: u32,
    /// Exactly one of these is given; the other is derived.
    pub c: Option<f64>,
    pub p: Option<f64>,
    pub seed: u64,
    pub mode: Mode,
    pub overrides: Vec<(String, String)>,
    pub grid_d: Vec<u32>,
    pub grid_p: Vec<f64>,
    pub grid_seeds: Vec<u64>,
    pub out: Option<String>,
    pub workers: Option<usize>,
    pub trials: u64,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            d: 12,
            c: None,
            p: None,
            seed: 0,
            mode: Mode::Desk,
            overrides: Vec::new(),
            grid_d: Vec::new(),
            grid_p: Vec::new(),
            grid_seeds: Vec::new(),
            out: None,
            workers: None,
            trials: 100_000,
        }
    }
}

impl RunConfig {
    /// Resolve (d, p, C): p defaults to C/d and must stay in [0, 1].
    pub fn resolve(&self, d: u32) -> Result<(f64, f64), CliError> {
        if d < 2 || d > MAX_RUN_D {
            return Err(config_err(format!("d must lie in [2, {MAX_RUN_D}]")));
        }
        match (self.c, self.p) {
            (Some(_), Some(_)) => Err(config_err("give exactly one of C and p")),
            (Some(c), None) => {
                let p = c / d as f64;
                if !(0.0..=1.0).contains(&p) {
                    return Err(config_err(format!("C/d = {p} is not a probability")));
                }
                Ok((p, c))
            }
            (None, Some(p)) => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(config_err(format!("p = {p} is not a probability")));
                }
                Ok((p, p * d as f64))
            }
            (None, None) => Ok((0.5, 0.5 * d as f64)),
        }
    }

    pub fn params(&self, d: u32, p: f64) -> Result<ParameterSet, CliError> {
        let mut ps = ParameterSet::with_p(d, p, self.mode)
            .map_err(|e| config_err(e.to_string()))?;
        for (k, v) in &self.overrides {
            ps.apply_override(k, v).map_err(|e| config_err(e.to_string()))?;
        }
        Ok(ps)
    }
}

/// Parse the line-oriented "key = value" config format with an
/// optional [grid] section of comma-separated lists.
pub fn parse_config(text: &str, cfg: &mut RunConfig) -> Result<(), CliError> {
    let mut in_grid = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if line == "[grid]" {
            in_grid = true;
            continue;
        }
        if line.starts_with('[') {
            return Err(CliError::Parse(ln + 1, format!("unknown section {line}")));
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Parse(ln + 1, "expected key = value".into()))?;
        let (key, value) = (key.trim(), value.trim());
        let bad = |why: &str| CliError::Parse(ln + 1, format!("{key}: {why}"));
        fn list<T: FromStr>(v: &str) -> Option<Vec<T>> {
            v.split(',').map(|x| x.trim().parse().ok()).collect()
        }
        if in_grid {
            match key {
                "d" => cfg.grid_d = list(value).ok_or_else(|| bad("bad dimension list"))?,
                "p" => cfg.grid_p = list(value).ok_or_else(|| bad("bad probability list"))?,
                "seeds" => cfg.grid_seeds = list(value).ok_or_else(|| bad("bad seed list"))?,
                _ => return Err(bad("unknown grid key")),
            }
            continue;
        }
        match key {
            "d" => cfg.d = value.parse().map_err(|_| bad("bad integer"))?,
            "C" => cfg.c = Some(value.parse().map_err(|_| bad("bad number"))?),
            "p" => cfg.p = Some(value.parse().map_err(|_| bad("bad number"))?),
            "seed" => cfg.seed = value.parse().map_err(|_| bad("bad integer"))?,
            "mode" => {
                cfg.mode = match value {
                    "paper" => Mode::Paper,
                    "desk" => Mode::Desk,
                    _ => return Err(bad("expected paper or desk")),
                }
            }
            "out" => cfg.out = Some(value.to_string()),
            "workers" => cfg.workers = Some(value.parse().map_err(|_| bad("bad integer"))?),
            "trials" => cfg.trials = value.parse().map_err(|_| bad("bad integer"))?,
            _ => cfg.overrides.push((key.to_string(), value.to_string())),
        }
    }
    Ok(())
}

/// One CSV row; `valid` is always the validator's verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRow {
    pub d: u32,
    pub p: f64,
    pub c: f64,
    pub seed: u64,
    pub mode: Mode,
    pub cycle_length: usize,
    pub fraction: f64,
    pub path_count_after_mog: usize,
    pub int_fraction: f64,
    pub merges: usize,
    pub discards: usize,
    /// Always written as 0 so output stays byte-identical across
    /// hosts; the measured time goes to stderr instead.
    pub runtime_ms: u64,
    pub valid: bool,
}

impl ResultRow {
    pub fn csv(&self) -> String {
        let mode = match self.mode {
            Mode::Paper => "paper",
            Mode::Desk => "desk",
        };
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.d,
            self.p,
            self.c,
            self.seed,
            mode,
            self.cycle_length,
            self.fraction,
            self.path_count_after_mog,
            self.int_fraction,
            self.merges,
            self.discards,
            self.runtime_ms,
            self.valid
        )
    }
}

/// Close the longest surviving path into a cycle when the full
/// stitching machinery comes up short: first a detour through outside
/// vertices, then the longest chord sub-cycle.
fn fallback_cycle(pef: &cubecycle::mog::Pef, eo: &EdgeOracle) -> Option<Vec<Vertex>> {
    let longest = pef
        .alive_paths()
        .into_iter()
        .max_by_key(|&p| pef.paths[p].verts.len())?;
    let path = &pef.paths[longest].verts;
    let open =
        |u: Vertex, v: Vertex| eo.edge_open_tagged(u, v, exposure_tags::FALLBACK).unwrap();
    let on_path: BTreeSet<Vertex> = path.iter().copied().collect();
    let (head, tail) = (path[0], *path.last().unwrap());
    // breadth-first detour from tail to head outside the path
    let mut parent: BTreeMap<Vertex, Vertex> = BTreeMap::new();
    let mut queue = VecDeque::from([tail]);
    let mut hook = None;
    'bfs: while let Some(v) = queue.pop_front() {
        for c in 1..=eo.d {
            let w = v.flip(c);
            if !open(v, w) {
                continue;
            }
            if w == head && (v != tail || path.len() >= 4) {
                hook = Some(v);
                break 'bfs;
            }
            if !on_path.contains(&w) && !parent.contains_key(&w) {
                parent.insert(w, v);
                queue.push_back(w);
            }
        }
    }
    if let Some(mut v) = hook {
        let mut cycle = path.clone();
        let mut detour = Vec::new();
        while v != tail {
            detour.push(v);
            v = parent[&v];
        }
        cycle.extend(detour.into_iter().rev());
        if cycle.len() >= 4 {
            return Some(cycle);
        }
    }
    // chord: longest stretch whose cut points share an open edge
    let pos: BTreeMap<Vertex, usize> =
        path.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut cut: Option<(usize, usize)> = None;
    for (j, &v) in path.iter().enumerate() {
        for c in 1..=eo.d {
            let w = v.flip(c);
            if let Some(&i) = pos.get(&w) {
                if j > i + 2 && open(v, w) && cut.map_or(true, |(a, b)| j - i > b - a) {
                    cut = Some((i, j));
                }
            }
        }
    }
    cut.map(|(i, j)| path[i..=j].to_vec())
}

/// Outcome of one pipeline run: the row plus the cycle for export.
pub struct PipelineOutcome {
    pub row: ResultRow,
    pub cycle: Vec<Vertex>,
}

/// The full construction: layer covers and merges inside the layer
/// process, witness selection, stitching; falls back to closing the
/// longest surviving path when any stage comes up short.
pub fn run_pipeline(cfg: &RunConfig, d: u32, p: f64, seed: u64) -> Result<PipelineOutcome, CliError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(config_err(format!("p = {p} is not a probability")));
    }
    let c = p * d as f64;
    let ps = cfg.params(d, p)?;
    if !ps.schedule_ok {
        return Err(config_err(format!("no feasible layer schedule at d = {d}")));
    }
    let eo = EdgeOracle::new(seed, p, d);
    let (pef, stats) =
        mog::run_mog(&ps, &eo, ps.m1).map_err(|e| config_err(e.to_string()))?;
    let cycle = stitched_or_fallback(&pef, &ps, &eo);
    let (cycle_length, valid) = match &cycle {
        Some(cy) => {
            let rep = oracle::validate_cycle(cy, &eo);
            (rep.length, rep.valid)
        }
        None => (0, true),
    };
    let row = ResultRow {
        d,
        p,
        c,
        seed,
        mode: cfg.mode,
        cycle_length,
        fraction: cycle_length as f64 / (1u64 << d) as f64,
        path_count_after_mog: pef.alive_paths().len(),
        int_fraction: pef.int_total() as f64 / (1u64 << d) as f64,
        merges: stats.merges,
        discards: stats.discards,
        runtime_ms: 0,
        valid,
    };
    Ok(PipelineOutcome { row, cycle: cycle.unwrap_or_default() })
}

fn stitched_or_fallback(
    pef: &cubecycle::mog::Pef,
    ps: &ParameterSet,
    eo: &EdgeOracle,
) -> Option<Vec<Vertex>> {
    let book = leaf_book(pef, ps);
    if let Some(book) = book {
        if let Ok(ws) = mog::select_witnesses(&book, ps) {
            if let Ok(cy) = cubecycle::stitch::stitch(pef, &ws, ps, eo) {
                return Some(cy);
            }
        }
    }
    fallback_cycle(pef, eo)
}

/// Collect leaf profiles at the bottom target layer for every alive
/// tree; None when any tree has nothing to offer there.
fn leaf_book(pef: &cubecycle::mog::Pef, ps: &ParameterSet) -> Option<LeafBook> {
    let mut entries = Vec::new();
    for t in pef.alive_trees() {
        let tree = &pef.trees[t].tree;
        let (m_s, i_s, _) = mog::leaf_profile(tree, ps.m2, ps).ok()?;
        let leaves_m1: Vec<Vertex> =
            tree.at_layer(ps.m1).into_iter().filter(|v| !v.in_q1()).collect();
        entries.push(LeafEntry { tree: t, m_s, i_s, leaves_m1 });
    }
    Some(LeafBook { entries })
}

/// One row per (d, p, seed) cell in lexicographic order, plus a
/// median-fraction summary per p when the grid varies p.
pub fn run_grid(cfg: &RunConfig) -> Result<String, CliError> {
    let ds = if cfg.grid_d.is_empty() { vec![cfg.d] } else { cfg.grid_d.clone() };
    let ps_list = if cfg.grid_p.is_empty() {
        vec![cfg.resolve(*ds.iter().min().unwrap())?.0]
    } else {
        cfg.grid_p.clone()
    };
    let seeds = if cfg.grid_seeds.is_empty() { vec![cfg.seed] } else { cfg.grid_seeds.clone() };
    let mut cells: Vec<(u32, f64, u64)> = Vec::new();
    for &d in &ds {
        for &p in &ps_list {
            for &s in &seeds {
                cells.push((d, p, s));
            }
        }
    }
    cells.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for &(d, p, _) in &cells {
        // fail fast on impossible cells before spawning work
        if !(0.0..=1.0).contains(&p) {
            return Err(config_err(format!("grid p = {p} is not a probability")));
        }
        cfg.resolve(d).ok();
        if d < 2 || d > MAX_RUN_D {
            return Err(config_err(format!("grid d = {d} out of range")));
        }
    }
    let rows: Result<Vec<ResultRow>, CliError> = cells
        .par_iter()
        .map(|&(d, p, s)| run_pipeline(cfg, d, p, s).map(|o| o.row))
        .collect();
    let rows = rows?;
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    let mut uniq_p: Vec<f64> = ps_list.clone();
    uniq_p.sort_by(|a, b| a.partial_cmp(b).unwrap());
    uniq_p.dedup();
    if uniq_p.len() > 1 {
        for &p in &uniq_p {
            let mut fr: Vec<f64> =
                rows.iter().filter(|r| r.p == p).map(|r| r.fraction).collect();
            fr.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let med = if fr.is_empty() {
                0.0
            } else if fr.len() % 2 == 1 {
                fr[fr.len() / 2]
            } else {
                (fr[fr.len() / 2 - 1] + fr[fr.len() / 2]) / 2.0
            };
            let _ = writeln!(out, "# median_fraction p={p} {med}");
        }
    }
    Ok(out)
}

/// Serialize a cycle: first line the count, then one vertex per line
/// as a binary string, first character = coordinate 1.
pub fn write_cycle_file(cycle: &[Vertex], d: u32) -> String {
    let mut out = format!("{}\n", cycle.len());
    for v in cycle {
        out.push_str(&v.to_bit_string(d));
        out.push('\n');
    }
    out
}

pub fn parse_cycle_file(text: &str, d: u32) -> Result<Vec<Vertex>, CliError> {
    let mut lines = text.lines();
    let count: usize = lines
        .next()
        .ok_or_else(|| CliError::Parse(1, "empty file".into()))?
        .trim()
        .parse()
        .map_err(|_| CliError::Parse(1, "expected a vertex count".into()))?;
    let mut cycle = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.len() != d as usize {
            return Err(CliError::Parse(i + 2, format!("expected {d} bits")));
        }
        let v = Vertex::from_bit_string(line)
            .ok_or_else(|| CliError::Parse(i + 2, "not a binary string".into()))?;
        cycle.push(v);
    }
    if cycle.len() != count {
        return Err(CliError::Parse(
            cycle.len() + 1,
            format!("count says {count}, found {}", cycle.len()),
        ));
    }
    Ok(cycle)
}

/// Re-derive the percolation sample and judge the cycle cold.
pub fn verify(text: &str, seed: u64, d: u32, p: f64) -> Result<CycleReport, CliError> {
    let cycle = parse_cycle_file(text, d)?;
    let eo = EdgeOracle::new(seed, p, d);
    Ok(oracle::validate_cycle(&cycle, &eo))
}
