//! Packing search for partial S_q(2,3,7): blocks are 3-subspaces of F_q^7
//! and no 2-subspace may lie in two of them.
//!
//! Budgets count nodes, one per block placement (or skip decision), so runs
//! are reproducible. Work is split into units whose inputs do not depend on
//! the thread count (restart batches for greedy, root branches for the DFS
//! strategies) and merged by (size, lexicographic block list).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::DesignMultiset;
use crate::error::{Error, Result};
use crate::gf::Field;
use crate::io;
use crate::punctured::{build_equation_system, export_rows, EquationSystem, PuncturedParams};
use crate::structure::{audit_formulas, double_special, in_a, in_b, ForcedBlocks};
use crate::subspace::{gaussian_count, Grassmannian, Subspace};

/// Restarts per greedy batch; a batch is the unit of budget accounting.
pub const GREEDY_BATCH: u64 = 64;
/// Spot-check interval for the coverage invariant in debug builds.
const RECOUNT_INTERVAL: u64 = 1 << 12;
/// Largest number of 3-subspaces of F_q^7 a search table may hold.
pub const TABLE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    /// Randomised fail-first construction with seeded restarts.
    Greedy,
    /// Depth-first search that always covers the most constrained line.
    DlxFirst,
    /// Branch and bound that may also leave that line uncovered.
    DlxBest,
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(Strategy::Greedy),
            "dlx-first" => Ok(Strategy::DlxFirst),
            "dlx-best" => Ok(Strategy::DlxBest),
            other => Err(Error::precondition(format!("unknown strategy {other:?}"))),
        }
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Strategy::Greedy => "greedy",
            Strategy::DlxFirst => "dlx-first",
            Strategy::DlxBest => "dlx-best",
        })
    }
}

/// Which 3-subspaces may be added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pool {
    All,
    /// Blocks in A ∪ B (holding a vector with four leading or trailing zeroes).
    Special,
}

/// Incidences between the lines (2-subspaces) and planes (3-subspaces) of F_q^7.
pub struct Tables {
    pub q: u8,
    pub lines: Vec<Subspace>,
    pub blocks: Vec<Subspace>,
    lines_per_block: usize,
    block_lines: Vec<u32>,
    line_blocks: Vec<Vec<u32>>,
    line_index: std::collections::HashMap<Subspace, u32>,
    block_index: std::collections::HashMap<Subspace, u32>,
}

impl Tables {
    fn build(q: u8) -> Result<Tables> {
        let field = Field::shared(q as u32)?;
        let nb = gaussian_count(7, 3, q as u32);
        if nb > TABLE_LIMIT {
            return Err(Error::capacity(format!("search tables for q={q}"), nb, TABLE_LIMIT));
        }
        let lines: Vec<Subspace> = Grassmannian::new(field, 7, 2)?.collect();
        let blocks: Vec<Subspace> = Grassmannian::new(field, 7, 3)?.collect();
        let line_index: std::collections::HashMap<Subspace, u32> =
            lines.iter().enumerate().map(|(i, l)| (l.clone(), i as u32)).collect();
        let block_index = blocks.iter().enumerate().map(|(i, b)| (b.clone(), i as u32)).collect();
        let lines_per_block = gaussian_count(3, 2, q as u32) as usize;
        let block_lines: Vec<u32> = blocks
            .par_iter()
            .flat_map_iter(|b| b.subspaces(2).into_iter().map(|l| line_index[&l]).collect::<Vec<_>>())
            .collect();
        let mut line_blocks = vec![Vec::new(); lines.len()];
        for (b, ls) in block_lines.chunks(lines_per_block).enumerate() {
            for &l in ls {
                line_blocks[l as usize].push(b as u32);
            }
        }
        Ok(Tables {
            q,
            lines,
            blocks,
            lines_per_block,
            block_lines,
            line_blocks,
            line_index,
            block_index,
        })
    }

    /// Shared tables for `q` (2 or 3), built on first use.
    pub fn shared(q: u8) -> Result<&'static Tables> {
        static Q2: OnceLock<Tables> = OnceLock::new();
        static Q3: OnceLock<Tables> = OnceLock::new();
        let cell = match q {
            2 => &Q2,
            3 => &Q3,
            _ => {
                let nb = gaussian_count(7, 3, q as u32);
                return Err(Error::capacity(format!("search tables for q={q}"), nb, TABLE_LIMIT));
            }
        };
        if let Some(t) = cell.get() {
            return Ok(t);
        }
        let t = Tables::build(q)?;
        Ok(cell.get_or_init(|| t))
    }

    fn lines_of(&self, b: u32) -> &[u32] {
        let s = b as usize * self.lines_per_block;
        &self.block_lines[s..s + self.lines_per_block]
    }

    pub fn block_index(&self, b: &Subspace) -> Option<u32> {
        self.block_index.get(b).copied()
    }

    pub fn line_index(&self, l: &Subspace) -> Option<u32> {
        self.line_index.get(l).copied()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SearchStats {
    pub nodes: u64,
    pub best_size: usize,
    /// Wall-clock time; informational only, not reproducible.
    pub wall_ms: u64,
}

/// A partial packing with the blocks that must never be removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackingState {
    pub q: u8,
    /// All blocks, forced ones included, in canonical order.
    pub blocks: Vec<Subspace>,
    pub forced: Vec<Subspace>,
    pub pool: Pool,
    pub seed: u64,
    /// Stop once this many blocks outside the forced list are held.
    pub target: Option<usize>,
    pub stats: SearchStats,
}

impl PackingState {
    pub fn new(q: u8, seed: u64) -> Self {
        PackingState {
            q,
            blocks: Vec::new(),
            forced: Vec::new(),
            pool: Pool::All,
            seed,
            target: None,
            stats: SearchStats::default(),
        }
    }

    /// A state holding `forced`, which must form a packing.
    pub fn with_forced(q: u8, forced: Vec<Subspace>, seed: u64) -> Result<Self> {
        let mut s = PackingState::new(q, seed);
        let mut blocks = forced.clone();
        blocks.sort();
        blocks.dedup();
        s.blocks = blocks;
        s.forced = forced;
        s.validate()?;
        Ok(s)
    }

    /// The state {Z1, Z2}.
    pub fn z1_z2(q: u8, seed: u64) -> Result<Self> {
        let z = ForcedBlocks::new(q);
        Self::with_forced(q, vec![z.z1, z.z2], seed)
    }

    pub fn design(&self) -> DesignMultiset {
        DesignMultiset::from_blocks(self.q, 7, self.blocks.iter().cloned()).expect("blocks over F_q^7")
    }

    /// Blocks that are not forced.
    pub fn free_count(&self) -> usize {
        self.blocks.iter().filter(|b| !self.forced.contains(b)).count()
    }

    fn z_filter(&self) -> Option<ForcedBlocks> {
        let z = ForcedBlocks::new(self.q);
        (self.forced.contains(&z.z1) && self.forced.contains(&z.z2)).then_some(z)
    }

    /// Checks the packing and filter invariants.
    pub fn validate(&self) -> Result<()> {
        let t = Tables::shared(self.q)?;
        let mut covered = vec![false; t.lines.len()];
        for f in &self.forced {
            if !self.blocks.contains(f) {
                return Err(Error::precondition(format!("forced block {} missing", f.key())));
            }
        }
        let z = self.z_filter();
        for b in &self.blocks {
            let bi = t
                .block_index(b)
                .ok_or_else(|| Error::dimension(format!("{} is not a 3-subspace of F_{}^7", b.key(), self.q)))?;
            for &l in t.lines_of(bi) {
                if std::mem::replace(&mut covered[l as usize], true) {
                    return Err(Error::precondition(format!(
                        "line {} covered twice",
                        t.lines[l as usize].key()
                    )));
                }
            }
            if let Some(z) = &z {
                if !self.forced.contains(b) && double_special(b, z).is_some() {
                    return Err(Error::precondition(format!(
                        "block {} has two special vectors",
                        b.key()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Mutable search state over the shared tables, with undo.
#[derive(Clone)]
struct Work<'a> {
    t: &'a Tables,
    covered: Vec<bool>,
    skipped: Vec<bool>,
    alive: Vec<bool>,
    count: Vec<u32>,
    chosen: Vec<u32>,
    trail: Vec<u32>,
    base: usize,
    nodes: u64,
}

impl<'a> Work<'a> {
    fn new(t: &'a Tables, state: &PackingState) -> Result<Work<'a>> {
        let z = state.z_filter();
        let special = ForcedBlocks::new(state.q);
        let alive: Vec<bool> = t
            .blocks
            .par_iter()
            .map(|b| {
                z.as_ref().is_none_or(|z| double_special(b, z).is_none())
                    && (state.pool == Pool::All || in_a(b, &special) || in_b(b, &special))
            })
            .collect();
        let mut count = vec![0u32; t.lines.len()];
        for (b, _) in alive.iter().enumerate().filter(|(_, &a)| a) {
            for &l in t.lines_of(b as u32) {
                count[l as usize] += 1;
            }
        }
        let mut w = Work {
            t,
            covered: vec![false; t.lines.len()],
            skipped: vec![false; t.lines.len()],
            alive,
            count,
            chosen: Vec::new(),
            trail: Vec::new(),
            base: 0,
            nodes: 0,
        };
        for b in &state.blocks {
            let bi = t
                .block_index(b)
                .ok_or_else(|| Error::dimension("block is not a 3-subspace of F_q^7"))?;
            if t.lines_of(bi).iter().any(|&l| w.covered[l as usize]) {
                return Err(Error::precondition("initial blocks do not form a packing"));
            }
            w.place(bi);
        }
        w.base = w.chosen.len();
        w.trail.clear();
        Ok(w)
    }

    fn kill(&mut self, b: u32) {
        self.alive[b as usize] = false;
        self.trail.push(b);
        for &l in self.t.lines_of(b) {
            self.count[l as usize] -= 1;
        }
    }

    /// Adds `b`; returns the trail mark for [`Self::unplace`].
    fn place(&mut self, b: u32) -> usize {
        let mark = self.trail.len();
        for &l in self.t.lines_of(b) {
            self.covered[l as usize] = true;
            for &other in &self.t.line_blocks[l as usize] {
                if self.alive[other as usize] {
                    self.kill(other);
                }
            }
        }
        // blocks outside the pool are not alive, so initial forced ones are not on the trail
        self.chosen.push(b);
        mark
    }

    fn unplace(&mut self, mark: usize) {
        let b = self.chosen.pop().expect("a placed block");
        while self.trail.len() > mark {
            let x = self.trail.pop().unwrap();
            self.alive[x as usize] = true;
            for &l in self.t.lines_of(x) {
                self.count[l as usize] += 1;
            }
        }
        for &l in self.t.lines_of(b) {
            self.covered[l as usize] = false;
        }
    }

    fn tick(&mut self) {
        self.nodes += 1;
        if cfg!(debug_assertions) && self.nodes.is_multiple_of(RECOUNT_INTERVAL) {
            self.recount();
        }
    }

    /// Full recomputation of the coverage map against the incremental one.
    fn recount(&self) {
        let mut covered = vec![false; self.t.lines.len()];
        for &b in &self.chosen {
            for &l in self.t.lines_of(b) {
                assert!(!covered[l as usize], "line covered twice");
                covered[l as usize] = true;
            }
        }
        assert_eq!(covered, self.covered, "coverage map out of sync");
    }

    /// Uncovered, unskipped line with the fewest live blocks (at least one),
    /// lowest index first.
    fn pick_line(&self) -> Option<usize> {
        let mut best: Option<(u32, usize)> = None;
        for l in 0..self.covered.len() {
            let c = self.count[l];
            if c == 0 || self.covered[l] || self.skipped[l] {
                continue;
            }
            if best.is_none_or(|(bc, _)| c < bc) {
                best = Some((c, l));
                if c == 1 {
                    break;
                }
            }
        }
        best.map(|(_, l)| l)
    }

    fn live_blocks(&self, line: usize) -> Vec<u32> {
        self.t.line_blocks[line]
            .iter()
            .copied()
            .filter(|&b| self.alive[b as usize])
            .collect()
    }

    /// Lines still coverable.
    fn open_lines(&self) -> usize {
        (0..self.covered.len())
            .filter(|&l| self.count[l] > 0 && !self.covered[l] && !self.skipped[l])
            .count()
    }

    fn free(&self) -> usize {
        self.chosen.len() - self.base
    }

    fn snapshot(&self) -> Vec<u32> {
        let mut v = self.chosen.clone();
        v.sort_unstable();
        v
    }
}

/// Larger first, then lexicographically smaller.
fn better(a: &[u32], b: &[u32]) -> bool {
    a.len() > b.len() || (a.len() == b.len() && a < b)
}

#[derive(Clone)]
struct Best {
    blocks: Vec<u32>,
    nodes: u64,
}

fn merge(results: Vec<Best>) -> Best {
    let nodes = results.iter().map(|r| r.nodes).sum();
    let mut best: Option<Vec<u32>> = None;
    for r in results {
        if best.as_ref().is_none_or(|b| better(&r.blocks, b)) {
            best = Some(r.blocks);
        }
    }
    Best {
        blocks: best.unwrap_or_default(),
        nodes,
    }
}

fn greedy_run(mut w: Work<'_>, rng: &mut ChaCha8Rng, limit: Option<usize>) -> Best {
    while limit.is_none_or(|lim| w.free() < lim) {
        let Some(line) = w.pick_line() else { break };
        let live = w.live_blocks(line);
        let b = live[rng.random_range(0..live.len())];
        w.tick();
        w.place(b);
    }
    Best {
        blocks: w.snapshot(),
        nodes: w.nodes,
    }
}

fn greedy(w: &Work<'_>, seed: u64, budget: u64, limit: Option<usize>) -> Best {
    let mut best = Best {
        blocks: w.snapshot(),
        nodes: 0,
    };
    let mut batch = 0u64;
    while best.nodes < budget {
        let runs: Vec<Best> = (0..GREEDY_BATCH)
            .into_par_iter()
            .map(|i| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(batch * GREEDY_BATCH + i);
                greedy_run(w.clone(), &mut rng, limit)
            })
            .collect();
        let nodes = best.nodes;
        let merged = merge(runs);
        if better(&merged.blocks, &best.blocks) {
            best.blocks = merged.blocks;
        }
        best.nodes = nodes + merged.nodes;
        batch += 1;
        if merged.nodes == 0 || limit.is_some_and(|lim| best.blocks.len() - w.base >= lim) {
            break;
        }
    }
    best
}

struct Dfs<'a> {
    w: Work<'a>,
    budget: u64,
    best: Vec<u32>,
    with_skip: bool,
    limit: Option<usize>,
}

impl Dfs<'_> {
    fn run(&mut self) {
        if self.w.nodes >= self.budget || self.limit.is_some_and(|lim| self.best.len() - self.w.base >= lim) {
            return;
        }
        let line = if self.limit.is_some_and(|lim| self.w.free() >= lim) {
            None
        } else {
            self.w.pick_line()
        };
        let Some(line) = line else {
            let snap = self.w.snapshot();
            if better(&snap, &self.best) {
                self.best = snap;
            }
            return;
        };
        if self.with_skip {
            let bound = self.w.chosen.len() + self.w.open_lines() / self.w.t.lines_per_block;
            if bound <= self.best.len() {
                return;
            }
        }
        for b in self.w.live_blocks(line) {
            if self.w.nodes >= self.budget {
                return;
            }
            self.w.tick();
            let mark = self.w.place(b);
            self.run();
            self.w.unplace(mark);
        }
        if self.with_skip && self.w.nodes < self.budget {
            self.w.tick();
            self.w.skipped[line] = true;
            self.run();
            self.w.skipped[line] = false;
        }
    }
}

fn dfs(w: &Work<'_>, budget: u64, with_skip: bool, limit: Option<usize>) -> Best {
    let start = w.snapshot();
    let Some(root) = w.pick_line() else {
        return Best {
            blocks: start,
            nodes: 0,
        };
    };
    // one shard per root branch, plus the skip branch for branch and bound
    let mut branches: Vec<Option<u32>> = w.live_blocks(root).into_iter().map(Some).collect();
    if with_skip {
        branches.push(None);
    }
    let share = (budget / branches.len() as u64).max(1);
    let results: Vec<Best> = branches
        .par_iter()
        .map(|&branch| {
            let mut s = Dfs {
                w: w.clone(),
                budget: share,
                best: start.clone(),
                with_skip,
                limit,
            };
            s.w.tick();
            match branch {
                Some(b) => {
                    s.w.place(b);
                }
                None => s.w.skipped[root] = true,
            }
            s.run();
            let snap = s.w.snapshot();
            if better(&snap, &s.best) {
                s.best = snap;
            }
            Best {
                blocks: s.best,
                nodes: s.w.nodes,
            }
        })
        .collect();
    let mut best = merge(results);
    if better(&start, &best.blocks) {
        best.blocks = start;
    }
    best
}

/// Extends `state` by compatible blocks within `budget` nodes.
pub fn extend_packing(state: &PackingState, budget: u64, strategy: Strategy) -> Result<PackingState> {
    state.validate()?;
    let started = Instant::now();
    let t = Tables::shared(state.q)?;
    let w = Work::new(t, state)?;
    let limit = state.target.map(|target| target.saturating_sub(state.free_count()));
    let best = match strategy {
        Strategy::Greedy => greedy(&w, state.seed, budget, limit),
        Strategy::DlxFirst => dfs(&w, budget, false, limit),
        Strategy::DlxBest => dfs(&w, budget, true, limit),
    };
    let blocks: Vec<Subspace> = best.blocks.iter().map(|&b| t.blocks[b as usize].clone()).collect();
    let out = PackingState {
        blocks,
        stats: SearchStats {
            nodes: state.stats.nodes + best.nodes,
            best_size: best.blocks.len(),
            wall_ms: state.stats.wall_ms + started.elapsed().as_millis() as u64,
        },
        ..state.clone()
    };
    out.validate()
        .map_err(|e| Error::SearchFailed(format!("search produced an invalid state: {e}")))?;
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AbReport {
    pub q: u8,
    /// Blocks in A ∪ B, excluding Z1 and Z2.
    pub size: usize,
    pub target: u128,
    pub reached: bool,
    pub ab_class: u64,
    pub ab_target: u128,
    pub nodes: u64,
}

/// Searches for a large packing of A ∪ B blocks around {Z1, Z2}, stopping at
/// the size such a family has in a full system.
pub fn build_ab_candidates(q: u8, seed: u64, budget: u64, strategy: Strategy) -> Result<(PackingState, AbReport)> {
    let audit = audit_formulas(q as u32);
    let target = 2 * audit.size_a_only + audit.size_ab;
    let mut state = PackingState::z1_z2(q, seed)?;
    state.pool = Pool::Special;
    state.target = Some(target as usize);
    let out = extend_packing(&state, budget, strategy)?;
    let classes = crate::structure::classify_blocks(&out.design())?.counts();
    let size = out.free_count();
    let report = AbReport {
        q,
        size,
        target,
        reached: size as u128 >= target,
        ab_class: classes.ab,
        ab_target: audit.size_ab,
        nodes: out.stats.nodes,
    };
    Ok((out, report))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ZeroColumns {
    pub block: Subspace,
    /// 1-based all-zero columns.
    pub columns: Vec<usize>,
}

/// Blocks with at least four all-zero columns.
pub fn count_zero_column_blocks(d: &DesignMultiset) -> Vec<ZeroColumns> {
    d.blocks()
        .filter_map(|(b, _)| {
            let columns: Vec<usize> = (1..=d.ambient_dim())
                .filter(|&c| b.column(c).iter().all(|&x| x == 0))
                .collect();
            (columns.len() >= 4).then(|| ZeroColumns {
                block: b.clone(),
                columns,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct CheckpointMeta {
    pub q: u8,
    pub seed: u64,
    pub budget_nodes: u64,
    pub nodes: u64,
    pub strategy: Strategy,
    pub pool: Pool,
    pub blocks: usize,
    pub forced: Vec<String>,
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes the design as QSD1 at `path` and the run metadata to `path.json`.
pub fn save_checkpoint(path: impl AsRef<Path>, state: &PackingState, budget: u64, strategy: Strategy) -> Result<()> {
    let path = path.as_ref();
    io::save_design(path, &state.design())?;
    let meta = CheckpointMeta {
        q: state.q,
        seed: state.seed,
        budget_nodes: budget,
        nodes: state.stats.nodes,
        strategy,
        pool: state.pool,
        blocks: state.blocks.len(),
        forced: state.forced.iter().map(|f| f.key()).collect(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| Error::precondition(e.to_string()))?;
    fs::write(sidecar(path), json + "\n")?;
    Ok(())
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(PackingState, CheckpointMeta)> {
    let path = path.as_ref();
    let d = io::load_design(path)?;
    let meta: CheckpointMeta =
        serde_json::from_str(&fs::read_to_string(sidecar(path))?).map_err(|e| Error::parse(e.line(), e.to_string()))?;
    let field = Field::shared(meta.q as u32)?;
    let forced = meta
        .forced
        .iter()
        .map(|k| Subspace::parse_key(field, 7, k))
        .collect::<Result<Vec<_>>>()?;
    let state = PackingState {
        q: meta.q,
        blocks: d.blocks().map(|(b, _)| b.clone()).collect(),
        forced,
        pool: meta.pool,
        seed: meta.seed,
        target: None,
        stats: SearchStats {
            nodes: meta.nodes,
            best_size: d.distinct_count(),
            wall_ms: 0,
        },
    };
    state.validate()?;
    Ok((state, meta))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct P6Report {
    pub equations: usize,
    pub variables: usize,
    pub variables_by_dim: BTreeMap<usize, usize>,
    pub nodes: u64,
    /// Most equations simultaneously satisfied with all their variables fixed.
    pub max_satisfied: usize,
    pub max_assigned: usize,
    pub solved: bool,
    /// True when the whole tree was explored within the budget.
    pub exhausted: bool,
}

struct P6Search<'a> {
    sys: &'a EquationSystem,
    var_eqs: Vec<Vec<(usize, u64)>>,
    eq_terms: Vec<Vec<(usize, u64)>>,
    residual: Vec<i64>,
    open: Vec<usize>,
    value: Vec<Option<u64>>,
    satisfied: usize,
    assigned: usize,
    nodes: u64,
    budget: u64,
    best_satisfied: usize,
    best_assigned: usize,
    best: Vec<Option<u64>>,
    solved: bool,
}

impl P6Search<'_> {
    fn eq_done(&self, e: usize) -> bool {
        self.open[e] == 0 && self.residual[e] == 0
    }

    fn set(&mut self, v: usize, x: u64, trail: &mut Vec<usize>) -> bool {
        self.value[v] = Some(x);
        self.assigned += 1;
        trail.push(v);
        let mut ok = true;
        for i in 0..self.var_eqs[v].len() {
            let (e, c) = self.var_eqs[v][i];
            let before = self.eq_done(e);
            self.residual[e] -= (c * x) as i64;
            self.open[e] -= 1;
            let after = self.eq_done(e);
            self.satisfied = self.satisfied + after as usize - before as usize;
            if self.residual[e] < 0 || (self.open[e] == 0 && self.residual[e] != 0) {
                ok = false;
            }
        }
        ok
    }

    fn unset(&mut self, trail: &mut Vec<usize>, mark: usize) {
        while trail.len() > mark {
            let v = trail.pop().unwrap();
            let x = self.value[v].take().unwrap();
            self.assigned -= 1;
            for i in 0..self.var_eqs[v].len() {
                let (e, c) = self.var_eqs[v][i];
                let before = self.eq_done(e);
                self.residual[e] += (c * x) as i64;
                self.open[e] += 1;
                let after = self.eq_done(e);
                self.satisfied = self.satisfied + after as usize - before as usize;
            }
        }
    }

    /// Unit propagation: equations with residual 0 zero their open variables,
    /// equations with one open variable fix it.
    fn propagate(&mut self, from: usize, trail: &mut Vec<usize>) -> bool {
        let mut i = from;
        while i < trail.len() {
            let v = trail[i];
            i += 1;
            for k in 0..self.var_eqs[v].len() {
                let e = self.var_eqs[v][k].0;
                if self.open[e] == 0 {
                    continue;
                }
                let r = self.residual[e];
                let open: Vec<(usize, u64)> = self.eq_terms[e]
                    .iter()
                    .copied()
                    .filter(|&(u, _)| self.value[u].is_none())
                    .collect();
                if r == 0 {
                    for (u, _) in open {
                        if !self.set(u, 0, trail) {
                            return false;
                        }
                    }
                } else if open.len() == 1 {
                    let (u, c) = open[0];
                    if r % c as i64 != 0 || !self.set(u, (r / c as i64) as u64, trail) {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn record(&mut self) {
        if self.satisfied > self.best_satisfied
            || (self.satisfied == self.best_satisfied && self.assigned > self.best_assigned)
        {
            self.best_satisfied = self.satisfied;
            self.best_assigned = self.assigned;
            self.best = self.value.clone();
        }
    }

    fn upper(&self, v: usize) -> u64 {
        self.var_eqs[v]
            .iter()
            .map(|&(e, c)| (self.residual[e].max(0) as u64) / c)
            .min()
            .unwrap_or(0)
    }

    /// Returns false when the budget ran out.
    fn run(&mut self, trail: &mut Vec<usize>) -> bool {
        self.record();
        if self.satisfied == self.sys.equations.len() {
            self.solved = true;
            return true;
        }
        let Some(e) = (0..self.open.len())
            .filter(|&e| self.open[e] > 0)
            .min_by_key(|&e| (self.open[e], e))
        else {
            return true;
        };
        let v = self.eq_terms[e]
            .iter()
            .find(|&&(u, _)| self.value[u].is_none())
            .map(|&(u, _)| u)
            .expect("open equation has an open variable");
        for x in (0..=self.upper(v)).rev() {
            if self.nodes >= self.budget {
                return false;
            }
            self.nodes += 1;
            let mark = trail.len();
            if self.set(v, x, trail) && self.propagate(mark, trail) {
                if !self.run(trail) {
                    self.unset(trail, mark);
                    return false;
                }
                if self.solved {
                    return true;
                }
            } else {
                self.record();
            }
            self.unset(trail, mark);
        }
        true
    }
}

/// Depth-first search over block multiplicities of a 1-punctured system
/// S_2(2,3,7;6). Returns the assignment that satisfied the most equations,
/// as a multiset over F_2^6, and the equation system for external solvers.
pub fn search_punctured_6(q: u32, budget: u64) -> Result<(DesignMultiset, P6Report, String)> {
    if q != 2 {
        return Err(Error::precondition("the punctured-6 search is implemented for q = 2"));
    }
    let params = PuncturedParams::new(q, 2, 7, 1)?;
    let sys = build_equation_system(&params)?;
    let nv = sys.variables.len();
    let mut var_eqs = vec![Vec::new(); nv];
    let eq_terms: Vec<Vec<(usize, u64)>> = sys
        .equations
        .iter()
        .map(|e| e.terms.iter().copied().filter(|&(_, c)| c > 0).collect())
        .collect();
    for (e, terms) in eq_terms.iter().enumerate() {
        for &(v, c) in terms {
            var_eqs[v].push((e, c));
        }
    }
    let mut s = P6Search {
        sys: &sys,
        residual: sys.equations.iter().map(|e| e.rhs as i64).collect(),
        open: eq_terms.iter().map(|t| t.len()).collect(),
        var_eqs,
        eq_terms,
        value: vec![None; nv],
        satisfied: 0,
        assigned: 0,
        nodes: 0,
        budget,
        best_satisfied: 0,
        best_assigned: 0,
        best: vec![None; nv],
        solved: false,
    };
    // variables in no equation are fixed at zero
    let mut trail = Vec::new();
    for v in 0..nv {
        if s.var_eqs[v].is_empty() {
            s.set(v, 0, &mut trail);
        }
    }
    s.satisfied = (0..s.open.len()).filter(|&e| s.eq_done(e)).count();
    let finished = s.run(&mut trail);
    let mut best = DesignMultiset::new(q as u8, params.m)?;
    for (v, x) in s.best.iter().enumerate() {
        if let Some(x) = x.filter(|&x| x > 0) {
            best.insert(sys.variables[v].clone(), x)?;
        }
    }
    let mut by_dim = BTreeMap::new();
    for y in &sys.variables {
        *by_dim.entry(y.dim()).or_insert(0) += 1;
    }
    let report = P6Report {
        equations: sys.equations.len(),
        variables: nv,
        variables_by_dim: by_dim,
        nodes: s.nodes,
        max_satisfied: s.best_satisfied,
        max_assigned: s.best_assigned,
        solved: s.solved,
        exhausted: finished && !s.solved,
    };
    Ok((best, report, export_rows(&sys)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{verify_steiner, VerifyMode};
    use crate::structure::no_double_special;

    #[test]
    fn tables_q2() {
        let t = Tables::shared(2).unwrap();
        assert_eq!(t.lines.len(), 2667);
        assert_eq!(t.blocks.len(), 11811);
        assert!(t.line_blocks.iter().all(|b| b.len() == 31));
        assert!(Tables::shared(4).is_err());
    }

    #[test]
    fn strategy_parsing() {
        for s in ["greedy", "dlx-first", "dlx-best"] {
            assert_eq!(s.parse::<Strategy>().unwrap().to_string(), s);
        }
        assert!("bfs".parse::<Strategy>().is_err());
    }

    #[test]
    fn z1_z2_state_and_invalid_states() {
        let s = PackingState::z1_z2(2, 0).unwrap();
        assert_eq!(s.blocks.len(), 2);
        let z = ForcedBlocks::new(2);
        let clash = Subspace::span_str(Field::shared(2).unwrap(), &["0000100", "0000010", "1000000"]).unwrap();
        assert!(PackingState::with_forced(2, vec![z.z1.clone(), clash], 0).is_err());
    }

    fn check(out: &PackingState) {
        let d = out.design();
        assert!(verify_steiner(&d, 2, 3, VerifyMode::Packing).unwrap().passes());
        for f in &out.forced {
            assert!(out.blocks.contains(f));
        }
        // zero-column shape only holds once Z1 and Z2 are forced
        if out.z_filter().is_none() {
            return;
        }
        assert!(no_double_special(&d).unwrap().is_empty());
        let z = ForcedBlocks::new(2);
        for zc in count_zero_column_blocks(&d) {
            if zc.block != z.z1 && zc.block != z.z2 {
                assert_eq!(zc.columns.iter().filter(|&&c| c <= 3).count(), 2);
                assert_eq!(zc.columns.iter().filter(|&&c| c >= 5).count(), 2);
            }
        }
    }

    #[test]
    fn strategies_extend_and_keep_invariants() {
        let s = PackingState::z1_z2(2, 7).unwrap();
        for strategy in [Strategy::Greedy, Strategy::DlxFirst, Strategy::DlxBest] {
            let out = extend_packing(&s, 3000, strategy).unwrap();
            assert!(out.blocks.len() > 2, "{strategy}");
            check(&out);
            let again = extend_packing(&s, 3000, strategy).unwrap();
            assert_eq!(again.blocks, out.blocks);
        }
    }

    #[test]
    fn greedy_from_empty_is_maximal() {
        let out = extend_packing(&PackingState::new(2, 1), 1, Strategy::Greedy).unwrap();
        check(&out);
        assert!(out.blocks.len() >= 150);
        // a finished greedy run leaves no block that could be added
        let t = Tables::shared(2).unwrap();
        let w = Work::new(t, &out).unwrap();
        assert!(w.pick_line().is_none());
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let s = PackingState::z1_z2(2, 11).unwrap();
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| extend_packing(&s, 2000, Strategy::Greedy).unwrap())
        };
        assert_eq!(run(1).blocks, run(4).blocks);
    }

    #[test]
    fn ab_candidates_respect_target() {
        let (out, report) = build_ab_candidates(2, 3, 5000, Strategy::Greedy).unwrap();
        assert_eq!(report.target, 231);
        assert_eq!(report.ab_target, 49);
        assert!(report.size as u128 <= report.target);
        assert!(report.ab_class <= 49);
        check(&out);
        let z = ForcedBlocks::new(2);
        assert!(out
            .blocks
            .iter()
            .all(|b| b == &z.z1 || b == &z.z2 || in_a(b, &z) || in_b(b, &z)));
    }

    #[test]
    fn zero_column_census() {
        let z = ForcedBlocks::new(2);
        let d = DesignMultiset::from_blocks(2, 7, [z.z1.clone(), z.z2.clone(), z.z3.clone()]).unwrap();
        let found = count_zero_column_blocks(&d);
        let cols: Vec<Vec<usize>> = found.iter().map(|z| z.columns.clone()).collect();
        assert_eq!(found.len(), 3);
        assert!(cols.contains(&vec![1, 2, 3, 4]));
        assert!(cols.contains(&vec![4, 5, 6, 7]));
        assert!(cols.contains(&vec![1, 2, 5, 6]));
        let generic = Subspace::span_str(Field::shared(2).unwrap(), &["1000110", "0100011", "0010101"]).unwrap();
        assert!(count_zero_column_blocks(&DesignMultiset::from_blocks(2, 7, [generic]).unwrap()).is_empty());
    }

    #[test]
    fn checkpoint_round_trip() {
        let s = extend_packing(&PackingState::z1_z2(2, 5).unwrap(), 500, Strategy::Greedy).unwrap();
        let dir = std::env::temp_dir().join(format!("qsd-ckpt-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.qsd");
        save_checkpoint(&path, &s, 500, Strategy::Greedy).unwrap();
        let (back, meta) = load_checkpoint(&path).unwrap();
        assert_eq!(back.blocks, s.blocks);
        assert_eq!(back.forced, s.forced);
        assert_eq!(meta.nodes, s.stats.nodes);
        fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn punctured_6_search_reports() {
        let (best, report, rows) = search_punctured_6(2, 2000).unwrap();
        assert_eq!(report.equations, 714);
        assert_eq!(report.variables, 2046);
        assert_eq!(report.variables_by_dim.get(&2), Some(&651));
        assert_eq!(report.variables_by_dim.get(&3), Some(&1395));
        assert!(report.nodes <= 2000);
        assert!(report.max_satisfied > 0);
        assert!(!report.solved || report.max_satisfied == 714);
        assert_eq!(best.ambient_dim(), 6);
        assert!(rows.starts_with("QSE1 q=2 n=7 p=1 t=2\n"));
        assert!(search_punctured_6(3, 10).is_err());
    }
}
