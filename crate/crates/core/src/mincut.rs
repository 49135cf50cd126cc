//! Exact minimization of the discrete `F_{r,g}` Dirichlet problem by one
//! s–t min cut, with a brute-force oracle on small instances.
//!
//! Scaling. With `S = capacity_scale`, every oscillating window cell costs
//! `S` and a cell `x ∈ E ∩ Ω` costs `q_x = round(2 r S g(x))`. The scaled
//! energy `S·#osc + Σ q_x` equals `F_{r,g̃} · 2rS / h^n` for the rounded
//! forcing `g̃ = q / 2rS`, which is the problem actually solved and reported.
//!
//! Labels. A free cell is in `E` iff it ends on the source side of the cut.
//! For a window cell `x` with stencil `S_x`,
//! `osc_x(E) = [S_x ∩ E ≠ ∅] + [S_x ∖ E ≠ ∅] - 1`. The first cover term is an
//! aux node `β` fed by `y → β` (∞) and paying `β → t`; the second is an aux
//! node `α` paid by `s → α` and draining `α → y` (∞). Cells fixed by the
//! boundary data resolve either term to a constant.
//!
//! Stencil rows are shared. Along axis 0 the free cells are covered by a
//! sparse table of OR nodes over power-of-two blocks, so each window cell
//! links to two blocks per stencil row instead of to every cell of its ball.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::energy::{oscillation_count, EnergyBreakdown};
use crate::error::{invalid, Error, Result};
use crate::grid::{BinaryMask, Bits, ExtensionRule, GridGeometry, Index, ScalarField, Window, MAX_DIM};
use crate::maxflow::{CutSide, GraphBuilder};
use crate::morphology::{dilate, erode};
use crate::stencil::{ball_stencil, BallStencil};

pub const DEFAULT_CAPACITY_SCALE: i64 = 1 << 20;
pub const BRUTE_FORCE_CAP: usize = 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Canonical {
    #[default]
    Minimal,
    Maximal,
    Arbitrary,
}

impl FromStr for Canonical {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "minimal" => Ok(Canonical::Minimal),
            "maximal" => Ok(Canonical::Maximal),
            "arbitrary" => Ok(Canonical::Arbitrary),
            _ => Err(invalid("canonical", format!("`{s}` is not minimal|maximal|arbitrary"))),
        }
    }
}

impl fmt::Display for Canonical {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Canonical::Minimal => "minimal",
            Canonical::Maximal => "maximal",
            Canonical::Arbitrary => "arbitrary",
        })
    }
}

/// Energy window, free region, boundary data and forcing.
#[derive(Clone, Debug)]
pub struct DirichletSpec {
    window: Window,
    free: Bits,
    boundary: BinaryMask,
    g: ScalarField,
    r: f64,
    capacity_scale: i64,
}

impl DirichletSpec {
    /// Checks that the free region lies in `Ω ⊖ B_r`.
    pub fn new(window: Window, free: Bits, boundary: BinaryMask, g: ScalarField, r: f64) -> Result<Self> {
        let spec = Self::new_relaxed(window, free, boundary, g, r)?;
        let omega = BinaryMask::from_bits(
            spec.geometry(),
            spec.window.cells().clone(),
            ExtensionRule::ConstantOutside,
        )?;
        let core = erode(&omega, r)?;
        let outside = spec.free.iter_ones().filter(|&l| !core.get(l)).count();
        if outside > 0 {
            return Err(Error::InvalidSpec(format!(
                "{outside} free cells lie within distance r of the window boundary"
            )));
        }
        Ok(spec)
    }

    /// Like [`DirichletSpec::new`] but only requires the free region to lie in the window.
    pub fn new_relaxed(window: Window, free: Bits, boundary: BinaryMask, g: ScalarField, r: f64) -> Result<Self> {
        let geom = boundary.geometry();
        if window.geometry() != geom || g.geometry() != geom {
            return Err(Error::IncompatibleGeometry);
        }
        if free.len() != geom.len() {
            return Err(Error::InvalidSpec("free region has the wrong cell count".into()));
        }
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("r", format!("{r} must be positive")));
        }
        if free.iter_ones().any(|l| !window.contains(l)) {
            return Err(Error::InvalidSpec("free region leaves the energy window".into()));
        }
        Ok(DirichletSpec {
            window,
            free,
            boundary,
            g,
            r,
            capacity_scale: DEFAULT_CAPACITY_SCALE,
        })
    }

    pub fn with_capacity_scale(mut self, scale: i64) -> Result<Self> {
        if scale <= 0 {
            return Err(invalid("capacity_scale", "must be a positive integer"));
        }
        self.capacity_scale = scale;
        Ok(self)
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.boundary.geometry()
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn free(&self) -> &Bits {
        &self.free
    }

    pub fn boundary(&self) -> &BinaryMask {
        &self.boundary
    }

    pub fn forcing(&self) -> &ScalarField {
        &self.g
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn capacity_scale(&self) -> i64 {
        self.capacity_scale
    }

    pub fn free_count(&self) -> usize {
        self.free.count_ones()
    }

    /// `q_x = round(2 r S g(x))` on every stored cell.
    pub fn scaled_forcing(&self) -> Result<Vec<i64>> {
        let f = 2.0 * self.r * self.capacity_scale as f64;
        self.g
            .values()
            .iter()
            .map(|&v| {
                let q = (v * f).round();
                if q.abs() < (1u64 << 52) as f64 {
                    Ok(q as i64)
                } else {
                    Err(Error::CapacityOverflow)
                }
            })
            .collect()
    }

    /// The admissible mask agreeing with the boundary data and with `labels`
    /// on the free cells (in increasing linear order).
    pub fn compose(&self, labels: impl Fn(usize) -> bool) -> Result<BinaryMask> {
        let bits: Bits = (0..self.geometry().len())
            .map(|l| if self.free[l] { labels(l) } else { self.boundary.get(l) })
            .collect();
        BinaryMask::from_bits(self.geometry(), bits, self.boundary.extension().clone())
    }

    /// Scaled energy `S·#osc + Σ_{E∩Ω} q` of an arbitrary mask.
    pub fn scaled_energy(&self, mask: &BinaryMask) -> Result<i128> {
        let q = self.scaled_forcing()?;
        let count = oscillation_count(mask, &self.window, self.r)?;
        let bulk: i128 = self.window.iter().filter(|&l| mask.get(l)).map(|l| q[l] as i128).sum();
        Ok(self.capacity_scale as i128 * count as i128 + bulk)
    }

    /// Energy breakdown of `mask` under the rounded forcing.
    pub fn breakdown(&self, mask: &BinaryMask) -> Result<EnergyBreakdown> {
        let q = self.scaled_forcing()?;
        let geom = self.geometry();
        let count = oscillation_count(mask, &self.window, self.r)?;
        let bulk: i128 = self.window.iter().filter(|&l| mask.get(l)).map(|l| q[l] as i128).sum();
        let unit = geom.cell_volume() / (2.0 * self.r * self.capacity_scale as f64);
        Ok(EnergyBreakdown::new(
            (self.capacity_scale as i128 * count as i128) as f64 * unit,
            bulk as f64 * unit,
            self.r,
            geom.spacing(),
            self.window.kind().clone(),
            count,
        ))
    }

    /// Converts a scaled energy back to length units.
    pub fn unscale(&self, scaled: i128) -> f64 {
        scaled as f64 * self.geometry().cell_volume() / (2.0 * self.r * self.capacity_scale as f64)
    }
}

const UNSET: u32 = u32::MAX;
const EMPTY: u32 = u32::MAX - 1;
const INF_MARKER: i64 = i64::MAX;
const SOURCE: usize = 0;
const SINK: usize = 1;

/// Encoded flow network plus the bookkeeping to decode cuts.
pub struct CutGraph {
    builder: GraphBuilder,
    node_of: Vec<u32>,
    offset: i128,
    infinity: i64,
}

impl CutGraph {
    pub fn node_count(&self) -> usize {
        self.builder.node_count()
    }

    pub fn arc_count(&self) -> usize {
        self.builder.edge_count()
    }

    /// Constant added to the cut value to obtain the scaled energy.
    pub fn offset(&self) -> i128 {
        self.offset
    }

    pub fn infinity(&self) -> i64 {
        self.infinity
    }

    pub fn arcs(&self) -> &[(u32, u32, i64)] {
        self.builder.edges()
    }

    /// Graph node of stored cell `lin`, if it is free.
    pub fn node_of(&self, lin: usize) -> Option<usize> {
        let n = self.node_of[lin];
        (n != UNSET).then_some(n as usize)
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    // OR over "some cell is in E"
    Beta = 0,
    // OR over "some cell is outside E"
    Alpha = 1,
}

struct Blocks<'a> {
    geom: &'a GridGeometry,
    lo: Index,
    size: [usize; MAX_DIM],
    memo: [Vec<Vec<u32>>; 2],
    node_of: &'a [u32],
}

impl<'a> Blocks<'a> {
    fn new(geom: &'a GridGeometry, reach: i64, levels: usize, node_of: &'a [u32]) -> Self {
        let mut lo = [0i64; MAX_DIM];
        let mut size = [1usize; MAX_DIM];
        for i in 0..geom.dim() {
            lo[i] = -reach;
            size[i] = geom.shape()[i] + 2 * reach as usize;
        }
        let total: usize = size.iter().product();
        let memo = [
            (0..levels).map(|_| vec![UNSET; total]).collect(),
            (0..levels).map(|_| vec![UNSET; total]).collect(),
        ];
        Blocks {
            geom,
            lo,
            size,
            memo,
            node_of,
        }
    }

    fn slot(&self, p: &Index) -> usize {
        let a = (p[0] - self.lo[0]) as usize;
        let b = (p[1] - self.lo[1]) as usize;
        let c = (p[2] - self.lo[2]) as usize;
        (c * self.size[1] + b) * self.size[0] + a
    }

    fn leaf(&self, p: &Index) -> u32 {
        match self.geom.locate(*p) {
            Some(l) if self.node_of[l] != UNSET => self.node_of[l],
            _ => EMPTY,
        }
    }

    /// Node representing the OR over the free cells of `[p0, p0 + 2^level)`.
    fn block(&mut self, b: &mut GraphBuilder, kind: Kind, level: usize, p: Index) -> u32 {
        if level == 0 {
            return self.leaf(&p);
        }
        let slot = self.slot(&p);
        let memo = self.memo[kind as usize][level][slot];
        if memo != UNSET {
            return memo;
        }
        let left = self.block(b, kind, level - 1, p);
        let mut q = p;
        q[0] += 1 << (level - 1);
        let right = self.block(b, kind, level - 1, q);
        let node = match (left, right) {
            (EMPTY, x) | (x, EMPTY) => x,
            (x, y) if x == y => x,
            (x, y) => {
                let n = b.add_node();
                for c in [x, y] {
                    match kind {
                        Kind::Beta => b.add_edge(c as usize, n, INF_MARKER),
                        Kind::Alpha => b.add_edge(n, c as usize, INF_MARKER),
                    }
                }
                n as u32
            }
        };
        self.memo[kind as usize][level][slot] = node;
        node
    }
}

fn floor_log2(v: i64) -> usize {
    63 - (v as u64).leading_zeros() as usize
}

/// Per-window-cell stencil summary: whether the ball meets a fixed cell in
/// `E`, a fixed cell outside `E`, and any free cell.
struct Coverage {
    has_in: Bits,
    has_out: Bits,
    has_free: Bits,
}

fn coverage(spec: &DirichletSpec) -> Result<Coverage> {
    let geom = spec.geometry();
    let ext = spec.boundary.extension().clone();
    let fixed_in: Bits = (0..geom.len())
        .map(|l| !spec.free[l] && spec.boundary.get(l))
        .collect();
    let fixed_out: Bits = (0..geom.len())
        .map(|l| !spec.free[l] && !spec.boundary.get(l))
        .collect();
    let fi = BinaryMask::from_bits(geom, fixed_in, ext.clone())?;
    let fo = BinaryMask::from_bits(geom, fixed_out, ext.complement())?;
    let fr = BinaryMask::from_bits(geom, spec.free.clone(), ExtensionRule::ConstantOutside)?;
    Ok(Coverage {
        has_in: dilate(&fi, spec.r)?.bits().clone(),
        has_out: dilate(&fo, spec.r)?.bits().clone(),
        has_free: dilate(&fr, spec.r)?.bits().clone(),
    })
}

/// Encodes the scaled energy of `spec` as a cut problem.
pub fn build_graph(spec: &DirichletSpec) -> Result<CutGraph> {
    let geom = spec.geometry();
    let st = ball_stencil(spec.r, geom.spacing(), geom.dim())?;
    let q = spec.scaled_forcing()?;
    let w = spec.capacity_scale;
    let cov = coverage(spec)?;

    let mut node_of = vec![UNSET; geom.len()];
    let mut next = 2u32;
    for l in spec.free.iter_ones() {
        node_of[l] = next;
        next += 1;
    }
    let mut b = GraphBuilder::new(next as usize);
    let mut offset: i128 = 0;

    for l in spec.window.iter() {
        let qx = q[l];
        if spec.free[l] {
            let n = node_of[l] as usize;
            if qx > 0 {
                b.add_edge(n, SINK, qx);
            } else if qx < 0 {
                b.add_edge(SOURCE, n, -qx);
                offset += qx as i128;
            }
        } else if spec.boundary.get(l) {
            offset += qx as i128;
        }
    }

    let reach = st.reach();
    let levels = floor_log2(2 * reach + 1) + 1;
    let mut blocks = Blocks::new(geom, reach, levels, &node_of);
    let mut children: Vec<u32> = Vec::new();
    for l in spec.window.iter() {
        let (hi, ho) = (cov.has_in[l], cov.has_out[l]);
        if hi && ho {
            offset += w as i128;
            continue;
        }
        if !cov.has_free[l] {
            // the whole ball is fixed to one color
            continue;
        }
        let x = geom.index(l);
        let kinds: &[Kind] = match (hi, ho) {
            (true, false) => &[Kind::Alpha],
            (false, true) => &[Kind::Beta],
            _ => {
                offset -= w as i128;
                &[Kind::Beta, Kind::Alpha]
            }
        };
        for &kind in kinds {
            children.clear();
            row_children(&st, &x, kind, &mut blocks, &mut b, &mut children);
            children.sort_unstable();
            children.dedup();
            match (kind, children.as_slice()) {
                (_, []) => {}
                (Kind::Beta, [c]) => b.add_edge(*c as usize, SINK, w),
                (Kind::Alpha, [c]) => b.add_edge(SOURCE, *c as usize, w),
                (Kind::Beta, cs) => {
                    let n = b.add_node();
                    for &c in cs {
                        b.add_edge(c as usize, n, INF_MARKER);
                    }
                    b.add_edge(n, SINK, w);
                }
                (Kind::Alpha, cs) => {
                    let n = b.add_node();
                    b.add_edge(SOURCE, n, w);
                    for &c in cs {
                        b.add_edge(n, c as usize, INF_MARKER);
                    }
                }
            }
        }
    }
    drop(blocks);

    let finite: i128 = b
        .edges()
        .iter()
        .filter(|e| e.2 != INF_MARKER)
        .map(|e| e.2 as i128)
        .sum();
    let infinity = finite + 1;
    if 2 * infinity + 2 >= i64::MAX as i128 {
        return Err(Error::CapacityOverflow);
    }
    b.replace_capacity(INF_MARKER, infinity as i64);
    Ok(CutGraph {
        builder: b,
        node_of,
        offset,
        infinity: infinity as i64,
    })
}

fn row_children(
    st: &BallStencil,
    x: &Index,
    kind: Kind,
    blocks: &mut Blocks,
    b: &mut GraphBuilder,
    out: &mut Vec<u32>,
) {
    for row in st.rows() {
        let len = 2 * row.half + 1;
        let k = floor_log2(len);
        let span = 1i64 << k;
        let a = [x[0] - row.half, x[1] + row.k1, x[2] + row.k2];
        let mut c = a;
        c[0] = x[0] + row.half - span + 1;
        for p in [a, c] {
            let n = blocks.block(b, kind, k, p);
            if n != EMPTY {
                out.push(n);
            }
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MinimizerResult {
    #[serde(skip)]
    pub mask: BinaryMask,
    pub energy: EnergyBreakdown,
    /// `S·#osc + Σ q` of the returned mask.
    pub scaled_energy: i128,
    pub flow_value: i64,
    pub offset: i128,
    pub canonical: Canonical,
    pub nodes: usize,
    pub arcs: usize,
    pub capacity_scale: i64,
}

/// Exact global minimizer. `Minimal` returns the intersection of all
/// minimizers (the smallest source side of a minimum cut), `Maximal`
/// their union; `Arbitrary` currently coincides with `Minimal`.
pub fn solve(spec: &DirichletSpec, canonical: Canonical) -> Result<MinimizerResult> {
    let graph = build_graph(spec)?;
    let nodes = graph.node_count();
    let arcs = graph.arc_count();
    let CutGraph {
        builder,
        node_of,
        offset,
        ..
    } = graph;
    let side = match canonical {
        Canonical::Minimal | Canonical::Arbitrary => CutSide::Smallest,
        Canonical::Maximal => CutSide::Largest,
    };
    let (flow, in_e) = builder.min_cut(SOURCE, SINK, side);
    let mask = spec.compose(|l| in_e[node_of[l] as usize])?;
    let scaled = spec.scaled_energy(&mask)?;
    let cut = flow as i128 + offset;
    if scaled != cut {
        return Err(Error::InvalidSpec(format!(
            "internal: decoded energy {scaled} differs from cut value {cut}"
        )));
    }
    Ok(MinimizerResult {
        energy: spec.breakdown(&mask)?,
        mask,
        scaled_energy: scaled,
        flow_value: flow,
        offset,
        canonical,
        nodes,
        arcs,
        capacity_scale: spec.capacity_scale,
    })
}

/// Exhaustive enumeration over the free cells.
#[derive(Clone, Debug)]
pub struct BruteForce {
    pub min_scaled: i128,
    pub min_energy: f64,
    /// Free cells in increasing linear order; bit `i` of a labeling refers to `free[i]`.
    pub free: Vec<usize>,
    /// Every minimizing labeling.
    pub minimizers: Vec<u32>,
}

impl BruteForce {
    pub fn mask(&self, spec: &DirichletSpec, labeling: u32) -> Result<BinaryMask> {
        let pos: std::collections::HashMap<usize, usize> =
            self.free.iter().enumerate().map(|(i, &l)| (l, i)).collect();
        spec.compose(|l| labeling >> pos[&l] & 1 == 1)
    }

    /// Bitwise intersection of all minimizers.
    pub fn bottom(&self) -> u32 {
        self.minimizers.iter().fold(u32::MAX, |a, &b| a & b) & self.full()
    }

    /// Bitwise union of all minimizers.
    pub fn top(&self) -> u32 {
        self.minimizers.iter().fold(0, |a, &b| a | b)
    }

    fn full(&self) -> u32 {
        if self.free.len() == 32 {
            u32::MAX
        } else {
            (1u32 << self.free.len()) - 1
        }
    }
}

/// Enumerates all `2^k` labelings of the `k <= 20` free cells. Evaluation
/// reads stencils cell by cell and shares nothing with the graph encoding.
pub fn brute_force(spec: &DirichletSpec) -> Result<BruteForce> {
    let free: Vec<usize> = spec.free.iter_ones().collect();
    if free.len() > BRUTE_FORCE_CAP {
        return Err(Error::TooLarge {
            free: free.len(),
            cap: BRUTE_FORCE_CAP,
        });
    }
    let geom = spec.geometry();
    let st = ball_stencil(spec.r, geom.spacing(), geom.dim())?;
    let q = spec.scaled_forcing()?;
    let w = spec.capacity_scale as i128;
    let pos: std::collections::HashMap<usize, u32> =
        free.iter().enumerate().map(|(i, &l)| (l, i as u32)).collect();

    let mut constant: i128 = 0;
    // (fixed_in, fixed_out, free bits) for windows cells whose ball has free cells
    let mut varying: Vec<(bool, bool, u32)> = Vec::new();
    for l in spec.window.iter() {
        if !spec.free[l] && spec.boundary.get(l) {
            constant += q[l] as i128;
        }
        let x = geom.index(l);
        let (mut fin, mut fout, mut bits) = (false, false, 0u32);
        for k in st.offsets() {
            let y = [x[0] + k[0], x[1] + k[1], x[2] + k[2]];
            match geom.locate(y) {
                Some(m) if spec.free[m] => bits |= 1 << pos[&m],
                Some(m) => {
                    if spec.boundary.get(m) {
                        fin = true
                    } else {
                        fout = true
                    }
                }
                None => {
                    if spec.boundary.contains(y) {
                        fin = true
                    } else {
                        fout = true
                    }
                }
            }
        }
        if bits == 0 {
            if fin && fout {
                constant += w;
            }
        } else {
            varying.push((fin, fout, bits));
        }
    }
    let bulk: Vec<i128> = free
        .iter()
        .map(|&l| if spec.window.contains(l) { q[l] as i128 } else { 0 })
        .collect();

    let k = free.len();
    let mut best = i128::MAX;
    let mut minimizers = Vec::new();
    for lab in 0u32..(1u32 << k) {
        let mut e = constant;
        for (i, &bq) in bulk.iter().enumerate() {
            if lab >> i & 1 == 1 {
                e += bq;
            }
        }
        for &(fin, fout, bits) in &varying {
            let has_in = fin || lab & bits != 0;
            let has_out = fout || !lab & bits != 0;
            if has_in && has_out {
                e += w;
            }
        }
        if e < best {
            best = e;
            minimizers.clear();
        }
        if e == best {
            minimizers.push(lab);
        }
    }
    Ok(BruteForce {
        min_scaled: best,
        min_energy: spec.unscale(best),
        free,
        minimizers,
    })
}
