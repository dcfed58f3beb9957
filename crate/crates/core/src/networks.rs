//! Interaction layers as sparse edge lists.
//!
//! The household layer is a fixed set of cliques. Occupation and random
//! layers are redrawn every step as Erdős-Rényi graphs (within each
//! occupation group, and over the whole eligible population respectively),
//! generated with geometric skipping so the cost is proportional to the
//! number of edges produced, never to the number of candidate pairs.

use std::fmt;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::popgen::{Population, NUM_OCCUPATIONS};
use crate::rng::{Purpose, RngStream, StreamKey};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Layer {
    Household = 0,
    Occupation = 1,
    Random = 2,
}

impl Layer {
    pub const ALL: [Layer; 3] = [Layer::Household, Layer::Occupation, Layer::Random];

    pub fn name(self) -> &'static str {
        match self {
            Layer::Household => "household",
            Layer::Occupation => "occupation",
            Layer::Random => "random",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Undirected edge with `src < dst`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: u32,
    pub dst: u32,
    pub layer: Layer,
}

impl Edge {
    #[inline]
    pub fn new(a: u32, b: u32, layer: Layer) -> Self {
        debug_assert_ne!(a, b);
        let (src, dst) = if a < b { (a, b) } else { (b, a) };
        Self { src, dst, layer }
    }

    #[inline]
    pub fn touches(&self, agent: u32) -> bool {
        self.src == agent || self.dst == agent
    }

    /// The endpoint that is not `agent`.
    #[inline]
    pub fn other(&self, agent: u32) -> u32 {
        if self.src == agent {
            self.dst
        } else {
            self.src
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct EdgeList {
    pub step: u32,
    pub edges: Vec<Edge>,
}

impl EdgeList {
    pub fn new(step: u32) -> Self {
        Self {
            step,
            edges: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn extend(&mut self, other: EdgeList) {
        self.edges.extend(other.edges);
    }

    pub fn in_layer(&self, layer: Layer) -> impl Iterator<Item = &Edge> + '_ {
        self.edges.iter().filter(move |e| e.layer == layer)
    }

    /// Appends the edges as `step,layer,src,dst` rows, header included when
    /// `header` is set.
    pub fn write_csv<W: Write>(&self, out: &mut W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(out, "step,layer,src,dst")?;
        }
        for e in &self.edges {
            writeln!(out, "{},{},{},{}", self.step, e.layer, e.src, e.dst)?;
        }
        Ok(())
    }

    pub fn dump_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_csv(&mut w, true)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkParams {
    pub occupation_mean_contacts: f64,
    pub random_mean_contacts: f64,
    pub scale_random_interact: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self {
            occupation_mean_contacts: 1.0,
            random_mean_contacts: 1.0,
            scale_random_interact: 1.0,
        }
    }
}

/// Complete graph inside every household. Static across steps.
pub fn build_household_edges(pop: &Population) -> EdgeList {
    let mut out = EdgeList::new(0);
    for members in pop.households() {
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                out.edges.push(Edge::new(a, b, Layer::Household));
            }
        }
    }
    out
}

/// Household edges whose endpoints are both eligible this step.
pub fn active_household_edges(household: &EdgeList, eligible: &[bool], step: u32) -> EdgeList {
    EdgeList {
        step,
        edges: household
            .edges
            .iter()
            .filter(|e| eligible[e.src as usize] && eligible[e.dst as usize])
            .copied()
            .collect(),
    }
}

/// Per-step occupation layer: within each occupation group, every pair of
/// eligible members is connected independently with probability
/// `mean / (n - 1)`, so the expected degree is `occupation_mean_contacts`
/// (capped by the group size).
pub fn sample_occupation_edges(
    pop: &Population,
    params: &NetworkParams,
    eligible: &[bool],
    step: u32,
    key: StreamKey,
) -> EdgeList {
    let mut out = EdgeList::new(step);
    if params.occupation_mean_contacts <= 0.0 {
        return out;
    }
    let mut members = Vec::new();
    for occ in 0..NUM_OCCUPATIONS {
        members.clear();
        members.extend(
            pop.occupation_group(occ)
                .iter()
                .copied()
                .filter(|&a| eligible[a as usize]),
        );
        let mut rng = key.stream(Purpose::OccupationLayer, step, occ as u64);
        gnp_edges(&members, params.occupation_mean_contacts, Layer::Occupation, &mut rng, &mut out.edges);
    }
    out
}

/// Per-step random layer over all eligible agents, expected degree
/// `random_mean_contacts * scale_random_interact`.
pub fn sample_random_edges(
    pop: &Population,
    params: &NetworkParams,
    eligible: &[bool],
    step: u32,
    key: StreamKey,
) -> EdgeList {
    let mut out = EdgeList::new(step);
    let mean = params.random_mean_contacts * params.scale_random_interact;
    if mean <= 0.0 {
        return out;
    }
    let members: Vec<u32> = (0..pop.len() as u32).filter(|&a| eligible[a as usize]).collect();
    let mut rng = key.stream(Purpose::RandomLayer, step, 0);
    gnp_edges(&members, mean, Layer::Random, &mut rng, &mut out.edges);
    out
}

/// Edge probability giving expected degree `mean` in a group of `n`.
pub fn pair_probability(n: usize, mean: f64) -> f64 {
    if n < 2 {
        0.0
    } else {
        (mean / (n - 1) as f64).min(1.0)
    }
}

/// G(n, p) over `members` (ascending agent ids) by geometric skipping over
/// the lower-triangular pair index (Batagelj & Brandes).
fn gnp_edges(members: &[u32], mean: f64, layer: Layer, rng: &mut RngStream, out: &mut Vec<Edge>) {
    let n = members.len();
    let p = pair_probability(n, mean);
    if p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                out.push(Edge::new(a, b, layer));
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut v: usize = 1;
    let mut w: i64 = -1;
    while v < n {
        let r = rng.uniform();
        let skip = ((1.0 - r).ln() / log_q).floor();
        // huge skips just end the sweep
        if skip > (n as f64) * (n as f64) {
            break;
        }
        w += 1 + skip as i64;
        while w >= v as i64 && v < n {
            w -= v as i64;
            v += 1;
        }
        if v < n {
            out.push(Edge::new(members[w as usize], members[v], layer));
        }
    }
}

/// Marginal neighbourhood of a single agent under the same layer model:
/// each eligible candidate is a neighbour independently with the layer's
/// pair probability. Used where only one agent's contacts matter.
pub fn sample_ego_neighbours(
    candidates: &[u32],
    mean: f64,
    exclude: u32,
    rng: &mut RngStream,
    out: &mut Vec<u32>,
) {
    // `candidates` includes `exclude` when the agent belongs to the group
    let others = candidates.len() - usize::from(candidates.binary_search(&exclude).is_ok());
    let p = pair_probability(others + 1, mean);
    if p <= 0.0 || others == 0 {
        return;
    }
    if p >= 1.0 {
        out.extend(candidates.iter().copied().filter(|&a| a != exclude));
        return;
    }
    let log_q = (1.0 - p).ln();
    let mut idx: i64 = -1;
    loop {
        let r = rng.uniform();
        let skip = ((1.0 - r).ln() / log_q).floor();
        if skip >= candidates.len() as f64 {
            break;
        }
        idx += 1 + skip as i64;
        if idx as usize >= candidates.len() {
            break;
        }
        let a = candidates[idx as usize];
        if a != exclude {
            out.push(a);
        }
    }
}
