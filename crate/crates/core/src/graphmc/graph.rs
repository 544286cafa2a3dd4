//! Two-colorable graphs and the stabilizer label action of Pauli errors.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bell::Pauli;
use crate::error::{Error, Result};

/// Vertex count limit of the `u64` label masks.
pub const MAX_VERTICES: usize = 64;

const STEANE7_JSON: &str = include_str!("../../data/steane7.json");
const BELL_PAIR_JSON: &str = include_str!("../../data/bell_pair.json");

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    A,
    B,
}

impl Color {
    pub const fn other(self) -> Color {
        match self {
            Color::A => Color::B,
            Color::B => Color::A,
        }
    }
}

/// On-disk graph layout.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub n: usize,
    pub edges: Vec<[usize; 2]>,
    pub colors: Vec<Color>,
}

/// Bipartite graph whose state is stabilized by `K_j = X_j prod_{k in V_j} Z_k`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "GraphFile", try_from = "GraphFile")]
pub struct TwoColorableGraph {
    n: usize,
    edges: Vec<[usize; 2]>,
    colors: Vec<Color>,
    neighbors: Vec<u64>,
    color_masks: [u64; 2],
}

impl TwoColorableGraph {
    /// Validated graph; must be connected.
    pub fn new(n: usize, edges: Vec<[usize; 2]>, colors: Vec<Color>) -> Result<Self> {
        let g = Self::allow_disconnected(n, edges, colors)?;
        if !g.is_connected() {
            return Err(Error::InvalidGraph("graph is disconnected".into()));
        }
        Ok(g)
    }

    /// As [`TwoColorableGraph::new`] without the connectivity requirement.
    pub fn allow_disconnected(
        n: usize,
        edges: Vec<[usize; 2]>,
        colors: Vec<Color>,
    ) -> Result<Self> {
        if n == 0 || n > MAX_VERTICES {
            return Err(Error::InvalidGraph(format!(
                "vertex count {n} outside 1..={MAX_VERTICES}"
            )));
        }
        if colors.len() != n {
            return Err(Error::InvalidGraph(format!(
                "{} colors for {n} vertices",
                colors.len()
            )));
        }
        let mut seen = BTreeSet::new();
        let mut neighbors = vec![0u64; n];
        for &[a, b] in &edges {
            if a >= n || b >= n {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) references a missing vertex"
                )));
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at vertex {a}")));
            }
            if !seen.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidGraph(format!("duplicate edge ({a}, {b})")));
            }
            if colors[a] == colors[b] {
                return Err(Error::InvalidGraph(format!(
                    "edge ({a}, {b}) joins two vertices of color {:?}",
                    colors[a]
                )));
            }
            neighbors[a] |= 1 << b;
            neighbors[b] |= 1 << a;
        }
        let mut color_masks = [0u64; 2];
        for (v, c) in colors.iter().enumerate() {
            color_masks[*c as usize] |= 1 << v;
        }
        Ok(Self {
            n,
            edges,
            colors,
            neighbors,
            color_masks,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: GraphFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidGraph(e.to_string()))?;
        Self::try_from(file)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidGraph(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Seven-vertex graph locally equivalent to the Steane code state: with
    /// Hadamards on the B vertices its stabilizer group is that of `|0_L>`.
    pub fn steane7() -> Self {
        Self::from_json(STEANE7_JSON).expect("shipped graph is valid")
    }

    /// Single edge; with a Hadamard on vertex 0 this is the Bell pair `phi_0`.
    pub fn bell_pair() -> Self {
        Self::from_json(BELL_PAIR_JSON).expect("shipped graph is valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn color(&self, v: usize) -> Color {
        self.colors[v]
    }

    /// Neighbor set `V_v` as a bit mask.
    pub fn neighbors(&self, v: usize) -> u64 {
        self.neighbors[v]
    }

    pub fn color_mask(&self, c: Color) -> u64 {
        self.color_masks[c as usize]
    }

    pub fn all_mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1 << self.n) - 1
        }
    }

    pub fn is_connected(&self) -> bool {
        let mut reached = 1u64;
        let mut frontier = 1u64;
        while frontier != 0 {
            let mut next = 0;
            let mut f = frontier;
            while f != 0 {
                let v = f.trailing_zeros() as usize;
                f &= f - 1;
                next |= self.neighbors[v];
            }
            frontier = next & !reached;
            reached |= next;
        }
        reached == self.all_mask()
    }
}

impl From<TwoColorableGraph> for GraphFile {
    fn from(g: TwoColorableGraph) -> Self {
        GraphFile {
            n: g.n,
            edges: g.edges,
            colors: g.colors,
        }
    }
}

impl TryFrom<GraphFile> for TwoColorableGraph {
    type Error = Error;

    fn try_from(f: GraphFile) -> Result<Self> {
        TwoColorableGraph::new(f.n, f.edges, f.colors)
    }
}

/// Returns `g` if it is a connected two-colored graph.
pub fn validate_graph(g: GraphFile) -> Result<TwoColorableGraph> {
    TwoColorableGraph::try_from(g)
}

/// Labels flipped by a graph-frame Pauli on vertex `q`: the `K_j` it
/// anticommutes with.
pub fn pauli_label_flips(g: &TwoColorableGraph, q: usize, p: Pauli) -> u64 {
    match p {
        Pauli::I => 0,
        Pauli::Z => 1 << q,
        Pauli::X => g.neighbors(q),
        Pauli::Y => (1 << q) ^ g.neighbors(q),
    }
}
