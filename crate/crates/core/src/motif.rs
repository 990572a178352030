//! Small template graphs `H` whose edges pick the coupling factors of a
//! statistic.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A simple graph on vertices `0..v` (zero-based internally; the text format
/// is one-based).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Motif {
    v: usize,
    edges: Vec<(usize, usize)>,
    delta: usize,
}

impl Motif {
    /// Builds a motif, normalising each edge to `(min, max)`.
    pub fn new(v: usize, edges: Vec<(usize, usize)>) -> Result<Self> {
        if v < 2 {
            return Err(Error::Motif(format!("need at least 2 vertices, got {v}")));
        }
        let mut norm = Vec::with_capacity(edges.len());
        for (a, b) in edges {
            if a >= v || b >= v {
                return Err(Error::Motif(format!("edge ({a}, {b}) out of range for v = {v}")));
            }
            if a == b {
                return Err(Error::Motif(format!("self-loop at vertex {a}")));
            }
            let e = (a.min(b), a.max(b));
            if norm.contains(&e) {
                return Err(Error::Motif(format!("duplicate edge ({}, {})", e.0, e.1)));
            }
            norm.push(e);
        }
        norm.sort_unstable();
        let mut deg = vec![0usize; v];
        for &(a, b) in &norm {
            deg[a] += 1;
            deg[b] += 1;
        }
        let delta = deg.into_iter().max().unwrap_or(0);
        Ok(Self { v, edges: norm, delta })
    }

    /// The single edge `K₂`.
    pub fn edge() -> Self {
        Self::new(2, vec![(0, 1)]).unwrap()
    }

    /// The triangle `K₃`.
    pub fn triangle() -> Self {
        Self::complete(3).unwrap()
    }

    pub fn complete(v: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for a in 0..v {
            for b in a + 1..v {
                edges.push((a, b));
            }
        }
        Self::new(v, edges)
    }

    /// The star `K_{1,leaves}` with centre 0.
    pub fn star(leaves: usize) -> Result<Self> {
        Self::new(leaves + 1, (1..=leaves).map(|b| (0, b)).collect())
    }

    pub fn path(v: usize) -> Result<Self> {
        Self::new(v, (1..v).map(|b| (b - 1, b)).collect())
    }

    pub fn cycle(v: usize) -> Result<Self> {
        if v < 3 {
            return Err(Error::Motif("a cycle needs at least 3 vertices".into()));
        }
        let mut edges: Vec<_> = (1..v).map(|b| (b - 1, b)).collect();
        edges.push((0, v - 1));
        Self::new(v, edges)
    }

    /// Resolves builtin names: `k2`/`edge`, `triangle`/`k3`, `complete:v`,
    /// `star:k`, `path:v`, `cycle:v`.
    pub fn builtin(name: &str) -> Result<Self> {
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => {
                let n = a
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| Error::Motif(format!("bad size in '{name}'")))?;
                (h, Some(n))
            }
            None => (name, None),
        };
        match (head.trim().to_ascii_lowercase().as_str(), arg) {
            ("k2" | "edge", None) => Ok(Self::edge()),
            ("k3" | "triangle", None) => Ok(Self::triangle()),
            ("complete", Some(v)) => Self::complete(v),
            ("star", Some(k)) => Self::star(k),
            ("path", Some(v)) => Self::path(v),
            ("cycle", Some(v)) => Self::cycle(v),
            _ => Err(Error::Motif(format!("unknown builtin motif '{name}'"))),
        }
    }

    /// Number of vertices.
    pub fn v(&self) -> usize {
        self.v
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Maximum degree Δ.
    pub fn max_degree(&self) -> usize {
        self.delta
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.v];
        for &(a, b) in &self.edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        deg
    }

    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.v];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }

    /// True when the motif has no cycles (isolated vertices allowed).
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.v).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    /// Connected and acyclic.
    pub fn is_tree(&self) -> bool {
        self.is_forest() && self.edges.len() + 1 == self.v
    }

    /// `K_{1,v-1}`; `K₂` counts as the one-leaf star.
    pub fn is_star(&self) -> bool {
        self.is_tree() && self.delta == self.v - 1
    }

    pub fn is_single_edge(&self) -> bool {
        self.v == 2 && self.edges.len() == 1
    }

    /// Parses `v=3\n1 2\n2 3\n3 1` (one-based vertex labels, `#` comments).
    pub fn parse(text: &str) -> Result<Self> {
        let mut v = None;
        let mut edges = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let perr = |msg: String| Error::Parse { line: lineno + 1, msg };
            if let Some(rest) = line.strip_prefix("v=").or_else(|| line.strip_prefix("v =")) {
                let n = rest
                    .trim()
                    .parse::<usize>()
                    .map_err(|_| perr(format!("bad vertex count '{rest}'")))?;
                v = Some(n);
                continue;
            }
            let nums: Vec<&str> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|s| !s.is_empty())
                .collect();
            if nums.len() != 2 {
                return Err(perr(format!("expected two vertex labels, got '{line}'")));
            }
            let a = nums[0]
                .parse::<usize>()
                .map_err(|_| perr(format!("bad vertex '{}'", nums[0])))?;
            let b = nums[1]
                .parse::<usize>()
                .map_err(|_| perr(format!("bad vertex '{}'", nums[1])))?;
            if a == 0 || b == 0 {
                return Err(perr("vertex labels are one-based".into()));
            }
            edges.push((a - 1, b - 1));
        }
        let v = v.ok_or_else(|| Error::Parse { line: 1, msg: "missing 'v=' header".into() })?;
        Self::new(v, edges)
    }

    /// Inverse of [`Motif::parse`].
    pub fn to_text(&self) -> String {
        let mut s = format!("v={}\n", self.v);
        for &(a, b) in &self.edges {
            s.push_str(&format!("{} {}\n", a + 1, b + 1));
        }
        s
    }
}
