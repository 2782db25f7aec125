//! Undirected simple graphs, adjacency normalizations and the GCN dominant
//! eigenvector.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::rng::Xoshiro256pp;

/// Undirected simple graph. Edges are stored once, as `(i, j)` with `i < j`,
/// in lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl Graph {
    /// Builds a graph, canonicalizing each pair to `i < j`. Self-loops,
    /// duplicate edges and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("graph needs at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for &(a, b) in edges {
            if a == b {
                return Err(Error::InvalidParameter(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParameter(format!(
                    "edge ({a}, {b}) out of range for {n} nodes"
                )));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameter(format!("duplicate edge ({a}, {b})")));
            }
        }
        let edges: Vec<_> = set.into_iter().collect();
        let mut degrees = vec![0; n];
        let mut neighbors = vec![Vec::new(); n];
        for &(i, j) in &edges {
            degrees[i] += 1;
            degrees[j] += 1;
            neighbors[i].push(j);
            neighbors[j].push(i);
        }
        neighbors.iter_mut().for_each(|nb| nb.sort_unstable());
        Ok(Self {
            n,
            edges,
            degrees,
            neighbors,
        })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// Sorted open neighborhood of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.neighbors[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Dense 0/1 adjacency with unit diagonal (`Ã + I`).
    pub fn adjacency_with_self_loops(&self) -> DenseMatrix {
        let mut a = DenseMatrix::identity(self.n);
        for &(i, j) in &self.edges {
            a[(i, j)] = 1.0;
            a[(j, i)] = 1.0;
        }
        a
    }

    /// Parses the `grf 1 <n> <num_edges>` text format.
    pub fn parse_grf(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (line_no, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            message: "empty graph file".into(),
        })?;
        let fields: Vec<_> = header.split_whitespace().collect();
        if fields.len() != 4 || fields[0] != "grf" || fields[1] != "1" {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `grf 1 <n> <num_edges>`, found `{header}`"),
            });
        }
        let parse_count = |s: &str, line: usize| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line,
                message: format!("bad integer `{s}`: {e}"),
            })
        };
        let n = parse_count(fields[2], line_no)?;
        let m = parse_count(fields[3], line_no)?;
        let mut edges = Vec::with_capacity(m);
        let mut seen = BTreeSet::new();
        for (line, text) in lines {
            let pair: Vec<_> = text.split_whitespace().collect();
            if pair.len() != 2 {
                return Err(Error::Parse {
                    line,
                    message: format!("expected `i j`, found `{text}`"),
                });
            }
            let (i, j) = (parse_count(pair[0], line)?, parse_count(pair[1], line)?);
            if i >= j {
                return Err(Error::Parse {
                    line,
                    message: format!("edge must satisfy i < j, found {i} {j}"),
                });
            }
            if j >= n {
                return Err(Error::Parse {
                    line,
                    message: format!("node {j} out of range for {n} nodes"),
                });
            }
            if !seen.insert((i, j)) {
                return Err(Error::Parse {
                    line,
                    message: format!("duplicate edge {i} {j}"),
                });
            }
            edges.push((i, j));
        }
        if edges.len() != m {
            return Err(Error::Parse {
                line: line_no,
                message: format!("header declares {m} edges, found {}", edges.len()),
            });
        }
        Self::new(n, &edges)
    }

    pub fn to_grf(&self) -> String {
        let mut s = format!("grf 1 {} {}\n", self.n, self.edges.len());
        for (i, j) in &self.edges {
            let _ = writeln!(s, "{i} {j}");
        }
        s
    }

    pub fn read_grf(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_grf(&text)
    }

    pub fn write_grf(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_grf()).map_err(|e| Error::io(path, e))
    }
}

/// Barabási–Albert graph: a clique on `m + 1` seed nodes, then every later
/// node attaches to `m` distinct earlier nodes drawn with probability
/// proportional to their current degree (roulette draws, repeated until `m`
/// distinct targets are found).
pub fn barabasi_albert(n: usize, m: usize, seed: u64) -> Result<Graph> {
    if m < 1 || m >= n {
        return Err(Error::InvalidParameter(format!(
            "Barabasi-Albert needs 1 <= m < n, got n={n} m={m}"
        )));
    }
    let mut rng = Xoshiro256pp::seed_from_u64(seed);
    let mut edges = Vec::with_capacity(m * (m + 1) / 2 + (n - m - 1) * m);
    let mut degree = vec![0usize; n];
    for i in 0..=m {
        for j in (i + 1)..=m {
            edges.push((i, j));
            degree[i] += 1;
            degree[j] += 1;
        }
    }
    let mut targets = Vec::with_capacity(m);
    for v in (m + 1)..n {
        let total: usize = degree[..v].iter().sum();
        targets.clear();
        while targets.len() < m {
            let r = (rng.next_f64() * total as f64) as usize;
            let mut acc = 0;
            let mut pick = v - 1;
            for (w, &d) in degree[..v].iter().enumerate() {
                acc += d;
                if r < acc {
                    pick = w;
                    break;
                }
            }
            if !targets.contains(&pick) {
                targets.push(pick);
            }
        }
        for &t in &targets {
            edges.push((t, v));
            degree[t] += 1;
            degree[v] += 1;
        }
    }
    let g = Graph::new(n, &edges)?;
    assert!(g.is_connected(), "preferential attachment produced a disconnected graph");
    Ok(g)
}

/// `D̃^{-1/2} (Ã + I) D̃^{-1/2}` with `D̃ = D + I`.
pub fn sym_norm_adjacency(g: &Graph) -> DenseMatrix {
    let closed: Vec<f64> = g.degrees.iter().map(|&d| (1 + d) as f64).collect();
    let mut a = DenseMatrix::zeros(g.n, g.n);
    for i in 0..g.n {
        a[(i, i)] = 1.0 / closed[i];
    }
    for &(i, j) in &g.edges {
        let w = 1.0 / (closed[i] * closed[j]).sqrt();
        a[(i, j)] = w;
        a[(j, i)] = w;
    }
    a
}

/// `D̃^{-1} (Ã + I)`: uniform averaging over each closed neighborhood.
pub fn row_stochastic_adjacency(g: &Graph) -> DenseMatrix {
    let mut a = DenseMatrix::zeros(g.n, g.n);
    for i in 0..g.n {
        let w = 1.0 / (1 + g.degrees[i]) as f64;
        a[(i, i)] = w;
        for &j in &g.neighbors[i] {
            a[(i, j)] = w;
        }
    }
    a
}

/// Unit vector with entries proportional to `√(1 + dᵢ)`, the Perron vector of
/// [`sym_norm_adjacency`].
pub fn gcn_dominant_eigenvector(g: &Graph) -> Result<Vec<f64>> {
    if !g.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let raw: Vec<f64> = g.degrees.iter().map(|&d| ((1 + d) as f64).sqrt()).collect();
    let norm = raw.iter().map(|x| x * x).sum::<f64>().sqrt();
    Ok(raw.into_iter().map(|x| x / norm).collect())
}

/// Constant unit vector, the shared Perron vector of row-stochastic matrices.
pub fn constant_unit_vector(n: usize) -> Vec<f64> {
    vec![1.0 / (n as f64).sqrt(); n]
}
