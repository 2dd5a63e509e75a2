//! Qudit graph descriptions and their serialized forms.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

/// Hard cap on the Hilbert-space dimension of any state built from a graph.
pub const DIM_CAP: usize = 1 << 14;

/// A weighted graph over `n` qudits of prime local dimension `d`. Each edge
/// carries a multiplicity in `Z_d` counting how many controlled-phase layers
/// it contributes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    d: u32,
    n: usize,
    edges: Vec<(usize, usize, u32)>,
}

fn is_prime(d: u32) -> bool {
    if d < 2 {
        return false;
    }
    let mut i = 2u32;
    while i * i <= d {
        if d % i == 0 {
            return false;
        }
        i += 1;
    }
    true
}

impl GraphSpec {
    pub fn new(d: u32, n: usize, edges: Vec<(usize, usize, u32)>) -> Result<Self> {
        if !is_prime(d) {
            return Err(Error::domain(format!("local dimension must be prime, got {d}")));
        }
        if n == 0 {
            return Err(Error::domain("vertex count must be positive".to_string()));
        }
        let dim = (d as f64).powi(n as i32);
        if dim > DIM_CAP as f64 {
            return Err(Error::resource(format!(
                "dimension {d}^{n} exceeds the cap {DIM_CAP}"
            )));
        }
        let mut seen = HashSet::new();
        for &(i, j, m) in &edges {
            if i == j {
                return Err(Error::domain(format!("self-loop at vertex {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::domain(format!("edge ({i},{j}) outside 0..{n}")));
            }
            if m >= d {
                return Err(Error::domain(format!("multiplicity {m} not a residue mod {d}")));
            }
            if !seen.insert((i.min(j), i.max(j))) {
                return Err(Error::domain(format!("duplicate edge between {i} and {j}")));
            }
        }
        Ok(GraphSpec { d, n, edges })
    }

    /// Linear cluster: vertices `0..n` chained with multiplicity 1.
    pub fn linear_cluster(d: u32, n: usize) -> Result<Self> {
        let edges = (0..n.saturating_sub(1)).map(|i| (i, i + 1, 1)).collect();
        GraphSpec::new(d, n, edges)
    }

    /// Triangle with all multiplicities 1.
    pub fn triangle(d: u32) -> Result<Self> {
        GraphSpec::new(d, 3, vec![(0, 1, 1), (0, 2, 1), (1, 2, 1)])
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize, u32)] {
        &self.edges
    }

    /// Hilbert-space dimension `d^n`.
    pub fn dimension(&self) -> usize {
        (self.d as usize).pow(self.n as u32)
    }

    /// Neighbors of `v` with edge multiplicities.
    pub fn neighbors(&self, v: usize) -> Vec<(usize, u32)> {
        let mut out = Vec::new();
        for &(i, j, m) in &self.edges {
            if i == v {
                out.push((j, m));
            } else if j == v {
                out.push((i, m));
            }
        }
        out
    }

    /// Parses either the line-oriented text format (`d n` header followed by
    /// `i j m` edge lines, `#` comments allowed) or the JSON form.
    pub fn parse(input: &str) -> Result<Self> {
        let trimmed = input.trim_start();
        if trimmed.starts_with('{') {
            return serde_json::from_str::<GraphSpec>(input)
                .map_err(|e| Error::parse(format!("graph JSON: {e}")))
                .and_then(|g| GraphSpec::new(g.d, g.n, g.edges));
        }
        let mut lines = input
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::parse("empty graph file".to_string()))?;
        let mut it = header.split_whitespace();
        let d: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse("header must start with the local dimension".to_string()))?;
        let n: usize = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse("header must contain the vertex count".to_string()))?;
        if it.next().is_some() {
            return Err(Error::parse("header must be exactly `d n`".to_string()));
        }
        let mut edges = Vec::new();
        for line in lines {
            let parts: Vec<&str> = line.split_whitespace().collect();
            if parts.len() != 3 {
                return Err(Error::parse(format!("edge line must be `i j m`, got `{line}`")));
            }
            let i: usize = parts[0]
                .parse()
                .map_err(|_| Error::parse(format!("bad vertex index `{}`", parts[0])))?;
            let j: usize = parts[1]
                .parse()
                .map_err(|_| Error::parse(format!("bad vertex index `{}`", parts[1])))?;
            let m: u32 = parts[2]
                .parse()
                .map_err(|_| Error::parse(format!("bad multiplicity `{}`", parts[2])))?;
            edges.push((i, j, m));
        }
        GraphSpec::new(d, n, edges)
    }
}

impl fmt::Display for GraphSpec {
    /// Emits the line-oriented text format.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.d, self.n)?;
        for &(i, j, m) in &self.edges {
            writeln!(f, "{i} {j} {m}")?;
        }
        Ok(())
    }
}
