//! Sparse weighted bipartite networks (holders × issuers) and their exact
//! marginals.
//!
//! Edges are stored once, sorted holder-major and then by issuer, together
//! with CSR-style row offsets. A zero weight is never stored: an edge exists
//! if and only if its weight is strictly positive. All sums documented here
//! run in ascending index order, which fixes the rounding of every marginal.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub holder: usize,
    pub issuer: usize,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BipartiteNetwork {
    n_holders: usize,
    n_issuers: usize,
    edges: Vec<Edge>,
    row_offsets: Vec<usize>,
    holder_labels: Vec<String>,
    issuer_labels: Vec<String>,
}

impl BipartiteNetwork {
    /// Builds a network from `(holder, issuer, weight)` triples in any order.
    ///
    /// Rejects out-of-range indices, weights that are not strictly positive
    /// and finite, and repeated pairs. Labels default to `h<i>` / `s<α>`.
    pub fn new<I>(n_holders: usize, n_issuers: usize, triples: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut edges = Vec::new();
        for (holder, issuer, weight) in triples {
            if holder >= n_holders || issuer >= n_issuers {
                return Err(Error::IndexOutOfRange {
                    holder,
                    issuer,
                    n_holders,
                    n_issuers,
                });
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::InvalidWeight { holder, issuer, weight });
            }
            edges.push(Edge { holder, issuer, weight });
        }
        edges.sort_unstable_by_key(|e| (e.holder, e.issuer));
        if let Some(w) = edges
            .windows(2)
            .find(|w| w[0].holder == w[1].holder && w[0].issuer == w[1].issuer)
        {
            return Err(Error::DuplicateEdge {
                holder: w[0].holder,
                issuer: w[0].issuer,
            });
        }
        Ok(Self::from_sorted(n_holders, n_issuers, edges))
    }

    /// Assembles a network from edges that are already canonical: sorted
    /// holder-major, unique, in range, with positive weights.
    pub(crate) fn from_sorted(n_holders: usize, n_issuers: usize, edges: Vec<Edge>) -> Self {
        debug_assert!(edges
            .windows(2)
            .all(|w| (w[0].holder, w[0].issuer) < (w[1].holder, w[1].issuer)));
        let mut row_offsets = vec![0usize; n_holders + 1];
        for e in &edges {
            row_offsets[e.holder + 1] += 1;
        }
        for i in 0..n_holders {
            row_offsets[i + 1] += row_offsets[i];
        }
        Self {
            n_holders,
            n_issuers,
            edges,
            row_offsets,
            holder_labels: default_labels("h", n_holders),
            issuer_labels: default_labels("s", n_issuers),
        }
    }

    /// Replaces the node labels. Lengths must match the layer sizes.
    pub fn with_labels(mut self, holders: Vec<String>, issuers: Vec<String>) -> Result<Self> {
        if holders.len() != self.n_holders || issuers.len() != self.n_issuers {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{} labels", self.n_holders, self.n_issuers),
                found: format!("{}x{} labels", holders.len(), issuers.len()),
            });
        }
        self.holder_labels = holders;
        self.issuer_labels = issuers;
        Ok(self)
    }

    pub fn n_holders(&self) -> usize {
        self.n_holders
    }

    pub fn n_issuers(&self) -> usize {
        self.n_issuers
    }

    /// Number of node pairs, N·M.
    pub fn n_pairs(&self) -> usize {
        self.n_holders * self.n_issuers
    }

    /// Total number of links L.
    pub fn n_links(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// All edges in canonical holder-major order.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Edges of holder `i`, ordered by issuer.
    pub fn row(&self, holder: usize) -> &[Edge] {
        &self.edges[self.row_offsets[holder]..self.row_offsets[holder + 1]]
    }

    pub fn weight(&self, holder: usize, issuer: usize) -> Option<f64> {
        let row = self.row(holder);
        row.binary_search_by_key(&issuer, |e| e.issuer)
            .ok()
            .map(|k| row[k].weight)
    }

    pub fn has_edge(&self, holder: usize, issuer: usize) -> bool {
        self.weight(holder, issuer).is_some()
    }

    pub fn holder_labels(&self) -> &[String] {
        &self.holder_labels
    }

    pub fn issuer_labels(&self) -> &[String] {
        &self.issuer_labels
    }

    /// Holder strengths (row sums), issuer strengths (column sums) and the
    /// total weight W = Σ_i V_i.
    pub fn strengths(&self) -> StrengthSequences {
        let mut holder = vec![0.0; self.n_holders];
        let mut issuer = vec![0.0; self.n_issuers];
        for e in &self.edges {
            holder[e.holder] += e.weight;
            issuer[e.issuer] += e.weight;
        }
        let total = holder.iter().sum();
        StrengthSequences { holder, issuer, total }
    }

    pub fn degrees(&self) -> DegreeSequences {
        let mut holder = vec![0usize; self.n_holders];
        let mut issuer = vec![0usize; self.n_issuers];
        for e in &self.edges {
            holder[e.holder] += 1;
            issuer[e.issuer] += 1;
        }
        DegreeSequences {
            holder,
            issuer,
            links: self.edges.len(),
        }
    }

    /// Link density L / (N·M).
    pub fn density(&self) -> Result<f64> {
        if self.n_pairs() == 0 {
            return Err(Error::EmptyDomain);
        }
        Ok(self.n_links() as f64 / self.n_pairs() as f64)
    }

    /// Same topology and labels with every weight mapped through `f`.
    /// `f` must keep weights strictly positive.
    pub fn map_weights(&self, mut f: impl FnMut(&Edge) -> f64) -> Result<Self> {
        let mut out = self.clone();
        for e in &mut out.edges {
            let w = f(e);
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::InvalidWeight {
                    holder: e.holder,
                    issuer: e.issuer,
                    weight: w,
                });
            }
            e.weight = w;
        }
        Ok(out)
    }
}

fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|k| format!("{prefix}{k}")).collect()
}

/// Holder strengths V, issuer strengths C and total weight W.
#[derive(Clone, Debug, PartialEq)]
pub struct StrengthSequences {
    holder: Vec<f64>,
    issuer: Vec<f64>,
    total: f64,
}

impl StrengthSequences {
    /// Relative tolerance on |ΣV − ΣC| used by [`StrengthSequences::new`].
    pub const DEFAULT_REL_TOL: f64 = 1e-9;

    pub fn new(holder: Vec<f64>, issuer: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(holder, issuer, Self::DEFAULT_REL_TOL)
    }

    /// Validates non-negative finite strengths and ΣV ≈ ΣC within `rel_tol`.
    /// W is taken as ΣV.
    pub fn with_tolerance(holder: Vec<f64>, issuer: Vec<f64>, rel_tol: f64) -> Result<Self> {
        for (index, &value) in holder.iter().chain(issuer.iter()).enumerate() {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidStrength { index, value });
            }
        }
        let total: f64 = holder.iter().sum();
        let issuer_total: f64 = issuer.iter().sum();
        if (total - issuer_total).abs() > rel_tol * total.abs().max(issuer_total.abs()) {
            return Err(Error::TotalsMismatch {
                holder_total: total,
                issuer_total,
            });
        }
        Ok(Self { holder, issuer, total })
    }

    pub fn holder(&self) -> &[f64] {
        &self.holder
    }

    pub fn issuer(&self) -> &[f64] {
        &self.issuer
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn n_holders(&self) -> usize {
        self.holder.len()
    }

    pub fn n_issuers(&self) -> usize {
        self.issuer.len()
    }

    /// Number of pairs with V_i·C_α > 0, i.e. the largest attainable link count.
    pub fn positive_pairs(&self) -> usize {
        let rows = self.holder.iter().filter(|&&v| v > 0.0).count();
        let cols = self.issuer.iter().filter(|&&c| c > 0.0).count();
        rows * cols
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DegreeSequences {
    pub holder: Vec<usize>,
    pub issuer: Vec<usize>,
    pub links: usize,
}

impl DegreeSequences {
    pub fn new(holder: Vec<usize>, issuer: Vec<usize>) -> Result<Self> {
        let links: usize = holder.iter().sum();
        let issuer_links: usize = issuer.iter().sum();
        if links != issuer_links {
            return Err(Error::InvalidDegrees(format!(
                "holder degrees sum to {links}, issuer degrees to {issuer_links}"
            )));
        }
        Ok(Self { holder, issuer, links })
    }
}
