use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

const ROW_TOL: f64 = 1e-9;

/// One discrete variable: continuous values are binned by `edges`
/// (`k + 1` increasing edges give `k` half-open bins, the last one closed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Node {
    pub name: String,
    #[serde(default)]
    pub parents: Vec<usize>,
    pub edges: Vec<f64>,
    /// One row per joint parent bin assignment (first parent most
    /// significant). Empty until fitted.
    #[serde(default)]
    pub cpt: Vec<Vec<f64>>,
}

impl Node {
    pub fn new(name: &str, parents: &[usize], edges: &[f64]) -> Self {
        Self { name: name.to_owned(), parents: parents.to_vec(), edges: edges.to_vec(), cpt: Vec::new() }
    }

    pub fn with_cpt(mut self, cpt: Vec<Vec<f64>>) -> Self {
        self.cpt = cpt;
        self
    }

    pub fn bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Bin holding `value`; values outside the edges go to the end bins.
    pub fn bin_of(&self, value: f64) -> usize {
        let k = self.bins();
        self.edges[1..k].partition_point(|e| *e <= value)
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.edges[0], self.edges[self.bins()])
    }

    fn sample_in_bin<R: Rng + ?Sized>(&self, bin: usize, rng: &mut R) -> f64 {
        let (lo, hi) = (self.edges[bin], self.edges[bin + 1]);
        lo + (hi - lo) * rng.random::<f64>()
    }
}

/// Discrete Bayesian network in topological order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Node>", into = "Vec<Node>")]
pub struct DiscreteBayesNet {
    nodes: Vec<Node>,
}

impl TryFrom<Vec<Node>> for DiscreteBayesNet {
    type Error = Error;

    fn try_from(nodes: Vec<Node>) -> Result<Self> {
        Self::new(nodes)
    }
}

impl From<DiscreteBayesNet> for Vec<Node> {
    fn from(net: DiscreteBayesNet) -> Self {
        net.nodes
    }
}

/// Bin assignment and sampled values of every node, with the log
/// probability of the sampled (non-evidence) bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Draw {
    pub bins: Vec<usize>,
    pub values: Vec<f64>,
    pub log_prob: f64,
}

impl DiscreteBayesNet {
    /// Validates structure and, if present, CPTs. Nodes either all carry
    /// CPTs or none do.
    pub fn new(nodes: Vec<Node>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::InvalidNetwork("network has no nodes".into()));
        }
        for (i, n) in nodes.iter().enumerate() {
            if nodes[..i].iter().any(|m| m.name == n.name) {
                return Err(Error::InvalidNetwork(format!("duplicate node `{}`", n.name)));
            }
            if let Some(p) = n.parents.iter().find(|p| **p >= i) {
                return Err(Error::InvalidNetwork(format!(
                    "node `{}` has parent {p} that does not precede it",
                    n.name
                )));
            }
            if n.edges.len() < 2 || n.edges.iter().any(|e| !e.is_finite()) || n.edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidNetwork(format!(
                    "node `{}` needs at least two finite, strictly increasing edges",
                    n.name
                )));
            }
        }
        let fitted = nodes.iter().filter(|n| !n.cpt.is_empty()).count();
        if fitted != 0 && fitted != nodes.len() {
            return Err(Error::InvalidNetwork("either every node or no node may carry a CPT".into()));
        }
        let net = Self { nodes };
        if fitted != 0 {
            for i in 0..net.nodes.len() {
                net.check_cpt(i)?;
            }
        }
        Ok(net)
    }

    fn check_cpt(&self, i: usize) -> Result<()> {
        let n = &self.nodes[i];
        let rows = self.row_count(i);
        if n.cpt.len() != rows {
            return Err(Error::InvalidNetwork(format!(
                "node `{}` has {} CPT rows, expected {rows}",
                n.name,
                n.cpt.len()
            )));
        }
        for (r, row) in n.cpt.iter().enumerate() {
            let total: f64 = row.iter().sum();
            if row.len() != n.bins() || row.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > ROW_TOL {
                return Err(Error::InvalidNetwork(format!(
                    "node `{}` row {r} is not a distribution over {} bins",
                    n.name,
                    n.bins()
                )));
            }
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.name == name)
    }

    pub fn is_fitted(&self) -> bool {
        !self.nodes[0].cpt.is_empty()
    }

    /// Copy of the structure without CPTs.
    pub fn structure(&self) -> Self {
        let nodes = self.nodes.iter().map(|n| Node { cpt: Vec::new(), ..n.clone() }).collect();
        Self { nodes }
    }

    pub fn row_count(&self, i: usize) -> usize {
        self.nodes[i].parents.iter().map(|p| self.nodes[*p].bins()).product()
    }

    /// Mixed-radix CPT row of node `i` under a full bin assignment.
    pub fn row_index(&self, i: usize, bins: &[usize]) -> usize {
        self.nodes[i].parents.iter().fold(0, |acc, p| acc * self.nodes[*p].bins() + bins[*p])
    }

    /// Maximum-a-posteriori CPTs with a symmetric Dirichlet prior:
    /// `(count + prior) / (row total + prior × bins)`. Rows with no data and
    /// no prior mass are uniform.
    pub fn fit_cpts(&self, data: &[Vec<usize>], prior_count: f64) -> Result<Self> {
        if !(prior_count >= 0.0 && prior_count.is_finite()) {
            return Err(Error::Contract(format!("prior count must be finite and >= 0, got {prior_count}")));
        }
        let mut counts: Vec<Vec<Vec<f64>>> =
            (0..self.len()).map(|i| vec![vec![0.0; self.nodes[i].bins()]; self.row_count(i)]).collect();
        for (r, row) in data.iter().enumerate() {
            if row.len() != self.len() {
                return Err(Error::DataMismatch(format!(
                    "record {r} has {} columns, network has {} nodes",
                    row.len(),
                    self.len()
                )));
            }
            if let Some((i, b)) = row.iter().enumerate().find(|(i, b)| **b >= self.nodes[*i].bins()) {
                return Err(Error::DataMismatch(format!(
                    "record {r}: bin {b} out of range for node `{}`",
                    self.nodes[i].name
                )));
            }
            for i in 0..self.len() {
                counts[i][self.row_index(i, row)][row[i]] += 1.0;
            }
        }
        let nodes = self
            .nodes
            .iter()
            .zip(counts)
            .map(|(n, rows)| {
                let cpt = rows
                    .into_iter()
                    .map(|c| {
                        let k = c.len() as f64;
                        let denom = c.iter().sum::<f64>() + prior_count * k;
                        if denom > 0.0 {
                            c.iter().map(|x| (x + prior_count) / denom).collect()
                        } else {
                            vec![1.0 / k; c.len()]
                        }
                    })
                    .collect();
                Node { cpt, ..n.clone() }
            })
            .collect();
        Self::new(nodes)
    }

    /// Ancestral sampling. Nodes with evidence keep the given value (binned
    /// for their children) and contribute nothing to the log probability.
    pub fn sample<R: Rng + ?Sized>(&self, evidence: &[Option<f64>], rng: &mut R) -> Result<Draw> {
        if !self.is_fitted() {
            return Err(Error::Unfitted("network CPTs have not been fitted".into()));
        }
        if evidence.len() != self.len() {
            return Err(Error::DataMismatch(format!("{} evidence slots for {} nodes", evidence.len(), self.len())));
        }
        let mut bins = vec![0; self.len()];
        let mut values = vec![0.0; self.len()];
        let mut log_prob = 0.0;
        for (i, n) in self.nodes.iter().enumerate() {
            if let Some(v) = evidence[i] {
                bins[i] = n.bin_of(v);
                values[i] = v;
                continue;
            }
            let row = &n.cpt[self.row_index(i, &bins)];
            let b = sample_categorical(row, rng);
            bins[i] = b;
            values[i] = n.sample_in_bin(b, rng);
            log_prob += row[b].ln();
        }
        Ok(Draw { bins, values, log_prob })
    }

    /// Log probability of the bins of every node not marked as evidence.
    pub fn log_prob(&self, bins: &[usize], evidence: &[bool]) -> Result<f64> {
        if !self.is_fitted() {
            return Err(Error::Unfitted("network CPTs have not been fitted".into()));
        }
        if bins.len() != self.len() || evidence.len() != self.len() {
            return Err(Error::DataMismatch(format!("assignment does not cover {} nodes", self.len())));
        }
        let mut lp = 0.0;
        for (i, n) in self.nodes.iter().enumerate() {
            if evidence[i] {
                continue;
            }
            if bins[i] >= n.bins() {
                return Err(Error::DataMismatch(format!("bin {} out of range for node `{}`", bins[i], n.name)));
            }
            lp += n.cpt[self.row_index(i, bins)][bins[i]].ln();
        }
        Ok(lp)
    }
}

fn sample_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding can leave `acc` just below one; fall back to the last
    // bin with positive mass.
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(probs.len() - 1)
}
