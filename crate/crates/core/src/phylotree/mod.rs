//! Rooted phylogenies: Newick parsing, tree samples, pruning, and
//! Brownian-motion covariance construction.

mod newick;

pub use newick::{parse_newick, parse_tree_sample, TreeSample};

use std::collections::{BTreeMap, BTreeSet};
use std::io;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

use crate::rng::stream_rng;

#[derive(Debug, Error)]
pub enum TreeError {
    #[error("parse error at character {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("line {line}: {source}")]
    AtLine {
        line: usize,
        #[source]
        source: Box<TreeError>,
    },
    #[error("duplicate tip label `{0}`")]
    DuplicateTip(String),
    #[error("tree has {0} tips; at least 2 required")]
    TooFewTips(usize),
    #[error("unknown taxa: {}", .0.join(", "))]
    UnknownTaxa(Vec<String>),
    #[error("no trees in input")]
    NoTrees,
    #[error("invalid tree: {0}")]
    Invalid(String),
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct Node {
    pub(crate) parent: Option<usize>,
    pub(crate) children: Vec<usize>,
    pub(crate) label: Option<String>,
    /// `None` only at the root; a root length is preserved for serialization
    /// but contributes to no path.
    pub(crate) length: Option<f64>,
}

/// A rooted tree with branch lengths. Nodes are stored in preorder: the root
/// is index 0 and every parent precedes its children.
#[derive(Clone, Debug, PartialEq)]
pub struct Phylogeny {
    nodes: Vec<Node>,
}

impl Phylogeny {
    pub(crate) fn from_arena(nodes: Vec<Node>) -> Result<Self, TreeError> {
        debug_assert!(nodes.iter().enumerate().all(|(id, n)| match n.parent {
            None => id == 0,
            Some(p) => p < id,
        }));
        let tree = Self { nodes };
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        let mut tips = 0usize;
        for node in &tree.nodes {
            if !node.children.is_empty() {
                continue;
            }
            tips += 1;
            let label = node
                .label
                .as_deref()
                .ok_or_else(|| TreeError::Invalid("unlabeled tip".into()))?;
            if !seen.insert(label) {
                return Err(TreeError::DuplicateTip(label.into()));
            }
        }
        if tips < 2 {
            return Err(TreeError::TooFewTips(tips));
        }
        for (id, node) in tree.nodes.iter().enumerate() {
            if id > 0 {
                let length = node
                    .length
                    .ok_or_else(|| TreeError::Invalid("missing branch length".into()))?;
                // Also rejects NaN, which fails every comparison.
                if length < 0.0 || length.is_nan() {
                    return Err(TreeError::Invalid(format!(
                        "negative branch length {length}"
                    )));
                }
            }
        }
        Ok(tree)
    }

    pub fn from_newick(text: &str) -> Result<Self, TreeError> {
        newick::parse_newick(text)
    }

    pub fn to_newick(&self) -> String {
        newick::serialize(self)
    }

    pub(crate) fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    fn tip_ids(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&id| self.nodes[id].children.is_empty())
            .collect()
    }

    /// Node count; ids run 0..n_nodes() in preorder with the root at 0.
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    /// `None` exactly at the root.
    pub fn parent(&self, id: usize) -> Option<usize> {
        self.nodes[id].parent
    }

    /// Child ids in left-to-right order; empty for tips.
    pub fn children(&self, id: usize) -> &[usize] {
        &self.nodes[id].children
    }

    pub fn label(&self, id: usize) -> Option<&str> {
        self.nodes[id].label.as_deref()
    }

    /// Branch length above the node; `None` only at the root.
    pub fn branch_length(&self, id: usize) -> Option<f64> {
        self.nodes[id].length
    }

    pub fn n_tips(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }

    /// Tip labels in left-to-right (preorder) order.
    pub fn tip_labels(&self) -> Vec<&str> {
        self.tip_ids()
            .into_iter()
            .map(|id| self.nodes[id].label.as_deref().expect("tips are labeled"))
            .collect()
    }

    /// Root-to-node path lengths, indexed by node id.
    pub fn depths(&self) -> Vec<f64> {
        let mut depth = vec![0.0; self.nodes.len()];
        for id in 1..self.nodes.len() {
            let parent = self.nodes[id].parent.expect("non-root has a parent");
            depth[id] = depth[parent] + self.nodes[id].length.expect("non-root has a length");
        }
        depth
    }

    /// Maximum root-to-tip distance.
    pub fn height(&self) -> f64 {
        let depth = self.depths();
        self.tip_ids()
            .into_iter()
            .map(|id| depth[id])
            .fold(0.0, f64::max)
    }

    /// Restricts the tree to `keep`, suppressing internal nodes left with one
    /// child by adding their length onto the child. The root survives even
    /// when a single child remains, so root-to-tip distances are conserved.
    pub fn prune(&self, keep: &[String]) -> Result<Phylogeny, TreeError> {
        let keep_set: BTreeSet<&str> = keep.iter().map(String::as_str).collect();
        let tip_set: BTreeSet<&str> = self.tip_labels().into_iter().collect();
        let missing: Vec<String> = keep_set
            .difference(&tip_set)
            .map(|s| s.to_string())
            .collect();
        if !missing.is_empty() {
            return Err(TreeError::UnknownTaxa(missing));
        }
        if keep_set.len() < 2 {
            return Err(TreeError::TooFewTips(keep_set.len()));
        }

        let mut kept = vec![0usize; self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let node = &self.nodes[id];
            kept[id] = if node.children.is_empty() {
                usize::from(node.label.as_deref().is_some_and(|l| keep_set.contains(l)))
            } else {
                node.children.iter().map(|&c| kept[c]).sum()
            };
        }

        let mut nodes = Vec::new();
        self.copy_pruned(0, None, 0.0, &kept, &mut nodes);
        Phylogeny::from_arena(nodes)
    }

    fn copy_pruned(
        &self,
        old: usize,
        parent: Option<usize>,
        extra: f64,
        kept: &[usize],
        out: &mut Vec<Node>,
    ) -> usize {
        let node = &self.nodes[old];
        let surviving: Vec<usize> = node
            .children
            .iter()
            .copied()
            .filter(|&c| kept[c] > 0)
            .collect();
        if parent.is_some() && surviving.len() == 1 {
            let carried = extra + node.length.expect("non-root has a length");
            return self.copy_pruned(surviving[0], parent, carried, kept, out);
        }
        let id = out.len();
        let length = if extra == 0.0 {
            node.length
        } else {
            node.length.map(|l| l + extra)
        };
        out.push(Node {
            parent,
            children: Vec::new(),
            label: node.label.clone(),
            length,
        });
        for &child in &surviving {
            let new_child = self.copy_pruned(child, Some(id), 0.0, kept, out);
            out[id].children.push(new_child);
        }
        id
    }

    /// Brownian-motion covariance: entry (i, j) is the branch length shared
    /// by the root-to-tip paths of tips i and j; the diagonal holds
    /// root-to-tip distances.
    pub fn vcv(&self) -> PhyloCovariance {
        let tips = self.tip_ids();
        let n = tips.len();
        let row_of: BTreeMap<usize, usize> = tips
            .iter()
            .enumerate()
            .map(|(row, &id)| (id, row))
            .collect();
        let depth = self.depths();
        let mut c = DMatrix::zeros(n, n);
        for (&id, &row) in &row_of {
            c[(row, row)] = depth[id];
        }

        // Reverse preorder visits children before parents; at each internal
        // node, pairs drawn from different child subtrees share exactly the
        // node's depth.
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for id in (0..self.nodes.len()).rev() {
            let node = &self.nodes[id];
            if node.children.is_empty() {
                rows[id] = vec![row_of[&id]];
                continue;
            }
            let groups: Vec<Vec<usize>> = node
                .children
                .iter()
                .map(|&child| std::mem::take(&mut rows[child]))
                .collect();
            for (gi, a) in groups.iter().enumerate() {
                for b in &groups[gi + 1..] {
                    for &i in a {
                        for &j in b {
                            c[(i, j)] = depth[id];
                            c[(j, i)] = depth[id];
                        }
                    }
                }
            }
            rows[id] = groups.into_iter().flatten().collect();
        }

        let taxa = tips
            .into_iter()
            .map(|id| self.nodes[id].label.clone().expect("tips are labeled"))
            .collect();
        PhyloCovariance::new(taxa, c).expect("tree-derived covariance is square")
    }

    /// Returns a copy with every tip label passed through `f`. Fails if the
    /// renaming makes labels collide.
    pub fn rename_tips(&self, f: impl Fn(&str) -> String) -> Result<Phylogeny, TreeError> {
        let mut nodes = self.nodes.clone();
        for node in &mut nodes {
            if node.children.is_empty() {
                if let Some(label) = &node.label {
                    node.label = Some(f(label));
                }
            }
        }
        Phylogeny::from_arena(nodes)
    }
}

/// Trims surrounding whitespace and reads underscores as spaces, the usual
/// Newick convention, so tip labels and table rows can be matched exactly.
pub fn canonical_taxon(name: &str) -> String {
    name.trim().replace('_', " ")
}

/// Symmetric matrix of shared root-to-tip path lengths, with taxon order.
#[derive(Clone, Debug, PartialEq)]
pub struct PhyloCovariance {
    taxa: Vec<String>,
    c: DMatrix<f64>,
}

impl PhyloCovariance {
    pub fn new(taxa: Vec<String>, c: DMatrix<f64>) -> Result<Self, TreeError> {
        if c.nrows() != taxa.len() || c.ncols() != taxa.len() {
            return Err(TreeError::Invalid(format!(
                "covariance is {}x{} for {} taxa",
                c.nrows(),
                c.ncols(),
                taxa.len()
            )));
        }
        let unique: BTreeSet<&str> = taxa.iter().map(String::as_str).collect();
        if unique.len() != taxa.len() {
            return Err(TreeError::Invalid("duplicate taxon in covariance".into()));
        }
        Ok(Self { taxa, c })
    }

    /// The non-phylogenetic covariance: independent unit-variance taxa.
    pub fn identity(taxa: Vec<String>) -> Result<Self, TreeError> {
        let n = taxa.len();
        Self::new(taxa, DMatrix::identity(n, n))
    }

    pub fn taxa(&self) -> &[String] {
        &self.taxa
    }

    pub fn n(&self) -> usize {
        self.taxa.len()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// Restriction to `taxa`, in the order given.
    pub fn submatrix(&self, taxa: &[String]) -> Result<PhyloCovariance, TreeError> {
        let index: BTreeMap<&str, usize> = self
            .taxa
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let missing: Vec<String> = taxa
            .iter()
            .filter(|t| !index.contains_key(t.as_str()))
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(TreeError::UnknownTaxa(missing));
        }
        let picks: Vec<usize> = taxa.iter().map(|t| index[t.as_str()]).collect();
        let n = picks.len();
        let mut c = DMatrix::zeros(n, n);
        for (i, &pi) in picks.iter().enumerate() {
            for (j, &pj) in picks.iter().enumerate() {
                c[(i, j)] = self.c[(pi, pj)];
            }
        }
        Self::new(taxa.to_vec(), c)
    }

    /// CSV with a taxon header row and a taxon first column.
    pub fn to_csv<W: io::Write>(&self, writer: W) -> Result<(), io::Error> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec![String::new()];
        header.extend(self.taxa.iter().cloned());
        w.write_record(&header).map_err(io::Error::other)?;
        for (i, taxon) in self.taxa.iter().enumerate() {
            let mut record = vec![taxon.clone()];
            record.extend((0..self.taxa.len()).map(|j| format!("{}", self.c[(i, j)])));
            w.write_record(&record).map_err(io::Error::other)?;
        }
        w.flush()
    }
}

struct Builder {
    nodes: Vec<Node>,
}

impl Builder {
    fn new() -> Self {
        Self { nodes: Vec::new() }
    }

    fn add(&mut self, parent: Option<usize>, label: Option<String>, length: Option<f64>) -> usize {
        let id = self.nodes.len();
        if let Some(p) = parent {
            self.nodes[p].children.push(id);
        }
        self.nodes.push(Node {
            parent,
            children: Vec::new(),
            label,
            length,
        });
        id
    }
}

/// Star topology: every tip hangs off the root with the same branch length.
pub fn star_tree(labels: &[String], branch: f64) -> Result<Phylogeny, TreeError> {
    let mut b = Builder::new();
    let root = b.add(None, None, None);
    for label in labels {
        b.add(Some(root), Some(label.clone()), Some(branch));
    }
    Phylogeny::from_arena(b.nodes)
}

/// Fully balanced binary tree with 2^depth tips labeled `t0..`, every branch
/// of the same length.
pub fn balanced_tree(depth: u32, branch: f64) -> Result<Phylogeny, TreeError> {
    fn grow(b: &mut Builder, parent: Option<usize>, depth: u32, branch: f64, next: &mut usize) {
        let length = parent.map(|_| branch);
        if depth == 0 {
            let label = format!("t{next}");
            *next += 1;
            b.add(parent, Some(label), length);
            return;
        }
        let id = b.add(parent, None, length);
        grow(b, Some(id), depth - 1, branch, next);
        grow(b, Some(id), depth - 1, branch, next);
    }
    let mut b = Builder::new();
    let mut next = 0;
    grow(&mut b, None, depth, branch, &mut next);
    Phylogeny::from_arena(b.nodes)
}

/// Random binary topology over `n_tips` labels `t0..`, with branch lengths
/// drawn as dyadic rationals k/256, k in 1..=512. Dyadic lengths make path
/// sums exact in binary floating point, so pruning commutes with covariance
/// construction bit for bit.
pub fn random_tree(n_tips: usize, seed: u64) -> Phylogeny {
    assert!(n_tips >= 2, "need at least 2 tips");
    fn split(
        b: &mut Builder,
        parent: Option<usize>,
        length: Option<f64>,
        labels: &[usize],
        rng: &mut impl Rng,
    ) -> usize {
        if labels.len() == 1 {
            return b.add(parent, Some(format!("t{}", labels[0])), length);
        }
        let id = b.add(parent, None, length);
        let cut = rng.random_range(1..labels.len());
        let (lo, hi) = labels.split_at(cut);
        let left = rng.random_range(1..=512) as f64 / 256.0;
        split(b, Some(id), Some(left), lo, rng);
        let right = rng.random_range(1..=512) as f64 / 256.0;
        split(b, Some(id), Some(right), hi, rng);
        id
    }
    let mut rng = stream_rng(seed, "randtree", 0, 0);
    let labels: Vec<usize> = (0..n_tips).collect();
    let mut b = Builder::new();
    split(&mut b, None, None, &labels, &mut rng);
    Phylogeny::from_arena(b.nodes).expect("generated tree is valid")
}

/// Random binary topology with node heights shrinking from 1 at the root to
/// 0 at every tip, so all tips are equidistant from the root.
pub fn random_ultrametric_tree(n_tips: usize, seed: u64) -> Phylogeny {
    assert!(n_tips >= 2, "need at least 2 tips");
    fn split(
        b: &mut Builder,
        parent: Option<usize>,
        parent_height: f64,
        height: f64,
        labels: &[usize],
        rng: &mut impl Rng,
    ) -> usize {
        let length = parent.map(|_| parent_height - height);
        if labels.len() == 1 {
            return b.add(parent, Some(format!("t{}", labels[0])), length);
        }
        let id = b.add(parent, None, length);
        let cut = rng.random_range(1..labels.len());
        let (lo, hi) = labels.split_at(cut);
        for part in [lo, hi] {
            let child_height = if part.len() == 1 {
                0.0
            } else {
                height * rng.random_range(0.05..0.95)
            };
            split(b, Some(id), height, child_height, part, rng);
        }
        id
    }
    let mut rng = stream_rng(seed, "ultratree", 0, 0);
    let labels: Vec<usize> = (0..n_tips).collect();
    let mut b = Builder::new();
    split(&mut b, None, 1.0, 1.0, &labels, &mut rng);
    Phylogeny::from_arena(b.nodes).expect("generated tree is valid")
}
