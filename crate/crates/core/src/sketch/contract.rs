//! `K(T)` and its expansions back into evaluable trees.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::{build_edge_set_f, color_nodes, Coloring, Edge};
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::objective::eval_dissimilarity;
use crate::rng::{child, Rng};
use crate::scalar::Weight;
use crate::tree::{HcTree, NodeId, TreeBuilder};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum KNodeKind {
    /// A blue node; `leaf` is set when the node is a data point.
    Blue { leaf: Option<usize> },
    Green,
    Contracted { bag: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct KNode {
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    pub kind: KNodeKind,
    /// Original tree nodes this node stands for.
    pub provenance: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContractedTree {
    nodes: Vec<KNode>,
    root: usize,
    n: usize,
}

impl ContractedTree {
    pub fn nodes(&self) -> &[KNode] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bags(&self) -> Vec<&[usize]> {
        self.nodes
            .iter()
            .filter_map(|k| match &k.kind {
                KNodeKind::Contracted { bag } => Some(bag.as_slice()),
                _ => None,
            })
            .collect()
    }

    fn is_contracted(&self, x: usize) -> bool {
        matches!(self.nodes[x].kind, KNodeKind::Contracted { .. })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedContraction(m));
        if self.root >= self.nodes.len() {
            return bad("root out of range".into());
        }
        if !matches!(self.nodes[self.root].kind, KNodeKind::Blue { .. }) || self.nodes[self.root].parent.is_some() {
            return bad("root must be a parentless blue node".into());
        }
        let mut seen = vec![false; self.n];
        for (x, k) in self.nodes.iter().enumerate() {
            for &c in &k.children {
                if c >= self.nodes.len() || self.nodes[c].parent != Some(x) {
                    return bad(format!("child link {x} -> {c} is inconsistent"));
                }
                if self.is_contracted(x) && self.is_contracted(c) {
                    return bad(format!("adjacent contracted nodes {x} and {c}"));
                }
            }
            if let Some(p) = k.parent {
                if p >= self.nodes.len() || !self.nodes[p].children.contains(&x) {
                    return bad(format!("parent link {x} -> {p} is inconsistent"));
                }
            } else if x != self.root {
                return bad(format!("node {x} is detached"));
            }
            let ids: &[usize] = match &k.kind {
                KNodeKind::Blue { leaf: Some(id) } => std::slice::from_ref(id),
                KNodeKind::Contracted { bag } => bag,
                _ => &[],
            };
            for &id in ids {
                if id >= self.n || seen[id] {
                    return bad(format!("data point {id} is out of range or repeated"));
                }
                seen[id] = true;
            }
        }
        if let Some(id) = seen.iter().position(|s| !s) {
            return bad(format!("data point {id} is missing"));
        }
        Ok(())
    }
}

/// Contraction with an explicit separator set.
pub fn contract_with_edges(tree: &HcTree, f: &[Edge]) -> Result<ContractedTree> {
    let coloring = color_nodes(tree, f)?;
    Ok(contract_colored(tree, &coloring))
}

/// `K(T)` for the separator set built at granularity `eps`.
pub fn contract_to_k(tree: &HcTree, eps: f64) -> Result<ContractedTree> {
    let f = build_edge_set_f(tree, eps)?;
    contract_with_edges(tree, &f)
}

fn contract_colored(tree: &HcTree, coloring: &Coloring) -> ContractedTree {
    let mut nodes: Vec<KNode> = Vec::new();
    let mut map = vec![usize::MAX; tree.len()];
    for v in tree.preorder() {
        let node = tree.node(v);
        let parent_k = node.parent.map(|p| map[p.0]);
        let colored = coloring.is_colored(v);
        let parent_colored = node.parent.is_none_or(|p| coloring.is_colored(p));
        let x = if colored || parent_colored {
            let kind = if coloring.blue.contains(&v) {
                KNodeKind::Blue { leaf: node.leaf_id() }
            } else if colored {
                KNodeKind::Green
            } else {
                KNodeKind::Contracted { bag: Vec::new() }
            };
            nodes.push(KNode { parent: parent_k, children: Vec::new(), kind, provenance: Vec::new() });
            let x = nodes.len() - 1;
            if let Some(p) = parent_k {
                nodes[p].children.push(x);
            }
            x
        } else {
            parent_k.expect("uncolored nodes have a parent")
        };
        map[v.0] = x;
        nodes[x].provenance.push(v);
        if !colored {
            if let (Some(id), KNodeKind::Contracted { bag }) = (node.leaf_id(), &mut nodes[x].kind) {
                bag.push(id);
            }
        }
    }
    for k in &mut nodes {
        if let KNodeKind::Contracted { bag } = &mut k.kind {
            bag.sort_unstable();
        }
    }
    ContractedTree { nodes, root: 0, n: tree.leaf_count() }
}

/// Star expansion: each contracted node keeps its colored children and gains
/// one auxiliary child holding its bag.
pub fn to_rev_tree(k: &ContractedTree) -> Result<HcTree> {
    k.validate()?;
    let mut b = TreeBuilder::new();
    let root = rev_rec(k, k.root, &mut b);
    Ok(b.finish(root).normalized())
}

fn rev_rec(k: &ContractedTree, x: usize, b: &mut TreeBuilder) -> NodeId {
    let node = &k.nodes[x];
    if let KNodeKind::Blue { leaf: Some(id) } = node.kind {
        return b.leaf(id);
    }
    let mut kids: Vec<NodeId> = node.children.iter().map(|&c| rev_rec(k, c, b)).collect();
    if let KNodeKind::Contracted { bag } = &node.kind {
        if !bag.is_empty() {
            let leaves = bag.iter().map(|&id| b.leaf(id)).collect();
            kids.push(b.auxiliary(leaves));
        }
    }
    b.internal(kids)
}

/// Number of comb teeth for granularity `eps`.
pub fn comb_parts(eps: f64) -> usize {
    (1.0 / eps - 1e-9).ceil().max(1.0) as usize
}

/// Comb expansion: each bag is shuffled and dealt round-robin into
/// `⌈1/ε⌉` parts; every part hangs as an auxiliary star off a new node
/// spliced on the edge above the contracted node.
pub fn to_dis_tree(k: &ContractedTree, eps: f64, rng: &mut Rng) -> Result<HcTree> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::OutOfRange { name: "eps", value: eps, range: "(0, 1]" });
    }
    k.validate()?;
    let q = comb_parts(eps);
    let mut b = TreeBuilder::new();
    let root = dis_rec(k, k.root, q, rng, &mut b);
    Ok(b.finish(root).normalized())
}

fn dis_rec(k: &ContractedTree, x: usize, q: usize, rng: &mut Rng, b: &mut TreeBuilder) -> NodeId {
    let node = &k.nodes[x];
    if let KNodeKind::Blue { leaf: Some(id) } = node.kind {
        return b.leaf(id);
    }
    let kids: Vec<NodeId> = node.children.iter().map(|&c| dis_rec(k, c, q, rng, b)).collect();
    let mut cur = b.internal(kids);
    if let KNodeKind::Contracted { bag } = &node.kind {
        let mut shuffled = bag.clone();
        shuffled.shuffle(rng);
        let parts = q.min(shuffled.len());
        for i in (0..parts).rev() {
            let leaves = shuffled.iter().skip(i).step_by(parts).map(|&id| b.leaf(id)).collect();
            let tooth = b.auxiliary(leaves);
            cur = b.internal(vec![tooth, cur]);
        }
    }
    cur
}

/// Star sketch of `tree` at granularity `eps`.
pub fn rev_sketch(tree: &HcTree, eps: f64) -> Result<HcTree> {
    to_rev_tree(&contract_to_k(tree, eps)?)
}

/// Comb sketch: separators at granularity `ε²`, combs with `⌈1/ε⌉` teeth.
pub fn dis_sketch(tree: &HcTree, eps: f64, rng: &mut Rng) -> Result<HcTree> {
    to_dis_tree(&contract_to_k(tree, eps * eps)?, eps, rng)
}

/// Best comb sketch over `samples` seeds derived from `seed`, by
/// dissimilarity on `inst`. Ties go to the lowest sample index.
pub fn dis_sketch_best<W: Weight>(
    inst: &Instance<W>,
    tree: &HcTree,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<(HcTree, W)> {
    let k = contract_to_k(tree, eps * eps)?;
    let scored: Vec<(usize, HcTree, W)> = (0..samples.max(1))
        .into_par_iter()
        .map(|i| {
            let t = to_dis_tree(&k, eps, &mut child(seed, i as u64))?;
            let v = eval_dissimilarity(inst, &t)?;
            Ok((i, t, v))
        })
        .collect::<Result<_>>()?;
    let (_, t, v) = scored
        .into_iter()
        .reduce(|a, b| if b.2 > a.2 { b } else { a })
        .expect("at least one sample");
    Ok((t, v))
}
