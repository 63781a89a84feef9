//! Constant-sketch reduction: balanced edges, the separator edge set `F`,
//! blue/green coloring, contraction to `K(T)` and its star and comb
//! expansions.

mod contract;

pub use contract::{
    comb_parts, contract_to_k, contract_with_edges, dis_sketch, dis_sketch_best, rev_sketch, to_dis_tree, to_rev_tree,
    ContractedTree, KNode, KNodeKind,
};

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::tree::{HcTree, NodeId};

/// Largest accepted granularity for [`build_edge_set_f`].
pub const MAX_EPS: f64 = 1.0 / 12.0;

/// A tree edge, named by its endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct Edge {
    pub parent: NodeId,
    pub child: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SketchStats {
    pub internal_nodes: usize,
    pub max_children: usize,
    pub epsilon: f64,
}

pub fn sketch_stats(tree: &HcTree, eps: f64) -> SketchStats {
    let mut internal_nodes = 0;
    let mut max_children = 0;
    for v in tree.preorder() {
        let node = tree.node(v);
        if !node.is_leaf() {
            internal_nodes += 1;
        }
        max_children = max_children.max(node.children.len());
    }
    SketchStats { internal_nodes, max_children, epsilon: eps }
}

fn require_binary(tree: &HcTree) -> Result<()> {
    if tree.is_binary() {
        Ok(())
    } else {
        Err(Error::NotBinary)
    }
}

/// Nodes of the component of `T − F` rooted at `top`, in preorder, where
/// `cut[v]` marks the child end of every removed edge.
fn component_preorder(tree: &HcTree, top: NodeId, cut: &[bool]) -> Vec<NodeId> {
    let mut out = Vec::new();
    let mut stack = vec![top];
    while let Some(v) = stack.pop() {
        out.push(v);
        for &c in tree.children(v).iter().rev() {
            if !cut[c.0] {
                stack.push(c);
            }
        }
    }
    out
}

/// Leaf counts inside the component, indexed by node.
fn component_sizes(tree: &HcTree, order: &[NodeId], cut: &[bool]) -> Vec<usize> {
    let mut size = vec![0usize; tree.len()];
    for &v in order.iter().rev() {
        size[v.0] = if tree.node(v).is_leaf() {
            1
        } else {
            tree.children(v).iter().filter(|c| !cut[c.0]).map(|c| size[c.0]).sum()
        };
    }
    size
}

/// Walks down from `top`, always into the heavier child, and cuts the edge
/// to the heavier child once the lighter sides seen so far hold a third of
/// the component. Unary nodes (left behind by earlier cuts) are passed
/// through.
fn balanced_edge_in(tree: &HcTree, top: NodeId, cut: &[bool]) -> Edge {
    let order = component_preorder(tree, top, cut);
    let size = component_sizes(tree, &order, cut);
    let m = size[top.0];
    debug_assert!(m >= 2);
    let mut v = top;
    let mut light = 0usize;
    loop {
        let kids: Vec<NodeId> = tree.children(v).iter().copied().filter(|c| !cut[c.0]).collect();
        match kids.len() {
            1 => v = kids[0],
            2 => {
                let (a, b) = (kids[0], kids[1]);
                let heavy = if size[a.0] > size[b.0] || (size[a.0] == size[b.0] && a < b) { a } else { b };
                let other = if heavy == a { b } else { a };
                light += size[other.0];
                if 3 * light >= m {
                    return Edge { parent: v, child: heavy };
                }
                v = heavy;
            }
            _ => unreachable!("walk left a binary component"),
        }
    }
}

/// An edge whose removal leaves two parts of at least `n/3` leaves each.
pub fn find_balanced_edge(tree: &HcTree) -> Result<Edge> {
    require_binary(tree)?;
    let n = tree.leaf_count();
    if n < 3 {
        return Err(Error::TooFewLeaves { needed: 3, got: n });
    }
    Ok(balanced_edge_in(tree, tree.root(), &vec![false; tree.len()]))
}

/// Leaves under `edge.child`, i.e. the size of the lower part of the split.
pub fn split_size(tree: &HcTree, edge: Edge) -> usize {
    tree.subtree_sizes()[edge.child.0]
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= MAX_EPS {
        Ok(())
    } else {
        Err(Error::OutOfRange { name: "eps", value: eps, range: "(0, 1/12]" })
    }
}

/// Separator edges: components are split by balanced edges until each has
/// fewer than `3εn` leaves (or a single leaf).
pub fn build_edge_set_f(tree: &HcTree, eps: f64) -> Result<Vec<Edge>> {
    check_eps(eps)?;
    require_binary(tree)?;
    let n = tree.leaf_count();
    let limit = 3.0 * eps * n as f64;
    let mut cut = vec![false; tree.len()];
    let mut f = Vec::new();
    let mut work = vec![tree.root()];
    while let Some(top) = work.pop() {
        let order = component_preorder(tree, top, &cut);
        let m = component_sizes(tree, &order, &cut)[top.0];
        if m <= 1 || (m as f64) < limit {
            continue;
        }
        let e = balanced_edge_in(tree, top, &cut);
        cut[e.child.0] = true;
        f.push(e);
        work.push(top);
        work.push(e.child);
    }
    f.sort();
    Ok(f)
}

fn cut_marks(tree: &HcTree, f: &[Edge]) -> Result<Vec<bool>> {
    let mut cut = vec![false; tree.len()];
    for e in f {
        if e.child.0 >= tree.len() || tree.parent(e.child) != Some(e.parent) {
            return Err(Error::MalformedTree(format!("{:?} -> {:?} is not an edge", e.parent, e.child)));
        }
        cut[e.child.0] = true;
    }
    Ok(cut)
}

/// Leaf sets of the components of `T − F`.
pub fn components(tree: &HcTree, f: &[Edge]) -> Result<Vec<Vec<usize>>> {
    let cut = cut_marks(tree, f)?;
    let tops = std::iter::once(tree.root()).chain(f.iter().map(|e| e.child));
    Ok(tops
        .map(|top| {
            component_preorder(tree, top, &cut)
                .into_iter()
                .filter_map(|v| tree.node(v).leaf_id())
                .collect()
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub blue: BTreeSet<NodeId>,
    pub green: BTreeSet<NodeId>,
}

impl Coloring {
    pub fn is_colored(&self, v: NodeId) -> bool {
        self.blue.contains(&v) || self.green.contains(&v)
    }
}

/// Blue: the root and every endpoint of an `F` edge. Green: any other node
/// with two children whose subtrees both contain a blue node.
pub fn color_nodes(tree: &HcTree, f: &[Edge]) -> Result<Coloring> {
    cut_marks(tree, f)?;
    let mut blue = BTreeSet::new();
    blue.insert(tree.root());
    for e in f {
        blue.insert(e.parent);
        blue.insert(e.child);
    }
    let mut has_blue = vec![false; tree.len()];
    let mut green = BTreeSet::new();
    for v in tree.postorder() {
        let kids = tree.children(v);
        has_blue[v.0] = blue.contains(&v) || kids.iter().any(|c| has_blue[c.0]);
        if !blue.contains(&v) && kids.len() == 2 && kids.iter().all(|c| has_blue[c.0]) {
            green.insert(v);
        }
    }
    Ok(Coloring { blue, green })
}

/// Number of leaves (degree ≤ 1) and of nodes with degree ≥ 3 in an
/// unrooted tree given as a parent array.
pub fn degree_census(parent: &[Option<usize>]) -> (usize, usize) {
    let mut degree = vec![0usize; parent.len()];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            degree[v] += 1;
            degree[p] += 1;
        }
    }
    let leaves = degree.iter().filter(|&&d| d <= 1).count();
    let high = degree.iter().filter(|&&d| d >= 3).count();
    (leaves, high)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{random_arbitrary_tree, random_binary_tree};
    use crate::rng::seeded;

    fn perfect(depth: u32) -> HcTree {
        fn rec(lo: usize, hi: usize) -> String {
            if hi - lo == 1 {
                lo.to_string()
            } else {
                let mid = (lo + hi) / 2;
                format!("({},{})", rec(lo, mid), rec(mid, hi))
            }
        }
        HcTree::parse(&rec(0, 1 << depth)).unwrap()
    }

    fn left_caterpillar(n: usize) -> HcTree {
        HcTree::caterpillar(&(0..n).collect::<Vec<_>>())
    }

    fn split_ok(n: usize, s: usize) -> bool {
        3 * s >= n && 3 * s <= 2 * n
    }

    #[test]
    fn balanced_edge_examples() {
        let t = perfect(2);
        let e = find_balanced_edge(&t).unwrap();
        assert_eq!(e.parent, t.root());
        assert_eq!(split_size(&t, e), 2);

        let t = HcTree::parse("((0,1),2)").unwrap();
        let e = find_balanced_edge(&t).unwrap();
        assert_eq!(t.leaves_under(e.child), vec![0, 1]);

        let t = left_caterpillar(6);
        let sizes = t.subtree_sizes();
        let valid: Vec<NodeId> = t
            .preorder()
            .into_iter()
            .filter(|&v| v != t.root() && split_ok(6, sizes[v.0]))
            .collect();
        assert!(!valid.is_empty());
        assert!(valid.contains(&find_balanced_edge(&t).unwrap().child));
    }

    #[test]
    fn balanced_edge_errors() {
        assert!(matches!(find_balanced_edge(&HcTree::parse("(0,1)").unwrap()), Err(Error::TooFewLeaves { .. })));
        assert!(matches!(find_balanced_edge(&HcTree::star(4)), Err(Error::NotBinary)));
    }

    #[test]
    fn balanced_edge_random() {
        let mut rng = seeded(5);
        for n in 3..120 {
            let t = random_binary_tree(n, &mut rng);
            let e = find_balanced_edge(&t).unwrap();
            assert!(split_ok(n, split_size(&t, e)), "n {n}");
        }
    }

    fn assert_components(t: &HcTree, eps: f64) {
        let n = t.leaf_count() as f64;
        let f = build_edge_set_f(t, eps).unwrap();
        for c in components(t, &f).unwrap() {
            let m = c.len() as f64;
            assert!(m >= eps * n && m <= 3.0 * eps * n, "component {m} eps {eps} n {n}");
        }
        assert!(f.len() as f64 <= 1.0 / eps);
    }

    #[test]
    fn f_set_examples() {
        assert_components(&perfect(6), 1.0 / 16.0);
        assert_components(&left_caterpillar(48), 1.0 / 16.0);
        assert!(build_edge_set_f(&left_caterpillar(10), 1.0 / 3.0).is_err());
        assert!(build_edge_set_f(&HcTree::star(5), 1.0 / 16.0).is_err());
    }

    #[test]
    fn f_set_random() {
        let mut rng = seeded(6);
        for n in [40, 100, 200] {
            for _ in 0..10 {
                let t = random_binary_tree(n, &mut rng);
                assert_components(&t, 1.0 / 16.0);
                assert_components(&t, 1.0 / 24.0);
            }
        }
    }

    #[test]
    fn coloring_examples() {
        let t = perfect(2);
        let c = color_nodes(&t, &[]).unwrap();
        assert_eq!(c.blue, BTreeSet::from([t.root()]));
        assert!(c.green.is_empty());

        let left = t.children(t.root())[0];
        let c = color_nodes(&t, &[Edge { parent: t.root(), child: left }]).unwrap();
        assert_eq!(c.blue, BTreeSet::from([t.root(), left]));
        assert!(c.green.is_empty());

        // ((((0,1),2),((3,4),5)),6): cut (0,1) and (3,4) below their parents.
        let t = HcTree::parse("((((0,1),2),((3,4),5)),6)").unwrap();
        let join = t.children(t.root())[0];
        let [a, b] = [t.children(join)[0], t.children(join)[1]];
        let f = [
            Edge { parent: a, child: t.children(a)[0] },
            Edge { parent: b, child: t.children(b)[0] },
        ];
        let c = color_nodes(&t, &f).unwrap();
        assert!(c.green.contains(&join));
        assert!(c.blue.is_disjoint(&c.green));

        let bogus = Edge { parent: t.root(), child: t.children(a)[0] };
        assert!(color_nodes(&t, &[bogus]).is_err());
    }

    #[test]
    fn degree_three_bound() {
        let mut rng = seeded(7);
        for nodes in 1..300 {
            let (leaves, high) = degree_census(&random_arbitrary_tree(nodes, &mut rng));
            assert!(high < leaves.max(1));
        }
        // star on 5 vertices: 4 leaves, one centre of degree 4
        assert_eq!(degree_census(&[None, Some(0), Some(0), Some(0), Some(0)]), (4, 1));
    }

    #[test]
    fn stats() {
        let s = sketch_stats(&HcTree::star(7), 0.1);
        assert_eq!((s.internal_nodes, s.max_children), (1, 7));
        let mut rng = seeded(8);
        let s = sketch_stats(&random_binary_tree(30, &mut rng), 0.1);
        assert_eq!((s.internal_nodes, s.max_children), (29, 2));
    }
}
