use crate::error::Result;
use crate::tree::{HcTree, NodeId};

/// Per-pair LCA sizes of a tree over `n` points.
///
/// `size(i, j)` is the leaf count under the LCA of `i` and `j`;
/// `child_sizes(i, j)` gives the leaf counts of the LCA's two children that
/// contain `i` and `j` respectively. The diagonal holds `1` and `(1, 1)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LcaSizeTable {
    n: usize,
    sizes: Vec<usize>,
    child_sizes: Vec<(usize, usize)>,
    lca: Vec<NodeId>,
}

impl LcaSizeTable {
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn size(&self, i: usize, j: usize) -> usize {
        self.sizes[i * self.n + j]
    }

    #[inline]
    pub fn child_sizes(&self, i: usize, j: usize) -> (usize, usize) {
        self.child_sizes[i * self.n + j]
    }

    #[inline]
    pub fn lca(&self, i: usize, j: usize) -> NodeId {
        self.lca[i * self.n + j]
    }

    /// Σ_{i<j} |T_ij| as an exact integer.
    pub fn pair_size_sum(&self) -> u64 {
        let mut acc = 0u64;
        for i in 0..self.n {
            for j in i + 1..self.n {
                acc += self.size(i, j) as u64;
            }
        }
        acc
    }
}

/// Builds the table with one bottom-up pass; every pair is written exactly
/// once at its LCA, so the cost is O(n²) plus the tree size.
pub fn lca_size_table(tree: &HcTree) -> Result<LcaSizeTable> {
    let n = tree.leaf_count();
    tree.ensure_valid(n)?;
    let sizes_by_node = tree.subtree_sizes();
    let mut sizes = vec![1usize; n * n];
    let mut child_sizes = vec![(1usize, 1usize); n * n];
    let mut lca = vec![NodeId(usize::MAX); n * n];
    let mut below: Vec<Vec<usize>> = vec![Vec::new(); tree.len()];
    for v in tree.postorder() {
        let node = tree.node(v);
        if let Some(id) = node.leaf_id() {
            below[v.0].push(id);
            lca[id * n + id] = v;
            continue;
        }
        let total = sizes_by_node[v.0];
        for (a, &ca) in node.children.iter().enumerate() {
            for &cb in &node.children[a + 1..] {
                let (sa, sb) = (sizes_by_node[ca.0], sizes_by_node[cb.0]);
                for &i in &below[ca.0] {
                    for &j in &below[cb.0] {
                        sizes[i * n + j] = total;
                        sizes[j * n + i] = total;
                        child_sizes[i * n + j] = (sa, sb);
                        child_sizes[j * n + i] = (sb, sa);
                        lca[i * n + j] = v;
                        lca[j * n + i] = v;
                    }
                }
            }
        }
        let mut merged = Vec::with_capacity(total);
        for &c in &node.children {
            merged.append(&mut below[c.0]);
        }
        below[v.0] = merged;
    }
    Ok(LcaSizeTable { n, sizes, child_sizes, lca })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_leaf_case() {
        let t = HcTree::parse("((0,1),2)").unwrap();
        let tab = lca_size_table(&t).unwrap();
        assert_eq!(tab.size(0, 1), 2);
        assert_eq!(tab.size(0, 2), 3);
        assert_eq!(tab.size(1, 2), 3);
        assert_eq!(tab.child_sizes(0, 2), (2, 1));
        assert_eq!(tab.child_sizes(2, 0), (1, 2));
    }

    #[test]
    fn perfect_four() {
        let t = HcTree::parse("((0,1),(2,3))").unwrap();
        let tab = lca_size_table(&t).unwrap();
        assert_eq!(tab.size(0, 1), 2);
        assert_eq!(tab.size(2, 3), 2);
        for i in 0..2 {
            for j in 2..4 {
                assert_eq!(tab.size(i, j), 4);
            }
        }
    }

    #[test]
    fn multiway_child_sizes() {
        let t = HcTree::parse("((0,1),2,(3,4,5))").unwrap();
        let tab = lca_size_table(&t).unwrap();
        assert_eq!(tab.size(0, 3), 6);
        assert_eq!(tab.child_sizes(0, 3), (2, 3));
        assert_eq!(tab.child_sizes(3, 4), (1, 1));
    }

    #[test]
    fn rejects_malformed() {
        assert!(lca_size_table(&HcTree::parse("((0,1),1)").unwrap()).is_err());
    }
}
