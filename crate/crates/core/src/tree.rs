//! Arena-backed hierarchical clustering trees.
//!
//! Leaves carry data-point ids `0..n`. Internal nodes may have any arity;
//! auxiliary nodes are star centres whose children are all leaves. Child
//! order is kept for deterministic serialization but never affects an
//! objective.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Internal,
    Leaf(usize),
    Auxiliary,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub parent: Option<NodeId>,
    pub children: Vec<NodeId>,
    pub kind: NodeKind,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        matches!(self.kind, NodeKind::Leaf(_))
    }

    pub fn leaf_id(&self) -> Option<usize> {
        match self.kind {
            NodeKind::Leaf(id) => Some(id),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HcTree {
    nodes: Vec<Node>,
    root: NodeId,
}

/// A broken tree invariant, reported by [`HcTree::validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    LeafOutOfRange { node: NodeId, id: usize },
    DuplicateLeaf { id: usize },
    MissingLeaf { id: usize },
    Arity { node: NodeId, children: usize },
    AuxiliaryNonLeafChild { node: NodeId, child: NodeId },
    LeafHasChildren { node: NodeId },
    ParentMismatch { node: NodeId },
    RootHasParent,
    Unreachable { node: NodeId },
    Cycle { node: NodeId },
    DanglingRef { node: NodeId },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::LeafOutOfRange { node, id } => {
                write!(f, "leaf id {id} at node {} out of range", node.0)
            }
            Violation::DuplicateLeaf { id } => write!(f, "leaf id {id} appears more than once"),
            Violation::MissingLeaf { id } => write!(f, "leaf id {id} missing"),
            Violation::Arity { node, children } => {
                write!(f, "non-leaf node {} has {children} children (need >= 2)", node.0)
            }
            Violation::AuxiliaryNonLeafChild { node, child } => write!(
                f,
                "auxiliary node {} has non-leaf child {}",
                node.0, child.0
            ),
            Violation::LeafHasChildren { node } => write!(f, "leaf node {} has children", node.0),
            Violation::ParentMismatch { node } => {
                write!(f, "node {} disagrees with its parent's child list", node.0)
            }
            Violation::RootHasParent => write!(f, "root has a parent"),
            Violation::Unreachable { node } => write!(f, "node {} unreachable from root", node.0),
            Violation::Cycle { node } => write!(f, "cycle through node {}", node.0),
            Violation::DanglingRef { node } => write!(f, "node {} references a missing node", node.0),
        }
    }
}

/// Incremental construction; children must be added before parents.
#[derive(Debug, Default, Clone)]
pub struct TreeBuilder {
    nodes: Vec<Node>,
}

impl TreeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn leaf(&mut self, id: usize) -> NodeId {
        self.push(NodeKind::Leaf(id), Vec::new())
    }

    pub fn internal(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(NodeKind::Internal, children)
    }

    pub fn auxiliary(&mut self, children: Vec<NodeId>) -> NodeId {
        self.push(NodeKind::Auxiliary, children)
    }

    pub fn push(&mut self, kind: NodeKind, children: Vec<NodeId>) -> NodeId {
        let id = NodeId(self.nodes.len());
        for &c in &children {
            self.nodes[c.0].parent = Some(id);
        }
        self.nodes.push(Node { parent: None, children, kind });
        id
    }

    pub fn finish(self, root: NodeId) -> HcTree {
        HcTree { nodes: self.nodes, root }
    }
}

impl HcTree {
    /// Raw constructor; the caller is responsible for consistency
    /// (see [`HcTree::validate`]).
    pub fn from_parts(nodes: Vec<Node>, root: NodeId) -> Self {
        Self { nodes, root }
    }

    pub fn single_leaf(id: usize) -> Self {
        let mut b = TreeBuilder::new();
        let r = b.leaf(id);
        b.finish(r)
    }

    /// Root with all `n` leaves as direct children (a bare leaf for n = 1).
    pub fn star(n: usize) -> Self {
        if n == 1 {
            return Self::single_leaf(0);
        }
        let mut b = TreeBuilder::new();
        let leaves = (0..n).map(|i| b.leaf(i)).collect();
        let r = b.internal(leaves);
        b.finish(r)
    }

    /// Caterpillar `(order[0], (order[1], (... (order[m-2], order[m-1]))))`.
    pub fn caterpillar(order: &[usize]) -> Self {
        assert!(!order.is_empty(), "caterpillar needs a point");
        let mut b = TreeBuilder::new();
        let mut acc = b.leaf(order[order.len() - 1]);
        for &p in order[..order.len() - 1].iter().rev() {
            let l = b.leaf(p);
            acc = b.internal(vec![l, acc]);
        }
        b.finish(acc)
    }

    /// Copies this tree into `b` with every leaf id passed through `relabel`,
    /// returning the copied root.
    pub fn copy_into(&self, b: &mut TreeBuilder, relabel: &dyn Fn(usize) -> usize) -> NodeId {
        self.copy_rec(self.root, b, relabel)
    }

    fn copy_rec(&self, v: NodeId, b: &mut TreeBuilder, relabel: &dyn Fn(usize) -> usize) -> NodeId {
        let node = &self.nodes[v.0];
        match node.kind {
            NodeKind::Leaf(id) => b.leaf(relabel(id)),
            kind => {
                let kids = node.children.iter().map(|&c| self.copy_rec(c, b, relabel)).collect();
                b.push(kind, kids)
            }
        }
    }

    /// Parses the parenthesized text format.
    pub fn parse(text: &str) -> Result<Self> {
        text.parse()
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id.0]
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

    pub fn children(&self, id: NodeId) -> &[NodeId] {
        &self.nodes[id.0].children
    }

    pub fn parent(&self, id: NodeId) -> Option<NodeId> {
        self.nodes[id.0].parent
    }

    /// Node ids reachable from the root, parents before children.
    pub fn preorder(&self) -> Vec<NodeId> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        let mut seen = vec![false; self.nodes.len()];
        while let Some(v) = stack.pop() {
            if seen[v.0] {
                continue;
            }
            seen[v.0] = true;
            out.push(v);
            for &c in self.nodes[v.0].children.iter().rev() {
                if c.0 < self.nodes.len() {
                    stack.push(c);
                }
            }
        }
        out
    }

    /// Children before parents.
    pub fn postorder(&self) -> Vec<NodeId> {
        let mut order = self.preorder();
        order.reverse();
        order
    }

    /// Leaf count of every node's subtree (indexed by node id).
    pub fn subtree_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.nodes.len()];
        for v in self.postorder() {
            let node = &self.nodes[v.0];
            sizes[v.0] = if node.is_leaf() {
                1
            } else {
                node.children.iter().map(|c| sizes[c.0]).sum()
            };
        }
        sizes
    }

    /// Data-point ids under `v`, in preorder.
    pub fn leaves_under(&self, v: NodeId) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(x) = stack.pop() {
            let node = &self.nodes[x.0];
            if let Some(id) = node.leaf_id() {
                out.push(id);
            }
            stack.extend(node.children.iter().rev());
        }
        out
    }

    pub fn leaf_count(&self) -> usize {
        self.preorder().iter().filter(|v| self.nodes[v.0].is_leaf()).count()
    }

    /// Map from data-point id to its leaf node. Panics on ids `>= n`.
    pub fn leaf_nodes(&self, n: usize) -> Vec<NodeId> {
        let mut map = vec![NodeId(usize::MAX); n];
        for v in self.preorder() {
            if let Some(id) = self.nodes[v.0].leaf_id() {
                map[id] = v;
            }
        }
        map
    }

    /// Every reachable non-leaf node has exactly two children.
    pub fn is_binary(&self) -> bool {
        self.preorder().iter().all(|v| {
            let node = &self.nodes[v.0];
            node.is_leaf() || node.children.len() == 2
        })
    }

    /// Lists every broken invariant for a tree over data points `0..n`.
    pub fn validate(&self, n: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        let total = self.nodes.len();
        if self.root.0 >= total {
            out.push(Violation::DanglingRef { node: self.root });
            return out;
        }
        if self.nodes[self.root.0].parent.is_some() {
            out.push(Violation::RootHasParent);
        }
        // Walk from the root, detecting revisits.
        let mut visits = vec![0usize; total];
        let mut stack = vec![self.root];
        while let Some(v) = stack.pop() {
            visits[v.0] += 1;
            if visits[v.0] > 1 {
                out.push(Violation::Cycle { node: v });
                continue;
            }
            let node = &self.nodes[v.0];
            for &c in &node.children {
                if c.0 >= total {
                    out.push(Violation::DanglingRef { node: v });
                    continue;
                }
                if self.nodes[c.0].parent != Some(v) {
                    out.push(Violation::ParentMismatch { node: c });
                }
                stack.push(c);
            }
        }
        let mut count = vec![0usize; n];
        for (i, node) in self.nodes.iter().enumerate() {
            let id = NodeId(i);
            if visits[i] == 0 {
                out.push(Violation::Unreachable { node: id });
                continue;
            }
            match node.kind {
                NodeKind::Leaf(leaf) => {
                    if !node.children.is_empty() {
                        out.push(Violation::LeafHasChildren { node: id });
                    }
                    if leaf >= n {
                        out.push(Violation::LeafOutOfRange { node: id, id: leaf });
                    } else {
                        count[leaf] += 1;
                    }
                }
                NodeKind::Internal | NodeKind::Auxiliary => {
                    if node.children.len() < 2 {
                        out.push(Violation::Arity { node: id, children: node.children.len() });
                    }
                    if node.kind == NodeKind::Auxiliary {
                        for &c in &node.children {
                            if c.0 < total && !self.nodes[c.0].is_leaf() {
                                out.push(Violation::AuxiliaryNonLeafChild { node: id, child: c });
                            }
                        }
                    }
                }
            }
        }
        for (id, &c) in count.iter().enumerate() {
            if c == 0 {
                out.push(Violation::MissingLeaf { id });
            } else if c > 1 {
                out.push(Violation::DuplicateLeaf { id });
            }
        }
        out
    }

    /// `Ok(())` when the tree is evaluable over `n` points.
    pub fn ensure_valid(&self, n: usize) -> Result<()> {
        let leaves = self.leaf_count();
        if leaves != n {
            return Err(Error::SizeMismatch { tree: leaves, instance: n });
        }
        let v = self.validate(n);
        if v.is_empty() {
            Ok(())
        } else {
            let msg: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            Err(Error::MalformedTree(msg.join("; ")))
        }
    }

    /// Compacted copy with unary non-leaf nodes spliced out, childless
    /// non-leaf nodes dropped, and single-leaf auxiliary stars replaced by
    /// the leaf. Objectives are invariant under all three rewrites.
    pub fn normalized(&self) -> HcTree {
        let mut b = TreeBuilder::new();
        let root = self.rebuild(self.root, &mut b);
        match root {
            Some(r) => b.finish(r),
            None => HcTree { nodes: Vec::new(), root: NodeId(0) },
        }
    }

    fn rebuild(&self, v: NodeId, b: &mut TreeBuilder) -> Option<NodeId> {
        let node = &self.nodes[v.0];
        if let NodeKind::Leaf(id) = node.kind {
            return Some(b.leaf(id));
        }
        let kids: Vec<NodeId> = node.children.iter().filter_map(|&c| self.rebuild(c, b)).collect();
        match kids.len() {
            0 => None,
            1 => Some(kids[0]),
            _ => Some(b.push(node.kind, kids)),
        }
    }

    /// Binary tree over the same leaves: each node with children
    /// `c1..ck` becomes the left-leaning chain `((..((c1, c2), c3)..), ck)`.
    /// Auxiliary nodes become internal. Neither objective decreases.
    pub fn binarize(&self) -> HcTree {
        let mut b = TreeBuilder::new();
        let root = self.binarize_rec(self.root, &mut b);
        b.finish(root)
    }

    fn binarize_rec(&self, v: NodeId, b: &mut TreeBuilder) -> NodeId {
        let node = &self.nodes[v.0];
        if let NodeKind::Leaf(id) = node.kind {
            return b.leaf(id);
        }
        let kids: Vec<NodeId> = node.children.iter().map(|&c| self.binarize_rec(c, b)).collect();
        let mut it = kids.into_iter();
        let mut acc = it.next().expect("non-leaf node without children");
        for k in it {
            acc = b.internal(vec![acc, k]);
        }
        acc
    }

    /// Serialization with children sorted recursively; equal for trees that
    /// differ only in child order.
    pub fn canonical(&self) -> String {
        self.canonical_at(self.root)
    }

    fn canonical_at(&self, v: NodeId) -> String {
        let node = &self.nodes[v.0];
        match node.kind {
            NodeKind::Leaf(id) => id.to_string(),
            NodeKind::Internal | NodeKind::Auxiliary => {
                let mut parts: Vec<String> = node.children.iter().map(|&c| self.canonical_at(c)).collect();
                parts.sort();
                let prefix = if node.kind == NodeKind::Auxiliary { "*" } else { "" };
                format!("{prefix}({})", parts.join(","))
            }
        }
    }

    fn write_at(&self, v: NodeId, out: &mut String) {
        let node = &self.nodes[v.0];
        match node.kind {
            NodeKind::Leaf(id) => out.push_str(&id.to_string()),
            NodeKind::Internal | NodeKind::Auxiliary => {
                if node.kind == NodeKind::Auxiliary {
                    out.push('*');
                }
                out.push('(');
                for (i, &c) in node.children.iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    self.write_at(c, out);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for HcTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.nodes.is_empty() {
            return Ok(());
        }
        let mut s = String::new();
        self.write_at(self.root, &mut s);
        f.write_str(&s)
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    builder: TreeBuilder,
}

impl Parser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!("expected '{}' at byte {}", c as char, self.pos)))
        }
    }

    fn subtree(&mut self) -> Result<NodeId> {
        match self.peek() {
            Some(b'*') => {
                self.pos += 1;
                let kids = self.group()?;
                Ok(self.builder.auxiliary(kids))
            }
            Some(b'(') => {
                let kids = self.group()?;
                Ok(self.builder.internal(kids))
            }
            Some(c) if c.is_ascii_digit() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.bytes[start..self.pos]).expect("ascii digits");
                let id = text
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad leaf id {text}: {e}")))?;
                Ok(self.builder.leaf(id))
            }
            Some(c) => Err(Error::Parse(format!("unexpected '{}' at byte {}", c as char, self.pos))),
            None => Err(Error::Parse("unexpected end of input".into())),
        }
    }

    fn group(&mut self) -> Result<Vec<NodeId>> {
        self.expect(b'(')?;
        let mut kids = vec![self.subtree()?];
        loop {
            match self.peek() {
                Some(b',') => {
                    self.pos += 1;
                    kids.push(self.subtree()?);
                }
                Some(b')') => {
                    self.pos += 1;
                    return Ok(kids);
                }
                _ => return Err(Error::Parse(format!("expected ',' or ')' at byte {}", self.pos))),
            }
        }
    }
}

impl FromStr for HcTree {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut p = Parser { bytes: s.as_bytes(), pos: 0, builder: TreeBuilder::new() };
        let root = p.subtree()?;
        if p.peek() == Some(b';') {
            p.pos += 1;
        }
        if p.peek().is_some() {
            return Err(Error::Parse(format!("trailing input at byte {}", p.pos)));
        }
        Ok(p.builder.finish(root))
    }
}
