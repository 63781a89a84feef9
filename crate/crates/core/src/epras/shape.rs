//! Sketch shapes: small rooted trees whose leaves are bucket slots, and the
//! sketch-level objective estimates.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::{Error, Result};

/// Rooted tree whose internal nodes have at least two children and whose
/// leaves are numbered bucket slots `0..slots()`, in preorder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Shape {
    children: Vec<Vec<usize>>,
    parent: Vec<Option<usize>>,
    slot_node: Vec<usize>,
    canonical: String,
}

impl Shape {
    /// Parses the canonical text: `b` is a slot, `(x,y,...)` an internal node.
    pub fn parse(text: &str) -> Result<Shape> {
        let bytes = text.as_bytes();
        let mut children: Vec<Vec<usize>> = Vec::new();
        let mut pos = 0;
        let root = parse_node(bytes, &mut pos, &mut children)?;
        if pos != bytes.len() {
            return Err(Error::Parse(format!("trailing input in shape at {pos}")));
        }
        Ok(Shape::from_children(children, root))
    }

    /// A lone slot.
    pub fn single() -> Shape {
        Shape::from_children(vec![Vec::new()], 0)
    }

    fn from_children(children: Vec<Vec<usize>>, root: usize) -> Shape {
        // Renumber in preorder so that node 0 is the root.
        let mut order = Vec::new();
        let mut stack = vec![root];
        while let Some(v) = stack.pop() {
            order.push(v);
            stack.extend(children[v].iter().rev());
        }
        let mut new_id = vec![0; children.len()];
        for (i, &v) in order.iter().enumerate() {
            new_id[v] = i;
        }
        let kids: Vec<Vec<usize>> = order.iter().map(|&v| children[v].iter().map(|&c| new_id[c]).collect()).collect();
        let mut parent = vec![None; kids.len()];
        for (v, cs) in kids.iter().enumerate() {
            for &c in cs {
                parent[c] = Some(v);
            }
        }
        let slot_node = (0..kids.len()).filter(|&v| kids[v].is_empty()).collect();
        let mut s = Shape { children: kids, parent, slot_node, canonical: String::new() };
        s.canonical = s.canonical_at(0);
        s
    }

    fn canonical_at(&self, v: usize) -> String {
        if self.children[v].is_empty() {
            return "b".into();
        }
        let mut parts: Vec<String> = self.children[v].iter().map(|&c| self.canonical_at(c)).collect();
        parts.sort();
        format!("({})", parts.join(","))
    }

    pub fn canonical(&self) -> &str {
        &self.canonical
    }

    pub fn slots(&self) -> usize {
        self.slot_node.len()
    }

    pub fn internal_nodes(&self) -> usize {
        self.children.len() - self.slots()
    }

    pub fn node_count(&self) -> usize {
        self.children.len()
    }

    pub fn root(&self) -> usize {
        0
    }

    pub fn children(&self, v: usize) -> &[usize] {
        &self.children[v]
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    /// Shape node holding slot `i`.
    pub fn slot_node(&self, i: usize) -> usize {
        self.slot_node[i]
    }

    /// Slot index of a node, if it is a slot.
    pub fn slot_of(&self, v: usize) -> Option<usize> {
        self.slot_node.iter().position(|&x| x == v)
    }

    fn is_ancestor(&self, a: usize, mut v: usize) -> bool {
        loop {
            if v == a {
                return true;
            }
            match self.parent[v] {
                Some(p) => v = p,
                None => return false,
            }
        }
    }

    fn lca(&self, a: usize, b: usize) -> usize {
        let mut x = a;
        while !self.is_ancestor(x, b) {
            x = self.parent[x].expect("root is a common ancestor");
        }
        x
    }

    /// Slots in the subtree of node `v`.
    fn slots_under(&self, v: usize) -> Vec<usize> {
        (0..self.slots()).filter(|&i| self.is_ancestor(v, self.slot_node[i])).collect()
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.canonical)
    }
}

fn parse_node(bytes: &[u8], pos: &mut usize, children: &mut Vec<Vec<usize>>) -> Result<usize> {
    match bytes.get(*pos) {
        Some(b'b') => {
            *pos += 1;
            children.push(Vec::new());
            Ok(children.len() - 1)
        }
        Some(b'(') => {
            *pos += 1;
            let mut kids = Vec::new();
            loop {
                kids.push(parse_node(bytes, pos, children)?);
                match bytes.get(*pos) {
                    Some(b',') => *pos += 1,
                    Some(b')') => {
                        *pos += 1;
                        break;
                    }
                    _ => return Err(Error::Parse(format!("expected ',' or ')' in shape at {pos}"))),
                }
            }
            if kids.len() < 2 {
                return Err(Error::Parse("shape internal nodes need two children".into()));
            }
            children.push(kids);
            Ok(children.len() - 1)
        }
        _ => Err(Error::Parse(format!("unexpected input in shape at {pos}"))),
    }
}

/// Every shape with between 1 and `max_internal` internal nodes and at most
/// `max_buckets` slots, each isomorphism class once, ordered by
/// (slots, internal nodes, canonical text).
pub fn enumerate_sketch_shapes(max_internal: usize, max_buckets: usize) -> Vec<Shape> {
    // by_size[l] holds canonical strings with exactly l leaves, paired with
    // their internal-node count.
    let mut by_size: Vec<BTreeSet<(String, usize)>> = vec![BTreeSet::new(); max_buckets + 1];
    if max_buckets >= 1 {
        by_size[1].insert(("b".into(), 0));
    }
    for l in 2..=max_buckets {
        let smaller: Vec<(String, usize, usize)> = (1..l)
            .flat_map(|m| by_size[m].iter().map(move |(s, i)| (s.clone(), *i, m)))
            .collect();
        let mut found = BTreeSet::new();
        let mut picked = Vec::new();
        multisets(&smaller, 0, l, &mut picked, &mut |kids: &[usize]| {
            if kids.len() < 2 {
                return;
            }
            let internal = 1 + kids.iter().map(|&k| smaller[k].1).sum::<usize>();
            if internal > max_internal {
                return;
            }
            let mut parts: Vec<&str> = kids.iter().map(|&k| smaller[k].0.as_str()).collect();
            parts.sort();
            found.insert((format!("({})", parts.join(",")), internal));
        });
        by_size[l] = found;
    }
    let mut out: Vec<(usize, usize, String)> = by_size
        .iter()
        .enumerate()
        .skip(2)
        .flat_map(|(l, set)| set.iter().map(move |(s, i)| (l, *i, s.clone())))
        .collect();
    out.sort();
    out.into_iter().map(|(_, _, s)| Shape::parse(&s).expect("generated shape parses")).collect()
}

/// Non-decreasing index sequences from `from` whose leaf counts sum to
/// `remaining`.
fn multisets(
    items: &[(String, usize, usize)],
    from: usize,
    remaining: usize,
    picked: &mut Vec<usize>,
    emit: &mut dyn FnMut(&[usize]),
) {
    if remaining == 0 {
        emit(picked);
        return;
    }
    for k in from..items.len() {
        if items[k].2 <= remaining {
            picked.push(k);
            multisets(items, k, remaining - items[k].2, picked, emit);
            picked.pop();
        }
    }
}

fn check_dims(shape: &Shape, alpha: &[f64], beta: &[Vec<f64>]) -> Result<()> {
    let k = shape.slots();
    if alpha.len() != k || beta.len() != k || beta.iter().any(|r| r.len() != k) {
        return Err(Error::MalformedPartition(format!("shape has {k} slots; alpha/beta dimensions differ")));
    }
    Ok(())
}

/// Per-cell mass coefficients: `mass[i][j]` lists the slots whose α counts
/// toward cell `(i, j)`.
fn revenue_mass(shape: &Shape, i: usize, j: usize) -> Vec<usize> {
    let anchor = if i == j {
        shape.parent(shape.slot_node(i))
    } else {
        Some(shape.lca(shape.slot_node(i), shape.slot_node(j)))
    };
    let inside: Vec<usize> = anchor.map_or_else(|| (0..shape.slots()).collect(), |a| shape.slots_under(a));
    (0..shape.slots()).filter(|l| !inside.contains(l)).collect()
}

fn dissimilarity_mass(shape: &Shape, i: usize, j: usize) -> Vec<usize> {
    if i == j {
        return Vec::new();
    }
    shape.slots_under(shape.lca(shape.slot_node(i), shape.slot_node(j)))
}

/// Which slots' masses multiply each cell, for either objective.
#[derive(Debug, Clone)]
pub struct MassTable {
    k: usize,
    cells: Vec<Vec<usize>>,
}

impl MassTable {
    pub fn revenue(shape: &Shape) -> Self {
        Self::build(shape, revenue_mass)
    }

    pub fn dissimilarity(shape: &Shape) -> Self {
        Self::build(shape, dissimilarity_mass)
    }

    fn build(shape: &Shape, f: fn(&Shape, usize, usize) -> Vec<usize>) -> Self {
        let k = shape.slots();
        let mut cells = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                cells.push(if i <= j { f(shape, i, j) } else { f(shape, j, i) });
            }
        }
        MassTable { k, cells }
    }

    /// `Σ_{i≤j} β_ij · Σ_{ℓ ∈ mass(i,j)} α_ℓ`.
    pub fn estimate(&self, alpha: &[f64], beta: &[Vec<f64>]) -> f64 {
        let mut total = 0.0;
        for i in 0..self.k {
            for j in i..self.k {
                let m: f64 = self.cells[i * self.k + j].iter().map(|&l| alpha[l]).sum();
                total += beta[i][j] * m;
            }
        }
        total
    }

    /// Whether cell `(i, j)` carries any mass coefficient at all.
    pub fn counts(&self, i: usize, j: usize) -> bool {
        !self.cells[i * self.k + j].is_empty()
    }
}

/// Revenue estimate: each cell's weight times the mass of slots outside the
/// subtree of the slots' LCA (a diagonal cell uses its slot's parent).
pub fn eval_sketch_revenue(shape: &Shape, alpha: &[f64], beta: &[Vec<f64>]) -> Result<f64> {
    check_dims(shape, alpha, beta)?;
    Ok(MassTable::revenue(shape).estimate(alpha, beta))
}

/// Dissimilarity estimate: each off-diagonal cell's weight times the mass
/// inside the subtree of the slots' LCA; diagonal cells contribute nothing.
pub fn eval_sketch_dissimilarity(shape: &Shape, alpha: &[f64], beta: &[Vec<f64>]) -> Result<f64> {
    check_dims(shape, alpha, beta)?;
    Ok(MassTable::dissimilarity(shape).estimate(alpha, beta))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// All shapes by brute force: grow by attaching a new slot either as a
    /// new child of an internal node or by splitting a slot into a cherry.
    fn brute_shapes(max_internal: usize, max_buckets: usize) -> BTreeSet<String> {
        let mut frontier: BTreeSet<String> = BTreeSet::from(["(b,b)".to_string()]);
        let mut all = BTreeSet::new();
        while !frontier.is_empty() {
            let mut next = BTreeSet::new();
            for s in &frontier {
                let sh = Shape::parse(s).unwrap();
                if sh.internal_nodes() > max_internal || sh.slots() > max_buckets {
                    continue;
                }
                all.insert(s.clone());
                for v in 0..sh.node_count() {
                    let mut kids = sh.children.clone();
                    if kids[v].is_empty() {
                        let (a, b) = (kids.len(), kids.len() + 1);
                        kids.push(Vec::new());
                        kids.push(Vec::new());
                        kids[v] = vec![a, b];
                    } else {
                        kids.push(Vec::new());
                        let new = kids.len() - 1;
                        kids[v].push(new);
                    }
                    next.insert(Shape::from_children(kids, 0).canonical().to_string());
                }
            }
            frontier = next;
        }
        all
    }

    #[test]
    fn shape_counts() {
        let one = enumerate_sketch_shapes(1, 2);
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].canonical(), "(b,b)");
        let got: BTreeSet<String> = enumerate_sketch_shapes(2, 3).iter().map(|s| s.to_string()).collect();
        assert_eq!(got, BTreeSet::from(["(b,b)".into(), "(b,b,b)".into(), "((b,b),b)".into()]));
        for (i, b) in [(2, 4), (3, 4), (3, 5), (4, 6), (1, 5)] {
            let got: BTreeSet<String> = enumerate_sketch_shapes(i, b).iter().map(|s| s.to_string()).collect();
            assert_eq!(got, brute_shapes(i, b), "internal {i} buckets {b}");
        }
    }

    #[test]
    fn canonical_is_idempotent() {
        for s in enumerate_sketch_shapes(4, 6) {
            assert_eq!(Shape::parse(s.canonical()).unwrap().canonical(), s.canonical());
        }
    }

    #[test]
    fn estimates_examples() {
        let single = Shape::single();
        assert_eq!(eval_sketch_revenue(&single, &[5.0], &[vec![3.0]]).unwrap(), 0.0);
        assert_eq!(eval_sketch_dissimilarity(&single, &[5.0], &[vec![3.0]]).unwrap(), 0.0);

        let pair = Shape::parse("(b,b)").unwrap();
        let beta = vec![vec![0.0, 1.0], vec![1.0, 0.0]];
        assert_eq!(eval_sketch_revenue(&pair, &[3.0, 3.0], &beta).unwrap(), 0.0);
        assert_eq!(eval_sketch_dissimilarity(&pair, &[3.0, 3.0], &beta).unwrap(), 6.0);

        let cherry = Shape::parse("((b,b),b)").unwrap();
        let mut beta = vec![vec![0.0; 3]; 3];
        beta[0][1] = 1.0;
        beta[1][0] = 1.0;
        assert_eq!(eval_sketch_revenue(&cherry, &[2.0, 2.0, 2.0], &beta).unwrap(), 2.0);
        assert_eq!(eval_sketch_dissimilarity(&cherry, &[2.0, 2.0, 2.0], &beta).unwrap(), 4.0);
        assert!(eval_sketch_revenue(&cherry, &[2.0, 2.0], &beta).is_err());
    }
}
