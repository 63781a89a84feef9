//! Reference algorithms and ground-truth oracles: random trees, average
//! linkage, and exhaustive search over binary trees.

use rand::Rng as _;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::instance::{Channel, Instance};
use crate::objective::Objective;
use crate::rng::Rng;
use crate::scalar::Weight;
use crate::tree::{HcTree, NodeId, TreeBuilder};

/// Default exhaustive-search guard: (2n − 3)!! = 34,459,425 trees at n = 10.
pub const BRUTE_FORCE_MAX_N: usize = 10;

/// Uniform binary leaf-labelled tree on `n` leaves: leaf `i` is inserted
/// above a uniformly chosen node of the current tree (2i − 1 choices).
pub fn random_binary_tree(n: usize, rng: &mut Rng) -> HcTree {
    assert!(n >= 1, "random_binary_tree needs n >= 1");
    // parent/children over node ids: leaves 0..n, internal n..2n-1
    let total = 2 * n - 1;
    let mut parent = vec![usize::MAX; total];
    let mut kids = vec![[usize::MAX; 2]; total];
    let mut root = 0usize;
    for k in 1..n {
        let existing: usize = 2 * k - 1;
        let pick = rng.gen_range(0..existing);
        // Existing nodes: leaves 0..k and internal n..n+k-1.
        let v = if pick < k { pick } else { n + (pick - k) };
        let u = n + (k - 1);
        let p = parent[v];
        parent[u] = p;
        kids[u] = [v, k];
        parent[v] = u;
        parent[k] = u;
        if p == usize::MAX {
            root = u;
        } else {
            let slot = if kids[p][0] == v { 0 } else { 1 };
            kids[p][slot] = u;
        }
    }
    let mut b = TreeBuilder::new();
    let r = build_from_arrays(root, n, &kids, &mut b);
    b.finish(r)
}

fn build_from_arrays(v: usize, n: usize, kids: &[[usize; 2]], b: &mut TreeBuilder) -> NodeId {
    if v < n {
        return b.leaf(v);
    }
    let l = build_from_arrays(kids[v][0], n, kids, b);
    let r = build_from_arrays(kids[v][1], n, kids, b);
    b.internal(vec![l, r])
}

/// Random multiway tree: a uniform binary tree with each internal edge
/// contracted independently with probability `contract`.
pub fn random_multiway_tree(n: usize, contract: f64, rng: &mut Rng) -> HcTree {
    let bin = random_binary_tree(n, rng);
    let mut b = TreeBuilder::new();
    let root = multiway_rec(&bin, bin.root(), contract, rng, &mut b);
    b.finish(root)
}

fn multiway_rec(t: &HcTree, v: NodeId, contract: f64, rng: &mut Rng, b: &mut TreeBuilder) -> NodeId {
    if let Some(id) = t.node(v).leaf_id() {
        return b.leaf(id);
    }
    let mut kids = Vec::new();
    let mut stack: Vec<NodeId> = t.children(v).iter().rev().copied().collect();
    while let Some(c) = stack.pop() {
        if !t.node(c).is_leaf() && rng.gen_bool(contract) {
            stack.extend(t.children(c).iter().rev());
        } else {
            kids.push(multiway_rec(t, c, contract, rng, b));
        }
    }
    b.internal(kids)
}

/// Random recursive tree on `nodes` vertices, as a parent array (`None` at
/// the root). Used as an arbitrary unrooted tree.
pub fn random_arbitrary_tree(nodes: usize, rng: &mut Rng) -> Vec<Option<usize>> {
    let mut parent = vec![None; nodes];
    for (v, p) in parent.iter_mut().enumerate().skip(1) {
        *p = Some(rng.gen_range(0..v));
    }
    parent
}

/// Agglomerative average linkage. On `Sim` merges the cluster pair of
/// largest average similarity, on `Dis` the pair of smallest average
/// dissimilarity. Ties go to the lexicographically smallest pair of
/// cluster ids (leaves are `0..n`, merged clusters `n, n+1, ...`).
pub fn average_linkage<W: Weight>(inst: &Instance<W>, channel: Channel) -> HcTree {
    let n = inst.n();
    assert!(n >= 1, "average linkage needs a point");
    let mut b = TreeBuilder::new();
    if n == 1 {
        let r = b.leaf(0);
        return b.finish(r);
    }
    let mut node: Vec<NodeId> = (0..n).map(|i| b.leaf(i)).collect();
    let mut id: Vec<usize> = (0..n).collect();
    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut sum = vec![W::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                sum[i * n + j] = inst.weight(channel, i, j);
            }
        }
    }
    let mut next_id = n;
    for _ in 0..n - 1 {
        let mut best: Option<(W, (usize, usize), usize, usize)> = None;
        for a in 0..n {
            if !active[a] {
                continue;
            }
            for c in a + 1..n {
                if !active[c] {
                    continue;
                }
                let avg = sum[a * n + c] / W::from_count(size[a] * size[c]);
                let key = (id[a].min(id[c]), id[a].max(id[c]));
                let better = match &best {
                    None => true,
                    Some((bv, bk, _, _)) => {
                        let strictly = match channel {
                            Channel::Sim => avg > *bv,
                            Channel::Dis => avg < *bv,
                        };
                        strictly || (avg == *bv && key < *bk)
                    }
                };
                if better {
                    best = Some((avg, key, a, c));
                }
            }
        }
        let (_, _, a, c) = best.expect("two active clusters");
        let (first, second) = if id[a] < id[c] { (a, c) } else { (c, a) };
        node[a] = b.internal(vec![node[first], node[second]]);
        size[a] += size[c];
        id[a] = next_id;
        next_id += 1;
        active[c] = false;
        for x in 0..n {
            if active[x] && x != a {
                let s = sum[a * n + x] + sum[c * n + x];
                sum[a * n + x] = s;
                sum[x * n + a] = s;
            }
        }
    }
    let root = node[(0..n).find(|&i| active[i]).expect("one cluster left")];
    b.finish(root)
}

/// Incremental state for enumerating binary trees by leaf insertion.
///
/// Leaf `i` is node `i`; the `t`-th internal node is `n + t`. The tracked
/// quantity is `acc = Σ_{i<j} c_ij |T_ij|` over the leaves inserted so far.
struct Enumerator<W> {
    n: usize,
    coef: Vec<W>,
    parent: Vec<usize>,
    kids: Vec<[usize; 2]>,
    size: Vec<usize>,
    lca_weight: Vec<W>,
    acc: W,
    root: usize,
    stamp: Vec<u32>,
    clock: u32,
    delta: Vec<W>,
}

struct Undo {
    v: usize,
    p: usize,
    touched: Vec<usize>,
    acc_before: usize,
}

const NONE: usize = usize::MAX;

impl<W: Weight> Enumerator<W> {
    fn new(n: usize, coef: Vec<W>) -> Self {
        let total = 2 * n - 1;
        let mut size = vec![0; total];
        size[0] = 1;
        Self {
            n,
            coef,
            parent: vec![NONE; total],
            kids: vec![[NONE; 2]; total],
            size,
            lca_weight: vec![W::zero(); total],
            acc: W::zero(),
            root: 0,
            stamp: vec![0; total],
            clock: 0,
            delta: vec![W::zero(); total],
        }
    }

    /// Candidate insertion points before inserting leaf `k`.
    fn slots(&self, k: usize) -> impl Iterator<Item = usize> + '_ {
        (0..k).chain(self.n..self.n + k - 1)
    }

    fn insert(&mut self, k: usize, v: usize, saved: &mut Vec<W>) -> Undo {
        let n = self.n;
        let u = n + k - 1;
        let p = self.parent[v];
        self.parent[u] = p;
        self.kids[u] = [v, k];
        self.parent[v] = u;
        self.parent[k] = u;
        self.size[k] = 1;
        if p == NONE {
            self.root = u;
        } else {
            let slot = if self.kids[p][0] == v { 0 } else { 1 };
            self.kids[p][slot] = u;
        }
        self.clock = self.clock.wrapping_add(1);
        if self.clock == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.clock = 1;
        }
        let mut touched = vec![u];
        let mut a = p;
        while a != NONE {
            touched.push(a);
            a = self.parent[a];
        }
        for &x in &touched {
            self.stamp[x] = self.clock;
            self.delta[x] = W::zero();
        }
        for j in 0..k {
            let mut x = j;
            while self.stamp[x] != self.clock {
                x = self.parent[x];
            }
            self.delta[x] = self.delta[x] + self.coef[k * n + j];
        }
        let acc_before = saved.len();
        saved.push(self.acc);
        // Existing pairs whose LCA sits above u gain one leaf.
        for &a in &touched[1..] {
            self.acc = self.acc + self.lca_weight[a];
            self.size[a] += 1;
        }
        self.size[u] = self.size[v] + 1;
        for &x in &touched {
            let d = self.delta[x];
            saved.push(d);
            self.acc = self.acc + d * W::from_count(self.size[x]);
            self.lca_weight[x] = self.lca_weight[x] + d;
        }
        Undo { v, p, touched, acc_before }
    }

    fn remove(&mut self, k: usize, undo: Undo, saved: &mut Vec<W>) {
        let u = self.n + k - 1;
        for (idx, &x) in undo.touched.iter().enumerate() {
            let d = saved[undo.acc_before + 1 + idx];
            self.lca_weight[x] = self.lca_weight[x] - d;
        }
        for &a in &undo.touched[1..] {
            self.size[a] -= 1;
        }
        self.acc = saved[undo.acc_before];
        saved.truncate(undo.acc_before);
        let (v, p) = (undo.v, undo.p);
        self.parent[v] = p;
        self.parent[u] = NONE;
        self.parent[k] = NONE;
        self.lca_weight[u] = W::zero();
        if p == NONE {
            self.root = v;
        } else {
            let slot = if self.kids[p][0] == u { 0 } else { 1 };
            self.kids[p][slot] = v;
        }
    }

    fn tree(&self) -> HcTree {
        let mut b = TreeBuilder::new();
        let r = build_from_arrays(self.root, self.n, &self.kids, &mut b);
        b.finish(r)
    }

    fn dfs(&mut self, k: usize, saved: &mut Vec<W>, visit: &mut dyn FnMut(&Self)) {
        if k == self.n {
            visit(self);
            return;
        }
        let slots: Vec<usize> = self.slots(k).collect();
        for v in slots {
            let undo = self.insert(k, v, saved);
            self.dfs(k + 1, saved, visit);
            self.remove(k, undo, saved);
        }
    }
}

/// Per-pair coefficients and constant so that the objective of a binary
/// tree equals `constant + Σ_{i<j} coef_ij |T_ij|`.
fn linear_form<W: Weight>(inst: &Instance<W>, objective: Objective) -> (W, Vec<W>) {
    let n = inst.n();
    let mut coef = vec![W::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                coef[i * n + j] = match objective {
                    Objective::Rev => W::zero() - inst.sim(i, j),
                    Objective::Dis => inst.dis(i, j),
                    Objective::Hcc => inst.dis(i, j) - inst.sim(i, j),
                };
            }
        }
    }
    let constant = match objective {
        Objective::Dis => W::zero(),
        Objective::Rev | Objective::Hcc => W::from_count(n) * inst.total_sim(),
    };
    (constant, coef)
}

/// Visits every binary leaf-labelled tree on `n` leaves exactly once.
pub fn for_each_binary_tree(n: usize, mut visit: impl FnMut(&HcTree)) {
    assert!(n >= 1);
    if n == 1 {
        visit(&HcTree::single_leaf(0));
        return;
    }
    let mut e: Enumerator<f64> = Enumerator::new(n, vec![0.0; n * n]);
    let mut saved = Vec::new();
    e.dfs(1, &mut saved, &mut |s| visit(&s.tree()));
}

/// (2n − 3)!!, the number of binary leaf-labelled trees on `n` leaves.
pub fn binary_tree_count(n: usize) -> u128 {
    (1..n.max(1) as u128).map(|k| 2 * k - 1).product()
}

/// Exhaustive optimum over all binary trees, guarded at
/// [`BRUTE_FORCE_MAX_N`]. Ties go to the smallest canonical serialization.
pub fn brute_force_optimal<W: Weight>(inst: &Instance<W>, objective: Objective) -> Result<(HcTree, W)> {
    brute_force_optimal_guarded(inst, objective, BRUTE_FORCE_MAX_N)
}

pub fn brute_force_optimal_guarded<W: Weight>(
    inst: &Instance<W>,
    objective: Objective,
    max_n: usize,
) -> Result<(HcTree, W)> {
    let n = inst.n();
    if n > max_n {
        return Err(Error::GuardExceeded { n, max: max_n });
    }
    if n == 1 {
        return Ok((HcTree::single_leaf(0), W::zero()));
    }
    let (constant, coef) = linear_form(inst, objective);
    // Split the search by the insertion choices of the first few leaves.
    let split_depth = n.min(4);
    let mut prefixes: Vec<Vec<usize>> = vec![Vec::new()];
    for k in 1..split_depth {
        let mut next = Vec::new();
        for pre in &prefixes {
            let slots: Vec<usize> = (0..k).chain(n..n + k - 1).collect();
            for v in slots {
                let mut p = pre.clone();
                p.push(v);
                next.push(p);
            }
        }
        prefixes = next;
    }
    let results: Vec<(W, HcTree, String)> = prefixes
        .par_iter()
        .map(|pre| {
            let mut e = Enumerator::new(n, coef.clone());
            let mut saved = Vec::new();
            for (k, &v) in pre.iter().enumerate() {
                e.insert(k + 1, v, &mut saved);
            }
            let mut best: Option<(W, HcTree, String)> = None;
            e.dfs(split_depth, &mut saved, &mut |s| {
                let value = constant + s.acc;
                match &best {
                    Some((bv, _, _)) if value < *bv => {}
                    Some((bv, _, bc)) if value == *bv => {
                        let t = s.tree();
                        let c = t.canonical();
                        if c < *bc {
                            best = Some((value, t, c));
                        }
                    }
                    _ => {
                        let t = s.tree();
                        let c = t.canonical();
                        best = Some((value, t, c));
                    }
                }
            });
            best.expect("at least one tree")
        })
        .collect();
    let (value, tree, _) = results
        .into_iter()
        .reduce(|a, b| {
            if b.0 > a.0 || (b.0 == a.0 && b.2 < a.2) {
                b
            } else {
                a
            }
        })
        .expect("nonempty");
    Ok((tree, value))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{eval_dissimilarity, eval_objective, eval_revenue};
    use crate::rng::seeded;
    use std::collections::HashMap;

    #[test]
    fn random_tree_small_cases() {
        let mut rng = seeded(1);
        assert_eq!(random_binary_tree(1, &mut rng).to_string(), "0");
        for n in 2..20 {
            let t = random_binary_tree(n, &mut rng);
            assert!(t.validate(n).is_empty());
            assert!(t.is_binary());
        }
    }

    #[test]
    fn random_tree_three_shapes_uniform() {
        let mut rng = seeded(2);
        let draws = 10_000;
        let mut counts: HashMap<String, usize> = HashMap::new();
        for _ in 0..draws {
            *counts.entry(random_binary_tree(3, &mut rng).canonical()).or_default() += 1;
        }
        assert_eq!(counts.len(), 3);
        // Binomial(10^4, 1/3): sigma ~ 47.1.
        let sigma = (draws as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &c in counts.values() {
            assert!((c as f64 - draws as f64 / 3.0).abs() <= 3.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn random_tree_five_covers_all_shapes() {
        let mut rng = seeded(3);
        let mut seen = std::collections::HashSet::new();
        for _ in 0..100_000 {
            seen.insert(random_binary_tree(5, &mut rng).canonical());
        }
        assert_eq!(seen.len(), 105);
    }

    #[test]
    fn enumeration_counts() {
        for n in 1..=7 {
            let mut count = 0u128;
            let mut seen = std::collections::HashSet::new();
            for_each_binary_tree(n, |t| {
                count += 1;
                assert!(t.validate(n).is_empty());
                seen.insert(t.canonical());
            });
            assert_eq!(count, binary_tree_count(n));
            assert_eq!(seen.len() as u128, count);
        }
        assert_eq!(binary_tree_count(10), 34_459_425);
    }

    #[test]
    fn average_linkage_two_pairs() {
        let inst = Instance::<f64>::from_edges(4, &[(0, 1, 1.0, 0.0), (2, 3, 1.0, 0.0)]).unwrap();
        let t = average_linkage(&inst, Channel::Sim);
        assert_eq!(t.to_string(), "((0,1),(2,3))");
        assert_eq!(eval_revenue(&inst, &t).unwrap(), 4.0);
        let two = Instance::<f64>::from_edges(2, &[(0, 1, 0.7, 0.0)]).unwrap();
        assert_eq!(eval_revenue(&two, &average_linkage(&two, Channel::Sim)).unwrap(), 0.0);
    }

    #[test]
    fn brute_force_single_edge() {
        let inst = Instance::<f64>::from_edges(4, &[(1, 2, 0.5, 0.0)]).unwrap();
        let (t, v) = brute_force_optimal(&inst, Objective::Rev).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(eval_revenue(&inst, &t).unwrap(), v);
        let tab = crate::lca::lca_size_table(&t).unwrap();
        assert_eq!(tab.size(1, 2), 2);
    }

    #[test]
    fn brute_force_cliques() {
        let mut clique = Instance::<f64>::zeros(5);
        for i in 0..5 {
            for j in i + 1..5 {
                clique.set_sim(i, j, 1.0).unwrap();
            }
        }
        let (_, v) = brute_force_optimal(&clique, Objective::Rev).unwrap();
        assert_eq!(v, 10.0);
        let dis4 = clique.restrict(&[0, 1, 2, 3]).channel_as_dis(Channel::Sim);
        let (t, v) = brute_force_optimal(&dis4, Objective::Dis).unwrap();
        assert_eq!(v, 20.0);
        assert_eq!(eval_dissimilarity(&dis4, &t).unwrap(), 20.0);
    }

    #[test]
    fn brute_force_guard() {
        let inst = Instance::<f64>::zeros(11);
        assert!(matches!(
            brute_force_optimal(&inst, Objective::Hcc),
            Err(Error::GuardExceeded { n: 11, max: 10 })
        ));
    }

    #[test]
    fn brute_force_matches_eval_on_samples() {
        let mut rng = seeded(9);
        for n in 2..=7 {
            let mut inst = Instance::<f64>::zeros(n);
            for i in 0..n {
                for j in i + 1..n {
                    inst.set_sim(i, j, rng.gen::<f64>()).unwrap();
                    inst.set_dis(i, j, rng.gen::<f64>()).unwrap();
                }
            }
            for obj in [Objective::Rev, Objective::Dis, Objective::Hcc] {
                let (t, v) = brute_force_optimal(&inst, obj).unwrap();
                let direct = eval_objective(&inst, &t, obj).unwrap();
                assert!((v - direct).abs() < 1e-9, "n {n} {obj:?}");
                for _ in 0..20 {
                    let r = random_binary_tree(n, &mut rng);
                    assert!(eval_objective(&inst, &r, obj).unwrap() <= v + 1e-9);
                }
            }
        }
    }
}
