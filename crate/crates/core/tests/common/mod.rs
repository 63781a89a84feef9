//! Reference computations that share no code with the library beyond the
//! tree and instance containers.

#![allow(dead_code)]

use hcforge::{HcTree, Instance, Weight};

/// `|T_ij|` for every pair, from the leaf sets below each internal node.
pub fn lca_sizes(tree: &HcTree, n: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![0usize; n]; n];
    for v in tree.preorder() {
        let kids = tree.children(v);
        if kids.is_empty() {
            continue;
        }
        let sets: Vec<Vec<usize>> = kids.iter().map(|&c| tree.leaves_under(c)).collect();
        let total: usize = sets.iter().map(Vec::len).sum();
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                for &i in &sets[a] {
                    for &j in &sets[b] {
                        out[i][j] = total;
                        out[j][i] = total;
                    }
                }
            }
        }
    }
    out
}

/// Sizes of the two LCA children holding `i` and `j`, for every pair.
pub fn lca_child_sizes(tree: &HcTree, n: usize) -> Vec<Vec<(usize, usize)>> {
    let mut out = vec![vec![(0, 0); n]; n];
    for v in tree.preorder() {
        let sets: Vec<Vec<usize>> = tree.children(v).iter().map(|&c| tree.leaves_under(c)).collect();
        for a in 0..sets.len() {
            for b in a + 1..sets.len() {
                for &i in &sets[a] {
                    for &j in &sets[b] {
                        out[i][j] = (sets[a].len(), sets[b].len());
                        out[j][i] = (sets[b].len(), sets[a].len());
                    }
                }
            }
        }
    }
    out
}

pub fn revenue<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> W {
    let n = inst.n();
    let s = lca_sizes(tree, n);
    let mut acc = W::zero();
    for i in 0..n {
        for j in i + 1..n {
            acc = acc + inst.sim(i, j) * W::from_count(n - s[i][j]);
        }
    }
    acc
}

/// Dissimilarity with the multiway extension `a + b`.
pub fn dissimilarity<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> W {
    let n = inst.n();
    let s = lca_child_sizes(tree, n);
    let mut acc = W::zero();
    for i in 0..n {
        for j in i + 1..n {
            acc = acc + inst.dis(i, j) * W::from_count(s[i][j].0 + s[i][j].1);
        }
    }
    acc
}

pub fn hcc<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> W {
    revenue(inst, tree) + dissimilarity(inst, tree)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Obj {
    Rev,
    Dis,
    Hcc,
}

/// Optimum over binary trees by dynamic programming over leaf subsets:
/// `best(S) = max over splits A|B of best(A) + best(B) + gain(A, B, |S|)`.
pub fn dp_optimum(inst: &Instance<f64>, obj: Obj) -> f64 {
    let n = inst.n();
    assert!(n <= 16, "subset DP is exponential");
    let full = 1usize << n;
    let (use_s, use_d) = match obj {
        Obj::Rev => (1.0, 0.0),
        Obj::Dis => (0.0, 1.0),
        Obj::Hcc => (1.0, 1.0),
    };
    // Within-subset weight sums per channel.
    let mut ins = vec![0.0; full];
    let mut ind = vec![0.0; full];
    for m in 1..full {
        let low = m.trailing_zeros() as usize;
        let rest = m & (m - 1);
        let (mut s, mut d) = (ins[rest], ind[rest]);
        for j in 0..n {
            if rest >> j & 1 == 1 {
                s += inst.sim(low, j);
                d += inst.dis(low, j);
            }
        }
        ins[m] = s;
        ind[m] = d;
    }
    let mut best = vec![0.0f64; full];
    for m in 1..full {
        let size = m.count_ones() as usize;
        if size < 2 {
            continue;
        }
        let low = m & m.wrapping_neg();
        let rest = m ^ low;
        let mut top = f64::NEG_INFINITY;
        // Submasks of `rest`, each joined with `low`, give every unordered split once.
        let mut sub = rest;
        loop {
            let a = sub | low;
            if a != m {
                let b = m ^ a;
                let cs = ins[m] - ins[a] - ins[b];
                let cd = ind[m] - ind[a] - ind[b];
                let v = best[a] + best[b] + use_s * cs * (n - size) as f64 + use_d * cd * size as f64;
                top = top.max(v);
            }
            if sub == 0 {
                break;
            }
            sub = (sub - 1) & rest;
        }
        best[m] = top;
    }
    if n < 2 {
        0.0
    } else {
        best[full - 1]
    }
}

/// Number of leaf-labeled rooted binary trees on `n` leaves, `(2n-3)!!`.
pub fn double_factorial_count(n: usize) -> u128 {
    (1..=(2 * n as u128).saturating_sub(3)).step_by(2).product()
}

/// Degree census of a parent-pointer tree: (leaves, nodes of degree ≥ 3).
pub fn census(parent: &[Option<usize>]) -> (usize, usize) {
    let mut deg = vec![0usize; parent.len()];
    for (v, p) in parent.iter().enumerate() {
        if let Some(p) = *p {
            deg[v] += 1;
            deg[p] += 1;
        }
    }
    (deg.iter().filter(|&&d| d == 1).count(), deg.iter().filter(|&&d| d >= 3).count())
}

/// Leaf sets of the components left after deleting the given (parent, child) edges.
pub fn components_after_cut(tree: &HcTree, cut: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let len = tree.len();
    let mut uf: Vec<usize> = (0..len).collect();
    fn find(uf: &mut [usize], x: usize) -> usize {
        let mut r = x;
        while uf[r] != r {
            r = uf[r];
        }
        let mut y = x;
        while uf[y] != r {
            let nx = uf[y];
            uf[y] = r;
            y = nx;
        }
        r
    }
    for v in 0..len {
        for &c in tree.children(hcforge::NodeId(v)) {
            if !cut.contains(&(v, c.0)) {
                let (a, b) = (find(&mut uf, v), find(&mut uf, c.0));
                uf[a] = b;
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for v in 0..len {
        if let Some(l) = tree.node(hcforge::NodeId(v)).leaf_id() {
            let r = find(&mut uf, v);
            groups.entry(r).or_default().push(l);
        }
    }
    groups.into_values().filter(|g| !g.is_empty()).collect()
}
