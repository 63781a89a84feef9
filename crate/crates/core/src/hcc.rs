//! Worst-case algorithms for the HCC objective: the greedy caterpillar,
//! Max-Uncut Bisection seeding, and their combination.

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::objective::{eval_objective, Objective};
use crate::rng::Rng;
use crate::scalar::Weight;
use crate::tree::{HcTree, TreeBuilder};

/// Default coin bias: `1 − (1/3)/0.585 ≈ 0.4302`.
pub const DEFAULT_P: f64 = 1.0 - (1.0 / 3.0) / 0.585;

/// Largest `n` accepted by the exact bisection backend.
pub const MUB_EXACT_MAX_N: usize = 20;

const MUB_RESTARTS: usize = 8;

/// Scores of one greedy round, split into their similarity and
/// dissimilarity contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct GreedyRound<W> {
    /// Surviving vertices in increasing id order.
    pub survivors: Vec<usize>,
    pub sim_scores: Vec<W>,
    pub dis_scores: Vec<W>,
    pub removed: usize,
    /// Total dissimilarity weight among the survivors.
    pub dis_weight: W,
}

impl<W: Weight> GreedyRound<W> {
    pub fn scores(&self) -> Vec<W> {
        self.sim_scores.iter().zip(&self.dis_scores).map(|(&a, &b)| a + b).collect()
    }
}

fn greedy_scores<W: Weight>(inst: &Instance<W>, alive: &[usize]) -> (Vec<W>, Vec<W>, W) {
    let m = alive.len();
    let two = W::from_count(2);
    let near_s = W::from_count(m - 2) / two;
    let near_d = W::from_count(m) / two;
    let mut sim = vec![W::zero(); m];
    let mut dis = vec![W::zero(); m];
    let mut sim_total = W::zero();
    let mut dis_total = W::zero();
    let mut sim_row = vec![W::zero(); m];
    let mut dis_row = vec![W::zero(); m];
    for a in 0..m {
        for b in a + 1..m {
            let (i, j) = (alive[a], alive[b]);
            let (ws, wd) = (inst.sim(i, j), inst.dis(i, j));
            sim_total = sim_total + ws;
            dis_total = dis_total + wd;
            sim_row[a] = sim_row[a] + ws;
            sim_row[b] = sim_row[b] + ws;
            dis_row[a] = dis_row[a] + wd;
            dis_row[b] = dis_row[b] + wd;
        }
    }
    // An edge adds +w to every vertex off it; rewrite as "+w to everyone,
    // then correct the two endpoints".
    for a in 0..m {
        sim[a] = sim_total - sim_row[a] - near_s * sim_row[a];
        dis[a] = near_d * dis_row[a] - (dis_total - dis_row[a]);
    }
    (sim, dis, dis_total)
}

/// Greedy caterpillar with the per-round score trace.
pub fn greedy_caterpillar_traced<W: Weight>(inst: &Instance<W>) -> Result<(HcTree, Vec<GreedyRound<W>>)> {
    let n = inst.n();
    if n < 2 {
        return Err(Error::TooFewLeaves { needed: 2, got: n });
    }
    let mut alive: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut rounds = Vec::new();
    while alive.len() > 2 {
        let (sim, dis, dis_weight) = greedy_scores(inst, &alive);
        let mut best = 0;
        for a in 1..alive.len() {
            if sim[a] + dis[a] > sim[best] + dis[best] {
                best = a;
            }
        }
        let removed = alive[best];
        rounds.push(GreedyRound { survivors: alive.clone(), sim_scores: sim, dis_scores: dis, removed, dis_weight });
        order.push(removed);
        alive.remove(best);
    }
    order.extend_from_slice(&alive);
    Ok((HcTree::caterpillar(&order), rounds))
}

/// Repeatedly peels off the highest-scoring vertex (smallest id on ties);
/// the last two vertices form the bottom cherry.
pub fn greedy_caterpillar<W: Weight>(inst: &Instance<W>) -> Result<HcTree> {
    greedy_caterpillar_traced(inst).map(|(t, _)| t)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MubBackend {
    Exact,
    LocalSearch,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bisection<W> {
    pub left: Vec<usize>,
    pub right: Vec<usize>,
    pub uncut_weight: W,
}

/// Similarity weight inside `left` plus inside `right`.
pub fn uncut_weight<W: Weight>(inst: &Instance<W>, side: &[bool]) -> W {
    let n = inst.n();
    let mut total = W::zero();
    for i in 0..n {
        for j in i + 1..n {
            if side[i] == side[j] {
                total = total + inst.sim(i, j);
            }
        }
    }
    total
}

fn bisection_from<W: Weight>(inst: &Instance<W>, side: &[bool]) -> Bisection<W> {
    let (left, right): (Vec<usize>, Vec<usize>) = (0..inst.n()).partition(|&i| side[i]);
    Bisection { left, right, uncut_weight: uncut_weight(inst, side) }
}

/// Balanced bipartition maximizing uncut similarity. Sides differ in size
/// by at most one.
pub fn max_uncut_bisection<W: Weight>(inst: &Instance<W>, backend: MubBackend, rng: &mut Rng) -> Result<Bisection<W>> {
    let n = inst.n();
    if n < 2 {
        return Err(Error::TooFewLeaves { needed: 2, got: n });
    }
    match backend {
        MubBackend::Exact => {
            if n > MUB_EXACT_MAX_N {
                return Err(Error::GuardExceeded { n, max: MUB_EXACT_MAX_N });
            }
            let mut sizes = vec![n / 2];
            if n % 2 == 1 {
                sizes.push(n / 2 + 1);
            }
            let mut best: Option<(W, Vec<bool>)> = None;
            for size in sizes {
                // the side holding vertex 0
                for rest in (1..n).combinations(size - 1) {
                    let mut side = vec![false; n];
                    side[0] = true;
                    rest.iter().for_each(|&i| side[i] = true);
                    let v = uncut_weight(inst, &side);
                    if best.as_ref().is_none_or(|b| v > b.0) {
                        best = Some((v, side));
                    }
                }
            }
            Ok(bisection_from(inst, &best.expect("n >= 2").1))
        }
        MubBackend::LocalSearch => {
            let mut best: Option<(W, Vec<bool>)> = None;
            for _ in 0..MUB_RESTARTS {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(rng);
                let mut side = vec![false; n];
                order[..n / 2].iter().for_each(|&i| side[i] = true);
                let mut value = uncut_weight(inst, &side);
                loop {
                    let mut step: Option<(W, usize, usize)> = None;
                    for i in 0..n {
                        for j in 0..n {
                            if side[i] && !side[j] {
                                side.swap(i, j);
                                let v = uncut_weight(inst, &side);
                                side.swap(i, j);
                                if v > value && step.as_ref().is_none_or(|s| v > s.0) {
                                    step = Some((v, i, j));
                                }
                            }
                        }
                    }
                    let Some((v, i, j)) = step else { break };
                    side.swap(i, j);
                    value = v;
                }
                if best.as_ref().is_none_or(|b| value > b.0) {
                    best = Some((value, side));
                }
            }
            Ok(bisection_from(inst, &best.expect("restarts >= 1").1))
        }
    }
}

fn side_tree<W: Weight>(inst: &Instance<W>, points: &[usize], b: &mut TreeBuilder) -> Result<crate::tree::NodeId> {
    if points.len() == 1 {
        return Ok(b.leaf(points[0]));
    }
    let sub = greedy_caterpillar(&inst.restrict(points))?;
    Ok(sub.copy_into(b, &|i| points[i]))
}

/// Root split by a Max-Uncut Bisection, each side a greedy caterpillar.
pub fn mub_then_greedy<W: Weight>(inst: &Instance<W>, backend: MubBackend, rng: &mut Rng) -> Result<HcTree> {
    let n = inst.n();
    if n == 1 {
        return Ok(HcTree::single_leaf(0));
    }
    let bis = max_uncut_bisection(inst, backend, rng)?;
    let mut b = TreeBuilder::new();
    let l = side_tree(inst, &bis.left, &mut b)?;
    let r = side_tree(inst, &bis.right, &mut b)?;
    let root = b.internal(vec![l, r]);
    Ok(b.finish(root))
}

fn hcc_value<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> Result<W> {
    eval_objective(inst, tree, Objective::Hcc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMode {
    /// Greedy with probability `p`, otherwise MUB-seeded.
    Randomized,
    /// Both, keeping the higher HCC value (greedy on ties).
    BestOfBoth,
}

pub fn combined_hcc<W: Weight>(
    inst: &Instance<W>,
    p: f64,
    mode: CombineMode,
    backend: MubBackend,
    rng: &mut Rng,
) -> Result<HcTree> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::OutOfRange { name: "p", value: p, range: "[0, 1]" });
    }
    if inst.n() < 2 {
        return Ok(HcTree::single_leaf(0));
    }
    match mode {
        CombineMode::Randomized => {
            if rng.gen::<f64>() < p {
                greedy_caterpillar(inst)
            } else {
                mub_then_greedy(inst, backend, rng)
            }
        }
        CombineMode::BestOfBoth => {
            let (g, m) = rayon::join(|| greedy_caterpillar(inst), || mub_then_greedy(inst, backend, rng));
            let (g, m) = (g?, m?);
            if hcc_value(inst, &m)? > hcc_value(inst, &g)? {
                Ok(m)
            } else {
                Ok(g)
            }
        }
    }
}
