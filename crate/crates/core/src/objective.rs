//! Revenue, dissimilarity and HCC objectives.

use serde::Serialize;

use crate::error::Result;
use crate::instance::{Channel, Instance};
use crate::lca::{lca_size_table, LcaSizeTable};
use crate::scalar::{pairwise_sum, Weight};
use crate::tree::HcTree;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Rev,
    Dis,
    Hcc,
}

/// All three objective values of one tree on one instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ObjectiveReport<W> {
    pub rev: W,
    pub dis: W,
    pub hcc: W,
    pub total_sim_weight: W,
    pub total_dis_weight: W,
}

fn checked_table<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> Result<LcaSizeTable> {
    tree.ensure_valid(inst.n())?;
    lca_size_table(tree)
}

/// Σ w_ij · f(i, j) over pairs, exact on 0/1 instances.
fn weighted_pair_sum<W: Weight>(
    inst: &Instance<W>,
    channel: Channel,
    coef: impl Fn(usize, usize) -> usize,
) -> W {
    let n = inst.n();
    if inst.is_unweighted() {
        let mut acc = 0u64;
        for i in 0..n {
            for j in i + 1..n {
                if inst.weight(channel, i, j) == W::one() {
                    acc += coef(i, j) as u64;
                }
            }
        }
        return W::from_u64(acc).expect("integer total representable");
    }
    let mut terms = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            let w = inst.weight(channel, i, j);
            if w != W::zero() {
                terms.push(w * W::from_count(coef(i, j)));
            }
        }
    }
    pairwise_sum(&terms)
}

fn revenue_from_table<W: Weight>(inst: &Instance<W>, tab: &LcaSizeTable) -> W {
    let n = inst.n();
    weighted_pair_sum(inst, Channel::Sim, |i, j| n - tab.size(i, j))
}

fn dissimilarity_from_table<W: Weight>(inst: &Instance<W>, tab: &LcaSizeTable) -> W {
    weighted_pair_sum(inst, Channel::Dis, |i, j| {
        let (a, b) = tab.child_sizes(i, j);
        a + b
    })
}

/// Σ_{i<j} w^s_ij (n − |T_ij|).
pub fn eval_revenue<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> Result<W> {
    let tab = checked_table(inst, tree)?;
    Ok(revenue_from_table(inst, &tab))
}

/// Σ_{i<j} w^d_ij (|T_{v_i}| + |T_{v_j}|), where `v_i`, `v_j` are the
/// children of the LCA containing `i` and `j`. Equals Σ w^d_ij |T_ij| on
/// binary trees.
pub fn eval_dissimilarity<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> Result<W> {
    let tab = checked_table(inst, tree)?;
    Ok(dissimilarity_from_table(inst, &tab))
}

pub fn eval_hcc<W: Weight>(inst: &Instance<W>, tree: &HcTree) -> Result<ObjectiveReport<W>> {
    let tab = checked_table(inst, tree)?;
    let rev = revenue_from_table(inst, &tab);
    let dis = dissimilarity_from_table(inst, &tab);
    Ok(ObjectiveReport {
        rev,
        dis,
        hcc: rev + dis,
        total_sim_weight: inst.total_sim(),
        total_dis_weight: inst.total_dis(),
    })
}

pub fn eval_objective<W: Weight>(inst: &Instance<W>, tree: &HcTree, objective: Objective) -> Result<W> {
    match objective {
        Objective::Rev => eval_revenue(inst, tree),
        Objective::Dis => eval_dissimilarity(inst, tree),
        Objective::Hcc => Ok(eval_hcc(inst, tree)?.hcc),
    }
}

/// Σ_{i<j} w_ij |T_ij| on `channel` (the Dasgupta cost when read on a
/// similarity matrix). Uses LCA sizes even on multiway trees.
pub fn lca_weighted_sum<W: Weight>(inst: &Instance<W>, tree: &HcTree, channel: Channel) -> Result<W> {
    let tab = checked_table(inst, tree)?;
    Ok(weighted_pair_sum(inst, channel, |i, j| tab.size(i, j)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_rational::Ratio;

    fn single(n: usize, channel: Channel) -> Instance<f64> {
        let mut inst = Instance::zeros(n);
        inst.set(channel, 0, 1, 1.0).unwrap();
        inst
    }

    #[test]
    fn revenue_three_points() {
        let t = HcTree::parse("((0,1),2)").unwrap();
        assert_eq!(eval_revenue(&single(3, Channel::Sim), &t).unwrap(), 1.0);
    }

    #[test]
    fn star_revenue_is_zero() {
        let mut inst = Instance::<f64>::zeros(5);
        for i in 0..5 {
            for j in i + 1..5 {
                inst.set_sim(i, j, 0.3 + 0.1 * ((i + j) % 3) as f64).unwrap();
            }
        }
        assert_eq!(eval_revenue(&inst, &HcTree::star(5)).unwrap(), 0.0);
    }

    #[test]
    fn dissimilarity_binary_and_extended() {
        let inst = single(3, Channel::Dis);
        assert_eq!(eval_dissimilarity(&inst, &HcTree::parse("((0,1),2)").unwrap()).unwrap(), 2.0);
        assert_eq!(eval_dissimilarity(&inst, &HcTree::star(3)).unwrap(), 2.0);
        let inst = Instance::<f64>::from_edges(3, &[(0, 2, 0.0, 1.0)]).unwrap();
        assert_eq!(eval_dissimilarity(&inst, &HcTree::parse("((0,1),2)").unwrap()).unwrap(), 3.0);
    }

    #[test]
    fn hcc_degenerates() {
        let t = HcTree::parse("((0,2),(1,(3,4)))").unwrap();
        let mut inst = Instance::<f64>::zeros(5);
        inst.set_sim(0, 1, 0.5).unwrap();
        inst.set_sim(3, 4, 0.25).unwrap();
        let rep = eval_hcc(&inst, &t).unwrap();
        assert_eq!(rep.hcc, eval_revenue(&inst, &t).unwrap());
        let d = inst.channel_as_dis(Channel::Sim);
        assert_eq!(eval_hcc(&d, &t).unwrap().hcc, eval_dissimilarity(&d, &t).unwrap());
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let t = HcTree::parse("(0,1)").unwrap();
        assert!(eval_revenue(&single(3, Channel::Sim), &t).is_err());
    }

    #[test]
    fn rational_weights_are_exact() {
        let third = Ratio::new(1i64, 3);
        let inst = Instance::from_edges(3, &[(0, 1, third, third), (1, 2, third, Ratio::from_integer(0))]).unwrap();
        let t = HcTree::parse("((0,1),2)").unwrap();
        let rep = eval_hcc(&inst, &t).unwrap();
        assert_eq!(rep.rev, third);
        assert_eq!(rep.dis, Ratio::new(2, 3));
    }
}
