//! Property batteries behind the `bench` command. Each row is one property
//! checked over a number of seeded trials; trial `t` draws from
//! `child(seed, t)` and rows are assembled in trial order, so a report is a
//! pure function of the suite and the seed.

use std::fmt::Write as _;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{average_linkage, brute_force_optimal, for_each_binary_tree, random_arbitrary_tree, random_binary_tree};
use crate::epras::{dissimilarity_epras, revenue_epras, EprasConfig};
use crate::error::Result;
use crate::gen::{complement_instance, random_instance};
use crate::hcc::{combined_hcc, greedy_caterpillar_traced, CombineMode, MubBackend, DEFAULT_P};
use crate::instance::{not_all_small, Channel, Instance};
use crate::lca::lca_size_table;
use crate::objective::{eval_dissimilarity, eval_objective, eval_revenue, Objective};
use crate::partition::{solve_partition, verify_partition, Backend, PartitionTarget};
use crate::rng::{child, Rng};
use crate::sketch::{build_edge_set_f, components, degree_census, find_balanced_edge, rev_sketch, sketch_stats, split_size};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Lemmas,
    Approx,
    Oracles,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Lemmas => "lemmas",
            Suite::Approx => "approx",
            Suite::Oracles => "oracles",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "lemmas" => Ok(Suite::Lemmas),
            "approx" => Ok(Suite::Approx),
            "oracles" => Ok(Suite::Oracles),
            other => Err(format!("unknown suite '{other}' (expected lemmas, approx or oracles)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub property: String,
    pub trials: u64,
    pub violations: u64,
    /// A property-specific extreme (smallest ratio or largest slack seen).
    pub measured: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub suite: Suite,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
}

impl BenchReport {
    pub fn violations(&self) -> u64 {
        self.rows.iter().map(|r| r.violations).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# hcforge bench csv v1 suite={} seed={}", self.suite.name(), self.seed);
        out.push_str("property,trials,violations,measured\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{:.6}", r.property, r.trials, r.violations, r.measured);
        }
        out
    }
}

/// Outcome of one trial: whether it violated the property, and its measure.
type Trial = (bool, f64);

/// Runs `trials` independent trials in parallel and folds them in order,
/// keeping the minimum (`take_min`) or maximum measure.
fn property(
    name: &str,
    seed: u64,
    trials: u64,
    take_min: bool,
    f: impl Fn(&mut Rng, u64) -> Result<Trial> + Sync,
) -> Result<BenchRow> {
    let stream = crate::rng::keyed_seed(seed, name);
    let outcomes: Vec<Trial> = (0..trials).into_par_iter().map(|t| f(&mut child(stream, t), t)).collect::<Result<_>>()?;
    let violations = outcomes.iter().filter(|o| o.0).count() as u64;
    let measured = outcomes
        .iter()
        .map(|o| o.1)
        .reduce(|a, b| if take_min { a.min(b) } else { a.max(b) })
        .unwrap_or(0.0);
    Ok(BenchRow { property: name.into(), trials, violations, measured })
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<BenchReport> {
    let rows = match suite {
        Suite::Lemmas => lemmas(seed)?,
        Suite::Approx => approx(seed)?,
        Suite::Oracles => oracles(seed)?,
    };
    Ok(BenchReport { suite, seed, rows })
}

fn random_weights(n: usize, rng: &mut Rng) -> Result<Instance<f64>> {
    let density = rng.gen_range(0.2..=1.0);
    random_instance(n, density, false, rng)
}

fn lemmas(seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    rows.push(property("balanced_edge_split", seed, 300, true, |rng, _| {
        let n = rng.gen_range(3..=200);
        let t = random_binary_tree(n, rng);
        let s = split_size(&t, find_balanced_edge(&t)?);
        let small = s.min(n - s);
        Ok((3 * s < n || 3 * s > 2 * n, small as f64 / n as f64))
    })?);
    for (label, eps) in [("f_set_components_eps16", 1.0 / 16.0), ("f_set_components_eps24", 1.0 / 24.0)] {
        rows.push(property(label, seed, 60, true, |rng, _| {
            let n = rng.gen_range(24..=200);
            let t = random_binary_tree(n, rng);
            let f = build_edge_set_f(&t, eps)?;
            let nf = n as f64;
            let mut worst = f64::INFINITY;
            let mut bad = f.len() as f64 > 1.0 / eps;
            for c in components(&t, &f)? {
                let m = c.len() as f64;
                bad |= m < eps * nf || m > 3.0 * eps * nf;
                worst = worst.min(m / (eps * nf));
            }
            Ok((bad, worst))
        })?);
    }
    rows.push(property("degree3_bound", seed, 300, false, |rng, _| {
        let nodes = rng.gen_range(1..=400);
        let (leaves, high) = degree_census(&random_arbitrary_tree(nodes, rng));
        let slack = high as f64 - (leaves as f64 - 1.0);
        Ok((slack > 0.0 && nodes > 1, slack))
    })?);
    let eps = 1.0 / 12.0;
    rows.push(property("star_pair_bound", seed, 30, false, |rng, _| {
        let n = 60;
        let t = random_binary_tree(n, rng);
        let hat = rev_sketch(&t, eps)?;
        let (a, b) = (lca_size_table(&t)?, lca_size_table(&hat)?);
        let limit = 6.0 * eps * n as f64;
        let mut worst = f64::NEG_INFINITY;
        for i in 0..n {
            for j in i + 1..n {
                worst = worst.max((b.size(i, j) as f64 - a.size(i, j) as f64) / limit);
            }
        }
        let s = sketch_stats(&hat, eps);
        let bad = worst > 1.0 || s.internal_nodes as f64 > 20.0 / eps || s.max_children as f64 > 3.0 * eps * n as f64;
        Ok((bad, worst))
    })?);
    rows.push(property("greedy_floor", seed, 300, true, |rng, _| {
        let n = rng.gen_range(2..=40);
        let inst = random_weights(n, rng)?;
        let (t, rounds) = greedy_caterpillar_traced(&inst)?;
        let nf = n as f64;
        let floor = (nf - 2.0) / 3.0 * inst.total_sim() + 2.0 * nf / 3.0 * inst.total_dis();
        let v = eval_objective(&inst, &t, Objective::Hcc)?;
        let mut bad = v < floor - 1e-9 * (1.0 + floor);
        for r in &rounds {
            let s: f64 = r.sim_scores.iter().sum();
            let d: f64 = r.dis_scores.iter().sum();
            let max = r.scores().into_iter().fold(f64::NEG_INFINITY, f64::max);
            bad |= s.abs() > 1e-9 || (d - 2.0 * r.dis_weight).abs() > 1e-9 || max < -1e-9;
        }
        Ok((bad, v - floor))
    })?);
    rows.push(property("average_linkage_floors", seed, 300, true, |rng, _| {
        let n = rng.gen_range(3..=30);
        let inst = random_weights(n, rng)?;
        let nf = n as f64;
        let rev = eval_revenue(&inst, &average_linkage(&inst, Channel::Sim))?;
        let dis = eval_dissimilarity(&inst, &average_linkage(&inst, Channel::Dis))?;
        let (fr, fd) = ((nf - 2.0) / 3.0 * inst.total_sim(), 2.0 * (nf - 2.0) / 3.0 * inst.total_dis());
        let bad = rev < fr - 1e-9 * (1.0 + fr) || dis < fd - 1e-9 * (1.0 + fd);
        Ok((bad, (rev - fr).min(dis - fd)))
    })?);
    rows.push(property("partition_soundness", seed, 400, false, |rng, _| {
        let n = rng.gen_range(2..=8);
        let k = rng.gen_range(1..=3);
        let inst = random_weights(n, rng)?;
        let target = random_target(&inst, k, rng);
        let backend = [Backend::Exact, Backend::LocalSearch, Backend::SampleExtend][rng.gen_range(0..3)];
        let r = solve_partition(&inst, &target, backend, rng)?;
        let Some(a) = r.assignment() else { return Ok((false, 0.0)) };
        let d = verify_partition(&inst, a, &target)?;
        let nf = n as f64;
        let worst = (d.max_size() / (target.eps_err * nf).max(1e-12)).max(d.max_weight() / (target.eps_err * nf * nf).max(1e-12));
        Ok((!d.within(&target, n), worst.min(1e6)))
    })?);
    Ok(rows)
}

/// Target near a random assignment, so that both feasible and infeasible
/// probes occur.
pub fn random_target(inst: &Instance<f64>, k: usize, rng: &mut Rng) -> PartitionTarget {
    let n = inst.n();
    let a: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
    let (size, w) = crate::partition::bucket_weights(inst, Channel::Sim, &a, k);
    let eps_err = rng.gen_range(0.0..0.15);
    let jitter = rng.gen_range(0.0..0.3);
    let alpha = size.iter().map(|&s| (s + rng.gen_range(-1.0..=1.0) * jitter * n as f64).max(0.0)).collect();
    let mut beta = w.clone();
    for i in 0..k {
        for j in i..k {
            let v = (w[i][j] + rng.gen_range(-1.0..=1.0) * jitter * (n * n) as f64 / 4.0).max(0.0);
            beta[i][j] = v;
            beta[j][i] = v;
        }
    }
    PartitionTarget { alpha, beta, eps_err, delta: 0.1, channel: Channel::Sim }
}

fn approx(seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    rows.push(property("combined_hcc_ratio", seed, 24, true, |rng, _| {
        let n = rng.gen_range(4..=8);
        let inst = random_instance(n, 1.0, true, rng)?;
        let t = combined_hcc(&inst, DEFAULT_P, CombineMode::BestOfBoth, MubBackend::Exact, rng)?;
        let v = eval_objective(&inst, &t, Objective::Hcc)?;
        let (_, opt) = brute_force_optimal(&inst, Objective::Hcc)?;
        let ratio = if opt > 0.0 { v / opt } else { 1.0 };
        Ok((ratio < 0.4767, ratio))
    })?);
    rows.push(property("revenue_sketch_chain", seed, 12, false, |rng, _| {
        let n = rng.gen_range(5..=8);
        let eps = 1.0 / 12.0;
        let inst = random_weights(n, rng)?;
        let (opt_tree, opt) = brute_force_optimal(&inst, Objective::Rev)?;
        let hat = rev_sketch(&opt_tree, eps)?;
        let v = eval_revenue(&inst, &hat)?;
        let chain = opt - 6.0 * eps * n as f64 * inst.total_sim();
        let bad = v < chain - 1e-9 || v < (1.0 - 19.0 * eps) * opt - 1e-9;
        Ok((bad, v - chain))
    })?);
    rows.push(property("epras_vs_baseline", seed, 8, true, |rng, _| {
        let n = rng.gen_range(4..=7);
        let inst = random_instance(n, 1.0, false, rng)?;
        let cfg = EprasConfig::new(0.5);
        let r = revenue_epras(&inst, &cfg, rng)?;
        let d = dissimilarity_epras(&inst, &cfg, rng)?;
        let slack = (r.value - r.baseline_value).min(d.value - d.baseline_value);
        let dense = not_all_small(&inst, 0.5, 0.5, Channel::Sim)?;
        let bad = (dense && slack < -1e-9) || r.invariant_violations + d.invariant_violations > 0;
        Ok((bad, slack))
    })?);
    Ok(rows)
}

fn oracles(seed: u64) -> Result<Vec<BenchRow>> {
    let mut rows = Vec::new();
    rows.push(property("clique_identities", seed, 6, false, |_, t| {
        let n = t as usize + 2;
        let mut bad = false;
        // n³/6 − n²/2 + n/3 = n(n−1)(n−2)/6
        let (full, rev) = ((n * n * n - n) / 3, n * (n - 1) * (n - 2) / 6);
        let mut trees = 0u64;
        for_each_binary_tree(n, |tree| {
            let tab = lca_size_table(tree).expect("valid tree");
            let s = tab.pair_size_sum() as usize;
            let pairs = n * (n - 1) / 2;
            bad |= s != full || n * pairs - s != rev;
            trees += 1;
        });
        Ok((bad, trees as f64))
    })?);
    rows.push(property("complement_identity", seed, 10, false, |rng, _| {
        let n = 5;
        let mut g = Instance::<f64>::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_sim(i, j, rng.gen())?;
            }
        }
        let gc = complement_instance(&g);
        let full = ((n * n * n - n) / 3) as f64;
        let mut worst = 0.0f64;
        for_each_binary_tree(n, |t| {
            let cost = crate::objective::lca_weighted_sum(&g, t, Channel::Sim).expect("valid");
            let dis = eval_dissimilarity(&gc, t).expect("valid");
            worst = worst.max((cost - (full - dis)).abs());
        });
        Ok((worst > 1e-9, worst))
    })?);
    rows.push(property("brute_force_dominates_samples", seed, 20, false, |rng, _| {
        let n = rng.gen_range(3..=7);
        let inst = random_weights(n, rng)?;
        let mut worst = f64::NEG_INFINITY;
        for obj in [Objective::Rev, Objective::Dis, Objective::Hcc] {
            let (t, v) = brute_force_optimal(&inst, obj)?;
            let direct = eval_objective(&inst, &t, obj)?;
            worst = worst.max((v - direct).abs());
            for _ in 0..10 {
                let r = random_binary_tree(n, rng);
                worst = worst.max(eval_objective(&inst, &r, obj)? - v);
            }
        }
        Ok((worst > 1e-9, worst))
    })?);
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemmas_clean_and_deterministic() {
        let a = run_suite(Suite::Lemmas, 3).unwrap();
        assert_eq!(a.violations(), 0, "{}", a.to_csv());
        let b = run_suite(Suite::Lemmas, 3).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert!(a.to_csv().starts_with("# hcforge bench csv v1 suite=lemmas seed=3\nproperty,trials,violations,measured\n"));
    }

    #[test]
    fn oracles_clean() {
        let r = run_suite(Suite::Oracles, 0).unwrap();
        assert_eq!(r.violations(), 0, "{}", r.to_csv());
    }

    #[test]
    fn suite_names() {
        assert_eq!("approx".parse::<Suite>().unwrap(), Suite::Approx);
        assert!("nope".parse::<Suite>().is_err());
    }
}
