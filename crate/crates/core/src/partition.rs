//! Graph-partition oracle: find an assignment of points to `k` buckets
//! whose sizes and within/between-bucket weights match targets up to an
//! additive tolerance.
//!
//! Three backends share one contract. `Exact` is a pruned exhaustive search
//! (sound and complete within tolerance) that returns the feasible
//! assignment closest to the targets. `LocalSearch` and `SampleExtend`
//! are heuristics that may miss feasible targets but never report an
//! assignment that fails [`verify_partition`].

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Channel, Instance};
use crate::rng::Rng;
use crate::scalar::Weight;

/// Default cap on `kⁿ` for the exact backend (n = 14 at k = 4).
pub const DEFAULT_EXACT_BUDGET: u128 = 1 << 28;

/// Relative slack absorbing floating-point summation order.
const SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionTarget {
    pub alpha: Vec<f64>,
    /// Symmetric `k × k`; the diagonal is the within-bucket weight.
    pub beta: Vec<Vec<f64>>,
    pub eps_err: f64,
    pub delta: f64,
    pub channel: Channel,
}

impl PartitionTarget {
    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::MalformedPartition(m));
        let k = self.k();
        if k == 0 {
            return bad("no buckets".into());
        }
        if self.beta.len() != k || self.beta.iter().any(|r| r.len() != k) {
            return bad(format!("beta must be {k}x{k}"));
        }
        if self.alpha.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return bad("alpha entries must be finite and non-negative".into());
        }
        for i in 0..k {
            for j in 0..k {
                let b = self.beta[i][j];
                if !b.is_finite() || b < 0.0 {
                    return bad(format!("beta[{i}][{j}] must be finite and non-negative"));
                }
                if b != self.beta[j][i] {
                    return bad(format!("beta is not symmetric at ({i},{j})"));
                }
            }
        }
        if !(0.0..1.0).contains(&self.eps_err) {
            return Err(Error::OutOfRange { name: "eps_err", value: self.eps_err, range: "[0, 1)" });
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::OutOfRange { name: "delta", value: self.delta, range: "(0, 1)" });
        }
        Ok(())
    }

    fn size_tol(&self, n: usize) -> f64 {
        self.eps_err * n as f64 + SLACK
    }

    fn weight_tol(&self, n: usize) -> f64 {
        let n2 = (n * n) as f64;
        self.eps_err * n2 + SLACK * n2.max(1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    Exact,
    LocalSearch,
    SampleExtend,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Deviations {
    pub size: Vec<f64>,
    /// Symmetric `k × k`.
    pub weight: Vec<Vec<f64>>,
}

impl Deviations {
    pub fn max_size(&self) -> f64 {
        self.size.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_weight(&self) -> f64 {
        self.weight.iter().flatten().copied().fold(0.0, f64::max)
    }

    /// Whether every deviation is within the target's tolerance.
    pub fn within(&self, target: &PartitionTarget, n: usize) -> bool {
        self.max_size() <= target.size_tol(n) && self.max_weight() <= target.weight_tol(n)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum PartitionResult {
    Found { assignment: Vec<usize>, deviations: Deviations },
    Infeasible,
}

impl PartitionResult {
    pub fn assignment(&self) -> Option<&[usize]> {
        match self {
            PartitionResult::Found { assignment, .. } => Some(assignment),
            PartitionResult::Infeasible => None,
        }
    }

    pub fn is_found(&self) -> bool {
        matches!(self, PartitionResult::Found { .. })
    }
}

fn dense_weights<W: Weight>(inst: &Instance<W>, channel: Channel) -> Vec<f64> {
    let n = inst.n();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w[i * n + j] = inst.weight(channel, i, j).as_f64();
            }
        }
    }
    w
}

/// Bucket sizes and the symmetric bucket weight matrix, by direct summation.
pub fn bucket_weights<W: Weight>(
    inst: &Instance<W>,
    channel: Channel,
    assignment: &[usize],
    k: usize,
) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = inst.n();
    let mut size = vec![0.0; k];
    let mut w = vec![vec![0.0; k]; k];
    for u in 0..n {
        size[assignment[u]] += 1.0;
        for v in u + 1..n {
            let (a, b) = (assignment[u], assignment[v]);
            let x = inst.weight(channel, u, v).as_f64();
            w[a][b] += x;
            if a != b {
                w[b][a] += x;
            }
        }
    }
    (size, w)
}

/// Deviations of `assignment` from `target`, by direct summation.
pub fn verify_partition<W: Weight>(
    inst: &Instance<W>,
    assignment: &[usize],
    target: &PartitionTarget,
) -> Result<Deviations> {
    let k = target.k();
    if assignment.len() != inst.n() {
        return Err(Error::MalformedPartition(format!(
            "assignment covers {} of {} points",
            assignment.len(),
            inst.n()
        )));
    }
    if let Some(&b) = assignment.iter().find(|&&b| b >= k) {
        return Err(Error::MalformedPartition(format!("bucket {b} out of range for k = {k}")));
    }
    let (size, w) = bucket_weights(inst, target.channel, assignment, k);
    Ok(Deviations {
        size: (0..k).map(|i| (size[i] - target.alpha[i]).abs()).collect(),
        weight: (0..k).map(|i| (0..k).map(|j| (w[i][j] - target.beta[i][j]).abs()).collect()).collect(),
    })
}

/// Heuristic penalty: zero exactly when every deviation is within tolerance.
pub fn penalty(size: &[f64], w: &[Vec<f64>], target: &PartitionTarget, n: usize) -> f64 {
    let nf = (n as f64).max(1.0);
    let (ts, tw) = (target.size_tol(n), target.weight_tol(n));
    let k = target.k();
    let mut p = 0.0;
    for i in 0..k {
        p += ((size[i] - target.alpha[i]).abs() - ts).max(0.0) / nf;
        for j in i..k {
            p += ((w[i][j] - target.beta[i][j]).abs() - tw).max(0.0) / (nf * nf);
        }
    }
    p
}

pub fn solve_partition<W: Weight>(
    inst: &Instance<W>,
    target: &PartitionTarget,
    backend: Backend,
    rng: &mut Rng,
) -> Result<PartitionResult> {
    solve_partition_with_budget(inst, target, backend, rng, DEFAULT_EXACT_BUDGET)
}

pub fn solve_partition_with_budget<W: Weight>(
    inst: &Instance<W>,
    target: &PartitionTarget,
    backend: Backend,
    rng: &mut Rng,
    exact_budget: u128,
) -> Result<PartitionResult> {
    target.validate()?;
    let n = inst.n();
    let w = dense_weights(inst, target.channel);
    let found = match backend {
        Backend::Exact => {
            let needed = (target.k() as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
            if needed > exact_budget {
                return Err(Error::BudgetExceeded { needed, budget: exact_budget });
            }
            exact_search(&w, n, target)
        }
        Backend::LocalSearch => local_search(&w, n, target, rng),
        Backend::SampleExtend => sample_extend(&w, n, target, rng),
    };
    let Some(assignment) = found else {
        return Ok(PartitionResult::Infeasible);
    };
    let deviations = verify_partition(inst, &assignment, target)?;
    if deviations.within(target, n) {
        Ok(PartitionResult::Found { assignment, deviations })
    } else {
        Ok(PartitionResult::Infeasible)
    }
}

/// Running bucket statistics with O(k) point moves.
struct State<'a> {
    w: &'a [f64],
    n: usize,
    k: usize,
    assign: Vec<usize>,
    size: Vec<f64>,
    cell: Vec<Vec<f64>>,
    /// `conn[u * k + c]`: weight from `u` to the other members of bucket `c`.
    conn: Vec<f64>,
}

impl<'a> State<'a> {
    fn new(w: &'a [f64], n: usize, k: usize, assign: Vec<usize>) -> Self {
        let mut size = vec![0.0; k];
        let mut cell = vec![vec![0.0; k]; k];
        let mut conn = vec![0.0; n * k];
        for u in 0..n {
            size[assign[u]] += 1.0;
            for v in 0..n {
                if u != v {
                    conn[u * k + assign[v]] += w[u * n + v];
                    if u < v {
                        let (a, b) = (assign[u], assign[v]);
                        cell[a][b] += w[u * n + v];
                        if a != b {
                            cell[b][a] += w[u * n + v];
                        }
                    }
                }
            }
        }
        Self { w, n, k, assign, size, cell, conn }
    }

    /// Applies moving `u` (with connection profile `conn_u`) from `a` to `b`
    /// to the given size and cell buffers.
    fn shift(size: &mut [f64], cell: &mut [Vec<f64>], conn_u: &[f64], a: usize, b: usize) {
        let k = size.len();
        size[a] -= 1.0;
        size[b] += 1.0;
        for c in 0..k {
            cell[a][c] -= conn_u[c];
            if c != a {
                cell[c][a] -= conn_u[c];
            }
        }
        for c in 0..k {
            cell[b][c] += conn_u[c];
            if c != b {
                cell[c][b] += conn_u[c];
            }
        }
    }

    fn move_point(&mut self, u: usize, b: usize) {
        let (n, k) = (self.n, self.k);
        let a = self.assign[u];
        let conn_u: Vec<f64> = self.conn[u * k..(u + 1) * k].to_vec();
        Self::shift(&mut self.size, &mut self.cell, &conn_u, a, b);
        self.assign[u] = b;
        for v in 0..n {
            if v != u {
                let x = self.w[v * n + u];
                self.conn[v * k + a] -= x;
                self.conn[v * k + b] += x;
            }
        }
    }

    fn penalty(&self, target: &PartitionTarget) -> f64 {
        penalty(&self.size, &self.cell, target, self.n)
    }

    fn trial_move(&self, u: usize, b: usize, target: &PartitionTarget) -> f64 {
        let k = self.k;
        let mut size = self.size.clone();
        let mut cell = self.cell.clone();
        Self::shift(&mut size, &mut cell, &self.conn[u * k..(u + 1) * k], self.assign[u], b);
        penalty(&size, &cell, target, self.n)
    }

    fn trial_swap(&self, u: usize, v: usize, target: &PartitionTarget) -> f64 {
        let (n, k) = (self.n, self.k);
        let (a, b) = (self.assign[u], self.assign[v]);
        let mut size = self.size.clone();
        let mut cell = self.cell.clone();
        Self::shift(&mut size, &mut cell, &self.conn[u * k..(u + 1) * k], a, b);
        let mut conn_v: Vec<f64> = self.conn[v * k..(v + 1) * k].to_vec();
        conn_v[a] -= self.w[v * n + u];
        conn_v[b] += self.w[v * n + u];
        Self::shift(&mut size, &mut cell, &conn_v, b, a);
        penalty(&size, &cell, target, n)
    }

    /// Best-improvement descent over moves and swaps; sideways steps are
    /// capped at `2n`.
    fn descend(&mut self, target: &PartitionTarget) -> f64 {
        let (n, k) = (self.n, self.k);
        let mut current = self.penalty(target);
        let mut sideways = 0;
        let max_steps = 50 * n.max(1) + 100;
        for _ in 0..max_steps {
            if current == 0.0 {
                break;
            }
            let mut best: Option<(f64, usize, usize, bool)> = None;
            for u in 0..n {
                for b in 0..k {
                    if b != self.assign[u] {
                        let p = self.trial_move(u, b, target);
                        if best.is_none_or(|x| p < x.0) {
                            best = Some((p, u, b, false));
                        }
                    }
                }
                for v in u + 1..n {
                    if self.assign[u] != self.assign[v] {
                        let p = self.trial_swap(u, v, target);
                        if best.is_none_or(|x| p < x.0) {
                            best = Some((p, u, v, true));
                        }
                    }
                }
            }
            let Some((p, x, y, swap)) = best else { break };
            if p > current || (p == current && sideways >= 2 * n) {
                break;
            }
            if p == current {
                sideways += 1;
            }
            if swap {
                let (bx, by) = (self.assign[x], self.assign[y]);
                self.move_point(x, by);
                self.move_point(y, bx);
            } else {
                self.move_point(x, y);
            }
            current = self.penalty(target);
        }
        current
    }
}

/// Assignment whose bucket sizes follow the rounded targets.
fn size_seeded_assignment(n: usize, target: &PartitionTarget, rng: &mut Rng) -> Vec<usize> {
    let k = target.k();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut assign = vec![0; n];
    let mut pos = 0;
    for (b, &a) in target.alpha.iter().enumerate() {
        let take = (a.round() as usize).min(n - pos);
        for &u in &order[pos..pos + take] {
            assign[u] = b;
        }
        pos += take;
    }
    for &u in &order[pos..] {
        assign[u] = rng.gen_range(0..k);
    }
    assign
}

fn local_search(w: &[f64], n: usize, target: &PartitionTarget, rng: &mut Rng) -> Option<Vec<usize>> {
    let restarts = (1.0 / target.delta).ln().ceil().max(1.0) as usize;
    for _ in 0..restarts {
        let mut s = State::new(w, n, target.k(), size_seeded_assignment(n, target, rng));
        if s.descend(target) == 0.0 {
            return Some(s.assign);
        }
    }
    None
}

/// Largest sample whose assignments are enumerated.
const SAMPLE_ENUM_CAP: u128 = 1 << 12;

fn sample_extend(w: &[f64], n: usize, target: &PartitionTarget, rng: &mut Rng) -> Option<Vec<usize>> {
    let k = target.k();
    let eps = target.eps_err.max(1e-3);
    let wanted = ((1.0 / target.delta).ln().max(1.0) / (eps * eps)).ceil() as usize;
    let mut s = wanted.min(n);
    while s > 0 && (k as u128).pow(s as u32) > SAMPLE_ENUM_CAP {
        s -= 1;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let (sample, rest) = order.split_at(s);
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut labels = vec![0usize; s];
    loop {
        let assign = greedy_extend(w, n, target, sample, &labels, rest);
        let p = State::new(w, n, k, assign.clone()).penalty(target);
        if best.as_ref().is_none_or(|b| p < b.0) {
            best = Some((p, assign));
        }
        if p == 0.0 || !next_labels(&mut labels, k) {
            break;
        }
    }
    let (_, assign) = best?;
    let mut st = State::new(w, n, k, assign);
    (st.descend(target) == 0.0).then_some(st.assign)
}

fn next_labels(labels: &mut [usize], k: usize) -> bool {
    for l in labels.iter_mut() {
        *l += 1;
        if *l < k {
            return true;
        }
        *l = 0;
    }
    false
}

/// Places the remaining points one at a time into the bucket minimizing the
/// penalty against targets scaled to the fraction of points placed.
fn greedy_extend(
    w: &[f64],
    n: usize,
    target: &PartitionTarget,
    sample: &[usize],
    labels: &[usize],
    rest: &[usize],
) -> Vec<usize> {
    let k = target.k();
    let mut assign = vec![usize::MAX; n];
    let mut size = vec![0.0; k];
    let mut cell = vec![vec![0.0; k]; k];
    let mut placed: Vec<usize> = Vec::with_capacity(n);
    for (&u, &b) in sample.iter().zip(labels) {
        place(w, n, u, b, &mut assign, &mut size, &mut cell, &mut placed);
    }
    for &u in rest {
        let f = (placed.len() + 1) as f64 / n as f64;
        let mut scaled = target.clone();
        scaled.alpha.iter_mut().for_each(|a| *a *= f);
        scaled.beta.iter_mut().flatten().for_each(|b| *b *= f * f);
        let mut conn = vec![0.0; k];
        for &v in &placed {
            conn[assign[v]] += w[u * n + v];
        }
        let mut best = (f64::INFINITY, 0usize);
        for b in 0..k {
            let mut s2 = size.clone();
            s2[b] += 1.0;
            let mut c2 = cell.clone();
            for c in 0..k {
                c2[b][c] += conn[c];
                if c != b {
                    c2[c][b] += conn[c];
                }
            }
            let p = penalty(&s2, &c2, &scaled, n);
            // break penalty ties by the largest remaining size deficit
            let deficit = scaled.alpha[b] - size[b];
            let key = p - deficit * 1e-12;
            if key < best.0 {
                best = (key, b);
            }
        }
        place(w, n, u, best.1, &mut assign, &mut size, &mut cell, &mut placed);
    }
    assign
}

#[allow(clippy::too_many_arguments)]
fn place(
    w: &[f64],
    n: usize,
    u: usize,
    b: usize,
    assign: &mut [usize],
    size: &mut [f64],
    cell: &mut [Vec<f64>],
    placed: &mut Vec<usize>,
) {
    for &v in placed.iter() {
        let c = assign[v];
        let x = w[u * n + v];
        cell[b][c] += x;
        if b != c {
            cell[c][b] += x;
        }
    }
    size[b] += 1.0;
    assign[u] = b;
    placed.push(u);
}

/// Pruned exhaustive search in point order.
fn exact_search(w: &[f64], n: usize, target: &PartitionTarget) -> Option<Vec<usize>> {
    let k = target.k();
    let (ts, tw) = (target.size_tol(n), target.weight_tol(n));
    // remaining[u]: weight on pairs with at least one endpoint in u..n
    let mut remaining = vec![0.0; n + 1];
    for u in (0..n).rev() {
        let incident: f64 = (0..u).map(|v| w[u * n + v]).sum();
        remaining[u] = remaining[u + 1] + incident;
    }
    let mut search = Exact {
        w,
        n,
        k,
        target,
        ts,
        tw,
        remaining,
        assign: vec![0; n],
        size: vec![0.0; k],
        cell: vec![vec![0.0; k]; k],
        best: None,
    };
    search.dfs(0);
    search.best.map(|(_, a)| a)
}

struct Exact<'a> {
    w: &'a [f64],
    n: usize,
    k: usize,
    target: &'a PartitionTarget,
    ts: f64,
    tw: f64,
    remaining: Vec<f64>,
    assign: Vec<usize>,
    size: Vec<f64>,
    cell: Vec<Vec<f64>>,
    best: Option<(f64, Vec<usize>)>,
}

impl Exact<'_> {
    /// Total normalized deviation of the current complete assignment.
    fn residual(&self) -> f64 {
        let nf = (self.n as f64).max(1.0);
        let mut r = 0.0;
        for i in 0..self.k {
            r += (self.size[i] - self.target.alpha[i]).abs() / nf;
            for j in i..self.k {
                r += (self.cell[i][j] - self.target.beta[i][j]).abs() / (nf * nf);
            }
        }
        r
    }

    fn viable(&self, next: usize) -> bool {
        let left = (self.n - next) as f64;
        let spare = self.remaining[next];
        for i in 0..self.k {
            let a = self.target.alpha[i];
            if self.size[i] > a + self.ts || self.size[i] + left < a - self.ts {
                return false;
            }
            for j in i..self.k {
                let (c, b) = (self.cell[i][j], self.target.beta[i][j]);
                if c > b + self.tw || c + spare < b - self.tw {
                    return false;
                }
            }
        }
        true
    }

    fn dfs(&mut self, u: usize) {
        if u == self.n {
            let r = self.residual();
            if self.best.as_ref().is_none_or(|b| r < b.0) {
                self.best = Some((r, self.assign.clone()));
            }
            return;
        }
        let mut conn = vec![0.0; self.k];
        for v in 0..u {
            conn[self.assign[v]] += self.w[u * self.n + v];
        }
        for b in 0..self.k {
            self.apply(b, &conn, 1.0);
            self.assign[u] = b;
            if self.viable(u + 1) {
                self.dfs(u + 1);
            }
            self.apply(b, &conn, -1.0);
        }
    }

    fn apply(&mut self, b: usize, conn: &[f64], sign: f64) {
        self.size[b] += sign;
        for c in 0..self.k {
            self.cell[b][c] += sign * conn[c];
            if c != b {
                self.cell[c][b] += sign * conn[c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    fn clique(n: usize) -> Instance<f64> {
        let mut inst = Instance::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                inst.set_sim(i, j, 1.0).unwrap();
            }
        }
        inst
    }

    fn target(alpha: Vec<f64>, beta: Vec<Vec<f64>>, eps_err: f64) -> PartitionTarget {
        PartitionTarget { alpha, beta, eps_err, delta: 0.1, channel: Channel::Sim }
    }

    const ALL: [Backend; 3] = [Backend::Exact, Backend::LocalSearch, Backend::SampleExtend];

    #[test]
    fn single_bucket() {
        let inst = clique(5);
        let t = target(vec![5.0], vec![vec![10.0]], 0.0);
        for b in ALL {
            let r = solve_partition(&inst, &t, b, &mut seeded(1)).unwrap();
            let PartitionResult::Found { assignment, deviations } = r else { panic!("{b:?}") };
            assert_eq!(assignment, vec![0; 5]);
            assert_eq!(deviations.max_size() + deviations.max_weight(), 0.0);
        }
    }

    #[test]
    fn clique_bisection() {
        let inst = clique(4);
        let t = target(vec![2.0, 2.0], vec![vec![1.0, 4.0], vec![4.0, 1.0]], 0.0);
        for b in ALL {
            assert!(solve_partition(&inst, &t, b, &mut seeded(2)).unwrap().is_found(), "{b:?}");
        }
        let t = target(vec![2.0, 2.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], 0.01);
        for b in ALL {
            assert_eq!(solve_partition(&inst, &t, b, &mut seeded(3)).unwrap(), PartitionResult::Infeasible);
        }
    }

    #[test]
    fn verify_examples() {
        let inst = Instance::<f64>::zeros(4);
        let t = target(vec![2.0, 2.0], vec![vec![0.0; 2]; 2], 0.0);
        let d = verify_partition(&inst, &[0, 0, 1, 1], &t).unwrap();
        assert_eq!((d.max_size(), d.max_weight()), (0.0, 0.0));
        let d = verify_partition(&inst, &[0, 0, 0, 1], &t).unwrap();
        assert_eq!(d.size, vec![1.0, 1.0]);
        assert_eq!(d.max_weight(), 0.0);
        assert!(verify_partition(&inst, &[0, 0, 1], &t).is_err());
        assert!(verify_partition(&inst, &[0, 0, 1, 2], &t).is_err());
    }

    #[test]
    fn exact_budget() {
        let inst = clique(15);
        let t = target(vec![5.0; 4], vec![vec![0.0; 4]; 4], 0.1);
        assert!(matches!(
            solve_partition(&inst, &t, Backend::Exact, &mut seeded(0)),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn malformed_targets() {
        let inst = clique(3);
        let asym = target(vec![1.0, 2.0], vec![vec![0.0, 1.0], vec![2.0, 0.0]], 0.1);
        assert!(solve_partition(&inst, &asym, Backend::Exact, &mut seeded(0)).is_err());
        let mut bad_delta = target(vec![3.0], vec![vec![3.0]], 0.1);
        bad_delta.delta = 1.0;
        assert!(solve_partition(&inst, &bad_delta, Backend::Exact, &mut seeded(0)).is_err());
    }

    #[test]
    fn state_moves_match_direct_sums() {
        let mut rng = seeded(4);
        let n = 9;
        let mut inst = Instance::<f64>::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                inst.set_sim(i, j, rng.gen::<f64>()).unwrap();
            }
        }
        let w = dense_weights(&inst, Channel::Sim);
        let assign: Vec<usize> = (0..n).map(|_| rng.gen_range(0..3)).collect();
        let mut s = State::new(&w, n, 3, assign);
        for _ in 0..30 {
            let u = rng.gen_range(0..n);
            let b = rng.gen_range(0..3);
            s.move_point(u, b);
            let (size, cell) = bucket_weights(&inst, Channel::Sim, &s.assign, 3);
            assert_eq!(size, s.size);
            for i in 0..3 {
                for j in 0..3 {
                    assert!((cell[i][j] - s.cell[i][j]).abs() < 1e-9);
                }
            }
        }
    }
}
