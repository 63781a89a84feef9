//! Weighted instances: `n` data points with a similarity and a
//! dissimilarity matrix, both symmetric with zero diagonal and entries in
//! `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Weight;

/// Which weight matrix an operation reads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Sim,
    Dis,
}

/// Dense instance over a weight scalar `W`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance<W = f64> {
    n: usize,
    sim: Vec<W>,
    dis: Vec<W>,
    unweighted: bool,
}

impl<W: Weight> Instance<W> {
    /// All-zero instance on `n` points.
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            sim: vec![W::zero(); n * n],
            dis: vec![W::zero(); n * n],
            unweighted: true,
        }
    }

    /// Builds an instance from `(i, j, w_s, w_d)` entries; omitted pairs are
    /// `(0, 0)`.
    pub fn from_edges(n: usize, edges: &[(usize, usize, W, W)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("n must be positive".into()));
        }
        let mut inst = Self::zeros(n);
        let mut seen = vec![false; n * n];
        for &(i, j, ws, wd) in edges {
            if i == j {
                return Err(Error::InvalidInstance(format!("self-pair ({i}, {i})")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidInstance(format!(
                    "pair ({i}, {j}) out of range for n = {n}"
                )));
            }
            if seen[i * n + j] {
                return Err(Error::InvalidInstance(format!("duplicate pair ({i}, {j})")));
            }
            seen[i * n + j] = true;
            seen[j * n + i] = true;
            inst.set_sim(i, j, ws)?;
            inst.set_dis(i, j, wd)?;
        }
        Ok(inst)
    }

    /// Builds from full matrices; checks every invariant.
    pub fn from_matrices(sim: Vec<Vec<W>>, dis: Vec<Vec<W>>) -> Result<Self> {
        let n = sim.len();
        if n == 0 || dis.len() != n {
            return Err(Error::InvalidInstance("matrix shapes disagree or are empty".into()));
        }
        let mut inst = Self::zeros(n);
        for i in 0..n {
            if sim[i].len() != n || dis[i].len() != n {
                return Err(Error::InvalidInstance(format!("row {i} has the wrong length")));
            }
            for j in 0..n {
                if i == j {
                    if sim[i][i] != W::zero() || dis[i][i] != W::zero() {
                        return Err(Error::InvalidInstance(format!("nonzero diagonal at {i}")));
                    }
                    continue;
                }
                if sim[i][j] != sim[j][i] || dis[i][j] != dis[j][i] {
                    return Err(Error::InvalidInstance(format!("asymmetric at ({i}, {j})")));
                }
                if i < j {
                    inst.set_sim(i, j, sim[i][j])?;
                    inst.set_dis(i, j, dis[i][j])?;
                }
            }
        }
        Ok(inst)
    }

    fn check_weight(i: usize, j: usize, w: W) -> Result<()> {
        if w < W::zero() || w > W::one() {
            return Err(Error::InvalidInstance(format!(
                "weight {:?} at ({i}, {j}) outside [0, 1]",
                w
            )));
        }
        Ok(())
    }

    fn note_weight(&mut self, w: W) {
        if w != W::zero() && w != W::one() {
            self.unweighted = false;
        }
    }

    pub fn set_sim(&mut self, i: usize, j: usize, w: W) -> Result<()> {
        self.set(Channel::Sim, i, j, w)
    }

    pub fn set_dis(&mut self, i: usize, j: usize, w: W) -> Result<()> {
        self.set(Channel::Dis, i, j, w)
    }

    pub fn set(&mut self, channel: Channel, i: usize, j: usize, w: W) -> Result<()> {
        if i == j || i >= self.n || j >= self.n {
            return Err(Error::InvalidInstance(format!("cannot set pair ({i}, {j})")));
        }
        Self::check_weight(i, j, w)?;
        let n = self.n;
        let m = match channel {
            Channel::Sim => &mut self.sim,
            Channel::Dis => &mut self.dis,
        };
        m[i * n + j] = w;
        m[j * n + i] = w;
        self.note_weight(w);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn sim(&self, i: usize, j: usize) -> W {
        self.sim[i * self.n + j]
    }

    #[inline]
    pub fn dis(&self, i: usize, j: usize) -> W {
        self.dis[i * self.n + j]
    }

    #[inline]
    pub fn weight(&self, channel: Channel, i: usize, j: usize) -> W {
        match channel {
            Channel::Sim => self.sim(i, j),
            Channel::Dis => self.dis(i, j),
        }
    }

    /// True when every weight is 0 or 1; objective sums are then
    /// accumulated as integers.
    pub fn is_unweighted(&self) -> bool {
        self.unweighted
    }

    pub fn total(&self, channel: Channel) -> W {
        let mut acc = Vec::with_capacity(self.n * self.n.saturating_sub(1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                acc.push(self.weight(channel, i, j));
            }
        }
        crate::scalar::pairwise_sum(&acc)
    }

    pub fn total_sim(&self) -> W {
        self.total(Channel::Sim)
    }

    pub fn total_dis(&self) -> W {
        self.total(Channel::Dis)
    }

    /// Copy with the dissimilarity matrix zeroed.
    pub fn sim_only(&self) -> Self {
        let mut out = self.clone();
        out.dis.iter_mut().for_each(|w| *w = W::zero());
        out.recompute_flag();
        out
    }

    /// Copy with the similarity matrix zeroed.
    pub fn dis_only(&self) -> Self {
        let mut out = self.clone();
        out.sim.iter_mut().for_each(|w| *w = W::zero());
        out.recompute_flag();
        out
    }

    /// Copy whose dissimilarity matrix is this instance's `channel` matrix
    /// and whose similarity matrix is zero.
    pub fn channel_as_dis(&self, channel: Channel) -> Self {
        let mut out = Self::zeros(self.n);
        out.dis = match channel {
            Channel::Sim => self.sim.clone(),
            Channel::Dis => self.dis.clone(),
        };
        out.recompute_flag();
        out
    }

    /// Copy whose similarity matrix is this instance's `channel` matrix.
    pub fn channel_as_sim(&self, channel: Channel) -> Self {
        let mut out = Self::zeros(self.n);
        out.sim = match channel {
            Channel::Sim => self.sim.clone(),
            Channel::Dis => self.dis.clone(),
        };
        out.recompute_flag();
        out
    }

    fn recompute_flag(&mut self) {
        self.unweighted = self
            .sim
            .iter()
            .chain(self.dis.iter())
            .all(|&w| w == W::zero() || w == W::one());
    }

    /// Sub-instance on `points`, relabelled `0..points.len()` in the given
    /// order.
    pub fn restrict(&self, points: &[usize]) -> Self {
        let m = points.len();
        let mut out = Self::zeros(m);
        for (a, &i) in points.iter().enumerate() {
            for (b, &j) in points.iter().enumerate() {
                out.sim[a * m + b] = self.sim(i, j);
                out.dis[a * m + b] = self.dis(i, j);
            }
        }
        out.recompute_flag();
        out
    }

    /// Checks `w_s + w_d = 1` on every off-diagonal pair.
    pub fn check_complementary(&self) -> Result<()> {
        for i in 0..self.n {
            for j in i + 1..self.n {
                let s = self.sim(i, j) + self.dis(i, j);
                if s != W::one() {
                    let slack = (s.as_f64() - 1.0).abs();
                    if slack > 1e-12 {
                        return Err(Error::NotComplementary { i, j, sum: s.as_f64() });
                    }
                }
            }
        }
        Ok(())
    }

    /// Converts the scalar type through `f64`.
    pub fn map_weights<V: Weight>(&self) -> Instance<V> {
        Instance {
            n: self.n,
            sim: self.sim.iter().map(|w| V::from_real(w.as_f64())).collect(),
            dis: self.dis.iter().map(|w| V::from_real(w.as_f64())).collect(),
            unweighted: self.unweighted,
        }
    }
}

/// Not-all-small test: true iff the number of pairs with weight below `tau`
/// is at most `(1 - rho) * C(n, 2)` on `channel`.
pub fn not_all_small<W: Weight>(inst: &Instance<W>, rho: f64, tau: f64, channel: Channel) -> Result<bool> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::OutOfRange { name: "rho", value: rho, range: "(0, 1]" });
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::OutOfRange { name: "tau", value: tau, range: "(0, 1]" });
    }
    let n = inst.n();
    let tau_w = W::from_real(tau);
    let mut small = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if inst.weight(channel, i, j) < tau_w {
                small += 1;
            }
        }
    }
    let pairs = (n * n.saturating_sub(1) / 2) as f64;
    Ok(small as f64 <= (1.0 - rho) * pairs + 1e-9)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_clique(n: usize) -> Instance<f64> {
        let mut inst = Instance::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                inst.set_sim(i, j, 1.0).unwrap();
            }
        }
        inst
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(Instance::<f64>::from_edges(3, &[(1, 1, 0.5, 0.0)]).is_err());
        assert!(Instance::<f64>::from_edges(3, &[(0, 3, 0.5, 0.0)]).is_err());
        assert!(Instance::<f64>::from_edges(3, &[(0, 1, 1.5, 0.0)]).is_err());
        assert!(Instance::<f64>::from_edges(3, &[(0, 1, 0.5, -0.1)]).is_err());
        assert!(Instance::<f64>::from_edges(0, &[]).is_err());
        assert!(Instance::<f64>::from_edges(3, &[(0, 1, 0.5, 0.0), (1, 0, 0.5, 0.0)]).is_err());
    }

    #[test]
    fn symmetric_storage_and_flag() {
        let inst = Instance::<f64>::from_edges(3, &[(0, 2, 1.0, 0.0)]).unwrap();
        assert_eq!(inst.sim(2, 0), 1.0);
        assert!(inst.is_unweighted());
        let inst = Instance::<f64>::from_edges(3, &[(0, 2, 0.5, 0.0)]).unwrap();
        assert!(!inst.is_unweighted());
    }

    #[test]
    fn not_all_small_cases() {
        assert!(not_all_small(&unit_clique(6), 1.0, 1.0, Channel::Sim).unwrap());
        let zero = Instance::<f64>::zeros(6);
        assert!(!not_all_small(&zero, 0.5, 0.5, Channel::Sim).unwrap());
        assert!(not_all_small(&zero, 0.5, 0.0, Channel::Sim).is_err());
        assert!(not_all_small(&zero, 1.5, 0.5, Channel::Sim).is_err());
    }

    #[test]
    fn not_all_small_thirty_percent_threshold() {
        // 30% of C(10, 2) = 45 is not integral; n = 5 has 10 pairs, 3 heavy.
        let mut inst = Instance::<f64>::zeros(5);
        let pairs = [(0, 1), (2, 3), (1, 4)];
        for &(i, j) in &pairs {
            inst.set_sim(i, j, 0.9).unwrap();
        }
        for rho in [0.05, 0.1, 0.2, 0.3] {
            assert!(not_all_small(&inst, rho, 0.5, Channel::Sim).unwrap(), "rho {rho}");
        }
        for rho in [0.31, 0.4, 0.8, 1.0] {
            assert!(!not_all_small(&inst, rho, 0.5, Channel::Sim).unwrap(), "rho {rho}");
        }
    }

    #[test]
    fn restrict_relabels() {
        let inst = Instance::<f64>::from_edges(4, &[(1, 3, 0.25, 0.5)]).unwrap();
        let sub = inst.restrict(&[3, 1]);
        assert_eq!(sub.sim(0, 1), 0.25);
        assert_eq!(sub.dis(1, 0), 0.5);
    }

    #[test]
    fn complementary_check() {
        let inst = Instance::<f64>::from_edges(2, &[(0, 1, 0.25, 0.75)]).unwrap();
        assert!(inst.check_complementary().is_ok());
        let inst = Instance::<f64>::from_edges(2, &[(0, 1, 0.25, 0.5)]).unwrap();
        assert!(inst.check_complementary().is_err());
    }
}
