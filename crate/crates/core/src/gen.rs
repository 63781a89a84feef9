//! Instance generators: random graphs, metric similarity instances, and
//! the density-preserving transformations used in hardness reductions.

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Channel, Instance};
use crate::rng::Rng;
use crate::scalar::Weight;

/// Random instance: each pair gets a `Uniform[0,1]` similarity with
/// probability `density`. With `complementary` the dissimilarity is
/// `1 − w_s`; otherwise it is drawn independently by the same rule.
pub fn random_instance(n: usize, density: f64, complementary: bool, rng: &mut Rng) -> Result<Instance<f64>> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::OutOfRange { name: "density", value: density, range: "[0, 1]" });
    }
    if n == 0 {
        return Err(Error::InvalidInstance("n must be positive".into()));
    }
    let mut inst = Instance::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            let ws = if rng.gen_bool(density) { rng.gen::<f64>() } else { 0.0 };
            let wd = if complementary {
                1.0 - ws
            } else if rng.gen_bool(density) {
                rng.gen::<f64>()
            } else {
                0.0
            };
            inst.set_sim(i, j, ws)?;
            inst.set_dis(i, j, wd)?;
        }
    }
    Ok(inst)
}

/// Non-increasing `g : [0, ∞) → [0, 1]` with `g(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimilarityFn {
    Gaussian { sigma: f64 },
    LinearRamp,
    Inverse,
}

impl SimilarityFn {
    pub fn apply(&self, d: f64) -> f64 {
        match *self {
            SimilarityFn::Gaussian { sigma } => (-(d * d) / (sigma * sigma)).exp(),
            SimilarityFn::LinearRamp => (1.0 - d).max(0.0),
            SimilarityFn::Inverse => 1.0 / (1.0 + d),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricPoints {
    Coordinates(Vec<Vec<f64>>),
    Distances(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricConfig {
    pub points: MetricPoints,
    pub similarity: SimilarityFn,
    /// Scale distances so the diameter is 1.
    pub normalize: bool,
}

impl MetricConfig {
    /// Distance matrix, validated and (optionally) normalized.
    pub fn distances(&self) -> Result<Vec<Vec<f64>>> {
        if let SimilarityFn::Gaussian { sigma } = self.similarity {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::OutOfRange { name: "sigma", value: sigma, range: "(0, inf)" });
            }
        }
        let mut d = match &self.points {
            MetricPoints::Coordinates(pts) => {
                let dim = pts.first().map_or(0, |p| p.len());
                if pts.iter().any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite())) {
                    return Err(Error::InvalidInstance("coordinates must be finite with a common dimension".into()));
                }
                pts.iter()
                    .map(|a| {
                        pts.iter()
                            .map(|b| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
                            .collect()
                    })
                    .collect()
            }
            MetricPoints::Distances(m) => {
                let n = m.len();
                for (i, row) in m.iter().enumerate() {
                    if row.len() != n {
                        return Err(Error::InvalidInstance(format!("distance row {i} has {} entries", row.len())));
                    }
                    for (j, &x) in row.iter().enumerate() {
                        if !x.is_finite() || x < 0.0 {
                            return Err(Error::InvalidInstance(format!("distance ({i},{j}) = {x}")));
                        }
                        if x != m[j][i] {
                            return Err(Error::InvalidInstance(format!("distance ({i},{j}) is not symmetric")));
                        }
                    }
                    if row[i] != 0.0 {
                        return Err(Error::InvalidInstance(format!("distance ({i},{i}) is nonzero")));
                    }
                }
                m.clone()
            }
        };
        if d.is_empty() {
            return Err(Error::InvalidInstance("no points".into()));
        }
        if self.normalize {
            let diam = d.iter().flatten().copied().fold(0.0, f64::max);
            if diam > 0.0 {
                d.iter_mut().flatten().for_each(|x| *x /= diam);
            }
        }
        Ok(d)
    }
}

/// Number of ordered triples violating the triangle inequality (beyond a
/// `1e-12` slack). Explicit matrices are not rejected for violations.
pub fn triangle_violations(d: &[Vec<f64>]) -> usize {
    let n = d.len();
    let mut bad = 0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                if d[i][j] > d[i][k] + d[k][j] + 1e-12 {
                    bad += 1;
                }
            }
        }
    }
    bad
}

/// Similarity `g(d_ij)` on the configured metric; dissimilarity is zero.
pub fn metric_instance(cfg: &MetricConfig) -> Result<Instance<f64>> {
    let d = cfg.distances()?;
    let n = d.len();
    let mut inst = Instance::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            inst.set_sim(i, j, cfg.similarity.apply(d[i][j]).clamp(0.0, 1.0))?;
        }
    }
    Ok(inst)
}

/// Covering constant `2^{D(ℓ+1)} / g(2^{−ℓ})` for a metric of doubling
/// dimension `D` and Lipschitz-scale parameter `ℓ`.
pub fn covering_constant(doubling_dim: f64, ell: u32, g: SimilarityFn) -> f64 {
    2f64.powf(doubling_dim * (ell as f64 + 1.0)) / g.apply(2f64.powi(-(ell as i32)))
}

/// `clusters` Gaussian blobs of `per_cluster` points in `dim` dimensions,
/// with centres on a unit-spaced line and spread `spread`.
pub fn clustered_points(clusters: usize, per_cluster: usize, dim: usize, spread: f64, rng: &mut Rng) -> Vec<Vec<f64>> {
    let normal = Normal::new(0.0, spread.max(0.0)).expect("finite spread");
    let mut out = Vec::with_capacity(clusters * per_cluster);
    for c in 0..clusters {
        for _ in 0..per_cluster {
            let mut p: Vec<f64> = (0..dim).map(|_| normal.sample(rng)).collect();
            if let Some(x) = p.first_mut() {
                *x += c as f64;
            }
            out.push(p);
        }
    }
    out
}

/// Appends an `n`-clique of unit similarities, disconnected from the input.
pub fn clique_augment<W: Weight>(inst: &Instance<W>) -> Instance<W> {
    let n = inst.n();
    let mut out = Instance::zeros(2 * n);
    for i in 0..n {
        for j in i + 1..n {
            out.set_sim(i, j, inst.sim(i, j)).expect("copied weight");
            out.set_dis(i, j, inst.dis(i, j)).expect("copied weight");
            out.set_sim(n + i, n + j, W::one()).expect("unit weight");
        }
    }
    out
}

/// Default path length for [`path_augment`]: `n²`.
pub fn default_path_len(n: usize) -> usize {
    n * n
}

/// Appends a path of `path_len` points with unit similarity between
/// consecutive points, disconnected from the input.
pub fn path_augment<W: Weight>(inst: &Instance<W>, path_len: usize) -> Instance<W> {
    let n = inst.n();
    let mut out = Instance::zeros(n + path_len);
    for i in 0..n {
        for j in i + 1..n {
            out.set_sim(i, j, inst.sim(i, j)).expect("copied weight");
            out.set_dis(i, j, inst.dis(i, j)).expect("copied weight");
        }
    }
    for k in 1..path_len {
        out.set_sim(n + k - 1, n + k, W::one()).expect("unit weight");
    }
    out
}

/// `w_c = 1 − w_s` on every pair, placed on the dissimilarity channel.
pub fn complement_instance<W: Weight>(inst: &Instance<W>) -> Instance<W> {
    let n = inst.n();
    let mut out = Instance::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            out.set_dis(i, j, W::one() - inst.sim(i, j)).expect("weight in [0,1]");
        }
    }
    out
}

/// Fraction of pairs with nonzero weight on `channel`.
pub fn edge_fraction<W: Weight>(inst: &Instance<W>, channel: Channel) -> f64 {
    let n = inst.n();
    let pairs = n * n.saturating_sub(1) / 2;
    if pairs == 0 {
        return 0.0;
    }
    let mut nonzero = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if inst.weight(channel, i, j) != W::zero() {
                nonzero += 1;
            }
        }
    }
    nonzero as f64 / pairs as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::{brute_force_optimal, for_each_binary_tree};
    use crate::lca::lca_size_table;
    use crate::objective::{eval_dissimilarity, Objective};
    use crate::rng::seeded;
    use crate::Rational;

    #[test]
    fn random_instance_examples() {
        let mut rng = seeded(1);
        let z = random_instance(10, 0.0, false, &mut rng).unwrap();
        assert_eq!(z.total_sim() + z.total_dis(), 0.0);
        let c = random_instance(10, 1.0, true, &mut rng).unwrap();
        c.check_complementary().unwrap();
        let n = 100;
        let density = 0.4;
        let inst = random_instance(n, density, false, &mut rng).unwrap();
        let pairs = (n * (n - 1) / 2) as f64;
        let mean = inst.total_sim() / pairs;
        // per-pair weight has mean d/2 and variance d/3 - d²/4
        let sigma = ((density / 3.0 - density * density / 4.0) / pairs).sqrt();
        assert!((mean - density / 2.0).abs() <= 3.0 * sigma);
        assert!(random_instance(3, 1.5, false, &mut rng).is_err());
    }

    #[test]
    fn metric_examples() {
        let same = MetricConfig {
            points: MetricPoints::Coordinates(vec![vec![0.5, 0.5]; 4]),
            similarity: SimilarityFn::Inverse,
            normalize: true,
        };
        assert_eq!(metric_instance(&same).unwrap().total_sim(), 6.0);

        let two = MetricConfig {
            points: MetricPoints::Coordinates(vec![vec![0.0], vec![3.0]]),
            similarity: SimilarityFn::LinearRamp,
            normalize: true,
        };
        assert_eq!(metric_instance(&two).unwrap().sim(0, 1), 0.0);

        let mut rng = seeded(2);
        let pts = clustered_points(2, 5, 2, 0.3, &mut rng);
        let cfg = MetricConfig {
            points: MetricPoints::Coordinates(pts.clone()),
            similarity: SimilarityFn::Gaussian { sigma: 1.0 },
            normalize: false,
        };
        let inst = metric_instance(&cfg).unwrap();
        for i in 0..10 {
            for j in i + 1..10 {
                let d2: f64 = pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b).powi(2)).sum();
                assert!((inst.sim(i, j) - (-d2).exp()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn explicit_distances() {
        let bad = MetricConfig {
            points: MetricPoints::Distances(vec![vec![0.0, 1.0], vec![2.0, 0.0]]),
            similarity: SimilarityFn::LinearRamp,
            normalize: false,
        };
        assert!(metric_instance(&bad).is_err());
        let d = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        assert_eq!(triangle_violations(&d), 2);
        let cfg = MetricConfig { points: MetricPoints::Distances(d), similarity: SimilarityFn::LinearRamp, normalize: true };
        assert!((metric_instance(&cfg).unwrap().sim(0, 1) - 0.8).abs() < 1e-12);
    }

    #[test]
    fn clustered_metric_not_all_small() {
        // k clusters of radius r: same-cluster pairs sit within 2r, so at
        // least k·C(m,2) pairs have weight ≥ g(2r).
        let mut rng = seeded(3);
        let (k, m) = (3, 6);
        let r = 0.05;
        let mut pts = Vec::new();
        for c in 0..k {
            for _ in 0..m {
                let a: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                let s: f64 = rng.gen_range(0.0..r);
                pts.push(vec![c as f64 + s * a.cos(), s * a.sin()]);
            }
        }
        let cfg = MetricConfig { points: MetricPoints::Coordinates(pts), similarity: SimilarityFn::LinearRamp, normalize: true };
        let inst = metric_instance(&cfg).unwrap();
        let n = k * m;
        let diam_lb = (k - 1) as f64 - 2.0 * r;
        let tau = SimilarityFn::LinearRamp.apply(2.0 * r / diam_lb);
        let rho = (k * m * (m - 1) / 2) as f64 / (n * (n - 1) / 2) as f64;
        assert!(crate::instance::not_all_small(&inst, rho, tau, Channel::Sim).unwrap());
        assert!(covering_constant(2.0, 1, SimilarityFn::LinearRamp) > 0.0);
    }

    #[test]
    fn augment_examples() {
        let one = Instance::<f64>::zeros(1);
        let a = clique_augment(&one);
        assert_eq!((a.n(), a.total_sim()), (2, 0.0));
        let a = clique_augment(&Instance::<f64>::zeros(3));
        assert_eq!(a.total_sim(), 3.0);

        assert_eq!(path_augment(&Instance::<f64>::zeros(2), 1).n(), 3);
        assert_eq!(path_augment(&Instance::<f64>::zeros(2), 4).total_sim(), 3.0);

        let n = 5;
        let out = path_augment(&Instance::<f64>::zeros(n), default_path_len(n));
        let total = out.n();
        let frac = 1.0 - edge_fraction(&out, Channel::Sim);
        assert!(frac >= 1.0 - 2.0 / total as f64);
    }

    #[test]
    fn clique_augment_root_split() {
        let mut inst = Instance::<f64>::zeros(3);
        inst.set_sim(0, 1, 0.5).unwrap();
        let out = clique_augment(&inst);
        let (_, opt) = brute_force_optimal(&out, Objective::Rev).unwrap();
        // some optimum separates the clique from the originals at the root
        let mut best_split = f64::NEG_INFINITY;
        for_each_binary_tree(6, |t| {
            let mut sides: Vec<Vec<usize>> = t.children(t.root()).iter().map(|&c| t.leaves_under(c)).collect();
            sides.sort();
            if sides == vec![vec![0, 1, 2], vec![3, 4, 5]] {
                best_split = best_split.max(crate::objective::eval_revenue(&out, t).unwrap());
            }
        });
        assert_eq!(best_split, opt);
    }

    #[test]
    fn complement_identity_exact() {
        let mut rng = seeded(4);
        let n = 6;
        let mut g = Instance::<Rational>::zeros(n);
        for i in 0..n {
            for j in i + 1..n {
                g.set_sim(i, j, Rational::new(rng.gen_range(0..=8), 8)).unwrap();
            }
        }
        let gc = complement_instance(&g);
        let twice = complement_instance(&gc.channel_as_sim(Channel::Dis));
        assert_eq!(twice.channel_as_sim(Channel::Dis), g.sim_only());
        let full = Rational::from_integer(((n * n * n - n) / 3) as i64);
        for_each_binary_tree(n, |t| {
            let tab = lca_size_table(t).unwrap();
            let mut cost = Rational::from_integer(0);
            for i in 0..n {
                for j in i + 1..n {
                    cost += g.sim(i, j) * Rational::from_integer(tab.size(i, j) as i64);
                }
            }
            assert_eq!(cost, full - eval_dissimilarity(&gc, t).unwrap());
        });
    }
}
