//! Monte Carlo for nearest-neighbor oriented percolation on the BCC lattice,
//! with exact oracles for small instances.
//!
//! Sites are points of `Z^d` with neighbor set `{-1, +1}^d`. A bond from
//! `(x, s)` to `(x + e, s + 1)` is open with probability `q = p 2^-d`. The
//! uniform deciding a bond is a hash of `(seed, trial, s, x, e)`, so every
//! bond is sampled at most once per trial and clusters at different `p`
//! are coupled monotonically.
//!
//! Level `t` of the forward cone is stored densely: coordinate `x_i` has the
//! parity of `t` and `|x_i| <= t`, so `j_i = (x_i + t)/2` ranges over `0..=t`.

use alloc::vec;
use alloc::vec::Vec;

use crate::rng::{unit, KeyedHash};
use crate::rw::Dimension;
use crate::Error;

/// Cap on the number of cone sites stored per run.
pub const MAX_RECORDED_SITES: u64 = 1 << 24;
/// Largest horizon accepted by [`exact_dp_1d`].
pub const DP_MAX_T: u32 = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub d: Dimension,
    /// The model parameter `p`; each bond is open with probability `p 2^-d`.
    pub p: f64,
    pub t_max: u32,
    pub trials: u64,
    pub seed: u64,
    /// A trial whose frontier exceeds this many sites is abandoned.
    pub site_budget: usize,
}

impl SimConfig {
    pub fn new(d: Dimension, p: f64, t_max: u32, trials: u64, seed: u64) -> Result<Self, Error> {
        let cfg = SimConfig { d, p, t_max, trials, seed, site_budget: usize::MAX };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Configuration from the per-bond probability `q = p 2^-d`.
    pub fn from_bond_probability(d: Dimension, q: f64, t_max: u32, trials: u64, seed: u64) -> Result<Self, Error> {
        SimConfig::new(d, q / d.d_sup_norm(), t_max, trials, seed)
    }

    pub fn with_site_budget(mut self, budget: usize) -> Self {
        self.site_budget = budget;
        self
    }

    pub fn bond_probability(&self) -> f64 {
        self.p * self.d.d_sup_norm()
    }

    pub fn validate(&self) -> Result<(), Error> {
        let q = self.bond_probability();
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::InvalidSimConfig("bond probability p 2^-d must lie in [0, 1]"));
        }
        if self.t_max == 0 {
            return Err(Error::InvalidSimConfig("t_max must be at least 1"));
        }
        if self.trials == 0 {
            return Err(Error::InvalidSimConfig("trials must be at least 1"));
        }
        if self.d.get() > 20 || cone_total(self.d.get(), self.t_max) > MAX_RECORDED_SITES {
            return Err(Error::InvalidSimConfig("forward cone too large to record"));
        }
        Ok(())
    }
}

fn cone_total(d: u32, t_max: u32) -> u64 {
    (0..=t_max as u64).map(|t| (t + 1).saturating_pow(d)).fold(0u64, |a, b| a.saturating_add(b))
}

fn level_size(d: u32, t: u32) -> usize {
    (t as usize + 1).pow(d)
}

/// Cone index of `x` at level `t`, or `None` off the cone.
pub fn cone_index(x: &[i32], t: u32) -> Option<usize> {
    let t = t as i64;
    let mut idx = 0usize;
    for &xi in x.iter().rev() {
        let xi = xi as i64;
        if xi.abs() > t || (xi + t) % 2 != 0 {
            return None;
        }
        idx = idx * (t as usize + 1) + ((xi + t) / 2) as usize;
    }
    Some(idx)
}

/// Coordinates of cone index `idx` at level `t`.
pub fn cone_point(mut idx: usize, t: u32, d: u32) -> Vec<i32> {
    let base = t as usize + 1;
    let mut x = Vec::with_capacity(d as usize);
    for _ in 0..d {
        x.push(2 * (idx % base) as i32 - t as i32);
        idx /= base;
    }
    x
}

/// Exact integer tallies; merging is addition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimCounts {
    pub d: u32,
    pub t_max: u32,
    pub completed: u64,
    pub truncated: u64,
    /// `hits[t][i]`: completed trials reaching cone site `i` of level `t`.
    pub hits: Vec<Vec<u64>>,
    /// `survival[t]`: completed trials with a nonempty level `t`.
    pub survival: Vec<u64>,
    pub size_sum: u128,
    pub size_sq_sum: u128,
}

impl SimCounts {
    pub fn empty(d: u32, t_max: u32) -> Self {
        SimCounts {
            d,
            t_max,
            completed: 0,
            truncated: 0,
            hits: (0..=t_max).map(|t| vec![0; level_size(d, t)]).collect(),
            survival: vec![0; t_max as usize + 1],
            size_sum: 0,
            size_sq_sum: 0,
        }
    }

    pub fn merge(mut self, other: &SimCounts) -> SimCounts {
        assert_eq!((self.d, self.t_max), (other.d, other.t_max), "merging incompatible counts");
        self.completed += other.completed;
        self.truncated += other.truncated;
        for (a, b) in self.hits.iter_mut().zip(&other.hits) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
        for (a, b) in self.survival.iter_mut().zip(&other.survival) {
            *a += b;
        }
        self.size_sum += other.size_sum;
        self.size_sq_sum += other.size_sq_sum;
        self
    }
}

/// Outcome of one trial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Trial {
    /// Sorted cone indices of the reached sites at each level `0..=t_max`.
    Complete(Vec<Vec<usize>>),
    Truncated { level: u32 },
}

struct Grower {
    d: u32,
    q: f64,
    budget: usize,
    hash: KeyedHash,
    stamp: Vec<u64>,
    tag: u64,
}

impl Grower {
    fn new(cfg: &SimConfig) -> Self {
        Grower {
            d: cfg.d.get(),
            q: cfg.bond_probability(),
            budget: cfg.site_budget,
            hash: KeyedHash::new(cfg.seed).with(0x0b0d),
            stamp: vec![0; level_size(cfg.d.get(), cfg.t_max)],
            tag: 0,
        }
    }

    fn run(&mut self, trial: u64, t_max: u32) -> Trial {
        let d = self.d as usize;
        let mut levels: Vec<Vec<usize>> = Vec::with_capacity(t_max as usize + 1);
        levels.push(vec![0]);
        let mut digits = vec![0usize; d];
        for s in 0..t_max {
            self.tag += 1;
            let base = s as usize + 1;
            let next_base = base + 1;
            let mut next = Vec::new();
            for &xi in &levels[s as usize] {
                let mut rest = xi;
                for digit in digits.iter_mut() {
                    *digit = rest % base;
                    rest /= base;
                }
                for dir in 0..(1usize << d) {
                    let mut yi = 0usize;
                    for k in (0..d).rev() {
                        yi = yi * next_base + digits[k] + ((dir >> k) & 1);
                    }
                    if self.stamp[yi] == self.tag {
                        continue;
                    }
                    let u = unit(self.hash.at(&[trial, s as u64, xi as u64, dir as u64]));
                    if u < self.q {
                        self.stamp[yi] = self.tag;
                        next.push(yi);
                    }
                }
            }
            if next.len() > self.budget {
                return Trial::Truncated { level: s + 1 };
            }
            next.sort_unstable();
            levels.push(next);
        }
        Trial::Complete(levels)
    }
}

/// Reached sites of one trial, for coupling and debugging.
pub fn run_trial(cfg: &SimConfig, trial: u64) -> Result<Trial, Error> {
    cfg.validate()?;
    Ok(Grower::new(cfg).run(trial, cfg.t_max))
}

/// Tallies for trials `range` of `cfg`.
pub fn simulate_range(cfg: &SimConfig, range: core::ops::Range<u64>) -> Result<SimCounts, Error> {
    cfg.validate()?;
    let mut counts = SimCounts::empty(cfg.d.get(), cfg.t_max);
    let mut grower = Grower::new(cfg);
    for trial in range {
        match grower.run(trial, cfg.t_max) {
            Trial::Truncated { .. } => counts.truncated += 1,
            Trial::Complete(levels) => {
                counts.completed += 1;
                let mut size = 0u128;
                for (t, level) in levels.iter().enumerate() {
                    if !level.is_empty() {
                        counts.survival[t] += 1;
                    }
                    for &i in level {
                        counts.hits[t][i] += 1;
                    }
                    size += level.len() as u128;
                }
                counts.size_sum += size;
                counts.size_sq_sum += size * size;
            }
        }
    }
    Ok(counts)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
}

impl Estimate {
    fn proportion(hits: u64, n: u64) -> Estimate {
        if n == 0 {
            return Estimate { mean: f64::NAN, stderr: f64::NAN };
        }
        let m = hits as f64 / n as f64;
        Estimate { mean: m, stderr: libm::sqrt(m * (1.0 - m) / n as f64) }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimStats {
    pub config: SimConfig,
    pub counts: SimCounts,
}

impl SimStats {
    pub fn new(config: SimConfig, counts: SimCounts) -> Self {
        SimStats { config, counts }
    }

    /// Estimate of `phi_p(x, t)`; zero off the cone, `None` beyond `t_max`.
    pub fn two_point(&self, x: &[i32], t: u32) -> Option<Estimate> {
        if t > self.counts.t_max || x.len() != self.counts.d as usize {
            return None;
        }
        let hits = cone_index(x, t).map(|i| self.counts.hits[t as usize][i]).unwrap_or(0);
        Some(Estimate::proportion(hits, self.counts.completed))
    }

    pub fn survival(&self, t: u32) -> Option<Estimate> {
        let hits = *self.counts.survival.get(t as usize)?;
        Some(Estimate::proportion(hits, self.counts.completed))
    }

    /// Mean number of sites reached up to `t_max`.
    pub fn chi_trunc(&self) -> Estimate {
        let n = self.counts.completed as f64;
        let mean = self.counts.size_sum as f64 / n;
        let var = (self.counts.size_sq_sum as f64 / n - mean * mean).max(0.0);
        Estimate { mean, stderr: libm::sqrt(var / n) }
    }

    /// Every cone site with its estimate, by level then cone index.
    pub fn two_point_entries(&self) -> impl Iterator<Item = (u32, Vec<i32>, Estimate)> + '_ {
        let d = self.counts.d;
        let n = self.counts.completed;
        self.counts.hits.iter().enumerate().flat_map(move |(t, level)| {
            level
                .iter()
                .enumerate()
                .map(move |(i, &h)| (t as u32, cone_point(i, t as u32, d), Estimate::proportion(h, n)))
        })
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<SimStats, Error> {
    Ok(SimStats::new(*cfg, simulate_range(cfg, 0..cfg.trials)?))
}

/// `C(t, k) 2^-t`.
fn binomial_half(t: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for i in 1..=t {
        if i <= k {
            r *= (t - k + i) as f64 / i as f64;
        }
        r *= 0.5;
    }
    r
}

/// `p^t D^{*t}(x)` with `D^{*t}(x) = prod_j C(t, (t + x_j)/2) 2^-t`; zero off the cone.
pub fn rw_two_point(d: Dimension, p: f64, x: &[i32], t: u32) -> f64 {
    if x.len() != d.get() as usize || cone_index(x, t).is_none() {
        return 0.0;
    }
    let walk: f64 = x.iter().map(|&xj| binomial_half(t, ((xj + t as i32) / 2) as u32)).product();
    libm::pow(p, t as f64) * walk
}

/// `phi_p(x, 2) = 1 - prod over midpoints y of (1 - q(y) q(x - y))`.
pub fn exact_two_step(d: Dimension, p: f64, x: &[i32]) -> f64 {
    if x.len() != d.get() as usize || cone_index(x, 2).is_none() {
        return 0.0;
    }
    let q = p * d.d_sup_norm();
    let midpoints = x.iter().filter(|&&xj| xj == 0).count() as i32;
    1.0 - libm::pow(1.0 - q * q, libm::pow(2.0, midpoints as f64))
}

/// Exact `phi_p(x, t)` in `d = 1` for `t <= t_max`, indexed `[t][(x + t)/2]`.
///
/// The law of the reached set is propagated level by level; within a level
/// the new sites are decided left to right, so the intermediate state holds
/// the decided new sites and the old sites still needed.
pub fn exact_dp_1d(p: f64, t_max: u32) -> Result<Vec<Vec<f64>>, Error> {
    if t_max > DP_MAX_T {
        return Err(Error::DpBudget { max: DP_MAX_T, got: t_max });
    }
    if !(0.0..=2.0).contains(&p) {
        return Err(Error::InvalidSimConfig("bond probability p/2 must lie in [0, 1]"));
    }
    let q = p / 2.0;
    // probability a new site is reached from 0, 1 or 2 occupied neighbors
    let reach = [0.0, q, 1.0 - (1.0 - q) * (1.0 - q)];
    let mut law = vec![0.0, 1.0];
    let mut phi = vec![vec![1.0]];
    for s in 0..t_max as usize {
        // n old sites at level s, n + 1 new sites at level s + 1
        let n = s + 1;
        let mut cur = law;
        for j in 0..=n {
            // before deciding new site j: bits 0..j hold new sites, bits j.. hold
            // old sites max(j-1, 0)..n
            let mut nxt = vec![0.0; 1 << (n + 1)];
            let shift = usize::from(j >= 1);
            for (key, &w) in cur.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let prefix = key & ((1 << j) - 1);
                let old = key >> j;
                let left = if j >= 1 { old & 1 } else { 0 };
                let right = if j < n { (old >> shift) & 1 } else { 0 };
                let pr = reach[left + right];
                let base = prefix | ((old >> shift) << (j + 1));
                if pr > 0.0 {
                    nxt[base | (1 << j)] += w * pr;
                }
                if pr < 1.0 {
                    nxt[base] += w * (1.0 - pr);
                }
            }
            cur = nxt;
        }
        let mut marg = vec![0.0; n + 1];
        for (key, &w) in cur.iter().enumerate() {
            for (y, m) in marg.iter_mut().enumerate() {
                if (key >> y) & 1 == 1 {
                    *m += w;
                }
            }
        }
        phi.push(marg);
        law = cur;
    }
    Ok(phi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dim(d: u32) -> Dimension {
        Dimension::new(d).unwrap()
    }

    #[test]
    fn rw_two_point_examples() {
        assert_eq!(rw_two_point(dim(2), 1.0, &[0, 0], 2), 0.25);
        for d in 1..6 {
            assert_eq!(rw_two_point(dim(d), 0.7, &vec![0; d as usize], 0), 1.0);
        }
        assert_eq!(rw_two_point(dim(1), 0.5, &[1], 1), 0.25);
        assert_eq!(rw_two_point(dim(1), 0.5, &[0], 1), 0.0);
        assert_eq!(rw_two_point(dim(1), 0.5, &[3], 1), 0.0);
    }

    #[test]
    fn rw_two_point_sums_to_p_power() {
        for (d, t) in [(1, 7), (2, 5), (3, 4)] {
            let p = 0.8;
            let total: f64 = (0..level_size(d, t)).map(|i| rw_two_point(dim(d), p, &cone_point(i, t, d), t)).sum();
            assert!((total - libm::pow(p, t as f64)).abs() < 1e-14);
        }
    }

    #[test]
    fn two_step_examples() {
        for p in [0.0, 0.3, 1.0, 2.0] {
            let q2 = p * p / 4.0;
            assert!((exact_two_step(dim(1), p, &[0]) - (1.0 - (1.0 - q2) * (1.0 - q2))).abs() < 1e-15);
            assert!((exact_two_step(dim(1), p, &[2]) - q2).abs() < 1e-15);
        }
        assert_eq!(exact_two_step(dim(3), 0.0, &[0, 2, 0]), 0.0);
        assert_eq!(exact_two_step(dim(2), 1.0, &[1, 0]), 0.0);
    }

    #[test]
    fn dp_examples() {
        let p = 0.9;
        let phi = exact_dp_1d(p, 6).unwrap();
        assert!(phi[1].iter().all(|&v| (v - p / 2.0).abs() < 1e-15));
        for (i, x) in [-2, 0, 2].into_iter().enumerate() {
            assert!((phi[2][i] - exact_two_step(dim(1), p, &[x])).abs() < 1e-15);
        }
        let full = exact_dp_1d(2.0, 8).unwrap();
        assert!(full.iter().flatten().all(|&v| (v - 1.0).abs() < 1e-15));
        let none = exact_dp_1d(0.0, 4).unwrap();
        assert!(none.iter().skip(1).flatten().all(|&v| v == 0.0));
        assert_eq!(exact_dp_1d(0.5, DP_MAX_T + 1), Err(Error::DpBudget { max: DP_MAX_T, got: DP_MAX_T + 1 }));
    }

    // Brute-force oracle: enumerate every bond configuration of the cone.
    fn brute_force_1d(p: f64, t_max: u32) -> Vec<Vec<f64>> {
        let q = p / 2.0;
        let bonds: usize = (0..t_max as usize).map(|s| 2 * (s + 1)).sum();
        let mut phi: Vec<Vec<f64>> = (0..=t_max as usize).map(|t| vec![0.0; t + 1]).collect();
        for config in 0u64..(1 << bonds) {
            let open = config.count_ones() as i32;
            let w = libm::pow(q, open as f64) * libm::pow(1.0 - q, (bonds as i32 - open) as f64);
            let mut level = vec![true];
            let mut bit = 0;
            phi[0][0] += w;
            for s in 0..t_max as usize {
                let mut next = vec![false; s + 2];
                for (i, &on) in level.iter().enumerate() {
                    for step in 0..2 {
                        if on && (config >> bit) & 1 == 1 {
                            next[i + step] = true;
                        }
                        bit += 1;
                    }
                }
                for (i, &on) in next.iter().enumerate() {
                    if on {
                        phi[s + 1][i] += w;
                    }
                }
                level = next;
            }
        }
        phi
    }

    #[test]
    fn dp_matches_brute_force() {
        for p in [0.4, 1.1, 1.9] {
            let dp = exact_dp_1d(p, 4).unwrap();
            let bf = brute_force_1d(p, 4);
            for (a, b) in dp.iter().flatten().zip(bf.iter().flatten()) {
                assert!((a - b).abs() < 1e-9, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_p_never_leaves_origin() {
        let cfg = SimConfig::new(dim(2), 0.0, 4, 500, 1).unwrap();
        let st = simulate(&cfg).unwrap();
        assert_eq!(st.two_point(&[0, 0], 0).unwrap().mean, 1.0);
        for t in 1..=4 {
            assert_eq!(st.survival(t).unwrap().mean, 0.0);
        }
        assert_eq!(st.chi_trunc().mean, 1.0);
    }

    #[test]
    fn full_occupation_fills_the_cone() {
        let cfg = SimConfig::from_bond_probability(dim(2), 1.0, 4, 20, 1).unwrap();
        let st = simulate(&cfg).unwrap();
        for (t, x, e) in st.two_point_entries() {
            assert_eq!(e.mean, 1.0, "{t} {x:?}");
        }
        for t in 0..=4 {
            assert_eq!(st.survival(t).unwrap().mean, 1.0);
        }
        let cone: u64 = (0..=4).map(|t| (t + 1) * (t + 1)).sum();
        assert_eq!(st.chi_trunc().mean, cone as f64);
    }

    #[test]
    fn cone_index_roundtrip() {
        for t in 0..5 {
            for i in 0..level_size(3, t) {
                assert_eq!(cone_index(&cone_point(i, t, 3), t), Some(i));
            }
        }
        assert_eq!(cone_index(&[1, 0], 2), None);
        assert_eq!(cone_index(&[4, 0], 2), None);
    }

    #[test]
    fn monte_carlo_matches_oracles() {
        let cfg = SimConfig::from_bond_probability(dim(1), 0.6, 6, 40_000, 11).unwrap();
        let st = simulate(&cfg).unwrap();
        let exact = exact_dp_1d(cfg.p, 6).unwrap();
        for (t, level) in exact.iter().enumerate() {
            for (i, &want) in level.iter().enumerate() {
                let x = 2 * i as i32 - t as i32;
                let e = st.two_point(&[x], t as u32).unwrap();
                let sigma = e.stderr.max(1e-9);
                assert!((e.mean - want).abs() <= 4.0 * sigma, "t={t} x={x}: {} vs {want}", e.mean);
            }
        }
    }

    #[test]
    fn coupling_is_monotone() {
        let lo = SimConfig::from_bond_probability(dim(2), 0.25, 5, 1, 99).unwrap();
        let hi = SimConfig::from_bond_probability(dim(2), 0.45, 5, 1, 99).unwrap();
        for trial in 0..200 {
            let (Trial::Complete(a), Trial::Complete(b)) = (run_trial(&lo, trial).unwrap(), run_trial(&hi, trial).unwrap())
            else {
                panic!("no budget set");
            };
            for (la, lb) in a.iter().zip(&b) {
                assert!(la.iter().all(|i| lb.binary_search(i).is_ok()));
            }
        }
    }

    #[test]
    fn chunked_runs_merge_to_the_whole() {
        let cfg = SimConfig::from_bond_probability(dim(2), 0.4, 4, 300, 5).unwrap();
        let whole = simulate_range(&cfg, 0..300).unwrap();
        let parts = [0..17, 17..150, 150..300].map(|r| simulate_range(&cfg, r).unwrap());
        let merged = parts.iter().fold(SimCounts::empty(2, 4), |a, b| a.merge(b));
        assert_eq!(whole, merged);
    }

    #[test]
    fn site_budget_truncates() {
        let cfg = SimConfig::from_bond_probability(dim(2), 1.0, 4, 10, 5).unwrap().with_site_budget(5);
        let c = simulate_range(&cfg, 0..10).unwrap();
        assert_eq!((c.completed, c.truncated), (0, 10));
        assert!(matches!(run_trial(&cfg, 0).unwrap(), Trial::Truncated { level: 2 }));
    }

    #[test]
    fn config_validation() {
        assert!(SimConfig::new(dim(1), 2.5, 3, 1, 0).is_err());
        assert!(SimConfig::new(dim(1), -0.1, 3, 1, 0).is_err());
        assert!(SimConfig::new(dim(1), 1.0, 0, 1, 0).is_err());
        assert!(SimConfig::new(dim(1), 1.0, 3, 0, 0).is_err());
        assert!(SimConfig::new(dim(12), 1.0, 20, 1, 0).is_err());
    }
}
