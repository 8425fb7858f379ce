//! Random-walk quantities on the BCC lattice.
//!
//! The one-step distribution on the BCC lattice is uniform on `{±1}^d` and
//! factorizes over coordinates, so the `2n`-step return probability is the
//! d-th power of the one-dimensional one:
//!
//! ```text
//! D^{*2n}(o) = (C(2n, n) / 4^n)^d  <=  (pi n)^{-d/2}
//! ```
//!
//! `eps1(nu) = sum_{n >= nu} D^{*2n}(o)` and
//! `eps2(nu) = sum_{n >= nu} (n - nu + 1) D^{*2n}(o)` are bounded by `N` exact
//! terms plus an integral-test tail built from the Stirling bound.

use alloc::vec::Vec;

use num_bigint::BigUint;

use crate::numeric::{round_ratio, Interval, Policy, Rounding, Scalar, UpperBound};
use crate::Error;

/// Spatial dimension of the lattice, at least 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Dimension(u32);

impl Dimension {
    pub fn new(d: u32) -> Result<Self, Error> {
        if d == 0 {
            Err(Error::ZeroDimension)
        } else {
            Ok(Dimension(d))
        }
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// `||D||_inf = 2^{-d}`: the walk is uniform over `2^d` neighbors.
    pub fn d_sup_norm(self) -> f64 {
        libm::ldexp(1.0, -(self.0.min(1100) as i32))
    }
}

/// `C(2n, n) / 4^n` for `n = 0..=n_max`, each rounded down, up and to nearest
/// from the exact integer binomial.
#[derive(Clone, Debug)]
pub struct CentralRatios {
    down: Vec<f64>,
    nearest: Vec<f64>,
    up: Vec<f64>,
}

impl CentralRatios {
    pub fn new(n_max: u64) -> Self {
        let cap = n_max as usize + 1;
        let mut ratios = CentralRatios {
            down: Vec::with_capacity(cap),
            nearest: Vec::with_capacity(cap),
            up: Vec::with_capacity(cap),
        };
        let mut binom = BigUint::from(1u32);
        for n in 0..=n_max {
            let den = BigUint::from(1u32) << (2 * n);
            ratios.down.push(round_ratio(&binom, &den, Rounding::Down));
            ratios.nearest.push(round_ratio(&binom, &den, Rounding::Nearest));
            ratios.up.push(round_ratio(&binom, &den, Rounding::Up));
            // C(2n+2, n+1) = C(2n, n) * 2(2n+1) / (n+1), exact.
            binom = binom * (2 * (2 * n + 1)) / (n + 1);
        }
        ratios
    }

    pub fn n_max(&self) -> u64 {
        self.nearest.len() as u64 - 1
    }

    fn ratio<S: Scalar>(&self, n: u64) -> S {
        let i = n as usize;
        S::enclose(self.down[i], self.nearest[i], self.up[i])
    }

    /// `D^{*2n}(o)` in the arithmetic of `S`.
    pub fn return_prob<S: Scalar>(&self, d: Dimension, n: u64) -> S {
        self.ratio::<S>(n).powu(d.get())
    }
}

/// Exact `2n`-step return probability `(C(2n,n) 4^{-n})^d`, rounded per policy.
pub fn return_prob(d: Dimension, n: u64, policy: Policy) -> UpperBound {
    let ratios = CentralRatios::new(n);
    match policy {
        Policy::Fast => ratios.return_prob::<f64>(d, n).to_bound(),
        Policy::Certified => ratios.return_prob::<Interval>(d, n).to_bound(),
    }
}

fn check_args(nu: u32, n_trunc: u32) -> Result<(), Error> {
    if nu == 0 {
        return Err(Error::ZeroNu);
    }
    if n_trunc == 0 {
        return Err(Error::ZeroTruncation);
    }
    Ok(())
}

/// `eps1(nu)` bound from `N` exact terms plus the Stirling/integral tail.
/// Infinite for `d <= 2`. `ratios` must cover `n <= nu + N - 1`.
pub fn eps1_with<S: Scalar>(ratios: &CentralRatios, d: Dimension, nu: u32, n_trunc: u32) -> Option<S> {
    let dim = d.get();
    if dim <= 2 {
        return None;
    }
    let mut sum = S::exact(0.0);
    for n in 0..n_trunc as u64 {
        sum = sum + ratios.return_prob::<S>(d, n + nu as u64);
    }
    let m = S::exact((nu + n_trunc) as f64);
    let pi_half_d = S::pi().half_pow(dim);
    let one = S::exact(1.0);
    let first = one / (pi_half_d * m.half_pow(dim));
    let integral = S::exact(2.0) / (pi_half_d * S::exact((dim - 2) as f64) * m.half_pow(dim - 2));
    Some(sum + first + integral)
}

/// `eps2(nu)` bound; infinite for `d <= 4`. The negative correction term is
/// subtracted using the arithmetic of `S`, which under interval arithmetic
/// subtracts its lower bound and so keeps the result an upper bound.
pub fn eps2_with<S: Scalar>(ratios: &CentralRatios, d: Dimension, nu: u32, n_trunc: u32) -> Option<S> {
    let dim = d.get();
    if dim <= 4 {
        return None;
    }
    let mut sum = S::exact(0.0);
    for n in 0..n_trunc as u64 {
        let weight = S::exact((n + 1) as f64);
        sum = sum + weight * ratios.return_prob::<S>(d, n + nu as u64);
    }
    let m = S::exact((nu + n_trunc) as f64);
    let pi_half_d = S::pi().half_pow(dim);
    let one = S::exact(1.0);
    let two = S::exact(2.0);
    let first = one / (pi_half_d * m.half_pow(dim - 2));
    let integral = two / (pi_half_d * S::exact((dim - 4) as f64) * m.half_pow(dim - 4));
    let correction =
        two * S::exact((nu - 1) as f64) / (pi_half_d * S::exact((dim - 2) as f64) * m.half_pow(dim - 2));
    Some(sum + first + integral - correction)
}

fn to_bound<S: Scalar>(value: Option<S>) -> UpperBound {
    match value {
        Some(v) => v.to_bound(),
        None => UpperBound::infinite(S::POLICY),
    }
}

pub fn eps1(d: Dimension, nu: u32, n_trunc: u32, policy: Policy) -> Result<UpperBound, Error> {
    check_args(nu, n_trunc)?;
    let ratios = CentralRatios::new(nu as u64 + n_trunc as u64 - 1);
    Ok(match policy {
        Policy::Fast => to_bound(eps1_with::<f64>(&ratios, d, nu, n_trunc)),
        Policy::Certified => to_bound(eps1_with::<Interval>(&ratios, d, nu, n_trunc)),
    })
}

pub fn eps2(d: Dimension, nu: u32, n_trunc: u32, policy: Policy) -> Result<UpperBound, Error> {
    check_args(nu, n_trunc)?;
    let ratios = CentralRatios::new(nu as u64 + n_trunc as u64 - 1);
    Ok(match policy {
        Policy::Fast => to_bound(eps2_with::<f64>(&ratios, d, nu, n_trunc)),
        Policy::Certified => to_bound(eps2_with::<Interval>(&ratios, d, nu, n_trunc)),
    })
}

/// `eps1` and `eps2` bounds for one dimension, `nu = 1..=nu_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct RwTable {
    d: Dimension,
    truncation: u32,
    policy: Policy,
    eps1: Vec<UpperBound>,
    eps2: Vec<UpperBound>,
}

impl RwTable {
    pub fn dimension(&self) -> Dimension {
        self.d
    }

    pub fn truncation(&self) -> u32 {
        self.truncation
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn nu_max(&self) -> u32 {
        self.eps1.len() as u32
    }

    pub fn eps1(&self, nu: u32) -> Result<UpperBound, Error> {
        self.entry(&self.eps1, nu)
    }

    pub fn eps2(&self, nu: u32) -> Result<UpperBound, Error> {
        self.entry(&self.eps2, nu)
    }

    fn entry(&self, col: &[UpperBound], nu: u32) -> Result<UpperBound, Error> {
        if nu == 0 {
            return Err(Error::ZeroNu);
        }
        col.get(nu as usize - 1).copied().ok_or(Error::MissingNu(nu))
    }

    /// Builds a table from externally supplied values, e.g. rounded reference digits.
    /// `eps1[i]`, `eps2[i]` hold `nu = i + 1`.
    pub fn from_values(
        d: Dimension,
        truncation: u32,
        policy: Policy,
        eps1: Vec<f64>,
        eps2: Vec<f64>,
    ) -> Result<Self, Error> {
        if eps1.len() < 2 || eps1.len() != eps2.len() {
            return Err(Error::NuMaxTooSmall(eps1.len().min(eps2.len()) as u32));
        }
        Ok(RwTable {
            d,
            truncation,
            policy,
            eps1: eps1.into_iter().map(|v| UpperBound::new(v, policy)).collect(),
            eps2: eps2.into_iter().map(|v| UpperBound::new(v, policy)).collect(),
        })
    }
}

/// Evaluates `eps1`, `eps2` for `nu = 1..=nu_max` with truncation `N`.
pub fn build_table(d: Dimension, nu_max: u32, n_trunc: u32, policy: Policy) -> Result<RwTable, Error> {
    if nu_max < 2 {
        return Err(Error::NuMaxTooSmall(nu_max));
    }
    check_args(1, n_trunc)?;
    let ratios = CentralRatios::new(nu_max as u64 + n_trunc as u64 - 1);
    let mut eps1 = Vec::with_capacity(nu_max as usize);
    let mut eps2 = Vec::with_capacity(nu_max as usize);
    for nu in 1..=nu_max {
        match policy {
            Policy::Fast => {
                eps1.push(to_bound(eps1_with::<f64>(&ratios, d, nu, n_trunc)));
                eps2.push(to_bound(eps2_with::<f64>(&ratios, d, nu, n_trunc)));
            }
            Policy::Certified => {
                eps1.push(to_bound(eps1_with::<Interval>(&ratios, d, nu, n_trunc)));
                eps2.push(to_bound(eps2_with::<Interval>(&ratios, d, nu, n_trunc)));
            }
        }
    }
    Ok(RwTable { d, truncation: n_trunc, policy, eps1, eps2 })
}
