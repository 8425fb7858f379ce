//! Grid and randomized certification of the auxiliary inequalities.
//!
//! Every check is an [`IndexedCheck`]: a finite family of points, each with a
//! margin that is nonnegative when the inequality holds there. The minimum is
//! merged with [`MinMargin`], whose merge is associative and commutative, so
//! sequential and parallel evaluation give identical results.
//!
//! | check | inequality |
//! |---|---|
//! | green-lower | `4 |1 - r e^{i theta} xi|^2 >= (theta/pi + 1 - xi)^2` |
//! | mu-bound | `|1 - e^{i theta} y| <= 2 |1 - r e^{i theta} y|` |
//! | d2k | `h_d(xi) = 1 - 2 prod xi_j + prod (2 xi_j - 1) >= 0` |
//! | cosine-telescope | `0 <= 1 - cos(sum t_j) <= J sum (1 - cos t_j)` |
//! | double-derivative | second-difference bound for `A = 1/(1 - a)` |

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

use num_complex::Complex64;

use crate::rng::{unit, KeyedHash};
use crate::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LemmaId {
    GreenLower,
    MuBound,
    D2k,
    CosineTelescope,
    DoubleDerivative,
}

impl LemmaId {
    pub const ALL: [LemmaId; 5] =
        [LemmaId::GreenLower, LemmaId::MuBound, LemmaId::D2k, LemmaId::CosineTelescope, LemmaId::DoubleDerivative];

    pub fn as_str(self) -> &'static str {
        match self {
            LemmaId::GreenLower => "green-lower",
            LemmaId::MuBound => "mu-bound",
            LemmaId::D2k => "d2k",
            LemmaId::CosineTelescope => "cosine-telescope",
            LemmaId::DoubleDerivative => "double-derivative",
        }
    }
}

impl fmt::Display for LemmaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for LemmaId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self, Error> {
        LemmaId::ALL
            .into_iter()
            .find(|l| l.as_str() == s)
            .ok_or(Error::InvalidGrid("unknown check name"))
    }
}

/// Inclusive range `[lo, hi]` sampled at `n` equally spaced points.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridAxis {
    pub lo: f64,
    pub hi: f64,
    pub n: u32,
}

impl GridAxis {
    pub fn point(&self, i: u32) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64) / ((self.n - 1) as f64)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
    pub margin_tolerance: f64,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>, margin_tolerance: f64) -> Result<Self, Error> {
        if axes.is_empty() {
            return Err(Error::InvalidGrid("grid needs at least one axis"));
        }
        if axes.iter().any(|a| a.n < 2 || !(a.lo <= a.hi)) {
            return Err(Error::InvalidGrid("each axis needs lo <= hi and at least 2 points"));
        }
        if !(margin_tolerance >= 0.0) {
            return Err(Error::InvalidGrid("margin tolerance must be nonnegative"));
        }
        Ok(GridSpec { axes, margin_tolerance })
    }

    pub fn len(&self) -> u64 {
        self.axes.iter().map(|a| a.n as u64).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Coordinates of the `index`-th point; the first axis varies slowest.
    pub fn point(&self, mut index: u64, out: &mut [f64]) {
        for (k, axis) in self.axes.iter().enumerate().rev() {
            let n = axis.n as u64;
            out[k] = axis.point((index % n) as u32);
            index /= n;
        }
    }
}

/// Result of one certification run.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub lemma: LemmaId,
    pub points_checked: u64,
    pub min_margin: f64,
    pub worst_index: u64,
    pub worst_point: Vec<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub description: String,
}

/// Running minimum of margins with the index where it occurs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MinMargin {
    pub count: u64,
    pub min: f64,
    pub index: u64,
}

impl MinMargin {
    pub const EMPTY: MinMargin = MinMargin { count: 0, min: f64::INFINITY, index: u64::MAX };

    pub fn observe(&mut self, index: u64, margin: f64) {
        // NaN can never certify anything.
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        self.count += 1;
        if margin < self.min || (margin == self.min && index < self.index) {
            self.min = margin;
            self.index = index;
        }
    }

    pub fn merge(self, other: MinMargin) -> MinMargin {
        let count = self.count + other.count;
        let pick_other = other.min < self.min || (other.min == self.min && other.index < self.index);
        let (min, index) = if pick_other { (other.min, other.index) } else { (self.min, self.index) };
        MinMargin { count, min, index }
    }
}

/// A finite family of margin evaluations.
pub trait IndexedCheck: Sync {
    fn lemma(&self) -> LemmaId;
    fn len(&self) -> u64;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn tolerance(&self) -> f64;
    fn margin_at(&self, index: u64) -> f64;
    fn point_at(&self, index: u64) -> Vec<f64>;
    fn description(&self) -> String;
}

pub fn run_range<C: IndexedCheck + ?Sized>(check: &C, range: core::ops::Range<u64>) -> MinMargin {
    let mut acc = MinMargin::EMPTY;
    for i in range {
        acc.observe(i, check.margin_at(i));
    }
    acc
}

pub fn finish<C: IndexedCheck + ?Sized>(check: &C, acc: MinMargin) -> CheckResult {
    let worst_point = if acc.count > 0 { check.point_at(acc.index) } else { Vec::new() };
    let tolerance = check.tolerance();
    CheckResult {
        lemma: check.lemma(),
        points_checked: acc.count,
        min_margin: acc.min,
        worst_index: acc.index,
        worst_point,
        tolerance,
        pass: acc.count > 0 && acc.min >= -tolerance,
        description: check.description(),
    }
}

pub fn run<C: IndexedCheck + ?Sized>(check: &C) -> CheckResult {
    finish(check, run_range(check, 0..check.len()))
}

fn one_minus_cos(x: f64) -> f64 {
    let s = libm::sin(0.5 * x);
    2.0 * s * s
}

/// `4 |1 - r e^{i theta} xi|^2 - (|theta|/pi + 1 - xi)^2`.
pub fn green_margin(xi: f64, r: f64, theta: f64) -> f64 {
    let w = Complex64::new(1.0, 0.0) - Complex64::from_polar(r, theta) * xi;
    let rhs = theta.abs() / PI + 1.0 - xi;
    4.0 * w.norm_sqr() - rhs * rhs
}

/// Axes `(xi, r, theta)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GreenLower {
    pub grid: GridSpec,
}

impl GreenLower {
    pub fn new(grid: GridSpec) -> Result<Self, Error> {
        if grid.axes.len() != 3 {
            return Err(Error::InvalidGrid("green-lower needs axes (xi, r, theta)"));
        }
        Ok(GreenLower { grid })
    }

    /// `xi, r in [0,1]`, `theta in [0, pi]`, `n` points per axis.
    pub fn standard(n: u32, tolerance: f64) -> Result<Self, Error> {
        let unit = GridAxis { lo: 0.0, hi: 1.0, n };
        GreenLower::new(GridSpec::new(vec![unit, unit, GridAxis { lo: 0.0, hi: PI, n }], tolerance)?)
    }
}

impl IndexedCheck for GreenLower {
    fn lemma(&self) -> LemmaId {
        LemmaId::GreenLower
    }
    fn len(&self) -> u64 {
        self.grid.len()
    }
    fn tolerance(&self) -> f64 {
        self.grid.margin_tolerance
    }
    fn margin_at(&self, index: u64) -> f64 {
        let mut p = [0.0; 3];
        self.grid.point(index, &mut p);
        green_margin(p[0], p[1], p[2])
    }
    fn point_at(&self, index: u64) -> Vec<f64> {
        let mut p = vec![0.0; 3];
        self.grid.point(index, &mut p);
        p
    }
    fn description(&self) -> String {
        String::from("4|1 - r e^(i theta) xi|^2 - (theta/pi + 1 - xi)^2 over (xi, r, theta)")
    }
}

/// `3 + (4r^2 - 1) y^2 - 2(4r - 1) y cos(theta)`.
pub fn mu_polynomial(r: f64, theta: f64, y: f64) -> f64 {
    3.0 + (4.0 * r * r - 1.0) * y * y - 2.0 * (4.0 * r - 1.0) * y * libm::cos(theta)
}

/// `4|1 - r e^{i theta} y|^2 - |1 - e^{i theta} y|^2`, the same quantity from the moduli.
pub fn mu_modulus(r: f64, theta: f64, y: f64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let mu = Complex64::from_polar(r, theta);
    let phase = Complex64::from_polar(1.0, theta);
    4.0 * (one - mu * y).norm_sqr() - (one - phase * y).norm_sqr()
}

/// Axes `(r, theta, y)`; the margin is the smaller of the two evaluations.
#[derive(Clone, Debug, PartialEq)]
pub struct MuBound {
    pub grid: GridSpec,
}

impl MuBound {
    pub fn new(grid: GridSpec) -> Result<Self, Error> {
        if grid.axes.len() != 3 {
            return Err(Error::InvalidGrid("mu-bound needs axes (r, theta, y)"));
        }
        Ok(MuBound { grid })
    }

    /// `r in [0,1]`, `theta in [0,pi]`, `y in [-1,1]`.
    pub fn standard(n: u32, tolerance: f64) -> Result<Self, Error> {
        MuBound::new(GridSpec::new(
            vec![GridAxis { lo: 0.0, hi: 1.0, n }, GridAxis { lo: 0.0, hi: PI, n }, GridAxis { lo: -1.0, hi: 1.0, n }],
            tolerance,
        )?)
    }
}

impl IndexedCheck for MuBound {
    fn lemma(&self) -> LemmaId {
        LemmaId::MuBound
    }
    fn len(&self) -> u64 {
        self.grid.len()
    }
    fn tolerance(&self) -> f64 {
        self.grid.margin_tolerance
    }
    fn margin_at(&self, index: u64) -> f64 {
        let mut p = [0.0; 3];
        self.grid.point(index, &mut p);
        mu_polynomial(p[0], p[1], p[2]).min(mu_modulus(p[0], p[1], p[2]))
    }
    fn point_at(&self, index: u64) -> Vec<f64> {
        let mut p = vec![0.0; 3];
        self.grid.point(index, &mut p);
        p
    }
    fn description(&self) -> String {
        String::from("4|1 - mu y|^2 - |1 - e^(i arg mu) y|^2 over (|mu|, arg mu, y)")
    }
}

/// Largest `d` for which the exact integer evaluation of `h_{d+1}` fits in `i128`.
pub const D2K_MAX_DIM: u32 = 9;
/// Denominator of the rational lattice used by the quasi-random mode.
pub const D2K_SAMPLE_DENOMINATOR: i128 = 1024;

const PRIMES: [u64; 10] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29];

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += f * (i % base) as f64;
        i /= base;
        f *= inv;
    }
    x
}

/// `m^k h_k(a/m)` for numerators `a_j` in `[0, m]`, exactly.
pub fn h_scaled(a: &[i128], m: i128) -> i128 {
    let mut m_pow = 1i128;
    let mut prod = 1i128;
    let mut signed = 1i128;
    for &aj in a {
        m_pow *= m;
        prod *= aj;
        signed *= 2 * aj - m;
    }
    m_pow - 2 * prod + signed
}

/// `h_d(xi) = 1 - 2 prod xi_j + prod (2 xi_j - 1)`, in floating point.
pub fn h_float(xi: &[f64]) -> f64 {
    let prod: f64 = xi.iter().product();
    let signed: f64 = xi.iter().map(|x| 2.0 * x - 1.0).product();
    1.0 - 2.0 * prod + signed
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum D2kSampling {
    /// Every point of `{0, 1/(n-1), ..., 1}^d`.
    Grid { per_axis: u32 },
    /// Halton points rounded to multiples of `1/1024`.
    QuasiRandom { samples: u64 },
}

/// `h_d >= 0`, plus the induction skeleton `h_{d+1}(., 0) >= 0` and
/// `h_{d+1}(., 1) = h_d`, all evaluated exactly on rational points.
#[derive(Clone, Debug, PartialEq)]
pub struct D2k {
    pub d: u32,
    pub sampling: D2kSampling,
    pub tolerance: f64,
}

impl D2k {
    pub fn new(d: u32, sampling: D2kSampling, tolerance: f64) -> Result<Self, Error> {
        if d == 0 || d > D2K_MAX_DIM {
            return Err(Error::InvalidGrid("d2k supports 1 <= d <= 9"));
        }
        match sampling {
            D2kSampling::Grid { per_axis } if per_axis < 2 => {
                return Err(Error::InvalidGrid("grid needs at least 2 points per axis"))
            }
            D2kSampling::Grid { per_axis } if libm::pow(per_axis as f64, d as f64) > 1e10 => {
                return Err(Error::InvalidGrid("full grid too large; use quasi-random sampling"))
            }
            D2kSampling::QuasiRandom { samples: 0 } => return Err(Error::InvalidGrid("need at least one sample")),
            _ => {}
        }
        if !(tolerance >= 0.0) {
            return Err(Error::InvalidGrid("margin tolerance must be nonnegative"));
        }
        Ok(D2k { d, sampling, tolerance })
    }

    fn denominator(&self) -> i128 {
        match self.sampling {
            D2kSampling::Grid { per_axis } => per_axis as i128 - 1,
            D2kSampling::QuasiRandom { .. } => D2K_SAMPLE_DENOMINATOR,
        }
    }

    fn numerators(&self, index: u64, out: &mut [i128]) {
        let m = self.denominator();
        match self.sampling {
            D2kSampling::Grid { per_axis } => {
                let mut i = index;
                for slot in out.iter_mut().rev() {
                    *slot = (i % per_axis as u64) as i128;
                    i /= per_axis as u64;
                }
            }
            D2kSampling::QuasiRandom { .. } => {
                for (slot, &base) in out.iter_mut().zip(PRIMES.iter()) {
                    let x = radical_inverse(index + 1, base);
                    *slot = libm::round(x * m as f64) as i128;
                }
            }
        }
    }
}

impl IndexedCheck for D2k {
    fn lemma(&self) -> LemmaId {
        LemmaId::D2k
    }
    fn len(&self) -> u64 {
        match self.sampling {
            D2kSampling::Grid { per_axis } => (per_axis as u64).pow(self.d),
            D2kSampling::QuasiRandom { samples } => samples,
        }
    }
    fn tolerance(&self) -> f64 {
        self.tolerance
    }
    fn margin_at(&self, index: u64) -> f64 {
        let d = self.d as usize;
        let m = self.denominator();
        let mut a = [0i128; D2K_MAX_DIM as usize + 1];
        self.numerators(index, &mut a[..d]);
        let h = h_scaled(&a[..d], m);
        a[d] = 0;
        let h_at_zero = h_scaled(&a[..=d], m);
        a[d] = m;
        let h_at_one = h_scaled(&a[..=d], m);
        // h_{d+1}(., 1) carries one more factor of m than h_d.
        let identity_gap = -(h_at_one - m * h).abs();
        let scale = libm::pow(m as f64, self.d as f64);
        let next_scale = scale * m as f64;
        (h as f64 / scale).min(h_at_zero as f64 / next_scale).min(identity_gap as f64 / next_scale)
    }
    fn point_at(&self, index: u64) -> Vec<f64> {
        let d = self.d as usize;
        let m = self.denominator() as f64;
        let mut a = [0i128; D2K_MAX_DIM as usize];
        self.numerators(index, &mut a[..d]);
        a[..d].iter().map(|&x| x as f64 / m).collect()
    }
    fn description(&self) -> String {
        use alloc::format;
        let mode = match self.sampling {
            D2kSampling::Grid { per_axis } => format!("full grid, {per_axis} points per axis"),
            D2kSampling::QuasiRandom { samples } => format!("{samples} Halton samples on the 1/1024 lattice"),
        };
        format!("h_{} >= 0 with h_{}(.,0) >= 0 and h_{}(.,1) = h_{}; {mode}", self.d, self.d + 1, self.d + 1, self.d)
    }
}

/// Randomized check of `0 <= 1 - cos(sum t_j) <= J sum (1 - cos t_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CosineTelescope {
    pub trials: u64,
    pub j_max: u32,
    pub seed: u64,
    pub tolerance: f64,
}

impl CosineTelescope {
    pub const MAX_TERMS: u32 = 64;

    pub fn new(trials: u64, j_max: u32, seed: u64, tolerance: f64) -> Result<Self, Error> {
        if j_max == 0 || j_max > Self::MAX_TERMS {
            return Err(Error::InvalidGrid("J_max must be between 1 and 64"));
        }
        if trials == 0 || !(tolerance >= 0.0) {
            return Err(Error::InvalidGrid("need trials >= 1 and a nonnegative tolerance"));
        }
        Ok(CosineTelescope { trials, j_max, seed, tolerance })
    }

    fn sample(&self, index: u64, out: &mut [f64; Self::MAX_TERMS as usize]) -> usize {
        let h = KeyedHash::new(self.seed).with(0xc05);
        let j = 1 + (h.at(&[index, 0]) % self.j_max as u64) as usize;
        for (k, slot) in out.iter_mut().take(j).enumerate() {
            *slot = PI * (2.0 * unit(h.at(&[index, 1 + k as u64])) - 1.0);
        }
        j
    }
}

/// `min(1 - cos S, J sum (1 - cos t_j) - (1 - cos S))`, `S = sum t_j`.
pub fn cosine_margin(t: &[f64]) -> f64 {
    let total: f64 = t.iter().sum();
    let lhs = one_minus_cos(total);
    let rhs = t.len() as f64 * t.iter().map(|&x| one_minus_cos(x)).sum::<f64>();
    lhs.min(rhs - lhs)
}

impl IndexedCheck for CosineTelescope {
    fn lemma(&self) -> LemmaId {
        LemmaId::CosineTelescope
    }
    fn len(&self) -> u64 {
        self.trials
    }
    fn tolerance(&self) -> f64 {
        self.tolerance
    }
    fn margin_at(&self, index: u64) -> f64 {
        let mut t = [0.0; Self::MAX_TERMS as usize];
        let j = self.sample(index, &mut t);
        cosine_margin(&t[..j])
    }
    fn point_at(&self, index: u64) -> Vec<f64> {
        let mut t = [0.0; Self::MAX_TERMS as usize];
        let j = self.sample(index, &mut t);
        t[..j].to_vec()
    }
    fn description(&self) -> String {
        use alloc::format;
        format!("0 <= 1 - cos(sum t_j) <= J sum(1 - cos t_j), J <= {}", self.j_max)
    }
}

/// A symmetric sequence `a(x, t)` on `x in [-R, R]^2`, `t in [0, T]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TestSequence {
    /// `(x, t, a)`, listing both `x` and `-x`.
    pub entries: Vec<([i32; 2], u32, f64)>,
}

impl TestSequence {
    pub const RADIUS: i32 = 2;
    pub const T_MAX: u32 = 3;

    pub fn zero() -> Self {
        TestSequence { entries: Vec::new() }
    }

    /// `a(x, t) = a(-x, t) = w`.
    pub fn symmetric_pair(x: [i32; 2], t: u32, w: f64) -> Self {
        let mut entries = vec![(x, t, w)];
        if x != [0, 0] {
            entries.push(([-x[0], -x[1]], t, w));
        }
        TestSequence { entries }
    }

    /// Random symmetric sequence with `sum |a| = total`.
    pub fn random(h: &KeyedHash, trial: u64, total: f64) -> Self {
        let mut entries = Vec::new();
        let mut counter = 0u64;
        let mut draw = || {
            counter += 1;
            unit(h.at(&[trial, counter]))
        };
        let r = Self::RADIUS;
        for t in 0..=Self::T_MAX {
            for x0 in -r..=r {
                for x1 in -r..=r {
                    // one representative of each {x, -x} pair
                    if (x0, x1) < (0, 0) {
                        continue;
                    }
                    if draw() < 0.6 {
                        continue;
                    }
                    let w = 2.0 * draw() - 1.0;
                    entries.push(([x0, x1], t, w));
                    if (x0, x1) != (0, 0) {
                        entries.push(([-x0, -x1], t, w));
                    }
                }
            }
        }
        let norm: f64 = entries.iter().map(|e| e.2.abs()).sum();
        if norm > 0.0 {
            for e in entries.iter_mut() {
                e.2 *= total / norm;
            }
        }
        TestSequence { entries }
    }

    /// `sum a(x,t) e^{i k.x} z^t`.
    pub fn transform(&self, k: [f64; 2], z: Complex64) -> Complex64 {
        self.entries
            .iter()
            .map(|&(x, t, a)| z.powu(t) * (a * libm::cos(k[0] * x[0] as f64 + k[1] * x[1] as f64)))
            .sum()
    }

    /// `sum |a(x,t)| cos(k.x) s^t` for real `s >= 0`.
    pub fn abs_transform(&self, k: [f64; 2], s: f64) -> f64 {
        self.entries
            .iter()
            .map(|&(x, t, a)| a.abs() * libm::cos(k[0] * x[0] as f64 + k[1] * x[1] as f64) * libm::pow(s, t as f64))
            .sum()
    }

    fn trig_transforms(&self, l: [f64; 2], k: [f64; 2], z: Complex64) -> (Complex64, Complex64) {
        let mut c = Complex64::new(0.0, 0.0);
        let mut s = Complex64::new(0.0, 0.0);
        for &(x, t, a) in &self.entries {
            let (lx, kx) = (l[0] * x[0] as f64 + l[1] * x[1] as f64, k[0] * x[0] as f64 + k[1] * x[1] as f64);
            let zt = z.powu(t);
            c += zt * (a * libm::cos(lx) * libm::cos(kx));
            s += zt * (a * libm::sin(lx) * libm::sin(kx));
        }
        (c, s)
    }
}

/// Both sides of the second-difference bound plus the residual of the exact
/// identity it is derived from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SecondDifference {
    pub lhs: f64,
    pub rhs: f64,
    pub identity_residual: f64,
}

pub fn second_difference(a: &TestSequence, k: [f64; 2], l: [f64; 2], z: Complex64) -> SecondDifference {
    let one = Complex64::new(1.0, 0.0);
    let big_a = |q: [f64; 2]| one / (one - a.transform(q, z));
    let lpk = [l[0] + k[0], l[1] + k[1]];
    let lmk = [l[0] - k[0], l[1] - k[1]];
    let (a_l, a_p, a_m) = (big_a(l), big_a(lpk), big_a(lmk));
    let half_lap = (a_p + a_m - a_l * 2.0) * 0.5;

    let s = z.norm();
    let abs0 = a.abs_transform([0.0, 0.0], s);
    let dk = abs0 - a.abs_transform(k, s);
    let d2l = abs0 - a.abs_transform([2.0 * l[0], 2.0 * l[1]], s);
    let (n_l, n_p, n_m) = (a_l.norm(), a_p.norm(), a_m.norm());
    let rhs = dk * ((n_p + n_m) / 2.0 * n_l + n_l * n_p * n_m * d2l);

    let (a_cos, a_sin) = a.trig_transforms(l, k, z);
    let a_hat_l = a.transform(l, z);
    let identity = (a_p + a_m) * 0.5 * a_l * (a_hat_l - a_cos) - a_l * a_p * a_m * a_sin * a_sin;
    let residual = (identity + half_lap).norm();

    SecondDifference { lhs: half_lap.norm(), rhs, identity_residual: residual }
}

/// Randomized check of the second-difference bound in `d = 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct DoubleDerivative {
    pub trials: u64,
    pub seed: u64,
    pub tolerance: f64,
}

struct DdSample {
    a: TestSequence,
    k: [f64; 2],
    l: [f64; 2],
    z: Complex64,
}

impl DoubleDerivative {
    /// Total variation of the random sequences, keeping `|1 - a| >= 1/2`.
    pub const MASS: f64 = 0.5;

    pub fn new(trials: u64, seed: u64, tolerance: f64) -> Result<Self, Error> {
        if trials == 0 || !(tolerance >= 0.0) {
            return Err(Error::InvalidGrid("need trials >= 1 and a nonnegative tolerance"));
        }
        Ok(DoubleDerivative { trials, seed, tolerance })
    }

    fn sample(&self, index: u64) -> DdSample {
        let h = KeyedHash::new(self.seed).with(0xdd);
        let mass = Self::MASS * unit(h.at(&[index, 1 << 40]));
        let a = TestSequence::random(&h.with(1), index, mass);
        let angle = |j: u64| PI * (2.0 * unit(h.at(&[index, (1 << 41) + j])) - 1.0);
        let radius = libm::sqrt(unit(h.at(&[index, 1 << 42])));
        DdSample { a, k: [angle(0), angle(1)], l: [angle(2), angle(3)], z: Complex64::from_polar(radius, angle(4)) }
    }
}

impl IndexedCheck for DoubleDerivative {
    fn lemma(&self) -> LemmaId {
        LemmaId::DoubleDerivative
    }
    fn len(&self) -> u64 {
        self.trials
    }
    fn tolerance(&self) -> f64 {
        self.tolerance
    }
    fn margin_at(&self, index: u64) -> f64 {
        let s = self.sample(index);
        let r = second_difference(&s.a, s.k, s.l, s.z);
        (r.rhs - r.lhs).min(-r.identity_residual)
    }
    fn point_at(&self, index: u64) -> Vec<f64> {
        let s = self.sample(index);
        vec![s.k[0], s.k[1], s.l[0], s.l[1], s.z.re, s.z.im, s.a.entries.len() as f64]
    }
    fn description(&self) -> String {
        String::from("|Delta_k A(l,z)|/2 against its bound, symmetric a on [-2,2]^2 x [0,3], sum|a| <= 1/2")
    }
}

pub fn check_green_lower(grid: GridSpec) -> Result<CheckResult, Error> {
    Ok(run(&GreenLower::new(grid)?))
}

pub fn check_mu_bound(grid: GridSpec) -> Result<CheckResult, Error> {
    Ok(run(&MuBound::new(grid)?))
}

pub fn check_d2k(d: u32, sampling: D2kSampling, tolerance: f64) -> Result<CheckResult, Error> {
    Ok(run(&D2k::new(d, sampling, tolerance)?))
}

pub fn check_cosine_telescope(trials: u64, j_max: u32, seed: u64, tolerance: f64) -> Result<CheckResult, Error> {
    Ok(run(&CosineTelescope::new(trials, j_max, seed, tolerance)?))
}

pub fn check_double_derivative_identity(trials: u64, seed: u64, tolerance: f64) -> Result<CheckResult, Error> {
    Ok(run(&DoubleDerivative::new(trials, seed, tolerance)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn green_examples() {
        assert_eq!(green_margin(0.0, 0.0, 0.0), 3.0);
        // (xi=1, r=1, theta=0) and (xi=0, r=0, theta=pi) are tight
        assert!(green_margin(1.0, 1.0, 0.0).abs() < 1e-15);
        assert!(green_margin(0.0, 0.0, PI).abs() < 1e-15);
        // on xi = 1, r = cos(theta) the margin reduces to 4 sin^2(theta) - theta^2/pi^2
        for i in 0..=20 {
            let theta = PI / 2.0 * i as f64 / 20.0;
            let want = 4.0 * libm::sin(theta).powi(2) - (theta / PI).powi(2);
            assert!((green_margin(1.0, libm::cos(theta), theta) - want).abs() < 1e-14);
        }
    }

    #[test]
    fn green_grid_passes() {
        let r = run(&GreenLower::standard(41, TOL).unwrap());
        assert!(r.pass, "{r:?}");
        assert!(r.min_margin.abs() < 1e-14);
    }

    #[test]
    fn mu_examples() {
        assert!(mu_polynomial(1.0, 0.0, 1.0).abs() < 1e-15);
        for theta in [0.0, 1.0, PI] {
            assert_eq!(mu_polynomial(0.0, theta, 0.0), 3.0);
        }
        for (r, th, y) in [(0.3, 0.7, -0.4), (0.9, 2.0, 0.8), (1.0, PI, -1.0)] {
            assert!((mu_polynomial(r, th, y) - mu_modulus(r, th, y)).abs() < 1e-14);
        }
        let r = run(&MuBound::standard(41, TOL).unwrap());
        assert!(r.pass && r.min_margin.abs() < 1e-14, "{r:?}");
    }

    #[test]
    fn h_one_vanishes() {
        let r = check_d2k(1, D2kSampling::Grid { per_axis: 101 }, TOL).unwrap();
        assert_eq!(r.min_margin, 0.0);
        for i in 0..=100 {
            assert_eq!(h_scaled(&[i], 100), 0);
        }
    }

    #[test]
    fn h_exact_matches_float() {
        let xi = [0.25, 0.5, 0.75];
        let exact = h_scaled(&[1, 2, 3], 4) as f64 / 64.0;
        assert!((exact - h_float(&xi)).abs() < 1e-15);
    }

    #[test]
    fn d2k_grids_pass() {
        for d in 1..=3 {
            let r = check_d2k(d, D2kSampling::Grid { per_axis: 51 }, TOL).unwrap();
            assert!(r.pass && r.min_margin >= 0.0, "d={d} {r:?}");
        }
        for d in 4..=9 {
            let r = check_d2k(d, D2kSampling::QuasiRandom { samples: 2000 }, TOL).unwrap();
            assert!(r.pass && r.min_margin >= 0.0, "d={d} {r:?}");
        }
    }

    #[test]
    fn boundary_identity_holds_exactly() {
        for i in 0..=50i128 {
            for j in 0..=50i128 {
                assert_eq!(h_scaled(&[i, j, 50], 50), 50 * h_scaled(&[i, j], 50));
            }
        }
    }

    #[test]
    fn d2k_rejects_bad_input() {
        assert!(D2k::new(0, D2kSampling::Grid { per_axis: 3 }, TOL).is_err());
        assert!(D2k::new(10, D2kSampling::QuasiRandom { samples: 3 }, TOL).is_err());
        assert!(D2k::new(8, D2kSampling::Grid { per_axis: 101 }, TOL).is_err());
        assert!(D2k::new(2, D2kSampling::Grid { per_axis: 1 }, TOL).is_err());
    }

    #[test]
    fn cosine_examples() {
        let t = 1.234;
        let single = cosine_margin(&[t]);
        assert!(single.abs() < 1e-15);
        let pair = [PI / 2.0, PI / 2.0];
        let lhs = one_minus_cos(PI);
        assert!((lhs - 2.0).abs() < 1e-15);
        assert!((cosine_margin(&pair) - 2.0).abs() < 1e-14);
        let r = check_cosine_telescope(20_000, 8, 7, TOL).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn double_derivative_zero_sequence() {
        let r = second_difference(&TestSequence::zero(), [0.3, -1.0], [1.1, 0.2], Complex64::new(0.5, 0.1));
        assert_eq!((r.lhs, r.rhs, r.identity_residual), (0.0, 0.0, 0.0));
    }

    #[test]
    fn double_derivative_single_site() {
        let a = TestSequence::symmetric_pair([1, 1], 1, 0.1);
        for (k, l, z) in [
            ([0.5, 0.2], [0.1, 1.3], Complex64::new(1.0, 0.0)),
            ([PI, 0.0], [0.7, -0.7], Complex64::from_polar(0.8, 2.0)),
        ] {
            let r = second_difference(&a, k, l, z);
            assert!(r.rhs - r.lhs > -1e-15 && r.identity_residual < 1e-15, "{r:?}");
            // oracle: with a(+-e,1) = 0.1, a(q,z) = 0.2 cos(q.e) z
            let a_hat = |q: [f64; 2]| Complex64::new(0.2 * libm::cos(q[0] + q[1]), 0.0) * z;
            let big = |q: [f64; 2]| 1.0 / (1.0 - a_hat(q));
            let lap = big([l[0] + k[0], l[1] + k[1]]) + big([l[0] - k[0], l[1] - k[1]]) - big(l) * 2.0;
            assert!((lap.norm() / 2.0 - r.lhs).abs() < 1e-15);
        }
    }

    #[test]
    fn double_derivative_random_pass() {
        let r = check_double_derivative_identity(500, 3, TOL).unwrap();
        assert!(r.pass, "{r:?}");
    }

    #[test]
    fn min_margin_merge_is_order_independent() {
        let check = GreenLower::standard(11, TOL).unwrap();
        let n = check.len();
        let whole = run_range(&check, 0..n);
        let parts: Vec<MinMargin> = (0..n).step_by(97).map(|s| run_range(&check, s..(s + 97).min(n))).collect();
        let forward = parts.iter().fold(MinMargin::EMPTY, |a, &b| a.merge(b));
        let backward = parts.iter().rev().fold(MinMargin::EMPTY, |a, &b| b.merge(a));
        assert_eq!(whole, forward);
        assert_eq!(whole, backward);
    }

    #[test]
    fn refinement_keeps_passing() {
        for n in [21, 41] {
            assert!(run(&GreenLower::standard(n, TOL).unwrap()).pass);
            assert!(run(&MuBound::standard(n, TOL).unwrap()).pass);
        }
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(vec![GridAxis { lo: 0.0, hi: 1.0, n: 1 }], TOL).is_err());
        assert!(GridSpec::new(vec![GridAxis { lo: 0.0, hi: 1.0, n: 2 }], -1.0).is_err());
        assert!(GreenLower::new(GridSpec::new(vec![GridAxis { lo: 0.0, hi: 1.0, n: 2 }], 0.0).unwrap()).is_err());
        assert_eq!("d2k".parse::<LemmaId>().unwrap(), LemmaId::D2k);
        assert!("lemma9".parse::<LemmaId>().is_err());
    }

    #[test]
    fn grid_point_order() {
        let g = GridSpec::new(vec![GridAxis { lo: 0.0, hi: 1.0, n: 2 }, GridAxis { lo: 0.0, hi: 2.0, n: 3 }], 0.0)
            .unwrap();
        let mut p = [0.0; 2];
        g.point(4, &mut p);
        assert_eq!(p, [1.0, 1.0]);
    }
}
