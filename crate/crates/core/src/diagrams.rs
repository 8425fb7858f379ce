//! Closed-form upper bounds on the basic diagrams.
//!
//! Under the bootstrap hypotheses `g_i <= K_i` the bubble, triangle and
//! weighted-bubble diagrams are controlled by the random-walk table:
//!
//! ```text
//! B^(l,r)            <= K1^(l+r) K2^2 eps1^(floor((l+r)/2))
//! T^(l,r)            <= sqrt(2) K1^(l+r) K2^3 eps2^(floor((l+r)/2))
//! ||V^(l,r)/(1-D)||  <= l(l-1) K1^(l+r) K2^2 eps1^(nu) + l K1^(l+r-1) K2 K3 (sqrt(2)+4) eps2^(nu),
//!                       nu = floor((l+r-1)/2), when l >= 2 or r >= 2
//! ||V^(1,1)/(1-D)||  <= K1^2 ||D||_inf + K1^3 K2 sqrt(eps1^(2)) + ||V^(2,1)/(1-D)||
//! ```
//!
//! The bounds are uniform in the mass parameter `m`, so the `p,1` and `p,m`
//! variants of a diagram share one value.

use core::fmt;

use crate::numeric::{Interval, Policy, Scalar, UpperBound};
use crate::rw::{Dimension, RwTable};
use crate::Error;

/// The hypothesized constants `(K1, K2, K3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BootstrapConstants {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl BootstrapConstants {
    /// Constants for a bootstrap hypothesis; each must be finite and exceed 1.
    pub fn new(k1: f64, k2: f64, k3: f64) -> Result<Self, Error> {
        let ok = |k: f64| k.is_finite() && k > 1.0;
        if ok(k1) && ok(k2) && ok(k3) {
            Ok(BootstrapConstants { k1, k2, k3 })
        } else {
            Err(Error::InvalidConstants)
        }
    }

    /// Any finite positive constants. Used for sensitivity studies and the
    /// unperturbed limit `K = 1`, which are outside the bootstrap hypothesis.
    pub fn raw(k1: f64, k2: f64, k3: f64) -> Result<Self, Error> {
        let ok = |k: f64| k.is_finite() && k > 0.0;
        if ok(k1) && ok(k2) && ok(k3) {
            Ok(BootstrapConstants { k1, k2, k3 })
        } else {
            Err(Error::InvalidConstants)
        }
    }

    /// `(1.0020, 1.0500, 1.2500)`, the constants that close the bootstrap at d = 9.
    pub fn reference() -> Self {
        BootstrapConstants { k1: 1.0020, k2: 1.0500, k3: 1.2500 }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.k1, self.k2, self.k3]
    }
}

/// Superscript `(lambda, rho)` of a diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagramIndex {
    pub lambda: u32,
    pub rho: u32,
}

impl DiagramIndex {
    pub const fn new(lambda: u32, rho: u32) -> Self {
        DiagramIndex { lambda, rho }
    }

    pub fn order(self) -> u32 {
        self.lambda + self.rho
    }
}

impl fmt::Display for DiagramIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.lambda, self.rho)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DiagramKind {
    Bubble,
    Triangle,
    WeightedBubble,
}

impl DiagramKind {
    pub fn letter(self) -> char {
        match self {
            DiagramKind::Bubble => 'B',
            DiagramKind::Triangle => 'T',
            DiagramKind::WeightedBubble => 'V',
        }
    }
}

const fn ix(lambda: u32, rho: u32) -> DiagramIndex {
    DiagramIndex::new(lambda, rho)
}

/// Bubble indices the bound chain reads.
pub const BUBBLE_INDICES: [DiagramIndex; 6] = [ix(0, 2), ix(1, 1), ix(1, 2), ix(1, 3), ix(2, 1), ix(2, 2)];
/// Triangle indices the bound chain reads.
pub const TRIANGLE_INDICES: [DiagramIndex; 7] =
    [ix(0, 2), ix(1, 1), ix(1, 2), ix(1, 3), ix(2, 1), ix(2, 2), ix(3, 1)];
/// Weighted-bubble indices the bound chain reads.
pub const WEIGHTED_INDICES: [DiagramIndex; 6] = [ix(1, 1), ix(1, 2), ix(1, 3), ix(2, 1), ix(2, 2), ix(3, 1)];

pub(crate) struct Constants<S> {
    pub k1: S,
    pub k2: S,
    pub k3: S,
}

impl<S: Scalar> Constants<S> {
    pub fn new(k: &BootstrapConstants) -> Self {
        Constants { k1: S::exact(k.k1), k2: S::exact(k.k2), k3: S::exact(k.k3) }
    }
}

fn eps1_s<S: Scalar>(rw: &RwTable, nu: u32) -> Result<S, Error> {
    Ok(S::exact(rw.eps1(nu)?.value()))
}

fn eps2_s<S: Scalar>(rw: &RwTable, nu: u32) -> Result<S, Error> {
    Ok(S::exact(rw.eps2(nu)?.value()))
}

fn unsupported(idx: DiagramIndex) -> Error {
    Error::UnsupportedIndex { lambda: idx.lambda, rho: idx.rho }
}

pub(crate) fn bubble_s<S: Scalar>(idx: DiagramIndex, k: &Constants<S>, rw: &RwTable) -> Result<S, Error> {
    let nu = idx.order() / 2;
    if nu == 0 {
        return Err(unsupported(idx));
    }
    Ok(k.k1.powu(idx.order()) * k.k2.powu(2) * eps1_s(rw, nu)?)
}

pub(crate) fn triangle_s<S: Scalar>(idx: DiagramIndex, k: &Constants<S>, rw: &RwTable) -> Result<S, Error> {
    let nu = idx.order() / 2;
    if nu == 0 {
        return Err(unsupported(idx));
    }
    Ok(S::exact(2.0).sqrt() * k.k1.powu(idx.order()) * k.k2.powu(3) * eps2_s(rw, nu)?)
}

pub(crate) fn weighted_s<S: Scalar>(idx: DiagramIndex, k: &Constants<S>, rw: &RwTable) -> Result<S, Error> {
    let DiagramIndex { lambda, rho } = idx;
    if lambda == 1 && rho == 1 {
        let d_sup = S::exact(rw.dimension().d_sup_norm());
        let recursive = weighted_s(ix(2, 1), k, rw)?;
        return Ok(k.k1.powu(2) * d_sup + k.k1.powu(3) * k.k2 * eps1_s::<S>(rw, 2)?.sqrt() + recursive);
    }
    if lambda < 2 && rho < 2 {
        return Err(unsupported(idx));
    }
    let nu = (idx.order() - 1) / 2;
    if nu == 0 {
        return Err(unsupported(idx));
    }
    let l = S::exact(lambda as f64);
    let l_pair = S::exact((lambda * lambda.saturating_sub(1)) as f64);
    let first = l_pair * k.k1.powu(idx.order()) * k.k2.powu(2) * eps1_s(rw, nu)?;
    let coupling = S::exact(2.0).sqrt() + S::exact(4.0);
    let second = l * k.k1.powu(idx.order() - 1) * k.k2 * k.k3 * coupling * eps2_s(rw, nu)?;
    Ok(first + second)
}

fn dispatch<F64, Cert>(rw: &RwTable, fast: F64, certified: Cert) -> Result<UpperBound, Error>
where
    F64: FnOnce() -> Result<f64, Error>,
    Cert: FnOnce() -> Result<Interval, Error>,
{
    match rw.policy() {
        Policy::Fast => fast().map(|v| v.to_bound()),
        Policy::Certified => certified().map(|v| v.to_bound()),
    }
}

/// Bubble bound `K1^(l+r) K2^2 eps1^(floor((l+r)/2))`; accepts `lambda = 0`.
pub fn bubble_bound(idx: DiagramIndex, k: &BootstrapConstants, rw: &RwTable) -> Result<UpperBound, Error> {
    dispatch(
        rw,
        || bubble_s::<f64>(idx, &Constants::new(k), rw),
        || bubble_s::<Interval>(idx, &Constants::new(k), rw),
    )
}

/// Triangle bound `sqrt(2) K1^(l+r) K2^3 eps2^(floor((l+r)/2))`.
pub fn triangle_bound(idx: DiagramIndex, k: &BootstrapConstants, rw: &RwTable) -> Result<UpperBound, Error> {
    dispatch(
        rw,
        || triangle_s::<f64>(idx, &Constants::new(k), rw),
        || triangle_s::<Interval>(idx, &Constants::new(k), rw),
    )
}

/// Bound on `sup_k V^(l,r)(k) / (1 - D(k))`.
pub fn weighted_bubble_bound(
    idx: DiagramIndex,
    k: &BootstrapConstants,
    rw: &RwTable,
) -> Result<UpperBound, Error> {
    dispatch(
        rw,
        || weighted_s::<f64>(idx, &Constants::new(k), rw),
        || weighted_s::<Interval>(idx, &Constants::new(k), rw),
    )
}

/// Evaluated diagram bounds for every index the bound chain reads.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagramBoundSet {
    pub d: Dimension,
    pub constants: BootstrapConstants,
    pub policy: Policy,
    pub bubble: [f64; BUBBLE_INDICES.len()],
    pub triangle: [f64; TRIANGLE_INDICES.len()],
    pub weighted: [f64; WEIGHTED_INDICES.len()],
}

fn position(list: &[DiagramIndex], idx: DiagramIndex) -> Option<usize> {
    list.iter().position(|&i| i == idx)
}

impl DiagramBoundSet {
    pub fn evaluate(k: &BootstrapConstants, rw: &RwTable) -> Result<Self, Error> {
        match rw.policy() {
            Policy::Fast => Self::evaluate_with::<f64>(k, rw),
            Policy::Certified => Self::evaluate_with::<Interval>(k, rw),
        }
    }

    fn evaluate_with<S: Scalar>(k: &BootstrapConstants, rw: &RwTable) -> Result<Self, Error> {
        let kc = Constants::<S>::new(k);
        let mut set = DiagramBoundSet {
            d: rw.dimension(),
            constants: *k,
            policy: S::POLICY,
            bubble: [0.0; BUBBLE_INDICES.len()],
            triangle: [0.0; TRIANGLE_INDICES.len()],
            weighted: [0.0; WEIGHTED_INDICES.len()],
        };
        for (slot, &idx) in set.bubble.iter_mut().zip(BUBBLE_INDICES.iter()) {
            *slot = bubble_s(idx, &kc, rw)?.upper();
        }
        for (slot, &idx) in set.triangle.iter_mut().zip(TRIANGLE_INDICES.iter()) {
            *slot = triangle_s(idx, &kc, rw)?.upper();
        }
        for (slot, &idx) in set.weighted.iter_mut().zip(WEIGHTED_INDICES.iter()) {
            *slot = weighted_s(idx, &kc, rw)?.upper();
        }
        Ok(set)
    }

    /// A set filled from `f`, for hand-constructed inputs.
    pub fn from_fn(
        d: Dimension,
        constants: BootstrapConstants,
        policy: Policy,
        mut f: impl FnMut(DiagramKind, DiagramIndex) -> f64,
    ) -> Self {
        let mut set = DiagramBoundSet {
            d,
            constants,
            policy,
            bubble: [0.0; BUBBLE_INDICES.len()],
            triangle: [0.0; TRIANGLE_INDICES.len()],
            weighted: [0.0; WEIGHTED_INDICES.len()],
        };
        for (i, &idx) in BUBBLE_INDICES.iter().enumerate() {
            set.bubble[i] = f(DiagramKind::Bubble, idx);
        }
        for (i, &idx) in TRIANGLE_INDICES.iter().enumerate() {
            set.triangle[i] = f(DiagramKind::Triangle, idx);
        }
        for (i, &idx) in WEIGHTED_INDICES.iter().enumerate() {
            set.weighted[i] = f(DiagramKind::WeightedBubble, idx);
        }
        set
    }

    pub fn value(&self, kind: DiagramKind, idx: DiagramIndex) -> Option<f64> {
        match kind {
            DiagramKind::Bubble => position(&BUBBLE_INDICES, idx).map(|i| self.bubble[i]),
            DiagramKind::Triangle => position(&TRIANGLE_INDICES, idx).map(|i| self.triangle[i]),
            DiagramKind::WeightedBubble => position(&WEIGHTED_INDICES, idx).map(|i| self.weighted[i]),
        }
    }

    pub fn get(&self, kind: DiagramKind, idx: DiagramIndex) -> Option<UpperBound> {
        self.value(kind, idx).map(|v| UpperBound::new(v, self.policy))
    }

    /// All entries in a fixed order: bubbles, triangles, weighted bubbles.
    pub fn entries(&self) -> impl Iterator<Item = (DiagramKind, DiagramIndex, UpperBound)> + '_ {
        let b = BUBBLE_INDICES.iter().zip(self.bubble.iter()).map(|(&i, &v)| (DiagramKind::Bubble, i, v));
        let t = TRIANGLE_INDICES.iter().zip(self.triangle.iter()).map(|(&i, &v)| (DiagramKind::Triangle, i, v));
        let w = WEIGHTED_INDICES
            .iter()
            .zip(self.weighted.iter())
            .map(|(&i, &v)| (DiagramKind::WeightedBubble, i, v));
        b.chain(t).chain(w).map(move |(k, i, v)| (k, i, UpperBound::new(v, self.policy)))
    }

    pub fn any_infinite(&self) -> bool {
        self.entries().any(|(_, _, v)| !v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rw::build_table;

    fn table(d: u32, policy: Policy) -> RwTable {
        build_table(Dimension::new(d).unwrap(), 2, 500, policy).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn bubble_examples() {
        let rw = table(9, Policy::Fast);
        let k = BootstrapConstants::reference();
        let b22 = bubble_bound(ix(2, 2), &k, &rw).unwrap().value();
        assert!(rel(b22, 2.11688e-4) < 5e-6, "{b22}");
        let b02 = bubble_bound(ix(0, 2), &k, &rw).unwrap().value();
        assert!(rel(b02, 2.37279e-3) < 5e-6, "{b02}");
        let unit = BootstrapConstants::raw(1.0, 1.0, 1.0).unwrap();
        assert_eq!(bubble_bound(ix(1, 1), &unit, &rw).unwrap().value(), rw.eps1(1).unwrap().value());
    }

    #[test]
    fn triangle_examples() {
        let rw = table(9, Policy::Fast);
        let k = BootstrapConstants::reference();
        let t22 = triangle_bound(ix(2, 2), &k, &rw).unwrap().value();
        assert!(rel(t22, 4.40247e-4) < 5e-6, "{t22}");
        let t11 = triangle_bound(ix(1, 1), &k, &rw).unwrap().value();
        assert!(rel(t11, 3.96190e-3) < 5e-6, "{t11}");
        // sqrt(2) * 1.002^3 * 1.05^3 * eps2^(1), evaluated by hand from the table entry
        let t12 = triangle_bound(ix(1, 2), &k, &rw).unwrap().value();
        let want = core::f64::consts::SQRT_2 * 1.006012008 * 1.157625 * rw.eps2(1).unwrap().value();
        assert!(rel(t12, want) < 1e-12);
        assert!(rel(t12, 3.96982e-3) < 5e-6, "{t12}");
    }

    #[test]
    fn weighted_examples() {
        let rw = table(9, Policy::Fast);
        let k = BootstrapConstants::reference();
        let v22 = weighted_bubble_bound(ix(2, 2), &k, &rw).unwrap().value();
        assert!(rel(v22, 3.92276e-2) < 5e-6, "{v22}");

        let e1 = rw.eps1(1).unwrap().value();
        let e2 = rw.eps2(1).unwrap().value();
        let v21 = weighted_bubble_bound(ix(2, 1), &k, &rw).unwrap().value();
        let want21 = 2.0 * 1.002f64.powi(3) * 1.05f64.powi(2) * e1
            + 2.0 * 1.002f64.powi(2) * 1.05 * 1.25 * (2f64.sqrt() + 4.0) * e2;
        assert!(rel(v21, want21) < 1e-12);

        let v11 = weighted_bubble_bound(ix(1, 1), &k, &rw).unwrap().value();
        let want11 = 1.002f64.powi(2) * 2f64.powi(-9)
            + 1.002f64.powi(3) * 1.05 * rw.eps1(2).unwrap().value().sqrt()
            + want21;
        assert!(rel(v11, want11) < 1e-12);
    }

    #[test]
    fn unsupported_indices() {
        let rw = table(9, Policy::Fast);
        let k = BootstrapConstants::reference();
        assert!(bubble_bound(ix(0, 1), &k, &rw).is_err());
        assert!(weighted_bubble_bound(ix(1, 0), &k, &rw).is_err());
        assert!(weighted_bubble_bound(ix(0, 2), &k, &rw).is_err());
        assert_eq!(bubble_bound(ix(3, 3), &k, &rw), Err(Error::MissingNu(3)));
    }

    #[test]
    fn depends_only_on_order() {
        let rw = table(9, Policy::Certified);
        let k = BootstrapConstants::reference();
        let b: [f64; 3] = [ix(1, 3), ix(2, 2), ix(3, 1)].map(|i| bubble_bound(i, &k, &rw).unwrap().value());
        let t: [f64; 3] = [ix(1, 3), ix(2, 2), ix(3, 1)].map(|i| triangle_bound(i, &k, &rw).unwrap().value());
        assert!(b[0] == b[1] && b[1] == b[2]);
        assert!(t[0] == t[1] && t[1] == t[2]);
    }

    #[test]
    fn unit_constants_reduce_to_table() {
        let unit = BootstrapConstants::raw(1.0, 1.0, 1.0).unwrap();
        let rw = table(9, Policy::Fast);
        let t11 = triangle_bound(ix(1, 1), &unit, &rw).unwrap().value();
        assert_eq!(t11, core::f64::consts::SQRT_2 * rw.eps2(1).unwrap().value());
    }

    #[test]
    fn strictly_increasing_in_each_constant() {
        let rw = table(9, Policy::Certified);
        for base in [[1.01, 1.02, 1.1], [1.002, 1.05, 1.25], [1.09, 1.09, 1.29]] {
            let k = BootstrapConstants::new(base[0], base[1], base[2]).unwrap();
            let s0 = DiagramBoundSet::evaluate(&k, &rw).unwrap();
            for axis in 0..3 {
                let mut bumped = base;
                bumped[axis] *= 1.001;
                let kb = BootstrapConstants::new(bumped[0], bumped[1], bumped[2]).unwrap();
                let s1 = DiagramBoundSet::evaluate(&kb, &rw).unwrap();
                for ((kind, idx, a), (_, _, b)) in s0.entries().zip(s1.entries()) {
                    // K3 only enters the weighted bubbles, K2 and K1 enter everything
                    if axis == 2 && kind != DiagramKind::WeightedBubble {
                        assert_eq!(a.value(), b.value());
                    } else {
                        assert!(b.value() > a.value(), "{kind:?} {idx} axis {axis}");
                    }
                }
            }
        }
    }

    #[test]
    fn monotone_in_dimension() {
        let k = BootstrapConstants::reference();
        for policy in [Policy::Fast, Policy::Certified] {
            let s9 = DiagramBoundSet::evaluate(&k, &table(9, policy)).unwrap();
            let s10 = DiagramBoundSet::evaluate(&k, &table(10, policy)).unwrap();
            for ((_, idx, a), (_, _, b)) in s9.entries().zip(s10.entries()) {
                assert!(b.value() <= a.value(), "{idx}");
            }
        }
    }

    #[test]
    fn finite_above_four_dimensions() {
        let k = BootstrapConstants::reference();
        assert!(!DiagramBoundSet::evaluate(&k, &table(5, Policy::Certified)).unwrap().any_infinite());
        assert!(DiagramBoundSet::evaluate(&k, &table(4, Policy::Certified)).unwrap().any_infinite());
    }
}
