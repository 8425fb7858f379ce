//! Bounds on the lace-expansion coefficients and their geometric-series totals.
//!
//! Each per-coefficient bound is a polynomial in the diagram bounds, stored as
//! a term table (coefficient, factors) so it can be read against the source
//! formula line by line. The totals sum the `N >= 3` tails in closed form,
//! which requires the series ratio `2 T^(1,1)` to be below 1.
//!
//! The `(1 - cos k.x)`-weighted bounds use the sup-norm bound on every weighted
//! bubble, so they hold uniformly in `k`.

use alloc::vec::Vec;

use crate::bootstrap::DivergenceSource;
use crate::diagrams::{DiagramBoundSet, DiagramIndex, DiagramKind};
use crate::numeric::{Interval, Policy, Scalar, UpperBound};
use crate::Error;

/// One factor of a term.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    B(u32, u32),
    T(u32, u32),
    V(u32, u32),
    /// The bare mass parameter, bounded by `K1`.
    M,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: &'static [Factor],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Formula {
    pub id: &'static str,
    pub terms: &'static [Term],
}

const fn t(coeff: f64, factors: &'static [Factor]) -> Term {
    Term { coeff, factors }
}

use Factor::{B, M, T, V};

/// `|pi^(0)(0,m) - pi^(1)(0,m)|`.
pub const PI01_M: Formula = Formula {
    id: "m-01",
    terms: &[
        t(0.5, &[B(2, 2)]),
        t(1.0, &[B(2, 2), B(0, 2)]),
        t(1.5, &[B(2, 2), B(1, 3)]),
        t(3.0, &[B(2, 2), B(2, 2)]),
        t(3.0, &[B(2, 1), T(2, 2)]),
    ],
};

/// `pi^(2)(0,m)`.
pub const PI2_M: Formula = Formula {
    id: "m-2",
    terms: &[
        t(1.0, &[B(2, 2), B(1, 3)]),
        t(2.0, &[B(2, 2), B(2, 2)]),
        t(2.0, &[B(2, 1), T(2, 2)]),
        t(0.5, &[B(2, 2), B(1, 3), T(1, 2)]),
        t(1.0, &[B(2, 1), T(1, 1), T(1, 2)]),
        t(0.5, &[B(2, 2), B(1, 3), T(2, 1)]),
        t(1.0, &[B(2, 1), T(1, 1), T(2, 1)]),
    ],
};

/// Prefactor of `(2 T^(1,1))^(N-1)` in the bound on `pi^(N)(0,m)`, `N >= 3`.
pub const PIN_M_PREFACTOR: Formula = Formula {
    id: "m-N",
    terms: &[
        t(1.0, &[B(1, 1)]),
        t(0.5, &[B(2, 2), B(1, 3)]),
        t(1.0, &[T(1, 1), B(1, 1)]),
    ],
};

/// `sum |pi^(0) - pi^(1)| m^t t`.
pub const PI01_MT: Formula = Formula {
    id: "mt-01",
    terms: &[
        t(0.5, &[B(2, 2)]),
        t(0.5, &[T(2, 2)]),
        t(1.0, &[B(2, 2), B(0, 2)]),
        t(1.0, &[B(2, 2), T(0, 2)]),
        t(3.0, &[B(2, 2), B(1, 3)]),
        t(1.5, &[B(2, 2), T(1, 3)]),
        t(6.0, &[B(2, 2), B(2, 2)]),
        t(6.0, &[B(2, 2), T(2, 2)]),
        t(3.0, &[M, T(1, 2), T(2, 2)]),
        t(3.0, &[B(1, 2), T(2, 2)]),
        t(3.0, &[T(2, 2), T(2, 1)]),
    ],
};

/// `sum pi^(2) m^t t`.
pub const PI2_MT: Formula = Formula {
    id: "mt-2",
    terms: &[
        t(2.0, &[B(2, 2), B(1, 3)]),
        t(1.0, &[B(2, 2), T(1, 3)]),
        t(4.0, &[B(2, 2), B(2, 2)]),
        t(4.0, &[B(2, 2), T(2, 2)]),
        t(2.0, &[M, T(1, 2), T(2, 2)]),
        t(2.0, &[B(1, 2), T(2, 2)]),
        t(2.0, &[T(2, 2), T(2, 1)]),
        t(1.5, &[B(2, 2), B(1, 3), T(1, 2)]),
        t(1.0, &[B(2, 2), T(1, 3), T(1, 2)]),
        t(3.0, &[T(1, 2), T(1, 1), T(2, 1)]),
        t(1.0, &[B(1, 2), T(1, 1), T(2, 1)]),
        t(1.0, &[B(2, 2), B(1, 3), T(2, 1)]),
        t(1.0, &[B(2, 2), T(1, 3), T(2, 1)]),
        t(3.0, &[T(2, 1), T(1, 1), T(2, 1)]),
    ],
};

/// `a` in `a x^(N-1) + (N-2) b x^(N-2) + b x^(N-1)`, `x = 2 T^(1,1)`.
pub const PIN_MT_A: Formula = Formula {
    id: "mt-N-a",
    terms: &[
        t(1.0, &[T(1, 1)]),
        t(1.0, &[B(2, 2), B(1, 3)]),
        t(0.5, &[B(2, 2), T(3, 1)]),
        t(2.0, &[T(1, 1), T(1, 1)]),
    ],
};

/// `b`, shared by the t-weighted and cos-weighted tails.
pub const PIN_MT_B: Formula = Formula {
    id: "mt-N-b",
    terms: &[t(1.0, &[T(1, 1)]), t(0.5, &[B(2, 2), T(1, 3)]), t(1.0, &[T(1, 1), T(1, 1)])],
};

/// `sum |pi^(0) - pi^(1)| m^t (1 - cos k.x)`, divided by `1 - D(k)`.
pub const PI01_MCOS: Formula = Formula {
    id: "mcos-01",
    terms: &[
        t(0.5, &[V(2, 2)]),
        t(2.0, &[V(2, 2), B(0, 2)]),
        t(2.0, &[B(2, 2), V(1, 2)]),
        t(1.5, &[B(2, 2), V(3, 1)]),
        t(12.0, &[B(2, 2), V(2, 2)]),
        t(6.0, &[V(1, 2), T(2, 2)]),
        t(6.0, &[T(2, 2), V(2, 1)]),
    ],
};

/// `pi^(2)(0,m) - pi^(2)(k,m)`, divided by `1 - D(k)`.
pub const PI2_MCOS: Formula = Formula {
    id: "mcos-2",
    terms: &[
        t(1.0, &[B(2, 2), V(3, 1)]),
        t(8.0, &[B(2, 2), V(2, 2)]),
        t(4.0, &[V(1, 2), T(2, 2)]),
        t(4.0, &[T(2, 2), V(2, 1)]),
        t(1.0, &[B(2, 2), V(3, 1), T(2, 1)]),
        t(1.0, &[B(2, 2), T(3, 1), V(2, 1)]),
        t(3.0, &[V(1, 2), T(1, 1), T(2, 1)]),
        t(3.0, &[T(1, 2), V(1, 1), T(2, 1)]),
        t(3.0, &[T(1, 2), T(1, 1), V(2, 1)]),
        t(1.0, &[B(2, 2), V(3, 1), T(1, 2)]),
        t(1.0, &[B(2, 2), T(3, 1), V(1, 2)]),
        t(3.0, &[V(1, 2), T(1, 1), T(1, 2)]),
        t(3.0, &[T(1, 2), V(1, 1), T(1, 2)]),
        t(3.0, &[T(1, 2), T(1, 1), V(1, 2)]),
    ],
};

/// `c` in the `N >= 3` cos-weighted bound
/// `(N+1) (c x^(N-1) + 2(N-2) b V^(1,1) x^(N-2) + 2 b V^(1,1) x^(N-2))`.
pub const PIN_MCOS_C: Formula = Formula {
    id: "mcos-N-c",
    terms: &[t(1.0, &[V(1, 1)]), t(0.5, &[B(2, 2), V(1, 3)]), t(2.0, &[T(1, 1), V(1, 1)])],
};

/// Every term table, in source order.
pub const FORMULAS: [Formula; 10] = [
    PI01_M,
    PI2_M,
    PIN_M_PREFACTOR,
    PI01_MT,
    PI2_MT,
    PIN_MT_A,
    PIN_MT_B,
    PI01_MCOS,
    PI2_MCOS,
    PIN_MCOS_C,
];

fn factor<S: Scalar>(f: Factor, set: &DiagramBoundSet) -> Result<S, Error> {
    let (kind, l, r) = match f {
        Factor::M => return Ok(S::exact(set.constants.k1)),
        Factor::B(l, r) => (DiagramKind::Bubble, l, r),
        Factor::T(l, r) => (DiagramKind::Triangle, l, r),
        Factor::V(l, r) => (DiagramKind::WeightedBubble, l, r),
    };
    set.value(kind, DiagramIndex::new(l, r))
        .map(S::exact)
        .ok_or(Error::UnsupportedIndex { lambda: l, rho: r })
}

fn term_value<S: Scalar>(term: &Term, set: &DiagramBoundSet) -> Result<S, Error> {
    let mut acc = S::exact(term.coeff);
    for &f in term.factors {
        acc = acc * factor::<S>(f, set)?;
    }
    Ok(acc)
}

fn eval<S: Scalar>(formula: &Formula, set: &DiagramBoundSet) -> Result<S, Error> {
    let mut sum = S::exact(0.0);
    for term in formula.terms {
        sum = sum + term_value::<S>(term, set)?;
    }
    Ok(sum)
}

fn ratio<S: Scalar>(set: &DiagramBoundSet) -> Result<S, Error> {
    Ok(S::exact(2.0) * factor::<S>(T(1, 1), set)?)
}

fn check_n(n: u32) -> Result<(), Error> {
    if n < 3 {
        Err(Error::SeriesIndex(n))
    } else {
        Ok(())
    }
}

fn pi_n_m_s<S: Scalar>(n: u32, set: &DiagramBoundSet) -> Result<S, Error> {
    check_n(n)?;
    Ok(eval::<S>(&PIN_M_PREFACTOR, set)? * ratio::<S>(set)?.powu(n - 1))
}

fn pi_n_mt_s<S: Scalar>(n: u32, set: &DiagramBoundSet) -> Result<S, Error> {
    check_n(n)?;
    let x = ratio::<S>(set)?;
    let a = eval::<S>(&PIN_MT_A, set)?;
    let b = eval::<S>(&PIN_MT_B, set)?;
    Ok(a * x.powu(n - 1) + S::exact((n - 2) as f64) * b * x.powu(n - 2) + b * x.powu(n - 1))
}

fn pi_n_mcos_s<S: Scalar>(n: u32, set: &DiagramBoundSet) -> Result<S, Error> {
    check_n(n)?;
    let x = ratio::<S>(set)?;
    let b = eval::<S>(&PIN_MT_B, set)?;
    let c = eval::<S>(&PIN_MCOS_C, set)?;
    let v11 = factor::<S>(V(1, 1), set)?;
    let two = S::exact(2.0);
    let inner = c * x.powu(n - 1)
        + two * S::exact((n - 2) as f64) * b * v11 * x.powu(n - 2)
        + two * b * x.powu(n - 2) * v11;
    Ok(S::exact((n + 1) as f64) * inner)
}

fn with_policy<F, I>(set: &DiagramBoundSet, fast: F, certified: I) -> Result<UpperBound, Error>
where
    F: FnOnce(&DiagramBoundSet) -> Result<f64, Error>,
    I: FnOnce(&DiagramBoundSet) -> Result<Interval, Error>,
{
    match set.policy {
        Policy::Fast => fast(set).map(|v| v.to_bound()),
        Policy::Certified => certified(set).map(|v| v.to_bound()),
    }
}

macro_rules! polynomial_op {
    ($(#[$doc:meta])* $name:ident, $formula:expr) => {
        $(#[$doc])*
        pub fn $name(set: &DiagramBoundSet) -> Result<UpperBound, Error> {
            with_policy(set, |s| eval::<f64>(&$formula, s), |s| eval::<Interval>(&$formula, s))
        }
    };
}

polynomial_op!(
    /// Bound on `|pi^(0)(0,m) - pi^(1)(0,m)|`.
    pi01_m, PI01_M
);
polynomial_op!(
    /// Bound on `pi^(2)(0,m)`.
    pi2_m, PI2_M
);
polynomial_op!(
    /// Bound on `sum |pi^(0) - pi^(1)| m^t t`.
    pi01_mt, PI01_MT
);
polynomial_op!(
    /// Bound on `sum pi^(2) m^t t`.
    pi2_mt, PI2_MT
);
polynomial_op!(
    /// Bound on the `(1 - cos)`-weighted `|pi^(0) - pi^(1)|` sum over `1 - D(k)`.
    pi01_mcos, PI01_MCOS
);
polynomial_op!(
    /// Bound on `(pi^(2)(0,m) - pi^(2)(k,m)) / (1 - D(k))`.
    pi2_mcos, PI2_MCOS
);

/// Bound on `pi^(N)(0,m)` for `N >= 3`.
pub fn pi_n_m(n: u32, set: &DiagramBoundSet) -> Result<UpperBound, Error> {
    with_policy(set, |s| pi_n_m_s::<f64>(n, s), |s| pi_n_m_s::<Interval>(n, s))
}

/// Bound on `sum pi^(N) m^t t` for `N >= 3`.
pub fn pi_n_mt(n: u32, set: &DiagramBoundSet) -> Result<UpperBound, Error> {
    with_policy(set, |s| pi_n_mt_s::<f64>(n, s), |s| pi_n_mt_s::<Interval>(n, s))
}

/// Bound on `(pi^(N)(0,m) - pi^(N)(k,m)) / (1 - D(k))` for `N >= 3`.
pub fn pi_n_mcos(n: u32, set: &DiagramBoundSet) -> Result<UpperBound, Error> {
    with_policy(set, |s| pi_n_mcos_s::<f64>(n, s), |s| pi_n_mcos_s::<Interval>(n, s))
}

/// Totals for the four expansion sums.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaceBoundReport {
    pub pi_even: UpperBound,
    pub pi_odd: UpperBound,
    pub pi_t: UpperBound,
    pub pi_cos: UpperBound,
    /// `2 T^(1,1)`, the ratio of the `N >= 3` tails.
    pub small_t: UpperBound,
}

impl LaceBoundReport {
    /// A report built from externally supplied totals.
    pub fn from_totals(pi_even: f64, pi_odd: f64, pi_t: f64, pi_cos: f64, small_t: f64, policy: Policy) -> Self {
        let u = |v| UpperBound::new(v, policy);
        LaceBoundReport { pi_even: u(pi_even), pi_odd: u(pi_odd), pi_t: u(pi_t), pi_cos: u(pi_cos), small_t: u(small_t) }
    }

    pub fn policy(&self) -> Policy {
        self.pi_even.policy()
    }
}

/// One evaluated term, for audit output.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TermValue {
    pub formula: &'static str,
    pub index: usize,
    pub value: f64,
}

/// Closed-form tails `sum_{N >= 3}` for each weighted family.
pub(crate) struct Tails<S> {
    pub even: S,
    pub odd: S,
    pub t: S,
    pub cos: S,
}

fn tails<S: Scalar>(set: &DiagramBoundSet) -> Result<Tails<S>, Error> {
    let one = S::exact(1.0);
    let two = S::exact(2.0);
    let t11 = factor::<S>(T(1, 1), set)?;
    let x = two * t11;
    let pref = eval::<S>(&PIN_M_PREFACTOR, set)?;
    let a = eval::<S>(&PIN_MT_A, set)?;
    let b = eval::<S>(&PIN_MT_B, set)?;
    let c = eval::<S>(&PIN_MCOS_C, set)?;
    let v11 = factor::<S>(V(1, 1), set)?;

    let x2 = x * x;
    let one_m_x = one - x;
    let geom2 = one - x2;
    let even = pref * x2 * x / geom2;
    let odd = pref * x2 / geom2;
    let t = a * x2 / one_m_x + b * x / (one_m_x * one_m_x) + b * x2 / one_m_x;

    let two_m_3t = two - S::exact(3.0) * t11;
    let sq = one_m_x * one_m_x;
    let cos = c * S::exact(8.0) * t11 * t11 * two_m_3t / sq
        + two * b * v11 * S::exact(8.0) * t11 * (one - t11) / (sq * one_m_x)
        + two * b * v11 * S::exact(4.0) * t11 * two_m_3t / sq;
    Ok(Tails { even, odd, t, cos })
}

/// Closed-form `N >= 3` tails as `(even, odd, t, cos)`.
pub fn series_tails(set: &DiagramBoundSet) -> Result<[UpperBound; 4], Error> {
    fn pack<S: Scalar>(t: Tails<S>) -> [UpperBound; 4] {
        [t.even.to_bound(), t.odd.to_bound(), t.t.to_bound(), t.cos.to_bound()]
    }
    check_finite(set)?;
    match set.policy {
        Policy::Fast => tails::<f64>(set).map(pack),
        Policy::Certified => tails::<Interval>(set).map(pack),
    }
}

fn check_finite(set: &DiagramBoundSet) -> Result<(), Error> {
    if let Some((kind, idx, _)) = set.entries().find(|(_, _, v)| !v.is_finite()) {
        return Err(Error::Divergent(DivergenceSource::InfiniteDiagram { kind, index: idx }));
    }
    let x = match set.policy {
        Policy::Fast => ratio::<f64>(set)?,
        Policy::Certified => ratio::<Interval>(set)?.upper(),
    };
    if x >= 1.0 {
        return Err(Error::Divergent(DivergenceSource::SeriesRatio { small_t: x }));
    }
    Ok(())
}

fn totals_s<S: Scalar>(
    set: &DiagramBoundSet,
    mut audit: Option<&mut Vec<TermValue>>,
) -> Result<LaceBoundReport, Error> {
    if let Some(log) = audit.as_deref_mut() {
        for formula in FORMULAS.iter() {
            for (index, term) in formula.terms.iter().enumerate() {
                let value = term_value::<S>(term, set)?.upper();
                log.push(TermValue { formula: formula.id, index, value });
            }
        }
    }
    let tails = tails::<S>(set)?;
    if let Some(log) = audit {
        for (formula, v) in
            [("tail-even", tails.even), ("tail-odd", tails.odd), ("tail-t", tails.t), ("tail-cos", tails.cos)]
        {
            log.push(TermValue { formula, index: 0, value: v.upper() });
        }
    }
    let pi_even = eval::<S>(&PI2_M, set)? + tails.even;
    let pi_odd = eval::<S>(&PI01_M, set)? + tails.odd;
    let pi_t = eval::<S>(&PI01_MT, set)? + eval::<S>(&PI2_MT, set)? + tails.t;
    let pi_cos = eval::<S>(&PI01_MCOS, set)? + eval::<S>(&PI2_MCOS, set)? + tails.cos;
    Ok(LaceBoundReport {
        pi_even: pi_even.to_bound(),
        pi_odd: pi_odd.to_bound(),
        pi_t: pi_t.to_bound(),
        pi_cos: pi_cos.to_bound(),
        small_t: ratio::<S>(set)?.to_bound(),
    })
}

/// The four totals. Fails with [`Error::Divergent`] when a diagram bound is
/// infinite or `2 T^(1,1) >= 1`.
pub fn totals(set: &DiagramBoundSet) -> Result<LaceBoundReport, Error> {
    check_finite(set)?;
    match set.policy {
        Policy::Fast => totals_s::<f64>(set, None),
        Policy::Certified => totals_s::<Interval>(set, None),
    }
}

/// [`totals`] plus every polynomial term and series tail that went into it.
pub fn totals_with_breakdown(set: &DiagramBoundSet) -> Result<(LaceBoundReport, Vec<TermValue>), Error> {
    check_finite(set)?;
    let mut log = Vec::new();
    let report = match set.policy {
        Policy::Fast => totals_s::<f64>(set, Some(&mut log))?,
        Policy::Certified => totals_s::<Interval>(set, Some(&mut log))?,
    };
    Ok((report, log))
}
