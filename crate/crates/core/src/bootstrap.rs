//! Improved bounds on the bootstrap functions and the verdict `g_i < K_i`.
//!
//! ```text
//! g1 <= 1 / (1 - Pi_odd)
//! g2 <= (1 + Pi_even + Pi_odd)/(1 - Pi_odd) + 2 K2 Pi_even/(1 - Pi_odd)
//!       + 2 K1 K2/(1 - Pi_odd) * max(pi * Pi_t, Pi_cos)
//! g3 <= max(1, g2/(1 - Pi_even - Pi_odd))^3 K1^2 (1 + 2(Pi_even + Pi_odd) + 2 Pi_cos)^2
//! ```

use alloc::vec::Vec;
use core::fmt;

use crate::diagrams::{BootstrapConstants, DiagramBoundSet, DiagramIndex, DiagramKind};
use crate::lace::{self, LaceBoundReport};
use crate::numeric::{sci_ceil, Interval, Policy, Scalar, UpperBound};
use crate::rw::{build_table, Dimension, RwTable};
use crate::{Error, DEFAULT_TRUNCATION};

/// Printed totals `(Pi_even, Pi_odd, Pi_t, Pi_cos)` at d = 9 used by replay mode.
pub const REPLAY_TOTALS: [f64; 4] = [1.0e-5, 1.15844e-4, 4.0e-4, 2.1e-2];
/// The only dimension replay mode is defined for.
pub const REPLAY_DIMENSION: u32 = 9;
/// Decimal places the replayed g values are rounded up to.
pub const REPLAY_DECIMALS: usize = 4;

/// First infinite or out-of-range quantity met by the chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DivergenceSource {
    InfiniteDiagram { kind: DiagramKind, index: DiagramIndex },
    /// `2 T^(1,1) >= 1`, so the expansion series are not known to converge.
    SeriesRatio { small_t: f64 },
    /// `Pi_odd >= 1`.
    PiOdd { pi_odd: f64 },
    /// `Pi_even + Pi_odd >= 1`.
    PiSum { sum: f64 },
}

impl fmt::Display for DivergenceSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DivergenceSource::InfiniteDiagram { kind, index } => {
                write!(f, "diagram bound {}^({}) is infinite", kind.letter(), index)
            }
            DivergenceSource::SeriesRatio { small_t } => write!(f, "2 T^(1,1) = {small_t} is not below 1"),
            DivergenceSource::PiOdd { pi_odd } => write!(f, "Pi_odd = {pi_odd} is not below 1"),
            DivergenceSource::PiSum { sum } => write!(f, "Pi_even + Pi_odd = {sum} is not below 1"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Everything computed from the random-walk table up.
    Chained,
    /// Printed Pi totals substituted, g values rounded up to printed precision.
    PaperReplay,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Chained => "chained",
            Mode::PaperReplay => "paper-replay",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Pass,
    Fail,
    Divergent,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Divergent => "DIVERGENT",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Intermediates behind a verdict.
#[derive(Clone, Debug, PartialEq)]
pub struct Provenance {
    /// `(nu, eps1, eps2)` rows of the random-walk table.
    pub rw: Vec<(u32, UpperBound, UpperBound)>,
    pub truncation: u32,
    pub diagrams: Option<DiagramBoundSet>,
    pub lace: Option<LaceBoundReport>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GBoundReport {
    pub d: Dimension,
    pub constants: BootstrapConstants,
    pub mode: Mode,
    pub policy: Policy,
    pub g1: UpperBound,
    pub g2: UpperBound,
    pub g3: UpperBound,
    pub verdict: Verdict,
    pub divergence: Option<DivergenceSource>,
    pub provenance: Provenance,
}

impl GBoundReport {
    pub fn g(&self) -> [UpperBound; 3] {
        [self.g1, self.g2, self.g3]
    }

    /// `max(g_i / K_i)`; below 1 exactly when the report passes.
    pub fn max_ratio(&self) -> f64 {
        let k = self.constants.as_array();
        self.g().iter().zip(k).map(|(g, k)| g.value() / k).fold(0.0, f64::max)
    }
}

struct Pis<S> {
    even: S,
    odd: S,
    t: S,
    cos: S,
}

impl<S: Scalar> Pis<S> {
    fn new(r: &LaceBoundReport) -> Self {
        Pis {
            even: S::exact(r.pi_even.value()),
            odd: S::exact(r.pi_odd.value()),
            t: S::exact(r.pi_t.value()),
            cos: S::exact(r.pi_cos.value()),
        }
    }
}

fn positive_gap<S: Scalar>(x: S) -> Option<S> {
    let gap = S::exact(1.0) - x;
    (gap.lower() > 0.0).then_some(gap)
}

fn g1_s<S: Scalar>(p: &Pis<S>) -> Option<S> {
    Some(S::exact(1.0) / positive_gap(p.odd)?)
}

fn g2_s<S: Scalar>(p: &Pis<S>, k: &BootstrapConstants) -> Option<S> {
    let one = S::exact(1.0);
    let two = S::exact(2.0);
    let gap = positive_gap(p.odd)?;
    let (k1, k2) = (S::exact(k.k1), S::exact(k.k2));
    let weighted = (S::pi() * p.t).max(p.cos);
    Some((one + p.even + p.odd) / gap + two * k2 * p.even / gap + two * k1 * k2 / gap * weighted)
}

fn g3_s<S: Scalar>(p: &Pis<S>, g2: S, k: &BootstrapConstants) -> Option<S> {
    let one = S::exact(1.0);
    let two = S::exact(2.0);
    let gap = positive_gap(p.even + p.odd)?;
    let lead = one.max(g2 / gap);
    let tail = one + two * (p.even + p.odd) + two * p.cos;
    Some(lead.powu(3) * S::exact(k.k1).powu(2) * tail * tail)
}

fn finish<S: Scalar>(x: Option<S>, policy: Policy) -> UpperBound {
    x.map(|v| v.to_bound()).unwrap_or_else(|| UpperBound::infinite(policy))
}

/// `1/(1 - Pi_odd)`, or `+inf` when `Pi_odd >= 1`.
pub fn g1_bound(report: &LaceBoundReport) -> UpperBound {
    match report.policy() {
        Policy::Fast => finish(g1_s(&Pis::<f64>::new(report)), Policy::Fast),
        Policy::Certified => finish(g1_s(&Pis::<Interval>::new(report)), Policy::Certified),
    }
}

pub fn g2_bound(report: &LaceBoundReport, k: &BootstrapConstants) -> UpperBound {
    match report.policy() {
        Policy::Fast => finish(g2_s(&Pis::<f64>::new(report), k), Policy::Fast),
        Policy::Certified => finish(g2_s(&Pis::<Interval>::new(report), k), Policy::Certified),
    }
}

/// Bound on `g3` given an upper bound on `g2`.
pub fn g3_bound(report: &LaceBoundReport, g2: UpperBound, k: &BootstrapConstants) -> UpperBound {
    if !g2.is_finite() {
        return UpperBound::infinite(report.policy());
    }
    match report.policy() {
        Policy::Fast => finish(g3_s(&Pis::<f64>::new(report), g2.value(), k), Policy::Fast),
        Policy::Certified => finish(
            g3_s(&Pis::<Interval>::new(report), Interval::point(g2.value()), k),
            Policy::Certified,
        ),
    }
}

fn verdict_for(g: [UpperBound; 3], k: &BootstrapConstants) -> Verdict {
    if g.iter().any(|g| !g.is_finite()) {
        Verdict::Divergent
    } else if g.iter().zip(k.as_array()).all(|(g, k)| g.value() < k) {
        Verdict::Pass
    } else {
        Verdict::Fail
    }
}

fn lace_divergence(r: &LaceBoundReport) -> Option<DivergenceSource> {
    let odd = r.pi_odd.value();
    let sum = r.pi_even.value() + r.pi_odd.value();
    if odd >= 1.0 {
        Some(DivergenceSource::PiOdd { pi_odd: odd })
    } else if sum >= 1.0 {
        Some(DivergenceSource::PiSum { sum })
    } else {
        None
    }
}

fn rw_rows(table: &RwTable) -> Vec<(u32, UpperBound, UpperBound)> {
    (1..=table.nu_max())
        .map(|nu| (nu, table.eps1(nu).expect("nu in range"), table.eps2(nu).expect("nu in range")))
        .collect()
}

/// Rounds up to `decimals` places after the point (values of order one).
fn ceil_decimals(x: f64, decimals: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let sig = decimals + 1 + libm::floor(libm::log10(x.abs())).max(0.0) as usize;
    sci_ceil(x, sig).parse().expect("rendered float parses")
}

/// The chain for one constant triple on a prebuilt table.
pub fn evaluate_point(table: &RwTable, k: &BootstrapConstants) -> Result<GBoundReport, Error> {
    let policy = table.policy();
    let diagrams = DiagramBoundSet::evaluate(k, table)?;
    let mut report = GBoundReport {
        d: table.dimension(),
        constants: *k,
        mode: Mode::Chained,
        policy,
        g1: UpperBound::infinite(policy),
        g2: UpperBound::infinite(policy),
        g3: UpperBound::infinite(policy),
        verdict: Verdict::Divergent,
        divergence: None,
        provenance: Provenance { rw: rw_rows(table), truncation: table.truncation(), diagrams: None, lace: None },
    };
    let lace_report = match lace::totals(&diagrams) {
        Ok(r) => r,
        Err(Error::Divergent(src)) => {
            report.divergence = Some(src);
            report.provenance.diagrams = Some(diagrams);
            return Ok(report);
        }
        Err(e) => return Err(e),
    };
    report.g1 = g1_bound(&lace_report);
    report.g2 = g2_bound(&lace_report, k);
    report.g3 = g3_bound(&lace_report, report.g2, k);
    report.verdict = verdict_for(report.g(), k);
    if report.verdict == Verdict::Divergent {
        report.divergence = lace_divergence(&lace_report);
    }
    report.provenance.diagrams = Some(diagrams);
    report.provenance.lace = Some(lace_report);
    Ok(report)
}

/// Replay: printed totals in, g values rounded up to printed precision.
/// The rounded `g2` feeds `g3`.
pub fn replay_point(table: &RwTable, k: &BootstrapConstants) -> Result<GBoundReport, Error> {
    let d = table.dimension();
    if d.get() != REPLAY_DIMENSION {
        return Err(Error::ReplayDimension(d.get()));
    }
    let mut report = evaluate_point(table, k)?;
    let policy = table.policy();
    let small_t = report.provenance.lace.map(|l| l.small_t.value()).unwrap_or(f64::INFINITY);
    let [e, o, t, c] = REPLAY_TOTALS;
    let lace_report = LaceBoundReport::from_totals(e, o, t, c, small_t, policy);
    let round = |u: UpperBound| UpperBound::new(ceil_decimals(u.value(), REPLAY_DECIMALS), policy);
    report.mode = Mode::PaperReplay;
    report.g1 = round(g1_bound(&lace_report));
    report.g2 = round(g2_bound(&lace_report, k));
    report.g3 = round(g3_bound(&lace_report, report.g2, k));
    report.verdict = verdict_for(report.g(), k);
    report.divergence = None;
    report.provenance.lace = Some(lace_report);
    Ok(report)
}

/// Runs the chain at `d` with `nu_max = 2` and the default truncation.
pub fn verify(d: Dimension, k: &BootstrapConstants, mode: Mode, policy: Policy) -> Result<GBoundReport, Error> {
    let table = build_table(d, 2, DEFAULT_TRUNCATION, policy)?;
    verify_with_table(&table, k, mode)
}

pub fn verify_with_table(table: &RwTable, k: &BootstrapConstants, mode: Mode) -> Result<GBoundReport, Error> {
    match mode {
        Mode::Chained => evaluate_point(table, k),
        Mode::PaperReplay => replay_point(table, k),
    }
}

/// Division points `lo + (hi - lo) i / n`, `i = 1..=n`, of the interval `(lo, hi]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: u32,
}

impl AxisSpec {
    pub fn new(lo: f64, hi: f64, n: u32) -> Result<Self, Error> {
        if n == 0 {
            return Err(Error::InvalidSearch("division count must be at least 1"));
        }
        if !(lo.is_finite() && hi.is_finite() && lo >= 1.0 && hi > lo && hi <= 2.0) {
            return Err(Error::InvalidSearch("axis interval must satisfy 1 <= lo < hi <= 2"));
        }
        Ok(AxisSpec { lo, hi, n })
    }

    /// The `i`-th point, `1 <= i <= n`.
    pub fn point(&self, i: u32) -> f64 {
        if i == self.n {
            self.hi
        } else {
            self.lo + (self.hi - self.lo) * (i as f64) / (self.n as f64)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SearchSpec {
    pub d_min: u32,
    pub d_max: u32,
    pub k1: AxisSpec,
    pub k2: AxisSpec,
    pub k3: AxisSpec,
    /// Keep evaluating a dimension after its first passing triple.
    pub exhaustive: bool,
}

impl SearchSpec {
    pub fn new(d_min: u32, d_max: u32, k1: AxisSpec, k2: AxisSpec, k3: AxisSpec) -> Result<Self, Error> {
        let spec = SearchSpec { d_min, d_max, k1, k2, k3, exhaustive: false };
        spec.validate()?;
        Ok(spec)
    }

    /// The reference search grid: `(1.0,1.1] x (1.0,1.1] x (1.0,1.3]`, 100 divisions each.
    pub fn reference_grid(d_min: u32, d_max: u32) -> Result<Self, Error> {
        SearchSpec::new(
            d_min,
            d_max,
            AxisSpec::new(1.0, 1.1, 100)?,
            AxisSpec::new(1.0, 1.1, 100)?,
            AxisSpec::new(1.0, 1.3, 100)?,
        )
    }

    pub fn validate(&self) -> Result<(), Error> {
        if self.d_min == 0 || self.d_min > self.d_max {
            return Err(Error::InvalidSearch("dimension range must satisfy 1 <= d_min <= d_max"));
        }
        for axis in [self.k1, self.k2, self.k3] {
            AxisSpec::new(axis.lo, axis.hi, axis.n)?;
        }
        Ok(())
    }

    /// Points per dimension.
    pub fn points_per_dimension(&self) -> u64 {
        self.k1.n as u64 * self.k2.n as u64 * self.k3.n as u64
    }

    /// Triple at lexicographic position `index` in `(K1, K2, K3)`.
    pub fn constants_at(&self, index: u64) -> BootstrapConstants {
        let (n2, n3) = (self.k2.n as u64, self.k3.n as u64);
        let i1 = index / (n2 * n3);
        let i2 = (index / n3) % n2;
        let i3 = index % n3;
        BootstrapConstants {
            k1: self.k1.point(i1 as u32 + 1),
            k2: self.k2.point(i2 as u32 + 1),
            k3: self.k3.point(i3 as u32 + 1),
        }
    }
}

/// One evaluated grid point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointResult {
    pub d: u32,
    pub index: u64,
    pub constants: BootstrapConstants,
    pub g: [f64; 3],
    pub verdict: Verdict,
    pub max_ratio: f64,
}

impl PointResult {
    pub fn from_report(index: u64, r: &GBoundReport) -> Self {
        PointResult {
            d: r.d.get(),
            index,
            constants: r.constants,
            g: r.g().map(|g| g.value()),
            verdict: r.verdict,
            max_ratio: r.max_ratio(),
        }
    }
}

/// Per-dimension outcome. Points must be absorbed in index order.
#[derive(Clone, Debug, PartialEq)]
pub struct DimensionSummary {
    pub d: u32,
    pub evaluated: u64,
    pub passing: u64,
    pub first_pass: Option<PointResult>,
    /// Point with the smallest `max(g_i/K_i)`; the earliest index wins ties.
    pub best: Option<PointResult>,
}

impl DimensionSummary {
    pub fn new(d: u32) -> Self {
        DimensionSummary { d, evaluated: 0, passing: 0, first_pass: None, best: None }
    }

    pub fn absorb(&mut self, p: &PointResult) {
        self.evaluated += 1;
        if p.verdict == Verdict::Pass {
            self.passing += 1;
            if self.first_pass.is_none() {
                self.first_pass = Some(*p);
            }
        }
        let better = match &self.best {
            None => true,
            Some(b) => p.max_ratio < b.max_ratio || (p.max_ratio == b.max_ratio && p.index < b.index),
        };
        if better {
            self.best = Some(*p);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchReport {
    pub policy: Policy,
    pub dimensions: Vec<DimensionSummary>,
    pub minimal_passing_d: Option<u32>,
}

impl SearchReport {
    pub fn from_dimensions(policy: Policy, dimensions: Vec<DimensionSummary>) -> Self {
        let minimal_passing_d = dimensions.iter().find(|s| s.passing > 0).map(|s| s.d);
        SearchReport { policy, dimensions, minimal_passing_d }
    }
}

/// Sequential grid search. `on_point` sees every evaluated point in order.
pub fn search_with(
    spec: &SearchSpec,
    policy: Policy,
    mut on_point: impl FnMut(&PointResult),
) -> Result<SearchReport, Error> {
    spec.validate()?;
    let mut dims = Vec::new();
    for d in spec.d_min..=spec.d_max {
        let table = build_table(Dimension::new(d)?, 2, DEFAULT_TRUNCATION, policy)?;
        let mut summary = DimensionSummary::new(d);
        for index in 0..spec.points_per_dimension() {
            let report = evaluate_point(&table, &spec.constants_at(index))?;
            let p = PointResult::from_report(index, &report);
            on_point(&p);
            summary.absorb(&p);
            if p.verdict == Verdict::Pass && !spec.exhaustive {
                break;
            }
        }
        dims.push(summary);
    }
    Ok(SearchReport::from_dimensions(policy, dims))
}

pub fn search(spec: &SearchSpec, policy: Policy) -> Result<SearchReport, Error> {
    search_with(spec, policy, |_| {})
}
