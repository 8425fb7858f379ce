//! Rayon drivers for the library's sequential kernels. Work is cut into
//! fixed index ranges and merged in index order, so results do not depend
//! on the thread count.

use bcclace::bootstrap::{evaluate_point, DimensionSummary, PointResult, SearchReport, SearchSpec};
use bcclace::checks::{finish, run_range, CheckResult, IndexedCheck, MinMargin};
use bcclace::sim::{simulate_range, SimConfig, SimCounts, SimStats};
use bcclace::{build_table, Dimension, Error, Policy, Verdict, DEFAULT_TRUNCATION};
use rayon::prelude::*;

const CHECK_CHUNK: u64 = 1 << 14;
const SIM_CHUNK: u64 = 1 << 10;
const SEARCH_CHUNK: u64 = 1 << 12;

fn chunks(len: u64, size: u64) -> Vec<std::ops::Range<u64>> {
    (0..len.div_ceil(size)).map(|i| i * size..((i + 1) * size).min(len)).collect()
}

pub fn run_check<C: IndexedCheck + ?Sized>(check: &C) -> CheckResult {
    let acc = chunks(check.len(), CHECK_CHUNK)
        .into_par_iter()
        .map(|r| run_range(check, r))
        .reduce(|| MinMargin::EMPTY, MinMargin::merge);
    finish(check, acc)
}

pub fn simulate(cfg: &SimConfig) -> Result<SimStats, Error> {
    let parts: Vec<SimCounts> = chunks(cfg.trials, SIM_CHUNK)
        .into_par_iter()
        .map(|r| simulate_range(cfg, r))
        .collect::<Result<_, _>>()?;
    let empty = SimCounts::empty(cfg.d.get(), cfg.t_max);
    let counts = parts.iter().fold(empty, |acc, c| acc.merge(c));
    Ok(SimStats::new(*cfg, counts))
}

/// Grid search with the same results as the sequential library search:
/// a dimension stops at its first passing point unless `spec.exhaustive`.
pub fn search(
    spec: &SearchSpec,
    policy: Policy,
    mut on_point: impl FnMut(&PointResult),
) -> Result<SearchReport, Error> {
    spec.validate()?;
    let mut dims = Vec::new();
    for d in spec.d_min..=spec.d_max {
        let table = build_table(Dimension::new(d)?, 2, DEFAULT_TRUNCATION, policy)?;
        let mut summary = DimensionSummary::new(d);
        'chunks: for range in chunks(spec.points_per_dimension(), SEARCH_CHUNK) {
            let points: Vec<PointResult> = range
                .into_par_iter()
                .map(|i| evaluate_point(&table, &spec.constants_at(i)).map(|r| PointResult::from_report(i, &r)))
                .collect::<Result<_, _>>()?;
            for p in &points {
                on_point(p);
                summary.absorb(p);
                if p.verdict == Verdict::Pass && !spec.exhaustive {
                    break 'chunks;
                }
            }
        }
        dims.push(summary);
    }
    Ok(SearchReport::from_dimensions(policy, dims))
}
