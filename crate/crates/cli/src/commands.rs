use std::fmt::Write as _;
use std::time::Instant;

use bcclace::bootstrap::{SearchSpec, REPLAY_DIMENSION};
use bcclace::checks::{CosineTelescope, D2k, D2kSampling, DoubleDerivative, GreenLower, IndexedCheck, LemmaId, MuBound, D2K_MAX_DIM};
use bcclace::lace::totals_with_breakdown;
use bcclace::sim::{exact_dp_1d, exact_two_step, run_trial, rw_two_point, SimConfig, SimStats, Trial, DP_MAX_T};
use bcclace::{build_table, verify, BootstrapConstants, Dimension, Mode, Policy, Verdict};
use serde_json::{json, Value};

use crate::args::{PointFilter, RwTableArgs, SearchArgs, SimulateArgs, ValidateArgs, VerifyArgs};
use crate::error::CliError;
use crate::{parallel, report, spec_file};

/// A file produced by a command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFile {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl OutputFile {
    fn json(name: &str, v: &Value) -> Self {
        let mut bytes = serde_json::to_vec_pretty(v).expect("JSON values serialize");
        bytes.push(b'\n');
        OutputFile { name: name.to_owned(), bytes }
    }

    fn jsonl(name: &str, rows: &[Value]) -> Self {
        let mut bytes = Vec::new();
        for r in rows {
            serde_json::to_writer(&mut bytes, r).expect("JSON values serialize");
            bytes.push(b'\n');
        }
        OutputFile { name: name.to_owned(), bytes }
    }

    fn text(name: &str, s: String) -> Self {
        OutputFile { name: name.to_owned(), bytes: s.into_bytes() }
    }
}

/// Everything a command produced; `main` decides where it goes.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    /// The canonical JSON report (printed with `--json`).
    pub report: Value,
    /// Digested outputs, written to `--out` and listed in the manifest.
    pub files: Vec<OutputFile>,
    /// Files appended to rather than overwritten; not digested.
    pub appends: Vec<OutputFile>,
    /// Human-readable text for stderr.
    pub summary: String,
}

impl Outcome {
    fn new(exit_code: i32, report: Value, files: Vec<OutputFile>, summary: String) -> Self {
        Outcome { exit_code, report, files, appends: Vec::new(), summary }
    }
}

fn dimension(d: u32) -> Result<Dimension, CliError> {
    Dimension::new(d).map_err(CliError::from)
}

pub fn rw_table(args: &RwTableArgs, policy: Policy) -> Result<Outcome, CliError> {
    if args.d_min == 0 || args.d_min > args.d_max {
        return Err(CliError::usage("need 1 <= --d-min <= --d-max"));
    }
    let mut csv = String::from("d,nu,eps1,eps2,N,policy\n");
    let mut tables = Vec::new();
    let mut summary = String::new();
    let _ = write!(summary, "{:>3}", "d");
    for which in ["eps1", "eps2"] {
        for nu in 1..=args.nu_max {
            let _ = write!(summary, " {:>13}", format!("{which}^({nu})"));
        }
    }
    summary.push('\n');
    for d in args.d_min..=args.d_max {
        let start = Instant::now();
        let t = build_table(dimension(d)?, args.nu_max, args.truncation, policy)?;
        let elapsed = start.elapsed();
        let _ = write!(summary, "{d:>3}");
        let mut e1 = Vec::new();
        let mut e2 = Vec::new();
        for nu in 1..=args.nu_max {
            let (a, b) = (t.eps1(nu)?.display7(), t.eps2(nu)?.display7());
            let _ = writeln!(csv, "{d},{nu},{a},{b},{},{}", args.truncation, policy.as_str());
            e1.push(a);
            e2.push(b);
        }
        for v in e1.iter().chain(&e2) {
            let _ = write!(summary, " {v:>13}");
        }
        let _ = writeln!(summary, "   ({:.1} ms)", elapsed.as_secs_f64() * 1e3);
        tables.push(report::rw_table(&t));
    }
    let report = json!({ "command": "rw-table", "tables": tables });
    let files = vec![OutputFile::json("rw_table.json", &report), OutputFile::text("rw_table.csv", csv)];
    Ok(Outcome::new(0, report, files, summary))
}

pub fn verdict_exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => 0,
        Verdict::Fail => 1,
        Verdict::Divergent => 2,
    }
}

pub fn verify_cmd(args: &VerifyArgs, policy: Policy) -> Result<Outcome, CliError> {
    let k = BootstrapConstants::new(args.k1, args.k2, args.k3)?;
    let mode: Mode = args.mode.into();
    if mode == Mode::PaperReplay && args.dim != REPLAY_DIMENSION {
        return Err(CliError::Core(bcclace::Error::ReplayDimension(args.dim)));
    }
    let start = Instant::now();
    let r = verify(dimension(args.dim)?, &k, mode, policy)?;
    let elapsed = start.elapsed();
    let breakdown = match (mode, &r.provenance.diagrams) {
        (Mode::Chained, Some(set)) => totals_with_breakdown(set).ok().map(|(_, b)| b),
        _ => None,
    };
    let report = report::g_report(&r, breakdown.as_deref());
    let mut summary = format!(
        "d = {}, K = ({}, {}, {}), mode {}, policy {}\n",
        args.dim,
        k.k1,
        k.k2,
        k.k3,
        mode.as_str(),
        policy.as_str()
    );
    if let Some(l) = &r.provenance.lace {
        let _ = writeln!(
            summary,
            "  Pi totals: even {}  odd {}  t {}  cos {}",
            l.pi_even.display7(),
            l.pi_odd.display7(),
            l.pi_t.display7(),
            l.pi_cos.display7()
        );
    }
    let _ = writeln!(summary, "  g1 = {}  g2 = {}  g3 = {}", r.g1.display7(), r.g2.display7(), r.g3.display7());
    if let Some(src) = &r.divergence {
        let _ = writeln!(summary, "  divergent: {src}");
    }
    let _ = writeln!(summary, "  verdict {} ({:.1} ms)", r.verdict, elapsed.as_secs_f64() * 1e3);
    let files = vec![OutputFile::json("verify.json", &report)];
    Ok(Outcome::new(verdict_exit_code(r.verdict), report, files, summary))
}

fn grid_json(spec: &SearchSpec) -> Value {
    let axis = |a: bcclace::bootstrap::AxisSpec| json!({ "lo": a.lo, "hi": a.hi, "n": a.n });
    json!({
        "d_min": spec.d_min,
        "d_max": spec.d_max,
        "k1": axis(spec.k1),
        "k2": axis(spec.k2),
        "k3": axis(spec.k3),
        "exhaustive": spec.exhaustive,
    })
}

pub fn search_spec(args: &SearchArgs) -> Result<SearchSpec, CliError> {
    let mut spec = match &args.spec {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            spec_file::parse(&text)?
        }
        None => SearchSpec::reference_grid(args.d_min, args.d_max)?,
    };
    spec.exhaustive |= args.exhaustive;
    Ok(spec)
}

pub fn search_cmd(args: &SearchArgs, policy: Policy) -> Result<Outcome, CliError> {
    let spec = search_spec(args)?;
    let start = Instant::now();
    let mut rows = Vec::new();
    let report = parallel::search(&spec, policy, |p| {
        let keep = match args.points {
            PointFilter::All => true,
            PointFilter::Pass => p.verdict == Verdict::Pass,
            PointFilter::None => false,
        };
        if keep {
            rows.push(report::point(p));
        }
    })?;
    let elapsed = start.elapsed();
    let value = report::search(&report, grid_json(&spec));
    let mut summary = format!("grid search, {} points per dimension, policy {}\n", spec.points_per_dimension(), policy);
    for s in &report.dimensions {
        let _ = write!(summary, "  d = {:>2}: {} evaluated, {} passing", s.d, s.evaluated, s.passing);
        if let Some(p) = &s.first_pass {
            let k = p.constants;
            let _ = write!(summary, ", first pass K = ({:.4}, {:.4}, {:.4})", k.k1, k.k2, k.k3);
        } else if let Some(b) = &s.best {
            let k = b.constants;
            let _ = write!(summary, ", best max g/K = {:.6} at K = ({:.4}, {:.4}, {:.4})", b.max_ratio, k.k1, k.k2, k.k3);
        }
        summary.push('\n');
    }
    match report.minimal_passing_d {
        Some(d) => {
            let _ = writeln!(summary, "  minimal passing d = {d}");
        }
        None => summary.push_str("  no dimension passes\n"),
    }
    let _ = writeln!(summary, "  ({:.2} s)", elapsed.as_secs_f64());
    let files = vec![OutputFile::json("search.json", &value), OutputFile::jsonl("points.jsonl", &rows)];
    Ok(Outcome::new(0, value, files, summary))
}

/// A check with the parameters that define it.
pub type SelectedCheck = (Box<dyn IndexedCheck>, Value);

/// The checks selected by `args`.
pub fn selected_checks(args: &ValidateArgs) -> Result<Vec<SelectedCheck>, CliError> {
    let tol = args.tolerance;
    let mut out: Vec<SelectedCheck> = Vec::new();
    for lemma in args.lemma.lemmas() {
        match lemma {
            LemmaId::GreenLower => {
                out.push((Box::new(GreenLower::standard(args.grid, tol)?), json!({ "grid": args.grid })));
            }
            LemmaId::MuBound => {
                out.push((Box::new(MuBound::standard(args.grid, tol)?), json!({ "grid": args.grid })));
            }
            LemmaId::D2k => {
                let dims: Vec<u32> = match args.dim {
                    Some(d) => vec![d],
                    None => (1..=D2K_MAX_DIM).collect(),
                };
                for d in dims {
                    let (sampling, params) = if d <= args.full_grid_max_dim {
                        (D2kSampling::Grid { per_axis: args.grid }, json!({ "d": d, "grid": args.grid }))
                    } else {
                        (D2kSampling::QuasiRandom { samples: args.samples }, json!({ "d": d, "samples": args.samples }))
                    };
                    out.push((Box::new(D2k::new(d, sampling, tol)?), params));
                }
            }
            LemmaId::CosineTelescope => {
                let c = CosineTelescope::new(args.cosine_trials, args.j_max, args.seed, tol)?;
                let params = json!({ "trials": args.cosine_trials, "j_max": args.j_max, "seed": args.seed });
                out.push((Box::new(c), params));
            }
            LemmaId::DoubleDerivative => {
                let c = DoubleDerivative::new(args.sequences, args.seed, tol)?;
                out.push((Box::new(c), json!({ "sequences": args.sequences, "seed": args.seed })));
            }
        }
    }
    Ok(out)
}

pub fn validate_cmd(args: &ValidateArgs) -> Result<Outcome, CliError> {
    let checks = selected_checks(args)?;
    let mut rows = Vec::new();
    let mut summary = String::new();
    let mut all_pass = true;
    for (check, params) in &checks {
        let start = Instant::now();
        let r = parallel::run_check(check.as_ref());
        all_pass &= r.pass;
        let worst: Vec<String> = r.worst_point.iter().map(|x| format!("{x:.6}")).collect();
        let _ = writeln!(
            summary,
            "{:<18} {:<28} {:>9} points  min margin {:>12.5e}  worst [{}]  {}  ({:.2} s)",
            r.lemma.as_str(),
            params.to_string(),
            r.points_checked,
            r.min_margin,
            worst.join(", "),
            if r.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        rows.push(report::check(&r, params.clone()));
    }
    let report = json!({ "command": "validate", "results": rows, "pass": all_pass });
    let checks_file = OutputFile::jsonl("checks.jsonl", &rows);
    let mut outcome = Outcome::new(i32::from(!all_pass), report, vec![checks_file.clone()], summary);
    outcome.appends.push(OutputFile { name: "audit.jsonl".to_owned(), bytes: checks_file.bytes });
    Ok(outcome)
}

pub fn sim_config(args: &SimulateArgs) -> Result<SimConfig, CliError> {
    let d = dimension(args.dim)?;
    let cfg = match (args.p, args.q) {
        (Some(p), None) => SimConfig::new(d, p, args.t_max, args.trials, args.seed)?,
        (None, Some(q)) => SimConfig::from_bond_probability(d, q, args.t_max, args.trials, args.seed)?,
        _ => return Err(CliError::usage("give exactly one of -p and -q")),
    };
    Ok(match args.site_budget {
        Some(b) => cfg.with_site_budget(b),
        None => cfg,
    })
}

/// One oracle comparison: the largest standardized deviation and its bound.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleCheck {
    pub name: &'static str,
    pub points: u64,
    pub worst: f64,
    pub limit: f64,
    pub pass: bool,
}

impl OracleCheck {
    fn new(name: &'static str, limit: f64) -> Self {
        OracleCheck { name, points: 0, worst: f64::NEG_INFINITY, limit, pass: true }
    }

    /// `excess` is the deviation beyond the allowance; positive fails.
    fn observe(&mut self, z: f64, excess: f64) {
        self.points += 1;
        self.worst = self.worst.max(z);
        if excess > 0.0 || z.is_nan() {
            self.pass = false;
        }
    }

    fn to_json(&self) -> Value {
        json!({
            "check": self.name,
            "points": self.points,
            "worst_z": report::real(self.worst),
            "limit_z": self.limit,
            "pass": self.pass,
        })
    }
}

/// `(estimate - target) / sigma`, with `sigma` the binomial standard error at
/// the exact value; an exact 0 or 1 target must be hit exactly.
fn standardized(mean: f64, target: f64, n: u64) -> f64 {
    let sigma = (target * (1.0 - target) / n as f64).max(0.0).sqrt();
    let diff = mean - target;
    if sigma > 0.0 {
        diff / sigma
    } else if diff.abs() <= 1e-15 {
        0.0
    } else {
        f64::INFINITY.copysign(diff)
    }
}

pub fn oracle_checks(stats: &SimStats, coupling_pairs: u64) -> Result<Vec<OracleCheck>, CliError> {
    let cfg = &stats.config;
    let n = stats.counts.completed;
    let d = cfg.d;
    let mut out = Vec::new();

    // phi <= Q_p + 3 sigma
    let mut dom = OracleCheck::new("domination", 3.0);
    for (t, x, e) in stats.two_point_entries() {
        let q = rw_two_point(d, cfg.p, &x, t);
        let z = if e.stderr > 0.0 { (e.mean - q) / e.stderr } else { standardized(e.mean, q.min(1.0), n) };
        dom.observe(z, e.mean - q - 3.0 * e.stderr);
    }
    out.push(dom);

    if cfg.t_max >= 2 {
        let mut two = OracleCheck::new("two-step", 4.0);
        for (_, x, e) in stats.two_point_entries().filter(|(t, _, _)| *t == 2) {
            let z = standardized(e.mean, exact_two_step(d, cfg.p, &x), n);
            two.observe(z.abs(), z.abs() - 4.0);
        }
        out.push(two);
    }

    if d.get() == 1 {
        let horizon = cfg.t_max.min(DP_MAX_T);
        let exact = exact_dp_1d(cfg.p, horizon)?;
        let mut dp = OracleCheck::new("dp-1d", 4.0);
        for (t, level) in exact.iter().enumerate() {
            for (i, &phi) in level.iter().enumerate() {
                let x = 2 * i as i32 - t as i32;
                let e = stats.two_point(&[x], t as u32).expect("t within horizon");
                let z = standardized(e.mean, phi, n);
                dp.observe(z.abs(), z.abs() - 4.0);
            }
        }
        out.push(dp);
    }

    // E|C up to t_max| <= sum_t p^t
    let chi_bound: f64 = (0..=cfg.t_max).map(|t| cfg.p.powi(t as i32)).sum();
    let chi = stats.chi_trunc();
    let mut susc = OracleCheck::new("susceptibility", 3.0);
    let z = if chi.stderr > 0.0 { (chi.mean - chi_bound) / chi.stderr } else { 0.0 };
    susc.observe(z, chi.mean - chi_bound - 3.0 * chi.stderr);
    out.push(susc);

    let mut sym = OracleCheck::new("symmetry", 4.0);
    for (t, x, e) in stats.two_point_entries() {
        let mirror: Vec<i32> = x.iter().map(|v| -v).collect();
        if mirror <= x {
            continue;
        }
        let f = stats.two_point(&mirror, t).expect("mirror lies in the cone");
        let joint = (e.stderr * e.stderr + f.stderr * f.stderr).sqrt();
        let diff = (e.mean - f.mean).abs();
        let z = if joint > 0.0 { diff / joint } else if diff == 0.0 { 0.0 } else { f64::INFINITY };
        sym.observe(z, z - 4.0);
    }
    out.push(sym);

    if coupling_pairs > 0 {
        let q = cfg.bond_probability();
        let higher = SimConfig::from_bond_probability(d, q + (1.0 - q) / 2.0, cfg.t_max, coupling_pairs, cfg.seed)?
            .with_site_budget(cfg.site_budget);
        let lower = SimConfig { trials: coupling_pairs, ..*cfg };
        let mut coupling = OracleCheck::new("coupling", 0.0);
        for trial in 0..coupling_pairs {
            if let (Trial::Complete(a), Trial::Complete(b)) = (run_trial(&lower, trial)?, run_trial(&higher, trial)?) {
                let nested = a.iter().zip(&b).all(|(la, lb)| la.iter().all(|i| lb.binary_search(i).is_ok()));
                coupling.observe(0.0, if nested { 0.0 } else { 1.0 });
            }
        }
        out.push(coupling);
    }
    Ok(out)
}

fn two_point_csv(stats: &SimStats) -> String {
    let d = stats.config.d.get();
    let mut s = String::from("t");
    for i in 1..=d {
        let _ = write!(s, ",x{i}");
    }
    s.push_str(",mean,stderr,rw_bound\n");
    for (t, x, e) in stats.two_point_entries() {
        let _ = write!(s, "{t}");
        for v in &x {
            let _ = write!(s, ",{v}");
        }
        let _ = writeln!(s, ",{},{},{}", e.mean, e.stderr, rw_two_point(stats.config.d, stats.config.p, &x, t));
    }
    s
}

pub fn simulate_cmd(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let cfg = sim_config(args)?;
    let start = Instant::now();
    let stats = parallel::simulate(&cfg)?;
    let mut report = report::sim_stats(&stats);
    let mut summary = format!(
        "d = {}, p = {}, q = {}, t_max = {}, {} trials ({} truncated)\n",
        cfg.d.get(),
        cfg.p,
        cfg.bond_probability(),
        cfg.t_max,
        stats.counts.completed,
        stats.counts.truncated
    );
    for t in 0..=cfg.t_max {
        let e = stats.survival(t).expect("t within horizon");
        let _ = writeln!(summary, "  survival({t}) = {:.6} +- {:.6}", e.mean, e.stderr);
    }
    let chi = stats.chi_trunc();
    let _ = writeln!(summary, "  chi_trunc = {:.6} +- {:.6}", chi.mean, chi.stderr);
    let mut exit_code = 0;
    if args.oracle {
        let checks = oracle_checks(&stats, args.coupling_pairs)?;
        for c in &checks {
            let _ = writeln!(
                summary,
                "  oracle {:<15} {:>6} points  worst z {:>8.3}  {}",
                c.name,
                c.points,
                c.worst,
                if c.pass { "PASS" } else { "FAIL" }
            );
        }
        if checks.iter().any(|c| !c.pass) {
            exit_code = 1;
        }
        report["oracle"] = Value::Array(checks.iter().map(OracleCheck::to_json).collect());
    }
    let _ = writeln!(summary, "  ({:.2} s)", start.elapsed().as_secs_f64());
    let files = vec![OutputFile::json("sim.json", &report), OutputFile::text("two_point.csv", two_point_csv(&stats))];
    Ok(Outcome::new(exit_code, report, files, summary))
}
