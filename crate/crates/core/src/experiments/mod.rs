//! Seeded Monte Carlo estimators over random selections and domain points.
//!
//! Every trial draws from its own `(seed, purpose, trial)` stream and the
//! per-trial results are collected in trial order, so reports do not depend
//! on the number of worker threads.

mod config;
mod report;

use rand::RngCore;
use rayon::prelude::*;

pub use config::{ExperimentConfig, SamplerKind, MIN_EXPERIMENT_HORIZON};
pub use report::{
    adjusted_standard_error, wilson_interval, Check, ConstructedOutcome, ExperimentReport, PointOutcome,
    Proportion, Tally,
};

use crate::construction::{build_divergent_perm, build_divergent_subseq, in_am, AmVerdict, Construction};
use crate::convergence::{i_converges, EpsGrid, VerdictTag};
use crate::error::{Error, Result};
use crate::families::FunctionFamily;
use crate::ideal::{is_invariant_sample, standard_battery, Horizon, IdealKind, IdealSpec, IndexSet, InvarianceVerdict};
use crate::rng::{purpose, stream, ALGORITHM};
use crate::scalar::Scalar;
use crate::selection::{sample_lambda, Selection, SubseqPrefix};
use crate::sequence::PointSeq;

/// Rates at or below this count as "≈ 0".
pub const NEAR_ZERO: f64 = 0.02;
/// Rates at or above this count as "≈ 1".
pub const NEAR_ONE: f64 = 0.98;

/// Runs `f(0), …, f(n-1)` on `workers` threads and returns results in index order.
fn run_indexed<T: Send>(workers: usize, n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..n).into_par_iter().map(f).collect()))
}

fn verdict_of<F: Scalar>(x: &PointSeq<F>, s: &impl Selection, ideal: &IdealSpec, grid: &EpsGrid<F>) -> VerdictTag {
    // a selection too short to form a sequence gives no evidence either way
    match x.apply_selection(s) {
        Ok(y) => i_converges(&y, ideal, grid).tag(),
        Err(_) => VerdictTag::Undecided,
    }
}

fn base_report(experiment: &str, label: &str, subject: String, ideal: &IdealSpec, cfg: &ExperimentConfig) -> ExperimentReport {
    ExperimentReport {
        experiment: experiment.into(),
        label: label.into(),
        canonical: true,
        rng: ALGORITHM.into(),
        subject,
        ideal: ideal.name().into(),
        config: cfg.clone(),
        warnings: Vec::new(),
        verdict: None,
        proportions: Vec::new(),
        tallies: Vec::new(),
        checks: Vec::new(),
        points: Vec::new(),
    }
}

/// Monte Carlo estimate of `λ{s : (x_{s(n)}) is I-convergent}`.
#[derive(Debug, Clone, PartialEq)]
pub struct EMeasure {
    pub convergent: Proportion,
    pub tally: Tally,
}

impl EMeasure {
    pub fn undecided_rate(&self) -> f64 {
        self.convergent.undecided_rate()
    }
}

/// Applies `M_s` λ-random selections to `x` and tallies the verdicts.
pub fn estimate_e_measure<F: Scalar>(x: &PointSeq<F>, ideal: &IdealSpec, cfg: &ExperimentConfig) -> Result<EMeasure> {
    cfg.validate()?;
    let grid = cfg.grid::<F>()?;
    let tags = run_indexed(cfg.workers, cfg.trials, |j| {
        let s = sample_lambda(cfg.seed, j as u64, x.len());
        verdict_of(x, &s, ideal, &grid)
    })?;
    let tally = Tally::from_tags("selections", tags);
    let convergent = Proportion::new("convergent", tally.convergent, tally.decided(), tally.undecided);
    Ok(EMeasure { convergent, tally })
}

/// [`estimate_e_measure`] wrapped in a report.
pub fn e_measure_experiment<F: Scalar>(
    x: &PointSeq<F>,
    subject: &str,
    ideal: &IdealSpec,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let est = estimate_e_measure(x, ideal, cfg)?;
    let mut report = base_report("emeasure", "ESTIMATE", subject.into(), ideal, cfg);
    report.proportions.push(est.convergent);
    report.tallies.push(est.tally);
    Ok(report)
}

/// The convergence verdict of `x` next to the selection-convergence estimate,
/// checked against their claimed equivalence.
pub fn lk3_experiment<F: Scalar>(
    x: &PointSeq<F>,
    subject: &str,
    ideal: &IdealSpec,
    cfg: &ExperimentConfig,
) -> Result<ExperimentReport> {
    let est = estimate_e_measure(x, ideal, cfg)?;
    let verdict = i_converges(x, ideal, &cfg.grid::<F>()?).tag();
    let mut report = base_report("lk3", "ESTIMATE", subject.into(), ideal, cfg);
    if !matches!(ideal.kind(), IdealKind::Density) {
        report
            .warnings
            .push(format!("property (G) is not claimed for the {} ideal; the equivalence need not hold", ideal.name()));
    }
    let p = est.convergent.value;
    let (holds, detail) = match verdict {
        VerdictTag::Convergent => (p >= NEAR_ONE, format!("Convergent with selection rate {p:.4}; expected >= {NEAR_ONE}")),
        VerdictTag::Divergent => (p <= NEAR_ZERO, format!("Divergent with selection rate {p:.4}; expected <= {NEAR_ZERO}")),
        VerdictTag::Undecided => (false, "sequence verdict Undecided; equivalence not testable".into()),
    };
    report.verdict = Some(verdict);
    report.checks.push(Check { name: "equivalence".into(), holds, detail });
    report.proportions.push(est.convergent);
    report.tallies.push(est.tally);
    Ok(report)
}

/// Fraction of decided entries of a verdict row whose convergence rate is ≈ 0.
fn rate_near_zero<'a>(rows: impl Iterator<Item = &'a [VerdictTag]>) -> (u64, u64, u64) {
    let (mut yes, mut decided, mut undecided) = (0, 0, 0);
    for row in rows {
        let t = Tally::from_tags("", row.iter().copied());
        if t.decided() == 0 {
            undecided += 1;
            continue;
        }
        decided += 1;
        if (t.convergent as f64) / (t.decided() as f64) <= NEAR_ZERO {
            yes += 1;
        }
    }
    (yes, decided, undecided)
}

fn lambda_selections(cfg: &ExperimentConfig, n: usize) -> Result<Vec<SubseqPrefix>> {
    run_indexed(cfg.workers, cfg.trials, |j| sample_lambda(cfg.seed, j as u64, n))
}

/// Estimates the four equivalent conditions on a `M_x × M_s` product sample:
///
/// * (i) points `x` where `(f_n(x))` is `I`-divergent;
/// * (ii) points whose selection-convergence rate is ≈ 0;
/// * (iii) convergent `(x, s)` pairs;
/// * (iv) selections whose point-convergence rate is ≈ 0.
pub fn tw3_experiment(family: &FunctionFamily, ideal: &IdealSpec, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = cfg.grid::<f64>()?;
    let horizon = cfg.horizon()?;
    let xs = cfg.sampler().points(family)?;
    if xs.is_empty() {
        return Err(Error::Config(format!("every sampled point was rejected for {family}")));
    }
    let sels = lambda_selections(cfg, horizon.get())?;
    let rows = run_indexed(cfg.workers, xs.len(), |i| -> Result<(VerdictTag, Vec<VerdictTag>)> {
        let base = family.sequence_at::<f64>(xs[i], horizon)?;
        let own = i_converges(&base, ideal, &grid).tag();
        Ok((own, sels.iter().map(|s| verdict_of(&base, s, ideal, &grid)).collect()))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let points = Tally::from_tags("points", rows.iter().map(|r| r.0));
    let pairs = Tally::from_tags("pairs", rows.iter().flat_map(|r| r.1.iter().copied()));
    let cond_i = Proportion::new("i", points.divergent, points.decided(), points.undecided);
    let (y, d, u) = rate_near_zero(rows.iter().map(|r| r.1.as_slice()));
    let cond_ii = Proportion::new("ii", y, d, u);
    let cond_iii = Proportion::new("iii", pairs.convergent, pairs.decided(), pairs.undecided);
    let columns: Vec<Vec<VerdictTag>> = (0..sels.len()).map(|j| rows.iter().map(|r| r.1[j]).collect()).collect();
    let (y, d, u) = rate_near_zero(columns.iter().map(|c| c.as_slice()));
    let cond_iv = Proportion::new("iv", y, d, u);

    let gap = (cond_ii.value - cond_iv.value).abs();
    let combined = (cond_ii.standard_error().powi(2) + cond_iv.standard_error().powi(2)).sqrt();
    let flags = [cond_i.value >= NEAR_ONE, cond_ii.value >= NEAR_ONE, cond_iii.value <= NEAR_ZERO, cond_iv.value >= NEAR_ONE];

    let mut report = base_report("tw3", "ESTIMATE", family.name(), ideal, cfg);
    report.checks.push(Check {
        name: "ii-iv".into(),
        holds: gap <= 3.0 * combined,
        detail: format!("|(ii) - (iv)| = {gap:.4}, three combined standard errors = {:.4}", 3.0 * combined),
    });
    report.checks.push(Check {
        name: "equivalence".into(),
        holds: flags.iter().all(|&f| f == flags[0]),
        detail: format!(
            "(i) ~ 1: {}, (ii) ~ 1: {}, (iii) ~ 0: {}, (iv) ~ 1: {}",
            flags[0], flags[1], flags[2], flags[3]
        ),
    });
    if xs.len() < cfg.points {
        report.warnings.push(format!("{} grid points rejected for {family}", cfg.points - xs.len()));
    }
    report.proportions = vec![cond_i, cond_ii, cond_iii, cond_iv];
    report.tallies = vec![points, pairs];
    Ok(report)
}

/// Builds a construction at the largest target of `target, target/2, …` that the witness pair supports.
fn construct_adaptive<S>(
    target: usize,
    mut build: impl FnMut(usize) -> Result<Construction<S, f64>>,
) -> Result<(usize, Construction<S, f64>)> {
    let mut t = target;
    loop {
        match build(t) {
            Err(Error::WitnessExhausted(msg)) if t > 1 => {
                let _ = msg;
                t /= 2;
            }
            other => return other.map(|c| (t, c)),
        }
    }
}

fn replay<S: Selection>(
    target: usize,
    c: &Construction<S, f64>,
    x: &PointSeq<f64>,
    ideal: &IdealSpec,
    grid: &EpsGrid<f64>,
) -> ConstructedOutcome {
    let in_am_all = (1..=c.visited_m).all(|m| matches!(in_am(&c.selection, &c.plan(m), x), Ok(AmVerdict::Yes(_))));
    ConstructedOutcome {
        target,
        len: c.selection.len(),
        visited_m: c.visited_m,
        replay: verdict_of(x, &c.selection, ideal, grid),
        in_am_all,
    }
}

/// Contrasts random selections with constructed divergent selections at
/// sampled points. Labelled `DEMONSTRATION`: category statements are not
/// sampleable and nothing here estimates them.
///
/// Refuses when fewer than half of the sampled points are classically
/// divergent, since the construction has nothing to show there.
pub fn cc1_demo(family: &FunctionFamily, ideal: &IdealSpec, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let grid = cfg.grid::<f64>()?;
    let horizon = cfg.horizon()?;
    let chorizon = Horizon::new(cfg.construction_horizon)?;
    let fin = IdealSpec::fin();
    let xs = cfg.sampler().points(family)?;
    let classical = run_indexed(cfg.workers, xs.len(), |i| {
        family.sequence_at::<f64>(xs[i], horizon).map(|b| i_converges(&b, &fin, &grid).tag())
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let divergent = classical.iter().filter(|&&t| t == VerdictTag::Divergent).count();
    if 2 * divergent < xs.len().max(1) {
        return Err(Error::Refused(format!(
            "{family} is classically divergent at only {divergent} of {} sampled points; \
             there is no divergence for the construction to exhibit",
            xs.len()
        )));
    }

    let sels = lambda_selections(cfg, horizon.get())?;
    let outcomes = run_indexed(cfg.workers, xs.len(), |i| -> Result<PointOutcome> {
        let x = xs[i];
        let base = family.sequence_at::<f64>(x, horizon)?;
        let random = Tally::from_tags("random", sels.iter().map(|s| verdict_of(&base, s, ideal, &grid)));
        let long = family.sequence_at::<f64>(x, chorizon)?;
        let seed = stream(cfg.seed, purpose::PREFIX, i as u64).next_u64();
        let mut errors = Vec::new();
        let subseq = construct_adaptive(cfg.construction_target, |t| build_divergent_subseq(&long, ideal, t, seed))
            .map(|(t, c)| replay(t, &c, &long, ideal, &grid))
            .map_err(|e| errors.push(format!("subsequence: {e}")))
            .ok();
        let perm = construct_adaptive(cfg.construction_target, |t| build_divergent_perm(&long, ideal, t, seed))
            .map(|(t, c)| replay(t, &c, &long, ideal, &grid))
            .map_err(|e| errors.push(format!("rearrangement: {e}")))
            .ok();
        Ok(PointOutcome { x, classical: classical[i], random, subseq, perm, errors })
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let mut random = Tally { name: "random-selections".into(), ..Default::default() };
    for o in &outcomes {
        random.convergent += o.random.convergent;
        random.divergent += o.random.divergent;
        random.undecided += o.random.undecided;
    }
    let constructed = |name: &str, pick: fn(&PointOutcome) -> Option<&ConstructedOutcome>| {
        Tally::from_tags(name, outcomes.iter().filter_map(pick).map(|c| c.replay))
    };
    let subseq = constructed("constructed-subsequences", |o| o.subseq.as_ref());
    let perm = constructed("constructed-rearrangements", |o| o.perm.as_ref());
    let failed = outcomes.iter().filter(|o| !o.errors.is_empty()).count();

    let mut report = base_report("cc1", "DEMONSTRATION", family.name(), ideal, cfg);
    report.warnings.push(
        "demonstration only: divergence on a comeager set is a category statement that no finite sample measures".into(),
    );
    if failed > 0 {
        report.warnings.push(format!("construction failed at {failed} point(s); see per-point errors"));
    }
    report.proportions = vec![
        Proportion::new("random-convergent", random.convergent, random.decided(), random.undecided),
        Proportion::new("subsequence-divergent", subseq.divergent, subseq.decided(), subseq.undecided),
        Proportion::new("rearrangement-divergent", perm.divergent, perm.decided(), perm.undecided),
    ];
    let all_in_am = outcomes
        .iter()
        .flat_map(|o| o.subseq.iter().chain(o.perm.iter()))
        .all(|c| c.in_am_all);
    report.checks.push(Check {
        name: "in-am-replay".into(),
        holds: all_in_am,
        detail: "every constructed selection lies in A_m for each visited m".into(),
    });
    report.tallies = vec![Tally::from_tags("classical", classical), random, subseq, perm];
    report.points = outcomes;
    Ok(report)
}

/// Monte Carlo estimate of `λ{s : s is I-invariant}` over the standard battery.
pub fn property_g_estimate(ideal: &IdealSpec, cfg: &ExperimentConfig) -> Result<Proportion> {
    property_g_estimate_with(ideal, cfg, |h| standard_battery(h).into_iter().map(|b| b.set).collect())
}

/// [`property_g_estimate`] with a caller-chosen battery, built on the horizon of each selection.
pub fn property_g_estimate_with(
    ideal: &IdealSpec,
    cfg: &ExperimentConfig,
    battery: impl Fn(Horizon) -> Vec<IndexSet> + Sync + Send,
) -> Result<Proportion> {
    cfg.validate()?;
    if ideal.is_custom() {
        return Err(Error::Unsupported("property (G) estimates need the fin or density ideal".into()));
    }
    let verdicts = run_indexed(cfg.workers, cfg.trials, |j| -> Result<InvarianceVerdict> {
        let s = sample_lambda(cfg.seed, j as u64, cfg.horizon);
        let h = Horizon::new(s.len().max(2))?;
        is_invariant_sample(&s, ideal, &battery(h))
    })?
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let yes = verdicts.iter().filter(|&&v| v == InvarianceVerdict::Invariant).count() as u64;
    let undecided = verdicts.iter().filter(|&&v| v == InvarianceVerdict::Undecided).count() as u64;
    Ok(Proportion::new("invariant", yes, verdicts.len() as u64 - undecided, undecided))
}

/// [`property_g_estimate`] wrapped in a report.
pub fn property_g_experiment(ideal: &IdealSpec, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let p = property_g_estimate(ideal, cfg)?;
    let mut report = base_report("propg", "ESTIMATE", "standard-battery".into(), ideal, cfg);
    report.tallies.push(Tally {
        name: "selections".into(),
        convergent: p.successes,
        divergent: p.decided - p.successes,
        undecided: p.undecided,
    });
    report.proportions.push(p);
    Ok(report)
}
