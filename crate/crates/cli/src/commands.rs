//! The five commands. Each returns a report plus its tabular form.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;
use subgrad_core::groupquery::{learn_z_via_or, or_query, or_query_budget};
use subgrad_core::instances::{Family, Instance, MaxCoordInstance, Sign};
use subgrad_core::optimize::{iterations_for, minimize, rescale_problem};
use subgrad_core::verify::{
    ball_sampler, escape_reduced, escape_stress, estimate_concentration, estimate_disclosure,
    guess_reduced, property_suite, span_biased_sampler, DisclosureStudy, GuessCandidate,
    HiddenFamily, LemmaEstimate, PropertyConfig, PropertyReport, QueryStrategy, DISCLOSURE,
};
use subgrad_core::{FirstOrderOracle, RngStream};

use crate::config::{Command, ExperimentConfig, Lemma};
use crate::error::CliError;
use crate::report::{Report, Table};

/// Largest `n` for the exhaustive `reduce` check.
pub const REDUCE_MAX_N: u64 = 12;
/// Queries per stream in the disclosure estimator; each stream has its own
/// hidden sign vector.
pub const DISCLOSURE_STREAM_LEN: usize = 4;
pub const PROPERTIES: &str = "properties";
pub const GD_GAP: &str = "gd-gap";
pub const SWEEP_SCALING: &str = "sweep-scaling";
pub const OR_REDUCTION: &str = "or-reduction";

#[derive(Debug, Clone)]
pub struct Outcome {
    pub report: Report,
    pub table: Table,
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    match cfg.command {
        Command::Gen => gen(cfg),
        Command::Gd => gd(cfg),
        Command::Verify => verify(cfg),
        Command::Reduce => reduce(cfg),
        Command::Sweep => sweep(cfg),
    }
}

fn instance(cfg: &ExperimentConfig, family: Family, epsilon: f64) -> Result<Instance, CliError> {
    Ok(Instance::generate(
        family,
        epsilon,
        Some(cfg.ambient_dim),
        RngStream::new(cfg.seed, 0),
    )?)
}

fn gen(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let inst = instance(cfg, cfg.family, cfg.epsilon())?;
    let doc = inst.to_document(Some(cfg.seed));
    let table = if let Some(z) = &doc.z {
        let mut t = Table::new(&["index", "z"]);
        for (i, s) in z.iter().enumerate() {
            t.push([i.to_string(), (s.value() as i8).to_string()]);
        }
        t
    } else if let Some(v) = &doc.v {
        let mut t = Table::new(&["direction", "coordinate", "value"]);
        for (i, vi) in v.vectors().iter().enumerate() {
            for (j, x) in vi.iter().enumerate() {
                t.push([i.to_string(), j.to_string(), x.to_string()]);
            }
        }
        t
    } else {
        Table::default()
    };
    Ok(Outcome {
        report: Report::new(cfg, Vec::new(), serde_json::to_value(&doc)?),
        table,
    })
}

/// Outcome of one descent run, in the units of the original problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdSummary {
    pub family: Family,
    pub epsilon: f64,
    pub nominal_n: u64,
    pub ambient_dim: usize,
    pub lipschitz: f64,
    /// Step size of the rescaled problem, `ε/G`.
    pub step_size: f64,
    pub query_count: usize,
    /// `⌈(G/ε)²⌉`.
    pub predicted_query_count: usize,
    pub final_value: f64,
    /// `f(x*)` for MaxCoord, `f(x̃) ≥ f(x*)` otherwise.
    pub reference_value: f64,
    pub reference_is_optimum: bool,
    /// `f(x̂) - reference_value`.
    pub gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GdRun {
    pub summary: GdSummary,
    pub values: Vec<f64>,
    pub norms: Vec<f64>,
}

pub fn gd_run(cfg: &ExperimentConfig, family: Family, epsilon: f64) -> Result<GdRun, CliError> {
    let inst = instance(cfg, family, epsilon)?;
    let (_, reference_value) = inst.reference()?;
    let g = inst.lipschitz_bound();
    let scale = rescale_problem(g, 1.0, epsilon)?;
    let (trace, x) = minimize(&inst, 1.0, epsilon, false)?;
    let final_value = inst.value(&x)?;
    let gap = final_value - reference_value;
    Ok(GdRun {
        summary: GdSummary {
            family,
            epsilon,
            nominal_n: inst.nominal_n(),
            ambient_dim: inst.dim(),
            lipschitz: g,
            step_size: scale.normalized_epsilon,
            query_count: trace.query_count,
            predicted_query_count: iterations_for(scale.normalized_epsilon)?,
            final_value,
            reference_value,
            reference_is_optimum: family == Family::MaxCoord,
            gap,
            pass: gap <= epsilon,
        },
        values: trace.values.iter().map(|v| v * g).collect(),
        norms: trace.norms,
    })
}

fn gd(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let run = gd_run(cfg, cfg.family, cfg.epsilon())?;
    let s = &run.summary;
    let mut table = Table::new(&["t", "value", "gap", "norm"]);
    for (t, (v, n)) in run.values.iter().zip(&run.norms).enumerate() {
        let gap = if s.reference_is_optimum {
            (v - s.reference_value).to_string()
        } else {
            String::new()
        };
        table.push([t.to_string(), v.to_string(), gap, n.to_string()]);
    }
    let failing = if s.pass {
        vec![]
    } else {
        vec![GD_GAP.to_string()]
    };
    Ok(Outcome {
        report: Report::new(cfg, failing, serde_json::to_value(&run)?),
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub family: Family,
    pub rows: Vec<GdSummary>,
    /// Every run used exactly the predicted number of queries.
    pub fits_inverse_square: bool,
}

fn sweep(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let rows: Vec<GdSummary> = cfg
        .sweep_grid()
        .par_iter()
        .map(|&eps| gd_run(cfg, cfg.family, eps).map(|r| r.summary))
        .collect::<Result<_, _>>()?;
    let fits = rows
        .iter()
        .all(|r| r.query_count == r.predicted_query_count);
    let mut failing = Vec::new();
    if !fits {
        failing.push(SWEEP_SCALING.to_string());
    }
    if rows.iter().any(|r| !r.pass) {
        failing.push(GD_GAP.to_string());
    }
    let mut table = Table::new(&[
        "epsilon",
        "nominal_n",
        "query_count",
        "predicted_query_count",
        "final_value",
        "reference_value",
        "gap",
        "pass",
    ]);
    for r in &rows {
        table.push([
            r.epsilon.to_string(),
            r.nominal_n.to_string(),
            r.query_count.to_string(),
            r.predicted_query_count.to_string(),
            r.final_value.to_string(),
            r.reference_value.to_string(),
            r.gap.to_string(),
            r.pass.to_string(),
        ]);
    }
    let result = SweepResult {
        family: cfg.family,
        rows,
        fits_inverse_square: fits,
    };
    Ok(Outcome {
        report: Report::new(cfg, failing, serde_json::to_value(&result)?),
        table,
    })
}

/// An estimate whose event is supposed to be frequent, as a check that the
/// event detector works at all.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SanityCheck {
    pub estimate: LemmaEstimate,
    pub expectation: String,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyProperties {
    pub family: Family,
    pub epsilon: f64,
    pub report: PropertyReport,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VerifyResult {
    pub estimates: Vec<LemmaEstimate>,
    pub sanity: Vec<SanityCheck>,
    pub disclosure: Vec<DisclosureStudy>,
    pub properties: Vec<FamilyProperties>,
}

impl VerifyResult {
    pub fn failing(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut add = |id: &str| {
            if !out.iter().any(|o| o == id) {
                out.push(id.to_string());
            }
        };
        for e in self.estimates.iter().filter(|e| !e.pass) {
            add(&e.lemma_id);
        }
        for s in self.sanity.iter().filter(|s| !s.pass) {
            add(&s.estimate.lemma_id);
        }
        if self.disclosure.iter().any(|d| !d.pass) {
            add(DISCLOSURE);
        }
        if self.properties.iter().any(|p| !p.pass) {
            add(PROPERTIES);
        }
        out
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "lemma_id",
            "detail",
            "events",
            "trials",
            "statistic",
            "bound",
            "threshold",
            "seed",
            "pass",
        ]);
        let push_estimate =
            |t: &mut Table, e: &LemmaEstimate, detail: String, pass: bool, threshold: String| {
                t.push([
                    e.lemma_id.clone(),
                    detail,
                    e.successes.to_string(),
                    e.trials.to_string(),
                    e.empirical_probability.to_string(),
                    e.theoretical_bound.to_string(),
                    threshold,
                    e.seed.to_string(),
                    pass.to_string(),
                ]);
            };
        for e in &self.estimates {
            push_estimate(
                &mut t,
                e,
                e.detail.clone(),
                e.pass,
                e.threshold().to_string(),
            );
        }
        for s in &self.sanity {
            let detail = format!("{} (sanity: {})", s.estimate.detail, s.expectation);
            push_estimate(&mut t, &s.estimate, detail, s.pass, String::new());
        }
        for d in &self.disclosure {
            let events = (d.mean_new_fixes * d.queries as f64).round();
            t.push([
                DISCLOSURE.to_string(),
                format!(
                    "{:?} n = {} stream length {}",
                    d.strategy, d.n, d.stream_len
                ),
                events.to_string(),
                d.queries.to_string(),
                d.mean_new_fixes.to_string(),
                d.bound.to_string(),
                d.threshold.to_string(),
                d.seed.to_string(),
                d.pass.to_string(),
            ]);
        }
        for p in &self.properties {
            for c in &p.report.checks {
                t.push([
                    PROPERTIES.to_string(),
                    format!("{} {}", p.family, c.name),
                    c.violations.to_string(),
                    c.samples.to_string(),
                    c.worst.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                    (c.violations == 0).to_string(),
                ]);
            }
        }
        t
    }
}

fn hidden_families(family: Family) -> Vec<Family> {
    match family {
        Family::MaxCoord => vec![Family::NemYud, Family::Wall],
        f => vec![f],
    }
}

pub fn verify_result(cfg: &ExperimentConfig) -> Result<VerifyResult, CliError> {
    let lemma = cfg.lemma.unwrap_or(Lemma::All);
    let wants = |l: Lemma| lemma == l || lemma == Lemma::All;
    let eps = cfg.epsilon();
    let (trials, seed) = (cfg.trials, cfg.seed);
    let mut out = VerifyResult::default();

    if wants(Lemma::Concentration) {
        let n = cfg.n.unwrap_or(1000);
        let cs = cfg
            .c
            .map(|c| vec![c])
            .unwrap_or_else(|| vec![0.05, 0.1, 0.15]);
        for c in cs {
            out.estimates
                .push(estimate_concentration(n, c, trials, seed)?);
        }
    }

    for (l, family) in [
        (Lemma::ArgmaxEscape, Family::NemYud),
        (Lemma::WallArgmaxEscape, Family::Wall),
    ] {
        if !wants(l) {
            continue;
        }
        let h = HiddenFamily::from_epsilon(family, eps)?;
        let mut ts = cfg
            .t
            .map(|t| vec![t])
            .unwrap_or_else(|| vec![1, h.k().div_ceil(2)]);
        ts.dedup();
        for t in ts {
            if cfg.stress {
                let e = escape_stress(&h, t, trials, seed)?;
                let min_rate = 1.0 / (2.0 * h.k() as f64);
                out.sanity.push(SanityCheck {
                    pass: e.empirical_probability >= min_rate,
                    expectation: format!("escape rate with gamma = 0 at least {min_rate}"),
                    estimate: e,
                });
            } else {
                out.estimates.push(escape_reduced(&h, t, trials, seed)?);
            }
        }
    }

    if wants(Lemma::Guess) {
        for family in hidden_families(cfg.family) {
            let h = HiddenFamily::from_epsilon(family, eps)?;
            out.estimates.push(guess_reduced(
                &h,
                eps,
                GuessCandidate::BestGuess,
                trials,
                seed,
            )?);
            out.estimates.push(guess_reduced(
                &h,
                eps,
                GuessCandidate::RandomUnit,
                trials,
                seed,
            )?);
            let full = guess_reduced(&h, eps, GuessCandidate::FullKnowledge, trials, seed)?;
            out.sanity.push(SanityCheck {
                pass: full.successes == full.trials,
                expectation: "the full-knowledge point always succeeds".into(),
                estimate: full,
            });
        }
    }

    if wants(Lemma::Disclosure) {
        let n = cfg.n.unwrap_or(64) as usize;
        let streams = trials.div_ceil(DISCLOSURE_STREAM_LEN as u64);
        for strategy in [QueryStrategy::RandomUnit, QueryStrategy::AdversarialReplay] {
            out.disclosure.push(estimate_disclosure(
                n,
                streams,
                DISCLOSURE_STREAM_LEN,
                strategy,
                seed,
            )?);
        }
    }

    if wants(Lemma::Properties) {
        let families = if lemma == Lemma::All {
            Family::ALL.to_vec()
        } else {
            vec![cfg.family]
        };
        for family in families {
            let inst = instance(cfg, family, eps)?;
            let pc = PropertyConfig::new(trials as usize, seed);
            let report = match &inst {
                Instance::MaxCoord(_) => property_suite(&inst, &pc, ball_sampler(inst.dim()))?,
                Instance::NemYud(i) => {
                    property_suite(&inst, &pc, span_biased_sampler(i.directions()))?
                }
                Instance::Wall(i) => {
                    property_suite(&inst, &pc, span_biased_sampler(i.directions()))?
                }
            };
            out.properties.push(FamilyProperties {
                family,
                epsilon: eps,
                pass: report.pass(),
                report,
            });
        }
    }
    Ok(out)
}

fn verify(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let result = verify_result(cfg)?;
    Ok(Outcome {
        report: Report::new(cfg, result.failing(), serde_json::to_value(&result)?),
        table: result.table(),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReduceResult {
    pub n: u64,
    pub instances: u64,
    /// `(z, S)` pairs with `S` nonempty.
    pub pairs_checked: u64,
    pub or_disagreements: u64,
    pub learner_failures: u64,
    pub max_queries_used: usize,
    pub pass: bool,
}

/// Checks `or_query` against direct OR semantics for every `z ∈ {±1}^n` and
/// every nonempty `S`, and runs the learner on every `z`.
pub fn exhaustive_reduction(n: u64) -> Result<ReduceResult, CliError> {
    if n == 0 || n > REDUCE_MAX_N {
        return Err(CliError::Usage(format!(
            "reduce needs 1 ≤ n ≤ {REDUCE_MAX_N}, got {n}"
        )));
    }
    let nu = n as usize;
    let per_z: Vec<(u64, u64, usize)> = (0..1u64 << n)
        .into_par_iter()
        .map(|zmask| -> Result<(u64, u64, usize), CliError> {
            let z: Vec<Sign> = (0..nu)
                .map(|i| {
                    if zmask >> i & 1 == 1 {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                })
                .collect();
            let inst = MaxCoordInstance::new(z.clone())?;
            let mut wrong = 0;
            let mut set = Vec::with_capacity(nu);
            for smask in 1..1u64 << n {
                set.clear();
                set.extend((0..nu).filter(|i| smask >> i & 1 == 1));
                if or_query(&inst, &set)? != (zmask & smask != 0) {
                    wrong += 1;
                }
            }
            let ones = zmask.count_ones() as usize;
            let learned = learn_z_via_or(&inst, or_query_budget(nu, ones))?;
            let failed = u64::from(!(learned.complete && learned.z_hat == z));
            Ok((wrong, failed, learned.queries_used))
        })
        .collect::<Result<_, _>>()?;
    let or_disagreements = per_z.iter().map(|r| r.0).sum();
    let learner_failures = per_z.iter().map(|r| r.1).sum();
    Ok(ReduceResult {
        n,
        instances: 1 << n,
        pairs_checked: (1u64 << n) * ((1u64 << n) - 1),
        or_disagreements,
        learner_failures,
        max_queries_used: per_z.iter().map(|r| r.2).max().unwrap_or(0),
        pass: or_disagreements == 0 && learner_failures == 0,
    })
}

fn reduce(cfg: &ExperimentConfig) -> Result<Outcome, CliError> {
    let r = exhaustive_reduction(cfg.n.unwrap_or(8))?;
    let mut table = Table::new(&[
        "n",
        "instances",
        "pairs_checked",
        "or_disagreements",
        "learner_failures",
        "max_queries_used",
        "pass",
    ]);
    table.push([
        r.n.to_string(),
        r.instances.to_string(),
        r.pairs_checked.to_string(),
        r.or_disagreements.to_string(),
        r.learner_failures.to_string(),
        r.max_queries_used.to_string(),
        r.pass.to_string(),
    ]);
    let failing = if r.pass {
        vec![]
    } else {
        vec![OR_REDUCTION.to_string()]
    };
    Ok(Outcome {
        report: Report::new(cfg, failing, json!(r)),
        table,
    })
}
