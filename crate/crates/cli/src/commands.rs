//! The three batch commands.

use std::sync::Arc;

use dualdiv::divergence::{DivergenceGenerator, PowerGenerator};
use dualdiv::dual::DualCriterion;
use dualdiv::estim::{estimate, EstimationResult, EstimatorSpec};
use dualdiv::models::{draw_sample, mle, read_csv, ParametricModel, Sample};
use dualdiv::numerics::{maximize, OptimError};
use dualdiv::verify::{
    default_cases, run_suite, Measurement, SuiteCase, SuiteSettings, VerificationReport, SUITE_GAMMAS,
};
use log::{info, warn};
use rayon::prelude::*;

use crate::config::{Format, RunConfig};
use crate::report::{param_columns, param_fields, Field, Table};

/// A command failure that prevents any report from being written.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Data(String),
}

/// What a command produced, plus the flags that decide the exit status.
pub struct Outcome {
    pub report: Report,
    pub non_converged: bool,
    pub checks_failed: bool,
}

pub enum Report {
    Table(Table),
    /// Pre-rendered lines, one per record.
    Lines(Vec<String>),
}

impl Report {
    pub fn write(&self, format: Format, out: &mut dyn std::io::Write) -> std::io::Result<()> {
        match self {
            Report::Table(t) => t.write(format, out),
            Report::Lines(lines) => {
                for line in lines {
                    writeln!(out, "{line}")?;
                }
                out.flush()
            }
        }
    }
}

pub fn run(cfg: &RunConfig, format: Format) -> Result<Outcome, Failure> {
    match cfg.command {
        crate::config::Command::Estimate => run_estimate(cfg),
        crate::config::Command::Simulate => run_simulate(cfg),
        crate::config::Command::Verify => run_verify(cfg, format),
    }
}

fn criterion_for(cfg: &RunConfig, model: &Arc<dyn ParametricModel>, gamma: f64) -> Result<DualCriterion, Failure> {
    let generator: Arc<dyn DivergenceGenerator> =
        Arc::new(PowerGenerator::new(gamma).map_err(|e| Failure::Config(e.to_string()))?);
    Ok(DualCriterion::new(generator, Arc::clone(model), cfg.quad))
}

fn criteria(cfg: &RunConfig, model: &Arc<dyn ParametricModel>, gammas: &[f64]) -> Result<Vec<DualCriterion>, Failure> {
    gammas.iter().map(|&g| criterion_for(cfg, model, g)).collect()
}

pub fn run_estimate(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let model = cfg.build_model().expect("validated");
    let path = &cfg.data.as_ref().expect("validated").path;
    let sample = read_csv(path, model.obs_dim()).map_err(|e| Failure::Data(e.to_string()))?;
    sample.validate_for(model.as_ref()).map_err(|e| Failure::Data(e.to_string()))?;
    let gammas = cfg.gammas().expect("validated");
    let criteria = criteria(cfg, &model, gammas)?;
    let spec = cfg.estimator();
    info!("estimating {} on {} observations for {} values of gamma", model.label(), sample.len(), gammas.len());

    let d = model.param_dim();
    let mut columns: Vec<String> = ["record", "model", "generator", "gamma"].map(String::from).to_vec();
    columns.extend(param_columns("theta_hat", d));
    columns.extend(param_columns("alpha_hat", d));
    columns.extend(
        [
            "criterion_value",
            "min_inner_value",
            "converged",
            "at_boundary",
            "inner_iterations",
            "outer_iterations",
            "outer_evaluations",
            "n",
            "provenance",
            "note",
        ]
        .map(String::from),
    );
    let mut table = Table::new(columns);

    let results: Vec<_> = criteria.par_iter().map(|c| estimate(c, &sample, &spec)).collect();
    let mut non_converged = false;
    for ((c, &gamma), res) in criteria.iter().zip(gammas).zip(results) {
        let mut row: Vec<Field> =
            vec!["estimate".into(), model.label().into(), c.generator().label().into(), gamma.into()];
        match res {
            Ok(r) => {
                if !r.converged() {
                    warn!("gamma={gamma}: optimizer did not converge");
                    non_converged = true;
                }
                row.extend(param_fields(Some(&r.theta_hat), d));
                row.extend(param_fields(Some(&r.alpha_hat), d));
                row.extend(result_tail(&r, sample.len()));
                row.push(Field::Empty);
            }
            Err(e) => {
                warn!("gamma={gamma}: {e}");
                non_converged = true;
                row.extend(param_fields(None, 2 * d));
                row.extend([
                    Field::Empty,
                    Field::Empty,
                    false.into(),
                    Field::Empty,
                    Field::Empty,
                    Field::Empty,
                    Field::Empty,
                ]);
                row.extend([sample.len().into(), sample.provenance().to_string().into(), e.to_string().into()]);
            }
        }
        table.push(row);
    }

    if let Some(family) = model.as_exponential_family() {
        let mut row: Vec<Field> = vec!["mle".into(), model.label().into(), Field::Empty, Field::Empty];
        let fit = mle(family, &sample);
        row.extend(param_fields(fit.as_ref().ok().map(Vec::as_slice), d));
        row.extend(param_fields(None, d));
        row.extend([Field::Empty, Field::Empty, fit.is_ok().into()]);
        row.extend([Field::Empty, Field::Empty, Field::Empty, Field::Empty]);
        row.extend([sample.len().into(), sample.provenance().to_string().into()]);
        match fit {
            Ok(_) => row.push(Field::Empty),
            Err(e) => {
                warn!("maximum likelihood: {e}");
                non_converged = true;
                row.push(e.to_string().into());
            }
        }
        table.push(row);
    }
    Ok(Outcome { report: Report::Table(table), non_converged, checks_failed: false })
}

fn result_tail(r: &EstimationResult, n: usize) -> Vec<Field> {
    vec![
        r.criterion_value.into(),
        r.min_inner_value.into(),
        r.converged().into(),
        r.at_boundary().into(),
        r.inner_diagnostics.iterations.into(),
        r.outer_diagnostics.iterations.into(),
        r.outer_diagnostics.evaluations.into(),
        n.into(),
        r.provenance.clone().into(),
    ]
}

/// The likelihood maximizer: closed-form Newton solve on exponential
/// families, otherwise a derivative-free search from the moment estimate.
fn likelihood_estimate(model: &dyn ParametricModel, sample: &Sample, spec: &EstimatorSpec) -> Result<Vec<f64>, String> {
    if let Some(family) = model.as_exponential_family() {
        return mle(family, sample).map_err(|e| e.to_string());
    }
    let loglik = |theta: &[f64]| sample.points().map(|x| model.log_density(theta, x)).sum::<f64>();
    let start = model.param_domain().project(&model.moment_estimate(sample));
    match maximize(&loglik, &model.param_domain(), &start, &spec.outer) {
        Ok(o) => Ok(o.argmax),
        Err(OptimError::IterationCap { best }) => Ok(best.argmax),
        Err(e) => Err(e.to_string()),
    }
}

struct Replicate {
    seed: u64,
    sample: Sample,
    theta_ml: Result<Vec<f64>, String>,
}

pub fn run_simulate(cfg: &RunConfig) -> Result<Outcome, Failure> {
    let model = cfg.build_model().expect("validated");
    let sim = cfg.simulation.as_ref().expect("validated");
    let theta_t = sim.theta_true.to_vec();
    let spec = cfg.estimator();
    let mut gammas = cfg.gammas().expect("validated").to_vec();
    gammas.sort_by(f64::total_cmp);
    let criteria = criteria(cfg, &model, &gammas)?;
    let mut seeds = sim.seeds.clone();
    seeds.sort_unstable();
    info!("simulating {} seeds x {} gammas at n={}", seeds.len(), gammas.len(), sim.n);

    let replicates: Vec<Replicate> = seeds
        .par_iter()
        .map(|&seed| {
            let sample =
                draw_sample(model.as_ref(), &theta_t, sim.n, seed).map_err(|e| Failure::Data(e.to_string()))?;
            let theta_ml = likelihood_estimate(model.as_ref(), &sample, &spec);
            Ok(Replicate { seed, sample, theta_ml })
        })
        .collect::<Result<_, Failure>>()?;
    let jobs: Vec<(usize, usize)> =
        (0..replicates.len()).flat_map(|r| (0..criteria.len()).map(move |g| (r, g))).collect();
    let results: Vec<_> = jobs.par_iter().map(|&(r, g)| estimate(&criteria[g], &replicates[r].sample, &spec)).collect();

    let d = model.param_dim();
    let mut columns: Vec<String> = ["record", "seed", "gamma"].map(String::from).to_vec();
    columns.extend(param_columns("theta_hat", d));
    columns.extend(param_columns("theta_ml", d));
    columns.extend(
        ["deviation", "criterion_value", "converged", "replicates", "excluded", "max_deviation", "note"]
            .map(String::from),
    );
    let mut table = Table::new(columns);

    let mut non_converged = false;
    let mut summaries = vec![(0usize, 0usize, 0f64, true); gammas.len()];
    for (&(r, g), res) in jobs.iter().zip(&results) {
        let rep = &replicates[r];
        let mut row: Vec<Field> = vec!["replicate".into(), rep.seed.into(), gammas[g].into()];
        let theta_ml = rep.theta_ml.as_ref().ok();
        let summary = &mut summaries[g];
        summary.0 += 1;
        let mut notes = Vec::new();
        if let Err(e) = &rep.theta_ml {
            notes.push(format!("no likelihood estimate: {e}"));
        }
        match res {
            Ok(est) => {
                let deviation =
                    theta_ml.map(|ml| est.theta_hat.iter().zip(ml).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
                row.extend(param_fields(Some(&est.theta_hat), d));
                row.extend(param_fields(theta_ml.map(Vec::as_slice), d));
                row.extend([deviation.into(), est.criterion_value.into(), est.converged().into()]);
                if !est.converged() {
                    non_converged = true;
                    summary.3 = false;
                }
                match deviation {
                    Some(dev) => summary.2 = summary.2.max(dev),
                    None => summary.1 += 1,
                }
            }
            Err(e) => {
                non_converged = true;
                summary.1 += 1;
                summary.3 = false;
                notes.push(e.to_string());
                row.extend(param_fields(None, d));
                row.extend(param_fields(theta_ml.map(Vec::as_slice), d));
                row.extend([Field::Empty, Field::Empty, false.into()]);
            }
        }
        row.extend([Field::Empty, Field::Empty, Field::Empty, notes.join("; ").into()]);
        table.push(row);
    }
    for (g, &(count, excluded, max_dev, converged)) in summaries.iter().enumerate() {
        let mut row: Vec<Field> = vec!["summary".into(), Field::Empty, gammas[g].into()];
        row.extend(param_fields(None, 2 * d));
        row.extend([Field::Empty, Field::Empty, converged.into(), count.into(), excluded.into()]);
        row.push(if count > excluded { max_dev.into() } else { Field::Empty });
        row.push(Field::Empty);
        table.push(row);
    }
    Ok(Outcome { report: Report::Table(table), non_converged, checks_failed: false })
}

pub fn run_verify(cfg: &RunConfig, format: Format) -> Result<Outcome, Failure> {
    let cases = verify_cases(cfg)?;
    let mut settings = SuiteSettings { n: cfg.verify.n, seed: cfg.verify.seed, ..SuiteSettings::default() };
    settings.gammas = cfg.gammas().map_or_else(|| SUITE_GAMMAS.to_vec(), <[f64]>::to_vec);
    if let Some(checks) = &cfg.verify.checks {
        settings.checks = checks.clone();
    }
    info!("running {} checks over {} cases and {} gammas", settings.checks.len(), cases.len(), settings.gammas.len());
    let reports = run_suite(&cases, &settings, &cfg.quad, &cfg.verify_spec()).map_err(Failure::Config)?;
    let checks_failed = reports.iter().any(|r| !r.passed());
    for r in reports.iter().filter(|r| !r.passed()) {
        warn!("{} {} {}: {:?}", r.check, r.model, r.generator, r.status);
    }
    let report = match format {
        Format::Json => Report::Lines(reports.iter().map(VerificationReport::to_json_line).collect()),
        Format::Csv => Report::Table(verify_table(&reports)),
    };
    Ok(Outcome { report, non_converged: false, checks_failed })
}

fn verify_cases(cfg: &RunConfig) -> Result<Vec<SuiteCase>, Failure> {
    let Some(model) = cfg.build_model() else {
        return Ok(default_cases());
    };
    let v = &cfg.verify;
    if let (Some(theta), Some(theta_t), Some(grid)) = (&v.theta, &v.theta_t, &v.grid) {
        return Ok(vec![SuiteCase {
            model,
            theta: theta.to_vec(),
            theta_t: theta_t.to_vec(),
            grid: grid.iter().map(|p| p.to_vec()).collect(),
        }]);
    }
    let label = model.label();
    let cases: Vec<SuiteCase> = default_cases().into_iter().filter(|c| c.model.label() == label).collect();
    if cases.is_empty() {
        return Err(Failure::Config(format!(
            "no default verification case for {label}; give verify.theta, verify.theta_t and verify.grid"
        )));
    }
    Ok(cases)
}

/// One row per measurement, gating and diagnostic alike.
fn verify_table(reports: &[VerificationReport]) -> Table {
    let columns = [
        "check",
        "model",
        "generator",
        "gamma",
        "status",
        "role",
        "quantity",
        "basis",
        "error",
        "tolerance",
        "pass",
        "measured",
        "expected",
        "note",
    ];
    let mut table = Table::new(columns.map(String::from).to_vec());
    let join = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ");
    for r in reports {
        let status = serde_json::to_value(r.status).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
        let head = |role: &str, m: Option<&Measurement>| -> Vec<Field> {
            let mut row: Vec<Field> = vec![
                r.check.clone().into(),
                r.model.clone().into(),
                r.generator.clone().into(),
                r.gamma.into(),
                status.clone().into(),
                role.into(),
            ];
            match m {
                Some(m) => row.extend([
                    m.quantity.clone().into(),
                    m.basis.clone().into(),
                    m.error.into(),
                    m.tolerance.into(),
                    m.pass.into(),
                    join(&m.measured).into(),
                    join(&m.expected).into(),
                ]),
                None => row.extend(std::iter::repeat_n(Field::Empty, 7)),
            }
            row.push(r.note.clone().map_or(Field::Empty, Field::Text));
            row
        };
        if r.measurements.is_empty() && r.diagnostics.is_empty() {
            table.push(head("", None));
        }
        for m in &r.measurements {
            table.push(head("gate", Some(m)));
        }
        for m in &r.diagnostics {
            table.push(head("diagnostic", Some(m)));
        }
    }
    table
}
