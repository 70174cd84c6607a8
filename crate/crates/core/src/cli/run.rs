use super::config::{DataSpec, ExperimentConfig, ModelSpec, MomentumInit, SweepGrid};
use crate::diagnostics::{
    abc, abc_with, empirical_w1, param_error, AbcWeights, Metric, RunRecord, Trace,
};
use crate::error::{Error, Result};
use crate::extras::{RmsPropState, SubsampleSchedule};
use crate::integrators::{Algorithm, Integrator, VariantConfig};
use crate::model::{LatentModel, TinyDecoderModel, ToyHM};
use crate::state::{init_state, streams, ParticleCloud, StreamRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

/// A model instantiated from its spec together with its data.
#[derive(Clone, Debug)]
pub enum BuiltModel {
    Toyhm(ToyHM),
    Decoder(TinyDecoderModel),
}

impl BuiltModel {
    pub fn as_dyn(&self) -> &dyn LatentModel {
        match self {
            BuiltModel::Toyhm(m) => m,
            BuiltModel::Decoder(m) => m,
        }
    }

    pub fn data(&self) -> &[f64] {
        match self {
            BuiltModel::Toyhm(m) => m.y(),
            BuiltModel::Decoder(m) => m.y(),
        }
    }

    /// Closed-form maximum-likelihood estimate, when there is one.
    pub fn theta_star(&self) -> Option<Vec<f64>> {
        match self {
            BuiltModel::Toyhm(m) => Some(vec![m.mle()]),
            BuiltModel::Decoder(_) => None,
        }
    }

    pub fn default_theta0(&self, seed: u64) -> Vec<f64> {
        match self {
            BuiltModel::Toyhm(_) => vec![0.0],
            BuiltModel::Decoder(m) => m.init_theta(seed),
        }
    }

    /// `−log p_θ(y)` for ToyHM, the particle average of `−ℓ(θ, X)` otherwise.
    pub fn loss(&self, theta: &[f64], cloud: &ParticleCloud) -> f64 {
        match self {
            BuiltModel::Toyhm(m) => -m.log_marginal(theta[0]),
            BuiltModel::Decoder(m) => {
                let total: f64 = (0..cloud.len())
                    .map(|i| m.log_density(theta, cloud.x_row(i)))
                    .sum();
                -total / cloud.len() as f64
            }
        }
    }

    /// `n` draws from the model's marginal of one observation.
    pub fn sample_observations(&self, theta: &[f64], n: usize, rng: &mut StreamRng) -> Vec<f64> {
        match self {
            BuiltModel::Toyhm(m) => {
                let sd = (m.sigma2() + 1.0).sqrt();
                (0..n)
                    .map(|_| theta[0] + sd * rng.standard_normal())
                    .collect()
            }
            BuiltModel::Decoder(m) => {
                let sd = m.sigma2().sqrt();
                let mut z = vec![0.0; m.latent_dim()];
                (0..n)
                    .map(|_| {
                        rng.fill_normal(&mut z);
                        m.decode(theta, &z) + sd * rng.standard_normal()
                    })
                    .collect()
            }
        }
    }
}

/// Reads numbers from a JSON array or from text separated by commas or whitespace.
pub fn parse_numbers(text: &str) -> Result<Vec<f64>> {
    if text.trim_start().starts_with('[') {
        return serde_json::from_str(text).map_err(|e| Error::Config(format!("dataset: {e}")));
    }
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
        {
            let v = tok.parse::<f64>().map_err(|_| {
                Error::Config(format!(
                    "dataset line {}: cannot parse `{tok}`",
                    line_no + 1
                ))
            })?;
            out.push(v);
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Ok(out)
}

pub fn load_data(spec: &DataSpec) -> Result<Vec<f64>> {
    match spec {
        DataSpec::Toyhm {
            n,
            theta,
            sigma2,
            seed,
            center,
        } => {
            let mut rng = StreamRng::new(*seed, streams::DATA);
            let sd = sigma2.sqrt();
            let mut y: Vec<f64> = (0..*n)
                .map(|_| {
                    let x = theta + sd * rng.standard_normal();
                    x + rng.standard_normal()
                })
                .collect();
            if let Some(c) = center {
                let shift = c - y.iter().sum::<f64>() / *n as f64;
                y.iter_mut().for_each(|v| *v += shift);
            }
            Ok(y)
        }
        DataSpec::Mog {
            n,
            means,
            var,
            seed,
        } => {
            let mut rng = StreamRng::new(*seed, streams::DATA);
            let sd = var.sqrt();
            Ok((0..*n)
                .map(|_| {
                    let k = ((rng.uniform() * means.len() as f64) as usize).min(means.len() - 1);
                    means[k] + sd * rng.standard_normal()
                })
                .collect())
        }
        DataSpec::Values { values } => Ok(values.clone()),
        DataSpec::Path { path } => parse_numbers(&std::fs::read_to_string(path)?),
    }
}

pub fn build_model(spec: &ModelSpec) -> Result<BuiltModel> {
    let y = load_data(spec.data())?;
    Ok(match spec {
        ModelSpec::Toyhm { sigma2, .. } => BuiltModel::Toyhm(ToyHM::new(y, *sigma2)?),
        ModelSpec::Decoder {
            latent_dim,
            width,
            sigma2,
            output,
            ..
        } => BuiltModel::Decoder(TinyDecoderModel::new(
            y,
            *latent_dim,
            *width,
            *sigma2,
            *output,
        )?),
    })
}

/// Final state of a run, written as `summary.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub name: String,
    pub seed: u64,
    pub iterations_completed: u64,
    pub diverged: bool,
    pub final_metrics: BTreeMap<String, f64>,
    pub theta_final: Vec<f64>,
    pub theta_star: Option<Vec<f64>>,
    pub wallclock_seconds: f64,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub trace: Trace,
    pub summary: RunSummary,
}

impl RunOutput {
    pub fn curve(&self, m: Metric) -> Result<Vec<f64>> {
        self.trace.curve(m).ok_or_else(|| {
            Error::Incompatible(format!(
                "run `{}` did not record `{}`",
                self.summary.name,
                m.name()
            ))
        })
    }
}

struct Evaluator<'a> {
    model: &'a BuiltModel,
    metrics: &'a [Metric],
    theta_star: Option<Vec<f64>>,
    eval_samples: usize,
    seed: u64,
}

impl Evaluator<'_> {
    fn record(
        &self,
        k: u64,
        theta: &[f64],
        cloud: &ParticleCloud,
        start: Instant,
    ) -> Result<RunRecord> {
        let mut metrics = Vec::with_capacity(self.metrics.len());
        for &m in self.metrics {
            let v = match m {
                Metric::ParamError => {
                    param_error(theta, self.theta_star.as_deref().expect("checked at start"))
                }
                Metric::Loss => self.model.loss(theta, cloud),
                Metric::W1 => {
                    // Same draws at every evaluation, so curves differ only through θ.
                    let mut rng = StreamRng::new(self.seed, streams::EVAL);
                    let s = self
                        .model
                        .sample_observations(theta, self.eval_samples, &mut rng);
                    if s.iter().all(|v| v.is_finite()) {
                        empirical_w1(&s, self.model.data())?
                    } else {
                        f64::NAN
                    }
                }
            };
            metrics.push((m, v));
        }
        Ok(RunRecord {
            iteration: k,
            theta: theta.to_vec(),
            metrics,
            wallclock: start.elapsed().as_secs_f64(),
        })
    }
}

/// Runs one experiment in the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let built = build_model(&cfg.model)?;
    let model = built.as_dyn();
    let theta_star = built.theta_star();
    if cfg.metrics.contains(&Metric::ParamError) && theta_star.is_none() {
        return Err(Error::Config(format!(
            "metric param_error needs a closed-form MLE; `{}` has none",
            model.name()
        )));
    }
    let theta0 = cfg
        .theta0
        .clone()
        .unwrap_or_else(|| built.default_theta0(cfg.seed));
    let (mut state, mut cloud) = init_state(model, cfg.particles, theta0, &cfg.init, cfg.seed)?;
    if cfg.momentum_init == MomentumInit::Stationary && cfg.variant.enrich_x {
        cloud.draw_stationary_momentum(cfg.params.eta_x)?;
    }
    let mut integ = Integrator::new(cfg.params, cfg.variant)?;
    if let Some(p) = cfg.preconditioner {
        integ = integ.with_preconditioner(RmsPropState::new(model.dim_theta(), p.beta, p.eps)?);
    }
    let schedule = match cfg.subsample {
        None => None,
        Some(s) => {
            let f = model
                .factorization()
                .ok_or(Error::NonFactorizing(model.name()))?;
            Some(SubsampleSchedule::new(
                s.batch_size,
                f.n_blocks,
                s.catch_up,
            )?)
        }
    };
    let mut batch_rng = StreamRng::new(cfg.seed, streams::BATCH);
    let eval = Evaluator {
        model: &built,
        metrics: &cfg.metrics,
        theta_star: theta_star.clone(),
        eval_samples: cfg.eval_samples,
        seed: cfg.seed,
    };

    let start = Instant::now();
    let mut trace = Trace::new();
    trace.push(eval.record(0, &state.theta, &cloud, start)?)?;
    let mut done = 0;
    let mut diverged = false;
    for k in 1..=cfg.iterations {
        match &schedule {
            None => integ.step(model, &mut state, &mut cloud)?,
            Some(s) => {
                let idx = s.draw(&mut batch_rng);
                integ.subsampled_step(model, &mut state, &mut cloud, &idx, s.catch_up)?;
            }
        }
        done = k;
        diverged = !state.is_finite()
            || state.theta.iter().any(|v| v.abs() > cfg.divergence_bound)
            || !cloud.is_finite();
        if diverged || k % cfg.record_every == 0 || k == cfg.iterations {
            trace.push(eval.record(k, &state.theta, &cloud, start)?)?;
        }
        if diverged {
            break;
        }
    }
    let last = trace.last().expect("initial record");
    let summary = RunSummary {
        name: cfg.name.clone(),
        seed: cfg.seed,
        iterations_completed: done,
        diverged,
        final_metrics: last
            .metrics
            .iter()
            .map(|(m, v)| (m.name().to_string(), *v))
            .collect(),
        theta_final: state.theta.clone(),
        theta_star,
        wallclock_seconds: start.elapsed().as_secs_f64(),
        config: cfg.clone(),
    };
    Ok(RunOutput { trace, summary })
}

/// Shortest round-tripping form is not fixed-width, so floats use 17
/// significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// `iteration[,theta_0..][,metric..]` with one row per record.
pub fn trace_csv(trace: &Trace, metrics: &[Metric], with_theta: bool) -> String {
    let mut s = String::from("iteration");
    let d = trace.records().first().map_or(0, |r| r.theta.len());
    if with_theta {
        for j in 0..d {
            write!(s, ",theta_{j}").unwrap();
        }
    }
    for m in metrics {
        write!(s, ",{}", m.name()).unwrap();
    }
    s.push('\n');
    for r in trace.records() {
        write!(s, "{}", r.iteration).unwrap();
        if with_theta {
            for v in &r.theta {
                write!(s, ",{}", fmt_f64(*v)).unwrap();
            }
        }
        for m in metrics {
            write!(s, ",{}", fmt_f64(r.metric(*m).unwrap_or(f64::NAN))).unwrap();
        }
        s.push('\n');
    }
    s
}

fn timing_csv(trace: &Trace) -> String {
    let mut s = String::from("iteration,wallclock\n");
    for r in trace.records() {
        writeln!(s, "{},{}", r.iteration, fmt_f64(r.wallclock)).unwrap();
    }
    s
}

/// Writes `trace.csv`, `timing.csv` and `summary.json` into `dir`.
pub fn write_run(dir: &Path, out: &RunOutput) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let cfg = &out.summary.config;
    std::fs::write(
        dir.join("trace.csv"),
        trace_csv(&out.trace, &cfg.metrics, cfg.trace_theta),
    )?;
    std::fs::write(dir.join("timing.csv"), timing_csv(&out.trace))?;
    std::fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(&out.summary)? + "\n",
    )?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcRow {
    pub metric: Metric,
    /// Normalized weights `2k/(K(K+1))`.
    pub abc: f64,
    /// Weights `2k/(K³(K+1))`, which sum to `1/K`.
    pub abc_unnormalized: f64,
}

#[derive(Clone, Debug)]
pub struct CompareOutput {
    pub a: RunOutput,
    pub b: RunOutput,
    pub abc: Vec<AbcRow>,
}

/// Two runs are comparable when they share the model, metrics, recording
/// grid, iteration count and seed.
pub fn check_compatible(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<()> {
    let fail = |what: &str| Err(Error::Incompatible(format!("configs differ in {what}")));
    if a.model != b.model {
        return fail("model");
    }
    if a.metrics != b.metrics {
        return fail("metrics");
    }
    if a.iterations != b.iterations || a.record_every != b.record_every {
        return fail("iteration count or record_every");
    }
    if a.seed != b.seed {
        return fail("seed");
    }
    Ok(())
}

fn abc_rows(a: &RunOutput, b: &RunOutput, metrics: &[Metric]) -> Result<Vec<AbcRow>> {
    for r in [a, b] {
        if r.summary.diverged {
            return Err(Error::Incompatible(format!(
                "run `{}` diverged at iteration {}",
                r.summary.name, r.summary.iterations_completed
            )));
        }
    }
    metrics
        .iter()
        .map(|&m| {
            let (ca, cb) = (a.curve(m)?, b.curve(m)?);
            Ok(AbcRow {
                metric: m,
                abc: abc(&ca, &cb)?,
                abc_unnormalized: abc_with(&ca, &cb, AbcWeights::Unnormalized)?,
            })
        })
        .collect()
}

/// Runs both configs and scores `b` against `a`: positive ABC means `b` has the lower curve.
pub fn compare(a: &ExperimentConfig, b: &ExperimentConfig) -> Result<CompareOutput> {
    check_compatible(a, b)?;
    let ra = run_experiment(a)?;
    let rb = run_experiment(b)?;
    let abc = abc_rows(&ra, &rb, &a.metrics)?;
    Ok(CompareOutput { a: ra, b: rb, abc })
}

pub fn abc_csv(rows: &[AbcRow]) -> String {
    let mut s = String::from("metric,abc,abc_unnormalized\n");
    for r in rows {
        writeln!(
            s,
            "{},{},{}",
            r.metric.name(),
            fmt_f64(r.abc),
            fmt_f64(r.abc_unnormalized)
        )
        .unwrap();
    }
    s
}

/// Writes both runs under `dir/a` and `dir/b` and the scores to `dir/abc.csv`.
pub fn write_compare(dir: &Path, out: &CompareOutput) -> Result<()> {
    write_run(&dir.join("a"), &out.a)?;
    write_run(&dir.join("b"), &out.b)?;
    std::fs::write(dir.join("abc.csv"), abc_csv(&out.abc))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepOutput {
    pub metric: Metric,
    pub gammas: Vec<f64>,
    pub etas: Vec<f64>,
    /// `abc[i][j]` for `(gammas[i], etas[j])`; `−∞` where the momentum run diverged.
    pub abc: Vec<Vec<f64>>,
}

/// The PGD baseline of a sweep: `base` with the PGD variant.
pub fn sweep_baseline(base: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        name: format!("{}-pgd", base.name),
        variant: VariantConfig::pgd(),
        ..base.clone()
    }
}

/// The momentum run of one sweep cell, with `(γ, η)` on both components.
pub fn sweep_cell(base: &ExperimentConfig, gamma: f64, eta: f64) -> ExperimentConfig {
    let variant = if base.variant.algorithm == Algorithm::Pgd {
        VariantConfig::mpd()
    } else {
        base.variant
    };
    let mut params = base.params;
    params.gamma_theta = gamma;
    params.gamma_x = gamma;
    params.eta_theta = eta;
    params.eta_x = eta;
    ExperimentConfig {
        name: format!("{}-g{gamma}-e{eta}", base.name),
        variant,
        params,
        ..base.clone()
    }
}

/// ABC of every grid cell against one PGD baseline; cells run in parallel.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid, metric: Metric) -> Result<SweepOutput> {
    if grid.gammas.is_empty() || grid.etas.is_empty() {
        return Err(Error::Config("sweep grids must be non-empty".into()));
    }
    if !base.metrics.contains(&metric) {
        return Err(Error::Config(format!(
            "sweep metric `{}` is not recorded",
            metric.name()
        )));
    }
    let baseline = run_experiment(&sweep_baseline(base))?;
    let reference = baseline.curve(metric)?;
    let cells: Vec<(f64, f64)> = grid
        .gammas
        .iter()
        .flat_map(|&g| grid.etas.iter().map(move |&e| (g, e)))
        .collect();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|&(g, e)| {
            let r = run_experiment(&sweep_cell(base, g, e))?;
            if r.summary.diverged {
                return Ok(f64::NEG_INFINITY);
            }
            abc(&reference, &r.curve(metric)?)
        })
        .collect::<Result<_>>()?;
    Ok(SweepOutput {
        metric,
        gammas: grid.gammas.clone(),
        etas: grid.etas.clone(),
        abc: scores
            .chunks(grid.etas.len())
            .map(<[f64]>::to_vec)
            .collect(),
    })
}

/// Matrix with one row per γ and one column per η.
pub fn sweep_csv(out: &SweepOutput) -> String {
    let mut s = String::from("gamma\\eta");
    for e in &out.etas {
        write!(s, ",{}", fmt_f64(*e)).unwrap();
    }
    s.push('\n');
    for (g, row) in out.gammas.iter().zip(&out.abc) {
        s.push_str(&fmt_f64(*g));
        for v in row {
            write!(s, ",{}", fmt_f64(*v)).unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli::config::{PreconditionerSpec, SubsampleSpec};
    use crate::integrators::MomentumParams;
    use crate::state::CloudInit;

    pub(crate) fn tiny() -> ExperimentConfig {
        ExperimentConfig {
            name: "tiny".into(),
            model: ModelSpec::Toyhm {
                sigma2: 1.0,
                data: DataSpec::Toyhm {
                    n: 8,
                    theta: 3.0,
                    sigma2: 1.0,
                    seed: 5,
                    center: None,
                },
            },
            variant: VariantConfig::mpd(),
            params: MomentumParams::shared(0.7, 50.0, 1e-2, 1e-2),
            particles: 6,
            iterations: 40,
            theta0: None,
            init: CloudInit::standard_normal(),
            momentum_init: MomentumInit::Zero,
            subsample: None,
            preconditioner: None,
            metrics: vec![Metric::ParamError, Metric::Loss, Metric::W1],
            record_every: 5,
            trace_theta: true,
            eval_samples: 50,
            divergence_bound: 1e6,
            seed: 11,
            output_dir: None,
            sweep: None,
        }
    }

    #[test]
    fn zero_iterations_gives_only_the_initial_row() {
        let cfg = ExperimentConfig {
            iterations: 0,
            ..tiny()
        };
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.trace.len(), 1);
        let csv = trace_csv(&out.trace, &cfg.metrics, true);
        assert_eq!(csv.lines().count(), 2);
        assert!(csv.starts_with("iteration,theta_0,param_error,loss,w1\n0,"));
    }

    #[test]
    fn records_follow_the_grid_and_the_last_iteration() {
        let cfg = ExperimentConfig {
            iterations: 12,
            ..tiny()
        };
        let out = run_experiment(&cfg).unwrap();
        let its: Vec<u64> = out.trace.records().iter().map(|r| r.iteration).collect();
        assert_eq!(its, vec![0, 5, 10, 12]);
        assert_eq!(out.summary.iterations_completed, 12);
        assert!(!out.summary.diverged);
    }

    #[test]
    fn reruns_are_identical() {
        let cfg = tiny();
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(
            trace_csv(&a.trace, &cfg.metrics, true),
            trace_csv(&b.trace, &cfg.metrics, true)
        );
    }

    #[test]
    fn divergence_stops_the_run() {
        let cfg = ExperimentConfig {
            variant: VariantConfig::pgd(),
            params: MomentumParams::shared(0.0, 0.0, 1.0, 1.0),
            ..tiny()
        };
        let out = run_experiment(&cfg).unwrap();
        assert!(out.summary.diverged);
        assert!(out.summary.iterations_completed < cfg.iterations);
        assert_eq!(
            out.trace.last().unwrap().iteration,
            out.summary.iterations_completed
        );
    }

    #[test]
    fn param_error_needs_a_closed_form() {
        let mut cfg = tiny();
        cfg.model = ModelSpec::Decoder {
            latent_dim: 1,
            width: 3,
            sigma2: 0.1,
            output: Default::default(),
            data: DataSpec::Values {
                values: vec![0.0, 1.0],
            },
        };
        assert!(matches!(run_experiment(&cfg), Err(Error::Config(_))));
        cfg.metrics = vec![Metric::Loss, Metric::W1];
        cfg.preconditioner = Some(PreconditionerSpec::default());
        cfg.subsample = Some(SubsampleSpec {
            batch_size: 1,
            catch_up: Default::default(),
        });
        let out = run_experiment(&cfg).unwrap();
        assert!(out
            .trace
            .records()
            .iter()
            .all(|r| r.metrics.iter().all(|(_, v)| v.is_finite())));
    }

    #[test]
    fn compare_is_antisymmetric_and_zero_on_identical_configs() {
        let a = ExperimentConfig {
            variant: VariantConfig::pgd(),
            ..tiny()
        };
        let b = tiny();
        let same = compare(&b, &b).unwrap();
        assert!(same.abc.iter().all(|r| r.abc == 0.0));
        let ab = compare(&a, &b).unwrap();
        let ba = compare(&b, &a).unwrap();
        for (x, y) in ab.abc.iter().zip(&ba.abc) {
            assert_eq!(x.abc, -y.abc);
        }
        let other = ExperimentConfig { seed: 12, ..tiny() };
        assert!(matches!(compare(&a, &other), Err(Error::Incompatible(_))));
    }

    #[test]
    fn single_cell_sweep_equals_compare() {
        let base = tiny();
        let grid = SweepGrid {
            gammas: vec![0.7],
            etas: vec![50.0],
        };
        let s = sweep(&base, &grid, Metric::ParamError).unwrap();
        let c = compare(&sweep_baseline(&base), &sweep_cell(&base, 0.7, 50.0)).unwrap();
        assert_eq!(s.abc, vec![vec![c.abc[0].abc]]);
        assert_eq!(sweep_csv(&s).lines().count(), 2);
    }

    #[test]
    fn numbers_parse_from_text_and_json() {
        assert_eq!(
            parse_numbers("1, 2\n3 # note\n\n4.5e0").unwrap(),
            vec![1.0, 2.0, 3.0, 4.5]
        );
        assert_eq!(parse_numbers(" [1, -2.5]").unwrap(), vec![1.0, -2.5]);
        assert!(parse_numbers("1, x")
            .unwrap_err()
            .to_string()
            .contains("line 1"));
        assert!(parse_numbers("  \n").is_err());
    }

    #[test]
    fn generated_data_is_reproducible_and_centered() {
        let spec = DataSpec::Toyhm {
            n: 50,
            theta: 10.0,
            sigma2: 144.0,
            seed: 2,
            center: Some(10.0),
        };
        let y = load_data(&spec).unwrap();
        assert_eq!(y, load_data(&spec).unwrap());
        assert!((y.iter().sum::<f64>() / 50.0 - 10.0).abs() < 1e-12);
        let mog = load_data(&DataSpec::Mog {
            n: 400,
            means: vec![-2.0, 2.0],
            var: 0.5,
            seed: 1,
        })
        .unwrap();
        let right = mog.iter().filter(|v| **v > 0.0).count();
        assert!((150..250).contains(&right));
    }
}
