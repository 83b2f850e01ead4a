//! Monte Carlo experiment driver: seeded trials, decoder and genie-aided
//! MSEs against the Cramer-Rao bound, error-event tallies, analytical
//! bound values, and machine-readable reports.
//!
//! Per-trial randomness comes from a counter-based scheme: stream
//! `trial_index` of a ChaCha8 generator seeded with the master seed, so
//! trials are independent and the whole report is a deterministic
//! function of its configuration at any parallelism level.

pub mod cli;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, RegimeParams, RegimeReport};
use crate::decoder::{
    self, binomial, genie_estimate, joint_typicality_decode, DecoderConfig, SelectionRule,
    TypicalitySlack,
};
use crate::error::{Error, Result};
use crate::model::{self, AmplitudeRule};
use crate::subspace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Json,
    Csv,
}

fn default_rank_tol() -> f64 {
    subspace::default_rank_tol::<f64>()
}

fn default_max_subsets() -> u64 {
    decoder::DEFAULT_SUBSET_BUDGET
}

fn default_kappa() -> f64 {
    1.0
}

fn default_lmu4_threshold() -> f64 {
    10.0
}

fn default_parallelism() -> usize {
    1
}

/// Experiment configuration; the on-disk JSON rejects unknown keys.
/// Exactly one of `delta` / `zeta` must be set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub sigma2: f64,
    pub mu: f64,
    #[serde(default)]
    pub amplitude_rule: AmplitudeRule,
    #[serde(default)]
    pub delta: Option<f64>,
    #[serde(default)]
    pub zeta: Option<f64>,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default)]
    pub selection_rule: SelectionRule,
    /// Fixed-matrix mode: reuse this generator seed in every trial
    /// instead of drawing a fresh matrix per trial.
    #[serde(default)]
    pub matrix_seed: Option<u64>,
    #[serde(default = "default_rank_tol")]
    pub rank_tol: f64,
    #[serde(default = "default_max_subsets")]
    pub max_subsets: u64,
    #[serde(default = "default_kappa")]
    pub kappa: f64,
    /// Eigenvalue-concentration slack; defaults to sqrt(2 alpha).
    #[serde(default)]
    pub epsilon: Option<f64>,
    #[serde(default = "default_lmu4_threshold")]
    pub lmu4_threshold: f64,
    /// Execution detail; normalized in report echoes because it cannot
    /// affect any result.
    #[serde(default)]
    pub output_format: OutputFormat,
    /// Execution detail; normalized in report echoes because it cannot
    /// affect any result.
    #[serde(default = "default_parallelism")]
    pub parallelism: usize,
}

impl ExperimentConfig {
    /// Shape, noise, slack, and trial checks; everything except the
    /// subset budget, which only matters when decoding.
    pub fn validate_params(&self) -> Result<()> {
        if self.l == 0 || self.l >= self.m || self.l > self.n {
            return Err(Error::InvalidConfig(format!(
                "need 1 <= l <= n and l < m, got n = {}, m = {}, l = {}",
                self.n, self.m, self.l
            )));
        }
        if self.m <= 2 * self.l {
            return Err(Error::Regime {
                m: self.m,
                l: self.l,
            });
        }
        if self.sigma2 < 0.0 {
            return Err(Error::InvalidConfig("sigma2 must be nonnegative".into()));
        }
        if self.mu <= 0.0 {
            return Err(Error::InvalidConfig("mu must be positive".into()));
        }
        if self.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if self.parallelism == 0 {
            return Err(Error::InvalidConfig("parallelism must be at least 1".into()));
        }
        match (self.delta, self.zeta) {
            (Some(d), None) if d > 0.0 => {}
            (Some(_), None) => return Err(Error::InvalidConfig("delta must be positive".into())),
            (None, Some(z)) => {
                if z <= 2.0 / 3.0 || z >= 1.0 {
                    return Err(Error::ZetaRange { zeta: z });
                }
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidConfig(
                    "exactly one of delta and zeta may be set, found both".into(),
                ))
            }
            (None, None) => {
                return Err(Error::InvalidConfig(
                    "one of delta or zeta is required".into(),
                ))
            }
        }
        Ok(())
    }

    /// Parameter checks plus the exhaustive-scan subset budget.
    pub fn validate(&self) -> Result<()> {
        self.validate_params()?;
        let count = binomial(self.m, self.l);
        if count > self.max_subsets as u128 {
            return Err(Error::BudgetExceeded {
                m: self.m,
                l: self.l,
                count,
                budget: self.max_subsets,
            });
        }
        Ok(())
    }

    /// Copy with execution-only fields reset, used in report echoes so
    /// reports are byte-identical across parallelism levels.
    fn normalized(&self) -> Self {
        ExperimentConfig {
            output_format: OutputFormat::Json,
            parallelism: 1,
            ..self.clone()
        }
    }

    pub fn alpha(&self) -> f64 {
        self.l as f64 / self.n as f64
    }

    pub fn beta(&self) -> f64 {
        self.m as f64 / self.l as f64
    }

    fn epsilon_or_default(&self) -> f64 {
        self.epsilon.unwrap_or_else(|| (2.0 * self.alpha()).sqrt())
    }

    /// The regime zeta: the configured one, or the derivation default.
    fn zeta_or_default(&self) -> f64 {
        self.zeta.unwrap_or(0.8)
    }

    pub fn regime_params(&self) -> RegimeParams<f64> {
        RegimeParams {
            n: self.n,
            m: self.m,
            l: self.l,
            sigma2: self.sigma2,
            mu: self.mu,
            kappa: self.kappa,
            zeta: self.zeta_or_default(),
            epsilon: self.epsilon_or_default(),
            lmu4_threshold: self.lmu4_threshold,
        }
    }
}

/// Everything recorded about one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_index: u64,
    pub decoder_sq_err: f64,
    pub gae_sq_err: f64,
    pub support_recovered: bool,
    pub e0: bool,
    pub miss_typicality: bool,
    pub deviation: f64,
    pub crb_value: f64,
}

/// Standard error (sample standard deviation / sqrt(trials)) of each
/// empirical mean; zero for a single trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub mse_decoder: f64,
    pub mse_gae: f64,
    pub crb: f64,
    pub freq_e0: f64,
    pub freq_miss_typicality: f64,
    pub freq_support_recovered: f64,
}

/// Analytical bound values evaluated at the configuration, with the
/// nominal signal energy L mu^2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundValues {
    pub delta: f64,
    pub delta_prime: f64,
    pub miss_typicality: f64,
    /// Impostor bound for a fully disjoint support (missed energy L mu^2);
    /// absent when delta' >= L mu^2.
    pub false_typicality_disjoint: Option<f64>,
    pub eig_deviation_one_sided: f64,
    /// Union-bound constant at ||x||^2 = L mu^2; absent at alpha >= 1/8.
    pub union_bound_constant: Option<f64>,
    pub c0: f64,
    pub f_at_inv_l: f64,
    pub f_at_one: f64,
}

/// Full experiment output; a deterministic function of the configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub alpha: f64,
    pub beta: f64,
    pub empirical_mse_decoder: f64,
    pub empirical_mse_gae: f64,
    pub mean_crb: f64,
    pub gap: f64,
    pub freq_e0: f64,
    pub freq_miss_typicality: f64,
    pub freq_support_recovered: f64,
    pub standard_errors: StandardErrors,
    pub bounds: BoundValues,
    pub regime: RegimeReport<f64>,
    pub trials: Vec<TrialRecord>,
}

fn sq_err(estimate: &[f64], truth: &[f64]) -> f64 {
    estimate
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t) * (e - t))
        .sum()
}

/// Resolve the typicality slack for one trial. A configured delta is used
/// as-is; zeta derives delta from the realized minimum nonzero magnitude.
fn resolve_delta(config: &ExperimentConfig, signal_mu: f64) -> Result<f64> {
    match (config.delta, config.zeta) {
        (Some(d), None) => Ok(d),
        (None, Some(z)) => Ok(bounds::delta_from_zeta(z, signal_mu, config.n, config.l)?.0),
        _ => Err(Error::InvalidConfig(
            "exactly one of delta and zeta must be set".into(),
        )),
    }
}

/// One seeded trial: fresh matrix (unless pinned), fresh signal, fresh
/// noise; decode, genie estimate, and the per-trial CRB. Pure function of
/// (config, trial_index).
pub fn run_trial(config: &ExperimentConfig, trial_index: u64) -> Result<TrialRecord> {
    let mut stream = ChaCha8Rng::seed_from_u64(config.master_seed);
    stream.set_stream(trial_index);
    let drawn_matrix_seed = stream.next_u64();
    let signal_seed = stream.next_u64();
    let noise_seed = stream.next_u64();
    let matrix_seed = config.matrix_seed.unwrap_or(drawn_matrix_seed);

    let a = model::gen_gaussian_matrix::<f64>(config.n, config.m, matrix_seed)?;
    let x = model::gen_sparse_signal::<f64>(
        config.m,
        config.l,
        config.mu,
        config.amplitude_rule,
        signal_seed,
    )?;
    let inst = model::measure(a, x, config.sigma2, noise_seed)?;
    let i = inst.signal.support();

    let delta = resolve_delta(config, inst.signal.mu())?;
    let dconfig = DecoderConfig {
        slack: TypicalitySlack::Delta(delta),
        rank_tol: config.rank_tol,
        selection_rule: config.selection_rule,
        max_subsets: config.max_subsets,
    };
    let decoded = joint_typicality_decode(
        &inst.matrix,
        &inst.observation,
        config.l,
        config.sigma2,
        &dconfig,
    )?;
    let gae = genie_estimate(&inst.matrix, i, &inst.observation)?;
    let crb_value = bounds::crb_gae(&inst.matrix, i, config.sigma2)?;
    let miss_typicality = !decoder::is_jointly_typical_with_tol(
        &inst.matrix,
        i,
        &inst.observation,
        config.sigma2,
        delta,
        config.rank_tol,
    );

    Ok(TrialRecord {
        trial_index,
        decoder_sq_err: sq_err(&decoded.estimate, inst.signal.values()),
        gae_sq_err: sq_err(&gae, inst.signal.values()),
        support_recovered: decoded.support.as_ref() == Some(i),
        e0: decoded.e0,
        miss_typicality,
        deviation: decoded.deviation,
        crb_value,
    })
}

fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Analytical bounds at the configuration, signal energy taken as L mu^2.
pub fn bound_values(config: &ExperimentConfig) -> Result<BoundValues> {
    let (n, m, l) = (config.n, config.m, config.l);
    let mu2 = config.mu * config.mu;
    let (delta, delta_prime) = match (config.delta, config.zeta) {
        (Some(d), None) => (d, d * n as f64 / (n - l) as f64),
        (None, Some(z)) => bounds::delta_from_zeta(z, config.mu, n, l)?,
        _ => {
            return Err(Error::InvalidConfig(
                "exactly one of delta and zeta must be set".into(),
            ))
        }
    };
    let alpha = config.alpha();
    let beta = config.beta();
    let x_norm_sq = l as f64 * mu2;
    let c0 = (n - l) as f64 / (4.0 * l as f64);
    let (f_at_inv_l, f_at_one) = bounds::f_endpoints(l, beta, c0, mu2, delta_prime, config.sigma2);
    Ok(BoundValues {
        delta,
        delta_prime,
        miss_typicality: if config.sigma2 > 0.0 {
            bounds::miss_typicality_bound(n, l, config.sigma2, delta)
        } else {
            0.0
        },
        false_typicality_disjoint: (delta_prime < x_norm_sq)
            .then(|| bounds::false_typicality_bound(n, l, x_norm_sq, config.sigma2, delta_prime))
            .transpose()?,
        eig_deviation_one_sided: bounds::eig_deviation_bound(
            m,
            alpha,
            beta,
            config.epsilon_or_default(),
        ),
        union_bound_constant: (2.0 * (2.0 * alpha).sqrt() < 1.0)
            .then(|| bounds::union_bound_constant(x_norm_sq, alpha, config.sigma2))
            .transpose()?,
        c0,
        f_at_inv_l,
        f_at_one,
    })
}

/// Run all trials and aggregate. The report is identical for any
/// parallelism level.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.parallelism)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    let records: Vec<TrialRecord> = pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t))
            .collect::<Result<Vec<_>>>()
    })?;

    let column = |f: fn(&TrialRecord) -> f64| -> Vec<f64> { records.iter().map(f).collect() };
    let (empirical_mse_decoder, se_dec) = mean_and_se(&column(|r| r.decoder_sq_err));
    let (empirical_mse_gae, se_gae) = mean_and_se(&column(|r| r.gae_sq_err));
    let (mean_crb, se_crb) = mean_and_se(&column(|r| r.crb_value));
    let (freq_e0, se_e0) = mean_and_se(&column(|r| r.e0 as u8 as f64));
    let (freq_miss, se_miss) = mean_and_se(&column(|r| r.miss_typicality as u8 as f64));
    let (freq_rec, se_rec) = mean_and_se(&column(|r| r.support_recovered as u8 as f64));

    Ok(ExperimentReport {
        config: config.normalized(),
        alpha: config.alpha(),
        beta: config.beta(),
        empirical_mse_decoder,
        empirical_mse_gae,
        mean_crb,
        gap: (empirical_mse_decoder - mean_crb).abs(),
        freq_e0,
        freq_miss_typicality: freq_miss,
        freq_support_recovered: freq_rec,
        standard_errors: StandardErrors {
            mse_decoder: se_dec,
            mse_gae: se_gae,
            crb: se_crb,
            freq_e0: se_e0,
            freq_miss_typicality: se_miss,
            freq_support_recovered: se_rec,
        },
        bounds: bound_values(config)?,
        regime: bounds::validate_regime(
            &config.regime_params(),
            config.l as f64 * config.mu * config.mu,
        ),
        trials: records,
    })
}

/// Scale (n, m, l) jointly by each factor, keeping alpha and beta fixed,
/// and run one experiment per scale under the same master seed.
pub fn run_gap_sweep(
    base: &ExperimentConfig,
    scale_factors: &[u32],
) -> Result<Vec<ExperimentReport>> {
    if scale_factors.is_empty() {
        return Err(Error::InvalidConfig("no scale factors given".into()));
    }
    let mut reports = Vec::with_capacity(scale_factors.len());
    for &s in scale_factors {
        if s == 0 {
            return Err(Error::InvalidConfig("scale factors must be positive".into()));
        }
        let scaled = ExperimentConfig {
            n: base.n * s as usize,
            m: base.m * s as usize,
            l: base.l * s as usize,
            ..base.clone()
        };
        reports.push(run_experiment(&scaled)?);
    }
    Ok(reports)
}

/// Serialize a report; JSON is a single document, CSV is one row per
/// trial plus a summary row.
pub fn emit_report<W: std::io::Write>(
    report: &ExperimentReport,
    format: OutputFormat,
    writer: &mut W,
) -> Result<()> {
    match format {
        OutputFormat::Json => {
            serde_json::to_writer(&mut *writer, report)?;
            writer.write_all(b"\n")?;
        }
        OutputFormat::Csv => {
            writeln!(
                writer,
                "record,trial_index,decoder_sq_err,gae_sq_err,support_recovered,e0,\
                 miss_typicality,deviation,crb_value,gap"
            )?;
            for r in &report.trials {
                writeln!(
                    writer,
                    "trial,{},{},{},{},{},{},{},{},",
                    r.trial_index,
                    r.decoder_sq_err,
                    r.gae_sq_err,
                    r.support_recovered as u8,
                    r.e0 as u8,
                    r.miss_typicality as u8,
                    r.deviation,
                    r.crb_value,
                )?;
            }
            let mean_dev =
                report.trials.iter().map(|r| r.deviation).sum::<f64>() / report.trials.len() as f64;
            writeln!(
                writer,
                "summary,{},{},{},{},{},{},{},{},{}",
                report.trials.len(),
                report.empirical_mse_decoder,
                report.empirical_mse_gae,
                report.freq_support_recovered,
                report.freq_e0,
                report.freq_miss_typicality,
                mean_dev,
                report.mean_crb,
                report.gap,
            )?;
        }
    }
    Ok(())
}

/// Parse a JSON report produced by [`emit_report`].
pub fn load_report_json<R: std::io::Read>(reader: R) -> Result<ExperimentReport> {
    Ok(serde_json::from_reader(reader)?)
}
