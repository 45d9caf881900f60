//! Monte Carlo experiments: recovery-error curves against the recovery
//! bound, and deviation frequencies against the count and `p̂` bounds.
//!
//! Replicate `r` at grid index `i` always uses the seed
//! [`child_seed`]`(seed, i, r)`, and results are merged in replicate order,
//! so outputs do not depend on the number of worker threads.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::alphabet::Word;
use crate::analysis::{
    count_deviation_bound, phat_deviation_bound, recovery_bound, Analyzer, RecoveryConstants,
};
use crate::counts::CountTrie;
use crate::error::{Error, Result};
use crate::estimator::{estimate, trees_equal_truncated, EstimationParams};
use crate::model::{Model, ModelSpec};
use crate::sampler::{child_seed, Sampler, MIN_BURN_IN};

/// Header of the recovery CSV.
pub const CSV_HEADER: &str = "n,failures,R,error_freq,stderr,bound,vacuous,config_hash";

/// A model given inline or as a path to its JSON file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSource {
    Inline(ModelSpec),
    Path(PathBuf),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AutoKeyword {
    #[serde(rename = "auto")]
    Auto,
}

/// A parameter fixed by value or derived from the model with `"auto"`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting<T> {
    Fixed(T),
    Auto(AutoKeyword),
}

impl<T: Copy> Setting<T> {
    fn fixed(&self) -> Option<T> {
        match self {
            Setting::Fixed(v) => Some(*v),
            Setting::Auto(_) => None,
        }
    }
}

fn default_burn_in() -> usize {
    MIN_BURN_IN
}

/// Recovery experiment configuration, as read from JSON.
///
/// `d = "auto"` uses the minimal admissible depth for `K`; `delta = "auto"`
/// uses `D_d / 2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelSource,
    pub n_grid: Vec<usize>,
    pub delta: Setting<f64>,
    pub d: Setting<usize>,
    #[serde(rename = "K")]
    pub level: usize,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Not part of the configuration hash.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Loads a configuration; a model path is resolved against the
    /// configuration file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg = Self::from_json(&std::fs::read_to_string(path)?)?;
        if let (ModelSource::Path(p), Some(dir)) = (&cfg.model, path.parent()) {
            if p.is_relative() {
                cfg.model = ModelSource::Path(dir.join(p));
            }
        }
        Ok(cfg)
    }

    /// Loads the model, fills in `"auto"` settings and checks every
    /// parameter.
    pub fn resolve(&self) -> Result<Experiment> {
        let model = match &self.model {
            ModelSource::Inline(spec) => Model::from_spec(spec)?,
            ModelSource::Path(p) => Model::load(p)?,
        };
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("R must be at least 1".into()));
        }
        if self.level == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::InvalidConfig(
                "n_grid must be non-empty and strictly increasing".into(),
            ));
        }
        let analyzer = Analyzer::new(&model)?;
        let d = match self.d.fixed() {
            Some(d) => d,
            None => analyzer.minimal_depth(self.level)?,
        };
        if d == 0 {
            return Err(Error::InvalidConfig("d must be at least 1".into()));
        }
        if self.n_grid[0] <= d {
            return Err(Error::DegenerateSample {
                n: self.n_grid[0],
                depth: d,
            });
        }
        let delta = match self.delta.fixed() {
            Some(x) => x,
            None => {
                let gap = analyzer.divergence_set(d)?.d_gap;
                if !gap.is_finite() {
                    return Err(Error::PreconditionViolation(format!(
                        "delta = \"auto\" needs D_{d}, but no word of the truncated tree diverges"
                    )));
                }
                gap / 2.0
            }
        };
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "delta = {delta} must be positive"
            )));
        }
        let hash = config_hash(self, &model);
        drop(analyzer);
        Ok(Experiment {
            model,
            n_grid: self.n_grid.clone(),
            delta,
            d,
            level: self.level,
            replicates: self.replicates,
            seed: self.seed,
            burn_in: self.burn_in,
            hash,
        })
    }
}

/// First 16 hex digits of the SHA-256 of the configuration (output path
/// excluded) and the resolved model.
pub fn config_hash(config: &ExperimentConfig, model: &Model) -> String {
    #[derive(Serialize)]
    struct Canonical<'a> {
        model: ModelSpec,
        n_grid: &'a [usize],
        delta: Setting<f64>,
        d: Setting<usize>,
        #[serde(rename = "K")]
        level: usize,
        #[serde(rename = "R")]
        replicates: usize,
        seed: u64,
        burn_in: usize,
    }
    let canonical = Canonical {
        model: model.to_spec(),
        n_grid: &config.n_grid,
        delta: config.delta,
        d: config.d,
        level: config.level,
        replicates: config.replicates,
        seed: config.seed,
        burn_in: config.burn_in,
    };
    let bytes = serde_json::to_vec(&canonical).expect("configuration serializes");
    Sha256::digest(bytes)[..8]
        .iter()
        .fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// A resolved recovery experiment.
#[derive(Clone, Debug)]
pub struct Experiment {
    pub model: Model,
    pub n_grid: Vec<usize>,
    pub delta: f64,
    pub d: usize,
    pub level: usize,
    pub replicates: usize,
    pub seed: u64,
    pub burn_in: usize,
    pub hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryRow {
    pub n: usize,
    pub failures: usize,
    #[serde(rename = "R")]
    pub replicates: usize,
    pub error_freq: f64,
    pub stderr: f64,
    /// `None` where a precondition of the bound fails.
    pub bound: Option<f64>,
    pub vacuous: Option<bool>,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RecoveryCurve {
    pub delta: f64,
    pub d: usize,
    #[serde(rename = "K")]
    pub level: usize,
    pub rows: Vec<RecoveryRow>,
}

impl RecoveryCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            let bound = r.bound.map(|b| b.to_string()).unwrap_or_default();
            let vacuous = r.vacuous.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.n,
                r.failures,
                r.replicates,
                r.error_freq,
                r.stderr,
                bound,
                vacuous,
                r.config_hash
            );
        }
        out
    }
}

/// Binomial standard error `√(f(1−f)/R)`.
pub fn binomial_stderr(freq: f64, replicates: usize) -> f64 {
    (freq * (1.0 - freq) / replicates as f64).sqrt()
}

/// Whether the estimate from one sampled replicate misses `τ|_K`.
fn replicate_fails(exp: &Experiment, sampler: &Sampler<'_>, n: usize, seed: u64) -> Result<bool> {
    let sample = sampler.sample(n, seed, exp.burn_in)?;
    let trie = CountTrie::build(sample.alphabet(), sample.symbols(), exp.d)?;
    let est = estimate(&trie, EstimationParams::new(exp.delta, exp.d))?;
    Ok(!trees_equal_truncated(
        &est.tree,
        &exp.model.truncation(exp.level),
        exp.level,
    ))
}

/// Runs every replicate at every `n` and tabulates failures and bounds.
pub fn run_recovery_experiment(exp: &Experiment) -> Result<RecoveryCurve> {
    let sampler = Sampler::new(&exp.model)?;
    let consts = recovery_constants(exp)?;
    let mut rows = Vec::with_capacity(exp.n_grid.len());
    for (i, &n) in exp.n_grid.iter().enumerate() {
        let outcomes = (0..exp.replicates)
            .into_par_iter()
            .map(|r| replicate_fails(exp, &sampler, n, child_seed(exp.seed, i as u64, r as u64)))
            .collect::<Result<Vec<bool>>>()?;
        let failures = outcomes.iter().filter(|&&f| f).count();
        let error_freq = failures as f64 / exp.replicates as f64;
        let bound = match &consts {
            Some(c) => match recovery_bound(c, exp.d, exp.delta, n) {
                Ok(b) => Some(b),
                Err(e) if e.is_precondition() => None,
                Err(e) => return Err(e),
            },
            None => None,
        };
        rows.push(RecoveryRow {
            n,
            failures,
            replicates: exp.replicates,
            error_freq,
            stderr: binomial_stderr(error_freq, exp.replicates),
            bound,
            vacuous: bound.map(|b| b >= 1.0),
            config_hash: exp.hash.clone(),
        });
    }
    Ok(RecoveryCurve {
        delta: exp.delta,
        d: exp.d,
        level: exp.level,
        rows,
    })
}

/// `None` when the model itself violates a hypothesis of the bound.
fn recovery_constants(exp: &Experiment) -> Result<Option<RecoveryConstants>> {
    let analyzer = Analyzer::new(&exp.model)?;
    match analyzer.recovery_constants(exp.level, exp.d) {
        Ok(c) => Ok(Some(c)),
        Err(e) if e.is_precondition() => Ok(None),
        Err(e) => Err(e),
    }
}

/// One threshold of a deviation experiment.
///
/// `t_phat = t / ((n − ℓ(w)) p(w))` is the matching threshold on the
/// transition probability scale.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DeviationRow {
    pub t: f64,
    pub freq_count: f64,
    pub bound_count: f64,
    pub t_phat: f64,
    pub freq_phat: f64,
    pub bound_phat: Option<f64>,
}

/// Deviation frequencies of `N_n(wa)` and `p̂_n(a|w)` over `replicates`
/// samples, next to their bounds.
pub fn run_deviation_experiment(
    model: &Model,
    w: &Word,
    a: u8,
    n: usize,
    t_grid: &[f64],
    replicates: usize,
    seed: u64,
) -> Result<Vec<DeviationRow>> {
    if replicates < 100 {
        return Err(Error::InvalidConfig(format!(
            "R = {replicates} must be at least 100"
        )));
    }
    if n <= w.len() + 1 {
        return Err(Error::DegenerateSample { n, depth: w.len() });
    }
    let analyzer = Analyzer::new(model)?;
    let wa = w.append(a);
    let span = (n - w.len()) as f64;
    let p_w = analyzer.word_probability(w);
    let p_wa = analyzer.word_probability(&wa);
    let p_cond = analyzer.conditional_probability(a, w)?;
    let sampler = Sampler::new(model)?;
    let draws = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let s = sampler.sample(n, child_seed(seed, 0, r as u64), MIN_BURN_IN)?;
            let trie = CountTrie::build(s.alphabet(), s.symbols(), w.len())?;
            let count_dev = (trie.count(&wa)? as f64 - span * p_wa).abs();
            let phat_dev = (trie.empirical_prob(a, w)? - p_cond).abs();
            Ok((count_dev, phat_dev))
        })
        .collect::<Result<Vec<(f64, f64)>>>()?;
    let c = analyzer.c_constant()?;
    let k = model.alphabet().len();
    t_grid
        .iter()
        .map(|&t| {
            let t_phat = t / (span * p_w);
            let exceed = |f: fn(&(f64, f64)) -> f64, thr: f64| {
                draws.iter().filter(|x| f(x) > thr).count() as f64 / replicates as f64
            };
            let bound_count = if t > 0.0 {
                count_deviation_bound(c, w.len(), t, n)?
            } else {
                f64::INFINITY
            };
            let bound_phat = match phat_deviation_bound(c, k, w.len(), p_w, t_phat, n) {
                Ok(b) => Some(b),
                Err(e) if e.is_precondition() => None,
                Err(e) => return Err(e),
            };
            Ok(DeviationRow {
                t,
                freq_count: exceed(|x| x.0, t),
                bound_count,
                t_phat,
                freq_phat: exceed(|x| x.1, t_phat),
                bound_phat,
            })
        })
        .collect()
}
