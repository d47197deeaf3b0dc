//! Monte Carlo sweeps over (precoder, resolution, allocator, SNR) grids.
//!
//! Every trial draws one channel from its own RNG stream, so results are
//! identical for any thread count. Precoders are built from the estimated
//! channel when an imperfect-CSI model is configured, while rates are always
//! evaluated on the drawn channel.

mod analysis;
mod config;
mod output;

use std::path::PathBuf;

use rayon::prelude::*;

use crate::channel::{rng_stream, ChannelSet, CsiTransform, Purpose};
use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::poweralloc::{AllocationProblem, PowerAllocator};
use crate::precoder::{set_power_loading, BlockCache, PrecodeParams, Precoder, PrecodingScheme};
use crate::quantizer::{build_quantizer, QuantizerSpec, Resolution};
use crate::rates::{db_to_linear, exact_cqa_rate, RateInputs};
use crate::registry::Registry;

pub use analysis::{compare_hierarchy, horizontal_gap_db, paired_one_sided, HierarchyReport, PairTest, SnrRanking};
pub use config::ScenarioConfig;
pub use output::{channel_file, dump_channels, format_sig, load_channel, write_csv, CSV_HEADER};

/// Identifies one curve of a sweep.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CurveKey {
    pub precoder: String,
    pub bits: Resolution,
    pub power_alloc: String,
}

impl CurveKey {
    pub fn new(precoder: &str, bits: Resolution, power_alloc: &str) -> Self {
        Self { precoder: precoder.to_string(), bits, power_alloc: power_alloc.to_string() }
    }

    pub fn label(&self) -> String {
        format!("{}-{}-{}", self.precoder, self.bits.label(), self.power_alloc)
    }

    fn matches(&self, r: &RateResult) -> bool {
        self.bits == r.bits
            && self.precoder.eq_ignore_ascii_case(&r.precoder)
            && self.power_alloc.eq_ignore_ascii_case(&r.power_alloc)
    }
}

/// Aggregate of one grid cell.
#[derive(Debug, Clone, PartialEq)]
pub struct RateResult {
    pub scenario_id: String,
    pub snr_db: f64,
    pub precoder: String,
    pub bits: Resolution,
    pub power_alloc: String,
    pub trials: usize,
    /// Mean over the trials that evaluated successfully; NaN if none did.
    pub mean_rate: f64,
    pub stderr: f64,
    /// Trials whose evaluation returned an error.
    pub failed: usize,
    /// Trials in which the allocator fell back to classical waterfilling.
    pub fallbacks: usize,
    /// Per-trial rates in trial order, NaN where the evaluation failed.
    pub samples: Vec<f64>,
}

impl RateResult {
    pub fn key(&self) -> CurveKey {
        CurveKey::new(&self.precoder, self.bits, &self.power_alloc)
    }

    pub fn successes(&self) -> usize {
        self.trials - self.failed
    }
}

/// Where the per-trial channels come from.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum ChannelSource {
    #[default]
    Generated,
    /// Files written by [`dump_channels`], one per trial.
    Directory(PathBuf),
}

/// Fraction of failed evaluations over all cells and trials.
pub fn failure_fraction(results: &[RateResult]) -> f64 {
    let total: usize = results.iter().map(|r| r.trials).sum();
    let failed: usize = results.iter().map(|r| r.failed).sum();
    if total == 0 {
        0.0
    } else {
        failed as f64 / total as f64
    }
}

struct Cell<'a> {
    precoder: usize,
    resolution: usize,
    allocator: &'a dyn PowerAllocator,
    snr: usize,
}

struct Outcome {
    rate: Result<f64>,
    fallback: bool,
}

struct Plan<'a> {
    cfg: &'a ScenarioConfig,
    schemes: Vec<&'a dyn PrecodingScheme>,
    quantizers: Vec<QuantizerSpec>,
    cells: Vec<Cell<'a>>,
    csi: Option<CsiTransform>,
}

impl<'a> Plan<'a> {
    fn new(cfg: &'a ScenarioConfig, registry: &'a Registry) -> Result<Self> {
        cfg.validate()?;
        let schemes = cfg.precoders.iter().map(|n| registry.precoder(n)).collect::<Result<Vec<_>>>()?;
        let allocators = cfg.power_alloc.iter().map(|n| registry.allocator(n)).collect::<Result<Vec<_>>>()?;
        let quantizers =
            cfg.bits.iter().map(|&r| build_quantizer(r, cfg.nb, cfg.total_power())).collect::<Result<Vec<_>>>()?;
        let mut cells = Vec::new();
        for (pi, scheme) in schemes.iter().enumerate() {
            for ri in 0..quantizers.len() {
                for &allocator in &allocators {
                    if !scheme.kind().supports_power_loading() && !allocator.is_uniform() {
                        continue;
                    }
                    for si in 0..cfg.snr_db.len() {
                        cells.push(Cell { precoder: pi, resolution: ri, allocator, snr: si });
                    }
                }
            }
        }
        let csi = cfg.csi.map(|m| CsiTransform::new(m, cfg.nb)).transpose()?;
        Ok(Self { cfg, schemes, quantizers, cells, csi })
    }

    fn draw(&self, trial: usize, source: &ChannelSource) -> Result<ChannelSet> {
        let partition = self.cfg.partition();
        match source {
            ChannelSource::Generated => ChannelSet::sample(
                self.cfg.nb,
                &partition,
                &mut rng_stream(self.cfg.seed, trial as u64, Purpose::Channel),
            ),
            ChannelSource::Directory(dir) => load_channel(dir, trial, self.cfg.nb, &partition),
        }
    }

    fn run_trial(&self, trial: usize, truth: &ChannelSet) -> Vec<Outcome> {
        let estimate = match &self.csi {
            Some(t) => t.apply(truth, &mut rng_stream(self.cfg.seed, trial as u64, Purpose::CsiError)),
            None => Ok(truth.clone()),
        };
        let estimate = match estimate {
            Ok(e) => e,
            Err(e) => return self.cells.iter().map(|_| Outcome { rate: Err(e.clone()), fallback: false }).collect(),
        };
        let h_true = truth.stacked();
        let cache = BlockCache::new();
        let nu = self.cfg.nu();
        let p_total = self.cfg.total_power();
        let mut built: Vec<Option<Result<Precoder>>> = vec![None; self.schemes.len() * self.cfg.snr_db.len()];
        self.cells
            .iter()
            .map(|cell| {
                let snr = db_to_linear(self.cfg.snr_db[cell.snr]);
                let slot = &mut built[cell.precoder * self.cfg.snr_db.len() + cell.snr];
                let pre = slot.get_or_insert_with(|| {
                    self.schemes[cell.precoder].build(&estimate, &cache, PrecodeParams { p_total, n0: nu as f64 / snr })
                });
                match pre {
                    Ok(pre) => evaluate(pre, cell.allocator, &self.quantizers[cell.resolution], snr, nu, &h_true),
                    Err(e) => Outcome { rate: Err(e.clone()), fallback: false },
                }
            })
            .collect()
    }
}

fn evaluate(
    pre: &Precoder,
    allocator: &dyn PowerAllocator,
    q: &QuantizerSpec,
    snr: f64,
    nu: usize,
    h_true: &CMatrix,
) -> Outcome {
    let mut fallback = false;
    let rate = (|| {
        let loaded;
        let p = if pre.kind.supports_power_loading() {
            let problem = AllocationProblem {
                phi2: pre.pooled_gains(),
                nu,
                snr,
                delta: if allocator.quantization_aware() { q.delta } else { 1.0 },
                p_total: pre.p_total,
            };
            let alloc = allocator.allocate(&problem)?;
            fallback = alloc.fallback_used;
            loaded = set_power_loading(pre, &pre.split_pooled(&alloc.omega)?)?;
            &loaded.p_matrix
        } else {
            &pre.p_matrix
        };
        exact_cqa_rate(&RateInputs { h: h_true, p, delta: q.delta, snr, nu })
    })();
    Outcome { rate, fallback }
}

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let ok: Vec<f64> = xs.iter().copied().filter(|x| x.is_finite()).collect();
    let n = ok.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = ok.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = ok.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Runs a sweep with the default registry and generated channels.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<Vec<RateResult>> {
    run_scenario_with(cfg, &Registry::with_defaults(), &ChannelSource::Generated)
}

/// Runs a sweep. Configuration and lookup errors abort; numerical errors in
/// individual cells are counted in [`RateResult::failed`].
pub fn run_scenario_with(cfg: &ScenarioConfig, registry: &Registry, source: &ChannelSource) -> Result<Vec<RateResult>> {
    let plan = Plan::new(cfg, registry)?;
    let per_trial = (0..cfg.trials)
        .into_par_iter()
        .map(|t| Ok(plan.run_trial(t, &plan.draw(t, source)?)))
        .collect::<Result<Vec<_>>>()?;

    Ok(plan
        .cells
        .iter()
        .enumerate()
        .map(|(ci, cell)| {
            let outcomes = per_trial.iter().map(|trial| &trial[ci]);
            let samples: Vec<f64> = outcomes.clone().map(|o| *o.rate.as_ref().unwrap_or(&f64::NAN)).collect();
            let (mean_rate, stderr) = mean_stderr(&samples);
            RateResult {
                scenario_id: cfg.scenario_id.clone(),
                snr_db: cfg.snr_db[cell.snr],
                precoder: plan.schemes[cell.precoder].name().to_string(),
                bits: cfg.bits[cell.resolution],
                power_alloc: cell.allocator.name().to_string(),
                trials: cfg.trials,
                mean_rate,
                stderr,
                failed: outcomes.clone().filter(|o| o.rate.is_err()).count(),
                fallbacks: outcomes.filter(|o| o.fallback).count(),
                samples,
            }
        })
        .collect())
}

/// Selects one curve from a result set, ordered as the SNR grid.
pub fn curve<'r>(results: &'r [RateResult], key: &CurveKey) -> Result<Vec<&'r RateResult>> {
    let mut pts: Vec<&RateResult> = results.iter().filter(|r| key.matches(r)).collect();
    if pts.is_empty() {
        return Err(Error::MissingCurve(key.label()));
    }
    pts.sort_by(|a, b| a.snr_db.total_cmp(&b.snr_db));
    Ok(pts)
}
