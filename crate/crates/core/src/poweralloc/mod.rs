//! Stream power allocation: equal power, classical waterfilling and the
//! quantization-aware MAAS active-set allocator.

mod maas;
mod waterfill;

use crate::error::{Error, Result};

pub use maas::{c1, c2, maas, maas_with_rule, mu_opt, water_level, MuRule};
pub use waterfill::waterfill;

/// Pooled per-stream allocation problem.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationProblem {
    /// Squared effective-channel gains, one per stream.
    pub phi2: Vec<f64>,
    /// Total receive antennas `N_u`; sets the noise power `N0 = N_u / snr`.
    pub nu: usize,
    /// Linear SNR.
    pub snr: f64,
    /// Bussgang gain of the transmit DACs.
    pub delta: f64,
    pub p_total: f64,
}

impl AllocationProblem {
    pub fn n0(&self) -> f64 {
        self.nu as f64 / self.snr
    }

    pub fn validate(&self) -> Result<()> {
        if self.phi2.is_empty() {
            return Err(Error::EmptyProblem("no streams to allocate".into()));
        }
        if let Some(x) = self.phi2.iter().find(|x| !(**x > 0.0) || !x.is_finite()) {
            return Err(Error::DomainError(format!("stream gain {x} must be positive")));
        }
        if !(self.p_total > 0.0) || !self.p_total.is_finite() {
            return Err(Error::DomainError(format!("power budget {} must be positive", self.p_total)));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() || self.nu == 0 {
            return Err(Error::DomainError(format!("snr {} / N_u {} invalid", self.snr, self.nu)));
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::DomainError(format!("delta {} outside (0, 1]", self.delta)));
        }
        Ok(())
    }

    /// Stream indices sorted by gain, strongest first.
    pub(crate) fn order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.phi2.len()).collect();
        idx.sort_by(|&a, &b| self.phi2[b].total_cmp(&self.phi2[a]).then(a.cmp(&b)));
        idx
    }
}

/// State after one round of an active-set loop.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub active: usize,
    pub mu: f64,
    /// Stream index rejected at the end of the round, if any.
    pub rejected: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    /// Power per stream, in the problem's original stream order.
    pub omega: Vec<f64>,
    pub mu: f64,
    pub active: usize,
    pub fallback_used: bool,
    pub trace: Vec<IterationTrace>,
}

impl Allocation {
    pub fn total(&self) -> f64 {
        self.omega.iter().sum()
    }
}

/// Sum of per-stream truncated quantization-aware rates
/// `log2(1 + d² g w / N0 - d² (1 - d²) g² w² / N0²)`.
pub fn truncated_objective(problem: &AllocationProblem, omega: &[f64]) -> Result<f64> {
    let n0 = problem.n0();
    let d2 = problem.delta * problem.delta;
    let mut total = 0.0;
    for (&g, &w) in problem.phi2.iter().zip(omega) {
        let x = g * w / n0;
        let arg = 1.0 + d2 * x - d2 * (1.0 - d2) * x * x;
        if !(arg > 0.0) {
            return Err(Error::ApproximationInvalid);
        }
        total += arg.log2();
    }
    Ok(total)
}

/// Sum of `log2(1 + g w / N0)`.
pub fn full_resolution_objective(problem: &AllocationProblem, omega: &[f64]) -> f64 {
    let n0 = problem.n0();
    problem.phi2.iter().zip(omega).map(|(g, w)| (1.0 + g * w / n0).log2()).sum()
}

pub fn equal_power(problem: &AllocationProblem) -> Result<Allocation> {
    problem.validate()?;
    let n = problem.phi2.len();
    let w = problem.p_total / n as f64;
    Ok(Allocation { omega: vec![w; n], mu: w, active: n, fallback_used: false, trace: Vec::new() })
}

/// A power-allocation rule selectable by name.
pub trait PowerAllocator: Send + Sync {
    fn name(&self) -> &'static str;
    /// Whether the rule reads the Bussgang gain.
    fn quantization_aware(&self) -> bool {
        false
    }
    /// Whether the rule always splits the budget evenly, so precoders
    /// without a power-loading diagonal can use it unchanged.
    fn is_uniform(&self) -> bool {
        false
    }
    fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation>;
}

pub struct EqualPower;
pub struct Waterfilling;
pub struct Maas {
    pub rule: MuRule,
}

impl PowerAllocator for EqualPower {
    fn name(&self) -> &'static str {
        "EQUAL"
    }
    fn is_uniform(&self) -> bool {
        true
    }
    fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation> {
        equal_power(problem)
    }
}

impl PowerAllocator for Waterfilling {
    fn name(&self) -> &'static str {
        "WF"
    }
    fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation> {
        waterfill(problem)
    }
}

impl PowerAllocator for Maas {
    fn name(&self) -> &'static str {
        match self.rule {
            MuRule::ActiveSet => "MAAS",
            MuRule::AsPrinted => "MAAS-PRINTED",
        }
    }
    fn quantization_aware(&self) -> bool {
        true
    }
    fn allocate(&self, problem: &AllocationProblem) -> Result<Allocation> {
        maas_with_rule(problem, self.rule)
    }
}
