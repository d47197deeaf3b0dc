//! Sum-rate expressions for quantized-DAC downlinks.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, logdet_psd, solve_psd, CMatrix, C64};

/// Operands of a sum-rate evaluation.
#[derive(Debug, Clone, Copy)]
pub struct RateInputs<'a> {
    /// Channel the rate is evaluated on (the true channel under imperfect CSI).
    pub h: &'a CMatrix,
    /// Assembled precoder.
    pub p: &'a CMatrix,
    pub delta: f64,
    /// Linear SNR.
    pub snr: f64,
    pub nu: usize,
}

impl RateInputs<'_> {
    fn validate(&self) -> Result<()> {
        if self.h.cols() != self.p.rows() {
            return Err(Error::DimensionMismatch {
                expected: format!("precoder with {} rows", self.h.cols()),
                found: format!("{}x{}", self.p.rows(), self.p.cols()),
            });
        }
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::DomainError(format!("delta {} outside (0, 1]", self.delta)));
        }
        if !(self.snr > 0.0) || !self.snr.is_finite() || self.nu == 0 {
            return Err(Error::DomainError(format!("snr {} / N_u {} invalid", self.snr, self.nu)));
        }
        Ok(())
    }

    /// `M = (HP)(HP)^H`.
    fn gram(&self) -> Result<CMatrix> {
        Ok(self.h.matmul(self.p)?.gram_outer().hermitian_part())
    }
}

fn add_identity(m: &CMatrix, scale: f64) -> CMatrix {
    let mut out = m.scale(scale);
    for i in 0..m.rows() {
        out[(i, i)] += C64::new(1.0, 0.0);
    }
    out
}

/// `log2 det[I + d² s M ((1 - d²) s M + I)^{-1}]` with `s = SNR / N_u`.
pub fn exact_cqa_rate(inp: &RateInputs) -> Result<f64> {
    inp.validate()?;
    let m = inp.gram()?;
    let s = inp.snr / inp.nu as f64;
    let d2 = inp.delta * inp.delta;
    let distortion = add_identity(&m, (1.0 - d2) * s);
    let x = solve_psd(&distortion, &m)?;
    let arg = add_identity(&x, d2 * s).hermitian_part();
    Ok(logdet_psd(&arg)?.max(0.0))
}

/// Second-order truncation `log2 det[I + d² M / N0 - d² (1 - d²) M² / N0²]`.
pub fn approx_cqa_rate(inp: &RateInputs) -> Result<f64> {
    inp.validate()?;
    let m = inp.gram()?;
    let n0 = inp.nu as f64 / inp.snr;
    let d2 = inp.delta * inp.delta;
    let m2 = m.matmul(&m)?;
    let arg = (&add_identity(&m, d2 / n0) - &m2.scale(d2 * (1.0 - d2) / (n0 * n0))).hermitian_part();
    let l = cholesky(&arg).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::ApproximationInvalid,
        other => other,
    })?;
    Ok(2.0 * (0..l.rows()).map(|i| l[(i, i)].re.log2()).sum::<f64>())
}

/// Full-resolution BD sum rate `sum log2(1 + phi² omega / n0)` over streams.
pub fn fr_bd_rate(phi: &[f64], omega: &[f64], n0: f64) -> f64 {
    assert_eq!(phi.len(), omega.len(), "one power per singular value");
    phi.iter().zip(omega).map(|(p, w)| (1.0 + p * p * w / n0).log2()).sum()
}

/// Accuracy indicator of the truncated rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpsilonReport {
    pub epsilon: f64,
    /// Largest SNR (dB) with `epsilon <= 0.01`; `+inf` at full resolution.
    pub snr_max_db: f64,
    pub within_accurate_region: bool,
}

pub const EPSILON_LIMIT: f64 = 0.01;

/// `epsilon = SNR (1 - d²) / N_u` and `SNR_max = 10 log10(0.01 N_u / (1 - d²))`.
pub fn epsilon_report(nu: usize, snr: f64, delta: f64) -> Result<EpsilonReport> {
    if nu == 0 {
        return Err(Error::DomainError("N_u must be at least 1".into()));
    }
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::DomainError(format!("delta {delta} outside (0, 1]")));
    }
    if !(snr >= 0.0) {
        return Err(Error::DomainError(format!("snr {snr} must be non-negative")));
    }
    let loss = 1.0 - delta * delta;
    let epsilon = snr * loss / nu as f64;
    let snr_max_db = if loss == 0.0 { f64::INFINITY } else { snr_max_db(nu, delta) };
    Ok(EpsilonReport { epsilon, snr_max_db, within_accurate_region: epsilon <= EPSILON_LIMIT })
}

pub fn snr_max_db(nu: usize, delta: f64) -> f64 {
    10.0 * (EPSILON_LIMIT * nu as f64 / (1.0 - delta * delta)).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
