use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::quantizer::Resolution;

/// FLOPs charged for one exponential or Gaussian CDF evaluation.
pub const TRANSCENDENTAL_FLOPS: f64 = 20.0;
/// Arithmetic per summation term of the gain and normalization sums.
const ARITHMETIC_PER_TERM: f64 = 8.0;
/// Fixed arithmetic around the two sums (square roots, products, the final ratio).
const FIXED_ARITHMETIC: f64 = 10.0;

pub const DAC_ANCHOR_MW: f64 = 85.0;
pub const DAC_ANCHOR_BITS: u32 = 5;
pub const ADC_ANCHOR_MW: f64 = 140.0;
pub const ADC_ANCHOR_BITS: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostKind {
    Zf,
    Mmse,
    Bd,
    Rbd,
    BussgangZf,
    BussgangMmse,
    CqaBd,
    CqaRbd,
}

impl CostKind {
    pub const ALL: [CostKind; 8] = [
        CostKind::Zf,
        CostKind::Mmse,
        CostKind::Bd,
        CostKind::Rbd,
        CostKind::BussgangZf,
        CostKind::BussgangMmse,
        CostKind::CqaBd,
        CostKind::CqaRbd,
    ];

    pub fn label(self) -> &'static str {
        match self {
            CostKind::Zf => "ZF",
            CostKind::Mmse => "MMSE",
            CostKind::Bd => "BD",
            CostKind::Rbd => "RBD",
            CostKind::BussgangZf => "Bussgang-ZF",
            CostKind::BussgangMmse => "Bussgang-MMSE",
            CostKind::CqaBd => "CQA-BD",
            CostKind::CqaRbd => "CQA-RBD",
        }
    }

    pub fn is_quantization_aware(self) -> bool {
        matches!(self, CostKind::BussgangZf | CostKind::BussgangMmse | CostKind::CqaBd | CostKind::CqaRbd)
    }
}

impl fmt::Display for CostKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for CostKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CostKind::ALL
            .into_iter()
            .find(|k| k.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownStrategy { what: "cost kind", name: s.to_string() })
    }
}

/// Extra cost of computing the Bussgang gain for a `J`-level quantizer:
/// `2(J - 1)` transcendental evaluations plus per-term and fixed arithmetic.
/// Zero at full resolution.
pub fn bussgang_overhead_flops(resolution: Resolution) -> f64 {
    match resolution {
        Resolution::Full => 0.0,
        Resolution::Bits(b) => {
            let terms = ((1u64 << b) - 1) as f64;
            terms * (2.0 * TRANSCENDENTAL_FLOPS + ARITHMETIC_PER_TERM) + FIXED_ARITHMETIC
        }
    }
}

fn check_dims(nb: usize, nu: usize, nj: usize) -> Result<()> {
    if nj == 0 || nj > nu || nu > nb {
        return Err(Error::DomainError(format!("need nb >= nu >= nj >= 1, got {nb}/{nu}/{nj}")));
    }
    Ok(())
}

/// Leading-order FLOP polynomial of one precoder construction. The
/// quantization-aware kinds add [`bussgang_overhead_flops`] for `resolution`.
pub fn precoder_flops(kind: CostKind, nb: usize, nu: usize, nj: usize, resolution: Resolution) -> Result<f64> {
    check_dims(nb, nu, nj)?;
    let (b, u, j) = (nb as f64, nu as f64, nj as f64);
    let inversion = b.powi(3) / 2.0 + b * b * (4.0 * u - 1.5);
    let base = match kind {
        CostKind::Zf | CostKind::BussgangZf => inversion - b * u,
        CostKind::Mmse | CostKind::BussgangMmse => inversion - b * (u - 2.0),
        CostKind::Bd | CostKind::Rbd | CostKind::CqaBd | CostKind::CqaRbd => {
            b * b * (32.0 * j + 8.0) + b * (32.0 * u * u + 72.0 * j * j) + 64.0 * u * u
        }
    };
    let extra = if kind.is_quantization_aware() { bussgang_overhead_flops(resolution) } else { 0.0 };
    Ok(base + extra)
}

fn converter_power(bits: u32, anchor_mw: f64, anchor_bits: u32) -> f64 {
    anchor_mw * 2f64.powi(bits as i32 - anchor_bits as i32)
}

/// Power of one real DAC at 1 GS/s, doubling per bit.
pub fn dac_power_mw(bits: u32) -> f64 {
    converter_power(bits, DAC_ANCHOR_MW, DAC_ANCHOR_BITS)
}

/// Power of one real ADC at 1 GS/s, doubling per bit.
pub fn adc_power_mw(bits: u32) -> f64 {
    converter_power(bits, ADC_ANCHOR_MW, ADC_ANCHOR_BITS)
}

/// Fractional DAC power saved by going from `from` to `to` bits.
pub fn dac_savings(from: u32, to: u32) -> f64 {
    1.0 - dac_power_mw(to) / dac_power_mw(from)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostReport {
    pub kind: CostKind,
    pub flops: f64,
    /// Power allocation costs `O(N_u)`; this is the `N_u` it scales with.
    pub pa_flops_order: usize,
    pub bits: u32,
    pub dac_power_mw: f64,
    pub total_dac_power_mw: f64,
    /// Whether `total_dac_power_mw` counts an I and a Q converter per antenna.
    pub two_dacs_per_antenna: bool,
}

pub fn cost_report(
    kind: CostKind,
    nb: usize,
    nu: usize,
    nj: usize,
    bits: u32,
    two_dacs_per_antenna: bool,
) -> Result<CostReport> {
    if !(1..=14).contains(&bits) {
        return Err(Error::DomainError(format!("converter resolution {bits} outside 1..=14")));
    }
    let flops = precoder_flops(kind, nb, nu, nj, Resolution::Bits(bits))?;
    let per = dac_power_mw(bits);
    let per_antenna = if two_dacs_per_antenna { 2.0 } else { 1.0 };
    Ok(CostReport {
        kind,
        flops,
        pa_flops_order: nu,
        bits,
        dac_power_mw: per,
        total_dac_power_mw: nb as f64 * per * per_antenna,
        two_dacs_per_antenna,
    })
}
