//! Linear multi-user precoders and the `PrecodingScheme` strategy trait.

mod bd;
mod linear;

use std::sync::OnceLock;

use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{svd, CMatrix, Svd};

pub use bd::{build_bd, build_bd_cached, build_rbd, build_rbd_cached};
pub use linear::{build_mmse, build_zf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecoderKind {
    Zf,
    Mmse,
    Bd,
    Rbd,
}

impl PrecoderKind {
    pub fn label(&self) -> &'static str {
        match self {
            PrecoderKind::Zf => "ZF",
            PrecoderKind::Mmse => "MMSE",
            PrecoderKind::Bd => "BD",
            PrecoderKind::Rbd => "RBD",
        }
    }

    pub fn supports_power_loading(&self) -> bool {
        matches!(self, PrecoderKind::Bd | PrecoderKind::Rbd)
    }
}

/// Per-user factors of a two-stage precoder `P_j = P_j^c P_j^d`.
#[derive(Debug, Clone)]
pub struct UserFactors {
    /// First-stage (interference suppression) factor.
    pub pc: CMatrix,
    /// Second-stage factor; `N_j` columns, trailing columns zero when the
    /// effective channel has fewer than `N_j` streams.
    pub pd: CMatrix,
    /// Effective-channel singular values, non-increasing.
    pub phi: Vec<f64>,
    /// Leading right singular vectors of the effective channel.
    pub w1: CMatrix,
    /// Power per stream.
    pub omega: Vec<f64>,
    /// Per-stream column normalisation `1 / |P^c w_m|`; all ones for BD.
    pub column_scale: Vec<f64>,
}

impl UserFactors {
    /// Squared stream gains seen by the allocator (`phi^2` times the column
    /// normalisation).
    pub fn stream_gains(&self) -> Vec<f64> {
        self.phi.iter().zip(&self.column_scale).map(|(p, c)| (p * c).powi(2)).collect()
    }

    pub fn streams(&self) -> usize {
        self.phi.len()
    }
}

/// Assembled transmit matrix with its construction metadata.
#[derive(Debug, Clone)]
pub struct Precoder {
    pub p_matrix: CMatrix,
    pub per_user: Vec<UserFactors>,
    pub kind: PrecoderKind,
    pub p_total: f64,
}

impl Precoder {
    pub fn transmit_power(&self) -> f64 {
        self.p_matrix.frobenius_norm().powi(2)
    }

    /// Stream gains pooled across users in user order.
    pub fn pooled_gains(&self) -> Vec<f64> {
        self.per_user.iter().flat_map(|u| u.stream_gains()).collect()
    }

    pub fn stream_counts(&self) -> Vec<usize> {
        self.per_user.iter().map(|u| u.streams()).collect()
    }

    /// Splits a pooled per-stream vector back into per-user pieces.
    pub fn split_pooled(&self, pooled: &[f64]) -> Result<Vec<Vec<f64>>> {
        let counts = self.stream_counts();
        let total: usize = counts.iter().sum();
        if pooled.len() != total {
            return Err(Error::DimensionMismatch {
                expected: format!("{total} streams"),
                found: format!("{} streams", pooled.len()),
            });
        }
        let mut out = Vec::with_capacity(counts.len());
        let mut start = 0;
        for c in counts {
            out.push(pooled[start..start + c].to_vec());
            start += c;
        }
        Ok(out)
    }
}

/// Lazily computed SVDs of every user's complementary channel `H_bar_j`,
/// shared by all schemes built from the same channel draw.
#[derive(Default)]
pub struct BlockCache {
    cell: OnceLock<Result<Vec<Option<Svd>>>>,
}

impl BlockCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn others_svd(&self, ch: &ChannelSet) -> Result<&[Option<Svd>]> {
        let res =
            self.cell.get_or_init(|| (0..ch.n_users()).map(|j| ch.others(j).map(|hb| svd(&hb)).transpose()).collect());
        match res {
            Ok(v) => Ok(v.as_slice()),
            Err(e) => Err(e.clone()),
        }
    }
}

/// Inputs shared by every scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecodeParams {
    pub p_total: f64,
    /// Receiver noise power.
    pub n0: f64,
}

/// A precoding algorithm selectable by name.
pub trait PrecodingScheme: Send + Sync {
    fn name(&self) -> &'static str;
    fn kind(&self) -> PrecoderKind;
    fn build(&self, ch: &ChannelSet, cache: &BlockCache, params: PrecodeParams) -> Result<Precoder>;
}

pub struct ZfScheme;
pub struct MmseScheme;
pub struct BdScheme;
pub struct RbdScheme;

impl PrecodingScheme for ZfScheme {
    fn name(&self) -> &'static str {
        "ZF"
    }
    fn kind(&self) -> PrecoderKind {
        PrecoderKind::Zf
    }
    fn build(&self, ch: &ChannelSet, _cache: &BlockCache, params: PrecodeParams) -> Result<Precoder> {
        build_zf(ch, params.p_total)
    }
}

impl PrecodingScheme for MmseScheme {
    fn name(&self) -> &'static str {
        "MMSE"
    }
    fn kind(&self) -> PrecoderKind {
        PrecoderKind::Mmse
    }
    fn build(&self, ch: &ChannelSet, _cache: &BlockCache, params: PrecodeParams) -> Result<Precoder> {
        build_mmse(ch, params.p_total, params.n0)
    }
}

impl PrecodingScheme for BdScheme {
    fn name(&self) -> &'static str {
        "BD"
    }
    fn kind(&self) -> PrecoderKind {
        PrecoderKind::Bd
    }
    fn build(&self, ch: &ChannelSet, cache: &BlockCache, params: PrecodeParams) -> Result<Precoder> {
        build_bd_cached(ch, cache, params.p_total)
    }
}

impl PrecodingScheme for RbdScheme {
    fn name(&self) -> &'static str {
        "RBD"
    }
    fn kind(&self) -> PrecoderKind {
        PrecoderKind::Rbd
    }
    fn build(&self, ch: &ChannelSet, cache: &BlockCache, params: PrecodeParams) -> Result<Precoder> {
        build_rbd_cached(ch, cache, params.p_total, params.n0)
    }
}

/// Replaces the stream powers of a BD/RBD precoder and reassembles `P`
/// without renormalising.
pub fn set_power_loading(pre: &Precoder, omegas: &[Vec<f64>]) -> Result<Precoder> {
    if !pre.kind.supports_power_loading() {
        return Err(Error::DomainError(format!("{} precoders carry no power-loading diagonal", pre.kind.label())));
    }
    if omegas.len() != pre.per_user.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} users", pre.per_user.len()),
            found: format!("{} users", omegas.len()),
        });
    }
    let mut total = 0.0;
    for (j, (u, w)) in pre.per_user.iter().zip(omegas).enumerate() {
        if w.len() != u.phi.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} streams for user {j}", u.phi.len()),
                found: format!("{}", w.len()),
            });
        }
        if let Some(x) = w.iter().find(|x| !(**x >= 0.0)) {
            return Err(Error::NegativePower(format!("user {j} stream power {x}")));
        }
        total += w.iter().sum::<f64>();
    }
    if total > pre.p_total + 1e-9 {
        return Err(Error::BudgetExceeded { requested: total, budget: pre.p_total });
    }
    let mut per_user = Vec::with_capacity(pre.per_user.len());
    for (u, w) in pre.per_user.iter().zip(omegas) {
        let mut f = u.clone();
        f.omega = w.clone();
        f.pd = bd::second_stage(&f.w1, &f.omega, &f.column_scale, f.pd.cols());
        per_user.push(f);
    }
    let p_matrix = bd::assemble(&per_user)?;
    Ok(Precoder { p_matrix, per_user, kind: pre.kind, p_total: pre.p_total })
}
