use super::{Precoder, PrecoderKind, UserFactors};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{cholesky, solve_psd, CMatrix, C64};

/// Zero forcing `P = H^H (H H^H)^{-1}`, scaled to the power budget.
pub fn build_zf(ch: &ChannelSet, p_total: f64) -> Result<Precoder> {
    channel_inversion(ch, p_total, 0.0, PrecoderKind::Zf)
}

/// Regularised channel inversion `P = H^H (H H^H + N_u n0 / P I)^{-1}`.
pub fn build_mmse(ch: &ChannelSet, p_total: f64, n0: f64) -> Result<Precoder> {
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::DomainError(format!("noise power {n0} must be non-negative")));
    }
    let reg = ch.nu() as f64 * n0 / p_total;
    channel_inversion(ch, p_total, reg, PrecoderKind::Mmse)
}

fn channel_inversion(ch: &ChannelSet, p_total: f64, reg: f64, kind: PrecoderKind) -> Result<Precoder> {
    if !(p_total > 0.0) || !p_total.is_finite() {
        return Err(Error::DomainError(format!("power budget {p_total} must be positive")));
    }
    let h = ch.stacked();
    let nu = h.rows();
    let mut gram = h.gram_outer();
    for i in 0..nu {
        gram[(i, i)] += C64::new(reg, 0.0);
    }
    let gram = gram.hermitian_part();
    if reg == 0.0 {
        let l = cholesky(&gram).map_err(|_| Error::RankDeficiency("H H^H is singular".into()))?;
        let top = (0..nu).map(|i| gram[(i, i)].re).fold(0.0, f64::max);
        let low = (0..nu).map(|i| l[(i, i)].re.powi(2)).fold(f64::INFINITY, f64::min);
        if low <= 1e-12 * top {
            return Err(Error::RankDeficiency("H does not have full row rank".into()));
        }
    }
    let inv = solve_psd(&gram, &CMatrix::identity(nu)).map_err(|e| match e {
        Error::NotPositiveDefinite { .. } => Error::RankDeficiency("H H^H is singular".into()),
        other => other,
    })?;
    let raw = h.adjoint().matmul(&inv)?;
    let power = raw.frobenius_norm().powi(2);
    if !(power > 0.0) || !power.is_finite() {
        return Err(Error::RankDeficiency("channel inversion produced a degenerate precoder".into()));
    }
    let p_matrix = raw.scale((p_total / power).sqrt());
    let mut per_user = Vec::with_capacity(ch.n_users());
    let mut c0 = 0;
    for nj in ch.partition() {
        per_user.push(UserFactors {
            pc: p_matrix.columns(c0..c0 + nj),
            pd: CMatrix::identity(nj),
            phi: Vec::new(),
            w1: CMatrix::zeros(0, 0),
            omega: Vec::new(),
            column_scale: Vec::new(),
        });
        c0 += nj;
    }
    Ok(Precoder { p_matrix, per_user, kind, p_total })
}
