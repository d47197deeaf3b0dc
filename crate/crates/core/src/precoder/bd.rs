use super::{BlockCache, Precoder, PrecoderKind, UserFactors};
use crate::channel::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{svd, CMatrix};

pub fn build_bd(ch: &ChannelSet, p_total: f64) -> Result<Precoder> {
    build_bd_cached(ch, &BlockCache::new(), p_total)
}

pub fn build_rbd(ch: &ChannelSet, p_total: f64, n0: f64) -> Result<Precoder> {
    build_rbd_cached(ch, &BlockCache::new(), p_total, n0)
}

fn check_power(p_total: f64) -> Result<()> {
    if !(p_total > 0.0) || !p_total.is_finite() {
        return Err(Error::DomainError(format!("power budget {p_total} must be positive")));
    }
    Ok(())
}

/// Block diagonalisation: each user transmits in the null space of every
/// other user's channel, with equal power over all streams.
pub fn build_bd_cached(ch: &ChannelSet, cache: &BlockCache, p_total: f64) -> Result<Precoder> {
    check_power(p_total)?;
    let bars = cache.others_svd(ch)?;
    let mut first_stage = Vec::with_capacity(ch.n_users());
    for (j, bar) in bars.iter().enumerate() {
        let pc = match bar {
            None => CMatrix::identity(ch.nb()),
            Some(d) => {
                let ns = d.null_space(None);
                if ns.cols() == 0 {
                    return Err(Error::RankDeficiency(format!(
                        "user {j}: the other users' channels leave no null space in {} antennas",
                        ch.nb()
                    )));
                }
                ns
            }
        };
        first_stage.push((pc, false));
    }
    finish(ch, first_stage, p_total, PrecoderKind::Bd)
}

/// Regularised block diagonalisation with `chi = N_u n0 / P`. A zero noise
/// power reduces to plain BD first stages.
pub fn build_rbd_cached(ch: &ChannelSet, cache: &BlockCache, p_total: f64, n0: f64) -> Result<Precoder> {
    check_power(p_total)?;
    if !(n0 >= 0.0) || !n0.is_finite() {
        return Err(Error::DomainError(format!("noise power {n0} must be non-negative")));
    }
    let chi = ch.nu() as f64 * n0 / p_total;
    if chi == 0.0 {
        let bd = build_bd_cached(ch, cache, p_total)?;
        return Ok(Precoder { kind: PrecoderKind::Rbd, ..bd });
    }
    let nb = ch.nb();
    let bars = cache.others_svd(ch)?;
    let mut first_stage = Vec::with_capacity(ch.n_users());
    for bar in bars {
        let pc = match bar {
            None => CMatrix::identity(nb).scale(1.0 / chi.sqrt()),
            Some(d) => {
                let weights: Vec<f64> = (0..nb)
                    .map(|i| {
                        let s = d.s.get(i).copied().unwrap_or(0.0);
                        1.0 / (s * s + chi).sqrt()
                    })
                    .collect();
                d.v.scale_columns(&weights)
            }
        };
        first_stage.push((pc, true));
    }
    finish(ch, first_stage, p_total, PrecoderKind::Rbd)
}

fn finish(ch: &ChannelSet, first_stage: Vec<(CMatrix, bool)>, p_total: f64, kind: PrecoderKind) -> Result<Precoder> {
    let mut per_user = Vec::with_capacity(first_stage.len());
    for (j, (pc, normalise)) in first_stage.into_iter().enumerate() {
        let h = ch.user(j);
        let he = h.matmul(&pc)?;
        let d = svd(&he)?;
        let rank = d.rank(None);
        if rank == 0 {
            return Err(Error::RankDeficiency(format!("user {j}: effective channel is zero")));
        }
        let phi = d.s[..rank].to_vec();
        let w1 = d.v.columns(0..rank);
        let column_scale = if normalise {
            let cols = pc.matmul(&w1)?;
            (0..rank).map(|m| 1.0 / crate::linalg::norm_sqr(cols.col(m)).sqrt()).collect()
        } else {
            vec![1.0; rank]
        };
        per_user.push(UserFactors { pc, pd: CMatrix::zeros(0, 0), phi, w1, omega: Vec::new(), column_scale });
    }
    let streams: usize = per_user.iter().map(|u| u.phi.len()).sum();
    let share = p_total / streams as f64;
    for (j, u) in per_user.iter_mut().enumerate() {
        u.omega = vec![share; u.phi.len()];
        u.pd = second_stage(&u.w1, &u.omega, &u.column_scale, ch.user(j).rows());
    }
    let mut p_matrix = assemble(&per_user)?;
    let power = p_matrix.frobenius_norm().powi(2);
    if power > 0.0 {
        p_matrix = p_matrix.scale((p_total / power).sqrt());
    }
    Ok(Precoder { p_matrix, per_user, kind, p_total })
}

/// `W1 diag(sqrt(omega) * scale)`, zero-padded to `width` columns.
pub(super) fn second_stage(w1: &CMatrix, omega: &[f64], scale: &[f64], width: usize) -> CMatrix {
    let amps: Vec<f64> = omega.iter().zip(scale).map(|(w, c)| w.sqrt() * c).collect();
    let loaded = w1.scale_columns(&amps);
    if loaded.cols() >= width {
        return loaded;
    }
    CMatrix::hstack(&[&loaded, &CMatrix::zeros(w1.rows(), width - loaded.cols())]).expect("same row count")
}

pub(super) fn assemble(per_user: &[UserFactors]) -> Result<CMatrix> {
    let blocks: Vec<CMatrix> = per_user.iter().map(|u| u.pc.matmul(&u.pd)).collect::<Result<_>>()?;
    let refs: Vec<&CMatrix> = blocks.iter().collect();
    CMatrix::hstack(&refs)
}
