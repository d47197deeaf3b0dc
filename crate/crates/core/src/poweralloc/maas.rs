use super::{waterfill, Allocation, AllocationProblem, IterationTrace};
use crate::error::{Error, Result};

/// How the water level is obtained in each round of the MAAS loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MuRule {
    /// Root of the water-level quadratic over the current active set, using
    /// the problem's noise power and budget.
    #[default]
    ActiveSet,
    /// Literal closed form with the `N_u²` inner coefficient and
    /// `(N_u - p + 1) / SNR` noise term.
    AsPrinted,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::DomainError(format!("delta {delta} outside (0, 1]")));
    }
    Ok(())
}

/// Inverse-gain coefficient; equals -1 at `delta = 1`.
pub fn c1(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(-2.0 / (delta * (delta + (4.0 - 3.0 * delta * delta).sqrt())))
}

/// Quadratic-correction coefficient; vanishes at `delta = 1`.
pub fn c2(delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(delta * (1.0 - delta * delta) / (4.0 - 3.0 * delta * delta).sqrt())
}

/// Smaller root of `(C2 S / N0) mu² - n mu + (P - C1 N0 S_inv) = 0` over the
/// given active gains.
pub fn water_level(phi2_active: &[f64], n0: f64, p_total: f64, delta: f64) -> Result<f64> {
    if phi2_active.is_empty() {
        return Err(Error::EmptyProblem("no active streams".into()));
    }
    let (k1, k2) = (c1(delta)?, c2(delta)?);
    let s: f64 = phi2_active.iter().sum();
    let s_inv: f64 = phi2_active.iter().map(|g| 1.0 / g).sum();
    let n = phi2_active.len() as f64;
    let a = k2 * s / n0;
    let c = p_total - k1 * n0 * s_inv;
    let disc = n * n - 4.0 * a * c;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant(disc));
    }
    Ok(2.0 * c / (n + disc.sqrt()))
}

/// The closed-form water level exactly as printed, for round `p` (1-based):
/// `n² / (2 C2 SNR S) * (1 - sqrt(1 + 4 C2 S / N_u² (C1 S_inv - SNR)))` with
/// `n = N_u - p + 1`, evaluated in a cancellation-free arrangement.
pub fn mu_opt(phi2_active: &[f64], p: usize, nu: usize, snr: f64, delta: f64) -> Result<f64> {
    if phi2_active.is_empty() {
        return Err(Error::EmptyProblem("no active streams".into()));
    }
    if p == 0 || p > nu {
        return Err(Error::DomainError(format!("round p = {p} outside 1..={nu}")));
    }
    let (k1, k2) = (c1(delta)?, c2(delta)?);
    let s: f64 = phi2_active.iter().sum();
    let s_inv: f64 = phi2_active.iter().map(|g| 1.0 / g).sum();
    let n = (nu - p + 1) as f64;
    let nu2 = (nu * nu) as f64;
    let x = 4.0 * k2 * s / nu2 * (k1 * s_inv - snr);
    if 1.0 + x < 0.0 {
        return Err(Error::NegativeDiscriminant(1.0 + x));
    }
    Ok(2.0 * n * n * (snr - k1 * s_inv) / (snr * nu2 * (1.0 + (1.0 + x).sqrt())))
}

pub fn maas(problem: &AllocationProblem) -> Result<Allocation> {
    maas_with_rule(problem, MuRule::ActiveSet)
}

/// MAAS active-set loop: compute the water level, assign powers, reject the
/// weakest stream with non-positive power and repeat.
pub fn maas_with_rule(problem: &AllocationProblem, rule: MuRule) -> Result<Allocation> {
    problem.validate()?;
    let (k1, k2) = (c1(problem.delta)?, c2(problem.delta)?);
    let n0 = problem.n0();
    let mut active = problem.order();
    let mut trace: Vec<IterationTrace> = Vec::new();
    let mut powers: Vec<f64>;
    let mut mu;
    let mut round = 1usize;
    loop {
        if active.is_empty() {
            return Err(Error::NoFeasibleAllocation);
        }
        let gains: Vec<f64> = active.iter().map(|&i| problem.phi2[i]).collect();
        let level = match rule {
            MuRule::ActiveSet => water_level(&gains, n0, problem.p_total, problem.delta),
            MuRule::AsPrinted => mu_opt(&gains, round, problem.nu, problem.snr, problem.delta),
        };
        mu = match level {
            Ok(m) => m,
            Err(Error::NegativeDiscriminant(_)) => {
                let mut wf = waterfill(problem)?;
                trace.extend(wf.trace);
                wf.trace = trace;
                wf.fallback_used = true;
                return Ok(wf);
            }
            Err(e) => return Err(e),
        };
        let noise = match rule {
            MuRule::ActiveSet => n0,
            MuRule::AsPrinted => (problem.nu + 1 - round) as f64 / problem.snr,
        };
        powers = gains.iter().map(|&g| k1 * noise / g + mu - mu * mu * k2 * g / noise).collect();
        let rejected = (0..active.len()).rev().find(|&k| !(powers[k] > 0.0));
        trace.push(IterationTrace { active: active.len(), mu, rejected: rejected.map(|k| active[k]) });
        match rejected {
            Some(k) => {
                active.remove(k);
                round += 1;
            }
            None => break,
        }
    }
    let sum: f64 = powers.iter().sum();
    let scale = problem.p_total / sum;
    let mut omega = vec![0.0; problem.phi2.len()];
    for (&i, w) in active.iter().zip(&powers) {
        omega[i] = w * scale;
    }
    Ok(Allocation { omega, mu, active: active.len(), fallback_used: false, trace })
}
