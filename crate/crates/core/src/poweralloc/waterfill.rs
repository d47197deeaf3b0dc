use super::{Allocation, AllocationProblem, IterationTrace};
use crate::error::Result;

/// Classical waterfilling `omega = (mu - N0 / g)^+` with `sum omega = P`,
/// dropping the weakest stream until every remaining power is positive.
pub fn waterfill(problem: &AllocationProblem) -> Result<Allocation> {
    problem.validate()?;
    let n0 = problem.n0();
    let mut active = problem.order();
    let mut trace = Vec::new();
    let mu = loop {
        let n = active.len() as f64;
        let inv: f64 = active.iter().map(|&i| 1.0 / problem.phi2[i]).sum();
        let mu = (problem.p_total + n0 * inv) / n;
        let weakest = *active.last().expect("at least one stream stays active");
        if active.len() > 1 && mu - n0 / problem.phi2[weakest] <= 0.0 {
            trace.push(IterationTrace { active: active.len(), mu, rejected: Some(weakest) });
            active.pop();
            continue;
        }
        trace.push(IterationTrace { active: active.len(), mu, rejected: None });
        break mu;
    };
    let mut omega = vec![0.0; problem.phi2.len()];
    for &i in &active {
        omega[i] = mu - n0 / problem.phi2[i];
    }
    Ok(Allocation { omega, mu, active: active.len(), fallback_used: false, trace })
}
