use super::matrix::{CMatrix, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Eigen-decomposition of a Hermitian matrix via cyclic complex Jacobi
/// rotations. Eigenvalues are returned in ascending order with the matching
/// orthonormal eigenvectors as columns.
pub fn eigh(a: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = a.rows();
    if n == 0 || a.cols() != n {
        return Err(Error::InvalidDimensions(format!("eigh needs a square matrix, got {}x{}", n, a.cols())));
    }
    let asym = a.hermitian_asymmetry();
    if asym > 1e-10 * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    let mut m = a.hermitian_part();
    let mut v = CMatrix::identity(n);
    let scale = m.frobenius_norm();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|j| (0..n).filter(move |&i| i != j).map(move |i| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale || scale == 0.0 {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let g = apq.norm();
                if g == 0.0 {
                    continue;
                }
                let app = m[(p, p)].re;
                let aqq = m[(q, q)].re;
                let theta = (aqq - app) / (2.0 * g);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                let e = (apq / g).conj();
                // G = [[c, s], [-s e, c e]] on coordinates (p, q); M <- G^H M G.
                let gpp = C64::new(c, 0.0);
                let gpq = C64::new(s, 0.0);
                let gqp = -e * s;
                let gqq = e * c;
                for i in 0..n {
                    let mp = m[(i, p)];
                    let mq = m[(i, q)];
                    m[(i, p)] = mp * gpp + mq * gqp;
                    m[(i, q)] = mp * gpq + mq * gqq;
                }
                for j in 0..n {
                    let mp = m[(p, j)];
                    let mq = m[(q, j)];
                    m[(p, j)] = gpp.conj() * mp + gqp.conj() * mq;
                    m[(q, j)] = gpq.conj() * mp + gqq.conj() * mq;
                }
                m[(p, q)] = C64::new(0.0, 0.0);
                m[(q, p)] = C64::new(0.0, 0.0);
                m[(p, p)] = C64::new(m[(p, p)].re, 0.0);
                m[(q, q)] = C64::new(m[(q, q)].re, 0.0);
                for i in 0..n {
                    let vp = v[(i, p)];
                    let vq = v[(i, q)];
                    v[(i, p)] = vp * gpp + vq * gqp;
                    v[(i, q)] = vp * gpq + vq * gqq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let vals = order.iter().map(|&i| m[(i, i)].re).collect();
    Ok((vals, v.select_columns(&order)))
}

/// Hermitian positive semidefinite square root `A^{1/2}`.
///
/// Eigenvalues in `[-1e-12 * max(1, |lambda|_max), 0)` are clamped to zero;
/// anything more negative is rejected.
pub fn hermitian_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = eigh(a)?;
    let top = vals.iter().fold(0.0f64, |acc, x| acc.max(x.abs())).max(1.0);
    let mut roots = Vec::with_capacity(vals.len());
    for &l in &vals {
        if l < -1e-12 * top {
            return Err(Error::NotPositiveSemidefinite { value: l });
        }
        roots.push(l.max(0.0).sqrt());
    }
    let scaled = vecs.scale_columns(&roots);
    scaled.matmul(&vecs.adjoint())
}
