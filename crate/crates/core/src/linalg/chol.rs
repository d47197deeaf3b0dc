use super::matrix::{CMatrix, C64};
use crate::error::{Error, Result};

const HERMITIAN_TOL: f64 = 1e-10;

fn check_hermitian(a: &CMatrix) -> Result<()> {
    if a.rows() != a.cols() || a.rows() == 0 {
        return Err(Error::InvalidDimensions(format!(
            "expected a non-empty square matrix, got {}x{}",
            a.rows(),
            a.cols()
        )));
    }
    let asym = a.hermitian_asymmetry();
    if asym > HERMITIAN_TOL * a.max_abs().max(1.0) {
        return Err(Error::NotHermitian { asymmetry: asym });
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `L` with `A = L L^H` and a real, positive
/// diagonal. Only the lower triangle of `A` is read.
pub fn cholesky(a: &CMatrix) -> Result<CMatrix> {
    check_hermitian(a)?;
    let n = a.rows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) || !d.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: d });
        }
        let djj = d.sqrt();
        l[(j, j)] = C64::new(djj, 0.0);
        for i in j + 1..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Ok(l)
}

/// Base-2 log-determinant of a Hermitian positive definite matrix.
pub fn logdet_psd(a: &CMatrix) -> Result<f64> {
    let l = cholesky(a)?;
    Ok(2.0 * (0..l.rows()).map(|i| l[(i, i)].re.log2()).sum::<f64>())
}

/// Solves `A X = B` for Hermitian positive definite `A`.
pub fn solve_psd(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    let l = cholesky(a)?;
    let n = l.rows();
    if b.rows() != n {
        return Err(Error::DimensionMismatch { expected: format!("{n} rows"), found: format!("{} rows", b.rows()) });
    }
    let mut x = b.clone();
    for j in 0..x.cols() {
        let col = x.col_mut(j);
        for i in 0..n {
            let mut s = col[i];
            for k in 0..i {
                s -= l[(i, k)] * col[k];
            }
            col[i] = s / l[(i, i)].re;
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for k in i + 1..n {
                s -= l[(k, i)].conj() * col[k];
            }
            col[i] = s / l[(i, i)].re;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identity_has_zero_logdet() {
        assert_abs_diff_eq!(logdet_psd(&CMatrix::identity(5)).unwrap(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_logdet() {
        let a = CMatrix::from_real_diagonal(&[2.0, 8.0, 0.5]);
        assert_abs_diff_eq!(logdet_psd(&a).unwrap(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn indefinite_and_non_hermitian_rejected() {
        let a = CMatrix::from_real_diagonal(&[1.0, -1.0]);
        assert!(matches!(logdet_psd(&a), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
        let mut b = CMatrix::identity(2);
        b[(0, 1)] = C64::new(0.5, 0.0);
        assert!(matches!(cholesky(&b), Err(Error::NotHermitian { .. })));
        assert!(cholesky(&CMatrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn solve_small_system() {
        let a = CMatrix::from_row_major(
            2,
            2,
            &[C64::new(4.0, 0.0), C64::new(1.0, 1.0), C64::new(1.0, -1.0), C64::new(3.0, 0.0)],
        )
        .unwrap();
        let b = CMatrix::from_fn(2, 3, |i, j| C64::new(i as f64 + 1.0, j as f64));
        let x = solve_psd(&a, &b).unwrap();
        assert!((&a.matmul(&x).unwrap() - &b).max_abs() < 1e-14);
    }
}
