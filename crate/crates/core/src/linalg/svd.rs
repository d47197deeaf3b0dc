use super::matrix::{dot_conj, norm_sqr, CMatrix, C64};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 60;

/// Full singular value decomposition `A = U diag(s) V^H`.
///
/// `u` is `m x m`, `v` is `n x n`, and `s` holds the `min(m, n)` singular
/// values in non-increasing order. Every column of `v` is normalised so that
/// its first non-negligible component is real and non-negative; the matching
/// column of `u` carries the compensating phase.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub v: CMatrix,
}

impl Svd {
    /// Default rank threshold `max(m, n) * eps * s_max`.
    pub fn default_tolerance(&self) -> f64 {
        let m = self.u.rows().max(self.v.rows()) as f64;
        m * f64::EPSILON * self.s.first().copied().unwrap_or(0.0)
    }

    pub fn rank(&self, tol: Option<f64>) -> usize {
        let tol = tol.unwrap_or_else(|| self.default_tolerance());
        self.s.iter().filter(|&&x| x > tol).count()
    }

    /// Orthonormal basis of the right null space (trailing columns of `V`).
    pub fn null_space(&self, tol: Option<f64>) -> CMatrix {
        let r = self.rank(tol);
        self.v.columns(r..self.v.cols())
    }

    /// Orthonormal basis of the row space (leading columns of `V`).
    pub fn row_space(&self, tol: Option<f64>) -> CMatrix {
        let r = self.rank(tol);
        self.v.columns(0..r)
    }

    /// Rebuilds `U diag(s) V^H`; mainly useful for verification.
    pub fn reconstruct(&self) -> CMatrix {
        let (m, n) = (self.u.rows(), self.v.rows());
        let k = self.s.len();
        let us = self.u.columns(0..k).scale_columns(&self.s);
        let vk = self.v.columns(0..k);
        let out = us.matmul(&vk.adjoint()).expect("consistent SVD factors");
        debug_assert_eq!(out.shape(), (m, n));
        out
    }
}

/// Complex SVD via Householder QR followed by one-sided Jacobi on the
/// square triangular factor.
pub fn svd(a: &CMatrix) -> Result<Svd> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::InvalidDimensions(format!("cannot decompose a {m}x{n} matrix")));
    }
    if a.as_slice().iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DomainError("matrix contains non-finite entries".into()));
    }

    let (mut u, s, mut v) = if m >= n {
        let (q, r) = householder_qr(a);
        let (u_small, s, w) = jacobi_square(r)?;
        let mut u = q.clone();
        let q1 = q.columns(0..n);
        let qu = q1.matmul(&u_small)?;
        for j in 0..n {
            u.col_mut(j).copy_from_slice(qu.col(j));
        }
        (u, s, w)
    } else {
        let (q, r) = householder_qr(&a.adjoint());
        let (u_small, s, w) = jacobi_square(r.adjoint())?;
        let mut v = q.clone();
        let q1 = q.columns(0..m);
        let qw = q1.matmul(&w)?;
        for j in 0..m {
            v.col_mut(j).copy_from_slice(qw.col(j));
        }
        (u_small, s, v)
    };

    let k = s.len();
    for j in 0..v.cols() {
        let col = v.col(j);
        let Some(lead) = col.iter().find(|z| z.norm() > 1e-12).copied() else {
            continue;
        };
        let phase = (lead / lead.norm()).conj();
        for z in v.col_mut(j) {
            *z *= phase;
        }
        if j < k {
            for z in u.col_mut(j) {
                *z *= phase;
            }
        }
    }
    Ok(Svd { u, s, v })
}

/// Householder QR of a tall matrix: returns the full unitary `Q` (`m x m`)
/// and the leading `n x n` upper-triangular block of `R`.
fn householder_qr(a: &CMatrix) -> (CMatrix, CMatrix) {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut r = a.clone();
    let mut reflectors: Vec<(usize, Vec<C64>)> = Vec::with_capacity(n);

    for k in 0..n {
        let x: Vec<C64> = r.col(k)[k..].to_vec();
        let xnorm = norm_sqr(&x).sqrt();
        if xnorm == 0.0 {
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = norm_sqr(&v).sqrt();
        if vnorm == 0.0 {
            continue;
        }
        for z in &mut v {
            *z /= vnorm;
        }
        for j in k..n {
            let col = &mut r.col_mut(j)[k..];
            let proj = dot_conj(&v, col) * 2.0;
            for (c, vi) in col.iter_mut().zip(&v) {
                *c -= vi * proj;
            }
        }
        reflectors.push((k, v));
    }

    let mut q = CMatrix::identity(m);
    for (k, v) in reflectors.iter().rev() {
        for j in 0..m {
            let col = &mut q.col_mut(j)[*k..];
            let proj = dot_conj(v, col) * 2.0;
            for (c, vi) in col.iter_mut().zip(v) {
                *c -= vi * proj;
            }
        }
    }

    let r_top = CMatrix::from_fn(n, n, |i, j| if i <= j { r[(i, j)] } else { C64::new(0.0, 0.0) });
    (q, r_top)
}

/// One-sided Hestenes-Jacobi on a square matrix `B`, returning `(U, s, W)`
/// with `B = U diag(s) W^H`, singular values sorted non-increasing.
fn jacobi_square(mut b: CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let k = b.cols();
    debug_assert_eq!(b.rows(), k);
    let mut w = CMatrix::identity(k);
    let tol = (k as f64) * f64::EPSILON;

    let mut converged = k < 2;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..k {
            for q in p + 1..k {
                let alpha = norm_sqr(b.col(p));
                let beta = norm_sqr(b.col(q));
                let gamma = dot_conj(b.col(p), b.col(q));
                let g = gamma.norm();
                if g == 0.0 || g <= tol * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let e = (gamma / g).conj();
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut b, p, q, c, s, e);
                rotate(&mut w, p, q, c, s, e);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::ConvergenceFailure { sweeps: MAX_SWEEPS });
    }

    let norms: Vec<f64> = (0..k).map(|j| norm_sqr(b.col(j)).sqrt()).collect();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));

    let s: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let w_sorted = w.select_columns(&order);
    let smax = s.first().copied().unwrap_or(0.0);
    let zero_tol = (k as f64) * f64::EPSILON * smax;

    let mut u = CMatrix::zeros(k, k);
    let mut filled = 0usize;
    let mut pending: Vec<usize> = Vec::new();
    for (slot, &j) in order.iter().enumerate() {
        if s[slot] > zero_tol && s[slot] > 0.0 {
            let mut col: Vec<C64> = b.col(j).iter().map(|z| z / s[slot]).collect();
            if orthonormalize_against(&mut col, &u, filled) {
                u.col_mut(slot).copy_from_slice(&col);
                filled = slot + 1;
                continue;
            }
        }
        pending.push(slot);
        filled = slot + 1;
    }
    complete_basis(&mut u, &pending);
    Ok((u, s, w_sorted))
}

fn rotate(m: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, e: C64) {
    let (cp, cq) = m.col_pair_mut(p, q);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let yq = *y * e;
        let xp = *x;
        *x = xp * c - yq * s;
        *y = xp * s + yq * c;
    }
}

/// Two passes of modified Gram-Schmidt against the first `upto` columns of
/// `basis` (skipping all-zero placeholder columns). Returns false if the
/// vector collapses.
fn orthonormalize_against(v: &mut [C64], basis: &CMatrix, upto: usize) -> bool {
    let start = norm_sqr(v).sqrt();
    if start == 0.0 {
        return false;
    }
    for _ in 0..2 {
        for j in 0..upto {
            let b = basis.col(j);
            if norm_sqr(b) == 0.0 {
                continue;
            }
            let proj = dot_conj(b, v);
            for (x, bi) in v.iter_mut().zip(b) {
                *x -= bi * proj;
            }
        }
    }
    let n = norm_sqr(v).sqrt();
    if n < 0.5 * start {
        return false;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    true
}

/// Fills the listed zero columns of `u` with unit vectors orthogonal to all
/// other columns, drawing candidates from the standard basis.
fn complete_basis(u: &mut CMatrix, slots: &[usize]) {
    let k = u.rows();
    let mut candidate = 0usize;
    for &slot in slots {
        while candidate < k {
            let mut e = vec![C64::new(0.0, 0.0); k];
            e[candidate] = C64::new(1.0, 0.0);
            candidate += 1;
            if orthonormalize_against(&mut e, u, u.cols()) {
                u.col_mut(slot).copy_from_slice(&e);
                break;
            }
        }
    }
}
