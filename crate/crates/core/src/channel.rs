//! Rayleigh block-fading channels, imperfect-CSI model, reproducible random
//! streams and the plain-text channel exchange format.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_sqrt, CMatrix, C64};

/// Independent random streams drawn inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Purpose {
    Channel = 0,
    CsiError = 1,
    Signal = 2,
    Search = 3,
}

/// Deterministic generator for `(seed, trial, purpose)`, independent of
/// thread scheduling.
pub fn rng_stream(seed: u64, trial: u64, purpose: Purpose) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((trial << 8) | purpose as u64);
    rng
}

/// One draw from CN(0, 1).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Per-user channel blocks `H_j` (`N_j x N_b`).
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    nb: usize,
    users: Vec<CMatrix>,
}

impl ChannelSet {
    pub fn new(users: Vec<CMatrix>) -> Result<Self> {
        let Some(first) = users.first() else {
            return Err(Error::InvalidDimensions("channel set needs at least one user".into()));
        };
        let nb = first.cols();
        for (j, h) in users.iter().enumerate() {
            if h.cols() != nb || h.rows() == 0 || nb == 0 {
                return Err(Error::DimensionMismatch {
                    expected: format!("N_j x {nb} block"),
                    found: format!("{}x{} for user {j}", h.rows(), h.cols()),
                });
            }
        }
        Ok(Self { nb, users })
    }

    /// Splits a stacked `N_u x N_b` matrix according to `partition`.
    pub fn from_stacked(h: &CMatrix, partition: &[usize]) -> Result<Self> {
        let total: usize = partition.iter().sum();
        if total != h.rows() || partition.contains(&0) {
            return Err(Error::DimensionMismatch {
                expected: format!("partition summing to {} with no empty user", h.rows()),
                found: format!("{partition:?}"),
            });
        }
        let mut users = Vec::with_capacity(partition.len());
        let mut r0 = 0;
        for &nj in partition {
            users.push(h.rows_range(r0..r0 + nj));
            r0 += nj;
        }
        Self::new(users)
    }

    /// I.i.d. CN(0, 1) entries drawn from `rng`.
    pub fn sample<R: Rng + ?Sized>(nb: usize, partition: &[usize], rng: &mut R) -> Result<Self> {
        validate_dims(nb, partition)?;
        let users = partition.iter().map(|&nj| gaussian_matrix(nj, nb, rng)).collect();
        Self::new(users)
    }

    pub fn nb(&self) -> usize {
        self.nb
    }

    pub fn nu(&self) -> usize {
        self.users.iter().map(|h| h.rows()).sum()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn partition(&self) -> Vec<usize> {
        self.users.iter().map(|h| h.rows()).collect()
    }

    pub fn user(&self, j: usize) -> &CMatrix {
        &self.users[j]
    }

    pub fn users(&self) -> &[CMatrix] {
        &self.users
    }

    pub fn stacked(&self) -> CMatrix {
        let refs: Vec<&CMatrix> = self.users.iter().collect();
        CMatrix::vstack(&refs).expect("blocks share N_b")
    }

    /// `H_bar_j`: the rows of every user except `j` (zero-based), in order.
    /// A single-user set yields a `0 x N_b` matrix.
    pub fn exclude_user(&self, j: usize) -> Result<CMatrix> {
        if j >= self.users.len() {
            return Err(Error::IndexOutOfRange { index: j, len: self.users.len() });
        }
        Ok(self.others(j).unwrap_or_else(|| CMatrix::zeros(0, self.nb)))
    }

    /// Stacked channels of every user except `j`; `None` when `j` is the only user.
    pub fn others(&self, j: usize) -> Option<CMatrix> {
        let refs: Vec<&CMatrix> = self.users.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, h)| h).collect();
        if refs.is_empty() {
            None
        } else {
            Some(CMatrix::vstack(&refs).expect("blocks share N_b"))
        }
    }
}

fn validate_dims(nb: usize, partition: &[usize]) -> Result<()> {
    if nb == 0 || partition.is_empty() || partition.contains(&0) {
        return Err(Error::InvalidDimensions(format!("N_b = {nb}, partition = {partition:?}")));
    }
    let nu: usize = partition.iter().sum();
    if nb < nu {
        return Err(Error::InvalidDimensions(format!("N_b = {nb} is below N_u = {nu}")));
    }
    Ok(())
}

/// Convenience wrapper drawing the channel from the `(seed, 0, Channel)` stream.
pub fn generate_iid(nb: usize, partition: &[usize], seed: u64) -> Result<ChannelSet> {
    ChannelSet::sample(nb, partition, &mut rng_stream(seed, 0, Purpose::Channel))
}

/// Imperfect-CSI model `H_hat = H R^{1/2} + E`, `E ~ CN(0, sigma_e2)`, with
/// `R` the Hermitian Toeplitz matrix `R_ij = r^(j-i)` for `i <= j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsiModel {
    pub r: C64,
    pub sigma_e2: f64,
}

impl CsiModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.r.norm() < 1.0) {
            return Err(Error::DomainError(format!("correlation coefficient |r| = {} must be < 1", self.r.norm())));
        }
        if !(self.sigma_e2 >= 0.0) || !self.sigma_e2.is_finite() {
            return Err(Error::DomainError(format!("error variance {} must be >= 0", self.sigma_e2)));
        }
        Ok(())
    }
}

pub fn correlation_matrix(nb: usize, r: C64) -> CMatrix {
    CMatrix::from_fn(nb, nb, |i, j| if i <= j { r.powu((j - i) as u32) } else { r.powu((i - j) as u32).conj() })
}

/// Precomputed square root of the transmit correlation for repeated use.
#[derive(Debug, Clone)]
pub struct CsiTransform {
    model: CsiModel,
    root: CMatrix,
}

impl CsiTransform {
    pub fn new(model: CsiModel, nb: usize) -> Result<Self> {
        model.validate()?;
        let root = hermitian_sqrt(&correlation_matrix(nb, model.r))?;
        Ok(Self { model, root })
    }

    pub fn root(&self) -> &CMatrix {
        &self.root
    }

    pub fn apply<R: Rng + ?Sized>(&self, ch: &ChannelSet, rng: &mut R) -> Result<ChannelSet> {
        if ch.nb() != self.root.rows() {
            return Err(Error::DimensionMismatch {
                expected: format!("N_b = {}", self.root.rows()),
                found: format!("N_b = {}", ch.nb()),
            });
        }
        let sd = self.model.sigma_e2.sqrt();
        let users = ch
            .users()
            .iter()
            .map(|h| {
                let mut est = h.matmul(&self.root)?;
                if sd > 0.0 {
                    let e = gaussian_matrix(h.rows(), h.cols(), rng);
                    est = &est + &e.scale(sd);
                }
                Ok(est)
            })
            .collect::<Result<Vec<_>>>()?;
        ChannelSet::new(users)
    }
}

pub fn apply_csi_model(ch: &ChannelSet, model: CsiModel, seed: u64) -> Result<ChannelSet> {
    CsiTransform::new(model, ch.nb())?.apply(ch, &mut rng_stream(seed, 0, Purpose::CsiError))
}

/// Serialises a matrix as `rows cols` followed by one `re im` line per entry
/// in row-major order.
pub fn format_matrix(h: &CMatrix) -> String {
    let mut out = String::with_capacity(h.rows() * h.cols() * 44 + 16);
    let _ = writeln!(out, "{} {}", h.rows(), h.cols());
    for i in 0..h.rows() {
        for j in 0..h.cols() {
            let z = h[(i, j)];
            let _ = writeln!(out, "{:e} {:e}", z.re, z.im);
        }
    }
    out
}

pub fn parse_matrix(text: &str) -> Result<CMatrix> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty input".into() })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse { line: hline + 1, message: format!("bad header: {e}") })?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse { line: hline + 1, message: "header must be `rows cols`".into() });
    };
    let mut entries = Vec::with_capacity(rows * cols);
    for (ln, line) in lines {
        let parts: Vec<&str> = line.split_whitespace().collect();
        let [re, im] = parts[..] else {
            return Err(Error::Parse { line: ln + 1, message: "expected `re im`".into() });
        };
        let parse = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse { line: ln + 1, message: e.to_string() });
        entries.push(C64::new(parse(re)?, parse(im)?));
    }
    if entries.len() != rows * cols {
        return Err(Error::Parse {
            line: 0,
            message: format!("expected {} entries, found {}", rows * cols, entries.len()),
        });
    }
    CMatrix::from_row_major(rows, cols, &entries)
}

pub fn write_matrix_file(path: &Path, h: &CMatrix) -> Result<()> {
    std::fs::write(path, format_matrix(h))?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<CMatrix> {
    parse_matrix(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn exclusion_and_user_block_rebuild_the_stack(
            partition in proptest::collection::vec(1usize..=3, 1..=5),
            j_pick in any::<usize>(),
            seed in any::<u64>(),
        ) {
            let nu: usize = partition.iter().sum();
            let ch = generate_iid(nu + 2, &partition, seed).unwrap();
            let j = j_pick % partition.len();
            let hb = ch.exclude_user(j).unwrap();
            let start: usize = partition[..j].iter().sum();
            let h = ch.stacked();
            prop_assert_eq!(hb.rows(), nu - partition[j]);
            prop_assert_eq!(ch.user(j), &h.rows_range(start..start + partition[j]));
            prop_assert_eq!(hb.rows_range(0..start), h.rows_range(0..start));
            prop_assert_eq!(hb.rows_range(start..hb.rows()), h.rows_range(start + partition[j]..nu));
        }
    }

    #[test]
    fn iid_entries_have_unit_variance() {
        let ch = generate_iid(64, &[2; 8], 7).unwrap();
        assert_eq!(ch.nu(), 16);
        assert_eq!(ch.partition(), vec![2; 8]);
        let h = ch.stacked();
        let n = (h.rows() * h.cols()) as f64;
        let mean_pow: f64 = h.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((mean_pow - 1.0).abs() < 0.06, "{mean_pow}");
    }

    #[test]
    fn same_seed_same_channel() {
        assert_eq!(generate_iid(8, &[2, 2], 3).unwrap(), generate_iid(8, &[2, 2], 3).unwrap());
        assert_ne!(generate_iid(8, &[2, 2], 3).unwrap(), generate_iid(8, &[2, 2], 4).unwrap());
    }

    #[test]
    fn invalid_dimensions_rejected() {
        assert!(generate_iid(0, &[2], 1).is_err());
        assert!(generate_iid(4, &[], 1).is_err());
        assert!(generate_iid(4, &[2, 0], 1).is_err());
        assert!(matches!(generate_iid(2, &[2, 2], 1), Err(Error::InvalidDimensions(_))));
    }

    #[test]
    fn exclude_user_slices_rows() {
        let single = generate_iid(4, &[3], 2).unwrap();
        assert_eq!(single.exclude_user(0).unwrap().shape(), (0, 4));
        assert!(matches!(single.exclude_user(1), Err(Error::IndexOutOfRange { index: 1, len: 1 })));

        let two = generate_iid(6, &[2, 2], 2).unwrap();
        assert_eq!(two.exclude_user(0).unwrap(), two.stacked().rows_range(2..4));

        let ch = generate_iid(64, &[2; 8], 3).unwrap();
        let hb = ch.exclude_user(4).unwrap();
        assert_eq!(hb.shape(), (14, 64));
        let h = ch.stacked();
        assert_eq!(hb.rows_range(0..8), h.rows_range(0..8));
        assert_eq!(hb.rows_range(8..14), h.rows_range(10..16));
    }

    #[test]
    fn correlated_estimate_has_expected_covariance() {
        let nb = 6;
        let r = C64::new(0.72, 0.0);
        let t = CsiTransform::new(CsiModel { r, sigma_e2: 0.0 }, nb).unwrap();
        let rows = gaussian_matrix(100_000, nb, &mut rng_stream(5, 0, Purpose::Channel));
        let ch = ChannelSet::new(vec![rows]).unwrap();
        let est = t.apply(&ch, &mut rng_stream(5, 0, Purpose::CsiError)).unwrap();
        let h = est.stacked();
        let cov = h.adjoint_mul(&h).unwrap().scale(1.0 / h.rows() as f64);
        let target = correlation_matrix(nb, r);
        let rel = (&cov - &target).frobenius_norm() / target.frobenius_norm();
        assert!(rel < 0.05, "{rel}");

        let noisy = CsiTransform::new(CsiModel { r, sigma_e2: 0.16 }, nb).unwrap();
        let est = noisy.apply(&ch, &mut rng_stream(5, 0, Purpose::CsiError)).unwrap().stacked();
        let n = (est.rows() * est.cols()) as f64;
        let var = est.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>() / n;
        assert!((var - 1.16).abs() < 0.02, "{var}");
    }

    #[test]
    fn trivial_csi_is_identity() {
        let ch = generate_iid(6, &[1, 2], 11).unwrap();
        let est = apply_csi_model(&ch, CsiModel { r: C64::new(0.0, 0.0), sigma_e2: 0.0 }, 1).unwrap();
        assert!((&est.stacked() - &ch.stacked()).max_abs() < 1e-14);
    }

    #[test]
    fn csi_domain_checks() {
        let ch = generate_iid(4, &[1], 1).unwrap();
        assert!(apply_csi_model(&ch, CsiModel { r: C64::new(1.0, 0.0), sigma_e2: 0.0 }, 1).is_err());
        assert!(apply_csi_model(&ch, CsiModel { r: C64::new(0.2, 0.0), sigma_e2: -1.0 }, 1).is_err());
    }

    #[test]
    fn correlation_root_squares_to_correlation() {
        let r = C64::new(0.5, 0.2);
        let t = CsiTransform::new(CsiModel { r, sigma_e2: 0.1 }, 16).unwrap();
        let rr = t.root().matmul(t.root()).unwrap();
        assert!((&rr - &correlation_matrix(16, r)).max_abs() < 1e-12);
    }

    #[test]
    fn text_format_round_trip() {
        let h = generate_iid(5, &[3], 9).unwrap().stacked();
        let text = format_matrix(&h);
        assert!(text.starts_with("3 5\n"));
        assert_eq!(text.lines().count(), 16);
        assert_eq!(parse_matrix(&text).unwrap(), h);
        assert!(parse_matrix("2 2\n1 0\n").is_err());
        assert!(parse_matrix("2\n").is_err());
        assert!(parse_matrix("1 1\n1 x\n").is_err());
    }
}
