//! Uniform mid-rise DAC model and its Bussgang linearisation.
//!
//! A `b`-bit converter quantises the real and imaginary part of every
//! antenna sample separately onto `J = 2^b` levels spaced `gamma` apart and
//! scales the result by `alpha`, so that the total output power matches the
//! input budget. For Gaussian inputs the output decomposes as
//! `Q(x) = delta * x + f` with `f` uncorrelated to `x`.

use rayon::prelude::*;
use statrs::function::erf::erfc;

use crate::channel::{complex_gaussian, rng_stream, Purpose};
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

pub const MIN_BITS: u32 = 2;
pub const MAX_BITS: u32 = 12;

/// Converter resolution: a finite bit depth or the unquantised sentinel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Resolution {
    Bits(u32),
    Full,
}

impl Resolution {
    pub fn label(&self) -> String {
        match self {
            Resolution::Bits(b) => b.to_string(),
            Resolution::Full => "FR".to_string(),
        }
    }
}

impl std::fmt::Display for Resolution {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.label())
    }
}

impl std::str::FromStr for Resolution {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("fr") || t.eq_ignore_ascii_case("full") {
            return Ok(Resolution::Full);
        }
        t.parse::<u32>()
            .map(Resolution::Bits)
            .map_err(|_| Error::Config(format!("bit depth `{s}` is neither an integer nor FR")))
    }
}

/// Immutable description of one DAC configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantizerSpec {
    pub resolution: Resolution,
    /// Number of levels per real dimension; 0 for the full-resolution sentinel.
    pub j_levels: usize,
    pub gamma: f64,
    pub alpha: f64,
    pub delta: f64,
    pub nb: usize,
    pub p_total: f64,
}

/// Standard normal CDF.
pub fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Normalisation `alpha` as a function of the step normalised by the
/// per-dimension input standard deviation.
pub fn normalization_for_step(j_levels: usize, step: f64) -> f64 {
    let half = j_levels as f64 / 2.0;
    let edge = (j_levels as f64 - 1.0) / 2.0;
    let tail: f64 = (1..j_levels)
        .map(|l| {
            let c = l as f64 - half;
            c * phi(c * step)
        })
        .sum();
    let second_moment = edge * edge - 2.0 * tail;
    1.0 / (step * second_moment.sqrt())
}

/// Bussgang gain `delta` for a normalised step.
pub fn delta_for_step(j_levels: usize, step: f64) -> f64 {
    let half = j_levels as f64 / 2.0;
    let sum: f64 = (1..j_levels)
        .map(|l| {
            let c = l as f64 - half;
            (-0.5 * step * step * c * c).exp()
        })
        .sum();
    normalization_for_step(j_levels, step) * step / (2.0 * std::f64::consts::PI).sqrt() * sum
}

/// Per-real-dimension standard deviation of one antenna's input.
pub fn per_dimension_std(nb: usize, p_total: f64) -> f64 {
    (p_total / (2.0 * nb as f64)).sqrt()
}

fn check_context(nb: usize, p_total: f64) -> Result<()> {
    if nb == 0 {
        return Err(Error::InvalidDimensions("quantizer needs at least one antenna".into()));
    }
    if !(p_total > 0.0) || !p_total.is_finite() {
        return Err(Error::DomainError(format!("power budget {p_total} must be positive")));
    }
    Ok(())
}

/// Builds the quantiser for `resolution`, choosing the step that maximises
/// the Bussgang gain.
pub fn build_quantizer(resolution: Resolution, nb: usize, p_total: f64) -> Result<QuantizerSpec> {
    check_context(nb, p_total)?;
    let b = match resolution {
        Resolution::Full => return Ok(QuantizerSpec::full(nb, p_total)),
        Resolution::Bits(b) => b,
    };
    if !(MIN_BITS..=MAX_BITS).contains(&b) {
        return Err(Error::DomainError(format!("bit depth {b} outside {MIN_BITS}..={MAX_BITS}")));
    }
    let j = 1usize << b;
    let sigma = per_dimension_std(nb, p_total);
    let scale = (p_total / nb as f64).sqrt();
    let (lo, hi) = ((1e-3 * scale).ln(), (4.0 * scale).ln());
    let objective = |log_gamma: f64| delta_for_step(j, log_gamma.exp() / sigma);
    let log_gamma = golden_section_max(objective, lo, hi, 1e-12)?;
    if (log_gamma - lo).abs() < 1e-6 || (hi - log_gamma).abs() < 1e-6 {
        return Err(Error::SearchFailure(format!("optimum for b = {b} sits on the search bracket edge")));
    }
    let gamma = log_gamma.exp();
    let step = gamma / sigma;
    let delta = delta_for_step(j, step);
    let alpha = normalization_for_step(j, step);
    if !(delta > 0.0 && delta < 1.0) || !alpha.is_finite() || alpha <= 0.0 {
        return Err(Error::SearchFailure(format!("degenerate quantizer for b = {b}: delta = {delta}")));
    }
    Ok(QuantizerSpec { resolution, j_levels: j, gamma, alpha, delta, nb, p_total })
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<f64> {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..500 {
        if (b - a).abs() <= tol {
            return Ok(0.5 * (a + b));
        }
        if !fc.is_finite() || !fd.is_finite() {
            return Err(Error::SearchFailure("objective not finite inside bracket".into()));
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    Err(Error::SearchFailure("golden-section search did not collapse".into()))
}

impl QuantizerSpec {
    /// Full-resolution sentinel with `delta = 1`.
    pub fn full(nb: usize, p_total: f64) -> Self {
        QuantizerSpec { resolution: Resolution::Full, j_levels: 0, gamma: 0.0, alpha: 1.0, delta: 1.0, nb, p_total }
    }

    pub fn is_full(&self) -> bool {
        self.resolution == Resolution::Full
    }

    pub fn bits(&self) -> Option<u32> {
        match self.resolution {
            Resolution::Bits(b) => Some(b),
            Resolution::Full => None,
        }
    }

    /// Level index in `0..J` for one real dimension.
    pub fn level_index(&self, x: f64) -> usize {
        let j = self.j_levels as f64;
        let k = (x / self.gamma).floor() + j / 2.0;
        k.clamp(0.0, j - 1.0) as usize
    }

    /// Unscaled reconstruction value of a level index.
    pub fn level_value(&self, k: usize) -> f64 {
        (k as f64 - (self.j_levels as f64 - 1.0) / 2.0) * self.gamma
    }

    pub fn quantize_scalar(&self, x: f64) -> f64 {
        if self.is_full() {
            return x;
        }
        self.alpha * self.level_value(self.level_index(x))
    }

    pub fn quantize_sample(&self, z: C64) -> C64 {
        C64::new(self.quantize_scalar(z.re), self.quantize_scalar(z.im))
    }

    /// Outermost reconstruction magnitude `alpha * gamma * (J - 1) / 2`.
    pub fn saturation(&self) -> f64 {
        self.alpha * self.gamma * (self.j_levels as f64 - 1.0) / 2.0
    }
}

/// Quantises every component of `x`.
pub fn quantize(x: &[C64], spec: &QuantizerSpec) -> Vec<C64> {
    x.iter().map(|&z| spec.quantize_sample(z)).collect()
}

/// Empirical check of the Bussgang decomposition for a given precoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BussgangStats {
    /// Frobenius norm of the sample cross-correlation `E[f s^H]`.
    pub cross_corr_norm: f64,
    /// `cross_corr_norm / |delta P|_F`.
    pub cross_corr_relative: f64,
    /// Relative Frobenius error of the sample `R_ff` against `(1 - delta^2) P P^H`.
    pub rff_error: f64,
    /// Sample `E|Q(Ps)|^2` divided by the power budget.
    pub output_power_ratio: f64,
    pub samples: usize,
}

const BLOCK: usize = 4096;

struct Accum {
    cross: CMatrix,
    rff: CMatrix,
    power: f64,
}

/// Draws `s ~ CN(0, I)`, forms `f = Q(Ps) - delta P s` and compares the sample
/// statistics with the linear model. Sample blocks run in parallel, each with
/// its own random stream, so results do not depend on the thread count.
pub fn verify_bussgang(spec: &QuantizerSpec, precoder: &CMatrix, n_samples: usize, seed: u64) -> Result<BussgangStats> {
    let (nb, nu) = precoder.shape();
    if nb != spec.nb {
        return Err(Error::DimensionMismatch { expected: format!("{} rows", spec.nb), found: format!("{nb} rows") });
    }
    if n_samples == 0 || nu == 0 {
        return Err(Error::EmptyProblem("no samples or no streams".into()));
    }
    let delta = spec.delta;
    let n_blocks = n_samples.div_ceil(BLOCK);
    let total = (0..n_blocks)
        .into_par_iter()
        .map(|blk| {
            let mut rng = rng_stream(seed, blk as u64, Purpose::Signal);
            let count = BLOCK.min(n_samples - blk * BLOCK);
            let mut acc = Accum { cross: CMatrix::zeros(nb, nu), rff: CMatrix::zeros(nb, nb), power: 0.0 };
            let mut s = vec![C64::new(0.0, 0.0); nu];
            let mut f = vec![C64::new(0.0, 0.0); nb];
            for _ in 0..count {
                for z in s.iter_mut() {
                    *z = complex_gaussian(&mut rng);
                }
                for (i, fi) in f.iter_mut().enumerate() {
                    let x: C64 = (0..nu).map(|k| precoder[(i, k)] * s[k]).sum();
                    let q = spec.quantize_sample(x);
                    acc.power += q.norm_sqr();
                    *fi = q - x * delta;
                }
                for k in 0..nu {
                    let sk = s[k].conj();
                    for (c, fi) in acc.cross.col_mut(k).iter_mut().zip(&f) {
                        *c += fi * sk;
                    }
                }
                for j in 0..nb {
                    let fj = f[j].conj();
                    for (c, fi) in acc.rff.col_mut(j).iter_mut().zip(&f) {
                        *c += fi * fj;
                    }
                }
            }
            acc
        })
        .reduce(
            || Accum { cross: CMatrix::zeros(nb, nu), rff: CMatrix::zeros(nb, nb), power: 0.0 },
            |a, b| Accum { cross: &a.cross + &b.cross, rff: &a.rff + &b.rff, power: a.power + b.power },
        );

    let n = n_samples as f64;
    let cross = total.cross.scale(1.0 / n);
    let rff = total.rff.scale(1.0 / n);
    let model = precoder.gram_outer().scale(1.0 - delta * delta);
    let model_norm = model.frobenius_norm();
    let rff_error =
        if model_norm == 0.0 { rff.frobenius_norm() } else { (&rff - &model).frobenius_norm() / model_norm };
    let cross_corr_norm = cross.frobenius_norm();
    let ref_norm = precoder.frobenius_norm() * delta;
    Ok(BussgangStats {
        cross_corr_norm,
        cross_corr_relative: if ref_norm > 0.0 { cross_corr_norm / ref_norm } else { 0.0 },
        rff_error,
        output_power_ratio: total.power / n / spec.p_total,
        samples: n_samples,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::gaussian_matrix;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::Rng;

    #[test]
    fn zero_maps_to_positive_half_level() {
        let q = build_quantizer(Resolution::Bits(3), 64, 16.0).unwrap();
        let out = quantize(&[C64::new(0.0, 0.0)], &q);
        assert_abs_diff_eq!(out[0].re, q.alpha * q.gamma / 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0].im, q.alpha * q.gamma / 2.0, epsilon = 1e-15);
    }

    #[test]
    fn saturates_at_outer_levels() {
        let q = build_quantizer(Resolution::Bits(2), 8, 1.0).unwrap();
        let out = quantize(&[C64::new(1e9, -1e9)], &q);
        assert_abs_diff_eq!(out[0].re, q.saturation(), epsilon = 1e-12);
        assert_abs_diff_eq!(out[0].im, -q.saturation(), epsilon = 1e-12);
        assert_abs_diff_eq!(q.saturation(), 1.5 * q.alpha * q.gamma, epsilon = 1e-15);
    }

    #[test]
    fn delta_invariant_to_antenna_count_and_power() {
        let a = build_quantizer(Resolution::Bits(4), 64, 16.0).unwrap();
        let b = build_quantizer(Resolution::Bits(4), 8, 3.0).unwrap();
        assert_abs_diff_eq!(a.delta, b.delta, epsilon = 1e-12);
        assert_abs_diff_eq!(a.alpha, b.alpha, epsilon = 1e-6);
        assert_abs_diff_eq!(a.gamma / per_dimension_std(64, 16.0), b.gamma / per_dimension_std(8, 3.0), epsilon = 1e-6);
    }

    #[test]
    fn invalid_arguments() {
        assert!(build_quantizer(Resolution::Bits(1), 8, 1.0).is_err());
        assert!(build_quantizer(Resolution::Bits(13), 8, 1.0).is_err());
        assert!(build_quantizer(Resolution::Bits(3), 0, 1.0).is_err());
        assert!(build_quantizer(Resolution::Bits(3), 8, 0.0).is_err());
    }

    #[test]
    fn twelve_bits_is_nearly_transparent() {
        let q = build_quantizer(Resolution::Bits(12), 64, 16.0).unwrap();
        assert!(q.delta > 0.99999 && q.delta < 1.0);
    }

    #[test]
    fn full_resolution_sentinel() {
        let q = build_quantizer(Resolution::Full, 4, 2.0).unwrap();
        assert_eq!(q.delta, 1.0);
        let x = vec![C64::new(0.3, -2.0); 4];
        assert_eq!(quantize(&x, &q), x);
        let mut rng = rng_stream(1, 0, Purpose::Signal);
        let p = gaussian_matrix(4, 2, &mut rng);
        let stats = verify_bussgang(&q, &p, 1000, 3).unwrap();
        assert_eq!(stats.cross_corr_norm, 0.0);
        assert_eq!(stats.rff_error, 0.0);
    }

    #[test]
    fn scalar_distortion_matches_one_minus_delta_squared() {
        // 10^6 scalar Gaussian samples per real dimension; variance matches the design point.
        let q = build_quantizer(Resolution::Bits(3), 1, 2.0).unwrap();
        let mut rng = rng_stream(99, 0, Purpose::Signal);
        let (mut err, mut pow) = (0.0, 0.0);
        for _ in 0..1_000_000 {
            let x: f64 = rng.sample::<f64, _>(rand_distr::StandardNormal);
            let e = q.quantize_scalar(x) - q.delta * x;
            err += e * e;
            pow += x * x;
        }
        let ratio = err / pow;
        let expected = 1.0 - q.delta * q.delta;
        assert!((ratio - expected).abs() < 0.03 * expected, "ratio {ratio} vs {expected}");
    }

    fn normalized_gaussian_precoder(nb: usize, nu: usize, p_total: f64, seed: u64) -> CMatrix {
        let p = gaussian_matrix(nb, nu, &mut rng_stream(seed, 0, Purpose::Channel));
        let scale = (p_total / p.frobenius_norm().powi(2)).sqrt();
        p.scale(scale)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn delta_strictly_increases_with_bits(nb in 1usize..256, p_total in 0.01f64..1000.0) {
            let deltas: Vec<f64> = (MIN_BITS..=MAX_BITS)
                .map(|b| build_quantizer(Resolution::Bits(b), nb, p_total).unwrap().delta)
                .collect();
            for w in deltas.windows(2) {
                prop_assert!(w[1] > w[0], "{deltas:?}");
            }
            prop_assert!(deltas[deltas.len() - 1] < 1.0);
        }

        #[test]
        fn requantising_a_level_keeps_its_index(
            bits in MIN_BITS..=8u32,
            nb in 1usize..128,
            p_total in 0.1f64..100.0,
            x in -50.0f64..50.0,
        ) {
            let q = build_quantizer(Resolution::Bits(bits), nb, p_total).unwrap();
            let k = q.level_index(x);
            let y = q.quantize_scalar(x);
            prop_assert_eq!(q.level_index(y / q.alpha), k);
            prop_assert_eq!(q.quantize_scalar(y / q.alpha), y);
        }
    }

    #[test]
    fn output_power_matches_budget() {
        for bits in [2, 3, 5] {
            let q = build_quantizer(Resolution::Bits(bits), 64, 16.0).unwrap();
            let p = normalized_gaussian_precoder(64, 16, 16.0, 40 + bits as u64);
            let stats = verify_bussgang(&q, &p, 100_000, 7).unwrap();
            assert!((stats.output_power_ratio - 1.0).abs() < 0.02, "b = {bits}: {}", stats.output_power_ratio);
        }
    }

    fn equal_row_power_precoder(nb: usize, nu: usize, p_total: f64, seed: u64) -> CMatrix {
        let mut p = gaussian_matrix(nb, nu, &mut rng_stream(seed, 0, Purpose::Channel));
        let per_row = (p_total / nb as f64).sqrt();
        for i in 0..nb {
            let norm = (0..nu).map(|k| p[(i, k)].norm_sqr()).sum::<f64>().sqrt();
            for k in 0..nu {
                p[(i, k)] *= per_row / norm;
            }
        }
        p
    }

    #[test]
    fn cross_correlation_shrinks_with_sample_count() {
        // Every antenna carries the design variance, so the per-antenna gain equals delta.
        let q = build_quantizer(Resolution::Bits(3), 16, 4.0).unwrap();
        let p = equal_row_power_precoder(16, 4, 4.0, 8);
        let norms: Vec<f64> =
            [1_000, 10_000, 100_000].iter().map(|&n| verify_bussgang(&q, &p, n, 21).unwrap().cross_corr_norm).collect();
        assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
    }

    #[test]
    fn resolution_parsing() {
        assert_eq!("FR".parse::<Resolution>().unwrap(), Resolution::Full);
        assert_eq!(" 5 ".parse::<Resolution>().unwrap(), Resolution::Bits(5));
        assert!("five".parse::<Resolution>().is_err());
        assert_eq!(Resolution::Bits(3).to_string(), "3");
    }
}
