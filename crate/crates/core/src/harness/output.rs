use std::io::Write;
use std::path::{Path, PathBuf};

use super::{RateResult, ScenarioConfig};
use crate::channel::{read_matrix_file, rng_stream, write_matrix_file, ChannelSet, Purpose};
use crate::error::{Error, Result};

pub const CSV_HEADER: [&str; 9] = [
    "scenario_id",
    "snr_db",
    "precoder",
    "bits",
    "power_alloc",
    "trials",
    "mean_rate_bpcu",
    "stderr_bpcu",
    "failed_cells",
];

/// Six significant digits, `%g` style: fixed notation for exponents in
/// `-4..6`, scientific otherwise, trailing zeros removed.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-4..6).contains(&exp) {
        trim_zeros(format!("{:.*}", (5 - exp) as usize, x))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim_zeros(mantissa.to_string()), sign, exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

pub fn write_csv<W: Write>(out: W, results: &[RateResult]) -> Result<()> {
    let io = |e: csv::Error| Error::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(io)?;
    for r in results {
        w.write_record([
            r.scenario_id.clone(),
            format_sig(r.snr_db),
            r.precoder.clone(),
            r.bits.label(),
            r.power_alloc.clone(),
            r.trials.to_string(),
            format_sig(r.mean_rate),
            format_sig(r.stderr),
            r.failed.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn channel_file(dir: &Path, trial: usize) -> PathBuf {
    dir.join(format!("trial_{trial:06}.txt"))
}

/// Writes the channel of every trial of `cfg` to `dir`, returning the count.
pub fn dump_channels(cfg: &ScenarioConfig, dir: &Path) -> Result<usize> {
    cfg.validate()?;
    std::fs::create_dir_all(dir)?;
    let partition = cfg.partition();
    for t in 0..cfg.trials {
        let ch = ChannelSet::sample(cfg.nb, &partition, &mut rng_stream(cfg.seed, t as u64, Purpose::Channel))?;
        write_matrix_file(&channel_file(dir, t), &ch.stacked())?;
    }
    Ok(cfg.trials)
}

pub fn load_channel(dir: &Path, trial: usize, nb: usize, partition: &[usize]) -> Result<ChannelSet> {
    let path = channel_file(dir, trial);
    let h = read_matrix_file(&path).map_err(|e| match e {
        Error::Io(m) => Error::Io(format!("{}: {m}", path.display())),
        other => other,
    })?;
    if h.cols() != nb {
        return Err(Error::DimensionMismatch {
            expected: format!("{nb} transmit antennas"),
            found: format!("{} columns in {}", h.cols(), path.display()),
        });
    }
    ChannelSet::from_stacked(&h, partition)
}
