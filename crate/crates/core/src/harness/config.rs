use serde::Deserialize;

use crate::channel::CsiModel;
use crate::error::{Error, Result};
use crate::linalg::C64;
use crate::quantizer::Resolution;

/// One simulation sweep. Deserialises from JSON with snake_case keys;
/// `bits` entries may be integers or `"FR"`, `power_alloc` a name or a list.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(try_from = "RawConfig")]
pub struct ScenarioConfig {
    pub scenario_id: String,
    pub nb: usize,
    pub users: usize,
    pub antennas_per_user: usize,
    pub snr_db: Vec<f64>,
    pub bits: Vec<Resolution>,
    pub precoders: Vec<String>,
    pub power_alloc: Vec<String>,
    pub trials: usize,
    /// Symbol blocks sharing each channel draw; rates depend only on the draw.
    pub channels_per_trial: usize,
    pub seed: u64,
    pub csi: Option<CsiModel>,
    /// Total transmit power; defaults to `N_u`.
    pub p_total: Option<f64>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn nu(&self) -> usize {
        self.users * self.antennas_per_user
    }

    pub fn partition(&self) -> Vec<usize> {
        vec![self.antennas_per_user; self.users]
    }

    pub fn total_power(&self) -> f64 {
        self.p_total.unwrap_or(self.nu() as f64)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.users == 0 || self.antennas_per_user == 0 {
            return fail("users and antennas_per_user must be at least 1".into());
        }
        if self.nb < self.nu() {
            return fail(format!("nb = {} is below users * antennas_per_user = {}", self.nb, self.nu()));
        }
        if self.trials == 0 {
            return fail("trials must be at least 1".into());
        }
        if self.channels_per_trial == 0 {
            return fail("channels_per_trial must be at least 1".into());
        }
        if self.snr_db.is_empty() || self.snr_db.iter().any(|s| !s.is_finite()) {
            return fail("snr_db must be a nonempty list of finite values".into());
        }
        if self.bits.is_empty() || self.precoders.is_empty() || self.power_alloc.is_empty() {
            return fail("bits, precoders and power_alloc must be nonempty".into());
        }
        if let Some(Resolution::Bits(b)) =
            self.bits.iter().find(|r| matches!(r, Resolution::Bits(b) if !(2..=12).contains(b)))
        {
            return fail(format!("bit depth {b} outside 2..=12"));
        }
        if let Some(p) = self.p_total {
            if !(p > 0.0) || !p.is_finite() {
                return fail(format!("p_total {p} must be positive"));
            }
        }
        if let Some(csi) = &self.csi {
            csi.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum BitsField {
    Bits(u32),
    Label(String),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(String),
    Many(Vec<String>),
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ComplexField {
    Real(f64),
    Pair([f64; 2]),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCsi {
    r: ComplexField,
    sigma_e2: f64,
}

fn default_id() -> String {
    "scenario".to_string()
}

fn one() -> usize {
    1
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default = "default_id")]
    scenario_id: String,
    nb: usize,
    users: usize,
    antennas_per_user: usize,
    snr_db: Vec<f64>,
    bits: Vec<BitsField>,
    precoders: Vec<String>,
    power_alloc: OneOrMany,
    trials: usize,
    #[serde(default = "one")]
    channels_per_trial: usize,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    csi: Option<RawCsi>,
    #[serde(default)]
    p_total: Option<f64>,
}

impl TryFrom<RawConfig> for ScenarioConfig {
    type Error = Error;

    fn try_from(raw: RawConfig) -> Result<Self> {
        let bits = raw
            .bits
            .into_iter()
            .map(|b| match b {
                BitsField::Bits(n) => Ok(Resolution::Bits(n)),
                BitsField::Label(s) => s.parse::<Resolution>().map_err(|e| Error::Config(e.to_string())),
            })
            .collect::<Result<Vec<_>>>()?;
        let power_alloc = match raw.power_alloc {
            OneOrMany::One(s) => vec![s],
            OneOrMany::Many(v) => v,
        };
        let csi = raw.csi.map(|c| CsiModel {
            r: match c.r {
                ComplexField::Real(x) => C64::new(x, 0.0),
                ComplexField::Pair([re, im]) => C64::new(re, im),
            },
            sigma_e2: c.sigma_e2,
        });
        let cfg = ScenarioConfig {
            scenario_id: raw.scenario_id,
            nb: raw.nb,
            users: raw.users,
            antennas_per_user: raw.antennas_per_user,
            snr_db: raw.snr_db,
            bits,
            precoders: raw.precoders,
            power_alloc,
            trials: raw.trials,
            channels_per_trial: raw.channels_per_trial,
            seed: raw.seed,
            csi,
            p_total: raw.p_total,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
