//! Sweep configuration as read from JSON.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Result, SenseError};
use crate::model::OfdmConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    KnownOffset,
    UnknownOffset,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::KnownOffset => "known",
            Mode::UnknownOffset => "unknown",
        })
    }
}

impl FromStr for Mode {
    type Err = SenseError;

    /// Accepts the short CLI spelling and the config spelling.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "known" | "known_offset" => Ok(Mode::KnownOffset),
            "unknown" | "unknown_offset" => Ok(Mode::UnknownOffset),
            _ => Err(SenseError::Parse(format!("unknown mode {s:?}"))),
        }
    }
}

fn default_trials() -> usize {
    1000
}

fn default_max_sweeps() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n_sub: usize,
    pub n_cp: usize,
    /// `M / N` values; `M = round(ratio * N)`.
    pub compression_ratios: Vec<f64>,
    pub k_values: Vec<usize>,
    pub n_blocks_values: Vec<usize>,
    /// Numbers, or the string `"inf"` for a noiseless cell.
    #[serde(serialize_with = "ser_snr", deserialize_with = "de_snr")]
    pub snr_grid_db: Vec<f64>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    pub seed: u64,
    pub mode: Mode,
    #[serde(default = "default_max_sweeps")]
    pub max_sweeps: usize,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SnrValue {
    Num(f64),
    Text(String),
}

fn de_snr<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<f64>, D::Error> {
    Vec::<SnrValue>::deserialize(de)?
        .into_iter()
        .map(|v| match v {
            SnrValue::Num(x) => Ok(x),
            SnrValue::Text(t) => parse_snr(&t).map_err(serde::de::Error::custom),
        })
        .collect()
}

fn ser_snr<S: Serializer>(v: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(v.len()))?;
    for x in v {
        if x.is_finite() {
            seq.serialize_element(x)?;
        } else {
            seq.serialize_element("inf")?;
        }
    }
    seq.end()
}

/// An SNR in dB. `inf` (any case) means no noise.
pub fn parse_snr(s: &str) -> Result<f64> {
    let t = s.trim();
    if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("+inf") {
        return Ok(f64::INFINITY);
    }
    match t.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(SenseError::Parse(format!("bad SNR value {s:?}"))),
    }
}

/// One point of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub cfg: OfdmConfig,
    pub ratio: f64,
    pub snr_db: f64,
}

fn check_distinct<T: PartialEq + fmt::Debug>(name: &str, v: &[T]) -> Result<()> {
    if v.is_empty() {
        return Err(SenseError::InvalidConfig(format!("{name} is empty")));
    }
    for (i, x) in v.iter().enumerate() {
        if v[..i].contains(x) {
            return Err(SenseError::InvalidConfig(format!("{name} repeats {x:?}")));
        }
    }
    Ok(())
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let sc: Self = serde_json::from_str(text).map_err(|e| SenseError::Parse(e.to_string()))?;
        sc.cells()?;
        Ok(sc)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| SenseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Every grid cell in config order: ratio, then k, then n_blocks, then
    /// SNR. The position in this list is the cell index used for seeding.
    /// Fails on the first invalid combination, before any work is done.
    pub fn cells(&self) -> Result<Vec<Cell>> {
        if self.trials == 0 {
            return Err(SenseError::InvalidConfig(
                "trials must be at least 1".into(),
            ));
        }
        if self.max_sweeps == 0 {
            return Err(SenseError::InvalidConfig(
                "max_sweeps must be at least 1".into(),
            ));
        }
        check_distinct("compression_ratios", &self.compression_ratios)?;
        check_distinct("k_values", &self.k_values)?;
        check_distinct("n_blocks_values", &self.n_blocks_values)?;
        check_distinct("snr_grid_db", &self.snr_grid_db)?;
        if let Some(x) = self
            .snr_grid_db
            .iter()
            .find(|x| x.is_nan() || **x == f64::NEG_INFINITY)
        {
            return Err(SenseError::InvalidConfig(format!("bad SNR {x}")));
        }

        let mut cells = Vec::new();
        for &ratio in &self.compression_ratios {
            for &k in &self.k_values {
                for &nb in &self.n_blocks_values {
                    let cfg = OfdmConfig::with_ratio(self.n_sub, self.n_cp, k, ratio, nb).map_err(
                        |e| {
                            SenseError::InvalidConfig(format!(
                                "ratio={ratio} k={k} n_blocks={nb}: {e}"
                            ))
                        },
                    )?;
                    cells.extend(self.snr_grid_db.iter().map(|&snr_db| Cell {
                        cfg,
                        ratio,
                        snr_db,
                    }));
                }
            }
        }
        Ok(cells)
    }
}
