use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::ModelError;

pub const HOURS_PER_YEAR: usize = 8760;

/// Hourly capacity factors for one year.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self, ModelError> {
        if values.len() != HOURS_PER_YEAR {
            return Err(ModelError::Parameter(format!(
                "time series has {} values, expected {HOURS_PER_YEAR}",
                values.len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
            return Err(ModelError::Parameter(format!(
                "capacity factor {v} at hour {i} outside [0, 1]"
            )));
        }
        Ok(Self { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Block means over `hours`-long steps.
    pub fn resample(&self, hours: usize) -> Result<Vec<f64>, ModelError> {
        check_resolution(hours)?;
        Ok(self
            .values
            .chunks(hours)
            .map(|c| c.iter().sum::<f64>() / hours as f64)
            .collect())
    }
}

pub fn check_resolution(hours: usize) -> Result<usize, ModelError> {
    if hours == 0 || HOURS_PER_YEAR % hours != 0 {
        return Err(ModelError::Parameter(format!(
            "temporal resolution {hours} h does not divide {HOURS_PER_YEAR} h"
        )));
    }
    Ok(HOURS_PER_YEAR / hours)
}

/// Capacity-factor profiles for the export site.
#[derive(Debug, Clone, PartialEq)]
pub struct Weather {
    pub pv: TimeSeries,
    pub wind: TimeSeries,
}

#[derive(Debug, Deserialize, Serialize)]
struct WeatherRow {
    pv_cf: f64,
    wind_cf: f64,
}

impl Weather {
    pub fn profile(&self, name: &str) -> Result<&TimeSeries, ModelError> {
        match name {
            "pv" => Ok(&self.pv),
            "wind" => Ok(&self.wind),
            other => Err(ModelError::Config(format!(
                "unknown generation profile `{other}` (expected pv or wind)"
            ))),
        }
    }

    pub fn from_csv_reader<R: std::io::Read>(reader: R) -> Result<Self, ModelError> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr
            .headers()
            .map_err(|e| ModelError::Parse(format!("weather header: {e}")))?
            .clone();
        if headers.iter().collect::<Vec<_>>() != ["pv_cf", "wind_cf"] {
            return Err(ModelError::Parse(format!(
                "weather header must be `pv_cf,wind_cf`, got `{}`",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut pv = Vec::with_capacity(HOURS_PER_YEAR);
        let mut wind = Vec::with_capacity(HOURS_PER_YEAR);
        for (i, row) in rdr.deserialize::<WeatherRow>().enumerate() {
            let row = row.map_err(|e| ModelError::Parse(format!("weather row {}: {e}", i + 2)))?;
            pv.push(row.pv_cf);
            wind.push(row.wind_cf);
        }
        Ok(Self {
            pv: TimeSeries::new(pv)?,
            wind: TimeSeries::new(wind)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        let file = std::fs::File::open(path)
            .map_err(|e| ModelError::Io(format!("{}: {e}", path.display())))?;
        Self::from_csv_reader(file)
    }

    pub fn to_csv_string(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        for (p, v) in self.pv.values.iter().zip(&self.wind.values) {
            w.serialize(WeatherRow {
                pv_cf: *p,
                wind_cf: *v,
            })
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
    }

    /// The bundled synthetic profiles.
    pub fn bundled() -> Self {
        Self::from_csv_reader(super::BUNDLED_WEATHER.as_bytes())
            .expect("bundled weather is valid")
    }

    /// Deterministic synthetic year for a sunny, windy coastal site.
    ///
    /// Daily cloudiness and wind strength follow AR(1) processes around
    /// opposing seasonal cycles (sunny summers, windy winters). A handful of
    /// multi-day calm, overcast spells are imposed so that storage matters.
    /// Values are rounded to four decimals so the CSV round-trips exactly.
    pub fn synthesize(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let days = HOURS_PER_YEAR / 24;
        let mut cloud = 0.0f64;
        let mut gust = 0.0f64;
        let lulls: Vec<usize> = (0..5).map(|k| 20 + 70 * k + rng.random_range(0..30)).collect();
        let mut pv = Vec::with_capacity(HOURS_PER_YEAR);
        let mut wind = Vec::with_capacity(HOURS_PER_YEAR);
        for day in 0..days {
            let season = (2.0 * PI * (day as f64 - 172.0) / 365.0).cos();
            cloud = 0.7 * cloud + 0.3 * normal(&mut rng);
            gust = 0.8 * gust + 0.35 * normal(&mut rng);
            let lull = lulls.iter().any(|&s| day >= s && day < s + 3);
            let clearness = if lull {
                0.03
            } else {
                (0.92 + 0.06 * season - 0.25 * cloud.max(0.0)).clamp(0.25, 1.0)
            };
            let wind_level = if lull {
                0.01
            } else {
                (0.51 - 0.04 * season + 0.2 * gust).clamp(0.02, 0.97)
            };
            let daylight = 12.0 + 2.0 * season;
            let sunrise = 12.0 - daylight / 2.0;
            for h in 0..24 {
                let t = h as f64 + 0.5 - sunrise;
                let sun = if t > 0.0 && t < daylight {
                    (PI * t / daylight).sin().powf(1.2)
                } else {
                    0.0
                };
                let p = (0.97 * sun * clearness).clamp(0.0, 1.0);
                let diurnal = 1.0 + 0.12 * (2.0 * PI * (h as f64 - 3.0) / 24.0).cos();
                let jitter = 1.0 + 0.08 * normal(&mut rng);
                let w = (wind_level * diurnal * jitter).clamp(0.0, 1.0);
                pv.push(round4(p));
                wind.push(round4(w));
            }
        }
        Self {
            pv: TimeSeries::new(pv).expect("synthesized profile in range"),
            wind: TimeSeries::new(wind).expect("synthesized profile in range"),
        }
    }
}

fn round4(v: f64) -> f64 {
    (v * 1e4).round() / 1e4
}

fn normal(rng: &mut impl Rng) -> f64 {
    // Box-Muller; one draw per call keeps the stream simple.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}
