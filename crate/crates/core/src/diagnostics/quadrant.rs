use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::panel::{CityCode, CityMeta, Factor};

pub const DEFAULT_P_CUT: f64 = 0.10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Level {
    Low,
    High,
}

impl Level {
    fn of(value: f64, cut: f64) -> Level {
        if value >= cut {
            Level::High
        } else {
            Level::Low
        }
    }

    fn letter(self) -> char {
        match self {
            Level::Low => 'L',
            Level::High => 'H',
        }
    }
}

/// `(proxy level, p-value level)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Quadrant {
    pub proxy: Level,
    pub p_value: Level,
}

impl fmt::Display for Quadrant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.proxy.letter(), self.p_value.letter())
    }
}

/// Census proxy paired with a factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProxyKind {
    /// Percent of city area covered by water, paired with Waterfront.
    WaterArea,
    /// Percent of seniors living alone, paired with Accessible.
    SeniorsAlone,
}

impl ProxyKind {
    pub fn default_cut(self) -> f64 {
        match self {
            ProxyKind::WaterArea => 2.45,
            ProxyKind::SeniorsAlone => 6.0,
        }
    }

    pub fn factor(self) -> Factor {
        match self {
            ProxyKind::WaterArea => Factor::Waterfront,
            ProxyKind::SeniorsAlone => Factor::Accessible,
        }
    }

    pub fn value(self, meta: &CityMeta) -> f64 {
        match self {
            ProxyKind::WaterArea => meta.water_area_pct,
            ProxyKind::SeniorsAlone => meta.seniors_alone_pct,
        }
    }

    pub fn default_thresholds(self) -> QuadrantThresholds {
        QuadrantThresholds {
            proxy_cut: self.default_cut(),
            p_cut: DEFAULT_P_CUT,
        }
    }
}

impl fmt::Display for ProxyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProxyKind::WaterArea => "water-area",
            ProxyKind::SeniorsAlone => "seniors-alone",
        })
    }
}

impl FromStr for ProxyKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "water-area" | "water" | "waterfront" => Ok(ProxyKind::WaterArea),
            "seniors-alone" | "seniors" | "accessible" => Ok(ProxyKind::SeniorsAlone),
            other => Err(Error::Validation(format!("unknown proxy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadrantThresholds {
    pub proxy_cut: f64,
    pub p_cut: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantEntry {
    pub city: CityCode,
    pub proxy: f64,
    pub p_value: f64,
    pub quadrant: Quadrant,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadrantReport {
    pub thresholds: QuadrantThresholds,
    /// Alphabetical by city.
    pub entries: Vec<QuadrantEntry>,
}

impl QuadrantReport {
    pub fn quadrant(&self, city: &CityCode) -> Option<Quadrant> {
        self.entries.iter().find(|e| &e.city == city).map(|e| e.quadrant)
    }

    /// Cities in the given quadrant, alphabetical.
    pub fn members(&self, proxy: Level, p_value: Level) -> Vec<&CityCode> {
        let q = Quadrant { proxy, p_value };
        self.entries.iter().filter(|e| e.quadrant == q).map(|e| &e.city).collect()
    }
}

/// Labels each city `high` on an axis when its value is at or above the cut.
pub fn quadrant_analysis(
    p_values: &[(CityCode, f64)],
    proxies: &[(CityCode, f64)],
    thresholds: QuadrantThresholds,
) -> Result<QuadrantReport> {
    if p_values.len() != proxies.len() {
        return Err(Error::Validation("p-values and proxies cover different cities".into()));
    }
    let mut entries = p_values
        .iter()
        .map(|(city, p)| {
            let proxy = proxies
                .iter()
                .find(|(c, _)| c == city)
                .map(|(_, v)| *v)
                .ok_or_else(|| Error::Validation(format!("no proxy value for {city}")))?;
            Ok(QuadrantEntry {
                city: city.clone(),
                proxy,
                p_value: *p,
                quadrant: Quadrant {
                    proxy: Level::of(proxy, thresholds.proxy_cut),
                    p_value: Level::of(*p, thresholds.p_cut),
                },
            })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.city.cmp(&b.city));
    if entries.windows(2).any(|w| w[0].city == w[1].city) {
        return Err(Error::Validation("duplicate city in quadrant input".into()));
    }
    Ok(QuadrantReport { thresholds, entries })
}
