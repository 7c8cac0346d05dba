//! Panel manifest: the on-disk description of which series feed the panel
//! and which sectors consume each macro series.
//!
//! ```toml
//! [[price]]
//! sector = "technology"
//! ticker = "IYW"
//! path = "prices/IYW.csv"
//!
//! [[series]]
//! name = "gdp"
//! path = "macro/gdp.csv"
//! frequency = "quarterly"
//! sectors = ["all"]          # or a list of sector names
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

use super::panel::{build_panel, MonthlyPanel, PanelBuildReport, SectorUniverse};
use super::series::{parse_series_csv, Frequency, RawSeries};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PriceEntry {
    pub sector: String,
    pub ticker: String,
    pub path: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SeriesEntry {
    pub name: String,
    pub path: PathBuf,
    pub frequency: Frequency,
    /// Sector names whose models consume this series, or `["all"]`.
    pub sectors: Vec<String>,
}

impl SeriesEntry {
    pub fn feeds_sector(&self, sector: &str) -> bool {
        self.sectors.iter().any(|s| s == "all" || s == sector)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PanelManifest {
    pub price: Vec<PriceEntry>,
    pub series: Vec<SeriesEntry>,
}

impl PanelManifest {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let manifest: PanelManifest =
            toml::from_str(text).map_err(|e| CoreError::Manifest(e.to_string()))?;
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| CoreError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut manifest = Self::from_toml_str(&text)?;
        // Paths are relative to the manifest file.
        if let Some(dir) = path.parent() {
            for p in &mut manifest.price {
                p.path = dir.join(&p.path);
            }
            for s in &mut manifest.series {
                s.path = dir.join(&s.path);
            }
        }
        Ok(manifest)
    }

    fn validate(&self) -> Result<()> {
        if self.price.is_empty() {
            return Err(CoreError::Manifest("no price entries".into()));
        }
        if self.series.is_empty() {
            return Err(CoreError::Manifest("no macro series entries".into()));
        }
        for s in &self.series {
            for sector in &s.sectors {
                if sector != "all" && !self.price.iter().any(|p| &p.sector == sector) {
                    return Err(CoreError::Manifest(format!(
                        "series '{}' names unknown sector '{sector}'",
                        s.name
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn universe(&self) -> Result<SectorUniverse> {
        SectorUniverse::custom(
            self.price
                .iter()
                .map(|p| (p.sector.clone(), p.ticker.clone()))
                .collect(),
        )
    }

    /// Names of the candidate features for one sector's models, in manifest
    /// order: the common series plus the sector-specific ones.
    pub fn candidate_features(&self, sector: &str) -> Vec<String> {
        self.series
            .iter()
            .filter(|s| s.feeds_sector(sector))
            .map(|s| s.name.clone())
            .collect()
    }

    /// Reads every referenced CSV and assembles the aligned panel.
    pub fn build(&self) -> Result<(MonthlyPanel, PanelBuildReport)> {
        let universe = self.universe()?;
        let prices: Vec<RawSeries> = self
            .price
            .iter()
            .map(|p| parse_series_csv(&p.path, &p.ticker, Frequency::Daily))
            .collect::<Result<_>>()?;
        let macros: Vec<RawSeries> = self
            .series
            .iter()
            .map(|s| parse_series_csv(&s.path, &s.name, s.frequency))
            .collect::<Result<_>>()?;
        build_panel(&prices, &macros, &universe)
    }
}
