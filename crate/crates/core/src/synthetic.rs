//! Deterministic synthetic dataset in the shape of the real inputs: eight
//! daily sector price series plus mixed-frequency macro series, with a
//! planted regime in which a known sector quartet persistently outgrows the
//! rest. Used for the packaged sample dataset, demos, and end-to-end tests.

use std::path::Path;

use chrono::{Datelike, NaiveDate, Weekday};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CoreError, Result};
use crate::marketdata::{build_panel, Frequency, MonthlyPanel, Observation, PanelBuildReport, RawSeries, SectorUniverse};
use crate::month::Month;
use crate::rng::SeedStream;

/// The quartet planted to dominate: healthcare, utilities, technology,
/// industrials.
pub const STRONG_TICKERS: [&str; 4] = ["IYH", "IDU", "IYW", "IYJ"];

/// Per-sector macro series names, mirroring the common-plus-specific
/// catalog structure of the real inputs.
pub fn macro_catalog() -> Vec<(String, Frequency, Vec<&'static str>)> {
    vec![
        ("gdp".into(), Frequency::Quarterly, vec!["all"]),
        ("unemployment_rate".into(), Frequency::Monthly, vec!["all"]),
        ("cpi".into(), Frequency::Monthly, vec!["all"]),
        ("mortgage_rate_30y".into(), Frequency::Weekly, vec!["all"]),
        ("fed_funds_rate".into(), Frequency::Monthly, vec!["all"]),
        ("life_expectancy".into(), Frequency::Annual, vec!["healthcare"]),
        ("population".into(), Frequency::Annual, vec!["healthcare"]),
        ("crude_oil_price".into(), Frequency::Monthly, vec!["energy", "industrials", "utilities"]),
        ("energy_consumption".into(), Frequency::Monthly, vec!["energy", "utilities"]),
        ("natural_gas_price".into(), Frequency::Annual, vec!["utilities"]),
        ("libor_rate".into(), Frequency::Daily, vec!["finance"]),
        ("debt_to_gdp".into(), Frequency::Monthly, vec!["finance"]),
        ("rnd_value".into(), Frequency::Annual, vec!["technology"]),
        ("imports".into(), Frequency::Monthly, vec!["technology", "energy"]),
        ("copper_price".into(), Frequency::Daily, vec!["materials"]),
        ("iron_ore_price".into(), Frequency::Monthly, vec!["materials"]),
        ("industrial_production".into(), Frequency::Monthly, vec!["industrials"]),
        ("capacity_utilization".into(), Frequency::Monthly, vec!["industrials"]),
        ("consumer_confidence".into(), Frequency::Monthly, vec!["consumer goods"]),
        ("business_confidence".into(), Frequency::Monthly, vec!["consumer goods"]),
    ]
}

pub struct SampleData {
    pub prices: Vec<RawSeries>,
    pub macros: Vec<RawSeries>,
    pub universe: SectorUniverse,
}

struct LatentFactors {
    /// One value per month: slow business-cycle factor in [-1, 1].
    cycle: Vec<f64>,
    /// Cumulative trend factor.
    trend: Vec<f64>,
}

fn latent_factors(n_months: usize, rng: &mut ChaCha8Rng) -> LatentFactors {
    let mut cycle = Vec::with_capacity(n_months);
    let mut trend = Vec::with_capacity(n_months);
    let mut drift = 0.0;
    for i in 0..n_months {
        let phase = i as f64 * std::f64::consts::TAU / 96.0;
        cycle.push(phase.sin() + 0.2 * rng.random_range(-1.0..1.0));
        drift += 0.004 + 0.002 * rng.random_range(-1.0..1.0);
        trend.push(drift);
    }
    LatentFactors { cycle, trend }
}

fn month_sequence(first: Month, last: Month) -> Vec<Month> {
    let n = last.months_since(first) + 1;
    (0..n).map(|i| first.add_months(i)).collect()
}

/// Generates the full synthetic input set. Prices run on weekdays from
/// `2000-07-14` through `2019-11-08`; macro series cover a wider span so
/// the prices bind the panel (233 monthly rows).
pub fn generate(seed: u64) -> SampleData {
    let universe = SectorUniverse::default_eight();
    let root = SeedStream::root(seed).child_str("synthetic");

    let first_macro = Month::new(1999, 12).unwrap();
    let last_macro = Month::new(2019, 12).unwrap();
    let macro_months = month_sequence(first_macro, last_macro);
    let n_macro = macro_months.len();

    let mut factor_rng = root.child_str("factors").rng();
    let factors = latent_factors(n_macro, &mut factor_rng);

    // Monthly macro paths: each one loads on the cycle and trend with its
    // own sign and scale, plus smooth AR(1) noise.
    let catalog = macro_catalog();
    let mut macros = Vec::with_capacity(catalog.len());
    let mut macro_paths: Vec<Vec<f64>> = Vec::with_capacity(catalog.len());
    for (idx, (name, frequency, _)) in catalog.iter().enumerate() {
        let mut rng = root.child_str(name).rng();
        let base = rng.random_range(10.0..200.0);
        let cycle_load = rng.random_range(-0.1..0.1);
        let trend_load = rng.random_range(-0.5..1.5);
        let noise_scale = 0.01 * base;
        let mut ar = 0.0;
        let path: Vec<f64> = (0..n_macro)
            .map(|i| {
                ar = 0.9 * ar + noise_scale * rng.random_range(-1.0..1.0);
                base * (1.0 + cycle_load * factors.cycle[i] + trend_load * factors.trend[i]) + ar
            })
            .collect();
        macro_paths.push(path.clone());
        macros.push(macro_series_from_path(
            name,
            *frequency,
            &macro_months,
            &path,
            &mut rng,
        ));
        let _ = idx;
    }

    // Sector prices: cumulative log walks whose drift ties to the macro
    // paths feeding that sector, with the planted quartet carrying a
    // persistent growth premium.
    let first_price_date = NaiveDate::from_ymd_opt(2000, 7, 14).unwrap();
    let last_price_date = NaiveDate::from_ymd_opt(2019, 11, 8).unwrap();
    let price_months = month_sequence(Month::new(2000, 6).unwrap(), Month::new(2019, 12).unwrap());
    let macro_offset = price_months[0].months_since(first_macro) as usize;

    let mut prices = Vec::with_capacity(universe.len());
    for (sector, ticker) in &universe.sectors {
        let mut rng = root.child_str(ticker).rng();
        let strong = STRONG_TICKERS.contains(&ticker.as_str());
        let drift = if strong { 0.012 } else { 0.001 };
        // Tie the cycle response to this sector's first specific macro.
        let load_idx = catalog
            .iter()
            .position(|(_, _, sectors)| sectors.contains(&sector.as_str()))
            .unwrap_or(0);
        let macro_path = &macro_paths[load_idx];
        let macro_base = macro_path[macro_offset];

        let mut log_price = (rng.random_range(40.0..120.0) as f64).ln();
        let mut monthly_log: Vec<f64> = Vec::with_capacity(price_months.len());
        for (i, _) in price_months.iter().enumerate() {
            let m_idx = macro_offset + i;
            let macro_rel = macro_path[m_idx.min(macro_path.len() - 1)] / macro_base - 1.0;
            let shock = 0.004 * rng.random_range(-1.0..1.0);
            log_price += drift + 0.02 * macro_rel.clamp(-0.5, 0.5) + shock;
            monthly_log.push(log_price);
        }

        prices.push(daily_price_series(
            ticker,
            &price_months,
            &monthly_log,
            first_price_date,
            last_price_date,
            &mut rng,
        ));
    }

    SampleData {
        prices,
        macros,
        universe,
    }
}

/// Emits the series at its native reporting frequency.
fn macro_series_from_path(
    name: &str,
    frequency: Frequency,
    months: &[Month],
    path: &[f64],
    rng: &mut ChaCha8Rng,
) -> RawSeries {
    let observations: Vec<Observation> = match frequency {
        Frequency::Monthly => months
            .iter()
            .zip(path)
            .map(|(m, &v)| Observation {
                date: m.end_date(),
                value: v,
            })
            .collect(),
        Frequency::Quarterly => months
            .iter()
            .zip(path)
            .filter(|(m, _)| m.month() % 3 == 0)
            .map(|(m, &v)| Observation {
                date: m.end_date(),
                value: v,
            })
            .collect(),
        Frequency::Annual => months
            .iter()
            .zip(path)
            .filter(|(m, _)| m.month() == 12)
            .map(|(m, &v)| Observation {
                date: m.end_date(),
                value: v,
            })
            .collect(),
        Frequency::Weekly => {
            // Fridays, linearly interpolating the monthly path by day.
            dated_subsamples(months, path, |d| d.weekday() == Weekday::Fri, rng, 0.002)
        }
        Frequency::Daily => dated_subsamples(
            months,
            path,
            |d| !matches!(d.weekday(), Weekday::Sat | Weekday::Sun),
            rng,
            0.003,
        ),
    };
    RawSeries::new(name, frequency, observations).expect("synthetic series is valid")
}

/// Day-level samples of the month-level path (linear in days between month
/// ends) on the dates `keep` admits, with small relative noise.
fn dated_subsamples(
    months: &[Month],
    path: &[f64],
    keep: impl Fn(NaiveDate) -> bool,
    rng: &mut ChaCha8Rng,
    noise: f64,
) -> Vec<Observation> {
    let first = months[0].end_date();
    let last = months[months.len() - 1].end_date();
    let mut observations = Vec::new();
    let mut d = first;
    while d <= last {
        if keep(d) {
            let value = interpolate_month_path(months, path, d);
            let jitter = 1.0 + noise * rng.random_range(-1.0..1.0);
            observations.push(Observation {
                date: d,
                value: value * jitter,
            });
        }
        d = d.succ_opt().unwrap();
    }
    observations
}

fn interpolate_month_path(months: &[Month], path: &[f64], date: NaiveDate) -> f64 {
    let anchor_of = |i: usize| months[i].end_date();
    if date <= anchor_of(0) {
        return path[0];
    }
    for i in 1..months.len() {
        if date <= anchor_of(i) {
            let d0 = anchor_of(i - 1);
            let d1 = anchor_of(i);
            let t = (date - d0).num_days() as f64 / (d1 - d0).num_days() as f64;
            return path[i - 1] + (path[i] - path[i - 1]) * t;
        }
    }
    path[path.len() - 1]
}

fn daily_price_series(
    ticker: &str,
    months: &[Month],
    monthly_log: &[f64],
    first: NaiveDate,
    last: NaiveDate,
    rng: &mut ChaCha8Rng,
) -> RawSeries {
    let mut observations = Vec::new();
    let mut d = first;
    while d <= last {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            let log_level = interpolate_month_path(months, monthly_log, d);
            let jitter = 0.0015 * rng.random_range(-1.0..1.0);
            observations.push(Observation {
                date: d,
                value: (log_level + jitter).exp(),
            });
        }
        d = d.succ_opt().unwrap();
    }
    RawSeries::new(ticker, Frequency::Daily, observations).expect("synthetic prices are valid")
}

/// Builds the aligned panel straight from generated (in-memory) data.
pub fn sample_panel(seed: u64) -> Result<(MonthlyPanel, PanelBuildReport)> {
    let data = generate(seed);
    build_panel(&data.prices, &data.macros, &data.universe)
}

/// Writes the sample dataset as CSV files plus a panel manifest under
/// `dir` (`prices/<ticker>.csv`, `macro/<name>.csv`, `manifest.toml`).
pub fn write_sample_dataset(dir: impl AsRef<Path>, seed: u64) -> Result<()> {
    let dir = dir.as_ref();
    let data = generate(seed);
    let io_err = |path: &Path, source: std::io::Error| CoreError::Io {
        path: path.to_path_buf(),
        source,
    };

    let prices_dir = dir.join("prices");
    let macro_dir = dir.join("macro");
    std::fs::create_dir_all(&prices_dir).map_err(|e| io_err(&prices_dir, e))?;
    std::fs::create_dir_all(&macro_dir).map_err(|e| io_err(&macro_dir, e))?;

    let write_series = |path: &Path, series: &RawSeries| -> Result<()> {
        let mut out = String::with_capacity(series.len() * 24);
        out.push_str("date,value\n");
        for obs in &series.observations {
            out.push_str(&format!("{},{:.6}\n", obs.date, obs.value));
        }
        std::fs::write(path, out).map_err(|e| io_err(path, e))
    };

    for series in &data.prices {
        write_series(&prices_dir.join(format!("{}.csv", series.name)), series)?;
    }
    for series in &data.macros {
        write_series(&macro_dir.join(format!("{}.csv", series.name)), series)?;
    }

    let mut manifest = String::new();
    for (sector, ticker) in &data.universe.sectors {
        manifest.push_str(&format!(
            "[[price]]\nsector = \"{sector}\"\nticker = \"{ticker}\"\npath = \"prices/{ticker}.csv\"\n\n"
        ));
    }
    for (name, frequency, sectors) in macro_catalog() {
        let sector_list = sectors
            .iter()
            .map(|s| format!("\"{s}\""))
            .collect::<Vec<_>>()
            .join(", ");
        manifest.push_str(&format!(
            "[[series]]\nname = \"{name}\"\npath = \"macro/{name}.csv\"\nfrequency = \"{frequency}\"\nsectors = [{sector_list}]\n\n"
        ));
    }
    let manifest_path = dir.join("manifest.toml");
    std::fs::write(&manifest_path, manifest).map_err(|e| io_err(&manifest_path, e))
}
