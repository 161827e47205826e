//! County-level labeling of cumulative COVID case counts: a county is
//! "safe" when its average new-cases-per-day over a trailing window stays at
//! or below a threshold. Features are the county population and the
//! cumulative case count on the label date.

use std::collections::BTreeMap;
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CovidConfig {
    pub label_date: NaiveDate,
    pub window: u32,
    pub threshold: f64,
}

impl CovidConfig {
    pub fn new(label_date: NaiveDate, window: u32, threshold: f64) -> Result<Self> {
        if window < 1 {
            return Err(Error::InvalidParameter("window must be >= 1 day".into()));
        }
        if threshold <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        Ok(CovidConfig { label_date, window, threshold })
    }
}

impl Default for CovidConfig {
    fn default() -> Self {
        CovidConfig {
            label_date: NaiveDate::from_ymd_opt(2020, 5, 8).unwrap(),
            window: 3,
            threshold: 1.0,
        }
    }
}

/// One row of a cumulative cases table in the NYT county layout
/// `date,county,state,fips,cases,deaths`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRow {
    pub date: NaiveDate,
    pub county: String,
    pub state: String,
    pub fips: String,
    pub cases: f64,
}

/// Bookkeeping for everything the labeler dropped and why.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CovidStats {
    pub included: usize,
    pub rows_without_fips: usize,
    pub excluded_missing_dates: usize,
    pub excluded_zero_window: usize,
    pub excluded_non_monotone: usize,
    pub dropped_missing_population: usize,
}

pub fn load_cases(path: impl AsRef<Path>) -> Result<Vec<CaseRow>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_cases(&text, path.display().to_string())
}

pub fn parse_cases(text: &str, source: String) -> Result<Vec<CaseRow>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let lineno = idx + 2; // header is line 1
        let record = record.map_err(|e| Error::csv(source.clone(), e))?;
        if record.len() != 6 {
            return Err(Error::MalformedRow {
                path: source.clone(),
                line: lineno,
                reason: format!("expected 6 columns, found {}", record.len()),
            });
        }
        let date = NaiveDate::parse_from_str(record[0].trim(), "%Y-%m-%d").map_err(|e| {
            Error::MalformedRow {
                path: source.clone(),
                line: lineno,
                reason: format!("bad date {:?}: {e}", &record[0]),
            }
        })?;
        let cases: f64 = record[4].trim().parse().map_err(|e| Error::MalformedRow {
            path: source.clone(),
            line: lineno,
            reason: format!("bad case count {:?}: {e}", &record[4]),
        })?;
        rows.push(CaseRow {
            date,
            county: record[1].trim().to_string(),
            state: record[2].trim().to_string(),
            fips: record[3].trim().to_string(),
            cases,
        });
    }
    Ok(rows)
}

pub fn load_population(path: impl AsRef<Path>) -> Result<BTreeMap<String, f64>> {
    let path = path.as_ref();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    parse_population(&text, path.display().to_string())
}

pub fn parse_population(text: &str, source: String) -> Result<BTreeMap<String, f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let mut table = BTreeMap::new();
    for (idx, record) in reader.records().enumerate() {
        let lineno = idx + 2;
        let record = record.map_err(|e| Error::csv(source.clone(), e))?;
        if record.len() != 2 {
            return Err(Error::MalformedRow {
                path: source.clone(),
                line: lineno,
                reason: format!("expected 2 columns, found {}", record.len()),
            });
        }
        let population: f64 = record[1].trim().parse().map_err(|e| Error::MalformedRow {
            path: source.clone(),
            line: lineno,
            reason: format!("bad population {:?}: {e}", &record[1]),
        })?;
        table.insert(record[0].trim().to_string(), population);
    }
    Ok(table)
}

/// Label every county by the mean daily case growth over the window
/// `[label_date - window, label_date]`: safe (1) iff
/// (cases[label_date] - cases[label_date - window]) / window <= threshold,
/// otherwise unsafe (0). Counties are excluded when the window has any
/// missing date, is all-zero, or has non-monotone cumulative counts; rows
/// without a fips code are skipped. Counties with no population entry are
/// dropped with a warning. Features per county: (population, cases on the
/// label date); counties appear in ascending fips order.
pub fn covid_label(
    cases: &[CaseRow],
    population: &BTreeMap<String, f64>,
    config: &CovidConfig,
) -> Result<(Dataset, CovidStats)> {
    let mut stats = CovidStats::default();
    let start = config.label_date - chrono::Days::new(config.window as u64);

    // fips -> date -> cumulative cases, restricted to the window
    let mut by_county: BTreeMap<String, BTreeMap<NaiveDate, f64>> = BTreeMap::new();
    let mut seen_fips: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
    for row in cases {
        if row.fips.is_empty() {
            stats.rows_without_fips += 1;
            continue;
        }
        seen_fips.insert(row.fips.clone());
        if row.date >= start && row.date <= config.label_date {
            by_county.entry(row.fips.clone()).or_default().insert(row.date, row.cases);
        }
    }

    let window_len = config.window as usize + 1;
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for fips in &seen_fips {
        let Some(series) = by_county.get(fips) else {
            stats.excluded_missing_dates += 1;
            continue;
        };
        if series.len() != window_len {
            stats.excluded_missing_dates += 1;
            continue;
        }
        let values: Vec<f64> = series.values().copied().collect();
        if values.iter().all(|&c| c == 0.0) {
            stats.excluded_zero_window += 1;
            continue;
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            stats.excluded_non_monotone += 1;
            continue;
        }
        let Some(&pop) = population.get(fips) else {
            eprintln!("warning: no population for fips {fips}, dropping county");
            stats.dropped_missing_population += 1;
            continue;
        };
        let last = values[values.len() - 1];
        let derivative = (last - values[0]) / config.window as f64;
        rows.push(vec![pop, last]);
        labels.push(i32::from(derivative <= config.threshold));
        stats.included += 1;
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("no counties survived covid labeling"));
    }
    let name = format!("covid-{}-t{}", config.label_date, config.threshold);
    let mut ds = Dataset::from_rows(&name, rows, labels)?;
    ds.feature_names = vec!["population".into(), "cases".into()];
    Ok((ds, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(2020, 5, d).unwrap()
    }

    fn series(fips: &str, counts: &[(u32, f64)]) -> Vec<CaseRow> {
        counts
            .iter()
            .map(|&(d, c)| CaseRow {
                date: date(d),
                county: format!("county-{fips}"),
                state: "State".into(),
                fips: fips.into(),
                cases: c,
            })
            .collect()
    }

    fn config(threshold: f64) -> CovidConfig {
        CovidConfig::new(date(8), 3, threshold).unwrap()
    }

    fn pops(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
        entries.iter().map(|&(f, p)| (f.to_string(), p)).collect()
    }

    #[test]
    fn flat_counts_are_safe_at_every_threshold() {
        let cases = series("001", &[(5, 10.0), (6, 10.0), (7, 10.0), (8, 10.0)]);
        let pop = pops(&[("001", 1000.0)]);
        for t in [1.0, 3.0, 5.0] {
            let (ds, stats) = covid_label(&cases, &pop, &config(t)).unwrap();
            assert_eq!(ds.labels, vec![1]);
            assert_eq!(stats.included, 1);
        }
    }

    #[test]
    fn six_per_day_is_unsafe_at_all_documented_thresholds() {
        let cases = series("001", &[(5, 10.0), (6, 16.0), (7, 22.0), (8, 28.0)]);
        let pop = pops(&[("001", 1000.0)]);
        for t in [1.0, 3.0, 5.0] {
            let (ds, _) = covid_label(&cases, &pop, &config(t)).unwrap();
            assert_eq!(ds.labels, vec![0], "threshold {t}");
        }
    }

    #[test]
    fn derivative_equals_mean_of_daily_differences() {
        // (28 - 10)/3 = 6 = mean(6, 6, 6); threshold exactly 6 -> safe
        let cases = series("001", &[(5, 10.0), (6, 16.0), (7, 22.0), (8, 28.0)]);
        let pop = pops(&[("001", 1000.0)]);
        let (ds, _) = covid_label(&cases, &pop, &config(6.0)).unwrap();
        assert_eq!(ds.labels, vec![1]);
    }

    #[test]
    fn exclusion_bookkeeping() {
        let mut cases = series("001", &[(5, 10.0), (6, 10.0), (7, 10.0), (8, 12.0)]);
        cases.extend(series("002", &[(5, 0.0), (6, 0.0), (7, 0.0), (8, 0.0)])); // all zero
        cases.extend(series("003", &[(5, 4.0), (7, 5.0), (8, 6.0)])); // missing day 6
        cases.extend(series("004", &[(5, 9.0), (6, 7.0), (7, 8.0), (8, 9.0)])); // dip
        cases.extend(series("005", &[(5, 1.0), (6, 2.0), (7, 3.0), (8, 4.0)])); // no pop
        let mut orphan = series("006", &[(8, 3.0)]);
        orphan[0].fips = String::new();
        cases.extend(orphan);
        let pop = pops(&[("001", 50.0), ("002", 60.0), ("003", 70.0), ("004", 80.0)]);
        let (ds, stats) = covid_label(&cases, &pop, &config(1.0)).unwrap();
        assert_eq!(ds.n(), 1);
        assert_eq!(ds.labels, vec![1]); // (12-10)/3 < 1
        assert_eq!(ds.row(0), vec![50.0, 12.0]);
        assert_eq!(stats.excluded_zero_window, 1);
        assert_eq!(stats.excluded_missing_dates, 1);
        assert_eq!(stats.excluded_non_monotone, 1);
        assert_eq!(stats.dropped_missing_population, 1);
        assert_eq!(stats.rows_without_fips, 1);
    }

    #[test]
    fn features_are_population_and_label_date_cases() {
        let cases = series("123", &[(5, 2.0), (6, 3.0), (7, 4.0), (8, 5.0)]);
        let pop = pops(&[("123", 9999.0)]);
        let (ds, _) = covid_label(&cases, &pop, &config(3.0)).unwrap();
        assert_eq!(ds.row(0), vec![9999.0, 5.0]);
        assert_eq!(ds.feature_names, vec!["population", "cases"]);
    }

    #[test]
    fn alternate_label_date_uses_its_own_window() {
        // Safe on May 8 but unsafe on May 12.
        let counts: Vec<(u32, f64)> =
            vec![(5, 10.0), (6, 10.0), (7, 10.0), (8, 10.0), (9, 10.0), (10, 20.0), (11, 40.0), (12, 60.0)];
        let cases = series("001", &counts);
        let pop = pops(&[("001", 100.0)]);
        let (may8, _) = covid_label(&cases, &pop, &config(1.0)).unwrap();
        assert_eq!(may8.labels, vec![1]);
        let later = CovidConfig::new(date(12), 3, 1.0).unwrap();
        let (may12, _) = covid_label(&cases, &pop, &later).unwrap();
        assert_eq!(may12.labels, vec![0]);
    }

    #[test]
    fn csv_parsing_roundtrip() {
        let text = "date,county,state,fips,cases,deaths\n\
                    2020-05-08,Foo,Bar,01001,12,0\n";
        let rows = parse_cases(text, "inline".into()).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].fips, "01001");
        assert_eq!(rows[0].cases, 12.0);
        assert!(parse_cases("date,county,state,fips,cases,deaths\nnot-a-date,a,b,1,2,3\n", "x".into()).is_err());

        let pop = parse_population("fips,population\n01001,5500\n", "inline".into()).unwrap();
        assert_eq!(pop["01001"], 5500.0);
    }

    #[test]
    fn config_validation() {
        assert!(CovidConfig::new(date(8), 0, 1.0).is_err());
        assert!(CovidConfig::new(date(8), 3, 0.0).is_err());
    }
}
