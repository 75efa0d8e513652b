//! Growth projections: population, internet users, page counts and sizes,
//! device capacities, bandwidth trends, capacity/demand crossovers, and
//! corpus-size estimation.
//!
//! All quantities derive from the cited anchor tables in `data/`; sizes are
//! base-10 bytes, years are real numbers.

mod anchors;
mod estimate;
mod models;

use std::sync::LazyLock;

use crate::error::{Error, Result};

pub use anchors::{
    fit_constrained_cubic, fit_line, running_annual_sum, AnchorRow, AnchorTable,
    BANDWIDTH_TABLE, DISK_TABLE, INTERNET_USERS_TABLE, PAGE_SIZE_TABLE, POPULATION_TABLE,
    SD_TABLE, SEARCHES_TABLE, SITES_TABLE,
};
pub use estimate::{
    estimate_engine_size, estimate_web_size, zipf_probes, Engine, EngineEstimate, Probe,
    DEFAULT_PROBES,
};
pub use models::{GrowthModel, ModelFamily};

/// Indexable pages created per person per Internet year.
pub const CREATION_RATE: f64 = 2.0;
/// Full web (media included) relative to its text.
pub const MEDIA_FACTOR: f64 = 14.0;
/// Index-to-text size ratios: with and without positional data.
pub const INDEX_RATIO_HIGH: f64 = 0.11;
pub const INDEX_RATIO_LOW: f64 = 0.02;
/// Text plus a positional index.
pub const TEXT_PLUS_INDEX_FACTOR: f64 = 1.11;
/// Projected US Internet users at 2050; converts national query volume to a
/// per-user rate.
pub const US_INTERNET_USERS_2050: f64 = 4.03e8;
/// Year-over-year site retention, middle of the observed band.
pub const SITE_RENEWAL_RATE: f64 = 0.735;
pub const SITE_RENEWAL_BAND: (f64, f64) = (0.70, 0.77);
/// Default solving window for capacity/demand crossings; demand curves are
/// defined through 2050.
pub const DEFAULT_CROSSOVER_RANGE: (f64, f64) = (2012.0, 2050.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DiskModel {
    /// Strict 18-month doubling from the 1981 anchor. Default because the
    /// two-point alternative undershoots observed capacity growth.
    #[default]
    MooreStrict,
    /// Exponential through both shipped disk anchors (doubling ~1.56 years).
    TwoPointAnchors,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SdModel {
    /// Yearly doubling through the 2 TB specification target at 2025.
    #[default]
    ProjectionTrajectory,
    /// Yearly doubling through the 128 GB card marketed in 2011.
    MarketedCards,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Device {
    Disk(DiskModel),
    SdCard(SdModel),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BandwidthModel {
    /// Ethernet standards trend: tenfold every five years.
    IeeeTrend,
    /// High-end connection speed growing 50% per year.
    Nielsen,
}

static PAGES_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    anchors::HIY_MODEL
        .clone()
        .scaled(CREATION_RATE)
        .expect("positive rate")
});

static WEB_TEXT_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    GrowthModel::product(PAGES_MODEL.clone(), anchors::PAGE_SIZE_MODEL.clone())
        .expect("overlapping ranges")
});

pub fn population(year: f64) -> Result<f64> {
    anchors::POPULATION_MODEL.value(year)
}

pub fn internet_users(year: f64) -> Result<f64> {
    anchors::INTERNET_USERS_MODEL.value(year)
}

pub fn human_internet_years(year: f64) -> Result<f64> {
    anchors::HIY_MODEL.value(year)
}

pub fn pages(year: f64) -> Result<f64> {
    PAGES_MODEL.value(year)
}

pub fn pages_at_rate(year: f64, creation_rate: f64) -> Result<f64> {
    if !(creation_rate > 0.0) {
        return Err(Error::Parameter(format!(
            "creation rate must be positive, got {creation_rate}"
        )));
    }
    Ok(creation_rate * human_internet_years(year)?)
}

/// Pages per accumulated person-year implied by an observed page count.
pub fn implied_creation_rate(observed_pages: f64, year: f64) -> Result<f64> {
    if !(observed_pages > 0.0) {
        return Err(Error::Parameter("observed page count must be positive".into()));
    }
    let hiy = human_internet_years(year)?;
    if hiy <= 0.0 {
        return Err(Error::Parameter(format!(
            "no accumulated internet years at {year}"
        )));
    }
    Ok(observed_pages / hiy)
}

pub fn page_size(year: f64) -> Result<f64> {
    anchors::PAGE_SIZE_MODEL.value(year)
}

pub fn web_text_size(year: f64) -> Result<f64> {
    WEB_TEXT_MODEL.value(year)
}

pub fn web_full_size(year: f64) -> Result<f64> {
    Ok(web_text_size(year)? * MEDIA_FACTOR)
}

pub fn index_size(year: f64, ratio: f64) -> Result<f64> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Parameter(format!(
            "index ratio must lie in (0, 1), got {ratio}"
        )));
    }
    Ok(ratio * web_text_size(year)?)
}

pub fn device_capacity(year: f64, device: Device) -> Result<f64> {
    let model = match device {
        Device::Disk(DiskModel::MooreStrict) => &*anchors::DISK_MOORE_MODEL,
        Device::Disk(DiskModel::TwoPointAnchors) => &*anchors::DISK_ANCHORED_MODEL,
        Device::SdCard(SdModel::ProjectionTrajectory) => &*anchors::SD_TRAJECTORY_MODEL,
        Device::SdCard(SdModel::MarketedCards) => &*anchors::SD_CARDS_MODEL,
    };
    model.value(year)
}

pub fn bandwidth(year: f64, model: BandwidthModel) -> Result<f64> {
    match model {
        BandwidthModel::IeeeTrend => anchors::IEEE_BANDWIDTH_MODEL.value(year),
        BandwidthModel::Nielsen => anchors::NIELSEN_BANDWIDTH_MODEL.value(year),
    }
}

pub fn transfer_time(bytes: f64, year: f64, model: BandwidthModel) -> Result<f64> {
    if bytes < 0.0 {
        return Err(Error::Parameter("payload must be non-negative".into()));
    }
    Ok(bytes / bandwidth(year, model)?)
}

pub fn searches_per_month(year: f64) -> Result<f64> {
    anchors::SEARCHES_MODEL.value(year)
}

pub fn searches_per_user(year: f64) -> Result<f64> {
    Ok(searches_per_month(year)? / US_INTERNET_USERS_2050)
}

pub fn sites(year: f64) -> Result<f64> {
    anchors::SITES_MODEL.value(year)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossoverReport {
    /// First year (to 0.01 resolution) where capacity meets scaled demand;
    /// None when no crossing happens inside the solved range.
    pub year: Option<f64>,
    pub scale: f64,
    pub capacity_at: f64,
    pub demand_at: f64,
}

/// First year in `range` where `capacity(y) >= demand(y)`, by bisection.
/// Demand must exceed capacity at the range start.
pub fn crossover(
    capacity: &GrowthModel,
    demand: &GrowthModel,
    range: (f64, f64),
) -> Result<CrossoverReport> {
    sensitivity(1.0, capacity, demand, range)
}

/// Crossover with demand multiplied by `scale`; sensitivity(1, ..) is
/// identical to crossover(..).
pub fn sensitivity(
    scale: f64,
    capacity: &GrowthModel,
    demand: &GrowthModel,
    range: (f64, f64),
) -> Result<CrossoverReport> {
    if !(scale > 0.0) {
        return Err(Error::Parameter(format!(
            "demand scale must be positive, got {scale}"
        )));
    }
    let (mut lo, mut hi) = range;
    if !(lo < hi) {
        return Err(Error::Parameter(format!("empty solving range {lo}..{hi}")));
    }
    let gap = |y: f64| -> Result<f64> { Ok(capacity.value(y)? - scale * demand.value(y)?) };
    if gap(lo)? >= 0.0 {
        return Err(Error::Parameter(format!(
            "demand does not exceed capacity at {lo}"
        )));
    }
    if gap(hi)? < 0.0 {
        return Ok(CrossoverReport {
            year: None,
            scale,
            capacity_at: capacity.value(hi)?,
            demand_at: scale * demand.value(hi)?,
        });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo < 0.005 {
            break;
        }
    }
    Ok(CrossoverReport {
        year: Some(hi),
        scale,
        capacity_at: capacity.value(hi)?,
        demand_at: scale * demand.value(hi)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BroadcastFeasibility {
    pub year: f64,
    pub modification_factor: f64,
    pub daily_change_bytes: f64,
    pub ieee_daily_capacity: f64,
    pub nielsen_daily_capacity: f64,
    pub feasible_ieee: bool,
    pub feasible_nielsen: bool,
}

/// Bytes of new and modified page text produced per day.
pub fn daily_change_bytes(
    users: f64,
    page_size: f64,
    creation_rate: f64,
    modification_factor: f64,
) -> f64 {
    users * creation_rate * (1.0 + modification_factor) / 365.0 * page_size
}

/// Whether one day's corpus changes fit through one day of a single
/// connection under each bandwidth model.
pub fn broadcast_feasible(year: f64, modification_factor: f64) -> Result<BroadcastFeasibility> {
    if !(modification_factor >= 0.0) {
        return Err(Error::Parameter(
            "modification factor must be non-negative".into(),
        ));
    }
    let users = internet_users(year)?;
    let ps = page_size(year)?;
    let daily = daily_change_bytes(users, ps, CREATION_RATE, modification_factor);
    let ieee_daily = bandwidth(year, BandwidthModel::IeeeTrend)? * 86_400.0;
    let nielsen_daily = bandwidth(year, BandwidthModel::Nielsen)? * 86_400.0;
    Ok(BroadcastFeasibility {
        year,
        modification_factor,
        daily_change_bytes: daily,
        ieee_daily_capacity: ieee_daily,
        nielsen_daily_capacity: nielsen_daily,
        feasible_ieee: daily <= ieee_daily,
        feasible_nielsen: daily <= nielsen_daily,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedCurve {
    pub name: String,
    pub model: GrowthModel,
}

pub fn curve_names() -> &'static [&'static str] {
    &[
        "population",
        "internet-users",
        "hiy",
        "pages",
        "page-size",
        "web-text",
        "text-plus-index",
        "web-full",
        "index@<ratio>",
        "searches",
        "sites",
        "disk",
        "disk-moore",
        "disk-anchored",
        "sd",
        "sd-trajectory",
        "sd-cards",
        "ieee",
        "nielsen",
    ]
}

/// Resolves a curve by name; `index@<ratio>` takes the ratio inline, and
/// `disk`/`sd` alias the default device models.
pub fn named_curve(name: &str) -> Result<NamedCurve> {
    let model = match name {
        "population" => anchors::POPULATION_MODEL.clone(),
        "internet-users" => anchors::INTERNET_USERS_MODEL.clone(),
        "hiy" => anchors::HIY_MODEL.clone(),
        "pages" => PAGES_MODEL.clone(),
        "page-size" => anchors::PAGE_SIZE_MODEL.clone(),
        "web-text" => WEB_TEXT_MODEL.clone(),
        "text-plus-index" => WEB_TEXT_MODEL.clone().scaled(TEXT_PLUS_INDEX_FACTOR)?,
        "web-full" => WEB_TEXT_MODEL.clone().scaled(MEDIA_FACTOR)?,
        "searches" => anchors::SEARCHES_MODEL.clone(),
        "sites" => anchors::SITES_MODEL.clone(),
        "disk" | "disk-moore" => anchors::DISK_MOORE_MODEL.clone(),
        "disk-anchored" => anchors::DISK_ANCHORED_MODEL.clone(),
        "sd" | "sd-trajectory" => anchors::SD_TRAJECTORY_MODEL.clone(),
        "sd-cards" => anchors::SD_CARDS_MODEL.clone(),
        "ieee" => anchors::IEEE_BANDWIDTH_MODEL.clone(),
        "nielsen" => anchors::NIELSEN_BANDWIDTH_MODEL.clone(),
        _ => {
            if let Some(ratio_text) = name.strip_prefix("index@") {
                let ratio: f64 = ratio_text.parse().map_err(|_| {
                    Error::Parameter(format!("bad index ratio in curve name {name:?}"))
                })?;
                if !(ratio > 0.0 && ratio < 1.0) {
                    return Err(Error::Parameter(format!(
                        "index ratio must lie in (0, 1), got {ratio}"
                    )));
                }
                WEB_TEXT_MODEL.clone().scaled(ratio)?
            } else {
                return Err(Error::Parameter(format!(
                    "unknown curve {name:?}; known: {}",
                    curve_names().join(", ")
                )));
            }
        }
    };
    Ok(NamedCurve {
        name: name.to_string(),
        model,
    })
}

/// CSV dump (year, value) of a curve sampled at `step` from `start` to `end`
/// inclusive.
pub fn curve_csv(curve: &NamedCurve, start: f64, end: f64, step: f64) -> Result<String> {
    if !(step > 0.0) || !(start <= end) {
        return Err(Error::Parameter(format!(
            "bad sweep {start}..{end} step {step}"
        )));
    }
    let mut out = String::from("year,value\n");
    let mut i = 0u64;
    loop {
        let year = start + i as f64 * step;
        if year > end + 1e-9 {
            break;
        }
        out.push_str(&format!("{},{}\n", year, curve.model.value(year)?));
        i += 1;
    }
    Ok(out)
}

pub const CROSSOVER_CSV_HEADER: &str = "capacity_model,demand_model,scale,year\n";

pub fn crossover_csv_row(capacity: &str, demand: &str, report: &CrossoverReport) -> String {
    match report.year {
        Some(y) => format!("{},{},{},{:.2}\n", capacity, demand, report.scale, y),
        None => format!("{},{},{},none\n", capacity, demand, report.scale),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn population_interpolates_un_anchors() {
        assert_eq!(population(2050.0).unwrap(), 9.2e9);
        assert_eq!(population(1950.0).unwrap(), 2.53e9);
        assert_eq!(population(2010.0).unwrap(), 6.91e9);
        assert_relative_eq!(
            population(1955.0).unwrap(),
            (2.53e9 + 3.03e9) / 2.0,
            max_relative = 1e-12
        );
        assert!(population(1949.9).is_err());
        assert!(population(2050.1).is_err());
    }

    #[test]
    fn internet_users_pinned_points() {
        assert_eq!(internet_users(1990.0).unwrap(), 0.0);
        assert_relative_eq!(
            internet_users(2050.0).unwrap(),
            population(2050.0).unwrap(),
            max_relative = 1e-9
        );
        let u2010 = internet_users(2010.0).unwrap();
        assert_relative_eq!(u2010, 2.045586e9, max_relative = 1e-5);
        assert!((u2010 - 2.084e9).abs() / 2.084e9 < 0.10);
        assert!(internet_users(2051.0).is_err());
        assert!(internet_users(1989.0).is_err());
    }

    #[test]
    fn users_and_accumulations_are_non_decreasing() {
        let mut prev = (0.0, 0.0, 0.0, 0.0);
        let mut year = 1990.0;
        while year <= 2050.0 {
            let cur = (
                population(year).unwrap(),
                internet_users(year).unwrap(),
                human_internet_years(year).unwrap(),
                pages(year).unwrap(),
            );
            assert!(cur.0 >= prev.0 && cur.1 >= prev.1 && cur.2 >= prev.2 && cur.3 >= prev.3);
            prev = cur;
            year += 0.25;
        }
    }

    #[test]
    fn human_internet_years_pinned_points() {
        assert_eq!(human_internet_years(1990.0).unwrap(), 0.0);
        assert_relative_eq!(
            human_internet_years(2005.0).unwrap(),
            4.954957e9,
            max_relative = 1e-5
        );
        assert_relative_eq!(
            human_internet_years(2010.0).unwrap(),
            1.320040e10,
            max_relative = 1e-5
        );
        assert_relative_eq!(
            human_internet_years(2050.0).unwrap(),
            2.710912e11,
            max_relative = 1e-5
        );
        // Accumulation stops with the user curve at 2050.
        assert_eq!(
            human_internet_years(2060.0).unwrap(),
            human_internet_years(2050.0).unwrap()
        );
        assert!(human_internet_years(1989.9).is_err());
    }

    #[test]
    fn annual_difference_recovers_users() {
        for year in [1998.0, 2014.0, 2037.0, 2049.0] {
            let diff =
                human_internet_years(year).unwrap() - human_internet_years(year - 1.0).unwrap();
            assert_relative_eq!(diff, internet_users(year).unwrap(), max_relative = 1e-9);
        }
    }

    #[test]
    fn pages_pinned_points() {
        assert_eq!(pages(1990.0).unwrap(), 0.0);
        let p2050 = pages(2050.0).unwrap();
        assert_relative_eq!(p2050, 5.421824e11, max_relative = 1e-5);
        assert!(p2050 > 4e11 && p2050 < 6e11);
        assert_eq!(
            pages_at_rate(2050.0, CREATION_RATE).unwrap(),
            p2050
        );
        assert!(pages_at_rate(2050.0, 0.0).is_err());
        // Early-web archives imply roughly 1.6 pages per person-year.
        let implied = implied_creation_rate(8.058e9, 2005.0).unwrap();
        assert_relative_eq!(implied, 1.626, max_relative = 1e-3);
        assert!(implied > 1.3 && implied < 2.1);
        assert!(implied_creation_rate(8e9, 1990.0).is_err());
    }

    #[test]
    fn page_size_pinned_points() {
        assert_relative_eq!(page_size(2009.0).unwrap(), 22863.3, max_relative = 1e-4);
        let ps2050 = page_size(2050.0).unwrap();
        assert_relative_eq!(ps2050, 76192.23, max_relative = 1e-5);
        assert!(ps2050 > 60_800.0 && ps2050 < 91_200.0);
        assert!(page_size(1996.9).is_err());
        assert!(page_size(2050.1).is_err());
    }

    #[test]
    fn web_sizes_pinned_points() {
        let text = web_text_size(2050.0).unwrap();
        assert_relative_eq!(text, 4.131008e16, max_relative = 1e-5);
        assert!(text > 2.775e16 && text < 4.625e16);
        assert_eq!(web_full_size(2050.0).unwrap(), text * 14.0);

        let idx_high = index_size(2050.0, INDEX_RATIO_HIGH).unwrap();
        assert_relative_eq!(idx_high, 4.544109e15, max_relative = 1e-5);
        assert!(idx_high > 3e15 && idx_high < 5e15);
        let idx_low = index_size(2050.0, INDEX_RATIO_LOW).unwrap();
        assert_relative_eq!(idx_low, 8.262017e14, max_relative = 1e-5);
        assert!(idx_low > 5.4975e14 && idx_low < 9.1625e14);
        // Linearity in the ratio.
        assert_relative_eq!(
            index_size(2030.0, 0.04).unwrap(),
            2.0 * index_size(2030.0, 0.02).unwrap(),
            max_relative = 1e-12
        );
        assert!(index_size(2050.0, 0.0).is_err());
        assert!(index_size(2050.0, 1.0).is_err());
    }

    #[test]
    fn device_capacity_pinned_points() {
        let moore = |y| device_capacity(y, Device::Disk(DiskModel::MooreStrict)).unwrap();
        assert_eq!(moore(1981.0), 5e6);
        assert_relative_eq!(moore(2050.0), 3.5184e20, max_relative = 1e-4);
        assert!(moore(2050.0) > 3e20);

        let anchored = |y| device_capacity(y, Device::Disk(DiskModel::TwoPointAnchors)).unwrap();
        assert_eq!(anchored(1981.0), 5e6);
        assert_relative_eq!(anchored(2011.0), 3e12, max_relative = 1e-9);

        let cards = |y| device_capacity(y, Device::SdCard(SdModel::MarketedCards)).unwrap();
        assert_eq!(cards(2011.0), 1.28e11);
        let traj =
            |y| device_capacity(y, Device::SdCard(SdModel::ProjectionTrajectory)).unwrap();
        assert_eq!(traj(2025.0), 2e12);

        assert!(device_capacity(1980.9, Device::Disk(DiskModel::default())).is_err());
        assert!(device_capacity(1999.9, Device::SdCard(SdModel::default())).is_err());
    }

    #[test]
    fn bandwidth_pinned_points() {
        assert_relative_eq!(
            bandwidth(2010.0, BandwidthModel::IeeeTrend).unwrap(),
            1.25e10,
            max_relative = 1e-12
        );
        let ieee_2050 = bandwidth(2050.0, BandwidthModel::IeeeTrend).unwrap();
        assert!((1.0e18..=1.5e18).contains(&ieee_2050));
        // Calibrated exactly to 42 Pb/s at 2050.
        assert_eq!(bandwidth(2050.0, BandwidthModel::Nielsen).unwrap(), 5.25e15);
        assert_relative_eq!(
            bandwidth(2010.0, BandwidthModel::Nielsen).unwrap(),
            4.747981e8,
            max_relative = 1e-5
        );
        assert!(bandwidth(1989.0, BandwidthModel::IeeeTrend).is_err());
    }

    #[test]
    fn transfer_time_pinned_points() {
        let idx = index_size(2050.0, INDEX_RATIO_HIGH).unwrap();
        let t = transfer_time(idx, 2050.0, BandwidthModel::IeeeTrend).unwrap();
        assert_relative_eq!(t, 3.635287e-3, max_relative = 1e-5);
        assert!(t < 1.0);

        let full = web_full_size(2050.0).unwrap();
        let t_full = transfer_time(full, 2050.0, BandwidthModel::Nielsen).unwrap();
        assert_relative_eq!(t_full, 110.1602, max_relative = 1e-5);
        assert!(t_full > 1.0);

        assert_eq!(
            transfer_time(0.0, 2050.0, BandwidthModel::IeeeTrend).unwrap(),
            0.0
        );
        assert!(transfer_time(-1.0, 2050.0, BandwidthModel::IeeeTrend).is_err());
    }

    #[test]
    fn searches_pinned_points() {
        assert_relative_eq!(
            searches_per_month(2005.5).unwrap(),
            4.8e9,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            searches_per_month(2011.25).unwrap(),
            16.9e9,
            max_relative = 1e-12
        );
        let s2050 = searches_per_month(2050.0).unwrap();
        assert_relative_eq!(s2050, 9.844348e10, max_relative = 1e-5);
        assert!(s2050 > 8.5e10 && s2050 < 1.15e11);
        let per_user = searches_per_user(2050.0).unwrap();
        assert_relative_eq!(per_user, 244.28, max_relative = 1e-4);
        assert!(per_user > 210.0 && per_user < 290.0);
        assert!(searches_per_month(2004.9).is_err());
    }

    #[test]
    fn sites_pinned_points() {
        assert_eq!(sites(2011.0).unwrap(), 1.30207722e8);
        assert_relative_eq!(sites(2050.0).unwrap(), 1.2e9, max_relative = 1e-12);
        assert!(sites(2003.9).is_err());
        assert!(SITE_RENEWAL_RATE >= SITE_RENEWAL_BAND.0);
        assert!(SITE_RENEWAL_RATE <= SITE_RENEWAL_BAND.1);
    }

    fn curve(name: &str) -> GrowthModel {
        named_curve(name).unwrap().model
    }

    #[test]
    fn disk_crossovers_pinned() {
        let disk = curve("disk");
        let range = DEFAULT_CROSSOVER_RANGE;

        let vs_index = crossover(&disk, &curve("index@0.11"), range).unwrap();
        let y = vs_index.year.unwrap();
        assert!((y - 2020.3589).abs() < 0.01, "disk vs index at {y}");
        assert!((2018.0..=2021.0).contains(&y));
        // Crossing really separates the curves at bisection resolution.
        assert!(vs_index.capacity_at >= vs_index.demand_at);
        let before = y - 0.01;
        assert!(
            disk.value(before).unwrap() < curve("index@0.11").value(before).unwrap()
        );

        let vs_tpi = crossover(&disk, &curve("text-plus-index"), range).unwrap();
        let y = vs_tpi.year.unwrap();
        assert!((y - 2027.0200).abs() < 0.01, "disk vs text+index at {y}");
        assert!((2024.0..=2030.0).contains(&y));
    }

    #[test]
    fn sd_crossovers_pinned() {
        let sd = curve("sd");
        let range = DEFAULT_CROSSOVER_RANGE;
        let cases = [
            ("index@0.11", 2034.7388, 2035.0),
            ("text-plus-index", 2038.4822, 2039.0),
            ("web-full", 2042.5317, 2043.0),
        ];
        for (demand, pinned, nominal) in cases {
            let report = crossover(&sd, &curve(demand), range).unwrap();
            let y = report.year.unwrap();
            assert!((y - pinned).abs() < 0.01, "sd vs {demand} at {y}");
            assert!((y - nominal).abs() <= 2.0);
        }
    }

    #[test]
    fn tenfold_demand_crossovers_pinned() {
        let disk = curve("disk");
        let range = DEFAULT_CROSSOVER_RANGE;
        let cases = [
            ("index@0.11", 2026.9968, 2025.0),
            ("text-plus-index", 2033.2451, 2032.0),
            ("web-full", 2039.8042, 2040.0),
        ];
        for (demand, pinned, nominal) in cases {
            let report = sensitivity(10.0, &disk, &curve(demand), range).unwrap();
            let y = report.year.unwrap();
            assert!((y - pinned).abs() < 0.01, "x10 disk vs {demand} at {y}");
            assert!((y - nominal).abs() <= 2.0);
        }
    }

    #[test]
    fn sensitivity_at_unit_scale_is_crossover() {
        let disk = curve("disk");
        let demand = curve("index@0.11");
        let range = DEFAULT_CROSSOVER_RANGE;
        assert_eq!(
            sensitivity(1.0, &disk, &demand, range).unwrap(),
            crossover(&disk, &demand, range).unwrap()
        );
        assert!(sensitivity(0.0, &disk, &demand, range).is_err());
    }

    #[test]
    fn crossover_edge_cases() {
        // Demand never met inside the window.
        let report = crossover(&curve("sd"), &curve("web-full"), (2012.0, 2030.0)).unwrap();
        assert_eq!(report.year, None);
        assert!(report.demand_at > report.capacity_at);
        // Capacity already ahead at the range start violates the premise.
        assert!(matches!(
            crossover(&curve("disk"), &curve("index@0.11"), (2045.0, 2050.0)),
            Err(Error::Parameter(_))
        ));
        // The anchored two-point disk model crosses years later than the
        // strict Moore default.
        let anchored = curve("disk-anchored");
        let y = crossover(&anchored, &curve("index@0.11"), DEFAULT_CROSSOVER_RANGE)
            .unwrap()
            .year
            .unwrap();
        assert!((y - 2022.655).abs() < 0.01);
    }

    #[test]
    fn broadcast_feasibility_pinned() {
        let report = broadcast_feasible(2050.0, 1.0).unwrap();
        assert_relative_eq!(
            report.daily_change_bytes,
            7.681846e12,
            max_relative = 1e-5
        );
        assert!(report.feasible_ieee);
        assert!(report.feasible_nielsen);

        // The modification term scales linearly: (1 + 3) = 2 x (1 + 1).
        let doubled = broadcast_feasible(2050.0, 3.0).unwrap();
        assert_eq!(doubled.daily_change_bytes, 2.0 * report.daily_change_bytes);

        assert_eq!(daily_change_bytes(0.0, 5e4, CREATION_RATE, 1.0), 0.0);
        assert!(broadcast_feasible(2050.0, -0.1).is_err());
        assert!(broadcast_feasible(1995.0, 1.0).is_err());
    }

    #[test]
    fn curve_registry_and_csv() {
        for name in curve_names() {
            if name.contains('<') {
                continue;
            }
            named_curve(name).unwrap();
        }
        assert!(named_curve("index@0.11").is_ok());
        assert!(named_curve("index@1.5").is_err());
        assert!(named_curve("index@x").is_err());
        assert!(named_curve("warp-drive").is_err());

        let curve = named_curve("population").unwrap();
        let csv = curve_csv(&curve, 1950.0, 2050.0, 10.0).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "year,value");
        assert_eq!(lines.len(), 12);
        assert!(lines[11].starts_with("2050,"));
        assert!(curve_csv(&curve, 1940.0, 2050.0, 10.0).is_err());
        assert!(curve_csv(&curve, 2000.0, 2050.0, 0.0).is_err());

        let report = crossover(
            &named_curve("disk").unwrap().model,
            &named_curve("index@0.11").unwrap().model,
            DEFAULT_CROSSOVER_RANGE,
        )
        .unwrap();
        let row = crossover_csv_row("disk", "index@0.11", &report);
        assert!(row.starts_with("disk,index@0.11,1,2020."));
    }
}
