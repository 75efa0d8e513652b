//! Shipped anchor tables and the model fits derived from them.
//!
//! Every constant that enters a projection lives in a CSV under `data/` with
//! its source cited per row; this module parses those tables once and builds
//! the calibrated models. Fits are recomputed from the anchors at first use
//! rather than hard-coded, so the data files stay the single authority.

use std::sync::LazyLock;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::projections::models::{GrowthModel, ModelFamily};

#[derive(Clone, Debug, Deserialize)]
pub struct AnchorRow {
    pub year: f64,
    pub value: f64,
    pub citation: String,
}

/// A sorted, cited (year, value) table.
#[derive(Clone, Debug)]
pub struct AnchorTable {
    rows: Vec<AnchorRow>,
}

impl AnchorTable {
    pub fn parse(csv_text: &str) -> Result<AnchorTable> {
        let mut reader = csv::Reader::from_reader(csv_text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.deserialize() {
            let row: AnchorRow =
                record.map_err(|e| Error::FileFormat(format!("anchor table: {e}")))?;
            rows.push(row);
        }
        if rows.len() < 2 {
            return Err(Error::FileFormat(
                "anchor table needs at least two rows".into(),
            ));
        }
        for w in rows.windows(2) {
            if w[0].year >= w[1].year {
                return Err(Error::FileFormat(format!(
                    "anchor years must be strictly increasing, got {} then {}",
                    w[0].year, w[1].year
                )));
            }
        }
        for r in &rows {
            if !(r.value > 0.0) {
                return Err(Error::FileFormat(format!(
                    "anchor value at {} must be positive",
                    r.year
                )));
            }
            if r.citation.trim().is_empty() {
                return Err(Error::FileFormat(format!(
                    "anchor at {} is missing its citation",
                    r.year
                )));
            }
        }
        Ok(AnchorTable { rows })
    }

    pub fn rows(&self) -> &[AnchorRow] {
        &self.rows
    }

    pub fn anchors(&self) -> Vec<(f64, f64)> {
        self.rows.iter().map(|r| (r.year, r.value)).collect()
    }

    pub fn first(&self) -> &AnchorRow {
        &self.rows[0]
    }

    pub fn last(&self) -> &AnchorRow {
        &self.rows[self.rows.len() - 1]
    }
}

const POPULATION_CSV: &str = include_str!("../../data/population.csv");
const INTERNET_USERS_CSV: &str = include_str!("../../data/internet_users.csv");
const PAGE_SIZE_CSV: &str = include_str!("../../data/page_size.csv");
const SEARCHES_CSV: &str = include_str!("../../data/searches.csv");
const SITES_CSV: &str = include_str!("../../data/sites.csv");
const DISK_CSV: &str = include_str!("../../data/disk.csv");
const SD_CSV: &str = include_str!("../../data/sd.csv");
const BANDWIDTH_CSV: &str = include_str!("../../data/bandwidth.csv");

fn embedded(name: &str, text: &str) -> AnchorTable {
    // Embedded assets are part of the build; a malformed one is a defect, not
    // a runtime input error.
    AnchorTable::parse(text).unwrap_or_else(|e| panic!("embedded {name}: {e}"))
}

pub static POPULATION_TABLE: LazyLock<AnchorTable> =
    LazyLock::new(|| embedded("population.csv", POPULATION_CSV));
pub static INTERNET_USERS_TABLE: LazyLock<AnchorTable> =
    LazyLock::new(|| embedded("internet_users.csv", INTERNET_USERS_CSV));
pub static PAGE_SIZE_TABLE: LazyLock<AnchorTable> =
    LazyLock::new(|| embedded("page_size.csv", PAGE_SIZE_CSV));
pub static SEARCHES_TABLE: LazyLock<AnchorTable> =
    LazyLock::new(|| embedded("searches.csv", SEARCHES_CSV));
pub static SITES_TABLE: LazyLock<AnchorTable> =
    LazyLock::new(|| embedded("sites.csv", SITES_CSV));
pub static DISK_TABLE: LazyLock<AnchorTable> = LazyLock::new(|| embedded("disk.csv", DISK_CSV));
pub static SD_TABLE: LazyLock<AnchorTable> = LazyLock::new(|| embedded("sd.csv", SD_CSV));
pub static BANDWIDTH_TABLE: LazyLock<AnchorTable> =
    LazyLock::new(|| embedded("bandwidth.csv", BANDWIDTH_CSV));

/// Least-squares fit of u(t) = b t + c t^2 + d t^3 (t = year - start) with
/// u(start) = 0 built in and u(end) = end_value enforced by substituting
/// d = (end_value - T b - T^2 c) / T^3, leaving a 2x2 normal-equation solve.
pub fn fit_constrained_cubic(
    anchors: &[(f64, f64)],
    start_year: f64,
    end_year: f64,
    end_value: f64,
) -> (f64, f64, f64) {
    let t_end = end_year - start_year;
    let (t2, t3) = (t_end * t_end, t_end * t_end * t_end);
    let (mut s11, mut s12, mut s22, mut r1, mut r2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(year, value) in anchors {
        let t = year - start_year;
        let a1 = t - t * t * t / t2;
        let a2 = t * t - t * t * t / t_end;
        let rhs = value - end_value * (t * t * t) / t3;
        s11 += a1 * a1;
        s12 += a1 * a2;
        s22 += a2 * a2;
        r1 += a1 * rhs;
        r2 += a2 * rhs;
    }
    let det = s11 * s22 - s12 * s12;
    let b = (r1 * s22 - r2 * s12) / det;
    let c = (s11 * r2 - s12 * r1) / det;
    let d = (end_value - t_end * b - t2 * c) / t3;
    (b, c, d)
}

/// Ordinary least-squares line through the anchors, mean-centered form.
pub fn fit_line(anchors: &[(f64, f64)]) -> (f64, f64) {
    let n = anchors.len() as f64;
    let xm = anchors.iter().map(|&(x, _)| x).sum::<f64>() / n;
    let ym = anchors.iter().map(|&(_, v)| v).sum::<f64>() / n;
    let sxx: f64 = anchors.iter().map(|&(x, _)| (x - xm) * (x - xm)).sum();
    let sxy: f64 = anchors.iter().map(|&(x, v)| (x - xm) * (v - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    (slope, intercept)
}

/// Running sum of annual values: out[i] = values[0] + ... + values[i].
pub fn running_annual_sum(values: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for v in values {
        acc += v;
        out.push(acc);
    }
    out
}

fn must(model: Result<GrowthModel>) -> GrowthModel {
    model.expect("calibrated model parameters are valid")
}

pub static POPULATION_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let table = &*POPULATION_TABLE;
    must(GrowthModel::new(
        ModelFamily::AnchorInterpolated {
            anchors: table.anchors(),
        },
        (table.first().year, table.last().year),
    ))
});

pub static INTERNET_USERS_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let start = 1990.0;
    let end = 2050.0;
    let end_value = POPULATION_MODEL
        .value(end)
        .expect("population defined at 2050");
    let (b, c, d) = fit_constrained_cubic(
        &INTERNET_USERS_TABLE.anchors(),
        start,
        end,
        end_value,
    );
    let cubic = must(GrowthModel::new(
        ModelFamily::CubicSigmoid {
            start_year: start,
            end_year: end,
            end_value,
            b,
            c,
            d,
        },
        (start, end),
    ));
    // The raw cubic overshoots world population around 2045; cap it.
    must(cubic.capped_by(POPULATION_MODEL.clone()))
});

pub static HIY_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let users = &*INTERNET_USERS_MODEL;
    let annual: Vec<f64> = (1990..=2050)
        .map(|y| users.value(y as f64).expect("in range"))
        .collect();
    let sums = running_annual_sum(&annual);
    let anchors: Vec<(f64, f64)> = (1990..=2050)
        .map(|y| (y as f64, sums[(y - 1990) as usize]))
        .collect();
    // Clamped interpolation holds the 2050 value beyond the last anchor:
    // accumulation needs a user curve, which ends at 2050.
    must(GrowthModel::new(
        ModelFamily::AnchorInterpolated { anchors },
        (1990.0, f64::INFINITY),
    ))
});

pub static PAGE_SIZE_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let (slope, intercept) = fit_line(&PAGE_SIZE_TABLE.anchors());
    must(GrowthModel::new(
        ModelFamily::Linear {
            slope,
            anchor_year: 0.0,
            anchor_value: intercept,
        },
        (PAGE_SIZE_TABLE.first().year, 2050.0),
    ))
});

pub static SEARCHES_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let a = SEARCHES_TABLE.first();
    let b = SEARCHES_TABLE.last();
    must(GrowthModel::new(
        ModelFamily::Linear {
            slope: (b.value - a.value) / (b.year - a.year),
            anchor_year: a.year,
            anchor_value: a.value,
        },
        (2005.0, f64::INFINITY),
    ))
});

pub static SITES_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let a = SITES_TABLE.first();
    let b = SITES_TABLE.last();
    must(GrowthModel::new(
        ModelFamily::Linear {
            slope: (b.value - a.value) / (b.year - a.year),
            anchor_year: a.year,
            anchor_value: a.value,
        },
        (2004.0, f64::INFINITY),
    ))
});

pub static DISK_MOORE_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let base = DISK_TABLE.first();
    must(GrowthModel::new(
        ModelFamily::DoublingEvery {
            period_years: 1.5,
            anchor_year: base.year,
            anchor_value: base.value,
        },
        (base.year, f64::INFINITY),
    ))
});

pub static DISK_ANCHORED_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let a = DISK_TABLE.first();
    let b = DISK_TABLE.last();
    // Exponential through both anchors; the implied doubling period is the
    // span divided by the doublings between the anchor capacities.
    let period = (b.year - a.year) / (b.value / a.value).log2();
    must(GrowthModel::new(
        ModelFamily::DoublingEvery {
            period_years: period,
            anchor_year: a.year,
            anchor_value: a.value,
        },
        (a.year, f64::INFINITY),
    ))
});

pub static SD_TRAJECTORY_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let target = SD_TABLE.last();
    must(GrowthModel::new(
        ModelFamily::DoublingEvery {
            period_years: 1.0,
            anchor_year: target.year,
            anchor_value: target.value,
        },
        (2000.0, f64::INFINITY),
    ))
});

pub static SD_CARDS_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let card = SD_TABLE.first();
    must(GrowthModel::new(
        ModelFamily::DoublingEvery {
            period_years: 1.0,
            anchor_year: card.year,
            anchor_value: card.value,
        },
        (2000.0, f64::INFINITY),
    ))
});

pub static IEEE_BANDWIDTH_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    let base = BANDWIDTH_TABLE.first();
    must(GrowthModel::new(
        ModelFamily::TenfoldEvery {
            period_years: 5.0,
            anchor_year: base.year,
            anchor_value: base.value,
        },
        (base.year, f64::INFINITY),
    ))
});

pub static NIELSEN_BANDWIDTH_MODEL: LazyLock<GrowthModel> = LazyLock::new(|| {
    // Anchored at the 2050 target so that value is reproduced exactly; the
    // implied 2010 base is target / 1.5^40.
    let target = BANDWIDTH_TABLE.last();
    must(GrowthModel::new(
        ModelFamily::GrowsBy {
            factor_per_year: 1.5,
            anchor_year: target.year,
            anchor_value: target.value,
        },
        (1990.0, f64::INFINITY),
    ))
});
