//! Growth-model families evaluable at any real year within a range.

use crate::error::{Error, Result};

/// One parametrized growth curve.
///
/// Composite variants (`Scaled`, `Product`, `CappedBy`) let derived
/// quantities stay symbolic; evaluating a composite reproduces the exact
/// multiplication order of the calibration, which matters because some
/// capacity/demand crossings sit within hundredths of a year of their
/// expected band edges.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelFamily {
    /// anchor_value + slope * (year - anchor_year)
    Linear {
        slope: f64,
        anchor_year: f64,
        anchor_value: f64,
    },
    /// anchor_value * 2^((year - anchor_year) / period_years)
    DoublingEvery {
        period_years: f64,
        anchor_year: f64,
        anchor_value: f64,
    },
    /// anchor_value * 10^((year - anchor_year) / period_years)
    TenfoldEvery {
        period_years: f64,
        anchor_year: f64,
        anchor_value: f64,
    },
    /// anchor_value * factor^(year - anchor_year)
    GrowsBy {
        factor_per_year: f64,
        anchor_year: f64,
        anchor_value: f64,
    },
    /// max(0, b t + c t^2 + d t^3) with t = year - start_year; coefficients
    /// are fitted so the curve is 0 at start_year and end_value at end_year.
    CubicSigmoid {
        start_year: f64,
        end_year: f64,
        end_value: f64,
        b: f64,
        c: f64,
        d: f64,
    },
    /// Piecewise-linear through (year, value) nodes; constant beyond the
    /// first/last node.
    AnchorInterpolated { anchors: Vec<(f64, f64)> },
    Scaled {
        factor: f64,
        inner: Box<GrowthModel>,
    },
    Product {
        a: Box<GrowthModel>,
        b: Box<GrowthModel>,
    },
    /// min(inner, cap); used to keep a fitted curve under a hard ceiling.
    CappedBy {
        inner: Box<GrowthModel>,
        cap: Box<GrowthModel>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrowthModel {
    pub family: ModelFamily,
    /// Inclusive year range on which the model is defined.
    pub range: (f64, f64),
}

impl GrowthModel {
    pub fn new(family: ModelFamily, range: (f64, f64)) -> Result<GrowthModel> {
        if !(range.0 < range.1) {
            return Err(Error::Parameter(format!(
                "model range {}..{} is empty",
                range.0, range.1
            )));
        }
        match &family {
            ModelFamily::DoublingEvery { period_years, anchor_value, .. }
            | ModelFamily::TenfoldEvery { period_years, anchor_value, .. } => {
                if !(*period_years > 0.0) || !(*anchor_value > 0.0) {
                    return Err(Error::Parameter(
                        "exponential models need positive period and anchor".into(),
                    ));
                }
            }
            ModelFamily::GrowsBy { factor_per_year, anchor_value, .. } => {
                if !(*factor_per_year > 0.0) || !(*anchor_value > 0.0) {
                    return Err(Error::Parameter(
                        "growth factor and anchor must be positive".into(),
                    ));
                }
            }
            ModelFamily::AnchorInterpolated { anchors } => {
                if anchors.len() < 2 {
                    return Err(Error::Parameter("need at least two anchors".into()));
                }
                if !anchors.windows(2).all(|w| w[0].0 < w[1].0) {
                    return Err(Error::Parameter(
                        "anchor years must be strictly increasing".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(GrowthModel { family, range })
    }

    pub fn range(&self) -> (f64, f64) {
        self.range
    }

    /// Multiplies the model by a positive constant; range unchanged.
    pub fn scaled(self, factor: f64) -> Result<GrowthModel> {
        if !(factor > 0.0) {
            return Err(Error::Parameter(format!(
                "scale factor must be positive, got {factor}"
            )));
        }
        let range = self.range;
        GrowthModel::new(
            ModelFamily::Scaled {
                factor,
                inner: Box::new(self),
            },
            range,
        )
    }

    /// Pointwise product; defined on the intersection of both ranges.
    pub fn product(a: GrowthModel, b: GrowthModel) -> Result<GrowthModel> {
        let range = (a.range.0.max(b.range.0), a.range.1.min(b.range.1));
        GrowthModel::new(
            ModelFamily::Product {
                a: Box::new(a),
                b: Box::new(b),
            },
            range,
        )
    }

    /// Pointwise minimum with a ceiling curve.
    pub fn capped_by(self, cap: GrowthModel) -> Result<GrowthModel> {
        let range = (self.range.0.max(cap.range.0), self.range.1.min(cap.range.1));
        GrowthModel::new(
            ModelFamily::CappedBy {
                inner: Box::new(self),
                cap: Box::new(cap),
            },
            range,
        )
    }

    pub fn value(&self, year: f64) -> Result<f64> {
        if !year.is_finite() || year < self.range.0 || year > self.range.1 {
            return Err(Error::Range(format!(
                "year {year} outside model range {}..{}",
                self.range.0, self.range.1
            )));
        }
        self.eval(year)
    }

    fn eval(&self, year: f64) -> Result<f64> {
        Ok(match &self.family {
            ModelFamily::Linear {
                slope,
                anchor_year,
                anchor_value,
            } => anchor_value + slope * (year - anchor_year),
            ModelFamily::DoublingEvery {
                period_years,
                anchor_year,
                anchor_value,
            } => anchor_value * ((year - anchor_year) / period_years).exp2(),
            ModelFamily::TenfoldEvery {
                period_years,
                anchor_year,
                anchor_value,
            } => anchor_value * 10f64.powf((year - anchor_year) / period_years),
            ModelFamily::GrowsBy {
                factor_per_year,
                anchor_year,
                anchor_value,
            } => anchor_value * factor_per_year.powf(year - anchor_year),
            ModelFamily::CubicSigmoid {
                start_year, b, c, d, ..
            } => {
                let t = year - start_year;
                (b * t + c * t * t + d * t * t * t).max(0.0)
            }
            ModelFamily::AnchorInterpolated { anchors } => interpolate(anchors, year),
            ModelFamily::Scaled { factor, inner } => factor * inner.value(year)?,
            ModelFamily::Product { a, b } => a.value(year)? * b.value(year)?,
            ModelFamily::CappedBy { inner, cap } => {
                inner.value(year)?.min(cap.value(year)?)
            }
        })
    }
}

/// Piecewise-linear interpolation, exact at nodes, clamped outside the table.
fn interpolate(anchors: &[(f64, f64)], year: f64) -> f64 {
    let (first, last) = (anchors[0], anchors[anchors.len() - 1]);
    if year <= first.0 {
        return first.1;
    }
    if year >= last.0 {
        return last.1;
    }
    // partition_point finds the first node at or past `year`.
    let hi = anchors.partition_point(|&(x, _)| x < year);
    let (x1, v1) = anchors[hi];
    if year == x1 {
        return v1;
    }
    let (x0, v0) = anchors[hi - 1];
    v0 + (v1 - v0) * ((year - x0) / (x1 - x0))
}
