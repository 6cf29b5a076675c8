use serde::{Deserialize, Serialize};

use super::{reduction_fraction, BaselineModel, BaselineRef, MethodologyError, WeekAnalysis, WeekId};

/// One tracked week: its analysis, or the reason it could not be analysed.
#[derive(Debug)]
pub struct TrackedWeek {
    pub week: WeekId,
    pub analysis: Result<WeekAnalysis, MethodologyError>,
    pub group_tag: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProgressPoint {
    pub week: WeekId,
    pub flexible_kwh_per_day: Option<f64>,
    pub reduction_vs_comparison: Option<f64>,
    pub below_baseline: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub group_tag: Option<String>,
    /// Set when the week was skipped; holds the machine-readable reason.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<String>,
}

impl ProgressPoint {
    pub fn is_gap(&self) -> bool {
        self.gap.is_some()
    }
}

/// Reduction of each week against one fixed comparison week.
pub fn track_progress(
    baseline: &BaselineModel,
    comparison: &WeekAnalysis,
    weeks: Vec<TrackedWeek>,
) -> Result<Vec<ProgressPoint>, MethodologyError> {
    let base = BaselineRef::from(baseline);
    if comparison.baseline_ref != base {
        return Err(MethodologyError::BaselineMismatch);
    }
    if comparison.flexible_kwh_per_day <= 0.0 {
        return Err(MethodologyError::ZeroFlexible);
    }
    let mut out = Vec::with_capacity(weeks.len());
    for tracked in weeks {
        if tracked.week <= comparison.week {
            return Err(MethodologyError::WeekNotAfterComparison { week: tracked.week, comparison: comparison.week });
        }
        let point = match tracked.analysis {
            Ok(a) => {
                if a.baseline_ref != base || a.week != tracked.week {
                    return Err(MethodologyError::BaselineMismatch);
                }
                ProgressPoint {
                    week: tracked.week,
                    flexible_kwh_per_day: Some(a.flexible_kwh_per_day),
                    reduction_vs_comparison: Some(reduction_fraction(
                        comparison.flexible_kwh_per_day,
                        a.flexible_kwh_per_day,
                    )?),
                    below_baseline: a.below_baseline,
                    group_tag: tracked.group_tag,
                    gap: None,
                }
            }
            Err(MethodologyError::InsufficientCoverage { .. } | MethodologyError::InsufficientDays { .. }) => {
                ProgressPoint {
                    week: tracked.week,
                    flexible_kwh_per_day: None,
                    reduction_vs_comparison: None,
                    below_baseline: false,
                    group_tag: tracked.group_tag,
                    gap: Some("InsufficientCoverage".into()),
                }
            }
            Err(e) => return Err(e),
        };
        out.push(point);
    }
    Ok(out)
}
