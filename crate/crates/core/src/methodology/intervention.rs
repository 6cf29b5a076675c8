use serde::{Deserialize, Serialize};

use super::{MethodologyError, WeekAnalysis};

/// `1 − saving / comparison` over flexible consumption.
pub fn reduction_fraction(comparison_flexible: f64, saving_flexible: f64) -> Result<f64, MethodologyError> {
    if comparison_flexible <= 0.0 {
        return Err(MethodologyError::ZeroFlexible);
    }
    Ok(1.0 - saving_flexible / comparison_flexible)
}

/// Whole-percent label, e.g. `21%`. Only for display.
pub fn percent_label(fraction: f64) -> String {
    format!("{:.0}%", fraction * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionResult {
    pub comparison: WeekAnalysis,
    pub saving: WeekAnalysis,
    pub absolute_saving_kwh_per_day: f64,
    pub reduction_fraction: f64,
    pub reduction_display: String,
    #[serde(default)]
    pub notes: String,
}

pub fn evaluate_intervention(
    comparison: WeekAnalysis,
    saving: WeekAnalysis,
    notes: impl Into<String>,
) -> Result<InterventionResult, MethodologyError> {
    if comparison.building_id != saving.building_id || comparison.baseline_ref != saving.baseline_ref {
        return Err(MethodologyError::BaselineMismatch);
    }
    let reduction = reduction_fraction(comparison.flexible_kwh_per_day, saving.flexible_kwh_per_day)?;
    Ok(InterventionResult {
        absolute_saving_kwh_per_day: comparison.flexible_kwh_per_day - saving.flexible_kwh_per_day,
        reduction_fraction: reduction,
        reduction_display: percent_label(reduction),
        comparison,
        saving,
        notes: notes.into(),
    })
}
