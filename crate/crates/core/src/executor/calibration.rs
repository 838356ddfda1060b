use serde::{Deserialize, Serialize};

use crate::workflow::{BindingKind, TaskBinding};

/// Maps an abstract task length (MI) to the workload parameters of each
/// built-in task.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CalibrationConfig {
    pub pi_terms_per_mi: f64,
    pub kmp_chars_per_mi: f64,
    pub kmp_text_cap: u64,
    pub kmp_pattern_len: u64,
    /// Levenshtein string length = scale * sqrt(MI).
    pub levenshtein_scale: f64,
    pub levenshtein_cap: u64,
    pub sort_items_per_mi: f64,
    pub sort_cap: u64,
}

impl Default for CalibrationConfig {
    fn default() -> Self {
        CalibrationConfig {
            pi_terms_per_mi: 10_000.0,
            kmp_chars_per_mi: 1_000.0,
            kmp_text_cap: 10_000_000,
            kmp_pattern_len: 8,
            levenshtein_scale: 10.0,
            levenshtein_cap: 20_000,
            sort_items_per_mi: 50.0,
            sort_cap: 50_000,
        }
    }
}

fn scaled(x: f64, cap: u64) -> u64 {
    (x.round() as u64).clamp(1, cap.max(1))
}

impl CalibrationConfig {
    /// Every derived parameter is at least 1.
    pub fn calibrate(&self, length_mi: f64, kind: BindingKind, seed: u64) -> TaskBinding {
        match kind {
            BindingKind::PiCalculation => {
                TaskBinding::PiCalculation { terms: scaled(length_mi * self.pi_terms_per_mi, u64::MAX) }
            }
            BindingKind::KmpMatch => TaskBinding::KmpMatch {
                text_len: scaled(length_mi * self.kmp_chars_per_mi, self.kmp_text_cap),
                pattern_len: self.kmp_pattern_len.max(1),
                seed,
            },
            BindingKind::LevenshteinDistance => {
                let len = scaled(self.levenshtein_scale * length_mi.sqrt(), self.levenshtein_cap);
                TaskBinding::LevenshteinDistance { len_a: len, len_b: len, seed }
            }
            BindingKind::SelectionSort => {
                TaskBinding::SelectionSort { len: scaled(length_mi * self.sort_items_per_mi, self.sort_cap), seed }
            }
            BindingKind::SimulatedOnly => TaskBinding::SimulatedOnly,
        }
    }
}

/// Calibration with the default configuration.
pub fn calibrate(length_mi: f64, kind: BindingKind, seed: u64) -> TaskBinding {
    CalibrationConfig::default().calibrate(length_mi, kind, seed)
}
