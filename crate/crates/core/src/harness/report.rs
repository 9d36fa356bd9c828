// SPDX-License-Identifier: MIT OR Apache-2.0

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::selection::{Measure, Method};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub title: String,
    pub measure: Measure,
    pub selected_size: usize,
    pub features: Vec<usize>,
    pub validation_error: f64,
    pub test_error: f64,
    /// Steps of the wrapper trace, or length of the filter ranking.
    pub trace_length: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub grid_size: usize,
    pub data_fingerprint: String,
    pub search_rows: usize,
    pub validation_rows: usize,
    pub test_rows: usize,
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Copy with every wall-clock field zeroed, for run-to-run comparison.
    pub fn without_timing(&self) -> Self {
        let mut r = self.clone();
        for row in &mut r.rows {
            row.seconds = 0.0;
        }
        r
    }

    pub fn row(&self, method: Method, measure: Measure) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.measure == measure)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,measure,features,validation_error,test_error,trace_length,seconds\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{:.3}",
                r.title,
                r.measure,
                r.selected_size,
                r.validation_error,
                r.test_error,
                r.trace_length,
                r.seconds
            );
        }
        out
    }

    /// Fixed-width table for terminals.
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<18} {:<12} {:>10} {:>10} {:>10} {:>9}\n",
            "Method", "Measure", "# features", "val error", "test error", "seconds"
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<18} {:<12} {:>10} {:>10.4} {:>10.4} {:>9.2}",
                r.title,
                r.measure.name(),
                r.selected_size,
                r.validation_error,
                r.test_error,
                r.seconds
            );
        }
        out
    }
}
