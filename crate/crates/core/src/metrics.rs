//! Confusion matrices and one-vs-rest per-class accuracy, precision and
//! recall.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{ensure_same_dims, ClassMap, LabelRaster, NODATA_LABEL};

/// `counts[i][j]`: pixels of reference class `classes[i]` predicted as
/// `classes[j]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<u16>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<u16>, counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = classes.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::Shape(format!("confusion matrix must be {n}x{n}")));
        }
        let mut sorted = classes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != n {
            return Err(Error::Precondition(
                "duplicate class in confusion matrix".into(),
            ));
        }
        Ok(Self { classes, counts })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn index_of(&self, class: u16) -> Option<usize> {
        self.classes.iter().position(|&c| c == class)
    }

    pub fn get(&self, reference: u16, predicted: u16) -> u64 {
        match (self.index_of(reference), self.index_of(predicted)) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }

    /// Micro accuracy, trace over total.
    pub fn overall_accuracy(&self) -> Option<f64> {
        ratio(self.trace(), self.total())
    }
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Tallies reference vs predicted labels. Pixels that are NODATA in either
/// raster are skipped, as are reference-unsure pixels when
/// `exclude_unsure_ref` is set.
pub fn confusion(
    reference: &LabelRaster,
    predicted: &LabelRaster,
    exclude_unsure_ref: bool,
) -> Result<ConfusionMatrix> {
    ensure_same_dims(
        "reference vs predicted",
        (reference.width(), reference.height()),
        (predicted.width(), predicted.height()),
    )?;
    let mut classes: Vec<u16> = reference
        .class_map()
        .ids()
        .chain(predicted.class_map().ids())
        .collect();
    classes.sort_unstable();
    classes.dedup();

    let mut index = vec![usize::MAX; 1 << 16];
    for (i, &c) in classes.iter().enumerate() {
        index[c as usize] = i;
    }
    let n = classes.len();
    let mut counts = vec![vec![0u64; n]; n];
    let unsure = reference.unsure_id();
    for (&r, &p) in reference.labels().iter().zip(predicted.labels()) {
        if r == NODATA_LABEL || p == NODATA_LABEL || (exclude_unsure_ref && r == unsure) {
            continue;
        }
        counts[index[r as usize]][index[p as usize]] += 1;
    }
    ConfusionMatrix::new(classes, counts)
}

/// Ratios with a zero denominator are `None`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: u16,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

pub fn per_class_metrics(cm: &ConfusionMatrix) -> Vec<ClassMetrics> {
    let total = cm.total();
    let n = cm.classes.len();
    (0..n)
        .map(|c| {
            let tp = cm.counts[c][c];
            let predicted: u64 = (0..n).map(|i| cm.counts[i][c]).sum();
            let actual: u64 = cm.counts[c].iter().sum();
            let fp = predicted - tp;
            let fn_ = actual - tp;
            let tn = total - tp - fp - fn_;
            ClassMetrics {
                class: cm.classes[c],
                accuracy: ratio(tp + tn, total),
                precision: ratio(tp, tp + fp),
                recall: ratio(tp, tp + fn_),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NamedClassMetrics {
    pub id: u16,
    pub name: String,
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// Machine-readable evaluation result.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub evaluated_pixels: u64,
    pub overall_accuracy: Option<f64>,
    pub exclude_unsure_ref: bool,
    pub classes: Vec<NamedClassMetrics>,
    pub confusion: ConfusionMatrix,
}

impl MetricsReport {
    pub fn new(cm: ConfusionMatrix, class_map: &ClassMap, exclude_unsure_ref: bool) -> Self {
        let classes = per_class_metrics(&cm)
            .into_iter()
            .map(|m| NamedClassMetrics {
                id: m.class,
                name: class_map
                    .name(m.class)
                    .map_or_else(|| format!("class {}", m.class), str::to_owned),
                accuracy: m.accuracy,
                precision: m.precision,
                recall: m.recall,
            })
            .collect();
        Self {
            evaluated_pixels: cm.total(),
            overall_accuracy: cm.overall_accuracy(),
            exclude_unsure_ref,
            classes,
            confusion: cm,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

const GROUP_WIDTH: usize = 18;

fn pct(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_owned(), |x| format!("{:.1}", x * 100.0))
}

fn fit(name: &str, width: usize) -> String {
    name.chars().take(width).collect()
}

/// Plain-text table with one row per model and an A/P/R column group per
/// class, values in percent. `columns` selects and orders the classes.
pub fn render_table(
    class_map: &ClassMap,
    columns: &[u16],
    rows: &[(String, MetricsReport)],
) -> String {
    let model_w = rows
        .iter()
        .map(|(n, _)| n.chars().count())
        .chain(std::iter::once(5))
        .max()
        .unwrap();
    let mut out = String::new();

    let _ = write!(out, "{:<model_w$} |", "Model");
    for &c in columns {
        let name = class_map
            .name(c)
            .map_or_else(|| format!("class {c}"), str::to_owned);
        let _ = write!(out, " {:^GROUP_WIDTH$} |", fit(&name, GROUP_WIDTH));
    }
    let _ = writeln!(out, " {:>7} |", "Overall");

    let _ = write!(out, "{:<model_w$} |", "");
    for _ in columns {
        let _ = write!(out, " {:>6}{:>6}{:>6} |", "A", "P", "R");
    }
    let _ = writeln!(out, " {:>7} |", "OA");

    let _ = write!(out, "{}-+", "-".repeat(model_w));
    for _ in columns {
        let _ = write!(out, "{}+", "-".repeat(GROUP_WIDTH + 2));
    }
    let _ = writeln!(out, "{}+", "-".repeat(9));

    for (name, report) in rows {
        let _ = write!(out, "{:<model_w$} |", name);
        for &c in columns {
            let m = report.classes.iter().find(|m| m.id == c);
            let (a, p, r) = m.map_or((None, None, None), |m| (m.accuracy, m.precision, m.recall));
            let _ = write!(out, " {:>6}{:>6}{:>6} |", pct(a), pct(p), pct(r));
        }
        let _ = writeln!(out, " {:>7} |", pct(report.overall_accuracy));
    }
    out
}
