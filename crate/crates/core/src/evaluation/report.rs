//! Text and JSON renderings of comparison grids.

use std::fmt::Write as _;

use super::GridReport;

const COLUMNS: [&str; 4] = ["Accuracy", "Precision", "Recall", "F1-Measure"];

const FOOTNOTE: &str = "Values are percentages. Precision, Recall and F1-Measure are macro averages \
over classes; a class that is never predicted (or never present) contributes 0.";

fn pct(v: f64) -> String {
    format!("{:.2}", v * 100.0)
}

/// One table per feature set, one row per classifier.
pub fn render_text(grid: &GridReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{}", grid.build);
    let _ = writeln!(out, "Protocol: {}, seed {}", grid.protocol, grid.seed);
    let classes: Vec<String> = grid
        .class_names
        .iter()
        .zip(&grid.class_counts)
        .map(|(n, c)| format!("{n} {c}"))
        .collect();
    let _ = writeln!(out, "Samples: {} ({})", grid.n_samples, classes.join(", "));

    let name_width = grid
        .classifiers
        .iter()
        .map(|c| c.short_name().len())
        .chain(["Classifier".len()])
        .max()
        .unwrap_or(0);
    for &features in &grid.feature_sets {
        let n_features = grid
            .cells
            .iter()
            .find(|c| c.features == features)
            .map_or(0, |c| c.n_features);
        let _ = writeln!(out, "\nFeature set: {features} ({n_features} features)");
        let _ = write!(out, "{:<name_width$}", "Classifier");
        for h in COLUMNS {
            let _ = write!(out, "  {h:>10}");
        }
        out.push('\n');
        for &kind in &grid.classifiers {
            let Some(cell) = grid.cell(kind, features) else {
                continue;
            };
            let m = &cell.metrics;
            let _ = write!(out, "{:<name_width$}", kind.short_name());
            for v in [m.accuracy, m.macro_precision, m.macro_recall, m.macro_f1] {
                let _ = write!(out, "  {:>10}", pct(v));
            }
            out.push('\n');
        }
    }
    let _ = writeln!(out, "\n{FOOTNOTE}");
    out
}

pub fn render_json(grid: &GridReport) -> String {
    let mut s = serde_json::to_string_pretty(grid).expect("report is plain data");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::{ClassifierKind, LabeledDataset, TrainConfig};
    use crate::evaluation::{comparison_grid, EvalConfig, Protocol};
    use crate::features::{FamilySet, FeatureSchema};

    #[test]
    fn table_layout() {
        let schema = FeatureSchema::from_names(&["lab.a", "stat.b", "dwt.c"]).unwrap();
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![(i % 2) as f64 * 5.0 + i as f64 * 0.01; 3])
            .collect();
        let labels = (0..12).map(|i| i % 2).collect();
        let data = LabeledDataset::new(rows, labels, vec!["P".into(), "Q".into()], schema).unwrap();
        let mut cfg = TrainConfig::default();
        cfg.forest.n_trees = 5;
        cfg.mlp.epochs = 5;
        let eval = EvalConfig {
            protocol: Protocol::KFold { k: 3 },
            seed: 1,
        };
        let grid = comparison_grid(&data, &ClassifierKind::ALL, &FamilySet::standard_grid(), &cfg, &eval).unwrap();
        let text = render_text(&grid);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[1].starts_with("Protocol: stratified 3-fold"));
        assert_eq!(lines[2], "Samples: 12 (P 6, Q 6)");
        assert_eq!(text.matches("Feature set: ").count(), 4);
        assert!(text.contains("Feature set: lab+stat (2 features)"));
        assert!(text.contains("Classifier    Accuracy   Precision      Recall  F1-Measure"));
        let rf_rows = lines.iter().filter(|l| l.starts_with("RF ")).count();
        assert_eq!(rf_rows, 4);
        let back: GridReport = serde_json::from_str(&render_json(&grid)).unwrap();
        assert_eq!(back, grid);
    }
}
