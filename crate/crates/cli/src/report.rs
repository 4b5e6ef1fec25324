//! Analysis report shared by the text and JSON outputs.

use std::fmt::Write as _;

use serde::Serialize;

use excursion_core::{Class, RangeSource, Reason, SlopeFit, Verdict};

/// Most K(ε) rows shown in the text report.
pub const MAX_TABLE_ROWS: usize = 24;

#[derive(Debug, Clone, Serialize)]
pub struct InputInfo {
    pub path: String,
    pub column: String,
    pub n: usize,
    pub dt: f64,
    pub returns: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub epsilon: f64,
    pub n_emp: u64,
    pub n_theory: f64,
    pub k: f64,
    pub in_fit: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisReport {
    pub input: InputInfo,
    pub class: Class,
    pub reason: Reason,
    pub slope_fit: Option<SlopeFit>,
    pub range_source: Option<RangeSource>,
    pub qv: Option<f64>,
    pub table: Vec<Row>,
    pub summary: String,
}

impl AnalysisReport {
    pub fn new(input: InputInfo, verdict: &Verdict) -> Self {
        let fit = verdict.slope_fit;
        let table = verdict.profile.as_ref().map_or_else(Vec::new, |p| {
            (0..p.len())
                .map(|i| Row {
                    epsilon: p.grid.as_slice()[i],
                    n_emp: p.n_emp[i],
                    n_theory: p.n_theory[i],
                    k: p.k_ratio[i],
                    in_fit: fit.is_some_and(|f| (f.range_lo..=f.range_hi).contains(&i)),
                })
                .collect()
        });
        Self {
            summary: summary_line(verdict),
            input,
            class: verdict.class,
            reason: verdict.reason,
            slope_fit: fit,
            range_source: verdict.range_source,
            qv: verdict.profile.as_ref().map(|p| p.qv),
            table,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let i = &self.input;
        let _ = writeln!(s, "input:  {} [column {}]", i.path, i.column);
        let _ = writeln!(
            s,
            "series: n = {}, dt = {}{}",
            i.n,
            i.dt,
            if i.returns { ", simple returns of prices" } else { "" }
        );
        if let Some(qv) = self.qv {
            let _ = writeln!(s, "qv:     {}", sci(qv));
        }
        if !self.table.is_empty() {
            let _ = writeln!(s);
            let _ = writeln!(s, "  {:>10}  {:>10}  {:>10}  {:>8}", "eps", "N_emp", "N_theory", "K");
            for row in thin(&self.table, MAX_TABLE_ROWS) {
                let _ = writeln!(
                    s,
                    "{} {:>10}  {:>10}  {:>10}  {:>8.3}",
                    if row.in_fit { '*' } else { ' ' },
                    sci(row.epsilon),
                    row.n_emp,
                    sci(row.n_theory),
                    row.k
                );
            }
            let _ = writeln!(s);
        }
        if let Some(f) = &self.slope_fit {
            let src = match self.range_source {
                Some(RangeSource::Fallback) => "fallback on largest counts",
                _ => "K(eps) scaling band",
            };
            let _ = writeln!(
                s,
                "fit:    eps in [{}, {}], {} points, r^2 = {:.4} ({src})",
                sci(self.table[f.range_lo].epsilon),
                sci(self.table[f.range_hi].epsilon),
                f.n_points,
                f.r_squared
            );
        }
        let _ = writeln!(s, "{}", self.summary);
        s
    }
}

/// The one-line verdict, e.g. `DIFFUSIVE  slope -1.97  (slope-in-band)`.
pub fn summary_line(v: &Verdict) -> String {
    let slope = v.slope().map_or_else(|| "NA".to_string(), |s| format!("{s:.2}"));
    format!("{}  slope {}  ({})", v.class, slope, v.reason.code())
}

/// ε in scientific notation with 3 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.2e}")
}

/// At most `max` rows, evenly spaced and always keeping both ends.
fn thin(rows: &[Row], max: usize) -> Vec<&Row> {
    if rows.len() <= max {
        return rows.iter().collect();
    }
    let last = rows.len() - 1;
    (0..max)
        .map(|k| &rows[(k * last + (max - 1) / 2) / (max - 1)])
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use excursion_core::{classify, ClassifierConfig, Trajectory};

    fn info() -> InputInfo {
        InputInfo {
            path: "x.csv".into(),
            column: "value".into(),
            n: 3,
            dt: 1.0,
            returns: false,
        }
    }

    #[test]
    fn scientific_three_digits() {
        assert_eq!(sci(0.0012345), "1.23e-3");
        assert_eq!(sci(250.0), "2.50e2");
    }

    #[test]
    fn thinning_keeps_ends() {
        let rows: Vec<Row> = (0..40)
            .map(|i| Row {
                epsilon: i as f64,
                n_emp: 0,
                n_theory: 1.0,
                k: 0.0,
                in_fit: false,
            })
            .collect();
        let t = thin(&rows, 24);
        assert_eq!(t.len(), 24);
        assert_eq!(t[0].epsilon, 0.0);
        assert_eq!(t[23].epsilon, 39.0);
        assert!(t.windows(2).all(|w| w[0].epsilon < w[1].epsilon));
    }

    #[test]
    fn summary_has_one_class_and_two_decimals() {
        let flat = Trajectory::new(vec![3.0; 50], 1.0).unwrap();
        let v = classify(&flat, &ClassifierConfig::default()).unwrap();
        let r = AnalysisReport::new(info(), &v);
        assert_eq!(r.summary, "INDETERMINATE  slope NA  (degenerate-signal)");
        assert!(r.table.is_empty());

        let sine: Vec<f64> = (0..5000).map(|i| (i as f64 * 0.01).sin()).collect();
        let v = classify(&Trajectory::new(sine, 0.01).unwrap(), &ClassifierConfig::default()).unwrap();
        let text = AnalysisReport::new(info(), &v).to_text();
        let last = text.lines().last().unwrap();
        assert!(last.starts_with("NON-DIFFUSIVE  slope "), "{last}");
        let slope = last.split_whitespace().nth(2).unwrap();
        assert_eq!(slope.split('.').nth(1).unwrap().len(), 2, "{slope}");
    }
}
