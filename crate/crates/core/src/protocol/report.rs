//! Experiment reports: aligned text tables and CSV.

use super::system::SystemSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub train: String,
    pub test: String,
    pub system: SystemSpec,
    pub auc: f64,
    /// Percent.
    pub eer: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// `train,test,system,auc,eer`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("train,test,system,auc,eer\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.6},{:.4}\n",
                csv_field(&r.train),
                csv_field(&r.test),
                csv_field(&r.system.to_string()),
                r.auc,
                r.eer
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let header = [
            "Train on",
            "Test on",
            "Extractor",
            "Specs",
            "AUC",
            "EER (%)",
        ];
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                let (extractor, specs) = r.system.table_columns();
                vec![
                    r.train.clone(),
                    r.test.clone(),
                    extractor,
                    specs,
                    format!("{:.4}", r.auc),
                    format!("{:.2}", r.eer),
                ]
            })
            .collect();
        render_table(&header, &body)
    }

    /// Distinct (train, test) pairs in first-appearance order.
    pub fn blocks(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        for r in &self.rows {
            let key = (r.train.clone(), r.test.clone());
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionRow {
    pub calibration: String,
    pub test: String,
    pub specs: String,
    pub fused_eer: f64,
    pub sys0_eer: f64,
    pub sys1_eer: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FusionReport {
    pub rows: Vec<FusionRow>,
}

impl FusionReport {
    /// `calibration,test,specs,fused_eer,sys0_eer,sys1_eer`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("calibration,test,specs,fused_eer,sys0_eer,sys1_eer\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4},{:.4}\n",
                csv_field(&r.calibration),
                csv_field(&r.test),
                csv_field(&r.specs),
                r.fused_eer,
                r.sys0_eer,
                r.sys1_eer
            ));
        }
        out
    }

    pub fn to_table(&self) -> String {
        let header = [
            "Calib. on",
            "Test on",
            "Specs",
            "Fused EER (%)",
            "Sys. 0 EER (%)",
            "Sys. 1 EER (%)",
        ];
        let body: Vec<Vec<String>> = self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.calibration.clone(),
                    r.test.clone(),
                    r.specs.clone(),
                    format!("{:.2}", r.fused_eer),
                    format!("{:.2}", r.sys0_eer),
                    format!("{:.2}", r.sys1_eer),
                ]
            })
            .collect();
        render_table(&header, &body)
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn render_table(header: &[&str], body: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in body {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c}{}", " ".repeat(w - c.chars().count())))
            .collect();
        padded.join(" | ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&(rule.join("-+-") + "\n"));
    for row in body {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(system: &str, auc: f64, eer: f64) -> ReportRow {
        ReportRow {
            train: "a".into(),
            test: "b".into(),
            system: system.parse().unwrap(),
            auc,
            eer,
        }
    }

    #[test]
    fn table_renders_lbp_glyphs() {
        let report = ExperimentReport {
            rows: vec![
                row("lbp-8-2-c-none", 0.99, 5.77),
                row("fourier", 0.92, 17.31),
            ],
        };
        let table = report.to_table();
        assert!(table.contains("(8,2) ○"));
        assert!(table.contains("| 0.9900 | 5.77"));
        assert!(table.lines().next().unwrap().starts_with("Train on"));
        assert_eq!(table.lines().count(), 4);
    }

    #[test]
    fn csv_layout() {
        let report = ExperimentReport {
            rows: vec![row("lbp-8-1-s-riu2", 1.0, 0.0)],
        };
        assert_eq!(
            report.to_csv(),
            "train,test,system,auc,eer\na,b,lbp-8-1-s-riu2,1.000000,0.0000\n"
        );
        assert_eq!(csv_field("x,y"), "\"x,y\"");
    }

    #[test]
    fn fusion_table_header() {
        let report = FusionReport {
            rows: vec![FusionRow {
                calibration: "c".into(),
                test: "t".into(),
                specs: "s0+s1".into(),
                fused_eer: 10.0,
                sys0_eer: 15.16,
                sys1_eer: 20.46,
            }],
        };
        let table = report.to_table();
        assert!(table.contains("Fused EER (%) | Sys. 0 EER (%) | Sys. 1 EER (%)"));
        assert!(table.contains("10.00"));
    }
}
