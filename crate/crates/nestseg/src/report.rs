use std::path::Path;

use nestseg_core::metrics::MetricsReport;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::write_atomic;

/// Serialized metrics for one partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub image: Option<String>,
    pub k: usize,
    pub asa: f64,
    pub br: f64,
    pub cd: f64,
    pub src: f64,
    pub nestedness: Option<f64>,
    pub eps: usize,
    pub ground_truths: usize,
}

impl ReportRecord {
    pub fn new(image: Option<String>, r: &MetricsReport) -> Self {
        Self {
            image,
            k: r.k,
            asa: r.asa,
            br: r.br,
            cd: r.cd,
            src: r.src,
            nestedness: r.nestedness,
            eps: r.eps,
            ground_truths: r.ground_truths,
        }
    }
}

pub fn reports_to_json(reports: &[ReportRecord]) -> String {
    serde_json::to_string_pretty(reports).expect("reports always serialize")
}

/// CSV with one row per report: `image` (batch mode only), `k`, `asa`,
/// `br`, `cd`, `src`.
pub fn reports_to_csv(reports: &[ReportRecord]) -> Result<String> {
    let with_image = reports.iter().any(|r| r.image.is_some());
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Invalid(e.to_string());
    let mut header = vec!["k", "asa", "br", "cd", "src"];
    if with_image {
        header.insert(0, "image");
    }
    w.write_record(&header).map_err(csv_err)?;
    for r in reports {
        let mut row = vec![
            r.k.to_string(),
            r.asa.to_string(),
            r.br.to_string(),
            r.cd.to_string(),
            r.src.to_string(),
        ];
        if with_image {
            row.insert(0, r.image.clone().unwrap_or_default());
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv of utf-8 fields is utf-8"))
}

pub fn save_reports(json: Option<&Path>, csv: Option<&Path>, reports: &[ReportRecord]) -> Result<()> {
    if let Some(path) = json {
        write_atomic(path, reports_to_json(reports).as_bytes())?;
    }
    if let Some(path) = csv {
        write_atomic(path, reports_to_csv(reports)?.as_bytes())?;
    }
    Ok(())
}
