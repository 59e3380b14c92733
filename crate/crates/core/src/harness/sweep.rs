//! Parameter sweeps over (value × seed × method) cells.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Axis, ScenarioConfig};
use super::env::Scenario;
use super::methods::{run_method, Method};
use super::record::RunRecord;
use crate::Result;

pub const SLOT_HEADER: [&str; 10] = ["method", "axis", "value", "seed", "slot", "pc", "p_dc", "p_hap", "p_rf", "feasible"];

/// One row of the summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: String,
    pub axis: String,
    pub value: f64,
    pub seed: u64,
    pub mean_pc: f64,
    pub mean_p_dc: f64,
    pub mean_p_hap: f64,
    pub mean_p_rf: f64,
    pub feasibility: f64,
    /// `ok`, or the error that stopped the cell.
    pub status: String,
}

impl CellSummary {
    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone)]
pub struct SweepOutput {
    pub rows: Vec<CellSummary>,
    pub records: Vec<(f64, RunRecord)>,
    pub dir: Option<PathBuf>,
}

impl SweepOutput {
    /// Mean over successful seeds of `mean_pc` for one method and value.
    pub fn mean_pc(&self, method: Method, value: f64) -> f64 {
        let xs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.ok() && r.method == method.name() && r.value == value && r.mean_pc.is_finite())
            .map(|r| r.mean_pc)
            .collect();
        if xs.is_empty() {
            f64::NAN
        } else {
            xs.iter().sum::<f64>() / xs.len() as f64
        }
    }
}

fn value_tag(v: f64) -> String {
    format!("{v}").replace('.', "p")
}

/// Runs every cell; a failing cell is recorded with its error and the sweep
/// moves on. When `out_dir` is set, the slot table, the summary table, every
/// run record and the plots are written there.
pub fn sweep_and_report(
    base: &ScenarioConfig,
    axis: Axis,
    values: &[f64],
    seeds: &[u64],
    methods: &[Method],
    out_dir: Option<&Path>,
    mut progress: impl FnMut(&CellSummary),
) -> Result<SweepOutput> {
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir.join("records"))?;
    }
    let mut rows = Vec::new();
    let mut records = Vec::new();
    for &value in values {
        for &seed in seeds {
            let cell = base.with_axis(axis, value).and_then(|cfg| Scenario::new(&cfg, seed));
            for &method in methods {
                let outcome = cell.as_ref().map_err(|e| e.to_string()).and_then(|scenario| {
                    run_method(scenario, method).map_err(|e| e.to_string())
                });
                let row = match &outcome {
                    Ok((record, _)) => {
                        let s = record.summary();
                        CellSummary {
                            method: method.name().into(),
                            axis: axis.name().into(),
                            value,
                            seed,
                            mean_pc: s.mean_pc,
                            mean_p_dc: s.mean_p_dc,
                            mean_p_hap: s.mean_p_hap,
                            mean_p_rf: s.mean_p_rf,
                            feasibility: s.feasibility,
                            status: "ok".into(),
                        }
                    }
                    Err(e) => CellSummary {
                        method: method.name().into(),
                        axis: axis.name().into(),
                        value,
                        seed,
                        mean_pc: f64::NAN,
                        mean_p_dc: f64::NAN,
                        mean_p_hap: f64::NAN,
                        mean_p_rf: f64::NAN,
                        feasibility: 0.0,
                        status: format!("failed: {e}"),
                    },
                };
                progress(&row);
                rows.push(row);
                if let Ok((record, _)) = outcome {
                    if let Some(dir) = out_dir {
                        let name = format!("{}_{}_{}_s{seed}.json", method.name(), axis.name(), value_tag(value));
                        record.save(&dir.join("records").join(name))?;
                    }
                    records.push((value, record));
                }
            }
        }
    }
    let out = SweepOutput {
        rows,
        records,
        dir: out_dir.map(Path::to_path_buf),
    };
    if let Some(dir) = out_dir {
        write_tables(&out, axis, dir)?;
        super::report::render(dir)?;
    }
    Ok(out)
}

fn write_tables(out: &SweepOutput, axis: Axis, dir: &Path) -> Result<()> {
    let slots_tmp = dir.join("slots.csv.tmp");
    let mut w = csv::Writer::from_path(&slots_tmp)?;
    w.write_record(SLOT_HEADER)?;
    for (value, record) in &out.records {
        for (i, s) in record.slots.iter().enumerate() {
            let num = |f: fn(&super::env::SlotCost) -> f64| s.cost.map_or(String::new(), |c| f(&c).to_string());
            w.write_record([
                record.method.clone(),
                axis.name().to_string(),
                value.to_string(),
                record.seed.to_string(),
                i.to_string(),
                num(|c| c.pc),
                num(|c| c.p_dc),
                num(|c| c.p_hap),
                num(|c| c.p_rf),
                s.feasible.to_string(),
            ])?;
        }
    }
    w.flush()?;
    drop(w);
    std::fs::rename(slots_tmp, dir.join("slots.csv"))?;

    let summary_tmp = dir.join("summary.csv.tmp");
    let mut w = csv::Writer::from_path(&summary_tmp)?;
    for row in &out.rows {
        w.serialize(row)?;
    }
    w.flush()?;
    drop(w);
    std::fs::rename(summary_tmp, dir.join("summary.csv"))?;
    Ok(())
}

pub fn read_summary(dir: &Path) -> Result<Vec<CellSummary>> {
    let mut r = csv::Reader::from_path(dir.join("summary.csv"))?;
    let rows = r.deserialize().collect::<std::result::Result<Vec<CellSummary>, _>>()?;
    Ok(rows)
}
