//! On-disk formats: `records.csv`, `summary.json`, bench and sweep tables.
//!
//! Every file starts with its schema version. The CSV files carry it as a
//! leading `# schema_version = N` comment line; JSON files as a top-level
//! `schema_version` key.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{SlotDecision, SlotRecord, SystemConfig};
use crate::policy::PolicyTag;
use crate::sim::{RunSummary, SimOutput, SweepRow};

pub const OUTPUT_SCHEMA_VERSION: u32 = 1;

/// The committed JSON Schema for `summary.json`.
pub const SUMMARY_SCHEMA: &str = include_str!("../schema/summary.schema.json");

pub const RECORD_COLUMNS: [&str; 13] = [
    "t",
    "user",
    "snr_db",
    "cr",
    "rate_bps",
    "latency_ms",
    "q_true_db",
    "q_oracle_db",
    "satisfied",
    "objective",
    "feature_len",
    "q_pred_db",
    "latency_s",
];

/// One row of `records.csv`: one user in one slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct RecordRow {
    t: usize,
    user: u32,
    snr_db: f64,
    cr: f64,
    rate_bps: f64,
    latency_ms: f64,
    q_true_db: f64,
    q_oracle_db: f64,
    satisfied: u8,
    objective: f64,
    feature_len: u64,
    q_pred_db: Option<f64>,
    /// Exact latency; `latency_ms` is rounded through the unit change.
    latency_s: f64,
}

fn version_line() -> String {
    format!("# schema_version = {OUTPUT_SCHEMA_VERSION}\n")
}

fn fmt_err(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

/// Serializes records; `user_ids` labels the users in record order.
pub fn records_to_csv(records: &[SlotRecord], user_ids: &[u32]) -> Result<String> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    let to_err = |e: csv::Error| Error::invalid(e.to_string());
    w.write_record(RECORD_COLUMNS).map_err(to_err)?;
    for r in records {
        if r.snr_db.len() != user_ids.len() {
            return Err(Error::invalid("record width differs from the user list"));
        }
        for (k, &user) in user_ids.iter().enumerate() {
            let d = &r.decision;
            w.serialize(RecordRow {
                t: r.t,
                user,
                snr_db: r.snr_db[k],
                cr: d.cr[k],
                rate_bps: d.rate[k],
                latency_ms: d.latency[k] * 1e3,
                q_true_db: r.true_quality[k],
                q_oracle_db: r.oracle_quality[k],
                satisfied: r.satisfied[k] as u8,
                objective: r.objective,
                feature_len: d.feature_len[k],
                q_pred_db: d.predicted_quality_mean[k],
                latency_s: d.latency[k],
            })
            .map_err(to_err)?;
        }
    }
    let body = w.into_inner().map_err(|e| Error::invalid(e.to_string()))?;
    let mut out = version_line();
    out.push_str(&String::from_utf8(body).expect("csv writer emits UTF-8"));
    Ok(out)
}

/// Inverse of [`records_to_csv`]: returns the records and the user ids.
pub fn parse_records_csv(text: &str, path: &Path) -> Result<(Vec<SlotRecord>, Vec<u32>)> {
    let mut lines = text.splitn(2, '\n');
    let first = lines.next().unwrap_or_default();
    if first.trim_end() != version_line().trim_end() {
        return Err(fmt_err(
            path,
            format!("expected `{}`", version_line().trim_end()),
        ));
    }
    let body = lines.next().unwrap_or_default();
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let headers = rdr.headers().map_err(|e| fmt_err(path, e))?.clone();
    if headers.iter().ne(RECORD_COLUMNS) {
        return Err(fmt_err(path, "unexpected header"));
    }

    let mut records: Vec<SlotRecord> = Vec::new();
    let mut ids: Vec<u32> = Vec::new();
    for row in rdr.deserialize::<RecordRow>() {
        let row = row.map_err(|e| fmt_err(path, e))?;
        let new_slot = records.last().is_none_or(|r| r.t != row.t);
        if new_slot {
            if let Some(prev) = records.last() {
                if prev.snr_db.len() != ids.len() {
                    return Err(fmt_err(path, format!("slot {} has missing users", prev.t)));
                }
            }
            records.push(SlotRecord {
                t: row.t,
                snr_db: Vec::new(),
                decision: SlotDecision {
                    cr: Vec::new(),
                    rate: Vec::new(),
                    feature_len: Vec::new(),
                    predicted_quality_mean: Vec::new(),
                    latency: Vec::new(),
                },
                true_quality: Vec::new(),
                oracle_quality: Vec::new(),
                satisfied: Vec::new(),
                objective: row.objective,
            });
        }
        let slot_index = records.len() - 1;
        let r = records.last_mut().expect("pushed above");
        let k = r.snr_db.len();
        if slot_index == 0 {
            ids.push(row.user);
        } else if ids.get(k) != Some(&row.user) {
            return Err(fmt_err(
                path,
                format!("slot {}: unexpected user {}", row.t, row.user),
            ));
        }
        r.snr_db.push(row.snr_db);
        r.decision.cr.push(row.cr);
        r.decision.rate.push(row.rate_bps);
        r.decision.feature_len.push(row.feature_len);
        r.decision.predicted_quality_mean.push(row.q_pred_db);
        r.decision.latency.push(row.latency_s);
        r.true_quality.push(row.q_true_db);
        r.oracle_quality.push(row.q_oracle_db);
        r.satisfied.push(row.satisfied != 0);
    }
    if let Some(last) = records.last() {
        if last.snr_db.len() != ids.len() {
            return Err(fmt_err(path, format!("slot {} has missing users", last.t)));
        }
    }
    Ok((records, ids))
}

pub fn read_records(path: &Path) -> Result<(Vec<SlotRecord>, Vec<u32>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_records_csv(&text, path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryFile {
    pub schema_version: u32,
    pub policy: PolicyTag,
    pub seed: u64,
    pub summary: RunSummary,
    pub config: SystemConfig,
}

impl SummaryFile {
    pub fn new(policy: PolicyTag, summary: &RunSummary, cfg: &SystemConfig) -> Self {
        Self {
            schema_version: OUTPUT_SCHEMA_VERSION,
            policy,
            seed: cfg.seed,
            summary: summary.clone(),
            config: cfg.clone(),
        }
    }
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Writes `records.csv` and `summary.json` into `out_dir`.
pub fn write_outputs(out: &SimOutput, cfg: &SystemConfig, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    let ids: Vec<u32> = cfg.users.iter().map(|u| u.user_id).collect();
    let csv = records_to_csv(&out.records, &ids)?;
    write_file(&out_dir.join("records.csv"), csv.as_bytes())?;
    let summary = SummaryFile::new(out.policy, &out.summary, cfg);
    let json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    write_file(&out_dir.join("summary.json"), json.as_bytes())
}

pub fn read_summary(path: &Path) -> Result<SummaryFile> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| fmt_err(path, e))
}

/// Policy comparison table, one row per policy. The
/// DRL-SAC row is present but marked absent.
pub fn comparison_csv(runs: &[SimOutput]) -> String {
    let mut s = version_line();
    s.push_str("policy,status,avg_satisfaction_pct,avg_psnr_db,avg_latency_ms,objective");
    let n = runs.first().map_or(0, |r| r.summary.users.len());
    for k in 0..n {
        let id = runs[0].summary.users[k].user_id;
        s.push_str(&format!(
            ",user{id}_satisfaction_pct,user{id}_psnr_db,user{id}_latency_ms"
        ));
    }
    s.push_str(",inference_ms_mean,inference_ms_std,update_ms_mean,update_ms_std\n");
    for r in runs {
        let m = &r.summary;
        s.push_str(&format!(
            "{},ok,{},{},{},{}",
            r.policy, m.avg_satisfaction_pct, m.avg_psnr_db, m.avg_latency_ms, m.total_objective
        ));
        for u in &m.users {
            s.push_str(&format!(
                ",{},{},{}",
                u.satisfaction_pct, u.mean_psnr_db, u.mean_latency_ms
            ));
        }
        s.push_str(&format!(
            ",{},{},{},{}\n",
            m.inference_ms.mean_ms, m.inference_ms.std_ms, m.update_ms.mean_ms, m.update_ms.std_ms
        ));
    }
    s.push_str("drl_sac,absent,,,,");
    s.push_str(&",,,".repeat(n));
    s.push_str(",,,,\n");
    s
}

/// Writes one subdirectory per policy plus `comparison.csv`.
pub fn write_bench(runs: &[SimOutput], cfg: &SystemConfig, out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    for r in runs {
        write_outputs(r, cfg, &out_dir.join(r.policy.as_str()))?;
    }
    write_file(
        &out_dir.join("comparison.csv"),
        comparison_csv(runs).as_bytes(),
    )
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = version_line();
    s.push_str(
        "parameter,value,policy,avg_satisfaction_pct,avg_psnr_db,avg_latency_ms,objective,\
         inference_ms_mean,inference_ms_std,update_ms_mean,update_ms_std\n",
    );
    for r in rows {
        let v: Vec<String> = r.value.iter().map(f64::to_string).collect();
        let m = &r.summary;
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.parameter,
            v.join(":"),
            r.policy,
            m.avg_satisfaction_pct,
            m.avg_psnr_db,
            m.avg_latency_ms,
            m.total_objective,
            m.inference_ms.mean_ms,
            m.inference_ms.std_ms,
            m.update_ms.mean_ms,
            m.update_ms.std_ms
        ));
    }
    s
}

pub fn write_sweep(rows: &[SweepRow], out_dir: &Path) -> Result<()> {
    ensure_dir(out_dir)?;
    write_file(&out_dir.join("sweep.csv"), sweep_csv(rows).as_bytes())?;
    let json = serde_json::to_string_pretty(&serde_json::json!({
        "schema_version": OUTPUT_SCHEMA_VERSION,
        "rows": rows,
    }))
    .expect("sweep rows serialize");
    write_file(&out_dir.join("sweep.json"), json.as_bytes())
}

/// Reads only the version comment of a CSV written by this module.
pub fn csv_schema_version(path: &Path) -> Result<u32> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut line = String::new();
    BufReader::new(f)
        .read_line(&mut line)
        .map_err(|e| Error::io(path, e))?;
    line.trim()
        .strip_prefix("# schema_version = ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| fmt_err(path, "missing schema_version line"))
}
