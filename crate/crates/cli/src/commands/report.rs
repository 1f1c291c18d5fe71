//! `proxyforge report`: cross-configuration aggregation. Walks every run
//! directory under the output root, pools the persisted run records into a
//! median/IQR table, and summarizes how close each configuration's proxies
//! landed to its target next to the nearest benchmark functions.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use proxyforge::ela::landscape_distance;

use super::{iqr, median};
use crate::config::PipelineConfig;
use crate::error::CliError;
use crate::store::csv_lines;

use super::ela::ElaArtifact;
use super::gen_proxies::ProxiesArtifact;

/// One pooled row: every record sharing a config directory, problem, and
/// label.
#[derive(Debug)]
struct Group {
    aocc: Vec<f64>,
}

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut entries: Vec<PathBuf> = fs::read_dir(path)?
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .map(|e| e.path())
        .collect();
    entries.sort();
    Ok(entries)
}

pub fn cmd_report(config: &PipelineConfig) -> Result<(), CliError> {
    let root = &config.out_dir;
    if !root.is_dir() {
        return Err(CliError::runtime(format!(
            "output root {} does not exist; nothing to report",
            root.display()
        )));
    }

    let mut groups: BTreeMap<(String, String, String), Group> = BTreeMap::new();
    let mut skipped = 0usize;
    let mut distance_rows: Vec<String> = Vec::new();

    for dir in sorted_dir(root)? {
        if !dir.is_dir() {
            continue;
        }
        let hash = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let records_dir = dir.join("records");
        if records_dir.is_dir() {
            for path in sorted_dir(&records_dir)? {
                if path.extension().is_none_or(|e| e != "json") {
                    continue;
                }
                match read_record_row(&path) {
                    Some((problem, label, aocc)) => {
                        groups
                            .entry((problem, label, hash.clone()))
                            .or_insert_with(|| Group { aocc: Vec::new() })
                            .aocc
                            .push(aocc);
                    }
                    None => skipped += 1,
                }
            }
        }
        if let Some(row) = distance_row(&dir, &hash) {
            distance_rows.push(row);
        }
    }

    if groups.is_empty() {
        return Err(CliError::runtime(format!(
            "no usable run records under {}",
            root.display()
        )));
    }

    let report_rows = groups.iter().map(|((problem, label, hash), group)| {
        format!(
            "{problem},{label},{hash},{},{:?},{:?}",
            group.aocc.len(),
            median(&group.aocc),
            iqr(&group.aocc),
        )
    });
    let report_csv = csv_lines("problem,algorithm,config,n_runs,median_aocc,iqr_aocc", report_rows);
    let report_path = root.join("report.csv");
    fs::write(&report_path, report_csv)?;

    distance_rows.sort();
    let distances_path = root.join("distances.csv");
    fs::write(
        &distances_path,
        csv_lines(
            "config,problem,n_proxies,proxy_mean_distance,benchmark_mean_distance",
            distance_rows.iter().cloned(),
        ),
    )?;

    println!(
        "report: {} rows over {} record groups -> {}",
        groups.len(),
        groups.values().map(|g| g.aocc.len()).sum::<usize>(),
        report_path.display()
    );
    println!("report: {} proxy-distance rows -> {}", distance_rows.len(), distances_path.display());
    if skipped > 0 {
        println!("report: skipped {skipped} records without a usable score");
    }
    Ok(())
}

/// Extracts (problem, label, aocc) from one record file. Anything missing or
/// non-numeric disqualifies the record rather than aborting the report.
fn read_record_row(path: &Path) -> Option<(String, String, f64)> {
    let text = fs::read_to_string(path).ok()?;
    let value: serde_json::Value = serde_json::from_str(&text).ok()?;
    let problem = value.get("problem")?.as_str()?.to_owned();
    let label = value.get("label")?.as_str()?.to_owned();
    let aocc = value.get("aocc")?.as_f64()?;
    Some((problem, label, aocc))
}

/// Proxy-versus-benchmark closeness for one run directory, when both the
/// feature and proxy artifacts are present.
fn distance_row(dir: &Path, hash: &str) -> Option<String> {
    let features: ElaArtifact =
        serde_json::from_str(&fs::read_to_string(dir.join(format!("features.{hash}.json"))).ok()?)
            .ok()?;
    let proxies: ProxiesArtifact =
        serde_json::from_str(&fs::read_to_string(dir.join(format!("proxies.{hash}.json"))).ok()?)
            .ok()?;
    if proxies.entries.is_empty() {
        return None;
    }
    let proxy_mean = proxies.entries.iter().map(|e| e.fitness).sum::<f64>()
        / proxies.entries.len() as f64;
    let mut pool_distances: Vec<f64> = features
        .pool
        .iter()
        .filter_map(|entry| landscape_distance(&features.distribution, &entry.distribution).ok())
        .collect();
    if pool_distances.is_empty() {
        return None;
    }
    pool_distances.sort_by(|a, b| a.partial_cmp(b).expect("finite distances"));
    let k = proxies.entries.len().min(pool_distances.len());
    let benchmark_mean = pool_distances[..k].iter().sum::<f64>() / k as f64;
    Some(format!(
        "{hash},{},{},{proxy_mean:?},{benchmark_mean:?}",
        features.problem,
        proxies.entries.len()
    ))
}
