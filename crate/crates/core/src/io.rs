//! Dataset file formats: per-edge kr tables and capillary curves as CSV,
//! bound together by a JSON manifest.
//!
//! Edge CSV header is `s,kr_a,kr_b` with the per-edge phase order
//! water-oil: (kr1, kr2) vs s1; water-gas: (kr1, kr3) vs s1;
//! gas-oil: (kr3, kr2) vs s3. Capillary CSV header is `s,pc` (Pa).

use crate::error::{Error, Result};
use crate::twophase::{CapillaryCurves, EdgePair, TwoPhaseDataset};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub water_oil: PathBuf,
    pub water_gas: PathBuf,
    pub gas_oil: PathBuf,
    pub pc12: PathBuf,
    pub pc32: PathBuf,
}

fn read_edge_csv(path: &Path) -> Result<EdgePair> {
    let mut rdr = csv::Reader::from_path(path)?;
    {
        let hdr = rdr.headers()?;
        if hdr.len() != 3 {
            return Err(Error::InvalidData(format!(
                "{}: expected header s,kr_a,kr_b, got {:?}",
                path.display(),
                hdr
            )));
        }
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidData(format!("{}: bad numeric field in row {:?}", path.display(), rec)))
        };
        rows.push((parse(0)?, parse(1)?, parse(2)?));
    }
    EdgePair::from_table(rows)
}

fn read_pc_csv(path: &Path) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |i: usize| -> Result<f64> {
            rec.get(i)
                .and_then(|v| v.trim().parse::<f64>().ok())
                .ok_or_else(|| Error::InvalidData(format!("{}: bad numeric field in row {:?}", path.display(), rec)))
        };
        rows.push((parse(0)?, parse(1)?));
    }
    Ok(rows)
}

/// Load the five files bound by a manifest; relative paths resolve against
/// the manifest's directory.
pub fn load_dataset(manifest_path: &Path) -> Result<TwoPhaseDataset> {
    let text = fs::read_to_string(manifest_path)?;
    let manifest: DatasetManifest = serde_json::from_str(&text)?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let resolve = |p: &PathBuf| if p.is_absolute() { p.clone() } else { base.join(p) };
    let curves = CapillaryCurves::from_tables(
        read_pc_csv(&resolve(&manifest.pc12))?,
        read_pc_csv(&resolve(&manifest.pc32))?,
    )?;
    Ok(TwoPhaseDataset::new(
        read_edge_csv(&resolve(&manifest.water_oil))?,
        read_edge_csv(&resolve(&manifest.water_gas))?,
        read_edge_csv(&resolve(&manifest.gas_oil))?,
        curves,
    ))
}

fn write_edge_csv(path: &Path, pair: &EdgePair) -> Result<()> {
    let (x, a) = pair.first.samples();
    let (_, b) = pair.second.samples();
    let mut out = String::from("s,kr_a,kr_b\n");
    for i in 0..x.len() {
        out.push_str(&format!("{},{},{}\n", x[i], a[i], b[i]));
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_pc_csv(path: &Path, table: &crate::interp::MonotoneCubic) -> Result<()> {
    let (x, y) = table.samples();
    let mut out = String::from("s,pc\n");
    for i in 0..x.len() {
        out.push_str(&format!("{},{}\n", x[i], y[i]));
    }
    fs::write(path, out)?;
    Ok(())
}

/// Write a dataset's five files plus `manifest.json` into `dir`; returns the
/// manifest path.
pub fn write_dataset(dir: &Path, ds: &TwoPhaseDataset) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let manifest = DatasetManifest {
        water_oil: "water_oil.csv".into(),
        water_gas: "water_gas.csv".into(),
        gas_oil: "gas_oil.csv".into(),
        pc12: "pc12.csv".into(),
        pc32: "pc32.csv".into(),
    };
    write_edge_csv(&dir.join(&manifest.water_oil), &ds.water_oil)?;
    write_edge_csv(&dir.join(&manifest.water_gas), &ds.water_gas)?;
    write_edge_csv(&dir.join(&manifest.gas_oil), &ds.gas_oil)?;
    let (pc12, pc32) = ds.curves.tables();
    write_pc_csv(&dir.join(&manifest.pc12), pc12)?;
    write_pc_csv(&dir.join(&manifest.pc32), pc32)?;
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}
