//! Deterministic report emission: JSON with sorted keys, plain CSV, and the
//! config hash stamped into every file so certificates are self-describing.

use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use htlab_core::frequency::DensityReport;
use htlab_core::universal::{StageRecord, UniversalEntry};

use crate::CmdError;

pub fn config_hash(raw: &[u8]) -> String {
    let digest = Sha256::digest(raw);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<PathBuf, CmdError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CmdError::io(format!("serialize {name}: {e}")))?;
    text.push('\n');
    std::fs::write(&path, text)
        .map_err(|e| CmdError::io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn write_csv(dir: &Path, name: &str, header: &str, rows: &[String]) -> Result<PathBuf, CmdError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::io(format!("cannot create {}: {e}", dir.display())))?;
    let path = dir.join(name);
    let mut text = String::with_capacity(rows.len() * 24 + header.len() + 1);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(row);
        text.push('\n');
    }
    std::fs::write(&path, text)
        .map_err(|e| CmdError::io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}

pub fn stage_json(r: &StageRecord) -> Value {
    json!({
        "label": r.label,
        "front_before": r.front_before,
        "level": r.level,
        "slots": r.slots,
        "free_mass": r.free_mass.to_string(),
        "achieved": r.achieved.to_string(),
        "tolerance": r.tolerance.to_string(),
    })
}

pub fn universal_entry_json(e: &UniversalEntry) -> Value {
    json!({
        "j": e.target_index,
        "target_level": e.target_level,
        "hit_level": e.hit_level,
        "achieved": e.record.achieved.to_string(),
        "bound": e.record.tolerance.to_string(),
        "free_mass": e.record.free_mass.to_string(),
        "slots": e.record.slots,
    })
}

pub fn density_json(d: &DensityReport) -> Value {
    json!({
        "description": d.description,
        "window": d.window,
        "hit_count": d.hit_count,
        "lower_proxy": d.lower_proxy,
        "upper_proxy": d.upper_proxy,
    })
}
