use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use ofdma_core::Error as CoreError;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const EXIT_OK: u8 = 0;
pub const EXIT_OTHER: u8 = 1;
pub const EXIT_INFEASIBLE: u8 = 2;
pub const EXIT_VALIDATION: u8 = 3;
pub const EXIT_BUDGET: u8 = 4;
pub const EXIT_DISAGREEMENT: u8 = 5;

/// Bad input that the user can fix: unreadable JSON, a method that does not
/// apply to the instance, conflicting flags.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

pub fn exit_code_for(e: &anyhow::Error) -> u8 {
    if e.downcast_ref::<InputError>().is_some() || e.downcast_ref::<serde_json::Error>().is_some() {
        return EXIT_VALIDATION;
    }
    match e.downcast_ref::<CoreError>() {
        Some(CoreError::EnumerationBudgetExceeded { .. } | CoreError::SizeBoundExceeded { .. }) => EXIT_BUDGET,
        Some(
            CoreError::InvalidInstance(_)
            | CoreError::MissingField(_)
            | CoreError::DimensionMismatch { .. }
            | CoreError::InvalidChannel(_)
            | CoreError::InvalidWeights(_)
            | CoreError::InvalidThreeDm(_)
            | CoreError::InvalidRatio { .. }
            | CoreError::Shape(_)
            | CoreError::Unsupported(_),
        ) => EXIT_VALIDATION,
        _ => EXIT_OTHER,
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow::Error::new(e).context(format!("parsing {}", path.display())))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, to_json(value)?).with_context(|| format!("writing {}", path.display()))
}

/// Nonnegative integer, also written in scientific notation (`1e8`).
pub fn parse_count(s: &str) -> std::result::Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 => Ok(v as u64),
        _ => Err(format!("expected a nonnegative integer, got {s:?}")),
    }
}

/// `NUM/DEN` or a bare integer.
pub fn parse_ratio(s: &str) -> std::result::Result<(u64, u64), String> {
    let (num, den) = s.split_once('/').unwrap_or((s, "1"));
    let parse = |x: &str| x.trim().parse::<u64>().map_err(|_| format!("expected NUM/DEN, got {s:?}"));
    let (num, den) = (parse(num)?, parse(den)?);
    if den == 0 {
        return Err("denominator must be positive".into());
    }
    Ok((num, den))
}

/// `LO:HI` with `0 < LO <= HI`.
pub fn parse_range(s: &str) -> std::result::Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected LO:HI, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|_| format!("expected LO:HI, got {s:?}"));
    let (lo, hi) = (parse(lo)?, parse(hi)?);
    if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
        return Err(format!("range must satisfy 0 < LO <= HI, got {s:?}"));
    }
    Ok((lo, hi))
}
