//! Phase-diagram sweeps over one or two invariant axes.

use std::fs::{self, OpenOptions};
use std::io::Write;

use rayon::prelude::*;
use serde_json::json;

use super::config::{SweepConfig, SweepGrid};
use super::exec::Outcome;
use crate::error::{Error, Result};
use crate::gaussian::{classify_asymptotics, VerdictKind};
use crate::io::num;
use crate::params::Invariants;

pub const HEADER: &str = "i0,i1,i2,i3,i4,i5,kind,sigma_limit,s_limit,note";

/// Rows are appended in blocks of this many cells so an interrupted sweep
/// loses at most one block.
const BLOCK: usize = 64;

/// Grid cells in row-major order over the axes as listed.
pub fn cells(grid: &SweepGrid) -> Result<Vec<Invariants>> {
    if grid.axes.is_empty() || grid.axes.len() > 2 {
        return Err(Error::InvalidParams(format!(
            "sweep needs one or two axes, got {}",
            grid.axes.len()
        )));
    }
    let mut out = vec![grid.base.as_array()];
    for axis in &grid.axes {
        let j = axis
            .index()
            .ok_or_else(|| Error::InvalidParams(format!("unknown axis '{}', expected i0..i5", axis.name)))?;
        if !(axis.min.is_finite() && axis.max.is_finite()) {
            return Err(Error::InvalidParams(format!("axis '{}' has non-finite bounds", axis.name)));
        }
        let values = axis.values();
        out = out
            .iter()
            .flat_map(|cell| {
                values.iter().map(move |v| {
                    let mut c = *cell;
                    c[j] = *v;
                    c
                })
            })
            .collect();
    }
    Ok(out.into_iter().map(Invariants::new).collect())
}

fn row(inv: &Invariants, grid: &SweepGrid, horizon: f64, dt: f64) -> String {
    let prefix = inv.as_array().map(num).join(",");
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    match classify_asymptotics(&grid.initial, inv, grid.kappa, horizon, dt) {
        Ok(v) => format!("{prefix},{},{},{},", v.kind.as_str(), opt(v.sigma_limit), opt(v.s_limit)),
        Err(e) => {
            let note = e.to_string().replace([',', '\n', '\r'], ";");
            format!("{prefix},{},,,{note}", VerdictKind::Undetermined.as_str())
        }
    }
}

/// Number of complete rows already present; truncates a trailing partial row.
fn resume(path: &std::path::Path, expected: &[Invariants]) -> Result<usize> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
            fs::write(path, format!("{HEADER}\n"))?;
            return Ok(0);
        }
        Err(e) => return Err(e.into()),
    };
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut lines = complete.lines();
    if lines.next() != Some(HEADER) {
        return Err(Error::InvalidParams(format!(
            "{} exists but is not a sweep table; remove it or choose another output",
            path.display()
        )));
    }
    let mut done = 0;
    for (line, inv) in lines.zip(expected) {
        let prefix = inv.as_array().map(num).join(",");
        if !line.starts_with(&format!("{prefix},")) {
            return Err(Error::InvalidParams(format!(
                "{} row {} does not match this sweep grid",
                path.display(),
                done + 2
            )));
        }
        done += 1;
    }
    if complete.len() != text.len() {
        fs::write(path, complete)?;
    }
    Ok(done)
}

pub fn run(c: &SweepConfig) -> Result<Outcome> {
    let all = cells(&c.grid)?;
    if let Some(dir) = c.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let skipped = resume(&c.out, &all)?;
    if skipped > all.len() {
        return Err(Error::InvalidParams(format!("{} has more rows than the grid", c.out.display())));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(c.jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParams(format!("cannot start worker pool: {e}")))?;
    let mut file = OpenOptions::new().append(true).open(&c.out)?;
    let mut counts = std::collections::BTreeMap::<String, usize>::new();
    for block in all[skipped..].chunks(BLOCK) {
        let rows: Vec<String> = pool.install(|| {
            block
                .par_iter()
                .map(|inv| row(inv, &c.grid, c.horizon, c.dt))
                .collect()
        });
        let mut text = String::new();
        for r in &rows {
            let kind = r.split(',').nth(6).unwrap_or_default().to_string();
            *counts.entry(kind).or_default() += 1;
            text.push_str(r);
            text.push('\n');
        }
        file.write_all(text.as_bytes())?;
    }
    log::info!("sweep: {} cells, {} resumed", all.len(), skipped);
    let mut summary = format!("cells = {}\nresumed = {skipped}", all.len());
    for (k, n) in &counts {
        summary.push_str(&format!("\n{k} = {n}"));
    }
    Outcome::new_value(
        json!({ "cells": all.len(), "resumed": skipped, "computed": counts }),
        summary,
    )
}
