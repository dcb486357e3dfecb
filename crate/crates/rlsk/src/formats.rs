//! On-disk formats.
//!
//! * Policy JSON, version 1:
//!   `{"version":1,"n":N,"state_space":"lo|loom|x","entries":[{"i":..,"j":..,"k":..}]}`
//!   with `{"i","k"}` entries for `lo` and `{"x","k"}` for `x`.
//! * Heatmap CSV for (LO, OM) tables: header `lo,0,1,..,n`, one row per LO
//!   value from `n` down to 0, blank cells for invalid states, `inf` for
//!   infinite runtimes. Level tables use `lo,value` rows instead. Policy
//!   heatmaps use the same layout with radii in the cells.
//! * String results as JSON lines `{"x","i","j","k","expected"}`.
//! * Trajectories as CSV `run_id,iteration,lo,om`.
//! * Sweep summaries as CSV `n,setting,policy,total,total_over_nln,total_over_n2`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rlsk_core::policy::PolicyEntry;
use rlsk_core::simulator::Trajectory;
use rlsk_core::state::{index, is_valid_state, mask_fitness};
use rlsk_core::{BitString, Policy, RuntimeTable, StateSpace};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::{CliError, Result};

pub const POLICY_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolicyFile {
    version: u32,
    n: usize,
    state_space: String,
    entries: Vec<EntryJson>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    i: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    j: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    x: Option<String>,
    k: usize,
}

fn format_value(v: f64) -> String {
    if v.is_infinite() {
        "inf".into()
    } else {
        format!("{v}")
    }
}

fn parse_value(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" => Ok(f64::INFINITY),
        t => t
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite() && *v >= 0.0)
            .ok_or_else(|| CliError::Format(format!("bad runtime cell '{t}'"))),
    }
}

pub fn write_policy_json<W: Write>(policy: &Policy, w: W) -> Result<()> {
    let entries = policy
        .entries()
        .into_iter()
        .map(|e| match e {
            PolicyEntry::Level { i, k } => EntryJson {
                i: Some(i),
                j: None,
                x: None,
                k,
            },
            PolicyEntry::LoOm { i, j, k } => EntryJson {
                i: Some(i),
                j: Some(j),
                x: None,
                k,
            },
            PolicyEntry::Bits { x, k } => EntryJson {
                i: None,
                j: None,
                x: Some(x.to_string()),
                k,
            },
        })
        .collect();
    let file = PolicyFile {
        version: POLICY_FORMAT_VERSION,
        n: policy.n(),
        state_space: policy.state_space().name().into(),
        entries,
    };
    serde_json::to_writer_pretty(w, &file)?;
    Ok(())
}

pub fn read_policy_json<R: Read>(r: R) -> Result<Policy> {
    let file: PolicyFile = serde_json::from_reader(r)?;
    if file.version != POLICY_FORMAT_VERSION {
        return Err(CliError::Format(format!(
            "policy file version {} is not supported (expected {POLICY_FORMAT_VERSION})",
            file.version
        )));
    }
    let space: StateSpace = file.state_space.parse()?;
    let entries = file
        .entries
        .into_iter()
        .map(|e| match (space, e.i, e.j, e.x) {
            (StateSpace::Level, Some(i), None, None) => Ok(PolicyEntry::Level { i, k: e.k }),
            (StateSpace::LoOm, Some(i), Some(j), None) => Ok(PolicyEntry::LoOm { i, j, k: e.k }),
            (StateSpace::Bits, None, None, Some(x)) => Ok(PolicyEntry::Bits {
                x: BitString::parse(&x)?,
                k: e.k,
            }),
            _ => Err(CliError::Format(format!(
                "entry does not match state space '{}'",
                space.name()
            ))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Policy::from_entries(file.n, space, &entries)?)
}

fn heatmap_header(n: usize) -> Vec<String> {
    std::iter::once("lo".to_string())
        .chain((0..=n).map(|j| j.to_string()))
        .collect()
}

/// Writes a runtime table: heatmap for (LO, OM), `lo,value` rows for
/// levels. String tables go through [`write_bits_jsonl`].
pub fn write_runtime_csv<W: Write>(table: &RuntimeTable, w: W) -> Result<()> {
    let n = table.n();
    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    match table.state_space() {
        StateSpace::Level => {
            out.write_record(["lo", "value"])?;
            for i in (0..=n).rev() {
                out.write_record([i.to_string(), format_value(table.level(i).value())])?;
            }
        }
        StateSpace::LoOm => {
            out.write_record(heatmap_header(n))?;
            for i in (0..=n).rev() {
                let mut row = vec![i.to_string()];
                for j in 0..=n {
                    row.push(if is_valid_state(n, i, j) {
                        format_value(table.values()[index::of(n, i, j)])
                    } else {
                        String::new()
                    });
                }
                out.write_record(&row)?;
            }
        }
        StateSpace::Bits => {
            return Err(CliError::Usage(
                "string tables are written as JSON lines".into(),
            ));
        }
    }
    out.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

fn read_rows<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    let mut rd = csv::ReaderBuilder::new().flexible(true).from_reader(r);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in rd.records() {
        rows.push(rec?.iter().map(str::to_string).collect());
    }
    Ok((header, rows))
}

/// Shape of a CSV table: `(n, level?)`, with every row checked.
fn table_shape(header: &[String], rows: &[Vec<String>]) -> Result<(usize, bool)> {
    let level = header.len() == 2 && header[1] == "value";
    let n = if level {
        rows.len()
            .checked_sub(1)
            .ok_or_else(|| CliError::Format("empty level table".into()))?
    } else {
        let n = header
            .len()
            .checked_sub(2)
            .ok_or_else(|| CliError::Format("bad heatmap header".into()))?;
        if header != heatmap_header(n).as_slice() {
            return Err(CliError::Format(
                "heatmap header must read lo,0,1,..,n".into(),
            ));
        }
        n
    };
    if n == 0 {
        return Err(CliError::Format("table for n = 0".into()));
    }
    if rows.len() != n + 1 {
        return Err(CliError::Format(format!(
            "expected {} rows, found {}",
            n + 1,
            rows.len()
        )));
    }
    for (r, row) in rows.iter().enumerate() {
        if row.first().map(String::as_str) != Some(&(n - r).to_string()) {
            return Err(CliError::Format(format!(
                "row {r} must hold LO value {}",
                n - r
            )));
        }
        if row.len() != header.len() {
            return Err(CliError::Format(format!("row {r} has {} cells", row.len())));
        }
    }
    Ok((n, level))
}

pub fn read_runtime_csv<R: Read>(r: R) -> Result<RuntimeTable> {
    let (header, rows) = read_rows(r)?;
    let (n, level) = table_shape(&header, &rows)?;
    if level {
        let mut values = vec![0.0; n + 1];
        for (r, row) in rows.iter().enumerate() {
            values[n - r] = parse_value(&row[1])?;
        }
        return Ok(RuntimeTable::new(n, StateSpace::Level, values)?);
    }
    let mut values = vec![f64::NAN; index::count(n)];
    for (r, row) in rows.iter().enumerate() {
        let i = n - r;
        for j in 0..=n {
            let cell = row[j + 1].trim();
            match (is_valid_state(n, i, j), cell.is_empty()) {
                (true, false) => values[index::of(n, i, j)] = parse_value(cell)?,
                (false, true) => {}
                (true, true) => {
                    return Err(CliError::Format(format!("missing value for ({i}, {j})")))
                }
                (false, false) => {
                    return Err(CliError::Format(format!(
                        "value for invalid state ({i}, {j})"
                    )))
                }
            }
        }
    }
    Ok(RuntimeTable::new(n, StateSpace::LoOm, values)?)
}

/// Policy heatmap; the optimum's cell stays blank.
pub fn write_policy_csv<W: Write>(policy: &Policy, w: W) -> Result<()> {
    let n = policy.n();
    let mut out = csv::WriterBuilder::new().flexible(true).from_writer(w);
    match policy.state_space() {
        StateSpace::Level => {
            out.write_record(["lo", "value"])?;
            out.write_record([n.to_string(), String::new()])?;
            for i in (0..n).rev() {
                let k = policy.radius_at(rlsk_core::StateLoOm::new_unchecked(i, i))?;
                out.write_record([i.to_string(), k.to_string()])?;
            }
        }
        StateSpace::LoOm => {
            out.write_record(heatmap_header(n))?;
            for i in (0..=n).rev() {
                let mut row = vec![i.to_string()];
                for j in 0..=n {
                    row.push(if is_valid_state(n, i, j) && i < n {
                        policy
                            .radius_at(rlsk_core::StateLoOm::new_unchecked(i, j))?
                            .to_string()
                    } else {
                        String::new()
                    });
                }
                out.write_record(&row)?;
            }
        }
        StateSpace::Bits => {
            return Err(CliError::Usage(
                "string policies are written as JSON".into(),
            ));
        }
    }
    out.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

pub fn read_policy_csv<R: Read>(r: R) -> Result<Policy> {
    let (header, rows) = read_rows(r)?;
    let (n, level) = table_shape(&header, &rows)?;
    let parse_k = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Format(format!("bad radius cell '{s}'")))
    };
    let mut entries = Vec::new();
    for (r, row) in rows.iter().enumerate().skip(1) {
        let i = n - r;
        if level {
            entries.push(PolicyEntry::Level {
                i,
                k: parse_k(&row[1])?,
            });
            continue;
        }
        for j in 0..=n {
            let cell = row[j + 1].trim();
            match (is_valid_state(n, i, j), cell.is_empty()) {
                (true, false) => entries.push(PolicyEntry::LoOm {
                    i,
                    j,
                    k: parse_k(cell)?,
                }),
                (false, true) | (true, true) => {}
                (false, false) => {
                    return Err(CliError::Format(format!(
                        "radius for invalid state ({i}, {j})"
                    )))
                }
            }
        }
    }
    if rows[0][1..].iter().any(|c| !c.trim().is_empty()) {
        return Err(CliError::Format("the optimum row must be blank".into()));
    }
    let space = if level {
        StateSpace::Level
    } else {
        StateSpace::LoOm
    };
    Ok(Policy::from_entries(n, space, &entries)?)
}

#[derive(Serialize)]
struct BitsLine {
    x: String,
    i: usize,
    j: usize,
    k: Value,
    expected: Value,
}

/// One JSON line per string, the optimum last with `k: null`.
pub fn write_bits_jsonl<W: Write>(table: &RuntimeTable, policy: &Policy, mut w: W) -> Result<()> {
    if table.state_space() != StateSpace::Bits {
        return Err(CliError::Usage("JSON lines hold string tables".into()));
    }
    let n = table.n();
    let io = |e| CliError::io("<jsonl>", e);
    for mask in 0..1u64 << n {
        let s = mask_fitness(n, mask);
        let k = if s.is_optimum(n) {
            Value::Null
        } else {
            policy.radius_for_mask(mask)?.into()
        };
        let v = table.bits(mask).value();
        let expected = if v.is_finite() {
            Value::from(v)
        } else {
            Value::from("inf")
        };
        let line = BitsLine {
            x: BitString::from_mask(n, mask).to_string(),
            i: s.i,
            j: s.j,
            k,
            expected,
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n").map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(())
}

/// Reads string results back into a runtime table and a string policy.
pub fn read_bits_jsonl<R: Read>(r: R) -> Result<(RuntimeTable, Policy)> {
    let text = {
        let mut s = String::new();
        BufReader::new(r)
            .read_to_string(&mut s)
            .map_err(|e| CliError::io("<jsonl>", e))?;
        s
    };
    let mut rows = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let v: Value = serde_json::from_str(line)?;
        let x = BitString::parse(
            v["x"]
                .as_str()
                .ok_or_else(|| CliError::Format("missing x".into()))?,
        )?;
        let expected = match &v["expected"] {
            Value::String(s) if s == "inf" => f64::INFINITY,
            e => e
                .as_f64()
                .ok_or_else(|| CliError::Format("bad expected".into()))?,
        };
        let k = v["k"].as_u64().map(|k| k as usize);
        rows.push((x, expected, k));
    }
    let n = rows
        .first()
        .map(|r| r.0.len())
        .ok_or_else(|| CliError::Format("no lines".into()))?;
    if n > rlsk_core::solvers::HARD_BITS_CAP || rows.len() != 1 << n {
        return Err(CliError::Format(format!(
            "expected {} lines for n = {n}",
            1u64 << n.min(63)
        )));
    }
    let mut values = vec![f64::NAN; 1 << n];
    let mut entries = Vec::new();
    for (x, e, k) in rows {
        if x.len() != n {
            return Err(CliError::Format("mixed string lengths".into()));
        }
        let mask = x.to_mask().expect("within cap") as usize;
        values[mask] = e;
        if let Some(k) = k {
            entries.push(PolicyEntry::Bits { x, k });
        }
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(CliError::Format("duplicate strings".into()));
    }
    Ok((
        RuntimeTable::new(n, StateSpace::Bits, values)?,
        Policy::from_entries(n, StateSpace::Bits, &entries)?,
    ))
}

pub fn write_trajectories_csv<W: Write>(runs: &[(u64, Trajectory)], w: W) -> Result<()> {
    if runs.is_empty() {
        return Err(CliError::Usage("no trajectories to write".into()));
    }
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["run_id", "iteration", "lo", "om"])?;
    for (run, t) in runs {
        for p in &t.points {
            out.write_record([
                run.to_string(),
                p.iteration.to_string(),
                p.i.to_string(),
                p.j.to_string(),
            ])?;
        }
    }
    out.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub n: usize,
    pub setting: String,
    pub policy: String,
    #[serde(with = "ext_real")]
    pub total: f64,
    #[serde(with = "ext_real")]
    pub total_over_nln: f64,
    #[serde(with = "ext_real")]
    pub total_over_n2: f64,
}

impl SweepRow {
    pub fn new(n: usize, setting: String, policy: String, total: f64) -> Self {
        let nf = n as f64;
        SweepRow {
            n,
            setting,
            policy,
            total,
            total_over_nln: total / (nf * nf.ln()),
            total_over_n2: total / (nf * nf),
        }
    }
}

mod ext_real {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format_value(*v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        let s = String::deserialize(d)?;
        match s.as_str() {
            "inf" => Ok(f64::INFINITY),
            "NaN" => Ok(f64::NAN),
            t => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    if rows.is_empty() {
        out.write_record([
            "n",
            "setting",
            "policy",
            "total",
            "total_over_nln",
            "total_over_n2",
        ])?;
    }
    out.flush().map_err(|e| CliError::io("<csv>", e))?;
    Ok(())
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRow>> {
    let mut rd = csv::Reader::from_reader(r);
    Ok(rd.deserialize().collect::<std::result::Result<_, _>>()?)
}

pub fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::io(path, e))
}

/// Policy from a `.json` or `.csv` file.
pub fn read_policy_file(path: &Path) -> Result<Policy> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => read_policy_csv(open(path)?),
        _ => read_policy_json(open(path)?),
    }
}
