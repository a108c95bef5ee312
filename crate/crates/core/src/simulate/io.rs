//! Ensemble files.
//!
//! CSV: `# key: value` metadata lines, then the header
//! `n,rep,extinct,x_1..x_q` and one row per (checkpoint, trajectory), grouped
//! by checkpoint. The binary form carries the same columns.

use std::io::{BufRead, Read, Write};

use super::{Ensemble, SimError};
use crate::report::fmt_f64;

pub const ENSEMBLE_MAGIC: &[u8; 8] = b"PURNENS1";

/// Metadata carried at the top of an ensemble CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMeta {
    pub format_version: String,
    pub spec_name: String,
    pub master_seed: u64,
    pub reps: usize,
    /// Free-form JSON, typically the resolved run configuration.
    pub config: Option<String>,
}

pub fn write_ensemble_csv<W: Write>(
    ens: &Ensemble,
    config_json: Option<&str>,
    mut out: W,
) -> Result<(), SimError> {
    writeln!(out, "# format: {}", crate::report::FORMAT_VERSION)?;
    writeln!(out, "# spec: {}", ens.spec_name)?;
    writeln!(out, "# seed: {}", ens.master_seed)?;
    writeln!(out, "# reps: {}", ens.reps)?;
    if let Some(cfg) = config_json {
        writeln!(out, "# config: {}", cfg.replace('\n', " "))?;
    }
    let mut header = String::from("n,rep,extinct");
    for i in 1..=ens.q {
        header.push_str(&format!(",x_{i}"));
    }
    writeln!(out, "{header}")?;
    let mut line = String::new();
    for (cp, &n) in ens.checkpoints.iter().enumerate() {
        for rep in 0..ens.reps {
            line.clear();
            line.push_str(&format!("{n},{rep},{}", u8::from(ens.is_extinct(rep, cp))));
            for x in ens.state(rep, cp) {
                line.push(',');
                line.push_str(&fmt_f64(*x));
            }
            writeln!(out, "{line}")?;
        }
    }
    out.flush()?;
    Ok(())
}

fn bad(msg: impl Into<String>) -> SimError {
    SimError::InvalidInput(msg.into())
}

pub fn read_ensemble_csv<R: BufRead>(input: R) -> Result<(Ensemble, EnsembleMeta), SimError> {
    let mut meta = EnsembleMeta {
        format_version: String::new(),
        spec_name: String::new(),
        master_seed: 0,
        reps: 0,
        config: None,
    };
    let mut q = None;
    let mut rows: Vec<(u64, usize, bool, Vec<f64>)> = Vec::new();
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("# ") {
            let (key, value) = rest.split_once(": ").unwrap_or((rest, ""));
            match key {
                "format" => meta.format_version = value.to_string(),
                "spec" => meta.spec_name = value.to_string(),
                "seed" => meta.master_seed = value.parse().map_err(|_| bad("bad seed line"))?,
                "reps" => meta.reps = value.parse().map_err(|_| bad("bad reps line"))?,
                "config" => meta.config = Some(value.to_string()),
                _ => {}
            }
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if q.is_none() {
            if fields.len() < 4 || fields[..3] != ["n", "rep", "extinct"] {
                return Err(bad(format!("line {}: expected header n,rep,extinct,x_1..", lineno + 1)));
            }
            q = Some(fields.len() - 3);
            continue;
        }
        let q = q.unwrap_or(0);
        if fields.len() != q + 3 {
            return Err(bad(format!("line {}: expected {} fields", lineno + 1, q + 3)));
        }
        let parse_err = |what: &str| bad(format!("line {}: bad {what}", lineno + 1));
        let n: u64 = fields[0].parse().map_err(|_| parse_err("n"))?;
        let rep: usize = fields[1].parse().map_err(|_| parse_err("rep"))?;
        let extinct = match fields[2] {
            "0" => false,
            "1" => true,
            _ => return Err(parse_err("extinct flag")),
        };
        let x = fields[3..]
            .iter()
            .map(|f| f.parse::<f64>().map_err(|_| parse_err("composition")))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((n, rep, extinct, x));
    }
    let q = q.ok_or_else(|| bad("missing header"))?;
    let mut checkpoints: Vec<u64> = rows.iter().map(|r| r.0).collect();
    checkpoints.dedup();
    let reps = if checkpoints.is_empty() { 0 } else { rows.len() / checkpoints.len() };
    if reps == 0 || reps * checkpoints.len() != rows.len() {
        return Err(bad("rows do not form a full checkpoint by trajectory grid"));
    }
    if meta.reps != 0 && meta.reps != reps {
        return Err(bad(format!("header says {} reps, found {reps}", meta.reps)));
    }
    let c = checkpoints.len();
    let mut x = vec![0.0; reps * c * q];
    let mut extinct = vec![false; reps * c];
    for (k, (n, rep, ext, xs)) in rows.into_iter().enumerate() {
        let cp = k / reps;
        if n != checkpoints[cp] || rep != k % reps {
            return Err(bad(format!("row {k} is out of order")));
        }
        extinct[rep * c + cp] = ext;
        x[(rep * c + cp) * q..(rep * c + cp + 1) * q].copy_from_slice(&xs);
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(bad("checkpoints must increase"));
    }
    meta.reps = reps;
    let ens = Ensemble {
        spec_name: meta.spec_name.clone(),
        q,
        checkpoints,
        reps,
        master_seed: meta.master_seed,
        x,
        extinct,
    };
    Ok((ens, meta))
}

fn put_u64<W: Write>(out: &mut W, v: u64) -> std::io::Result<()> {
    out.write_all(&v.to_le_bytes())
}

fn get_u64<R: Read>(input: &mut R) -> std::io::Result<u64> {
    let mut b = [0u8; 8];
    input.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

/// Little-endian binary with the CSV's columns, grouped by checkpoint.
pub fn write_ensemble_binary<W: Write>(ens: &Ensemble, mut out: W) -> Result<(), SimError> {
    out.write_all(ENSEMBLE_MAGIC)?;
    let name = ens.spec_name.as_bytes();
    put_u64(&mut out, name.len() as u64)?;
    out.write_all(name)?;
    put_u64(&mut out, ens.q as u64)?;
    put_u64(&mut out, ens.checkpoints.len() as u64)?;
    put_u64(&mut out, ens.reps as u64)?;
    put_u64(&mut out, ens.master_seed)?;
    for &n in &ens.checkpoints {
        put_u64(&mut out, n)?;
    }
    for cp in 0..ens.checkpoints.len() {
        for rep in 0..ens.reps {
            out.write_all(&[u8::from(ens.is_extinct(rep, cp))])?;
            for x in ens.state(rep, cp) {
                out.write_all(&x.to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_ensemble_binary<R: Read>(mut input: R) -> Result<Ensemble, SimError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != ENSEMBLE_MAGIC {
        return Err(bad("not an ensemble binary"));
    }
    let len = get_u64(&mut input)? as usize;
    let mut name = vec![0u8; len];
    input.read_exact(&mut name)?;
    let spec_name = String::from_utf8(name).map_err(|_| bad("spec name is not UTF-8"))?;
    let q = get_u64(&mut input)? as usize;
    let c = get_u64(&mut input)? as usize;
    let reps = get_u64(&mut input)? as usize;
    let master_seed = get_u64(&mut input)?;
    let checkpoints = (0..c).map(|_| get_u64(&mut input)).collect::<Result<Vec<_>, _>>()?;
    let mut x = vec![0.0; reps * c * q];
    let mut extinct = vec![false; reps * c];
    let mut flag = [0u8; 1];
    let mut word = [0u8; 8];
    for cp in 0..c {
        for rep in 0..reps {
            input.read_exact(&mut flag)?;
            extinct[rep * c + cp] = flag[0] != 0;
            for i in 0..q {
                input.read_exact(&mut word)?;
                x[(rep * c + cp) * q + i] = f64::from_le_bytes(word);
            }
        }
    }
    Ok(Ensemble {
        spec_name,
        q,
        checkpoints,
        reps,
        master_seed,
        x,
        extinct,
    })
}
