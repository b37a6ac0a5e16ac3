//! On-disk formats: path files (TSV and binary), run manifests with
//! checksums, and JSONL report records. All writers are deterministic:
//! identical inputs produce byte-identical files.

use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::conditions::ConditionReport;
use crate::error::{Error, Result};
use crate::paths::{CadlagPath, PathJump};

/// Row flags in the TSV path format.
const FLAG_GRID: u8 = 0;
const FLAG_JUMP_LEFT: u8 = 1;
const FLAG_JUMP_RIGHT: u8 = 2;

fn fmt_f64(x: f64) -> String {
    // Rust's shortest round-trip formatting; parses back bit-exactly.
    format!("{x}")
}

/// TSV layout: one row per grid sample (flag 0) followed by two rows per
/// jump (flag 1 = left limit, flag 2 = right value), each row being
/// `time <TAB> coord_1 .. coord_d <TAB> flag`.
pub fn write_path_tsv(path: &CadlagPath, w: &mut dyn Write) -> Result<()> {
    let d = path.dim();
    let mut row = |t: f64, v: &DVector<f64>, flag: u8| -> Result<()> {
        let mut line = fmt_f64(t);
        for i in 0..d {
            line.push('\t');
            line.push_str(&fmt_f64(v[i]));
        }
        line.push('\t');
        line.push_str(&flag.to_string());
        line.push('\n');
        w.write_all(line.as_bytes())?;
        Ok(())
    };
    for (i, t) in path.grid.iter().enumerate() {
        row(*t, &path.values[i], FLAG_GRID)?;
    }
    for j in &path.jumps {
        row(j.time, &j.left, FLAG_JUMP_LEFT)?;
        row(j.time, &j.right, FLAG_JUMP_RIGHT)?;
    }
    Ok(())
}

pub fn read_path_tsv(r: &mut dyn BufRead) -> Result<CadlagPath> {
    let mut grid = Vec::new();
    let mut values = Vec::new();
    let mut jumps: Vec<PathJump> = Vec::new();
    let mut pending_left: Option<(f64, DVector<f64>)> = None;
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() < 3 {
            return Err(Error::Config(format!("path tsv line {}: too few fields", lineno + 1)));
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Config(format!("path tsv line {}: bad number {s:?}", lineno + 1)))
        };
        let t = parse(fields[0])?;
        let coords: Vec<f64> = fields[1..fields.len() - 1]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<_>>()?;
        let v = DVector::from_vec(coords);
        match fields[fields.len() - 1] {
            "0" => {
                grid.push(t);
                values.push(v);
            }
            "1" => {
                if pending_left.is_some() {
                    return Err(Error::Config(format!(
                        "path tsv line {}: jump left row without matching right row",
                        lineno + 1
                    )));
                }
                pending_left = Some((t, v));
            }
            "2" => {
                let (tl, left) = pending_left.take().ok_or_else(|| {
                    Error::Config(format!(
                        "path tsv line {}: jump right row without left row",
                        lineno + 1
                    ))
                })?;
                if tl != t {
                    return Err(Error::Config(format!(
                        "path tsv line {}: jump rows disagree on time",
                        lineno + 1
                    )));
                }
                jumps.push(PathJump {
                    time: t,
                    left,
                    right: v,
                });
            }
            other => {
                return Err(Error::Config(format!(
                    "path tsv line {}: unknown flag {other:?}",
                    lineno + 1
                )))
            }
        }
    }
    if pending_left.is_some() {
        return Err(Error::Config("path tsv: trailing unmatched jump row".into()));
    }
    let path = CadlagPath { grid, values, jumps };
    path.validate()?;
    Ok(path)
}

/// Binary layout (all little-endian): u64 dim, u64 grid_len, u64 jump_count;
/// then grid times (f64 × grid_len); grid values row-major (f64 × grid_len·d);
/// then per jump: time, left (d), right (d).
pub fn write_path_bin(path: &CadlagPath, w: &mut dyn Write) -> Result<()> {
    let d = path.dim();
    w.write_all(&(d as u64).to_le_bytes())?;
    w.write_all(&(path.grid.len() as u64).to_le_bytes())?;
    w.write_all(&(path.jumps.len() as u64).to_le_bytes())?;
    for t in &path.grid {
        w.write_all(&t.to_le_bytes())?;
    }
    for v in &path.values {
        for i in 0..d {
            w.write_all(&v[i].to_le_bytes())?;
        }
    }
    for j in &path.jumps {
        w.write_all(&j.time.to_le_bytes())?;
        for i in 0..d {
            w.write_all(&j.left[i].to_le_bytes())?;
        }
        for i in 0..d {
            w.write_all(&j.right[i].to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_path_bin(r: &mut dyn Read) -> Result<CadlagPath> {
    let mut u64buf = [0u8; 8];
    let mut read_u64 = |r: &mut dyn Read| -> Result<u64> {
        r.read_exact(&mut u64buf)?;
        Ok(u64::from_le_bytes(u64buf))
    };
    let d = read_u64(r)? as usize;
    let grid_len = read_u64(r)? as usize;
    let jump_count = read_u64(r)? as usize;
    if d == 0 || d > 1 << 16 || grid_len > 1 << 32 || jump_count > 1 << 32 {
        return Err(Error::Config("path bin: implausible header".into()));
    }
    let mut f64buf = [0u8; 8];
    let mut read_f64 = |r: &mut dyn Read| -> Result<f64> {
        r.read_exact(&mut f64buf)?;
        Ok(f64::from_le_bytes(f64buf))
    };
    let read_vec = |r: &mut dyn Read| -> Result<DVector<f64>> {
        let mut v = DVector::zeros(d);
        for i in 0..d {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            v[i] = f64::from_le_bytes(b);
        }
        Ok(v)
    };
    let mut grid = Vec::with_capacity(grid_len);
    for _ in 0..grid_len {
        grid.push(read_f64(r)?);
    }
    let mut values = Vec::with_capacity(grid_len);
    for _ in 0..grid_len {
        values.push(read_vec(r)?);
    }
    let mut jumps = Vec::with_capacity(jump_count);
    for _ in 0..jump_count {
        let time = read_f64(r)?;
        let left = read_vec(r)?;
        let right = read_vec(r)?;
        jumps.push(PathJump { time, left, right });
    }
    let path = CadlagPath { grid, values, jumps };
    path.validate()?;
    Ok(path)
}

pub fn write_path_file(path: &CadlagPath, file: &Path, binary: bool) -> Result<()> {
    let f = std::fs::File::create(file)?;
    let mut w = BufWriter::new(f);
    if binary {
        write_path_bin(path, &mut w)?;
    } else {
        write_path_tsv(path, &mut w)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_path_file(file: &Path) -> Result<CadlagPath> {
    let bytes = std::fs::read(file)?;
    if file.extension().is_some_and(|e| e == "bin") {
        read_path_bin(&mut &bytes[..])
    } else {
        read_path_tsv(&mut &bytes[..])
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    hex::encode(h.finalize())
}

pub fn sha256_file(file: &Path) -> Result<String> {
    Ok(sha256_hex(&std::fs::read(file)?))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestFile {
    pub name: String,
    pub sha256: String,
}

/// Run manifest written next to the path files. Contains no timestamps so
/// repeated identical runs produce byte-identical manifests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub config_sha256: String,
    pub seed: u64,
    pub n_paths: usize,
    pub eps: f64,
    pub s_max: f64,
    pub format: String,
    pub forced: bool,
    pub warnings: Vec<String>,
    pub files: Vec<ManifestFile>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        text.push('\n');
        std::fs::write(dir.join("manifest.json"), text)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(dir.join("manifest.json"))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("manifest.json: {e}")))
    }
}

pub fn path_file_name(index: usize, binary: bool) -> String {
    format!(
        "path_{index:06}.{}",
        if binary { "bin" } else { "tsv" }
    )
}

/// One line of conditions.jsonl: a condition report plus wall time.
#[derive(Debug, Clone, Serialize)]
pub struct TimedReport {
    #[serde(flatten)]
    pub report: ConditionReport,
    pub wall_time_s: f64,
}

pub fn write_jsonl<T: Serialize>(records: &[T], file: &Path) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(
            &serde_json::to_string(r).map_err(|e| Error::Config(format!("jsonl: {e}")))?,
        );
        out.push('\n');
    }
    std::fs::write(file, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_path(rng: &mut impl Rng) -> CadlagPath {
        let d = rng.gen_range(1..=3);
        let m = rng.gen_range(2..=20);
        let grid: Vec<f64> = (0..m).map(|i| i as f64 / (m - 1) as f64).collect();
        let values = (0..m)
            .map(|_| DVector::from_fn(d, |_, _| rng.gen_range(-10.0..10.0)))
            .collect();
        let mut jumps: Vec<PathJump> = (0..rng.gen_range(0..5))
            .map(|_| {
                let left = DVector::from_fn(d, |_, _| rng.gen_range(-10.0..10.0));
                let right = &left + DVector::from_fn(d, |_, _| rng.gen_range(-1.0..1.0));
                PathJump {
                    time: rng.gen_range(0.01..0.99),
                    left,
                    right,
                }
            })
            .collect();
        jumps.sort_by(|a, b| a.time.total_cmp(&b.time));
        jumps.dedup_by(|a, b| a.time == b.time);
        CadlagPath { grid, values, jumps }
    }

    #[test]
    fn tsv_round_trip_is_exact() {
        let mut rng = crate::rng::replica_rng(11, 0);
        for _ in 0..50 {
            let p = random_path(&mut rng);
            let mut buf = Vec::new();
            write_path_tsv(&p, &mut buf).unwrap();
            let q = read_path_tsv(&mut &buf[..]).unwrap();
            assert_eq!(p.grid, q.grid);
            assert_eq!(p.values, q.values);
            assert_eq!(p.jumps.len(), q.jumps.len());
            for (a, b) in p.jumps.iter().zip(&q.jumps) {
                assert_eq!(a.time, b.time);
                assert_eq!(a.left, b.left);
                assert_eq!(a.right, b.right);
            }
        }
    }

    #[test]
    fn bin_round_trip_is_exact() {
        let mut rng = crate::rng::replica_rng(12, 0);
        for _ in 0..50 {
            let p = random_path(&mut rng);
            let mut buf = Vec::new();
            write_path_bin(&p, &mut buf).unwrap();
            let q = read_path_bin(&mut &buf[..]).unwrap();
            assert_eq!(p.grid, q.grid);
            assert_eq!(p.values, q.values);
            assert_eq!(p.jumps.len(), q.jumps.len());
        }
    }

    #[test]
    fn tsv_row_count_matches_grid_plus_jumps() {
        let mut rng = crate::rng::replica_rng(13, 0);
        let p = random_path(&mut rng);
        let mut buf = Vec::new();
        write_path_tsv(&p, &mut buf).unwrap();
        let rows = buf.iter().filter(|&&b| b == b'\n').count();
        assert_eq!(rows, p.grid.len() + 2 * p.jumps.len());
    }

    #[test]
    fn manifest_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = Manifest {
            config_sha256: sha256_hex(b"cfg"),
            seed: 42,
            n_paths: 3,
            eps: 1.0,
            s_max: 40.0,
            format: "tsv".into(),
            forced: false,
            warnings: vec![],
            files: vec![ManifestFile {
                name: "path_000000.tsv".into(),
                sha256: sha256_hex(b"x"),
            }],
        };
        m.write(dir.path()).unwrap();
        let r = Manifest::read(dir.path()).unwrap();
        assert_eq!(r.seed, 42);
        assert_eq!(r.files.len(), 1);
    }

    #[test]
    fn sha256_known_answer() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn truncated_bin_is_an_error() {
        let mut rng = crate::rng::replica_rng(14, 0);
        let p = random_path(&mut rng);
        let mut buf = Vec::new();
        write_path_bin(&p, &mut buf).unwrap();
        buf.truncate(buf.len() - 4);
        assert!(read_path_bin(&mut &buf[..]).is_err());
    }
}
