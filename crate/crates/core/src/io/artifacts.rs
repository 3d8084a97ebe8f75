use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::evaluation::LogLikMatrix;
use crate::model::ObsLabel;
use crate::samplers::{ChainOutput, IterStats};

use super::{fmt_f64, parse_f64, read_string, sha256_hex, write_atomic, IoError, RunConfig};

const STAT_COLUMNS: [&str; 6] = ["accept_stat", "divergent", "energy", "tree_depth", "n_leapfrog", "step_size"];

fn push_stats(s: &mut String, st: &IterStats) {
    let _ = write!(
        s,
        ",{},{},{},{},{},{}",
        fmt_f64(st.accept_stat),
        u8::from(st.divergent),
        fmt_f64(st.energy),
        st.tree_depth,
        st.n_leapfrog,
        fmt_f64(st.step_size)
    );
}

/// Post-warmup draws on the constrained scale, one row per draw with the
/// sampler statistics of that iteration.
pub fn draws_csv(names: &[String], chains: &[ChainOutput]) -> String {
    let mut s = String::from("chain,draw");
    for n in names.iter().map(String::as_str).chain(STAT_COLUMNS) {
        s.push(',');
        s.push_str(n);
    }
    s.push('\n');
    for (c, ch) in chains.iter().enumerate() {
        for (i, (row, st)) in ch.draws_constrained.iter().zip(&ch.stats).enumerate() {
            let _ = write!(s, "{c},{i}");
            for v in row {
                s.push(',');
                s.push_str(&fmt_f64(*v));
            }
            push_stats(&mut s, st);
            s.push('\n');
        }
    }
    s
}

/// Sampler statistics of every iteration, warmup included.
pub fn sampler_stats_csv(chains: &[ChainOutput]) -> String {
    let mut s = format!("chain,iter,warmup,{}\n", STAT_COLUMNS.join(","));
    for (c, ch) in chains.iter().enumerate() {
        let all = ch.warmup_stats.iter().map(|st| (1, st)).chain(ch.stats.iter().map(|st| (0, st)));
        for (i, (w, st)) in all.enumerate() {
            let _ = write!(s, "{c},{i},{w}");
            push_stats(&mut s, st);
            s.push('\n');
        }
    }
    s
}

pub fn write_draws_csv(path: &Path, names: &[String], chains: &[ChainOutput]) -> Result<(), IoError> {
    write_atomic(path, draws_csv(names, chains).as_bytes())
}

/// Parameter columns of a draws file.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawsTable {
    pub names: Vec<String>,
    pub chain: Vec<usize>,
    pub values: Vec<Vec<f64>>,
}

impl DrawsTable {
    pub fn n_chains(&self) -> usize {
        self.chain.iter().max().map_or(0, |c| c + 1)
    }
}

pub fn parse_draws_csv(text: &str, path: &Path) -> Result<DrawsTable, IoError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i as u64 + 1, l));
    let (_, header) = lines.next().ok_or_else(|| IoError::parse(path, 1, "empty draws file"))?;
    let cols: Vec<&str> = header.split(',').collect();
    let n_stats = STAT_COLUMNS.len();
    if cols.len() < 2 + n_stats || cols[..2] != ["chain", "draw"] || cols[cols.len() - n_stats..] != STAT_COLUMNS {
        return Err(IoError::parse(path, 1, "not a draws file header"));
    }
    let names: Vec<String> = cols[2..cols.len() - n_stats].iter().map(|s| s.to_string()).collect();
    let mut chain = Vec::new();
    let mut values = Vec::new();
    for (line, l) in lines {
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != cols.len() {
            return Err(IoError::parse(path, line, format!("{} fields, expected {}", f.len(), cols.len())));
        }
        let c = f[0].parse().map_err(|_| IoError::parse(path, line, format!("bad chain index {:?}", f[0])))?;
        let row = f[2..2 + names.len()]
            .iter()
            .map(|s| parse_f64(s).ok_or_else(|| IoError::parse(path, line, format!("bad number {s:?}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        chain.push(c);
        values.push(row);
    }
    Ok(DrawsTable { names, chain, values })
}

pub fn read_draws_csv(path: &Path) -> Result<DrawsTable, IoError> {
    parse_draws_csv(&read_string(path)?, path)
}

/// Compact binary copy of a draws matrix, tagged with a key so a stale
/// cache is never used.
pub struct DrawsCache;

const CACHE_MAGIC: &[u8; 8] = b"ODBDRAW1";

impl DrawsCache {
    pub fn encode(key: &str, rows: &[Vec<f64>]) -> Vec<u8> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut out = Vec::with_capacity(32 + key.len() + 8 * rows.len() * n_cols);
        out.extend_from_slice(CACHE_MAGIC);
        out.extend_from_slice(&(key.len() as u32).to_le_bytes());
        out.extend_from_slice(key.as_bytes());
        out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
        out.extend_from_slice(&(n_cols as u64).to_le_bytes());
        for v in rows.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Rows stored under `key`, or `None` for a different key or a
    /// malformed buffer.
    pub fn decode(bytes: &[u8], key: &str) -> Option<Vec<Vec<f64>>> {
        let mut pos = 0;
        let mut take = |n: usize| {
            let s = bytes.get(pos..pos + n)?;
            pos += n;
            Some(s)
        };
        if take(8)? != CACHE_MAGIC {
            return None;
        }
        let klen = u32::from_le_bytes(take(4)?.try_into().ok()?) as usize;
        if take(klen)? != key.as_bytes() {
            return None;
        }
        let n_rows = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
        let n_cols = u64::from_le_bytes(take(8)?.try_into().ok()?) as usize;
        let body = take(n_rows.checked_mul(n_cols)?.checked_mul(8)?)?;
        if pos != bytes.len() {
            return None;
        }
        let flat: Vec<f64> = body.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        Some(if n_cols == 0 { vec![Vec::new(); n_rows] } else { flat.chunks(n_cols).map(<[f64]>::to_vec).collect() })
    }

    pub fn write(path: &Path, key: &str, rows: &[Vec<f64>]) -> Result<(), IoError> {
        write_atomic(path, &Self::encode(key, rows))
    }

    pub fn read(path: &Path, key: &str) -> Option<Vec<Vec<f64>>> {
        Self::decode(&fs::read(path).ok()?, key)
    }
}

/// Writes `{stem}.csv` (`draw,obs_index,loglik`) and `{stem}_obs.csv`
/// (`obs_index,group,time,channel`), returning both file names.
pub fn write_loglik(dir: &Path, stem: &str, ll: &LogLikMatrix) -> Result<[String; 2], IoError> {
    let mut s = String::from("draw,obs_index,loglik\n");
    for (d, row) in ll.values.iter().enumerate() {
        for (i, v) in row.iter().enumerate() {
            let _ = writeln!(s, "{d},{i},{}", fmt_f64(*v));
        }
    }
    let mut o = String::from("obs_index,group,time,channel\n");
    for (i, l) in ll.labels.iter().enumerate() {
        let _ = writeln!(o, "{i},{},{},{}", l.group, fmt_f64(l.time), l.channel);
    }
    let names = [format!("{stem}.csv"), format!("{stem}_obs.csv")];
    write_atomic(&dir.join(&names[0]), s.as_bytes())?;
    write_atomic(&dir.join(&names[1]), o.as_bytes())?;
    Ok(names)
}

pub fn read_loglik(dir: &Path, stem: &str) -> Result<LogLikMatrix, IoError> {
    let obs_path = dir.join(format!("{stem}_obs.csv"));
    let text = read_string(&obs_path)?;
    let mut labels = Vec::new();
    for (n, l) in text.lines().enumerate().skip(1) {
        let line = n as u64 + 1;
        let f: Vec<&str> = l.split(',').collect();
        let bad = || IoError::parse(&obs_path, line, format!("malformed row {l:?}"));
        if f.len() != 4 || f[0].parse::<usize>().ok() != Some(labels.len()) {
            return Err(bad());
        }
        labels.push(ObsLabel {
            group: f[1].to_string(),
            time: parse_f64(f[2]).ok_or_else(bad)?,
            channel: f[3].parse().map_err(|_| bad())?,
        });
    }
    let ll_path = dir.join(format!("{stem}.csv"));
    let text = read_string(&ll_path)?;
    let n_obs = labels.len();
    let mut values: Vec<Vec<f64>> = Vec::new();
    for (n, l) in text.lines().enumerate().skip(1) {
        let line = n as u64 + 1;
        let bad = || IoError::parse(&ll_path, line, format!("malformed row {l:?}"));
        let f: Vec<&str> = l.split(',').collect();
        if f.len() != 3 {
            return Err(bad());
        }
        let d: usize = f[0].parse().map_err(|_| bad())?;
        let i: usize = f[1].parse().map_err(|_| bad())?;
        let v = parse_f64(f[2]).ok_or_else(bad)?;
        // rows arrive draw-major in index order
        if i >= n_obs || (i == 0 && d != values.len()) || (i > 0 && (d + 1 != values.len() || values[d].len() != i)) {
            return Err(bad());
        }
        if i == 0 {
            values.push(Vec::with_capacity(n_obs));
        }
        values[d].push(v);
    }
    Ok(LogLikMatrix::new(values, labels)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Provenance of a run directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub version: String,
    pub model: String,
    pub config_hash: String,
    pub seed: u64,
    pub wall_time_s: f64,
    pub artifacts: Vec<ArtifactEntry>,
    /// Hash of the manifest itself with this field empty.
    pub manifest_hash: String,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    /// Hashes the named files in `dir`.
    pub fn new(command: &str, cfg: &RunConfig, wall_time_s: f64, dir: &Path, files: &[String]) -> Result<Self, IoError> {
        let artifacts = files
            .iter()
            .map(|f| {
                let p = dir.join(f);
                let bytes = fs::read(&p).map_err(|e| IoError::io(&p, e))?;
                Ok(ArtifactEntry { file: f.clone(), sha256: sha256_hex(&bytes), bytes: bytes.len() as u64 })
            })
            .collect::<Result<_, IoError>>()?;
        let mut m = Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            model: cfg.model.kind.to_string(),
            config_hash: cfg.hash(),
            seed: cfg.sampler.seed,
            wall_time_s,
            artifacts,
            manifest_hash: String::new(),
        };
        m.manifest_hash = m.content_hash();
        Ok(m)
    }

    fn content_hash(&self) -> String {
        let mut m = self.clone();
        m.manifest_hash.clear();
        sha256_hex(serde_json::to_string(&m).expect("manifest serialises").as_bytes())
    }

    /// Checks every listed artifact in `dir` against its recorded hash.
    pub fn verify(&self, dir: &Path) -> Result<(), IoError> {
        for a in &self.artifacts {
            let p = dir.join(&a.file);
            let bytes = fs::read(&p).map_err(|e| IoError::io(&p, e))?;
            if sha256_hex(&bytes) != a.sha256 {
                return Err(IoError::Manifest(format!("{} does not match its recorded hash", p.display())));
            }
        }
        Ok(())
    }

    pub fn artifact(&self, file: &str) -> Option<&ArtifactEntry> {
        self.artifacts.iter().find(|a| a.file == file)
    }
}

pub fn write_manifest(dir: &Path, m: &Manifest) -> Result<(), IoError> {
    let mut s = serde_json::to_string_pretty(m).expect("manifest serialises");
    s.push('\n');
    write_atomic(&dir.join(MANIFEST_FILE), s.as_bytes())
}

/// Reads `manifest.json` from `dir` and checks its own hash.
pub fn read_manifest(dir: &Path) -> Result<Manifest, IoError> {
    let p = dir.join(MANIFEST_FILE);
    let m: Manifest =
        serde_json::from_str(&read_string(&p)?).map_err(|e| IoError::parse(&p, e.line() as u64, e.to_string()))?;
    if m.content_hash() != m.manifest_hash {
        return Err(IoError::Manifest(format!("{} has been modified", p.display())));
    }
    Ok(m)
}
