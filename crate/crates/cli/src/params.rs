//! Flag/config merging and run manifests.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Display;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use wgrowth::io::{read_kv, write_kv};
use wgrowth::{Error, Result};

pub const MANIFEST: &str = "manifest.txt";

/// Keys a manifest carries that are not parameters.
const META_KEYS: [&str; 4] = ["subcommand", "tool_version", "format_version", "wall_time_ms"];

/// Resolves parameters from flags first, then the `--config` file, and
/// records every resolved value for the manifest.
pub struct Params {
    file: BTreeMap<String, String>,
    used: BTreeSet<String>,
    resolved: BTreeMap<String, String>,
}

impl Params {
    pub fn new(config: Option<&Path>) -> Result<Self> {
        let file = match config {
            Some(p) => read_kv(BufReader::new(File::open(p).map_err(|e| with_path(e, p))?))?,
            None => BTreeMap::new(),
        };
        Ok(Self { file, used: BTreeSet::new(), resolved: BTreeMap::new() })
    }

    pub fn opt<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<Option<T>> {
        self.used.insert(key.to_string());
        let v = match flag {
            Some(v) => Some(v),
            None => match self.file.get(key) {
                Some(raw) => Some(
                    raw.parse()
                        .map_err(|_| Error::InvalidConfig(format!("cannot parse config value `{key}={raw}`")))?,
                ),
                None => None,
            },
        };
        if let Some(v) = &v {
            self.resolved.insert(key.to_string(), v.to_string());
        }
        Ok(v)
    }

    pub fn or<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>, default: T) -> Result<T> {
        match self.opt(key, flag)? {
            Some(v) => Ok(v),
            None => {
                self.resolved.insert(key.to_string(), default.to_string());
                Ok(default)
            }
        }
    }

    pub fn req<T: FromStr + Display>(&mut self, key: &str, flag: Option<T>) -> Result<T> {
        self.opt(key, flag)?.ok_or_else(|| Error::InvalidConfig(format!("missing required parameter --{key}")))
    }

    /// Rejects config keys no flag asked for.
    pub fn finish(&self) -> Result<()> {
        for k in self.file.keys() {
            if !self.used.contains(k) && !META_KEYS.contains(&k.as_str()) {
                return Err(Error::InvalidConfig(format!("unknown config key `{k}`")));
            }
        }
        Ok(())
    }

    /// Writes `manifest.txt` into `out`.
    pub fn write_manifest(&self, subcommand: &str, out: &Path, started: Instant) -> Result<PathBuf> {
        let mut kv = self.resolved.clone();
        kv.insert("subcommand".into(), subcommand.into());
        kv.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
        kv.insert("format_version".into(), wgrowth::FORMAT_VERSION.to_string());
        kv.insert("wall_time_ms".into(), started.elapsed().as_millis().to_string());
        let path = out.join(MANIFEST);
        let mut w = create(&path)?;
        write_kv(&mut w, &kv)?;
        w.flush()?;
        Ok(path)
    }
}

pub fn with_path(e: std::io::Error, p: &Path) -> Error {
    Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", p.display())))
}

pub fn open(p: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(p).map_err(|e| with_path(e, p))?))
}

pub fn create(p: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(p).map_err(|e| with_path(e, p))?))
}

pub fn ensure_dir(p: &Path) -> Result<()> {
    std::fs::create_dir_all(p).map_err(|e| with_path(e, p))
}

/// Comma list (`0,0.5,1`) or inclusive range `start:stop:step`.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidConfig(format!("bad grid `{spec}` (expected a,b,c or start:stop:step)"));
    let parts: Vec<&str> = spec.split(':').collect();
    let grid = match parts.as_slice() {
        [start, stop, step] => {
            let (start, stop, step): (f64, f64, f64) =
                (start.parse().map_err(|_| bad())?, stop.parse().map_err(|_| bad())?, step.parse().map_err(|_| bad())?);
            if !(step > 0.0) || stop < start {
                return Err(bad());
            }
            let n = ((stop - start) / step + 1e-9).floor() as usize;
            (0..=n).map(|i| start + i as f64 * step).collect()
        }
        [list] => list.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect::<Result<Vec<f64>>>()?,
        _ => return Err(bad()),
    };
    if grid.is_empty() {
        return Err(bad());
    }
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0,0.5,1").unwrap(), vec![0.0, 0.5, 1.0]);
        assert_eq!(parse_grid("0:100:25").unwrap(), vec![0.0, 25.0, 50.0, 75.0, 100.0]);
        assert_eq!(parse_grid("0:1:0.1").unwrap().len(), 11);
        assert!(parse_grid("1:0:1").is_err());
        assert!(parse_grid("a,b").is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("c.txt");
        std::fs::write(&cfg, "a=0.5\nseed=3\nsubcommand=generate\n").unwrap();
        let mut p = Params::new(Some(&cfg)).unwrap();
        assert_eq!(p.req::<f64>("a", Some(0.1)).unwrap(), 0.1);
        assert_eq!(p.req::<u64>("seed", None).unwrap(), 3);
        assert!(p.finish().is_ok());
        std::fs::write(&cfg, "bogus=1\n").unwrap();
        assert!(Params::new(Some(&cfg)).unwrap().finish().is_err());
    }
}
