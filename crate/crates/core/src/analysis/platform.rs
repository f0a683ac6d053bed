use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Peak single-precision compute and DRAM bandwidth of a machine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RooflinePlatform {
    pub name: String,
    pub peak_gflops: f64,
    pub mem_bw_gbs: f64,
}

impl RooflinePlatform {
    pub fn new(name: impl Into<String>, peak_gflops: f64, mem_bw_gbs: f64) -> Result<Self> {
        let name = name.into();
        for (what, v) in [("peak_gflops", peak_gflops), ("mem_bw_gbs", mem_bw_gbs)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "platform '{name}': {what} must be positive"
                )));
            }
        }
        Ok(RooflinePlatform {
            name,
            peak_gflops,
            mem_bw_gbs,
        })
    }
}

/// Shipped platforms: two CPU servers and two GPU servers.
pub fn platform_presets() -> Vec<RooflinePlatform> {
    [
        ("Bluesky", 1000.0, 256.0),
        ("Wingtip", 2000.0, 273.0),
        ("DGX-1P", 10600.0, 732.0),
        ("DGX-1V", 14900.0, 900.0),
    ]
    .into_iter()
    .map(|(n, p, b)| RooflinePlatform::new(n, p, b).expect("valid preset"))
    .collect()
}

/// Looks up a preset by case-insensitive name.
pub fn preset(name: &str) -> Result<RooflinePlatform> {
    platform_presets()
        .into_iter()
        .find(|p| p.name.eq_ignore_ascii_case(name.trim()))
        .ok_or_else(|| Error::Config(format!("unknown platform '{name}'")))
}

/// Parses `key = value` lines, one platform per blank-line separated block,
/// with keys `name`, `peak_gflops` and `mem_bw_gbs`. Lines starting with `#`
/// are comments.
pub fn parse_platforms(text: &str) -> Result<Vec<RooflinePlatform>> {
    fn finish(
        block: &mut Vec<(usize, String, String)>,
        out: &mut Vec<RooflinePlatform>,
    ) -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let first = block[0].0;
        let get = |key: &str| -> Result<&str> {
            block
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(_, _, v)| v.as_str())
                .ok_or_else(|| {
                    Error::Config(format!("platform block at line {first}: missing '{key}'"))
                })
        };
        let num = |key: &str| -> Result<f64> {
            let v = get(key)?;
            v.parse().map_err(|_| {
                Error::Config(format!("platform block at line {first}: bad {key} '{v}'"))
            })
        };
        out.push(RooflinePlatform::new(
            get("name")?,
            num("peak_gflops")?,
            num("mem_bw_gbs")?,
        )?);
        block.clear();
        Ok(())
    }

    let mut out = Vec::new();
    let mut block = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            finish(&mut block, &mut out)?;
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .or_else(|| line.split_once(':'))
            .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = k.trim().to_ascii_lowercase();
        if !matches!(key.as_str(), "name" | "peak_gflops" | "mem_bw_gbs") {
            return Err(Error::Config(format!(
                "line {}: unknown key '{key}'",
                i + 1
            )));
        }
        block.push((i + 1, key, v.trim().to_string()));
    }
    finish(&mut block, &mut out)?;
    Ok(out)
}

pub fn load_platforms(path: &Path) -> Result<Vec<RooflinePlatform>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_platforms(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_table() {
        let b = preset("BLUESKY").unwrap();
        assert_eq!((b.peak_gflops, b.mem_bw_gbs), (1000.0, 256.0));
        assert_eq!(preset("wingtip").unwrap().mem_bw_gbs, 273.0);
        assert_eq!(preset("dgx-1p").unwrap().peak_gflops, 10600.0);
        assert!(preset("laptop").is_err());
    }

    #[test]
    fn parse_blocks() {
        let text = "# my machines\nname = desk\npeak_gflops = 500\nmem_bw_gbs = 40.5\n\n\nname: lab\npeak_gflops: 1e3\nmem_bw_gbs: 100\n";
        let ps = parse_platforms(text).unwrap();
        assert_eq!(ps.len(), 2);
        assert_eq!(ps[0], RooflinePlatform::new("desk", 500.0, 40.5).unwrap());
        assert_eq!(ps[1].peak_gflops, 1000.0);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_platforms("name = a\npeak_gflops = 1\n").is_err());
        assert!(parse_platforms("name = a\npeak_gflops = x\nmem_bw_gbs = 1\n").is_err());
        assert!(parse_platforms("name = a\npeak_gflops = -1\nmem_bw_gbs = 1\n").is_err());
        assert!(parse_platforms("bogus line\n").is_err());
        assert!(parse_platforms("colour = red\n").is_err());
    }
}
